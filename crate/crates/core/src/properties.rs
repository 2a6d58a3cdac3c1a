//! Empirical checks of the geometric conditions used by the approximation
//! scheme: ball separation, length and diameter Gehring–Hayman (global and
//! local), uniformity, radial hyperbolicity and tail diameters of geodesics.
//!
//! Every checker returns a [`PropertyReport`] whose constant is the maximum
//! ratio over its records.

use crate::grid::{dist, DiameterDistance, GridDomain, Point};
use crate::quasihyperbolic::{qh_distance, Geodesic, GeodesicTree};
use crate::sampling;
use crate::search::{widest_search, Search};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct SampleRecord {
    pub points: Vec<[f64; 2]>,
    pub ratio: f64,
    /// Index of the witnessing geodesic in the caller's list.
    pub geodesic: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct PropertyReport {
    pub property: String,
    pub records: Vec<SampleRecord>,
    pub constant: f64,
    pub bound: Option<f64>,
    pub pass: bool,
    /// Samples excluded by a filter or degenerate.
    pub skipped: usize,
    /// Named sub-constants, e.g. the two uniformity constants.
    pub parts: BTreeMap<String, f64>,
    pub seed: u64,
    pub h: f64,
}

impl PropertyReport {
    pub fn new(property: &str, h: f64, seed: u64) -> Self {
        PropertyReport {
            property: property.into(),
            records: Vec::new(),
            constant: 0.0,
            bound: None,
            pass: true,
            skipped: 0,
            parts: BTreeMap::new(),
            seed,
            h,
        }
    }

    pub fn push(&mut self, points: Vec<[f64; 2]>, ratio: f64, geodesic: Option<usize>) {
        self.records.push(SampleRecord { points, ratio, geodesic, note: None });
    }

    /// Sets the constant to the maximum ratio and compares it to `bound`.
    pub fn finish(mut self, bound: Option<f64>) -> Self {
        self.constant = self.records.iter().map(|r| r.ratio).fold(0.0, f64::max);
        self.bound = bound;
        self.pass = !self.constant.is_nan() && bound.map_or(self.constant.is_finite(), |b| self.constant <= b);
        self
    }

    pub fn samples(&self) -> usize {
        self.records.len()
    }
}

/// Rounds up to two significant digits.
pub fn ceil_sig2(v: f64) -> f64 {
    if !(v > 0.0) || !v.is_finite() {
        return v;
    }
    let p = v.log10().floor() as i32 - 1;
    let scale = |m: f64| if p >= 0 { m * 10f64.powi(p) } else { m / 10f64.powi(-p) };
    let unscaled = if p >= 0 { v / 10f64.powi(p) } else { v * 10f64.powi(-p) };
    // Values already at two digits stay put despite representation error.
    let m = if (unscaled - unscaled.round()).abs() < 1e-9 { unscaled.round() } else { unscaled.ceil() };
    scale(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GhMode {
    Length,
    Diameter,
}

/// A sampled pair with its geodesic and intrinsic distances.
#[derive(Clone, Debug)]
pub struct PairSample {
    pub x: usize,
    pub y: usize,
    pub k: f64,
    pub geodesic: Geodesic,
    pub lambda: f64,
    pub delta: Option<DiameterDistance>,
}

impl PairSample {
    pub fn min_d(&self, dom: &GridDomain) -> f64 {
        dom.d(self.x).min(dom.d(self.y))
    }

    pub fn points(&self, dom: &GridDomain) -> Vec<[f64; 2]> {
        vec![dom.center(self.x), dom.center(self.y)]
    }
}

/// `n` pairs of interior cells with boundary distance ≥ `margin`, drawn in
/// world coordinates.
pub fn sample_pairs(dom: &GridDomain, n: usize, seed: u64, margin: f64) -> Vec<(usize, usize)> {
    let pts = sampling::world_points(dom, 2 * n, seed, margin);
    let cells = sampling::cells_of(dom, &pts);
    cells.chunks(2).map(|c| (c[0], c[1])).collect()
}

/// Geodesics and λ for every pair; δ too when `with_delta`.
pub fn pair_data(dom: &GridDomain, pairs: &[(usize, usize)], with_delta: bool) -> Vec<PairSample> {
    pairs
        .iter()
        .map(|&(x, y)| {
            let (px, py) = (Point::center(x), Point::center(y));
            let (k, geodesic) = qh_distance(dom, &px, &py).expect("sampled cells are interior");
            let lambda = dom.intrinsic_distance(&px, &py).expect("sampled cells are interior");
            let delta = with_delta.then(|| dom.intrinsic_diameter_distance(&px, &py).expect("sampled cells are interior"));
            PairSample { x, y, k, geodesic, lambda, delta }
        })
        .collect()
}

/// Smallest `c` such that `B_Ω(z, c·d(z))` separates every pair of geodesic
/// nodes on opposite sides of position `t`, or 0 when `t` is an endpoint.
///
/// With `λ_z` the intrinsic distance from `z`, the ball of radius `r` leaves
/// some pair connected iff a 4-connected path from an earlier node to a later
/// node keeps `λ_z ≥ r`; the largest such `r` is a widest-path value.
pub fn separation_threshold(dom: &GridDomain, search: &mut Search, cells: &[usize], t: usize) -> f64 {
    if t == 0 || t + 1 >= cells.len() {
        return 0.0;
    }
    let z = cells[t];
    search.run(dom, &[(z, 0.0)], |_, _, k| dom.step_len(k), |_| true, |_, _| false);
    let lz: Vec<f64> = (0..dom.len()).map(|v| search.dist(v)).collect();
    let w = widest_search(dom, &cells[..t], |v| lz[v]);
    let r = cells[t + 1..].iter().map(|&b| w[b]).fold(0.0, f64::max);
    r / dom.d(z)
}

/// Ball separation on each geodesic, probing `per_geodesic` evenly spaced
/// interior nodes. The constant is rounded up to two significant digits and
/// is at least 1.
pub fn check_ball_separation(dom: &GridDomain, geodesics: &[Geodesic], per_geodesic: usize, c: f64, seed: u64) -> PropertyReport {
    let mut rep = PropertyReport::new("ball_separation", dom.h(), seed);
    let mut search = Search::new(dom.len());
    for (gi, g) in geodesics.iter().enumerate() {
        let cells = g.cells();
        if cells.len() < 3 {
            rep.skipped += 1;
            continue;
        }
        let n = cells.len();
        let mut positions: Vec<usize> = (1..=per_geodesic).map(|i| i * (n - 1) / (per_geodesic + 1)).filter(|&t| t > 0 && t + 1 < n).collect();
        positions.dedup();
        for t in positions {
            let ct = separation_threshold(dom, &mut search, cells, t);
            rep.push(vec![dom.center(cells[0]), dom.center(cells[t]), dom.center(cells[n - 1])], ceil_sig2(ct.max(1.0)), Some(gi));
        }
    }
    rep.finish(Some(c))
}

fn gh_ratio(s: &PairSample, mode: GhMode) -> Option<f64> {
    if s.x == s.y {
        return None;
    }
    match mode {
        GhMode::Length => Some(s.geodesic.path.length / s.lambda),
        GhMode::Diameter => s.delta.as_ref().map(|d| s.geodesic.path.diameter / d.value),
    }
}

/// Global Gehring–Hayman ratios `l(Γ)/λ` or `diam(Γ)/δ`.
pub fn check_gehring_hayman(dom: &GridDomain, samples: &[PairSample], mode: GhMode, bound: Option<f64>, seed: u64) -> PropertyReport {
    let name = match mode {
        GhMode::Length => "gehring_hayman_length",
        GhMode::Diameter => "gehring_hayman_diameter",
    };
    let mut rep = PropertyReport::new(name, dom.h(), seed);
    for (i, s) in samples.iter().enumerate() {
        match gh_ratio(s, mode) {
            Some(r) => rep.push(s.points(dom), r, Some(i)),
            None => rep.skipped += 1,
        }
    }
    rep.finish(bound)
}

/// Local Gehring–Hayman results under the two pair filters.
#[derive(Clone, Debug, Serialize)]
pub struct LocalGhReport {
    /// Pairs with `Λ ≤ R` (length) or `Δ ≤ R` (diameter).
    pub bounded: PropertyReport,
    /// Pairs with comparable boundary distances and `λ` or `δ` at most
    /// `R·(d(x)∧d(y))`.
    pub comparable: PropertyReport,
}

pub fn check_local_gehring_hayman(dom: &GridDomain, samples: &[PairSample], c: f64, r: f64, mode: GhMode, seed: u64) -> LocalGhReport {
    let tag = match mode {
        GhMode::Length => "length",
        GhMode::Diameter => "diameter",
    };
    let mut bounded = PropertyReport::new(&format!("local_gh_{tag}"), dom.h(), seed);
    let mut comparable = PropertyReport::new(&format!("local_gh_{tag}_comparable"), dom.h(), seed);
    for (i, s) in samples.iter().enumerate() {
        let Some(ratio) = gh_ratio(s, mode) else {
            bounded.skipped += 1;
            comparable.skipped += 1;
            continue;
        };
        let m = s.min_d(dom);
        let dist_value = match mode {
            GhMode::Length => s.lambda,
            GhMode::Diameter => s.delta.as_ref().unwrap().value,
        };
        if (dist_value / m).ln_1p() <= r {
            bounded.push(s.points(dom), ratio, Some(i));
        } else {
            bounded.skipped += 1;
        }
        let (dx, dy) = (dom.d(s.x), dom.d(s.y));
        if dx <= r * dy && dy <= r * dx && dist_value <= r * m {
            comparable.push(s.points(dom), ratio, Some(i));
        } else {
            comparable.skipped += 1;
        }
    }
    LocalGhReport { bounded: bounded.finish(Some(c)), comparable: comparable.finish(Some(c)) }
}

/// Uniformity constants of the geodesics as candidate curves:
/// `A₁ = max l(Γ)/|x−y|` and `A₂ = max_z (l(Γ(x,z)) ∧ l(Γ(z,y)))/d(z)`.
pub fn check_uniformity(dom: &GridDomain, samples: &[PairSample], bound: Option<f64>, seed: u64) -> PropertyReport {
    let mut rep = PropertyReport::new("uniformity", dom.h(), seed);
    let (mut a1, mut a2) = (0.0f64, 0.0f64);
    for (i, s) in samples.iter().enumerate() {
        if s.x == s.y {
            rep.skipped += 1;
            continue;
        }
        let r1 = s.geodesic.path.length / dist(dom.center(s.x), dom.center(s.y));
        let r2 = doubly_john(dom, &s.geodesic);
        a1 = a1.max(r1);
        a2 = a2.max(r2);
        rep.push(s.points(dom), r1.max(r2), Some(i));
    }
    rep.parts.insert("A1".into(), a1);
    rep.parts.insert("A2".into(), a2);
    rep.finish(bound)
}

/// `max_z (l(Γ(x,z)) ∧ l(Γ(z,y)))/d(z)` over the nodes of `g`.
pub fn doubly_john(dom: &GridDomain, g: &Geodesic) -> f64 {
    let prof = g.length_profile(dom);
    let total = *prof.last().unwrap();
    g.cells().iter().zip(&prof).map(|(&z, &l)| l.min(total - l) / dom.d(z)).fold(0.0, f64::max)
}

/// Radial hyperbolicity results: ball separation of radial geodesics, the
/// diameter property along each one, and the union requirement for pairs
/// of radial geodesics that share a node besides the center.
#[derive(Clone, Debug, Serialize)]
pub struct RadialReport {
    pub separation: PropertyReport,
    pub radial: PropertyReport,
    pub union: PropertyReport,
    pub pass: bool,
}

/// Deepest common node of two tree paths other than the root.
fn shared_non_root(tree: &GeodesicTree, a: usize, b: usize) -> Option<usize> {
    let pa = tree.path_to(a);
    let pb = tree.path_to(b);
    let mut last = None;
    for (u, v) in pa.iter().zip(&pb).skip(1) {
        if u != v {
            break;
        }
        last = Some(*u);
    }
    last
}

fn evenly(cells: &[usize], n: usize) -> Vec<usize> {
    let m = cells.len();
    let mut out: Vec<usize> = (0..n).map(|i| cells[if n == 1 { m - 1 } else { i * (m - 1) / (n - 1) }]).collect();
    out.dedup();
    out
}

pub struct RadialParams {
    pub c0: f64,
    pub c: f64,
    pub r: f64,
    /// Radial geodesics probed.
    pub samples: usize,
    /// Nodes per geodesic used for separation and pair sampling.
    pub nodes: usize,
    pub margin: f64,
    pub seed: u64,
}

pub fn check_radially_hyperbolic(dom: &GridDomain, tree: &GeodesicTree, p: &RadialParams) -> RadialReport {
    let pts = sampling::world_points(dom, p.samples, p.seed, p.margin);
    let ends: Vec<usize> = sampling::cells_of(dom, &pts).into_iter().filter(|&c| c != tree.root).collect();
    let geos: Vec<Geodesic> = ends.iter().map(|&e| tree.geodesic(dom, e)).collect();
    let separation = check_ball_separation(dom, &geos, p.nodes, p.c0, p.seed);

    let delta_filter = |a: usize, b: usize, delta: f64| (delta / dom.d(a).min(dom.d(b))).ln_1p() <= p.r;
    let mut radial = PropertyReport::new("radial_diameter_gh", dom.h(), p.seed);
    for (gi, g) in geos.iter().enumerate() {
        let cells = g.cells();
        let picks: Vec<usize> = (0..p.nodes.max(2)).map(|i| i * (cells.len() - 1) / (p.nodes.max(2) - 1)).collect();
        let mut worst: Option<f64> = None;
        for (ia, &a) in picks.iter().enumerate() {
            for &b in &picks[ia + 1..] {
                if cells[a] == cells[b] {
                    continue;
                }
                let (pa, pb) = (Point::center(cells[a]), Point::center(cells[b]));
                let delta = dom.intrinsic_diameter_distance(&pa, &pb).expect("tree nodes are interior").value;
                if !delta_filter(cells[a], cells[b], delta) {
                    continue;
                }
                // A subpath of a shortest path is itself shortest.
                let ratio = g.sub(dom, a, b).path.diameter / delta;
                worst = Some(worst.map_or(ratio, |w: f64| w.max(ratio)));
            }
        }
        match worst {
            Some(r) => radial.push(vec![dom.center(tree.root), dom.center(ends[gi])], r, Some(gi)),
            None => radial.skipped += 1,
        }
    }
    let radial = radial.finish(Some(p.c));

    let mut union = PropertyReport::new("radial_union_gh", dom.h(), p.seed);
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            if shared_non_root(tree, ends[i], ends[j]).is_none() {
                union.skipped += 1;
                continue;
            }
            let mut nodes = evenly(geos[i].cells(), p.nodes);
            nodes.extend(evenly(geos[j].cells(), p.nodes));
            nodes.sort_unstable();
            nodes.dedup();
            let mut pairs = Vec::new();
            for (ia, &a) in nodes.iter().enumerate() {
                for &b in &nodes[ia + 1..] {
                    pairs.push((a, b));
                }
            }
            let data = pair_data(dom, &pairs, true);
            let (mut len_worst, mut dia_worst) = (0.0f64, 0.0f64);
            for s in &data {
                let m = s.min_d(dom);
                if (s.lambda / m).ln_1p() <= p.r {
                    len_worst = len_worst.max(s.geodesic.path.length / s.lambda);
                }
                let dv = s.delta.as_ref().unwrap().value;
                if (dv / m).ln_1p() <= p.r {
                    dia_worst = dia_worst.max(s.geodesic.path.diameter / dv);
                }
            }
            let ratio = len_worst.min(dia_worst);
            let note = if len_worst <= p.c {
                "length"
            } else if dia_worst <= p.c {
                "diameter"
            } else {
                "neither"
            };
            union.records.push(SampleRecord {
                points: vec![dom.center(ends[i]), dom.center(ends[j])],
                ratio,
                geodesic: Some(i),
                note: Some(note.into()),
            });
        }
    }
    let union = union.finish(Some(p.c));
    let pass = separation.pass && radial.pass && union.pass;
    RadialReport { separation, radial, union, pass }
}

/// Largest quasihyperbolic length of a run of geodesic nodes lying outside
/// the open euclidean ball `B(center, r)`.
pub fn tail_diameter(dom: &GridDomain, g: &Geodesic, k_prof: &[f64], center: [f64; 2], r: f64) -> f64 {
    let mut best = 0.0f64;
    let mut start: Option<usize> = None;
    let cells = g.cells();
    for (i, &c) in cells.iter().enumerate() {
        let outside = dist(dom.center(c), center) >= r;
        match (outside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                best = best.max(k_prof[i - 1] - k_prof[s]);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        best = best.max(k_prof[cells.len() - 1] - k_prof[s]);
    }
    best
}

/// Smallest `M` (among the node distances from `x`, scaled by `δ`) for which
/// every run of `Γ` outside `B(x, M·δ)` has quasihyperbolic length at most
/// `threshold`.
pub fn minimal_tail_m(dom: &GridDomain, s: &PairSample, threshold: f64) -> f64 {
    let delta = s.delta.as_ref().expect("tail check needs δ").value;
    let g = &s.geodesic;
    let prof = g.k_profile(dom);
    let cx = dom.center(s.x);
    if tail_diameter(dom, g, &prof, cx, 0.0) <= threshold {
        return 0.0;
    }
    let mut radii: Vec<f64> = g.cells().iter().map(|&c| dist(dom.center(c), cx)).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    // Passing is monotone in the radius; the largest radius leaves at most
    // the farthest nodes outside.
    let (mut lo, mut hi) = (0usize, radii.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if tail_diameter(dom, g, &prof, cx, radii[mid]) <= threshold {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    match radii.get(lo) {
        Some(&r) => r / delta,
        None => radii.last().map_or(0.0, |r| r * (1.0 + 1e-12) / delta),
    }
}

/// Tail-diameter check: per pair, the minimal `M` at the given threshold.
pub fn check_geodesic_tail_diameter(dom: &GridDomain, samples: &[PairSample], threshold: f64, m_bound: Option<f64>, seed: u64) -> PropertyReport {
    let mut rep = PropertyReport::new("geodesic_tail_diameter", dom.h(), seed);
    for (i, s) in samples.iter().enumerate() {
        if s.x == s.y || s.delta.is_none() {
            rep.skipped += 1;
            continue;
        }
        rep.push(s.points(dom), minimal_tail_m(dom, s, threshold), Some(i));
    }
    rep.parts.insert("threshold".into(), threshold);
    rep.finish(m_bound)
}

/// Whether some 4-connected chain of cells from `x` to `y` keeps `d ≥ floor`.
pub fn has_witness_curve(dom: &GridDomain, x: usize, y: usize, floor: f64) -> bool {
    widest_search(dom, &[x], |v| dom.d(v))[y] >= floor
}

fn lemma_hypotheses(dom: &GridDomain, s: &PairSample, r: f64, m: f64, dist_value: f64) -> bool {
    let (dx, dy) = (dom.d(s.x), dom.d(s.y));
    let md = dx.min(dy);
    s.x != s.y && dx <= r * dy && dy <= r * dx && dist_value <= r * md && has_witness_curve(dom, s.x, s.y, md / m)
}

/// `k(x,y)` over pairs with comparable boundary distances, `δ ≤ R(d∧d)` and
/// a witness curve staying at distance `(d∧d)/M` from the boundary.
pub fn check_local_dia_implies_len(dom: &GridDomain, samples: &[PairSample], r: f64, m: f64, seed: u64) -> PropertyReport {
    let mut rep = PropertyReport::new("bounded_k_under_diameter_gh", dom.h(), seed);
    for (i, s) in samples.iter().enumerate() {
        match &s.delta {
            Some(d) if lemma_hypotheses(dom, s, r, m, d.value) => rep.push(s.points(dom), s.k, Some(i)),
            _ => rep.skipped += 1,
        }
    }
    rep.finish(None)
}

/// `l(Γ)/λ` over pairs with comparable boundary distances, `λ ≤ R(d∧d)` and
/// a witness curve.
pub fn check_local_dia_implies_len_2(dom: &GridDomain, samples: &[PairSample], r: f64, m: f64, seed: u64) -> PropertyReport {
    let mut rep = PropertyReport::new("length_gh_under_diameter_gh", dom.h(), seed);
    for (i, s) in samples.iter().enumerate() {
        if lemma_hypotheses(dom, s, r, m, s.lambda) {
            rep.push(s.points(dom), s.geodesic.path.length / s.lambda, Some(i));
        } else {
            rep.skipped += 1;
        }
    }
    rep.finish(None)
}

/// At the length midpoint `z` of each geodesic with `δ ≥ d(z)/2`, the ratio
/// `l(Γ(x,z)) / (3A·δ)`; it stays at most 1 when the geodesics are
/// `A`-doubly-John.
pub fn check_john_midpoint(dom: &GridDomain, samples: &[PairSample], a: f64, tol: f64, seed: u64) -> PropertyReport {
    let mut rep = PropertyReport::new("doubly_john_midpoint", dom.h(), seed);
    for (i, s) in samples.iter().enumerate() {
        let Some(d) = &s.delta else {
            rep.skipped += 1;
            continue;
        };
        if s.x == s.y {
            rep.skipped += 1;
            continue;
        }
        let prof = s.geodesic.length_profile(dom);
        let half = 0.5 * prof.last().unwrap();
        let t = prof.partition_point(|&l| l < half).min(prof.len() - 1);
        let z = s.geodesic.cells()[t];
        if d.value < 0.5 * dom.d(z) {
            rep.skipped += 1;
            continue;
        }
        rep.push(s.points(dom), prof[t] / (3.0 * a * d.value), Some(i));
    }
    rep.finish(Some(1.0 + tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellset::CellSet;
    use crate::gallery;

    #[test]
    fn ceil_sig2_rounds_up() {
        assert_eq!(ceil_sig2(1.234), 1.3);
        assert_eq!(ceil_sig2(1.2), 1.2);
        assert_eq!(ceil_sig2(0.0123), 0.013);
        assert_eq!(ceil_sig2(47.01), 48.0);
    }

    /// Whether the ball of radius `c·d(z)` separates the two sides, by
    /// component labeling of the complement.
    fn separates(dom: &GridDomain, cells: &[usize], t: usize, c: f64) -> bool {
        let z = cells[t];
        let mut s = Search::new(dom.len());
        let r = c * dom.d(z);
        s.run(dom, &[(z, 0.0)], |_, _, k| dom.step_len(k), |_| true, |_, _| false);
        let ball: Vec<usize> = dom.interior_cells().filter(|&v| s.dist(v) < r).collect();
        let lab = dom.components(&CellSet::from_cells(dom.nx(), ball));
        let left: Vec<u32> = cells[..t].iter().filter_map(|&a| lab.label(a)).collect();
        cells[t + 1..].iter().filter_map(|&b| lab.label(b)).all(|l| !left.contains(&l))
    }

    fn bisect(dom: &GridDomain, cells: &[usize], t: usize) -> f64 {
        let (mut lo, mut hi) = (0.0, 64.0);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if separates(dom, cells, t, mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    #[test]
    fn separation_threshold_matches_component_bisection() {
        for (name, a, b) in [("disk", [-0.6, 0.1], [0.6, -0.2]), ("slit_disk", [0.5, 0.1], [0.5, -0.1]), ("dumbbell", [0.2, 0.2], [0.8, 0.3])] {
            let dom = gallery::by_name(name, 1.0 / 32.0).unwrap().domain;
            let (_, g) = qh_distance(&dom, &dom.point(a).unwrap(), &dom.point(b).unwrap()).unwrap();
            let mut s = Search::new(dom.len());
            let cells = g.cells();
            for t in [cells.len() / 3, cells.len() / 2] {
                let fast = separation_threshold(&dom, &mut s, cells, t);
                let oracle = bisect(&dom, cells, t);
                assert!((fast - oracle).abs() <= 1e-9 * oracle.max(1.0), "{name} t={t}: {fast} vs {oracle}");
            }
        }
    }

    #[test]
    fn convex_midpoint_separates_at_moderate_c() {
        let dom = gallery::disk(1.0, 1.0 / 64.0).unwrap().domain;
        let (_, g) = qh_distance(&dom, &dom.point([-0.7, 0.0]).unwrap(), &dom.point([0.7, 0.0]).unwrap()).unwrap();
        let rep = check_ball_separation(&dom, &[g], 1, 10.0, 0);
        assert!(rep.pass);
        // The ball must reach the rim on both sides of the diameter.
        assert!(rep.constant >= 1.0 && rep.constant <= 1.1, "{}", rep.constant);
    }

    #[test]
    fn points_inside_the_ball_do_not_count() {
        // A geodesic of three nodes: both end nodes lie within one step of z.
        let dom = gallery::square(1.0, 1.0 / 32.0).unwrap().domain;
        let z = dom.point([0.5, 0.5]).unwrap().cell;
        let cells = vec![z - 1, z, z + 1];
        let mut s = Search::new(dom.len());
        let c = separation_threshold(&dom, &mut s, &cells, 1);
        assert!(c * dom.d(z) >= dom.h());
        assert!(separates(&dom, &cells, 1, c * 1.0001));
        assert!(!separates(&dom, &cells, 1, c * 0.9999));
    }

    #[test]
    fn gh_ratios_are_at_least_one_and_degenerate_pairs_skip() {
        let dom = gallery::slit_disk(1.0 / 32.0).unwrap().domain;
        let mut pairs = sample_pairs(&dom, 12, 3, 0.05);
        pairs.push((pairs[0].0, pairs[0].0));
        let data = pair_data(&dom, &pairs, true);
        let len = check_gehring_hayman(&dom, &data, GhMode::Length, None, 3);
        let dia = check_gehring_hayman(&dom, &data, GhMode::Diameter, None, 3);
        assert_eq!((len.skipped, dia.skipped), (1, 1));
        for s in &data[..12] {
            assert!(s.geodesic.path.diameter <= s.geodesic.path.length + 1e-12);
            let d = s.delta.as_ref().unwrap();
            assert!(d.value <= s.lambda + 1e-12);
        }
        assert!(len.records.iter().all(|r| r.ratio >= 1.0 - 1e-12));
        assert!(dia.records.iter().all(|r| r.ratio >= 0.97), "{:?}", dia.records.iter().map(|r| r.ratio).collect::<Vec<_>>());
        assert_eq!(len.constant, len.records.iter().map(|r| r.ratio).fold(0.0, f64::max));
    }

    #[test]
    fn local_filters_bracket_the_global_check() {
        let dom = gallery::disk(1.0, 1.0 / 32.0).unwrap().domain;
        let data = pair_data(&dom, &sample_pairs(&dom, 20, 9, 0.03), false);
        let global = check_gehring_hayman(&dom, &data, GhMode::Length, None, 9);
        let none = check_local_gehring_hayman(&dom, &data, 1.0, 0.0, GhMode::Length, 9);
        assert!(none.bounded.records.is_empty() && none.bounded.pass);
        let all = check_local_gehring_hayman(&dom, &data, 100.0, f64::INFINITY, GhMode::Length, 9);
        assert_eq!(all.bounded.constant, global.constant);
        assert_eq!(all.bounded.samples(), global.samples());
        let r3 = check_local_gehring_hayman(&dom, &data, 100.0, 3.0, GhMode::Length, 9);
        assert!(r3.bounded.constant <= global.constant && r3.comparable.constant <= global.constant);
    }

    #[test]
    fn midpoint_of_straight_geodesic_witnesses_a2() {
        let dom = gallery::square(1.0, 1.0 / 32.0).unwrap().domain;
        let data = pair_data(&dom, &[(dom.point([0.2, 0.5]).unwrap().cell, dom.point([0.8, 0.5]).unwrap().cell)], false);
        let rep = check_uniformity(&dom, &data, None, 0);
        let g = &data[0].geodesic;
        let prof = g.length_profile(&dom);
        let expect = g.cells().iter().zip(&prof).map(|(&z, &l)| l.min(prof.last().unwrap() - l) / dom.d(z)).fold(0.0, f64::max);
        assert_eq!(rep.parts["A2"], expect);
        // Straight horizontal path: length equals chord.
        assert!((rep.parts["A1"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comb_uniformity_grows_with_tooth_count() {
        let mut a1 = Vec::new();
        for teeth in [2, 4, 8] {
            let f = gallery::comb(teeth, 1.0 / 64.0).unwrap();
            let cells = sampling::cells_of(&f.domain, &f.landmarks);
            let pairs: Vec<(usize, usize)> = cells.windows(2).map(|w| (w[0], w[1])).collect();
            let data = pair_data(&f.domain, &pairs, false);
            a1.push(check_uniformity(&f.domain, &data, None, 0).parts["A1"]);
        }
        assert!(a1[0] < a1[1] && a1[1] < a1[2], "{a1:?}");
    }

    #[test]
    fn tail_check_is_vacuous_inside_the_ball() {
        let dom = gallery::disk(1.0, 1.0 / 32.0).unwrap().domain;
        let data = pair_data(&dom, &sample_pairs(&dom, 6, 2, 0.05), true);
        for s in &data {
            let g = &s.geodesic;
            let prof = g.k_profile(&dom);
            let far = g.cells().iter().map(|&c| dist(dom.center(c), dom.center(s.x))).fold(0.0, f64::max);
            assert_eq!(tail_diameter(&dom, g, &prof, dom.center(s.x), far * 1.001), 0.0);
            let m = minimal_tail_m(&dom, s, std::f64::consts::LN_2);
            let d = s.delta.as_ref().unwrap().value;
            assert!(tail_diameter(&dom, g, &prof, dom.center(s.x), m * d) <= std::f64::consts::LN_2);
        }
    }

    #[test]
    fn radial_union_is_vacuous_without_shared_nodes() {
        let dom = gallery::disk(1.0, 1.0 / 32.0).unwrap().domain;
        let tree = crate::quasihyperbolic::radial_tree(&dom);
        let a = dom.point([0.6, 0.0]).unwrap().cell;
        let b = dom.point([-0.6, 0.0]).unwrap().cell;
        assert!(shared_non_root(&tree, a, b).is_none());
        let c = dom.point([0.7, 0.02]).unwrap().cell;
        assert!(shared_non_root(&tree, a, c).is_some());
    }

    #[test]
    fn small_r_leaves_only_separation() {
        let dom = gallery::disk(1.0, 1.0 / 32.0).unwrap().domain;
        let tree = crate::quasihyperbolic::radial_tree(&dom);
        let p = RadialParams { c0: 10.0, c: 1.0, r: 0.0, samples: 4, nodes: 3, margin: 0.05, seed: 5 };
        let rep = check_radially_hyperbolic(&dom, &tree, &p);
        assert!(rep.radial.records.is_empty());
        assert!(rep.union.records.iter().all(|r| r.ratio == 0.0));
        assert!(rep.separation.samples() > 0 && rep.pass);
    }
}
