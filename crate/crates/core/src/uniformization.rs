//! Conformal deformation of the quasihyperbolic metric by the density
//! `ρ_ε = exp(−ε·k(·, x0))`, its boundary distance `d_ρ` and the
//! quasihyperbolic metric `k_ρ` of the deformed space.

use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::properties::PropertyReport;
use crate::quasihyperbolic::{qh_weight, GeodesicTree};
use crate::search::Search;
use serde::Serialize;

#[derive(Clone, Debug)]
pub struct DeformedMetric {
    pub eps: f64,
    /// `ρ_ε` per cell, 0 off the domain.
    pub rho: Vec<f64>,
    /// `k(x0, ·)` from the radial tree.
    pub k0: Vec<f64>,
    /// Deformed boundary distance, infinite off the domain.
    pub d_rho: Vec<f64>,
    pub root: usize,
}

/// Interior cells sharing an edge with the exterior.
pub fn boundary_adjacent(dom: &GridDomain) -> Vec<usize> {
    dom.interior_cells()
        .filter(|&c| crate::grid::neighbors4(c, dom.nx(), dom.ny()).any(|v| !dom.is_interior(v)))
        .collect()
}

pub fn build_deformation(dom: &GridDomain, tree: &GeodesicTree, eps: f64) -> Result<DeformedMetric> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Parameter(format!("deformation exponent {eps} must be positive")));
    }
    let rho: Vec<f64> = tree.k.iter().map(|&k| if k.is_finite() { (-eps * k).exp() } else { 0.0 }).collect();
    let mut m = DeformedMetric { eps, rho, k0: tree.k.clone(), d_rho: Vec::new(), root: tree.root };
    // Past a boundary-adjacent center the remaining quasihyperbolic length
    // to the boundary is unbounded, so the deformed remainder integrates
    // e^{-εt} from k(b) to infinity.
    let sources: Vec<(usize, f64)> = boundary_adjacent(dom).into_iter().map(|b| (b, m.rho[b] / eps)).collect();
    let mut s = Search::new(dom.len());
    s.run(dom, &sources, |a, b, k| m.weight(dom, a, b, k), |_| true, |_, _| false);
    m.d_rho = (0..dom.len()).map(|v| if dom.is_interior(v) { s.dist(v) } else { f64::INFINITY }).collect();
    Ok(m)
}

impl DeformedMetric {
    /// Deformed edge weight: quasihyperbolic weight times the mean density.
    #[inline]
    pub fn weight(&self, dom: &GridDomain, a: usize, b: usize, dir: usize) -> f64 {
        dom.qh_weight(a, b, dir) * 0.5 * (self.rho[a] + self.rho[b])
    }

    /// Edge weight of `k_ρ`: deformed weight times the harmonic mean of `1/d_ρ`.
    #[inline]
    pub fn k_rho_weight(&self, dom: &GridDomain, a: usize, b: usize, dir: usize) -> f64 {
        self.weight(dom, a, b, dir) * 2.0 / (self.d_rho[a] + self.d_rho[b])
    }

    /// `d_ε(x, y)` and a geodesic.
    pub fn distance(&self, dom: &GridDomain, search: &mut Search, x: usize, y: usize) -> (f64, Vec<usize>) {
        search.run(dom, &[(x, 0.0)], |a, b, k| self.weight(dom, a, b, k), |_| true, |v, _| v == y);
        (search.dist(y), search.path_to(y))
    }

    pub fn k_rho(&self, dom: &GridDomain, search: &mut Search, x: usize, y: usize) -> f64 {
        search.run(dom, &[(x, 0.0)], |a, b, k| self.k_rho_weight(dom, a, b, k), |_| true, |v, _| v == y);
        search.dist(y)
    }

    /// `d_ε(x0, ·)` for every cell.
    pub fn from_root(&self, dom: &GridDomain) -> Vec<f64> {
        let mut s = Search::new(dom.len());
        s.run(dom, &[(self.root, 0.0)], |a, b, k| self.weight(dom, a, b, k), |_| true, |_, _| false);
        (0..dom.len()).map(|v| s.dist(v)).collect()
    }

    /// Summary for JSON output.
    pub fn summary(&self, dom: &GridDomain) -> DeformationSummary {
        let vals: Vec<f64> = dom.interior_cells().map(|c| self.rho[c]).collect();
        let dr: Vec<f64> = dom.interior_cells().map(|c| self.d_rho[c]).collect();
        DeformationSummary {
            eps: self.eps,
            rho_min: vals.iter().copied().fold(f64::INFINITY, f64::min),
            rho_mean: vals.iter().sum::<f64>() / vals.len() as f64,
            d_rho_max: dr.iter().copied().fold(0.0, f64::max),
            radius: self.from_root(dom).into_iter().filter(|v| v.is_finite()).fold(0.0, f64::max),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DeformationSummary {
    pub eps: f64,
    pub rho_min: f64,
    pub rho_mean: f64,
    pub d_rho_max: f64,
    /// `max d_ε(x0, ·)`; the deformed diameter is at most twice this.
    pub radius: f64,
}

/// Uniformity of the deformed space along `d_ε` geodesics, with `d_ρ` in
/// place of the boundary distance. `A₁` compares the curve length with
/// `d_ε` and is 1 for geodesics; `A₂` is the doubly-John constant.
pub fn check_deformed_uniformity(dom: &GridDomain, m: &DeformedMetric, pairs: &[(usize, usize)], bound: Option<f64>, seed: u64) -> PropertyReport {
    let mut rep = PropertyReport::new("deformed_uniformity", dom.h(), seed);
    let mut s = Search::new(dom.len());
    let (mut a1, mut a2) = (0.0f64, 0.0f64);
    for (i, &(x, y)) in pairs.iter().enumerate() {
        if x == y {
            rep.skipped += 1;
            continue;
        }
        let (d, path) = m.distance(dom, &mut s, x, y);
        let mut prof = vec![0.0];
        for w in path.windows(2) {
            let k = dom.dir_between(w[0], w[1]).expect("path steps are edges");
            prof.push(prof.last().unwrap() + m.weight(dom, w[0], w[1], k));
        }
        let total = *prof.last().unwrap();
        let r1 = total / d;
        let r2 = path.iter().zip(&prof).map(|(&z, &l)| l.min(total - l) / m.d_rho[z]).fold(0.0, f64::max);
        a1 = a1.max(r1);
        a2 = a2.max(r2);
        rep.push(vec![dom.center(x), dom.center(y)], r1.max(r2), Some(i));
    }
    rep.parts.insert("A1".into(), a1);
    rep.parts.insert("A2".into(), a2);
    rep.parts.insert("radius".into(), m.from_root(dom).into_iter().filter(|v| v.is_finite()).fold(0.0, f64::max));
    rep.finish(bound)
}

/// `max(k_ρ/k, k/k_ρ)` per pair.
pub fn check_bilipschitz(dom: &GridDomain, m: &DeformedMetric, pairs: &[(usize, usize)], bound: Option<f64>, seed: u64) -> PropertyReport {
    let mut rep = PropertyReport::new("bilipschitz", dom.h(), seed);
    let mut s = Search::new(dom.len());
    for (i, &(x, y)) in pairs.iter().enumerate() {
        if x == y {
            rep.skipped += 1;
            continue;
        }
        let kr = m.k_rho(dom, &mut s, x, y);
        s.run(dom, &[(x, 0.0)], qh_weight(dom), |_| true, |v, _| v == y);
        let k = s.dist(y);
        rep.push(vec![dom.center(x), dom.center(y)], (kr / k).max(k / kr), Some(i));
    }
    rep.finish(bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::properties::sample_pairs;
    use crate::quasihyperbolic::radial_tree;

    fn disk(h: f64) -> (GridDomain, GeodesicTree) {
        let dom = gallery::disk(1.0, h).unwrap().domain;
        let tree = radial_tree(&dom);
        (dom, tree)
    }

    #[test]
    fn nonpositive_exponent_is_rejected() {
        let (dom, tree) = disk(1.0 / 16.0);
        for e in [0.0, -0.1, f64::NAN] {
            assert!(matches!(build_deformation(&dom, &tree, e), Err(Error::Parameter(_))));
        }
    }

    #[test]
    fn density_invariants() {
        let dom = gallery::slit_disk(1.0 / 32.0).unwrap().domain;
        let tree = radial_tree(&dom);
        let m = build_deformation(&dom, &tree, 0.2).unwrap();
        assert_eq!(m.rho[dom.x0()], 1.0);
        for a in dom.interior_cells() {
            assert!(m.rho[a] > 0.0 && m.rho[a] <= 1.0);
            for (b, k) in dom.edges(a) {
                assert!((m.rho[a].ln() - m.rho[b].ln()).abs() <= 0.2 * dom.qh_weight(a, b, k) * (1.0 + 1e-12));
                assert!(m.weight(&dom, a, b, k) <= dom.qh_weight(a, b, k));
            }
            if let Some(p) = tree.parent(a) {
                assert!(m.rho[a] <= m.rho[p]);
            }
        }
    }

    #[test]
    fn vanishing_exponent_recovers_k() {
        let (dom, tree) = disk(1.0 / 32.0);
        let m = build_deformation(&dom, &tree, 1e-5).unwrap();
        let mut s = Search::new(dom.len());
        for (x, y) in sample_pairs(&dom, 20, 4, 0.02) {
            if x == y {
                continue;
            }
            let (de, _) = m.distance(&dom, &mut s, x, y);
            s.run(&dom, &[(x, 0.0)], qh_weight(&dom), |_| true, |v, _| v == y);
            let k = s.dist(y);
            assert!((de / k - 1.0).abs() < 1e-3, "{de} vs {k}");
        }
    }

    #[test]
    fn radial_deformed_distance_matches_the_exponential_integral() {
        let eps = 0.3;
        let (dom, tree) = disk(1.0 / 64.0);
        let m = build_deformation(&dom, &tree, eps).unwrap();
        let from_root = m.from_root(&dom);
        for p in [[0.5, 0.1], [-0.9, 0.2], [0.0, -0.97]] {
            let v = dom.point(p).unwrap().cell;
            let path = tree.path_to(v);
            // Along the tree path `k` grows by exactly the edge weight, so the
            // deformed sum is the trapezoid rule for ∫ e^{-εt} dt; its error on
            // each edge is at most ε²w³/12.
            let (mut sum, mut err) = (0.0, 0.0);
            for w in path.windows(2) {
                let dir = dom.dir_between(w[0], w[1]).unwrap();
                let wk = dom.qh_weight(w[0], w[1], dir);
                sum += wk * 0.5 * ((-eps * tree.k[w[0]]).exp() + (-eps * tree.k[w[1]]).exp());
                err += eps * eps * wk.powi(3) / 12.0 * (-eps * tree.k[w[0]]).exp();
            }
            let exact = (1.0 - (-eps * tree.k[v]).exp()) / eps;
            assert!((sum - exact).abs() <= err + 1e-12, "{sum} {exact} {err}");
            assert!(from_root[v] <= sum + 1e-12);
            assert!(from_root[v] <= exact + err + 1e-12);
        }
    }

    #[test]
    fn deformed_boundary_distance_bounds() {
        let (dom, tree) = disk(1.0 / 32.0);
        let eps = 0.2;
        let m = build_deformation(&dom, &tree, eps).unwrap();
        for b in boundary_adjacent(&dom) {
            assert!(m.d_rho[b] <= m.rho[b] / eps + 1e-15);
        }
        // Along any edge the trapezoid sum of the convex density dominates
        // ∫ e^{-εt} dt over the change in k, so every route to the boundary
        // costs at least ρ(c)/ε; from the center the radial route costs 1/ε
        // up to the trapezoid excess.
        for c in dom.interior_cells() {
            assert!(m.d_rho[c] >= m.rho[c] / eps * (1.0 - 1e-12), "{c}");
        }
        let at_root = m.d_rho[dom.x0()] * eps;
        assert!((1.0 - 1e-12..1.0 + 1e-3).contains(&at_root), "{at_root}");
    }

    #[test]
    fn deformed_metric_is_symmetric_and_triangular() {
        let (dom, tree) = disk(1.0 / 32.0);
        let m = build_deformation(&dom, &tree, 0.2).unwrap();
        let mut s = Search::new(dom.len());
        let pts = crate::sampling::cells_of(&dom, &crate::sampling::world_points(&dom, 9, 8, 0.02));
        for t in pts.chunks(3) {
            let d = |a, b, s: &mut Search| m.distance(&dom, s, a, b).0;
            let (xy, yx) = (d(t[0], t[1], &mut s), d(t[1], t[0], &mut s));
            assert!((xy - yx).abs() <= 1e-12 * xy.max(1.0));
            assert!(xy <= d(t[0], t[2], &mut s) + d(t[2], t[1], &mut s) + 1e-12);
        }
    }

    #[test]
    fn reports_skip_degenerate_pairs() {
        let (dom, tree) = disk(1.0 / 32.0);
        let m = build_deformation(&dom, &tree, 0.2).unwrap();
        let x = dom.x0();
        let y = dom.point([0.5, 0.5]).unwrap().cell;
        let u = check_deformed_uniformity(&dom, &m, &[(x, x), (x, y)], None, 0);
        let b = check_bilipschitz(&dom, &m, &[(x, x), (x, y)], None, 0);
        assert_eq!((u.skipped, b.skipped), (1, 1));
        assert!((u.parts["A1"] - 1.0).abs() < 1e-12);
        assert!(b.constant >= 1.0 && b.constant.is_finite());
    }
}
