//! Quasihyperbolic distance on the cell graph, its geodesics, the radial
//! geodesic tree and estimates of the thin-triangles constant.
//!
//! Edge weights use the trapezoid rule for `∫ ds / d`: a move of euclidean
//! length `s` between cells `a` and `b` costs `s·(1/d(a) + 1/d(b))/2`.

use crate::error::{Error, Result};
use crate::grid::{GridDomain, Path, Point};
use crate::sampling;
use crate::search::Search;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub struct Geodesic {
    pub path: Path,
    pub k_length: f64,
}

impl Geodesic {
    pub fn cells(&self) -> &[usize] {
        &self.path.cells
    }

    /// Cumulative quasihyperbolic length at each node.
    pub fn k_profile(&self, dom: &GridDomain) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.path.cells.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in self.path.cells.windows(2) {
            let k = dom.dir_between(w[0], w[1]).expect("geodesic steps are graph edges");
            acc += dom.qh_weight(w[0], w[1], k);
            out.push(acc);
        }
        out
    }

    /// Cumulative euclidean length at each node.
    pub fn length_profile(&self, dom: &GridDomain) -> Vec<f64> {
        let pts = self.path.points(dom);
        let mut out = vec![0.0];
        for w in pts.windows(2) {
            out.push(out.last().unwrap() + crate::grid::dist(w[0], w[1]));
        }
        out
    }

    pub fn from_cells(dom: &GridDomain, cells: Vec<usize>) -> Self {
        let path = Path::from_cells(dom, cells);
        let mut g = Geodesic { path, k_length: 0.0 };
        g.k_length = *g.k_profile(dom).last().unwrap();
        g
    }

    /// The sub-geodesic between node positions `a ≤ b`.
    pub fn sub(&self, dom: &GridDomain, a: usize, b: usize) -> Geodesic {
        Geodesic::from_cells(dom, self.path.cells[a..=b].to_vec())
    }
}

/// Weight closure for quasihyperbolic searches.
pub fn qh_weight(dom: &GridDomain) -> impl Fn(usize, usize, usize) -> f64 + '_ {
    move |a, b, k| dom.qh_weight(a, b, k)
}

/// Quasihyperbolic distance between two cell centers with a geodesic.
pub fn qh_distance(dom: &GridDomain, x: &Point, y: &Point) -> Result<(f64, Geodesic)> {
    for p in [x, y] {
        if p.cell >= dom.len() || !dom.is_interior(p.cell) {
            return Err(Error::Domain(format!("cell {} is not interior", p.cell)));
        }
    }
    let mut s = Search::new(dom.len());
    s.run(dom, &[(x.cell, 0.0)], qh_weight(dom), |_| true, |v, _| v == y.cell);
    if !s.reached(y.cell) {
        return Err(Error::Unreachable(x.cell, y.cell));
    }
    let g = Geodesic::from_cells(dom, s.path_to(y.cell));
    Ok((s.dist(y.cell), g))
}

/// Geodesics from one source to several targets, with their distances.
pub fn qh_geodesics_from(dom: &GridDomain, search: &mut Search, x: usize, targets: &[usize]) -> Vec<(f64, Vec<usize>)> {
    let mut left: std::collections::HashSet<usize> = targets.iter().copied().collect();
    search.run(dom, &[(x, 0.0)], qh_weight(dom), |_| true, |v, _| {
        left.remove(&v);
        left.is_empty()
    });
    targets.iter().map(|&t| (search.dist(t), search.path_to(t))).collect()
}

/// Shortest-path tree of the quasihyperbolic graph rooted at the base point.
#[derive(Clone, Debug)]
pub struct GeodesicTree {
    pub root: usize,
    /// `k(x0, ·)`, infinite off the domain.
    pub k: Vec<f64>,
    pub parent: Vec<u32>,
    /// Nodes in nondecreasing order of `k`.
    pub order: Vec<usize>,
}

pub const NO_NODE: u32 = u32::MAX;

impl GeodesicTree {
    pub fn parent(&self, v: usize) -> Option<usize> {
        (self.parent[v] != NO_NODE).then(|| self.parent[v] as usize)
    }

    /// Tree path from the root to `v`.
    pub fn path_to(&self, v: usize) -> Vec<usize> {
        let mut out = vec![v];
        let mut c = v;
        while let Some(p) = self.parent(c) {
            out.push(p);
            c = p;
        }
        out.reverse();
        out
    }

    pub fn geodesic(&self, dom: &GridDomain, v: usize) -> Geodesic {
        Geodesic::from_cells(dom, self.path_to(v))
    }

    /// Children lists in CSR form: `(offsets, children)`, children sorted.
    pub fn children(&self) -> (Vec<usize>, Vec<usize>) {
        let n = self.k.len();
        let mut count = vec![0usize; n + 1];
        for &v in &self.order {
            if let Some(p) = self.parent(v) {
                count[p + 1] += 1;
            }
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut kids = vec![0usize; count[n]];
        for v in 0..n {
            if self.k[v].is_finite() {
                if let Some(p) = self.parent(v) {
                    kids[fill[p]] = v;
                    fill[p] += 1;
                }
            }
        }
        (count, kids)
    }
}

pub fn radial_tree(dom: &GridDomain) -> GeodesicTree {
    let mut s = Search::new(dom.len());
    s.run(dom, &[(dom.x0(), 0.0)], qh_weight(dom), |_| true, |_, _| false);
    let n = dom.len();
    let mut k = vec![f64::INFINITY; n];
    let mut parent = vec![NO_NODE; n];
    for &v in s.settled() {
        k[v] = s.dist(v);
        parent[v] = s.parent(v).map_or(NO_NODE, |p| p as u32);
    }
    GeodesicTree { root: dom.x0(), k, parent, order: s.settled().to_vec() }
}

/// `(Λ, Δ) = (log(1 + λ/(d∧d)), log(1 + δ/(d∧d)))`.
pub fn capital_lambda_delta(dom: &GridDomain, x: &Point, y: &Point) -> Result<(f64, f64)> {
    if x.cell == y.cell {
        return Ok((0.0, 0.0));
    }
    let m = dom.d(x.cell).min(dom.d(y.cell));
    let l = dom.intrinsic_distance(x, y)?;
    let d = dom.intrinsic_diameter_distance(x, y)?.value;
    Ok(((l / m).ln_1p(), (d / m).ln_1p()))
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaEstimate {
    pub value: f64,
    /// Argmax triangle as cell indices.
    pub triangle: Option<[usize; 3]>,
    pub per_triangle: Vec<f64>,
    pub seed: u64,
}

/// Thinness of one geodesic triangle: the largest quasihyperbolic distance
/// from a point of one side to the union of the other two. Also returns the
/// three sides.
pub fn triangle_thinness(dom: &GridDomain, search: &mut Search, tri: [usize; 3]) -> (f64, [Vec<usize>; 3]) {
    let [x, y, z] = tri;
    let from_x = qh_geodesics_from(dom, search, x, &[y, z]);
    let from_y = qh_geodesics_from(dom, search, y, &[z]);
    let sides = [from_x[0].1.clone(), from_y[0].1.clone(), from_x[1].1.clone()];
    let mut worst = 0.0f64;
    for s in 0..3 {
        let side = &sides[s];
        let sources: Vec<(usize, f64)> = (0..3).filter(|&t| t != s).flat_map(|t| sides[t].iter().map(|&c| (c, 0.0))).collect();
        let mut want: std::collections::HashSet<usize> = side.iter().copied().collect();
        for &(c, _) in &sources {
            want.remove(&c);
        }
        if want.is_empty() {
            continue;
        }
        let mut far = 0.0f64;
        search.run(dom, &sources, qh_weight(dom), |_| true, |v, d| {
            if want.remove(&v) {
                far = far.max(d);
            }
            want.is_empty()
        });
        worst = worst.max(far);
    }
    (worst, sides)
}

/// Thin-triangles estimate over explicit triangles (cell triples).
pub fn estimate_delta_on(dom: &GridDomain, triangles: &[[usize; 3]], seed: u64) -> DeltaEstimate {
    let mut search = Search::new(dom.len());
    let mut per = Vec::with_capacity(triangles.len());
    let mut best = (0.0, None);
    for &t in triangles {
        let (v, _) = triangle_thinness(dom, &mut search, t);
        per.push(v);
        if best.1.is_none() || v > best.0 {
            best = (v, Some(t));
        }
    }
    DeltaEstimate { value: best.0, triangle: best.1, per_triangle: per, seed }
}

/// Thin-triangles estimate over `n` triangles with vertices drawn uniformly
/// from the interior.
pub fn estimate_delta(dom: &GridDomain, n_triangles: usize, seed: u64) -> Result<DeltaEstimate> {
    if n_triangles == 0 {
        return Err(Error::Parameter("need at least one triangle".into()));
    }
    let pts = sampling::world_points(dom, 3 * n_triangles, seed, 0.0);
    let tris: Vec<[usize; 3]> = pts
        .chunks(3)
        .map(|c| [c[0], c[1], c[2]].map(|p| dom.locate(p).expect("sampled inside the grid")))
        .collect();
    Ok(estimate_delta_on(dom, &tris, seed))
}

/// Four-point (Gromov product) constant of one quadruple.
pub fn four_point_delta(dom: &GridDomain, search: &mut Search, q: [usize; 4]) -> f64 {
    let mut k = [[0.0; 4]; 4];
    for a in 0..3 {
        let targets: Vec<usize> = q[a + 1..].to_vec();
        let res = qh_geodesics_from(dom, search, q[a], &targets);
        for (t, (d, _)) in res.into_iter().enumerate() {
            k[a][a + 1 + t] = d;
            k[a + 1 + t][a] = d;
        }
    }
    let mut s = [k[0][1] + k[2][3], k[0][2] + k[1][3], k[0][3] + k[1][2]];
    s.sort_by(f64::total_cmp);
    0.5 * (s[2] - s[1])
}
