//! Dyadic Whitney decomposition of a rasterized domain.
//!
//! Squares of the dyadic lattice anchored at the lower-left corner of the
//! interior cells are subdivided top-down until they are interior and
//! satisfy `diam ≤ dist`, with `dist` the smallest cell-center boundary
//! distance inside the square. The upper bound `dist ≤ 4·diam` then follows
//! from the parent having been rejected. Single cells that never become
//! admissible (boundary distance below `√2·h`) are kept as flagged cubes so
//! the cover stays exact.

use crate::error::{Error, Result};
use crate::grid::{GridDomain, Path, Point};
use serde::Serialize;
use std::collections::BTreeMap;

pub const NO_CUBE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WhitneyCube {
    /// Lower-left cell of the cube.
    pub i0: usize,
    pub j0: usize,
    /// Edge length in cells, a power of two.
    pub side: usize,
    /// `log2(side)`.
    pub scale: u32,
    /// Edge length in world units.
    pub l: f64,
    pub center: [f64; 2],
    /// Smallest cell-center boundary distance inside the cube.
    pub dist: f64,
    /// Set when the cube is a single cell too close to the boundary to be
    /// admissible at this resolution.
    pub flagged: bool,
}

impl WhitneyCube {
    pub fn diam(&self) -> f64 {
        self.l * std::f64::consts::SQRT_2
    }

    pub fn contains_ij(&self, i: usize, j: usize) -> bool {
        i >= self.i0 && j >= self.j0 && i < self.i0 + self.side && j < self.j0 + self.side
    }

    pub fn admissible(&self) -> bool {
        self.diam() <= self.dist && self.dist <= 4.0 * self.diam()
    }

    /// Cell indices covered by the cube.
    pub fn cells(&self, nx: usize) -> impl Iterator<Item = usize> + '_ {
        (self.j0..self.j0 + self.side).flat_map(move |j| (self.i0..self.i0 + self.side).map(move |i| j * nx + i))
    }

    /// Cell whose lower-left corner is the cube center (the cube itself for one cell).
    pub fn center_cell(&self, nx: usize) -> usize {
        (self.j0 + self.side / 2) * nx + self.i0 + self.side / 2
    }
}

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    pub cubes: Vec<WhitneyCube>,
    cell_cube: Vec<u32>,
    nx: usize,
    h: f64,
    /// Face-adjacent cubes (sharing an edge segment), sorted.
    pub adjacency: Vec<Vec<usize>>,
    /// Cube indices bucketed by `scale`.
    pub by_scale: BTreeMap<u32, Vec<usize>>,
}

impl WhitneyDecomposition {
    pub fn cube_of_cell(&self, cell: usize) -> Option<usize> {
        let c = self.cell_cube[cell];
        (c != NO_CUBE).then_some(c as usize)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// The cube containing an interior point.
    pub fn locate_cube(&self, x: &Point) -> Result<&WhitneyCube> {
        self.cell_cube
            .get(x.cell)
            .filter(|&&c| c != NO_CUBE)
            .map(|&c| &self.cubes[c as usize])
            .ok_or_else(|| Error::Domain(format!("cell {} is not interior", x.cell)))
    }

    pub fn flagged_count(&self) -> usize {
        self.cubes.iter().filter(|q| q.flagged).count()
    }

    /// Euclidean length of a path split over the cubes it crosses.
    pub fn length_per_cube(&self, dom: &GridDomain, path: &Path) -> BTreeMap<usize, f64> {
        const SUB: usize = 16;
        let mut out = BTreeMap::new();
        let pts = path.points(dom);
        for w in pts.windows(2) {
            let seg = crate::grid::dist(w[0], w[1]) / SUB as f64;
            for s in 0..SUB {
                let t = (s as f64 + 0.5) / SUB as f64;
                let p = [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])];
                if let Some(c) = dom.locate(p).and_then(|cell| self.cube_of_cell(cell)) {
                    *out.entry(c).or_insert(0.0) += seg;
                }
            }
        }
        out
    }
}

/// Builds the decomposition; fails when the resolution is too coarse for any
/// admissible cube larger than one cell, or when the base point only sits in
/// a flagged cube.
pub fn whitney_decompose(dom: &GridDomain) -> Result<WhitneyDecomposition> {
    let (nx, ny) = (dom.nx(), dom.ny());
    let (mut imin, mut imax, mut jmin, mut jmax) = (usize::MAX, 0, usize::MAX, 0);
    for c in dom.interior_cells() {
        let (i, j) = dom.ij(c);
        imin = imin.min(i);
        imax = imax.max(i);
        jmin = jmin.min(j);
        jmax = jmax.max(j);
    }
    let span = (imax - imin + 1).max(jmax - jmin + 1);
    let top = span.next_power_of_two();
    let diag = std::f64::consts::SQRT_2 * dom.h();

    let mut cubes = Vec::new();
    let mut stack = vec![(imin, jmin, top)];
    while let Some((i0, j0, s)) = stack.pop() {
        let (mut any, mut all, mut dmin) = (false, true, f64::INFINITY);
        for j in j0..(j0 + s).min(ny) {
            for i in i0..(i0 + s).min(nx) {
                let c = j * nx + i;
                if dom.is_interior(c) {
                    any = true;
                    dmin = dmin.min(dom.d(c));
                } else {
                    all = false;
                }
            }
        }
        all &= i0 + s <= nx && j0 + s <= ny;
        if !any {
            continue;
        }
        let diam = diag * s as f64;
        if all && diam <= dmin {
            cubes.push(make_cube(dom, i0, j0, s, dmin, false));
        } else if s == 1 {
            cubes.push(make_cube(dom, i0, j0, 1, dmin, true));
        } else {
            let t = s / 2;
            // Pushed in reverse so cubes come out in SW, SE, NW, NE order.
            stack.push((i0 + t, j0 + t, t));
            stack.push((i0, j0 + t, t));
            stack.push((i0 + t, j0, t));
            stack.push((i0, j0, t));
        }
    }

    let mut cell_cube = vec![NO_CUBE; nx * ny];
    let mut by_scale: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (k, q) in cubes.iter().enumerate() {
        for c in q.cells(nx) {
            cell_cube[c] = k as u32;
        }
        by_scale.entry(q.scale).or_default().push(k);
    }
    let mut adjacency = vec![Vec::new(); cubes.len()];
    for (k, q) in cubes.iter().enumerate() {
        let mut nb = Vec::new();
        let mut probe = |i: i64, j: i64| {
            if i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny {
                let c = cell_cube[j as usize * nx + i as usize];
                if c != NO_CUBE {
                    nb.push(c as usize);
                }
            }
        };
        let (i0, j0, s) = (q.i0 as i64, q.j0 as i64, q.side as i64);
        for t in 0..s {
            probe(i0 - 1, j0 + t);
            probe(i0 + s, j0 + t);
            probe(i0 + t, j0 - 1);
            probe(i0 + t, j0 + s);
        }
        nb.sort_unstable();
        nb.dedup();
        adjacency[k] = nb;
    }

    let dec = WhitneyDecomposition { cubes, cell_cube, nx, h: dom.h(), adjacency, by_scale };
    if !dec.cubes.iter().any(|q| !q.flagged && q.side >= 2) {
        return Err(Error::Resolution("no admissible cube larger than one cell; refine the grid".into()));
    }
    if dec.cubes[dec.cube_of_cell(dom.x0()).expect("base point is interior")].flagged {
        return Err(Error::Resolution("base point lies in a cube below the admissible scale".into()));
    }
    Ok(dec)
}

fn make_cube(dom: &GridDomain, i0: usize, j0: usize, side: usize, dist: f64, flagged: bool) -> WhitneyCube {
    let h = dom.h();
    let o = dom.origin();
    let l = side as f64 * h;
    WhitneyCube {
        i0,
        j0,
        side,
        scale: side.trailing_zeros(),
        l,
        center: [o[0] + h * i0 as f64 + 0.5 * l, o[1] + h * j0 as f64 + 0.5 * l],
        dist,
        flagged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn check_invariants(dom: &GridDomain, dec: &WhitneyDecomposition) {
        let mut covered = 0;
        for q in &dec.cubes {
            // Exhaustive admissibility on the rasterized field.
            let dmin = q.cells(dom.nx()).map(|c| dom.d(c)).fold(f64::INFINITY, f64::min);
            assert_eq!(dmin, q.dist);
            if q.flagged {
                assert_eq!(q.side, 1);
                assert!(q.dist < q.diam());
            } else {
                assert!(q.admissible(), "{q:?}");
            }
            covered += q.side * q.side;
        }
        assert_eq!(covered, dom.interior_count());
        for c in dom.interior_cells() {
            let q = &dec.cubes[dec.cube_of_cell(c).unwrap()];
            let (i, j) = dom.ij(c);
            assert!(q.contains_ij(i, j));
        }
    }

    #[test]
    fn invariants_on_gallery() {
        for name in gallery::GALLERY {
            let f = gallery::by_name(name, 1.0 / 128.0).unwrap();
            let dec = whitney_decompose(&f.domain).unwrap();
            check_invariants(&f.domain, &dec);
        }
    }

    #[test]
    fn square_central_cubes() {
        // On [-1,1]² the central cubes have edge 1/4; on [0,1]² the rule gives 1/8.
        let big = gallery::square(2.0, 1.0 / 64.0).unwrap().domain;
        let dec = whitney_decompose(&big).unwrap();
        for x in [[0.9, 0.9], [1.1, 0.9], [0.9, 1.1], [1.1, 1.1]] {
            let q = dec.locate_cube(&big.point(x).unwrap()).unwrap();
            assert_eq!(q.l, 0.25, "{x:?}");
        }
        let unit = gallery::square(1.0, 1.0 / 64.0).unwrap().domain;
        let dec = whitney_decompose(&unit).unwrap();
        let q = dec.locate_cube(&unit.point([0.45, 0.45]).unwrap()).unwrap();
        assert_eq!(q.l, 0.125);
        check_invariants(&unit, &dec);
    }

    #[test]
    fn halving_the_disk_shifts_scales() {
        let a = gallery::disk(1.0, 1.0 / 64.0).unwrap().domain;
        let b = gallery::disk(0.5, 1.0 / 128.0).unwrap().domain;
        let da = whitney_decompose(&a).unwrap();
        let db = whitney_decompose(&b).unwrap();
        let key = |d: &WhitneyDecomposition| {
            let mut v: Vec<(usize, usize, usize, bool)> = d.cubes.iter().map(|q| (q.i0, q.j0, q.side, q.flagged)).collect();
            v.sort();
            v
        };
        assert_eq!(key(&da), key(&db));
        for (qa, qb) in da.cubes.iter().zip(&db.cubes) {
            assert!((qa.l - 2.0 * qb.l).abs() < 1e-15);
        }
    }

    #[test]
    fn coarse_lattice_is_a_resolution_error() {
        // Holes every 8 cells leave no room for a 2×2 cube at this resolution.
        let f = gallery::punctured_lattice(0.125, 1.0 / 64.0).unwrap();
        assert!(matches!(whitney_decompose(&f.domain), Err(Error::Resolution(_))));
    }

    #[test]
    fn tiny_square_is_a_resolution_error() {
        let mask = vec![true; 16];
        let dom = GridDomain::from_mask(4, 4, 0.25, [0.0, 0.0], mask, 5).unwrap();
        assert!(matches!(whitney_decompose(&dom), Err(Error::Resolution(_))));
    }

    #[test]
    fn adjacent_sizes_within_factor_four() {
        for name in ["disk", "slit_disk", "comb"] {
            let f = gallery::by_name(name, 1.0 / 128.0).unwrap();
            let dec = whitney_decompose(&f.domain).unwrap();
            for (k, nb) in dec.adjacency.iter().enumerate() {
                for &n in nb {
                    let r = dec.cubes[k].l / dec.cubes[n].l;
                    assert!((0.25..=4.0).contains(&r), "{name}: {r}");
                }
            }
        }
    }

    #[test]
    fn locate_cube_examples() {
        let f = gallery::spiral(1.0 / 64.0).unwrap();
        let dom = &f.domain;
        let dec = whitney_decompose(dom).unwrap();
        let q = dec.cubes.iter().find(|q| q.side >= 2).unwrap();
        let c = dom.point(q.center).unwrap();
        assert_eq!(dec.locate_cube(&c).unwrap(), q);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut hits = 0;
        while hits < 1000 {
            let x = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            let Ok(p) = dom.point(x) else { continue };
            hits += 1;
            let q = dec.locate_cube(&p).unwrap();
            let half = 0.5 * q.l;
            assert!((x[0] - q.center[0]).abs() <= half + 1e-12 && (x[1] - q.center[1]).abs() <= half + 1e-12);
            let shifted = Point { cell: p.cell, offset: [0.0, 0.0] };
            assert_eq!(dec.locate_cube(&shifted).unwrap(), q);
        }
        assert!(dec.locate_cube(&Point::center(0)).is_err());
    }
}
