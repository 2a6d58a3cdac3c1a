//! Seeded sampling of interior locations.
//!
//! Points are drawn in world coordinates so the same sample can be reused on
//! a refined raster of the same fixture.

use crate::grid::GridDomain;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` uniform interior points whose cell has boundary distance ≥ `margin`.
pub fn world_points(dom: &GridDomain, n: usize, seed: u64, margin: f64) -> Vec<[f64; 2]> {
    let mut r = rng(seed);
    // The padding ring is excluded so the draw region does not depend on h.
    let o = [dom.origin()[0] + dom.h(), dom.origin()[1] + dom.h()];
    let (w, hgt) = ((dom.nx() - 2) as f64 * dom.h(), (dom.ny() - 2) as f64 * dom.h());
    let mut out = Vec::with_capacity(n);
    let mut tries = 0usize;
    while out.len() < n {
        tries += 1;
        assert!(tries < 1000 * n + 100_000, "margin {margin} leaves no room to sample");
        let p = [o[0] + r.random::<f64>() * w, o[1] + r.random::<f64>() * hgt];
        if let Some(c) = dom.locate(p) {
            if dom.is_interior(c) && dom.d(c) >= margin {
                out.push(p);
            }
        }
    }
    out
}

/// Cells of world points on a given raster (points must be interior there).
pub fn cells_of(dom: &GridDomain, pts: &[[f64; 2]]) -> Vec<usize> {
    pts.iter().map(|&p| dom.point(p).expect("sample point is interior on this raster").cell).collect()
}
