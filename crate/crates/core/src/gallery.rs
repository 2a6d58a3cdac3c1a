//! Built-in analytic fixtures, rasterized at a chosen cell size.
//!
//! A cell is interior when its center lies in the open set; removed closed
//! sets (slit, lattice points) knock out every cell whose closed square meets
//! them.

use crate::error::{Error, Result};
use crate::grid::GridDomain;

pub const NAMES: [&str; 8] = ["disk", "square", "slit_disk", "spiral", "dumbbell", "comb", "punctured_lattice", "strip"];

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub domain: GridDomain,
    /// Fixture-specific sample locations (tooth tips, slit pair, ...).
    pub landmarks: Vec<[f64; 2]>,
    /// A point of the rasterized boundary used by singular test functions.
    pub boundary_point: [f64; 2],
}

/// Rasterizes `[x0,x1]×[y0,y1]`, which must be a whole number of cells.
fn raster(
    bounds: [f64; 4],
    h: f64,
    base: [f64; 2],
    keep: impl Fn([f64; 2], [f64; 2], [f64; 2]) -> bool,
) -> Result<GridDomain> {
    if !(h > 0.0 && h <= 0.25) {
        return Err(Error::Parameter(format!("cell size {h} outside (0, 1/4]")));
    }
    let nx = ((bounds[1] - bounds[0]) / h).round() as usize + 2;
    let ny = ((bounds[3] - bounds[2]) / h).round() as usize + 2;
    let origin = [bounds[0] - h, bounds[2] - h];
    let mut mask = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let lo = [origin[0] + h * i as f64, origin[1] + h * j as f64];
            let hi = [lo[0] + h, lo[1] + h];
            let c = [lo[0] + 0.5 * h, lo[1] + 0.5 * h];
            mask[j * nx + i] = keep(c, lo, hi);
        }
    }
    let fi = ((base[0] - origin[0]) / h).floor() as usize;
    let fj = ((base[1] - origin[1]) / h).floor() as usize;
    GridDomain::from_mask(nx, ny, h, origin, mask, fj * nx + fi)
}

fn in_box(c: [f64; 2], b: [f64; 4]) -> bool {
    c[0] > b[0] && c[0] < b[1] && c[1] > b[2] && c[1] < b[3]
}

pub fn disk(radius: f64, h: f64) -> Result<Fixture> {
    let r = radius;
    let domain = raster([-r, r, -r, r], h, [0.0, 0.0], |c, _, _| c[0] * c[0] + c[1] * c[1] < r * r)?;
    Ok(Fixture { name: "disk".into(), domain, landmarks: vec![], boundary_point: [r, 0.0] })
}

pub fn square(side: f64, h: f64) -> Result<Fixture> {
    let domain = raster([0.0, side, 0.0, side], h, [0.5 * side, 0.5 * side], |c, _, _| in_box(c, [0.0, side, 0.0, side]))?;
    Ok(Fixture { name: "square".into(), domain, landmarks: vec![], boundary_point: [side, 0.5 * side] })
}

/// Unit disk minus the segment `[0,1)×{0}`.
pub fn slit_disk(h: f64) -> Result<Fixture> {
    let domain = raster([-1.0, 1.0, -1.0, 1.0], h, [-0.5, 0.0], |c, lo, hi| {
        let on_slit = lo[1] <= 0.0 && hi[1] >= 0.0 && hi[0] >= 0.0 && lo[0] < 1.0;
        c[0] * c[0] + c[1] * c[1] < 1.0 && !on_slit
    })?;
    // The rasterized slit reaches one cell past the tip.
    Ok(Fixture {
        name: "slit_disk".into(),
        domain,
        landmarks: vec![[0.5, 0.1], [0.5, -0.1]],
        boundary_point: [-h, 0.0],
    })
}

/// Unit disk with an Archimedean spiral wall leaving a single spiral corridor
/// from the central disk `r < 0.2` out to the rim.
pub fn spiral(h: f64) -> Result<Fixture> {
    let (pitch, wall, r0) = (0.2, 0.06, 0.2);
    let domain = raster([-1.0, 1.0, -1.0, 1.0], h, [0.0, 0.0], |c, _, _| {
        let r = c[0].hypot(c[1]);
        if r >= 1.0 {
            return false;
        }
        if r < r0 {
            return true;
        }
        let theta = c[1].atan2(c[0]).rem_euclid(std::f64::consts::TAU);
        let phase = (r - r0 - pitch * theta / std::f64::consts::TAU).rem_euclid(pitch);
        phase >= wall
    })?;
    let tip = 0.2 + pitch * 3.5;
    Ok(Fixture { name: "spiral".into(), domain, landmarks: vec![[0.0, 0.0], [-tip, 0.0]], boundary_point: [1.0, 0.0] })
}

/// Two square chambers joined by a thin corridor.
pub fn dumbbell(h: f64) -> Result<Fixture> {
    let left = [0.0, 0.4, 0.0, 0.4];
    let right = [0.6, 1.0, 0.0, 0.4];
    let corridor = [0.35, 0.65, 0.17, 0.23];
    let domain = raster([0.0, 1.0, 0.0, 0.4], h, [0.2, 0.2], |c, _, _| in_box(c, left) || in_box(c, right) || in_box(c, corridor))?;
    Ok(Fixture { name: "dumbbell".into(), domain, landmarks: vec![[0.2, 0.2], [0.8, 0.2], [0.5, 0.2]], boundary_point: [0.0, 0.2] })
}

/// Spine `[0,1]×[0,1/4]` with `teeth` vertical teeth of width `1/(2·teeth)`.
pub fn comb(teeth: usize, h: f64) -> Result<Fixture> {
    if teeth == 0 {
        return Err(Error::Parameter("comb needs at least one tooth".into()));
    }
    let n = teeth as f64;
    let spine = [0.0, 1.0, 0.0, 0.25];
    let domain = raster([0.0, 1.0, 0.0, 1.0], h, [0.5, 0.125], |c, _, _| {
        if in_box(c, spine) {
            return true;
        }
        let t = (c[0] * n).floor();
        let local = c[0] * n - t;
        c[1] > 0.0 && c[1] < 1.0 && local > 0.25 && local < 0.75
    })?;
    let landmarks = (0..teeth).map(|t| [(t as f64 + 0.5) / n, 0.9]).collect();
    Ok(Fixture { name: "comb".into(), domain, landmarks, boundary_point: [0.5, 0.0] })
}

/// Unit square with every interior lattice point of spacing `s` removed.
pub fn punctured_lattice(spacing: f64, h: f64) -> Result<Fixture> {
    if !(spacing > 0.0 && spacing < 1.0) {
        return Err(Error::Parameter(format!("lattice spacing {spacing} outside (0,1)")));
    }
    let s = spacing;
    let base = [0.5 + 0.5 * s, 0.5 + 0.5 * s];
    let domain = raster([0.0, 1.0, 0.0, 1.0], h, base, |c, lo, hi| {
        if !in_box(c, [0.0, 1.0, 0.0, 1.0]) {
            return false;
        }
        let hit = |a: f64, b: f64| {
            let k = (a / s).ceil();
            let p = k * s;
            p <= b + 1e-12 && p > 1e-12 && p < 1.0 - 1e-12
        };
        !(hit(lo[0] - 1e-12, hi[0]) && hit(lo[1] - 1e-12, hi[1]))
    })?;
    Ok(Fixture { name: "punctured_lattice".into(), domain, landmarks: vec![], boundary_point: [0.5, 0.5] })
}

/// The strip `(-2,2)×(0,2)`, a stand-in for the upper half plane near the
/// vertical axis.
pub fn strip(h: f64) -> Result<Fixture> {
    let b = [-2.0, 2.0, 0.0, 2.0];
    let domain = raster(b, h, [0.0, 1.0], |c, _, _| in_box(c, b))?;
    Ok(Fixture { name: "strip".into(), domain, landmarks: vec![[0.0, 0.1]], boundary_point: [0.0, 0.0] })
}

/// Fixture by name with its default parameter.
pub fn by_name(name: &str, h: f64) -> Result<Fixture> {
    match name {
        "disk" => disk(1.0, h),
        "square" => square(1.0, h),
        "slit_disk" => slit_disk(h),
        "spiral" => spiral(h),
        "dumbbell" => dumbbell(h),
        "comb" => comb(4, h),
        "punctured_lattice" => punctured_lattice(0.125, h),
        "strip" => strip(h),
        _ => Err(Error::Config { field: "fixture".into(), msg: format!("unknown fixture `{name}`") }),
    }
}

/// The seven fixtures of the standard gallery.
pub const GALLERY: [&str; 7] = ["disk", "square", "slit_disk", "spiral", "dumbbell", "comb", "punctured_lattice"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_fixture_builds() {
        for name in NAMES {
            let f = by_name(name, 1.0 / 32.0).unwrap();
            assert!(f.domain.interior_count() > 100, "{name}");
            assert!(f.domain.is_interior(f.domain.x0()));
        }
        assert!(matches!(by_name("torus", 0.1), Err(Error::Config { .. })));
    }

    #[test]
    fn slit_is_two_cells_thick_and_ends_one_cell_past_the_tip() {
        let h = 1.0 / 32.0;
        let d = slit_disk(h).unwrap().domain;
        assert!(d.point([0.5, 0.5 * h]).is_err());
        assert!(d.point([0.5, -0.5 * h]).is_err());
        assert!(d.point([0.5, 1.5 * h]).is_ok());
        assert!(d.point([-0.5 * h, 0.5 * h]).is_err());
        assert!(d.point([-1.5 * h, 0.5 * h]).is_ok());
    }

    #[test]
    fn lattice_holes_are_two_by_two() {
        let h = 1.0 / 64.0;
        let d = punctured_lattice(0.25, h).unwrap().domain;
        let full = 64 * 64;
        assert_eq!(d.interior_count(), full - 9 * 4);
    }

    #[test]
    fn spiral_is_one_corridor() {
        let f = spiral(1.0 / 64.0).unwrap();
        let d = &f.domain;
        let tip = d.point(f.landmarks[1]).unwrap();
        let center = d.point([0.0, 0.0]).unwrap();
        // The corridor winds several turns, so the intrinsic distance far exceeds the chord.
        let l = d.intrinsic_distance(&center, &tip).unwrap();
        assert!(l > 3.0, "{l}");
    }
}
