//! Smooth partition of unity subordinate to a core/tentacle decomposition.
//!
//! Every hat is the mollified indicator of a cell set `S` dilated by the
//! mollifier radius `r` in the max norm, so it equals 1 on `S` and vanishes
//! outside `S` dilated by `2r`. The mollifier is the tensor product of two
//! one-dimensional bumps `exp(-1/(1-t²))` of half-width `r`; its support is
//! the disk of radius `r√2 = 2^-m/200`. Inside one cell, a hat depends only
//! on which of the 3×3 surrounding cells lie in `S`, and its value is a sum
//! of products of one-dimensional bump integrals.

use super::jet::{idx, multi_indices_upto, Jet};
use crate::cellset::CellSet;
use crate::core_tentacle::CoreTentacleDecomposition;
use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::whitney::WhitneyDecomposition;
use serde::Serialize;

/// Antiderivative of the normalized bump on `[-1, 1]`, tabulated for cubic
/// Hermite interpolation with exact slopes.
#[derive(Clone, Debug)]
pub struct BumpCdf {
    table: Vec<f64>,
    z: f64,
}

const TABLE: usize = 4096;

fn raw_bump(t: f64) -> f64 {
    if t.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - t * t)).exp()
    }
}

impl BumpCdf {
    pub fn new() -> Self {
        let rule = super::quadrature::Rule::gauss(8);
        let dt = 2.0 / TABLE as f64;
        let mut table = vec![0.0; TABLE + 1];
        for i in 0..TABLE {
            let a = -1.0 + i as f64 * dt;
            table[i + 1] = table[i] + rule.on(a, a + dt).map(|(t, w)| w * raw_bump(t)).sum::<f64>();
        }
        let z = table[TABLE];
        table.iter_mut().for_each(|v| *v /= z);
        BumpCdf { table, z }
    }

    /// Normalized bump and its first two derivatives.
    pub fn bump(&self, t: f64) -> [f64; 3] {
        if t.abs() >= 1.0 {
            return [0.0; 3];
        }
        let q = 1.0 - t * t;
        let b = raw_bump(t) / self.z;
        let f1 = -2.0 * t / (q * q);
        let f2 = -2.0 / (q * q) - 8.0 * t * t / (q * q * q);
        [b, b * f1, b * (f1 * f1 + f2)]
    }

    /// `G(t)` and its first three derivatives.
    pub fn eval(&self, t: f64) -> [f64; 4] {
        if t <= -1.0 {
            return [0.0; 4];
        }
        if t >= 1.0 {
            return [1.0, 0.0, 0.0, 0.0];
        }
        let dt = 2.0 / TABLE as f64;
        let s = (t + 1.0) / dt;
        let i = (s.floor() as usize).min(TABLE - 1);
        let u = s - i as f64;
        let (a, b) = (-1.0 + i as f64 * dt, -1.0 + (i + 1) as f64 * dt);
        let (ma, mb) = (self.bump(a)[0] * dt, self.bump(b)[0] * dt);
        let (u2, u3) = (u * u, u * u * u);
        let g = (2.0 * u3 - 3.0 * u2 + 1.0) * self.table[i] + (u3 - 2.0 * u2 + u) * ma + (-2.0 * u3 + 3.0 * u2) * self.table[i + 1] + (u3 - u2) * mb;
        let d = self.bump(t);
        [g, d[0], d[1], d[2]]
    }
}

impl Default for BumpCdf {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum HatKind {
    /// `ψ_Q` for a cube of `𝒰^(m)`.
    Psi { cube: usize },
    /// `φ_i` for a tentacle group, with the group's assigned cube.
    Phi { group: usize, cube: usize },
    /// `ξ_i` for a thick piece.
    Xi { piece: usize },
}

impl HatKind {
    pub fn family(&self) -> usize {
        match self {
            HatKind::Psi { .. } => 0,
            HatKind::Phi { .. } => 1,
            HatKind::Xi { .. } => 2,
        }
    }

    /// Cube whose polynomial multiplies the hat.
    pub fn cube(&self) -> Option<usize> {
        match *self {
            HatKind::Psi { cube } | HatKind::Phi { cube, .. } => Some(cube),
            HatKind::Xi { .. } => None,
        }
    }
}

pub const FAMILIES: [&str; 3] = ["psi", "phi", "xi"];

#[derive(Clone, Debug)]
pub struct Hat {
    pub kind: HatKind,
    /// The set on which the hat equals 1.
    pub cells: CellSet,
}

/// Per-axis weights of the three bands met inside a cell: the band around
/// the low edge, the middle and the band around the high edge.
pub type AxisWeights = [[f64; 4]; 3];

/// 9-bit block mask per 9-bit neighbourhood mask. Neighbourhood bit
/// `(di+1) + 3(dj+1)` marks cell `(i+di, j+dj)`; block bit `bx + 3·by`
/// marks that the band pair `(bx, by)` lies in the dilated set.
fn block_table() -> [u16; 512] {
    let cols: [&[usize]; 3] = [&[0, 1], &[1], &[1, 2]];
    let mut t = [0u16; 512];
    for (nb, out) in t.iter_mut().enumerate() {
        for by in 0..3 {
            for bx in 0..3 {
                let hit = cols[by].iter().any(|&r| cols[bx].iter().any(|&c| nb & (1 << (c + 3 * r)) != 0));
                if hit {
                    *out |= 1 << (bx + 3 * by);
                }
            }
        }
    }
    t
}

#[derive(Clone, Debug)]
pub struct PartitionOfUnity {
    pub m: u32,
    /// Half-width `r = 2^-m/(200√2)` of each one-dimensional bump.
    pub radius: f64,
    pub hats: Vec<Hat>,
    start: Vec<u32>,
    members: Vec<u32>,
    blocks: [u16; 512],
    cdf: BumpCdf,
}

/// Hats of one cell grouped by block mask.
#[derive(Clone, Debug, Default)]
pub struct CellHats {
    pub cell: usize,
    /// `(block mask, hat ids)`.
    pub groups: Vec<(u16, Vec<usize>)>,
    /// Low/high edge in x, then low/high edge in y, across which some hat varies.
    pub active: [bool; 4],
}

impl PartitionOfUnity {
    pub fn build(dom: &GridDomain, ctd: &CoreTentacleDecomposition) -> Result<Self> {
        let m = ctd.m();
        let radius = 0.5f64.powi(m as i32) / (200.0 * std::f64::consts::SQRT_2);
        if 4.0 * radius >= dom.h() {
            return Err(Error::Parameter(format!("mollifier radius {radius} is too large for grid step {}", dom.h())));
        }
        let mut hats = Vec::new();
        for &q in &ctd.u_m {
            hats.push(Hat { kind: HatKind::Psi { cube: q }, cells: ctd.core.region[&q].clone() });
        }
        for (gi, g) in ctd.groups.iter().enumerate() {
            let cells = CellSet::union_all(
                dom.nx(),
                g.tentacles.iter().map(|&t| &ctd.pieces[t].cells).chain(g.cubes.iter().map(|q| &ctd.core.region[q])),
            );
            hats.push(Hat { kind: HatKind::Phi { group: gi, cube: g.assigned }, cells });
        }
        for &t in &ctd.thick {
            hats.push(Hat { kind: HatKind::Xi { piece: t }, cells: ctd.pieces[t].cells.clone() });
        }
        let mut count = vec![0u32; dom.len() + 1];
        for h in &hats {
            for c in h.cells.iter() {
                count[c + 1] += 1;
            }
        }
        if let Some(c) = dom.interior_cells().find(|&c| count[c + 1] == 0) {
            return Err(Error::Coverage { cell: c, sum: 0.0 });
        }
        for c in 0..dom.len() {
            count[c + 1] += count[c];
        }
        let start = count.clone();
        let mut fill = count;
        let mut members = vec![0u32; start[dom.len()] as usize];
        for (hi, h) in hats.iter().enumerate() {
            for c in h.cells.iter() {
                members[fill[c] as usize] = hi as u32;
                fill[c] += 1;
            }
        }
        Ok(PartitionOfUnity { m, radius, hats, start, members, blocks: block_table(), cdf: BumpCdf::new() })
    }

    /// Hats whose set contains `cell`.
    pub fn members(&self, cell: usize) -> &[u32] {
        &self.members[self.start[cell] as usize..self.start[cell + 1] as usize]
    }

    /// Hats that do not vanish identically on `cell`, grouped by block mask.
    pub fn cell_hats(&self, dom: &GridDomain, cell: usize) -> CellHats {
        let (i, j) = dom.ij(cell);
        let mut nb: Vec<(usize, u16)> = Vec::new();
        for dj in 0..3usize {
            for di in 0..3usize {
                if (i + di == 0) || (j + dj == 0) || i + di > dom.nx() || j + dj > dom.ny() {
                    continue;
                }
                let c = dom.cell(i + di - 1, j + dj - 1);
                if !dom.is_interior(c) {
                    continue;
                }
                for &h in self.members(c) {
                    nb.push((h as usize, 1 << (di + 3 * dj)));
                }
            }
        }
        nb.sort_unstable();
        let mut per_hat: Vec<(usize, u16)> = Vec::new();
        for (h, bit) in nb {
            match per_hat.last_mut() {
                Some(last) if last.0 == h => last.1 |= bit,
                _ => per_hat.push((h, bit)),
            }
        }
        let mut groups: Vec<(u16, Vec<usize>)> = Vec::new();
        for (h, nbm) in per_hat {
            let mask = self.blocks[nbm as usize];
            match groups.iter_mut().find(|g| g.0 == mask) {
                Some(g) => g.1.push(h),
                None => groups.push((mask, vec![h])),
            }
        }
        let col = |mask: u16, bx: usize| (0..3).map(|by| (mask >> (bx + 3 * by)) & 1).fold(0u16, |a, b| a << 1 | b);
        let row = |mask: u16, by: usize| (mask >> (3 * by)) & 7;
        let mut active = [false; 4];
        for &(mask, _) in &groups {
            active[0] |= col(mask, 0) != col(mask, 1);
            active[1] |= col(mask, 2) != col(mask, 1);
            active[2] |= row(mask, 0) != row(mask, 1);
            active[3] |= row(mask, 2) != row(mask, 1);
        }
        CellHats { cell, groups, active }
    }

    /// Band weights along one axis at coordinate `x` in a cell spanning
    /// `[lo, lo + h]`.
    pub fn axis_weights(&self, lo: f64, h: f64, x: f64, order: usize) -> AxisWeights {
        let r = self.radius;
        let a = self.cdf.eval((lo + r - x) / r);
        let b = self.cdf.eval((lo + h - r - x) / r);
        let mut w = [[0.0; 4]; 3];
        let mut s = 1.0;
        for n in 0..=order {
            w[0][n] = s * a[n];
            w[2][n] = -s * b[n];
            s *= -1.0 / r;
        }
        w[2][0] += 1.0;
        for n in 0..=order {
            w[1][n] = -w[0][n] - w[2][n];
        }
        w[1][0] += 1.0;
        w
    }

    /// Hat jet for a block mask.
    pub fn mask_jet(mask: u16, wx: &AxisWeights, wy: &AxisWeights, order: usize) -> Jet {
        let mut j = Jet::zero();
        for by in 0..3 {
            for bx in 0..3 {
                if mask & (1 << (bx + 3 * by)) != 0 {
                    for (a, b) in multi_indices_upto(order) {
                        j.d[idx(a, b)] += wx[bx][a] * wy[by][b];
                    }
                }
            }
        }
        j
    }

    /// Weights for a point of `cell`.
    pub fn weights(&self, dom: &GridDomain, cell: usize, x: [f64; 2], order: usize) -> (AxisWeights, AxisWeights) {
        let c = dom.center(cell);
        let hh = 0.5 * dom.h();
        (self.axis_weights(c[0] - hh, dom.h(), x[0], order), self.axis_weights(c[1] - hh, dom.h(), x[1], order))
    }

    /// Normalized partition functions at `x`: `(hat id, jet)` for every hat
    /// not vanishing identically on the cell of `x`.
    pub fn functions(&self, dom: &GridDomain, x: [f64; 2], order: usize) -> Result<Vec<(usize, Jet)>> {
        let cell = dom.point(x)?.cell;
        let ch = self.cell_hats(dom, cell);
        let (wx, wy) = self.weights(dom, cell, x, order);
        let jets: Vec<(Jet, &Vec<usize>)> = ch.groups.iter().map(|(m, hs)| (Self::mask_jet(*m, &wx, &wy, order), hs)).collect();
        let mut sum = Jet::zero();
        for (j, hs) in &jets {
            sum.add_scaled(hs.len() as f64, j);
        }
        if !(sum.value() > 0.0) {
            return Err(Error::Coverage { cell, sum: sum.value() });
        }
        let mut out = Vec::new();
        for (j, hs) in &jets {
            let f = j.div(&sum, order);
            out.extend(hs.iter().map(|&h| (h, f)));
        }
        out.sort_by_key(|e| e.0);
        Ok(out)
    }

    /// Hats whose support, `S` dilated by `2r` in the max norm, leaves the
    /// allowed region: the open square `1.1·c0·Q` for the regions of cubes,
    /// `B(V, 2^-m/100)` for tentacles and `B(U, 2^-m/100)` for thick pieces.
    /// Tentacle and thick parts hold by the choice of `r`, so only the cube
    /// regions are tested.
    pub fn support_violations(&self, dom: &GridDomain, dec: &WhitneyDecomposition, ctd: &CoreTentacleDecomposition) -> Vec<usize> {
        let reach = 0.5 * dom.h() + 2.0 * self.radius;
        let fits = |q: usize| {
            let cube = &dec.cubes[q];
            let half = 0.5 * crate::core_tentacle::NEIGHBOURHOOD_FACTOR * ctd.core.c0 * cube.l;
            ctd.core.region[&q].iter().all(|c| {
                let x = dom.center(c);
                (x[0] - cube.center[0]).abs() + reach < half && (x[1] - cube.center[1]).abs() + reach < half
            })
        };
        let mut bad = Vec::new();
        for (hi, h) in self.hats.iter().enumerate() {
            let ok = match h.kind {
                HatKind::Psi { cube } => fits(cube),
                HatKind::Phi { group, .. } => ctd.groups[group].cubes.iter().all(|&q| fits(q)),
                HatKind::Xi { .. } => true,
            };
            if !ok {
                bad.push(hi);
            }
        }
        bad
    }
}
