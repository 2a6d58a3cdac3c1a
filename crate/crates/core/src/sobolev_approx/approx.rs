//! The approximant `u_m = Σψ_Q P_Q + Σφ_i P_i + Σξ_i u`, its `L^{k,p}`
//! distance to `u` and the sweep over levels.

use super::field::{Field, WorldPolynomial};
use super::jet::{idx, multi_indices, multi_indices_upto, Jet};
use super::partition::{CellHats, HatKind, PartitionOfUnity, FAMILIES};
use super::poly::{fit_on_cube, PolyApprox};
use super::quadrature::{for_each_point, DerivativeMass, Rect, Rule};
use crate::core_tentacle::{core_cells_at, decompose, CoreTentacleDecomposition};
use crate::error::{Error, Result};
use crate::grid::{neighbors8, GridDomain};
use crate::whitney::WhitneyDecomposition;
use serde::Serialize;
use std::collections::BTreeMap;

/// Refinement depth toward the singular point inside cells.
const ZONE_DEPTH: u32 = 6;

/// Fits `P_Q` on every cube carrying a hat polynomial.
pub fn fit_polynomials(dom: &GridDomain, dec: &WhitneyDecomposition, pou: &PartitionOfUnity, field: &dyn Field, k: usize) -> Result<BTreeMap<usize, PolyApprox>> {
    let mut out = BTreeMap::new();
    for h in &pou.hats {
        if let Some(q) = h.kind.cube() {
            if !out.contains_key(&q) {
                out.insert(q, fit_on_cube(dom, dec, field, q, k)?);
            }
        }
    }
    Ok(out)
}

pub struct Approximation<'a> {
    pub dom: &'a GridDomain,
    pub pou: &'a PartitionOfUnity,
    pub field: &'a dyn Field,
    pub k: usize,
    polys: Vec<Option<PolyApprox>>,
}

/// Hats of one cell sharing a block mask, with their polynomials summed as
/// Taylor coefficients about the cell center.
struct Term {
    mask: u16,
    count: f64,
    xi: f64,
    taylor: WorldPolynomial,
    families: [bool; 3],
}

pub fn assemble<'a>(dom: &'a GridDomain, pou: &'a PartitionOfUnity, field: &'a dyn Field, k: usize, polys: &BTreeMap<usize, PolyApprox>) -> Result<Approximation<'a>> {
    if !(1..=3).contains(&k) {
        return Err(Error::Parameter(format!("order k = {k} must lie in 1..=3")));
    }
    let mut per_hat = Vec::with_capacity(pou.hats.len());
    for (hi, h) in pou.hats.iter().enumerate() {
        per_hat.push(match h.kind.cube() {
            None => None,
            Some(q) => {
                let p = polys.get(&q).ok_or_else(|| Error::Assembly(format!("no polynomial for cube {q} of hat {hi}")))?;
                if p.k != k {
                    return Err(Error::Assembly(format!("polynomial for cube {q} has order {} instead of {k}", p.k)));
                }
                Some(p.clone())
            }
        });
    }
    Ok(Approximation { dom, pou, field, k, polys: per_hat })
}

/// Measured quantities of one approximant.
#[derive(Clone, Debug, Serialize)]
pub struct ApproxReport {
    pub m: u32,
    pub k: usize,
    pub ps: Vec<f64>,
    /// `Σ_{|α|=k} ‖∂^α(u - u_m)‖_{L^p}` per exponent.
    pub error: Vec<f64>,
    /// Fraction of `∫|∂^α(u - u_m)|^p` (summed over `α`) found outside
    /// `∪B_Q ∪ ∪B_i ∪ ∪(B_{U_i}∖U_i)`, per exponent.
    pub error_outside: Vec<f64>,
    /// `max_{|α|=n} sup |∂^α u_m|` for `n = 0..=k`.
    pub sup_um: Vec<f64>,
    /// Same for `u` over the same points.
    pub sup_u: Vec<f64>,
    /// `max |Σ partition functions - 1|`.
    pub sum_deviation: f64,
    /// Largest excursion of a partition function below 0 or above 1.
    pub range_violation: f64,
    /// `max_{|α|=n} sup |∂^α ·|` per family (`psi`, `phi`, `xi`), `n = 0..=k`.
    pub sup_derivative: BTreeMap<String, Vec<f64>>,
    /// Hats whose support leaves the allowed set.
    pub support_violations: usize,
    /// Cells where some `ψ` or `φ` is not identically zero.
    pub cells: usize,
    pub points: usize,
    /// Largest moment residual over the fitted polynomials.
    pub moment_residual: f64,
    /// Largest residual of the order-`k` averages, which are not imposed.
    pub top_residual: f64,
}

impl<'a> Approximation<'a> {
    fn terms(&self, ch: &CellHats) -> Vec<Term> {
        let c = self.dom.center(ch.cell);
        ch.groups
            .iter()
            .map(|(mask, hs)| {
                let mut t = Term { mask: *mask, count: hs.len() as f64, xi: 0.0, taylor: WorldPolynomial::default(), families: [false; 3] };
                for &h in hs {
                    t.families[self.pou.hats[h].kind.family()] = true;
                    match &self.polys[h] {
                        None => t.xi += 1.0,
                        Some(p) => {
                            let j = p.jet(c, self.k - 1);
                            for (a, b) in multi_indices_upto(self.k - 1) {
                                t.taylor.coef[idx(a, b)] += j.get(a, b) / (factorial(a) * factorial(b));
                            }
                        }
                    }
                }
                t
            })
            .collect()
    }

    /// `u_m`, `u`, the hat sum and the normalized partition function per term.
    fn eval_terms(&self, cell: usize, terms: &[Term], x: [f64; 2], order: usize) -> (Jet, Jet, Jet, Vec<Jet>) {
        let c = self.dom.center(cell);
        let (wx, wy) = self.pou.weights(self.dom, cell, x, order);
        let u = self.field.jet(x, order);
        let d = [x[0] - c[0], x[1] - c[1]];
        let mut num = Jet::zero();
        let mut sum = Jet::zero();
        let mut hats = Vec::with_capacity(terms.len());
        for t in terms {
            let hj = PartitionOfUnity::mask_jet(t.mask, &wx, &wy, order);
            sum.add_scaled(t.count, &hj);
            let mut f = t.taylor.jet(d, order);
            if t.xi > 0.0 {
                f.add_scaled(t.xi, &u);
            }
            num.add_scaled(1.0, &hj.mul(&f, order));
            hats.push(hj);
        }
        let um = num.div(&sum, order);
        for hj in hats.iter_mut() {
            *hj = hj.div(&sum, order);
        }
        (um, u, sum, hats)
    }

    /// `u_m` rewritten as `u + Σ f_j (F_j - n_j u)`, which uses that the
    /// derivatives of the partition sum vanish.
    fn telescoped(&self, cell: usize, terms: &[Term], x: [f64; 2], order: usize) -> Jet {
        let c = self.dom.center(cell);
        let (wx, wy) = self.pou.weights(self.dom, cell, x, order);
        let u = self.field.jet(x, order);
        let d = [x[0] - c[0], x[1] - c[1]];
        let mut sum = Jet::zero();
        let mut num = Jet::zero();
        for t in terms {
            let hj = PartitionOfUnity::mask_jet(t.mask, &wx, &wy, order);
            sum.add_scaled(t.count, &hj);
            let mut f = t.taylor.jet(d, order);
            f.add_scaled(t.xi - t.count, &u);
            num.add_scaled(1.0, &hj.mul(&f, order));
        }
        let mut out = num.div(&sum, order);
        out.add_scaled(1.0, &u);
        out
    }

    /// `u_m` and its derivatives up to `order` at `x`.
    pub fn eval(&self, x: [f64; 2], order: usize) -> Result<Jet> {
        let cell = self.dom.point(x)?.cell;
        let ch = self.pou.cell_hats(self.dom, cell);
        let terms = self.terms(&ch);
        Ok(self.eval_terms(cell, &terms, x, order).0)
    }

    /// Largest `r^{|α|}·|∂^α(u_m - u)|` over `|α| ≤ k`, sampled inside the
    /// transition bands of every `stride`-th support cell. `r` is the
    /// mollifier radius, so the scale matches the size of the hat
    /// derivatives; for `u` of degree below `k` this is pure roundoff.
    pub fn reproduction_defect(&self, stride: usize) -> f64 {
        let (dom, k, r) = (self.dom, self.k, self.pou.radius);
        let mark = self.support_cells();
        let h = dom.h();
        let offs = [-0.5 * h + 0.7 * r, -0.5 * h + 1.4 * r, 0.0, 0.5 * h - 1.3 * r];
        let mut worst: f64 = 0.0;
        for cell in dom.interior_cells().filter(|&c| mark[c]).step_by(stride.max(1)) {
            let ch = self.pou.cell_hats(dom, cell);
            let terms = self.terms(&ch);
            let c = dom.center(cell);
            for ox in offs {
                for oy in offs {
                    let (um, u, _, _) = self.eval_terms(cell, &terms, [c[0] + ox, c[1] + oy], k);
                    for (a, b) in multi_indices_upto(k) {
                        worst = worst.max(r.powi((a + b) as i32) * (um.get(a, b) - u.get(a, b)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest `r^{|α|}·|∂^α|` difference between the direct and the
    /// telescoped expansion of `u_m`, sampled like
    /// [`Self::reproduction_defect`].
    pub fn telescoping_mismatch(&self, stride: usize) -> f64 {
        let (dom, k, r) = (self.dom, self.k, self.pou.radius);
        let mark = self.support_cells();
        let h = dom.h();
        let offs = [-0.5 * h + 0.7 * r, -0.5 * h + 1.4 * r, 0.0, 0.5 * h - 1.3 * r];
        let mut worst: f64 = 0.0;
        for cell in dom.interior_cells().filter(|&c| mark[c]).step_by(stride.max(1)) {
            let ch = self.pou.cell_hats(dom, cell);
            let terms = self.terms(&ch);
            let c = dom.center(cell);
            for ox in offs {
                for oy in offs {
                    let x = [c[0] + ox, c[1] + oy];
                    let (um, _, _, _) = self.eval_terms(cell, &terms, x, k);
                    let tel = self.telescoped(cell, &terms, x, k);
                    for (a, b) in multi_indices_upto(k) {
                        worst = worst.max(r.powi((a + b) as i32) * (um.get(a, b) - tel.get(a, b)).abs());
                    }
                }
            }
        }
        worst
    }

    /// Cells where some `ψ_Q` or `φ_i` does not vanish; elsewhere `u_m = u`.
    pub fn support_cells(&self) -> Vec<bool> {
        let dom = self.dom;
        let mut mark = vec![false; dom.len()];
        for h in self.pou.hats.iter().filter(|h| !matches!(h.kind, HatKind::Xi { .. })) {
            for c in h.cells.iter() {
                mark[c] = true;
                for v in neighbors8(c, dom.nx(), dom.ny()) {
                    mark[v] = dom.is_interior(v);
                }
            }
        }
        mark
    }

    /// Integrates `|∂^α(u - u_m)|^p` for `|α| = k` over the cells where it can
    /// be nonzero and records sup-norms and partition checks on the way.
    /// `allowed` marks the cells of `∪B_Q ∪ ∪B_i` and those outside every `U_i`.
    pub fn measure(&self, ps: &[f64], allowed: &[bool]) -> ApproxReport {
        let (dom, k) = (self.dom, self.k);
        let mark = self.support_cells();
        let thin = Rule::gauss(8);
        let flat = Rule::gauss(3);
        let sing = self.field.singular_point();
        let r2 = 2.0 * self.pou.radius;
        let mut mass = vec![vec![0.0; k + 1]; ps.len()];
        let mut outside = vec![0.0; ps.len()];
        let mut sup_um = vec![0.0f64; k + 1];
        let mut sup_u = vec![0.0f64; k + 1];
        let mut sum_dev: f64 = 0.0;
        let mut range: f64 = 0.0;
        let mut sup_der = [vec![0.0f64; k + 1], vec![0.0f64; k + 1], vec![0.0f64; k + 1]];
        let (mut cells, mut points) = (0, 0);
        for cell in dom.interior_cells() {
            if !mark[cell] {
                let j = self.field.jet(dom.center(cell), k);
                for n in 0..=k {
                    let s = multi_indices(n).map(|(a, b)| j.get(a, b).abs()).fold(0.0, f64::max);
                    sup_um[n] = sup_um[n].max(s);
                    sup_u[n] = sup_u[n].max(s);
                }
                continue;
            }
            cells += 1;
            let ch = self.pou.cell_hats(dom, cell);
            let terms = self.terms(&ch);
            let rect = Rect::of_cell(dom, cell);
            let pieces = |lo: f64, hi: f64, act_lo: bool, act_hi: bool| {
                let mut v = Vec::with_capacity(3);
                let (mut a, mut b) = (lo, hi);
                if act_lo {
                    v.push((lo, lo + r2, true));
                    a = lo + r2;
                }
                if act_hi {
                    b = hi - r2;
                }
                v.push((a, b, false));
                if act_hi {
                    v.push((hi - r2, hi, true));
                }
                v
            };
            let xs = pieces(rect.x[0], rect.x[1], ch.active[0], ch.active[1]);
            let ys = pieces(rect.y[0], rect.y[1], ch.active[2], ch.active[3]);
            let ok = allowed[cell];
            let mut visit = |x: [f64; 2], w: f64| {
                points += 1;
                let (um, u, sum, hats) = self.eval_terms(cell, &terms, x, k);
                for (pi, &p) in ps.iter().enumerate() {
                    for (n, (a, b)) in multi_indices(k).enumerate() {
                        let e = w * (u.get(a, b) - um.get(a, b)).abs().powf(p);
                        mass[pi][n] += e;
                        if !ok {
                            outside[pi] += e;
                        }
                    }
                }
                for n in 0..=k {
                    for (a, b) in multi_indices(n) {
                        sup_um[n] = sup_um[n].max(um.get(a, b).abs());
                        sup_u[n] = sup_u[n].max(u.get(a, b).abs());
                    }
                }
                let mut total = 0.0;
                for (t, f) in terms.iter().zip(&hats) {
                    total += t.count * f.value();
                    range = range.max(-f.value()).max(f.value() - 1.0);
                    for n in 0..=k {
                        let s = multi_indices(n).map(|(a, b)| f.get(a, b).abs()).fold(0.0, f64::max);
                        for fam in 0..3 {
                            if t.families[fam] {
                                sup_der[fam][n] = sup_der[fam][n].max(s);
                            }
                        }
                    }
                }
                debug_assert!(sum.value() > 0.0);
                sum_dev = sum_dev.max((total - 1.0).abs());
            };
            for &(x0, x1, tx) in &xs {
                for &(y0, y1, ty) in &ys {
                    let zone = Rect { x: [x0, x1], y: [y0, y1] };
                    if !tx && !ty {
                        for_each_point(zone, &flat, sing, ZONE_DEPTH, &mut visit);
                    } else {
                        let rx = if tx { &thin } else { &flat };
                        let ry = if ty { &thin } else { &flat };
                        for (y, wy) in ry.on(y0, y1) {
                            for (x, wx) in rx.on(x0, x1) {
                                visit([x, y], wx * wy);
                            }
                        }
                    }
                }
            }
        }
        let error = ps.iter().enumerate().map(|(pi, &p)| mass[pi].iter().map(|m| m.powf(1.0 / p)).sum()).collect();
        let error_outside = ps
            .iter()
            .enumerate()
            .map(|(pi, _)| {
                let total: f64 = mass[pi].iter().sum();
                if total > 0.0 {
                    outside[pi] / total
                } else {
                    0.0
                }
            })
            .collect();
        let (moment_residual, top_residual) = self
            .polys
            .iter()
            .flatten()
            .fold((0.0f64, 0.0f64), |acc, p| (acc.0.max(p.moment_residual), acc.1.max(p.top_residual)));
        ApproxReport {
            m: self.pou.m,
            k,
            ps: ps.to_vec(),
            error,
            error_outside,
            sup_um,
            sup_u,
            sum_deviation: sum_dev,
            range_violation: range,
            sup_derivative: FAMILIES.iter().zip(sup_der).map(|(n, v)| (n.to_string(), v)).collect(),
            support_violations: 0,
            cells,
            points,
            moment_residual,
            top_residual,
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|t| t as f64).product()
}

/// Cells of `∪B_Q` (`Q ∈ 𝒰^(m)`), of the groups, and outside every thick piece.
pub fn allowed_cells(dom: &GridDomain, ctd: &CoreTentacleDecomposition) -> Vec<bool> {
    let mut ok = vec![true; dom.len()];
    for &t in &ctd.thick {
        for c in ctd.pieces[t].cells.iter() {
            ok[c] = false;
        }
    }
    for q in &ctd.u_m {
        for c in ctd.core.nbhd[q].iter() {
            ok[c] = true;
        }
    }
    for g in &ctd.groups {
        for c in g.cells.iter() {
            ok[c] = true;
        }
    }
    ok
}

/// Builds the partition, fits the polynomials and measures `u_m` at one level.
pub fn approximate(dom: &GridDomain, dec: &WhitneyDecomposition, ctd: &CoreTentacleDecomposition, field: &dyn Field, k: usize, ps: &[f64]) -> Result<ApproxReport> {
    let pou = PartitionOfUnity::build(dom, ctd)?;
    let polys = fit_polynomials(dom, dec, &pou, field, k)?;
    let approx = assemble(dom, &pou, field, k, &polys)?;
    let mut report = approx.measure(ps, &allowed_cells(dom, ctd));
    report.support_violations = pou.support_violations(dom, dec, ctd).len();
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayRow {
    pub m: u32,
    pub error: f64,
    /// `‖∇^k u‖_{L^p(Ω∖Ω_{αm}^(1))}` at the fitted `α`.
    pub tail: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub k: usize,
    pub p: f64,
    pub rows: Vec<DecayRow>,
    /// `α` minimizing the spread of `error/tail` over the levels.
    pub alpha: f64,
    /// `max/min` of `error/tail`.
    pub ratio_spread: f64,
    /// Whether the error decreases strictly from level to level.
    pub decreasing: bool,
    pub final_over_initial: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecaySweep {
    pub reports: Vec<ApproxReport>,
    /// Levels where the decomposition is undefined or trivial, with the reason.
    pub skipped: Vec<(u32, String)>,
    /// One per exponent.
    pub decay: Vec<DecayReport>,
}

/// Least-squares slope of `log2 value` against `m`: the exponent `e` in
/// `value ≈ C·2^{e·m}`. Nonpositive values are dropped.
pub fn growth_slope(rows: &[(u32, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = rows.iter().filter(|r| r.1 > 0.0).map(|&(m, v)| (m as f64, v.log2())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Candidate `α` values for the tail fit.
fn alpha_grid() -> impl Iterator<Item = f64> {
    (30..100).map(|i| i as f64 / 100.0)
}

/// Approximates `u` at every level of `ms` and relates the error to the
/// tail norm of `∇^k u` outside the core at level `α·m`.
pub fn error_decay(dom: &GridDomain, dec: &WhitneyDecomposition, field: &dyn Field, k: usize, ps: &[f64], ms: &[u32], c0: f64) -> Result<DecaySweep> {
    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for &m in ms {
        let ctd = match decompose(dom, dec, m, c0) {
            Ok(c) => c,
            Err(Error::Level(msg)) => {
                skipped.push((m, msg));
                continue;
            }
            Err(e) => return Err(e),
        };
        let r = approximate(dom, dec, &ctd, field, k, ps)?;
        if r.cells == 0 {
            // Every cube is large enough for the core, so u_m = u.
            skipped.push((m, "no boundary hats at this level".to_string()));
            continue;
        }
        reports.push(r);
    }
    let mut cores: BTreeMap<u64, Option<crate::cellset::CellSet>> = BTreeMap::new();
    let mut decay = Vec::new();
    for (pi, &p) in ps.iter().enumerate() {
        let mass = DerivativeMass::new(dom, field, k, p);
        let mut best: Option<(f64, f64, Vec<f64>)> = None;
        for alpha in alpha_grid() {
            let tails: Vec<f64> = reports
                .iter()
                .map(|r| {
                    let level = 0.5f64.powf(alpha * r.m as f64);
                    let core = cores.entry(level.to_bits()).or_insert_with(|| core_cells_at(dom, dec, level));
                    match core {
                        Some(c) => mass.seminorm_where(dom, |x| !c.contains(x)),
                        None => mass.seminorm_where(dom, |_| true),
                    }
                })
                .collect();
            let ratios: Vec<f64> = reports.iter().zip(&tails).map(|(r, t)| r.error[pi] / t).collect();
            let spread = spread(&ratios);
            if best.as_ref().is_none_or(|b| spread <= b.1) {
                best = Some((alpha, spread, tails));
            }
        }
        let (alpha, ratio_spread, tails) = best.unwrap_or((f64::NAN, f64::NAN, Vec::new()));
        let rows: Vec<DecayRow> = reports
            .iter()
            .zip(&tails)
            .map(|(r, &t)| DecayRow { m: r.m, error: r.error[pi], tail: t, ratio: if t > 0.0 { r.error[pi] / t } else { f64::NAN } })
            .collect();
        let decreasing = rows.windows(2).all(|w| w[1].error < w[0].error);
        let final_over_initial = match (rows.first(), rows.last()) {
            (Some(a), Some(b)) if a.error > 0.0 => b.error / a.error,
            _ => 0.0,
        };
        decay.push(DecayReport { k, p, rows, alpha, ratio_spread, decreasing, final_over_initial });
    }
    Ok(DecaySweep { reports, skipped, decay })
}

/// `max/min` of the finite positive entries; 1 when there are none.
fn spread(v: &[f64]) -> f64 {
    let pos: Vec<f64> = v.iter().copied().filter(|x| x.is_finite() && *x > 0.0).collect();
    if pos.is_empty() {
        return if v.iter().all(|&x| x == 0.0) { 1.0 } else { f64::INFINITY };
    }
    let (lo, hi) = pos.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
    hi / lo
}
