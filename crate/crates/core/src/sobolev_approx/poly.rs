//! Polynomials of degree `k - 1` matching the averages of all derivatives of
//! order `≤ k - 1` of a field over a set of cells, and measured constants of
//! the polynomial estimates built on them.

use super::field::Field;
use super::jet::{idx, multi_indices, multi_indices_upto, Jet};
use super::quadrature::{for_each_point, integrate, DerivativeMass, Rect, Rule, SINGULAR_DEPTH};
use crate::error::{Error, Result};
use crate::grid::GridDomain;
use crate::properties::PropertyReport;
use crate::whitney::WhitneyDecomposition;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// `a!/(a-i)!`, zero when `i > a`.
fn falling(a: usize, i: usize) -> f64 {
    if i > a {
        return 0.0;
    }
    ((a - i + 1)..=a).map(|t| t as f64).product()
}

/// Polynomial in the normalized variable `t = (x - center)/scale`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolyApprox {
    pub k: usize,
    pub center: [f64; 2],
    pub scale: f64,
    /// Coefficient of `t_1^a t_2^b` at `idx(a, b)`, `a + b ≤ k - 1`.
    pub coef: [f64; 10],
    /// Cells of the set `E`.
    pub cells: Vec<usize>,
    /// Largest mismatch of the conditions `avg_E ∂^α(u - P) = 0`, `|α| ≤ k-1`,
    /// relative to the largest normalized average.
    pub moment_residual: f64,
    /// Largest `|avg_E ∂^α u|·scale^k` over `|α| = k`. These conditions are
    /// not imposed.
    pub top_residual: f64,
}

impl PolyApprox {
    pub fn degree_bound(&self) -> usize {
        self.k - 1
    }

    pub fn jet(&self, x: [f64; 2], order: usize) -> Jet {
        let t = [(x[0] - self.center[0]) / self.scale, (x[1] - self.center[1]) / self.scale];
        let mut j = Jet::zero();
        for (i, k) in multi_indices_upto(order.min(self.k - 1)) {
            let mut s = 0.0;
            for (a, b) in multi_indices_upto(self.k - 1) {
                if a >= i && b >= k {
                    s += self.coef[idx(a, b)] * falling(a, i) * falling(b, k) * t[0].powi((a - i) as i32) * t[1].powi((b - k) as i32);
                }
            }
            j.d[idx(i, k)] = s / self.scale.powi((i + k) as i32);
        }
        j
    }

    pub fn value(&self, x: [f64; 2]) -> f64 {
        self.jet(x, 0).value()
    }
}

/// Bounding box center and half-side of a set of cells.
fn frame(dom: &GridDomain, cells: &[usize]) -> ([f64; 2], f64) {
    let hh = 0.5 * dom.h();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for &c in cells {
        let x = dom.center(c);
        for d in 0..2 {
            lo[d] = lo[d].min(x[d] - hh);
            hi[d] = hi[d].max(x[d] + hh);
        }
    }
    let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    (center, 0.5 * (hi[0] - lo[0]).max(hi[1] - lo[1]))
}

/// `avg_E t^β` for `|β| ≤ n`, exact.
fn monomial_averages(dom: &GridDomain, cells: &[usize], center: [f64; 2], scale: f64, n: usize) -> [f64; 10] {
    let hh = 0.5 * dom.h();
    let mut m = [0.0; 10];
    let prim = |lo: f64, hi: f64, a: usize| (hi.powi(a as i32 + 1) - lo.powi(a as i32 + 1)) / (a as f64 + 1.0);
    for &c in cells {
        let x = dom.center(c);
        let t0 = [(x[0] - hh - center[0]) / scale, (x[1] - hh - center[1]) / scale];
        let t1 = [(x[0] + hh - center[0]) / scale, (x[1] + hh - center[1]) / scale];
        for (a, b) in multi_indices_upto(n) {
            m[idx(a, b)] += prim(t0[0], t1[0], a) * prim(t0[1], t1[1], b);
        }
    }
    // Each cell has normalized area (h/scale)².
    let area = cells.len() as f64 * (dom.h() / scale).powi(2);
    m.iter_mut().for_each(|v| *v /= area);
    m
}

/// `avg_E ∂^α u` for `|α| ≤ n`.
fn derivative_averages(dom: &GridDomain, field: &dyn Field, cells: &[usize], n: usize) -> [f64; 10] {
    let rule = Rule::gauss(4);
    let sing = field.singular_point();
    let mut a = [0.0; 10];
    for &c in cells {
        for_each_point(Rect::of_cell(dom, c), &rule, sing, SINGULAR_DEPTH, &mut |x, w| {
            a.iter_mut().zip(field.jet(x, n).d.iter()).for_each(|(s, d)| *s += w * d);
        });
    }
    let area = cells.len() as f64 * dom.h() * dom.h();
    a.iter_mut().for_each(|v| *v /= area);
    a
}

/// Coefficient of `c_γ` in `avg_E ∂^α P`, scaled by `scale^|α|`.
fn moment_entry(gamma: (usize, usize), alpha: (usize, usize), m: &[f64; 10]) -> f64 {
    if gamma.0 < alpha.0 || gamma.1 < alpha.1 {
        return 0.0;
    }
    falling(gamma.0, alpha.0) * falling(gamma.1, alpha.1) * m[idx(gamma.0 - alpha.0, gamma.1 - alpha.1)]
}

/// The polynomial `P_E` of degree `≤ k-1` with `avg_E ∂^α(u - P_E) = 0`
/// for `|α| ≤ k - 1`, solved from the highest order down.
pub fn fit_polynomial(dom: &GridDomain, field: &dyn Field, cells: &[usize], k: usize) -> Result<PolyApprox> {
    if !(1..=3).contains(&k) {
        return Err(Error::Parameter(format!("order k = {k} must lie in 1..=3")));
    }
    if cells.is_empty() {
        return Err(Error::Conditioning { cells: 0, msg: "empty set".into() });
    }
    if let Some(&c) = cells.iter().find(|&&c| c >= dom.len() || !dom.is_interior(c)) {
        return Err(Error::Domain(format!("cell {c} is not an interior cell")));
    }
    let (center, scale) = frame(dom, cells);
    let m = monomial_averages(dom, cells, center, scale, k - 1);
    let a = derivative_averages(dom, field, cells, k);
    // Normalized targets scale^|α| · avg ∂^α u.
    let target = |(x, y): (usize, usize)| a[idx(x, y)] * scale.powi((x + y) as i32);
    let mut coef = [0.0; 10];
    for n in (0..k).rev() {
        for alpha in multi_indices(n) {
            let mut rhs = target(alpha);
            for gamma in multi_indices_upto(k - 1) {
                if gamma != alpha {
                    rhs -= coef[idx(gamma.0, gamma.1)] * moment_entry(gamma, alpha, &m);
                }
            }
            let diag = moment_entry(alpha, alpha, &m);
            if !(diag.abs() > 1e-300) {
                return Err(Error::Conditioning { cells: cells.len(), msg: format!("zero pivot at order {n}") });
            }
            coef[idx(alpha.0, alpha.1)] = rhs / diag;
        }
    }
    let norm = multi_indices_upto(k - 1).map(|al| target(al).abs()).fold(0.0, f64::max);
    let mut moment_residual: f64 = 0.0;
    for alpha in multi_indices_upto(k - 1) {
        let lhs: f64 = multi_indices_upto(k - 1).map(|g| coef[idx(g.0, g.1)] * moment_entry(g, alpha, &m)).sum();
        let r = (lhs - target(alpha)).abs();
        moment_residual = moment_residual.max(if norm > 0.0 { r / norm } else { r });
    }
    let top_residual = multi_indices(k).map(|al| target(al).abs()).fold(0.0, f64::max);
    Ok(PolyApprox { k, center, scale, coef, cells: cells.to_vec(), moment_residual, top_residual })
}

/// Fits `P_Q` on the cells of Whitney cube `q`.
pub fn fit_on_cube(dom: &GridDomain, dec: &WhitneyDecomposition, field: &dyn Field, q: usize, k: usize) -> Result<PolyApprox> {
    let cells: Vec<usize> = dec.cubes[q].cells(dom.nx()).collect();
    fit_polynomial(dom, field, &cells, k)
}

fn lp_norm_on(rects: &[Rect], p: f64, f: impl Fn([f64; 2]) -> f64) -> f64 {
    let rule = Rule::gauss(6);
    rects.iter().map(|r| integrate(*r, &rule, None, 0, |x| f(x).abs().powf(p))).sum::<f64>().powf(1.0 / p)
}

/// Measured constants of the polynomial estimates.
#[derive(Clone, Debug, Serialize)]
pub struct EstimatesReport {
    /// `‖P‖_{L^p(E)} / ‖P‖_{L^p(F)}` over random `E, F ⊂ Q` with
    /// `|E|, |F| > η|Q|`.
    pub norm_equivalence: PropertyReport,
    /// `‖∂^α(P_Q - P_Q′)‖_{L^p(Q)} / (l(Q)^{k-|α|} ‖∇^k u‖_{L^p(∪F)})` over
    /// chains `F` from `Q` to `Q′`.
    pub chaining: PropertyReport,
}

/// Subsquares of a cube on a `4×4` subdivision.
fn subsquares(center: [f64; 2], l: f64) -> Vec<Rect> {
    let s = l / 4.0;
    let (x0, y0) = (center[0] - 0.5 * l, center[1] - 0.5 * l);
    (0..16)
        .map(|i| {
            let (a, b) = ((i % 4) as f64, (i / 4) as f64);
            Rect { x: [x0 + a * s, x0 + (a + 1.0) * s], y: [y0 + b * s, y0 + (b + 1.0) * s] }
        })
        .collect()
}

/// Ratio `‖P‖_{L^p(E)} / ‖P‖_{L^p(F)}` for `subsets` random pairs of unions of
/// subsquares of the cube, each with more than `η·16` of the 16 subsquares.
pub fn norm_equivalence_ratio(poly: &PolyApprox, center: [f64; 2], l: f64, p: f64, eta: f64, subsets: usize, rng: &mut ChaCha8Rng) -> f64 {
    let squares = subsquares(center, l);
    let min_count = ((eta * 16.0).floor() as usize + 1).min(16);
    let pick = |rng: &mut ChaCha8Rng| -> Vec<Rect> {
        let mut idx: Vec<usize> = (0..16).collect();
        idx.shuffle(rng);
        let n = min_count + (rand::Rng::random_range(rng, 0..=(16 - min_count)));
        idx[..n].iter().map(|&i| squares[i]).collect()
    };
    let mut worst: f64 = 0.0;
    for _ in 0..subsets {
        let (e, f) = (pick(rng), pick(rng));
        let ne = lp_norm_on(&e, p, |x| poly.value(x));
        let nf = lp_norm_on(&f, p, |x| poly.value(x));
        if nf > 0.0 {
            worst = worst.max(ne / nf);
        }
    }
    worst
}

/// Measures both polynomial-estimate constants. Each chain is a sequence of
/// face-adjacent cubes from `Q` to `Q′`.
#[allow(clippy::too_many_arguments)]
pub fn polynomial_estimates_check(
    dom: &GridDomain,
    dec: &WhitneyDecomposition,
    field: &dyn Field,
    k: usize,
    p: f64,
    chains: &[Vec<usize>],
    eta: f64,
    seed: u64,
) -> Result<EstimatesReport> {
    let mass = DerivativeMass::new(dom, field, k, p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut norm_eq = PropertyReport::new("norm_equivalence", dom.h(), seed);
    let mut chaining = PropertyReport::new("chaining", dom.h(), seed);
    let mut fits = std::collections::BTreeMap::new();
    for chain in chains {
        for &q in [chain[0], *chain.last().unwrap()].iter() {
            if let std::collections::btree_map::Entry::Vacant(e) = fits.entry(q) {
                e.insert(fit_on_cube(dom, dec, field, q, k)?);
            }
        }
        let (a, b) = (chain[0], *chain.last().unwrap());
        let (qa, pa, pb) = (&dec.cubes[a], &fits[&a], &fits[&b]);
        let ratio = norm_equivalence_ratio(pa, qa.center, qa.l, p, eta, 4, &mut rng);
        norm_eq.push(vec![qa.center], ratio, None);

        let mut union: Vec<usize> = chain.iter().flat_map(|&q| dec.cubes[q].cells(dom.nx())).collect();
        union.sort_unstable();
        union.dedup();
        let grad = mass.mass.iter().map(|m| union.iter().map(|&c| m[c]).sum::<f64>().powf(1.0 / p)).sum::<f64>();
        let rect = [Rect { x: [qa.center[0] - 0.5 * qa.l, qa.center[0] + 0.5 * qa.l], y: [qa.center[1] - 0.5 * qa.l, qa.center[1] + 0.5 * qa.l] }];
        let mut worst: f64 = 0.0;
        for (i, j) in multi_indices_upto(k - 1) {
            let lhs = lp_norm_on(&rect, p, |x| pa.jet(x, k - 1).get(i, j) - pb.jet(x, k - 1).get(i, j));
            let rhs = qa.l.powi((k - i - j) as i32) * grad;
            if rhs > 0.0 {
                worst = worst.max(lhs / rhs);
            } else if lhs > 1e-12 {
                worst = f64::INFINITY;
            }
        }
        chaining.push(vec![qa.center, dec.cubes[b].center], worst, Some(chain.len()));
    }
    Ok(EstimatesReport { norm_equivalence: norm_eq.finish(None), chaining: chaining.finish(None) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::sobolev_approx::field::{PowerSingularity, Wave, WorldPolynomial};
    use crate::whitney::whitney_decompose;
    use approx::assert_relative_eq;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    /// Dense solve of the full moment system with the basis in a given order.
    fn dense_fit(dom: &GridDomain, field: &dyn Field, cells: &[usize], k: usize, order: &[(usize, usize)]) -> [f64; 10] {
        let (center, scale) = frame(dom, cells);
        let m = monomial_averages(dom, cells, center, scale, k - 1);
        let a = derivative_averages(dom, field, cells, k);
        let n = order.len();
        let mat = DMatrix::from_fn(n, n, |r, c| moment_entry(order[c], order[r], &m));
        let rhs = DVector::from_fn(n, |r, _| a[idx(order[r].0, order[r].1)] * scale.powi((order[r].0 + order[r].1) as i32));
        let sol = mat.lu().solve(&rhs).expect("nonsingular");
        let mut coef = [0.0; 10];
        for (i, g) in order.iter().enumerate() {
            coef[idx(g.0, g.1)] = sol[i];
        }
        coef
    }

    #[test]
    fn x_squared_on_the_unit_square() {
        let fx = gallery::square(1.0, 1.0 / 16.0).unwrap();
        let cells: Vec<usize> = fx.domain.interior_cells().collect();
        let u = WorldPolynomial::from_terms(&[((2, 0), 1.0)]);
        let p = fit_polynomial(&fx.domain, &u, &cells, 2).unwrap();
        // avg ∂x(x²) = 1, avg ∂y = 0 and avg x² = 1/3 give P = x - 1/6.
        let j = p.jet([0.0, 0.0], 1);
        assert_relative_eq!(j.value(), -1.0 / 6.0, epsilon = 1e-13);
        assert_relative_eq!(j.get(1, 0), 1.0, epsilon = 1e-13);
        assert_relative_eq!(j.get(0, 1), 0.0, epsilon = 1e-13);
        assert!(p.moment_residual < 1e-10);
        let order = [(0, 1), (1, 0), (0, 0)];
        let dense = dense_fit(&fx.domain, &u, &cells, 2, &order);
        for i in 0..3 {
            assert_relative_eq!(dense[i], p.coef[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn order_one_fit_is_the_mean() {
        let fx = gallery::disk(1.0, 1.0 / 32.0).unwrap();
        let cells: Vec<usize> = fx.domain.interior_cells().filter(|&c| fx.domain.center(c)[1] > 0.3).collect();
        let u = Wave { amp: 1.0, w: [1.0, 2.0], phase: 0.3 };
        let p = fit_polynomial(&fx.domain, &u, &cells, 1).unwrap();
        let rule = Rule::gauss(4);
        let total: f64 = cells.iter().map(|&c| integrate(Rect::of_cell(&fx.domain, c), &rule, None, 0, |x| u.jet(x, 0).value())).sum();
        let mean = total / (cells.len() as f64 * fx.domain.h().powi(2));
        assert_relative_eq!(p.value([0.3, 0.7]), mean, max_relative = 1e-12);
    }

    #[test]
    fn triangular_solve_matches_dense_oracle_in_any_basis_order() {
        let fx = gallery::slit_disk(1.0 / 32.0).unwrap();
        let dom = &fx.domain;
        let cells: Vec<usize> = dom.interior_cells().filter(|&c| dom.center(c)[0] > 0.1 && dom.center(c)[1] > 0.2).collect();
        let u = PowerSingularity { b: [-1.0, 0.0], s: 2.4 };
        let p = fit_polynomial(dom, &u, &cells, 3).unwrap();
        assert!(p.moment_residual < 1e-10, "{}", p.moment_residual);
        let mut order: Vec<(usize, usize)> = multi_indices_upto(2).collect();
        for rot in 0..order.len() {
            order.rotate_left(1);
            let mut o = order.clone();
            if rot % 2 == 1 {
                o.reverse();
            }
            let dense = dense_fit(dom, &u, &cells, 3, &o);
            for i in 0..6 {
                assert_relative_eq!(dense[i], p.coef[i], epsilon = 1e-10, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn empty_sets_and_bad_orders_are_rejected() {
        let fx = gallery::square(1.0, 1.0 / 8.0).unwrap();
        let u = WorldPolynomial::default();
        assert!(matches!(fit_polynomial(&fx.domain, &u, &[], 2), Err(Error::Conditioning { cells: 0, .. })));
        let c = fx.domain.x0();
        assert!(matches!(fit_polynomial(&fx.domain, &u, &[c], 4), Err(Error::Parameter(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn low_degree_polynomials_are_fixed_points(
            coef in proptest::collection::vec(-3.0f64..3.0, 6),
            k in 1usize..=3,
            i0 in 0usize..8, j0 in 0usize..8, w in 1usize..8, hgt in 1usize..8,
        ) {
            let fx = gallery::square(1.0, 1.0 / 16.0).unwrap();
            let dom = &fx.domain;
            let terms: Vec<((usize, usize), f64)> = multi_indices_upto(k - 1).zip(coef.iter().copied()).collect();
            let u = WorldPolynomial::from_terms(&terms);
            let cells: Vec<usize> = dom.interior_cells().filter(|&c| {
                let (i, j) = dom.ij(c);
                (i0 + 1..=i0 + w).contains(&i) && (j0 + 1..=j0 + hgt).contains(&j)
            }).collect();
            let p = fit_polynomial(dom, &u, &cells, k).unwrap();
            for x in [[0.1, 0.9], [0.5, 0.5], [0.8, 0.2]] {
                let (a, b) = (p.jet(x, k - 1), u.jet(x, k - 1));
                for n in 0..10 {
                    prop_assert!((a.d[n] - b.d[n]).abs() < 1e-9 * (1.0 + b.d[n].abs()));
                }
            }
        }
    }

    #[test]
    fn norm_equivalence_of_constants_is_the_volume_ratio() {
        let fx = gallery::square(1.0, 1.0 / 16.0).unwrap();
        let cells: Vec<usize> = fx.domain.interior_cells().collect();
        let u = WorldPolynomial::from_terms(&[((0, 0), 2.5)]);
        let p = fit_polynomial(&fx.domain, &u, &cells, 2).unwrap();
        let squares = subsquares([0.5, 0.5], 1.0);
        for (ne, nf) in [(4usize, 12usize), (9, 3), (16, 16)] {
            let e = lp_norm_on(&squares[..ne], 1.5, |x| p.value(x));
            let f = lp_norm_on(&squares[16 - nf..], 1.5, |x| p.value(x));
            assert_relative_eq!(e / f, (ne as f64 / nf as f64).powf(1.0 / 1.5), max_relative = 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let eta = 0.25;
        let worst = norm_equivalence_ratio(&p, [0.5, 0.5], 1.0, 1.5, eta, 50, &mut rng);
        assert!(worst <= eta.powf(-1.0 / 1.5) + 1e-12);
        let same = lp_norm_on(&squares[2..9], 2.0, |x| p.value(x)) / lp_norm_on(&squares[2..9], 2.0, |x| p.value(x));
        assert_eq!(same, 1.0);
    }

    #[test]
    fn chaining_vanishes_for_low_degree_fields_and_is_finite_otherwise() {
        let fx = gallery::disk(1.0, 1.0 / 64.0).unwrap();
        let dom = &fx.domain;
        let dec = whitney_decompose(dom).unwrap();
        let q0 = dec.cube_of_cell(dom.x0()).unwrap();
        let chains: Vec<Vec<usize>> = dec.adjacency[q0].iter().map(|&q| vec![q0, q]).collect();
        let lin = WorldPolynomial::from_terms(&[((1, 0), 1.0), ((0, 0), 0.5)]);
        let r = polynomial_estimates_check(dom, &dec, &lin, 2, 2.0, &chains, 0.25, 1).unwrap();
        assert_eq!(r.chaining.constant, 0.0);
        let u = PowerSingularity { b: fx.boundary_point, s: 1.6 };
        let r = polynomial_estimates_check(dom, &dec, &u, 2, 2.0, &chains, 0.25, 1).unwrap();
        assert!(r.chaining.constant.is_finite() && r.chaining.constant > 0.0);
        assert!(r.norm_equivalence.constant >= 1.0 && r.norm_equivalence.constant.is_finite());
    }
}
