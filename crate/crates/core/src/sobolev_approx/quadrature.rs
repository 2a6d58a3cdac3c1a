//! Gauss–Legendre rules on rectangles and per-cell `L^p` masses of the
//! order-`k` derivatives of a field.

use super::field::Field;
use super::jet::{idx, multi_indices};
use crate::error::{Error, Result};
use crate::grid::GridDomain;

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// `n`-point Gauss–Legendre rule by Newton iteration on `P_n`.
    pub fn gauss(n: usize) -> Rule {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Rule { nodes, weights }
    }

    /// Points and weights mapped to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (c, s) = (0.5 * (a + b), 0.5 * (b - a));
        self.nodes.iter().zip(&self.weights).map(move |(&t, &w)| (c + s * t, s * w))
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Rect {
    pub fn of_cell(dom: &GridDomain, cell: usize) -> Rect {
        let c = dom.center(cell);
        let hh = 0.5 * dom.h();
        Rect { x: [c[0] - hh, c[0] + hh], y: [c[1] - hh, c[1] + hh] }
    }

    pub fn area(&self) -> f64 {
        (self.x[1] - self.x[0]) * (self.y[1] - self.y[0])
    }

    /// Distance from `p` to the rectangle.
    pub fn dist(&self, p: [f64; 2]) -> f64 {
        let dx = (self.x[0] - p[0]).max(p[0] - self.x[1]).max(0.0);
        let dy = (self.y[0] - p[1]).max(p[1] - self.y[1]).max(0.0);
        dx.hypot(dy)
    }

    fn quarters(&self) -> [Rect; 4] {
        let xm = 0.5 * (self.x[0] + self.x[1]);
        let ym = 0.5 * (self.y[0] + self.y[1]);
        [
            Rect { x: [self.x[0], xm], y: [self.y[0], ym] },
            Rect { x: [xm, self.x[1]], y: [self.y[0], ym] },
            Rect { x: [self.x[0], xm], y: [ym, self.y[1]] },
            Rect { x: [xm, self.x[1]], y: [ym, self.y[1]] },
        ]
    }
}

/// Tensor rule on a rectangle; rectangles within one diameter of
/// `singular` are split into quarters down to `depth` levels.
pub fn for_each_point(rect: Rect, rule: &Rule, singular: Option<[f64; 2]>, depth: u32, f: &mut impl FnMut([f64; 2], f64)) {
    if let Some(b) = singular {
        let diam = (rect.x[1] - rect.x[0]).hypot(rect.y[1] - rect.y[0]);
        if depth > 0 && rect.dist(b) < diam {
            for q in rect.quarters() {
                for_each_point(q, rule, singular, depth - 1, f);
            }
            return;
        }
    }
    for (y, wy) in rule.on(rect.y[0], rect.y[1]) {
        for (x, wx) in rule.on(rect.x[0], rect.x[1]) {
            f([x, y], wx * wy);
        }
    }
}

pub fn integrate(rect: Rect, rule: &Rule, singular: Option<[f64; 2]>, depth: u32, mut f: impl FnMut([f64; 2]) -> f64) -> f64 {
    let mut s = 0.0;
    for_each_point(rect, rule, singular, depth, &mut |x, w| s += w * f(x));
    s
}

/// Refinement depth toward a singular point used for cell integrals.
pub const SINGULAR_DEPTH: u32 = 10;

/// `∫_cell |∂^α u|^p` for every interior cell and every `|α| = k`.
#[derive(Clone, Debug)]
pub struct DerivativeMass {
    pub k: usize,
    pub p: f64,
    /// `mass[a][cell]` for the `a`-th multi-index of order `k` (`∂_x^{k-a}∂_y^a`).
    pub mass: Vec<Vec<f64>>,
}

impl DerivativeMass {
    pub fn new(dom: &GridDomain, field: &dyn Field, k: usize, p: f64) -> Self {
        let rule = Rule::gauss(3);
        let sing = field.singular_point();
        let mut mass = vec![vec![0.0; dom.len()]; k + 1];
        for c in dom.interior_cells() {
            for_each_point(Rect::of_cell(dom, c), &rule, sing, SINGULAR_DEPTH, &mut |x, w| {
                let j = field.jet(x, k);
                for (n, (a, b)) in multi_indices(k).enumerate() {
                    mass[n][c] += w * j.d[idx(a, b)].abs().powf(p);
                }
            });
        }
        DerivativeMass { k, p, mass }
    }

    /// `Σ_{|α|=k} ‖∂^α u‖_{L^p}` over the cells for which `keep` holds.
    pub fn seminorm_where(&self, dom: &GridDomain, keep: impl Fn(usize) -> bool) -> f64 {
        let cells: Vec<usize> = dom.interior_cells().filter(|&c| keep(c)).collect();
        self.mass.iter().map(|m| cells.iter().map(|&c| m[c]).sum::<f64>().powf(1.0 / self.p)).sum()
    }
}

/// `Σ_{|α|=k} ‖∂^α f‖_{L^p(region)}` by Gauss quadrature on every cell of
/// the region, refined toward the field's singular point.
pub fn seminorm(dom: &GridDomain, field: &dyn Field, region: &[usize], k: usize, p: f64) -> Result<f64> {
    if !(1.0..f64::INFINITY).contains(&p) {
        return Err(Error::Parameter(format!("exponent p = {p} must lie in [1, ∞)")));
    }
    if let Some(&c) = region.iter().find(|&&c| c >= dom.len() || !dom.is_interior(c)) {
        return Err(Error::Domain(format!("cell {c} is not an interior cell of the grid")));
    }
    let rule = Rule::gauss(3);
    let sing = field.singular_point();
    let mut mass = vec![0.0; k + 1];
    for &c in region {
        for_each_point(Rect::of_cell(dom, c), &rule, sing, SINGULAR_DEPTH, &mut |x, w| {
            let j = field.jet(x, k);
            for (n, (a, b)) in multi_indices(k).enumerate() {
                mass[n] += w * j.d[idx(a, b)].abs().powf(p);
            }
        });
    }
    Ok(mass.iter().map(|m| m.powf(1.0 / p)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::sobolev_approx::field::{PowerSingularity, WorldPolynomial};
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rules_are_exact_to_degree_2n_minus_1() {
        for n in 1..=8 {
            let r = Rule::gauss(n);
            for d in 0..2 * n {
                let got: f64 = r.on(0.0, 2.0).map(|(x, w)| w * x.powi(d as i32)).sum();
                let want = 2f64.powi(d as i32 + 1) / (d as f64 + 1.0);
                assert_relative_eq!(got, want, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn zero_field_has_zero_seminorm() {
        let fx = gallery::square(1.0, 1.0 / 16.0).unwrap();
        let cells: Vec<usize> = fx.domain.interior_cells().collect();
        let z = WorldPolynomial::default();
        assert_eq!(seminorm(&fx.domain, &z, &cells, 1, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_field_on_unit_square_has_unit_gradient_norm() {
        let fx = gallery::square(1.0, 1.0 / 16.0).unwrap();
        let cells: Vec<usize> = fx.domain.interior_cells().collect();
        let x = WorldPolynomial::from_terms(&[((1, 0), 1.0)]);
        assert_relative_eq!(seminorm(&fx.domain, &x, &cells, 1, 2.0).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn seminorm_is_additive_over_disjoint_regions() {
        let fx = gallery::disk(1.0, 1.0 / 32.0).unwrap();
        let f = PowerSingularity { b: fx.boundary_point, s: 0.6 };
        let (left, right): (Vec<usize>, Vec<usize>) = fx.domain.interior_cells().partition(|&c| fx.domain.center(c)[0] < 0.0);
        let all: Vec<usize> = fx.domain.interior_cells().collect();
        let p = 2.0;
        let whole = seminorm(&fx.domain, &f, &all, 1, p).unwrap();
        // Additivity holds for the p-th powers of the component norms.
        let dm = DerivativeMass::new(&fx.domain, &f, 1, p);
        let mass = |cells: &[usize]| -> f64 { dm.mass.iter().map(|m| cells.iter().map(|&c| m[c]).sum::<f64>()).sum() };
        assert_relative_eq!(mass(&left) + mass(&right), mass(&all), max_relative = 1e-12);
        assert_relative_eq!(dm.seminorm_where(&fx.domain, |_| true), whole, max_relative = 1e-12);
    }

    #[test]
    fn gradient_energy_of_boundary_singularity_matches_polar_integral() {
        // In polar coordinates about b = (1, 0) the unit disk is r < -2cos θ,
        // so ∫|∇|x-b|^s|² = (s/2) ∫ (-2cos θ)^{2s} dθ over θ ∈ (π/2, 3π/2).
        let s = 0.6;
        let n = 20_000;
        let step = std::f64::consts::PI / n as f64;
        let polar: f64 = (0..n)
            .map(|i| {
                let t = std::f64::consts::FRAC_PI_2 + (i as f64 + 0.5) * step;
                (-2.0 * t.cos()).powf(2.0 * s)
            })
            .sum::<f64>()
            * step
            * s
            / 2.0;
        let fx = gallery::disk(1.0, 1.0 / 256.0).unwrap();
        assert_eq!(fx.boundary_point, [1.0, 0.0]);
        let f = PowerSingularity { b: [1.0, 0.0], s };
        let dm = DerivativeMass::new(&fx.domain, &f, 1, 2.0);
        let energy: f64 = dm.mass.iter().map(|m| m.iter().sum::<f64>()).sum();
        assert_relative_eq!(energy, polar, max_relative = 0.01);
    }

    #[test]
    fn cells_outside_the_domain_are_rejected() {
        let fx = gallery::disk(1.0, 1.0 / 16.0).unwrap();
        let z = WorldPolynomial::default();
        assert!(matches!(seminorm(&fx.domain, &z, &[0], 1, 2.0), Err(Error::Domain(_))));
        assert!(matches!(seminorm(&fx.domain, &z, &[], 1, 0.5), Err(Error::Parameter(_))));
    }
}
