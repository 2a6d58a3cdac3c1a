//! Functions with analytic derivatives, used as the `u` being approximated.

use super::jet::{idx, multi_indices_upto, Jet, MAX_ORDER};

pub trait Field: Send + Sync {
    /// Value and derivatives up to `order` at `p`.
    fn jet(&self, p: [f64; 2], order: usize) -> Jet;

    /// Point where derivatives blow up, if any; quadrature refines toward it.
    fn singular_point(&self) -> Option<[f64; 2]> {
        None
    }
}

/// `|x - b|^s`.
#[derive(Clone, Debug)]
pub struct PowerSingularity {
    pub b: [f64; 2],
    pub s: f64,
}

impl Field for PowerSingularity {
    fn jet(&self, p: [f64; 2], order: usize) -> Jet {
        let (dx, dy) = (p[0] - self.b[0], p[1] - self.b[1]);
        let t = dx * dx + dy * dy;
        let mut r2 = Jet::linear(t, [2.0 * dx, 2.0 * dy]);
        r2.d[idx(2, 0)] = 2.0;
        r2.d[idx(0, 2)] = 2.0;
        // t^{s/2} and its derivatives in t.
        let e = 0.5 * self.s;
        let mut f = [0.0; 4];
        let mut c = 1.0;
        for (n, fv) in f.iter_mut().enumerate() {
            *fv = c * t.powf(e - n as f64);
            c *= e - n as f64;
        }
        r2.compose(&f, order)
    }

    fn singular_point(&self) -> Option<[f64; 2]> {
        Some(self.b)
    }
}

/// `amp · sin(w·x + phase)`.
#[derive(Clone, Debug)]
pub struct Wave {
    pub amp: f64,
    pub w: [f64; 2],
    pub phase: f64,
}

impl Field for Wave {
    fn jet(&self, p: [f64; 2], order: usize) -> Jet {
        let t = self.w[0] * p[0] + self.w[1] * p[1] + self.phase;
        let (s, c) = t.sin_cos();
        let f = [self.amp * s, self.amp * c, -self.amp * s, -self.amp * c];
        Jet::linear(t, self.w).compose(&f, order)
    }
}

/// Polynomial in world coordinates, `Σ c_ab x^a y^b` with `a + b ≤ 3`.
#[derive(Clone, Debug, Default)]
pub struct WorldPolynomial {
    pub coef: [f64; 10],
}

impl WorldPolynomial {
    pub fn from_terms(terms: &[((usize, usize), f64)]) -> Self {
        let mut coef = [0.0; 10];
        for &((a, b), c) in terms {
            assert!(a + b <= MAX_ORDER, "degree above {MAX_ORDER}");
            coef[idx(a, b)] += c;
        }
        WorldPolynomial { coef }
    }

    pub fn degree(&self) -> Option<usize> {
        multi_indices_upto(MAX_ORDER).filter(|&(a, b)| self.coef[idx(a, b)] != 0.0).map(|(a, b)| a + b).max()
    }
}

fn falling(x: f64, a: usize, i: usize) -> f64 {
    // d^i/dx^i x^a = a!/(a-i)! x^{a-i}.
    if i > a {
        return 0.0;
    }
    let mut c = 1.0;
    for t in 0..i {
        c *= (a - t) as f64;
    }
    c * x.powi((a - i) as i32)
}

impl Field for WorldPolynomial {
    fn jet(&self, p: [f64; 2], order: usize) -> Jet {
        let mut j = Jet::zero();
        for (i, k) in multi_indices_upto(order) {
            let mut s = 0.0;
            for (a, b) in multi_indices_upto(MAX_ORDER) {
                let c = self.coef[idx(a, b)];
                if c != 0.0 {
                    s += c * falling(p[0], a, i) * falling(p[1], b, k);
                }
            }
            j.d[idx(i, k)] = s;
        }
        j
    }
}

/// Sum of fields.
pub struct FieldSum(pub Vec<Box<dyn Field>>);

impl Field for FieldSum {
    fn jet(&self, p: [f64; 2], order: usize) -> Jet {
        let mut j = Jet::zero();
        for f in &self.0 {
            j.add_scaled(1.0, &f.jet(p, order));
        }
        j
    }

    fn singular_point(&self) -> Option<[f64; 2]> {
        self.0.iter().find_map(|f| f.singular_point())
    }
}

/// Exponent of `|x - b|^s` in the singular fixture for order `k` and
/// exponent `p`: inside `(k - 2/p, k)`, so `∇^k u ∈ L^p` while `∇^k u` is
/// unbounded.
pub fn singular_exponent(k: usize, p: f64) -> f64 {
    k as f64 - 0.8 / p
}

/// Largest central-difference mismatch between the analytic derivatives of
/// order `1..=order` and differences of the next lower order, relative to
/// the derivative size, over `points`.
pub fn finite_difference_mismatch(f: &dyn Field, points: &[[f64; 2]], order: usize, step: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for &p in points {
        let at = |q: [f64; 2]| f.jet(q, order);
        let j = at(p);
        let (xp, xm) = (at([p[0] + step, p[1]]), at([p[0] - step, p[1]]));
        let (yp, ym) = (at([p[0], p[1] + step]), at([p[0], p[1] - step]));
        for (a, b) in multi_indices_upto(order - 1) {
            let i = idx(a, b);
            let dx = (xp.d[i] - xm.d[i]) / (2.0 * step);
            let dy = (yp.d[i] - ym.d[i]) / (2.0 * step);
            let (ex, ey) = (j.get(a + 1, b), j.get(a, b + 1));
            let scale = ex.abs().max(ey.abs()).max(1.0);
            worst = worst.max((dx - ex).abs() / scale).max((dy - ey).abs() / scale);
        }
    }
    worst
}
