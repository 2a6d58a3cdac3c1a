//! Partial derivatives of a function of two variables at one point, up to
//! order three, with the Leibniz product and quotient rules.

/// Highest supported derivative order.
pub const MAX_ORDER: usize = 3;
const LEN: usize = 10;

/// Storage index of `∂_x^a ∂_y^b`.
#[inline]
pub const fn idx(a: usize, b: usize) -> usize {
    let n = a + b;
    n * (n + 1) / 2 + b
}

/// Multi-indices `(a, b)` with `a + b = n`.
pub fn multi_indices(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=n).rev().map(move |a| (a, n - a))
}

/// Multi-indices with `a + b ≤ n`, by increasing order.
pub fn multi_indices_upto(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=n).flat_map(multi_indices)
}

const BINOM: [[f64; 4]; 4] = [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [1.0, 2.0, 1.0, 0.0], [1.0, 3.0, 3.0, 1.0]];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub d: [f64; LEN],
}

impl Default for Jet {
    fn default() -> Self {
        Jet::zero()
    }
}

impl Jet {
    pub const fn zero() -> Self {
        Jet { d: [0.0; LEN] }
    }

    pub fn constant(c: f64) -> Self {
        let mut j = Jet::zero();
        j.d[0] = c;
        j
    }

    /// The affine function `c + g·(x - p)` seen from `p`.
    pub fn linear(c: f64, g: [f64; 2]) -> Self {
        let mut j = Jet::constant(c);
        j.d[idx(1, 0)] = g[0];
        j.d[idx(0, 1)] = g[1];
        j
    }

    /// Product of a function of `x` and a function of `y`, given their
    /// derivatives `fx[a] = f^(a)(x)`.
    pub fn tensor(fx: &[f64; 4], fy: &[f64; 4], order: usize) -> Self {
        let mut j = Jet::zero();
        for (a, b) in multi_indices_upto(order) {
            j.d[idx(a, b)] = fx[a] * fy[b];
        }
        j
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.d[0]
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.d[idx(a, b)]
    }

    pub fn add_scaled(&mut self, s: f64, o: &Jet) {
        for (x, y) in self.d.iter_mut().zip(o.d.iter()) {
            *x += s * y;
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        let mut j = *self;
        j.d.iter_mut().for_each(|x| *x *= s);
        j
    }

    pub fn sub(&self, o: &Jet) -> Jet {
        let mut j = *self;
        j.add_scaled(-1.0, o);
        j
    }

    pub fn mul(&self, o: &Jet, order: usize) -> Jet {
        let mut out = Jet::zero();
        for (a, b) in multi_indices_upto(order) {
            let mut s = 0.0;
            for i in 0..=a {
                for k in 0..=b {
                    s += BINOM[a][i] * BINOM[b][k] * self.d[idx(i, k)] * o.d[idx(a - i, b - k)];
                }
            }
            out.d[idx(a, b)] = s;
        }
        out
    }

    /// `self / o`; `o` must not vanish at the point.
    pub fn div(&self, o: &Jet, order: usize) -> Jet {
        let mut q = Jet::zero();
        let g0 = o.d[0];
        for (a, b) in multi_indices_upto(order) {
            let mut s = self.d[idx(a, b)];
            for i in 0..=a {
                for k in 0..=b {
                    if i + k > 0 {
                        s -= BINOM[a][i] * BINOM[b][k] * o.d[idx(i, k)] * q.d[idx(a - i, b - k)];
                    }
                }
            }
            q.d[idx(a, b)] = s / g0;
        }
        q
    }

    /// `f ∘ self` for a univariate `f` with derivatives `f_derivs[n] = f^(n)`
    /// at the value of `self`.
    pub fn compose(&self, f_derivs: &[f64; 4], order: usize) -> Jet {
        let mut delta = *self;
        delta.d[0] = 0.0;
        let mut out = Jet::constant(f_derivs[0]);
        let mut power = Jet::constant(1.0);
        let mut fact = 1.0;
        for (n, fd) in f_derivs.iter().enumerate().take(order + 1).skip(1) {
            power = power.mul(&delta, order);
            fact *= n as f64;
            out.add_scaled(fd / fact, &power);
        }
        out
    }

    /// Euclidean norm of the order-`n` derivatives, counting each mixed
    /// partial once per ordering.
    pub fn order_norm(&self, n: usize) -> f64 {
        multi_indices(n).map(|(a, b)| BINOM[n][a] * self.get(a, b).powi(2)).sum::<f64>().sqrt()
    }
}
