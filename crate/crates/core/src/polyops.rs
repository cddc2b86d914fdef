//! Complex polynomial helpers and the `d` coefficient tables.
//!
//! Both tables come from dividing a polynomial that vanishes at the pole
//! `k_{nj}` by `in + k(1 - omega_j) = (1 - omega_j)(k - k_{nj})`:
//!
//! * `d_alpha(n, alpha)`: numerator `(i alpha + k)^{2m} - k^{2m} - [same at k_{nj}]`,
//!   quotient of degree `2m - 2`.
//! * `d_snu(n, s, nu)`: numerator `(is + k)^nu - (is + k_{nj})^nu`, quotient of
//!   degree `nu - 1`.
//!
//! The division is a Horner pass at the known root. Its remainder is checked,
//! never dropped: a nonzero remainder means the pole is wrong.

use crate::lattice::{pole, ModelOrder};
use crate::{Error, Result, C64};

/// Dense polynomial in `k`; `coeffs[t]` multiplies `k^t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CPoly {
    coeffs: Vec<C64>,
}

impl CPoly {
    /// Trailing zero coefficients are trimmed; the zero polynomial has no coefficients.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, k: C64) -> C64 {
        self.coeffs
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &c| acc * k + c)
    }

    /// `(k - root) * self`.
    pub fn mul_linear(&self, root: C64) -> CPoly {
        let mut out = vec![C64::new(0.0, 0.0); self.coeffs.len() + 1];
        for (t, &c) in self.coeffs.iter().enumerate() {
            out[t + 1] += c;
            out[t] -= root * c;
        }
        CPoly::new(out)
    }

    /// Magnitude of a Horner evaluation at `k`: `sum_t |c_t| |k|^t`.
    fn horner_scale(&self, k: C64) -> f64 {
        let r = k.norm();
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * r + c.norm())
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(a + k)^nu` expanded: the coefficient of `k^t` is `C(nu, t) a^(nu - t)`.
pub fn shifted_power(a: C64, nu: usize) -> CPoly {
    let coeffs = (0..=nu)
        .map(|t| binomial(nu, t) * a.powu((nu - t) as u32))
        .collect();
    CPoly::new(coeffs)
}

/// Horner division by `(k - root)`: returns `(Q, rem)` with `P = (k - root) Q + rem`.
pub fn synthetic_divide(p: &CPoly, root: C64) -> (CPoly, C64) {
    let c = p.coeffs();
    if c.len() <= 1 {
        return (
            CPoly::new(Vec::new()),
            c.first().copied().unwrap_or_default(),
        );
    }
    let mut q = vec![C64::new(0.0, 0.0); c.len() - 1];
    let mut acc = C64::new(0.0, 0.0);
    for t in (1..c.len()).rev() {
        acc = acc * root + c[t];
        q[t - 1] = acc;
    }
    let rem = acc * root + c[0];
    (CPoly::new(q), rem)
}

/// Divides `numerator` by `(1 - omega_j)(k - k_{nj})`, checking the remainder.
fn divide_at_pole(
    numerator: &CPoly,
    n: usize,
    j: usize,
    order: ModelOrder,
    tol: f64,
    len: usize,
) -> Result<Vec<C64>> {
    let k_nj = pole(n, j, order)?;
    let (q, rem) = synthetic_divide(numerator, k_nj);
    let scale = numerator.horner_scale(k_nj);
    if rem.norm() > tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::RemainderNonzero {
            remainder: rem.norm(),
            scale,
        });
    }
    let inv = order.inv_one_minus(j)?;
    let mut out: Vec<C64> = q.coeffs().iter().map(|&c| c * inv).collect();
    out.resize(len, C64::new(0.0, 0.0));
    Ok(out)
}

/// The numerator `(i alpha + k)^{2m} - k^{2m}` as a polynomial (degree `2m - 1`).
fn shifted_difference(alpha: usize, order: ModelOrder) -> CPoly {
    let two_m = order.operator_order();
    let mut c = shifted_power(C64::new(0.0, alpha as f64), two_m)
        .coeffs()
        .to_vec();
    c.truncate(two_m);
    CPoly::new(c)
}

/// `d_{j,g}(n, alpha)` for `g = 0..=2m-2`.
pub fn d_alpha(n: usize, alpha: usize, j: usize, order: ModelOrder, tol: f64) -> Result<Vec<C64>> {
    let k_nj = pole(n, j, order)?;
    let mut num = shifted_difference(alpha, order).coeffs().to_vec();
    let at_pole = (C64::new(0.0, alpha as f64) + k_nj).powu(order.operator_order() as u32)
        - k_nj.powu(order.operator_order() as u32);
    num[0] -= at_pole;
    divide_at_pole(&CPoly::new(num), n, j, order, tol, order.top_gamma() + 1)
}

/// `d_{j,g}(n, s, nu)` for `g = 0..nu`.
pub fn d_snu(
    n: usize,
    s: usize,
    nu: usize,
    j: usize,
    order: ModelOrder,
    tol: f64,
) -> Result<Vec<C64>> {
    if nu == 0 {
        return Err(Error::InvalidInput("d_snu needs nu >= 1".into()));
    }
    let k_nj = pole(n, j, order)?;
    let a = C64::new(0.0, s as f64);
    let mut num = shifted_power(a, nu).coeffs().to_vec();
    num[0] -= (a + k_nj).powu(nu as u32);
    divide_at_pole(&CPoly::new(num), n, j, order, tol, nu)
}

/// Precomputed `d` coefficients for a fixed order and truncation.
///
/// Filled once at construction and read-only afterwards; forward and inverse
/// sweeps share it.
#[derive(Clone, Debug)]
pub struct DTable {
    order: ModelOrder,
    n_max: usize,
    alpha: Vec<Vec<C64>>,
    snu: Vec<Vec<C64>>,
}

impl DTable {
    pub fn build(order: ModelOrder, n_max: usize, tol: f64) -> Result<Self> {
        let jj = order.branches();
        let nus = order.top_gamma();
        let mut alpha = vec![Vec::new(); n_max * n_max * jj];
        let mut snu = vec![Vec::new(); n_max * n_max * nus * jj];
        for a in 1..=n_max {
            for n in 1..=a {
                for j in 1..=jj {
                    alpha[((a - 1) * n_max + (n - 1)) * jj + (j - 1)] =
                        d_alpha(n, a, j, order, tol)?;
                    for nu in 1..=nus {
                        snu[(((a - 1) * n_max + (n - 1)) * nus + (nu - 1)) * jj + (j - 1)] =
                            d_snu(n, a, nu, j, order, tol)?;
                    }
                }
            }
        }
        Ok(Self {
            order,
            n_max,
            alpha,
            snu,
        })
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `d_{j,g}(n, alpha)` over `g`; requires `1 <= n <= alpha <= N`.
    #[inline]
    pub fn alpha(&self, n: usize, alpha: usize, j: usize) -> &[C64] {
        let jj = self.order.branches();
        &self.alpha[((alpha - 1) * self.n_max + (n - 1)) * jj + (j - 1)]
    }

    /// `d_{j,g}(n, s, nu)` over `g`; requires `1 <= n <= s <= N`, `1 <= nu <= 2m-2`.
    #[inline]
    pub fn snu(&self, n: usize, s: usize, nu: usize, j: usize) -> &[C64] {
        let jj = self.order.branches();
        let nus = self.order.top_gamma();
        &self.snu[(((s - 1) * self.n_max + (n - 1)) * nus + (nu - 1)) * jj + (j - 1)]
    }
}
