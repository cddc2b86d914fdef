//! The forward spectral map: half-line potential -> wave triangle -> spectral data.
//!
//! The solution of the half-line equation is sought as
//!
//! ```text
//! f(t, k) = e^{ikt} + sum_{alpha>=1} c_alpha(k) e^{(ik - alpha) t},
//! c_alpha(k) = sum_j sum_{n<=alpha} V^{(j)}_{n,alpha} / (in + k(1 - omega_j)).
//! ```
//!
//! Matching the coefficient of `e^{(ik - alpha)t}` gives
//! `c_alpha(k) D_alpha(k) + N_alpha(k) = 0` with `D_alpha(k) = (k + i alpha)^{2m} - k^{2m}`
//! and `N_alpha(k) = sum_g [q_{g,alpha} (ik)^g + sum_{s<alpha} q_{g,alpha-s} (ik - s)^g c_s(k)]`.
//! Its polar part at `k_{nj}` (`n < alpha`) is the off-diagonal recurrence,
//! its polynomial part is the linear system for the diagonal.

use serde::{Deserialize, Serialize};

use crate::lattice::{to_halfline, FourierPotential, ModelOrder};
use crate::linalg::{condition_equilibrated, CMatrix, Lu};
use crate::polyops::DTable;
use crate::{Error, Result, Tolerances, C64};

/// `V^{(j)}_{n,alpha}`, `1 <= j <= 2m-1`, `1 <= n <= alpha <= N`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveTriangle {
    order: ModelOrder,
    n_max: usize,
    v: Vec<C64>,
}

impl WaveTriangle {
    pub fn zeros(order: ModelOrder, n_max: usize) -> Self {
        Self {
            order,
            n_max,
            v: vec![C64::new(0.0, 0.0); order.branches() * n_max * n_max],
        }
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    #[inline]
    fn idx(&self, j: usize, n: usize, alpha: usize) -> usize {
        ((j - 1) * self.n_max + (n - 1)) * self.n_max + (alpha - 1)
    }

    /// Zero outside the triangular support.
    #[inline]
    pub fn get(&self, j: usize, n: usize, alpha: usize) -> C64 {
        if n == 0 || n > alpha || alpha > self.n_max {
            return C64::new(0.0, 0.0);
        }
        self.v[self.idx(j, n, alpha)]
    }

    pub(crate) fn set(&mut self, j: usize, n: usize, alpha: usize, value: C64) {
        let i = self.idx(j, n, alpha);
        self.v[i] = value;
    }

    /// The leading `n_max` columns (which do not depend on later ones).
    pub fn truncated(&self, n_max: usize) -> Self {
        let n_max = n_max.min(self.n_max);
        let mut out = Self::zeros(self.order, n_max);
        for j in 1..=self.order.branches() {
            for a in 1..=n_max {
                for n in 1..=a {
                    out.set(j, n, a, self.get(j, n, a));
                }
            }
        }
        out
    }

    /// `S_{nj} = V^{(j)}_{nn}`.
    pub fn diagonal(&self) -> SpectralData {
        let mut s = SpectralData::zeros(self.order, self.n_max);
        for n in 1..=self.n_max {
            for j in 1..=self.order.branches() {
                s.set(n, j, self.get(j, n, n));
            }
        }
        s
    }

    /// `T_beta = sum_{j,n} |V^{(j)}_{n,n+beta}|` over the stored range.
    pub fn offset_sum(&self, beta: usize) -> f64 {
        let mut t = 0.0;
        for j in 1..=self.order.branches() {
            for n in 1..=self.n_max.saturating_sub(beta) {
                t += self.get(j, n, n + beta).norm();
            }
        }
        t
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.n_max.min(other.n_max);
        let mut worst: f64 = 0.0;
        for j in 1..=self.order.branches() {
            for a in 1..=n {
                for k in 1..=a {
                    worst = worst.max((self.get(j, k, a) - other.get(j, k, a)).norm());
                }
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.v.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

/// Spectral data `S_{nj}`, `1 <= n <= N`, `1 <= j <= 2m-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData {
    order: ModelOrder,
    n_max: usize,
    s: Vec<C64>,
}

impl SpectralData {
    pub fn zeros(order: ModelOrder, n_max: usize) -> Self {
        Self {
            order,
            n_max,
            s: vec![C64::new(0.0, 0.0); order.branches() * n_max],
        }
    }

    pub fn from_fn(
        order: ModelOrder,
        n_max: usize,
        mut f: impl FnMut(usize, usize) -> C64,
    ) -> Self {
        let mut s = Self::zeros(order, n_max);
        for n in 1..=n_max {
            for j in 1..=order.branches() {
                s.set(n, j, f(n, j));
            }
        }
        s
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Zero for `n` outside `[1, N]`.
    #[inline]
    pub fn get(&self, n: usize, j: usize) -> C64 {
        if n == 0 || n > self.n_max {
            return C64::new(0.0, 0.0);
        }
        self.s[(n - 1) * self.order.branches() + (j - 1)]
    }

    pub fn set(&mut self, n: usize, j: usize, value: C64) {
        let jj = self.order.branches();
        self.s[(n - 1) * jj + (j - 1)] = value;
    }

    /// Weights `S~_n = sum_j n^{2m-2} |S_{nj}|`, recomputed on every call.
    pub fn weights(&self) -> Vec<f64> {
        let p = self.order.top_gamma() as i32;
        (1..=self.n_max)
            .map(|n| {
                let row: f64 = (1..=self.order.branches())
                    .map(|j| self.get(n, j).norm())
                    .sum();
                (n as f64).powi(p) * row
            })
            .collect()
    }

    pub fn with_truncation(&self, n_max: usize) -> Self {
        Self::from_fn(self.order, n_max, |n, j| self.get(n, j))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.n_max.max(other.n_max);
        let mut worst: f64 = 0.0;
        for k in 1..=n {
            for j in 1..=self.order.branches() {
                worst = worst.max((self.get(k, j) - other.get(k, j)).norm());
            }
        }
        worst
    }

    pub fn is_zero(&self) -> bool {
        self.s.iter().all(|x| *x == C64::new(0.0, 0.0))
    }
}

/// Coefficient conventions for the recurrences.
///
/// [`Convention::default`] is the shipped one; every other combination exists
/// only so that the residual oracles can be shown to reject it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Convention {
    /// Negate the global sign `(-1)^{m+1}` of the off-diagonal recurrence.
    pub flip_offdiag_sign: bool,
    /// Use the convolution index `s - n` instead of `alpha - s`.
    pub printed_convolution_index: bool,
    /// Drop the `1/i` factor in the inverse recurrence.
    pub drop_inverse_i: bool,
}

#[inline]
pub(crate) fn i_pow(g: usize) -> C64 {
    match g % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Off-diagonal entry `V^{(j)}_{n,alpha}`, `n < alpha`:
///
/// ```text
/// c(n,alpha,j) V = (-1)^{m+1} sum_g sum_{s=n}^{alpha-1} (w - s)^g q_{g,alpha-s} V^{(j)}_{n,s},
/// c(n,alpha,j) = (alpha - w)^{2m} - w^{2m},   w = n / (1 - omega_j).
/// ```
pub fn offdiag_step(
    v: &WaveTriangle,
    q: &FourierPotential,
    n: usize,
    alpha: usize,
    j: usize,
    tol: f64,
    conv: Convention,
) -> Result<C64> {
    let order = v.order();
    order.check_branch(j)?;
    let two_m = order.operator_order() as u32;
    let w = order.w(n, j);
    let a = C64::new(alpha as f64, 0.0) - w;
    let c = a.powu(two_m) - w.powu(two_m);
    let scale = a.norm().powi(two_m as i32).max(w.norm().powi(two_m as i32));
    if c.norm() < tol * scale {
        return Err(Error::ResonantFactor {
            n,
            alpha,
            j,
            modulus: c.norm(),
        });
    }
    let mut sum = C64::new(0.0, 0.0);
    for s in n..alpha {
        let vns = v.get(j, n, s);
        if vns == C64::new(0.0, 0.0) {
            continue;
        }
        let freq = if conv.printed_convolution_index {
            s - n
        } else {
            alpha - s
        };
        let base = w - s as f64;
        let mut pw = C64::new(1.0, 0.0);
        for g in 0..=order.top_gamma() {
            sum += pw * q.get(g, freq) * vns;
            pw *= base;
        }
    }
    let mut sign = if order.m() % 2 == 1 { 1.0 } else { -1.0 };
    if conv.flip_offdiag_sign {
        sign = -sign;
    }
    Ok(sum * sign / c)
}

/// `sum_{nu=g+1}^{2m-2} i^nu sum_{r+s=alpha} q_{nu,r} sum_j sum_{n<=s} d_{jg}(n,s,nu) V^{(j)}_{n,s}`.
pub(crate) fn nu_terms(
    g: usize,
    alpha: usize,
    v: &WaveTriangle,
    q: &FourierPotential,
    dt: &DTable,
) -> C64 {
    let order = v.order();
    let mut total = C64::new(0.0, 0.0);
    for nu in g + 1..=order.top_gamma() {
        let mut inner = C64::new(0.0, 0.0);
        for r in 1..alpha {
            let qr = q.get(nu, r);
            if qr == C64::new(0.0, 0.0) {
                continue;
            }
            let s = alpha - r;
            let mut acc = C64::new(0.0, 0.0);
            for j in 1..=order.branches() {
                for n in 1..=s {
                    acc += dt.snu(n, s, nu, j)[g] * v.get(j, n, s);
                }
            }
            inner += qr * acc;
        }
        total += i_pow(nu) * inner;
    }
    total
}

/// Solves the `(2m-1)`-square system for the diagonal `V^{(j)}_{alpha,alpha}`:
///
/// ```text
/// sum_j d_{jg}(alpha,alpha) V^{(j)}_{alpha,alpha}
///     = -i^g q_{g,alpha} - sum_j sum_{n<alpha} d_{jg}(n,alpha) V^{(j)}_{n,alpha} - nu_terms(g)
/// ```
///
/// for `g = 0..=2m-2`. Requires column `alpha` off-diagonals to be filled.
pub fn diag_solve(
    v: &WaveTriangle,
    q: &FourierPotential,
    alpha: usize,
    dt: &DTable,
    tol: f64,
) -> Result<Vec<C64>> {
    let order = v.order();
    let jj = order.branches();
    let mut rhs = vec![C64::new(0.0, 0.0); jj];
    for (g, r) in rhs.iter_mut().enumerate() {
        let mut acc = i_pow(g) * q.get(g, alpha);
        for j in 1..=jj {
            for n in 1..alpha {
                acc += dt.alpha(n, alpha, j)[g] * v.get(j, n, alpha);
            }
        }
        acc += nu_terms(g, alpha, v, q, dt);
        *r = -acc;
    }
    let a = CMatrix::from_fn(jj, |g, j| dt.alpha(alpha, alpha, j + 1)[g]);
    let cond = condition_equilibrated(&a);
    if !(cond < 1.0 / tol) {
        return Err(Error::SingularDiagonalSystem {
            alpha,
            condition: cond,
        });
    }
    Lu::factor(&a)
        .solve(&rhs)
        .ok_or(Error::SingularDiagonalSystem {
            alpha,
            condition: f64::INFINITY,
        })
}

/// Forward map with the shipped conventions.
pub fn forward_map(
    q: &FourierPotential,
    n_max: usize,
    tol: &Tolerances,
) -> Result<(WaveTriangle, SpectralData)> {
    forward_map_with(q, n_max, tol, Convention::default())
}

/// Sweeps `alpha = 1..=N`: off-diagonals first, then the diagonal solve.
/// Periodic-form input is converted to half-line form first.
pub fn forward_map_with(
    q: &FourierPotential,
    n_max: usize,
    tol: &Tolerances,
    conv: Convention,
) -> Result<(WaveTriangle, SpectralData)> {
    let q = to_halfline(q);
    let order = q.order();
    let dt = DTable::build(order, n_max, tol.remainder)?;
    let mut v = WaveTriangle::zeros(order, n_max);
    for alpha in 1..=n_max {
        for n in 1..alpha {
            for j in 1..=order.branches() {
                let x = offdiag_step(&v, &q, n, alpha, j, tol.resonance, conv)?;
                v.set(j, n, alpha, x);
            }
        }
        let diag = diag_solve(&v, &q, alpha, &dt, tol.singular)?;
        for (j, x) in diag.into_iter().enumerate() {
            v.set(j + 1, alpha, alpha, x);
        }
    }
    let s = v.diagonal();
    Ok((v, s))
}

/// `S_{nj}(a) = e^{ina} S_{nj}`: the data of the potential translated by `a`, `Im a >= 0`.
pub fn shift_data(s: &SpectralData, a: C64) -> Result<SpectralData> {
    if a.im < 0.0 {
        return Err(Error::LowerHalfPlane(a.im));
    }
    Ok(SpectralData::from_fn(s.order(), s.n_max(), |n, j| {
        (C64::i() * n as f64 * a).exp() * s.get(n, j)
    }))
}
