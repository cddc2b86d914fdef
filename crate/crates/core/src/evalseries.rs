//! Evaluators for the explicit series and the residual oracles that pin the
//! coefficient conventions.
//!
//! Residuals are taken coefficientwise on exponentials, so derivatives are
//! exact and no step size appears anywhere.

use crate::forward::{SpectralData, WaveTriangle};
use crate::lattice::{FourierPotential, ModelOrder};
use crate::{Error, Result, Tolerances, C64};

/// Truncation controls for series evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesBudget {
    /// Highest frequency `alpha` (or `n`) summed; `None` uses everything available.
    pub terms: Option<usize>,
    /// Exponential factors with modulus below this are skipped.
    pub underflow: f64,
}

impl Default for SeriesBudget {
    fn default() -> Self {
        Self {
            terms: None,
            underflow: 1e-300,
        }
    }
}

/// A series value together with a geometric tail estimate from the last retained terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: C64,
    pub error_bound: f64,
}

/// `B rho / (1 - rho)`, where `B` is the largest of the last `w <= 4` groups and
/// `rho` the per-step decay rate from the block of `w` groups before them.
/// Comparing blocks rather than single terms tolerates parity patterns in the
/// coefficients. Infinite when the groups do not shrink.
fn tail_bound(groups: &[f64]) -> f64 {
    let n = groups.len();
    let w = 4.min(n / 2);
    if w == 0 {
        return groups.first().copied().unwrap_or(0.0);
    }
    let block_max = |b: &[f64]| b.iter().copied().fold(0.0, f64::max);
    let recent = block_max(&groups[n - w..]);
    let before = block_max(&groups[n - 2 * w..n - w]);
    if recent == 0.0 {
        return 0.0;
    }
    let rho = (recent / before).powf(1.0 / w as f64);
    if rho < 1.0 {
        recent * rho / (1.0 - rho)
    } else {
        f64::INFINITY
    }
}

/// Truncated
/// `f(t, k omega_tau) = e^{i kappa t} + sum_{alpha} sum_{j,n<=alpha} V^{(j)}_{n,alpha} / (in + kappa(1 - omega_j)) e^{(i kappa - alpha) t}`,
/// `kappa = k omega_tau`, for complex `t` with `Re t >= 0`.
pub fn eval_f(
    t: C64,
    k: C64,
    tau: usize,
    v: &WaveTriangle,
    budget: SeriesBudget,
    tol: &Tolerances,
) -> Result<SeriesValue> {
    if t.re < 0.0 {
        return Err(Error::InvalidInput(format!(
            "eval_f needs Re t >= 0, got {t}"
        )));
    }
    let order = v.order();
    let kappa = k * order.omega(tau);
    let last = budget.terms.unwrap_or(v.n_max()).min(v.n_max());
    let ik = C64::i() * kappa;
    let mut value = (ik * t).exp();
    let mut groups = Vec::with_capacity(last);
    for alpha in 1..=last {
        let mut c = C64::new(0.0, 0.0);
        let mut c_abs = 0.0;
        for j in 1..=order.branches() {
            let one_minus = order.one_minus(j)?;
            for n in 1..=alpha {
                let den = C64::new(0.0, n as f64) + kappa * one_minus;
                if den.norm() < tol.near_pole * n as f64 {
                    return Err(Error::NearPole { n, j });
                }
                let x = v.get(j, n, alpha) / den;
                c += x;
                c_abs += x.norm();
            }
        }
        let ex = ((ik - alpha as f64) * t).exp();
        let term = if ex.norm() < budget.underflow {
            C64::new(0.0, 0.0)
        } else {
            c * ex
        };
        groups.push(if term == C64::new(0.0, 0.0) {
            0.0
        } else {
            c_abs * ex.norm()
        });
        value += term;
    }
    Ok(SeriesValue {
        value,
        error_bound: tail_bound(&groups),
    })
}

/// `phi(x, lambda omega_tau) = f(-ix, i lambda omega_tau)`.
pub fn eval_phi(
    x: C64,
    lambda: C64,
    tau: usize,
    v: &WaveTriangle,
    budget: SeriesBudget,
    tol: &Tolerances,
) -> Result<SeriesValue> {
    eval_f(-C64::i() * x, C64::i() * lambda, tau, v, budget, tol)
}

/// `K(t,u) = sum_{j,n,alpha} V^{(j)}_{n,alpha} / (i(1 - omega_j)) e^{-alpha t + w_{nj}(t - u)}`.
pub fn eval_k(t: f64, u: f64, v: &WaveTriangle, budget: SeriesBudget) -> Result<SeriesValue> {
    if t < 0.0 || u < t {
        return Err(Error::InvalidInput(format!(
            "eval_k needs 0 <= t <= u, got t={t}, u={u}"
        )));
    }
    Ok(eval_k_complex(
        C64::new(t, 0.0),
        C64::new(u, 0.0),
        v,
        budget,
    ))
}

pub(crate) fn eval_k_complex(
    t: C64,
    u: C64,
    v: &WaveTriangle,
    budget: SeriesBudget,
) -> SeriesValue {
    let order = v.order();
    let last = budget.terms.unwrap_or(v.n_max()).min(v.n_max());
    let mut value = C64::new(0.0, 0.0);
    let mut groups = Vec::with_capacity(last);
    for alpha in 1..=last {
        let mut col = C64::new(0.0, 0.0);
        let mut col_abs = 0.0;
        for j in 1..=order.branches() {
            let inv = order.inv_one_minus(j).expect("branch in range");
            for n in 1..=alpha {
                let vv = v.get(j, n, alpha);
                if vv == C64::new(0.0, 0.0) {
                    continue;
                }
                let x = vv * inv / C64::i() * (-(alpha as f64) * t + order.w(n, j) * (t - u)).exp();
                col += x;
                col_abs += x.norm();
            }
        }
        groups.push(col_abs);
        value += col;
    }
    SeriesValue {
        value,
        error_bound: tail_bound(&groups),
    }
}

/// `F(t,u) = sum_{j,n} S_{nj} / (i(1 - omega_j)) e^{w_{nj}(t omega_j - u)}`, the free
/// term (at `(t,u)`) and kernel (at `(s,u)`) of the Marchenko-type equation.
pub fn eval_ftilde(t: f64, u: f64, s: &SpectralData, budget: SeriesBudget) -> SeriesValue {
    let order = s.order();
    let last = budget.terms.unwrap_or(s.n_max()).min(s.n_max());
    let mut value = C64::new(0.0, 0.0);
    let mut groups = Vec::with_capacity(last);
    for n in 1..=last {
        let mut row = C64::new(0.0, 0.0);
        let mut row_abs = 0.0;
        for j in 1..=order.branches() {
            let snj = s.get(n, j);
            if snj == C64::new(0.0, 0.0) {
                continue;
            }
            let inv = order.inv_one_minus(j).expect("branch in range");
            let x = snj * inv / C64::i() * (order.w(n, j) * (order.omega(j) * t - u)).exp();
            row += x;
            row_abs += x.norm();
        }
        groups.push(row_abs);
        value += row;
    }
    SeriesValue {
        value,
        error_bound: tail_bound(&groups),
    }
}

/// Outcome of [`ode_residual`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeResidual {
    /// Largest modulus of a residual coefficient.
    pub max_abs: f64,
    /// Largest residual coefficient divided by the sum of moduli of the terms that produced it.
    pub max_relative: f64,
}

/// Substitutes the truncated series into the half-line equation and returns the
/// coefficient of every `e^{(ik - alpha)t}`, `alpha <= N`, at each sample `k`:
///
/// `c_alpha(k) [(k + i alpha)^{2m} - k^{2m}] + sum_g [q_{g,alpha} (ik)^g + sum_{s<alpha} q_{g,alpha-s} (ik - s)^g c_s(k)]`.
///
/// `k` samples must stay off the pole lattice (e.g. `Im k >= 0`).
pub fn ode_residual(v: &WaveTriangle, q: &FourierPotential, ks: &[C64]) -> OdeResidual {
    let order = v.order();
    let n_max = v.n_max();
    let two_m = order.operator_order() as u32;
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for &k in ks {
        let ik = C64::i() * k;
        let (cs, cs_abs): (Vec<C64>, Vec<f64>) = (1..=n_max)
            .map(|alpha| {
                let mut c = C64::new(0.0, 0.0);
                let mut a = 0.0;
                for j in 1..=order.branches() {
                    let one_minus = order.one_minus(j).expect("branch in range");
                    for n in 1..=alpha {
                        let term = v.get(j, n, alpha) / (C64::new(0.0, n as f64) + k * one_minus);
                        c += term;
                        a += term.norm();
                    }
                }
                (c, a)
            })
            .unzip();
        for alpha in 1..=n_max {
            let d = (k + C64::new(0.0, alpha as f64)).powu(two_m) - k.powu(two_m);
            let lead = cs[alpha - 1] * d;
            let mut res = lead;
            let mut scale = cs_abs[alpha - 1] * d.norm();
            for g in 0..=order.top_gamma() {
                let free = q.get(g, alpha) * ik.powu(g as u32);
                res += free;
                scale += free.norm();
                for s in 1..alpha {
                    let term = q.get(g, alpha - s) * (ik - s as f64).powu(g as u32) * cs[s - 1];
                    res += term;
                    scale += (q.get(g, alpha - s) * (ik - s as f64).powu(g as u32)).norm()
                        * cs_abs[s - 1];
                }
            }
            max_abs = max_abs.max(res.norm());
            if scale > 0.0 {
                max_rel = max_rel.max(res.norm() / scale);
            }
        }
    }
    OdeResidual {
        max_abs,
        max_relative: max_rel,
    }
}

/// Relative deviation in `f_{nj}(t) = S_{nj} f(t, k_{nj} omega_j)` over `ts`.
///
/// The left side `sum_{alpha=n}^{N} V^{(j)}_{n,alpha} e^{(w_{nj} - alpha)t}` and the
/// right side (series truncated at `N - n`) carry the same exponentials, so the
/// comparison has no truncation mismatch.
pub fn residue_check(
    n: usize,
    j: usize,
    v: &WaveTriangle,
    s: &SpectralData,
    ts: &[f64],
    tol: &Tolerances,
) -> Result<f64> {
    let order: ModelOrder = v.order();
    order.check_branch(j)?;
    if n == 0 || n > v.n_max() {
        return Err(Error::InvalidInput(format!(
            "n = {n} outside [1, {}]",
            v.n_max()
        )));
    }
    let w = order.w(n, j);
    let kappa = crate::lattice::pole(n, j, order)? * order.omega(j);
    let budget = SeriesBudget {
        terms: Some(v.n_max() - n),
        ..SeriesBudget::default()
    };
    let mut worst: f64 = 0.0;
    for &t in ts {
        let tc = C64::new(t, 0.0);
        let lhs: C64 = (n..=v.n_max())
            .map(|a| v.get(j, n, a) * ((w - a as f64) * tc).exp())
            .sum();
        let f = eval_f(tc, kappa, 0, v, budget, tol)?;
        let rhs = s.get(n, j) * f.value;
        let scale = lhs.norm().max(rhs.norm());
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).norm() / scale);
        }
    }
    Ok(worst)
}
