//! The inverse spectral map.
//!
//! Two independent routes lead from `S_{nj}` back to the wave triangle:
//!
//! * the recurrence [`v_from_s`], obtained by matching exponentials in the
//!   residue identity `f_{nj}(t) = S_{nj} f(t, k_{nj} omega_j)`;
//! * finite sections of the Marchenko-type equation
//!   `K(t,u) = F(t,u) + int_t^inf K(t,s) F(s,u) ds`, whose kernel is separable:
//!   `K(t,u) = sum_{nj} X_{nj}(t) A_{nj}(u)` with
//!   `A_{nj}(u) = S_{nj} / (i(1 - omega_j)) e^{-w_{nj} u}` and
//!   `X (E - G(t)) = e(t)`, `e_{nj}(t) = e^{(n omega_j / (1 - omega_j)) t}`.
//!
//! The potential itself is read off the triangle through the polynomial part
//! of the forward matching identity ([`reconstruct_q`]), which is triangular in
//! the unknown coefficients.
//!
//! Section layout: row/column index `(n - 1)(2m - 1) + (j - 1)`, `n` the
//! frequency, `j` the branch. Entry `G[(n,j),(r,l)](t) = int_t^inf A_{nj}(s) e_{rl}(s) ds`.

use std::f64::consts::PI;

use crate::forward::{i_pow, nu_terms, Convention, SpectralData, WaveTriangle};
use crate::lattice::{Form, FourierPotential, ModelOrder};
use crate::linalg::{condition_one, CMatrix, Lu};
use crate::polyops::DTable;
use crate::{Error, Result, Tolerances, C64};

/// Rebuilds the triangle from spectral data:
///
/// ```text
/// V^{(j)}_{n,n}      = S_{nj}
/// V^{(j)}_{n,n+beta} = (1 - omega_j)/i * S_{nj} * sum_l sum_{r=1}^{beta}
///                        V^{(l)}_{r,beta} / (r(1 - omega_j) - n omega_j (1 - omega_l))
/// ```
pub fn v_from_s(s: &SpectralData, n_max: usize, tol: &Tolerances) -> Result<WaveTriangle> {
    v_from_s_with(s, n_max, tol, Convention::default())
}

pub fn v_from_s_with(
    s: &SpectralData,
    n_max: usize,
    tol: &Tolerances,
    conv: Convention,
) -> Result<WaveTriangle> {
    let order = s.order();
    let jj = order.branches();
    let mut v = WaveTriangle::zeros(order, n_max);
    let omegas: Vec<C64> = (0..=jj).map(|j| order.omega(j)).collect();
    let one = C64::new(1.0, 0.0);
    for n in 1..=n_max {
        for j in 1..=jj {
            v.set(j, n, n, s.get(n, j));
        }
    }
    for beta in 1..n_max {
        for n in 1..=n_max - beta {
            for j in 1..=jj {
                let snj = s.get(n, j);
                if snj == C64::new(0.0, 0.0) {
                    continue;
                }
                let a_j = one - omegas[j];
                let mut sum = C64::new(0.0, 0.0);
                for l in 1..=jj {
                    let b_l = omegas[j] * (one - omegas[l]) * n as f64;
                    for r in 1..=beta {
                        let den = a_j * r as f64 - b_l;
                        if den.norm() < tol.resonance * (r + n) as f64 {
                            return Err(Error::ResonantDenominator {
                                n,
                                j,
                                r,
                                l,
                                modulus: den.norm(),
                            });
                        }
                        sum += v.get(l, r, beta) / den;
                    }
                }
                let factor = if conv.drop_inverse_i {
                    a_j
                } else {
                    a_j / C64::i()
                };
                v.set(j, n, n + beta, factor * snj * sum);
            }
        }
    }
    Ok(v)
}

/// Solves the polynomial matching identity for `q_{g,alpha}`, `alpha = 1..=N`,
/// `g = 2m-2` down to `0`. Each unknown appears alone; no linear system is needed.
pub fn reconstruct_q(v: &WaveTriangle, tol: &Tolerances) -> Result<FourierPotential> {
    let dt = DTable::build(v.order(), v.n_max(), tol.remainder)?;
    Ok(reconstruct_q_with(v, &dt))
}

pub(crate) fn reconstruct_q_with(v: &WaveTriangle, dt: &DTable) -> FourierPotential {
    let order = v.order();
    let mut q = FourierPotential::zeros(order, Form::Halfline, v.n_max());
    for alpha in 1..=v.n_max() {
        for g in (0..=order.top_gamma()).rev() {
            let mut acc = nu_terms(g, alpha, v, &q, dt);
            for j in 1..=order.branches() {
                for n in 1..=alpha {
                    acc += dt.alpha(n, alpha, j)[g] * v.get(j, n, alpha);
                }
            }
            let value = -acc / i_pow(g);
            q.set(g, alpha, value).expect("slot in range");
        }
    }
    q
}

/// `reconstruct_q(v_from_s(S))`.
pub fn inverse_map(s: &SpectralData, n_max: usize, tol: &Tolerances) -> Result<FourierPotential> {
    let v = v_from_s(s, n_max, tol)?;
    reconstruct_q(&v, tol)
}

/// Finite section of the Marchenko-type equation at (possibly complex) `t`.
///
/// `G(t) = D_1 C D_2` with `t`-independent coefficients
/// `C[(n,j),(r,l)] = i(1 - omega_l) S_{nj} / (r omega_l (1 - omega_j) - n(1 - omega_l))`,
/// `D_1 = diag(e^{-w_{nj} t})` and `D_2 = diag(e_{rl}(t))`. Solves go through the
/// similar matrix `diag(e^{-nt}) C`, which stays bounded for every `Re t >= 0`
/// (including the imaginary axis, where `G` itself is badly scaled).
#[derive(Clone, Debug)]
pub struct MarchenkoSection {
    order: ModelOrder,
    t: C64,
    size: usize,
    coeff: CMatrix,
    e: Vec<C64>,
    data: SpectralData,
}

impl MarchenkoSection {
    pub fn t(&self) -> C64 {
        self.t
    }

    /// Section size `N` (the matrix has dimension `N (2m - 1)`).
    pub fn size(&self) -> usize {
        self.size
    }

    /// `e_{rl}(t) = e^{(r omega_l / (1 - omega_l)) t}` in section layout.
    pub fn e(&self) -> &[C64] {
        &self.e
    }

    /// `t`-independent part `C` of the section.
    pub(crate) fn coeff(&self) -> &CMatrix {
        &self.coeff
    }

    fn left(&self, n: usize, j: usize) -> C64 {
        (-self.order.w(n, j) * self.t).exp()
    }

    /// Entry `G[(n,j),(r,l)](t)`.
    pub fn entry(&self, n: usize, j: usize, r: usize, l: usize) -> C64 {
        let jj = self.order.branches();
        let (row, col) = ((n - 1) * jj + (j - 1), (r - 1) * jj + (l - 1));
        self.coeff[(row, col)] * self.left(n, j) * self.e[col]
    }

    /// The dense section `G(t)`.
    pub fn matrix(&self) -> CMatrix {
        let jj = self.order.branches();
        CMatrix::from_fn(self.coeff.dim(), |row, col| {
            self.entry(row / jj + 1, row % jj + 1, col / jj + 1, col % jj + 1)
        })
    }

    /// `E - diag(e^{-nt}) C`, similar to `E - G(t)`.
    fn balanced(&self) -> CMatrix {
        let jj = self.order.branches();
        CMatrix::from_fn(self.coeff.dim(), |row, col| {
            let d = if row == col {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            let n = row / jj + 1;
            d - self.coeff[(row, col)] * (-(n as f64) * self.t).exp()
        })
    }

    /// `det(E - G(t))`.
    pub fn determinant(&self) -> C64 {
        Lu::factor(&self.balanced()).det()
    }

    /// Smallest singular value of `E - G(t)` is bounded below by `1 / |(E - G)^{-1}|_1`
    /// up to a dimension factor; this returns `1 / cond_1` of the balanced form.
    pub fn inverse_condition(&self) -> f64 {
        1.0 / condition_one(&self.balanced())
    }

    /// Solves `X (E - G) = e`.
    ///
    /// With `X = Y D_2` this is `Y (E - diag(e^{-nt}) C) = (1, ..., 1)`.
    pub fn solve(&self, tol: &Tolerances) -> Result<KernelEval> {
        let a = self.balanced().transpose();
        let cond = condition_one(&a);
        let singular = || Error::SingularSection {
            t: format!("{}", self.t),
            condition: cond,
        };
        if !(cond < 1.0 / tol.singular) {
            return Err(singular());
        }
        let ones = vec![C64::new(1.0, 0.0); a.dim()];
        let y = Lu::factor(&a).solve(&ones).ok_or_else(singular)?;
        Ok(KernelEval {
            order: self.order,
            t: self.t,
            y,
            data: self.data.clone(),
        })
    }
}

/// Builds the section `G(t)` from the first `size` frequencies of `s`.
pub fn marchenko_matrix(
    s: &SpectralData,
    t: impl Into<C64>,
    size: usize,
    tol: &Tolerances,
) -> Result<MarchenkoSection> {
    let t = t.into();
    if t.re < 0.0 {
        return Err(Error::InvalidInput(format!(
            "Marchenko section needs Re t >= 0, got {t}"
        )));
    }
    if size > s.n_max() {
        return Err(Error::InvalidInput(format!(
            "section size {size} exceeds data truncation {}",
            s.n_max()
        )));
    }
    let order = s.order();
    let jj = order.branches();
    let dim = size * jj;
    let one = C64::new(1.0, 0.0);
    let omegas: Vec<C64> = (0..=jj).map(|j| order.omega(j)).collect();
    let mut coeff = CMatrix::zeros(dim);
    let mut e = vec![C64::new(0.0, 0.0); dim];
    for r in 1..=size {
        for l in 1..=jj {
            e[(r - 1) * jj + (l - 1)] = ((order.w(r, l) - r as f64) * t).exp();
        }
    }
    for n in 1..=size {
        for j in 1..=jj {
            let snj = s.get(n, j);
            if snj == C64::new(0.0, 0.0) {
                continue;
            }
            for r in 1..=size {
                for l in 1..=jj {
                    let den =
                        omegas[l] * (one - omegas[j]) * r as f64 - (one - omegas[l]) * n as f64;
                    if den.norm() < tol.resonance * (r + n) as f64 {
                        return Err(Error::ResonantDenominator {
                            n,
                            j,
                            r,
                            l,
                            modulus: den.norm(),
                        });
                    }
                    coeff[((n - 1) * jj + (j - 1), (r - 1) * jj + (l - 1))] =
                        C64::i() * (one - omegas[l]) * snj / den;
                }
            }
        }
    }
    Ok(MarchenkoSection {
        order,
        t,
        size,
        coeff,
        e,
        data: s.with_truncation(size),
    })
}

/// Kernel `K(t, .)` at a fixed `t`, from a solved section.
#[derive(Clone, Debug)]
pub struct KernelEval {
    order: ModelOrder,
    t: C64,
    /// `Y_{nj} = X_{nj}(t) e^{-(w_{nj} - n) t}`
    y: Vec<C64>,
    data: SpectralData,
}

impl KernelEval {
    pub fn t(&self) -> C64 {
        self.t
    }

    /// `X_{nj}(t) = e_{nj}(t) + int_t^inf K(t,s) e_{nj}(s) ds`.
    pub fn x(&self, n: usize, j: usize) -> C64 {
        self.y_at(n, j) * ((self.order.w(n, j) - n as f64) * self.t).exp()
    }

    fn y_at(&self, n: usize, j: usize) -> C64 {
        self.y[(n - 1) * self.order.branches() + (j - 1)]
    }

    /// `S_{nj} X_{nj}(t) e^{-w_{nj} t} = sum_alpha V^{(j)}_{n,alpha} e^{-alpha t}`.
    pub fn row_series(&self, n: usize, j: usize) -> C64 {
        self.data.get(n, j) * self.y_at(n, j) * (-(n as f64) * self.t).exp()
    }

    /// `K(t, u) = sum_{nj} X_{nj}(t) S_{nj} / (i(1 - omega_j)) e^{-w_{nj} u}`.
    pub fn eval(&self, u: impl Into<C64>) -> C64 {
        let u = u.into();
        let jj = self.order.branches();
        let mut acc = C64::new(0.0, 0.0);
        for n in 1..=self.data.n_max() {
            for j in 1..=jj {
                let snj = self.data.get(n, j);
                if snj == C64::new(0.0, 0.0) {
                    continue;
                }
                let inv = self.order.inv_one_minus(j).expect("branch in range");
                let w = self.order.w(n, j);
                acc += self.y_at(n, j) * snj * inv / C64::i()
                    * (w * (self.t - u) - n as f64 * self.t).exp();
            }
        }
        acc
    }
}

/// Solves the section at `t` and returns the kernel evaluator.
pub fn marchenko_solve(
    s: &SpectralData,
    t: impl Into<C64>,
    size: usize,
    tol: &Tolerances,
) -> Result<KernelEval> {
    marchenko_matrix(s, t, size, tol)?.solve(tol)
}

/// Default number of DFT samples used to expand section solutions in `e^{-alpha t}`.
pub fn default_samples(n_max: usize) -> usize {
    (8 * n_max).max(64)
}

/// Recovers the wave triangle from Marchenko sections along `t = -i theta`.
///
/// `S_{nj} X_{nj}(t) e^{-w_{nj} t} = sum_alpha V^{(j)}_{n,alpha} e^{-alpha t}`, so
/// the triangle is the discrete Fourier transform of that product over
/// `theta` in `[0, 2 pi)`. Needs `det(E - G(-i theta)) != 0` on the real axis.
pub fn triangle_via_marchenko(
    s: &SpectralData,
    n_max: usize,
    samples: usize,
    tol: &Tolerances,
) -> Result<WaveTriangle> {
    let order = s.order();
    let jj = order.branches();
    let mut acc = vec![C64::new(0.0, 0.0); jj * n_max * n_max];
    for k in 0..samples {
        let theta = 2.0 * PI * k as f64 / samples as f64;
        let t = C64::new(0.0, -theta);
        let kernel = marchenko_solve(s, t, n_max, tol)?;
        for n in 1..=n_max {
            for j in 1..=jj {
                let snj = s.get(n, j);
                if snj == C64::new(0.0, 0.0) {
                    continue;
                }
                let g = kernel.row_series(n, j);
                for alpha in n..=n_max {
                    let phase = C64::from_polar(1.0, -(alpha as f64) * theta);
                    acc[((j - 1) * n_max + (n - 1)) * n_max + (alpha - 1)] += g * phase;
                }
            }
        }
    }
    let mut v = WaveTriangle::zeros(order, n_max);
    for j in 1..=jj {
        for n in 1..=n_max {
            for alpha in n..=n_max {
                v.set(
                    j,
                    n,
                    alpha,
                    acc[((j - 1) * n_max + (n - 1)) * n_max + (alpha - 1)] / samples as f64,
                );
            }
        }
    }
    Ok(v)
}

/// Potential reconstructed through the Marchenko route.
pub fn inverse_map_marchenko(
    s: &SpectralData,
    n_max: usize,
    samples: usize,
    tol: &Tolerances,
) -> Result<FourierPotential> {
    let v = triangle_via_marchenko(s, n_max, samples, tol)?;
    reconstruct_q(&v, tol)
}

/// `(-1)^m 2m d/dt K(t,t)` expanded over `e^{-alpha t}`, `alpha = 1..=N`.
///
/// Equals the top coefficient row `q_{2m-2, alpha}` of the potential.
pub fn kernel_diag_q0(v: &WaveTriangle) -> Vec<C64> {
    let order = v.order();
    let sigma = if order.m().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let two_m = order.operator_order() as f64;
    (1..=v.n_max())
        .map(|alpha| {
            let mut kappa = C64::new(0.0, 0.0);
            for j in 1..=order.branches() {
                let inv = order.inv_one_minus(j).expect("branch in range");
                for n in 1..=alpha {
                    kappa += v.get(j, n, alpha) * inv;
                }
            }
            kappa /= C64::i();
            sigma * two_m * (-(alpha as f64)) * kappa
        })
        .collect()
}

/// Same quantity as [`kernel_diag_q0`], computed from `K(t,t)` on Marchenko
/// sections at `t = -i theta` and a discrete Fourier transform.
pub fn kernel_diag_q0_marchenko(
    s: &SpectralData,
    n_max: usize,
    samples: usize,
    tol: &Tolerances,
) -> Result<Vec<C64>> {
    let order = s.order();
    let sigma = if order.m().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let two_m = order.operator_order() as f64;
    let mut kappa = vec![C64::new(0.0, 0.0); n_max];
    for k in 0..samples {
        let theta = 2.0 * PI * k as f64 / samples as f64;
        let t = C64::new(0.0, -theta);
        let diag = marchenko_solve(s, t, n_max, tol)?.eval(t);
        for (a, slot) in kappa.iter_mut().enumerate() {
            *slot += diag * C64::from_polar(1.0, -((a + 1) as f64) * theta);
        }
    }
    Ok(kappa
        .into_iter()
        .enumerate()
        .map(|(a, kp)| sigma * two_m * (-((a + 1) as f64)) * kp / samples as f64)
        .collect())
}
