//! Checks on candidate spectral data.
//!
//! Two ingredients decide whether `S_{nj}` can be spectral data:
//!
//! * summability of `{n S~_n}` with `S~_n = sum_j n^{2m-2} |S_{nj}|`;
//! * non-vanishing of the infinite determinant `D(z) = det(E - F(z))` on the
//!   closed upper half-plane.
//!
//! Both can only be probed at finite truncation, so every verdict carries the
//! section size, grid and convergence diagnostics it was computed with.
//! `D_N(z)` depends on `z` only through `e^{inz}`, hence it is `2 pi`-periodic and
//! a polynomial in `w = e^{iz}` with `D_N = 1` at `w = 0`.

use std::f64::consts::{FRAC_PI_2, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::forward::{SpectralData, WaveTriangle};
use crate::inverse::marchenko_matrix;
use crate::io::cplx;
use crate::linalg::{CMatrix, Lu};
use crate::{Error, ModelOrder, Result, Tolerances, C64};

/// Summability diagnostics for finite spectral data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub m: usize,
    #[serde(rename = "N")]
    pub n_max: usize,
    /// `S~_n`, `n = 1..=N`.
    pub s_tilde: Vec<f64>,
    /// `sum_n n S~_n`.
    pub sum_l1: f64,
    /// `(sum_n (n S~_n)^2)^{1/2}`, reported alongside the l1 gate.
    pub sum_l2: f64,
    /// `sum_n n |S~_n|` (coincides with `sum_l1` since `S~_n >= 0`).
    pub gasymov_i: f64,
    pub a_m: f64,
    /// `4^{m-1} a_m sum_n S~_n / (n + 1)`.
    pub gasymov_p: f64,
    /// Fitted `p` in `S~_n ~ n^{-p}` over the last decade of `n`; `None` when
    /// fewer than three nonzero values are available there.
    pub tail_exponent: Option<f64>,
    /// `sum_{j,n,alpha} alpha^{2m-1} (alpha - n) |V^{(j)}_{n,alpha}|`, when a triangle is supplied.
    pub triangle_sum: Option<f64>,
    pub flags: ConditionFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConditionFlags {
    /// Sums are finite and the tail fit (if any) has `p > 2`.
    pub l1: bool,
    /// `gasymov_p < 1` (sufficient, together with `l1`).
    pub gasymov: bool,
}

/// Summability report for `s`.
pub fn weighted_sums(s: &SpectralData) -> ConditionReport {
    let order = s.order();
    let a_m = a_max(order, 64).map(|a| a.value).unwrap_or(f64::INFINITY);
    weighted_sums_with(s, None, a_m)
}

/// As [`weighted_sums`], adding the triangle diagnostic and using a precomputed `a_m`.
pub fn weighted_sums_with(s: &SpectralData, v: Option<&WaveTriangle>, a_m: f64) -> ConditionReport {
    let order = s.order();
    let m = order.m();
    let n_max = s.n_max();
    let s_tilde: Vec<f64> = (1..=n_max)
        .map(|n| {
            let w = (n as f64).powi(2 * m as i32 - 2);
            (1..=order.branches()).map(|j| w * s.get(n, j).norm()).sum()
        })
        .collect();
    let sum_l1: f64 = s_tilde
        .iter()
        .enumerate()
        .map(|(i, x)| (i + 1) as f64 * x)
        .sum();
    let sum_l2 = s_tilde
        .iter()
        .enumerate()
        .map(|(i, x)| ((i + 1) as f64 * x).powi(2))
        .sum::<f64>()
        .sqrt();
    let gasymov_i: f64 = s_tilde
        .iter()
        .enumerate()
        .map(|(i, x)| (i + 1) as f64 * x.abs())
        .sum();
    let harmonic: f64 = s_tilde
        .iter()
        .enumerate()
        .map(|(i, x)| x / (i + 2) as f64)
        .sum();
    let gasymov_p = 4f64.powi(m as i32 - 1) * a_m * harmonic;
    let tail_exponent = tail_fit(&s_tilde);
    let triangle_sum = v.map(|v| {
        let mut acc = 0.0;
        for j in 1..=order.branches() {
            for alpha in 1..=v.n_max() {
                let w = (alpha as f64).powi(2 * m as i32 - 1);
                for n in 1..alpha {
                    acc += w * (alpha - n) as f64 * v.get(j, n, alpha).norm();
                }
            }
        }
        acc
    });
    let l1 = sum_l1.is_finite() && tail_exponent.is_none_or(|p| p > 2.0);
    ConditionReport {
        m,
        n_max,
        s_tilde,
        sum_l1,
        sum_l2,
        gasymov_i,
        a_m,
        gasymov_p,
        tail_exponent,
        triangle_sum,
        flags: ConditionFlags {
            l1,
            gasymov: l1 && gasymov_p < 1.0,
        },
    }
}

// least squares slope of log S~ against log n on n in [ceil(N/10), N]
fn tail_fit(s_tilde: &[f64]) -> Option<f64> {
    let n_max = s_tilde.len();
    let lo = n_max.div_ceil(10).max(1);
    let pts: Vec<(f64, f64)> = (lo..=n_max)
        .filter(|&n| s_tilde[n - 1] > 0.0)
        .map(|n| ((n as f64).ln(), s_tilde[n - 1].ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(-sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmaxRegime {
    FiniteBlock,
    RayLimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amax {
    pub value: f64,
    /// Maximum over `1 <= n, r <= search_n`.
    pub block: f64,
    /// Supremum over `t = n/r` in `[0, inf]`.
    pub ray: f64,
    pub regime: AmaxRegime,
    pub search_n: usize,
}

fn amax_ratio(a_j: C64, b_jl: C64, t: f64) -> f64 {
    // |a_j|(1 + t) / |a_j - t b_jl|, t = inf handled by the caller
    a_j.norm() * (1.0 + t) / (a_j - b_jl * t).norm()
}

/// `a_m = max |(1 - omega_j)(n + r)| / |r(1 - omega_j) - n(1 - omega_l) omega_j|`
/// over `1 <= j <= l <= 2m-1` and `n, r >= 1`.
///
/// The ratio depends on `n/r` only, so the finite block is joined with a
/// continuous maximisation along `t = n/r`.
pub fn a_max(order: ModelOrder, search_n: usize) -> Result<Amax> {
    if search_n < 64 {
        return Err(Error::InvalidInput(format!(
            "a_max search size must be >= 64, got {search_n}"
        )));
    }
    let jj = order.branches();
    let one = C64::new(1.0, 0.0);
    let mut block: f64 = 0.0;
    let mut ray: f64 = 0.0;
    for j in 1..=jj {
        let a_j = one - order.omega(j);
        for l in j..=jj {
            let b_jl = (one - order.omega(l)) * order.omega(j);
            for n in 1..=search_n {
                for r in 1..=search_n {
                    let den = a_j * r as f64 - b_jl * n as f64;
                    if den.norm() < 1e-12 * (n + r) as f64 {
                        return Err(Error::ResonantDenominator {
                            n,
                            j,
                            r,
                            l,
                            modulus: den.norm(),
                        });
                    }
                    block = block.max(a_j.norm() * (n + r) as f64 / den.norm());
                }
            }
            ray = ray.max(ray_sup(a_j, b_jl).ok_or(Error::ResonantDenominator {
                n: 0,
                j,
                r: 0,
                l,
                modulus: 0.0,
            })?);
        }
    }
    let (value, regime) = if block >= ray {
        (block, AmaxRegime::FiniteBlock)
    } else {
        (ray, AmaxRegime::RayLimit)
    };
    Ok(Amax {
        value,
        block,
        ray,
        regime,
        search_n,
    })
}

// sup over t in [0, inf] of |a|(1+t)/|a - t b|, via u = t/(1+t) in [0, 1]
fn ray_sup(a: C64, b: C64) -> Option<f64> {
    let f = |u: f64| -> f64 {
        if u >= 1.0 {
            a.norm() / b.norm()
        } else {
            amax_ratio(a, b, u / (1.0 - u))
        }
    };
    const SAMPLES: usize = 20_000;
    let mut best = (0.0, f(0.0));
    for i in 1..=SAMPLES {
        let u = i as f64 / SAMPLES as f64;
        let v = f(u);
        if !v.is_finite() {
            return None;
        }
        if v > best.1 {
            best = (u, v);
        }
    }
    // golden-section refinement on the bracketing cell
    let h = 1.0 / SAMPLES as f64;
    let (mut lo, mut hi) = ((best.0 - h).max(0.0), (best.0 + h).min(1.0));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    let v = best.1.max(f1).max(f2);
    v.is_finite().then_some(v)
}

/// `det(E - F(z))` of size `N (2m-1)`: the Marchenko section at `t = 0` built from
/// the scaled data `S_{nj} e^{inz}`.
pub fn det_section(s: &SpectralData, z: C64, n: usize, tol: &Tolerances) -> Result<C64> {
    SectionDet::new(s, n, tol)?.eval(z)
}

/// Reusable evaluator for `D_N(z)` (the `z`-independent part is built once).
#[derive(Clone, Debug)]
pub struct SectionDet {
    coeff: CMatrix,
    branches: usize,
    size: usize,
}

impl SectionDet {
    pub fn new(s: &SpectralData, size: usize, tol: &Tolerances) -> Result<Self> {
        let sec = marchenko_matrix(s, 0.0, size, tol)?;
        Ok(Self {
            coeff: sec.coeff().clone(),
            branches: s.order().branches(),
            size,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// `D_N(z)`; `Im z >= 0` required.
    pub fn eval(&self, z: C64) -> Result<C64> {
        if z.im < 0.0 {
            return Err(Error::LowerHalfPlane(z.im));
        }
        Ok(self.eval_leading(z, self.size))
    }

    /// Determinant of the leading `n`-block section (`n <= N`); `D_0 = 1`.
    pub fn eval_leading(&self, z: C64, n: usize) -> C64 {
        let dim = n * self.branches;
        if dim == 0 {
            return C64::new(1.0, 0.0);
        }
        let scale: Vec<C64> = (1..=n).map(|k| (C64::i() * k as f64 * z).exp()).collect();
        let a = CMatrix::from_fn(dim, |row, col| {
            let d = if row == col {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            };
            d - self.coeff[(row, col)] * scale[row / self.branches]
        });
        Lu::factor(&a).det()
    }
}

/// `det(delta_{nk} + 2 S^_k / (n + k) e^{i(n+k)z/2})`, `n, k = 1..=N`, for `m = 1` data `S^_k`.
pub fn theorem1_det(s_hat: &[C64], z: C64, n: usize) -> C64 {
    let get = |k: usize| s_hat.get(k - 1).copied().unwrap_or_default();
    let a = CMatrix::from_fn(n, |row, col| {
        let (p, k) = (row + 1, col + 1);
        let d = if p == k {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        };
        d + get(k) * 2.0 / (p + k) as f64 * (C64::i() * (p + k) as f64 * z / 2.0).exp()
    });
    Lu::factor(&a).det()
}

/// `S^_k = (i/2) S_{k1}`: maps `m = 1` spectral data to the form used by [`theorem1_det`].
pub fn theorem1_data(s: &SpectralData) -> Vec<C64> {
    (1..=s.n_max())
        .map(|k| C64::new(0.0, 0.5) * s.get(k, 1))
        .collect()
}

/// Scan rectangle `[x0, x0 + 2 pi] x [0, ymax]`, `nx` by `ny` cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            x0: 0.0,
            ymax: 30.0,
            nx: 64,
            ny: 60,
        }
    }
}

impl Grid {
    pub fn node(&self, ix: usize, iy: usize) -> C64 {
        C64::new(
            self.x0 + TAU * ix as f64 / self.nx as f64,
            self.ymax * iy as f64 / self.ny as f64,
        )
    }

    fn validate(&self) -> Result<()> {
        if self.nx == 0
            || self.ny == 0
            || !(self.ymax > 0.0)
            || !self.x0.is_finite()
            || !self.ymax.is_finite()
        {
            return Err(Error::InvalidInput(format!("bad grid {self:?}")));
        }
        Ok(())
    }
}

impl std::str::FromStr for Grid {
    type Err = Error;

    /// `x0:ymax:nx:ny`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidInput(format!("grid must be x0:ymax:nx:ny, got '{s}'"));
        if parts.len() != 4 {
            return Err(bad());
        }
        let g = Grid {
            x0: parts[0].trim().parse().map_err(|_| bad())?,
            ymax: parts[1].trim().parse().map_err(|_| bad())?,
            nx: parts[2].trim().parse().map_err(|_| bad())?,
            ny: parts[3].trim().parse().map_err(|_| bad())?,
        };
        g.validate()?;
        Ok(g)
    }
}

/// Knobs for the argument-principle scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Zeros are localized until the enclosing rectangle is smaller than this.
    pub refine_to: f64,
    /// Maximum number of `D` evaluations spent on one edge.
    pub edge_budget: usize,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            refine_to: 1e-7,
            edge_budget: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroKind {
    /// Enclosed by a cell with nonzero winding number.
    Interior,
    /// On a cell edge above the real axis.
    Edge,
    /// On `Im z = 0`.
    Boundary,
}

/// A zero of `D_N` found by the scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroWitness {
    #[serde(with = "cplx")]
    pub z: C64,
    pub kind: ZeroKind,
    /// Winding number of the cell that contained it (interior zeros).
    pub winding: Option<i64>,
    /// Half-diagonal of the final enclosing rectangle (0 for edge zeros).
    pub radius: f64,
    pub abs_d: f64,
}

/// Values, convergence deltas and windings of `D_N` over a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetScan {
    pub grid: Grid,
    pub section: usize,
    /// Row-major nodes, `iy` outer: `values[iy * (nx + 1) + ix] = D_N(node(ix, iy))`.
    #[serde(with = "cplx::vec")]
    pub values: Vec<C64>,
    /// `|D_N - D_{N-2}|` per node (`D_0 = 1`, `D_{-1} := D_0`).
    pub deltas: Vec<f64>,
    pub min_abs: f64,
    pub max_delta: f64,
    /// `max |D_N - 1|` over the top row. Below 1 this excludes zeros above the grid
    /// (maximum modulus in `w = e^{iz}`).
    pub top_row_max_dev: f64,
    /// `max |D_N(x0 + 2 pi + iy) - D_N(x0 + iy)|` over the grid rows.
    pub periodicity_gap: f64,
    /// Winding per cell, `iy` outer; `None` when an edge of the cell was inconclusive or hit a zero.
    pub windings: Vec<Option<i64>>,
    /// Winding of `D_N` along the outer boundary.
    pub total_winding: Option<i64>,
    pub zeros: Vec<ZeroWitness>,
    /// Edges whose phase could not be followed within budget.
    pub inconclusive: Vec<InconclusiveEdge>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconclusiveEdge {
    #[serde(with = "cplx")]
    pub from: C64,
    #[serde(with = "cplx")]
    pub to: C64,
}

impl DetScan {
    pub fn node(&self, ix: usize, iy: usize) -> C64 {
        self.values[iy * (self.grid.nx + 1) + ix]
    }

    pub fn winding(&self, cx: usize, cy: usize) -> Option<i64> {
        self.windings[cy * self.grid.nx + cx]
    }

    /// Fails with [`Error::InconclusiveWinding`] at the first inconclusive edge.
    pub fn require_conclusive(&self) -> Result<&Self> {
        match self.inconclusive.first() {
            Some(e) => {
                let mid = 0.5 * (e.from + e.to);
                Err(Error::InconclusiveWinding {
                    re: mid.re,
                    im: mid.im,
                })
            }
            None => Ok(self),
        }
    }

    /// Everything except the node arrays.
    pub fn summary(&self) -> ScanSummary {
        ScanSummary {
            grid: self.grid,
            section: self.section,
            min_abs: self.min_abs,
            max_delta: self.max_delta,
            top_row_max_dev: self.top_row_max_dev,
            periodicity_gap: self.periodicity_gap,
            windings: self.windings.clone(),
            total_winding: self.total_winding,
            zeros: self.zeros.clone(),
            inconclusive: self.inconclusive.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub grid: Grid,
    pub section: usize,
    pub min_abs: f64,
    pub max_delta: f64,
    pub top_row_max_dev: f64,
    pub periodicity_gap: f64,
    pub windings: Vec<Option<i64>>,
    pub total_winding: Option<i64>,
    pub zeros: Vec<ZeroWitness>,
    pub inconclusive: Vec<InconclusiveEdge>,
}

enum EdgeTrace {
    /// Accumulated change of `arg D` from start to end.
    Phase(f64),
    Zero(C64, f64),
    Inconclusive,
}

/// Follows `arg f` from `a` to `b`, bisecting while a step exceeds `pi/2`.
fn trace_edge(
    f: &(impl Fn(C64) -> C64 + Sync),
    a: C64,
    b: C64,
    fa: C64,
    fb: C64,
    budget: usize,
) -> EdgeTrace {
    let min_len = 1e-13 * (1.0 + a.norm().max(b.norm()));
    let mut stack = vec![(a, b, fa, fb)];
    let mut total = 0.0;
    let mut evals = 0;
    while let Some((za, zb, va, vb)) = stack.pop() {
        if va == C64::new(0.0, 0.0) {
            return EdgeTrace::Zero(za, 0.0);
        }
        if vb == C64::new(0.0, 0.0) {
            return EdgeTrace::Zero(zb, 0.0);
        }
        let step = (vb / va).arg();
        if step.abs() <= FRAC_PI_2 {
            total += step;
            continue;
        }
        if (zb - za).norm() < min_len {
            let (z, v) = if va.norm() < vb.norm() {
                (za, va)
            } else {
                (zb, vb)
            };
            return EdgeTrace::Zero(z, v.norm());
        }
        if evals >= budget {
            return EdgeTrace::Inconclusive;
        }
        let zm = 0.5 * (za + zb);
        let vm = f(zm);
        evals += 1;
        // second half pushed first so the walk stays ordered
        stack.push((zm, zb, vm, vb));
        stack.push((za, zm, va, vm));
    }
    EdgeTrace::Phase(total)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.x0, self.y0),
            C64::new(self.x1, self.y0),
            C64::new(self.x1, self.y1),
            C64::new(self.x0, self.y1),
        ]
    }
}

enum Winding {
    Count(i64),
    Zero(C64, f64),
    Inconclusive,
}

fn rect_winding(f: &(impl Fn(C64) -> C64 + Sync), r: Rect, budget: usize) -> Winding {
    let c = r.corners();
    let v: Vec<C64> = c.iter().map(|&z| f(z)).collect();
    let mut total = 0.0;
    for k in 0..4 {
        match trace_edge(f, c[k], c[(k + 1) % 4], v[k], v[(k + 1) % 4], budget) {
            EdgeTrace::Phase(p) => total += p,
            EdgeTrace::Zero(z, a) => return Winding::Zero(z, a),
            EdgeTrace::Inconclusive => return Winding::Inconclusive,
        }
    }
    Winding::Count((total / TAU).round() as i64)
}

/// Shrinks `r` (winding > 0) around one zero; returns the final rectangle.
fn localize(
    f: &(impl Fn(C64) -> C64 + Sync),
    mut r: Rect,
    target: f64,
    budget: usize,
) -> Option<(C64, f64)> {
    const FRACTIONS: [f64; 4] = [0.48, 0.53, 0.41, 0.61];
    while (r.x1 - r.x0).max(r.y1 - r.y0) > target {
        let split_x = r.x1 - r.x0 >= r.y1 - r.y0;
        let mut next = None;
        for frac in FRACTIONS {
            let (a, b) = if split_x {
                let xm = r.x0 + frac * (r.x1 - r.x0);
                (Rect { x1: xm, ..r }, Rect { x0: xm, ..r })
            } else {
                let ym = r.y0 + frac * (r.y1 - r.y0);
                (Rect { y1: ym, ..r }, Rect { y0: ym, ..r })
            };
            match rect_winding(f, a, budget) {
                Winding::Count(w) if w > 0 => {
                    next = Some(a);
                    break;
                }
                Winding::Count(_) => {}
                Winding::Zero(z, v) => return Some((z, v)),
                Winding::Inconclusive => continue,
            }
            match rect_winding(f, b, budget) {
                Winding::Count(w) if w > 0 => {
                    next = Some(b);
                    break;
                }
                Winding::Zero(z, v) => return Some((z, v)),
                _ => {}
            }
        }
        r = next?;
    }
    let z = C64::new(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));
    Some((z, f(z).norm()))
}

/// Evaluates `D_N` over `grid` and counts zeros cell by cell.
///
/// Every edge is traced once in its canonical direction (left to right, bottom
/// to top), so the cell windings sum exactly to the outer winding.
pub fn det_scan(
    s: &SpectralData,
    grid: Grid,
    n: usize,
    tol: &Tolerances,
    opts: ScanOptions,
) -> Result<DetScan> {
    grid.validate()?;
    let det = SectionDet::new(s, n, tol)?;
    let lower = n.saturating_sub(2);
    let f = |z: C64| det.eval_leading(z, n);
    let (nx, ny) = (grid.nx, grid.ny);
    let nodes: Vec<(usize, usize)> = (0..=ny)
        .flat_map(|iy| (0..=nx).map(move |ix| (ix, iy)))
        .collect();
    let evaluated: Vec<(C64, f64)> = nodes
        .par_iter()
        .map(|&(ix, iy)| {
            let z = grid.node(ix, iy);
            let d = f(z);
            (d, (d - det.eval_leading(z, lower)).norm())
        })
        .collect();
    let values: Vec<C64> = evaluated.iter().map(|e| e.0).collect();
    let deltas: Vec<f64> = evaluated.iter().map(|e| e.1).collect();
    let at = |ix: usize, iy: usize| values[iy * (nx + 1) + ix];

    let min_abs = values
        .iter()
        .map(|v| v.norm())
        .fold(f64::INFINITY, f64::min);
    let max_delta = deltas.iter().copied().fold(0.0, f64::max);
    let top_row_max_dev = (0..=nx)
        .map(|ix| (at(ix, ny) - 1.0).norm())
        .fold(0.0, f64::max);
    let periodicity_gap = (0..=ny)
        .map(|iy| (at(nx, iy) - at(0, iy)).norm())
        .fold(0.0, f64::max);

    // horizontal edges (ix, iy) -> (ix+1, iy), then vertical (ix, iy) -> (ix, iy+1)
    let mut edges: Vec<(usize, usize, bool)> = Vec::with_capacity(2 * (nx + 1) * (ny + 1));
    for iy in 0..=ny {
        for ix in 0..nx {
            edges.push((ix, iy, true));
        }
    }
    for iy in 0..ny {
        for ix in 0..=nx {
            edges.push((ix, iy, false));
        }
    }
    let traces: Vec<EdgeTrace> = edges
        .par_iter()
        .map(|&(ix, iy, horizontal)| {
            let (jx, jy) = if horizontal {
                (ix + 1, iy)
            } else {
                (ix, iy + 1)
            };
            trace_edge(
                &f,
                grid.node(ix, iy),
                grid.node(jx, jy),
                at(ix, iy),
                at(jx, jy),
                opts.edge_budget,
            )
        })
        .collect();
    let h_index = |ix: usize, iy: usize| iy * nx + ix;
    let v_index = |ix: usize, iy: usize| (ny + 1) * nx + iy * (nx + 1) + ix;
    let phase = |k: usize| match traces[k] {
        EdgeTrace::Phase(p) => Some(p),
        _ => None,
    };

    let mut zeros = Vec::new();
    let mut inconclusive = Vec::new();
    for (k, t) in traces.iter().enumerate() {
        let (ix, iy, horizontal) = edges[k];
        match *t {
            EdgeTrace::Zero(z, a) => zeros.push(ZeroWitness {
                z,
                kind: if horizontal && iy == 0 {
                    ZeroKind::Boundary
                } else {
                    ZeroKind::Edge
                },
                winding: None,
                radius: 0.0,
                abs_d: a,
            }),
            EdgeTrace::Inconclusive => {
                let (jx, jy) = if horizontal {
                    (ix + 1, iy)
                } else {
                    (ix, iy + 1)
                };
                inconclusive.push(InconclusiveEdge {
                    from: grid.node(ix, iy),
                    to: grid.node(jx, jy),
                });
            }
            EdgeTrace::Phase(_) => {}
        }
    }

    let mut windings = Vec::with_capacity(nx * ny);
    for cy in 0..ny {
        for cx in 0..nx {
            let w = (|| {
                let total = phase(h_index(cx, cy))? + phase(v_index(cx + 1, cy))?
                    - phase(h_index(cx, cy + 1))?
                    - phase(v_index(cx, cy))?;
                Some((total / TAU).round() as i64)
            })();
            windings.push(w);
        }
    }
    let total_winding = (|| {
        let mut total = 0.0;
        for ix in 0..nx {
            total += phase(h_index(ix, 0))? - phase(h_index(ix, ny))?;
        }
        for iy in 0..ny {
            total += phase(v_index(nx, iy))? - phase(v_index(0, iy))?;
        }
        Some((total / TAU).round() as i64)
    })();

    let cells: Vec<(usize, usize, i64)> = (0..ny)
        .flat_map(|cy| (0..nx).map(move |cx| (cx, cy)))
        .filter_map(|(cx, cy)| match windings[cy * nx + cx] {
            Some(w) if w != 0 => Some((cx, cy, w)),
            _ => None,
        })
        .collect();
    let localized: Vec<ZeroWitness> = cells
        .par_iter()
        .map(|&(cx, cy, w)| {
            let lo = grid.node(cx, cy);
            let hi = grid.node(cx + 1, cy + 1);
            let rect = Rect {
                x0: lo.re,
                x1: hi.re,
                y0: lo.im,
                y1: hi.im,
            };
            let half_diag = |r: f64| r * std::f64::consts::SQRT_2 / 2.0;
            match localize(&f, rect, opts.refine_to, opts.edge_budget) {
                Some((z, a)) => ZeroWitness {
                    z,
                    kind: ZeroKind::Interior,
                    winding: Some(w),
                    radius: half_diag(opts.refine_to),
                    abs_d: a,
                },
                None => {
                    let z = 0.5 * (lo + hi);
                    ZeroWitness {
                        z,
                        kind: ZeroKind::Interior,
                        winding: Some(w),
                        radius: 0.5 * (hi - lo).norm(),
                        abs_d: f(z).norm(),
                    }
                }
            }
        })
        .collect();
    zeros.extend(localized);
    // a zero sitting on a node or shared edge is reached from several edges
    let mut unique: Vec<ZeroWitness> = Vec::with_capacity(zeros.len());
    for z in zeros {
        if !unique
            .iter()
            .any(|u| (u.z - z.z).norm() <= 10.0 * opts.refine_to + u.radius + z.radius)
        {
            unique.push(z);
        }
    }
    let zeros = unique;

    Ok(DetScan {
        grid,
        section: n,
        values,
        deltas,
        min_abs,
        max_delta,
        top_row_max_dev,
        periodicity_gap,
        windings,
        total_winding,
        zeros,
        inconclusive,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Accept,
    Reject,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Section size; defaults to the data truncation when `None`.
    pub section: Option<usize>,
    pub grid: Grid,
    pub scan: ScanOptions,
    pub tol: Tolerances,
    /// Search size for `a_m`.
    pub amax_search: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            section: None,
            grid: Grid::default(),
            scan: ScanOptions::default(),
            tol: Tolerances::default(),
            amax_search: 64,
        }
    }
}

/// What a verdict was computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    #[serde(rename = "N_data")]
    pub n_data: usize,
    pub section: usize,
    pub grid: Grid,
    pub min_abs: f64,
    pub max_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub reasons: Vec<String>,
    pub conditions: ConditionReport,
    pub amax: Amax,
    pub scan: ScanSummary,
    pub truncation: Truncation,
}

/// Summability gate plus half-plane zero scan.
///
/// `ACCEPT` means no obstruction was found at this truncation and resolution.
pub fn characterize(s: &SpectralData, config: &CheckConfig) -> Result<CheckReport> {
    let order = s.order();
    let amax = a_max(order, config.amax_search)?;
    let conditions = weighted_sums_with(s, None, amax.value);
    let section = config.section.unwrap_or(s.n_max()).min(s.n_max());
    let scan = det_scan(s, config.grid, section, &config.tol, config.scan)?;
    let mut reasons = Vec::new();
    let verdict = if !scan.zeros.is_empty() {
        for z in &scan.zeros {
            reasons.push(format!(
                "{:?} zero of D_{section} near {:.9}{:+.9}i (|D| = {:.2e})",
                z.kind, z.z.re, z.z.im, z.abs_d
            ));
        }
        Verdict::Reject
    } else {
        let mut ok = true;
        if !conditions.flags.l1 {
            ok = false;
            reasons.push(format!(
                "weighted l1 condition not supported by the tail (fitted exponent {:?})",
                conditions.tail_exponent
            ));
        }
        if !scan.inconclusive.is_empty() {
            ok = false;
            reasons.push(format!(
                "{} edge(s) with inconclusive winding",
                scan.inconclusive.len()
            ));
        }
        if !(scan.top_row_max_dev < 1.0) {
            ok = false;
            reasons.push(format!(
                "|D - 1| = {:.3e} on the top row; zeros above the grid not excluded",
                scan.top_row_max_dev
            ));
        }
        if ok {
            reasons.push("no zero found in the scanned closed half-strip".into());
            Verdict::Accept
        } else {
            Verdict::Inconclusive
        }
    };
    let truncation = Truncation {
        n_data: s.n_max(),
        section,
        grid: config.grid,
        min_abs: scan.min_abs,
        max_delta: scan.max_delta,
    };
    Ok(CheckReport {
        verdict,
        reasons,
        conditions,
        amax,
        scan: scan.summary(),
        truncation,
    })
}
