//! Model order, roots of unity, the pole lattice, and the two coefficient forms
//! of the potential.
//!
//! The periodic problem in `x` is mapped to a half-line problem by `x = it`,
//! `lambda = -ik`. Under that substitution the coefficient of `Y^(g)` becomes
//! `Q_g(t) = (-1)^m (-i)^g p_g(it)`, so a periodic coefficient `p_{g,n}`
//! turns into the half-line coefficient `q_{g,n} = (-1)^m (-i)^g p_{g,n}` of
//! `e^{-nt}`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::{Error, Result, C64};

/// The integer `m` fixing operator order `2m` and branch count `2m - 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct ModelOrder(usize);

impl TryFrom<usize> for ModelOrder {
    type Error = Error;
    fn try_from(m: usize) -> Result<Self> {
        ModelOrder::new(m)
    }
}

impl From<ModelOrder> for usize {
    fn from(o: ModelOrder) -> usize {
        o.0
    }
}

impl ModelOrder {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidOrder(0));
        }
        Ok(Self(m))
    }

    #[inline]
    pub fn m(self) -> usize {
        self.0
    }

    /// Number of non-trivial branches, `J = 2m - 1`.
    #[inline]
    pub fn branches(self) -> usize {
        2 * self.0 - 1
    }

    /// Operator order `2m`.
    #[inline]
    pub fn operator_order(self) -> usize {
        2 * self.0
    }

    /// Highest potential index `2m - 2`.
    #[inline]
    pub fn top_gamma(self) -> usize {
        2 * self.0 - 2
    }

    /// `omega_j = exp(i j pi / m)`, defined for every integer `j` (taken mod `2m`).
    pub fn omega(self, j: usize) -> C64 {
        let two_m = 2 * self.0;
        let j = j % two_m;
        // snap the quarter turns so that 1, i, -1, -i come out exact
        if (4 * j).is_multiple_of(two_m) {
            return match 4 * j / two_m {
                0 => C64::new(1.0, 0.0),
                1 => C64::new(0.0, 1.0),
                2 => C64::new(-1.0, 0.0),
                _ => C64::new(0.0, -1.0),
            };
        }
        let (s, c) = (PI * j as f64 / self.0 as f64).sin_cos();
        C64::new(c, s)
    }

    /// `1 / (1 - omega_j) = 1/2 + (i/2) cot(j pi / 2m)` for `j` in `[1, 2m-1]`.
    ///
    /// Evaluated through the cotangent so that the real part is exactly one half.
    pub fn inv_one_minus(self, j: usize) -> Result<C64> {
        self.check_branch(j)?;
        let half_angle = PI * j as f64 / (2 * self.0) as f64;
        let cot = if 2 * j == 2 * self.0 {
            0.0
        } else {
            half_angle.cos() / half_angle.sin()
        };
        Ok(C64::new(0.5, 0.5 * cot))
    }

    /// `1 - omega_j`.
    pub fn one_minus(self, j: usize) -> Result<C64> {
        self.check_branch(j)?;
        Ok(C64::new(1.0, 0.0) - self.omega(j))
    }

    pub(crate) fn check_branch(self, j: usize) -> Result<()> {
        if j == 0 || j > self.branches() {
            return Err(Error::InvalidBranch {
                j,
                max: self.branches(),
            });
        }
        Ok(())
    }

    /// `w_{nj} = n / (1 - omega_j)`; equals `i k_{nj}` and has real part `n/2`.
    #[inline]
    pub(crate) fn w(self, n: usize, j: usize) -> C64 {
        // callers iterate j over 1..=J only
        let half_angle = PI * j as f64 / (2 * self.0) as f64;
        let cot = if j == self.0 {
            0.0
        } else {
            half_angle.cos() / half_angle.sin()
        };
        C64::new(0.5 * n as f64, 0.5 * n as f64 * cot)
    }
}

/// One of the `2m` roots of unity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branch {
    pub j: usize,
    pub omega: C64,
}

/// `omega_0, ..., omega_{2m-1}` in index order.
pub fn roots_of_unity(order: ModelOrder) -> Vec<Branch> {
    (0..order.operator_order())
        .map(|j| Branch {
            j,
            omega: order.omega(j),
        })
        .collect()
}

/// Half-line pole `k_{nj} = -i n / (1 - omega_j)`.
pub fn pole(n: usize, j: usize, order: ModelOrder) -> Result<C64> {
    Ok(C64::new(0.0, -(n as f64)) * order.inv_one_minus(j)?)
}

/// Periodic-axis pole `lambda_{nj} = -n / (1 - omega_j)`.
pub fn lambda_pole(n: usize, j: usize, order: ModelOrder) -> Result<C64> {
    Ok(-(n as f64) * order.inv_one_minus(j)?)
}

/// Which coefficient convention a [`FourierPotential`] carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    /// `p_{g,n}`, coefficients of `e^{inx}` on the real axis.
    Periodic,
    /// `q_{g,n}`, coefficients of `e^{-nt}` in the half-line equation.
    Halfline,
}

/// Triangular-indexed coefficient table `c[g][n]`, `g` in `[0, 2m-2]`, `n` in `[1, N]`.
///
/// There is no `n = 0` slot. Absent modes are exact zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierPotential {
    order: ModelOrder,
    form: Form,
    n_max: usize,
    coeffs: Vec<Vec<C64>>,
}

impl FourierPotential {
    pub fn zeros(order: ModelOrder, form: Form, n_max: usize) -> Self {
        Self {
            order,
            form,
            n_max,
            coeffs: vec![vec![C64::new(0.0, 0.0); n_max]; order.top_gamma() + 1],
        }
    }

    /// Builds a potential from `(gamma, n, value)` triples; repeated slots are rejected.
    pub fn from_entries(
        order: ModelOrder,
        form: Form,
        n_max: usize,
        entries: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Result<Self> {
        let mut p = Self::zeros(order, form, n_max);
        let mut seen = vec![vec![false; n_max]; order.top_gamma() + 1];
        for (gamma, n, v) in entries {
            p.check_slot(gamma, n)?;
            if std::mem::replace(&mut seen[gamma][n - 1], true) {
                return Err(Error::InvalidInput(format!(
                    "duplicate coefficient (gamma={gamma}, n={n})"
                )));
            }
            p.coeffs[gamma][n - 1] = v;
        }
        Ok(p)
    }

    fn check_slot(&self, gamma: usize, n: usize) -> Result<()> {
        if gamma > self.order.top_gamma() {
            return Err(Error::InvalidInput(format!(
                "gamma = {gamma} exceeds 2m-2 = {}",
                self.order.top_gamma()
            )));
        }
        if n == 0 || n > self.n_max {
            return Err(Error::InvalidInput(format!(
                "frequency n = {n} outside [1, {}]",
                self.n_max
            )));
        }
        Ok(())
    }

    pub fn order(&self) -> ModelOrder {
        self.order
    }

    pub fn form(&self) -> Form {
        self.form
    }

    /// Truncation `N` (largest retained frequency).
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Coefficient at `(gamma, n)`; zero for `n = 0` or `n > N`.
    #[inline]
    pub fn get(&self, gamma: usize, n: usize) -> C64 {
        if n == 0 || n > self.n_max {
            C64::new(0.0, 0.0)
        } else {
            self.coeffs[gamma][n - 1]
        }
    }

    pub fn set(&mut self, gamma: usize, n: usize, v: C64) -> Result<()> {
        self.check_slot(gamma, n)?;
        self.coeffs[gamma][n - 1] = v;
        Ok(())
    }

    /// Iterates `(gamma, n, value)` over every slot, zeros included.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.coeffs
            .iter()
            .enumerate()
            .flat_map(|(g, row)| row.iter().enumerate().map(move |(i, &v)| (g, i + 1, v)))
    }

    /// `sum_g sum_n n^g |c[g][n]|`.
    pub fn weighted_norm(&self) -> f64 {
        self.entries()
            .map(|(g, n, v)| (n as f64).powi(g as i32) * v.norm())
            .sum()
    }

    /// Same coefficients, truncation changed (padding with zeros or cutting).
    pub fn with_truncation(&self, n_max: usize) -> Self {
        let mut out = Self::zeros(self.order, self.form, n_max);
        for g in 0..=self.order.top_gamma() {
            for n in 1..=n_max.min(self.n_max) {
                out.coeffs[g][n - 1] = self.coeffs[g][n - 1];
            }
        }
        out
    }

    /// The potential translated by `a`: every mode `n` picks up `e^{ina}`.
    pub fn shifted(&self, a: C64) -> Result<Self> {
        if a.im < 0.0 {
            return Err(Error::LowerHalfPlane(a.im));
        }
        let mut out = self.clone();
        for row in out.coeffs.iter_mut() {
            for (i, c) in row.iter_mut().enumerate() {
                *c *= (C64::i() * (i + 1) as f64 * a).exp();
            }
        }
        Ok(out)
    }

    /// Largest coefficientwise modulus of the difference, over the union of both truncations.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let n = self.n_max.max(other.n_max);
        let top = self.order.top_gamma().max(other.order.top_gamma());
        let mut worst: f64 = 0.0;
        for g in 0..=top {
            for k in 1..=n {
                let a = if g <= self.order.top_gamma() {
                    self.get(g, k)
                } else {
                    C64::new(0.0, 0.0)
                };
                let b = if g <= other.order.top_gamma() {
                    other.get(g, k)
                } else {
                    C64::new(0.0, 0.0)
                };
                worst = worst.max((a - b).norm());
            }
        }
        worst
    }

    fn rescaled(&self, form: Form, inverse: bool) -> Self {
        let mut out = self.clone();
        out.form = form;
        let m = self.order.m();
        for (g, row) in out.coeffs.iter_mut().enumerate() {
            let f = halfline_factor(m, g);
            let f = if inverse { f.inv() } else { f };
            for c in row.iter_mut() {
                *c *= f;
            }
        }
        out
    }
}

/// `(-1)^m (-i)^g`, a unit so both directions are exact.
fn halfline_factor(m: usize, g: usize) -> C64 {
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let rot = match g % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    };
    rot * sign
}

/// `q_{g,n} = (-1)^m (-i)^g p_{g,n}`. A half-line input is returned unchanged.
pub fn to_halfline(p: &FourierPotential) -> FourierPotential {
    match p.form {
        Form::Halfline => p.clone(),
        Form::Periodic => p.rescaled(Form::Halfline, false),
    }
}

/// Inverse of [`to_halfline`]. A periodic input is returned unchanged.
pub fn from_halfline(q: &FourierPotential) -> FourierPotential {
    match q.form {
        Form::Periodic => q.clone(),
        Form::Halfline => q.rescaled(Form::Periodic, true),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn roots_small_orders() {
        let r1 = roots_of_unity(ModelOrder::new(1).unwrap());
        assert_eq!(r1.len(), 2);
        assert_eq!(r1[0].omega, c(1.0, 0.0));
        assert_eq!(r1[1].omega, c(-1.0, 0.0));

        let r2: Vec<_> = roots_of_unity(ModelOrder::new(2).unwrap())
            .into_iter()
            .map(|b| b.omega)
            .collect();
        assert_eq!(
            r2,
            vec![c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
        );

        let w = ModelOrder::new(3).unwrap().omega(1);
        assert!((w - c(0.5, 0.866_025_403_784_438_6)).norm() < 1e-15);
    }

    #[test]
    fn roots_are_distinct_units() {
        for m in 1..=8 {
            let o = ModelOrder::new(m).unwrap();
            let r = roots_of_unity(o);
            for (a, b) in r.iter().enumerate() {
                assert!((b.omega.norm() - 1.0).abs() < 1e-15);
                assert!((b.omega.powu(2 * m as u32) - 1.0).norm() < 1e-13);
                for other in &r[a + 1..] {
                    assert!((b.omega - other.omega).norm() > 1e-3);
                }
            }
        }
    }

    #[test]
    fn zero_order_rejected() {
        assert!(matches!(ModelOrder::new(0), Err(Error::InvalidOrder(0))));
    }

    #[test]
    fn poles_examples() {
        let o1 = ModelOrder::new(1).unwrap();
        assert!((pole(1, 1, o1).unwrap() - c(0.0, -0.5)).norm() < 1e-15);
        assert!((lambda_pole(2, 1, o1).unwrap() - c(-1.0, 0.0)).norm() < 1e-15);
        let o2 = ModelOrder::new(2).unwrap();
        assert!((pole(1, 2, o2).unwrap() - c(0.0, -0.5)).norm() < 1e-15);
        assert!(matches!(
            pole(1, 0, o2),
            Err(Error::InvalidBranch { j: 0, .. })
        ));
        assert!(pole(1, 4, o2).is_err());
    }

    #[test]
    fn inv_one_minus_matches_direct_division() {
        for m in 1..=8 {
            let o = ModelOrder::new(m).unwrap();
            for j in 1..o.operator_order() {
                let direct = (c(1.0, 0.0) - o.omega(j)).inv();
                let viacot = o.inv_one_minus(j).unwrap();
                assert!((direct - viacot).norm() < 1e-12 * direct.norm().max(1.0));
                assert!((direct.re - 0.5).abs() < 1e-14);
                assert_eq!(o.w(3, j), 3.0 * viacot);
            }
        }
    }

    #[test]
    fn pole_lattice_is_separated() {
        for m in 1..=4 {
            let o = ModelOrder::new(m).unwrap();
            let mut pts = Vec::new();
            for n in 1..=24 {
                for j in 1..=o.branches() {
                    pts.push(o.w(n, j));
                }
            }
            for a in 0..pts.len() {
                for b in a + 1..pts.len() {
                    assert!((pts[a] - pts[b]).norm() > 1e-12);
                }
            }
        }
    }

    #[test]
    fn halfline_conversion_examples() {
        let o1 = ModelOrder::new(1).unwrap();
        let p =
            FourierPotential::from_entries(o1, Form::Periodic, 3, [(0, 2, c(0.3, -0.1))]).unwrap();
        let q = to_halfline(&p);
        assert_eq!(q.form(), Form::Halfline);
        assert_eq!(q.get(0, 2), -c(0.3, -0.1));

        let o2 = ModelOrder::new(2).unwrap();
        let p =
            FourierPotential::from_entries(o2, Form::Periodic, 2, [(1, 1, c(2.0, 1.0))]).unwrap();
        assert_eq!(to_halfline(&p).get(1, 1), c(0.0, -1.0) * c(2.0, 1.0));
        assert_eq!(from_halfline(&to_halfline(&p)), p);
    }

    #[test]
    fn rejects_bad_slots() {
        let o = ModelOrder::new(2).unwrap();
        assert!(
            FourierPotential::from_entries(o, Form::Halfline, 4, [(3, 1, c(1.0, 0.0))]).is_err()
        );
        assert!(
            FourierPotential::from_entries(o, Form::Halfline, 4, [(0, 0, c(1.0, 0.0))]).is_err()
        );
        assert!(
            FourierPotential::from_entries(o, Form::Halfline, 4, [(0, 5, c(1.0, 0.0))]).is_err()
        );
        assert!(FourierPotential::from_entries(
            o,
            Form::Halfline,
            4,
            [(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0))]
        )
        .is_err());
    }

    #[test]
    fn shift_rejects_lower_half_plane() {
        let o = ModelOrder::new(1).unwrap();
        let q = FourierPotential::zeros(o, Form::Halfline, 2);
        assert!(matches!(
            q.shifted(c(0.0, -0.1)),
            Err(Error::LowerHalfPlane(_))
        ));
    }
}
