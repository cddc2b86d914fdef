//! Independent numerical oracles: adaptive quadrature for the integral
//! identities, RK4 integration of the half-line equation, direct residues for
//! the diagonal of the triangle, and nalgebra for the dense determinants.

use perispec::evalseries::{eval_f, eval_ftilde, eval_k, SeriesBudget};
use perispec::forward::{forward_map, SpectralData, WaveTriangle};
use perispec::inverse::{marchenko_matrix, marchenko_solve, v_from_s};
use perispec::lattice::{pole, Form};
use perispec::quad::{integrate, integrate_to_infinity};
use perispec::{FourierPotential, ModelOrder, Tolerances, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn desk_m1(n_max: usize) -> FourierPotential {
    FourierPotential::from_entries(
        ModelOrder::new(1).unwrap(),
        Form::Halfline,
        n_max,
        [(0, 1, c(0.5, 0.0))],
    )
    .unwrap()
}

fn desk_m2(n_max: usize) -> FourierPotential {
    FourierPotential::from_entries(
        ModelOrder::new(2).unwrap(),
        Form::Halfline,
        n_max,
        [(0, 1, c(0.1, 0.0)), (1, 1, c(0.0, 0.05))],
    )
    .unwrap()
}

fn w(order: ModelOrder, n: usize, j: usize) -> C64 {
    n as f64 * order.inv_one_minus(j).unwrap()
}

fn desk_data() -> Vec<SpectralData> {
    let tol = Tolerances::default();
    vec![
        forward_map(&desk_m1(6), 6, &tol).unwrap().1,
        forward_map(&desk_m2(4), 4, &tol).unwrap().1,
    ]
}

#[test]
fn section_entries_match_quadrature() {
    let tol = Tolerances::default();
    for s in desk_data() {
        let order = s.order();
        let size = s.n_max().min(3);
        for t in [0.0, 0.4] {
            let sec = marchenko_matrix(&s, t, size, &tol).unwrap();
            for n in 1..=size {
                for j in 1..=order.branches() {
                    for r in 1..=size {
                        for l in 1..=order.branches() {
                            let a = s.get(n, j) / (C64::i() * order.one_minus(j).unwrap());
                            let (wn, wr) = (w(order, n, j), w(order, r, l));
                            let f = |x: f64| a * (-wn * x).exp() * ((wr - r as f64) * x).exp();
                            let decay = 0.5 * (n + r) as f64;
                            let q = integrate_to_infinity(f, t, 80.0 / decay, decay, 1e-13);
                            let e = sec.entry(n, j, r, l);
                            assert!(
                                (q.value - e).norm() <= 1e-9,
                                "m={} ({n},{j};{r},{l}) t={t}: {} vs {}",
                                order.m(),
                                q.value,
                                e
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn marchenko_kernel_solves_the_main_equation() {
    let tol = Tolerances::default();
    for s in desk_data() {
        for t in [0.0, 0.3, 1.0] {
            let kernel = marchenko_solve(&s, t, s.n_max(), &tol).unwrap();
            for u in [t, t + 0.5, t + 2.0] {
                let integrand =
                    |x: f64| kernel.eval(x) * eval_ftilde(x, u, &s, SeriesBudget::default()).value;
                let q = integrate_to_infinity(integrand, t, 70.0, 1.0, 1e-13);
                let lhs = kernel.eval(u);
                let rhs = eval_ftilde(t, u, &s, SeriesBudget::default()).value + q.value;
                assert!((lhs - rhs).norm() <= 1e-8, "t={t} u={u}: {lhs} vs {rhs}");
            }
        }
    }
}

#[test]
fn transform_identity_holds() {
    // f(t, k) = e^{ikt} + int_t^inf K(t, u) e^{iku} du
    let tol = Tolerances::default();
    let k = c(2.0, 0.5);
    for (q, n) in [(desk_m1(16), 16), (desk_m2(12), 12)] {
        let (v, _) = forward_map(&q, n, &tol).unwrap();
        for t in [0.0, 0.25, 1.0] {
            let integrand = |u: f64| {
                eval_k(t, u, &v, SeriesBudget::default()).unwrap().value * (C64::i() * k * u).exp()
            };
            let quad = integrate_to_infinity(integrand, t, 70.0, 1.0, 1e-13);
            let rhs = (C64::i() * k * t).exp() + quad.value;
            let f = eval_f(c(t, 0.0), k, 0, &v, SeriesBudget::default(), &tol).unwrap();
            assert!(
                (f.value - rhs).norm() <= 1e-8,
                "m={} t={t}: {} vs {}",
                q.order().m(),
                f.value,
                rhs
            );
        }
    }
}

// y^(2m) = (-1)^m (k^{2m} y - sum_g Q_g y^(g)), Q_g(t) = sum_n q_{g n} e^{-nt}
fn rk4_from_infinity(q: &FourierPotential, k: C64, t_start: f64, steps: usize) -> C64 {
    let order = q.order();
    let dim = order.operator_order();
    let sign = if order.m().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    let k2m = k.powu(dim as u32);
    let rhs = |t: f64, y: &[C64]| -> Vec<C64> {
        let mut out = Vec::with_capacity(dim);
        out.extend_from_slice(&y[1..]);
        let mut acc = k2m * y[0];
        for (g, yg) in y.iter().enumerate().take(order.top_gamma() + 1) {
            let mut qg = C64::new(0.0, 0.0);
            for n in 1..=q.n_max() {
                qg += q.get(g, n) * (-(n as f64) * t).exp();
            }
            acc -= qg * yg;
        }
        out.push(sign * acc);
        out
    };
    // at t_start the correction terms are below e^{-t_start}
    let mut y: Vec<C64> = (0..dim)
        .map(|p| (C64::i() * k).powu(p as u32) * (C64::i() * k * t_start).exp())
        .collect();
    let h = -t_start / steps as f64;
    let mut t = t_start;
    for _ in 0..steps {
        let k1 = rhs(t, &y);
        let y2: Vec<C64> = y.iter().zip(&k1).map(|(a, b)| a + b * (h / 2.0)).collect();
        let k2 = rhs(t + h / 2.0, &y2);
        let y3: Vec<C64> = y.iter().zip(&k2).map(|(a, b)| a + b * (h / 2.0)).collect();
        let k3 = rhs(t + h / 2.0, &y3);
        let y4: Vec<C64> = y.iter().zip(&k3).map(|(a, b)| a + b * h).collect();
        let k4 = rhs(t + h, &y4);
        for i in 0..dim {
            y[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
        }
        t += h;
    }
    y[0]
}

#[test]
fn series_matches_ode_integration() {
    let tol = Tolerances::default();
    // k chosen so that e^{ikt} decays fastest among e^{ik omega t}: backward integration is stable
    for (q, k) in [(desk_m1(20), c(2.0, 0.5)), (desk_m2(20), c(0.5, 2.0))] {
        let (v, _) = forward_map(&q, 20, &tol).unwrap();
        let series = eval_f(c(0.0, 0.0), k, 0, &v, SeriesBudget::default(), &tol).unwrap();
        let ode = rk4_from_infinity(&q, k, 40.0, 40_000);
        let rel = (series.value - ode).norm() / ode.norm();
        assert!(
            rel <= 1e-6,
            "m={}: {} vs {} (rel {rel:e})",
            q.order().m(),
            series.value,
            ode
        );
    }
}

#[test]
fn diagonal_matches_direct_residue() {
    // V_{aa}^{(j)} = -(1 - omega_j) N_a(k_aj) / D_a'(k_aj), where the series
    // coefficient c_a = -N_a / D_a is built from lower columns only
    let tol = Tolerances::default();
    for (q, n_max) in [(desk_m1(6), 6), (desk_m2(6), 6)] {
        let order = q.order();
        let two_m = order.operator_order() as u32;
        let (v, _) = forward_map(&q, n_max, &tol).unwrap();
        let c_s = |s: usize, k: C64| -> C64 {
            let mut acc = C64::new(0.0, 0.0);
            for j in 1..=order.branches() {
                for n in 1..=s {
                    acc += v.get(j, n, s)
                        / (C64::new(0.0, n as f64) + k * order.one_minus(j).unwrap());
                }
            }
            acc
        };
        for alpha in 1..=n_max {
            for j in 1..=order.branches() {
                let k = pole(alpha, j, order).unwrap();
                let ik = C64::i() * k;
                let mut num = C64::new(0.0, 0.0);
                let mut num_abs = 0.0;
                for g in 0..=order.top_gamma() {
                    let free = q.get(g, alpha) * ik.powu(g as u32);
                    num += free;
                    num_abs += free.norm();
                    for s in 1..alpha {
                        let term = q.get(g, alpha - s) * (ik - s as f64).powu(g as u32) * c_s(s, k);
                        num += term;
                        num_abs += term.norm();
                    }
                }
                let ia = C64::new(0.0, alpha as f64);
                let d_prime =
                    (k + ia).powu(two_m - 1) * two_m as f64 - k.powu(two_m - 1) * two_m as f64;
                let expect = -order.one_minus(j).unwrap() * num / d_prime;
                let got = v.get(j, alpha, alpha);
                // the diagonal solve mixes the whole column, so its roundoff scales with it
                let column = (1..=alpha)
                    .map(|n| v.get(j, n, alpha).norm())
                    .fold(0.0, f64::max);
                let scale =
                    column.max(order.one_minus(j).unwrap().norm() * num_abs / d_prime.norm());
                assert!(
                    (got - expect).norm() <= 1e-10 * scale,
                    "m={} alpha={alpha} j={j}: {got} vs {expect}",
                    order.m()
                );
            }
        }
    }
}

#[test]
fn section_determinant_matches_nalgebra() {
    let tol = Tolerances::default();
    for s in desk_data() {
        for t in [c(0.0, 0.0), c(0.2, -1.3)] {
            let sec = marchenko_matrix(&s, t, s.n_max(), &tol).unwrap();
            let g = sec.matrix();
            let dim = g.dim();
            let a = nalgebra::DMatrix::<C64>::from_fn(dim, dim, |i, j| {
                let d = if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) };
                d - g[(i, j)]
            });
            let expect = a.determinant();
            let got = sec.determinant();
            assert!(
                (got - expect).norm() <= 1e-12 * expect.norm().max(1.0),
                "{got} vs {expect}"
            );
        }
    }
}

#[test]
fn marchenko_and_series_kernels_agree() {
    let tol = Tolerances::default();
    for s in desk_data() {
        // the section is exact for truncated data; extend the triangle well past N
        let v: WaveTriangle = v_from_s(&s, s.n_max() + 30, &tol).unwrap();
        for (t, u) in [(0.0, 0.5), (0.3, 1.0), (1.0, 2.0)] {
            let a = marchenko_solve(&s, t, s.n_max(), &tol).unwrap().eval(u);
            let b = eval_k(t, u, &v, SeriesBudget::default()).unwrap().value;
            assert!((a - b).norm() <= 1e-12, "({t},{u}): {a} vs {b}");
        }
    }
}

#[test]
fn quadrature_recovers_a_known_integral() {
    // sanity for the oracle itself: int_0^1 e^{(2+i) x} dx
    let z = c(2.0, 1.0);
    let r = integrate(|x| (z * x).exp(), 0.0, 1.0, 1e-14);
    assert!((r.value - (z.exp() - 1.0) / z).norm() < 1e-13);
}
