use std::f64::consts::TAU;

use proptest::prelude::*;

use perispec::characterize::{
    det_scan, det_section, theorem1_data, theorem1_det, Grid, ScanOptions,
};
use perispec::evalseries::{eval_k, SeriesBudget};
use perispec::forward::{forward_map, shift_data, SpectralData};
use perispec::inverse::{inverse_map, triangle_via_marchenko, v_from_s};
use perispec::lattice::Form;
use perispec::{FourierPotential, ModelOrder, Tolerances, C64};

fn complex(bound: f64) -> impl Strategy<Value = C64> {
    (-bound..bound, -bound..bound).prop_map(|(a, b)| C64::new(a, b))
}

/// Half-line potential with modes n <= 3, coefficients decaying in gamma.
fn potential(m: usize, n_max: usize) -> impl Strategy<Value = FourierPotential> {
    let order = ModelOrder::new(m).unwrap();
    let slots = order.top_gamma() + 1;
    proptest::collection::vec(complex(0.2), slots * 3).prop_map(move |vals| {
        let mut q = FourierPotential::zeros(order, Form::Halfline, n_max);
        for g in 0..slots {
            for n in 1..=3.min(n_max) {
                q.set(g, n, vals[g * 3 + n - 1] / (1 + g) as f64).unwrap();
            }
        }
        q
    })
}

/// `|S_{nj}| <= 0.1 n^{-4}`.
fn spectral(m: usize, n_max: usize) -> impl Strategy<Value = SpectralData> {
    let order = ModelOrder::new(m).unwrap();
    let jj = order.branches();
    proptest::collection::vec((0.0..1.0f64, 0.0..TAU), n_max * jj).prop_map(move |vals| {
        SpectralData::from_fn(order, n_max, |n, j| {
            let (r, phi) = vals[(n - 1) * jj + (j - 1)];
            C64::from_polar(0.1 * r * (n as f64).powi(-4), phi)
        })
    })
}

fn order_and_potential() -> impl Strategy<Value = FourierPotential> {
    prop_oneof![potential(1, 8), potential(2, 6)]
}

fn order_and_data() -> impl Strategy<Value = SpectralData> {
    prop_oneof![spectral(1, 8), spectral(2, 8)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shift_covariance(q in order_and_potential(), re in 0.0..TAU, im in 0.0..0.5f64) {
        let tol = Tolerances::default();
        let a = C64::new(re, im);
        let n = q.n_max();
        let (_, s) = forward_map(&q, n, &tol).unwrap();
        let (_, shifted) = forward_map(&q.shifted(a).unwrap(), n, &tol).unwrap();
        let expect = shift_data(&s, a).unwrap();
        prop_assert!(shifted.max_abs_diff(&expect) <= 1e-12);
    }

    #[test]
    fn potential_round_trip(q in order_and_potential()) {
        let tol = Tolerances::default();
        let n = q.n_max();
        let (_, s) = forward_map(&q, n, &tol).unwrap();
        let back = inverse_map(&s, n, &tol).unwrap();
        prop_assert!(q.max_abs_diff(&back) <= 1e-9, "gap {:e}", q.max_abs_diff(&back));
    }

    #[test]
    fn spectral_round_trip(s in order_and_data()) {
        let tol = Tolerances::default();
        let q = inverse_map(&s, s.n_max(), &tol).unwrap();
        let (_, again) = forward_map(&q, s.n_max(), &tol).unwrap();
        prop_assert!(s.max_abs_diff(&again) <= 1e-9);
    }

    #[test]
    fn marchenko_route_matches_recurrence(s in order_and_data()) {
        let tol = Tolerances::default();
        let n = 5;
        let s = s.with_truncation(n);
        let a = v_from_s(&s, n, &tol).unwrap();
        let b = triangle_via_marchenko(&s, n, 64, &tol).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-10, "gap {:e}", a.max_abs_diff(&b));
    }

    #[test]
    fn kernel_tail_estimate_covers_the_next_terms(q in order_and_potential(), t in 0.0..1.0f64, du in 0.0..1.0f64) {
        let tol = Tolerances::default();
        let n = q.n_max();
        let (v, _) = forward_map(&q, n + 4, &tol).unwrap();
        let short = eval_k(t, t + du, &v, SeriesBudget { terms: Some(n), ..Default::default() }).unwrap();
        let long = eval_k(t, t + du, &v, SeriesBudget::default()).unwrap();
        let gap = (long.value - short.value).norm();
        prop_assert!(gap <= short.error_bound + 1e-15, "gap {gap:e} bound {:e}", short.error_bound);
    }

    #[test]
    fn equivalent_determinant_form_agrees(s in spectral(1, 5), x in -4.0..4.0f64, y in 0.0..2.0f64, scale in 1.0..40.0f64) {
        // rescale so the entries are O(1) rather than tiny
        let s = SpectralData::from_fn(s.order(), s.n_max(), |n, j| s.get(n, j) * scale * (n as f64).powi(2));
        let z = C64::new(x, y);
        let a = det_section(&s, z, 5, &Tolerances::default()).unwrap();
        let b = theorem1_det(&theorem1_data(&s), z, 5);
        prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0));
    }

    #[test]
    fn determinant_is_periodic(s in order_and_data(), x in -4.0..4.0f64, y in 0.0..2.0f64) {
        let z = C64::new(x, y);
        let tol = Tolerances::default();
        let a = det_section(&s, z, s.n_max(), &tol).unwrap();
        let b = det_section(&s, z + TAU, s.n_max(), &tol).unwrap();
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn cell_windings_sum_to_outer_winding(s in spectral(1, 3), scale in 1.0..60.0f64, x0 in -3.0..3.0f64) {
        let s = SpectralData::from_fn(s.order(), 3, |n, j| s.get(n, j) * scale);
        let grid = Grid { x0, ymax: 4.0, nx: 12, ny: 8 };
        let scan = det_scan(&s, grid, 3, &Tolerances::default(), ScanOptions::default()).unwrap();
        if let Some(total) = scan.total_winding {
            if scan.windings.iter().all(|w| w.is_some()) {
                let sum: i64 = scan.windings.iter().map(|w| w.unwrap()).sum();
                prop_assert_eq!(sum, total);
            }
        }
        prop_assert!(scan.periodicity_gap <= 1e-12 * scan.values.iter().map(|v| v.norm()).fold(1.0, f64::max));
    }
}
