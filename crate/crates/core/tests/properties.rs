//! Randomized invariants over the valid parameter region: conservation
//! structure of the generators, probability bounds on transmission, and
//! exactness of the stored observable fields.

use proptest::prelude::*;
use qdpc_core::rates::{
    assault_frequency, build_profile, planck_occupation, tunneling_rate,
    tunneling_rate_closed_form, wkb_transmission_numeric,
};
use qdpc_core::{
    coupled_generator, derive_rates, log_grid, matrix_exponential_apply, operating_point,
    uncoupled_generator, DeviceParams, ModelKind, PointFlag, N_STATES,
};

/// Reference device with the scan knobs replaced.
fn device(
    d_perp: f64,
    e_star: f64,
    w_br: f64,
    dipole_fraction: f64,
    t_a: f64,
    gamma_load: f64,
) -> DeviceParams {
    DeviceParams {
        d_perp,
        e_star,
        w_br,
        dipole_fraction,
        t_a,
        gamma_load,
        ..DeviceParams::default()
    }
}

/// Largest true column-sum magnitude of the stored matrix (Neumaier
/// summation, so the compensation term resolves the sub-ulp defect). The
/// stored diagonal is a single rounded f64, so column sums are zero only
/// to ~eps times the column scale; exp(A t) then drifts in trace by up to
/// t times this defect, a floor no exponential algorithm can undercut.
fn column_defect(m: &[[f64; N_STATES]; N_STATES]) -> f64 {
    let mut worst = 0.0f64;
    for c in 0..N_STATES {
        let mut s = 0.0f64;
        let mut comp = 0.0f64;
        for r in 0..N_STATES {
            let x = m[r][c];
            let t = s + x;
            comp += if s.abs() >= x.abs() {
                (s - t) + x
            } else {
                (x - t) + s
            };
            s = t;
        }
        worst = worst.max((s + comp).abs());
    }
    worst
}

fn arb_device() -> impl Strategy<Value = DeviceParams> {
    (
        1.3f64..4.0,
        0.3f64..0.9,
        0.3f64..1.2,
        0.5f64..1.0,
        200.0f64..400.0,
        -3.0f64..2.0,
    )
        .prop_map(|(d, e, w, f, t, lg)| device(d, e, w, f, t, 10f64.powf(lg)))
        .prop_filter("splitting must stay below the escape energy", |p| {
            derive_rates(p).is_ok()
        })
}

proptest! {
    #[test]
    fn generator_columns_sum_to_zero(p in arb_device()) {
        let rates = derive_rates(&p).unwrap();
        for g in [coupled_generator(&rates), uncoupled_generator(&rates)] {
            for c in 0..N_STATES {
                let scale = (0..N_STATES)
                    .map(|r| g.matrix[r][c].abs())
                    .fold(0.0f64, f64::max);
                let sum: f64 = (0..N_STATES).map(|r| g.matrix[r][c]).sum();
                prop_assert!(
                    sum.abs() <= 16.0 * f64::EPSILON * scale,
                    "column {} sums to {:e}",
                    c,
                    sum
                );
            }
        }
    }

    #[test]
    fn transmission_is_a_probability_and_grows_with_energy(p in arb_device()) {
        // The ladder crosses the barrier edge, exercising both clamps.
        let mut last = 0.0f64;
        for i in 0..25 {
            let e = 0.05 + 0.08 * i as f64;
            let t = tunneling_rate(e, &p) / assault_frequency(e, &p);
            prop_assert!(t > 0.0 && t <= 1.0, "E*={}: T={}", e, t);
            prop_assert!(t >= last * (1.0 - 1e-12), "E*={}: T fell {} -> {}", e, last, t);
            last = t;
        }
    }

    #[test]
    fn closed_form_matches_quadrature(p in arb_device(), e in 0.1f64..1.2) {
        let closed = tunneling_rate_closed_form(e, &p).unwrap();
        let numeric = assault_frequency(e, &p)
            * wkb_transmission_numeric(&build_profile(e, &p), p.m_e_eff).unwrap();
        prop_assert!(
            (closed - numeric).abs() / closed <= 1e-6,
            "closed {} vs numeric {}",
            closed,
            numeric
        );
    }

    #[test]
    fn stationary_point_invariants(p in arb_device(), coupled in any::<bool>()) {
        let kind = if coupled { ModelKind::Coupled } else { ModelKind::Uncoupled };
        let rates = derive_rates(&p).unwrap();
        let point = operating_point(kind, &rates, p.gamma_load).unwrap();
        prop_assert_eq!(point.flag, PointFlag::Nominal);
        // Stored fields are exact recombinations of one another.
        prop_assert_eq!(point.current, p.gamma_load * point.rho.values[2]);
        prop_assert_eq!(point.power, point.current * point.voltage);
        let trace: f64 = point.rho.values.iter().sum();
        prop_assert!((trace - 1.0).abs() <= 1e-12, "trace {}", trace);
        prop_assert!(point.rho.values.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn propagated_populations_stay_physical(p in arb_device(), lt in -6.0f64..2.3) {
        let rates = derive_rates(&p).unwrap();
        let g = coupled_generator(&rates);
        let t = 10f64.powf(lt);
        let out = matrix_exponential_apply(&g.matrix, t, &[0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let trace: f64 = out.iter().sum();
        let allowed = 1e-10f64.max(2.0 * t * column_defect(&g.matrix));
        prop_assert!((trace - 1.0).abs() <= allowed, "trace {} (allowed {:e})", trace, allowed);
        prop_assert!(out.iter().all(|v| *v >= -1e-9), "{:?}", out);
    }

    #[test]
    fn planck_occupation_decreases_with_gap(
        t in 100.0f64..500.0,
        e in 0.01f64..0.5,
        scale in 1.01f64..4.0,
    ) {
        let n1 = planck_occupation(e, t);
        let n2 = planck_occupation(e * scale, t);
        prop_assert!(n1 > 0.0 && n2 > 0.0);
        prop_assert!(n2 < n1);
    }

    #[test]
    fn log_grid_hits_endpoints_in_order(
        lo in -4.0f64..0.0,
        span in 0.5f64..9.0,
        n in 2usize..80,
    ) {
        let a = 10f64.powf(lo);
        let b = 10f64.powf(lo + span);
        let g = log_grid(a, b, n);
        prop_assert_eq!(g.len(), n);
        prop_assert_eq!(g[0], a);
        prop_assert_eq!(*g.last().unwrap(), b);
        prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
