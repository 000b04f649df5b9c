use proptest::prelude::*;
use shadowqec::circuit::*;

#[test]
fn quasiparticle_ratios_near_reference() {
    let r = qp_matrix_ratios(&TransmonParams::new(50.0)).unwrap();
    assert!(r.loss_dephase > 0.002 && r.loss_dephase < 0.008, "{r:?}");
    assert!(r.triple_loss > 0.001 && r.triple_loss < 0.004, "{r:?}");
}

#[test]
fn quasiparticle_ratios_shrink_with_ej_over_ec() {
    let rs: Vec<QpRatios> = [25.0, 50.0, 75.0, 100.0]
        .iter()
        .map(|&x| qp_matrix_ratios(&TransmonParams::new(x)).unwrap())
        .collect();
    for w in rs.windows(2) {
        assert!(w[1].loss_dephase < w[0].loss_dephase);
        assert!(w[1].triple_loss < w[0].triple_loss);
    }
    assert!(qp_matrix_ratios(&TransmonParams::new(10.0)).is_err());
}

#[test]
fn quasiparticle_ratios_swap_symmetric() {
    let a = TransmonParams::new(50.0);
    let (on_l, on_r) = qp_matrix_ratios_pair(&a, &a).unwrap();
    assert_eq!(on_l, on_r);
    let b = TransmonParams::new(70.0);
    let (x, y) = qp_matrix_ratios_pair(&a, &b).unwrap();
    let (y2, x2) = qp_matrix_ratios_pair(&b, &a).unwrap();
    assert_eq!((x, y), (x2, y2));
}

#[test]
fn half_angle_grid_matches_charge_basis() {
    for ratio in [30.0, 50.0] {
        let p = TransmonParams::new(ratio);
        let exact = qp_ratios_from(&half_angle_cos_elements(&p).unwrap());
        for n in [2048, 4096] {
            let g = qp_ratios_from(&half_angle_cos_elements_grid(&p, n).unwrap());
            assert!((g.loss_dephase / exact.loss_dephase - 1.0).abs() < 0.05);
            assert!((g.triple_loss / exact.triple_loss - 1.0).abs() < 0.05);
        }
    }
    assert!(half_angle_cos_elements_grid(&TransmonParams::new(50.0), 1024).is_err());
}

#[test]
fn charge_dispersion_follows_asymptotics() {
    let p = TransmonParams::new(50.0);
    let levels = |ng: f64| diagonalize_transmon(&TransmonParams { ng, ..p }).unwrap().energies;
    let (e0, eq, eh) = (levels(0.0), levels(0.25), levels(0.5));
    // ground level is flat to 1e-6 EC; excited levels disperse exponentially less
    // slowly, so they are checked against the asymptotic width instead
    assert!((eh[0] - e0[0]).abs() < 1e-6 && (eq[0] - e0[0]).abs() < 1e-6);
    for m in 0..2 {
        let eps = eh[m] - e0[m];
        let est = charge_dispersion_estimate(50.0, 1.0, m as u32);
        assert!((eps / est - 1.0).abs() < 0.25, "level {m}: {eps:e} vs {est:e}");
        assert!((eq[m] - e0[m]).abs() < eps.abs());
    }
    let eps2 = eh[2] - e0[2];
    let est2 = charge_dispersion_estimate(50.0, 1.0, 2);
    assert!(eps2 / est2 > 0.5 && eps2 / est2 < 2.0);
}

#[test]
fn alpha_for_large_coupling() {
    use std::f64::consts::PI;
    let c02 = diagonalize_transmon(&TransmonParams::new(50.0)).unwrap().c02;
    let (w, eji) = (2.0 * PI * 0.035, 2.0 * PI * 15.0);
    let alpha = alpha_for_w(w, eji, c02).unwrap();
    assert!(alpha > 0.0 && alpha < 1.0);
    let back = w_from_drive(eji, alpha, c02).unwrap();
    assert!((back.magnitude - w).abs() < 1e-12 && back.sign < 0.0);
}

#[test]
fn reference_plan_detuning_is_reported() {
    let plan = plan_w_drive(6.5, 4.5, 0.35).unwrap();
    assert_eq!(plan.collision_report.len(), 10);
    assert!(plan.collision_report.iter().all(|c| c.frequency > 0.0));
    let strict = plan_w_drive_with(6.5, 4.5, 0.35, COLLISION_PASS_GHZ).unwrap();
    assert_eq!(strict.status, if strict.min_detuning >= 1.0 { PlanStatus::Ok } else { PlanStatus::Warning });
    assert_eq!(plan_w_drive_with(6.5, 4.5, 0.35, 0.0).unwrap().status, PlanStatus::Ok);
}

#[test]
fn infeasible_tones() {
    // ω_l + ω_r − δ tiny against the splitting drives f1 negative
    assert!(matches!(plan_w_drive(2.0, 0.5, 2.4), Err(shadowqec::Error::Infeasible(_))));
}

proptest! {
    #[test]
    fn phase_elements_bounded(ratio in 20.0f64..150.0, ng in -0.5f64..0.5) {
        let s = diagonalize_transmon(&TransmonParams { ng, ..TransmonParams::new(ratio) }).unwrap();
        for v in [s.c00, s.c11, s.c22, s.c02, s.c01, s.s01, s.s12] {
            prop_assert!(v.abs() <= 1.0 + 1e-12);
        }
        prop_assert!(s.energies.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn tones_match_closed_forms(lo in 3.0f64..6.0, gap in 1.0f64..3.0, delta in 0.1f64..0.5) {
        let hi = lo + gap;
        let p = plan_w_drive(hi, lo, delta).unwrap();
        prop_assert!((p.tones[0].0 - (2.0 * hi + 6.0 * lo - 4.0 * delta) / 5.0).abs() < 1e-9);
        prop_assert!((p.tones[1].0 - (6.0 * hi - 2.0 * lo - 2.0 * delta) / 5.0).abs() < 1e-9);
        let min = p.collision_report.iter().map(|c| c.detuning).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(min, p.min_detuning);
    }

    #[test]
    fn shadow_frequency_linear(k in 1.0f64..8.0, sk in 1.0f64..8.0, w in 0.0f64..0.1, d in 0.0f64..0.5, h in 0.0f64..1.0) {
        let base = shadow_drive_freq(k, sk, w, d).unwrap();
        prop_assert!((shadow_drive_freq(k + h, sk, w, d).unwrap() - base - h).abs() < 1e-12);
        prop_assert!((shadow_drive_freq(k, sk + h, w, d).unwrap() - base - h).abs() < 1e-12);
        prop_assert!((shadow_drive_freq(k, sk, w + h, d).unwrap() - base + h).abs() < 1e-12);
        prop_assert!((shadow_drive_freq(k, sk, w, d + h).unwrap() - base + h).abs() < 1e-12);
    }
}
