use num_complex::Complex64 as C64;
use proptest::prelude::*;
use shadowqec::fitting::*;
use shadowqec::lindblad::*;
use shadowqec::model::*;
use shadowqec::qalgebra::*;
use shadowqec::rates::*;

fn random_matrix(d: usize, re: &[f64], im: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, d, |i, j| C64::new(re[i * d + j], im[i * d + j]))
}

fn decay(times: &[f64], a: f64, t: f64, floor: f64) -> Vec<f64> {
    times.iter().map(|x| floor + a * (-x / t).exp()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generator_preserves_trace_and_hermiticity(
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
        cre in prop::collection::vec(-1.0f64..1.0, 16),
        cim in prop::collection::vec(-1.0f64..1.0, 16),
        rate in 0.0f64..3.0,
    ) {
        let a = random_matrix(4, &re, &im);
        let h = &a + &a.dagger();
        let c = Collapse { op: random_matrix(4, &cre, &cim), rate };
        let psi = Ket::from_real(&[0.5, 0.5, 0.5, 0.5]);
        let rho = psi.density();
        let d = lindblad_rhs(&rho, &h, std::slice::from_ref(&c)).unwrap();
        prop_assert!(d.trace().norm() < 1e-12);
        prop_assert!(d.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn evolution_keeps_state_physical(rate in 0.1f64..5.0, w in 0.0f64..5.0) {
        let sx = ComplexMatrix::from_fn(2, 2, |i, j| if i != j { C64::new(w, 0.0) } else { C64::new(0.0, 0.0) });
        let lower = annihilation(2).unwrap();
        let collapse = [Collapse { op: lower, rate }];
        let rho0 = Ket::basis(2, 1).density();
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.1).collect();
        let r = evolve(&rho0, &sx, &collapse, &grid, &EvolveOptions::default()).unwrap();
        prop_assert!(r.integrity.max_trace_drift <= TRACE_TOL);
        prop_assert!(r.integrity.max_hermiticity_defect <= HERMITICITY_TOL);
        prop_assert!(r.integrity.min_eigenvalue >= POSITIVITY_TOL);
    }

    #[test]
    fn exponential_fit_is_scale_equivariant(a in 0.2f64..5.0, t in 0.5f64..20.0, c in 0.1f64..10.0, k in 0.1f64..10.0) {
        let times: Vec<f64> = (0..60).map(|i| i as f64 * t / 15.0).collect();
        let base = fit_exponential(&times, &decay(&times, a, t, 0.0), 0.0, Floor::Fixed(0.0)).unwrap();
        let scaled_y: Vec<f64> = decay(&times, a, t, 0.0).iter().map(|v| c * v).collect();
        let sy = fit_exponential(&times, &scaled_y, 0.0, Floor::Fixed(0.0)).unwrap();
        prop_assert!((sy.amplitude / (c * base.amplitude) - 1.0).abs() < 1e-6);
        prop_assert!((sy.lifetime / base.lifetime - 1.0).abs() < 1e-6);
        let scaled_t: Vec<f64> = times.iter().map(|x| k * x).collect();
        let st = fit_exponential(&scaled_t, &decay(&times, a, t, 0.0), 0.0, Floor::Fixed(0.0)).unwrap();
        prop_assert!((st.lifetime / (k * base.lifetime) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn free_floor_fit_recovers_offset(a in 0.3f64..3.0, t in 1.0f64..10.0, floor in -0.5f64..0.5) {
        let times: Vec<f64> = (0..80).map(|i| i as f64 * t / 10.0).collect();
        let f = fit_exponential(&times, &decay(&times, a, t, floor), 0.0, Floor::Free).unwrap();
        prop_assert!((f.lifetime / t - 1.0).abs() < 1e-5);
        prop_assert!((f.floor - floor).abs() < 1e-5 * a.max(1.0));
    }

    #[test]
    fn repair_lorentzian_symmetric_about_resonance(x in 0.0f64..2000.0, t1p in 1.0f64..100.0) {
        let p = DeviceParams::reference(t1p);
        let centre = -p.w - 0.5 * p.delta;
        let up = gamma_r(centre + x, &p).unwrap();
        let down = gamma_r(centre - x, &p).unwrap();
        prop_assert!((up - down).abs() <= 1e-12 * up.max(1e-300));
        prop_assert!(up <= gamma_r_resonant(&p).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn power_law_fit_tracks_rescaling(
        a in 0.1f64..10.0, b in 1.5f64..2.5, c in -2.5f64..-1.5, d in -1.5f64..-0.5, k in 0.1f64..10.0,
    ) {
        let mut samples = Vec::new();
        for w in [60.0, 100.0, 160.0, 230.0] {
            for dw in [0.6, 1.2, 2.4, 3.4] {
                for g in [4.0, 7.0, 12.0, 22.0] {
                    let t2 = a * f64::powf(w, b) * f64::powf(dw, c) * f64::powf(g, d);
                    samples.push(PowerSample { w, delta_omega: dw, gamma_sw: g, t2 });
                }
            }
        }
        let law = fit_powerlaw_multi(&samples).unwrap();
        prop_assert!((law.b - b).abs() < 1e-8 && (law.c - c).abs() < 1e-8 && (law.d - d).abs() < 1e-8);
        let scaled: Vec<PowerSample> = samples.iter().map(|s| PowerSample { t2: k * s.t2, ..*s }).collect();
        let law2 = fit_powerlaw_multi(&scaled).unwrap();
        prop_assert!((law2.a / (k * law.a) - 1.0).abs() < 1e-8);
        prop_assert!((law2.b - law.b).abs() < 1e-8);
    }

    #[test]
    fn logical_lifetime_grows_with_qubit_lifetime(t1p in 0.5f64..50.0) {
        let lo = predict_lifetimes(&DeviceParams::reference(t1p)).unwrap();
        let hi = predict_lifetimes(&DeviceParams::reference(2.0 * t1p)).unwrap();
        prop_assert!(hi.t1l_pred > lo.t1l_pred);
        prop_assert!(hi.t2l_pred >= lo.t2l_pred);
        prop_assert!(lo.recapture_p > 0.0 && lo.recapture_p < 1.0);
    }
}
