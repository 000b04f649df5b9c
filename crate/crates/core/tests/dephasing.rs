use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rustfft::FftPlanner;
use shadowqec::dephasing::*;

fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn flicker_periodogram_has_unit_slope() {
    let p = OneOverFParams {
        s0: 1.0,
        f_min: 0.005,
        f_max: 20.0,
        n_components: 200,
    };
    let (t_max, dt) = (200.0, 0.01);
    let n = (t_max / dt) as usize;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut power = vec![0.0; n / 2];
    let runs = 40;
    for seed in 0..runs {
        let tr = gen_one_over_f(&p, t_max, dt, seed).unwrap();
        let mut buf: Vec<C64> = tr.samples.iter().map(|&v| C64::new(v, 0.0)).collect();
        fft.process(&mut buf);
        for (k, slot) in power.iter_mut().enumerate() {
            *slot += buf[k].norm_sqr();
        }
    }
    // log-binned average between 0.05 and 5 cycles/µs
    let (mut fs, mut ps) = (Vec::new(), Vec::new());
    let edges: Vec<f64> = (0..=20).map(|i| 0.05 * 100f64.powf(i as f64 / 20.0)).collect();
    for e in edges.windows(2) {
        let ks: Vec<usize> = (1..n / 2).filter(|&k| (k as f64 / t_max) >= e[0] && (k as f64 / t_max) < e[1]).collect();
        fs.push(ks.iter().map(|&k| k as f64 / t_max).sum::<f64>() / ks.len() as f64);
        ps.push(ks.iter().map(|&k| power[k]).sum::<f64>() / ks.len() as f64);
    }
    let slope = log_slope(&fs, &ps);
    assert!((slope + 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn flicker_variance_matches_band_integral() {
    // ⟨δz²⟩ = ∫ S(ω) dω over the band with S(ω) = 2π S0/ω
    let p = OneOverFParams {
        s0: 0.3,
        f_min: 0.01,
        f_max: 10.0,
        n_components: 150,
    };
    let (mut acc, mut count) = (0.0, 0usize);
    for seed in 0..200 {
        let tr = gen_one_over_f(&p, 100.0, 0.02, seed).unwrap();
        acc += tr.samples.iter().map(|v| v * v).sum::<f64>();
        count += tr.samples.len();
    }
    let expected = 2.0 * PI * p.s0 * (p.f_max / p.f_min).ln();
    let ratio = acc / count as f64 / expected;
    assert!((ratio - 1.0).abs() < 0.08, "variance ratio {ratio}");
}

#[test]
fn doubling_s0_scales_amplitude_by_sqrt2() {
    let p = OneOverFParams {
        s0: 0.2,
        f_min: 0.05,
        f_max: 5.0,
        n_components: 120,
    };
    let a = gen_one_over_f(&p, 20.0, 0.01, 7).unwrap();
    let b = gen_one_over_f(&OneOverFParams { s0: 0.4, ..p }, 20.0, 0.01, 7).unwrap();
    for (x, y) in a.samples.iter().zip(&b.samples) {
        assert!((y - 2f64.sqrt() * x).abs() < 1e-9 * (1.0 + x.abs()));
    }
}

#[test]
fn frozen_fluctuator_beats() {
    let dw = 2.0;
    let p = TelegraphParams {
        delta_omega10: dw,
        gamma_sw: 1e-7,
        convention: ShiftConvention::Half,
    };
    let s = EnsembleSettings {
        n_traces: 4000,
        seed: 3,
        t_max: 4.0,
        dt: 0.01,
        n_out: 40,
    };
    let r = ensemble_average(&p, 0.0, Protocol::Free, &s).unwrap();
    for (t, m) in r.times.iter().zip(&r.mean) {
        let expected = ((1.0 + C64::from_polar(1.0, dw * t)) / 2.0).norm();
        assert!((m - expected).abs() < 0.05, "t = {t}: {m} vs {expected}");
    }
}

#[test]
fn fast_switching_narrows_the_line() {
    let mut last = 0.0;
    for g in [2.0, 8.0, 32.0] {
        let p = TelegraphParams::new(1.0, g);
        // fast-switching limit: decay time ≈ 2Γ for a unit shift
        let s = EnsembleSettings {
            n_traces: 300,
            seed: 11,
            t_max: 6.0 * g + 5.0,
            dt: 0.05 / g,
            n_out: 300,
        };
        let t = ensemble_average(&p, 0.0, Protocol::Free, &s).unwrap().crossing((-1.0f64).exp()).unwrap();
        assert!(t > last, "Γ = {g}: {t} after {last}");
        last = t;
    }
    assert!((last / 64.0 - 1.0).abs() < 0.25, "{last}");
}

fn small_ensemble(source: &dyn NoiseSource, w: f64) -> EnsembleResult {
    let s = EnsembleSettings {
        n_traces: 64,
        seed: 99,
        t_max: 3.0,
        dt: 0.005,
        n_out: 30,
    };
    ensemble_average(source, w, Protocol::Rabi, &s).unwrap()
}

#[test]
fn thread_count_does_not_change_results() {
    let flicker = OneOverFParams::for_rabi(0.1, 2.0 * PI, 3.0, 120);
    let tele = TelegraphParams::new(2.0, 5.0);
    let sources: [&dyn NoiseSource; 2] = [&flicker, &tele];
    for src in sources {
        let runs: Vec<EnsembleResult> = [1, 3]
            .iter()
            .map(|&n| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .unwrap()
                    .install(|| small_ensemble(src, 2.0 * PI))
            })
            .collect();
        let bits = |r: &EnsembleResult| r.mean.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&runs[0]), bits(&runs[1]), "{}", src.name());
    }
}

#[test]
fn echo_calibration_is_gaussian_and_scales() {
    let settings = CalibrationSettings::default();
    let one = calibrate_s0_to_echo(1.0, &settings).unwrap();
    assert!((one.measured - 1.0).abs() < 0.05);
    assert!(one.gaussian_r2 >= 0.98, "R² {}", one.gaussian_r2);
    assert!((one.s0 / echo_s0_analytic(1.0) - 1.0).abs() < 0.05);
    let two = calibrate_s0_to_echo(2.0, &settings).unwrap();
    assert!(two.s0 < one.s0);
    let ratio = two.s0 / one.s0;
    assert!((ratio - 0.25).abs() < 0.25 * 0.05, "ratio {ratio}");
    assert!(calibrate_s0_to_echo(1.0, &CalibrationSettings { n_traces: 100, ..settings }).is_err());
}

#[test]
fn rabi_drive_outlives_prediction_scale() {
    let s0 = echo_s0_analytic(1.0);
    let w = 2.0 * PI * 2.0;
    let pt = one_over_f_rabi_t2(s0, w, &RabiSettings::default()).unwrap();
    let ratio = pt.t2_predicted / pt.t2;
    // 200 traces: statistical spread is ±15%
    assert!(ratio > 0.6 && ratio < 1.25, "pred/sim {ratio}");
    assert!((rabi_t2_prediction(s0, 2.0 * w).unwrap() / pt.t2_predicted - 2.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn spin_evolution_is_unitary(
        values in prop::collection::vec(-3.0f64..3.0, 50..200),
        w in 0.0f64..5.0,
        proto in prop::sample::select(vec![Protocol::Free, Protocol::Rabi, Protocol::Echo]),
    ) {
        let dt = 0.01;
        let tr = NoiseTrace::from_samples(dt, values.clone()).unwrap();
        let t_end = dt * values.len() as f64;
        let times: Vec<f64> = (0..=20).map(|i| t_end * i as f64 / 20.0).collect();
        for c in evolve_spin(&tr, w, proto, &times).unwrap() {
            prop_assert!(c.norm() <= 1.0 + 1e-10);
            if w == 0.0 {
                prop_assert!((c.norm() - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn telegraph_record_is_two_valued(dw in 0.1f64..5.0, g in 0.5f64..20.0, seed in 0u64..1000) {
        let p = TelegraphParams::new(dw, g);
        let tr = gen_telegraph(&p, 5.0, 0.05 / g, seed).unwrap();
        let seg = tr.segments.as_ref().unwrap();
        prop_assert!(seg.iter().all(|s| s.value == 0.0 || s.value == dw));
        prop_assert!(seg.windows(2).all(|w| w[1].start > w[0].start && w[1].value != w[0].value));
        prop_assert!(tr.samples.iter().all(|v| *v >= -1e-12 && *v <= dw + 1e-12));
    }
}
