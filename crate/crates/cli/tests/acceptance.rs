//! End-to-end checks, one PASS/FAIL line per criterion. Failures are
//! reported, not raised, so every criterion is always evaluated.

use std::process::Command;
use std::time::Instant;

use shadowqec::circuit::{self, TransmonParams};
use shadowqec::lifetimes::{simulate_repair, ExtractionSettings, SPECTRAL, TIME_DOMAIN};
use shadowqec::lindblad::{HERMITICITY_TOL, POSITIVITY_TOL, TRACE_TOL};
use shadowqec::model::DeviceParams;
use shadowqec::rates::predict_lifetimes;
use shadowqec_cli::config::{Method, SweepConfig};
use shadowqec_cli::experiments::{
    extract_point, log_log_slope, loss_dominated_window, run_lifetimes, run_one_over_f, run_telegraph,
    unit_crossing, OneOverFRun, REFERENCE_PREFACTOR,
};

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn line(n: u32, ok: bool, summary: &str, details: &[String]) {
    println!("criterion {n}: {} - {summary}", verdict(ok));
    for d in details {
        println!("    {d}");
    }
}

fn failed(n: u32, what: &str, e: impl std::fmt::Display) {
    line(n, false, &format!("{what} errored: {e}"), &[]);
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn criterion_1() {
    let settings = ExtractionSettings::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for t1p in [1.0, 3.0] {
        let p = DeviceParams::reference(t1p);
        let start = Instant::now();
        let td = match extract_point(&p, TIME_DOMAIN, &settings) {
            Ok(e) => e,
            Err(e) => return failed(1, "time-domain extraction", e),
        };
        let elapsed = start.elapsed().as_secs_f64();
        let sp = match extract_point(&p, SPECTRAL, &settings) {
            Ok(e) => e,
            Err(e) => return failed(1, "spectral extraction", e),
        };
        let ig = td.integrity.expect("time-domain runs report integrity");
        let integrity_ok = ig.max_trace_drift <= TRACE_TOL
            && ig.max_hermiticity_defect <= HERMITICITY_TOL
            && ig.min_eigenvalue >= POSITIVITY_TOL;
        let (d1, d2) = (rel(sp.t1l(), td.t1l()), rel(sp.t2l(), td.t2l()));
        let point_ok = integrity_ok && d1 <= 0.02 && d2 <= 0.02 && elapsed < 60.0;
        ok &= point_ok;
        notes.push(format!(
            "T1P={t1p}: drift {:.1e}, herm {:.1e}, min eig {:.1e}; relative spectral vs time-domain difference T1L {:.1e}, T2L {:.1e}; {elapsed:.0} s [{}]",
            ig.max_trace_drift,
            ig.max_hermiticity_defect,
            ig.min_eigenvalue,
            d1,
            d2,
            verdict(point_ok)
        ));
    }
    line(1, ok, "Lindblad integrity and spectral vs time-domain agreement", &notes);
}

fn criterion_2() {
    let p = DeviceParams::reference(f64::INFINITY);
    let start = Instant::now();
    let r = match simulate_repair(&p, &ExtractionSettings::default()) {
        Ok(r) => r,
        Err(e) => return failed(2, "repair simulation", e),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let rate_err = rel(r.dwell_rate, r.gamma_r_pred);
    let ok = r.final_fidelity >= 0.95 && rate_err <= 0.25 && r.final_zz >= 0.95 && elapsed < 120.0;
    line(
        2,
        ok,
        "single-loss repair",
        &[format!(
            "fidelity {:.4}, recovery rate {:.3}/us vs Gamma_R {:.3}/us ({:.1}%), <ZZ> {:.4}, {elapsed:.0} s",
            r.final_fidelity,
            r.dwell_rate,
            r.gamma_r_pred,
            100.0 * rate_err,
            r.final_zz
        )],
    );
}

fn spectral_sweep(t1p: Vec<f64>) -> Result<Vec<(f64, f64, f64)>, String> {
    let mut cfg = SweepConfig::default();
    cfg.lifetimes.t1p_us = t1p;
    cfg.lifetimes.method = Method::Spectral;
    let (run, _) = run_lifetimes(&cfg).map_err(|e| e.to_string())?;
    Ok(run.rows.iter().map(|r| (r.t1p_us, r.t1l_us, r.t2l_us)).collect())
}

fn criterion_3() {
    let start = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    let rows = match spectral_sweep(vec![3.0, 10.0, 30.0, 100.0]) {
        Ok(r) => r,
        Err(e) => return failed(3, "lifetime sweep", e),
    };
    for (t1p, t1l, t2l) in &rows {
        let pred = predict_lifetimes(&DeviceParams::reference(*t1p)).expect("valid");
        let (r1, r2) = (t1l / pred.t1l_pred, t2l / pred.t2l_pred);
        let good = (r1 - 1.0).abs() <= 0.5 && (r2 - 1.0).abs() <= 0.5;
        ok &= good;
        notes.push(format!(
            "T1P={t1p}: T1L {t1l:.4e} (sim/pred {r1:.3}), T2L {t2l:.4e} (sim/pred {r2:.3}) [{}]",
            verdict(good)
        ));
    }

    let (lo, hi) = loss_dominated_window(&DeviceParams::reference(1.0)).expect("valid");
    let window: Vec<f64> = (0..6).map(|i| lo * (hi / lo).powf(i as f64 / 5.0)).collect();
    match spectral_sweep(window) {
        Ok(w) => {
            let x: Vec<f64> = w.iter().map(|r| r.0).collect();
            let y: Vec<f64> = w.iter().map(|r| r.1).collect();
            let slope = log_log_slope(&x, &y).unwrap_or(f64::NAN);
            let good = (slope - 2.0).abs() <= 0.3;
            ok &= good;
            notes.push(format!(
                "log-log slope of T1L over T1P in [{lo:.3}, {hi:.3}] us: {slope:.3} [{}]",
                verdict(good)
            ));
        }
        Err(e) => {
            ok = false;
            notes.push(format!("slope sweep errored: {e}"));
        }
    }

    let grid = vec![0.05, 0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0];
    match spectral_sweep(grid) {
        Ok(b) => {
            let x: Vec<f64> = b.iter().map(|r| r.0).collect();
            let ratio: Vec<f64> = b.iter().map(|r| r.1 / r.0).collect();
            let cross = unit_crossing(&x, &ratio);
            let good = cross.is_some_and(|c| (0.3..=3.0).contains(&c));
            ok &= good;
            let lowest = ratio.first().copied().unwrap_or(f64::NAN);
            notes.push(match cross {
                Some(c) => format!("breakeven T1P = {c:.3} us [{}]", verdict(good)),
                None => format!(
                    "no breakeven in [0.05, 10] us: T1L/T1P = {lowest:.3} at T1P = 0.05 us [{}]",
                    verdict(good)
                ),
            });
        }
        Err(e) => {
            ok = false;
            notes.push(format!("breakeven sweep errored: {e}"));
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed < 900.0;
    notes.push(format!("{elapsed:.0} s"));
    line(3, ok, "closed-form rates vs simulation", &notes);
}

/// Traces per Rabi point for the judged run, and for a second run that
/// shows how much of the spread is statistical.
const RABI_TRACES: usize = 200;
const RABI_TRACES_DIAGNOSTIC: usize = 800;

fn one_over_f(n_traces: usize) -> shadowqec_cli::CliResult<(OneOverFRun, f64)> {
    let mut cfg = SweepConfig::default();
    cfg.dephasing.one_over_f.w = vec![1.0, 2.0, 3.0, 4.0];
    cfg.dephasing.one_over_f.n_traces = n_traces;
    let start = Instant::now();
    let (run, _) = run_one_over_f(&cfg)?;
    Ok((run, start.elapsed().as_secs_f64()))
}

/// Criterion 4 sub-checks; returns the verdict and the detail lines.
fn rabi_checks(run: &OneOverFRun) -> (bool, Vec<String>) {
    let t2 = |scale: f64| -> Vec<f64> {
        run.curves
            .iter()
            .filter(|c| c.s0_scale == scale)
            .map(|c| c.t2_fit_us.unwrap_or(f64::NAN))
            .collect()
    };
    let (full, quarter) = (t2(1.0), t2(0.25));
    let monotone = full.windows(2).all(|w| w[1] > w[0]) && quarter.windows(2).all(|w| w[1] > w[0]);
    let span = full[full.len() - 1] / full[0];
    let span_ok = (span - 4.0).abs() <= 1.0;
    let ratios: Vec<f64> = quarter.iter().zip(&full).map(|(q, f)| q / f).collect();
    let quarter_ok = ratios.iter().all(|r| (r - 4.0).abs() <= 1.0);
    // prediction/simulation must lie in [0.8, 1.1]
    let pred: Vec<f64> = run
        .curves
        .iter()
        .map(|c| c.t2_pred_us.unwrap_or(f64::NAN) / c.t2_fit_us.unwrap_or(f64::NAN))
        .collect();
    let pred_ok = pred.iter().all(|r| (0.8..=1.1).contains(r));
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(", ");
    (
        monotone && span_ok && quarter_ok && pred_ok,
        vec![
            format!("T2 at W/2pi = 1..4 MHz: [{}] us; monotone [{}]", fmt(&full), verdict(monotone)),
            format!("T2(4)/T2(1) = {span:.3} [{}]", verdict(span_ok)),
            format!("S0/4 gain per W: [{}] [{}]", fmt(&ratios), verdict(quarter_ok)),
            format!("prediction/simulation (S0, then S0/4): [{}] [{}]", fmt(&pred), verdict(pred_ok)),
        ],
    )
}

fn criteria_4_and_5() {
    let (run, elapsed) = match one_over_f(RABI_TRACES) {
        Ok(r) => r,
        Err(e) => {
            failed(4, "1/f run", &e);
            return failed(5, "1/f run", e);
        }
    };
    let (checks_ok, checks) = rabi_checks(&run);
    let mut notes = vec![format!(
        "S0 = {:.5} (closed form {:.5}), echo 1/e at {:.4} us, Gaussian R^2 {:.4}",
        run.s0, run.s0_analytic, run.calibration_measured_us, run.calibration_gaussian_r2
    )];
    notes.extend(checks);
    notes.push(format!("{RABI_TRACES} traces/point, {elapsed:.0} s"));
    match one_over_f(RABI_TRACES_DIAGNOSTIC) {
        Ok((diag, t)) => {
            let (d_ok, d_notes) = rabi_checks(&diag);
            notes.push(format!(
                "diagnostic rerun at {RABI_TRACES_DIAGNOSTIC} traces/point ({t:.0} s), not judged: [{}]",
                verdict(d_ok)
            ));
            notes.extend(d_notes.into_iter().map(|n| format!("  {n}")));
        }
        Err(e) => notes.push(format!("diagnostic rerun errored: {e}")),
    }
    line(4, checks_ok && elapsed < 1200.0, "1/f Rabi suppression", &notes);

    let pj = &run.projection;
    let factor = (pj.t_lz_us / 2000.0).max(2000.0 / pj.t_lz_us);
    line(
        5,
        factor <= 3.0,
        "1/f device projection",
        &[format!(
            "T2echo {} us -> S0 {:.4e}; single-qubit T2 {:.1} us; x{} S0, {} channels -> T_LZ {:.0} us (factor {factor:.2} from 2 ms)",
            pj.t2_echo_us, pj.s0_calibrated, pj.single_qubit_t2_us, pj.conversion.noise_power, pj.conversion.channels, pj.t_lz_us
        )],
    );
}

fn criterion_6() {
    let cfg = SweepConfig::default();
    let start = Instant::now();
    let run = match run_telegraph(&cfg) {
        Ok((r, _)) => r,
        Err(e) => return failed(6, "telegraph sweep", e),
    };
    let elapsed = start.elapsed().as_secs_f64();
    let l = run.law;
    let exps_ok = (1.8..=2.2).contains(&l.b) && (-2.3..=-1.7).contains(&l.c) && (-1.3..=-0.85).contains(&l.d);
    let pref_ok = (l.a / REFERENCE_PREFACTOR).max(REFERENCE_PREFACTOR / l.a) <= 2.0;
    let within = |r: f64| r.max(1.0 / r) <= 3.5;
    let mut notes = vec![
        format!(
            "T2 = {:.3} W^{:.3} dw^{:.3} G^{:.3} (log rms {:.3}) over {} points; exponents [{}], prefactor [{}]",
            l.a, l.b, l.c, l.d, l.log_residual_rms, run.points.len(), verdict(exps_ok), verdict(pref_ok)
        ),
    ];
    // Judged convention, fixed in advance: the endpoints are device lifetimes,
    // so the single-fluctuator law is divided by 8, with Γ_sw read as printed
    // (1/µs). The other three readings are printed for comparison only.
    let mut judged = false;
    for times_2pi in [false, true] {
        for device in [true, false] {
            let pts: Vec<_> = run.endpoints.iter().filter(|e| e.gamma_times_2pi == times_2pi).collect();
            let ratios: Vec<f64> = pts.iter().map(|e| if device { e.ratio_device } else { e.ratio_raw }).collect();
            let good = !ratios.is_empty() && ratios.iter().all(|r| within(*r));
            let is_judged = !times_2pi && device;
            if is_judged {
                judged = good;
            }
            notes.push(format!(
                "endpoints, Gamma_sw {}, {}: reported/law = [{}] [{}]{}",
                if times_2pi { "x 2pi" } else { "as 1/us" },
                if device { "device /8" } else { "no conversion" },
                ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>().join(", "),
                verdict(good),
                if is_judged { " <- judged" } else { "" }
            ));
        }
    }
    for e in run.endpoints.iter().filter(|e| !e.gamma_times_2pi) {
        notes.push(format!(
            "reference law at W={}, dw={}, G={}: {:.0} us, /8 -> {:.0} us (reported {:.0} us)",
            e.w,
            e.delta_omega10,
            e.gamma_sw,
            e.reference_law_us,
            e.reference_law_us / 8.0,
            e.reported_us
        ));
    }
    notes.push(format!("{elapsed:.0} s"));
    line(
        6,
        exps_ok && pref_ok && judged && elapsed < 2700.0,
        "telegraph power-law regression",
        &notes,
    );
}

fn criterion_7() {
    let start = Instant::now();
    let p = TransmonParams::new(50.0);
    let spectrum = circuit::diagonalize_transmon(&p);
    let qp = circuit::qp_matrix_ratios(&p);
    let plan = circuit::plan_w_drive(6.5, 4.5, 0.35);
    let (spectrum, qp, plan) = match (spectrum, qp, plan) {
        (Ok(s), Ok(q), Ok(pl)) => (s, q, pl),
        (s, q, pl) => {
            let err = [s.err(), q.err(), pl.err()].into_iter().flatten().next().expect("one failed");
            return failed(7, "circuit support", err);
        }
    };
    let parity_ok = spectrum.c01.abs() <= 1e-10;
    let w2 = |a: f64, b: f64| (a / b).max(b / a) <= 2.0;
    let qp_ok = w2(qp.loss_dephase, 0.004) && w2(qp.triple_loss, 0.002);
    let (f1, f2) = (plan.tones[0].0, plan.tones[1].0);
    let tones_ok = (f1 - 7.72).abs() <= 0.01 && (f2 - 5.86).abs() <= 0.01;
    let detune_ok = plan.min_detuning >= 1.0;
    let worst = plan
        .collision_report
        .iter()
        .min_by(|a, b| a.detuning.total_cmp(&b.detuning))
        .expect("non-empty");
    let elapsed = start.elapsed().as_secs_f64();
    line(
        7,
        parity_ok && qp_ok && tones_ok && detune_ok && elapsed < 120.0,
        "circuit support",
        &[
            format!(
                "EJ/EC=50: converged, |C01| = {:.1e} [{}], anharmonicity {:.3} EC",
                spectrum.c01.abs(),
                verdict(parity_ok),
                spectrum.anharmonicity()
            ),
            format!(
                "quasiparticle ratios ({:.4}, {:.4}) vs (0.004, 0.002) [{}]",
                qp.loss_dephase,
                qp.triple_loss,
                verdict(qp_ok)
            ),
            format!("tones ({f1:.3}, {f2:.3}) GHz [{}]", verdict(tones_ok)),
            format!(
                "min detuning {:.3} GHz ({} at {:.3} GHz near {}) [{}]",
                plan.min_detuning,
                worst.product,
                worst.frequency,
                worst.nearest_transition,
                verdict(detune_ok)
            ),
        ],
    );
}

fn run_cli(dir: &std::path::Path, threads: usize, config: &std::path::Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_shadowqec"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(dir)
        .arg("--seed")
        .arg("2024")
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn body(path: &std::path::Path) -> String {
    let s = std::fs::read_to_string(path).unwrap_or_default();
    s.split_once('\n').map(|x| x.1.to_string()).unwrap_or_default()
}

fn criterion_8() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let config = tmp.path().join("config.json");
    std::fs::write(
        &config,
        r#"{
  "dephasing": {
    "one_over_f": {"w": [0.0, 2.0], "n_traces": 64, "calibration_traces": 300},
    "telegraph": {"w": [20.0, 30.0], "delta_omega10": [0.2, 0.4], "gamma_sw": [5.0, 10.0], "n_traces": 64}
  }
}"#,
    )
    .expect("write config");
    let runs: [(&[&str], &[&str]); 2] = [
        (&["dephasing", "--noise", "one_over_f"], &["dephasing_curves.csv", "dephasing_fits.csv"]),
        (&["dephasing", "--noise", "telegraph"], &["telegraph_points.csv"]),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (args, files) in runs {
        let dirs: Vec<_> = [1usize, 3].iter().map(|n| tmp.path().join(format!("{}-{n}", args[2]))).collect();
        for (d, n) in dirs.iter().zip([1usize, 3]) {
            if let Err(e) = run_cli(d, n, &config, args) {
                return failed(8, "cli run", e);
            }
        }
        for f in files {
            let (a, b) = (body(&dirs[0].join(f)), body(&dirs[1].join(f)));
            let same = !a.is_empty() && a == b;
            ok &= same;
            notes.push(format!("{f}: {} bytes, 1 vs 3 threads identical [{}]", a.len(), verdict(same)));
        }
    }
    line(8, ok, "determinism across thread counts", &notes);
}

fn main() {
    // `cargo test -- --list` and filters should not trigger the full run
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criteria_4_and_5();
    criterion_6();
    criterion_7();
    criterion_8();
    println!("acceptance finished in {:.0} s", start.elapsed().as_secs_f64());
}
