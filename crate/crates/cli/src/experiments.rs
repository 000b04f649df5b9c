use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use shadowqec::circuit::{self, DrivePlan, HalfAngleElements, QpRatios, TransmonParams, TransmonSpectrum};
use shadowqec::dephasing::{
    calibrate_s0_to_echo, echo_s0_analytic, ensemble_average, one_over_f_rabi_t2, rabi_t2_prediction,
    telegraph_sweep, CalibrationSettings, EnsembleResult, EnsembleSettings, OneOverFParams, Protocol,
    RabiSettings, TelegraphGrid, TelegraphSweepSettings,
};
use shadowqec::fitting::{PowerLaw, MIN_FIT_POINTS};
use shadowqec::lifetimes::{extractor_registry, ExtractionSettings, LifetimeEstimate};
use shadowqec::lindblad::IntegrityReport;
use shadowqec::model::{Circuit, DeviceParams};
use shadowqec::rates::{self, DephasingKind, DeviceConversion, RatePrediction};

use crate::config::{non_empty, SweepConfig};
use crate::output::{num, opt, render_json, Table};
use crate::{CliError, CliResult};

/// Files produced by one run, in a fixed order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outputs {
    pub files: Vec<(String, String)>,
}

impl Outputs {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str())
    }

    /// File contents without the `# config:` header line.
    pub fn body(&self, name: &str) -> Option<&str> {
        self.get(name).map(|s| s.strip_prefix('#').map_or(s, |r| r.split_once('\n').map_or("", |x| x.1)))
    }
}

const SEED_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

fn sub_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_add((index as u64 + 1).wrapping_mul(SEED_STRIDE))
}

// ---------------------------------------------------------------- lifetimes

#[derive(Clone, Debug, Serialize)]
pub struct LifetimeRow {
    pub t1p_us: f64,
    pub method: String,
    pub t1l_us: f64,
    pub t2l_us: f64,
    pub t1l_pred_us: f64,
    pub t2l_pred_us: f64,
    pub fit_residual: f64,
    pub integrity: Option<IntegrityReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LifetimesRun {
    pub rows: Vec<LifetimeRow>,
    /// T1P where simulated T1L/T1P crosses 1, per method.
    pub breakeven_t1p_us: Vec<(String, Option<f64>)>,
    /// Loss-dominated window and the log-log slope of T1L inside it.
    pub slope_window_us: (f64, f64),
    pub slope: Vec<(String, Option<f64>)>,
}

/// T1P range where photon loss dominates and the rates stay perturbative:
/// `Γ_P ≥ 2 Γ_R(W − δ/2)` and `Γ_P ≤ Γ_R(res)/10`.
pub fn loss_dominated_window(p: &DeviceParams) -> CliResult<(f64, f64)> {
    let off = rates::gamma_r(p.w - 0.5 * p.delta, p)?;
    let res = rates::gamma_r_resonant(p)?;
    Ok((10.0 / res, 1.0 / (2.0 * off)))
}

pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// First crossing of `y = 1` along increasing `x`, interpolated in log–log.
pub fn unit_crossing(x: &[f64], y: &[f64]) -> Option<f64> {
    x.windows(2).zip(y.windows(2)).find_map(|(xs, ys)| {
        let (a, b) = (ys[0].ln(), ys[1].ln());
        if a == 0.0 {
            return Some(xs[0]);
        }
        (a * b < 0.0).then(|| {
            let f = a / (a - b);
            (xs[0].ln() + f * (xs[1].ln() - xs[0].ln())).exp()
        })
    })
}

pub fn extract_point(params: &DeviceParams, method: &str, settings: &ExtractionSettings) -> CliResult<LifetimeEstimate> {
    let circuit = Circuit::new(params)?;
    Ok(extractor_registry().get(method)?.extract(&circuit, settings)?)
}

pub fn run_lifetimes(cfg: &SweepConfig) -> CliResult<(LifetimesRun, Outputs)> {
    let lc = &cfg.lifetimes;
    non_empty(&lc.t1p_us, "lifetimes.t1p_us")?;
    let settings = ExtractionSettings {
        rtol: lc.rtol,
        transient_cut: None,
        horizon_factor: lc.horizon_factor,
        samples: lc.samples,
        max_horizon: lc.max_horizon_us,
    };
    let jobs: Vec<(f64, &str)> = lc
        .t1p_us
        .iter()
        .flat_map(|&t| lc.method.names().iter().map(move |m| (t, *m)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(t1p, method)| -> CliResult<LifetimeRow> {
            let params = lc.device.resolve(cfg.units, t1p)?;
            let pred = rates::predict_lifetimes(&params)?;
            let est = extract_point(&params, method, &settings)
                .map_err(|e| annotate(e, &format!("T1P = {t1p} us, method {method}")))?;
            log::info!("T1P = {t1p} us ({method}): T1L = {:.4e}, T2L = {:.4e}", est.t1l(), est.t2l());
            Ok(LifetimeRow {
                t1p_us: t1p,
                method: method.to_string(),
                t1l_us: est.t1l(),
                t2l_us: est.t2l(),
                t1l_pred_us: pred.t1l_pred,
                t2l_pred_us: pred.t2l_pred,
                fit_residual: est.fit_residual(),
                integrity: est.integrity,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let window = loss_dominated_window(&lc.device.resolve(cfg.units, 1.0)?)?;
    let mut breakeven = Vec::new();
    let mut slope = Vec::new();
    for &m in lc.method.names() {
        let mut pts: Vec<&LifetimeRow> = rows.iter().filter(|r| r.method == m).collect();
        pts.sort_by(|a, b| a.t1p_us.total_cmp(&b.t1p_us));
        let x: Vec<f64> = pts.iter().map(|r| r.t1p_us).collect();
        let ratio: Vec<f64> = pts.iter().map(|r| r.t1l_us / r.t1p_us).collect();
        breakeven.push((m.to_string(), unit_crossing(&x, &ratio)));
        let inside: Vec<&&LifetimeRow> = pts
            .iter()
            .filter(|r| r.t1p_us >= window.0 && r.t1p_us <= window.1)
            .collect();
        let sx: Vec<f64> = inside.iter().map(|r| r.t1p_us).collect();
        let sy: Vec<f64> = inside.iter().map(|r| r.t1l_us).collect();
        slope.push((m.to_string(), log_log_slope(&sx, &sy)));
    }

    let mut table = Table::new(vec![
        "T1P_us",
        "T1L_us",
        "T2L_us",
        "T1L_over_T1P",
        "T2L_over_T1P",
        "T1L_pred_us",
        "T2L_pred_us",
        "fit_residual",
        "method",
    ]);
    for r in &rows {
        table.push(vec![
            num(r.t1p_us),
            num(r.t1l_us),
            num(r.t2l_us),
            num(r.t1l_us / r.t1p_us),
            num(r.t2l_us / r.t1p_us),
            num(r.t1l_pred_us),
            num(r.t2l_pred_us),
            num(r.fit_residual),
            r.method.clone(),
        ]);
    }
    let run = LifetimesRun {
        rows,
        breakeven_t1p_us: breakeven,
        slope_window_us: window,
        slope,
    };
    let outputs = Outputs {
        files: vec![
            ("lifetimes.csv".into(), table.render(cfg)?),
            ("lifetimes_summary.json".into(), render_json(cfg, &summary(&run))?),
        ],
    };
    Ok((run, outputs))
}

#[derive(Serialize)]
struct LifetimesSummary<'a> {
    breakeven_t1p_us: &'a [(String, Option<f64>)],
    slope_window_us: (f64, f64),
    slope: &'a [(String, Option<f64>)],
    integrity: Vec<(f64, String, Option<IntegrityReport>)>,
}

fn summary(run: &LifetimesRun) -> LifetimesSummary<'_> {
    LifetimesSummary {
        breakeven_t1p_us: &run.breakeven_t1p_us,
        slope_window_us: run.slope_window_us,
        slope: &run.slope,
        integrity: run.rows.iter().map(|r| (r.t1p_us, r.method.clone(), r.integrity)).collect(),
    }
}

fn annotate(e: CliError, context: &str) -> CliError {
    match e {
        CliError::Validation(m) => CliError::Validation(format!("{context}: {m}")),
        CliError::Numerical(m) => CliError::Numerical(format!("{context}: {m}")),
        other => other,
    }
}

// ---------------------------------------------------------------- dephasing

#[derive(Clone, Debug, Serialize)]
pub struct CurveSummary {
    pub s0_scale: f64,
    pub s0: f64,
    /// Config units.
    pub w: f64,
    pub t2_fit_us: Option<f64>,
    pub t_1e_us: Option<f64>,
    pub t2_pred_us: Option<f64>,
    pub fit_residual: Option<f64>,
    #[serde(skip)]
    pub curve: EnsembleResult,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeviceProjection {
    pub t2_echo_us: f64,
    pub w: f64,
    pub s0_calibrated: f64,
    pub s0_analytic: f64,
    pub single_qubit_t2_us: f64,
    pub conversion: DeviceConversion,
    pub t_lz_us: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OneOverFRun {
    pub s0: f64,
    pub s0_analytic: f64,
    pub calibration_measured_us: f64,
    pub calibration_gaussian_r2: f64,
    pub curves: Vec<CurveSummary>,
    pub projection: DeviceProjection,
}

/// Drive-free curve: plain precession on the echo band.
fn undriven_curve(s0: f64, t2_echo: f64, c: &crate::config::OneOverFConfig, seed: u64) -> CliResult<EnsembleResult> {
    let t_max = c.horizon_factor * t2_echo;
    let band = OneOverFParams::for_echo(s0, t2_echo, t_max, c.n_components);
    let ens = EnsembleSettings {
        n_traces: c.n_traces,
        seed,
        t_max,
        dt: 1.0 / (10.0 * band.f_max),
        n_out: c.n_out,
    };
    Ok(ensemble_average(&band, 0.0, Protocol::Rabi, &ens)?)
}

pub fn run_one_over_f(cfg: &SweepConfig) -> CliResult<(OneOverFRun, Outputs)> {
    let c = &cfg.dephasing.one_over_f;
    non_empty(&c.w, "dephasing.one_over_f.w")?;
    let cal_settings = CalibrationSettings {
        n_traces: c.calibration_traces,
        seed: cfg.seed,
        ..CalibrationSettings::default()
    };
    let cal = calibrate_s0_to_echo(c.t2_echo_us, &cal_settings)?;
    let scales = [1.0, 0.25];
    let jobs: Vec<(usize, f64, f64)> = scales
        .iter()
        .flat_map(|&s| c.w.iter().map(move |&w| (s, w)))
        .enumerate()
        .map(|(i, (s, w))| (i, s, w))
        .collect();
    // points run one after another; each ensemble is parallel inside
    let mut curves = Vec::with_capacity(jobs.len());
    for &(i, scale, w_in) in &jobs {
        let s0 = cal.s0 * scale;
        let w = cfg.units.to_internal(w_in);
        let seed = sub_seed(cfg.seed, i);
        let summary = if w == 0.0 {
            // the quartered noise has twice the echo time
            let curve = undriven_curve(s0, c.t2_echo_us / scale.sqrt(), c, seed)?;
            CurveSummary {
                s0_scale: scale,
                s0,
                w: w_in,
                t2_fit_us: None,
                t_1e_us: curve.crossing((-1.0f64).exp()),
                t2_pred_us: None,
                fit_residual: None,
                curve,
            }
        } else {
            let pt = one_over_f_rabi_t2(
                s0,
                w,
                &RabiSettings {
                    n_traces: c.n_traces,
                    seed,
                    n_components: c.n_components,
                    horizon_factor: c.horizon_factor,
                    n_out: c.n_out,
                },
            )?;
            CurveSummary {
                s0_scale: scale,
                s0,
                w: w_in,
                t2_fit_us: Some(pt.t2),
                t_1e_us: pt.curve.crossing((-1.0f64).exp()),
                t2_pred_us: Some(pt.t2_predicted),
                fit_residual: Some(pt.fit_residual),
                curve: pt.curve,
            }
        };
        log::info!("1/f W = {w_in}, S0 x {scale}: T2 = {:?}", summary.t2_fit_us);
        curves.push(summary);
    }

    let dev_cal = calibrate_s0_to_echo(c.device_t2_echo_us, &cal_settings)?;
    let w_dev = cfg.units.to_internal(c.device_w);
    let single = rabi_t2_prediction(dev_cal.s0, w_dev)?;
    let conversion = DeviceConversion::for_kind(DephasingKind::OneOverF);
    let projection = DeviceProjection {
        t2_echo_us: c.device_t2_echo_us,
        w: c.device_w,
        s0_calibrated: dev_cal.s0,
        s0_analytic: echo_s0_analytic(c.device_t2_echo_us),
        single_qubit_t2_us: single,
        conversion,
        t_lz_us: conversion.apply(single),
    };

    let mut table = Table::new(vec!["S0_scale", "W", "t_us", "coherence"]);
    for s in &curves {
        for (t, v) in s.curve.times.iter().zip(&s.curve.mean) {
            table.push(vec![num(s.s0_scale), num(s.w), num(*t), num(*v)]);
        }
    }
    let mut fits = Table::new(vec!["S0_scale", "S0", "W", "T2_fit_us", "T_1e_us", "T2_pred_us", "fit_residual"]);
    for s in &curves {
        fits.push(vec![
            num(s.s0_scale),
            num(s.s0),
            num(s.w),
            opt(s.t2_fit_us),
            opt(s.t_1e_us),
            opt(s.t2_pred_us),
            opt(s.fit_residual),
        ]);
    }
    let run = OneOverFRun {
        s0: cal.s0,
        s0_analytic: echo_s0_analytic(c.t2_echo_us),
        calibration_measured_us: cal.measured,
        calibration_gaussian_r2: cal.gaussian_r2,
        curves,
        projection,
    };
    let outputs = Outputs {
        files: vec![
            ("dephasing_curves.csv".into(), table.render(cfg)?),
            ("dephasing_fits.csv".into(), fits.render(cfg)?),
            ("dephasing_summary.json".into(), render_json(cfg, &run)?),
        ],
    };
    Ok((run, outputs))
}

#[derive(Clone, Debug, Serialize)]
pub struct EndpointCheck {
    pub w: f64,
    pub delta_omega10: f64,
    pub gamma_sw: f64,
    pub reported_us: f64,
    /// `gamma_sw` read as 1/µs, or as 2π × value.
    pub gamma_times_2pi: bool,
    pub law_us: f64,
    pub device_us: f64,
    pub reference_law_us: f64,
    /// reported / value, for the raw and device-converted law.
    pub ratio_raw: f64,
    pub ratio_device: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TelegraphRun {
    pub law: PowerLaw,
    pub points: Vec<shadowqec::dephasing::TelegraphPoint>,
    pub endpoints: Vec<EndpointCheck>,
}

/// Prefactor of the reference telegraph law `a W² / (Δω² Γ)`.
pub const REFERENCE_PREFACTOR: f64 = 2.30;

pub fn run_telegraph(cfg: &SweepConfig) -> CliResult<(TelegraphRun, Outputs)> {
    let c = &cfg.dephasing.telegraph;
    let grid = if c.w.is_empty() && c.delta_omega10.is_empty() && c.gamma_sw.is_empty() {
        if c.grid_points == 0 {
            return Err(CliError::Validation("dephasing.telegraph.grid_points must be > 0".into()));
        }
        TelegraphGrid::reference_box(c.grid_points)
    } else {
        TelegraphGrid {
            w: c.w.iter().map(|&v| cfg.units.to_internal(v)).collect(),
            delta_omega10: c.delta_omega10.iter().map(|&v| cfg.units.to_internal(v)).collect(),
            gamma_sw: c.gamma_sw.clone(),
        }
    };
    non_empty(&grid.w, "dephasing.telegraph.w")?;
    non_empty(&grid.delta_omega10, "dephasing.telegraph.delta_omega10")?;
    non_empty(&grid.gamma_sw, "dephasing.telegraph.gamma_sw")?;
    // the power law needs two values per axis and its minimum sample count
    if grid.w.len() < 2 || grid.delta_omega10.len() < 2 || grid.gamma_sw.len() < 2 || grid.len() < MIN_FIT_POINTS {
        return Err(CliError::Validation(format!(
            "dephasing.telegraph: grid of {}x{}x{} cannot fix the power law (need >= 2 per axis and >= {MIN_FIT_POINTS} points)",
            grid.w.len(),
            grid.delta_omega10.len(),
            grid.gamma_sw.len()
        )));
    }
    let reference = TelegraphGrid::reference_box(2);
    let inside = |v: &[f64], r: &[f64]| v.iter().all(|x| *x >= r[0] * (1.0 - 1e-9) && *x <= r[1] * (1.0 + 1e-9));
    if !(inside(&grid.w, &reference.w)
        && inside(&grid.delta_omega10, &reference.delta_omega10)
        && inside(&grid.gamma_sw, &reference.gamma_sw))
    {
        log::warn!("telegraph grid extends outside the reference box");
    }
    let settings = TelegraphSweepSettings {
        n_traces: c.n_traces,
        seed: cfg.seed,
        convention: c.convention,
        horizon_factor: c.horizon_factor,
        n_out: c.n_out,
    };
    let sweep = telegraph_sweep(&grid, &settings)?;
    let conversion = DeviceConversion::for_kind(DephasingKind::Telegraph);
    let mut endpoints = Vec::new();
    for e in &c.endpoints {
        for times_2pi in [false, true] {
            let (w, dw) = (cfg.units.to_internal(e.w), cfg.units.to_internal(e.delta_omega10));
            let g = if times_2pi { 2.0 * PI * e.gamma_sw } else { e.gamma_sw };
            let law_us = sweep.law.eval(w, dw, g);
            let device_us = conversion.apply(law_us);
            endpoints.push(EndpointCheck {
                w: e.w,
                delta_omega10: e.delta_omega10,
                gamma_sw: e.gamma_sw,
                reported_us: e.reported_us,
                gamma_times_2pi: times_2pi,
                law_us,
                device_us,
                reference_law_us: REFERENCE_PREFACTOR * w * w / (dw * dw * g),
                ratio_raw: e.reported_us / law_us,
                ratio_device: e.reported_us / device_us,
            });
        }
    }
    let mut table = Table::new(vec!["W", "delta_omega10", "gamma_sw_per_us", "T2_us", "T2_golden_rule_us", "fit_residual"]);
    for p in &sweep.points {
        table.push(vec![
            num(cfg.units.from_internal(p.w)),
            num(cfg.units.from_internal(p.delta_omega10)),
            num(p.gamma_sw),
            num(p.t2),
            num(p.t2_golden_rule),
            num(p.fit_residual),
        ]);
    }
    let run = TelegraphRun {
        law: sweep.law,
        points: sweep.points,
        endpoints,
    };
    #[derive(Serialize)]
    struct Fit<'a> {
        law: &'a PowerLaw,
        law_units: &'static str,
        endpoints: &'a [EndpointCheck],
    }
    let fit = Fit {
        law: &run.law,
        law_units: "T2 in us; W, delta_omega10 in rad/us; gamma_sw in 1/us",
        endpoints: &run.endpoints,
    };
    let outputs = Outputs {
        files: vec![
            ("telegraph_points.csv".into(), table.render(cfg)?),
            ("telegraph_fit.json".into(), render_json(cfg, &fit)?),
        ],
    };
    Ok((run, outputs))
}

// ---------------------------------------------------------------- reports

#[derive(Clone, Debug, Serialize)]
pub struct RatesRow {
    pub t1p_us: f64,
    pub prediction: RatePrediction,
    pub gamma_r_off_upper: f64,
    pub gamma_r_off_middle: f64,
}

pub fn run_rates(cfg: &SweepConfig) -> CliResult<(Vec<RatesRow>, Outputs)> {
    let rc = &cfg.rates;
    non_empty(&rc.t1p_us, "rates.t1p_us")?;
    let rows = rc
        .t1p_us
        .iter()
        .map(|&t| {
            let p = rc.device.resolve(cfg.units, t)?;
            Ok(RatesRow {
                t1p_us: t,
                prediction: rates::predict_lifetimes(&p)?,
                gamma_r_off_upper: rates::gamma_r(p.w + 0.5 * p.delta, &p)?,
                gamma_r_off_middle: rates::gamma_r(p.w - 0.5 * p.delta, &p)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    #[derive(Serialize)]
    struct Doc<'a> {
        units: &'static str,
        rows: &'a [RatesRow],
    }
    let doc = Doc {
        units: "rates in 1/us, lifetimes in us",
        rows: &rows,
    };
    let outputs = Outputs {
        files: vec![("rates.json".into(), render_json(cfg, &doc)?)],
    };
    Ok((rows, outputs))
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanRun {
    pub plan: DrivePlan,
    pub meets_pass_level: bool,
    /// `(2ω + 6ω′ − 4δ)/5`, `(6ω − 2ω′ − 2δ)/5` with ω the higher qubit.
    pub closed_form_tones: (f64, f64),
    /// The same closed forms with the qubits swapped and δ negated; differs
    /// from the solved tones.
    pub swapped_closed_form_tones: (f64, f64),
    pub shadow_drive_ghz: f64,
}

pub fn run_plan(cfg: &SweepConfig) -> CliResult<(PlanRun, Outputs)> {
    let pc = &cfg.plan;
    let plan = circuit::plan_w_drive_with(pc.omega_l, pc.omega_r, pc.delta, pc.warn_below)?;
    let (hi, lo) = (pc.omega_l.max(pc.omega_r), pc.omega_l.min(pc.omega_r));
    let closed = |a: f64, b: f64, d: f64| ((2.0 * a + 6.0 * b - 4.0 * d) / 5.0, (6.0 * a - 2.0 * b - 2.0 * d) / 5.0);
    let run = PlanRun {
        meets_pass_level: plan.min_detuning >= circuit::COLLISION_PASS_GHZ,
        closed_form_tones: closed(hi, lo, pc.delta),
        swapped_closed_form_tones: closed(lo, hi, -pc.delta),
        shadow_drive_ghz: circuit::shadow_drive_freq(pc.omega_k, pc.omega_sk, pc.w, pc.delta)?,
        plan,
    };
    let outputs = Outputs {
        files: vec![("plan.json".into(), render_json(cfg, &run)?)],
    };
    Ok((run, outputs))
}

#[derive(Clone, Debug, Serialize)]
pub struct DispersionLevel {
    pub level: usize,
    pub width: f64,
    pub asymptotic: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TransmonRun {
    pub spectrum: TransmonSpectrum,
    pub anharmonicity: f64,
    pub charge_dispersion: Vec<DispersionLevel>,
    pub half_angle: HalfAngleElements,
    pub half_angle_grid: HalfAngleElements,
    pub qp_ratios: QpRatios,
    pub qp_ratios_grid: QpRatios,
    pub alpha: f64,
    pub w_from_drive_ghz: f64,
}

pub fn run_transmon(cfg: &SweepConfig) -> CliResult<(TransmonRun, Outputs)> {
    let tc = &cfg.transmon;
    let p = TransmonParams {
        ej: tc.ej_over_ec,
        ec: 1.0,
        ng: tc.ng,
        n_cutoff: tc.n_cutoff,
    };
    let spectrum = circuit::diagonalize_transmon(&p)?;
    let flat = circuit::diagonalize_transmon(&TransmonParams { ng: 0.0, ..p })?;
    let half = circuit::diagonalize_transmon(&TransmonParams { ng: 0.5, ..p })?;
    let charge_dispersion = (0..4)
        .map(|m| DispersionLevel {
            level: m,
            width: half.energies[m] - flat.energies[m],
            asymptotic: circuit::charge_dispersion_estimate(tc.ej_over_ec, 1.0, m as u32),
        })
        .collect();
    let half_angle = circuit::half_angle_cos_elements(&p)?;
    let half_angle_grid = circuit::half_angle_cos_elements_grid(&p, tc.grid_points)?;
    let qp_ratios = circuit::qp_matrix_ratios(&p)?;
    let alpha = circuit::alpha_for_w(tc.w_ghz, tc.eji_ghz, spectrum.c02)?;
    let run = TransmonRun {
        anharmonicity: spectrum.anharmonicity(),
        charge_dispersion,
        qp_ratios_grid: circuit::qp_ratios_from(&half_angle_grid),
        half_angle,
        half_angle_grid,
        qp_ratios,
        w_from_drive_ghz: circuit::w_from_drive(tc.eji_ghz, alpha, spectrum.c02)?.signed(),
        alpha,
        spectrum,
    };
    let outputs = Outputs {
        files: vec![("transmon.json".into(), render_json(cfg, &run)?)],
    };
    Ok((run, outputs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_and_slope_helpers() {
        let x = [0.1, 1.0, 10.0];
        assert!((log_log_slope(&x, &[0.01, 1.0, 100.0]).unwrap() - 2.0).abs() < 1e-12);
        let c = unit_crossing(&x, &[0.5, 2.0, 4.0]).unwrap();
        assert!(c > 0.1 && c < 1.0);
        assert_eq!(unit_crossing(&x, &[2.0, 3.0, 4.0]), None);
        assert_eq!(log_log_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn reference_window() {
        let (lo, hi) = loss_dominated_window(&DeviceParams::reference(1.0)).unwrap();
        assert!(lo > 0.2 && lo < 0.5 && hi > 1.5 && hi < 2.5, "({lo}, {hi})");
    }

    #[test]
    fn plan_report_for_reference_example() {
        let (run, out) = run_plan(&SweepConfig::default()).unwrap();
        assert!((run.plan.tones[0].0 - 7.72).abs() < 0.01);
        assert!((run.swapped_closed_form_tones.0 - 9.88).abs() < 0.01);
        assert!((run.shadow_drive_ghz - 10.115).abs() < 1e-12);
        assert!(out.get("plan.json").unwrap().contains("\"collision_report\""));
    }

    #[test]
    fn rates_report() {
        let (rows, _) = run_rates(&SweepConfig::default()).unwrap();
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.prediction.recapture_p)));
        assert!(rows.iter().all(|r| r.prediction.t1l_pred >= r.prediction.t2l_pred));
    }

    #[test]
    fn body_strips_header() {
        let o = Outputs {
            files: vec![("a.csv".into(), "# config: {}\nx,y\n1,2\n".into())],
        };
        assert_eq!(o.body("a.csv"), Some("x,y\n1,2\n"));
    }
}
