//! Ensemble averages over noise realisations, echo calibration and the
//! telegraph parameter sweep.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{one_over_f_trace, NoiseTrace, OneOverFParams, ShiftConvention, TelegraphParams};
use super::spin::{echo_phases_undriven, evolve_spin, Protocol};
use super::NoiseSource;
use crate::error::{Error, Result};
use crate::fitting::{fit_exponential, fit_powerlaw_multi, DecayFit, Floor, PowerLaw, PowerSample};

pub const MIN_TRACES: usize = 50;
pub const MIN_CALIBRATION_TRACES: usize = 300;
/// Fits stop where the mean coherence drops below this level.
pub const FIT_FLOOR: f64 = 0.05;

/// Independent, reproducible stream for trace `index`.
pub fn trace_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub n_traces: usize,
    pub seed: u64,
    pub t_max: f64,
    pub dt: f64,
    /// Output intervals; `n_out + 1` times including t = 0.
    pub n_out: usize,
}

impl EnsembleSettings {
    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_out).map(|i| self.t_max * i as f64 / self.n_out as f64).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.n_traces < MIN_TRACES {
            return Err(Error::param("n_traces", format!("need at least {MIN_TRACES}")));
        }
        if self.n_out < 2 {
            return Err(Error::param("n_out", "need at least 2 output intervals"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub protocol: Protocol,
    pub times: Vec<f64>,
    /// ⟨σx⟩ for rabi and echo, |⟨σx⟩ + i⟨σy⟩| for free precession.
    pub mean: Vec<f64>,
    pub n_traces: usize,
}

impl EnsembleResult {
    /// `A e^{−t/T2}` fitted up to the first point below [`FIT_FLOOR`].
    pub fn fit(&self, transient_cut: f64) -> Result<DecayFit> {
        let end = self.mean.iter().position(|v| *v < FIT_FLOOR).unwrap_or(self.mean.len());
        fit_exponential(&self.times[..end], &self.mean[..end], transient_cut, Floor::Fixed(0.0))
    }

    /// First time the mean falls through `level`, linearly interpolated.
    pub fn crossing(&self, level: f64) -> Option<f64> {
        crossing(&self.times, &self.mean, level)
    }
}

fn crossing(times: &[f64], values: &[f64], level: f64) -> Option<f64> {
    let j = values.iter().position(|v| *v < level)?;
    if j == 0 {
        return Some(times[0]);
    }
    let (v0, v1) = (values[j - 1], values[j]);
    Some(times[j - 1] + (v0 - level) / (v0 - v1) * (times[j] - times[j - 1]))
}

/// Averages the spin response over `n_traces` realisations. Traces run in
/// parallel but are summed in index order, so results do not depend on the
/// thread count.
pub fn ensemble_average(
    source: &dyn NoiseSource,
    w: f64,
    protocol: Protocol,
    settings: &EnsembleSettings,
) -> Result<EnsembleResult> {
    settings.validate()?;
    let times = settings.times();
    let per_trace: Vec<Vec<C64>> = (0..settings.n_traces)
        .into_par_iter()
        .map(|i| {
            let trace = source.trace(settings.t_max, settings.dt, &mut trace_rng(settings.seed, i))?;
            evolve_spin(&trace, w, protocol, &times)
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![C64::new(0.0, 0.0); times.len()];
    for run in &per_trace {
        for (s, v) in sum.iter_mut().zip(run) {
            *s += v;
        }
    }
    let n = settings.n_traces as f64;
    let mean = sum
        .iter()
        .map(|s| match protocol {
            Protocol::Free => s.norm() / n,
            Protocol::Rabi | Protocol::Echo => s.re / n,
        })
        .collect();
    Ok(EnsembleResult {
        protocol,
        times,
        mean,
        n_traces: settings.n_traces,
    })
}

/// Closed-form echo law for this generator: `exp(−4π ln2 S0 t²)`.
pub fn echo_s0_analytic(t2_echo: f64) -> f64 {
    1.0 / (4.0 * PI * 2f64.ln() * t2_echo * t2_echo)
}

/// Rabi lifetime from the golden rule, `(π S(W))⁻¹` with `S(ω) = 2π S0/ω`.
pub fn rabi_t2_prediction(s0: f64, w: f64) -> Result<f64> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::param("w", "must be finite and > 0"));
    }
    if !(s0 >= 0.0) {
        return Err(Error::param("s0", "must be >= 0"));
    }
    Ok(if s0 == 0.0 { f64::INFINITY } else { w / (2.0 * PI * PI * s0) })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSettings {
    pub n_traces: usize,
    pub seed: u64,
    pub n_components: usize,
    /// Simulated span in units of the target time.
    pub horizon_factor: f64,
    pub n_out: usize,
    /// Relative tolerance on the 1/e crossing.
    pub tolerance: f64,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            n_traces: 1000,
            seed: 0,
            n_components: 200,
            horizon_factor: 3.0,
            n_out: 600,
            tolerance: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EchoCalibration {
    pub s0: f64,
    pub target: f64,
    pub measured: f64,
    pub iterations: usize,
    /// Coefficient of determination of `exp(−(t/T)²)` against the echo curve.
    pub gaussian_r2: f64,
    pub band: OneOverFParams,
    pub curve: EnsembleResult,
}

/// Finds S0 whose simulated echo crosses 1/e at `target`.
///
/// All bisection steps reuse the same realisations: without drive the echo
/// phase is linear in the noise amplitude, so each trace's unit-strength phase
/// is computed once and rescaled by √S0.
pub fn calibrate_s0_to_echo(target: f64, settings: &CalibrationSettings) -> Result<EchoCalibration> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::param("target", "must be finite and > 0"));
    }
    if settings.n_traces < MIN_CALIBRATION_TRACES {
        return Err(Error::param(
            "n_traces",
            format!("calibration needs at least {MIN_CALIBRATION_TRACES}"),
        ));
    }
    let t_max = settings.horizon_factor * target;
    let unit = OneOverFParams::for_echo(1.0, target, t_max, settings.n_components);
    unit.validate()?;
    let dt = 1.0 / (10.0 * unit.f_max);
    let times: Vec<f64> = (0..=settings.n_out)
        .map(|i| t_max * i as f64 / settings.n_out as f64)
        .collect();
    let phases: Vec<Vec<f64>> = (0..settings.n_traces)
        .into_par_iter()
        .map(|i| {
            let tr: NoiseTrace = one_over_f_trace(&unit, t_max, dt, &mut trace_rng(settings.seed, i))?;
            Ok(echo_phases_undriven(&tr, &times))
        })
        .collect::<Result<_>>()?;
    let curve_at = |s0: f64| -> Vec<f64> {
        let amp = s0.sqrt();
        let mut mean = vec![0.0; times.len()];
        for p in &phases {
            for (m, phi) in mean.iter_mut().zip(p) {
                *m += (amp * phi).cos();
            }
        }
        let n = phases.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    };
    let level = (-1.0f64).exp();
    let t_at = |s0: f64| crossing(&times, &curve_at(s0), level).unwrap_or(f64::INFINITY);

    let guess = echo_s0_analytic(target);
    let (mut lo, mut hi) = (guess / 100.0, guess * 100.0);
    if t_at(lo) <= target || t_at(hi) >= target {
        return Err(Error::Bracket(format!(
            "echo crossing does not bracket {target} for S0 in [{lo:.3e}, {hi:.3e}]"
        )));
    }
    let mut iterations = 0;
    let mut s0 = guess;
    while iterations < 200 {
        iterations += 1;
        s0 = (lo * hi).sqrt();
        let t = t_at(s0);
        if (t / target - 1.0).abs() <= settings.tolerance || hi / lo < 1.0 + 1e-13 {
            break;
        }
        if t > target {
            lo = s0;
        } else {
            hi = s0;
        }
    }
    let mean = curve_at(s0);
    let measured = crossing(&times, &mean, level).unwrap_or(f64::INFINITY);
    let gaussian_r2 = r_squared(&times, &mean, |t| (-(t / measured).powi(2)).exp());
    Ok(EchoCalibration {
        s0,
        target,
        measured,
        iterations,
        gaussian_r2,
        band: OneOverFParams { s0, ..unit },
        curve: EnsembleResult {
            protocol: Protocol::Echo,
            times,
            mean,
            n_traces: settings.n_traces,
        },
    })
}

fn r_squared(x: &[f64], y: &[f64], model: impl Fn(f64) -> f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(t, v)| (v - model(*t)).powi(2)).sum();
    1.0 - ss_res / ss_tot
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiSettings {
    pub n_traces: usize,
    pub seed: u64,
    pub n_components: usize,
    /// Span in units of the predicted lifetime.
    pub horizon_factor: f64,
    pub n_out: usize,
}

impl Default for RabiSettings {
    fn default() -> Self {
        Self {
            n_traces: 200,
            seed: 0,
            n_components: 150,
            horizon_factor: 2.5,
            n_out: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RabiPoint {
    pub w: f64,
    pub s0: f64,
    pub t2: f64,
    pub t2_predicted: f64,
    pub fit_residual: f64,
    pub curve: EnsembleResult,
}

/// Driven-qubit lifetime under 1/f noise of strength `s0`, on the standard
/// band for the drive.
pub fn one_over_f_rabi_t2(s0: f64, w: f64, settings: &RabiSettings) -> Result<RabiPoint> {
    let t2_predicted = rabi_t2_prediction(s0, w)?;
    if !t2_predicted.is_finite() {
        return Err(Error::UndefinedRate("noise strength is zero"));
    }
    let t_max = settings.horizon_factor * t2_predicted;
    let band = OneOverFParams::for_rabi(s0, w, t_max, settings.n_components);
    let ens = EnsembleSettings {
        n_traces: settings.n_traces,
        seed: settings.seed,
        t_max,
        dt: 1.0 / (10.0 * band.f_max),
        n_out: settings.n_out,
    };
    let curve = ensemble_average(&band, w, Protocol::Rabi, &ens)?;
    let fit = curve.fit(0.0)?;
    Ok(RabiPoint {
        w,
        s0,
        t2: fit.lifetime,
        t2_predicted,
        fit_residual: fit.residual_rms,
        curve,
    })
}

/// Golden-rule telegraph lifetime `2(W² + Γ²)/(δz_on² Γ)`, where the flip rate
/// `2Γ` sets the correlation decay.
pub fn telegraph_golden_rule_t2(w: f64, p: &TelegraphParams) -> f64 {
    let on = p.on_value();
    if on == 0.0 {
        return f64::INFINITY;
    }
    2.0 * (w * w + p.gamma_sw * p.gamma_sw) / (on * on * p.gamma_sw)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelegraphGrid {
    pub w: Vec<f64>,
    pub delta_omega10: Vec<f64>,
    pub gamma_sw: Vec<f64>,
}

impl TelegraphGrid {
    /// `n` log-spaced values per axis across W/2π ∈ [10, 37.5] MHz,
    /// Δω/2π ∈ [0.1, 0.55] MHz and Γ_sw ∈ [4, 22] /µs.
    pub fn reference_box(n: usize) -> Self {
        let axis = |a: f64, b: f64| -> Vec<f64> {
            if n == 1 {
                return vec![(a * b).sqrt()];
            }
            (0..n)
                .map(|i| (a.ln() + (b / a).ln() * i as f64 / (n - 1) as f64).exp())
                .collect()
        };
        Self {
            w: axis(2.0 * PI * 10.0, 2.0 * PI * 37.5),
            delta_omega10: axis(2.0 * PI * 0.1, 2.0 * PI * 0.55),
            gamma_sw: axis(4.0, 22.0),
        }
    }

    pub fn len(&self) -> usize {
        self.w.len() * self.delta_omega10.len() * self.gamma_sw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelegraphSweepSettings {
    pub n_traces: usize,
    pub seed: u64,
    pub convention: ShiftConvention,
    /// Span in units of the golden-rule lifetime.
    pub horizon_factor: f64,
    pub n_out: usize,
}

impl Default for TelegraphSweepSettings {
    fn default() -> Self {
        Self {
            n_traces: 200,
            seed: 0,
            convention: ShiftConvention::Full,
            horizon_factor: 1.5,
            n_out: 120,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelegraphPoint {
    pub w: f64,
    pub delta_omega10: f64,
    pub gamma_sw: f64,
    pub t2: f64,
    pub t2_golden_rule: f64,
    pub fit_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelegraphSweep {
    pub points: Vec<TelegraphPoint>,
    pub law: PowerLaw,
}

/// Rabi lifetime under one fluctuator, simulated with exact switching records.
pub fn telegraph_rabi_t2(w: f64, p: &TelegraphParams, settings: &TelegraphSweepSettings, seed: u64) -> Result<TelegraphPoint> {
    let t2_golden_rule = telegraph_golden_rule_t2(w, p);
    if !t2_golden_rule.is_finite() {
        return Err(Error::UndefinedRate("telegraph shift is zero"));
    }
    let ens = EnsembleSettings {
        n_traces: settings.n_traces,
        seed,
        t_max: settings.horizon_factor * t2_golden_rule,
        dt: 0.1 / p.gamma_sw,
        n_out: settings.n_out,
    };
    let fit = ensemble_average(p, w, Protocol::Rabi, &ens)?.fit(0.0)?;
    Ok(TelegraphPoint {
        w,
        delta_omega10: p.delta_omega10,
        gamma_sw: p.gamma_sw,
        t2: fit.lifetime,
        t2_golden_rule,
        fit_residual: fit.residual_rms,
    })
}

pub fn telegraph_sweep(grid: &TelegraphGrid, settings: &TelegraphSweepSettings) -> Result<TelegraphSweep> {
    let mut points = Vec::with_capacity(grid.len());
    for &w in &grid.w {
        for &dw in &grid.delta_omega10 {
            for &g in &grid.gamma_sw {
                let p = TelegraphParams {
                    delta_omega10: dw,
                    gamma_sw: g,
                    convention: settings.convention,
                };
                let seed = settings.seed.wrapping_add((points.len() as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let pt = telegraph_rabi_t2(w, &p, settings, seed)?;
                log::debug!("telegraph W={w:.3} dw={dw:.4} G={g:.3}: T2={:.4e}", pt.t2);
                points.push(pt);
            }
        }
    }
    let samples: Vec<PowerSample> = points
        .iter()
        .map(|p| PowerSample {
            w: p.w,
            delta_omega: p.delta_omega10,
            gamma_sw: p.gamma_sw,
            t2: p.t2,
        })
        .collect();
    let law = fit_powerlaw_multi(&samples)?;
    Ok(TelegraphSweep { points, law })
}
