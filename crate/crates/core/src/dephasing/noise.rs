//! Classical frequency-noise traces δz(t): random telegraph and 1/f.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_COMPONENTS: usize = 100;

/// Start of a constant stretch of a piecewise-constant trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub value: f64,
}

/// δz values (rad/µs) on a uniform grid, each held for `dt`. Telegraph traces
/// also keep their exact switching record, which the spin propagator prefers.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseTrace {
    pub dt: f64,
    pub samples: Vec<f64>,
    pub segments: Option<Vec<Segment>>,
    pub t_max: f64,
}

impl NoiseTrace {
    pub fn from_samples(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || samples.is_empty() {
            return Err(Error::param("trace", "dt must be positive and samples non-empty"));
        }
        let t_max = dt * samples.len() as f64;
        Ok(Self {
            dt,
            samples,
            segments: None,
            t_max,
        })
    }

    pub fn from_segments(t_max: f64, segments: Vec<Segment>) -> Result<Self> {
        if segments.first().map(|s| s.start) != Some(0.0) || !(t_max > 0.0) {
            return Err(Error::param("trace", "segments must start at t = 0 and t_max be positive"));
        }
        if segments.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::param("trace", "segment starts must increase"));
        }
        Ok(Self {
            dt: t_max,
            samples: Vec::new(),
            segments: Some(segments),
            t_max,
        })
    }

    pub fn duration(&self) -> f64 {
        self.t_max
    }
}

/// How the fluctuator's frequency shift Δω_10 enters the σ^z coefficient.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftConvention {
    /// δz = Δω_10 when "on"; reproduces the published regression prefactor.
    #[default]
    Full,
    /// δz = Δω_10/2 when "on": a gap shift of exactly Δω_10.
    Half,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TelegraphParams {
    /// rad/µs
    pub delta_omega10: f64,
    /// Switching rate out of either state, 1/µs.
    pub gamma_sw: f64,
    #[serde(default)]
    pub convention: ShiftConvention,
}

impl TelegraphParams {
    pub fn new(delta_omega10: f64, gamma_sw: f64) -> Self {
        Self {
            delta_omega10,
            gamma_sw,
            convention: ShiftConvention::Full,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_omega10 >= 0.0 && self.delta_omega10.is_finite()) {
            return Err(Error::param("delta_omega10", "must be finite and >= 0"));
        }
        if !(self.gamma_sw > 0.0 && self.gamma_sw.is_finite()) {
            return Err(Error::param("gamma_sw", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn on_value(&self) -> f64 {
        match self.convention {
            ShiftConvention::Full => self.delta_omega10,
            ShiftConvention::Half => 0.5 * self.delta_omega10,
        }
    }

    /// Exact switching record on `[0, t_max)`.
    pub fn switching_record(&self, t_max: f64, rng: &mut ChaCha8Rng) -> Vec<Segment> {
        let on = self.on_value();
        let mut state = rng.gen_bool(0.5);
        let mut t = 0.0;
        let mut out = vec![Segment {
            start: 0.0,
            value: if state { on } else { 0.0 },
        }];
        loop {
            // 1 − U lies in (0, 1], so the logarithm is finite
            let u: f64 = rng.gen();
            t += -(1.0 - u).ln() / self.gamma_sw;
            if t >= t_max {
                break;
            }
            state = !state;
            out.push(Segment {
                start: t,
                value: if state { on } else { 0.0 },
            });
        }
        out
    }
}

/// Per-interval averages of a piecewise-constant record.
fn bin_segments(segments: &[Segment], t_max: f64, dt: f64, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    let mut k = 0;
    for (i, slot) in out.iter_mut().enumerate() {
        let (a, b) = (i as f64 * dt, ((i + 1) as f64 * dt).min(t_max));
        let mut acc = 0.0;
        let mut t = a;
        while t < b {
            while k + 1 < segments.len() && segments[k + 1].start <= t {
                k += 1;
            }
            let end = segments.get(k + 1).map_or(b, |s| s.start.min(b));
            acc += segments[k].value * (end - t);
            t = end;
        }
        *slot = acc / (b - a);
    }
    out
}

pub fn gen_telegraph(p: &TelegraphParams, t_max: f64, dt: f64, seed: u64) -> Result<NoiseTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    telegraph_trace(p, t_max, dt, &mut rng)
}

pub(crate) fn telegraph_trace(p: &TelegraphParams, t_max: f64, dt: f64, rng: &mut ChaCha8Rng) -> Result<NoiseTrace> {
    p.validate()?;
    check_grid(t_max, dt)?;
    if dt > 0.1 / p.gamma_sw {
        return Err(Error::Resolution { dt, gamma: p.gamma_sw });
    }
    let n = (t_max / dt).ceil() as usize;
    let segments = p.switching_record(t_max, rng);
    let samples = bin_segments(&segments, t_max, dt, n);
    Ok(NoiseTrace {
        dt,
        samples,
        segments: Some(segments),
        t_max,
    })
}

fn check_grid(t_max: f64, dt: f64) -> Result<()> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::param("t_max", "must be finite and > 0"));
    }
    if !(dt > 0.0 && dt <= t_max) {
        return Err(Error::param("dt", "must lie in (0, t_max]"));
    }
    Ok(())
}

/// Flicker noise with one-sided angular spectrum `2π S0 / ω` on
/// `[f_min, f_max]` (cycles/µs).
///
/// Each trace is a Gaussian process built from two parts. Above the split
/// `1.5/L` a linear comb with spacing `1/L` carries random Gaussian
/// coefficients and is summed by FFT; a period `L ≥ 2 t_max` makes the
/// comb's covariance match the continuum over the simulated window. Below the
/// split, where the comb has no lines, `n_components` cosines at jittered
/// log-spaced frequencies carry the quasi-static part. A comb of fixed-amplitude
/// lines fails here: each line near the Rabi resonance drives a coherent flop
/// unless there are thousands of them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneOverFParams {
    pub s0: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub n_components: usize,
}

/// Comb geometry for one trace length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CombLayout {
    pub n_fft: usize,
    /// Period L = n_fft · dt.
    pub period: f64,
    /// Boundary between the cosine and comb parts, cycles/µs.
    pub split: f64,
}

impl OneOverFParams {
    /// Band for a Rabi run at drive `w` lasting `t_max`.
    pub fn for_rabi(s0: f64, w: f64, t_max: f64, n_components: usize) -> Self {
        Self {
            s0,
            f_min: 1.0 / (10.0 * t_max),
            f_max: 100.0 * w / (2.0 * PI),
            n_components,
        }
    }

    /// Band for an echo run: no drive sets the upper edge, so it is tied to
    /// the decay time being resolved.
    pub fn for_echo(s0: f64, t2_target: f64, t_max: f64, n_components: usize) -> Self {
        Self {
            s0,
            f_min: 1.0 / (10.0 * t_max),
            f_max: 100.0 / t2_target,
            n_components,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 >= 0.0 && self.s0.is_finite()) {
            return Err(Error::param("s0", "must be finite and >= 0"));
        }
        if !(self.f_min > 0.0 && self.f_max > self.f_min && self.f_max.is_finite()) {
            return Err(Error::Band(format!(
                "need 0 < f_min < f_max, got [{}, {}]",
                self.f_min, self.f_max
            )));
        }
        if self.n_components < MIN_COMPONENTS {
            return Err(Error::Band(format!(
                "{} components; need at least {MIN_COMPONENTS}",
                self.n_components
            )));
        }
        Ok(())
    }

    pub fn layout(&self, t_max: f64, dt: f64) -> CombLayout {
        let n_fft = ((2.0 * t_max / dt).ceil() as usize).next_power_of_two();
        let period = n_fft as f64 * dt;
        CombLayout {
            n_fft,
            period,
            split: (1.5 / period).clamp(self.f_min, self.f_max),
        }
    }

    /// Cosines covering `[f_min, upper]`: one jittered frequency per log bin,
    /// a uniform phase each, and the common amplitude `√(4π S0 Δln f)`.
    pub fn draw_low_band(&self, upper: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>, f64) {
        let lo = (2.0 * PI * self.f_min).ln();
        let step = (upper / self.f_min).ln() / self.n_components as f64;
        let (omegas, phases) = (0..self.n_components)
            .map(|k| {
                let u: f64 = rng.gen();
                let phase = rng.gen_range(0.0..2.0 * PI);
                ((lo + (k as f64 + u) * step).exp(), phase)
            })
            .unzip();
        (omegas, phases, (4.0 * PI * self.s0 * step).sqrt())
    }

    /// Standard deviation of comb line `j`: its bin `[(j−½)/L, (j+½)/L]`
    /// clipped to `[split, f_max]` holds variance `2π S0 ln(f_hi/f_lo)`.
    fn comb_sigma(&self, layout: &CombLayout, j: usize) -> f64 {
        let lo = ((j as f64 - 0.5) / layout.period).max(layout.split);
        let hi = ((j as f64 + 0.5) / layout.period).min(self.f_max);
        if hi <= lo {
            0.0
        } else {
            (2.0 * PI * self.s0 * (hi / lo).ln()).sqrt()
        }
    }
}

pub fn gen_one_over_f(p: &OneOverFParams, t_max: f64, dt: f64, seed: u64) -> Result<NoiseTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    one_over_f_trace(p, t_max, dt, &mut rng)
}

pub(crate) fn one_over_f_trace(p: &OneOverFParams, t_max: f64, dt: f64, rng: &mut ChaCha8Rng) -> Result<NoiseTrace> {
    p.validate()?;
    check_grid(t_max, dt)?;
    if p.f_min > 1.0 / t_max * (1.0 + 1e-12) {
        return Err(Error::Band(format!(
            "f_min = {} exceeds 1/t_max = {}",
            p.f_min,
            1.0 / t_max
        )));
    }
    if p.f_max > 0.5 / dt {
        return Err(Error::Band(format!(
            "f_max = {} exceeds the Nyquist frequency {} of dt = {dt}",
            p.f_max,
            0.5 / dt
        )));
    }
    let n = (t_max / dt).ceil() as usize;
    let layout = p.layout(t_max, dt);
    let (omegas, phases, amp) = p.draw_low_band(layout.split, rng);
    // the cosines sit below the split, far below the sampling rate
    let stride = (layout.n_fft / 4096).max(1);
    let mut samples = synthesize_smooth(&omegas, &phases, amp, dt, n, stride);

    let n_fft = layout.n_fft;
    let j_max = ((p.f_max * layout.period + 0.5).floor() as usize).min(n_fft / 2);
    let mut spectrum = vec![C64::new(0.0, 0.0); n_fft];
    for (j, slot) in spectrum.iter_mut().enumerate().take(j_max + 1).skip(1) {
        let (g1, g2): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        let sigma = p.comb_sigma(&layout, j);
        // half-step phase puts the values at interval midpoints
        *slot = sigma * C64::new(g1, g2) * C64::from_polar(1.0, PI * j as f64 / n_fft as f64);
    }
    FftPlanner::new().plan_fft_inverse(n_fft).process(&mut spectrum);
    for (s, z) in samples.iter_mut().zip(&spectrum) {
        *s += z.re;
    }
    Ok(NoiseTrace {
        dt,
        samples,
        segments: None,
        t_max,
    })
}

/// Σ amp·cos(ω_k t + φ_k) at interval midpoints, by phasor recurrence with a
/// periodic exact restart to bound rounding drift.
pub(crate) fn synthesize(omegas: &[f64], phases: &[f64], amp: f64, dt: f64, n: usize) -> Vec<f64> {
    const RESYNC: usize = 4096;
    let mut out = vec![0.0; n];
    if amp == 0.0 {
        return out;
    }
    let rot: Vec<(f64, f64)> = omegas.iter().map(|w| ((w * dt).cos(), (w * dt).sin())).collect();
    let mut z: Vec<(f64, f64)> = vec![(0.0, 0.0); omegas.len()];
    for start in (0..n).step_by(RESYNC) {
        let t0 = (start as f64 + 0.5) * dt;
        for (k, zk) in z.iter_mut().enumerate() {
            let a = omegas[k] * t0 + phases[k];
            *zk = (a.cos(), a.sin());
        }
        for slot in out.iter_mut().take((start + RESYNC).min(n)).skip(start) {
            let mut acc = 0.0;
            for (zk, r) in z.iter_mut().zip(&rot) {
                acc += zk.0;
                *zk = (zk.0 * r.0 - zk.1 * r.1, zk.0 * r.1 + zk.1 * r.0);
            }
            *slot = amp * acc;
        }
    }
    out
}

/// [`synthesize`] on every `stride`-th midpoint, linearly interpolated.
pub(crate) fn synthesize_smooth(omegas: &[f64], phases: &[f64], amp: f64, dt: f64, n: usize, stride: usize) -> Vec<f64> {
    if stride <= 1 {
        return synthesize(omegas, phases, amp, dt, n);
    }
    let coarse = synthesize(omegas, phases, amp, dt * stride as f64, n / stride + 2);
    // coarse point k sits at (k + ½)·stride·dt; fine point i at (i + ½)·dt
    (0..n)
        .map(|i| {
            let x = ((i as f64 + 0.5) / stride as f64 - 0.5).max(0.0);
            let k = x.floor() as usize;
            let f = x - k as f64;
            coarse[k] * (1.0 - f) + coarse[k + 1] * f
        })
        .collect()
}
