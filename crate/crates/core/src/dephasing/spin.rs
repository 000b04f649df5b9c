//! Driven spin-½ under `H = W σ^x + δz(t) σ^z` with exact piecewise propagators.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::noise::NoiseTrace;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Ramsey-type free precession.
    Free,
    /// Continuous drive; |+x⟩ is the undisturbed eigenstate.
    Rabi,
    /// π rotation about x at t/2, read out at t.
    Echo,
}

type Spinor = [C64; 2];

fn plus_x() -> Spinor {
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [a, a]
}

/// `exp(−i(W σx + z σz)τ)` applied in place.
#[inline]
fn step(psi: &mut Spinor, w: f64, z: f64, tau: f64) {
    let h = w.hypot(z);
    if h == 0.0 || tau == 0.0 {
        return;
    }
    let (s, c) = (h * tau).sin_cos();
    let (nx, nz) = (w / h * s, z / h * s);
    let [a, b] = *psi;
    // (c − i s n·σ) ψ
    psi[0] = a * c - C64::i() * (b * nx + a * nz);
    psi[1] = b * c - C64::i() * (a * nx - b * nz);
}

fn pi_x(psi: &mut Spinor) {
    let [a, b] = *psi;
    *psi = [-C64::i() * b, -C64::i() * a];
}

/// `⟨σx⟩ + i⟨σy⟩`.
fn coherence(psi: &Spinor) -> C64 {
    2.0 * psi[0].conj() * psi[1]
}

fn propagate(psi: &mut Spinor, trace: &NoiseTrace, w: f64, t0: f64, t1: f64) {
    if t1 <= t0 {
        return;
    }
    match &trace.segments {
        Some(seg) => {
            let mut k = seg.partition_point(|s| s.start <= t0).saturating_sub(1);
            let mut t = t0;
            while t < t1 {
                let end = seg.get(k + 1).map_or(t1, |s| s.start.min(t1));
                step(psi, w, seg[k].value, end - t);
                t = end;
                k += 1;
            }
        }
        None => {
            let dt = trace.dt;
            let last = trace.samples.len() - 1;
            let mut i = ((t0 / dt).floor() as usize).min(last);
            let mut t = t0;
            while t < t1 {
                let end = if i >= last { t1 } else { ((i + 1) as f64 * dt).min(t1) };
                if end > t {
                    step(psi, w, trace.samples[i], end - t);
                    t = end;
                }
                i += 1;
            }
        }
    }
}

/// Coherence `⟨σx⟩ + i⟨σy⟩` at each output time, starting from |+x⟩.
pub fn evolve_spin(trace: &NoiseTrace, w: f64, protocol: Protocol, times: &[f64]) -> Result<Vec<C64>> {
    if !w.is_finite() {
        return Err(Error::param("w", "must be finite"));
    }
    if times.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::param("times", "must be non-decreasing"));
    }
    if times.first().is_some_and(|t| *t < 0.0) || times.last().is_some_and(|t| *t > trace.duration() * (1.0 + 1e-12)) {
        return Err(Error::param("times", format!("must lie in [0, {}]", trace.duration())));
    }
    Ok(match protocol {
        Protocol::Free | Protocol::Rabi => {
            let mut psi = plus_x();
            let mut t = 0.0;
            times
                .iter()
                .map(|&tj| {
                    propagate(&mut psi, trace, w, t, tj);
                    t = tj;
                    coherence(&psi)
                })
                .collect()
        }
        Protocol::Echo if w == 0.0 => echo_undriven(trace, times),
        Protocol::Echo => times
            .iter()
            .map(|&tj| {
                let mut psi = plus_x();
                propagate(&mut psi, trace, w, 0.0, 0.5 * tj);
                pi_x(&mut psi);
                propagate(&mut psi, trace, w, 0.5 * tj, tj);
                coherence(&psi)
            })
            .collect(),
    })
}

/// ∫₀ᵗ δz, for a trace evaluated at arbitrary t.
fn integral_to(trace: &NoiseTrace, cumulative: &[f64], t: f64) -> f64 {
    match &trace.segments {
        Some(seg) => {
            let k = seg.partition_point(|s| s.start <= t).saturating_sub(1);
            cumulative[k] + seg[k].value * (t - seg[k].start)
        }
        None => {
            let last = trace.samples.len() - 1;
            let i = ((t / trace.dt).floor() as usize).min(last);
            cumulative[i] + trace.samples[i] * (t - i as f64 * trace.dt)
        }
    }
}

/// Without drive the echo only accrues the phase `2(∫_{t/2}^{t} − ∫_0^{t/2}) δz`.
fn echo_undriven(trace: &NoiseTrace, times: &[f64]) -> Vec<C64> {
    echo_phases_undriven(trace, times)
        .into_iter()
        .map(|phi| C64::from_polar(1.0, phi))
        .collect()
}

/// Unwrapped undriven echo phase at each output time.
pub(crate) fn echo_phases_undriven(trace: &NoiseTrace, times: &[f64]) -> Vec<f64> {
    let cumulative: Vec<f64> = match &trace.segments {
        Some(seg) => {
            let mut acc = vec![0.0; seg.len()];
            for k in 1..seg.len() {
                acc[k] = acc[k - 1] + seg[k - 1].value * (seg[k].start - seg[k - 1].start);
            }
            acc
        }
        None => {
            let mut acc = vec![0.0; trace.samples.len()];
            for i in 1..acc.len() {
                acc[i] = acc[i - 1] + trace.samples[i - 1] * trace.dt;
            }
            acc
        }
    };
    times
        .iter()
        .map(|&t| {
            let half = integral_to(trace, &cumulative, 0.5 * t);
            let full = integral_to(trace, &cumulative, t);
            2.0 * (full - 2.0 * half)
        })
        .collect()
}
