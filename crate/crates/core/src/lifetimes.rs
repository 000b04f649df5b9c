//! Logical lifetimes of the protected qubit and the repair-channel
//! experiments.
//!
//! T1L is the decay of `⟨P_L0⟩` from `|L0⟩`; T2L is the decay of `⟨Z̃_lZ̃_r⟩`
//! from `(L0 + L1)/√2`. Two interchangeable extractors are registered:
//! `spectral` (Liouvillian eigenmodes) and `timedomain` (integrate and fit).

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fitting::{fit_exponential, DecayFit, Floor};
use crate::lindblad::{
    build_liouvillian, evolve, EvolveOptions, IntegrityReport, ModeWeight, SpectralDecomposition,
};
use crate::model::{Circuit, DeviceParams, MODE_L};
use crate::qalgebra::{ComplexMatrix, Ket, C64};
use crate::rates::{gamma_r_resonant, predict_lifetimes};
use crate::registry::Registry;

pub const SPECTRAL: &str = "spectral";
pub const TIME_DOMAIN: &str = "timedomain";

/// Largest superoperator size the spectral path will diagonalize.
pub const MAX_SPECTRAL_SUPERDIM: usize = 4096;

#[derive(Clone, Debug)]
pub struct ExtractionSettings {
    pub rtol: f64,
    /// Samples earlier than this are dropped from fits; `None` means 3/Ω.
    pub transient_cut: Option<f64>,
    /// Fit window length in units of the expected lifetime.
    pub horizon_factor: f64,
    pub samples: usize,
    /// Time-domain runs longer than this (µs) are refused.
    pub max_horizon: f64,
}

impl Default for ExtractionSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-7,
            transient_cut: None,
            horizon_factor: 1.5,
            samples: 301,
            max_horizon: 2000.0,
        }
    }
}

impl ExtractionSettings {
    pub fn cut(&self, params: &DeviceParams) -> f64 {
        match self.transient_cut {
            Some(c) => c,
            None if params.omega > 0.0 => 3.0 / params.omega,
            None => 0.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayEstimate {
    pub lifetime: f64,
    pub floor: f64,
    /// RMS deviation of the signal from a single exponential on the window.
    pub residual: f64,
    /// Lifetime of the eigenmode carrying most of the signal (spectral only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominant_mode_lifetime: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LifetimeEstimate {
    pub method: String,
    pub t1: DecayEstimate,
    pub t2: DecayEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integrity: Option<IntegrityReport>,
}

impl LifetimeEstimate {
    pub fn t1l(&self) -> f64 {
        self.t1.lifetime
    }

    pub fn t2l(&self) -> f64 {
        self.t2.lifetime
    }

    pub fn fit_residual(&self) -> f64 {
        self.t1.residual.max(self.t2.residual)
    }
}

/// Initial state and observable of one decay measurement.
pub struct Probe {
    pub rho0: ComplexMatrix,
    pub observable: ComplexMatrix,
}

pub fn t1_probe(c: &Circuit) -> Probe {
    Probe {
        rho0: c.basis.l0.density(),
        observable: c.logical_projector(),
    }
}

pub fn t2_probe(c: &Circuit) -> Probe {
    Probe {
        rho0: c.zz_eigenstate(1.0).density(),
        observable: c.zz_tilde(),
    }
}

pub trait LifetimeExtractor: Send + Sync {
    fn name(&self) -> &'static str;
    fn extract(&self, circuit: &Circuit, settings: &ExtractionSettings) -> Result<LifetimeEstimate>;
}

pub fn extractor_registry() -> Registry<dyn LifetimeExtractor> {
    let mut r: Registry<dyn LifetimeExtractor> = Registry::new();
    r.register(SPECTRAL, Arc::new(SpectralExtractor));
    r.register(TIME_DOMAIN, Arc::new(TimeDomainExtractor));
    r
}

/// Spectral when the superoperator is small enough, time-domain otherwise.
pub fn default_method(params: &DeviceParams) -> &'static str {
    let d = crate::model::build_space(params).total_dim();
    if d * d <= MAX_SPECTRAL_SUPERDIM {
        SPECTRAL
    } else {
        TIME_DOMAIN
    }
}

fn uniform_grid(horizon: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2) - 1;
    (0..=n).map(|i| horizon * i as f64 / n as f64).collect()
}

pub struct SpectralExtractor;

/// Fit windows `(T1 run, T2 run)` shared by both extractors: the cut plus
/// `horizon_factor` closed-form lifetimes.
pub fn fit_horizons(params: &DeviceParams, settings: &ExtractionSettings) -> Result<(f64, f64)> {
    let pred = predict_lifetimes(params)?;
    if !pred.t1l_pred.is_finite() {
        return Err(Error::UndefinedRate("no finite T1L to resolve without photon loss"));
    }
    let cut = settings.cut(params);
    Ok((
        cut + settings.horizon_factor * pred.t1l_pred,
        cut + settings.horizon_factor * pred.t2l_pred,
    ))
}

impl SpectralExtractor {
    /// Reconstruct the signal exactly from the eigenmodes and fit it on the
    /// same window a time-domain run would use.
    fn decay(
        dec: &SpectralDecomposition,
        probe: &Probe,
        horizon: f64,
        cut: f64,
        settings: &ExtractionSettings,
    ) -> Result<DecayEstimate> {
        let weights = dec.mode_weights(&probe.rho0, &probe.observable)?;
        let ss = dec.steady_index();
        // the mode carrying the largest integrated signal
        let dom = weights
            .iter()
            .enumerate()
            .filter(|(i, m)| *i != ss && m.eigenvalue.re < 0.0)
            .max_by(|a, b| {
                let ka = a.1.amplitude.norm() / a.1.eigenvalue.re.abs();
                let kb = b.1.amplitude.norm() / b.1.eigenvalue.re.abs();
                ka.total_cmp(&kb)
            })
            .map(|(_, m)| *m)
            .ok_or(Error::Fit("no decaying mode in the signal".into()))?;
        let times = uniform_grid(horizon, settings.samples);
        let signal = modal_signal(&weights, &times);
        let fit = fit_exponential(&times, &signal, cut, Floor::Free)?;
        Ok(DecayEstimate {
            lifetime: fit.lifetime,
            floor: fit.floor,
            residual: fit.residual_rms,
            dominant_mode_lifetime: Some(-1.0 / dom.eigenvalue.re),
        })
    }
}

/// `t ↦ Σ_k a_k exp(λ_k t)`.
pub fn modal_signal(weights: &[ModeWeight], times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            weights
                .iter()
                .map(|m| m.amplitude * (m.eigenvalue * C64::new(t, 0.0)).exp())
                .sum::<C64>()
                .re
        })
        .collect()
}

impl LifetimeExtractor for SpectralExtractor {
    fn name(&self) -> &'static str {
        SPECTRAL
    }

    fn extract(&self, circuit: &Circuit, settings: &ExtractionSettings) -> Result<LifetimeEstimate> {
        let d = circuit.dim();
        if d * d > MAX_SPECTRAL_SUPERDIM {
            return Err(Error::Capacity {
                dim: d * d,
                max: MAX_SPECTRAL_SUPERDIM,
            });
        }
        let l = build_liouvillian(&circuit.hamiltonian, &circuit.collapse)?;
        let dec = SpectralDecomposition::new(&l)?;
        let cut = settings.cut(&circuit.params);
        let (h1, h2) = fit_horizons(&circuit.params, settings)?;
        Ok(LifetimeEstimate {
            method: SPECTRAL.into(),
            t1: Self::decay(&dec, &t1_probe(circuit), h1, cut, settings)?,
            t2: Self::decay(&dec, &t2_probe(circuit), h2, cut, settings)?,
            integrity: None,
        })
    }
}

pub struct TimeDomainExtractor;

impl TimeDomainExtractor {
    pub fn run(
        circuit: &Circuit,
        probe: &Probe,
        horizon: f64,
        settings: &ExtractionSettings,
    ) -> Result<(DecayFit, IntegrityReport)> {
        if horizon > settings.max_horizon {
            return Err(Error::param(
                "max_horizon",
                format!("time-domain run of {horizon:.1} µs exceeds the limit {:.1} µs", settings.max_horizon),
            ));
        }
        let grid = uniform_grid(horizon, settings.samples);
        let opts = EvolveOptions::with_rtol(settings.rtol).observe("signal", probe.observable.clone());
        let res = evolve(&probe.rho0, &circuit.hamiltonian, &circuit.collapse, &grid, &opts)?;
        let fit = fit_exponential(
            &res.times,
            res.series("signal").expect("observed"),
            settings.cut(&circuit.params),
            Floor::Free,
        )?;
        Ok((fit, res.integrity))
    }
}

fn merge(a: IntegrityReport, b: IntegrityReport) -> IntegrityReport {
    IntegrityReport {
        max_trace_drift: a.max_trace_drift.max(b.max_trace_drift),
        max_hermiticity_defect: a.max_hermiticity_defect.max(b.max_hermiticity_defect),
        min_eigenvalue: a.min_eigenvalue.min(b.min_eigenvalue),
    }
}

impl LifetimeExtractor for TimeDomainExtractor {
    fn name(&self) -> &'static str {
        TIME_DOMAIN
    }

    fn extract(&self, circuit: &Circuit, settings: &ExtractionSettings) -> Result<LifetimeEstimate> {
        let (h1, h2) = fit_horizons(&circuit.params, settings)?;
        let (f1, i1) = Self::run(circuit, &t1_probe(circuit), h1, settings)?;
        let (f2, i2) = Self::run(circuit, &t2_probe(circuit), h2, settings)?;
        let est = |f: DecayFit| DecayEstimate {
            lifetime: f.lifetime,
            floor: f.floor,
            residual: f.residual_rms,
            dominant_mode_lifetime: None,
        };
        Ok(LifetimeEstimate {
            method: TIME_DOMAIN.into(),
            t1: est(f1),
            t2: est(f2),
            integrity: Some(merge(i1, i2)),
        })
    }
}

/// Outcome of a single corrected photon loss.
#[derive(Clone, Debug, Serialize)]
pub struct RepairReport {
    /// Resonant Lorentzian rate Γ_R(−W−δ/2).
    pub gamma_r_pred: f64,
    /// Inverse mean dwell time in the one-photon error manifold.
    pub dwell_rate: f64,
    /// Rate of an exponential fitted to the infidelity envelope, if it fits.
    pub envelope_rate: Option<f64>,
    pub final_fidelity: f64,
    /// `⟨Z̃_lZ̃_r⟩` at the end for the superposition run.
    pub final_zz: f64,
    pub horizon: f64,
    pub integrity: IntegrityReport,
}

fn after_loss(circuit: &Circuit, ket: &Ket) -> Result<ComplexMatrix> {
    let a = circuit.lowering(MODE_L)?;
    Ok(a.apply(ket)?.normalized()?.density())
}

/// Apply `a_l` to `|L0⟩` (and separately to `(L0+L1)/√2`) and let the shadow
/// channel repair it. Meaningful at Γ_P = 0.
pub fn simulate_repair(params: &DeviceParams, settings: &ExtractionSettings) -> Result<RepairReport> {
    let circuit = Circuit::new(params)?;
    let gamma_r_pred = gamma_r_resonant(params)?;
    if gamma_r_pred <= 0.0 {
        return Err(Error::UndefinedRate("repair needs Ω > 0"));
    }
    let horizon = 30.0 / gamma_r_pred;
    let n = 3000;
    let grid = uniform_grid(horizon, n + 1);
    let opts = EvolveOptions::with_rtol(settings.rtol)
        .observe("fidelity", circuit.logical_projector())
        .observe("p1", circuit.one_photon_projector());
    let res = evolve(
        &after_loss(&circuit, &circuit.basis.l0)?,
        &circuit.hamiltonian,
        &circuit.collapse,
        &grid,
        &opts,
    )?;
    let fid = res.series("fidelity").expect("observed");
    let p1 = res.series("p1").expect("observed");
    // trapezoid over the grid plus the exponential tail beyond the horizon
    let dt = horizon / n as f64;
    let mut dwell: f64 = p1.windows(2).map(|w| 0.5 * (w[0] + w[1]) * dt).sum();
    dwell += p1[n] / gamma_r_pred;
    let infid: Vec<f64> = fid.iter().map(|f| 1.0 - f).collect();
    let envelope_rate = fit_exponential(&res.times, &infid, settings.cut(params), Floor::Free)
        .ok()
        .map(|f| f.rate());

    let sup = evolve(
        &after_loss(&circuit, &circuit.zz_eigenstate(1.0))?,
        &circuit.hamiltonian,
        &circuit.collapse,
        &grid,
        &EvolveOptions::with_rtol(settings.rtol).observe("zz", circuit.zz_tilde()),
    )?;
    Ok(RepairReport {
        gamma_r_pred,
        dwell_rate: 1.0 / dwell,
        envelope_rate,
        final_fidelity: fid[n],
        final_zz: *sup.series("zz").expect("observed").last().expect("non-empty"),
        horizon,
        integrity: merge(res.integrity, sup.integrity),
    })
}
