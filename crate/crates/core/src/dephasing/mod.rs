//! Dephasing of a driven qubit by classical frequency noise.

mod ensemble;
mod noise;
mod spin;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ensemble::{
    calibrate_s0_to_echo, echo_s0_analytic, ensemble_average, one_over_f_rabi_t2, rabi_t2_prediction, telegraph_golden_rule_t2,
    telegraph_rabi_t2, telegraph_sweep, trace_rng, CalibrationSettings, EchoCalibration, EnsembleResult,
    EnsembleSettings, RabiPoint, RabiSettings, TelegraphGrid, TelegraphPoint, TelegraphSweep, TelegraphSweepSettings, FIT_FLOOR,
    MIN_CALIBRATION_TRACES, MIN_TRACES,
};
pub use noise::{
    gen_one_over_f, gen_telegraph, NoiseTrace, OneOverFParams, Segment, ShiftConvention, TelegraphParams,
    MIN_COMPONENTS,
};
pub use spin::{evolve_spin, Protocol};

use crate::error::{Error, Result};
use crate::registry::Registry;

/// A stochastic δz(t) process.
pub trait NoiseSource: Send + Sync {
    fn name(&self) -> &'static str;
    fn trace(&self, t_max: f64, dt: f64, rng: &mut ChaCha8Rng) -> Result<NoiseTrace>;
}

impl NoiseSource for TelegraphParams {
    fn name(&self) -> &'static str {
        "telegraph"
    }

    /// Only the switching record is kept; `dt` is checked but the propagator
    /// follows the switches exactly.
    fn trace(&self, t_max: f64, dt: f64, rng: &mut ChaCha8Rng) -> Result<NoiseTrace> {
        self.validate()?;
        if !(dt > 0.0) || dt > 0.1 / self.gamma_sw {
            return Err(Error::Resolution {
                dt,
                gamma: self.gamma_sw,
            });
        }
        NoiseTrace::from_segments(t_max, self.switching_record(t_max, rng))
    }
}

impl NoiseSource for OneOverFParams {
    fn name(&self) -> &'static str {
        "one_over_f"
    }

    fn trace(&self, t_max: f64, dt: f64, rng: &mut ChaCha8Rng) -> Result<NoiseTrace> {
        noise::one_over_f_trace(self, t_max, dt, rng)
    }
}

/// Flat, serialisable description of a noise source; each kind reads the
/// fields it needs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub kind: String,
    pub delta_omega10: Option<f64>,
    pub gamma_sw: Option<f64>,
    #[serde(default)]
    pub convention: ShiftConvention,
    pub s0: Option<f64>,
    pub f_min: Option<f64>,
    pub f_max: Option<f64>,
    pub n_components: Option<usize>,
}

fn required(v: Option<f64>, field: &'static str) -> Result<f64> {
    v.ok_or_else(|| Error::param(field, "required for this noise kind"))
}

pub trait NoiseBuilder: Send + Sync {
    fn build(&self, cfg: &NoiseConfig) -> Result<Box<dyn NoiseSource>>;
}

struct TelegraphBuilder;
impl NoiseBuilder for TelegraphBuilder {
    fn build(&self, cfg: &NoiseConfig) -> Result<Box<dyn NoiseSource>> {
        let p = TelegraphParams {
            delta_omega10: required(cfg.delta_omega10, "delta_omega10")?,
            gamma_sw: required(cfg.gamma_sw, "gamma_sw")?,
            convention: cfg.convention,
        };
        p.validate()?;
        Ok(Box::new(p))
    }
}

struct OneOverFBuilder;
impl NoiseBuilder for OneOverFBuilder {
    fn build(&self, cfg: &NoiseConfig) -> Result<Box<dyn NoiseSource>> {
        let p = OneOverFParams {
            s0: required(cfg.s0, "s0")?,
            f_min: required(cfg.f_min, "f_min")?,
            f_max: required(cfg.f_max, "f_max")?,
            n_components: cfg.n_components.unwrap_or(200),
        };
        p.validate()?;
        Ok(Box::new(p))
    }
}

pub fn noise_registry() -> Registry<dyn NoiseBuilder> {
    let mut r: Registry<dyn NoiseBuilder> = Registry::new();
    r.register("telegraph", Arc::new(TelegraphBuilder));
    r.register("one_over_f", Arc::new(OneOverFBuilder));
    r
}

pub fn build_noise(cfg: &NoiseConfig) -> Result<Box<dyn NoiseSource>> {
    noise_registry().get(&cfg.kind)?.build(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_builds_both_kinds() {
        let t = build_noise(&NoiseConfig {
            kind: "telegraph".into(),
            delta_omega10: Some(1.0),
            gamma_sw: Some(2.0),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(t.name(), "telegraph");
        let f = build_noise(&NoiseConfig {
            kind: "one_over_f".into(),
            s0: Some(0.1),
            f_min: Some(0.01),
            f_max: Some(10.0),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(f.name(), "one_over_f");
        let missing = build_noise(&NoiseConfig {
            kind: "telegraph".into(),
            ..Default::default()
        });
        assert!(missing.err().is_some_and(|e| e.is_validation()));
        assert!(matches!(
            build_noise(&NoiseConfig {
                kind: "pink".into(),
                ..Default::default()
            }),
            Err(Error::UnknownStrategy { .. })
        ));
    }

    #[test]
    fn telegraph_source_checks_resolution() {
        let p = TelegraphParams::new(1.0, 5.0);
        let mut rng = trace_rng(0, 0);
        assert!(matches!(p.trace(1.0, 0.05, &mut rng), Err(Error::Resolution { .. })));
        assert!(p.trace(1.0, 0.02, &mut rng).is_ok());
    }
}
