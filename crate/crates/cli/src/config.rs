use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shadowqec::dephasing::ShiftConvention;
use shadowqec::model::DeviceParams;

use crate::{CliError, CliResult};

/// How angular frequencies (W, δ, Ω, Δω_10) are written in the config.
/// Decay and switching rates are always plain 1/µs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Units {
    /// `35` means 2π × 35 MHz = 2π × 35 rad/µs.
    #[default]
    #[value(name = "mhz-2pi")]
    #[serde(rename = "mhz_2pi")]
    Mhz2Pi,
    #[value(name = "rad-per-us")]
    RadPerUs,
}

impl Units {
    pub fn to_internal(self, v: f64) -> f64 {
        match self {
            Units::Mhz2Pi => 2.0 * PI * v,
            Units::RadPerUs => v,
        }
    }

    pub fn from_internal(self, v: f64) -> f64 {
        match self {
            Units::Mhz2Pi => v / (2.0 * PI),
            Units::RadPerUs => v,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Spectral,
    #[value(name = "timedomain")]
    #[serde(rename = "timedomain")]
    TimeDomain,
    Both,
}

impl Method {
    pub fn names(self) -> &'static [&'static str] {
        use shadowqec::lifetimes::{SPECTRAL, TIME_DOMAIN};
        match self {
            Method::Spectral => &[SPECTRAL],
            Method::TimeDomain => &[TIME_DOMAIN],
            Method::Both => &[SPECTRAL, TIME_DOMAIN],
        }
    }
}

/// Device parameters with angular frequencies in config units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceInput {
    pub w: f64,
    pub delta: f64,
    pub omega: f64,
    pub gamma_s: f64,
    pub gamma_up: f64,
    pub n_shadow: usize,
}

impl Default for DeviceInput {
    fn default() -> Self {
        Self {
            w: 35.0,
            delta: 350.0,
            omega: 5.0,
            gamma_s: 50.0,
            gamma_up: 0.0,
            n_shadow: 1,
        }
    }
}

impl DeviceInput {
    pub fn resolve(&self, units: Units, t1p_us: f64) -> CliResult<DeviceParams> {
        if !(t1p_us > 0.0) {
            return Err(CliError::Validation(format!("t1p_us must be > 0, got {t1p_us}")));
        }
        let p = DeviceParams {
            w: units.to_internal(self.w),
            delta: units.to_internal(self.delta),
            omega: units.to_internal(self.omega),
            gamma_p: 1.0 / t1p_us,
            gamma_s: self.gamma_s,
            gamma_up: self.gamma_up,
            n_shadow: self.n_shadow,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LifetimesConfig {
    pub device: DeviceInput,
    pub t1p_us: Vec<f64>,
    pub method: Method,
    pub rtol: f64,
    pub samples: usize,
    pub horizon_factor: f64,
    pub max_horizon_us: f64,
}

impl Default for LifetimesConfig {
    fn default() -> Self {
        Self {
            device: DeviceInput::default(),
            t1p_us: vec![0.1, 0.2, 0.3, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 30.0, 50.0, 100.0],
            method: Method::Spectral,
            rtol: 1e-7,
            samples: 301,
            horizon_factor: 1.5,
            max_horizon_us: 2000.0,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    #[value(name = "one_over_f")]
    OneOverF,
    Telegraph,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OneOverFConfig {
    /// Drive strengths of the averaged curves.
    pub w: Vec<f64>,
    /// Single-qubit echo time S0 is calibrated to.
    pub t2_echo_us: f64,
    pub n_traces: usize,
    pub calibration_traces: usize,
    pub n_components: usize,
    pub horizon_factor: f64,
    pub n_out: usize,
    /// Device projection: single-qubit echo time and drive.
    pub device_t2_echo_us: f64,
    pub device_w: f64,
}

impl Default for OneOverFConfig {
    fn default() -> Self {
        Self {
            w: vec![0.0, 1.0, 2.0, 3.0, 4.0],
            t2_echo_us: 1.0,
            n_traces: 200,
            calibration_traces: 1000,
            n_components: 150,
            horizon_factor: 2.5,
            n_out: 100,
            device_t2_echo_us: 10.0,
            device_w: 35.0,
        }
    }
}

/// A published telegraph lifetime to compare the fitted law against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Endpoint {
    pub w: f64,
    pub delta_omega10: f64,
    /// As printed; evaluated both as 1/µs and as 2π × value.
    pub gamma_sw: f64,
    pub reported_us: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TelegraphConfig {
    /// Axes in config units (Γ_sw in 1/µs); empty axes fall back to the
    /// reference box with `grid_points` values each.
    pub w: Vec<f64>,
    pub delta_omega10: Vec<f64>,
    pub gamma_sw: Vec<f64>,
    pub grid_points: usize,
    pub n_traces: usize,
    pub convention: ShiftConvention,
    pub horizon_factor: f64,
    pub n_out: usize,
    pub endpoints: Vec<Endpoint>,
}

impl Default for TelegraphConfig {
    fn default() -> Self {
        Self {
            w: Vec::new(),
            delta_omega10: Vec::new(),
            gamma_sw: Vec::new(),
            grid_points: 4,
            n_traces: 200,
            convention: ShiftConvention::Full,
            horizon_factor: 1.5,
            n_out: 120,
            endpoints: vec![
                Endpoint {
                    w: 35.0,
                    delta_omega10: 0.2,
                    gamma_sw: 4.96,
                    reported_us: 6000.0,
                },
                Endpoint {
                    w: 25.0,
                    delta_omega10: 0.48,
                    gamma_sw: 11.9,
                    reported_us: 200.0,
                },
            ],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DephasingConfig {
    pub noise: NoiseKind,
    pub one_over_f: OneOverFConfig,
    pub telegraph: TelegraphConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RatesConfig {
    pub device: DeviceInput,
    pub t1p_us: Vec<f64>,
}

impl Default for RatesConfig {
    fn default() -> Self {
        Self {
            device: DeviceInput::default(),
            t1p_us: vec![1.0, 3.0, 10.0, 30.0, 100.0],
        }
    }
}

/// Planner inputs in GHz (not affected by `units`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlanConfig {
    pub omega_l: f64,
    pub omega_r: f64,
    pub delta: f64,
    pub warn_below: f64,
    pub omega_k: f64,
    pub omega_sk: f64,
    pub w: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        Self {
            omega_l: 6.5,
            omega_r: 4.5,
            delta: 0.35,
            warn_below: shadowqec::circuit::COLLISION_WARNING_GHZ,
            omega_k: 4.5,
            omega_sk: 6.0,
            w: 0.035,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransmonConfig {
    pub ej_over_ec: f64,
    pub ng: f64,
    pub n_cutoff: usize,
    /// Junction energy of the coupler and target |W| (GHz) for the α solve.
    pub eji_ghz: f64,
    pub w_ghz: f64,
    pub grid_points: usize,
}

impl Default for TransmonConfig {
    fn default() -> Self {
        Self {
            ej_over_ec: 50.0,
            ng: 0.0,
            n_cutoff: 30,
            eji_ghz: 15.0,
            w_ghz: 0.035,
            grid_points: 4096,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub units: Units,
    pub seed: u64,
    pub lifetimes: LifetimesConfig,
    pub dephasing: DephasingConfig,
    pub rates: RatesConfig,
    pub plan: PlanConfig,
    pub transmon: TransmonConfig,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        // serde_json's Value keeps object keys sorted, which fixes key order
        serde_json::to_value(self).expect("config serialises").to_string()
    }
}

pub(crate) fn non_empty<T>(v: &[T], field: &str) -> CliResult<()> {
    if v.is_empty() {
        Err(CliError::Validation(format!("{field}: grid is empty")))
    } else {
        Ok(())
    }
}
