//! Closed-form repair and logical error rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::DeviceParams;

/// Lorentzian repair rate for an error state at energy `ΔE` relative to the
/// code space: `4Ω²Γ_S / (4Ω² + 4(ΔE + W + δ/2)² + Γ_S²)`.
pub fn gamma_r(delta_e: f64, params: &DeviceParams) -> Result<f64> {
    if params.gamma_s <= 0.0 {
        return Err(Error::UndefinedRate("repair rate needs gamma_s > 0"));
    }
    let o2 = 4.0 * params.omega * params.omega;
    let det = delta_e + params.w + 0.5 * params.delta;
    Ok(o2 * params.gamma_s / (o2 + 4.0 * det * det + params.gamma_s * params.gamma_s))
}

pub fn gamma_r_resonant(params: &DeviceParams) -> Result<f64> {
    gamma_r(-params.w - 0.5 * params.delta, params)
}

/// `(Γ_E^X, Γ_E^Y)`: rates of random X̃ and Ỹ logical errors.
pub fn gamma_e(params: &DeviceParams) -> Result<(f64, f64)> {
    let res = gamma_r_resonant(params)?;
    if res <= 0.0 {
        return Err(Error::UndefinedRate("resonant repair rate is zero"));
    }
    let off_up = gamma_r(params.w + 0.5 * params.delta, params)?;
    let off_mid = gamma_r(params.w - 0.5 * params.delta, params)?;
    let gp = params.gamma_p;
    let ey = 2.0 * gp * (2.0 * gp + off_mid) / res;
    Ok((2.0 * off_up + ey, ey))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub gamma_r_resonant: f64,
    pub gamma_ex: f64,
    pub gamma_ey: f64,
    /// µs; infinite when Γ_E^Y vanishes.
    pub t1l_pred: f64,
    pub t2l_pred: f64,
    pub recapture_p: f64,
}

pub fn predict_lifetimes(params: &DeviceParams) -> Result<RatePrediction> {
    params.validate()?;
    let gamma_r_resonant = gamma_r_resonant(params)?;
    let (gamma_ex, gamma_ey) = gamma_e(params)?;
    let inv = |g: f64| if g > 0.0 { 1.0 / g } else { f64::INFINITY };
    Ok(RatePrediction {
        gamma_r_resonant,
        gamma_ex,
        gamma_ey,
        t1l_pred: inv(gamma_ey),
        t2l_pred: inv(gamma_ex),
        recapture_p: gamma_r_resonant / (gamma_r_resonant + 2.0 * params.gamma_p),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DephasingKind {
    OneOverF,
    Telegraph,
}

/// Scaling from a single-qubit, single-photon dephasing lifetime to the
/// two-transmon device.
///
/// `noise_power` multiplies the relevant spectral strength (S0 for 1/f, Δω²
/// for telegraph noise, whose lifetime scales as Δω⁻²) and `channels` counts
/// the independent photons that dephase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceConversion {
    pub noise_power: f64,
    pub channels: f64,
}

impl DeviceConversion {
    pub const IDENTITY: Self = Self {
        noise_power: 1.0,
        channels: 1.0,
    };

    pub fn for_kind(kind: DephasingKind) -> Self {
        match kind {
            // S0 × 4: both transmons' fluctuations add in the Z̃Z̃ splitting
            DephasingKind::OneOverF => Self {
                noise_power: 4.0,
                channels: 2.0,
            },
            // Δω_10 → 2Δω_10
            DephasingKind::Telegraph => Self {
                noise_power: 4.0,
                channels: 2.0,
            },
        }
    }

    pub fn apply(&self, single_qubit_lifetime: f64) -> f64 {
        single_qubit_lifetime / (self.noise_power * self.channels)
    }
}

pub fn dephasing_device_conversion(single_qubit_lifetime: f64, kind: DephasingKind) -> f64 {
    DeviceConversion::for_kind(kind).apply(single_qubit_lifetime)
}
