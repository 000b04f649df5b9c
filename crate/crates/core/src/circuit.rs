//! Transmon spectrum, derived couplings, quasiparticle matrix elements and
//! drive-frequency planning.
//!
//! Energies here carry whatever unit the caller uses consistently (GHz in the
//! planner, arbitrary for the transmon), since every result is a ratio.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_CUTOFF: usize = 20;
const CONVERGENCE_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonParams {
    pub ej: f64,
    pub ec: f64,
    pub ng: f64,
    /// Charge states −n_cutoff..=n_cutoff.
    pub n_cutoff: usize,
}

impl TransmonParams {
    pub fn new(ej_over_ec: f64) -> Self {
        Self {
            ej: ej_over_ec,
            ec: 1.0,
            ng: 0.0,
            n_cutoff: 30,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ej > 0.0 && self.ec > 0.0 && self.ej.is_finite() && self.ec.is_finite()) {
            return Err(Error::param("ej/ec", "must be finite and > 0"));
        }
        if !self.ng.is_finite() {
            return Err(Error::param("ng", "must be finite"));
        }
        if self.n_cutoff < MIN_CUTOFF {
            return Err(Error::param("n_cutoff", format!("must be >= {MIN_CUTOFF}")));
        }
        Ok(())
    }
}

/// Charge-basis eigenvectors, columns ordered by energy; row `i` is charge
/// `i − n_cutoff`.
struct Eigen {
    energies: Vec<f64>,
    vectors: Mat<f64>,
}

fn diagonalize(ej: f64, ec: f64, ng: f64, n_cutoff: usize) -> Result<Eigen> {
    let dim = 2 * n_cutoff + 1;
    let h = Mat::<f64>::from_fn(dim, dim, |i, j| {
        if i == j {
            let n = i as f64 - n_cutoff as f64;
            4.0 * ec * (n - ng) * (n - ng)
        } else if i.abs_diff(j) == 1 {
            -0.5 * ej
        } else {
            0.0
        }
    });
    let evd = h.self_adjoint_eigen(faer::Side::Lower).map_err(|_| Error::EigenSolver)?;
    let energies = (0..dim).map(|i| evd.S().column_vector()[i]).collect();
    Ok(Eigen {
        energies,
        vectors: evd.U().to_owned(),
    })
}

/// `⟨a|(T + T†)/2|b⟩` and `⟨a|(T − T†)/2i|b⟩ / i` for the unit charge shift T.
fn shift_elements(v: &Mat<f64>, a: usize, b: usize) -> (f64, f64) {
    let dim = v.nrows();
    let (mut up, mut down) = (0.0, 0.0);
    for n in 0..dim - 1 {
        // T|n+1⟩ = |n⟩ ; T†|n⟩ = |n+1⟩
        up += v[(n, a)] * v[(n + 1, b)];
        down += v[(n + 1, a)] * v[(n, b)];
    }
    (0.5 * (up + down), 0.5 * (up - down))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransmonSpectrum {
    pub params: TransmonParams,
    /// Lowest four levels.
    pub energies: Vec<f64>,
    pub c00: f64,
    pub c11: f64,
    pub c22: f64,
    pub c02: f64,
    /// Vanishes by parity at ng = 0.
    pub c01: f64,
    /// `⟨i|sin φ|j⟩ = i·s_ij`; the stored value is `s_ij`.
    pub s01: f64,
    pub s12: f64,
}

impl TransmonSpectrum {
    pub fn transition(&self, i: usize, j: usize) -> f64 {
        self.energies[j] - self.energies[i]
    }

    pub fn anharmonicity(&self) -> f64 {
        self.transition(0, 1) - self.transition(1, 2)
    }
}

pub fn diagonalize_transmon(p: &TransmonParams) -> Result<TransmonSpectrum> {
    p.validate()?;
    let e = diagonalize(p.ej, p.ec, p.ng, p.n_cutoff)?;
    let check = diagonalize(p.ej, p.ec, p.ng, 2 * p.n_cutoff)?;
    let scale = p.ec.max(e.energies[..4].iter().fold(0.0f64, |m, x| m.max(x.abs())));
    for k in 0..4 {
        if (e.energies[k] - check.energies[k]).abs() > CONVERGENCE_TOL * scale {
            return Err(Error::Convergence(p.n_cutoff));
        }
    }
    let v = &e.vectors;
    let c = |a, b| shift_elements(v, a, b).0;
    let s = |a, b| shift_elements(v, a, b).1;
    Ok(TransmonSpectrum {
        params: *p,
        energies: e.energies[..4].to_vec(),
        c00: c(0, 0),
        c11: c(1, 1),
        c22: c(2, 2),
        c02: c(0, 2),
        c01: c(0, 1),
        s01: s(0, 1),
        s12: s(1, 2),
    })
}

/// Asymptotic charge dispersion of level `m`, `ε_m ≈ (−1)^m EC 2^{4m+5}/m! ·
/// √(2/π) (EJ/2EC)^{m/2+3/4} e^{−√(8EJ/EC)}`, the signed shift
/// `E_m(ng = ½) − E_m(0)`.
pub fn charge_dispersion_estimate(ej_over_ec: f64, ec: f64, m: u32) -> f64 {
    let fact: f64 = (1..=m).map(f64::from).product();
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    sign * ec * 2f64.powi(4 * m as i32 + 5) / fact
        * (2.0 / std::f64::consts::PI).sqrt()
        * (0.5 * ej_over_ec).powf(0.5 * m as f64 + 0.75)
        * (-(8.0 * ej_over_ec).sqrt()).exp()
}

/// `W = −E_Ji α³ |C02|² / 4`, split into magnitude and sign.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveCoupling {
    pub magnitude: f64,
    pub sign: f64,
}

impl DriveCoupling {
    pub fn signed(&self) -> f64 {
        self.sign * self.magnitude
    }
}

pub fn w_from_drive(eji: f64, alpha: f64, c02: f64) -> Result<DriveCoupling> {
    if !(eji > 0.0) {
        return Err(Error::param("eji", "must be > 0"));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param("alpha", "perturbative drive needs 0 <= alpha < 1"));
    }
    Ok(DriveCoupling {
        magnitude: eji * alpha.powi(3) * c02 * c02 / 4.0,
        sign: -1.0,
    })
}

/// Drive amplitude giving `|W| = w`.
pub fn alpha_for_w(w: f64, eji: f64, c02: f64) -> Result<f64> {
    if !(w >= 0.0 && eji > 0.0 && c02 != 0.0) {
        return Err(Error::param("w/eji/c02", "need w >= 0, eji > 0, c02 != 0"));
    }
    let alpha = (4.0 * w / (eji * c02 * c02)).cbrt();
    if alpha >= 1.0 {
        return Err(Error::Infeasible(format!(
            "|W| = {w} needs alpha = {alpha:.3} >= 1"
        )));
    }
    Ok(alpha)
}

/// Half-angle elements `⟨i'|cos(φ/2)|j⟩`, where primed levels belong to the
/// sector with one extra electron (offset ng − ½). A half-charge shift maps
/// charge n to n ± ½, which is exact in the charge basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfAngleElements {
    pub c00: f64,
    pub c22: f64,
    pub c02: f64,
}

pub fn half_angle_cos_elements(p: &TransmonParams) -> Result<HalfAngleElements> {
    p.validate()?;
    let a = diagonalize(p.ej, p.ec, p.ng, p.n_cutoff)?;
    let b = diagonalize(p.ej, p.ec, p.ng - 0.5, p.n_cutoff)?;
    let dim = 2 * p.n_cutoff + 1;
    // e^{iφ/2}|n⟩ = |n⟩', e^{−iφ/2}|n⟩ = |n−1⟩'
    let elem = |i: usize, j: usize| -> f64 {
        let mut acc = 0.0;
        for n in 0..dim {
            acc += b.vectors[(n, i)] * a.vectors[(n, j)];
            if n + 1 < dim {
                acc += b.vectors[(n, i)] * a.vectors[(n + 1, j)];
            }
        }
        0.5 * acc
    };
    // eigenvector signs are arbitrary; fix them so diagonal overlaps are positive
    Ok(HalfAngleElements {
        c00: elem(0, 0).abs(),
        c22: elem(2, 2).abs(),
        c02: elem(0, 2).abs(),
    })
}

/// Same elements from wavefunctions on a 4π-periodic phase grid.
pub fn half_angle_cos_elements_grid(p: &TransmonParams, points: usize) -> Result<HalfAngleElements> {
    use num_complex::Complex64 as C64;
    use std::f64::consts::PI;
    p.validate()?;
    if points < 2048 {
        return Err(Error::param("points", "phase grid needs at least 2048 points"));
    }
    let a = diagonalize(p.ej, p.ec, p.ng, p.n_cutoff)?;
    let b = diagonalize(p.ej, p.ec, p.ng - 0.5, p.n_cutoff)?;
    let dim = 2 * p.n_cutoff + 1;
    let wave = |v: &Mat<f64>, k: usize, offset: f64, phi: f64| -> C64 {
        (0..dim)
            .map(|i| v[(i, k)] * C64::from_polar(1.0, (i as f64 - p.n_cutoff as f64 + offset) * phi))
            .sum()
    };
    let h = 4.0 * PI / points as f64;
    let grid: Vec<f64> = (0..points).map(|i| -2.0 * PI + i as f64 * h).collect();
    let psi: Vec<[C64; 3]> = grid
        .iter()
        .map(|&phi| [wave(&a.vectors, 0, 0.0, phi), C64::default(), wave(&a.vectors, 2, 0.0, phi)])
        .collect();
    // primed charges are n + ½ after relabelling n' = n
    let chi: Vec<[C64; 3]> = grid
        .iter()
        .map(|&phi| [wave(&b.vectors, 0, 0.5, phi), C64::default(), wave(&b.vectors, 2, 0.5, phi)])
        .collect();
    let elem = |i: usize, j: usize| -> f64 {
        let s: C64 = grid
            .iter()
            .enumerate()
            .map(|(g, &phi)| chi[g][i].conj() * (0.5 * phi).cos() * psi[g][j])
            .sum();
        (s * h / (4.0 * PI)).norm()
    };
    Ok(HalfAngleElements {
        c00: elem(0, 0),
        c22: elem(2, 2),
        c02: elem(0, 2),
    })
}

/// Squared matrix elements of the `a_l Z̃_r` and `a_l a_r a_r` parts of
/// `sin((φ_l − φ_r)/2)`, relative to its plain `a_l` part.
///
/// Both multi-qubit parts share the `sin(φ_l/2)` loss factor with the plain
/// loss, so only the r-side `cos(φ_r/2)` restricted to {|0⟩, |2⟩} matters: its
/// identity part `(C00 + C22)/2`, its Z̃ part `(C22 − C00)/2` and its 2→0
/// part `C02`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpRatios {
    pub loss_dephase: f64,
    pub triple_loss: f64,
}

pub fn qp_ratios_from(h: &HalfAngleElements) -> QpRatios {
    let ident = 0.5 * (h.c00 + h.c22);
    QpRatios {
        loss_dephase: (0.5 * (h.c22 - h.c00) / ident).powi(2),
        triple_loss: (h.c02 / ident).powi(2),
    }
}

pub fn qp_matrix_ratios(p: &TransmonParams) -> Result<QpRatios> {
    if p.ej / p.ec < 20.0 {
        return Err(Error::param("ej/ec", "quasiparticle ratios need EJ/EC >= 20"));
    }
    Ok(qp_ratios_from(&half_angle_cos_elements(p)?))
}

/// Ratios for a loss on `l` (multi-qubit parts set by `r`) and for a loss on
/// `r` (set by `l`).
pub fn qp_matrix_ratios_pair(l: &TransmonParams, r: &TransmonParams) -> Result<(QpRatios, QpRatios)> {
    Ok((qp_matrix_ratios(r)?, qp_matrix_ratios(l)?))
}

pub const COLLISION_WARNING_GHZ: f64 = 0.5;
pub const COLLISION_PASS_GHZ: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub product: String,
    pub frequency: f64,
    pub nearest_transition: String,
    pub detuning: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanStatus {
    Ok,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivePlan {
    /// (GHz, relative amplitude).
    pub tones: Vec<(f64, f64)>,
    /// `2(ω_l + ω_r − δ)` and `2|ω_l − ω_r|`.
    pub targets: [f64; 2],
    pub min_detuning: f64,
    pub collision_report: Vec<Collision>,
    pub status: PlanStatus,
}

/// Two tones whose third-order products hit both targets:
/// `2f1 + f2 = 2(ω_l + ω_r − δ)` and `2f2 − f1 = 2|ω_l − ω_r|`.
pub fn plan_w_drive(omega_l: f64, omega_r: f64, delta: f64) -> Result<DrivePlan> {
    plan_w_drive_with(omega_l, omega_r, delta, COLLISION_WARNING_GHZ)
}

pub fn plan_w_drive_with(omega_l: f64, omega_r: f64, delta: f64, warn_below: f64) -> Result<DrivePlan> {
    if !(omega_l > 0.0 && omega_r > 0.0 && delta > 0.0) {
        return Err(Error::param("omega/delta", "frequencies and delta must be > 0"));
    }
    if (omega_l - omega_r).abs() < 1.0 {
        return Err(Error::param("omega_l/omega_r", "qubit frequencies must differ by >= 1 GHz"));
    }
    let sum = 2.0 * (omega_l + omega_r - delta);
    let diff = 2.0 * (omega_l - omega_r).abs();
    let f1 = (2.0 * sum - diff) / 5.0;
    let f2 = (sum + 2.0 * diff) / 5.0;
    if !(f1 > 0.0 && f2 > 0.0) {
        return Err(Error::Infeasible(format!("tones ({f1:.4}, {f2:.4}) GHz not both positive")));
    }
    let transitions = [
        ("2|w_l-w_r|", diff),
        ("2(w_l+w_r-delta)", sum),
        ("w_l", omega_l),
        ("w_r", omega_r),
        ("w_l-delta", omega_l - delta),
        ("w_r-delta", omega_r - delta),
        ("2w_l-delta", 2.0 * omega_l - delta),
        ("2w_r-delta", 2.0 * omega_r - delta),
    ];
    let mut report = Vec::new();
    for n1 in -3i32..=3 {
        for n2 in -3i32..=3 {
            let order = n1.abs() + n2.abs();
            // keep one of each ± pair, with positive frequency
            if order == 0 || order > 3 || (n1, n2) == (2, 1) || (n1, n2) == (-1, 2) {
                continue;
            }
            let f = n1 as f64 * f1 + n2 as f64 * f2;
            if f <= 0.0 {
                continue;
            }
            let (name, nearest) = transitions
                .iter()
                .min_by(|a, b| (a.1 - f).abs().total_cmp(&(b.1 - f).abs()))
                .copied()
                .expect("transition list is non-empty");
            report.push(Collision {
                product: format!("{n1}*f1{n2:+}*f2"),
                frequency: f,
                nearest_transition: name.to_string(),
                detuning: (f - nearest).abs(),
            });
        }
    }
    let min_detuning = report.iter().map(|c| c.detuning).fold(f64::INFINITY, f64::min);
    let status = if min_detuning < warn_below {
        log::warn!("drive plan: an unwanted product lies {min_detuning:.3} GHz from a transition");
        PlanStatus::Warning
    } else {
        PlanStatus::Ok
    };
    Ok(DrivePlan {
        tones: vec![(f1, 1.0), (f2, 1.0)],
        targets: [sum, diff],
        min_detuning,
        collision_report: report,
        status,
    })
}

/// Shadow-coupling drive frequency `ω_k + ω_Sk − W − δ`.
pub fn shadow_drive_freq(omega_k: f64, omega_sk: f64, w: f64, delta: f64) -> Result<f64> {
    if !(omega_k > 0.0 && omega_sk > 0.0 && w >= 0.0 && delta >= 0.0) {
        return Err(Error::param("frequencies", "must be positive (W, delta may be zero)"));
    }
    Ok(omega_k + omega_sk - w - delta)
}
