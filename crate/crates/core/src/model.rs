//! Rotating-frame Hamiltonian, code states and dissipators of the
//! two-transmon circuit with its two lossy shadow resonators.
//!
//! Units: ħ = 1, energies and rates in rad/µs and 1/µs.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qalgebra::{
    annihilation, embed, number, number_projector, xtilde, ztilde, ComplexMatrix, Ket, TensorSpace,
    C64,
};

pub const MODE_L: &str = "l";
pub const MODE_R: &str = "r";
pub const MODE_SL: &str = "Sl";
pub const MODE_SR: &str = "Sr";

/// `2π × f` for `f` in MHz, giving rad/µs.
pub fn mhz_to_rad_per_us(f_mhz: f64) -> f64 {
    2.0 * PI * f_mhz
}

pub fn rad_per_us_to_mhz(w: f64) -> f64 {
    w / (2.0 * PI)
}

fn default_n_shadow() -> usize {
    1
}

/// Rotating-frame circuit parameters (rad/µs, 1/µs).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    /// Two-device coupling W.
    pub w: f64,
    /// Nonlinearity δ (> 0 puts the one-photon states δ/2 above the code space).
    pub delta: f64,
    /// Qubit–shadow coupling Ω.
    pub omega: f64,
    /// Photon loss rate Γ_P = 1/T_1P of each transmon.
    pub gamma_p: f64,
    /// Shadow resonator decay rate Γ_S.
    pub gamma_s: f64,
    /// Incoherent photon addition rate on each transmon.
    #[serde(default)]
    pub gamma_up: f64,
    /// Highest retained shadow occupation (1 or 2).
    #[serde(default = "default_n_shadow")]
    pub n_shadow: usize,
}

impl DeviceParams {
    /// Parameter set used throughout the lifetime checks:
    /// W/2π = 35 MHz, δ/2π = 350 MHz, Ω/2π = 5 MHz, Γ_S = 50/µs.
    pub fn reference(t1p_us: f64) -> Self {
        Self {
            w: mhz_to_rad_per_us(35.0),
            delta: mhz_to_rad_per_us(350.0),
            omega: mhz_to_rad_per_us(5.0),
            gamma_p: if t1p_us.is_finite() { 1.0 / t1p_us } else { 0.0 },
            gamma_s: 50.0,
            gamma_up: 0.0,
            n_shadow: 1,
        }
    }

    pub fn with_gamma_p(&self, gamma_p: f64) -> Self {
        Self {
            gamma_p,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("w", self.w),
            ("delta", self.delta),
            ("omega", self.omega),
            ("gamma_p", self.gamma_p),
            ("gamma_s", self.gamma_s),
            ("gamma_up", self.gamma_up),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !(1..=2).contains(&self.n_shadow) {
            return Err(Error::param(
                "n_shadow",
                format!("must be 1 or 2, got {}", self.n_shadow),
            ));
        }
        Ok(())
    }
}

/// Code states and the four one-photon excited states of the W ≫ Ω limit.
#[derive(Clone, Debug)]
pub struct LogicalBasis {
    pub l0: Ket,
    pub l1: Ket,
    pub e0p: Ket,
    pub e0m: Ket,
    pub e1p: Ket,
    pub e1m: Ket,
}

#[derive(Clone, Debug)]
pub struct Collapse {
    pub op: ComplexMatrix,
    pub rate: f64,
}

pub fn build_space(params: &DeviceParams) -> TensorSpace {
    let s = params.n_shadow + 1;
    TensorSpace::new([(MODE_L, 3), (MODE_R, 3), (MODE_SL, s), (MODE_SR, s)])
        .expect("fixed circuit layout is valid")
}

/// `−W X̃_l X̃_r + (δ/2)(P¹_l + P¹_r)`.
pub fn build_hp(params: &DeviceParams, space: &TensorSpace) -> Result<ComplexMatrix> {
    let xl = embed(&xtilde(), MODE_L, space)?;
    let xr = embed(&xtilde(), MODE_R, space)?;
    let p1 = number_projector(3, 1)?;
    let p1l = embed(&p1, MODE_L, space)?;
    let p1r = embed(&p1, MODE_R, space)?;
    let coupling = (&xl * &xr).scale_real(-params.w);
    let penalty = (&p1l + &p1r).scale_real(params.delta / 2.0);
    Ok(&coupling + &penalty)
}

/// `(W + δ/2)(n_Sl + n_Sr) + Ω(a_l† a_Sl† + a_r† a_Sr† + h.c.)`.
pub fn build_hps_hs(params: &DeviceParams, space: &TensorSpace) -> Result<ComplexMatrix> {
    let ds = space.mode_dim(MODE_SL)?;
    let a3 = annihilation(3)?;
    let as_ = annihilation(ds)?;
    let nsl = embed(&number(ds), MODE_SL, space)?;
    let nsr = embed(&number(ds), MODE_SR, space)?;
    let shadow = (&nsl + &nsr).scale_real(params.w + params.delta / 2.0);

    let al = embed(&a3, MODE_L, space)?;
    let ar = embed(&a3, MODE_R, space)?;
    let asl = embed(&as_, MODE_SL, space)?;
    let asr = embed(&as_, MODE_SR, space)?;
    let pair = &(&al * &asl) + &(&ar * &asr);
    let hop = (&pair + &pair.dagger()).scale_real(params.omega);
    Ok(&shadow + &hop)
}

pub fn build_hamiltonian(params: &DeviceParams, space: &TensorSpace) -> Result<ComplexMatrix> {
    Ok(&build_hp(params, space)? + &build_hps_hs(params, space)?)
}

fn qutrit(c0: f64, c1: f64, c2: f64) -> Ket {
    Ket::from_real(&[c0, c1, c2])
}

fn plus() -> Ket {
    qutrit(FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2)
}

/// `(−|0⟩ + |2⟩)/√2`, the X̃ = −1 doublet state with the sign used for L1.
fn minus() -> Ket {
    qutrit(-FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2)
}

fn shadow_ket(space: &TensorSpace, n: usize) -> Ket {
    let d = space.mode_dims()[2];
    Ket::basis(d, n)
}

pub fn logical_states(space: &TensorSpace) -> Result<(Ket, Ket)> {
    let vac = shadow_ket(space, 0);
    let l0 = space.product_ket(&[plus(), plus(), vac.clone(), vac.clone()])?;
    let l1 = space.product_ket(&[minus(), minus(), vac.clone(), vac])?;
    Ok((l0, l1))
}

pub fn error_states(params: &DeviceParams, space: &TensorSpace) -> Result<LogicalBasis> {
    if params.w < 5.0 * params.omega {
        log::warn!(
            "error states assume W >> Omega, got W = {:.3}, Omega = {:.3}",
            params.w,
            params.omega
        );
    }
    let (l0, l1) = logical_states(space)?;
    let vac = shadow_ket(space, 0);
    let one_s = shadow_ket(space, 1);
    let one = qutrit(0.0, 1.0, 0.0);
    let s = C64::new(FRAC_1_SQRT_2, 0.0);

    let loss0 = space.product_ket(&[one.clone(), plus(), vac.clone(), vac.clone()])?;
    let shad0 = space.product_ket(&[plus(), plus(), one_s.clone(), vac.clone()])?;
    let loss1 = space.product_ket(&[one, minus(), vac.clone(), vac.clone()])?;
    let shad1 = space.product_ket(&[minus(), minus(), one_s, vac])?;

    Ok(LogicalBasis {
        l0,
        l1,
        e0p: (&loss0 + &shad0).scale(s),
        e0m: (&loss0 - &shad0).scale(s),
        e1p: (&loss1 + &shad1).scale(s),
        e1m: (&loss1 - &shad1).scale(s),
    })
}

pub fn collapse_operators(params: &DeviceParams, space: &TensorSpace) -> Result<Vec<Collapse>> {
    let a3 = annihilation(3)?;
    let as_ = annihilation(space.mode_dim(MODE_SL)?)?;
    let mut out = vec![
        Collapse {
            op: embed(&a3, MODE_L, space)?,
            rate: params.gamma_p,
        },
        Collapse {
            op: embed(&a3, MODE_R, space)?,
            rate: params.gamma_p,
        },
        Collapse {
            op: embed(&as_, MODE_SL, space)?,
            rate: params.gamma_s,
        },
        Collapse {
            op: embed(&as_, MODE_SR, space)?,
            rate: params.gamma_s,
        },
    ];
    if params.gamma_up > 0.0 {
        let ad = a3.dagger();
        out.push(Collapse {
            op: embed(&ad, MODE_L, space)?,
            rate: params.gamma_up,
        });
        out.push(Collapse {
            op: embed(&ad, MODE_R, space)?,
            rate: params.gamma_up,
        });
    }
    Ok(out)
}

/// Everything needed to simulate one parameter point.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub params: DeviceParams,
    pub space: TensorSpace,
    pub hamiltonian: ComplexMatrix,
    pub collapse: Vec<Collapse>,
    pub basis: LogicalBasis,
}

impl Circuit {
    pub fn new(params: &DeviceParams) -> Result<Self> {
        params.validate()?;
        let space = build_space(params);
        Ok(Self {
            hamiltonian: build_hamiltonian(params, &space)?,
            collapse: collapse_operators(params, &space)?,
            basis: error_states(params, &space)?,
            params: params.clone(),
            space,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    pub fn logical_projector(&self) -> ComplexMatrix {
        self.basis.l0.density()
    }

    pub fn zz_tilde(&self) -> ComplexMatrix {
        let zl = embed(&ztilde(), MODE_L, &self.space).expect("layout");
        let zr = embed(&ztilde(), MODE_R, &self.space).expect("layout");
        &zl * &zr
    }

    pub fn xx_tilde(&self) -> ComplexMatrix {
        let xl = embed(&xtilde(), MODE_L, &self.space).expect("layout");
        let xr = embed(&xtilde(), MODE_R, &self.space).expect("layout");
        &xl * &xr
    }

    /// Projector onto states with exactly one photon in either transmon.
    pub fn one_photon_projector(&self) -> ComplexMatrix {
        let p1 = number_projector(3, 1).expect("qutrit");
        let pl = embed(&p1, MODE_L, &self.space).expect("layout");
        let pr = embed(&p1, MODE_R, &self.space).expect("layout");
        &(&pl + &pr) - &(&pl * &pr)
    }

    pub fn lowering(&self, mode: &str) -> Result<ComplexMatrix> {
        let d = self.space.mode_dim(mode)?;
        embed(&annihilation(d)?, mode, &self.space)
    }

    /// Logical superposition `(L0 ± L1)/√2`, the Z̃_lZ̃_r = ±1 states.
    pub fn zz_eigenstate(&self, sign: f64) -> Ket {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        let l1 = self.basis.l1.scale(C64::new(sign, 0.0));
        (&self.basis.l0 + &l1).scale(s)
    }
}
