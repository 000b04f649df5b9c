//! Lindblad master equation: right-hand side, adaptive time integration and
//! the vectorized Liouvillian with its spectrum.
//!
//! The generator is
//! `dρ/dt = −i[H, ρ] + Σ_k (Γ_k/2)(2 L_k ρ L_k† − {L_k† L_k, ρ})`.

use std::collections::BTreeMap;

use faer::Mat;

use crate::error::{Error, Result};
use crate::model::Collapse;
use crate::qalgebra::{min_eigenvalue, ComplexMatrix, C64, I, ZERO};

/// Largest Hilbert-space dimension accepted by [`build_liouvillian`].
pub const MAX_SUPEROPERATOR_DIM: usize = 100;

pub const TRACE_TOL: f64 = 1e-7;
pub const HERMITICITY_TOL: f64 = 1e-8;
pub const POSITIVITY_TOL: f64 = -1e-6;

/// Nonzero pattern of an operator, used only inside the generator kernels.
/// Entries are stored row-major; `rows` lists each non-empty row's range.
#[derive(Clone, Debug)]
struct Triplets {
    entries: Vec<(usize, usize, C64)>,
    rows: Vec<(usize, std::ops::Range<usize>)>,
}

impl Triplets {
    fn from_dense(m: &ComplexMatrix) -> Self {
        let mut entries = Vec::new();
        let mut rows = Vec::new();
        for i in 0..m.rows() {
            let start = entries.len();
            for j in 0..m.cols() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
            if entries.len() > start {
                rows.push((i, start..entries.len()));
            }
        }
        Self { entries, rows }
    }

    /// `out += A·X`.
    fn left_mul_acc(&self, x: &[C64], d: usize, scale: C64, out: &mut [C64]) {
        for &(i, k, v) in &self.entries {
            let a = v * scale;
            let src = &x[k * d..(k + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for (o, s) in dst.iter_mut().zip(src) {
                *o += a * s;
            }
        }
    }

    /// `out = scale·A·X` on the stored rows; other rows are left untouched.
    fn left_mul_rows(&self, x: &[C64], d: usize, scale: C64, out: &mut [C64]) {
        for (i, range) in &self.rows {
            let dst = &mut out[i * d..(i + 1) * d];
            let (_, k0, v0) = self.entries[range.start];
            let a = v0 * scale;
            for (o, s) in dst.iter_mut().zip(&x[k0 * d..(k0 + 1) * d]) {
                *o = a * s;
            }
            for &(_, k, v) in &self.entries[range.start + 1..range.end] {
                let a = v * scale;
                for (o, s) in dst.iter_mut().zip(&x[k * d..(k + 1) * d]) {
                    *o += a * s;
                }
            }
        }
    }

    /// `out += X·A†`.
    fn right_mul_dagger_acc(&self, x: &[C64], d: usize, scale: C64, out: &mut [C64]) {
        for &(j, k, v) in &self.entries {
            let a = v.conj() * scale;
            for i in 0..d {
                out[i * d + j] += x[i * d + k] * a;
            }
        }
    }
}

struct Scratch {
    m: Vec<C64>,
    b: Vec<C64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            m: vec![ZERO; n],
            b: vec![ZERO; n],
        }
    }
}

/// Preprocessed generator: `H_eff = H − (i/2) Σ Γ L†L` plus the jump terms.
#[derive(Clone, Debug)]
pub struct LindbladGenerator {
    dim: usize,
    h_eff: Triplets,
    jumps: Vec<(Triplets, f64)>,
}

impl LindbladGenerator {
    pub fn new(h: &ComplexMatrix, collapse: &[Collapse]) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::DimensionMismatch {
                expected: h.rows(),
                got: h.cols(),
                context: "Hamiltonian must be square",
            });
        }
        let d = h.rows();
        let mut h_eff = h.clone();
        let mut jumps = Vec::new();
        for c in collapse {
            if c.op.rows() != d || c.op.cols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.op.rows(),
                    context: "collapse operator dimension",
                });
            }
            if c.rate < 0.0 || !c.rate.is_finite() {
                return Err(Error::param("collapse rate", format!("must be >= 0, got {}", c.rate)));
            }
            if c.rate == 0.0 {
                continue;
            }
            let ldl = &c.op.dagger() * &c.op;
            h_eff = &h_eff - &ldl.scale(C64::new(0.0, 0.5 * c.rate));
            jumps.push((Triplets::from_dense(&c.op), c.rate));
        }
        Ok(Self {
            dim: d,
            h_eff: Triplets::from_dense(&h_eff),
            jumps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored nonzeros of `H_eff` and of each jump operator.
    pub fn nonzeros(&self) -> (usize, Vec<usize>) {
        (self.h_eff.entries.len(), self.jumps.iter().map(|(l, _)| l.entries.len()).collect())
    }

    fn apply_into(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = ZERO);
        // −i H_eff ρ + i ρ H_eff†
        self.h_eff.left_mul_acc(rho, d, -I, out);
        self.h_eff.right_mul_dagger_acc(rho, d, I, out);
        let mut tmp = vec![ZERO; d * d];
        for (l, rate) in &self.jumps {
            tmp.iter_mut().for_each(|z| *z = ZERO);
            l.left_mul_acc(rho, d, C64::new(1.0, 0.0), &mut tmp);
            l.right_mul_dagger_acc(&tmp, d, C64::new(*rate, 0.0), out);
        }
    }

    /// Same map for Hermitian `ρ`, written as `M + M†` with
    /// `M = −i H_eff ρ + ½ Σ Γ L (Lρ)†` so only left products are needed.
    /// The result is exactly Hermitian, which keeps integrated states so.
    fn apply_hermitian_into(&self, rho: &[C64], out: &mut [C64], scratch: &mut Scratch) {
        let d = self.dim;
        let Scratch { m, b } = scratch;
        if self.h_eff.rows.len() < d {
            m.iter_mut().for_each(|z| *z = ZERO);
        }
        self.h_eff.left_mul_rows(rho, d, -I, m);
        for (l, rate) in &self.jumps {
            // only the stored rows of Lρ are read back
            l.left_mul_rows(rho, d, C64::new(1.0, 0.0), b);
            let half = 0.5 * rate;
            for (i, range) in &l.rows {
                let dst = &mut m[i * d..(i + 1) * d];
                for &(_, k, v) in &l.entries[range.clone()] {
                    let a = v * half;
                    for (j, _) in &l.rows {
                        dst[*j] += a * b[j * d + k].conj();
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = m[i * d + j] + m[j * d + i].conj();
            }
        }
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.rows() != self.dim || rho.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rho.rows(),
                context: "density matrix vs generator",
            });
        }
        let mut out = vec![ZERO; self.dim * self.dim];
        self.apply_into(rho.entries(), &mut out);
        ComplexMatrix::new(self.dim, self.dim, out)
    }
}

pub fn lindblad_rhs(rho: &ComplexMatrix, h: &ComplexMatrix, collapse: &[Collapse]) -> Result<ComplexMatrix> {
    if rho.rows() != h.rows() || rho.cols() != h.cols() {
        return Err(Error::DimensionMismatch {
            expected: h.rows(),
            got: rho.rows(),
            context: "density matrix vs Hamiltonian",
        });
    }
    LindbladGenerator::new(h, collapse)?.apply(rho)
}

#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub rtol: f64,
    /// Absolute tolerance; defaults to `1e-3 · rtol` when `None`.
    pub atol: Option<f64>,
    pub observables: Vec<(String, ComplexMatrix)>,
    pub check_invariants: bool,
    pub max_steps: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: None,
            observables: Vec::new(),
            check_invariants: true,
            max_steps: 50_000_000,
        }
    }
}

impl EvolveOptions {
    pub fn with_rtol(rtol: f64) -> Self {
        Self {
            rtol,
            ..Self::default()
        }
    }

    pub fn observe(mut self, name: impl Into<String>, op: ComplexMatrix) -> Self {
        self.observables.push((name.into(), op));
        self
    }
}

/// Worst invariant values seen at the output times.
#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct IntegrityReport {
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub observables: BTreeMap<String, Vec<f64>>,
    pub final_rho: ComplexMatrix,
    pub integrity: IntegrityReport,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl EvolutionResult {
    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.observables.get(name).map(|v| v.as_slice())
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// PI step control (Hairer & Wanner's DOPRI5 constants).
const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    out.copy_from_slice(y);
    for (c, k) in terms {
        let s = c * h;
        for (o, z) in out.iter_mut().zip(k.iter()) {
            *o += z * s;
        }
    }
}

fn check_state(rho: &ComplexMatrix, t: f64, report: &mut IntegrityReport) -> Result<()> {
    let drift = (rho.trace() - C64::new(1.0, 0.0)).norm();
    let herm = rho.hermiticity_defect();
    let min_ev = min_eigenvalue(rho)?;
    report.max_trace_drift = report.max_trace_drift.max(drift);
    report.max_hermiticity_defect = report.max_hermiticity_defect.max(herm);
    report.min_eigenvalue = report.min_eigenvalue.min(min_ev);
    if drift > TRACE_TOL {
        return Err(Error::IntegrationFailure {
            t,
            what: "trace drift",
            value: drift,
        });
    }
    if herm > HERMITICITY_TOL {
        return Err(Error::IntegrationFailure {
            t,
            what: "hermiticity defect",
            value: herm,
        });
    }
    if min_ev < POSITIVITY_TOL {
        return Err(Error::IntegrationFailure {
            t,
            what: "minimum eigenvalue",
            value: min_ev,
        });
    }
    Ok(())
}

/// Integrate from `t_grid[0]` and sample at every grid time.
pub fn evolve(
    rho0: &ComplexMatrix,
    h: &ComplexMatrix,
    collapse: &[Collapse],
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    let gen = LindbladGenerator::new(h, collapse)?;
    evolve_with(&gen, rho0, t_grid, opts)
}

pub fn evolve_with(
    gen: &LindbladGenerator,
    rho0: &ComplexMatrix,
    t_grid: &[f64],
    opts: &EvolveOptions,
) -> Result<EvolutionResult> {
    let d = gen.dim();
    if rho0.rows() != d || rho0.cols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: rho0.rows(),
            context: "initial density matrix",
        });
    }
    if !(1e-10..=1e-4).contains(&opts.rtol) {
        return Err(Error::param("rtol", format!("must lie in [1e-10, 1e-4], got {:e}", opts.rtol)));
    }
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("t_grid", "must be non-empty and strictly increasing"));
    }
    if rho0.hermiticity_defect() > HERMITICITY_TOL || (rho0.trace().re - 1.0).abs() > TRACE_TOL {
        return Err(Error::param("rho0", "must be Hermitian with unit trace"));
    }
    for (name, op) in &opts.observables {
        if op.rows() != d || op.cols() != d {
            return Err(Error::param("observables", format!("`{name}` has the wrong dimension")));
        }
    }

    let rtol = opts.rtol;
    let atol = opts.atol.unwrap_or(rtol * 1e-3);
    let n = d * d;

    let mut observables: BTreeMap<String, Vec<f64>> = opts
        .observables
        .iter()
        .map(|(k, _)| (k.clone(), Vec::with_capacity(t_grid.len())))
        .collect();
    let mut report = IntegrityReport {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };

    let mut y = rho0.entries().to_vec();
    let mut record = |y: &[C64], t: f64, report: &mut IntegrityReport| -> Result<()> {
        let rho = ComplexMatrix::new(d, d, y.to_vec())?;
        if opts.check_invariants {
            check_state(&rho, t, report)?;
        }
        for (name, op) in &opts.observables {
            let v = crate::qalgebra::expectation(&rho, op)?.re;
            observables.get_mut(name).expect("registered").push(v);
        }
        Ok(())
    };

    record(&y, t_grid[0], &mut report)?;

    let mut k1 = vec![ZERO; n];
    let mut k2 = vec![ZERO; n];
    let mut k3 = vec![ZERO; n];
    let mut k4 = vec![ZERO; n];
    let mut k5 = vec![ZERO; n];
    let mut k6 = vec![ZERO; n];
    let mut k7 = vec![ZERO; n];
    let mut stage = vec![ZERO; n];
    let mut y_new = vec![ZERO; n];
    let mut scratch = Scratch::new(n);
    let mut f = |x: &[C64], out: &mut [C64]| gen.apply_hermitian_into(x, out, &mut scratch);

    f(&y, &mut k1);

    // initial step from the size of the derivative
    let scale0: f64 = y.iter().map(|z| z.norm()).fold(0.0, f64::max).max(atol);
    let deriv0: f64 = k1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let span = t_grid[t_grid.len() - 1] - t_grid[0];
    let mut h = if deriv0 > 0.0 {
        (0.01 * scale0 / deriv0).min(span.max(1e-12))
    } else {
        span.max(1e-12)
    };

    let mut t = t_grid[0];
    let mut fac_old = 1e-4_f64;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut next = 1usize;

    while next < t_grid.len() {
        let target = t_grid[next];
        let mut h_try = h;
        let hits_target = t + h_try >= target - 1e-14 * target.abs().max(1.0);
        if hits_target {
            h_try = target - t;
        }
        let min_h = 1e-13 * t.abs().max(span).max(1e-9);
        if h_try < min_h && !hits_target {
            return Err(Error::Stiffness { t, h: h_try });
        }
        if accepted + rejected > opts.max_steps {
            return Err(Error::Stiffness { t, h: h_try });
        }

        combine(&mut stage, &y, h_try, &[(A21, &k1)]);
        f(&stage, &mut k2);
        combine(&mut stage, &y, h_try, &[(A31, &k1), (A32, &k2)]);
        f(&stage, &mut k3);
        combine(&mut stage, &y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
        f(&stage, &mut k4);
        combine(&mut stage, &y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
        f(&stage, &mut k5);
        combine(
            &mut stage,
            &y,
            h_try,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        );
        f(&stage, &mut k6);
        combine(
            &mut y_new,
            &y,
            h_try,
            &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        );
        f(&y_new, &mut k7);

        let mut err_sq = 0.0;
        for idx in 0..n {
            let e = (k1[idx] * E1 + k3[idx] * E3 + k4[idx] * E4 + k5[idx] * E5 + k6[idx] * E6 + k7[idx] * E7)
                * h_try;
            let sc = atol + rtol * y[idx].norm_sqr().max(y_new[idx].norm_sqr()).sqrt();
            err_sq += e.norm_sqr() / (sc * sc);
        }
        let err = (err_sq / n as f64).sqrt();
        let _ = (C2, C3, C4, C5);

        let expo = 0.2 - BETA * 0.75;
        let fac11 = err.max(1e-300).powf(expo);
        if err <= 1.0 {
            let fac = (fac11 / fac_old.powf(BETA) / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err.max(1e-4);
            accepted += 1;
            t += h_try;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            let h_new = h_try / fac;
            // a truncated step should not shrink the proposal for the next one
            h = if hits_target { h.max(h_new) } else { h_new };
            if hits_target {
                t = target;
                record(&y, t, &mut report)?;
                next += 1;
            }
        } else {
            rejected += 1;
            h = h_try / (fac11 / SAFE).min(1.0 / FAC_MIN);
        }
    }

    Ok(EvolutionResult {
        times: t_grid.to_vec(),
        observables,
        final_rho: ComplexMatrix::new(d, d, y)?,
        integrity: report,
        accepted_steps: accepted,
        rejected_steps: rejected,
    })
}

/// Dense superoperator acting on column-stacked density matrices.
pub fn build_liouvillian(h: &ComplexMatrix, collapse: &[Collapse]) -> Result<ComplexMatrix> {
    let d = h.rows();
    if d > MAX_SUPEROPERATOR_DIM {
        return Err(Error::Capacity {
            dim: d,
            max: MAX_SUPEROPERATOR_DIM,
        });
    }
    let gen = LindbladGenerator::new(h, collapse)?;
    let n = d * d;
    let mut sup = ComplexMatrix::zeros(n, n);
    // vec(AρB) = (Bᵀ ⊗ A) vec(ρ); index of ρ_ij is j·d + i.
    for &(i, k, v) in &gen.h_eff.entries {
        // −i H_eff ρ
        for j in 0..d {
            sup[(j * d + i, j * d + k)] += -I * v;
        }
        // +i ρ H_eff†: (ρ H_eff†)_{m j'} = Σ ρ_{m k} conj(H_eff_{j' k}) with j' = i
        for m in 0..d {
            sup[(i * d + m, k * d + m)] += I * v.conj();
        }
    }
    for (l, rate) in &gen.jumps {
        for &(i, k, v) in &l.entries {
            for &(j, m, w) in &l.entries {
                // Γ L_{ik} ρ_{km} conj(L_{jm}) contributes to (i, j)
                sup[(j * d + i, m * d + k)] += v * w.conj() * *rate;
            }
        }
    }
    Ok(sup)
}

/// Eigenvalues sorted by ascending |Re λ| with the normalized steady state.
#[derive(Clone, Debug)]
pub struct LiouvillianSpectrum {
    pub eigenvalues: Vec<C64>,
    pub steady_state: ComplexMatrix,
}

impl LiouvillianSpectrum {
    /// Decay rates `−Re λ` of the non-steady modes.
    pub fn rates(&self) -> Vec<f64> {
        self.eigenvalues.iter().skip(1).map(|l| -l.re).collect()
    }
}

/// Full right-eigenvector decomposition of a Liouvillian, with the mode
/// expansion of initial states and observables.
pub struct SpectralDecomposition {
    dim: usize,
    eigenvalues: Vec<C64>,
    vectors: Mat<C64>,
    lu: faer::linalg::solvers::PartialPivLu<C64>,
    steady_index: usize,
}

/// One Liouvillian mode's contribution `amplitude · exp(λ t)` to a signal.
#[derive(Clone, Copy, Debug)]
pub struct ModeWeight {
    pub eigenvalue: C64,
    pub amplitude: C64,
}

impl SpectralDecomposition {
    pub fn new(liouvillian: &ComplexMatrix) -> Result<Self> {
        let n = liouvillian.rows();
        let d = (n as f64).sqrt().round() as usize;
        if d * d != n || !liouvillian.is_square() {
            return Err(Error::InvalidDimension {
                dim: n,
                reason: "Liouvillian must be square with a perfect-square size",
            });
        }
        let m = liouvillian.to_faer();
        let evd = m.eigen().map_err(|_| Error::EigenSolver)?;
        let eigenvalues: Vec<C64> = (0..n).map(|i| evd.S().column_vector()[i]).collect();
        let vectors = evd.U().to_owned();
        let lu = vectors.partial_piv_lu();
        let steady_index = eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(i, _)| i)
            .ok_or(Error::EigenSolver)?;
        Ok(Self {
            dim: d,
            eigenvalues,
            vectors,
            lu,
            steady_index,
        })
    }

    pub fn eigenvalues(&self) -> &[C64] {
        &self.eigenvalues
    }

    pub fn steady_index(&self) -> usize {
        self.steady_index
    }

    pub fn steady_state(&self) -> Result<ComplexMatrix> {
        let n = self.dim * self.dim;
        let col: Vec<C64> = (0..n).map(|i| self.vectors[(i, self.steady_index)]).collect();
        let rho = ComplexMatrix::from_vec_columns(self.dim, &col)?;
        let tr = rho.trace();
        if tr.norm() < 1e-300 {
            return Err(Error::EigenSolver);
        }
        let rho = rho.scale(C64::new(1.0, 0.0) / tr);
        Ok((&rho + &rho.dagger()).scale_real(0.5))
    }

    /// Expansion of `t ↦ Tr[O e^{Lt} ρ0]` over the eigenmodes.
    pub fn mode_weights(&self, rho0: &ComplexMatrix, observable: &ComplexMatrix) -> Result<Vec<ModeWeight>> {
        let n = self.dim * self.dim;
        if rho0.rows() != self.dim || observable.rows() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rho0.rows(),
                context: "state/observable vs Liouvillian",
            });
        }
        use faer::linalg::solvers::Solve;
        let v0 = rho0.vec_columns();
        let rhs = Mat::from_fn(n, 1, |i, _| v0[i]);
        let coeffs = self.lu.solve(&rhs);
        // Tr[O ρ] = Σ_{ij} O_ji ρ_ij = vec(Oᵀ) · vec(ρ)
        let ot = observable.transpose().vec_columns();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            let mut proj = ZERO;
            for (i, o) in ot.iter().enumerate() {
                if *o != ZERO {
                    proj += *o * self.vectors[(i, k)];
                }
            }
            out.push(ModeWeight {
                eigenvalue: self.eigenvalues[k],
                amplitude: proj * coeffs[(k, 0)],
            });
        }
        Ok(out)
    }
}

pub fn slowest_decay_rates(liouvillian: &ComplexMatrix, k: usize) -> Result<LiouvillianSpectrum> {
    if k < 1 {
        return Err(Error::param("k", "must request at least one rate"));
    }
    let dec = SpectralDecomposition::new(liouvillian)?;
    spectrum_from(&dec, k)
}

pub fn spectrum_from(dec: &SpectralDecomposition, k: usize) -> Result<LiouvillianSpectrum> {
    let steady = dec.eigenvalues[dec.steady_index];
    let mut rest: Vec<C64> = dec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != dec.steady_index)
        .map(|(_, &l)| l)
        .collect();
    rest.sort_by(|a, b| a.re.abs().total_cmp(&b.re.abs()).then(a.im.total_cmp(&b.im)));
    let mut eigenvalues = vec![steady];
    eigenvalues.extend(rest.into_iter().take(k));
    Ok(LiouvillianSpectrum {
        eigenvalues,
        steady_state: dec.steady_state()?,
    })
}
