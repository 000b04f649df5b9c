//! Dense operator and state algebra on small truncated tensor-product spaces.
//!
//! Basis ordering is fixed by [`TensorSpace`]: modes are kept in the order
//! they were declared and the last mode varies fastest when flattening an
//! occupation tuple into a basis index.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Dense row-major complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
                context: "matrix entry count",
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_entries(self) -> Vec<C64> {
        self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        let n = self.rows.min(self.cols);
        (0..n).map(|i| self[(i, i)]).sum()
    }

    /// `max |M - M†|` over all entries.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: rhs.rows,
                context: "matrix product",
            });
        }
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![ZERO; n * p];
        for i in 0..n {
            let row = &mut out[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == ZERO {
                    continue;
                }
                let b = &rhs.data[k * p..(k + 1) * p];
                for (o, &bv) in row.iter_mut().zip(b) {
                    *o += a * bv;
                }
            }
        }
        Ok(Self {
            rows: n,
            cols: p,
            data: out,
        })
    }

    pub fn kron(&self, rhs: &Self) -> Self {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        let mut out = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out[(i * rhs.rows + k, j * rhs.cols + l)] = a * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        &(self * rhs) - &(rhs * self)
    }

    pub fn anticommutator(&self, rhs: &Self) -> Self {
        &(self * rhs) + &(rhs * self)
    }

    pub fn apply(&self, v: &Ket) -> Result<Ket> {
        if v.dim() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.dim(),
                context: "matrix-vector product",
            });
        }
        let out = (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v.amplitudes()).map(|(a, b)| a * b).sum()
            })
            .collect();
        Ok(Ket(out))
    }

    /// `⟨u|M|v⟩`.
    pub fn sandwich(&self, u: &Ket, v: &Ket) -> Result<C64> {
        let mv = self.apply(v)?;
        u.inner(&mv)
    }

    /// Eigenvalues of a Hermitian matrix in ascending order.
    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: self.cols,
                context: "hermitian eigenvalues of non-square matrix",
            });
        }
        let m = self.to_faer();
        m.self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|_| Error::EigenSolver)
    }

    /// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
    /// Eigenvectors are returned as columns of the matrix.
    pub fn eigh(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        let m = self.to_faer();
        let evd = m
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|_| Error::EigenSolver)?;
        let n = self.rows;
        let vals = (0..n).map(|i| evd.S().column_vector()[i].re).collect();
        let u = evd.U();
        let vecs = ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)]);
        Ok((vals, vecs))
    }

    pub(crate) fn to_faer(&self) -> Mat<C64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    /// Column-stacked vectorization.
    pub fn vec_columns(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows * self.cols);
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    pub fn from_vec_columns(n: usize, v: &[C64]) -> Result<Self> {
        if v.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: v.len(),
                context: "column-stacked vector length",
            });
        }
        Ok(Self::from_fn(n, n, |i, j| v[j * n + i]))
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix sum dimension mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "matrix difference dimension mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// State vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Ket(pub Vec<C64>);

impl Ket {
    pub fn zeros(dim: usize) -> Self {
        Ket(vec![ZERO; dim])
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut k = Self::zeros(dim);
        k.0[index] = ONE;
        k
    }

    pub fn from_real(amps: &[f64]) -> Self {
        Ket(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::param("state", "cannot normalize the zero vector"));
        }
        Ok(self.scale(C64::new(1.0 / n, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Ket(self.0.iter().map(|&z| z * s).collect())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Ket) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
                context: "inner product",
            });
        }
        Ok(self.0.iter().zip(&other.0).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        let mut out = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.0 {
            for b in &other.0 {
                out.push(a * b);
            }
        }
        Ket(out)
    }

    /// `|self⟩⟨other|`.
    pub fn outer(&self, other: &Ket) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), other.dim(), |i, j| self.0[i] * other.0[j].conj())
    }

    pub fn density(&self) -> ComplexMatrix {
        self.outer(self)
    }
}

impl Add for &Ket {
    type Output = Ket;
    fn add(self, rhs: &Ket) -> Ket {
        assert_eq!(self.dim(), rhs.dim());
        Ket(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Ket {
    type Output = Ket;
    fn sub(self, rhs: &Ket) -> Ket {
        assert_eq!(self.dim(), rhs.dim());
        Ket(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

/// Ordered product of truncated modes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorSpace {
    mode_dims: Vec<usize>,
    mode_labels: Vec<String>,
}

impl TensorSpace {
    pub fn new<S: Into<String>>(modes: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut mode_dims = Vec::new();
        let mut mode_labels: Vec<String> = Vec::new();
        for (label, dim) in modes {
            let label = label.into();
            if dim == 0 {
                return Err(Error::InvalidDimension {
                    dim,
                    reason: "mode dimension must be positive",
                });
            }
            if mode_labels.contains(&label) {
                return Err(Error::param("mode_labels", format!("duplicate label `{label}`")));
            }
            mode_labels.push(label);
            mode_dims.push(dim);
        }
        if mode_dims.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "space needs at least one mode",
            });
        }
        Ok(Self {
            mode_dims,
            mode_labels,
        })
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn mode_labels(&self) -> &[String] {
        &self.mode_labels
    }

    pub fn total_dim(&self) -> usize {
        self.mode_dims.iter().product()
    }

    pub fn mode_index(&self, label: &str) -> Result<usize> {
        self.mode_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownMode(label.to_string()))
    }

    pub fn mode_dim(&self, label: &str) -> Result<usize> {
        Ok(self.mode_dims[self.mode_index(label)?])
    }

    pub fn flatten(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.mode_dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mode_dims.len(),
                got: occupations.len(),
                context: "occupation tuple length",
            });
        }
        let mut idx = 0;
        for (&n, &d) in occupations.iter().zip(&self.mode_dims) {
            if n >= d {
                return Err(Error::OutOfRange { n, dim: d });
            }
            idx = idx * d + n;
        }
        Ok(idx)
    }

    pub fn unflatten(&self, mut index: usize) -> Result<Vec<usize>> {
        let total = self.total_dim();
        if index >= total {
            return Err(Error::OutOfRange { n: index, dim: total });
        }
        let mut occ = vec![0; self.mode_dims.len()];
        for (slot, &d) in occ.iter_mut().zip(&self.mode_dims).rev() {
            *slot = index % d;
            index /= d;
        }
        Ok(occ)
    }

    pub fn basis_ket(&self, occupations: &[usize]) -> Result<Ket> {
        Ok(Ket::basis(self.total_dim(), self.flatten(occupations)?))
    }

    /// Tensor product of per-mode states, given in mode order.
    pub fn product_ket(&self, factors: &[Ket]) -> Result<Ket> {
        if factors.len() != self.mode_dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mode_dims.len(),
                got: factors.len(),
                context: "number of product factors",
            });
        }
        let mut out = Ket(vec![ONE]);
        for (f, &d) in factors.iter().zip(&self.mode_dims) {
            if f.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: f.dim(),
                    context: "product factor dimension",
                });
            }
            out = out.kron(f);
        }
        Ok(out)
    }
}

/// Truncated bosonic lowering operator: `(n, n+1) = sqrt(n+1)`.
pub fn annihilation(dim: usize) -> Result<ComplexMatrix> {
    if dim < 2 {
        return Err(Error::InvalidDimension {
            dim,
            reason: "annihilation needs at least two levels",
        });
    }
    let mut a = ComplexMatrix::zeros(dim, dim);
    for n in 0..dim - 1 {
        a[(n, n + 1)] = C64::new(((n + 1) as f64).sqrt(), 0.0);
    }
    Ok(a)
}

pub fn creation(dim: usize) -> Result<ComplexMatrix> {
    Ok(annihilation(dim)?.dagger())
}

pub fn number(dim: usize) -> ComplexMatrix {
    let diag: Vec<f64> = (0..dim).map(|n| n as f64).collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

pub fn number_projector(dim: usize, n: usize) -> Result<ComplexMatrix> {
    if n >= dim {
        return Err(Error::OutOfRange { n, dim });
    }
    let mut p = ComplexMatrix::zeros(dim, dim);
    p[(n, n)] = ONE;
    Ok(p)
}

/// `|0⟩⟨2| + |2⟩⟨0|` on a qutrit, with eigenvalues ±1 on the 0/2 doublet.
pub fn xtilde() -> ComplexMatrix {
    let mut x = ComplexMatrix::zeros(3, 3);
    x[(0, 2)] = ONE;
    x[(2, 0)] = ONE;
    x
}

/// `P² − P⁰ = diag(−1, 0, 1)`.
pub fn ztilde() -> ComplexMatrix {
    ComplexMatrix::from_real_diagonal(&[-1.0, 0.0, 1.0])
}

/// Lift a single-mode operator into the full space (identity elsewhere).
pub fn embed(op: &ComplexMatrix, mode: &str, space: &TensorSpace) -> Result<ComplexMatrix> {
    let idx = space.mode_index(mode)?;
    let d = space.mode_dims()[idx];
    if !op.is_square() || op.rows() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: op.rows(),
            context: "embedded operator vs mode dimension",
        });
    }
    let left: usize = space.mode_dims()[..idx].iter().product();
    let right: usize = space.mode_dims()[idx + 1..].iter().product();
    let total = left * d * right;
    let mut out = ComplexMatrix::zeros(total, total);
    for l in 0..left {
        for i in 0..d {
            for j in 0..d {
                let v = op[(i, j)];
                if v == ZERO {
                    continue;
                }
                for r in 0..right {
                    let row = (l * d + i) * right + r;
                    let col = (l * d + j) * right + r;
                    out[(row, col)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// `Tr[ρ·O]`.
pub fn expectation(rho: &ComplexMatrix, op: &ComplexMatrix) -> Result<C64> {
    if !rho.is_square() || !op.is_square() || rho.rows() != op.rows() {
        return Err(Error::DimensionMismatch {
            expected: rho.rows(),
            got: op.rows(),
            context: "expectation value",
        });
    }
    let n = rho.rows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += rho[(i, k)] * op[(k, i)];
        }
    }
    Ok(acc)
}

/// Smallest eigenvalue of the Hermitian part of `rho`.
pub fn min_eigenvalue(rho: &ComplexMatrix) -> Result<f64> {
    let herm = (rho + &rho.dagger()).scale_real(0.5);
    Ok(herm.eigenvalues_hermitian()?[0])
}

pub fn purity(rho: &ComplexMatrix) -> f64 {
    expectation(rho, rho).map(|z| z.re).unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn annihilation_entries() {
        let a = annihilation(3).unwrap();
        assert_eq!(a[(0, 1)], ONE);
        assert!((a[(1, 2)].re - 2f64.sqrt()).abs() < 1e-15);
        let nonzero = a.entries().iter().filter(|z| **z != ZERO).count();
        assert_eq!(nonzero, 2);

        let a2 = annihilation(2).unwrap();
        assert_eq!(a2.entries().iter().filter(|z| **z != ZERO).count(), 1);
        assert_eq!(a2[(0, 1)], ONE);
    }

    #[test]
    fn annihilation_rejects_tiny_modes() {
        assert!(matches!(annihilation(1), Err(Error::InvalidDimension { .. })));
        assert!(annihilation(0).is_err());
    }

    #[test]
    fn truncated_commutator() {
        let a = annihilation(3).unwrap();
        let ad = a.dagger();
        let c = a.commutator(&ad);
        assert!(close(&c, &ComplexMatrix::from_real_diagonal(&[1.0, 1.0, -2.0]), 1e-14));
    }

    #[test]
    fn number_operator_from_ladder() {
        for dim in 2..7 {
            let a = annihilation(dim).unwrap();
            let n = &a.dagger() * &a;
            assert!(close(&n, &number(dim), 1e-12));
        }
    }

    #[test]
    fn projectors() {
        let p1 = number_projector(3, 1).unwrap();
        assert!(close(&p1, &ComplexMatrix::from_real_diagonal(&[0.0, 1.0, 0.0]), 0.0));
        let sum = &(&number_projector(3, 0).unwrap() + &p1) + &number_projector(3, 2).unwrap();
        assert!(close(&sum, &ComplexMatrix::identity(3), 0.0));
        let z = &number_projector(3, 2).unwrap() - &number_projector(3, 0).unwrap();
        assert!(close(&z, &ztilde(), 0.0));
        assert!(matches!(number_projector(3, 3), Err(Error::OutOfRange { n: 3, dim: 3 })));
    }

    #[test]
    fn xtilde_algebra() {
        let x = xtilde();
        let z = ztilde();
        let s = 1.0 / 2f64.sqrt();
        let plus = Ket::from_real(&[s, 0.0, s]);
        let xp = x.apply(&plus).unwrap();
        assert!((&xp - &plus).norm() < 1e-15);
        let one = Ket::basis(3, 1);
        assert!(x.apply(&one).unwrap().norm() == 0.0);
        let anti = x.anticommutator(&z);
        assert!(anti.max_abs() < 1e-15);
        let p02 = &number_projector(3, 0).unwrap() + &number_projector(3, 2).unwrap();
        assert!(close(&(&x * &x), &p02, 1e-12));
        assert!(x.hermiticity_defect() == 0.0);
    }

    #[test]
    fn embed_identity_and_errors() {
        let space = TensorSpace::new([("l", 3), ("r", 3), ("Sl", 2), ("Sr", 2)]).unwrap();
        for label in ["l", "r"] {
            let e = embed(&ComplexMatrix::identity(3), label, &space).unwrap();
            assert!(close(&e, &ComplexMatrix::identity(36), 0.0));
        }
        assert!(matches!(
            embed(&ComplexMatrix::identity(3), "q", &space),
            Err(Error::UnknownMode(_))
        ));
        assert!(matches!(
            embed(&ComplexMatrix::identity(2), "l", &space),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn embed_spectrum_multiplicity() {
        let space = TensorSpace::new([("l", 3), ("r", 3), ("Sl", 2), ("Sr", 2)]).unwrap();
        let op = ComplexMatrix::from_real_diagonal(&[-1.5, 0.25, 2.0]);
        let e = embed(&op, "r", &space).unwrap();
        let ev = e.eigenvalues_hermitian().unwrap();
        for (k, target) in [-1.5, 0.25, 2.0].iter().enumerate() {
            for v in &ev[k * 12..(k + 1) * 12] {
                assert!((v - target).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn disjoint_modes_commute() {
        let space = TensorSpace::new([("l", 3), ("r", 3), ("Sl", 2), ("Sr", 2)]).unwrap();
        let a = annihilation(3).unwrap();
        let al = embed(&a, "l", &space).unwrap();
        let adr = embed(&a.dagger(), "r", &space).unwrap();
        assert!(close(&(&al * &adr), &(&adr * &al), 1e-14));
    }

    #[test]
    fn embed_composes() {
        let space = TensorSpace::new([("l", 3), ("r", 3), ("Sl", 2)]).unwrap();
        let a = annihilation(3).unwrap();
        let x = xtilde();
        let lhs = embed(&(&a * &x), "r", &space).unwrap();
        let rhs = &embed(&a, "r", &space).unwrap() * &embed(&x, "r", &space).unwrap();
        assert!(close(&lhs, &rhs, 1e-14));
    }

    #[test]
    fn flatten_roundtrip() {
        let space = TensorSpace::new([("l", 3), ("r", 3), ("Sl", 2), ("Sr", 2)]).unwrap();
        assert_eq!(space.total_dim(), 36);
        for i in 0..36 {
            let occ = space.unflatten(i).unwrap();
            assert_eq!(space.flatten(&occ).unwrap(), i);
        }
        // last mode fastest
        assert_eq!(space.flatten(&[0, 0, 0, 1]).unwrap(), 1);
        assert_eq!(space.flatten(&[1, 0, 0, 0]).unwrap(), 12);
        assert!(space.unflatten(36).is_err());
        assert!(space.flatten(&[3, 0, 0, 0]).is_err());
    }

    #[test]
    fn expectation_values() {
        let s = 1.0 / 3f64.sqrt();
        let psi = Ket::from_real(&[s, s, s]);
        let rho = psi.density();
        assert!((expectation(&rho, &rho).unwrap() - ONE).norm() < 1e-14);

        let mixed = ComplexMatrix::identity(3).scale_real(1.0 / 3.0);
        assert!(expectation(&mixed, &ztilde()).unwrap().norm() < 1e-15);

        let one = Ket::basis(3, 1).density();
        assert!(expectation(&one, &ztilde()).unwrap().norm() == 0.0);

        assert!(expectation(&ComplexMatrix::identity(2), &ztilde()).is_err());
    }

    #[test]
    fn vectorization_roundtrip() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let v = m.vec_columns();
        assert_eq!(v[1], m[(1, 0)]);
        assert_eq!(ComplexMatrix::from_vec_columns(3, &v).unwrap(), m);
    }
}
