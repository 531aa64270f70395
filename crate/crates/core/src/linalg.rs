//! Dense complex linear algebra for small tensor-product spaces.
//!
//! Kets and operators are stored densely in row-major order. Basis index `i`
//! of a product space `H1 ⊗ H2` with dimensions `(d1, d2)` is `i1 * d2 + i2`,
//! so blocks are ordered by the first factor.
//!
//! Hermitian eigenvalues come from a cyclic complex Jacobi solver: each
//! rotation first removes the phase of the pivot entry, then applies an
//! ordinary real Jacobi rotation.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use thiserror::Error;

pub type Complex = Complex64;

/// Largest dimension any vector or matrix (including tensor products) may have.
pub const DIM_CAP: usize = 1 << 12;

/// Off-diagonal Frobenius norm at which the eigensolver stops.
pub const EIG_TOL: f64 = 1e-12;

pub const EIG_MAX_SWEEPS: usize = 100;

/// Tolerance for accepting a matrix as hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Tolerance on trace and minimum eigenvalue for density matrices.
pub const DENSITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension {dim} exceeds capacity {cap}")]
    Capacity { dim: usize, cap: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite entry at index {0}")]
    NonFinite(usize),
    #[error("matrix is not hermitian (max residual {residual:e})")]
    NotHermitian { residual: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
}

fn check_dim(dim: usize) -> Result<(), LinalgError> {
    if dim > DIM_CAP {
        Err(LinalgError::Capacity { dim, cap: DIM_CAP })
    } else {
        Ok(())
    }
}

fn check_finite(data: &[Complex]) -> Result<(), LinalgError> {
    match data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
        Some(i) => Err(LinalgError::NonFinite(i)),
        None => Ok(()),
    }
}

/// A ket. Not necessarily normalized: Eve's probe states are not.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex>,
}

impl StateVector {
    pub fn new(amps: Vec<Complex>) -> Result<Self, LinalgError> {
        if amps.is_empty() {
            return Err(LinalgError::Shape("state vector must have dimension >= 1".into()));
        }
        check_dim(amps.len())?;
        check_finite(&amps)?;
        Ok(Self { amps })
    }

    pub fn from_real(amps: &[f64]) -> Result<Self, LinalgError> {
        Self::new(amps.iter().map(|&x| Complex::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!((1..=DIM_CAP).contains(&dim), "dimension {dim} out of range");
        Self { amps: vec![Complex::new(0.0, 0.0); dim] }
    }

    /// Computational basis vector `|k⟩`.
    pub fn basis(dim: usize, k: usize) -> Self {
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut v = Self::zeros(dim);
        v.amps[k] = Complex::new(1.0, 0.0);
        v
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-12
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &StateVector) -> Complex {
        assert_eq!(self.dim(), other.dim(), "inner product of mismatched kets");
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scale(&self, c: Complex) -> StateVector {
        StateVector { amps: self.amps.iter().map(|a| a * c).collect() }
    }

    pub fn kron(&self, other: &StateVector) -> Result<StateVector, LinalgError> {
        check_dim(self.dim() * other.dim())?;
        let amps = self.amps.iter().flat_map(|a| other.amps.iter().map(move |b| a * b)).collect();
        Ok(StateVector { amps })
    }

    /// `|self⟩⟨other|`.
    pub fn outer(&self, other: &StateVector) -> ComplexMatrix {
        let (rows, cols) = (self.dim(), other.dim());
        let mut data = Vec::with_capacity(rows * cols);
        for a in &self.amps {
            data.extend(other.amps.iter().map(|b| a * b.conj()));
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn projector(&self) -> ComplexMatrix {
        self.outer(self)
    }
}

impl Index<usize> for StateVector {
    type Output = Complex;
    fn index(&self, i: usize) -> &Complex {
        &self.amps[i]
    }
}

impl Add<&StateVector> for &StateVector {
    type Output = StateVector;
    fn add(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.dim(), rhs.dim(), "adding mismatched kets");
        StateVector { amps: self.amps.iter().zip(&rhs.amps).map(|(a, b)| a + b).collect() }
    }
}

impl Sub<&StateVector> for &StateVector {
    type Output = StateVector;
    fn sub(self, rhs: &StateVector) -> StateVector {
        assert_eq!(self.dim(), rhs.dim(), "subtracting mismatched kets");
        StateVector { amps: self.amps.iter().zip(&rhs.amps).map(|(a, b)| a - b).collect() }
    }
}

/// Serialized as a list of `[re, im]` pairs.
impl serde::Serialize for StateVector {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.amps.len()))?;
        for z in &self.amps {
            seq.serialize_element(&[z.re, z.im])?;
        }
        seq.end()
    }
}

impl<'de> serde::Deserialize<'de> for StateVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(deserializer)?;
        StateVector::new(pairs.into_iter().map(|[re, im]| Complex::new(re, im)).collect())
            .map_err(serde::de::Error::custom)
    }
}

/// Which factor of a bipartite space to keep in [`ComplexMatrix::partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self, LinalgError> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Shape("matrix dimensions must be positive".into()));
        }
        check_dim(rows)?;
        check_dim(cols)?;
        if data.len() != rows * cols {
            return Err(LinalgError::Shape(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<Complex>>) -> Result<Self, LinalgError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(LinalgError::Shape("ragged rows".into()));
        }
        Self::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self, LinalgError> {
        Self::from_rows(rows.iter().map(|row| row.iter().map(|&x| Complex::new(x, 0.0)).collect()).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1 && rows <= DIM_CAP && cols <= DIM_CAP);
        Self { rows, cols, data: vec![Complex::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex::new(1.0, 0.0);
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in diag.iter().enumerate() {
            m.data[i * n + i] = Complex::new(x, 0.0);
        }
        m
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

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    pub fn scale(&self, c: Complex) -> ComplexMatrix {
        ComplexMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> ComplexMatrix {
        self.scale(Complex::new(c, 0.0))
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex::new(0.0, 0.0) {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector, LinalgError> {
        if self.cols != v.dim() {
            return Err(LinalgError::Shape(format!(
                "cannot apply {}x{} matrix to ket of dimension {}",
                self.rows,
                self.cols,
                v.dim()
            )));
        }
        let amps = (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].iter().zip(v.amplitudes()).map(|(a, b)| a * b).sum())
            .collect();
        Ok(StateVector { amps })
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self.data[i * self.cols + i]).sum()
    }

    /// `Tr(self · rhs)` without forming the product.
    pub fn trace_product(&self, rhs: &ComplexMatrix) -> Result<Complex, LinalgError> {
        if self.cols != rhs.rows || self.rows != rhs.cols {
            return Err(LinalgError::Shape(format!(
                "trace of product of {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut acc = Complex::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * rhs.data[k * rhs.cols + i];
            }
        }
        Ok(acc)
    }

    /// `⟨v|self|v⟩`.
    pub fn expectation(&self, v: &StateVector) -> Result<Complex, LinalgError> {
        let mv = self.apply(v)?;
        Ok(v.inner(&mv))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise distance between `self` and `other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64, LinalgError> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// Largest `|m_ij - conj(m_ji)|`; infinite for non-square matrices.
    pub fn hermitian_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_residual() <= tol
    }

    /// Hermitian, trace one and positive semidefinite, all within [`DENSITY_TOL`].
    pub fn is_density(&self) -> bool {
        if !self.is_hermitian(HERMITIAN_TOL) || (self.trace() - Complex::new(1.0, 0.0)).norm() > DENSITY_TOL {
            return false;
        }
        match self.hermitian_eigenvalues() {
            Ok(vals) => vals.last().is_none_or(|&min| min >= -DENSITY_TOL),
            Err(_) => false,
        }
    }

    fn check_same_shape(&self, other: &ComplexMatrix) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::Shape(format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        self.check_same_shape(other)?;
        Ok(self + other)
    }

    pub fn checked_sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        self.check_same_shape(other)?;
        Ok(self - other)
    }

    /// Tensor product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        check_dim(rows)?;
        check_dim(cols)?;
        let mut data = vec![Complex::new(0.0, 0.0); rows * cols];
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.data[i1 * self.cols + j1];
                if a == Complex::new(0.0, 0.0) {
                    continue;
                }
                for i2 in 0..rhs.rows {
                    let row = (i1 * rhs.rows + i2) * cols + j1 * rhs.cols;
                    for j2 in 0..rhs.cols {
                        data[row + j2] = a * rhs.data[i2 * rhs.cols + j2];
                    }
                }
            }
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    /// Traces out one factor of a `(d1·d2)`-dimensional operator.
    pub fn partial_trace(&self, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix, LinalgError> {
        let (d1, d2) = dims;
        if d1 == 0 || d2 == 0 || !self.is_square() || self.rows != d1 * d2 {
            return Err(LinalgError::Shape(format!("cannot split {}x{} matrix as ({d1}, {d2})", self.rows, self.cols)));
        }
        let n = self.rows;
        let out = match keep {
            Keep::First => {
                let mut out = Self::zeros(d1, d1);
                for i in 0..d1 {
                    for j in 0..d1 {
                        out.data[i * d1 + j] = (0..d2).map(|k| self.data[(i * d2 + k) * n + j * d2 + k]).sum();
                    }
                }
                out
            }
            Keep::Second => {
                let mut out = Self::zeros(d2, d2);
                for i in 0..d2 {
                    for j in 0..d2 {
                        out.data[i * d2 + j] = (0..d1).map(|k| self.data[(k * d2 + i) * n + k * d2 + j]).sum();
                    }
                }
                out
            }
        };
        Ok(out)
    }

    /// Eigenvalues in descending order.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        jacobi(self, false).map(|(vals, _)| vals)
    }

    /// Eigenvalues in descending order with the matching orthonormal
    /// eigenvectors as columns.
    pub fn eigh(&self) -> Result<(Vec<f64>, ComplexMatrix), LinalgError> {
        jacobi(self, true).map(|(vals, vecs)| (vals, vecs.expect("vectors requested")))
    }

    /// Sum of the absolute eigenvalues of a hermitian matrix.
    pub fn trace_norm(&self) -> Result<f64, LinalgError> {
        Ok(self.hermitian_eigenvalues()?.iter().map(|x| x.abs()).sum())
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of bounds");
        &mut self.data[i * self.cols + j]
    }
}

impl Add<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "adding mismatched matrices");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert!(self.rows == rhs.rows && self.cols == rhs.cols, "subtracting mismatched matrices");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("multiplying mismatched matrices")
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self.data[i * self.cols + j];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

fn off_diagonal_norm(a: &[Complex], n: usize) -> f64 {
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[i * n + j].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn jacobi(m: &ComplexMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<ComplexMatrix>), LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::Shape(format!("eigenvalues of non-square {}x{} matrix", m.rows, m.cols)));
    }
    let n = m.rows;
    let scale = m.max_abs().max(1.0);
    let residual = m.hermitian_residual();
    if residual > HERMITIAN_TOL * scale {
        return Err(LinalgError::NotHermitian { residual });
    }

    // Work on the exactly hermitian part.
    let mut a = m.data.clone();
    for i in 0..n {
        a[i * n + i] = Complex::new(a[i * n + i].re, 0.0);
        for j in (i + 1)..n {
            let avg = (a[i * n + j] + a[j * n + i].conj()) * 0.5;
            a[i * n + j] = avg;
            a[j * n + i] = avg.conj();
        }
    }
    let mut vecs = want_vectors.then(|| ComplexMatrix::identity(n).data);

    let tol = EIG_TOL * m.frobenius_norm().max(1.0);
    // Entries this small are left alone; all of them together stay below `tol`.
    let skip = tol / n as f64;

    let mut sweep = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off <= tol {
            break;
        }
        if sweep == EIG_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps: sweep, off_norm: off });
        }
        sweep += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                let r = apq.norm();
                if r <= skip {
                    continue;
                }
                let phase = apq / r;
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + theta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = t * c;

                // U = diag(1, conj(phase)) · [[c, s], [-s, c]] in the (p, q) plane.
                let u00 = Complex::new(c, 0.0);
                let u01 = Complex::new(s, 0.0);
                let u10 = phase.conj() * -s;
                let u11 = phase.conj() * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * u00 + akq * u10;
                    a[k * n + q] = akp * u01 + akq * u11;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = u00.conj() * apk + u10.conj() * aqk;
                    a[q * n + k] = u01.conj() * apk + u11.conj() * aqk;
                }
                a[p * n + q] = Complex::new(0.0, 0.0);
                a[q * n + p] = Complex::new(0.0, 0.0);
                a[p * n + p] = Complex::new(a[p * n + p].re, 0.0);
                a[q * n + q] = Complex::new(a[q * n + q].re, 0.0);

                if let Some(v) = vecs.as_mut() {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = vkp * u00 + vkq * u10;
                        v[k * n + q] = vkp * u01 + vkq * u11;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re));
    let vals = order.iter().map(|&i| a[i * n + i].re).collect();
    let vecs = vecs.map(|v| {
        let mut sorted = vec![Complex::new(0.0, 0.0); n * n];
        for (new_col, &old_col) in order.iter().enumerate() {
            for k in 0..n {
                sorted[k * n + new_col] = v[k * n + old_col];
            }
        }
        ComplexMatrix { rows: n, cols: n, data: sorted }
    });
    Ok((vals, vecs))
}
