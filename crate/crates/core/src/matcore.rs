//! Dense complex-matrix substrate for registers of a handful of qubits.
//!
//! Everything here is row-major and sized for tiny problems (dimension at most
//! 64). Multi-qubit indices follow one global convention: the first listed
//! slot is the most significant bit of the basis index, so `|mol, mem, sys>`
//! enumerates as `|000>, |001>, |010>, ...`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Tolerance on `‖ρ − ρ†‖_max` for a density matrix.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|Tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues in `[-EIG_CLAMP, 0)` count as zero.
pub const EIG_CLAMP: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-13;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("matrix dimensions must be positive".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries supplied for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: pos / cols, col: pos % cols });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::new(n, m, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn diag(values: &[C64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    /// `|a><b|`.
    pub fn outer(a: &[C64], b: &[C64]) -> Self {
        Self::from_fn(a.len(), b.len(), |r, c| a[r] * b[c].conj())
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

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn scale(&self, k: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z * k).collect() }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        self.scale(C64::new(k, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// Kronecker product with `self` on the most significant index.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        Self::from_fn(rows, cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    /// `U self U†`.
    pub fn conjugate_by(&self, u: &Self) -> Self {
        u.matmul(self).matmul(&u.dagger())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols), "shape mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev = 0.0_f64;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    pub fn unitary_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.dagger().matmul(self).max_abs_diff(&Self::identity(self.rows))
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| (self[(r, c)] + self[(c, r)].conj()) * 0.5)
    }

    /// Restriction to the given row and column ranges.
    pub fn block(&self, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Self {
        let (r0, c0) = (rows.start, cols.start);
        Self::from_fn(rows.len(), cols.len(), |r, c| self[(r0 + r, c0 + c)])
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
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
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product `a ⊗ b`, `a` on the most significant index.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Sorted in descending order.
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector of `values[k]`.
    pub vectors: ComplexMatrix,
}

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq` and then applies
/// the real symmetric Jacobi rotation, so the pivot block becomes diagonal.
/// Sweeps stop once the off-diagonal Frobenius norm drops below `1e-13`
/// (relative to the matrix norm when that exceeds one).
pub fn eig_hermitian(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::Shape(format!("eig of a {}x{} matrix", h.rows, h.cols)));
    }
    let dev = h.hermitian_deviation();
    if dev > 1e-10 {
        return Err(Error::NotHermitian(dev));
    }
    let n = h.rows;
    let mut a = h.hermitian_part();
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = ComplexMatrix::identity(n);
    let threshold = JACOBI_OFF_TOL * a.frobenius_norm().max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&a) < threshold {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let phase = apq / mag;
                let tau = (a[(q, q)].re - a[(p, p)].re) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let g_pp = C64::new(c, 0.0);
                let g_pq = C64::new(s, 0.0);
                let g_qp = -phase.conj() * s;
                let g_qq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * g_pp + akq * g_qp;
                    a[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen { values, vectors })
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let mut acc = 0.0;
    for r in 0..a.rows {
        for c in 0..a.cols {
            if r != c {
                acc += a[(r, c)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Eigenvalues only, descending.
pub fn eigvals_hermitian(h: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eig_hermitian(h)?.values)
}

/// Smallest singular value, via the spectrum of `A†A`.
pub fn min_singular_value(a: &ComplexMatrix) -> Result<f64> {
    let gram = a.dagger().matmul(a);
    let w = eigvals_hermitian(&gram)?;
    Ok(w.last().copied().unwrap_or(0.0).max(0.0).sqrt())
}

/// Inverse by Gauss–Jordan elimination with partial pivoting.
pub fn inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::Shape("inverse of a non-square matrix".into()));
    }
    let n = a.rows;
    let mut m = a.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].norm().total_cmp(&m[(j, col)].norm()))
            .unwrap();
        if m[(pivot, col)].norm() == 0.0 {
            return Err(Error::Shape("matrix is singular".into()));
        }
        if pivot != col {
            for k in 0..n {
                m.data.swap(pivot * n + k, col * n + k);
                inv.data.swap(pivot * n + k, col * n + k);
            }
        }
        let d = m[(col, col)];
        for k in 0..n {
            m[(col, k)] /= d;
            inv[(col, k)] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m[(r, col)];
            if f == ZERO {
                continue;
            }
            for k in 0..n {
                let mk = m[(col, k)];
                let ik = inv[(col, k)];
                m[(r, k)] -= f * mk;
                inv[(r, k)] -= f * ik;
            }
        }
    }
    Ok(inv)
}

/// A normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(Error::Shape(format!("state of length {}", amplitudes.len())));
        }
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidState(format!("state norm {norm} differs from 1")));
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes the supplied amplitudes.
    pub fn normalized(amplitudes: Vec<C64>) -> Result<Self> {
        let norm = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(amplitudes.into_iter().map(|z| z / norm).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn to_density(&self, slots: &[&str]) -> Result<DensityMatrix> {
        DensityMatrix::new(self.projector(), slots)
    }
}

/// A validated density matrix over labelled qubit slots.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    slots: Vec<String>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix, slots: &[&str]) -> Result<Self> {
        let rho = Self::new_unchecked(matrix, slots)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Checks the shape against the slot list but not the physical invariants.
    pub fn new_unchecked(matrix: ComplexMatrix, slots: &[&str]) -> Result<Self> {
        let slots: Vec<String> = slots.iter().map(|s| s.to_string()).collect();
        Self::from_parts(matrix, slots)
    }

    pub(crate) fn from_parts(matrix: ComplexMatrix, slots: Vec<String>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::InvalidSlots("at least one slot is required".into()));
        }
        for (i, s) in slots.iter().enumerate() {
            if slots[..i].contains(s) {
                return Err(Error::InvalidSlots(format!("duplicate slot {s:?}")));
            }
        }
        let dim = 1usize << slots.len();
        if matrix.rows() != dim || matrix.cols() != dim {
            return Err(Error::Shape(format!(
                "{} slots need a {dim}x{dim} matrix, got {}x{}",
                slots.len(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self { matrix, slots })
    }

    /// A single qubit with populations `p00`, `p11` and coherence `rho01`.
    pub fn qubit(p00: f64, p11: f64, rho01: C64, slot: &str) -> Result<Self> {
        let m = ComplexMatrix::from_rows(&[
            vec![C64::new(p00, 0.0), rho01],
            vec![rho01.conj(), C64::new(p11, 0.0)],
        ])?;
        Self::new(m, &[slot])
    }

    pub fn maximally_mixed(slots: &[&str]) -> Result<Self> {
        let dim = 1usize << slots.len();
        Self::new(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64), slots)
    }

    /// Random full-rank state `G G† / Tr(G G†)` with Gaussian `G`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, slots: &[&str]) -> Result<Self> {
        let dim = 1usize << slots.len();
        let g = ComplexMatrix::from_fn(dim, dim, |_, _| C64::new(gaussian(rng), gaussian(rng)));
        let m = g.matmul(&g.dagger());
        let tr = m.trace().re;
        let mut m = m.scale_real(1.0 / tr);
        for i in 0..dim {
            m[(i, i)].im = 0.0;
        }
        Self::new(m.hermitian_part(), slots)
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.matrix.hermitian_deviation();
        if h > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("hermiticity deviation {h:e}")));
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let w = eigvals_hermitian(&self.matrix)?;
        let min = w.last().copied().unwrap_or(0.0);
        if min < -EIG_CLAMP {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn slots(&self) -> &[String] {
        &self.slots
    }

    pub fn n_qubits(&self) -> usize {
        self.slots.len()
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn entry(&self, r: usize, c: usize) -> C64 {
        self.matrix[(r, c)]
    }

    pub fn slot_index(&self, label: &str) -> Option<usize> {
        self.slots.iter().position(|s| s == label)
    }

    /// Same matrix, new labels.
    pub fn relabel(&self, slots: &[&str]) -> Result<Self> {
        Self::new_unchecked(self.matrix.clone(), slots)
    }

    /// `self ⊗ other`; labels must not collide.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let mut slots = self.slots.clone();
        slots.extend(other.slots.iter().cloned());
        Self::from_parts(self.matrix.kron(&other.matrix), slots)
    }

    /// `U ρ U†` for a unitary on the whole register.
    pub fn evolve(&self, u: &ComplexMatrix) -> Self {
        Self { matrix: self.matrix.conjugate_by(u), slots: self.slots.clone() }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigvals_hermitian(&self.matrix.hermitian_part()).expect("hermitian part is Hermitian")
    }

    /// Reduced state over `keep`, in the register's relative order.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::InvalidSlots("keep set is empty".into()));
        }
        let mut positions = Vec::with_capacity(keep.len());
        for k in keep {
            let p = self
                .slot_index(k)
                .ok_or_else(|| Error::InvalidSlots(format!("unknown slot {k:?}")))?;
            if positions.contains(&p) {
                return Err(Error::InvalidSlots(format!("slot {k:?} listed twice")));
            }
            positions.push(p);
        }
        positions.sort_unstable();
        let matrix = partial_trace_positions(&self.matrix, self.n_qubits(), &positions);
        let slots = positions.iter().map(|&p| self.slots[p].clone()).collect();
        Self::from_parts(matrix, slots)
    }

    /// Partial transpose on one slot.
    pub fn partial_transpose(&self, slot: &str) -> Result<ComplexMatrix> {
        let p = self
            .slot_index(slot)
            .ok_or_else(|| Error::InvalidSlots(format!("unknown slot {slot:?}")))?;
        let bit = 1usize << (self.n_qubits() - 1 - p);
        let d = self.dim();
        Ok(ComplexMatrix::from_fn(d, d, |r, c| {
            let (rb, cb) = (r & bit, c & bit);
            let r2 = (r & !bit) | cb;
            let c2 = (c & !bit) | rb;
            self.matrix[(r2, c2)]
        }))
    }
}

/// Partial trace keeping the qubits at `keep` (sorted register positions).
pub(crate) fn partial_trace_positions(m: &ComplexMatrix, n: usize, keep: &[usize]) -> ComplexMatrix {
    let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
    let kd = 1usize << keep.len();
    let td = 1usize << traced.len();
    let full_index = |kept: usize, tr: usize| -> usize {
        let mut idx = 0usize;
        for (j, &p) in keep.iter().enumerate() {
            if (kept >> (keep.len() - 1 - j)) & 1 == 1 {
                idx |= 1 << (n - 1 - p);
            }
        }
        for (j, &p) in traced.iter().enumerate() {
            if (tr >> (traced.len() - 1 - j)) & 1 == 1 {
                idx |= 1 << (n - 1 - p);
            }
        }
        idx
    };
    ComplexMatrix::from_fn(kd, kd, |r, c| {
        (0..td).map(|t| m[(full_index(r, t), full_index(c, t))]).sum()
    })
}

pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    rho.partial_trace(keep)
}

/// `-Σ w log2 w` over the spectrum, with slightly negative eigenvalues clamped.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    entropy_of_spectrum(&rho.eigenvalues())
}

pub(crate) fn entropy_of_spectrum(w: &[f64]) -> f64 {
    w.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum::<f64>().max(0.0)
}

/// Trace distance `½ Σ |eig(a − b)|`.
pub fn trace_norm_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::Shape(format!("dimensions {} and {} differ", a.dim(), b.dim())));
    }
    matrix_trace_distance(a.matrix(), b.matrix())
}

pub(crate) fn matrix_trace_distance(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    let diff = (a - b).hermitian_part();
    Ok(0.5 * eigvals_hermitian(&diff)?.iter().map(|x| x.abs()).sum::<f64>())
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_tensor_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(tensor(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn projector_block_placement() {
        let p0 = ComplexMatrix::diag(&[c(1.0), c(0.0)]);
        let d = ComplexMatrix::diag(&[c(0.2), c(0.8)]);
        assert_eq!(tensor(&p0, &d), ComplexMatrix::diag(&[c(0.2), c(0.8), c(0.0), c(0.0)]));
    }

    #[test]
    fn ket0_tensor_random_state_sits_in_upper_left_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = DensityMatrix::random(&mut rng, &["s"]).unwrap();
        let p0 = ComplexMatrix::diag(&[c(1.0), c(0.0)]);
        let t = tensor(&p0, rho.matrix());
        for r in 0..4 {
            for col in 0..4 {
                let expected = if r < 2 && col < 2 { rho.entry(r, col) } else { ZERO };
                assert_eq!(t[(r, col)], expected);
            }
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert!(matches!(
            ComplexMatrix::new(1, 2, vec![ONE, C64::new(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
        assert!(ComplexMatrix::new(2, 2, vec![ONE]).is_err());
    }

    #[test]
    fn eig_of_diagonal_and_pauli_x() {
        let e = eig_hermitian(&ComplexMatrix::diag(&[c(0.3), c(0.7)])).unwrap();
        assert_eq!(e.values, vec![0.7, 0.3]);
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let e = eig_hermitian(&x).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-15 && (e.values[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [2usize, 4, 8, 16] {
            let g = ComplexMatrix::from_fn(n, n, |_, _| {
                C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
            });
            let h = g.hermitian_part();
            let e = eig_hermitian(&h).unwrap();
            let w: Vec<C64> = e.values.iter().map(|&x| c(x)).collect();
            let rec = e.vectors.matmul(&ComplexMatrix::diag(&w)).matmul(&e.vectors.dagger());
            assert!(rec.max_abs_diff(&h) < 1e-10, "n={n}");
            assert!(e.vectors.unitary_deviation() < 1e-10);
            assert!(e.values.windows(2).all(|p| p[0] >= p[1]));
        }
    }

    #[test]
    fn entropy_examples() {
        let pure = PureState::normalized(vec![c(1.0), C64::new(0.0, 1.0)]).unwrap();
        assert!(von_neumann_entropy(&pure.to_density(&["s"]).unwrap()).abs() < 1e-12);
        let mixed = DensityMatrix::maximally_mixed(&["s"]).unwrap();
        assert!((von_neumann_entropy(&mixed) - 1.0).abs() < 1e-14);
        let d = DensityMatrix::qubit(0.25, 0.75, ZERO, "s").unwrap();
        let direct = -(0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((von_neumann_entropy(&d) - direct).abs() < 1e-14);
        assert!((direct - 0.811_278_124_459_132_8).abs() < 1e-15);
    }

    #[test]
    fn trace_distance_examples() {
        let z0 = PureState::basis(2, 0).to_density(&["s"]).unwrap();
        let z1 = PureState::basis(2, 1).to_density(&["s"]).unwrap();
        let mixed = DensityMatrix::maximally_mixed(&["s"]).unwrap();
        assert!(trace_norm_distance(&z0, &z0).unwrap().abs() < 1e-15);
        assert!((trace_norm_distance(&z0, &z1).unwrap() - 1.0).abs() < 1e-14);
        assert!((trace_norm_distance(&z0, &mixed).unwrap() - 0.5).abs() < 1e-14);
        let two = DensityMatrix::maximally_mixed(&["a", "b"]).unwrap();
        assert!(matches!(trace_norm_distance(&z0, &two), Err(Error::Shape(_))));
    }

    #[test]
    fn partial_trace_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = DensityMatrix::random(&mut rng, &["a"]).unwrap();
        let b = DensityMatrix::random(&mut rng, &["b"]).unwrap();
        let ab = a.tensor(&b).unwrap();
        assert!(ab.partial_trace(&["a"]).unwrap().matrix().max_abs_diff(a.matrix()) < 1e-14);
        assert!(ab.partial_trace(&["b"]).unwrap().matrix().max_abs_diff(b.matrix()) < 1e-14);

        let s = 0.5f64.sqrt();
        let bell = PureState::new(vec![c(s), ZERO, ZERO, c(s)]).unwrap();
        let bell = bell.to_density(&["a", "b"]).unwrap();
        let half = DensityMatrix::maximally_mixed(&["a"]).unwrap();
        assert!(bell.partial_trace(&["a"]).unwrap().matrix().max_abs_diff(half.matrix()) < 1e-15);
        assert!(bell.partial_trace(&["b"]).unwrap().matrix().max_abs_diff(half.matrix()) < 1e-15);

        assert!(matches!(ab.partial_trace(&["c"]), Err(Error::InvalidSlots(_))));
        assert!(matches!(ab.partial_trace(&[]), Err(Error::InvalidSlots(_))));
        assert!(matches!(ab.partial_trace(&["a", "a"]), Err(Error::InvalidSlots(_))));
    }

    #[test]
    fn partial_trace_keeps_relative_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = DensityMatrix::random(&mut rng, &["a"]).unwrap();
        let b = DensityMatrix::random(&mut rng, &["b"]).unwrap();
        let cst = DensityMatrix::random(&mut rng, &["c"]).unwrap();
        let abc = a.tensor(&b).unwrap().tensor(&cst).unwrap();
        let ac = abc.partial_trace(&["c", "a"]).unwrap();
        assert_eq!(ac.slots(), &["a".to_string(), "c".to_string()]);
        let direct = a.tensor(&cst).unwrap();
        assert!(ac.matrix().max_abs_diff(direct.matrix()) < 1e-14);
    }

    #[test]
    fn density_validation() {
        let bad = ComplexMatrix::from_real_rows(&[&[1.2, 0.0], &[0.0, -0.2]]).unwrap();
        assert!(matches!(DensityMatrix::new(bad, &["s"]), Err(Error::InvalidState(_))));
        let bad = ComplexMatrix::from_real_rows(&[&[0.5, 0.0], &[0.0, 0.4]]).unwrap();
        assert!(DensityMatrix::new(bad, &["s"]).is_err());
        let shape = ComplexMatrix::identity(4);
        assert!(matches!(DensityMatrix::new(shape, &["s"]), Err(Error::Shape(_))));
    }

    #[test]
    fn inverse_and_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = ComplexMatrix::from_fn(5, 5, |_, _| C64::new(rng.gen(), rng.gen()));
        let inv = inverse(&a).unwrap();
        assert!(a.matmul(&inv).max_abs_diff(&ComplexMatrix::identity(5)) < 1e-10);
        let sing = ComplexMatrix::diag(&[c(1.0), c(1e-3), c(0.0)]);
        assert!(min_singular_value(&sing).unwrap() < 1e-12);
        assert!(inverse(&sing).is_err());
    }

    #[test]
    fn partial_transpose_of_bell_has_negative_eigenvalue() {
        let s = 0.5f64.sqrt();
        let bell = PureState::new(vec![c(s), ZERO, ZERO, c(s)]).unwrap();
        let bell = bell.to_density(&["a", "b"]).unwrap();
        let pt = bell.partial_transpose("b").unwrap();
        let w = eigvals_hermitian(&pt).unwrap();
        assert!((w[3] + 0.5).abs() < 1e-14);
    }
}
