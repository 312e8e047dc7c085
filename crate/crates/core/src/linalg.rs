//! Dense complex linear algebra substrate.
//!
//! Hermitian validation, a cyclic-Jacobi eigendecomposition used as the
//! classical oracle for everything else, exact matrix exponentials, inverses,
//! spectral shifts, and the Hermitian embedding of non-Hermitian inputs.
//! Sized for desk-scale matrices (n <= 64); no sparse storage.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

/// Default relative threshold below which a spectrum counts as singular.
pub const SINGULAR_TOL_REL: f64 = 1e-10;

/// Relative gap under which the two largest-magnitude eigenvalues count as
/// degenerate for power-method purposes.
pub const DEGENERACY_TOL_REL: f64 = 1e-9;

/// Dense square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![Complex64::ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    pub fn from_entries(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(Self { dim, entries })
    }

    /// Diagonal matrix from real values.
    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, i, Complex64::new(v, 0.0));
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.entries[row * self.dim + col] = value;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.set(j, i, self.get(i, j).conj());
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: v.len(),
            });
        }
        let n = self.dim;
        let mut out = vec![Complex64::ZERO; n];
        for i in 0..n {
            let mut acc = Complex64::ZERO;
            for j in 0..n {
                acc += self.get(i, j) * v[j];
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: other.dim,
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest `|A[i][j] - conj(A[j][i])|` over all pairs.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.get(i, j) - self.get(j, i).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Max column-wise deviation of U†U from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let mut acc = Complex64::ZERO;
                for i in 0..n {
                    acc += self.get(i, a).conj() * self.get(i, b);
                }
                let target = if a == b {
                    Complex64::ONE
                } else {
                    Complex64::ZERO
                };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }

    /// Pad to the next power-of-two dimension with zero rows/columns.
    pub fn pad_to_power_of_two(&self) -> Self {
        let n = self.dim;
        let padded = n.next_power_of_two();
        if padded == n {
            return self.clone();
        }
        let mut out = Self::zeros(padded);
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, self.get(i, j));
            }
        }
        out
    }
}

/// A validated Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    matrix: ComplexMatrix,
    hermiticity_tol: f64,
}

impl HermitianMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn hermiticity_tol(&self) -> f64 {
        self.hermiticity_tol
    }
}

/// Check the Hermiticity invariant and wrap the matrix.
pub fn validate_hermitian(m: ComplexMatrix, tol: f64) -> Result<HermitianMatrix> {
    let asym = m.max_asymmetry();
    if asym > tol {
        return Err(Error::NotHermitian {
            max_asymmetry: asym,
            tol,
        });
    }
    Ok(HermitianMatrix {
        matrix: m,
        hermiticity_tol: tol,
    })
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues are sorted ascending by magnitude (ties ascending by signed
/// value); `vectors` holds the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    eigenvalues: Vec<f64>,
    vectors: ComplexMatrix,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Eigenvalues, ascending by |lambda|.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Largest-magnitude eigenvalue (signed).
    pub fn dominant_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Smallest-magnitude eigenvalue (signed).
    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn eigenvector(&self, i: usize) -> Vec<Complex64> {
        let n = self.dim();
        (0..n).map(|row| self.vectors.get(row, i)).collect()
    }

    /// Matrix whose columns are the eigenvectors.
    pub fn vectors(&self) -> &ComplexMatrix {
        &self.vectors
    }

    /// Spectral gap ratio p = |lambda_{n-1} / lambda_n|; 1.0 for n = 1.
    pub fn gap_ratio(&self) -> f64 {
        let n = self.dim();
        if n < 2 {
            return 1.0;
        }
        let top = self.eigenvalues[n - 1].abs();
        if top == 0.0 {
            return 1.0;
        }
        self.eigenvalues[n - 2].abs() / top
    }

    /// True when the two largest magnitudes are within the degeneracy tolerance.
    pub fn has_degenerate_top(&self) -> bool {
        let n = self.dim();
        if n < 2 {
            return false;
        }
        let top = self.eigenvalues[n - 1].abs();
        top - self.eigenvalues[n - 2].abs() < DEGENERACY_TOL_REL * top
    }

    /// Coefficients <E_i, x> of a vector in the eigenbasis.
    pub fn coefficients(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        let mut out = vec![Complex64::ZERO; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let mut acc = Complex64::ZERO;
            for row in 0..n {
                acc += self.vectors.get(row, i).conj() * x[row];
            }
            *slot = acc;
        }
        Ok(out)
    }

    /// Rebuild sum_i f(lambda_i) |E_i><E_i|.
    fn assemble(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.dim();
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let fk = f(self.eigenvalues[k]);
            for i in 0..n {
                let vik = self.vectors.get(i, k) * fk;
                for j in 0..n {
                    let v = out.get(i, j) + vik * self.vectors.get(j, k).conj();
                    out.set(i, j, v);
                }
            }
        }
        out
    }
}

/// Off-diagonal Frobenius norm, the Jacobi convergence measure.
fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let n = m.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += m.get(i, j).norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Brute-force eigendecomposition by cyclic Jacobi rotations.
///
/// Deterministic: fixed sweep order, no randomization. Convergence threshold
/// 1e-14 relative to the Frobenius norm, rotation cap 100 n^2.
pub fn eigendecompose(a: &HermitianMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    let mut m = a.matrix().clone();
    // fold numerical asymmetry away so the iteration sees an exactly Hermitian input
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
            m.set(i, j, avg);
            m.set(j, i, avg.conj());
        }
        let d = m.get(i, i);
        m.set(i, i, Complex64::new(d.re, 0.0));
    }
    let mut v = ComplexMatrix::identity(n);
    let scale = m.frobenius_norm().max(1.0);
    let threshold = 1e-14 * scale;
    let max_rotations = 100 * n * n;
    let mut rotations = 0usize;

    if n > 1 {
        loop {
            let off = off_diagonal_norm(&m);
            if off <= threshold {
                break;
            }
            if rotations >= max_rotations {
                return Err(Error::ConvergenceFailure {
                    max_rotations,
                    off_norm: off,
                });
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let gamma = m.get(p, q);
                    let g = gamma.norm();
                    if g <= threshold / (n as f64) {
                        continue;
                    }
                    rotations += 1;
                    let alpha = m.get(p, p).re;
                    let beta = m.get(q, q).re;
                    // phase that realigns the off-diagonal entry onto the real axis
                    let phase = gamma / g;
                    // real rotation zeroing [[alpha, g], [g, beta]]
                    let tau = (beta - alpha) / (2.0 * g);
                    let sign = if tau >= 0.0 { 1.0 } else { -1.0 };
                    let t = -sign / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let s_pos = Complex64::new(s, 0.0) * phase; // sigma e^{i phi}
                    let s_neg = s_pos.conj();

                    // M <- G† M G with G[p][p]=G[q][q]=c, G[p][q]=-s e^{i phi}, G[q][p]=s e^{-i phi}
                    for i in 0..n {
                        let mip = m.get(i, p);
                        let miq = m.get(i, q);
                        m.set(i, p, mip * c + miq * s_neg);
                        m.set(i, q, miq * c - mip * s_pos);
                    }
                    for j in 0..n {
                        let mpj = m.get(p, j);
                        let mqj = m.get(q, j);
                        m.set(p, j, mpj * c + mqj * s_pos);
                        m.set(q, j, mqj * c - mpj * s_neg);
                    }
                    // restore exact Hermitian structure on the touched entries
                    m.set(p, q, m.get(q, p).conj());
                    let dpp = m.get(p, p);
                    let dqq = m.get(q, q);
                    m.set(p, p, Complex64::new(dpp.re, 0.0));
                    m.set(q, q, Complex64::new(dqq.re, 0.0));

                    // V <- V G
                    for i in 0..n {
                        let vip = v.get(i, p);
                        let viq = v.get(i, q);
                        v.set(i, p, vip * c + viq * s_neg);
                        v.set(i, q, viq * c - vip * s_pos);
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigs: Vec<f64> = (0..n).map(|i| m.get(i, i).re).collect();
    order.sort_by(|&i, &j| {
        let (ai, aj) = (eigs[i].abs(), eigs[j].abs());
        ai.partial_cmp(&aj)
            .unwrap()
            .then(eigs[i].partial_cmp(&eigs[j]).unwrap())
    });

    let mut sorted_vals = Vec::with_capacity(n);
    let mut sorted_vecs = ComplexMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        sorted_vals.push(eigs[old_col]);
        for row in 0..n {
            sorted_vecs.set(row, new_col, v.get(row, old_col));
        }
    }

    let decomposition = EigenDecomposition {
        eigenvalues: sorted_vals,
        vectors: sorted_vecs,
    };
    validate_decomposition(a, &decomposition)?;
    Ok(decomposition)
}

/// Enforce the decomposition invariants: residual, orthonormality, ordering.
fn validate_decomposition(a: &HermitianMatrix, d: &EigenDecomposition) -> Result<()> {
    let n = d.dim();
    let scale = a.matrix().frobenius_norm().max(1e-300);
    for i in 0..n {
        let e = d.eigenvector(i);
        let ae = a.matrix().matvec(&e)?;
        let mut res = 0.0;
        for r in 0..n {
            res += (ae[r] - e[r] * d.eigenvalues[i]).norm_sqr();
        }
        if res.sqrt() > 1e-10 * scale {
            return Err(Error::ConvergenceFailure {
                max_rotations: 0,
                off_norm: res.sqrt(),
            });
        }
    }
    if d.vectors.unitarity_deviation() > 1e-10 {
        return Err(Error::ConvergenceFailure {
            max_rotations: 0,
            off_norm: d.vectors.unitarity_deviation(),
        });
    }
    for i in 1..n {
        if d.eigenvalues[i - 1].abs() > d.eigenvalues[i].abs() + 1e-300 {
            return Err(Error::ConvergenceFailure {
                max_rotations: 0,
                off_norm: 0.0,
            });
        }
    }
    Ok(())
}

/// Exact unitary U = sum_i exp(-i lambda_i t) |E_i><E_i|.
pub fn matrix_exponential_unitary(a: &HermitianMatrix, t: f64) -> Result<ComplexMatrix> {
    let d = eigendecompose(a)?;
    let u = d.assemble(|lambda| Complex64::from_polar(1.0, -lambda * t));
    let dev = u.unitarity_deviation();
    if dev > 1e-10 {
        return Err(Error::NotUnitary {
            deviation: dev,
            tol: 1e-10,
        });
    }
    Ok(u)
}

/// Inverse through the eigendecomposition; rejects near-singular spectra.
pub fn inverse(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let d = eigendecompose(a)?;
    let top = d.dominant_eigenvalue().abs();
    let tol = SINGULAR_TOL_REL * top;
    let min_abs = d.smallest_eigenvalue().abs();
    if min_abs <= tol {
        return Err(Error::SingularMatrix {
            min_abs_eigenvalue: min_abs,
            tol,
        });
    }
    let mut inv = d.assemble(|lambda| Complex64::new(1.0 / lambda, 0.0));
    // symmetrize away rounding before re-validating
    let n = inv.dim();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (inv.get(i, j) + inv.get(j, i).conj()) * 0.5;
            inv.set(i, j, avg);
            inv.set(j, i, avg.conj());
        }
        let di = inv.get(i, i);
        inv.set(i, i, Complex64::new(di.re, 0.0));
    }
    validate_hermitian(inv, 1e-12)
}

/// Hermitian embedding [[0, A], [A†, 0]] of an arbitrary square matrix.
pub fn hermitian_embedding(m: &ComplexMatrix) -> Result<HermitianMatrix> {
    let n = m.dim();
    let mut out = ComplexMatrix::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            out.set(i, n + j, m.get(i, j));
            out.set(n + j, i, m.get(i, j).conj());
        }
    }
    validate_hermitian(out, 1e-14)
}

/// Spectral shift A - cI; eigenvectors unchanged, eigenvalues shifted by -c.
pub fn shift(a: &HermitianMatrix, c: f64) -> HermitianMatrix {
    let mut m = a.matrix().clone();
    let n = m.dim();
    for i in 0..n {
        let d = m.get(i, i);
        m.set(i, i, d - Complex64::new(c, 0.0));
    }
    HermitianMatrix {
        matrix: m,
        hermiticity_tol: a.hermiticity_tol,
    }
}

/// Haar-like random unitary: Gram-Schmidt over a seeded complex Gaussian
/// matrix. Deterministic given the seed.
pub fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
    use rand::Rng;
    use rand_distr::StandardNormal;
    let mut rng = crate::rng::seeded_rng(seed);
    let mut cols: Vec<Vec<Complex64>> = (0..dim)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect();
    for i in 0..dim {
        for j in 0..i {
            let proj = vec_inner(&cols[j], &cols[i]);
            let prev = cols[j].clone();
            for (x, p) in cols[i].iter_mut().zip(&prev) {
                *x -= proj * p;
            }
        }
        vec_normalize(&mut cols[i]).expect("Gaussian column cannot be zero");
    }
    let mut m = ComplexMatrix::zeros(dim);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    m
}

/// Deterministic unitary whose first column is the given unit vector.
///
/// Completes the column with Gram-Schmidt over the standard basis, skipping
/// candidates that become degenerate. Used to turn target states into
/// preparation unitaries U with U|0> = w.
pub fn unitary_with_first_column(w: &[Complex64]) -> Result<ComplexMatrix> {
    let n = w.len();
    let norm = vec_norm(w);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "preparation target must be unit norm, got {norm}"
        )));
    }
    let mut cols: Vec<Vec<Complex64>> = vec![w.to_vec()];
    for basis in 0..n {
        if cols.len() == n {
            break;
        }
        let mut cand = vec![Complex64::ZERO; n];
        cand[basis] = Complex64::ONE;
        for col in &cols {
            let proj = vec_inner(col, &cand);
            for (c, p) in cand.iter_mut().zip(col) {
                *c -= proj * p;
            }
        }
        let cn = vec_norm(&cand);
        if cn > 1e-8 {
            for c in cand.iter_mut() {
                *c /= cn;
            }
            // second orthogonalization pass for numerical orthogonality
            for col in &cols {
                let proj = vec_inner(col, &cand);
                for (c, p) in cand.iter_mut().zip(col) {
                    *c -= proj * p;
                }
            }
            let cn2 = vec_norm(&cand);
            for c in cand.iter_mut() {
                *c /= cn2;
            }
            cols.push(cand);
        }
    }
    if cols.len() != n {
        return Err(Error::InvalidConfig(
            "could not complete preparation unitary".into(),
        ));
    }
    let mut m = ComplexMatrix::zeros(n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// vector helpers shared across modules
// ---------------------------------------------------------------------------

pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn vec_normalize(v: &mut [Complex64]) -> Result<()> {
    let n = vec_norm(v);
    if n == 0.0 {
        return Err(Error::ZeroVector);
    }
    for c in v.iter_mut() {
        *c /= n;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// matrix file format: {"n": int, "entries": [[re, im], ...]} row-major
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    entries: Vec<[f64; 2]>,
}

pub fn matrix_to_json(m: &ComplexMatrix) -> String {
    let file = MatrixFile {
        n: m.dim(),
        entries: m.entries().iter().map(|c| [c.re, c.im]).collect(),
    };
    serde_json::to_string(&file).expect("matrix serialization cannot fail")
}

pub fn matrix_from_json(text: &str, origin: &str) -> Result<ComplexMatrix> {
    let file: MatrixFile = serde_json::from_str(text).map_err(|e| Error::ParseError {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let entries: Vec<Complex64> = file
        .entries
        .iter()
        .map(|[re, im]| Complex64::new(*re, *im))
        .collect();
    ComplexMatrix::from_entries(file.n, entries)
}

pub fn read_matrix_file(path: &Path) -> Result<ComplexMatrix> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e.to_string()))?;
    matrix_from_json(&text, &path.display().to_string())
}

pub fn write_matrix_file(path: &Path, m: &ComplexMatrix) -> Result<()> {
    std::fs::write(path, matrix_to_json(m)).map_err(|e| Error::Io(e.to_string()))
}
