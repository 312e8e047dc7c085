//! Deterministic test-matrix generation.
//!
//! `gapped` fixtures pin the spectral gap ratio |lambda_{n-1}/lambda_n|
//! exactly, which is what the convergence experiments sweep over.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{random_unitary, ComplexMatrix};
use crate::rng::seeded_rng;

pub const MAX_FIXTURE_DIM: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    /// params = the n diagonal values.
    Diagonal,
    /// params = `[]` or `[scale]`; Gaussian Hermitian, entries O(scale).
    RandomHermitian,
    /// params = `[p]` or `[p, scale]`: top eigenvalue `scale` (default 1), second
    /// eigenvalue p * scale exactly, the rest strictly inside (dense basis).
    Gapped,
}

impl std::str::FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diagonal" => Ok(Self::Diagonal),
            "random_hermitian" => Ok(Self::RandomHermitian),
            "gapped" => Ok(Self::Gapped),
            other => Err(Error::BadParams(format!("unknown fixture kind '{other}'"))),
        }
    }
}

/// Deterministic fixture matrix; identical (kind, n, seed, params) give
/// identical matrices.
pub fn generate_fixture(
    kind: FixtureKind,
    n: usize,
    seed: u64,
    params: &[f64],
) -> Result<ComplexMatrix> {
    if n == 0 || n > MAX_FIXTURE_DIM {
        return Err(Error::BadParams(format!(
            "fixture dimension {n} outside [1, {MAX_FIXTURE_DIM}]"
        )));
    }
    match kind {
        FixtureKind::Diagonal => {
            if params.len() != n {
                return Err(Error::BadParams(format!(
                    "diagonal fixture needs {n} values, got {}",
                    params.len()
                )));
            }
            Ok(ComplexMatrix::diagonal(params))
        }
        FixtureKind::RandomHermitian => {
            let scale = match params {
                [] => 1.0,
                [s] if *s > 0.0 => *s,
                _ => {
                    return Err(Error::BadParams(
                        "random_hermitian takes at most one positive scale".into(),
                    ))
                }
            };
            let mut rng = seeded_rng(seed);
            let mut m = ComplexMatrix::zeros(n);
            for i in 0..n {
                let d: f64 = rng.sample(StandardNormal);
                m.set(i, i, Complex64::new(d * scale, 0.0));
                for j in (i + 1)..n {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let v = Complex64::new(re * scale, im * scale);
                    m.set(i, j, v);
                    m.set(j, i, v.conj());
                }
            }
            Ok(m)
        }
        FixtureKind::Gapped => {
            let (p, scale) = match params {
                [p] => (*p, 1.0),
                [p, s] if *s > 0.0 => (*p, *s),
                _ => {
                    return Err(Error::BadParams(
                        "gapped fixture takes [p] or [p, scale]".into(),
                    ))
                }
            };
            if p.is_nan() || p <= 0.0 || p >= 1.0 {
                return Err(Error::BadParams(format!(
                    "gap ratio p = {p} must lie in (0, 1)"
                )));
            }
            if n < 2 {
                return Err(Error::BadParams("gapped fixture needs n >= 2".into()));
            }
            let mut rng = seeded_rng(seed);
            let mut eigenvalues = vec![0.0f64; n];
            eigenvalues[n - 1] = scale;
            eigenvalues[n - 2] = p * scale;
            // remaining magnitudes strictly below the gap eigenvalue
            for slot in eigenvalues.iter_mut().take(n.saturating_sub(2)) {
                let u: f64 = rng.random();
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                *slot = sign * u * 0.9 * p * scale;
            }
            let basis = random_unitary(n, seed.wrapping_add(0x5eed));
            // U diag U†, re-symmetrized against rounding
            let mut m = ComplexMatrix::zeros(n);
            for col in 0..n {
                for i in 0..n {
                    let vik = basis.get(i, col) * eigenvalues[col];
                    for j in 0..n {
                        let v = m.get(i, j) + vik * basis.get(j, col).conj();
                        m.set(i, j, v);
                    }
                }
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    let avg = (m.get(i, j) + m.get(j, i).conj()) * 0.5;
                    m.set(i, j, avg);
                    m.set(j, i, avg.conj());
                }
                let d = m.get(i, i);
                m.set(i, i, Complex64::new(d.re, 0.0));
            }
            Ok(m)
        }
    }
}
