// index-based loops over matrix entries read better than iterator chains here
#![allow(clippy::needless_range_loop)]

//! Largest-eigenvalue estimation by quantum power iteration.
//!
//! Estimates the largest-magnitude eigenvalue of a bounded Hermitian matrix
//! with an adaptive phase-estimation-plus-rotation pipeline, mirrored by an
//! exact analytic backend, with Hadamard-test overlap readout and a classical
//! power-method baseline. Extension modes cover the smallest-magnitude
//! eigenvalue (via the inverse), spectral shifts, and a hybrid Krylov solver
//! for several extremal eigenvalues.
//!
//! # Example
//!
//! ```
//! use eigenpower::eigensolve::{quantum_estimate_max, EstimateOptions};
//! use eigenpower::linalg::{validate_hermitian, ComplexMatrix};
//! use eigenpower::powerpipe::{Backend, PipelineConfig, Variant};
//! use eigenpower::qpe::{ClockWindow, PhaseConfig};
//!
//! let a = validate_hermitian(ComplexMatrix::diagonal(&[1.0, -3.0, 2.0]), 0.0)?;
//! let phase = PhaseConfig::with_default_t0(6, 3.5, ClockWindow::Sine)?;
//! let cfg = PipelineConfig::with_default_c(12, phase, Variant::Improved, Backend::Analytic, 7)?;
//! let report = quantum_estimate_max(&a, &cfg, &EstimateOptions::default())?;
//! assert!((report.lambda_estimates[0] + 3.0).abs() < 1e-3);
//! # Ok::<(), eigenpower::Error>(())
//! ```

pub mod circuit;
pub mod eigensolve;
pub mod error;
pub mod fixtures;
pub mod linalg;
pub mod overlap;
pub mod powerpipe;
pub mod qpe;
pub mod rng;
pub mod statevector;

pub use error::{Error, ErrorClass, Result};
