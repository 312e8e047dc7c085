//! Phase estimation building blocks specialized to Hermitian matrices.
//!
//! Signed eigenvalues are encoded into a two's-complement phase window: index
//! `round(lambda * t0 * T / 2pi) mod T`, negative eigenvalues in the upper
//! half [T/2, T). The controlled evolution advances the system by
//! `exp(-i A tau t0)` on clock branch tau, so one clock step corresponds to
//! evolution time t0; with the default t0 = pi/D the representable grid spans
//! the full window (-D, D] without wraparound collisions.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::circuit::Op;
use crate::error::{Error, Result};
use crate::linalg::{eigendecompose, unitary_with_first_column, HermitianMatrix};
use crate::statevector::{init_zero, Register, RegisterLayout, StateVector};

/// Clock-register window state used by phase estimation.
///
/// `Sine` is the half-period sine window with quartic leakage tails; its
/// central-bin mass is 8/pi^2 ~ 0.81 even for exactly representable
/// eigenvalues. `Uniform` reads representable eigenvalues exactly and is the
/// window the high-precision pipeline checks rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClockWindow {
    Sine,
    Uniform,
}

/// Phase-register configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConfig {
    b: usize,
    t0: f64,
    d: f64,
    window: ClockWindow,
}

impl PhaseConfig {
    /// Validates b >= 2 and the no-wraparound condition t0 * D / 2pi <= 1/2.
    pub fn new(b: usize, t0: f64, d: f64, window: ClockWindow) -> Result<Self> {
        if b < 2 {
            return Err(Error::InvalidConfig(format!(
                "phase register needs b >= 2, got {b}"
            )));
        }
        if d.is_nan() || t0.is_nan() || d <= 0.0 || t0 <= 0.0 {
            return Err(Error::InvalidConfig("t0 and D must be positive".into()));
        }
        if t0 * d / (2.0 * PI) > 0.5 + 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "t0 * D / 2pi = {} exceeds 1/2; signed eigenvalues would wrap",
                t0 * d / (2.0 * PI)
            )));
        }
        Ok(Self { b, t0, d, window })
    }

    /// Default evolution time t0 = pi/D: uses the whole phase window.
    pub fn with_default_t0(b: usize, d: f64, window: ClockWindow) -> Result<Self> {
        Self::new(b, PI / d, d, window)
    }

    pub fn bits(&self) -> usize {
        self.b
    }

    /// Clock dimension T = 2^b.
    pub fn t(&self) -> usize {
        1 << self.b
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Spectral bound D with |lambda| < D.
    pub fn bound(&self) -> f64 {
        self.d
    }

    pub fn window(&self) -> ClockWindow {
        self.window
    }

    /// Eigenvalue spacing of the phase grid.
    pub fn grid_spacing(&self) -> f64 {
        2.0 * PI / (self.t0 * self.t() as f64)
    }
}

/// Sine window amplitudes sqrt(2/T) sin(pi (tau + 1/2) / T).
pub fn sine_clock_amplitudes(b: usize) -> Vec<Complex64> {
    let t = 1usize << b;
    (0..t)
        .map(|tau| {
            let v = (2.0 / t as f64).sqrt() * (PI * (tau as f64 + 0.5) / t as f64).sin();
            Complex64::new(v, 0.0)
        })
        .collect()
}

/// Uniform window amplitudes 1/sqrt(T).
pub fn uniform_clock_amplitudes(b: usize) -> Vec<Complex64> {
    let t = 1usize << b;
    vec![Complex64::new(1.0 / (t as f64).sqrt(), 0.0); t]
}

pub fn clock_amplitudes(b: usize, window: ClockWindow) -> Vec<Complex64> {
    match window {
        ClockWindow::Sine => sine_clock_amplitudes(b),
        ClockWindow::Uniform => uniform_clock_amplitudes(b),
    }
}

/// Clock-register state per the configured window, on its own layout.
pub fn prepare_clock_state(cfg: &PhaseConfig) -> Result<StateVector> {
    let layout = RegisterLayout::new(&[("clock", cfg.bits())]);
    let mut state = init_zero(&layout)?;
    let prep = unitary_with_first_column(&clock_amplitudes(cfg.bits(), cfg.window()))?;
    crate::statevector::apply_unitary(&mut state, &prep, layout.register("clock")?)?;
    Ok(state)
}

/// Phase index encoding a signed eigenvalue; negative values land in the
/// upper half of the window.
pub fn phase_index_of_eigenvalue(lambda: f64, cfg: &PhaseConfig) -> Result<usize> {
    if lambda.abs() >= cfg.bound() {
        return Err(Error::OutOfBound {
            lambda,
            bound: cfg.bound(),
        });
    }
    let t = cfg.t() as i64;
    let raw = (lambda * cfg.t0() * cfg.t() as f64 / (2.0 * PI)).round() as i64;
    Ok(raw.rem_euclid(t) as usize)
}

/// Signed eigenvalue decoded from a phase index (two's complement window).
pub fn eigenvalue_of_phase_index(idx: usize, cfg: &PhaseConfig) -> f64 {
    let t = cfg.t();
    debug_assert!(idx < t);
    let signed = if idx < t / 2 {
        idx as f64
    } else {
        idx as f64 - t as f64
    };
    2.0 * PI * signed / (cfg.t0() * t as f64)
}

/// Whether an eigenvalue sits exactly on the phase grid.
pub fn is_representable(lambda: f64, cfg: &PhaseConfig, tol: f64) -> bool {
    let m = lambda * cfg.t0() * cfg.t() as f64 / (2.0 * PI);
    (m - m.round()).abs() <= tol
}

/// Dense DFT matrix with kernel exp(+-2 pi i x y / T)/sqrt(T), used where the
/// Fourier step is recorded as a single program op.
pub fn dft_matrix(width: usize, inverse: bool) -> crate::linalg::ComplexMatrix {
    let t = 1usize << width;
    let sign = if inverse { -1.0 } else { 1.0 };
    let scale = 1.0 / (t as f64).sqrt();
    let mut m = crate::linalg::ComplexMatrix::zeros(t);
    for y in 0..t {
        for x in 0..t {
            let angle = sign * 2.0 * PI * ((x * y) % t) as f64 / t as f64;
            m.set(y, x, Complex64::from_polar(scale, angle));
        }
    }
    m
}

/// Ops implementing the clock-window preparation on a clock register.
pub fn clock_preparation_ops(cfg: &PhaseConfig, clock: Register) -> Result<Vec<Op>> {
    if clock.width != cfg.bits() {
        return Err(Error::DimensionMismatch {
            expected: cfg.bits(),
            actual: clock.width,
        });
    }
    let prep = unitary_with_first_column(&clock_amplitudes(cfg.bits(), cfg.window()))?;
    Ok(vec![Op::gate(clock.qubits().collect(), prep)])
}

/// Ops implementing the inverse clock-window preparation.
pub fn clock_unpreparation_ops(cfg: &PhaseConfig, clock: Register) -> Result<Vec<Op>> {
    let prep = unitary_with_first_column(&clock_amplitudes(cfg.bits(), cfg.window()))?;
    Ok(vec![Op::gate(clock.qubits().collect(), prep.adjoint())])
}

/// Ops implementing sum_tau |tau><tau| (x) exp(-i A tau t0) as the exact
/// eigenbasis conjugation of a joint diagonal: V on the system, clock-system
/// phases, then V back. `inverse` runs exp(+i A tau t0).
pub fn evolution_ops(
    a: &HermitianMatrix,
    cfg: &PhaseConfig,
    clock: Register,
    system: Register,
    inverse: bool,
) -> Result<Vec<Op>> {
    if a.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            actual: a.dim(),
        });
    }
    if clock.width != cfg.bits() {
        return Err(Error::DimensionMismatch {
            expected: cfg.bits(),
            actual: clock.width,
        });
    }
    let decomposition = eigendecompose(a)?;
    let v = decomposition.vectors().clone();
    let sign = if inverse { 1.0 } else { -1.0 };

    // phases indexed by (system eigen index) | (clock value << system width)
    let n = system.dim();
    let t = cfg.t();
    let mut phases = Vec::with_capacity(n * t);
    for tau in 0..t {
        for lambda in decomposition.eigenvalues().iter().take(n) {
            phases.push(Complex64::from_polar(
                1.0,
                sign * lambda * tau as f64 * cfg.t0(),
            ));
        }
    }
    let mut joint_qubits: Vec<usize> = system.qubits().collect();
    joint_qubits.extend(clock.qubits());

    Ok(vec![
        Op::gate(system.qubits().collect(), v.adjoint()),
        Op::diagonal(joint_qubits, phases),
        Op::gate(system.qubits().collect(), v),
    ])
}

/// Apply the controlled evolution directly to a state.
pub fn controlled_evolution(
    state: &mut StateVector,
    a: &HermitianMatrix,
    cfg: &PhaseConfig,
    clock: Register,
    system: Register,
    inverse: bool,
) -> Result<()> {
    for op in evolution_ops(a, cfg, clock, system, inverse)? {
        op.apply(state, None)?;
    }
    Ok(())
}

/// System-only state from a normalized amplitude vector (dimension must be a
/// power of two; pad the matrix and vector first if it is not).
pub fn system_state_from_vector(x: &[Complex64]) -> Result<StateVector> {
    let n = x.len();
    if !n.is_power_of_two() {
        return Err(Error::InvalidConfig(format!(
            "system dimension {n} is not a power of two"
        )));
    }
    let width = n.trailing_zeros() as usize;
    let layout = RegisterLayout::new(&[("system", width)]);
    let mut state = init_zero(&layout)?;
    let prep = unitary_with_first_column(x)?;
    crate::statevector::apply_unitary(&mut state, &prep, layout.register("system")?)?;
    Ok(state)
}

/// Full phase estimation: clock-window preparation, controlled evolution,
/// then the Fourier transform that concentrates branch `lambda_i` on index
/// `phase_index_of_eigenvalue(lambda_i)`.
pub fn run_qpe(a: &HermitianMatrix, input: &StateVector, cfg: &PhaseConfig) -> Result<StateVector> {
    let n = a.dim();
    let in_total = input.layout().total_qubits();
    if n != (1usize << in_total) {
        return Err(Error::DimensionMismatch {
            expected: 1 << in_total,
            actual: n,
        });
    }
    let layout = RegisterLayout::new(&[("system", in_total), ("clock", cfg.bits())]);
    let system = layout.register("system")?;
    let clock = layout.register("clock")?;
    let mut state = init_zero(&layout)?;
    // tensor the input into the clock = |0...0> sector
    {
        let amps = state.amps_mut();
        amps[0] = Complex64::ZERO;
        for (i, v) in input.amplitudes().iter().enumerate() {
            amps[i] = *v;
        }
    }
    for op in clock_preparation_ops(cfg, clock)? {
        op.apply(&mut state, None)?;
    }
    controlled_evolution(&mut state, a, cfg, clock, system, false)?;
    crate::statevector::qft(&mut state, clock, false)?;
    Ok(state)
}
