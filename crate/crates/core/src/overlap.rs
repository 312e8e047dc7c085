//! Overlap estimation between pipeline states.
//!
//! Exact mode evaluates inner products directly (full statevector on the
//! circuit backend, closed form on the analytic backend). Shot mode runs the
//! Hadamard test: an ancilla-controlled superposition of the two state
//! preparations, measured in the X basis for the real part and the Y basis
//! for the imaginary part. Sampling acts on the exact final statevector, so
//! estimates carry sampling error only.

use num_complex::Complex64;

use crate::circuit::Program;
use crate::error::{Error, Result};
use crate::linalg::{eigendecompose, HermitianMatrix};
use crate::powerpipe::{
    build_phi, draw_initial_vector, mark_flags, BackendState, FlagBit, PipelineConfig,
    PipelineState, ResourceCounters,
};
use crate::rng::{derive_seed, seeded_rng};
use crate::statevector::{
    apply_diagonal, apply_gate, init_zero, inner_product, register_distribution, RegisterLayout,
    StateVector,
};
use rand::Rng;

/// An overlap value with its sampling metadata. `shots == 0` marks exact
/// mode, where both standard errors are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapEstimate {
    pub value: Complex64,
    pub shots: u64,
    /// Standard error of the real component, sqrt((1 - Re^2)/shots).
    pub std_error: f64,
    /// Standard error of the imaginary component.
    pub std_error_im: f64,
    pub seed: u64,
}

impl OverlapEstimate {
    pub fn exact(value: Complex64) -> Self {
        Self {
            value,
            shots: 0,
            std_error: 0.0,
            std_error_im: 0.0,
            seed: 0,
        }
    }
}

/// Whether the garbage branches of two pipeline states interfere, given
/// their flag markings: complementary flag bits make them orthogonal, as does
/// marking exactly one state of the pair.
fn garbage_contributes(a: Option<FlagBit>, b: Option<FlagBit>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

/// Exact overlap <a|b> of two pipeline states from the same run.
///
/// Circuit backend: full statevector inner product. Analytic backend: the
/// success-branch closed form plus, when the flag markings do not separate
/// them, the shared garbage-branch norms; the pair must come from the same
/// matrix, start vector, and config for the analytic garbage bookkeeping to
/// be meaningful (`estimate_pair_overlaps` guarantees this).
pub fn exact_overlap(a: &PipelineState, b: &PipelineState) -> Result<OverlapEstimate> {
    match (a.backend(), b.backend()) {
        (BackendState::Circuit(ca), BackendState::Circuit(cb)) => {
            let ip = inner_product(ca.statevector(), cb.statevector())?;
            Ok(OverlapEstimate::exact(ip))
        }
        (BackendState::Analytic(sa), BackendState::Analytic(sb)) => {
            if sa.coefficients().len() != sb.coefficients().len() {
                return Err(Error::LayoutMismatch);
            }
            let mut value: Complex64 = sa
                .coefficients()
                .iter()
                .zip(sb.coefficients())
                .map(|(x, y)| x.conj() * y)
                .sum();
            if garbage_contributes(a.flag(), b.flag()) {
                let shared = a.rounds().min(b.rounds());
                for l in 0..shared {
                    value += sa.garbage_norms()[l] * sb.garbage_norms()[l];
                }
            }
            Ok(OverlapEstimate::exact(value))
        }
        _ => Err(Error::LayoutMismatch),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementBasis {
    X,
    Y,
}

/// One Hadamard-test run: estimate of `<X>` or `<Y>` on the control ancilla with
/// its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

fn bernoulli_expectation_estimate(p_one: f64, shots: u64, seed: u64) -> ShotEstimate {
    let p = p_one.clamp(0.0, 1.0);
    let mut rng = seeded_rng(seed);
    let mut ones = 0u64;
    for _ in 0..shots {
        if rng.random::<f64>() < p {
            ones += 1;
        }
    }
    let estimate = 1.0 - 2.0 * (ones as f64) / (shots as f64);
    let std_error = ((1.0 - estimate * estimate).max(0.0) / shots as f64).sqrt();
    ShotEstimate {
        estimate,
        std_error,
    }
}

/// Hadamard test between two recorded state preparations over the same
/// layout.
///
/// Builds (|0> (x) U_a|0..0> + |1> (x) U_b|0..0>)/sqrt(2) by replaying every
/// gate of each preparation controlled on a fresh ancilla, rotates the
/// ancilla into the requested basis, and samples it. X-basis outcomes
/// estimate Re<a|b>, Y-basis Im<a|b>. Deterministic given the seed.
pub fn hadamard_test(
    layout: &RegisterLayout,
    prep_a: &Program,
    prep_b: &Program,
    shots: u64,
    basis: MeasurementBasis,
    seed: u64,
) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(Error::InvalidConfig(
            "hadamard test needs shots >= 1".into(),
        ));
    }
    let state = hadamard_interference_state(layout, prep_a, prep_b, basis)?;
    let anc = state.layout().register("hadamard_anc")?;
    let probs = register_distribution(&state, anc);
    Ok(bernoulli_expectation_estimate(probs[1], shots, seed))
}

/// Exact ancilla expectation of the Hadamard test (no sampling); used by
/// tests as the statevector oracle for the shot estimator.
pub fn hadamard_test_expectation(
    layout: &RegisterLayout,
    prep_a: &Program,
    prep_b: &Program,
    basis: MeasurementBasis,
) -> Result<f64> {
    let state = hadamard_interference_state(layout, prep_a, prep_b, basis)?;
    let anc = state.layout().register("hadamard_anc")?;
    let probs = register_distribution(&state, anc);
    Ok(probs[0] - probs[1])
}

fn hadamard_interference_state(
    layout: &RegisterLayout,
    prep_a: &Program,
    prep_b: &Program,
    basis: MeasurementBasis,
) -> Result<StateVector> {
    let combined = layout.extended("hadamard_anc", 1);
    let anc_qubit = combined.register("hadamard_anc")?.offset;
    let mut state = init_zero(&combined)?;
    let h = 1.0 / 2f64.sqrt();
    let hadamard = crate::linalg::ComplexMatrix::from_entries(
        2,
        vec![
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        ],
    )?;
    apply_gate(&mut state, &hadamard, &[anc_qubit], &[])?;
    prep_a.replay_controlled(&mut state, (anc_qubit, false))?;
    prep_b.replay_controlled(&mut state, (anc_qubit, true))?;
    if basis == MeasurementBasis::Y {
        // S† maps |+i> onto |+> so the closing Hadamard reads the Y basis
        apply_diagonal(
            &mut state,
            &[Complex64::ONE, Complex64::new(0.0, -1.0)],
            &[anc_qubit],
            &[],
        )?;
    }
    apply_gate(&mut state, &hadamard, &[anc_qubit], &[])?;
    Ok(state)
}

/// The two flagged pipeline overlaps of the ratio estimator.
#[derive(Debug, Clone)]
pub struct PairOverlaps {
    pub numerator: OverlapEstimate,
    pub denominator: OverlapEstimate,
    /// Counters of the canonical k-round pipeline build.
    pub pipeline_counters: ResourceCounters,
    /// Seed that produced the start vector (after any redraws).
    pub x0_seed_used: u64,
}

/// Build the flagged pipeline states and estimate the ratio numerator
/// <Phi'_{k+1}, Phi'_k> and denominator <Phi'_k, Phi''_k>.
///
/// `shots == 0` selects exact mode. In shot mode the circuit backend runs
/// four Hadamard tests (X and Y basis per overlap); the analytic backend
/// draws the same Bernoulli statistics around its exact overlap values.
pub fn estimate_pair_overlaps(
    a: &HermitianMatrix,
    cfg: &PipelineConfig,
    shots: u64,
    shot_seed: u64,
) -> Result<PairOverlaps> {
    let oracle = eigendecompose(a)?;
    let x0 = draw_initial_vector(a.dim(), cfg.x0_seed, &oracle)?;
    let k = cfg.k;
    let capacity = k + 1;

    let phi_k1 = mark_flags(build_phi(a, &x0, cfg, k + 1, capacity)?, FlagBit::Second)?;
    let phi_k = mark_flags(build_phi(a, &x0, cfg, k, capacity)?, FlagBit::First)?;
    let phi_k2 = mark_flags(build_phi(a, &x0, cfg, k, capacity)?, FlagBit::Second)?;
    // counters of the canonical k-round build, the unit the variant
    // comparison is stated in
    let pipeline_counters = phi_k.counters();

    let numerator_exact = exact_overlap(&phi_k1, &phi_k)?;
    let denominator_exact = exact_overlap(&phi_k, &phi_k2)?;

    if shots == 0 {
        return Ok(PairOverlaps {
            numerator: numerator_exact,
            denominator: denominator_exact,
            pipeline_counters,
            x0_seed_used: x0.seed(),
        });
    }

    let sampled = |exact: Complex64, stream: u64| -> Result<OverlapEstimate> {
        let (re, im) = match phi_k1.backend() {
            BackendState::Circuit(ca) => {
                let (cb, cc) = match (phi_k.backend(), phi_k2.backend()) {
                    (BackendState::Circuit(y), BackendState::Circuit(z)) => (y, z),
                    _ => return Err(Error::LayoutMismatch),
                };
                let (bra, ket) = if stream == 0 {
                    (ca.program(), cb.program())
                } else {
                    (cb.program(), cc.program())
                };
                let layout = ca.statevector().layout();
                let re = hadamard_test(
                    layout,
                    bra,
                    ket,
                    shots,
                    MeasurementBasis::X,
                    derive_seed(shot_seed, 2 * stream),
                )?;
                let im = hadamard_test(
                    layout,
                    bra,
                    ket,
                    shots,
                    MeasurementBasis::Y,
                    derive_seed(shot_seed, 2 * stream + 1),
                )?;
                (re, im)
            }
            BackendState::Analytic(_) => {
                let re = bernoulli_expectation_estimate(
                    (1.0 - exact.re) / 2.0,
                    shots,
                    derive_seed(shot_seed, 2 * stream),
                );
                let im = bernoulli_expectation_estimate(
                    (1.0 - exact.im) / 2.0,
                    shots,
                    derive_seed(shot_seed, 2 * stream + 1),
                );
                (re, im)
            }
        };
        Ok(OverlapEstimate {
            value: Complex64::new(re.estimate, im.estimate),
            shots,
            std_error: re.std_error,
            std_error_im: im.std_error,
            seed: shot_seed,
        })
    };

    Ok(PairOverlaps {
        numerator: sampled(numerator_exact.value, 0)?,
        denominator: sampled(denominator_exact.value, 1)?,
        pipeline_counters,
        x0_seed_used: x0.seed(),
    })
}
