//! Exact statevector simulation over named qubit registers.
//!
//! Amplitudes are stored as a flat dense array indexed by basis state, with
//! register 0 occupying the least significant bits. All gate kernels are
//! deterministic; measurement sampling is seeded.

use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::rng::seeded_rng;
use rand::Rng;

/// Default ceiling on total qubits (2^26 amplitudes ~ 1 GiB).
pub const DEFAULT_QUBIT_CAP: usize = 26;

/// Current qubit cap; `EIGENPOWER_QUBIT_CAP` overrides the default.
pub fn qubit_cap() -> usize {
    std::env::var("EIGENPOWER_QUBIT_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_QUBIT_CAP)
}

/// A contiguous run of qubits within a layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Register {
    pub offset: usize,
    pub width: usize,
}

impl Register {
    pub fn span(offset: usize, width: usize) -> Self {
        Self { offset, width }
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.offset..self.offset + self.width
    }

    pub fn dim(&self) -> usize {
        1 << self.width
    }

    /// Value of this register within a basis-state index.
    #[inline]
    pub fn value_of(&self, index: usize) -> usize {
        (index >> self.offset) & (self.dim() - 1)
    }
}

/// Named, disjoint registers covering qubits [0, q).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisterLayout {
    names: Vec<String>,
    registers: Vec<Register>,
    total: usize,
}

impl RegisterLayout {
    /// Registers are packed in order, the first at the least significant bits.
    pub fn new(spec: &[(&str, usize)]) -> Self {
        let mut names = Vec::with_capacity(spec.len());
        let mut registers = Vec::with_capacity(spec.len());
        let mut offset = 0;
        for (name, width) in spec {
            names.push(name.to_string());
            registers.push(Register::span(offset, *width));
            offset += width;
        }
        Self {
            names,
            registers,
            total: offset,
        }
    }

    pub fn total_qubits(&self) -> usize {
        self.total
    }

    pub fn register(&self, name: &str) -> Result<Register> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.registers[i])
            .ok_or_else(|| Error::NoSuchRegister(name.to_string()))
    }

    /// New layout with one more register appended above the existing qubits.
    pub fn extended(&self, name: &str, width: usize) -> Self {
        let mut names = self.names.clone();
        let mut registers = self.registers.clone();
        names.push(name.to_string());
        registers.push(Register::span(self.total, width));
        Self {
            names,
            registers,
            total: self.total + width,
        }
    }
}

/// Dense 2^q statevector with its register layout.
#[derive(Debug, Clone)]
pub struct StateVector {
    layout: RegisterLayout,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amps_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Build from raw amplitudes without a normalization check. Intended for
    /// tests and diagnostics; normal construction goes through `init_zero`.
    pub fn from_amplitudes_unchecked(layout: RegisterLayout, amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() != 1 << layout.total_qubits() {
            return Err(Error::DimensionMismatch {
                expected: 1 << layout.total_qubits(),
                actual: amps.len(),
            });
        }
        Ok(Self { layout, amps })
    }

    /// Debug dump: {"q": int, "amps": [[re, im], ...]} at full precision.
    pub fn to_debug_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump {
            q: usize,
            amps: Vec<[f64; 2]>,
        }
        let dump = Dump {
            q: self.layout.total_qubits(),
            amps: self.amps.iter().map(|a| [a.re, a.im]).collect(),
        };
        serde_json::to_string(&dump).expect("dump serialization cannot fail")
    }
}

/// |00...0> over the layout, subject to the qubit cap.
pub fn init_zero(layout: &RegisterLayout) -> Result<StateVector> {
    init_zero_with_cap(layout, qubit_cap())
}

pub fn init_zero_with_cap(layout: &RegisterLayout, cap: usize) -> Result<StateVector> {
    let q = layout.total_qubits();
    if q > cap {
        return Err(Error::TooManyQubits { requested: q, cap });
    }
    let mut amps = vec![Complex64::ZERO; 1 << q];
    amps[0] = Complex64::ONE;
    Ok(StateVector {
        layout: layout.clone(),
        amps,
    })
}

/// Insert zero bits at the (ascending) gate positions of a compressed rank.
#[inline]
fn expand_index(rank: usize, gate_bits: &[usize]) -> usize {
    let mut idx = rank;
    for &b in gate_bits {
        let low = idx & ((1usize << b) - 1);
        idx = ((idx >> b) << (b + 1)) | low;
    }
    idx
}

fn check_controls(controls: &[(usize, bool)], total: usize, gate_bits: &[usize]) -> Result<()> {
    for &(q, _) in controls {
        if q >= total {
            return Err(Error::OverlappingRegisters(format!(
                "control qubit {q} outside the {total}-qubit layout"
            )));
        }
        if gate_bits.contains(&q) {
            return Err(Error::OverlappingRegisters(format!(
                "control qubit {q} overlaps the gate target"
            )));
        }
    }
    Ok(())
}

/// Core kernel: apply a 2^w x 2^w unitary to the listed qubits on every basis
/// group whose control bits match.
pub fn apply_gate(
    state: &mut StateVector,
    u: &ComplexMatrix,
    qubits: &[usize],
    controls: &[(usize, bool)],
) -> Result<()> {
    let w = qubits.len();
    let total = state.layout.total_qubits();
    if u.dim() != 1 << w {
        return Err(Error::DimensionMismatch {
            expected: 1 << w,
            actual: u.dim(),
        });
    }
    for &q in qubits {
        if q >= total {
            return Err(Error::DimensionMismatch {
                expected: total,
                actual: q + 1,
            });
        }
    }
    let mut sorted_bits = qubits.to_vec();
    sorted_bits.sort_unstable();
    sorted_bits.dedup();
    if sorted_bits.len() != w {
        return Err(Error::OverlappingRegisters("duplicate gate qubits".into()));
    }
    check_controls(controls, total, qubits)?;
    let dev = u.unitarity_deviation();
    if dev > 1e-8 {
        return Err(Error::NotUnitary {
            deviation: dev,
            tol: 1e-8,
        });
    }

    let dim = 1 << w;
    // offset contributed by each gate sub-index bit
    let bit_offsets: Vec<usize> = qubits.iter().map(|&q| 1usize << q).collect();
    let mut offsets = vec![0usize; dim];
    for (x, slot) in offsets.iter_mut().enumerate() {
        let mut off = 0;
        for (t, &bo) in bit_offsets.iter().enumerate() {
            if (x >> t) & 1 == 1 {
                off += bo;
            }
        }
        *slot = off;
    }

    let groups = 1usize << (total - w);
    let mut gathered = vec![Complex64::ZERO; dim];
    for rank in 0..groups {
        let base = expand_index(rank, &sorted_bits);
        if !controls
            .iter()
            .all(|&(q, bit)| ((base >> q) & 1 == 1) == bit)
        {
            continue;
        }
        for (x, off) in offsets.iter().enumerate() {
            gathered[x] = state.amps[base + off];
        }
        for (y, off) in offsets.iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for (x, g) in gathered.iter().enumerate() {
                acc += u.get(y, x) * g;
            }
            state.amps[base + off] = acc;
        }
    }
    Ok(())
}

/// Diagonal kernel: multiply each matching amplitude by `phases[value]`,
/// where `value` gathers the listed qubit bits in order.
pub fn apply_diagonal(
    state: &mut StateVector,
    phases: &[Complex64],
    qubits: &[usize],
    controls: &[(usize, bool)],
) -> Result<()> {
    let w = qubits.len();
    let total = state.layout.total_qubits();
    if phases.len() != 1 << w {
        return Err(Error::DimensionMismatch {
            expected: 1 << w,
            actual: phases.len(),
        });
    }
    check_controls(controls, total, qubits)?;
    for (idx, amp) in state.amps.iter_mut().enumerate() {
        if !controls
            .iter()
            .all(|&(q, bit)| ((idx >> q) & 1 == 1) == bit)
        {
            continue;
        }
        let mut value = 0usize;
        for (t, &q) in qubits.iter().enumerate() {
            value |= ((idx >> q) & 1) << t;
        }
        *amp *= phases[value];
    }
    Ok(())
}

/// Apply a unitary to a whole named register.
pub fn apply_unitary(state: &mut StateVector, u: &ComplexMatrix, target: Register) -> Result<()> {
    let qubits: Vec<usize> = target.qubits().collect();
    apply_gate(state, u, &qubits, &[])
}

/// Apply a unitary to a register conditioned on control qubits; controls may
/// require bit value 0 (anti-control) or 1.
pub fn apply_controlled_unitary(
    state: &mut StateVector,
    u: &ComplexMatrix,
    target: Register,
    controls: &[(usize, bool)],
) -> Result<()> {
    let qubits: Vec<usize> = target.qubits().collect();
    apply_gate(state, u, &qubits, controls)
}

fn hadamard_matrix() -> ComplexMatrix {
    let h = 1.0 / 2f64.sqrt();
    ComplexMatrix::from_entries(
        2,
        vec![
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(h, 0.0),
            Complex64::new(-h, 0.0),
        ],
    )
    .expect("2x2")
}

fn swap_matrix() -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(4);
    m.set(0, 0, Complex64::ONE);
    m.set(1, 2, Complex64::ONE);
    m.set(2, 1, Complex64::ONE);
    m.set(3, 3, Complex64::ONE);
    m
}

fn controlled_phase_diag(angle: f64) -> Vec<Complex64> {
    vec![
        Complex64::ONE,
        Complex64::ONE,
        Complex64::ONE,
        Complex64::from_polar(1.0, angle),
    ]
}

/// Quantum Fourier transform on a register.
///
/// Forward convention: amplitude kernel exp(+2*pi*i*x*y/T)/sqrt(T). The inverse
/// conjugates it. Implemented as the standard H / controlled-phase butterfly
/// with a final bit reversal.
pub fn qft(state: &mut StateVector, target: Register, inverse: bool) -> Result<()> {
    let w = target.width;
    let o = target.offset;
    let h = hadamard_matrix();
    let swap = swap_matrix();
    if !inverse {
        for i in (0..w).rev() {
            apply_gate(state, &h, &[o + i], &[])?;
            for j in (0..i).rev() {
                let angle = PI / (1u64 << (i - j)) as f64;
                apply_diagonal(state, &controlled_phase_diag(angle), &[o + j, o + i], &[])?;
            }
        }
        for i in 0..w / 2 {
            apply_gate(state, &swap, &[o + i, o + w - 1 - i], &[])?;
        }
    } else {
        for i in 0..w / 2 {
            apply_gate(state, &swap, &[o + i, o + w - 1 - i], &[])?;
        }
        for i in 0..w {
            for j in 0..i {
                let angle = -PI / (1u64 << (i - j)) as f64;
                apply_diagonal(state, &controlled_phase_diag(angle), &[o + j, o + i], &[])?;
            }
            apply_gate(state, &h, &[o + i], &[])?;
        }
    }
    Ok(())
}

/// Marginal probability distribution of a register.
pub fn register_distribution(state: &StateVector, target: Register) -> Vec<f64> {
    let mut probs = vec![0.0; target.dim()];
    for (idx, amp) in state.amps.iter().enumerate() {
        probs[target.value_of(idx)] += amp.norm_sqr();
    }
    probs
}

/// Sample `shots` outcomes from the register's marginal distribution.
/// Deterministic given the seed.
pub fn measure_register(
    state: &StateVector,
    target: Register,
    shots: u64,
    seed: u64,
) -> BTreeMap<u64, u64> {
    let probs = register_distribution(state, target);
    let total: f64 = probs.iter().sum();
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p / total;
        cumulative.push(acc);
    }
    let mut rng = seeded_rng(seed);
    let mut histogram = BTreeMap::new();
    for _ in 0..shots {
        let u: f64 = rng.random();
        let outcome = cumulative.partition_point(|&c| c < u).min(probs.len() - 1);
        *histogram.entry(outcome as u64).or_insert(0) += 1;
    }
    histogram
}

/// <a|b> over identical layouts.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<Complex64> {
    if a.layout != b.layout {
        return Err(Error::LayoutMismatch);
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_entries(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap()
    }

    /// Random unitary by Gram-Schmidt on a random complex matrix.
    fn random_unitary(dim: usize, seed: u64) -> ComplexMatrix {
        let mut rng = seeded_rng(seed);
        let mut cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        for i in 0..dim {
            for j in 0..i {
                let proj = crate::linalg::vec_inner(&cols[j], &cols[i]);
                let prev = cols[j].clone();
                for (x, p) in cols[i].iter_mut().zip(&prev) {
                    *x -= proj * p;
                }
            }
            crate::linalg::vec_normalize(&mut cols[i]).unwrap();
        }
        let mut m = ComplexMatrix::zeros(dim);
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    fn random_state(layout: &RegisterLayout, seed: u64) -> StateVector {
        let mut rng = seeded_rng(seed);
        let dim = 1 << layout.total_qubits();
        let mut amps: Vec<Complex64> = (0..dim)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes_unchecked(layout.clone(), amps).unwrap()
    }

    #[test]
    fn init_zero_single_qubit() {
        let layout = RegisterLayout::new(&[("q", 1)]);
        let s = init_zero(&layout).unwrap();
        assert_eq!(s.amplitudes(), &[Complex64::ONE, Complex64::ZERO]);
    }

    #[test]
    fn init_zero_three_qubits() {
        let layout = RegisterLayout::new(&[("a", 1), ("b", 2)]);
        let s = init_zero(&layout).unwrap();
        assert_eq!(s.amplitudes().len(), 8);
        assert_eq!(s.amplitudes()[0], Complex64::ONE);
        assert!(s.amplitudes()[1..].iter().all(|a| *a == Complex64::ZERO));
    }

    #[test]
    fn cap_boundary_rejected_without_allocation() {
        let layout = RegisterLayout::new(&[("big", 27)]);
        match init_zero_with_cap(&layout, 26) {
            Err(Error::TooManyQubits {
                requested: 27,
                cap: 26,
            }) => {}
            other => panic!("expected TooManyQubits, got {other:?}"),
        }
    }

    #[test]
    fn x_flips_zero() {
        let layout = RegisterLayout::new(&[("q", 1)]);
        let mut s = init_zero(&layout).unwrap();
        apply_unitary(&mut s, &pauli_x(), layout.register("q").unwrap()).unwrap();
        assert_eq!(s.amplitudes()[0], Complex64::ZERO);
        assert!((s.amplitudes()[1] - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn hadamard_makes_plus_state() {
        let layout = RegisterLayout::new(&[("q", 1)]);
        let mut s = init_zero(&layout).unwrap();
        apply_unitary(&mut s, &hadamard_matrix(), layout.register("q").unwrap()).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((s.amplitudes()[0] - c(h, 0.0)).norm() < 1e-15);
        assert!((s.amplitudes()[1] - c(h, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn random_unitary_preserves_norm() {
        let layout = RegisterLayout::new(&[("r", 2), ("pad", 2)]);
        let mut s = random_state(&layout, 5);
        let u = random_unitary(4, 6);
        apply_unitary(&mut s, &u, layout.register("r").unwrap()).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn non_unitary_rejected() {
        let layout = RegisterLayout::new(&[("q", 1)]);
        let mut s = init_zero(&layout).unwrap();
        let bad = ComplexMatrix::from_entries(
            2,
            vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            apply_unitary(&mut s, &bad, layout.register("q").unwrap()),
            Err(Error::NotUnitary { .. })
        ));
    }

    #[test]
    fn cnot_cases() {
        let layout = RegisterLayout::new(&[("t", 1), ("c", 1)]);
        let target = layout.register("t").unwrap();
        // |c t| = |10>: control qubit 1 set -> flips target
        let mut s = init_zero(&layout).unwrap();
        apply_unitary(&mut s, &pauli_x(), layout.register("c").unwrap()).unwrap();
        apply_controlled_unitary(&mut s, &pauli_x(), target, &[(1, true)]).unwrap();
        assert!((s.amplitudes()[0b11] - Complex64::ONE).norm() < 1e-15);

        // |00>: control unset -> untouched
        let mut s = init_zero(&layout).unwrap();
        apply_controlled_unitary(&mut s, &pauli_x(), target, &[(1, true)]).unwrap();
        assert!((s.amplitudes()[0b00] - Complex64::ONE).norm() < 1e-15);

        // anti-control: |00> -> |01> (target flipped because control is 0)
        let mut s = init_zero(&layout).unwrap();
        apply_controlled_unitary(&mut s, &pauli_x(), target, &[(1, false)]).unwrap();
        assert!((s.amplitudes()[0b01] - Complex64::ONE).norm() < 1e-15);
    }

    #[test]
    fn control_violating_amplitudes_untouched_exactly() {
        let layout = RegisterLayout::new(&[("t", 1), ("c", 1), ("x", 1)]);
        let mut s = random_state(&layout, 7);
        let before = s.amplitudes().to_vec();
        apply_controlled_unitary(
            &mut s,
            &random_unitary(2, 8),
            layout.register("t").unwrap(),
            &[(1, true)],
        )
        .unwrap();
        for (idx, amp) in s.amplitudes().iter().enumerate() {
            if (idx >> 1) & 1 == 0 {
                assert_eq!(*amp, before[idx], "violating index {idx} changed");
            }
        }
    }

    #[test]
    fn control_overlapping_target_rejected() {
        let layout = RegisterLayout::new(&[("t", 2)]);
        let mut s = init_zero(&layout).unwrap();
        assert!(matches!(
            apply_controlled_unitary(
                &mut s,
                &random_unitary(4, 9),
                layout.register("t").unwrap(),
                &[(1, true)]
            ),
            Err(Error::OverlappingRegisters(_))
        ));
    }

    #[test]
    fn qft_single_qubit_is_hadamard() {
        let layout = RegisterLayout::new(&[("q", 1)]);
        let mut s = init_zero(&layout).unwrap();
        qft(&mut s, layout.register("q").unwrap(), false).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((s.amplitudes()[0] - c(h, 0.0)).norm() < 1e-12);
        assert!((s.amplitudes()[1] - c(h, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn qft_two_qubit_index_one() {
        // |01> = index 1; forward kernel gives (1, i, -1, -i)/2
        let layout = RegisterLayout::new(&[("q", 2)]);
        let mut s = init_zero(&layout).unwrap();
        apply_gate(&mut s, &pauli_x(), &[0], &[]).unwrap();
        qft(&mut s, layout.register("q").unwrap(), false).unwrap();
        let expect = [c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)];
        for (a, e) in s.amplitudes().iter().zip(&expect) {
            assert!((a - e).norm() < 1e-12, "{a} vs {e}");
        }
    }

    #[test]
    fn qft_matches_direct_dft_matrix() {
        // oracle: dense DFT matrix applied to the register
        let layout = RegisterLayout::new(&[("pad", 1), ("q", 3)]);
        let reg = layout.register("q").unwrap();
        let t = reg.dim();
        let mut dft = ComplexMatrix::zeros(t);
        for y in 0..t {
            for x in 0..t {
                let angle = 2.0 * PI * (x * y) as f64 / t as f64;
                dft.set(y, x, Complex64::from_polar(1.0 / (t as f64).sqrt(), angle));
            }
        }
        let s0 = random_state(&layout, 11);
        let mut via_qft = s0.clone();
        qft(&mut via_qft, reg, false).unwrap();
        let mut via_matrix = s0;
        apply_unitary(&mut via_matrix, &dft, reg).unwrap();
        for (a, b) in via_qft.amplitudes().iter().zip(via_matrix.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn qft_inverse_round_trip() {
        let layout = RegisterLayout::new(&[("q", 4), ("other", 2)]);
        let reg = layout.register("q").unwrap();
        let s0 = random_state(&layout, 13);
        let mut s = s0.clone();
        qft(&mut s, reg, false).unwrap();
        qft(&mut s, reg, true).unwrap();
        let mut max_diff = 0.0f64;
        for (a, b) in s.amplitudes().iter().zip(s0.amplitudes()) {
            max_diff = max_diff.max((a - b).norm());
        }
        assert!(max_diff < 1e-10);
    }

    #[test]
    fn measure_deterministic_state() {
        let layout = RegisterLayout::new(&[("q", 2)]);
        let s = init_zero(&layout).unwrap();
        let hist = measure_register(&s, layout.register("q").unwrap(), 100, 1);
        assert_eq!(hist.get(&0), Some(&100));
        assert_eq!(hist.len(), 1);
    }

    #[test]
    fn measure_plus_state_frequency() {
        // binomial CI oracle: 1e4 shots at p = 1/2 gives freq in [0.47, 0.53]
        // except with probability < 1e-2
        let layout = RegisterLayout::new(&[("q", 1)]);
        let mut s = init_zero(&layout).unwrap();
        apply_unitary(&mut s, &hadamard_matrix(), layout.register("q").unwrap()).unwrap();
        let hist = measure_register(&s, layout.register("q").unwrap(), 10_000, 202);
        let zeros = *hist.get(&0).unwrap_or(&0) as f64 / 10_000.0;
        assert!((0.47..=0.53).contains(&zeros), "freq {zeros}");
    }

    #[test]
    fn measure_same_seed_identical() {
        let layout = RegisterLayout::new(&[("q", 2)]);
        let mut s = init_zero(&layout).unwrap();
        apply_unitary(
            &mut s,
            &random_unitary(4, 15),
            layout.register("q").unwrap(),
        )
        .unwrap();
        let h1 = measure_register(&s, layout.register("q").unwrap(), 5000, 99);
        let h2 = measure_register(&s, layout.register("q").unwrap(), 5000, 99);
        assert_eq!(h1, h2);
    }

    #[test]
    fn inner_product_self_is_one() {
        let layout = RegisterLayout::new(&[("q", 3)]);
        let s = random_state(&layout, 17);
        let ip = inner_product(&s, &s).unwrap();
        assert!((ip - Complex64::ONE).norm() < 1e-12);
    }

    #[test]
    fn inner_product_orthogonal_basis_states() {
        let layout = RegisterLayout::new(&[("q", 1)]);
        let zero = init_zero(&layout).unwrap();
        let mut one = init_zero(&layout).unwrap();
        apply_unitary(&mut one, &pauli_x(), layout.register("q").unwrap()).unwrap();
        assert_eq!(inner_product(&zero, &one).unwrap(), Complex64::ZERO);
    }

    #[test]
    fn inner_product_reordered_summation_oracle() {
        let layout = RegisterLayout::new(&[("q", 4)]);
        let a = random_state(&layout, 19);
        let b = random_state(&layout, 23);
        let forward = inner_product(&a, &b).unwrap();
        let mut reversed = Complex64::ZERO;
        for i in (0..a.amplitudes().len()).rev() {
            reversed += a.amplitudes()[i].conj() * b.amplitudes()[i];
        }
        assert!((forward - reversed).norm() < 1e-13);
    }

    #[test]
    fn inner_product_layout_mismatch() {
        let a = init_zero(&RegisterLayout::new(&[("q", 2)])).unwrap();
        let b = init_zero(&RegisterLayout::new(&[("r", 2)])).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::LayoutMismatch)));
    }

    #[test]
    fn gate_application_is_linear() {
        let layout = RegisterLayout::new(&[("q", 3)]);
        let s1 = random_state(&layout, 29);
        let s2 = random_state(&layout, 31);
        let (alpha, beta) = (c(0.3, -0.4), c(0.7, 0.2));
        let combo: Vec<Complex64> = s1
            .amplitudes()
            .iter()
            .zip(s2.amplitudes())
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        let mut s_combo = StateVector::from_amplitudes_unchecked(layout.clone(), combo).unwrap();
        let u = random_unitary(4, 37);
        let mut t1 = s1;
        let mut t2 = s2;
        apply_gate(&mut t1, &u, &[1, 2], &[]).unwrap();
        apply_gate(&mut t2, &u, &[1, 2], &[]).unwrap();
        apply_gate(&mut s_combo, &u, &[1, 2], &[]).unwrap();
        for i in 0..s_combo.amplitudes().len() {
            let expect = alpha * t1.amplitudes()[i] + beta * t2.amplitudes()[i];
            assert!((s_combo.amplitudes()[i] - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn norm_preserved_across_kernels() {
        let layout = RegisterLayout::new(&[("a", 2), ("b", 3)]);
        let mut s = random_state(&layout, 41);
        apply_unitary(
            &mut s,
            &random_unitary(4, 43),
            layout.register("a").unwrap(),
        )
        .unwrap();
        qft(&mut s, layout.register("b").unwrap(), false).unwrap();
        apply_controlled_unitary(
            &mut s,
            &random_unitary(2, 47),
            Register::span(2, 1),
            &[(0, true), (1, false)],
        )
        .unwrap();
        assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn debug_dump_shape() {
        let layout = RegisterLayout::new(&[("q", 1)]);
        let s = init_zero(&layout).unwrap();
        assert_eq!(s.to_debug_json(), r#"{"q":1,"amps":[[1.0,0.0],[0.0,0.0]]}"#);
    }
}
