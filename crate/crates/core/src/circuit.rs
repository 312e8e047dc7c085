//! Recorded gate programs.
//!
//! A `Program` is the gate-level trace of a state preparation. Recording it
//! lets the Hadamard test replay the whole preparation with every gate
//! conditioned on an extra ancilla, without special-casing any step.

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::ComplexMatrix;
use crate::statevector::{apply_diagonal, apply_gate, StateVector};

/// One recorded operation. Qubit indices refer to the layout the program was
/// built against; controls may require bit value 0 or 1.
#[derive(Debug, Clone)]
pub enum Op {
    Gate {
        qubits: Vec<usize>,
        matrix: ComplexMatrix,
        controls: Vec<(usize, bool)>,
    },
    Diagonal {
        qubits: Vec<usize>,
        phases: Vec<Complex64>,
        controls: Vec<(usize, bool)>,
    },
}

impl Op {
    pub fn gate(qubits: Vec<usize>, matrix: ComplexMatrix) -> Self {
        Op::Gate {
            qubits,
            matrix,
            controls: Vec::new(),
        }
    }

    pub fn controlled_gate(
        qubits: Vec<usize>,
        matrix: ComplexMatrix,
        controls: Vec<(usize, bool)>,
    ) -> Self {
        Op::Gate {
            qubits,
            matrix,
            controls,
        }
    }

    pub fn diagonal(qubits: Vec<usize>, phases: Vec<Complex64>) -> Self {
        Op::Diagonal {
            qubits,
            phases,
            controls: Vec::new(),
        }
    }

    /// Apply to a state, optionally adding one more control qubit.
    pub fn apply(
        &self,
        state: &mut StateVector,
        extra_control: Option<(usize, bool)>,
    ) -> Result<()> {
        match self {
            Op::Gate {
                qubits,
                matrix,
                controls,
            } => {
                let mut ctrl = controls.clone();
                if let Some(c) = extra_control {
                    ctrl.push(c);
                }
                apply_gate(state, matrix, qubits, &ctrl)
            }
            Op::Diagonal {
                qubits,
                phases,
                controls,
            } => {
                let mut ctrl = controls.clone();
                if let Some(c) = extra_control {
                    ctrl.push(c);
                }
                apply_diagonal(state, phases, qubits, &ctrl)
            }
        }
    }
}

/// Ordered list of operations from |00...0>.
#[derive(Debug, Clone, Default)]
pub struct Program {
    ops: Vec<Op>,
}

impl Program {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Record an op and apply it to the live state in one step.
    pub fn record(&mut self, state: &mut StateVector, op: Op) -> Result<()> {
        op.apply(state, None)?;
        self.ops.push(op);
        Ok(())
    }

    /// Replay every op onto a state.
    pub fn replay(&self, state: &mut StateVector) -> Result<()> {
        for op in &self.ops {
            op.apply(state, None)?;
        }
        Ok(())
    }

    /// Replay with every op additionally conditioned on one ancilla.
    pub fn replay_controlled(&self, state: &mut StateVector, control: (usize, bool)) -> Result<()> {
        for op in &self.ops {
            op.apply(state, Some(control))?;
        }
        Ok(())
    }
}
