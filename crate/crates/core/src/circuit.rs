//! Preparation circuits: code qubits plus flag qubits, CX gates, flag
//! measurements and a final transversal measurement.

use std::fmt;

use thiserror::Error;

use crate::css::StateLabel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Z => "Z",
            Basis::X => "X",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    /// Prepare |0> (basis Z) or |+> (basis X).
    Init { qubit: usize, basis: Basis },
    Cx { control: usize, target: usize },
    /// Flag measurement; `flag` is the outcome slot.
    Measure { qubit: usize, basis: Basis, flag: usize },
    /// Transversal readout of all code qubits.
    FinalMeasure { basis: Basis },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("invalid circuit at op {index}: {message}")]
    Invalid { index: usize, message: String },
}

/// Qubits `0..n_code` are code qubits (same index as in the code);
/// qubits `n_code..n_code + n_flags` are flags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub code: String,
    pub label: StateLabel,
    pub n_code: usize,
    pub n_flags: usize,
    pub ops: Vec<Op>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CircuitMetrics {
    pub cx_count: usize,
    pub depth: usize,
    pub flags: usize,
    pub max_simultaneous_qubits: usize,
}

impl Circuit {
    pub fn num_qubits(&self) -> usize {
        self.n_code + self.n_flags
    }

    pub fn is_flag(&self, q: usize) -> bool {
        q >= self.n_code
    }

    pub fn cx_gates(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.ops.iter().filter_map(|op| match *op {
            Op::Cx { control, target } => Some((control, target)),
            _ => None,
        })
    }

    pub fn cx_count(&self) -> usize {
        self.cx_gates().count()
    }

    pub fn init_basis(&self, q: usize) -> Option<Basis> {
        self.ops.iter().find_map(|op| match *op {
            Op::Init { qubit, basis } if qubit == q => Some(basis),
            _ => None,
        })
    }

    pub fn final_basis(&self) -> Option<Basis> {
        self.ops.iter().find_map(|op| match *op {
            Op::FinalMeasure { basis } => Some(basis),
            _ => None,
        })
    }

    /// Greedy ASAP layering of the CX gates.
    pub fn depth(&self) -> usize {
        let mut level = vec![0usize; self.num_qubits()];
        let mut depth = 0;
        for (a, b) in self.cx_gates() {
            let l = level[a].max(level[b]) + 1;
            level[a] = l;
            level[b] = l;
            depth = depth.max(l);
        }
        depth
    }

    /// Peak number of live qubits, counting a qubit from its initialization
    /// until its measurement (code qubits live until the final readout).
    pub fn max_simultaneous_qubits(&self) -> usize {
        let mut live = 0usize;
        let mut peak = 0usize;
        for op in &self.ops {
            match op {
                Op::Init { .. } => {
                    live += 1;
                    peak = peak.max(live);
                }
                Op::Measure { .. } => live -= 1,
                _ => {}
            }
        }
        peak
    }

    pub fn metrics(&self) -> CircuitMetrics {
        CircuitMetrics {
            cx_count: self.cx_count(),
            depth: self.depth(),
            flags: self.n_flags,
            max_simultaneous_qubits: self.max_simultaneous_qubits(),
        }
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        let nq = self.num_qubits();
        #[derive(Clone, Copy, PartialEq)]
        enum Life {
            Unborn,
            Live,
            Measured,
        }
        let mut life = vec![Life::Unborn; nq];
        let mut seen_flags = vec![false; self.n_flags];
        let mut finished = false;
        let err = |index: usize, message: String| Err(CircuitError::Invalid { index, message });
        for (i, op) in self.ops.iter().enumerate() {
            if finished {
                return err(i, "operation after the final measurement".into());
            }
            let check = |q: usize| -> Result<(), CircuitError> {
                if q >= nq {
                    return Err(CircuitError::Invalid { index: i, message: format!("qubit {q} out of range") });
                }
                Ok(())
            };
            match *op {
                Op::Init { qubit, .. } => {
                    check(qubit)?;
                    if life[qubit] != Life::Unborn {
                        return err(i, format!("qubit {qubit} initialized twice"));
                    }
                    life[qubit] = Life::Live;
                }
                Op::Cx { control, target } => {
                    check(control)?;
                    check(target)?;
                    if control == target {
                        return err(i, "CX on a single qubit".into());
                    }
                    for q in [control, target] {
                        if life[q] != Life::Live {
                            return err(i, format!("CX on qubit {q} that is not live"));
                        }
                    }
                }
                Op::Measure { qubit, flag, .. } => {
                    check(qubit)?;
                    if !self.is_flag(qubit) {
                        return err(i, format!("code qubit {qubit} measured mid-circuit"));
                    }
                    if life[qubit] != Life::Live {
                        return err(i, format!("measurement of qubit {qubit} that is not live"));
                    }
                    if flag >= self.n_flags || seen_flags[flag] {
                        return err(i, format!("bad or repeated flag slot {flag}"));
                    }
                    seen_flags[flag] = true;
                    life[qubit] = Life::Measured;
                }
                Op::FinalMeasure { .. } => finished = true,
            }
        }
        if let Some(q) = (0..self.n_code).find(|&q| life[q] != Life::Live) {
            return err(self.ops.len(), format!("code qubit {q} never initialized"));
        }
        if let Some(q) = (self.n_code..nq).find(|&q| life[q] != Life::Measured) {
            return err(self.ops.len(), format!("flag qubit {q} never measured"));
        }
        Ok(())
    }

    /// Builds a circuit from an ordered CX list with lazy initialization
    /// (right before the first gate on a qubit) and eager flag measurement
    /// (right after the last gate). `init` and `meas` give per-qubit bases;
    /// code qubits are never measured mid-circuit.
    pub fn from_gates(
        code: &str,
        label: StateLabel,
        n_code: usize,
        init: &[Basis],
        meas: &[Basis],
        gates: &[(usize, usize)],
        final_basis: Basis,
    ) -> Circuit {
        let nq = init.len();
        assert!(nq >= n_code && meas.len() == nq);
        let mut first = vec![usize::MAX; nq];
        let mut last = vec![usize::MAX; nq];
        for (i, &(a, b)) in gates.iter().enumerate() {
            for q in [a, b] {
                if first[q] == usize::MAX {
                    first[q] = i;
                }
                last[q] = i;
            }
        }
        let mut ops = Vec::with_capacity(gates.len() + 2 * nq + 1);
        for q in 0..nq {
            if first[q] == usize::MAX {
                ops.push(Op::Init { qubit: q, basis: init[q] });
            }
        }
        let mut flag_slot = 0;
        let mut slots = vec![usize::MAX; nq];
        for q in n_code..nq {
            slots[q] = q - n_code;
        }
        for (i, &(a, b)) in gates.iter().enumerate() {
            for q in [a, b] {
                if first[q] == i {
                    ops.push(Op::Init { qubit: q, basis: init[q] });
                }
            }
            ops.push(Op::Cx { control: a, target: b });
            for q in [a, b] {
                if q >= n_code && last[q] == i {
                    ops.push(Op::Measure { qubit: q, basis: meas[q], flag: slots[q] });
                    flag_slot += 1;
                }
            }
        }
        for q in n_code..nq {
            if first[q] == usize::MAX {
                ops.push(Op::Measure { qubit: q, basis: meas[q], flag: slots[q] });
                flag_slot += 1;
            }
        }
        debug_assert_eq!(flag_slot, nq - n_code);
        ops.push(Op::FinalMeasure { basis: final_basis });
        Circuit { code: code.to_string(), label, n_code, n_flags: nq - n_code, ops }
    }

    /// Per-qubit (init basis, measurement basis) read back from the ops.
    pub fn qubit_bases(&self) -> (Vec<Basis>, Vec<Basis>) {
        let final_basis = self.final_basis().unwrap_or(Basis::Z);
        let mut init = vec![Basis::Z; self.num_qubits()];
        let mut meas = vec![final_basis; self.num_qubits()];
        for op in &self.ops {
            match *op {
                Op::Init { qubit, basis } => init[qubit] = basis,
                Op::Measure { qubit, basis, .. } => meas[qubit] = basis,
                _ => {}
            }
        }
        (init, meas)
    }

    /// Same gates in a new order, re-applying lazy init and eager measurement.
    pub fn reordered(&self, gates: &[(usize, usize)]) -> Circuit {
        let (init, meas) = self.qubit_bases();
        Circuit::from_gates(
            &self.code,
            self.label,
            self.n_code,
            &init,
            &meas,
            gates,
            self.final_basis().unwrap_or(Basis::Z),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn bell() -> Circuit {
        Circuit::from_gates(
            "bell",
            StateLabel::Zero,
            2,
            &[Basis::X, Basis::Z],
            &[Basis::Z, Basis::Z],
            &[(0, 1)],
            Basis::Z,
        )
    }

    #[test]
    fn lazy_init_and_metrics() {
        let c = bell();
        c.validate().unwrap();
        assert_eq!(
            c.ops,
            vec![
                Op::Init { qubit: 0, basis: Basis::X },
                Op::Init { qubit: 1, basis: Basis::Z },
                Op::Cx { control: 0, target: 1 },
                Op::FinalMeasure { basis: Basis::Z },
            ]
        );
        assert_eq!(c.metrics(), CircuitMetrics { cx_count: 1, depth: 1, flags: 0, max_simultaneous_qubits: 2 });
    }

    #[test]
    fn flag_reuse_lowers_peak() {
        // Two flags used one after the other never coexist.
        let init = [Basis::X, Basis::Z, Basis::Z, Basis::Z];
        let meas = [Basis::Z; 4];
        let c = Circuit::from_gates("x", StateLabel::Zero, 2, &init, &meas, &[(0, 2), (0, 2), (0, 1), (0, 3), (0, 3)], Basis::Z);
        c.validate().unwrap();
        assert_eq!(c.max_simultaneous_qubits(), 3);
        assert_eq!(c.depth(), 5);
    }

    #[test]
    fn validation_catches_use_before_init() {
        let mut c = bell();
        c.ops.swap(1, 2);
        assert!(c.validate().is_err());
    }
}
