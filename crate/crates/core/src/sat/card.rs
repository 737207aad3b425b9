//! Cardinality constraints via a sequential unary counter.

use super::encode::{add_clause_signals, and_gate, or_gate, xor_gate};
use super::{ClauseSink, SatError, Signal};

/// Unary counter outputs: `at_least[j]` holds iff at least `j` of `inputs`
/// are true, for `j` in `0..=limit`. Both directions of every counter cell
/// are encoded, so the outputs are functions of the inputs.
fn unary_counter(sink: &mut impl ClauseSink, inputs: &[Signal], limit: usize) -> Vec<Signal> {
    let mut at_least = vec![Signal::Const(false); limit + 1];
    at_least[0] = Signal::Const(true);
    for &x in inputs {
        for j in (1..=limit).rev() {
            let carry = and_gate(sink, &[x, at_least[j - 1]]);
            at_least[j] = or_gate(sink, &[at_least[j], carry]);
        }
    }
    at_least
}

/// Constrains exactly `k` of `inputs` to be true.
pub fn exactly_k(sink: &mut impl ClauseSink, inputs: &[Signal], k: usize) -> Result<(), SatError> {
    if k > inputs.len() {
        return Err(SatError::DistanceOutOfRange { d: k, m: inputs.len() });
    }
    let at_least = unary_counter(sink, inputs, (k + 1).min(inputs.len()));
    add_clause_signals(sink, &[at_least[k]]);
    if k < inputs.len() {
        add_clause_signals(sink, &[!at_least[k + 1]]);
    }
    Ok(())
}

/// Constrains the Hamming distance between `a` and `b` to exactly `d`.
/// Returns the per-position difference signals.
pub fn hamming_eq(
    sink: &mut impl ClauseSink,
    a: &[Signal],
    b: &[Signal],
    d: usize,
) -> Result<Vec<Signal>, SatError> {
    if a.len() != b.len() {
        return Err(SatError::LengthMismatch(a.len(), b.len()));
    }
    if d > a.len() {
        return Err(SatError::DistanceOutOfRange { d, m: a.len() });
    }
    let diff: Vec<Signal> = a.iter().zip(b).map(|(&x, &y)| xor_gate(sink, &[x, y])).collect();
    exactly_k(sink, &diff, d)?;
    Ok(diff)
}
