//! Miters and combinational equivalence checking.

use std::collections::HashMap;
use std::time::Duration;

use thiserror::Error;

use super::encode::{encode_circuit, or_gate, xor_gate};
use super::{ClauseSink, CnfFormula, SatError, Signal, SolveResult, Solver};
use crate::netlist::{Circuit, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MiterError {
    #[error("output arity differs: {0} vs {1}")]
    OutputArity(usize, usize),
    #[error("input {0:?} is not covered by the pairing")]
    Unpaired(String),
    #[error("no input named {0:?} in the second circuit")]
    MissingName(String),
    #[error(transparent)]
    Sat(#[from] SatError),
}

/// Pairs inputs of `a` and `b` by name.
pub fn pairing_by_name(a: &Circuit, b: &Circuit) -> Result<Vec<(NodeId, NodeId)>, MiterError> {
    let mut pairs = Vec::with_capacity(a.inputs().len());
    for &i in a.inputs() {
        let j = b.find(a.name(i)).filter(|&j| b.is_input(j)).ok_or_else(|| MiterError::MissingName(a.name(i).to_string()))?;
        pairs.push((i, j));
    }
    if pairs.len() != b.inputs().len() {
        let paired: Vec<NodeId> = pairs.iter().map(|p| p.1).collect();
        let missing = b.inputs().iter().find(|j| !paired.contains(j)).unwrap();
        return Err(MiterError::Unpaired(b.name(*missing).to_string()));
    }
    Ok(pairs)
}

/// Encodes both circuits over the given input signals (indexed like each
/// circuit's `inputs()`) and returns the "some output differs" signal.
pub fn encode_miter(
    sink: &mut impl ClauseSink,
    a: &Circuit,
    b: &Circuit,
    inputs_a: &[Signal],
    inputs_b: &[Signal],
) -> Result<Signal, MiterError> {
    if a.outputs().len() != b.outputs().len() {
        return Err(MiterError::OutputArity(a.outputs().len(), b.outputs().len()));
    }
    let ca = encode_circuit(sink, a, "A", |n| a.input_position(n).map(|p| inputs_a[p]));
    let cb = encode_circuit(sink, b, "B", |n| b.input_position(n).map(|p| inputs_b[p]));
    let diffs: Vec<Signal> = ca
        .outputs(a)
        .into_iter()
        .zip(cb.outputs(b))
        .map(|(x, y)| xor_gate(sink, &[x, y]))
        .collect();
    Ok(or_gate(sink, &diffs))
}

/// A miter formula plus the shared input signals needed to read a witness.
#[derive(Clone, Debug)]
pub struct Miter {
    pub cnf: CnfFormula,
    /// Signals of `a`'s inputs, in `a.inputs()` order.
    pub inputs: Vec<Signal>,
    pub differ: Signal,
}

/// Builds a formula that is satisfiable iff some paired input assignment
/// makes the two circuits disagree on some output.
pub fn miter(a: &Circuit, b: &Circuit, pairing: &[(NodeId, NodeId)]) -> Result<Miter, MiterError> {
    let mut cnf = CnfFormula::new();
    let inputs: Vec<Signal> = a.inputs().iter().map(|_| Signal::Lit(cnf.new_var())).collect();
    let mut b_inputs: Vec<Option<Signal>> = vec![None; b.inputs().len()];
    let mut covered = vec![false; a.inputs().len()];
    for &(i, j) in pairing {
        let pa = a.input_position(i).ok_or_else(|| MiterError::Unpaired(a.name(i).to_string()))?;
        let pb = b.input_position(j).ok_or_else(|| MiterError::Unpaired(b.name(j).to_string()))?;
        covered[pa] = true;
        b_inputs[pb] = Some(inputs[pa]);
    }
    if let Some(p) = covered.iter().position(|&c| !c) {
        return Err(MiterError::Unpaired(a.name(a.inputs()[p]).to_string()));
    }
    if let Some(p) = b_inputs.iter().position(|s| s.is_none()) {
        return Err(MiterError::Unpaired(b.name(b.inputs()[p]).to_string()));
    }
    let b_inputs: Vec<Signal> = b_inputs.into_iter().map(Option::unwrap).collect();
    let differ = encode_miter(&mut cnf, a, b, &inputs, &b_inputs)?;
    super::encode::add_clause_signals(&mut cnf, &[differ]);
    Ok(Miter { cnf, inputs, differ })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// A distinguishing assignment over the first circuit's inputs.
    Different(Vec<bool>),
}

pub fn check_equivalence(
    a: &Circuit,
    b: &Circuit,
    pairing: &[(NodeId, NodeId)],
    timeout: Option<Duration>,
) -> Result<Equivalence, MiterError> {
    let m = miter(a, b, pairing)?;
    let mut s = Solver::with_timeout(timeout);
    s.add_formula(&m.cnf);
    Ok(match s.solve(&[])? {
        SolveResult::Unsat => Equivalence::Equivalent,
        SolveResult::Sat => Equivalence::Different(m.inputs.iter().map(|&x| s.signal_value(x)).collect()),
    })
}

/// Map from names to input ids, handy for building pairings by hand.
pub fn input_names(c: &Circuit) -> HashMap<&str, NodeId> {
    c.inputs().iter().map(|&i| (c.name(i), i)).collect()
}
