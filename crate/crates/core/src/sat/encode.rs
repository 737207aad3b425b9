//! Tseitin encoding of circuits with constant folding.

use std::ops::Not;

use super::{ClauseSink, Lit};
use crate::netlist::{Circuit, GateKind, NodeId};

/// A propositional value: a literal or a known constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Signal {
    Const(bool),
    Lit(Lit),
}

impl Not for Signal {
    type Output = Signal;
    fn not(self) -> Signal {
        match self {
            Signal::Const(b) => Signal::Const(!b),
            Signal::Lit(l) => Signal::Lit(!l),
        }
    }
}

impl From<Lit> for Signal {
    fn from(l: Lit) -> Self {
        Signal::Lit(l)
    }
}

impl From<bool> for Signal {
    fn from(b: bool) -> Self {
        Signal::Const(b)
    }
}

/// Adds the clause `s_1 | ... | s_n`. True constants satisfy it, false ones
/// drop out; if nothing is left the sink becomes unsatisfiable.
pub(crate) fn add_clause_signals(sink: &mut impl ClauseSink, clause: &[Signal]) {
    let mut lits = Vec::with_capacity(clause.len());
    for s in clause {
        match *s {
            Signal::Const(true) => return,
            Signal::Const(false) => {}
            Signal::Lit(l) => lits.push(l),
        }
    }
    if lits.is_empty() {
        let t = sink.true_lit();
        sink.add_clause(&[!t]);
    } else {
        sink.add_clause(&lits);
    }
}

/// Conjunction with folding of constants, duplicates and complementary pairs.
pub fn and_gate(sink: &mut impl ClauseSink, inputs: &[Signal]) -> Signal {
    let mut lits: Vec<Lit> = Vec::with_capacity(inputs.len());
    for s in inputs {
        match *s {
            Signal::Const(false) => return Signal::Const(false),
            Signal::Const(true) => {}
            Signal::Lit(l) => lits.push(l),
        }
    }
    lits.sort_by_key(|l| (l.var(), l.is_positive()));
    lits.dedup();
    if lits.windows(2).any(|w| w[0].var() == w[1].var()) {
        return Signal::Const(false);
    }
    match lits.len() {
        0 => Signal::Const(true),
        1 => Signal::Lit(lits[0]),
        _ => {
            let out = sink.new_var();
            let mut long = Vec::with_capacity(lits.len() + 1);
            long.push(out);
            for &l in &lits {
                sink.add_clause(&[!out, l]);
                long.push(!l);
            }
            sink.add_clause(&long);
            Signal::Lit(out)
        }
    }
}

pub fn or_gate(sink: &mut impl ClauseSink, inputs: &[Signal]) -> Signal {
    let neg: Vec<Signal> = inputs.iter().map(|&s| !s).collect();
    !and_gate(sink, &neg)
}

fn xor2(sink: &mut impl ClauseSink, a: Signal, b: Signal) -> Signal {
    match (a, b) {
        (Signal::Const(x), s) | (s, Signal::Const(x)) => {
            if x {
                !s
            } else {
                s
            }
        }
        (Signal::Lit(x), Signal::Lit(y)) => {
            if x == y {
                return Signal::Const(false);
            }
            if x == !y {
                return Signal::Const(true);
            }
            let o = sink.new_var();
            sink.add_clause(&[!o, x, y]);
            sink.add_clause(&[!o, !x, !y]);
            sink.add_clause(&[o, !x, y]);
            sink.add_clause(&[o, x, !y]);
            Signal::Lit(o)
        }
    }
}

/// Parity of the inputs.
pub fn xor_gate(sink: &mut impl ClauseSink, inputs: &[Signal]) -> Signal {
    inputs.iter().fold(Signal::Const(false), |acc, &s| xor2(sink, acc, s))
}

fn gate_signal(sink: &mut impl ClauseSink, kind: GateKind, ins: &[Signal]) -> Signal {
    match kind {
        GateKind::Input => unreachable!("inputs are bound, not encoded"),
        GateKind::And => and_gate(sink, ins),
        GateKind::Nand => !and_gate(sink, ins),
        GateKind::Or => or_gate(sink, ins),
        GateKind::Nor => !or_gate(sink, ins),
        GateKind::Xor => xor_gate(sink, ins),
        GateKind::Xnor => !xor_gate(sink, ins),
        GateKind::Not => !ins[0],
        GateKind::Buf => ins[0],
    }
}

/// One embedded copy of a circuit: the signal of every encoded node.
#[derive(Clone, Debug)]
pub struct CircuitCopy {
    pub tag: String,
    signals: Vec<Option<Signal>>,
}

impl CircuitCopy {
    /// Signal of `id`; panics if the node was not part of the encoding.
    pub fn node(&self, id: NodeId) -> Signal {
        self.signals[id.index()].unwrap_or_else(|| panic!("node {id} not encoded in copy {}", self.tag))
    }

    pub fn get(&self, id: NodeId) -> Option<Signal> {
        self.signals[id.index()]
    }

    pub fn outputs(&self, c: &Circuit) -> Vec<Signal> {
        c.outputs().iter().map(|&o| self.node(o)).collect()
    }

    pub fn nodes(&self, ids: &[NodeId]) -> Vec<Signal> {
        ids.iter().map(|&i| self.node(i)).collect()
    }
}

/// Encodes the whole circuit. `bind` supplies signals for inputs that are
/// shared with other copies or fixed to constants; every other input gets a
/// fresh variable. Each call allocates fresh gate variables, so several
/// copies can live in one sink.
pub fn encode_circuit(
    sink: &mut impl ClauseSink,
    c: &Circuit,
    tag: &str,
    bind: impl Fn(NodeId) -> Option<Signal>,
) -> CircuitCopy {
    encode_range(sink, c, tag, &bind, None)
}

/// Like [`encode_circuit`] but only the transitive fanin of `roots` (and the
/// roots themselves) is encoded.
pub fn encode_cone(
    sink: &mut impl ClauseSink,
    c: &Circuit,
    roots: &[NodeId],
    tag: &str,
    bind: impl Fn(NodeId) -> Option<Signal>,
) -> CircuitCopy {
    let mut mark = vec![false; c.num_nodes()];
    let mut stack: Vec<NodeId> = roots.to_vec();
    while let Some(n) = stack.pop() {
        if !mark[n.index()] {
            mark[n.index()] = true;
            stack.extend_from_slice(c.fanins(n));
        }
    }
    encode_range(sink, c, tag, &bind, Some(&mark))
}

fn encode_range(
    sink: &mut impl ClauseSink,
    c: &Circuit,
    tag: &str,
    bind: &dyn Fn(NodeId) -> Option<Signal>,
    mask: Option<&[bool]>,
) -> CircuitCopy {
    let mut signals: Vec<Option<Signal>> = vec![None; c.num_nodes()];
    let mut ins = Vec::new();
    for id in c.node_ids() {
        if mask.is_some_and(|m| !m[id.index()]) {
            continue;
        }
        let s = if c.is_input(id) {
            bind(id).unwrap_or_else(|| Signal::Lit(sink.new_var()))
        } else {
            ins.clear();
            ins.extend(c.fanins(id).iter().map(|f| signals[f.index()].unwrap()));
            gate_signal(sink, c.kind(id), &ins)
        };
        signals[id.index()] = Some(s);
    }
    CircuitCopy { tag: tag.to_string(), signals }
}
