//! Combinational circuit DAGs.
//!
//! A [`Circuit`] is immutable once built. Nodes are stored in topological
//! order, so every fanin index is smaller than the index of its consumer and
//! simulation is a single forward sweep.

pub(crate) mod bench;
mod inputset;
pub mod logic;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bench::{parse_bench, write_bench, DEFAULT_KEY_PREFIX};
pub use inputset::InputSet;
pub use logic::{Logic, Sig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    Input,
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
}

impl GateKind {
    pub fn bench_name(self) -> &'static str {
        match self {
            GateKind::Input => "INPUT",
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Nand => "NAND",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUF",
        }
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            GateKind::Input => n == 0,
            GateKind::Not | GateKind::Buf => n == 1,
            _ => n >= 2,
        }
    }

    /// Evaluates the gate on 64 patterns at once.
    pub fn eval_words(self, fanins: impl IntoIterator<Item = u64>) -> u64 {
        let mut it = fanins.into_iter();
        match self {
            GateKind::Input => panic!("inputs have no gate function"),
            GateKind::And => it.fold(!0, |a, b| a & b),
            GateKind::Nand => !it.fold(!0, |a, b| a & b),
            GateKind::Or => it.fold(0, |a, b| a | b),
            GateKind::Nor => !it.fold(0, |a, b| a | b),
            GateKind::Xor => it.fold(0, |a, b| a ^ b),
            GateKind::Xnor => !it.fold(0, |a, b| a ^ b),
            GateKind::Not => !it.next().unwrap(),
            GateKind::Buf => it.next().unwrap(),
        }
    }

    pub fn eval(self, fanins: impl IntoIterator<Item = bool>) -> bool {
        self.eval_words(fanins.into_iter().map(|b| if b { !0 } else { 0 })) & 1 == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputRole {
    Circuit,
    Key,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub kind: GateKind,
    pub fanins: Vec<NodeId>,
    pub name: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("line {line}: undefined signal {name:?}")]
    UndefinedSignal { name: String, line: usize },
    #[error("line {line}: signal {name:?} defined more than once")]
    DuplicateDefinition { name: String, line: usize },
    #[error("combinational cycle through {name:?}")]
    Cycle { name: String },
    #[error("line {line}: unsupported gate {kind:?} (only combinational AND/OR/NAND/NOR/XOR/XNOR/NOT/BUF are accepted)")]
    UnsupportedGate { kind: String, line: usize },
    #[error("gate {name:?}: {kind:?} cannot take {got} fanins")]
    Arity { name: String, kind: GateKind, got: usize },
    #[error("fanin {fanin} of {name:?} does not precede it")]
    NotTopological { name: String, fanin: NodeId },
    #[error("node {0} does not exist")]
    InvalidNode(NodeId),
    #[error("assignment has {got} bits, expected {expected}")]
    AssignmentLength { expected: usize, got: usize },
}

/// Incremental construction of a [`Circuit`]. Fanins must already exist.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    nodes: Vec<Node>,
    roles: Vec<Option<InputRole>>,
    outputs: Vec<NodeId>,
    names: HashMap<String, NodeId>,
    reserved: HashSet<String>,
    fresh: usize,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_name(&self, name: &str) -> bool {
        self.names.contains_key(name)
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.names.get(name).copied()
    }

    /// Keeps `fresh_name` from handing out these names. Reserved names can
    /// still be added explicitly.
    pub fn reserve<S: Into<String>>(&mut self, names: impl IntoIterator<Item = S>) {
        self.reserved.extend(names.into_iter().map(Into::into));
    }

    fn taken(&self, name: &str) -> bool {
        self.names.contains_key(name) || self.reserved.contains(name)
    }

    /// A name with the given prefix that is not yet taken.
    pub fn fresh_name(&mut self, prefix: &str) -> String {
        if !self.taken(prefix) {
            return prefix.to_string();
        }
        loop {
            let candidate = format!("{prefix}_{}", self.fresh);
            self.fresh += 1;
            if !self.taken(&candidate) {
                return candidate;
            }
        }
    }

    fn push(&mut self, node: Node, role: Option<InputRole>) -> Result<NodeId, NetlistError> {
        if self.names.contains_key(&node.name) {
            return Err(NetlistError::DuplicateDefinition { name: node.name, line: 0 });
        }
        let id = NodeId(self.nodes.len() as u32);
        self.names.insert(node.name.clone(), id);
        self.nodes.push(node);
        self.roles.push(role);
        Ok(id)
    }

    pub fn add_input(&mut self, name: impl Into<String>, role: InputRole) -> Result<NodeId, NetlistError> {
        let node = Node { kind: GateKind::Input, fanins: Vec::new(), name: name.into() };
        self.push(node, Some(role))
    }

    pub fn add_gate(
        &mut self,
        name: impl Into<String>,
        kind: GateKind,
        fanins: Vec<NodeId>,
    ) -> Result<NodeId, NetlistError> {
        let name = name.into();
        if kind == GateKind::Input || !kind.arity_ok(fanins.len()) {
            return Err(NetlistError::Arity { name, kind, got: fanins.len() });
        }
        let next = self.nodes.len() as u32;
        if let Some(&bad) = fanins.iter().find(|f| f.0 >= next) {
            return Err(NetlistError::NotTopological { name, fanin: bad });
        }
        self.push(Node { kind, fanins, name }, None)
    }

    /// Adds a gate under a generated name derived from `prefix`.
    pub fn add_fresh_gate(&mut self, prefix: &str, kind: GateKind, fanins: Vec<NodeId>) -> Result<NodeId, NetlistError> {
        let name = self.fresh_name(prefix);
        self.add_gate(name, kind, fanins)
    }

    pub fn add_output(&mut self, id: NodeId) -> Result<(), NetlistError> {
        if id.index() >= self.nodes.len() {
            return Err(NetlistError::InvalidNode(id));
        }
        self.outputs.push(id);
        Ok(())
    }

    pub fn build(self) -> Circuit {
        let mut inputs = Vec::new();
        let mut key_inputs = Vec::new();
        let mut circuit_inputs = Vec::new();
        let mut input_pos = vec![None; self.nodes.len()];
        for (i, role) in self.roles.iter().enumerate() {
            if let Some(role) = role {
                let id = NodeId(i as u32);
                input_pos[i] = Some(inputs.len());
                inputs.push(id);
                match role {
                    InputRole::Key => key_inputs.push(id),
                    InputRole::Circuit => circuit_inputs.push(id),
                }
            }
        }
        Circuit {
            nodes: self.nodes,
            outputs: self.outputs,
            inputs,
            key_inputs,
            circuit_inputs,
            input_pos,
            names: self.names,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Circuit {
    nodes: Vec<Node>,
    outputs: Vec<NodeId>,
    inputs: Vec<NodeId>,
    key_inputs: Vec<NodeId>,
    circuit_inputs: Vec<NodeId>,
    input_pos: Vec<Option<usize>>,
    names: HashMap<String, NodeId>,
}

impl Circuit {
    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_gates(&self) -> usize {
        self.nodes.len() - self.inputs.len()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// Non-input nodes in topological order.
    pub fn gates(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.node_ids().filter(|&id| self.nodes[id.index()].kind != GateKind::Input)
    }

    pub fn check(&self, id: NodeId) -> Result<(), NetlistError> {
        if id.index() < self.nodes.len() {
            Ok(())
        } else {
            Err(NetlistError::InvalidNode(id))
        }
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn kind(&self, id: NodeId) -> GateKind {
        self.nodes[id.index()].kind
    }

    pub fn fanins(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.index()].fanins
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.nodes[id.index()].name
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.names.get(name).copied()
    }

    /// All 0-fanin nodes in declaration order.
    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn key_inputs(&self) -> &[NodeId] {
        &self.key_inputs
    }

    pub fn circuit_inputs(&self) -> &[NodeId] {
        &self.circuit_inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    pub fn output_names(&self) -> Vec<&str> {
        self.outputs.iter().map(|&o| self.name(o)).collect()
    }

    pub fn is_input(&self, id: NodeId) -> bool {
        self.input_pos[id.index()].is_some()
    }

    pub fn is_key(&self, id: NodeId) -> bool {
        self.key_inputs.binary_search(&id).is_ok()
    }

    /// Position of an input node within [`Circuit::inputs`].
    pub fn input_position(&self, id: NodeId) -> Option<usize> {
        self.input_pos.get(id.index()).copied().flatten()
    }

    /// Values of every node for 64 input patterns at once. `words` is indexed
    /// like [`Circuit::inputs`].
    pub fn eval_words(&self, words: &[u64]) -> Vec<u64> {
        assert_eq!(words.len(), self.inputs.len());
        let mut val = vec![0u64; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            val[i] = match self.input_pos[i] {
                Some(p) => words[p],
                None => node.kind.eval_words(node.fanins.iter().map(|f| val[f.index()])),
            };
        }
        val
    }

    /// Output values for a full assignment indexed like [`Circuit::inputs`].
    pub fn simulate(&self, assignment: &[bool]) -> Result<Vec<bool>, NetlistError> {
        if assignment.len() != self.inputs.len() {
            return Err(NetlistError::AssignmentLength { expected: self.inputs.len(), got: assignment.len() });
        }
        let words: Vec<u64> = assignment.iter().map(|&b| b as u64).collect();
        let val = self.eval_words(&words);
        Ok(self.outputs.iter().map(|o| val[o.index()] & 1 == 1).collect())
    }

    /// Simulation with separate circuit-input and key-input vectors, each in
    /// declaration order.
    pub fn simulate_keyed(&self, x: &[bool], k: &[bool]) -> Result<Vec<bool>, NetlistError> {
        if x.len() != self.circuit_inputs.len() {
            return Err(NetlistError::AssignmentLength { expected: self.circuit_inputs.len(), got: x.len() });
        }
        if k.len() != self.key_inputs.len() {
            return Err(NetlistError::AssignmentLength { expected: self.key_inputs.len(), got: k.len() });
        }
        let mut full = vec![false; self.inputs.len()];
        for (&id, &b) in self.circuit_inputs.iter().zip(x) {
            full[self.input_pos[id.index()].unwrap()] = b;
        }
        for (&id, &b) in self.key_inputs.iter().zip(k) {
            full[self.input_pos[id.index()].unwrap()] = b;
        }
        self.simulate(&full)
    }

    /// The transitive fanin cone of `id`, excluding `id` itself, in
    /// topological order.
    pub fn transitive_fanin(&self, id: NodeId) -> Result<Vec<NodeId>, NetlistError> {
        self.check(id)?;
        let mut mark = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = self.fanins(id).to_vec();
        while let Some(n) = stack.pop() {
            if !mark[n.index()] {
                mark[n.index()] = true;
                stack.extend_from_slice(self.fanins(n));
            }
        }
        Ok(self.node_ids().filter(|n| mark[n.index()]).collect())
    }

    /// The input nodes `id` depends on structurally, sorted by node id. An
    /// input's support is itself.
    pub fn support(&self, id: NodeId) -> Result<Vec<NodeId>, NetlistError> {
        self.check(id)?;
        if self.is_input(id) {
            return Ok(vec![id]);
        }
        Ok(self.transitive_fanin(id)?.into_iter().filter(|&n| self.is_input(n)).collect())
    }

    /// Support of every node as a set of input positions.
    pub fn support_sets(&self) -> Vec<InputSet> {
        let width = self.inputs.len();
        let mut sets: Vec<InputSet> = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let set = match self.input_pos[i] {
                Some(p) => InputSet::singleton(width, p),
                None => {
                    let mut s = InputSet::empty(width);
                    for f in &node.fanins {
                        s.union_with(&sets[f.index()]);
                    }
                    s
                }
            };
            sets.push(set);
        }
        sets
    }

    /// Single-output sub-circuit computing `id`, with the node's support as
    /// its inputs (declaration order, roles preserved). Names are kept.
    pub fn cone(&self, id: NodeId) -> Result<Circuit, NetlistError> {
        let mut members = self.transitive_fanin(id)?;
        members.push(id);
        let mut b = CircuitBuilder::new();
        let mut map = HashMap::new();
        for &n in &members {
            let node = self.node(n);
            let new = if self.is_input(n) {
                let role = if self.is_key(n) { InputRole::Key } else { InputRole::Circuit };
                b.add_input(node.name.clone(), role)?
            } else {
                let fanins = node.fanins.iter().map(|f| map[f]).collect();
                b.add_gate(node.name.clone(), node.kind, fanins)?
            };
            map.insert(n, new);
        }
        b.add_output(map[&id])?;
        Ok(b.build())
    }

    /// Copies every node into `b`, returning the mapping from this circuit's
    /// ids to the builder's. Names get `prefix` prepended.
    pub fn copy_into(&self, b: &mut CircuitBuilder, prefix: &str) -> Result<Vec<NodeId>, NetlistError> {
        let mut map = Vec::with_capacity(self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            let name = format!("{prefix}{}", node.name);
            let id = if self.input_pos[i].is_some() {
                let role = if self.is_key(NodeId(i as u32)) { InputRole::Key } else { InputRole::Circuit };
                b.add_input(name, role)?
            } else {
                b.add_gate(name, node.kind, node.fanins.iter().map(|f| map[f.index()]).collect())?
            };
            map.push(id);
        }
        Ok(map)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// y = (a AND b) OR (b AND c) OR (c AND a) OR d
    pub(crate) const MAJ_OR_D: &str = "\
# majority of a,b,c or d
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(d)
OUTPUT(y)
g1 = AND(a, b)
g2 = AND(b, c)
g3 = AND(c, a)
y = OR(g1, g2, g3, d)
";

    fn maj() -> Circuit {
        parse_bench(MAJ_OR_D, DEFAULT_KEY_PREFIX).unwrap()
    }

    fn reference_eval(c: &Circuit, assignment: &[bool]) -> Vec<bool> {
        // recursive evaluation straight from the definition, no ordering assumptions
        fn value(c: &Circuit, n: NodeId, a: &[bool]) -> bool {
            match c.input_position(n) {
                Some(p) => a[p],
                None => {
                    let v: Vec<bool> = c.fanins(n).iter().map(|&f| value(c, f, a)).collect();
                    match c.kind(n) {
                        GateKind::And => v.iter().all(|&x| x),
                        GateKind::Nand => !v.iter().all(|&x| x),
                        GateKind::Or => v.iter().any(|&x| x),
                        GateKind::Nor => !v.iter().any(|&x| x),
                        GateKind::Xor => v.iter().filter(|&&x| x).count() % 2 == 1,
                        GateKind::Xnor => v.iter().filter(|&&x| x).count() % 2 == 0,
                        GateKind::Not => !v[0],
                        GateKind::Buf => v[0],
                        GateKind::Input => unreachable!(),
                    }
                }
            }
        }
        c.outputs().iter().map(|&o| value(c, o, assignment)).collect()
    }

    #[test]
    fn simulate_matches_formula() {
        let c = maj();
        assert_eq!(c.simulate(&[true, false, false, true]).unwrap(), vec![true]);
        assert_eq!(c.simulate(&[false; 4]).unwrap(), vec![false]);
        for v in 0..16u32 {
            let a: Vec<bool> = (0..4).map(|i| v >> (3 - i) & 1 == 1).collect();
            let y = (a[0] && a[1]) || (a[1] && a[2]) || (a[2] && a[0]) || a[3];
            assert_eq!(c.simulate(&a).unwrap(), vec![y]);
            assert_eq!(reference_eval(&c, &a), vec![y]);
        }
    }

    #[test]
    fn simulate_rejects_short_assignment() {
        assert_eq!(
            maj().simulate(&[true]),
            Err(NetlistError::AssignmentLength { expected: 4, got: 1 })
        );
    }

    #[test]
    fn support_and_tfc() {
        let c = maj();
        let y = c.find("y").unwrap();
        let names = |v: Vec<NodeId>| v.into_iter().map(|n| c.name(n).to_string()).collect::<Vec<_>>();
        assert_eq!(names(c.support(y).unwrap()), ["a", "b", "c", "d"]);
        // 3 AND gates plus the 4 inputs
        assert_eq!(c.transitive_fanin(y).unwrap().len(), 7);
        let a = c.find("a").unwrap();
        assert_eq!(c.support(a).unwrap(), vec![a]);
        assert!(c.transitive_fanin(a).unwrap().is_empty());
        let g1 = c.find("g1").unwrap();
        assert_eq!(names(c.support(g1).unwrap()), ["a", "b"]);
        assert_eq!(c.support(NodeId(99)), Err(NetlistError::InvalidNode(NodeId(99))));
    }

    #[test]
    fn not_chain_tfc() {
        let c = parse_bench("INPUT(a)\nOUTPUT(n2)\nn1 = NOT(a)\nn2 = NOT(n1)\n", "keyinput").unwrap();
        let tfc = c.transitive_fanin(c.find("n2").unwrap()).unwrap();
        assert_eq!(tfc, vec![c.find("a").unwrap(), c.find("n1").unwrap()]);
    }

    #[test]
    fn support_sets_agree_with_support() {
        for text in [MAJ_OR_D, crate::netlist::bench::tests::SMALL_LOCKED] {
            let c = parse_bench(text, DEFAULT_KEY_PREFIX).unwrap();
            let sets = c.support_sets();
            for n in c.node_ids() {
                let from_set: Vec<NodeId> = sets[n.index()].iter().map(|p| c.inputs()[p]).collect();
                let mut from_tfc: Vec<NodeId> = c.transitive_fanin(n).unwrap();
                from_tfc.push(n);
                from_tfc.retain(|&u| c.fanins(u).is_empty());
                from_tfc.sort();
                assert_eq!(from_set, c.support(n).unwrap());
                assert_eq!(from_set, from_tfc);
            }
        }
    }

    #[test]
    fn builder_rejects_bad_arity_and_order() {
        let mut b = CircuitBuilder::new();
        let a = b.add_input("a", InputRole::Circuit).unwrap();
        assert!(matches!(b.add_gate("x", GateKind::Not, vec![a, a]), Err(NetlistError::Arity { .. })));
        assert!(matches!(b.add_gate("x", GateKind::And, vec![a]), Err(NetlistError::Arity { .. })));
        assert!(matches!(b.add_gate("x", GateKind::And, vec![a, NodeId(5)]), Err(NetlistError::NotTopological { .. })));
        assert!(matches!(b.add_input("a", InputRole::Key), Err(NetlistError::DuplicateDefinition { .. })));
    }

    #[test]
    fn cone_keeps_function() {
        let c = maj();
        let g2 = c.find("g2").unwrap();
        let cone = c.cone(g2).unwrap();
        assert_eq!(cone.inputs().len(), 2);
        assert_eq!(cone.num_gates(), 1);
        assert_eq!(cone.simulate(&[true, true]).unwrap(), vec![true]);
        assert_eq!(cone.simulate(&[true, false]).unwrap(), vec![false]);
    }

    #[test]
    fn gate_kinds_nary() {
        assert!(GateKind::Xor.eval([true, true, true]));
        assert!(!GateKind::Xnor.eval([true, false, false]));
        assert!(GateKind::Nor.eval([false, false, false]));
        assert!(!GateKind::Nand.eval([true, true, true]));
    }
}
