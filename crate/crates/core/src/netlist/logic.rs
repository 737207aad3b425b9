//! Gate-level construction helpers with constant folding.

use std::collections::HashMap;

use super::{CircuitBuilder, GateKind, NetlistError, NodeId};

/// A value during construction: an existing node or a constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sig {
    Const(bool),
    Node(NodeId),
}

/// Wraps a builder and emits gates under generated names with a shared
/// prefix. Inverters are cached per node.
pub struct Logic<'a> {
    pub b: &'a mut CircuitBuilder,
    prefix: String,
    inverted: HashMap<NodeId, NodeId>,
}

impl<'a> Logic<'a> {
    pub fn new(b: &'a mut CircuitBuilder, prefix: impl Into<String>) -> Self {
        Logic { b, prefix: prefix.into(), inverted: HashMap::new() }
    }

    fn gate(&mut self, kind: GateKind, fanins: Vec<NodeId>) -> Result<NodeId, NetlistError> {
        let prefix = self.prefix.clone();
        self.b.add_fresh_gate(&prefix, kind, fanins)
    }

    pub fn not(&mut self, s: Sig) -> Result<Sig, NetlistError> {
        Ok(match s {
            Sig::Const(v) => Sig::Const(!v),
            Sig::Node(n) => {
                if let Some(&m) = self.inverted.get(&n) {
                    return Ok(Sig::Node(m));
                }
                let m = self.gate(GateKind::Not, vec![n])?;
                self.inverted.insert(n, m);
                self.inverted.insert(m, n);
                Sig::Node(m)
            }
        })
    }

    fn nary(&mut self, kind: GateKind, absorbing: bool, ins: &[Sig]) -> Result<Sig, NetlistError> {
        let mut nodes = Vec::with_capacity(ins.len());
        for s in ins {
            match *s {
                Sig::Const(v) if v == absorbing => return Ok(Sig::Const(absorbing)),
                Sig::Const(_) => {}
                Sig::Node(n) => {
                    if !nodes.contains(&n) {
                        nodes.push(n);
                    }
                }
            }
        }
        match nodes.len() {
            0 => Ok(Sig::Const(!absorbing)),
            1 => Ok(Sig::Node(nodes[0])),
            _ => Ok(Sig::Node(self.gate(kind, nodes)?)),
        }
    }

    pub fn and(&mut self, ins: &[Sig]) -> Result<Sig, NetlistError> {
        self.nary(GateKind::And, false, ins)
    }

    pub fn or(&mut self, ins: &[Sig]) -> Result<Sig, NetlistError> {
        self.nary(GateKind::Or, true, ins)
    }

    pub fn xor(&mut self, a: Sig, b: Sig) -> Result<Sig, NetlistError> {
        match (a, b) {
            (Sig::Const(v), s) | (s, Sig::Const(v)) => {
                if v {
                    self.not(s)
                } else {
                    Ok(s)
                }
            }
            (Sig::Node(x), Sig::Node(y)) if x == y => Ok(Sig::Const(false)),
            (Sig::Node(x), Sig::Node(y)) => Ok(Sig::Node(self.gate(GateKind::Xor, vec![x, y])?)),
        }
    }

    pub fn xnor(&mut self, a: Sig, b: Sig) -> Result<Sig, NetlistError> {
        match (a, b) {
            (Sig::Node(x), Sig::Node(y)) if x != y => Ok(Sig::Node(self.gate(GateKind::Xnor, vec![x, y])?)),
            _ => {
                let x = self.xor(a, b)?;
                self.not(x)
            }
        }
    }

    /// Signals `at_least[j]` = "at least j of `ins` are true" for j in
    /// `0..=limit`, built as a sequential unary counter.
    pub fn at_least(&mut self, ins: &[Sig], limit: usize) -> Result<Vec<Sig>, NetlistError> {
        let mut cnt = vec![Sig::Const(false); limit + 1];
        cnt[0] = Sig::Const(true);
        for &x in ins {
            for j in (1..=limit).rev() {
                let carry = self.and(&[x, cnt[j - 1]])?;
                cnt[j] = self.or(&[cnt[j], carry])?;
            }
        }
        Ok(cnt)
    }

    /// True iff exactly `h` of `ins` are true.
    pub fn exactly(&mut self, ins: &[Sig], h: usize) -> Result<Sig, NetlistError> {
        let m = ins.len();
        if h > m {
            return Ok(Sig::Const(false));
        }
        if h == 0 {
            let neg = ins.iter().map(|&s| self.not(s)).collect::<Result<Vec<_>, _>>()?;
            return self.and(&neg);
        }
        if h == m {
            return self.and(ins);
        }
        let cnt = self.at_least(ins, h + 1)?;
        let over = self.not(cnt[h + 1])?;
        self.and(&[cnt[h], over])
    }

    /// Gives a constant-free signal a node of its own named `name` (a buffer
    /// if the signal already has a different name).
    pub fn name_node(&mut self, s: Sig, name: &str) -> Result<NodeId, NetlistError> {
        match s {
            Sig::Node(n) => self.b.add_gate(name, GateKind::Buf, vec![n]),
            Sig::Const(_) => Err(NetlistError::Syntax { line: 0, col: 0, msg: format!("{name} is constant") }),
        }
    }
}
