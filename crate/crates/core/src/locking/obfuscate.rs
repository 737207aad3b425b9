//! Seeded AND-inverter rewriting that disperses locking structure while
//! preserving function.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netlist::{Circuit, CircuitBuilder, GateKind, InputRole, NodeId};

/// AIG literal: node index times two, plus one when complemented. Node 0 is
/// constant false.
type ALit = u32;

const FALSE: ALit = 0;
const TRUE: ALit = 1;

fn neg(l: ALit) -> ALit {
    l ^ 1
}

fn node_of(l: ALit) -> usize {
    (l >> 1) as usize
}

#[derive(Clone, Copy)]
enum ANode {
    Const,
    Input,
    And(ALit, ALit),
}

struct Aig {
    nodes: Vec<ANode>,
    strash: HashMap<(ALit, ALit), ALit>,
}

impl Aig {
    fn new() -> Self {
        Aig { nodes: vec![ANode::Const], strash: HashMap::new() }
    }

    fn input(&mut self) -> ALit {
        self.nodes.push(ANode::Input);
        ((self.nodes.len() - 1) as ALit) << 1
    }

    fn and(&mut self, a: ALit, b: ALit) -> ALit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == FALSE || a == neg(b) {
            return FALSE;
        }
        if a == TRUE || a == b {
            return b;
        }
        if let Some(&l) = self.strash.get(&(a, b)) {
            return l;
        }
        self.nodes.push(ANode::And(a, b));
        let l = ((self.nodes.len() - 1) as ALit) << 1;
        self.strash.insert((a, b), l);
        l
    }

    fn or(&mut self, a: ALit, b: ALit) -> ALit {
        neg(self.and(neg(a), neg(b)))
    }

    /// Balanced conjunction of `leaves` after a seeded shuffle.
    fn and_tree(&mut self, mut leaves: Vec<ALit>, rng: &mut impl Rng) -> ALit {
        leaves.shuffle(rng);
        if leaves.is_empty() {
            return TRUE;
        }
        while leaves.len() > 1 {
            let mut next = Vec::with_capacity(leaves.len().div_ceil(2));
            for pair in leaves.chunks(2) {
                next.push(if pair.len() == 2 { self.and(pair[0], pair[1]) } else { pair[0] });
            }
            leaves = next;
        }
        leaves[0]
    }

    fn xor(&mut self, a: ALit, b: ALit, rng: &mut impl Rng) -> ALit {
        if rng.gen() {
            let p = self.and(a, neg(b));
            let q = self.and(neg(a), b);
            self.or(p, q)
        } else {
            let p = self.or(a, b);
            let q = self.and(a, b);
            self.and(p, neg(q))
        }
    }
}

fn from_circuit(c: &Circuit, rng: &mut impl Rng) -> (Aig, Vec<ALit>) {
    let mut aig = Aig::new();
    let mut lit = vec![FALSE; c.num_nodes()];
    for &i in c.inputs() {
        lit[i.index()] = aig.input();
    }
    for g in c.gates() {
        let ins: Vec<ALit> = c.fanins(g).iter().map(|f| lit[f.index()]).collect();
        lit[g.index()] = match c.kind(g) {
            GateKind::Input => unreachable!(),
            GateKind::Buf => ins[0],
            GateKind::Not => neg(ins[0]),
            GateKind::And => aig.and_tree(ins, rng),
            GateKind::Nand => neg(aig.and_tree(ins, rng)),
            GateKind::Or => neg(aig.and_tree(ins.into_iter().map(neg).collect(), rng)),
            GateKind::Nor => aig.and_tree(ins.into_iter().map(neg).collect(), rng),
            GateKind::Xor | GateKind::Xnor => {
                let mut ins = ins;
                ins.shuffle(rng);
                let mut acc = FALSE;
                for x in ins {
                    acc = aig.xor(acc, x, rng);
                }
                if c.kind(g) == GateKind::Xnor {
                    neg(acc)
                } else {
                    acc
                }
            }
        };
    }
    let outs = c.outputs().iter().map(|o| lit[o.index()]).collect();
    (aig, outs)
}

/// Rebuilds the AIG reachable from `outs`, collapsing single-fanout AND
/// trees into multi-input conjunctions and re-associating them at random.
fn balance(old: &Aig, outs: &[ALit], rng: &mut impl Rng) -> (Aig, Vec<ALit>) {
    let mut fanout = vec![0u32; old.nodes.len()];
    for n in &old.nodes {
        if let ANode::And(a, b) = *n {
            fanout[node_of(a)] += 1;
            fanout[node_of(b)] += 1;
        }
    }
    for &o in outs {
        fanout[node_of(o)] += 1;
    }
    let mut aig = Aig::new();
    let mut map: Vec<Option<ALit>> = vec![None; old.nodes.len()];
    map[0] = Some(FALSE);
    for (i, n) in old.nodes.iter().enumerate() {
        if let ANode::Input = n {
            map[i] = Some(aig.input());
        }
    }
    let outs = outs
        .iter()
        .map(|&o| rebuild(old, &fanout, &mut aig, &mut map, node_of(o), rng) ^ (o & 1))
        .collect();
    (aig, outs)
}

/// An AND of two inverted ANDs over the same pair of nodes: the top of an
/// XOR or XNOR decomposition. These stay intact.
fn is_xor_root(aig: &Aig, n: usize) -> bool {
    let ANode::And(a, b) = aig.nodes[n] else { return false };
    if a & 1 == 0 || b & 1 == 0 {
        return false;
    }
    let (ANode::And(p, q), ANode::And(r, t)) = (aig.nodes[node_of(a)], aig.nodes[node_of(b)]) else { return false };
    let mut u = [node_of(p), node_of(q)];
    let mut v = [node_of(r), node_of(t)];
    u.sort_unstable();
    v.sort_unstable();
    u == v && u[0] != u[1]
}

fn rebuild(old: &Aig, fanout: &[u32], aig: &mut Aig, map: &mut [Option<ALit>], root: usize, rng: &mut impl Rng) -> ALit {
    if let Some(l) = map[root] {
        return l;
    }
    // leaves of the supergate rooted here
    let mut leaves = Vec::new();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        let ANode::And(a, b) = old.nodes[n] else { unreachable!() };
        for l in [a, b] {
            let m = node_of(l);
            if l & 1 == 0 && matches!(old.nodes[m], ANode::And(..)) && fanout[m] == 1 && !is_xor_root(old, m) {
                stack.push(m);
            } else {
                leaves.push(l);
            }
        }
    }
    let mut new_leaves = Vec::with_capacity(leaves.len());
    for l in leaves {
        new_leaves.push(rebuild(old, fanout, aig, map, node_of(l), rng) ^ (l & 1));
    }
    let l = aig.and_tree(new_leaves, rng);
    map[root] = Some(l);
    l
}

fn to_circuit(c: &Circuit, aig: &Aig, outs: &[ALit]) -> Circuit {
    let mut b = CircuitBuilder::new();
    b.reserve(c.output_names().into_iter().map(String::from));
    let mut ids: Vec<Option<NodeId>> = vec![None; aig.nodes.len()];
    let mut inverted: HashMap<usize, NodeId> = HashMap::new();
    let mut k = 0;
    for (n, node) in aig.nodes.iter().enumerate() {
        if let ANode::Input = node {
            let orig = c.inputs()[k];
            k += 1;
            let role = if c.is_key(orig) { InputRole::Key } else { InputRole::Circuit };
            ids[n] = Some(b.add_input(c.name(orig), role).expect("input names are unique"));
        }
    }

    // output names go to the node itself where possible
    let mut out_name: HashMap<usize, &str> = HashMap::new();
    for (&o, name) in outs.iter().zip(c.output_names()) {
        let n = node_of(o);
        if o & 1 == 0 && matches!(aig.nodes[n], ANode::And(..)) && !out_name.values().any(|v| *v == name) {
            out_name.entry(n).or_insert(name);
        }
    }

    // inputs follow the constant node in order
    let any_input = if c.inputs().is_empty() { None } else { ids[1] };
    let mut constant: [Option<NodeId>; 2] = [None, None];
    let mut get = |b: &mut CircuitBuilder, ids: &[Option<NodeId>], l: ALit| -> NodeId {
        let n = node_of(l);
        if n == 0 {
            let v = (l & 1) as usize;
            return *constant[v].get_or_insert_with(|| {
                let x = any_input.expect("constant output needs an input");
                let nx = b.add_fresh_gate("n", GateKind::Not, vec![x]).unwrap();
                let kind = if v == 1 { GateKind::Or } else { GateKind::And };
                b.add_fresh_gate("n", kind, vec![x, nx]).unwrap()
            });
        }
        let id = ids[n].unwrap();
        if l & 1 == 0 {
            return id;
        }
        *inverted.entry(n).or_insert_with(|| b.add_fresh_gate("n", GateKind::Not, vec![id]).unwrap())
    };

    for (n, node) in aig.nodes.iter().enumerate() {
        if let ANode::And(x, y) = *node {
            let fx = get(&mut b, &ids, x);
            let fy = get(&mut b, &ids, y);
            let id = match out_name.get(&n) {
                Some(name) => b.add_gate(*name, GateKind::And, vec![fx, fy]).unwrap(),
                None => b.add_fresh_gate("n", GateKind::And, vec![fx, fy]).unwrap(),
            };
            ids[n] = Some(id);
        }
    }

    let mut final_outs = Vec::with_capacity(outs.len());
    for (&o, name) in outs.iter().zip(c.output_names()) {
        let n = node_of(o);
        let id = if out_name.get(&n) == Some(&name) && o & 1 == 0 {
            ids[n].unwrap()
        } else if let Some(existing) = b.find(name) {
            existing
        } else if o & 1 == 1 && n != 0 {
            b.add_gate(name, GateKind::Not, vec![ids[n].unwrap()]).unwrap()
        } else {
            let src = get(&mut b, &ids, o);
            b.add_gate(name, GateKind::Buf, vec![src]).unwrap()
        };
        final_outs.push(id);
    }
    for id in final_outs {
        b.add_output(id).unwrap();
    }
    b.build()
}

/// Functionally equivalent rewrite of `c` over AND and NOT gates: every gate
/// is decomposed into two-input ANDs with seeded association, structurally
/// hashed with constant propagation, then rebalanced. Input and output names
/// are kept; internal names are not. Deterministic per seed.
pub fn obfuscate(c: &Circuit, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (aig, outs) = from_circuit(c, &mut rng);
    let (aig, outs) = balance(&aig, &outs, &mut rng);
    to_circuit(c, &aig, &outs)
}
