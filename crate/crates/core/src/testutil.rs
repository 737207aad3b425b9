//! Helpers shared by unit tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::netlist::{Circuit, CircuitBuilder, GateKind, InputRole, NodeId};

/// A random DAG with `nx` circuit inputs, `nk` key inputs and `ng` gates;
/// the last gate is the only output.
pub fn random_circuit(seed: u64, nx: usize, nk: usize, ng: usize) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::new();
    let mut ids: Vec<NodeId> = Vec::new();
    for i in 0..nx {
        ids.push(b.add_input(format!("x{i}"), InputRole::Circuit).unwrap());
    }
    for i in 0..nk {
        ids.push(b.add_input(format!("keyinput{i}"), InputRole::Key).unwrap());
    }
    const KINDS: [GateKind; 8] = [
        GateKind::And,
        GateKind::Or,
        GateKind::Nand,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
    ];
    for g in 0..ng {
        let kind = KINDS[rng.gen_range(0..KINDS.len())];
        let arity = if matches!(kind, GateKind::Not | GateKind::Buf) { 1 } else { rng.gen_range(2..=3) };
        let fanins = (0..arity).map(|_| ids[rng.gen_range(0..ids.len())]).collect();
        ids.push(b.add_gate(format!("g{g}"), kind, fanins).unwrap());
    }
    b.add_output(*ids.last().unwrap()).unwrap();
    b.build()
}

/// Value of `node` for every assignment to all inputs; bit `a` of the
/// result corresponds to the assignment whose MSB-first bits spell `a`.
pub fn node_table(c: &Circuit, node: NodeId) -> Vec<bool> {
    let n = c.inputs().len();
    (0..1u64 << n)
        .map(|a| {
            let words: Vec<u64> = (0..n).map(|i| if a >> (n - 1 - i) & 1 == 1 { !0 } else { 0 }).collect();
            c.eval_words(&words)[node.index()] & 1 == 1
        })
        .collect()
}
