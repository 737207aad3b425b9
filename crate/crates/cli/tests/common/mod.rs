#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use locksmith::{Circuit, CircuitBuilder, GateKind, InputRole, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAJ_OR_D: &str = "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\n\
g1 = AND(a, b)\ng2 = AND(b, c)\ng3 = AND(c, a)\ny = OR(g1, g2, g3, d)\n";

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_locksmith")
}

pub fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("locksmith runs")
}

pub fn run_json(args: &[&str]) -> (i32, serde_json::Value) {
    let out = run(args);
    let code = out.status.code().unwrap_or(-1);
    let v = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("bad JSON from {args:?} ({e}): {}", String::from_utf8_lossy(&out.stderr)));
    (code, v)
}

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn benchmark(name: &str) -> PathBuf {
    workspace_root().join("benchmarks").join(format!("{name}.bench"))
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// A random multi-output netlist over `n` inputs without key inputs; every
/// input feeds at least one gate.
pub fn random_circuit(seed: u64, n: usize, gates: usize, outputs: usize) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = CircuitBuilder::new();
    let mut ids: Vec<NodeId> = (0..n).map(|i| b.add_input(format!("x{i}"), InputRole::Circuit).unwrap()).collect();
    const KINDS: [GateKind; 6] = [GateKind::And, GateKind::Or, GateKind::Nand, GateKind::Nor, GateKind::Xor, GateKind::Xnor];
    for g in 0..gates {
        let kind = KINDS[rng.gen_range(0..KINDS.len())];
        let mut fanins = vec![if g < n { ids[g] } else { ids[rng.gen_range(0..ids.len())] }];
        fanins.push(ids[rng.gen_range(0..ids.len())]);
        ids.push(b.add_gate(format!("g{g}"), kind, fanins).unwrap());
    }
    for &o in &ids[ids.len() - outputs..] {
        b.add_output(o).unwrap();
    }
    b.build()
}

pub fn json_without_timings(mut v: serde_json::Value) -> serde_json::Value {
    if let Some(o) = v.as_object_mut() {
        o.remove("timings_ms");
    }
    v
}
