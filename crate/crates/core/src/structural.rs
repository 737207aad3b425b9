//! Structural stage: key/input comparators and support-matched candidate
//! stripper nodes.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::netlist::{Circuit, InputSet, NodeId};

/// Default bound on the number of candidate nodes handed to the functional
/// stage.
pub const DEFAULT_CANDIDATE_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Polarity {
    /// The gate computes x XNOR k.
    Eq,
    /// The gate computes x XOR k.
    Neq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ComparatorTriple {
    pub gate: NodeId,
    pub x: NodeId,
    pub k: NodeId,
    pub polarity: Polarity,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructuralError {
    #[error("no comparators found")]
    NoComparators,
}

/// Truth table of `gate` over its two support inputs: bit `2*k + x`.
fn table2(c: &Circuit, gate: NodeId, x: NodeId, k: NodeId) -> u8 {
    let cone = c.transitive_fanin(gate).expect("gate id comes from the circuit");
    let mut val = std::collections::HashMap::with_capacity(cone.len() + 1);
    for n in cone.into_iter().chain(std::iter::once(gate)) {
        let v = if n == x {
            0b1010u64
        } else if n == k {
            0b1100u64
        } else if c.is_input(n) {
            0
        } else {
            c.kind(n).eval_words(c.fanins(n).iter().map(|f| val[f]))
        };
        val.insert(n, v);
    }
    (val[&gate] & 0xf) as u8
}

fn classify(c: &Circuit, gate: NodeId, support: &InputSet) -> Option<ComparatorTriple> {
    if support.len() != 2 {
        return None;
    }
    let mut it = support.iter().map(|p| c.inputs()[p]);
    let (a, b) = (it.next()?, it.next()?);
    let (x, k) = match (c.is_key(a), c.is_key(b)) {
        (false, true) => (a, b),
        (true, false) => (b, a),
        _ => return None,
    };
    let polarity = match table2(c, gate, x, k) {
        0b0110 => Polarity::Neq,
        0b1001 => Polarity::Eq,
        _ => return None,
    };
    Some(ComparatorTriple { gate, x, k, polarity })
}

/// Every gate whose support is one circuit input and one key input and
/// whose function is their XOR or XNOR, in topological order.
pub fn find_comparators(c: &Circuit) -> Vec<ComparatorTriple> {
    if c.key_inputs().is_empty() {
        return Vec::new();
    }
    let supports = c.support_sets();
    let gates: Vec<NodeId> = c.gates().collect();
    gates.par_iter().filter_map(|&g| classify(c, g, &supports[g.index()])).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateSet {
    pub nodes: Vec<NodeId>,
    /// Comp_x: the circuit inputs seen in comparators, sorted.
    pub target_support: Vec<NodeId>,
    /// Matching nodes dropped because of the cap.
    pub dropped: usize,
}

/// Gates whose support is exactly the set of circuit inputs appearing in
/// `comp`, in topological order, keeping at most `cap`.
pub fn support_match(c: &Circuit, comp: &[ComparatorTriple], cap: usize) -> Result<CandidateSet, StructuralError> {
    if comp.is_empty() {
        return Err(StructuralError::NoComparators);
    }
    let mut target = InputSet::empty(c.inputs().len());
    for t in comp {
        target.insert(c.input_position(t.x).expect("comparator x is an input"));
    }
    let supports = c.support_sets();
    let mut nodes: Vec<NodeId> = c.gates().filter(|g| supports[g.index()] == target).collect();
    let dropped = nodes.len().saturating_sub(cap);
    if dropped > 0 {
        log::warn!("{} candidate nodes match the comparator support; keeping the first {cap}", nodes.len());
        nodes.truncate(cap);
    }
    let target_support = target.iter().map(|p| c.inputs()[p]).collect();
    Ok(CandidateSet { nodes, target_support, dropped })
}

/// For each key input (in `key_inputs()` order), the circuit input it is
/// compared against, taken from its first comparator.
pub fn key_pairing(c: &Circuit, comp: &[ComparatorTriple]) -> Vec<Option<NodeId>> {
    c.key_inputs().iter().map(|&k| comp.iter().find(|t| t.k == k).map(|t| t.x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::Bits;
    use crate::locking::{lock_sfll_hd, obfuscate, LockParams, ProtectedCube};
    use crate::netlist::{parse_bench, DEFAULT_KEY_PREFIX};
    use crate::testutil::{node_table, random_circuit};

    fn maj() -> Circuit {
        parse_bench(crate::netlist::tests::MAJ_OR_D, DEFAULT_KEY_PREFIX).unwrap()
    }

    fn names(c: &Circuit, ids: &[NodeId]) -> Vec<String> {
        ids.iter().map(|&i| c.name(i).to_string()).collect()
    }

    #[test]
    fn worked_ttlock_comparators() {
        let l = parse_bench(crate::netlist::bench::tests::SMALL_LOCKED, DEFAULT_KEY_PREFIX).unwrap();
        let comp = find_comparators(&l);
        let pairs: Vec<(&str, &str)> = comp.iter().map(|t| (l.name(t.x), l.name(t.k))).collect();
        assert_eq!(pairs, vec![("a", "keyinput0"), ("b", "keyinput1"), ("c", "keyinput2"), ("d", "keyinput3")]);
        assert!(comp.iter().all(|t| t.polarity == Polarity::Eq));
        let cand = support_match(&l, &comp, DEFAULT_CANDIDATE_CAP).unwrap();
        assert_eq!(names(&l, &cand.target_support), vec!["a", "b", "c", "d"]);
        // y_orig and the stripper F both depend on exactly a, b, c, d
        assert!(names(&l, &cand.nodes).contains(&"F".to_string()));
        assert!(names(&l, &cand.nodes).contains(&"y_orig".to_string()));
        assert_eq!(key_pairing(&l, &comp).iter().flatten().count(), 4);
    }

    #[test]
    fn obfuscated_lock_keeps_comparators() {
        let c = maj();
        let cube = ProtectedCube::leading(&c, "1001".parse().unwrap()).unwrap();
        for h in 0..=1 {
            for seed in 0..6 {
                let params = LockParams { h, obfuscate: Some(seed), ..Default::default() };
                let l = lock_sfll_hd(&c, &cube, &params).unwrap().circuit;
                let comp = find_comparators(&l);
                let paired = key_pairing(&l, &comp);
                let want: Vec<Option<NodeId>> = ["a", "b", "c", "d"].iter().map(|n| l.find(n)).collect();
                assert_eq!(paired, want, "h={h} seed={seed}");
                let cand = support_match(&l, &comp, DEFAULT_CANDIDATE_CAP).unwrap();
                assert!(!cand.nodes.is_empty());
            }
        }
    }

    #[test]
    fn no_keys_no_comparators() {
        assert!(find_comparators(&maj()).is_empty());
        assert_eq!(support_match(&maj(), &[], 8).unwrap_err(), StructuralError::NoComparators);
    }

    #[test]
    fn fabricated_comp_matches_root() {
        let c = maj();
        let comp: Vec<ComparatorTriple> = ["a", "b", "c", "d"]
            .iter()
            .map(|n| {
                let x = c.find(n).unwrap();
                ComparatorTriple { gate: x, x, k: x, polarity: Polarity::Eq }
            })
            .collect();
        let cand = support_match(&c, &comp, 8).unwrap();
        assert_eq!(names(&c, &cand.nodes), vec!["y"]);
        let single = support_match(&c, &comp[..1], 8).unwrap();
        assert!(single.nodes.is_empty());
    }

    #[test]
    fn single_input_support_chain() {
        let c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(z)\nn1 = NOT(a)\nn2 = BUF(n1)\nz = AND(n2, b)\n", DEFAULT_KEY_PREFIX).unwrap();
        let a = c.find("a").unwrap();
        let comp = [ComparatorTriple { gate: a, x: a, k: a, polarity: Polarity::Eq }];
        assert_eq!(names(&c, &support_match(&c, &comp, 8).unwrap().nodes), vec!["n1", "n2"]);
        assert_eq!(support_match(&c, &comp, 1).unwrap().dropped, 1);
    }

    // brute-force definition: structural support {x, k} and a 4-row table
    // equal to parity or its complement
    fn reference(c: &Circuit) -> Vec<ComparatorTriple> {
        let mut out = Vec::new();
        for g in c.gates() {
            let sup = c.support(g).unwrap();
            if sup.len() != 2 || c.is_key(sup[0]) == c.is_key(sup[1]) {
                continue;
            }
            let (x, k) = if c.is_key(sup[1]) { (sup[0], sup[1]) } else { (sup[1], sup[0]) };
            let t = node_table(c, g);
            let n = c.inputs().len();
            let (px, pk) = (c.input_position(x).unwrap(), c.input_position(k).unwrap());
            let row = |xv: bool, kv: bool| {
                let a: usize = (if xv { 1 << (n - 1 - px) } else { 0 }) | (if kv { 1 << (n - 1 - pk) } else { 0 });
                t[a]
            };
            let xor = [(false, false), (true, false), (false, true), (true, true)].iter().all(|&(xv, kv)| row(xv, kv) == (xv ^ kv));
            let xnor = [(false, false), (true, false), (false, true), (true, true)].iter().all(|&(xv, kv)| row(xv, kv) != (xv ^ kv));
            if xor || xnor {
                out.push(ComparatorTriple { gate: g, x, k, polarity: if xor { Polarity::Neq } else { Polarity::Eq } });
            }
        }
        out
    }

    #[test]
    fn matches_reference_on_small_circuits() {
        let mut found = 0;
        for seed in 0..3000 {
            let c = random_circuit(seed, 2, 2, 8);
            let got = find_comparators(&c);
            assert_eq!(got, reference(&c), "seed {seed}");
            found += got.len();
        }
        assert!(found > 50, "generator too weak: {found}");
    }

    #[test]
    fn deterministic_order() {
        let c = maj();
        let cube = ProtectedCube::leading(&c, Bits::from_u64(0b0110, 4)).unwrap();
        let l = lock_sfll_hd(&c, &cube, &LockParams { h: 1, ..Default::default() }).unwrap();
        let o = obfuscate(&l.circuit, 9);
        let a = find_comparators(&o);
        assert_eq!(a, find_comparators(&o));
        assert!(a.windows(2).all(|w| w[0].gate < w[1].gate));
    }
}
