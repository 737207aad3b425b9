//! Functional stage: recover the protected cube from a candidate stripper
//! node by unateness or Hamming-distance analysis, then confirm it with an
//! equivalence check.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bits::Bits;
use crate::locking::{build_strip_circuit, LockError};
use crate::netlist::{Circuit, NetlistError, NodeId};
use crate::sat::{encode_circuit, encode_cone, hamming_eq, xor_gate, ClauseSink, Lit, SatError, Signal, SolveResult, Solver};
use crate::structural::{find_comparators, key_pairing, support_match, ComparatorTriple, DEFAULT_CANDIDATE_CAP};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FunctionalError {
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Lock(#[from] LockError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("cube does not cover the support of the node")]
    CubeMismatch,
}

/// A value for every input in a node's support.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeAssignment {
    /// Sorted by node id, like [`Circuit::support`].
    pub bindings: Vec<(NodeId, bool)>,
}

impl CubeAssignment {
    pub fn get(&self, x: NodeId) -> Option<bool> {
        self.bindings.iter().find(|b| b.0 == x).map(|b| b.1)
    }

    pub fn bits(&self) -> Bits {
        Bits::new(self.bindings.iter().map(|b| b.1).collect())
    }

    pub fn inputs(&self) -> Vec<NodeId> {
        self.bindings.iter().map(|b| b.0).collect()
    }

    fn complement(&self) -> CubeAssignment {
        CubeAssignment { bindings: self.bindings.iter().map(|&(x, v)| (x, !v)).collect() }
    }
}

/// Two copies of a node's cone over inputs X and X', with switchable
/// equalities x_i = x_i'.
struct Pair {
    solver: Solver,
    support: Vec<NodeId>,
    xs: Vec<Lit>,
    ys: Vec<Lit>,
    same: Vec<Lit>,
    f: Signal,
    g: Signal,
}

impl Pair {
    fn new(c: &Circuit, node: NodeId, negate: bool, timeout: Option<Duration>) -> Result<Pair, FunctionalError> {
        let support = c.support(node)?;
        let mut solver = Solver::with_timeout(timeout);
        let xs: Vec<Lit> = support.iter().map(|_| solver.new_var()).collect();
        let ys: Vec<Lit> = support.iter().map(|_| solver.new_var()).collect();
        let at = |v: &[Lit], n: NodeId| support.iter().position(|&s| s == n).map(|p| Signal::Lit(v[p]));
        let f = encode_cone(&mut solver, c, &[node], "X", |n| at(&xs, n)).node(node);
        let g = encode_cone(&mut solver, c, &[node], "X'", |n| at(&ys, n)).node(node);
        let (f, g) = if negate { (!f, !g) } else { (f, g) };
        let mut same = Vec::with_capacity(xs.len());
        for (&x, &y) in xs.iter().zip(&ys) {
            let s = solver.new_var();
            solver.add_clause(&[!s, !x, y]);
            solver.add_clause(&[!s, x, !y]);
            same.push(s);
        }
        Ok(Pair { solver, support, xs, ys, same, f, g })
    }

    fn m(&self) -> usize {
        self.support.len()
    }

    /// Solves under `asm` plus the given required signals; constant false
    /// requirements make the query trivially unsatisfiable.
    fn solve(&mut self, mut asm: Vec<Lit>, require: &[Signal]) -> Result<SolveResult, SatError> {
        for s in require {
            match *s {
                Signal::Const(true) => {}
                Signal::Const(false) => return Ok(SolveResult::Unsat),
                Signal::Lit(l) => asm.push(l),
            }
        }
        self.solver.solve(&asm)
    }

    fn model(&self) -> Vec<(bool, bool)> {
        self.xs.iter().zip(&self.ys).map(|(&x, &y)| (self.solver.value(x), self.solver.value(y))).collect()
    }

    fn cube(&self, values: &[Option<bool>]) -> Option<CubeAssignment> {
        let bindings = self.support.iter().zip(values).map(|(&x, v)| v.map(|v| (x, v))).collect::<Option<Vec<_>>>()?;
        Some(CubeAssignment { bindings })
    }
}

fn lit(l: Lit, v: bool) -> Lit {
    if v {
        l
    } else {
        !l
    }
}

/// True iff f(.., x=0, ..) <= f(.., x=1, ..) for the function of `node`.
pub fn is_positive_unate(c: &Circuit, node: NodeId, x: NodeId, timeout: Option<Duration>) -> Result<bool, FunctionalError> {
    let mut s = Solver::with_timeout(timeout);
    let low = encode_circuit(&mut s, c, "x=0", |n| (n == x).then_some(Signal::Const(false)));
    let shared: Vec<(NodeId, Signal)> = c.inputs().iter().filter(|&&i| i != x).map(|&i| (i, low.node(i))).collect();
    let high = encode_circuit(&mut s, c, "x=1", |n| {
        if n == x {
            Some(Signal::Const(true))
        } else {
            shared.iter().find(|p| p.0 == n).map(|p| p.1)
        }
    });
    let (f0, f1) = (low.node(node), high.node(node));
    s.assert_signal(f0);
    s.assert_signal(!f1);
    Ok(s.solve(&[])? == SolveResult::Unsat)
}

fn unateness_pair(p: &mut Pair) -> Result<Option<CubeAssignment>, FunctionalError> {
    let m = p.m();
    let mut values = Vec::with_capacity(m);
    for j in 0..m {
        let others: Vec<Lit> = (0..m).filter(|&i| i != j).map(|i| p.same[i]).collect();
        let (f, g) = (p.f, !p.g);
        // f(x_j=0) = 1 and f(x_j=1) = 0 impossible: positive unate
        let mut asm = others.clone();
        asm.extend([!p.xs[j], p.ys[j]]);
        if p.solve(asm, &[f, g])? == SolveResult::Unsat {
            values.push(Some(true));
            continue;
        }
        let mut asm = others;
        asm.extend([p.xs[j], !p.ys[j]]);
        if p.solve(asm, &[f, g])? == SolveResult::Unsat {
            values.push(Some(false));
            continue;
        }
        return Ok(None);
    }
    Ok(p.cube(&values))
}

/// Each support input maps to 1 if the node is positive unate in it, 0 if
/// negative unate; `None` if some input is binate.
pub fn analyze_unateness(c: &Circuit, node: NodeId, timeout: Option<Duration>) -> Result<Option<CubeAssignment>, FunctionalError> {
    unateness_pair(&mut Pair::new(c, node, false, timeout)?)
}

fn onset_pair(p: &mut Pair, h: usize) -> Result<(), FunctionalError> {
    let (f, g) = (p.f, p.g);
    p.solver.assert_signal(f);
    p.solver.assert_signal(g);
    let xs: Vec<Signal> = p.xs.iter().map(|&l| l.into()).collect();
    let ys: Vec<Signal> = p.ys.iter().map(|&l| l.into()).collect();
    hamming_eq(&mut p.solver, &xs, &ys, 2 * h)?;
    Ok(())
}

fn sliding_window_pair(p: &mut Pair, h: usize) -> Result<Option<CubeAssignment>, FunctionalError> {
    if 2 * h > p.m() {
        return Ok(None);
    }
    onset_pair(p, h)?;
    if p.solve(vec![], &[])? == SolveResult::Unsat {
        return Ok(None);
    }
    let model = p.model();
    let mut values = Vec::with_capacity(p.m());
    for (j, &(mi, mi2)) in model.iter().enumerate() {
        if mi == mi2 {
            values.push(Some(mi));
            continue;
        }
        let r = p.solve(vec![lit(p.xs[j], mi), lit(p.ys[j], mi)], &[])?;
        let r2 = p.solve(vec![lit(p.xs[j], mi2), lit(p.ys[j], mi2)], &[])?;
        match (r, r2) {
            (SolveResult::Sat, SolveResult::Unsat) => values.push(Some(mi)),
            (SolveResult::Unsat, SolveResult::Sat) => values.push(Some(mi2)),
            _ => return Ok(None),
        }
    }
    Ok(p.cube(&values))
}

/// Two onset points 2h apart fix the bits they agree on; every other bit is
/// settled by asking which value admits another such pair agreeing on it.
pub fn sliding_window(c: &Circuit, node: NodeId, h: usize, timeout: Option<Duration>) -> Result<Option<CubeAssignment>, FunctionalError> {
    sliding_window_pair(&mut Pair::new(c, node, false, timeout)?, h)
}

fn distance_2h_pair(p: &mut Pair, h: usize) -> Result<Option<CubeAssignment>, FunctionalError> {
    if 2 * h > p.m() {
        return Ok(None);
    }
    onset_pair(p, h)?;
    if p.solve(vec![], &[])? == SolveResult::Unsat {
        return Ok(None);
    }
    let first = p.model();
    let mut values: Vec<Option<bool>> = first.iter().map(|&(a, b)| (a == b).then_some(a)).collect();
    let cnst: Vec<Lit> = (0..p.m()).filter(|&i| first[i].0 != first[i].1).map(|i| p.same[i]).collect();
    if p.solve(cnst, &[])? == SolveResult::Unsat {
        return Ok(None);
    }
    for (v, (a, b)) in values.iter_mut().zip(p.model()) {
        if a == b {
            match *v {
                Some(prev) if prev != a => return Ok(None),
                _ => *v = Some(a),
            }
        }
    }
    Ok(p.cube(&values))
}

/// Two solves: the first pair of onset points 2h apart fixes the agreeing
/// bits; a second pair forced to agree on the remaining bits fixes those.
pub fn distance_2h(c: &Circuit, node: NodeId, h: usize, timeout: Option<Duration>) -> Result<Option<CubeAssignment>, FunctionalError> {
    distance_2h_pair(&mut Pair::new(c, node, false, timeout)?, h)
}

fn equivalence_polarity(
    c: &Circuit,
    node: NodeId,
    cube: &CubeAssignment,
    h: usize,
    negate: bool,
    timeout: Option<Duration>,
) -> Result<bool, FunctionalError> {
    let support = c.support(node)?;
    if cube.inputs() != support {
        return Err(FunctionalError::CubeMismatch);
    }
    let names: Vec<&str> = support.iter().map(|&x| c.name(x)).collect();
    let strip = build_strip_circuit(&names, &cube.bits(), h)?;
    let mut s = Solver::with_timeout(timeout);
    let sc = encode_circuit(&mut s, &strip, "strip", |_| None);
    let ins = sc.nodes(strip.inputs());
    let f = encode_cone(&mut s, c, &[node], "node", |n| support.iter().position(|&x| x == n).map(|p| ins[p])).node(node);
    let differ = xor_gate(&mut s, &[f, sc.outputs(&strip)[0], Signal::Const(negate)]);
    s.assert_signal(differ);
    Ok(s.solve(&[])? == SolveResult::Unsat)
}

/// Whether the node computes exactly strip_h(cube) over its support.
pub fn equivalence_check(c: &Circuit, node: NodeId, cube: &CubeAssignment, h: usize, timeout: Option<Duration>) -> Result<bool, FunctionalError> {
    equivalence_polarity(c, node, cube, h, false, timeout)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Unateness,
    SlidingWindow,
    Distance2h,
}

/// The analysis used for a node with support size `m` at distance `h`
/// (already mirrored so that 2h <= m).
pub fn select_algorithm(m: usize, h: usize) -> Option<Algorithm> {
    if h == 0 {
        Some(Algorithm::Unateness)
    } else if 4 * h <= m {
        Some(Algorithm::Distance2h)
    } else if h < m / 2 {
        Some(Algorithm::SlidingWindow)
    } else {
        None
    }
}

/// Which values of h to try.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HChoice {
    Fixed(usize),
    /// Every h in the list, in order.
    Sweep(Vec<usize>),
    /// 0 through floor(m/3), where m is the comparator count.
    DefaultSweep,
}

#[derive(Clone, Debug)]
pub struct ExtractOptions {
    pub h: HChoice,
    pub timeout: Option<Duration>,
    pub candidate_cap: usize,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { h: HChoice::DefaultSweep, timeout: Some(crate::sat::DEFAULT_TIMEOUT), candidate_cap: DEFAULT_CANDIDATE_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyCandidate {
    /// One bit per key input, in `key_inputs()` order.
    pub key: Bits,
    pub source_node: NodeId,
    pub h_used: usize,
    pub algorithm: Algorithm,
    /// The stripper was found as the complement of `source_node`.
    pub negated: bool,
    /// Bitwise complement of another candidate, not itself checked.
    pub derived_complement: bool,
}

/// What happened to one (node, h, polarity) analysis.
#[derive(Clone, Debug, Serialize)]
pub struct NodeReport {
    pub node: String,
    pub h: usize,
    pub negated: bool,
    pub algorithm: Option<Algorithm>,
    pub cube: Option<String>,
    pub equivalent: Option<bool>,
    pub error: Option<String>,
    pub millis: u128,
}

#[derive(Clone, Debug)]
pub struct Extraction {
    pub comparators: Vec<ComparatorTriple>,
    pub candidate_nodes: Vec<NodeId>,
    pub dropped_candidates: usize,
    /// Key inputs no comparator mentions.
    pub unpaired_keys: Vec<NodeId>,
    pub candidates: Vec<KeyCandidate>,
    pub reports: Vec<NodeReport>,
    /// Some analysis hit the solver resource limit.
    pub timed_out: bool,
}

impl Extraction {
    /// The structural stage paired every key input with a circuit input.
    pub fn structurally_complete(&self) -> bool {
        self.unpaired_keys.is_empty() && !self.comparators.is_empty()
    }
}

struct Found {
    cube: CubeAssignment,
    algorithm: Algorithm,
    negated: bool,
}

fn analyze_node(
    c: &Circuit,
    node: NodeId,
    h: usize,
    timeout: Option<Duration>,
    reports: &mut Vec<NodeReport>,
) -> Result<Option<Found>, SatError> {
    let m = c.support(node).map(|s| s.len()).unwrap_or(0);
    if h > m {
        return Ok(None);
    }
    let mirrored = 2 * h > m;
    let hh = if mirrored { m - h } else { h };
    let algorithm = select_algorithm(m, hh);
    for negated in [false, true] {
        let start = Instant::now();
        let mut report = NodeReport {
            node: c.name(node).to_string(),
            h,
            negated,
            algorithm,
            cube: None,
            equivalent: None,
            error: None,
            millis: 0,
        };
        let outcome = (|| -> Result<Option<CubeAssignment>, FunctionalError> {
            let Some(algorithm) = algorithm else { return Ok(None) };
            let mut p = Pair::new(c, node, negated, timeout)?;
            let cube = match algorithm {
                Algorithm::Unateness => unateness_pair(&mut p)?,
                Algorithm::SlidingWindow => sliding_window_pair(&mut p, hh)?,
                Algorithm::Distance2h => distance_2h_pair(&mut p, hh)?,
            };
            let Some(cube) = cube else { return Ok(None) };
            let cube = if mirrored { cube.complement() } else { cube };
            Ok(Some(cube))
        })();
        let result = match outcome {
            Ok(Some(cube)) => {
                report.cube = Some(cube.bits().to_string());
                match equivalence_polarity(c, node, &cube, h, negated, timeout) {
                    Ok(eq) => {
                        report.equivalent = Some(eq);
                        Ok(eq.then_some(cube))
                    }
                    Err(e) => Err(e),
                }
            }
            Ok(None) => Ok(None),
            Err(e) => Err(e),
        };
        report.millis = start.elapsed().as_millis();
        match result {
            Ok(Some(cube)) => {
                reports.push(report);
                return Ok(Some(Found { cube, algorithm: algorithm.unwrap(), negated }));
            }
            Ok(None) => reports.push(report),
            Err(e) => {
                report.error = Some(e.to_string());
                reports.push(report);
                if let FunctionalError::Sat(s @ SatError::ResourceLimit(_)) = e {
                    return Err(s);
                }
            }
        }
    }
    Ok(None)
}

/// Runs the structural stage, then analyzes every candidate node at each
/// requested h, keeping cubes that pass the equivalence check and mapping
/// them to key values through the comparator pairing.
pub fn extract_candidate_keys(c: &Circuit, opts: &ExtractOptions) -> Extraction {
    let comparators = find_comparators(c);
    let pairing = key_pairing(c, &comparators);
    let unpaired_keys: Vec<NodeId> =
        c.key_inputs().iter().zip(&pairing).filter(|(_, x)| x.is_none()).map(|(&k, _)| k).collect();
    let mut out = Extraction {
        comparators,
        candidate_nodes: Vec::new(),
        dropped_candidates: 0,
        unpaired_keys,
        candidates: Vec::new(),
        reports: Vec::new(),
        timed_out: false,
    };
    let Ok(cand) = support_match(c, &out.comparators, opts.candidate_cap) else { return out };
    out.candidate_nodes = cand.nodes.clone();
    out.dropped_candidates = cand.dropped;
    if !out.unpaired_keys.is_empty() {
        log::warn!("{} key inputs have no comparator; skipping functional analysis", out.unpaired_keys.len());
        return out;
    }
    let m = cand.target_support.len();
    let hs: Vec<usize> = match &opts.h {
        HChoice::Fixed(h) => vec![*h],
        HChoice::Sweep(v) => v.clone(),
        HChoice::DefaultSweep => (0..=m / 3).collect(),
    };

    type PerNode = (Vec<NodeReport>, Option<(usize, Found)>, bool);
    let per_node: Vec<PerNode> = cand
        .nodes
        .par_iter()
        .map(|&node| {
            let mut reports = Vec::new();
            for &h in &hs {
                match analyze_node(c, node, h, opts.timeout, &mut reports) {
                    Ok(Some(found)) => return (reports, Some((h, found)), false),
                    Ok(None) => {}
                    Err(_) => return (reports, None, true),
                }
            }
            (reports, None, false)
        })
        .collect();

    for (&node, (reports, found, timed_out)) in cand.nodes.iter().zip(per_node) {
        out.reports.extend(reports);
        out.timed_out |= timed_out;
        let Some((h, found)) = found else { continue };
        let key = Bits::new(pairing.iter().map(|x| found.cube.get(x.unwrap()).unwrap_or(false)).collect());
        if out.candidates.iter().any(|k| k.key == key) {
            continue;
        }
        let complement_too = 2 * h == m;
        out.candidates.push(KeyCandidate {
            key: key.clone(),
            source_node: node,
            h_used: h,
            algorithm: found.algorithm,
            negated: found.negated,
            derived_complement: false,
        });
        if complement_too {
            let comp = key.complement();
            if !out.candidates.iter().any(|k| k.key == comp) {
                out.candidates.push(KeyCandidate {
                    key: comp,
                    source_node: node,
                    h_used: h,
                    algorithm: found.algorithm,
                    negated: found.negated,
                    derived_complement: true,
                });
            }
        }
    }
    out
}
