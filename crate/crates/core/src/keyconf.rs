//! Oracle-guided key confirmation. The plain SAT attack is the case where
//! the key predicate admits every key.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::bits::Bits;
use crate::netlist::{Circuit, NodeId};
use crate::sat::{encode_circuit, or_gate, xor_gate, ClauseSink, Lit, SatError, Signal, SolveResult, Solver, SolverStats};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("oracle expects {expected} input bits, got {got}")]
    Width { expected: usize, got: usize },
    #[error("oracle circuit must not have key inputs")]
    Keyed,
    #[error("key has {got} bits, circuit has {expected} key inputs")]
    KeyLength { expected: usize, got: usize },
    #[error("circuit has no inputs")]
    NoInputs,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("transport: {0}")]
    Io(#[from] std::io::Error),
}

/// The activated circuit, seen only through its input/output behavior.
pub trait Oracle {
    fn num_inputs(&self) -> usize;
    fn num_outputs(&self) -> usize;
    fn query(&mut self, x: &Bits) -> Result<Bits, OracleError>;
    /// Evaluations performed so far.
    fn query_count(&self) -> u64;
}

fn check_width(expected: usize, x: &Bits) -> Result<(), OracleError> {
    if x.len() != expected {
        return Err(OracleError::Width { expected, got: x.len() });
    }
    Ok(())
}

/// Simulates an unlocked netlist.
pub struct SimulationOracle {
    circuit: Circuit,
    queries: u64,
}

impl SimulationOracle {
    pub fn new(unlocked: Circuit) -> Result<Self, OracleError> {
        if !unlocked.key_inputs().is_empty() {
            return Err(OracleError::Keyed);
        }
        Ok(SimulationOracle { circuit: unlocked, queries: 0 })
    }
}

impl Oracle for SimulationOracle {
    fn num_inputs(&self) -> usize {
        self.circuit.circuit_inputs().len()
    }

    fn num_outputs(&self) -> usize {
        self.circuit.outputs().len()
    }

    fn query(&mut self, x: &Bits) -> Result<Bits, OracleError> {
        check_width(self.num_inputs(), x)?;
        self.queries += 1;
        Ok(Bits::new(self.circuit.simulate_keyed(x.as_slice(), &[]).expect("width checked")))
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Simulates a locked netlist with a fixed key.
pub struct LockedOracle {
    circuit: Circuit,
    key: Bits,
    queries: u64,
}

impl LockedOracle {
    pub fn new(locked: Circuit, key: Bits) -> Result<Self, OracleError> {
        if locked.circuit_inputs().is_empty() {
            return Err(OracleError::NoInputs);
        }
        if key.len() != locked.key_inputs().len() {
            return Err(OracleError::KeyLength { expected: locked.key_inputs().len(), got: key.len() });
        }
        Ok(LockedOracle { circuit: locked, key, queries: 0 })
    }
}

impl Oracle for LockedOracle {
    fn num_inputs(&self) -> usize {
        self.circuit.circuit_inputs().len()
    }

    fn num_outputs(&self) -> usize {
        self.circuit.outputs().len()
    }

    fn query(&mut self, x: &Bits) -> Result<Bits, OracleError> {
        check_width(self.num_inputs(), x)?;
        self.queries += 1;
        Ok(Bits::new(self.circuit.simulate_keyed(x.as_slice(), self.key.as_slice()).expect("widths checked")))
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Speaks the line protocol: `H <n_in> <n_out>` once from the oracle, then
/// `Q <hex>` / `A <hex>` round trips. Answers are cached.
pub struct ExternalOracle {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    n_in: usize,
    n_out: usize,
    cache: HashMap<Bits, Bits>,
    queries: u64,
    child: Option<Child>,
}

impl ExternalOracle {
    pub fn new(mut reader: Box<dyn BufRead + Send>, writer: Box<dyn Write + Send>) -> Result<Self, OracleError> {
        let line = read_line(&mut reader)?;
        let mut it = line.split_whitespace();
        let (n_in, n_out) = match (it.next(), it.next(), it.next(), it.next()) {
            (Some("H"), Some(a), Some(b), None) => (
                a.parse().map_err(|_| OracleError::Protocol(format!("bad handshake `{line}`")))?,
                b.parse().map_err(|_| OracleError::Protocol(format!("bad handshake `{line}`")))?,
            ),
            _ => return Err(OracleError::Protocol(format!("expected handshake, got `{line}`"))),
        };
        Ok(ExternalOracle { reader, writer, n_in, n_out, cache: HashMap::new(), queries: 0, child: None })
    }

    pub fn connect_tcp(addr: &str) -> Result<Self, OracleError> {
        let stream = TcpStream::connect(addr)?;
        let reader = BufReader::new(stream.try_clone()?);
        ExternalOracle::new(Box::new(reader), Box::new(stream))
    }

    /// Runs `program args..` and talks to it over stdin/stdout.
    pub fn spawn(program: &str, args: &[String]) -> Result<Self, OracleError> {
        let mut child = Command::new(program).args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn()?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let mut o = ExternalOracle::new(Box::new(BufReader::new(stdout)), Box::new(stdin))?;
        o.child = Some(child);
        Ok(o)
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        if let Some(mut c) = self.child.take() {
            let _ = c.kill();
            let _ = c.wait();
        }
    }
}

fn read_line(r: &mut dyn BufRead) -> Result<String, OracleError> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(OracleError::Protocol("connection closed".into()));
    }
    Ok(line.trim_end().to_string())
}

impl Oracle for ExternalOracle {
    fn num_inputs(&self) -> usize {
        self.n_in
    }

    fn num_outputs(&self) -> usize {
        self.n_out
    }

    fn query(&mut self, x: &Bits) -> Result<Bits, OracleError> {
        check_width(self.n_in, x)?;
        if let Some(y) = self.cache.get(x) {
            return Ok(y.clone());
        }
        writeln!(self.writer, "Q {}", x.to_hex())?;
        self.writer.flush()?;
        let line = read_line(&mut self.reader)?;
        let hex = line.strip_prefix("A ").ok_or_else(|| OracleError::Protocol(format!("expected answer, got `{line}`")))?;
        if hex.len() != self.n_out.div_ceil(4) {
            return Err(OracleError::Protocol(format!("answer `{hex}` has the wrong width for {} outputs", self.n_out)));
        }
        let y = Bits::parse_hex(hex, self.n_out).map_err(|e| OracleError::Protocol(e.to_string()))?;
        self.queries += 1;
        self.cache.insert(x.clone(), y.clone());
        Ok(y)
    }

    fn query_count(&self) -> u64 {
        self.queries
    }
}

/// Answers protocol requests from `r` until end of input. Malformed
/// requests get an `E <message>` line.
pub fn serve(oracle: &mut dyn Oracle, r: impl BufRead, mut w: impl Write) -> Result<(), OracleError> {
    writeln!(w, "H {} {}", oracle.num_inputs(), oracle.num_outputs())?;
    w.flush()?;
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let reply = match line.strip_prefix("Q ") {
            Some(hex) if hex.len() == oracle.num_inputs().div_ceil(4) => match Bits::parse_hex(hex, oracle.num_inputs()) {
                Ok(x) => format!("A {}", oracle.query(&x)?.to_hex()),
                Err(e) => format!("E {e}"),
            },
            Some(hex) => format!("E `{hex}` has the wrong width"),
            None => format!("E unknown request `{line}`"),
        };
        writeln!(w, "{reply}")?;
        w.flush()?;
    }
    Ok(())
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PredicateError {
    #[error("key list is empty")]
    EmptyList,
    #[error("key {index} has {got} bits, expected {expected}")]
    KeyLength { index: usize, expected: usize, got: usize },
    #[error("CNF literal {lit} is outside the {vars} key variables")]
    Literal { lit: i32, vars: usize },
    #[error("CNF declares {declared} variables, circuit has {vars} key inputs")]
    VarCount { declared: usize, vars: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// The key predicate phi over the key inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KeyPredicate {
    True,
    List(Vec<Bits>),
    /// Clauses over variables 1..=n, variable i being key input i-1.
    Cnf(Vec<Vec<i32>>),
}

impl KeyPredicate {
    pub fn check(&self, key_bits: usize) -> Result<(), PredicateError> {
        match self {
            KeyPredicate::True => Ok(()),
            KeyPredicate::List(keys) => {
                if keys.is_empty() {
                    return Err(PredicateError::EmptyList);
                }
                for (index, k) in keys.iter().enumerate() {
                    if k.len() != key_bits {
                        return Err(PredicateError::KeyLength { index, expected: key_bits, got: k.len() });
                    }
                }
                Ok(())
            }
            KeyPredicate::Cnf(clauses) => {
                for &lit in clauses.iter().flatten() {
                    if lit == 0 || lit.unsigned_abs() as usize > key_bits {
                        return Err(PredicateError::Literal { lit, vars: key_bits });
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether `key` satisfies the predicate.
    pub fn admits(&self, key: &Bits) -> bool {
        match self {
            KeyPredicate::True => true,
            KeyPredicate::List(keys) => keys.contains(key),
            KeyPredicate::Cnf(clauses) => {
                clauses.iter().all(|c| c.iter().any(|&l| key.get(l.unsigned_abs() as usize - 1) == (l > 0)))
            }
        }
    }

    /// One binary key per line; `#` starts a comment.
    pub fn parse_list(text: &str) -> Result<KeyPredicate, PredicateError> {
        let mut keys = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            keys.push(Bits::parse_binary(line).map_err(|e| PredicateError::Parse { line: i + 1, msg: e.to_string() })?);
        }
        if keys.is_empty() {
            return Err(PredicateError::EmptyList);
        }
        Ok(KeyPredicate::List(keys))
    }

    /// DIMACS CNF; the literal text `true` gives [`KeyPredicate::True`].
    pub fn parse_cnf(text: &str, key_bits: usize) -> Result<KeyPredicate, PredicateError> {
        if text.trim() == "true" {
            return Ok(KeyPredicate::True);
        }
        let mut clauses = Vec::new();
        let mut cur = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("p ") {
                let f: Vec<&str> = rest.split_whitespace().collect();
                let declared: usize = match f.as_slice() {
                    ["cnf", n, _] => n.parse().map_err(|_| PredicateError::Parse { line: i + 1, msg: "bad header".into() })?,
                    _ => return Err(PredicateError::Parse { line: i + 1, msg: "bad header".into() }),
                };
                if declared != key_bits {
                    return Err(PredicateError::VarCount { declared, vars: key_bits });
                }
                continue;
            }
            for tok in line.split_whitespace() {
                let lit: i32 = tok.parse().map_err(|_| PredicateError::Parse { line: i + 1, msg: format!("bad literal `{tok}`") })?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut cur));
                } else {
                    cur.push(lit);
                }
            }
        }
        if !cur.is_empty() {
            clauses.push(cur);
        }
        let p = KeyPredicate::Cnf(clauses);
        p.check(key_bits)?;
        Ok(p)
    }

    fn encode(&self, s: &mut Solver, keys: &[Lit]) {
        match self {
            KeyPredicate::True => {}
            KeyPredicate::List(list) => {
                let sel: Vec<Lit> = list.iter().map(|_| s.new_var()).collect();
                s.add_clause(&sel);
                for (&sv, key) in sel.iter().zip(list) {
                    for (&k, &b) in keys.iter().zip(key.as_slice()) {
                        s.add_clause(&[!sv, if b { k } else { !k }]);
                    }
                }
            }
            KeyPredicate::Cnf(clauses) => {
                for c in clauses {
                    let lits: Vec<Lit> =
                        c.iter().map(|&l| if l > 0 { keys[l as usize - 1] } else { !keys[(-l) as usize - 1] }).collect();
                    if lits.is_empty() {
                        let t = s.true_lit();
                        s.add_clause(&[!t]);
                    } else {
                        s.add_clause(&lits);
                    }
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "status", content = "key", rename_all = "kebab-case")]
pub enum Outcome {
    ConfirmedKey(Bits),
    NoKeyInPhi,
    IterationLimit,
    TimeBudget,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dip {
    pub x: Bits,
    pub y: Bits,
}

impl Dip {
    /// One replay-log line: `X_hex Y_hex`.
    pub fn to_line(&self) -> String {
        format!("{} {}", self.x.to_hex(), self.y.to_hex())
    }
}

/// Reads a replay log written by an earlier run.
pub fn parse_replay(text: &str, n_in: usize, n_out: usize) -> Result<Vec<Dip>, PredicateError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| PredicateError::Parse { line: i + 1, msg };
        let mut it = line.split_whitespace();
        let (Some(x), Some(y), None) = (it.next(), it.next(), it.next()) else {
            return Err(err("expected `X_hex Y_hex`".into()));
        };
        out.push(Dip {
            x: Bits::parse_hex(x, n_in).map_err(|e| err(e.to_string()))?,
            y: Bits::parse_hex(y, n_out).map_err(|e| err(e.to_string()))?,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfirmResult {
    pub outcome: Outcome,
    /// Solves of P, including the last one.
    pub iterations: u64,
    pub dip_trace: Vec<Dip>,
    pub oracle_queries: u64,
    pub stats: SolverStats,
}

#[derive(Debug, Error)]
pub enum ConfirmError {
    #[error(transparent)]
    Sat(#[from] SatError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Predicate(#[from] PredicateError),
    #[error("oracle has {oracle_in} inputs and {oracle_out} outputs, circuit has {circuit_in} and {circuit_out}")]
    Arity { oracle_in: usize, oracle_out: usize, circuit_in: usize, circuit_out: usize },
    #[error("replay log: {0}")]
    Replay(std::io::Error),
}

pub struct ConfirmOptions<'a> {
    pub max_iterations: u64,
    pub budget: Option<Duration>,
    /// Per-solve limit.
    pub solver_timeout: Option<Duration>,
    /// Pairs from an earlier run, learned before the first iteration.
    pub preload: Vec<Dip>,
    /// Receives one `X_hex Y_hex` line per new DIP.
    pub replay: Option<&'a mut dyn Write>,
}

impl Default for ConfirmOptions<'_> {
    fn default() -> Self {
        ConfirmOptions {
            max_iterations: 1_000_000,
            budget: None,
            solver_timeout: Some(crate::sat::DEFAULT_TIMEOUT),
            preload: Vec::new(),
            replay: None,
        }
    }
}

/// C(X, K, Y) with X and Y constant: encodes the circuit under `keys` and
/// pins its outputs.
fn learn(s: &mut Solver, c: &Circuit, keys: &[Lit], dip: &Dip) {
    let cins = c.circuit_inputs();
    let kins = c.key_inputs();
    let copy = encode_circuit(s, c, "dip", |n| bind(cins, kins, n, |p| Signal::Const(dip.x.get(p)), |p| Signal::Lit(keys[p])));
    for (o, &want) in copy.outputs(c).into_iter().zip(dip.y.as_slice()) {
        s.assert_signal(if want { o } else { !o });
    }
}

fn bind(
    cins: &[NodeId],
    kins: &[NodeId],
    n: NodeId,
    x: impl Fn(usize) -> Signal,
    k: impl Fn(usize) -> Signal,
) -> Option<Signal> {
    if let Some(p) = cins.iter().position(|&i| i == n) {
        Some(x(p))
    } else {
        kins.iter().position(|&i| i == n).map(k)
    }
}

/// P holds phi(K1) and the learned I/O pairs; Q asks for an input on which
/// K1 and some K2 consistent with the pairs disagree. A key from P that Q
/// cannot distinguish under K1 = K̂ is confirmed; an unsatisfiable P means
/// phi holds no correct key.
pub fn key_confirmation(
    locked: &Circuit,
    phi: &KeyPredicate,
    oracle: &mut dyn Oracle,
    opts: ConfirmOptions<'_>,
) -> Result<ConfirmResult, ConfirmError> {
    let start = Instant::now();
    let cins = locked.circuit_inputs();
    let kins = locked.key_inputs();
    if oracle.num_inputs() != cins.len() || oracle.num_outputs() != locked.outputs().len() {
        return Err(ConfirmError::Arity {
            oracle_in: oracle.num_inputs(),
            oracle_out: oracle.num_outputs(),
            circuit_in: cins.len(),
            circuit_out: locked.outputs().len(),
        });
    }
    phi.check(kins.len())?;
    let queries_before = oracle.query_count();

    let mut p = Solver::with_timeout(opts.solver_timeout);
    let k1p: Vec<Lit> = kins.iter().map(|_| p.new_var()).collect();
    phi.encode(&mut p, &k1p);

    let mut q = Solver::with_timeout(opts.solver_timeout);
    let xq: Vec<Lit> = cins.iter().map(|_| q.new_var()).collect();
    let k1q: Vec<Lit> = kins.iter().map(|_| q.new_var()).collect();
    let k2q: Vec<Lit> = kins.iter().map(|_| q.new_var()).collect();
    let c1 = encode_circuit(&mut q, locked, "C1", |n| bind(cins, kins, n, |i| Signal::Lit(xq[i]), |i| Signal::Lit(k1q[i])));
    let c2 = encode_circuit(&mut q, locked, "C2", |n| bind(cins, kins, n, |i| Signal::Lit(xq[i]), |i| Signal::Lit(k2q[i])));
    let diffs: Vec<Signal> =
        c1.outputs(locked).into_iter().zip(c2.outputs(locked)).map(|(a, b)| xor_gate(&mut q, &[a, b])).collect();
    let differ = or_gate(&mut q, &diffs);
    q.assert_signal(differ);

    let mut seen: HashSet<Bits> = HashSet::new();
    for d in &opts.preload {
        learn(&mut p, locked, &k1p, d);
        learn(&mut q, locked, &k2q, d);
        seen.insert(d.x.clone());
    }

    let mut replay = opts.replay;
    let mut trace: Vec<Dip> = Vec::new();
    let mut iterations = 0u64;
    let finish = |outcome, iterations, trace, oracle: &dyn Oracle, p: &Solver, q: &Solver| {
        let mut stats = p.stats();
        stats.merge(q.stats());
        ConfirmResult { outcome, iterations, dip_trace: trace, oracle_queries: oracle.query_count() - queries_before, stats }
    };
    loop {
        if iterations >= opts.max_iterations {
            return Ok(finish(Outcome::IterationLimit, iterations, trace, oracle, &p, &q));
        }
        if opts.budget.is_some_and(|b| start.elapsed() > b) {
            return Ok(finish(Outcome::TimeBudget, iterations, trace, oracle, &p, &q));
        }
        iterations += 1;
        if p.solve(&[])? == SolveResult::Unsat {
            return Ok(finish(Outcome::NoKeyInPhi, iterations, trace, oracle, &p, &q));
        }
        let khat: Vec<bool> = k1p.iter().map(|&l| p.value(l)).collect();
        let assume: Vec<Lit> = k1q.iter().zip(&khat).map(|(&l, &b)| if b { l } else { !l }).collect();
        if q.solve(&assume)? == SolveResult::Unsat {
            return Ok(finish(Outcome::ConfirmedKey(Bits::new(khat)), iterations, trace, oracle, &p, &q));
        }
        let x = Bits::new(xq.iter().map(|&l| q.value(l)).collect());
        assert!(seen.insert(x.clone()), "distinguishing input {x} repeated");
        let y = oracle.query(&x)?;
        let dip = Dip { x, y };
        log::debug!("iteration {iterations}: DIP {}", dip.to_line());
        if let Some(w) = replay.as_mut() {
            writeln!(w, "{}", dip.to_line()).and_then(|_| w.flush()).map_err(ConfirmError::Replay)?;
        }
        learn(&mut p, locked, &k1p, &dip);
        learn(&mut q, locked, &k2q, &dip);
        trace.push(dip);
    }
}

/// Key confirmation with a predicate that admits every key.
pub fn sat_attack(locked: &Circuit, oracle: &mut dyn Oracle, opts: ConfirmOptions<'_>) -> Result<ConfirmResult, ConfirmError> {
    key_confirmation(locked, &KeyPredicate::True, oracle, opts)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("key has {got} bits, circuit has {expected} key inputs")]
    KeyLength { expected: usize, got: usize },
    #[error("reference circuit has key inputs")]
    KeyedReference,
    #[error("input `{0}` has no counterpart in the reference circuit")]
    Input(String),
    #[error("circuits have {0} and {1} circuit inputs")]
    InputCount(usize, usize),
    #[error("circuits have {0} and {1} outputs")]
    OutputCount(usize, usize),
    #[error(transparent)]
    Sat(#[from] SatError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Equivalent,
    /// A witness over the locked circuit's circuit inputs.
    Inequivalent(Bits),
}

/// Miter of `locked` under the constant `key` against `unlocked`, inputs
/// paired by name and outputs by position.
pub fn verify_key(locked: &Circuit, key: &Bits, unlocked: &Circuit, timeout: Option<Duration>) -> Result<Verdict, VerifyError> {
    let kins = locked.key_inputs();
    if key.len() != kins.len() {
        return Err(VerifyError::KeyLength { expected: kins.len(), got: key.len() });
    }
    if !unlocked.key_inputs().is_empty() {
        return Err(VerifyError::KeyedReference);
    }
    let (a, b) = (locked.circuit_inputs(), unlocked.circuit_inputs());
    if a.len() != b.len() {
        return Err(VerifyError::InputCount(a.len(), b.len()));
    }
    if locked.outputs().len() != unlocked.outputs().len() {
        return Err(VerifyError::OutputCount(locked.outputs().len(), unlocked.outputs().len()));
    }
    let mut s = Solver::with_timeout(timeout);
    let xs: Vec<Lit> = a.iter().map(|_| s.new_var()).collect();
    let mut to_ref = Vec::with_capacity(b.len());
    for &i in b {
        let name = unlocked.name(i);
        let p = a.iter().position(|&j| locked.name(j) == name).ok_or_else(|| VerifyError::Input(name.to_string()))?;
        to_ref.push((i, xs[p]));
    }
    let l = encode_circuit(&mut s, locked, "locked", |n| bind(a, kins, n, |p| Signal::Lit(xs[p]), |p| Signal::Const(key.get(p))));
    let r = encode_circuit(&mut s, unlocked, "ref", |n| to_ref.iter().find(|t| t.0 == n).map(|t| Signal::Lit(t.1)));
    let diffs: Vec<Signal> =
        l.outputs(locked).into_iter().zip(r.outputs(unlocked)).map(|(x, y)| xor_gate(&mut s, &[x, y])).collect();
    let differ = or_gate(&mut s, &diffs);
    s.assert_signal(differ);
    Ok(match s.solve(&[])? {
        SolveResult::Unsat => Verdict::Equivalent,
        SolveResult::Sat => Verdict::Inequivalent(Bits::new(xs.iter().map(|&x| s.value(x)).collect())),
    })
}

/// Confirms a shortlist of keys, or runs the SAT attack when the shortlist
/// is empty. The flag reports whether the fallback ran.
pub fn confirm_or_fallback(
    locked: &Circuit,
    candidates: &[Bits],
    oracle: &mut dyn Oracle,
    opts: ConfirmOptions<'_>,
) -> Result<(ConfirmResult, bool), ConfirmError> {
    if candidates.is_empty() {
        log::info!("no candidate keys; falling back to the SAT attack");
        return Ok((sat_attack(locked, oracle, opts)?, true));
    }
    Ok((key_confirmation(locked, &KeyPredicate::List(candidates.to_vec()), oracle, opts)?, false))
}
