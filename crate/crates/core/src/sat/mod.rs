//! Propositional layer: literals, clause databases, circuit encodings and an
//! incremental solver.

mod card;
mod encode;
mod miter;

use std::fmt;
use std::ops::Not;
use std::time::Duration;

use cadical::Timeout;
use thiserror::Error;

pub use card::{exactly_k, hamming_eq};
pub use encode::{and_gate, encode_circuit, encode_cone, or_gate, xor_gate, CircuitCopy, Signal};
pub use miter::{check_equivalence, encode_miter, input_names, miter, pairing_by_name, Equivalence, Miter, MiterError};

/// Wall-clock limit applied to each solver call unless overridden.
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(1000);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(i32);

impl Lit {
    pub fn from_dimacs(v: i32) -> Lit {
        assert!(v != 0 && v != i32::MIN);
        Lit(v)
    }

    pub fn positive(var: u32) -> Lit {
        assert!(var >= 1);
        Lit(var as i32)
    }

    pub fn var(self) -> u32 {
        self.0.unsigned_abs()
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn to_dimacs(self) -> i32 {
        self.0
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(-self.0)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("solver resource limit exceeded after {0:?}")]
    ResourceLimit(Duration),
    #[error("Hamming distance {d} out of range for {m} bit pairs")]
    DistanceOutOfRange { d: usize, m: usize },
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

/// Anything clauses can be written to.
pub trait ClauseSink {
    fn new_var(&mut self) -> Lit;
    fn add_clause(&mut self, clause: &[Lit]);
    /// A literal constrained to be true.
    fn true_lit(&mut self) -> Lit;
}

/// A plain clause database.
#[derive(Clone, Debug, Default)]
pub struct CnfFormula {
    clauses: Vec<Vec<Lit>>,
    var_count: u32,
    true_lit: Option<Lit>,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.var_count, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                out.push_str(&l.to_dimacs().to_string());
                out.push(' ');
            }
            out.push_str("0\n");
        }
        out
    }
}

impl ClauseSink for CnfFormula {
    fn new_var(&mut self) -> Lit {
        self.var_count += 1;
        Lit::positive(self.var_count)
    }

    fn add_clause(&mut self, clause: &[Lit]) {
        assert!(!clause.is_empty(), "empty clause");
        debug_assert!(clause.iter().all(|l| l.var() <= self.var_count));
        self.clauses.push(clause.to_vec());
    }

    fn true_lit(&mut self) -> Lit {
        if let Some(t) = self.true_lit {
            return t;
        }
        let t = self.new_var();
        self.add_clause(&[t]);
        self.true_lit = Some(t);
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct SolverStats {
    pub calls: u64,
    pub sat: u64,
    pub unsat: u64,
}

impl SolverStats {
    pub fn merge(&mut self, other: SolverStats) {
        self.calls += other.calls;
        self.sat += other.sat;
        self.unsat += other.unsat;
    }
}

/// Incremental CDCL solver. Clauses persist across calls; assumptions apply
/// to a single call.
pub struct Solver {
    inner: cadical::Solver<Timeout>,
    next_var: u32,
    true_lit: Option<Lit>,
    timeout: Option<Duration>,
    stats: SolverStats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

impl Solver {
    pub fn new() -> Self {
        Solver { inner: cadical::Solver::new(), next_var: 0, true_lit: None, timeout: None, stats: SolverStats::default() }
    }

    pub fn with_timeout(timeout: Option<Duration>) -> Self {
        let mut s = Self::new();
        s.set_timeout(timeout);
        s
    }

    pub fn set_timeout(&mut self, timeout: Option<Duration>) {
        self.timeout = timeout;
        self.inner.set_callbacks(timeout.map(|t| Timeout::new(t.as_secs_f32())));
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    pub fn num_vars(&self) -> u32 {
        self.next_var
    }

    /// Adds every clause of `f`. Variables of `f` keep their numbers, so this
    /// should happen before any variable is allocated here.
    pub fn add_formula(&mut self, f: &CnfFormula) {
        self.next_var = self.next_var.max(f.var_count);
        if self.true_lit.is_none() {
            self.true_lit = f.true_lit;
        }
        for c in &f.clauses {
            self.inner.add_clause(c.iter().map(|l| l.0));
        }
    }

    pub fn solve(&mut self, assumptions: &[Lit]) -> Result<SolveResult, SatError> {
        self.stats.calls += 1;
        match self.inner.solve_with(assumptions.iter().map(|l| l.0)) {
            Some(true) => {
                self.stats.sat += 1;
                Ok(SolveResult::Sat)
            }
            Some(false) => {
                self.stats.unsat += 1;
                Ok(SolveResult::Unsat)
            }
            None => Err(SatError::ResourceLimit(self.timeout.unwrap_or_default())),
        }
    }

    /// Model value of `lit` after a satisfiable call. Variables the solver
    /// left unassigned read as false.
    pub fn value(&self, lit: Lit) -> bool {
        self.inner.value(lit.0).unwrap_or(!lit.is_positive())
    }

    pub fn signal_value(&self, s: Signal) -> bool {
        match s {
            Signal::Const(b) => b,
            Signal::Lit(l) => self.value(l),
        }
    }

    /// Forces `s` to hold in every future call.
    pub fn assert_signal(&mut self, s: Signal) {
        encode::add_clause_signals(self, &[s]);
    }
}

impl ClauseSink for Solver {
    fn new_var(&mut self) -> Lit {
        self.next_var += 1;
        Lit::positive(self.next_var)
    }

    fn add_clause(&mut self, clause: &[Lit]) {
        assert!(!clause.is_empty(), "empty clause");
        self.inner.add_clause(clause.iter().map(|l| l.0));
    }

    fn true_lit(&mut self) -> Lit {
        if let Some(t) = self.true_lit {
            return t;
        }
        let t = self.new_var();
        self.add_clause(&[t]);
        self.true_lit = Some(t);
        t
    }
}

/// Satisfying assignment indexed by variable number.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Model {
    values: Vec<bool>,
}

impl Model {
    pub fn value(&self, lit: Lit) -> bool {
        self.values[lit.var() as usize] == lit.is_positive()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Solution {
    Sat(Model),
    Unsat,
}

/// One-shot decision of `f` under `assumptions`.
pub fn solve(f: &CnfFormula, assumptions: &[Lit], timeout: Option<Duration>) -> Result<Solution, SatError> {
    let mut s = Solver::with_timeout(timeout);
    s.add_formula(f);
    Ok(match s.solve(assumptions)? {
        SolveResult::Unsat => Solution::Unsat,
        SolveResult::Sat => {
            let mut values = vec![false; f.var_count as usize + 1];
            for v in 1..=f.var_count {
                values[v as usize] = s.value(Lit::positive(v));
            }
            Solution::Sat(Model { values })
        }
    })
}
