//! Locking combinational netlists with TTLock / SFLL-HD and recovering their
//! keys through structural and functional analysis, SAT-based equivalence
//! checking and oracle-guided key confirmation.

pub mod bits;
pub mod functional;
pub mod keyconf;
pub mod locking;
pub mod netlist;
pub mod sat;
pub mod structural;

#[cfg(test)]
mod testutil;

pub use bits::Bits;
pub use functional::{extract_candidate_keys, CubeAssignment, ExtractOptions, Extraction, HChoice, KeyCandidate};
pub use locking::{build_strip_circuit, lock_sfll_hd, obfuscate, KeyFile, LockError, LockParams, Locked, ProtectedCube};
pub use netlist::{Circuit, CircuitBuilder, GateKind, InputRole, NetlistError, NodeId};
