//! TTLock / SFLL-HD^h locking: a cube stripper XORed into a protected output
//! and a key-controlled restoration unit that cancels it.

mod obfuscate;

use std::fmt;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::Bits;
use crate::netlist::{Circuit, CircuitBuilder, GateKind, InputRole, Logic, NetlistError, NodeId, Sig, DEFAULT_KEY_PREFIX};

pub use obfuscate::obfuscate;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LockError {
    #[error("protected cube is empty")]
    EmptyCube,
    #[error("cube has {bits} bits but names {inputs} inputs")]
    CubeLength { bits: usize, inputs: usize },
    #[error("h = {h} is larger than the cube size {m}")]
    HOutOfRange { h: usize, m: usize },
    #[error("key size {m} exceeds the {available} circuit inputs")]
    TooManyKeys { m: usize, available: usize },
    #[error("{0:?} is not a circuit input")]
    NotCircuitInput(String),
    #[error("input {0:?} appears twice in the cube")]
    DuplicateInput(String),
    #[error("output index {index} out of range ({count} outputs)")]
    InvalidOutput { index: usize, count: usize },
    #[error("circuit already has key inputs")]
    AlreadyKeyed,
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// The protected cube K_c: one bit per selected circuit input. Its order is
/// the comparator order, and therefore the key order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtectedCube {
    inputs: Vec<NodeId>,
    bits: Bits,
}

impl ProtectedCube {
    pub fn new(c: &Circuit, inputs: Vec<NodeId>, bits: Bits) -> Result<Self, LockError> {
        if inputs.is_empty() {
            return Err(LockError::EmptyCube);
        }
        if inputs.len() != bits.len() {
            return Err(LockError::CubeLength { bits: bits.len(), inputs: inputs.len() });
        }
        for (i, &x) in inputs.iter().enumerate() {
            c.check(x)?;
            if !c.is_input(x) || c.is_key(x) {
                return Err(LockError::NotCircuitInput(c.name(x).to_string()));
            }
            if inputs[..i].contains(&x) {
                return Err(LockError::DuplicateInput(c.name(x).to_string()));
            }
        }
        Ok(ProtectedCube { inputs, bits })
    }

    pub fn from_names(c: &Circuit, names: &[&str], bits: Bits) -> Result<Self, LockError> {
        let inputs = names
            .iter()
            .map(|n| c.find(n).ok_or_else(|| LockError::NotCircuitInput(n.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(c, inputs, bits)
    }

    /// The first `bits.len()` circuit inputs in declaration order.
    pub fn leading(c: &Circuit, bits: Bits) -> Result<Self, LockError> {
        let available = c.circuit_inputs().len();
        if bits.len() > available {
            return Err(LockError::TooManyKeys { m: bits.len(), available });
        }
        Self::new(c, c.circuit_inputs()[..bits.len()].to_vec(), bits)
    }

    /// `m` distinct circuit inputs (kept in declaration order) with uniform
    /// random bits.
    pub fn random(c: &Circuit, m: usize, rng: &mut impl Rng) -> Result<Self, LockError> {
        let pool = c.circuit_inputs();
        if m > pool.len() {
            return Err(LockError::TooManyKeys { m, available: pool.len() });
        }
        let mut picked = sample(rng, pool.len(), m).into_vec();
        picked.sort_unstable();
        let inputs = picked.into_iter().map(|i| pool[i]).collect();
        let bits = Bits::new((0..m).map(|_| rng.gen()).collect());
        Self::new(c, inputs, bits)
    }

    pub fn random_seeded(c: &Circuit, m: usize, seed: u64) -> Result<Self, LockError> {
        Self::random(c, m, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn bits(&self) -> &Bits {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LockParams {
    pub h: usize,
    /// Output indices to protect; each gets the same stripper and restorer.
    pub protected_outputs: Vec<usize>,
    pub key_prefix: String,
    /// Run [`obfuscate`] with this seed on the locked netlist.
    pub obfuscate: Option<u64>,
}

impl Default for LockParams {
    fn default() -> Self {
        LockParams { h: 0, protected_outputs: vec![0], key_prefix: DEFAULT_KEY_PREFIX.to_string(), obfuscate: None }
    }
}

#[derive(Clone, Debug)]
pub struct Locked {
    pub circuit: Circuit,
    pub key: Bits,
    pub key_file: KeyFile,
}

fn strip_signal(l: &mut Logic<'_>, xs: &[NodeId], cube: &Bits, h: usize) -> Result<Sig, NetlistError> {
    let mut diff = Vec::with_capacity(xs.len());
    for (&x, k) in xs.iter().zip(cube.as_slice()) {
        diff.push(if *k { l.not(Sig::Node(x))? } else { Sig::Node(x) });
    }
    l.exactly(&diff, h)
}

fn restore_signal(l: &mut Logic<'_>, xs: &[NodeId], ks: &[NodeId], h: usize) -> Result<Sig, NetlistError> {
    let mut diff = Vec::with_capacity(xs.len());
    for (&x, &k) in xs.iter().zip(ks) {
        let eq = l.xnor(Sig::Node(x), Sig::Node(k))?;
        diff.push(l.not(eq)?);
    }
    l.exactly(&diff, h)
}

/// Single-output circuit over inputs named `input_names` that is 1 exactly
/// when the input is at Hamming distance `h` from `cube`.
pub fn build_strip_circuit(input_names: &[&str], cube: &Bits, h: usize) -> Result<Circuit, LockError> {
    let m = input_names.len();
    if m == 0 {
        return Err(LockError::EmptyCube);
    }
    if cube.len() != m {
        return Err(LockError::CubeLength { bits: cube.len(), inputs: m });
    }
    if h > m {
        return Err(LockError::HOutOfRange { h, m });
    }
    let mut b = CircuitBuilder::new();
    let xs = input_names
        .iter()
        .map(|n| b.add_input(*n, InputRole::Circuit))
        .collect::<Result<Vec<_>, _>>()?;
    let s = strip_signal(&mut Logic::new(&mut b, "strip"), &xs, cube, h)?;
    let Sig::Node(out) = s else { unreachable!("stripper over a nonempty cube is never constant") };
    b.add_output(out)?;
    Ok(b.build())
}

/// Locks `c` around `cube`. With the returned key every output equals the
/// original; a wrong key flips the protected outputs wherever exactly one of
/// HD(X, cube) = h and HD(X, key) = h holds.
pub fn lock_sfll_hd(c: &Circuit, cube: &ProtectedCube, params: &LockParams) -> Result<Locked, LockError> {
    let m = cube.len();
    let h = params.h;
    if m == 0 {
        return Err(LockError::EmptyCube);
    }
    if h > m {
        return Err(LockError::HOutOfRange { h, m });
    }
    if !c.key_inputs().is_empty() {
        return Err(LockError::AlreadyKeyed);
    }
    // re-validate against this circuit
    ProtectedCube::new(c, cube.inputs.clone(), cube.bits.clone())?;
    let count = c.outputs().len();
    for &index in &params.protected_outputs {
        if index >= count {
            return Err(LockError::InvalidOutput { index, count });
        }
    }
    let mut protected: Vec<usize> = params.protected_outputs.clone();
    protected.sort_unstable();
    protected.dedup();

    // A protected output driven by a gate that nothing else exports is
    // renamed so the locked output can take over its name.
    let mut renamed = vec![false; c.num_nodes()];
    for &i in &protected {
        let o = c.outputs()[i];
        let exports = c.outputs().iter().filter(|&&p| p == o).count();
        if !c.is_input(o) && exports == 1 {
            renamed[o.index()] = true;
        }
    }

    let mut b = CircuitBuilder::new();
    b.reserve(c.node_ids().map(|n| c.name(n).to_string()));
    let mut map = Vec::with_capacity(c.num_nodes());
    for n in c.node_ids() {
        let name = if renamed[n.index()] { b.fresh_name(&format!("{}_orig", c.name(n))) } else { c.name(n).to_string() };
        let id = if c.is_input(n) {
            b.add_input(name, InputRole::Circuit)?
        } else {
            b.add_gate(name, c.kind(n), c.fanins(n).iter().map(|f| map[f.index()]).collect())?
        };
        map.push(id);
    }

    let mut keys = Vec::with_capacity(m);
    let mut key_names = Vec::with_capacity(m);
    let mut next = 0usize;
    while keys.len() < m {
        let name = format!("{}{}", params.key_prefix, next);
        next += 1;
        if b.contains_name(&name) || c.find(&name).is_some() {
            continue;
        }
        keys.push(b.add_input(name.clone(), InputRole::Key)?);
        key_names.push(name);
    }

    let xs: Vec<NodeId> = cube.inputs.iter().map(|x| map[x.index()]).collect();
    let strip = strip_signal(&mut Logic::new(&mut b, "strip"), &xs, &cube.bits, h)?;
    let restore = restore_signal(&mut Logic::new(&mut b, "restore"), &xs, &keys, h)?;

    let mut outs: Vec<NodeId> = c.outputs().iter().map(|o| map[o.index()]).collect();
    for &i in &protected {
        let o = c.outputs()[i];
        let name = if renamed[o.index()] { c.name(o).to_string() } else { b.fresh_name(&format!("{}_locked", c.name(o))) };
        let fs = Logic::new(&mut b, format!("{}_fs", c.name(o))).xor(Sig::Node(outs[i]), strip)?;
        let Sig::Node(fs) = fs else { unreachable!() };
        let Sig::Node(r) = restore else { unreachable!() };
        outs[i] = b.add_gate(name, GateKind::Xor, vec![fs, r])?;
    }
    for o in outs {
        b.add_output(o)?;
    }
    let mut circuit = b.build();
    if let Some(seed) = params.obfuscate {
        circuit = obfuscate(&circuit, seed);
    }
    let key_file = KeyFile {
        key: cube.bits.clone(),
        h,
        cube_inputs: cube.inputs.iter().map(|&x| c.name(x).to_string()).collect(),
        key_inputs: key_names,
    };
    Ok(Locked { circuit, key: cube.bits.clone(), key_file })
}

/// Sidecar key file: the key as a binary string in comparator order, with h
/// and the input names as comments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyFile {
    pub key: Bits,
    pub h: usize,
    pub cube_inputs: Vec<String>,
    pub key_inputs: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("key file line {line}: {msg}")]
pub struct KeyFileError {
    pub line: usize,
    pub msg: String,
}

impl fmt::Display for KeyFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.key)?;
        writeln!(f, "# h {}", self.h)?;
        writeln!(f, "# cube-inputs {}", self.cube_inputs.join(" "))?;
        writeln!(f, "# key-inputs {}", self.key_inputs.join(" "))
    }
}

impl KeyFile {
    pub fn parse(text: &str) -> Result<KeyFile, KeyFileError> {
        let mut key = None;
        let mut h = None;
        let mut cube_inputs = Vec::new();
        let mut key_inputs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| KeyFileError { line: i + 1, msg };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut words = rest.split_whitespace();
                match words.next() {
                    Some("h") => {
                        let v = words.next().ok_or_else(|| err("missing h value".into()))?;
                        h = Some(v.parse().map_err(|_| err(format!("bad h value {v:?}")))?);
                    }
                    Some("cube-inputs") => cube_inputs = words.map(String::from).collect(),
                    Some("key-inputs") => key_inputs = words.map(String::from).collect(),
                    _ => {}
                }
                continue;
            }
            if key.is_some() {
                return Err(err("more than one key line".into()));
            }
            key = Some(Bits::parse_binary(line).map_err(|e| err(e.to_string()))?);
        }
        let key = key.ok_or(KeyFileError { line: 0, msg: "no key line".into() })?;
        for (what, names) in [("cube-inputs", &cube_inputs), ("key-inputs", &key_inputs)] {
            if !names.is_empty() && names.len() != key.len() {
                return Err(KeyFileError { line: 0, msg: format!("{what} lists {} names for {} key bits", names.len(), key.len()) });
            }
        }
        Ok(KeyFile { key, h: h.unwrap_or(0), cube_inputs, key_inputs })
    }
}
