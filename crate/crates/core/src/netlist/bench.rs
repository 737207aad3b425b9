//! ISCAS-85 BENCH reader and writer.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Circuit, CircuitBuilder, GateKind, InputRole, NetlistError, NodeId};

pub const DEFAULT_KEY_PREFIX: &str = "keyinput";

struct GateDef {
    name: String,
    kind: GateKind,
    args: Vec<String>,
    line: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> NetlistError {
    NetlistError::Syntax { line, col, msg: msg.into() }
}

fn valid_name(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || "(),=#".contains(c))
}

fn gate_kind(word: &str, line: usize, col: usize) -> Result<GateKind, NetlistError> {
    Ok(match word.to_ascii_uppercase().as_str() {
        "AND" => GateKind::And,
        "OR" => GateKind::Or,
        "NAND" => GateKind::Nand,
        "NOR" => GateKind::Nor,
        "XOR" => GateKind::Xor,
        "XNOR" => GateKind::Xnor,
        "NOT" | "INV" => GateKind::Not,
        "BUF" | "BUFF" => GateKind::Buf,
        "MUX" | "DFF" | "LATCH" | "VDD" | "GND" | "CONST0" | "CONST1" => {
            return Err(NetlistError::UnsupportedGate { kind: word.to_string(), line })
        }
        _ => return Err(syntax(line, col, format!("unknown gate type {word:?}"))),
    })
}

/// Splits `KIND(a, b, ...)` located at column `col0` (1-based) into its parts.
fn parse_call(text: &str, line: usize, col0: usize) -> Result<(String, Vec<String>), NetlistError> {
    let open = text.find('(').ok_or_else(|| syntax(line, col0 + text.len(), "expected '('"))?;
    let close = text.rfind(')').ok_or_else(|| syntax(line, col0 + text.len(), "expected ')'"))?;
    if close < open {
        return Err(syntax(line, col0 + close, "unbalanced parentheses"));
    }
    if !text[close + 1..].trim().is_empty() {
        return Err(syntax(line, col0 + close + 1, "unexpected text after ')'"));
    }
    let head = text[..open].trim();
    if head.is_empty() {
        return Err(syntax(line, col0, "missing keyword before '('"));
    }
    let mut args = Vec::new();
    let inner = &text[open + 1..close];
    if !inner.trim().is_empty() {
        let mut offset = open + 1;
        for piece in inner.split(',') {
            let arg = piece.trim();
            if !valid_name(arg) {
                return Err(syntax(line, col0 + offset, format!("invalid signal name {arg:?}")));
            }
            args.push(arg.to_string());
            offset += piece.len() + 1;
        }
    }
    Ok((head.to_string(), args))
}

/// Parses BENCH text. Inputs whose name starts with `key_prefix` become key
/// inputs. Inputs keep file order; gates are ordered by a depth-first
/// post-order walk over the definitions in file order.
pub fn parse_bench(text: &str, key_prefix: &str) -> Result<Circuit, NetlistError> {
    let mut inputs: Vec<(String, usize)> = Vec::new();
    let mut outputs: Vec<(String, usize)> = Vec::new();
    let mut gates: Vec<GateDef> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let code = raw.split('#').next().unwrap_or("");
        let trimmed = code.trim_start();
        let lead = code.len() - trimmed.len();
        let trimmed = trimmed.trim_end();
        if trimmed.is_empty() {
            continue;
        }
        let col0 = lead + 1;
        if let Some(eq) = trimmed.find('=') {
            let lhs = trimmed[..eq].trim();
            if !valid_name(lhs) {
                return Err(syntax(line, col0, format!("invalid signal name {lhs:?}")));
            }
            let rhs = &trimmed[eq + 1..];
            let rhs_col = col0 + eq + 1 + (rhs.len() - rhs.trim_start().len());
            let (kind_word, args) = parse_call(rhs.trim(), line, rhs_col)?;
            let kind = gate_kind(&kind_word, line, rhs_col)?;
            gates.push(GateDef { name: lhs.to_string(), kind, args, line });
        } else {
            let (head, args) = parse_call(trimmed, line, col0)?;
            let target = match head.to_ascii_uppercase().as_str() {
                "INPUT" => &mut inputs,
                "OUTPUT" => &mut outputs,
                _ => return Err(syntax(line, col0, format!("expected INPUT, OUTPUT or assignment, found {head:?}"))),
            };
            if args.len() != 1 {
                return Err(syntax(line, col0, format!("{head} takes exactly one signal")));
            }
            target.push((args.into_iter().next().unwrap(), line));
        }
    }

    let mut defined: HashMap<&str, usize> = HashMap::new();
    for (name, line) in &inputs {
        if defined.insert(name, *line).is_some() {
            return Err(NetlistError::DuplicateDefinition { name: name.clone(), line: *line });
        }
    }
    let mut gate_index: HashMap<&str, usize> = HashMap::new();
    for (i, g) in gates.iter().enumerate() {
        if defined.insert(&g.name, g.line).is_some() {
            return Err(NetlistError::DuplicateDefinition { name: g.name.clone(), line: g.line });
        }
        gate_index.insert(&g.name, i);
    }
    for g in &gates {
        for a in &g.args {
            if !defined.contains_key(a.as_str()) {
                return Err(NetlistError::UndefinedSignal { name: a.clone(), line: g.line });
            }
        }
    }
    for (name, line) in &outputs {
        if !defined.contains_key(name.as_str()) {
            return Err(NetlistError::UndefinedSignal { name: name.clone(), line: *line });
        }
    }

    let mut b = CircuitBuilder::new();
    let mut ids: HashMap<&str, NodeId> = HashMap::new();
    for (name, _) in &inputs {
        let role = if name.starts_with(key_prefix) { InputRole::Key } else { InputRole::Circuit };
        ids.insert(name, b.add_input(name.clone(), role)?);
    }

    // iterative DFS; state 1 = on stack, 2 = emitted
    let mut state = vec![0u8; gates.len()];
    for root in 0..gates.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (g, ref mut next)) = stack.last_mut() {
            let def = &gates[g];
            if *next < def.args.len() {
                let arg = def.args[*next].as_str();
                *next += 1;
                if let Some(&dep) = gate_index.get(arg) {
                    match state[dep] {
                        0 => {
                            state[dep] = 1;
                            stack.push((dep, 0));
                        }
                        1 => return Err(NetlistError::Cycle { name: arg.to_string() }),
                        _ => {}
                    }
                }
            } else {
                let fanins = def.args.iter().map(|a| ids[a.as_str()]).collect();
                let id = b.add_gate(def.name.clone(), def.kind, fanins)?;
                ids.insert(&def.name, id);
                state[g] = 2;
                stack.pop();
            }
        }
    }

    for (name, _) in &outputs {
        b.add_output(ids[name.as_str()])?;
    }
    Ok(b.build())
}

/// Serializes a circuit as BENCH text. The output is a pure function of the
/// circuit: inputs, outputs and gates appear in node order.
pub fn write_bench(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# {} inputs ({} key), {} outputs, {} gates",
        c.inputs().len(),
        c.key_inputs().len(),
        c.outputs().len(),
        c.num_gates()
    );
    for &i in c.inputs() {
        let _ = writeln!(out, "INPUT({})", c.name(i));
    }
    for &o in c.outputs() {
        let _ = writeln!(out, "OUTPUT({})", c.name(o));
    }
    for g in c.gates() {
        let node = c.node(g);
        let args: Vec<&str> = node.fanins.iter().map(|&f| c.name(f)).collect();
        let _ = writeln!(out, "{} = {}({})", node.name, node.kind.bench_name(), args.join(", "));
    }
    out
}
