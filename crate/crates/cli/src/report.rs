use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Multiple = 2,
    None = 3,
    Timeout = 4,
    Input = 5,
}

impl Exit {
    pub fn name(self) -> &'static str {
        match self {
            Exit::Ok => "ok",
            Exit::Multiple => "multiple",
            Exit::None => "none",
            Exit::Timeout => "timeout",
            Exit::Input => "input-error",
        }
    }
}

#[derive(Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct ExitStatus {
    pub code: i32,
    pub name: &'static str,
}

/// Everything a run reports. Only `timings_ms` varies between identical
/// invocations.
#[derive(Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub inputs: Vec<InputDigest>,
    pub parameters: BTreeMap<&'static str, Value>,
    pub result: Value,
    pub timings_ms: BTreeMap<&'static str, u128>,
    pub exit_status: ExitStatus,
}

impl RunReport {
    pub fn new(command: &'static str) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            command,
            inputs: Vec::new(),
            parameters: BTreeMap::new(),
            result: Value::Null,
            timings_ms: BTreeMap::new(),
            exit_status: ExitStatus { code: 0, name: Exit::Ok.name() },
        }
    }

    /// Reads a file, recording its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest { path: path.display().to_string(), sha256: format!("{:x}", Sha256::digest(&bytes)) });
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }

    pub fn param(&mut self, key: &'static str, value: impl Serialize) {
        self.parameters.insert(key, serde_json::to_value(value).expect("serializable"));
    }

    pub fn finish(&mut self, exit: Exit) -> Exit {
        self.exit_status = ExitStatus { code: exit as i32, name: exit.name() };
        exit
    }

    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)? + "\n";
        print!("{text}");
        if let Some(p) = path {
            std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }
}
