//! `locksmith`: lock BENCH netlists with TTLock / SFLL-HD and recover their
//! keys.

mod report;

use std::io::{BufReader, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use locksmith::functional::{extract_candidate_keys, ExtractOptions, Extraction, HChoice};
use locksmith::keyconf::{
    confirm_or_fallback, key_confirmation, parse_replay, serve, verify_key, ConfirmError, ConfirmOptions,
    ConfirmResult, ExternalOracle, KeyPredicate, LockedOracle, Oracle, Outcome, SimulationOracle, Verdict,
};
use locksmith::netlist::{parse_bench, write_bench, DEFAULT_KEY_PREFIX};
use locksmith::sat::SatError;
use locksmith::structural::DEFAULT_CANDIDATE_CAP;
use locksmith::{lock_sfll_hd, Bits, Circuit, KeyFile, LockParams, ProtectedCube};

use report::{Exit, RunReport};

#[derive(Parser)]
#[command(name = "locksmith", version, about = "Lock combinational netlists and recover their keys")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lock a netlist with TTLock (h = 0) or SFLL-HD^h.
    Lock(LockArgs),
    /// Recover candidate keys from a locked netlist.
    Attack(AttackArgs),
    /// Confirm a key predicate against an oracle.
    Confirm(ConfirmArgs),
    /// Check a locked netlist under a key against the original.
    Verify(VerifyArgs),
    /// Answer oracle queries over stdin/stdout or TCP.
    ServeOracle(ServeArgs),
}

#[derive(Args)]
struct Common {
    /// Per-solve limit in seconds.
    #[arg(long, env = "LOCKSMITH_TIMEOUT", default_value_t = 1000.0)]
    timeout: f64,
    /// Also write the JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Key input name prefix when reading BENCH files.
    #[arg(long, default_value = DEFAULT_KEY_PREFIX)]
    key_prefix: String,
}

impl Common {
    fn timeout(&self) -> Option<Duration> {
        (self.timeout > 0.0).then(|| Duration::from_secs_f64(self.timeout))
    }
}

#[derive(Args)]
struct LockArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    h: usize,
    /// Number of key bits; the protected cube is drawn with --seed.
    #[arg(long, conflicts_with = "cube", required_unless_present = "cube")]
    keysize: Option<usize>,
    /// Protected cube as a bit string, over the leading inputs unless
    /// --cube-inputs is given.
    #[arg(long)]
    cube: Option<String>,
    /// Comma-separated input names for --cube.
    #[arg(long, requires = "cube", value_delimiter = ',')]
    cube_inputs: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output to protect; repeatable.
    #[arg(long = "output-index")]
    output_index: Vec<usize>,
    /// Restructure the locked netlist, seeded with --seed.
    #[arg(long)]
    obfuscate: bool,
    /// Defaults to the output path with extension `key`.
    #[arg(long)]
    key_file: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct AttackArgs {
    locked: PathBuf,
    /// Hamming distance to analyze.
    #[arg(long, conflicts_with = "sweep_h")]
    h: Option<usize>,
    /// Values of h to try: comma-separated numbers or inclusive ranges
    /// `a..b`. Without a value, 0 through floor(m/3).
    #[arg(long, num_args = 0..=1, default_missing_value = "")]
    sweep_h: Option<String>,
    /// Worker threads for the functional stage.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_CANDIDATE_CAP)]
    candidate_cap: usize,
    #[arg(long)]
    dump_structural: Option<PathBuf>,
    #[arg(long)]
    dump_functional: Option<PathBuf>,
    /// Confirm the candidates against this oracle, running the SAT attack
    /// if there are none.
    #[arg(long)]
    oracle: Option<String>,
    #[command(flatten)]
    confirm: ConfirmLimits,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ConfirmLimits {
    #[arg(long, default_value_t = 1_000_000)]
    max_iterations: u64,
    /// Wall-clock budget in seconds for the confirmation loop.
    #[arg(long)]
    budget: Option<f64>,
    /// Append each distinguishing input and its answer to this file.
    #[arg(long)]
    replay: Option<PathBuf>,
    /// Learn the pairs in this replay file before starting.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct ConfirmArgs {
    locked: PathBuf,
    /// File with one binary key per line.
    #[arg(long, conflicts_with = "phi", required_unless_present = "phi")]
    keys: Option<PathBuf>,
    /// DIMACS CNF file over the key inputs, or the word `true`.
    #[arg(long)]
    phi: Option<String>,
    /// sim:UNLOCKED.bench | locked:KEY | tcp:HOST:PORT | exec:COMMAND
    #[arg(long)]
    oracle: String,
    #[command(flatten)]
    limits: ConfirmLimits,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    locked: PathBuf,
    /// Key bits, a key file, or `-` for no key.
    key: String,
    unlocked: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ServeArgs {
    /// Unlocked netlist to simulate.
    #[arg(long, conflicts_with_all = ["locked", "key"], required_unless_present = "locked")]
    sim: Option<PathBuf>,
    /// Locked netlist, simulated under --key.
    #[arg(long, requires = "key")]
    locked: Option<PathBuf>,
    #[arg(long)]
    key: Option<String>,
    /// Listen on this address instead of using stdin/stdout.
    #[arg(long)]
    listen: Option<String>,
    #[arg(long, default_value = DEFAULT_KEY_PREFIX)]
    key_prefix: String,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Lock(a) => cmd_lock(a),
        Cmd::Attack(a) => cmd_attack(a),
        Cmd::Confirm(a) => cmd_confirm(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::ServeOracle(a) => cmd_serve(a).map(|_| Exit::Ok),
    };
    match result {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error_exit(&e) as u8)
        }
    }
}

fn error_exit(e: &anyhow::Error) -> Exit {
    for cause in e.chain() {
        let limit = matches!(cause.downcast_ref::<SatError>(), Some(SatError::ResourceLimit(_)))
            || matches!(cause.downcast_ref::<ConfirmError>(), Some(ConfirmError::Sat(SatError::ResourceLimit(_))));
        if limit {
            return Exit::Timeout;
        }
    }
    Exit::Input
}

fn load_circuit(report: &mut RunReport, path: &Path, prefix: &str) -> Result<Circuit> {
    let text = report.read_input(path)?;
    parse_bench(&text, prefix).with_context(|| format!("parsing {}", path.display()))
}

fn ms(t: Instant) -> u128 {
    t.elapsed().as_millis()
}

fn cmd_lock(a: LockArgs) -> Result<Exit> {
    let mut report = RunReport::new("lock");
    let c = load_circuit(&mut report, &a.input, &a.common.key_prefix)?;
    let cube = match (&a.cube, a.keysize) {
        (Some(bits), _) => {
            let bits: Bits = bits.parse().map_err(|e| anyhow!("--cube: {e}"))?;
            if a.cube_inputs.is_empty() {
                ProtectedCube::leading(&c, bits)?
            } else {
                let names: Vec<&str> = a.cube_inputs.iter().map(String::as_str).collect();
                ProtectedCube::from_names(&c, &names, bits)?
            }
        }
        (None, Some(m)) => ProtectedCube::random_seeded(&c, m, a.seed)?,
        (None, None) => bail!("one of --cube or --keysize is required"),
    };
    let params = LockParams {
        h: a.h,
        protected_outputs: if a.output_index.is_empty() { vec![0] } else { a.output_index.clone() },
        key_prefix: a.common.key_prefix.clone(),
        obfuscate: a.obfuscate.then_some(a.seed),
    };
    report.param("h", a.h);
    report.param("key_size", cube.len());
    report.param("seed", a.seed);
    report.param("obfuscate", a.obfuscate);
    report.param("protected_outputs", &params.protected_outputs);
    let t = Instant::now();
    let locked = lock_sfll_hd(&c, &cube, &params)?;
    report.timings_ms.insert("lock", ms(t));
    let key_path = a.key_file.clone().unwrap_or_else(|| a.output.with_extension("key"));
    std::fs::write(&a.output, write_bench(&locked.circuit)).with_context(|| format!("writing {}", a.output.display()))?;
    std::fs::write(&key_path, locked.key_file.to_string()).with_context(|| format!("writing {}", key_path.display()))?;
    report.result = json!({
        "output": a.output.display().to_string(),
        "key_file": key_path.display().to_string(),
        "key": locked.key.to_string(),
        "cube_inputs": locked.key_file.cube_inputs,
        "gates": locked.circuit.num_gates(),
    });
    let exit = report.finish(Exit::Ok);
    report.emit(a.common.report.as_deref())?;
    Ok(exit)
}

fn parse_sweep(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((lo, hi)) = part.split_once("..") {
            let (lo, hi): (usize, usize) = (lo.trim().parse()?, hi.trim().parse()?);
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().with_context(|| format!("bad h value `{part}`"))?);
        }
    }
    Ok(out)
}

fn structural_dump(c: &Circuit, ex: &Extraction) -> serde_json::Value {
    json!({
        "comparators": ex.comparators.iter().map(|t| json!({
            "gate": c.name(t.gate),
            "x": c.name(t.x),
            "k": c.name(t.k),
            "polarity": t.polarity,
        })).collect::<Vec<_>>(),
        "candidate_nodes": ex.candidate_nodes.iter().map(|&n| c.name(n)).collect::<Vec<_>>(),
        "dropped_candidates": ex.dropped_candidates,
        "unpaired_keys": ex.unpaired_keys.iter().map(|&n| c.name(n)).collect::<Vec<_>>(),
    })
}

fn oracle_from_spec(spec: &str, locked: &Circuit, report: &mut RunReport, prefix: &str) -> Result<Box<dyn Oracle>> {
    let (kind, rest) = spec.split_once(':').ok_or_else(|| anyhow!("oracle `{spec}` should look like kind:argument"))?;
    Ok(match kind {
        "sim" => Box::new(SimulationOracle::new(load_circuit(report, Path::new(rest), prefix)?)?),
        "locked" => Box::new(LockedOracle::new(locked.clone(), parse_key_arg(rest)?)?),
        "tcp" => Box::new(ExternalOracle::connect_tcp(rest)?),
        "exec" => {
            let mut words = rest.split_whitespace();
            let program = words.next().ok_or_else(|| anyhow!("exec oracle needs a command"))?;
            Box::new(ExternalOracle::spawn(program, &words.map(String::from).collect::<Vec<_>>())?)
        }
        _ => bail!("unknown oracle kind `{kind}`"),
    })
}

fn parse_key_arg(text: &str) -> Result<Bits> {
    if text == "-" || text.is_empty() {
        return Ok(Bits::new(Vec::new()));
    }
    if Path::new(text).is_file() {
        let body = std::fs::read_to_string(text)?;
        return Ok(KeyFile::parse(&body).map_err(|e| anyhow!("{text}: {e}"))?.key);
    }
    text.parse().map_err(|e| anyhow!("bad key `{text}`: {e}"))
}

fn confirm_options<'a>(limits: &ConfirmLimits, common: &Common, locked: &Circuit, replay: Option<&'a mut dyn Write>) -> Result<ConfirmOptions<'a>> {
    let preload = match &limits.resume {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            parse_replay(&text, locked.circuit_inputs().len(), locked.outputs().len())?
        }
        None => Vec::new(),
    };
    Ok(ConfirmOptions {
        max_iterations: limits.max_iterations,
        budget: limits.budget.map(Duration::from_secs_f64),
        solver_timeout: common.timeout(),
        preload,
        replay,
    })
}

fn open_replay(limits: &ConfirmLimits) -> Result<Option<std::fs::File>> {
    limits
        .replay
        .as_ref()
        .map(|p| std::fs::OpenOptions::new().create(true).append(true).open(p).with_context(|| format!("opening {}", p.display())))
        .transpose()
}

fn confirm_json(c: &ConfirmResult, fell_back: Option<bool>) -> serde_json::Value {
    let mut v = json!({
        "outcome": c.outcome,
        "iterations": c.iterations,
        "oracle_queries": c.oracle_queries,
        "dip_trace": c.dip_trace.iter().map(|d| d.to_line()).collect::<Vec<_>>(),
        "solver_stats": c.stats,
    });
    if let Some(f) = fell_back {
        v["fell_back_to_sat_attack"] = json!(f);
    }
    v
}

fn outcome_exit(o: &Outcome) -> Exit {
    match o {
        Outcome::ConfirmedKey(_) => Exit::Ok,
        Outcome::NoKeyInPhi => Exit::None,
        Outcome::IterationLimit | Outcome::TimeBudget => Exit::Timeout,
    }
}

fn cmd_attack(a: AttackArgs) -> Result<Exit> {
    if let Some(j) = a.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global().context("setting up worker threads")?;
    }
    let mut report = RunReport::new("attack");
    let locked = load_circuit(&mut report, &a.locked, &a.common.key_prefix)?;
    let h = match (a.h, &a.sweep_h) {
        (Some(h), _) => HChoice::Fixed(h),
        (None, Some(s)) if !s.trim().is_empty() => HChoice::Sweep(parse_sweep(s)?),
        _ => HChoice::DefaultSweep,
    };
    report.param("h", match &h {
        HChoice::Fixed(h) => json!(h),
        HChoice::Sweep(v) => json!(v),
        HChoice::DefaultSweep => json!("0..m/3"),
    });
    report.param("key_size", locked.key_inputs().len());
    report.param("candidate_cap", a.candidate_cap);
    let opts = ExtractOptions { h, timeout: a.common.timeout(), candidate_cap: a.candidate_cap };
    let t = Instant::now();
    let ex = extract_candidate_keys(&locked, &opts);
    report.timings_ms.insert("structural+functional", ms(t));

    if let Some(p) = &a.dump_structural {
        std::fs::write(p, serde_json::to_string_pretty(&structural_dump(&locked, &ex))? + "\n")?;
    }
    if let Some(p) = &a.dump_functional {
        std::fs::write(p, serde_json::to_string_pretty(&ex.reports)? + "\n")?;
    }
    let candidates: Vec<serde_json::Value> = ex
        .candidates
        .iter()
        .map(|k| {
            json!({
                "key": k.key.to_string(),
                "source_node": locked.name(k.source_node),
                "h": k.h_used,
                "algorithm": k.algorithm,
                "negated": k.negated,
                "derived_complement": k.derived_complement,
            })
        })
        .collect();
    report.result = json!({
        "structurally_complete": ex.structurally_complete(),
        "comparators": ex.comparators.len(),
        "candidate_nodes": ex.candidate_nodes.len(),
        "timed_out": ex.timed_out,
        "candidates": candidates,
    });

    let mut exit = match ex.candidates.len() {
        0 if ex.timed_out => Exit::Timeout,
        0 => Exit::None,
        1 => Exit::Ok,
        _ => Exit::Multiple,
    };
    if let Some(spec) = &a.oracle {
        let mut oracle = oracle_from_spec(spec, &locked, &mut report, &a.common.key_prefix)?;
        let mut file = open_replay(&a.confirm)?;
        let opts = confirm_options(&a.confirm, &a.common, &locked, file.as_mut().map(|f| f as &mut dyn Write))?;
        let keys: Vec<Bits> = ex.candidates.iter().map(|k| k.key.clone()).collect();
        let t = Instant::now();
        let (conf, fell_back) = confirm_or_fallback(&locked, &keys, oracle.as_mut(), opts)?;
        report.timings_ms.insert("confirmation", ms(t));
        report.result["confirmation"] = confirm_json(&conf, Some(fell_back));
        exit = outcome_exit(&conf.outcome);
    }
    let exit = report.finish(exit);
    report.emit(a.common.report.as_deref())?;
    Ok(exit)
}

fn cmd_confirm(a: ConfirmArgs) -> Result<Exit> {
    let mut report = RunReport::new("confirm");
    let locked = load_circuit(&mut report, &a.locked, &a.common.key_prefix)?;
    let nk = locked.key_inputs().len();
    let phi = match (&a.keys, &a.phi) {
        (Some(p), _) => {
            let text = report.read_input(p)?;
            KeyPredicate::parse_list(&text)?
        }
        (None, Some(p)) if p.trim() == "true" => KeyPredicate::True,
        (None, Some(p)) => {
            let text = report.read_input(Path::new(p))?;
            KeyPredicate::parse_cnf(&text, nk)?
        }
        (None, None) => bail!("one of --keys or --phi is required"),
    };
    phi.check(nk)?;
    report.param("key_size", nk);
    report.param("oracle", &a.oracle);
    report.param("max_iterations", a.limits.max_iterations);
    let mut oracle = oracle_from_spec(&a.oracle, &locked, &mut report, &a.common.key_prefix)?;
    let mut file = open_replay(&a.limits)?;
    let opts = confirm_options(&a.limits, &a.common, &locked, file.as_mut().map(|f| f as &mut dyn Write))?;
    let t = Instant::now();
    let r = key_confirmation(&locked, &phi, oracle.as_mut(), opts)?;
    report.timings_ms.insert("confirmation", ms(t));
    report.result = confirm_json(&r, None);
    let exit = report.finish(outcome_exit(&r.outcome));
    report.emit(a.common.report.as_deref())?;
    Ok(exit)
}

fn cmd_verify(a: VerifyArgs) -> Result<Exit> {
    let mut report = RunReport::new("verify");
    let locked = load_circuit(&mut report, &a.locked, &a.common.key_prefix)?;
    let unlocked = load_circuit(&mut report, &a.unlocked, &a.common.key_prefix)?;
    let key = parse_key_arg(&a.key)?;
    report.param("key", key.to_string());
    let t = Instant::now();
    let verdict = verify_key(&locked, &key, &unlocked, a.common.timeout())?;
    report.timings_ms.insert("verify", ms(t));
    let exit = match verdict {
        Verdict::Equivalent => {
            report.result = json!({ "verdict": "equivalent" });
            Exit::Ok
        }
        Verdict::Inequivalent(w) => {
            report.result = json!({ "verdict": "inequivalent", "witness": w.to_string() });
            Exit::None
        }
    };
    let exit = report.finish(exit);
    report.emit(a.common.report.as_deref())?;
    Ok(exit)
}

fn cmd_serve(a: ServeArgs) -> Result<()> {
    let read = |p: &Path| -> Result<Circuit> {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        parse_bench(&text, &a.key_prefix).with_context(|| format!("parsing {}", p.display()))
    };
    let mut oracle: Box<dyn Oracle> = match (&a.sim, &a.locked, &a.key) {
        (Some(p), _, _) => Box::new(SimulationOracle::new(read(p)?)?),
        (None, Some(p), Some(k)) => Box::new(LockedOracle::new(read(p)?, parse_key_arg(k)?)?),
        _ => bail!("give --sim, or --locked with --key"),
    };
    match &a.listen {
        None => serve(oracle.as_mut(), std::io::stdin().lock(), std::io::stdout().lock())?,
        Some(addr) => {
            let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let stream = stream?;
                if let Err(e) = serve(oracle.as_mut(), BufReader::new(stream.try_clone()?), stream) {
                    log::warn!("connection ended: {e}");
                }
            }
        }
    }
    Ok(())
}
