//! `ghostpulse` command-line driver.
//!
//! Every subcommand writes its data files and a `manifest.json` into `--out`.
//! Exit codes follow sysexits: 0 success, 1 failed checks, 2 solver blowup,
//! 64 bad usage or configuration, 74 I/O failure.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

use ghostpulse::boxes::{make_partition, PartitionOfUnity};
use ghostpulse::io::{write_audit_csv, write_trajectory_csv, FieldSnapshot};
use ghostpulse::operators::{divided_bound_audit, summarize, OperatorKind};
use ghostpulse::resonance::{divisor_count, divisor_sieve, enumerate_a_n, multiplicity_audit, write_quads_csv};
use ghostpulse::solver::{co_evolve, SimulationConfig};
use ghostpulse::spectral::SPATIAL_SCALE;
use ghostpulse::trees::{
    bound_check, census_series, generation, write_bounds_csv, write_census_csv, write_tree_dump, GenerationCensus,
};
use ghostpulse::verify::{classification_partition_defects, gauge_residual, run_suite, Check, Suite, VerifyOptions};
use ghostpulse::Error;

const EX_CHECKS: u8 = 1;
const EX_BLOWUP: u8 = 2;
const EX_USAGE: u8 = 64;
const EX_IOERR: u8 = 74;

#[derive(Parser, Debug)]
#[command(name = "ghostpulse", version, about = "Hybrid periodic + L² cubic NLS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for every random draw made by the run.
    #[arg(long, default_value_t = 20240611)]
    seed: u64,
    /// Override a parameter, `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Co-evolve a background and a perturbation from a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Census, enumeration or growth bounds of the colored trees.
    Trees {
        #[arg(long = "J", value_name = "J")]
        j: usize,
        #[arg(long, value_enum, default_value_t = TreeMode::Census)]
        mode: TreeMode,
        #[command(flatten)]
        common: Common,
    },
    /// Resonant-set listings and audits.
    Resonance {
        #[arg(long, value_enum)]
        mode: ResonanceMode,
        #[command(flatten)]
        common: Common,
    },
    /// First-generation operator audits.
    Operators {
        #[arg(long, value_enum)]
        mode: OperatorMode,
        #[command(flatten)]
        common: Common,
    },
    /// Run invariant suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum TreeMode {
    Census,
    Enumerate,
    Bounds,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ResonanceMode {
    #[value(name = "a-n")]
    #[serde(rename = "a-n")]
    AN,
    Divisors,
    Audit,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OperatorMode {
    Audit,
    Gauge,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => EX_USAGE,
            Self::Io(_) => EX_IOERR,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::Io(_) | Error::Csv(_) => Self::Io(e.to_string()),
            Error::Json(j) if j.is_io() => Self::Io(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Status {
    Ok,
    ChecksFailed,
    Blowup,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    args: Vec<String>,
    seed: u64,
    spatial_scale: f64,
    config: Value,
    started: String,
    finished: String,
    wall_seconds: f64,
    outputs: Vec<String>,
    checks: Vec<Check>,
    status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    blowup_time: Option<f64>,
}

/// Collects outputs and checks while a subcommand runs.
struct Run {
    command: &'static str,
    out: PathBuf,
    seed: u64,
    config: Value,
    outputs: Vec<String>,
    checks: Vec<Check>,
    blowup_time: Option<f64>,
    started: chrono::DateTime<chrono::Utc>,
    clock: Instant,
}

impl Run {
    fn start(command: &'static str, common: &Common) -> Result<Self, Failure> {
        fs::create_dir_all(&common.out).map_err(|e| io_failure(&common.out, e))?;
        Ok(Self {
            command,
            out: common.out.clone(),
            seed: common.seed,
            config: Value::Null,
            outputs: Vec::new(),
            checks: Vec::new(),
            blowup_time: None,
            started: chrono::Utc::now(),
            clock: Instant::now(),
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, Failure> {
        let path = self.out.join(name);
        let f = File::create(&path).map_err(|e| io_failure(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn check(&mut self, c: Check) {
        println!("{c}");
        self.checks.push(c);
    }

    fn finish(self) -> Result<u8, Failure> {
        let status = if self.blowup_time.is_some() {
            Status::Blowup
        } else if self.checks.iter().all(|c| c.pass) {
            Status::Ok
        } else {
            Status::ChecksFailed
        };
        let failing: Vec<String> = self.checks.iter().filter(|c| !c.pass).map(|c| c.id.clone()).collect();
        let manifest = Manifest {
            tool: "ghostpulse",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            args: std::env::args().skip(1).collect(),
            seed: self.seed,
            spatial_scale: SPATIAL_SCALE,
            config: self.config,
            started: self.started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
            wall_seconds: self.clock.elapsed().as_secs_f64(),
            outputs: self.outputs,
            checks: self.checks,
            status,
            blowup_time: self.blowup_time,
        };
        let path = self.out.join("manifest.json");
        let f = File::create(&path).map_err(|e| io_failure(&path, e))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &manifest).map_err(|e| Failure::Io(e.to_string()))?;
        Ok(match status {
            Status::Ok => 0,
            Status::Blowup => {
                eprintln!("solution blew up at t = {}", manifest.blowup_time.unwrap_or(f64::NAN));
                EX_BLOWUP
            }
            Status::ChecksFailed => {
                eprintln!("failed checks: {}", failing.join(", "));
                EX_CHECKS
            }
        })
    }
}

fn split_assignment(item: &str) -> Result<(&str, &str), Failure> {
    item.split_once('=')
        .filter(|(k, _)| !k.is_empty())
        .ok_or_else(|| Failure::Usage(format!("--set expects key=value, got '{item}'")))
}

/// Flat `key=value` parameters with defaults; unknown keys are rejected.
struct Params {
    given: BTreeMap<String, String>,
    resolved: serde_json::Map<String, Value>,
}

impl Params {
    fn parse(items: &[String]) -> Result<Self, Failure> {
        let mut given = BTreeMap::new();
        for item in items {
            let (k, v) = split_assignment(item)?;
            given.insert(k.to_string(), v.to_string());
        }
        Ok(Self {
            given,
            resolved: serde_json::Map::new(),
        })
    }

    fn get<T>(&mut self, key: &str, default: T) -> Result<T, Failure>
    where
        T: std::str::FromStr + Serialize,
    {
        let value = match self.given.remove(key) {
            Some(raw) => raw
                .parse()
                .map_err(|_| Failure::Usage(format!("cannot parse --set {key}={raw}")))?,
            None => default,
        };
        self.resolved
            .insert(key.to_string(), serde_json::to_value(&value).unwrap_or(Value::Null));
        Ok(value)
    }

    fn finish(self) -> Result<Value, Failure> {
        if let Some(k) = self.given.keys().next() {
            return Err(Failure::Usage(format!("unknown parameter '{k}'")));
        }
        Ok(Value::Object(self.resolved))
    }
}

/// Sets `path` (dot separated) inside `root`, creating objects as needed.
/// The value is read as JSON when it parses and as a string otherwise.
fn apply_override(root: &mut Value, path: &str, raw: &str) -> Result<(), Failure> {
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let mut keys = path.split('.').peekable();
    while let Some(key) = keys.next() {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| Failure::Usage(format!("cannot set '{path}': '{key}' is not inside an object")))?;
        if keys.peek().is_none() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    Ok(())
}

fn load_config(path: &Path, overrides: &[String]) -> Result<SimulationConfig, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
    let parse_err = |e: serde_json::Error| Failure::Usage(format!("{}: {e}", path.display()));
    if overrides.is_empty() {
        return serde_json::from_str(&text).map_err(parse_err);
    }
    let mut value: Value = serde_json::from_str(&text).map_err(parse_err)?;
    for item in overrides {
        let (k, v) = split_assignment(item)?;
        apply_override(&mut value, k, v)?;
    }
    serde_json::from_value(value).map_err(|e| Failure::Usage(format!("after overrides: {e}")))
}

fn simulate(config: &Path, common: &Common) -> Result<u8, Failure> {
    let cfg = load_config(config, &common.set)?;
    let state = cfg.initial_state()?;
    let mut run = Run::start("simulate", common)?;
    run.config = serde_json::to_value(&cfg).map_err(|e| Failure::Usage(e.to_string()))?;

    let traj = co_evolve(&state, &cfg.solver, Some(&cfg.experiment))?;
    write_trajectory_csv(run.create("trajectory.csv")?, &traj.records, &traj.slots)?;
    let last = traj.final_state();
    FieldSnapshot::from_periodic(&last.w).write_json(run.create("w_final.json")?)?;
    FieldSnapshot::from_line(&last.v).write_json(run.create("v_final.json")?)?;
    run.blowup_time = traj.blowup;

    if let (Some(first), Some(final_rec)) = (traj.records.first(), traj.records.last()) {
        let drift = (final_rec.w_mass - first.w_mass).abs() / first.w_mass.max(f64::MIN_POSITIVE);
        let scale = (cfg.solver.steps() as f64 / 1000.0).max(1.0);
        run.check(Check::at_most(
            "w-mass",
            "relative drift of the background L² mass",
            drift,
            1e-10 * scale,
        ));
        if first.v_l2 == 0.0 {
            let worst = traj.records.iter().map(|r| r.v_l2).fold(0.0, f64::max);
            run.check(Check::at_most(
                "v-zero-preserved",
                "largest perturbation norm when it starts at zero",
                worst,
                1e-14,
            ));
        }
    }
    run.finish()
}

fn trees(j: usize, mode: TreeMode, common: &Common) -> Result<u8, Failure> {
    let mut run = Run::start("trees", common)?;
    run.config = serde_json::json!({ "J": j, "mode": mode });
    let census = census_series(j)?;
    match mode {
        TreeMode::Census => {
            write_census_csv(run.create("census.csv")?, &census)?;
        }
        TreeMode::Enumerate => {
            let trees = generation(j)?;
            write_census_csv(run.create("census.csv")?, &census)?;
            write_tree_dump(run.create(&format!("trees_J{j}.txt"))?, &trees)?;
            let counted = GenerationCensus::from_trees(j, &trees);
            let expected = census.last().expect("series is nonempty");
            let mismatch = counted.per_tree != expected.per_tree;
            run.check(Check::at_most(
                "census-recursion",
                "enumerated histogram differs from the recursive census (1 = differs)",
                f64::from(u8::from(mismatch)),
                0.0,
            ));
        }
        TreeMode::Bounds => {
            let rows = (1..=j).map(bound_check).collect::<Result<Vec<_>, _>>()?;
            write_bounds_csv(run.create("bounds.csv")?, &rows)?;
            let failing = rows.iter().filter(|r| !r.ok).count();
            run.check(Check::at_most(
                "growth-bound",
                "generations whose count exceeds the factorial bound",
                failing as f64,
                0.0,
            ));
        }
    }
    run.finish()
}

fn resonance(mode: ResonanceMode, common: &Common) -> Result<u8, Failure> {
    let mut run = Run::start("resonance", common)?;
    let mut p = Params::parse(&common.set)?;
    match mode {
        ResonanceMode::AN => {
            let n: i64 = p.get("n", 0)?;
            let threshold: f64 = p.get("threshold", 64.0)?;
            let band: i64 = p.get("band", 16)?;
            run.config = p.finish()?;
            let quads = enumerate_a_n(n, threshold, band);
            println!("|A_N({n})| = {} for N = {threshold}, band {band}", quads.len());
            write_quads_csv(run.create("a_n.csv")?, &quads, threshold)?;
        }
        ResonanceMode::Divisors => {
            let limit: usize = p.get("limit", 10_000)?;
            run.config = p.finish()?;
            let sieve = divisor_sieve(limit);
            let mut w = run.create("divisors.csv")?;
            use std::io::Write;
            writeln!(w, "m,d").map_err(|e| Failure::Io(e.to_string()))?;
            let mut mismatches = 0usize;
            for (m, &d) in sieve.iter().enumerate().skip(1) {
                writeln!(w, "{m},{d}").map_err(|e| Failure::Io(e.to_string()))?;
                if divisor_count(m as i64)? != u64::from(d) {
                    mismatches += 1;
                }
            }
            w.flush().map_err(|e| Failure::Io(e.to_string()))?;
            run.check(Check::at_most(
                "divisor-sieve",
                "sieve entries disagreeing with trial division",
                mismatches as f64,
                0.0,
            ));
        }
        ResonanceMode::Audit => {
            let band: i64 = p.get("band", 8)?;
            let threshold: f64 = p.get("threshold", 16.0)?;
            run.config = p.finish()?;
            let audit = multiplicity_audit(band, threshold);
            run.check(Check::at_most(
                "multiplicity-audit",
                format!("constrained quads not counted exactly once (of {})", audit.quads),
                audit.violations as f64,
                0.0,
            ));
            run.check(Check::at_most(
                "resonant-set-partition",
                "non-resonant quads outside exactly one of A_N(n), its complement",
                classification_partition_defects(band, threshold) as f64,
                0.0,
            ));
        }
    }
    run.finish()
}

fn parse_kinds(raw: &str) -> Result<Vec<OperatorKind>, Failure> {
    if raw == "all" {
        return Ok(OperatorKind::ALL.to_vec());
    }
    raw.split(',')
        .map(|k| k.trim().parse::<OperatorKind>().map_err(Failure::from))
        .collect()
}

fn operators(mode: OperatorMode, common: &Common) -> Result<u8, Failure> {
    let mut run = Run::start("operators", common)?;
    let mut p = Params::parse(&common.set)?;
    let kinds_raw: String = p.get("kinds", "all".to_string())?;
    let kinds = parse_kinds(&kinds_raw)?;
    let pou = make_partition();
    match mode {
        OperatorMode::Audit => {
            let configs: usize = p.get("configs", 100)?;
            let lattice: u32 = p.get("lattice", 8)?;
            run.config = p.finish()?;
            let mut rows = Vec::new();
            for (i, &kind) in kinds.iter().enumerate() {
                let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(common.seed + i as u64);
                let kind_rows = divided_bound_audit(kind, configs, lattice, &pou, &mut rng)?;
                let s = summarize(&kind_rows);
                run.check(Check::at_most(
                    format!("divided-bound-{}", kind.label()),
                    format!("normalized ratio max/median (max {:.3e}, median {:.3e})", s.max, s.median),
                    s.spread,
                    5.0,
                ));
                rows.extend(kind_rows);
            }
            write_audit_csv(run.create("audit.csv")?, &rows)?;
        }
        OperatorMode::Gauge => {
            let configs: usize = p.get("configs", 3)?;
            run.config = p.finish()?;
            for (i, &kind) in kinds.iter().enumerate() {
                run.check(Check::at_most(
                    format!("gauge-relation-{}", kind.label()),
                    "integrated symbol against gauged divided symbol at t = 0.1, 0.3, 1.0",
                    gauge_residual(kind, &[0.1, 0.3, 1.0], configs, common.seed + i as u64, &pou)?,
                    1e-9,
                ));
            }
        }
    }
    run.finish()
}

fn verify(suite: &str, common: &Common) -> Result<u8, Failure> {
    let suite: Suite = suite.parse()?;
    let mut run = Run::start("verify", common)?;
    let mut p = Params::parse(&common.set)?;
    let partition: String = p.get("partition", "normalized".to_string())?;
    let pou = match partition.as_str() {
        "normalized" => make_partition(),
        "raw-bump" => PartitionOfUnity::raw_bump(),
        other => return Err(Failure::Usage(format!("unknown partition '{other}'"))),
    };
    let mut cfg = p.finish()?;
    cfg["suite"] = serde_json::to_value(suite).unwrap_or(Value::Null);
    run.config = cfg;
    let opts = VerifyOptions {
        partition: pou,
        seed: common.seed,
    };
    for c in run_suite(suite, &opts)? {
        run.check(c);
    }
    run.finish()
}

fn dispatch(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Simulate { config, common } => simulate(&config, &common),
        Command::Trees { j, mode, common } => trees(j, mode, &common),
        Command::Resonance { mode, common } => resonance(mode, &common),
        Command::Operators { mode, common } => operators(mode, &common),
        Command::Verify { suite, common } => verify(&suite, &common),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EX_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
