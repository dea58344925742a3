//! Command-line front end: `simulate`, `sweep` and `bounds`.
//!
//! Every command writes a single report to stdout (or `--out`). Timing goes
//! to stderr so that reports stay byte-identical across repeated runs.

mod output;
mod suite;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{AnalysisError, BoundReport};
use crate::linalg::{random_pure, trace_distance, LinalgError};
use crate::model::{
    gate_u_matrix, make_phi, Budget, ModelError, Party, PureState, Register, RegisterLayout,
};
use crate::protocols::{ProtocolError, Simulator, WMode};

pub use output::{csv, fmt_num, json as to_json};
pub use suite::{Section, SuiteParams};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "nonlocalsim",
    version,
    about = "Simulate catalysed nonlocal measurements and check their error bounds"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Execution backend: auto, dense or ring.
    #[arg(long, global = true, default_value = "auto")]
    pub backend: String,
    /// Amplitude cap; overrides NONLOCALSIM_MAX_AMPLITUDES.
    #[arg(long, global = true)]
    pub max_amplitudes: Option<usize>,
    /// Charge whole qubits per transmission.
    #[arg(long, global = true)]
    pub integral_qubits: bool,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for independent trials.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Run the gate simulation once and compare with the exact gate.
    Simulate {
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 8)]
        m: usize,
        /// `00`, `phi`, `random`, or two basis digits such as `12`.
        #[arg(long, default_value = "00")]
        input: String,
        #[arg(long, default_value = "approx")]
        mode: WMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Worst trace distance to the exact gate over random inputs, per m.
    Sweep {
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Comma-separated ring sizes.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        m: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value = "approx")]
        mode: WMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate the bound suite. Without section flags every section runs.
    Bounds {
        #[arg(long)]
        error_terms: bool,
        #[arg(long)]
        delta_eps: bool,
        #[arg(long)]
        chain: bool,
        #[arg(long)]
        cost: bool,
        #[arg(long)]
        fannes_alicki: bool,
        #[arg(long)]
        continuity: bool,
        #[arg(long)]
        distance: bool,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = 1024.0)]
        n: f64,
        #[arg(long, default_value_t = 3.0)]
        c: f64,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A rendered report and whether every check in it held.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub text: String,
    pub satisfied: bool,
    pub failures: Vec<String>,
}

/// Independent generator for trial `t` of stream `stream`.
pub fn trial_rng(seed: u64, stream: u64, t: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((stream << 32) | t);
    rng
}

pub(crate) struct Context {
    pub sim: Simulator,
    pub pool: rayon::ThreadPool,
}

impl Context {
    fn new(common: &Common) -> Result<Self> {
        let budget = match common.max_amplitudes {
            Some(n) => Budget::new(n)?,
            None => Budget::from_env()?,
        };
        let sim = Simulator::new(budget)
            .with_backend(common.backend.clone())
            .with_integral_qubits(common.integral_qubits);
        if sim.registry().get(&common.backend).is_none() && common.backend != "auto" {
            return Err(CliError::Usage(format!(
                "unknown backend {:?}; choose auto or one of {:?}",
                common.backend,
                sim.registry().names()
            )));
        }
        if common.jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(common.jobs)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(Self { sim, pool })
    }

    /// Map `f` over `0..n` on the pool, keeping index order.
    pub fn par_map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().map(f).collect())
    }
}

fn gate_layout(d: usize, ref_dim: usize) -> Result<RegisterLayout> {
    Ok(RegisterLayout::new(vec![
        Register::new("R", ref_dim, Party::Referee),
        Register::new("A", d + 1, Party::Alice),
        Register::new("B", d + 1, Party::Bob),
    ])?)
}

/// Input on `R ⊗ A ⊗ B`. Random inputs get a qubit reference; the others
/// a trivial one.
pub fn parse_input(spec: &str, d: usize, rng: &mut ChaCha8Rng) -> Result<PureState> {
    let q = d + 1;
    match spec {
        "random" => {
            let layout = gate_layout(d, 2)?;
            Ok(PureState::new(layout, random_pure(2 * q * q, rng))?)
        }
        "phi" => {
            let phi = make_phi(d)?;
            Ok(PureState::new(
                gate_layout(d, 1)?,
                phi.amplitudes().clone(),
            )?)
        }
        digits if digits.len() == 2 && digits.chars().all(|c| c.is_ascii_digit()) => {
            let v: Vec<usize> = digits.bytes().map(|b| (b - b'0') as usize).collect();
            if v.iter().any(|&x| x >= q) {
                return Err(CliError::Usage(format!(
                    "input {spec:?} has a digit above d = {d}"
                )));
            }
            Ok(PureState::basis(gate_layout(d, 1)?, &[0, v[0], v[1]])?)
        }
        other => Err(CliError::Usage(format!(
            "input {other:?}: expected 00, phi, random or two basis digits"
        ))),
    }
}

/// Trace distance between the simulation's output and the exact gate's.
fn gate_error(
    sim: &Simulator,
    input: &PureState,
    d: usize,
    m: usize,
    mode: WMode,
) -> Result<(f64, crate::protocols::LedgerSummary, &'static str)> {
    let run = sim.run_w(input, d, m, mode)?;
    let exact = input.apply_matrix_unchecked(&["A", "B"], &gate_u_matrix(d))?;
    let exact = exact.reduced(&["R", "A", "B"])?;
    let dist = trace_distance(run.density()?, &exact)?;
    Ok((dist, run.summary(), run.backend))
}

fn gate_bound(m: usize) -> f64 {
    2.0 * std::f64::consts::SQRT_2 / (m as f64).sqrt()
}

fn check_gate_args(d: usize, m: usize) -> Result<()> {
    if d < 1 {
        return Err(CliError::Usage("--d must be at least 1".into()));
    }
    if m < 2 {
        return Err(CliError::Usage(format!("--m {m}: need m >= 2")));
    }
    Ok(())
}

const SIMULATE_COLUMNS: [&str; 11] = [
    "d",
    "m",
    "mode",
    "input",
    "seed",
    "backend",
    "trace_distance",
    "bound",
    "satisfied",
    "fwd_qubits",
    "bwd_qubits",
];

fn simulate(
    ctx: &Context,
    format: Format,
    d: usize,
    m: usize,
    input: &str,
    mode: WMode,
    seed: u64,
) -> Result<Outcome> {
    check_gate_args(d, m)?;
    let mut rng = trial_rng(seed, 0, 0);
    let state = parse_input(input, d, &mut rng)?;
    let (dist, ledger, backend) = gate_error(&ctx.sim, &state, d, m, mode)?;
    let report = BoundReport::new("simulate_trace_distance", dist, gate_bound(m));
    let satisfied = report.satisfied;
    let mut row: BTreeMap<String, Value> = BTreeMap::new();
    row.insert("d".into(), json!(d));
    row.insert("m".into(), json!(m));
    row.insert("mode".into(), json!(mode.to_string()));
    row.insert("input".into(), json!(input));
    row.insert("seed".into(), json!(seed));
    row.insert("backend".into(), json!(backend));
    row.insert("trace_distance".into(), json!(dist));
    row.insert("bound".into(), json!(report.bound));
    row.insert("satisfied".into(), json!(satisfied));
    row.insert("fwd_qubits".into(), json!(ledger.forward_qubits));
    row.insert("bwd_qubits".into(), json!(ledger.backward_qubits));
    let text = match format {
        Format::Csv => csv(&SIMULATE_COLUMNS, &[row]),
        Format::Json => {
            let mut rec = row;
            let fwd = rec.remove("fwd_qubits");
            let bwd = rec.remove("bwd_qubits");
            rec.insert(
                "ledger".into(),
                json!({"forward_qubits": fwd, "backward_qubits": bwd, "bits_equiv": ledger.bits_equiv}),
            );
            to_json(&rec)
        }
    };
    let failures = if satisfied {
        vec![]
    } else {
        vec![format!(
            "trace distance {dist} above {} at d={d}, m={m}",
            report.bound
        )]
    };
    Ok(Outcome {
        text,
        satisfied,
        failures,
    })
}

const SWEEP_COLUMNS: [&str; 9] = [
    "d",
    "m",
    "trials",
    "max_measured_distance",
    "bound",
    "satisfied",
    "fwd_qubits",
    "bwd_qubits",
    "bits_equiv",
];

fn sweep(
    ctx: &Context,
    format: Format,
    d: usize,
    ms: &[usize],
    trials: usize,
    mode: WMode,
    seed: u64,
) -> Result<Outcome> {
    if ms.is_empty() {
        return Err(CliError::Usage("--m needs at least one ring size".into()));
    }
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    for &m in ms {
        check_gate_args(d, m)?;
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &m in ms {
        let results = ctx.par_map(trials, |t| -> Result<_> {
            let mut rng = trial_rng(seed, m as u64, t as u64);
            let input = parse_input("random", d, &mut rng)?;
            gate_error(&ctx.sim, &input, d, m, mode)
        });
        let results = results.into_iter().collect::<Result<Vec<_>>>()?;
        let worst = results.iter().map(|r| r.0).fold(0.0, f64::max);
        let ledger = results[0].1;
        let report = BoundReport::new("sweep_max_distance", worst, gate_bound(m));
        if !report.satisfied {
            failures.push(format!(
                "max distance {worst} above {} at d={d}, m={m}",
                report.bound
            ));
        }
        let mut row = BTreeMap::new();
        row.insert("d".to_string(), json!(d));
        row.insert("m".to_string(), json!(m));
        row.insert("trials".to_string(), json!(trials));
        row.insert("max_measured_distance".to_string(), json!(worst));
        row.insert("bound".to_string(), json!(report.bound));
        row.insert("satisfied".to_string(), json!(report.satisfied));
        row.insert("fwd_qubits".to_string(), json!(ledger.forward_qubits));
        row.insert("bwd_qubits".to_string(), json!(ledger.backward_qubits));
        row.insert("bits_equiv".to_string(), json!(ledger.bits_equiv));
        rows.push(row);
    }
    let text = match format {
        Format::Csv => csv(&SWEEP_COLUMNS, &rows),
        Format::Json => to_json(&rows),
    };
    Ok(Outcome {
        text,
        satisfied: failures.is_empty(),
        failures,
    })
}

fn bounds(
    ctx: &Context,
    format: Format,
    sections: Vec<Section>,
    params: SuiteParams,
) -> Result<Outcome> {
    let reports = suite::run(ctx, &sections, &params)?;
    let failures: Vec<String> = reports
        .iter()
        .filter(|r| !r.satisfied)
        .map(|r| serde_json::to_string(&r.context).unwrap_or_default())
        .collect();
    let text = match format {
        Format::Json => to_json(&reports),
        Format::Csv => {
            let rows: Vec<BTreeMap<String, Value>> = reports
                .iter()
                .map(|r| {
                    let mut row = BTreeMap::new();
                    row.insert("check".to_string(), json!(r.check()));
                    row.insert("measured".to_string(), json!(r.measured));
                    row.insert("bound".to_string(), json!(r.bound));
                    row.insert("satisfied".to_string(), json!(r.satisfied));
                    let ctx: Vec<String> = r
                        .context
                        .iter()
                        .filter(|(k, _)| k.as_str() != "check")
                        .map(|(k, v)| format!("{k}={}", output::fmt_value(v)))
                        .collect();
                    row.insert("context".to_string(), json!(ctx.join(";")));
                    row
                })
                .collect();
            csv(
                &["check", "measured", "bound", "satisfied", "context"],
                &rows,
            )
        }
    };
    Ok(Outcome {
        text,
        satisfied: failures.is_empty(),
        failures,
    })
}

/// Execute a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let ctx = Context::new(&cli.common)?;
    match &cli.command {
        Command::Simulate {
            d,
            m,
            input,
            mode,
            seed,
        } => simulate(
            &ctx,
            cli.common.format.unwrap_or(Format::Json),
            *d,
            *m,
            input,
            *mode,
            *seed,
        ),
        Command::Sweep {
            d,
            m,
            trials,
            mode,
            seed,
        } => sweep(
            &ctx,
            cli.common.format.unwrap_or(Format::Csv),
            *d,
            m,
            *trials,
            *mode,
            *seed,
        ),
        Command::Bounds {
            error_terms,
            delta_eps,
            chain,
            cost,
            fannes_alicki,
            continuity,
            distance,
            d,
            m,
            epsilon,
            n,
            c,
            trials,
            seed,
        } => {
            let picked: Vec<Section> = [
                (*error_terms, Section::ErrorTerms),
                (*delta_eps, Section::DeltaEps),
                (*chain, Section::Chain),
                (*cost, Section::Cost),
                (*fannes_alicki, Section::FannesAlicki),
                (*continuity, Section::Continuity),
                (*distance, Section::Distance),
            ]
            .into_iter()
            .filter_map(|(on, s)| on.then_some(s))
            .collect();
            let sections = if picked.is_empty() {
                Section::ALL.to_vec()
            } else {
                picked
            };
            let params = SuiteParams {
                d: *d,
                m: *m,
                epsilon: *epsilon,
                n: *n,
                c: *c,
                trials: *trials,
                seed: *seed,
            };
            bounds(
                &ctx,
                cli.common.format.unwrap_or(Format::Json),
                sections,
                params,
            )
        }
    }
}

/// Exit code for an error: usage and budget problems are both 2.
pub fn exit_code(_err: &CliError) -> i32 {
    2
}

/// Parse, run, write. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let outcome = run(&cli).and_then(|o| {
        match &cli.common.out {
            Some(path) => std::fs::write(path, &o.text).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?,
            None => print!("{}", o.text),
        }
        Ok(o)
    });
    eprintln!("runtime: {:.3} s", started.elapsed().as_secs_f64());
    match outcome {
        Ok(o) if o.satisfied => 0,
        Ok(o) => {
            for f in &o.failures {
                eprintln!("violated: {f}");
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
