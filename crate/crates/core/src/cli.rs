//! The `spir` command line.
//!
//! Exit status: `0` pass, `1` failed check or failed session, `2` usage
//! error. Every report echoes its configuration, goes to standard output as
//! a table, and with `--out` to a JSON file.

use std::ffi::OsString;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{self, display, Rational};
use crate::auditor::{self, SchemeVariant, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::field::FieldPrime;
use crate::net::{self, tcp, Client, DatabaseLink, DatabaseNode, TcpLink};
use crate::params::ProtocolParams;
use crate::randomness::DealerRecord;
use crate::schemes::{RetrievalRequest, SessionPlan};
use crate::store::MessageStore;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable overriding the default audit budget.
pub const BUDGET_ENV: &str = "SPIR_AUDIT_BUDGET";

#[derive(Parser, Debug)]
#[command(name = "spir", version, about = "Symmetric private information retrieval toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Capacity, thresholds and feasibility in exact rationals.
    Capacity(CapacityArgs),
    /// One in-process retrieval session.
    Run(RunArgs),
    /// Many sessions against in-process database nodes.
    Simulate(SimulateArgs),
    /// Exhaustive privacy and correctness audit.
    Audit(AuditArgs),
    /// Serve one database over TCP.
    Serve(ServeArgs),
    /// Retrieve one message from running servers.
    Client(ClientArgs),
    /// Write a store file and a dealer randomness file from a seed.
    Deal(DealArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ParamArgs {
    /// Number of databases N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of messages K.
    #[arg(long = "k", alias = "k-count")]
    pub k: Option<usize>,
    /// Equal message length in symbols.
    #[arg(long, conflicts_with = "lengths")]
    pub length: Option<usize>,
    /// Per-message lengths in symbols, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    /// Field size p (prime).
    #[arg(long, default_value_t = 2)]
    pub prime: u64,
    /// JSON parameter file `{"databases", "lengths", "prime"}` instead of flags.
    #[arg(long, conflicts_with_all = ["n", "k", "length", "lengths"])]
    pub params: Option<PathBuf>,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<ProtocolParams> {
        if let Some(path) = &self.params {
            let text = std::fs::read_to_string(path)?;
            return serde_json::from_str(&text).map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())));
        }
        let n = self.n.ok_or_else(|| Error::InvalidParams("--n is required".into()))?;
        let prime = FieldPrime::new(self.prime)?;
        match (&self.lengths, self.length) {
            (Some(lengths), _) => {
                if let Some(k) = self.k.filter(|&k| k != lengths.len()) {
                    return Err(Error::InvalidParams(format!(
                        "--k {k} contradicts {} entries in --lengths",
                        lengths.len()
                    )));
                }
                ProtocolParams::new(n, lengths.clone(), prime)
            }
            (None, Some(length)) => {
                let k = self.k.ok_or_else(|| Error::InvalidParams("--k is required with --length".into()))?;
                ProtocolParams::uniform(n, k, length, prime)
            }
            (None, None) => Err(Error::InvalidParams("give --length or --lengths".into())),
        }
    }
}

#[derive(Args, Debug)]
pub struct CapacityArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long = "k", alias = "k-count")]
    pub k: usize,
    /// Common randomness per message symbol, e.g. `1`, `1/4` or `0.25`.
    /// Omitted means "sufficient".
    #[arg(long)]
    pub rho: Option<String>,
    /// Also report the zero-error capacity at this finite length.
    #[arg(long)]
    pub length: Option<usize>,
    /// Also report the rate region for these relative sizes.
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// Desired message (1-based).
    #[arg(long, default_value_t = 1)]
    pub index: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub session: u64,
    /// Write the transcript as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 100)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write every transcript, one JSON document per line.
    #[arg(long)]
    pub transcripts_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    /// honest, no-mask, deterministic-coins, reused-mask or wrong-subtraction.
    #[arg(long, default_value = "honest")]
    pub sabotage: String,
    /// Maximum joint states per desired index.
    #[arg(long, env = BUDGET_ENV)]
    pub budget: Option<u128>,
    /// Monte-Carlo samples when the budget is exceeded.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// 0 picks a free port; the bound address is printed.
    #[arg(long, default_value_t = 0)]
    pub port: u16,
    /// This node's database index (1-based).
    #[arg(long)]
    pub node_index: usize,
    #[arg(long)]
    pub store: PathBuf,
    /// Dealer file with the common randomness of every session.
    #[arg(long)]
    pub randomness: PathBuf,
}

#[derive(Args, Debug)]
pub struct ClientArgs {
    /// Server addresses in database order, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub servers: Vec<String>,
    #[command(flatten)]
    pub params: ParamArgs,
    /// Desired message (1-based); defaults to the one the simulator draws
    /// for this seed and session.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub session: u64,
    #[arg(long, default_value_t = 5000)]
    pub timeout_ms: u64,
    /// Write the transcript as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DealArgs {
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub sessions: u64,
    #[arg(long)]
    pub store_out: PathBuf,
    #[arg(long)]
    pub randomness_out: PathBuf,
}

/// Parse `args` (program name first) and run. Reports go to `stdout`,
/// diagnostics to standard error.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_)
        | Error::NotPrime(_)
        | Error::PrimeTooLarge(_)
        | Error::IndexOutOfRange { .. }
        | Error::SymbolOutOfRange { .. } => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

pub fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Capacity(a) => capacity(a, stdout),
        Command::Run(a) => run(a, stdout),
        Command::Simulate(a) => simulate(a, stdout),
        Command::Audit(a) => audit(a, stdout),
        Command::Serve(a) => serve(a, stdout),
        Command::Client(a) => client(a, stdout),
        Command::Deal(a) => deal(a, stdout),
    }
}

/// Two-column key/value table.
struct Table(Vec<(String, String)>);

impl Table {
    fn new() -> Self {
        Table(Vec::new())
    }

    fn row(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    fn print(&self, out: &mut dyn Write) -> Result<()> {
        let width = self.0.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        for (k, v) in &self.0 {
            writeln!(out, "{k:<width$}  {v}")?;
        }
        Ok(())
    }
}

fn write_json(path: &Option<PathBuf>, value: &impl Serialize) -> Result<()> {
    if let Some(path) = path {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn rationals(rs: &[Rational]) -> String {
    rs.iter().map(display).collect::<Vec<_>>().join(", ")
}

fn params_echo(p: &ProtocolParams) -> Value {
    json!({ "databases": p.databases(), "lengths": p.lengths(), "prime": u64::from(p.prime()) })
}

/// Capacity-zero report for parameters no scheme can serve.
fn infeasible(params: &ProtocolParams, reason: &str, out_path: &Option<PathBuf>, out: &mut dyn Write) -> Result<i32> {
    let verdict = analysis::capacity_spir(params.databases(), params.messages(), &analysis::integer(1));
    let report = json!({ "config": params_echo(params), "status": "infeasible", "reason": reason, "verdict": verdict });
    Table::new()
        .row("config", params_echo(params))
        .row("status", "infeasible")
        .row("reason", reason)
        .row("capacity", display(&verdict.capacity))
        .print(out)?;
    write_json(out_path, &report)?;
    Ok(EXIT_PASS)
}

fn capacity(a: CapacityArgs, out: &mut dyn Write) -> Result<i32> {
    if a.n == 0 || a.k == 0 {
        return Err(Error::InvalidParams("N and K must be positive".into()));
    }
    let rho = match &a.rho {
        Some(text) => analysis::parse_rational(text)
            .filter(|r| *r >= Rational::from_integer(0.into()))
            .ok_or_else(|| Error::InvalidParams(format!("--rho {text:?} is not a non-negative rational")))?,
        // 1 meets the threshold 1/(N-1) for every N >= 2
        None => analysis::integer(1),
    };
    let spir = analysis::capacity_spir(a.n, a.k, &rho);
    let pir = analysis::capacity_pir(a.n, a.k);
    let mut t = Table::new();
    t.row("N", a.n).row("K", a.k).row("rho", display(&rho));
    t.row("regime", format!("{:?}", spir.regime));
    t.row("C_SPIR", display(&spir.capacity));
    t.row(
        "rho threshold",
        spir.rho_threshold.as_ref().map_or("none suffices".to_string(), display),
    );
    t.row("C_PIR", display(&pir));
    let mut report = json!({
        "config": { "n": a.n, "k": a.k, "rho": rho.to_string(), "length": a.length, "lengths": a.lengths },
        "spir": spir,
        "pir": pir.to_string(),
    });
    if let Some(length) = a.length {
        if length == 0 {
            return Err(Error::InvalidParams("--length must be positive".into()));
        }
        let finite = analysis::capacity_finite(a.n, a.k, length, &rho);
        t.row("C_finite", display(&finite.capacity));
        if a.n >= 2 {
            t.row("D_min", analysis::min_download(a.n, length));
        }
        report["finite"] = serde_json::to_value(&finite)?;
    }
    if let Some(lengths) = &a.lengths {
        if lengths.is_empty() || lengths.contains(&0) {
            return Err(Error::InvalidParams("--lengths must be positive".into()));
        }
        let region = analysis::region_bound(a.n, lengths);
        t.row("region caps", rationals(&region.caps));
        if let Some(d) = &region.normalized_download {
            t.row("D per unit", display(d));
        }
        report["region"] = serde_json::to_value(&region)?;
    }
    t.print(out)?;
    write_json(&a.out, &report)?;
    Ok(EXIT_PASS)
}

fn run(a: RunArgs, out: &mut dyn Write) -> Result<i32> {
    let params = a.params.resolve()?;
    if let Err(Error::Infeasible(reason)) = params.require_symmetric() {
        return infeasible(&params, &reason, &a.out, out);
    }
    let plan = SessionPlan::for_params(&params)?;
    let request = RetrievalRequest::new(a.index, params.messages())?;
    let (store, dealer) = net::deal(&params, a.seed, a.session + 1)?;
    let nodes = net::sim::spawn_nodes(&store, &dealer)?;
    let mut client = Client::new(net::sim::in_process_links(&nodes));
    let transcript = client.retrieve(&plan, request, net::session_coins(&plan, a.seed, a.session), a.session)?;
    let correct = transcript.decoded == store.message(a.index - 1);
    Table::new()
        .row("config", params_echo(&params))
        .row("plan", format!("{:?}", plan.kind))
        .row("index", a.index)
        .row("download D", transcript.ledger.total)
        .row("per database", format!("{:?}", transcript.ledger.per_database))
        .row("randomness", transcript.ledger.common_randomness)
        .row("decoded correctly", correct)
        .print(out)?;
    if let Some(path) = &a.out {
        std::fs::write(path, transcript.to_json())?;
    }
    Ok(if correct { EXIT_PASS } else { EXIT_FAIL })
}

fn transcripts_digest(texts: &[String]) -> String {
    let mut h = Sha256::new();
    for t in texts {
        h.update(t.as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let params = a.params.resolve()?;
    if let Err(Error::Infeasible(reason)) = params.require_symmetric() {
        return infeasible(&params, &reason, &a.out, out);
    }
    let (store, _) = net::deal(&params, a.seed, 0)?;
    let batch = net::simulate(&params, a.trials, a.seed)?;
    let correct = batch
        .transcripts
        .iter()
        .filter(|t| t.decoded == store.message(t.desired_index - 1))
        .count();
    let texts: Vec<String> = batch.transcripts.iter().map(|t| t.to_json()).collect();
    let served: u64 = batch.nodes.iter().map(|n| n.symbols_served).sum();
    let ledger_total: usize = batch.transcripts.iter().map(|t| t.ledger.total).sum();
    let rates = (!batch.transcripts.is_empty())
        .then(|| auditor::measure_rates(&batch.transcripts, &params))
        .transpose()?;
    let mut t = Table::new();
    t.row("config", params_echo(&params))
        .row("trials", a.trials)
        .row("seed", a.seed)
        .row("plan", format!("{:?}", batch.plan.kind))
        .row("correct", format!("{correct}/{}", a.trials))
        .row("D per session", batch.plan.download())
        .row("ledger D total", ledger_total)
        .row("wire answer symbols", batch.wire.total_answer_symbols())
        .row("node symbols served", served);
    if let Some(r) = &rates {
        t.row("rates", rationals(&r.per_message)).row("rho", display(&r.rho));
    }
    t.row("transcripts sha256", transcripts_digest(&texts));
    t.print(out)?;
    let report = json!({
        "config": { "params": params_echo(&params), "trials": a.trials, "seed": a.seed },
        "plan": batch.plan,
        "correct": correct,
        "download_per_session": batch.plan.download(),
        "ledger_download_total": ledger_total,
        "wire_answer_symbols": batch.wire.answer_symbols,
        "wire_frame_bytes_down": batch.wire.frame_bytes_down,
        "wire_frame_bytes_up": batch.wire.frame_bytes_up,
        "node_symbols_served": batch.nodes.iter().map(|n| n.symbols_served).collect::<Vec<_>>(),
        "rates": rates,
        "transcripts_sha256": transcripts_digest(&texts),
    });
    write_json(&a.out, &report)?;
    if let Some(path) = &a.transcripts_out {
        let mut body = String::new();
        for text in &texts {
            body.push_str(&serde_json::to_string(&serde_json::from_str::<Value>(text)?)?);
            body.push('\n');
        }
        std::fs::write(path, body)?;
    }
    let metered = ledger_total == batch.wire.total_answer_symbols() && served as usize == ledger_total;
    Ok(if correct as u64 == a.trials && metered { EXIT_PASS } else { EXIT_FAIL })
}

fn audit(a: AuditArgs, out: &mut dyn Write) -> Result<i32> {
    let params = a.params.resolve()?;
    let variant = SchemeVariant::parse(&a.sabotage).ok_or_else(|| {
        let names: Vec<_> = SchemeVariant::ALL.iter().map(|v| v.name()).collect();
        Error::InvalidParams(format!("unknown --sabotage {:?}; expected one of {}", a.sabotage, names.join(", ")))
    })?;
    if let Err(Error::Infeasible(reason)) = params.require_symmetric() {
        return infeasible(&params, &reason, &a.out, out);
    }
    let budget = a.budget.unwrap_or(DEFAULT_BUDGET);
    match auditor::audit(&params, variant, budget) {
        Ok(report) => {
            let leak = &report.db_leakage;
            Table::new()
                .row("config", serde_json::to_value(&report.config)?)
                .row("mode", report.mode)
                .row("states per index", report.states_per_index)
                .row("user_privacy_tv", display(report.user_privacy_tv()))
                .row(
                    "db_leakage_bits",
                    match &leak.exact_bits {
                        Some(exact) => display(exact),
                        None => format!("{:.6}", leak.bits),
                    },
                )
                .row("db_independent", leak.independent)
                .row("error_probability", display(&report.error_probability))
                .row("rates", rationals(&report.rates.per_message))
                .row("rho", display(&report.rates.rho))
                .row("download D", report.rates.download)
                .row("converse consistent", report.converse_consistent())
                .row("verdict", if report.passed() { "PASS" } else { "FAIL" })
                .print(out)?;
            write_json(&a.out, &report)?;
            Ok(if report.passed() { EXIT_PASS } else { EXIT_FAIL })
        }
        Err(Error::BudgetExceeded { required, budget }) => {
            eprintln!("{required} states per index exceed the budget of {budget}; sampling instead");
            let report = auditor::estimate(&params, variant, a.samples, a.seed, budget)?;
            Table::new()
                .row("config", serde_json::to_value(&report.config)?)
                .row("mode", report.mode)
                .row("required states", required)
                .row("samples", report.samples)
                .row("error rate", display(&report.error_rate))
                .row("view tv estimate", format!("{:.6}", report.view_tv_estimate))
                .row("verdict", if report.refuted() { "FAIL" } else { "NOT CERTIFIED" })
                .print(out)?;
            write_json(&a.out, &report)?;
            Ok(if report.refuted() { EXIT_FAIL } else { EXIT_PASS })
        }
        Err(e) => Err(e),
    }
}

fn serve(a: ServeArgs, out: &mut dyn Write) -> Result<i32> {
    let store = MessageStore::read_file(&a.store)?;
    let dealer = DealerRecord::read_file(&a.randomness)?;
    let node = Arc::new(DatabaseNode::from_dealer(a.node_index, store, &dealer)?);
    let listener = TcpListener::bind((a.host.as_str(), a.port))?;
    writeln!(out, "listening on {}", listener.local_addr()?)?;
    out.flush()?;
    tcp::serve_forever(listener, node)?;
    Ok(EXIT_PASS)
}

fn client(a: ClientArgs, out: &mut dyn Write) -> Result<i32> {
    let params = a.params.resolve()?;
    if a.servers.len() != params.databases() {
        return Err(Error::InvalidParams(format!(
            "{} servers given for N = {}",
            a.servers.len(),
            params.databases()
        )));
    }
    let plan = SessionPlan::for_params(&params)?;
    let index = a.index.unwrap_or_else(|| net::session_index(params.messages(), a.seed, a.session));
    let request = RetrievalRequest::new(index, params.messages())?;
    let timeout = Duration::from_millis(a.timeout_ms);
    let links = a
        .servers
        .iter()
        .map(|addr| {
            TcpLink::connect(addr.as_str(), timeout)
                .map(|l| Box::new(l) as Box<dyn DatabaseLink>)
                .map_err(|e| Error::Aborted(format!("{addr}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut client = Client::new(links);
    let transcript = client.retrieve(&plan, request, net::session_coins(&plan, a.seed, a.session), a.session)?;
    let wire = client.meter();
    Table::new()
        .row("config", params_echo(&params))
        .row("session", a.session)
        .row("index", index)
        .row("download D", transcript.ledger.total)
        .row("wire answer symbols", wire.total_answer_symbols())
        .row("wire bytes down", wire.frame_bytes_down.iter().sum::<usize>())
        .row("wire bytes up", wire.frame_bytes_up.iter().sum::<usize>())
        .print(out)?;
    if let Some(path) = &a.out {
        std::fs::write(path, transcript.to_json())?;
    }
    Ok(if wire.total_answer_symbols() == transcript.ledger.total { EXIT_PASS } else { EXIT_FAIL })
}

fn deal(a: DealArgs, out: &mut dyn Write) -> Result<i32> {
    let params = a.params.resolve()?;
    let (store, dealer) = net::deal(&params, a.seed, a.sessions)?;
    store.write_file(&a.store_out)?;
    dealer.write_file(&a.randomness_out)?;
    Table::new()
        .row("config", params_echo(&params))
        .row("seed", a.seed)
        .row("sessions", a.sessions)
        .row("store", show(&a.store_out))
        .row("randomness", show(&a.randomness_out))
        .print(out)?;
    Ok(EXIT_PASS)
}

fn show(path: &Path) -> String {
    path.display().to_string()
}
