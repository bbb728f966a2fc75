//! `cenizk`: run protocol sessions, single protocol steps, experiments and
//! attacks from the command line.
//!
//! Exit codes: 0 when every verdict is as expected, 1 on a protocol
//! rejection, 2 on a usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use cenizk::harness::{run_experiment, run_session_against, ExperimentName, ProtocolId, SessionParams, Transcript};
use cenizk::hbg::HbgMode;
use cenizk::hidden_bits::HbInstance;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "cenizk", version, about = "Certified-everlasting NIZK protocol laboratory")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Protocol: epr, crs or strawman.
    #[arg(long, global = true, default_value = "epr")]
    protocol: ProtocolId,
    /// Graph size for the default n-cycle statement.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// EPR block width, or qubits per strawman block.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Hidden-bits repetitions (EPR) or rounds (strawman).
    #[arg(long, global = true)]
    reps: Option<usize>,
    /// Security parameter of the CRS protocol and the deletion experiments.
    #[arg(long, global = true)]
    lambda: Option<usize>,
    /// Hidden-bits generator: `dealer` or `naor:<seed bits>`.
    #[arg(long, global = true)]
    hbg: Option<String>,
    /// Statement graph in adjacency-list format (first line n, then `u v` edges).
    #[arg(long, global = true)]
    graph: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; transcripts are written in binary, reports as JSON.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the setup messages of the seeded session.
    Setup,
    /// Print the proof message of the seeded session.
    Prove,
    /// Run the seeded session through verification and report the verdict.
    Verify {
        /// Verify against this graph instead of the proven statement.
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Print the deletion certificate of the seeded session.
    Delete,
    /// Run the seeded session through certification and report the verdict.
    Certify,
    /// Run a full honest session and print its transcript.
    RunSession {
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Run a named experiment and print its report.
    RunExperiment {
        name: ExperimentName,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
    /// Run a named attack experiment and print its report.
    RunAttack {
        name: ExperimentName,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
    /// Time honest sessions.
    Bench {
        #[arg(long, default_value_t = 10)]
        sessions: u64,
    },
    /// Print the text export of a binary transcript file.
    Inspect { path: PathBuf },
}

enum Outcome {
    Ok,
    Rejected,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Rejected) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_hbg(s: &str) -> anyhow::Result<HbgMode> {
    if s == "dealer" {
        return Ok(HbgMode::Dealer);
    }
    if let Some(bits) = s.strip_prefix("naor:") {
        let seed_len: u32 = bits.parse().with_context(|| format!("bad Naor seed length {bits:?}"))?;
        return Ok(HbgMode::naor(seed_len));
    }
    bail!("unknown hbg {s:?}; expected `dealer` or `naor:<bits>`")
}

fn read_graph(path: &Path) -> anyhow::Result<HbInstance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text.parse()?)
}

fn session_params(g: &Global) -> anyhow::Result<SessionParams> {
    let mut p = SessionParams::defaults(g.protocol);
    if let Some(n) = g.n {
        p.n = n;
    }
    if let Some(k) = g.k {
        p.k = k;
    }
    if let Some(r) = g.reps {
        p.reps = r;
    }
    if let Some(l) = g.lambda {
        p.lambda = l;
    }
    if let Some(h) = &g.hbg {
        p.hbg = parse_hbg(h)?;
    }
    if let Some(path) = &g.graph {
        p.graph = Some(read_graph(path)?);
    }
    Ok(p)
}

fn emit(g: &Global, text: &str, bytes: Option<&[u8]>) -> anyhow::Result<()> {
    match (&g.output, bytes) {
        (Some(path), Some(b)) => fs::write(path, b).with_context(|| format!("writing {}", path.display()))?,
        (Some(path), None) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        _ => {}
    }
    print!("{text}");
    Ok(())
}

fn session(g: &Global, against: Option<&PathBuf>) -> anyhow::Result<Transcript> {
    let p = session_params(g)?;
    let claimed = against.map(|a| read_graph(a)).transpose()?;
    Ok(run_session_against(&p, g.seed, claimed.as_ref())?)
}

fn hex(b: &[u8]) -> String {
    b.iter().map(|x| format!("{x:02x}")).collect()
}

/// Prints the messages a party sent at `step` (prefix match on the step name).
fn show_messages(g: &Global, t: &Transcript, step: &str) -> anyhow::Result<Outcome> {
    let mut text = String::new();
    let mut raw = Vec::new();
    for m in t.messages.iter().filter(|m| m.step.starts_with(step)) {
        text.push_str(&format!("{} {} {} bytes", m.from.name(), m.step, m.payload.len()));
        if let Some(h) = m.handle {
            text.push_str(&format!(" handle={}:{}q", h.id, h.qubits));
        }
        text.push('\n');
        raw.extend_from_slice(&m.payload);
    }
    if g.output.is_none() {
        text.push_str(&hex(&raw[..raw.len().min(64)]));
        text.push('\n');
    }
    emit(g, &text, Some(&raw))?;
    Ok(Outcome::Ok)
}

fn show_verdict(g: &Global, t: &Transcript, step: &str) -> anyhow::Result<Outcome> {
    let ok = t.verdict_for(step).context("session recorded no verdict")?;
    emit(g, &format!("{step}: {}\n", if ok { "accept" } else { "reject" }), None)?;
    Ok(if ok { Outcome::Ok } else { Outcome::Rejected })
}

fn report(g: &Global, name: ExperimentName, trials: u64) -> anyhow::Result<Outcome> {
    let r = run_experiment(name, trials, &session_params(g)?, g.seed)?;
    let json = serde_json::to_string_pretty(&r)? + "\n";
    emit(g, &json, None)?;
    Ok(Outcome::Ok)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Setup => show_messages(g, &session(g, None)?, "crs"),
        Command::Prove => show_messages(g, &session(g, None)?, "prove"),
        Command::Verify { against } => show_verdict(g, &session(g, against.as_ref())?, "verify"),
        Command::Delete => show_messages(g, &session(g, None)?, "delete"),
        Command::Certify => show_verdict(g, &session(g, None)?, "cert"),
        Command::RunSession { against } => {
            let t = session(g, against.as_ref())?;
            emit(g, &t.to_text(), Some(&t.to_bytes()))?;
            Ok(if t.all_accepted() { Outcome::Ok } else { Outcome::Rejected })
        }
        Command::RunExperiment { name, trials } => report(g, *name, *trials),
        Command::RunAttack { name, trials } => {
            if !name.is_attack() {
                bail!("{} is not an attack experiment", name.name());
            }
            report(g, *name, *trials)
        }
        Command::Bench { sessions } => {
            let p = session_params(g)?;
            let mut times = Vec::with_capacity(*sessions as usize);
            let mut rejected = 0;
            for i in 0..*sessions {
                let start = Instant::now();
                let t = run_session_against(&p, g.seed.wrapping_add(i), None)?;
                times.push(start.elapsed().as_secs_f64());
                rejected += !t.all_accepted() as u64;
            }
            let mean = if times.is_empty() { 0.0 } else { times.iter().sum::<f64>() / times.len() as f64 };
            let min = times.iter().copied().fold(f64::INFINITY, f64::min);
            let json = serde_json::json!({
                "protocol": g.protocol.name(),
                "sessions": sessions,
                "rejected": rejected,
                "mean_secs": mean,
                "min_secs": if times.is_empty() { 0.0 } else { min },
            });
            emit(g, &(serde_json::to_string_pretty(&json)? + "\n"), None)?;
            Ok(if rejected == 0 { Outcome::Ok } else { Outcome::Rejected })
        }
        Command::Inspect { path } => {
            let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let t = Transcript::from_bytes(&bytes)?;
            print!("{}", t.to_text());
            Ok(Outcome::Ok)
        }
    }
}
