use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expander_pruning::harness::{self, AdversaryKind, Checks, Experiment, GraphKind, HarnessError, PrunerKind};
use expander_pruning::preset::PresetName;

#[derive(Parser)]
#[command(name = "pruning", about = "Run and verify decremental expander pruning experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a generated graph in the text format.
    Generate {
        /// complete:N, hypercube:D, random_regular:N:D or barbell:A:B:BRIDGE
        kind: GraphKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// output file, stdout if absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment and write events.jsonl, summary.csv, experiment.json and graph.txt.
    Run(RunArgs),
    /// Replay a run directory and check the log.
    Verify {
        /// directory written by `run`
        dir: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// graph file: a line `n m`, then `u v` per edge
    #[arg(long, conflicts_with = "generate", required_unless_present = "generate")]
    graph: Option<PathBuf>,
    /// generator, e.g. hypercube:4 (random_regular uses --seed)
    #[arg(long)]
    generate: Option<GraphKind>,
    /// conductance as NUM/DEN
    #[arg(long, value_parser = harness::parse_rational)]
    phi: expander_pruning::params::Rational,
    #[arg(long, value_enum, default_value_t = PresetName::Desk)]
    preset: PresetName,
    #[arg(long, value_enum, default_value_t = AdversaryKind::Random)]
    adversary: AdversaryKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// defaults to the deletion budget
    #[arg(long)]
    deletions: Option<u64>,
    #[arg(long, value_enum, default_value_t = PrunerKind::Worstcase)]
    pruner: PrunerKind,
    #[arg(long, value_enum, default_value_t = Checks::CertEveryStep)]
    checks: Checks,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode, HarnessError> {
    match Cli::parse().cmd {
        Cmd::Generate { kind, seed, out } => {
            let g = harness::generate(kind, seed)?;
            match out {
                Some(p) => harness::write_graph(&g, BufWriter::new(File::create(p)?))?,
                None => match harness::write_graph(&g, std::io::stdout().lock()) {
                    Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                    r => r?,
                },
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run(a) => {
            let (g, name) = match (&a.graph, a.generate) {
                (Some(p), _) => (
                    harness::read_graph(BufReader::new(File::open(p)?))?,
                    p.display().to_string(),
                ),
                (None, Some(kind)) => (harness::generate(kind, a.seed)?, kind.to_string()),
                (None, None) => unreachable!("clap requires one graph source"),
            };
            let mut exp = Experiment {
                graph: name,
                phi: a.phi,
                preset: a.preset,
                adversary: a.adversary,
                seed: a.seed,
                max_deletions: 0,
                pruner: a.pruner,
                checks: a.checks,
            };
            exp.max_deletions = match a.deletions {
                Some(d) => d,
                None => exp.limits(&g)?.deletion_budget(),
            };
            let out = harness::run(&exp, &g)?;
            harness::write_outputs(&out, &g, &a.out)?;
            let s = &out.summary;
            println!(
                "{} deletions, {} pruned, max recourse {} (R {}), max op_count {} (W {}), status {}",
                s.deletions, s.pruned_total, s.max_recourse, s.recourse_budget, s.max_op_count, s.work_budget, s.status
            );
            Ok(if s.status == "ok" {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Cmd::Verify { dir } => {
            let exp: Experiment = serde_json::from_reader(BufReader::new(File::open(dir.join("experiment.json"))?))?;
            let g = harness::read_graph(BufReader::new(File::open(dir.join("graph.txt"))?))?;
            let events = harness::read_events(BufReader::new(File::open(dir.join("events.jsonl"))?))?;
            let report = harness::verify(&exp, &g, &events)?;
            for f in &report.failures {
                println!("FAIL {f}");
            }
            println!(
                "{} events checked, {}",
                report.checked,
                if report.pass() { "pass" } else { "fail" }
            );
            Ok(if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}
