//! `renewal-lab <task> --spec <file> --out <dir>`: one job per process.

mod fail;
mod job;
mod output;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use fail::Fail;
use job::{decode, JobSpec};
use output::{sha256_hex, Artifacts};
use tasks::Context;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    RenewalScan,
    SmallNTable,
    Criteria,
    LldCheck,
    Ladder,
    Infdiv,
    Probe,
}

impl Task {
    fn name(self) -> &'static str {
        match self {
            Task::RenewalScan => "renewal-scan",
            Task::SmallNTable => "small-n-table",
            Task::Criteria => "criteria",
            Task::LldCheck => "lld-check",
            Task::Ladder => "ladder",
            Task::Infdiv => "infdiv",
            Task::Probe => "probe",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "renewal-lab", version, about = "Renewal theorem laboratory for heavy-tailed lattice walks")]
struct Cli {
    #[arg(value_enum)]
    task: Task,
    /// JSON job specification.
    #[arg(long)]
    spec: PathBuf,
    /// Output directory for artifacts and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// Seed for stochastic tasks; overrides the spec.
    #[arg(long)]
    seed: Option<u64>,
    /// Memory budget for convolution windows.
    #[arg(long)]
    budget_mb: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

fn run(cli: &Cli) -> Result<(), Fail> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(Fail::invalid("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Fail::invalid("threads", &e.to_string()))?;
    }
    if let Some(mb) = cli.budget_mb {
        if !(mb > 0.0) {
            return Err(Fail::invalid("budget_mb", "must be positive"));
        }
    }
    let bytes = std::fs::read(&cli.spec).map_err(|e| Fail::io("spec", e))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| Fail::invalid("spec", &e.to_string()))?;
    let job: JobSpec = decode(&value, "spec")?;
    if let Some(t) = &job.task {
        if t != cli.task.name() {
            return Err(Fail::invalid("task", &format!("spec names `{t}` but `{}` was requested", cli.task.name())));
        }
    }
    let dist = job.distribution.build("distribution")?;
    let ctx = Context {
        job: &job,
        dist,
        seed: cli.seed.or(job.seed),
        budget_mb: cli.budget_mb,
    };
    let mut out = Artifacts::create(cli.out.clone())?;
    match cli.task {
        Task::RenewalScan => tasks::renewal(&ctx, &mut out)?,
        Task::SmallNTable => tasks::small_n(&ctx, &mut out)?,
        Task::Criteria => tasks::criteria(&ctx, &mut out)?,
        Task::LldCheck => tasks::lld(&ctx, &mut out)?,
        Task::Ladder => tasks::ladder(&ctx, &mut out)?,
        Task::Infdiv => tasks::infdiv(&ctx, &mut out)?,
        Task::Probe => tasks::probe(&ctx, &mut out)?,
    }
    let stochastic = matches!(cli.task, Task::Ladder | Task::Infdiv | Task::Probe);
    out.finish(cli.task.name(), sha256_hex(&bytes), if stochastic { ctx.seed } else { None })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.code)
        }
    }
}
