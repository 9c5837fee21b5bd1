use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use stc_cli::{parse_config_value, run_experiment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Job {
    Construct,
    Verify,
    Waterfill,
    Udm,
    Outage,
    Simulate,
}

impl Job {
    fn name(self) -> &'static str {
        match self {
            Job::Construct => "construct",
            Job::Verify => "verify",
            Job::Waterfill => "waterfill",
            Job::Udm => "udm",
            Job::Outage => "outage",
            Job::Simulate => "simulate",
        }
    }
}

/// Space-time code construction, verification and simulation jobs.
#[derive(Debug, Parser)]
#[command(name = "stc", version)]
struct Args {
    job: Job,
    /// JSON job description.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread cap.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(args: &Args) -> Result<u8, String> {
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| format!("thread pool: {e}"))?;
    }
    let text = std::fs::read_to_string(&args.config).map_err(|e| format!("reading {}: {e}", args.config.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: malformed JSON: {e}", args.config.display()))?;
    let obj = value.as_object_mut().ok_or("config must be a JSON object")?;
    match obj.get("job").and_then(|j| j.as_str()) {
        Some(j) if j == args.job.name() => {}
        Some(j) => return Err(format!("config describes a `{j}` job, not `{}`", args.job.name())),
        None => {
            obj.insert("job".into(), args.job.name().into());
        }
    }
    if let Some(seed) = args.seed {
        obj.insert("seed".into(), seed.into());
    }
    let config = parse_config_value(value).map_err(|e| e.to_string())?;
    let manifest = run_experiment(&config, &args.out).map_err(|e| e.to_string())?;
    println!(
        "{} {}: {} ({})",
        manifest.job,
        &manifest.config_hash[..12],
        serde_json::to_value(manifest.status).expect("status").as_str().unwrap_or(""),
        args.out.display()
    );
    Ok(manifest.status.exit_code() as u8)
}
