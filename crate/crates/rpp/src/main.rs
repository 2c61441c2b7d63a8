use clap::Parser;
use rpp::harness::{self, ExperimentConfig, EXPERIMENTS};
use std::path::PathBuf;
use std::process::ExitCode;

/// Run an experiment, or `report` a manifest.
#[derive(Parser, Debug)]
#[command(name = "rpp", version, about)]
struct Cli {
    /// Experiment name, or `report`.
    experiment: String,
    /// JSON config; for `report`, the manifest path.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    n_paths: Option<u64>,
    #[arg(long)]
    n_fields: Option<u64>,
    /// Comma-separated ε schedule.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
}

fn apply_overrides(cfg: &mut ExperimentConfig, cli: &Cli) {
    let p = &mut cfg.params;
    macro_rules! set {
        ($($f:ident),*) => { $( if cli.$f.is_some() { p.$f = cli.$f.clone(); } )* };
    }
    set!(d, p, theta, gamma, a, t, dt, h, radius, delta, n_paths, n_fields, eps);
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
}

fn report(cli: &Cli) -> ExitCode {
    let path = cli.config.clone().unwrap_or_else(|| cli.out.clone().unwrap_or_else(|| PathBuf::from("results")).join("manifest.json"));
    match harness::report(&path) {
        Ok((text, warnings)) => {
            print!("{text}");
            for w in warnings {
                eprintln!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.experiment == "report" {
        return report(&cli);
    }
    if !EXPERIMENTS.contains(&cli.experiment.as_str()) {
        eprintln!("error: unknown experiment `{}`; available: {}", cli.experiment, EXPERIMENTS.join(", "));
        return ExitCode::from(1);
    }
    let mut cfg = match &cli.config {
        Some(path) => match ExperimentConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        },
        None => ExperimentConfig::new(&cli.experiment),
    };
    if cfg.experiment != cli.experiment {
        eprintln!("error: config is for `{}`, not `{}`", cfg.experiment, cli.experiment);
        return ExitCode::from(1);
    }
    apply_overrides(&mut cfg, &cli);
    match harness::run(&cfg, cli.threads) {
        Ok(m) => {
            for c in &m.checks {
                let flag = c.flag.as_deref().map(|f| format!(" [{f}]")).unwrap_or_default();
                println!("{:<13} {}{flag}", format!("{:?}", c.verdict).to_uppercase(), c.name);
            }
            ExitCode::from(m.verdict.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
