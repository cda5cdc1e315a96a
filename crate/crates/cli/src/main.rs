//! `splitflow` experiment runner.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgMatches};
use splitflow::experiments::{
    run_convergence, run_energy, run_order_reduction, run_validate, write_convergence_csv, write_energy_csv,
    write_probe_csv, write_validation_csv, Command, ExperimentConfig,
};
use splitflow::Error;

enum Failure {
    Suite(String),
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

fn subcommand(name: &'static str, about: &'static str) -> clap::Command {
    let mut cmd = clap::Command::new(name).about(about).arg(
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .help("Flat key = value file; flags override its values"),
    );
    for key in ExperimentConfig::KEYS {
        cmd = cmd.arg(Arg::new(key).long(key).value_name("VALUE").allow_negative_numbers(true));
    }
    cmd
}

fn cli() -> clap::Command {
    clap::Command::new("splitflow")
        .about("Spectral splitting experiments for Gross-Pitaevskii type equations")
        .subcommand_required(true)
        .subcommand(subcommand(
            "convergence",
            "Global error against step size for each method",
        ))
        .subcommand(subcommand("energy", "Long-time energy record"))
        .subcommand(subcommand("validate", "Exact-solution error and invariant checks"))
        .subcommand(subcommand(
            "order-reduction",
            "Scalar probe of complex-coefficient order reduction",
        ))
}

fn build_config(command: Command, m: &ArgMatches) -> Result<ExperimentConfig, Failure> {
    let mut cfg = ExperimentConfig::default();
    if command == Command::Validate {
        // The exact solution only exists for the linear problem.
        cfg.theta = 0.0;
    }
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{path}: {e}")))?;
        cfg.apply_text(&text)?;
    }
    for key in ExperimentConfig::KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate(command)?;
    Ok(cfg)
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            Box::new(BufWriter::new(f))
        }
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn method_path(base: &Path, method: &str) -> PathBuf {
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let ext = base
        .extension()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    base.with_file_name(format!("{stem}.{method}.{ext}"))
}

fn run(command: Command, cfg: &ExperimentConfig) -> Result<(), Failure> {
    let out = cfg.output.as_deref();
    match command {
        Command::Convergence => {
            let report = run_convergence(cfg)?;
            let mut w = sink(out)?;
            write_convergence_csv(&report, &mut w)?;
            w.flush()?;
            for s in &report.methods {
                let unstable = s.unstable_count();
                let order = s.fitted_order.map_or("n/a".to_string(), |p| format!("{p:.3}"));
                eprintln!("{:<16} slope {order:>6}  unstable {unstable}", s.method.as_str());
            }
        }
        Command::Energy => {
            let runs = run_energy(cfg)?;
            match out {
                Some(p) if runs.len() > 1 => {
                    for r in &runs {
                        let mut w = sink(Some(&method_path(p, r.method.as_str())))?;
                        write_energy_csv(r, &mut w)?;
                        w.flush()?;
                    }
                }
                _ => {
                    let mut w = sink(out)?;
                    for r in &runs {
                        write_energy_csv(r, &mut w)?;
                    }
                    w.flush()?;
                }
            }
            for r in &runs {
                eprintln!(
                    "{:<16} max deviation {:.3e}  drift-free {}  hamiltonian deviation {:.3e}",
                    r.method.as_str(),
                    r.series.max_deviation(),
                    r.series.is_drift_free(),
                    r.hamiltonian.max_deviation()
                );
            }
        }
        Command::Validate => {
            let report = run_validate(cfg)?;
            let mut w = sink(out)?;
            write_validation_csv(&report, &mut w)?;
            w.flush()?;
            let failed = report.failed();
            if !failed.is_empty() {
                let names: Vec<String> = failed
                    .iter()
                    .map(|c| format!("{} ({:e} >= {:e})", c.name, c.value, c.tolerance))
                    .collect();
                return Err(Failure::Suite(names.join(", ")));
            }
        }
        Command::OrderReduction => {
            let report = run_order_reduction(cfg)?;
            let mut w = sink(out)?;
            write_probe_csv(&report, &mut w)?;
            w.flush()?;
            eprintln!(
                "local slope {:.3}  global slope {:.3}",
                report.local_slope, report.global_slope
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let result = name
        .parse::<Command>()
        .map_err(Failure::from)
        .and_then(|command| build_config(command, sub).and_then(|cfg| run(command, &cfg)));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Suite(msg)) => {
            eprintln!("failed invariants: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
