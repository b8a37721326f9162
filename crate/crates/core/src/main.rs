use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hydrosplit::analysis::energy_report;
use hydrosplit::config::RunConfig;
use hydrosplit::experiments::{
    build, convergence, simulate, stability, verify_oracle, ConvergenceTable, SeriesWriter, SimulationOutcome,
    StabilityReport,
};
use hydrosplit::splitting::{CouplingMode, Observer};
use hydrosplit::{Error, Result};

#[derive(Parser)]
#[command(name = "hydrosplit", version, about = "Split Stokes / lumped-circuit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one example to periodicity and write its time series.
    Simulate(Common),
    /// Error table and fitted slopes over several time steps.
    Convergence {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.005, 0.001])]
        dts: Vec<f64>,
    },
    /// Energy monotonicity of unforced runs.
    Stability {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 1.0, 10.0])]
        dts: Vec<f64>,
        #[arg(long, default_value_t = 200)]
        steps: usize,
    },
    /// Residuals of the exact solution against the discrete system.
    VerifyOracle(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    example: Option<u32>,
    #[arg(long)]
    nonlinear: bool,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    sub: Option<usize>,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    max_periods: Option<usize>,
    #[arg(long)]
    eps_per: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parameter override, e.g. `--set R11_1=20`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.example {
            cfg.example = v;
        }
        cfg.nonlinear |= self.nonlinear;
        if let Some(v) = self.dt {
            cfg.dt = v;
        }
        if self.sub.is_some() {
            cfg.substeps = self.sub;
        }
        if let Some(v) = self.nx {
            cfg.nx = v;
        }
        if let Some(v) = self.ny {
            cfg.ny = v;
        }
        if let Some(v) = self.max_periods {
            cfg.max_periods = v;
        }
        if let Some(v) = self.eps_per {
            cfg.eps_per = v;
        }
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        cfg.apply_overrides(self.overrides.iter().map(String::as_str))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_output(cfg: &RunConfig, name: &str, text: &str) -> Result<()> {
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(name), text)?;
    }
    Ok(())
}

fn header(doc: &mut String, command: &str, cfg: &RunConfig) {
    let _ = writeln!(doc, "[run]");
    let _ = writeln!(doc, "command = {command}");
    let _ = writeln!(doc, "example = {}", cfg.example);
    let _ = writeln!(doc, "nonlinear = {}", cfg.nonlinear);
    let _ = writeln!(doc, "mesh = {}x{}", cfg.nx, cfg.ny);
    for (k, v) in &cfg.set {
        let _ = writeln!(doc, "set.{k} = {v}");
    }
}

fn simulation_summary(cfg: &RunConfig, out: &SimulationOutcome) -> String {
    let mut doc = String::new();
    header(&mut doc, "simulate", cfg);
    let _ = writeln!(doc, "dt = {}", out.dt);
    let _ = writeln!(doc, "substeps = {}", cfg.substeps().unwrap_or(0));
    let _ = writeln!(doc, "steps_per_period = {}", out.steps_per_period);
    let _ = writeln!(doc, "\n[result]");
    let _ = writeln!(doc, "steps = {}", out.steps);
    let _ = writeln!(doc, "periods = {}", out.periods);
    let _ = writeln!(doc, "converged = {}", out.converged);
    match out.final_gap {
        Some(g) => writeln!(doc, "final_gap = {g:.6e}"),
        None => writeln!(doc, "final_gap = none"),
    }
    .ok();
    let _ = writeln!(doc, "eps_per = {:e}", cfg.eps_per);
    let _ = writeln!(doc, "max_step1_identity_residual = {:.3e}", out.max_identity_residual);
    let e = &out.initial_energy;
    let _ = writeln!(doc, "initial_E_omega = {:.9e}", e.e_omega);
    let _ = writeln!(doc, "initial_E_ups = {:.9e}", e.e_ups);
    let e = &out.final_energy;
    let _ = writeln!(doc, "final_E_omega = {:.9e}", e.e_omega);
    let _ = writeln!(doc, "final_E_ups = {:.9e}", e.e_ups);
    if !out.history.is_empty() {
        let _ = writeln!(doc, "\n[periods]");
        let _ = writeln!(doc, "{:>6} {:>13} {:>13} {:>13} {:>13}", "period", "gap", "Err_v", "Err_p", "Err_y");
        for s in &out.history {
            let gap = s.gap.map_or("-".to_string(), |g| format!("{g:.6e}"));
            if let Some(er) = &s.errors {
                let _ = writeln!(
                    doc,
                    "{:>6} {:>13} {:>13.6e} {:>13.6e} {:>13.6e}",
                    s.period, gap, er.err_v, er.err_p, er.err_y
                );
            }
        }
        let _ = writeln!(doc, "\n[interface peak errors, last period]");
        let _ = writeln!(doc, "{:>10} {:>13} {:>13}", "interface", "P", "Q");
        for p in out.last_peaks() {
            let _ = writeln!(doc, "{:>10} {:>13.6e} {:>13.6e}", p.id.label(), p.pressure, p.flow);
        }
    }
    doc
}

fn convergence_summary(cfg: &RunConfig, table: &ConvergenceTable) -> String {
    let mut doc = String::new();
    header(&mut doc, "convergence", cfg);
    let _ = writeln!(doc, "\n[errors]");
    let _ = writeln!(
        doc,
        "{:>10} {:>8} {:>10} {:>13} {:>13} {:>13}",
        "dt", "periods", "converged", "Err_v", "Err_p", "Err_y"
    );
    for r in &table.rows {
        let _ = writeln!(
            doc,
            "{:>10} {:>8} {:>10} {:>13.6e} {:>13.6e} {:>13.6e}",
            r.dt, r.periods, r.converged, r.errors.err_v, r.errors.err_p, r.errors.err_y
        );
    }
    if let Some([v, p, y]) = table.slopes {
        let _ = writeln!(doc, "\n[slopes]");
        let _ = writeln!(doc, "Err_v = {v:.4}");
        let _ = writeln!(doc, "Err_p = {p:.4}");
        let _ = writeln!(doc, "Err_y = {y:.4}");
        let _ = writeln!(doc, "strictly_decreasing = {}", table.strictly_decreasing());
    }
    doc
}

fn stability_summary(cfg: &RunConfig, report: &StabilityReport) -> String {
    let mut doc = String::new();
    header(&mut doc, "stability", cfg);
    let _ = writeln!(doc, "\n[energy]");
    let _ = writeln!(
        doc,
        "{:>8} {:>6} {:>13} {:>13} {:>13} {:>11}  status",
        "dt", "steps", "E0", "max_increase", "final", "identity"
    );
    for r in &report.rows {
        let _ = writeln!(
            doc,
            "{:>8} {:>6} {:>13.6e} {:>13.6e} {:>13.6e} {:>11.3e}  {}",
            r.dt,
            r.steps,
            r.initial_energy,
            r.max_increase,
            r.final_energy,
            r.max_identity_residual,
            if r.monotone() { "PASS" } else { "FAIL" }
        );
    }
    let _ = writeln!(doc, "overall: {}", if report.passed() { "PASS" } else { "FAIL" });
    doc
}

fn series_path(dir: &Path) -> PathBuf {
    dir.join("series.csv")
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(common) => {
            let cfg = common.resolve()?;
            let problem = build(&cfg)?;
            let mut writer = match &cfg.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    let file = BufWriter::new(fs::File::create(series_path(dir))?);
                    let mut w = SeriesWriter::new(&problem.system, file)?;
                    let s0 = problem.exact_state(0.0)?;
                    w.write(&s0, &energy_report(&problem.system, &s0))?;
                    Some(w)
                }
                None => None,
            };
            let outcome = {
                let mut extra: Vec<&mut dyn Observer> = Vec::new();
                if let Some(w) = writer.as_mut() {
                    extra.push(w);
                }
                simulate(&problem, &cfg, &mut extra)?
            };
            if let Some(w) = writer.as_mut() {
                w.flush()?;
            }
            let text = simulation_summary(&cfg, &outcome);
            print!("{text}");
            write_output(&cfg, "summary.txt", &text)?;
            if cfg.max_periods > 0 && !outcome.converged {
                eprintln!(
                    "periodicity not reached within {} periods (eps_per = {:e})",
                    cfg.max_periods, cfg.eps_per
                );
                return Ok(false);
            }
            Ok(true)
        }
        Command::Convergence { common, dts } => {
            let cfg = common.resolve()?;
            let table = convergence(&cfg, &dts)?;
            let text = convergence_summary(&cfg, &table);
            print!("{text}");
            write_output(&cfg, "convergence.txt", &text)?;
            Ok(table.rows.iter().all(|r| r.converged))
        }
        Command::Stability { common, dts, steps } => {
            let cfg = common.resolve()?;
            let report = stability(&cfg, &dts, steps, CouplingMode::Implicit)?;
            let text = stability_summary(&cfg, &report);
            print!("{text}");
            write_output(&cfg, "stability.txt", &text)?;
            Ok(report.passed())
        }
        Command::VerifyOracle(common) => {
            let cfg = common.resolve()?;
            let report = verify_oracle(&cfg)?;
            let mut text = String::new();
            header(&mut text, "verify-oracle", &cfg);
            let _ = writeln!(text, "\n[residuals]\n{report}");
            print!("{text}");
            write_output(&cfg, "verify.txt", &text)?;
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(match e {
                Error::Config(_) | Error::InvalidArgument(_) => 2,
                _ => 1,
            })
        }
    }
}
