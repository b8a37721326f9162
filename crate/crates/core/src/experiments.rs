//! Experiment drivers: simulation to periodicity, time-step convergence,
//! energy stability and oracle verification.

use std::io::Write;
use std::sync::Arc;

use crate::analysis::{convergence_rate, energy_report, EnergyReport, ErrorReport, InterfacePeakError, PeriodMonitor, PeriodSummary};
use crate::config::{steps_per_period, RunConfig};
use crate::error::{Error, Result};
use crate::problems::{build_problem, Forcing, Problem};
use crate::splitting::{CoupledState, CoupledSystem, CouplingMode, Observer, StepConfig, StepRecord, Stepper};
use crate::verify::{parameter_row, sample_times, verify_exact, ResidualReport};

/// Writes one CSV row per snapshot: time, interface traces, circuit states
/// and energies.
pub struct SeriesWriter<W: Write> {
    out: csv::Writer<W>,
}

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

impl<W: Write> SeriesWriter<W> {
    pub fn new(system: &CoupledSystem, sink: W) -> Result<Self> {
        let mut out = csv::Writer::from_writer(sink);
        let mut header = vec!["t".to_string()];
        for b in &system.bindings {
            let l = b.id.label();
            header.extend([format!("P_{l}"), format!("Q_{l}"), format!("pi_{l}")]);
        }
        for (m, c) in system.circuits.iter().enumerate() {
            for s in c.state_labels() {
                header.push(format!("y{}_{s}", m + 1));
            }
        }
        header.extend(["E_omega", "E_ups", "D_omega", "D_rc", "U_ups"].map(String::from));
        out.write_record(&header)?;
        Ok(Self { out })
    }

    pub fn write(&mut self, state: &CoupledState, energy: &EnergyReport) -> Result<()> {
        let mut row = vec![fmt(state.t)];
        for s in &state.interfaces {
            row.extend([fmt(s.pressure), fmt(s.flow), fmt(s.node_pressure)]);
        }
        for y in &state.circuits {
            row.extend(y.iter().map(|v| fmt(*v)));
        }
        row.extend([energy.e_omega, energy.e_ups, energy.d_omega, energy.d_rc, energy.u_ups].map(fmt));
        self.out.write_record(&row)?;
        Ok(())
    }

    pub fn flush(&mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

impl<W: Write> Observer for SeriesWriter<W> {
    fn observe(&mut self, record: &StepRecord, state: &CoupledState) -> Result<()> {
        self.write(state, &record.energy)
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub dt: f64,
    pub steps_per_period: usize,
    pub steps: usize,
    pub periods: usize,
    pub converged: bool,
    pub final_gap: Option<f64>,
    pub initial_energy: EnergyReport,
    pub final_energy: EnergyReport,
    /// Largest relative residual of the Step-1 energy balance.
    pub max_identity_residual: f64,
    pub history: Vec<PeriodSummary>,
    pub final_state: CoupledState,
}

impl SimulationOutcome {
    pub fn last_errors(&self) -> Option<ErrorReport> {
        self.history.last().and_then(|s| s.errors)
    }

    pub fn last_peaks(&self) -> &[InterfacePeakError] {
        self.history.last().map_or(&[], |s| &s.peaks)
    }
}

/// Builds the problem of `cfg` with its exact loads.
pub fn build(cfg: &RunConfig) -> Result<Problem> {
    cfg.validate()?;
    build_problem(&cfg.problem_spec(Forcing::Exact)?)
}

/// Runs from the exact initial state until two consecutive periods differ by
/// less than `eps_per` or `max_periods` periods have been computed.
pub fn simulate(problem: &Problem, cfg: &RunConfig, extra: &mut [&mut dyn Observer]) -> Result<SimulationOutcome> {
    let dt = cfg.dt;
    let nt = steps_per_period(problem.period(), dt)?;
    let system = &problem.system;
    let stepper = Stepper::new(Arc::clone(system), StepConfig::new(dt, cfg.substeps()?)?)?;
    let mut state = problem.exact_state(0.0)?;
    let initial_energy = energy_report(system, &state);
    let mut monitor = PeriodMonitor::new(system, Some(&problem.exact), nt, dt)?;
    monitor.record(&state)?;
    let mut converged = false;
    let mut final_gap = None;
    let mut identity: f64 = 0.0;
    let mut steps = 0;
    let mut energy = initial_energy;
    for step in 1..=cfg.max_periods * nt {
        let (next, record) = stepper.advance(&state, step)?;
        identity = identity.max(record.step1_balance.relative_residual());
        for obs in extra.iter_mut() {
            obs.observe(&record, &next)?;
        }
        energy = record.energy;
        state = next;
        steps = step;
        if let Some(summary) = monitor.record(&state)? {
            if let Some(g) = summary.gap {
                final_gap = Some(g);
                if g < cfg.eps_per {
                    converged = true;
                    break;
                }
            }
        }
    }
    Ok(SimulationOutcome {
        dt,
        steps_per_period: nt,
        steps,
        periods: steps / nt,
        converged,
        final_gap,
        initial_energy,
        final_energy: energy,
        max_identity_residual: identity,
        history: monitor.history().to_vec(),
        final_state: state,
    })
}

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub periods: usize,
    pub converged: bool,
    pub errors: ErrorReport,
    pub peaks: Vec<InterfacePeakError>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Fitted slopes of `(Err_v, Err_p, Err_y)`, when two or more steps ran.
    pub slopes: Option<[f64; 3]>,
}

impl ConvergenceTable {
    /// Every error family decreases strictly as the step shrinks.
    pub fn strictly_decreasing(&self) -> bool {
        let mut rows: Vec<&ConvergenceRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| b.dt.total_cmp(&a.dt));
        rows.windows(2).all(|w| {
            let (a, b) = (&w[0].errors, &w[1].errors);
            b.err_v < a.err_v && b.err_p < a.err_p && b.err_y < a.err_y
        })
    }
}

pub fn convergence(cfg: &RunConfig, dts: &[f64]) -> Result<ConvergenceTable> {
    if dts.is_empty() {
        return Err(Error::Config("convergence needs at least one time step".into()));
    }
    let mut sweep = cfg.clone();
    sweep.dts = dts.to_vec();
    let problem = build(&sweep)?;
    let mut rows = Vec::new();
    for &dt in dts {
        let mut c = sweep.clone();
        c.dt = dt;
        let out = simulate(&problem, &c, &mut [])?;
        let errors = out
            .last_errors()
            .ok_or_else(|| Error::Config(format!("no complete period was computed for dt = {dt}")))?;
        rows.push(ConvergenceRow {
            dt,
            periods: out.periods,
            converged: out.converged,
            errors,
            peaks: out.last_peaks().to_vec(),
        });
    }
    let slopes = if rows.len() >= 2 {
        let fit = |f: fn(&ErrorReport) -> f64| {
            convergence_rate(&rows.iter().map(|r| (r.dt, f(&r.errors))).collect::<Vec<_>>())
        };
        Some([fit(|e| e.err_v)?, fit(|e| e.err_p)?, fit(|e| e.err_y)?])
    } else {
        None
    };
    Ok(ConvergenceTable { rows, slopes })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub dt: f64,
    pub steps: usize,
    pub initial_energy: f64,
    /// `max_n (ℰⁿ⁺¹ − ℰⁿ)`.
    pub max_increase: f64,
    /// Largest violation of `ℰⁿ⁺¹ ≤ ℰⁿ⁺¹ᐟ² ≤ ℰⁿ`.
    pub max_chain_violation: f64,
    pub max_identity_residual: f64,
    pub final_energy: f64,
}

impl StabilityRow {
    pub fn monotone(&self) -> bool {
        self.max_increase <= STABILITY_TOLERANCE * self.initial_energy
            && self.max_chain_violation <= STABILITY_TOLERANCE * self.initial_energy
    }
}

pub const STABILITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub rows: Vec<StabilityRow>,
}

impl StabilityReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(StabilityRow::monotone)
    }
}

struct EnergyTrace {
    e0: f64,
    max_increase: f64,
    chain: f64,
    identity: f64,
    last: f64,
}

impl Observer for EnergyTrace {
    fn observe(&mut self, r: &StepRecord, _state: &CoupledState) -> Result<()> {
        self.max_increase = self.max_increase.max(r.energy.total() - r.energy_start);
        self.chain = self
            .chain
            .max(r.energy_half - r.energy_start)
            .max(r.energy.total() - r.energy_half);
        self.identity = self.identity.max(r.step1_balance.relative_residual());
        self.last = r.energy.total();
        Ok(())
    }
}

/// Unforced runs from the exact initial state, one per time step.
pub fn stability(cfg: &RunConfig, dts: &[f64], steps: usize, coupling: CouplingMode) -> Result<StabilityReport> {
    if dts.is_empty() {
        return Err(Error::Config("stability needs at least one time step".into()));
    }
    let mut sweep = cfg.clone();
    sweep.dts = dts.to_vec();
    sweep.validate()?;
    let problem = build_problem(&sweep.problem_spec(Forcing::Zero)?)?;
    if problem.system.circuits.iter().any(|c| !c.is_constant()) {
        return Err(Error::Config(
            "the stability check needs constant circuit coefficients".into(),
        ));
    }
    let initial = problem.exact_state(0.0)?;
    let e0 = energy_report(&problem.system, &initial).total();
    let mut rows = Vec::new();
    for &dt in dts {
        let mut config = StepConfig::new(dt, sweep.substeps()?)?;
        config.coupling = coupling;
        let stepper = Stepper::new(Arc::clone(&problem.system), config)?;
        let mut trace = EnergyTrace {
            e0,
            max_increase: f64::NEG_INFINITY,
            chain: f64::NEG_INFINITY,
            identity: 0.0,
            last: e0,
        };
        stepper.run(initial.clone(), steps, &mut [&mut trace])?;
        rows.push(StabilityRow {
            dt,
            steps,
            initial_energy: trace.e0,
            max_increase: trace.max_increase,
            max_chain_violation: trace.chain,
            max_identity_residual: trace.identity,
            final_energy: trace.last,
        });
    }
    Ok(StabilityReport { rows })
}

/// Oracle self-check over 100 times per period. Invalid parameters give a
/// failing report instead of an error.
pub fn verify_oracle(cfg: &RunConfig) -> Result<ResidualReport> {
    let example = cfg.example()?;
    let params = cfg.params()?;
    let validity = parameter_row(&params, example);
    if !validity.passed() {
        return Ok(ResidualReport { rows: vec![validity] });
    }
    let problem = build(cfg)?;
    verify_exact(&problem.system, &problem.exact, &sample_times(&problem.exact, 100))
}
