use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hydrosplit::circuit::eval_b;
use hydrosplit::config::RunConfig;
use hydrosplit::experiments::{convergence, stability, verify_oracle, ConvergenceTable};
use hydrosplit::problems::{build_problem, ProblemSpec};
use hydrosplit::params::Example;
use hydrosplit::splitting::{CouplingMode, StepConfig, Stepper};
use hydrosplit::Result;

const DTS: [f64; 3] = [0.01, 0.005, 0.001];
const STABILITY_DTS: [f64; 3] = [0.1, 1.0, 10.0];
const ORACLE_TOLERANCE: f64 = 1e-10;
const IDENTITY_LIMIT: f64 = 1e-8;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self { passed, detail: detail.into() }
    }
}

fn run_config(example: u32, nonlinear: bool) -> RunConfig {
    RunConfig { example, nonlinear, ..RunConfig::default() }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn structural() -> Result<Verdict> {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);

    let p = build_problem(&ProblemSpec::new(Example::One))?;
    let dom = &p.system.domains[0];
    let ops = &dom.ops;
    let n = dom.space.velocity_dofs();
    let mut divergence: f64 = 0.0;
    for _ in 0..5 {
        let u = random_vec(&mut rng, n);
        let inside: f64 = ops.divergence.matvec(&u).iter().sum();
        let boundary: f64 = ops.boundary_tags().map(|t| dot(ops.boundary_load(t).unwrap(), &u)).sum();
        divergence = divergence.max((inside - boundary).abs() / boundary.abs().max(1.0));
    }
    if divergence > 1e-11 {
        failures.push(format!("divergence theorem {divergence:.2e}"));
    }
    for (name, m) in [("mass", &ops.mass), ("stiffness", &ops.stiffness), ("pressure mass", &ops.pressure_mass)] {
        if m.asymmetry() > 1e-14 * m.max_abs() {
            failures.push(format!("{name} asymmetric"));
        }
    }
    for _ in 0..10 {
        let u = random_vec(&mut rng, n);
        let q = random_vec(&mut rng, dom.space.pressure_dofs());
        let scale = ops.stiffness.max_abs() * dot(&u, &u);
        if ops.mass.form(&u, &u) <= 0.0 || ops.pressure_mass.form(&q, &q) <= 0.0 {
            failures.push("mass not positive".into());
        }
        if ops.stiffness.form(&u, &u) < -1e-13 * scale {
            failures.push("stiffness negative".into());
        }
    }

    let spec = &p.system.circuits[0];
    let y = DVector::from_vec(p.exact.circuit_state_at(0.3));
    let b = eval_b(spec, &y, 0.3, p.system.fd_step);
    let expected = DMatrix::from_row_slice(2, 2, &[0.1, -10.0, -10.0, 2000.0]);
    let mismatch = (&b - &expected).abs().max() / expected.abs().max();
    let sym = (&b + b.transpose()) * 0.5;
    let min_eig = sym.symmetric_eigenvalues().min();
    if mismatch > 1e-12 || min_eig <= 0.0 {
        failures.push(format!("dissipation matrix off by {mismatch:.2e}, min eigenvalue {min_eig:.3e}"));
    }

    for ex in [Example::One, Example::Two, Example::Three] {
        let mut s = ProblemSpec::new(ex);
        s.nx = 20;
        s.ny = 4;
        let p = build_problem(&s)?;
        let stepper = Stepper::new(Arc::clone(&p.system), StepConfig::new(0.01, ex.default_substeps())?)?;
        let mut st = p.exact_state(0.0)?;
        for step in 0..3 {
            let (half, _) = stepper.step1(&st)?;
            for (c, spec) in p.system.circuits.iter().enumerate() {
                let coupled: Vec<usize> = spec.connections().iter().map(|k| k.pi_index).collect();
                for i in (0..spec.dim()).filter(|i| !coupled.contains(i)) {
                    if half.circuits[c][i].to_bits() != st.circuits[c][i].to_bits() {
                        failures.push(format!("example {} entry {i} moved in the flow step", ex.number()));
                    }
                }
            }
            let full = stepper.step2(&half, st.t)?;
            let same = full.velocity.iter().zip(&half.velocity).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            });
            if !same || full.pressure != half.pressure {
                failures.push(format!("example {} fields moved in the circuit step {step}", ex.number()));
            }
            st = full;
        }
    }
    failures.dedup();
    Ok(if failures.is_empty() {
        Verdict::new(true, format!("divergence {divergence:.1e}, min eigenvalue of B {min_eig:.4}"))
    } else {
        Verdict::new(false, failures.join("; "))
    })
}

fn oracles() -> Result<Verdict> {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for (ex, nonlinear) in [(1, false), (1, true), (2, false), (3, false)] {
        let report = verify_oracle(&run_config(ex, nonlinear))?;
        for row in &report.rows {
            if row.threshold == ORACLE_TOLERANCE || row.threshold == 0.0 {
                worst = worst.max(row.value);
            }
        }
        let needed: &[&str] = if nonlinear {
            &["circuit ODE residual", "interface relation P - pi - RQ", "volume-pressure relation"]
        } else {
            &["circuit ODE residual", "interface relation P - pi - RQ"]
        };
        for name in needed {
            match report.row(name) {
                Some(r) if r.value <= ORACLE_TOLERANCE => {}
                Some(r) => failures.push(format!("example {ex} {name} = {:.2e}", r.value)),
                None => failures.push(format!("example {ex} missing {name}")),
            }
        }
        for r in report.failures() {
            failures.push(format!("example {ex} {} = {:.2e}", r.name, r.value));
        }
    }
    failures.dedup();
    Ok(if failures.is_empty() {
        Verdict::new(true, format!("largest residual {worst:.2e}"))
    } else {
        Verdict::new(false, failures.join("; "))
    })
}

fn stability_and_identity() -> Result<(Verdict, Verdict)> {
    let report = stability(&run_config(1, false), &STABILITY_DTS, 200, CouplingMode::Implicit)?;
    let mut energy = Vec::new();
    let mut identity = Vec::new();
    for r in &report.rows {
        energy.push(format!(
            "dt={} increase {:.1e} chain {:.1e} final/initial {:.1e}",
            r.dt,
            r.max_increase / r.initial_energy,
            r.max_chain_violation / r.initial_energy,
            r.final_energy / r.initial_energy
        ));
        identity.push(format!("dt={} {:.1e}", r.dt, r.max_identity_residual));
    }
    let identity_ok = report.rows.iter().all(|r| r.max_identity_residual <= IDENTITY_LIMIT);
    Ok((
        Verdict::new(report.passed(), energy.join("; ")),
        Verdict::new(identity_ok, identity.join(", ")),
    ))
}

fn sweep(example: u32, nonlinear: bool) -> Result<ConvergenceTable> {
    let started = Instant::now();
    let table = convergence(&run_config(example, nonlinear), &DTS)?;
    for r in &table.rows {
        eprintln!(
            "  example {example} dt={:<6} periods {} errors v {:.4e} p {:.4e} y {:.4e}",
            r.dt, r.periods, r.errors.err_v, r.errors.err_p, r.errors.err_y
        );
    }
    eprintln!("  example {example} sweep took {:.0?}", started.elapsed());
    Ok(table)
}

fn convergence_verdict(tables: &[(u32, ConvergenceTable)]) -> Verdict {
    let mut passed = true;
    let mut detail = Vec::new();
    for (ex, t) in tables {
        let slopes = t.slopes.unwrap_or([f64::NAN; 3]);
        let in_range = slopes.iter().all(|s| (0.7..=1.3).contains(s));
        let converged = t.rows.iter().all(|r| r.converged);
        passed &= in_range && converged && t.strictly_decreasing();
        detail.push(format!(
            "ex{ex} slopes {:.2}/{:.2}/{:.2}{}{}",
            slopes[0],
            slopes[1],
            slopes[2],
            if t.strictly_decreasing() { "" } else { " not decreasing" },
            if converged { "" } else { " not periodic" }
        ));
    }
    Verdict::new(passed, detail.join("; "))
}

fn peak_verdict(table: &ConvergenceTable) -> Verdict {
    let peak = |dt: f64| {
        table
            .rows
            .iter()
            .find(|r| r.dt == dt)
            .and_then(|r| r.peaks.iter().find(|p| p.id.label() == "11_1"))
            .copied()
    };
    match (peak(0.01), peak(0.001)) {
        (Some(coarse), Some(fine)) => {
            let ratio = coarse.flow / fine.flow;
            Verdict::new(
                coarse.flow > coarse.pressure && ratio >= 3.0,
                format!(
                    "dt=0.01 Q {:.3e} vs P {:.3e}, Q reduction to dt=0.001 x{ratio:.1}",
                    coarse.flow, coarse.pressure
                ),
            )
        }
        _ => Verdict::new(false, "interface 11_1 missing from the sweep"),
    }
}

fn or_fail<T>(r: Result<T>) -> std::result::Result<T, Verdict> {
    r.map_err(|e| Verdict::new(false, format!("error: {e}")))
}

fn main() -> ExitCode {
    let started = Instant::now();
    eprintln!("structural invariants");
    let structural = or_fail(structural()).unwrap_or_else(|v| v);
    eprintln!("oracle residuals");
    let oracle = or_fail(oracles()).unwrap_or_else(|v| v);
    eprintln!("unforced energy runs");
    let (stable, identity) = match or_fail(stability_and_identity()) {
        Ok(pair) => pair,
        Err(v) => (Verdict::new(false, v.detail.clone()), v),
    };
    eprintln!("time-step sweeps");
    let mut tables = Vec::new();
    let mut sweep_error = None;
    for (ex, nonlinear) in [(1, true), (2, false), (3, false)] {
        match sweep(ex, nonlinear) {
            Ok(t) => tables.push((ex, t)),
            Err(e) => sweep_error = Some(format!("example {ex}: {e}")),
        }
    }
    let (rates, peaks) = match &sweep_error {
        Some(e) => (Verdict::new(false, e.clone()), Verdict::new(false, e.clone())),
        None => (convergence_verdict(&tables), peak_verdict(&tables[0].1)),
    };

    let verdicts = [
        ("first-order convergence in dt", rates),
        ("energy decay for any dt", stable),
        ("flow-step energy identity", identity),
        ("exact solution residuals", oracle),
        ("flow peak error dominates and shrinks", peaks),
        ("structural invariants", structural),
    ];
    let mut all = true;
    for (i, (name, v)) in verdicts.iter().enumerate() {
        all &= v.passed;
        println!("criterion {} {name}: {} ({})", i + 1, if v.passed { "PASS" } else { "FAIL" }, v.detail);
    }
    println!("acceptance: {} in {:.0?}", if all { "PASS" } else { "FAIL" }, started.elapsed());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
