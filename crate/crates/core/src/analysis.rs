//! Discrete energies, periodicity detection, normalized errors against the
//! exact solutions and convergence-rate fits.

use nalgebra::DVector;

use crate::circuit::eval_b;
use crate::error::{Error, Result};
use crate::mesh::InterfaceId;
use crate::oracles::ExactSolutionSet;
use crate::splitting::{CoupledState, CoupledSystem, Observer, StepRecord};

/// Energy functionals of one state (per unit length, cgs).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyReport {
    /// Kinetic energy `½ Σ ρ‖v‖²`.
    pub e_omega: f64,
    /// Circuit energy `½ Σ yᵀUy`.
    pub e_ups: f64,
    /// Viscous dissipation `Σ μ‖∇v‖²`.
    pub d_omega: f64,
    /// Connection dissipation `Σ R Q²`.
    pub d_rc: f64,
    /// Circuit dissipation `Σ yᵀBy`.
    pub u_ups: f64,
    /// Power of the Stokes loads.
    pub f_omega: f64,
    /// Power of the circuit sources `Σ yᵀU s`.
    pub f_ups: f64,
}

impl EnergyReport {
    pub fn total(&self) -> f64 {
        self.e_omega + self.e_ups
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `ℰ_Ω + ℰ_Υ` alone, without the dissipation and power terms.
pub fn stored_energy(system: &CoupledSystem, state: &CoupledState) -> f64 {
    let kinetic: f64 = system
        .domains
        .iter()
        .zip(&state.velocity)
        .map(|(dom, u)| 0.5 * dom.rho * dom.ops.mass.form(u, u))
        .sum();
    let circuit: f64 = system
        .circuits
        .iter()
        .zip(&state.circuits)
        .map(|(spec, y)| 0.5 * spec.weighted_norm_sq(y, state.t))
        .sum();
    kinetic + circuit
}

pub fn energy_report(system: &CoupledSystem, state: &CoupledState) -> EnergyReport {
    let mut r = EnergyReport::default();
    let t = state.t;
    for (d, dom) in system.domains.iter().enumerate() {
        let u = &state.velocity[d];
        r.e_omega += 0.5 * dom.rho * dom.ops.mass.form(u, u);
        r.d_omega += dom.mu * dom.ops.stiffness.form(u, u);
        r.f_omega += dot(&dom.forcing(t), u);
    }
    for (c, spec) in system.circuits.iter().enumerate() {
        let y = &state.circuits[c];
        let w = spec.u_diag(y, t);
        r.e_ups += 0.5 * spec.weighted_norm_sq(y, t);
        let b = eval_b(spec, y, t, system.fd_step);
        r.u_ups += y.dot(&(&b * y));
        let s = spec.source(y, t);
        r.f_ups += (0..spec.dim()).map(|i| y[i] * w[i] * s[i]).sum::<f64>();
    }
    for (b, bind) in system.bindings.iter().enumerate() {
        let q = state.interfaces[b].flow;
        r.d_rc += system.connection(bind).resistance * q * q;
    }
    r
}

/// Squared distances and reference norms of the three field families.
#[derive(Debug, Clone, Copy, Default)]
struct FamilySums {
    num: [f64; 3],
    den: [f64; 3],
}

impl FamilySums {
    fn add(&mut self, other: &FamilySums) {
        for i in 0..3 {
            self.num[i] += other.num[i];
            self.den[i] += other.den[i];
        }
    }
}

/// Per-family distances of `current` from `reference` (velocity in the mass
/// norm, pressure in the pressure-mass norm, circuit states Euclidean).
fn snapshot_sums(system: &CoupledSystem, current: &CoupledState, reference: &CoupledState) -> FamilySums {
    let mut s = FamilySums::default();
    let mut diff = Vec::new();
    for (d, dom) in system.domains.iter().enumerate() {
        diff.clear();
        diff.extend(current.velocity[d].iter().zip(&reference.velocity[d]).map(|(a, b)| a - b));
        s.num[0] += dom.ops.mass.form(&diff, &diff);
        s.den[0] += dom.ops.mass.form(&reference.velocity[d], &reference.velocity[d]);
        diff.clear();
        diff.extend(current.pressure[d].iter().zip(&reference.pressure[d]).map(|(a, b)| a - b));
        s.num[1] += dom.ops.pressure_mass.form(&diff, &diff);
        s.den[1] += dom.ops.pressure_mass.form(&reference.pressure[d], &reference.pressure[d]);
    }
    for (y, r) in current.circuits.iter().zip(&reference.circuits) {
        s.num[2] += (y - r).norm_squared();
        s.den[2] += r.norm_squared();
    }
    s
}

const FAMILY_NAMES: [&str; 3] = ["velocity", "pressure", "circuit state"];

fn gap_from_sums(s: &FamilySums) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for i in 0..3 {
        if s.den[i] == 0.0 {
            if s.num[i] == 0.0 {
                continue;
            }
            return Err(Error::DegenerateReference(format!(
                "previous-period {} norm is zero",
                FAMILY_NAMES[i]
            )));
        }
        gap = gap.max(s.num[i] / s.den[i]);
    }
    Ok(gap)
}

/// Relative change between two consecutive periods, each given as its
/// `N_τ + 1` snapshots. Each family's norm is summed over the snapshots
/// before the ratio is taken; the result is the largest family ratio.
pub fn periodicity_gap(
    system: &CoupledSystem,
    previous: &[CoupledState],
    current: &[CoupledState],
) -> Result<f64> {
    if previous.len() != current.len() {
        return Err(Error::SizeMismatch {
            what: "period snapshots",
            expected: previous.len(),
            found: current.len(),
        });
    }
    if previous.len() < 2 {
        return Err(Error::InvalidArgument("a period needs at least two snapshots".into()));
    }
    let mut sums = FamilySums::default();
    for (c, p) in current.iter().zip(previous) {
        c.check(system)?;
        p.check(system)?;
        sums.add(&snapshot_sums(system, c, p));
    }
    gap_from_sums(&sums)
}

/// Normalized errors over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub err_v: f64,
    pub err_p: f64,
    pub err_y: f64,
    /// Index of the period the errors were measured over (0-based).
    pub period: usize,
}

/// Interpolants of the exact fields. The spatial shape of every exact
/// field is fixed, so `v_ex(t) = s(t) · V̂` is exact at the discrete level.
pub struct ExactInterpolant {
    velocity: Vec<Vec<f64>>,
    pressure: Vec<Vec<f64>>,
}

impl ExactInterpolant {
    pub fn new(system: &CoupledSystem, exact: &ExactSolutionSet) -> Result<Self> {
        if exact.domains.len() != system.domains.len() {
            return Err(Error::SizeMismatch {
                what: "exact domain fields",
                expected: system.domains.len(),
                found: exact.domains.len(),
            });
        }
        let mut velocity = Vec::new();
        let mut pressure = Vec::new();
        for (dom, ex) in system.domains.iter().zip(&exact.domains) {
            let vel = ex.velocity;
            let pre = ex.pressure;
            let mut v = dom.space.interpolate_velocity(&dom.mesh, |x| [vel.value(x[1]), 0.0]);
            for &c in dom.space.constrained_dofs() {
                v[c] = 0.0;
            }
            velocity.push(v);
            pressure.push(dom.space.interpolate_pressure(&dom.mesh, |x| pre.value(x[0])));
        }
        Ok(Self { velocity, pressure })
    }

    /// Discrete exact state at time `t`, including interface samples and
    /// the circuit state.
    pub fn state_at(&self, system: &CoupledSystem, exact: &ExactSolutionSet, t: f64) -> Result<CoupledState> {
        let mut state = CoupledState::zeros(system, t);
        for (d, ex) in exact.domains.iter().enumerate() {
            let s = ex.amplitude.value(t);
            state.velocity[d] = self.velocity[d].iter().map(|v| s * v).collect();
            state.pressure[d] = self.pressure[d].iter().map(|v| s * v).collect();
        }
        if system.circuits.len() != 1 {
            return Err(Error::InvalidArgument(format!(
                "exact solutions describe one circuit, the system has {}",
                system.circuits.len()
            )));
        }
        let y = exact.circuit_state_at(t);
        if y.len() != system.circuits[0].dim() {
            return Err(Error::SizeMismatch {
                what: "exact circuit state",
                expected: system.circuits[0].dim(),
                found: y.len(),
            });
        }
        state.circuits[0] = DVector::from_vec(y);
        for (b, bind) in system.bindings.iter().enumerate() {
            let ie = exact
                .interface(bind.id)
                .ok_or_else(|| Error::Oracle(format!("no exact data for interface {}", bind.id)))?;
            state.interfaces[b].pressure = ie.pressure.value(t);
            state.interfaces[b].flow = ie.flow.value(t);
            state.interfaces[b].node_pressure = ie.node_pressure.value(t);
        }
        Ok(state)
    }
}

/// Squared error ratios of one snapshot: `[v, p, y]`, each summed over
/// domains or circuits with per-snapshot denominators.
fn error_ratios(system: &CoupledSystem, computed: &CoupledState, exact: &CoupledState) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    let mut diff = Vec::new();
    for (d, dom) in system.domains.iter().enumerate() {
        let (u, ue) = (&computed.velocity[d], &exact.velocity[d]);
        diff.clear();
        diff.extend(u.iter().zip(ue).map(|(a, b)| a - b));
        let den = dom.ops.mass.form(ue, ue);
        let num = dom.ops.mass.form(&diff, &diff);
        out[0] += ratio(num, den, "velocity", exact.t)?;
        let (p, pe) = (&computed.pressure[d], &exact.pressure[d]);
        diff.clear();
        diff.extend(p.iter().zip(pe).map(|(a, b)| a - b));
        let den = dom.ops.pressure_mass.form(pe, pe);
        let num = dom.ops.pressure_mass.form(&diff, &diff);
        out[1] += ratio(num, den, "pressure", exact.t)?;
    }
    for (c, spec) in system.circuits.iter().enumerate() {
        let (y, ye) = (&computed.circuits[c], &exact.circuits[c]);
        let w = spec.u_diag(y, computed.t);
        let we = spec.u_diag(ye, exact.t);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..spec.dim() {
            let a = w[i].max(0.0).sqrt() * y[i];
            let b = we[i].max(0.0).sqrt() * ye[i];
            num += (a - b) * (a - b);
            den += b * b;
        }
        out[2] += ratio(num, den, "circuit state", exact.t)?;
    }
    Ok(out)
}

fn ratio(num: f64, den: f64, what: &str, t: f64) -> Result<f64> {
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::DegenerateReference(format!("exact {what} norm vanishes at t = {t}")))
    }
}

/// Errors of a trajectory covering one period. `trajectory[0]` is the state
/// at the period start and is excluded; the remaining `N_τ` snapshots are
/// weighted by `dt`.
pub fn error_norms(
    system: &CoupledSystem,
    exact: &ExactSolutionSet,
    trajectory: &[CoupledState],
    dt: f64,
) -> Result<ErrorReport> {
    if trajectory.len() < 2 {
        return Err(Error::InvalidArgument("error norms need at least two snapshots".into()));
    }
    let interp = ExactInterpolant::new(system, exact)?;
    let mut acc = [0.0; 3];
    for s in &trajectory[1..] {
        s.check(system)?;
        let e = interp.state_at(system, exact, s.t)?;
        let r = error_ratios(system, s, &e)?;
        for i in 0..3 {
            acc[i] += r[i];
        }
    }
    Ok(ErrorReport {
        err_v: (dt * acc[0]).sqrt(),
        err_p: (dt * acc[1]).sqrt(),
        err_y: (dt * acc[2]).sqrt(),
        period: (trajectory[0].t / exact.period()).round() as usize,
    })
}

/// Least-squares slope of `log(err)` against `log(dt)`.
pub fn convergence_rate(samples: &[(f64, f64)]) -> Result<f64> {
    for &(dt, e) in samples {
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
        }
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::InvalidArgument(format!("error values must be positive, got {e}")));
        }
    }
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::InvalidArgument("a slope needs at least two distinct time steps".into()));
    }
    let n = samples.len() as f64;
    let xs: Vec<f64> = samples.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// Largest deviation from the exact interface traces over one period,
/// relative to the largest exact magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfacePeakError {
    pub id: InterfaceId,
    pub pressure: f64,
    pub flow: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct PeakAccumulator {
    pressure_err: f64,
    pressure_ref: f64,
    flow_err: f64,
    flow_ref: f64,
}

/// Results for one completed period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodSummary {
    pub period: usize,
    /// Gap to the previous period; `None` for the first period.
    pub gap: Option<f64>,
    pub errors: Option<ErrorReport>,
    pub peaks: Vec<InterfacePeakError>,
}

/// Online periodicity and error monitor. Keeps one previous-period buffer
/// that is overwritten in place as the current period is recorded.
pub struct PeriodMonitor<'a> {
    system: &'a CoupledSystem,
    exact: Option<(&'a ExactSolutionSet, ExactInterpolant)>,
    steps_per_period: usize,
    dt: f64,
    buffer: Vec<Option<CoupledState>>,
    sums: FamilySums,
    errors: [f64; 3],
    peaks: Vec<PeakAccumulator>,
    history: Vec<PeriodSummary>,
    next_index: usize,
}

impl<'a> PeriodMonitor<'a> {
    /// `exact` enables error and peak tracking.
    pub fn new(
        system: &'a CoupledSystem,
        exact: Option<&'a ExactSolutionSet>,
        steps_per_period: usize,
        dt: f64,
    ) -> Result<Self> {
        if steps_per_period == 0 {
            return Err(Error::InvalidArgument("a period needs at least one step".into()));
        }
        let exact = match exact {
            Some(e) => Some((e, ExactInterpolant::new(system, e)?)),
            None => None,
        };
        Ok(Self {
            system,
            exact,
            steps_per_period,
            dt,
            buffer: vec![None; steps_per_period + 1],
            sums: FamilySums::default(),
            errors: [0.0; 3],
            peaks: vec![PeakAccumulator::default(); system.bindings.len()],
            history: Vec::new(),
            next_index: 0,
        })
    }

    pub fn history(&self) -> &[PeriodSummary] {
        &self.history
    }

    pub fn last(&self) -> Option<&PeriodSummary> {
        self.history.last()
    }

    /// Feeds the next snapshot (the initial state first).
    pub fn record(&mut self, state: &CoupledState) -> Result<Option<&PeriodSummary>> {
        let n = self.next_index;
        self.next_index += 1;
        let nt = self.steps_per_period;
        let (period, slot) = (n / nt, n % nt);
        let mut finished = false;
        if slot == 0 && n > 0 {
            self.absorb(period - 1, nt, state)?;
            self.finish(period - 1)?;
            finished = true;
        }
        if slot != 0 {
            self.absorb(period, slot, state)?;
        } else {
            self.store_only(period, 0, state);
        }
        Ok(if finished { self.history.last() } else { None })
    }

    fn store_only(&mut self, period: usize, slot: usize, state: &CoupledState) {
        if period >= 1 {
            if let Some(prev) = &self.buffer[slot] {
                let s = snapshot_sums(self.system, state, prev);
                self.sums.add(&s);
            }
        }
        self.buffer[slot] = Some(state.clone());
    }

    fn absorb(&mut self, period: usize, slot: usize, state: &CoupledState) -> Result<()> {
        self.store_only(period, slot, state);
        if let Some((ex, interp)) = &self.exact {
            let e = interp.state_at(self.system, ex, state.t)?;
            let r = error_ratios(self.system, state, &e)?;
            for i in 0..3 {
                self.errors[i] += r[i];
            }
            for (acc, (c, x)) in self.peaks.iter_mut().zip(state.interfaces.iter().zip(&e.interfaces)) {
                acc.pressure_err = acc.pressure_err.max((c.pressure - x.pressure).abs());
                acc.pressure_ref = acc.pressure_ref.max(x.pressure.abs());
                acc.flow_err = acc.flow_err.max((c.flow - x.flow).abs());
                acc.flow_ref = acc.flow_ref.max(x.flow.abs());
            }
        }
        Ok(())
    }

    fn finish(&mut self, period: usize) -> Result<()> {
        let gap = if period >= 1 {
            Some(gap_from_sums(&self.sums)?)
        } else {
            None
        };
        let errors = self.exact.as_ref().map(|_| ErrorReport {
            err_v: (self.dt * self.errors[0]).sqrt(),
            err_p: (self.dt * self.errors[1]).sqrt(),
            err_y: (self.dt * self.errors[2]).sqrt(),
            period,
        });
        let peaks = if self.exact.is_some() {
            self.system
                .bindings
                .iter()
                .zip(&self.peaks)
                .map(|(b, a)| InterfacePeakError {
                    id: b.id,
                    pressure: if a.pressure_ref > 0.0 { a.pressure_err / a.pressure_ref } else { a.pressure_err },
                    flow: if a.flow_ref > 0.0 { a.flow_err / a.flow_ref } else { a.flow_err },
                })
                .collect()
        } else {
            Vec::new()
        };
        self.history.push(PeriodSummary {
            period,
            gap,
            errors,
            peaks,
        });
        self.sums = FamilySums::default();
        self.errors = [0.0; 3];
        self.peaks.iter_mut().for_each(|p| *p = PeakAccumulator::default());
        Ok(())
    }
}

impl Observer for PeriodMonitor<'_> {
    fn observe(&mut self, _record: &StepRecord, state: &CoupledState) -> Result<()> {
        self.record(state).map(|_| ())
    }
}
