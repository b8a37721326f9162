//! First-order operator splitting for Stokes channels coupled to lumped
//! circuits through resistive–capacitive connections.
//!
//! Step 1 solves the Stokes problems together with the connection dynamics
//! `dπ/dt = Q/C` in one implicit Euler step, with the interface flow rates
//! `Q` and capacitor pressures `π` as extra unknowns. Step 2 advances the
//! interior circuit dynamics with the velocities frozen.

use std::sync::Arc;

use nalgebra::DVector;

use crate::analysis::{energy_report, stored_energy, EnergyReport};
use crate::circuit::{step2_integrate, CircuitSpec, CoefficientFreeze, Signal};
use crate::error::{Error, Result};
use crate::fem::{assemble_body_force, assemble_operators, build_space, AssembledOperators, StokesSpace};
use crate::mesh::{BoundaryTag, InterfaceId, Point, TriangleMesh};
use crate::sparse::{LuOptions, SparseLu, TripletMatrix};

/// One Stokes channel with its discretization and loads.
pub struct DomainModel {
    pub index: usize,
    pub mesh: TriangleMesh,
    pub space: StokesSpace,
    pub ops: AssembledOperators,
    pub rho: f64,
    pub mu: f64,
    force: Vec<(Signal, Vec<f64>)>,
    external_pressure: Option<Signal>,
}

impl DomainModel {
    pub fn new(index: usize, mesh: TriangleMesh, rho: f64, mu: f64) -> Result<Self> {
        if !(rho > 0.0 && mu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "density and viscosity must be positive, got rho={rho}, mu={mu}"
            )));
        }
        let space = build_space(&mesh)?;
        let ops = assemble_operators(&space, &mesh);
        Ok(Self {
            index,
            mesh,
            space,
            ops,
            rho,
            mu,
            force: Vec::new(),
            external_pressure: None,
        })
    }

    /// Adds a body-force term `amplitude(t) · shape(x)` (acceleration, the
    /// load is scaled by the density).
    pub fn with_force_term(
        mut self,
        amplitude: Signal,
        shape: impl Fn(Point) -> [f64; 2],
    ) -> Self {
        let load = assemble_body_force(&self.space, &self.mesh, |x, _| shape(x), 0.0);
        self.force.push((amplitude, load));
        self
    }

    /// Pressure imposed on the external traction side.
    pub fn with_external_pressure(mut self, pressure: Signal) -> Self {
        self.external_pressure = Some(pressure);
        self
    }

    pub fn external_pressure(&self, t: f64) -> f64 {
        self.external_pressure.as_ref().map_or(0.0, |p| p(t))
    }

    /// Right-hand side of the momentum equation: `ρ ∫f·φ − p̄ ∫φ·n`.
    pub fn forcing(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.space.velocity_dofs()];
        for (amp, load) in &self.force {
            let a = self.rho * amp(t);
            if a != 0.0 {
                for (o, l) in out.iter_mut().zip(load) {
                    *o += a * l;
                }
            }
        }
        if let Some(sigma) = self.ops.boundary_load(BoundaryTag::NeumannExternal) {
            let pbar = self.external_pressure(t);
            if pbar != 0.0 {
                for (o, s) in out.iter_mut().zip(sigma) {
                    *o -= pbar * s;
                }
            }
        }
        for &d in self.space.constrained_dofs() {
            out[d] = 0.0;
        }
        out
    }
}

/// A connection matched to the channel that carries its interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceBinding {
    pub id: InterfaceId,
    pub domain: usize,
    pub circuit: usize,
    pub connection: usize,
}

pub struct CoupledSystem {
    pub domains: Vec<DomainModel>,
    pub circuits: Vec<CircuitSpec>,
    pub bindings: Vec<InterfaceBinding>,
    /// Time step for finite-difference rates of the circuit energy weight.
    pub fd_step: f64,
}

impl CoupledSystem {
    /// Binds every mesh interface to the circuit connection with the same
    /// label. Each side must be matched exactly once.
    pub fn new(domains: Vec<DomainModel>, circuits: Vec<CircuitSpec>) -> Result<Self> {
        let mut bindings = Vec::new();
        for (ci, circuit) in circuits.iter().enumerate() {
            for (k, conn) in circuit.connections().iter().enumerate() {
                let owners: Vec<usize> = domains
                    .iter()
                    .enumerate()
                    .filter(|(_, d)| d.mesh.has_tag(BoundaryTag::Interface(conn.interface)))
                    .map(|(i, _)| i)
                    .collect();
                if owners.len() != 1 {
                    return Err(Error::InvalidArgument(format!(
                        "connection {} matches {} channels, expected exactly one",
                        conn.interface,
                        owners.len()
                    )));
                }
                if bindings.iter().any(|b: &InterfaceBinding| b.id == conn.interface) {
                    return Err(Error::InvalidArgument(format!(
                        "interface {} is connected twice",
                        conn.interface
                    )));
                }
                bindings.push(InterfaceBinding {
                    id: conn.interface,
                    domain: owners[0],
                    circuit: ci,
                    connection: k,
                });
            }
        }
        for d in &domains {
            for id in d.mesh.interface_ids() {
                if !bindings.iter().any(|b| b.id == id) {
                    return Err(Error::InvalidArgument(format!("interface {id} has no circuit connection")));
                }
            }
        }
        Ok(Self {
            domains,
            circuits,
            bindings,
            fd_step: 1e-6,
        })
    }

    pub fn connection(&self, b: &InterfaceBinding) -> &crate::circuit::Connection {
        &self.circuits[b.circuit].connections()[b.connection]
    }

    pub fn flux_vector(&self, b: &InterfaceBinding) -> &[f64] {
        self.domains[b.domain]
            .ops
            .flux_vector(b.id)
            .expect("bound interfaces carry a flux vector")
    }
}

/// Pressure, flow rate and capacitor pressure at one connection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceSample {
    pub id: InterfaceId,
    pub pressure: f64,
    pub flow: f64,
    pub node_pressure: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledState {
    pub t: f64,
    pub velocity: Vec<Vec<f64>>,
    pub pressure: Vec<Vec<f64>>,
    pub circuits: Vec<DVector<f64>>,
    pub interfaces: Vec<InterfaceSample>,
}

impl CoupledState {
    /// All-zero state at time `t`.
    pub fn zeros(system: &CoupledSystem, t: f64) -> Self {
        Self {
            t,
            velocity: system.domains.iter().map(|d| vec![0.0; d.space.velocity_dofs()]).collect(),
            pressure: system.domains.iter().map(|d| vec![0.0; d.space.pressure_dofs()]).collect(),
            circuits: system.circuits.iter().map(|c| DVector::zeros(c.dim())).collect(),
            interfaces: system
                .bindings
                .iter()
                .map(|b| InterfaceSample {
                    id: b.id,
                    pressure: 0.0,
                    flow: 0.0,
                    node_pressure: 0.0,
                })
                .collect(),
        }
    }

    pub fn check(&self, system: &CoupledSystem) -> Result<()> {
        let bad = |what: &'static str, expected: usize, found: usize| {
            Err(Error::SizeMismatch { what, expected, found })
        };
        if self.velocity.len() != system.domains.len() {
            return bad("velocity fields", system.domains.len(), self.velocity.len());
        }
        if self.pressure.len() != system.domains.len() {
            return bad("pressure fields", system.domains.len(), self.pressure.len());
        }
        if self.circuits.len() != system.circuits.len() {
            return bad("circuit states", system.circuits.len(), self.circuits.len());
        }
        if self.interfaces.len() != system.bindings.len() {
            return bad("interface samples", system.bindings.len(), self.interfaces.len());
        }
        for (d, dom) in system.domains.iter().enumerate() {
            dom.space.check_velocity("velocity coefficients", &self.velocity[d])?;
            dom.space.check_pressure("pressure coefficients", &self.pressure[d])?;
        }
        for (y, c) in self.circuits.iter().zip(&system.circuits) {
            if y.len() != c.dim() {
                return bad("circuit state", c.dim(), y.len());
            }
        }
        Ok(())
    }
}

/// How the capacitor pressure enters the Step-1 momentum balance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CouplingMode {
    /// `π` solved together with the flow (the stable scheme).
    #[default]
    Implicit,
    /// `π` lagged at its previous value. Only useful as a negative control.
    ExplicitCircuitPressure,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub substeps: usize,
    pub freeze: CoefficientFreeze,
    pub coupling: CouplingMode,
}

impl StepConfig {
    pub fn new(dt: f64, substeps: usize) -> Result<Self> {
        let cfg = Self {
            dt,
            substeps,
            freeze: CoefficientFreeze::default(),
            coupling: CouplingMode::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {}", self.dt)));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidArgument("at least one Step-2 substep is required".into()));
        }
        Ok(())
    }
}

/// Both sides of the Step-1 discrete energy balance
/// `(1/Δt)(ρ‖v‖² + yᵀUy) + μ‖∇v‖² + Σ R Q² = (1/Δt)(ρ vⁿ·v + yⁿᵀUy) + F·v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBalance {
    pub lhs: f64,
    pub rhs: f64,
}

impl EnergyBalance {
    /// `|lhs − rhs| / max(|lhs|, |rhs|)`. Magnitudes below the range where
    /// f64 still carries full precision are measured against that floor.
    pub fn relative_residual(&self) -> f64 {
        let floor = f64::MIN_POSITIVE / f64::EPSILON;
        let scale = self.lhs.abs().max(self.rhs.abs()).max(floor);
        (self.lhs - self.rhs).abs() / scale
    }
}

/// What happened during one global step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub interfaces: Vec<InterfaceSample>,
    /// Total energy `ℰ_Ω + ℰ_Υ` before the step, after Step 1, after Step 2.
    pub energy_start: f64,
    pub energy_half: f64,
    pub energy: EnergyReport,
    pub step1_balance: EnergyBalance,
}

/// Receives every completed step.
pub trait Observer {
    fn observe(&mut self, record: &StepRecord, state: &CoupledState) -> Result<()>;
}

struct Layout {
    velocity: Vec<usize>,
    pressure: Vec<usize>,
    connections: usize,
    size: usize,
}

impl Layout {
    fn new(system: &CoupledSystem) -> Self {
        let mut velocity = Vec::new();
        let mut pressure = Vec::new();
        let mut off = 0;
        for d in &system.domains {
            velocity.push(off);
            off += d.space.velocity_dofs();
            pressure.push(off);
            off += d.space.pressure_dofs();
        }
        let connections = off;
        Self {
            velocity,
            pressure,
            connections,
            size: off + 2 * system.bindings.len(),
        }
    }

    fn flow(&self, b: usize) -> usize {
        self.connections + 2 * b
    }

    fn node_pressure(&self, b: usize) -> usize {
        self.connections + 2 * b + 1
    }
}

/// Factorized Step-1 operator plus the Step-2 settings for one system.
pub struct Stepper {
    system: Arc<CoupledSystem>,
    config: StepConfig,
    layout: Layout,
    lu: SparseLu,
}

impl Stepper {
    pub fn new(system: Arc<CoupledSystem>, config: StepConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&system);
        let lu = factorize_step1(&system, &layout, &config)?;
        Ok(Self {
            system,
            config,
            layout,
            lu,
        })
    }

    pub fn system(&self) -> &Arc<CoupledSystem> {
        &self.system
    }

    pub fn config(&self) -> &StepConfig {
        &self.config
    }

    /// Number of unknowns in the Step-1 system.
    pub fn unknowns(&self) -> usize {
        self.layout.size
    }

    /// Changes the step configuration, refactorizing only if the time step
    /// or the coupling treatment changed.
    pub fn reconfigure(&mut self, config: StepConfig) -> Result<()> {
        config.validate()?;
        let refactor = config.dt != self.config.dt || config.coupling != self.config.coupling;
        self.config = config;
        if refactor {
            self.lu = factorize_step1(&self.system, &self.layout, &self.config)?;
        }
        Ok(())
    }

    /// Step 1: implicit Stokes + connection solve from `tⁿ` to `tⁿ⁺¹`.
    /// The returned state carries `tⁿ⁺¹`, the new velocity and pressure, the
    /// updated capacitor pressures and unchanged remaining circuit entries.
    pub fn step1(&self, state: &CoupledState) -> Result<(CoupledState, EnergyBalance)> {
        state.check(&self.system)?;
        let sys = &*self.system;
        let dt = self.config.dt;
        let t_new = state.t + dt;
        let lay = &self.layout;
        let mut rhs = vec![0.0; lay.size];
        let mut forcing = Vec::with_capacity(sys.domains.len());
        for (d, dom) in sys.domains.iter().enumerate() {
            let f = dom.forcing(t_new);
            let mv = dom.ops.mass.matvec(&state.velocity[d]);
            let off = lay.velocity[d];
            for i in 0..dom.space.velocity_dofs() {
                if !dom.space.is_constrained(i) {
                    rhs[off + i] = dom.rho / dt * mv[i] + f[i];
                }
            }
            forcing.push(f);
        }
        for (b, bind) in sys.bindings.iter().enumerate() {
            let conn = sys.connection(bind);
            let pi_old = state.circuits[bind.circuit][conn.pi_index];
            rhs[lay.node_pressure(b)] = pi_old;
            if self.config.coupling == CouplingMode::ExplicitCircuitPressure {
                let dom = &sys.domains[bind.domain];
                let off = lay.velocity[bind.domain];
                for (i, &phi) in sys.flux_vector(bind).iter().enumerate() {
                    if phi != 0.0 && !dom.space.is_constrained(i) {
                        rhs[off + i] -= phi * pi_old;
                    }
                }
            }
        }
        let x = self
            .lu
            .solve(&rhs)
            .map_err(|e| e.in_context(format!("Step 1 at t = {t_new}")))?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("Step 1 produced non-finite values at t = {t_new}")));
        }

        let mut next = state.clone();
        next.t = t_new;
        for (d, dom) in sys.domains.iter().enumerate() {
            let u0 = lay.velocity[d];
            let p0 = lay.pressure[d];
            next.velocity[d].copy_from_slice(&x[u0..u0 + dom.space.velocity_dofs()]);
            next.pressure[d].copy_from_slice(&x[p0..p0 + dom.space.pressure_dofs()]);
        }
        for (b, bind) in sys.bindings.iter().enumerate() {
            let conn = sys.connection(bind);
            let q = x[lay.flow(b)];
            let pi = x[lay.node_pressure(b)];
            next.circuits[bind.circuit][conn.pi_index] = pi;
            next.interfaces[b] = InterfaceSample {
                id: bind.id,
                pressure: pi + conn.resistance * q,
                flow: q,
                node_pressure: pi,
            };
        }

        let mut lhs = 0.0;
        let mut rhs_e = 0.0;
        for (d, dom) in sys.domains.iter().enumerate() {
            let u = &next.velocity[d];
            let mu_half = dom.ops.mass.matvec(u);
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            lhs += dom.rho / dt * dot(u, &mu_half) + dom.mu * dom.ops.stiffness.form(u, u);
            rhs_e += dom.rho / dt * dot(&state.velocity[d], &mu_half) + dot(&forcing[d], u);
        }
        for (c, spec) in sys.circuits.iter().enumerate() {
            let w = spec.u_diag(&state.circuits[c], state.t);
            let yh = &next.circuits[c];
            let y0 = &state.circuits[c];
            for i in 0..spec.dim() {
                lhs += w[i] * yh[i] * yh[i] / dt;
                rhs_e += w[i] * y0[i] * yh[i] / dt;
            }
        }
        for (b, bind) in sys.bindings.iter().enumerate() {
            let q = next.interfaces[b].flow;
            lhs += sys.connection(bind).resistance * q * q;
        }
        Ok((next, EnergyBalance { lhs, rhs: rhs_e }))
    }

    /// Step 2: velocities untouched, circuits advanced from `t_start` to
    /// `half.t` with `substeps` implicit Euler substeps.
    pub fn step2(&self, half: &CoupledState, t_start: f64) -> Result<CoupledState> {
        let mut next = half.clone();
        let dt2 = (half.t - t_start) / self.config.substeps as f64;
        for (c, spec) in self.system.circuits.iter().enumerate() {
            next.circuits[c] = step2_integrate(
                spec,
                &half.circuits[c],
                t_start,
                dt2,
                self.config.substeps,
                self.config.freeze,
            )?;
        }
        Ok(next)
    }

    /// One global step: Step 2 after Step 1.
    pub fn advance(&self, state: &CoupledState, step: usize) -> Result<(CoupledState, StepRecord)> {
        let sys = &*self.system;
        let energy_start = stored_energy(sys, state);
        let (half, balance) = self.step1(state)?;
        let energy_half = stored_energy(sys, &half);
        let next = self.step2(&half, state.t)?;
        let energy = energy_report(sys, &next);
        let record = StepRecord {
            step,
            t: next.t,
            interfaces: next.interfaces.clone(),
            energy_start,
            energy_half,
            energy,
            step1_balance: balance,
        };
        Ok((next, record))
    }

    /// Applies `advance` `n_steps` times, calling every observer after each
    /// step.
    pub fn run(
        &self,
        initial: CoupledState,
        n_steps: usize,
        observers: &mut [&mut dyn Observer],
    ) -> Result<CoupledState> {
        let mut state = initial;
        for n in 0..n_steps {
            let (next, record) = self.advance(&state, n + 1)?;
            for obs in observers.iter_mut() {
                obs.observe(&record, &next)?;
            }
            state = next;
        }
        Ok(state)
    }
}

fn factorize_step1(system: &CoupledSystem, lay: &Layout, config: &StepConfig) -> Result<SparseLu> {
    let dt = config.dt;
    let mut t = TripletMatrix::new(lay.size, lay.size);
    for (d, dom) in system.domains.iter().enumerate() {
        let u0 = lay.velocity[d];
        let p0 = lay.pressure[d];
        let space = &dom.space;
        let n = space.velocity_dofs();
        for i in 0..n {
            if space.is_constrained(i) {
                t.push(u0 + i, u0 + i, 1.0);
                continue;
            }
            for (j, v) in dom.ops.mass.row(i) {
                if !space.is_constrained(j) {
                    t.push(u0 + i, u0 + j, dom.rho / dt * v);
                }
            }
            for (j, v) in dom.ops.stiffness.row(i) {
                if !space.is_constrained(j) {
                    t.push(u0 + i, u0 + j, dom.mu * v);
                }
            }
        }
        for q in 0..space.pressure_dofs() {
            for (j, v) in dom.ops.divergence.row(q) {
                if !space.is_constrained(j) {
                    t.push(u0 + j, p0 + q, -v);
                    t.push(p0 + q, u0 + j, -v);
                }
            }
        }
    }
    for (b, bind) in system.bindings.iter().enumerate() {
        let conn = system.connection(bind);
        let dom = &system.domains[bind.domain];
        let u0 = lay.velocity[bind.domain];
        let (qi, pi) = (lay.flow(b), lay.node_pressure(b));
        for (i, &phi) in system.flux_vector(bind).iter().enumerate() {
            if phi == 0.0 || dom.space.is_constrained(i) {
                continue;
            }
            t.push(u0 + i, qi, conn.resistance * phi);
            if config.coupling == CouplingMode::Implicit {
                t.push(u0 + i, pi, phi);
            }
            t.push(qi, u0 + i, -phi);
        }
        t.push(qi, qi, 1.0);
        t.push(pi, pi, 1.0);
        t.push(pi, qi, -dt / conn.capacitance);
    }
    let a = t.compress()?;
    SparseLu::factorize(&a, &LuOptions::default()).map_err(|e| e.in_context("Step-1 factorization"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{CircuitSpec, Connection};
    use crate::mesh::{build_rect_mesh, BoundaryLayout, RectDomain};
    use crate::params::Example;
    use crate::problems::{build_problem, Forcing, Problem, ProblemSpec};
    use nalgebra::DMatrix;

    fn coarse(example: Example, forcing: Forcing) -> Problem {
        let mut spec = ProblemSpec::new(example);
        spec.nx = 10;
        spec.ny = 2;
        spec.forcing = forcing;
        build_problem(&spec).unwrap()
    }

    fn stepper(p: &Problem, dt: f64) -> Stepper {
        Stepper::new(Arc::clone(&p.system), StepConfig::new(dt, p.spec.example.default_substeps()).unwrap()).unwrap()
    }

    #[test]
    fn first_step_stays_close_to_exact_interface_values() {
        let p = build_problem(&ProblemSpec::new(Example::One)).unwrap();
        let dt = 1e-4;
        let s = stepper(&p, dt);
        let (half, _) = s.step1(&p.exact_state(0.0).unwrap()).unwrap();
        let ex = &p.exact.interfaces[0];
        let (pe, qe) = (ex.pressure.value(dt), ex.flow.value(dt));
        assert!((pe - 1035.7589).abs() < 0.5);
        assert!((qe - 4.0).abs() < 1e-2);
        let got = half.interfaces[0];
        assert!((got.pressure - pe).abs() < 1e-2 * pe);
        assert!((got.flow - qe).abs() < 1e-2 * qe);
    }

    #[test]
    fn zero_state_without_forcing_stays_zero() {
        let p = coarse(Example::Two, Forcing::Zero);
        let s = stepper(&p, 0.01);
        let zero = CoupledState::zeros(&p.system, 0.0);
        let end = s.run(zero.clone(), 5, &mut []).unwrap();
        assert!(end.velocity.iter().flatten().all(|v| *v == 0.0));
        assert!(end.pressure.iter().flatten().all(|v| *v == 0.0));
        assert!(end.circuits.iter().all(|y| y.iter().all(|v| *v == 0.0)));
        assert!((end.t - 0.05).abs() < 1e-15);
    }

    #[test]
    fn charged_capacitor_drives_flow_into_the_channel() {
        let p = coarse(Example::One, Forcing::Zero);
        let s = stepper(&p, 0.01);
        let mut st = CoupledState::zeros(&p.system, 0.0);
        st.circuits[0][0] = 50.0;
        let (half, balance) = s.step1(&st).unwrap();
        let i = half.interfaces[0];
        assert!(i.node_pressure > 0.0);
        assert!(i.flow < 0.0);
        assert!(balance.relative_residual() < 1e-8);
    }

    #[test]
    fn step1_keeps_interior_circuit_entries_and_step2_keeps_fields() {
        let p = coarse(Example::Three, Forcing::Exact);
        let s = stepper(&p, 0.01);
        let st = p.exact_state(0.0).unwrap();
        let (half, _) = s.step1(&st).unwrap();
        assert_eq!(half.circuits[0][2].to_bits(), st.circuits[0][2].to_bits());
        let full = s.step2(&half, st.t).unwrap();
        assert_eq!(full.velocity, half.velocity);
        assert_eq!(full.pressure, half.pressure);
        assert_eq!(full.interfaces, half.interfaces);
        assert_ne!(full.circuits[0][2], half.circuits[0][2]);
    }

    #[test]
    fn recorded_interface_values_are_consistent() {
        let p = coarse(Example::Two, Forcing::Exact);
        let s = stepper(&p, 0.01);
        let mut st = p.exact_state(0.0).unwrap();
        for n in 0..5 {
            let (next, rec) = s.advance(&st, n + 1).unwrap();
            for (b, bind) in p.system.bindings.iter().enumerate() {
                let i = rec.interfaces[b];
                let phi = p.system.flux_vector(bind);
                let q: f64 = phi.iter().zip(&next.velocity[bind.domain]).map(|(a, v)| a * v).sum();
                assert!((q - i.flow).abs() < 1e-9 * i.flow.abs().max(1.0));
                let r = p.system.connection(bind).resistance;
                assert!((i.pressure - i.node_pressure - r * i.flow).abs() < 1e-9 * i.pressure.abs());
            }
            assert!(rec.step1_balance.relative_residual() < 1e-8);
            st = next;
        }
    }

    #[test]
    fn inert_circuit_leaves_state_unchanged_in_step2() {
        let rect = RectDomain::new(10.0, 2.0).unwrap();
        let id = InterfaceId::new(1, 1, 1);
        let layout = BoundaryLayout::channel(BoundaryTag::NeumannExternal, BoundaryTag::Interface(id));
        let mesh = build_rect_mesh(rect, 4, 2, &layout).unwrap();
        let dom = DomainModel::new(1, mesh, 1.0, 1.0).unwrap();
        let circuit = CircuitSpec::new(
            "inert",
            vec!["pi".into(), "w".into()],
            Arc::new(|_, _| DMatrix::zeros(2, 2)),
            Arc::new(|_, _| DVector::from_element(2, 1.0)),
            Arc::new(|_, _| DVector::zeros(2)),
            None,
            vec![Connection {
                interface: id,
                resistance: 1.0,
                capacitance: 1.0,
                pi_index: 0,
            }],
            true,
        )
        .unwrap();
        let sys = Arc::new(CoupledSystem::new(vec![dom], vec![circuit]).unwrap());
        let s = Stepper::new(Arc::clone(&sys), StepConfig::new(0.1, 4).unwrap()).unwrap();
        let mut st = CoupledState::zeros(&sys, 0.0);
        st.circuits[0] = DVector::from_vec(vec![3.0, -2.0]);
        st.t = 0.1;
        let after = s.step2(&st, 0.0).unwrap();
        assert_eq!(after, st);
    }

    #[test]
    fn zero_steps_return_the_initial_state() {
        let p = coarse(Example::One, Forcing::Exact);
        let s = stepper(&p, 0.01);
        let st = p.exact_state(0.0).unwrap();
        assert_eq!(s.run(st.clone(), 0, &mut []).unwrap(), st);
    }

    #[test]
    fn unbound_interface_is_rejected() {
        let rect = RectDomain::new(10.0, 2.0).unwrap();
        let layout = BoundaryLayout::channel(
            BoundaryTag::NeumannExternal,
            BoundaryTag::Interface(InterfaceId::new(1, 1, 1)),
        );
        let mesh = build_rect_mesh(rect, 4, 2, &layout).unwrap();
        let dom = DomainModel::new(1, mesh, 1.0, 1.0).unwrap();
        assert!(CoupledSystem::new(vec![dom], vec![]).is_err());
    }

    #[test]
    fn lagged_circuit_pressure_changes_the_solution() {
        let p = coarse(Example::One, Forcing::Exact);
        let mut cfg = StepConfig::new(0.01, 5).unwrap();
        let st = p.exact_state(0.0).unwrap();
        let implicit = Stepper::new(Arc::clone(&p.system), cfg).unwrap().step1(&st).unwrap().0;
        cfg.coupling = CouplingMode::ExplicitCircuitPressure;
        let lagged = Stepper::new(Arc::clone(&p.system), cfg).unwrap().step1(&st).unwrap().0;
        assert_ne!(implicit.interfaces[0].flow, lagged.interfaces[0].flow);
    }

    #[test]
    fn reconfigure_refactors_only_on_new_step() {
        let p = coarse(Example::One, Forcing::Exact);
        let mut s = stepper(&p, 0.01);
        let st = p.exact_state(0.0).unwrap();
        let a = s.step1(&st).unwrap().0;
        let mut cfg = *s.config();
        cfg.substeps = 7;
        s.reconfigure(cfg).unwrap();
        assert_eq!(s.step1(&st).unwrap().0, a);
        cfg.dt = 0.02;
        s.reconfigure(cfg).unwrap();
        assert!((s.step1(&st).unwrap().0.t - 0.02).abs() < 1e-15);
        assert!(StepConfig::new(0.0, 1).is_err());
        assert!(StepConfig::new(0.1, 0).is_err());
    }
}
