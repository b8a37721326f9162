//! Self-checks of the exact solutions against the assembled system.

use std::fmt;

use nalgebra::DVector;

use crate::analysis::ExactInterpolant;
use crate::circuit::{example1_compliance, example1_resistance};
use crate::error::{Error, Result};
use crate::fem::quadrature::gauss3_unit;
use crate::mesh::BoundaryTag;
use crate::oracles::ExactSolutionSet;
use crate::params::{Example, ParamSet};
use crate::splitting::CoupledSystem;

/// Threshold for circuit and algebraic identities.
pub const IDENTITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub detail: Option<String>,
}

impl ResidualRow {
    fn new(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            detail: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value <= self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidualReport {
    pub rows: Vec<ResidualRow>,
}

impl ResidualReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(ResidualRow::passed)
    }

    pub fn row(&self, name: &str) -> Option<&ResidualRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ResidualRow> {
        self.rows.iter().filter(|r| !r.passed())
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<34} {:>12} {:>12}  status", "check", "residual", "threshold")?;
        for r in &self.rows {
            write!(
                f,
                "{:<34} {:>12.3e} {:>12.3e}  {}",
                r.name,
                r.value,
                r.threshold,
                if r.passed() { "PASS" } else { "FAIL" }
            )?;
            if let Some(d) = &r.detail {
                write!(f, "  ({d})")?;
            }
            writeln!(f)?;
        }
        write!(f, "overall: {}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Row for the sign and range constraints on the parameters.
pub fn parameter_row(params: &ParamSet, example: Example) -> ResidualRow {
    let v = params.violations(example);
    let mut row = ResidualRow::new("parameter validity", v.len() as f64, 0.0);
    if !v.is_empty() {
        row.detail = Some(v.join("; "));
    }
    row
}

/// `|a − b| / scale`, with the scale taken from the magnitudes of the terms.
fn relative(residual: f64, terms: &[f64]) -> f64 {
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    if scale == 0.0 {
        residual.abs()
    } else {
        residual.abs() / scale
    }
}

/// `Δx²` of the coarser mesh direction, the size of the expected weak-form
/// consistency error.
fn mesh_size_sq(system: &CoupledSystem) -> f64 {
    system
        .domains
        .iter()
        .map(|d| {
            let dom = d.mesh.domain();
            let cells = (d.mesh.num_triangles() / 2) as f64;
            let h = (dom.area() / cells).sqrt();
            h * h
        })
        .fold(0.0, f64::max)
}

/// Checks the exact solution at `times` against the loads, circuits and
/// operators of `system`:
/// circuit ODE residual, interface relation `P = π + RQ`, flow rate against
/// quadrature of the exact velocity, example-specific identities, and the
/// weak-form residual of the interpolated fields.
pub fn verify_exact(system: &CoupledSystem, exact: &ExactSolutionSet, times: &[f64]) -> Result<ResidualReport> {
    if times.is_empty() {
        return Err(Error::InvalidArgument("no sample times given".into()));
    }
    if system.circuits.len() != 1 {
        return Err(Error::InvalidArgument("exact solutions describe exactly one circuit".into()));
    }
    let spec = &system.circuits[0];
    let mut report = ResidualReport::default();
    report.rows.push(parameter_row(&exact.params, exact.example));

    let mut ode: f64 = 0.0;
    let mut algebraic: f64 = 0.0;
    let mut flux: f64 = 0.0;
    for &t in times {
        let y = DVector::from_vec(exact.circuit_state_at(t));
        let dy = exact.circuit_rate_at(t);
        let a = spec.a(&y, t);
        let ay = &a * &y;
        let s = spec.source(&y, t);
        let mut b = DVector::zeros(spec.dim());
        for bind in &system.bindings {
            let conn = system.connection(bind);
            let ie = exact
                .interface(bind.id)
                .ok_or_else(|| Error::Oracle(format!("no exact data for interface {}", bind.id)))?;
            b[conn.pi_index] += ie.flow.value(t) / conn.capacitance;
            let (p, q, pi) = (ie.pressure.value(t), ie.flow.value(t), ie.node_pressure.value(t));
            let r = conn.resistance * q;
            algebraic = algebraic.max(relative(p - pi - r, &[p, pi, r]));
        }
        for i in 0..spec.dim() {
            let mut terms = vec![dy[i], s[i], b[i]];
            terms.extend((0..spec.dim()).map(|j| a[(i, j)] * y[j]));
            ode = ode.max(relative(dy[i] - ay[i] - s[i] - b[i], &terms));
        }
        for bind in &system.bindings {
            let dom = &system.domains[bind.domain];
            let dex = &exact.domains[bind.domain];
            let q_exact = exact.interface(bind.id).expect("checked above").flow.value(t);
            let mut q_quad = 0.0;
            for (e, be) in dom.mesh.boundary_edges() {
                if be.tag != BoundaryTag::Interface(bind.id) {
                    continue;
                }
                let [a0, a1] = dom.mesh.edges()[e].vertices;
                let (p0, p1) = (dom.mesh.vertices()[a0], dom.mesh.vertices()[a1]);
                let n = be.side.outward_normal();
                let len = dom.mesh.edge_length(e);
                const PIECES: usize = 8;
                for k in 0..PIECES {
                    for (s, w) in gauss3_unit() {
                        let u = (k as f64 + s) / PIECES as f64;
                        let x = [p0[0] + u * (p1[0] - p0[0]), p0[1] + u * (p1[1] - p0[1])];
                        let v = dex.velocity_at(x, t);
                        q_quad += w * len / PIECES as f64 * (v[0] * n[0] + v[1] * n[1]);
                    }
                }
            }
            flux = flux.max(relative(q_exact - q_quad, &[q_exact]));
        }
    }
    report.rows.push(ResidualRow::new("circuit ODE residual", ode, IDENTITY_TOLERANCE));
    report.rows.push(ResidualRow::new("interface relation P - pi - RQ", algebraic, IDENTITY_TOLERANCE));
    report.rows.push(ResidualRow::new("flow rate vs velocity profile", flux, IDENTITY_TOLERANCE));

    let p = &exact.params;
    match exact.example {
        Example::One => {
            let mut worst: f64 = 0.0;
            for &t in times {
                let pi = exact.circuit_state[0].value(t);
                let dpi = exact.circuit_state[0].rate(t);
                let w = exact.circuit_state[1].value(t);
                let q = exact.interfaces[0].flow.value(t);
                let ra = example1_resistance(p, exact.nonlinear, pi);
                let ca = example1_compliance(p, exact.nonlinear, w);
                let g = pi - ra * (q - p.example1.c_outlet * dpi);
                worst = worst.max(relative(w - ca * g, &[w, ca * g]));
            }
            report.rows.push(ResidualRow::new("volume-pressure relation", worst, IDENTITY_TOLERANCE));
        }
        Example::Two => {
            let mut worst: f64 = 0.0;
            let r = p.example2.r_second;
            let ie = &exact.interfaces[1];
            for &t in times {
                let (pp, q, pi) = (ie.pressure.value(t), ie.flow.value(t), ie.node_pressure.value(t));
                worst = worst.max(relative(pp - r * q - pi, &[pp, r * q, pi]));
            }
            report.rows.push(ResidualRow::new("pi_21_1 reconstruction", worst, IDENTITY_TOLERANCE));
        }
        Example::Three => {
            let q = &p.example3;
            let mut mass: f64 = 0.0;
            let mut inductor: f64 = 0.0;
            for &t in times {
                let q1 = exact.interfaces[0].flow.value(t);
                let q2 = exact.interfaces[1].flow.value(t);
                mass = mass.max(relative(q1 + q2, &[q1, q2]));
                let pi1 = exact.circuit_state[0].value(t);
                let pi2 = exact.circuit_state[1].value(t);
                let w = exact.circuit_state[2].value(t);
                let dw = exact.circuit_state[2].rate(t);
                let terms = [q.lc * dw, pi1, pi2, q.rc * w];
                inductor = inductor.max(relative(q.lc * dw - pi1 + pi2 + q.rc * w, &terms));
            }
            report.rows.push(ResidualRow::new("loop mass balance Q1 + Q2", mass, IDENTITY_TOLERANCE));
            report.rows.push(ResidualRow::new("return-branch inductor law", inductor, IDENTITY_TOLERANCE));
        }
    }

    let interp = ExactInterpolant::new(system, exact)?;
    let mut weak: f64 = 0.0;
    for &t in times {
        let st = interp.state_at(system, exact, t)?;
        for (d, dom) in system.domains.iter().enumerate() {
            let dex = &exact.domains[d];
            let rate = dex.amplitude.derivative().value(t);
            let amp = dex.amplitude.value(t);
            let u = &st.velocity[d];
            let du: Vec<f64> = if amp != 0.0 {
                u.iter().map(|v| v * rate / amp).collect()
            } else {
                let mut v = dom.space.interpolate_velocity(&dom.mesh, |x| dex.velocity_rate_at(x, t));
                for &c in dom.space.constrained_dofs() {
                    v[c] = 0.0;
                }
                v
            };
            let inertia = dom.ops.mass.matvec(&du);
            let viscous = dom.ops.stiffness.matvec(u);
            let grad_p = dom.ops.divergence.transpose_matvec(&st.pressure[d]);
            let mut traction = vec![0.0; u.len()];
            for (b, bind) in system.bindings.iter().enumerate() {
                if bind.domain == d {
                    let pk = st.interfaces[b].pressure;
                    for (o, phi) in traction.iter_mut().zip(system.flux_vector(bind)) {
                        *o += pk * phi;
                    }
                }
            }
            let forcing = dom.forcing(t);
            let mut res = 0.0;
            let mut scale = 0.0;
            for i in 0..u.len() {
                if dom.space.is_constrained(i) {
                    continue;
                }
                let terms = [dom.rho * inertia[i], dom.mu * viscous[i], -grad_p[i], traction[i], -forcing[i]];
                let r: f64 = terms.iter().sum();
                res += r * r;
                scale += terms.iter().map(|x| x * x).sum::<f64>();
            }
            let div = dom.ops.divergence.matvec(u);
            res += div.iter().map(|x| x * x).sum::<f64>();
            if scale > 0.0 {
                weak = weak.max((res / scale).sqrt());
            }
        }
    }
    let band = 10.0 * mesh_size_sq(system);
    report.rows.push(ResidualRow::new("weak-form residual", weak, band));
    Ok(report)
}

/// `n` equally spaced times over one period of `exact`.
pub fn sample_times(exact: &ExactSolutionSet, n: usize) -> Vec<f64> {
    let tau = exact.period();
    (0..n).map(|i| tau * i as f64 / n as f64).collect()
}
