//! Lumped hydraulic circuits: `dy/dt = A(y,t) y + s(y,t) + b(Q)`, with a
//! diagonal energy weight `U(y,t)` and resistive–capacitive connections to
//! Stokes regions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::InterfaceId;
use crate::params::ParamSet;

pub type MatrixFn = Arc<dyn Fn(&DVector<f64>, f64) -> DMatrix<f64> + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + Send + Sync>;
/// Time derivative of diag(U) given the state, its time derivative and time.
pub type RateFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, f64) -> DVector<f64> + Send + Sync>;
/// Scalar signal of time, such as a generator pressure.
pub type Signal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub fn zero_signal() -> Signal {
    Arc::new(|_| 0.0)
}

/// Resistive connection between a Stokes interface and a capacitor node of a
/// circuit. The nodal pressure sits at `pi_index` of the circuit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Connection {
    pub interface: InterfaceId,
    pub resistance: f64,
    pub capacitance: f64,
    pub pi_index: usize,
}

#[derive(Clone)]
pub struct CircuitSpec {
    name: String,
    state_labels: Vec<String>,
    a: MatrixFn,
    u_diag: VectorFn,
    source: VectorFn,
    du_dt: Option<RateFn>,
    connections: Vec<Connection>,
    constant: bool,
}

impl fmt::Debug for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircuitSpec")
            .field("name", &self.name)
            .field("state_labels", &self.state_labels)
            .field("connections", &self.connections)
            .field("constant", &self.constant)
            .finish_non_exhaustive()
    }
}

/// Which state the nonlinear coefficients are frozen at during Step-2
/// subcycling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoefficientFreeze {
    /// Re-evaluate at the start of every substep.
    #[default]
    SubstepStart,
    /// Evaluate once at the start of the global step.
    StepStart,
}

impl CircuitSpec {
    /// `state_labels` fixes the dimension. `constant` declares that `A` and
    /// `U` depend on neither state nor time.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        state_labels: Vec<String>,
        a: MatrixFn,
        u_diag: VectorFn,
        source: VectorFn,
        du_dt: Option<RateFn>,
        connections: Vec<Connection>,
        constant: bool,
    ) -> Result<Self> {
        let dim = state_labels.len();
        if dim == 0 {
            return Err(Error::InvalidArgument("circuit needs at least one state".into()));
        }
        let mut seen = vec![false; dim];
        for c in &connections {
            if c.pi_index >= dim || seen[c.pi_index] {
                return Err(Error::InvalidArgument(format!(
                    "connection {} has invalid or repeated state index {}",
                    c.interface, c.pi_index
                )));
            }
            seen[c.pi_index] = true;
            if !(c.resistance > 0.0 && c.capacitance > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "connection {} needs positive R and C, got R={}, C={}",
                    c.interface, c.resistance, c.capacitance
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            state_labels,
            a,
            u_diag,
            source,
            du_dt,
            connections,
            constant,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.state_labels.len()
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    pub fn connections(&self) -> &[Connection] {
        &self.connections
    }

    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn a(&self, y: &DVector<f64>, t: f64) -> DMatrix<f64> {
        (self.a)(y, t)
    }

    /// Diagonal of the energy weight `U`.
    pub fn u_diag(&self, y: &DVector<f64>, t: f64) -> DVector<f64> {
        (self.u_diag)(y, t)
    }

    pub fn source(&self, y: &DVector<f64>, t: f64) -> DVector<f64> {
        (self.source)(y, t)
    }

    /// Copy of this circuit with every internal source switched off.
    pub fn without_sources(&self) -> Self {
        let mut out = self.clone();
        out.source = Arc::new(|y: &DVector<f64>, _| DVector::zeros(y.len()));
        out
    }

    /// Right-hand side `A y + s` of the interior dynamics.
    pub fn rate(&self, y: &DVector<f64>, t: f64) -> DVector<f64> {
        self.a(y, t) * y + self.source(y, t)
    }

    /// `yᵀ U y`.
    pub fn weighted_norm_sq(&self, y: &DVector<f64>, t: f64) -> f64 {
        let u = self.u_diag(y, t);
        y.iter().zip(u.iter()).map(|(v, w)| w * v * v).sum()
    }

    /// Rate of change of diag(U) along the interior dynamics.
    pub fn u_rate(&self, y: &DVector<f64>, t: f64, dt_fd: f64) -> DVector<f64> {
        if self.constant {
            return DVector::zeros(self.dim());
        }
        let ydot = self.rate(y, t);
        if let Some(f) = &self.du_dt {
            return f(y, &ydot, t);
        }
        let plus = y + &ydot * dt_fd;
        let minus = y - &ydot * dt_fd;
        (self.u_diag(&plus, t + dt_fd) - self.u_diag(&minus, t - dt_fd)) / (2.0 * dt_fd)
    }
}

/// Dissipation tensor `B = -U A - ½ dU/dt`.
pub fn eval_b(spec: &CircuitSpec, y: &DVector<f64>, t: f64, dt_fd: f64) -> DMatrix<f64> {
    let a = spec.a(y, t);
    let u = spec.u_diag(y, t);
    let du = spec.u_rate(y, t, dt_fd);
    let mut b = -DMatrix::from_diagonal(&u) * a;
    for i in 0..spec.dim() {
        b[(i, i)] -= 0.5 * du[i];
    }
    b
}

/// Advances `dy/dt = A y + s` from `t` over `n_sub` implicit Euler substeps of
/// length `dt2`, with coefficients evaluated at the frozen state and the new
/// time.
pub fn step2_integrate(
    spec: &CircuitSpec,
    y0: &DVector<f64>,
    t: f64,
    dt2: f64,
    n_sub: usize,
    freeze: CoefficientFreeze,
) -> Result<DVector<f64>> {
    if !(dt2 > 0.0) {
        return Err(Error::InvalidArgument(format!("substep must be positive, got {dt2}")));
    }
    let n = spec.dim();
    let mut y = y0.clone();
    let identity = DMatrix::<f64>::identity(n, n);
    for j in 0..n_sub {
        let t_new = t + (j + 1) as f64 * dt2;
        let frozen = match freeze {
            CoefficientFreeze::SubstepStart => &y,
            CoefficientFreeze::StepStart => y0,
        };
        let a = spec.a(frozen, t_new);
        let s = spec.source(frozen, t_new);
        let lhs = &identity - a * dt2;
        let rhs = &y + s * dt2;
        y = lhs.lu().solve(&rhs).ok_or_else(|| {
            Error::SingularCircuit(format!(
                "{}: I - dt A is singular at t = {t_new}",
                spec.name
            ))
        })?;
    }
    Ok(y)
}

fn labels(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Outlet resistance `R_a(π)` of the two-state circuit.
pub fn example1_resistance(p: &ParamSet, nonlinear: bool, pi: f64) -> f64 {
    let q = &p.example1;
    if nonlinear {
        q.ra_bar + q.alpha0 / (1.0 + q.alpha1 * (-q.alpha2 * pi).exp())
    } else {
        q.ra_bar
    }
}

/// Compliance `C_a(ω)` of the two-state circuit.
pub fn example1_compliance(p: &ParamSet, nonlinear: bool, volume: f64) -> f64 {
    let q = &p.example1;
    if nonlinear {
        q.ca_bar / (1.0 + q.gamma1 * volume)
    } else {
        q.ca_bar
    }
}

/// State `[π, ω]`: capacitor pressure at the outlet and stored volume of the
/// nonlinear compliance, driven by a generator through `R_b`.
pub fn example1_circuit(p: &ParamSet, nonlinear: bool, generator: Signal) -> Result<CircuitSpec> {
    let q = p.example1.clone();
    let pa = p.clone();
    let a: MatrixFn = Arc::new(move |y, _| {
        let ra = example1_resistance(&pa, nonlinear, y[0]);
        let ca = example1_compliance(&pa, nonlinear, y[1]);
        let c = pa.example1.c_outlet;
        let rb = pa.example1.rb;
        DMatrix::from_row_slice(
            2,
            2,
            &[
                -1.0 / (ra * c),
                1.0 / (ra * c * ca),
                1.0 / ra,
                -1.0 / (ra * ca) - 1.0 / (rb * ca),
            ],
        )
    });
    let pu = p.clone();
    let u: VectorFn = Arc::new(move |y, _| {
        let ca = example1_compliance(&pu, nonlinear, y[1]);
        DVector::from_vec(vec![pu.example1.c_outlet, 1.0 / ca])
    });
    let rb = q.rb;
    let source: VectorFn = Arc::new(move |_, t| DVector::from_vec(vec![0.0, generator(t) / rb]));
    let gamma = q.gamma1;
    let ca_bar = q.ca_bar;
    let du: RateFn = Arc::new(move |_, ydot, _| {
        DVector::from_vec(vec![0.0, if nonlinear { gamma * ydot[1] / ca_bar } else { 0.0 }])
    });
    CircuitSpec::new(
        "circuit 1",
        labels(&["pi_11_1", "omega_11"]),
        a,
        u,
        source,
        Some(du),
        vec![Connection {
            interface: InterfaceId::new(1, 1, 1),
            resistance: q.r_outlet,
            capacitance: q.c_outlet,
            pi_index: 0,
        }],
        !nonlinear,
    )
}

/// State `[π₁, π₂, ω]`: capacitor pressures at both channel connections and
/// the inductor flow between them.
pub fn example2_circuit(p: &ParamSet, generator: Signal) -> Result<CircuitSpec> {
    let q = p.example2.clone();
    let a_mat = DMatrix::from_row_slice(
        3,
        3,
        &[
            0.0,
            0.0,
            -1.0 / q.c_first,
            0.0,
            -1.0 / (q.c_second * q.rb),
            1.0 / q.c_second,
            1.0 / q.la,
            -1.0 / q.la,
            -q.ra / q.la,
        ],
    );
    let u_vec = DVector::from_vec(vec![q.c_first, q.c_second, q.la]);
    let scale = 1.0 / (q.c_second * q.rb);
    CircuitSpec::new(
        "circuit 1",
        labels(&["pi_11_1", "pi_21_1", "omega_11"]),
        Arc::new(move |_, _| a_mat.clone()),
        Arc::new(move |_, _| u_vec.clone()),
        Arc::new(move |_, t| DVector::from_vec(vec![0.0, generator(t) * scale, 0.0])),
        None,
        vec![
            Connection {
                interface: InterfaceId::new(1, 1, 1),
                resistance: q.r_first,
                capacitance: q.c_first,
                pi_index: 0,
            },
            Connection {
                interface: InterfaceId::new(2, 1, 1),
                resistance: q.r_second,
                capacitance: q.c_second,
                pi_index: 1,
            },
        ],
        true,
    )
}

/// State `[π₁, π₂, ω]` of the closed loop: capacitor pressures at outlet and
/// inlet and the return flow through `R_c`, `L_c`.
pub fn example3_circuit(p: &ParamSet, generator_a: Signal, generator_b: Signal) -> Result<CircuitSpec> {
    let q = p.example3.clone();
    let a_mat = DMatrix::from_row_slice(
        3,
        3,
        &[
            -1.0 / (q.ra * q.c_outlet),
            0.0,
            -1.0 / q.c_outlet,
            0.0,
            -1.0 / (q.rb * q.c_inlet),
            1.0 / q.c_inlet,
            1.0 / q.lc,
            -1.0 / q.lc,
            -q.rc / q.lc,
        ],
    );
    let u_vec = DVector::from_vec(vec![q.c_outlet, q.c_inlet, q.lc]);
    let sa = 1.0 / (q.ra * q.c_outlet);
    let sb = 1.0 / (q.rb * q.c_inlet);
    CircuitSpec::new(
        "circuit 1",
        labels(&["pi_11_1", "pi_11_2", "omega_11"]),
        Arc::new(move |_, _| a_mat.clone()),
        Arc::new(move |_, _| u_vec.clone()),
        Arc::new(move |_, t| DVector::from_vec(vec![generator_a(t) * sa, generator_b(t) * sb, 0.0])),
        None,
        vec![
            Connection {
                interface: InterfaceId::new(1, 1, 1),
                resistance: q.r_outlet,
                capacitance: q.c_outlet,
                pi_index: 0,
            },
            Connection {
                interface: InterfaceId::new(1, 1, 2),
                resistance: q.r_inlet,
                capacitance: q.c_inlet,
                pi_index: 1,
            },
        ],
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_example1() -> CircuitSpec {
        example1_circuit(&ParamSet::default(), false, zero_signal()).unwrap()
    }

    fn scalar_decay() -> CircuitSpec {
        CircuitSpec::new(
            "decay",
            labels(&["y"]),
            Arc::new(|_, _| DMatrix::from_element(1, 1, -1.0)),
            Arc::new(|_, _| DVector::from_element(1, 1.0)),
            Arc::new(|_, _| DVector::zeros(1)),
            None,
            vec![],
            true,
        )
        .unwrap()
    }

    #[test]
    fn constant_example1_b_matrix() {
        let spec = constant_example1();
        let y = DVector::from_vec(vec![1.0, 2.0]);
        let b = eval_b(&spec, &y, 0.3, 1e-6);
        let expected = DMatrix::from_row_slice(2, 2, &[0.1, -10.0, -10.0, 2000.0]);
        assert!((b.clone() - expected).abs().max() < 1e-10);
        let eig = b.symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&e| e > 0.0));
    }

    #[test]
    fn zero_a_gives_zero_b() {
        let spec = CircuitSpec::new(
            "inert",
            labels(&["a", "b"]),
            Arc::new(|_, _| DMatrix::zeros(2, 2)),
            Arc::new(|_, _| DVector::from_vec(vec![1.0, 3.0])),
            Arc::new(|_, _| DVector::zeros(2)),
            None,
            vec![],
            true,
        )
        .unwrap();
        let b = eval_b(&spec, &DVector::from_vec(vec![1.0, -1.0]), 0.0, 1e-6);
        assert_eq!(b, DMatrix::zeros(2, 2));
    }

    #[test]
    fn example1_coefficients() {
        let p = ParamSet::default();
        let spec = constant_example1();
        let a = spec.a(&DVector::from_vec(vec![0.0, 0.0]), 0.0);
        assert!((a[(0, 0)] + 100.0).abs() < 1e-12);
        assert_eq!(example1_resistance(&p, true, 0.0), 15.0);
        let mut q = p.clone();
        q.example1.gamma1 = 0.0;
        assert_eq!(example1_compliance(&q, true, 123.0), q.example1.ca_bar);
    }

    #[test]
    fn example2_quadratic_form() {
        let spec = example2_circuit(&ParamSet::default(), zero_signal()).unwrap();
        let a = spec.a(&DVector::zeros(3), 0.0);
        assert!((a[(2, 0)] - 1000.0 / 3.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let y = DVector::from_fn(3, |_, _| rng.gen_range(-10.0..10.0));
            let b = eval_b(&spec, &y, 0.0, 1e-6);
            let form = (y.transpose() * &b * &y)[(0, 0)];
            let expected = 10.0 * y[2] * y[2] + y[1] * y[1] / 10.0;
            assert!((form - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn example3_quadratic_form() {
        let spec = example3_circuit(&ParamSet::default(), zero_signal(), zero_signal()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let y = DVector::from_fn(3, |_, _| rng.gen_range(-10.0..10.0));
            let b = eval_b(&spec, &y, 0.0, 1e-6);
            let form = (y.transpose() * &b * &y)[(0, 0)];
            let expected = y[0] * y[0] / 10.0 + y[1] * y[1] / 10.0 + 70.0 * y[2] * y[2];
            assert!((form - expected).abs() < 1e-9 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn generator_only_enters_source() {
        let spec = example2_circuit(&ParamSet::default(), Arc::new(|t| 2.0 * t)).unwrap();
        let s = spec.source(&DVector::zeros(3), 1.5);
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 3.0 / (0.001 * 10.0)).abs() < 1e-9);
        assert_eq!(s[2], 0.0);
    }

    #[test]
    fn inert_circuit_is_unchanged() {
        let spec = CircuitSpec::new(
            "inert",
            labels(&["a"]),
            Arc::new(|_, _| DMatrix::zeros(1, 1)),
            Arc::new(|_, _| DVector::from_element(1, 1.0)),
            Arc::new(|_, _| DVector::zeros(1)),
            None,
            vec![],
            true,
        )
        .unwrap();
        let y0 = DVector::from_element(1, 4.2);
        let y = step2_integrate(&spec, &y0, 0.0, 0.3, 7, CoefficientFreeze::default()).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn scalar_implicit_euler_by_hand() {
        let y = step2_integrate(
            &scalar_decay(),
            &DVector::from_element(1, 1.0),
            0.0,
            0.1,
            1,
            CoefficientFreeze::default(),
        )
        .unwrap();
        assert!((y[0] - 1.0 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn substep_energy_decays() {
        let spec = constant_example1();
        for dt2 in [1e-3, 1.0, 100.0] {
            let mut y = DVector::from_vec(vec![1.0, 0.01]);
            let mut e = spec.weighted_norm_sq(&y, 0.0);
            assert!((e - 0.011).abs() < 1e-15);
            for _ in 0..10 {
                y = step2_integrate(&spec, &y, 0.0, dt2, 1, CoefficientFreeze::default()).unwrap();
                let next = spec.weighted_norm_sq(&y, 0.0);
                assert!(next <= e * (1.0 + 1e-14));
                e = next;
            }
        }
    }

    #[test]
    fn finite_difference_matches_analytic_u_rate() {
        let p = ParamSet::default();
        let gen: Signal = Arc::new(|t| 100.0 * (t * 3.0).sin());
        let analytic = example1_circuit(&p, true, gen.clone()).unwrap();
        let mut numeric = analytic.clone();
        numeric.du_dt = None;
        let y = DVector::from_vec(vec![900.0, 7.0]);
        let a = analytic.u_rate(&y, 0.4, 2e-6);
        let n = numeric.u_rate(&y, 0.4, 2e-6);
        assert!((a[1] - n[1]).abs() < 1e-5 * a[1].abs().max(1.0));
    }

    #[test]
    fn invalid_connections_rejected() {
        let bad = CircuitSpec::new(
            "bad",
            labels(&["a"]),
            Arc::new(|_, _| DMatrix::zeros(1, 1)),
            Arc::new(|_, _| DVector::from_element(1, 1.0)),
            Arc::new(|_, _| DVector::zeros(1)),
            None,
            vec![Connection {
                interface: InterfaceId::new(1, 1, 1),
                resistance: 1.0,
                capacitance: 1.0,
                pi_index: 3,
            }],
            true,
        );
        assert!(bad.is_err());
    }
}
