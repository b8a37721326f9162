//! Assembled benchmark problems: meshes, circuits, loads and initial data.

use std::sync::Arc;

use crate::analysis::ExactInterpolant;
use crate::circuit::{example1_circuit, example2_circuit, example3_circuit, zero_signal, Signal};
use crate::error::{Error, Result};
use crate::mesh::{build_rect_mesh, BoundaryLayout, BoundaryTag, InterfaceId, RectDomain};
use crate::oracles::{exact_solution, ExactSolutionSet, Harmonic};
use crate::params::{Example, ParamSet};
use crate::splitting::{CoupledState, CoupledSystem, DomainModel};

/// Which loads drive the problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Forcing {
    /// Body forces, external pressures and generators of the exact solution.
    #[default]
    Exact,
    /// Everything switched off.
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub example: Example,
    pub nonlinear: bool,
    pub params: ParamSet,
    pub nx: usize,
    pub ny: usize,
    pub forcing: Forcing,
}

impl ProblemSpec {
    pub fn new(example: Example) -> Self {
        Self {
            example,
            nonlinear: false,
            params: ParamSet::default(),
            nx: 100,
            ny: 20,
            forcing: Forcing::Exact,
        }
    }
}

pub struct Problem {
    pub spec: ProblemSpec,
    pub system: Arc<CoupledSystem>,
    pub exact: ExactSolutionSet,
}

fn harmonic_signal(h: Harmonic) -> Signal {
    Arc::new(move |t| h.value(t))
}

/// Boundary layouts of the channels: outlet interfaces on the right, inlet
/// interfaces and external traction on the left, walls top and bottom.
fn layouts(example: Example) -> Vec<BoundaryLayout> {
    let neumann = BoundaryTag::NeumannExternal;
    let iface = |l, m, k| BoundaryTag::Interface(InterfaceId::new(l, m, k));
    match example {
        Example::One => vec![BoundaryLayout::channel(neumann, iface(1, 1, 1))],
        Example::Two => vec![
            BoundaryLayout::channel(neumann, iface(1, 1, 1)),
            BoundaryLayout::channel(iface(2, 1, 1), neumann),
        ],
        Example::Three => vec![BoundaryLayout::channel(iface(1, 1, 2), iface(1, 1, 1))],
    }
}

pub fn build_problem(spec: &ProblemSpec) -> Result<Problem> {
    if spec.nonlinear && spec.example != Example::One {
        return Err(Error::Config(format!(
            "the nonlinear circuit exists only for example 1, not {}",
            spec.example
        )));
    }
    spec.params.validate(spec.example)?;
    let p = &spec.params;
    let exact = exact_solution(spec.example, p, spec.nonlinear)?;
    let c = &p.common;
    let rect = RectDomain::new(c.length, c.height)?;
    let mut domains = Vec::new();
    for (i, (layout, ex)) in layouts(spec.example).into_iter().zip(&exact.domains).enumerate() {
        let mesh = build_rect_mesh(rect, spec.nx, spec.ny, &layout)?;
        let mut dom = DomainModel::new(i + 1, mesh, c.rho, c.mu)?;
        if spec.forcing == Forcing::Exact {
            for term in ex.force_terms() {
                let shape = term.shape.clone();
                dom = dom.with_force_term(harmonic_signal(term.amplitude), move |x| shape(x));
            }
            if let Some(pbar) = ex.external_pressure {
                dom = dom.with_external_pressure(harmonic_signal(pbar));
            }
        }
        domains.push(dom);
    }
    let generator = |name: &str| -> Result<Signal> {
        match spec.forcing {
            Forcing::Zero => Ok(zero_signal()),
            Forcing::Exact => exact
                .generator(name)
                .ok_or_else(|| Error::Oracle(format!("missing generator {name}"))),
        }
    };
    let circuit = match spec.example {
        Example::One => example1_circuit(p, spec.nonlinear, generator("p_tilde")?)?,
        Example::Two => example2_circuit(p, generator("p_tilde")?)?,
        Example::Three => example3_circuit(p, generator("p_tilde_a")?, generator("p_tilde_b")?)?,
    };
    let mut system = CoupledSystem::new(domains, vec![circuit])?;
    system.fd_step = 1e-6 * c.period();
    Ok(Problem {
        spec: spec.clone(),
        system: Arc::new(system),
        exact,
    })
}

impl Problem {
    /// Discrete exact state at time `t`, used as initial data.
    pub fn exact_state(&self, t: f64) -> Result<CoupledState> {
        ExactInterpolant::new(&self.system, &self.exact)?.state_at(&self.system, &self.exact, t)
    }

    pub fn period(&self) -> f64 {
        self.exact.period()
    }
}
