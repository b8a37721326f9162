//! Closed-form manufactured solutions of the three benchmark problems.
//!
//! Every field is a product of a time amplitude and a fixed spatial profile:
//! `v = s(t) V(y) e₁`, `p = s(t) P(x)` with `V(y) = V₀ cos²(π y / H)` and
//! `P(x) = a₀ + a₁ e^{-k x}`. Time amplitudes are single-frequency harmonics,
//! except the volume of the nonlinear compliance, which is the root of a
//! quadratic.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use crate::circuit::{example1_compliance, example1_resistance, Signal};
use crate::error::{Error, Result};
use crate::mesh::{InterfaceId, Point};
use crate::params::{Example, ParamSet};

/// `mean + sin·sin(ωt) + cos·cos(ωt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub mean: f64,
    pub sin: f64,
    pub cos: f64,
    pub freq: f64,
}

impl Harmonic {
    pub fn new(mean: f64, sin: f64, cos: f64, freq: f64) -> Self {
        Self { mean, sin, cos, freq }
    }

    pub fn constant(value: f64, freq: f64) -> Self {
        Self::new(value, 0.0, 0.0, freq)
    }

    pub fn value(&self, t: f64) -> f64 {
        let (s, c) = (self.freq * t).sin_cos();
        self.mean + self.sin * s + self.cos * c
    }

    pub fn derivative(&self) -> Self {
        Self::new(0.0, -self.freq * self.cos, self.freq * self.sin, self.freq)
    }
}

impl Add for Harmonic {
    type Output = Harmonic;
    fn add(self, o: Harmonic) -> Harmonic {
        debug_assert_eq!(self.freq, o.freq);
        Harmonic::new(self.mean + o.mean, self.sin + o.sin, self.cos + o.cos, self.freq)
    }
}

impl Sub for Harmonic {
    type Output = Harmonic;
    fn sub(self, o: Harmonic) -> Harmonic {
        self + (-o)
    }
}

impl Neg for Harmonic {
    type Output = Harmonic;
    fn neg(self) -> Harmonic {
        self * -1.0
    }
}

impl Mul<f64> for Harmonic {
    type Output = Harmonic;
    fn mul(self, k: f64) -> Harmonic {
        Harmonic::new(k * self.mean, k * self.sin, k * self.cos, self.freq)
    }
}

/// Scalar function of time with its first derivative.
pub trait TimeFunction: Send + Sync {
    fn value(&self, t: f64) -> f64;
    fn rate(&self, t: f64) -> f64;
}

impl TimeFunction for Harmonic {
    fn value(&self, t: f64) -> f64 {
        Harmonic::value(self, t)
    }

    fn rate(&self, t: f64) -> f64 {
        self.derivative().value(t)
    }
}

pub type TimeFn = Arc<dyn TimeFunction>;

fn signal_of(f: TimeFn) -> Signal {
    Arc::new(move |t| f.value(t))
}

/// Axial velocity profile `V₀ cos²(π y / H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityProfile {
    pub v0: f64,
    pub height: f64,
}

impl VelocityProfile {
    pub fn value(&self, y: f64) -> f64 {
        let c = (PI * y / self.height).cos();
        self.v0 * c * c
    }

    pub fn second_derivative(&self, y: f64) -> f64 {
        let w = PI / self.height;
        -2.0 * self.v0 * w * w * (2.0 * w * y).cos()
    }

    /// `∫ V dy` across the channel.
    pub fn flux(&self) -> f64 {
        self.v0 * self.height / 2.0
    }
}

/// Axial pressure profile `a₀ + a₁ e^{-k x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureProfile {
    pub a0: f64,
    pub a1: f64,
    pub k: f64,
}

impl PressureProfile {
    pub fn value(&self, x: f64) -> f64 {
        self.a0 + self.a1 * (-self.k * x).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        -self.k * self.a1 * (-self.k * x).exp()
    }
}

/// Spatial part of one body-force term.
pub type SpatialField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Body force `Σ_j h_j(t) g_j(x)`.
#[derive(Clone)]
pub struct ForceTerm {
    pub amplitude: Harmonic,
    pub shape: SpatialField,
}

/// Exact flow in one channel.
#[derive(Clone)]
pub struct DomainExact {
    pub amplitude: Harmonic,
    pub velocity: VelocityProfile,
    pub pressure: PressureProfile,
    /// Pressure imposed on the external traction side, if the channel has one.
    pub external_pressure: Option<Harmonic>,
    rho: f64,
    mu: f64,
}

impl DomainExact {
    pub fn velocity_at(&self, x: Point, t: f64) -> [f64; 2] {
        [self.amplitude.value(t) * self.velocity.value(x[1]), 0.0]
    }

    pub fn velocity_rate_at(&self, x: Point, t: f64) -> [f64; 2] {
        [self.amplitude.derivative().value(t) * self.velocity.value(x[1]), 0.0]
    }

    pub fn pressure_at(&self, x: Point, t: f64) -> f64 {
        self.amplitude.value(t) * self.pressure.value(x[0])
    }

    /// Body force that makes the fields solve the momentum equation:
    /// `f = s' V − (μ/ρ) s V'' + (s/ρ) P'` in the axial direction.
    pub fn force_terms(&self) -> Vec<ForceTerm> {
        let vel = self.velocity;
        let pre = self.pressure;
        vec![
            ForceTerm {
                amplitude: self.amplitude.derivative(),
                shape: Arc::new(move |x| [vel.value(x[1]), 0.0]),
            },
            ForceTerm {
                amplitude: self.amplitude * (-self.mu / self.rho),
                shape: Arc::new(move |x| [vel.second_derivative(x[1]), 0.0]),
            },
            ForceTerm {
                amplitude: self.amplitude * (1.0 / self.rho),
                shape: Arc::new(move |x| [pre.derivative(x[0]), 0.0]),
            },
        ]
    }

    pub fn force_at(&self, x: Point, t: f64) -> [f64; 2] {
        let mut f = [0.0; 2];
        for term in self.force_terms() {
            let g = (term.shape)(x);
            let h = term.amplitude.value(t);
            f[0] += h * g[0];
            f[1] += h * g[1];
        }
        f
    }
}

/// Exact interface pressure `P`, flow `Q` and capacitor pressure `π`.
#[derive(Clone)]
pub struct InterfaceExact {
    pub id: InterfaceId,
    pub pressure: TimeFn,
    pub flow: TimeFn,
    pub node_pressure: TimeFn,
}

#[derive(Clone)]
pub struct ExactSolutionSet {
    pub example: Example,
    pub nonlinear: bool,
    pub params: ParamSet,
    pub domains: Vec<DomainExact>,
    pub interfaces: Vec<InterfaceExact>,
    /// Exact state of the single circuit, entry by entry.
    pub circuit_state: Vec<TimeFn>,
    /// Named generator pressures driving the circuit.
    pub generators: Vec<(String, Signal)>,
}

impl fmt::Debug for ExactSolutionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExactSolutionSet")
            .field("example", &self.example)
            .field("nonlinear", &self.nonlinear)
            .finish_non_exhaustive()
    }
}

impl ExactSolutionSet {
    pub fn period(&self) -> f64 {
        self.params.common.period()
    }

    pub fn interface(&self, id: InterfaceId) -> Option<&InterfaceExact> {
        self.interfaces.iter().find(|i| i.id == id)
    }

    pub fn circuit_state_at(&self, t: f64) -> Vec<f64> {
        self.circuit_state.iter().map(|f| f.value(t)).collect()
    }

    pub fn circuit_rate_at(&self, t: f64) -> Vec<f64> {
        self.circuit_state.iter().map(|f| f.rate(t)).collect()
    }

    pub fn generator(&self, name: &str) -> Option<Signal> {
        self.generators.iter().find(|(n, _)| n == name).map(|(_, s)| s.clone())
    }
}

fn inflow(p: &ParamSet) -> Harmonic {
    let c = &p.common;
    Harmonic::new(c.s0, c.s1, 0.0, c.omega)
}

fn domain(p: &ParamSet, amplitude: Harmonic, pressure: PressureProfile, external: Option<Harmonic>) -> DomainExact {
    let c = &p.common;
    DomainExact {
        amplitude,
        velocity: VelocityProfile {
            v0: c.v0,
            height: c.height,
        },
        pressure,
        external_pressure: external,
        rho: c.rho,
        mu: c.mu,
    }
}

fn arc<T: TimeFunction + 'static>(f: T) -> TimeFn {
    Arc::new(f)
}

/// Stored volume of the two-state circuit, solving
/// `ω = C_a(ω) [π − R_a(π)(Q − C π')]` for `ω`.
struct CompliantVolume {
    params: ParamSet,
    nonlinear: bool,
    pi: Harmonic,
    flow: Harmonic,
}

impl CompliantVolume {
    /// Bracketed drive `g = π − R_a(π)(Q − C π')` and its time derivative.
    fn drive(&self, t: f64) -> (f64, f64) {
        let q = &self.params.example1;
        let pi = self.pi.value(t);
        let dpi = self.pi.derivative().value(t);
        let d2pi = self.pi.derivative().derivative().value(t);
        let flow = self.flow.value(t);
        let dflow = self.flow.derivative().value(t);
        let ra = example1_resistance(&self.params, self.nonlinear, pi);
        let dra_dpi = if self.nonlinear {
            let e = (-q.alpha2 * pi).exp();
            q.alpha0 * q.alpha1 * q.alpha2 * e / (1.0 + q.alpha1 * e).powi(2)
        } else {
            0.0
        };
        let inner = flow - q.c_outlet * dpi;
        let g = pi - ra * inner;
        let dg = dpi - dra_dpi * dpi * inner - ra * (dflow - q.c_outlet * d2pi);
        (g, dg)
    }

    fn gamma(&self) -> f64 {
        if self.nonlinear {
            self.params.example1.gamma1
        } else {
            0.0
        }
    }

    fn discriminant(&self, g: f64) -> f64 {
        1.0 + 4.0 * self.gamma() * self.params.example1.ca_bar * g
    }
}

impl TimeFunction for CompliantVolume {
    fn value(&self, t: f64) -> f64 {
        let (g, _) = self.drive(t);
        let gamma = self.gamma();
        let ca = self.params.example1.ca_bar;
        if gamma == 0.0 {
            return ca * g;
        }
        let disc = self.discriminant(g);
        // Rationalized root, stable for small gamma.
        2.0 * ca * g / (1.0 + disc.sqrt())
    }

    fn rate(&self, t: f64) -> f64 {
        let (g, dg) = self.drive(t);
        self.params.example1.ca_bar * dg / self.discriminant(g).sqrt()
    }
}

/// Generator pressure of the two-state circuit,
/// `R_b ω' − (R_b/R_a) π + (R_b/C_a)(1/R_a + 1/R_b) ω`.
struct Example1Generator {
    params: ParamSet,
    nonlinear: bool,
    pi: Harmonic,
    volume: TimeFn,
}

impl TimeFunction for Example1Generator {
    fn value(&self, t: f64) -> f64 {
        let rb = self.params.example1.rb;
        let pi = self.pi.value(t);
        let w = self.volume.value(t);
        let ra = example1_resistance(&self.params, self.nonlinear, pi);
        let ca = example1_compliance(&self.params, self.nonlinear, w);
        rb * self.volume.rate(t) - rb / ra * pi + rb / ca * (1.0 / ra + 1.0 / rb) * w
    }

    fn rate(&self, _t: f64) -> f64 {
        unimplemented!("generator rate is not needed")
    }
}

pub fn example1_exact(p: &ParamSet, nonlinear: bool) -> Result<ExactSolutionSet> {
    let c = &p.common;
    let q = &p.example1;
    let s = inflow(p);
    let profile = PressureProfile {
        a0: q.a0,
        a1: q.a1,
        k: c.k,
    };
    let pressure = s * profile.value(c.length);
    let flow = s * c.profile_flux();
    let pi = pressure - flow * q.r_outlet;
    let volume = CompliantVolume {
        params: p.clone(),
        nonlinear,
        pi,
        flow,
    };
    if nonlinear {
        let samples = 2000;
        for i in 0..=samples {
            let t = c.period() * i as f64 / samples as f64;
            let (g, _) = volume.drive(t);
            if !(volume.discriminant(g) > 0.0) {
                return Err(Error::Oracle(format!(
                    "negative discriminant in the compliance volume at t = {t}: parameters leave the valid regime"
                )));
            }
        }
    }
    let volume = arc(volume);
    let generator = arc(Example1Generator {
        params: p.clone(),
        nonlinear,
        pi,
        volume: volume.clone(),
    });
    let id = InterfaceId::new(1, 1, 1);
    Ok(ExactSolutionSet {
        example: Example::One,
        nonlinear,
        params: p.clone(),
        domains: vec![domain(p, s, profile, Some(s * profile.value(0.0)))],
        interfaces: vec![InterfaceExact {
            id,
            pressure: arc(pressure),
            flow: arc(flow),
            node_pressure: arc(pi),
        }],
        circuit_state: vec![arc(pi), volume],
        generators: vec![("p_tilde".into(), signal_of(generator))],
    })
}

pub fn example2_exact(p: &ParamSet) -> ExactSolutionSet {
    let c = &p.common;
    let q = &p.example2;
    let flux = c.profile_flux();
    let s1 = inflow(p);
    let prof1 = PressureProfile {
        a0: q.a0_first,
        a1: q.a1_first,
        k: c.k,
    };
    let prof2 = PressureProfile {
        a0: q.a0_second,
        a1: q.a1_second,
        k: c.k,
    };
    let p11 = s1 * prof1.value(c.length);
    let q11 = s1 * flux;
    let pi11 = p11 - q11 * q.r_first;
    let omega = q11 - pi11.derivative() * q.c_first;
    let pi21 = pi11 - omega * q.ra - omega.derivative() * q.la;
    // The second channel is entered through its left end, so its interface
    // pressure is the profile value at x = 0 and its external pressure the
    // value at x = L.
    let s2 = pi21 * (1.0 / (prof2.value(0.0) + q.r_second * flux));
    let q21 = -(s2 * flux);
    let p21 = s2 * prof2.value(0.0);
    let generator = omega * (-q.rb) + pi21 - q21 * q.rb + pi21.derivative() * (q.rb * q.c_second);
    ExactSolutionSet {
        example: Example::Two,
        nonlinear: false,
        params: p.clone(),
        domains: vec![
            domain(p, s1, prof1, Some(s1 * prof1.value(0.0))),
            domain(p, s2, prof2, Some(s2 * prof2.value(c.length))),
        ],
        interfaces: vec![
            InterfaceExact {
                id: InterfaceId::new(1, 1, 1),
                pressure: arc(p11),
                flow: arc(q11),
                node_pressure: arc(pi11),
            },
            InterfaceExact {
                id: InterfaceId::new(2, 1, 1),
                pressure: arc(p21),
                flow: arc(q21),
                node_pressure: arc(pi21),
            },
        ],
        circuit_state: vec![arc(pi11), arc(pi21), arc(omega)],
        generators: vec![("p_tilde".into(), signal_of(arc(generator)))],
    }
}

/// Constant `(P(L) − P(0) − (R₁ + R₂) V₀H/2) / R_c` of the closed loop.
pub fn example3_loop_constant(p: &ParamSet) -> f64 {
    let c = &p.common;
    let q = &p.example3;
    let prof = PressureProfile {
        a0: q.a0,
        a1: q.a1,
        k: c.k,
    };
    (prof.value(c.length) - prof.value(0.0) - (q.r_outlet + q.r_inlet) * c.profile_flux()) / q.rc
}

pub fn example3_exact(p: &ParamSet) -> ExactSolutionSet {
    let c = &p.common;
    let q = &p.example3;
    let s = inflow(p);
    let prof = PressureProfile {
        a0: q.a0,
        a1: q.a1,
        k: c.k,
    };
    let flux = c.profile_flux();
    let p_out = s * prof.value(c.length);
    let p_in = s * prof.value(0.0);
    let q_out = s * flux;
    let q_in = -q_out;
    let pi_out = p_out - q_out * q.r_outlet;
    let pi_in = p_in - q_in * q.r_inlet;
    let lc = example3_loop_constant(p);
    let ratio = c.omega * q.lc / q.rc;
    let l1 = c.s0 * lc;
    let l2 = c.s1 * lc / (ratio * ratio + 1.0);
    let l3 = -ratio * l2;
    let omega = Harmonic::new(l1, l2, l3, c.omega);
    let gen_a = pi_out.derivative() * (q.ra * q.c_outlet) + pi_out + (omega - q_out) * q.ra;
    let gen_b = pi_in.derivative() * (q.rb * q.c_inlet) + pi_in - (omega + q_in) * q.rb;
    ExactSolutionSet {
        example: Example::Three,
        nonlinear: false,
        params: p.clone(),
        domains: vec![domain(p, s, prof, None)],
        interfaces: vec![
            InterfaceExact {
                id: InterfaceId::new(1, 1, 1),
                pressure: arc(p_out),
                flow: arc(q_out),
                node_pressure: arc(pi_out),
            },
            InterfaceExact {
                id: InterfaceId::new(1, 1, 2),
                pressure: arc(p_in),
                flow: arc(q_in),
                node_pressure: arc(pi_in),
            },
        ],
        circuit_state: vec![arc(pi_out), arc(pi_in), arc(omega)],
        generators: vec![
            ("p_tilde_a".into(), signal_of(arc(gen_a))),
            ("p_tilde_b".into(), signal_of(arc(gen_b))),
        ],
    }
}

pub fn exact_solution(example: Example, p: &ParamSet, nonlinear: bool) -> Result<ExactSolutionSet> {
    match example {
        Example::One => example1_exact(p, nonlinear),
        Example::Two => Ok(example2_exact(p)),
        Example::Three => Ok(example3_exact(p)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn harmonic_algebra() {
        let h = Harmonic::new(1.0, 2.0, -0.5, 3.0);
        let t = 0.37;
        let d = h.derivative().value(t);
        let fd = (h.value(t + 1e-6) - h.value(t - 1e-6)) / 2e-6;
        assert!(close(d, fd, 1e-8));
        let g = h * 2.0 - h;
        assert!(close(g.value(t), h.value(t), 1e-15));
    }

    #[test]
    fn example1_initial_values() {
        let ex = example1_exact(&ParamSet::default(), true).unwrap();
        let i = &ex.interfaces[0];
        assert!(close(i.flow.value(0.0), 4.0, 1e-15));
        assert!((i.pressure.value(0.0) - 1035.7589).abs() < 1e-4);
        assert!((i.node_pressure.value(0.0) - 995.7589).abs() < 1e-4);
    }

    #[test]
    fn steady_when_oscillation_vanishes() {
        let mut p = ParamSet::default();
        p.common.s1 = 0.0;
        let ex = example1_exact(&p, false).unwrap();
        for t in [0.0, 0.3, 1.1] {
            assert_eq!(ex.interfaces[0].pressure.value(t), ex.interfaces[0].pressure.value(0.0));
            assert!(ex.circuit_state[1].rate(t).abs() < 1e-12);
        }
        let f = ex.domains[0].force_at([2.0, 0.3], 0.5);
        let d = &ex.domains[0];
        let steady = -d.amplitude.value(0.0) * d.velocity.second_derivative(0.3) + d.amplitude.value(0.0) * d.pressure.derivative(2.0);
        assert!(close(f[0], steady, 1e-12));
    }

    #[test]
    fn nonlinear_volume_satisfies_compliance_law() {
        let p = ParamSet::default();
        let ex = example1_exact(&p, true).unwrap();
        let pi = &ex.circuit_state[0];
        let w = &ex.circuit_state[1];
        let q = &ex.interfaces[0].flow;
        for i in 0..50 {
            let t = 0.04 * i as f64;
            let ra = example1_resistance(&p, true, pi.value(t));
            let ca = example1_compliance(&p, true, w.value(t));
            let rhs = ca * (pi.value(t) - ra * (q.value(t) - p.example1.c_outlet * pi.rate(t)));
            assert!(close(w.value(t), rhs, 1e-12));
        }
    }

    #[test]
    fn nonlinear_volume_rate_matches_finite_difference() {
        let ex = example1_exact(&ParamSet::default(), true).unwrap();
        let w = &ex.circuit_state[1];
        for t in [0.1, 0.77, 1.5] {
            let fd = (w.value(t + 1e-5) - w.value(t - 1e-5)) / 2e-5;
            assert!(close(w.rate(t), fd, 1e-7));
        }
    }

    #[test]
    fn negative_discriminant_is_an_error() {
        let mut p = ParamSet::default();
        p.example1.gamma1 = -1.0;
        p.common.s0 = 50.0;
        assert!(matches!(example1_exact(&p, true), Err(Error::Oracle(_))));
    }

    #[test]
    fn example3_constants() {
        let p = ParamSet::default();
        assert!((example3_loop_constant(&p) + 10.7446).abs() < 1e-4);
        let ex = example3_exact(&p);
        assert!((ex.circuit_state[2].value(0.0) - ex.circuit_state[2].value(2.0)).abs() < 1e-12);
        let mean: f64 = (0..1000).map(|i| ex.circuit_state[2].value(i as f64 * 0.002)).sum::<f64>() / 1000.0;
        assert!((mean + 21.4892).abs() < 1e-3);
        for t in [0.0, 0.4, 1.3] {
            let sum = ex.interfaces[0].flow.value(t) + ex.interfaces[1].flow.value(t);
            assert!(sum.abs() < 1e-12);
        }
    }

    #[test]
    fn example2_node_pressure_reconstruction() {
        let p = ParamSet::default();
        let ex = example2_exact(&p);
        let i = &ex.interfaces[1];
        for k in 0..20 {
            let t = 0.1 * k as f64;
            let rebuilt = i.pressure.value(t) - p.example2.r_second * i.flow.value(t);
            assert!(close(rebuilt, i.node_pressure.value(t), 1e-12));
        }
    }

    #[test]
    fn all_fields_are_periodic() {
        let p = ParamSet::default();
        let tau = p.common.period();
        for ex in [
            example1_exact(&p, true).unwrap(),
            example1_exact(&p, false).unwrap(),
            example2_exact(&p),
            example3_exact(&p),
        ] {
            for t in [0.0, 0.3, 1.7] {
                for f in &ex.circuit_state {
                    assert!(close(f.value(t + tau), f.value(t), 1e-12));
                }
                for (_, g) in &ex.generators {
                    assert!(close(g(t + tau), g(t), 1e-11));
                }
            }
        }
    }
}
