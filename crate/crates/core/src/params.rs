//! Physical parameters of the three benchmark configurations (cgs units,
//! flow rates per unit length).

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Which benchmark configuration a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Example {
    /// One channel, outlet into a two-state nonlinear circuit.
    One,
    /// Two channels joined by a three-state circuit with an inductor.
    Two,
    /// One channel whose both ends connect to a closed circuit.
    Three,
}

impl Example {
    pub const ALL: [Example; 3] = [Example::One, Example::Two, Example::Three];

    pub fn from_number(n: u32) -> Result<Self> {
        match n {
            1 => Ok(Example::One),
            2 => Ok(Example::Two),
            3 => Ok(Example::Three),
            _ => Err(Error::InvalidArgument(format!("unknown example {n}, expected 1, 2 or 3"))),
        }
    }

    pub fn number(self) -> u32 {
        match self {
            Example::One => 1,
            Example::Two => 2,
            Example::Three => 3,
        }
    }

    /// Default Step-2 substep count.
    pub fn default_substeps(self) -> usize {
        match self {
            Example::One => 5,
            Example::Two | Example::Three => 10,
        }
    }
}

impl fmt::Display for Example {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

/// Geometry, fluid and inflow-signal constants shared by all examples.
#[derive(Debug, Clone, PartialEq)]
pub struct CommonParams {
    pub height: f64,
    pub length: f64,
    pub rho: f64,
    pub mu: f64,
    /// Peak axial velocity of the profile.
    pub v0: f64,
    /// Angular frequency of the driving signal.
    pub omega: f64,
    /// Decay rate of the axial pressure profile.
    pub k: f64,
    pub s0: f64,
    pub s1: f64,
}

impl CommonParams {
    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega
    }

    /// Flow rate carried by the unit-amplitude velocity profile.
    pub fn profile_flux(&self) -> f64 {
        self.v0 * self.height / 2.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Params {
    pub r_outlet: f64,
    pub ra_bar: f64,
    pub rb: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub c_outlet: f64,
    pub ca_bar: f64,
    pub gamma1: f64,
    pub a0: f64,
    pub a1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example2Params {
    pub r_first: f64,
    pub ra: f64,
    pub r_second: f64,
    pub rb: f64,
    pub c_first: f64,
    pub c_second: f64,
    pub la: f64,
    pub a0_first: f64,
    pub a1_first: f64,
    pub a0_second: f64,
    pub a1_second: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example3Params {
    pub r_outlet: f64,
    pub r_inlet: f64,
    pub ra: f64,
    pub rb: f64,
    pub rc: f64,
    pub lc: f64,
    pub c_outlet: f64,
    pub c_inlet: f64,
    pub a0: f64,
    pub a1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub common: CommonParams,
    pub example1: Example1Params,
    pub example2: Example2Params,
    pub example3: Example3Params,
}

impl Default for ParamSet {
    fn default() -> Self {
        Self {
            common: CommonParams {
                height: 2.0,
                length: 10.0,
                rho: 1.0,
                mu: 1.0,
                v0: 2.0,
                omega: PI,
                k: 0.1,
                s0: 2.0,
                s1: 1.0,
            },
            example1: Example1Params {
                r_outlet: 10.0,
                ra_bar: 10.0,
                rb: 10.0,
                alpha0: 10.0,
                alpha1: 1.0,
                alpha2: 0.001,
                c_outlet: 0.001,
                ca_bar: 0.01,
                gamma1: 1.0,
                a0: 150.0,
                a1: 1000.0,
            },
            example2: Example2Params {
                r_first: 10.0,
                ra: 10.0,
                r_second: 10.0,
                rb: 10.0,
                c_first: 0.001,
                c_second: 0.001,
                la: 0.003,
                a0_first: 150.0,
                a1_first: 1000.0,
                a0_second: 75.0,
                a1_second: 500.0,
            },
            example3: Example3Params {
                r_outlet: 10.0,
                r_inlet: 50.0,
                ra: 10.0,
                rb: 10.0,
                rc: 70.0,
                lc: 0.003,
                c_outlet: 0.001,
                c_inlet: 0.001,
                a0: 150.0,
                a1: 1000.0,
            },
        }
    }
}

const COMMON_KEYS: [&str; 9] = ["H", "L", "rho", "mu", "V0", "omega", "k", "s0", "s1"];

impl ParamSet {
    /// Override keys accepted for `example`, common ones first.
    pub fn keys(example: Example) -> Vec<&'static str> {
        let specific: &[&str] = match example {
            Example::One => &[
                "R11_1", "Ra_bar", "Rb", "alpha0", "alpha1", "alpha2", "C11_1", "Ca_bar", "gamma1",
                "a0", "a1",
            ],
            Example::Two => &[
                "R11_1", "Ra", "R21_1", "Rb", "C11_1", "C21_1", "La", "a01", "a11", "a02", "a12",
            ],
            Example::Three => &[
                "R11_1", "R11_2", "Ra", "Rb", "Rc", "Lc", "C11_1", "C11_2", "a0", "a1",
            ],
        };
        COMMON_KEYS.iter().chain(specific).copied().collect()
    }

    fn slot(&mut self, example: Example, key: &str) -> Option<&mut f64> {
        let c = &mut self.common;
        let common = match key {
            "H" => Some(&mut c.height),
            "L" => Some(&mut c.length),
            "rho" => Some(&mut c.rho),
            "mu" => Some(&mut c.mu),
            "V0" => Some(&mut c.v0),
            "omega" => Some(&mut c.omega),
            "k" => Some(&mut c.k),
            "s0" => Some(&mut c.s0),
            "s1" => Some(&mut c.s1),
            _ => None,
        };
        if common.is_some() {
            return common;
        }
        match example {
            Example::One => {
                let p = &mut self.example1;
                match key {
                    "R11_1" => Some(&mut p.r_outlet),
                    "Ra_bar" => Some(&mut p.ra_bar),
                    "Rb" => Some(&mut p.rb),
                    "alpha0" => Some(&mut p.alpha0),
                    "alpha1" => Some(&mut p.alpha1),
                    "alpha2" => Some(&mut p.alpha2),
                    "C11_1" => Some(&mut p.c_outlet),
                    "Ca_bar" => Some(&mut p.ca_bar),
                    "gamma1" => Some(&mut p.gamma1),
                    "a0" => Some(&mut p.a0),
                    "a1" => Some(&mut p.a1),
                    _ => None,
                }
            }
            Example::Two => {
                let p = &mut self.example2;
                match key {
                    "R11_1" => Some(&mut p.r_first),
                    "Ra" => Some(&mut p.ra),
                    "R21_1" => Some(&mut p.r_second),
                    "Rb" => Some(&mut p.rb),
                    "C11_1" => Some(&mut p.c_first),
                    "C21_1" => Some(&mut p.c_second),
                    "La" => Some(&mut p.la),
                    "a01" => Some(&mut p.a0_first),
                    "a11" => Some(&mut p.a1_first),
                    "a02" => Some(&mut p.a0_second),
                    "a12" => Some(&mut p.a1_second),
                    _ => None,
                }
            }
            Example::Three => {
                let p = &mut self.example3;
                match key {
                    "R11_1" => Some(&mut p.r_outlet),
                    "R11_2" => Some(&mut p.r_inlet),
                    "Ra" => Some(&mut p.ra),
                    "Rb" => Some(&mut p.rb),
                    "Rc" => Some(&mut p.rc),
                    "Lc" => Some(&mut p.lc),
                    "C11_1" => Some(&mut p.c_outlet),
                    "C11_2" => Some(&mut p.c_inlet),
                    "a0" => Some(&mut p.a0),
                    "a1" => Some(&mut p.a1),
                    _ => None,
                }
            }
        }
    }

    /// Overrides one named value. Sign and range are not checked here; see
    /// [`ParamSet::violations`].
    pub fn set(&mut self, example: Example, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Config(format!("parameter {key} must be finite, got {value}")));
        }
        match self.slot(example, key) {
            Some(slot) => {
                *slot = value;
                Ok(())
            }
            None => Err(Error::Config(format!(
                "unknown parameter {key:?} for example {example}; valid keys: {}",
                Self::keys(example).join(", ")
            ))),
        }
    }

    pub fn get(&self, example: Example, key: &str) -> Option<f64> {
        let mut copy = self.clone();
        copy.slot(example, key).map(|v| *v)
    }

    /// Values that must be strictly positive for `example` but are not.
    pub fn violations(&self, example: Example) -> Vec<String> {
        let positive: &[&str] = match example {
            Example::One => &["R11_1", "Ra_bar", "Rb", "C11_1", "Ca_bar"],
            Example::Two => &["R11_1", "Ra", "R21_1", "Rb", "C11_1", "C21_1", "La"],
            Example::Three => &["R11_1", "R11_2", "Ra", "Rb", "Rc", "Lc", "C11_1", "C11_2"],
        };
        let mut out = Vec::new();
        for key in ["H", "L", "rho", "mu", "omega"].iter().chain(positive) {
            let v = self.get(example, key).expect("known key");
            if !(v > 0.0) {
                out.push(format!("{key} = {v} must be positive"));
            }
        }
        if example == Example::One {
            let p = &self.example1;
            for (key, v) in [("alpha0", p.alpha0), ("alpha1", p.alpha1), ("gamma1", p.gamma1)] {
                if v < 0.0 {
                    out.push(format!("{key} = {v} must be non-negative"));
                }
            }
        }
        out
    }

    pub fn validate(&self, example: Example) -> Result<()> {
        let v = self.violations(example);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v.join("; ")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let p = ParamSet::default();
        for ex in Example::ALL {
            assert!(p.validate(ex).is_ok());
        }
        assert!((p.common.period() - 2.0).abs() < 1e-15);
        assert_eq!(p.common.profile_flux(), 2.0);
    }

    #[test]
    fn every_listed_key_is_settable() {
        for ex in Example::ALL {
            for key in ParamSet::keys(ex) {
                let mut p = ParamSet::default();
                p.set(ex, key, 0.5).unwrap();
                assert_eq!(p.get(ex, key), Some(0.5));
            }
        }
    }

    #[test]
    fn keys_of_other_examples_are_rejected() {
        let mut p = ParamSet::default();
        assert!(p.set(Example::One, "La", 1.0).is_err());
        assert!(p.set(Example::Two, "gamma1", 1.0).is_err());
        assert!(p.set(Example::Three, "a02", 1.0).is_err());
    }

    #[test]
    fn negative_resistance_is_a_violation() {
        let mut p = ParamSet::default();
        p.set(Example::One, "R11_1", -10.0).unwrap();
        let v = p.violations(Example::One);
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("R11_1"));
    }
}
