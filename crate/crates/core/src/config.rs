//! Run configuration shared by the command line and the C interface.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{Example, ParamSet};
use crate::problems::{Forcing, ProblemSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub example: u32,
    pub nonlinear: bool,
    pub dt: f64,
    /// Step-2 substeps; the example's default when absent.
    pub substeps: Option<usize>,
    pub nx: usize,
    pub ny: usize,
    pub max_periods: usize,
    pub eps_per: f64,
    /// Time steps swept by the convergence and stability commands.
    pub dts: Vec<f64>,
    /// Steps per time step in the stability command.
    pub stability_steps: usize,
    /// Named parameter overrides, applied on top of the defaults.
    pub set: BTreeMap<String, f64>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            example: 1,
            nonlinear: false,
            dt: 0.01,
            substeps: None,
            nx: 100,
            ny: 20,
            max_periods: 10,
            eps_per: 1e-6,
            dts: Vec::new(),
            stability_steps: 200,
            set: BTreeMap::new(),
            out: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn example(&self) -> Result<Example> {
        Example::from_number(self.example)
    }

    pub fn substeps(&self) -> Result<usize> {
        Ok(self.substeps.unwrap_or(self.example()?.default_substeps()))
    }

    /// Defaults with the overrides applied. Unknown keys are errors; sign
    /// checks are left to [`ParamSet::validate`].
    pub fn params(&self) -> Result<ParamSet> {
        let example = self.example()?;
        let mut p = ParamSet::default();
        for (k, v) in &self.set {
            p.set(example, k, *v)?;
        }
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let example = self.example()?;
        if self.nonlinear && example != Example::One {
            return Err(Error::Config("nonlinear is only available for example 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.eps_per > 0.0) {
            return Err(Error::Config(format!("eps_per must be positive, got {}", self.eps_per)));
        }
        if self.substeps == Some(0) {
            return Err(Error::Config("substeps must be at least 1".into()));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::Config("nx and ny must be at least 1".into()));
        }
        for &dt in &self.dts {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Config(format!("time steps must be positive, got {dt}")));
            }
        }
        for (i, a) in self.dts.iter().enumerate() {
            if self.dts[..i].contains(a) {
                return Err(Error::Config(format!("time step {a} is listed twice")));
            }
        }
        self.params()?;
        Ok(())
    }

    pub fn problem_spec(&self, forcing: Forcing) -> Result<ProblemSpec> {
        Ok(ProblemSpec {
            example: self.example()?,
            nonlinear: self.nonlinear,
            params: self.params()?,
            nx: self.nx,
            ny: self.ny,
            forcing,
        })
    }

    /// Parses `key=value` overrides as given on the command line.
    pub fn apply_overrides<'a>(&mut self, items: impl IntoIterator<Item = &'a str>) -> Result<()> {
        for item in items {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override {item:?} is not key=value")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("override {item:?} has a non-numeric value")))?;
            self.set.insert(k.trim().to_string(), value);
        }
        Ok(())
    }
}

/// Number of steps per period, requiring `dt` to divide the period.
pub fn steps_per_period(period: f64, dt: f64) -> Result<usize> {
    let n = (period / dt).round();
    if n < 1.0 || ((n * dt - period) / period).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "time step {dt} does not divide the period {period} into whole steps"
        )));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let mut c = RunConfig::default();
        c.example = 2;
        c.dts = vec![0.01, 0.005];
        c.set.insert("La".into(), 0.004);
        c.out = Some("runs/a".into());
        let back = RunConfig::from_toml_str(&c.to_toml_string().unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = RunConfig::from_toml_str("example = 3\ndt = 0.005\n").unwrap();
        assert_eq!(c.example, 3);
        assert_eq!(c.nx, 100);
        assert_eq!(c.substeps().unwrap(), 10);
    }

    #[test]
    fn unknown_fields_and_keys_are_rejected() {
        assert!(RunConfig::from_toml_str("exampel = 1").is_err());
        let mut c = RunConfig::default();
        c.apply_overrides(["La=1"]).unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn duplicate_time_steps_are_rejected() {
        let mut c = RunConfig::default();
        c.dts = vec![0.01, 0.005, 0.01];
        assert!(c.validate().is_err());
    }

    #[test]
    fn period_division() {
        assert_eq!(steps_per_period(2.0, 0.01).unwrap(), 200);
        assert_eq!(steps_per_period(2.0, 0.001).unwrap(), 2000);
        assert!(steps_per_period(2.0, 0.003).is_err());
    }
}
