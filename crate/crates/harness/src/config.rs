//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated. Every key must be known; a repeated key is an error.

use crate::error::{HarnessError, Result};
use hydrostat_core::initial::Recipe;
use hydrostat_core::solvers::SimConfig;
use hydrostat_core::System;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

/// Which limit a sweep probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SweepMode {
    /// Navier-Stokes against the primitive equations as `eps, delta -> 0`.
    EpsDeltaToZero,
    /// Barotropic/baroclinic comparison as `delta -> infinity`.
    DeltaToInfty,
    /// `delta = eps^(gamma - 2)` along a list of `gamma`.
    GammaScan,
}

impl SweepMode {
    pub fn name(self) -> &'static str {
        match self {
            SweepMode::EpsDeltaToZero => "eps_delta_to_zero",
            SweepMode::DeltaToInfty => "delta_to_infty",
            SweepMode::GammaScan => "gamma_scan",
        }
    }
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eps_delta_to_zero" => Ok(SweepMode::EpsDeltaToZero),
            "delta_to_infty" => Ok(SweepMode::DeltaToInfty),
            "gamma_scan" => Ok(SweepMode::GammaScan),
            other => Err(format!("unknown sweep mode '{other}'")),
        }
    }
}

/// One parameter point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub eps: f64,
    pub delta: f64,
    pub gamma: Option<f64>,
}

/// A sweep over `(eps, delta)` or `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub mode: SweepMode,
    pub eps_values: Vec<f64>,
    /// Empty in `eps_delta_to_zero` means `delta = eps`.
    pub delta_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    /// Template for every point; `eps`, `delta` and `gamma` are overridden.
    pub sim: SimConfig<f64>,
    pub out_dir: Option<PathBuf>,
    pub plots: bool,
    /// Write measured wall times to the CSV (otherwise `wall_ms` is 0).
    pub record_wall_time: bool,
}

impl SweepConfig {
    pub fn new(mode: SweepMode, sim: SimConfig<f64>) -> Self {
        SweepConfig {
            mode,
            eps_values: Vec::new(),
            delta_values: Vec::new(),
            gamma_values: Vec::new(),
            sim,
            out_dir: None,
            plots: false,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Sweep(m));
        let positive = |name: &str, xs: &[f64]| -> Result<()> {
            match xs.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
                Some(x) => Err(HarnessError::Sweep(format!("{name} contains {x}, values must be > 0"))),
                None => Ok(()),
            }
        };
        if self.eps_values.is_empty() {
            return bad("eps_values is empty".into());
        }
        positive("eps_values", &self.eps_values)?;
        positive("delta_values", &self.delta_values)?;
        positive("gamma_values", &self.gamma_values)?;
        match self.mode {
            SweepMode::EpsDeltaToZero => {
                if !self.delta_values.is_empty() && self.delta_values.len() != self.eps_values.len() {
                    return bad(format!(
                        "delta_values has {} entries, eps_values {}",
                        self.delta_values.len(),
                        self.eps_values.len()
                    ));
                }
            }
            SweepMode::DeltaToInfty if self.delta_values.is_empty() => return bad("delta_values is empty".into()),
            SweepMode::GammaScan if self.gamma_values.is_empty() => return bad("gamma_values is empty".into()),
            _ => {}
        }
        for p in self.points() {
            let mut sim = self.sim.clone();
            sim.eps = p.eps;
            sim.delta = p.delta;
            sim.gamma = p.gamma;
            sim.validate()?;
        }
        Ok(())
    }

    /// Parameter points in configuration order.
    pub fn points(&self) -> Vec<Point> {
        match self.mode {
            SweepMode::EpsDeltaToZero => self
                .eps_values
                .iter()
                .enumerate()
                .map(|(i, &eps)| Point { eps, delta: self.delta_values.get(i).copied().unwrap_or(eps), gamma: None })
                .collect(),
            SweepMode::DeltaToInfty => self
                .eps_values
                .iter()
                .flat_map(|&eps| self.delta_values.iter().map(move |&delta| Point { eps, delta, gamma: None }))
                .collect(),
            SweepMode::GammaScan => self
                .gamma_values
                .iter()
                .flat_map(|&g| {
                    self.eps_values.iter().map(move |&eps| Point { eps, delta: eps.powf(g - 2.0), gamma: Some(g) })
                })
                .collect(),
        }
    }
}

/// Parsed configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub sim: SimConfig<f64>,
    pub mode: Option<SweepMode>,
    pub eps_values: Vec<f64>,
    pub delta_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub out_dir: Option<PathBuf>,
    pub plots: bool,
    pub record_wall_time: bool,
}

const KEYS: &[&str] = &[
    "system",
    "nx",
    "ny",
    "nz",
    "eps",
    "delta",
    "gamma",
    "dt",
    "t_final",
    "recipe",
    "seed",
    "record_every",
    "dt_initial",
    "dt_growth",
    "mode",
    "eps_values",
    "delta_values",
    "gamma_values",
    "out_dir",
    "plots",
    "record_wall_time",
];

fn parse<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    v.parse().map_err(|e| HarnessError::Config { line, msg: format!("{key}: {e}") })
}

fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse(line, key, x.trim())).collect()
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut sim = SimConfig::<f64>::default();
        let mut cfg = ConfigFile {
            sim: sim.clone(),
            mode: None,
            eps_values: Vec::new(),
            delta_values: Vec::new(),
            gamma_values: Vec::new(),
            out_dir: None,
            plots: false,
            record_wall_time: false,
        };
        let mut seen = std::collections::HashSet::new();
        let mut gamma = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| HarnessError::Config { line, msg: format!("expected key = value, got '{s}'") })?;
            let (key, v) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(HarnessError::Config { line, msg: format!("unknown key '{key}'") });
            }
            if !seen.insert(key.to_string()) {
                return Err(HarnessError::Config { line, msg: format!("duplicate key '{key}'") });
            }
            match key {
                "system" => {
                    sim.system = System::parse(v)
                        .ok_or_else(|| HarnessError::Config { line, msg: format!("unknown system '{v}'") })?
                }
                "nx" => sim.nx = parse(line, key, v)?,
                "ny" => sim.ny = parse(line, key, v)?,
                "nz" => sim.nz = parse(line, key, v)?,
                "eps" => sim.eps = parse(line, key, v)?,
                "delta" => sim.delta = parse(line, key, v)?,
                "gamma" => gamma = Some(parse::<f64>(line, key, v)?),
                "dt" => sim.dt = parse(line, key, v)?,
                "t_final" => sim.t_final = parse(line, key, v)?,
                "recipe" => sim.recipe = parse::<Recipe>(line, key, v)?,
                "seed" => sim.seed = parse(line, key, v)?,
                "record_every" => sim.record_every = parse(line, key, v)?,
                "dt_initial" => sim.dt_initial = Some(parse(line, key, v)?),
                "dt_growth" => sim.dt_growth = parse(line, key, v)?,
                "mode" => cfg.mode = Some(parse(line, key, v)?),
                "eps_values" => cfg.eps_values = parse_list(line, key, v)?,
                "delta_values" => cfg.delta_values = parse_list(line, key, v)?,
                "gamma_values" => cfg.gamma_values = parse_list(line, key, v)?,
                "out_dir" => cfg.out_dir = Some(PathBuf::from(v)),
                "plots" => cfg.plots = parse(line, key, v)?,
                "record_wall_time" => cfg.record_wall_time = parse(line, key, v)?,
                _ => unreachable!("key list and match arms disagree"),
            }
        }
        if let Some(g) = gamma {
            if seen.contains("delta") {
                return Err(HarnessError::Config { line: 0, msg: "set either delta or gamma, not both".into() });
            }
            sim = sim.with_gamma(g);
        }
        cfg.sim = sim;
        Ok(cfg)
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Simulation settings of a `run` invocation.
    pub fn sim_config(&self) -> Result<SimConfig<f64>> {
        self.sim.validate()?;
        Ok(self.sim.clone())
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let mode = self.mode.ok_or_else(|| HarnessError::Sweep("missing key 'mode'".into()))?;
        let cfg = SweepConfig {
            mode,
            eps_values: self.eps_values.clone(),
            delta_values: self.delta_values.clone(),
            gamma_values: self.gamma_values.clone(),
            sim: self.sim.clone(),
            out_dir: self.out_dir.clone(),
            plots: self.plots,
            record_wall_time: self.record_wall_time,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sim_and_sweep_keys() {
        let text = "# comment\nnx = 16\nny=16\nnz = 8\nrecipe = heat_mode\nmode = gamma_scan\n\
                    eps_values = 0.2, 0.1,0.05\ngamma_values = 3\nplots = true\n";
        let c = ConfigFile::parse(text).unwrap();
        assert_eq!((c.sim.nx, c.sim.ny, c.sim.nz), (16, 16, 8));
        assert_eq!(c.sim.recipe, Recipe::HeatMode);
        let s = c.sweep_config().unwrap();
        assert_eq!(s.mode, SweepMode::GammaScan);
        assert!(s.plots);
        let pts = s.points();
        assert_eq!(pts.len(), 3);
        for p in pts {
            assert!((p.delta - p.eps).abs() < 1e-15);
            assert_eq!(p.gamma, Some(3.0));
        }
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let e = ConfigFile::parse("nx = 8\nviscosity = 1\n").unwrap_err();
        assert!(matches!(e, HarnessError::Config { line: 2, .. }), "{e}");
        assert!(ConfigFile::parse("nx = 8\nnx = 16\n").is_err());
        assert!(ConfigFile::parse("nx 8\n").is_err());
        assert!(ConfigFile::parse("recipe = vortex\n").is_err());
        assert!(ConfigFile::parse("delta = 0.1\ngamma = 3\n").is_err());
    }

    #[test]
    fn sweep_validation() {
        let empty = ConfigFile::parse("mode = eps_delta_to_zero\neps_values =\n").unwrap();
        assert!(matches!(empty.sweep_config(), Err(HarnessError::Sweep(_))));
        let neg_gamma = ConfigFile::parse("mode = gamma_scan\neps_values = 0.1\ngamma_values = -1\n").unwrap();
        assert!(neg_gamma.sweep_config().is_err());
        let no_delta = ConfigFile::parse("mode = delta_to_infty\neps_values = 0.5\n").unwrap();
        assert!(no_delta.sweep_config().is_err());
        let mismatch = ConfigFile::parse("mode = eps_delta_to_zero\neps_values = 0.1,0.2\ndelta_values = 0.1\n").unwrap();
        assert!(mismatch.sweep_config().is_err());
        assert!(ConfigFile::parse("eps_values = 0.1\n").unwrap().sweep_config().is_err());
    }

    #[test]
    fn point_layouts() {
        let mut s = SweepConfig::new(SweepMode::DeltaToInfty, SimConfig::default());
        s.eps_values = vec![0.5, 0.25];
        s.delta_values = vec![16.0, 64.0];
        let p = s.points();
        assert_eq!(p.len(), 4);
        assert_eq!((p[1].eps, p[1].delta), (0.5, 64.0));
        s.mode = SweepMode::EpsDeltaToZero;
        assert_eq!(s.points().iter().map(|p| p.delta).collect::<Vec<_>>(), vec![16.0, 64.0]);
        s.delta_values.clear();
        assert_eq!(s.points().iter().map(|p| p.delta).collect::<Vec<_>>(), vec![0.5, 0.25]);
    }
}
