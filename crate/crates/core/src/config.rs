//! System configuration, unit conversion and the `key = value` file format.
//!
//! Everything inside the engine is linear (watts, linear gains). Decibel
//! suffixes are only understood here: `x dB` maps to `10^(x/10)` and
//! `x dBm` maps to `10^((x-30)/10)` watts.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// All physical and algorithmic parameters of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    /// Side of each square moving region, in wavelengths.
    pub region: f64,
    /// Paths per channel side.
    pub paths: usize,
    /// Minimum inter-antenna distance, meters.
    pub min_distance: f64,
    /// Carrier wavelength, meters.
    pub wavelength: f64,
    /// Linear path loss at 1 m.
    pub path_loss: f64,
    pub path_loss_exponent: f64,
    pub sigma_b2: f64,
    pub sigma_d2: f64,
    pub sigma_e2: f64,
    /// Residual self-interference coefficient (linear).
    pub rho: f64,
    pub p_b: f64,
    pub p_u: f64,
    /// SCA convergence threshold on the objective increment.
    pub eps_sca: f64,
    /// Relative AO convergence threshold.
    pub eps_ao: f64,
    pub particles: usize,
    pub sca_iters: usize,
    pub pso_iters: usize,
    pub ao_iters: usize,
    pub penalty: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub c1: f64,
    pub c2: f64,
    pub trials: usize,
    pub seed: u64,
    /// Radius of the cell in which users and Eve are dropped, meters.
    pub cell_radius: f64,
    /// Distances between nodes are clamped to at least this, meters.
    pub min_node_distance: f64,
}

/// Carrier used when no wavelength is configured (5 cm, 6 GHz).
pub const DEFAULT_WAVELENGTH: f64 = 0.05;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

impl SystemConfig {
    /// Full simulation parameters with the complete iteration budgets.
    pub fn full_budget() -> Self {
        SystemConfig {
            n_t: 4,
            n_r: 4,
            region: 2.0,
            paths: 3,
            min_distance: DEFAULT_WAVELENGTH / 2.0,
            wavelength: DEFAULT_WAVELENGTH,
            path_loss: db_to_linear(-40.0),
            path_loss_exponent: 2.8,
            sigma_b2: dbm_to_watts(-90.0),
            sigma_d2: dbm_to_watts(-90.0),
            sigma_e2: dbm_to_watts(-90.0),
            rho: db_to_linear(-100.0),
            p_b: dbm_to_watts(20.0),
            p_u: dbm_to_watts(20.0),
            eps_sca: 1e-3,
            eps_ao: 1e-3,
            particles: 100,
            sca_iters: 100,
            pso_iters: 100,
            ao_iters: 100,
            penalty: 100.0,
            omega_min: 0.4,
            omega_max: 0.9,
            c1: 1.4,
            c2: 1.4,
            trials: 20,
            seed: 2024,
            cell_radius: 50.0,
            min_node_distance: 1.0,
        }
    }

    /// Same physics as [`SystemConfig::full_budget`] with reduced iteration
    /// budgets suitable for laptop-scale sweeps.
    pub fn desk_scale() -> Self {
        SystemConfig {
            particles: 40,
            pso_iters: 40,
            sca_iters: 30,
            ao_iters: 15,
            ..Self::full_budget()
        }
    }

    /// Switch the iteration budgets to the full values, keeping physics.
    pub fn with_full_budget(mut self) -> Self {
        let full = Self::full_budget();
        self.particles = full.particles;
        self.pso_iters = full.pso_iters;
        self.sca_iters = full.sca_iters;
        self.ao_iters = full.ao_iters;
        self
    }

    /// Half side of the moving regions in meters.
    pub fn half_width(&self) -> f64 {
        0.5 * self.region * self.wavelength
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, Self::desk_scale())
    }

    /// Parse `key = value` lines on top of `base`. `#` starts a comment.
    pub fn parse(text: &str, base: SystemConfig) -> Result<Self> {
        let mut cfg = base;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                reason: format!("expected `key = value`, found `{line}`"),
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one assignment. Keys are case-insensitive and mirror the field
    /// names; a few symbol aliases (`P_B`, `N`, `noise`, `beta`) are accepted.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key_lc = key.to_ascii_lowercase();
        match key_lc.as_str() {
            "n" => {
                let n = count(key, value)?;
                self.n_t = n;
                self.n_r = n;
            }
            "n_t" => self.n_t = count(key, value)?,
            "n_r" => self.n_r = count(key, value)?,
            "region" | "a" => self.region = plain(key, value)?,
            "paths" | "l" => self.paths = count(key, value)?,
            "min_distance" | "d" => self.min_distance = self.length(key, value)?,
            "wavelength" | "lambda" => {
                let new = plain(key, value)?;
                if new <= 0.0 {
                    return Err(Error::config(key, "wavelength must be positive"));
                }
                // keep D fixed in wavelengths unless it is set afterwards
                self.min_distance *= new / self.wavelength;
                self.wavelength = new;
            }
            "path_loss" | "beta" => self.path_loss = power(key, value)?,
            "path_loss_exponent" | "alpha" => self.path_loss_exponent = plain(key, value)?,
            "noise" => {
                let p = power(key, value)?;
                self.sigma_b2 = p;
                self.sigma_d2 = p;
                self.sigma_e2 = p;
            }
            "sigma_b2" => self.sigma_b2 = power(key, value)?,
            "sigma_d2" => self.sigma_d2 = power(key, value)?,
            "sigma_e2" => self.sigma_e2 = power(key, value)?,
            "rho" => self.rho = power(key, value)?,
            "p_b" => self.p_b = power(key, value)?,
            "p_u" => self.p_u = power(key, value)?,
            "eps_sca" | "epsilon1" => self.eps_sca = plain(key, value)?,
            "eps_ao" | "epsilon2" => self.eps_ao = plain(key, value)?,
            "particles" | "i" => self.particles = count(key, value)?,
            "sca_iters" | "m" => self.sca_iters = count(key, value)?,
            "pso_iters" | "k" => self.pso_iters = count(key, value)?,
            "ao_iters" | "c" => self.ao_iters = count(key, value)?,
            "penalty" | "eta" => self.penalty = plain(key, value)?,
            "omega_min" => self.omega_min = plain(key, value)?,
            "omega_max" => self.omega_max = plain(key, value)?,
            "c1" => self.c1 = plain(key, value)?,
            "c2" => self.c2 = plain(key, value)?,
            "trials" => self.trials = count(key, value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::config(key, format!("not an unsigned integer: `{value}`")))?
            }
            "cell_radius" => self.cell_radius = plain(key, value)?,
            "min_node_distance" => self.min_node_distance = plain(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    /// A length in meters, or in wavelengths with a `lambda` suffix.
    fn length(&self, key: &str, value: &str) -> Result<f64> {
        let v = value.trim();
        match v.strip_suffix("lambda") {
            Some(num) => Ok(parse_f64(key, num)? * self.wavelength),
            None => parse_f64(key, v),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("wavelength", self.wavelength),
            ("sigma_b2", self.sigma_b2),
            ("sigma_d2", self.sigma_d2),
            ("sigma_e2", self.sigma_e2),
            ("path_loss", self.path_loss),
            ("eps_sca", self.eps_sca),
            ("eps_ao", self.eps_ao),
            ("penalty", self.penalty),
            ("c1", self.c1),
            ("c2", self.c2),
            ("omega_min", self.omega_min),
            ("cell_radius", self.cell_radius),
            ("min_node_distance", self.min_node_distance),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(key, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("region", self.region),
            ("min_distance", self.min_distance),
            ("p_b", self.p_b),
            ("p_u", self.p_u),
            ("path_loss_exponent", self.path_loss_exponent),
        ];
        for (key, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(key, format!("must be non-negative, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::config("rho", "must lie in [0, 1]"));
        }
        if self.omega_min > self.omega_max {
            return Err(Error::config("omega_max", "must be at least omega_min"));
        }
        let counts = [
            ("n_t", self.n_t),
            ("n_r", self.n_r),
            ("paths", self.paths),
            ("particles", self.particles),
            ("sca_iters", self.sca_iters),
            ("pso_iters", self.pso_iters),
            ("ao_iters", self.ao_iters),
        ];
        for (key, v) in counts {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Link powers in the engine's scalar type.
    pub fn budget<T: Real>(&self) -> LinkBudget<T> {
        LinkBudget {
            p_b: T::lit(self.p_b),
            p_u: T::lit(self.p_u),
            rho: T::lit(self.rho),
            sigma_b2: T::lit(self.sigma_b2),
            sigma_d2: T::lit(self.sigma_d2),
            sigma_e2: T::lit(self.sigma_e2),
        }
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::desk_scale()
    }
}

/// Transmit/receive powers and noise levels, all linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    pub p_b: T,
    pub p_u: T,
    pub rho: T,
    pub sigma_b2: T,
    pub sigma_d2: T,
    pub sigma_e2: T,
}

fn parse_f64(key: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::config(key, format!("not a number: `{}`", s.trim())))
}

fn plain(key: &str, value: &str) -> Result<f64> {
    parse_f64(key, value)
}

fn count(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(key, format!("not a count: `{}`", value.trim())))
}

/// Power or ratio value: linear, `dB`, or `dBm`.
fn power(key: &str, value: &str) -> Result<f64> {
    let v = value.trim();
    let lower = v.to_ascii_lowercase();
    let linear = if let Some(num) = lower.strip_suffix("dbm") {
        dbm_to_watts(parse_f64(key, num)?)
    } else if let Some(num) = lower.strip_suffix("db") {
        db_to_linear(parse_f64(key, num)?)
    } else {
        parse_f64(key, v)?
    };
    Ok(linear)
}
