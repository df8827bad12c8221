//! Antenna placement by particle swarm optimization.
//!
//! All transmit antennas move together as one particle (`2 N_t` coordinates),
//! then all receive antennas. Minimum-spacing violations are handled with a
//! penalty of `η` per violating antenna, and positions are clamped into the
//! square region after every move.

use std::cell::Cell;

use rand::Rng;

use crate::channel::{AntennaLayout, Channels, Scenario};
use crate::config::{LinkBudget, SystemConfig};
use crate::error::{Error, Result};
use crate::metrics::{BeamformingState, DuplexMode, secrecy_report};
use crate::rng::stream;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoParams<T> {
    pub particles: usize,
    pub iterations: usize,
    pub c1: T,
    pub c2: T,
    pub omega_min: T,
    pub omega_max: T,
    pub penalty: T,
    /// Half side of the square region, meters.
    pub half_width: T,
    pub min_distance: T,
}

impl<T: Real> PsoParams<T> {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        PsoParams {
            particles: cfg.particles,
            iterations: cfg.pso_iters,
            c1: T::lit(cfg.c1),
            c2: T::lit(cfg.c2),
            omega_min: T::lit(cfg.omega_min),
            omega_max: T::lit(cfg.omega_max),
            penalty: T::lit(cfg.penalty),
            half_width: T::lit(cfg.half_width()),
            min_distance: T::lit(cfg.min_distance),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if self.particles == 0 {
            return Err(Error::config("particles", "must be at least 1"));
        }
        if !(self.omega_min > zero && self.omega_min <= self.omega_max) {
            return Err(Error::config("omega_min", "need 0 < omega_min <= omega_max"));
        }
        if !(self.c1 > zero && self.c2 > zero && self.penalty > zero) {
            return Err(Error::config("c1", "learning factors and penalty must be positive"));
        }
        if self.min_distance < zero || self.half_width < zero {
            return Err(Error::config("min_distance", "must be non-negative"));
        }
        Ok(())
    }
}

/// Linearly decreasing inertia `ω_max - (ω_max - ω_min) k / K`.
pub fn inertia_weight<T: Real>(k: usize, total: usize, omega_min: T, omega_max: T) -> T {
    if total == 0 {
        return omega_max;
    }
    let frac = T::from_usize(k).unwrap() / T::from_usize(total).unwrap();
    omega_max - (omega_max - omega_min) * frac
}

pub fn clamp_to_region<T: Real>(coords: &mut [T], half_width: T) {
    for x in coords.iter_mut() {
        *x = x.max(-half_width).min(half_width);
    }
}

/// Number of antennas with at least one neighbor closer than `min_distance`.
pub fn violation_count<T: Real>(coords: &[T], min_distance: T) -> usize {
    let n = coords.len() / 2;
    let limit = min_distance * min_distance;
    let mut violating = vec![false; n];
    for a in 0..n {
        for b in (a + 1)..n {
            let dx = coords[2 * a] - coords[2 * b];
            let dy = coords[2 * a + 1] - coords[2 * b + 1];
            if dx * dx + dy * dy < limit {
                violating[a] = true;
                violating[b] = true;
            }
        }
    }
    violating.iter().filter(|&&v| v).count()
}

/// Penalized fitness `R_sec - η Γ`.
pub fn fitness<T: Real>(secrecy_rate: T, coords: &[T], penalty: T, min_distance: T) -> T {
    secrecy_rate - penalty * T::from_usize(violation_count(coords, min_distance)).unwrap()
}

#[derive(Debug, Clone)]
pub struct PsoOutcome<T> {
    pub best: Vec<T>,
    pub fitness: T,
    /// Global-best fitness after initialization and after every iteration.
    pub history: Vec<T>,
    /// Whether the returned particle satisfies the spacing constraint.
    pub feasible: bool,
}

/// Maximize `fitness` over the clamped box. Particle 0 starts at `initial`;
/// the rest start uniformly in the region. Each particle draws from its own
/// stream keyed by `(seed, particle, iteration)`.
pub fn pso_optimize<T: Real, F>(initial: &[T], mut fitness: F, params: &PsoParams<T>, seed: u64) -> PsoOutcome<T>
where
    F: FnMut(&[T]) -> T,
{
    let dim = initial.len();
    let half = params.half_width;
    let vmax = half * T::lit(0.5);
    let uniform = |rng: &mut rand_chacha::ChaCha8Rng, lo: T, hi: T| lo + (hi - lo) * T::lit(rng.random::<f64>());

    let mut positions: Vec<Vec<T>> = Vec::with_capacity(params.particles);
    let mut velocities: Vec<Vec<T>> = Vec::with_capacity(params.particles);
    for i in 0..params.particles {
        let mut rng = stream(seed, &[i as u64, 0]);
        let pos = if i == 0 {
            let mut p = initial.to_vec();
            clamp_to_region(&mut p, half);
            p
        } else {
            (0..dim).map(|_| uniform(&mut rng, -half, half)).collect()
        };
        velocities.push((0..dim).map(|_| uniform(&mut rng, -vmax, vmax)).collect());
        positions.push(pos);
    }
    let mut scores: Vec<T> = positions.iter().map(|p| fitness(p)).collect();
    let mut personal = positions.clone();
    let mut personal_scores = scores.clone();
    let mut g = 0;
    for i in 1..params.particles {
        if scores[i] > scores[g] {
            g = i;
        }
    }
    let mut global = positions[g].clone();
    let mut global_score = scores[g];
    let mut history = vec![global_score];

    for k in 1..=params.iterations {
        let omega = inertia_weight(k, params.iterations, params.omega_min, params.omega_max);
        for i in 0..params.particles {
            let mut rng = stream(seed, &[i as u64, k as u64]);
            for d in 0..dim {
                let e1 = T::lit(rng.random::<f64>());
                let e2 = T::lit(rng.random::<f64>());
                let x = positions[i][d];
                velocities[i][d] = omega * velocities[i][d]
                    + params.c1 * e1 * (personal[i][d] - x)
                    + params.c2 * e2 * (global[d] - x);
                positions[i][d] = x + velocities[i][d];
            }
            clamp_to_region(&mut positions[i], half);
            scores[i] = fitness(&positions[i]);
        }
        // serial barrier: bests are updated once the whole swarm has moved
        for i in 0..params.particles {
            if scores[i] > personal_scores[i] {
                personal_scores[i] = scores[i];
                personal[i].clone_from(&positions[i]);
            }
            if scores[i] > global_score {
                global_score = scores[i];
                global.clone_from(&positions[i]);
            }
        }
        history.push(global_score);
    }
    let feasible = violation_count(&global, params.min_distance) == 0;
    PsoOutcome {
        best: global,
        fitness: global_score,
        history,
        feasible,
    }
}

#[derive(Debug, Clone)]
pub struct PositionOutcome<T: Real> {
    pub layout: AntennaLayout<T>,
    pub channels: Channels<T>,
    pub feasible: bool,
    pub transmit_history: Vec<T>,
    pub receive_history: Vec<T>,
}

/// Move all transmit antennas with the receive side fixed, then all receive
/// antennas with the optimized transmit side fixed.
#[allow(clippy::too_many_arguments)]
pub fn optimize_positions<T: Real>(
    layout: &AntennaLayout<T>,
    scenario: &Scenario<T>,
    state: &BeamformingState<T>,
    budget: &LinkBudget<T>,
    mode: DuplexMode,
    params: &PsoParams<T>,
    seed: u64,
) -> Result<PositionOutcome<T>> {
    params.validate()?;
    let mut current = layout.clone();
    let mut channels = scenario.channels(&current)?;
    let max_rate = Cell::new(T::zero());

    let tx = {
        let mut ch = channels.clone();
        let mut trial = current.clone();
        let fit = |coords: &[T]| {
            trial.transmit.copy_from_slice(coords);
            scenario.update_transmit(&mut ch, &trial);
            let rate = secrecy_report(&ch, state, budget, mode).sum;
            max_rate.set(max_rate.get().max(rate));
            fitness(rate, coords, params.penalty, params.min_distance)
        };
        pso_optimize(&current.transmit, fit, params, crate::rng::derive_seed(seed, &[0]))
    };
    current.transmit = tx.best;
    scenario.update_transmit(&mut channels, &current);

    let rx = {
        let mut ch = channels.clone();
        let mut trial = current.clone();
        let fit = |coords: &[T]| {
            trial.receive.copy_from_slice(coords);
            scenario.update_receive(&mut ch, &trial);
            let rate = secrecy_report(&ch, state, budget, mode).sum;
            max_rate.set(max_rate.get().max(rate));
            fitness(rate, coords, params.penalty, params.min_distance)
        };
        pso_optimize(&current.receive, fit, params, crate::rng::derive_seed(seed, &[1]))
    };
    current.receive = rx.best;
    scenario.update_receive(&mut channels, &current);

    if max_rate.get() >= params.penalty {
        return Err(Error::PenaltyTooSmall {
            penalty: params.penalty.as_f64(),
            rate: max_rate.get().as_f64(),
        });
    }
    let feasible = current.is_feasible(params.half_width, params.min_distance);
    Ok(PositionOutcome {
        layout: current,
        channels,
        feasible,
        transmit_history: tx.history,
        receive_history: rx.history,
    })
}
