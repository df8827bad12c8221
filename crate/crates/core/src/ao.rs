//! Alternating optimization over antenna positions, transmit covariances
//! and the receive combiner, plus the benchmark schemes.
//!
//! One outer iteration runs, in order: PSO placement (when the scheme moves
//! antennas), SCA on `(W, V)` followed by rank-one extraction, and the
//! closed-form receive combiner. A stage whose output lowers the reported sum
//! secrecy rate by more than [`GUARD_SLACK`] is discarded in favor of the
//! incumbent, so the recorded rate sequence is non-decreasing.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::Complex;
use rand::Rng;
use serde::Serialize;

use crate::channel::{AntennaLayout, Channels, Scenario};
use crate::config::{LinkBudget, SystemConfig};
use crate::error::{Error, Result, Stage};
use crate::metrics::{BeamformingState, DuplexMode, RateReport, secrecy_report};
use crate::positioning::{PsoParams, clamp_to_region, optimize_positions, violation_count};
use crate::receive::{build_interference_covariance, optimal_receive_beamformer};
use crate::rng::{derive_seed, stream};
use crate::scalar::{CMatrix, CVector, Real, gram, min_eigenvalue, norm2, real, trace_re};
use crate::transmit::{
    DcObjective, EffectiveChannels, InnerOptions, ScaOptions, rank_one_extract, sca_multistart, transmit_starts,
};

/// Allowed decrease of the sum rate before a stage output is rejected.
pub const GUARD_SLACK: f64 = 1e-9;

/// Attempts allowed when drawing a random layout that respects the spacing.
pub const LAYOUT_ATTEMPTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Scheme {
    #[serde(rename = "MA-FD-PSO")]
    MaFdPso,
    #[serde(rename = "MA-FD-PSO-NoAN")]
    MaFdPsoNoAn,
    #[serde(rename = "FPA-FD")]
    FpaFd,
    #[serde(rename = "MA-FD-RP")]
    MaFdRp,
    #[serde(rename = "MA-HD-PSO")]
    MaHdPso,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::MaFdPso,
        Scheme::MaFdPsoNoAn,
        Scheme::FpaFd,
        Scheme::MaFdRp,
        Scheme::MaHdPso,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Scheme::MaFdPso => "MA-FD-PSO",
            Scheme::MaFdPsoNoAn => "MA-FD-PSO-NoAN",
            Scheme::FpaFd => "FPA-FD",
            Scheme::MaFdRp => "MA-FD-RP",
            Scheme::MaHdPso => "MA-HD-PSO",
        }
    }

    pub fn settings(self) -> SchemeSettings {
        let (placement, noise, mode) = match self {
            Scheme::MaFdPso => (Placement::Optimized, true, DuplexMode::Full),
            Scheme::MaFdPsoNoAn => (Placement::Optimized, false, DuplexMode::Full),
            Scheme::FpaFd => (Placement::FixedGrid, true, DuplexMode::Full),
            Scheme::MaFdRp => (Placement::Random, true, DuplexMode::Full),
            Scheme::MaHdPso => (Placement::Optimized, true, DuplexMode::Half),
        };
        SchemeSettings {
            placement,
            artificial_noise: noise,
            mode,
        }
    }

    /// Stable tag mixed into algorithm-internal seeds.
    pub fn tag(self) -> u64 {
        match self {
            Scheme::MaFdPso => 11,
            Scheme::MaFdPsoNoAn => 12,
            Scheme::FpaFd => 13,
            Scheme::MaFdRp => 14,
            Scheme::MaHdPso => 15,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownScheme(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// PSO over both arrays every outer iteration.
    Optimized,
    /// Half-wavelength grid centered in each region, never moved.
    FixedGrid,
    /// One random feasible layout, never moved.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SchemeSettings {
    pub placement: Placement,
    pub artificial_noise: bool,
    pub mode: DuplexMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoConfig<T> {
    pub max_iters: usize,
    /// Relative improvement threshold.
    pub eps: f64,
    pub settings: SchemeSettings,
    pub pso: PsoParams<T>,
    pub sca: ScaOptions,
    pub budget: LinkBudget<T>,
    pub n_t: usize,
    pub n_r: usize,
    pub wavelength: T,
}

impl<T: Real> AoConfig<T> {
    pub fn new(cfg: &SystemConfig, settings: SchemeSettings) -> Self {
        AoConfig {
            max_iters: cfg.ao_iters,
            eps: cfg.eps_ao,
            settings,
            pso: PsoParams::from_config(cfg),
            sca: ScaOptions {
                eps: cfg.eps_sca,
                max_iters: cfg.sca_iters,
                inner: InnerOptions::default(),
            },
            budget: cfg.budget(),
            n_t: cfg.n_t,
            n_r: cfg.n_r,
            wavelength: T::lit(cfg.wavelength),
        }
    }

    pub fn for_scheme(cfg: &SystemConfig, scheme: Scheme) -> Self {
        Self::new(cfg, scheme.settings())
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::config("ao_iters", "must be at least 1"));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::config("eps_ao", "must be positive"));
        }
        self.pso.validate()
    }
}

/// Seeds of one optimization run: the initial random layout and the PSO
/// search are drawn from separate streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AoSeeds {
    pub layout: u64,
    pub search: u64,
}

impl From<u64> for AoSeeds {
    fn from(seed: u64) -> Self {
        AoSeeds {
            layout: derive_seed(seed, &[1]),
            search: derive_seed(seed, &[2]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Relative improvement fell below the threshold.
    Converged,
    /// Iteration budget exhausted.
    MaxIterations,
    /// Sum rate is zero, the relative test is undefined.
    ZeroRate,
}

/// Summary of one outer iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationSummary {
    pub c: usize,
    pub ssr: f64,
    pub positions_ms: f64,
    pub transmit_ms: f64,
    pub receive_ms: f64,
    pub sca_iterations: usize,
    pub inner_iterations: usize,
    /// SCA objective history of this iteration's transmit stage.
    pub sca_history: Vec<f64>,
    pub tightness: f64,
    pub relaxation_gap: f64,
    pub rejected: Vec<Stage>,
}

#[derive(Debug, Clone)]
pub struct AoTrace<T: Real> {
    /// Sum secrecy rate at initialization and after every outer iteration.
    pub ssr: Vec<T>,
    pub iterations: Vec<IterationSummary>,
    pub layouts: Vec<AntennaLayout<T>>,
    pub states: Vec<BeamformingState<T>>,
    pub termination: Termination,
}

#[derive(Debug, Clone)]
pub struct AoOutcome<T: Real> {
    pub layout: AntennaLayout<T>,
    pub state: BeamformingState<T>,
    pub report: RateReport<T>,
    pub trace: AoTrace<T>,
    pub constraints: ConstraintCheck,
}

/// Post-check of the problem constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstraintCheck {
    pub unit_combiner: bool,
    pub psd: bool,
    pub power: bool,
    pub region: bool,
    pub spacing: bool,
}

impl ConstraintCheck {
    pub fn beamformers_ok(&self) -> bool {
        self.unit_combiner && self.psd && self.power
    }

    pub fn layout_ok(&self) -> bool {
        self.region && self.spacing
    }

    pub fn all(&self) -> bool {
        self.beamformers_ok() && self.layout_ok()
    }
}

/// Exact checks: `| ‖w_r‖ - 1 | ≤ 1e-12`, eigenvalues of `W`, `V` at least
/// `-1e-9`, `Tr(W+V) ≤ P_B (1 + 1e-9)`, coordinates inside the region and
/// pairwise spacing at least `D`.
pub fn check_constraints<T: Real>(
    layout: &AntennaLayout<T>,
    state: &BeamformingState<T>,
    p_b: T,
    half_width: T,
    min_distance: T,
) -> ConstraintCheck {
    let norm = norm2(&state.w_r).sqrt();
    let floor = T::lit(-1e-9);
    ConstraintCheck {
        unit_combiner: (norm - T::one()).abs() <= T::floor_tol(1e-12),
        psd: min_eigenvalue(&state.w) >= floor && min_eigenvalue(&state.v) >= floor,
        power: trace_re(&state.w) + trace_re(&state.v) <= p_b * (T::one() + T::floor_tol(1e-9)),
        region: layout.within_region(half_width),
        spacing: violation_count(&layout.transmit, min_distance) == 0
            && violation_count(&layout.receive, min_distance) == 0,
    }
}

/// Half-wavelength grid, row-major with `ceil(√N)` columns, centered on the
/// region origin and clamped into the region.
pub fn fpa_grid<T: Real>(n: usize, wavelength: T, half_width: T) -> Vec<T> {
    if n == 0 {
        return Vec::new();
    }
    let cols = (n as f64).sqrt().ceil() as usize;
    let rows = n.div_ceil(cols);
    let spacing = wavelength * T::lit(0.5);
    let x0 = T::from_usize(cols - 1).unwrap() * T::lit(0.5);
    let y0 = T::from_usize(rows - 1).unwrap() * T::lit(0.5);
    let mut coords = Vec::with_capacity(2 * n);
    for k in 0..n {
        let (r, c) = (k / cols, k % cols);
        coords.push((T::from_usize(c).unwrap() - x0) * spacing);
        coords.push((y0 - T::from_usize(r).unwrap()) * spacing);
    }
    clamp_to_region(&mut coords, half_width);
    coords
}

/// Draw `n` positions uniformly in the region, resampling any antenna that
/// lands closer than `min_distance` to one already placed. Returns the
/// layout and the number of draws used.
pub fn random_feasible_positions<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    half_width: T,
    min_distance: T,
    max_attempts: usize,
) -> Result<(Vec<T>, usize)> {
    let h = half_width.as_f64();
    let d2 = min_distance * min_distance;
    let mut attempts = 0;
    'restart: while attempts < max_attempts {
        let mut coords: Vec<T> = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let mut local = 0;
            loop {
                if attempts >= max_attempts {
                    break 'restart;
                }
                attempts += 1;
                local += 1;
                let x = T::lit(rng.random_range(-h..=h));
                let y = T::lit(rng.random_range(-h..=h));
                let clear = coords.chunks_exact(2).all(|p| {
                    let (dx, dy) = (p[0] - x, p[1] - y);
                    dx * dx + dy * dy >= d2
                });
                if clear {
                    coords.push(x);
                    coords.push(y);
                    break;
                }
                if local >= 1_000 {
                    continue 'restart;
                }
            }
        }
        return Ok((coords, attempts));
    }
    Err(Error::InfeasibleLayout { attempts })
}

fn unit_or_first_axis<T: Real>(h: &CVector<T>) -> CVector<T> {
    let n = norm2(h).sqrt();
    if n > T::lit(crate::receive::DEGENERATE_NORM) {
        h.map(|z| z / real(n))
    } else {
        let mut e = CVector::zeros(h.len());
        if !h.is_empty() {
            e[0] = real(T::one());
        }
        e
    }
}

/// Initial layout and beamformers: a layout according to the placement
/// policy, `w` matched to `h_BD` with power `P_B/2`, isotropic AN with power
/// `P_B/2`, and the matched-filter combiner.
pub fn initialize_state<T: Real>(
    scenario: &Scenario<T>,
    config: &AoConfig<T>,
    layout_seed: u64,
) -> Result<(AntennaLayout<T>, BeamformingState<T>)> {
    let half = config.pso.half_width;
    let d = config.pso.min_distance;
    let layout = match config.settings.placement {
        Placement::FixedGrid => AntennaLayout::new(
            fpa_grid(config.n_t, config.wavelength, half),
            fpa_grid(config.n_r, config.wavelength, half),
        )?,
        Placement::Optimized | Placement::Random => {
            let mut rng = stream(layout_seed, &[]);
            let (t, _) = random_feasible_positions(&mut rng, config.n_t, half, d, LAYOUT_ATTEMPTS)?;
            let (r, _) = random_feasible_positions(&mut rng, config.n_r, half, d, LAYOUT_ATTEMPTS)?;
            AntennaLayout::new(t, r)?
        }
    };
    let ch = scenario.channels(&layout)?;
    let p_b = config.budget.p_b;
    let half_power = p_b * T::lit(0.5);
    let w = unit_or_first_axis(&ch.h_bd).map(|z| z * half_power.sqrt());
    let n_t = config.n_t;
    let v_cov = if config.settings.artificial_noise {
        CMatrix::identity(n_t, n_t).map(|z: Complex<T>| z * (half_power / T::from_usize(n_t).unwrap()))
    } else {
        CMatrix::zeros(n_t, n_t)
    };
    let state = BeamformingState {
        w_r: unit_or_first_axis(&ch.h_ub),
        w: gram(&w),
        v: v_cov,
        w_vec: Some(w),
        v_vec: None,
    };
    Ok((layout, state))
}

struct Incumbent<'a, T: Real> {
    scenario: &'a Scenario<T>,
    layout: AntennaLayout<T>,
    channels: Channels<T>,
    state: BeamformingState<T>,
    report: RateReport<T>,
}

/// Run the alternating optimization for one scenario.
pub fn alternating_optimize<T: Real>(
    scenario: &Scenario<T>,
    config: &AoConfig<T>,
    seeds: AoSeeds,
) -> Result<AoOutcome<T>> {
    config.validate()?;
    let budget = config.budget;
    let settings = config.settings;
    let mode = settings.mode;
    let slack = T::lit(GUARD_SLACK);
    let (half, dmin) = (config.pso.half_width, config.pso.min_distance);

    let (layout, state) =
        initialize_state(scenario, config, seeds.layout).map_err(|e| e.in_stage(Stage::Initialization))?;
    let channels = scenario.channels(&layout)?;
    let report = secrecy_report(&channels, &state, &budget, mode);
    let mut inc = Incumbent {
        scenario,
        layout,
        channels,
        state,
        report,
    };

    let mut trace = AoTrace {
        ssr: vec![inc.report.sum],
        iterations: Vec::new(),
        layouts: vec![inc.layout.clone()],
        states: vec![inc.state.clone()],
        termination: Termination::MaxIterations,
    };

    for c in 1..=config.max_iters {
        let prev = inc.report.sum;
        let mut summary = IterationSummary {
            c,
            ssr: 0.0,
            positions_ms: 0.0,
            transmit_ms: 0.0,
            receive_ms: 0.0,
            sca_iterations: 0,
            inner_iterations: 0,
            sca_history: Vec::new(),
            tightness: 0.0,
            relaxation_gap: 0.0,
            rejected: Vec::new(),
        };

        // antenna positions
        if settings.placement == Placement::Optimized {
            let clock = Instant::now();
            let out = optimize_positions(
                &inc.layout,
                inc.scenario,
                &inc.state,
                &budget,
                mode,
                &config.pso,
                derive_seed(seeds.search, &[c as u64]),
            )
            .map_err(|e| e.in_stage(Stage::Positions))?;
            let report = secrecy_report(&out.channels, &inc.state, &budget, mode);
            let keeps_feasibility = out.feasible || !inc.layout.is_feasible(half, dmin);
            if report.sum >= inc.report.sum - slack && keeps_feasibility {
                inc.layout = out.layout;
                inc.channels = out.channels;
                inc.report = report;
            } else {
                log::debug!("iteration {c}: position update rejected");
                summary.rejected.push(Stage::Positions);
            }
            summary.positions_ms = clock.elapsed().as_secs_f64() * 1e3;
        }

        // transmit covariances
        {
            let clock = Instant::now();
            let eff = EffectiveChannels::new(&inc.channels, &inc.state.w_r, budget.rho);
            let dc = DcObjective::for_mode(&eff, &budget, mode);
            let initial = (inc.state.w.clone(), inc.state.v.clone());
            let sca = sca_multistart(&dc, transmit_starts(initial), budget.p_b, settings.artificial_noise, &config.sca)
                .map_err(|e| Error::from(e).in_stage(Stage::Transmit))?;
            let (w_vec, ratio_w) = rank_one_extract(&sca.w);
            let (v_vec, ratio_v) = if settings.artificial_noise {
                rank_one_extract(&sca.v)
            } else {
                (CVector::zeros(config.n_t), T::zero())
            };
            let candidate = BeamformingState::from_vectors(inc.state.w_r.clone(), w_vec, v_vec);
            let relaxed = sca.objective();
            let extracted = dc.value(&candidate.w, &candidate.v);
            summary.tightness = ratio_w.max(ratio_v).as_f64();
            summary.relaxation_gap = ((relaxed - extracted).abs() / relaxed.abs().max(T::lit(1e-12))).as_f64();
            summary.sca_iterations = sca.iterations;
            summary.inner_iterations = sca.inner_iterations;
            summary.sca_history = sca.history.iter().map(|x| x.as_f64()).collect();
            let report = secrecy_report(&inc.channels, &candidate, &budget, mode);
            if report.sum >= inc.report.sum - slack {
                inc.state = candidate;
                inc.report = report;
            } else {
                log::debug!("iteration {c}: transmit update rejected");
                summary.rejected.push(Stage::Transmit);
            }
            summary.transmit_ms = clock.elapsed().as_secs_f64() * 1e3;
        }

        // receive combiner
        {
            let clock = Instant::now();
            let rho = match mode {
                DuplexMode::Full => budget.rho,
                DuplexMode::Half => T::zero(),
            };
            let a = build_interference_covariance(&inc.channels.h_si, &inc.state.w, &inc.state.v, rho, budget.sigma_b2);
            match optimal_receive_beamformer(&a, &inc.channels.h_ub) {
                Ok(w_r) => {
                    let mut candidate = inc.state.clone();
                    candidate.w_r = w_r;
                    let report = secrecy_report(&inc.channels, &candidate, &budget, mode);
                    if report.sum >= inc.report.sum - slack {
                        inc.state = candidate;
                        inc.report = report;
                    } else {
                        summary.rejected.push(Stage::Receive);
                    }
                }
                // without an uplink channel every unit combiner is equally useless
                Err(Error::DegenerateChannel(_)) => summary.rejected.push(Stage::Receive),
                Err(e) => return Err(e.in_stage(Stage::Receive)),
            }
            summary.receive_ms = clock.elapsed().as_secs_f64() * 1e3;
        }

        let current = inc.report.sum;
        summary.ssr = current.as_f64();
        trace.ssr.push(current);
        trace.iterations.push(summary);
        trace.layouts.push(inc.layout.clone());
        trace.states.push(inc.state.clone());

        if current <= T::zero() {
            trace.termination = Termination::ZeroRate;
            break;
        }
        if (current - prev) / current <= T::lit(config.eps) {
            trace.termination = Termination::Converged;
            break;
        }
    }

    let constraints = check_constraints(&inc.layout, &inc.state, budget.p_b, half, dmin);
    Ok(AoOutcome {
        layout: inc.layout,
        state: inc.state,
        report: inc.report,
        trace,
        constraints,
    })
}

/// Result of one scheme on one scenario.
#[derive(Debug, Clone)]
pub struct SchemeRun<T: Real> {
    pub scheme: Scheme,
    pub outcome: AoOutcome<T>,
    pub elapsed_ms: f64,
}

/// Run `scheme` on `scenario`. The initial random layout depends only on
/// `seed`, so schemes compared on one trial start from the same positions;
/// the PSO stream additionally depends on the scheme.
pub fn run_scheme<T: Real>(scheme: Scheme, scenario: &Scenario<T>, config: &SystemConfig, seed: u64) -> Result<SchemeRun<T>> {
    config.validate()?;
    let ao = AoConfig::for_scheme(config, scheme);
    let seeds = AoSeeds {
        layout: derive_seed(seed, &[1]),
        search: derive_seed(seed, &[2, scheme.tag()]),
    };
    let clock = Instant::now();
    let outcome = alternating_optimize(scenario, &ao, seeds)?;
    Ok(SchemeRun {
        scheme,
        outcome,
        elapsed_ms: clock.elapsed().as_secs_f64() * 1e3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_scenario;

    fn quick_config() -> SystemConfig {
        SystemConfig {
            particles: 10,
            pso_iters: 8,
            sca_iters: 20,
            ao_iters: 5,
            ..SystemConfig::desk_scale()
        }
    }

    #[test]
    fn scheme_ids_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.id().parse::<Scheme>().unwrap(), s);
        }
        assert!(matches!("MA-XX".parse::<Scheme>(), Err(Error::UnknownScheme(_))));
    }

    #[test]
    fn fpa_grid_square_and_line() {
        let lambda = 0.05f64;
        let g = fpa_grid(4, lambda, lambda);
        let expected = [-0.25, 0.25, 0.25, 0.25, -0.25, -0.25, 0.25, -0.25].map(|x| x * lambda);
        for (a, b) in g.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(violation_count(&g, lambda / 2.0), 0);
        let g6 = fpa_grid(6, lambda, lambda);
        assert_eq!(g6.len(), 12);
        assert_eq!(violation_count(&g6, lambda / 2.0 - 1e-12), 0);
        assert!(g6.iter().all(|x| x.abs() <= lambda));
        let g1 = fpa_grid(1, lambda, lambda);
        assert_eq!(g1, vec![0.0, 0.0]);
    }

    #[test]
    fn rejection_sampling_finds_table_layouts() {
        let lambda = 0.05f64;
        let mut rng = stream(3, &[]);
        for _ in 0..20 {
            let (pos, attempts) = random_feasible_positions(&mut rng, 4, lambda, lambda / 2.0, LAYOUT_ATTEMPTS).unwrap();
            assert!(attempts <= LAYOUT_ATTEMPTS);
            assert_eq!(violation_count(&pos, lambda / 2.0), 0);
            assert!(pos.iter().all(|x| x.abs() <= lambda));
        }
        let (one, attempts) = random_feasible_positions(&mut rng, 1, 0.0f64, 1.0, 10).unwrap();
        assert_eq!((one, attempts), (vec![0.0, 0.0], 1));
        assert!(random_feasible_positions(&mut rng, 3, 0.0f64, 1.0, 500).is_err());
    }

    #[test]
    fn initial_state_satisfies_constraints() {
        let cfg = quick_config();
        let sc: Scenario<f64> = sample_scenario(&cfg, 2).unwrap();
        for scheme in Scheme::ALL {
            let ao = AoConfig::for_scheme(&cfg, scheme);
            let (layout, state) = initialize_state(&sc, &ao, 99).unwrap();
            let chk = check_constraints(&layout, &state, cfg.p_b, cfg.half_width(), cfg.min_distance);
            assert!(chk.all(), "{scheme}: {chk:?}");
            assert!((state.total_power() - if scheme == Scheme::MaFdPsoNoAn { 0.05 } else { 0.1 }).abs() < 1e-12);
        }
    }

    #[test]
    fn single_outer_iteration_records_two_points() {
        let mut cfg = quick_config();
        cfg.ao_iters = 1;
        let sc: Scenario<f64> = sample_scenario(&cfg, 4).unwrap();
        let out = alternating_optimize(&sc, &AoConfig::for_scheme(&cfg, Scheme::MaFdPso), AoSeeds::from(1)).unwrap();
        assert_eq!(out.trace.ssr.len(), 2);
        assert!(out.trace.ssr[1] >= out.trace.ssr[0] - GUARD_SLACK);
    }

    #[test]
    fn dead_channels_stop_at_first_check() {
        let cfg = quick_config();
        let mut sc: Scenario<f64> = sample_scenario(&cfg, 5).unwrap();
        sc.gains.g_ub.fill(Complex::new(0.0, 0.0));
        sc.gains.f_bd.fill(Complex::new(0.0, 0.0));
        sc.gains.f_be.fill(Complex::new(0.0, 0.0));
        let out = alternating_optimize(&sc, &AoConfig::for_scheme(&cfg, Scheme::MaFdPso), AoSeeds::from(3)).unwrap();
        assert_eq!(out.trace.ssr, vec![0.0, 0.0]);
        assert_eq!(out.trace.termination, Termination::ZeroRate);
    }

    #[test]
    fn no_noise_scheme_matches_clamped_noise_settings() {
        let cfg = quick_config();
        let sc: Scenario<f64> = sample_scenario(&cfg, 6).unwrap();
        let seeds = AoSeeds::from(42);
        let a = alternating_optimize(&sc, &AoConfig::for_scheme(&cfg, Scheme::MaFdPsoNoAn), seeds).unwrap();
        let mut settings = Scheme::MaFdPso.settings();
        settings.artificial_noise = false;
        let b = alternating_optimize(&sc, &AoConfig::new(&cfg, settings), seeds).unwrap();
        assert_eq!(a.trace.ssr, b.trace.ssr);
        assert_eq!(trace_re(&a.state.v), 0.0);
    }

    #[test]
    fn schemes_produce_monotone_feasible_runs() {
        let cfg = quick_config();
        let sc: Scenario<f64> = sample_scenario(&cfg, 7).unwrap();
        for scheme in Scheme::ALL {
            let run = run_scheme(scheme, &sc, &cfg, 10).unwrap();
            let t = &run.outcome.trace;
            assert!(t.ssr.windows(2).all(|w| w[1] >= w[0] - GUARD_SLACK), "{scheme}: {:?}", t.ssr);
            assert!(t.ssr.len() <= cfg.ao_iters + 1);
            assert!(run.outcome.constraints.all(), "{scheme}: {:?}", run.outcome.constraints);
            if matches!(scheme, Scheme::FpaFd | Scheme::MaFdRp) {
                assert!(t.layouts.windows(2).all(|l| l[0] == l[1]));
            }
        }
    }

    #[test]
    fn random_placement_starts_where_pso_starts() {
        let cfg = quick_config();
        let sc: Scenario<f64> = sample_scenario(&cfg, 8).unwrap();
        let a = run_scheme(Scheme::MaFdRp, &sc, &cfg, 77).unwrap();
        let b = run_scheme(Scheme::MaFdPso, &sc, &cfg, 77).unwrap();
        assert_eq!(a.outcome.trace.layouts[0], b.outcome.trace.layouts[0]);
    }

    #[test]
    fn zero_region_keeps_stacked_layout_flagged() {
        let mut cfg = quick_config();
        cfg.region = 0.0;
        let sc: Scenario<f64> = sample_scenario(&cfg, 9).unwrap();
        let layout = AntennaLayout::new(vec![0.0; 8], vec![0.0; 8]).unwrap();
        let ch = sc.channels(&layout).unwrap();
        let ao: AoConfig<f64> = AoConfig::for_scheme(&cfg, Scheme::MaFdPso);
        let state = BeamformingState::from_vectors(
            CVector::from_element(4, Complex::new(0.5, 0.0)),
            ch.h_bd.map(|z| z * 1e3),
            CVector::zeros(4),
        );
        let out = optimize_positions(&layout, &sc, &state, &ao.budget, DuplexMode::Full, &ao.pso, 1).unwrap();
        assert_eq!(out.layout, layout);
        assert!(!out.feasible);
    }
}
