//! Field-response channel model.
//!
//! Every BS-side channel is a function of the antenna positions inside the
//! square moving regions. A path with elevation `θ` and azimuth `φ` has the
//! wave vector `s = [sin θ cos φ, cos θ]`; an antenna at `p` sees the phase
//! `2π s·p / λ` relative to the region origin at the center of the square.

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::scalar::{CMatrix, CVector, Real, unit_phasor};

/// Elevation/azimuth pairs of the paths on one side of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PathAngles<T> {
    pub elevation: Vec<T>,
    pub azimuth: Vec<T>,
}

impl<T: Real> PathAngles<T> {
    pub fn new(elevation: Vec<T>, azimuth: Vec<T>) -> Result<Self> {
        if elevation.len() != azimuth.len() || elevation.is_empty() {
            return Err(Error::Dimension(format!(
                "path angles need equal non-zero lengths, got {} and {}",
                elevation.len(),
                azimuth.len()
            )));
        }
        Ok(PathAngles { elevation, azimuth })
    }

    pub fn len(&self) -> usize {
        self.elevation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elevation.is_empty()
    }

    /// Normalized wave vector of path `l`.
    pub fn wave_vector(&self, l: usize) -> [T; 2] {
        let (theta, phi) = (self.elevation[l], self.azimuth[l]);
        [theta.sin() * phi.cos(), theta.cos()]
    }
}

/// Stacked antenna coordinates, `[x1, y1, x2, y2, ...]` per side, meters.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaLayout<T> {
    pub transmit: Vec<T>,
    pub receive: Vec<T>,
}

impl<T: Real> AntennaLayout<T> {
    pub fn new(transmit: Vec<T>, receive: Vec<T>) -> Result<Self> {
        if !transmit.len().is_multiple_of(2) || !receive.len().is_multiple_of(2) {
            return Err(Error::Dimension("layouts hold (x, y) pairs".into()));
        }
        Ok(AntennaLayout { transmit, receive })
    }

    pub fn n_t(&self) -> usize {
        self.transmit.len() / 2
    }

    pub fn n_r(&self) -> usize {
        self.receive.len() / 2
    }

    /// Every coordinate lies in `[-half, half]`.
    pub fn within_region(&self, half: T) -> bool {
        self.transmit
            .iter()
            .chain(self.receive.iter())
            .all(|&x| x >= -half && x <= half)
    }

    /// Region bounds and minimum spacing on both sides.
    pub fn is_feasible(&self, half: T, min_distance: T) -> bool {
        self.within_region(half)
            && crate::positioning::violation_count(&self.transmit, min_distance) == 0
            && crate::positioning::violation_count(&self.receive, min_distance) == 0
    }
}

/// Small-scale responses between region origins and the other nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PathGains<T: Real> {
    /// SI path response, `L_r,SI x L_t,SI`.
    pub sigma: CMatrix<T>,
    pub g_ub: CVector<T>,
    pub f_bd: CVector<T>,
    pub f_be: CVector<T>,
    pub h_ud: Complex<T>,
    pub h_ue: Complex<T>,
}

/// Propagation distances in meters (already clamped to the minimum).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeDistances {
    pub bd: f64,
    pub be: f64,
    pub ub: f64,
    pub ud: f64,
    pub ue: f64,
}

/// One random channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Real> {
    pub si_tx: PathAngles<T>,
    pub si_rx: PathAngles<T>,
    pub ub_rx: PathAngles<T>,
    pub bd_tx: PathAngles<T>,
    pub be_tx: PathAngles<T>,
    pub gains: PathGains<T>,
    pub distances: NodeDistances,
    pub wavelength: T,
}

/// BS channels evaluated at one antenna layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Channels<T: Real> {
    /// `N_r x N_t`.
    pub h_si: CMatrix<T>,
    pub h_ub: CVector<T>,
    pub h_bd: CVector<T>,
    pub h_be: CVector<T>,
    pub h_ud: Complex<T>,
    pub h_ue: Complex<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `F(r)^H g`: arriving at the receive array.
    Receive,
    /// `G(t)^H f`: leaving the transmit array.
    Transmit,
}

/// Phase of one path at `position` relative to the region origin.
pub fn phase_difference<T: Real>(position: [T; 2], theta: T, phi: T, wavelength: T) -> T {
    let s = [theta.sin() * phi.cos(), theta.cos()];
    T::two_pi() * (s[0] * position[0] + s[1] * position[1]) / wavelength
}

pub fn field_response_vector<T: Real>(position: [T; 2], angles: &PathAngles<T>, wavelength: T) -> CVector<T> {
    CVector::from_iterator(
        angles.len(),
        (0..angles.len()).map(|l| {
            unit_phasor(phase_difference(position, angles.elevation[l], angles.azimuth[l], wavelength))
        }),
    )
}

/// `L x N` matrix whose column `n` is the response of antenna `n`.
pub fn field_response_matrix<T: Real>(positions: &[T], angles: &PathAngles<T>, wavelength: T) -> CMatrix<T> {
    let n = positions.len() / 2;
    let mut m = CMatrix::zeros(angles.len(), n);
    for (col, p) in positions.chunks_exact(2).enumerate() {
        for l in 0..angles.len() {
            let [sx, sy] = angles.wave_vector(l);
            let phase = T::two_pi() * (sx * p[0] + sy * p[1]) / wavelength;
            m[(l, col)] = unit_phasor(phase);
        }
    }
    m
}

/// `F_SI(r)^H Σ G_SI(t)`.
pub fn si_channel<T: Real>(transmit: &[T], receive: &[T], scenario: &Scenario<T>) -> Result<CMatrix<T>> {
    let sigma = &scenario.gains.sigma;
    if sigma.nrows() != scenario.si_rx.len() || sigma.ncols() != scenario.si_tx.len() {
        return Err(Error::Dimension(format!(
            "SI path response is {}x{} but path counts are {}x{}",
            sigma.nrows(),
            sigma.ncols(),
            scenario.si_rx.len(),
            scenario.si_tx.len()
        )));
    }
    let g = field_response_matrix(transmit, &scenario.si_tx, scenario.wavelength);
    let f = field_response_matrix(receive, &scenario.si_rx, scenario.wavelength);
    Ok(f.adjoint() * sigma * g)
}

/// SIMO/MISO channel of one antenna side: `M^H gains` with `M` the field
/// response matrix of `positions`.
pub fn link_channel<T: Real>(
    positions: &[T],
    gains: &CVector<T>,
    angles: &PathAngles<T>,
    wavelength: T,
    _direction: Direction,
) -> Result<CVector<T>> {
    if gains.len() != angles.len() {
        return Err(Error::Dimension(format!(
            "{} path gains for {} paths",
            gains.len(),
            angles.len()
        )));
    }
    let m = field_response_matrix(positions, angles, wavelength);
    Ok(m.adjoint() * gains)
}

impl<T: Real> Scenario<T> {
    pub fn paths(&self) -> usize {
        self.si_tx.len()
    }

    /// Evaluate every BS channel at `layout`.
    pub fn channels(&self, layout: &AntennaLayout<T>) -> Result<Channels<T>> {
        let lambda = self.wavelength;
        Ok(Channels {
            h_si: si_channel(&layout.transmit, &layout.receive, self)?,
            h_ub: link_channel(&layout.receive, &self.gains.g_ub, &self.ub_rx, lambda, Direction::Receive)?,
            h_bd: link_channel(&layout.transmit, &self.gains.f_bd, &self.bd_tx, lambda, Direction::Transmit)?,
            h_be: link_channel(&layout.transmit, &self.gains.f_be, &self.be_tx, lambda, Direction::Transmit)?,
            h_ud: self.gains.h_ud,
            h_ue: self.gains.h_ue,
        })
    }

    /// Refresh only the transmit-dependent channels.
    pub(crate) fn update_transmit(&self, channels: &mut Channels<T>, layout: &AntennaLayout<T>) {
        let lambda = self.wavelength;
        channels.h_si = si_channel(&layout.transmit, &layout.receive, self).expect("validated scenario");
        channels.h_bd = link_channel(&layout.transmit, &self.gains.f_bd, &self.bd_tx, lambda, Direction::Transmit)
            .expect("validated scenario");
        channels.h_be = link_channel(&layout.transmit, &self.gains.f_be, &self.be_tx, lambda, Direction::Transmit)
            .expect("validated scenario");
    }

    /// Refresh only the receive-dependent channels.
    pub(crate) fn update_receive(&self, channels: &mut Channels<T>, layout: &AntennaLayout<T>) {
        channels.h_si = si_channel(&layout.transmit, &layout.receive, self).expect("validated scenario");
        channels.h_ub = link_channel(&layout.receive, &self.gains.g_ub, &self.ub_rx, self.wavelength, Direction::Receive)
            .expect("validated scenario");
    }

    /// Serializable snapshot with complex numbers as `[re, im]` pairs.
    pub fn dump(&self) -> ScenarioDump {
        let angles = |a: &PathAngles<T>| -> Vec<[f64; 2]> {
            a.elevation
                .iter()
                .zip(&a.azimuth)
                .map(|(t, p)| [t.as_f64(), p.as_f64()])
                .collect()
        };
        let cplx = |z: &Complex<T>| [z.re.as_f64(), z.im.as_f64()];
        ScenarioDump {
            wavelength: self.wavelength.as_f64(),
            distances: self.distances,
            si_tx: angles(&self.si_tx),
            si_rx: angles(&self.si_rx),
            ub_rx: angles(&self.ub_rx),
            bd_tx: angles(&self.bd_tx),
            be_tx: angles(&self.be_tx),
            sigma_diag: (0..self.gains.sigma.nrows().min(self.gains.sigma.ncols()))
                .map(|i| cplx(&self.gains.sigma[(i, i)]))
                .collect(),
            g_ub: self.gains.g_ub.iter().map(cplx).collect(),
            f_bd: self.gains.f_bd.iter().map(cplx).collect(),
            f_be: self.gains.f_be.iter().map(cplx).collect(),
            h_ud: cplx(&self.gains.h_ud),
            h_ue: cplx(&self.gains.h_ue),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioDump {
    pub wavelength: f64,
    pub distances: NodeDistances,
    pub si_tx: Vec<[f64; 2]>,
    pub si_rx: Vec<[f64; 2]>,
    pub ub_rx: Vec<[f64; 2]>,
    pub bd_tx: Vec<[f64; 2]>,
    pub be_tx: Vec<[f64; 2]>,
    pub sigma_diag: Vec<[f64; 2]>,
    pub g_ub: Vec<[f64; 2]>,
    pub f_bd: Vec<[f64; 2]>,
    pub f_be: Vec<[f64; 2]>,
    pub h_ud: [f64; 2],
    pub h_ue: [f64; 2],
}

/// Circularly-symmetric complex Gaussian sample with the given variance.
pub fn cscg<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex<f64> {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(s * re, s * im)
}

/// `len` i.i.d. path gains for a link of length `distance`, each with
/// variance `β d^{-α} / len`.
pub fn sample_link_gains<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    len: usize,
    path_loss: f64,
    exponent: f64,
    distance: f64,
) -> CVector<T> {
    let variance = path_loss * distance.powf(-exponent) / len as f64;
    CVector::from_iterator(len, (0..len).map(|_| to_t(cscg(rng, variance))))
}

fn to_t<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

fn sample_angles<T: Real, R: Rng + ?Sized>(rng: &mut R, len: usize) -> PathAngles<T> {
    let pi = std::f64::consts::PI;
    let mut draw = || (0..len).map(|_| T::lit(rng.random_range(0.0..=pi))).collect::<Vec<T>>();
    let elevation = draw();
    let azimuth = draw();
    PathAngles { elevation, azimuth }
}

fn drop_in_disk<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> [f64; 2] {
    let r = radius * rng.random::<f64>().sqrt();
    let a = std::f64::consts::TAU * rng.random::<f64>();
    [r * a.cos(), r * a.sin()]
}

/// Draw one scenario. Users and Eve are uniform in the cell around the BS,
/// angles are uniform on `[0, π]`, and Σ is diagonal with unit mean power.
pub fn sample_scenario<T: Real>(config: &SystemConfig, seed: u64) -> Result<Scenario<T>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = config.paths;

    let bs = [0.0, 0.0];
    let uplink = drop_in_disk(&mut rng, config.cell_radius);
    let downlink = drop_in_disk(&mut rng, config.cell_radius);
    let eve = drop_in_disk(&mut rng, config.cell_radius);
    let dist = |a: [f64; 2], b: [f64; 2]| {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
            .sqrt()
            .max(config.min_node_distance)
    };
    let distances = NodeDistances {
        bd: dist(bs, downlink),
        be: dist(bs, eve),
        ub: dist(uplink, bs),
        ud: dist(uplink, downlink),
        ue: dist(uplink, eve),
    };

    let si_tx = sample_angles(&mut rng, l);
    let si_rx = sample_angles(&mut rng, l);
    let ub_rx = sample_angles(&mut rng, l);
    let bd_tx = sample_angles(&mut rng, l);
    let be_tx = sample_angles(&mut rng, l);

    let mut sigma = CMatrix::zeros(l, l);
    for i in 0..l {
        sigma[(i, i)] = to_t(cscg(&mut rng, 1.0 / l as f64));
    }
    let (beta, alpha) = (config.path_loss, config.path_loss_exponent);
    let g_ub = sample_link_gains(&mut rng, l, beta, alpha, distances.ub);
    let f_bd = sample_link_gains(&mut rng, l, beta, alpha, distances.bd);
    let f_be = sample_link_gains(&mut rng, l, beta, alpha, distances.be);
    let h_ud = to_t(cscg(&mut rng, beta * distances.ud.powf(-alpha)));
    let h_ue = to_t(cscg(&mut rng, beta * distances.ue.powf(-alpha)));

    Ok(Scenario {
        si_tx,
        si_rx,
        ub_rx,
        bd_tx,
        be_tx,
        gains: PathGains {
            sigma,
            g_ub,
            f_bd,
            f_be,
            h_ud,
            h_ue,
        },
        distances,
        wavelength: T::lit(config.wavelength),
    })
}
