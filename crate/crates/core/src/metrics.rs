//! SINRs and secrecy rates in covariance form.
//!
//! The transmit side is described by the information covariance `W` and the
//! artificial-noise covariance `V`, so relaxed (rank > 1) solutions can be
//! evaluated with the same code as extracted beamforming vectors.

use serde::Serialize;

use crate::channel::{AntennaLayout, Channels, Scenario};
use crate::config::{LinkBudget, SystemConfig};
use crate::error::Result;
use crate::scalar::{CMatrix, CVector, Real, abs2, gram, log2, norm2, positive_part, quad_form};

/// Whether the BS transmits and receives at once or in two equal slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DuplexMode {
    Full,
    /// Time division: no self-interference and no UL/DL cross masking, each
    /// link active half of the time.
    Half,
}

/// Beamformers of the BS.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformingState<T: Real> {
    /// Unit-norm receive combiner.
    pub w_r: CVector<T>,
    /// Information covariance `W`.
    pub w: CMatrix<T>,
    /// Artificial-noise covariance `V`.
    pub v: CMatrix<T>,
    pub w_vec: Option<CVector<T>>,
    pub v_vec: Option<CVector<T>>,
}

impl<T: Real> BeamformingState<T> {
    /// State built from rank-one beamforming vectors.
    pub fn from_vectors(w_r: CVector<T>, w: CVector<T>, v: CVector<T>) -> Self {
        BeamformingState {
            w: gram(&w),
            v: gram(&v),
            w_r,
            w_vec: Some(w),
            v_vec: Some(v),
        }
    }

    pub fn total_power(&self) -> T {
        crate::scalar::trace_re(&self.w) + crate::scalar::trace_re(&self.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinrs<T> {
    pub uplink: T,
    pub downlink: T,
    pub eve_uplink: T,
    pub eve_downlink: T,
}

/// Per-user and sum secrecy rates in bits/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport<T> {
    pub sinr: Sinrs<T>,
    pub uplink: T,
    pub downlink: T,
    pub sum: T,
}

/// `P_U |w_r^H h_UB|^2 / (ρ w_r^H H_SI (W+V) H_SI^H w_r + ‖w_r‖² σ_B²)`.
pub fn uplink_sinr<T: Real>(ch: &Channels<T>, state: &BeamformingState<T>, budget: &LinkBudget<T>) -> T {
    let signal = abs2(state.w_r.dotc(&ch.h_ub)) * budget.p_u;
    let si = if budget.rho > T::zero() {
        let g = ch.h_si.adjoint() * &state.w_r;
        budget.rho * quad_form(&(&state.w + &state.v), &g)
    } else {
        T::zero()
    };
    signal / (si + norm2(&state.w_r) * budget.sigma_b2)
}

/// `Tr(W H_BD) / (Tr(V H_BD) + |h_UD|² P_U + σ_D²)`.
pub fn downlink_sinr<T: Real>(ch: &Channels<T>, state: &BeamformingState<T>, budget: &LinkBudget<T>) -> T {
    let signal = quad_form(&state.w, &ch.h_bd);
    let noise = quad_form(&state.v, &ch.h_bd) + abs2(ch.h_ud) * budget.p_u + budget.sigma_d2;
    signal / noise
}

/// `|h_UE|² P_U / (Tr((W+V) H_BE) + σ_E²)`.
pub fn eve_uplink_sinr<T: Real>(ch: &Channels<T>, state: &BeamformingState<T>, budget: &LinkBudget<T>) -> T {
    let masking = quad_form(&state.w, &ch.h_be) + quad_form(&state.v, &ch.h_be);
    abs2(ch.h_ue) * budget.p_u / (masking + budget.sigma_e2)
}

/// `Tr(W H_BE) / (Tr(V H_BE) + |h_UE|² P_U + σ_E²)`.
pub fn eve_downlink_sinr<T: Real>(ch: &Channels<T>, state: &BeamformingState<T>, budget: &LinkBudget<T>) -> T {
    let signal = quad_form(&state.w, &ch.h_be);
    signal / (quad_form(&state.v, &ch.h_be) + abs2(ch.h_ue) * budget.p_u + budget.sigma_e2)
}

pub fn sinrs<T: Real>(ch: &Channels<T>, state: &BeamformingState<T>, budget: &LinkBudget<T>, mode: DuplexMode) -> Sinrs<T> {
    match mode {
        DuplexMode::Full => Sinrs {
            uplink: uplink_sinr(ch, state, budget),
            downlink: downlink_sinr(ch, state, budget),
            eve_uplink: eve_uplink_sinr(ch, state, budget),
            eve_downlink: eve_downlink_sinr(ch, state, budget),
        },
        DuplexMode::Half => {
            // UL slot: silent transmitter. DL slot: silent UL user.
            let uplink = abs2(state.w_r.dotc(&ch.h_ub)) * budget.p_u / (norm2(&state.w_r) * budget.sigma_b2);
            let eve_uplink = abs2(ch.h_ue) * budget.p_u / budget.sigma_e2;
            let downlink = quad_form(&state.w, &ch.h_bd) / (quad_form(&state.v, &ch.h_bd) + budget.sigma_d2);
            let eve_downlink = quad_form(&state.w, &ch.h_be) / (quad_form(&state.v, &ch.h_be) + budget.sigma_e2);
            Sinrs {
                uplink,
                downlink,
                eve_uplink,
                eve_downlink,
            }
        }
    }
}

fn link_rates<T: Real>(s: &Sinrs<T>, mode: DuplexMode) -> (T, T) {
    let one = T::one();
    let share = match mode {
        DuplexMode::Full => one,
        DuplexMode::Half => T::lit(0.5),
    };
    let up = share * (log2(one + s.uplink) - log2(one + s.eve_uplink));
    let down = share * (log2(one + s.downlink) - log2(one + s.eve_downlink));
    (up, down)
}

/// Reported secrecy rates: each user's rate is clamped at zero before summing.
pub fn secrecy_report<T: Real>(
    ch: &Channels<T>,
    state: &BeamformingState<T>,
    budget: &LinkBudget<T>,
    mode: DuplexMode,
) -> RateReport<T> {
    let sinr = sinrs(ch, state, budget, mode);
    let (up, down) = link_rates(&sinr, mode);
    let (uplink, downlink) = (positive_part(up), positive_part(down));
    RateReport {
        sinr,
        uplink,
        downlink,
        sum: uplink + downlink,
    }
}

/// Sum secrecy rate without the per-user clamp, as used inside optimizers.
pub fn unclamped_sum_rate<T: Real>(
    ch: &Channels<T>,
    state: &BeamformingState<T>,
    budget: &LinkBudget<T>,
    mode: DuplexMode,
) -> T {
    let (up, down) = link_rates(&sinrs(ch, state, budget, mode), mode);
    up + down
}

/// Convenience wrapper evaluating the channels at `layout` first.
pub fn evaluate<T: Real>(
    scenario: &Scenario<T>,
    layout: &AntennaLayout<T>,
    state: &BeamformingState<T>,
    config: &SystemConfig,
    mode: DuplexMode,
) -> Result<RateReport<T>> {
    let ch = scenario.channels(layout)?;
    Ok(secrecy_report(&ch, state, &config.budget(), mode))
}

/// Secrecy rate of a link from its two SINRs, clamped at zero.
pub fn secrecy_rate<T: Real>(legitimate: T, eavesdropper: T) -> T {
    positive_part(log2(T::one() + legitimate) - log2(T::one() + eavesdropper))
}

#[cfg(test)]
pub(crate) fn zero_state<T: Real>(n_t: usize, n_r: usize) -> BeamformingState<T> {
    let mut w_r = CVector::zeros(n_r);
    if n_r > 0 {
        w_r[0] = crate::scalar::real(T::one());
    }
    BeamformingState {
        w_r,
        w: CMatrix::zeros(n_t, n_t),
        v: CMatrix::zeros(n_t, n_t),
        w_vec: None,
        v_vec: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn budget() -> LinkBudget<f64> {
        SystemConfig::full_budget().budget()
    }

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CVector<f64> {
        CVector::from_iterator(
            n,
            (0..n).map(|_| C::new(rng.random_range(-1.0..1.0) * scale, rng.random_range(-1.0..1.0) * scale)),
        )
    }

    fn random_channels(rng: &mut ChaCha8Rng, n_t: usize, n_r: usize) -> Channels<f64> {
        Channels {
            h_si: CMatrix::from_fn(n_r, n_t, |_, _| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
            h_ub: rand_vec(rng, n_r, 1e-4),
            h_bd: rand_vec(rng, n_t, 1e-4),
            h_be: rand_vec(rng, n_t, 1e-4),
            h_ud: C::new(3e-5, -1e-5),
            h_ue: C::new(-2e-5, 2e-5),
        }
    }

    fn unit(v: CVector<f64>) -> CVector<f64> {
        let n = norm2(&v).sqrt();
        v.map(|z| z / n)
    }

    #[test]
    fn scalar_uplink_example() {
        let ch = Channels {
            h_si: CMatrix::from_element(1, 1, C::new(1.0, 0.0)),
            h_ub: CVector::from_element(1, C::new(0.6, 0.8)),
            h_bd: CVector::from_element(1, C::new(1.0, 0.0)),
            h_be: CVector::from_element(1, C::new(1.0, 0.0)),
            h_ud: C::new(0.0, 0.0),
            h_ue: C::new(0.0, 0.0),
        };
        let mut b = budget();
        b.sigma_b2 = 1e-12;
        let state = zero_state::<f64>(1, 1);
        let g = uplink_sinr(&ch, &state, &b);
        assert!((g / 1e11 - 1.0).abs() < 1e-12);
        b.p_u = 0.0;
        assert_eq!(uplink_sinr(&ch, &state, &b), 0.0);
    }

    #[test]
    fn scalar_downlink_and_eve_examples() {
        let ch = Channels {
            h_si: CMatrix::zeros(1, 1),
            h_ub: CVector::from_element(1, C::new(1e-4, 0.0)),
            h_bd: CVector::from_element(1, C::new(3e-5, 4e-5)),
            h_be: CVector::from_element(1, C::new(1e-5, 0.0)),
            h_ud: C::new(0.0, 0.0),
            h_ue: C::new(2e-5, 0.0),
        };
        let b = budget();
        let p = 0.07;
        let state = BeamformingState {
            w_r: CVector::from_element(1, C::new(1.0, 0.0)),
            w: CMatrix::from_element(1, 1, C::new(p, 0.0)),
            v: CMatrix::zeros(1, 1),
            w_vec: None,
            v_vec: None,
        };
        let gd = downlink_sinr(&ch, &state, &b);
        assert!((gd - 25e-10 * p / b.sigma_d2).abs() / gd < 1e-12);

        let zero = zero_state::<f64>(1, 1);
        assert_eq!(downlink_sinr(&ch, &zero, &b), 0.0);
        assert_eq!(eve_downlink_sinr(&ch, &zero, &b), 0.0);
        let ge = eve_uplink_sinr(&ch, &zero, &b);
        assert!((ge - 4e-10 * b.p_u / b.sigma_e2).abs() / ge < 1e-12);

        let mut quiet = ch.clone();
        quiet.h_ue = C::new(0.0, 0.0);
        assert_eq!(eve_uplink_sinr(&quiet, &state, &b), 0.0);
        let ged = eve_downlink_sinr(&quiet, &state, &b);
        assert!((ged - 1e-10 * p / b.sigma_e2).abs() / ged < 1e-12);
    }

    #[test]
    fn uplink_matches_index_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = budget();
        for _ in 0..20 {
            let ch = random_channels(&mut rng, 3, 2);
            let w_r = unit(rand_vec(&mut rng, 2, 1.0));
            let w = rand_vec(&mut rng, 3, 0.1);
            let v = rand_vec(&mut rng, 3, 0.1);
            let state = BeamformingState::from_vectors(w_r.clone(), w.clone(), v.clone());
            // w_r^H h_UB and w_r^H H_SI x for x = w, v, summed in loops
            let mut sig = C::new(0.0, 0.0);
            for i in 0..2 {
                sig += w_r[i].conj() * ch.h_ub[i];
            }
            let mut si = 0.0;
            for x in [&w, &v] {
                let mut acc = C::new(0.0, 0.0);
                for i in 0..2 {
                    for j in 0..3 {
                        acc += w_r[i].conj() * ch.h_si[(i, j)] * x[j];
                    }
                }
                si += abs2(acc);
            }
            let expected = abs2(sig) * b.p_u / (b.rho * si + b.sigma_b2);
            let got = uplink_sinr(&ch, &state, &b);
            assert!((got - expected).abs() / expected < 1e-12);
        }
    }

    #[test]
    fn covariance_forms_match_vector_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = budget();
        for _ in 0..50 {
            let ch = random_channels(&mut rng, 4, 4);
            let w = rand_vec(&mut rng, 4, 0.1);
            let v = rand_vec(&mut rng, 4, 0.1);
            let state = BeamformingState::from_vectors(unit(rand_vec(&mut rng, 4, 1.0)), w.clone(), v.clone());
            let bd_w = abs2(ch.h_bd.dotc(&w));
            let bd_v = abs2(ch.h_bd.dotc(&v));
            let be_w = abs2(ch.h_be.dotc(&w));
            let be_v = abs2(ch.h_be.dotc(&v));
            let ud = abs2(ch.h_ud) * b.p_u;
            let ue = abs2(ch.h_ue) * b.p_u;
            let pairs = [
                (downlink_sinr(&ch, &state, &b), bd_w / (bd_v + ud + b.sigma_d2)),
                (eve_uplink_sinr(&ch, &state, &b), ue / (be_w + be_v + b.sigma_e2)),
                (eve_downlink_sinr(&ch, &state, &b), be_w / (be_v + ue + b.sigma_e2)),
            ];
            for (cov, vec) in pairs {
                assert!((cov - vec).abs() <= 1e-12 * vec.abs().max(1e-300), "{cov} vs {vec}");
            }
        }
    }

    #[test]
    fn rotating_combiner_leaves_rates_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let b = budget();
        let ch = random_channels(&mut rng, 3, 3);
        let state = BeamformingState::from_vectors(
            unit(rand_vec(&mut rng, 3, 1.0)),
            rand_vec(&mut rng, 3, 0.1),
            rand_vec(&mut rng, 3, 0.1),
        );
        let mut rotated = state.clone();
        let phase = C::new(0.3f64.cos(), 0.3f64.sin());
        rotated.w_r = rotated.w_r.map(|z| z * phase);
        let a = secrecy_report(&ch, &state, &b, DuplexMode::Full);
        let r = secrecy_report(&ch, &rotated, &b, DuplexMode::Full);
        assert!((a.sinr.uplink - r.sinr.uplink).abs() <= 1e-12 * a.sinr.uplink);
        assert!((a.sum - r.sum).abs() < 1e-12);
    }

    #[test]
    fn uplink_monotone_in_power_and_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ch = random_channels(&mut rng, 2, 2);
        let state = BeamformingState::from_vectors(
            unit(rand_vec(&mut rng, 2, 1.0)),
            rand_vec(&mut rng, 2, 0.1),
            rand_vec(&mut rng, 2, 0.1),
        );
        let mut b = budget();
        let mut last = 0.0;
        for p in [0.0, 0.01, 0.1, 1.0] {
            b.p_u = p;
            let g = uplink_sinr(&ch, &state, &b);
            assert!(g >= last);
            last = g;
        }
        let mut last = f64::INFINITY;
        for s in [1e-14, 1e-12, 1e-10] {
            b.sigma_b2 = s;
            let g = uplink_sinr(&ch, &state, &b);
            assert!(g <= last);
            last = g;
        }
    }

    #[test]
    fn secrecy_rate_examples() {
        assert_eq!(secrecy_rate(2.5, 2.5), 0.0);
        assert!((secrecy_rate(3.0f64, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(secrecy_rate(1.0, 5.0), 0.0);
    }

    #[test]
    fn report_clamps_each_user() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let b = budget();
        for _ in 0..30 {
            let ch = random_channels(&mut rng, 2, 2);
            let state = BeamformingState::from_vectors(
                unit(rand_vec(&mut rng, 2, 1.0)),
                rand_vec(&mut rng, 2, 0.1),
                rand_vec(&mut rng, 2, 0.1),
            );
            for mode in [DuplexMode::Full, DuplexMode::Half] {
                let r = secrecy_report(&ch, &state, &b, mode);
                assert!(r.uplink >= 0.0 && r.downlink >= 0.0);
                assert_eq!(r.sum, r.uplink + r.downlink);
                assert!(r.sum.is_finite());
                assert!(r.sum >= unclamped_sum_rate(&ch, &state, &b, mode) - 1e-12);
            }
        }
    }

    #[test]
    fn half_duplex_ignores_self_interference() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = random_channels(&mut rng, 2, 2);
        let state = BeamformingState::from_vectors(
            unit(rand_vec(&mut rng, 2, 1.0)),
            rand_vec(&mut rng, 2, 0.1),
            rand_vec(&mut rng, 2, 0.1),
        );
        let mut b = budget();
        let base = secrecy_report(&ch, &state, &b, DuplexMode::Half).sum;
        b.rho = 1e-3;
        assert_eq!(secrecy_report(&ch, &state, &b, DuplexMode::Half).sum, base);
        // overwhelming SI kills the FD uplink
        let fd = secrecy_report(&ch, &state, &b, DuplexMode::Full);
        let hd = secrecy_report(&ch, &state, &b, DuplexMode::Half);
        assert!(fd.sinr.uplink < 1e-3 * hd.sinr.uplink);
        assert!(hd.uplink >= fd.uplink);
    }

    #[test]
    fn single_precision_rates() {
        let ch = Channels::<f32> {
            h_si: CMatrix::zeros(1, 1),
            h_ub: CVector::from_element(1, C::new(1.0, 0.0)),
            h_bd: CVector::from_element(1, C::new(1.0, 0.0)),
            h_be: CVector::from_element(1, C::new(0.5, 0.0)),
            h_ud: C::new(0.0, 0.0),
            h_ue: C::new(0.0, 0.0),
        };
        let b = LinkBudget { p_b: 1.0f32, p_u: 1.0, rho: 0.0, sigma_b2: 1.0, sigma_d2: 1.0, sigma_e2: 1.0 };
        let state = BeamformingState::<f32> {
            w_r: CVector::from_element(1, C::new(1.0, 0.0)),
            w: CMatrix::from_element(1, 1, C::new(3.0, 0.0)),
            v: CMatrix::zeros(1, 1),
            w_vec: None,
            v_vec: None,
        };
        let r = secrecy_report(&ch, &state, &b, DuplexMode::Full);
        // UL: log2(2) - 0, DL: log2(4) - log2(1.75)
        let expected = 1.0 + 2.0 - 1.75f32.log2();
        assert!((r.sum - expected).abs() < 1e-5);
    }
}
