//! Macro-scale losses and per-TTI Rayleigh fading.
//!
//! The macro-scale loss of a UE/RRH pair in dB is
//!
//! `v = pathloss + shadowing - tx_gain - rx_gain`
//!
//! and the channel vector toward an `N`-antenna RRH is
//!
//! `h = sqrt(10^(-v/10)) * r`
//!
//! with `r` a `1 x N` vector of independent unit-variance complex normal
//! entries, redrawn every TTI (channels are uncorrelated between TTIs) and
//! shared by all RBs of the TTI (flat fading). Shadowing is drawn once per
//! pair per run and frozen.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// WINNER II style path-loss curve `a*log10(d) + b + c*log10(f/5GHz)` with a
/// minimum-distance clamp.
#[derive(Debug, Clone)]
pub struct PathLossParams<S> {
    pub a: S,
    pub b: S,
    pub c: S,
    pub min_distance_m: S,
}

impl<S: Scalar> Default for PathLossParams<S> {
    fn default() -> Self {
        PathLossParams {
            a: S::of(22.7),
            b: S::of(41.0),
            c: S::of(20.0),
            min_distance_m: S::of(10.0),
        }
    }
}

/// Path loss in dB at `distance_m` meters and carrier `carrier_ghz` GHz.
pub fn pathloss_db<S: Scalar>(distance_m: S, carrier_ghz: S, p: &PathLossParams<S>) -> Result<S> {
    if distance_m.is_nan() || carrier_ghz.is_nan() {
        return Err(Error::invalid_input("NaN passed to pathloss_db"));
    }
    if !(carrier_ghz > S::zero()) {
        return Err(Error::invalid_input("carrier frequency must be positive"));
    }
    let d = distance_m.max(p.min_distance_m);
    Ok(p.a * d.log10() + p.b + p.c * (carrier_ghz / S::of(5.0)).log10())
}

/// One zero-mean Gaussian shadowing sample in dB.
pub fn draw_shadowing<S: Scalar, R: Rng>(rng: &mut R, std_db: S) -> S {
    let z: f64 = rng.sample(StandardNormal);
    std_db * S::of(z)
}

/// Frozen per-(UE, RRH) shadowing samples, UE-major.
#[derive(Debug, Clone)]
pub struct ShadowMap<S> {
    pub n_ues: usize,
    pub n_rrhs: usize,
    values: Vec<S>,
}

impl<S: Scalar> ShadowMap<S> {
    pub fn draw<R: Rng>(n_ues: usize, n_rrhs: usize, std_db: S, rng: &mut R) -> Self {
        let values = (0..n_ues * n_rrhs).map(|_| draw_shadowing(rng, std_db)).collect();
        ShadowMap { n_ues, n_rrhs, values }
    }

    #[inline]
    pub fn at(&self, ue: usize, rrh: usize) -> S {
        self.values[ue * self.n_rrhs + rrh]
    }
}

/// Macro-scale losses `v` in dB for every (UE, RRH) pair.
#[derive(Debug, Clone)]
pub struct MacroLosses<S> {
    pub n_ues: usize,
    pub n_rrhs: usize,
    v_db: Vec<S>,
}

impl<S: Scalar> MacroLosses<S> {
    /// Compose `v = pathloss + shadow - tx_gain - rx_gain` for all pairs.
    /// `distance(ue, rrh)` must already account for wrap-around.
    pub fn compute(
        n_ues: usize,
        n_rrhs: usize,
        mut distance: impl FnMut(usize, usize) -> S,
        shadow: &ShadowMap<S>,
        carrier_ghz: S,
        pl: &PathLossParams<S>,
        tx_gain_dbi: S,
        rx_gain_dbi: S,
    ) -> Result<Self> {
        let mut v_db = Vec::with_capacity(n_ues * n_rrhs);
        for ue in 0..n_ues {
            for rrh in 0..n_rrhs {
                let lambda = pathloss_db(distance(ue, rrh), carrier_ghz, pl)?;
                v_db.push(lambda + shadow.at(ue, rrh) - tx_gain_dbi - rx_gain_dbi);
            }
        }
        Ok(MacroLosses { n_ues, n_rrhs, v_db })
    }

    /// Build from explicit per-pair values (UE-major).
    pub fn from_values(n_ues: usize, n_rrhs: usize, v_db: Vec<S>) -> Self {
        assert_eq!(v_db.len(), n_ues * n_rrhs);
        MacroLosses { n_ues, n_rrhs, v_db }
    }

    #[inline]
    pub fn at(&self, ue: usize, rrh: usize) -> S {
        self.v_db[ue * self.n_rrhs + rrh]
    }
}

/// Channel vectors for one TTI, flat across all RBs and subcarriers.
#[derive(Debug, Clone)]
pub struct ChannelRealization<S> {
    pub n_ues: usize,
    pub n_rrhs: usize,
    pub n_antennas: usize,
    h: Vec<Complex<S>>,
    norm2: Vec<S>,
}

impl<S: Scalar> ChannelRealization<S> {
    /// Draw fresh fading for every pair: `h = sqrt(10^(-v/10)) * r`.
    /// The draw order (UE-major, then RRH, then antenna, re before im) is
    /// fixed to keep runs reproducible.
    pub fn realize<R: Rng>(macro_losses: &MacroLosses<S>, n_antennas: usize, rng: &mut R) -> Self {
        let n_ues = macro_losses.n_ues;
        let n_rrhs = macro_losses.n_rrhs;
        let half = S::of(0.5).sqrt();
        let mut h = Vec::with_capacity(n_ues * n_rrhs * n_antennas);
        let mut norm2 = Vec::with_capacity(n_ues * n_rrhs);
        for ue in 0..n_ues {
            for rrh in 0..n_rrhs {
                let amp = (S::of(10.0).powf(-macro_losses.at(ue, rrh) / S::of(10.0))).sqrt();
                let mut n2 = S::zero();
                for _ in 0..n_antennas {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let z = Complex::new(amp * half * S::of(re), amp * half * S::of(im));
                    n2 += z.norm_sqr();
                    h.push(z);
                }
                norm2.push(n2);
            }
        }
        ChannelRealization { n_ues, n_rrhs, n_antennas, h, norm2 }
    }

    /// Build directly from explicit vectors (tests, oracles).
    pub fn from_vectors(n_ues: usize, n_rrhs: usize, n_antennas: usize, h: Vec<Complex<S>>) -> Self {
        assert_eq!(h.len(), n_ues * n_rrhs * n_antennas);
        let norm2 = (0..n_ues * n_rrhs)
            .map(|i| {
                h[i * n_antennas..(i + 1) * n_antennas]
                    .iter()
                    .map(|x| x.norm_sqr())
                    .sum()
            })
            .collect();
        ChannelRealization { n_ues, n_rrhs, n_antennas, h, norm2 }
    }

    #[inline]
    pub fn at(&self, ue: usize, rrh: usize) -> &[Complex<S>] {
        let i = (ue * self.n_rrhs + rrh) * self.n_antennas;
        &self.h[i..i + self.n_antennas]
    }

    /// Squared channel norm `G = ||h||^2` toward an RRH.
    #[inline]
    pub fn gain(&self, ue: usize, rrh: usize) -> S {
        self.norm2[ue * self.n_rrhs + rrh]
    }
}

/// Thermal noise power in watts over `bandwidth_hz`.
pub fn noise_power<S: Scalar>(bandwidth_hz: S, thermal_noise_dbm_hz: S, noise_figure_db: S) -> S {
    let dbm = thermal_noise_dbm_hz + noise_figure_db + S::of(10.0) * bandwidth_hz.log10();
    S::of(10.0).powf((dbm - S::of(30.0)) / S::of(10.0))
}
