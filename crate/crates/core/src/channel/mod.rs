//! Analog I/Q mapping, Rayleigh fading with pre/post equalization and
//! precoding, and overhead accounting.

mod overhead;
mod symbols;

pub use overhead::{count_overhead, MetadataSpec, OverheadReport};
pub use symbols::{reals_to_symbols, symbols_to_reals, SymbolStream};

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{dims, invalid, Error, Result};
use crate::seed;

/// Smallest fading magnitude the post-equalizer divides by.
pub const DEEP_FADE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingMode {
    Awgn,
    Rayleigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Equalization {
    /// Transmitter rotates by `h*/|h|`; the receiver sees `|h| x + n`.
    Pre,
    /// Receiver divides by `h`; it sees `x + n / h`.
    Post,
}

impl fmt::Display for FadingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FadingMode::Awgn => "awgn",
            FadingMode::Rayleigh => "rayleigh",
        })
    }
}

impl fmt::Display for Equalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Equalization::Pre => "pre",
            Equalization::Post => "post",
        })
    }
}

impl FromStr for FadingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "awgn" => Ok(FadingMode::Awgn),
            "rayleigh" => Ok(FadingMode::Rayleigh),
            o => Err(invalid(format!("unknown fading mode '{o}'"))),
        }
    }
}

impl FromStr for Equalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pre" => Ok(Equalization::Pre),
            "post" => Ok(Equalization::Post),
            o => Err(invalid(format!("unknown equalization '{o}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    /// `P / sigma^2` in dB. `+inf` gives a noiseless channel.
    pub snr_db: f64,
    pub mode: FadingMode,
    pub equalization: Equalization,
    pub precoding: bool,
    /// Average power per transmitted real.
    pub avg_power: f64,
}

impl ChannelConfig {
    pub fn new(snr_db: f64, mode: FadingMode, equalization: Equalization, precoding: bool) -> Self {
        Self { snr_db, mode, equalization, precoding, avg_power: 1.0 }
    }

    pub fn noiseless(mode: FadingMode, equalization: Equalization, precoding: bool) -> Self {
        Self::new(f64::INFINITY, mode, equalization, precoding)
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(invalid(format!("invalid SNR {} dB", self.snr_db)));
        }
        if !(self.avg_power > 0.0 && self.avg_power.is_finite()) {
            return Err(invalid(format!("average power must be positive, got {}", self.avg_power)));
        }
        Ok(())
    }

    /// `sigma^2 = P 10^(-snr/10)`, the noise variance per complex symbol.
    pub fn noise_variance(&self) -> f64 {
        if self.snr_db == f64::INFINITY {
            0.0
        } else {
            self.avg_power * 10f64.powf(-self.snr_db / 10.0)
        }
    }
}

/// One draw of fading and noise for `len` complex channel uses.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<Complex64>,
    pub noise: Vec<Complex64>,
    /// Channel use assigned to symbol `t` when precoding is on.
    pub permutation: Option<Vec<usize>>,
}

impl ChannelRealization {
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }
}

/// Indices sorted by descending `|h|`, ties to the lower index.
pub fn precoding_permutation(h: &[Complex64]) -> Vec<usize> {
    let mags: Vec<f64> = h.iter().map(|z| z.norm()).collect();
    let mut idx: Vec<usize> = (0..h.len()).collect();
    idx.sort_by(|&a, &b| mags[b].total_cmp(&mags[a]).then(a.cmp(&b)));
    idx
}

pub fn draw_realization(cfg: &ChannelConfig, m_symbols: usize, seed: u64) -> Result<ChannelRealization> {
    draw_realization_with(cfg, m_symbols, &mut seed::rng(seed))
}

/// As [`draw_realization`] but consuming an existing generator.
pub fn draw_realization_with<R: Rng + ?Sized>(
    cfg: &ChannelConfig,
    m_symbols: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    cfg.validate()?;
    if m_symbols == 0 {
        return Err(invalid("realization needs at least one symbol"));
    }
    let h: Vec<Complex64> = match cfg.mode {
        FadingMode::Awgn => vec![Complex64::new(1.0, 0.0); m_symbols],
        FadingMode::Rayleigh => {
            let d = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid std");
            (0..m_symbols).map(|_| Complex64::new(d.sample(rng), d.sample(rng))).collect()
        }
    };
    let sigma2 = cfg.noise_variance();
    let noise = if sigma2 == 0.0 {
        vec![Complex64::new(0.0, 0.0); m_symbols]
    } else {
        let d = Normal::new(0.0, (sigma2 / 2.0).sqrt()).expect("valid std");
        (0..m_symbols).map(|_| Complex64::new(d.sample(rng), d.sample(rng))).collect()
    };
    let permutation = cfg.precoding.then(|| precoding_permutation(&h));
    Ok(ChannelRealization { h, noise, permutation })
}

/// Per-real effective gain and noise level seen by the receiver, in encoder
/// order. Needed to back-propagate through the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitReport {
    pub gains: Vec<f64>,
    pub noise_std: Vec<f64>,
    /// Symbols whose fading magnitude hit [`DEEP_FADE_FLOOR`].
    pub outages: usize,
}

/// Sends `z` through the channel and returns the equalized reals.
pub fn transmit(z: &[f64], cfg: &ChannelConfig, real: &ChannelRealization) -> Result<(Vec<f64>, TransmitReport)> {
    let stream = reals_to_symbols(z);
    let m = stream.symbols.len();
    if real.len() < m {
        return Err(dims(format!("realization has {} channel uses, need {m}", real.len())));
    }
    let sigma = cfg.noise_variance().sqrt();
    let recomputed;
    let perm: Option<&[usize]> = if !cfg.precoding {
        None
    } else {
        match &real.permutation {
            Some(p) if p.len() == m => Some(p),
            _ => {
                recomputed = precoding_permutation(&real.h[..m]);
                Some(&recomputed)
            }
        }
    };
    let mut out = Vec::with_capacity(m);
    let mut gains = Vec::with_capacity(2 * m);
    let mut noise_std = Vec::with_capacity(2 * m);
    let mut outages = 0;
    for (t, &x) in stream.symbols.iter().enumerate() {
        let use_idx = perm.map_or(t, |p| p[t]);
        let h = real.h[use_idx];
        let n = real.noise[use_idx];
        let mag = h.norm();
        let (y, gain, nstd) = match cfg.equalization {
            Equalization::Pre => (x * mag + n, mag, sigma / std::f64::consts::SQRT_2),
            Equalization::Post => {
                let hd = if mag < DEEP_FADE_FLOOR {
                    outages += 1;
                    if mag == 0.0 {
                        Complex64::new(DEEP_FADE_FLOOR, 0.0)
                    } else {
                        h * (DEEP_FADE_FLOOR / mag)
                    }
                } else {
                    h
                };
                (x + n / hd, 1.0, sigma / (std::f64::consts::SQRT_2 * hd.norm()))
            }
        };
        out.push(y);
        gains.extend([gain, gain]);
        noise_std.extend([nstd, nstd]);
    }
    gains.truncate(z.len());
    noise_std.truncate(z.len());
    let received = SymbolStream { symbols: out, source_len: stream.source_len };
    Ok((symbols_to_reals(&received), TransmitReport { gains, noise_std, outages }))
}

/// Gradient of the loss with respect to the channel input, given the gradient
/// with respect to its output. Noise is constant and contributes nothing.
pub fn transmit_grad(upstream: &[f64], report: &TransmitReport) -> Result<Vec<f64>> {
    if upstream.len() != report.gains.len() {
        return Err(dims(format!(
            "gradient has {} entries, transmit report has {}",
            upstream.len(),
            report.gains.len()
        )));
    }
    Ok(upstream.iter().zip(&report.gains).map(|(g, a)| g * a).collect())
}
