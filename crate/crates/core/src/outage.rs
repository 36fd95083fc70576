//! Monte Carlo outage probabilities of the dominant outage events, diversity
//! slope fitting and a degrees-of-freedom check of the IA rate.
//!
//! Trial `i` at SNR point `p` always uses the channel drawn from stream `i`
//! of `substream_seed(seed, p)`, so counts do not depend on the number of
//! worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{log_det_capacity, sample_channel_set, substream_seed, ChannelSet, Snr};
use crate::dmt::{IaFamily, Scheme, SwitchFraction};
use crate::error::{Error, Result};
use crate::ia_precoding::{effective_channel, ia_rate};
use crate::linalg::ComplexMatrix;

/// Outage counts below this are excluded from slope fits.
pub const MIN_OUTAGES_FOR_FIT: u64 = 20;
/// Below this count the confidence interval falls back to `[0, 5/trials]`.
pub const MIN_OUTAGES_FOR_NORMAL_CI: u64 = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageConfig {
    pub scheme: Scheme,
    pub a: SwitchFraction,
    pub r: f64,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    #[serde(default)]
    pub threads: Option<usize>,
}

impl OutageConfig {
    pub fn validate(&self) -> Result<IaFamily> {
        let family = self.scheme.family().ok_or_else(|| {
            Error::InvalidArgument(format!("{} has no simulated outage events", self.scheme))
        })?;
        if let Some(pinned) = self.scheme.fixed_fraction() {
            if pinned != self.a {
                return Err(Error::InvalidArgument(format!(
                    "{} runs at a = {}, got {}",
                    self.scheme,
                    pinned.value(),
                    self.a.value()
                )));
            }
        }
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::domain("r", self.r, "[0, inf)"));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidArgument("no SNR points".into()));
        }
        if self.snr_db.iter().any(|x| !x.is_finite()) || self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "SNR points must be finite and strictly increasing".into(),
            ));
        }
        if self.threads == Some(0) {
            return Err(Error::InvalidArgument("threads must be at least 1".into()));
        }
        Ok(family)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub snr_db: f64,
    pub p_hat: f64,
    pub trials: u64,
    /// Half-width of the normal-approximation 95% interval; `5/trials` when
    /// fewer than five outages were seen.
    pub ci95: f64,
    pub outage_count: u64,
}

impl OutageEstimate {
    pub fn from_counts(snr_db: f64, outage_count: u64, trials: u64) -> Self {
        let n = trials as f64;
        let p_hat = outage_count as f64 / n;
        let ci95 = if outage_count < MIN_OUTAGES_FOR_NORMAL_CI {
            5.0 / n
        } else {
            1.96 * (p_hat * (1.0 - p_hat) / n).sqrt()
        };
        Self {
            snr_db,
            p_hat,
            trials,
            ci95,
            outage_count,
        }
    }

    /// The 95% interval, clipped to `[0, 1]`.
    pub fn interval(&self) -> (f64, f64) {
        if self.outage_count < MIN_OUTAGES_FOR_NORMAL_CI {
            (0.0, self.ci95.min(1.0))
        } else {
            ((self.p_hat - self.ci95).max(0.0), (self.p_hat + self.ci95).min(1.0))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub stderr: f64,
    pub points_used: usize,
}

fn target_rate(r: f64, snr: Snr) -> f64 {
    r * snr.log2()
}

fn siso_rate(gain: f64, snr: Snr) -> f64 {
    (1.0 + snr.linear() * gain).log2()
}

/// Links `H[11]` and `H[12]` side by side: everything receiver 1 hears.
fn stacked_receiver_one(ch: &ChannelSet) -> ComplexMatrix {
    ComplexMatrix::hstack(&[&ch.h11, &ch.h12]).expect("2x2 links stack")
}

fn outage_event(ch: &ChannelSet, a: SwitchFraction, r: f64, snr: Snr, gains: [f64; 2]) -> bool {
    let a = a.value();
    let rate = target_rate(r, snr);
    let ia = 4.0 / 3.0 * a;
    let single = ia * siso_rate(gains[0], snr) + (1.0 - a) * log_det_capacity(&ch.h11, snr);
    if single < rate {
        return true;
    }
    let sum = ia * (siso_rate(gains[0], snr) + siso_rate(gains[1], snr))
        + (1.0 - a) * log_det_capacity(&stacked_receiver_one(ch), snr);
    sum < 2.0 * rate
}

/// Whether either dominant outage event of on-off symbol-extension IA occurs
/// at per-user rate `r log2(rho)`.
pub fn outage_event_onoff_ia(ch: &ChannelSet, a: SwitchFraction, r: f64, snr: Snr) -> bool {
    let gains = [ch.h11[(0, 0)].norm_sqr(), ch.h22[(0, 0)].norm_sqr()];
    outage_event(ch, a, r, snr, gains)
}

/// As [`outage_event_onoff_ia`] with Alamouti effective gains
/// `|h[l1]|^2 + |h[l2]|^2` in place of single coefficients.
pub fn outage_event_onoff_iaa(ch: &ChannelSet, a: SwitchFraction, r: f64, snr: Snr) -> bool {
    let pair = |x: &ComplexMatrix, y: &ComplexMatrix| x[(0, 0)].norm_sqr() + y[(0, 0)].norm_sqr();
    let gains = [pair(&ch.h11, &ch.h12), pair(&ch.h21, &ch.h22)];
    outage_event(ch, a, r, snr, gains)
}

pub fn outage_event_for(family: IaFamily, ch: &ChannelSet, a: SwitchFraction, r: f64, snr: Snr) -> bool {
    match family {
        IaFamily::SymbolExtension => outage_event_onoff_ia(ch, a, r, snr),
        IaFamily::Alamouti => outage_event_onoff_iaa(ch, a, r, snr),
    }
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}"))),
    }
}

/// Counts outages at every SNR point of `cfg`.
pub fn estimate_outage(cfg: &OutageConfig) -> Result<Vec<OutageEstimate>> {
    let family = cfg.validate()?;
    let snrs = cfg
        .snr_db
        .iter()
        .map(|&db| Snr::from_db(db))
        .collect::<Result<Vec<_>>>()?;
    with_pool(cfg.threads, || {
        snrs.iter()
            .zip(&cfg.snr_db)
            .enumerate()
            .map(|(point, (&snr, &db))| {
                let seed = substream_seed(cfg.seed, point as u64);
                let count = (0..cfg.trials)
                    .into_par_iter()
                    .filter(|&i| {
                        let ch = sample_channel_set(seed, i);
                        outage_event_for(family, &ch, cfg.a, cfg.r, snr)
                    })
                    .count() as u64;
                OutageEstimate::from_counts(db, count, cfg.trials)
            })
            .collect()
    })
}

/// Least-squares slope of `-log10 p_hat` against `log10 rho` over the points
/// with at least [`MIN_OUTAGES_FOR_FIT`] outages.
pub fn estimate_diversity_slope(estimates: &[OutageEstimate]) -> Result<SlopeEstimate> {
    let usable: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.outage_count >= MIN_OUTAGES_FOR_FIT && e.p_hat > 0.0)
        .map(|e| (e.snr_db / 10.0, -e.p_hat.log10()))
        .collect();
    fit_line(&usable)
}

/// Slope of `y` against `x` with its standard error; needs three points.
pub fn fit_line(points: &[(f64, f64)]) -> Result<SlopeEstimate> {
    const REQUIRED: usize = 3;
    let n = points.len();
    if n < REQUIRED {
        return Err(Error::InsufficientData {
            usable: n,
            required: REQUIRED,
        });
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidArgument("all fit points share one abscissa".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(SlopeEstimate {
        slope,
        stderr,
        points_used: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DofEstimate {
    /// Mean slope of the per-receiver IA rate against `log2 rho`.
    pub dof: f64,
    pub trials: u64,
    /// Draws rejected as numerically singular and replaced.
    pub resampled: u64,
}

/// Slope of the IA rate between two SNRs for one channel, averaged over
/// both receivers.
pub fn rate_slope(ch: &ChannelSet, low: Snr, high: Snr) -> Result<f64> {
    let span = high.log2() - low.log2();
    let mut total = 0.0;
    for receiver in 1..=2 {
        let eff = effective_channel(ch, receiver)?;
        total += (ia_rate(&eff, high) - ia_rate(&eff, low)) / span;
    }
    Ok(total / 2.0)
}

/// Estimates the per-user DoF of the IA scheme from `trials` random
/// channels.
pub fn dof_check(trials: u64, snr_low: Snr, snr_high: Snr, seed: u64) -> Result<DofEstimate> {
    dof_check_with_threads(trials, snr_low, snr_high, seed, None)
}

pub fn dof_check_with_threads(
    trials: u64,
    snr_low: Snr,
    snr_high: Snr,
    seed: u64,
    threads: Option<usize>,
) -> Result<DofEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if snr_high.linear() < 100.0 * snr_low.linear() {
        return Err(Error::InvalidArgument(
            "the high SNR must be at least 20 dB above the low SNR".into(),
        ));
    }
    const MAX_ATTEMPTS: u64 = 64;
    let per_trial: Vec<(f64, u64)> = with_pool(threads, || {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                for attempt in 0..MAX_ATTEMPTS {
                    let ch = sample_channel_set(seed, i + attempt * trials);
                    match rate_slope(&ch, snr_low, snr_high) {
                        Ok(s) => return Ok((s, attempt)),
                        Err(Error::NearSingularChannel { .. }) => continue,
                        Err(e) => return Err(e),
                    }
                }
                Err(Error::NearSingularChannel { condition: f64::INFINITY })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let dof = per_trial.iter().map(|p| p.0).sum::<f64>() / trials as f64;
    let resampled = per_trial.iter().map(|p| p.1).sum();
    Ok(DofEstimate {
        dof,
        trials,
        resampled,
    })
}
