//! Quasi-static Rayleigh channels of the 2-user two-antenna X-channel.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Linear signal-to-noise ratio `rho = P / N0`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Snr(f64);

impl Snr {
    pub fn from_linear(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 {
            Ok(Snr(rho))
        } else {
            Err(Error::domain("rho", rho, "(0, inf)"))
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::from_linear(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }

    /// `log2(rho)`, the unit in which multiplexing gains scale rates.
    pub fn log2(self) -> f64 {
        self.0.log2()
    }
}

/// One realisation of the four 2x2 links; `hIJ` goes from transmitter `J` to
/// receiver `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h11: ComplexMatrix,
    pub h12: ComplexMatrix,
    pub h21: ComplexMatrix,
    pub h22: ComplexMatrix,
}

impl ChannelSet {
    /// Builds a set from four 2x2 matrices.
    pub fn new(
        h11: ComplexMatrix,
        h12: ComplexMatrix,
        h21: ComplexMatrix,
        h22: ComplexMatrix,
    ) -> Result<Self> {
        for h in [&h11, &h12, &h21, &h22] {
            if h.rows() != 2 || h.cols() != 2 {
                return Err(Error::Dimension(format!(
                    "channel links must be 2x2, got {}x{}",
                    h.rows(),
                    h.cols()
                )));
            }
            if !h.is_finite() {
                return Err(Error::InvalidArgument("non-finite channel entry".into()));
            }
        }
        Ok(Self { h11, h12, h21, h22 })
    }

    /// Same link on all four paths.
    pub fn uniform(h: ComplexMatrix) -> Result<Self> {
        Self::new(h.clone(), h.clone(), h.clone(), h)
    }

    /// Link from transmitter `tx` to receiver `rx`, both 1-based.
    pub fn link(&self, rx: usize, tx: usize) -> &ComplexMatrix {
        match (rx, tx) {
            (1, 1) => &self.h11,
            (1, 2) => &self.h12,
            (2, 1) => &self.h21,
            (2, 2) => &self.h22,
            _ => panic!("link indices must be 1 or 2, got ({rx}, {tx})"),
        }
    }

    pub fn link_mut(&mut self, rx: usize, tx: usize) -> &mut ComplexMatrix {
        match (rx, tx) {
            (1, 1) => &mut self.h11,
            (1, 2) => &mut self.h12,
            (2, 1) => &mut self.h21,
            (2, 2) => &mut self.h22,
            _ => panic!("link indices must be 1 or 2, got ({rx}, {tx})"),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            h11: self.h11.scale(s),
            h12: self.h12.scale(s),
            h21: self.h21.scale(s),
            h22: self.h22.scale(s),
        }
    }
}

/// Three copies of a 2x2 link on the diagonal of a 6x6 matrix (three-slot
/// symbol extension).
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedChannel(ComplexMatrix);

impl ExtendedChannel {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

pub fn extend_channel(h: &ComplexMatrix) -> Result<ExtendedChannel> {
    if h.rows() != 2 || h.cols() != 2 {
        return Err(Error::Dimension(format!(
            "symbol extension needs a 2x2 link, got {}x{}",
            h.rows(),
            h.cols()
        )));
    }
    Ok(ExtendedChannel(ComplexMatrix::block_diag(&[h, h, h])))
}

/// Derives an independent 64-bit seed for sub-experiment `point` of `seed`
/// (splitmix64 finaliser).
pub fn substream_seed(seed: u64, point: u64) -> u64 {
    let mut z = seed ^ point.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn cn01(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Draws the channel for trial `index` of the experiment keyed by `seed`.
///
/// Each trial owns ChaCha stream `index`, so the draw does not depend on how
/// trials are scheduled across threads.
pub fn sample_channel_set(seed: u64, index: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut draw = || {
        let data = (0..4).map(|_| cn01(&mut rng)).collect();
        ComplexMatrix::from_row_major(2, 2, data).expect("four entries")
    };
    let h11 = draw();
    let h12 = draw();
    let h21 = draw();
    let h22 = draw();
    ChannelSet { h11, h12, h21, h22 }
}

/// `log2 det(I + rho H H^H)` in bits per channel use.
///
/// Two-row matrices (every link and the 2x4 stacked channel) go through the
/// Cauchy-Binet expansion `det(H H^H) = sum |2x2 minor|^2`, which avoids
/// cancellation at high SNR. Larger matrices use the LU determinant of the
/// Gram matrix.
pub fn log_det_capacity(h: &ComplexMatrix, snr: Snr) -> f64 {
    let rho = snr.linear();
    if h.rows() == 2 {
        let row_energy = |i: usize| (0..h.cols()).map(|j| h[(i, j)].norm_sqr()).sum::<f64>();
        let mut minors = 0.0;
        for c1 in 0..h.cols() {
            for c2 in (c1 + 1)..h.cols() {
                minors += (h[(0, c1)] * h[(1, c2)] - h[(0, c2)] * h[(1, c1)]).norm_sqr();
            }
        }
        let det = 1.0 + rho * (row_energy(0) + row_energy(1)) + rho * rho * minors;
        return det.log2();
    }
    let m = h.rows();
    let g = &ComplexMatrix::identity(m) + &h.gram().scale(rho);
    let det = g.determinant().expect("gram is square").re;
    det.max(1.0).log2()
}
