//! Two-stage interference alignment over a three-slot symbol extension.
//!
//! Each transmitter sends two symbols to each receiver over three slots. The
//! second-stage precoder `V[ij]` inverts the extended link from transmitter
//! `j` to the *unintended* receiver `k != i`, which lands the interference
//! at receiver `k` on the fixed subspace spanned by the first-stage matrix
//! `U[i]`. A pair of row subtractions then removes it, leaving a 4x4 channel
//! for the four desired symbols.

use crate::channel::{extend_channel, log_det_capacity, ChannelSet, Snr};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

/// Condition-number ceiling for inverting an extended link.
pub const MAX_CONDITION: f64 = 1e12;

/// Slot combinations (0-based row pairs `(keep, subtract)`) that cancel the
/// aligned interference at each receiver. Receiver 1 sees interference on
/// span(U2) = span(e1+e3, e4+e6); receiver 2 on span(U1) = span(e1+e2, e4+e5).
const COMBINING: [[(usize, Option<usize>); 4]; 2] = [
    [(0, Some(2)), (1, None), (3, Some(5)), (4, None)],
    [(0, Some(1)), (2, None), (3, Some(4)), (5, None)],
];

/// The constant first-stage matrices `(U1, U2)`.
pub fn first_stage_precoders() -> (ComplexMatrix, ComplexMatrix) {
    #[rustfmt::skip]
    let u1 = ComplexMatrix::from_real(6, 2, &[
        1.0, 0.0,
        1.0, 0.0,
        0.0, 0.0,
        0.0, 1.0,
        0.0, 1.0,
        0.0, 0.0,
    ]).expect("6x2");
    #[rustfmt::skip]
    let u2 = ComplexMatrix::from_real(6, 2, &[
        1.0, 0.0,
        0.0, 0.0,
        1.0, 0.0,
        0.0, 1.0,
        0.0, 0.0,
        0.0, 1.0,
    ]).expect("6x2");
    (u1, u2)
}

/// `V = c * inv(Hbar)` with `c = 1 / ||inv(Hbar)||_F`, so `||V||_F = 1`.
pub fn second_stage_precoder(
    hbar: &crate::channel::ExtendedChannel,
) -> Result<(ComplexMatrix, f64)> {
    let h = hbar.matrix();
    let inv = h.inverse().map_err(|e| match e {
        Error::Singular => Error::NearSingularChannel {
            condition: f64::INFINITY,
        },
        other => other,
    })?;
    let inv_norm = inv.frobenius_norm();
    let condition = h.frobenius_norm() * inv_norm;
    if !condition.is_finite() || condition >= MAX_CONDITION {
        return Err(Error::NearSingularChannel { condition });
    }
    let c = 1.0 / inv_norm;
    Ok((inv.scale(c), c))
}

/// Second-stage precoders of one transmitter, built from its own outgoing
/// links only. Returns `[(V[1j], c[1j]), (V[2j], c[2j])]`.
pub fn transmitter_precoders(
    to_rx1: &ComplexMatrix,
    to_rx2: &ComplexMatrix,
) -> Result<[(ComplexMatrix, f64); 2]> {
    // V[1j] steers away from receiver 2, V[2j] away from receiver 1.
    let for_rx1 = second_stage_precoder(&extend_channel(to_rx2)?)?;
    let for_rx2 = second_stage_precoder(&extend_channel(to_rx1)?)?;
    Ok([for_rx1, for_rx2])
}

#[derive(Debug, Clone)]
pub struct PrecoderSet {
    pub u1: ComplexMatrix,
    pub u2: ComplexMatrix,
    /// `v[i-1][j-1]` is `V[ij]`.
    pub v: [[ComplexMatrix; 2]; 2],
    /// `c[i-1][j-1]` is `c[ij]`.
    pub c: [[f64; 2]; 2],
}

impl PrecoderSet {
    pub fn build(ch: &ChannelSet) -> Result<Self> {
        let (u1, u2) = first_stage_precoders();
        let [(v11, c11), (v21, c21)] = transmitter_precoders(&ch.h11, &ch.h21)?;
        let [(v12, c12), (v22, c22)] = transmitter_precoders(&ch.h12, &ch.h22)?;
        Ok(Self {
            u1,
            u2,
            v: [[v11, v12], [v21, v22]],
            c: [[c11, c12], [c21, c22]],
        })
    }

    pub fn first_stage(&self, receiver: usize) -> &ComplexMatrix {
        match receiver {
            1 => &self.u1,
            2 => &self.u2,
            _ => panic!("receiver must be 1 or 2"),
        }
    }
}

fn other(i: usize) -> usize {
    3 - i
}

fn check_receiver(receiver: usize) -> Result<()> {
    if receiver == 1 || receiver == 2 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "receiver must be 1 or 2, got {receiver}"
        )))
    }
}

/// Image of the signal meant for receiver `dest` from transmitter `tx`, as
/// seen by receiver `rx`: `Hbar[rx tx] V[dest tx] U[dest]` (6x2).
fn image(ch: &ChannelSet, p: &PrecoderSet, rx: usize, tx: usize, dest: usize) -> Result<ComplexMatrix> {
    let hbar = extend_channel(ch.link(rx, tx))?;
    let v = &p.v[dest - 1][tx - 1];
    Ok(&(hbar.matrix() * v) * p.first_stage(dest))
}

/// Removes the component of `m` lying in the column span of `u`, where `u`
/// has orthogonal 0/1 columns.
fn project_out(m: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    let mut out = m.clone();
    for col in 0..u.cols() {
        let norm_sq: f64 = (0..u.rows()).map(|r| u[(r, col)].norm_sqr()).sum();
        for j in 0..m.cols() {
            let coeff = (0..u.rows())
                .map(|r| u[(r, col)].conj() * m[(r, j)])
                .sum::<num_complex::Complex64>()
                / norm_sq;
            for r in 0..u.rows() {
                out[(r, j)] -= u[(r, col)] * coeff;
            }
        }
    }
    out
}

/// Worst alignment error over both receivers.
///
/// The two interferers at receiver `i` land on `c[k1] U[k]` and `c[k2] U[k]`;
/// they coincide as subspaces but differ by the scalars `c`. The residual is
/// therefore the larger of (a) the energy each interferer leaks outside
/// span(U[k]) and (b) the mismatch once each is divided by its own `c`.
pub fn alignment_residual(ch: &ChannelSet, p: &PrecoderSet) -> f64 {
    let mut worst: f64 = 0.0;
    for rx in 1..=2 {
        let k = other(rx);
        let (Ok(a), Ok(b)) = (image(ch, p, rx, 1, k), image(ch, p, rx, 2, k)) else {
            return f64::INFINITY;
        };
        let u = p.first_stage(k);
        let leak_a = project_out(&a, u).frobenius_norm();
        let leak_b = project_out(&b, u).frobenius_norm();
        let mismatch = (&a.scale(1.0 / p.c[k - 1][0]) - &b.scale(1.0 / p.c[k - 1][1])).frobenius_norm();
        worst = worst.max(leak_a).max(leak_b).max(mismatch);
    }
    worst
}

/// Post-cancellation channel of one receiver.
#[derive(Debug, Clone)]
pub struct EffectiveChannel {
    pub receiver: usize,
    /// 4x4 map from `[s[i1]; s[i2]]` to the four combined observations.
    pub htilde: ComplexMatrix,
    /// 4x4 map from the interfering symbols `[s[k1]; s[k2]]`; zero up to
    /// rounding when alignment holds.
    pub interference: ComplexMatrix,
    /// Noise variance of each combined observation in units of `N0`.
    pub noise_variance: [f64; 4],
}

impl EffectiveChannel {
    pub fn smallest_singular_value(&self) -> f64 {
        self.htilde.singular_values()[0]
    }

    pub fn interference_gain(&self) -> f64 {
        self.interference.frobenius_norm()
    }
}

/// The 4x6 slot-combining matrix applied by `receiver`.
pub fn combining_matrix(receiver: usize) -> Result<ComplexMatrix> {
    check_receiver(receiver)?;
    let mut c = ComplexMatrix::zeros(4, 6);
    for (row, &(keep, subtract)) in COMBINING[receiver - 1].iter().enumerate() {
        c[(row, keep)] = 1.0.into();
        if let Some(s) = subtract {
            c[(row, s)] = (-1.0).into();
        }
    }
    Ok(c)
}

pub fn effective_channel(ch: &ChannelSet, receiver: usize) -> Result<EffectiveChannel> {
    let p = PrecoderSet::build(ch)?;
    effective_channel_with(ch, &p, receiver)
}

/// As [`effective_channel`] but with caller-supplied precoders.
pub fn effective_channel_with(
    ch: &ChannelSet,
    p: &PrecoderSet,
    receiver: usize,
) -> Result<EffectiveChannel> {
    check_receiver(receiver)?;
    let k = other(receiver);
    let comb = combining_matrix(receiver)?;
    let desired = ComplexMatrix::hstack(&[
        &image(ch, p, receiver, 1, receiver)?,
        &image(ch, p, receiver, 2, receiver)?,
    ])?;
    let interfering = ComplexMatrix::hstack(&[&image(ch, p, receiver, 1, k)?, &image(ch, p, receiver, 2, k)?])?;
    let mut noise_variance = [0.0; 4];
    for (row, nv) in noise_variance.iter_mut().enumerate() {
        *nv = (0..6).map(|j| comb[(row, j)].norm_sqr()).sum();
    }
    Ok(EffectiveChannel {
        receiver,
        htilde: &comb * &desired,
        interference: &comb * &interfering,
        noise_variance,
    })
}

/// Per-receiver IA rate in bits per channel use:
/// `(1/3) log2 det(I + rho W Htilde Htilde^H W)` with `W` whitening the
/// combined noise. The factor 1/3 spreads four symbols over three slots.
pub fn ia_rate(eff: &EffectiveChannel, snr: Snr) -> f64 {
    let w: Vec<f64> = eff.noise_variance.iter().map(|v| 1.0 / v.sqrt()).collect();
    let whitened = &ComplexMatrix::diag(&w) * &eff.htilde;
    log_det_capacity(&whitened, snr) / 3.0
}

/// Unwhitened variant, treating the combined noise as white.
pub fn ia_rate_unwhitened(eff: &EffectiveChannel, snr: Snr) -> f64 {
    log_det_capacity(&eff.htilde, snr) / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sample_channel_set;

    #[test]
    fn first_stage_columns() {
        let (u1, u2) = first_stage_precoders();
        let col = |m: &ComplexMatrix, j: usize| -> Vec<f64> { (0..6).map(|i| m[(i, j)].re).collect() };
        assert_eq!(col(&u1, 0), [1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(col(&u1, 1), [0.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        assert_eq!(col(&u2, 0), [1.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(col(&u2, 1), [0.0, 0.0, 0.0, 1.0, 0.0, 1.0]);
        let gram = &u1.adjoint() * &u1;
        assert_eq!(gram, ComplexMatrix::identity(2).scale(2.0));
    }

    #[test]
    fn second_stage_for_scaled_identity() {
        let inv_sqrt6 = 1.0 / 6f64.sqrt();
        let (v, c) = second_stage_precoder(&extend_channel(&ComplexMatrix::identity(2)).unwrap()).unwrap();
        assert!((c - inv_sqrt6).abs() < 1e-15);
        assert!((&v - &ComplexMatrix::identity(6).scale(inv_sqrt6)).frobenius_norm() < 1e-15);

        let two = ComplexMatrix::identity(2).scale(2.0);
        let (v, c) = second_stage_precoder(&extend_channel(&two).unwrap()).unwrap();
        assert!((c - 2.0 * inv_sqrt6).abs() < 1e-15);
        assert!((&v - &ComplexMatrix::identity(6).scale(inv_sqrt6)).frobenius_norm() < 1e-15);
    }

    #[test]
    fn second_stage_rejects_singular_links() {
        let h = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        let err = second_stage_precoder(&extend_channel(&h).unwrap()).unwrap_err();
        assert!(matches!(err, Error::NearSingularChannel { .. }));
        let eps = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 1.0, 1.0 + 1e-14]).unwrap();
        assert!(second_stage_precoder(&extend_channel(&eps).unwrap()).is_err());
    }

    #[test]
    fn identity_channels_cancel_exactly() {
        let ch = ChannelSet::uniform(ComplexMatrix::identity(2)).unwrap();
        for rx in 1..=2 {
            let eff = effective_channel(&ch, rx).unwrap();
            assert!(eff.interference_gain() < 1e-12);
        }
    }

    #[test]
    fn broken_alignment_is_detected() {
        let ch = sample_channel_set(5, 17);
        let mut p = PrecoderSet::build(&ch).unwrap();
        assert!(alignment_residual(&ch, &p) < 1e-10);
        p.v[1][1] = ComplexMatrix::identity(6);
        assert!(alignment_residual(&ch, &p) > 0.1);
    }

    #[test]
    fn combined_noise_pattern() {
        for rx in 1..=2 {
            let comb = combining_matrix(rx).unwrap();
            let cov = &comb * &comb.adjoint();
            assert_eq!(cov, ComplexMatrix::diag(&[2.0, 1.0, 2.0, 1.0]));
        }
        assert!(combining_matrix(3).is_err());
    }

    #[test]
    fn zero_channel_has_zero_rate() {
        let eff = EffectiveChannel {
            receiver: 1,
            htilde: ComplexMatrix::zeros(4, 4),
            interference: ComplexMatrix::zeros(4, 4),
            noise_variance: [2.0, 1.0, 2.0, 1.0],
        };
        assert_eq!(ia_rate(&eff, Snr::from_linear(100.0).unwrap()), 0.0);
    }
}
