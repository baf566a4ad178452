//! Linear zero-forcing beamforming with delayed CSIT.

use rand::Rng;

use crate::channel::{evolve, sample_iid, ChannelMatrix, GaussMarkovModel};
use crate::csi::{downlink_train, feedback_to_bs, TrainingConfig};
use crate::error::{Error, Result};
use crate::{CMatrix, C64};

/// Unit-norm zero-forcing beams, one column per user.
#[derive(Debug, Clone, PartialEq)]
pub struct ZfPrecoder {
    pub columns: CMatrix,
    pub source_estimate_slot: u64,
    pub transmit_slot: u64,
}

/// Channel-inversion precoder `H (H^H H)^-1` with columns scaled to unit norm.
pub fn zf_precoder(h_hat: &ChannelMatrix) -> Result<ZfPrecoder> {
    let (m, k) = (h_hat.antennas(), h_hat.users());
    if k > m {
        return Err(Error::Dimension(format!("{k} users exceed {m} antennas")));
    }
    let h = h_hat.entries();
    let gram = h.adjoint() * h;
    let scale = gram.iter().map(|x| x.norm()).fold(0.0, f64::max);
    let inv = gram
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("channel estimate is rank deficient".into()))?;
    let mut columns = h * inv;
    for mut col in columns.column_iter_mut() {
        let n = col.norm();
        if !(n.is_finite() && n * scale > 0.0) || n * scale > 1e12 {
            return Err(Error::Singular("channel estimate is rank deficient".into()));
        }
        col /= C64::new(n, 0.0);
    }
    Ok(ZfPrecoder {
        columns,
        source_estimate_slot: h_hat.slot_index(),
        transmit_slot: h_hat.slot_index(),
    })
}

/// Per-user rates with equal stream power `P/K` on the true channel.
pub fn lzfb_rate(h_true: &ChannelMatrix, precoder: &ZfPrecoder, p: f64, n0: f64) -> Result<Vec<f64>> {
    let w = &precoder.columns;
    if w.nrows() != h_true.antennas() || w.ncols() != h_true.users() {
        return Err(Error::Dimension(format!(
            "precoder is {}x{}, channel is {}x{}",
            w.nrows(),
            w.ncols(),
            h_true.antennas(),
            h_true.users()
        )));
    }
    let k = w.ncols();
    let per_stream = p / k as f64;
    // gains[(k, j)] = h_k^H w_j
    let gains = h_true.entries().adjoint() * w;
    Ok((0..k)
        .map(|u| {
            let signal = gains[(u, u)].norm_sqr() * per_stream;
            let interference: f64 = (0..k).filter(|&j| j != u).map(|j| gains[(u, j)].norm_sqr()).sum::<f64>() * per_stream;
            (1.0 + signal / (n0 + interference)).log2()
        })
        .collect())
}

/// CSIT available at the BS when it computes the beams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LzfbCsit {
    /// Exact channel of the pilot slot.
    Perfect,
    /// Pilot training followed by analog feedback.
    Trained(TrainingConfig),
}

/// One LZFB realization: beams from CSIT of the pilot slot, transmission one
/// slot later after the channel has aged with correlation `rho`.
pub fn sample_sum_rate<R: Rng + ?Sized>(
    antennas: usize,
    users: usize,
    rho: f64,
    csit: &LzfbCsit,
    p: f64,
    n0: f64,
    rng: &mut R,
) -> Result<f64> {
    let pilot = sample_iid(antennas, users, 0, rng)?;
    let h_hat = match csit {
        LzfbCsit::Perfect => pilot.clone(),
        LzfbCsit::Trained(cfg) => {
            let mut cols = Vec::with_capacity(users);
            for u in 0..users {
                let (obs, _) = downlink_train(&pilot.user(u), 0, u, cfg, rng)?;
                cols.push(feedback_to_bs(&obs, cfg, rng)?.vector);
            }
            ChannelMatrix::from_columns(&cols, 0)?
        }
    };
    let model = GaussMarkovModel::new(rho, antennas, users, 0)?;
    let current = evolve(&pilot, &model, rng)?;
    let mut precoder = zf_precoder(&h_hat)?;
    precoder.transmit_slot = current.slot_index();
    Ok(lzfb_rate(&current, &precoder, p, n0)?.iter().sum())
}
