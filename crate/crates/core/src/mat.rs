//! Two-user retrospective interference alignment (MAT) sessions.
//!
//! Slot 1 carries `x1` for user 1, slot 2 carries `x2` for user 2, and slot 3
//! carries the scalar `alpha (h1[2]^H x2 + h2[1]^H x1)` on antenna 1. Users
//! are indexed 0 and 1 below; "own slot" of user `u` is slot `u + 1`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_rational::Ratio;
use rand::Rng;

use crate::channel::{evolve, ChannelMatrix, GaussMarkovModel};
use crate::csi::{cross_estimate, downlink_train, feedback_to_bs, feedback_to_peer, CsiEstimate, TrainingConfig};
use crate::error::{Error, Result};
use crate::linalg::{log2_det_hpd, mutual_information};
use crate::rng::{complex_normal, complex_normal_vector};
use crate::{CMatrix, CVector, C64};

/// Round-2 power normalization used in every mode.
pub const ALPHA: f64 = FRAC_1_SQRT_2;

/// True channels of one session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionChannels {
    /// `round1[u][j]` is user `u`'s channel during round-1 slot `j`.
    pub round1: [[CVector; 2]; 2],
    /// Scalar channel of each user from antenna 1 in the round-2 slot.
    pub round2: [C64; 2],
}

impl SessionChannels {
    pub fn antennas(&self) -> usize {
        self.round1[0][0].len()
    }

    /// Draws the three slots of a session. Consecutive slots are correlated by
    /// `slot_correlation` (0 gives independent slots).
    pub fn sample<R: Rng + ?Sized>(antennas: usize, slot_correlation: f64, rng: &mut R) -> Result<Self> {
        let model = GaussMarkovModel::new(slot_correlation, antennas, 2, 0)?;
        let s1 = crate::channel::sample_iid(antennas, 2, 1, rng)?;
        let s2 = evolve(&s1, &model, rng)?;
        let s3 = evolve(&s2, &model, rng)?;
        Ok(Self::from_slots(&s1, &s2, &s3))
    }

    fn from_slots(s1: &ChannelMatrix, s2: &ChannelMatrix, s3: &ChannelMatrix) -> Self {
        SessionChannels {
            round1: [[s1.user(0), s2.user(0)], [s1.user(1), s2.user(1)]],
            round2: [s3.entries()[(0, 0)], s3.entries()[(0, 1)]],
        }
    }
}

/// Estimates held by one user in a trained session.
#[derive(Debug, Clone, PartialEq)]
pub struct UserEstimates {
    /// Own channel in own slot (self-trained).
    pub own: CsiEstimate,
    /// Own channel in the other user's slot (self-trained).
    pub eavesdrop: CsiEstimate,
    /// Other user's channel in this user's slot, overheard from its feedback.
    pub overheard: CsiEstimate,
    /// Scalar round-2 channel (self-trained on one antenna).
    pub round2: CsiEstimate,
}

/// Complete estimate set of a trained session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionEstimates {
    pub users: [UserEstimates; 2],
    /// `bs[u]`: BS estimate of user `u`'s eavesdropper channel (`h_u` in the
    /// other user's slot).
    pub bs: [CsiEstimate; 2],
}

/// Everything needed to evaluate one session end to end.
#[derive(Debug, Clone, PartialEq)]
pub struct MatSessionRecord {
    pub channels: SessionChannels,
    pub estimates: Option<SessionEstimates>,
    pub cfg: Option<TrainingConfig>,
    pub alpha: f64,
}

impl MatSessionRecord {
    pub fn perfect(channels: SessionChannels) -> Self {
        MatSessionRecord {
            channels,
            estimates: None,
            cfg: None,
            alpha: ALPHA,
        }
    }

    /// Runs training, BS feedback and peer overhearing for every channel the
    /// protocol needs, from shared pilot observations.
    pub fn trained<R: Rng + ?Sized>(channels: SessionChannels, cfg: TrainingConfig, rng: &mut R) -> Result<Self> {
        if cfg.antennas != channels.antennas() {
            return Err(Error::Dimension(format!(
                "training config for {} antennas, channels have {}",
                cfg.antennas,
                channels.antennas()
            )));
        }
        let mut pilots = Vec::with_capacity(4);
        let mut tilde = Vec::with_capacity(4);
        for u in 0..2 {
            for j in 0..2 {
                let (obs, est) = downlink_train(&channels.round1[u][j], j as u64 + 1, u, &cfg, rng)?;
                pilots.push(obs);
                tilde.push(est);
            }
        }
        let idx = |u: usize, j: usize| 2 * u + j;
        let mut scalar = Vec::with_capacity(2);
        for u in 0..2 {
            let h3 = CVector::from_element(1, channels.round2[u]);
            scalar.push(downlink_train(&h3, 3, u, &cfg, rng)?.1);
        }
        // eavesdropper channel of user u lives in slot of the other user
        let bs = [
            feedback_to_bs(&pilots[idx(0, 1)], &cfg, rng)?,
            feedback_to_bs(&pilots[idx(1, 0)], &cfg, rng)?,
        ];
        let overheard = [
            feedback_to_peer(&pilots[idx(1, 0)], 0, &cfg, rng)?,
            feedback_to_peer(&pilots[idx(0, 1)], 1, &cfg, rng)?,
        ];
        let mut tilde = tilde.into_iter();
        let mut scalar = scalar.into_iter();
        let mut overheard = overheard.into_iter();
        let mut user = |u: usize| {
            let first = tilde.next().unwrap();
            let second = tilde.next().unwrap();
            let (own, eavesdrop) = if u == 0 { (first, second) } else { (second, first) };
            UserEstimates {
                own,
                eavesdrop,
                overheard: overheard.next().unwrap(),
                round2: scalar.next().unwrap(),
            }
        };
        let users = [user(0), user(1)];
        Ok(MatSessionRecord {
            channels,
            estimates: Some(SessionEstimates { users, bs }),
            cfg: Some(cfg),
            alpha: ALPHA,
        })
    }

    fn antennas(&self) -> usize {
        self.channels.antennas()
    }
}

fn check_user(user: usize) -> Result<usize> {
    if user > 1 {
        return Err(Error::Usage(format!("two-user session has no user {user}")));
    }
    Ok(1 - user)
}

/// Round-1 outputs `y_n = h_n^H x + v_n` of every user.
pub fn simulate_round1<R: Rng + ?Sized>(x: &CVector, h: &ChannelMatrix, n0: f64, rng: &mut R) -> Result<Vec<C64>> {
    if x.len() != h.antennas() {
        return Err(Error::Dimension(format!(
            "symbol has {} entries for {} antennas",
            x.len(),
            h.antennas()
        )));
    }
    Ok((0..h.users())
        .map(|n| h.entries().column(n).dotc(x) + complex_normal(rng, n0))
        .collect())
}

/// Unscaled round-2 symbol `csit_1^H x2 + csit_2^H x1`, where `csit_u` is the
/// BS's version of user `u`'s eavesdropper channel.
pub fn form_round2_message(csit_1: &CVector, csit_2: &CVector, x1: &CVector, x2: &CVector) -> C64 {
    csit_1.dotc(x2) + csit_2.dotc(x1)
}

/// Signals and observations of one simulated session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionSignals {
    /// Transmitted vectors of slots 1, 2 and 3.
    pub transmitted: [CVector; 3],
    /// `y[u][t]`: output of user `u` in slot `t + 1`.
    pub y: [[C64; 3]; 2],
}

/// Runs the three slots with data `x1`, `x2`. The round-2 symbol is built
/// from the BS's estimates when the session is trained.
pub fn simulate_session<R: Rng + ?Sized>(
    session: &MatSessionRecord,
    x1: &CVector,
    x2: &CVector,
    n0: f64,
    rng: &mut R,
) -> Result<SessionSignals> {
    let m = session.antennas();
    if x1.len() != m || x2.len() != m {
        return Err(Error::Dimension("data symbol size differs from antenna count".into()));
    }
    let ch = &session.channels;
    let (csit_1, csit_2) = match &session.estimates {
        Some(est) => (est.bs[0].vector.clone(), est.bs[1].vector.clone()),
        None => (ch.round1[0][1].clone(), ch.round1[1][0].clone()),
    };
    let msg = form_round2_message(&csit_1, &csit_2, x1, x2) * session.alpha;
    let mut x3 = CVector::zeros(m);
    x3[0] = msg;
    let mut y = [[C64::new(0.0, 0.0); 3]; 2];
    for (u, out) in y.iter_mut().enumerate() {
        out[0] = ch.round1[u][0].dotc(x1) + complex_normal(rng, n0);
        out[1] = ch.round1[u][1].dotc(x2) + complex_normal(rng, n0);
        out[2] = ch.round2[u].conj() * msg + complex_normal(rng, n0);
    }
    Ok(SessionSignals {
        transmitted: [x1.clone(), x2.clone(), x3],
        y,
    })
}

/// Round-2 output of `user` after removing its own eavesdropped observation:
/// `y[3] - c * y[eavesdrop slot]` with `c = alpha * conj(h3)` (the conjugate
/// matches the `h^H x` convention of the received signal).
pub fn cancel_interference(signals: &SessionSignals, user: usize, alpha: f64, h3: C64) -> Result<C64> {
    let other = check_user(user)?;
    Ok(signals.y[user][2] - h3.conj() * alpha * signals.y[user][other])
}

/// Equivalent 2 x M channel of `user` with perfect CSI and its diagonal
/// noise covariance.
pub fn effective_channel_perfect(session: &MatSessionRecord, user: usize, n0: f64) -> Result<(CMatrix, [f64; 2])> {
    let other = check_user(user)?;
    let ch = &session.channels;
    let h3 = ch.round2[user];
    let a = session.alpha;
    let m = session.antennas();
    let own = &ch.round1[user][user];
    let eaves = &ch.round1[other][user];
    let heff = CMatrix::from_fn(2, m, |r, c| if r == 0 { own[c].conj() } else { h3.conj() * a * eaves[c].conj() });
    Ok((heff, [n0, n0 * (1.0 + (h3 * a).norm_sqr())]))
}

/// Per-user rate with perfect CSI, `(1/3) log2 det(I + K^-1 H H^H P/M)`.
pub fn perfect_rate(session: &MatSessionRecord, user: usize, p: f64, n0: f64) -> Result<f64> {
    let (h, k) = effective_channel_perfect(session, user, n0)?;
    Ok(mutual_information(&h, &k, p / session.antennas() as f64)? / 3.0)
}

/// Sum rate of both users with perfect CSI.
pub fn perfect_sum_rate(session: &MatSessionRecord, p: f64, n0: f64) -> Result<f64> {
    Ok(perfect_rate(session, 0, p, n0)? + perfect_rate(session, 1, p, n0)?)
}

/// Matrices of the training-aware rate lower bound for one user.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBoundTerms {
    pub a: CMatrix,
    pub b: CMatrix,
    /// Diagonal of `I_A`.
    pub i_a: [f64; 2],
    /// Diagonal of `I_B`.
    pub i_b: [f64; 2],
    /// Diagonal of `N_MAT`.
    pub n_mat: [f64; 2],
}

/// Builds `A`, `B`, `I_A`, `I_B`, `N_MAT` for `user` from its estimates.
pub fn rate_bound_terms(session: &MatSessionRecord, user: usize) -> Result<RateBoundTerms> {
    check_user(user)?;
    let (est, cfg) = match (&session.estimates, &session.cfg) {
        (Some(e), Some(c)) => (&e.users[user], c),
        _ => return Err(Error::Usage("rate bound needs a trained session".into())),
    };
    let m = session.antennas();
    let mf = m as f64;
    let alpha = session.alpha;
    let s1 = cfg.sigma1_sq();
    let n0 = cfg.n0;

    let peer = cross_estimate(&est.overheard, cfg)?;
    let own_eaves = cross_estimate(&est.eavesdrop, cfg)?;
    let gamma = peer.gamma;
    let sigma_b = peer.zeta_variance;
    let sigma_a = own_eaves.zeta_variance;
    let h3 = est.round2.vector[0];
    let check_peer = &peer.estimate.vector;
    let check_own = &own_eaves.estimate.vector;
    let tilde_own = &est.own.vector;
    let tilde_eaves = &est.eavesdrop.vector;

    let a = CMatrix::from_fn(2, m, |r, c| {
        if r == 0 {
            tilde_own[c].conj()
        } else {
            h3 * alpha * check_peer[c].conj()
        }
    });
    let b = CMatrix::from_fn(2, m, |r, c| {
        if r == 0 {
            C64::new(0.0, 0.0)
        } else {
            h3 * alpha * (check_own[c].conj() - tilde_eaves[c].conj() * gamma)
        }
    });
    let h3_sq = h3.norm_sqr();
    let a2 = alpha * alpha;
    let i_a = [
        mf * s1,
        a2 * (s1 * (mf * sigma_b + check_peer.norm_squared()) + mf * h3_sq * sigma_b),
    ];
    let i_b = [
        0.0,
        a2 * (s1 * (mf * sigma_a + check_own.norm_squared()) + mf * h3_sq * (sigma_a + gamma * gamma * s1)),
    ];
    let n_mat = [n0, n0 * (1.0 + (h3 * alpha * gamma).norm_sqr())];
    Ok(RateBoundTerms { a, b, i_a, i_b, n_mat })
}

/// `(2/3) [log2 |N + (AA^H + BB^H + I_A + I_B) P/M| - log2 |N + (BB^H + I_A + I_B) P/M|]`
/// for one realization.
///
/// Under the symmetry of the two users this equals the session's sum rate,
/// i.e. twice the per-user rate.
pub fn rate_lower_bound(terms: &RateBoundTerms, p: f64, m: usize) -> Result<f64> {
    if terms.a.ncols() != m || terms.b.ncols() != m {
        return Err(Error::Dimension(format!("terms have {} columns, M = {m}", terms.a.ncols())));
    }
    let scale = C64::new(p / m as f64, 0.0);
    let bb = &terms.b * terms.b.adjoint();
    let mut interference = bb * scale;
    for i in 0..2 {
        interference[(i, i)] += terms.n_mat[i] + (terms.i_a[i] + terms.i_b[i]) * p / m as f64;
    }
    let total = &interference + &terms.a * terms.a.adjoint() * scale;
    Ok(2.0 / 3.0 * (log2_det_hpd(&total)? - log2_det_hpd(&interference)?))
}

/// Sum-rate lower bound of a trained session: the mean of the two users'
/// symmetric bounds.
pub fn trained_sum_rate(session: &MatSessionRecord, p: f64) -> Result<f64> {
    let m = session.antennas();
    let r0 = rate_lower_bound(&rate_bound_terms(session, 0)?, p, m)?;
    let r1 = rate_lower_bound(&rate_bound_terms(session, 1)?, p, m)?;
    Ok(0.5 * (r0 + r1))
}

/// Draws data symbols `x ~ CN(0, P/M I)`.
pub fn sample_data<R: Rng + ?Sized>(antennas: usize, p: f64, rng: &mut R) -> CVector {
    complex_normal_vector(rng, antennas, p / antennas as f64)
}

/// Slot and symbol counts of a K-user R-round scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotAccounting {
    pub slots_per_round: Vec<u64>,
    pub total_slots: u64,
    pub total_symbols: u64,
    pub dof: Ratio<u64>,
}

/// Rounds `1..R-1` use `Q/r` slots, round `R` uses `Q(K+1-R)/R`; `K Q` symbols
/// are delivered in total.
pub fn slot_accounting(k: u64, r: u64, q: u64) -> Result<SlotAccounting> {
    if k < 2 {
        return Err(Error::Validation(format!("K = {k}, need at least 2 users")));
    }
    if r < 2 || r > k {
        return Err(Error::Validation(format!("R = {r} outside [2, K = {k}]")));
    }
    if q == 0 {
        return Err(Error::Validation("Q must be positive".into()));
    }
    let mut slots_per_round = Vec::with_capacity(r as usize);
    for round in 1..r {
        if !q.is_multiple_of(round) {
            return Err(Error::Validation(format!("Q = {q} gives non-integral round-{round} slots")));
        }
        slots_per_round.push(q / round);
    }
    let last = q * (k + 1 - r);
    if !last.is_multiple_of(r) {
        return Err(Error::Validation(format!("Q = {q} gives non-integral round-{r} slots")));
    }
    slots_per_round.push(last / r);
    let total_slots: u64 = slots_per_round.iter().sum();
    let total_symbols = k * q;
    Ok(SlotAccounting {
        slots_per_round,
        total_slots,
        total_symbols,
        dof: Ratio::new(total_symbols, total_slots),
    })
}
