//! Downlink training, analog CSI feedback, and the MMSE re-estimation a user
//! performs to predict what the base station knows.
//!
//! All estimates of one `(user, slot)` channel are derived from the same pilot
//! observation `s = sqrt(beta1 P) h + v`; callers must thread the returned
//! [`PilotObservation`] through every feedback path so the estimation errors
//! keep their joint structure.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::complex_normal_vector;
use crate::{CVector, C64};

/// Training and feedback parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    /// Downlink pilot symbols per antenna (at least 1).
    pub beta1: f64,
    /// Feedback symbols per antenna.
    pub beta_f: f64,
    /// Downlink (and user-to-BS feedback) power.
    pub p: f64,
    /// Power of the user-to-user feedback link.
    pub p1: f64,
    pub n0: f64,
    pub antennas: usize,
}

impl TrainingConfig {
    pub fn new(beta1: f64, beta_f: f64, p: f64, p1: f64, n0: f64, antennas: usize) -> Result<Self> {
        let cfg = TrainingConfig {
            beta1,
            beta_f,
            p,
            p1,
            n0,
            antennas,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.beta1.is_nan() || self.beta1 < 1.0 || !self.beta1.is_finite() {
            return Err(Error::Validation(format!("beta1 = {} must be >= 1", self.beta1)));
        }
        for (name, v) in [("beta_f", self.beta_f), ("P", self.p), ("P1", self.p1), ("N0", self.n0)] {
            if v.is_nan() || v <= 0.0 || !v.is_finite() {
                return Err(Error::Validation(format!("{name} = {v} must be positive")));
            }
        }
        if self.antennas == 0 {
            return Err(Error::Validation("antennas must be positive".into()));
        }
        Ok(())
    }

    fn pilot_power(&self) -> f64 {
        self.beta1 * self.p
    }

    /// Per-component training error variance `1 / (1 + beta1 P / N0)`.
    pub fn sigma1_sq(&self) -> f64 {
        1.0 / (1.0 + self.pilot_power() / self.n0)
    }

    /// Effective noise on the user-to-BS feedback observation.
    pub fn sigma_w_sq(&self) -> f64 {
        self.n0 * (1.0 + (self.beta_f * self.p / self.n0) / (1.0 + self.pilot_power() / self.n0))
    }

    /// Error variance of the BS estimate.
    pub fn sigma_e_sq(&self) -> f64 {
        let w = self.sigma_w_sq();
        w / (w + self.beta_f * self.beta1 * self.p * self.p / (self.pilot_power() + self.n0))
    }

    /// Effective noise on the overheard user-to-user feedback.
    pub fn sigma_x_sq(&self) -> f64 {
        self.n0 * (1.0 + (self.beta_f * self.p1 / self.n0) / (1.0 + self.pilot_power() / self.n0))
    }

    /// Error variance of a peer's overheard estimate.
    pub fn sigma_f_sq(&self) -> f64 {
        let x = self.sigma_x_sq();
        x / (x + self.beta_f * self.p1 * self.pilot_power() / (self.pilot_power() + self.n0))
    }

    /// Shrinkage from a user-side estimate to its prediction of the BS estimate.
    pub fn gamma(&self) -> f64 {
        self.beta_f * self.p / (self.beta_f * self.p + self.n0)
    }

    fn gamma_peer_link(&self) -> f64 {
        self.beta_f * self.p1 / (self.beta_f * self.p1 + self.n0)
    }

    fn training_snr_fraction(&self) -> f64 {
        self.pilot_power() / (self.pilot_power() + self.n0)
    }

    /// Variance of `hat h - gamma tilde h`.
    pub fn sigma_a_sq(&self) -> f64 {
        let g = self.gamma();
        g * self.training_snr_fraction() * (1.0 - g)
    }

    /// Variance of `hat h - gamma breve h`.
    pub fn sigma_b_sq(&self) -> f64 {
        let g = self.gamma();
        g * self.training_snr_fraction() * (1.0 - g * self.gamma_peer_link())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimateKind {
    /// Own pilot-based estimate at the user.
    SelfTraining,
    /// Estimate formed at the BS from analog feedback.
    BsFeedback,
    /// Estimate formed by another user overhearing the feedback.
    PeerOverheard,
    /// User's prediction of the BS estimate from its own training.
    CrossFromSelf,
    /// User's prediction of the BS estimate from an overheard estimate.
    CrossFromPeer,
}

/// Who holds an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Node {
    BaseStation,
    User(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsiEstimate {
    pub vector: CVector,
    /// Per-component variance of `target - vector`.
    pub error_variance: f64,
    pub kind: EstimateKind,
    pub slot_index: u64,
    pub owner: Node,
    /// User whose channel is estimated.
    pub subject: usize,
}

/// Received pilot vector of one user in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    pub s: CVector,
    pub slot_index: u64,
    pub user: usize,
}

/// Pilot reception and MMSE channel estimate at the user.
pub fn downlink_train<R: Rng + ?Sized>(
    h_true: &CVector,
    slot_index: u64,
    user: usize,
    cfg: &TrainingConfig,
    rng: &mut R,
) -> Result<(PilotObservation, CsiEstimate)> {
    cfg.validate()?;
    let a = cfg.pilot_power().sqrt();
    let noise = complex_normal_vector(rng, h_true.len(), cfg.n0);
    let s = h_true * C64::new(a, 0.0) + noise;
    let vector = &s * C64::new(a / (cfg.n0 + cfg.pilot_power()), 0.0);
    let estimate = CsiEstimate {
        vector,
        error_variance: cfg.sigma1_sq(),
        kind: EstimateKind::SelfTraining,
        slot_index,
        owner: Node::User(user),
        subject: user,
    };
    Ok((PilotObservation { s, slot_index, user }, estimate))
}

/// Analog retransmission of `s` over an unfaded AWGN link with transmit power
/// `link_power`, followed by MMSE estimation of `h` at the receiver.
fn analog_feedback<R: Rng + ?Sized>(obs: &PilotObservation, link_power: f64, cfg: &TrainingConfig, rng: &mut R) -> CVector {
    let a = cfg.pilot_power().sqrt();
    let c = (cfg.beta_f * link_power / (cfg.pilot_power() + cfg.n0)).sqrt();
    let noise = complex_normal_vector(rng, obs.s.len(), cfg.n0);
    let g = &obs.s * C64::new(c, 0.0) + noise;
    g * C64::new(c * a / (cfg.beta_f * link_power + cfg.n0), 0.0)
}

/// BS estimate `hat h` from the user's analog feedback of `s`.
pub fn feedback_to_bs<R: Rng + ?Sized>(obs: &PilotObservation, cfg: &TrainingConfig, rng: &mut R) -> Result<CsiEstimate> {
    cfg.validate()?;
    Ok(CsiEstimate {
        vector: analog_feedback(obs, cfg.p, cfg, rng),
        error_variance: cfg.sigma_e_sq(),
        kind: EstimateKind::BsFeedback,
        slot_index: obs.slot_index,
        owner: Node::BaseStation,
        subject: obs.user,
    })
}

/// Estimate `breve h` formed by `listener` overhearing the same feedback over
/// the user-to-user link of power `P1`.
pub fn feedback_to_peer<R: Rng + ?Sized>(
    obs: &PilotObservation,
    listener: usize,
    cfg: &TrainingConfig,
    rng: &mut R,
) -> Result<CsiEstimate> {
    cfg.validate()?;
    if listener == obs.user {
        return Err(Error::Usage(format!("user {listener} cannot overhear its own feedback")));
    }
    Ok(CsiEstimate {
        vector: analog_feedback(obs, cfg.p1, cfg, rng),
        error_variance: cfg.sigma_f_sq(),
        kind: EstimateKind::PeerOverheard,
        slot_index: obs.slot_index,
        owner: Node::User(listener),
        subject: obs.user,
    })
}

/// Result of [`cross_estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CrossEstimate {
    /// `check h = gamma * source`, estimating the BS's `hat h`.
    pub estimate: CsiEstimate,
    pub gamma: f64,
    /// Variance of `hat h - check h` per component.
    pub zeta_variance: f64,
}

/// MMSE prediction of the BS estimate from a user-side estimate.
pub fn cross_estimate(source: &CsiEstimate, cfg: &TrainingConfig) -> Result<CrossEstimate> {
    cfg.validate()?;
    let (kind, zeta_variance) = match source.kind {
        EstimateKind::SelfTraining => (EstimateKind::CrossFromSelf, cfg.sigma_a_sq()),
        EstimateKind::PeerOverheard => (EstimateKind::CrossFromPeer, cfg.sigma_b_sq()),
        other => {
            return Err(Error::Usage(format!(
                "cross estimate needs a self-trained or overheard source, got {other:?}"
            )))
        }
    };
    let gamma = cfg.gamma();
    Ok(CrossEstimate {
        estimate: CsiEstimate {
            vector: &source.vector * C64::new(gamma, 0.0),
            error_variance: zeta_variance,
            kind,
            slot_index: source.slot_index,
            owner: source.owner,
            subject: source.subject,
        },
        gamma,
        zeta_variance,
    })
}
