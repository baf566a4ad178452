//! Block-fading channel realizations.
//!
//! Entries are i.i.d. CN(0, 1) and evolve from slot to slot as a first-order
//! Gauss-Markov process `H' = rho H + sqrt(1 - rho^2) W`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{complex_normal, substream, tag, SimRng};
use crate::{CMatrix, CVector};

/// Fading coefficients of one slot: `antennas x users`, column `k` is `h_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: CMatrix,
    slot_index: u64,
}

impl ChannelMatrix {
    pub fn new(entries: CMatrix, slot_index: u64) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "channel matrix must be at least 1x1, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        Ok(ChannelMatrix { entries, slot_index })
    }

    /// Builds the matrix from per-user channel vectors.
    pub fn from_columns(columns: &[CVector], slot_index: u64) -> Result<Self> {
        let m = columns.first().map(|c| c.len()).unwrap_or(0);
        if columns.iter().any(|c| c.len() != m) {
            return Err(Error::Dimension("ragged channel columns".into()));
        }
        Self::new(CMatrix::from_columns(columns), slot_index)
    }

    pub fn antennas(&self) -> usize {
        self.entries.nrows()
    }

    pub fn users(&self) -> usize {
        self.entries.ncols()
    }

    pub fn slot_index(&self) -> u64 {
        self.slot_index
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Channel vector `h_k` of user `k`.
    pub fn user(&self, k: usize) -> CVector {
        self.entries.column(k).into_owned()
    }
}

/// Draws an `m x k` matrix of i.i.d. CN(0, 1) entries.
pub fn sample_iid<R: Rng + ?Sized>(m: usize, k: usize, slot_index: u64, rng: &mut R) -> Result<ChannelMatrix> {
    if m == 0 || k == 0 {
        return Err(Error::Dimension(format!("cannot sample a {m}x{k} channel")));
    }
    let entries = CMatrix::from_fn(m, k, |_, _| complex_normal(rng, 1.0));
    ChannelMatrix::new(entries, slot_index)
}

/// First-order Gauss-Markov evolution with per-slot correlation `rho_step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussMarkovModel {
    rho_step: f64,
    antennas: usize,
    users: usize,
    seed: u64,
}

impl GaussMarkovModel {
    pub fn new(rho_step: f64, antennas: usize, users: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_step) {
            return Err(Error::Validation(format!("rho_step {rho_step} outside [0, 1]")));
        }
        if antennas == 0 || users == 0 {
            return Err(Error::Dimension(format!("model dimensions {antennas}x{users}")));
        }
        Ok(GaussMarkovModel {
            rho_step,
            antennas,
            users,
            seed,
        })
    }

    /// Model whose correlation after `delay` slots equals `rho`.
    pub fn from_delay_correlation(rho: f64, delay: u32, antennas: usize, users: usize, seed: u64) -> Result<Self> {
        if delay == 0 {
            return Err(Error::Validation("delay must be at least one slot".into()));
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Validation(format!("rho {rho} outside [0, 1]")));
        }
        Self::new(rho.powf(1.0 / delay as f64), antennas, users, seed)
    }

    pub fn rho_step(&self) -> f64 {
        self.rho_step
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// `rho_step^delay`.
    pub fn correlation(&self, delay: u32) -> f64 {
        correlation(self, delay)
    }

    /// Innovation stream of slot `slot`; pure in `(seed, slot)`.
    pub fn slot_rng(&self, slot: u64) -> SimRng {
        substream(self.seed, tag::CHANNEL, slot)
    }

    /// Stationary draw for slot `slot` from the model's own stream.
    pub fn initial(&self, slot: u64) -> ChannelMatrix {
        let mut rng = self.slot_rng(slot);
        sample_iid(self.antennas, self.users, slot, &mut rng).expect("dimensions validated")
    }

    /// Advance `h` by one slot using the innovation stream of the next slot.
    pub fn step(&self, h: &ChannelMatrix) -> Result<ChannelMatrix> {
        let mut rng = self.slot_rng(h.slot_index + 1);
        evolve(h, self, &mut rng)
    }

    /// `slots` consecutive realizations starting with a stationary draw at `start`.
    pub fn trajectory(&self, start: u64, slots: usize) -> Vec<ChannelMatrix> {
        let mut out = Vec::with_capacity(slots);
        if slots == 0 {
            return out;
        }
        out.push(self.initial(start));
        for _ in 1..slots {
            let next = self.step(out.last().unwrap()).expect("dimensions validated");
            out.push(next);
        }
        out
    }
}

/// `H' = rho H + sqrt(1 - rho^2) W` with fresh `W`.
pub fn evolve<R: Rng + ?Sized>(h: &ChannelMatrix, model: &GaussMarkovModel, rng: &mut R) -> Result<ChannelMatrix> {
    if h.antennas() != model.antennas || h.users() != model.users {
        return Err(Error::Dimension(format!(
            "channel is {}x{}, model expects {}x{}",
            h.antennas(),
            h.users(),
            model.antennas,
            model.users
        )));
    }
    let rho = model.rho_step;
    let innovation = (1.0 - rho * rho).max(0.0).sqrt();
    let entries = if innovation == 0.0 {
        h.entries.clone()
    } else {
        h.entries.map(|x| x * rho + complex_normal(rng, 1.0) * innovation)
    };
    ChannelMatrix::new(entries, h.slot_index + 1)
}

/// Delay correlation `rho_step^delay`.
pub fn correlation(model: &GaussMarkovModel, delay: u32) -> f64 {
    model.rho_step.powi(delay as i32)
}
