//! Schedulers for multi-round transmission with outdated CSIT.
//!
//! Two families are provided: the max-weight scheduler over two-user MAT
//! sessions drawn from a fixed round-1 buffer ([`session`]) and the
//! packet-centric eavesdropper scheduler with pairing queues ([`packet`]).
//! Realized rates use perfect outdated CSIT.

pub mod buffer;
pub mod objective;
pub mod observe;
pub mod packet;
pub mod queues;
pub mod session;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{substream, tag};
use buffer::Round1Buffer;
use packet::{PacketCentricSim, PacketMode, PacketParams};
use queues::{Arrival, VirtualQueueState};
use session::{MatSessionScheduler, SessionParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchedMode {
    MatSession,
    PacketCentric2u,
    PacketCentric3u2r,
    PacketCentric3u3r,
}

impl SchedMode {
    pub fn packet_mode(self) -> Option<PacketMode> {
        match self {
            SchedMode::MatSession => None,
            SchedMode::PacketCentric2u => Some(PacketMode::TwoUser),
            SchedMode::PacketCentric3u2r => Some(PacketMode::ThreeUserTwoRound),
            SchedMode::PacketCentric3u3r => Some(PacketMode::ThreeUserThreeRound),
        }
    }
}

/// Inputs of a scheduled run at one SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerSetup {
    pub mode: SchedMode,
    /// Users in the system, `L`.
    pub users: usize,
    /// Round-1 packets buffered per user (MAT-session scheduler only).
    pub buffer: usize,
    pub p: f64,
    pub n0: f64,
    pub f_samples: usize,
    pub arrival: Arrival,
    pub seed: u64,
}

pub enum SchedulerState {
    Session(Box<MatSessionScheduler>),
    Packet(Box<PacketCentricSim>),
}

impl SchedulerState {
    pub fn new(setup: &SchedulerSetup) -> Result<Self> {
        match setup.mode.packet_mode() {
            None => {
                let mut rng = substream(setup.seed, tag::SCHED_FRAME, u64::MAX);
                let buffer = Round1Buffer::filled(setup.users, setup.buffer, 2, setup.p, setup.n0, &mut rng)?;
                let queues = VirtualQueueState::new(setup.users, setup.arrival)?;
                let params = SessionParams {
                    p: setup.p,
                    n0: setup.n0,
                    f_samples: setup.f_samples,
                    seed: setup.seed,
                };
                Ok(SchedulerState::Session(Box::new(MatSessionScheduler::new(buffer, queues, params)?)))
            }
            Some(mode) => Ok(SchedulerState::Packet(Box::new(PacketCentricSim::new(PacketParams {
                mode,
                users: setup.users,
                p: setup.p,
                n0: setup.n0,
            })?))),
        }
    }

    fn users(&self) -> usize {
        match self {
            SchedulerState::Session(s) => s.buffer.users(),
            SchedulerState::Packet(s) => s.params().users,
        }
    }
}

/// Result of one scheduling decision.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    /// Bits delivered to each user by packets completed in this frame.
    pub served: Vec<f64>,
    /// Sum-rate samples in bits per channel use; their mean over a run is
    /// the sum rate.
    pub samples: Vec<f64>,
}

/// Executes one decision: a round-2 session for the MAT-session scheduler,
/// or one round-1 packet and the transmissions it triggers otherwise.
pub fn run_scheduled_frame<R: Rng + ?Sized>(state: &mut SchedulerState, rng: &mut R) -> Result<FrameResult> {
    let users = state.users();
    match state {
        SchedulerState::Session(s) => {
            let out = s.run_frame(rng)?;
            let rate = out.sum_rate();
            Ok(FrameResult {
                served: out.served,
                samples: vec![rate],
            })
        }
        SchedulerState::Packet(s) => {
            let spp = s.params().mode.slots_per_packet();
            let spp = *spp.numer() as f64 / *spp.denom() as f64;
            let mut served = vec![0.0; users];
            let mut samples = Vec::new();
            for c in s.step(rng)? {
                served[c.user] += c.information;
                samples.push(c.information / spp);
            }
            Ok(FrameResult { served, samples })
        }
    }
}

/// Runs until `samples` sum-rate samples are collected.
pub fn simulate(setup: &SchedulerSetup, samples: usize) -> Result<Vec<f64>> {
    if samples == 0 {
        return Err(Error::Validation("samples must be positive".into()));
    }
    let mut state = SchedulerState::new(setup)?;
    let mut rng = substream(setup.seed, tag::SCHED_SLOT, 0);
    let mut out = Vec::with_capacity(samples + 8);
    while out.len() < samples {
        out.extend(run_scheduled_frame(&mut state, &mut rng)?.samples);
    }
    out.truncate(samples);
    Ok(out)
}
