//! Packet-centric eavesdropper scheduling with pairing queues.
//!
//! Round-1 packets go to users in round-robin order. For each packet the BS
//! picks `K-1` eavesdroppers from round-1 CSIT and queues their observations
//! in the pair queues. Degree-2 combinations are sent in round 2 as soon as
//! a pair queue can form them; in the three-round mode a round-3
//! eavesdropper of each round-2 slot feeds the degree-3 queues. With `L = K`
//! every choice is forced and the scheme reduces to the unscheduled MAT
//! session of the same size.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;

use num_rational::Ratio;
use rand::Rng;

use crate::channel::sample_iid;
use crate::error::{Error, Result};
use crate::sched::buffer::Round1Buffer;
use crate::sched::objective::{select_eavesdropper, select_eavesdropper_pair, select_round3_eavesdropper};
use crate::sched::observe::{ObservationLedger, Term};
use crate::sched::queues::PairingQueue;
use crate::{CMatrix, C64};

/// Eavesdropper for buffered packet `(m, i)` under the heuristic objective,
/// using the CSIT of the packet's round-1 slot.
pub fn packet_centric_select(m: usize, i: usize, buffer: &Round1Buffer, p: f64, n0: f64) -> Result<usize> {
    let entry = buffer.entry(m, i)?;
    select_eavesdropper(&entry.channels, m, p, n0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketMode {
    /// Two-user, two-round.
    TwoUser,
    /// Three-user, two-round.
    ThreeUserTwoRound,
    /// Three-user, three-round.
    ThreeUserThreeRound,
}

impl PacketMode {
    /// Users per message set; also the antenna count and packet dimension.
    pub fn users(self) -> usize {
        match self {
            PacketMode::TwoUser => 2,
            _ => 3,
        }
    }

    pub fn rounds(self) -> usize {
        match self {
            PacketMode::ThreeUserThreeRound => 3,
            _ => 2,
        }
    }

    /// Channel uses per delivered packet in steady state.
    pub fn slots_per_packet(self) -> Ratio<u64> {
        match self {
            PacketMode::TwoUser => Ratio::new(3, 2),
            PacketMode::ThreeUserTwoRound => Ratio::new(2, 1),
            PacketMode::ThreeUserThreeRound => Ratio::new(11, 6),
        }
    }
}

/// Observation waiting in a lane, with the packets that depend on its delivery.
#[derive(Debug, Clone, PartialEq)]
struct SubMessage {
    user: usize,
    slot: usize,
    power: f64,
    packets: Vec<usize>,
}

impl SubMessage {
    fn term(&self) -> Term {
        Term::Obs {
            user: self.user,
            slot: self.slot,
        }
    }
}

/// A packet whose every sub-message has been delivered.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletedPacket {
    pub user: usize,
    /// Mutual information of the packet in bits.
    pub information: f64,
}

/// Configuration of a packet-centric run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketParams {
    pub mode: PacketMode,
    /// Number of users `L`.
    pub users: usize,
    pub p: f64,
    pub n0: f64,
}

/// State of a packet-centric run.
#[derive(Debug, Clone)]
pub struct PacketCentricSim {
    params: PacketParams,
    ledger: ObservationLedger,
    pairs: HashMap<(usize, usize), PairingQueue<SubMessage>>,
    combos: HashMap<(usize, usize), VecDeque<[SubMessage; 2]>>,
    triples: HashMap<(usize, usize, usize), PairingQueue<SubMessage>>,
    pending: HashMap<usize, usize>,
    packets_sent: u64,
    slots_used: u64,
}

impl PacketCentricSim {
    pub fn new(params: PacketParams) -> Result<Self> {
        let k = params.mode.users();
        if params.users < k {
            return Err(Error::Validation(format!("mode needs at least {k} users, L = {}", params.users)));
        }
        if !(params.p > 0.0 && params.n0 > 0.0 && params.p.is_finite()) {
            return Err(Error::Validation("P and N0 must be positive and finite".into()));
        }
        Ok(PacketCentricSim {
            params,
            ledger: ObservationLedger::new(),
            pairs: HashMap::new(),
            combos: HashMap::new(),
            triples: HashMap::new(),
            pending: HashMap::new(),
            packets_sent: 0,
            slots_used: 0,
        })
    }

    pub fn params(&self) -> &PacketParams {
        &self.params
    }

    pub fn slots_used(&self) -> u64 {
        self.slots_used
    }

    pub fn packets_sent(&self) -> u64 {
        self.packets_sent
    }

    /// Slots kept alive by packets still in flight.
    pub fn live_slots(&self) -> usize {
        self.ledger.live_slots()
    }

    fn antennas(&self) -> usize {
        self.params.mode.users()
    }

    fn data_var(&self) -> f64 {
        self.params.p / self.antennas() as f64
    }

    fn new_slot<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<CMatrix> {
        self.slots_used += 1;
        Ok(sample_iid(self.antennas(), self.params.users, self.slots_used, rng)?
            .entries()
            .clone())
    }

    /// Sends one round-1 packet and every transmission it enables; returns
    /// the packets completed on the way.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<CompletedPacket>> {
        let mode = self.params.mode;
        let k = mode.users();
        let user = (self.packets_sent % self.params.users as u64) as usize;
        self.packets_sent += 1;
        let packet = self.ledger.new_packet(user, k);
        let channels = self.new_slot(rng)?;
        let eaves = match mode {
            PacketMode::TwoUser => vec![select_eavesdropper(&channels, user, self.params.p, self.params.n0)?],
            _ => {
                let (a, b) = select_eavesdropper_pair(&channels, user, self.params.p, self.params.n0)?;
                vec![a, b]
            }
        };
        let tx = (0..k).map(|d| vec![(Term::Data { packet, dim: d }, C64::new(1.0, 0.0))]).collect();
        let slot = self.ledger.push_slot(channels, tx)?;
        let per_sub = if mode.rounds() == 3 { 2 } else { 1 };
        self.pending.insert(packet, per_sub * eaves.len());

        let mut done = Vec::new();
        for n in eaves {
            let sub = SubMessage {
                user: n,
                slot,
                power: self.ledger.observation_power(n, slot, self.data_var())?,
                packets: vec![packet],
            };
            let key = (user.min(n), user.max(n));
            let queue = match self.pairs.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => e.insert(PairingQueue::new(&[key.0, key.1])?),
            };
            queue.enqueue(n, sub)?;
            if let Some(pair) = queue.combine() {
                let [a, b]: [SubMessage; 2] = pair.try_into().expect("two lanes");
                match mode.rounds() {
                    2 => self.send_round2(key, vec![[a, b]], rng, &mut done)?,
                    _ => {
                        let fifo = self.combos.entry(key).or_default();
                        fifo.push_back([a, b]);
                        if fifo.len() >= 2 {
                            let c1 = fifo.pop_front().expect("length checked");
                            let c2 = fifo.pop_front().expect("length checked");
                            self.send_round2(key, vec![c1, c2], rng, &mut done)?;
                        }
                    }
                }
            }
        }
        Ok(done)
    }

    /// One round-2 slot carrying one combination per active antenna.
    fn send_round2<R: Rng + ?Sized>(
        &mut self,
        pair: (usize, usize),
        combos: Vec<[SubMessage; 2]>,
        rng: &mut R,
        done: &mut Vec<CompletedPacket>,
    ) -> Result<()> {
        let active = combos.len();
        let per_antenna = self.params.p / active as f64;
        let channels = self.new_slot(rng)?;
        let tx: Vec<Vec<(Term, C64)>> = combos
            .iter()
            .map(|[a, b]| {
                let alpha = scale(per_antenna, a.power + b.power);
                vec![(a.term(), alpha), (b.term(), alpha)]
            })
            .collect();
        let slot = self.ledger.push_slot(channels, tx)?;
        let mut carried: Vec<usize> = combos.iter().flatten().flat_map(|s| s.packets.iter().copied()).collect();
        carried.sort_unstable();
        if self.params.mode.rounds() == 3 {
            let q = select_round3_eavesdropper(self.ledger.channels(slot)?, active, pair, self.params.p, self.params.n0)?;
            let sub = SubMessage {
                user: q,
                slot,
                power: self.ledger.observation_power(q, slot, self.data_var())?,
                packets: carried.clone(),
            };
            let mut key = [pair.0, pair.1, q];
            key.sort_unstable();
            let key = (key[0], key[1], key[2]);
            let queue = match self.triples.entry(key) {
                std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
                std::collections::hash_map::Entry::Vacant(e) => e.insert(PairingQueue::new(&[key.0, key.1, key.2])?),
            };
            queue.enqueue(q, sub)?;
            let message = queue.combine();
            self.deliver(&carried, done)?;
            if let Some(subs) = message {
                self.send_round3(subs, rng, done)?;
            }
            return Ok(());
        }
        self.deliver(&carried, done)
    }

    /// Two round-3 slots with independent combinations of the three
    /// observations, so each member can solve for the two it lacks.
    fn send_round3<R: Rng + ?Sized>(&mut self, subs: Vec<SubMessage>, rng: &mut R, done: &mut Vec<CompletedPacket>) -> Result<()> {
        let omega = C64::from_polar(1.0, 2.0 * PI / 3.0);
        for row in 0..2 {
            let weights: Vec<C64> = (0..3).map(|i| omega.powi(row * i)).collect();
            let power: f64 = subs.iter().zip(&weights).map(|(s, w)| w.norm_sqr() * s.power).sum();
            let beta = scale(self.params.p, power);
            let combo = subs.iter().zip(&weights).map(|(s, w)| (s.term(), *w * beta)).collect();
            let channels = self.new_slot(rng)?;
            self.ledger.push_slot(channels, vec![combo])?;
        }
        let mut carried: Vec<usize> = subs.iter().flat_map(|s| s.packets.iter().copied()).collect();
        carried.sort_unstable();
        self.deliver(&carried, done)
    }

    fn deliver(&mut self, packets: &[usize], done: &mut Vec<CompletedPacket>) -> Result<()> {
        for &p in packets {
            let left = self.pending.get_mut(&p).expect("delivered packet is pending");
            *left -= 1;
            if *left == 0 {
                self.pending.remove(&p);
                let user = self.ledger_user(p)?;
                let information = self.ledger.finish_packet(p, self.data_var(), self.params.n0)?;
                done.push(CompletedPacket { user, information });
            }
        }
        Ok(())
    }

    fn ledger_user(&self, packet: usize) -> Result<usize> {
        self.ledger.packet_user(packet)
    }
}

fn scale(target_power: f64, power: f64) -> C64 {
    if power > 0.0 {
        C64::new((target_power / power).sqrt(), 0.0)
    } else {
        C64::new(0.0, 0.0)
    }
}
