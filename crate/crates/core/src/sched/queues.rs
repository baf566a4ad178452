//! Virtual queues and sub-message pairing queues.

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// How the virtual arrival of each user is set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arrival {
    /// Fixed arrival per frame.
    Constant(f64),
    /// Running-average per-frame sum rate divided by the number of users.
    RunningAverage,
}

/// Per-user weights `Q_m` driven by `Q <- max(Q + a - served, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueueState {
    pub q: Vec<f64>,
    pub arrival: Arrival,
    pub served_total: Vec<f64>,
    pub frames: u64,
}

impl VirtualQueueState {
    pub fn new(users: usize, arrival: Arrival) -> Result<Self> {
        if users == 0 {
            return Err(Error::Validation("no users".into()));
        }
        if let Arrival::Constant(a) = arrival {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Validation(format!("arrival {a} must be finite and non-negative")));
            }
        }
        Ok(VirtualQueueState {
            q: vec![1.0; users],
            arrival,
            served_total: vec![0.0; users],
            frames: 0,
        })
    }

    /// Arrival `a_m` that the next update will add.
    pub fn current_arrival(&self) -> f64 {
        match self.arrival {
            Arrival::Constant(a) => a,
            Arrival::RunningAverage => {
                if self.frames == 0 {
                    0.0
                } else {
                    self.served_total.iter().sum::<f64>() / (self.frames as f64 * self.q.len() as f64)
                }
            }
        }
    }

    /// Applies one frame of service.
    pub fn update(&mut self, served: &[f64]) -> Result<()> {
        if served.len() != self.q.len() {
            return Err(Error::Dimension(format!(
                "{} served rates for {} users",
                served.len(),
                self.q.len()
            )));
        }
        if let Some(bad) = served.iter().find(|s| s.is_nan() || **s < 0.0) {
            return Err(Error::Validation(format!("served rate {bad} is negative")));
        }
        for (t, s) in self.served_total.iter_mut().zip(served) {
            *t += s;
        }
        self.frames += 1;
        let a = self.current_arrival();
        for (q, s) in self.q.iter_mut().zip(served) {
            *q = (*q + a - s).max(0.0);
        }
        Ok(())
    }
}

/// FIFO lanes, one per member user, that release one item from every lane
/// at a time. With two members this is the degree-2 pairing queue, with
/// three the degree-3 combining queue.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingQueue<T> {
    members: Vec<usize>,
    lanes: Vec<VecDeque<T>>,
    enqueued: Vec<u64>,
    consumed: Vec<u64>,
}

impl<T> PairingQueue<T> {
    /// `members` must be distinct; they are stored sorted.
    pub fn new(members: &[usize]) -> Result<Self> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != members.len() || sorted.len() < 2 {
            return Err(Error::Usage(format!("invalid queue members {members:?}")));
        }
        let k = sorted.len();
        Ok(PairingQueue {
            members: sorted,
            lanes: (0..k).map(|_| VecDeque::new()).collect(),
            enqueued: vec![0; k],
            consumed: vec![0; k],
        })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    fn lane(&self, eavesdropper: usize) -> Result<usize> {
        self.members
            .iter()
            .position(|&m| m == eavesdropper)
            .ok_or_else(|| Error::Usage(format!("user {eavesdropper} has no lane in {:?}", self.members)))
    }

    /// Adds an observation made by `eavesdropper` to its lane.
    pub fn enqueue(&mut self, eavesdropper: usize, item: T) -> Result<()> {
        let i = self.lane(eavesdropper)?;
        self.lanes[i].push_back(item);
        self.enqueued[i] += 1;
        Ok(())
    }

    /// Pops the head of every lane, ordered like `members`, if none is empty.
    pub fn combine(&mut self) -> Option<Vec<T>> {
        if self.lanes.iter().any(|l| l.is_empty()) {
            return None;
        }
        for c in &mut self.consumed {
            *c += 1;
        }
        Some(self.lanes.iter_mut().map(|l| l.pop_front().expect("lane checked")).collect())
    }

    pub fn pending(&self, eavesdropper: usize) -> Result<usize> {
        Ok(self.lanes[self.lane(eavesdropper)?].len())
    }

    /// `(enqueued, consumed)` totals of a lane.
    pub fn counts(&self, eavesdropper: usize) -> Result<(u64, u64)> {
        let i = self.lane(eavesdropper)?;
        Ok((self.enqueued[i], self.consumed[i]))
    }
}
