//! Max-weight scheduler over two-user MAT sessions.

use rand::Rng;

use crate::error::Result;
use crate::rng::{complex_normal, mix, substream, tag};
use crate::sched::buffer::Round1Buffer;
use crate::sched::objective::{expected_session_rate, fresh_packet_rate, SessionGeometry};
use crate::sched::queues::VirtualQueueState;

/// Chosen session: packet `i` of user `m` with packet `j` of user `n`, `m < n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub m: usize,
    pub i: usize,
    pub n: usize,
    pub j: usize,
    pub value: f64,
}

/// Parameters shared by every scheduling decision of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionParams {
    pub p: f64,
    pub n0: f64,
    pub f_samples: usize,
    /// Seed of the expectation streams; each ordered packet pair has its own.
    pub seed: u64,
}

/// Geometry of the session `(m,i)` with `(n,j)` from user `m`'s side.
pub fn session_geometry(buffer: &Round1Buffer, m: usize, i: usize, n: usize, j: usize) -> Result<SessionGeometry> {
    let a = buffer.entry(m, i)?;
    let b = buffer.entry(n, j)?;
    SessionGeometry::new(&a.channel_of(m), &a.channel_of(n), &b.channel_of(m))
}

/// `R_bar_{m,i}(n,j)`, with `f` drawn from the stream of the packet pair.
pub fn expected_rate(buffer: &Round1Buffer, m: usize, i: usize, n: usize, j: usize, params: &SessionParams) -> Result<f64> {
    let g = session_geometry(buffer, m, i, n, j)?;
    let (ua, ub) = (buffer.entry(m, i)?.uid, buffer.entry(n, j)?.uid);
    let mut rng = substream(params.seed, tag::SCHED_EXPECTATION, mix(&[ua, ub]));
    expected_session_rate(&g, params.p, params.n0, buffer.antennas(), params.f_samples, &mut rng)
}

/// Queue-weighted rate increase `Q (R_bar - R + R_bar_fresh)` of one packet.
fn weighted_gain(q: f64, expected: f64, own: f64, fresh: f64) -> f64 {
    q * (expected - own + fresh)
}

/// Exhaustive max-weight choice over `m < n` and all buffered packets.
/// Ties go to the lexicographically smallest `(m, i, n, j)`.
pub fn mat_session_schedule(buffer: &Round1Buffer, queues: &VirtualQueueState, params: &SessionParams) -> Result<Selection> {
    let fresh = fresh_packet_rate(buffer.antennas(), params.p, params.n0);
    let (l, nb) = (buffer.users(), buffer.per_user());
    let mut best: Option<Selection> = None;
    for m in 0..l {
        for i in 0..nb {
            for n in m + 1..l {
                for j in 0..nb {
                    let r_mn = expected_rate(buffer, m, i, n, j, params)?;
                    let r_nm = expected_rate(buffer, n, j, m, i, params)?;
                    let own_m = buffer.entry(m, i)?.own_rate;
                    let own_n = buffer.entry(n, j)?.own_rate;
                    let value = weighted_gain(queues.q[m], r_mn, own_m, fresh) + weighted_gain(queues.q[n], r_nm, own_n, fresh);
                    if best.is_none_or(|b| value > b.value) {
                        best = Some(Selection { m, i, n, j, value });
                    }
                }
            }
        }
    }
    Ok(best.expect("buffer has at least two users"))
}

/// Realized outcome of one scheduled frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub selection: Selection,
    /// Mutual information delivered to every user in this frame.
    pub served: Vec<f64>,
    /// Slots spent: one round-2 slot plus two fresh round-1 slots.
    pub slots: u64,
}

impl FrameOutcome {
    pub fn sum_rate(&self) -> f64 {
        self.served.iter().sum::<f64>() / self.slots as f64
    }
}

/// Stateful MAT-session scheduler. Expectations of every ordered pair of
/// buffered packets are kept in a dense table and recomputed only for the
/// packets replaced by a frame.
#[derive(Debug, Clone)]
pub struct MatSessionScheduler {
    pub buffer: Round1Buffer,
    pub queues: VirtualQueueState,
    params: SessionParams,
    fresh_rate: f64,
    /// `table[a * size + b]` = `R_bar` of packet `a` completed with packet
    /// `b`, where `a = m * N + i`.
    table: Vec<f64>,
}

impl MatSessionScheduler {
    pub fn new(buffer: Round1Buffer, queues: VirtualQueueState, params: SessionParams) -> Result<Self> {
        let fresh_rate = fresh_packet_rate(buffer.antennas(), params.p, params.n0);
        let size = buffer.users() * buffer.per_user();
        let mut s = MatSessionScheduler {
            buffer,
            queues,
            params,
            fresh_rate,
            table: vec![0.0; size * size],
        };
        for a in 0..size {
            s.refresh(a, false)?;
        }
        Ok(s)
    }

    pub fn params(&self) -> &SessionParams {
        &self.params
    }

    fn split(&self, a: usize) -> (usize, usize) {
        (a / self.buffer.per_user(), a % self.buffer.per_user())
    }

    /// Recomputes row `a` and, if `column`, column `a` of the table.
    fn refresh(&mut self, a: usize, column: bool) -> Result<()> {
        let size = self.buffer.users() * self.buffer.per_user();
        let (m, i) = self.split(a);
        for b in 0..size {
            let (n, j) = self.split(b);
            if n == m {
                continue;
            }
            self.table[a * size + b] = expected_rate(&self.buffer, m, i, n, j, &self.params)?;
            if column {
                self.table[b * size + a] = expected_rate(&self.buffer, n, j, m, i, &self.params)?;
            }
        }
        Ok(())
    }

    /// Same decision as [`mat_session_schedule`].
    pub fn schedule(&self) -> Result<Selection> {
        let (l, nb) = (self.buffer.users(), self.buffer.per_user());
        let size = l * nb;
        let own: Vec<f64> = (0..size)
            .map(|a| {
                let (m, i) = self.split(a);
                self.buffer.entry(m, i).map(|e| e.own_rate)
            })
            .collect::<Result<_>>()?;
        let mut best: Option<Selection> = None;
        for a in 0..size {
            let (m, i) = self.split(a);
            for b in (m + 1) * nb..size {
                let (n, j) = self.split(b);
                let value = weighted_gain(self.queues.q[m], self.table[a * size + b], own[a], self.fresh_rate)
                    + weighted_gain(self.queues.q[n], self.table[b * size + a], own[b], self.fresh_rate);
                if best.is_none_or(|s| value > s.value) {
                    best = Some(Selection { m, i, n, j, value });
                }
            }
        }
        Ok(best.expect("buffer has at least two users"))
    }

    /// Schedules, transmits the round-2 slot with fresh gains `f`, refills
    /// the two served buffers and updates the virtual queues.
    pub fn run_frame<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<FrameOutcome> {
        let sel = self.schedule()?;
        let (p, n0, m_ant) = (self.params.p, self.params.n0, self.buffer.antennas());
        let g_m = session_geometry(&self.buffer, sel.m, sel.i, sel.n, sel.j)?;
        let g_n = session_geometry(&self.buffer, sel.n, sel.j, sel.m, sel.i)?;
        let f_m = complex_normal(rng, 1.0).norm_sqr();
        let f_n = complex_normal(rng, 1.0).norm_sqr();
        let mut served = vec![0.0; self.buffer.users()];
        served[sel.m] = g_m.rate_given_gain(f_m, p, n0, m_ant);
        served[sel.n] = g_n.rate_given_gain(f_n, p, n0, m_ant);
        self.buffer.replace(sel.m, sel.i, rng)?;
        self.buffer.replace(sel.n, sel.j, rng)?;
        let nb = self.buffer.per_user();
        self.refresh(sel.m * nb + sel.i, true)?;
        self.refresh(sel.n * nb + sel.j, true)?;
        self.queues.update(&served)?;
        Ok(FrameOutcome {
            selection: sel,
            served,
            slots: 3,
        })
    }
}
