//! Fixed-size buffer of round-1 packets awaiting their round-2 slot.

use rand::Rng;

use crate::channel::sample_iid;
use crate::error::{Error, Result};
use crate::sched::objective::round1_rate;
use crate::{CMatrix, CVector};

/// One buffered round-1 packet.
#[derive(Debug, Clone, PartialEq)]
pub struct BufferEntry {
    /// Unique over the lifetime of the buffer.
    pub uid: u64,
    pub slot: u64,
    /// Channels of all users in the packet's round-1 slot (column = user).
    pub channels: CMatrix,
    /// Round-1-only rate of the intended user.
    pub own_rate: f64,
}

impl BufferEntry {
    pub fn channel_of(&self, user: usize) -> CVector {
        self.channels.column(user).into_owned()
    }
}

/// `N` round-1 packets per user with CSI of every user on each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Round1Buffer {
    users: usize,
    antennas: usize,
    entries: Vec<Vec<BufferEntry>>,
    next_uid: u64,
    p: f64,
    n0: f64,
}

impl Round1Buffer {
    /// Fills every user's buffer with `per_user` fresh packets.
    pub fn filled<R: Rng + ?Sized>(users: usize, per_user: usize, antennas: usize, p: f64, n0: f64, rng: &mut R) -> Result<Self> {
        if users < 2 || per_user == 0 || antennas == 0 {
            return Err(Error::Validation(format!(
                "buffer needs L >= 2, N >= 1, M >= 1 (got L={users}, N={per_user}, M={antennas})"
            )));
        }
        let mut buf = Round1Buffer {
            users,
            antennas,
            entries: Vec::with_capacity(users),
            next_uid: 0,
            p,
            n0,
        };
        for m in 0..users {
            let mut row = Vec::with_capacity(per_user);
            for _ in 0..per_user {
                row.push(buf.fresh(m, rng)?);
            }
            buf.entries.push(row);
        }
        Ok(buf)
    }

    /// Builds a buffer from explicit entries; `entries[m]` are user `m`'s.
    pub fn from_entries(entries: Vec<Vec<BufferEntry>>, p: f64, n0: f64) -> Result<Self> {
        let users = entries.len();
        let per_user = entries.first().map_or(0, |e| e.len());
        if users < 2 || per_user == 0 || entries.iter().any(|e| e.len() != per_user) {
            return Err(Error::Validation("every user needs the same non-zero number of packets".into()));
        }
        let antennas = entries[0][0].channels.nrows();
        if entries
            .iter()
            .flatten()
            .any(|e| e.channels.nrows() != antennas || e.channels.ncols() != users)
        {
            return Err(Error::Dimension(format!("entries must hold {antennas}x{users} channels")));
        }
        let next_uid = entries.iter().flatten().map(|e| e.uid + 1).max().unwrap_or(0);
        Ok(Round1Buffer {
            users,
            antennas,
            entries,
            next_uid,
            p,
            n0,
        })
    }

    fn fresh<R: Rng + ?Sized>(&mut self, user: usize, rng: &mut R) -> Result<BufferEntry> {
        let users = self.users;
        let uid = self.next_uid;
        self.next_uid += 1;
        let h = sample_iid(self.antennas, users, uid, rng)?;
        let channels = h.entries().clone();
        let own_rate = round1_rate(&channels.column(user).into_owned(), self.p, self.n0);
        Ok(BufferEntry {
            uid,
            slot: uid,
            channels,
            own_rate,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn per_user(&self) -> usize {
        self.entries[0].len()
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn entry(&self, user: usize, index: usize) -> Result<&BufferEntry> {
        self.entries
            .get(user)
            .and_then(|e| e.get(index))
            .ok_or_else(|| Error::Usage(format!("no buffered packet ({user}, {index})")))
    }

    /// Replaces packet `(user, index)` by a fresh round-1 packet and returns
    /// the uid that left the buffer.
    pub fn replace<R: Rng + ?Sized>(&mut self, user: usize, index: usize, rng: &mut R) -> Result<u64> {
        let old = self.entry(user, index)?.uid;
        let fresh = self.fresh(user, rng)?;
        self.entries[user][index] = fresh;
        Ok(old)
    }
}
