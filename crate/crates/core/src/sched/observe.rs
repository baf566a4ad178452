//! Linear bookkeeping of multi-round transmissions.
//!
//! Every slot transmits, per antenna, a linear combination of data symbols
//! and of earlier (noisy) observations regenerated from CSIT. A user's
//! observation of a slot is `sum_a conj(h[a]) tx[a] + noise`. The rate of a
//! packet is the zero-forcing mutual information of all observations its user
//! holds that depend on the packet, with its own other observations used as
//! side information.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::linalg::zf_mutual_information_colored;
use crate::{CMatrix, C64};

/// Symbol appearing in a transmitted combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Data { packet: usize, dim: usize },
    Obs { user: usize, slot: usize },
}

#[derive(Debug, Clone, PartialEq)]
struct SlotRecord {
    /// Column `u` is the channel of user `u`.
    channels: CMatrix,
    tx: Vec<Vec<(Term, C64)>>,
    /// Packets whose data reaches this slot, sorted.
    depends: Vec<usize>,
    /// Packets of `depends` not yet evaluated.
    open: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct PacketRecord {
    user: usize,
    dims: usize,
    /// Slots carrying this packet's data, in creation order.
    slots: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Column {
    Desired(usize),
    Interference(Term),
    Noise { user: usize, slot: usize },
}

/// Slots and packets of a run, pruned as packets are evaluated.
#[derive(Debug, Clone, Default)]
pub struct ObservationLedger {
    slots: HashMap<usize, SlotRecord>,
    packets: HashMap<usize, PacketRecord>,
    next_slot: usize,
    next_packet: usize,
}

impl ObservationLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a packet of `dims` symbols for `user`; returns its id.
    pub fn new_packet(&mut self, user: usize, dims: usize) -> usize {
        let id = self.next_packet;
        self.next_packet += 1;
        self.packets.insert(
            id,
            PacketRecord {
                user,
                dims,
                slots: Vec::new(),
            },
        );
        id
    }

    /// Records a slot; `tx[a]` is the combination sent on antenna `a`.
    pub fn push_slot(&mut self, channels: CMatrix, tx: Vec<Vec<(Term, C64)>>) -> Result<usize> {
        if tx.len() > channels.nrows() {
            return Err(Error::Dimension(format!(
                "{} antennas driven, {} available",
                tx.len(),
                channels.nrows()
            )));
        }
        let mut depends = Vec::new();
        for (term, _) in tx.iter().flatten() {
            match *term {
                Term::Data { packet, dim } => {
                    let rec = self
                        .packets
                        .get(&packet)
                        .ok_or_else(|| Error::Usage(format!("packet {packet} is unknown or finished")))?;
                    if dim >= rec.dims {
                        return Err(Error::Dimension(format!("packet {packet} has no dimension {dim}")));
                    }
                    depends.push(packet);
                }
                Term::Obs { user, slot } => {
                    if user >= channels.ncols() {
                        return Err(Error::Usage(format!("user {user} out of range")));
                    }
                    let rec = self
                        .slots
                        .get(&slot)
                        .ok_or_else(|| Error::Usage(format!("slot {slot} is unknown or pruned")))?;
                    depends.extend_from_slice(&rec.depends);
                }
            }
        }
        depends.sort_unstable();
        depends.dedup();
        let id = self.next_slot;
        self.next_slot += 1;
        for p in &depends {
            self.packets.get_mut(p).expect("checked above").slots.push(id);
        }
        let open = depends.len();
        self.slots.insert(
            id,
            SlotRecord {
                channels,
                tx,
                depends,
                open,
            },
        );
        Ok(id)
    }

    /// Channels of a recorded slot.
    pub fn channels(&self, slot: usize) -> Result<&CMatrix> {
        self.slots
            .get(&slot)
            .map(|s| &s.channels)
            .ok_or_else(|| Error::Usage(format!("slot {slot} is unknown or pruned")))
    }

    /// Noise-free variance of `Obs{user, slot}` when every data symbol has
    /// variance `data_var`.
    pub fn observation_power(&self, user: usize, slot: usize, data_var: f64) -> Result<f64> {
        let rec = self
            .slots
            .get(&slot)
            .ok_or_else(|| Error::Usage(format!("slot {slot} is unknown or pruned")))?;
        let mut total = 0.0;
        for (a, combo) in rec.tx.iter().enumerate() {
            total += rec.channels[(a, user)].norm_sqr() * self.combination_power(combo, data_var)?;
        }
        Ok(total)
    }

    /// Noise-free variance of a combination of independent terms.
    pub fn combination_power(&self, combo: &[(Term, C64)], data_var: f64) -> Result<f64> {
        let mut total = 0.0;
        for (term, c) in combo {
            let v = match *term {
                Term::Data { .. } => data_var,
                Term::Obs { user, slot } => self.observation_power(user, slot, data_var)?,
            };
            total += c.norm_sqr() * v;
        }
        Ok(total)
    }

    pub fn packet_user(&self, packet: usize) -> Result<usize> {
        self.packets
            .get(&packet)
            .map(|p| p.user)
            .ok_or_else(|| Error::Usage(format!("packet {packet} is unknown or finished")))
    }

    /// Live slot count, for memory checks.
    pub fn live_slots(&self) -> usize {
        self.slots.len()
    }

    /// Mutual information of `packet` at its user and releases its records.
    pub fn finish_packet(&mut self, packet: usize, data_var: f64, noise_var: f64) -> Result<f64> {
        let mi = self.packet_information(packet, data_var, noise_var)?;
        let rec = self.packets.remove(&packet).expect("evaluated above");
        for s in rec.slots {
            let done = {
                let slot = self.slots.get_mut(&s).expect("slot outlives its packets");
                slot.open -= 1;
                slot.open == 0
            };
            if done {
                self.slots.remove(&s);
            }
        }
        Ok(mi)
    }

    /// Zero-forcing mutual information of `packet` without releasing it.
    pub fn packet_information(&self, packet: usize, data_var: f64, noise_var: f64) -> Result<f64> {
        let rec = self
            .packets
            .get(&packet)
            .ok_or_else(|| Error::Usage(format!("packet {packet} is unknown or finished")))?;
        let mut builder = RowBuilder {
            ledger: self,
            packet,
            user: rec.user,
            columns: Vec::new(),
            index: HashMap::new(),
            rows: Vec::new(),
            row_keys: Vec::new(),
        };
        for &s in &rec.slots {
            builder.add_row(s)?;
        }
        builder.assemble(rec.dims, data_var, noise_var)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum RowKey {
    Listen(usize),
    Known(usize),
}

struct RowBuilder<'a> {
    ledger: &'a ObservationLedger,
    packet: usize,
    user: usize,
    columns: Vec<Column>,
    index: HashMap<Column, usize>,
    rows: Vec<Vec<(usize, C64)>>,
    row_keys: Vec<RowKey>,
}

impl RowBuilder<'_> {
    fn column(&mut self, c: Column) -> usize {
        if let Some(&i) = self.index.get(&c) {
            return i;
        }
        let i = self.columns.len();
        self.columns.push(c);
        self.index.insert(c, i);
        i
    }

    fn add_row(&mut self, slot: usize) -> Result<()> {
        if self.row_keys.contains(&RowKey::Listen(slot)) {
            return Ok(());
        }
        self.row_keys.push(RowKey::Listen(slot));
        self.rows.push(Vec::new());
        let r = self.rows.len() - 1;
        self.expand_obs(r, self.user, slot, C64::new(1.0, 0.0))
    }

    fn add_known_row(&mut self, slot: usize) {
        if self.row_keys.contains(&RowKey::Known(slot)) {
            return;
        }
        let c = self.column(Column::Interference(Term::Obs { user: self.user, slot }));
        self.row_keys.push(RowKey::Known(slot));
        self.rows.push(vec![(c, C64::new(1.0, 0.0))]);
    }

    fn expand_obs(&mut self, row: usize, user: usize, slot: usize, coef: C64) -> Result<()> {
        let rec = self
            .ledger
            .slots
            .get(&slot)
            .ok_or_else(|| Error::Usage(format!("slot {slot} is unknown or pruned")))?;
        let noise = self.column(Column::Noise { user, slot });
        self.rows[row].push((noise, coef));
        for (a, combo) in rec.tx.iter().enumerate() {
            let gain = coef * rec.channels[(a, user)].conj();
            for &(term, c) in combo {
                self.expand_term(row, term, gain * c)?;
            }
        }
        Ok(())
    }

    fn expand_term(&mut self, row: usize, term: Term, coef: C64) -> Result<()> {
        match term {
            Term::Data { packet, dim } if packet == self.packet => {
                let c = self.column(Column::Desired(dim));
                self.rows[row].push((c, coef));
            }
            Term::Data { .. } => {
                let c = self.column(Column::Interference(term));
                self.rows[row].push((c, coef));
            }
            Term::Obs { user, slot } => {
                let depends = self
                    .ledger
                    .slots
                    .get(&slot)
                    .is_some_and(|s| s.depends.binary_search(&self.packet).is_ok());
                if depends {
                    if user == self.user {
                        self.add_row(slot)?;
                    }
                    self.expand_obs(row, user, slot, coef)?;
                } else {
                    let c = self.column(Column::Interference(term));
                    self.rows[row].push((c, coef));
                    if user == self.user {
                        self.add_known_row(slot);
                    }
                }
            }
        }
        Ok(())
    }

    fn assemble(self, dims: usize, data_var: f64, noise_var: f64) -> Result<f64> {
        let n = self.rows.len();
        let mut kinds = [0usize; 3];
        let mut position = vec![0usize; self.columns.len()];
        for (i, c) in self.columns.iter().enumerate() {
            let k = match c {
                Column::Desired(d) => {
                    position[i] = *d;
                    continue;
                }
                Column::Interference(_) => 1,
                Column::Noise { .. } => 2,
            };
            position[i] = kinds[k];
            kinds[k] += 1;
        }
        let mut d = CMatrix::zeros(n, dims);
        let mut g = CMatrix::zeros(n, kinds[1]);
        let mut z = CMatrix::zeros(n, kinds[2]);
        for (r, entries) in self.rows.iter().enumerate() {
            for &(c, v) in entries {
                let target = match self.columns[c] {
                    Column::Desired(_) => &mut d,
                    Column::Interference(_) => &mut g,
                    Column::Noise { .. } => &mut z,
                };
                target[(r, position[c])] += v;
            }
        }
        zf_mutual_information_colored(&d, &g, &z, data_var, noise_var)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::mutual_information;
    use crate::rng::substream;
    use crate::sched::objective::SessionGeometry;

    fn data_tx(packet: usize, dims: usize) -> Vec<Vec<(Term, C64)>> {
        (0..dims)
            .map(|d| vec![(Term::Data { packet, dim: d }, C64::new(1.0, 0.0))])
            .collect()
    }

    fn random_channels(m: usize, l: usize, rng: &mut crate::rng::SimRng) -> CMatrix {
        crate::channel::sample_iid(m, l, 0, rng).unwrap().entries().clone()
    }

    #[test]
    fn two_user_session_matches_closed_form() {
        let (p, n0) = (200.0, 1.0);
        for seed in 0..20 {
            let mut rng = substream(seed, 0x90, 0);
            let mut ledger = ObservationLedger::new();
            let a = ledger.new_packet(0, 2);
            let b = ledger.new_packet(1, 2);
            let h1 = random_channels(2, 2, &mut rng);
            let h2 = random_channels(2, 2, &mut rng);
            let h3 = random_channels(2, 2, &mut rng);
            let s1 = ledger.push_slot(h1.clone(), data_tx(a, 2)).unwrap();
            let s2 = ledger.push_slot(h2.clone(), data_tx(b, 2)).unwrap();
            let pa = ledger.observation_power(1, s1, p / 2.0).unwrap();
            let pb = ledger.observation_power(0, s2, p / 2.0).unwrap();
            let alpha = C64::new((p / (pa + pb)).sqrt(), 0.0);
            ledger
                .push_slot(
                    h3.clone(),
                    vec![vec![
                        (Term::Obs { user: 1, slot: s1 }, alpha),
                        (Term::Obs { user: 0, slot: s2 }, alpha),
                    ]],
                )
                .unwrap();
            let got = ledger.packet_information(a, p / 2.0, n0).unwrap();
            let g = SessionGeometry::new(&h1.column(0).into_owned(), &h1.column(1).into_owned(), &h2.column(0).into_owned()).unwrap();
            let want = g.rate_given_gain(h3[(0, 0)].norm_sqr(), p, n0, 2);
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn three_user_two_round_matches_closed_form() {
        let (p, n0) = (500.0, 1.0);
        let v = p / 3.0;
        for seed in 0..20 {
            let mut rng = substream(seed, 0x91, 0);
            let mut ledger = ObservationLedger::new();
            let x = ledger.new_packet(0, 3);
            let y = ledger.new_packet(1, 3);
            let z = ledger.new_packet(2, 3);
            let hx = random_channels(3, 3, &mut rng);
            let sx = ledger.push_slot(hx.clone(), data_tx(x, 3)).unwrap();
            let sy = ledger.push_slot(random_channels(3, 3, &mut rng), data_tx(y, 3)).unwrap();
            let sz = ledger.push_slot(random_channels(3, 3, &mut rng), data_tx(z, 3)).unwrap();
            let mut rows = vec![hx.column(0).adjoint()];
            let mut noise = vec![n0];
            for (eaves, other) in [(1, sy), (2, sz)] {
                let pa = ledger.observation_power(eaves, sx, v).unwrap();
                let pb = ledger.observation_power(0, other, v).unwrap();
                let alpha = (p / (pa + pb)).sqrt();
                let a = C64::new(alpha, 0.0);
                let h = random_channels(3, 3, &mut rng);
                let f = h[(0, 0)].conj();
                ledger
                    .push_slot(
                        h,
                        vec![vec![
                            (Term::Obs { user: eaves, slot: sx }, a),
                            (Term::Obs { user: 0, slot: other }, a),
                        ]],
                    )
                    .unwrap();
                rows.push(hx.column(eaves).adjoint() * (f * alpha));
                noise.push(n0 * (1.0 + f.norm_sqr() * alpha * alpha));
            }
            let heff = CMatrix::from_fn(3, 3, |r, c| rows[r][(0, c)]);
            let want = mutual_information(&heff, &noise, v).unwrap();
            let got = ledger.packet_information(x, v, n0).unwrap();
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn finishing_packets_prunes_slots() {
        let mut rng = substream(3, 0x92, 0);
        let mut ledger = ObservationLedger::new();
        let a = ledger.new_packet(0, 2);
        let b = ledger.new_packet(1, 2);
        let s1 = ledger.push_slot(random_channels(2, 2, &mut rng), data_tx(a, 2)).unwrap();
        let s2 = ledger.push_slot(random_channels(2, 2, &mut rng), data_tx(b, 2)).unwrap();
        let one = C64::new(1.0, 0.0);
        ledger
            .push_slot(
                random_channels(2, 2, &mut rng),
                vec![vec![(Term::Obs { user: 1, slot: s1 }, one), (Term::Obs { user: 0, slot: s2 }, one)]],
            )
            .unwrap();
        assert_eq!(ledger.live_slots(), 3);
        ledger.finish_packet(a, 1.0, 1.0).unwrap();
        assert_eq!(ledger.live_slots(), 2);
        // the other packet still evaluates after its partner's slot is gone
        assert!(ledger.packet_information(b, 1.0, 1.0).unwrap() > 0.0);
        ledger.finish_packet(b, 1.0, 1.0).unwrap();
        assert_eq!(ledger.live_slots(), 0);
        assert!(ledger.finish_packet(a, 1.0, 1.0).is_err());
    }

    #[test]
    fn unknown_terms_are_rejected() {
        let mut ledger = ObservationLedger::new();
        let one = C64::new(1.0, 0.0);
        let h = CMatrix::identity(2, 2);
        assert!(ledger
            .push_slot(h.clone(), vec![vec![(Term::Data { packet: 0, dim: 0 }, one)]])
            .is_err());
        let a = ledger.new_packet(0, 2);
        assert!(ledger
            .push_slot(h.clone(), vec![vec![(Term::Data { packet: a, dim: 2 }, one)]])
            .is_err());
        assert!(ledger.push_slot(h, vec![vec![(Term::Obs { user: 0, slot: 9 }, one)]]).is_err());
    }
}
