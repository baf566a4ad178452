//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use mimo_retro::csi::{cross_estimate, downlink_train, feedback_to_bs, feedback_to_peer, TrainingConfig};
use mimo_retro::rng::{complex_normal, complex_normal_vector, mix, substream, tag};
use mimo_retro::sched::buffer::Round1Buffer;
use mimo_retro::sched::packet::packet_centric_select;
use mimo_retro::sched::queues::{Arrival, VirtualQueueState};
use mimo_retro::sched::session::{mat_session_schedule, SessionParams};
use mimo_retro::{CVector, C64};
use rand::Rng;

pub const N0: f64 = 1.0;

/// Scalar model `s = a h + v`, `g = c s + w` with unit-variance `h`.
/// Returns the LMMSE gain of `h` from `g` and its error variance.
pub fn relay_lmmse(a: f64, n0: f64, c: f64) -> (f64, f64) {
    let var_g = c * c * (a * a + n0) + n0;
    let cov_hg = c * a;
    (cov_hg / var_g, 1.0 - cov_hg * cov_hg / var_g)
}

pub struct Oracle {
    pub sigma1: f64,
    pub sigma_e: f64,
    pub sigma_f: f64,
    pub sigma_a: f64,
    pub sigma_b: f64,
}

pub fn oracle(cfg: &TrainingConfig) -> Oracle {
    let a = (cfg.beta1 * cfg.p).sqrt();
    let n0 = cfg.n0;
    let var_s = a * a + n0;
    let k_s = a / var_s;
    let hop = |power: f64| (cfg.beta_f * power / var_s).sqrt();
    let (c_bs, c_peer) = (hop(cfg.p), hop(cfg.p1));
    let (k_bs, sigma_e) = relay_lmmse(a, n0, c_bs);
    let (k_peer, sigma_f) = relay_lmmse(a, n0, c_peer);
    let gamma = cfg.beta_f * cfg.p / (cfg.beta_f * cfg.p + n0);
    // hat h = k_bs (c_bs s + w); the other estimate is linear in s (and an
    // independent feedback noise for the overheard one).
    let sigma_a = (k_bs * c_bs - gamma * k_s).powi(2) * var_s + k_bs * k_bs * n0;
    let sigma_b = (k_bs * c_bs - gamma * k_peer * c_peer).powi(2) * var_s + k_bs * k_bs * n0 + (gamma * k_peer).powi(2) * n0;
    Oracle {
        sigma1: 1.0 - a * a / var_s,
        sigma_e,
        sigma_f,
        sigma_a,
        sigma_b,
    }
}

pub fn configs() -> Vec<TrainingConfig> {
    [
        (0.0, 2.0, 2.0, 1.0),
        (7.5, 1.0, 3.0, 0.5),
        (10.0, 2.0, 2.0, 1.0),
        (20.0, 4.0, 1.0, 2.0),
        (30.0, 2.0, 2.0, 10.0),
    ]
    .iter()
    .map(|&(db, b1, bf, ratio)| {
        let p = 10f64.powf(db / 10.0);
        TrainingConfig::new(b1, bf, p, ratio * p, 1.0, 2).unwrap()
    })
    .collect()
}

pub struct Moments {
    pub err: [f64; 5],
    /// Real part of `(h - est) est^*` for the self and BS estimates.
    pub orth: [Vec<f64>; 2],
}

pub fn simulate(cfg: &TrainingConfig, trials: usize, seed: u64) -> Moments {
    let mut rng = substream(seed, 0x51, 0);
    let mut err = [0.0; 5];
    let mut orth = [Vec::with_capacity(trials * 2), Vec::with_capacity(trials * 2)];
    for t in 0..trials {
        let h = complex_normal_vector(&mut rng, cfg.antennas, 1.0);
        let (obs, own) = downlink_train(&h, t as u64, 0, cfg, &mut rng).unwrap();
        let bs = feedback_to_bs(&obs, cfg, &mut rng).unwrap();
        let peer = feedback_to_peer(&obs, 1, cfg, &mut rng).unwrap();
        let check_a = cross_estimate(&own, cfg).unwrap().estimate.vector;
        let check_b = cross_estimate(&peer, cfg).unwrap().estimate.vector;
        let diffs = [
            &h - &own.vector,
            &h - &bs.vector,
            &h - &peer.vector,
            &bs.vector - check_a,
            &bs.vector - check_b,
        ];
        for (acc, d) in err.iter_mut().zip(&diffs) {
            *acc += d.norm_squared();
        }
        let prod = |e: &C64, x: &C64| (e * x.conj()).re;
        orth[0].extend(diffs[0].iter().zip(own.vector.iter()).map(|(e, x)| prod(e, x)));
        orth[1].extend(diffs[1].iter().zip(bs.vector.iter()).map(|(e, x)| prod(e, x)));
    }
    let components = (trials * cfg.antennas) as f64;
    Moments {
        err: err.map(|e| e / components),
        orth,
    }
}

/// Exponential integral `E1(x)` by its power series (fine for `x <= 5`).
pub fn e1(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0;
    for k in 1..200 {
        term *= -x / k as f64;
        sum += term / k as f64;
    }
    -0.577_215_664_901_532_9 - x.ln() - sum
}

/// `E log2(1 + c X)` for `X ~ Gamma(2, 1)`:
/// `1 + (1 - 1/c) e^{1/c} E1(1/c)` nats.
pub fn fresh_rate_two_antennas(p: f64) -> f64 {
    let c = p / (2.0 * N0);
    (1.0 + (1.0 - 1.0 / c) * (1.0 / c).exp() * e1(1.0 / c)) / std::f64::consts::LN_2
}

/// `log2 det(I + K^-1 H H^H P/2)` for the 2 x 2 case, expanded by hand.
/// Rows of `H` are `r1^H`, `r2^H`; `k` is the diagonal noise covariance.
pub fn two_by_two_rate(r1: &CVector, r2: &CVector, k: [f64; 2], p: f64) -> f64 {
    let gram = |a: &CVector, b: &CVector| -> C64 { a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum() };
    let s = p / 2.0;
    let g11 = C64::new(1.0, 0.0) + gram(r1, r1) * s / k[0];
    let g22 = C64::new(1.0, 0.0) + gram(r2, r2) * s / k[1];
    let g12 = gram(r1, r2) * s / k[0];
    let g21 = gram(r2, r1) * s / k[1];
    (g11 * g22 - g12 * g21).re.log2()
}

/// Expected MAT rate of packet `(m, i)` finished by `(n, j)`, averaging the
/// same round-2 gain draws the scheduler uses.
pub fn oracle_expected_rate(buf: &Round1Buffer, m: usize, i: usize, n: usize, j: usize, params: &SessionParams) -> f64 {
    let a = buf.entry(m, i).unwrap();
    let b = buf.entry(n, j).unwrap();
    let own = a.channel_of(m);
    let eaves = a.channel_of(n);
    let partner = b.channel_of(m);
    let alpha_sq = 2.0 / (eaves.norm_squared() + partner.norm_squared());
    let mut rng = substream(params.seed, tag::SCHED_EXPECTATION, mix(&[a.uid, b.uid]));
    let mut total = 0.0;
    for _ in 0..params.f_samples {
        let f = complex_normal(&mut rng, 1.0);
        let gain = alpha_sq.sqrt() * f;
        let row2 = eaves.map(|x| x * gain);
        total += two_by_two_rate(&own, &row2, [N0, N0 * (1.0 + gain.norm_sqr())], params.p);
    }
    total / params.f_samples as f64
}

pub fn oracle_session(buf: &Round1Buffer, q: &[f64], params: &SessionParams) -> (usize, usize, usize, usize, f64) {
    let fresh = fresh_rate_two_antennas(params.p);
    let own_rate = |m: usize, i: usize| (1.0 + params.p / 2.0 * buf.entry(m, i).unwrap().channel_of(m).norm_squared()).log2();
    let mut best = (0, 0, 0, 0, f64::NEG_INFINITY);
    for m in 0..buf.users() {
        for i in 0..buf.per_user() {
            for n in m + 1..buf.users() {
                for j in 0..buf.per_user() {
                    let gain_m = oracle_expected_rate(buf, m, i, n, j, params) - own_rate(m, i) + fresh;
                    let gain_n = oracle_expected_rate(buf, n, j, m, i, params) - own_rate(n, j) + fresh;
                    let v = q[m] * gain_m + q[n] * gain_n;
                    if v > best.4 {
                        best = (m, i, n, j, v);
                    }
                }
            }
        }
    }
    best
}

pub fn oracle_packet(buf: &Round1Buffer, m: usize, i: usize, p: f64) -> usize {
    let e = buf.entry(m, i).unwrap();
    let own = e.channel_of(m);
    let mut best = (usize::MAX, f64::NEG_INFINITY);
    for n in 0..buf.users() {
        if n == m {
            continue;
        }
        let h = e.channel_of(n);
        let scaled = h.map(|x| x / (1.0 + h.norm_squared()).sqrt());
        let v = two_by_two_rate(&own, &scaled, [N0, N0], p);
        if v > best.1 {
            best = (n, v);
        }
    }
    best.0
}

/// Runs both selections on `instances` random buffers with `L <= 5`,
/// `N <= 2` and compares them with the oracles. Returns the number of
/// session and packet decisions checked.
pub fn check_random_instances(instances: u64, seed: u64) -> Result<(usize, usize), String> {
    let mut rng = substream(seed, 0x60, 0);
    let mut session_checked = 0;
    let mut packet_checked = 0;
    for inst in 0..instances {
        let users = rng.random_range(2..=5);
        let per_user = rng.random_range(1..=2);
        let p = 10f64.powf(rng.random_range(0..=4) as f64);
        let buf = Round1Buffer::filled(users, per_user, 2, p, N0, &mut rng).unwrap();
        let mut queues = VirtualQueueState::new(users, Arrival::RunningAverage).unwrap();
        for q in queues.q.iter_mut() {
            *q = rng.random_range(0.5..3.0);
        }
        let params = SessionParams {
            p,
            n0: N0,
            f_samples: 40,
            seed: inst,
        };

        let got = mat_session_schedule(&buf, &queues, &params).unwrap();
        let want = oracle_session(&buf, &queues.q, &params);
        if (got.m, got.i, got.n, got.j) != (want.0, want.1, want.2, want.3) {
            return Err(format!(
                "instance {inst}: scheduler {:?}, oracle {want:?}",
                (got.m, got.i, got.n, got.j)
            ));
        }
        if (got.value - want.4).abs() > 1e-8 * want.4.abs().max(1.0) {
            return Err(format!("instance {inst}: value {} vs {}", got.value, want.4));
        }
        session_checked += 1;

        for m in 0..users {
            for i in 0..per_user {
                let (got, want) = (packet_centric_select(m, i, &buf, p, N0).unwrap(), oracle_packet(&buf, m, i, p));
                if got != want {
                    return Err(format!("instance {inst} packet ({m},{i}): {got} vs {want}"));
                }
                packet_checked += 1;
            }
        }
    }
    Ok((session_checked, packet_checked))
}
