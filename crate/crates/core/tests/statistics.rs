//! Monte Carlo properties of the channel, MAT and LZFB models.

use mimo_retro::channel::{sample_iid, GaussMarkovModel};
use mimo_retro::csi::TrainingConfig;
use mimo_retro::lzfb::{sample_sum_rate, LzfbCsit};
use mimo_retro::mat::{perfect_sum_rate, sample_data, simulate_session, trained_sum_rate, MatSessionRecord, SessionChannels};
use mimo_retro::rng::substream;

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_err(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0) / v.len() as f64).sqrt()
}

#[test]
fn fresh_entries_have_zero_mean_unit_variance() {
    let mut rng = substream(1, 0x70, 0);
    let n = 100_000;
    let (mut sum, mut power) = (mimo_retro::C64::new(0.0, 0.0), 0.0);
    for t in 0..n {
        let x = sample_iid(1, 1, t, &mut rng).unwrap().entries()[(0, 0)];
        sum += x;
        power += x.norm_sqr();
    }
    assert!((sum / n as f64).norm() < 0.01);
    assert!((power / n as f64 - 1.0).abs() < 0.02);
}

#[test]
fn gauss_markov_is_stationary_with_power_law_correlation() {
    let model = GaussMarkovModel::new(0.9, 1, 1, 5).unwrap();
    let chains = 100_000;
    let delays = [1usize, 2, 5];
    let mut power_end = 0.0;
    let mut power_start = 0.0;
    let mut corr = [0.0; 3];
    for c in 0..chains {
        let traj = model.trajectory(c as u64 * 16, 6);
        let x0 = traj[0].entries()[(0, 0)];
        power_start += x0.norm_sqr();
        power_end += traj[5].entries()[(0, 0)].norm_sqr();
        for (acc, &d) in corr.iter_mut().zip(&delays) {
            *acc += (x0.conj() * traj[d].entries()[(0, 0)]).re;
        }
    }
    let n = chains as f64;
    assert!((power_end / n - 1.0).abs() < 0.02);
    for (acc, &d) in corr.iter().zip(&delays) {
        let est = acc / power_start;
        assert!((est - 0.9f64.powi(d as i32)).abs() < 0.01, "delay {d}: {est}");
    }
}

#[test]
fn every_slot_respects_the_power_constraint() {
    let p = db(20.0);
    let cfg = TrainingConfig::new(2.0, 2.0, p, p, 1.0, 2).unwrap();
    let mut rng = substream(2, 0x71, 0);
    let n = 100_000;
    let mut power = [[0.0; 3]; 2];
    for _ in 0..n {
        let ch = SessionChannels::sample(2, 0.5, &mut rng).unwrap();
        let records = [
            MatSessionRecord::perfect(ch.clone()),
            MatSessionRecord::trained(ch, cfg, &mut rng).unwrap(),
        ];
        for (acc, rec) in power.iter_mut().zip(&records) {
            let x1 = sample_data(2, p, &mut rng);
            let x2 = sample_data(2, p, &mut rng);
            let sig = simulate_session(rec, &x1, &x2, 1.0, &mut rng).unwrap();
            for (a, x) in acc.iter_mut().zip(&sig.transmitted) {
                *a += x.norm_squared();
            }
        }
    }
    for (mode, acc) in ["perfect", "trained"].iter().zip(&power) {
        for (t, a) in acc.iter().enumerate() {
            assert!(a / n as f64 <= p * 1.01, "{mode} slot {}: {}", t + 1, a / n as f64);
        }
    }
}

fn mat_rates(trained: bool, rho: f64, snr_db: f64, n: usize, seed: u64) -> Vec<f64> {
    let p = db(snr_db);
    let cfg = TrainingConfig::new(2.0, 2.0, p, p, 1.0, 2).unwrap();
    let mut rng = substream(seed, 0x72, 0);
    (0..n)
        .map(|_| {
            let ch = SessionChannels::sample(2, rho, &mut rng).unwrap();
            if trained {
                trained_sum_rate(&MatSessionRecord::trained(ch, cfg, &mut rng).unwrap(), p).unwrap()
            } else {
                perfect_sum_rate(&MatSessionRecord::perfect(ch), p, 1.0).unwrap()
            }
        })
        .collect()
}

#[test]
fn trained_mat_does_not_saturate() {
    for rho in [0.0, 0.99] {
        let gain = mean(&mat_rates(true, rho, 40.0, 20_000, 3)) - mean(&mat_rates(true, rho, 30.0, 20_000, 4));
        assert!(gain >= 3.5, "rho {rho}: gain {gain}");
    }
}

#[test]
fn trained_bound_below_perfect_rate_on_matched_sessions() {
    for snr in [0.0, 20.0, 40.0] {
        let p = db(snr);
        let cfg = TrainingConfig::new(2.0, 2.0, p, p, 1.0, 2).unwrap();
        let mut rng = substream(6, 0x73, snr as u64);
        let (mut perfect, mut trained) = (Vec::new(), Vec::new());
        for _ in 0..20_000 {
            let ch = SessionChannels::sample(2, 0.0, &mut rng).unwrap();
            perfect.push(perfect_sum_rate(&MatSessionRecord::perfect(ch.clone()), p, 1.0).unwrap());
            trained.push(trained_sum_rate(&MatSessionRecord::trained(ch, cfg, &mut rng).unwrap(), p).unwrap());
        }
        let diff: Vec<f64> = perfect.iter().zip(&trained).map(|(a, b)| a - b).collect();
        assert!(
            mean(&diff) > 3.0 * std_err(&diff),
            "{snr} dB: {} (se {})",
            mean(&diff),
            std_err(&diff)
        );
    }
}

#[test]
fn lzfb_rate_falls_with_csit_error() {
    let p = db(20.0);
    let mut last = f64::INFINITY;
    // Fewer pilot symbols means a larger BS error variance; the random
    // draws are shared across the grid.
    let mut prev_var = 0.0;
    for beta1 in [8.0, 4.0, 2.0, 1.0] {
        let cfg = TrainingConfig::new(beta1, 1.0, p, p, 1.0, 2).unwrap();
        assert!(cfg.sigma_e_sq() > prev_var);
        prev_var = cfg.sigma_e_sq();
        let mut rng = substream(7, 0x74, 0);
        let rates: Vec<f64> = (0..20_000)
            .map(|_| sample_sum_rate(2, 2, 1.0, &LzfbCsit::Trained(cfg), p, 1.0, &mut rng).unwrap())
            .collect();
        let m = mean(&rates);
        assert!(m <= last, "beta1 {beta1}: {m} > {last}");
        last = m;
    }
}

#[test]
fn trained_mat_overtakes_trained_lzfb_with_outdated_csit() {
    for rho in [0.99, 0.95] {
        let crossover = [0.0, 10.0, 20.0, 30.0, 40.0].into_iter().find(|&snr| {
            let p = db(snr);
            let cfg = TrainingConfig::new(2.0, 2.0, p, p, 1.0, 2).unwrap();
            let mut rng = substream(8, 0x75, snr as u64);
            let lzfb: Vec<f64> = (0..20_000)
                .map(|_| sample_sum_rate(2, 2, rho, &LzfbCsit::Trained(cfg), p, 1.0, &mut rng).unwrap())
                .collect();
            mean(&mat_rates(true, rho, snr, 20_000, 9)) > mean(&lzfb)
        });
        assert!(crossover.is_some(), "rho {rho}: MAT never overtakes LZFB");
    }
}
