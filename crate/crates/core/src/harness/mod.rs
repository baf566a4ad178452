//! Experiment driver: SNR sweeps, Monte Carlo orchestration and output.

pub mod config;
pub mod output;
pub mod stats;

use rayon::prelude::*;
use serde::Serialize;

use crate::csi::TrainingConfig;
use crate::error::{Error, Result};
use crate::lzfb::{sample_sum_rate, LzfbCsit};
use crate::mat::{perfect_sum_rate, trained_sum_rate, MatSessionRecord, SessionChannels};
use crate::rng::{mix, substream, tag};
use crate::sched::queues::Arrival;
use crate::sched::{simulate, SchedMode, SchedulerSetup};
use config::{ExperimentConfig, Scheme};
use stats::summarize;

/// Noise power; SNR is swept through the transmit power `P`.
pub const N0: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub snr_db: f64,
    /// Mean sum rate in bits per channel use.
    pub mean_rate: f64,
    pub ci95: Option<f64>,
    pub samples: usize,
}

/// Rate versus SNR of one scheme at one correlation value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub scheme: String,
    pub rho: f64,
    /// Sorted by SNR.
    pub points: Vec<CurvePoint>,
    pub fingerprint: String,
}

impl RateCurve {
    pub fn point(&self, snr_db: f64) -> Result<&CurvePoint> {
        self.points
            .iter()
            .find(|p| (p.snr_db - snr_db).abs() < 1e-9)
            .ok_or_else(|| Error::Lookup(format!("{} dB is not on the grid of {}", snr_db, self.scheme)))
    }
}

pub fn snr_to_power(snr_db: f64) -> f64 {
    N0 * 10f64.powf(snr_db / 10.0)
}

/// Empirical pre-log `(R(hi) - R(lo)) / log2(P_hi / P_lo)`.
pub fn measure_dof(curve: &RateCurve, snr_lo_db: f64, snr_hi_db: f64) -> Result<f64> {
    if snr_hi_db <= snr_lo_db {
        return Err(Error::Usage(format!("need hi > lo, got {snr_lo_db} and {snr_hi_db}")));
    }
    let lo = curve.point(snr_lo_db)?;
    let hi = curve.point(snr_hi_db)?;
    Ok((hi.mean_rate - lo.mean_rate) / ((snr_hi_db - snr_lo_db) / 10.0 * 10f64.log2()))
}

/// Per-sample sum rates of one `(scheme, rho, snr)` point.
pub fn point_samples(cfg: &ExperimentConfig, scheme: Scheme, rho: f64, snr_db: f64, seed: u64) -> Result<Vec<f64>> {
    let p = snr_to_power(snr_db);
    if !p.is_finite() {
        return Err(Error::Numeric(format!("{snr_db} dB overflows the transmit power")));
    }
    let rho_eff = rho.powi(cfg.slot_gap as i32);
    let training = || TrainingConfig::new(cfg.beta1, cfg.beta_f, p, p * cfg.p1_over_p, N0, 2);
    let n = cfg.samples;
    match scheme {
        Scheme::MatPerfect | Scheme::MatTrained => {
            let mut rng = substream(seed, tag::MAT_SESSION, 0);
            let train = if scheme == Scheme::MatTrained { Some(training()?) } else { None };
            (0..n)
                .map(|_| {
                    let ch = SessionChannels::sample(2, rho_eff, &mut rng)?;
                    match train {
                        None => perfect_sum_rate(&MatSessionRecord::perfect(ch), p, N0),
                        Some(t) => trained_sum_rate(&MatSessionRecord::trained(ch, t, &mut rng)?, p),
                    }
                })
                .collect()
        }
        Scheme::LzfbPerfect | Scheme::LzfbTrained => {
            let mut rng = substream(seed, tag::LZFB, 0);
            let csit = if scheme == Scheme::LzfbTrained {
                LzfbCsit::Trained(training()?)
            } else {
                LzfbCsit::Perfect
            };
            (0..n).map(|_| sample_sum_rate(2, 2, rho_eff, &csit, p, N0, &mut rng)).collect()
        }
        _ => {
            let (mode, users) = match scheme {
                Scheme::SchedMatSession => (SchedMode::MatSession, cfg.users),
                Scheme::SchedPacket2u => (SchedMode::PacketCentric2u, cfg.users),
                Scheme::SchedPacket3u2r => (SchedMode::PacketCentric3u2r, cfg.users),
                Scheme::SchedPacket3u3r => (SchedMode::PacketCentric3u3r, cfg.users),
                Scheme::Unsched2u => (SchedMode::PacketCentric2u, 2),
                Scheme::Unsched3u2r => (SchedMode::PacketCentric3u2r, 3),
                _ => (SchedMode::PacketCentric3u3r, 3),
            };
            let setup = SchedulerSetup {
                mode,
                users,
                buffer: cfg.buffer,
                p,
                n0: N0,
                f_samples: cfg.f_samples,
                arrival: cfg.arrival.map_or(Arrival::RunningAverage, Arrival::Constant),
                seed,
            };
            simulate(&setup, n)
        }
    }
}

fn scheme_code(s: Scheme) -> u64 {
    Scheme::ALL.iter().position(|x| *x == s).expect("listed") as u64
}

/// Runs every curve of `cfg` on a pool of `workers` threads. Each point has
/// its own random stream, so the output does not depend on `workers`.
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<RateCurve>> {
    cfg.validate()?;
    let fingerprint = cfg.fingerprint();
    let schemes = cfg.scheme_list();
    let mut jobs = Vec::new();
    let curves: Vec<(Scheme, f64)> = schemes.iter().flat_map(|&s| cfg.rho_list.iter().map(move |&r| (s, r))).collect();
    for (c, &(scheme, rho)) in curves.iter().enumerate() {
        for (k, &snr) in cfg.snr_grid_db.iter().enumerate() {
            let seed = mix(&[cfg.seed, scheme_code(scheme), rho.to_bits(), k as u64]);
            jobs.push((c, scheme, rho, snr, seed));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("thread pool: {e}")))?;
    let results: Vec<Result<CurvePoint>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(_, scheme, rho, snr, seed)| {
                let values = point_samples(cfg, scheme, rho, snr, seed)?;
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Numeric(format!("{} at {snr} dB produced {bad}", scheme.label())));
                }
                let s = summarize(&values);
                Ok(CurvePoint {
                    snr_db: snr,
                    mean_rate: s.mean,
                    ci95: s.ci95,
                    samples: s.samples,
                })
            })
            .collect()
    });
    let mut out: Vec<RateCurve> = curves
        .iter()
        .map(|&(scheme, rho)| RateCurve {
            scheme: scheme.label().to_string(),
            rho,
            points: Vec::with_capacity(cfg.snr_grid_db.len()),
            fingerprint: fingerprint.clone(),
        })
        .collect();
    for (job, point) in jobs.iter().zip(results) {
        out[job.0].points.push(point?);
    }
    Ok(out)
}
