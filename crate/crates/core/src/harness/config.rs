//! Experiment configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mat::slot_accounting;

/// Named experiment presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    /// MAT against LZFB with training and feedback, swept over `rho`.
    Fig3MatVsLzfb,
    /// MAT-session scheduler against the two-user packet-centric one.
    Fig2SchedParity,
    /// Scheduled and unscheduled packet-centric modes.
    Fig4SchedModes,
    /// Schemes listed explicitly in `schemes`.
    Custom,
}

impl ExperimentId {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::Fig3MatVsLzfb => "fig3_mat_vs_lzfb",
            ExperimentId::Fig2SchedParity => "fig2_sched_parity",
            ExperimentId::Fig4SchedModes => "fig4_sched_modes",
            ExperimentId::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::config("experiment", format!("unknown experiment `{s}`")))
    }
}

/// A curve family. Scheduled schemes use `L` users; unscheduled ones are the
/// same schemes with `L = K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    MatPerfect,
    MatTrained,
    LzfbPerfect,
    LzfbTrained,
    SchedMatSession,
    #[serde(rename = "sched_packet_2u")]
    SchedPacket2u,
    #[serde(rename = "sched_packet_3u2r")]
    SchedPacket3u2r,
    #[serde(rename = "sched_packet_3u3r")]
    SchedPacket3u3r,
    #[serde(rename = "unsched_2u")]
    Unsched2u,
    #[serde(rename = "unsched_3u2r")]
    Unsched3u2r,
    #[serde(rename = "unsched_3u3r")]
    Unsched3u3r,
}

impl Scheme {
    pub const ALL: [Scheme; 11] = [
        Scheme::MatPerfect,
        Scheme::MatTrained,
        Scheme::LzfbPerfect,
        Scheme::LzfbTrained,
        Scheme::SchedMatSession,
        Scheme::SchedPacket2u,
        Scheme::SchedPacket3u2r,
        Scheme::SchedPacket3u3r,
        Scheme::Unsched2u,
        Scheme::Unsched3u2r,
        Scheme::Unsched3u3r,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Scheme::MatPerfect => "mat_perfect",
            Scheme::MatTrained => "mat_trained",
            Scheme::LzfbPerfect => "lzfb_perfect",
            Scheme::LzfbTrained => "lzfb_trained",
            Scheme::SchedMatSession => "sched_mat_session",
            Scheme::SchedPacket2u => "sched_packet_2u",
            Scheme::SchedPacket3u2r => "sched_packet_3u2r",
            Scheme::SchedPacket3u3r => "sched_packet_3u3r",
            Scheme::Unsched2u => "unsched_2u",
            Scheme::Unsched3u2r => "unsched_3u2r",
            Scheme::Unsched3u3r => "unsched_3u3r",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        Scheme::ALL.into_iter().find(|x| x.label() == s)
    }

    /// Users served per message set.
    pub fn group_size(self) -> usize {
        match self {
            Scheme::SchedPacket3u2r | Scheme::SchedPacket3u3r | Scheme::Unsched3u2r | Scheme::Unsched3u3r => 3,
            _ => 2,
        }
    }

    pub fn uses_rho(self) -> bool {
        matches!(
            self,
            Scheme::MatPerfect | Scheme::MatTrained | Scheme::LzfbPerfect | Scheme::LzfbTrained
        )
    }
}

fn default_grid() -> Vec<f64> {
    (0..=8).map(|k| 5.0 * k as f64).collect()
}

fn default_slot_gap() -> u32 {
    1
}

/// Everything that determines a run. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    #[serde(rename = "snr_grid_dB", default = "default_grid")]
    pub snr_grid_db: Vec<f64>,
    pub rho_list: Vec<f64>,
    pub beta1: f64,
    pub beta_f: f64,
    #[serde(rename = "P1_over_P")]
    pub p1_over_p: f64,
    #[serde(rename = "L")]
    pub users: usize,
    /// Round-1 packets buffered per user by the MAT-session scheduler.
    #[serde(rename = "N")]
    pub buffer: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "R")]
    pub rounds: usize,
    pub samples: usize,
    pub f_samples: usize,
    pub seed: u64,
    /// Slots between CSI acquisition and its use; the per-slot correlation
    /// in `rho_list` is raised to this power.
    #[serde(default = "default_slot_gap")]
    pub slot_gap: u32,
    /// Curves to produce; required for `custom`, optional otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<Scheme>>,
    /// Constant virtual arrival per frame; running average when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arrival: Option<f64>,
}

impl ExperimentConfig {
    /// Default configuration of a named experiment.
    pub fn preset(id: ExperimentId) -> Self {
        let base = ExperimentConfig {
            experiment: id,
            snr_grid_db: default_grid(),
            rho_list: vec![1.0],
            beta1: 2.0,
            beta_f: 2.0,
            p1_over_p: 1.0,
            users: 2,
            buffer: 1,
            k: 2,
            rounds: 2,
            samples: 4000,
            f_samples: 200,
            seed: 1,
            slot_gap: 1,
            schemes: None,
            arrival: None,
        };
        match id {
            ExperimentId::Fig3MatVsLzfb => ExperimentConfig {
                rho_list: vec![1.0, 0.99, 0.95],
                samples: 100_000,
                ..base
            },
            ExperimentId::Fig2SchedParity => ExperimentConfig {
                users: 20,
                buffer: 8,
                ..base
            },
            ExperimentId::Fig4SchedModes => ExperimentConfig {
                users: 20,
                k: 3,
                rounds: 3,
                samples: 20_000,
                ..base
            },
            ExperimentId::Custom => ExperimentConfig {
                schemes: Some(vec![Scheme::MatPerfect]),
                ..base
            },
        }
    }

    /// Parses JSON, or TOML when the path ends in `.toml`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let cfg = if is_toml {
            Self::from_toml(&text)?
        } else {
            Self::from_json(&text)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<json>", e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<toml>", e.message().to_string()))
    }

    /// Curves produced by this configuration.
    pub fn scheme_list(&self) -> Vec<Scheme> {
        if let Some(s) = &self.schemes {
            return s.clone();
        }
        match self.experiment {
            ExperimentId::Fig3MatVsLzfb => vec![Scheme::MatPerfect, Scheme::MatTrained, Scheme::LzfbPerfect, Scheme::LzfbTrained],
            ExperimentId::Fig2SchedParity => vec![Scheme::SchedMatSession, Scheme::SchedPacket2u],
            ExperimentId::Fig4SchedModes => vec![
                Scheme::SchedPacket2u,
                Scheme::SchedPacket3u2r,
                Scheme::SchedPacket3u3r,
                Scheme::Unsched2u,
                Scheme::Unsched3u2r,
                Scheme::Unsched3u3r,
            ],
            ExperimentId::Custom => Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_grid_db.is_empty() {
            return Err(Error::config("snr_grid_dB", "grid is empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::config("snr_grid_dB", "values must be finite"));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("snr_grid_dB", "values must be strictly increasing"));
        }
        if self.rho_list.is_empty() {
            return Err(Error::config("rho_list", "list is empty"));
        }
        if let Some(r) = self.rho_list.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::config("rho_list", format!("{r} outside [0, 1]")));
        }
        for (name, v) in [("beta1", self.beta1), ("beta_f", self.beta_f), ("P1_over_P", self.p1_over_p)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(name, format!("{v} must be positive and finite")));
            }
        }
        if self.samples == 0 {
            return Err(Error::config("samples", "must be at least 1"));
        }
        if self.f_samples == 0 {
            return Err(Error::config("f_samples", "must be at least 1"));
        }
        if self.buffer == 0 {
            return Err(Error::config("N", "must be at least 1"));
        }
        if self.slot_gap == 0 {
            return Err(Error::config("slot_gap", "must be at least 1"));
        }
        if self.k < 2 || self.k > self.users {
            return Err(Error::config(
                "K",
                format!("need 2 <= K <= L, got K = {}, L = {}", self.k, self.users),
            ));
        }
        if self.rounds < 2 || self.rounds > self.k {
            return Err(Error::config("R", format!("need 2 <= R <= K, got R = {}", self.rounds)));
        }
        let q: u64 = (1..=self.k as u64).product();
        slot_accounting(self.k as u64, self.rounds as u64, q).map_err(|e| Error::config("K", e.to_string()))?;
        if let Some(a) = self.arrival {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::config("arrival", format!("{a} must be non-negative")));
            }
        }
        let schemes = self.scheme_list();
        if schemes.is_empty() {
            return Err(Error::config("schemes", "no schemes to run"));
        }
        for s in &schemes {
            if s.group_size() > self.users {
                return Err(Error::config("L", format!("{} needs at least {} users", s.label(), s.group_size())));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding, hex encoded.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
