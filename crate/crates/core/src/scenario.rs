//! Scenario description: array sizes, geometry, powers, attack weights and
//! algorithm knobs, plus the static quantities derived from them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// How the cascade-channel estimation error is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiErrorMode {
    /// Unit-variance error entries, as in the estimation model.
    Literal,
    /// Error entries scaled to the empirical per-entry power of the true channel.
    Scaled,
}

/// Starting point of the phase optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaInit {
    /// All-ones vector (every phase zero).
    Ones,
    /// First standard basis vector.
    FirstBasis,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemConfig {
    pub bs_antennas: usize,
    pub user_antennas: usize,
    pub users: usize,
    pub ris_elements: usize,
    pub streams: usize,
    /// Rank of each user's direct-link covariance.
    pub ranks: Vec<usize>,
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub path_loss_exponent: f64,
    pub bs_pos: [f64; 2],
    pub ris_pos: [f64; 2],
    pub user_pos: Vec<[f64; 2]>,
    /// Attack weights, one per user.
    pub nu: Vec<f64>,
    /// Per-user, per-symbol power allocation.
    pub alpha: Vec<Vec<f64>>,
    pub iterations: usize,
    pub step_beta: f64,
    pub tau: f64,
    pub csi_error_mode: CsiErrorMode,
    pub rho_bs: f64,
    pub rho_ris: f64,
    pub rho_ue: f64,
    pub seed: u64,
    pub trials: usize,
    pub theta_init: ThetaInit,
    pub early_stop: bool,
    /// 1-based user singled out by the targeted attack preset and the `nu_target` sweep.
    pub target_user: usize,
}

pub const DEFAULT_USER_POS: [[f64; 2]; 3] = [[20.0, 0.0], [20.0, 40.0], [50.0, 20.0]];
pub const DEFAULT_RANK: usize = 12;

impl Default for SystemConfig {
    fn default() -> Self {
        let users = 3;
        let streams = 2;
        SystemConfig {
            bs_antennas: 60,
            user_antennas: 4,
            users,
            ris_elements: 200,
            streams,
            ranks: vec![DEFAULT_RANK; users],
            power_dbm: 20.0,
            noise_dbm: -40.0,
            path_loss_exponent: 2.5,
            bs_pos: [0.0, 0.0],
            ris_pos: [30.0, 20.0],
            user_pos: DEFAULT_USER_POS.to_vec(),
            nu: vec![1.0 / users as f64; users],
            alpha: vec![vec![1.0; streams]; users],
            iterations: 3000,
            step_beta: 0.99,
            tau: 0.0,
            csi_error_mode: CsiErrorMode::Literal,
            rho_bs: 0.0,
            rho_ris: 0.0,
            rho_ue: 0.0,
            seed: 1,
            trials: 200,
            theta_init: ThetaInit::Ones,
            early_stop: false,
            target_user: 1,
        }
    }
}

/// On-disk form: every field optional, missing ones take the defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    bs_antennas: Option<usize>,
    user_antennas: Option<usize>,
    users: Option<usize>,
    ris_elements: Option<usize>,
    streams: Option<usize>,
    ranks: Option<Vec<usize>>,
    power_dbm: Option<f64>,
    noise_dbm: Option<f64>,
    path_loss_exponent: Option<f64>,
    bs_pos: Option<[f64; 2]>,
    ris_pos: Option<[f64; 2]>,
    user_pos: Option<Vec<[f64; 2]>>,
    nu: Option<Vec<f64>>,
    alpha: Option<Vec<Vec<f64>>>,
    iterations: Option<usize>,
    #[serde(alias = "beta")]
    step_beta: Option<f64>,
    tau: Option<f64>,
    csi_error_mode: Option<CsiErrorMode>,
    rho_bs: Option<f64>,
    rho_ris: Option<f64>,
    rho_ue: Option<f64>,
    seed: Option<u64>,
    trials: Option<usize>,
    theta_init: Option<ThetaInit>,
    early_stop: Option<bool>,
    target_user: Option<usize>,
}

impl ScenarioFile {
    fn into_config(self) -> SystemConfig {
        let d = SystemConfig::default();
        let users = self.users.unwrap_or(d.users);
        let streams = self.streams.unwrap_or(d.streams);
        let user_pos = self.user_pos.unwrap_or_else(|| {
            if users == DEFAULT_USER_POS.len() {
                DEFAULT_USER_POS.to_vec()
            } else {
                Vec::new()
            }
        });
        SystemConfig {
            bs_antennas: self.bs_antennas.unwrap_or(d.bs_antennas),
            user_antennas: self.user_antennas.unwrap_or(d.user_antennas),
            users,
            ris_elements: self.ris_elements.unwrap_or(d.ris_elements),
            streams,
            ranks: self.ranks.unwrap_or_else(|| vec![DEFAULT_RANK; users]),
            power_dbm: self.power_dbm.unwrap_or(d.power_dbm),
            noise_dbm: self.noise_dbm.unwrap_or(d.noise_dbm),
            path_loss_exponent: self.path_loss_exponent.unwrap_or(d.path_loss_exponent),
            bs_pos: self.bs_pos.unwrap_or(d.bs_pos),
            ris_pos: self.ris_pos.unwrap_or(d.ris_pos),
            user_pos,
            nu: self
                .nu
                .unwrap_or_else(|| vec![1.0 / users.max(1) as f64; users]),
            alpha: self
                .alpha
                .unwrap_or_else(|| vec![vec![1.0; streams]; users]),
            iterations: self.iterations.unwrap_or(d.iterations),
            step_beta: self.step_beta.unwrap_or(d.step_beta),
            tau: self.tau.unwrap_or(d.tau),
            csi_error_mode: self.csi_error_mode.unwrap_or(d.csi_error_mode),
            rho_bs: self.rho_bs.unwrap_or(d.rho_bs),
            rho_ris: self.rho_ris.unwrap_or(d.rho_ris),
            rho_ue: self.rho_ue.unwrap_or(d.rho_ue),
            seed: self.seed.unwrap_or(d.seed),
            trials: self.trials.unwrap_or(d.trials),
            theta_init: self.theta_init.unwrap_or(d.theta_init),
            early_stop: self.early_stop.unwrap_or(d.early_stop),
            target_user: self.target_user.unwrap_or(d.target_user),
        }
    }
}

/// Reads a scenario file. `.json` files are parsed as JSON, anything else as TOML.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        SystemConfig::from_json_str(&text)
    } else {
        SystemConfig::from_toml_str(&text)
    }
}

impl SystemConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let cfg = file.into_config();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let cfg = file.into_config();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("config is always representable as JSON")
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json_string().as_bytes()))
    }

    /// Transmit power budget in milliwatts.
    pub fn power_mw(&self) -> f64 {
        dbm_to_linear(self.power_dbm)
    }

    /// Noise variance in milliwatts.
    pub fn noise_mw(&self) -> f64 {
        dbm_to_linear(self.noise_dbm)
    }

    /// Full mitigation has an exact left null space.
    pub fn fmit_exact(&self) -> bool {
        self.user_antennas > self.users * self.streams
    }

    /// Harness-and-mitigate has an exact left null space.
    pub fn hmit_exact(&self) -> bool {
        self.user_antennas > self.users.saturating_sub(1) * self.streams
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        let (m, n, k, l, s) = (
            self.bs_antennas,
            self.user_antennas,
            self.users,
            self.ris_elements,
            self.streams,
        );
        if m == 0 || n == 0 || k == 0 || s == 0 {
            errs.push("bs_antennas, user_antennas, users and streams must be positive".into());
        }
        if l < 1 {
            errs.push("ris_elements must be at least 1".into());
        }
        if m < n {
            errs.push(format!("bs_antennas ({m}) must be at least user_antennas ({n})"));
        }
        if s > n {
            errs.push(format!("streams ({s}) exceed user_antennas ({n})"));
        }
        if self.ranks.len() != k {
            errs.push(format!("ranks has {} entries, expected {k}", self.ranks.len()));
        } else {
            if self.ranks.iter().any(|&r| r == 0 || r > m) {
                errs.push(format!("every rank must lie in 1..={m}"));
            }
            let total: usize = self.ranks.iter().sum();
            let min_rank = self.ranks.iter().copied().min().unwrap_or(0);
            if s > min_rank {
                errs.push(format!("streams ({s}) exceed the smallest rank ({min_rank})"));
            }
            for (idx, &r) in self.ranks.iter().enumerate() {
                let others = total - r;
                if m < others || m - others < s {
                    errs.push(format!(
                        "user {}: streams ({s}) exceed the null-space dimension {} of the other users' eigenspaces",
                        idx + 1,
                        m as i64 - others as i64
                    ));
                }
            }
        }
        if !(self.step_beta > 0.0 && self.step_beta < 1.0) {
            errs.push("beta out of (0,1)".into());
        }
        if !(0.0..=1.0).contains(&self.tau) {
            errs.push("tau out of [0,1]".into());
        }
        if !(self.path_loss_exponent > 0.0) || !self.path_loss_exponent.is_finite() {
            errs.push("path-loss exponent must be positive".into());
        }
        if self.nu.len() != k {
            errs.push(format!("nu has {} entries, expected {k}", self.nu.len()));
        } else if self.nu.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            errs.push("attack weights nu must be positive".into());
        }
        if self.alpha.len() != k || self.alpha.iter().any(|row| row.len() != s) {
            errs.push(format!("alpha must be a {k}x{s} table"));
        } else if self.alpha.iter().flatten().any(|&a| !(a >= 0.0) || !a.is_finite()) {
            errs.push("power allocation alpha must be non-negative".into());
        }
        for (name, rho) in [
            ("rho_bs", self.rho_bs),
            ("rho_ris", self.rho_ris),
            ("rho_ue", self.rho_ue),
        ] {
            if !(0.0..1.0).contains(&rho) {
                errs.push(format!("{name} out of [0,1)"));
            }
        }
        if self.iterations == 0 {
            errs.push("iterations must be at least 1".into());
        }
        if self.trials == 0 {
            errs.push("trials must be at least 1".into());
        }
        if !self.power_dbm.is_finite() || !self.noise_dbm.is_finite() {
            errs.push("powers must be finite".into());
        }
        if self.target_user == 0 || self.target_user > k {
            errs.push(format!("target_user must lie in 1..={k}"));
        }
        if self.user_pos.len() != k {
            errs.push(format!(
                "user_pos has {} entries, expected {k}",
                self.user_pos.len()
            ));
        } else {
            let mut links = vec![("BS-RIS".to_string(), distance(self.bs_pos, self.ris_pos))];
            for (idx, &u) in self.user_pos.iter().enumerate() {
                links.push((format!("BS-user {}", idx + 1), distance(self.bs_pos, u)));
                links.push((format!("RIS-user {}", idx + 1), distance(self.ris_pos, u)));
            }
            for (name, d) in links {
                if !(d >= 1.0) {
                    errs.push(format!("{name} distance {d} m is below 1 m"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(errs))
        }
    }
}

pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Power-law path gain `d^-eta`.
pub fn path_loss(d: f64, eta: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain(format!("path loss needs a positive distance, got {d}")));
    }
    Ok(d.powf(-eta))
}

/// Large-scale gains of every link in the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    pub bs_user: Vec<f64>,
    pub bs_ris: f64,
    pub ris_user: Vec<f64>,
    pub d_bs_user: Vec<f64>,
    pub d_bs_ris: f64,
    pub d_ris_user: Vec<f64>,
}

impl LinkGains {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        let eta = cfg.path_loss_exponent;
        let d_bs_ris = distance(cfg.bs_pos, cfg.ris_pos);
        let d_bs_user: Vec<f64> = cfg.user_pos.iter().map(|&u| distance(cfg.bs_pos, u)).collect();
        let d_ris_user: Vec<f64> = cfg.user_pos.iter().map(|&u| distance(cfg.ris_pos, u)).collect();
        Ok(LinkGains {
            bs_user: d_bs_user.iter().map(|&d| path_loss(d, eta)).collect::<Result<_>>()?,
            bs_ris: path_loss(d_bs_ris, eta)?,
            ris_user: d_ris_user.iter().map(|&d| path_loss(d, eta)).collect::<Result<_>>()?,
            d_bs_user,
            d_bs_ris,
            d_ris_user,
        })
    }
}
