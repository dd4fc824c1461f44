//! Seeded Monte Carlo trials and parameter sweeps.
//!
//! A trial draws every channel from its own deterministic stream, builds the
//! base-station precoders, runs the requested attack against that draw and
//! evaluates each receiver. All attack/receiver schemes of a trial index see
//! the same channels (common random numbers).

use std::fmt;
use std::str::FromStr;

use crate::attacker::{
    disco_profile, initial_theta, stack_weighted, OptimizationTrace, PhaseOptimizer, RisProfile,
};
use crate::channel::{
    build_cascade_operator, cascade_channel, corrupt_csi, draw_realization, ChannelRealization,
    LinkCorrelation,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{pairwise_sum, CMat};
use crate::precoder::PrecoderSet;
use crate::receiver::{
    fmit_combiner, hmit_combiner, sinr_per_symbol, unmitigated_combiner, LinkView, ReceiverMode,
    SinrBreakdown,
};
use crate::rng::{trial_rng, Purpose};
use crate::scenario::{dbm_to_linear, CsiErrorMode, LinkGains, SystemConfig};

/// Weight of the targeted user in the targeted attack preset.
pub const TARGETED_WEIGHT: f64 = 0.98;

/// Attack weights used by the optimized attack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weights {
    /// `nu` from the scenario.
    Configured,
    /// `1/K` for every user.
    Equal,
    /// `weight` on one 1-based user, the rest shared equally; `None` means the scenario's `target_user`.
    Targeted { user: Option<usize>, weight: f64 },
}

impl Weights {
    pub fn resolve(&self, cfg: &SystemConfig) -> Vec<f64> {
        let k = cfg.users;
        match *self {
            Weights::Configured => cfg.nu.clone(),
            Weights::Equal => vec![1.0 / k as f64; k],
            Weights::Targeted { user, weight } => {
                let target = user.unwrap_or(cfg.target_user).clamp(1, k) - 1;
                let rest = if k > 1 { (1.0 - weight) / (k - 1) as f64 } else { 0.0 };
                (0..k).map(|i| if i == target { weight } else { rest }).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AttackMode {
    /// No RIS (all-zero reflection sentinel).
    None,
    /// Uniformly random phases, redrawn every trial.
    Disco,
    Optimized(Weights),
}

impl fmt::Display for AttackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackMode::None => f.write_str("none"),
            AttackMode::Disco => f.write_str("disco"),
            AttackMode::Optimized(Weights::Configured) => f.write_str("opt"),
            AttackMode::Optimized(Weights::Equal) => f.write_str("attack1"),
            AttackMode::Optimized(Weights::Targeted { user: None, weight })
                if *weight == TARGETED_WEIGHT =>
            {
                f.write_str("attack2")
            }
            AttackMode::Optimized(Weights::Targeted { user: Some(u), weight })
                if *weight == TARGETED_WEIGHT =>
            {
                write!(f, "attack2@{u}")
            }
            AttackMode::Optimized(Weights::Targeted { user, weight }) => match user {
                Some(u) => write!(f, "target@{u}:{weight}"),
                None => write!(f, "target:{weight}"),
            },
        }
    }
}

impl FromStr for AttackMode {
    type Err = Error;

    /// `none`, `disco`, `opt`, `attack1`, `attack2[@user]`, `target[@user]:weight`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unknown attack `{s}`"));
        let lower = s.to_ascii_lowercase();
        let (head, user) = match lower.split_once('@') {
            Some((h, rest)) => {
                let (u, tail) = match rest.split_once(':') {
                    Some((u, w)) => (u, Some(w)),
                    None => (rest, None),
                };
                let user: usize = u.parse().map_err(|_| bad())?;
                if user == 0 {
                    return Err(bad());
                }
                match tail {
                    Some(w) => (format!("{h}:{w}"), Some(user)),
                    None => (h.to_string(), Some(user)),
                }
            }
            None => (lower.clone(), None),
        };
        match head.as_str() {
            "none" | "safe" if user.is_none() => Ok(AttackMode::None),
            "disco" if user.is_none() => Ok(AttackMode::Disco),
            "opt" if user.is_none() => Ok(AttackMode::Optimized(Weights::Configured)),
            "attack1" if user.is_none() => Ok(AttackMode::Optimized(Weights::Equal)),
            "attack2" => Ok(AttackMode::Optimized(Weights::Targeted {
                user,
                weight: TARGETED_WEIGHT,
            })),
            other => match other.strip_prefix("target:") {
                Some(w) => {
                    let weight: f64 = w.parse().map_err(|_| bad())?;
                    if !(weight > 0.0 && weight < 1.0) {
                        return Err(bad());
                    }
                    Ok(AttackMode::Optimized(Weights::Targeted { user, weight }))
                }
                None => Err(bad()),
            },
        }
    }
}

/// One attack/receiver combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scheme {
    pub attack: AttackMode,
    pub receiver: ReceiverMode,
}

impl Scheme {
    pub fn safe() -> Self {
        Scheme {
            attack: AttackMode::None,
            receiver: ReceiverMode::Unmitigated,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.attack, self.receiver)
    }
}

impl FromStr for Scheme {
    type Err = Error;

    /// `safe`, `<attack>` (unmitigated receiver) or `<attack>+<receiver>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("safe") {
            return Ok(Scheme::safe());
        }
        let (attack, receiver) = match s.split_once('+') {
            Some((a, r)) => (a.parse()?, r.parse()?),
            None => (s.parse()?, ReceiverMode::Unmitigated),
        };
        Ok(Scheme { attack, receiver })
    }
}

pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    let schemes: Vec<Scheme> = list
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if schemes.is_empty() {
        return Err(Error::Parse("no schemes given".into()));
    }
    Ok(schemes)
}

/// Static per-scenario quantities shared by every trial.
#[derive(Debug, Clone)]
pub struct PreparedScenario {
    pub config: SystemConfig,
    pub gains: LinkGains,
    correlation: LinkCorrelation,
}

impl PreparedScenario {
    pub fn new(config: SystemConfig) -> Result<Self> {
        config.validate()?;
        let gains = LinkGains::new(&config)?;
        let correlation = LinkCorrelation::new(&config);
        Ok(PreparedScenario {
            config,
            gains,
            correlation,
        })
    }
}

/// Result of running one attack against one trial's channels.
#[derive(Debug, Clone)]
pub struct AttackOutcome {
    pub mode: AttackMode,
    pub profile: RisProfile,
    pub trace: Option<OptimizationTrace>,
    /// True cascade channels `Z_k` under this profile.
    pub cascades: Vec<CMat>,
}

/// Power, CSI and noise settings applied when evaluating receivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalParams {
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub tau: f64,
    pub csi_mode: CsiErrorMode,
}

impl From<&SystemConfig> for EvalParams {
    fn from(cfg: &SystemConfig) -> Self {
        EvalParams {
            power_dbm: cfg.power_dbm,
            noise_dbm: cfg.noise_dbm,
            tau: cfg.tau,
            csi_mode: cfg.csi_error_mode,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UserOutcome {
    pub breakdown: SinrBreakdown,
    /// Bits/s/Hz.
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: u64,
    pub attack: AttackMode,
    pub receiver: ReceiverMode,
    pub users: Vec<UserOutcome>,
    pub system_rate: f64,
    pub pinv_fallbacks: usize,
    pub degenerate_svd: usize,
}

/// Sum of `log2(1 + sinr)` over a user's symbols.
pub fn user_rate(sinrs: &[f64]) -> f64 {
    sinrs.iter().map(|&g| (1.0 + g.max(0.0)).log2()).sum()
}

/// One trial's channels and precoders.
pub struct TrialContext<'a> {
    pub scenario: &'a PreparedScenario,
    pub trial: u64,
    pub channels: ChannelRealization,
    pub precoders: PrecoderSet,
}

impl<'a> TrialContext<'a> {
    pub fn new(scenario: &'a PreparedScenario, trial: u64) -> Result<Self> {
        let cfg = &scenario.config;
        let mut rng = trial_rng(cfg.seed, trial, Purpose::Channel);
        let channels = draw_realization(cfg, &scenario.gains, &scenario.correlation, &mut rng)?;
        let precoders = PrecoderSet::build(&channels.covariances, &channels.direct, cfg.streams)?;
        Ok(TrialContext {
            scenario,
            trial,
            channels,
            precoders,
        })
    }

    /// Chooses the RIS profile. The optimized attack only sees the cascade
    /// links `G` and `F_k`.
    pub fn attack(&self, mode: AttackMode) -> Result<AttackOutcome> {
        let cfg = &self.scenario.config;
        let l = cfg.ris_elements;
        let g = &self.channels.bs_ris;
        let (profile, trace) = match mode {
            AttackMode::None => (RisProfile::absent(l), None),
            AttackMode::Disco => {
                let mut rng = trial_rng(cfg.seed, self.trial, Purpose::Disco);
                (disco_profile(l, &mut rng), None)
            }
            AttackMode::Optimized(weights) => {
                let ops = self
                    .channels
                    .ris_user
                    .iter()
                    .map(|f| build_cascade_operator(g, f))
                    .collect::<Result<Vec<_>>>()?;
                let op = stack_weighted(&ops, &weights.resolve(cfg))?;
                let optimizer = PhaseOptimizer {
                    iterations: cfg.iterations,
                    beta: cfg.step_beta,
                    early_stop: cfg.early_stop,
                };
                let (profile, trace) = optimizer.run(&op, &initial_theta(l, cfg.theta_init))?;
                (profile, Some(trace))
            }
        };
        let cascades = self
            .channels
            .ris_user
            .iter()
            .map(|f| cascade_channel(f, &profile.theta, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(AttackOutcome {
            mode,
            profile,
            trace,
            cascades,
        })
    }

    /// Cascade CSI available to the users. One error draw per user from the
    /// trial's CSI stream, shared by every `tau` and receiver.
    pub fn estimates(&self, attack: &AttackOutcome, params: &EvalParams) -> Vec<CMat> {
        let mut rng = trial_rng(self.scenario.config.seed, self.trial, Purpose::CsiError);
        attack
            .cascades
            .iter()
            .map(|z| corrupt_csi(z, params.tau, params.csi_mode, &mut rng))
            .collect()
    }

    pub fn evaluate(
        &self,
        attack: &AttackOutcome,
        receiver: ReceiverMode,
        params: &EvalParams,
    ) -> Result<TrialRecord> {
        let estimates = self.estimates(attack, params);
        self.evaluate_with(attack, receiver, params, &estimates)
    }

    /// Like [`evaluate`](Self::evaluate) with precomputed estimates.
    pub fn evaluate_with(
        &self,
        attack: &AttackOutcome,
        receiver: ReceiverMode,
        params: &EvalParams,
        estimates: &[CMat],
    ) -> Result<TrialRecord> {
        let cfg = &self.scenario.config;
        let power = dbm_to_linear(params.power_dbm);
        let noise = dbm_to_linear(params.noise_dbm);
        let p_all = self.precoders.stacked(None);
        let mut pinv_fallbacks = 0;
        let mut users = Vec::with_capacity(cfg.users);
        for k in 0..cfg.users {
            let h = &self.channels.direct[k];
            let own = &self.precoders.users[k].combined;
            let combiner = match receiver {
                ReceiverMode::Unmitigated => unmitigated_combiner(h, own)?,
                ReceiverMode::FullMitigation => fmit_combiner(&estimates[k], &p_all, h, own)?,
                ReceiverMode::HarnessMitigation => {
                    hmit_combiner(&estimates[k], &self.precoders.stacked(Some(k)), h, own)?
                }
            };
            pinv_fallbacks += usize::from(combiner.pinv_fallback);
            let breakdown = sinr_per_symbol(
                &combiner,
                &LinkView {
                    user: k,
                    direct: h,
                    cascade: &attack.cascades[k],
                    precoders: &self.precoders,
                    alpha: &cfg.alpha,
                    power,
                    noise,
                },
            );
            let rate = user_rate(&breakdown.sinrs());
            users.push(UserOutcome { breakdown, rate });
        }
        let system_rate = users.iter().map(|u| u.rate).sum();
        Ok(TrialRecord {
            trial: self.trial,
            attack: attack.mode,
            receiver,
            users,
            system_rate,
            pinv_fallbacks,
            degenerate_svd: self.precoders.degenerate_count(),
        })
    }
}

/// Runs one complete trial: channels, precoders, attack, CSI, receivers, rates.
pub fn run_trial(
    cfg: &SystemConfig,
    attack: AttackMode,
    receiver: ReceiverMode,
    trial: u64,
) -> Result<TrialRecord> {
    let scenario = PreparedScenario::new(cfg.clone())?;
    let ctx = TrialContext::new(&scenario, trial)?;
    let outcome = ctx.attack(attack)?;
    ctx.evaluate(&outcome, receiver, &EvalParams::from(cfg))
}

/// Objective trace of the optimized attack on one trial.
pub fn optimization_trace(
    cfg: &SystemConfig,
    attack: AttackMode,
    trial: u64,
) -> Result<Option<OptimizationTrace>> {
    let scenario = PreparedScenario::new(cfg.clone())?;
    let ctx = TrialContext::new(&scenario, trial)?;
    Ok(ctx.attack(attack)?.trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    PowerDbm,
    RisX,
    Tau,
    NuTarget,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::PowerDbm => "P_dBm",
            SweepVar::RisX => "ris_x",
            SweepVar::Tau => "tau",
            SweepVar::NuTarget => "nu_target",
        }
    }

    /// Variables that leave the channels and the attack untouched.
    fn reuses_trials(self) -> bool {
        matches!(self, SweepVar::PowerDbm | SweepVar::Tau)
    }

    /// Scenario for one grid value.
    pub fn apply(self, cfg: &SystemConfig, value: f64) -> Result<SystemConfig> {
        let mut out = cfg.clone();
        match self {
            SweepVar::PowerDbm => out.power_dbm = value,
            SweepVar::RisX => out.ris_pos[0] = value,
            SweepVar::Tau => out.tau = value,
            SweepVar::NuTarget => {
                out.nu = Weights::Targeted {
                    user: None,
                    weight: value,
                }
                .resolve(cfg);
                if cfg.users == 1 {
                    out.nu = vec![1.0];
                }
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P_dBm" | "p_dbm" | "power" => Ok(SweepVar::PowerDbm),
            "ris_x" => Ok(SweepVar::RisX),
            "tau" => Ok(SweepVar::Tau),
            "nu_target" => Ok(SweepVar::NuTarget),
            other => Err(Error::Sweep(format!(
                "`{other}` (expected P_dBm, ris_x, tau or nu_target)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

impl SweepSpec {
    pub fn single(var: SweepVar, value: f64) -> Self {
        SweepSpec {
            var,
            values: vec![value],
        }
    }
}

fn round_grid(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl FromStr for SweepSpec {
    type Err = Error;

    /// `var=start:stop:step` (inclusive) or `var=v1,v2,...`.
    fn from_str(s: &str) -> Result<Self> {
        let (var, grid) = s
            .split_once('=')
            .ok_or_else(|| Error::Sweep(format!("`{s}` is not of the form var=grid")))?;
        let var: SweepVar = var.trim().parse()?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Sweep(format!("bad number `{t}` in `{s}`")))
        };
        let values = if grid.contains(':') {
            let parts: Vec<&str> = grid.split(':').collect();
            let [start, stop, step] = parts[..] else {
                return Err(Error::Sweep(format!("range `{grid}` needs start:stop:step")));
            };
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if !(step > 0.0) || stop < start {
                return Err(Error::Sweep(format!("empty or invalid range `{grid}`")));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| round_grid(start + i as f64 * step)).collect()
        } else {
            grid.split(',').map(num).collect::<Result<Vec<_>>>()?
        };
        if values.is_empty() {
            return Err(Error::Sweep(format!("`{s}` has an empty grid")));
        }
        Ok(SweepSpec { var, values })
    }
}

impl fmt::Display for SweepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{}={}", self.var.name(), vals.join(","))
    }
}

#[derive(Debug, Clone)]
pub struct CampaignSpec {
    pub sweep: SweepSpec,
    pub schemes: Vec<Scheme>,
    pub trials: usize,
    pub execution: Execution,
}

/// Mean with a normal-approximation 95% confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateStat {
    pub mean: f64,
    pub ci95: f64,
    pub trials: usize,
}

impl RateStat {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return RateStat {
                mean: f64::NAN,
                ci95: f64::NAN,
                trials: 0,
            };
        }
        let mean = pairwise_sum(xs) / n as f64;
        let ci95 = if n > 1 {
            let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
            1.96 * (pairwise_sum(&dev) / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        RateStat {
            mean,
            ci95,
            trials: n,
        }
    }
}

/// Aggregated rates of one scheme in one grid cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub value: f64,
    pub scheme: Scheme,
    /// One entry per user.
    pub users: Vec<RateStat>,
    pub system: RateStat,
    /// Raw per-trial system rates, in trial order.
    pub system_samples: Vec<f64>,
    /// Raw per-trial user rates, `[trial][user]`.
    pub user_samples: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct CampaignResult {
    pub sweep_var: SweepVar,
    pub seed: u64,
    pub config_digest: String,
    pub cells: Vec<CellResult>,
    pub pinv_fallbacks: usize,
    pub degenerate_svd: usize,
}

impl CampaignResult {
    pub fn cell(&self, value: f64, scheme: &Scheme) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.value == value && c.scheme == *scheme)
    }
}

struct TrialRates {
    /// `[cell][scheme] -> user rates`
    rates: Vec<Vec<Vec<f64>>>,
    pinv_fallbacks: usize,
    degenerate_svd: usize,
}

fn distinct_attacks(schemes: &[Scheme]) -> Vec<AttackMode> {
    let mut out: Vec<AttackMode> = Vec::new();
    for s in schemes {
        if !out.contains(&s.attack) {
            out.push(s.attack);
        }
    }
    out
}

fn run_one_trial(
    scenarios: &[PreparedScenario],
    shared: bool,
    schemes: &[Scheme],
    trial: u64,
) -> Result<TrialRates> {
    let attacks = distinct_attacks(schemes);
    let mut rates = Vec::with_capacity(scenarios.len());
    let mut pinv_fallbacks = 0;
    let mut degenerate_svd = 0;
    let mut cached: Option<(TrialContext<'_>, Vec<AttackOutcome>)> = None;
    for (idx, scenario) in scenarios.iter().enumerate() {
        if !shared || idx == 0 {
            let ctx = TrialContext::new(scenario, trial)?;
            let outcomes = attacks
                .iter()
                .map(|&a| ctx.attack(a))
                .collect::<Result<Vec<_>>>()?;
            cached = Some((ctx, outcomes));
        }
        let (ctx, outcomes) = cached.as_ref().expect("context built for the first cell");
        let params = EvalParams::from(&scenario.config);
        let estimates: Vec<Vec<CMat>> = outcomes.iter().map(|o| ctx.estimates(o, &params)).collect();
        let mut cell = Vec::with_capacity(schemes.len());
        for scheme in schemes {
            let a = attacks
                .iter()
                .position(|&m| m == scheme.attack)
                .expect("every scheme's attack was run");
            let rec = ctx.evaluate_with(&outcomes[a], scheme.receiver, &params, &estimates[a])?;
            pinv_fallbacks += rec.pinv_fallbacks;
            degenerate_svd += rec.degenerate_svd;
            cell.push(rec.users.iter().map(|u| u.rate).collect());
        }
        rates.push(cell);
    }
    Ok(TrialRates {
        rates,
        pinv_fallbacks,
        degenerate_svd,
    })
}

/// Runs every scheme on every grid value for `spec.trials` trials and
/// aggregates user and system rates.
pub fn run_campaign(cfg: &SystemConfig, spec: &CampaignSpec) -> Result<CampaignResult> {
    cfg.validate()?;
    if spec.schemes.is_empty() || spec.sweep.values.is_empty() || spec.trials == 0 {
        return Err(Error::Sweep("campaign needs schemes, grid values and trials".into()));
    }
    let scenarios = spec
        .sweep
        .values
        .iter()
        .map(|&v| PreparedScenario::new(spec.sweep.var.apply(cfg, v)?))
        .collect::<Result<Vec<_>>>()?;
    let shared = spec.sweep.var.reuses_trials();

    let per_trial = spec
        .execution
        .map(spec.trials, |t| run_one_trial(&scenarios, shared, &spec.schemes, t as u64))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for (c, &value) in spec.sweep.values.iter().enumerate() {
        for (s, scheme) in spec.schemes.iter().enumerate() {
            let user_samples: Vec<Vec<f64>> =
                per_trial.iter().map(|t| t.rates[c][s].clone()).collect();
            let system_samples: Vec<f64> =
                user_samples.iter().map(|u| u.iter().sum()).collect();
            let users = (0..cfg.users)
                .map(|k| {
                    let xs: Vec<f64> = user_samples.iter().map(|u| u[k]).collect();
                    RateStat::from_samples(&xs)
                })
                .collect();
            cells.push(CellResult {
                value,
                scheme: *scheme,
                users,
                system: RateStat::from_samples(&system_samples),
                system_samples,
                user_samples,
            });
        }
    }
    Ok(CampaignResult {
        sweep_var: spec.sweep.var,
        seed: cfg.seed,
        config_digest: cfg.digest(),
        cells,
        pinv_fallbacks: per_trial.iter().map(|t| t.pinv_fallbacks).sum(),
        degenerate_svd: per_trial.iter().map(|t| t.degenerate_svd).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SystemConfig {
        SystemConfig {
            bs_antennas: 16,
            user_antennas: 4,
            ris_elements: 12,
            ranks: vec![4; 3],
            iterations: 50,
            trials: 6,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn user_rate_examples() {
        assert_eq!(user_rate(&[0.0, 0.0]), 0.0);
        assert_eq!(user_rate(&[1.0, 1.0]), 2.0);
        assert!((user_rate(&[3.0, 7.0]) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn attack_labels_round_trip() {
        for label in ["none", "disco", "opt", "attack1", "attack2", "attack2@3", "target@2:0.7", "target:0.5"] {
            let mode: AttackMode = label.parse().unwrap();
            assert_eq!(mode.to_string(), label);
        }
        for bad in ["foo", "attack2@0", "target:1.5", "disco@2"] {
            assert!(bad.parse::<AttackMode>().is_err(), "{bad}");
        }
    }

    #[test]
    fn scheme_parsing() {
        let s = parse_schemes("safe,disco+unmit,opt+fmit,opt+hmit,disco").unwrap();
        assert_eq!(s.len(), 5);
        assert_eq!(s[0], Scheme::safe());
        assert_eq!(s[3].receiver, ReceiverMode::HarnessMitigation);
        assert_eq!(s[4].receiver, ReceiverMode::Unmitigated);
        assert_eq!(s[2].to_string(), "opt+fmit");
        assert!(parse_schemes("opt+zf").is_err());
    }

    #[test]
    fn weight_presets() {
        let cfg = SystemConfig::default();
        assert_eq!(Weights::Equal.resolve(&cfg), vec![1.0 / 3.0; 3]);
        let t = Weights::Targeted { user: Some(2), weight: 0.98 }.resolve(&cfg);
        assert!((t[0] - 0.01).abs() < 1e-15 && t[1] == 0.98 && (t[2] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn sweep_grammar() {
        let s: SweepSpec = "P_dBm=0:30:5".parse().unwrap();
        assert_eq!(s.values, vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0]);
        let s: SweepSpec = "tau=0:0.5:0.1".parse().unwrap();
        assert_eq!(s.values, vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
        let s: SweepSpec = "ris_x=10,30,50".parse().unwrap();
        assert_eq!(s.var, SweepVar::RisX);
        assert!(matches!("bogus=1".parse::<SweepSpec>(), Err(Error::Sweep(_))));
        assert!("tau=1:0:0.1".parse::<SweepSpec>().is_err());
        assert!("tau".parse::<SweepSpec>().is_err());
    }

    #[test]
    fn sweep_application() {
        let cfg = SystemConfig::default();
        let moved = SweepVar::RisX.apply(&cfg, 10.0).unwrap();
        assert_eq!(moved.ris_pos, [10.0, 20.0]);
        let nu = SweepVar::NuTarget.apply(&cfg, 0.5).unwrap();
        assert_eq!(nu.nu, vec![0.5, 0.25, 0.25]);
        assert!(SweepVar::Tau.apply(&cfg, 1.5).is_err());
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = small();
        let mode = AttackMode::Optimized(Weights::Equal);
        let a = run_trial(&cfg, mode, ReceiverMode::HarnessMitigation, 3).unwrap();
        let b = run_trial(&cfg, mode, ReceiverMode::HarnessMitigation, 3).unwrap();
        assert_eq!(a.system_rate, b.system_rate);
        for (x, y) in a.users.iter().zip(&b.users) {
            assert_eq!(x.breakdown, y.breakdown);
        }
    }

    #[test]
    fn safe_trial_has_no_ris_interference() {
        let cfg = SystemConfig { tau: 0.4, ..small() };
        let rec = run_trial(&cfg, AttackMode::None, ReceiverMode::Unmitigated, 0).unwrap();
        for u in &rec.users {
            assert!(u.breakdown.symbols.iter().all(|s| s.ris == 0.0));
            assert!(u.rate > 0.0);
        }
        let sum: f64 = rec.users.iter().map(|u| u.rate).sum();
        assert_eq!(rec.system_rate, sum);
    }

    #[test]
    fn schemes_share_channels() {
        let scenario = PreparedScenario::new(small()).unwrap();
        let a = TrialContext::new(&scenario, 2).unwrap();
        let b = TrialContext::new(&scenario, 2).unwrap();
        assert_eq!(a.channels.bs_ris, b.channels.bs_ris);
        assert_eq!(a.channels.direct, b.channels.direct);
        let c = TrialContext::new(&scenario, 3).unwrap();
        assert_ne!(a.channels.bs_ris, c.channels.bs_ris);
    }

    #[test]
    fn campaign_grid_and_trial_counts() {
        let cfg = small();
        let spec = CampaignSpec {
            sweep: "P_dBm=0:30:5".parse().unwrap(),
            schemes: parse_schemes("safe,disco+unmit,opt+unmit,opt+fmit,opt+hmit").unwrap(),
            trials: 4,
            execution: Execution::Sequential,
        };
        let res = run_campaign(&cfg, &spec).unwrap();
        assert_eq!(res.cells.len(), 35);
        assert!(res.cells.iter().all(|c| c.system.trials == 4 && c.users.len() == 3));
        let par = run_campaign(&cfg, &CampaignSpec { execution: Execution::with_threads(3), ..spec }).unwrap();
        for (a, b) in res.cells.iter().zip(&par.cells) {
            assert_eq!(a.system_samples, b.system_samples);
        }
    }

    #[test]
    fn shared_and_rebuilt_trials_agree() {
        // A power sweep reuses one context per trial; a single-value sweep of
        // the same power must produce the same numbers.
        let cfg = small();
        let schemes = parse_schemes("opt+hmit,disco+fmit").unwrap();
        let grid = CampaignSpec {
            sweep: "P_dBm=10,20".parse().unwrap(),
            schemes: schemes.clone(),
            trials: 3,
            execution: Execution::Sequential,
        };
        let res = run_campaign(&cfg, &grid).unwrap();
        let cfg20 = SystemConfig { power_dbm: 20.0, ..cfg.clone() };
        let single = CampaignSpec {
            sweep: SweepSpec::single(SweepVar::RisX, cfg.ris_pos[0]),
            ..grid
        };
        let res20 = run_campaign(&cfg20, &single).unwrap();
        for scheme in &schemes {
            let a = res.cell(20.0, scheme).unwrap();
            let b = res20.cell(cfg.ris_pos[0], scheme).unwrap();
            assert_eq!(a.system_samples, b.system_samples);
        }
    }

    #[test]
    fn rate_stat_matches_definition() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let s = RateStat::from_samples(&xs);
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.ci95 - 1.96 * sd / 2.0).abs() < 1e-15);
        assert_eq!(RateStat::from_samples(&[7.0]).ci95, 0.0);
    }
}
