//! Flat `key=value` experiment configs.
//!
//! One setting per line, `#` starts a comment, dotted prefixes group related
//! keys (`ans.c_inc=8`). Unknown keys and bad values are all reported at once.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::agents::{A2cConfig, DdpgConfig};
use crate::ans::AnsParams;
use crate::envs::{EnvKind, EnvSpec};
use crate::error::{Error, Result};
use crate::nn::ActivationKind;
use crate::popart::PopArtConfig;
use crate::scaling::ClipSchedule;

/// Environment variable that overrides the config seed.
pub const SEED_ENV_VAR: &str = "RESCALE_RL_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgentKind {
    A2c,
    Ddpg,
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentKind::A2c => "a2c",
            AgentKind::Ddpg => "ddpg",
        })
    }
}

impl FromStr for AgentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a2c" => Ok(AgentKind::A2c),
            "ddpg" => Ok(AgentKind::Ddpg),
            other => Err(Error::InvalidArgument(format!("unknown agent `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleMode {
    Fixed(f64),
    Ans,
    PopArt,
}

impl ScaleMode {
    pub fn name(&self) -> &'static str {
        match self {
            ScaleMode::Fixed(_) => "fixed",
            ScaleMode::Ans => "ans",
            ScaleMode::PopArt => "popart",
        }
    }

    pub fn initial_scale(&self) -> f64 {
        match *self {
            ScaleMode::Fixed(c) => c,
            _ => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub env: EnvSpec,
    pub agent: AgentKind,
    pub activation: ActivationKind,
    pub mode: ScaleMode,
    /// Environment steps per trial.
    pub frames: u64,
    pub trials: usize,
    pub a2c: A2cConfig,
    pub ddpg: DdpgConfig,
    pub ans: AnsParams,
    pub popart: PopArtConfig,
    /// Frames between PDRR samples.
    pub pdrr_interval: u64,
    pub pdrr_window: usize,
    pub output_dir: Option<PathBuf>,
    /// Write final networks and the PDRR window per trial.
    pub checkpoint: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            env: EnvSpec::default(),
            agent: AgentKind::A2c,
            activation: ActivationKind::Relu,
            mode: ScaleMode::Fixed(1.0),
            frames: 200_000,
            trials: 5,
            a2c: A2cConfig::default(),
            ddpg: DdpgConfig::default(),
            ans: AnsParams::default(),
            popart: PopArtConfig::default(),
            pdrr_interval: 2_000,
            pdrr_window: crate::diagnostics::DEFAULT_WINDOW,
            output_dir: None,
            checkpoint: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str, errs: &mut Vec<String>) -> Option<T> {
    match v.parse::<T>() {
        Ok(x) => Some(x),
        Err(_) => {
            errs.push(format!("{key}: cannot parse `{v}`"));
            None
        }
    }
}

fn parse_list(key: &str, v: &str, errs: &mut Vec<String>) -> Option<Vec<usize>> {
    if v.trim().is_empty() {
        return Some(Vec::new());
    }
    v.split(',').map(|x| parse_value(key, x.trim(), errs)).collect()
}

fn parse_bool(key: &str, v: &str, errs: &mut Vec<String>) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => {
            errs.push(format!("{key}: expected a boolean, got `{v}`"));
            None
        }
    }
}

impl ExperimentConfig {
    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut errs = Vec::new();
        let mut mode: Option<String> = None;
        let mut scale: Option<f64> = None;
        let mut tolerance_set = false;
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errs.push(format!("line {}: expected key=value", i + 1));
                continue;
            };
            let (key, v) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                errs.push(format!("{key}: set more than once"));
                continue;
            }
            let e = &mut errs;
            match key {
                "seed" => cfg.seed = parse_value(key, v, e).unwrap_or(cfg.seed),
                "env" => match v.parse::<EnvKind>() {
                    Ok(k) => cfg.env.kind = k,
                    Err(err) => e.push(format!("env: {err}")),
                },
                "env.magnitude" => cfg.env.magnitude = parse_value(key, v, e).unwrap_or(cfg.env.magnitude),
                "env.length" => cfg.env.length = parse_value(key, v, e).unwrap_or(cfg.env.length),
                "env.horizon" => cfg.env.horizon = parse_value(key, v, e).unwrap_or(cfg.env.horizon),
                "agent" => match v.parse::<AgentKind>() {
                    Ok(a) => cfg.agent = a,
                    Err(err) => e.push(format!("agent: {err}")),
                },
                "activation" => match v.parse::<ActivationKind>() {
                    Ok(a) => cfg.activation = a,
                    Err(err) => e.push(format!("activation: {err}")),
                },
                "mode" => mode = Some(v.to_string()),
                "scale" => scale = parse_value(key, v, e),
                "frames" => cfg.frames = parse_value(key, v, e).unwrap_or(cfg.frames),
                "trials" => cfg.trials = parse_value(key, v, e).unwrap_or(cfg.trials),
                "lr" => {
                    if let Some(lr) = parse_value::<f64>(key, v, e) {
                        cfg.a2c.actor_lr = lr;
                        cfg.a2c.critic_lr = lr;
                        cfg.ddpg.actor_lr = lr;
                        cfg.ddpg.critic_lr = lr;
                    }
                }
                "gamma" => {
                    if let Some(g) = parse_value::<f64>(key, v, e) {
                        cfg.a2c.gamma = g;
                        cfg.ddpg.gamma = g;
                    }
                }
                "hidden" => {
                    if let Some(h) = parse_list(key, v, e) {
                        cfg.a2c.hidden = h.clone();
                        cfg.ddpg.hidden = h;
                    }
                }
                "reset_optimizer_on_scale" => {
                    if let Some(b) = parse_bool(key, v, e) {
                        cfg.a2c.reset_optimizer_on_scale = b;
                        cfg.ddpg.reset_optimizer_on_scale = b;
                    }
                }
                "clip.initial" => cfg.a2c.clip.initial = parse_value(key, v, e).unwrap_or(cfg.a2c.clip.initial),
                "clip.growth" => cfg.a2c.clip.growth = parse_value(key, v, e).unwrap_or(cfg.a2c.clip.growth),
                "clip.ceiling" => cfg.a2c.clip.ceiling = parse_value(key, v, e).unwrap_or(cfg.a2c.clip.ceiling),
                "a2c.actor_lr" => cfg.a2c.actor_lr = parse_value(key, v, e).unwrap_or(cfg.a2c.actor_lr),
                "a2c.critic_lr" => cfg.a2c.critic_lr = parse_value(key, v, e).unwrap_or(cfg.a2c.critic_lr),
                "a2c.n_envs" => cfg.a2c.n_envs = parse_value(key, v, e).unwrap_or(cfg.a2c.n_envs),
                "a2c.rollout_len" => cfg.a2c.rollout_len = parse_value(key, v, e).unwrap_or(cfg.a2c.rollout_len),
                "a2c.value_coef" => cfg.a2c.value_coef = parse_value(key, v, e).unwrap_or(cfg.a2c.value_coef),
                "a2c.entropy_coef" => {
                    cfg.a2c.entropy_coef = parse_value(key, v, e).unwrap_or(cfg.a2c.entropy_coef)
                }
                "a2c.init_log_std" => {
                    cfg.a2c.init_log_std = parse_value(key, v, e).unwrap_or(cfg.a2c.init_log_std)
                }
                "a2c.bootstrap_on_truncation" => {
                    cfg.a2c.bootstrap_on_truncation =
                        parse_bool(key, v, e).unwrap_or(cfg.a2c.bootstrap_on_truncation)
                }
                "ddpg.actor_lr" => cfg.ddpg.actor_lr = parse_value(key, v, e).unwrap_or(cfg.ddpg.actor_lr),
                "ddpg.critic_lr" => cfg.ddpg.critic_lr = parse_value(key, v, e).unwrap_or(cfg.ddpg.critic_lr),
                "ddpg.tau" => cfg.ddpg.tau = parse_value(key, v, e).unwrap_or(cfg.ddpg.tau),
                "ddpg.batch_size" => cfg.ddpg.batch_size = parse_value(key, v, e).unwrap_or(cfg.ddpg.batch_size),
                "ddpg.buffer_capacity" => {
                    cfg.ddpg.buffer_capacity = parse_value(key, v, e).unwrap_or(cfg.ddpg.buffer_capacity)
                }
                "ddpg.warmup" => cfg.ddpg.warmup = parse_value(key, v, e).unwrap_or(cfg.ddpg.warmup),
                "ddpg.noise_std" => cfg.ddpg.noise_std = parse_value(key, v, e).unwrap_or(cfg.ddpg.noise_std),
                "ans.tolerance" => {
                    tolerance_set = true;
                    cfg.ans.tolerance = parse_value(key, v, e).unwrap_or(cfg.ans.tolerance)
                }
                "ans.c_inc" => cfg.ans.c_inc = parse_value(key, v, e).unwrap_or(cfg.ans.c_inc),
                "ans.c_dec" => cfg.ans.c_dec = parse_value(key, v, e).unwrap_or(cfg.ans.c_dec),
                "ans.beta" => cfg.ans.beta = parse_value(key, v, e).unwrap_or(cfg.ans.beta),
                "popart.step_size" => {
                    cfg.popart.step_size = parse_value(key, v, e).unwrap_or(cfg.popart.step_size)
                }
                "popart.variance_floor" => {
                    cfg.popart.variance_floor = parse_value(key, v, e).unwrap_or(cfg.popart.variance_floor)
                }
                "pdrr.interval" => cfg.pdrr_interval = parse_value(key, v, e).unwrap_or(cfg.pdrr_interval),
                "pdrr.window" => cfg.pdrr_window = parse_value(key, v, e).unwrap_or(cfg.pdrr_window),
                "output.dir" => cfg.output_dir = Some(PathBuf::from(v)),
                "output.checkpoint" => cfg.checkpoint = parse_bool(key, v, e).unwrap_or(cfg.checkpoint),
                _ => e.push(format!("unknown key `{key}`")),
            }
        }
        cfg.ddpg.activation = cfg.activation;
        cfg.a2c.activation = cfg.activation;
        cfg.ddpg.clip = cfg.a2c.clip;
        if !tolerance_set && cfg.agent == AgentKind::Ddpg {
            cfg.ans.tolerance = 50;
        }
        match mode.as_deref() {
            None | Some("fixed") => cfg.mode = ScaleMode::Fixed(scale.unwrap_or(1.0)),
            Some(m @ ("ans" | "popart")) => {
                if scale.is_some() {
                    errs.push(format!("scale: only valid with mode=fixed, not mode={m}"));
                }
                cfg.mode = if m == "ans" { ScaleMode::Ans } else { ScaleMode::PopArt };
            }
            Some(other) => errs.push(format!("mode: expected fixed, ans or popart, got `{other}`")),
        }
        errs.extend(cfg.problems());
        if errs.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errs))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Replaces the seed with `RESCALE_RL_SEED` when it is set.
    pub fn apply_seed_override(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV_VAR) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(vec![format!("{SEED_ENV_VAR}: cannot parse `{v}`")]))?;
        }
        Ok(())
    }

    /// Every violated constraint, in one pass.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.trials == 0 {
            errs.push("trials must be >= 1".to_string());
        }
        if let ScaleMode::Fixed(c) = self.mode {
            if !(c > 0.0 && c.is_finite()) {
                errs.push(format!("scale must be positive, got {c}"));
            }
        }
        if !self.env.magnitude.is_finite() {
            errs.push("env.magnitude must be finite".to_string());
        }
        if self.env.horizon == 0 {
            errs.push("env.horizon must be >= 1".to_string());
        }
        if self.env.kind == EnvKind::Chain && self.env.length < 2 {
            errs.push("env.length must be >= 2".to_string());
        }
        if self.pdrr_interval == 0 || self.pdrr_window == 0 {
            errs.push("pdrr.interval and pdrr.window must be >= 1".to_string());
        }
        if matches!(self.mode, ScaleMode::Ans)
            && !(self.activation.is_positively_homogeneous())
        {
            errs.push(format!("mode=ans needs a homogeneous activation, got {}", self.activation));
        }
        if self.agent == AgentKind::Ddpg && self.env.kind == EnvKind::Chain {
            errs.push("agent=ddpg needs a continuous environment".to_string());
        }
        let sub = |r: Result<()>, errs: &mut Vec<String>| {
            if let Err(Error::Config(v)) = r {
                errs.extend(v);
            }
        };
        match self.agent {
            AgentKind::A2c => sub(self.a2c.validate(), &mut errs),
            AgentKind::Ddpg => sub(self.ddpg.validate(), &mut errs),
        }
        if matches!(self.mode, ScaleMode::Ans) {
            sub(self.ans.validate(), &mut errs);
        }
        if ClipSchedule::new(self.a2c.clip.initial, self.a2c.clip.growth, self.a2c.clip.ceiling).is_err() {
            errs.push("clip: need initial > 0, growth > 1, ceiling >= initial".to_string());
        }
        if matches!(self.mode, ScaleMode::PopArt) {
            let p = &self.popart;
            if !(p.step_size > 0.0 && p.step_size <= 1.0) || !(p.variance_floor > 0.0) {
                errs.push("popart: need 0 < step_size <= 1 and variance_floor > 0".to_string());
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<()> {
        let errs = self.problems();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Config text that parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let hidden = |h: &[usize]| h.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("seed", self.seed.to_string());
        kv("env", self.env.kind.to_string());
        kv("env.magnitude", self.env.magnitude.to_string());
        kv("env.length", self.env.length.to_string());
        kv("env.horizon", self.env.horizon.to_string());
        kv("agent", self.agent.to_string());
        kv("activation", self.activation.to_string());
        kv("mode", self.mode.name().to_string());
        if let ScaleMode::Fixed(c) = self.mode {
            kv("scale", c.to_string());
        }
        kv("frames", self.frames.to_string());
        kv("trials", self.trials.to_string());
        kv("clip.initial", self.a2c.clip.initial.to_string());
        kv("clip.growth", self.a2c.clip.growth.to_string());
        kv("clip.ceiling", self.a2c.clip.ceiling.to_string());
        match self.agent {
            AgentKind::A2c => {
                let a = &self.a2c;
                kv("gamma", a.gamma.to_string());
                kv("hidden", hidden(&a.hidden));
                kv("reset_optimizer_on_scale", a.reset_optimizer_on_scale.to_string());
                kv("a2c.actor_lr", a.actor_lr.to_string());
                kv("a2c.critic_lr", a.critic_lr.to_string());
                kv("a2c.n_envs", a.n_envs.to_string());
                kv("a2c.rollout_len", a.rollout_len.to_string());
                kv("a2c.value_coef", a.value_coef.to_string());
                kv("a2c.entropy_coef", a.entropy_coef.to_string());
                kv("a2c.init_log_std", a.init_log_std.to_string());
                kv("a2c.bootstrap_on_truncation", a.bootstrap_on_truncation.to_string());
            }
            AgentKind::Ddpg => {
                let d = &self.ddpg;
                kv("gamma", d.gamma.to_string());
                kv("hidden", hidden(&d.hidden));
                kv("reset_optimizer_on_scale", d.reset_optimizer_on_scale.to_string());
                kv("ddpg.actor_lr", d.actor_lr.to_string());
                kv("ddpg.critic_lr", d.critic_lr.to_string());
                kv("ddpg.tau", d.tau.to_string());
                kv("ddpg.batch_size", d.batch_size.to_string());
                kv("ddpg.buffer_capacity", d.buffer_capacity.to_string());
                kv("ddpg.warmup", d.warmup.to_string());
                kv("ddpg.noise_std", d.noise_std.to_string());
            }
        }
        kv("ans.tolerance", self.ans.tolerance.to_string());
        kv("ans.c_inc", self.ans.c_inc.to_string());
        kv("ans.c_dec", self.ans.c_dec.to_string());
        kv("ans.beta", self.ans.beta.to_string());
        kv("popart.step_size", self.popart.step_size.to_string());
        kv("popart.variance_floor", self.popart.variance_floor.to_string());
        kv("pdrr.interval", self.pdrr_interval.to_string());
        kv("pdrr.window", self.pdrr_window.to_string());
        if let Some(d) = &self.output_dir {
            kv("output.dir", d.display().to_string());
        }
        kv("output.checkpoint", self.checkpoint.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_text() {
        let c = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert_eq!(c.ans.c_inc, 8.0);
        assert_eq!(c.ans.tolerance, 100);
    }

    #[test]
    fn dotted_keys() {
        let c = ExperimentConfig::parse(
            "env=chain\nenv.magnitude=0.01\nmode=ans\nans.c_inc=4.0\nframes=1000 # short\nhidden=32,32\n",
        )
        .unwrap();
        assert_eq!(c.env.magnitude, 0.01);
        assert_eq!(c.mode, ScaleMode::Ans);
        assert_eq!(c.ans.c_inc, 4.0);
        assert_eq!(c.frames, 1000);
        assert_eq!(c.a2c.hidden, vec![32, 32]);
    }

    #[test]
    fn ddpg_tolerance_default() {
        let c = ExperimentConfig::parse("agent=ddpg\nenv=bandit\n").unwrap();
        assert_eq!(c.ans.tolerance, 50);
    }

    #[test]
    fn all_errors_reported_together() {
        let err = ExperimentConfig::parse("trials=0\nbogus=1\nscale=-2\nans.beta=x\nmode=ans\n").unwrap_err();
        let Error::Config(msgs) = err else { panic!("wrong error kind") };
        let joined = msgs.join("|");
        for needle in ["trials", "bogus", "scale", "ans.beta"] {
            assert!(joined.contains(needle), "{needle} missing from {joined}");
        }
    }

    #[test]
    fn text_round_trip() {
        let c = ExperimentConfig::parse("env=point_mass_2d\nmode=popart\nlr=0.001\nseed=9\noutput.dir=/tmp/x\n").unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
        let d = ExperimentConfig::parse("agent=ddpg\nenv=bandit\nscale=10\n").unwrap();
        assert_eq!(ExperimentConfig::parse(&d.to_text()).unwrap(), d);
    }
}
