//! Plain-text `key=value` experiment configuration.

use std::fmt;
use std::str::FromStr;

use crate::diagnostics::{EpsRule, MIN_REPLICATIONS};
use crate::error::{Error, Result};
use crate::model::{Centering, MixtureFamily, PriorParams};
use crate::samplers::chain::KernelKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Gen,
    Chain,
    Table,
    Coeffs,
    Bvm,
    Lan,
    Diffusion,
    Risk,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Gen,
        Command::Chain,
        Command::Table,
        Command::Coeffs,
        Command::Bvm,
        Command::Lan,
        Command::Diffusion,
        Command::Risk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Chain => "chain",
            Command::Table => "table",
            Command::Coeffs => "coeffs",
            Command::Bvm => "bvm",
            Command::Lan => "lan",
            Command::Diffusion => "diffusion",
            Command::Risk => "risk",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown command `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    Location,
    Scale,
}

impl FromStr for FamilyName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "location" => Ok(FamilyName::Location),
            "scale" => Ok(FamilyName::Scale),
            _ => Err(format!("unknown family `{s}` (expected location or scale)")),
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyName::Location => "location",
            FamilyName::Scale => "scale",
        })
    }
}

/// Initial state of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartRule {
    Moment,
    Proposal,
    Posterior,
}

impl FromStr for StartRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "moment" => Ok(StartRule::Moment),
            "proposal" => Ok(StartRule::Proposal),
            "posterior" => Ok(StartRule::Posterior),
            _ => Err(format!("unknown start `{s}` (expected moment, proposal or posterior)")),
        }
    }
}

impl fmt::Display for StartRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StartRule::Moment => "moment",
            StartRule::Proposal => "proposal",
            StartRule::Posterior => "posterior",
        })
    }
}

/// Initial law of the simulated diffusion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionInit {
    Fixed(f64),
    Posterior,
}

impl FromStr for DiffusionInit {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "posterior" {
            return Ok(DiffusionInit::Posterior);
        }
        let v = s.strip_prefix("fixed:").ok_or_else(|| format!("expected posterior or fixed:H, got `{s}`"))?;
        let h: f64 = v.parse().map_err(|_| format!("bad initial state `{v}`"))?;
        Ok(DiffusionInit::Fixed(h))
    }
}

impl fmt::Display for DiffusionInit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionInit::Fixed(h) => write!(f, "fixed:{h}"),
            DiffusionInit::Posterior => f.write_str("posterior"),
        }
    }
}

fn parse_centering(s: &str) -> std::result::Result<Centering, String> {
    match s {
        "exact" => Ok(Centering::Exact),
        "limit" => Ok(Centering::Limit),
        _ => Err(format!("unknown centering `{s}` (expected exact or limit)")),
    }
}

fn centering_name(c: Centering) -> &'static str {
    match c {
        Centering::Exact => "exact",
        Centering::Limit => "limit",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub family: FamilyName,
    pub sigma: f64,
    pub epsilon: EpsRule,
    pub alpha1: f64,
    pub alpha0: f64,
    pub theta_true: f64,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub replications: Option<usize>,
    pub kernel: KernelKind,
    pub start: StartRule,
    pub emit_scaled: bool,
    pub seed: u64,
    pub grid_size: usize,
    pub cap: f64,
    pub points: usize,
    pub h: Vec<f64>,
    pub reps: usize,
    pub chains: usize,
    pub datasets: usize,
    pub h_max: f64,
    pub lan_grid: usize,
    pub tail_threshold: f64,
    pub centering: Centering,
    pub z: f64,
    pub information: f64,
    pub horizon: f64,
    pub dt: f64,
    pub stride: usize,
    pub init: DiffusionInit,
    /// Output directory; not echoed into output headers.
    pub out: String,
    /// Worker threads; not echoed since results do not depend on it.
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let (n, m) = match command {
            Command::Table => (vec![10, 100, 1000], vec![100, 1000, 10_000, 100_000]),
            Command::Coeffs | Command::Risk => (vec![10_000], vec![10, 100, 1000, 10_000]),
            Command::Bvm | Command::Lan => (vec![100, 1000, 10_000], vec![1]),
            _ => (vec![100], vec![10_000]),
        };
        Self {
            command,
            family: FamilyName::Location,
            sigma: 1.0,
            epsilon: EpsRule::Fixed(1.0),
            alpha1: 1.0,
            alpha0: 1.0,
            theta_true: 0.0,
            n,
            m,
            replications: None,
            kernel: KernelKind::Da,
            start: StartRule::Moment,
            emit_scaled: false,
            seed: 1,
            grid_size: 512,
            cap: 1.0,
            points: 4097,
            h: vec![0.5, 1.0, 2.0],
            reps: 100_000,
            chains: 100,
            datasets: 100,
            h_max: 3.0,
            lan_grid: 301,
            tail_threshold: 10.0,
            centering: Centering::Exact,
            z: 0.0,
            information: 1.0,
            horizon: 100.0,
            dt: 1e-3,
            stride: 10,
            init: DiffusionInit::Posterior,
            out: ".".into(),
            threads: 0,
        }
    }

    /// Family at separation `eps`.
    pub fn family_at(&self, eps: f64) -> Result<MixtureFamily> {
        match self.family {
            FamilyName::Location => MixtureFamily::location_normal(eps, self.sigma),
            FamilyName::Scale => MixtureFamily::scale_normal(eps, self.sigma),
        }
    }

    pub fn family_for_n(&self, n: usize) -> Result<MixtureFamily> {
        self.family_at(self.epsilon.eps(n))
    }

    pub fn prior(&self) -> Result<PriorParams> {
        PriorParams::new(self.alpha1, self.alpha0)
    }

    /// Resolved configuration as `key=value` lines, excluding `out` and
    /// `threads`. Parsing these lines gives back the same configuration.
    pub fn to_lines(&self) -> Vec<String> {
        let list = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let reals = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        vec![
            format!("command={}", self.command),
            format!("family={}", self.family),
            format!("sigma={}", self.sigma),
            format!("epsilon={}", self.epsilon),
            format!("alpha1={}", self.alpha1),
            format!("alpha0={}", self.alpha0),
            format!("theta_true={}", self.theta_true),
            format!("n={}", list(&self.n)),
            format!("m={}", list(&self.m)),
            format!(
                "replications={}",
                self.replications.map_or_else(|| "auto".to_string(), |r| r.to_string())
            ),
            format!("kernel={}", self.kernel),
            format!("start={}", self.start),
            format!("emit_scaled={}", self.emit_scaled),
            format!("seed={}", self.seed),
            format!("grid_size={}", self.grid_size),
            format!("cap={}", self.cap),
            format!("points={}", self.points),
            format!("h={}", reals(&self.h)),
            format!("reps={}", self.reps),
            format!("chains={}", self.chains),
            format!("datasets={}", self.datasets),
            format!("h_max={}", self.h_max),
            format!("lan_grid={}", self.lan_grid),
            format!("tail_threshold={}", self.tail_threshold),
            format!("centering={}", centering_name(self.centering)),
            format!("z={}", self.z),
            format!("information={}", self.information),
            format!("horizon={}", self.horizon),
            format!("dt={}", self.dt),
            format!("stride={}", self.stride),
            format!("init={}", self.init),
        ]
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        let err = |message: String| Error::Parse {
            key: key.to_string(),
            line,
            message,
        };
        fn num<T: FromStr>(value: &str) -> std::result::Result<T, String> {
            value.parse().map_err(|_| format!("cannot parse `{value}`"))
        }
        fn list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
            value.split(',').map(|p| num(p.trim())).collect()
        }
        let r: std::result::Result<(), String> = (|| {
            match key {
                "command" => self.command = value.parse()?,
                "family" => self.family = value.parse()?,
                "sigma" => self.sigma = num(value)?,
                "epsilon" => self.epsilon = value.parse().map_err(|e: Error| e.to_string())?,
                "alpha1" => self.alpha1 = num(value)?,
                "alpha0" => self.alpha0 = num(value)?,
                "theta_true" => self.theta_true = num(value)?,
                "n" => self.n = list(value)?,
                "m" => self.m = list(value)?,
                "replications" => {
                    self.replications = if value == "auto" { None } else { Some(num(value)?) }
                }
                "kernel" => self.kernel = value.parse().map_err(|e: Error| e.to_string())?,
                "start" => self.start = value.parse()?,
                "emit_scaled" => self.emit_scaled = num(value)?,
                "seed" => self.seed = num(value)?,
                "grid_size" => self.grid_size = num(value)?,
                "cap" => self.cap = num(value)?,
                "points" => self.points = num(value)?,
                "h" => self.h = list(value)?,
                "reps" => self.reps = num(value)?,
                "chains" => self.chains = num(value)?,
                "datasets" => self.datasets = num(value)?,
                "h_max" => self.h_max = num(value)?,
                "lan_grid" => self.lan_grid = num(value)?,
                "tail_threshold" => self.tail_threshold = num(value)?,
                "centering" => self.centering = parse_centering(value)?,
                "z" => self.z = num(value)?,
                "information" => self.information = num(value)?,
                "horizon" => self.horizon = num(value)?,
                "dt" => self.dt = num(value)?,
                "stride" => self.stride = num(value)?,
                "init" => self.init = value.parse()?,
                "out" => self.out = value.to_string(),
                "threads" => self.threads = num(value)?,
                _ => return Err("unknown key".to_string()),
            }
            Ok(())
        })();
        r.map_err(err)
    }

    fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| Error::Parse {
            key: key.to_string(),
            line: 0,
            message,
        };
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(bad(key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("sigma", self.sigma)?;
        positive("alpha1", self.alpha1)?;
        positive("alpha0", self.alpha0)?;
        positive("cap", self.cap)?;
        positive("h_max", self.h_max)?;
        positive("tail_threshold", self.tail_threshold)?;
        positive("information", self.information)?;
        positive("horizon", self.horizon)?;
        if !(0.0..=1.0).contains(&self.theta_true) {
            return Err(bad("theta_true", format!("must lie in [0, 1], got {}", self.theta_true)));
        }
        if self.n.is_empty() || self.n.contains(&0) {
            return Err(bad("n", "entries must be at least 1".into()));
        }
        if self.m.is_empty() || self.m.contains(&0) {
            return Err(bad("m", "entries must be at least 1".into()));
        }
        if self.replications.is_some_and(|r| r < MIN_REPLICATIONS) {
            return Err(bad("replications", format!("must be at least {MIN_REPLICATIONS}")));
        }
        if self.grid_size < 2 {
            return Err(bad("grid_size", "must be at least 2".into()));
        }
        if self.points < 64 {
            return Err(bad("points", "must be at least 64".into()));
        }
        if self.h.iter().any(|h| !(*h >= 0.0 && h.is_finite())) {
            return Err(bad("h", "entries must be nonnegative".into()));
        }
        if self.reps < 1000 {
            return Err(bad("reps", "must be at least 1000".into()));
        }
        if self.chains == 0 {
            return Err(bad("chains", "must be at least 1".into()));
        }
        if self.datasets == 0 {
            return Err(bad("datasets", "must be at least 1".into()));
        }
        if self.lan_grid == 0 {
            return Err(bad("lan_grid", "must be at least 1".into()));
        }
        if !self.z.is_finite() {
            return Err(bad("z", "must be finite".into()));
        }
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return Err(bad("dt", format!("must lie in (0, 0.01], got {}", self.dt)));
        }
        if self.stride == 0 {
            return Err(bad("stride", "must be at least 1".into()));
        }
        if let DiffusionInit::Fixed(h) = self.init {
            if !(h >= 0.0 && h.is_finite()) {
                return Err(bad("init", format!("initial state must be nonnegative, got {h}")));
            }
        }
        if self.start == StartRule::Proposal && self.kernel == KernelKind::Da {
            return Err(bad("start", "a proposal draw needs an mh kernel".into()));
        }
        for &n in &self.n {
            self.family_for_n(n).map_err(|e| bad("epsilon", e.to_string()))?;
        }
        Ok(())
    }
}

/// Parses `key=value` lines (`#` starts a comment), then applies the
/// `overrides` in order. `command` fills in the command when the text does
/// not name one; an explicit override wins over both.
pub fn parse_config(text: &str, overrides: &[(String, String)], command: Option<Command>) -> Result<ExperimentConfig> {
    let mut entries = Vec::new();
    let mut file_command = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
            key: line.to_string(),
            line: i + 1,
            message: "expected key=value".into(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        if k == "command" {
            file_command = Some(v.parse::<Command>().map_err(|message| Error::Parse {
                key: k.into(),
                line: i + 1,
                message,
            })?);
        }
        entries.push((k.to_string(), v.to_string(), i + 1));
    }
    let mut override_command = None;
    for (k, v) in overrides {
        if k == "command" {
            override_command = Some(v.parse::<Command>().map_err(|message| Error::Parse {
                key: k.clone(),
                line: 0,
                message,
            })?);
        }
    }
    let command = override_command.or(command).or(file_command).ok_or_else(|| Error::Parse {
        key: "command".into(),
        line: 0,
        message: "missing required key".into(),
    })?;
    let mut cfg = ExperimentConfig::defaults(command);
    for (k, v, line) in &entries {
        cfg.set(k, v, *line)?;
    }
    for (k, v) in overrides {
        cfg.set(k, v, 0)?;
    }
    cfg.command = command;
    cfg.validate()?;
    Ok(cfg)
}

/// Recovers the configuration echoed in an output file's `#` header.
pub fn config_from_header(text: &str) -> Result<ExperimentConfig> {
    let body: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.strip_prefix("# "))
        .filter(|l| l.contains('='))
        .map(|l| format!("{l}\n"))
        .collect();
    parse_config(&body, &[], None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::proposal::ProposalKind;

    #[test]
    fn diffusion_defaults() {
        let cfg = parse_config("", &[], Some(Command::Diffusion)).unwrap();
        assert_eq!((cfg.alpha1, cfg.information, cfg.z, cfg.horizon, cfg.dt), (1.0, 1.0, 0.0, 100.0, 1e-3));
    }

    #[test]
    fn epsilon_power_rule() {
        let cfg = parse_config("epsilon=n_pow:-0.25\n", &[], Some(Command::Table)).unwrap();
        assert_eq!(cfg.epsilon, EpsRule::NPow(-0.25));
        assert!((cfg.family_for_n(10_000).unwrap().eps() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn flags_override_file() {
        let cfg = parse_config("seed=42\n", &[("seed".into(), "7".into())], Some(Command::Chain)).unwrap();
        assert_eq!(cfg.seed, 7);
    }

    #[test]
    fn unknown_and_malformed_keys_name_the_line() {
        match parse_config("seed=1\nwidth=3\n", &[], Some(Command::Gen)) {
            Err(Error::Parse { key, line, .. }) => assert_eq!((key.as_str(), line), ("width", 2)),
            other => panic!("{other:?}"),
        }
        match parse_config("# comment\nn=10,x\n", &[], Some(Command::Gen)) {
            Err(Error::Parse { key, line, .. }) => assert_eq!((key.as_str(), line), ("n", 2)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_config("seed\n", &[], Some(Command::Gen)), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_config("", &[], None), Err(Error::Parse { .. })));
        assert!(parse_config("dt=0.5\n", &[], Some(Command::Diffusion)).is_err());
    }

    #[test]
    fn echo_round_trips() {
        let text = "kernel=mh\nepsilon=n_pow:-0.25\nn=10,100\nm=100,1000\nreplications=300\nh=0.5,1.5\nthreads=4\nout=/tmp/x\n";
        let cfg = parse_config(text, &[], Some(Command::Table)).unwrap();
        assert_eq!(cfg.kernel, KernelKind::Imh(ProposalKind::QuasiMoment));
        let lines = cfg.to_lines();
        assert!(lines.iter().all(|l| !l.starts_with("threads=") && !l.starts_with("out=")));
        let header: String = lines.iter().map(|l| format!("# {l}\n")).collect();
        let back = config_from_header(&format!("# mixchain 0.1.0\n{header}n,m,se\n")).unwrap();
        assert_eq!(back.to_lines(), lines);
        let defaults = ExperimentConfig::defaults(Command::Table);
        assert_eq!((back.threads, back.out.as_str()), (defaults.threads, defaults.out.as_str()));
    }
}
