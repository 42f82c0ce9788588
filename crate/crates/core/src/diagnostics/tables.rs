//! Standard-error tables of the scaled ergodic-average error
//! `lambda_n (theta_n^(m) - theta_n)` and their scaling fits.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;

use crate::diagnostics::stats::{ls_slope, sd_with_se};
use crate::error::{Error, Result};
use crate::model::{moment_estimator, sample_dataset, write_file, MixtureFamily, PriorParams};
use crate::posterior::{posterior_grid, DEFAULT_POINTS};
use crate::rng::{stream, tags};
use crate::samplers::chain::{header_block, ChainRunner, KernelKind};

/// How the component separation depends on the sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsRule {
    Fixed(f64),
    /// `eps = n^p`.
    NPow(f64),
}

impl EpsRule {
    pub fn eps(&self, n: usize) -> f64 {
        match *self {
            EpsRule::Fixed(e) => e,
            EpsRule::NPow(p) => (n as f64).powf(p),
        }
    }
}

impl fmt::Display for EpsRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsRule::Fixed(e) => write!(f, "{e}"),
            EpsRule::NPow(p) => write!(f, "n_pow:{p}"),
        }
    }
}

impl FromStr for EpsRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |m: String| Error::domain("EpsRule", m);
        if let Some(p) = s.strip_prefix("n_pow:") {
            let p: f64 = p.trim().parse().map_err(|_| bad(format!("bad exponent in `{s}`")))?;
            if !p.is_finite() {
                return Err(bad(format!("exponent must be finite in `{s}`")));
            }
            return Ok(EpsRule::NPow(p));
        }
        let v = s.strip_prefix("fixed:").unwrap_or(s);
        let e: f64 = v.trim().parse().map_err(|_| bad(format!("expected a number or n_pow:P, got `{s}`")))?;
        if !(e > 0.0 && e.is_finite()) {
            return Err(bad(format!("epsilon must be positive, got {e}")));
        }
        Ok(EpsRule::Fixed(e))
    }
}

#[derive(Debug, Clone)]
pub struct SeTableConfig {
    /// Family template; its `eps` is replaced by the rule for each `n`.
    pub family: MixtureFamily,
    pub eps_rule: EpsRule,
    pub n_list: Vec<usize>,
    pub m_list: Vec<usize>,
    /// `None` uses [`default_replications`].
    pub replications: Option<usize>,
    pub kernel: KernelKind,
    pub prior: PriorParams,
    pub theta_true: f64,
    pub seed: u64,
}

/// Smallest replication budget accepted by [`se_table`].
pub const MIN_REPLICATIONS: usize = 100;

/// 1000 replications up to `n = 100`, 200 beyond.
pub fn default_replications(n: usize) -> usize {
    if n <= 100 {
        1000
    } else {
        200
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeCell {
    pub n: usize,
    pub m: usize,
    pub se: f64,
    pub mc_se: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeTable {
    pub cells: Vec<SeCell>,
}

impl SeTable {
    pub fn from_cells(cells: Vec<SeCell>) -> Self {
        Self { cells }
    }

    pub fn get(&self, n: usize, m: usize) -> Option<&SeCell> {
        self.cells.iter().find(|c| c.n == n && c.m == m)
    }

    pub fn n_list(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().map(|c| c.n).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn m_list(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.cells.iter().map(|c| c.m).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = header_block(header);
        out.push_str("n,m,se,mc_se,replications\n");
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{},{}\n", c.n, c.m, c.se, c.mc_se, c.replications));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        write_file(path, self.to_csv(header).as_bytes())
    }
}

/// Scaled errors `lambda_n (theta_n^(m) - theta_n)` of one replication for
/// every `m`, from a fresh dataset and one chain whose prefixes give all
/// columns.
fn replicate(cfg: &SeTableConfig, family: &MixtureFamily, n: usize, rep: u64) -> Result<Vec<f64>> {
    let mut data_rng = stream(cfg.seed, &[tags::DATASET, n as u64, rep]);
    let ds = sample_dataset(family, cfg.theta_true, n, &mut data_rng)?;
    let bayes = posterior_grid(&ds, family, &cfg.prior, DEFAULT_POINTS)?.mean();
    let theta0 = moment_estimator(&ds, family)?;
    let runner = ChainRunner::new(cfg.kernel, &ds, family, &cfg.prior)?;
    let m_max = *cfg.m_list.iter().max().unwrap();
    let mut chain_rng = stream(cfg.seed, &[tags::CHAIN, n as u64, rep]);
    let path = runner.run(theta0, m_max, &mut chain_rng)?;
    let lambda = ds.lambda();
    Ok(path.prefix_means(&cfg.m_list)?.into_iter().map(|avg| lambda * (avg - bayes)).collect())
}

/// Each replication draws a new dataset at `theta_true` and runs a new chain
/// from the moment estimator; a cell is the standard deviation of the scaled
/// error over replications.
pub fn se_table(cfg: &SeTableConfig) -> Result<SeTable> {
    if cfg.n_list.is_empty() || cfg.m_list.is_empty() || cfg.m_list.contains(&0) {
        return Err(Error::domain("se_table", "n_list and m_list must be nonempty, m >= 1"));
    }
    let mut cells = Vec::new();
    for &n in &cfg.n_list {
        let reps = cfg.replications.unwrap_or_else(|| default_replications(n));
        if reps < MIN_REPLICATIONS {
            return Err(Error::domain(
                "se_table",
                format!("need at least {MIN_REPLICATIONS} replications, got {reps}"),
            ));
        }
        let family = cfg.family.with_eps(cfg.eps_rule.eps(n))?;
        let rows: Vec<Vec<f64>> = (0..reps as u64)
            .into_par_iter()
            .map(|r| replicate(cfg, &family, n, r))
            .collect::<Result<_>>()?;
        for (k, &m) in cfg.m_list.iter().enumerate() {
            let column: Vec<f64> = rows.iter().map(|row| row[k]).collect();
            let (se, mc_se) = sd_with_se(&column);
            cells.push(SeCell {
                n,
                m,
                se,
                mc_se,
                replications: reps,
            });
        }
    }
    Ok(SeTable { cells })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    /// `(n, slope of ln SE on ln m)` per row.
    pub slopes: Vec<(usize, f64)>,
    /// `(m, [SE(n_{k+1}) / SE(n_k)])` per column.
    pub ratios: Vec<(usize, Vec<f64>)>,
}

pub fn scaling_fit(table: &SeTable) -> Result<ScalingFit> {
    let mut slopes = Vec::new();
    for n in table.n_list() {
        let (x, y): (Vec<f64>, Vec<f64>) = table
            .cells
            .iter()
            .filter(|c| c.n == n)
            .map(|c| ((c.m as f64).ln(), c.se.ln()))
            .unzip();
        slopes.push((n, ls_slope(&x, &y)?));
    }
    let ns = table.n_list();
    let mut ratios = Vec::new();
    for m in table.m_list() {
        let col: Vec<f64> = ns.iter().filter_map(|&n| table.get(n, m).map(|c| c.se)).collect();
        ratios.push((m, col.windows(2).map(|w| w[1] / w[0]).collect()));
    }
    Ok(ScalingFit { slopes, ratios })
}
