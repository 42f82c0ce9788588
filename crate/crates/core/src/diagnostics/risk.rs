//! Monte Carlo estimates of the bounded-Lipschitz risk `R_m` of the
//! `m`-step empirical measure against the posterior, and of its
//! degeneracy `R'_m` against the initial point, both on the `h` scale.

use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::diagnostics::stats::{mean, variance};
use crate::error::{Error, Result};
use crate::metrics::{bin_samples, bl_distance, GridMeasure, MetricConfig};
use crate::model::{write_file, Dataset, MixtureFamily, PriorParams};
use crate::posterior::{posterior_grid, DEFAULT_POINTS};
use crate::rng::stream;
use crate::samplers::chain::{header_block, ChainRunner, KernelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskSource {
    Kernel(KernelKind),
    /// Independent draws from the posterior, the `m^{-1/2}` control.
    IidPosterior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskOptions {
    pub source: RiskSource,
    pub chains: usize,
    pub metric: MetricConfig,
}

impl Default for RiskOptions {
    fn default() -> Self {
        Self {
            source: RiskSource::Kernel(KernelKind::Da),
            chains: 100,
            metric: MetricConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub m: Vec<usize>,
    pub r: Vec<f64>,
    pub r_prime: Vec<f64>,
    pub se_r: Vec<f64>,
    pub se_r_prime: Vec<f64>,
    pub chains: usize,
}

impl RiskReport {
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = header_block(header);
        out.push_str("m,R,Rprime,se_R,se_Rprime\n");
        for k in 0..self.m.len() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                self.m[k], self.r[k], self.r_prime[k], self.se_r[k], self.se_r_prime[k]
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        write_file(path, self.to_csv(header).as_bytes())
    }
}

/// Averages over `opts.chains` stationary chains (started from a posterior
/// draw) of `w(e_m*, Pi_n*)` and `w(e_m*, e_1*)` for every `m` in `m_list`.
pub fn risk_curves<R: Rng + ?Sized>(
    ds: &Dataset,
    family: &MixtureFamily,
    prior: &PriorParams,
    m_list: &[usize],
    opts: &RiskOptions,
    rng: &mut R,
) -> Result<RiskReport> {
    if opts.chains == 0 {
        return Err(Error::domain("risk_curves", "chains must be at least 1"));
    }
    if m_list.is_empty() || m_list.contains(&0) {
        return Err(Error::domain("risk_curves", "m_list must be nonempty with entries at least 1"));
    }
    opts.metric.validate()?;
    let post = posterior_grid(ds, family, prior, DEFAULT_POINTS)?;
    let target = post.to_h_scale();
    let lambda = ds.lambda();
    let m_max = *m_list.iter().max().unwrap();
    let runner = match opts.source {
        RiskSource::Kernel(kernel) => Some(ChainRunner::new(kernel, ds, family, prior)?),
        RiskSource::IidPosterior => None,
    };
    let key: u64 = rng.random();
    let per_chain: Vec<Result<Vec<(f64, f64)>>> = (0..opts.chains as u64)
        .into_par_iter()
        .map(|c| {
            let mut r = stream(key, &[c]);
            let theta0 = post.quantile(r.random());
            let values = match &runner {
                Some(runner) => runner.run(theta0, m_max, &mut r)?.values,
                None => {
                    let mut v = Vec::with_capacity(m_max);
                    v.push(theta0);
                    v.extend((1..m_max).map(|_| post.quantile(r.random())));
                    v
                }
            };
            let scaled: Vec<f64> = values.iter().map(|t| lambda * t).collect();
            let start = GridMeasure::dirac(scaled[0])?;
            m_list
                .iter()
                .map(|&m| {
                    let e_m = bin_samples(&scaled[..m], &opts.metric)?;
                    Ok((
                        bl_distance(&e_m, target.measure(), &opts.metric)?,
                        bl_distance(&e_m, &start, &opts.metric)?,
                    ))
                })
                .collect()
        })
        .collect();
    let per_chain: Vec<Vec<(f64, f64)>> = per_chain.into_iter().collect::<Result<_>>()?;
    let summarize = |k: usize, pick: fn(&(f64, f64)) -> f64| {
        let xs: Vec<f64> = per_chain.iter().map(|row| pick(&row[k])).collect();
        let se = if xs.len() > 1 { (variance(&xs) / xs.len() as f64).sqrt() } else { 0.0 };
        (mean(&xs), se)
    };
    let mut report = RiskReport {
        m: m_list.to_vec(),
        r: Vec::new(),
        r_prime: Vec::new(),
        se_r: Vec::new(),
        se_r_prime: Vec::new(),
        chains: opts.chains,
    };
    for k in 0..m_list.len() {
        let (r, se_r) = summarize(k, |p| p.0);
        let (rp, se_rp) = summarize(k, |p| p.1);
        report.r.push(r);
        report.se_r.push(se_r);
        report.r_prime.push(rp);
        report.se_r_prime.push(se_rp);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::stats::ls_slope;
    use crate::model::sample_dataset;

    #[test]
    fn single_step_has_no_spread() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let ds = sample_dataset(&fam, 0.0, 200, &mut stream(1, &[])).unwrap();
        let opts = RiskOptions {
            chains: 5,
            ..RiskOptions::default()
        };
        let rep = risk_curves(&ds, &fam, &PriorParams::default(), &[1, 10], &opts, &mut stream(2, &[])).unwrap();
        assert_eq!(rep.r_prime[0], 0.0);
        assert!(rep.r.iter().chain(&rep.r_prime).all(|v| (0.0..=2.0).contains(v)));
        assert!(rep.to_csv(&[]).starts_with("m,R,Rprime,se_R,se_Rprime\n1,"));
    }

    #[test]
    fn iid_control_decays_at_root_m() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let ds = sample_dataset(&fam, 0.0, 1000, &mut stream(3, &[])).unwrap();
        let opts = RiskOptions {
            source: RiskSource::IidPosterior,
            chains: 200,
            metric: MetricConfig::default(),
        };
        let ms = [16, 64, 256, 1024];
        let rep = risk_curves(&ds, &fam, &PriorParams::default(), &ms, &opts, &mut stream(4, &[])).unwrap();
        let x: Vec<f64> = ms.iter().map(|m| (*m as f64).ln()).collect();
        let y: Vec<f64> = rep.r.iter().map(|r| r.ln()).collect();
        let slope = ls_slope(&x, &y).unwrap();
        assert!((slope + 0.5).abs() < 0.07, "{slope}");
    }
}
