use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{check_theta, write_file, Dataset, MixtureFamily, PriorParams};
use crate::posterior::log_likelihood_ratio;
use crate::samplers::da::da_step;
use crate::samplers::imh::ImhState;
use crate::samplers::proposal::{build_proposal, Proposal, ProposalKind};
use crate::special::xlogy;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Da,
    Imh(ProposalKind),
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelKind::Da => write!(f, "da"),
            KernelKind::Imh(ProposalKind::QuasiMoment) => write!(f, "mh"),
            KernelKind::Imh(ProposalKind::QuasiShift) => write!(f, "mh-shift"),
        }
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "da" => Ok(KernelKind::Da),
            "mh" | "mh-moment" | "imh" => Ok(KernelKind::Imh(ProposalKind::QuasiMoment)),
            "mh-shift" => Ok(KernelKind::Imh(ProposalKind::QuasiShift)),
            other => Err(Error::domain(
                "KernelKind",
                format!("unknown kernel `{other}` (expected da, mh, mh-moment or mh-shift)"),
            )),
        }
    }
}

/// Unnormalized log posterior `sum ln(1 + theta (s_i - 1)) + Beta kernel`.
pub fn log_posterior_kernel<'a>(ds: &'a Dataset, prior: &PriorParams) -> impl Fn(f64) -> f64 + 'a {
    let (a1, a0) = (prior.alpha1, prior.alpha0);
    move |theta: f64| {
        if !(0.0..=1.0).contains(&theta) {
            return f64::NEG_INFINITY;
        }
        log_likelihood_ratio(ds.excess(), theta) + xlogy(a1 - 1.0, theta) + xlogy(a0 - 1.0, 1.0 - theta)
    }
}

/// A finite trajectory `theta(0), ..., theta(m - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    pub values: Vec<f64>,
    pub kernel: KernelKind,
    pub seed: Option<u64>,
    /// Accepted proposals (independence kernels only).
    pub accepted: Option<usize>,
    pub n: usize,
    pub eps: f64,
    pub lambda: f64,
}

impl ChainPath {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Means of the first `m` states for each requested `m`.
    pub fn prefix_means(&self, ms: &[usize]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(ms.len());
        for &m in ms {
            if m == 0 || m > self.values.len() {
                return Err(Error::domain(
                    "prefix_means",
                    format!("prefix length {m} outside 1..={}", self.values.len()),
                ));
            }
            out.push(self.values[..m].iter().sum::<f64>() / m as f64);
        }
        Ok(out)
    }

    /// Fraction of accepted proposals over the `m - 1` transitions.
    pub fn acceptance_rate(&self) -> Option<f64> {
        let steps = self.values.len().saturating_sub(1);
        self.accepted.map(|a| if steps == 0 { 0.0 } else { a as f64 / steps as f64 })
    }

    /// `lambda_n theta(i)` for every state.
    pub fn scaled_states(&self) -> Vec<f64> {
        self.values.iter().map(|t| t * self.lambda).collect()
    }

    pub fn metadata(&self) -> Vec<String> {
        let mut lines = vec![
            format!("kernel={}", self.kernel),
            format!("n={}", self.n),
            format!("eps={}", self.eps),
            format!("lambda={}", self.lambda),
            format!("length={}", self.values.len()),
        ];
        if let Some(seed) = self.seed {
            lines.push(format!("seed={seed}"));
        }
        if let Some(a) = self.accepted {
            lines.push(format!("accepted={a}"));
        }
        lines
    }

    /// Rows `iter,theta`.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = header_block(header);
        out.push_str("iter,theta\n");
        for (i, t) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{t}\n"));
        }
        out
    }

    /// Rows `iter,scaled` with `scaled = n^{1/2} (theta(i) - theta_tilde)`.
    pub fn scaled_csv(&self, theta_tilde: f64, header: &[String]) -> String {
        let root_n = (self.n as f64).sqrt();
        let mut out = header_block(header);
        out.push_str("iter,scaled\n");
        for (i, t) in self.values.iter().enumerate() {
            out.push_str(&format!("{i},{}\n", root_n * (t - theta_tilde)));
        }
        out
    }

    /// Writes the path CSV and a `key=value` sidecar next to it.
    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        write_file(path, self.to_csv(header).as_bytes())?;
        let mut meta = self.metadata().join("\n");
        meta.push('\n');
        write_file(&path.with_extension("meta"), meta.as_bytes())
    }
}

pub(crate) fn header_block(header: &[String]) -> String {
    let mut out = String::new();
    for line in header {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

/// A kernel bound to a dataset, with any proposal built once.
pub struct ChainRunner<'a> {
    kernel: KernelKind,
    ds: &'a Dataset,
    prior: PriorParams,
    proposal: Option<Proposal>,
}

impl<'a> ChainRunner<'a> {
    pub fn new(kernel: KernelKind, ds: &'a Dataset, family: &MixtureFamily, prior: &PriorParams) -> Result<Self> {
        let proposal = match kernel {
            KernelKind::Da => None,
            KernelKind::Imh(kind) => Some(build_proposal(kind, ds, family, prior)?),
        };
        Ok(Self {
            kernel,
            ds,
            prior: *prior,
            proposal,
        })
    }

    pub fn proposal(&self) -> Option<&Proposal> {
        self.proposal.as_ref()
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    pub fn run<R: Rng + ?Sized>(&self, theta0: f64, m: usize, rng: &mut R) -> Result<ChainPath> {
        if m == 0 {
            return Err(Error::domain("run_chain", "chain length m must be at least 1"));
        }
        check_theta("run_chain", theta0)?;
        let mut values = Vec::with_capacity(m);
        values.push(theta0);
        let mut accepted = None;
        match &self.proposal {
            None => {
                let mut theta = theta0;
                for _ in 1..m {
                    theta = da_step(theta, self.ds, &self.prior, rng);
                    values.push(theta);
                }
            }
            Some(q) => {
                let target = log_posterior_kernel(self.ds, &self.prior);
                let mut state = ImhState::new(theta0, &target, q)?;
                let mut count = 0;
                for _ in 1..m {
                    count += usize::from(state.step(&target, q, rng)?);
                    values.push(state.theta);
                }
                accepted = Some(count);
            }
        }
        Ok(ChainPath {
            values,
            kernel: self.kernel,
            seed: None,
            accepted,
            n: self.ds.n(),
            eps: self.ds.eps(),
            lambda: self.ds.lambda(),
        })
    }
}

pub fn run_chain<R: Rng + ?Sized>(
    kernel: KernelKind,
    theta0: f64,
    m: usize,
    ds: &Dataset,
    family: &MixtureFamily,
    prior: &PriorParams,
    rng: &mut R,
) -> Result<ChainPath> {
    ChainRunner::new(kernel, ds, family, prior)?.run(theta0, m, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_dataset;
    use crate::rng::stream;

    fn setup(n: usize) -> (MixtureFamily, Dataset) {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let mut rng = stream(21, &[n as u64]);
        let ds = sample_dataset(&fam, 0.0, n, &mut rng).unwrap();
        (fam, ds)
    }

    #[test]
    fn length_one_is_the_start() {
        let (fam, ds) = setup(50);
        for kernel in [KernelKind::Da, KernelKind::Imh(ProposalKind::QuasiMoment)] {
            let path = run_chain(kernel, 0.25, 1, &ds, &fam, &PriorParams::default(), &mut stream(0, &[])).unwrap();
            assert_eq!(path.values, vec![0.25]);
        }
    }

    #[test]
    fn paths_stay_in_unit_interval() {
        let (fam, ds) = setup(200);
        for kernel in [
            KernelKind::Da,
            KernelKind::Imh(ProposalKind::QuasiMoment),
            KernelKind::Imh(ProposalKind::QuasiShift),
        ] {
            let path = run_chain(kernel, 0.5, 2000, &ds, &fam, &PriorParams::default(), &mut stream(1, &[])).unwrap();
            assert!(path.values.iter().all(|t| (0.0..=1.0).contains(t)));
            if kernel == KernelKind::Da {
                assert!(path.values[1..].iter().all(|t| *t > 0.0 && *t < 1.0));
            } else {
                assert!(path.accepted.unwrap() <= path.len());
            }
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let (fam, ds) = setup(100);
        let kernel = KernelKind::Imh(ProposalKind::QuasiMoment);
        let a = run_chain(kernel, 0.1, 500, &ds, &fam, &PriorParams::default(), &mut stream(5, &[1])).unwrap();
        let b = run_chain(kernel, 0.1, 500, &ds, &fam, &PriorParams::default(), &mut stream(5, &[1])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn kernel_names_round_trip() {
        for k in [KernelKind::Da, KernelKind::Imh(ProposalKind::QuasiMoment), KernelKind::Imh(ProposalKind::QuasiShift)] {
            assert_eq!(k.to_string().parse::<KernelKind>().unwrap(), k);
        }
        assert!("gibbs".parse::<KernelKind>().is_err());
    }

    #[test]
    fn prefix_means_and_csv() {
        let path = ChainPath {
            values: vec![0.1, 0.3, 0.5],
            kernel: KernelKind::Da,
            seed: Some(3),
            accepted: None,
            n: 4,
            eps: 1.0,
            lambda: 2.0,
        };
        let pm = path.prefix_means(&[1, 2, 3]).unwrap();
        assert!((pm[1] - 0.2).abs() < 1e-15 && (pm[2] - 0.3).abs() < 1e-15);
        assert!(path.prefix_means(&[4]).is_err());
        let csv = path.scaled_csv(0.3, &[]);
        assert_eq!(csv.lines().nth(1).unwrap(), "0,-0.39999999999999997");
    }
}
