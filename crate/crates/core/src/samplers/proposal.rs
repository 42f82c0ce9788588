//! Quasi-posterior proposals for the independence sampler.
//!
//! * `QuasiShift` replaces the mixture by the shifted family
//!   `q(dx | theta) = F_{eps theta}(dx)` and keeps the Beta prior. Its
//!   posterior has no closed-form sampler, so it is tabulated as a
//!   log-linear density on an adaptive grid and sampled by inverse CDF.
//! * `QuasiMoment` is the normal law closest in Kullback-Leibler divergence
//!   to the mixture: mean `mu_Q = (xbar - F_0 x) / (F_eps x - F_0 x)` and
//!   variance `sigma_Q^2 = sigma_KL^2 / (n (F_eps x - F_0 x)^2)` with
//!   `sigma_KL^2 = (Var_0 + Var_eps) / 2`, truncated to `[0, 1]`.
//!
//! In the local limit `(Z_n, lambda_n mu_Q)` is jointly normal with a
//! correlation governed by `tau^2 = F_0(x - F_0 x)^2 / F_0(x g)^2`; that
//! quantity does not enter any computation here.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Dataset, FamilyKind, MixtureFamily, PriorParams};
use crate::posterior::{posterior_from_excess, DEFAULT_POINTS};
use crate::quadrature::{locate_bulk, LogLinearTable};
use crate::samplers::truncnorm::TruncatedNormal;
use crate::special::xlogy;

/// A proposal density that does not depend on the current state.
pub trait IndependenceProposal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
    /// Normalized log density.
    fn log_density(&self, theta: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalKind {
    QuasiShift,
    QuasiMoment,
}

impl ProposalKind {
    pub fn name(self) -> &'static str {
        match self {
            ProposalKind::QuasiShift => "quasi-shift",
            ProposalKind::QuasiMoment => "quasi-moment",
        }
    }
}

#[derive(Debug, Clone)]
enum Sampler {
    Table(LogLinearTable),
    Normal(TruncatedNormal),
}

#[derive(Debug, Clone)]
pub struct Proposal {
    kind: ProposalKind,
    sampler: Sampler,
}

const COARSE_CELLS: usize = 256;
const FINE_NODES: usize = 4096;
const MAX_FINE_NODES: usize = 1 << 20;
const MEAN_SHIFT_TOL: f64 = 1e-6;

impl Proposal {
    pub fn kind(&self) -> ProposalKind {
        self.kind
    }

    pub fn mean(&self) -> f64 {
        match &self.sampler {
            Sampler::Table(t) => t.mean(),
            Sampler::Normal(t) => t.mean(),
        }
    }

    /// `(mu_Q, sigma_Q^2)` before truncation, for the moment proposal.
    pub fn moment_parameters(&self) -> Option<(f64, f64)> {
        match &self.sampler {
            Sampler::Normal(t) => Some((t.mu(), t.sigma() * t.sigma())),
            Sampler::Table(_) => None,
        }
    }

    /// Number of table nodes for the shift proposal.
    pub fn table_nodes(&self) -> Option<usize> {
        match &self.sampler {
            Sampler::Table(t) => Some(t.nodes().len()),
            Sampler::Normal(_) => None,
        }
    }
}

impl IndependenceProposal for Proposal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.sampler {
            Sampler::Table(t) => t.sample(rng),
            Sampler::Normal(t) => t.sample(rng),
        }
    }

    fn log_density(&self, theta: f64) -> f64 {
        match &self.sampler {
            Sampler::Table(t) => t.log_density(theta),
            Sampler::Normal(t) => t.log_density(theta),
        }
    }
}

pub fn build_proposal(
    kind: ProposalKind,
    ds: &Dataset,
    family: &MixtureFamily,
    prior: &PriorParams,
) -> Result<Proposal> {
    let sampler = match kind {
        ProposalKind::QuasiMoment => Sampler::Normal(quasi_moment(ds, family)?),
        ProposalKind::QuasiShift => Sampler::Table(quasi_shift(ds, family, prior)?),
    };
    Ok(Proposal { kind, sampler })
}

fn quasi_moment(ds: &Dataset, family: &MixtureFamily) -> Result<TruncatedNormal> {
    let m = family.moments().ok_or_else(|| {
        Error::UnsupportedFamily(format!("family `{}` provides no component moments", family.name()))
    })?;
    let gap = m.mean_eps - m.mean0;
    if gap == 0.0 {
        return Err(Error::DegenerateProposal(format!(
            "components of `{}` have equal means; the moment proposal is undefined",
            family.name()
        )));
    }
    let mu = (ds.mean() - m.mean0) / gap;
    let var_kl = 0.5 * (m.var0 + m.var_eps);
    let var = var_kl / (ds.n() as f64 * gap * gap);
    TruncatedNormal::new(mu, var.sqrt(), 0.0, 1.0)
}

/// Log quasi-likelihood ratio `sum_i ln(f_{eps theta}(x_i) / f_0(x_i))`
/// from sufficient statistics.
struct ShiftLikelihood {
    kind: ShiftKind,
    n: f64,
    eps: f64,
    sigma2: f64,
    stat: f64,
}

enum ShiftKind {
    Location,
    Scale,
}

impl ShiftLikelihood {
    fn new(ds: &Dataset, family: &MixtureFamily) -> Result<Self> {
        let sigma2 = family.sigma() * family.sigma();
        let (kind, stat) = match family.kind() {
            FamilyKind::LocationNormal => (ShiftKind::Location, ds.x().iter().sum::<f64>()),
            FamilyKind::ScaleNormal => (ShiftKind::Scale, ds.x().iter().map(|x| x * x).sum::<f64>()),
            FamilyKind::Custom(_) => {
                return Err(Error::UnsupportedFamily(format!(
                    "the shift proposal needs a closed-form F_(eps theta); `{}` has none",
                    family.name()
                )))
            }
        };
        Ok(Self {
            kind,
            n: ds.n() as f64,
            eps: family.eps(),
            sigma2,
            stat,
        })
    }

    fn eval(&self, theta: f64) -> f64 {
        let shift = self.eps * theta;
        match self.kind {
            ShiftKind::Location => (shift * self.stat - 0.5 * self.n * shift * shift) / self.sigma2,
            ShiftKind::Scale => {
                let shrink = 1.0 - shift;
                -self.n * shrink.ln() - 0.5 * self.stat / self.sigma2 * (1.0 / (shrink * shrink) - 1.0)
            }
        }
    }
}

fn quasi_shift(ds: &Dataset, family: &MixtureFamily, prior: &PriorParams) -> Result<LogLinearTable> {
    let like = ShiftLikelihood::new(ds, family)?;
    let (a1, a0) = (prior.alpha1, prior.alpha0);
    let full = |t: f64| like.eval(t) + xlogy(a1 - 1.0, t) + xlogy(a0 - 1.0, 1.0 - t);
    let bounded = |t: f64| like.eval(t) + xlogy((a1 - 1.0).max(0.0), t) + xlogy((a0 - 1.0).max(0.0), 1.0 - t);
    let bulk = locate_bulk(bounded, 0.0, 1.0, 36.0)?;
    let left_power = (a1 != 1.0).then_some(a1);
    let right_power = (a0 != 1.0).then_some(a0);

    let build = |fine: usize| -> Result<LogLinearTable> {
        let mut xs: Vec<f64> = (0..=COARSE_CELLS).map(|k| k as f64 / COARSE_CELLS as f64).collect();
        if bulk.hi > bulk.lo {
            let w = bulk.hi - bulk.lo;
            xs.extend((0..fine).map(|k| bulk.lo + w * k as f64 / (fine - 1) as f64));
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.dedup();
        let ls: Vec<f64> = xs.iter().map(|&t| full(t)).collect();
        LogLinearTable::new(xs, ls, left_power, right_power)
    };

    let mut fine = FINE_NODES;
    let mut table = build(fine)?;
    while fine < MAX_FINE_NODES {
        let refined = build(2 * fine)?;
        let shift = (refined.mean() - table.mean()).abs();
        table = refined;
        fine *= 2;
        if shift < MEAN_SHIFT_TOL {
            break;
        }
    }
    Ok(table)
}

/// Supremum of normalized target over normalized proposal density, on the
/// points `k / grid` (`0 < k < grid`) together with the posterior
/// quadrature nodes. The target is normalized by quadrature.
pub fn ratio_bound_diagnostic<P: IndependenceProposal>(
    ds: &Dataset,
    _family: &MixtureFamily,
    prior: &PriorParams,
    proposal: &P,
    grid: usize,
) -> Result<f64> {
    ratio_bound_from_excess(ds.excess(), ds.lambda(), prior, proposal, grid)
}

fn ratio_bound_from_excess<P: IndependenceProposal>(
    excess: &[f64],
    lambda: f64,
    prior: &PriorParams,
    proposal: &P,
    grid: usize,
) -> Result<f64> {
    if grid < 2 {
        return Err(Error::domain("ratio_bound_diagnostic", format!("grid must be at least 2, got {grid}")));
    }
    let post = posterior_from_excess(excess, lambda, prior, DEFAULT_POINTS)?;
    let log_int = post.log_normalizer() + crate::special::ln_beta(prior.alpha1, prior.alpha0);
    let (a1, a0) = (prior.alpha1, prior.alpha0);
    let log_target = |t: f64| {
        crate::posterior::log_likelihood_ratio(excess, t) + xlogy(a1 - 1.0, t) + xlogy(a0 - 1.0, 1.0 - t) - log_int
    };
    let floor = 1e-12f64.ln();
    let points = (1..grid)
        .map(|k| k as f64 / grid as f64)
        .chain(post.measure().support().iter().copied().filter(|t| *t > 0.0 && *t < 1.0));
    let mut sup = f64::NEG_INFINITY;
    for t in points {
        let lt = log_target(t);
        if lt <= floor {
            continue;
        }
        let lq = proposal.log_density(t);
        if lq == f64::NEG_INFINITY {
            return Err(Error::UnboundedRatio {
                theta: t,
                target: lt.exp(),
            });
        }
        sup = sup.max(lt - lq);
    }
    Ok(sup.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_dataset;
    use crate::rng::stream;

    struct Uniform;

    impl IndependenceProposal for Uniform {
        fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
            rng.random()
        }

        fn log_density(&self, theta: f64) -> f64 {
            if (0.0..=1.0).contains(&theta) {
                0.0
            } else {
                f64::NEG_INFINITY
            }
        }
    }

    #[test]
    fn beta22_against_uniform() {
        let prior = PriorParams::new(2.0, 2.0).unwrap();
        let sup = ratio_bound_from_excess(&[], 1.0, &prior, &Uniform, 1000).unwrap();
        assert!((sup - 1.5).abs() < 1e-9, "{sup}");
    }

    #[test]
    fn tabulated_target_has_unit_ratio() {
        // log-linear interpolation error between table nodes is O(1e-5) here
        let prior = PriorParams::new(2.0, 3.0).unwrap();
        let q = super::LogLinearTable::new(
            (0..=4096).map(|k| k as f64 / 4096.0).collect(),
            (0..=4096).map(|k| {
                let t = k as f64 / 4096.0;
                xlogy(1.0, t) + xlogy(2.0, 1.0 - t)
            }).collect(),
            Some(2.0),
            Some(3.0),
        )
        .unwrap();
        struct T(super::LogLinearTable);
        impl IndependenceProposal for T {
            fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
                self.0.sample(rng)
            }
            fn log_density(&self, theta: f64) -> f64 {
                self.0.log_density(theta)
            }
        }
        let sup = ratio_bound_from_excess(&[], 1.0, &prior, &T(q), 4096).unwrap();
        assert!((sup - 1.0).abs() < 1e-4, "{sup}");
    }

    #[test]
    fn zero_proposal_density_is_unbounded() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let ds = Dataset::from_observations(&fam, vec![0.5; 50]).unwrap();
        let q = TruncatedNormal::new(0.5, 0.1, 0.4, 0.6).unwrap();
        struct N(TruncatedNormal);
        impl IndependenceProposal for N {
            fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
                self.0.sample(rng)
            }
            fn log_density(&self, theta: f64) -> f64 {
                self.0.log_density(theta)
            }
        }
        let err = ratio_bound_diagnostic(&ds, &fam, &PriorParams::default(), &N(q), 100).unwrap_err();
        assert!(matches!(err, Error::UnboundedRatio { .. }));
    }

    #[test]
    fn moment_proposal_ratio_is_moderate() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let mut rng = stream(30, &[]);
        let ds = sample_dataset(&fam, 0.0, 1000, &mut rng).unwrap();
        let prior = PriorParams::default();
        let q = build_proposal(ProposalKind::QuasiMoment, &ds, &fam, &prior).unwrap();
        let sup = ratio_bound_diagnostic(&ds, &fam, &prior, &q, 1000).unwrap();
        assert!(sup.is_finite() && sup >= 1.0 && sup < 1e3, "{sup}");
    }

    #[test]
    fn moment_parameters_at_zero_mean() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let n = 400;
        let ds = Dataset::from_observations(&fam, vec![0.0; n]).unwrap();
        let q = build_proposal(ProposalKind::QuasiMoment, &ds, &fam, &PriorParams::default()).unwrap();
        let (mu, var) = q.moment_parameters().unwrap();
        assert_eq!(mu, 0.0);
        assert!((var - 1.0 / n as f64).abs() < 1e-15);
        // half normal of scale 1/sqrt(n)
        let expected = (2.0 / std::f64::consts::PI).sqrt() / (n as f64).sqrt();
        assert!((q.mean() - expected).abs() < 1e-12);
    }

    #[test]
    fn moment_proposal_rejects_equal_means() {
        let fam = MixtureFamily::scale_normal(0.5, 1.0).unwrap();
        let ds = Dataset::from_observations(&fam, vec![0.1, -0.3]).unwrap();
        assert!(matches!(
            build_proposal(ProposalKind::QuasiMoment, &ds, &fam, &PriorParams::default()),
            Err(Error::DegenerateProposal(_))
        ));
    }

    #[test]
    fn moment_proposal_sample_mean() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let mut rng = stream(6, &[]);
        let ds = sample_dataset(&fam, 0.0, 1000, &mut rng).unwrap();
        let q = build_proposal(ProposalKind::QuasiMoment, &ds, &fam, &PriorParams::default()).unwrap();
        let reps = 1_000_000;
        let draws: Vec<f64> = (0..reps).map(|_| q.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!((mean - q.mean()).abs() < 3.0 * (var / reps as f64).sqrt());
    }

    #[test]
    fn shift_proposal_without_linear_term_is_truncated_gaussian() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let n = 100;
        let ds = Dataset::from_observations(&fam, vec![0.0; n]).unwrap();
        let q = build_proposal(ProposalKind::QuasiShift, &ds, &fam, &PriorParams::default()).unwrap();
        let exact = TruncatedNormal::new(0.0, 0.1, 0.0, 1.0).unwrap();
        assert!((q.mean() - exact.mean()).abs() < 1e-6, "{} vs {}", q.mean(), exact.mean());
        for t in [0.01, 0.1, 0.25] {
            assert!((q.log_density(t) - exact.log_density(t)).abs() < 1e-5);
        }
    }

    #[test]
    fn shift_table_is_normalized() {
        let fam = MixtureFamily::location_normal(0.5, 1.0).unwrap();
        let mut rng = stream(10, &[]);
        let ds = sample_dataset(&fam, 0.3, 500, &mut rng).unwrap();
        for prior in [PriorParams::default(), PriorParams::new(0.5, 2.0).unwrap(), PriorParams::new(3.0, 0.7).unwrap()] {
            let q = build_proposal(ProposalKind::QuasiShift, &ds, &fam, &prior).unwrap();
            let cells = 2_000_000;
            let h = 1.0 / cells as f64;
            let mass: f64 = (0..cells).map(|k| q.log_density((k as f64 + 0.5) * h).exp() * h).sum();
            assert!((mass - 1.0).abs() < 1e-4, "{prior:?}: {mass}");
        }
    }

    #[test]
    fn shift_proposal_scale_family() {
        let fam = MixtureFamily::scale_normal(0.5, 1.0).unwrap();
        let mut rng = stream(12, &[]);
        let ds = sample_dataset(&fam, 0.5, 2000, &mut rng).unwrap();
        let q = build_proposal(ProposalKind::QuasiShift, &ds, &fam, &PriorParams::default()).unwrap();
        assert!(q.mean() > 0.1 && q.mean() < 0.9);
    }
}
