use mixchain::diagnostics::{batch_means_se, ks_critical_value, ks_statistic};
use mixchain::model::{moment_estimator, sample_dataset, Dataset, MixtureFamily, PriorParams};
use mixchain::posterior::{posterior_grid, PosteriorGrid};
use mixchain::rng::{stream, tags};
use mixchain::samplers::{da_step, ratio_bound_diagnostic, ChainRunner, KernelKind, ProposalKind};
use rand::Rng;

const SEED: u64 = 9;

fn dataset(family: &MixtureFamily, n: usize, index: u64) -> Dataset {
    sample_dataset(family, 0.0, n, &mut stream(SEED, &[tags::DATASET, n as u64, index])).unwrap()
}

/// Runs `steps` transitions from independent posterior draws and returns the end states.
fn end_states(kernel: KernelKind, family: &MixtureFamily, ds: &Dataset, post: &PosteriorGrid, steps: usize, reps: usize) -> Vec<f64> {
    let prior = PriorParams::default();
    let runner = ChainRunner::new(kernel, ds, family, &prior).unwrap();
    let mut rng = stream(SEED, &[tags::CHAIN, steps as u64]);
    (0..reps)
        .map(|_| {
            let start = post.quantile(rng.random());
            *runner.run(start, steps + 1, &mut rng).unwrap().values.last().unwrap()
        })
        .collect()
}

#[test]
fn da_preserves_the_posterior_in_the_scale_family() {
    let family = MixtureFamily::scale_normal(0.5, 1.0).unwrap();
    let ds = dataset(&family, 20, 0);
    let post = posterior_grid(&ds, &family, &PriorParams::default(), 4097).unwrap();
    let reps = 50_000;
    let ends = end_states(KernelKind::Da, &family, &ds, &post, 3, reps);
    let d = ks_statistic(&ends, |t| post.cdf(t));
    assert!(d < ks_critical_value(reps, 0.01), "KS {d}");
}

#[test]
fn shifted_proposal_chain_preserves_the_posterior() {
    let family = MixtureFamily::location_normal(1.0, 1.0).unwrap();
    let ds = dataset(&family, 20, 1);
    let post = posterior_grid(&ds, &family, &PriorParams::default(), 4097).unwrap();
    let reps = 50_000;
    let ends = end_states(KernelKind::Imh(ProposalKind::QuasiShift), &family, &ds, &post, 2, reps);
    let d = ks_statistic(&ends, |t| post.cdf(t));
    assert!(d < ks_critical_value(reps, 0.01), "KS {d}");
}

#[test]
fn single_da_transition_from_zero_is_a_beta_draw() {
    // from theta = 0 every coin lands tails, so theta' ~ Beta(alpha1, alpha0 + n)
    let family = MixtureFamily::location_normal(1.0, 1.0).unwrap();
    let ds = dataset(&family, 30, 2);
    let prior = PriorParams::new(2.0, 1.5).unwrap();
    let mut rng = stream(SEED, &[40]);
    let reps = 200_000;
    let draws: Vec<f64> = (0..reps).map(|_| da_step(0.0, &ds, &prior, &mut rng)).collect();
    let (a, b) = (2.0, 31.5);
    let mean = draws.iter().sum::<f64>() / reps as f64;
    let var_exact = a * b / ((a + b) * (a + b) * (a + b + 1.0));
    assert!((mean - a / (a + b)).abs() < 4.0 * (var_exact / reps as f64).sqrt());
}

#[test]
fn moment_proposal_chain_mean_and_acceptance() {
    let family = MixtureFamily::location_normal(1.0, 1.0).unwrap();
    let prior = PriorParams::default();
    let ds = dataset(&family, 100, 3);
    let post = posterior_grid(&ds, &family, &prior, 4097).unwrap();
    let runner = ChainRunner::new(KernelKind::Imh(ProposalKind::QuasiMoment), &ds, &family, &prior).unwrap();
    let start = moment_estimator(&ds, &family).unwrap();
    let path = runner.run(start, 100_000, &mut stream(SEED, &[tags::CHAIN, 3])).unwrap();
    assert!(path.acceptance_rate().unwrap() > 0.5);
    let se = batch_means_se(&path.values, 50).unwrap();
    assert!((path.mean() - post.mean()).abs() < 4.0 * se, "{} vs {} (se {se})", path.mean(), post.mean());
}

#[test]
fn moment_proposal_dominates_the_target() {
    let family = MixtureFamily::location_normal(1.0, 1.0).unwrap();
    let prior = PriorParams::default();
    for (k, n) in [20usize, 200, 2000].into_iter().enumerate() {
        let ds = dataset(&family, n, 10 + k as u64);
        let runner = ChainRunner::new(KernelKind::Imh(ProposalKind::QuasiMoment), &ds, &family, &prior).unwrap();
        let bound = ratio_bound_diagnostic(&ds, &family, &prior, runner.proposal().unwrap(), 2000).unwrap();
        assert!(bound.is_finite() && bound >= 1.0 - 1e-9, "n = {n}: {bound}");
    }
}

#[test]
fn replayed_chains_are_identical() {
    let family = MixtureFamily::location_normal(1.0, 1.0).unwrap();
    let prior = PriorParams::default();
    let ds = dataset(&family, 500, 4);
    for kernel in [KernelKind::Da, KernelKind::Imh(ProposalKind::QuasiMoment), KernelKind::Imh(ProposalKind::QuasiShift)] {
        let runner = ChainRunner::new(kernel, &ds, &family, &prior).unwrap();
        let a = runner.run(0.1, 3000, &mut stream(SEED, &[5])).unwrap();
        let b = runner.run(0.1, 3000, &mut stream(SEED, &[5])).unwrap();
        assert_eq!(a, b);
    }
}
