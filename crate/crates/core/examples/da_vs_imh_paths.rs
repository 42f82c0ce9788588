//! Data augmentation and the independence sampler on the same data at
//! n = 10^4: lag-1 autocorrelation, acceptance and the first scaled states.

use mixchain::diagnostics::autocorrelation;
use mixchain::model::{moment_estimator, sample_dataset, MixtureFamily, PriorParams};
use mixchain::posterior::posterior_grid;
use mixchain::rng::{stream, tags};
use mixchain::samplers::{ChainRunner, KernelKind, ProposalKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10_000;
    let family = MixtureFamily::location_normal(1.0, 1.0)?;
    let prior = PriorParams::default();
    let ds = sample_dataset(&family, 0.0, n, &mut stream(1, &[tags::DATASET, n as u64, 0]))?;
    let theta_tilde = posterior_grid(&ds, &family, &prior, 4097)?.mean();
    let start = moment_estimator(&ds, &family)?;
    let root_n = (n as f64).sqrt();
    for (k, kernel) in [KernelKind::Da, KernelKind::Imh(ProposalKind::QuasiMoment), KernelKind::Imh(ProposalKind::QuasiShift)]
        .into_iter()
        .enumerate()
    {
        let runner = ChainRunner::new(kernel, &ds, &family, &prior)?;
        let path = runner.run(start, 2000, &mut stream(1, &[tags::CHAIN, k as u64]))?;
        let head: Vec<String> = path.values[..8].iter().map(|t| format!("{:+.2}", root_n * (t - theta_tilde))).collect();
        println!(
            "{kernel:>8}: rho1 {:.3}  acceptance {}  path mean {:.5} (posterior {theta_tilde:.5})",
            autocorrelation(&path.values, 1)?,
            path.acceptance_rate().map_or("-".to_string(), |a| format!("{a:.3}")),
            path.mean()
        );
        println!("          n^1/2 (theta(i) - theta_tilde): {}", head.join(" "));
    }
    Ok(())
}
