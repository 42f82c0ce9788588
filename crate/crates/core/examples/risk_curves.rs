//! Risk R_m and degeneracy R'_m of both kernels from stationary starts,
//! with i.i.d. posterior draws as the reference.

use mixchain::diagnostics::{risk_curves, RiskOptions, RiskSource};
use mixchain::model::{sample_dataset, MixtureFamily, PriorParams};
use mixchain::rng::{stream, tags};
use mixchain::samplers::{KernelKind, ProposalKind};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10_000;
    let family = MixtureFamily::location_normal(1.0, 1.0)?;
    let prior = PriorParams::default();
    let ds = sample_dataset(&family, 0.0, n, &mut stream(1, &[tags::DATASET, n as u64, 0]))?;
    let ms = [1, 10, 100, 1000, 10_000];
    for (name, source) in [
        ("DA", RiskSource::Kernel(KernelKind::Da)),
        ("MH", RiskSource::Kernel(KernelKind::Imh(ProposalKind::QuasiMoment))),
        ("iid", RiskSource::IidPosterior),
    ] {
        let opts = RiskOptions {
            source,
            chains: 40,
            ..RiskOptions::default()
        };
        let report = risk_curves(&ds, &family, &prior, &ms, &opts, &mut stream(1, &[tags::RISK]))?;
        println!("{name}");
        for k in 0..ms.len() {
            println!("  m={:>6}  R {:.4}  R' {:.4}", report.m[k], report.r[k], report.r_prime[k]);
        }
    }
    Ok(())
}
