//! Compares the occupation measure of a Poisson-embedded DA chain with that of
//! the limiting diffusion and with the stationary law.

use mixchain::diffusion::{
    occupation_measure, poisson_embed, simulate_sde, steps_for_horizon, Clock, DiffusionSpec, SdeInit, SdeOptions,
};
use mixchain::metrics::{bl_distance, MetricConfig};
use mixchain::model::{sample_dataset, MixtureFamily, PriorParams};
use mixchain::posterior::{limit_posterior, posterior_grid};
use mixchain::rng::{stream, tags};
use mixchain::samplers::{ChainRunner, KernelKind};
use rand::Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10_000;
    let horizon = 200.0;
    let metric = MetricConfig::default();
    let family = MixtureFamily::location_normal(1.0, 1.0)?;
    let prior = PriorParams::default();
    let ds = sample_dataset(&family, 0.0, n, &mut stream(5, &[tags::DATASET, n as u64, 0]))?;
    let post = posterior_grid(&ds, &family, &prior, 4097)?;

    let start = post.quantile(stream(5, &[tags::START]).random());
    let chain = ChainRunner::new(KernelKind::Da, &ds, &family, &prior)?.run(
        start,
        steps_for_horizon(ds.rate(), horizon),
        &mut stream(5, &[tags::CHAIN]),
    )?;
    let jump = poisson_embed(&chain, ds.rate(), ds.lambda(), Clock::Poisson, &mut stream(5, &[tags::CLOCK]))?;
    let chain_occ = occupation_measure(&jump, horizon, &metric)?;

    let spec = DiffusionSpec::new(ds.local_z(), prior.alpha1, family.local_information())?;
    let opts = SdeOptions {
        horizon,
        ..SdeOptions::default()
    };
    let sde = simulate_sde(&spec, SdeInit::LimitPosterior, &opts, &mut stream(5, &[tags::SDE]))?;
    let sde_occ = occupation_measure(&sde, horizon, &metric)?;
    let limit = limit_posterior(spec.z, spec.information, spec.alpha1, 4097)?;

    println!("Z = {:.4}, I = {:.4}, r_n = {:.1}, chain length {}", spec.z, spec.information, ds.rate(), chain.len());
    println!("bl(chain, diffusion)  {:.4}", bl_distance(&chain_occ, &sde_occ, &metric)?);
    println!("bl(chain, limit law)  {:.4}", bl_distance(&chain_occ, limit.measure(), &metric)?);
    println!("bl(diffusion, limit)  {:.4}", bl_distance(&sde_occ, limit.measure(), &metric)?);
    println!("means: chain {:.4}, diffusion {:.4}, limit {:.4}", chain_occ.mean(), sde.time_average, limit.mean());
    Ok(())
}
