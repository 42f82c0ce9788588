//! Quadrature posterior of the mixture weight, its h-scale version and the
//! distance to the limiting posterior for growing n.

use mixchain::model::{sample_dataset, Centering, MixtureFamily, PriorParams};
use mixchain::posterior::{bvm_distance, lan_residual, posterior_grid, BvmOptions};
use mixchain::rng::{stream, tags};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let family = MixtureFamily::location_normal(1.0, 1.0)?;
    let prior = PriorParams::default();
    println!("     n   post mean   97.5% q   tail(h>10)   TV to limit   LAN residual");
    for n in [100usize, 1000, 10_000, 100_000] {
        let ds = sample_dataset(&family, 0.0, n, &mut stream(1, &[tags::DATASET, n as u64, 0]))?;
        let post = posterior_grid(&ds, &family, &prior, 4097)?;
        let bvm = bvm_distance(&ds, &family, &prior, &BvmOptions::default())?;
        let lan = lan_residual(&ds, &family, 3.0, 301, Centering::Exact)?;
        println!(
            "{n:>6}   {:.6}   {:.6}   {:.2e}     {:.4}        {:.4}",
            post.mean(),
            post.quantile(0.975),
            bvm.tail,
            bvm.tv,
            lan
        );
    }
    Ok(())
}
