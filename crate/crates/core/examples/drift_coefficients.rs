//! One-step drift, variance and fourth-moment coefficients of the DA kernel on
//! the h scale, next to the diffusion coefficients under both score
//! conventions.

use mixchain::diagnostics::estimate_coefficients;
use mixchain::model::{sample_dataset, MixtureFamily, PriorParams};
use mixchain::rng::{stream, tags};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10_000;
    let family = MixtureFamily::location_normal(1.0, 1.0)?;
    let prior = PriorParams::default();
    let ds = sample_dataset(&family, 0.0, n, &mut stream(1, &[tags::DATASET, n as u64, 0]))?;
    let (z, i_eps) = (ds.local_z(), family.local_information());
    println!("Z_n = {:.4}, Z_eps = {z:.4}, I_eps = {i_eps:.4}", ds.z());
    println!("   h    b_hat (se)        exact drift  limit drift   c_hat (se)       d_hat");
    for (k, h) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let e = estimate_coefficients(h, &ds, &prior, 20_000, &mut stream(1, &[tags::COEFFICIENTS, k as u64]))?;
        println!(
            "{h:4.1}   {:+.3} ({:.3})    {:+.3}       {:+.3}        {:.3} ({:.3})    {:.3}",
            e.b_hat,
            e.se_b,
            prior.alpha1 + h * z - h * h * i_eps,
            prior.alpha1 + h * ds.z() - h * h,
            e.c_hat,
            e.se_c,
            e.d_hat
        );
    }
    Ok(())
}
