//! Draws a dataset from the mixture at theta = 0 and prints its summary
//! statistics. Pass a file name to also write it as CSV.

use mixchain::model::{moment_estimator, sample_dataset, write_dataset_csv, MixtureFamily};
use mixchain::rng::{stream, tags};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 1000;
    let family = MixtureFamily::location_normal(1.0, 1.0)?;
    let ds = sample_dataset(&family, 0.0, n, &mut stream(7, &[tags::DATASET, n as u64, 0]))?;
    println!("n = {}, eps = {}, lambda_n = {:.3}, r_n = {:.3}", ds.n(), ds.eps(), ds.lambda(), ds.rate());
    println!("sample mean {:.4}", ds.mean());
    println!("Z_n (limit score) {:.4}", ds.z());
    println!("Z_eps (exact local score) {:.4}", ds.local_z());
    println!("moment estimator {:.4}", moment_estimator(&ds, &family)?);
    if let Some(path) = std::env::args().nth(1) {
        write_dataset_csv(path.as_ref(), &ds, &["seed=7".to_string(), format!("n={n}")])?;
        println!("wrote {path}");
    }
    Ok(())
}
