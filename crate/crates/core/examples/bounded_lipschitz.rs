//! Bounded-Lipschitz, total variation and Wasserstein-1 distances between
//! binned samples of two normals as the shift grows.

use mixchain::metrics::{bin_pair, bl_distance, tv_w1, MetricConfig};
use mixchain::rng::stream;
use rand::Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = MetricConfig::default();
    let mut rng = stream(3, &[]);
    let a: Vec<f64> = (0..20_000).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    println!("shift      bl      tv      w1");
    for shift in [0.0, 0.1, 0.5, 1.0, 2.0, 5.0] {
        let b: Vec<f64> = (0..20_000).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect();
        let (mu, nu) = bin_pair(&a, &b, &cfg)?;
        let d = tv_w1(&mu, &nu);
        println!("{shift:5.1}  {:.4}  {:.4}  {:.4}", bl_distance(&mu, &nu, &cfg)?, d.tv, d.w1);
    }
    Ok(())
}
