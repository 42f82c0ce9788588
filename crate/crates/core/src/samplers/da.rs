use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::model::{Dataset, PriorParams};

/// Head probability of the latent coin for an observation with ratio `s`.
pub fn coin_probability(theta: f64, s: f64) -> f64 {
    let num = theta * s;
    num / (1.0 - theta + num)
}

/// Number of observations assigned to `F_eps` in one augmentation sweep.
pub fn draw_allocations<R: Rng + ?Sized>(theta: f64, ratios: &[f64], rng: &mut R) -> usize {
    if theta <= 0.0 {
        return 0;
    }
    if theta >= 1.0 {
        return ratios.len();
    }
    let tail = 1.0 - theta;
    let mut heads = 0;
    for &s in ratios {
        let num = theta * s;
        // u < num / (tail + num) without the division
        let u: f64 = rng.random();
        heads += usize::from(u * (tail + num) < num);
    }
    heads
}

/// One data-augmentation update: allocate every observation to a component,
/// then draw `theta ~ Beta(alpha1 + n1, alpha0 + n - n1)`.
pub fn da_step<R: Rng + ?Sized>(theta: f64, ds: &Dataset, prior: &PriorParams, rng: &mut R) -> f64 {
    let n1 = draw_allocations(theta, ds.ratios(), rng);
    beta_draw(prior.alpha1 + n1 as f64, prior.alpha0 + (ds.n() - n1) as f64, rng)
}

pub(crate) fn beta_draw<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    // shapes are positive by construction of PriorParams
    Beta::new(a, b).expect("positive Beta shapes").sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MixtureFamily;
    use crate::rng::stream;

    #[test]
    fn zero_forces_all_tails() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let mut rng = stream(1, &[0]);
        let ds = crate::model::sample_dataset(&fam, 0.0, 20, &mut rng).unwrap();
        let prior = PriorParams::default();
        let reps = 100_000;
        let draws: Vec<f64> = (0..reps).map(|_| da_step(0.0, &ds, &prior, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / reps as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let expected = 1.0 / 22.0;
        assert!((mean - expected).abs() < 3.0 * (var / reps as f64).sqrt());
        assert!(draws.iter().all(|d| *d > 0.0 && *d < 1.0));
    }

    #[test]
    fn identical_components_give_theta() {
        for theta in [0.0, 0.13, 0.5, 1.0] {
            assert_eq!(coin_probability(theta, 1.0), theta);
        }
        assert_eq!(draw_allocations(1.0, &[0.3, 2.0], &mut stream(0, &[])), 2);
    }

    #[test]
    fn three_point_poisson_binomial() {
        let ratios = [0.4, 1.0, 3.5];
        let theta = 0.5;
        let p: Vec<f64> = ratios.iter().map(|&s| coin_probability(theta, s)).collect();
        // hand evaluation: 0.2/0.7, 0.5, 1.75/2.25
        let hand = [0.2 / 0.7, 0.5, 1.75 / 2.25];
        for (a, b) in p.iter().zip(hand) {
            assert!((a - b).abs() < 1e-12);
        }
        // exhaustive enumeration over 2^3 outcomes
        let mut exact = [0.0; 4];
        for mask in 0..8u32 {
            let mut prob = 1.0;
            for (i, pi) in p.iter().enumerate() {
                prob *= if mask & (1 << i) != 0 { *pi } else { 1.0 - pi };
            }
            exact[mask.count_ones() as usize] += prob;
        }
        let reps = 1_000_000;
        let mut counts = [0usize; 4];
        let mut rng = stream(3, &[]);
        for _ in 0..reps {
            counts[draw_allocations(theta, &ratios, &mut rng)] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(exact)
            .map(|(&c, e)| {
                let expected = e * reps as f64;
                (c as f64 - expected).powi(2) / expected
            })
            .sum();
        // chi-square with 3 degrees of freedom, 0.99 quantile
        assert!(chi2 < 11.345, "chi2 = {chi2}");
    }
}
