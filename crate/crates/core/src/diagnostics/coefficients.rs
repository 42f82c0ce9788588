//! One-step moments of the data-augmentation kernel on the local scale.
//!
//! From `h` the chain moves to `h* = lambda_n theta'` with
//! `theta' ~ DA(h / lambda_n)`. With `Delta = h* - h` the rescaled moments
//! `b_n = r_n E[Delta]`, `c_n = r_n E[Delta^2]` and `d_n = r_n E[Delta^4]`
//! converge to the drift, the squared diffusion coefficient and zero.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Dataset, PriorParams};
use crate::rng::stream;
use crate::samplers::da::da_step;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientEstimate {
    pub h: f64,
    pub b_hat: f64,
    pub c_hat: f64,
    pub d_hat: f64,
    pub se_b: f64,
    pub se_c: f64,
    pub se_d: f64,
    pub reps: usize,
}

impl CoefficientEstimate {
    pub const CSV_HEADER: &'static str = "h,b_hat,se_b,c_hat,se_c,d_hat,se_d,reps";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.h, self.b_hat, self.se_b, self.c_hat, self.se_c, self.d_hat, self.se_d, self.reps
        )
    }
}

const MIN_REPS: usize = 1000;

/// Monte Carlo estimates from `reps` independent DA transitions out of
/// `theta = h / lambda_n`. Each transition uses its own stream derived from
/// one draw of `rng`, so the result does not depend on the thread count.
pub fn estimate_coefficients<R: Rng + ?Sized>(
    h: f64,
    ds: &Dataset,
    prior: &PriorParams,
    reps: usize,
    rng: &mut R,
) -> Result<CoefficientEstimate> {
    let lambda = ds.lambda();
    let theta = h / lambda;
    if !(h >= 0.0 && theta <= 1.0) {
        return Err(Error::domain(
            "estimate_coefficients",
            format!("h = {h} outside [0, lambda_n = {lambda}]"),
        ));
    }
    if reps < MIN_REPS {
        return Err(Error::domain(
            "estimate_coefficients",
            format!("reps must be at least {MIN_REPS}, got {reps}"),
        ));
    }
    let key: u64 = rng.random();
    let jumps: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|k| {
            let mut r = stream(key, &[k]);
            lambda * da_step(theta, ds, prior, &mut r) - h
        })
        .collect();
    let rate = ds.rate();
    let moment = |p: i32| {
        let vals: Vec<f64> = jumps.iter().map(|d| rate * d.powi(p)).collect();
        let m = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (reps as f64 - 1.0);
        (m, (var / reps as f64).sqrt())
    };
    let (b_hat, se_b) = moment(1);
    let (c_hat, se_c) = moment(2);
    let (d_hat, se_d) = moment(4);
    Ok(CoefficientEstimate {
        h,
        b_hat,
        c_hat,
        d_hat,
        se_b,
        se_c,
        se_d,
        reps,
    })
}

/// Exact `(b_n(0), c_n(0), d_n(0))`: from `h = 0` every coin lands tails and
/// `theta' ~ Beta(alpha1, alpha0 + n)`, so the moments are Beta raw moments.
pub fn coefficients_at_zero(n: usize, lambda: f64, prior: &PriorParams) -> (f64, f64, f64) {
    let (a, b) = (prior.alpha1, prior.alpha0 + n as f64);
    let raw = |k: usize| (0..k).map(|j| (a + j as f64) / (a + b + j as f64)).product::<f64>();
    let rate = n as f64 / lambda;
    (
        rate * lambda * raw(1),
        rate * lambda.powi(2) * raw(2),
        rate * lambda.powi(4) * raw(4),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_dataset, MixtureFamily};

    fn dataset(n: usize, seed: u64) -> Dataset {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        sample_dataset(&fam, 0.0, n, &mut stream(seed, &[n as u64])).unwrap()
    }

    #[test]
    fn closed_form_at_zero() {
        let n = 10_000;
        let (b, c, _) = coefficients_at_zero(n, 100.0, &PriorParams::default());
        assert!((b - n as f64 / (n as f64 + 2.0)).abs() < 1e-12);
        assert!((b - 0.9998).abs() < 1e-4);
        let expected_c = 2.0 * n as f64 * 100.0 / ((n as f64 + 2.0) * (n as f64 + 3.0));
        assert!((c - expected_c).abs() < 1e-12);
    }

    #[test]
    fn estimate_matches_closed_form_at_zero() {
        let ds = dataset(400, 1);
        let prior = PriorParams::new(1.5, 2.0).unwrap();
        let est = estimate_coefficients(0.0, &ds, &prior, 20_000, &mut stream(2, &[])).unwrap();
        let (b, c, d) = coefficients_at_zero(ds.n(), ds.lambda(), &prior);
        assert!((est.b_hat - b).abs() < 3.5 * est.se_b, "{} vs {b}", est.b_hat);
        assert!((est.c_hat - c).abs() < 3.5 * est.se_c, "{} vs {c}", est.c_hat);
        assert!((est.d_hat - d).abs() < 3.5 * est.se_d, "{} vs {d}", est.d_hat);
    }

    #[test]
    fn rejects_out_of_range_h_and_few_reps() {
        let ds = dataset(100, 3);
        let prior = PriorParams::default();
        assert!(estimate_coefficients(11.0, &ds, &prior, 1000, &mut stream(0, &[])).is_err());
        assert!(estimate_coefficients(1.0, &ds, &prior, 10, &mut stream(0, &[])).is_err());
    }

    #[test]
    fn seeded_estimates_repeat() {
        let ds = dataset(100, 4);
        let prior = PriorParams::default();
        let a = estimate_coefficients(1.0, &ds, &prior, 2000, &mut stream(7, &[])).unwrap();
        let b = estimate_coefficients(1.0, &ds, &prior, 2000, &mut stream(7, &[])).unwrap();
        assert_eq!(a, b);
    }
}
