//! Small summary statistics for chain output.

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    }
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Sample standard deviation and its delta-method standard error
/// `sqrt((m4 - s^4) / R) / (2 s)`.
pub fn sd_with_se(xs: &[f64]) -> (f64, f64) {
    let r = xs.len() as f64;
    let m = mean(xs);
    let s2 = variance(xs);
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / r;
    let s = s2.sqrt();
    let se = if s > 0.0 { ((m4 - s2 * s2).max(0.0) / r).sqrt() / (2.0 * s) } else { 0.0 };
    (s, se)
}

/// Lag-`lag` sample autocorrelation with the usual `1/n` normalization.
pub fn autocorrelation(values: &[f64], lag: usize) -> Result<f64> {
    let n = values.len();
    if lag >= n {
        return Err(Error::domain("autocorrelation", format!("lag {lag} not below length {n}")));
    }
    let m = mean(values);
    let denom: f64 = values.iter().map(|x| (x - m) * (x - m)).sum();
    if values.iter().all(|x| *x == values[0]) || !(denom > 0.0) {
        return Err(Error::UndefinedVariance("autocorrelation of a constant path".into()));
    }
    let num: f64 = values.windows(lag + 1).map(|w| (w[0] - m) * (w[lag] - m)).sum();
    Ok(num / denom)
}

/// Batch-means standard error of the sample mean with `batches` equal batches
/// (a trailing remainder is dropped).
pub fn batch_means_se(values: &[f64], batches: usize) -> Result<f64> {
    if batches < 2 || values.len() < batches {
        return Err(Error::domain(
            "batch_means_se",
            format!("need at least 2 batches and one value per batch, got {batches} for {}", values.len()),
        ));
    }
    let size = values.len() / batches;
    let means: Vec<f64> = values.chunks_exact(size).take(batches).map(mean).collect();
    Ok((variance(&means) / batches as f64).sqrt())
}

/// Kolmogorov-Smirnov statistic `sup |F_n - F|` of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical value of the one-sample KS statistic at level `alpha`.
pub fn ks_critical_value(n: usize, alpha: f64) -> f64 {
    (-(0.5 * alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Least-squares slope of `y` on `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("ls_slope", format!("need two or more points, got {}", x.len())));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::domain("ls_slope", "abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn iid_autocorrelation_is_small() {
        let mut rng = stream(9, &[]);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
        assert!(autocorrelation(&xs, 1).unwrap().abs() < 0.01);
    }

    #[test]
    fn constant_path_has_no_autocorrelation() {
        assert!(matches!(autocorrelation(&[0.3; 10], 1), Err(Error::UndefinedVariance(_))));
        assert!(autocorrelation(&[0.1, 0.2], 2).is_err());
    }

    #[test]
    fn ar1_autocorrelation() {
        let mut rng = stream(10, &[]);
        let mut x = 0.0;
        let xs: Vec<f64> = (0..200_000)
            .map(|_| {
                x = 0.8 * x + rng.random::<f64>() - 0.5;
                x
            })
            .collect();
        assert!((autocorrelation(&xs, 1).unwrap() - 0.8).abs() < 0.01);
        assert!((autocorrelation(&xs, 2).unwrap() - 0.64).abs() < 0.01);
    }

    #[test]
    fn batch_means_for_iid() {
        let mut rng = stream(11, &[]);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.random()).collect();
        let se = batch_means_se(&xs, 50).unwrap();
        let exact = (1.0 / 12.0 / 100_000.0f64).sqrt();
        assert!((se / exact - 1.0).abs() < 0.4, "{se} vs {exact}");
    }

    #[test]
    fn ks_uniform() {
        let mut rng = stream(12, &[]);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.random()).collect();
        let d = ks_statistic(&xs, |x| x.clamp(0.0, 1.0));
        assert!(d < ks_critical_value(xs.len(), 0.01));
        let shifted: Vec<f64> = xs.iter().map(|x| x * x).collect();
        assert!(ks_statistic(&shifted, |x| x.clamp(0.0, 1.0)) > 0.2);
    }

    #[test]
    fn exact_regression_slope() {
        let m = [100.0f64, 1e3, 1e4, 1e5];
        let x: Vec<f64> = m.iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = m.iter().map(|v| (3.2 * v.powf(-0.5)).ln()).collect();
        assert!((ls_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
        assert!(ls_slope(&x[..1], &y[..1]).is_err());
    }

    #[test]
    fn sd_standard_error_for_normal() {
        let mut rng = stream(13, &[]);
        let xs: Vec<f64> = (0..4000).map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng)).collect();
        let (s, se) = sd_with_se(&xs);
        assert!((s - 1.0).abs() < 4.0 * se);
        // normal theory: se = 1 / sqrt(2 R)
        assert!((se * (2.0 * 4000.0f64).sqrt() - 1.0).abs() < 0.1);
    }
}
