//! Exact posterior of the mixture weight by quadrature, its local limit, and
//! the LAN / Bernstein-von Mises diagnostics built on them.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::GridMeasure;
use crate::model::{write_file, Centering, Dataset, LocalExpansion, MixtureFamily, PriorParams};
use crate::quadrature::{locate_bulk, power_nodes, LogLinearTable, Nodes};
use crate::special::{ln_beta, xlogy};

/// Densities below `max - BULK_DROP` (in log) are treated as outside the bulk.
/// `e^{-36}` keeps the neglected tail mass well below 1e-12.
const BULK_DROP: f64 = 36.0;

pub const DEFAULT_POINTS: usize = 4097;

/// `sum_i ln(1 + theta e_i)`, multiplying eight factors before each log.
pub fn log_likelihood_ratio(excess: &[f64], theta: f64) -> f64 {
    if theta == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut chunks = excess.chunks_exact(8);
    for c in &mut chunks {
        let mut prod = 1.0;
        for e in c {
            prod *= 1.0 + theta * e;
        }
        if prod > 0.0 && prod.is_finite() && prod > 1e-300 {
            acc += prod.ln();
        } else {
            acc += c.iter().map(|e| (theta * e).ln_1p()).sum::<f64>();
        }
    }
    for e in chunks.remainder() {
        acc += (theta * e).ln_1p();
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// The mixture weight `theta in [0, 1]`.
    Theta,
    /// The local parameter `h = lambda_n theta`.
    H,
}

/// Posterior of the mixture weight on a quadrature grid.
#[derive(Debug, Clone)]
pub struct PosteriorGrid {
    scale: Scale,
    lambda: f64,
    measure: GridMeasure,
    density: Vec<f64>,
    table: LogLinearTable,
    log_normalizer: f64,
    mean: f64,
}

impl PosteriorGrid {
    pub fn scale(&self) -> Scale {
        self.scale
    }

    /// Quadrature measure (Simpson weights) on the grid nodes.
    pub fn measure(&self) -> &GridMeasure {
        &self.measure
    }

    /// Normalized density at the support points, on the grid's scale.
    pub fn density(&self) -> &[f64] {
        &self.density
    }

    /// `ln int prod_i (1 + theta (s_i - 1)) Beta(theta; alpha1, alpha0) dtheta`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    /// Posterior mean on the grid's scale; on the theta scale this is the
    /// Bayes estimator under squared loss.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    fn factor(&self) -> f64 {
        match self.scale {
            Scale::Theta => 1.0,
            Scale::H => self.lambda,
        }
    }

    /// CDF on the grid's scale (log-linear interpolation between nodes).
    pub fn cdf(&self, x: f64) -> f64 {
        self.table.cdf(x / self.factor())
    }

    pub fn quantile(&self, v: f64) -> f64 {
        self.table.quantile(v) * self.factor()
    }

    /// Mass strictly above `x`, on the grid's scale.
    pub fn tail_mass(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }

    /// Log density on the grid's scale, from the interpolating table.
    pub fn log_density(&self, x: f64) -> f64 {
        self.table.log_density(x / self.factor()) - self.factor().ln()
    }

    /// Same posterior expressed in `h = lambda_n theta`.
    pub fn to_h_scale(&self) -> Self {
        if self.scale == Scale::H {
            return self.clone();
        }
        let l = self.lambda;
        Self {
            scale: Scale::H,
            lambda: l,
            measure: self.measure.scaled(l),
            density: self.density.iter().map(|d| d / l).collect(),
            table: self.table.clone(),
            log_normalizer: self.log_normalizer,
            mean: self.measure.support().iter().zip(self.measure.weights()).map(|(x, w)| l * x * w).sum(),
        }
    }

    /// Rows `h,density,cdf` (always on the h scale).
    pub fn to_csv(&self, header: &[String]) -> String {
        let grid = self.to_h_scale();
        let mut out = String::new();
        for line in header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("h,density,cdf\n");
        for (h, d) in grid.measure.support().iter().zip(&grid.density) {
            out.push_str(&format!("{h},{d},{}\n", grid.cdf(*h)));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        write_file(path, self.to_csv(header).as_bytes())
    }
}

/// Unnormalized log posterior density split into a regular part and the
/// Beta prior's endpoint powers.
struct LogPosterior<'a> {
    excess: &'a [f64],
    prior: PriorParams,
}

impl LogPosterior<'_> {
    fn likelihood(&self, theta: f64) -> f64 {
        log_likelihood_ratio(self.excess, theta)
    }

    /// Full log density without the Beta normalizer.
    fn full(&self, theta: f64) -> f64 {
        self.likelihood(theta) + xlogy(self.prior.alpha1 - 1.0, theta) + xlogy(self.prior.alpha0 - 1.0, 1.0 - theta)
    }

    /// Like [`full`] with any unbounded endpoint factor flattened; used
    /// only to find the bulk.
    fn bounded(&self, theta: f64) -> f64 {
        self.likelihood(theta)
            + xlogy((self.prior.alpha1 - 1.0).max(0.0), theta)
            + xlogy((self.prior.alpha0 - 1.0).max(0.0), 1.0 - theta)
    }
}

/// Builds nodes over the bulk `[a, b]` and returns them with the log of the
/// integrand's regular part at each node and the table end powers.
fn bulk_nodes(
    log_full: &dyn Fn(f64) -> f64,
    log_bounded: &dyn Fn(f64) -> f64,
    domain: (f64, f64),
    powers: (f64, f64),
    points: usize,
) -> Result<(Nodes, Vec<f64>, Vec<f64>, Option<f64>, Option<f64>)> {
    let (alpha_lo, alpha_hi) = powers;
    let bulk = locate_bulk(log_bounded, domain.0, domain.1, BULK_DROP)?;
    let lo = if alpha_lo < 1.0 { domain.0 } else { bulk.lo };
    let hi = if alpha_hi < 1.0 { domain.1 } else { bulk.hi };
    if !(hi > lo) {
        return Err(Error::NumericalFailure(format!(
            "posterior bulk collapsed to a point at {lo}"
        )));
    }
    let at_lo = lo == domain.0;
    let at_hi = hi == domain.1;
    let e_lo = if at_lo { alpha_lo - 1.0 } else { 0.0 };
    let e_hi = if at_hi { alpha_hi - 1.0 } else { 0.0 };
    let nodes = power_nodes(lo, hi, e_lo, e_hi, points)?;
    let mut regular = Vec::with_capacity(nodes.len());
    let mut full = Vec::with_capacity(nodes.len());
    for &x in &nodes.x {
        let f = log_full(x);
        let mut r = f;
        if at_lo {
            r -= xlogy(alpha_lo - 1.0, x - domain.0);
        }
        if at_hi {
            r -= xlogy(alpha_hi - 1.0, domain.1 - x);
        }
        // endpoint nodes with zero/infinite power factors: use the limit of
        // the regular part from the neighbouring value's formula
        if !r.is_finite() {
            r = log_bounded(x)
                - if at_lo { xlogy((alpha_lo - 1.0).max(0.0), x - domain.0) } else { 0.0 }
                - if at_hi { xlogy((alpha_hi - 1.0).max(0.0), domain.1 - x) } else { 0.0 };
        }
        regular.push(r);
        full.push(f);
    }
    // an end node where a positive power factor vanishes carries zero
    // weight; give it its neighbour's regular part so the sum stays finite
    let last = regular.len() - 1;
    if !regular[0].is_finite() && nodes.log_w[0] == f64::NEG_INFINITY {
        regular[0] = regular[1];
    }
    if !regular[last].is_finite() && nodes.log_w[last] == f64::NEG_INFINITY {
        regular[last] = regular[last - 1];
    }
    let left_power = (at_lo && alpha_lo != 1.0).then_some(alpha_lo);
    let right_power = (at_hi && alpha_hi != 1.0).then_some(alpha_hi);
    Ok((nodes, regular, full, left_power, right_power))
}

/// Assembles measure, density, table and moments from quadrature nodes.
fn assemble(
    nodes: Nodes,
    regular: Vec<f64>,
    full: Vec<f64>,
    left_power: Option<f64>,
    right_power: Option<f64>,
) -> Result<(GridMeasure, Vec<f64>, LogLinearTable, f64, f64)> {
    let log_int = nodes.log_integral(&regular);
    if !log_int.is_finite() {
        return Err(Error::NumericalFailure(format!("posterior integral is {log_int}")));
    }
    // merge nodes that coincide in floating point
    let mut xs: Vec<f64> = Vec::with_capacity(nodes.len());
    let mut ws: Vec<f64> = Vec::with_capacity(nodes.len());
    let mut ls: Vec<f64> = Vec::with_capacity(nodes.len());
    for k in 0..nodes.len() {
        let w = (nodes.log_w[k] + regular[k] - log_int).exp();
        if let Some(&last) = xs.last() {
            if nodes.x[k] <= last {
                *ws.last_mut().unwrap() += w;
                continue;
            }
        }
        xs.push(nodes.x[k]);
        ws.push(w);
        ls.push(full[k]);
    }
    let mean = xs.iter().zip(&ws).map(|(x, w)| x * w).sum();
    let density: Vec<f64> = ls.iter().map(|l| (l - log_int).exp()).collect();
    let table = LogLinearTable::new(xs.clone(), ls, left_power, right_power)?;
    let total: f64 = ws.iter().sum();
    for w in &mut ws {
        *w /= total;
    }
    let measure = GridMeasure::new(xs, ws)?;
    Ok((measure, density, table, log_int, mean))
}

/// Posterior of `theta` given the data under a Beta prior, on the theta
/// scale. `points` (at least 64) is the number of quadrature nodes.
pub fn posterior_grid(
    ds: &Dataset,
    _family: &MixtureFamily,
    prior: &PriorParams,
    points: usize,
) -> Result<PosteriorGrid> {
    posterior_from_excess(ds.excess(), ds.lambda(), prior, points)
}

/// As [`posterior_grid`] from raw `s_i - 1` values (an empty slice gives the prior).
pub fn posterior_from_excess(
    excess: &[f64],
    lambda: f64,
    prior: &PriorParams,
    points: usize,
) -> Result<PosteriorGrid> {
    if points < 64 {
        return Err(Error::domain("posterior_grid", format!("points must be at least 64, got {points}")));
    }
    if let Some((i, e)) = excess.iter().enumerate().find(|(_, e)| !(**e > -1.0) || !e.is_finite()) {
        return Err(Error::CorruptDataset(format!(
            "likelihood ratio s_{i} = {} is not positive and finite",
            e + 1.0
        )));
    }
    let post = LogPosterior { excess, prior: *prior };
    let (nodes, regular, full, lp, rp) = bulk_nodes(
        &|t| post.full(t),
        &|t| post.bounded(t),
        (0.0, 1.0),
        (prior.alpha1, prior.alpha0),
        points,
    )?;
    let (measure, density, table, log_int, mean) = assemble(nodes, regular, full, lp, rp)?;
    Ok(PosteriorGrid {
        scale: Scale::Theta,
        lambda,
        measure,
        density,
        table,
        log_normalizer: log_int - ln_beta(prior.alpha1, prior.alpha0),
        mean,
    })
}

/// The limit `p*(dh | d) ∝ exp(h d - h^2 I / 2) h^{alpha1 - 1}` on `h >= 0`.
#[derive(Debug, Clone)]
pub struct LimitPosterior {
    d: f64,
    information: f64,
    alpha1: f64,
    measure: GridMeasure,
    table: LogLinearTable,
    log_normalizer: f64,
    mean: f64,
}

impl LimitPosterior {
    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn information(&self) -> f64 {
        self.information
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn measure(&self) -> &GridMeasure {
        &self.measure
    }

    /// `ln int_0^inf exp(h d - h^2 I / 2) h^{alpha1 - 1} dh`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Exact normalized log density; `-inf` for `h < 0`.
    pub fn log_density(&self, h: f64) -> f64 {
        if h < 0.0 {
            return f64::NEG_INFINITY;
        }
        h * self.d - 0.5 * h * h * self.information + xlogy(self.alpha1 - 1.0, h) - self.log_normalizer
    }

    pub fn cdf(&self, h: f64) -> f64 {
        self.table.cdf(h)
    }

    pub fn quantile(&self, v: f64) -> f64 {
        self.table.quantile(v)
    }

    pub fn upper(&self) -> f64 {
        self.table.hi()
    }
}

pub fn limit_posterior(d: f64, information: f64, alpha1: f64, points: usize) -> Result<LimitPosterior> {
    if !(information > 0.0 && information.is_finite()) {
        return Err(Error::domain("limit_posterior", format!("I must be positive, got {information}")));
    }
    if !(alpha1 > 0.0 && alpha1.is_finite()) {
        return Err(Error::domain("limit_posterior", format!("alpha1 must be positive, got {alpha1}")));
    }
    if !d.is_finite() {
        return Err(Error::domain("limit_posterior", format!("d must be finite, got {d}")));
    }
    if points < 64 {
        return Err(Error::domain("limit_posterior", format!("points must be at least 64, got {points}")));
    }
    let a = (alpha1 - 1.0).max(0.0);
    let mode = (d + (d * d + 4.0 * information * a).sqrt()) / (2.0 * information);
    let upper = mode.max(0.0) + (2.0 * (BULK_DROP + 10.0) / information).sqrt() + 1.0;
    let full = |h: f64| h * d - 0.5 * h * h * information + xlogy(alpha1 - 1.0, h);
    let bounded = |h: f64| h * d - 0.5 * h * h * information + xlogy(a, h);
    let (nodes, regular, fullv, lp, _) = bulk_nodes(&full, &bounded, (0.0, upper), (alpha1, 1.0), points)?;
    let (measure, _, table, log_normalizer, mean) = assemble(nodes, regular, fullv, lp, None)?;
    Ok(LimitPosterior {
        d,
        information,
        alpha1,
        measure,
        table,
        log_normalizer,
        mean,
    })
}

/// `max_{h in grid} |ln L_{n,h} - h d + h^2 I / 2|` over `grid` evenly spaced
/// points of `[0, h_max]` (a single point means `h = 0` only), where
/// `ln L_{n,h} = sum_i ln(1 + h lambda_n^{-1} (s_i - 1))`.
pub fn lan_residual(
    ds: &Dataset,
    family: &MixtureFamily,
    h_max: f64,
    grid: usize,
    centering: Centering,
) -> Result<f64> {
    let LocalExpansion { z, information } = centering.expansion(ds, family);
    lan_residual_with(ds, z, information, h_max, grid)
}

pub fn lan_residual_with(ds: &Dataset, z: f64, information: f64, h_max: f64, grid: usize) -> Result<f64> {
    if !(h_max > 0.0) {
        return Err(Error::domain("lan_residual", format!("H must be positive, got {h_max}")));
    }
    if h_max / ds.lambda() >= 1.0 {
        return Err(Error::domain(
            "lan_residual",
            format!("H / lambda_n = {} must be below 1", h_max / ds.lambda()),
        ));
    }
    if grid == 0 {
        return Err(Error::domain("lan_residual", "grid must contain at least one point"));
    }
    let mut worst: f64 = 0.0;
    for k in 0..grid {
        let h = if grid == 1 { 0.0 } else { h_max * k as f64 / (grid - 1) as f64 };
        let log_l = log_likelihood_ratio(ds.excess(), h / ds.lambda());
        worst = worst.max((log_l - h * z + 0.5 * h * h * information).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvmOptions {
    /// Threshold `M` on the h scale for the tail mass.
    pub tail_threshold: f64,
    pub centering: Centering,
    pub points: usize,
}

impl Default for BvmOptions {
    fn default() -> Self {
        Self {
            tail_threshold: 10.0,
            centering: Centering::default(),
            points: DEFAULT_POINTS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvmReport {
    pub tv: f64,
    pub tail: f64,
    pub z: f64,
    pub information: f64,
}

/// Total variation between the scaled posterior and its limit centred at the
/// chosen statistic, plus the scaled-posterior mass above `M`.
pub fn bvm_distance(
    ds: &Dataset,
    family: &MixtureFamily,
    prior: &PriorParams,
    opts: &BvmOptions,
) -> Result<BvmReport> {
    let LocalExpansion { z, information } = opts.centering.expansion(ds, family);
    let post = posterior_grid(ds, family, prior, opts.points)?;
    let limit = limit_posterior(z, information, prior.alpha1, opts.points)?;
    let lambda = ds.lambda();
    let post_upper = post.table.hi() * lambda;
    let upper = post_upper.max(limit.upper());

    // both densities carry h^{alpha1 - 1}; integrate |p - q| / h^{alpha1 - 1}
    let e = prior.alpha1 - 1.0;
    let nodes = power_nodes(0.0, upper, e, 0.0, 2 * opts.points)?;
    let lp = LogPosterior {
        excess: ds.excess(),
        prior: *prior,
    };
    let post_shift = post.log_normalizer + ln_beta(prior.alpha1, prior.alpha0) + lambda.ln() + e * lambda.ln();
    let mut acc = 0.0;
    for (&h, &lw) in nodes.x.iter().zip(&nodes.log_w) {
        let theta = h / lambda;
        let p = if theta < 1.0 {
            (lp.likelihood(theta) + xlogy(prior.alpha0 - 1.0, 1.0 - theta) - post_shift).exp()
        } else {
            0.0
        };
        let q = (h * z - 0.5 * h * h * information - limit.log_normalizer).exp();
        acc += lw.exp() * (p - q).abs();
    }
    let tail = if opts.tail_threshold >= lambda {
        0.0
    } else {
        post.to_h_scale().tail_mass(opts.tail_threshold).max(0.0)
    };
    Ok(BvmReport {
        tv: (0.5 * acc).min(1.0),
        tail,
        z,
        information,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_dataset;
    use crate::rng::stream;
    use crate::special::norm_cdf;

    fn flat_dataset(n: usize) -> (MixtureFamily, Dataset) {
        // x = eps / 2 gives s = 1 for the location family
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let ds = Dataset::from_observations(&fam, vec![0.5; n]).unwrap();
        (fam, ds)
    }

    #[test]
    fn prior_only() {
        for (a1, a0) in [(1.0, 1.0), (2.0, 5.0), (0.5, 0.5), (0.7, 3.0)] {
            let prior = PriorParams::new(a1, a0).unwrap();
            let post = posterior_from_excess(&[], 10.0, &prior, 2049).unwrap();
            assert!((post.mean() - a1 / (a1 + a0)).abs() < 1e-9, "({a1},{a0}): {}", post.mean());
            assert!(post.log_normalizer().abs() < 1e-9);
        }
    }

    #[test]
    fn flat_likelihood_gives_prior() {
        let (fam, ds) = flat_dataset(1);
        assert!((ds.ratios()[0] - 1.0).abs() < 1e-15);
        let prior = PriorParams::new(2.0, 3.0).unwrap();
        let post = posterior_grid(&ds, &fam, &prior, 1025).unwrap();
        assert!((post.mean() - 0.4).abs() < 1e-10);
        assert!(post.log_normalizer().abs() < 1e-10);
    }

    fn fixture() -> (MixtureFamily, Dataset) {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let x = vec![0.31, -1.2, 2.05, 0.77, -0.4];
        let ds = Dataset::from_observations(&fam, x).unwrap();
        (fam, ds)
    }

    #[test]
    fn five_point_mean_against_riemann_oracle() {
        let (fam, ds) = fixture();
        let prior = PriorParams::default();
        let post = posterior_grid(&ds, &fam, &prior, DEFAULT_POINTS).unwrap();
        // midpoint Riemann sum with 10^6 cells
        let cells = 1_000_000;
        let (mut z, mut m1) = (0.0, 0.0);
        for k in 0..cells {
            let t = (k as f64 + 0.5) / cells as f64;
            let like: f64 = ds.ratios().iter().map(|s| 1.0 - t + t * s).product();
            z += like;
            m1 += t * like;
        }
        let oracle = m1 / z;
        assert!(((post.mean() - oracle) / oracle).abs() < 1e-8, "{} vs {oracle}", post.mean());
        assert!((post.log_normalizer() - (z / cells as f64).ln()).abs() < 1e-8);
    }

    #[test]
    fn change_of_variable() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let mut rng = stream(4, &[]);
        let ds = sample_dataset(&fam, 0.0, 400, &mut rng).unwrap();
        let post = posterior_grid(&ds, &fam, &PriorParams::default(), 1025).unwrap();
        let h = post.to_h_scale();
        assert!((h.mean() / (post.mean() * ds.lambda()) - 1.0).abs() < 1e-10);
        let q = post.quantile(0.3);
        assert!((h.cdf(q * ds.lambda()) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn normalizer_stable_under_doubling() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        for (seed, prior) in [(1, PriorParams::default()), (2, PriorParams::new(0.5, 2.0).unwrap()), (3, PriorParams::new(2.5, 1.0).unwrap())] {
            let mut rng = stream(seed, &[]);
            let ds = sample_dataset(&fam, 0.0, 1000, &mut rng).unwrap();
            let a = posterior_grid(&ds, &fam, &prior, 2049).unwrap().log_normalizer();
            let b = posterior_grid(&ds, &fam, &prior, 4097).unwrap().log_normalizer();
            assert!(((a.exp() - b.exp()) / b.exp()).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn too_few_points_rejected() {
        let (fam, ds) = fixture();
        assert!(matches!(
            posterior_grid(&ds, &fam, &PriorParams::default(), 10),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn limit_half_normal() {
        let lp = limit_posterior(0.0, 1.0, 1.0, 2049).unwrap();
        assert!((lp.mean() - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-10);
        assert_eq!(lp.log_density(-0.1), f64::NEG_INFINITY);
        assert!(lp.measure().support().iter().all(|h| *h >= 0.0));
    }

    #[test]
    fn limit_normalizer_closed_form() {
        let lp = limit_posterior(1.0, 1.0, 1.0, 2049).unwrap();
        let z = (2.0 * std::f64::consts::PI).sqrt() * 0.5f64.exp() * norm_cdf(1.0);
        assert!((z - 3.4775).abs() < 1e-3);
        assert!((lp.log_normalizer() - z.ln()).abs() < 1e-10);
    }

    #[test]
    fn limit_rayleigh_mean() {
        let lp = limit_posterior(0.0, 1.0, 2.0, 2049).unwrap();
        assert!((lp.mean() - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-10);
        // small alpha1: Gamma-type mass at 0, mean of h^{-1/2} e^{-h^2/2}
        let lp = limit_posterior(0.0, 1.0, 0.5, 2049).unwrap();
        let expected = libm::tgamma(0.75) / libm::tgamma(0.25) * 2f64.sqrt();
        assert!((lp.mean() - expected).abs() < 1e-9, "{} vs {expected}", lp.mean());
    }

    #[test]
    fn limit_rejects_bad_information() {
        assert!(matches!(limit_posterior(0.0, 0.0, 1.0, 128), Err(Error::Domain { .. })));
    }

    #[test]
    fn lan_residual_basics() {
        let fam = MixtureFamily::location_normal(1.0, 1.0).unwrap();
        let mut rng = stream(9, &[]);
        let ds = sample_dataset(&fam, 0.0, 100, &mut rng).unwrap();
        assert_eq!(lan_residual(&ds, &fam, 3.0, 1, Centering::Limit).unwrap(), 0.0);
        assert!(lan_residual(&ds, &fam, 3.0, 31, Centering::Exact).unwrap() > 0.0);
        assert!(matches!(
            lan_residual(&ds, &fam, 10.0, 10, Centering::Limit),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn bvm_range_check_with_concentrated_prior() {
        let (fam, ds) = flat_dataset(50);
        let prior = PriorParams::new(1.0, 200.0).unwrap();
        let r = bvm_distance(&ds, &fam, &prior, &BvmOptions::default()).unwrap();
        assert!(r.tv.is_finite() && (0.0..=1.0).contains(&r.tv));
        assert!((0.0..=1.0).contains(&r.tail));
    }

    #[test]
    fn log_likelihood_chunking_matches_direct_sum() {
        let excess: Vec<f64> = (0..37).map(|k| (k as f64 * 0.37).sin() * 3.0 + 0.5).map(|v: f64| v.max(-0.9)).collect();
        for t in [0.0, 1e-6, 0.3, 0.999] {
            let direct: f64 = excess.iter().map(|e| (t * e).ln_1p()).sum();
            assert!((log_likelihood_ratio(&excess, t) - direct).abs() < 1e-12);
        }
    }
}
