//! Discrete probability measures on the line and distances between them.
//!
//! The bounded-Lipschitz distance uses the ground metric
//! `d(a, b) = min(|a - b|, cap)` and test functions with `|psi| <= 1`.
//! Because the two measures have equal mass, adding a constant to `psi` does
//! not change `mu(psi) - nu(psi)`, and the sup-norm bound only limits the
//! oscillation of `psi` to 2. The feasible set is therefore, up to a shift,
//! the functions with values in `[0, D]`, `D = min(cap, 2)`, that are
//! 1-Lipschitz between neighbouring grid points. In that form the cap is
//! implied by the range constraint and only the `N - 1` adjacent constraints
//! remain, so the linear program is a chain. It is solved exactly by dynamic
//! programming over concave piecewise-linear value functions.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::write_file;

const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GridMeasure {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl GridMeasure {
    /// Validates a normalized measure.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != weights.len() {
            return Err(Error::domain(
                "GridMeasure",
                format!("{} support points but {} weights", support.len(), weights.len()),
            ));
        }
        if support.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("GridMeasure", "support contains non-finite values"));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("GridMeasure", "support is not strictly increasing"));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::domain("GridMeasure", "weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::domain(
                "GridMeasure",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(Self { support, weights })
    }

    /// Normalizes nonnegative masses; atoms with zero mass are dropped.
    pub fn from_masses(support: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if support.len() != masses.len() {
            return Err(Error::domain("GridMeasure", "support and masses differ in length"));
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::domain("GridMeasure", format!("total mass {total} is not positive")));
        }
        let (s, w): (Vec<f64>, Vec<f64>) = support
            .into_iter()
            .zip(masses)
            .filter(|(_, m)| *m > 0.0)
            .map(|(x, m)| (x, m / total))
            .unzip();
        let mut out = Self::new(s, w)?;
        out.renormalize();
        Ok(out)
    }

    pub fn dirac(x: f64) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    fn renormalize(&mut self) {
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    /// Mass strictly above `threshold`.
    pub fn mass_above(&self, threshold: f64) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .filter(|(x, _)| **x > threshold)
            .map(|(_, w)| w)
            .sum()
    }

    /// Multiplies every support point by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            support: self.support.iter().map(|x| x * factor).collect(),
            weights: self.weights.clone(),
        }
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = String::new();
        for line in header {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str("support,weight\n");
        for (x, w) in self.support.iter().zip(&self.weights) {
            out.push_str(&format!("{x},{w}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        write_file(path, self.to_csv(header).as_bytes())
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut support = Vec::new();
        let mut weights = Vec::new();
        let mut seen_header = false;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_header {
                if line != "support,weight" {
                    return Err(Error::domain("GridMeasure", format!("line {}: bad header", i + 1)));
                }
                seen_header = true;
                continue;
            }
            let parsed = line
                .split_once(',')
                .and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)));
            let (x, w) = parsed
                .ok_or_else(|| Error::domain("GridMeasure", format!("line {}: malformed row", i + 1)))?;
            support.push(x);
            weights.push(w);
        }
        Self::new(support, weights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RangePolicy {
    /// Bin over the smallest interval containing all samples involved.
    UnionSupport,
    Fixed(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub cap: f64,
    pub grid_size: usize,
    pub range: RangePolicy,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            cap: 1.0,
            grid_size: 512,
            range: RangePolicy::UnionSupport,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cap > 0.0) {
            return Err(Error::domain("MetricConfig", format!("cap must be positive, got {}", self.cap)));
        }
        if self.grid_size < 2 {
            return Err(Error::domain(
                "MetricConfig",
                format!("grid_size must be at least 2, got {}", self.grid_size),
            ));
        }
        if let RangePolicy::Fixed(lo, hi) = self.range {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::domain("MetricConfig", format!("invalid fixed range ({lo}, {hi})")));
            }
        }
        Ok(())
    }
}

/// Uniform binning of an interval; a degenerate interval is a single atom.
#[derive(Debug, Clone, Copy)]
struct Bins {
    lo: f64,
    width: f64,
    count: usize,
}

impl Bins {
    fn new(lo: f64, hi: f64, count: usize) -> Self {
        if hi > lo {
            Self {
                lo,
                width: (hi - lo) / count as f64,
                count,
            }
        } else {
            Self { lo, width: 0.0, count: 1 }
        }
    }

    fn index(&self, x: f64) -> usize {
        if self.width == 0.0 {
            return 0;
        }
        let k = ((x - self.lo) / self.width).floor();
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.count - 1)
        }
    }

    fn center(&self, k: usize) -> f64 {
        self.lo + self.width * (k as f64 + 0.5)
    }

    fn measure(&self, masses: Vec<f64>) -> Result<GridMeasure> {
        let support = (0..self.count).map(|k| self.center(k)).collect();
        GridMeasure::from_masses(support, masses)
    }
}

fn check_samples(context: &'static str, samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::domain(context, "no samples"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in samples {
        if !x.is_finite() {
            return Err(Error::domain(context, format!("non-finite sample {x}")));
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    Ok((lo, hi))
}

fn bins_for(cfg: &MetricConfig, lo: f64, hi: f64) -> Bins {
    match cfg.range {
        RangePolicy::UnionSupport => Bins::new(lo, hi, cfg.grid_size),
        RangePolicy::Fixed(a, b) => Bins::new(a, b, cfg.grid_size),
    }
}

/// Histogram of samples on `cfg.grid_size` equal bins, represented by bin
/// centers. Samples outside a fixed range fall into the end bins; empty
/// bins are dropped.
pub fn bin_samples(samples: &[f64], cfg: &MetricConfig) -> Result<GridMeasure> {
    cfg.validate()?;
    let (lo, hi) = check_samples("bin_samples", samples)?;
    let bins = bins_for(cfg, lo, hi);
    let mut counts = vec![0.0; bins.count];
    for &x in samples {
        counts[bins.index(x)] += 1.0;
    }
    bins.measure(counts)
}

/// Like [`bin_samples`] with per-sample masses (e.g. sojourn times).
pub fn bin_weighted(values: &[f64], masses: &[f64], cfg: &MetricConfig) -> Result<GridMeasure> {
    cfg.validate()?;
    if values.len() != masses.len() {
        return Err(Error::domain("bin_weighted", "values and masses differ in length"));
    }
    let (lo, hi) = check_samples("bin_weighted", values)?;
    let bins = bins_for(cfg, lo, hi);
    let mut acc = vec![0.0; bins.count];
    for (&x, &w) in values.iter().zip(masses) {
        if !(w >= 0.0) {
            return Err(Error::domain("bin_weighted", format!("negative mass {w}")));
        }
        acc[bins.index(x)] += w;
    }
    bins.measure(acc)
}

/// Bins two sample sets on one shared grid.
pub fn bin_pair(a: &[f64], b: &[f64], cfg: &MetricConfig) -> Result<(GridMeasure, GridMeasure)> {
    cfg.validate()?;
    let (lo_a, hi_a) = check_samples("bin_pair", a)?;
    let (lo_b, hi_b) = check_samples("bin_pair", b)?;
    let bins = bins_for(cfg, lo_a.min(lo_b), hi_a.max(hi_b));
    let hist = |xs: &[f64]| {
        let mut counts = vec![0.0; bins.count];
        for &x in xs {
            counts[bins.index(x)] += 1.0;
        }
        bins.measure(counts)
    };
    Ok((hist(a)?, hist(b)?))
}

/// Re-bins a measure onto `cfg`'s grid over `[lo, hi]`.
pub fn rebin(mu: &GridMeasure, lo: f64, hi: f64, grid_size: usize) -> Result<GridMeasure> {
    let bins = Bins::new(lo, hi, grid_size.max(1));
    let mut acc = vec![0.0; bins.count];
    for (&x, &w) in mu.support().iter().zip(mu.weights()) {
        acc[bins.index(x)] += w;
    }
    bins.measure(acc)
}

/// Merged sorted support with `mu - nu` on it.
fn signed_difference(mu: &GridMeasure, nu: &GridMeasure) -> (Vec<f64>, Vec<f64>) {
    let (a, b) = (mu.support(), nu.support());
    let mut xs = Vec::with_capacity(a.len() + b.len());
    let mut diff = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i] < b[j]) {
            xs.push(a[i]);
            diff.push(mu.weights()[i]);
            i += 1;
        } else if i == a.len() || b[j] < a[i] {
            xs.push(b[j]);
            diff.push(-nu.weights()[j]);
            j += 1;
        } else {
            xs.push(a[i]);
            diff.push(mu.weights()[i] - nu.weights()[j]);
            i += 1;
            j += 1;
        }
    }
    (xs, diff)
}

/// Concave piecewise-linear function on `[0, top]` given by its breakpoints.
struct Concave {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Concave {
    fn argmax(&self) -> usize {
        let mut best = 0;
        for k in 1..self.ys.len() {
            if self.ys[k] > self.ys[best] {
                best = k;
            }
        }
        best
    }

    fn value_at(xs: &[f64], ys: &[f64], x: f64) -> f64 {
        let k = xs.partition_point(|&p| p <= x);
        if k == 0 {
            return ys[0];
        }
        if k == xs.len() {
            return ys[ys.len() - 1];
        }
        let (x0, x1) = (xs[k - 1], xs[k]);
        let t = (x - x0) / (x1 - x0);
        ys[k - 1] + t * (ys[k] - ys[k - 1])
    }

    /// `v -> max_{|u - v| <= gap} f(u)` restricted to `[0, top]`.
    fn window_max(&mut self, gap: f64, top: f64) {
        if gap <= 0.0 {
            return;
        }
        let peak = self.argmax();
        let mut xs = Vec::with_capacity(self.xs.len() + 3);
        let mut ys = Vec::with_capacity(self.xs.len() + 3);
        for k in 0..=peak {
            xs.push(self.xs[k] - gap);
            ys.push(self.ys[k]);
        }
        for k in peak..self.xs.len() {
            xs.push(self.xs[k] + gap);
            ys.push(self.ys[k]);
        }
        // clip the shifted graph back to [0, top]
        let at0 = Self::value_at(&xs, &ys, 0.0);
        let at_top = Self::value_at(&xs, &ys, top);
        self.xs.clear();
        self.ys.clear();
        self.xs.push(0.0);
        self.ys.push(at0);
        for (&x, &y) in xs.iter().zip(&ys) {
            if x > 0.0 && x < top && x > *self.xs.last().unwrap() {
                self.xs.push(x);
                self.ys.push(y);
            }
        }
        if top > *self.xs.last().unwrap() {
            self.xs.push(top);
            self.ys.push(at_top);
        }
    }

    fn add_linear(&mut self, slope: f64) {
        for (x, y) in self.xs.iter().zip(self.ys.iter_mut()) {
            *y += slope * x;
        }
    }

    fn max(&self) -> f64 {
        self.ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `max sum_i w_i psi_i` over `psi in [0, top]^N`,
/// `|psi_{i+1} - psi_i| <= xs[i+1] - xs[i]`.
fn chain_lp(xs: &[f64], w: &[f64], top: f64) -> f64 {
    let mut f = Concave {
        xs: vec![0.0, top],
        ys: vec![0.0, w[0] * top],
    };
    for i in 1..xs.len() {
        f.window_max(xs[i] - xs[i - 1], top);
        f.add_linear(w[i]);
    }
    f.max()
}

/// Bounded-Lipschitz distance under the ground metric `min(|a - b|, cap)`.
pub fn bl_distance(mu: &GridMeasure, nu: &GridMeasure, cfg: &MetricConfig) -> Result<f64> {
    cfg.validate()?;
    for (name, m) in [("first", mu), ("second", nu)] {
        let total: f64 = m.weights().iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::domain(
                "bl_distance",
                format!("{name} measure has mass {total}"),
            ));
        }
    }
    let (xs, diff) = signed_difference(mu, nu);
    let top = cfg.cap.min(2.0);
    let value = chain_lp(&xs, &diff, top);
    Ok(value.clamp(0.0, 2.0))
}

/// Bins two sample sets on a common grid and returns their bounded-Lipschitz distance.
pub fn bl_distance_samples(a: &[f64], b: &[f64], cfg: &MetricConfig) -> Result<f64> {
    let (mu, nu) = bin_pair(a, b, cfg)?;
    bl_distance(&mu, &nu, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvW1 {
    pub tv: f64,
    pub w1: f64,
}

/// Exact total variation and Wasserstein-1 of the two discrete measures,
/// computed on their merged support.
pub fn tv_w1(mu: &GridMeasure, nu: &GridMeasure) -> TvW1 {
    let (xs, diff) = signed_difference(mu, nu);
    let mut cdf = 0.0;
    let mut w1 = 0.0;
    for k in 0..xs.len() - 1 {
        cdf += diff[k];
        w1 += cdf.abs() * (xs[k + 1] - xs[k]);
    }
    let tv = 0.5 * diff.iter().map(|d| d.abs()).sum::<f64>();
    TvW1 { tv: tv.min(1.0), w1 }
}
