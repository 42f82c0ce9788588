//! The scaling limit of the data-augmentation chain: the diffusion
//! `dX = b(X) dt + sqrt(c(X)) dW` with `b(h) = alpha1 + h z - h^2 I` and
//! `c(h) = 2h` on `h >= 0`, plus the continuous-time embeddings of a
//! discrete chain that converge to it.
//!
//! The speed measure of this diffusion has density proportional to
//! `h^{alpha1 - 1} exp(h z - h^2 I / 2)`, which is the limit posterior; the
//! tests use that as an oracle for the simulation.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::error::{Error, Result};
use crate::metrics::{bin_weighted, GridMeasure, MetricConfig};
use crate::model::write_file;
use crate::posterior::{limit_posterior, DEFAULT_POINTS};
use crate::samplers::chain::{header_block, ChainPath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionSpec {
    pub z: f64,
    pub alpha1: f64,
    pub information: f64,
}

impl DiffusionSpec {
    pub fn new(z: f64, alpha1: f64, information: f64) -> Result<Self> {
        if !z.is_finite() {
            return Err(Error::domain("DiffusionSpec", format!("z must be finite, got {z}")));
        }
        if !(alpha1 > 0.0 && alpha1.is_finite()) {
            return Err(Error::domain("DiffusionSpec", format!("alpha1 must be positive, got {alpha1}")));
        }
        if !(information > 0.0 && information.is_finite()) {
            return Err(Error::domain("DiffusionSpec", format!("I must be positive, got {information}")));
        }
        Ok(Self { z, alpha1, information })
    }

    fn drift(&self, h: f64) -> f64 {
        self.alpha1 + h * self.z - h * h * self.information
    }
}

impl Default for DiffusionSpec {
    fn default() -> Self {
        Self {
            z: 0.0,
            alpha1: 1.0,
            information: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeCoefficients {
    pub drift: f64,
    pub variance: f64,
}

pub fn sde_coefficients(h: f64, spec: &DiffusionSpec) -> Result<SdeCoefficients> {
    if !(h >= 0.0) {
        return Err(Error::domain("sde_coefficients", format!("h must be nonnegative, got {h}")));
    }
    Ok(SdeCoefficients {
        drift: spec.drift(h),
        variance: 2.0 * h,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SdeInit {
    Fixed(f64),
    /// A draw from the limit posterior `p*(. | d = z)`, the stationary law.
    LimitPosterior,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeOptions {
    pub horizon: f64,
    pub dt: f64,
    /// Keep every `stride`-th state.
    pub stride: usize,
}

impl Default for SdeOptions {
    fn default() -> Self {
        Self {
            horizon: 100.0,
            dt: 1e-3,
            stride: 10,
        }
    }
}

/// A simulated diffusion path, reported at multiples of `dt * stride`.
#[derive(Debug, Clone, PartialEq)]
pub struct SdePath {
    pub step: f64,
    pub values: Vec<f64>,
    /// Time average of the clamped path over the full horizon, computed at
    /// the fine resolution `dt`.
    pub time_average: f64,
}

impl SdePath {
    pub fn horizon(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = header_block(header);
        out.push_str("t,h\n");
        for (k, h) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{h}\n", k as f64 * self.step));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        write_file(path, self.to_csv(header).as_bytes())
    }
}

fn check_options(opts: &SdeOptions) -> Result<usize> {
    if !(opts.dt > 0.0 && opts.dt <= 0.01) {
        return Err(Error::domain("simulate_sde", format!("dt must lie in (0, 0.01], got {}", opts.dt)));
    }
    if !(opts.horizon > 0.0 && opts.horizon.is_finite()) {
        return Err(Error::domain("simulate_sde", format!("horizon must be positive, got {}", opts.horizon)));
    }
    if opts.stride == 0 {
        return Err(Error::domain("simulate_sde", "stride must be at least 1"));
    }
    Ok((opts.horizon / opts.dt).round().max(1.0) as usize)
}

/// One full-truncation Euler step driven by the standard normal `xi`.
#[inline]
fn euler_step(spec: &DiffusionSpec, h: f64, dt: f64, sqrt_dt: f64, xi: f64) -> f64 {
    let p = h.max(0.0);
    h + spec.drift(p) * dt + (2.0 * p).sqrt() * sqrt_dt * xi
}

/// Full-truncation Euler states `h_0, ..., h_K` for the given increments
/// `xi_k`. Internal states may dip below zero; callers report `max(h, 0)`.
pub fn euler_states(spec: &DiffusionSpec, h0: f64, dt: f64, noise: &[f64]) -> Vec<f64> {
    let sqrt_dt = dt.sqrt();
    let mut out = Vec::with_capacity(noise.len() + 1);
    let mut h = h0;
    out.push(h);
    for &xi in noise {
        h = euler_step(spec, h, dt, sqrt_dt, xi);
        out.push(h);
    }
    out
}

pub fn initial_state<R: Rng + ?Sized>(spec: &DiffusionSpec, init: SdeInit, rng: &mut R) -> Result<f64> {
    match init {
        SdeInit::Fixed(h0) => {
            if !(h0 >= 0.0 && h0.is_finite()) {
                return Err(Error::domain("simulate_sde", format!("initial state must be nonnegative, got {h0}")));
            }
            Ok(h0)
        }
        SdeInit::LimitPosterior => {
            let p = limit_posterior(spec.z, spec.information, spec.alpha1, DEFAULT_POINTS)?;
            Ok(p.quantile(rng.random()))
        }
    }
}

pub fn simulate_sde<R: Rng + ?Sized>(
    spec: &DiffusionSpec,
    init: SdeInit,
    opts: &SdeOptions,
    rng: &mut R,
) -> Result<SdePath> {
    let steps = check_options(opts)?;
    let mut h = initial_state(spec, init, rng)?;
    let sqrt_dt = opts.dt.sqrt();
    let mut values = Vec::with_capacity(steps / opts.stride + 2);
    values.push(h);
    // left-point rule for the time integral
    let mut integral = 0.0;
    for k in 1..=steps {
        integral += h.max(0.0);
        let xi: f64 = StandardNormal.sample(rng);
        h = euler_step(spec, h, opts.dt, sqrt_dt, xi);
        if k % opts.stride == 0 {
            values.push(h.max(0.0));
        }
    }
    Ok(SdePath {
        step: opts.dt * opts.stride as f64,
        values,
        time_average: integral / steps as f64,
    })
}

/// Right-continuous step function: `values[k]` on `[times[k], times[k + 1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepProcessPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl StepProcessPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || times.len() != values.len() + 1 {
            return Err(Error::domain(
                "StepProcessPath",
                "need one more time than values and at least one value",
            ));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("StepProcessPath", "times must start at 0 and increase strictly"));
        }
        Ok(Self { times, values })
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Value at time `t` in `[0, end)`.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if !(t >= 0.0 && t < self.end()) {
            return None;
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        Some(self.values[k])
    }

    /// Rows `t,h` at each jump epoch.
    pub fn to_csv(&self, header: &[String]) -> String {
        let mut out = header_block(header);
        out.push_str("t,h\n");
        for (t, h) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t},{h}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path, header: &[String]) -> Result<()> {
        write_file(path, self.to_csv(header).as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    /// Jumps at the epochs of a Poisson process of rate `r_n`.
    Poisson,
    /// Jumps at `k / r_n`, i.e. `theta([r_n t])`.
    Deterministic,
}

/// Continuous-time version `t -> lambda_n theta(N_t)` of a chain.
pub fn poisson_embed<R: Rng + ?Sized>(
    chain: &ChainPath,
    rate: f64,
    lambda: f64,
    clock: Clock,
    rng: &mut R,
) -> Result<StepProcessPath> {
    if chain.is_empty() {
        return Err(Error::domain("poisson_embed", "empty chain"));
    }
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain("poisson_embed", format!("rate must be positive, got {rate}")));
    }
    let m = chain.len();
    let mut times = Vec::with_capacity(m + 1);
    times.push(0.0);
    match clock {
        Clock::Poisson => {
            let exp = Exp::new(rate).map_err(|e| Error::domain("poisson_embed", e.to_string()))?;
            let mut t = 0.0;
            for _ in 0..m {
                let mut gap: f64 = exp.sample(rng);
                while gap <= 0.0 {
                    gap = exp.sample(rng);
                }
                t += gap;
                times.push(t);
            }
        }
        Clock::Deterministic => times.extend((1..=m).map(|k| k as f64 / rate)),
    }
    StepProcessPath::new(times, chain.values.iter().map(|t| lambda * t).collect())
}

/// Chain length that covers `[0, horizon]` under a Poisson clock of rate
/// `rate` except with probability below about `1e-9`.
pub fn steps_for_horizon(rate: f64, horizon: f64) -> usize {
    let mean = rate * horizon;
    (mean + 6.5 * mean.sqrt() + 20.0).ceil() as usize
}

/// Paths whose occupation measure can be taken.
pub trait Occupation {
    /// `(value, sojourn)` pairs covering `[0, horizon)`.
    fn sojourns(&self, horizon: f64) -> Result<(Vec<f64>, Vec<f64>)>;
}

impl Occupation for StepProcessPath {
    fn sojourns(&self, horizon: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        if !(horizon > 0.0) || self.end() < horizon {
            return Err(Error::domain(
                "occupation_measure",
                format!("path ends at {} before the horizon {horizon}", self.end()),
            ));
        }
        let mut values = Vec::new();
        let mut spans = Vec::new();
        for (k, &v) in self.values.iter().enumerate() {
            let (a, b) = (self.times[k], self.times[k + 1].min(horizon));
            if a >= horizon {
                break;
            }
            values.push(v);
            spans.push(b - a);
        }
        Ok((values, spans))
    }
}

impl Occupation for SdePath {
    fn sojourns(&self, horizon: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let cells = (horizon / self.step).round() as usize;
        if !(horizon > 0.0) || cells == 0 || cells >= self.values.len() + 1 || self.horizon() + 0.5 * self.step < horizon {
            return Err(Error::domain(
                "occupation_measure",
                format!("path covers [0, {}], shorter than {horizon}", self.horizon()),
            ));
        }
        let cells = cells.min(self.values.len() - 1);
        Ok((self.values[..cells].to_vec(), vec![self.step; cells]))
    }
}

/// Time-weighted histogram `t^{-1} int_0^t delta_{X(u)} du` on `cfg`'s grid.
pub fn occupation_measure<P: Occupation>(path: &P, horizon: f64, cfg: &MetricConfig) -> Result<GridMeasure> {
    let (values, spans) = path.sojourns(horizon)?;
    bin_weighted(&values, &spans, cfg)
}

/// `t^{-1} int_0^t X(u) du`.
pub fn time_average<P: Occupation>(path: &P, horizon: f64) -> Result<f64> {
    let (values, spans) = path.sojourns(horizon)?;
    let total: f64 = spans.iter().sum();
    Ok(values.iter().zip(&spans).map(|(v, s)| v * s).sum::<f64>() / total)
}
