//! Normal distribution truncated to an interval, sampled exactly by the
//! rejection schemes of Robert (1995): normal, uniform or translated
//! exponential proposals depending on where the interval sits.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{log_norm_interval, LN_SQRT_2PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    /// `ln(Phi(b) - Phi(a))` for the standardized bounds.
    log_mass: f64,
}

impl TruncatedNormal {
    pub fn new(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(Error::DegenerateProposal(format!(
                "truncated normal needs finite mu and positive sigma, got ({mu}, {sigma})"
            )));
        }
        if !(lo < hi) {
            return Err(Error::domain("TruncatedNormal", format!("empty interval [{lo}, {hi}]")));
        }
        let log_mass = log_norm_interval((lo - mu) / sigma, (hi - mu) / sigma);
        if !log_mass.is_finite() {
            return Err(Error::NumericalFailure(format!(
                "truncated normal mass underflows for mu = {mu}, sigma = {sigma} on [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            mu,
            sigma,
            lo,
            hi,
            log_mass,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if !(x >= self.lo && x <= self.hi) {
            return f64::NEG_INFINITY;
        }
        let z = (x - self.mu) / self.sigma;
        -0.5 * z * z - self.sigma.ln() - LN_SQRT_2PI - self.log_mass
    }

    /// `E[X] = mu + sigma (phi(a) - phi(b)) / (Phi(b) - Phi(a))`.
    pub fn mean(&self) -> f64 {
        let a = (self.lo - self.mu) / self.sigma;
        let b = (self.hi - self.mu) / self.sigma;
        let ratio = |t: f64| {
            if t.is_infinite() {
                0.0
            } else {
                (-0.5 * t * t - LN_SQRT_2PI - self.log_mass).exp()
            }
        };
        self.mu + self.sigma * (ratio(a) - ratio(b))
    }

    /// `Var[X]`, used by the moment oracle in tests.
    pub fn variance(&self) -> f64 {
        let a = (self.lo - self.mu) / self.sigma;
        let b = (self.hi - self.mu) / self.sigma;
        let terms = |t: f64| {
            if t.is_infinite() {
                (0.0, 0.0)
            } else {
                let p = (-0.5 * t * t - LN_SQRT_2PI - self.log_mass).exp();
                (p, t * p)
            }
        };
        let ((pa, tpa), (pb, tpb)) = (terms(a), terms(b));
        let first = pa - pb;
        let second = tpa - tpb;
        self.sigma * self.sigma * (1.0 + second - first * first)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = (self.lo - self.mu) / self.sigma;
        let b = (self.hi - self.mu) / self.sigma;
        let z = standard_truncated(a, b, rng);
        (self.mu + self.sigma * z).clamp(self.lo, self.hi)
    }
}

/// Standard normal restricted to `[a, b]`.
fn standard_truncated<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a >= 0.0 {
        one_sided(a, b, rng)
    } else if b <= 0.0 {
        -one_sided(-b, -a, rng)
    } else if b - a >= (2.0 * std::f64::consts::PI).sqrt() {
        loop {
            let z: f64 = StandardNormal.sample(rng);
            if z >= a && z <= b {
                return z;
            }
        }
    } else {
        loop {
            let z = rng.random_range(a..=b);
            if rng.random::<f64>() <= (-0.5 * z * z).exp() {
                return z;
            }
        }
    }
}

/// `[a, b]` with `0 <= a < b`.
fn one_sided<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    let root = (a * a + 4.0).sqrt();
    let rate = 0.5 * (a + root);
    let uniform_edge = a + 2.0 * 0.5f64.exp() / (a + root) * ((a * a - a * root) / 4.0).exp();
    if b <= uniform_edge {
        loop {
            let z = rng.random_range(a..=b);
            if rng.random::<f64>() <= (0.5 * (a * a - z * z)).exp() {
                return z;
            }
        }
    }
    loop {
        let e: f64 = Exp1.sample(rng);
        let z = a + e / rate;
        if z > b {
            continue;
        }
        if rng.random::<f64>() <= (-0.5 * (z - rate) * (z - rate)).exp() {
            return z;
        }
    }
}
