//! One-dimensional quadrature and tabulated densities on an interval.
//!
//! Integrands of the form `(x - lo)^{e_lo} (hi - x)^{e_hi} r(x)` with `r`
//! smooth are handled by splitting the interval in two panels and mapping
//! each through `x = anchor ± L u^p` with `p (1 + e)` an integer. The power
//! factor and the Jacobian then combine into an integer power of `u`, so
//! composite Simpson in `u` sees a smooth integrand even when `e < 0` makes
//! the density unbounded.

use rand::Rng;

use crate::error::{Error, Result};
use crate::special::{log_add_exp, xlogy};

/// Quadrature nodes with log-weights: `int f ≈ sum exp(log_w[k]) r(x[k])`.
#[derive(Debug, Clone)]
pub struct Nodes {
    pub x: Vec<f64>,
    pub log_w: Vec<f64>,
}

impl Nodes {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `ln int f` given `ln r` at the nodes, without overflow.
    pub fn log_integral(&self, log_r: &[f64]) -> f64 {
        let terms: Vec<f64> = self.log_w.iter().zip(log_r).map(|(w, r)| w + r).collect();
        log_sum_exp(&terms)
    }
}

pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m == f64::INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// Simpson weights for `intervals` (even) equal steps of width `h`.
fn simpson_weight(k: usize, intervals: usize, h: f64) -> f64 {
    let c = if k == 0 || k == intervals {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    };
    c * h / 3.0
}

/// Mapping `x - anchor = L u^p` with `p = k / (1 + e)` for an integer `k`.
/// The anchored factor times the Jacobian is then `∝ u^{k - 1}`, and the
/// remaining smooth factor picks up powers `u^{jp}`. Integer exponents keep
/// the plain linear map; otherwise `p >= 2` keeps Simpson's error small.
fn mapping_power(e: f64) -> (f64, f64) {
    if e >= 0.0 && e.fract() == 0.0 {
        return (1.0, 1.0 + e);
    }
    let k = (2.0 * (1.0 + e)).ceil();
    (k / (1.0 + e), k)
}

/// Nodes for `int_lo^hi (x - lo)^{e_lo} (hi - x)^{e_hi} r(x) dx` with about
/// `points` evaluations of `r`. Both exponents must exceed -1.
pub fn power_nodes(lo: f64, hi: f64, e_lo: f64, e_hi: f64, points: usize) -> Result<Nodes> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain("power_nodes", format!("invalid interval ({lo}, {hi})")));
    }
    if !(e_lo > -1.0 && e_hi > -1.0) {
        return Err(Error::domain(
            "power_nodes",
            format!("endpoint exponents must exceed -1, got ({e_lo}, {e_hi})"),
        ));
    }
    let per_panel = ((points.max(8) / 2) / 2) * 2;
    let mid = 0.5 * (lo + hi);
    let half = mid - lo;
    let right_half = hi - mid;
    let mut x = Vec::with_capacity(2 * per_panel + 1);
    let mut log_w = Vec::with_capacity(2 * per_panel + 1);
    let du = 1.0 / per_panel as f64;

    // left panel, anchored at lo
    let (p, k_lo) = mapping_power(e_lo);
    let base = (1.0 + e_lo) * half.ln() + p.ln();
    for k in 0..=per_panel {
        let u = k as f64 * du;
        let xk = if k == per_panel { mid } else { lo + half * u.powf(p) };
        let w = simpson_weight(k, per_panel, du);
        x.push(xk);
        log_w.push(w.ln() + base + xlogy(k_lo - 1.0, u) + e_hi * (hi - xk).ln());
    }
    // right panel, anchored at hi; v = 1 - u runs from 1 down to 0
    let (p, k_hi) = mapping_power(e_hi);
    let base = (1.0 + e_hi) * right_half.ln() + p.ln();
    for k in (0..per_panel).rev() {
        let v = k as f64 * du;
        let xk = hi - right_half * v.powf(p);
        let w = simpson_weight(k, per_panel, du);
        x.push(xk);
        log_w.push(w.ln() + base + xlogy(k_hi - 1.0, v) + e_lo * (xk - lo).ln());
    }
    // the midpoint (v = 1) is shared with the left panel's last node
    let v_mid_w = simpson_weight(per_panel, per_panel, du).ln() + base + e_lo * half.ln();
    log_w[per_panel] = log_add_exp(log_w[per_panel], v_mid_w);
    Ok(Nodes { x, log_w })
}

/// Location of the bulk of an unnormalized log density on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bulk {
    pub lo: f64,
    pub hi: f64,
    pub mode: f64,
    pub max: f64,
}

/// Finds the mode of `log_f` (coarse scan, then golden-section refinement)
/// and the interval where `log_f >= max - drop` (bisection). `log_f` may be
/// `-inf` but must not be `+inf` or NaN inside `(lo, hi)`.
pub fn locate_bulk(log_f: impl Fn(f64) -> f64, lo: f64, hi: f64, drop: f64) -> Result<Bulk> {
    let width = hi - lo;
    let mut scan: Vec<f64> = (0..=512).map(|k| lo + width * k as f64 / 512.0).collect();
    for e in 1..=15 {
        let t = 10f64.powi(-e);
        scan.push(lo + width * t);
        scan.push(hi - width * t);
    }
    scan.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scan.dedup();
    let vals: Vec<f64> = scan
        .iter()
        .map(|&x| {
            let v = log_f(x);
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        })
        .collect();
    let (best, &max0) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if !max0.is_finite() {
        return Err(Error::NumericalFailure(format!(
            "log density has no finite maximum on [{lo}, {hi}] (best value {max0})"
        )));
    }
    let a = scan[best.saturating_sub(1)];
    let b = scan[(best + 1).min(scan.len() - 1)];
    let (mode, max) = golden_max(&log_f, a, b, scan[best], max0);
    let level = max - drop;

    let edge = |inside: f64, outside: f64| -> f64 {
        let v = log_f(outside);
        if v.is_nan() || v >= level {
            return outside;
        }
        let (mut good, mut bad) = (inside, outside);
        for _ in 0..200 {
            let m = 0.5 * (good + bad);
            if m == good || m == bad {
                break;
            }
            if log_f(m) >= level {
                good = m;
            } else {
                bad = m;
            }
        }
        bad
    };
    Ok(Bulk {
        lo: edge(mode, lo),
        hi: edge(mode, hi),
        mode,
        max,
    })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, x0: f64, f0: f64) -> (f64, f64) {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut best = (x0, f0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v > best.1 {
                best = (x, v);
            }
        }
    }
    best
}

/// A normalized density on `[lo, hi]` whose logarithm is linear between
/// nodes, optionally with power-law end cells `(x - lo)^{a - 1}` and
/// `(hi - x)^{b - 1}`. Sampling is exact inverse-CDF for this density.
#[derive(Debug, Clone)]
pub struct LogLinearTable {
    xs: Vec<f64>,
    ls: Vec<f64>,
    cum: Vec<f64>,
    log_z: f64,
    left_power: Option<f64>,
    right_power: Option<f64>,
    mean: f64,
}

fn expm1_over(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 + 0.5 * t
    } else {
        t.exp_m1() / t
    }
}

/// Mean of `(x - x0) / width` under density `∝ exp(t (x - x0) / width)`.
fn exp_cell_mean(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        0.5 + t / 12.0
    } else {
        1.0 / (-(-t).exp_m1()) - 1.0 / t
    }
}

impl LogLinearTable {
    /// `ls[k]` is the unnormalized log density at `xs[k]`. Values at an end
    /// node with a power cell are ignored.
    pub fn new(
        xs: Vec<f64>,
        ls: Vec<f64>,
        left_power: Option<f64>,
        right_power: Option<f64>,
    ) -> Result<Self> {
        let n = xs.len();
        if n < 2 || ls.len() != n {
            return Err(Error::domain("LogLinearTable", "need at least two nodes"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("LogLinearTable", "nodes not strictly increasing"));
        }
        if left_power.is_some() && right_power.is_some() && n < 3 {
            return Err(Error::domain("LogLinearTable", "two power cells need three nodes"));
        }
        for p in [left_power, right_power].into_iter().flatten() {
            if !(p > 0.0) {
                return Err(Error::domain("LogLinearTable", format!("power {p} must be positive")));
            }
        }
        let first = usize::from(left_power.is_some());
        let last = n - 1 - usize::from(right_power.is_some());
        let interior = &ls[first..=last];
        if interior.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::NumericalFailure("table log density is NaN or +inf".into()));
        }
        let m = interior.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !m.is_finite() {
            return Err(Error::NumericalFailure("table log density is -inf everywhere".into()));
        }
        let mut mass = Vec::with_capacity(n - 1);
        let mut moment = 0.0;
        for k in 0..n - 1 {
            let (x0, x1) = (xs[k], xs[k + 1]);
            let w = x1 - x0;
            let (cell_mass, cell_mean) = if k == 0 && left_power.is_some() {
                let a = left_power.unwrap();
                ((ls[1] - m).exp() * w / a, x0 + w * a / (a + 1.0))
            } else if k == n - 2 && right_power.is_some() {
                let b = right_power.unwrap();
                ((ls[k] - m).exp() * w / b, x1 - w * b / (b + 1.0))
            } else {
                let (l0, l1) = (ls[k], ls[k + 1]);
                if l0 == f64::NEG_INFINITY && l1 == f64::NEG_INFINITY {
                    (0.0, x0)
                } else if l0 == f64::NEG_INFINITY || l1 == f64::NEG_INFINITY {
                    return Err(Error::NumericalFailure(format!(
                        "log density -inf at one end of cell [{x0}, {x1}]"
                    )));
                } else {
                    let t = l1 - l0;
                    let mass = if t <= 0.0 {
                        w * (l0 - m).exp() * expm1_over(t)
                    } else {
                        w * (l1 - m).exp() * expm1_over(-t)
                    };
                    (mass, x0 + w * exp_cell_mean(t))
                }
            };
            mass.push(cell_mass);
            moment += cell_mass * cell_mean;
        }
        let total: f64 = mass.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::NumericalFailure(format!("table total mass {total}")));
        }
        let mut cum = Vec::with_capacity(n);
        cum.push(0.0);
        let mut acc = 0.0;
        for c in &mass {
            acc += c;
            cum.push(acc / total);
        }
        cum[n - 1] = 1.0;
        Ok(Self {
            xs,
            ls,
            cum,
            log_z: m + total.ln(),
            left_power,
            right_power,
            mean: moment / total,
        })
    }

    pub fn lo(&self) -> f64 {
        self.xs[0]
    }

    pub fn hi(&self) -> f64 {
        self.xs[self.xs.len() - 1]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.xs
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Log of the normalizing constant of the unnormalized node values.
    pub fn log_normalizer(&self) -> f64 {
        self.log_z
    }

    fn cell_of(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|&p| p <= x);
        k.clamp(1, self.xs.len() - 1) - 1
    }

    fn is_left_power(&self, k: usize) -> bool {
        k == 0 && self.left_power.is_some()
    }

    fn is_right_power(&self, k: usize) -> bool {
        k == self.xs.len() - 2 && self.right_power.is_some()
    }

    /// Normalized log density; `-inf` outside `[lo, hi]`.
    pub fn log_density(&self, x: f64) -> f64 {
        if !(x >= self.lo() && x <= self.hi()) {
            return f64::NEG_INFINITY;
        }
        let k = self.cell_of(x);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let raw = if self.is_left_power(k) {
            let a = self.left_power.unwrap();
            self.ls[1] + (a - 1.0) * ((x - x0) / (x1 - x0)).ln()
        } else if self.is_right_power(k) {
            let b = self.right_power.unwrap();
            self.ls[k] + (b - 1.0) * ((x1 - x) / (x1 - x0)).ln()
        } else {
            let (l0, l1) = (self.ls[k], self.ls[k + 1]);
            if l0 == l1 {
                l0
            } else {
                let t = (x - x0) / (x1 - x0);
                l0 + t * (l1 - l0)
            }
        };
        raw - self.log_z
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lo() {
            return 0.0;
        }
        if x >= self.hi() {
            return 1.0;
        }
        let k = self.cell_of(x);
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let cell = self.cum[k + 1] - self.cum[k];
        let s = (x - x0) / (x1 - x0);
        let frac = if self.is_left_power(k) {
            s.powf(self.left_power.unwrap())
        } else if self.is_right_power(k) {
            1.0 - (1.0 - s).powf(self.right_power.unwrap())
        } else {
            let t = self.ls[k + 1] - self.ls[k];
            if t.abs() < 1e-12 {
                s
            } else if t < 0.0 {
                (t * s).exp_m1() / t.exp_m1()
            } else {
                // reflected form avoids overflow of exp(t)
                1.0 - ((-t) * (1.0 - s)).exp_m1() / (-t).exp_m1()
            }
        };
        (self.cum[k] + cell * frac).min(1.0)
    }

    /// Inverse CDF.
    pub fn quantile(&self, v: f64) -> f64 {
        let v = v.clamp(0.0, 1.0);
        let k = self.cum.partition_point(|&c| c <= v).clamp(1, self.xs.len() - 1) - 1;
        let mut k = k;
        while k + 1 < self.xs.len() - 1 && self.cum[k + 1] - self.cum[k] == 0.0 {
            k += 1;
        }
        let (x0, x1) = (self.xs[k], self.xs[k + 1]);
        let w = x1 - x0;
        let cell = self.cum[k + 1] - self.cum[k];
        let r = if cell > 0.0 { ((v - self.cum[k]) / cell).clamp(0.0, 1.0) } else { 0.5 };
        let s = if self.is_left_power(k) {
            r.powf(1.0 / self.left_power.unwrap())
        } else if self.is_right_power(k) {
            1.0 - (1.0 - r).powf(1.0 / self.right_power.unwrap())
        } else {
            let t = self.ls[k + 1] - self.ls[k];
            if t.abs() < 1e-12 {
                r
            } else if t < 0.0 {
                (r * t.exp_m1()).ln_1p() / t
            } else {
                1.0 - ((1.0 - r) * (-t).exp_m1()).ln_1p() / (-t)
            }
        };
        (x0 + w * s.clamp(0.0, 1.0)).clamp(x0, x1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }
}
