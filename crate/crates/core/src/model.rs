//! The simple two-component mixture `(1 - theta) F_0 + theta F_eps`, its
//! local asymptotic quantities, and observed datasets.
//!
//! Two score conventions exist for a family:
//!
//! * the *limit* score `g` (the derivative of `eps -> f_eps / f_0` at
//!   `eps = 0`), with information `I = F_0(g^2)`; this is what
//!   [`MixtureFamily::score`] and [`MixtureFamily::information`] return;
//! * the *exact local* score `g_eps = (f_eps / f_0 - 1) / eps` with
//!   information `I_eps = F_0(g_eps^2)`, for which the remainder
//!   `f_eps / f_0 - 1 - eps g_eps` vanishes identically. When `eps` is held
//!   fixed while `n` grows this is the only score that satisfies the
//!   remainder condition, and as `eps -> 0` it converges to the limit score.
//!
//! [`LocalExpansion`] packages a centering statistic and information under
//! either convention for the asymptotic diagnostics.

use std::fmt;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::special::{log_add_exp, LN_SQRT_2PI};

pub type LogDensityFn = dyn Fn(f64) -> f64 + Send + Sync;
pub type ComponentSampler = dyn Fn(&mut dyn RngCore) -> f64 + Send + Sync;

/// First two moments of both mixture components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentMoments {
    pub mean0: f64,
    pub mean_eps: f64,
    pub var0: f64,
    pub var_eps: f64,
}

/// User-supplied components. The score and information must be given
/// explicitly; they are never obtained by differentiating in `eps`.
pub struct CustomComponents {
    pub name: String,
    pub log_f0: Box<LogDensityFn>,
    pub log_f_eps: Box<LogDensityFn>,
    pub score: Box<LogDensityFn>,
    pub information: f64,
    pub sample_f0: Box<ComponentSampler>,
    pub sample_f_eps: Box<ComponentSampler>,
    pub moments: Option<ComponentMoments>,
    /// Integration range used for quadratures against `F_0`.
    pub support: (f64, f64),
}

#[derive(Clone)]
pub enum FamilyKind {
    LocationNormal,
    ScaleNormal,
    Custom(Arc<CustomComponents>),
}

impl fmt::Debug for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::LocationNormal => write!(f, "LocationNormal"),
            FamilyKind::ScaleNormal => write!(f, "ScaleNormal"),
            FamilyKind::Custom(c) => write!(f, "Custom({})", c.name),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MixtureFamily {
    kind: FamilyKind,
    eps: f64,
    sigma: f64,
    local_information: f64,
}

/// Densities and score of a family at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyEval {
    pub f0: f64,
    pub f_eps: f64,
    pub g: f64,
    pub mix: f64,
    pub log_mix: f64,
}

impl MixtureFamily {
    /// `F_0 = N(0, sigma^2)`, `F_eps = N(eps, sigma^2)`.
    pub fn location_normal(eps: f64, sigma: f64) -> Result<Self> {
        check_eps(eps, true)?;
        check_sigma(sigma)?;
        let local_information = (eps * eps / (sigma * sigma)).exp_m1() / (eps * eps);
        Ok(Self {
            kind: FamilyKind::LocationNormal,
            eps,
            sigma,
            local_information,
        })
    }

    /// `F_0 = N(0, sigma^2)`, `F_eps = N(0, sigma^2 (1 - eps)^2)`; needs `eps < 1`.
    pub fn scale_normal(eps: f64, sigma: f64) -> Result<Self> {
        check_eps(eps, false)?;
        check_sigma(sigma)?;
        let shrink = 1.0 - eps;
        // F_0[(f_eps/f_0)^2] = 1 / ((1 - eps) sqrt(2 - (1 - eps)^2))
        let second = 1.0 / (shrink * (2.0 - shrink * shrink).sqrt());
        Ok(Self {
            kind: FamilyKind::ScaleNormal,
            eps,
            sigma,
            local_information: (second - 1.0) / (eps * eps),
        })
    }

    pub fn custom(eps: f64, components: CustomComponents) -> Result<Self> {
        check_eps(eps, true)?;
        if !(components.information > 0.0 && components.information.is_finite()) {
            return Err(Error::domain(
                "MixtureFamily::custom",
                format!("information must be positive, got {}", components.information),
            ));
        }
        let (lo, hi) = components.support;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(Error::domain(
                "MixtureFamily::custom",
                format!("support must be a finite interval, got ({lo}, {hi})"),
            ));
        }
        let components = Arc::new(components);
        let c = components.clone();
        let local_information = simpson_on(lo, hi, 20_001, |x| {
            let ratio_m1 = ((c.log_f_eps)(x) - (c.log_f0)(x)).exp_m1();
            ratio_m1 * ratio_m1 * (c.log_f0)(x).exp()
        }) / (eps * eps);
        Ok(Self {
            kind: FamilyKind::Custom(components),
            eps,
            sigma: 1.0,
            local_information,
        })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same family shape with a different separation `eps`.
    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        match &self.kind {
            FamilyKind::LocationNormal => Self::location_normal(eps, self.sigma),
            FamilyKind::ScaleNormal => Self::scale_normal(eps, self.sigma),
            FamilyKind::Custom(_) => Err(Error::UnsupportedFamily(
                "custom families are constructed for a single eps".into(),
            )),
        }
    }

    pub fn name(&self) -> &str {
        match &self.kind {
            FamilyKind::LocationNormal => "location",
            FamilyKind::ScaleNormal => "scale",
            FamilyKind::Custom(c) => &c.name,
        }
    }

    pub fn log_f0(&self, x: f64) -> f64 {
        let s = self.sigma;
        match &self.kind {
            FamilyKind::LocationNormal | FamilyKind::ScaleNormal => {
                -0.5 * (x / s).powi(2) - s.ln() - LN_SQRT_2PI
            }
            FamilyKind::Custom(c) => (c.log_f0)(x),
        }
    }

    pub fn log_f_eps(&self, x: f64) -> f64 {
        let s = self.sigma;
        match &self.kind {
            FamilyKind::LocationNormal => -0.5 * ((x - self.eps) / s).powi(2) - s.ln() - LN_SQRT_2PI,
            FamilyKind::ScaleNormal => {
                let s1 = s * (1.0 - self.eps);
                -0.5 * (x / s1).powi(2) - s1.ln() - LN_SQRT_2PI
            }
            FamilyKind::Custom(c) => (c.log_f_eps)(x),
        }
    }

    /// `ln(f_eps(x) / f_0(x))`, in closed form for the built-in families.
    pub fn log_ratio(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        match &self.kind {
            FamilyKind::LocationNormal => (self.eps * x - 0.5 * self.eps * self.eps) / s2,
            FamilyKind::ScaleNormal => {
                let shrink = 1.0 - self.eps;
                -shrink.ln() - 0.5 * x * x / s2 * (1.0 / (shrink * shrink) - 1.0)
            }
            FamilyKind::Custom(c) => (c.log_f_eps)(x) - (c.log_f0)(x),
        }
    }

    /// Limit score `g`.
    pub fn score(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        match &self.kind {
            FamilyKind::LocationNormal => x / s2,
            FamilyKind::ScaleNormal => 1.0 - x * x / s2,
            FamilyKind::Custom(c) => (c.score)(x),
        }
    }

    /// Limit Fisher information `I = F_0(g^2)`.
    pub fn information(&self) -> f64 {
        match &self.kind {
            FamilyKind::LocationNormal => 1.0 / (self.sigma * self.sigma),
            FamilyKind::ScaleNormal => 2.0,
            FamilyKind::Custom(c) => c.information,
        }
    }

    /// Exact local score `(f_eps/f_0 - 1) / eps`.
    pub fn local_score(&self, x: f64) -> f64 {
        self.log_ratio(x).exp_m1() / self.eps
    }

    /// `F_0(g_eps^2)`.
    pub fn local_information(&self) -> f64 {
        self.local_information
    }

    /// `F_0(r_eps^2) / eps^2` with `r_eps = f_eps/f_0 - eps g - 1`, by quadrature.
    pub fn remainder_ratio(&self) -> f64 {
        let (lo, hi) = self.quadrature_range();
        simpson_on(lo, hi, 40_001, |x| {
            let r = self.log_ratio(x).exp_m1() - self.eps * self.score(x);
            r * r * self.log_f0(x).exp()
        }) / (self.eps * self.eps)
    }

    pub(crate) fn quadrature_range(&self) -> (f64, f64) {
        match &self.kind {
            FamilyKind::Custom(c) => c.support,
            _ => (-40.0 * self.sigma, 40.0 * self.sigma),
        }
    }

    pub fn moments(&self) -> Option<ComponentMoments> {
        let s2 = self.sigma * self.sigma;
        match &self.kind {
            FamilyKind::LocationNormal => Some(ComponentMoments {
                mean0: 0.0,
                mean_eps: self.eps,
                var0: s2,
                var_eps: s2,
            }),
            FamilyKind::ScaleNormal => Some(ComponentMoments {
                mean0: 0.0,
                mean_eps: 0.0,
                var0: s2,
                var_eps: s2 * (1.0 - self.eps).powi(2),
            }),
            FamilyKind::Custom(c) => c.moments,
        }
    }

    /// Evaluates densities, limit score and mixture density at `x`.
    pub fn eval(&self, theta: f64, x: f64) -> Result<FamilyEval> {
        if !x.is_finite() {
            return Err(Error::domain("family_eval", format!("non-finite x = {x}")));
        }
        check_theta("family_eval", theta)?;
        let l0 = self.log_f0(x);
        let le = self.log_f_eps(x);
        let log_mix = if theta == 0.0 {
            l0
        } else if theta == 1.0 {
            le
        } else {
            log_add_exp((1.0 - theta).ln() + l0, theta.ln() + le)
        };
        let f0 = l0.exp();
        let f_eps = le.exp();
        Ok(FamilyEval {
            f0,
            f_eps,
            g: self.score(x),
            mix: log_mix.exp(),
            log_mix,
        })
    }

    /// Draws one observation from `F_eps` (`from_eps = true`) or `F_0`.
    pub fn sample_component<R: Rng + ?Sized>(&self, from_eps: bool, rng: &mut R) -> f64 {
        match &self.kind {
            FamilyKind::LocationNormal => {
                let z: f64 = rng.sample(StandardNormal);
                let loc = if from_eps { self.eps } else { 0.0 };
                loc + self.sigma * z
            }
            FamilyKind::ScaleNormal => {
                let z: f64 = rng.sample(StandardNormal);
                let scale = if from_eps { self.sigma * (1.0 - self.eps) } else { self.sigma };
                scale * z
            }
            FamilyKind::Custom(c) => {
                let mut dynrng = DynRng(rng);
                if from_eps {
                    (c.sample_f_eps)(&mut dynrng)
                } else {
                    (c.sample_f0)(&mut dynrng)
                }
            }
        }
    }
}

struct DynRng<'a, R: Rng + ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for DynRng<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

fn check_eps(eps: f64, allow_one: bool) -> Result<()> {
    let ok = eps > 0.0 && if allow_one { eps <= 1.0 } else { eps < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::domain(
            "MixtureFamily",
            format!("eps must lie in {}, got {eps}", if allow_one { "(0, 1]" } else { "(0, 1)" }),
        ))
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("MixtureFamily", format!("sigma must be positive, got {sigma}")))
    }
}

pub(crate) fn check_theta(context: &'static str, theta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&theta) {
        Ok(())
    } else {
        Err(Error::domain(context, format!("theta = {theta} outside [0, 1]")))
    }
}

fn simpson_on(lo: f64, hi: f64, points: usize, f: impl Fn(f64) -> f64) -> f64 {
    let intervals = (points - 1) & !1;
    let h = (hi - lo) / intervals as f64;
    let mut acc = f(lo) + f(hi);
    for k in 1..intervals {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + h * k as f64);
    }
    acc * h / 3.0
}

/// Beta prior `Beta(alpha1, alpha0)` on the mixture weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorParams {
    pub alpha1: f64,
    pub alpha0: f64,
}

impl Default for PriorParams {
    fn default() -> Self {
        Self {
            alpha1: 1.0,
            alpha0: 1.0,
        }
    }
}

impl PriorParams {
    pub fn new(alpha1: f64, alpha0: f64) -> Result<Self> {
        if alpha1 > 0.0 && alpha0 > 0.0 && alpha1.is_finite() && alpha0.is_finite() {
            Ok(Self { alpha1, alpha0 })
        } else {
            Err(Error::domain(
                "PriorParams",
                format!("shape parameters must be positive, got ({alpha1}, {alpha0})"),
            ))
        }
    }
}

/// Observations with cached likelihood ratios and scaling constants.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: Vec<f64>,
    ratios: Vec<f64>,
    excess: Vec<f64>,
    z: f64,
    local_z: f64,
    eps: f64,
    lambda: f64,
    rate: f64,
}

impl Dataset {
    pub fn from_observations(family: &MixtureFamily, x: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::domain("Dataset", "dataset must contain at least one observation"));
        }
        let mut ratios = Vec::with_capacity(x.len());
        let mut excess = Vec::with_capacity(x.len());
        for (i, &xi) in x.iter().enumerate() {
            if !xi.is_finite() {
                return Err(Error::CorruptDataset(format!("observation {i} is {xi}")));
            }
            let lr = family.log_ratio(xi);
            let s = lr.exp();
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::CorruptDataset(format!(
                    "likelihood ratio at observation {i} (x = {xi}) is {s}"
                )));
            }
            ratios.push(s);
            excess.push(lr.exp_m1());
        }
        let n = x.len() as f64;
        let eps = family.eps();
        let lambda = eps * n.sqrt();
        let rate = n / lambda;
        let z = z_statistic_of(&x, family);
        let local_z = excess.iter().sum::<f64>() / (eps * n.sqrt());
        Ok(Self {
            x,
            ratios,
            excess,
            z,
            local_z,
            eps,
            lambda,
            rate,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `s_i = f_eps(x_i) / f_0(x_i)`.
    pub fn ratios(&self) -> &[f64] {
        &self.ratios
    }

    /// `s_i - 1`, computed without cancellation.
    pub fn excess(&self) -> &[f64] {
        &self.excess
    }

    /// `Z_n` under the limit score.
    pub fn z(&self) -> f64 {
        self.z
    }

    /// `Z_n` under the exact local score.
    pub fn local_z(&self) -> f64 {
        self.local_z
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// State scaling `lambda_n = eps n^{1/2}`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Time scaling `r_n = n / lambda_n = eps^{-1} n^{1/2}`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn mean(&self) -> f64 {
        self.x.iter().sum::<f64>() / self.x.len() as f64
    }
}

/// Draws `n` observations from the mixture at `theta_true`.
pub fn sample_dataset<R: Rng + ?Sized>(
    family: &MixtureFamily,
    theta_true: f64,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::domain("sample_dataset", "n must be at least 1"));
    }
    check_theta("sample_dataset", theta_true)?;
    let x: Vec<f64> = (0..n)
        .map(|_| {
            let from_eps = theta_true > 0.0 && (theta_true >= 1.0 || rng.random::<f64>() < theta_true);
            family.sample_component(from_eps, rng)
        })
        .collect();
    Dataset::from_observations(family, x)
}

fn z_statistic_of(x: &[f64], family: &MixtureFamily) -> f64 {
    x.iter().map(|&xi| family.score(xi)).sum::<f64>() / (x.len() as f64).sqrt()
}

/// `Z_n = n^{-1/2} sum g(x_i)`, recomputed from the observations.
pub fn z_statistic(ds: &Dataset, family: &MixtureFamily) -> f64 {
    z_statistic_of(ds.x(), family)
}

/// First-moment matching estimate of the mixture weight, clamped to [0, 1].
/// Families whose components share a mean fall back to the second moment.
pub fn moment_estimator(ds: &Dataset, family: &MixtureFamily) -> Result<f64> {
    let m = family.moments().ok_or_else(|| {
        Error::UnsupportedFamily(format!("family `{}` provides no component moments", family.name()))
    })?;
    let n = ds.n() as f64;
    let raw = if m.mean_eps != m.mean0 {
        (ds.mean() - m.mean0) / (m.mean_eps - m.mean0)
    } else {
        let second0 = m.var0 + m.mean0 * m.mean0;
        let second_eps = m.var_eps + m.mean_eps * m.mean_eps;
        if second0 == second_eps {
            return Err(Error::UnsupportedFamily(format!(
                "components of `{}` have identical first and second moments",
                family.name()
            )));
        }
        let sample_second = ds.x().iter().map(|x| x * x).sum::<f64>() / n;
        (sample_second - second0) / (second_eps - second0)
    };
    Ok(raw.clamp(0.0, 1.0))
}

/// Centering statistic and curvature of the limiting log-posterior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalExpansion {
    pub z: f64,
    pub information: f64,
}

impl LocalExpansion {
    /// Uses the limit score `g` and `I`.
    pub fn limit(ds: &Dataset, family: &MixtureFamily) -> Self {
        Self {
            z: ds.z(),
            information: family.information(),
        }
    }

    /// Uses the exact local score `g_eps` and `I_eps`.
    pub fn exact(ds: &Dataset, family: &MixtureFamily) -> Self {
        Self {
            z: ds.local_z(),
            information: family.local_information(),
        }
    }
}

/// Which score convention a diagnostic centers on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Centering {
    #[default]
    Exact,
    Limit,
}

impl Centering {
    pub fn expansion(self, ds: &Dataset, family: &MixtureFamily) -> LocalExpansion {
        match self {
            Centering::Exact => LocalExpansion::exact(ds, family),
            Centering::Limit => LocalExpansion::limit(ds, family),
        }
    }
}

/// Metadata written next to a dataset CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub family: String,
    pub eps: f64,
    pub sigma: f64,
    pub n: usize,
    pub seed: u64,
    pub theta_true: f64,
}

impl DatasetMeta {
    pub fn to_text(&self) -> String {
        format!(
            "family={}\neps={}\nsigma={}\nn={}\nseed={}\ntheta_true={}\n",
            self.family, self.eps, self.sigma, self.n, self.seed, self.theta_true
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = std::collections::BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                key: line.to_string(),
                line: i + 1,
                message: "expected key=value".into(),
            })?;
            map.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
        }
        fn take<T: std::str::FromStr>(
            map: &std::collections::BTreeMap<String, (usize, String)>,
            key: &str,
        ) -> Result<T> {
            let (line, raw) = map.get(key).ok_or_else(|| Error::Parse {
                key: key.to_string(),
                line: 0,
                message: "missing required key".into(),
            })?;
            raw.parse().map_err(|_| Error::Parse {
                key: key.to_string(),
                line: *line,
                message: format!("cannot parse `{raw}`"),
            })
        }
        Ok(Self {
            family: take(&map, "family")?,
            eps: take(&map, "eps")?,
            sigma: take(&map, "sigma")?,
            n: take(&map, "n")?,
            seed: take(&map, "seed")?,
            theta_true: take(&map, "theta_true")?,
        })
    }
}

/// Writes `index,x` rows.
pub fn write_dataset_csv(path: &Path, ds: &Dataset, header: &[String]) -> Result<()> {
    let mut out = String::new();
    for line in header {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("index,x\n");
    for (i, x) in ds.x().iter().enumerate() {
        out.push_str(&format!("{i},{x}\n"));
    }
    write_file(path, out.as_bytes())
}

/// Reads observations written by [`write_dataset_csv`].
pub fn read_dataset_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut xs = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != "index,x" {
                return Err(Error::CorruptDataset(format!("line {}: expected header `index,x`", i + 1)));
            }
            seen_header = true;
            continue;
        }
        let (idx, x) = line
            .split_once(',')
            .ok_or_else(|| Error::CorruptDataset(format!("line {}: expected `index,x`", i + 1)))?;
        let idx: usize = idx
            .parse()
            .map_err(|_| Error::CorruptDataset(format!("line {}: bad index `{idx}`", i + 1)))?;
        if idx != xs.len() {
            return Err(Error::CorruptDataset(format!(
                "line {}: index {idx} out of sequence",
                i + 1
            )));
        }
        let x: f64 = x
            .parse()
            .map_err(|_| Error::CorruptDataset(format!("line {}: bad value `{x}`", i + 1)))?;
        xs.push(x);
    }
    Ok(xs)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
