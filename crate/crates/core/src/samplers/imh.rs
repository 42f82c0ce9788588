use rand::Rng;

use crate::error::{Error, Result};
use crate::samplers::proposal::IndependenceProposal;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImhStep {
    pub theta: f64,
    pub accepted: bool,
}

/// Current state of an independence chain with its cached log importance
/// weight `ln target - ln proposal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImhState {
    pub theta: f64,
    pub log_weight: f64,
}

fn log_weight<P: IndependenceProposal>(
    theta: f64,
    log_target: &impl Fn(f64) -> f64,
    proposal: &P,
) -> Result<f64> {
    let lt = log_target(theta);
    if lt == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let lp = proposal.log_density(theta);
    let w = lt - lp;
    if w.is_nan() || w == f64::INFINITY {
        return Err(Error::NumericalFailure(format!(
            "importance weight at theta = {theta} is {w} (log target {lt}, log proposal {lp})"
        )));
    }
    Ok(w)
}

impl ImhState {
    pub fn new<P: IndependenceProposal>(
        theta: f64,
        log_target: &impl Fn(f64) -> f64,
        proposal: &P,
    ) -> Result<Self> {
        let log_weight = log_weight(theta, log_target, proposal)?;
        if log_weight == f64::NEG_INFINITY {
            return Err(Error::NumericalFailure(format!(
                "chain started at theta = {theta} where the target density is zero"
            )));
        }
        Ok(Self { theta, log_weight })
    }

    /// Proposes `g` and accepts with probability `min(1, w(g) / w(theta))`.
    pub fn step<P: IndependenceProposal, R: Rng + ?Sized>(
        &mut self,
        log_target: &impl Fn(f64) -> f64,
        proposal: &P,
        rng: &mut R,
    ) -> Result<bool> {
        let g = proposal.sample(rng);
        let w = log_weight(g, log_target, proposal)?;
        let log_u = rng.random::<f64>().ln();
        let log_alpha = w - self.log_weight;
        if log_alpha.is_nan() {
            return Err(Error::NumericalFailure(format!(
                "acceptance log-ratio is NaN for theta = {} -> {g}",
                self.theta
            )));
        }
        if log_u < log_alpha {
            self.theta = g;
            self.log_weight = w;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// One independence Metropolis-Hastings update from `theta`. Neither density
/// needs to be normalized.
pub fn imh_step<P: IndependenceProposal, R: Rng + ?Sized>(
    theta: f64,
    log_target: impl Fn(f64) -> f64,
    proposal: &P,
    rng: &mut R,
) -> Result<ImhStep> {
    let mut state = ImhState::new(theta, &log_target, proposal)?;
    let accepted = state.step(&log_target, proposal, rng)?;
    Ok(ImhStep {
        theta: state.theta,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    /// Proposal on finitely many atoms.
    struct Atoms {
        points: Vec<f64>,
        probs: Vec<f64>,
    }

    impl IndependenceProposal for Atoms {
        fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (x, p) in self.points.iter().zip(&self.probs) {
                acc += p;
                if u < acc {
                    return *x;
                }
            }
            *self.points.last().unwrap()
        }

        fn log_density(&self, theta: f64) -> f64 {
            self.points
                .iter()
                .position(|x| *x == theta)
                .map_or(f64::NEG_INFINITY, |i| self.probs[i].ln())
        }
    }

    #[test]
    fn proposal_equal_to_target_always_accepts() {
        let q = Atoms {
            points: vec![0.2, 0.7],
            probs: vec![0.3, 0.7],
        };
        let mut rng = stream(1, &[]);
        let mut theta = 0.2;
        for _ in 0..10_000 {
            let step = imh_step(theta, |t| q.log_density(t) + 5.0, &q, &mut rng).unwrap();
            assert!(step.accepted);
            theta = step.theta;
        }
    }

    #[test]
    fn detailed_balance_on_three_atoms() {
        let target = [0.5f64, 0.2, 0.3];
        let q = Atoms {
            points: vec![0.1, 0.5, 0.9],
            probs: vec![0.2, 0.5, 0.3],
        };
        let log_target = |t: f64| {
            q.points.iter().position(|x| *x == t).map_or(f64::NEG_INFINITY, |i| target[i].ln())
        };
        let mut rng = stream(2, &[]);
        let mut state = ImhState::new(0.1, &log_target, &q).unwrap();
        let steps = 2_000_000;
        let mut flux = [[0usize; 3]; 3];
        let idx = |t: f64| q.points.iter().position(|x| *x == t).unwrap();
        for _ in 0..steps {
            let from = idx(state.theta);
            state.step(&log_target, &q, &mut rng).unwrap();
            flux[from][idx(state.theta)] += 1;
        }
        for a in 0..3 {
            for b in 0..a {
                let ab = flux[a][b] as f64 / steps as f64;
                let ba = flux[b][a] as f64 / steps as f64;
                let se = ((ab + ba) / steps as f64).sqrt();
                assert!((ab - ba).abs() < 4.0 * se, "{a}->{b}: {ab} vs {ba}");
            }
        }
    }

    #[test]
    fn replay_is_identical() {
        let q = Atoms {
            points: vec![0.2, 0.7],
            probs: vec![0.5, 0.5],
        };
        let log_target = |t: f64| if t == 0.2 { 0.1f64.ln() } else { 0.9f64.ln() };
        let run = || {
            let mut rng = stream(77, &[3]);
            let mut state = ImhState::new(0.2, &log_target, &q).unwrap();
            (0..1000).map(|_| state.step(&log_target, &q, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn nan_weight_is_reported() {
        let q = Atoms {
            points: vec![0.2],
            probs: vec![1.0],
        };
        let mut rng = stream(0, &[]);
        let err = imh_step(0.2, |_| f64::NAN, &q, &mut rng).unwrap_err();
        assert!(matches!(err, Error::NumericalFailure(_)));
    }
}
