//! Empirical complexity-class selection by leave-one-out regression.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Candidate asymptotic classes, ordered from cheapest to most expensive.
/// The order doubles as the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityClass {
    Constant,
    Linear,
    Linearithmic,
    Quadratic,
    Cubic,
    Exponential,
}

impl ComplexityClass {
    pub const ALL: [ComplexityClass; 6] = [
        ComplexityClass::Constant,
        ComplexityClass::Linear,
        ComplexityClass::Linearithmic,
        ComplexityClass::Quadratic,
        ComplexityClass::Cubic,
        ComplexityClass::Exponential,
    ];

    /// f(n) ∈ {1, n, n·ln n, n², n³, 2^n}.
    pub fn feature(self, n: f64) -> f64 {
        match self {
            ComplexityClass::Constant => 1.0,
            ComplexityClass::Linear => n,
            ComplexityClass::Linearithmic => n * n.ln(),
            ComplexityClass::Quadratic => n * n,
            ComplexityClass::Cubic => n * n * n,
            ComplexityClass::Exponential => n.exp2(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ComplexityClass::Constant => "constant",
            ComplexityClass::Linear => "linear",
            ComplexityClass::Linearithmic => "linearithmic",
            ComplexityClass::Quadratic => "quadratic",
            ComplexityClass::Cubic => "cubic",
            ComplexityClass::Exponential => "exponential",
        }
    }
}

impl fmt::Display for ComplexityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ComplexityClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ComplexityClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Complexity(format!("unknown complexity class '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityFit {
    pub best: ComplexityClass,
    pub decisive: bool,
    /// Normalized leave-one-out RMSE per candidate, in candidate order.
    pub scores: Vec<(ComplexityClass, f64)>,
}

/// Least-squares slope of `y ≈ a·x` through the origin, clamped to `a ≥ 0`.
fn proportional_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx > 0.0 {
        (sxy / sxx).max(0.0)
    } else {
        0.0
    }
}

/// Leave-one-out RMSE of the proportional fit, divided by mean(y).
fn loo_score(class: ComplexityClass, ns: &[f64], ys: &[f64], mean_y: f64) -> f64 {
    let raw: Vec<f64> = ns.iter().map(|&n| class.feature(n)).collect();
    // rescale the feature so huge exponentials stay representable
    let scale = raw.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !scale.is_finite() || scale == 0.0 {
        return f64::INFINITY;
    }
    let xs: Vec<f64> = raw.iter().map(|x| x / scale).collect();
    let mut sq = 0.0;
    let mut tx = Vec::with_capacity(xs.len() - 1);
    let mut ty = Vec::with_capacity(xs.len() - 1);
    for i in 0..xs.len() {
        tx.clear();
        ty.clear();
        for j in (0..xs.len()).filter(|&j| j != i) {
            tx.push(xs[j]);
            ty.push(ys[j]);
        }
        let a = proportional_slope(&tx, &ty);
        let r = ys[i] - a * xs[i];
        sq += r * r;
    }
    let rmse = (sq / xs.len() as f64).sqrt();
    if rmse == 0.0 {
        0.0
    } else {
        rmse / mean_y
    }
}

/// Picks the candidate class whose proportional fit `y ≈ a·f(n)` (a ≥ 0)
/// has the lowest normalized leave-one-out RMSE. The choice is decisive
/// when its score is at most `margin` times the runner-up's.
pub fn fit_complexity_class(
    points: &[(u64, f64)],
    candidates: &[ComplexityClass],
    margin: f64,
) -> Result<ComplexityFit> {
    if candidates.is_empty() {
        return Err(Error::Complexity("no candidate classes".into()));
    }
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(Error::Complexity(format!("margin must lie in (0, 1], got {margin}")));
    }
    if let Some(&(n, y)) = points.iter().find(|&&(n, y)| n == 0 || !(y >= 0.0 && y.is_finite())) {
        return Err(Error::Complexity(format!(
            "sizes must be positive and values finite and non-negative, got ({n}, {y})"
        )));
    }
    let mut distinct: Vec<u64> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 4 {
        return Err(Error::Complexity(format!(
            "need at least 4 distinct sizes, got {}",
            distinct.len()
        )));
    }

    let ns: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mean_y = ys.iter().sum::<f64>() / ys.len() as f64;

    let mut ordered: Vec<ComplexityClass> = candidates.to_vec();
    ordered.sort_unstable();
    ordered.dedup();
    let scores: Vec<(ComplexityClass, f64)> = ordered.iter().map(|&c| (c, loo_score(c, &ns, &ys, mean_y))).collect();

    let mut ranked = scores.clone();
    // stable: equal scores keep candidate order
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best, best_score) = ranked[0];
    let decisive = match ranked.get(1) {
        Some(&(_, second)) => best_score <= margin * second,
        None => true,
    };
    Ok(ComplexityFit { best, decisive, scores })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_linear_with_offset() {
        let pts: Vec<(u64, f64)> = (2..=8).map(|n| (n, 3.0 * n as f64 + 2.0)).collect();
        let fit = fit_complexity_class(&pts, &ComplexityClass::ALL, 0.8).unwrap();
        assert_eq!(fit.best, ComplexityClass::Linear);
        assert!(fit.decisive);
    }

    #[test]
    fn exact_exponential() {
        let pts: Vec<(u64, f64)> = (2..=8).map(|n| (n, 5.0 * 2f64.powi(n as i32))).collect();
        let fit = fit_complexity_class(&pts, &ComplexityClass::ALL, 0.8).unwrap();
        assert_eq!(fit.best, ComplexityClass::Exponential);
        assert!(fit.decisive);
        assert!(
            fit.scores
                .iter()
                .find(|s| s.0 == ComplexityClass::Exponential)
                .unwrap()
                .1
                < 1e-12
        );
    }

    #[test]
    fn noisy_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<(u64, f64)> = (2..=10)
            .map(|n| {
                let eps: f64 = rng.gen_range(-0.05..=0.05);
                (n, (n * n) as f64 * (1.0 + eps))
            })
            .collect();
        let fit = fit_complexity_class(&pts, &ComplexityClass::ALL, 0.8).unwrap();
        assert_eq!(fit.best, ComplexityClass::Quadratic);
        assert!(fit.decisive);
    }

    #[test]
    fn rejects_too_few_sizes() {
        let pts = [(2, 1.0), (3, 2.0), (3, 2.1), (4, 3.0)];
        assert!(fit_complexity_class(&pts, &ComplexityClass::ALL, 0.8).is_err());
        let pts = [(2, 1.0), (3, 2.0), (4, -3.0), (5, 3.0)];
        assert!(fit_complexity_class(&pts, &ComplexityClass::ALL, 0.8).is_err());
        let pts = [(2, 1.0), (3, 2.0), (4, 3.0), (5, 4.0)];
        assert!(fit_complexity_class(&pts, &[], 0.8).is_err());
        assert!(fit_complexity_class(&pts, &ComplexityClass::ALL, 0.0).is_err());
    }

    #[test]
    fn ties_break_towards_cheaper_class() {
        let pts: Vec<(u64, f64)> = (1..=6).map(|n| (n, 0.0)).collect();
        let fit = fit_complexity_class(&pts, &ComplexityClass::ALL, 0.8).unwrap();
        assert_eq!(fit.best, ComplexityClass::Constant);
    }

    #[test]
    fn single_candidate_is_decisive() {
        let pts: Vec<(u64, f64)> = (1..=6).map(|n| (n, n as f64)).collect();
        let fit = fit_complexity_class(&pts, &[ComplexityClass::Cubic], 0.8).unwrap();
        assert_eq!(fit.best, ComplexityClass::Cubic);
        assert!(fit.decisive);
    }

    #[test]
    fn huge_exponential_features_do_not_poison_other_scores() {
        let pts: Vec<(u64, f64)> = [4u64, 12, 24, 40, 60, 84, 112, 1200]
            .iter()
            .map(|&e| (e, 8.0 * e as f64))
            .collect();
        let fit = fit_complexity_class(&pts, &ComplexityClass::ALL, 0.8).unwrap();
        assert_eq!(fit.best, ComplexityClass::Linear);
        assert!(fit.scores.last().unwrap().1.is_infinite());
    }

    #[test]
    fn names_round_trip() {
        for c in ComplexityClass::ALL {
            assert_eq!(c.name().parse::<ComplexityClass>().unwrap(), c);
        }
        assert!("factorial".parse::<ComplexityClass>().is_err());
    }
}
