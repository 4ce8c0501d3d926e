//! Passing from decay on the integers to decay on the whole half-line for
//! measures supported in `[0,1]`, with `μ̂(ξ) = ∫ e^{-2πiξx} dμ(x)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gauge::OmegaGauge;
use crate::error::{invalid, Error, Result};
use crate::numeric::gauss_legendre;

/// Relative slack allowed on the integer precondition (quadrature error).
const INTEGER_SLACK: f64 = 1e-12;
const GL_ORDER: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LineMeasure {
    /// Lebesgue measure restricted to `[0,1]`.
    Lebesgue,
    Atoms { points: Vec<(f64, f64)> },
}

impl LineMeasure {
    /// `μ̂(ξ)` by Gauss–Legendre quadrature, or exactly for atoms.
    pub fn transform(&self, xi: f64) -> Complex64 {
        match self {
            LineMeasure::Lebesgue => {
                let (nodes, weights) = gauss_legendre(GL_ORDER);
                let panels = (2.0 * xi.abs()).ceil().max(4.0) as usize;
                let h = 1.0 / panels as f64;
                let mut s = Complex64::new(0.0, 0.0);
                for p in 0..panels {
                    let mid = (p as f64 + 0.5) * h;
                    for (x, w) in nodes.iter().zip(&weights) {
                        let t = mid + 0.5 * h * x;
                        s += Complex64::from_polar(0.5 * h * w, -2.0 * PI * xi * t);
                    }
                }
                s
            }
            LineMeasure::Atoms { points } => {
                points.iter().map(|&(x, w)| Complex64::from_polar(w, -2.0 * PI * xi * x)).sum()
            }
        }
    }

    fn check_support(&self) -> Result<()> {
        if let LineMeasure::Atoms { points } = self {
            if points.iter().any(|&(x, _)| !(0.0..=1.0).contains(&x)) {
                return Err(invalid("atoms must lie in [0,1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    pub xi_max: f64,
    pub points: usize,
    /// Integers `1..=integer_checks` on which `|μ̂(n)| ≤ Φ(n)` is required.
    pub integer_checks: u64,
    /// Refuse gauges whose measured doubling ratio exceeds this.
    pub doubling_limit: f64,
    /// Declared constant; points with `|μ̂| > c_target·Φ` are violations.
    pub c_target: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self { xi_max: 100.0, points: 10_000, integer_checks: 1000, doubling_limit: 16.0, c_target: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    /// Smallest `C` with `|μ̂(ξ)| ≤ C·Φ(ξ)` on the grid.
    pub c_fit: f64,
    pub doubling: f64,
    pub integer_ratio: f64,
    pub violations: usize,
    pub samples: Vec<(f64, f64, f64)>,
}

pub fn kahane_transfer(mu: &LineMeasure, phi: &OmegaGauge, cfg: &TransferConfig) -> Result<TransferReport> {
    mu.check_support()?;
    if !(cfg.xi_max > 0.0) || cfg.points == 0 {
        return Err(invalid("empty frequency grid"));
    }
    let grid: Vec<f64> = (1..=cfg.points).map(|i| i as f64 * cfg.xi_max / cfg.points as f64).collect();
    let doubling = phi.doubling_constant(grid.iter().copied())?;
    if doubling > cfg.doubling_limit {
        return Err(Error::Precondition(format!(
            "{} has doubling ratio {doubling} > {}",
            phi.source(),
            cfg.doubling_limit
        )));
    }
    let mut integer_ratio = 0f64;
    for n in 1..=cfg.integer_checks {
        let v = mu.transform(n as f64).norm();
        let bound = phi.eval(n as f64)?;
        integer_ratio = integer_ratio.max(v / bound);
        if v > bound * (1.0 + INTEGER_SLACK) + INTEGER_SLACK {
            return Err(Error::Precondition(format!("|mu^({n})| = {v} exceeds Phi({n}) = {bound}")));
        }
    }
    let mut c_fit = 0f64;
    let mut violations = 0;
    let mut samples = Vec::with_capacity(grid.len());
    for &xi in &grid {
        let v = mu.transform(xi).norm();
        let b = phi.eval(xi)?;
        c_fit = c_fit.max(v / b);
        if v > cfg.c_target * b {
            violations += 1;
        }
        samples.push((xi, v, b));
    }
    Ok(TransferReport { c_fit, doubling, integer_ratio, violations, samples })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lebesgue_quadrature_matches_closed_form() {
        for xi in [0.3, 1.0, 7.5, 99.9] {
            let want = Complex64::from_polar(1.0, -PI * xi) * ((PI * xi).sin() / (PI * xi));
            assert!((LineMeasure::Lebesgue.transform(xi) - want).norm() < 1e-13, "xi={xi}");
        }
    }

    #[test]
    fn lebesgue_transfers_with_small_constant() {
        let phi = OmegaGauge::parse("1/(1+t)").unwrap();
        let r = kahane_transfer(&LineMeasure::Lebesgue, &phi, &TransferConfig::default()).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.c_fit <= 2.0 && r.c_fit > 0.9);
    }

    #[test]
    fn atom_at_origin_is_refused() {
        let phi = OmegaGauge::parse("1/(1+t)").unwrap();
        let mu = LineMeasure::Atoms { points: vec![(0.0, 1.0)] };
        assert!(matches!(kahane_transfer(&mu, &phi, &TransferConfig::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn fast_gauge_fails_doubling() {
        let phi = OmegaGauge::parse("exp(-t)").unwrap();
        let e = kahane_transfer(&LineMeasure::Lebesgue, &phi, &TransferConfig::default());
        assert!(matches!(e, Err(Error::Precondition(_))));
    }
}
