//! The invariant density of the beta-transformation `x -> beta x mod 1`.
//!
//! `f(x) = C * sum_{i >= 0} beta^{-(i+1)} 1_{[0, T^i 1)}(x)`: a nonincreasing
//! step function whose jumps sit on the orbit of 1.

use crate::error::{Error, Result};
use crate::quadrature;

/// Terms with weight below this are dropped from the series.
pub const SERIES_CUTOFF: f64 = 1e-12;

const ORBIT_SNAP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ParryDensity {
    beta: f64,
    weights: Vec<f64>,
    orbit: Vec<f64>,
    normalization: f64,
}

impl ParryDensity {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 1.0 && beta.is_finite()) {
            return Err(Error::invalid("beta", format!("need beta > 1, got {beta}")));
        }
        let mut weights = Vec::new();
        let mut orbit = Vec::new();
        let mut weight = 1.0 / beta;
        // T(1) takes the left-limit value beta - floor(beta), which is 0 for
        // integer beta.
        let mut point = 1.0;
        while weight >= SERIES_CUTOFF {
            weights.push(weight);
            orbit.push(point);
            point = if orbit.len() == 1 {
                beta - beta.floor()
            } else {
                // Orbits of 1 that terminate in exact arithmetic land on an
                // integer; snap so rounding does not restart them near 1.
                let y = beta * point;
                let r = y.round();
                if (y - r).abs() < ORBIT_SNAP {
                    0.0
                } else {
                    y - y.floor()
                }
            };
            weight /= beta;
        }
        // The integral of each indicator is its right endpoint.
        let mass: f64 = weights.iter().zip(&orbit).map(|(w, t)| w * t).sum();
        Ok(ParryDensity {
            beta,
            weights,
            orbit,
            normalization: 1.0 / mass,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// The normalizing constant `C`.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    /// Truncated orbit `T^i(1)`, `i = 0, 1, ...`.
    pub fn orbit(&self) -> &[f64] {
        &self.orbit
    }

    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.orbit)
            .filter(|&(_, &t)| x < t || (x >= 1.0 && t >= 1.0))
            .map(|(w, _)| w)
            .sum();
        self.normalization * s
    }

    /// Jump locations inside `(0, 1)` with the size of the downward jump,
    /// sorted by location. Coincident orbit points are merged.
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        let mut jumps: Vec<(f64, f64)> = self
            .weights
            .iter()
            .zip(&self.orbit)
            .filter(|&(_, &t)| t > 0.0 && t < 1.0)
            .map(|(w, &t)| (t, self.normalization * w))
            .collect();
        jumps.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(jumps.len());
        for (t, size) in jumps {
            match merged.last_mut() {
                Some(last) if last.0 == t => last.1 += size,
                _ => merged.push((t, size)),
            }
        }
        merged
    }

    /// Exact total variation on `[0, 1]`: the sum of the interior jumps.
    pub fn total_variation(&self) -> f64 {
        self.jumps().iter().map(|(_, s)| s).sum()
    }

    /// `sup f = f(0)`.
    pub fn sup(&self) -> f64 {
        self.eval(0.0)
    }

    /// `inf f` over `[0, 1)`, the left limit at 1.
    pub fn inf(&self) -> f64 {
        self.normalization * self.weights[0]
    }

    /// Quadrature of the density over `[a, b]`, splitting at the jumps.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let breaks: Vec<f64> = self.jumps().into_iter().map(|(t, _)| t).collect();
        quadrature::integrate_piecewise(|x| self.eval(x), a, b, &breaks, 2)
    }
}
