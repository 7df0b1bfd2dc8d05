//! Concentration and deviation envelopes for weakly dependent sequences
//! with parametric mixing coefficients.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `e^{1/e}`, the prefactor of every exponential bound.
pub fn prefactor() -> f64 {
    E.powf(1.0 / E)
}

/// Mixing coefficients `Phi(k)`, `k >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MixingModel {
    /// `Phi(k) = c gamma^k`.
    Geometric { c: f64, gamma: f64 },
    /// Listed values, zero beyond the end of the list.
    Explicit { values: Vec<f64> },
}

impl MixingModel {
    pub fn geometric(c: f64, gamma: f64) -> Result<Self> {
        let m = MixingModel::Geometric { c, gamma };
        m.validate()?;
        Ok(m)
    }

    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        let m = MixingModel::Explicit { values };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MixingModel::Geometric { c, gamma } => {
                if !(*c > 0.0 && c.is_finite()) {
                    return Err(Error::invalid("C", format!("need C > 0, got {c}")));
                }
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return Err(Error::invalid("gamma", format!("need 0 < gamma < 1, got {gamma}")));
                }
            }
            MixingModel::Explicit { values } => {
                if values.is_empty() {
                    return Err(Error::Empty("mixing coefficients"));
                }
                if values.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                    return Err(Error::invalid("phi", "coefficients must be finite and nonnegative"));
                }
            }
        }
        Ok(())
    }

    pub fn phi(&self, k: usize) -> f64 {
        match self {
            MixingModel::Geometric { c, gamma } => c * gamma.powi(k as i32),
            MixingModel::Explicit { values } => values.get(k).copied().unwrap_or(0.0),
        }
    }

    pub fn phi0(&self) -> f64 {
        self.phi(0)
    }

    /// `sum_k Phi(k)`.
    pub fn total(&self) -> f64 {
        match self {
            MixingModel::Geometric { c, gamma } => c / (1.0 - gamma),
            MixingModel::Explicit { values } => compensated_sum(values.iter().copied()),
        }
    }
}

impl fmt::Display for MixingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MixingModel::Geometric { c, gamma } => write!(f, "geometric:{c},{gamma}"),
            MixingModel::Explicit { values } => {
                let parts: Vec<String> = values.iter().map(f64::to_string).collect();
                write!(f, "explicit:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for MixingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::parse("mixing model", s, "expected geometric:C,gamma or explicit:v0,v1,..."))?;
        let values = args
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse("mixing model", s, e.to_string()))
            })
            .collect::<Result<Vec<f64>>>()?;
        match name.trim().to_ascii_lowercase().as_str() {
            "geometric" => match values[..] {
                [c, gamma] => MixingModel::geometric(c, gamma),
                _ => Err(Error::parse("mixing model", s, "geometric takes C,gamma")),
            },
            "explicit" => MixingModel::explicit(values),
            _ => Err(Error::parse("mixing model", s, "unknown model")),
        }
    }
}

fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// `sum_{k=0}^{n-1} (n - k) Phi(k)`, in closed form for geometric models.
pub fn weighted_phi_sum(model: &MixingModel, n: usize) -> Result<f64> {
    model.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "need n >= 1"));
    }
    match model {
        MixingModel::Geometric { c, gamma } => {
            let nf = n as f64;
            let q = 1.0 - gamma;
            Ok(c * (nf * q - gamma * (1.0 - gamma.powf(nf))) / (q * q))
        }
        MixingModel::Explicit { .. } => weighted_phi_sum_direct(model, n),
    }
}

/// Term-by-term evaluation of [`weighted_phi_sum`].
pub fn weighted_phi_sum_direct(model: &MixingModel, n: usize) -> Result<f64> {
    model.validate()?;
    if n == 0 {
        return Err(Error::invalid("n", "need n >= 1"));
    }
    let terms = match model {
        MixingModel::Geometric { .. } => n,
        MixingModel::Explicit { values } => n.min(values.len()),
    };
    Ok(compensated_sum((0..terms).map(|k| (n - k) as f64 * model.phi(k))))
}

/// Smallest `R` with `sum_{k<n} (n - k) Phi(k) <= R n` for all `n <= n_max`.
/// The ratio is nondecreasing in `n` for nonnegative coefficients, so the
/// maximum sits at `n_max`.
pub fn smallest_linear_majorant(model: &MixingModel, n_max: usize) -> Result<f64> {
    Ok(weighted_phi_sum(model, n_max)? / n_max as f64)
}

/// The majorant valid for every `n`: its limit `sum_k Phi(k)`.
pub fn linear_majorant(model: &MixingModel) -> Result<f64> {
    model.validate()?;
    Ok(model.total())
}

/// A probability bound as computed and as reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbabilityBound {
    pub raw: f64,
    /// `min(raw, 1)`.
    pub clipped: f64,
}

impl ProbabilityBound {
    pub fn new(raw: f64) -> Self {
        ProbabilityBound {
            raw,
            clipped: raw.min(1.0),
        }
    }

    pub fn is_vacuous(&self) -> bool {
        self.raw >= 1.0
    }
}

/// Envelope for one point `x`, valid only off the bad set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Envelope {
    pub bound: ProbabilityBound,
    /// `n h^{beta + 2}`.
    pub effective_size: f64,
    /// The statement holds for `x` outside a set of measure at most
    /// `R h^{gamma'}`, with constants that are not computable here.
    pub caveat: &'static str,
}

const BAD_SET_CAVEAT: &str = "valid for x outside the oscillation bad set of measure <= R h^gamma'";

/// `P(|S_n - E S_n| > t) <= e^{1/e} exp(-t^2 / (2e C(phi)^2 Phi(0) sum_k (n-k) Phi(k)))`
/// for the un-normalized sum `S_n`. A zero denominator gives 0 for `t > 0`.
pub fn concentration_bound(model: &MixingModel, c_phi: f64, n: usize, t: f64) -> Result<ProbabilityBound> {
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("need t >= 0, got {t}")));
    }
    if !(c_phi >= 0.0 && c_phi.is_finite()) {
        return Err(Error::invalid("C(phi)", format!("need C(phi) >= 0, got {c_phi}")));
    }
    let denominator = 2.0 * E * c_phi * c_phi * model.phi0() * weighted_phi_sum(model, n)?;
    let raw = if denominator == 0.0 {
        if t > 0.0 {
            0.0
        } else {
            prefactor()
        }
    } else {
        prefactor() * (-t * t / denominator).exp()
    };
    Ok(ProbabilityBound::new(raw))
}

/// `||S_n - E S_n||_p <= C(phi) (2p sum_k (n-k) Phi(k))^{1/2}`.
pub fn moment_bound(model: &MixingModel, c_phi: f64, n: usize, p: f64) -> Result<f64> {
    if !(p >= 2.0) {
        return Err(Error::invalid("p", format!("need p >= 2, got {p}")));
    }
    Ok(c_phi * (2.0 * p * weighted_phi_sum(model, n)?).sqrt())
}

/// Inputs shared by the deviation envelopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    pub h: f64,
    /// Kernel scaling exponent.
    pub beta: f64,
    /// Kernel seminorm constant `C(K)`.
    pub c_k: f64,
    /// Kernel support diameter, for the floor `u >= h diam(D)`.
    pub kernel_diameter: f64,
    pub t: f64,
    /// Bias level; `None` skips the `t > u^alpha` check.
    pub u: Option<f64>,
    pub alpha: f64,
    pub inf_f: Option<f64>,
    pub y_max: Option<f64>,
    pub r_max: Option<f64>,
}

impl BoundParams {
    pub fn new(n: usize, h: f64, beta: f64, c_k: f64, t: f64) -> Self {
        BoundParams {
            n,
            h,
            beta,
            c_k,
            kernel_diameter: 2.0,
            t,
            u: None,
            alpha: 1.0,
            inf_f: None,
            y_max: None,
            r_max: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("n", "need n >= 1"));
        }
        let positive = [("h", self.h), ("C(K)", self.c_k), ("diam(D)", self.kernel_diameter)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("need {name} > 0, got {v}")));
            }
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::invalid("beta", format!("need beta >= 0, got {}", self.beta)));
        }
        if !(self.t >= 0.0) {
            return Err(Error::invalid("t", format!("need t >= 0, got {}", self.t)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(
                "alpha",
                format!("need 0 < alpha <= 1, got {}", self.alpha),
            ));
        }
        if let Some(u) = self.u {
            let floor = self.h * self.kernel_diameter;
            if !(u >= floor) {
                return Err(Error::invalid("u", format!("need u >= h diam(D) = {floor}, got {u}")));
            }
        }
        for (name, v) in [("inf f", self.inf_f), ("y_max", self.y_max), ("r_max", self.r_max)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(Error::invalid(name, format!("need {name} > 0, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// `n h^{beta + 2}`.
    pub fn effective_size(&self) -> f64 {
        self.n as f64 * self.h.powf(self.beta + 2.0)
    }

    fn below_bias(&self) -> bool {
        self.u.is_some_and(|u| self.t <= u.powf(self.alpha))
    }
}

/// Envelope `2 e^{1/e} exp(-t^2 n h^{beta+2} / (2e R Phi(0) C(K)))` for
/// `P(|f_n(x) - f(x)| > t - u^alpha)`, with `R = sum_k Phi(k)`. Vacuous when
/// `t <= u^alpha`: the raw value is then at least 1, and never below the
/// formula, so it stays nonincreasing in `t`.
pub fn density_deviation_envelope(p: &BoundParams, model: &MixingModel) -> Result<Envelope> {
    p.validate()?;
    let r = linear_majorant(model)?;
    let effective_size = p.effective_size();
    let m = 1.0 / (2.0 * E * r * model.phi0() * p.c_k);
    let formula = 2.0 * prefactor() * (-p.t * p.t * m * effective_size).exp();
    let raw = if p.below_bias() { formula.max(1.0) } else { formula };
    Ok(Envelope {
        bound: ProbabilityBound::new(raw),
        effective_size,
        caveat: BAD_SET_CAVEAT,
    })
}

/// Exponent constants of the regression envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionConstants {
    /// Multiplies `t^2 n h^{beta+2}`.
    pub l: f64,
    /// Multiplies `n h^{beta+2}` in the term for `f_n(x) < inf f / 2`;
    /// only for unbounded targets.
    pub l_mass: Option<f64>,
}

/// Assembles the constants. With bounded targets (`|Y| <= y_max`):
/// `L = min(inf f^2 / (8e R' Phi_g(0) C(K)), inf f^2 / (8e R Phi_f(0) C(K) y_max^2))`.
/// With only `|r| <= r_max` the deviations are split at `t/4` and the
/// factor 8 becomes 32, and `L_mass = inf f^2 / (8e R Phi_f(0) C(K))`.
pub fn regression_constants(
    p: &BoundParams,
    model_f: &MixingModel,
    model_g: &MixingModel,
    bounded_y: bool,
) -> Result<RegressionConstants> {
    p.validate()?;
    let inf_f = p
        .inf_f
        .ok_or_else(|| Error::invalid("inf f", "regression envelopes need inf f > 0"))?;
    let r = linear_majorant(model_f)?;
    let r_prime = linear_majorant(model_g)?;
    let sq = inf_f * inf_f;
    let g_part = |factor: f64| sq / (factor * E * r_prime * model_g.phi0() * p.c_k);
    let f_part = |factor: f64, scale: f64| sq / (factor * E * r * model_f.phi0() * p.c_k * scale * scale);
    if bounded_y {
        let y_max = p
            .y_max
            .ok_or_else(|| Error::invalid("y_max", "bounded targets need y_max"))?;
        Ok(RegressionConstants {
            l: g_part(8.0).min(f_part(8.0, y_max)),
            l_mass: None,
        })
    } else {
        let r_max = p
            .r_max
            .ok_or_else(|| Error::invalid("r_max", "unbounded targets need r_max"))?;
        Ok(RegressionConstants {
            l: g_part(32.0).min(f_part(32.0, r_max)),
            l_mass: Some(f_part(8.0, 1.0)),
        })
    }
}

/// Envelope for `P(|r_n(x) - r(x)| > t - u^alpha)`:
/// `2 e^{1/e} exp(-t^2 L n h^{beta+2})` for bounded targets, and
/// `e^{1/e} (2 exp(-t^2 L n h^{beta+2}) + exp(-L_mass n h^{beta+2}))` otherwise.
pub fn regression_deviation_envelope(
    p: &BoundParams,
    model_f: &MixingModel,
    model_g: &MixingModel,
    bounded_y: bool,
) -> Result<Envelope> {
    let constants = regression_constants(p, model_f, model_g, bounded_y)?;
    let effective_size = p.effective_size();
    let main = 2.0 * (-p.t * p.t * constants.l * effective_size).exp();
    let mass = constants.l_mass.map_or(0.0, |l| (-l * effective_size).exp());
    let formula = prefactor() * (main + mass);
    let raw = if p.below_bias() { formula.max(1.0) } else { formula };
    Ok(Envelope {
        bound: ProbabilityBound::new(raw),
        effective_size,
        caveat: BAD_SET_CAVEAT,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bandwidth {
    pub h: f64,
    /// `n h^{beta+2} = n^{1 - xi (beta + 2)}`.
    pub effective_size: f64,
}

/// `h_n = n^{-xi}` for `0 < xi < 1/(beta + 2)`.
pub fn bandwidth_schedule(xi: f64, n: usize, beta: f64) -> Result<Bandwidth> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::invalid("beta", format!("need beta >= 0, got {beta}")));
    }
    let limit = 1.0 / (beta + 2.0);
    if !(xi > 0.0 && xi < limit) {
        return Err(Error::invalid(
            "xi",
            format!("need 0 < xi < 1/(beta+2) = {limit}, got {xi}"),
        ));
    }
    if n == 0 {
        return Err(Error::invalid("n", "need n >= 1"));
    }
    let nf = n as f64;
    Ok(Bandwidth {
        h: nf.powf(-xi),
        effective_size: nf.powf(1.0 - xi * (beta + 2.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn geo(c: f64, gamma: f64) -> MixingModel {
        MixingModel::geometric(c, gamma).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn weighted_sum_examples() {
        assert_eq!(weighted_phi_sum(&geo(3.0, 0.7), 1).unwrap(), 3.0);
        assert_eq!(
            weighted_phi_sum(&MixingModel::explicit(vec![0.4, 0.2]).unwrap(), 1).unwrap(),
            0.4
        );
        assert!((weighted_phi_sum(&geo(1.0, 0.5), 3).unwrap() - 4.25).abs() < 1e-14);
        assert_eq!(weighted_phi_sum_direct(&geo(1.0, 0.5), 3).unwrap(), 4.25);
        assert!(weighted_phi_sum(&geo(1.0, 0.5), 0).is_err());
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        for gamma in [0.1, 0.5, 0.9, 0.99] {
            for n in [10, 1_000, 1_000_000] {
                let m = geo(1.0, gamma);
                let a = weighted_phi_sum(&m, n).unwrap();
                let b = weighted_phi_sum_direct(&m, n).unwrap();
                assert!(rel(a, b) <= 1e-10, "gamma {gamma}, n {n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn invalid_models() {
        assert!(MixingModel::geometric(1.0, 1.0).is_err());
        assert!(MixingModel::geometric(1.0, 0.0).is_err());
        assert!(MixingModel::geometric(0.0, 0.5).is_err());
        assert!(MixingModel::explicit(vec![]).is_err());
        assert!(MixingModel::explicit(vec![1.0, -0.1]).is_err());
        let bad = MixingModel::Geometric { c: 1.0, gamma: 1.5 };
        assert!(weighted_phi_sum(&bad, 3).is_err());
    }

    #[test]
    fn majorant() {
        let m = geo(1.0, 0.5);
        assert_eq!(smallest_linear_majorant(&m, 1).unwrap(), 1.0);
        let mut prev = 0.0;
        for n_max in [1, 2, 5, 50, 5000] {
            let r = smallest_linear_majorant(&m, n_max).unwrap();
            let brute = (1..=n_max)
                .map(|n| weighted_phi_sum_direct(&m, n).unwrap() / n as f64)
                .fold(0.0, f64::max);
            assert!(rel(r, brute) < 1e-12);
            assert!(r >= prev && r <= 2.0);
            prev = r;
        }
        assert!(2.0 - prev < 1e-3);
        assert_eq!(linear_majorant(&m).unwrap(), 2.0);
        let single = MixingModel::explicit(vec![1.0, 0.0, 0.0]).unwrap();
        for n in [1, 10, 1000] {
            assert_eq!(smallest_linear_majorant(&single, n).unwrap(), 1.0);
        }
    }

    #[test]
    fn concentration_examples() {
        let m = geo(1.0, 0.5);
        let at_zero = concentration_bound(&m, 1.0, 100, 0.0).unwrap();
        assert!((at_zero.raw - 1.444_667_861).abs() < 1e-9);
        assert_eq!(at_zero.clipped, 1.0);
        let b1 = concentration_bound(&m, 1.0, 100, 30.0).unwrap().raw;
        let b2 = concentration_bound(&m, 1.0, 100, 60.0).unwrap().raw;
        assert!(rel(b2, prefactor() * (b1 / prefactor()).powi(4)) < 1e-10);
        let s = weighted_phi_sum(&m, 100).unwrap();
        let b = concentration_bound(&m, 1.0, 100, 50.0).unwrap().raw;
        assert!(rel(b, prefactor() * (-2500.0 / (2.0 * E * s)).exp()) < 1e-14);
        assert_eq!(concentration_bound(&m, 0.0, 100, 1.0).unwrap().raw, 0.0);
        assert!(concentration_bound(&m, 1.0, 100, -1.0).is_err());
    }

    #[test]
    fn moment_bound_value() {
        let m = geo(1.0, 0.5);
        let b = moment_bound(&m, 2.0, 3, 4.0).unwrap();
        assert!((b - 2.0 * (8.0f64 * 4.25).sqrt()).abs() < 1e-12);
        assert!(moment_bound(&m, 1.0, 3, 1.0).is_err());
    }

    fn paper_scale() -> BoundParams {
        BoundParams::new(50_000, 0.007, 0.0, 2.0, 0.5)
    }

    #[test]
    fn density_envelope_examples() {
        let m = geo(1.0, 0.9);
        let b = density_deviation_envelope(&paper_scale(), &m).unwrap();
        // n h^2 = 2.45 here, far too small for a nonvacuous bound.
        let expected = 2.0 * prefactor() * (-0.25 * 2.45 / (2.0 * E * 10.0 * 2.0)).exp();
        assert!(b.bound.raw.is_finite() && b.bound.raw > 0.0);
        assert!(rel(b.bound.raw, expected) < 1e-12, "{:?}", b);
        assert_eq!(b.bound.clipped, 1.0);
        // Doubling n doubles the exponent.
        let mut p = paper_scale();
        let log1 = (b.bound.raw / (2.0 * prefactor())).ln();
        p.n *= 2;
        let log2 = (density_deviation_envelope(&p, &m).unwrap().bound.raw / (2.0 * prefactor())).ln();
        assert!(rel(log2, 2.0 * log1) < 1e-12);
        // Large t drives the bound to 0.
        let mut prev = f64::INFINITY;
        for t in [0.1, 0.5, 1.0, 5.0, 50.0, 500.0] {
            let mut p = paper_scale();
            p.t = t;
            let v = density_deviation_envelope(&p, &m).unwrap().bound.raw;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-100);
    }

    #[test]
    fn density_envelope_bias_region() {
        let m = geo(1.0, 0.9);
        let mut p = paper_scale();
        p.u = Some(0.05);
        p.t = 0.05;
        let b = density_deviation_envelope(&p, &m).unwrap();
        assert!(b.bound.raw >= 1.0 && b.bound.clipped == 1.0);
        // Just past the threshold the raw value cannot rise.
        let mut past = p.clone();
        past.t = 0.0501;
        assert!(density_deviation_envelope(&past, &m).unwrap().bound.raw <= b.bound.raw);
        p.u = Some(0.001);
        assert!(density_deviation_envelope(&p, &m).is_err());
    }

    #[test]
    fn regression_envelope() {
        let m = geo(1.0, 0.9);
        let mut p = paper_scale();
        p.inf_f = Some(0.7);
        p.y_max = Some(1.0);
        assert!(regression_deviation_envelope(&p, &m, &m, false).is_err());
        p.t = 0.0;
        assert!(regression_deviation_envelope(&p, &m, &m, true)
            .unwrap()
            .bound
            .is_vacuous());
        p.t = 2.0;
        let base = regression_deviation_envelope(&p, &m, &m, true).unwrap().bound.raw;
        p.inf_f = Some(0.9);
        let better = regression_deviation_envelope(&p, &m, &m, true).unwrap().bound.raw;
        assert!(better < base);
        p.y_max = Some(1e200);
        let loose = regression_deviation_envelope(&p, &m, &m, true).unwrap().bound.raw;
        assert!(rel(loose, 2.0 * prefactor()) < 1e-9);

        let mut q = paper_scale();
        q.inf_f = Some(0.7);
        q.r_max = Some(1.0);
        q.t = 2.0;
        let c = regression_constants(&q, &m, &m, false).unwrap();
        assert!(c.l_mass.unwrap() > 0.0);
        let three = regression_deviation_envelope(&q, &m, &m, false).unwrap().bound.raw;
        let expected = prefactor()
            * (2.0 * (-4.0 * c.l * q.effective_size()).exp() + (-c.l_mass.unwrap() * q.effective_size()).exp());
        assert!(rel(three, expected) < 1e-12);
        let mut none = q.clone();
        none.inf_f = None;
        assert!(regression_deviation_envelope(&none, &m, &m, false).is_err());
    }

    #[test]
    fn bandwidth_examples() {
        let b = bandwidth_schedule(1.0 / 3.0, 1_000_000, 0.0).unwrap();
        assert!((b.h - 0.01).abs() < 1e-12);
        assert!((b.effective_size - 100.0).abs() < 1e-8);
        let b = bandwidth_schedule(0.25, 10_000, 1.0).unwrap();
        assert!((b.h - 0.1).abs() < 1e-12);
        assert!((b.effective_size - 10.0).abs() < 1e-9);
        assert!(bandwidth_schedule(0.5, 100, 0.0).is_err());
        assert!(bandwidth_schedule(0.0, 100, 0.0).is_err());
    }

    #[test]
    fn parse_models() {
        assert_eq!("geometric:1,0.9".parse::<MixingModel>().unwrap(), geo(1.0, 0.9));
        let e: MixingModel = "explicit:1,0.5,0".parse().unwrap();
        assert_eq!(e.phi(1), 0.5);
        assert_eq!(e.phi(7), 0.0);
        assert!("geometric:1".parse::<MixingModel>().is_err());
        assert!("poly:1,2".parse::<MixingModel>().is_err());
        for m in [geo(2.0, 0.3), e] {
            assert_eq!(m.to_string().parse::<MixingModel>().unwrap(), m);
        }
    }
}
