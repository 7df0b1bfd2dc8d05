//! Chaotic maps with known statistical behaviour, stationary sampling and
//! noisy trajectories.
//!
//! The estimators only ever see the forward orbit `X_0, X_1, ...` started
//! from the invariant law. The weak-dependence theory is phrased for the
//! time-reversed process, but that process has the same finite-dimensional
//! laws read backwards, so no separate simulation is needed.

mod parry;
mod trajectory;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use parry::{ParryDensity, SERIES_CUTOFF};
pub use trajectory::{generate_trajectory, orbit_histogram_l1, sample_stationary, SamplerConfig, Trajectory};

use crate::error::{Error, Result};
use crate::stochastics::RngState;

/// The matrix of the two-dimensional example, rows `(2.5, 3.4)` and `(4.6, 3.2)`.
pub const PAPER_MATRIX: [[f64; 2]; 2] = [[2.5, 3.4], [4.6, 3.2]];

/// Slack allowed at mod-1 wraparound when checking that orbits stay in the domain.
pub const DOMAIN_TOLERANCE: f64 = 1e-9;

/// An axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::LengthMismatch {
                left: lower.len(),
                right: upper.len(),
            });
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a < b)) {
            return Err(Error::invalid("domain", "lower corner must be below upper corner"));
        }
        Ok(Domain { lower, upper })
    }

    pub fn interval(a: f64, b: f64) -> Self {
        Domain::new(vec![a], vec![b]).expect("a < b")
    }

    pub fn unit_cube(d: usize) -> Self {
        Domain {
            lower: vec![0.0; d],
            upper: vec![1.0; d],
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    /// Lebesgue measure.
    pub fn volume(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dimension()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
    }

    pub fn sample_uniform(&self, rng: &mut RngState) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(a, b)| a + (b - a) * rng.uniform())
            .collect()
    }
}

/// Parsed system identifier, as used in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "map", rename_all = "lowercase")]
pub enum SystemSpec {
    Beta { beta: f64 },
    Gauss,
    AlphaGauss { alpha: f64 },
    Logistic { a: f64 },
    MatrixBeta { matrix: [[f64; 2]; 2] },
}

impl SystemSpec {
    pub fn build(&self) -> Result<DynamicalSystem> {
        match *self {
            SystemSpec::Beta { beta } => beta_map(beta),
            SystemSpec::Gauss => Ok(gauss_map()),
            SystemSpec::AlphaGauss { alpha } => alpha_gauss_map(alpha),
            SystemSpec::Logistic { a } => logistic_map(a),
            SystemSpec::MatrixBeta { matrix } => matrix_beta_map(matrix),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            SystemSpec::MatrixBeta { .. } => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for SystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SystemSpec::Beta { beta } => write!(f, "beta:{beta}"),
            SystemSpec::Gauss => f.write_str("gauss"),
            SystemSpec::AlphaGauss { alpha } => write!(f, "alphagauss:{alpha}"),
            SystemSpec::Logistic { a } => write!(f, "logistic:{a}"),
            SystemSpec::MatrixBeta { matrix: m } => {
                write!(f, "matrixbeta:{},{},{},{}", m[0][0], m[0][1], m[1][0], m[1][1])
            }
        }
    }
}

/// Accepts decimals and simple fractions such as `27/11`.
pub(crate) fn parse_number(what: &'static str, s: &str) -> Result<f64> {
    let s = s.trim();
    let parsed = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::parse(what, s, e.to_string()))?;
            let den: f64 = den
                .trim()
                .parse()
                .map_err(|e: std::num::ParseFloatError| Error::parse(what, s, e.to_string()))?;
            num / den
        }
        None => s
            .parse()
            .map_err(|e: std::num::ParseFloatError| Error::parse(what, s, e.to_string()))?,
    };
    if parsed.is_finite() {
        Ok(parsed)
    } else {
        Err(Error::parse(what, s, "not a finite number"))
    }
}

impl FromStr for SystemSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s, None),
        };
        fn need<'a>(arg: Option<&'a str>, s: &str) -> Result<&'a str> {
            arg.ok_or_else(|| Error::parse("system", s, "missing parameter"))
        }
        let spec = match name.to_ascii_lowercase().as_str() {
            "beta" => SystemSpec::Beta {
                beta: parse_number("beta", need(arg, s)?)?,
            },
            "gauss" => SystemSpec::Gauss,
            "alphagauss" => SystemSpec::AlphaGauss {
                alpha: parse_number("alpha", need(arg, s)?)?,
            },
            "logistic" => SystemSpec::Logistic {
                a: parse_number("a", need(arg, s)?)?,
            },
            "matrixbeta" => {
                let arg = need(arg, s)?;
                let matrix = if arg.trim() == "paper" {
                    PAPER_MATRIX
                } else {
                    let v = arg
                        .split(',')
                        .map(|p| parse_number("matrix entry", p))
                        .collect::<Result<Vec<f64>>>()?;
                    if v.len() != 4 {
                        return Err(Error::parse("system", s, "matrixbeta needs 4 entries"));
                    }
                    [[v[0], v[1]], [v[2], v[3]]]
                };
                SystemSpec::MatrixBeta { matrix }
            }
            _ => {
                return Err(Error::parse(
                    "system",
                    s,
                    "expected beta:<b> | gauss | alphagauss:<a> | logistic:<a> | matrixbeta:<b11,b12,b21,b22>",
                ))
            }
        };
        Ok(spec)
    }
}

/// The map itself, dispatched by kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapKind {
    /// `x -> beta x mod 1`. `integer` is set when beta is a whole number;
    /// those orbits are simulated in exact fixed point (see [`Trajectory`]).
    Beta { beta: f64, integer: Option<u64> },
    /// `x -> 1/x mod 1`, with `T(0) = 0`.
    Gauss,
    /// `x -> |1/x| - floor(|1/x| + 1 - alpha)` on `[alpha - 1, alpha]`, `T(0) = 0`.
    AlphaGauss { alpha: f64 },
    /// `x -> a x (1 - x)`.
    Logistic { a: f64 },
    /// `x -> B x mod Z^2`.
    MatrixBeta { matrix: [[f64; 2]; 2] },
}

#[inline]
fn frac(y: f64) -> f64 {
    let r = y - y.floor();
    // y - floor(y) can round up to 1 for tiny negative y.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl MapKind {
    #[inline]
    pub fn apply_1d(&self, x: f64) -> f64 {
        match *self {
            MapKind::Beta { beta, .. } => frac(beta * x),
            MapKind::Gauss => {
                if x == 0.0 {
                    0.0
                } else {
                    frac(1.0 / x)
                }
            }
            MapKind::AlphaGauss { alpha } => {
                if x == 0.0 {
                    0.0
                } else {
                    let v = (1.0 / x).abs();
                    v - (v + 1.0 - alpha).floor()
                }
            }
            MapKind::Logistic { a } => a * x * (1.0 - x),
            MapKind::MatrixBeta { .. } => f64::NAN,
        }
    }

    #[inline]
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        match (self, x) {
            (MapKind::MatrixBeta { matrix: m }, [x0, x1]) => {
                out[0] = frac(m[0][0] * x0 + m[0][1] * x1);
                out[1] = frac(m[1][0] * x0 + m[1][1] * x1);
            }
            (_, [x0]) => out[0] = self.apply_1d(*x0),
            _ => out.fill(f64::NAN),
        }
    }

    /// Maps with an inverse singularity at 0, where orbits are restarted.
    pub(crate) fn has_singular_zero(&self) -> bool {
        matches!(self, MapKind::Gauss | MapKind::AlphaGauss { .. })
    }
}

/// An exact invariant density.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityOracle {
    Parry(ParryDensity),
    /// `1 / (ln 2 (1 + x))` on `[0, 1]`.
    Gauss,
}

impl DensityOracle {
    /// Density at `x`, zero outside the domain.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DensityOracle::Parry(p) => p.eval(x),
            DensityOracle::Gauss => {
                if (0.0..=1.0).contains(&x) {
                    1.0 / (std::f64::consts::LN_2 * (1.0 + x))
                } else {
                    0.0
                }
            }
        }
    }

    /// Discontinuities inside the domain.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            DensityOracle::Parry(p) => p.jumps().into_iter().map(|(t, _)| t).collect(),
            DensityOracle::Gauss => Vec::new(),
        }
    }

    pub fn inf(&self) -> f64 {
        match self {
            DensityOracle::Parry(p) => p.inf(),
            DensityOracle::Gauss => 1.0 / (2.0 * std::f64::consts::LN_2),
        }
    }

    /// Integral over `[a, b]` by quadrature split at the breakpoints.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let mut breaks = self.breakpoints();
        breaks.extend([0.0, 1.0]);
        crate::quadrature::integrate_piecewise(|x| self.eval(x), a, b, &breaks, 8)
    }
}

/// A map on a box `Sigma` with optional knowledge of its invariant law.
#[derive(Debug, Clone)]
pub struct DynamicalSystem {
    pub spec: SystemSpec,
    pub domain: Domain,
    pub map: MapKind,
    pub density: Option<DensityOracle>,
    /// Sub-box carrying the invariant measure, when smaller than the domain.
    pub support: Option<Domain>,
}

impl DynamicalSystem {
    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn id(&self) -> String {
        self.spec.to_string()
    }

    /// `T(x)` for a point of any dimension.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.map.apply(x, &mut out);
        out
    }

    /// Where the invariant measure lives: the support oracle or the domain.
    pub fn effective_support(&self) -> &Domain {
        self.support.as_ref().unwrap_or(&self.domain)
    }
}

pub fn beta_map(beta: f64) -> Result<DynamicalSystem> {
    let density = ParryDensity::new(beta)?;
    let integer = (beta.fract() == 0.0 && beta < 2f64.powi(32)).then_some(beta as u64);
    Ok(DynamicalSystem {
        spec: SystemSpec::Beta { beta },
        domain: Domain::unit_cube(1),
        map: MapKind::Beta { beta, integer },
        density: Some(DensityOracle::Parry(density)),
        support: None,
    })
}

/// The Parry density of the beta-map as a standalone evaluable function.
pub fn parry_density(beta: f64) -> Result<ParryDensity> {
    ParryDensity::new(beta)
}

pub fn gauss_map() -> DynamicalSystem {
    DynamicalSystem {
        spec: SystemSpec::Gauss,
        domain: Domain::unit_cube(1),
        map: MapKind::Gauss,
        density: Some(DensityOracle::Gauss),
        support: None,
    }
}

pub fn alpha_gauss_map(alpha: f64) -> Result<DynamicalSystem> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("need alpha in (0, 1], got {alpha}")));
    }
    Ok(DynamicalSystem {
        spec: SystemSpec::AlphaGauss { alpha },
        domain: Domain::interval(alpha - 1.0, alpha),
        map: MapKind::AlphaGauss { alpha },
        density: None,
        support: None,
    })
}

/// `a x (1 - x)` on `[0, 1]`. The invariant measure is carried by
/// `[T^2(c), T(c)]` with critical point `c = 1/2`.
pub fn logistic_map(a: f64) -> Result<DynamicalSystem> {
    if !(a > 0.0 && a <= 4.0) {
        return Err(Error::invalid("a", format!("need a in (0, 4], got {a}")));
    }
    let map = MapKind::Logistic { a };
    let top = map.apply_1d(0.5);
    let bottom = map.apply_1d(top);
    let support = (bottom < top).then(|| Domain::interval(bottom, top));
    Ok(DynamicalSystem {
        spec: SystemSpec::Logistic { a },
        domain: Domain::unit_cube(1),
        map,
        density: None,
        support,
    })
}

/// Smallest singular value of a 2x2 matrix.
pub fn smallest_singular_value(m: [[f64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = m;
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (s - disc)).max(0.0).sqrt()
}

pub fn matrix_beta_map(matrix: [[f64; 2]; 2]) -> Result<DynamicalSystem> {
    if matrix.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix", "entries must be finite"));
    }
    let sigma = smallest_singular_value(matrix);
    if sigma <= 1.0 {
        log::warn!("matrix is not expanding: smallest singular value {sigma:.4} <= 1");
    }
    Ok(DynamicalSystem {
        spec: SystemSpec::MatrixBeta { matrix },
        domain: Domain::unit_cube(2),
        map: MapKind::MatrixBeta { matrix },
        density: None,
        support: None,
    })
}
