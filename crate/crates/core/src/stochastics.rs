//! Seeded, splittable random streams and the observation-noise laws.
//!
//! Every stream is a ChaCha20 keystream. A child stream's key is the SHA-256
//! digest of its parent's key and a label, so children depend only on the
//! root seed and the label path, never on how many draws the parent made.
//! Draw sequences are identical across runs and platforms.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A deterministic random stream. Not shareable: hand each worker its own
/// [`RngState::split`] child.
#[derive(Clone, Debug)]
pub struct RngState {
    seed: u64,
    key: [u8; 32],
    stream: ChaCha20Rng,
}

impl RngState {
    pub fn from_seed(seed: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"dynest/root");
        hasher.update(seed.to_le_bytes());
        Self::with_key(seed, hasher.finalize().into())
    }

    fn with_key(seed: u64, key: [u8; 32]) -> Self {
        RngState {
            seed,
            key,
            stream: ChaCha20Rng::from_seed(key),
        }
    }

    /// The root seed this stream descends from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream, deterministic in `(seed, label path)`.
    pub fn split(&self, label: &str) -> RngState {
        let mut hasher = Sha256::new();
        hasher.update(self.key);
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label.as_bytes());
        Self::with_key(self.seed, hasher.finalize().into())
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        self.stream.random::<f64>()
    }
}

impl RngCore for RngState {
    fn next_u32(&mut self) -> u32 {
        self.stream.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.stream.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.stream.fill_bytes(dst)
    }
}

/// Marginal law of one noise coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Uniform {
        a: f64,
        b: f64,
    },
    /// `sd` is the standard deviation.
    Gaussian {
        mean: f64,
        sd: f64,
    },
}

impl NoiseKind {
    /// Symmetric uniform law on `[-half_width, half_width]`.
    pub fn uniform(half_width: f64) -> Self {
        NoiseKind::Uniform {
            a: -half_width,
            b: half_width,
        }
    }

    pub fn gaussian(sd: f64) -> Self {
        NoiseKind::Gaussian { mean: 0.0, sd }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseKind::None => Ok(()),
            NoiseKind::Uniform { a, b } => {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    Err(Error::invalid("noise", format!("uniform needs a < b, got [{a}, {b}]")))
                } else if a != -b {
                    Err(Error::invalid(
                        "noise",
                        format!("uniform noise must be centred, got [{a}, {b}]"),
                    ))
                } else {
                    Ok(())
                }
            }
            NoiseKind::Gaussian { mean, sd } => {
                if !(sd > 0.0) || !sd.is_finite() {
                    Err(Error::invalid("noise", format!("gaussian needs sd > 0, got {sd}")))
                } else if mean != 0.0 {
                    Err(Error::invalid(
                        "noise",
                        format!("gaussian noise must have mean 0, got {mean}"),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Standard deviation of one coordinate.
    pub fn sd(&self) -> f64 {
        match *self {
            NoiseKind::None => 0.0,
            NoiseKind::Uniform { a, b } => (b - a) / 12f64.sqrt(),
            NoiseKind::Gaussian { sd, .. } => sd,
        }
    }

    /// Almost-sure bound on `|eps|`, if any.
    pub fn sup_abs(&self) -> Option<f64> {
        match *self {
            NoiseKind::None => Some(0.0),
            NoiseKind::Uniform { a, b } => Some(a.abs().max(b.abs())),
            NoiseKind::Gaussian { .. } => None,
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NoiseKind::None => f.write_str("none"),
            NoiseKind::Uniform { b, .. } => write!(f, "uniform:{b}"),
            NoiseKind::Gaussian { sd, .. } => write!(f, "gaussian:{sd}"),
        }
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let value = |arg: Option<&str>| -> Result<f64> {
            arg.ok_or_else(|| Error::parse("noise", s, "missing parameter"))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::parse("noise", s, e.to_string()))
        };
        let kind = match name.to_ascii_lowercase().as_str() {
            "none" | "no" => NoiseKind::None,
            "uniform" => NoiseKind::uniform(value(arg)?),
            "gaussian" | "normal" => NoiseKind::gaussian(value(arg)?),
            _ => return Err(Error::parse("noise", s, "expected none | uniform:<b> | gaussian:<sd>")),
        };
        kind.validate()?;
        Ok(kind)
    }
}

/// Noise vectors with i.i.d. coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseLaw {
    pub kind: NoiseKind,
    pub dimension: usize,
}

impl NoiseLaw {
    pub fn new(kind: NoiseKind, dimension: usize) -> Result<Self> {
        kind.validate()?;
        if dimension == 0 {
            return Err(Error::invalid("dimension", "noise dimension must be positive"));
        }
        Ok(NoiseLaw { kind, dimension })
    }

    pub fn none(dimension: usize) -> Self {
        NoiseLaw {
            kind: NoiseKind::None,
            dimension,
        }
    }

    /// Writes one noise vector into `out`.
    pub fn draw_into(&self, rng: &mut RngState, out: &mut [f64]) -> Result<()> {
        if out.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: out.len(),
            });
        }
        match self.kind {
            NoiseKind::None => out.fill(0.0),
            NoiseKind::Uniform { a, b } => {
                for v in out.iter_mut() {
                    *v = a + (b - a) * rng.uniform();
                }
            }
            NoiseKind::Gaussian { mean, sd } => {
                let normal = Normal::new(mean, sd).map_err(|e| Error::invalid("noise", e.to_string()))?;
                for v in out.iter_mut() {
                    *v = normal.sample(rng);
                }
            }
        }
        Ok(())
    }
}

/// One noise vector from `law`; advances `rng`.
pub fn draw_noise(law: &NoiseLaw, rng: &mut RngState) -> Result<Vec<f64>> {
    law.kind.validate()?;
    let mut out = vec![0.0; law.dimension];
    law.draw_into(rng, &mut out)?;
    Ok(out)
}
