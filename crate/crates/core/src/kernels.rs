//! Compactly supported nonnegative kernels with their semi-norm metadata.
//!
//! A kernel carries, besides its profile, the constant `C(K)` of the
//! semi-norm it is measured in and the exponent `beta` with
//! `C(K((x - .)/h)) <= C(K) / h^beta`. The deviation envelopes in
//! [`crate::bounds`] consume both.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Tolerance on the numerically integrated kernel mass.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// The function space whose semi-norm `C(.)` the kernel is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SeminormFamily {
    /// Total variation.
    BoundedVariation,
    /// Lipschitz constant.
    Lipschitz,
    /// Hölder constant with the given exponent in `(0, 1]`.
    Holder(f64),
}

impl SeminormFamily {
    pub fn holder(exponent: f64) -> Result<Self> {
        if exponent > 0.0 && exponent <= 1.0 {
            Ok(SeminormFamily::Holder(exponent))
        } else {
            Err(Error::invalid(
                "holder exponent",
                format!("{exponent} is not in (0, 1]"),
            ))
        }
    }

    /// Growth exponent of the semi-norm under rescaling by `1/h`.
    pub fn scaling_exponent(self) -> f64 {
        match self {
            SeminormFamily::BoundedVariation => 0.0,
            SeminormFamily::Lipschitz => 1.0,
            SeminormFamily::Holder(g) => g,
        }
    }
}

/// Names accepted in experiment configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelId {
    Epanechnikov,
    Box1d,
    Box2d,
}

impl KernelId {
    pub fn build(self) -> Kernel {
        match self {
            KernelId::Epanechnikov => Kernel::epanechnikov(),
            KernelId::Box1d => Kernel::box_kernel(1).expect("d = 1 is supported"),
            KernelId::Box2d => Kernel::box_kernel(2).expect("d = 2 is supported"),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelId::Epanechnikov => "epanechnikov",
            KernelId::Box1d => "box1d",
            KernelId::Box2d => "box2d",
        }
    }
}

impl fmt::Display for KernelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" | "p2" => Ok(KernelId::Epanechnikov),
            "box1d" | "box" => Ok(KernelId::Box1d),
            "box2d" => Ok(KernelId::Box2d),
            other => Err(Error::parse("kernel", other, "expected epanechnikov | box1d | box2d")),
        }
    }
}

type ProfileFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Profile {
    /// `3/4 (1 - x^2)` on `[-1, 1]`.
    Epanechnikov,
    /// Indicator of `[-1/2, 1/2]`.
    Box1,
    /// `1/4` times the indicator of `[-1, 1]^2`.
    Box2,
    Custom(ProfileFn),
}

/// An admissible kernel. Immutable after construction.
#[derive(Clone)]
pub struct Kernel {
    dimension: usize,
    profile: Profile,
    support_diameter: f64,
    seminorm_constant: f64,
    family: SeminormFamily,
    scaling_exponent: f64,
    integral_check: f64,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.profile {
            Profile::Epanechnikov => "epanechnikov",
            Profile::Box1 => "box1d",
            Profile::Box2 => "box2d",
            Profile::Custom(_) => "custom",
        };
        f.debug_struct("Kernel")
            .field("profile", &name)
            .field("dimension", &self.dimension)
            .field("support_diameter", &self.support_diameter)
            .field("seminorm_constant", &self.seminorm_constant)
            .field("family", &self.family)
            .field("scaling_exponent", &self.scaling_exponent)
            .field("integral_check", &self.integral_check)
            .finish()
    }
}

impl Kernel {
    /// The degree-2 polynomial kernel `3/4 (1 - x^2)` on `[-1, 1]`.
    ///
    /// Lipschitz with constant `3/2`, attained at `x = ±1`.
    pub fn epanechnikov() -> Self {
        Self::finish(1, Profile::Epanechnikov, 2.0, 1.5, SeminormFamily::Lipschitz)
    }

    /// Unit-mass box kernel. `d = 1` is the indicator of `[-1/2, 1/2]`
    /// (total variation 2); `d = 2` is `1/4` times the indicator of `[-1, 1]^2`.
    pub fn box_kernel(d: usize) -> Result<Self> {
        match d {
            1 => Ok(Self::finish(
                1,
                Profile::Box1,
                1.0,
                2.0,
                SeminormFamily::BoundedVariation,
            )),
            // Product of the variations of the two factors (1/2)1_{[-1,1]},
            // which is invariant under rescaling of either axis.
            2 => Ok(Self::finish(
                2,
                Profile::Box2,
                2.0,
                1.0,
                SeminormFamily::BoundedVariation,
            )),
            _ => Err(Error::invalid(
                "dimension",
                format!("box kernel needs d in {{1, 2}}, got {d}"),
            )),
        }
    }

    /// A user-supplied kernel. The profile must vanish outside the sup-norm
    /// ball of radius `support_diameter / 2`, be nonnegative and carry unit
    /// mass; `seminorm_constant` is declared by the caller.
    pub fn custom<F>(
        dimension: usize,
        profile: F,
        support_diameter: f64,
        family: SeminormFamily,
        seminorm_constant: f64,
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if !(1..=2).contains(&dimension) {
            return Err(Error::invalid("dimension", "custom kernels support d in {1, 2}"));
        }
        if !(support_diameter > 0.0 && support_diameter.is_finite()) {
            return Err(Error::invalid("support_diameter", "must be positive and finite"));
        }
        if !(seminorm_constant >= 0.0 && seminorm_constant.is_finite()) {
            return Err(Error::invalid("seminorm_constant", "must be nonnegative"));
        }
        if let SeminormFamily::Holder(g) = family {
            SeminormFamily::holder(g)?;
        }
        let kernel = Self::finish(
            dimension,
            Profile::Custom(Arc::new(profile)),
            support_diameter,
            seminorm_constant,
            family,
        );
        if (kernel.integral_check - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::invalid(
                "profile",
                format!("integrates to {} instead of 1", kernel.integral_check),
            ));
        }
        Ok(kernel)
    }

    fn finish(
        dimension: usize,
        profile: Profile,
        support_diameter: f64,
        seminorm_constant: f64,
        family: SeminormFamily,
    ) -> Self {
        let scaling_exponent = family.scaling_exponent();
        if scaling_exponent >= 1.0 {
            log::debug!("kernel scaling exponent {scaling_exponent} >= 1; envelopes use it verbatim");
        }
        let mut kernel = Kernel {
            dimension,
            profile,
            support_diameter,
            seminorm_constant,
            family,
            scaling_exponent,
            integral_check: f64::NAN,
        };
        kernel.integral_check = kernel.integrate_mass();
        kernel
    }

    fn integrate_mass(&self) -> f64 {
        let r = self.support_radius();
        match self.dimension {
            1 => quadrature::integrate_piecewise(|x| self.eval_1d(x), -r, r, &[0.0], 64),
            _ => quadrature::integrate_2d(|x, y| self.eval_2d(x, y), [-r, -r], [r, r], 48),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn support_diameter(&self) -> f64 {
        self.support_diameter
    }

    /// Half the support diameter: the sup-norm radius outside which the
    /// profile vanishes.
    pub fn support_radius(&self) -> f64 {
        0.5 * self.support_diameter
    }

    /// `C(K)`.
    pub fn seminorm_constant(&self) -> f64 {
        self.seminorm_constant
    }

    pub fn family(&self) -> SeminormFamily {
        self.family
    }

    /// `beta` in `C(K_{h,x}) <= C(K) / h^beta`.
    pub fn scaling_exponent(&self) -> f64 {
        self.scaling_exponent
    }

    /// True when `beta` falls outside `[0, 1)`, the range the deviation
    /// theorem is stated for. Bounds still evaluate with `beta` as given.
    pub fn beta_outside_assumption(&self) -> bool {
        !(0.0..1.0).contains(&self.scaling_exponent)
    }

    /// Numerically integrated mass of the profile.
    pub fn integral_check(&self) -> f64 {
        self.integral_check
    }

    pub fn sup(&self) -> f64 {
        match self.profile {
            Profile::Epanechnikov => 0.75,
            Profile::Box1 => 1.0,
            Profile::Box2 => 0.25,
            Profile::Custom(_) => {
                let r = self.support_radius();
                let steps = 400;
                let mut best: f64 = 0.0;
                for i in 0..=steps {
                    let x = -r + 2.0 * r * i as f64 / steps as f64;
                    if self.dimension == 1 {
                        best = best.max(self.eval_1d(x));
                    } else {
                        for j in 0..=steps {
                            let y = -r + 2.0 * r * j as f64 / steps as f64;
                            best = best.max(self.eval_2d(x, y));
                        }
                    }
                }
                best
            }
        }
    }

    /// Evaluates the unscaled profile at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: x.len(),
            });
        }
        Ok(match x {
            [a] => self.eval_1d(*a),
            [a, b] => self.eval_2d(*a, *b),
            _ => unreachable!(),
        })
    }

    #[inline]
    pub(crate) fn eval_1d(&self, x: f64) -> f64 {
        match &self.profile {
            Profile::Epanechnikov => {
                if x.abs() <= 1.0 {
                    0.75 * (1.0 - x * x)
                } else {
                    0.0
                }
            }
            Profile::Box1 => {
                if x.abs() <= 0.5 {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::Box2 => 0.0,
            Profile::Custom(f) => {
                if x.abs() <= self.support_radius() {
                    f(&[x]).max(0.0)
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub(crate) fn eval_2d(&self, x: f64, y: f64) -> f64 {
        match &self.profile {
            Profile::Box2 => {
                if x.abs() <= 1.0 && y.abs() <= 1.0 {
                    0.25
                } else {
                    0.0
                }
            }
            Profile::Custom(f) => {
                let r = self.support_radius();
                if x.abs() <= r && y.abs() <= r {
                    f(&[x, y]).max(0.0)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// `K((x - t) / h)`, componentwise scaling.
    pub fn eval_scaled(&self, x: &[f64], t: &[f64], h: f64) -> Result<f64> {
        check_bandwidth(h)?;
        if x.len() != self.dimension || t.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                found: if x.len() != self.dimension { x.len() } else { t.len() },
            });
        }
        Ok(match (x, t) {
            ([x0], [t0]) => self.eval_1d((x0 - t0) / h),
            ([x0, x1], [t0, t1]) => self.eval_2d((x0 - t0) / h, (x1 - t1) / h),
            _ => unreachable!(),
        })
    }

    /// `C(K) / h^beta`, the semi-norm bound for the rescaled kernel.
    pub fn scaled_seminorm_bound(&self, h: f64) -> Result<f64> {
        check_bandwidth(h)?;
        Ok(self.seminorm_constant / h.powf(self.scaling_exponent))
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("h", format!("bandwidth must be positive, got {h}")))
    }
}
