use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{BandwidthSpec, ExperimentSpec};
use crate::bounds::{density_deviation_envelope, BoundParams, MixingModel};
use crate::dynamics::{generate_trajectory, SamplerConfig};
use crate::error::{Error, Result};
use crate::estimators::{density_estimate, Grid};
use crate::kernels::KernelId;
use crate::regularity::oscillation_bad_set;
use crate::stochastics::NoiseLaw;

pub const MIN_REPLICATIONS: usize = 50;

/// Monte Carlo check of the density envelope at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageSpec {
    /// System, size, bandwidth, kernel, noise, seed and replication count.
    pub base: ExperimentSpec,
    pub x: f64,
    pub u: f64,
    pub alpha: f64,
    pub model: MixingModel,
    pub t_grid: Vec<f64>,
}

impl CoverageSpec {
    /// Uniform-density beta-map at `x = 1/2`: `n = 2000`, box kernel,
    /// `h = u = 0.05`, `Phi(k) = 0.9^k`, 200 replications, 20 levels `t`
    /// from `u` to 15.
    pub fn standard(seed: u64) -> Self {
        let mut base = ExperimentSpec::new(
            "beta:2".parse().expect("valid system"),
            2_000,
            BandwidthSpec::Fixed(0.05),
        );
        base.kernel = KernelId::Box1d;
        base.label = "coverage".into();
        base.seed = seed;
        base.replications = 200;
        let u = 0.05;
        CoverageSpec {
            base,
            x: 0.5,
            u,
            alpha: 1.0,
            model: MixingModel::Geometric { c: 1.0, gamma: 0.9 },
            t_grid: linspace(u, 15.0, 20),
        }
    }
}

/// `steps` evenly spaced values from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => vec![],
        1 => vec![a],
        _ => (0..steps)
            .map(|i| {
                if i + 1 == steps {
                    b
                } else {
                    a + (b - a) * i as f64 / (steps - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageRow {
    pub t: f64,
    /// Observed `|f_n(x) - f(x)| > t - u^alpha` count.
    pub exceedances: usize,
    pub frequency: f64,
    pub envelope_raw: f64,
    pub envelope: f64,
    /// `frequency <= envelope`.
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub deviations: Vec<f64>,
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Compares the empirical law of `|f_n(x) - f(x)|` over independent runs
/// with the theoretical envelope at each `t`. Refuses points `x` inside the
/// detected bad set `B_f(u, h diam D)`.
pub fn coverage_study(spec: &CoverageSpec) -> Result<CoverageReport> {
    let base = &spec.base;
    base.validate()?;
    if base.replications < MIN_REPLICATIONS {
        return Err(Error::invalid(
            "replications",
            format!("need at least {MIN_REPLICATIONS}, got {}", base.replications),
        ));
    }
    spec.model.validate()?;
    let sys = base.system.build()?;
    let f = sys.density.as_ref().ok_or_else(|| Error::MissingOracle(sys.id()))?;
    let kernel = base.kernel.build();
    let h = base.h()?;
    let radius = h * kernel.support_diameter();

    let mut params = BoundParams::new(base.n, h, kernel.scaling_exponent(), kernel.seminorm_constant(), 0.0);
    params.kernel_diameter = kernel.support_diameter();
    params.u = Some(spec.u);
    params.alpha = spec.alpha;
    params.validate()?;

    let (a, b) = (sys.domain.lower[0], sys.domain.upper[0]);
    let resolution = radius / 16.0;
    let bad = oscillation_bad_set(
        |y| f.eval(y),
        a - radius,
        b + radius,
        spec.u,
        radius,
        spec.alpha,
        resolution,
    )?;
    if bad.covers(&[spec.x], 2.0 * resolution) {
        return Err(Error::InBadSet { x: vec![spec.x] });
    }

    let noise = NoiseLaw::new(base.noise, 1)?;
    let cfg = SamplerConfig {
        burnin: base.burnin,
        ..SamplerConfig::default()
    };
    let at = Grid::from_1d(vec![spec.x]);
    let truth = f.eval(spec.x);
    let deviations = (0..base.replications)
        .into_par_iter()
        .map(|r| {
            let traj = generate_trajectory(&sys, base.n, &noise, &base.stream(r), &cfg)?;
            Ok((density_estimate(&traj, &kernel, h, &at)?[0] - truth).abs())
        })
        .collect::<Result<Vec<f64>>>()?;

    let shift = spec.u.powf(spec.alpha);
    let rows = spec
        .t_grid
        .iter()
        .map(|&t| {
            let mut p = params.clone();
            p.t = t;
            let env = density_deviation_envelope(&p, &spec.model)?.bound;
            let exceedances = deviations.iter().filter(|&&d| d > t - shift).count();
            let frequency = exceedances as f64 / deviations.len() as f64;
            Ok(CoverageRow {
                t,
                exceedances,
                frequency,
                envelope_raw: env.raw,
                envelope: env.clipped,
                pass: frequency <= env.clipped,
            })
        })
        .collect::<Result<Vec<CoverageRow>>>()?;
    Ok(CoverageReport { deviations, rows })
}
