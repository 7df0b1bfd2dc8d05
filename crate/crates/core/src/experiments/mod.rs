//! End-to-end runs: simulate, estimate, score.
//!
//! An [`ExperimentSpec`] fixes everything a run depends on. The random
//! stream of replication `r` is `root(seed) / label / "rep/r"`, so runs are
//! reproducible from the serialized spec alone.

mod config;
mod coverage;
mod output;
mod suite;
mod sweep;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::bandwidth_schedule;
use crate::dynamics::{generate_trajectory, Domain, DynamicalSystem, SamplerConfig, SystemSpec};
use crate::error::{Error, Result};
use crate::estimators::{EstimateGrid, Grid};
use crate::kernels::KernelId;
use crate::stochastics::{NoiseKind, NoiseLaw, RngState};

pub use config::{ConfigFile, TableFile};
pub use coverage::{coverage_study, linspace, CoverageReport, CoverageRow, CoverageSpec, MIN_REPLICATIONS};
pub use output::{
    read_spec_line, write_coverage_csv, write_estimates_csv, write_rows_csv, write_suite_csv, write_sweep_csv,
    SPEC_PREFIX,
};
pub use suite::{
    difference_histogram, reproduce_paper_suite, run_entry, suite_entries, write_histogram_csv, Histogram, SuiteCheck,
    SuiteEntry, SuiteMetric, SuiteReport, Target,
};
pub use sweep::{convergence_sweep, fit_loglog, SweepMetric, SweepPoint, SweepReport};

/// Bandwidth: fixed, or `h = n^{-xi}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandwidthSpec {
    #[serde(rename = "h")]
    Fixed(f64),
    #[serde(rename = "xi")]
    Schedule(f64),
}

/// Where the evaluation grid lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridRegion {
    /// The state space.
    #[default]
    Domain,
    /// The support of the invariant law, when smaller.
    Support,
}

impl fmt::Display for GridRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridRegion::Domain => "domain",
            GridRegion::Support => "support",
        })
    }
}

impl FromStr for GridRegion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "domain" => Ok(GridRegion::Domain),
            "support" => Ok(GridRegion::Support),
            _ => Err(Error::parse("region", s, "expected domain | support")),
        }
    }
}

mod text {
    use std::fmt::Display;
    use std::str::FromStr;

    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, T, D>(d: D) -> Result<T, D::Error>
    where
        T: FromStr,
        T::Err: Display,
        D: Deserializer<'de>,
    {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

/// Everything one experiment depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Names the random stream as well as the output row.
    pub label: String,
    #[serde(with = "text")]
    pub system: SystemSpec,
    pub n: usize,
    pub bandwidth: BandwidthSpec,
    #[serde(with = "text")]
    pub kernel: KernelId,
    #[serde(with = "text")]
    pub noise: NoiseKind,
    /// Grid points per axis.
    pub grid: usize,
    pub region: GridRegion,
    /// Secondary scoring window `[a, b]` on the first coordinate.
    pub window: Option<[f64; 2]>,
    pub seed: u64,
    pub replications: usize,
    pub burnin: usize,
}

impl ExperimentSpec {
    /// A spec with the defaults used by the command line.
    pub fn new(system: SystemSpec, n: usize, bandwidth: BandwidthSpec) -> Self {
        let kernel = if system.dimension() == 2 {
            KernelId::Box2d
        } else {
            KernelId::Epanechnikov
        };
        ExperimentSpec {
            label: "run".into(),
            system,
            n,
            bandwidth,
            kernel,
            noise: NoiseKind::None,
            grid: 200,
            region: GridRegion::Domain,
            window: None,
            seed: 0,
            replications: 1,
            burnin: SamplerConfig::default().burnin,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", format!("need n >= 2, got {}", self.n)));
        }
        if self.grid == 0 {
            return Err(Error::invalid("grid", "need at least one point"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications", "need at least one"));
        }
        let kernel = self.kernel.build();
        if kernel.dimension() != self.system.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.system.dimension(),
                found: kernel.dimension(),
            });
        }
        self.noise.validate()?;
        if let Some([a, b]) = self.window {
            if !(a < b) {
                return Err(Error::invalid("window", format!("need a < b, got [{a}, {b}]")));
            }
        }
        self.h().map(|_| ())
    }

    pub fn h(&self) -> Result<f64> {
        match self.bandwidth {
            BandwidthSpec::Fixed(h) => {
                crate::kernels::check_bandwidth(h)?;
                Ok(h)
            }
            // Every built-in kernel has bounded variation, so the schedule
            // range of the BV family (beta = 0) applies.
            BandwidthSpec::Schedule(xi) => Ok(bandwidth_schedule(xi, self.n, 0.0)?.h),
        }
    }

    /// Stream of replication `r`.
    pub fn stream(&self, r: usize) -> RngState {
        RngState::from_seed(self.seed)
            .split(&self.label)
            .split(&format!("rep/{r}"))
    }

    pub fn grid_for(&self, sys: &DynamicalSystem) -> Result<Grid> {
        let region: &Domain = match self.region {
            GridRegion::Domain => &sys.domain,
            GridRegion::Support => sys.effective_support(),
        };
        Grid::cell_centered(region, self.grid)
    }
}

/// Estimates of one replication, with the time spent.
#[derive(Debug, Clone)]
pub struct Replication {
    pub estimates: EstimateGrid,
    pub restarts: usize,
    pub seconds: f64,
}

/// Simulates and estimates replication `r` of `spec`.
pub fn run_replication(spec: &ExperimentSpec, r: usize) -> Result<Replication> {
    spec.validate()?;
    let start = Instant::now();
    let sys = spec.system.build()?;
    let kernel = spec.kernel.build();
    let h = spec.h()?;
    let noise = NoiseLaw::new(spec.noise, sys.dimension())?;
    let cfg = SamplerConfig {
        burnin: spec.burnin,
        ..SamplerConfig::default()
    };
    let traj = generate_trajectory(&sys, spec.n, &noise, &spec.stream(r), &cfg)?;
    let estimates = EstimateGrid::compute(&traj, &sys, &kernel, h, spec.grid_for(&sys)?)?;
    Ok(Replication {
        estimates,
        restarts: traj.restarts().len(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Scores of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub amef: Option<f64>,
    /// Per coordinate.
    pub amet: Vec<f64>,
    pub amet_sup: f64,
    pub amef_window: Option<f64>,
    pub amet_window: Option<f64>,
    /// Grid points where `f_n = 0`.
    pub empty_cells: usize,
    pub n_used: usize,
}

impl Metrics {
    pub fn score(estimates: &EstimateGrid, window: Option<[f64; 2]>) -> Result<Self> {
        let amet = estimates.amet().ok_or(Error::Empty("map estimate"))?;
        let (amef_window, amet_window) = match window {
            Some([a, b]) => {
                let inside = estimates.restrict(|x| x[0] >= a && x[0] <= b);
                if inside.points.is_empty() {
                    return Err(Error::invalid("window", format!("no grid point inside [{a}, {b}]")));
                }
                (inside.amef(), inside.amet().map(|v| v.sup_norm))
            }
            None => (None, None),
        };
        Ok(Metrics {
            amef: estimates.amef(),
            amet: amet.per_coordinate,
            amet_sup: amet.sup_norm,
            amef_window,
            amet_window,
            empty_cells: estimates.f_hat.iter().filter(|&&v| v == 0.0).count(),
            n_used: estimates.n_used,
        })
    }
}

/// One output row: the spec echo and the scores averaged over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub index: usize,
    pub spec: ExperimentSpec,
    pub h: f64,
    pub grid_points: usize,
    pub metrics: Option<Metrics>,
    /// Total over replications.
    pub seconds: f64,
    pub error: Option<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut k) = (0.0, 0usize);
    for v in values {
        s += v;
        k += 1;
    }
    s / k as f64
}

fn mean_option(values: &[Option<f64>]) -> Option<f64> {
    if values.iter().all(Option::is_some) {
        Some(mean(values.iter().map(|v| v.unwrap_or_default())))
    } else {
        None
    }
}

fn average(all: &[Metrics]) -> Metrics {
    let d = all[0].amet.len();
    Metrics {
        amef: mean_option(&all.iter().map(|m| m.amef).collect::<Vec<_>>()),
        amet: (0..d).map(|j| mean(all.iter().map(|m| m.amet[j]))).collect(),
        amet_sup: mean(all.iter().map(|m| m.amet_sup)),
        amef_window: mean_option(&all.iter().map(|m| m.amef_window).collect::<Vec<_>>()),
        amet_window: mean_option(&all.iter().map(|m| m.amet_window).collect::<Vec<_>>()),
        empty_cells: all.iter().map(|m| m.empty_cells).max().unwrap_or(0),
        n_used: all[0].n_used,
    }
}

/// Runs one spec over all its replications.
pub fn run_spec(index: usize, spec: &ExperimentSpec) -> ResultRow {
    let mut row = ResultRow {
        index,
        spec: spec.clone(),
        h: spec.h().unwrap_or(f64::NAN),
        grid_points: 0,
        metrics: None,
        seconds: 0.0,
        error: None,
    };
    let outcome = (0..spec.replications)
        .map(|r| {
            let rep = run_replication(spec, r)?;
            row.seconds += rep.seconds;
            row.grid_points = rep.estimates.points.len();
            Metrics::score(&rep.estimates, spec.window)
        })
        .collect::<Result<Vec<Metrics>>>();
    match outcome {
        Ok(all) => row.metrics = Some(average(&all)),
        Err(e) => {
            log::warn!("spec {index} ({}) failed: {e}", spec.label);
            row.error = Some(e.to_string());
        }
    }
    row
}

/// One row per spec, in order. Failing specs yield a row carrying the
/// error; the others still run.
pub fn run_table(specs: &[ExperimentSpec]) -> Vec<ResultRow> {
    specs.iter().enumerate().map(|(i, s)| run_spec(i, s)).collect()
}
