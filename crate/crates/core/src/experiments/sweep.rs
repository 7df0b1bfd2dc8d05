use serde::Serialize;

use super::{run_replication, BandwidthSpec, ExperimentSpec};
use crate::error::{Error, Result};
use crate::estimators::EstimateGrid;

/// Scores one replication. The default is the sup-norm AMET.
pub type SweepMetric<'a> = &'a (dyn Fn(&EstimateGrid) -> Result<f64> + Sync);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub h: f64,
    pub mean: f64,
    /// Sample standard deviation over replications (0 for one replication).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub xi: f64,
    pub points: Vec<SweepPoint>,
    /// Least-squares slope of `log mean` against `log n`.
    pub slope: f64,
    pub intercept: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::invalid("points", "need at least two points"));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return Err(Error::invalid("points", "log-log fit needs positive values"));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("points", "all x values coincide"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

fn default_metric(grid: &EstimateGrid) -> Result<f64> {
    grid.amet().map(|a| a.sup_norm).ok_or(Error::Empty("map estimate"))
}

/// Runs `base` at each size with `h_n = n^{-xi}` and fits the decay rate of
/// the mean score.
pub fn convergence_sweep(
    base: &ExperimentSpec,
    n_list: &[usize],
    xi: f64,
    metric: Option<SweepMetric>,
) -> Result<SweepReport> {
    if n_list.len() < 3 {
        return Err(Error::invalid(
            "n_list",
            format!("need at least 3 sizes, got {}", n_list.len()),
        ));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("n_list", "sizes must increase"));
    }
    let metric: SweepMetric = metric.unwrap_or(&default_metric);
    let points = n_list
        .iter()
        .map(|&n| {
            let mut spec = base.clone();
            spec.n = n;
            spec.bandwidth = BandwidthSpec::Schedule(xi);
            spec.label = format!("{}/n={n}", base.label);
            let values = (0..spec.replications)
                .map(|r| metric(&run_replication(&spec, r)?.estimates))
                .collect::<Result<Vec<f64>>>()?;
            let k = values.len() as f64;
            let mean = values.iter().sum::<f64>() / k;
            let sd = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
            } else {
                0.0
            };
            Ok(SweepPoint {
                n,
                h: spec.h()?,
                mean,
                sd,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                values,
            })
        })
        .collect::<Result<Vec<SweepPoint>>>()?;
    let xs: Vec<f64> = points.iter().map(|p| p.n as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean).collect();
    let (slope, intercept) = fit_loglog(&xs, &ys)?;
    Ok(SweepReport {
        xi,
        points,
        slope,
        intercept,
    })
}
