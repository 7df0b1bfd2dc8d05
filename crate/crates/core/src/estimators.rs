//! Kernel density and Nadaraya-Watson estimators on evaluation grids.
//!
//! For samples `X_0 .. X_{n-1}` in `R^d` and targets `Y_i`:
//!
//! ```text
//! f_n(x) = 1/(n h^d)     sum_{i<n}   K((x - X_i)/h)
//! g_n(x) = 1/(m h^d)     sum_{i<m}   Y_i K((x - X_i)/h),   m = n - 1
//! r_n(x) = g_n(x) / f_m(x),  and r_n(x) = 0 where f_m(x) = 0
//! ```
//!
//! `f_m` is the density estimate over the `m` samples that have a target,
//! so that `r_n` is an exact weighted average of the `Y_i`. The map
//! estimate `T_n` stacks `r_n` over the coordinates of `Y`.

use rayon::prelude::*;

use crate::dynamics::{Domain, DynamicalSystem, Trajectory};
use crate::error::{Error, Result};
use crate::kernels::{check_bandwidth, Kernel};
use crate::quadrature;
use crate::regularity::{self, BadSetReport};

const MAX_DIM: usize = 2;

/// Evaluation points, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dimension: usize,
    points: Vec<f64>,
}

impl Grid {
    pub fn new(dimension: usize, points: Vec<f64>) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIM {
            return Err(Error::invalid("dimension", format!("grids support d in 1..={MAX_DIM}")));
        }
        if !points.len().is_multiple_of(dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: points.len() % dimension,
            });
        }
        Ok(Grid { dimension, points })
    }

    pub fn from_1d(points: Vec<f64>) -> Self {
        Grid { dimension: 1, points }
    }

    /// `per_axis` cell-centred points along each axis of `domain`:
    /// `a + (k + 1/2)(b - a)/per_axis`. In two dimensions the result is the
    /// `per_axis x per_axis` product, first coordinate varying slowest.
    pub fn cell_centered(domain: &Domain, per_axis: usize) -> Result<Self> {
        if per_axis == 0 {
            return Err(Error::invalid("grid", "need at least one point per axis"));
        }
        let axis = |j: usize| -> Vec<f64> {
            let (a, b) = (domain.lower[j], domain.upper[j]);
            (0..per_axis)
                .map(|k| a + (k as f64 + 0.5) * (b - a) / per_axis as f64)
                .collect()
        };
        match domain.dimension() {
            1 => Ok(Grid::from_1d(axis(0))),
            2 => {
                let (xs, ys) = (axis(0), axis(1));
                let mut points = Vec::with_capacity(2 * per_axis * per_axis);
                for &x in &xs {
                    for &y in &ys {
                        points.extend([x, y]);
                    }
                }
                Ok(Grid { dimension: 2, points })
            }
            d => Err(Error::invalid(
                "dimension",
                format!("grids support d in 1..={MAX_DIM}, got {d}"),
            )),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Same grid with every point shifted by `offset`.
    pub fn translated(&self, offset: &[f64]) -> Self {
        let points = self
            .points
            .chunks(self.dimension)
            .flat_map(|p| p.iter().zip(offset).map(|(a, b)| a + b))
            .collect();
        Grid {
            dimension: self.dimension,
            points,
        }
    }
}

/// How kernel sums are evaluated. Both give the same values up to
/// floating-point reassociation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Every sample for every grid point: `O(n p)`.
    Direct,
    /// Sorted samples (d = 1) or a bucket grid of side `h * radius` (d = 2),
    /// visiting only samples inside the kernel support.
    #[default]
    Indexed,
}

enum Index {
    Direct,
    Sorted {
        order: Vec<usize>,
        keys: Vec<f64>,
    },
    Buckets {
        origin: [f64; 2],
        side: f64,
        shape: [usize; 2],
        starts: Vec<usize>,
        members: Vec<usize>,
    },
}

/// Samples (and optional values) prepared for repeated kernel sums.
struct SampleSet<'a> {
    dimension: usize,
    xs: &'a [f64],
    values: Option<&'a [f64]>,
    index: Index,
}

impl<'a> SampleSet<'a> {
    fn new(dimension: usize, xs: &'a [f64], values: Option<&'a [f64]>, reach: f64, strategy: Strategy) -> Self {
        let n = xs.len() / dimension;
        let index = match (strategy, dimension) {
            (Strategy::Direct, _) => Index::Direct,
            (Strategy::Indexed, 1) => {
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
                let keys = order.iter().map(|&i| xs[i]).collect();
                Index::Sorted { order, keys }
            }
            (Strategy::Indexed, _) => Self::buckets(xs, reach),
        };
        SampleSet {
            dimension,
            xs,
            values,
            index,
        }
    }

    fn buckets(xs: &[f64], side: f64) -> Index {
        let n = xs.len() / 2;
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in xs.chunks(2) {
            for j in 0..2 {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        if n == 0 || !(side > 0.0) {
            return Index::Direct;
        }
        let cells = |j: usize| (((hi[j] - lo[j]) / side).floor() as usize + 1).max(1);
        let shape = [cells(0), cells(1)];
        // Degenerate or very sparse layouts are cheaper to scan directly.
        if shape[0].saturating_mul(shape[1]) > 64 * n.max(1) {
            return Index::Direct;
        }
        let cell_of = |p: &[f64]| -> usize {
            let cx = (((p[0] - lo[0]) / side) as usize).min(shape[0] - 1);
            let cy = (((p[1] - lo[1]) / side) as usize).min(shape[1] - 1);
            cx * shape[1] + cy
        };
        let mut counts = vec![0usize; shape[0] * shape[1] + 1];
        for p in xs.chunks(2) {
            counts[cell_of(p) + 1] += 1;
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let starts = counts.clone();
        let mut fill = counts;
        let mut members = vec![0usize; n];
        for (i, p) in xs.chunks(2).enumerate() {
            let c = cell_of(p);
            members[fill[c]] = i;
            fill[c] += 1;
        }
        Index::Buckets {
            origin: lo,
            side,
            shape,
            starts,
            members,
        }
    }

    fn len(&self) -> usize {
        self.xs.len() / self.dimension
    }

    /// `(sum_i K((x - X_i)/h), sum_i Y_i K((x - X_i)/h))` over the sample set.
    fn kernel_sums(&self, kernel: &Kernel, h: f64, x: &[f64]) -> (f64, [f64; MAX_DIM]) {
        let d = self.dimension;
        let mut weight = 0.0;
        let mut weighted = [0.0; MAX_DIM];
        let mut visit = |i: usize| {
            let p = &self.xs[i * d..(i + 1) * d];
            let w = if d == 1 {
                kernel.eval_1d((x[0] - p[0]) / h)
            } else {
                kernel.eval_2d((x[0] - p[0]) / h, (x[1] - p[1]) / h)
            };
            if w != 0.0 {
                weight += w;
                if let Some(values) = self.values {
                    for (acc, y) in weighted.iter_mut().zip(&values[i * d..(i + 1) * d]) {
                        *acc += w * y;
                    }
                }
            }
        };
        match &self.index {
            Index::Direct => (0..self.len()).for_each(&mut visit),
            Index::Sorted { order, keys } => {
                let reach = h * kernel.support_radius();
                let start = keys.partition_point(|&k| k < x[0] - reach);
                let end = keys.partition_point(|&k| k <= x[0] + reach);
                order[start..end].iter().for_each(|&i| visit(i));
            }
            Index::Buckets {
                origin,
                side,
                shape,
                starts,
                members,
            } => {
                let reach = h * kernel.support_radius();
                let range = |j: usize| -> Option<(usize, usize)> {
                    let lo = ((x[j] - reach - origin[j]) / side).floor();
                    let hi = ((x[j] + reach - origin[j]) / side).floor();
                    if hi < 0.0 || lo > (shape[j] - 1) as f64 {
                        return None;
                    }
                    Some((lo.max(0.0) as usize, (hi as usize).min(shape[j] - 1)))
                };
                if let (Some((x0, x1)), Some((y0, y1))) = (range(0), range(1)) {
                    for cx in x0..=x1 {
                        for cy in y0..=y1 {
                            let c = cx * shape[1] + cy;
                            members[starts[c]..starts[c + 1]].iter().for_each(|&i| visit(i));
                        }
                    }
                }
            }
        }
        (weight, weighted)
    }
}

fn check_inputs(traj: &Trajectory, kernel: &Kernel, h: f64, points: &Grid) -> Result<()> {
    check_bandwidth(h)?;
    if traj.is_empty() {
        return Err(Error::Empty("trajectory"));
    }
    if kernel.dimension() != traj.dimension() {
        return Err(Error::DimensionMismatch {
            expected: traj.dimension(),
            found: kernel.dimension(),
        });
    }
    if points.dimension() != traj.dimension() {
        return Err(Error::DimensionMismatch {
            expected: traj.dimension(),
            found: points.dimension(),
        });
    }
    Ok(())
}

/// `f_n` at every grid point, over all `n` states.
pub fn density_estimate(traj: &Trajectory, kernel: &Kernel, h: f64, points: &Grid) -> Result<Vec<f64>> {
    density_estimate_with(traj, kernel, h, points, Strategy::default())
}

pub fn density_estimate_with(
    traj: &Trajectory,
    kernel: &Kernel,
    h: f64,
    points: &Grid,
    strategy: Strategy,
) -> Result<Vec<f64>> {
    check_inputs(traj, kernel, h, points)?;
    let d = traj.dimension();
    let set = SampleSet::new(d, traj.states(), None, h * kernel.support_radius(), strategy);
    let scale = 1.0 / (set.len() as f64 * h.powi(d as i32));
    Ok((0..points.len())
        .into_par_iter()
        .map(|k| set.kernel_sums(kernel, h, points.point(k)).0 * scale)
        .collect())
}

fn regression_pass(
    traj: &Trajectory,
    kernel: &Kernel,
    h: f64,
    points: &Grid,
    strategy: Strategy,
) -> Result<Vec<(f64, [f64; MAX_DIM])>> {
    check_inputs(traj, kernel, h, points)?;
    if traj.len() < 2 {
        return Err(Error::invalid("n", "regression needs at least two states"));
    }
    let d = traj.dimension();
    let m = traj.len() - 1;
    let set = SampleSet::new(
        d,
        &traj.states()[..m * d],
        Some(traj.targets()),
        h * kernel.support_radius(),
        strategy,
    );
    let scale = 1.0 / (m as f64 * h.powi(d as i32));
    Ok((0..points.len())
        .into_par_iter()
        .map(|k| {
            let (w, wy) = set.kernel_sums(kernel, h, points.point(k));
            (w * scale, wy.map(|v| v * scale))
        })
        .collect())
}

fn ratio(f: f64, g: f64) -> f64 {
    if f == 0.0 {
        0.0
    } else {
        g / f
    }
}

/// Nadaraya-Watson estimate of coordinate `j` of `E(Y_i | X_i = x)`.
pub fn regression_estimate(
    traj: &Trajectory,
    kernel: &Kernel,
    h: f64,
    points: &Grid,
    coordinate: usize,
) -> Result<Vec<f64>> {
    regression_estimate_with(traj, kernel, h, points, coordinate, Strategy::default())
}

pub fn regression_estimate_with(
    traj: &Trajectory,
    kernel: &Kernel,
    h: f64,
    points: &Grid,
    coordinate: usize,
    strategy: Strategy,
) -> Result<Vec<f64>> {
    if coordinate >= traj.dimension() {
        return Err(Error::DimensionMismatch {
            expected: traj.dimension(),
            found: coordinate + 1,
        });
    }
    Ok(regression_pass(traj, kernel, h, points, strategy)?
        .into_iter()
        .map(|(f, g)| ratio(f, g[coordinate]))
        .collect())
}

/// `T_n(x)` for every grid point, flattened (`p * d` values). One pass of
/// kernel weights serves all coordinates.
pub fn map_estimate(traj: &Trajectory, kernel: &Kernel, h: f64, points: &Grid) -> Result<Vec<f64>> {
    map_estimate_with(traj, kernel, h, points, Strategy::default())
}

pub fn map_estimate_with(
    traj: &Trajectory,
    kernel: &Kernel,
    h: f64,
    points: &Grid,
    strategy: Strategy,
) -> Result<Vec<f64>> {
    let d = traj.dimension();
    Ok(regression_pass(traj, kernel, h, points, strategy)?
        .into_iter()
        .flat_map(|(f, g)| (0..d).map(move |j| ratio(f, g[j])))
        .collect())
}

/// Estimates and reference values on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateGrid {
    pub points: Grid,
    pub h: f64,
    pub f_hat: Vec<f64>,
    /// Flattened `p * d`.
    pub t_hat: Option<Vec<f64>>,
    pub f_true: Option<Vec<f64>>,
    /// Flattened `p * d`.
    pub t_true: Option<Vec<f64>>,
    /// Number of samples entering the regression estimate (`n - 1`).
    pub n_used: usize,
}

impl EstimateGrid {
    /// Runs both estimators on `points` and attaches the truths known for `sys`.
    pub fn compute(traj: &Trajectory, sys: &DynamicalSystem, kernel: &Kernel, h: f64, points: Grid) -> Result<Self> {
        let f_hat = density_estimate(traj, kernel, h, &points)?;
        let t_hat = map_estimate(traj, kernel, h, &points)?;
        let f_true = match (&sys.density, points.dimension()) {
            (Some(f), 1) => Some(points.points().iter().map(|&x| f.eval(x)).collect()),
            _ => None,
        };
        let t_true = (0..points.len()).flat_map(|k| sys.apply(points.point(k))).collect();
        Ok(EstimateGrid {
            h,
            f_hat,
            t_hat: Some(t_hat),
            f_true,
            t_true: Some(t_true),
            n_used: traj.len() - 1,
            points,
        })
    }

    /// Keeps the grid points satisfying `keep`.
    pub fn restrict(&self, keep: impl Fn(&[f64]) -> bool) -> Self {
        let d = self.points.dimension();
        let kept: Vec<usize> = (0..self.points.len()).filter(|&k| keep(self.points.point(k))).collect();
        let pick = |v: &Vec<f64>, width: usize| -> Vec<f64> {
            kept.iter()
                .flat_map(|&k| v[k * width..(k + 1) * width].to_vec())
                .collect()
        };
        EstimateGrid {
            points: Grid {
                dimension: d,
                points: pick(&self.points.points, d),
            },
            h: self.h,
            f_hat: pick(&self.f_hat, 1),
            t_hat: self.t_hat.as_ref().map(|v| pick(v, d)),
            f_true: self.f_true.as_ref().map(|v| pick(v, 1)),
            t_true: self.t_true.as_ref().map(|v| pick(v, d)),
            n_used: self.n_used,
        }
    }

    pub fn amef(&self) -> Option<f64> {
        self.f_true.as_ref().and_then(|t| ame(&self.f_hat, t).ok())
    }

    pub fn amet(&self) -> Option<VectorAme> {
        match (&self.t_hat, &self.t_true) {
            (Some(e), Some(t)) => ame_vector(e, t, self.points.dimension()).ok(),
            _ => None,
        }
    }
}

/// Absolute mean error `1/p sum_k |est_k - truth_k|`.
pub fn ame(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::Empty("estimates"));
    }
    let total: f64 = estimates.iter().zip(truths).map(|(e, t)| (e - t).abs()).sum();
    Ok(total / estimates.len() as f64)
}

/// AME of vector-valued estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorAme {
    pub per_coordinate: Vec<f64>,
    /// Mean over points of the sup-norm error.
    pub sup_norm: f64,
}

pub fn ame_vector(estimates: &[f64], truths: &[f64], dimension: usize) -> Result<VectorAme> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::Empty("estimates"));
    }
    if dimension == 0 || !estimates.len().is_multiple_of(dimension) {
        return Err(Error::DimensionMismatch {
            expected: dimension,
            found: estimates.len() % dimension.max(1),
        });
    }
    let p = (estimates.len() / dimension) as f64;
    let mut per_coordinate = vec![0.0; dimension];
    let mut sup_norm = 0.0;
    for (e, t) in estimates.chunks(dimension).zip(truths.chunks(dimension)) {
        let mut worst: f64 = 0.0;
        for j in 0..dimension {
            let diff = (e[j] - t[j]).abs();
            per_coordinate[j] += diff;
            worst = worst.max(diff);
        }
        sup_norm += worst;
    }
    per_coordinate.iter_mut().for_each(|v| *v /= p);
    Ok(VectorAme {
        per_coordinate,
        sup_norm: sup_norm / p,
    })
}

/// Outcome of [`bias_bound_check`].
#[derive(Debug, Clone)]
pub struct BiasCheck {
    /// `E f_n(x)` by quadrature.
    pub expectation: Vec<f64>,
    /// `|E f_n(x) - f(x)|`.
    pub bias: Vec<f64>,
    /// `bias <= u^alpha`.
    pub passes: Vec<bool>,
    /// Detected `B_f(u, h diam D)`.
    pub bad_set: BadSetReport,
    /// Indices of failing points that lie outside the detected bad set
    /// (widened by its discretization slack). Empty when the bias lemma holds.
    pub unexplained_failures: Vec<usize>,
}

/// Checks `|E f_n(x) - f(x)| <= u^alpha` at every grid point and that the
/// failures sit inside the oscillation bad set of `f` at radius `h diam D`.
pub fn bias_bound_check(
    sys: &DynamicalSystem,
    kernel: &Kernel,
    h: f64,
    u: f64,
    alpha: f64,
    points: &Grid,
) -> Result<BiasCheck> {
    check_bandwidth(h)?;
    let f = sys.density.as_ref().ok_or_else(|| Error::MissingOracle(sys.id()))?;
    if kernel.dimension() != 1 || points.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: kernel.dimension().max(points.dimension()),
        });
    }
    let radius = h * kernel.support_diameter();
    if u < radius {
        return Err(Error::invalid("u", format!("need u >= h diam(D) = {radius}, got {u}")));
    }
    let threshold = u.powf(alpha);
    let r = kernel.support_radius();
    let mut density_breaks = f.breakpoints();
    density_breaks.extend([sys.domain.lower[0], sys.domain.upper[0]]);

    let expectation: Vec<f64> = points
        .points()
        .par_iter()
        .map(|&x| {
            let mut breaks: Vec<f64> = density_breaks.iter().map(|b| (x - b) / h).collect();
            breaks.push(0.0);
            quadrature::integrate_piecewise(|y| kernel.eval_1d(y) * f.eval(x - h * y), -r, r, &breaks, 4)
        })
        .collect();
    let bias: Vec<f64> = expectation
        .iter()
        .zip(points.points())
        .map(|(e, &x)| (e - f.eval(x)).abs())
        .collect();
    let passes: Vec<bool> = bias.iter().map(|&b| b <= threshold).collect();

    let (a, b) = (sys.domain.lower[0] - radius, sys.domain.upper[0] + radius);
    let resolution = radius / 16.0;
    let bad_set = regularity::oscillation_bad_set(|x| f.eval(x), a, b, u, radius, alpha, resolution)?;
    let slack = 2.0 * resolution;
    let unexplained_failures = passes
        .iter()
        .enumerate()
        .filter(|&(k, &ok)| !ok && !bad_set.covers(points.point(k), slack))
        .map(|(k, _)| k)
        .collect();
    Ok(BiasCheck {
        expectation,
        bias,
        passes,
        bad_set,
        unexplained_failures,
    })
}
