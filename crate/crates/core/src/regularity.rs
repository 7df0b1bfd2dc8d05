//! Oscillation bad sets, total variation and the bad-set bounds for
//! functions of bounded variation.
//!
//! `B_g(u, h)` is the set of `x` with `sup_{|x - y| < h} |g(x) - g(y)| > u^alpha`
//! (sup-norm of the difference for vector-valued `g`). Everything here is a
//! grid approximation: `g` is sampled at cell centres spaced `resolution`
//! apart and each flagged sample stands for its whole cell.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::dynamics::{DensityOracle, Domain};
use crate::error::{Error, Result};

/// Refuse scans with more sample cells than this.
pub const MAX_CELLS: usize = 50_000_000;

/// A flagged box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Component {
    pub fn measure(&self) -> f64 {
        self.lower.iter().zip(&self.upper).map(|(a, b)| b - a).product()
    }

    fn contains(&self, x: &[f64], slack: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (a, b))| *v >= a - slack && *v <= b + slack)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BadSetReport {
    pub u: f64,
    pub h: f64,
    pub alpha: f64,
    /// `u^alpha`.
    pub threshold: f64,
    pub resolution: f64,
    /// Total flagged length (d = 1) or area (d = 2).
    pub measure_estimate: f64,
    /// Disjoint, ordered by cell index.
    pub components: Vec<Component>,
}

impl BadSetReport {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// Whether `x` lies in a component widened by `slack` on every side.
    pub fn covers(&self, x: &[f64], slack: f64) -> bool {
        self.components.iter().any(|c| c.contains(x, slack))
    }

    /// Discretization uncertainty on the measure: each component's two ends
    /// are known to within one cell, so `2 * resolution^d` per component.
    pub fn measure_slack(&self) -> f64 {
        let d = self.components.first().map_or(1, |c| c.lower.len()) as i32;
        2.0 * self.resolution.powi(d) * self.components.len() as f64
    }
}

fn check_scan(u: f64, h: f64, alpha: f64, resolution: f64) -> Result<()> {
    if !(u > 0.0 && u.is_finite()) {
        return Err(Error::invalid("u", format!("need u > 0, got {u}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("h", format!("need h > 0, got {h}")));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("need 0 < alpha <= 1, got {alpha}")));
    }
    if !(resolution > 0.0) || resolution > h / 4.0 {
        return Err(Error::invalid(
            "resolution",
            format!("need 0 < resolution <= h/4 = {}, got {resolution}", h / 4.0),
        ));
    }
    Ok(())
}

/// Largest `k` with `k * resolution < h`.
fn half_window(h: f64, resolution: f64) -> usize {
    let mut w = (h / resolution).floor() as usize;
    while w > 0 && w as f64 * resolution >= h {
        w -= 1;
    }
    w
}

fn cell_count(a: f64, b: f64, resolution: f64) -> Result<usize> {
    if !(a < b) {
        return Err(Error::invalid("interval", format!("need a < b, got [{a}, {b}]")));
    }
    let n = ((b - a) / resolution).ceil() as usize;
    if n > MAX_CELLS {
        return Err(Error::invalid(
            "resolution",
            format!("{n} cells exceed the limit of {MAX_CELLS}"),
        ));
    }
    Ok(n.max(1))
}

/// Min and max of `values[c - w ..= c + w]` (clipped) for every `c`.
fn window_extrema(values: &[f64], w: usize) -> (Vec<f64>, Vec<f64>) {
    let n = values.len();
    let mut mins = Vec::with_capacity(n);
    let mut maxs = Vec::with_capacity(n);
    let mut lo: VecDeque<usize> = VecDeque::new();
    let mut hi: VecDeque<usize> = VecDeque::new();
    for i in 0..n + w {
        if i < n {
            while lo.back().is_some_and(|&j| values[j] >= values[i]) {
                lo.pop_back();
            }
            lo.push_back(i);
            while hi.back().is_some_and(|&j| values[j] <= values[i]) {
                hi.pop_back();
            }
            hi.push_back(i);
        }
        if i >= w {
            let c = i - w;
            while lo.front().is_some_and(|&j| j + w < c) {
                lo.pop_front();
            }
            while hi.front().is_some_and(|&j| j + w < c) {
                hi.pop_front();
            }
            mins.push(values[lo[0]]);
            maxs.push(values[hi[0]]);
        }
    }
    (mins, maxs)
}

/// Scans `g` on `[a, b]` at the given resolution and flags cells whose
/// oscillation over the open `h`-ball exceeds `u^alpha`. Pass `alpha = 1` for
/// the raw threshold `u`.
pub fn oscillation_bad_set<G>(g: G, a: f64, b: f64, u: f64, h: f64, alpha: f64, resolution: f64) -> Result<BadSetReport>
where
    G: Fn(f64) -> f64 + Sync,
{
    check_scan(u, h, alpha, resolution)?;
    let n = cell_count(a, b, resolution)?;
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| g((a + (k as f64 + 0.5) * resolution).min(b)))
        .collect();
    let (mins, maxs) = window_extrema(&values, half_window(h, resolution));
    let threshold = u.powf(alpha);
    let flagged: Vec<bool> = (0..n)
        .map(|k| (maxs[k] - values[k]).max(values[k] - mins[k]) > threshold)
        .collect();

    let mut components = Vec::new();
    let mut measure = 0.0;
    let mut k = 0;
    while k < n {
        if !flagged[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < n && flagged[k] {
            k += 1;
        }
        let lower = a + start as f64 * resolution;
        let upper = (a + k as f64 * resolution).min(b);
        measure += upper - lower;
        components.push(Component {
            lower: vec![lower],
            upper: vec![upper],
        });
    }
    Ok(BadSetReport {
        u,
        h,
        alpha,
        threshold,
        resolution,
        measure_estimate: measure,
        components,
    })
}

/// Two-dimensional scan of a vector-valued `g` over `domain`, with the
/// sup-norm ball `|x - y|_inf < h` and the sup-norm of `g(x) - g(y)`.
/// Components are maximal runs along the second axis within one row of cells.
pub fn oscillation_bad_set_2d<G>(
    g: G,
    domain: &Domain,
    u: f64,
    h: f64,
    alpha: f64,
    resolution: f64,
) -> Result<BadSetReport>
where
    G: Fn(&[f64]) -> Vec<f64> + Sync,
{
    check_scan(u, h, alpha, resolution)?;
    if domain.dimension() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: domain.dimension(),
        });
    }
    let (a, b) = (&domain.lower, &domain.upper);
    let nx = cell_count(a[0], b[0], resolution)?;
    let ny = cell_count(a[1], b[1], resolution)?;
    if nx.saturating_mul(ny) > MAX_CELLS {
        return Err(Error::invalid(
            "resolution",
            format!("{nx}x{ny} cells exceed the limit of {MAX_CELLS}"),
        ));
    }
    let centre = |k: usize, j: usize| (a[j] + (k as f64 + 0.5) * resolution).min(b[j]);
    let samples: Vec<Vec<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|c| g(&[centre(c / ny, 0), centre(c % ny, 1)]))
        .collect();
    let out_dim = samples.first().map_or(0, Vec::len);
    if samples.iter().any(|s| s.len() != out_dim) {
        return Err(Error::invalid("g", "inconsistent output dimension"));
    }
    let w = half_window(h, resolution);

    // Separable sliding extrema: along y inside each row, then along x.
    let mut oscillation = vec![0.0f64; nx * ny];
    for j in 0..out_dim {
        let values: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        let (mut row_min, mut row_max) = (vec![0.0; nx * ny], vec![0.0; nx * ny]);
        for ix in 0..nx {
            let (mn, mx) = window_extrema(&values[ix * ny..(ix + 1) * ny], w);
            row_min[ix * ny..(ix + 1) * ny].copy_from_slice(&mn);
            row_max[ix * ny..(ix + 1) * ny].copy_from_slice(&mx);
        }
        for iy in 0..ny {
            let col_min: Vec<f64> = (0..nx).map(|ix| row_min[ix * ny + iy]).collect();
            let col_max: Vec<f64> = (0..nx).map(|ix| row_max[ix * ny + iy]).collect();
            let (mn, _) = window_extrema(&col_min, w);
            let (_, mx) = window_extrema(&col_max, w);
            for ix in 0..nx {
                let c = ix * ny + iy;
                let o = (mx[ix] - values[c]).max(values[c] - mn[ix]);
                oscillation[c] = oscillation[c].max(o);
            }
        }
    }

    let threshold = u.powf(alpha);
    let mut components = Vec::new();
    let mut measure = 0.0;
    for ix in 0..nx {
        let x0 = a[0] + ix as f64 * resolution;
        let x1 = (a[0] + (ix + 1) as f64 * resolution).min(b[0]);
        let mut iy = 0;
        while iy < ny {
            if oscillation[ix * ny + iy] <= threshold {
                iy += 1;
                continue;
            }
            let start = iy;
            while iy < ny && oscillation[ix * ny + iy] > threshold {
                iy += 1;
            }
            let c = Component {
                lower: vec![x0, a[1] + start as f64 * resolution],
                upper: vec![x1, (a[1] + iy as f64 * resolution).min(b[1])],
            };
            measure += c.measure();
            components.push(c);
        }
    }
    Ok(BadSetReport {
        u,
        h,
        alpha,
        threshold,
        resolution,
        measure_estimate: measure,
        components,
    })
}

/// Variation of `g` along the dyadic subdivision of `[a, b]` into the
/// smallest power of two of pieces no longer than `resolution`. Refining the
/// resolution refines the subdivision, so the result never decreases.
pub fn total_variation<G>(g: G, a: f64, b: f64, resolution: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    if !(a < b) {
        return Err(Error::invalid("interval", format!("need a < b, got [{a}, {b}]")));
    }
    if !(resolution > 0.0) {
        return Err(Error::invalid(
            "resolution",
            format!("need resolution > 0, got {resolution}"),
        ));
    }
    let mut pieces = 1usize;
    while (b - a) / pieces as f64 > resolution {
        pieces *= 2;
        if pieces > MAX_CELLS {
            return Err(Error::invalid("resolution", "subdivision too fine"));
        }
    }
    let step = (b - a) / pieces as f64;
    let mut prev = g(a);
    let mut total = 0.0;
    for k in 1..=pieces {
        let x = if k == pieces { b } else { a + k as f64 * step };
        let v = g(x);
        total += (v - prev).abs();
        prev = v;
    }
    Ok(total)
}

/// Exact variation of a known invariant density on its domain `[0, 1]`:
/// the jump sizes for Parry densities, `f(0) - f(1)` for the monotone Gauss
/// density.
pub fn density_total_variation(density: &DensityOracle) -> f64 {
    match density {
        DensityOracle::Parry(p) => p.total_variation(),
        DensityOracle::Gauss => density.eval(0.0) - density.eval(1.0),
    }
}

/// The two bounds for one index `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaBounds {
    pub h: f64,
    pub u: f64,
    /// `3 V h^{alpha/2}`, bounding `m(B_n)`.
    pub b_bound: f64,
    /// `2 V h / u`, bounding `m(A_n)`.
    pub a_bound: f64,
}

/// Bad-set bounds for a function of variation `variation` along the
/// sequences `(u_n)`, `(h_n)`, which must decrease and satisfy
/// `h_n^{2 - alpha} <= u_n^2`.
pub fn bv_lemma_bounds(variation: f64, u_n: &[f64], h_n: &[f64], alpha: f64) -> Result<Vec<LemmaBounds>> {
    if !(variation >= 0.0 && variation.is_finite()) {
        return Err(Error::invalid(
            "variation",
            format!("need a finite V >= 0, got {variation}"),
        ));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("need 0 < alpha <= 1, got {alpha}")));
    }
    if u_n.len() != h_n.len() {
        return Err(Error::LengthMismatch {
            left: u_n.len(),
            right: h_n.len(),
        });
    }
    if u_n.is_empty() {
        return Err(Error::Empty("sequences"));
    }
    for seq in [u_n, h_n] {
        if seq.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("sequence", "u_n and h_n must be positive"));
        }
        if seq.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("sequence", "u_n and h_n must be decreasing"));
        }
    }
    u_n.iter()
        .zip(h_n)
        .enumerate()
        .map(|(n, (&u, &h))| {
            let lhs = h.powf(2.0 - alpha);
            if lhs > u * u * (1.0 + 1e-12) {
                return Err(Error::invalid(
                    "h_n",
                    format!("hypothesis h^(2-alpha) <= u^2 fails at index {n}: {lhs} > {}", u * u),
                ));
            }
            Ok(LemmaBounds {
                h,
                u,
                b_bound: 3.0 * variation * h.powf(alpha / 2.0),
                a_bound: 2.0 * variation * h / u,
            })
        })
        .collect()
}

/// Empirical check of the `m(A_n)` bound at one index.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaCheck {
    pub bounds: LemmaBounds,
    /// Detected `m(A_n)`, raw threshold `u_n`.
    pub empirical: f64,
    pub resolution: f64,
    /// `4 * resolution`.
    pub slack: f64,
    pub holds: bool,
}

/// Evaluates [`bv_lemma_bounds`] and measures `A_n = B_g(u_n, h_n)` on
/// `[a, b]` with the raw threshold `u_n`. The scan resolution is
/// `min(resolution, h_n/4)`.
#[allow(clippy::too_many_arguments)]
pub fn bv_lemma_validate<G>(
    g: G,
    a: f64,
    b: f64,
    variation: f64,
    u_n: &[f64],
    h_n: &[f64],
    alpha: f64,
    resolution: f64,
) -> Result<Vec<LemmaCheck>>
where
    G: Fn(f64) -> f64 + Sync,
{
    let bounds = bv_lemma_bounds(variation, u_n, h_n, alpha)?;
    bounds
        .into_iter()
        .map(|bounds| {
            let res = resolution.min(bounds.h / 4.0);
            let report = oscillation_bad_set(&g, a, b, bounds.u, bounds.h, 1.0, res)?;
            let slack = 4.0 * res;
            Ok(LemmaCheck {
                bounds,
                empirical: report.measure_estimate,
                resolution: res,
                slack,
                holds: report.measure_estimate <= bounds.a_bound + slack,
            })
        })
        .collect()
}
