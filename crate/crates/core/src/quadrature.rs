//! Numerical integration on intervals and axis-aligned rectangles.
//!
//! Composite Gauss-Legendre with a fixed panel count. Callers that integrate
//! piecewise functions should split at the known breakpoints and integrate
//! each smooth piece separately; the rule is exact for polynomials of degree
//! up to 9 on every panel.

const NODES: [f64; 5] = [
    0.0,
    0.538_469_310_105_683_1,
    -0.538_469_310_105_683_1,
    0.906_179_845_938_664,
    -0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_47,
    0.478_628_670_499_366_47,
    0.236_926_885_056_189_08,
    0.236_926_885_056_189_08,
];

/// Integrates `f` over `[a, b]` with `panels` equal Gauss-Legendre panels.
pub fn integrate<F>(f: F, a: f64, b: f64, panels: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    if b <= a {
        return 0.0;
    }
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let half = 0.5 * width;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let mut acc = 0.0;
        for (node, weight) in NODES.iter().zip(WEIGHTS.iter()) {
            acc += weight * f(mid + half * node);
        }
        total += acc * half;
    }
    total
}

/// Integrates over `[a, b]`, splitting at `breaks` (points outside the
/// interval are ignored) so that discontinuities sit on panel boundaries.
pub fn integrate_piecewise<F>(f: F, a: f64, b: f64, breaks: &[f64], panels_per_piece: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    let mut lo = a;
    for &c in cuts.iter().chain(std::iter::once(&b)) {
        total += integrate(&f, lo, c, panels_per_piece);
        lo = c;
    }
    total
}

/// Tensor-product rule over `[a0, b0] x [a1, b1]`.
pub fn integrate_2d<F>(f: F, lower: [f64; 2], upper: [f64; 2], panels: usize) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    integrate(
        |x| integrate(|y| f(x, y), lower[1], upper[1], panels),
        lower[0],
        upper[0],
        panels,
    )
}
