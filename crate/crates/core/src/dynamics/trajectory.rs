use rand::{Rng, RngCore};

use super::{DynamicalSystem, MapKind, DOMAIN_TOLERANCE};
use crate::error::{Error, Result};
use crate::stochastics::{NoiseLaw, RngState};

/// Tuning of [`sample_stationary`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Iterations discarded when no density oracle is available.
    pub burnin: usize,
    /// Multiplier applied to the grid maximum of the density.
    pub envelope_factor: f64,
    /// Number of grid points used to locate the density maximum.
    pub envelope_grid: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            burnin: 1_000,
            envelope_factor: 1.01,
            envelope_grid: 10_000,
        }
    }
}

/// An orbit `X_0 .. X_{n-1}` together with the noisy targets
/// `Y_i = X_{i+1} + eps_i`, `i = 0 .. n-2`. Points are stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dimension: usize,
    states: Vec<f64>,
    targets: Vec<f64>,
    noise: NoiseLaw,
    system_id: String,
    restarts: Vec<usize>,
}

impl Trajectory {
    /// Builds a trajectory from raw data, e.g. synthetic samples.
    pub fn from_parts(
        dimension: usize,
        states: Vec<f64>,
        targets: Vec<f64>,
        noise: NoiseLaw,
        system_id: impl Into<String>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension", "must be positive"));
        }
        if states.is_empty() {
            return Err(Error::Empty("trajectory"));
        }
        if !states.len().is_multiple_of(dimension) {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                found: states.len() % dimension,
            });
        }
        if targets.len() + dimension != states.len() {
            return Err(Error::LengthMismatch {
                left: states.len() / dimension - 1,
                right: targets.len() / dimension,
            });
        }
        Ok(Trajectory {
            dimension,
            states,
            targets,
            noise,
            system_id: system_id.into(),
            restarts: Vec::new(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of states `n`.
    pub fn len(&self) -> usize {
        self.states.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.dimension..(i + 1) * self.dimension]
    }

    /// All states, flattened.
    pub fn states(&self) -> &[f64] {
        &self.states
    }

    /// All targets, flattened; `n - 1` points.
    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn noise(&self) -> &NoiseLaw {
        &self.noise
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    /// Steps `i` where `X_i` was redrawn from the invariant law because the
    /// orbit hit the singular point of a Gauss-type map.
    pub fn restarts(&self) -> &[usize] {
        &self.restarts
    }
}

fn envelope(sys: &DynamicalSystem, cfg: &SamplerConfig) -> Option<f64> {
    let f = sys.density.as_ref()?;
    let (a, b) = (sys.domain.lower[0], sys.domain.upper[0]);
    let m = cfg.envelope_grid.max(2);
    let sup = (0..m)
        .map(|k| f.eval(a + (b - a) * k as f64 / (m - 1) as f64))
        .fold(0.0, f64::max);
    Some(sup * cfg.envelope_factor)
}

fn sample_with_envelope(
    sys: &DynamicalSystem,
    rng: &mut RngState,
    cfg: &SamplerConfig,
    envelope: Option<f64>,
) -> Result<Vec<f64>> {
    if let (Some(f), Some(env)) = (sys.density.as_ref(), envelope) {
        loop {
            let x = sys.domain.sample_uniform(rng)[0];
            if x == 0.0 && sys.map.has_singular_zero() {
                continue;
            }
            let value = f.eval(x);
            if value > env {
                return Err(Error::EnvelopeExceeded {
                    x,
                    value,
                    envelope: env,
                });
            }
            if rng.uniform() * env < value {
                return Ok(vec![x]);
            }
        }
    }
    let start = sys.effective_support();
    let mut x = start.sample_uniform(rng);
    let mut next = vec![0.0; x.len()];
    for _ in 0..cfg.burnin {
        sys.map.apply(&x, &mut next);
        if sys.map.has_singular_zero() && next[0] == 0.0 {
            x = start.sample_uniform(rng);
            continue;
        }
        std::mem::swap(&mut x, &mut next);
    }
    Ok(x)
}

/// Draws one point from the invariant law.
///
/// With a density oracle this is rejection sampling under a uniform
/// proposal. Otherwise the orbit of a uniform start in the support is run
/// through `cfg.burnin` iterations.
pub fn sample_stationary(sys: &DynamicalSystem, rng: &mut RngState, cfg: &SamplerConfig) -> Result<Vec<f64>> {
    sample_with_envelope(sys, rng, cfg, envelope(sys, cfg))
}

/// Simulates `n` states from the invariant law and their noisy targets.
///
/// `rng` is split into an `"init"` child (initial state, restarts and the
/// digits of integer beta-maps) and a `"noise"` child, so the noise is
/// independent of the orbit.
///
/// Orbits of integer beta-maps collapse to 0 in binary floating point, so
/// they are run in 64-bit fixed point instead: `s -> b s + D mod 2^64` with
/// `D` uniform on `{0, .., b-1}` supplying the next base-`b` digit of the
/// (infinitely long) initial point. This is the exact orbit of a point
/// drawn from Lebesgue measure, truncated to 53 bits for output.
pub fn generate_trajectory(
    sys: &DynamicalSystem,
    n: usize,
    noise: &NoiseLaw,
    rng: &RngState,
    cfg: &SamplerConfig,
) -> Result<Trajectory> {
    if n < 2 {
        return Err(Error::invalid("n", format!("need at least 2 states, got {n}")));
    }
    let d = sys.dimension();
    if noise.dimension != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: noise.dimension,
        });
    }
    noise.kind.validate()?;

    let mut init = rng.split("init");
    let mut noise_rng = rng.split("noise");
    let env = envelope(sys, cfg);
    let x0 = sample_with_envelope(sys, &mut init, cfg, env)?;

    let mut states = Vec::with_capacity(n * d);
    let mut restarts = Vec::new();
    states.extend_from_slice(&x0);

    if let MapKind::Beta { integer: Some(b), .. } = sys.map {
        const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
        let mut s = (((x0[0] * (1u64 << 53) as f64) as u64) << 11) | (init.next_u64() >> 53);
        for _ in 1..n {
            let digit = init.random_range(0..b);
            s = s.wrapping_mul(b).wrapping_add(digit);
            states.push((s >> 11) as f64 * SCALE);
        }
    } else {
        let mut next = vec![0.0; d];
        for i in 1..n {
            sys.map.apply(&states[(i - 1) * d..i * d], &mut next);
            if sys.map.has_singular_zero() && next[0] == 0.0 {
                next = sample_with_envelope(sys, &mut init, cfg, env)?;
                restarts.push(i);
            }
            if !sys.domain.contains(&next, DOMAIN_TOLERANCE) || next.iter().any(|v| !v.is_finite()) {
                return Err(Error::EscapedDomain { step: i, point: next });
            }
            states.extend_from_slice(&next);
        }
    }

    let mut targets = Vec::with_capacity((n - 1) * d);
    let mut eps = vec![0.0; d];
    for i in 1..n {
        noise.draw_into(&mut noise_rng, &mut eps)?;
        targets.extend(states[i * d..(i + 1) * d].iter().zip(&eps).map(|(x, e)| x + e));
    }

    Ok(Trajectory {
        dimension: d,
        states,
        targets,
        noise: *noise,
        system_id: sys.id(),
        restarts,
    })
}

/// L1 distance between the normalized histogram of a noiseless orbit of
/// length `n` and the density oracle, on `bins` equal bins of the domain.
pub fn orbit_histogram_l1(sys: &DynamicalSystem, n: usize, bins: usize, rng: &RngState) -> Result<f64> {
    let f = sys.density.as_ref().ok_or_else(|| Error::MissingOracle(sys.id()))?;
    if sys.dimension() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: sys.dimension(),
        });
    }
    if bins == 0 {
        return Err(Error::invalid("bins", "must be positive"));
    }
    let traj = generate_trajectory(sys, n, &NoiseLaw::none(1), rng, &SamplerConfig::default())?;
    let (a, b) = (sys.domain.lower[0], sys.domain.upper[0]);
    let width = (b - a) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in traj.states() {
        let k = (((x - a) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let lo = a + k as f64 * width;
            (c as f64 / n as f64 - f.integral(lo, lo + width)).abs()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{beta_map, gauss_map, logistic_map, matrix_beta_map, PAPER_MATRIX};
    use crate::stochastics::NoiseKind;

    #[test]
    fn noiseless_targets_are_next_states() {
        let sys = beta_map(27.0 / 11.0).unwrap();
        let t = generate_trajectory(
            &sys,
            500,
            &NoiseLaw::none(1),
            &RngState::from_seed(1),
            &SamplerConfig::default(),
        )
        .unwrap();
        for i in 0..t.len() - 1 {
            assert_eq!(t.target(i), t.state(i + 1));
        }
    }

    #[test]
    fn length_contract() {
        let sys = gauss_map();
        let t = generate_trajectory(
            &sys,
            2,
            &NoiseLaw::none(1),
            &RngState::from_seed(1),
            &SamplerConfig::default(),
        )
        .unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.targets().len(), 1);
        assert!(generate_trajectory(
            &sys,
            1,
            &NoiseLaw::none(1),
            &RngState::from_seed(1),
            &SamplerConfig::default()
        )
        .is_err());
        assert!(generate_trajectory(
            &sys,
            10,
            &NoiseLaw::none(2),
            &RngState::from_seed(1),
            &SamplerConfig::default()
        )
        .is_err());
    }

    #[test]
    fn replay_of_first_step() {
        let beta = 27.0 / 11.0;
        let sys = beta_map(beta).unwrap();
        let t = generate_trajectory(
            &sys,
            10,
            &NoiseLaw::none(1),
            &RngState::from_seed(5),
            &SamplerConfig::default(),
        )
        .unwrap();
        let y = beta * t.state(0)[0];
        assert_eq!(t.state(1)[0], y - y.floor());
    }

    #[test]
    fn states_follow_the_map() {
        let cfg = SamplerConfig::default();
        for sys in [
            beta_map(27.0 / 11.0).unwrap(),
            gauss_map(),
            logistic_map(3.8).unwrap(),
            matrix_beta_map(PAPER_MATRIX).unwrap(),
        ] {
            let t = generate_trajectory(
                &sys,
                5_000,
                &NoiseLaw::none(sys.dimension()),
                &RngState::from_seed(9),
                &cfg,
            )
            .unwrap();
            for i in 0..t.len() - 1 {
                if t.restarts().contains(&(i + 1)) {
                    continue;
                }
                assert_eq!(sys.apply(t.state(i)), t.state(i + 1), "{} step {i}", sys.id());
            }
        }
    }

    #[test]
    fn integer_beta_orbits_do_not_collapse() {
        let sys = beta_map(2.0).unwrap();
        let t = generate_trajectory(
            &sys,
            10_000,
            &NoiseLaw::none(1),
            &RngState::from_seed(3),
            &SamplerConfig::default(),
        )
        .unwrap();
        let tail = &t.states()[5_000..];
        let zeros = tail.iter().filter(|&&x| x == 0.0).count();
        assert_eq!(zeros, 0);
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
        // Consecutive states agree with the map up to the refreshed low digit.
        for i in 0..t.len() - 1 {
            let y = sys.apply(t.state(i))[0];
            let x = t.state(i + 1)[0];
            let gap = (x - y).abs().min(1.0 - (x - y).abs());
            assert!(gap <= 1e-12, "step {i}: {x} vs {y}");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let sys = gauss_map();
        let noise = NoiseLaw::new(NoiseKind::uniform(0.2), 1).unwrap();
        let cfg = SamplerConfig::default();
        let a = generate_trajectory(&sys, 1000, &noise, &RngState::from_seed(8), &cfg).unwrap();
        let b = generate_trajectory(&sys, 1000, &noise, &RngState::from_seed(8), &cfg).unwrap();
        let c = generate_trajectory(&sys, 1000, &noise, &RngState::from_seed(9), &cfg).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_is_added_to_next_state() {
        let sys = logistic_map(3.8).unwrap();
        let noise = NoiseLaw::new(NoiseKind::uniform(0.2), 1).unwrap();
        let t = generate_trajectory(&sys, 2000, &noise, &RngState::from_seed(2), &SamplerConfig::default()).unwrap();
        let mut sum = 0.0;
        for i in 0..t.len() - 1 {
            let e = t.target(i)[0] - t.state(i + 1)[0];
            assert!(e.abs() <= 0.2 + 1e-12);
            sum += e;
        }
        assert!((sum / (t.len() - 1) as f64).abs() < 0.02);
    }

    #[test]
    fn uniform_sampling_for_integer_beta() {
        // Kolmogorov-Smirnov distance against the uniform CDF.
        let sys = beta_map(2.0).unwrap();
        let mut rng = RngState::from_seed(21);
        let cfg = SamplerConfig::default();
        let mut xs: Vec<f64> = (0..100_000)
            .map(|_| sample_stationary(&sys, &mut rng, &cfg).unwrap()[0])
            .collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - i as f64 / n).abs().max((x - (i + 1) as f64 / n).abs()))
            .fold(0.0, f64::max);
        assert!(ks <= 0.01, "{ks}");
    }

    #[test]
    fn gauss_sampling_histogram() {
        let sys = gauss_map();
        let mut rng = RngState::from_seed(22);
        let cfg = SamplerConfig::default();
        let bins = 50;
        let mut counts = vec![0usize; bins];
        let n = 100_000;
        for _ in 0..n {
            let x = sample_stationary(&sys, &mut rng, &cfg).unwrap()[0];
            counts[((x * bins as f64) as usize).min(bins - 1)] += 1;
        }
        // Exact bin masses from the antiderivative log2(1 + x).
        let l1: f64 = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let (lo, hi) = (k as f64 / bins as f64, (k + 1) as f64 / bins as f64);
                let mass = ((1.0 + hi) / (1.0 + lo)).log2();
                (c as f64 / n as f64 - mass).abs()
            })
            .sum();
        assert!(l1 <= 0.03, "{l1}");
    }

    #[test]
    fn logistic_burn_in_lands_in_support() {
        let sys = logistic_map(3.8).unwrap();
        let mut rng = RngState::from_seed(4);
        for _ in 0..200 {
            let x = sample_stationary(&sys, &mut rng, &SamplerConfig::default()).unwrap()[0];
            assert!((0.1805 - 1e-12..=0.95 + 1e-12).contains(&x), "{x}");
        }
    }

    #[test]
    fn tight_envelope_is_reported() {
        let sys = gauss_map();
        let cfg = SamplerConfig {
            envelope_factor: 0.5,
            ..SamplerConfig::default()
        };
        let mut rng = RngState::from_seed(1);
        let res = (0..100)
            .map(|_| sample_stationary(&sys, &mut rng, &cfg))
            .find(|r| r.is_err());
        assert!(matches!(res, Some(Err(Error::EnvelopeExceeded { .. }))));
    }

    #[test]
    fn from_parts_validation() {
        let none = NoiseLaw::none(1);
        assert!(Trajectory::from_parts(1, vec![0.0], vec![], none, "x").is_ok());
        assert!(Trajectory::from_parts(1, vec![], vec![], none, "x").is_err());
        assert!(Trajectory::from_parts(1, vec![0.0, 1.0], vec![], none, "x").is_err());
        assert!(Trajectory::from_parts(2, vec![0.0, 1.0, 2.0], vec![], none, "x").is_err());
    }
}
