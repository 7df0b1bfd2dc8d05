use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dynest_core::bounds::{density_deviation_envelope, BoundParams, MixingModel};
use dynest_core::experiments::{
    convergence_sweep, coverage_study, linspace, reproduce_paper_suite, run_replication, run_table, write_coverage_csv,
    write_estimates_csv, write_histogram_csv, write_rows_csv, write_suite_csv, write_sweep_csv, ConfigFile,
    CoverageSpec, TableFile, SPEC_PREFIX,
};
use dynest_core::regularity::{oscillation_bad_set, oscillation_bad_set_2d, BadSetReport};
use dynest_core::SystemSpec;

#[derive(Parser)]
#[command(name = "dynest", version, about = "Kernel estimation on chaotic orbits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate f and T on a grid from one orbit and write them point by point
    Estimate(RunArgs),
    /// Run every row of a table file and write the error metrics
    Table {
        /// TOML file with `[defaults]` and `[[spec]]` entries
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Error against orbit length with h = n^-xi, and the fitted log-log slope
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated increasing sizes
        #[arg(long, value_delimiter = ',', default_values_t = [1_000usize, 10_000, 100_000])]
        n_list: Vec<usize>,
    },
    /// Exceedance frequencies of |f_n(x) - f(x)| against the density envelope
    Coverage(CoverageArgs),
    /// Evaluate the density deviation envelope on a grid of t
    Bounds(BoundsArgs),
    /// Locate the oscillation bad set of a density or map
    Regularity(RegularityArgs),
    /// Rerun every published experiment and compare with the published values
    PaperSuite {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output CSV (stdout if absent)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Binned differences T_n - T of the two-dimensional run
        #[arg(long)]
        histograms: Option<PathBuf>,
        /// Append wall times (makes the output run-dependent)
        #[arg(long)]
        timings: bool,
    },
}

/// Experiment settings. Flags override the config file.
#[derive(Args, Default)]
struct RunArgs {
    /// TOML file with experiment keys
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    label: Option<String>,
    /// beta:<b>, gauss, alphagauss:<a>, logistic:<a>, matrixbeta:paper
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "xi")]
    h: Option<f64>,
    /// Bandwidth schedule h = n^-xi
    #[arg(long)]
    xi: Option<f64>,
    /// epanechnikov, box1d or box2d
    #[arg(long)]
    kernel: Option<String>,
    /// none, uniform:<half-width> or gaussian:<sd>
    #[arg(long)]
    noise: Option<String>,
    /// Grid points per axis
    #[arg(long)]
    grid: Option<usize>,
    /// domain or support
    #[arg(long)]
    region: Option<String>,
    /// Sub-interval for the restricted metrics, as a,b
    #[arg(long, value_delimiter = ',', num_args = 2)]
    window: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    /// Output CSV (stdout if absent)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append wall times (makes the output run-dependent)
    #[arg(long)]
    timings: bool,
}

impl RunArgs {
    fn flags(&self) -> ConfigFile {
        ConfigFile {
            label: self.label.clone(),
            system: self.system.clone(),
            n: self.n,
            h: self.h,
            xi: self.xi,
            kernel: self.kernel.clone(),
            noise: self.noise.clone(),
            grid: self.grid,
            region: self.region.clone(),
            window: self.window.as_ref().map(|w| [w[0], w[1]]),
            seed: self.seed,
            replications: self.replications,
            burnin: self.burnin,
            out: self.out.clone(),
        }
    }

    fn merged(&self) -> Result<ConfigFile> {
        let base = match &self.config {
            Some(path) => ConfigFile::load(path).with_context(|| format!("reading {}", path.display()))?,
            None => ConfigFile::default(),
        };
        Ok(base.overlay(&self.flags()))
    }
}

#[derive(Args)]
struct CoverageArgs {
    /// Defaults to the uniform-density beta-map at n = 2000
    #[arg(long)]
    system: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    kernel: Option<String>,
    #[arg(long)]
    noise: Option<String>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    replications: Option<usize>,
    /// Evaluation point
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// geometric:C,gamma or explicit:p0,p1,...
    #[arg(long)]
    model: Option<MixingModel>,
    /// a:b:steps
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    /// geometric:C,gamma or explicit:p0,p1,...
    #[arg(long)]
    model: MixingModel,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    h: f64,
    /// Kernel scaling exponent
    #[arg(long)]
    beta: f64,
    /// Kernel semi-norm constant C(K)
    #[arg(long = "cK")]
    c_k: f64,
    /// a:b:steps
    #[arg(long)]
    t_grid: String,
    /// Bias threshold; the bound is vacuous for t <= u^alpha
    #[arg(long)]
    u: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Diameter of the kernel support
    #[arg(long, default_value_t = 2.0)]
    diameter: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Target {
    Density,
    Map,
}

#[derive(Args)]
struct RegularityArgs {
    #[arg(long)]
    system: SystemSpec,
    #[arg(long, value_enum, default_value_t = Target::Density)]
    target: Target,
    #[arg(long)]
    u: f64,
    /// Oscillation radius
    #[arg(long)]
    h: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Scan cell size (h/16 if absent)
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn parse_t_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, steps] = parts[..] else {
        bail!("t-grid must look like a:b:steps, got {text:?}");
    };
    let (a, b): (f64, f64) = (a.trim().parse()?, b.trim().parse()?);
    let steps: usize = steps.trim().parse()?;
    if steps == 0 || !(a.is_finite() && b.is_finite()) || b < a {
        bail!("t-grid needs finite a <= b and steps >= 1, got {text:?}");
    }
    Ok(linspace(a, b, steps))
}

fn estimate(run: &RunArgs) -> Result<()> {
    let cfg = run.merged()?;
    let spec = cfg.to_spec()?;
    let rep = run_replication(&spec, 0)?;
    log::info!(
        "{}: {} points in {:.2}s",
        spec.label,
        rep.estimates.points.len(),
        rep.seconds
    );
    let mut out = sink(cfg.out.as_deref())?;
    write_estimates_csv(&mut out, &spec, &rep.estimates)?;
    out.flush()?;
    Ok(())
}

fn table(file: &Path, run: &RunArgs) -> Result<()> {
    let table = TableFile::load(file).with_context(|| format!("reading {}", file.display()))?;
    let overrides = run.merged()?;
    let specs = table.to_specs(&overrides)?;
    let rows = run_table(&specs);
    for row in rows.iter().filter(|r| r.error.is_some()) {
        log::warn!(
            "row {} ({}): {}",
            row.index,
            row.spec.label,
            row.error.as_deref().unwrap_or_default()
        );
    }
    let mut out = sink(overrides.out.as_deref())?;
    write_rows_csv(&mut out, &specs, &rows, run.timings)?;
    out.flush()?;
    Ok(())
}

fn sweep(run: &RunArgs, n_list: &[usize]) -> Result<()> {
    let mut cfg = run.merged()?;
    let xi = cfg.xi.take().context("sweep needs --xi")?;
    // The base spec is validated with a placeholder size and bandwidth; the
    // sweep sets both per point.
    cfg.n = cfg.n.or(n_list.first().copied());
    cfg.h = Some(0.1);
    let base = cfg.to_spec()?;
    let report = convergence_sweep(&base, n_list, xi, None)?;
    log::info!("slope {:.4}", report.slope);
    let mut out = sink(cfg.out.as_deref())?;
    write_sweep_csv(&mut out, &base, &report)?;
    out.flush()?;
    Ok(())
}

fn coverage(args: &CoverageArgs) -> Result<()> {
    let mut spec = CoverageSpec::standard(args.seed);
    let base = &mut spec.base;
    if let Some(s) = &args.system {
        base.system = s.parse()?;
    }
    if let Some(n) = args.n {
        base.n = n;
    }
    if let Some(h) = args.h {
        base.bandwidth = dynest_core::experiments::BandwidthSpec::Fixed(h);
    }
    if let Some(k) = &args.kernel {
        base.kernel = k.parse()?;
    }
    if let Some(noise) = &args.noise {
        base.noise = noise.parse()?;
    }
    if let Some(r) = args.replications {
        base.replications = r;
    }
    spec.x = args.x.unwrap_or(spec.x);
    spec.u = args.u.unwrap_or(spec.u);
    spec.alpha = args.alpha.unwrap_or(spec.alpha);
    if let Some(m) = &args.model {
        spec.model = m.clone();
    }
    match &args.t_grid {
        Some(text) => spec.t_grid = parse_t_grid(text)?,
        None => spec.t_grid = linspace(spec.u, 15.0, 20),
    }
    let report = coverage_study(&spec)?;
    if !report.all_pass() {
        log::warn!("empirical frequency above the envelope at some t");
    }
    let mut out = sink(args.out.as_deref())?;
    write_coverage_csv(&mut out, &spec, &report)?;
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoundsSpec<'a> {
    model: String,
    n: usize,
    h: f64,
    beta: f64,
    c_k: f64,
    u: Option<f64>,
    alpha: f64,
    diameter: f64,
    t_grid: &'a str,
}

fn bounds(args: &BoundsArgs) -> Result<()> {
    let ts = parse_t_grid(&args.t_grid)?;
    let mut params = BoundParams::new(args.n, args.h, args.beta, args.c_k, ts[0]);
    params.u = args.u;
    params.alpha = args.alpha;
    params.kernel_diameter = args.diameter;
    let mut out = sink(args.out.as_deref())?;
    let spec = BoundsSpec {
        model: args.model.to_string(),
        n: args.n,
        h: args.h,
        beta: args.beta,
        c_k: args.c_k,
        u: args.u,
        alpha: args.alpha,
        diameter: args.diameter,
        t_grid: &args.t_grid,
    };
    writeln!(out, "{SPEC_PREFIX}{}", serde_json::to_string(&spec)?)?;
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(["t", "raw_bound", "clipped_bound"])?;
    for t in ts {
        params.t = t;
        let env = density_deviation_envelope(&params, &args.model)?;
        w.write_record([t.to_string(), env.bound.raw.to_string(), env.bound.clipped.to_string()])?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct RegularitySpec {
    system: String,
    target: Target,
    u: f64,
    h: f64,
    alpha: f64,
    resolution: f64,
}

fn regularity(args: &RegularityArgs) -> Result<()> {
    let sys = args.system.build()?;
    let res = args.resolution.unwrap_or(args.h / 16.0);
    let (lo, hi) = (&sys.domain.lower, &sys.domain.upper);
    let report: BadSetReport = match (args.target, sys.dimension()) {
        (Target::Density, 1) => {
            let f = sys
                .density
                .as_ref()
                .with_context(|| format!("no density oracle for {}", sys.id()))?;
            oscillation_bad_set(|x| f.eval(x), lo[0], hi[0], args.u, args.h, args.alpha, res)?
        }
        (Target::Map, 1) => {
            oscillation_bad_set(|x| sys.map.apply_1d(x), lo[0], hi[0], args.u, args.h, args.alpha, res)?
        }
        (Target::Map, _) => oscillation_bad_set_2d(|x| sys.apply(x), &sys.domain, args.u, args.h, args.alpha, res)?,
        (Target::Density, _) => bail!("no density oracle for {}", sys.id()),
    };
    log::info!(
        "{} components, measure {:.6} (+/- {:.2e})",
        report.components.len(),
        report.measure_estimate,
        report.measure_slack()
    );
    let mut out = sink(args.out.as_deref())?;
    let spec = RegularitySpec {
        system: sys.id(),
        target: args.target,
        u: args.u,
        h: args.h,
        alpha: args.alpha,
        resolution: res,
    };
    writeln!(out, "{SPEC_PREFIX}{}", serde_json::to_string(&spec)?)?;
    let d = sys.dimension();
    let axes = ["x", "y"];
    let mut w = csv::Writer::from_writer(&mut out);
    let mut header = vec!["component".to_string()];
    for a in &axes[..d] {
        header.push(format!("lower_{a}"));
        header.push(format!("upper_{a}"));
    }
    w.write_record(&header)?;
    for (i, c) in report.components.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        for j in 0..d {
            rec.push(c.lower[j].to_string());
            rec.push(c.upper[j].to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    drop(w);
    out.flush()?;
    Ok(())
}

fn paper_suite(seed: u64, path: Option<&Path>, histograms: Option<&Path>, timings: bool) -> Result<bool> {
    let report = reproduce_paper_suite(seed);
    let mut out = sink(path)?;
    write_suite_csv(&mut out, &report, timings)?;
    out.flush()?;
    if let Some(p) = histograms {
        let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
        write_histogram_csv(BufWriter::new(file), &report.histograms)?;
    }
    let failures = report.gate_failures();
    for c in &failures {
        log::error!(
            "{} {}: ours {:?}, accepted [{}, {}]{}",
            c.id,
            c.target.metric.as_str(),
            c.ours,
            c.target.lower,
            c.target.upper,
            c.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
        );
    }
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Estimate(run) => estimate(run).map(|_| true),
        Command::Table { file, run } => table(file, run).map(|_| true),
        Command::Sweep { run, n_list } => sweep(run, n_list).map(|_| true),
        Command::Coverage(args) => coverage(args).map(|_| true),
        Command::Bounds(args) => bounds(args).map(|_| true),
        Command::Regularity(args) => regularity(args).map(|_| true),
        Command::PaperSuite {
            seed,
            out,
            histograms,
            timings,
        } => paper_suite(*seed, out.as_deref(), histograms.as_deref(), *timings),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            log::error!("{e:#}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_grid_parsing() {
        let ts = parse_t_grid("0.1:1.1:6").unwrap();
        assert_eq!(ts.len(), 6);
        assert_eq!(ts[0], 0.1);
        assert_eq!(ts[5], 1.1);
        assert!(parse_t_grid("1:0:3").is_err());
        assert!(parse_t_grid("0:1").is_err());
        assert!(parse_t_grid("0:1:0").is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
