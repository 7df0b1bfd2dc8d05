//! CSV emission. Every file starts with a `# spec: <json>` line carrying what
//! produced it, then a header row. Numbers use the shortest representation
//! that parses back to the same `f64`. Wall times are only written on
//! request, so that reruns give identical bytes.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{CoverageReport, CoverageSpec, ExperimentSpec, ResultRow, SuiteReport, SweepReport};
use crate::error::{Error, Result};
use crate::estimators::EstimateGrid;

pub const SPEC_PREFIX: &str = "# spec: ";

fn spec_line<W: Write, S: Serialize + ?Sized>(out: &mut W, spec: &S) -> Result<()> {
    let json = serde_json::to_string(spec).map_err(|e| Error::invalid("spec", e.to_string()))?;
    writeln!(out, "{SPEC_PREFIX}{json}")?;
    Ok(())
}

/// Parses the spec line at the top of an emitted file.
pub fn read_spec_line<T: DeserializeOwned, R: BufRead>(mut input: R) -> Result<T> {
    let mut line = String::new();
    input.read_line(&mut line)?;
    let json = line
        .trim_end()
        .strip_prefix(SPEC_PREFIX)
        .ok_or_else(|| Error::parse("spec line", line.trim_end(), "missing `# spec:` prefix"))?;
    serde_json::from_str(json).map_err(|e| Error::parse("spec line", json, e.to_string()))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_rows_csv<W: Write>(mut out: W, specs: &[ExperimentSpec], rows: &[ResultRow], timings: bool) -> Result<()> {
    spec_line(&mut out, specs)?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "index",
        "label",
        "system",
        "n",
        "h",
        "kernel",
        "noise",
        "grid_points",
        "replications",
        "seed",
        "n_used",
        "amef",
        "amet_x",
        "amet_y",
        "amet_sup",
        "amef_window",
        "amet_window",
        "empty_cells",
        "status",
    ];
    if timings {
        header.push("seconds");
    }
    w.write_record(&header)?;
    for row in rows {
        let s = &row.spec;
        let mut rec = vec![
            row.index.to_string(),
            s.label.clone(),
            s.system.to_string(),
            s.n.to_string(),
            row.h.to_string(),
            s.kernel.to_string(),
            s.noise.to_string(),
            row.grid_points.to_string(),
            s.replications.to_string(),
            s.seed.to_string(),
        ];
        match &row.metrics {
            Some(m) => rec.extend([
                m.n_used.to_string(),
                opt(m.amef),
                opt(m.amet.first().copied()),
                opt(m.amet.get(1).copied()),
                m.amet_sup.to_string(),
                opt(m.amef_window),
                opt(m.amet_window),
                m.empty_cells.to_string(),
                "ok".into(),
            ]),
            None => {
                rec.extend(std::iter::repeat_n(String::new(), 8));
                rec.push(format!("error: {}", row.error.as_deref().unwrap_or("unknown")));
            }
        }
        if timings {
            rec.push(format!("{:.3}", row.seconds));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// One row per grid point: coordinates, `f_hat`, `f`, then `T_hat` and `T`
/// per coordinate. Unknown truths are left empty.
pub fn write_estimates_csv<W: Write>(mut out: W, spec: &ExperimentSpec, est: &EstimateGrid) -> Result<()> {
    spec_line(&mut out, spec)?;
    let d = est.points.dimension();
    let mut w = csv::Writer::from_writer(out);
    let axes = ["x", "y"];
    let mut header: Vec<String> = axes[..d].iter().map(|a| a.to_string()).collect();
    header.extend(["f_hat".into(), "f_true".into()]);
    header.extend(axes[..d].iter().map(|a| format!("t_hat_{a}")));
    header.extend(axes[..d].iter().map(|a| format!("t_true_{a}")));
    w.write_record(&header)?;
    let block = |v: &Option<Vec<f64>>, k: usize| -> Vec<String> {
        match v {
            Some(v) => v[k * d..(k + 1) * d].iter().map(f64::to_string).collect(),
            None => vec![String::new(); d],
        }
    };
    for k in 0..est.points.len() {
        let mut rec: Vec<String> = est.points.point(k).iter().map(f64::to_string).collect();
        rec.push(est.f_hat[k].to_string());
        rec.push(opt(est.f_true.as_ref().map(|f| f[k])));
        rec.extend(block(&est.t_hat, k));
        rec.extend(block(&est.t_true, k));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SweepSpec<'a> {
    base: &'a ExperimentSpec,
    n_list: Vec<usize>,
    xi: f64,
}

/// Per-size rows, then a final `fit` row with the slope and intercept.
pub fn write_sweep_csv<W: Write>(mut out: W, base: &ExperimentSpec, report: &SweepReport) -> Result<()> {
    let spec = SweepSpec {
        base,
        n_list: report.points.iter().map(|p| p.n).collect(),
        xi: report.xi,
    };
    spec_line(&mut out, &spec)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "h", "mean", "sd", "min", "max", "values"])?;
    for p in &report.points {
        let values: Vec<String> = p.values.iter().map(f64::to_string).collect();
        w.write_record([
            p.n.to_string(),
            p.h.to_string(),
            p.mean.to_string(),
            p.sd.to_string(),
            p.min.to_string(),
            p.max.to_string(),
            values.join(" "),
        ])?;
    }
    w.write_record([
        "fit".to_string(),
        String::new(),
        String::new(),
        String::new(),
        String::new(),
        format!("slope={}", report.slope),
        format!("intercept={}", report.intercept),
    ])?;
    w.flush()?;
    Ok(())
}

pub fn write_coverage_csv<W: Write>(mut out: W, spec: &CoverageSpec, report: &CoverageReport) -> Result<()> {
    spec_line(&mut out, spec)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "exceedances", "frequency", "envelope_raw", "envelope", "pass"])?;
    for r in &report.rows {
        w.write_record([
            r.t.to_string(),
            r.exceedances.to_string(),
            r.frequency.to_string(),
            r.envelope_raw.to_string(),
            r.envelope.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct SuiteSpec<'a> {
    seed: u64,
    entries: Vec<&'a str>,
}

pub fn write_suite_csv<W: Write>(mut out: W, report: &SuiteReport, timings: bool) -> Result<()> {
    let mut ids: Vec<&str> = report.checks.iter().map(|c| c.id.as_str()).collect();
    ids.dedup();
    spec_line(
        &mut out,
        &SuiteSpec {
            seed: report.seed,
            entries: ids,
        },
    )?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        "id", "metric", "paper", "ours", "ratio", "lower", "upper", "gate", "pass",
    ];
    if timings {
        header.push("seconds");
    }
    w.write_record(&header)?;
    for c in &report.checks {
        let mut rec = vec![
            c.id.clone(),
            c.target.metric.as_str().into(),
            c.target.paper.to_string(),
            opt(c.ours),
            opt(c.ratio()),
            c.target.lower.to_string(),
            c.target.upper.to_string(),
            c.target.gate.to_string(),
            c.pass.to_string(),
        ];
        if timings {
            rec.push(format!("{:.3}", c.seconds));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
