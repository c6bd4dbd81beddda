use std::fs;
use std::path::{Path, PathBuf};

use ambc::montecarlo::{BerCurve, CurveSource};
use serde::{Deserialize, Serialize};

use crate::args::{Format, RunSpec};
use crate::CliError;

/// First line of every data file.
pub const SCHEMA: &str = "ambc-ber v1";

/// One output row. Analytic rows carry zero slots and counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub scheme: String,
    pub axis: String,
    pub value: f64,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "P")]
    pub p: usize,
    pub alpha2: f64,
    pub snr_db: f64,
    pub niter: usize,
    pub slots: u64,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
    pub stderr: f64,
    pub runtime_ms: u64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct JsonDoc {
    pub schema: String,
    pub rows: Vec<Row>,
}

pub fn rows(curve: &BerCurve) -> Result<Vec<Row>, CliError> {
    let simulated = matches!(curve.source, CurveSource::Simulated(_));
    curve
        .points
        .iter()
        .map(|pt| {
            let p = curve
                .params_snapshot
                .with_axis(curve.axis, pt.swept_value)
                .map_err(|e| CliError::Run(e.to_string()))?;
            Ok(Row {
                scheme: curve.source.name().to_string(),
                axis: curve.axis.name().to_string(),
                value: pt.swept_value,
                l: p.subcarriers,
                m: p.symbols_per_slot,
                p: p.taps,
                alpha2: p.alpha_sq,
                snr_db: p.snr_db,
                niter: p.em.n_iter_max,
                slots: if simulated { p.slots } else { 0 },
                bit_errors: pt.bit_errors,
                total_bits: pt.total_bits,
                ber: pt.ber,
                stderr: pt.stderr,
                runtime_ms: pt.runtime_ms,
            })
        })
        .collect()
}

pub fn render(rows: &[Row], format: Format) -> Result<String, CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r).map_err(|e| CliError::Run(e.to_string()))?;
            }
            if rows.is_empty() {
                w.write_record([
                    "scheme", "axis", "value", "L", "M", "P", "alpha2", "snr_db", "niter", "slots",
                    "bit_errors", "total_bits", "ber", "stderr", "runtime_ms",
                ])
                .map_err(|e| CliError::Run(e.to_string()))?;
            }
            let body = w.into_inner().map_err(|e| CliError::Run(e.to_string()))?;
            Ok(format!("# {SCHEMA}\n{}", String::from_utf8_lossy(&body)))
        }
        Format::Json => {
            let doc = JsonDoc {
                schema: SCHEMA.to_string(),
                rows: rows.to_vec(),
            };
            let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Run(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

/// Reads back a file written by [`write_results`].
pub fn parse(text: &str, format: Format) -> Result<Vec<Row>, CliError> {
    let bad = |e: String| CliError::Run(format!("malformed results: {e}"));
    match format {
        Format::Csv => {
            let body = text
                .strip_prefix(&format!("# {SCHEMA}\n"))
                .ok_or_else(|| bad("missing schema line".into()))?;
            csv::Reader::from_reader(body.as_bytes())
                .deserialize()
                .collect::<Result<_, _>>()
                .map_err(|e| bad(e.to_string()))
        }
        Format::Json => {
            let doc: JsonDoc = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
            if doc.schema != SCHEMA {
                return Err(bad(format!("schema `{}`", doc.schema)));
            }
            Ok(doc.rows)
        }
    }
}

pub fn plot_script_path(out: &Path) -> PathBuf {
    out.with_extension("plot.py")
}

pub fn plot_script(data_file: &str, format: Format) -> String {
    let fmt = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    format!(
        r##"#!/usr/bin/env python3
# BER curves from {data_file}
import csv, json, os
from collections import defaultdict
import matplotlib.pyplot as plt

path = os.path.join(os.path.dirname(os.path.abspath(__file__)), "{data_file}")
with open(path) as f:
    if "{fmt}" == "json":
        rows = json.load(f)["rows"]
    else:
        rows = list(csv.DictReader(line for line in f if not line.startswith("#")))

panels = defaultdict(lambda: defaultdict(list))
for r in rows:
    key = r["axis"] if r["axis"] == "snr_db" else "%s @ %s dB" % (r["axis"], r["snr_db"])
    panels[key][r["scheme"]].append((float(r["value"]), float(r["ber"])))

fig, axes = plt.subplots(1, len(panels), figsize=(5 * len(panels), 4), squeeze=False)
for ax, (key, curves) in zip(axes[0], panels.items()):
    for scheme, pts in curves.items():
        pts.sort()
        xs = [p[0] for p in pts]
        ys = [p[1] if p[1] > 0 else float("nan") for p in pts]
        style = "--" if scheme.startswith("ANALYTIC") else "-o"
        ax.semilogy(xs, ys, style, label=scheme)
    ax.set_xlabel(key)
    ax.set_ylabel("BER")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
fig.tight_layout()
fig.savefig(os.path.splitext(path)[0] + ".png", dpi=150)
"##
    )
}

/// Writes the data file and, if requested, the plot script; returns the paths.
pub fn write_results(curves: &[BerCurve], spec: &RunSpec) -> Result<Vec<PathBuf>, CliError> {
    if curves.is_empty() {
        return Err(CliError::Run("no curves to write".into()));
    }
    let mut all = Vec::new();
    for c in curves {
        all.extend(rows(c)?);
    }
    let io = |path: &Path, e: std::io::Error| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    fs::write(&spec.out, render(&all, spec.format)?).map_err(|e| io(&spec.out, e))?;
    let mut written = vec![spec.out.clone()];
    if spec.emit_plot_script {
        let script = plot_script_path(&spec.out);
        let name = spec
            .out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        fs::write(&script, plot_script(&name, spec.format)).map_err(|e| io(&script, e))?;
        written.push(script);
    }
    Ok(written)
}
