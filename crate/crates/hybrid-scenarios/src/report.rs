//! Run results and their on-disk layout.
//!
//! Files written by [`RunReport::write`] (all CSV cells use 17 significant digits):
//!
//! | file | columns |
//! |------|---------|
//! | `fields_<k>_<subdomain>.csv` | `time,x,y,<one column per quantity>` |
//! | `errors.csv`, `metrics.csv` | `quantity,value` |
//! | `h_trace.csv` | `step,h` |
//! | `traces.csv` | `series,time,value` |
//! | `counters.csv` | `counter,value` |
//! | `summary.txt` | free text, includes wall time (not part of the determinism guarantee) |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::output::{csv_text, fmt17, write_file, LinePlot, Series};

/// Nodal values of one subdomain at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub subdomain: String,
    pub points: Vec<[f64; 2]>,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl FieldSnapshot {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub fields: Vec<FieldSnapshot>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunReport {
    pub scenario: String,
    pub samples: Vec<Sample>,
    pub errors: BTreeMap<String, f64>,
    pub metrics: BTreeMap<String, f64>,
    pub h_trace: Vec<f64>,
    pub traces: BTreeMap<String, Vec<(f64, f64)>>,
    pub counters: BTreeMap<String, u64>,
    pub wall_time: f64,
    pub files: Vec<PathBuf>,
}

impl RunReport {
    pub fn new(scenario: &str) -> Self {
        RunReport { scenario: scenario.into(), ..Default::default() }
    }

    pub fn error(&self, key: &str) -> Option<f64> {
        self.errors.get(key).copied()
    }

    pub fn metric(&self, key: &str) -> Option<f64> {
        self.metrics.get(key).copied()
    }

    pub fn sample(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().find(|s| (s.time - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    pub fn push_trace(&mut self, series: &str, t: f64, v: f64) {
        self.traces.entry(series.to_string()).or_default().push((t, v));
    }

    /// CSV files keyed by file name, in a fixed order.
    pub fn csv_files(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (k, s) in self.samples.iter().enumerate() {
            for f in &s.fields {
                let mut header = vec!["time", "x", "y"];
                header.extend(f.columns.iter().map(|(n, _)| n.as_str()));
                let rows: Vec<Vec<String>> = f
                    .points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let mut r = vec![fmt17(s.time), fmt17(p[0]), fmt17(p[1])];
                        r.extend(f.columns.iter().map(|(_, c)| fmt17(c[i])));
                        r
                    })
                    .collect();
                out.push((format!("fields_{k:03}_{}.csv", f.subdomain), csv_text(&header, &rows)));
            }
        }
        let kv = |m: &BTreeMap<String, f64>| -> Vec<Vec<String>> { m.iter().map(|(k, v)| vec![k.clone(), fmt17(*v)]).collect() };
        out.push(("errors.csv".into(), csv_text(&["quantity", "value"], &kv(&self.errors))));
        out.push(("metrics.csv".into(), csv_text(&["quantity", "value"], &kv(&self.metrics))));
        if !self.h_trace.is_empty() {
            let rows: Vec<Vec<String>> = self.h_trace.iter().enumerate().map(|(k, h)| vec![k.to_string(), fmt17(*h)]).collect();
            out.push(("h_trace.csv".into(), csv_text(&["step", "h"], &rows)));
        }
        let rows: Vec<Vec<String>> = self
            .traces
            .iter()
            .flat_map(|(n, pts)| pts.iter().map(move |(t, v)| vec![n.clone(), fmt17(*t), fmt17(*v)]))
            .collect();
        out.push(("traces.csv".into(), csv_text(&["series", "time", "value"], &rows)));
        let rows: Vec<Vec<String>> = self.counters.iter().map(|(k, v)| vec![k.clone(), v.to_string()]).collect();
        out.push(("counters.csv".into(), csv_text(&["counter", "value"], &rows)));
        out
    }

    /// SVG plots: 1D profiles per sample, the H trace and every time trace.
    pub fn plots(&self) -> Vec<(String, LinePlot)> {
        let mut out = Vec::new();
        for (k, s) in self.samples.iter().enumerate() {
            let one_d = s.fields.iter().all(|f| f.points.iter().all(|p| p[1] == 0.0));
            if !one_d || s.fields.is_empty() {
                continue;
            }
            let names: Vec<&String> = s.fields[0].columns.iter().map(|(n, _)| n).collect();
            for name in names {
                let mut plot = LinePlot::new(&format!("{name} at t = {}", s.time), "x", name);
                for f in &s.fields {
                    if let Some(c) = f.column(name) {
                        plot = plot.with_series(Series::new(f.subdomain.clone(), f.points.iter().map(|p| p[0]).zip(c.iter().copied()).collect()));
                    }
                }
                out.push((format!("profile_{k:03}_{name}.svg"), plot));
            }
        }
        if !self.h_trace.is_empty() {
            let pts = self.h_trace.iter().enumerate().map(|(k, h)| (k as f64, *h)).collect();
            out.push(("h_trace.svg".into(), LinePlot::new("H function", "step", "H").with_series(Series::new("H", pts))));
        }
        for (name, pts) in &self.traces {
            let file = format!("trace_{}.svg", name.replace(|c: char| !c.is_ascii_alphanumeric() && c != '-', "_"));
            out.push((file, LinePlot::new(name, "t", name).with_series(Series::new(name.clone(), pts.clone()))));
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = format!("scenario {}\nwall_time_s {:.3}\n", self.scenario, self.wall_time);
        for (k, v) in &self.errors {
            s.push_str(&format!("error {k} {v:e}\n"));
        }
        for (k, v) in &self.metrics {
            s.push_str(&format!("metric {k} {v:e}\n"));
        }
        for (k, v) in &self.counters {
            s.push_str(&format!("counter {k} {v}\n"));
        }
        s
    }

    /// Writes CSVs (and SVGs when `plots`) into `dir`.
    pub fn write(&mut self, dir: &Path, fields: bool, plots: bool) -> Result<()> {
        let mut written = Vec::new();
        for (name, text) in self.csv_files() {
            if !fields && name.starts_with("fields_") {
                continue;
            }
            let p = dir.join(&name);
            write_file(&p, &text)?;
            written.push(p);
        }
        if plots {
            for (name, plot) in self.plots() {
                let p = dir.join(&name);
                write_file(&p, &plot.to_svg())?;
                written.push(p);
            }
        }
        let p = dir.join("summary.txt");
        write_file(&p, &self.summary())?;
        written.push(p);
        self.files = written;
        Ok(())
    }
}
