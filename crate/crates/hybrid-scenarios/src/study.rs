//! Refinement studies and fitted convergence orders.

use std::path::Path;

use crate::config::{ScenarioConfig, StudySpec};
use crate::error::{Result, ScenarioError};
use crate::output::{csv_text, fmt17, write_file, LinePlot, Series};
use crate::report::RunReport;

/// Least-squares slope of `log e` against `log h`; `None` below two usable levels.
pub fn fit_order(h: &[f64], e: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h.iter().zip(e).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderReport {
    pub name: String,
    pub metric: String,
    pub abscissa: String,
    pub levels: Vec<(f64, f64)>,
    pub order: Option<f64>,
    pub reports: Vec<RunReport>,
}

impl OrderReport {
    pub fn errors(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.1).collect()
    }

    /// Level table: abscissa, fitted metric, then every other reported error.
    pub fn csv(&self) -> String {
        let extra: Vec<String> = self
            .reports
            .first()
            .map(|r| r.errors.keys().filter(|k| **k != self.metric).cloned().collect())
            .unwrap_or_default();
        let mut rows: Vec<Vec<String>> = self
            .levels
            .iter()
            .enumerate()
            .map(|(k, (h, e))| {
                let mut row = vec![k.to_string(), fmt17(*h), fmt17(*e)];
                row.extend(extra.iter().map(|x| self.reports.get(k).and_then(|r| r.error(x)).map(fmt17).unwrap_or_default()));
                row
            })
            .collect();
        let mut last = vec!["order".into(), String::new(), self.order.map(fmt17).unwrap_or_default()];
        last.extend(extra.iter().map(|_| String::new()));
        rows.push(last);
        let mut header = vec!["level", self.abscissa.as_str(), self.metric.as_str()];
        header.extend(extra.iter().map(String::as_str));
        csv_text(&header, &rows)
    }

    pub fn plot(&self) -> LinePlot {
        LinePlot {
            reference_slope: self.order.map(|o| (o * 100.0).round() / 100.0),
            ..LinePlot::new(&self.name, &self.abscissa, &self.metric).log_log().with_series(Series::new(self.metric.clone(), self.levels.clone()))
        }
    }

    pub fn write(&self, dir: &Path, plots: bool) -> Result<()> {
        write_file(&dir.join(format!("study_{}.csv", self.name)), &self.csv())?;
        if plots {
            write_file(&dir.join(format!("study_{}.svg", self.name)), &self.plot().to_svg())?;
        }
        Ok(())
    }
}

/// Runs every level of `spec` on top of `base`.
pub fn convergence_study(base: &ScenarioConfig, spec: &StudySpec) -> Result<OrderReport> {
    let mut levels = Vec::new();
    let mut reports = Vec::new();
    for (k, over) in spec.levels.iter().enumerate() {
        let cfg = base.with_overrides(over)?;
        cfg.check()?;
        let h = cfg_value(&cfg, &spec.abscissa)?;
        log::info!("study {} level {k}: {} = {h}", spec.name, spec.abscissa);
        let report = crate::run(&cfg, None)?;
        let e = report.error(&spec.metric).ok_or_else(|| {
            ScenarioError::Invalid(vec![format!("study '{}': scenario reports no error '{}'", spec.name, spec.metric)])
        })?;
        levels.push((h, e));
        reports.push(report);
    }
    let (h, e): (Vec<f64>, Vec<f64>) = levels.iter().copied().unzip();
    Ok(OrderReport {
        name: spec.name.clone(),
        metric: spec.metric.clone(),
        abscissa: spec.abscissa.clone(),
        order: fit_order(&h, &e),
        levels,
        reports,
    })
}

/// Runs the named study of `base`.
pub fn named_study(base: &ScenarioConfig, name: &str) -> Result<OrderReport> {
    let spec = base
        .study
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| ScenarioError::Invalid(vec![format!("scenario '{}' has no study '{name}'", base.scenario.name)]))?;
    convergence_study(base, spec)
}

fn cfg_value(cfg: &ScenarioConfig, key: &str) -> Result<f64> {
    let t = cfg.to_table()?;
    let mut cur = &toml::Value::Table(t);
    for p in key.split('.') {
        cur = cur.get(p).ok_or_else(|| ScenarioError::Invalid(vec![format!("no config key '{key}'")]))?;
    }
    cur.as_float()
        .or_else(|| cur.as_integer().map(|i| i as f64))
        .ok_or_else(|| ScenarioError::Invalid(vec![format!("config key '{key}' is not numeric")]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let h = [0.1, 0.05, 0.025];
        let e: Vec<f64> = h.iter().map(|x: &f64| 3.0 * x.powi(2)).collect();
        assert!((fit_order(&h, &e).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn single_level_has_no_order() {
        assert_eq!(fit_order(&[0.1], &[1e-3]), None);
        assert_eq!(fit_order(&[0.1, 0.1], &[1e-3, 2e-3]), None);
    }

    #[test]
    fn single_level_study_reports_error_only() {
        let base = ScenarioConfig::builtin("lbm-dirichlet-neumann", &[]).unwrap();
        let mut spec = base.study[0].clone();
        spec.levels.truncate(1);
        let r = convergence_study(&base, &spec).unwrap();
        assert_eq!(r.levels.len(), 1);
        assert_eq!(r.order, None);
        assert!(r.csv().lines().last().unwrap().ends_with(",,"));
    }
}
