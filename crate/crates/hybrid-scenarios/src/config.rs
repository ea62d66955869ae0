//! Scenario configuration.
//!
//! Files use `[section]` headers with `key = value` lines (TOML). A file
//! only needs `[scenario] name = ...`; every other key defaults to the
//! built-in configuration of that scenario, and explicit keys replace the
//! defaults (arrays are replaced whole).

use std::collections::BTreeMap;
use std::str::FromStr;

use hybrid_core::fem::Formulation;
use hybrid_core::lattice::{builtin_model, ModelName};
use hybrid_core::lbm::min_admissible_dt;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScenarioError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub domain: DomainSection,
    #[serde(default)]
    pub discretization: Discretization,
    #[serde(default)]
    pub physics: PhysicsSection,
    #[serde(default)]
    pub initial: InitialSection,
    #[serde(default)]
    pub chemistry: ChemistrySection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub study: Vec<StudySpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: String,
    #[serde(default)]
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SubdomainKind {
    #[default]
    Coarse,
    Fine,
}

/// Global box and its partition along x.
///
/// Subdomain `k` spans `(splits[k-1] - overlap/2, splits[k] + overlap/2)`
/// clipped to the box; kinds alternate starting from `first`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomainSection {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub periodic: Vec<bool>,
    pub splits: Vec<f64>,
    pub first: SubdomainKind,
    /// Solid discs `[cx, cy, r]` inside fine subdomains.
    pub obstacles: Vec<[f64; 3]>,
}

impl Default for DomainSection {
    fn default() -> Self {
        DomainSection {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
            periodic: vec![false, false],
            splits: Vec::new(),
            first: SubdomainKind::Coarse,
            obstacles: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Discretization {
    pub h_c: f64,
    pub dt_c: f64,
    pub h_f: f64,
    pub dt_f: f64,
    pub eta: usize,
    pub overlap: f64,
    pub max_iter: usize,
    pub theta: f64,
    pub order: usize,
    pub lattice: String,
    pub formulation: String,
}

impl Default for Discretization {
    fn default() -> Self {
        Discretization {
            h_c: 0.1,
            dt_c: 0.01,
            h_f: 0.01,
            dt_f: 0.01,
            eta: 1,
            overlap: 0.0,
            max_iter: 1,
            theta: 0.5,
            order: 1,
            lattice: "D2Q9".into(),
            formulation: "galerkin".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsSection {
    pub diffusivity: f64,
    pub velocity: [f64; 2],
    pub source: f64,
    /// Face name (`x-min`, `x-max`, `y-min`, `y-max`) to `zero-flux`,
    /// `dirichlet:<value>` or `neumann:<flux>`. Missing faces are zero-flux.
    pub boundaries: BTreeMap<String, String>,
    /// Lattice closure used on zero-flux faces.
    pub wall: String,
    /// Optional velocity CSV (`x,y,vx,vy` rows) for fine subdomains.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub velocity_file: Option<String>,
}

impl Default for PhysicsSection {
    fn default() -> Self {
        PhysicsSection {
            diffusivity: 1e-2,
            velocity: [0.0, 0.0],
            source: 0.0,
            boundaries: BTreeMap::new(),
            wall: "entropy-neumann".into(),
            velocity_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub species: Vec<InitialSpec>,
}

/// Initial profile of one species.
///
/// Kinds: `zero`, `uniform` (`value`), `gaussian` (`amplitude / sqrt(2 pi
/// sigma^2) exp(-|x - center|^2 / 2 sigma^2)`), `pulse` (`value` inside the
/// box `lo..hi`), `mode` (`amplitude sin(pi y) cos(pi x / 2)`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSpec {
    pub name: String,
    pub kind: String,
    pub value: f64,
    pub amplitude: f64,
    pub sigma: f64,
    pub center: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            name: "u".into(),
            kind: "zero".into(),
            value: 0.0,
            amplitude: 0.0,
            sigma: 1.0,
            center: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChemistrySection {
    /// `none`, `bimolecular` or `calcite`.
    pub kind: String,
    pub stoichiometry: [u32; 3],
    pub k_sp: f64,
    /// Inlet values of the transported invariants on Dirichlet faces.
    pub inlet: Vec<f64>,
}

impl Default for ChemistrySection {
    fn default() -> Self {
        ChemistrySection { kind: "none".into(), stoichiometry: [1, 1, 1], k_sp: hybrid_core::chemistry::CALCITE_KSP, inlet: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub fields: bool,
    pub plots: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { t_end: 0.0, sample_times: Vec::new(), fields: true, plots: true }
    }
}

/// A refinement schedule: each level applies its overrides to the base config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySpec {
    pub name: String,
    /// Report key of the error to fit (`E`, `E_c`, `E_f`, ...).
    pub metric: String,
    /// Dotted config key used as the refinement parameter.
    pub abscissa: String,
    pub levels: Vec<BTreeMap<String, toml::Value>>,
}

impl ScenarioConfig {
    /// Parses a config file, fills defaults from the named built-in and
    /// applies `key=value` overrides.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ScenarioError::Parse(e.to_string()))?;
        let mut over = toml::Table::new();
        for o in overrides {
            let (k, v) = split_override(o)?;
            set_path(&mut over, &k, v)?;
        }
        let name = lookup_name(&over).or_else(|| lookup_name(&table)).ok_or_else(|| {
            ScenarioError::Parse("missing `[scenario] name`".into())
        })?;
        let base = crate::scenarios::builtin_config(&name).ok_or(ScenarioError::UnknownScenario(name))?;
        let mut merged = base.to_table()?;
        merge(&mut merged, table);
        merge(&mut merged, over);
        Self::from_table(merged)
    }

    /// Built-in config of `name` with overrides applied.
    pub fn builtin(name: &str, overrides: &[String]) -> Result<Self> {
        Self::parse(&format!("[scenario]\nname = {}\n", toml::Value::String(name.into())), overrides)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_table(&self) -> Result<toml::Table> {
        toml::Table::try_from(self).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    /// Copy with dotted-key overrides applied on top.
    pub fn with_overrides(&self, overrides: &BTreeMap<String, toml::Value>) -> Result<Self> {
        let mut t = self.to_table()?;
        for (k, v) in overrides {
            set_path(&mut t, k, v.clone())?;
        }
        Self::from_table(t)
    }

    pub fn lattice(&self) -> std::result::Result<ModelName, String> {
        ModelName::from_str(&self.discretization.lattice).map_err(|e| e.to_string())
    }

    pub fn formulation(&self) -> std::result::Result<Formulation, String> {
        Formulation::from_str(&self.discretization.formulation).map_err(|e| e.to_string())
    }

    /// Spatial dimension implied by the lattice model.
    pub fn dim(&self) -> usize {
        self.lattice().map(|m| builtin_model(m).dim).unwrap_or(2)
    }

    /// Every problem found, in a stable order; empty when valid.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let d = &self.discretization;
        let info = crate::scenarios::info(&self.scenario.name);
        let Some(info) = info else {
            errs.push(format!("unknown scenario '{}'", self.scenario.name));
            return errs;
        };
        let model = match self.lattice() {
            Ok(m) => Some(m),
            Err(e) => {
                errs.push(format!("discretization.lattice: {e}"));
                None
            }
        };
        if let Err(e) = self.formulation() {
            errs.push(format!("discretization.formulation: {e}"));
        }
        let dim = self.dim();
        if self.domain.lo.len() < dim || self.domain.hi.len() < dim {
            errs.push(format!("domain.lo/hi need {dim} components"));
        } else {
            for a in 0..dim {
                if !(self.domain.hi[a] > self.domain.lo[a]) {
                    errs.push(format!("domain: hi[{a}] must exceed lo[{a}]"));
                }
            }
        }
        if self.domain.periodic.len() < dim {
            errs.push(format!("domain.periodic needs {dim} entries"));
        }
        let positive = [("h_c", d.h_c), ("dt_c", d.dt_c), ("h_f", d.h_f), ("dt_f", d.dt_f)];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                errs.push(format!("discretization.{k} must be positive, got {v}"));
            }
        }
        if !(self.physics.diffusivity > 0.0) {
            errs.push(format!("physics.diffusivity must be positive, got {}", self.physics.diffusivity));
        }
        if !(0.0..=1.0).contains(&d.theta) {
            errs.push(format!("discretization.theta must lie in [0, 1], got {}", d.theta));
        }
        if d.order == 0 || d.order > 4 {
            errs.push(format!("discretization.order must be 1..=4, got {}", d.order));
        }
        if info.uses_lbm {
            if let Some(m) = model {
                let lm = builtin_model(m);
                if let Ok(min) = min_admissible_dt(self.physics.diffusivity, lm.cs2_coeff, d.h_f) {
                    if d.dt_f < min * (1.0 - 1e-12) {
                        errs.push(format!(
                            "discretization.dt_f = {} is below the non-negativity bound {min} for {m} with h_f = {}",
                            d.dt_f, d.h_f
                        ));
                    }
                }
            }
            if let Some(m) = model {
                let lm = builtin_model(m);
                let cs = (lm.cs2_coeff.sqrt()) * d.h_f / d.dt_f;
                let v = self.physics.velocity[0].hypot(self.physics.velocity[1]);
                if v > 0.3 * cs {
                    errs.push(format!("physics.velocity: |v| = {v} exceeds 0.3 c_s = {} on the lattice", 0.3 * cs));
                }
            }
            if !matches!(self.physics.wall.as_str(), "entropy-neumann" | "bounce-back" | "specular") {
                errs.push(format!("physics.wall: unknown closure '{}'", self.physics.wall));
            }
        }
        if info.coupled {
            let prod = d.eta as f64 * d.dt_f;
            if d.eta == 0 || (prod - d.dt_c).abs() > 1e-12 * d.dt_c {
                errs.push(format!("eta * dt_f = {prod} must equal dt_c = {} (eta = {})", d.dt_c, d.eta));
            }
            if !(d.overlap > 0.0) {
                errs.push(format!("discretization.overlap must be positive when coupling, got {}", d.overlap));
            }
            if d.max_iter == 0 {
                errs.push("discretization.max_iter must be at least 1".into());
            }
            if self.domain.splits.is_empty() {
                errs.push("domain.splits must name at least one interface".into());
            }
            let (lo, hi) = (self.domain.lo.first().copied().unwrap_or(0.0), self.domain.hi.first().copied().unwrap_or(0.0));
            let mut prev = lo;
            for (k, &s) in self.domain.splits.iter().enumerate() {
                if s - d.overlap / 2.0 <= prev || s + d.overlap / 2.0 >= hi {
                    errs.push(format!("domain.splits[{k}] = {s} leaves no room for an overlap of {}", d.overlap));
                }
                prev = s + d.overlap / 2.0;
            }
        }
        for (face, spec) in &self.physics.boundaries {
            if !["x-min", "x-max", "y-min", "y-max"].contains(&face.as_str()) {
                errs.push(format!("physics.boundaries: unknown face '{face}'"));
            }
            if let Err(e) = FaceBc::parse(spec) {
                errs.push(format!("physics.boundaries.{face}: {e}"));
            }
        }
        if self.initial.species.is_empty() {
            errs.push("initial.species must list at least one species".into());
        }
        for (k, s) in self.initial.species.iter().enumerate() {
            if !matches!(s.kind.as_str(), "zero" | "uniform" | "gaussian" | "pulse" | "mode") {
                errs.push(format!("initial.species[{k}]: unknown kind '{}'", s.kind));
            }
            if s.kind == "gaussian" && !(s.sigma > 0.0) {
                errs.push(format!("initial.species[{k}]: sigma must be positive"));
            }
            if s.kind == "gaussian" && s.center.is_empty() {
                errs.push(format!("initial.species[{k}]: gaussian needs a center"));
            }
            if s.kind == "pulse" && (s.lo.len() < dim || s.hi.len() < dim) {
                errs.push(format!("initial.species[{k}]: pulse needs {dim}-component lo/hi"));
            }
        }
        match self.chemistry.kind.as_str() {
            "none" => {}
            "bimolecular" => {
                if self.chemistry.stoichiometry.iter().any(|&n| n == 0) {
                    errs.push("chemistry.stoichiometry must be positive".into());
                }
                if self.initial.species.len() != 3 {
                    errs.push("bimolecular chemistry needs initial profiles for A, B and C".into());
                }
            }
            "calcite" => {
                if !(self.chemistry.k_sp > 0.0) {
                    errs.push("chemistry.k_sp must be positive".into());
                }
                if self.initial.species.len() != 3 {
                    errs.push("calcite chemistry needs initial profiles for u1, u2 and u3".into());
                }
                if self.chemistry.inlet.len() != 2 {
                    errs.push("chemistry.inlet must give the two inlet invariants".into());
                }
            }
            other => errs.push(format!("chemistry.kind: unknown '{other}'")),
        }
        if !(self.output.t_end > 0.0) {
            errs.push(format!("output.t_end must be positive, got {}", self.output.t_end));
        }
        let step = if info.coupled { d.dt_c } else { d.dt_f };
        for &t in &self.output.sample_times {
            let n = t / step;
            if t < 0.0 || t > self.output.t_end * (1.0 + 1e-12) || (n - n.round()).abs() > 1e-6 {
                errs.push(format!("output.sample_times: {t} is not a step multiple within [0, t_end]"));
            }
        }
        for s in &self.study {
            if s.levels.is_empty() {
                errs.push(format!("study '{}' has no levels", s.name));
            }
            for (k, l) in s.levels.iter().enumerate() {
                if !l.contains_key(&s.abscissa) {
                    errs.push(format!("study '{}' level {k} does not set '{}'", s.name, s.abscissa));
                }
                if let Err(e) = self.with_overrides(l) {
                    errs.push(format!("study '{}' level {k}: {e}", s.name));
                }
            }
        }
        errs
    }

    pub fn check(&self) -> Result<()> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Invalid(errs))
        }
    }

    /// Whole steps of size `dt` up to `output.t_end`.
    pub fn steps(&self, dt: f64) -> u64 {
        (self.output.t_end / dt + 1e-9).floor() as u64
    }

    /// Step indices of the sample times.
    pub fn sample_steps(&self, dt: f64) -> Vec<u64> {
        self.output.sample_times.iter().map(|t| (t / dt).round() as u64).collect()
    }
}

/// Parsed face condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaceBc {
    ZeroFlux,
    Dirichlet(f64),
    Neumann(f64),
}

impl FaceBc {
    pub fn parse(s: &str) -> std::result::Result<FaceBc, String> {
        let (kind, val) = match s.split_once(':') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (s.trim(), None),
        };
        let num = |v: Option<&str>| -> std::result::Result<f64, String> {
            v.ok_or_else(|| format!("'{kind}' needs a value"))?.parse::<f64>().map_err(|e| format!("bad value in '{s}': {e}"))
        };
        match kind {
            "zero-flux" => Ok(FaceBc::ZeroFlux),
            "dirichlet" => Ok(FaceBc::Dirichlet(num(val)?)),
            "neumann" => Ok(FaceBc::Neumann(num(val)?)),
            other => Err(format!("unknown condition '{other}'")),
        }
    }
}

fn lookup_name(t: &toml::Table) -> Option<String> {
    t.get("scenario")?.get("name")?.as_str().map(str::to_string)
}

fn split_override(o: &str) -> Result<(String, toml::Value)> {
    let (k, v) = o.split_once('=').ok_or_else(|| ScenarioError::Parse(format!("override '{o}' is not key=value")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(ScenarioError::Parse(format!("override '{o}' has an empty key")));
    }
    Ok((k.to_string(), parse_value(v.trim())))
}

/// TOML value of `v`, or the raw string when it is not valid TOML.
pub fn parse_value(v: &str) -> toml::Value {
    format!("x = {v}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("x"))
        .unwrap_or_else(|| toml::Value::String(v.to_string()))
}

fn set_path(t: &mut toml::Table, key: &str, v: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = t;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ScenarioError::Parse(format!("override '{key}': '{p}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), v);
    Ok(())
}

fn merge(base: &mut toml::Table, top: toml::Table) {
    for (k, v) in top {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
