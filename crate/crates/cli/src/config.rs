//! Run configuration: a moment specification plus run fields, read from a
//! JSON file and overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mtoda_core::exact::{format_rational, int, parse_rational};
use mtoda_core::{LatticeBox, MomentKind, MomentSpec, Rational};
use serde::Deserialize;
use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Continuous,
    Discrete,
    Validate,
    Oracle,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "continuous" => Ok(Mode::Continuous),
            "discrete" => Ok(Mode::Discrete),
            "validate" => Ok(Mode::Validate),
            "oracle" => Ok(Mode::Oracle),
            other => bail!("config key \"mode\": unknown mode {other:?}"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Continuous => "continuous",
            Mode::Discrete => "discrete",
            Mode::Validate => "validate",
            Mode::Oracle => "oracle",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => bail!("config key \"format\": expected csv or json, got {other:?}"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: MomentSpec,
    pub window: Vec<usize>,
    pub mode: Mode,
    pub t0: Rational,
    pub t1: Rational,
    pub steps: usize,
    /// Snapshots recorded after the initial one.
    pub samples: usize,
    pub lambda: Rational,
    pub strict: bool,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Lax truncation size for exports.
    pub lax_size: usize,
    /// Discrete initial data to use instead of tau-generated fields.
    pub ab_field: Option<Value>,
}

/// Keys a config file may carry besides the moment specification.
#[derive(Default, Deserialize)]
#[serde(default)]
struct RawRun {
    window: Option<Vec<usize>>,
    mode: Option<String>,
    t0: Option<Value>,
    t1: Option<Value>,
    steps: Option<usize>,
    samples: Option<usize>,
    lambda: Option<Value>,
    strict: Option<bool>,
    out: Option<PathBuf>,
    format: Option<String>,
    lax_size: Option<usize>,
    ab_field: Option<Value>,
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub mode: Option<String>,
    pub t0: Option<String>,
    pub t1: Option<String>,
    pub steps: Option<usize>,
    pub lambda: Option<String>,
    pub window: Option<String>,
    pub strict: bool,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

fn rational_field(key: &str, v: &Value) -> Result<Rational> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        other => bail!("config key {key:?}: expected a rational, got {other}"),
    };
    parse_rational(&text).map_err(|e| anyhow!("config key {key:?}: {e}"))
}

fn parse_window(key: &str, s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| anyhow!("config key {key:?}: bad extent {p:?}"))
        })
        .collect()
}

impl RunConfig {
    /// Multiple Laguerre weights `exp(-x)`, `exp(-2x)` on a 3×3 window.
    pub fn default_laguerre() -> Self {
        RunConfig {
            spec: MomentSpec::laguerre(0, vec![int(1), int(2)]).expect("valid defaults"),
            window: vec![3, 3],
            mode: Mode::Continuous,
            t0: int(0),
            t1: int(1),
            steps: 100,
            samples: 10,
            lambda: int(0),
            strict: false,
            out: None,
            format: Format::Csv,
            lax_size: 8,
            ab_field: None,
        }
    }

    pub fn from_value(v: Value) -> Result<Self> {
        let obj = v.as_object().ok_or_else(|| anyhow!("config must be a JSON object"))?;
        let mut cfg = RunConfig::default_laguerre();
        if obj.contains_key("kind") {
            cfg.spec = MomentSpec::from_value(v.clone()).context("config moment specification")?;
        }
        let raw: RawRun = serde_json::from_value(v).context("config run fields")?;
        if let Some(w) = raw.window {
            cfg.window = w;
        } else if cfg.spec.r() != cfg.window.len() {
            cfg.window = vec![3; cfg.spec.r()];
        }
        if let Some(m) = raw.mode {
            cfg.mode = Mode::parse(&m)?;
        }
        if let Some(t) = raw.t0 {
            cfg.t0 = rational_field("t0", &t)?;
        }
        if let Some(t) = raw.t1 {
            cfg.t1 = rational_field("t1", &t)?;
        }
        if let Some(l) = raw.lambda {
            cfg.lambda = rational_field("lambda", &l)?;
        }
        if let Some(f) = raw.format {
            cfg.format = Format::parse(&f)?;
        }
        cfg.steps = raw.steps.unwrap_or(cfg.steps);
        cfg.samples = raw.samples.unwrap_or(cfg.samples);
        cfg.strict = raw.strict.unwrap_or(cfg.strict);
        cfg.out = raw.out.or(cfg.out);
        cfg.lax_size = raw.lax_size.unwrap_or(cfg.lax_size);
        cfg.ab_field = raw.ab_field;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        Self::from_value(v)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(m) = &o.mode {
            self.mode = Mode::parse(m)?;
        }
        if let Some(t) = &o.t0 {
            self.t0 = rational_field("t0", &Value::String(t.clone()))?;
        }
        if let Some(t) = &o.t1 {
            self.t1 = rational_field("t1", &Value::String(t.clone()))?;
        }
        if let Some(l) = &o.lambda {
            self.lambda = rational_field("lambda", &Value::String(l.clone()))?;
        }
        if let Some(w) = &o.window {
            self.window = parse_window("window", w)?;
        }
        if let Some(f) = &o.format {
            self.format = Format::parse(f)?;
        }
        self.steps = o.steps.unwrap_or(self.steps);
        self.strict |= o.strict;
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        Ok(())
    }

    pub fn check(&self) -> Result<()> {
        if self.window.len() != self.spec.r() {
            bail!(
                "config key \"window\": {} extents for r = {}",
                self.window.len(),
                self.spec.r()
            );
        }
        if self.window.contains(&0) {
            bail!("config key \"window\": extents must be at least 1");
        }
        if self.steps == 0 {
            bail!("config key \"steps\": must be at least 1");
        }
        if self.samples == 0 {
            bail!("config key \"samples\": must be at least 1");
        }
        Ok(())
    }

    pub fn lattice(&self) -> LatticeBox {
        LatticeBox::new(self.window.clone())
    }

    /// Laguerre parameters, if the moments are Laguerre.
    pub fn laguerre(&self) -> Option<(u32, Vec<Rational>)> {
        match self.spec.kind() {
            MomentKind::Laguerre { delta, kappa } => Some((*delta, kappa.clone())),
            MomentKind::Explicit { .. } => None,
        }
    }

    /// Discrete start time; must be a nonnegative integer.
    pub fn discrete_start(&self) -> Result<usize> {
        if !self.t0.is_integer() || self.t0 < int(0) {
            bail!("config key \"t0\": discrete runs need a nonnegative integer, got {}", self.t0);
        }
        self.t0
            .to_integer()
            .try_into()
            .map_err(|_| anyhow!("config key \"t0\": {} is too large", self.t0))
    }

    /// Echo of the run fields for reports.
    pub fn summary(&self) -> Value {
        let mut m = Map::new();
        m.insert("moments".into(), self.spec.to_value());
        m.insert("window".into(), json!(self.window));
        m.insert("mode".into(), json!(self.mode.name()));
        m.insert("t0".into(), json!(format_rational(&self.t0)));
        m.insert("t1".into(), json!(format_rational(&self.t1)));
        m.insert("steps".into(), json!(self.steps));
        m.insert("lambda".into(), json!(format_rational(&self.lambda)));
        m.insert("strict".into(), json!(self.strict));
        Value::Object(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_fields_and_overrides() {
        let v = json!({"r": 2, "kind": "laguerre", "delta": 1, "kappa": ["1", "3/2"],
                       "window": [2, 4], "mode": "discrete", "t1": "1/2", "lambda": -1});
        let mut cfg = RunConfig::from_value(v).unwrap();
        assert_eq!(cfg.window, vec![2, 4]);
        assert_eq!(cfg.mode, Mode::Discrete);
        assert_eq!(cfg.t1, mtoda_core::exact::rat(1, 2));
        assert_eq!(cfg.lambda, int(-1));
        cfg.apply(&Overrides {
            window: Some("3,3".into()),
            steps: Some(7),
            strict: true,
            ..Overrides::default()
        })
        .unwrap();
        assert_eq!(cfg.window, vec![3, 3]);
        assert_eq!(cfg.steps, 7);
        assert!(cfg.strict);
        cfg.check().unwrap();
    }

    #[test]
    fn errors_name_the_key() {
        let err = RunConfig::from_value(json!({"mode": "sideways"})).unwrap_err();
        assert!(err.to_string().contains("\"mode\""));
        let mut cfg = RunConfig::default_laguerre();
        cfg.window = vec![3, 0];
        assert!(cfg.check().unwrap_err().to_string().contains("\"window\""));
        cfg.window = vec![3];
        assert!(cfg.check().unwrap_err().to_string().contains("\"window\""));
        cfg.t0 = mtoda_core::exact::rat(1, 2);
        assert!(cfg.discrete_start().unwrap_err().to_string().contains("\"t0\""));
    }

    #[test]
    fn explicit_spec_resizes_the_default_window() {
        let v = json!({"r": 1, "kind": "explicit", "moments": [["1", "1", "2", "6"]]});
        let cfg = RunConfig::from_value(v).unwrap();
        assert_eq!(cfg.window, vec![3]);
    }
}
