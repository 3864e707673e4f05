//! Experiment configuration: parsing, defaults and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use ermlab_core::io::{ClassDocument, NestedDocument};
use ermlab_core::numeric::{GridSpec, Spacing};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    XiCurve,
    FixedPoint,
    BernsteinCheck,
    ValidateT12,
    ValidateT31,
    ModelSelect,
    GapDemo,
    Concentration,
}

impl Experiment {
    pub const ALL: [&'static str; 8] = [
        "xi-curve",
        "fixed-point",
        "bernstein-check",
        "validate-t12",
        "validate-t31",
        "model-select",
        "gap-demo",
        "concentration",
    ];

    fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| anyhow!("unknown experiment `{name}`; expected one of: {}", Self::ALL.join(", ")))
    }

    fn needs_n(self) -> bool {
        !matches!(self, Experiment::BernsteinCheck)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        write!(f, "{}", s.as_str().expect("string"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Input<T> {
    Path(PathBuf),
    Inline(T),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "half")]
    pub c1: f64,
    #[serde(default = "two")]
    pub c2: f64,
    #[serde(default = "sixteenth")]
    pub c3: f64,
    #[serde(default = "quarter")]
    pub factor: f64,
    /// Slab `0 ≤ Pf ≤ gate_c1/n` of the lower-bracket condition.
    #[serde(default = "one")]
    pub gate_c1: f64,
}

fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn two() -> f64 {
    2.0
}
fn sixteenth() -> f64 {
    1.0 / 16.0
}
fn quarter() -> f64 {
    0.25
}

impl Default for Constants {
    fn default() -> Self {
        Constants {
            c: 1.0,
            c1: 0.5,
            c2: 2.0,
            c3: 1.0 / 16.0,
            factor: 0.25,
            gate_c1: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Option<Spacing>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    pub m: Option<usize>,
    pub pairs: Option<usize>,
}

/// Raw file contents; every field optional so missing ones can be named.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<String>,
    seed: Option<u64>,
    n: Option<usize>,
    #[serde(rename = "K")]
    k: Option<usize>,
    replicates: Option<usize>,
    grid: Option<GridConfig>,
    #[serde(default)]
    constants: Option<Constants>,
    x: Option<f64>,
    epsilon: Option<f64>,
    rho: Option<f64>,
    delta: Option<f64>,
    beta: Option<f64>,
    input: Option<serde_json::Value>,
    class: Option<usize>,
    hull: Option<bool>,
    gap: Option<GapConfig>,
    draws: Option<usize>,
    n_values: Option<Vec<usize>>,
    output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum LoadedInput {
    Classes(ClassDocument),
    Nested(NestedDocument),
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub n: usize,
    pub k: usize,
    pub replicates: usize,
    pub grid: Option<GridConfig>,
    pub constants: Constants,
    pub x: f64,
    pub epsilon: Option<f64>,
    pub rho: f64,
    pub delta: f64,
    pub beta: f64,
    pub input: Option<LoadedInput>,
    /// Class index into the input document; `bernstein-check` checks every
    /// class when absent.
    pub class: Option<usize>,
    pub hull: bool,
    pub gap: GapConfig,
    pub draws: usize,
    pub n_values: Vec<usize>,
    pub output_dir: Option<PathBuf>,
    /// The config file as parsed, echoed into the report.
    pub echo: serde_json::Value,
}

fn missing(field: &str, experiment: Experiment) -> anyhow::Error {
    anyhow!("config is missing required field `{field}` (needed by experiment `{experiment}`)")
}

fn load_input(value: &serde_json::Value, base: &Path, nested: bool) -> Result<LoadedInput> {
    let parsed: Input<serde_json::Value> = serde_json::from_value(value.clone())?;
    let doc = match parsed {
        Input::Path(p) => {
            let path = if p.is_absolute() { p } else { base.join(p) };
            let text = std::fs::read_to_string(&path)
                .with_context(|| format!("cannot read input `{}`", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("input `{}` is not valid JSON", path.display()))?
        }
        Input::Inline(v) => v,
    };
    Ok(if nested {
        LoadedInput::Nested(
            serde_json::from_value(doc)
                .context("input is not a nested problem ({\"atoms\", \"joint\", \"loss\", \"classes\", \"eps\"})")?,
        )
    } else {
        LoadedInput::Classes(
            serde_json::from_value(doc).context("input is not a class document ({\"atoms\", \"probs\", \"classes\"})")?,
        )
    })
}

fn check_range(name: &str, ok: bool, expected: &str) -> Result<()> {
    if !ok {
        bail!("parameter `{name}` out of range: {expected}");
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config `{}`", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let echo: serde_json::Value = serde_json::from_str(text).context("config is not valid JSON")?;
        let raw: RawConfig = serde_json::from_value(echo.clone()).map_err(|e| anyhow!("invalid config: {e}"))?;
        let name = raw
            .experiment
            .as_deref()
            .ok_or_else(|| anyhow!("config is missing required field `experiment`"))?;
        let experiment = Experiment::parse(name)?;
        let n = match raw.n {
            Some(n) => n,
            None if experiment.needs_n() => return Err(missing("n", experiment)),
            None => 0,
        };
        if experiment.needs_n() {
            check_range("n", n >= 1, "need n >= 1")?;
        }
        let needs_input = !matches!(experiment, Experiment::GapDemo | Experiment::ValidateT31);
        let input = match &raw.input {
            Some(v) => Some(load_input(v, base, experiment == Experiment::ModelSelect)?),
            None if needs_input => return Err(missing("input", experiment)),
            None => None,
        };
        let defaults = |e: Experiment| match e {
            Experiment::GapDemo | Experiment::ValidateT31 => 500,
            Experiment::Concentration => 2000,
            _ => 200,
        };
        let k = raw.k.unwrap_or_else(|| defaults(experiment));
        let replicates = raw.replicates.unwrap_or(match experiment {
            Experiment::GapDemo => k,
            _ => 1000,
        });
        let x = raw.x.unwrap_or(match experiment {
            Experiment::ValidateT31 => 3.0,
            _ => 20f64.ln(),
        });
        let cfg = ExperimentConfig {
            experiment,
            seed: raw.seed.unwrap_or(0),
            n,
            k,
            replicates,
            grid: raw.grid,
            constants: raw.constants.unwrap_or_default(),
            x,
            epsilon: raw.epsilon,
            rho: raw.rho.unwrap_or(0.0),
            delta: raw.delta.unwrap_or(0.1),
            beta: raw.beta.unwrap_or(1.0),
            input,
            class: raw.class,
            hull: raw
                .hull
                .unwrap_or(matches!(experiment, Experiment::ValidateT12 | Experiment::ValidateT31)),
            gap: raw.gap.unwrap_or(GapConfig { m: None, pairs: None }),
            draws: raw.draws.unwrap_or(2000),
            n_values: raw.n_values.unwrap_or_default(),
            output_dir: raw.output_dir,
            echo,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        check_range("K", self.k >= 2, "need K >= 2")?;
        check_range("replicates", self.replicates >= 1, "need replicates >= 1")?;
        check_range("x", self.x > 0.0, "need x > 0")?;
        check_range("rho", (0.0..0.125).contains(&self.rho), "need 0 <= rho < 1/8")?;
        check_range("delta", self.delta > 0.0 && self.delta < 1.0, "need 0 < delta < 1")?;
        check_range("beta", self.beta > 0.0 && self.beta <= 1.0, "need 0 < beta <= 1")?;
        check_range("draws", self.draws >= 2, "need draws >= 2")?;
        if let Some(e) = self.epsilon {
            check_range("epsilon", e > 0.0, "need epsilon > 0")?;
        }
        let c = &self.constants;
        check_range("constants.c", c.c > 0.0, "need c > 0")?;
        check_range("constants.c1", c.c1 > 0.0 && c.c1 < 1.0, "need 0 < c1 < 1")?;
        check_range("constants.c2", c.c2 > 1.0, "need c2 > 1")?;
        check_range("constants.factor", c.factor > 0.0, "need factor > 0")?;
        check_range("constants.c3", c.c3 >= 0.0 && c.c3 < c.factor, "need 0 <= c3 < factor")?;
        check_range("constants.gate_c1", c.gate_c1 > 0.0, "need gate_c1 > 0")?;
        if matches!(self.experiment, Experiment::ValidateT12) {
            check_range("replicates", self.replicates >= 100, "validate-t12 needs replicates >= 100")?;
        }
        if matches!(self.experiment, Experiment::Concentration) {
            check_range("K", self.k >= 100, "concentration needs K >= 100")?;
        }
        if let Some(LoadedInput::Classes(doc)) = &self.input {
            check_range(
                "class",
                self.class.unwrap_or(0) < doc.classes.len(),
                &format!("input has {} classes", doc.classes.len()),
            )?;
        }
        Ok(())
    }

    /// The grid: explicit fields override the supplied default.
    pub fn grid_levels(&self, default: GridSpec) -> Result<Vec<f64>> {
        let spec = match self.grid {
            None => default,
            Some(g) => GridSpec {
                lo: g.lo.unwrap_or(default.lo),
                hi: g.hi.unwrap_or(default.hi),
                points: g.points.unwrap_or(default.points),
                spacing: g.spacing.unwrap_or(default.spacing),
            },
        };
        spec.levels().map_err(|e| anyhow!("invalid grid: {e}"))
    }
}
