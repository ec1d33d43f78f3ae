//! Run configuration: a single TOML document with `[metric]`, `[map]`,
//! `[evaluation]` and `[options]` tables. Coefficient functions are
//! expression strings in the DSL; unknown keys are hard errors.

use std::fmt;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use finsler_core::expr::Expr;
use finsler_core::metric::{Metric, MetricFamily};
use finsler_core::schwarz::{
    constant_curvature_map, phi_from_f, CircleMap, Interval, Orientation,
};

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Toml(String),
    Field { field: &'static str, message: String },
    Core(finsler_core::Error),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "cannot read config: {m}"),
            ConfigError::Toml(m) => write!(f, "config syntax: {m}"),
            ConfigError::Field { field, message } => write!(f, "config `{field}`: {message}"),
            ConfigError::Core(e) => write!(f, "config: {e}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl From<finsler_core::Error> for ConfigError {
    fn from(e: finsler_core::Error) -> Self {
        ConfigError::Core(e)
    }
}

fn field_err(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field,
        message: message.into(),
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub metric: Option<MetricConfig>,
    pub map: Option<MapConfig>,
    pub evaluation: Option<EvalConfig>,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub family: MetricFamily,
    pub dimension: usize,
    /// Symmetric coefficient matrix, riemannian / randers families.
    pub a: Option<Vec<Vec<String>>>,
    /// One-form coefficients, randers family.
    pub b: Option<Vec<String>>,
    /// Potential, numata families.
    pub f: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    /// Map expression in one variable; exclusive with `f`.
    pub phi: Option<String>,
    /// Potential for the `phi' = f' +/- 1` dictionary.
    pub f: Option<String>,
    /// Cone sign for `f`, "+" (default) or "-".
    pub sign: Option<String>,
    /// Sample domain, [lo, hi]; defaults to [-1, 1].
    pub domain: Option<[f64; 2]>,
    pub points: Option<Vec<f64>>,
    pub grid: Option<Grid1Config>,
    /// Constant-curvature family mode.
    pub constant_k: Option<ConstantKConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1Config {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantKConfig {
    pub k: f64,
    /// (a, b, c, d) with a d - b c = +/-1.
    pub coefficients: [f64; 4],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalConfig {
    pub points: Option<Vec<Vec<f64>>>,
    pub grid: Option<GridConfig>,
    pub directions: Option<Vec<Vec<f64>>>,
    /// Random unit directions per point when no explicit list is given.
    pub direction_samples: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    pub count: Vec<usize>,
}

#[derive(Debug, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsConfig {
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub samples: Option<usize>,
    pub format: Option<String>,
    pub out: Option<String>,
}

/// Loads and parses a config file, returning it with the SHA-256 of its
/// bytes for the report header.
pub fn load(path: &Path) -> Result<(RawConfig, String), ConfigError> {
    let bytes = std::fs::read(path).map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| ConfigError::Io(format!("{} is not UTF-8", path.display())))?;
    let config: RawConfig = toml::from_str(&text).map_err(|e| ConfigError::Toml(e.to_string()))?;
    let hash = hex::encode(Sha256::digest(&bytes));
    Ok((config, hash))
}

impl RawConfig {
    pub fn build_metric(&self) -> Result<Option<Metric>, ConfigError> {
        let Some(mc) = &self.metric else {
            return Ok(None);
        };
        let dim = mc.dimension;
        if dim == 0 {
            return Err(field_err("metric.dimension", "must be at least 1"));
        }
        let parse = |field: &'static str, src: &str| -> Result<Expr, ConfigError> {
            Expr::parse(src, dim).map_err(|e| field_err(field, format!("`{src}`: {e}")))
        };
        let parse_matrix = |field: &'static str,
                            rows: &Vec<Vec<String>>|
         -> Result<Vec<Vec<Expr>>, ConfigError> {
            rows.iter()
                .map(|row| row.iter().map(|s| parse(field, s)).collect())
                .collect()
        };
        let metric = match mc.family {
            MetricFamily::Riemannian => {
                let a = mc
                    .a
                    .as_ref()
                    .ok_or_else(|| field_err("metric.a", "riemannian family needs a matrix"))?;
                Metric::riemannian(dim, parse_matrix("metric.a", a)?)?
            }
            MetricFamily::Randers => {
                let a = mc
                    .a
                    .as_ref()
                    .ok_or_else(|| field_err("metric.a", "randers family needs a matrix"))?;
                let b = mc
                    .b
                    .as_ref()
                    .ok_or_else(|| field_err("metric.b", "randers family needs a one-form"))?;
                let b = b
                    .iter()
                    .map(|s| parse("metric.b", s))
                    .collect::<Result<Vec<_>, _>>()?;
                Metric::randers(dim, parse_matrix("metric.a", a)?, b)?
            }
            MetricFamily::Numata => {
                let f = mc
                    .f
                    .as_ref()
                    .ok_or_else(|| field_err("metric.f", "numata family needs a potential"))?;
                Metric::numata(dim, parse("metric.f", f)?)?
            }
            MetricFamily::Numata1d => {
                if dim != 1 {
                    return Err(field_err("metric.dimension", "numata1d forces dimension 1"));
                }
                let f = mc
                    .f
                    .as_ref()
                    .ok_or_else(|| field_err("metric.f", "numata1d family needs a potential"))?;
                Metric::numata1d(parse("metric.f", f)?)?
            }
        };
        Ok(Some(metric))
    }

    /// Explicit evaluation points, validated against the metric dimension.
    pub fn explicit_points(&self, dim: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
        let Some(eval) = &self.evaluation else {
            return Err(field_err("evaluation", "missing table"));
        };
        let Some(points) = &eval.points else {
            return Err(field_err(
                "evaluation.points",
                "the curvature command needs explicit points (use `sweep` for grids)",
            ));
        };
        for p in points {
            if p.len() != dim {
                return Err(field_err(
                    "evaluation.points",
                    format!("point {p:?} has {} components, expected {dim}", p.len()),
                ));
            }
        }
        Ok(points.clone())
    }

    /// Cartesian grid points in row-major order (last axis fastest).
    pub fn grid_points(&self, dim: usize) -> Result<Vec<Vec<f64>>, ConfigError> {
        let Some(eval) = &self.evaluation else {
            return Err(field_err("evaluation", "missing table"));
        };
        let Some(grid) = &eval.grid else {
            return Err(field_err(
                "evaluation.grid",
                "the sweep command needs a grid (use `curvature` for explicit points)",
            ));
        };
        if grid.min.len() != dim || grid.max.len() != dim || grid.count.len() != dim {
            return Err(field_err(
                "evaluation.grid",
                format!("min/max/count must each have {dim} entries"),
            ));
        }
        if grid.count.iter().any(|&c| c == 0) {
            return Err(field_err("evaluation.grid.count", "counts must be at least 1"));
        }
        let axes: Vec<Vec<f64>> = (0..dim)
            .map(|i| {
                let c = grid.count[i];
                if c == 1 {
                    vec![0.5 * (grid.min[i] + grid.max[i])]
                } else {
                    let step = (grid.max[i] - grid.min[i]) / (c - 1) as f64;
                    (0..c).map(|k| grid.min[i] + step * k as f64).collect()
                }
            })
            .collect();
        let total: usize = axes.iter().map(|a| a.len()).product();
        let mut out = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            out.push(idx.iter().enumerate().map(|(i, &k)| axes[i][k]).collect());
            for i in (0..dim).rev() {
                idx[i] += 1;
                if idx[i] < axes[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
        Ok(out)
    }

    /// Explicit directions, or the per-point random sample count.
    pub fn directions(&self, dim: usize) -> Result<DirectionSpec, ConfigError> {
        let eval = self.evaluation.as_ref();
        if let Some(dirs) = eval.and_then(|e| e.directions.as_ref()) {
            for d in dirs {
                if d.len() != dim {
                    return Err(field_err(
                        "evaluation.directions",
                        format!("direction {d:?} has {} components, expected {dim}", d.len()),
                    ));
                }
            }
            return Ok(DirectionSpec::Explicit(dirs.clone()));
        }
        let count = eval.and_then(|e| e.direction_samples).unwrap_or(2);
        if count == 0 {
            return Err(field_err("evaluation.direction_samples", "must be at least 1"));
        }
        Ok(DirectionSpec::Random(count))
    }

    /// The 1D map declared under `[map]`, with its target curvature when the
    /// constant-curvature mode is requested.
    pub fn build_map(&self) -> Result<(CircleMap, Option<f64>), ConfigError> {
        let Some(mc) = &self.map else {
            return Err(field_err("map", "the schwarz command needs a [map] table"));
        };
        let domain = match mc.domain {
            Some([lo, hi]) => Interval::new(lo, hi)
                .map_err(|e| field_err("map.domain", e.to_string()))?,
            None => Interval::new(-1.0, 1.0).unwrap(),
        };
        let declared = [
            mc.phi.is_some(),
            mc.f.is_some(),
            mc.constant_k.is_some(),
        ]
        .iter()
        .filter(|&&b| b)
        .count();
        if declared != 1 {
            return Err(field_err(
                "map",
                "declare exactly one of `phi`, `f`, or `constant_k`",
            ));
        }
        if let Some(ck) = &mc.constant_k {
            let [a, b, c, d] = ck.coefficients;
            let map = constant_curvature_map(ck.k, a, b, c, d, domain)?;
            return Ok((map, Some(ck.k)));
        }
        if let Some(phi) = &mc.phi {
            let expr =
                Expr::parse(phi, 1).map_err(|e| field_err("map.phi", format!("`{phi}`: {e}")))?;
            return Ok((CircleMap::new(expr, domain)?, None));
        }
        let f = mc.f.as_ref().unwrap();
        let expr = Expr::parse(f, 1).map_err(|e| field_err("map.f", format!("`{f}`: {e}")))?;
        let orientation = match mc.sign.as_deref() {
            None | Some("+") => Orientation::Preserving,
            Some("-") => Orientation::Reversing,
            Some(other) => {
                return Err(field_err("map.sign", format!("`{other}` is not `+` or `-`")))
            }
        };
        Ok((phi_from_f(&expr, orientation, domain)?, None))
    }

    /// Sample x values for the schwarz command.
    pub fn map_points(&self, domain: Interval) -> Result<Vec<f64>, ConfigError> {
        let mc = self.map.as_ref().expect("map checked by build_map");
        if let Some(points) = &mc.points {
            if points.is_empty() {
                return Err(field_err("map.points", "must not be empty"));
            }
            return Ok(points.clone());
        }
        if let Some(grid) = &mc.grid {
            if grid.count == 0 {
                return Err(field_err("map.grid.count", "must be at least 1"));
            }
            if grid.count == 1 {
                return Ok(vec![0.5 * (grid.min + grid.max)]);
            }
            let step = (grid.max - grid.min) / (grid.count - 1) as f64;
            return Ok((0..grid.count).map(|k| grid.min + step * k as f64).collect());
        }
        Ok(domain.grid(21))
    }
}

#[derive(Debug, Clone)]
pub enum DirectionSpec {
    Explicit(Vec<Vec<f64>>),
    /// Count of random unit directions per point.
    Random(usize),
}

/// Options after merging config defaults with command-line overrides.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub seed: u64,
    pub tolerance: f64,
    pub samples: usize,
    pub format: OutputFormat,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn parse(s: &str) -> Result<OutputFormat, ConfigError> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(field_err("format", format!("`{other}` is not csv or json"))),
        }
    }
}

impl RunOptions {
    /// Config `[options]` overridden by command-line flags; validates
    /// positivity requirements.
    pub fn resolve(
        options: &OptionsConfig,
        seed: Option<u64>,
        tol: Option<f64>,
        samples: Option<usize>,
        format: Option<&str>,
        out: Option<String>,
        default_tolerance: f64,
    ) -> Result<RunOptions, ConfigError> {
        let tolerance = tol.or(options.tolerance).unwrap_or(default_tolerance);
        if !(tolerance > 0.0) {
            return Err(field_err("options.tolerance", "must be positive"));
        }
        let samples = samples.or(options.samples).unwrap_or(4);
        if samples == 0 {
            return Err(field_err("options.samples", "must be at least 1"));
        }
        let format = match format.or(options.format.as_deref()) {
            Some(s) => OutputFormat::parse(s)?,
            None => OutputFormat::Csv,
        };
        Ok(RunOptions {
            seed: seed.or(options.seed).unwrap_or(0),
            tolerance,
            samples,
            format,
            out: out.or_else(|| options.out.clone()),
        })
    }
}
