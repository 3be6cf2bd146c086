//! Experiment configuration: one flat TOML document per experiment, with
//! sections written as dotted keys (`system.kind = "doubling_map"`).

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};
use toml::Value;

use crate::error::{Error, Result};
use crate::geometry::{MetricSpec, PartitionSequence};
use crate::observables::Observable;
use crate::operators::Flavor;
use crate::spectral::{predicted_birkhoff_limit, predicted_squares_limit};
use crate::systems::{Angle, BernoulliWeights, SystemSpec};

/// Which ball geometry the spatial average uses, if any.
#[derive(Debug, Clone, PartialEq)]
pub enum GeometryConfig {
    /// Pure temporal averages; rows carry an empty `r_or_n`.
    Temporal,
    /// Torus balls over the radius grid.
    Torus(MetricSpec),
    /// Partition cells over the level grid (the ultrametric balls of radius `1/(n + 1/2)`).
    Partition(PartitionSequence),
}

#[derive(Debug, Clone, PartialEq)]
pub enum PredictedLimit {
    InvariantProjection,
    SpectralPrediction,
    Explicit(Complex64),
}

/// The tail rectangle whose envelope decides pass or fail.
#[derive(Debug, Clone, PartialEq)]
pub struct AcceptanceSpec {
    pub r0: Option<f64>,
    pub n0: Option<usize>,
    pub k0: usize,
    pub max_envelope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub id: String,
    pub system: SystemSpec,
    pub observable: Observable,
    pub geometry: GeometryConfig,
    pub flavor: Flavor,
    pub grid_r: Vec<f64>,
    pub grid_n: Vec<usize>,
    pub grid_k: Vec<usize>,
    pub points_count: usize,
    pub points_seed: u64,
    pub predicted: PredictedLimit,
    pub spectral_k: usize,
    pub spectral_tol: f64,
    pub tolerances: Vec<f64>,
    pub acceptance: Option<AcceptanceSpec>,
    pub output: Option<PathBuf>,
    /// Hex SHA-256 of the source text.
    pub config_hash: String,
}

const TOP_LEVEL_KEYS: &[&str] = &[
    "id",
    "system",
    "observable",
    "metric",
    "partition",
    "flavor",
    "grid",
    "points",
    "predicted",
    "spectral",
    "tolerances",
    "acceptance",
    "output",
];

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn get<'a>(table: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(table, |v, key| v.get(key))
}

fn req<'a>(table: &'a Value, path: &str) -> Result<&'a Value> {
    get(table, path).ok_or_else(|| cfg(format!("missing key `{path}`")))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(cfg(format!("`{path}` must be a number"))),
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as usize),
        Value::Float(f) if *f >= 0.0 && f.fract() == 0.0 && *f < 1e15 => Ok(*f as usize),
        _ => Err(cfg(format!("`{path}` must be a nonnegative integer"))),
    }
}

fn as_str<'a>(v: &'a Value, path: &str) -> Result<&'a str> {
    v.as_str().ok_or_else(|| cfg(format!("`{path}` must be a string")))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| cfg(format!("`{path}` must be an array")))
}

/// A number or a `[re, im]` pair.
fn as_complex(v: &Value, path: &str) -> Result<Complex64> {
    match v {
        Value::Array(a) if a.len() == 2 => Ok(Complex64::new(as_f64(&a[0], path)?, as_f64(&a[1], path)?)),
        other => Ok(Complex64::new(as_f64(other, path)?, 0.0)),
    }
}

fn f64_list(v: &Value, path: &str) -> Result<Vec<f64>> {
    as_array(v, path)?.iter().map(|x| as_f64(x, path)).collect()
}

/// A grid given as a list or as `{ start, ratio, count }`.
fn real_grid(v: &Value, path: &str) -> Result<Vec<f64>> {
    match v {
        Value::Array(_) => f64_list(v, path),
        Value::Table(_) => {
            let start = as_f64(req(v, "start")?, path)?;
            let ratio = as_f64(req(v, "ratio")?, path)?;
            let count = as_usize(req(v, "count")?, path)?;
            Ok((0..count).map(|i| start * ratio.powi(i as i32)).collect())
        }
        _ => Err(cfg(format!("`{path}` must be a list or a geometric spec"))),
    }
}

fn int_grid(v: &Value, path: &str) -> Result<Vec<usize>> {
    match v {
        Value::Array(a) => a.iter().map(|x| as_usize(x, path)).collect(),
        Value::Table(_) => Ok(real_grid(v, path)?.into_iter().map(|x| x.round() as usize).collect()),
        _ => Err(cfg(format!("`{path}` must be a list or a geometric spec"))),
    }
}

fn strictly_monotone<T: PartialOrd>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) || v.windows(2).all(|w| w[0] > w[1])
}

pub fn parse_system(v: &Value) -> Result<SystemSpec> {
    let kind = as_str(req(v, "kind")?, "system.kind")?;
    let angle = || -> Result<Angle> {
        let irrational = get(v, "irrational").map(|b| b.as_bool().ok_or_else(|| cfg("`system.irrational` must be a boolean"))).transpose()?;
        match req(v, "angle")? {
            Value::String(s) => Angle::parse(s, irrational),
            other => {
                let x = as_f64(other, "system.angle")?;
                let irr = irrational.ok_or_else(|| cfg("decimal `system.angle` needs `system.irrational`"))?;
                Angle::from_decimal(x, irr)
            }
        }
    };
    Ok(match kind {
        "identity" => SystemSpec::Identity,
        "circle_rotation" => SystemSpec::CircleRotation(angle()?),
        "doubling_map" => SystemSpec::DoublingMap,
        "product_rotation_identity" => SystemSpec::ProductRotationIdentity(angle()?),
        "shift_bernoulli" => {
            let weights = match get(v, "weights") {
                Some(w) => BernoulliWeights::new(f64_list(w, "system.weights")?)?,
                None => BernoulliWeights::uniform(as_usize(req(v, "symbols")?, "system.symbols")?)?,
            };
            SystemSpec::ShiftBernoulli(weights)
        }
        other => return Err(cfg(format!("unknown system kind `{other}`"))),
    })
}

pub fn parse_observable(v: &Value, path: &str) -> Result<Observable> {
    let kind = as_str(req(v, "kind")?, &format!("{path}.kind"))?;
    let field = |name: &str| req(v, name).map_err(|_| cfg(format!("missing key `{path}.{name}`")));
    Ok(match kind {
        "fourier" => {
            let mut terms = Vec::new();
            for t in as_array(field("coeffs")?, path)? {
                let t = as_array(t, path)?;
                if t.len() != 3 {
                    return Err(cfg(format!("`{path}.coeffs` entries are [frequency, re, im]")));
                }
                let m = t[0].as_integer().ok_or_else(|| cfg("frequencies must be integers"))?;
                terms.push((m, Complex64::new(as_f64(&t[1], path)?, as_f64(&t[2], path)?)));
            }
            Observable::fourier(&terms)
        }
        "constant" => Observable::constant(as_complex(field("value")?, path)?),
        "indicator" => Observable::indicator(as_f64(field("lo")?, path)?, as_f64(field("hi")?, path)?)?,
        "piecewise_constant" => {
            let b = f64_list(field("breakpoints")?, path)?;
            let vals = as_array(field("values")?, path)?
                .iter()
                .map(|x| as_complex(x, path))
                .collect::<Result<Vec<_>>>()?;
            Observable::piecewise_constant(b, vals)?
        }
        "power_singularity" => {
            let center = get(v, "center").map(|c| as_f64(c, path)).transpose()?.unwrap_or(0.0);
            let f = Observable::power_singularity(as_f64(field("exponent")?, path)?, center)?;
            match get(v, "cap") {
                Some(c) => f.truncated(as_f64(c, path)?)?,
                None => f,
            }
        }
        "sawtooth" => Observable::Sawtooth,
        "tensor" => Observable::tensor(
            parse_observable(field("first")?, &format!("{path}.first"))?,
            parse_observable(field("second")?, &format!("{path}.second"))?,
        ),
        "combination" => {
            let mut terms = Vec::new();
            for (i, t) in as_array(field("terms")?, path)?.iter().enumerate() {
                let p = format!("{path}.terms[{i}]");
                let w = as_complex(req(t, "weight").map_err(|_| cfg(format!("missing `{p}.weight`")))?, &p)?;
                let o = parse_observable(req(t, "observable").map_err(|_| cfg(format!("missing `{p}.observable`")))?, &p)?;
                terms.push((w, o));
            }
            Observable::combination(terms)
        }
        other => return Err(cfg(format!("unknown observable kind `{other}`"))),
    })
}

fn parse_partition(doc: &Value, system: &SystemSpec) -> Result<PartitionSequence> {
    let p = req(doc, "partition")?;
    let levels = as_usize(req(p, "levels")?, "partition.levels")?;
    match as_str(req(p, "kind")?, "partition.kind")? {
        "dyadic" => Ok(PartitionSequence::dyadic(levels)),
        "orbit_pullback" => {
            let base = f64_list(req(p, "base")?, "partition.base")?;
            PartitionSequence::orbit_pullback(system.clone(), base, levels)
        }
        "cylinders" => match system {
            SystemSpec::ShiftBernoulli(w) => Ok(PartitionSequence::cylinders(w.clone(), levels)),
            _ => Err(cfg("cylinder partitions need a shift system")),
        },
        other => Err(cfg(format!("unknown partition kind `{other}`"))),
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| cfg(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let doc: Value = toml::from_str(text).map_err(|e| cfg(e.to_string()))?;
        let table = doc.as_table().ok_or_else(|| cfg("config must be a table"))?;
        if let Some(k) = table.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
            return Err(cfg(format!("unknown key `{k}`")));
        }
        let config_hash = hex::encode(Sha256::digest(text.as_bytes()));
        let id = match get(&doc, "id") {
            Some(v) => as_str(v, "id")?.to_string(),
            None => config_hash[..12].to_string(),
        };
        let system = parse_system(req(&doc, "system")?)?;
        let observable = parse_observable(req(&doc, "observable")?, "observable")?;
        let metric_kind = match get(&doc, "metric.kind") {
            Some(v) => as_str(v, "metric.kind")?,
            None => "none",
        };
        let geometry = match metric_kind {
            "torus" => {
                let dim = match get(&doc, "metric.dimension") {
                    Some(d) => as_usize(d, "metric.dimension")?,
                    None => system.space().dimension().max(1),
                };
                GeometryConfig::Torus(MetricSpec::torus(dim)?)
            }
            "partition" => GeometryConfig::Partition(parse_partition(&doc, &system)?),
            "none" => GeometryConfig::Temporal,
            other => return Err(cfg(format!("unknown metric kind `{other}`"))),
        };
        let flavor = match get(&doc, "flavor").map(|v| as_str(v, "flavor")).transpose()? {
            None | Some("birkhoff") => Flavor::Birkhoff,
            Some("squares") => Flavor::Squares,
            Some(other) => return Err(cfg(format!("unknown flavor `{other}`"))),
        };
        let grid_k = int_grid(req(&doc, "grid.k")?, "grid.k")?;
        let grid_r = get(&doc, "grid.r").map(|v| real_grid(v, "grid.r")).transpose()?.unwrap_or_default();
        let grid_n = get(&doc, "grid.n").map(|v| int_grid(v, "grid.n")).transpose()?.unwrap_or_default();
        let points_count = as_usize(req(&doc, "points.count")?, "points.count")?;
        let points_seed = match req(&doc, "points.seed")? {
            Value::Integer(i) if *i >= 0 => *i as u64,
            _ => return Err(cfg("`points.seed` must be a nonnegative integer")),
        };
        let predicted = match get(&doc, "predicted.kind").map(|v| as_str(v, "predicted.kind")).transpose()? {
            None | Some("invariant_projection") => PredictedLimit::InvariantProjection,
            Some("spectral") => PredictedLimit::SpectralPrediction,
            Some("explicit") => PredictedLimit::Explicit(as_complex(req(&doc, "predicted.value")?, "predicted.value")?),
            Some(other) => return Err(cfg(format!("unknown predicted kind `{other}`"))),
        };
        let spectral_k = get(&doc, "spectral.K").map(|v| as_usize(v, "spectral.K")).transpose()?.unwrap_or(10_000);
        let spectral_tol = get(&doc, "spectral.tol").map(|v| as_f64(v, "spectral.tol")).transpose()?.unwrap_or(0.05);
        let tolerances = get(&doc, "tolerances").map(|v| f64_list(v, "tolerances")).transpose()?.unwrap_or_default();
        let acceptance = match get(&doc, "acceptance") {
            Some(a) => Some(AcceptanceSpec {
                r0: get(a, "r0").map(|v| as_f64(v, "acceptance.r0")).transpose()?,
                n0: get(a, "n0").map(|v| as_usize(v, "acceptance.n0")).transpose()?,
                k0: as_usize(req(a, "k0")?, "acceptance.k0")?,
                max_envelope: as_f64(req(a, "max_envelope")?, "acceptance.max_envelope")?,
            }),
            None => None,
        };
        let output = get(&doc, "output").map(|v| as_str(v, "output").map(PathBuf::from)).transpose()?;

        let config = Self {
            id,
            system,
            observable,
            geometry,
            flavor,
            grid_r,
            grid_n,
            grid_k,
            points_count,
            points_seed,
            predicted,
            spectral_k,
            spectral_tol,
            tolerances,
            acceptance,
            output,
            config_hash,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_k.is_empty() {
            return Err(cfg("`grid.k` is empty"));
        }
        if self.grid_k[0] == 0 || !self.grid_k.windows(2).all(|w| w[0] < w[1]) {
            return Err(cfg("`grid.k` must be positive and strictly increasing"));
        }
        match &self.geometry {
            GeometryConfig::Torus(_) => {
                if self.grid_r.is_empty() {
                    return Err(cfg("torus metric needs a nonempty `grid.r`"));
                }
                if self.grid_r.iter().any(|r| !(*r > 0.0)) || !strictly_monotone(&self.grid_r) {
                    return Err(cfg("`grid.r` must be positive and strictly monotone"));
                }
            }
            GeometryConfig::Partition(p) => {
                if self.grid_n.is_empty() || !strictly_monotone(&self.grid_n) {
                    return Err(cfg("partition metric needs a strictly monotone, nonempty `grid.n`"));
                }
                if self.grid_n.iter().any(|n| *n > p.levels()) {
                    return Err(cfg("`grid.n` exceeds `partition.levels`"));
                }
            }
            GeometryConfig::Temporal => {}
        }
        if self.points_count == 0 {
            return Err(cfg("`points.count` must be positive"));
        }
        if self.tolerances.iter().any(|t| !(*t >= 0.0)) {
            return Err(cfg("tolerances must be nonnegative"));
        }
        self.predicted_observable()?;
        Ok(())
    }

    /// The predicted limit as an observable.
    pub fn predicted_observable(&self) -> Result<Observable> {
        match &self.predicted {
            PredictedLimit::Explicit(c) => Ok(Observable::constant(*c)),
            PredictedLimit::InvariantProjection => predicted_birkhoff_limit(&self.system, &self.observable),
            PredictedLimit::SpectralPrediction => match self.flavor {
                Flavor::Birkhoff => predicted_birkhoff_limit(&self.system, &self.observable),
                Flavor::Squares => predicted_squares_limit(&self.system, &self.observable, self.spectral_k, self.spectral_tol),
            },
        }
    }
}
