//! Running experiments over their grids.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::config::{ExperimentConfig, GeometryConfig};
use super::report::{
    tail_envelope, AcceptanceOutcome, ConvergenceReport, ReportRow, RunMetadata, Scale, SpotCheck,
};
use crate::error::{Error, Result};
use crate::operators::{
    ball_profile, birkhoff_average, martingale_ergodic, martingale_profile, spatial_temporal, squares_average,
    squares_spatial_temporal, temporal_profile, Flavor,
};
use crate::systems::Point;

/// Every this many rows one value is recomputed with the single-`k` operator.
pub const SPOT_CHECK_STRIDE: usize = 100;

fn profile(config: &ExperimentConfig, x: &Point, scale: Option<Scale>) -> Result<Vec<Complex64>> {
    let (system, f, ks, flavor) = (&config.system, &config.observable, &config.grid_k[..], config.flavor);
    match (&config.geometry, scale) {
        (GeometryConfig::Temporal, None) => temporal_profile(system, f, x, ks, flavor),
        (GeometryConfig::Torus(metric), Some(Scale::Radius(r))) => ball_profile(system, metric, f, x, r, ks, flavor),
        (GeometryConfig::Partition(p), Some(Scale::Level(n))) => martingale_profile(system, p, f, n, x, ks, flavor),
        _ => Err(Error::InvalidInput("scale does not match the configured geometry".into())),
    }
}

/// The same value as one profile entry, through the single-`k` entry points.
pub fn single_value(config: &ExperimentConfig, x: &Point, scale: Option<Scale>, k: usize) -> Result<Complex64> {
    let (system, f) = (&config.system, &config.observable);
    match (&config.geometry, scale, config.flavor) {
        (GeometryConfig::Temporal, None, Flavor::Birkhoff) => birkhoff_average(system, f, x, k),
        (GeometryConfig::Temporal, None, Flavor::Squares) => squares_average(system, f, x, k),
        (GeometryConfig::Torus(m), Some(Scale::Radius(r)), Flavor::Birkhoff) => spatial_temporal(system, m, f, x, r, k),
        (GeometryConfig::Torus(m), Some(Scale::Radius(r)), Flavor::Squares) => {
            squares_spatial_temporal(system, m, f, x, r, k)
        }
        (GeometryConfig::Partition(p), Some(Scale::Level(n)), Flavor::Birkhoff) => martingale_ergodic(system, p, f, n, k, x),
        (GeometryConfig::Partition(p), Some(Scale::Level(n)), Flavor::Squares) => {
            Ok(martingale_profile(system, p, f, n, x, &[k], Flavor::Squares)?[0])
        }
        _ => Err(Error::InvalidInput("scale does not match the configured geometry".into())),
    }
}

fn scales(config: &ExperimentConfig) -> Vec<Option<Scale>> {
    match &config.geometry {
        GeometryConfig::Temporal => vec![None],
        GeometryConfig::Torus(_) => config.grid_r.iter().map(|r| Some(Scale::Radius(*r))).collect(),
        GeometryConfig::Partition(_) => config.grid_n.iter().map(|n| Some(Scale::Level(*n))).collect(),
    }
}

/// The first grid `k` whose average involves the failing step, if known.
fn failing_k(ks: &[usize], err: &Error) -> usize {
    match err {
        Error::SingularPoint { step: Some(j) } => ks.iter().copied().find(|k| (*k as u64) > *j).unwrap_or(ks[0]),
        _ => ks[0],
    }
}

fn acceptance_scale(config: &ExperimentConfig, r0: Option<f64>, n0: Option<usize>) -> Option<Scale> {
    match &config.geometry {
        GeometryConfig::Temporal => None,
        GeometryConfig::Torus(_) => {
            Some(Scale::Radius(r0.unwrap_or_else(|| config.grid_r.iter().copied().fold(f64::MIN, f64::max))))
        }
        GeometryConfig::Partition(_) => {
            Some(Scale::Level(n0.unwrap_or_else(|| config.grid_n.iter().copied().min().unwrap_or(0))))
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    let started = Instant::now();
    config.validate()?;
    let predicted_f = config.predicted_observable()?;
    let points = config.system.sample(config.points_count, config.points_seed);
    let scale_list = scales(config);
    let tasks: Vec<(usize, Option<Scale>)> =
        (0..points.len()).flat_map(|i| scale_list.iter().map(move |s| (i, *s))).collect();

    let blocks: Vec<Result<Vec<ReportRow>>> = tasks
        .par_iter()
        .map(|&(i, scale)| {
            let x = &points[i];
            let cell_err = |e: Error| Error::Cell {
                x_index: i,
                r_or_n: scale.map_or_else(String::new, |s| s.to_string()),
                k: failing_k(&config.grid_k, &e),
                source: Box::new(e),
            };
            let predicted = predicted_f.evaluate(x).map_err(cell_err)?;
            let values = profile(config, x, scale).map_err(cell_err)?;
            let repr = x.repr();
            Ok(config
                .grid_k
                .iter()
                .zip(values)
                .map(|(&k, value)| ReportRow {
                    x_index: i,
                    x_repr: repr.clone(),
                    scale,
                    k,
                    value,
                    predicted,
                    abs_error: (value - predicted).norm(),
                })
                .collect())
        })
        .collect();
    let mut rows = Vec::with_capacity(tasks.len() * config.grid_k.len());
    for block in blocks {
        rows.extend(block?);
    }

    let checked: Vec<&ReportRow> = rows.iter().step_by(SPOT_CHECK_STRIDE).collect();
    let mismatches = checked
        .par_iter()
        .map(|row| {
            let v = single_value(config, &points[row.x_index], row.scale, row.k)?;
            Ok(usize::from(v != row.value))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum();
    let spot_check = SpotCheck { checked: checked.len(), mismatches };

    let mut envelopes = Vec::new();
    for s in &scale_list {
        for &k0 in &config.grid_k {
            envelopes.push(tail_envelope(&rows, *s, k0));
        }
    }

    let acceptance = config.acceptance.as_ref().map(|a| {
        let envelope = tail_envelope(&rows, acceptance_scale(config, a.r0, a.n0), a.k0);
        let passed = envelope.rows > 0 && envelope.sup <= a.max_envelope;
        AcceptanceOutcome { envelope, max_envelope: a.max_envelope, passed }
    });
    let judged: Vec<&ReportRow> = match &acceptance {
        Some(a) => rows.iter().filter(|r| r.in_tail(a.envelope.scale0, a.envelope.k0)).collect(),
        None => rows.iter().collect(),
    };
    let pass_fractions = config
        .tolerances
        .iter()
        .map(|&tol| {
            let within = judged.iter().filter(|r| r.abs_error <= tol).count();
            (tol, if judged.is_empty() { 0.0 } else { within as f64 / judged.len() as f64 })
        })
        .collect();

    Ok(ConvergenceReport {
        experiment_id: config.id.clone(),
        rows,
        envelopes,
        pass_fractions,
        acceptance,
        spot_check,
        metadata: RunMetadata {
            config_hash: config.config_hash.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_secs: started.elapsed().as_secs_f64(),
            points: config.points_count,
            seed: config.points_seed,
        },
    })
}

/// Where a run writes its CSV: the configured `output` (relative paths are
/// taken under `out_dir`), or `<out_dir>/<id>.csv`.
pub fn output_path(config: &ExperimentConfig, out_dir: &Path) -> PathBuf {
    match &config.output {
        Some(p) if p.is_absolute() => p.clone(),
        Some(p) => out_dir.join(p),
        None => out_dir.join(format!("{}.csv", config.id)),
    }
}

/// Runs one config file and writes its CSV.
pub fn run_file(path: &Path, out_dir: &Path) -> Result<(ConvergenceReport, PathBuf)> {
    let config = ExperimentConfig::from_path(path)?;
    let report = run_experiment(&config)?;
    let csv = output_path(&config, out_dir);
    report.emit_csv(&csv)?;
    Ok((report, csv))
}

/// Runs every `*.toml` in `dir`, in file-name order.
pub fn sweep(dir: &Path, out_dir: &Path) -> Result<Vec<(PathBuf, Result<(ConvergenceReport, PathBuf)>)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "toml"))
        .collect();
    paths.sort();
    Ok(paths.into_iter().map(|p| {
        let result = run_file(&p, out_dir);
        (p, result)
    }).collect())
}

