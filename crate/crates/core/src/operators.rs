//! Birkhoff averages, averages along the squares, and their ball averages.
//!
//! Every operator is a normalized sum over `j < k` of a per-step quantity.
//! The sums are accumulated in increasing `j` with compensated summation,
//! so a profile over several `k` values reports exactly the same bits as
//! separate single-`k` calls.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{integrate_composed, BallRegion, MetricSpec, PartitionSequence};
use crate::numeric::CompensatedSum;
use crate::observables::Observable;
use crate::systems::{Point, SystemSpec};

/// Which times are averaged: `j` (Birkhoff) or `j^2` (squares).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Birkhoff,
    Squares,
}

impl Flavor {
    pub fn exponent(self, j: u64) -> u64 {
        match self {
            Flavor::Birkhoff => j,
            Flavor::Squares => j * j,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Flavor::Birkhoff => "birkhoff",
            Flavor::Squares => "squares",
        }
    }
}

/// Walks an orbit through increasing exponents. Rotations and shifts jump
/// straight to `T^e(x)`; the doubling map advances from the current point,
/// so squares exponents are reached through odd increments.
struct OrbitWalker<'a> {
    system: &'a SystemSpec,
    origin: &'a Point,
    current: Point,
    exponent: u64,
}

impl<'a> OrbitWalker<'a> {
    fn new(system: &'a SystemSpec, origin: &'a Point) -> Self {
        Self {
            system,
            origin,
            current: origin.clone(),
            exponent: 0,
        }
    }

    fn advance_to(&mut self, e: u64) -> Result<&Point> {
        debug_assert!(e >= self.exponent);
        if e != self.exponent {
            self.current = match self.system {
                SystemSpec::DoublingMap => self.system.apply(&self.current, e - self.exponent)?,
                _ => self.system.apply(self.origin, e)?,
            };
            self.exponent = e;
        }
        Ok(&self.current)
    }
}

fn check_ks(ks: &[usize]) -> Result<()> {
    if ks.is_empty() || ks[0] == 0 || ks.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput("k values must be positive and strictly increasing".into()));
    }
    Ok(())
}

fn with_step(e: Error, j: u64) -> Error {
    match e {
        Error::SingularPoint { .. } => Error::SingularPoint { step: Some(j) },
        other => other,
    }
}

/// Runs `term(j)` for `j < max(ks)` and reports `(1/k) sum_{j<k} term(j)` at each `k` in `ks`.
fn cesaro_profile(ks: &[usize], mut term: impl FnMut(u64) -> Result<Complex64>) -> Result<Vec<Complex64>> {
    check_ks(ks)?;
    let mut out = Vec::with_capacity(ks.len());
    let mut sum = CompensatedSum::new();
    let mut next = 0;
    for j in 0..*ks.last().expect("nonempty") as u64 {
        sum.add(term(j)?);
        if j + 1 == ks[next] as u64 {
            out.push(sum.value() / ks[next] as f64);
            next += 1;
        }
    }
    Ok(out)
}

/// `(1/k) sum_{j<k} f(T^{e_j} x)` at each `k` in `ks`, with `e_j = j` or `j^2`.
pub fn temporal_profile(system: &SystemSpec, f: &Observable, x: &Point, ks: &[usize], flavor: Flavor) -> Result<Vec<Complex64>> {
    let mut walker = OrbitWalker::new(system, x);
    cesaro_profile(ks, |j| {
        let y = walker.advance_to(flavor.exponent(j))?;
        f.evaluate(y).map_err(|e| with_step(e, j))
    })
}

/// `A_k f(x)`.
pub fn birkhoff_average(system: &SystemSpec, f: &Observable, x: &Point, k: usize) -> Result<Complex64> {
    Ok(temporal_profile(system, f, x, &[k], Flavor::Birkhoff)?[0])
}

/// `B_k f(x)`.
pub fn squares_average(system: &SystemSpec, f: &Observable, x: &Point, k: usize) -> Result<Complex64> {
    Ok(temporal_profile(system, f, x, &[k], Flavor::Squares)?[0])
}

/// `(1/k) sum_{j<k} avg_region f o T^{e_j}` at each `k` in `ks`.
pub fn region_profile(
    system: &SystemSpec,
    f: &Observable,
    region: &BallRegion,
    ks: &[usize],
    flavor: Flavor,
) -> Result<Vec<Complex64>> {
    let m = region.measure();
    if !(m > 0.0) {
        return Err(Error::ZeroMeasure);
    }
    cesaro_profile(ks, |j| Ok(integrate_composed(system, f, region, flavor.exponent(j))? / m))
}

/// `U_{r,k} f(x)` (Birkhoff) or `V_{r,k} f(x)` (squares) at each `k` in `ks`.
pub fn ball_profile(
    system: &SystemSpec,
    metric: &MetricSpec,
    f: &Observable,
    x: &Point,
    r: f64,
    ks: &[usize],
    flavor: Flavor,
) -> Result<Vec<Complex64>> {
    let region = metric.ball(x, r)?;
    region_profile(system, f, &region, ks, flavor)
}

/// `U_{r,k} f(x)`, the ball average of the Birkhoff average.
pub fn spatial_temporal(system: &SystemSpec, metric: &MetricSpec, f: &Observable, x: &Point, r: f64, k: usize) -> Result<Complex64> {
    Ok(ball_profile(system, metric, f, x, r, &[k], Flavor::Birkhoff)?[0])
}

/// `V_{r,k} f(x)`, the ball average of the squares average.
pub fn squares_spatial_temporal(system: &SystemSpec, metric: &MetricSpec, f: &Observable, x: &Point, r: f64, k: usize) -> Result<Complex64> {
    Ok(ball_profile(system, metric, f, x, r, &[k], Flavor::Squares)?[0])
}

/// `E[A_k f | P(n)](x)` (or the squares analogue) at each `k` in `ks`.
pub fn martingale_profile(
    system: &SystemSpec,
    partitions: &PartitionSequence,
    f: &Observable,
    n: usize,
    x: &Point,
    ks: &[usize],
    flavor: Flavor,
) -> Result<Vec<Complex64>> {
    let cell = partitions.cell_of(n, x)?;
    region_profile(system, f, &BallRegion::Cell(cell), ks, flavor)
}

/// `E[A_k f | P(n)](x)`.
pub fn martingale_ergodic(system: &SystemSpec, partitions: &PartitionSequence, f: &Observable, n: usize, k: usize, x: &Point) -> Result<Complex64> {
    Ok(martingale_profile(system, partitions, f, n, x, &[k], Flavor::Birkhoff)?[0])
}
