//! Decay schedules for a single observable: radii `delta_k` such that ball
//! averages of `A_k f` at radius below `delta_k` stay within `1/k` of
//! `A_k f(x)` outside an exceptional set of measure at most `2^-k`.
//!
//! For a point `x` and a time `j` the deviation
//! `|avg_{B(x,r)} f o T^j - f(T^j x)|` is evaluated on the radius ladder
//! `r_i = (1 - 2^-20) 2^-i`, `i = 0..=40`. The supremum over `r < 1/h`
//! with `h = 2^t` is the suffix maximum from index `t`, so the sets
//! `E_{j,n,h}` are nested in `h` by construction.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{integrate_composed, MetricSpec};
use crate::numeric::{Proportion, Z95};
use crate::observables::Observable;
use crate::operators::{birkhoff_average, spatial_temporal};
use crate::systems::{Point, SystemSpec};

/// Number of radii on the ladder.
pub const LADDER_LEN: usize = 41;
/// `h` ranges over `2^0, ..., 2^H_EXPONENT_MAX`.
pub const H_EXPONENT_MAX: usize = 30;
/// Slack added to the final bound for rounding in the ball integrals.
pub const QUADRATURE_BUDGET: f64 = 1e-9;

/// The radius actually used for a schedule value `delta`: strictly below it.
pub fn schedule_radius(delta: f64) -> f64 {
    (1.0 - 2f64.powi(-20)) * delta
}

pub fn ladder_radius(i: usize) -> f64 {
    schedule_radius(0.5f64.powi(i as i32))
}

/// First ladder index whose radius is below `1/h`.
pub fn suffix_index(h: u64) -> usize {
    let bound = 1.0 / h as f64;
    (0..LADDER_LEN).find(|i| ladder_radius(*i) < bound).unwrap_or(LADDER_LEN)
}

/// Suffix maxima of the deviation over the ladder, or `None` when `f` is
/// singular at `T^j x`.
fn deviation_suffix(system: &SystemSpec, metric: &MetricSpec, f: &Observable, x: &Point, y: &Point, j: u64) -> Result<Option<Vec<f64>>> {
    let value = match f.evaluate(y) {
        Ok(v) => v,
        Err(Error::SingularPoint { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut dev = vec![0.0; LADDER_LEN];
    for (i, d) in dev.iter_mut().enumerate() {
        let region = metric.ball(x, ladder_radius(i))?;
        let m = metric.ball_measure(&region)?;
        *d = (integrate_composed(system, f, &region, j)? / m - value).norm();
    }
    for i in (0..LADDER_LEN - 1).rev() {
        dev[i] = dev[i].max(dev[i + 1]);
    }
    Ok(Some(dev))
}

/// Suffix profiles for `j = 0..k_max-1` at one point.
fn point_profiles(system: &SystemSpec, metric: &MetricSpec, f: &Observable, x: &Point, k_max: usize) -> Result<Option<Vec<Vec<f64>>>> {
    let mut out = Vec::with_capacity(k_max);
    let mut y = x.clone();
    for j in 0..k_max as u64 {
        if j > 0 {
            y = system.apply(&y, 1)?;
        }
        match deviation_suffix(system, metric, f, x, &y, j)? {
            Some(p) => out.push(p),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

/// Empirical measure of `E_{j,n,h}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodSetEstimate {
    pub fraction: Proportion,
    /// Points dropped because `f` is singular at `T^j x`.
    pub excluded_singular: usize,
}

pub fn estimate_good_set(
    system: &SystemSpec,
    metric: &MetricSpec,
    f: &Observable,
    j: usize,
    n: usize,
    h: u64,
    sample: &[Point],
) -> Result<GoodSetEstimate> {
    if h == 0 || n == 0 {
        return Err(Error::InvalidInput("h and n must be positive".into()));
    }
    let t = suffix_index(h);
    let outcomes: Vec<Option<bool>> = sample
        .par_iter()
        .map(|x| {
            let y = system.apply(x, j as u64)?;
            Ok(deviation_suffix(system, metric, f, x, &y, j as u64)?
                .map(|dev| t >= LADDER_LEN || dev[t] <= 1.0 / n as f64))
        })
        .collect::<Result<_>>()?;
    let excluded = outcomes.iter().filter(|o| o.is_none()).count();
    let good = outcomes.iter().filter(|o| **o == Some(true)).count();
    Ok(GoodSetEstimate {
        fraction: Proportion::new(good, sample.len() - excluded),
        excluded_singular: excluded,
    })
}

/// The schedule and the sets `F_k` on the sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DecaySchedule {
    pub k_max: usize,
    /// `h[k-1][j]` for `j < k`.
    pub h: Vec<Vec<u64>>,
    /// `(max_j h_{j,k})^-1` before clamping.
    pub raw_deltas: Vec<f64>,
    /// Nonincreasing in `k`.
    pub deltas: Vec<f64>,
    /// `1/(k 2^k)`.
    pub budget: Vec<f64>,
    /// Empirical `mu(X \ F_k)`.
    pub bad_mass: Vec<Proportion>,
    /// `k_1(x)`: from this `k` on the point lies in every `F_k` (up to `k_max`).
    pub certified_from: Vec<Option<usize>>,
    /// Points excluded because `f` is singular somewhere on their orbit.
    pub excluded: Vec<bool>,
}

impl DecaySchedule {
    pub fn radius(&self, k: usize) -> f64 {
        schedule_radius(self.deltas[k - 1])
    }

    /// Upper end of the 95% Wilson interval for `mu(X \ F_k)`.
    pub fn bad_mass_upper(&self, k: usize) -> f64 {
        self.bad_mass[k - 1].wilson(Z95).1
    }
}

pub fn build_schedule(system: &SystemSpec, metric: &MetricSpec, f: &Observable, k_max: usize, sample: &[Point]) -> Result<DecaySchedule> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    if sample.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let profiles: Vec<Option<Vec<Vec<f64>>>> = sample
        .par_iter()
        .map(|x| point_profiles(system, metric, f, x, k_max))
        .collect::<Result<_>>()?;
    let excluded: Vec<bool> = profiles.iter().map(|p| p.is_none()).collect();
    let kept: Vec<&Vec<Vec<f64>>> = profiles.iter().flatten().collect();
    let n_eff = kept.len();
    if n_eff == 0 {
        return Err(Error::InvalidInput("every sample point is singular".into()));
    }

    let mut h = Vec::with_capacity(k_max);
    let mut failing = Vec::new();
    let mut in_f: Vec<Vec<bool>> = Vec::with_capacity(k_max);
    let mut budget = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let target = 1.0 / (k as f64 * 2f64.powi(k as i32));
        budget.push(target);
        let allowed = target * n_eff as f64;
        let tol = 1.0 / k as f64;
        let mut hk = Vec::with_capacity(k);
        let mut member = vec![true; n_eff];
        for j in 0..k {
            let t = (0..=H_EXPONENT_MAX).find(|t| {
                let fails = kept.iter().filter(|p| p[j][*t] > tol).count();
                fails as f64 <= allowed
            });
            match t {
                Some(t) => {
                    hk.push(1u64 << t);
                    for (ok, p) in member.iter_mut().zip(&kept) {
                        *ok &= p[j][t] <= tol;
                    }
                }
                None => {
                    failing.push((j, k));
                    hk.push(0);
                }
            }
        }
        h.push(hk);
        in_f.push(member);
    }
    if !failing.is_empty() {
        return Err(Error::ScheduleIncomplete { failing });
    }

    let raw_deltas: Vec<f64> = h.iter().map(|hk| 1.0 / *hk.iter().max().expect("j = 0 present") as f64).collect();
    let mut deltas = raw_deltas.clone();
    for k in 1..k_max {
        deltas[k] = deltas[k].min(deltas[k - 1]);
    }
    let bad_mass = in_f
        .iter()
        .map(|m| Proportion::new(m.iter().filter(|ok| !**ok).count(), n_eff))
        .collect();

    let mut certified_from = Vec::with_capacity(sample.len());
    let mut idx = 0;
    for ex in &excluded {
        if *ex {
            certified_from.push(None);
            continue;
        }
        let mut k1 = None;
        for k in (1..=k_max).rev() {
            if in_f[k - 1][idx] {
                k1 = Some(k);
            } else {
                break;
            }
        }
        certified_from.push(k1);
        idx += 1;
    }

    Ok(DecaySchedule {
        k_max,
        h,
        raw_deltas,
        deltas,
        budget,
        bad_mass,
        certified_from,
        excluded,
    })
}

/// One checked instance of the final bound.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRow {
    pub x_index: usize,
    pub k: usize,
    pub radius: f64,
    /// `|avg_{B(x, r_k)} A_k f - f*(x)|`.
    pub lhs: f64,
    /// `|A_k f(x) - f*(x)|`.
    pub temporal_error: f64,
    /// `1/k + |A_k f(x) - f*(x)| + QUADRATURE_BUDGET`.
    pub rhs: f64,
    pub pass: bool,
}

/// Checks `|U_{r_k,k} f(x) - f*(x)| <= 1/k + |A_k f(x) - f*(x)|` for every
/// certified point and every `k >= k_1(x)`. Failures are reported per row.
pub fn verify_schedule(
    system: &SystemSpec,
    metric: &MetricSpec,
    f: &Observable,
    schedule: &DecaySchedule,
    sample: &[Point],
) -> Result<Vec<VerificationRow>> {
    if schedule.certified_from.len() != sample.len() {
        return Err(Error::InvalidInput("schedule was built on a different sample".into()));
    }
    let fstar = system.invariant_projection(f)?;
    let per_point: Vec<Vec<VerificationRow>> = sample
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let Some(k1) = schedule.certified_from[i] else {
                return Ok(Vec::new());
            };
            let target = fstar.evaluate(x)?;
            (k1..=schedule.k_max)
                .map(|k| {
                    let r = schedule.radius(k);
                    let u = spatial_temporal(system, metric, f, x, r, k)?;
                    let a = birkhoff_average(system, f, x, k)?;
                    let lhs = (u - target).norm();
                    let temporal_error = (a - target).norm();
                    let rhs = 1.0 / k as f64 + temporal_error + QUADRATURE_BUDGET;
                    Ok(VerificationRow {
                        x_index: i,
                        k,
                        radius: r,
                        lhs,
                        temporal_error,
                        rhs,
                        pass: lhs <= rhs,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn torus() -> MetricSpec {
        MetricSpec::torus(1).unwrap()
    }

    #[test]
    fn ladder_and_suffix() {
        assert_eq!(suffix_index(1), 0);
        assert_eq!(suffix_index(2), 1);
        assert_eq!(suffix_index(1 << 30), 30);
        assert_eq!(suffix_index(3), 2);
        assert!(ladder_radius(5) < 1.0 / 32.0);
    }

    #[test]
    fn good_set_examples() {
        let sample = SystemSpec::Identity.sample(500, 11);
        let c = Observable::constant(2.0);
        let e = estimate_good_set(&SystemSpec::Identity, &torus(), &c, 0, 3, 1, &sample).unwrap();
        assert_eq!(e.fraction.estimate(), 1.0);
        let cosine = Observable::cosine(1);
        let e = estimate_good_set(&SystemSpec::Identity, &torus(), &cosine, 0, 10, 100, &sample).unwrap();
        assert_eq!(e.fraction.estimate(), 1.0);
        let ind = Observable::indicator(0.0, 0.5).unwrap();
        let e = estimate_good_set(&SystemSpec::DoublingMap, &torus(), &ind, 1, 4, 2, &sample).unwrap();
        assert!(e.fraction.estimate() < 1.0);
    }

    #[test]
    fn constant_schedule_is_trivial() {
        let sample = SystemSpec::Identity.sample(100, 2);
        let s = build_schedule(&SystemSpec::Identity, &torus(), &Observable::constant(1.5), 6, &sample).unwrap();
        assert!(s.deltas.iter().all(|d| *d == 1.0));
        assert!(s.certified_from.iter().all(|k| *k == Some(1)));
        let rows = verify_schedule(&SystemSpec::Identity, &torus(), &Observable::constant(1.5), &s, &sample).unwrap();
        assert!(rows.iter().all(|r| r.lhs == 0.0 && r.pass));
    }

    #[test]
    fn cosine_schedule_respects_taylor_bound() {
        let sample = SystemSpec::Identity.sample(300, 5);
        let f = Observable::cosine(1);
        let s = build_schedule(&SystemSpec::Identity, &torus(), &f, 16, &sample).unwrap();
        // any delta with (2 pi delta)^2 / 6 <= 1/k is admissible, so the
        // smallest power of two above that threshold bounds delta from below
        for k in 1..=16 {
            let admissible = (6.0 / k as f64).sqrt() / (2.0 * PI);
            let floor_pow2 = 0.5f64.powi((-admissible.log2()).ceil() as i32);
            assert!(s.deltas[k - 1] >= floor_pow2.min(1.0), "k = {k}");
        }
        assert!(s.deltas[15] >= 0.0625);
    }
}
