//! Strategies and property bodies shared by the property suite and the
//! acceptance runner.

#![allow(dead_code)]

use num_complex::Complex64;
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use stdiff::geometry::{
    conditional_expectation, integrate_composed, ultrametric_radius, BallRegion, Cell, Region,
};
use stdiff::operators::{ball_profile, birkhoff_average, martingale_profile, spatial_temporal, Flavor};
use stdiff::systems::{BernoulliWeights, SymbolPoint};
use stdiff::{Angle, MetricSpec, Observable, PartitionSequence, Point, SystemSpec};

pub const CASES: u32 = 1000;

pub fn circle_system() -> impl Strategy<Value = SystemSpec> {
    prop_oneof![
        Just(SystemSpec::Identity),
        Just(SystemSpec::CircleRotation(Angle::sqrt2_minus_1())),
        Just(SystemSpec::CircleRotation(Angle::golden_fraction())),
        (2u64..60, 1i64..60).prop_map(|(q, p)| SystemSpec::CircleRotation(Angle::rational(p % q as i64, q).unwrap())),
        Just(SystemSpec::DoublingMap),
    ]
}

pub fn fourier() -> impl Strategy<Value = Observable> {
    prop::collection::vec((-4i64..=4, -1.0f64..1.0, -1.0f64..1.0), 1..5).prop_map(|terms| {
        let terms: Vec<(i64, Complex64)> = terms.into_iter().map(|(m, a, b)| (m, Complex64::new(a, b))).collect();
        Observable::fourier(&terms)
    })
}

/// Nonnegative combinations of indicators and a constant.
pub fn nonnegative() -> impl Strategy<Value = Observable> {
    (prop::collection::vec((0.0f64..1.0, 0.01f64..0.99, 0.0f64..2.0), 1..4), 0.0f64..1.0).prop_map(|(parts, c)| {
        let mut terms: Vec<(Complex64, Observable)> = parts
            .into_iter()
            .map(|(lo, len, w)| (Complex64::new(w, 0.0), Observable::indicator(lo, (lo + len).fract()).unwrap()))
            .collect();
        terms.push((Complex64::new(1.0, 0.0), Observable::constant(c)));
        Observable::combination(terms)
    })
}

pub fn radius() -> impl Strategy<Value = f64> {
    (-4.0f64..-0.31).prop_map(|e| 10f64.powf(e))
}

pub fn scalar() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| Complex64::new(a, b))
}

/// A partition sequence together with a point of its space.
pub fn partition_and_point() -> impl Strategy<Value = (PartitionSequence, Point)> {
    prop_oneof![
        (0.0f64..1.0).prop_map(|x| (PartitionSequence::dyadic(24), Point::circle(x))),
        (0.0f64..1.0).prop_map(|x| {
            let system = SystemSpec::CircleRotation(Angle::sqrt2_minus_1());
            (PartitionSequence::orbit_pullback(system, vec![0.0, 0.5], 24).unwrap(), Point::circle(x))
        }),
        (any::<u64>(), 0.1f64..1.0, 0.1f64..1.0, 0.1f64..1.0).prop_map(|(seed, a, b, c)| {
            let s = a + b + c;
            let w = BernoulliWeights::new(vec![a / s, b / s, 1.0 - a / s - b / s]).unwrap();
            (PartitionSequence::cylinders(w.clone(), 12), Point::Symbolic(SymbolPoint::lazy(seed, w)))
        }),
    ]
}

fn close(a: Complex64, b: Complex64, tol: f64, what: &str) -> Result<(), TestCaseError> {
    prop_assert!((a - b).norm() <= tol, "{what}: {a} vs {b} (tol {tol})");
    Ok(())
}

fn err(e: stdiff::Error) -> TestCaseError {
    TestCaseError::fail(e.to_string())
}

pub fn linearity(
    system: &SystemSpec,
    f: &Observable,
    g: &Observable,
    a: Complex64,
    b: Complex64,
    x: f64,
    r: f64,
    k: usize,
) -> Result<(), TestCaseError> {
    let metric = MetricSpec::torus(1).unwrap();
    let x = Point::circle(x);
    let h = Observable::combination(vec![(a, f.clone()), (b, g.clone())]);
    let u = |o: &Observable| spatial_temporal(system, &metric, o, &x, r, k).map_err(err);
    close(u(&h)?, a * u(f)? + b * u(g)?, 1e-9, "U(af+bg)")
}

pub fn positivity(system: &SystemSpec, f: &Observable, x: f64, r: f64, k: usize, n: usize) -> Result<(), TestCaseError> {
    let metric = MetricSpec::torus(1).unwrap();
    let x = Point::circle(x);
    for flavor in [Flavor::Birkhoff, Flavor::Squares] {
        let u = ball_profile(system, &metric, f, &x, r, &[k], flavor).map_err(err)?[0];
        prop_assert!(u.re >= -1e-12 && u.im.abs() <= 1e-12, "U f = {u}");
    }
    let dyadic = PartitionSequence::dyadic(24);
    let e = martingale_profile(system, &dyadic, f, n, &x, &[k], Flavor::Birkhoff).map_err(err)?[0];
    prop_assert!(e.re >= -1e-12 && e.im.abs() <= 1e-12, "E[A_k f|P(n)] = {e}");
    Ok(())
}

pub fn normalization(system: &SystemSpec, x: f64, r: f64, k: usize, n: usize) -> Result<(), TestCaseError> {
    let one = Observable::constant(1.0);
    let metric = MetricSpec::torus(1).unwrap();
    let x = Point::circle(x);
    let dyadic = PartitionSequence::dyadic(24);
    for flavor in [Flavor::Birkhoff, Flavor::Squares] {
        let u = ball_profile(system, &metric, &one, &x, r, &[k], flavor).map_err(err)?[0];
        close(u, Complex64::new(1.0, 0.0), 1e-12, "U 1")?;
        let e = martingale_profile(system, &dyadic, &one, n, &x, &[k], flavor).map_err(err)?[0];
        close(e, Complex64::new(1.0, 0.0), 1e-12, "E[A_k 1|P(n)]")?;
    }
    Ok(())
}

/// `(k+1) A_{k+1} f(x) = f(x) + k A_k f(Tx)`.
pub fn birkhoff_recurrence(system: &SystemSpec, f: &Observable, x: f64, k: usize) -> Result<(), TestCaseError> {
    let x = Point::circle(x);
    let tx = system.apply(&x, 1).map_err(err)?;
    let lhs = birkhoff_average(system, f, &x, k + 1).map_err(err)? * (k + 1) as f64;
    let rhs = f.evaluate(&x).map_err(err)? + birkhoff_average(system, f, &tx, k).map_err(err)? * k as f64;
    close(lhs, rhs, 1e-11 * (k + 1) as f64, "recurrence")
}

fn descendants(p: &PartitionSequence, cell: Cell, depth: usize) -> Result<Vec<Cell>, TestCaseError> {
    let mut layer = vec![cell];
    for _ in 0..depth {
        let mut next = Vec::new();
        for c in &layer {
            next.extend(p.children(c).map_err(err)?);
        }
        layer = next;
    }
    Ok(layer)
}

/// `E[E[f|P(n+m)]|P(n)] = E[f|P(n)]`.
pub fn tower(p: &PartitionSequence, x: &Point, f: &Observable, n: usize, m: usize) -> Result<(), TestCaseError> {
    let coarse = p.cell_of(n, x).map_err(err)?;
    let mass = coarse.region.measure();
    let mut acc = Complex64::new(0.0, 0.0);
    for c in descendants(p, coarse, m)? {
        let w = c.region.measure();
        if w > 0.0 {
            let avg = stdiff::geometry::integrate(f, &BallRegion::Cell(c)).map_err(err)? / w;
            acc += avg * w;
        }
    }
    let direct = conditional_expectation(p, f, n, x).map_err(err)?;
    close(acc / mass, direct, 1e-10, "tower")
}

/// Ultrametric balls at the grid radii are the partition cells, and open-ball
/// membership by distance agrees with cell membership.
pub fn ball_is_cell(p: &PartitionSequence, x: &Point, f: &Observable, n: usize, u: f64, seed: u64) -> Result<(), TestCaseError> {
    let metric = MetricSpec::PartitionUltrametric(p.clone());
    let r = ultrametric_radius(n);
    let cell = p.cell_of(n, x).map_err(err)?;
    let ball = metric.ball(x, r).map_err(err)?;
    prop_assert_eq!(&ball, &BallRegion::Cell(cell.clone()));
    let avg = metric.ball_average(f, x, r).map_err(err)?;
    close(avg, conditional_expectation(p, f, n, x).map_err(err)?, 1e-12, "ball average")?;

    let inside = match x {
        Point::Symbolic(s) => {
            let prefix = s.symbols(n).map_err(err)?;
            Point::Symbolic(SymbolPoint::with_tail(prefix, seed, s.code().clone()).map_err(err)?)
        }
        _ => {
            let span = cell.region.spans[0];
            Point::circle(span.start + (0.05 + 0.9 * u) * span.len)
        }
    };
    let outside = match x {
        Point::Symbolic(s) => Point::Symbolic(SymbolPoint::lazy(seed, s.code().clone())),
        _ => Point::circle(u),
    };
    for y in [inside, outside] {
        let d = metric.distance(x, &y).map_err(err)?;
        prop_assert_eq!(d < r, ball.contains(&y), "distance {} at radius {}", d, r);
    }
    Ok(())
}

/// `T^a T^b x = T^(a+b) x`.
pub fn semigroup(system: &SystemSpec, x: f64, a: u64, b: u64) -> Result<(), TestCaseError> {
    let x = Point::circle(x);
    let two = system.apply(&system.apply(&x, a).map_err(err)?, b).map_err(err)?;
    let one = system.apply(&x, a + b).map_err(err)?;
    let gap = system.point_gap(&two, &one);
    prop_assert!(gap <= 1e-12, "gap {gap}");
    Ok(())
}

/// `integral of 1_I o T^e = |I|` and `integral of f o T^e = integral of f`.
pub fn measure_preservation(system: &SystemSpec, f: &Observable, lo: f64, len: f64, e: u64) -> Result<(), TestCaseError> {
    let full = BallRegion::Arcs(Region::full());
    let ind = Observable::indicator(lo, (lo + len).fract()).map_err(err)?;
    close(integrate_composed(system, &ind, &full, e).map_err(err)?, Complex64::new(len, 0.0), 1e-12, "indicator")?;
    close(integrate_composed(system, f, &full, e).map_err(err)?, f.mean().map_err(err)?, 1e-12, "mean")
}

/// Interval integrals are additive.
pub fn additivity(f: &Observable, a: f64, l1: f64, l2: f64) -> Result<(), TestCaseError> {
    let whole = f.integral_from(a, l1 + l2).map_err(err)?;
    let parts = f.integral_from(a, l1).map_err(err)? + f.integral_from(a + l1, l2).map_err(err)?;
    close(whole, parts, 1e-12, "additivity")
}

/// Level-`n+1` cells sit inside level-`n` cells and extend their words.
pub fn nesting(p: &PartitionSequence, x: &Point, n: usize) -> Result<(), TestCaseError> {
    let parent = p.cell_of(n, x).map_err(err)?;
    let child = p.cell_of(n + 1, x).map_err(err)?;
    prop_assert_eq!(&child.word[..n], &parent.word[..]);
    let overlap = child.region.intersect(&parent.region).measure();
    prop_assert!((overlap - child.region.measure()).abs() <= 1e-12);
    prop_assert!(child.region.measure() <= parent.region.measure() + 1e-15);
    Ok(())
}
