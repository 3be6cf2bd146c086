//! Concrete probability measure-preserving systems with exact iteration
//! and a known description of their invariant factor.
//!
//! Every system lives on the circle `R/Z`, the 2-torus, or a one-sided
//! Bernoulli shift. Shift points are lazy: their symbols are produced on
//! demand by a counter-based generator, so iterating the shift is exact.
//! Observables on the shift are read through the coding map sending the
//! cylinder `[s_0 .. s_{n-1}]` to an interval of length `w_{s_0}...w_{s_{n-1}}`
//! in `[0, 1)`, which carries the Bernoulli measure to Lebesgue measure.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numeric::{circle_distance, frac_mul, mod1};
use crate::observables::Observable;

/// `sqrt(2) - 1` to full double precision.
pub const SQRT2_MINUS_1: f64 = std::f64::consts::SQRT_2 - 1.0;
/// `(sqrt(5) - 1) / 2`, the fractional part of the golden ratio.
pub const GOLDEN_FRACTION: f64 = 0.618_033_988_749_894_9;

/// Arithmetic nature of a rotation angle. Irrationality cannot be read off
/// a float, so it is declared by whoever builds the angle.
#[derive(Debug, Clone, PartialEq)]
pub enum AngleArithmetic {
    /// `p / q` in lowest terms with `0 <= p < q`.
    Rational { p: u64, q: u64 },
    Irrational { name: String },
}

/// A rotation angle in `[0, 1)` (measured in turns).
#[derive(Debug, Clone, PartialEq)]
pub struct Angle {
    value: f64,
    arithmetic: AngleArithmetic,
}

impl Angle {
    pub fn sqrt2_minus_1() -> Self {
        Self::irrational(SQRT2_MINUS_1, "sqrt2_minus_1")
    }

    pub fn golden_fraction() -> Self {
        Self::irrational(GOLDEN_FRACTION, "golden")
    }

    pub fn irrational(value: f64, name: impl Into<String>) -> Self {
        Self {
            value: mod1(value),
            arithmetic: AngleArithmetic::Irrational { name: name.into() },
        }
    }

    pub fn rational(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("rational angle with zero denominator".into()));
        }
        let p = p.rem_euclid(q as i64) as u64;
        let g = gcd(p, q);
        let (p, q) = (p / g, q / g);
        Ok(Self {
            value: p as f64 / q as f64,
            arithmetic: AngleArithmetic::Rational { p, q },
        })
    }

    /// Builds an angle from a decimal. Rational decimals are matched to the
    /// closest fraction with denominator at most `10^6`; the match must be
    /// within `1e-12`.
    pub fn from_decimal(value: f64, irrational: bool) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidInput(format!("angle {value} is not finite")));
        }
        if irrational {
            return Ok(Self::irrational(value, format!("{value}")));
        }
        let v = mod1(value);
        let (p, q) = rationalize(v, 1_000_000).ok_or_else(|| {
            Error::InvalidInput(format!(
                "angle {value} declared rational but has no fraction with denominator <= 1e6 within 1e-12"
            ))
        })?;
        Self::rational(p as i64, q)
    }

    /// Parses `"sqrt2_minus_1"`, `"golden"`, `"p/q"` or a decimal.
    pub fn parse(text: &str, irrational: Option<bool>) -> Result<Self> {
        let t = text.trim();
        match t {
            "sqrt2_minus_1" => return Ok(Self::sqrt2_minus_1()),
            "golden" | "golden_fraction" => return Ok(Self::golden_fraction()),
            _ => {}
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|_| Error::InvalidInput(format!("bad angle {t}")))?;
            let q: u64 = q.trim().parse().map_err(|_| Error::InvalidInput(format!("bad angle {t}")))?;
            if irrational == Some(true) {
                return Err(Error::InvalidInput(format!("angle {t} is a fraction but flagged irrational")));
            }
            return Self::rational(p, q);
        }
        let v: f64 = t.parse().map_err(|_| Error::InvalidInput(format!("bad angle {t}")))?;
        let irr = irrational.ok_or_else(|| {
            Error::InvalidInput(format!("decimal angle {t} needs an explicit irrational flag"))
        })?;
        Self::from_decimal(v, irr)
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn arithmetic(&self) -> &AngleArithmetic {
        &self.arithmetic
    }

    pub fn is_irrational(&self) -> bool {
        matches!(self.arithmetic, AngleArithmetic::Irrational { .. })
    }

    /// `frac(n * angle)`.
    pub fn times(&self, n: u64) -> f64 {
        match self.arithmetic {
            AngleArithmetic::Rational { p, q } => ((p as u128 * n as u128) % q as u128) as f64 / q as f64,
            AngleArithmetic::Irrational { .. } => frac_mul(n, self.value),
        }
    }

    pub fn label(&self) -> String {
        match &self.arithmetic {
            AngleArithmetic::Rational { p, q } => format!("{p}/{q}"),
            AngleArithmetic::Irrational { name } => name.clone(),
        }
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

fn rationalize(v: f64, max_q: u64) -> Option<(u64, u64)> {
    // continued-fraction convergents
    let (mut h0, mut h1) = (0u64, 1u64);
    let (mut k0, mut k1) = (1u64, 0u64);
    let mut x = v;
    for _ in 0..64 {
        let a = x.floor();
        let ai = a as u64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > max_q {
            break;
        }
        if (h2 as f64 / k2 as f64 - v).abs() <= 1e-12 {
            return Some((h2, k2));
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let r = x - a;
        if r == 0.0 {
            break;
        }
        x = 1.0 / r;
    }
    None
}

/// Symbol weights of a Bernoulli shift.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliWeights {
    weights: Arc<[f64]>,
    cumulative: Arc<[f64]>,
}

impl BernoulliWeights {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 || weights.len() > 256 {
            return Err(Error::InvalidInput("a shift needs between 2 and 256 symbols".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidInput("shift weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("shift weights sum to {total}, not 1")));
        }
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            cumulative.push(acc);
            acc += w;
        }
        Ok(Self {
            weights: weights.into(),
            cumulative: cumulative.into(),
        })
    }

    pub fn uniform(symbols: usize) -> Result<Self> {
        Self::new(vec![1.0 / symbols as f64; symbols])
    }

    pub fn symbol_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, s: u8) -> f64 {
        self.weights[s as usize]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Left endpoint of the coding interval of symbol `s`.
    pub fn offset(&self, s: u8) -> f64 {
        self.cumulative[s as usize]
    }

    /// Coding interval `(start, length)` of a cylinder word.
    pub fn cylinder(&self, word: &[u8]) -> (f64, f64) {
        let mut start = 0.0;
        let mut len = 1.0;
        for &s in word {
            start += len * self.offset(s);
            len *= self.weight(s);
        }
        (start, len)
    }

    fn symbol_for(&self, u: f64) -> u8 {
        let idx = self.cumulative.partition_point(|c| *c <= u);
        (idx.saturating_sub(1)) as u8
    }
}

/// A point of a one-sided shift. Symbols below `prefix.len()` are explicit;
/// later symbols come from the counter-based generator keyed by `seed`, if
/// present. `offset` counts how many times the shift has been applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPoint {
    prefix: Arc<[u8]>,
    seed: Option<u64>,
    offset: u64,
    code: BernoulliWeights,
}

impl SymbolPoint {
    pub fn lazy(seed: u64, code: BernoulliWeights) -> Self {
        Self {
            prefix: Arc::from(Vec::new()),
            seed: Some(seed),
            offset: 0,
            code,
        }
    }

    /// A point known only through a finite prefix.
    pub fn finite(prefix: Vec<u8>, code: BernoulliWeights) -> Result<Self> {
        if prefix.iter().any(|s| *s as usize >= code.symbol_count()) {
            return Err(Error::InvalidInput("symbol outside the alphabet".into()));
        }
        Ok(Self {
            prefix: prefix.into(),
            seed: None,
            offset: 0,
            code,
        })
    }

    pub fn with_tail(prefix: Vec<u8>, seed: u64, code: BernoulliWeights) -> Result<Self> {
        let mut p = Self::finite(prefix, code)?;
        p.seed = Some(seed);
        Ok(p)
    }

    pub fn code(&self) -> &BernoulliWeights {
        &self.code
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Symbol at position `i` of the current (shifted) sequence.
    pub fn symbol(&self, i: usize) -> Result<u8> {
        let abs = self.offset + i as u64;
        if (abs as usize) < self.prefix.len() && abs < usize::MAX as u64 {
            return Ok(self.prefix[abs as usize]);
        }
        match self.seed {
            Some(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_word_pos(2 * abs as u128);
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                Ok(self.code.symbol_for(u))
            }
            None => Err(Error::InsufficientPrefix { level: i + 1 }),
        }
    }

    pub fn symbols(&self, n: usize) -> Result<Vec<u8>> {
        (0..n).map(|i| self.symbol(i)).collect()
    }

    /// Image of the point under the coding map into `[0, 1)`.
    pub fn coordinate(&self) -> Result<f64> {
        let mut start = 0.0;
        let mut len = 1.0;
        let mut i = 0;
        while len > f64::EPSILON * 0.5 {
            let s = match self.symbol(i) {
                Ok(s) => s,
                Err(_) => return Err(Error::InsufficientPrefix { level: i + 1 }),
            };
            start += len * self.code.offset(s);
            len *= self.code.weight(s);
            i += 1;
        }
        Ok(mod1(start))
    }

    fn shifted(&self, power: u64) -> Self {
        let mut p = self.clone();
        p.offset += power;
        p
    }
}

/// A point of the phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Circle(f64),
    Torus2([f64; 2]),
    Symbolic(SymbolPoint),
}

impl Point {
    pub fn circle(x: f64) -> Self {
        Point::Circle(mod1(x))
    }

    pub fn torus2(x: f64, y: f64) -> Self {
        Point::Torus2([mod1(x), mod1(y)])
    }

    pub fn space(&self) -> PointSpace {
        match self {
            Point::Circle(_) => PointSpace::Circle,
            Point::Torus2(_) => PointSpace::Torus2,
            Point::Symbolic(_) => PointSpace::Symbolic,
        }
    }

    pub fn as_circle(&self) -> Result<f64> {
        match self {
            Point::Circle(x) => Ok(*x),
            other => Err(Error::DimensionMismatch {
                expected: 1,
                found: other.space().dimension(),
            }),
        }
    }

    /// Replayable textual form used in reports.
    pub fn repr(&self) -> String {
        match self {
            Point::Circle(x) => format!("{x}"),
            Point::Torus2([x, y]) => format!("{x};{y}"),
            Point::Symbolic(s) => {
                let head: String = (0..8)
                    .map(|i| s.symbol(i).map(|c| c.to_string()).unwrap_or_else(|_| "?".into()))
                    .collect();
                match s.seed {
                    Some(seed) => format!("seed={seed}@{}:{head}", s.offset),
                    None => format!("prefix@{}:{head}", s.offset),
                }
            }
        }
    }
}

/// Which space a point lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSpace {
    Circle,
    Torus2,
    Symbolic,
}

impl PointSpace {
    pub fn dimension(self) -> usize {
        match self {
            PointSpace::Circle => 1,
            PointSpace::Torus2 => 2,
            PointSpace::Symbolic => 0,
        }
    }
}

impl fmt::Display for PointSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointSpace::Circle => write!(f, "circle"),
            PointSpace::Torus2 => write!(f, "2-torus"),
            PointSpace::Symbolic => write!(f, "symbolic"),
        }
    }
}

/// Description of the invariant sigma-algebra.
#[derive(Debug, Clone, PartialEq)]
pub enum InvariantFactor {
    TrivialConstant,
    /// Every function is invariant (the identity map).
    FullFunction,
    /// Functions of the second coordinate only (rotation times identity).
    SecondCoordinateFiber,
    /// Averages over the `q` points of each periodic orbit (rational rotation).
    PeriodicOrbitAverage { period: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErgodicityCertificate {
    pub ergodic: bool,
    pub factor: InvariantFactor,
}

/// A probability measure-preserving transformation from the catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemSpec {
    Identity,
    CircleRotation(Angle),
    DoublingMap,
    /// `(x, y) -> (x + angle, y)` on the 2-torus.
    ProductRotationIdentity(Angle),
    ShiftBernoulli(BernoulliWeights),
}

impl SystemSpec {
    pub fn space(&self) -> PointSpace {
        match self {
            SystemSpec::Identity | SystemSpec::CircleRotation(_) | SystemSpec::DoublingMap => PointSpace::Circle,
            SystemSpec::ProductRotationIdentity(_) => PointSpace::Torus2,
            SystemSpec::ShiftBernoulli(_) => PointSpace::Symbolic,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SystemSpec::Identity => "identity".into(),
            SystemSpec::CircleRotation(a) => format!("circle_rotation({})", a.label()),
            SystemSpec::DoublingMap => "doubling_map".into(),
            SystemSpec::ProductRotationIdentity(a) => format!("product_rotation_identity({})", a.label()),
            SystemSpec::ShiftBernoulli(w) => format!("shift_bernoulli({:?})", w.weights()),
        }
    }

    /// Translation amount `frac(power * angle)` for rotations, 0 otherwise.
    pub fn translation(&self, power: u64) -> f64 {
        match self {
            SystemSpec::CircleRotation(a) | SystemSpec::ProductRotationIdentity(a) => a.times(power),
            _ => 0.0,
        }
    }

    fn check_point(&self, x: &Point) -> Result<()> {
        let ok = match (self, x) {
            (SystemSpec::ShiftBernoulli(w), Point::Symbolic(s)) => s.code == *w,
            _ => self.space() == x.space(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.space().dimension(),
                found: x.space().dimension(),
            })
        }
    }

    /// `T^power(x)`.
    ///
    /// Doubling-map orbits of floats are exact (doubling and subtracting 1
    /// never round), but every float is a dyadic rational, so the orbit of
    /// a float reaches 0 after at most 1074 steps. Long pointwise doubling
    /// orbits should use a symbolic point of the uniform 2-symbol shift.
    pub fn apply(&self, x: &Point, power: u64) -> Result<Point> {
        self.check_point(x)?;
        Ok(match (self, x) {
            (SystemSpec::Identity, p) => p.clone(),
            (SystemSpec::CircleRotation(a), Point::Circle(v)) => Point::Circle(mod1(v + a.times(power))),
            (SystemSpec::DoublingMap, Point::Circle(v)) => Point::Circle(double_mod1(*v, power)),
            (SystemSpec::ProductRotationIdentity(a), Point::Torus2([u, v])) => {
                Point::Torus2([mod1(u + a.times(power)), *v])
            }
            (SystemSpec::ShiftBernoulli(_), Point::Symbolic(s)) => Point::Symbolic(s.shifted(power)),
            _ => unreachable!("checked by check_point"),
        })
    }

    pub fn certificate(&self) -> ErgodicityCertificate {
        match self {
            SystemSpec::Identity => ErgodicityCertificate {
                ergodic: false,
                factor: InvariantFactor::FullFunction,
            },
            SystemSpec::CircleRotation(a) => match a.arithmetic() {
                AngleArithmetic::Irrational { .. } => ErgodicityCertificate {
                    ergodic: true,
                    factor: InvariantFactor::TrivialConstant,
                },
                AngleArithmetic::Rational { q: 1, .. } => ErgodicityCertificate {
                    ergodic: false,
                    factor: InvariantFactor::FullFunction,
                },
                AngleArithmetic::Rational { q, .. } => ErgodicityCertificate {
                    ergodic: false,
                    factor: InvariantFactor::PeriodicOrbitAverage { period: *q },
                },
            },
            SystemSpec::DoublingMap | SystemSpec::ShiftBernoulli(_) => ErgodicityCertificate {
                ergodic: true,
                factor: InvariantFactor::TrivialConstant,
            },
            SystemSpec::ProductRotationIdentity(_) => ErgodicityCertificate {
                ergodic: false,
                factor: InvariantFactor::SecondCoordinateFiber,
            },
        }
    }

    /// Conditional expectation onto the invariant sigma-algebra, in closed form.
    pub fn invariant_projection(&self, f: &Observable) -> Result<Observable> {
        let cert = self.certificate();
        if let SystemSpec::ProductRotationIdentity(a) = self {
            if !a.is_irrational() {
                return Err(Error::UnsupportedFactor(
                    "product system with rational angle has no closed-form fiber projection".into(),
                ));
            }
            return fiber_projection(f);
        }
        if f.dimension() != self.space().dimension().max(1) {
            return Err(Error::DimensionMismatch {
                expected: self.space().dimension().max(1),
                found: f.dimension(),
            });
        }
        match cert.factor {
            InvariantFactor::TrivialConstant => Ok(Observable::constant(f.mean()?)),
            InvariantFactor::FullFunction => Ok(f.clone()),
            InvariantFactor::PeriodicOrbitAverage { period } => match f {
                Observable::Fourier(poly) => Ok(Observable::Fourier(poly.filter(|m| m.rem_euclid(period as i64) == 0))),
                _ => Err(Error::UnsupportedFactor(format!(
                    "rational rotation of period {period}: closed-form projection only for Fourier polynomials"
                ))),
            },
            InvariantFactor::SecondCoordinateFiber => unreachable!("handled above"),
        }
    }

    /// Draws a point from the invariant measure.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        match self {
            SystemSpec::Identity | SystemSpec::CircleRotation(_) | SystemSpec::DoublingMap => {
                Point::Circle(rng.gen::<f64>())
            }
            SystemSpec::ProductRotationIdentity(_) => Point::Torus2([rng.gen::<f64>(), rng.gen::<f64>()]),
            SystemSpec::ShiftBernoulli(w) => Point::Symbolic(SymbolPoint::lazy(rng.next_u64(), w.clone())),
        }
    }

    /// `count` points drawn from the invariant measure with a named seed.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| self.sample_point(&mut rng)).collect()
    }

    /// Distance between two points of the underlying torus, used by tests of
    /// the semigroup law.
    pub fn point_gap(&self, a: &Point, b: &Point) -> f64 {
        match (a, b) {
            (Point::Circle(u), Point::Circle(v)) => circle_distance(*u, *v),
            (Point::Torus2(u), Point::Torus2(v)) => circle_distance(u[0], v[0]).max(circle_distance(u[1], v[1])),
            (Point::Symbolic(u), Point::Symbolic(v)) => {
                if u.offset == v.offset && u.seed == v.seed && u.prefix == v.prefix {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            _ => f64::INFINITY,
        }
    }
}

fn double_mod1(mut v: f64, power: u64) -> f64 {
    for _ in 0..power {
        if v == 0.0 {
            break;
        }
        v = mod1(2.0 * v);
    }
    v
}

fn fiber_projection(f: &Observable) -> Result<Observable> {
    if f.constant_value().is_some() {
        return Ok(f.clone());
    }
    match f {
        Observable::Tensor(first, second) => Ok(Observable::tensor(Observable::constant(first.mean()?), (**second).clone())),
        Observable::Combination(terms) => {
            let mut out = Vec::with_capacity(terms.len());
            for (c, t) in terms {
                out.push((*c, fiber_projection(t)?));
            }
            Ok(Observable::Combination(out))
        }
        other => Err(Error::UnsupportedFactor(format!(
            "fiber projection needs tensor-product observables, got {}",
            other.kind_name()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn rotation_by_half_has_period_two() {
        let s = SystemSpec::CircleRotation(Angle::rational(1, 2).unwrap());
        assert_eq!(s.apply(&Point::circle(0.25), 2).unwrap(), Point::Circle(0.25));
    }

    #[test]
    fn doubling_examples() {
        let s = SystemSpec::DoublingMap;
        let once = s.apply(&Point::circle(0.3), 1).unwrap().as_circle().unwrap();
        assert!((once - 0.6).abs() < 1e-15);
        // oracle: three single applications
        let mut p = Point::circle(0.3);
        for _ in 0..3 {
            p = s.apply(&p, 1).unwrap();
        }
        let thrice = s.apply(&Point::circle(0.3), 3).unwrap();
        assert_eq!(p, thrice);
        assert!((thrice.as_circle().unwrap() - 0.4).abs() < 1e-14);
    }

    #[test]
    fn zero_angle_rotation_behaves_as_identity() {
        let rot = SystemSpec::CircleRotation(Angle::rational(0, 1).unwrap());
        for x in [0.0, 0.1, 0.77] {
            assert_eq!(rot.apply(&Point::circle(x), 17).unwrap(), SystemSpec::Identity.apply(&Point::circle(x), 17).unwrap());
        }
        assert_eq!(rot.certificate().factor, InvariantFactor::FullFunction);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let s = SystemSpec::ProductRotationIdentity(Angle::sqrt2_minus_1());
        assert!(matches!(s.apply(&Point::circle(0.1), 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn bernoulli_weights_validated() {
        assert!(BernoulliWeights::new(vec![0.5, 0.4]).is_err());
        assert!(BernoulliWeights::new(vec![0.5, 0.5]).is_ok());
        assert!(BernoulliWeights::new(vec![0.3, 0.3, 0.4 + 1e-13]).is_ok());
    }

    #[test]
    fn angle_parsing() {
        assert!(Angle::parse("sqrt2_minus_1", None).unwrap().is_irrational());
        let q = Angle::parse("2/8", None).unwrap();
        assert_eq!(q.arithmetic(), &AngleArithmetic::Rational { p: 1, q: 4 });
        let d = Angle::parse("0.25", Some(false)).unwrap();
        assert_eq!(d.arithmetic(), &AngleArithmetic::Rational { p: 1, q: 4 });
        assert!(Angle::parse("0.25", None).is_err());
        assert!(Angle::from_decimal(SQRT2_MINUS_1, false).is_err());
    }

    #[test]
    fn shift_symbols_are_reproducible_and_shift_exactly() {
        let w = BernoulliWeights::new(vec![0.3, 0.7]).unwrap();
        let p = SymbolPoint::lazy(42, w.clone());
        let q = SymbolPoint::lazy(42, w.clone());
        assert_eq!(p.symbols(64).unwrap(), q.symbols(64).unwrap());
        let s = SystemSpec::ShiftBernoulli(w);
        let shifted = s.apply(&Point::Symbolic(p.clone()), 5).unwrap();
        let Point::Symbolic(sh) = shifted else { panic!() };
        for i in 0..20 {
            assert_eq!(sh.symbol(i).unwrap(), p.symbol(i + 5).unwrap());
        }
        let ones = p.symbols(4000).unwrap().iter().filter(|s| **s == 1).count() as f64 / 4000.0;
        assert!((ones - 0.7).abs() < 0.05);
    }

    #[test]
    fn finite_prefix_runs_out() {
        let w = BernoulliWeights::uniform(2).unwrap();
        let p = SymbolPoint::finite(vec![0, 1, 1], w).unwrap();
        assert_eq!(p.symbol(2).unwrap(), 1);
        assert_eq!(p.symbol(3), Err(Error::InsufficientPrefix { level: 4 }));
    }

    #[test]
    fn invariant_projection_examples() {
        let rot = SystemSpec::CircleRotation(Angle::sqrt2_minus_1());
        let f = Observable::fourier(&[(0, Complex64::new(3.0, 0.0)), (1, Complex64::new(0.5, 0.0)), (-1, Complex64::new(0.5, 0.0))]);
        let p = rot.invariant_projection(&f).unwrap();
        assert_eq!(p.evaluate(&Point::circle(0.3)).unwrap(), Complex64::new(3.0, 0.0));
        assert_eq!(SystemSpec::Identity.invariant_projection(&f).unwrap(), f);
        // idempotent
        assert_eq!(rot.invariant_projection(&p).unwrap(), p);
    }

    #[test]
    fn rational_rotation_projection_keeps_multiples_of_period() {
        let rot = SystemSpec::CircleRotation(Angle::rational(1, 3).unwrap());
        let one = Complex64::new(1.0, 0.0);
        let f = Observable::fourier(&[(0, one), (1, one), (3, one), (-6, one)]);
        let Observable::Fourier(p) = rot.invariant_projection(&f).unwrap() else { panic!() };
        let freqs: Vec<i64> = p.frequencies().collect();
        assert_eq!(freqs, vec![-6, 0, 3]);
    }
}
