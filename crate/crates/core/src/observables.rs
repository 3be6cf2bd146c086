//! Test functions with exact pointwise evaluation and exact integrals over
//! arcs of the circle.
//!
//! All one-dimensional observables are 1-periodic. Integrals are taken over
//! arcs `[start, start + len)` of arbitrary (possibly long) length: the full
//! periods contribute `floor(len) * mean` and the remainder is integrated in
//! closed form. That is what lets compositions with the doubling map be
//! integrated exactly (see `geometry::integrate_composed`).

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{circle_distance, gauss_legendre, integrate_adaptive, mod1, sinc, turn};
use crate::systems::Point;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Trigonometric polynomial `sum_m c_m e^{2 pi i m x}`. Zero coefficients are
/// never stored, so equal polynomials compare equal.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierPoly {
    coeffs: BTreeMap<i64, Complex64>,
}

impl FourierPoly {
    pub fn new(terms: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut coeffs = BTreeMap::new();
        for (m, c) in terms {
            *coeffs.entry(m).or_insert(ZERO) += c;
        }
        coeffs.retain(|_, c| *c != ZERO);
        Self { coeffs }
    }

    pub fn coefficient(&self, m: i64) -> Complex64 {
        self.coeffs.get(&m).copied().unwrap_or(ZERO)
    }

    /// Frequencies with a nonzero coefficient, ascending.
    pub fn frequencies(&self) -> impl Iterator<Item = i64> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.coeffs.iter().map(|(m, c)| (*m, *c))
    }

    pub fn filter(&self, keep: impl Fn(i64) -> bool) -> Self {
        Self {
            coeffs: self.coeffs.iter().filter(|(m, _)| keep(**m)).map(|(m, c)| (*m, *c)).collect(),
        }
    }

    /// Multiplies every coefficient by `weight(m)`.
    pub fn map_coefficients(&self, weight: impl Fn(i64) -> Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|(m, c)| (*m, c * weight(*m))))
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.keys().all(|m| *m == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn evaluate(&self, x: f64) -> Complex64 {
        self.terms().map(|(m, c)| c * turn(phase(m, x))).sum()
    }

    /// `int_s^{s + len} p` for `len <= 1`.
    fn local_integral(&self, s: f64, len: f64) -> Complex64 {
        self.terms()
            .map(|(m, c)| {
                if m == 0 {
                    c * len
                } else {
                    let mid = mod1(phase(m, s) + phase(m, 0.5 * len));
                    c * turn(mid) * (len * sinc(PI * m as f64 * len))
                }
            })
            .sum()
    }

    fn l1_bound(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm()).sum()
    }
}

/// Fractional part of `m * x` for a signed integer frequency.
fn phase(m: i64, x: f64) -> f64 {
    let p = crate::numeric::frac_mul(m.unsigned_abs(), x);
    if m < 0 {
        mod1(-p)
    } else {
        p
    }
}

/// Step function on the circle: `values[i]` on `[breakpoints[i], breakpoints[i + 1])`,
/// and the last value wraps around through 0 to the first breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    breakpoints: Vec<f64>,
    values: Vec<Complex64>,
}

impl PiecewiseConstant {
    pub fn new(breakpoints: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::InvalidInput(
                "piecewise constant needs one value per breakpoint".into(),
            ));
        }
        if breakpoints.iter().any(|b| !(0.0..1.0).contains(b)) {
            return Err(Error::InvalidInput("breakpoints must lie in [0, 1)".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// The pieces as arcs `(start, len, value)`.
    fn arcs(&self) -> impl Iterator<Item = (f64, f64, Complex64)> + '_ {
        let n = self.breakpoints.len();
        (0..n).map(move |i| {
            let s = self.breakpoints[i];
            let len = if i + 1 < n {
                self.breakpoints[i + 1] - s
            } else {
                1.0 - s + self.breakpoints[0]
            };
            (s, len, self.values[i])
        })
    }

    fn evaluate(&self, x: f64) -> Complex64 {
        let idx = self.breakpoints.partition_point(|b| *b <= x);
        if idx == 0 {
            *self.values.last().expect("nonempty")
        } else {
            self.values[idx - 1]
        }
    }
}

/// Length of the intersection of two arcs of the circle. Starts lie in
/// `[0, 1)`, lengths in `[0, 1]`. When the first arc lies inside the second
/// its own length is returned exactly.
pub fn arc_overlap(s1: f64, l1: f64, s2: f64, l2: f64) -> f64 {
    let e1 = s1 + l1;
    let mut total = 0.0;
    for k in [-1.0, 0.0, 1.0] {
        let a = s2 + k;
        let b = a + l2;
        if s1 >= a && e1 <= b {
            return l1;
        }
        if a >= s1 && b <= e1 {
            total += l2;
            continue;
        }
        let lo = s1.max(a);
        let hi = e1.min(b);
        if hi > lo {
            total += hi - lo;
        }
    }
    total
}

/// A test function on the circle (or, through [`Observable::Tensor`], on the
/// 2-torus).
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    Fourier(FourierPoly),
    PiecewiseConstant(PiecewiseConstant),
    /// Indicator of the arc `[lo, lo + len)`.
    Indicator { lo: f64, len: f64 },
    /// `min(d(x, center)^(-exponent), cap)`; without a cap this is unbounded.
    PowerSingularity { exponent: f64, center: f64, cap: Option<f64> },
    /// `f(x) = x` on `[0, 1)`.
    Sawtooth,
    /// `f(x, y) = first(x) * second(y)` on the 2-torus.
    Tensor(Box<Observable>, Box<Observable>),
    Combination(Vec<(Complex64, Observable)>),
    /// Pointwise modulus of a signed or complex observable; integrated by quadrature.
    Modulus(Box<Observable>),
}

impl Observable {
    pub fn constant(c: impl Into<Complex64>) -> Self {
        Observable::Fourier(FourierPoly::new([(0, c.into())]))
    }

    pub fn fourier(terms: &[(i64, Complex64)]) -> Self {
        Observable::Fourier(FourierPoly::new(terms.iter().copied()))
    }

    /// `cos(2 pi m x)`.
    pub fn cosine(m: i64) -> Self {
        Self::fourier(&[(m, real(0.5)), (-m, real(0.5))])
    }

    /// `e^{2 pi i m x}`.
    pub fn character(m: i64) -> Self {
        Self::fourier(&[(m, real(1.0))])
    }

    /// Indicator of `[lo, hi)`; `hi < lo` wraps through 0.
    pub fn indicator(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo == hi {
            return Err(Error::InvalidInput(format!("bad indicator interval [{lo}, {hi})")));
        }
        let len = if hi > lo { hi - lo } else { 1.0 - lo + hi };
        Ok(Observable::Indicator { lo, len })
    }

    pub fn power_singularity(exponent: f64, center: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent.is_finite()) {
            return Err(Error::InvalidInput(format!("power exponent {exponent} must be positive")));
        }
        Ok(Observable::PowerSingularity {
            exponent,
            center: mod1(center),
            cap: None,
        })
    }

    pub fn piecewise_constant(breakpoints: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        Ok(Observable::PiecewiseConstant(PiecewiseConstant::new(breakpoints, values)?))
    }

    pub fn tensor(first: Observable, second: Observable) -> Self {
        Observable::Tensor(Box::new(first), Box::new(second))
    }

    pub fn combination(terms: Vec<(Complex64, Observable)>) -> Self {
        Observable::Combination(terms)
    }

    /// `min(|f|, level)`, the truncation used as the bounded approximant of
    /// an unbounded observable. Only singular powers are affected.
    pub fn truncated(&self, level: f64) -> Result<Self> {
        match self {
            Observable::PowerSingularity { exponent, center, cap } => Ok(Observable::PowerSingularity {
                exponent: *exponent,
                center: *center,
                cap: Some(cap.map_or(level, |c| c.min(level))),
            }),
            other if other.sup_bound().is_some() => Ok(other.clone()),
            other => Err(Error::Unsupported(format!("truncation of {}", other.kind_name()))),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Observable::Fourier(_) => "fourier",
            Observable::PiecewiseConstant(_) => "piecewise_constant",
            Observable::Indicator { .. } => "indicator",
            Observable::PowerSingularity { .. } => "power_singularity",
            Observable::Sawtooth => "sawtooth",
            Observable::Tensor(..) => "tensor",
            Observable::Combination(_) => "combination",
            Observable::Modulus(_) => "modulus",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Observable::Tensor(..) => 2,
            Observable::Combination(terms) => terms.iter().map(|(_, t)| t.dimension()).max().unwrap_or(1),
            Observable::Modulus(inner) => inner.dimension(),
            _ => 1,
        }
    }

    /// Constant observables are accepted on every space.
    pub fn constant_value(&self) -> Option<Complex64> {
        match self {
            Observable::Fourier(p) if p.is_constant() => Some(p.coefficient(0)),
            _ => None,
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            Observable::Indicator { .. }
            | Observable::PowerSingularity { .. }
            | Observable::Sawtooth
            | Observable::Modulus(_) => true,
            Observable::Fourier(p) => p.is_constant() && {
                let c = p.coefficient(0);
                c.im == 0.0 && c.re >= 0.0
            },
            Observable::PiecewiseConstant(pc) => pc.values.iter().all(|v| v.im == 0.0 && v.re >= 0.0),
            Observable::Tensor(a, b) => a.is_nonnegative() && b.is_nonnegative(),
            Observable::Combination(terms) => terms
                .iter()
                .all(|(c, t)| c.im == 0.0 && c.re >= 0.0 && t.is_nonnegative()),
        }
    }

    /// `|f|`, in closed form where possible.
    pub fn modulus(&self) -> Self {
        if self.is_nonnegative() {
            return self.clone();
        }
        match self {
            Observable::Fourier(p) if p.is_constant() => Self::constant(p.coefficient(0).norm()),
            Observable::PiecewiseConstant(pc) => Observable::PiecewiseConstant(PiecewiseConstant {
                breakpoints: pc.breakpoints.clone(),
                values: pc.values.iter().map(|v| real(v.norm())).collect(),
            }),
            Observable::Tensor(a, b) => Self::tensor(a.modulus(), b.modulus()),
            other => Observable::Modulus(Box::new(other.clone())),
        }
    }

    /// Upper bound on `sup |f|`; `None` for unbounded observables. Attained
    /// for indicators, step functions and single-frequency polynomials.
    pub fn sup_bound(&self) -> Option<f64> {
        match self {
            Observable::Fourier(p) => Some(p.l1_bound()),
            Observable::PiecewiseConstant(pc) => pc.values.iter().map(|v| v.norm()).reduce(f64::max),
            Observable::Indicator { .. } | Observable::Sawtooth => Some(1.0),
            Observable::PowerSingularity { cap, .. } => *cap,
            Observable::Tensor(a, b) => Some(a.sup_bound()? * b.sup_bound()?),
            Observable::Combination(terms) => {
                let mut total = 0.0;
                for (c, t) in terms {
                    total += c.norm() * t.sup_bound()?;
                }
                Some(total)
            }
            Observable::Modulus(inner) => inner.sup_bound(),
        }
    }

    /// Points where the observable is discontinuous or singular.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = match self {
            Observable::Fourier(_) | Observable::Tensor(..) => Vec::new(),
            Observable::PiecewiseConstant(pc) => pc.breakpoints.clone(),
            Observable::Indicator { lo, len } => vec![*lo, mod1(lo + len)],
            Observable::PowerSingularity { exponent, center, cap } => match cap {
                Some(m) if m.powf(-1.0 / exponent) < 0.5 => {
                    let u0 = m.powf(-1.0 / exponent);
                    vec![*center, mod1(center - u0), mod1(center + u0)]
                }
                _ => vec![*center],
            },
            Observable::Sawtooth => vec![0.0],
            Observable::Combination(terms) => terms.iter().flat_map(|(_, t)| t.breakpoints()).collect(),
            Observable::Modulus(inner) => inner.breakpoints(),
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    pub fn evaluate(&self, x: &Point) -> Result<Complex64> {
        if let Some(c) = self.constant_value() {
            return Ok(c);
        }
        match x {
            Point::Circle(v) => self.evaluate_circle(*v),
            Point::Symbolic(s) => self.evaluate_circle(s.coordinate()?),
            Point::Torus2([u, v]) => self.evaluate_torus(*u, *v),
        }
    }

    pub fn evaluate_circle(&self, x: f64) -> Result<Complex64> {
        Ok(match self {
            Observable::Fourier(p) => p.evaluate(x),
            Observable::PiecewiseConstant(pc) => pc.evaluate(x),
            Observable::Indicator { lo, len } => real(if mod1(x - lo) < *len { 1.0 } else { 0.0 }),
            Observable::PowerSingularity { exponent, center, cap } => {
                let d = circle_distance(x, *center);
                if d == 0.0 {
                    match cap {
                        Some(m) => real(*m),
                        None => return Err(Error::SingularPoint { step: None }),
                    }
                } else {
                    let v = d.powf(-exponent);
                    real(cap.map_or(v, |m| v.min(m)))
                }
            }
            Observable::Sawtooth => real(mod1(x)),
            Observable::Tensor(..) => {
                return Err(Error::DimensionMismatch { expected: 2, found: 1 });
            }
            Observable::Combination(terms) => {
                let mut total = ZERO;
                for (c, t) in terms {
                    total += c * t.evaluate_circle(x)?;
                }
                total
            }
            Observable::Modulus(inner) => real(inner.evaluate_circle(x)?.norm()),
        })
    }

    fn evaluate_torus(&self, u: f64, v: f64) -> Result<Complex64> {
        if let Some(c) = self.constant_value() {
            return Ok(c);
        }
        match self {
            Observable::Tensor(a, b) => Ok(a.evaluate_circle(u)? * b.evaluate_circle(v)?),
            Observable::Combination(terms) => {
                let mut total = ZERO;
                for (c, t) in terms {
                    total += c * t.evaluate_torus(u, v)?;
                }
                Ok(total)
            }
            Observable::Modulus(inner) => Ok(real(inner.evaluate_torus(u, v)?.norm())),
            _ => Err(Error::DimensionMismatch { expected: 1, found: 2 }),
        }
    }

    /// `int f dmu` over the circle (or torus).
    pub fn mean(&self) -> Result<Complex64> {
        Ok(match self {
            Observable::Fourier(p) => p.coefficient(0),
            Observable::PiecewiseConstant(pc) => pc.arcs().map(|(_, l, v)| v * l).sum(),
            Observable::Indicator { len, .. } => real(*len),
            Observable::PowerSingularity { exponent, cap, .. } => real(2.0 * power_primitive(*exponent, *cap, 0.5)?),
            Observable::Sawtooth => real(0.5),
            Observable::Tensor(a, b) => a.mean()? * b.mean()?,
            Observable::Combination(terms) => {
                let mut total = ZERO;
                for (c, t) in terms {
                    total += c * t.mean()?;
                }
                total
            }
            Observable::Modulus(_) => self.quadrature(0.0, 1.0)?,
        })
    }

    /// `int_lo^hi f`; `hi < lo` integrates across 0.
    pub fn integrate_interval(&self, lo: f64, hi: f64) -> Result<Complex64> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo == hi {
            return Err(Error::InvalidInput(format!("bad interval [{lo}, {hi}]")));
        }
        if hi > lo {
            self.integral_from(lo, hi - lo)
        } else {
            self.integral_from(lo, 1.0 - lo + hi)
        }
    }

    /// `int_start^{start + len} f` for any `len >= 0` (the observable is periodic).
    pub fn integral_from(&self, start: f64, len: f64) -> Result<Complex64> {
        if !(len >= 0.0 && len.is_finite() && start.is_finite()) {
            return Err(Error::InvalidInput(format!("bad arc ({start}, {len})")));
        }
        if let Some(c) = self.constant_value() {
            return Ok(c * len);
        }
        if self.dimension() != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: self.dimension() });
        }
        let periods = len.floor();
        let rest = len - periods;
        let mut total = if periods > 0.0 { self.mean()? * periods } else { ZERO };
        if rest > 0.0 {
            total += self.local_integral(mod1(start), rest)?;
        }
        Ok(total)
    }

    /// Integral over the box `arc_x * arc_y` of the 2-torus.
    pub fn integral_box(&self, x: (f64, f64), y: (f64, f64)) -> Result<Complex64> {
        if let Some(c) = self.constant_value() {
            return Ok(c * (x.1 * y.1));
        }
        match self {
            Observable::Tensor(a, b) => Ok(a.integral_from(x.0, x.1)? * b.integral_from(y.0, y.1)?),
            Observable::Combination(terms) => {
                let mut total = ZERO;
                for (c, t) in terms {
                    total += c * t.integral_box(x, y)?;
                }
                Ok(total)
            }
            Observable::Modulus(inner) => match &**inner {
                Observable::Tensor(a, b) => Self::tensor(a.modulus(), b.modulus()).integral_box(x, y),
                _ => Err(Error::Unsupported("modulus of a non-product observable on the torus".into())),
            },
            _ => Err(Error::DimensionMismatch { expected: 2, found: 1 }),
        }
    }

    /// `int_s^{s + len} f` with `s` in `[0, 1)` and `0 < len < 1`.
    fn local_integral(&self, s: f64, len: f64) -> Result<Complex64> {
        Ok(match self {
            Observable::Fourier(p) => p.local_integral(s, len),
            Observable::PiecewiseConstant(pc) => pc.arcs().map(|(b, l, v)| v * arc_overlap(s, len, b, l)).sum(),
            Observable::Indicator { lo, len: l } => real(arc_overlap(s, len, *lo, *l)),
            Observable::PowerSingularity { exponent, center, cap } => {
                real(power_local(*exponent, *center, *cap, s, len)?)
            }
            Observable::Sawtooth => {
                let e = s + len;
                if e <= 1.0 {
                    real(len * (s + 0.5 * len))
                } else {
                    let tail = e - 1.0;
                    real(0.5 * (1.0 - s) * (1.0 + s) + 0.5 * tail * tail)
                }
            }
            Observable::Combination(terms) => {
                let mut total = ZERO;
                for (c, t) in terms {
                    total += c * t.local_integral(s, len)?;
                }
                total
            }
            Observable::Modulus(_) => self.quadrature(s, s + len)?,
            Observable::Tensor(..) => return Err(Error::DimensionMismatch { expected: 1, found: 2 }),
        })
    }

    /// Adaptive quadrature on `[a, b]` (with `b - a <= 1`), split at the
    /// breakpoints so that no node sits on a singularity.
    pub fn quadrature(&self, a: f64, b: f64) -> Result<Complex64> {
        let mut cuts = vec![a, b];
        for p in self.breakpoints() {
            for shift in [-1.0, 0.0, 1.0, 2.0] {
                let c = p + shift;
                if c > a && c < b {
                    cuts.push(c);
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        let mut total = ZERO;
        for w in cuts.windows(2) {
            let q = integrate_adaptive(|t| self.evaluate_circle(mod1(t)), w[0], w[1], 1e-13, 1e-11)?;
            total += q.value;
        }
        Ok(total)
    }

    /// Errors unless `f` lies in `L^p`.
    pub fn check_lp(&self, p: f64) -> Result<()> {
        match self {
            Observable::PowerSingularity { exponent, cap: None, .. } if exponent * p >= 1.0 => {
                Err(Error::NotInLp { exponent: *exponent, p })
            }
            Observable::Tensor(a, b) => {
                a.check_lp(p)?;
                b.check_lp(p)
            }
            Observable::Combination(terms) => terms.iter().try_for_each(|(_, t)| t.check_lp(p)),
            Observable::Modulus(inner) => inner.check_lp(p),
            _ => Ok(()),
        }
    }

    /// `(int |f|^p)^(1/p)`.
    pub fn p_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::InvalidInput(format!("p = {p} must be finite and at least 1")));
        }
        self.check_lp(p)?;
        if let Some(c) = self.constant_value() {
            return Ok(c.norm());
        }
        match self {
            Observable::Fourier(poly) => {
                let terms: Vec<_> = poly.terms().collect();
                if terms.len() == 1 {
                    Ok(terms[0].1.norm())
                } else if p == 2.0 {
                    Ok(terms.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt())
                } else {
                    self.quadrature_norm(p)
                }
            }
            Observable::PiecewiseConstant(pc) => {
                Ok(pc.arcs().map(|(_, l, v)| l * v.norm().powf(p)).sum::<f64>().powf(1.0 / p))
            }
            Observable::Indicator { len, .. } => Ok(len.powf(1.0 / p)),
            Observable::PowerSingularity { exponent, cap, .. } => {
                let integral = 2.0 * power_primitive(exponent * p, cap.map(|m| m.powf(p)), 0.5)?;
                Ok(integral.powf(1.0 / p))
            }
            Observable::Sawtooth => Ok((1.0 / (p + 1.0)).powf(1.0 / p)),
            Observable::Tensor(a, b) => Ok(a.p_norm(p)? * b.p_norm(p)?),
            Observable::Combination(_) | Observable::Modulus(_) => {
                if self.dimension() != 1 {
                    return Err(Error::Unsupported("p-norm of a non-product observable on the torus".into()));
                }
                self.quadrature_norm(p)
            }
        }
    }

    fn quadrature_norm(&self, p: f64) -> Result<f64> {
        let mut cuts = vec![0.0, 1.0];
        cuts.extend(self.breakpoints().into_iter().filter(|c| *c > 0.0 && *c < 1.0));
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let q = integrate_adaptive(
                |t| Ok(real(self.evaluate_circle(t)?.norm().powf(p))),
                w[0],
                w[1],
                1e-14,
                1e-10,
            )?;
            total += q.value.re;
        }
        Ok(total.powf(1.0 / p))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        match self {
            Observable::Fourier(p) => Observable::Fourier(p.map_coefficients(|_| c)),
            other => Observable::Combination(vec![(c, other.clone())]),
        }
    }
}

/// `G(s) = int_0^s min(u^(-a), cap) du` for `0 <= s <= 1/2`.
fn power_primitive(a: f64, cap: Option<f64>, s: f64) -> Result<f64> {
    match cap {
        None => {
            if a >= 1.0 {
                return Err(Error::Divergent { exponent: a });
            }
            Ok(s.powf(1.0 - a) / (1.0 - a))
        }
        Some(m) => {
            // u^(-a) exceeds the cap below u0
            let u0 = m.powf(-1.0 / a);
            if s <= u0 {
                Ok(m * s)
            } else if (a - 1.0).abs() < 1e-15 {
                Ok(m * u0 + (s / u0).ln())
            } else {
                Ok(m * u0 + (s.powf(1.0 - a) - u0.powf(1.0 - a)) / (1.0 - a))
            }
        }
    }
}

/// Primitive of the periodic singular power on one period, measured from
/// the center: `H(t) = int_0^t g(d(u, 0)) du` for `t` in `[0, 1]`.
fn power_period_primitive(a: f64, cap: Option<f64>, t: f64) -> Result<f64> {
    if t <= 0.5 {
        power_primitive(a, cap, t)
    } else {
        Ok(2.0 * power_primitive(a, cap, 0.5)? - power_primitive(a, cap, 1.0 - t)?)
    }
}

fn power_local(a: f64, center: f64, cap: Option<f64>, s: f64, len: f64) -> Result<f64> {
    if cap.is_none() && a >= 1.0 {
        return Err(Error::Divergent { exponent: a });
    }
    let t = mod1(s - center);
    let end = t + len;
    // distance from the arc to the singularity (which sits at t = 0 and t = 1)
    let gap = if end < 1.0 { t.min(1.0 - end) } else { 0.0 };
    if gap > 0.0 && len < 1e-3 * gap {
        // small arc far from the center: differencing primitives would cancel
        let rule = gauss_legendre(8);
        let half = 0.5 * len;
        let mid = t + half;
        let total: f64 = rule
            .iter()
            .map(|(x, w)| {
                let u = mid + half * x;
                let d = u.min(1.0 - u);
                let v = d.powf(-a);
                w * cap.map_or(v, |m| v.min(m))
            })
            .sum();
        return Ok(half * total);
    }
    if end <= 1.0 {
        Ok(power_period_primitive(a, cap, end)? - power_period_primitive(a, cap, t)?)
    } else {
        Ok(power_period_primitive(a, cap, 1.0)? - power_period_primitive(a, cap, t)?
            + power_period_primitive(a, cap, end - 1.0)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> Complex64 {
        real(re)
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(Observable::constant(2.0).evaluate(&Point::circle(0.7)).unwrap(), c(2.0));
        let ind = Observable::indicator(0.0, 0.5).unwrap();
        assert_eq!(ind.evaluate(&Point::circle(0.25)).unwrap(), c(1.0));
        assert_eq!(ind.evaluate(&Point::circle(0.5)).unwrap(), c(0.0));
        let pw = Observable::power_singularity(0.5, 0.0).unwrap();
        assert_eq!(pw.evaluate(&Point::circle(0.25)).unwrap(), c(2.0));
        assert_eq!(pw.evaluate(&Point::circle(0.0)), Err(Error::SingularPoint { step: None }));
    }

    #[test]
    fn integrate_examples() {
        let one = Observable::constant(1.0);
        assert_abs_diff_eq!(one.integrate_interval(0.2, 0.9).unwrap().re, 0.7, epsilon = 1e-15);
        assert!(Observable::character(1).integrate_interval(0.0, 1.0).unwrap().norm() < 1e-15);
        let pw = Observable::power_singularity(0.5, 0.0).unwrap();
        assert_abs_diff_eq!(pw.integrate_interval(0.0, 0.25).unwrap().re, 1.0, epsilon = 1e-14);
        let div = Observable::power_singularity(1.0, 0.0).unwrap();
        assert!(matches!(div.integrate_interval(0.0, 0.25), Err(Error::Divergent { .. })));
    }

    #[test]
    fn power_integral_matches_quadrature_away_from_center() {
        let pw = Observable::power_singularity(0.4, 0.3).unwrap();
        for (lo, hi) in [(0.35, 0.9), (0.31, 0.3100001), (0.8, 0.1), (0.0, 0.29)] {
            let exact = pw.integrate_interval(lo, hi).unwrap().re;
            let hi_unrolled = if hi > lo { hi } else { hi + 1.0 };
            let quad = pw.quadrature(lo, hi_unrolled).unwrap().re;
            assert!((exact - quad).abs() <= 1e-9 * quad.abs().max(1e-3), "{lo} {hi}: {exact} vs {quad}");
        }
    }

    #[test]
    fn wrapping_arc_integrals() {
        let ind = Observable::indicator(0.9, 0.1).unwrap();
        assert_abs_diff_eq!(ind.integral_from(0.95, 0.3).unwrap().re, 0.15, epsilon = 1e-15);
        assert_abs_diff_eq!(ind.mean().unwrap().re, 0.2, epsilon = 1e-15);
        let saw = Observable::Sawtooth;
        assert_abs_diff_eq!(saw.integral_from(0.75, 0.5).unwrap().re, 0.21875 + 0.03125, epsilon = 1e-14);
    }

    #[test]
    fn long_arcs_count_full_periods() {
        let f = Observable::cosine(3);
        let v = f.integral_from(0.1, 7.25).unwrap();
        let w = f.integral_from(0.1, 0.25).unwrap();
        assert_abs_diff_eq!(v.re, w.re, epsilon = 1e-14);
    }

    #[test]
    fn norms() {
        assert_eq!(Observable::constant(-3.0).p_norm(1.5).unwrap(), 3.0);
        assert_abs_diff_eq!(Observable::indicator(0.0, 0.25).unwrap().p_norm(1.0).unwrap(), 0.25);
        assert_abs_diff_eq!(Observable::character(1).p_norm(2.0).unwrap(), 1.0);
        let cosine = Observable::cosine(1);
        assert_abs_diff_eq!(cosine.p_norm(2.0).unwrap(), 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(cosine.p_norm(1.0).unwrap(), 2.0 / PI, epsilon = 1e-10);
        let pw = Observable::power_singularity(0.4, 0.0).unwrap();
        assert!(matches!(pw.p_norm(3.0), Err(Error::NotInLp { .. })));
        // quadrature away from the center plus the closed-form tail near it
        let eps = 1e-6;
        let q = integrate_adaptive(|t: f64| Ok(real(t.powf(-0.8))), eps, 0.5, 1e-14, 1e-12).unwrap();
        let oracle = (2.0 * (q.value.re + eps.powf(0.2) / 0.2)).sqrt();
        assert!((pw.p_norm(2.0).unwrap() - oracle).abs() < 1e-8);
    }

    #[test]
    fn means_agree_with_quadrature() {
        let cases = vec![
            Observable::fourier(&[(0, c(2.0)), (1, c(0.5)), (-3, Complex64::new(0.0, 0.25))]),
            Observable::indicator(0.8, 0.3).unwrap(),
            Observable::piecewise_constant(vec![0.1, 0.4, 0.7], vec![c(1.0), c(-2.0), c(0.5)]).unwrap(),
            Observable::power_singularity(0.3, 0.6).unwrap(),
            Observable::Sawtooth,
            Observable::power_singularity(0.7, 0.2).unwrap().truncated(5.0).unwrap(),
        ];
        for f in cases {
            let closed = f.mean().unwrap();
            let quad = f.quadrature(0.0, 1.0).unwrap();
            assert!((closed - quad).norm() < 1e-9, "{}: {closed} vs {quad}", f.kind_name());
        }
    }

    #[test]
    fn sup_bound_attained_on_grid() {
        let cases = vec![
            Observable::cosine(1),
            Observable::indicator(0.2, 0.3).unwrap(),
            Observable::piecewise_constant(vec![0.0, 0.5], vec![c(1.0), c(-4.0)]).unwrap(),
            Observable::constant(2.5),
        ];
        for f in cases {
            let grid_max = (0..10_000)
                .map(|i| f.evaluate_circle(i as f64 / 1e4).unwrap().norm())
                .fold(0.0, f64::max);
            assert!((grid_max - f.sup_bound().unwrap()).abs() < 1e-6);
        }
        assert_eq!(Observable::power_singularity(0.2, 0.0).unwrap().sup_bound(), None);
    }

    #[test]
    fn tensor_box_integral_factorizes() {
        let f = Observable::tensor(Observable::cosine(1), Observable::Sawtooth);
        let v = f.integral_box((0.0, 0.25), (0.0, 0.5)).unwrap();
        assert_abs_diff_eq!(v.re, (1.0 / (2.0 * PI)) * 0.125, epsilon = 1e-15);
        assert_eq!(f.evaluate(&Point::torus2(0.0, 0.5)).unwrap(), c(0.5));
    }
}
