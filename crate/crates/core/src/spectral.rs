//! Point spectrum, Gauss coefficients and the predicted limit of averages
//! along the squares.
//!
//! For a rotation by `alpha` the character `e^{2 pi i m x}` is an
//! eigenfunction with eigenvalue `e^{2 pi i m alpha}`, so every eigenspace
//! projection of a trigonometric polynomial is a sub-polynomial. The doubling
//! map and Bernoulli shifts are weakly mixing: their point spectrum is `{1}`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{frac_mul, turn, CompensatedSum};
use crate::observables::{FourierPoly, Observable};
use crate::systems::{gcd, AngleArithmetic, SystemSpec};

/// Irrational eigenvalue angles closer than this are identified.
pub const ANGLE_TOLERANCE: f64 = 1e-12;

/// A unit eigenvalue `e^{2 pi i theta}` tagged with the arithmetic of `theta`.
#[derive(Debug, Clone, PartialEq)]
pub enum EigenTag {
    One,
    /// `theta = p / q` in lowest terms, `0 < p < q`.
    RationalAngle { p: u64, q: u64 },
    IrrationalAngle { angle: f64, name: String },
}

impl EigenTag {
    pub fn rational(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        let p = p.rem_euclid(q as i64) as u64;
        if p == 0 {
            return Ok(EigenTag::One);
        }
        let g = gcd(p, q);
        Ok(EigenTag::RationalAngle { p: p / g, q: q / g })
    }

    pub fn angle(&self) -> f64 {
        match self {
            EigenTag::One => 0.0,
            EigenTag::RationalAngle { p, q } => *p as f64 / *q as f64,
            EigenTag::IrrationalAngle { angle, .. } => *angle,
        }
    }

    pub fn value(&self) -> Complex64 {
        turn(self.angle())
    }

    pub fn label(&self) -> String {
        match self {
            EigenTag::One => "1".into(),
            EigenTag::RationalAngle { p, q } => format!("e(2pi i {p}/{q})"),
            EigenTag::IrrationalAngle { name, .. } => format!("e(2pi i {name})"),
        }
    }

    /// Same eigenvalue (irrational angles compared within [`ANGLE_TOLERANCE`]).
    pub fn matches(&self, other: &EigenTag) -> bool {
        match (self, other) {
            (EigenTag::IrrationalAngle { angle: a, .. }, EigenTag::IrrationalAngle { angle: b, .. }) => {
                crate::numeric::circle_distance(*a, *b) <= ANGLE_TOLERANCE
            }
            (a, b) => a == b,
        }
    }
}

/// One eigenvalue together with the frequencies of `f` in its eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenComponent {
    pub tag: EigenTag,
    pub frequencies: Vec<i64>,
}

/// The part of the point spectrum met by a given observable; `1` always comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumDescription {
    pub eigenvalues: Vec<EigenComponent>,
}

fn fourier_of<'a>(f: &'a Observable, what: &str) -> Result<&'a FourierPoly> {
    match f {
        Observable::Fourier(p) => Ok(p),
        other => Err(Error::UnsupportedDecomposition(format!(
            "{what} needs a Fourier polynomial, got {}",
            other.kind_name()
        ))),
    }
}

/// Eigenvalue carried by the character of frequency `m`, or `None` if that
/// character is not an eigenfunction (weakly mixing systems, `m != 0`).
pub fn frequency_tag(system: &SystemSpec, m: i64) -> Result<Option<EigenTag>> {
    if m == 0 {
        return Ok(Some(EigenTag::One));
    }
    match system {
        SystemSpec::Identity => Ok(Some(EigenTag::One)),
        SystemSpec::CircleRotation(a) => match a.arithmetic() {
            AngleArithmetic::Rational { p, q } => {
                let r = (m.rem_euclid(*q as i64) as u128 * *p as u128 % *q as u128) as i64;
                Ok(Some(EigenTag::rational(r, *q)?))
            }
            AngleArithmetic::Irrational { name } => {
                let t = frac_mul(m.unsigned_abs(), a.value());
                let angle = if m < 0 { crate::numeric::mod1(-t) } else { t };
                Ok(Some(EigenTag::IrrationalAngle {
                    angle,
                    name: format!("{m}*{name}"),
                }))
            }
        },
        SystemSpec::DoublingMap | SystemSpec::ShiftBernoulli(_) => Ok(None),
        other => Err(Error::UnsupportedDecomposition(format!("no declared spectrum for {}", other.label()))),
    }
}

/// Eigenvalues met by the frequency support of `f`.
pub fn spectrum(system: &SystemSpec, f: &Observable) -> Result<SpectrumDescription> {
    let poly = fourier_of(f, "spectrum")?;
    let mut eigenvalues = vec![EigenComponent {
        tag: EigenTag::One,
        frequencies: Vec::new(),
    }];
    for m in poly.frequencies() {
        let Some(tag) = frequency_tag(system, m)? else { continue };
        match eigenvalues.iter_mut().find(|c| c.tag.matches(&tag)) {
            Some(c) => c.frequencies.push(m),
            None => eigenvalues.push(EigenComponent {
                tag,
                frequencies: vec![m],
            }),
        }
    }
    Ok(SpectrumDescription { eigenvalues })
}

/// `P_lambda f`: the sub-polynomial on frequencies whose eigenvalue is `lambda`.
pub fn eigen_projection(system: &SystemSpec, f: &Observable, lambda: &EigenTag) -> Result<Observable> {
    let poly = fourier_of(f, "eigen projection")?;
    let mut keep = Vec::new();
    for (m, c) in poly.terms() {
        if let Some(tag) = frequency_tag(system, m)? {
            if tag.matches(lambda) {
                keep.push((m, c));
            }
        }
    }
    Ok(Observable::Fourier(FourierPoly::new(keep)))
}

/// Numerical evidence that an irrational Weyl sum is small.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylCertificate {
    pub k: usize,
    pub partial_at_k: Complex64,
    pub partial_at_half: Complex64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussCoefficient {
    pub value: Complex64,
    /// Present for irrational angles, where the value 0 is an analytic input.
    pub certificate: Option<WeylCertificate>,
}

/// `(1/k) sum_{j<k} lambda^{j^2}` at each `k` in `ks` (increasing). Rational
/// angles use the exact residue `j^2 mod q`.
pub fn gauss_partial_sums(lambda: &EigenTag, ks: &[usize]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(ks.len());
    let mut sum = CompensatedSum::new();
    let mut next = 0;
    let last = ks.last().copied().unwrap_or(0) as u64;
    for j in 0..last {
        let phase = match lambda {
            EigenTag::One => 0.0,
            EigenTag::RationalAngle { p, q } => {
                let jq = (j % q) as u128;
                ((jq * jq % *q as u128) * *p as u128 % *q as u128) as f64 / *q as f64
            }
            EigenTag::IrrationalAngle { angle, .. } => frac_mul(j * j, *angle),
        };
        sum.add(turn(phase));
        while next < ks.len() && j + 1 == ks[next] as u64 {
            out.push(sum.value() / ks[next] as f64);
            next += 1;
        }
    }
    out
}

/// `c(lambda) = lim (1/k) sum_{j<k} lambda^{j^2}`.
///
/// Rational angles: the exact period-`q` average. Irrational angles: 0, but
/// only once the partial sums at `k` and `k/2` both have modulus below `tol`.
pub fn gauss_coefficient(lambda: &EigenTag, k: usize, tol: f64) -> Result<GaussCoefficient> {
    match lambda {
        EigenTag::One => Ok(GaussCoefficient {
            value: Complex64::new(1.0, 0.0),
            certificate: None,
        }),
        EigenTag::RationalAngle { q, .. } => Ok(GaussCoefficient {
            value: gauss_partial_sums(lambda, &[*q as usize])[0],
            certificate: None,
        }),
        EigenTag::IrrationalAngle { .. } => {
            if k < 2 {
                return Err(Error::InvalidInput("Weyl certificate needs k >= 2".into()));
            }
            let sums = gauss_partial_sums(lambda, &[k / 2, k]);
            let (half, full) = (sums[0], sums[1]);
            if full.norm() < tol && half.norm() < tol {
                Ok(GaussCoefficient {
                    value: Complex64::new(0.0, 0.0),
                    certificate: Some(WeylCertificate {
                        k,
                        partial_at_k: full,
                        partial_at_half: half,
                        tol,
                    }),
                })
            } else {
                let worst = if full.norm() >= tol { full } else { half };
                Err(Error::NonConverged { partial: worst, tol })
            }
        }
    }
}

/// `f = g + h` with `g` the projection onto the Kronecker factor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub kronecker: Observable,
    pub residual: Observable,
    pub components: Vec<(EigenTag, Observable)>,
}

pub fn kronecker_split(system: &SystemSpec, f: &Observable) -> Result<SpectralDecomposition> {
    let poly = fourier_of(f, "Kronecker split")?;
    let spec = spectrum(system, f)?;
    let mut components = Vec::with_capacity(spec.eigenvalues.len());
    let mut kept = Vec::new();
    for comp in spec.eigenvalues {
        let part = FourierPoly::new(comp.frequencies.iter().map(|m| (*m, poly.coefficient(*m))));
        kept.extend(part.terms());
        components.push((comp.tag, Observable::Fourier(part)));
    }
    let g = FourierPoly::new(kept);
    let h = FourierPoly::new(poly.terms().map(|(m, c)| (m, c - g.coefficient(m))));
    Ok(SpectralDecomposition {
        kronecker: Observable::Fourier(g),
        residual: Observable::Fourier(h),
        components,
    })
}

/// `sum_lambda c(lambda) P_lambda f`, the limit of `B_k f`.
pub fn predicted_squares_limit(system: &SystemSpec, f: &Observable, k: usize, tol: f64) -> Result<Observable> {
    if f.constant_value().is_some() {
        return Ok(f.clone());
    }
    let spec = spectrum(system, f)?;
    let poly = fourier_of(f, "squares limit")?;
    let mut terms = Vec::new();
    for comp in &spec.eigenvalues {
        if comp.frequencies.is_empty() {
            continue;
        }
        let c = gauss_coefficient(&comp.tag, k, tol)?.value;
        terms.extend(comp.frequencies.iter().map(|m| (*m, c * poly.coefficient(*m))));
    }
    Ok(Observable::Fourier(FourierPoly::new(terms)))
}

/// `P_1 f`, the limit of `A_k f`.
pub fn predicted_birkhoff_limit(system: &SystemSpec, f: &Observable) -> Result<Observable> {
    system.invariant_projection(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::Angle;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gauss_examples() {
        assert_eq!(gauss_coefficient(&EigenTag::One, 10, 0.1).unwrap().value, cx(1.0, 0.0));
        let minus = EigenTag::rational(1, 2).unwrap();
        assert!(gauss_coefficient(&minus, 10, 0.1).unwrap().value.norm() < 1e-15);
        let i = EigenTag::rational(1, 4).unwrap();
        assert!((gauss_coefficient(&i, 10, 0.1).unwrap().value - cx(0.5, 0.5)).norm() < 1e-15);
        let third = EigenTag::rational(1, 3).unwrap();
        // (1 + 2 e(1/3)) / 3 = i / sqrt(3)
        let c3 = gauss_coefficient(&third, 10, 0.1).unwrap().value;
        assert!((c3 - cx(0.0, 1.0 / 3f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn irrational_needs_certificate() {
        let a = Angle::sqrt2_minus_1();
        let tag = frequency_tag(&SystemSpec::CircleRotation(a), 1).unwrap().unwrap();
        let ok = gauss_coefficient(&tag, 10_000, 0.05).unwrap();
        assert_eq!(ok.value, cx(0.0, 0.0));
        assert!(ok.certificate.unwrap().partial_at_k.norm() < 0.05);
        assert!(matches!(gauss_coefficient(&tag, 10, 1e-6), Err(Error::NonConverged { .. })));
    }

    #[test]
    fn projection_examples() {
        let irr = SystemSpec::CircleRotation(Angle::golden_fraction());
        let lam = frequency_tag(&irr, 1).unwrap().unwrap();
        let e1 = Observable::character(1);
        assert_eq!(eigen_projection(&irr, &e1, &lam).unwrap(), e1);
        let e2 = Observable::character(2);
        assert_eq!(eigen_projection(&irr, &e2, &lam).unwrap(), Observable::Fourier(FourierPoly::default()));
        let half = SystemSpec::CircleRotation(Angle::rational(1, 2).unwrap());
        let f = Observable::fourier(&[(1, cx(1.0, 0.0)), (3, cx(1.0, 0.0))]);
        let minus = EigenTag::rational(1, 2).unwrap();
        assert_eq!(eigen_projection(&half, &f, &minus).unwrap(), f);
    }

    #[test]
    fn kronecker_examples() {
        let rot = SystemSpec::CircleRotation(Angle::sqrt2_minus_1());
        let f = Observable::fourier(&[(0, cx(1.0, 0.0)), (2, cx(0.5, -1.0))]);
        let d = kronecker_split(&rot, &f).unwrap();
        assert_eq!(d.kronecker, f);
        assert_eq!(d.residual, Observable::Fourier(FourierPoly::default()));
        let dbl = kronecker_split(&SystemSpec::DoublingMap, &Observable::cosine(1)).unwrap();
        assert_eq!(dbl.kronecker, Observable::Fourier(FourierPoly::default()));
        assert_eq!(dbl.residual, Observable::cosine(1));
        let c = kronecker_split(&SystemSpec::DoublingMap, &Observable::constant(3.0)).unwrap();
        assert_eq!(c.kronecker, Observable::constant(3.0));
        assert!(kronecker_split(&rot, &Observable::Sawtooth).is_err());
    }

    #[test]
    fn squares_limit_examples() {
        let rot = SystemSpec::CircleRotation(Angle::sqrt2_minus_1());
        let f = Observable::fourier(&[(0, cx(2.0, 0.0)), (1, cx(0.5, 0.0)), (-1, cx(0.5, 0.0))]);
        assert_eq!(predicted_squares_limit(&rot, &f, 10_000, 0.05).unwrap(), Observable::constant(2.0));
        let quarter = SystemSpec::CircleRotation(Angle::rational(1, 4).unwrap());
        let lim = predicted_squares_limit(&quarter, &Observable::character(1), 1, 0.0).unwrap();
        assert_eq!(lim, Observable::fourier(&[(1, cx(0.5, 0.5))]));
        let c = Observable::constant(4.0);
        assert_eq!(predicted_squares_limit(&SystemSpec::DoublingMap, &c, 1, 0.0).unwrap(), c);
    }
}
