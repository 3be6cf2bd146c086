//! Floating-point helpers shared by every module: mod-1 arithmetic on the
//! circle, compensated summation, adaptive Gauss–Kronrod quadrature,
//! Gauss–Legendre rules and binomial proportions with Wilson intervals.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;

/// Values this close below 1.0 are snapped to 0.0 by [`mod1`].
pub const SNAP: f64 = 1e-15;

/// Canonical representative of `x` in `[0, 1)`.
pub fn mod1(x: f64) -> f64 {
    let y = x - x.floor();
    if !(0.0..1.0 - SNAP).contains(&y) {
        0.0
    } else {
        y
    }
}

/// Splits `x` into `(floor(x), x - floor(x))`. Both parts are exact.
pub fn split_int_frac(x: f64) -> (f64, f64) {
    let n = x.floor();
    (n, x - n)
}

/// Circular distance on `R/Z`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = a - b;
    (d - d.round()).abs()
}

/// `e^{2 pi i t}`.
pub fn turn(t: f64) -> Complex64 {
    let (s, c) = (2.0 * PI * t).sin_cos();
    Complex64::new(c, s)
}

/// `sin(x) / x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// Fractional part of `n * theta`, computed with an error-free product so
/// the result is accurate to one ulp of the fractional part for any `n`
/// below `2^53`.
pub fn frac_mul(n: u64, theta: f64) -> f64 {
    let nf = n as f64;
    let hi = nf * theta;
    let lo = nf.mul_add(theta, -hi);
    mod1(mod1(hi) + lo)
}

/// Neumaier-compensated running sum of complex values. The reduction order
/// is the insertion order, so results are reproducible bit for bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: Complex64,
    carry: Complex64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, v: Complex64) {
        self.sum.re = neumaier_step(self.sum.re, v.re, &mut self.carry.re);
        self.sum.im = neumaier_step(self.sum.im, v.im, &mut self.carry.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

fn neumaier_step(sum: f64, v: f64, carry: &mut f64) -> f64 {
    let t = sum + v;
    if sum.abs() >= v.abs() {
        *carry += (sum - t) + v;
    } else {
        *carry += (v - t) + sum;
    }
    t
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> Result<Complex64>>(f: &F, a: f64, b: f64) -> Result<(Complex64, f64)> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx)? + f(c + dx)?;
        kronrod += pair * WGK[i];
        if i % 2 == 1 {
            gauss += pair * WG[i / 2];
        }
    }
    let kronrod = kronrod * h;
    let gauss = gauss * h;
    Ok((kronrod, (kronrod - gauss).norm()))
}

/// Outcome of an adaptive quadrature run.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: Complex64,
    pub error_estimate: f64,
    pub intervals: usize,
}

/// Adaptive Gauss–Kronrod (7/15) quadrature with interval bisection.
///
/// Subintervals are accepted once their error estimate falls below their
/// share of `max(abs_tol, rel_tol * |estimate|)`; the absolute floor is
/// `1e-13`. The integrand must not be evaluated at a singularity: callers
/// split at singular points first (nodes never touch the endpoints).
pub fn integrate_adaptive<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> Result<Complex64>,
{
    if !(b > a) {
        return Ok(Quadrature {
            value: Complex64::new(0.0, 0.0),
            error_estimate: 0.0,
            intervals: 0,
        });
    }
    let abs_tol = abs_tol.max(1e-13);
    let (v0, e0) = gk15(&f, a, b)?;
    let mut stack = vec![(a, b, v0, e0, 0usize)];
    let mut total = CompensatedSum::new();
    let mut err = 0.0;
    let mut intervals = 0usize;
    let mut estimate = v0.norm();
    while let Some((lo, hi, v, e, depth)) = stack.pop() {
        let tol = abs_tol.max(rel_tol * estimate) * (hi - lo) / (b - a);
        // stop before node spacing reaches the float resolution of the abscissae
        let resolved = hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        if e <= tol || depth >= 48 || resolved || intervals > 200_000 {
            total.add(v);
            err += e;
            intervals += 1;
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gk15(&f, lo, mid)?;
        let (vr, er) = gk15(&f, mid, hi)?;
        estimate = estimate.max((vl + vr).norm());
        stack.push((mid, hi, vr, er, depth + 1));
        stack.push((lo, mid, vl, el, depth + 1));
    }
    Ok(Quadrature {
        value: total.value(),
        error_estimate: err,
        intervals,
    })
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
    let mut rule = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.push((x, w));
    }
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// A sampled binomial proportion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proportion {
    pub successes: usize,
    pub trials: usize,
}

impl Proportion {
    pub fn new(successes: usize, trials: usize) -> Self {
        Self { successes, trials }
    }

    pub fn estimate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.successes as f64 / self.trials as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        let p = self.estimate();
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Wilson score interval at normal quantile `z`.
    pub fn wilson(&self, z: f64) -> (f64, f64) {
        if self.trials == 0 {
            return (0.0, 1.0);
        }
        let n = self.trials as f64;
        let p = self.estimate();
        let z2 = z * z;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        ((centre - half).max(0.0), (centre + half).min(1.0))
    }
}

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mod1_snaps_near_one() {
        assert_eq!(mod1(1.0 - 1e-17), 0.0);
        assert_eq!(mod1(-0.25), 0.75);
        assert_eq!(mod1(3.5), 0.5);
        assert_eq!(mod1(-1e-300), 0.0);
    }

    #[test]
    fn frac_mul_matches_exact_rational() {
        // 0.25 is exact, so j^2 / 4 has an exact fractional part.
        for j in 0..2000u64 {
            assert_eq!(frac_mul(j * j, 0.25), ((j * j) % 4) as f64 / 4.0);
        }
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..8 {
            let rule = gauss_legendre(n);
            let total: f64 = rule.iter().map(|(_, w)| w).sum();
            assert!((total - 2.0).abs() < 1e-13);
            // degree 2n - 1 is exact
            let deg = 2 * n - 1;
            let approx: f64 = rule.iter().map(|(x, w)| w * x.powi(deg as i32 - 1)).sum();
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((approx - exact).abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn adaptive_quadrature_of_cosine() {
        let q = integrate_adaptive(|x| Ok(Complex64::new((2.0 * PI * x).cos(), 0.0)), 0.0, 0.25, 1e-13, 1e-12)
            .unwrap();
        assert!((q.value.re - 1.0 / (2.0 * PI)).abs() < 1e-13);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(Complex64::new(1e16, 0.0));
        for _ in 0..10 {
            s.add(Complex64::new(1.0, 0.0));
        }
        s.add(Complex64::new(-1e16, 0.0));
        assert_eq!(s.value().re, 10.0);
    }

    #[test]
    fn wilson_interval_brackets_estimate() {
        let p = Proportion::new(30, 100);
        let (lo, hi) = p.wilson(Z95);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(Proportion::new(0, 0).wilson(Z95), (0.0, 1.0));
    }
}
