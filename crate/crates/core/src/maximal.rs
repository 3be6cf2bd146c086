//! Maximal operators over truncated radius and time grids, and empirical
//! weak-(1,1) and strong-(p,p) ratios.
//!
//! `H*` is the supremum over radii of ball averages of `|f|`, `A*` and `B*`
//! the suprema over `k <= K` of the Birkhoff and squares averages of `|f|`,
//! and `U*`, `V*` the suprema over both. Under a partition ultrametric the
//! balls are cells and `H*` is the dyadic (Doob) maximal function, whose
//! superlevel sets are unions of cells and are computed exactly.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{integrate, ultrametric_radius, BallRegion, Cell, MetricSpec, PartitionSequence, Region};
use crate::numeric::{gauss_legendre, Proportion, Z95};
use crate::observables::Observable;
use crate::operators::{region_profile, temporal_profile, Flavor};
use crate::systems::{Point, SystemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaximalOperator {
    HardyLittlewood,
    Ergodic,
    Squares,
    SpatialTemporal,
    SquaresSpatialTemporal,
}

impl MaximalOperator {
    pub fn name(self) -> &'static str {
        match self {
            MaximalOperator::HardyLittlewood => "hl",
            MaximalOperator::Ergodic => "ergodic",
            MaximalOperator::Squares => "squares",
            MaximalOperator::SpatialTemporal => "spatial_temporal",
            MaximalOperator::SquaresSpatialTemporal => "squares_spatial_temporal",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "hl" | "hardy_littlewood" => MaximalOperator::HardyLittlewood,
            "ergodic" | "a" => MaximalOperator::Ergodic,
            "squares" | "b" => MaximalOperator::Squares,
            "spatial_temporal" | "u" => MaximalOperator::SpatialTemporal,
            "squares_spatial_temporal" | "v" => MaximalOperator::SquaresSpatialTemporal,
            other => return Err(Error::InvalidInput(format!("unknown maximal operator {other}"))),
        })
    }

    fn uses_radii(self) -> bool {
        !matches!(self, MaximalOperator::Ergodic | MaximalOperator::Squares)
    }

    fn uses_time(self) -> bool {
        !matches!(self, MaximalOperator::HardyLittlewood)
    }

    fn flavor(self) -> Flavor {
        match self {
            MaximalOperator::Squares | MaximalOperator::SquaresSpatialTemporal => Flavor::Squares,
            _ => Flavor::Birkhoff,
        }
    }
}

/// Finite stand-in for the suprema over `r > 0` and `k >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub radii: Vec<f64>,
    pub k_cap: usize,
    pub description: String,
}

impl Truncation {
    /// Radii `r_max * 2^-i`, `i < levels`.
    pub fn torus(r_max: f64, levels: usize, k_cap: usize) -> Result<Self> {
        if !(r_max > 0.0) || levels == 0 || k_cap == 0 {
            return Err(Error::InvalidInput("truncation grids must be nonempty".into()));
        }
        Ok(Self {
            radii: (0..levels).map(|i| r_max * 0.5f64.powi(i as i32)).collect(),
            k_cap,
            description: format!("torus r = {r_max}*2^-i, i < {levels}; k <= {k_cap}"),
        })
    }

    /// The lossless ultrametric radii `1/(n + 1/2)`, `n = 0..=levels`.
    pub fn ultrametric(levels: usize, k_cap: usize) -> Result<Self> {
        if k_cap == 0 {
            return Err(Error::InvalidInput("k cap must be positive".into()));
        }
        Ok(Self {
            radii: (0..=levels).map(ultrametric_radius).collect(),
            k_cap,
            description: format!("ultrametric levels 0..={levels}; k <= {k_cap}"),
        })
    }
}

/// The system and ball geometry a maximal operator is taken over.
#[derive(Debug, Clone)]
pub struct MaximalSetting {
    pub system: SystemSpec,
    pub metric: MetricSpec,
    pub truncation: Truncation,
}

fn all_ks(k_cap: usize) -> Vec<usize> {
    (1..=k_cap).collect()
}

fn max_norm(values: &[num_complex::Complex64]) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// `M f(x)` over the truncated grid, applied to `|f|`.
pub fn maximal_value(op: MaximalOperator, setting: &MaximalSetting, f: &Observable, x: &Point) -> Result<f64> {
    let g = f.modulus();
    let t = &setting.truncation;
    if !op.uses_radii() {
        let prof = temporal_profile(&setting.system, &g, x, &all_ks(t.k_cap), op.flavor())?;
        return Ok(max_norm(&prof));
    }
    let ks = if op.uses_time() { all_ks(t.k_cap) } else { vec![1] };
    let system = if op.uses_time() { &setting.system } else { &SystemSpec::Identity };
    let mut best = 0.0f64;
    for &r in &t.radii {
        let region = setting.metric.ball(x, r)?;
        let prof = region_profile(system, &g, &region, &ks, op.flavor())?;
        best = best.max(max_norm(&prof));
    }
    Ok(best)
}

/// `M f` at every sample point, evaluated in parallel, in sample order.
pub fn maximal_values(op: MaximalOperator, setting: &MaximalSetting, f: &Observable, sample: &[Point]) -> Result<Vec<f64>> {
    sample.par_iter().map(|x| maximal_value(op, setting, f, x)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstantKind {
    WeakOneOne,
    StrongP(f64),
}

/// One measured ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub standard_error: f64,
    /// 95% interval for the ratio (Wilson for weak type, normal for strong type).
    pub interval: (f64, f64),
    pub sample_size: usize,
}

/// `eps * mu{M f >= eps} / ||f||_1` from precomputed maximal values.
pub fn weak_ratio_from_values(values: &[f64], f_l1: f64, eps: f64) -> Result<RatioEstimate> {
    if !(f_l1 > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon {eps} must be positive")));
    }
    let hits = values.iter().filter(|v| **v >= eps).count();
    let prop = Proportion::new(hits, values.len());
    let scale = eps / f_l1;
    let (lo, hi) = prop.wilson(Z95);
    Ok(RatioEstimate {
        ratio: scale * prop.estimate(),
        standard_error: scale * prop.standard_error(),
        interval: (scale * lo, scale * hi),
        sample_size: values.len(),
    })
}

/// Empirical weak-(1,1) ratio of `M` at level `eps`.
pub fn weak_type_ratio(op: MaximalOperator, setting: &MaximalSetting, f: &Observable, eps: f64, sample: &[Point]) -> Result<RatioEstimate> {
    let l1 = f.p_norm(1.0)?;
    if !(l1 > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    let values = maximal_values(op, setting, f, sample)?;
    weak_ratio_from_values(&values, l1, eps)
}

/// `(mean of (M f)^p)^(1/p) / ||f||_p` from precomputed maximal values, with
/// a delta-method standard error.
pub fn strong_ratio_from_values(values: &[f64], f_lp: f64, p: f64) -> Result<RatioEstimate> {
    if !(f_lp > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    let n = values.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    let powers: Vec<f64> = values.iter().map(|v| v.powf(p)).collect();
    let mean = powers.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        powers.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    let se_mean = (var / n as f64).sqrt();
    let ratio = mean.powf(1.0 / p) / f_lp;
    let se = if mean > 0.0 {
        mean.powf(1.0 / p - 1.0) * se_mean / (p * f_lp)
    } else {
        0.0
    };
    Ok(RatioEstimate {
        ratio,
        standard_error: se,
        interval: (ratio - Z95 * se, ratio + Z95 * se),
        sample_size: n,
    })
}

/// Empirical strong-(p,p) ratio `||M f||_p / ||f||_p`.
pub fn strong_p_ratio(op: MaximalOperator, setting: &MaximalSetting, f: &Observable, p: f64, sample: &[Point]) -> Result<RatioEstimate> {
    if !(p > 1.0) {
        return Err(Error::InvalidInput(format!("strong type needs p > 1, got {p}")));
    }
    let lp = f.p_norm(p)?;
    let values = maximal_values(op, setting, f, sample)?;
    strong_ratio_from_values(&values, lp, p)
}

/// Exact `mu{M f >= eps}` for the maximal function over the cells of a
/// partition sequence (the ultrametric `H*`), by walking the cell tree.
pub fn doob_superlevel_measure(partitions: &PartitionSequence, f: &Observable, eps: f64) -> Result<f64> {
    let g = f.modulus();
    let root = Cell {
        word: Vec::new(),
        region: Region::full(),
    };
    let mut stack = vec![(root, 0.0f64)];
    let mut measure = 0.0;
    while let Some((cell, running)) = stack.pop() {
        let m = cell.region.measure();
        let mass = integrate(&g, &BallRegion::Cell(cell.clone()))?.re;
        let running = running.max(mass / m);
        if running >= eps {
            measure += m;
            continue;
        }
        // averages below a null cell vanish, and eps > 0
        if mass == 0.0 || cell.level() >= partitions.levels() {
            continue;
        }
        for child in partitions.children(&cell)?.into_iter().rev() {
            stack.push((child, running));
        }
    }
    Ok(measure)
}

/// Exact Doob ratio `eps * mu{M f >= eps} / ||f||_1`.
pub fn doob_weak_ratio(partitions: &PartitionSequence, f: &Observable, eps: f64) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("epsilon {eps} must be positive")));
    }
    let l1 = f.p_norm(1.0)?;
    if !(l1 > 0.0) {
        return Err(Error::UndefinedRatio);
    }
    Ok(eps * doob_superlevel_measure(partitions, f, eps)? / l1)
}

/// A constant estimate over a family and a parameter grid, with its maximizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantEstimate {
    pub kind: ConstantKind,
    pub value: f64,
    pub standard_error: f64,
    pub maximizer: String,
    pub parameter: f64,
    pub sample_size: usize,
    pub truncation: String,
}

/// One row of a constant-estimation campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub operator: MaximalOperator,
    pub member: String,
    pub parameter: f64,
    pub estimate: RatioEstimate,
    pub truncation: String,
}

/// The built-in adversarial family: narrow indicators, singular powers and the constant.
pub fn builtin_family() -> Vec<(String, Observable)> {
    let mut out = Vec::new();
    for m in 1..=6 {
        let hi = 0.5f64.powi(m);
        out.push((format!("indicator[0,2^-{m})"), Observable::indicator(0.0, hi).expect("valid interval")));
    }
    for a in [0.2, 0.4] {
        out.push((format!("power(a={a})"), Observable::power_singularity(a, 0.0).expect("valid exponent")));
    }
    out.push(("constant(1)".into(), Observable::constant(1.0)));
    out
}

/// Weak-type ratios over a family and an epsilon grid (one maximal pass per member).
pub fn weak_type_campaign(
    op: MaximalOperator,
    setting: &MaximalSetting,
    family: &[(String, Observable)],
    eps_grid: &[f64],
    sample: &[Point],
) -> Result<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for (name, f) in family {
        let l1 = f.p_norm(1.0)?;
        let values = maximal_values(op, setting, f, sample)?;
        for &eps in eps_grid {
            rows.push(RatioRow {
                operator: op,
                member: name.clone(),
                parameter: eps,
                estimate: weak_ratio_from_values(&values, l1, eps)?,
                truncation: setting.truncation.description.clone(),
            });
        }
    }
    Ok(rows)
}

/// Strong-type ratios over a family and a grid of exponents; members outside
/// `L^p` are skipped.
pub fn strong_type_campaign(
    op: MaximalOperator,
    setting: &MaximalSetting,
    family: &[(String, Observable)],
    p_grid: &[f64],
    sample: &[Point],
) -> Result<Vec<RatioRow>> {
    let mut rows = Vec::new();
    for (name, f) in family {
        let values = maximal_values(op, setting, f, sample)?;
        for &p in p_grid {
            let lp = match f.p_norm(p) {
                Ok(v) => v,
                Err(Error::NotInLp { .. }) => continue,
                Err(e) => return Err(e),
            };
            rows.push(RatioRow {
                operator: op,
                member: name.clone(),
                parameter: p,
                estimate: strong_ratio_from_values(&values, lp, p)?,
                truncation: setting.truncation.description.clone(),
            });
        }
    }
    Ok(rows)
}

/// The largest ratio of a campaign.
pub fn summarize(kind: ConstantKind, rows: &[RatioRow]) -> Option<ConstantEstimate> {
    rows.iter()
        .max_by(|a, b| a.estimate.ratio.total_cmp(&b.estimate.ratio))
        .map(|row| ConstantEstimate {
            kind,
            value: row.estimate.ratio,
            standard_error: row.estimate.standard_error,
            maximizer: row.member.clone(),
            parameter: row.parameter,
            sample_size: row.estimate.sample_size,
            truncation: row.truncation.clone(),
        })
}

/// Both sides of `U* f(x) <= H*(A* f)(x)` (or the squares analogue) with
/// every ball average replaced by the same Gauss–Legendre rule, so the two
/// sides are computed on matching grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominationCheck {
    pub lhs: f64,
    pub rhs: f64,
}

impl DominationCheck {
    pub fn holds(&self, tol: f64) -> bool {
        self.lhs <= self.rhs + tol
    }
}

pub fn domination_check(
    flavor: Flavor,
    setting: &MaximalSetting,
    f: &Observable,
    x: &Point,
    nodes_per_arc: usize,
) -> Result<DominationCheck> {
    let g = f.modulus();
    let ks = all_ks(setting.truncation.k_cap);
    let rule = gauss_legendre(nodes_per_arc);
    let mut lhs = 0.0f64;
    let mut rhs = 0.0f64;
    for &r in &setting.truncation.radii {
        let region = setting.metric.ball(x, r)?;
        let spans = match &region {
            BallRegion::Arcs(reg) | BallRegion::Cell(Cell { region: reg, .. }) => reg.spans.clone(),
            BallRegion::Square(_) => {
                return Err(Error::Unsupported("matched-grid domination check on the 2-torus".into()));
            }
        };
        let m = region.measure();
        let mut weighted = vec![0.0; ks.len()];
        let mut weighted_sup = 0.0;
        for s in &spans {
            let half = 0.5 * s.len;
            for (t, w) in &rule {
                let y = Point::circle(s.start + half * (1.0 + t));
                let weight = w * half / m;
                let prof = temporal_profile(&setting.system, &g, &y, &ks, flavor)?;
                let mut sup = 0.0f64;
                for (acc, v) in weighted.iter_mut().zip(&prof) {
                    *acc += weight * v.re;
                    sup = sup.max(v.re);
                }
                weighted_sup += weight * sup;
            }
        }
        lhs = lhs.max(weighted.iter().copied().fold(0.0, f64::max));
        rhs = rhs.max(weighted_sup);
    }
    Ok(DominationCheck { lhs, rhs })
}
