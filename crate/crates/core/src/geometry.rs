//! Balls, cells and averages over them.
//!
//! Two ball geometries are supported: the arc metric of the circle (the max
//! metric on the 2-torus, whose balls are squares) and the ultrametric
//! induced by a refining sequence of partitions, whose balls are cells.
//! Integrals of `f o T^j` over a ball are computed in closed form for every
//! system of the catalog, see [`integrate_composed`].

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numeric::{circle_distance, mod1};
use crate::observables::Observable;
use crate::systems::{BernoulliWeights, Point, SystemSpec};

/// An arc `[start, start + len)` of the circle with `start` in `[0, 1)` and
/// `len` in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub start: f64,
    pub len: f64,
}

impl Span {
    pub fn new(start: f64, len: f64) -> Self {
        Self { start: mod1(start), len }
    }

    pub const FULL: Span = Span { start: 0.0, len: 1.0 };

    pub fn contains(&self, y: f64) -> bool {
        self.len >= 1.0 || mod1(y - self.start) < self.len
    }

    /// Intersection with another span, as at most two spans.
    pub fn intersect(&self, other: &Span) -> Vec<Span> {
        let (s1, e1) = (self.start, self.start + self.len);
        let mut out = Vec::new();
        for k in [-1.0, 0.0, 1.0] {
            let a = other.start + k;
            let b = a + other.len;
            if s1 >= a && e1 <= b {
                return vec![*self];
            }
            if a >= s1 && b <= e1 {
                out.push(Span::new(a, other.len));
                continue;
            }
            let lo = s1.max(a);
            let hi = e1.min(b);
            if hi > lo {
                out.push(Span::new(lo, hi - lo));
            }
        }
        out
    }
}

/// A finite union of disjoint arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub spans: Vec<Span>,
}

impl Region {
    pub fn full() -> Self {
        Self { spans: vec![Span::FULL] }
    }

    pub fn span(start: f64, len: f64) -> Self {
        Self {
            spans: vec![Span::new(start, len)],
        }
    }

    pub fn measure(&self) -> f64 {
        self.spans.iter().map(|s| s.len).sum()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.spans.iter().any(|s| s.contains(y))
    }

    pub fn intersect(&self, other: &Region) -> Region {
        let mut spans = Vec::new();
        for a in &self.spans {
            for b in &other.spans {
                spans.extend(a.intersect(b));
            }
        }
        spans.retain(|s| s.len > 0.0);
        spans.sort_by(|a, b| a.start.total_cmp(&b.start));
        Region { spans }
    }

    /// Preimage under one step of a circle system.
    fn preimage(&self, system: &SystemSpec) -> Result<Region> {
        let spans = match system {
            SystemSpec::Identity => self.spans.clone(),
            SystemSpec::CircleRotation(a) => {
                let t = a.value();
                self.spans.iter().map(|s| Span::new(s.start - t, s.len)).collect()
            }
            SystemSpec::DoublingMap => self
                .spans
                .iter()
                .flat_map(|s| {
                    if s.len >= 1.0 {
                        vec![Span::FULL]
                    } else {
                        let h = 0.5 * s.start;
                        vec![Span::new(h, 0.5 * s.len), Span::new(h + 0.5, 0.5 * s.len)]
                    }
                })
                .collect(),
            other => {
                return Err(Error::Unsupported(format!("interval preimages under {}", other.label())));
            }
        };
        Ok(Region { spans })
    }
}

/// How the cells of a refining partition sequence are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Coding {
    /// Level-`n` cells are the dyadic intervals of length `2^-n`.
    Dyadic,
    /// Level-`n` cells are the atoms of `P v T^-1 P v ... v T^-(n-1) P`, for
    /// the base partition `P` of the circle into `[b_i, b_{i+1})` (the last
    /// cell wraps through 0).
    OrbitPullback { system: SystemSpec, base: Vec<f64> },
    /// Cylinder sets of a one-sided shift, read through the coding map.
    Cylinders(BernoulliWeights),
}

/// A refining chain `P(1) <= P(2) <= ...`, truncated after `levels` levels.
/// Cells are identified by their itinerary words.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionSequence {
    coding: Coding,
    levels: usize,
}

impl PartitionSequence {
    pub fn dyadic(levels: usize) -> Self {
        Self {
            coding: Coding::Dyadic,
            levels,
        }
    }

    pub fn orbit_pullback(system: SystemSpec, base: Vec<f64>, levels: usize) -> Result<Self> {
        if base.is_empty() || base.iter().any(|b| !(0.0..1.0).contains(b)) || base.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("base breakpoints must be strictly increasing in [0, 1)".into()));
        }
        if base.len() > 256 {
            return Err(Error::InvalidInput("base partition has more than 256 cells".into()));
        }
        match system {
            SystemSpec::Identity | SystemSpec::CircleRotation(_) | SystemSpec::DoublingMap => {}
            ref other => {
                return Err(Error::Unsupported(format!("orbit pullback partitions for {}", other.label())));
            }
        }
        Ok(Self {
            coding: Coding::OrbitPullback { system, base },
            levels,
        })
    }

    pub fn cylinders(weights: BernoulliWeights, levels: usize) -> Self {
        Self {
            coding: Coding::Cylinders(weights),
            levels,
        }
    }

    pub fn coding(&self) -> &Coding {
        &self.coding
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn with_levels(&self, levels: usize) -> Self {
        Self {
            coding: self.coding.clone(),
            levels,
        }
    }

    fn alphabet(&self) -> usize {
        match &self.coding {
            Coding::Dyadic => 2,
            Coding::OrbitPullback { base, .. } => base.len(),
            Coding::Cylinders(w) => w.symbol_count(),
        }
    }

    fn base_span(base: &[f64], i: usize) -> Span {
        let s = base[i];
        let len = if i + 1 < base.len() { base[i + 1] - s } else { 1.0 - s + base[0] };
        Span::new(s, len)
    }

    fn base_symbol(base: &[f64], y: f64) -> u8 {
        let idx = base.partition_point(|b| *b <= y);
        if idx == 0 {
            (base.len() - 1) as u8
        } else {
            (idx - 1) as u8
        }
    }

    /// The first `n` symbols of the itinerary of `x`.
    pub fn word(&self, x: &Point, n: usize) -> Result<Vec<u8>> {
        match (&self.coding, x) {
            (Coding::Dyadic, Point::Circle(v)) => {
                let mut y = *v;
                Ok((0..n)
                    .map(|_| {
                        let bit = u8::from(y >= 0.5);
                        y = mod1(2.0 * y);
                        bit
                    })
                    .collect())
            }
            (Coding::OrbitPullback { system, base }, Point::Circle(_)) => {
                let mut out = Vec::with_capacity(n);
                let mut y = x.clone();
                for i in 0..n {
                    if i > 0 {
                        y = system.apply(&y, 1)?;
                    }
                    out.push(Self::base_symbol(base, y.as_circle()?));
                }
                Ok(out)
            }
            (Coding::Cylinders(w), Point::Symbolic(s)) if s.code() == w => s.symbols(n),
            (_, other) => Err(Error::DimensionMismatch {
                expected: 1,
                found: other.space().dimension(),
            }),
        }
    }

    /// The set of points with itinerary starting with `word`.
    pub fn cell_region(&self, word: &[u8]) -> Result<Region> {
        if word.iter().any(|s| *s as usize >= self.alphabet()) {
            return Err(Error::InvalidInput("symbol outside the partition alphabet".into()));
        }
        match &self.coding {
            Coding::Dyadic => {
                let mut start = 0.0;
                let mut len = 1.0;
                for &b in word {
                    len *= 0.5;
                    if b == 1 {
                        start += len;
                    }
                }
                Ok(Region {
                    spans: vec![Span { start, len }],
                })
            }
            Coding::OrbitPullback { system, base } => {
                let Some((&last, rest)) = word.split_last() else {
                    return Ok(Region::full());
                };
                let mut region = Region {
                    spans: vec![Self::base_span(base, last as usize)],
                };
                for &s in rest.iter().rev() {
                    let cell = Region {
                        spans: vec![Self::base_span(base, s as usize)],
                    };
                    region = cell.intersect(&region.preimage(system)?);
                }
                Ok(region)
            }
            Coding::Cylinders(w) => {
                let (start, len) = w.cylinder(word);
                Ok(Region {
                    spans: vec![Span { start, len }],
                })
            }
        }
    }

    /// The level-`n` cell containing `x`.
    pub fn cell_of(&self, n: usize, x: &Point) -> Result<Cell> {
        let word = self.word(x, n)?;
        let region = self.cell_region(&word)?;
        Ok(Cell { word, region })
    }

    /// The level-`(n+1)` cells inside a level-`n` cell, skipping null ones.
    pub fn children(&self, cell: &Cell) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for s in 0..self.alphabet() {
            let mut word = cell.word.clone();
            word.push(s as u8);
            let region = self.cell_region(&word)?;
            if region.measure() > 0.0 {
                out.push(Cell { word, region });
            }
        }
        Ok(out)
    }

    /// All positive-measure cells of level `n`, in lexicographic order.
    pub fn cells(&self, n: usize) -> Result<Vec<Cell>> {
        let mut layer = vec![Cell {
            word: Vec::new(),
            region: Region::full(),
        }];
        for _ in 0..n {
            let mut next = Vec::new();
            for c in &layer {
                next.extend(self.children(c)?);
            }
            layer = next;
        }
        Ok(layer)
    }
}

/// A partition cell: its itinerary word and its extent on the circle (or,
/// for shifts, in coding coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub word: Vec<u8>,
    pub region: Region,
}

impl Cell {
    pub fn level(&self) -> usize {
        self.word.len()
    }
}

/// Ball geometry on the phase space.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricSpec {
    /// Arc metric on the circle, or the max of the two arc distances on the 2-torus.
    TorusArc { dimension: usize },
    /// `rho(x, y) = 1/(m + 1/2)` where `m` is the first level whose cells differ.
    PartitionUltrametric(PartitionSequence),
}

/// The region of a ball (or cell).
#[derive(Debug, Clone, PartialEq)]
pub enum BallRegion {
    Arcs(Region),
    /// Product of two arcs on the 2-torus.
    Square([Span; 2]),
    Cell(Cell),
}

impl BallRegion {
    pub fn measure(&self) -> f64 {
        match self {
            BallRegion::Arcs(r) => r.measure(),
            BallRegion::Square([a, b]) => a.len * b.len,
            BallRegion::Cell(c) => c.region.measure(),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match (self, x) {
            (BallRegion::Arcs(r), Point::Circle(v)) => r.contains(*v),
            (BallRegion::Square([a, b]), Point::Torus2([u, v])) => a.contains(*u) && b.contains(*v),
            (BallRegion::Cell(c), Point::Circle(v)) => c.region.contains(*v),
            (BallRegion::Cell(c), Point::Symbolic(s)) => c
                .word
                .iter()
                .enumerate()
                .all(|(i, w)| s.symbol(i).map(|t| t == *w).unwrap_or(false)),
            _ => false,
        }
    }
}

/// Level of the ultrametric ball of radius `r`: the largest `L` with
/// `1/(L + 1/2) < r`, clamped to the available levels. Radii sitting on a
/// grid value `1/(n + 1/2)` (up to rounding) give level `n`.
pub fn ultrametric_level(r: f64, levels: usize) -> usize {
    let t = (1.0 / r - 0.5 + 1e-9).floor();
    if t <= 0.0 {
        0
    } else {
        (t as usize).min(levels)
    }
}

/// The lossless radius grid of the ultrametric: `1/(n + 1/2)` for `n = 0..=levels`.
pub fn ultrametric_radius(n: usize) -> f64 {
    1.0 / (n as f64 + 0.5)
}

impl MetricSpec {
    pub fn torus(dimension: usize) -> Result<Self> {
        if dimension == 1 || dimension == 2 {
            Ok(MetricSpec::TorusArc { dimension })
        } else {
            Err(Error::InvalidInput(format!("torus dimension {dimension} is not 1 or 2")))
        }
    }

    pub fn distance(&self, x1: &Point, x2: &Point) -> Result<f64> {
        match self {
            MetricSpec::TorusArc { dimension } => match (x1, x2) {
                (Point::Circle(a), Point::Circle(b)) if *dimension == 1 => Ok(circle_distance(*a, *b)),
                (Point::Torus2(a), Point::Torus2(b)) if *dimension == 2 => {
                    Ok(circle_distance(a[0], b[0]).max(circle_distance(a[1], b[1])))
                }
                _ => Err(Error::DimensionMismatch {
                    expected: *dimension,
                    found: x1.space().dimension().max(x2.space().dimension()),
                }),
            },
            MetricSpec::PartitionUltrametric(p) => {
                if let (Point::Symbolic(a), Point::Symbolic(b)) = (x1, x2) {
                    for i in 0..p.levels() {
                        let (sa, sb) = (a.symbol(i), b.symbol(i));
                        match (sa, sb) {
                            (Ok(u), Ok(v)) if u != v => return Ok(1.0 / (i as f64 + 1.5)),
                            (Ok(_), Ok(_)) => {}
                            _ => return Err(Error::InsufficientPrefix { level: i + 1 }),
                        }
                    }
                    return Ok(0.0);
                }
                let w1 = p.word(x1, p.levels())?;
                let w2 = p.word(x2, p.levels())?;
                Ok(match w1.iter().zip(&w2).position(|(a, b)| a != b) {
                    Some(i) => 1.0 / (i as f64 + 1.5),
                    None => 0.0,
                })
            }
        }
    }

    /// The open ball `B(x, r)`.
    pub fn ball(&self, x: &Point, r: f64) -> Result<BallRegion> {
        if !(r > 0.0) {
            return Err(Error::InvalidInput(format!("ball radius {r} must be positive")));
        }
        match self {
            MetricSpec::TorusArc { dimension } => {
                let arc = |c: f64| if r >= 0.5 { Span::FULL } else { Span::new(c - r, 2.0 * r) };
                match (x, dimension) {
                    (Point::Circle(v), 1) => Ok(BallRegion::Arcs(Region { spans: vec![arc(*v)] })),
                    (Point::Torus2([u, v]), 2) => Ok(BallRegion::Square([arc(*u), arc(*v)])),
                    _ => Err(Error::DimensionMismatch {
                        expected: *dimension,
                        found: x.space().dimension(),
                    }),
                }
            }
            MetricSpec::PartitionUltrametric(p) => {
                let level = ultrametric_level(r, p.levels());
                Ok(BallRegion::Cell(p.cell_of(level, x)?))
            }
        }
    }

    pub fn ball_measure(&self, region: &BallRegion) -> Result<f64> {
        let m = region.measure();
        if m > 0.0 {
            Ok(m)
        } else {
            Err(Error::ZeroMeasure)
        }
    }

    pub fn ball_average(&self, f: &Observable, x: &Point, r: f64) -> Result<Complex64> {
        let region = self.ball(x, r)?;
        let m = self.ball_measure(&region)?;
        Ok(integrate(f, &region)? / m)
    }
}

/// `int_region f dmu`.
pub fn integrate(f: &Observable, region: &BallRegion) -> Result<Complex64> {
    if let Some(c) = f.constant_value() {
        return Ok(c * region.measure());
    }
    match region {
        BallRegion::Arcs(r) | BallRegion::Cell(Cell { region: r, .. }) => {
            let mut total = Complex64::new(0.0, 0.0);
            for s in &r.spans {
                total += f.integral_from(s.start, s.len)?;
            }
            Ok(total)
        }
        BallRegion::Square([a, b]) => f.integral_box((a.start, a.len), (b.start, b.len)),
    }
}

/// `int_region f o T^power dmu`, exactly.
///
/// Rotations translate the window. The doubling map stretches it: the
/// integral of `f(2^e y)` over `[s, s + l)` equals `2^-e` times the
/// integral of `f` over `[2^e s, 2^e s + 2^e l)`, and both scaled endpoints
/// are exact in floating point, so no quadrature is involved at any `e`.
/// Shifts split a cylinder `[w]` as `[w_0..w_{e-1}]` times `[w_e..]`.
pub fn integrate_composed(system: &SystemSpec, f: &Observable, region: &BallRegion, power: u64) -> Result<Complex64> {
    if power == 0 {
        return integrate(f, region);
    }
    if let Some(c) = f.constant_value() {
        return Ok(c * region.measure());
    }
    match (system, region) {
        (SystemSpec::Identity, _) => integrate(f, region),
        (SystemSpec::CircleRotation(a), BallRegion::Arcs(r) | BallRegion::Cell(Cell { region: r, .. })) => {
            let t = a.times(power);
            let mut total = Complex64::new(0.0, 0.0);
            for s in &r.spans {
                total += f.integral_from(mod1(s.start + t), s.len)?;
            }
            Ok(total)
        }
        (SystemSpec::DoublingMap, BallRegion::Arcs(r) | BallRegion::Cell(Cell { region: r, .. })) => {
            if power >= 1000 {
                return Ok(f.mean()? * r.measure());
            }
            let scale = 2f64.powi(power as i32);
            let mut total = Complex64::new(0.0, 0.0);
            for s in &r.spans {
                total += f.integral_from(mod1(s.start * scale), s.len * scale)? / scale;
            }
            Ok(total)
        }
        (SystemSpec::ProductRotationIdentity(a), BallRegion::Square([u, v])) => {
            f.integral_box((mod1(u.start + a.times(power)), u.len), (v.start, v.len))
        }
        (SystemSpec::ShiftBernoulli(w), BallRegion::Cell(cell)) => {
            let word = &cell.word;
            if (power as usize) <= word.len() {
                let e = power as usize;
                let head: f64 = word[..e].iter().map(|s| w.weight(*s)).product();
                let (start, len) = w.cylinder(&word[e..]);
                Ok(f.integral_from(start, len)? * head)
            } else {
                Ok(f.mean()? * cell.region.measure())
            }
        }
        (s, _) => Err(Error::Unsupported(format!(
            "ball integrals of compositions with {} over this region kind",
            s.label()
        ))),
    }
}

/// `E[f | P(n)](x)`.
pub fn conditional_expectation(partitions: &PartitionSequence, f: &Observable, n: usize, x: &Point) -> Result<Complex64> {
    let cell = partitions.cell_of(n, x)?;
    let m = cell.region.measure();
    if !(m > 0.0) {
        return Err(Error::ZeroMeasure);
    }
    Ok(integrate(f, &BallRegion::Cell(cell))? / m)
}
