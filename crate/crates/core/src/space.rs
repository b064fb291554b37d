//! Compact metric domains and the point-set utilities built on them.
//!
//! Three domain shapes are supported: closed intervals, axis-aligned boxes
//! and circles of a given circumference. Circle coordinates are always
//! stored as the canonical representative in `[0, circumference)`.

use std::cmp::Ordering;
use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{config, domain, NdsError, Result};

/// Two points closer than this are considered equal.
pub const POINT_EQ_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Euclidean,
    Chebyshev,
    Arc,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpaceKind {
    Interval { lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Circle { circumference: f64 },
}

/// A compact metric space. Construct through [`Space::interval`],
/// [`Space::box_space`] or [`Space::circle`] so the bounds are validated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpec", into = "SpaceSpec")]
pub struct Space {
    kind: SpaceKind,
    metric: Metric,
}

/// JSON form of a [`Space`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Interval {
        lo: f64,
        hi: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        metric: Option<Metric>,
    },
    Circle {
        #[serde(default = "unit")]
        circumference: f64,
    },
}

fn unit() -> f64 {
    1.0
}

impl TryFrom<SpaceSpec> for Space {
    type Error = NdsError;

    fn try_from(spec: SpaceSpec) -> Result<Space> {
        match spec {
            SpaceSpec::Interval { lo, hi } => Space::interval(lo, hi),
            SpaceSpec::Box { lo, hi, metric } => {
                Space::box_space(lo, hi, metric.unwrap_or(Metric::Euclidean))
            }
            SpaceSpec::Circle { circumference } => Space::circle(circumference),
        }
    }
}

impl From<Space> for SpaceSpec {
    fn from(space: Space) -> SpaceSpec {
        match space.kind {
            SpaceKind::Interval { lo, hi } => SpaceSpec::Interval { lo, hi },
            SpaceKind::Box { lo, hi } => SpaceSpec::Box {
                lo,
                hi,
                metric: Some(space.metric),
            },
            SpaceKind::Circle { circumference } => SpaceSpec::Circle { circumference },
        }
    }
}

/// A point of a space. Interval and circle points have one coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(SmallVec<[f64; 2]>);

impl Point {
    pub fn new(coords: &[f64]) -> Point {
        Point(SmallVec::from_slice(coords))
    }

    pub fn scalar(x: f64) -> Point {
        Point(SmallVec::from_slice(&[x]))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub(crate) fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    /// First coordinate; the whole point for one-dimensional spaces.
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Lexicographic total order on coordinates.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(other.0.iter()) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.as_slice().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Point, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        Ok(Point::new(&v))
    }
}

impl Space {
    pub fn interval(lo: f64, hi: f64) -> Result<Space> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return config(format!("interval needs finite lo < hi, got [{lo}, {hi}]"));
        }
        Ok(Space {
            kind: SpaceKind::Interval { lo, hi },
            metric: Metric::Euclidean,
        })
    }

    pub fn box_space(lo: Vec<f64>, hi: Vec<f64>, metric: Metric) -> Result<Space> {
        if lo.is_empty() || lo.len() != hi.len() {
            return config("box bounds must be nonempty and of equal length");
        }
        if lo
            .iter()
            .zip(&hi)
            .any(|(l, h)| !(l.is_finite() && h.is_finite() && l < h))
        {
            return config("box needs finite lo[i] < hi[i] on every axis");
        }
        if metric == Metric::Arc {
            return config("arc metric is only available on circles");
        }
        Ok(Space {
            kind: SpaceKind::Box { lo, hi },
            metric,
        })
    }

    pub fn circle(circumference: f64) -> Result<Space> {
        if !(circumference.is_finite() && circumference > 0.0) {
            return config(format!(
                "circle circumference must be positive, got {circumference}"
            ));
        }
        Ok(Space {
            kind: SpaceKind::Circle { circumference },
            metric: Metric::Arc,
        })
    }

    pub fn unit_interval() -> Space {
        Space::interval(0.0, 1.0).expect("valid bounds")
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            SpaceKind::Box { lo, .. } => lo.len(),
            _ => 1,
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.kind, SpaceKind::Circle { .. })
    }

    /// Lower and upper bound of axis `i`.
    pub fn axis_bounds(&self, i: usize) -> (f64, f64) {
        match &self.kind {
            SpaceKind::Interval { lo, hi } => (*lo, *hi),
            SpaceKind::Box { lo, hi } => (lo[i], hi[i]),
            SpaceKind::Circle { circumference } => (0.0, *circumference),
        }
    }

    /// Largest absolute coordinate value reachable in the domain.
    pub fn max_abs_coord(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let (lo, hi) = self.axis_bounds(i);
                lo.abs().max(hi.abs())
            })
            .fold(0.0, f64::max)
    }

    fn wrap(c: f64, x: f64) -> f64 {
        let r = x.rem_euclid(c);
        if r >= c {
            0.0
        } else {
            r
        }
    }

    /// Canonicalize circle coordinates in place; no-op elsewhere.
    pub fn canonicalize(&self, p: &mut Point) {
        if let SpaceKind::Circle { circumference } = self.kind {
            let c = p.coords_mut();
            c[0] = Self::wrap(circumference, c[0]);
        }
    }

    /// Distance from `p` to the domain (0 when inside). Circle points are
    /// always inside once canonicalized.
    pub fn excursion(&self, p: &Point) -> f64 {
        if self.is_circle() {
            return if p.x().is_finite() {
                0.0
            } else {
                f64::INFINITY
            };
        }
        let mut worst = 0.0f64;
        for (i, &c) in p.coords().iter().enumerate() {
            if !c.is_finite() {
                return f64::INFINITY;
            }
            let (lo, hi) = self.axis_bounds(i);
            let out = if c < lo {
                lo - c
            } else if c > hi {
                c - hi
            } else {
                0.0
            };
            worst = match self.metric {
                Metric::Euclidean => worst.hypot(out),
                _ => worst.max(out),
            };
        }
        worst
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.dim() == self.dim() && self.excursion(p) <= POINT_EQ_TOL
    }

    /// Validate and canonicalize raw coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        let mut p = Point::new(coords);
        self.check(&mut p)?;
        Ok(p)
    }

    /// Canonicalize `p` and fail if it lies outside the domain.
    pub fn check(&self, p: &mut Point) -> Result<()> {
        if p.dim() != self.dim() {
            return domain(format!(
                "point has dimension {}, space has {}",
                p.dim(),
                self.dim()
            ));
        }
        self.canonicalize(p);
        let e = self.excursion(p);
        if e > POINT_EQ_TOL {
            return domain(format!(
                "point {:?} lies {e:e} outside the domain",
                p.coords()
            ));
        }
        Ok(())
    }

    /// Distance without dimension checks; both points must belong to the space.
    #[inline]
    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        match &self.kind {
            SpaceKind::Interval { .. } => (a.x() - b.x()).abs(),
            SpaceKind::Circle { circumference } => {
                let d = (a.x() - b.x()).abs().rem_euclid(*circumference);
                d.min(circumference - d)
            }
            SpaceKind::Box { .. } => {
                let it = a
                    .coords()
                    .iter()
                    .zip(b.coords())
                    .map(|(x, y)| (x - y).abs());
                match self.metric {
                    Metric::Chebyshev => it.fold(0.0, f64::max),
                    _ => it.fold(0.0, |acc: f64, d| acc.hypot(d)),
                }
            }
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        if a.dim() != self.dim() || b.dim() != self.dim() {
            return domain(format!(
                "dimension mismatch: {} and {} in a space of dimension {}",
                a.dim(),
                b.dim(),
                self.dim()
            ));
        }
        Ok(self.dist(a, b))
    }

    /// Uniform grid with `resolution` points per axis. Interval and box grids
    /// include both endpoints; circle grids are evenly spaced from 0.
    pub fn grid(&self, resolution: usize) -> Result<PointSet> {
        if resolution < 2 {
            return config(format!(
                "grid resolution must be at least 2, got {resolution}"
            ));
        }
        let axis = |i: usize| -> Vec<f64> {
            let (lo, hi) = self.axis_bounds(i);
            if self.is_circle() {
                (0..resolution)
                    .map(|j| hi * j as f64 / resolution as f64)
                    .collect()
            } else {
                let steps = (resolution - 1) as f64;
                (0..resolution)
                    .map(|j| {
                        if j + 1 == resolution {
                            hi
                        } else {
                            lo + (hi - lo) * (j as f64 / steps)
                        }
                    })
                    .collect()
            }
        };
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(axis).collect();
        let mut points = vec![Point::new(&[])];
        for values in &axes {
            let mut next = Vec::with_capacity(points.len() * values.len());
            for p in &points {
                for &v in values {
                    let mut q = p.clone();
                    q.0.push(v);
                    next.push(q);
                }
            }
            points = next;
        }
        Ok(PointSet::new(points))
    }

    /// Grid spacing along the widest axis for a grid of the given resolution.
    pub fn grid_spacing(&self, resolution: usize) -> f64 {
        (0..self.dim())
            .map(|i| {
                let (lo, hi) = self.axis_bounds(i);
                if self.is_circle() {
                    (hi - lo) / resolution as f64
                } else {
                    (hi - lo) / (resolution.max(2) - 1) as f64
                }
            })
            .fold(0.0, f64::max)
    }

    /// Every domain point lies within this distance of some grid point.
    pub fn covering_radius(&self, resolution: usize) -> f64 {
        let half = self.grid_spacing(resolution) / 2.0;
        match self.metric {
            Metric::Euclidean => half * (self.dim() as f64).sqrt(),
            _ => half,
        }
    }
}

/// An ordered, duplicate-free collection of points. Construction sorts the
/// points lexicographically, so the order never depends on how the points
/// were produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointSet {
    points: Vec<Point>,
}

impl PointSet {
    pub fn new(mut points: Vec<Point>) -> PointSet {
        points.sort_by(Point::lex_cmp);
        points.dedup_by(|a, b| a.lex_cmp(b) == Ordering::Equal);
        PointSet { points }
    }

    /// Keep the given order; the caller guarantees it is sorted and distinct.
    fn from_sorted(points: Vec<Point>) -> PointSet {
        PointSet { points }
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// One row per point, every coordinate rendered with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let dim = self.points.first().map_or(1, Point::dim);
        let mut out = (0..dim)
            .map(|i| format!("x{i}"))
            .collect::<Vec<_>>()
            .join(",");
        out.push('\n');
        for p in &self.points {
            let row: Vec<String> = p
                .coords()
                .iter()
                .map(|&c| crate::report::fmt_real(c))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Point;
    type IntoIter = std::slice::Iter<'a, Point>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

pub fn distance(space: &Space, a: &Point, b: &Point) -> Result<f64> {
    space.distance(a, b)
}

/// `sup_{a in from} inf_{b in to} d(a, b)` by exhaustive search.
pub fn directed_hausdorff(space: &Space, from: &PointSet, to: &PointSet) -> f64 {
    from.points
        .par_iter()
        .map(|a| {
            to.points
                .iter()
                .map(|b| space.dist(a, b))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max)
}

/// Symmetric Hausdorff distance by exhaustive pairwise comparison.
pub fn hausdorff(space: &Space, a: &PointSet, b: &PointSet) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(NdsError::EmptySet);
    }
    Ok(directed_hausdorff(space, a, b).max(directed_hausdorff(space, b, a)))
}

pub fn grid(space: &Space, resolution: usize) -> Result<PointSet> {
    space.grid(resolution)
}

/// Bucket index used to restrict the center search to neighbouring cells.
struct CellIndex {
    width: Vec<f64>,
    origin: Vec<f64>,
    wrap: Option<i64>,
    cells: HashMap<SmallVec<[i64; 2]>, Vec<usize>>,
}

impl CellIndex {
    fn new(space: &Space, eps: f64) -> Option<CellIndex> {
        let dim = space.dim();
        if dim > 4 {
            return None;
        }
        match space.kind() {
            SpaceKind::Circle { circumference } => {
                let n = (circumference / eps).floor();
                if !(3.0..=1e12).contains(&n) {
                    return None;
                }
                Some(CellIndex {
                    width: vec![circumference / n],
                    origin: vec![0.0],
                    wrap: Some(n as i64),
                    cells: HashMap::new(),
                })
            }
            _ => Some(CellIndex {
                width: vec![eps; dim],
                origin: (0..dim).map(|i| space.axis_bounds(i).0).collect(),
                wrap: None,
                cells: HashMap::new(),
            }),
        }
    }

    fn key(&self, p: &Point) -> SmallVec<[i64; 2]> {
        p.coords()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let k = ((c - self.origin[i]) / self.width[i]).floor() as i64;
                match self.wrap {
                    Some(n) => k.rem_euclid(n),
                    None => k,
                }
            })
            .collect()
    }

    fn neighbours(&self, key: &[i64]) -> Vec<SmallVec<[i64; 2]>> {
        let mut out: Vec<SmallVec<[i64; 2]>> = vec![SmallVec::new()];
        for &k in key {
            let mut next = Vec::with_capacity(out.len() * 3);
            for prefix in &out {
                for off in -1..=1 {
                    let mut v = prefix.clone();
                    v.push(match self.wrap {
                        Some(n) => (k + off).rem_euclid(n),
                        None => k + off,
                    });
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }
}

/// Greedy first-seen ε-net of `cloud` in its stored order: a point becomes a
/// center iff it is at distance ≥ `eps` from every center chosen so far.
pub fn epsilon_cluster(space: &Space, cloud: &PointSet, eps: f64) -> Result<PointSet> {
    if !(eps > 0.0) {
        return config(format!("cluster eps must be positive, got {eps}"));
    }
    if cloud.is_empty() {
        return Err(NdsError::EmptySet);
    }
    let mut centers: Vec<Point> = Vec::new();
    match CellIndex::new(space, eps) {
        Some(mut index) => {
            for p in cloud {
                let key = index.key(p);
                let near = index.neighbours(&key).iter().any(|k| {
                    index
                        .cells
                        .get(k)
                        .is_some_and(|ids| ids.iter().any(|&i| space.dist(&centers[i], p) < eps))
                });
                if !near {
                    index.cells.entry(key).or_default().push(centers.len());
                    centers.push(p.clone());
                }
            }
        }
        None => {
            for p in cloud {
                if centers.iter().all(|c| space.dist(c, p) >= eps) {
                    centers.push(p.clone());
                }
            }
        }
    }
    // The cloud is sorted, so the centers already are.
    Ok(PointSet::from_sorted(centers))
}
