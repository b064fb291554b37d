//! Orbit-limit analytics: ω-limit estimation, pointwise limit profiles,
//! asymptotic comparison of map sequences, uniform-limit detection and
//! equicontinuity tables.
//!
//! Every decision here is scoped to a finite window: "asymptotic" means
//! "all defects past `tail_start` are below `eps` up to `N`", nothing more.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::maps::MapRep;
use crate::space::{epsilon_cluster, hausdorff, Point, PointSet, Space, POINT_EQ_TOL};
use crate::system::System;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OmegaParams {
    pub burn_in: usize,
    pub keep: usize,
    pub eps: f64,
}

impl Default for OmegaParams {
    fn default() -> Self {
        OmegaParams {
            burn_in: 1_000,
            keep: 10_000,
            eps: 1e-3,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OmegaEstimate {
    pub centers: PointSet,
    pub burn_in: usize,
    pub keep: usize,
    pub eps: f64,
    pub label: String,
    pub x0: Point,
}

/// Cluster the orbit window `(burn_in, burn_in + keep]` at radius `eps`.
pub fn omega_limit(sys: &System, x: &Point, params: OmegaParams) -> Result<OmegaEstimate> {
    if params.keep == 0 {
        return config("omega_limit needs keep >= 1");
    }
    if !(params.eps > 0.0) {
        return config("omega_limit needs eps > 0");
    }
    let traj = sys.trajectory(x, params.burn_in + params.keep)?;
    let window = PointSet::new(traj.points[params.burn_in + 1..].to_vec());
    let centers = epsilon_cluster(sys.space(), &window, params.eps)?;
    Ok(OmegaEstimate {
        centers,
        burn_in: params.burn_in,
        keep: params.keep,
        eps: params.eps,
        label: sys.label().to_string(),
        x0: traj.x0,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitProfile {
    pub grid: PointSet,
    pub values: Vec<PointSet>,
    pub max_jump: f64,
}

/// For each grid point, the clustered tail `{f_1^n(x) : N - window < n ≤ N}`;
/// `max_jump` is the largest Hausdorff distance between the value sets of
/// consecutive grid points.
pub fn pointwise_limit_profile(
    sys: &System,
    grid: &PointSet,
    n: usize,
    window: usize,
    eps: f64,
) -> Result<LimitProfile> {
    if window == 0 || window > n {
        return config(format!(
            "limit profile needs 1 <= window <= N, got window {window}, N {n}"
        ));
    }
    let space = sys.space();
    let maps = sys.maps(1, n)?;
    let values = sys.sweep(grid, |x| {
        let mut cur = x.clone();
        let mut tail = Vec::with_capacity(window);
        for (i, m) in maps.iter().enumerate() {
            cur = m.eval(&cur)?;
            if i + 1 > n - window {
                tail.push(cur.clone());
            }
        }
        epsilon_cluster(space, &PointSet::new(tail), eps)
    })?;
    let max_jump = values
        .windows(2)
        .map(|w| hausdorff(space, &w[0], &w[1]))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(LimitProfile {
        grid: grid.clone(),
        values,
        max_jump,
    })
}

/// Which map sequence of a system to look at.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewKind {
    /// `n ↦ f_n`
    Maps,
    /// `n ↦ f_1^n`
    Iterates,
    /// `n ↦ φ ∘ f_1^n` with `φ` the declared limit
    LimitAfterIterates,
    /// `n ↦ f_1^{n+1}`
    NextIterates,
}

#[derive(Clone, Debug)]
pub struct SequenceView {
    pub system: System,
    pub kind: ViewKind,
}

impl SequenceView {
    pub fn new(system: &System, kind: ViewKind) -> Result<SequenceView> {
        if kind == ViewKind::LimitAfterIterates && system.limit().is_none() {
            return config(format!("system '{}' has no declared limit", system.label()));
        }
        Ok(SequenceView {
            system: system.clone(),
            kind,
        })
    }

    pub fn label(&self) -> String {
        let k = match self.kind {
            ViewKind::Maps => "f_n",
            ViewKind::Iterates => "f_1^n",
            ViewKind::LimitAfterIterates => "phi∘f_1^n",
            ViewKind::NextIterates => "f_1^(n+1)",
        };
        format!("{}:{k}", self.system.label())
    }

    /// Values of the viewed sequence at `x` for `n = 1..=N`.
    pub fn values(&self, maps: &[Arc<MapRep>], x: &Point, n: usize) -> Result<Vec<Point>> {
        let mut out = Vec::with_capacity(n);
        match self.kind {
            ViewKind::Maps => {
                for m in &maps[..n] {
                    out.push(m.eval(x)?);
                }
            }
            ViewKind::Iterates | ViewKind::LimitAfterIterates | ViewKind::NextIterates => {
                let mut cur = x.clone();
                if self.kind == ViewKind::NextIterates {
                    cur = maps[0].eval(&cur)?;
                }
                let offset = usize::from(self.kind == ViewKind::NextIterates);
                let phi = self.system.limit();
                for m in &maps[offset..n + offset] {
                    cur = m.eval(&cur)?;
                    match (self.kind, phi) {
                        (ViewKind::LimitAfterIterates, Some(phi)) => out.push(phi.eval(&cur)?),
                        _ => out.push(cur.clone()),
                    }
                }
            }
        }
        Ok(out)
    }

    /// Maps needed to produce `N` values.
    pub fn maps_needed(&self, n: usize) -> Result<Vec<Arc<MapRep>>> {
        let extra = usize::from(self.kind == ViewKind::NextIterates);
        self.system.maps(1, n + extra)
    }

    /// Values for every grid point, in grid order.
    pub fn sweep(&self, grid: &PointSet, n: usize) -> Result<Vec<Vec<Point>>> {
        let maps = self.maps_needed(n)?;
        self.system.sweep(grid, |x| self.values(&maps, x, n))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticsReport {
    pub label_a: String,
    pub label_b: String,
    /// `per_x_defect[i][n - 1] = d(a_n(x_i), b_n(x_i))`.
    pub per_x_defect: Vec<Vec<f64>>,
    /// `uniform_defect[n - 1] = max_i per_x_defect[i][n - 1]`.
    pub uniform_defect: Vec<f64>,
    pub decision_pointwise: bool,
    pub decision_uniform: bool,
    pub eps: f64,
    pub tail_start: usize,
    /// Last index with defect ≥ eps, per grid point.
    pub last_violation: Vec<Option<usize>>,
    /// Fraction of `n ≤ N` with uniform defect below eps.
    pub density_uniform: f64,
    /// Smallest per-point fraction of `n ≤ N` with defect below eps.
    pub density_pointwise_min: f64,
}

pub fn asymptotic_report(
    a: &SequenceView,
    b: &SequenceView,
    grid: &PointSet,
    n: usize,
    eps: f64,
    tail_start: usize,
) -> Result<AsymptoticsReport> {
    if n == 0 {
        return config("asymptotic_report needs N >= 1");
    }
    let space = a.system.space();
    let va = a.sweep(grid, n)?;
    let vb = b.sweep(grid, n)?;
    let per_x_defect: Vec<Vec<f64>> = va
        .par_iter()
        .zip(vb.par_iter())
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(p, q)| space.dist(p, q)).collect())
        .collect();
    let uniform_defect: Vec<f64> = (0..n)
        .map(|k| per_x_defect.iter().map(|r| r[k]).fold(0.0, f64::max))
        .collect();
    let last_violation: Vec<Option<usize>> = per_x_defect
        .iter()
        .map(|r| r.iter().rposition(|&d| !(d < eps)).map(|k| k + 1))
        .collect();
    let decision_pointwise = last_violation
        .iter()
        .all(|v| v.is_none_or(|k| k <= tail_start));
    let decision_uniform = uniform_defect.iter().skip(tail_start).all(|&d| d < eps);
    let frac = |r: &[f64]| r.iter().filter(|&&d| d < eps).count() as f64 / n as f64;
    Ok(AsymptoticsReport {
        label_a: a.label(),
        label_b: b.label(),
        density_uniform: frac(&uniform_defect),
        density_pointwise_min: per_x_defect.iter().map(|r| frac(r)).fold(1.0, f64::min),
        per_x_defect,
        uniform_defect,
        decision_pointwise,
        decision_uniform,
        eps,
        tail_start,
        last_violation,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct UniformLimitReport {
    /// `sup_defect[n - 1] = max_grid d(f_n(x), φ(x))`.
    pub sup_defect: Vec<f64>,
    pub converges: bool,
    /// Largest defect over the last quarter of indices.
    pub eps_at_tail: f64,
    pub tolerance: f64,
}

pub const DEFAULT_UNIFORM_TOL: f64 = 1e-2;

pub fn uniform_limit(
    sys: &System,
    grid: &PointSet,
    n: usize,
    tol: f64,
) -> Result<UniformLimitReport> {
    let Some(phi) = sys.limit() else {
        return config(format!("system '{}' has no declared limit", sys.label()));
    };
    if n == 0 {
        return config("uniform_limit needs N >= 1");
    }
    let space = sys.space();
    let maps = sys.maps(1, n)?;
    let limits = sys.sweep(grid, |x| phi.eval(x))?;
    let sup_defect = maps
        .par_iter()
        .map(|m| {
            grid.iter()
                .zip(&limits)
                .map(|(x, l)| m.eval(x).map(|y| space.dist(&y, l)))
                .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let start = n - n.div_ceil(4);
    let eps_at_tail = sup_defect[start..].iter().copied().fold(0.0, f64::max);
    Ok(UniformLimitReport {
        converges: eps_at_tail < tol,
        sup_defect,
        eps_at_tail,
        tolerance: tol,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquiFamily {
    /// `{f_1^n : n ≤ N}`
    Iterates,
    /// `{φ ∘ f_1^n : n ≤ N}`
    LimitAfterIterates,
}

#[derive(Clone, Debug, Serialize)]
pub struct EquicontinuityReport {
    /// `(delta, eps_observed)` sorted by delta.
    pub table: Vec<(f64, f64)>,
    pub family_label: String,
    pub verdict_hint: bool,
}

/// Exhaustive modulus-of-continuity table over grid pairs and `n ≤ N`.
/// A pair counts for `delta` when `d(x, y) < delta + 1e-12`, so grid
/// neighbours at exactly the grid spacing are included.
pub fn equicontinuity(
    sys: &System,
    family: EquiFamily,
    grid: &PointSet,
    n: usize,
    deltas: &[f64],
) -> Result<EquicontinuityReport> {
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return config("deltas must be positive");
    }
    if deltas.windows(2).any(|w| w[0] > w[1]) {
        return config("deltas must be sorted ascending");
    }
    let kind = match family {
        EquiFamily::Iterates => ViewKind::Iterates,
        EquiFamily::LimitAfterIterates => ViewKind::LimitAfterIterates,
    };
    let view = SequenceView::new(sys, kind)?;
    let values = view.sweep(grid, n)?;
    let space = sys.space();
    let pts = grid.points();
    let dmax = deltas[deltas.len() - 1] + POINT_EQ_TOL;
    // For each close pair: (d(x, y), max_n d(g_n x, g_n y)).
    let pairs: Vec<(f64, f64)> = (0..pts.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let values = &values;
            (i + 1..pts.len()).filter_map(move |j| {
                let d = space.dist(&pts[i], &pts[j]);
                (d < dmax).then(|| {
                    let spread = values[i]
                        .iter()
                        .zip(&values[j])
                        .map(|(p, q)| space.dist(p, q))
                        .fold(0.0, f64::max);
                    (d, spread)
                })
            })
        })
        .collect();
    let table: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&delta| {
            let eps = pairs
                .iter()
                .filter(|(d, _)| *d < delta + POINT_EQ_TOL)
                .map(|(_, s)| *s)
                .fold(0.0, f64::max);
            (delta, eps)
        })
        .collect();
    let first = table[0].1;
    let last = table[table.len() - 1].1;
    Ok(EquicontinuityReport {
        family_label: view.label(),
        verdict_hint: first == 0.0 || first < last,
        table,
    })
}

/// Hausdorff distance helper over a space, for callers holding raw vectors.
pub fn hausdorff_points(space: &Space, a: Vec<Point>, b: Vec<Point>) -> Result<f64> {
    hausdorff(space, &PointSet::new(a), &PointSet::new(b))
}
