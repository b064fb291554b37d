//! Verifiers for the iterate identities and limit properties of
//! nonautonomous systems. Each check returns a [`VerdictReport`] whose
//! `max_defect` is compared against an explicit tolerance.
//!
//! The three composition identities (split, periodic decomposition,
//! induced system) run at tolerance 0: both sides perform the same map
//! applications in the same order, so any nonzero defect is a bug. Limit
//! checks are scoped to a finite window of indices that the report names.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::analysis::{omega_limit, uniform_limit, OmegaParams, DEFAULT_UNIFORM_TOL};
use crate::error::{config, domain, Result};
use crate::maps::MapRep;
use crate::space::{directed_hausdorff, hausdorff, Point, PointSet, Space};
use crate::system::{apply_in_order, Gamma, System, DEFAULT_ADDITIVITY_HORIZON};

/// Default tail tolerance for limit checks.
pub const DEFAULT_EPS: f64 = 1e-2;
/// Default residual tolerance for fixed points.
pub const DEFAULT_FIXED_POINT_TOL: f64 = 1e-6;
/// Default tolerance for the φ-invariance of ω-limit estimates.
pub const DEFAULT_KEMPF_TOL: f64 = 5e-3;

#[derive(Clone, Debug, Serialize)]
pub struct VerdictReport {
    pub check: String,
    pub passed: bool,
    pub max_defect: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub defect_series: Option<Vec<(usize, f64)>>,
    pub config: Value,
    pub details: Map<String, Value>,
}

impl VerdictReport {
    fn new(
        check: &str,
        max_defect: f64,
        tolerance: f64,
        defect_series: Option<Vec<(usize, f64)>>,
        config: Value,
        details: Map<String, Value>,
    ) -> VerdictReport {
        VerdictReport {
            check: check.to_string(),
            passed: max_defect <= tolerance,
            max_defect,
            tolerance,
            defect_series,
            config,
            details,
        }
    }
}

fn series_max(series: &[(usize, f64)]) -> f64 {
    series.iter().map(|s| s.1).fold(0.0, f64::max)
}

/// Merge per-point series (all indexed alike) by taking the max at each index.
fn merge_max(rows: Vec<Vec<(usize, f64)>>) -> Vec<(usize, f64)> {
    let mut out: Vec<(usize, f64)> = Vec::new();
    for row in rows {
        if out.is_empty() {
            out = row;
        } else {
            for (o, r) in out.iter_mut().zip(row) {
                debug_assert_eq!(o.0, r.0);
                o.1 = o.1.max(r.1);
            }
        }
    }
    out
}

/// Evaluation points plus a bound on how far any domain point is from them.
#[derive(Clone, Debug)]
pub struct Grid {
    pub points: PointSet,
    pub covering_radius: f64,
    pub resolution: Option<usize>,
}

impl Grid {
    pub fn uniform(space: &Space, resolution: usize) -> Result<Grid> {
        Ok(Grid {
            points: space.grid(resolution)?,
            covering_radius: space.covering_radius(resolution),
            resolution: Some(resolution),
        })
    }

    /// Arbitrary evaluation points; the covering radius is measured against
    /// a fine reference grid.
    pub fn from_points(space: &Space, points: Vec<Point>) -> Result<Grid> {
        let pts = points
            .into_iter()
            .map(|p| space.point(p.coords()))
            .collect::<Result<Vec<_>>>()?;
        if pts.is_empty() {
            return config("grid needs at least one point");
        }
        let points = PointSet::new(pts);
        let res = match space.dim() {
            1 => 1001,
            2 => 101,
            _ => 11,
        };
        let reference = space.grid(res)?;
        let covering_radius =
            directed_hausdorff(space, &reference, &points) + space.covering_radius(res);
        Ok(Grid {
            points,
            covering_radius,
            resolution: None,
        })
    }

    fn echo(&self) -> Value {
        match self.resolution {
            Some(r) => json!(r),
            None => json!(self.points),
        }
    }
}

/// `f_1^p = f_k^{p-k+1} ∘ f_1^{k-1}`: the orbit through the shifted system
/// agrees bit for bit with the direct orbit, for `2 ≤ k ≤ k_max` and
/// `k ≤ n ≤ n_max`.
pub fn check_split(sys: &System, k_max: usize, n_max: usize, grid: &Grid) -> Result<VerdictReport> {
    if !(2 <= k_max && k_max <= n_max) {
        return config(format!(
            "check_split needs 2 <= k_max <= n_max, got {k_max}, {n_max}"
        ));
    }
    let space = sys.space();
    let base = sys.maps(1, n_max)?;
    let shifted: Vec<Vec<Arc<MapRep>>> = (2..=k_max)
        .map(|k| sys.shift(k)?.maps(1, n_max - k + 1))
        .collect::<Result<_>>()?;
    let rows = sys.sweep(&grid.points, |x| {
        let mut prefix = Vec::with_capacity(n_max + 1);
        prefix.push(x.clone());
        for m in &base {
            let next = m.eval(prefix.last().expect("nonempty"))?;
            prefix.push(next);
        }
        let mut row: Vec<(usize, f64)> = (1..=n_max).map(|n| (n, 0.0)).collect();
        for (ki, maps) in shifted.iter().enumerate() {
            let k = ki + 2;
            let mut cur = prefix[k - 1].clone();
            for (m, map) in maps.iter().enumerate() {
                cur = map.eval(&cur)?;
                let n = k + m;
                let d = space.dist(&cur, &prefix[n]);
                row[n - 1].1 = row[n - 1].1.max(d);
            }
        }
        Ok(row)
    })?;
    let series = merge_max(rows);
    let cfg = json!({
        "system": sys.label(),
        "k_max": k_max,
        "n_max": n_max,
        "grid": grid.echo(),
    });
    Ok(VerdictReport::new(
        "check_split",
        series_max(&series),
        0.0,
        Some(series),
        cfg,
        Map::new(),
    ))
}

/// `f_1^{kl+j} = (f_j ∘ … ∘ f_1) ∘ (f_k ∘ … ∘ f_1)^l` for a period-`k`
/// system, all `l ≤ l_max` and `j < k`.
pub fn check_periodic(sys: &System, l_max: usize, grid: &Grid) -> Result<VerdictReport> {
    let (g, residues) = sys.periodic_reduce()?;
    let k = residues.len();
    let n_top = k * l_max + k - 1;
    let space = sys.space();
    let base = sys.maps(1, n_top)?;
    let rows = sys.sweep(&grid.points, |x| {
        let mut prefix = Vec::with_capacity(n_top + 1);
        prefix.push(x.clone());
        for m in &base {
            let next = m.eval(prefix.last().expect("nonempty"))?;
            prefix.push(next);
        }
        let mut row = Vec::with_capacity(n_top + 1);
        let mut g_pow = x.clone();
        for l in 0..=l_max {
            if l > 0 {
                g_pow = g.eval(&g_pow)?;
            }
            for (j, r) in residues.iter().enumerate() {
                let rhs = r.eval(&g_pow)?;
                row.push((k * l + j, space.dist(&prefix[k * l + j], &rhs)));
            }
        }
        Ok(row)
    })?;
    let series = merge_max(rows);
    let cfg = json!({
        "system": sys.label(),
        "period": k,
        "l_max": l_max,
        "grid": grid.echo(),
    });
    Ok(VerdictReport::new(
        "check_periodic",
        series_max(&series),
        0.0,
        Some(series),
        cfg,
        Map::new(),
    ))
}

/// Iterates of the induced system equal base iterates at `k_n`. For finite
/// index lists `n_max` is capped at the list length.
pub fn check_induced(
    sys: &System,
    gamma: &Gamma,
    n_max: usize,
    grid: &Grid,
    horizon: usize,
) -> Result<VerdictReport> {
    let induced = sys.induce(gamma.clone())?;
    let n_eff = gamma.len().map_or(n_max, |l| l.min(n_max));
    let k_top = gamma.k(n_eff)?;
    let space = sys.space();
    let base = sys.maps(1, k_top)?;
    let ind = induced.maps(1, n_eff)?;
    let ks: Vec<usize> = (1..=n_eff).map(|n| gamma.k(n)).collect::<Result<_>>()?;
    let rows = sys.sweep(&grid.points, |x| {
        let mut prefix = Vec::with_capacity(k_top + 1);
        prefix.push(x.clone());
        for m in &base {
            let next = m.eval(prefix.last().expect("nonempty"))?;
            prefix.push(next);
        }
        let mut cur = x.clone();
        let mut row = Vec::with_capacity(n_eff);
        for (i, m) in ind.iter().enumerate() {
            cur = m.eval(&cur)?;
            row.push((i + 1, space.dist(&cur, &prefix[ks[i]])));
        }
        Ok(row)
    })?;
    let series = merge_max(rows);
    let additive = gamma.is_additive(horizon);
    let cfg = json!({
        "system": sys.label(),
        "gamma": gamma,
        "n_max": n_max,
        "grid": grid.echo(),
        "additivity_horizon": horizon,
    });
    let mut details = Map::new();
    details.insert("gamma_additive".into(), json!(additive));
    details.insert("n_checked".into(), json!(n_eff));
    Ok(VerdictReport::new(
        "check_induced",
        series_max(&series),
        0.0,
        Some(series),
        cfg,
        details,
    ))
}

pub fn check_induced_default(
    sys: &System,
    gamma: &Gamma,
    n_max: usize,
    grid: &Grid,
) -> Result<VerdictReport> {
    check_induced(sys, gamma, n_max, grid, DEFAULT_ADDITIVITY_HORIZON)
}

fn require_limit(sys: &System) -> Result<Arc<MapRep>> {
    match sys.limit() {
        Some(l) => Ok(l.clone()),
        None => config(format!("system '{}' has no declared limit", sys.label())),
    }
}

/// Uniform asymptotics of `φ ∘ f_1^n` and `f_1^{n+1}`.
///
/// For each `n ≤ N` the grid maximum of `d(φ(f_1^n x), f_1^{n+1} x)` (left)
/// must not exceed the grid maximum of `d(φ(y), f_{n+1}(y))` (right) plus
/// the Lipschitz slack `(L_φ + L_{f_{n+1}}) · r`, with `r` the grid's
/// covering radius. When the sequence converges uniformly, the left side
/// must also be below `eps` for every `n > tail_start`. The defect is the
/// amount by which either condition is violated.
pub fn check_uniap(
    sys: &System,
    grid: &Grid,
    n: usize,
    eps: f64,
    tail_start: usize,
) -> Result<VerdictReport> {
    let phi = require_limit(sys)?;
    let space = sys.space();
    let maps = sys.maps(1, n + 1)?;
    let pts = &grid.points;
    let left_rows = sys.sweep(pts, |x| {
        let mut cur = maps[0].eval(x)?;
        let mut row = Vec::with_capacity(n);
        for m in &maps[1..] {
            let lhs = phi.eval(&cur)?;
            cur = m.eval(&cur)?;
            row.push(space.dist(&lhs, &cur));
        }
        Ok(row)
    })?;
    let left: Vec<f64> = (0..n)
        .map(|i| left_rows.iter().map(|r| r[i]).fold(0.0, f64::max))
        .collect();
    let phi_vals = sys.sweep(pts, |y| phi.eval(y))?;
    let right: Vec<f64> = maps[1..]
        .par_iter()
        .map(|m| {
            pts.iter()
                .zip(&phi_vals)
                .map(|(y, py)| m.eval(y).map(|fy| space.dist(py, &fy)))
                .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
        })
        .collect::<Result<_>>()?;
    let slack: Vec<f64> = maps[1..]
        .iter()
        .map(|m| (phi.lipschitz() + m.lipschitz()) * grid.covering_radius)
        .collect();
    let uni = uniform_limit(sys, pts, n, DEFAULT_UNIFORM_TOL)?;
    let mut series = Vec::with_capacity(n);
    let mut margin_with_slack = f64::INFINITY;
    let mut margin_without_slack = f64::INFINITY;
    for i in 0..n {
        let idx = i + 1;
        let ineq = (left[i] - right[i] - slack[i]).max(0.0);
        let tail = if uni.converges && idx > tail_start {
            (left[i] - eps).max(0.0)
        } else {
            0.0
        };
        margin_with_slack = margin_with_slack.min(right[i] + slack[i] - left[i]);
        margin_without_slack = margin_without_slack.min(right[i] - left[i]);
        series.push((idx, ineq.max(tail)));
    }
    let cfg = json!({
        "system": sys.label(),
        "n": n,
        "eps": eps,
        "tail_start": tail_start,
        "grid": grid.echo(),
    });
    let mut details = Map::new();
    details.insert("left".into(), json!(left));
    details.insert("right".into(), json!(right));
    details.insert("slack".into(), json!(slack));
    details.insert("min_margin_with_slack".into(), json!(margin_with_slack));
    details.insert(
        "min_margin_without_slack".into(),
        json!(margin_without_slack),
    );
    details.insert("uniform_converges".into(), json!(uni.converges));
    details.insert("uniform_eps_at_tail".into(), json!(uni.eps_at_tail));
    Ok(VerdictReport::new(
        "check_uniap",
        series_max(&series),
        0.0,
        Some(series),
        cfg,
        details,
    ))
}

/// `φ^m ∘ f_1^n` against `f_1^{n+m}` on a window of anchors `n` and
/// powers `m`. The series is indexed by `n` (max over `m`).
pub fn check_action(
    sys: &System,
    grid: &Grid,
    n_range: (usize, usize),
    m_range: (usize, usize),
    eps: f64,
) -> Result<VerdictReport> {
    let phi = require_limit(sys)?;
    let (n_lo, n_hi) = n_range;
    let (m_lo, m_hi) = m_range;
    if n_lo > n_hi || m_lo > m_hi {
        return config("check_action needs nonempty index ranges");
    }
    let space = sys.space();
    let maps = sys.maps(1, n_hi + m_hi)?;
    let rows = sys.sweep(&grid.points, |x| {
        let mut prefix = Vec::with_capacity(n_hi + m_hi + 1);
        prefix.push(x.clone());
        for m in &maps {
            let next = m.eval(prefix.last().expect("nonempty"))?;
            prefix.push(next);
        }
        let mut per_m = vec![0.0f64; m_hi - m_lo + 1];
        let mut row = Vec::with_capacity(n_hi - n_lo + 1);
        for n in n_lo..=n_hi {
            let mut cur = prefix[n].clone();
            let mut worst = 0.0f64;
            for m in 0..=m_hi {
                if m > 0 {
                    cur = phi.eval(&cur)?;
                }
                if m >= m_lo {
                    let d = space.dist(&cur, &prefix[n + m]);
                    worst = worst.max(d);
                    per_m[m - m_lo] = per_m[m - m_lo].max(d);
                }
            }
            row.push((n, worst));
        }
        Ok((row, per_m))
    })?;
    let mut per_m = vec![0.0f64; m_hi - m_lo + 1];
    let mut series_rows = Vec::with_capacity(rows.len());
    for (row, pm) in rows {
        for (a, b) in per_m.iter_mut().zip(pm) {
            *a = a.max(b);
        }
        series_rows.push(row);
    }
    let series = merge_max(series_rows);
    let cfg = json!({
        "system": sys.label(),
        "n_range": [n_lo, n_hi],
        "m_range": [m_lo, m_hi],
        "eps": eps,
        "grid": grid.echo(),
    });
    let mut details = Map::new();
    let by_m: Vec<Value> = per_m
        .iter()
        .enumerate()
        .map(|(i, d)| json!([m_lo + i, d]))
        .collect();
    details.insert("max_defect_by_m".into(), Value::Array(by_m));
    Ok(VerdictReport::new(
        "check_action",
        series_max(&series),
        eps,
        Some(series),
        cfg,
        details,
    ))
}

/// Resolution and index count used to confirm a declared limit before the
/// ω-limit checks rely on it.
const LIMIT_CHECK_RESOLUTION: usize = 101;
const LIMIT_CHECK_MAX_N: usize = 2_000;

fn verified_limit(sys: &System, horizon: usize) -> Result<(Arc<MapRep>, f64)> {
    let phi = require_limit(sys)?;
    let grid = sys.space().grid(LIMIT_CHECK_RESOLUTION)?;
    let n = horizon.clamp(4, LIMIT_CHECK_MAX_N);
    let uni = uniform_limit(sys, &grid, n, DEFAULT_UNIFORM_TOL)?;
    if !uni.converges {
        return config(format!(
            "declared limit of '{}' is not confirmed: tail sup defect {:e} over {n} maps",
            sys.label(),
            uni.eps_at_tail
        ));
    }
    Ok((phi, uni.eps_at_tail))
}

/// φ-invariance of the ω-limit estimate: `hausdorff(φ(Ω̂), Ω̂) ≤ tol`.
pub fn check_kempf(
    sys: &System,
    x: &Point,
    params: OmegaParams,
    tol: f64,
) -> Result<VerdictReport> {
    let (phi, tail_sup) = verified_limit(sys, params.burn_in + params.keep)?;
    let est = omega_limit(sys, x, params)?;
    let image = PointSet::new(
        est.centers
            .iter()
            .map(|c| phi.eval(c))
            .collect::<Result<Vec<_>>>()?,
    );
    let defect = hausdorff(sys.space(), &image, &est.centers)?;
    let cfg = json!({
        "system": sys.label(),
        "x": x,
        "burn_in": params.burn_in,
        "keep": params.keep,
        "cluster_eps": params.eps,
    });
    let mut details = Map::new();
    details.insert("centers".into(), json!(est.centers.len()));
    details.insert("uniform_eps_at_tail".into(), json!(tail_sup));
    if est.centers.len() <= 16 {
        details.insert("omega_estimate".into(), json!(est.centers));
    }
    Ok(VerdictReport::new(
        "check_kempf",
        defect,
        tol,
        None,
        cfg,
        details,
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointResult {
    pub point: Point,
    pub residual: f64,
    pub report: VerdictReport,
}

/// Maximum number of φ-steps used to refine a fixed-point candidate.
const REFINE_STEPS: usize = 1_000;

/// A point of the ω-limit estimate minimizing `d(φ(y), y)`.
///
/// Candidates are the ω-estimate centers and the orbit-window point with the
/// smallest step `d(x_n, x_{n+1})`. The best candidate is then refined by
/// iterating φ, which maps the ω-limit set into itself; the iterate with the
/// smallest residual is returned.
pub fn find_fixed_point(
    sys: &System,
    x: &Point,
    params: OmegaParams,
    tol: f64,
) -> Result<FixedPointResult> {
    let (phi, _) = verified_limit(sys, params.burn_in + params.keep)?;
    let space = sys.space();
    let est = omega_limit(sys, x, params)?;
    let traj = sys.trajectory(x, params.burn_in + params.keep)?;
    let window = &traj.points[params.burn_in + 1..];
    let (step_idx, min_step) = window
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, space.dist(&w[0], &w[1])))
        .fold(
            (0, f64::INFINITY),
            |acc, (i, d)| if d < acc.1 { (i, d) } else { acc },
        );
    let residual = |y: &Point| -> Result<f64> { Ok(space.dist(&phi.eval(y)?, y)) };
    let mut best = (window[step_idx].clone(), residual(&window[step_idx])?);
    for c in &est.centers {
        let r = residual(c)?;
        if r < best.1 {
            best = (c.clone(), r);
        }
    }
    let candidate_residual = best.1;
    let mut cur = best.0.clone();
    let mut steps = 0;
    while best.1 > 0.0 && steps < REFINE_STEPS {
        cur = phi.eval(&cur)?;
        steps += 1;
        let r = residual(&cur)?;
        if r < best.1 {
            best = (cur.clone(), r);
        }
    }
    let cfg = json!({
        "system": sys.label(),
        "x": x,
        "burn_in": params.burn_in,
        "keep": params.keep,
        "cluster_eps": params.eps,
    });
    let mut details = Map::new();
    details.insert("fixed_point".into(), json!(best.0));
    details.insert("candidate_residual".into(), json!(candidate_residual));
    details.insert("min_orbit_step".into(), json!(min_step));
    details.insert(
        "min_orbit_step_index".into(),
        json!(params.burn_in + 1 + step_idx),
    );
    details.insert("refine_steps".into(), json!(steps));
    let report = VerdictReport::new("find_fixed_point", best.1, tol, None, cfg, details);
    Ok(FixedPointResult {
        point: best.0,
        residual: best.1,
        report,
    })
}

/// Search the orbit tail for a return: the smallest `n ≤ n_max` with
/// `d(x_T, x_{T+n}) ≤ eps`, cross-checked by `d(φ^n(x_T), x_T)` against
/// `eps` plus the accumulated drift between `f_{T+j}` and φ.
pub fn check_periodic_point(
    sys: &System,
    x: &Point,
    burn_in: usize,
    n_max: usize,
    eps: f64,
) -> Result<VerdictReport> {
    if n_max == 0 {
        return config("check_periodic_point needs n_max >= 1");
    }
    let (phi, _) = verified_limit(sys, burn_in + n_max)?;
    let space = sys.space();
    let traj = sys.trajectory(x, burn_in + n_max)?;
    let y = &traj.points[burn_in];
    let grid = Grid::uniform(space, LIMIT_CHECK_RESOLUTION)?;
    let maps = sys.maps(burn_in + 1, burn_in + n_max)?;
    let phi_grid = sys.sweep(&grid.points, |p| phi.eval(p))?;
    // Sup distance between f_{T+j} and φ, including the grid correction.
    let gaps: Vec<f64> = maps
        .par_iter()
        .map(|m| {
            let sup = grid
                .points
                .iter()
                .zip(&phi_grid)
                .map(|(p, q)| m.eval(p).map(|fp| space.dist(&fp, q)))
                .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))?;
            Ok(if sup == 0.0 {
                0.0
            } else {
                sup + (m.lipschitz() + phi.lipschitz()) * grid.covering_radius
            })
        })
        .collect::<Result<_>>()?;
    let mut phi_pow = y.clone();
    let mut drift = 0.0f64;
    let mut best: Option<(usize, f64, f64, f64)> = None;
    let mut closest = f64::INFINITY;
    let mut returns = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        phi_pow = phi.eval(&phi_pow)?;
        drift = phi.lipschitz() * drift + gaps[n - 1];
        let ret = space.dist(y, &traj.points[burn_in + n]);
        let cross = space.dist(&phi_pow, y);
        let score = ret.max(cross - drift);
        returns.push(ret);
        closest = closest.min(score);
        if best.is_none() && score <= eps {
            best = Some((n, ret, cross, drift));
        }
    }
    let cfg = json!({
        "system": sys.label(),
        "x": x,
        "burn_in": burn_in,
        "n_max": n_max,
        "eps": eps,
    });
    let mut details = Map::new();
    details.insert("tail_point".into(), json!(y));
    details.insert("return_distances".into(), json!(returns));
    let defect = match best {
        Some((n, ret, cross, drift)) => {
            details.insert("period".into(), json!(n));
            details.insert("return_distance".into(), json!(ret));
            details.insert("phi_return_distance".into(), json!(cross));
            details.insert("drift_bound".into(), json!(drift));
            ret.max(cross - drift)
        }
        None => {
            details.insert("period".into(), Value::Null);
            closest
        }
    };
    Ok(VerdictReport::new(
        "check_periodic_point",
        defect,
        eps,
        None,
        cfg,
        details,
    ))
}

/// Transport of orbits by `h`: `h(f_1^n x)` against `g_1^n(h x)` for
/// `n ≤ N`. The per-generator defect `max_x d(h(f_n x), g_n(h x))` is
/// reported alongside.
pub fn check_conjugacy(
    sys_x: &System,
    sys_y: &System,
    h: &MapRep,
    grid: &Grid,
    n: usize,
    tol: f64,
) -> Result<VerdictReport> {
    if h.space() != sys_x.space() {
        return domain("h must be defined on the space of the first system");
    }
    let space_y = sys_y.space();
    let fx = sys_x.maps(1, n)?;
    let gy = sys_y.maps(1, n)?;
    let to_y = |p: &Point| -> Result<Point> {
        let mut q = h.eval(p)?;
        space_y.check(&mut q)?;
        Ok(q)
    };
    let rows = sys_x.sweep(&grid.points, |x| {
        let mut cx = x.clone();
        let mut cy = to_y(x)?;
        let mut row = Vec::with_capacity(n);
        let mut gen = Vec::with_capacity(n);
        for (f, g) in fx.iter().zip(&gy) {
            let hf = to_y(&f.eval(x)?)?;
            let gh = g.eval(&to_y(x)?)?;
            gen.push((row.len() + 1, space_y.dist(&hf, &gh)));
            cx = f.eval(&cx)?;
            cy = g.eval(&cy)?;
            row.push((row.len() + 1, space_y.dist(&to_y(&cx)?, &cy)));
        }
        Ok((row, gen))
    })?;
    let (orbit_rows, gen_rows): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    let series = merge_max(orbit_rows);
    let generator = merge_max(gen_rows);
    let cfg = json!({
        "system_x": sys_x.label(),
        "system_y": sys_y.label(),
        "h": h.spec(),
        "n": n,
        "grid": grid.echo(),
    });
    let mut details = Map::new();
    details.insert("generator_defect_max".into(), json!(series_max(&generator)));
    details.insert(
        "generator_defect".into(),
        json!(generator.iter().map(|g| g.1).collect::<Vec<_>>()),
    );
    Ok(VerdictReport::new(
        "check_conjugacy",
        series_max(&series),
        tol,
        Some(series),
        cfg,
        details,
    ))
}

/// Single-point orbit helper shared with the scenario runner.
pub fn orbit_value(sys: &System, x: &Point, n: usize) -> Result<Point> {
    apply_in_order(&sys.maps(1, n)?, x)
}
