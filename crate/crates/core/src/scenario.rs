//! Scenario files: parsing, task dispatch and report emission.
//!
//! A scenario names a space, a map sequence, an optional declared limit and
//! an ordered task list. Running it writes one JSON report per task (plus CSV
//! series where a task produces one) and a `summary.json` carrying wall times.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::analysis::{
    asymptotic_report, equicontinuity, omega_limit, pointwise_limit_profile, uniform_limit,
    EquiFamily, OmegaParams, SequenceView, ViewKind, DEFAULT_UNIFORM_TOL,
};
use crate::error::{NdsError, Result};
use crate::families::Family;
use crate::maps::{compose, self_map_check, MapRep, MapSpec};
use crate::report::{series_csv, to_json, SCHEMA_VERSION};
use crate::space::{Point, Space};
use crate::system::{Gamma, SequenceRule, System, TailRule, DEFAULT_ADDITIVITY_HORIZON};
use crate::verify::{
    check_action, check_conjugacy, check_induced, check_kempf, check_periodic,
    check_periodic_point, check_split, check_uniap, find_fixed_point, Grid, VerdictReport,
    DEFAULT_EPS, DEFAULT_FIXED_POINT_TOL, DEFAULT_KEMPF_TOL,
};

pub const DEFAULT_OUT_DIR: &str = "ndslab-out";
pub const OUT_ENV: &str = "NDSLAB_OUT";
pub const SUMMARY_FILE: &str = "summary.json";

/// A point given either as a bare number (one-dimensional spaces) or as a
/// coordinate list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointInput {
    Scalar(f64),
    Coords(Vec<f64>),
}

impl PointInput {
    pub fn coords(&self) -> Vec<f64> {
        match self {
            PointInput::Scalar(x) => vec![*x],
            PointInput::Coords(c) => c.clone(),
        }
    }

    fn build(&self, space: &Space) -> Result<Point> {
        space.point(&self.coords())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Resolution(usize),
    Points(Vec<PointInput>),
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Resolution(101)
    }
}

impl GridSpec {
    pub fn build(&self, space: &Space) -> Result<Grid> {
        match self {
            GridSpec::Resolution(r) => Grid::uniform(space, *r),
            GridSpec::Points(pts) => {
                let pts = pts
                    .iter()
                    .map(|p| p.build(space))
                    .collect::<Result<Vec<_>>>()?;
                Grid::from_points(space, pts)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum SequenceSpec {
    Periodic {
        block: Vec<MapSpec>,
    },
    Explicit {
        maps: Vec<MapSpec>,
        #[serde(default = "tail_none")]
        tail: TailRule,
    },
    Family {
        family: Family,
    },
    Shifted {
        base: Box<SequenceSpec>,
        k: usize,
    },
    Induced {
        base: Box<SequenceSpec>,
        gamma: Gamma,
    },
    Conjugated {
        base: Box<SequenceSpec>,
        h: MapSpec,
        h_inv: MapSpec,
    },
}

fn tail_none() -> TailRule {
    TailRule::None
}

/// A complete system description, used for the second system of a
/// conjugacy check and for the systems behind asymptotic views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub label: Option<String>,
    pub space: Space,
    pub sequence: SequenceSpec,
    #[serde(default)]
    pub limit: Option<MapSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    pub view: ViewKind,
    #[serde(default)]
    pub system: Option<Box<SystemSpec>>,
}

fn d_resolution() -> usize {
    101
}
fn d_star_grid() -> GridSpec {
    GridSpec::Resolution(11)
}
fn d_self_map_n() -> usize {
    16
}
fn d_burn_in() -> usize {
    OmegaParams::default().burn_in
}
fn d_keep() -> usize {
    OmegaParams::default().keep
}
fn d_cluster_eps() -> f64 {
    OmegaParams::default().eps
}
fn d_eps() -> f64 {
    DEFAULT_EPS
}
fn d_uniform_tol() -> f64 {
    DEFAULT_UNIFORM_TOL
}
fn d_equi_family() -> EquiFamily {
    EquiFamily::Iterates
}
fn d_k_max() -> usize {
    8
}
fn d_n_max_split() -> usize {
    64
}
fn d_l_max() -> usize {
    16
}
fn d_n_max_induced() -> usize {
    10
}
fn d_horizon() -> usize {
    DEFAULT_ADDITIVITY_HORIZON
}
fn d_uniap_n() -> usize {
    200
}
fn d_kempf_tol() -> f64 {
    DEFAULT_KEMPF_TOL
}
fn d_fixed_tol() -> f64 {
    DEFAULT_FIXED_POINT_TOL
}
fn d_period_n_max() -> usize {
    64
}
fn d_conj_n() -> usize {
    100
}
fn d_conj_tol() -> f64 {
    1e-9
}

/// One entry of a scenario's task list, tagged by `"task"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Trajectory {
        x: PointInput,
        n: usize,
    },
    SelfMapCheck {
        #[serde(default = "d_self_map_n")]
        n_max: usize,
        #[serde(default = "d_resolution")]
        resolution: usize,
    },
    OmegaLimit {
        x: PointInput,
        #[serde(default = "d_burn_in")]
        burn_in: usize,
        #[serde(default = "d_keep")]
        keep: usize,
        #[serde(default = "d_cluster_eps")]
        eps: f64,
    },
    LimitProfile {
        #[serde(default)]
        grid: GridSpec,
        n: usize,
        window: usize,
        #[serde(default = "d_cluster_eps")]
        eps: f64,
    },
    Asymptotic {
        a: ViewSpec,
        b: ViewSpec,
        #[serde(default)]
        grid: GridSpec,
        n: usize,
        #[serde(default = "d_eps")]
        eps: f64,
        #[serde(default)]
        tail_start: Option<usize>,
    },
    UniformLimit {
        #[serde(default)]
        grid: GridSpec,
        n: usize,
        #[serde(default = "d_uniform_tol")]
        tol: f64,
    },
    Equicontinuity {
        #[serde(default = "d_equi_family")]
        family: EquiFamily,
        #[serde(default)]
        grid: GridSpec,
        n: usize,
        deltas: Vec<f64>,
    },
    Star {
        n: usize,
        m: usize,
        #[serde(default = "d_star_grid")]
        grid: GridSpec,
    },
    CheckSplit {
        #[serde(default = "d_k_max")]
        k_max: usize,
        #[serde(default = "d_n_max_split")]
        n_max: usize,
        #[serde(default)]
        grid: GridSpec,
    },
    CheckPeriodic {
        #[serde(default = "d_l_max")]
        l_max: usize,
        #[serde(default)]
        grid: GridSpec,
    },
    CheckInduced {
        gamma: Gamma,
        #[serde(default = "d_n_max_induced")]
        n_max: usize,
        #[serde(default)]
        grid: GridSpec,
        #[serde(default = "d_horizon")]
        horizon: usize,
    },
    CheckUniap {
        #[serde(default)]
        grid: GridSpec,
        #[serde(default = "d_uniap_n")]
        n: usize,
        #[serde(default = "d_eps")]
        eps: f64,
        #[serde(default)]
        tail_start: Option<usize>,
    },
    CheckAction {
        #[serde(default)]
        grid: GridSpec,
        n_range: [usize; 2],
        m_range: [usize; 2],
        #[serde(default = "d_eps")]
        eps: f64,
    },
    CheckKempf {
        x: PointInput,
        #[serde(default = "d_burn_in")]
        burn_in: usize,
        #[serde(default = "d_keep")]
        keep: usize,
        #[serde(default = "d_cluster_eps")]
        eps: f64,
        #[serde(default = "d_kempf_tol")]
        tol: f64,
    },
    FindFixedPoint {
        x: PointInput,
        #[serde(default = "d_burn_in")]
        burn_in: usize,
        #[serde(default = "d_keep")]
        keep: usize,
        #[serde(default = "d_cluster_eps")]
        eps: f64,
        #[serde(default = "d_fixed_tol")]
        tol: f64,
    },
    CheckPeriodicPoint {
        x: PointInput,
        #[serde(default = "d_burn_in")]
        burn_in: usize,
        #[serde(default = "d_period_n_max")]
        n_max: usize,
        #[serde(default = "d_eps")]
        eps: f64,
    },
    CheckConjugacy {
        other: Box<SystemSpec>,
        h: MapSpec,
        #[serde(default)]
        grid: GridSpec,
        #[serde(default = "d_conj_n")]
        n: usize,
        #[serde(default = "d_conj_tol")]
        tol: f64,
    },
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Trajectory { .. } => "trajectory",
            TaskSpec::SelfMapCheck { .. } => "self_map_check",
            TaskSpec::OmegaLimit { .. } => "omega_limit",
            TaskSpec::LimitProfile { .. } => "limit_profile",
            TaskSpec::Asymptotic { .. } => "asymptotic",
            TaskSpec::UniformLimit { .. } => "uniform_limit",
            TaskSpec::Equicontinuity { .. } => "equicontinuity",
            TaskSpec::Star { .. } => "star",
            TaskSpec::CheckSplit { .. } => "check_split",
            TaskSpec::CheckPeriodic { .. } => "check_periodic",
            TaskSpec::CheckInduced { .. } => "check_induced",
            TaskSpec::CheckUniap { .. } => "check_uniap",
            TaskSpec::CheckAction { .. } => "check_action",
            TaskSpec::CheckKempf { .. } => "check_kempf",
            TaskSpec::FindFixedPoint { .. } => "find_fixed_point",
            TaskSpec::CheckPeriodicPoint { .. } => "check_periodic_point",
            TaskSpec::CheckConjugacy { .. } => "check_conjugacy",
        }
    }

    /// Checks produce a verdict; analyses are report-only.
    pub fn is_check(&self) -> bool {
        self.name().starts_with("check_") || matches!(self, TaskSpec::FindFixedPoint { .. })
    }

    /// Replace the pass/fail tolerance of tolerance-bearing checks.
    fn override_tol(&mut self, value: f64) {
        match self {
            TaskSpec::CheckKempf { tol, .. }
            | TaskSpec::FindFixedPoint { tol, .. }
            | TaskSpec::CheckConjugacy { tol, .. }
            | TaskSpec::UniformLimit { tol, .. } => *tol = value,
            TaskSpec::CheckAction { eps, .. } => *eps = value,
            _ => {}
        }
    }
}

/// The on-disk scenario format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub space: Space,
    pub sequence: SequenceSpec,
    #[serde(default)]
    pub limit: Option<MapSpec>,
    pub tasks: Vec<TaskSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// A parsed and validated scenario together with its built system.
#[derive(Debug)]
pub struct Scenario {
    pub file: ScenarioFile,
    pub system: System,
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.file.name
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.file.tasks
    }
}

fn located(loc: &str, e: NdsError) -> NdsError {
    let msg = match e {
        NdsError::Domain(m) | NdsError::Config(m) | NdsError::Index(m) | NdsError::Io(m) => m,
        NdsError::EmptySet => "empty point set".to_string(),
    };
    NdsError::Config(format!("{loc}: {msg}"))
}

fn fail<T>(loc: &str, msg: impl Into<String>) -> Result<T> {
    Err(NdsError::Config(format!("{loc}: {}", msg.into())))
}

fn build_sequence(space: &Space, spec: &SequenceSpec, label: &str, loc: &str) -> Result<System> {
    let build_maps = |maps: &[MapSpec], field: &str| -> Result<Vec<MapRep>> {
        maps.iter()
            .enumerate()
            .map(|(i, m)| {
                m.build(space)
                    .map_err(|e| located(&format!("{loc}.{field}[{i}]"), e))
            })
            .collect()
    };
    match spec {
        SequenceSpec::Periodic { block } => {
            let block = build_maps(block, "block")?;
            System::periodic(space, block, label).map_err(|e| located(loc, e))
        }
        SequenceSpec::Explicit { maps, tail } => {
            let maps = build_maps(maps, "maps")?
                .into_iter()
                .map(Arc::new)
                .collect();
            let rule = SequenceRule::Explicit {
                maps,
                tail: tail.clone(),
            };
            System::new(space, rule, label).map_err(|e| located(loc, e))
        }
        SequenceSpec::Family { family } => System::from_family(space, family.clone(), label)
            .map_err(|e| located(&format!("{loc}.family"), e)),
        SequenceSpec::Shifted { base, k } => {
            let base = build_sequence(space, base, label, &format!("{loc}.base"))?;
            if *k == 0 {
                return fail(&format!("{loc}.k"), "shift index must be >= 1");
            }
            base.shift(*k).map_err(|e| located(loc, e))
        }
        SequenceSpec::Induced { base, gamma } => {
            gamma
                .validate()
                .map_err(|e| located(&format!("{loc}.gamma"), e))?;
            let base = build_sequence(space, base, label, &format!("{loc}.base"))?;
            base.induce(gamma.clone()).map_err(|e| located(loc, e))
        }
        SequenceSpec::Conjugated { base, h, h_inv } => {
            let base = build_sequence(space, base, label, &format!("{loc}.base"))?;
            let h = h
                .build(space)
                .map_err(|e| located(&format!("{loc}.h"), e))?;
            let h_inv = h_inv
                .build(space)
                .map_err(|e| located(&format!("{loc}.h_inv"), e))?;
            base.conjugate(h, h_inv).map_err(|e| located(loc, e))
        }
    }
}

fn build_system(
    space: &Space,
    sequence: &SequenceSpec,
    limit: Option<&MapSpec>,
    label: &str,
    loc: &str,
) -> Result<System> {
    let seq_loc = if loc.is_empty() {
        "sequence".to_string()
    } else {
        format!("{loc}.sequence")
    };
    let sys = build_sequence(space, sequence, label, &seq_loc)?;
    match limit {
        None => Ok(sys),
        Some(spec) => {
            let lim_loc = if loc.is_empty() {
                "limit".to_string()
            } else {
                format!("{loc}.limit")
            };
            let phi = spec.build(space).map_err(|e| located(&lim_loc, e))?;
            sys.with_limit(Some(phi)).map_err(|e| located(&lim_loc, e))
        }
    }
}

impl SystemSpec {
    pub fn build(&self, default_label: &str, loc: &str) -> Result<System> {
        let label = self.label.as_deref().unwrap_or(default_label);
        build_system(&self.space, &self.sequence, self.limit.as_ref(), label, loc)
    }
}

/// Parse and validate a scenario. Errors name the offending location, e.g.
/// `tasks[2].gamma: gamma not increasing`.
pub fn parse_scenario(text: &[u8]) -> Result<Scenario> {
    let text = std::str::from_utf8(text)
        .map_err(|e| NdsError::Config(format!("scenario is not UTF-8: {e}")))?;
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de)
        .map_err(|e| NdsError::Config(format!("{}: {}", e.path(), e.inner())))?;
    Scenario::from_file(file)
}

impl Scenario {
    pub fn from_file(file: ScenarioFile) -> Result<Scenario> {
        if file.name.is_empty()
            || !file
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return fail(
                "name",
                "scenario name must be nonempty and use only [A-Za-z0-9_-]",
            );
        }
        let system = build_system(
            &file.space,
            &file.sequence,
            file.limit.as_ref(),
            &file.name,
            "",
        )?;
        let scenario = Scenario { file, system };
        for (i, task) in scenario.file.tasks.iter().enumerate() {
            scenario.validate_task(task, &format!("tasks[{i}]"))?;
        }
        Ok(scenario)
    }

    fn validate_task(&self, task: &TaskSpec, loc: &str) -> Result<()> {
        let space = &self.system.space().clone();
        let at = |field: &str| format!("{loc}.{field}");
        let point = |p: &PointInput, field: &str| {
            p.build(space)
                .map(|_| ())
                .map_err(|e| located(&at(field), e))
        };
        let grid = |g: &GridSpec| {
            g.build(space)
                .map(|_| ())
                .map_err(|e| located(&at("grid"), e))
        };
        let need_limit = || -> Result<()> {
            if self.system.limit().is_none() {
                return fail(loc, format!("{} needs a declared limit", task.name()));
            }
            Ok(())
        };
        let positive = |v: f64, field: &str| -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                fail(&at(field), "must be positive")
            }
        };
        match task {
            TaskSpec::Trajectory { x, .. } => point(x, "x"),
            TaskSpec::SelfMapCheck { n_max, resolution } => {
                if *n_max == 0 {
                    return fail(&at("n_max"), "must be >= 1");
                }
                grid(&GridSpec::Resolution(*resolution))
            }
            TaskSpec::OmegaLimit { x, keep, eps, .. } => {
                point(x, "x")?;
                if *keep == 0 {
                    return fail(&at("keep"), "must be >= 1");
                }
                positive(*eps, "eps")
            }
            TaskSpec::LimitProfile {
                grid: g,
                n,
                window,
                eps,
            } => {
                if *window == 0 || window > n {
                    return fail(&at("window"), "limit profile needs 1 <= window <= n");
                }
                positive(*eps, "eps")?;
                grid(g)
            }
            TaskSpec::Asymptotic {
                a,
                b,
                grid: g,
                n,
                eps,
                tail_start,
            } => {
                if *n == 0 {
                    return fail(&at("n"), "must be >= 1");
                }
                if tail_start.is_some_and(|t| t > *n) {
                    return fail(&at("tail_start"), "must not exceed n");
                }
                positive(*eps, "eps")?;
                for (view, field) in [(a, "a"), (b, "b")] {
                    let sys = self.view_system(view, &at(field))?;
                    if sys.space() != space {
                        return fail(&at(field), "view system must share the scenario space");
                    }
                    SequenceView::new(&sys, view.view).map_err(|e| located(&at(field), e))?;
                }
                grid(g)
            }
            TaskSpec::UniformLimit { grid: g, n, tol } => {
                need_limit()?;
                if *n == 0 {
                    return fail(&at("n"), "must be >= 1");
                }
                positive(*tol, "tol")?;
                grid(g)
            }
            TaskSpec::Equicontinuity {
                family,
                grid: g,
                n,
                deltas,
            } => {
                if *family == EquiFamily::LimitAfterIterates {
                    need_limit()?;
                }
                if *n == 0 {
                    return fail(&at("n"), "must be >= 1");
                }
                if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
                    return fail(&at("deltas"), "deltas must be positive");
                }
                if deltas.windows(2).any(|w| w[0] > w[1]) {
                    return fail(&at("deltas"), "deltas must be sorted ascending");
                }
                grid(g)
            }
            TaskSpec::Star { grid: g, .. } => grid(g),
            TaskSpec::CheckSplit {
                k_max,
                n_max,
                grid: g,
            } => {
                if *k_max < 2 || k_max > n_max {
                    return fail(loc, "check_split needs 2 <= k_max <= n_max");
                }
                grid(g)
            }
            TaskSpec::CheckPeriodic { grid: g, .. } => {
                if self.system.sequence().periodic_block().is_none() {
                    return fail(loc, "check_periodic needs a periodic sequence");
                }
                grid(g)
            }
            TaskSpec::CheckInduced {
                gamma,
                n_max,
                grid: g,
                ..
            } => {
                gamma.validate().map_err(|e| located(&at("gamma"), e))?;
                if *n_max == 0 {
                    return fail(&at("n_max"), "must be >= 1");
                }
                grid(g)
            }
            TaskSpec::CheckUniap {
                grid: g,
                n,
                eps,
                tail_start,
            } => {
                need_limit()?;
                if *n == 0 {
                    return fail(&at("n"), "must be >= 1");
                }
                if tail_start.is_some_and(|t| t > *n) {
                    return fail(&at("tail_start"), "must not exceed n");
                }
                positive(*eps, "eps")?;
                grid(g)
            }
            TaskSpec::CheckAction {
                grid: g,
                n_range,
                m_range,
                eps,
            } => {
                need_limit()?;
                if n_range[0] > n_range[1] {
                    return fail(&at("n_range"), "range must be nonempty");
                }
                if m_range[0] > m_range[1] {
                    return fail(&at("m_range"), "range must be nonempty");
                }
                positive(*eps, "eps")?;
                grid(g)
            }
            TaskSpec::CheckKempf {
                x, keep, eps, tol, ..
            }
            | TaskSpec::FindFixedPoint {
                x, keep, eps, tol, ..
            } => {
                need_limit()?;
                point(x, "x")?;
                if *keep < 2 {
                    return fail(&at("keep"), "must be >= 2");
                }
                positive(*eps, "eps")?;
                if !(*tol >= 0.0) {
                    return fail(&at("tol"), "must be nonnegative");
                }
                Ok(())
            }
            TaskSpec::CheckPeriodicPoint { x, n_max, eps, .. } => {
                need_limit()?;
                point(x, "x")?;
                if *n_max == 0 {
                    return fail(&at("n_max"), "must be >= 1");
                }
                positive(*eps, "eps")
            }
            TaskSpec::CheckConjugacy {
                other,
                h,
                grid: g,
                tol,
                ..
            } => {
                other.build("other", &at("other"))?;
                h.build(space).map_err(|e| located(&at("h"), e))?;
                if !(*tol >= 0.0) {
                    return fail(&at("tol"), "must be nonnegative");
                }
                grid(g)
            }
        }
    }

    fn view_system(&self, view: &ViewSpec, loc: &str) -> Result<System> {
        match &view.system {
            None => Ok(self.system.clone()),
            Some(spec) => spec.build(
                &format!("{}/view", self.file.name),
                &format!("{loc}.system"),
            ),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Passed,
    Failed,
    ReportOnly,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskSummary {
    pub index: usize,
    pub task: String,
    pub status: TaskStatus,
    pub wall_ms: f64,
    pub artifacts: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub schema: u32,
    pub scenario: String,
    pub out_dir: String,
    pub passed: bool,
    pub wall_ms: f64,
    pub tasks: Vec<TaskSummary>,
}

impl RunSummary {
    /// 0 iff every check task passed and no task errored.
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Output root; the scenario writes into `<root>/<scenario name>/`.
    pub out_dir: Option<PathBuf>,
    pub tol: Option<f64>,
    pub threads: Option<usize>,
}

/// Output root by precedence: explicit option, then `NDSLAB_OUT`, then the
/// scenario's own `output`, then `ndslab-out`.
pub fn resolve_out_root(explicit: Option<&Path>, scenario: &Scenario) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(env) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(env);
    }
    scenario
        .file
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

pub fn run_scenario(s: &Scenario) -> Result<RunSummary> {
    run_scenario_with(s, &RunOptions::default())
}

pub fn run_scenario_with(s: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    match opts.threads {
        None => run_inner(s, opts),
        Some(0) => Err(NdsError::Config("--threads must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| NdsError::Config(format!("thread pool: {e}")))?;
            pool.install(|| run_inner(s, opts))
        }
    }
}

struct Outcome {
    verdict: Option<VerdictReport>,
    result: Value,
    csv: Option<String>,
}

impl Outcome {
    fn check(report: VerdictReport) -> Outcome {
        let csv = report.defect_series.as_deref().map(series_csv);
        Outcome {
            verdict: Some(report),
            result: Value::Null,
            csv,
        }
    }

    fn analysis(result: Value, csv: Option<String>) -> Outcome {
        Outcome {
            verdict: None,
            result,
            csv,
        }
    }
}

fn run_inner(s: &Scenario, opts: &RunOptions) -> Result<RunSummary> {
    let root = resolve_out_root(opts.out_dir.as_deref(), s);
    let dir = root.join(s.name());
    fs::create_dir_all(&dir)?;
    let started = Instant::now();
    let mut tasks = Vec::with_capacity(s.tasks().len());
    let mut all_ok = true;
    for (i, spec) in s.tasks().iter().enumerate() {
        let mut task = spec.clone();
        if let Some(t) = opts.tol {
            task.override_tol(t);
        }
        let stem = format!("{i:02}_{}", task.name());
        let t0 = Instant::now();
        let outcome = s.execute(&task);
        let wall_ms = t0.elapsed().as_secs_f64() * 1e3;
        let json_name = format!("{stem}.json");
        let mut artifacts = vec![json_name.clone()];
        let mut body = Map::new();
        body.insert("schema".into(), json!(SCHEMA_VERSION));
        body.insert("scenario".into(), json!(s.name()));
        body.insert("task_index".into(), json!(i));
        body.insert("task".into(), json!(task.name()));
        let (status, error) = match outcome {
            Ok(out) => {
                let csv_path = out.csv.as_ref().map(|_| format!("{stem}.csv"));
                if let (Some(name), Some(text)) = (&csv_path, &out.csv) {
                    fs::write(dir.join(name), text)?;
                    artifacts.push(name.clone());
                }
                let status = match &out.verdict {
                    Some(v) => {
                        body.insert("kind".into(), json!("check"));
                        body.insert("check".into(), json!(v.check));
                        body.insert("passed".into(), json!(v.passed));
                        body.insert("max_defect".into(), json!(v.max_defect));
                        body.insert("tolerance".into(), json!(v.tolerance));
                        body.insert("series_csv_path".into(), json!(csv_path));
                        body.insert("config".into(), v.config.clone());
                        body.insert("details".into(), Value::Object(v.details.clone()));
                        if v.passed {
                            TaskStatus::Passed
                        } else {
                            TaskStatus::Failed
                        }
                    }
                    None => {
                        body.insert("kind".into(), json!("analysis"));
                        body.insert(
                            "params".into(),
                            serde_json::to_value(&task).expect("task serializes"),
                        );
                        body.insert("result".into(), out.result);
                        body.insert("series_csv_path".into(), json!(csv_path));
                        TaskStatus::ReportOnly
                    }
                };
                (status, None)
            }
            Err(e) => {
                body.insert("kind".into(), json!("error"));
                body.insert(
                    "params".into(),
                    serde_json::to_value(&task).expect("task serializes"),
                );
                body.insert("error".into(), json!(e.to_string()));
                (TaskStatus::Error, Some(e.to_string()))
            }
        };
        if matches!(status, TaskStatus::Failed | TaskStatus::Error) {
            all_ok = false;
        }
        fs::write(dir.join(&json_name), to_json(&Value::Object(body)))?;
        tasks.push(TaskSummary {
            index: i,
            task: task.name().to_string(),
            status,
            wall_ms,
            artifacts,
            error,
        });
    }
    let summary = RunSummary {
        schema: SCHEMA_VERSION,
        scenario: s.name().to_string(),
        out_dir: dir.display().to_string(),
        passed: all_ok,
        wall_ms: started.elapsed().as_secs_f64() * 1e3,
        tasks,
    };
    fs::write(dir.join(SUMMARY_FILE), to_json(&summary))?;
    Ok(summary)
}

impl Scenario {
    fn execute(&self, task: &TaskSpec) -> Result<Outcome> {
        let sys = &self.system;
        let space = sys.space();
        let omega = |burn_in: usize, keep: usize, eps: f64| OmegaParams { burn_in, keep, eps };
        Ok(match task {
            TaskSpec::Trajectory { x, n } => {
                let traj = sys.trajectory(&x.build(space)?, *n)?;
                let result = json!({
                    "x0": traj.x0,
                    "n": n,
                    "final": traj.points.last(),
                });
                Outcome::analysis(result, Some(traj.to_csv()))
            }
            TaskSpec::SelfMapCheck { n_max, resolution } => {
                let rows = (1..=*n_max)
                    .map(|n| {
                        let r = self_map_check(&*sys.nth_map(n)?, space, *resolution)?;
                        Ok(json!({"n": n, "ok": r.ok, "worst_point": r.worst_point, "worst_excursion": r.worst_excursion}))
                    })
                    .collect::<Result<Vec<Value>>>()?;
                let all_ok = rows.iter().all(|r| r["ok"] == json!(true));
                Outcome::analysis(json!({"all_ok": all_ok, "maps": rows}), None)
            }
            TaskSpec::OmegaLimit {
                x,
                burn_in,
                keep,
                eps,
            } => {
                let est = omega_limit(sys, &x.build(space)?, omega(*burn_in, *keep, *eps))?;
                let result = json!({
                    "x0": est.x0,
                    "count": est.centers.len(),
                    "centers": if est.centers.len() <= 64 { json!(est.centers) } else { Value::Null },
                });
                Outcome::analysis(result, Some(est.centers.to_csv()))
            }
            TaskSpec::LimitProfile {
                grid,
                n,
                window,
                eps,
            } => {
                let grid = grid.build(space)?;
                let prof = pointwise_limit_profile(sys, &grid.points, *n, *window, *eps)?;
                let rows: Vec<Value> = prof
                    .grid
                    .iter()
                    .zip(&prof.values)
                    .map(|(x, v)| json!({"x": x, "values": v}))
                    .collect();
                Outcome::analysis(json!({"max_jump": prof.max_jump, "profile": rows}), None)
            }
            TaskSpec::Asymptotic {
                a,
                b,
                grid,
                n,
                eps,
                tail_start,
            } => {
                let grid = grid.build(space)?;
                let va = SequenceView::new(&self.view_system(a, "a")?, a.view)?;
                let vb = SequenceView::new(&self.view_system(b, "b")?, b.view)?;
                let tail = tail_start.unwrap_or(n / 2);
                let r = asymptotic_report(&va, &vb, &grid.points, *n, *eps, tail)?;
                let series: Vec<(usize, f64)> = r
                    .uniform_defect
                    .iter()
                    .enumerate()
                    .map(|(k, d)| (k + 1, *d))
                    .collect();
                let result = json!({
                    "label_a": r.label_a,
                    "label_b": r.label_b,
                    "decision_pointwise": r.decision_pointwise,
                    "decision_uniform": r.decision_uniform,
                    "density_uniform": r.density_uniform,
                    "density_pointwise_min": r.density_pointwise_min,
                    "tail_start": r.tail_start,
                    "eps": r.eps,
                    "max_uniform_defect": r.uniform_defect.iter().copied().fold(0.0, f64::max),
                    "latest_violation": r.last_violation.iter().flatten().max(),
                });
                Outcome::analysis(result, Some(series_csv(&series)))
            }
            TaskSpec::UniformLimit { grid, n, tol } => {
                let grid = grid.build(space)?;
                let r = uniform_limit(sys, &grid.points, *n, *tol)?;
                let series: Vec<(usize, f64)> = r
                    .sup_defect
                    .iter()
                    .enumerate()
                    .map(|(k, d)| (k + 1, *d))
                    .collect();
                let result = json!({
                    "converges": r.converges,
                    "eps_at_tail": r.eps_at_tail,
                    "tolerance": r.tolerance,
                });
                Outcome::analysis(result, Some(series_csv(&series)))
            }
            TaskSpec::Equicontinuity {
                family,
                grid,
                n,
                deltas,
            } => {
                let grid = grid.build(space)?;
                let r = equicontinuity(sys, *family, &grid.points, *n, deltas)?;
                Outcome::analysis(json!(r), None)
            }
            TaskSpec::Star { n, m, grid } => {
                let grid = grid.build(space)?;
                let star = sys.star_iterate(*n, *m)?;
                let comp = compose(vec![
                    Arc::new(sys.iterate_map(*m)?),
                    Arc::new(sys.iterate_map(*n)?),
                ])?;
                let rows = grid
                    .points
                    .iter()
                    .map(|x| Ok((x.clone(), star.eval(x)?, comp.eval(x)?)))
                    .collect::<Result<Vec<_>>>()?;
                let max_difference = rows
                    .iter()
                    .map(|(_, a, b)| space.dist(a, b))
                    .fold(0.0, f64::max);
                let samples: Vec<Value> = rows
                    .iter()
                    .map(|(x, a, b)| json!({"x": x, "star": a, "compose": b}))
                    .collect();
                Outcome::analysis(
                    json!({"max_difference": max_difference, "samples": samples}),
                    None,
                )
            }
            TaskSpec::CheckSplit { k_max, n_max, grid } => {
                Outcome::check(check_split(sys, *k_max, *n_max, &grid.build(space)?)?)
            }
            TaskSpec::CheckPeriodic { l_max, grid } => {
                Outcome::check(check_periodic(sys, *l_max, &grid.build(space)?)?)
            }
            TaskSpec::CheckInduced {
                gamma,
                n_max,
                grid,
                horizon,
            } => Outcome::check(check_induced(
                sys,
                gamma,
                *n_max,
                &grid.build(space)?,
                *horizon,
            )?),
            TaskSpec::CheckUniap {
                grid,
                n,
                eps,
                tail_start,
            } => {
                let tail = tail_start.unwrap_or(n / 2);
                Outcome::check(check_uniap(sys, &grid.build(space)?, *n, *eps, tail)?)
            }
            TaskSpec::CheckAction {
                grid,
                n_range,
                m_range,
                eps,
            } => Outcome::check(check_action(
                sys,
                &grid.build(space)?,
                (n_range[0], n_range[1]),
                (m_range[0], m_range[1]),
                *eps,
            )?),
            TaskSpec::CheckKempf {
                x,
                burn_in,
                keep,
                eps,
                tol,
            } => Outcome::check(check_kempf(
                sys,
                &x.build(space)?,
                omega(*burn_in, *keep, *eps),
                *tol,
            )?),
            TaskSpec::FindFixedPoint {
                x,
                burn_in,
                keep,
                eps,
                tol,
            } => {
                let r =
                    find_fixed_point(sys, &x.build(space)?, omega(*burn_in, *keep, *eps), *tol)?;
                Outcome::check(r.report)
            }
            TaskSpec::CheckPeriodicPoint {
                x,
                burn_in,
                n_max,
                eps,
            } => Outcome::check(check_periodic_point(
                sys,
                &x.build(space)?,
                *burn_in,
                *n_max,
                *eps,
            )?),
            TaskSpec::CheckConjugacy {
                other,
                h,
                grid,
                n,
                tol,
            } => {
                let other = other.build(&format!("{}/other", self.file.name), "other")?;
                let h = h.build(space)?;
                Outcome::check(check_conjugacy(
                    sys,
                    &other,
                    &h,
                    &grid.build(space)?,
                    *n,
                    *tol,
                )?)
            }
        })
    }
}

/// Read every `summary.json` at `dir` or one level below it.
pub fn collect_summaries(dir: &Path) -> Result<Vec<Value>> {
    let mut paths = Vec::new();
    let direct = dir.join(SUMMARY_FILE);
    if direct.is_file() {
        paths.push(direct);
    }
    let mut subdirs: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    paths.extend(
        subdirs
            .into_iter()
            .map(|d| d.join(SUMMARY_FILE))
            .filter(|p| p.is_file()),
    );
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p)?;
            serde_json::from_str(&text).map_err(|e| NdsError::Io(format!("{}: {e}", p.display())))
        })
        .collect()
}

/// Human-readable table of run summaries.
pub fn format_summaries(summaries: &[Value]) -> String {
    let mut out = String::new();
    for s in summaries {
        let verdict = if s["passed"] == json!(true) {
            "PASS"
        } else {
            "FAIL"
        };
        out.push_str(&format!(
            "{} [{verdict}]\n",
            s["scenario"].as_str().unwrap_or("?")
        ));
        for t in s["tasks"].as_array().into_iter().flatten() {
            let wall: f64 = t["wall_ms"]
                .as_f64()
                .or_else(|| t["wall_ms"].as_str().and_then(|v| v.parse().ok()))
                .unwrap_or(f64::NAN);
            out.push_str(&format!(
                "  {:>2}  {:<22} {:<12} {:>10.1} ms",
                t["index"],
                t["task"].as_str().unwrap_or("?"),
                t["status"].as_str().unwrap_or("?"),
                wall
            ));
            if let Some(e) = t["error"].as_str() {
                out.push_str(&format!("  {e}"));
            }
            out.push('\n');
        }
    }
    out
}

const FIXTURES: &[(&str, &str)] = &[
    (
        "constant_family",
        include_str!("../fixtures/constant_family.json"),
    ),
    (
        "power_family",
        include_str!("../fixtures/power_family.json"),
    ),
    ("example3", include_str!("../fixtures/example3.json")),
    (
        "example3_negative",
        include_str!("../fixtures/example3_negative.json"),
    ),
    ("contraction", include_str!("../fixtures/contraction.json")),
    (
        "kempf_contraction",
        include_str!("../fixtures/kempf_contraction.json"),
    ),
    ("rotation", include_str!("../fixtures/rotation.json")),
    (
        "rotation_quarter",
        include_str!("../fixtures/rotation_quarter.json"),
    ),
    (
        "rotation_aperiodic",
        include_str!("../fixtures/rotation_aperiodic.json"),
    ),
    (
        "periodic_block",
        include_str!("../fixtures/periodic_block.json"),
    ),
    ("identities", include_str!("../fixtures/identities.json")),
    ("induced", include_str!("../fixtures/induced.json")),
    (
        "conjugate_pair",
        include_str!("../fixtures/conjugate_pair.json"),
    ),
    ("negative", include_str!("../fixtures/negative.json")),
    ("tent_family", include_str!("../fixtures/tent_family.json")),
];

/// Shipped scenarios as `(name, description)`.
pub fn list_fixtures() -> Vec<(String, String)> {
    FIXTURES
        .iter()
        .map(|(name, text)| {
            let description = serde_json::from_str::<Value>(text)
                .ok()
                .and_then(|v| v["description"].as_str().map(str::to_string))
                .unwrap_or_default();
            (name.to_string(), description)
        })
        .collect()
}

/// Source text of a shipped scenario.
pub fn fixture_text(name: &str) -> Option<&'static str> {
    FIXTURES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
