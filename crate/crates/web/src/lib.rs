//! WebAssembly bindings for the browser demo.
//!
//! Every export takes a system description as JSON (`{"space", "sequence",
//! "limit"?}`, the same shape scenario files use) and returns a JSON string.
//! The `*_json` functions in [`api`] do the work and are testable natively.

use wasm_bindgen::prelude::*;

pub mod api {
    use ndslab::analysis::{omega_limit, pointwise_limit_profile, OmegaParams};
    use ndslab::scenario::{fixture_text, list_fixtures, ScenarioFile, SystemSpec};
    use ndslab::System;
    use serde_json::{json, Value};

    /// Largest orbit length the page may request.
    pub const MAX_STEPS: usize = 1_000_000;

    fn system(spec: &str) -> Result<System, String> {
        let spec: SystemSpec = serde_json::from_str(spec).map_err(|e| format!("system: {e}"))?;
        spec.build("demo", "system").map_err(|e| e.to_string())
    }

    fn cap(n: usize, what: &str) -> Result<(), String> {
        if n > MAX_STEPS {
            Err(format!("{what} is capped at {MAX_STEPS} in the demo"))
        } else {
            Ok(())
        }
    }

    /// Shipped fixtures reduced to `{name, description, system}`.
    pub fn fixtures_json() -> String {
        let items: Vec<Value> = list_fixtures()
            .into_iter()
            .filter_map(|(name, description)| {
                let file: ScenarioFile = serde_json::from_str(fixture_text(&name)?).ok()?;
                let mut system = json!({"space": file.space, "sequence": file.sequence});
                if let Some(limit) = file.limit {
                    system["limit"] = json!(limit);
                }
                Some(json!({"name": name, "description": description, "system": system}))
            })
            .collect();
        Value::Array(items).to_string()
    }

    pub fn trajectory_json(spec: &str, x: &[f64], n: usize) -> Result<String, String> {
        cap(n, "n")?;
        let sys = system(spec)?;
        let x0 = sys.space().point(x).map_err(|e| e.to_string())?;
        let traj = sys.trajectory(&x0, n).map_err(|e| e.to_string())?;
        let points: Vec<&[f64]> = traj.points.iter().map(|p| p.coords()).collect();
        Ok(json!({"dim": sys.space().dim(), "points": points}).to_string())
    }

    pub fn omega_limit_json(
        spec: &str,
        x: &[f64],
        burn_in: usize,
        keep: usize,
        eps: f64,
    ) -> Result<String, String> {
        cap(burn_in.saturating_add(keep), "burn_in + keep")?;
        let sys = system(spec)?;
        let x0 = sys.space().point(x).map_err(|e| e.to_string())?;
        let est = omega_limit(&sys, &x0, OmegaParams { burn_in, keep, eps })
            .map_err(|e| e.to_string())?;
        let centers: Vec<&[f64]> = est.centers.iter().map(|p| p.coords()).collect();
        Ok(
            json!({"dim": sys.space().dim(), "count": centers.len(), "centers": centers})
                .to_string(),
        )
    }

    pub fn limit_profile_json(
        spec: &str,
        n: usize,
        window: usize,
        resolution: usize,
    ) -> Result<String, String> {
        cap(n.saturating_mul(resolution), "n * resolution")?;
        let sys = system(spec)?;
        if sys.space().dim() != 1 {
            return Err("the limit profile view needs a one-dimensional space".into());
        }
        let grid = sys.space().grid(resolution).map_err(|e| e.to_string())?;
        let prof =
            pointwise_limit_profile(&sys, &grid, n, window, 1e-3).map_err(|e| e.to_string())?;
        let xs: Vec<f64> = prof.grid.iter().map(|p| p.x()).collect();
        let values: Vec<Vec<f64>> = prof
            .values
            .iter()
            .map(|v| v.iter().map(|p| p.x()).collect())
            .collect();
        Ok(json!({"x": xs, "values": values, "max_jump": prof.max_jump}).to_string())
    }
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fixtures() -> String {
    api::fixtures_json()
}

#[wasm_bindgen]
pub fn trajectory(system: &str, x: Vec<f64>, n: usize) -> Result<String, JsValue> {
    js(api::trajectory_json(system, &x, n))
}

#[wasm_bindgen]
pub fn omega_limit(
    system: &str,
    x: Vec<f64>,
    burn_in: usize,
    keep: usize,
    eps: f64,
) -> Result<String, JsValue> {
    js(api::omega_limit_json(system, &x, burn_in, keep, eps))
}

#[wasm_bindgen]
pub fn limit_profile(
    system: &str,
    n: usize,
    window: usize,
    resolution: usize,
) -> Result<String, JsValue> {
    js(api::limit_profile_json(system, n, window, resolution))
}
