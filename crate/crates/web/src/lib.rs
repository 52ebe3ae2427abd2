//! Browser bindings for the bound curves and scenario checks.
//!
//! Numeric results cross the boundary as flat `Float64Array`s; scenario
//! checks return JSON text with either the report or an `error` field.

use autobid_fpa::bounds::{full_autobidding_ml_bound, gamma_sweep, ml_poa_bound, phi_ml};
use autobid_fpa::equilibrium::{best_response_dynamics, truthful_profile, verify_equilibrium};
use autobid_fpa::io::parse_scenario;
use autobid_fpa::CandidateGrid;
use serde_json::json;
use wasm_bindgen::prelude::*;

/// `[minimizer_t, bound, full_autobidding_bound]` for reserves of accuracy
/// `gamma`, or an empty array when `gamma` is outside `[0, 1]`.
#[wasm_bindgen]
pub fn bound(gamma: f64) -> Vec<f64> {
    match (ml_poa_bound(gamma), full_autobidding_ml_bound(gamma)) {
        (Ok(b), Ok(full)) => vec![b.minimizer_t, b.bound_value, full],
        _ => Vec::new(),
    }
}

/// Objective of the bound minimization at `points` evenly spaced `t` in
/// `(0, 1]`, interleaved as `[t0, f0, t1, f1, ...]`.
#[wasm_bindgen]
pub fn objective_curve(gamma: f64, points: usize) -> Vec<f64> {
    let points = points.max(2);
    (1..=points)
        .flat_map(|k| {
            let t = k as f64 / points as f64;
            [t, phi_ml(t, gamma)]
        })
        .collect()
}

/// Both bounds over gamma in `[0, 1]`, interleaved as
/// `[gamma, mixed, full_autobidding, ...]`.
#[wasm_bindgen]
pub fn sweep(step: f64) -> Vec<f64> {
    gamma_sweep(step)
        .map(|rows| {
            rows.iter()
                .flat_map(|r| [r.gamma, r.mixed_bound, r.full_autobidding_bound])
                .collect()
        })
        .unwrap_or_default()
}

/// Verifies the scenario's profile, or the profile reached by dynamics
/// from truthful bids when the scenario has none.
#[wasm_bindgen]
pub fn check_scenario(text: &str, epsilon: f64, grid: usize) -> String {
    let result = (|| -> autobid_fpa::Result<serde_json::Value> {
        let scenario = parse_scenario(text)?;
        let grid = CandidateGrid::new(grid.max(1));
        let (profile, dynamics) = match scenario.profile {
            Some(p) => (p, None),
            None => {
                let start = truthful_profile(&scenario.instance);
                let d = best_response_dynamics(&scenario.instance, &start, grid, 200, epsilon)?;
                (
                    d.profile.clone(),
                    Some(json!({ "converged": d.converged, "iters": d.iters })),
                )
            }
        };
        let report = verify_equilibrium(&scenario.instance, &profile, grid, epsilon)?;
        Ok(json!({
            "dynamics": dynamics,
            "profile": autobid_fpa::io::profile_repr(&profile),
            "report": report,
        }))
    })();
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}
