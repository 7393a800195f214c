use envloc::advantage::{self, linspace};
use envloc::bounds::{fid_choi, fid_classical, fid_probe};
use envloc::scenarios::{self, FigureRow};
use envloc::{CpfScenario, LogProb, PhaseInsensitiveChannel};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest number of rows a curve request may produce; keeps the page responsive.
pub const MAX_CURVE_POINTS: usize = 400;

/// `tau == 1` selects additive channels with noise `t`, `b`; otherwise `t`, `b` are
/// the environment variances of loss or amplifier channels.
pub fn pair(tau: f64, t: f64, b: f64, m: usize) -> envloc::Result<CpfScenario> {
    if tau == 1.0 {
        return scenarios::additive_scenario(t, b, m);
    }
    CpfScenario::uniform(m, 1, PhaseInsensitiveChannel::thermal(tau, b)?, PhaseInsensitiveChannel::thermal(tau, t)?)
}

pub fn summary(tau: f64, t: f64, b: f64, m: usize, a: f64) -> envloc::Result<Value> {
    let scen = pair(tau, t, b, m)?;
    let (bg, tg) = (scen.background(), scen.target());
    Ok(json!({
        "fidelity_finite_a": fid_probe(bg, tg, a)?,
        "fidelity_choi": fid_choi(bg, tg)?,
        "fidelity_classical": fid_classical(bg, tg)?,
        "condition_holds": advantage::advantage_condition(bg, tg)?,
        "fidelity_probes": advantage::fidelity_advantage_probes(&scen)?,
    }))
}

fn db(v: Option<LogProb>) -> Value {
    v.map_or(Value::Null, |p| json!(p.decibels()))
}

fn row(r: &FigureRow) -> Value {
    let b = r.bounds;
    json!({
        "M": r.probes,
        "quantum_lower": db(Some(b.quantum_lower)),
        "quantum_upper": db(Some(b.quantum_upper)),
        "classical_lower": db(Some(b.classical_lower)),
        "quantum_mle": db(r.quantum_mle),
        "classical_mle": db(r.classical_mle),
    })
}

/// Error curves in dB for `points` probe counts spread evenly over `1..=max_probes`.
pub fn curve(tau: f64, t: f64, b: f64, m: usize, max_probes: u64, points: usize) -> envloc::Result<Value> {
    let scen = pair(tau, t, b, m)?;
    let n = points.clamp(2, MAX_CURVE_POINTS) as u64;
    let mut probes: Vec<u64> = (0..n).map(|i| 1 + i * max_probes.saturating_sub(1) / (n - 1)).collect();
    probes.dedup();
    let fig = scenarios::figure_curve(&scen, &probes)?;
    let first = |pred: &dyn Fn(&FigureRow) -> bool| fig.first_where(pred);
    Ok(json!({
        "kind": format!("{:?}", scen.kind()).to_lowercase(),
        "rows": fig.rows.iter().map(row).collect::<Vec<_>>(),
        "bound_crossing": first(&|r| r.bounds.quantum_upper.ln() <= r.bounds.classical_lower.ln()),
        "mle_crossing": first(&|r| r.quantum_mle.is_some_and(|q| q.ln() < r.bounds.classical_lower.ln())),
    }))
}

/// Advantage mask on a `resolution` x `resolution` grid; `cells[i][j]` is 1, 0 or -1.
pub fn region(tau: f64, resolution: usize, eps_dif_max: f64, eps_av_max: f64) -> envloc::Result<Value> {
    let n = resolution.clamp(2, 400);
    let r = advantage::advantage_region(tau, &linspace(0.0, eps_dif_max, n), &linspace(0.5, eps_av_max, n))?;
    let cells: Vec<Vec<i8>> = r.cells.iter().map(|col| col.iter().map(|c| c.code()).collect()).collect();
    Ok(json!({ "eps_dif": r.eps_dif, "eps_av": r.eps_av, "cells": cells }))
}

fn to_js(v: envloc::Result<Value>) -> Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = channelSummary)]
pub fn channel_summary(tau: f64, t: f64, b: f64, m: usize, a: f64) -> Result<String, JsError> {
    to_js(summary(tau, t, b, m, a))
}

#[wasm_bindgen(js_name = errorCurve)]
pub fn error_curve(tau: f64, t: f64, b: f64, m: usize, max_probes: u32, points: usize) -> Result<String, JsError> {
    to_js(curve(tau, t, b, m, max_probes.into(), points))
}

#[wasm_bindgen(js_name = advantageRegion)]
pub fn advantage_region(tau: f64, resolution: usize, eps_dif_max: f64, eps_av_max: f64) -> Result<String, JsError> {
    to_js(region(tau, resolution, eps_dif_max, eps_av_max))
}
