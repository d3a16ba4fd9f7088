//! Browser bindings for three small experiments. Every export returns a JSON
//! string so the page needs no generated TypeScript types.

use linemv::enumerative::{expected_real_transversals, transversals_of_four};
use linemv::grassmannian::PlueckerLine;
use linemv::rigs;
use linemv::seeds::{gaussian_vector4, rng_for};
use linemv::triangulation::{histogram, sensitivity_experiment, SensitivityKind, SensitivitySummary};
use nalgebra::Vector4;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn err(msg: impl ToString) -> JsValue {
    JsValue::from_str(&msg.to_string())
}

fn line_json(l: &PlueckerLine<linemv::Complex64>) -> serde_json::Value {
    let p = l.coords();
    json!({
        "re": p.iter().map(|z| z.re).collect::<Vec<_>>(),
        "im": p.iter().map(|z| z.im).collect::<Vec<_>>(),
        "real": l.real_view(1e-8).is_some(),
    })
}

/// Transversals of four lines, each given by two points of P³:
/// 32 numbers `[x0..x3, y0..y3]` per line.
#[wasm_bindgen]
pub fn transversals(points: &[f64]) -> Result<String, JsValue> {
    if points.len() != 32 {
        return Err(err(format!("expected 32 coordinates, got {}", points.len())));
    }
    let mut lines = Vec::with_capacity(4);
    for k in 0..4 {
        let v = |o: usize| Vector4::from_column_slice(&points[8 * k + o..8 * k + o + 4]);
        lines.push(PlueckerLine::from_vectors(&v(0), &v(4)).map_err(|e| err(format!("line {k}: {e}")))?);
    }
    let four: [PlueckerLine<f64>; 4] = lines.try_into().expect("four lines");
    let sol = transversals_of_four(&four);
    Ok(json!({
        "status": sol.status,
        "complex": sol.lines.len(),
        "real": sol.real_count,
        "lines": sol.lines.iter().map(line_json).collect::<Vec<_>>(),
    })
    .to_string())
}

/// Four random Gaussian lines as 32 coordinates, for seeding the form.
#[wasm_bindgen]
pub fn random_lines(seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, 0x5745, 0);
    (0..8).flat_map(|_| gaussian_vector4(&mut rng).iter().copied().collect::<Vec<_>>()).collect()
}

/// Monte-Carlo estimate of the expected number of real transversals.
#[wasm_bindgen]
pub fn real_count(samples: u32, seed: u64) -> Result<String, JsValue> {
    if samples == 0 || samples > 2_000_000 {
        return Err(err("samples must lie in 1..=2000000"));
    }
    let est = expected_real_transversals(samples as usize, seed);
    Ok(serde_json::to_string(&est).map_err(err)?)
}

/// Histogram of log10 error amplification under image noise `eps`.
#[wasm_bindgen]
pub fn sensitivity(m: u32, points: bool, fixed_rig: bool, trials: u32, eps: f64, seed: u64) -> Result<String, JsValue> {
    if !(2..=6).contains(&m) || (fixed_rig && m > 3) {
        return Err(err("m must be 2 or 3 with fixed cameras, at most 6 otherwise"));
    }
    if trials == 0 || trials > 20_000 {
        return Err(err("trials must lie in 1..=20000"));
    }
    let rig = if fixed_rig { rigs::sensitivity_rig(m as usize) } else { rigs::gaussian_rig(&mut rng_for(seed, 0x5745, 1), m as usize) };
    let kind = if points { SensitivityKind::Points } else { SensitivityKind::Lines };
    let records = sensitivity_experiment(&rig, kind, trials as usize, eps, seed).map_err(err)?;
    let summary = SensitivitySummary::from_records(kind, &records);
    let finite = |x: f64| x.is_finite().then_some(x);
    Ok(json!({
        "kind": kind,
        "trials": summary.trials,
        "ok": summary.ok,
        "mean": finite(summary.mean),
        "median": finite(summary.median),
        "bins": histogram(&records, 0.25),
    })
    .to_string())
}
