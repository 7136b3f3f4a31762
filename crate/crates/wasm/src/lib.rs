//! Browser bindings. Every export takes and returns JSON strings.

use multiplicity::bitgroup::{l_value, GroupElement, KValue, Site};
use multiplicity::blocksys::{build_blocks, BlockCaps, TargetSequence};
use multiplicity::cfsystem::{plan_schedule, CfSystem, Label, SystemCaps};
use multiplicity::cocycle::Cocycle;
use multiplicity::koopman::{traceable_indices, weak_limit_trace};
use multiplicity::multiset_calc::{decompose_target, predicted_main, product_formula};
use serde::{Deserialize, Serialize};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Largest step count accepted from the page.
pub const MAX_STEPS: usize = 3;
/// Largest schedule length accepted from the page.
pub const MAX_N: usize = 6;

fn err(e: impl ToString) -> String {
    e.to_string()
}

#[derive(Deserialize)]
struct BlocksRequest {
    #[serde(rename = "E")]
    e: Vec<u64>,
    steps: usize,
}

#[derive(Serialize)]
struct OrbitRow {
    support: GroupElement,
    blocks: usize,
    orbit_count: u64,
    expected: u64,
}

/// `{"E":[2,3],"steps":2}` to the blocks and the orbit count of every
/// H-element up to `steps` blocks.
pub fn blocks_json(request: &str) -> Result<String, String> {
    let req: BlocksRequest = serde_json::from_str(request).map_err(err)?;
    if req.steps == 0 || req.steps > MAX_STEPS {
        return Err(format!("steps must be between 1 and {MAX_STEPS}"));
    }
    let target = TargetSequence::from_set(req.e.iter().copied()).map_err(err)?;
    let caps = BlockCaps {
        max_blocks: 5_000,
        max_combinations: 20_000,
    };
    let blocks = build_blocks(&target, req.steps, caps).map_err(err)?;
    let report = blocks.verify(req.steps, caps).map_err(err)?;
    let rows: Vec<OrbitRow> = report
        .entries
        .iter()
        .map(|e| OrbitRow {
            support: e.support.clone(),
            blocks: e.block_indices.len(),
            orbit_count: e.orbit_count,
            expected: e.expected,
        })
        .collect();
    Ok(json!({
        "blocks": blocks.blocks(),
        "orbits": rows,
        "pass": report.pass,
        "truncated": report.truncated,
    })
    .to_string())
}

#[derive(Deserialize)]
struct TraceRequest {
    /// Support of `χ`.
    chi: Vec<Site>,
    /// `"10"` for a single, `"0:10"` for a pair.
    label: String,
    n_max: usize,
}

fn parse_label(text: &str) -> Result<Label, String> {
    match text.split_once(':') {
        Some((a, b)) => Ok(Label::Pair(
            KValue::parse(a).map_err(err)?,
            KValue::parse(b).map_err(err)?,
        )),
        None => Ok(Label::Single(KValue::parse(text).map_err(err)?)),
    }
}

/// Weak-limit trace of `⟨U^{h_n} 1_{[0]_1}, 1_{[0,1]_1}⟩` for one label on
/// the schedule `"10"`, `0:0`, `0:10`.
pub fn trace_json(request: &str) -> Result<String, String> {
    let req: TraceRequest = serde_json::from_str(request).map_err(err)?;
    if req.n_max < 2 || req.n_max > MAX_N {
        return Err(format!("n_max must be between 2 and {MAX_N}"));
    }
    let label = parse_label(&req.label)?;
    let kv = |s: &str| KValue::parse(s).expect("literal");
    let schedule =
        plan_schedule(vec![kv("10")], vec![(kv("0"), kv("0")), (kv("0"), kv("10"))], req.n_max).map_err(err)?;
    let sys = CfSystem::build(schedule, SystemCaps::default()).map_err(err)?;
    let cocycle = Cocycle::assign(&sys).map_err(err)?;
    let chi = GroupElement::from_sites(req.chi);
    let ns = traceable_indices(&sys, &label, 1);
    if ns.is_empty() {
        return Err(format!("label {label} is not scheduled below n = {}", req.n_max));
    }
    let trace = weak_limit_trace(&sys, &cocycle, &chi, &label, &[0], &[0, 1], 1, &ns).map_err(err)?;
    let rows: Vec<_> = trace
        .rows
        .iter()
        .map(|r| {
            let (lo, hi) = r.achieved.to_f64_pair();
            let (p_lo, p_hi) = r.predicted.to_f64_pair();
            json!({
                "n": r.n,
                "h_n": r.h_n,
                "achieved": [lo, hi],
                "predicted": (p_lo + p_hi) / 2.0,
                "err": r.err.to_string(),
                "within_law": r.within_law,
            })
        })
        .collect();
    Ok(json!({
        "label": label.to_string(),
        "chi": chi,
        "rows": rows,
        "law_holds": trace.law_holds,
        "endpoint_improves": trace.endpoint_improves,
    })
    .to_string())
}

#[derive(Deserialize)]
struct PredictRequest {
    #[serde(rename = "E")]
    e: Vec<u64>,
    #[serde(default)]
    k: Vec<u64>,
    #[serde(default = "default_p_max")]
    p_max: usize,
    /// Optional `(χ, a)` for a single `l_χ(a)`.
    #[serde(default)]
    l_value: Option<(Vec<Site>, String)>,
}

fn default_p_max() -> usize {
    2
}

/// Predicted set, realized orbit decomposition and product formulas.
pub fn predict_json(request: &str) -> Result<String, String> {
    let req: PredictRequest = serde_json::from_str(request).map_err(err)?;
    if req.p_max > MAX_STEPS {
        return Err(format!("p_max must be at most {MAX_STEPS}"));
    }
    let predicted = predicted_main(&req.e).map_err(err)?;
    let caps = BlockCaps {
        max_blocks: 5_000,
        max_combinations: 20_000,
    };
    let realized = decompose_target(&req.e, req.p_max, caps).map_err(err)?;
    let products = req
        .k
        .iter()
        .map(|&k| product_formula(k, &req.e).map(|s| json!({"k": k, "values": s.values()})))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let l = match req.l_value {
        Some((chi, a)) => {
            let a = KValue::parse(&a).map_err(err)?;
            Some(l_value(&GroupElement::from_sites(chi), &a).to_string())
        }
        None => None,
    };
    Ok(json!({
        "predicted": predicted.values(),
        "realized": realized.values(),
        "product_formula": products,
        "l_value": l,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn blocks(request: &str) -> Result<String, JsError> {
    blocks_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn trace(request: &str) -> Result<String, JsError> {
    trace_json(request).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn predict(request: &str) -> Result<String, JsError> {
    predict_json(request).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        serde_json::from_str(s).unwrap()
    }

    #[test]
    fn blocks_for_e2() {
        let v = parse(&blocks_json(r#"{"E":[2],"steps":2}"#).unwrap());
        assert_eq!(v["blocks"], json!([[1], [3], [8, 10]]));
        assert_eq!(v["pass"], true);
        assert!(v["orbits"].as_array().unwrap().iter().all(|r| r["orbit_count"] == 2));
    }

    #[test]
    fn blocks_reject_bad_input() {
        assert!(blocks_json(r#"{"E":[1],"steps":2}"#).is_err());
        assert!(blocks_json(r#"{"E":[2],"steps":9}"#).is_err());
        assert!(blocks_json("nope").is_err());
    }

    #[test]
    fn trace_for_zero_pair() {
        let v = parse(&trace_json(r#"{"chi":[],"label":"0:0","n_max":6}"#).unwrap());
        let rows = v["rows"].as_array().unwrap();
        assert_eq!(
            rows.iter().map(|r| r["n"].as_u64().unwrap()).collect::<Vec<_>>(),
            [1, 4]
        );
        assert_eq!(v["law_holds"], true);
        assert_eq!(v["endpoint_improves"], true);
    }

    #[test]
    fn trace_rejects_unscheduled_label() {
        assert!(trace_json(r#"{"chi":[0],"label":"110","n_max":4}"#).is_err());
        assert!(trace_json(r#"{"chi":[0],"label":"10","n_max":9}"#).is_err());
    }

    #[test]
    fn predict_matches_worked_instance() {
        let v = parse(&predict_json(r#"{"E":[5],"k":[2],"p_max":1,"l_value":[[0],"1000"]}"#).unwrap());
        assert_eq!(v["predicted"], json!([2, 5]));
        assert_eq!(v["realized"], json!([2, 5]));
        assert_eq!(v["product_formula"][0]["values"], json!([3, 6, 10]));
        assert_eq!(v["l_value"], "1/2");
    }
}
