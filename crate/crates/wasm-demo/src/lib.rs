//! Browser demo bindings. Every operation takes and returns JSON text so the page needs no glue
//! beyond `JSON.parse`.

use qia_core::classical::{cc_state, JointPmf};
use qia_core::divergences::{mi_variance, mutual_information};
use qia_core::exponents::{exponent_curve, linear_rates, thresholds, Regime};
use qia_core::io::{state_from_json, state_to_json};
use qia_core::random::{random_bipartite_state, rng_from_seed};
use qia_core::rmi::{check_range, rmi, Minimization, OptimizerOpts, RmiVariant};
use serde_json::{json, Value};

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Core(#[from] qia_core::Error),
    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, DemoError>;

/// Largest number of curve samples a single call will compute.
pub const MAX_POINTS: usize = 200;
/// Largest local dimension offered for random states.
pub const MAX_LOCAL_DIM: usize = 4;

/// Optimizer settings for interactive use: one restart instead of the library default.
pub fn demo_opts() -> OptimizerOpts {
    OptimizerOpts { restarts: 1, ..OptimizerOpts::default() }
}

fn points(n: usize) -> Result<usize> {
    if !(2..=MAX_POINTS).contains(&n) {
        return Err(DemoError::Input(format!("number of points must lie in [2, {MAX_POINTS}], got {n}")));
    }
    Ok(n)
}

/// Non-finite numbers become strings so the output stays valid JSON.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(x.to_string())
    }
}

pub fn parse_variant(name: &str) -> Result<RmiVariant> {
    let (family, kind) = name
        .split_once('-')
        .ok_or_else(|| DemoError::Input(format!("unknown variant '{name}'")))?;
    let kind = match kind {
        "up-up" => Minimization::UpUp,
        "up-down" => Minimization::UpDown,
        "down-down" => Minimization::DownDown,
        _ => return Err(DemoError::Input(format!("unknown variant '{name}'"))),
    };
    match family {
        "petz" => Ok(RmiVariant::petz(kind)),
        "sandwiched" => Ok(RmiVariant::sandwiched(kind)),
        _ => Err(DemoError::Input(format!("unknown variant '{name}'"))),
    }
}

/// State JSON of the classically correlated two-qubit state with weights p and 1 − p on |00⟩ and |11⟩.
pub fn copy_state(p: f64) -> Result<String> {
    Ok(state_to_json(&cc_state(&JointPmf::copy(p)?)))
}

/// State JSON of a seeded random d_a × d_b mixed state.
pub fn random_state(d_a: usize, d_b: usize, seed: u64) -> Result<String> {
    if !(1..=MAX_LOCAL_DIM).contains(&d_a) || !(1..=MAX_LOCAL_DIM).contains(&d_b) {
        return Err(DemoError::Input(format!("local dimensions must lie in [1, {MAX_LOCAL_DIM}]")));
    }
    Ok(state_to_json(&random_bipartite_state(&mut rng_from_seed(seed), d_a, d_b)))
}

/// Mutual information, information variance and the exponent thresholds.
pub fn summary(state: &str) -> Result<String> {
    let rho = state_from_json(state)?;
    let t = thresholds(&rho, &demo_opts())?;
    let out = json!({
        "dims": [rho.d_a(), rho.d_b()],
        "mutual_information": num(mutual_information(&rho)?),
        "variance": num(mi_variance(&rho)?),
        "r_half": num(t.r_half),
        "r_inf": num(t.r_inf),
        "warnings": t.warnings,
    });
    Ok(out.to_string())
}

/// Information of one variant sampled on an evenly spaced order grid. Orders outside the
/// variant's supported range are reported as null.
pub fn rmi_curve(state: &str, variant: &str, alpha_min: f64, alpha_max: f64, n: usize) -> Result<String> {
    let rho = state_from_json(state)?;
    let v = parse_variant(variant)?;
    if !(0.0 <= alpha_min && alpha_min < alpha_max && alpha_max.is_finite()) {
        return Err(DemoError::Input(format!("order range [{alpha_min}, {alpha_max}] must be finite, increasing and nonnegative")));
    }
    let alphas = linear_rates(alpha_min, alpha_max, points(n)?)?;
    let opts = demo_opts();
    let mut values = Vec::with_capacity(alphas.len());
    for &a in &alphas {
        if check_range(v, a, &opts).is_err() {
            values.push(Value::Null);
            continue;
        }
        values.push(num(rmi(&rho, a, v, &opts)?.value));
    }
    Ok(json!({ "variant": variant, "alpha": alphas, "value": values }).to_string())
}

/// Direct exponent on [0, I] and strong converse exponent on [I, 2I].
pub fn exponent_curves(state: &str, n: usize) -> Result<String> {
    let rho = state_from_json(state)?;
    let n = points(n)?;
    let mi = mutual_information(&rho)?;
    let opts = demo_opts();
    let curve = |lo: f64, hi: f64, regime| -> Result<Value> {
        let c = exponent_curve(&rho, &linear_rates(lo, hi, n)?, regime, &opts)?;
        let rate: Vec<Value> = c.points.iter().map(|p| num(p.rate)).collect();
        let exponent: Vec<Value> = c.points.iter().map(|p| num(p.exponent)).collect();
        Ok(json!({ "rate": rate, "exponent": exponent }))
    };
    let out = json!({
        "mutual_information": num(mi),
        "direct": curve(0.0, mi, Regime::Direct)?,
        "strong_converse": curve(mi, 2.0 * mi, Regime::StrongConverse)?,
    });
    Ok(out.to_string())
}

#[cfg(target_arch = "wasm32")]
mod bindings {
    use wasm_bindgen::prelude::*;

    fn js<T>(r: super::Result<T>) -> Result<T, JsError> {
        r.map_err(|e| JsError::new(&e.to_string()))
    }

    #[wasm_bindgen(js_name = copyState)]
    pub fn copy_state(p: f64) -> Result<String, JsError> {
        js(super::copy_state(p))
    }

    #[wasm_bindgen(js_name = randomState)]
    pub fn random_state(d_a: usize, d_b: usize, seed: u32) -> Result<String, JsError> {
        js(super::random_state(d_a, d_b, seed as u64))
    }

    #[wasm_bindgen]
    pub fn summary(state: &str) -> Result<String, JsError> {
        js(super::summary(state))
    }

    #[wasm_bindgen(js_name = rmiCurve)]
    pub fn rmi_curve(state: &str, variant: &str, alpha_min: f64, alpha_max: f64, points: usize) -> Result<String, JsError> {
        js(super::rmi_curve(state, variant, alpha_min, alpha_max, points))
    }

    #[wasm_bindgen(js_name = exponentCurves)]
    pub fn exponent_curves(state: &str, points: usize) -> Result<String, JsError> {
        js(super::exponent_curves(state, points))
    }
}
