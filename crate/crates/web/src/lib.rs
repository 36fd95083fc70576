//! Browser bindings for the tradeoff curves. Every export returns a flat
//! `Float64Array` of fixed-width records so the page can draw without
//! parsing.
//!
//! The `*_records` functions hold the logic and run natively too; the
//! `#[wasm_bindgen]` wrappers only convert errors.

use wasm_bindgen::prelude::*;
use xdmt_core::dmt::{
    dmt_curve, evaluate, f_functions, linspace, APolicy, Scheme, SwitchFraction, R_MAX_IA,
};

fn scheme(name: &str) -> Result<Scheme, String> {
    name.parse::<Scheme>().map_err(|e| e.to_string())
}

/// `[r, a, d]` triples over `steps` points spanning the scheme's domain.
/// A negative `a` means the scheme's own choice (optimal or pinned).
pub fn curve_records(name: &str, steps: usize, a: f64) -> Result<Vec<f64>, String> {
    let scheme = scheme(name)?;
    if steps < 2 {
        return Err("need at least 2 points".into());
    }
    let policy = if a < 0.0 {
        APolicy::Auto
    } else {
        APolicy::Fixed(SwitchFraction::new(a).map_err(|e| e.to_string())?)
    };
    let curve = dmt_curve(scheme, &linspace(0.0, scheme.r_max(), steps), policy).map_err(|e| e.to_string())?;
    Ok(curve.points.iter().flat_map(|p| [p.r, p.a.value(), p.d]).collect())
}

/// `[a, f1, f2, f3, f4, d]` rows for `a` from 0 to 1 at fixed `r`.
/// Branches that are unbounded at `a = 0` come back as `+inf`.
pub fn component_records(name: &str, r: f64, steps: usize) -> Result<Vec<f64>, String> {
    let scheme = scheme(name)?;
    if !matches!(scheme, Scheme::OnOffIa | Scheme::OnOffIaa) {
        return Err(format!("{scheme} has no free IA fraction"));
    }
    if steps < 2 {
        return Err("need at least 2 points".into());
    }
    let mut out = Vec::with_capacity(6 * steps);
    for a in linspace(0.0, 1.0, steps) {
        let sa = SwitchFraction::new(a).map_err(|e| e.to_string())?;
        let f = f_functions(scheme, sa, r).map_err(|e| e.to_string())?;
        let d = evaluate(scheme, r, APolicy::Fixed(sa)).map_err(|e| e.to_string())?.d;
        out.push(a);
        out.extend(f);
        out.push(d);
    }
    Ok(out)
}

/// `[r, a*, d]` along the closed-form optimal IA fraction.
pub fn optimal_fraction_records(name: &str, steps: usize) -> Result<Vec<f64>, String> {
    let scheme = scheme(name)?;
    if !matches!(scheme, Scheme::OnOffIa | Scheme::OnOffIaa) {
        return Err(format!("{scheme} has no free IA fraction"));
    }
    curve_records(scheme.name(), steps, -1.0)
}

#[wasm_bindgen]
pub fn scheme_names() -> Vec<String> {
    Scheme::ALL.iter().map(|s| s.name().to_string()).collect()
}

#[wasm_bindgen]
pub fn r_max_ia() -> f64 {
    R_MAX_IA
}

#[wasm_bindgen]
pub fn curve(name: &str, steps: usize, a: f64) -> Result<Vec<f64>, JsError> {
    curve_records(name, steps, a).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn components(name: &str, r: f64, steps: usize) -> Result<Vec<f64>, JsError> {
    component_records(name, r, steps).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn optimal_fraction(name: &str, steps: usize) -> Result<Vec<f64>, JsError> {
    optimal_fraction_records(name, steps).map_err(|e| JsError::new(&e))
}
