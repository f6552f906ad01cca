//! WebAssembly entry points for the static page in `www/`. Every operation
//! takes fixture TOML and returns JSON for the page to draw.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use hbspline::fixture::parse_fixture;
use hbspline::hierarchy::{build_hierarchical_basis, build_htilde, HierBasis, Hierarchy};
use hbspline::quadrature::sample_grid;
use hbspline::quasiinterp::{error_norm, MultiscaleQuasiInterpolant, Norm, NormConfig, QuadratureConfig};
use hbspline::spline::Evaluate;
use hbspline::tensor::CellId;
use hbspline::testfn::TestFunction;

#[derive(Debug, Serialize)]
pub struct Rect {
    pub level: usize,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct MeshView {
    pub dim: usize,
    pub degrees: Vec<usize>,
    pub depth: usize,
    pub cells: Vec<Rect>,
    /// Supports of the functions in `H` but not in `H̃`.
    pub zero_weight: Vec<Rect>,
    pub n_h: usize,
    pub n_htilde: usize,
    pub strictly_admissible: bool,
    pub omega_nested: bool,
}

#[derive(Debug, Serialize)]
pub struct Curve {
    pub level: usize,
    pub index: usize,
    pub weight: f64,
    /// `a_β β` at the sample abscissae.
    pub values: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct BasisView {
    pub x: Vec<f64>,
    pub h: Vec<Curve>,
    pub htilde: Vec<Curve>,
}

#[derive(Debug, Serialize)]
pub struct InterpolationView {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub pi: Vec<f64>,
    pub l2_error: f64,
    pub linf_error: f64,
    pub n_htilde: usize,
}

fn load(toml: &str) -> Result<Hierarchy, String> {
    parse_fixture(toml, "input", "input").map(|f| f.hierarchy).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

fn require_dim(h: &Hierarchy, allowed: &[usize]) -> Result<(), String> {
    if allowed.contains(&h.dim()) {
        Ok(())
    } else {
        Err(format!("this view supports dimension {allowed:?}, the fixture has dimension {}", h.dim()))
    }
}

pub fn mesh_view(toml: &str) -> Result<String, String> {
    let h = load(toml)?;
    require_dim(&h, &[1, 2])?;
    let seq = h.seq();
    let (basis, mesh) = build_hierarchical_basis(&h).map_err(|e| e.to_string())?;
    let htilde = build_htilde(&h).map_err(|e| e.to_string())?;
    let qi = MultiscaleQuasiInterpolant::new(&h, QuadratureConfig::default()).map_err(|e| e.to_string())?;
    let cells = mesh
        .cells()
        .map(|c| {
            let (lo, hi) = seq.level(c.level).cell_bounds(c.index);
            Rect { level: c.level, lo, hi }
        })
        .collect();
    let zero_weight = basis
        .active
        .difference(&htilde.active)
        .map(|f| {
            let (lo, hi) = seq.level(f.level).support_bounds(f.index);
            Rect { level: f.level, lo, hi }
        })
        .collect();
    let adm = qi.admissibility();
    to_json(&MeshView {
        dim: h.dim(),
        degrees: seq.degrees(),
        depth: h.depth(),
        cells,
        zero_weight,
        n_h: basis.len(),
        n_htilde: htilde.len(),
        strictly_admissible: adm.strictly_admissible,
        omega_nested: adm.omega_nested,
    })
}

fn abscissae(samples: usize) -> Vec<f64> {
    sample_grid(&[0.0], &[1.0], samples.clamp(2, 5000)).into_iter().map(|p| p[0]).collect()
}

fn curves(h: &Hierarchy, basis: &HierBasis, x: &[f64]) -> Vec<Curve> {
    basis
        .weights
        .iter()
        .map(|(f, w)| Curve {
            level: f.level,
            index: f.index,
            weight: w.value,
            values: x.iter().map(|&t| w.value * h.eval_fn(*f, &[t])).collect(),
        })
        .collect()
}

pub fn basis_view(toml: &str, samples: usize) -> Result<String, String> {
    let h = load(toml)?;
    require_dim(&h, &[1])?;
    let (basis, _) = build_hierarchical_basis(&h).map_err(|e| e.to_string())?;
    let htilde = build_htilde(&h).map_err(|e| e.to_string())?;
    let x = abscissae(samples);
    to_json(&BasisView { h: curves(&h, &basis, &x), htilde: curves(&h, &htilde, &x), x })
}

pub fn interpolation_view(toml: &str, function: &str, samples: usize) -> Result<String, String> {
    let h = load(toml)?;
    require_dim(&h, &[1])?;
    let seq = h.seq();
    let f = TestFunction::from_name(function, &seq.degrees()).map_err(|e| e.to_string())?;
    let qi = MultiscaleQuasiInterpolant::new(&h, QuadratureConfig::default()).map_err(|e| e.to_string())?;
    let htilde = build_htilde(&h).map_err(|e| e.to_string())?;
    let pi = qi.apply(&h, &htilde, &f).map_err(|e| e.to_string())?;
    let spline = pi.to_multilevel(seq);
    let s = spline.bind(seq);
    let x = abscissae(samples);
    let all: Vec<CellId> = (0..seq.level(0).num_cells()).map(|c| CellId::new(0, c)).collect();
    let norm = |q| error_norm(&h, &f, &s, q, &all, NormConfig::default()).map_err(|e| e.to_string());
    to_json(&InterpolationView {
        f: x.iter().map(|&t| f.eval(&[t])).collect(),
        pi: x.iter().map(|&t| s.eval(&[t])).collect(),
        l2_error: norm(Norm::L2)?,
        linf_error: norm(Norm::Linf)?,
        n_htilde: htilde.len(),
        x,
    })
}

/// Active cells, zero-weight supports and admissibility of a 1D or 2D fixture.
#[wasm_bindgen]
pub fn mesh(toml: &str) -> Result<String, JsValue> {
    mesh_view(toml).map_err(|e| JsValue::from_str(&e))
}

/// Weighted basis functions `a_β β` of `H` and `H̃` for a 1D fixture.
#[wasm_bindgen]
pub fn weighted_basis(toml: &str, samples: usize) -> Result<String, JsValue> {
    basis_view(toml, samples).map_err(|e| JsValue::from_str(&e))
}

/// `f` and `Π f` over `H̃` for a 1D fixture, with L² and L∞ errors.
#[wasm_bindgen]
pub fn quasi_interpolant(toml: &str, function: &str, samples: usize) -> Result<String, JsValue> {
    interpolation_view(toml, function, samples).map_err(|e| JsValue::from_str(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const L_SHAPE: &str = include_str!("../../../fixtures/zero-weight-lshape.toml");
    const D1: &str = r#"
schema = "hbspline-fixture/1"
dim = 1
degrees = [2]
depth = 3

[[direction]]
intervals = 8

[[subdomain]]
omega = 1
boxes = [{ lo = [0], hi = [6] }]

[[subdomain]]
omega = 2
boxes = [{ lo = [0], hi = [6] }]
"#;

    #[test]
    fn mesh_lists_zero_weight_supports() {
        let v: serde_json::Value = serde_json::from_str(&mesh_view(L_SHAPE).unwrap()).unwrap();
        assert_eq!(v["zero_weight"].as_array().unwrap().len(), 4);
        assert_eq!(v["n_h"].as_u64().unwrap() - v["n_htilde"].as_u64().unwrap(), 4);
        let area: f64 = v["cells"]
            .as_array()
            .unwrap()
            .iter()
            .map(|c| (0..2).map(|i| c["hi"][i].as_f64().unwrap() - c["lo"][i].as_f64().unwrap()).product::<f64>())
            .sum();
        assert!((area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_basis_sums_to_one() {
        let v: serde_json::Value = serde_json::from_str(&basis_view(D1, 101).unwrap()).unwrap();
        for key in ["h", "htilde"] {
            let curves = v[key].as_array().unwrap();
            for k in 0..101 {
                let sum: f64 = curves.iter().map(|c| c["values"][k].as_f64().unwrap()).sum();
                assert!((sum - 1.0).abs() < 1e-12, "{key} at sample {k}: {sum}");
            }
        }
    }

    #[test]
    fn quasi_interpolant_is_close() {
        let v: serde_json::Value = serde_json::from_str(&interpolation_view(D1, "sin", 201).unwrap()).unwrap();
        assert!(v["linf_error"].as_f64().unwrap() < 5e-2);
        assert!(v["l2_error"].as_f64().unwrap() <= v["linf_error"].as_f64().unwrap());
    }

    #[test]
    fn page_presets_are_valid() {
        let page = include_str!("../www/index.html");
        let presets: Vec<&str> = page.split('`').filter(|b| b.starts_with("schema")).collect();
        assert_eq!(presets.len(), 3);
        for toml in presets {
            let v: serde_json::Value = serde_json::from_str(&mesh_view(toml).unwrap()).unwrap();
            if v["dim"] == 1 {
                basis_view(toml, 50).unwrap();
                interpolation_view(toml, "gauss", 50).unwrap();
            }
        }
    }

    #[test]
    fn views_reject_unsupported_input() {
        let d3 = include_str!("../../../fixtures/d3-corner.toml");
        assert!(mesh_view(d3).unwrap_err().contains("dimension"));
        assert!(basis_view(L_SHAPE, 10).unwrap_err().contains("dimension"));
        assert!(mesh_view("not toml [").is_err());
    }
}
