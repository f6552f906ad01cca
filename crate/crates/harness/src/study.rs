//! Convergence studies over fixture families and the generated families.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hbspline::fixture::{load_fixture, BoxSpec, DirectionSpec, FixtureFile, RegionSpec, FIXTURE_SCHEMA};
use hbspline::hierarchy::{build_hierarchical_basis, build_htilde, Hierarchy};
use hbspline::quasiinterp::{
    domain_region, error_norm, MultiscaleQuasiInterpolant, Norm, NormConfig, QuadratureConfig,
};
use hbspline::tensor::CellId;
use hbspline::testfn::TestFunction;
use hbspline::{Error, Result};

/// Orders are only reported when both errors exceed this floor.
pub const ERROR_FLOOR: f64 = 1e-12;
/// Accepted shortfall of the observed order below the theoretical one.
pub const ORDER_WINDOW: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRequest {
    pub family: PathBuf,
    pub function: String,
    pub norm: Norm,
    pub s: Vec<usize>,
    pub norms: NormConfig,
    pub quadrature: QuadratureConfig,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub step: usize,
    pub level: usize,
    pub h: f64,
    pub error: f64,
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    /// `h_{ℓ,i}` per direction.
    pub h: Vec<f64>,
    /// `‖f − Πf‖` on `Ω_ℓ` (with `Ω_0 = Ω`).
    pub error_big_omega: f64,
    /// `‖f − Πf‖` on `ω_ℓ`; `None` when `ω_ℓ` is empty.
    pub error_small_omega: Option<f64>,
    /// `Σ_i h_{ℓ,i}^{s_i} ‖D^{s_i}_{x_i} f‖` on `Ω_{ℓ-1}` (on `Ω` for `ℓ = 0`).
    pub bound_rhs: f64,
    pub order: Option<f64>,
    pub order_small_omega: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyStep {
    pub step: usize,
    pub mesh: String,
    pub n_h: usize,
    pub n_htilde: usize,
    pub levels: Vec<LevelResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub function: String,
    pub norm: Norm,
    pub s: Vec<usize>,
    pub expected_order: f64,
    pub steps: Vec<StudyStep>,
}

impl StudyReport {
    pub fn rows(&self) -> Vec<StudyRow> {
        self.steps
            .iter()
            .flat_map(|st| {
                st.levels.iter().map(move |l| StudyRow {
                    step: st.step,
                    level: l.level,
                    h: l.h.iter().copied().fold(0.0, f64::max),
                    error: l.error_big_omega,
                    order: l.order,
                })
            })
            .collect()
    }

    /// Orders observed over the last `k` steps, per level, with the level.
    pub fn last_orders(&self, k: usize) -> Vec<(usize, usize, f64)> {
        let start = self.steps.len().saturating_sub(k);
        self.steps[start..]
            .iter()
            .flat_map(|st| st.levels.iter().filter_map(move |l| l.order.map(|o| (st.step, l.level, o))))
            .collect()
    }

    /// Orders over the last three steps that fall short of the window.
    pub fn shortfalls(&self) -> Vec<(usize, usize, f64)> {
        self.last_orders(3).into_iter().filter(|(_, _, o)| *o < self.expected_order - ORDER_WINDOW).collect()
    }
}

/// Fixture files of a family directory, in name order.
pub fn family_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::Fixture {
        location: dir.display().to_string(),
        message: format!("cannot read family directory: {e}"),
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Fixture { location: dir.display().to_string(), message: "no .toml fixtures".into() });
    }
    Ok(files)
}

fn derivative_norm(h: &Hierarchy, f: &TestFunction, dir: usize, order: usize, q: Norm, region: &[CellId], cfg: NormConfig) -> Result<f64> {
    let d = |x: &[f64]| f.derivative(dir, order, x);
    error_norm(h, &d, &|_: &[f64]| 0.0, q, region, cfg)
}

fn order(prev: Option<f64>, cur: Option<f64>, h_prev: f64, h_cur: f64) -> Option<f64> {
    match (prev, cur) {
        (Some(a), Some(b)) if a > ERROR_FLOOR && b > ERROR_FLOOR => Some((a / b).ln() / (h_prev / h_cur).ln()),
        _ => None,
    }
}

pub fn study_hierarchy(h: &Hierarchy, f: &TestFunction, req: &StudyRequest) -> Result<(usize, usize, Vec<LevelResult>)> {
    let seq = h.seq();
    let qi = MultiscaleQuasiInterpolant::new(h, req.quadrature)?;
    let htilde = build_htilde(h)?;
    let (basis, _) = build_hierarchical_basis(h)?;
    let pi = qi.apply_raw(seq, f)?;
    let s = pi.bind(seq);
    let mut levels = Vec::with_capacity(h.depth());
    for l in 0..h.depth() {
        let big = domain_region(h, l);
        let small: Vec<CellId> = qi.omegas().level(l).ids().collect();
        let error_big_omega = error_norm(h, f, &s, req.norm, &big, req.norms)?;
        let error_small_omega =
            if small.is_empty() { None } else { Some(error_norm(h, f, &s, req.norm, &small, req.norms)?) };
        let hs = seq.level(l).max_cell_lengths();
        let coarser = domain_region(h, l.saturating_sub(1));
        let mut bound_rhs = 0.0;
        for (i, (&hi, &si)) in hs.iter().zip(&req.s).enumerate() {
            bound_rhs += hi.powi(si as i32) * derivative_norm(h, f, i, si, req.norm, &coarser, req.norms)?;
        }
        levels.push(LevelResult {
            level: l,
            h: hs,
            error_big_omega,
            error_small_omega,
            bound_rhs,
            order: None,
            order_small_omega: None,
        });
    }
    Ok((basis.len(), htilde.len(), levels))
}

pub fn run_study(req: &StudyRequest) -> Result<StudyReport> {
    let files = family_files(&req.family)?;
    let mut steps: Vec<StudyStep> = Vec::with_capacity(files.len());
    let mut expected = f64::INFINITY;
    for (k, path) in files.iter().enumerate() {
        let fx = load_fixture(path)?;
        let seq = fx.hierarchy.seq();
        let degrees = seq.degrees();
        let s = match req.s.len() {
            1 => vec![req.s[0]; degrees.len()],
            n if n == degrees.len() => req.s.clone(),
            n => {
                return Err(Error::Precondition(format!(
                    "--s has {n} entries but {} has dimension {}",
                    path.display(),
                    degrees.len()
                )))
            }
        };
        if let Some(i) = (0..s.len()).find(|&i| s[i] < 1 || s[i] > degrees[i] + 1) {
            return Err(Error::Precondition(format!(
                "s_{i} = {} must lie in 1..={} for degree {}",
                s[i],
                degrees[i] + 1,
                degrees[i]
            )));
        }
        expected = expected.min(s.iter().copied().min().unwrap_or(1) as f64);
        let f = TestFunction::from_name(&req.function, &degrees)?;
        let step_req = StudyRequest { s, ..req.clone() };
        let (n_h, n_htilde, mut levels) = study_hierarchy(&fx.hierarchy, &f, &step_req)?;
        if let Some(prev) = steps.last() {
            for lv in levels.iter_mut() {
                if let Some(p) = prev.levels.iter().find(|p| p.level == lv.level) {
                    let hp = p.h.iter().copied().fold(0.0, f64::max);
                    let hc = lv.h.iter().copied().fold(0.0, f64::max);
                    lv.order = order(Some(p.error_big_omega), Some(lv.error_big_omega), hp, hc);
                    lv.order_small_omega = order(p.error_small_omega, lv.error_small_omega, hp, hc);
                }
            }
        }
        steps.push(StudyStep { step: k, mesh: fx.name.clone(), n_h, n_htilde, levels });
    }
    let s = req.s.clone();
    Ok(StudyReport { function: req.function.clone(), norm: req.norm, s, expected_order: expected, steps })
}

/// Family shapes that can be generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// Three levels, `Ω_1 = Ω_2 = Ω`, initial mesh `2·2^k` intervals per direction.
    Uniform,
    /// Three levels, `Ω_ℓ = [0, 2^{-ℓ}]^d`, initial mesh `4·2^k` intervals.
    Corner,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "corner" => Ok(Self::Corner),
            other => Err(Error::Precondition(format!("unknown family '{other}', expected uniform or corner"))),
        }
    }
}

pub fn family(kind: FamilyKind, degrees: &[usize], steps: usize) -> Vec<FixtureFile> {
    let d = degrees.len();
    (0..steps)
        .map(|k| {
            let base = match kind {
                FamilyKind::Uniform => 2usize << k,
                FamilyKind::Corner => 4usize << k,
            };
            let subdomain = (1..3)
                .map(|l| {
                    let cells_at_prev = base << (l - 1);
                    let hi = match kind {
                        FamilyKind::Uniform => cells_at_prev,
                        // [0, 2^{-l}] in level-(l-1) cells
                        FamilyKind::Corner => cells_at_prev >> l,
                    };
                    RegionSpec { omega: l, cells: Vec::new(), boxes: vec![BoxSpec { lo: vec![0; d], hi: vec![hi; d] }] }
                })
                .collect();
            let tag = match kind {
                FamilyKind::Uniform => "uniform",
                FamilyKind::Corner => "corner",
            };
            let degs: Vec<String> = degrees.iter().map(|p| p.to_string()).collect();
            FixtureFile {
                schema: FIXTURE_SCHEMA.into(),
                name: Some(format!("{tag}-d{d}-p{}-step{k}", degs.join(""))),
                dim: d,
                degrees: degrees.to_vec(),
                depth: 3,
                direction: vec![DirectionSpec { intervals: Some(base), ..DirectionSpec::default() }; d],
                refinement: Default::default(),
                subdomain,
                enlargement: Vec::new(),
            }
        })
        .collect()
}

pub fn write_family(dir: &Path, files: &[FixtureFile]) -> Result<Vec<PathBuf>> {
    let io = |e: std::io::Error| Error::Fixture { location: dir.display().to_string(), message: e.to_string() };
    std::fs::create_dir_all(dir).map_err(io)?;
    files
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let path = dir.join(format!("step-{k:02}.toml"));
            std::fs::write(&path, f.to_toml()).map_err(io)?;
            Ok(path)
        })
        .collect()
}
