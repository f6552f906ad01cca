//! Runs every kernel invariant against one fixture.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use hbspline::fixture::{mesh_round_trip, Fixture};
use hbspline::hierarchy::{
    build_hierarchical_basis, build_htilde, compute_weights, expand_deactivated, expand_exact, represent,
    zero_weight_by_characterization, HierBasis, Hierarchy, WeightMap,
};
use hbspline::quadrature::tensor_rule;
use hbspline::quasiinterp::{check_admissibility, Admissibility, MultiscaleQuasiInterpolant, OmegaDomains, QuadratureConfig};
use hbspline::spline::{Evaluate, MultiLevelSpline};
use hbspline::tensor::{BoxIter, CellId, FnId, LevelSequence, RefinementRule};
use hbspline::testfn::TestFunction;
use hbspline::univariate::is_child_by_conditions;
use hbspline::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub module: String,
    pub status: Status,
    pub checked: usize,
    pub failures: usize,
    pub worst: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub b0: usize,
    pub h: usize,
    pub htilde: usize,
    pub zero_weight: usize,
    pub deactivated: usize,
    pub active_cells: usize,
    pub omega_cells: Vec<usize>,
    pub omega_members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub fixture: String,
    pub dim: usize,
    pub degrees: Vec<usize>,
    pub depth: usize,
    pub admissibility: Admissibility,
    pub counts: Counts,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random points for partition-of-unity checks.
    pub points: usize,
    /// Random parents for the two-scale check and points per parent.
    pub parents: usize,
    pub parent_points: usize,
    /// Random points per ω-level for operator identities.
    pub operator_points: usize,
    /// Also verify partition of unity in rational arithmetic.
    pub exact: bool,
    pub quadrature: QuadratureConfig,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 20150601,
            points: 1000,
            parents: 50,
            parent_points: 100,
            operator_points: 200,
            exact: true,
            quadrature: QuadratureConfig::default(),
        }
    }
}

/// Accumulates residuals and boolean conditions for one check.
#[derive(Debug, Clone)]
pub struct Tally {
    checked: usize,
    failures: usize,
    worst: Option<f64>,
    tolerance: Option<f64>,
    first: Option<String>,
    note: Option<String>,
}

impl Tally {
    pub fn residuals(tolerance: f64) -> Self {
        Self { checked: 0, failures: 0, worst: Some(0.0), tolerance: Some(tolerance), first: None, note: None }
    }

    pub fn conditions() -> Self {
        Self { checked: 0, failures: 0, worst: None, tolerance: None, first: None, note: None }
    }

    pub fn residual(&mut self, r: f64, what: impl FnOnce() -> String) {
        self.checked += 1;
        let worst = self.worst.get_or_insert(0.0);
        if r.is_nan() || r > *worst {
            *worst = r;
        }
        if r.is_nan() || r > self.tolerance.unwrap_or(0.0) {
            self.fail(what);
        }
    }

    pub fn condition(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.fail(what);
        }
    }

    fn fail(&mut self, what: impl FnOnce() -> String) {
        self.failures += 1;
        if self.first.is_none() {
            self.first = Some(what());
        }
    }

    pub fn checked(&self) -> usize {
        self.checked
    }

    pub fn failures(&self) -> usize {
        self.failures
    }

    pub fn worst(&self) -> Option<f64> {
        self.worst
    }

    /// Description of the first failure, if any.
    pub fn first_failure(&self) -> Option<&str> {
        self.first.as_deref()
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

enum Outcome {
    Done(Tally),
    Skip(String),
}

fn run(name: &str, module: &str, body: impl FnOnce() -> Result<Outcome>) -> CheckResult {
    let base = |status, detail: String| CheckResult {
        name: name.into(),
        module: module.into(),
        status,
        checked: 0,
        failures: 0,
        worst: None,
        tolerance: None,
        detail,
    };
    match body() {
        Err(e) => CheckResult { failures: 1, ..base(Status::Fail, format!("error: {e}")) },
        Ok(Outcome::Skip(why)) => base(Status::Skip, why),
        Ok(Outcome::Done(t)) => {
            let status = if t.failures == 0 { Status::Pass } else { Status::Fail };
            let detail = match (t.first, t.note) {
                (Some(f), Some(n)) => format!("{f}; {n}"),
                (Some(f), None) => f,
                (None, Some(n)) => n,
                (None, None) => String::new(),
            };
            CheckResult {
                checked: t.checked,
                failures: t.failures,
                worst: t.worst,
                tolerance: t.tolerance,
                ..base(status, detail)
            }
        }
    }
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.0..1.0)).collect()
}

fn random_in_box(rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64]) -> Vec<f64> {
    lo.iter().zip(hi).map(|(a, b)| if a < b { rng.random_range(*a..*b) } else { *a }).collect()
}

fn weighted_spline(seq: &LevelSequence, basis: &HierBasis, depth: usize) -> MultiLevelSpline {
    let mut s = MultiLevelSpline::zeros(seq, depth);
    for (f, w) in &basis.weights {
        s.coeffs[f.level][f.index] = w.value;
    }
    s
}

fn is_dyadic(seq: &LevelSequence) -> bool {
    matches!(seq.rule(), RefinementRule::Dyadic)
        || (1..seq.depth()).all(|l| {
            seq.level(l).directions().iter().zip(seq.level(l - 1).directions()).all(|(f, c)| *f == c.dyadic_refine())
        })
}

/// Everything the checks share, built once.
pub struct Prepared {
    pub name: String,
    pub h: Hierarchy,
    pub enlarged: Option<Hierarchy>,
    pub basis: HierBasis,
    pub htilde: HierBasis,
    pub weights: WeightMap,
    pub omegas: OmegaDomains,
    pub qi: MultiscaleQuasiInterpolant,
}

impl Prepared {
    pub fn new(name: &str, h: Hierarchy, enlarged: Option<Hierarchy>, cfg: &SuiteConfig) -> Result<Self> {
        let (basis, _) = build_hierarchical_basis(&h)?;
        let htilde = build_htilde(&h)?;
        let weights = compute_weights(&h);
        let omegas = OmegaDomains::compute(&h);
        let qi = MultiscaleQuasiInterpolant::new(&h, cfg.quadrature)?;
        Ok(Self { name: name.into(), h, enlarged, basis, htilde, weights, omegas, qi })
    }

    pub fn from_fixture(fx: &Fixture, cfg: &SuiteConfig) -> Result<Self> {
        Self::new(&fx.name, fx.hierarchy.clone(), fx.enlarged.clone(), cfg)
    }

    pub fn counts(&self) -> Counts {
        Counts {
            b0: self.h.seq().level(0).num_functions(),
            h: self.basis.len(),
            htilde: self.htilde.len(),
            zero_weight: self.basis.active.iter().filter(|f| self.weights.get(**f).is_some_and(|w| w.exact.is_zero())).count(),
            deactivated: self.basis.deactivated.len(),
            active_cells: self.h.mesh().len(),
            omega_cells: self.omegas.omega.iter().map(|o| o.len()).collect(),
            omega_members: self.qi.levels().iter().map(|l| l.num_members()).collect(),
        }
    }
}

pub fn run_suite(fx: &Fixture, cfg: &SuiteConfig) -> Result<SuiteReport> {
    let prep = Prepared::from_fixture(fx, cfg)?;
    Ok(run_prepared(&prep, cfg))
}

pub fn run_prepared(p: &Prepared, cfg: &SuiteConfig) -> SuiteReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();
    checks.extend(tensor_checks(p, cfg, &mut rng));
    checks.extend(hierarchy_checks(p, cfg, &mut rng));
    checks.extend(operator_checks(p, cfg, &mut rng));
    let seq = p.h.seq();
    SuiteReport {
        fixture: p.name.clone(),
        dim: seq.dim(),
        degrees: seq.degrees(),
        depth: p.h.depth(),
        admissibility: p.qi.admissibility(),
        counts: p.counts(),
        passed: checks.iter().all(|c| c.status != Status::Fail),
        checks,
    }
}

// ---------------------------------------------------------------- tensor

pub fn check_level_partition(p: &Prepared, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    run("level_partition_of_unity", "tensor", || {
        let seq = p.h.seq();
        let mut t = Tally::residuals(1e-12);
        for l in 0..seq.depth() {
            let level = seq.level(l);
            let ones = vec![1.0; level.num_functions()];
            for _ in 0..cfg.points {
                let x = random_point(rng, seq.dim());
                let r = (level.eval_spline(&ones, &x) - 1.0).abs();
                t.residual(r, || format!("level {l} at {x:?}: residual {r:e}"));
            }
        }
        Ok(Outcome::Done(t))
    })
}

pub fn check_local_independence(p: &Prepared, rng: &mut ChaCha8Rng) -> CheckResult {
    run("local_linear_independence", "tensor", || {
        let seq = p.h.seq();
        let mut t = Tally::conditions();
        let mut worst_cond: f64 = 0.0;
        for level in seq.levels() {
            let cells: Vec<usize> = if level.num_cells() <= 25 {
                (0..level.num_cells()).collect()
            } else {
                (0..25).map(|_| rng.random_range(0..level.num_cells())).collect()
            };
            let counts: Vec<usize> = level.degrees().iter().map(|p| p + 1).collect();
            for c in cells {
                let (lo, hi) = level.cell_bounds(c);
                let (pts, _) = tensor_rule(&lo, &hi, &counts);
                let fns: Vec<usize> = BoxIter::new(&level.active_box(c)).map(|m| level.fn_linear(&m)).collect();
                let a = DMatrix::from_fn(pts.len(), fns.len(), |q, j| level.eval_fn(fns[j], &pts[q]));
                let sv = a.singular_values();
                let max = sv.max();
                let min = sv.min();
                let rank = sv.iter().filter(|&&s| s > 1e-12 * max).count();
                let cond = max / min;
                worst_cond = worst_cond.max(cond);
                t.condition(rank == fns.len() && rank == pts.len() && cond.is_finite(), || {
                    format!("level {} cell {:?}: rank {rank} of {}", level.level(), level.cell_multi(c), fns.len())
                });
            }
        }
        Ok(Outcome::Done(t.note(format!("worst collocation condition number {worst_cond:.3e}"))))
    })
}

/// The level sequence, extended by one level when the hierarchy has depth 1
/// so that two-scale relations can still be exercised.
fn two_level_sequence(h: &Hierarchy) -> Result<LevelSequence> {
    let mut seq = h.seq().clone();
    if seq.depth() < 2 {
        seq.extend()?;
    }
    Ok(seq)
}

pub fn check_two_scale(p: &Prepared, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    run("two_scale_pointwise", "tensor", || {
        let seq = two_level_sequence(&p.h)?;
        let mut t = Tally::residuals(1e-12);
        for _ in 0..cfg.parents {
            let l = rng.random_range(0..seq.depth() - 1);
            let parent = FnId::new(l, rng.random_range(0..seq.level(l).num_functions()));
            let children = seq.children(parent)?;
            let (lo, hi) = seq.level(l).support_bounds(parent.index);
            for _ in 0..cfg.parent_points {
                let x = random_in_box(rng, &lo, &hi);
                let sum: f64 = children.iter().map(|(c, _, v)| v * seq.level(c.level).eval_fn(c.index, &x)).sum();
                let r = (sum - seq.level(l).eval_fn(parent.index, &x)).abs();
                t.residual(r, || format!("{parent:?} at {x:?}: residual {r:e}"));
            }
        }
        Ok(Outcome::Done(t))
    })
}

pub fn check_child_conditions(p: &Prepared) -> CheckResult {
    run("children_match_endpoint_conditions", "univariate", || {
        let seq = two_level_sequence(&p.h)?;
        let mut t = Tally::conditions();
        for l in 0..seq.depth() - 1 {
            for i in 0..seq.dim() {
                let coarse = seq.level(l).dir(i);
                let fine = seq.level(l + 1).dir(i);
                let rel = seq.two_scale(l, i);
                for j in 0..coarse.num_basis() {
                    let by_insertion: BTreeSet<usize> = rel.children[j].iter().map(|c| c.0).collect();
                    let parent = coarse.local(j);
                    let by_conditions: BTreeSet<usize> =
                        (0..fine.num_basis()).filter(|&k| is_child_by_conditions(&parent, &fine.local(k))).collect();
                    t.condition(by_insertion == by_conditions, || {
                        format!("level {l} direction {i} function {j}: {by_insertion:?} vs {by_conditions:?}")
                    });
                }
            }
        }
        Ok(Outcome::Done(t))
    })
}

pub fn check_interior_child_count(p: &Prepared) -> CheckResult {
    run("interior_child_count", "tensor", || {
        let seq = two_level_sequence(&p.h)?;
        if !is_dyadic(&seq) {
            return Ok(Outcome::Skip("explicit refinement".into()));
        }
        let level = seq.level(0);
        let expected: usize = level.degrees().iter().map(|p| p + 2).product();
        let mut t = Tally::conditions();
        for f in 0..level.num_functions() {
            let interior = level.local_knots(f).iter().all(|lk| {
                lk.knots.windows(2).all(|w| w[0] < w[1]) && lk.knots[0] > 0.0 && *lk.knots.last().unwrap() < 1.0
            });
            if interior {
                let n = seq.children(FnId::new(0, f))?.len();
                t.condition(n == expected, || format!("function {:?} has {n} children", level.fn_multi(f)));
            }
        }
        if t.checked == 0 {
            return Ok(Outcome::Skip("no interior level-0 function".into()));
        }
        Ok(Outcome::Done(t.note(format!("expected {expected} children"))))
    })
}

fn tensor_checks(p: &Prepared, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    vec![
        check_level_partition(p, cfg, rng),
        check_local_independence(p, rng),
        check_two_scale(p, cfg, rng),
        check_child_conditions(p),
        check_interior_child_count(p),
    ]
}

// ------------------------------------------------------------- hierarchy

pub fn check_partition_of_unity(p: &Prepared, basis: &HierBasis, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> CheckResult {
    let name = match basis.flavor {
        hbspline::spline::Flavor::H => "partition_of_unity_h",
        hbspline::spline::Flavor::HTilde => "partition_of_unity_htilde",
    };
    run(name, "hierarchy", || {
        let seq = p.h.seq();
        let s = weighted_spline(seq, basis, p.h.depth());
        let mut t = Tally::residuals(1e-12);
        for _ in 0..cfg.points {
            let x = random_point(rng, seq.dim());
            let r = (s.eval(seq, &x) - 1.0).abs();
            t.residual(r, || format!("at {x:?}: residual {r:e}"));
        }
        if cfg.exact {
            let coeffs: BTreeMap<FnId, _> = basis.weights.iter().map(|(f, w)| (*f, w.exact.clone())).collect();
            let fine = expand_exact(&p.h, &coeffs)?;
            let bad = fine.iter().filter(|c| !c.is_one()).count();
            t.condition(bad == 0, || format!("{bad} deepest-level coefficients differ from 1 in exact arithmetic"));
            return Ok(Outcome::Done(t.note("exact rational expansion equals 1")));
        }
        Ok(Outcome::Done(t))
    })
}

fn hierarchy_checks(p: &Prepared, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let seq = p.h.seq();
    let mut out = Vec::new();

    out.push(run("basis_recursion_matches_closed_form", "hierarchy", || {
        let mut t = Tally::conditions();
        let (again, _) = build_hierarchical_basis(&p.h)?;
        t.condition(again.active == p.basis.active, || "rebuilt basis differs".into());
        Ok(Outcome::Done(t.note(format!("#H = {}", p.basis.len()))))
    }));

    out.push(run("mesh_tiles_domain", "hierarchy", || {
        let mesh = p.h.mesh();
        let mut t = Tally::residuals(1e-12);
        let vol = mesh.total_volume(seq);
        t.residual((vol - 1.0).abs(), || format!("active cells cover volume {vol}"));
        let active: BTreeSet<CellId> = mesh.cells().collect();
        for c in &active {
            for k in 0..c.level {
                let up = seq.cell_ancestor(*c, k);
                t.residual(if active.contains(&up) { 1.0 } else { 0.0 }, || format!("{c:?} overlaps active {up:?}"));
            }
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("mesh_round_trip", "hierarchy", || {
        let mut t = Tally::conditions();
        t.condition(mesh_round_trip(&p.h)?, || "rebuilt hierarchy differs".into());
        Ok(Outcome::Done(t))
    }));

    out.push(run("weights_in_unit_interval", "hierarchy", || {
        let mut t = Tally::conditions();
        for (f, w) in &p.weights.weights {
            t.condition(!w.exact.is_negative() && w.exact <= One::one(), || format!("{f:?} has weight {}", w.exact));
            t.condition(w.positive == w.exact.is_positive(), || format!("{f:?}: structural flag disagrees"));
        }
        Ok(Outcome::Done(t))
    }));

    out.push(check_partition_of_unity(p, &p.basis, cfg, rng));
    out.push(check_partition_of_unity(p, &p.htilde, cfg, rng));

    out.push(run("htilde_equals_positive_weights", "hierarchy", || {
        let mut t = Tally::conditions();
        let positive: BTreeSet<FnId> = p
            .basis
            .active
            .iter()
            .copied()
            .filter(|f| p.weights.get(*f).is_some_and(|w| w.exact.is_positive()))
            .collect();
        t.condition(positive == p.htilde.active, || {
            let diff: Vec<_> = positive.symmetric_difference(&p.htilde.active).take(5).collect();
            format!("sets differ, e.g. {diff:?}")
        });
        t.condition(p.htilde.active.is_subset(&p.basis.active), || "H̃ is not a subset of H".into());
        Ok(Outcome::Done(t.note(format!("#H = {}, #H̃ = {}", p.basis.len(), p.htilde.len()))))
    }));

    out.push(run("zero_weight_characterization", "hierarchy", || {
        let mut t = Tally::conditions();
        for (f, w) in &p.weights.weights {
            if f.level == 0 {
                continue;
            }
            let by_parents = zero_weight_by_characterization(&p.h, &p.weights, *f)?;
            t.condition(by_parents == w.exact.is_zero(), || format!("{f:?}: weight {} but characterization says {by_parents}", w.exact));
        }
        if t.checked == 0 {
            return Ok(Outcome::Skip("no refined functions".into()));
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("zero_weight_parents_active", "hierarchy", || {
        let mut t = Tally::conditions();
        for f in p.basis.on_level(1) {
            if p.weights.get(f).is_some_and(|w| w.exact.is_zero()) {
                let parents = seq.parents(f)?;
                t.condition(parents.iter().all(|q| p.basis.contains(*q)), || format!("{f:?} has a deactivated parent"));
            }
        }
        if t.checked == 0 {
            return Ok(Outcome::Skip("no zero-weight function on level 1".into()));
        }
        let n = t.checked;
        Ok(Outcome::Done(t.note(format!("{n} zero-weight level-1 functions"))))
    }));

    out.push(run("deactivated_expansion", "hierarchy", || {
        let mut t = Tally::residuals(1e-10);
        for basis in [&p.basis, &p.htilde] {
            let picks: Vec<FnId> = basis.deactivated.iter().copied().collect();
            for _ in 0..picks.len().min(30) {
                let f = picks[rng.random_range(0..picks.len())];
                let e = expand_deactivated(&p.h, basis, f)?;
                t.condition(e.coeffs.keys().all(|g| basis.contains(*g) && g.level > f.level), || {
                    format!("{f:?} expands onto inactive or coarser functions")
                });
                let s = e.to_multilevel(seq);
                let (lo, hi) = seq.level(f.level).support_bounds(f.index);
                for _ in 0..20 {
                    let x = random_in_box(rng, &lo, &hi);
                    let r = (s.eval(seq, &x) - p.h.eval_fn(f, &x)).abs();
                    t.residual(r, || format!("{f:?} at {x:?}: residual {r:e}"));
                }
            }
        }
        if t.checked == 0 {
            return Ok(Outcome::Skip("nothing deactivated".into()));
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("enlargement_monotone", "hierarchy", || {
        let Some(big) = &p.enlarged else {
            return Ok(Outcome::Skip("fixture has no enlargement".into()));
        };
        Ok(Outcome::Done(enlargement_tally(&p.h, big, &p.weights, &p.htilde, rng, 20)?))
    }));

    out
}

/// `a* ≥ a` wherever both are defined, `Ω_ℓ ⊂ Ω*_ℓ`, and every `β ∈ H̃`
/// re-expressed over `H̃*` pointwise.
pub fn enlargement_tally(
    h: &Hierarchy,
    big: &Hierarchy,
    weights: &WeightMap,
    htilde: &HierBasis,
    rng: &mut ChaCha8Rng,
    points: usize,
) -> Result<Tally> {
    let mut t = Tally::residuals(1e-10);
    for (k, d) in h.subdomains().domains().iter().enumerate() {
        let bigger = &big.subdomains().domains()[k];
        t.condition(d.cells.is_subset(&bigger.cells), || format!("Ω_{} is not contained in Ω*_{}", k + 1, k + 1));
    }
    let big_weights = compute_weights(big);
    for (f, w) in &weights.weights {
        if let Some(bw) = big_weights.get(*f) {
            t.condition(bw.exact >= w.exact, || format!("{f:?}: a* = {} < a = {}", bw.exact, w.exact));
        }
    }
    let big_tilde = build_htilde(big)?;
    let seq = big.seq();
    for &f in &htilde.active {
        let e = represent(big, &big_tilde, f)
            .map_err(|e| Error::InternalInvariant(format!("{f:?} is not representable over H̃*: {e}")))?;
        let s = e.to_multilevel(seq);
        let (lo, hi) = seq.level(f.level).support_bounds(f.index);
        for _ in 0..points {
            let x = random_in_box(rng, &lo, &hi);
            let r = (s.eval(seq, &x) - seq.level(f.level).eval_fn(f.index, &x)).abs();
            t.residual(r, || format!("{f:?} at {x:?}: residual {r:e}"));
        }
    }
    Ok(t)
}

// ------------------------------------------------------------- operators

fn random_in_cells(h: &Hierarchy, cells: &[CellId], rng: &mut ChaCha8Rng) -> Vec<f64> {
    let c = cells[rng.random_range(0..cells.len())];
    let (lo, hi) = h.seq().level(c.level).cell_bounds(c.index);
    random_in_box(rng, &lo, &hi)
}

fn operator_checks(p: &Prepared, cfg: &SuiteConfig, rng: &mut ChaCha8Rng) -> Vec<CheckResult> {
    let seq = p.h.seq();
    let n = p.h.depth();
    let nested = p.qi.admissibility().omega_nested;
    let mut out = Vec::new();

    out.push(run("omega_zero_is_domain", "quasiinterp", || {
        let mut t = Tally::conditions();
        t.condition(p.omegas.level(0).len() == seq.level(0).num_cells(), || "ω_0 misses cells".into());
        Ok(Outcome::Done(t))
    }));

    out.push(run("admissibility_implication", "quasiinterp", || {
        let a = check_admissibility(&p.h, &p.omegas)?;
        let mut t = Tally::conditions();
        t.condition(!a.strictly_admissible || a.omega_nested, || "strictly admissible but not ω-nested".into());
        Ok(Outcome::Done(t.note(format!(
            "strictly admissible: {}, ω-nested: {}",
            a.strictly_admissible, a.omega_nested
        ))))
    }));

    out.push(run("mass_matrices", "quasiinterp", || {
        let mut t = Tally::residuals(1e-13);
        for lq in p.qi.levels() {
            let level = seq.level(lq.level());
            let counts: Vec<usize> = level.degrees().iter().map(|p| p + 3).collect();
            for proj in lq.projections() {
                let m = &proj.mass;
                t.condition(*m == m.transpose(), || format!("mass on {:?} not symmetric", proj.cell));
                t.condition(m.clone().cholesky().is_some(), || format!("mass on {:?} not positive definite", proj.cell));
                let (lo, hi) = level.cell_bounds(proj.cell.index);
                let (pts, w) = tensor_rule(&lo, &hi, &counts);
                let scale = m.amax();
                let mut worst: f64 = 0.0;
                for (i, &fi) in proj.local_fns.iter().enumerate() {
                    for (j, &fj) in proj.local_fns.iter().enumerate() {
                        let exact: f64 = pts.iter().zip(&w).map(|(x, w)| w * level.eval_fn(fi, x) * level.eval_fn(fj, x)).sum();
                        worst = worst.max((exact - m[(i, j)]).abs() / scale);
                    }
                }
                t.residual(worst, || format!("mass on {:?} off by {worst:e} relative", proj.cell));
            }
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("dual_basis", "quasiinterp", || {
        let mut t = Tally::residuals(1e-10);
        for lq in p.qi.levels() {
            let level = seq.level(lq.level());
            for i in lq.members() {
                let dual = lq.dual_functional(i).expect("member");
                let q = lq.chosen_cell(i).expect("member");
                for m in BoxIter::new(&level.active_box(q)) {
                    let j = level.fn_linear(&m);
                    if !lq.is_member(j) {
                        continue;
                    }
                    let v = dual.apply(&|x: &[f64]| level.eval_fn(j, x))?;
                    let r = (v - if i == j { 1.0 } else { 0.0 }).abs();
                    t.residual(r, || format!("level {}: λ_{i}(β_{j}) = {v}", lq.level()));
                }
            }
        }
        Ok(Outcome::Done(t.note("pairs not sharing the chosen cell vanish by support")))
    }));

    out.push(run("level_operator_reproduces_omega_splines", "quasiinterp", || {
        let mut t = Tally::residuals(1e-10);
        for lq in p.qi.levels() {
            let level = seq.level(lq.level());
            let mut c = vec![0.0; level.num_functions()];
            for i in lq.members() {
                c[i] = rng.random_range(-1.0..1.0);
            }
            let got = lq.coefficients(level.num_functions(), &|x: &[f64]| level.eval_spline(&c, x))?;
            for (i, (a, b)) in got.iter().zip(&c).enumerate() {
                let r = (a - b).abs();
                t.residual(r, || format!("level {} coefficient {i}: {a} vs {b}", lq.level()));
            }
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("level_operator_support", "quasiinterp", || {
        let mut t = Tally::residuals(0.0);
        for lq in p.qi.levels() {
            let l = lq.level();
            let level = seq.level(l);
            let omega = p.omegas.level(l);
            let f = |x: &[f64]| {
                let c = level.cell_linear(&level.locate(x));
                if omega.contains(c) { 0.0 } else { 1.0 + x[0] }
            };
            let got = lq.coefficients(level.num_functions(), &f)?;
            let worst = got.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            t.residual(worst, || format!("level {l}: P_ℓ f has coefficient {worst:e}"));
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("level_operator_local_reproduction", "quasiinterp", || {
        let mut t = Tally::residuals(1e-10);
        for lq in p.qi.levels() {
            let l = lq.level();
            let cells: Vec<CellId> = p.omegas.level(l).ids().collect();
            if cells.is_empty() {
                continue;
            }
            let level = seq.level(l);
            let c: Vec<f64> = (0..level.num_functions()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = |x: &[f64]| level.eval_spline(&c, x);
            let ps = lq.apply(seq, &s)?;
            for _ in 0..cfg.operator_points {
                let x = random_in_cells(&p.h, &cells, rng);
                let r = (ps.eval(seq, &x) - s(&x)).abs();
                t.residual(r, || format!("level {l} at {x:?}: residual {r:e}"));
            }
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("omega_functions_have_refined_parent", "quasiinterp", || {
        if !is_dyadic(seq) {
            return Ok(Outcome::Skip("explicit refinement".into()));
        }
        let mut t = Tally::conditions();
        for l in 0..n.saturating_sub(1) {
            for i in p.qi.level(l + 1).members() {
                let f = FnId::new(l + 1, i);
                let ok = seq.parents(f)?.into_iter().any(|q| p.h.support_in_next_domain(q));
                t.condition(ok, || format!("{f:?} has no parent with support in Ω_{}", l + 1));
            }
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("omega_members_in_htilde", "quasiinterp", || {
        if !nested {
            return Ok(Outcome::Skip("ω domains not nested".into()));
        }
        let mut t = Tally::conditions();
        for lq in p.qi.levels() {
            for i in lq.members() {
                let f = FnId::new(lq.level(), i);
                t.condition(p.htilde.active.contains(&f) || p.htilde.deactivated.contains(&f), || {
                    format!("{f:?} ∈ B_ℓ,ω_ℓ is not in H̃_ℓ")
                });
            }
        }
        Ok(Outcome::Done(t))
    }));

    if !nested {
        out.push(run("multiscale_refuses_without_nesting", "quasiinterp", || {
            let mut t = Tally::conditions();
            let refused = matches!(p.qi.apply_raw(seq, &|_: &[f64]| 1.0), Err(Error::Admissibility(_)));
            t.condition(refused, || "Π was applied on a non-nested hierarchy".into());
            Ok(Outcome::Done(t))
        }));
        return out;
    }

    let gaussian = TestFunction::Gaussian { dim: seq.dim() };
    let all_cells: Vec<CellId> = (0..seq.level(0).num_cells()).map(|c| CellId::new(0, c)).collect();

    out.push(run("multiscale_reproduces_initial_level", "quasiinterp", || {
        let mut t = Tally::residuals(1e-10);
        let level = seq.level(0);
        let c: Vec<f64> = (0..level.num_functions()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s = |x: &[f64]| level.eval_spline(&c, x);
        let pi = p.qi.apply_raw(seq, &s)?;
        for _ in 0..cfg.operator_points {
            let x = random_in_cells(&p.h, &all_cells, rng);
            let r = (pi.eval(seq, &x) - s(&x)).abs();
            t.residual(r, || format!("at {x:?}: residual {r:e}"));
        }
        let poly = TestFunction::TensorPolynomial { degrees: seq.degrees() };
        let pi = p.qi.apply_raw(seq, &poly)?;
        for _ in 0..cfg.operator_points {
            let x = random_in_cells(&p.h, &all_cells, rng);
            let r = (pi.eval(seq, &x) - poly.eval(&x)).abs();
            t.residual(r, || format!("polynomial at {x:?}: residual {r:e}"));
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("multiscale_over_htilde", "quasiinterp", || {
        let mut t = Tally::residuals(1e-10);
        let raw = p.qi.apply_raw(seq, &gaussian)?;
        let over = p.qi.apply(&p.h, &p.htilde, &gaussian)?;
        t.condition(over.coeffs.keys().all(|f| p.htilde.contains(*f)), || "coefficient outside H̃".into());
        let over = over.to_multilevel(seq);
        for _ in 0..cfg.operator_points {
            let x = random_in_cells(&p.h, &all_cells, rng);
            let r = (raw.eval(seq, &x) - over.eval(seq, &x)).abs();
            t.residual(r, || format!("at {x:?}: residual {r:e}"));
        }
        Ok(Outcome::Done(t))
    }));

    out.push(run("decomposition_and_stage_identities", "quasiinterp", || {
        let mut t = Tally::residuals(1e-10);
        let stages = p.qi.stages(seq, &gaussian)?;
        let pi = stages.last().expect("nonempty");
        for (l, stage) in stages.iter().enumerate() {
            let cells: Vec<CellId> = p.omegas.level(l).ids().collect();
            if cells.is_empty() {
                continue;
            }
            let dec = p.qi.decomposition(seq, &gaussian, l)?;
            let pl = p.qi.level(l).apply(seq, &gaussian)?;
            for _ in 0..cfg.operator_points {
                let x = random_in_cells(&p.h, &cells, rng);
                let v = pi.eval(seq, &x);
                let r1 = (v - dec.eval(seq, &x)).abs();
                t.residual(r1, || format!("decomposition on ω_{l} at {x:?}: residual {r1:e}"));
                let r2 = (stage.eval(seq, &x) - pl.eval(seq, &x)).abs();
                t.residual(r2, || format!("Π_ℓ vs P_ℓ on ω_{l} at {x:?}: residual {r2:e}"));
            }
        }
        Ok(Outcome::Done(t))
    }));

    out
}
