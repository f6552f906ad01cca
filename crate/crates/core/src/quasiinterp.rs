//! Local L²-projection dual functionals, per-level operators `P_ℓ` and the
//! multiscale quasi-interpolant `Π`.

use std::collections::BTreeMap;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{reexpress, HierBasis, Hierarchy};
use crate::quadrature::{sample_grid, tensor_rule, GaussLegendre};
use crate::spline::{Evaluate, HierSplineFunction, MultiLevelSpline};
use crate::tensor::{box_indices, BoxIter, CellId, CellSet, FnId, LevelSequence, TensorLevel};

/// `ω_ℓ`: level-`ℓ` cells whose support extension lies in `Ω_ℓ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaDomains {
    pub omega: Vec<CellSet>,
}

impl OmegaDomains {
    pub fn compute(h: &Hierarchy) -> Self {
        let omega = (0..h.depth())
            .map(|l| {
                let level = h.seq().level(l);
                let shape = level.cell_shape();
                CellSet::from_cells(
                    l,
                    (0..level.num_cells()).filter(|&c| {
                        box_indices(shape, &level.support_extension(c))
                            .all(|e| h.cell_in_own_domain(CellId::new(l, e)))
                    }),
                )
            })
            .collect();
        Self { omega }
    }

    pub fn level(&self, l: usize) -> &CellSet {
        &self.omega[l]
    }

    pub fn contains(&self, cell: CellId) -> bool {
        self.omega[cell.level].contains(cell.index)
    }

    /// First level `ℓ` with `ω_ℓ ⊄ ω_{ℓ-1}`, if any.
    pub fn nesting_failure(&self, seq: &LevelSequence) -> Option<(usize, CellId)> {
        (1..self.omega.len()).find_map(|l| {
            self.omega[l]
                .ids()
                .find(|&c| !self.omega[l - 1].contains(seq.cell_parent(c).index))
                .map(|c| (l, c))
        })
    }

    pub fn is_nested(&self, seq: &LevelSequence) -> bool {
        self.nesting_failure(seq).is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Admissibility {
    pub strictly_admissible: bool,
    pub omega_nested: bool,
}

/// Strict admissibility (`Ω_ℓ ⊂ ω_{ℓ-1}`) and ω-nesting. Strict admissibility
/// implies nesting; a violation of that implication is reported as an error.
pub fn check_admissibility(h: &Hierarchy, omegas: &OmegaDomains) -> Result<Admissibility> {
    let strictly_admissible = h
        .subdomains()
        .domains()
        .iter()
        .enumerate()
        .all(|(k, d)| d.cells.iter().all(|&c| omegas.omega[k].contains(c)));
    let omega_nested = omegas.is_nested(h.seq());
    if strictly_admissible && !omega_nested {
        return Err(Error::InternalInvariant("strictly admissible hierarchy with non-nested ω domains".into()));
    }
    Ok(Admissibility { strictly_admissible, omega_nested })
}

/// Quadrature settings: the mass matrix always uses `p_i+1` Gauss points per
/// direction; right-hand sides use `p_i+1+rhs_extra`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rhs_extra: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { rhs_extra: 1 }
    }
}

/// `L²(Q)` projection onto the polynomials on one cell, in the local B-spline
/// basis `B_Q`.
#[derive(Debug, Clone)]
pub struct LocalProjection {
    pub cell: CellId,
    /// Linear indices of `B_Q`, direction 0 fastest.
    pub local_fns: Vec<usize>,
    pub mass: DMatrix<f64>,
    pub points: Vec<Vec<f64>>,
    /// `M_Q^{-1} B W`: row `i` applied to `f(points)` gives entry `i` of `M_Q^{-1} F_Q(f)`.
    pub dual: DMatrix<f64>,
}

/// One direction of a local projection: the `(p+1)²` mass matrix, the right-hand
/// side nodes and `M^{-1} B W` for the univariate basis on the cell.
struct AxisProjection {
    mass: DMatrix<f64>,
    nodes: Vec<f64>,
    dual: DMatrix<f64>,
}

fn axis_projection(level: &TensorLevel, dir: usize, cell: usize, cfg: QuadratureConfig) -> Result<AxisProjection> {
    let kv = level.dir(dir);
    let p = kv.degree();
    let (a, b) = kv.cell_bounds(cell);
    let (mx, mw) = GaussLegendre::new(p + 1).on_interval(a, b);
    let mut mass = DMatrix::zeros(p + 1, p + 1);
    for (x, w) in mx.iter().zip(&mw) {
        let v = DVector::from_vec(kv.basis_on_cell(cell, *x));
        mass += (&v * v.transpose()) * *w;
    }
    let (nodes, weights) = GaussLegendre::new(p + 1 + cfg.rhs_extra).on_interval(a, b);
    let mut bw = DMatrix::zeros(p + 1, nodes.len());
    for (q, (x, w)) in nodes.iter().zip(&weights).enumerate() {
        for (i, v) in kv.basis_on_cell(cell, *x).into_iter().enumerate() {
            bw[(i, q)] = v * w;
        }
    }
    let chol = mass.clone().cholesky().ok_or_else(|| {
        Error::InternalInvariant(format!("local mass matrix on cell {cell} of direction {dir} is not positive definite"))
    })?;
    let dual = chol.solve(&bw);
    Ok(AxisProjection { mass, nodes, dual })
}

/// Kronecker product of per-direction matrices, direction 0 varying fastest.
fn kron_all(factors: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for f in factors {
        out = f.kronecker(&out);
    }
    out
}

impl LocalProjection {
    /// The cell quadrature and the local basis are both tensor products, so the
    /// projection factorizes and only univariate systems are solved.
    pub fn new(level: &TensorLevel, cell: usize, cfg: QuadratureConfig) -> Result<Self> {
        let multi = level.cell_multi(cell);
        let local_fns: Vec<usize> = BoxIter::new(&level.active_box(cell)).map(|m| level.fn_linear(&m)).collect();
        let axes = multi
            .iter()
            .enumerate()
            .map(|(i, &c)| axis_projection(level, i, c, cfg))
            .collect::<Result<Vec<_>>>()?;
        let mass = kron_all(&axes.iter().map(|a| &a.mass).collect::<Vec<_>>());
        let dual = kron_all(&axes.iter().map(|a| &a.dual).collect::<Vec<_>>());
        let counts: Vec<_> = axes.iter().map(|a| 0..a.nodes.len()).collect();
        let points = BoxIter::new(&counts).map(|m| m.iter().zip(&axes).map(|(&k, a)| a.nodes[k]).collect()).collect();
        Ok(Self { cell: CellId::new(level.level(), cell), local_fns, mass, points, dual })
    }

    /// Row of `B_Q` holding function `index`.
    pub fn local_row(&self, index: usize) -> Option<usize> {
        self.local_fns.iter().position(|&f| f == index)
    }

    fn sample<F: Evaluate + Sync + ?Sized>(&self, f: &F) -> Result<DVector<f64>> {
        let mut values = DVector::zeros(self.points.len());
        for (q, x) in self.points.iter().enumerate() {
            let v = f.eval(x);
            if !v.is_finite() {
                return Err(Error::Evaluation { point: x.clone(), value: v });
            }
            values[q] = v;
        }
        Ok(values)
    }

    /// Coefficients of `Π_Q f` in `B_Q`.
    pub fn project<F: Evaluate + Sync + ?Sized>(&self, f: &F) -> Result<DVector<f64>> {
        Ok(&self.dual * self.sample(f)?)
    }
}

/// `λ_β`, ready to apply to any evaluable function.
#[derive(Debug, Clone)]
pub struct DualFunctional {
    pub function: FnId,
    pub cell: CellId,
    pub points: Vec<Vec<f64>>,
    pub row: Vec<f64>,
}

impl DualFunctional {
    pub fn apply<F: Evaluate + ?Sized>(&self, f: &F) -> Result<f64> {
        let mut sum = 0.0;
        for (x, r) in self.points.iter().zip(&self.row) {
            let v = f.eval(x);
            if !v.is_finite() {
                return Err(Error::Evaluation { point: x.clone(), value: v });
            }
            sum += r * v;
        }
        Ok(sum)
    }
}

/// Dual functional of `function` built on `cell`; both of the given level.
pub fn local_dual_functional(
    level: &TensorLevel,
    function: usize,
    cell: usize,
    cfg: QuadratureConfig,
) -> Result<DualFunctional> {
    if function >= level.num_functions() || cell >= level.num_cells() {
        return Err(Error::InvalidAssignment(format!(
            "function {function} or cell {cell} out of range at level {}",
            level.level()
        )));
    }
    let proj = LocalProjection::new(level, cell, cfg)?;
    let i0 = proj.local_row(function).ok_or_else(|| {
        Error::InvalidAssignment(format!(
            "function {:?} vanishes on cell {:?}",
            level.fn_multi(function),
            level.cell_multi(cell)
        ))
    })?;
    Ok(DualFunctional {
        function: FnId::new(level.level(), function),
        cell: proj.cell,
        row: proj.dual.row(i0).iter().copied().collect(),
        points: proj.points,
    })
}

/// `P_ℓ f = Σ_{β ∈ B_{ℓ,ω_ℓ}} λ_β(f) β`.
#[derive(Debug, Clone)]
pub struct LevelQuasiInterpolant {
    level: usize,
    /// `Q_β` for every member, keyed by function index.
    chosen: BTreeMap<usize, usize>,
    projections: Vec<LocalProjection>,
    /// Per projection: members using it and their local rows.
    rows: Vec<Vec<(usize, usize)>>,
}

impl LevelQuasiInterpolant {
    /// Chooses `Q_β` as the cell of smallest linear index in `supp β ∩ ω_ℓ`.
    pub fn new(level: &TensorLevel, omega: &CellSet, cfg: QuadratureConfig) -> Result<Self> {
        let mut chosen = BTreeMap::new();
        for &c in &omega.cells {
            for m in BoxIter::new(&level.active_box(c)) {
                chosen.entry(level.fn_linear(&m)).or_insert(c);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&f, &c) in &chosen {
            groups.entry(c).or_default().push(f);
        }
        let built: Vec<(LocalProjection, Vec<(usize, usize)>)> = groups
            .into_par_iter()
            .map(|(c, members)| {
                let proj = LocalProjection::new(level, c, cfg)?;
                let rows = members
                    .into_iter()
                    .map(|f| (f, proj.local_row(f).expect("member acts on its chosen cell")))
                    .collect();
                Ok((proj, rows))
            })
            .collect::<Result<_>>()?;
        let (projections, rows) = built.into_iter().unzip();
        Ok(Self { level: level.level(), chosen, projections, rows })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// `B_{ℓ,ω_ℓ}` as function indices, ascending.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        self.chosen.keys().copied()
    }

    pub fn num_members(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_member(&self, index: usize) -> bool {
        self.chosen.contains_key(&index)
    }

    pub fn chosen_cell(&self, index: usize) -> Option<usize> {
        self.chosen.get(&index).copied()
    }

    pub fn projections(&self) -> &[LocalProjection] {
        &self.projections
    }

    pub fn dual_functional(&self, index: usize) -> Option<DualFunctional> {
        let cell = self.chosen_cell(index)?;
        let k = self.projections.iter().position(|p| p.cell.index == cell)?;
        let proj = &self.projections[k];
        let i0 = proj.local_row(index)?;
        Some(DualFunctional {
            function: FnId::new(self.level, index),
            cell: proj.cell,
            points: proj.points.clone(),
            row: proj.dual.row(i0).iter().copied().collect(),
        })
    }

    /// Coefficients of `P_ℓ f` over the whole level basis (zero off `B_{ℓ,ω_ℓ}`).
    pub fn coefficients<F: Evaluate + Sync + ?Sized>(&self, num_functions: usize, f: &F) -> Result<Vec<f64>> {
        let parts: Vec<Vec<(usize, f64)>> = self
            .projections
            .par_iter()
            .zip(&self.rows)
            .map(|(proj, rows)| {
                let coeffs = proj.project(f)?;
                Ok(rows.iter().map(|&(fi, r)| (fi, coeffs[r])).collect())
            })
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; num_functions];
        for (fi, v) in parts.into_iter().flatten() {
            out[fi] = v;
        }
        Ok(out)
    }

    /// `P_ℓ f` as a multi-level spline with only level `ℓ` populated.
    pub fn apply<F: Evaluate + Sync + ?Sized>(&self, seq: &LevelSequence, f: &F) -> Result<MultiLevelSpline> {
        let mut out = MultiLevelSpline { coeffs: vec![Vec::new(); self.level + 1] };
        out.coeffs[self.level] = self.coefficients(seq.level(self.level).num_functions(), f)?;
        Ok(out)
    }
}

/// `Π_0 = P_0`, `Π_{ℓ+1} = Π_ℓ + P_{ℓ+1}(id − Π_ℓ)`.
#[derive(Debug, Clone)]
pub struct MultiscaleQuasiInterpolant {
    levels: Vec<LevelQuasiInterpolant>,
    omegas: OmegaDomains,
    admissibility: Admissibility,
}

impl MultiscaleQuasiInterpolant {
    pub fn new(h: &Hierarchy, cfg: QuadratureConfig) -> Result<Self> {
        let omegas = OmegaDomains::compute(h);
        let admissibility = check_admissibility(h, &omegas)?;
        let levels = (0..h.depth())
            .map(|l| LevelQuasiInterpolant::new(h.seq().level(l), omegas.level(l), cfg))
            .collect::<Result<_>>()?;
        Ok(Self { levels, omegas, admissibility })
    }

    pub fn levels(&self) -> &[LevelQuasiInterpolant] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &LevelQuasiInterpolant {
        &self.levels[l]
    }

    pub fn omegas(&self) -> &OmegaDomains {
        &self.omegas
    }

    pub fn admissibility(&self) -> Admissibility {
        self.admissibility
    }

    fn require_nesting(&self, seq: &LevelSequence) -> Result<()> {
        match self.omegas.nesting_failure(seq) {
            None => Ok(()),
            Some((l, c)) => Err(Error::Admissibility(format!(
                "ω domains are not nested: cell {:?} of ω_{l} lies outside ω_{}",
                seq.level(l).cell_multi(c.index),
                l - 1
            ))),
        }
    }

    /// `Π_0 f, …, Π_{n-1} f`.
    pub fn stages<F: Evaluate + Sync + ?Sized>(&self, seq: &LevelSequence, f: &F) -> Result<Vec<MultiLevelSpline>> {
        self.require_nesting(seq)?;
        let mut out: Vec<MultiLevelSpline> = Vec::with_capacity(self.levels.len());
        for lq in &self.levels {
            let next = match out.last() {
                None => lq.apply(seq, f)?,
                Some(prev) => {
                    let residual = |x: &[f64]| f.eval(x) - prev.eval(seq, x);
                    let mut s = prev.clone();
                    s.add_assign(&lq.apply(seq, &residual)?);
                    s
                }
            };
            out.push(next);
        }
        Ok(out)
    }

    /// `Π f` as per-level coefficients, straight from the recursion.
    pub fn apply_raw<F: Evaluate + Sync + ?Sized>(&self, seq: &LevelSequence, f: &F) -> Result<MultiLevelSpline> {
        Ok(self.stages(seq, f)?.pop().expect("depth is at least one"))
    }

    /// `Π f` over the active functions of `H̃`.
    pub fn apply<F: Evaluate + Sync + ?Sized>(
        &self,
        h: &Hierarchy,
        htilde: &HierBasis,
        f: &F,
    ) -> Result<HierSplineFunction> {
        reexpress(h, htilde, &self.apply_raw(h.seq(), f)?)
    }

    /// `P_ℓ f + Σ_{k>ℓ} P_k(f − P_{k−1} f)`, which equals `Π f` on `ω_ℓ`
    /// under ω-nesting.
    pub fn decomposition<F: Evaluate + Sync + ?Sized>(
        &self,
        seq: &LevelSequence,
        f: &F,
        l: usize,
    ) -> Result<MultiLevelSpline> {
        self.require_nesting(seq)?;
        let mut out = self.levels[l].apply(seq, f)?;
        let mut prev = out.clone();
        for k in l + 1..self.levels.len() {
            let residual = |x: &[f64]| f.eval(x) - prev.eval(seq, x);
            out.add_assign(&self.levels[k].apply(seq, &residual)?);
            prev = self.levels[k].apply(seq, f)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(Norm::L1),
            "2" | "l2" => Ok(Norm::L2),
            "inf" | "linf" | "∞" => Ok(Norm::Linf),
            other => Err(Error::Precondition(format!("unknown norm '{other}', expected 1, 2 or inf"))),
        }
    }
}

impl std::fmt::Display for Norm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::Linf => "inf",
        })
    }
}

/// Error-norm settings: Gauss points per direction on each leaf cell, and
/// sample points per direction for the maximum norm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormConfig {
    pub gauss_points: Option<usize>,
    pub samples_per_dir: Option<usize>,
}

/// Default L∞ sample points per direction and cell.
pub fn default_samples(dim: usize) -> usize {
    match dim {
        1 => 200,
        2 => 16,
        _ => 8,
    }
}

/// Level-`ℓ` cells of `Ω_ℓ` (with `Ω_0 = Ω`) given as cells of level `ℓ-1`
/// for `ℓ ≥ 1`, matching the stored subdomains.
pub fn domain_region(h: &Hierarchy, l: usize) -> Vec<CellId> {
    match h.subdomains().domain(l) {
        Some(d) => d.ids().collect(),
        None if l == 0 => (0..h.seq().level(0).num_cells()).map(|c| CellId::new(0, c)).collect(),
        None => Vec::new(),
    }
}

/// Splits region cells until no finer level has breakpoints inside them.
fn leaf_cells(h: &Hierarchy, region: &[CellId]) -> Vec<CellId> {
    let mut out = Vec::new();
    let mut stack: Vec<CellId> = region.to_vec();
    while let Some(c) = stack.pop() {
        if c.level + 1 >= h.depth() || !h.cell_in_domain(c, c.level + 1) {
            out.push(c);
        } else {
            let shape = h.seq().level(c.level + 1).cell_shape().to_vec();
            stack.extend(box_indices(&shape, &h.seq().cell_children(c)).map(|i| CellId::new(c.level + 1, i)));
        }
    }
    out
}

/// `‖f − s‖_{L^q(region)}`, where `s` is piecewise polynomial on the
/// hierarchical mesh of `h`.
pub fn error_norm<F, S>(h: &Hierarchy, f: &F, s: &S, q: Norm, region: &[CellId], cfg: NormConfig) -> Result<f64>
where
    F: Evaluate + Sync + ?Sized,
    S: Evaluate + Sync + ?Sized,
{
    let seq = h.seq();
    let leaves = leaf_cells(h, region);
    let diff = |x: &[f64]| -> Result<f64> {
        let v = f.eval(x);
        if !v.is_finite() {
            return Err(Error::Evaluation { point: x.to_vec(), value: v });
        }
        Ok(v - s.eval(x))
    };
    let pmax = seq.degrees().into_iter().max().unwrap_or(1);
    let gauss = cfg.gauss_points.unwrap_or(pmax + 3);
    let samples = cfg.samples_per_dir.unwrap_or_else(|| default_samples(h.dim()));
    let parts: Vec<f64> = leaves
        .par_iter()
        .map(|c| {
            let (lo, hi) = seq.level(c.level).cell_bounds(c.index);
            match q {
                Norm::Linf => sample_grid(&lo, &hi, samples)
                    .iter()
                    .try_fold(0.0f64, |m, x| Ok(m.max(diff(x)?.abs()))),
                Norm::L1 | Norm::L2 => {
                    let (pts, w) = tensor_rule(&lo, &hi, &vec![gauss; lo.len()]);
                    pts.iter().zip(&w).try_fold(0.0, |acc, (x, w)| {
                        let e = diff(x)?.abs();
                        Ok(acc + w * if q == Norm::L1 { e } else { e * e })
                    })
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(match q {
        Norm::Linf => parts.into_iter().fold(0.0, f64::max),
        Norm::L1 => parts.into_iter().sum(),
        Norm::L2 => parts.into_iter().sum::<f64>().sqrt(),
    })
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::hierarchy::{build_htilde, SubdomainHierarchy};
    use crate::tensor::{build_level_sequence, RefinementRule};
    use crate::univariate::KnotVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hierarchy(d: usize, p: usize, n0: usize, boxes: &[Vec<std::ops::Range<usize>>]) -> Hierarchy {
        let init = (0..d).map(|_| KnotVector::uniform(p, n0).unwrap()).collect();
        let seq = build_level_sequence(init, boxes.len() + 1, RefinementRule::Dyadic).unwrap();
        let domains = boxes
            .iter()
            .enumerate()
            .map(|(k, b)| CellSet::from_cells(k, box_indices(seq.level(k).cell_shape(), b).collect::<Vec<_>>()))
            .collect();
        Hierarchy::new(seq, SubdomainHierarchy::new(boxes.len() + 1, domains).unwrap()).unwrap()
    }

    fn random_point_in(h: &Hierarchy, cell: CellId, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let (lo, hi) = h.seq().level(cell.level).cell_bounds(cell.index);
        lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect()
    }

    #[test]
    fn omega_zero_is_everything_and_single_cell_gives_empty() {
        let h = hierarchy(2, 2, 4, &[vec![1..2, 1..2]]);
        let om = OmegaDomains::compute(&h);
        assert_eq!(om.level(0).len(), 16);
        assert!(om.level(1).is_empty());
    }

    #[test]
    fn global_refinement_is_strictly_admissible() {
        let h = hierarchy(2, 2, 3, &[vec![0..3, 0..3], vec![0..6, 0..6]]);
        let om = OmegaDomains::compute(&h);
        let a = check_admissibility(&h, &om).unwrap();
        assert!(a.strictly_admissible && a.omega_nested);
    }

    #[test]
    fn equal_subdomains_break_nesting() {
        let h = hierarchy(1, 2, 8, &[vec![0..4], vec![0..8]]);
        let qi = MultiscaleQuasiInterpolant::new(&h, QuadratureConfig::default()).unwrap();
        assert_eq!(qi.admissibility(), Admissibility { strictly_admissible: false, omega_nested: false });
        let err = qi.apply_raw(h.seq(), &|x: &[f64]| x[0]).unwrap_err();
        assert!(matches!(err, Error::Admissibility(_)));
    }

    #[test]
    fn duals_are_biorthogonal() {
        let h = hierarchy(2, 2, 4, &[vec![0..3, 0..2]]);
        let qi = MultiscaleQuasiInterpolant::new(&h, QuadratureConfig::default()).unwrap();
        for lq in qi.levels() {
            let level = h.seq().level(lq.level());
            let members: Vec<usize> = lq.members().collect();
            assert!(!members.is_empty());
            for &i in &members {
                let dual = lq.dual_functional(i).unwrap();
                for &j in &members {
                    let v = dual.apply(&|x: &[f64]| level.eval_fn(j, x)).unwrap();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-10, "λ_{i}(β_{j}) = {v}");
                }
                assert!((dual.apply(&|_: &[f64]| 1.0).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn vanishing_function_cannot_be_assigned() {
        let level = TensorLevel::new(0, vec![KnotVector::uniform(1, 4).unwrap()]).unwrap();
        let err = local_dual_functional(&level, 4, 0, QuadratureConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidAssignment(_)));
        assert!(local_dual_functional(&level, 1, 0, QuadratureConfig::default()).is_ok());
    }

    #[test]
    fn level_operator_reproduces_local_splines() {
        let h = hierarchy(1, 3, 8, &[vec![0..5]]);
        let qi = MultiscaleQuasiInterpolant::new(&h, QuadratureConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let seq = h.seq();
        let lq = qi.level(1);
        let level = seq.level(1);
        let mut c = vec![0.0; level.num_functions()];
        for i in lq.members() {
            c[i] = rng.random_range(-1.0..1.0);
        }
        let p = lq.apply(seq, &|x: &[f64]| level.eval_spline(&c, x)).unwrap();
        for (a, b) in p.coeffs[1].iter().zip(&c) {
            assert!((a - b).abs() < 1e-10);
        }

        // A full level-1 spline is reproduced on ω_1 only.
        let full: Vec<f64> = (0..level.num_functions()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let p = lq.apply(seq, &|x: &[f64]| level.eval_spline(&full, x)).unwrap();
        for c in qi.omegas().level(1).ids() {
            let x = random_point_in(&h, c, &mut rng);
            assert!((p.eval(seq, &x) - level.eval_spline(&full, &x)).abs() < 1e-10);
        }
        let outside = [0.95];
        assert!((p.eval(seq, &outside) - level.eval_spline(&full, &outside)).abs() > 1e-6);

        // Functions vanishing on ω_1 are annihilated.
        let edge = h.seq().level(1).cell_bounds(qi.omegas().level(1).cells.last().copied().unwrap()).1[0];
        let p = lq.apply(seq, &|x: &[f64]| (x[0] - edge).max(0.0).powi(2)).unwrap();
        assert!(p.coeffs[1].iter().all(|&v| v.abs() < 1e-14));
    }

    #[test]
    fn multiscale_identities() {
        let h = hierarchy(2, 2, 4, &[vec![0..3, 0..3], vec![0..4, 0..4]]);
        let seq = h.seq();
        let qi = MultiscaleQuasiInterpolant::new(&h, QuadratureConfig::default()).unwrap();
        assert!(qi.admissibility().omega_nested);
        let mut rng = ChaCha8Rng::seed_from_u64(11);

        let c0: Vec<f64> = (0..seq.level(0).num_functions()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let s0 = |x: &[f64]| seq.level(0).eval_spline(&c0, x);
        let pi = qi.apply_raw(seq, &s0).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..2).map(|_| rng.random_range(0.0..1.0)).collect();
            assert!((pi.eval(seq, &x) - s0(&x)).abs() < 1e-10);
        }

        let f = |x: &[f64]| (3.0 * x[0]).sin() * (1.0 + x[1] * x[1]).ln() + x[0] * x[1];
        let stages = qi.stages(seq, &f).unwrap();
        let pi = stages.last().unwrap();
        let htilde = build_htilde(&h).unwrap();
        let over_htilde = reexpress(&h, &htilde, pi).unwrap();
        assert!(over_htilde.coeffs.keys().all(|g| htilde.contains(*g)));
        for (l, stage) in stages.iter().enumerate() {
            let dec = qi.decomposition(seq, &f, l).unwrap();
            let pl = qi.level(l).apply(seq, &f).unwrap();
            let cells: Vec<CellId> = qi.omegas().level(l).ids().collect();
            for _ in 0..200 {
                let c = cells[rng.random_range(0..cells.len())];
                let x = random_point_in(&h, c, &mut rng);
                let v = pi.eval(seq, &x);
                assert!((v - dec.eval(seq, &x)).abs() < 1e-10);
                assert!((stage.eval(seq, &x) - pl.eval(seq, &x)).abs() < 1e-10);
                assert!((v - over_htilde.eval(seq, &x)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn norms_of_simple_differences() {
        let h = hierarchy(1, 1, 4, &[vec![0..2]]);
        let all = domain_region(&h, 0);
        let cfg = NormConfig::default();
        let one = |_: &[f64]| 1.0;
        let zero = |_: &[f64]| 0.0;
        assert!((error_norm(&h, &one, &zero, Norm::L2, &all, cfg).unwrap() - 1.0).abs() < 1e-14);
        assert!((error_norm(&h, &one, &zero, Norm::L1, &all, cfg).unwrap() - 1.0).abs() < 1e-14);
        let s = |x: &[f64]| h.seq().level(0).eval_spline(&[0.0, 1.0, 2.0, 0.5, 0.0], x);
        assert!(error_norm(&h, &s, &s, Norm::Linf, &all, cfg).unwrap() < 1e-12);

        // Hat of level 1 centred at 1/8 minus nothing: maximum 1 at the peak,
        // L2 norm sqrt(2h/3) with h = 1/8.
        let hat = |x: &[f64]| h.seq().level(1).eval_fn(1, x);
        let peak = error_norm(&h, &hat, &zero, Norm::Linf, &domain_region(&h, 1), cfg).unwrap();
        assert!((peak - 1.0).abs() < 1e-12);
        let l2 = error_norm(&h, &hat, &zero, Norm::L2, &all, cfg).unwrap();
        assert!((l2 - (2.0 / 24.0f64).sqrt()).abs() < 1e-14);
        assert!("inf".parse::<Norm>().unwrap() == Norm::Linf && "x".parse::<Norm>().is_err());
    }
}
