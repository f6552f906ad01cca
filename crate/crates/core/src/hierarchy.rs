//! Hierarchies of subdomains, the hierarchical mesh, the classical basis `H`,
//! partition-of-unity weights, the children-only basis `H̃`, and enlargement.
//!
//! All regions are closed sets. `Ω_ℓ` (for `ℓ ≥ 1`) is stored as a set of
//! level-`ℓ-1` cells; a cell of a finer level lies in `Ω_ℓ` iff its level-`ℓ-1`
//! ancestor does, and a support lies in `Ω_ℓ` iff every cell of it does.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::spline::{Flavor, HierSplineFunction, MultiLevelSpline};
use crate::tensor::{box_indices, CellId, CellSet, FnId, LevelSequence};
use crate::univariate::{exact_to_f64, Exact};

/// `Ω_0 ⊃ Ω_1 ⊃ … ⊃ Ω_n = ∅`, with `Ω_0 = Ω` and `Ω_n = ∅` implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubdomainHierarchy {
    depth: usize,
    /// `domains[k]` is `Ω_{k+1}` as cells of level `k`.
    domains: Vec<CellSet>,
}

impl SubdomainHierarchy {
    pub fn new(depth: usize, domains: Vec<CellSet>) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Precondition("hierarchy depth must be at least 1".into()));
        }
        if domains.len() != depth - 1 {
            return Err(Error::DepthMismatch { hierarchy: depth, levels: domains.len() + 1 });
        }
        for (k, d) in domains.iter().enumerate() {
            if d.level != k {
                return Err(Error::LevelMismatch(format!(
                    "Ω_{} must be given as cells of level {k}, got level {}",
                    k + 1,
                    d.level
                )));
            }
        }
        Ok(Self { depth, domains })
    }

    /// Depth-1 hierarchy: no refinement.
    pub fn trivial() -> Self {
        Self { depth: 1, domains: Vec::new() }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// `Ω_ℓ` for `1 ≤ ℓ ≤ n-1`, as level-`ℓ-1` cells.
    pub fn domain(&self, l: usize) -> Option<&CellSet> {
        l.checked_sub(1).and_then(|k| self.domains.get(k))
    }

    pub fn domains(&self) -> &[CellSet] {
        &self.domains
    }
}

/// Partition-of-unity weight of one function.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    pub exact: Exact,
    pub value: f64,
    /// Structural positivity: the function has a chain of deactivated
    /// ancestors reaching level 0. Never derived from a floating-point test.
    pub positive: bool,
}

/// Weights `a_β` for every `β ∈ B_ℓ` with `supp β ⊂ Ω_ℓ`, all levels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightMap {
    pub weights: BTreeMap<FnId, Weight>,
}

impl WeightMap {
    pub fn get(&self, id: FnId) -> Option<&Weight> {
        self.weights.get(&id)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// A set of active functions together with the functions deactivated while
/// building it.
#[derive(Debug, Clone, PartialEq)]
pub struct HierBasis {
    pub flavor: Flavor,
    pub active: BTreeSet<FnId>,
    pub deactivated: BTreeSet<FnId>,
    pub weights: BTreeMap<FnId, Weight>,
}

impl HierBasis {
    pub fn len(&self) -> usize {
        self.active.len()
    }

    pub fn is_empty(&self) -> bool {
        self.active.is_empty()
    }

    pub fn contains(&self, id: FnId) -> bool {
        self.active.contains(&id)
    }

    pub fn on_level(&self, l: usize) -> impl Iterator<Item = FnId> + '_ {
        self.active.iter().copied().filter(move |f| f.level == l)
    }
}

/// Active cells per level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchicalMesh {
    pub active: Vec<CellSet>,
}

impl HierarchicalMesh {
    pub fn cells(&self) -> impl Iterator<Item = CellId> + '_ {
        self.active.iter().flat_map(|s| s.ids())
    }

    pub fn len(&self) -> usize {
        self.active.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total_volume(&self, seq: &LevelSequence) -> f64 {
        self.cells().map(|c| seq.level(c.level).cell_volume(c.index)).sum()
    }

    /// Rebuilds the subdomains from the active cells alone.
    pub fn to_subdomains(&self, seq: &LevelSequence) -> Result<SubdomainHierarchy> {
        let depth = self.active.len();
        if depth == 0 || seq.depth() < depth {
            return Err(Error::DepthMismatch { hierarchy: depth, levels: seq.depth() });
        }
        let mut domains = Vec::with_capacity(depth.saturating_sub(1));
        let mut inside: Vec<bool> = vec![true; seq.level(0).num_cells()];
        for l in 0..depth - 1 {
            let next: CellSet = CellSet::from_cells(
                l,
                (0..seq.level(l).num_cells()).filter(|&c| inside[c] && !self.active[l].contains(c)),
            );
            inside = (0..seq.level(l + 1).num_cells())
                .map(|c| next.contains(seq.cell_parent(CellId::new(l + 1, c)).index))
                .collect();
            domains.push(next);
        }
        SubdomainHierarchy::new(depth, domains)
    }
}

/// A validated subdomain hierarchy bound to its level sequence.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    seq: LevelSequence,
    sub: SubdomainHierarchy,
    /// `in_omega[ℓ][c]`: level-`ℓ` cell `c` lies in `Ω_ℓ`.
    in_omega: Vec<Vec<bool>>,
    /// `in_next[ℓ][c]`: level-`ℓ` cell `c` lies in `Ω_{ℓ+1}`.
    in_next: Vec<Vec<bool>>,
}

impl Hierarchy {
    pub fn new(seq: LevelSequence, sub: SubdomainHierarchy) -> Result<Self> {
        let n = sub.depth();
        if seq.depth() != n {
            return Err(Error::DepthMismatch { hierarchy: n, levels: seq.depth() });
        }
        for (k, d) in sub.domains().iter().enumerate() {
            let count = seq.level(k).num_cells();
            if let Some(&bad) = d.cells.iter().find(|&&c| c >= count) {
                return Err(Error::InvalidCell(format!(
                    "Ω_{} lists cell {bad} but level {k} has only {count} cells",
                    k + 1
                )));
            }
        }
        for l in 2..n {
            let inner = &sub.domains()[l - 1];
            let outer = &sub.domains()[l - 2];
            for c in inner.ids() {
                let up = seq.cell_parent(c);
                if !outer.contains(up.index) {
                    return Err(Error::HierarchyNesting(format!(
                        "cell {:?} of Ω_{l} (level {}) is not inside Ω_{}",
                        seq.level(l - 1).cell_multi(c.index),
                        l - 1,
                        l - 1
                    )));
                }
            }
        }
        let mut in_omega = Vec::with_capacity(n);
        let mut in_next = Vec::with_capacity(n);
        for l in 0..n {
            let cells = seq.level(l).num_cells();
            in_omega.push(match sub.domain(l) {
                None => vec![true; cells],
                Some(d) => (0..cells).map(|c| d.contains(seq.cell_parent(CellId::new(l, c)).index)).collect(),
            });
            in_next.push(match sub.domain(l + 1) {
                None => vec![false; cells],
                Some(d) => (0..cells).map(|c| d.contains(c)).collect(),
            });
        }
        Ok(Self { seq, sub, in_omega, in_next })
    }

    pub fn seq(&self) -> &LevelSequence {
        &self.seq
    }

    pub fn subdomains(&self) -> &SubdomainHierarchy {
        &self.sub
    }

    pub fn depth(&self) -> usize {
        self.sub.depth()
    }

    pub fn dim(&self) -> usize {
        self.seq.dim()
    }

    /// Level-`ℓ` cell lies in `Ω_ℓ`.
    pub fn cell_in_own_domain(&self, cell: CellId) -> bool {
        self.in_omega[cell.level][cell.index]
    }

    /// Level-`ℓ` cell lies in `Ω_{ℓ+1}`.
    pub fn cell_in_next_domain(&self, cell: CellId) -> bool {
        self.in_next[cell.level][cell.index]
    }

    /// Whether `cell` (of any level) lies in `Ω_m`.
    pub fn cell_in_domain(&self, cell: CellId, m: usize) -> bool {
        if m == 0 {
            return true;
        }
        let n = self.depth();
        if m >= n {
            return false;
        }
        let set = &self.sub.domains()[m - 1];
        if cell.level + 1 >= m {
            set.contains(self.seq.cell_ancestor(cell, m - 1).index)
        } else {
            self.seq.cell_descendants(cell, m - 1).iter().all(|c| set.contains(c.index))
        }
    }

    /// `supp β ⊂ Ω_m` for arbitrary `m`.
    pub fn support_in_domain(&self, f: FnId, m: usize) -> bool {
        if m == f.level {
            return self.support_in_own_domain(f);
        }
        if m == f.level + 1 {
            return self.support_in_next_domain(f);
        }
        let level = self.seq.level(f.level);
        box_indices(level.cell_shape(), &level.support_box(f.index))
            .all(|c| self.cell_in_domain(CellId::new(f.level, c), m))
    }

    /// `supp β ⊂ Ω_ℓ` for `β ∈ B_ℓ`.
    pub fn support_in_own_domain(&self, f: FnId) -> bool {
        let level = self.seq.level(f.level);
        box_indices(level.cell_shape(), &level.support_box(f.index)).all(|c| self.in_omega[f.level][c])
    }

    /// `supp β ⊂ Ω_{ℓ+1}` for `β ∈ B_ℓ`.
    pub fn support_in_next_domain(&self, f: FnId) -> bool {
        let level = self.seq.level(f.level);
        box_indices(level.cell_shape(), &level.support_box(f.index)).all(|c| self.in_next[f.level][c])
    }

    /// Functions of level `ℓ` whose support lies in `Ω_m`.
    fn functions_in(&self, l: usize, m: usize) -> Vec<FnId> {
        (0..self.seq.level(l).num_functions())
            .map(|i| FnId::new(l, i))
            .filter(|&f| self.support_in_domain(f, m))
            .collect()
    }

    pub fn eval_fn(&self, f: FnId, x: &[f64]) -> f64 {
        self.seq.level(f.level).eval_fn(f.index, x)
    }

    pub fn mesh(&self) -> HierarchicalMesh {
        let active = (0..self.depth())
            .map(|l| {
                CellSet::from_cells(
                    l,
                    (0..self.seq.level(l).num_cells()).filter(|&c| self.in_omega[l][c] && !self.in_next[l][c]),
                )
            })
            .collect();
        HierarchicalMesh { active }
    }

    /// Active cell containing `x` (right-continuous, like point evaluation).
    pub fn locate_active(&self, x: &[f64]) -> CellId {
        for l in (0..self.depth()).rev() {
            let lv = self.seq.level(l);
            let c = lv.cell_linear(&lv.locate(x));
            if self.in_omega[l][c] {
                return CellId::new(l, c);
            }
        }
        unreachable!("Ω_0 covers the domain")
    }
}

/// Classical hierarchical basis and its mesh.
///
/// The basis is computed by the level recursion and by the closed-form
/// selection; the two must agree.
pub fn build_hierarchical_basis(h: &Hierarchy) -> Result<(HierBasis, HierarchicalMesh)> {
    let n = h.depth();
    let seq = h.seq();

    let mut recursive: BTreeSet<FnId> = (0..seq.level(0).num_functions()).map(|i| FnId::new(0, i)).collect();
    let mut deactivated = BTreeSet::new();
    for l in 0..n.saturating_sub(1) {
        let (gone, kept): (BTreeSet<FnId>, BTreeSet<FnId>) =
            recursive.iter().partition(|&&f| h.support_in_domain(f, l + 1));
        deactivated.extend(gone);
        recursive = kept;
        recursive.extend(h.functions_in(l + 1, l + 1));
    }

    let closed: BTreeSet<FnId> = (0..n)
        .flat_map(|l| {
            (0..seq.level(l).num_functions())
                .map(move |i| FnId::new(l, i))
                .filter(|&f| h.support_in_own_domain(f) && !h.support_in_next_domain(f))
        })
        .collect();

    if closed != recursive {
        let diff: Vec<_> = closed.symmetric_difference(&recursive).take(5).collect();
        return Err(Error::InternalInvariant(format!(
            "recursive and closed-form hierarchical bases differ, e.g. {diff:?}"
        )));
    }

    let weights = compute_weights(h);
    let member_weights = recursive.iter().map(|f| (*f, weights.weights[f].clone())).collect();
    Ok((HierBasis { flavor: Flavor::H, active: recursive, deactivated, weights: member_weights }, h.mesh()))
}

/// Partition-of-unity weights: `a = 1` on level 0 and
/// `a_{β'} = Σ_{supp β ⊂ Ω_{ℓ+1}} a_β c_{β'}(β)` for `supp β' ⊂ Ω_{ℓ+1}`.
pub fn compute_weights(h: &Hierarchy) -> WeightMap {
    let seq = h.seq();
    let mut weights = BTreeMap::new();
    for i in 0..seq.level(0).num_functions() {
        weights.insert(FnId::new(0, i), Weight { exact: Exact::one(), value: 1.0, positive: true });
    }
    for l in 0..h.depth().saturating_sub(1) {
        let mut next: BTreeMap<FnId, (Exact, bool)> =
            h.functions_in(l + 1, l + 1).into_iter().map(|f| (f, (Exact::zero(), false))).collect();
        for parent in h.functions_in(l, l + 1) {
            let w = &weights[&parent];
            let (pa, pos): (Exact, bool) = (w.exact.clone(), w.positive);
            for (child, c, _) in seq.children(parent).expect("level below the deepest") {
                let entry = next.get_mut(&child).expect("children of a function in Ω_{ℓ+1} lie in Ω_{ℓ+1}");
                entry.0 += &pa * c;
                entry.1 |= pos;
            }
        }
        for (f, (a, positive)) in next {
            let value = exact_to_f64(&a);
            weights.insert(f, Weight { exact: a, value, positive });
        }
    }
    WeightMap { weights }
}

/// Zero-weight test through the parent characterization: `a_β = 0` iff every
/// parent with positive weight and support in `Ω_ℓ` has support outside `Ω_{ℓ+1}`.
pub fn zero_weight_by_characterization(h: &Hierarchy, weights: &WeightMap, f: FnId) -> Result<bool> {
    if f.level == 0 || f.level >= h.depth() || !h.support_in_own_domain(f) {
        return Err(Error::Precondition(format!(
            "{f:?} must be a function of level ≥ 1 with support in Ω_{}",
            f.level
        )));
    }
    for parent in h.seq().parents(f)? {
        let eligible = h.support_in_own_domain(parent);
        let positive = eligible && weights.get(parent).is_some_and(|w| w.positive);
        if positive && h.support_in_next_domain(parent) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Children-only basis: deactivated members are replaced by their children.
pub fn build_htilde(h: &Hierarchy) -> Result<HierBasis> {
    let seq = h.seq();
    let mut current: BTreeSet<FnId> = (0..seq.level(0).num_functions()).map(|i| FnId::new(0, i)).collect();
    let mut deactivated = BTreeSet::new();
    for l in 0..h.depth().saturating_sub(1) {
        let (gone, kept): (BTreeSet<FnId>, BTreeSet<FnId>) =
            current.iter().partition(|&&f| h.support_in_domain(f, l + 1));
        current = kept;
        for f in &gone {
            current.extend(seq.children(*f)?.into_iter().map(|(c, _, _)| c));
        }
        deactivated.extend(gone);
    }
    let weights = compute_weights(h);
    let mut member_weights = BTreeMap::new();
    for f in &current {
        let w = weights.get(*f).ok_or_else(|| {
            Error::InternalInvariant(format!("{f:?} is in H̃ but has no weight (support outside Ω_ℓ)"))
        })?;
        member_weights.insert(*f, w.clone());
    }
    Ok(HierBasis { flavor: Flavor::HTilde, active: current, deactivated, weights: member_weights })
}

/// Writes a deactivated function as a combination of active functions of
/// finer levels by repeated two-scale expansion.
pub fn expand_deactivated(h: &Hierarchy, basis: &HierBasis, f: FnId) -> Result<HierSplineFunction> {
    if !basis.deactivated.contains(&f) {
        return Err(Error::Precondition(format!("{f:?} is not deactivated in the {:?} basis", basis.flavor)));
    }
    let mut out = HierSplineFunction::new(basis.flavor);
    let mut stack: Vec<(FnId, f64)> = vec![(f, 1.0)];
    while let Some((g, scale)) = stack.pop() {
        if g.level + 1 >= h.depth() {
            return Err(Error::InternalInvariant(format!(
                "expansion reached the deepest level with inactive {g:?}"
            )));
        }
        for (child, _, c) in h.seq().children(g)? {
            if basis.active.contains(&child) {
                out.add(child, scale * c);
            } else if basis.deactivated.contains(&child) {
                stack.push((child, scale * c));
            } else {
                return Err(Error::InternalInvariant(format!(
                    "child {child:?} of {g:?} is neither active nor deactivated"
                )));
            }
        }
    }
    Ok(out)
}

/// Expresses any active or deactivated function over the active functions.
pub fn represent(h: &Hierarchy, basis: &HierBasis, f: FnId) -> Result<HierSplineFunction> {
    if basis.active.contains(&f) {
        let mut out = HierSplineFunction::new(basis.flavor);
        out.add(f, 1.0);
        Ok(out)
    } else {
        expand_deactivated(h, basis, f)
    }
}

/// Rewrites a multi-level spline over the active functions of `basis`,
/// pushing coefficients of deactivated functions down to their children.
///
/// Fails if a nonzero coefficient sits on a function that never entered the
/// basis construction.
pub fn reexpress(h: &Hierarchy, basis: &HierBasis, s: &MultiLevelSpline) -> Result<HierSplineFunction> {
    let seq = h.seq();
    let mut out = HierSplineFunction::new(basis.flavor);
    let mut carry: BTreeMap<FnId, f64> = BTreeMap::new();
    for l in 0..h.depth() {
        let mut pending: BTreeMap<FnId, f64> = std::mem::take(&mut carry);
        if let Some(c) = s.coeffs.get(l) {
            for (i, &v) in c.iter().enumerate() {
                if v != 0.0 {
                    *pending.entry(FnId::new(l, i)).or_insert(0.0) += v;
                }
            }
        }
        for (f, v) in pending {
            if basis.active.contains(&f) {
                out.add(f, v);
            } else if basis.deactivated.contains(&f) {
                for (child, _, c) in seq.children(f)? {
                    *carry.entry(child).or_insert(0.0) += v * c;
                }
            } else {
                return Err(Error::InternalInvariant(format!(
                    "coefficient {v} on {f:?}, which is outside the {:?} construction",
                    basis.flavor
                )));
            }
        }
    }
    if let Some((f, _)) = carry.into_iter().next() {
        return Err(Error::InternalInvariant(format!("expansion ran past the deepest level at {f:?}")));
    }
    Ok(out)
}

/// Coefficients of `Σ c_β β` over the deepest level, in exact arithmetic.
pub fn expand_exact(h: &Hierarchy, coeffs: &BTreeMap<FnId, Exact>) -> Result<Vec<Exact>> {
    let seq = h.seq();
    let mut current: Vec<Exact> = vec![Exact::zero(); seq.level(0).num_functions()];
    for l in 0..h.depth() {
        for (f, c) in coeffs.range(FnId::new(l, 0)..FnId::new(l + 1, 0)) {
            current[f.index] += c;
        }
        if l + 1 == h.depth() {
            break;
        }
        let mut next = vec![Exact::zero(); seq.level(l + 1).num_functions()];
        for (i, c) in current.iter().enumerate().filter(|(_, c)| !c.is_zero()) {
            for (child, coef, _) in seq.children(FnId::new(l, i))? {
                next[child.index] += c * coef;
            }
        }
        current = next;
    }
    Ok(current)
}

/// Adds the coarser-level cells needed to keep `Ω_{ℓ+1} ⊂ Ω_ℓ`.
///
/// `sets[k]` holds `Ω_{k+1}` as level-`k` cells.
pub fn nesting_closure(seq: &LevelSequence, sets: &mut [CellSet]) {
    for k in (1..sets.len()).rev() {
        let parents: Vec<usize> = sets[k].ids().map(|c| seq.cell_parent(c).index).collect();
        sets[k - 1].cells.extend(parents);
    }
}

/// Enlarges the hierarchy: `Ω*_ℓ = Ω_ℓ ∪ additions[ℓ-1]`.
///
/// `additions[k]` holds level-`k` cells; it may have one more entry than the
/// hierarchy has subdomains, which opens a new deepest level (extending the
/// level sequence by its refinement rule when needed).
pub fn enlarge_hierarchy(h: &Hierarchy, additions: &[CellSet]) -> Result<Hierarchy> {
    let n = h.depth();
    if additions.len() > n {
        return Err(Error::Precondition(format!(
            "an enlargement of a depth-{n} hierarchy adds at most {n} subdomains, got {}",
            additions.len()
        )));
    }
    let mut sets: Vec<CellSet> = h.subdomains().domains().to_vec();
    for (k, add) in additions.iter().enumerate() {
        if add.level != k {
            return Err(Error::LevelMismatch(format!(
                "additions to Ω_{} must be level-{k} cells, got level {}",
                k + 1,
                add.level
            )));
        }
        if k < sets.len() {
            sets[k] = sets[k].union(add)?;
        } else if !add.is_empty() {
            sets.push(add.clone());
        }
    }
    let depth = sets.len() + 1;
    let mut seq = h.seq().clone();
    while seq.depth() < depth {
        seq.extend()?;
    }
    let sub = SubdomainHierarchy::new(depth, sets)?;
    Hierarchy::new(seq, sub)
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::tensor::{build_level_sequence, RefinementRule};
    use crate::univariate::KnotVector;

    fn seq(d: usize, p: usize, intervals: usize, depth: usize) -> LevelSequence {
        let init = (0..d).map(|_| KnotVector::uniform(p, intervals).unwrap()).collect();
        build_level_sequence(init, depth, RefinementRule::Dyadic).unwrap()
    }

    fn block(s: &LevelSequence, level: usize, ranges: &[std::ops::Range<usize>]) -> CellSet {
        let shape = s.level(level).cell_shape().to_vec();
        CellSet::from_cells(level, box_indices(&shape, ranges).collect::<Vec<_>>())
    }

    #[test]
    fn depth_one_is_tensor_basis() {
        let s = seq(2, 2, 3, 1);
        let h = Hierarchy::new(s.clone(), SubdomainHierarchy::trivial()).unwrap();
        let (basis, mesh) = build_hierarchical_basis(&h).unwrap();
        assert_eq!(basis.len(), s.level(0).num_functions());
        assert_eq!(mesh.len(), s.level(0).num_cells());
        assert_eq!(build_htilde(&h).unwrap().active, basis.active);
    }

    #[test]
    fn single_refined_cell_deactivates_nothing() {
        let s = seq(2, 2, 4, 2);
        let sub = SubdomainHierarchy::new(2, vec![block(&s, 0, &[1..2, 1..2])]).unwrap();
        let h = Hierarchy::new(s.clone(), sub).unwrap();
        let (basis, _) = build_hierarchical_basis(&h).unwrap();
        assert!(basis.deactivated.is_empty());
        assert_eq!(basis.len(), s.level(0).num_functions());
    }

    #[test]
    fn full_refinement_gives_unit_weights() {
        let s = seq(2, 2, 3, 2);
        let sub = SubdomainHierarchy::new(2, vec![block(&s, 0, &[0..3, 0..3])]).unwrap();
        let h = Hierarchy::new(s.clone(), sub).unwrap();
        let w = compute_weights(&h);
        for i in 0..s.level(1).num_functions() {
            assert_eq!(w.get(FnId::new(1, i)).unwrap().exact, Exact::one());
        }
        let (basis, _) = build_hierarchical_basis(&h).unwrap();
        assert!(basis.active.iter().all(|f| f.level == 1));
    }

    #[test]
    fn nesting_violation_is_reported() {
        let s = seq(1, 1, 4, 3);
        let sub = SubdomainHierarchy::new(3, vec![block(&s, 0, &[0..1]), block(&s, 1, &[6..7])]).unwrap();
        let err = Hierarchy::new(s, sub).unwrap_err();
        assert!(matches!(err, Error::HierarchyNesting(_)));
        assert!(err.to_string().starts_with("hierarchy nesting"));
    }

    #[test]
    fn narrow_cubic_block_has_zero_weights() {
        let s = seq(2, 3, 8, 2);
        let sub = SubdomainHierarchy::new(2, vec![block(&s, 0, &[2..5, 2..5])]).unwrap();
        let h = Hierarchy::new(s, sub).unwrap();
        let (basis, _) = build_hierarchical_basis(&h).unwrap();
        let tilde = build_htilde(&h).unwrap();
        let weights = compute_weights(&h);
        let zero: Vec<FnId> = basis.active.difference(&tilde.active).copied().collect();
        assert_eq!(zero.len(), 9);
        for f in zero {
            assert!(weights.get(f).unwrap().exact.is_zero());
            assert!(zero_weight_by_characterization(&h, &weights, f).unwrap());
        }
    }

    #[test]
    fn exact_partition_of_unity() {
        let s = seq(2, 2, 4, 3);
        let sub = SubdomainHierarchy::new(3, vec![block(&s, 0, &[0..3, 0..2]), block(&s, 1, &[0..3, 1..4])]).unwrap();
        let h = Hierarchy::new(s, sub).unwrap();
        for basis in [build_hierarchical_basis(&h).unwrap().0, build_htilde(&h).unwrap()] {
            let coeffs = basis.weights.iter().map(|(f, w)| (*f, w.exact.clone())).collect();
            assert!(expand_exact(&h, &coeffs).unwrap().iter().all(|c| c.is_one()));
        }
    }

    #[test]
    fn mesh_round_trip() {
        let s = seq(2, 2, 4, 3);
        let sub = SubdomainHierarchy::new(3, vec![block(&s, 0, &[0..3, 0..2]), block(&s, 1, &[0..3, 1..4])]).unwrap();
        let h = Hierarchy::new(s.clone(), sub.clone()).unwrap();
        let rebuilt = h.mesh().to_subdomains(&s).unwrap();
        assert_eq!(rebuilt, sub);
        assert!((h.mesh().total_volume(&s) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn expansion_of_deactivated_function() {
        let s = seq(1, 2, 4, 3);
        let sub = SubdomainHierarchy::new(3, vec![block(&s, 0, &[0..4]), block(&s, 1, &[0..5])]).unwrap();
        let h = Hierarchy::new(s, sub).unwrap();
        for basis in [build_hierarchical_basis(&h).unwrap().0, build_htilde(&h).unwrap()] {
            for &f in &basis.deactivated {
                let e = expand_deactivated(&h, &basis, f).unwrap();
                assert!(e.coeffs.keys().all(|g| basis.contains(*g)));
                for i in 0..=200 {
                    let x = [i as f64 / 200.0];
                    assert!((e.eval(h.seq(), &x) - h.eval_fn(f, &x)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn enlargement_with_new_level() {
        let s = seq(1, 1, 4, 2);
        let sub = SubdomainHierarchy::new(2, vec![block(&s, 0, &[0..2])]).unwrap();
        let h = Hierarchy::new(s, sub).unwrap();
        let bigger = enlarge_hierarchy(&h, &[CellSet::new(0), CellSet::from_cells(1, [0, 1])]).unwrap();
        assert_eq!(bigger.depth(), 3);
        assert_eq!(bigger.seq().depth(), 3);
        let same = enlarge_hierarchy(&h, &[]).unwrap();
        assert_eq!(same.subdomains(), h.subdomains());
        assert!(enlarge_hierarchy(&h, &[CellSet::new(0), CellSet::from_cells(1, [6])]).is_err());
    }
}
