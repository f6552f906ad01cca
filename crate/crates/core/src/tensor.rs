//! Tensor-product levels: multivariate B-splines, cell meshes, support
//! extensions and the Kronecker-product two-scale relation.
//!
//! Multi-indices are linearized with direction 0 varying fastest; the derived
//! ordering of [`FnId`] and [`CellId`] (level first, then linear index) is the
//! canonical ordering used throughout the crate.

use std::collections::BTreeSet;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::univariate::{Exact, KnotVector, LocalKnotVector, TwoScale};

/// A tensor-product B-spline: level plus linear multi-index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FnId {
    pub level: usize,
    pub index: usize,
}

/// A cell of a tensor-product mesh: level plus linear multi-index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellId {
    pub level: usize,
    pub index: usize,
}

impl FnId {
    pub fn new(level: usize, index: usize) -> Self {
        Self { level, index }
    }
}

impl CellId {
    pub fn new(level: usize, index: usize) -> Self {
        Self { level, index }
    }
}

/// Axis-aligned block of multi-indices, one half-open range per direction.
pub type IndexBox = Vec<Range<usize>>;

pub fn linear_index(shape: &[usize], multi: &[usize]) -> usize {
    multi.iter().zip(shape).rev().fold(0, |acc, (&m, &n)| acc * n + m)
}

pub fn multi_index(shape: &[usize], mut linear: usize) -> Vec<usize> {
    shape
        .iter()
        .map(|&n| {
            let m = linear % n;
            linear /= n;
            m
        })
        .collect()
}

/// Linear indices of all multi-indices in `block`, in increasing linear order.
pub fn box_indices<'a>(shape: &'a [usize], block: &'a [Range<usize>]) -> impl Iterator<Item = usize> + 'a {
    BoxIter::new(block).map(move |m| linear_index(shape, &m))
}

/// Odometer over the multi-indices of a box, direction 0 fastest.
pub struct BoxIter {
    block: IndexBox,
    current: Option<Vec<usize>>,
}

impl BoxIter {
    pub fn new(block: &[Range<usize>]) -> Self {
        let current = if block.iter().any(|r| r.is_empty()) {
            None
        } else {
            Some(block.iter().map(|r| r.start).collect())
        };
        Self { block: block.to_vec(), current }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let cur = self.current.as_mut().unwrap();
        let mut advanced = false;
        for (i, r) in self.block.iter().enumerate() {
            cur[i] += 1;
            if cur[i] < r.end {
                advanced = true;
                break;
            }
            cur[i] = r.start;
        }
        if !advanced {
            self.current = None;
        }
        Some(out)
    }
}

pub fn box_volume(block: &[Range<usize>]) -> usize {
    block.iter().map(|r| r.len()).product()
}

/// One tensor-product level `ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorLevel {
    level: usize,
    dirs: Vec<KnotVector>,
    fn_shape: Vec<usize>,
    cell_shape: Vec<usize>,
}

impl TensorLevel {
    pub fn new(level: usize, dirs: Vec<KnotVector>) -> Result<Self> {
        if dirs.is_empty() {
            return Err(Error::InvalidKnotVector("a level needs at least one direction".into()));
        }
        let fn_shape = dirs.iter().map(|k| k.num_basis()).collect();
        let cell_shape = dirs.iter().map(|k| k.num_cells()).collect();
        Ok(Self { level, dirs, fn_shape, cell_shape })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn directions(&self) -> &[KnotVector] {
        &self.dirs
    }

    pub fn dir(&self, i: usize) -> &KnotVector {
        &self.dirs[i]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.dirs.iter().map(|k| k.degree()).collect()
    }

    pub fn fn_shape(&self) -> &[usize] {
        &self.fn_shape
    }

    pub fn cell_shape(&self) -> &[usize] {
        &self.cell_shape
    }

    pub fn num_functions(&self) -> usize {
        self.fn_shape.iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.cell_shape.iter().product()
    }

    /// Number of B-splines nonvanishing on a cell, `Π(p_i + 1)`.
    pub fn local_dim(&self) -> usize {
        self.dirs.iter().map(|k| k.degree() + 1).product()
    }

    pub fn fn_multi(&self, index: usize) -> Vec<usize> {
        multi_index(&self.fn_shape, index)
    }

    pub fn fn_linear(&self, multi: &[usize]) -> usize {
        linear_index(&self.fn_shape, multi)
    }

    pub fn cell_multi(&self, index: usize) -> Vec<usize> {
        multi_index(&self.cell_shape, index)
    }

    pub fn cell_linear(&self, multi: &[usize]) -> usize {
        linear_index(&self.cell_shape, multi)
    }

    pub fn local_knots(&self, index: usize) -> Vec<LocalKnotVector> {
        self.fn_multi(index).iter().zip(&self.dirs).map(|(&j, k)| k.local(j)).collect()
    }

    /// Cells covered by the support of function `index`.
    pub fn support_box(&self, index: usize) -> IndexBox {
        self.fn_multi(index).iter().zip(&self.dirs).map(|(&j, k)| k.support_cells(j)).collect()
    }

    pub fn support_bounds(&self, index: usize) -> (Vec<f64>, Vec<f64>) {
        self.fn_multi(index)
            .iter()
            .zip(&self.dirs)
            .map(|(&j, k)| k.support(j))
            .unzip()
    }

    pub fn cell_bounds(&self, index: usize) -> (Vec<f64>, Vec<f64>) {
        self.cell_multi(index)
            .iter()
            .zip(&self.dirs)
            .map(|(&c, k)| k.cell_bounds(c))
            .unzip()
    }

    pub fn cell_volume(&self, index: usize) -> f64 {
        let (lo, hi) = self.cell_bounds(index);
        lo.iter().zip(&hi).map(|(a, b)| b - a).product()
    }

    /// Functions nonvanishing on cell `index`.
    pub fn active_box(&self, index: usize) -> IndexBox {
        self.cell_multi(index).iter().zip(&self.dirs).map(|(&c, k)| k.active_on_cell(c)).collect()
    }

    /// Support extension of a cell: union of the supports of the functions
    /// nonvanishing on it, as a box of cells.
    pub fn support_extension(&self, index: usize) -> IndexBox {
        self.cell_multi(index).iter().zip(&self.dirs).map(|(&c, k)| k.support_extension(c)).collect()
    }

    /// Cell containing `x` (right-continuous, closed at the upper boundary).
    pub fn locate(&self, x: &[f64]) -> Vec<usize> {
        x.iter().zip(&self.dirs).map(|(&xi, k)| k.find_cell(xi)).collect()
    }

    /// Value of function `index` at `x`.
    pub fn eval_fn(&self, index: usize, x: &[f64]) -> f64 {
        self.fn_multi(index)
            .iter()
            .zip(&self.dirs)
            .zip(x)
            .map(|((&j, k), &xi)| k.eval(j, xi))
            .product()
    }

    /// Per-direction values of the nonvanishing functions on cell `multi` at `x`.
    pub fn basis_on_cell(&self, multi: &[usize], x: &[f64]) -> Vec<Vec<f64>> {
        multi.iter().zip(&self.dirs).zip(x).map(|((&c, k), &xi)| k.basis_on_cell(c, xi)).collect()
    }

    /// Evaluates `Σ coeffs[i] β_i(x)` over this level's basis.
    pub fn eval_spline(&self, coeffs: &[f64], x: &[f64]) -> f64 {
        let cell = self.locate(x);
        let values = self.basis_on_cell(&cell, x);
        let block: IndexBox = cell.iter().zip(&self.dirs).map(|(&c, k)| k.active_on_cell(c)).collect();
        let mut sum = 0.0;
        for m in BoxIter::new(&block) {
            let w: f64 = m.iter().zip(&block).zip(&values).map(|((&j, r), v)| v[j - r.start]).product();
            if w != 0.0 {
                sum += coeffs[self.fn_linear(&m)] * w;
            }
        }
        sum
    }

    pub fn max_cell_lengths(&self) -> Vec<f64> {
        self.dirs.iter().map(|k| k.max_cell_length()).collect()
    }
}

/// A set of cells of one level.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CellSet {
    pub level: usize,
    pub cells: BTreeSet<usize>,
}

impl CellSet {
    pub fn new(level: usize) -> Self {
        Self { level, cells: BTreeSet::new() }
    }

    pub fn from_cells(level: usize, cells: impl IntoIterator<Item = usize>) -> Self {
        Self { level, cells: cells.into_iter().collect() }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.cells.contains(&index)
    }

    pub fn ids(&self) -> impl Iterator<Item = CellId> + '_ {
        self.cells.iter().map(move |&i| CellId::new(self.level, i))
    }

    pub fn union(&self, other: &CellSet) -> Result<CellSet> {
        if self.level != other.level {
            return Err(Error::LevelMismatch(format!(
                "cannot unite cells of levels {} and {}",
                self.level, other.level
            )));
        }
        Ok(CellSet { level: self.level, cells: self.cells.union(&other.cells).copied().collect() })
    }
}

/// How successive levels are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum RefinementRule {
    Dyadic,
    /// Knot vectors for levels `1, 2, …`, one vector per direction.
    Explicit(Vec<Vec<KnotVector>>),
}

/// Nested tensor-product levels `V_0 ⊂ V_1 ⊂ …` with their two-scale data.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSequence {
    levels: Vec<TensorLevel>,
    /// `two_scale[ℓ][i]`: relation between levels `ℓ` and `ℓ+1` in direction `i`.
    two_scale: Vec<Vec<TwoScale>>,
    /// `cell_parent[ℓ][i][c]`: level-`ℓ` cell of the level-`ℓ+1` cell `c` in direction `i`.
    cell_parent: Vec<Vec<Vec<usize>>>,
    rule: RefinementRule,
}

pub fn build_level_sequence(initial: Vec<KnotVector>, depth: usize, rule: RefinementRule) -> Result<LevelSequence> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    let mut seq = LevelSequence {
        levels: vec![TensorLevel::new(0, initial)?],
        two_scale: Vec::new(),
        cell_parent: Vec::new(),
        rule,
    };
    while seq.depth() < depth {
        seq.extend()?;
    }
    Ok(seq)
}

impl LevelSequence {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn dim(&self) -> usize {
        self.levels[0].dim()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.levels[0].degrees()
    }

    pub fn level(&self, l: usize) -> &TensorLevel {
        &self.levels[l]
    }

    pub fn levels(&self) -> &[TensorLevel] {
        &self.levels
    }

    pub fn rule(&self) -> &RefinementRule {
        &self.rule
    }

    pub fn two_scale(&self, l: usize, dir: usize) -> &TwoScale {
        &self.two_scale[l][dir]
    }

    /// Appends the next level. Explicit rules fall back to dyadic refinement
    /// once their list of knot vectors is exhausted.
    pub fn extend(&mut self) -> Result<()> {
        let l = self.depth();
        let last = &self.levels[l - 1];
        let next: Vec<KnotVector> = match &self.rule {
            RefinementRule::Explicit(list) if list.len() >= l => list[l - 1].clone(),
            _ => last.directions().iter().map(|k| k.dyadic_refine()).collect(),
        };
        if next.len() != last.dim() {
            return Err(Error::NestingViolation {
                coarse_level: l - 1,
                direction: next.len().min(last.dim()),
                reason: format!("expected {} directions, got {}", last.dim(), next.len()),
            });
        }
        let mut relations = Vec::with_capacity(next.len());
        let mut parents = Vec::with_capacity(next.len());
        for (i, (coarse, fine)) in last.directions().iter().zip(&next).enumerate() {
            if let Some((k, m, mf)) = coarse.refinement_defect(fine) {
                return Err(Error::NestingViolation {
                    coarse_level: l - 1,
                    direction: i,
                    reason: format!("knot {k} has multiplicity {m} at the coarse level but {mf} at the fine level"),
                });
            }
            relations.push(TwoScale::new(coarse, fine)?);
            parents.push(coarse.cell_parents(fine));
        }
        self.levels.push(TensorLevel::new(l, next)?);
        self.two_scale.push(relations);
        self.cell_parent.push(parents);
        Ok(())
    }

    /// Children of `parent` at the next level with coefficients (products of
    /// the univariate two-scale coefficients).
    pub fn children(&self, parent: FnId) -> Result<Vec<(FnId, Exact, f64)>> {
        let l = parent.level;
        if l + 1 >= self.depth() {
            return Err(Error::LevelMismatch(format!(
                "function of level {l} has no children in a sequence of depth {}",
                self.depth()
            )));
        }
        let multi = self.levels[l].fn_multi(parent.index);
        let per_dir: Vec<&Vec<(usize, Exact, f64)>> =
            multi.iter().enumerate().map(|(i, &j)| &self.two_scale[l][i].children[j]).collect();
        let block: IndexBox = per_dir.iter().map(|c| 0..c.len()).collect();
        let fine = &self.levels[l + 1];
        Ok(BoxIter::new(&block)
            .map(|pick| {
                let mut exact = Exact::from_integer(1.into());
                let mut value = 1.0;
                let mut child = Vec::with_capacity(pick.len());
                for (i, &k) in pick.iter().enumerate() {
                    let (j, c, v) = &per_dir[i][k];
                    child.push(*j);
                    exact *= c;
                    value *= v;
                }
                (FnId::new(l + 1, fine.fn_linear(&child)), exact, value)
            })
            .collect())
    }

    /// Parents of `child` at the previous level.
    pub fn parents(&self, child: FnId) -> Result<Vec<FnId>> {
        let l = child.level;
        if l == 0 || l >= self.depth() {
            return Err(Error::LevelMismatch(format!("function of level {l} has no parents")));
        }
        let multi = self.levels[l].fn_multi(child.index);
        let per_dir: Vec<&Vec<usize>> =
            multi.iter().enumerate().map(|(i, &j)| &self.two_scale[l - 1][i].parents[j]).collect();
        let block: IndexBox = per_dir.iter().map(|p| 0..p.len()).collect();
        let coarse = &self.levels[l - 1];
        Ok(BoxIter::new(&block)
            .map(|pick| {
                let m: Vec<usize> = pick.iter().enumerate().map(|(i, &k)| per_dir[i][k]).collect();
                FnId::new(l - 1, coarse.fn_linear(&m))
            })
            .collect())
    }

    /// Level-`ℓ-1` cell containing level-`ℓ` cell `cell`.
    pub fn cell_parent(&self, cell: CellId) -> CellId {
        let l = cell.level;
        let multi = self.levels[l].cell_multi(cell.index);
        let up: Vec<usize> = multi.iter().enumerate().map(|(i, &c)| self.cell_parent[l - 1][i][c]).collect();
        CellId::new(l - 1, self.levels[l - 1].cell_linear(&up))
    }

    /// Ancestor of `cell` at the coarser level `target`.
    pub fn cell_ancestor(&self, mut cell: CellId, target: usize) -> CellId {
        while cell.level > target {
            cell = self.cell_parent(cell);
        }
        cell
    }

    /// Level-`ℓ+1` cells inside level-`ℓ` cell `cell`, as a box.
    pub fn cell_children(&self, cell: CellId) -> IndexBox {
        let l = cell.level;
        let multi = self.levels[l].cell_multi(cell.index);
        multi
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let parents = &self.cell_parent[l][i];
                let lo = parents.partition_point(|&p| p < c);
                let hi = parents.partition_point(|&p| p <= c);
                lo..hi
            })
            .collect()
    }

    /// Finest-level descendants of `cell` at level `target >= cell.level`.
    pub fn cell_descendants(&self, cell: CellId, target: usize) -> Vec<CellId> {
        let mut current = vec![cell];
        for l in cell.level..target {
            let shape = self.levels[l + 1].cell_shape().to_vec();
            current = current
                .into_iter()
                .flat_map(|c| {
                    let block = self.cell_children(c);
                    box_indices(&shape, &block).map(|i| CellId::new(l + 1, i)).collect::<Vec<_>>()
                })
                .collect();
        }
        current
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_seq(d: usize, p: usize, intervals: usize, depth: usize) -> LevelSequence {
        let init = (0..d).map(|_| KnotVector::uniform(p, intervals).unwrap()).collect();
        build_level_sequence(init, depth, RefinementRule::Dyadic).unwrap()
    }

    #[test]
    fn linearization_is_direction_zero_fastest() {
        let shape = [3, 4];
        assert_eq!(linear_index(&shape, &[1, 0]), 1);
        assert_eq!(linear_index(&shape, &[0, 1]), 3);
        assert_eq!(multi_index(&shape, 7), vec![1, 2]);
        let block = vec![1..3, 2..4];
        let idx: Vec<usize> = box_indices(&shape, &block).collect();
        assert_eq!(idx, vec![7, 8, 10, 11]);
    }

    #[test]
    fn dyadic_counts() {
        let seq = uniform_seq(2, 2, 4, 3);
        let counts: Vec<usize> = seq.levels().iter().map(|l| l.cell_shape()[0]).collect();
        assert_eq!(counts, vec![4, 8, 16]);
        assert_eq!(seq.level(2).cell_shape(), &[16, 16]);
        assert_eq!(uniform_seq(2, 2, 4, 1).depth(), 1);
    }

    #[test]
    fn explicit_non_nested_is_rejected() {
        let init = vec![KnotVector::new(1, vec![0.0, 0.0, 0.5, 1.0, 1.0]).unwrap()];
        let bad = vec![vec![KnotVector::new(1, vec![0.0, 0.0, 0.25, 0.75, 1.0, 1.0]).unwrap()]];
        let err = build_level_sequence(init, 2, RefinementRule::Explicit(bad)).unwrap_err();
        assert!(matches!(err, Error::NestingViolation { coarse_level: 0, direction: 0, .. }), "{err}");
    }

    #[test]
    fn interior_children_are_outer_product() {
        let seq = uniform_seq(2, 2, 8, 2);
        let l0 = seq.level(0);
        let parent = FnId::new(0, l0.fn_linear(&[4, 4]));
        let kids = seq.children(parent).unwrap();
        assert_eq!(kids.len(), 16);
        let mask = [0.25, 0.75, 0.75, 0.25];
        for (k, (_, _, c)) in kids.iter().enumerate() {
            assert_eq!(*c, mask[k % 4] * mask[k / 4]);
        }
    }

    #[test]
    fn one_dimensional_children_match_univariate() {
        let seq = uniform_seq(1, 3, 5, 2);
        for j in 0..seq.level(0).num_functions() {
            let kids = seq.children(FnId::new(0, j)).unwrap();
            let uni = &seq.two_scale(0, 0).children[j];
            assert_eq!(kids.len(), uni.len());
            for (a, b) in kids.iter().zip(uni) {
                assert_eq!(a.0.index, b.0);
                assert_eq!(a.1, b.1);
            }
        }
    }

    #[test]
    fn children_supports_nest() {
        let seq = uniform_seq(2, 2, 4, 2);
        for j in 0..seq.level(0).num_functions() {
            let (plo, phi) = seq.level(0).support_bounds(j);
            for (c, _, _) in seq.children(FnId::new(0, j)).unwrap() {
                let (clo, chi) = seq.level(1).support_bounds(c.index);
                for i in 0..2 {
                    assert!(plo[i] <= clo[i] && chi[i] <= phi[i]);
                }
                assert!(seq.parents(c).unwrap().contains(&FnId::new(0, j)));
            }
        }
    }

    #[test]
    fn support_extension_examples() {
        let seq = uniform_seq(1, 2, 8, 1);
        assert_eq!(seq.level(0).support_extension(4), vec![2..7]);
        assert_eq!(seq.level(0).support_extension(0), vec![0..3]);
        let seq2 = uniform_seq(2, 2, 8, 1);
        let l = seq2.level(0);
        assert_eq!(l.support_extension(l.cell_linear(&[4, 0])), vec![2..7, 0..3]);
    }

    #[test]
    fn cell_hierarchy() {
        let seq = uniform_seq(2, 1, 2, 3);
        let c = CellId::new(2, seq.level(2).cell_linear(&[5, 2]));
        assert_eq!(seq.cell_parent(c), CellId::new(1, seq.level(1).cell_linear(&[2, 1])));
        assert_eq!(seq.cell_ancestor(c, 0), CellId::new(0, seq.level(0).cell_linear(&[1, 0])));
        assert_eq!(seq.cell_children(CellId::new(0, 3)), vec![2..4, 2..4]);
        assert_eq!(seq.cell_descendants(CellId::new(0, 0), 2).len(), 16);
    }

    #[test]
    fn spline_evaluation_matches_direct_sum() {
        let seq = uniform_seq(2, 2, 3, 1);
        let l = seq.level(0);
        let coeffs: Vec<f64> = (0..l.num_functions()).map(|i| (i as f64 * 0.37).sin()).collect();
        for &x in &[[0.1, 0.9], [0.5, 0.5], [1.0, 0.0], [0.33, 1.0]] {
            let direct: f64 = (0..l.num_functions()).map(|i| coeffs[i] * l.eval_fn(i, &x)).sum();
            assert!((direct - l.eval_spline(&coeffs, &x)).abs() < 1e-14);
        }
    }
}
