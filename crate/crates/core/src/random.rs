//! Randomized hierarchies and enlargements built from unions of boxes.

use std::ops::Range;

use rand::Rng;

use crate::error::Result;
use crate::hierarchy::{enlarge_hierarchy, nesting_closure, Hierarchy, SubdomainHierarchy};
use crate::tensor::{box_indices, CellSet, LevelSequence};

fn random_box<R: Rng + ?Sized>(rng: &mut R, shape: &[usize], max_frac: f64) -> Vec<Range<usize>> {
    shape
        .iter()
        .map(|&n| {
            let max_len = ((n as f64 * max_frac).ceil() as usize).clamp(1, n);
            let len = rng.random_range(1..=max_len);
            let start = rng.random_range(0..=n - len);
            start..start + len
        })
        .collect()
}

fn random_cells<R: Rng + ?Sized>(rng: &mut R, seq: &LevelSequence, level: usize, boxes: usize, max_frac: f64) -> CellSet {
    let shape = seq.level(level).cell_shape().to_vec();
    let mut set = CellSet::new(level);
    for _ in 0..boxes {
        let b = random_box(rng, &shape, max_frac);
        set.cells.extend(box_indices(&shape, &b));
    }
    set
}

/// A nested hierarchy of the given depth: each `Ω_{ℓ+1}` is a union of a few
/// random boxes of level-`ℓ` cells intersected with `Ω_ℓ`.
pub fn random_hierarchy<R: Rng + ?Sized>(rng: &mut R, seq: LevelSequence) -> Result<Hierarchy> {
    let depth = seq.depth();
    let mut domains: Vec<CellSet> = Vec::with_capacity(depth.saturating_sub(1));
    for k in 0..depth.saturating_sub(1) {
        let boxes = rng.random_range(1..=3);
        let mut set = random_cells(rng, &seq, k, boxes, 0.7);
        if let Some(prev) = domains.last() {
            set.cells.retain(|&c| prev.contains(seq.cell_parent(crate::tensor::CellId::new(k, c)).index));
        }
        domains.push(set);
    }
    let sub = SubdomainHierarchy::new(depth, domains)?;
    Hierarchy::new(seq, sub)
}

/// A random enlargement of `h`, possibly opening one extra level.
pub fn random_enlargement<R: Rng + ?Sized>(rng: &mut R, h: &Hierarchy) -> Result<Hierarchy> {
    let mut seq = h.seq().clone();
    let n = h.depth();
    let new_level = rng.random_bool(0.3);
    if new_level && seq.depth() < n + 1 {
        seq.extend()?;
    }
    let levels = if new_level { n } else { n - 1 };
    let mut sets: Vec<CellSet> = (0..levels)
        .map(|k| {
            let mut s = h.subdomains().domains().get(k).cloned().unwrap_or_else(|| CellSet::new(k));
            let boxes = rng.random_range(0..=2);
            s.cells.extend(random_cells(rng, &seq, k, boxes, 0.4).cells);
            s
        })
        .collect();
    if new_level && sets[n - 1].is_empty() {
        sets[n - 1].cells.insert(0);
    }
    nesting_closure(&seq, &mut sets);
    enlarge_hierarchy(h, &sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{build_level_sequence, RefinementRule};
    use crate::univariate::KnotVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_hierarchies_are_valid_and_enlarge() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let d = 1 + trial % 3;
            let init = (0..d).map(|_| KnotVector::uniform(2, 4).unwrap()).collect();
            let seq = build_level_sequence(init, 3, RefinementRule::Dyadic).unwrap();
            let h = random_hierarchy(&mut rng, seq).unwrap();
            let big = random_enlargement(&mut rng, &h).unwrap();
            assert!(big.depth() >= h.depth());
            for (k, d) in h.subdomains().domains().iter().enumerate() {
                assert!(d.cells.is_subset(&big.subdomains().domains()[k].cells));
            }
        }
    }
}
