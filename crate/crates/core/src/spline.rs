//! Spline functions spread over several levels.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::tensor::{FnId, LevelSequence};

/// Which hierarchical basis a function set or spline refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    /// Classical hierarchical basis.
    H,
    /// Children-only hierarchical basis.
    HTilde,
}

/// Anything that can be sampled at a point of `[0,1]^d`.
pub trait Evaluate {
    fn eval(&self, x: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Evaluate for F {
    fn eval(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Dense per-level coefficient vectors: `Σ_ℓ Σ_i coeffs[ℓ][i] β_{ℓ,i}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLevelSpline {
    pub coeffs: Vec<Vec<f64>>,
}

impl MultiLevelSpline {
    pub fn zeros(seq: &LevelSequence, levels: usize) -> Self {
        Self { coeffs: (0..levels).map(|l| vec![0.0; seq.level(l).num_functions()]).collect() }
    }

    pub fn add_assign(&mut self, other: &MultiLevelSpline) {
        if other.coeffs.len() > self.coeffs.len() {
            self.coeffs.resize(other.coeffs.len(), Vec::new());
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            if a.is_empty() {
                a.resize(b.len(), 0.0);
            }
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn sub(&self, other: &MultiLevelSpline) -> MultiLevelSpline {
        let mut neg = other.clone();
        neg.coeffs.iter_mut().flatten().for_each(|c| *c = -*c);
        let mut out = self.clone();
        out.add_assign(&neg);
        out
    }

    pub fn eval(&self, seq: &LevelSequence, x: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_empty())
            .map(|(l, c)| seq.level(l).eval_spline(c, x))
            .sum()
    }

    pub fn bind<'a>(&'a self, seq: &'a LevelSequence) -> BoundSpline<'a> {
        BoundSpline { spline: self, seq }
    }
}

/// A [`MultiLevelSpline`] paired with its level sequence, ready to evaluate.
#[derive(Clone, Copy)]
pub struct BoundSpline<'a> {
    spline: &'a MultiLevelSpline,
    seq: &'a LevelSequence,
}

impl Evaluate for BoundSpline<'_> {
    fn eval(&self, x: &[f64]) -> f64 {
        self.spline.eval(self.seq, x)
    }
}

/// A spline expressed over the active functions of a hierarchical basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HierSplineFunction {
    pub flavor: Flavor,
    pub coeffs: BTreeMap<FnId, f64>,
}

impl HierSplineFunction {
    pub fn new(flavor: Flavor) -> Self {
        Self { flavor, coeffs: BTreeMap::new() }
    }

    pub fn add(&mut self, id: FnId, c: f64) {
        *self.coeffs.entry(id).or_insert(0.0) += c;
    }

    pub fn to_multilevel(&self, seq: &LevelSequence) -> MultiLevelSpline {
        let levels = self.coeffs.keys().map(|f| f.level + 1).max().unwrap_or(1);
        let mut out = MultiLevelSpline::zeros(seq, levels);
        for (f, &c) in &self.coeffs {
            out.coeffs[f.level][f.index] += c;
        }
        out
    }

    /// Pointwise value; convert with [`Self::to_multilevel`] for repeated evaluation.
    pub fn eval(&self, seq: &LevelSequence, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|(f, &c)| c * seq.level(f.level).eval_fn(f.index, x)).sum()
    }
}
