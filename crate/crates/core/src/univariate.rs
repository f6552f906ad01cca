//! Open knot vectors and univariate B-splines.
//!
//! Knots are stored as `f64`. Every finite `f64` is a dyadic rational, so
//! [`exact`] converts knots to [`BigRational`] without loss; the two-scale
//! coefficients are computed in that exact arithmetic and rounded to `f64`
//! only afterwards. Midpoints inserted by [`KnotVector::dyadic_refine`] are
//! exact whenever the input knots are short dyadic fractions (the usual case);
//! for other inputs the midpoint is rounded once, and the refined vector still
//! contains every coarse knot bit-for-bit.

use std::ops::Range;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar used for knot-insertion coefficients and weights.
pub type Exact = BigRational;

/// Exact rational value of a finite `f64`.
pub fn exact(x: f64) -> Exact {
    BigRational::from_float(x).expect("knots and weights are finite")
}

pub fn exact_to_f64(x: &Exact) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn exact_int(n: i64) -> Exact {
    BigRational::from_integer(BigInt::from(n))
}

/// A p-open knot vector on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
    /// Flat index `k` of every nonempty knot span `[ξ_k, ξ_{k+1}]`, increasing.
    spans: Vec<usize>,
}

/// Breakpoints (knots without repetition) and their multiplicities.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakpoints {
    pub values: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

/// The `p + 2` consecutive knots defining one B-spline.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalKnotVector {
    pub degree: usize,
    pub knots: Vec<f64>,
    /// Index `j` of the B-spline within its knot vector.
    pub origin: usize,
}

/// One element of the univariate mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalCell {
    /// Position of the cell among the nonempty spans (breakpoint index).
    pub index: usize,
    /// Flat knot index `k` with `[ξ_k, ξ_{k+1}]` equal to the cell.
    pub span: usize,
    pub lo: f64,
    pub hi: f64,
}

/// A child of a univariate B-spline with its two-scale coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Child {
    pub local: LocalKnotVector,
    pub coefficient: Exact,
    pub value: f64,
}

impl Breakpoints {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_knots(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.multiplicities)
            .flat_map(|(&v, &m)| std::iter::repeat_n(v, m))
            .collect()
    }
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidKnotVector(msg));
        let p = degree;
        if knots.len() < 2 * (p + 1) {
            return bad(format!(
                "degree {p} needs at least {} knots, got {}",
                2 * (p + 1),
                knots.len()
            ));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return bad("non-finite knot".into());
        }
        if knots.windows(2).any(|w| w[0] > w[1]) {
            return bad("knots are not nondecreasing".into());
        }
        let len = knots.len();
        if knots[..=p].iter().any(|&k| k != 0.0) || knots[len - p - 1..].iter().any(|&k| k != 1.0) {
            return bad(format!("first and last {} knots must equal 0 and 1", p + 1));
        }
        if knots[p + 1] == 0.0 || knots[len - p - 2] == 1.0 {
            return bad("end knots repeated more than p+1 times".into());
        }
        let kv = Self::assemble(p, knots);
        for (v, m) in kv.breakpoints().values.iter().zip(kv.breakpoints().multiplicities) {
            if m > p + 1 {
                return bad(format!("knot {v} has multiplicity {m} > p+1 = {}", p + 1));
            }
        }
        Ok(kv)
    }

    fn assemble(degree: usize, knots: Vec<f64>) -> Self {
        let spans = (0..knots.len() - 1).filter(|&k| knots[k] < knots[k + 1]).collect();
        Self { degree, knots, spans }
    }

    pub fn from_breakpoints(degree: usize, breakpoints: &Breakpoints) -> Result<Self> {
        if breakpoints.values.len() != breakpoints.multiplicities.len() {
            return Err(Error::InvalidKnotVector(
                "breakpoints and multiplicities differ in length".into(),
            ));
        }
        if breakpoints.values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidKnotVector("breakpoints must be strictly increasing".into()));
        }
        Self::new(degree, breakpoints.to_knots())
    }

    /// Open knot vector with `intervals` equal intervals and simple interior knots.
    pub fn uniform(degree: usize, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::InvalidKnotVector("need at least one interval".into()));
        }
        let values = (0..=intervals).map(|i| i as f64 / intervals as f64).collect::<Vec<_>>();
        let mut multiplicities = vec![1; intervals + 1];
        multiplicities[0] = degree + 1;
        multiplicities[intervals] = degree + 1;
        Self::from_breakpoints(degree, &Breakpoints { values, multiplicities })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of B-splines `n`.
    pub fn num_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    pub fn num_cells(&self) -> usize {
        self.spans.len()
    }

    pub fn breakpoints(&self) -> Breakpoints {
        let mut values: Vec<f64> = Vec::new();
        let mut multiplicities: Vec<usize> = Vec::new();
        for &k in &self.knots {
            if values.last() == Some(&k) {
                *multiplicities.last_mut().unwrap() += 1;
            } else {
                values.push(k);
                multiplicities.push(1);
            }
        }
        Breakpoints { values, multiplicities }
    }

    pub fn multiplicity(&self, x: f64) -> usize {
        self.knots.iter().filter(|&&k| k == x).count()
    }

    pub fn cell(&self, index: usize) -> IntervalCell {
        let span = self.spans[index];
        IntervalCell { index, span, lo: self.knots[span], hi: self.knots[span + 1] }
    }

    pub fn cells(&self) -> impl Iterator<Item = IntervalCell> + '_ {
        (0..self.num_cells()).map(|i| self.cell(i))
    }

    pub fn cell_bounds(&self, index: usize) -> (f64, f64) {
        let span = self.spans[index];
        (self.knots[span], self.knots[span + 1])
    }

    /// Cell containing `x`, right-continuous in the interior and closed at 1.
    pub fn find_cell(&self, x: f64) -> usize {
        let count = self.spans.partition_point(|&k| self.knots[k] <= x);
        count.saturating_sub(1).min(self.num_cells() - 1)
    }

    pub fn local(&self, j: usize) -> LocalKnotVector {
        LocalKnotVector {
            degree: self.degree,
            knots: self.knots[j..j + self.degree + 2].to_vec(),
            origin: j,
        }
    }

    pub fn support(&self, j: usize) -> (f64, f64) {
        (self.knots[j], self.knots[j + self.degree + 1])
    }

    /// Cells covered by the support of B-spline `j`.
    pub fn support_cells(&self, j: usize) -> Range<usize> {
        self.span_range(j, j + self.degree)
    }

    /// Cells whose span index `k` lies in `first..=last`.
    fn span_range(&self, first: usize, last: usize) -> Range<usize> {
        let lo = self.spans.partition_point(|&k| k < first);
        let hi = self.spans.partition_point(|&k| k <= last);
        lo..hi
    }

    /// B-splines that do not vanish on cell `index`.
    pub fn active_on_cell(&self, index: usize) -> Range<usize> {
        let k = self.spans[index];
        k - self.degree..k + 1
    }

    /// Support extension `[ξ_{k-p}, ξ_{k+p+1}]` of a cell, as a range of cells.
    pub fn support_extension(&self, index: usize) -> Range<usize> {
        let k = self.spans[index];
        self.span_range(k.saturating_sub(self.degree), k + self.degree)
    }

    /// Values of the `p + 1` B-splines `k-p..=k` nonvanishing on cell `index`,
    /// evaluated with the polynomial piece of that cell (valid on the closed cell).
    pub fn basis_on_cell(&self, index: usize, x: f64) -> Vec<f64> {
        let p = self.degree;
        let k = self.spans[index];
        let t = &self.knots;
        let mut values = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        values[0] = 1.0;
        for j in 1..=p {
            left[j] = x - t[k + 1 - j];
            right[j] = t[k + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = values[r] / (right[r + 1] + left[j - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            values[j] = saved;
        }
        values
    }

    /// Value of B-spline `j` at `x`.
    pub fn eval(&self, j: usize, x: f64) -> f64 {
        let cell = self.find_cell(x);
        let active = self.active_on_cell(cell);
        if active.contains(&j) {
            self.basis_on_cell(cell, x)[j - active.start]
        } else {
            0.0
        }
    }

    /// Longest cell length `h`.
    pub fn max_cell_length(&self) -> f64 {
        self.cells().map(|c| c.hi - c.lo).fold(0.0, f64::max)
    }

    /// Local quasi-uniformity diagnostic: largest ratio between adjacent cell lengths.
    pub fn theta(&self) -> f64 {
        let lengths: Vec<f64> = self.cells().map(|c| c.hi - c.lo).collect();
        lengths
            .windows(2)
            .map(|w| (w[0] / w[1]).max(w[1] / w[0]))
            .fold(1.0, f64::max)
    }

    /// Inserts the midpoint of every cell once, keeping existing multiplicities.
    pub fn dyadic_refine(&self) -> KnotVector {
        let bp = self.breakpoints();
        let mut values = Vec::with_capacity(2 * bp.len());
        let mut multiplicities = Vec::with_capacity(2 * bp.len());
        for i in 0..bp.len() {
            values.push(bp.values[i]);
            multiplicities.push(bp.multiplicities[i]);
            if i + 1 < bp.len() {
                let (a, b) = (bp.values[i], bp.values[i + 1]);
                let mid = a + (b - a) / 2.0;
                values.push(mid);
                multiplicities.push(1);
            }
        }
        let knots = Breakpoints { values, multiplicities }.to_knots();
        Self::assemble(self.degree, knots)
    }

    /// Whether every knot of `self` appears in `fine` with at least its multiplicity.
    pub fn is_refined_by(&self, fine: &KnotVector) -> bool {
        self.refinement_defect(fine).is_none()
    }

    /// First knot of `self` missing from `fine` (or with lower multiplicity there).
    pub fn refinement_defect(&self, fine: &KnotVector) -> Option<(f64, usize, usize)> {
        if self.degree != fine.degree {
            return Some((f64::NAN, self.degree, fine.degree));
        }
        let bp = self.breakpoints();
        bp.values
            .iter()
            .zip(&bp.multiplicities)
            .map(|(&v, &m)| (v, m, fine.multiplicity(v)))
            .find(|&(_, m, mf)| mf < m)
    }

    /// For every cell of `fine`, the cell of `self` containing it.
    pub fn cell_parents(&self, fine: &KnotVector) -> Vec<usize> {
        fine.cells()
            .map(|c| {
                let mid = c.lo + (c.hi - c.lo) / 2.0;
                self.find_cell(mid)
            })
            .collect()
    }

    /// Index `j` of the B-spline whose local knot vector equals `local`, if any.
    pub fn index_of(&self, local: &[f64]) -> Option<usize> {
        let first = local[0];
        let lead = local.iter().take_while(|&&k| k == first).count();
        let last_pos = self.knots.iter().rposition(|&k| k == first)?;
        let j = (last_pos + 1).checked_sub(lead)?;
        (j + local.len() <= self.knots.len() && self.knots[j..j + local.len()] == *local).then_some(j)
    }
}

impl LocalKnotVector {
    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.degree + 1])
    }

    /// Cox–de Boor recursion on the local knots; right-continuous, left limit at `x = 1`.
    pub fn eval(&self, x: f64) -> f64 {
        let p = self.degree;
        let t = &self.knots;
        if x < t[0] || x > t[p + 1] {
            return 0.0;
        }
        let at_end = x >= 1.0;
        let mut n: Vec<f64> = (0..=p)
            .map(|i| {
                let inside = if at_end { t[i] < x && x <= t[i + 1] } else { t[i] <= x && x < t[i + 1] };
                if inside {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        for k in 1..=p {
            for i in 0..=p - k {
                let left = if t[i + k] > t[i] { (x - t[i]) / (t[i + k] - t[i]) * n[i] } else { 0.0 };
                let right = if t[i + k + 1] > t[i + 1] {
                    (t[i + k + 1] - x) / (t[i + k + 1] - t[i + 1]) * n[i + 1]
                } else {
                    0.0
                };
                n[i] = left + right;
            }
        }
        n[0]
    }

    fn multiplicity(&self, x: f64) -> usize {
        self.knots.iter().filter(|&&k| k == x).count()
    }
}

/// Child test by the endpoint conditions: the child's knots lie within the
/// parent's support, and a child knot matching a parent endpoint is not repeated
/// more often in the child than in the parent.
pub fn is_child_by_conditions(parent: &LocalKnotVector, child: &LocalKnotVector) -> bool {
    let (lo, hi) = parent.support();
    let (clo, chi) = child.support();
    if !(lo <= clo && chi <= hi) {
        return false;
    }
    [lo, hi]
        .iter()
        .all(|&e| child.multiplicity(e) == 0 || child.multiplicity(e) <= parent.multiplicity(e))
}

/// Children of `parent` in `fine` with their knot-insertion coefficients.
///
/// The knots of `fine` interior to the parent's support are inserted one at a
/// time (Boehm) into the parent's local knot vector, in increasing order and
/// in exact arithmetic. Windows with a zero coefficient are dropped.
pub fn children_with_coefficients(parent: &LocalKnotVector, fine: &KnotVector) -> Result<Vec<Child>> {
    let p = parent.degree;
    if fine.degree() != p {
        return Err(Error::RefinementMismatch(format!(
            "parent degree {p} differs from fine degree {}",
            fine.degree()
        )));
    }
    let (lo, hi) = parent.support();
    // The parent's knots must appear in `fine` as part of its own window.
    for &k in &parent.knots {
        if fine.multiplicity(k) < parent.multiplicity(k) {
            return Err(Error::RefinementMismatch(format!(
                "knot {k} (multiplicity {}) missing from the fine knot vector",
                parent.multiplicity(k)
            )));
        }
    }
    let mut inserts: Vec<f64> = Vec::new();
    for bp in fine.breakpoints().values.iter().zip(fine.breakpoints().multiplicities) {
        let (&v, m) = bp;
        if lo < v && v < hi {
            let have = parent.multiplicity(v);
            inserts.extend(std::iter::repeat_n(v, m - have));
        }
    }

    let mut knots: Vec<Exact> = parent.knots.iter().map(|&k| exact(k)).collect();
    let mut values: Vec<f64> = parent.knots.clone();
    let mut coeffs: Vec<Exact> = vec![Exact::one()];
    for &u in &inserts {
        let ue = exact(u);
        // Old B-spline i splits as w_i B'_i + (1 - w_{i+1}) B'_{i+1}, with
        // w_i = (u - t_i) / (t_{i+p} - t_i) clamped to [0, 1].
        let weight = |i: usize| -> Exact {
            if u <= values[i] {
                Exact::zero()
            } else if u >= values[i + p] {
                Exact::one()
            } else {
                (&ue - &knots[i]) / (&knots[i + p] - &knots[i])
            }
        };
        let old = coeffs.len();
        let next: Vec<Exact> = (0..=old)
            .map(|i| {
                let w = weight(i);
                let mut c = Exact::zero();
                if i < old {
                    c += &w * &coeffs[i];
                }
                if i > 0 {
                    c += (Exact::one() - &w) * &coeffs[i - 1];
                }
                c
            })
            .collect();
        coeffs = next;
        let s = values.partition_point(|&k| k <= u);
        knots.insert(s, ue);
        values.insert(s, u);
    }

    let mut children = Vec::new();
    for (i, c) in coeffs.into_iter().enumerate() {
        if !c.is_positive() {
            continue;
        }
        let window = values[i..i + p + 2].to_vec();
        let origin = fine.index_of(&window).ok_or_else(|| {
            Error::RefinementMismatch(format!("window {window:?} is not a B-spline of the fine level"))
        })?;
        let value = exact_to_f64(&c);
        children.push(Child { local: LocalKnotVector { degree: p, knots: window, origin }, coefficient: c, value });
    }
    Ok(children)
}

/// Parents of fine B-spline `child` in `coarse`, by the endpoint conditions.
pub fn parents_1d(child: usize, coarse: &KnotVector, fine: &KnotVector) -> Vec<usize> {
    let local = fine.local(child);
    let (clo, chi) = local.support();
    (0..coarse.num_basis())
        .filter(|&j| {
            let (lo, hi) = coarse.support(j);
            lo <= clo && chi <= hi && is_child_by_conditions(&coarse.local(j), &local)
        })
        .collect()
}

/// Two-scale relation between consecutive univariate levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoScale {
    /// `children[j]` lists `(fine index, exact coefficient, f64 coefficient)`.
    pub children: Vec<Vec<(usize, Exact, f64)>>,
    /// `parents[i]` lists the coarse indices having fine B-spline `i` as a child.
    pub parents: Vec<Vec<usize>>,
}

impl TwoScale {
    pub fn new(coarse: &KnotVector, fine: &KnotVector) -> Result<Self> {
        if let Some((k, m, mf)) = coarse.refinement_defect(fine) {
            return Err(Error::RefinementMismatch(format!(
                "knot {k} has multiplicity {m} in the coarse vector but {mf} in the fine one"
            )));
        }
        let mut children = Vec::with_capacity(coarse.num_basis());
        let mut parents = vec![Vec::new(); fine.num_basis()];
        for j in 0..coarse.num_basis() {
            let kids = children_with_coefficients(&coarse.local(j), fine)?;
            for c in &kids {
                parents[c.local.origin].push(j);
            }
            children.push(kids.into_iter().map(|c| (c.local.origin, c.coefficient, c.value)).collect());
        }
        Ok(Self { children, parents })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn kv(p: usize, knots: &[f64]) -> KnotVector {
        KnotVector::new(p, knots.to_vec()).unwrap()
    }

    /// Least-squares collocation fit of the parent over the fine basis,
    /// independent of the knot-insertion path.
    fn collocation_coefficients(parent: &LocalKnotVector, fine: &KnotVector) -> Vec<f64> {
        let m = 40 * fine.num_basis();
        let xs: Vec<f64> = (0..m).map(|i| (i as f64 + 0.5) / m as f64).collect();
        let a = DMatrix::from_fn(m, fine.num_basis(), |r, c| fine.eval(c, xs[r]));
        let b = DVector::from_fn(m, |r, _| parent.eval(xs[r]));
        let svd = a.svd(true, true);
        svd.solve(&b, 1e-13).unwrap().iter().copied().collect()
    }

    #[test]
    fn rejects_malformed_knot_vectors() {
        assert!(KnotVector::new(2, vec![0.0, 0.0, 1.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.7, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.5, 0.5, 0.5, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.0, 1.0, 1.0]).is_err());
        assert!(KnotVector::new(1, vec![0.0, 0.0, 0.5, 0.5, 1.0, 1.0]).is_ok());
    }

    #[test]
    fn breakpoints_report_multiplicities() {
        let k = kv(2, &[0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0]);
        let bp = k.breakpoints();
        assert_eq!(bp.values, vec![0.0, 0.5, 1.0]);
        assert_eq!(bp.multiplicities, vec![3, 2, 3]);
        assert_eq!(bp.multiplicities.iter().sum::<usize>(), k.knots().len());
        assert_eq!(k.num_basis(), 5);
        assert_eq!(k.num_cells(), 2);
    }

    #[test]
    fn eval_examples() {
        let hat = LocalKnotVector { degree: 1, knots: vec![0.0, 0.5, 1.0], origin: 0 };
        assert_eq!(hat.eval(0.5), 1.0);
        let quad = LocalKnotVector { degree: 2, knots: vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], origin: 0 };
        assert!((quad.eval(0.5) - 0.75).abs() < 1e-15);
        let boundary = LocalKnotVector { degree: 2, knots: vec![0.0, 0.0, 0.0, 0.5], origin: 0 };
        assert_eq!(boundary.eval(0.75), 0.0);
    }

    #[test]
    fn right_endpoint_uses_left_limit() {
        let k = kv(2, &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]);
        let last = k.num_basis() - 1;
        assert_eq!(k.local(last).eval(1.0), 1.0);
        assert_eq!(k.eval(last, 1.0), 1.0);
        assert_eq!(k.local(0).eval(0.0), 1.0);
    }

    #[test]
    fn cell_evaluation_matches_cox_de_boor() {
        let k = kv(3, &[0.0, 0.0, 0.0, 0.0, 0.25, 0.5, 0.5, 0.75, 1.0, 1.0, 1.0, 1.0]);
        for i in 0..=200 {
            let x = i as f64 / 200.0;
            for j in 0..k.num_basis() {
                assert!((k.eval(j, x) - k.local(j).eval(x)).abs() < 1e-14, "j={j} x={x}");
            }
        }
    }

    #[test]
    fn partition_of_unity() {
        let k = kv(3, &[0.0, 0.0, 0.0, 0.0, 0.2, 0.5, 0.5, 0.5, 0.9, 1.0, 1.0, 1.0, 1.0]);
        for i in 0..=1000 {
            let x = i as f64 / 1000.0;
            let s: f64 = (0..k.num_basis()).map(|j| k.local(j).eval(x)).sum();
            assert!((s - 1.0).abs() < 1e-12, "x={x} sum={s}");
        }
    }

    #[test]
    fn dyadic_refine_examples() {
        let k = kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]);
        assert_eq!(k.dyadic_refine().knots(), &[0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 1.0]);
        let k = kv(2, &[0.0, 0.0, 0.0, 0.5, 0.5, 1.0, 1.0, 1.0]);
        assert_eq!(k.dyadic_refine().knots(), &[0.0, 0.0, 0.0, 0.25, 0.5, 0.5, 0.75, 1.0, 1.0, 1.0]);
        let k = KnotVector::uniform(2, 4).unwrap();
        let r = k.dyadic_refine();
        assert_eq!(r.max_cell_length(), k.max_cell_length() / 2.0);
        assert!(k.is_refined_by(&r));
        assert!(!r.is_refined_by(&k));
        assert_eq!(r.theta(), 1.0);
    }

    #[test]
    fn support_ranges() {
        let k = KnotVector::uniform(2, 8).unwrap();
        assert_eq!(k.support_extension(4), 2..7);
        assert_eq!(k.support_extension(0), 0..3);
        assert_eq!(k.support_extension(7), 5..8);
        assert_eq!(k.support_cells(0), 0..1);
        assert_eq!(k.support_cells(4), 2..5);
        assert_eq!(k.active_on_cell(3), 3..6);
    }

    #[test]
    fn hat_children() {
        let coarse = kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]);
        let fine = coarse.dyadic_refine();
        let kids = children_with_coefficients(&coarse.local(1), &fine).unwrap();
        let windows: Vec<_> = kids.iter().map(|c| c.local.knots.clone()).collect();
        assert_eq!(windows, vec![vec![0.0, 0.25, 0.5], vec![0.25, 0.5, 0.75], vec![0.5, 0.75, 1.0]]);
        let c: Vec<f64> = kids.iter().map(|c| c.value).collect();
        assert_eq!(c, vec![0.5, 1.0, 0.5]);
    }

    #[test]
    fn quadratic_interior_mask() {
        let coarse = KnotVector::uniform(2, 8).unwrap();
        let fine = coarse.dyadic_refine();
        let kids = children_with_coefficients(&coarse.local(4), &fine).unwrap();
        let c: Vec<f64> = kids.iter().map(|c| c.value).collect();
        assert_eq!(c, vec![0.25, 0.75, 0.75, 0.25]);
        let oracle = collocation_coefficients(&coarse.local(4), &fine);
        for kid in &kids {
            assert!((oracle[kid.local.origin] - kid.value).abs() < 1e-10);
        }
    }

    #[test]
    fn boundary_single_insertion() {
        let coarse = kv(2, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let fine = kv(2, &[0.0, 0.0, 0.0, 0.5, 1.0, 1.0, 1.0]);
        let kids = children_with_coefficients(&coarse.local(0), &fine).unwrap();
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].local.knots, vec![0.0, 0.0, 0.0, 0.5]);
        assert_eq!(kids[0].coefficient, exact_int(1));
        assert_eq!(kids[1].local.knots, vec![0.0, 0.0, 0.5, 1.0]);
        assert_eq!(kids[1].coefficient, exact(0.5));
    }

    #[test]
    fn refinement_mismatch_is_reported() {
        let coarse = kv(1, &[0.0, 0.0, 0.5, 1.0, 1.0]);
        let fine = kv(1, &[0.0, 0.0, 0.25, 1.0, 1.0]);
        assert!(matches!(
            children_with_coefficients(&coarse.local(1), &fine),
            Err(Error::RefinementMismatch(_))
        ));
        assert!(TwoScale::new(&coarse, &fine).is_err());
    }

    #[test]
    fn children_agree_with_collocation_oracle() {
        let coarse = kv(3, &[0.0, 0.0, 0.0, 0.0, 0.3, 0.5, 0.5, 1.0, 1.0, 1.0, 1.0]);
        let fine = coarse.dyadic_refine();
        for j in 0..coarse.num_basis() {
            let kids = children_with_coefficients(&coarse.local(j), &fine).unwrap();
            let oracle = collocation_coefficients(&coarse.local(j), &fine);
            for (i, &o) in oracle.iter().enumerate() {
                let c = kids.iter().find(|c| c.local.origin == i).map_or(0.0, |c| c.value);
                assert!((o - c).abs() < 1e-9, "parent {j} child {i}: {o} vs {c}");
            }
        }
    }

    #[test]
    fn conditions_agree_with_insertion() {
        let coarse = kv(2, &[0.0, 0.0, 0.0, 0.25, 0.5, 0.5, 0.75, 1.0, 1.0, 1.0]);
        let fine = coarse.dyadic_refine();
        let ts = TwoScale::new(&coarse, &fine).unwrap();
        for j in 0..coarse.num_basis() {
            for i in 0..fine.num_basis() {
                let by_insertion = ts.children[j].iter().any(|c| c.0 == i);
                let by_conditions = is_child_by_conditions(&coarse.local(j), &fine.local(i));
                assert_eq!(by_insertion, by_conditions, "parent {j} child {i}");
            }
        }
        for i in 0..fine.num_basis() {
            assert_eq!(parents_1d(i, &coarse, &fine), ts.parents[i]);
        }
    }

    #[test]
    fn index_of_handles_end_multiplicity() {
        let k = KnotVector::uniform(2, 4).unwrap();
        for j in 0..k.num_basis() {
            assert_eq!(k.index_of(&k.local(j).knots), Some(j));
        }
        assert_eq!(k.index_of(&[0.0, 0.0, 0.5, 0.75]), None);
    }
}
