//! Gauss–Legendre rules and tensor-product cell quadrature.

use std::f64::consts::PI;

/// `n`-point Gauss–Legendre nodes and weights on `[-1, 1]`, exact for
/// polynomials of degree `2n - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "a Gauss rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let x = self.nodes.iter().map(|t| mid + half * t).collect();
        let w = self.weights.iter().map(|w| w * half).collect();
        (x, w)
    }
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tensor Gauss points on the box `[lo, hi]` with `counts[i]` points in
/// direction `i`. Direction 0 varies fastest.
pub fn tensor_rule(lo: &[f64], hi: &[f64], counts: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let per_dir: Vec<(Vec<f64>, Vec<f64>)> = counts
        .iter()
        .zip(lo.iter().zip(hi))
        .map(|(&n, (&a, &b))| GaussLegendre::new(n).on_interval(a, b))
        .collect();
    let total: usize = counts.iter().product();
    let mut points = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; counts.len()];
    for _ in 0..total {
        points.push(idx.iter().zip(&per_dir).map(|(&k, (x, _))| x[k]).collect());
        weights.push(idx.iter().zip(&per_dir).map(|(&k, (_, w))| w[k]).product());
        for (i, n) in counts.iter().enumerate() {
            idx[i] += 1;
            if idx[i] < *n {
                break;
            }
            idx[i] = 0;
        }
    }
    (points, weights)
}

/// Uniform sample grid on `[lo, hi]` including the box boundary.
pub fn sample_grid(lo: &[f64], hi: &[f64], per_dir: usize) -> Vec<Vec<f64>> {
    let per_dir = per_dir.max(2);
    let total = per_dir.pow(lo.len() as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; lo.len()];
    for _ in 0..total {
        out.push(
            idx.iter()
                .zip(lo.iter().zip(hi))
                .map(|(&k, (&a, &b))| a + (b - a) * k as f64 / (per_dir - 1) as f64)
                .collect(),
        );
        for k in idx.iter_mut() {
            *k += 1;
            if *k < per_dir {
                break;
            }
            *k = 0;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_monomials_exactly() {
        for n in 1..=10 {
            let g = GaussLegendre::new(n);
            let (x, w) = g.on_interval(0.0, 1.0);
            for k in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k as i32)).sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn nodes_are_sorted_and_symmetric() {
        let g = GaussLegendre::new(7);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
        for i in 0..7 {
            assert!((g.nodes[i] + g.nodes[6 - i]).abs() < 1e-15);
        }
        assert!((g.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_rule_volume_and_moment() {
        let (p, w) = tensor_rule(&[0.0, 1.0], &[0.5, 3.0], &[2, 3]);
        assert_eq!(p.len(), 6);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let xy: f64 = p.iter().zip(&w).map(|(p, w)| w * p[0] * p[1] * p[1]).sum();
        // ∫_0^{1/2} x dx · ∫_1^3 y² dy = 1/8 · 26/3
        assert!((xy - 26.0 / 24.0).abs() < 1e-13);
    }

    #[test]
    fn sample_grid_hits_corners() {
        let g = sample_grid(&[0.0, 0.0], &[1.0, 2.0], 3);
        assert_eq!(g.len(), 9);
        assert_eq!(g[0], vec![0.0, 0.0]);
        assert_eq!(g[8], vec![1.0, 2.0]);
    }
}
