//! Multi-index helpers for product orders on flattened grids.
//!
//! States (and state–action pairs) live on products of one-dimensional
//! grids, flattened row-major with the last axis fastest. The componentwise
//! partial order on multi-indices is the order used by all monotonicity
//! and dominance checks.

/// Axis sizes of a flattened product grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    sizes: Vec<usize>,
}

impl Shape {
    pub fn new(sizes: Vec<usize>) -> Self {
        debug_assert!(!sizes.is_empty() && sizes.iter().all(|&n| n > 0));
        Self { sizes }
    }

    pub fn len(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn n_axes(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.sizes.len()];
        for (k, &n) in self.sizes.iter().enumerate().rev() {
            idx[k] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (k, &n) in self.sizes.iter().enumerate() {
            flat = flat * n + idx[k];
        }
        flat
    }

    /// Componentwise `a <= b` on flattened indices.
    pub fn leq(&self, a: usize, b: usize) -> bool {
        let (ia, ib) = (self.unflatten(a), self.unflatten(b));
        ia.iter().zip(&ib).all(|(x, y)| x <= y)
    }

    /// All ordered pairs `(i, j)` with `j` one step above `i` along `axis`.
    pub fn adjacent_pairs(&self, axis: usize) -> Vec<(usize, usize)> {
        let n = self.len();
        let stride: usize = self.sizes[axis + 1..].iter().product();
        let mut out = Vec::new();
        for i in 0..n {
            let pos = (i / stride) % self.sizes[axis];
            if pos + 1 < self.sizes[axis] {
                out.push((i, i + stride));
            }
        }
        out
    }

    /// Join (componentwise max) and meet (componentwise min).
    pub fn join_meet(&self, a: usize, b: usize) -> (usize, usize) {
        let (ia, ib) = (self.unflatten(a), self.unflatten(b));
        let join: Vec<usize> = ia.iter().zip(&ib).map(|(x, y)| *x.max(y)).collect();
        let meet: Vec<usize> = ia.iter().zip(&ib).map(|(x, y)| *x.min(y)).collect();
        (self.flatten(&join), self.flatten(&meet))
    }

    /// Upper-quadrant sums `F(c) = Σ_{i ≥ c} w(i)` for every corner `c`,
    /// computed by running suffix sums along each axis in turn.
    pub fn upper_quadrant_sums(&self, weights: &[f64]) -> Vec<f64> {
        debug_assert_eq!(weights.len(), self.len());
        let mut acc = weights.to_vec();
        for axis in 0..self.sizes.len() {
            let stride: usize = self.sizes[axis + 1..].iter().product();
            let n_axis = self.sizes[axis];
            let n = acc.len();
            // Suffix-sum along `axis`: iterate positions from high to low.
            for block in 0..n / (n_axis * stride) {
                for inner in 0..stride {
                    let base = block * n_axis * stride + inner;
                    for pos in (0..n_axis - 1).rev() {
                        acc[base + pos * stride] += acc[base + (pos + 1) * stride];
                    }
                }
            }
        }
        acc
    }

    /// Checks `f` nondecreasing along every axis; returns violating pairs
    /// (capped) and their count.
    pub fn monotone_violations(&self, f: &[f64], tol: f64, cap: usize) -> (usize, Vec<(usize, usize)>) {
        let mut count = 0;
        let mut sample = Vec::new();
        for axis in 0..self.n_axes() {
            for (lo, hi) in self.adjacent_pairs(axis) {
                if f[hi] < f[lo] - tol {
                    count += 1;
                    if sample.len() < cap {
                        sample.push((lo, hi));
                    }
                }
            }
        }
        (count, sample)
    }

    /// Checks increasing differences in every pair of axes via adjacent
    /// 2×2 rectangles, which on products of chains is equivalent to
    /// supermodularity. Returns violation count and a capped sample.
    pub fn supermodular_violations(
        &self,
        f: &[f64],
        tol: f64,
        cap: usize,
    ) -> (usize, Vec<(usize, usize)>) {
        let mut count = 0;
        let mut sample = Vec::new();
        let n_axes = self.n_axes();
        for a in 0..n_axes {
            let stride_a: usize = self.sizes[a + 1..].iter().product();
            for b in a + 1..n_axes {
                let stride_b: usize = self.sizes[b + 1..].iter().product();
                for i in 0..self.len() {
                    let pa = (i / stride_a) % self.sizes[a];
                    let pb = (i / stride_b) % self.sizes[b];
                    if pa + 1 >= self.sizes[a] || pb + 1 >= self.sizes[b] {
                        continue;
                    }
                    let f00 = f[i];
                    let f10 = f[i + stride_a];
                    let f01 = f[i + stride_b];
                    let f11 = f[i + stride_a + stride_b];
                    if f11 + f00 < f10 + f01 - tol {
                        count += 1;
                        if sample.len() < cap {
                            sample.push((i, i + stride_a + stride_b));
                        }
                    }
                }
            }
        }
        (count, sample)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_roundtrip() {
        let sh = Shape::new(vec![3, 4, 2]);
        for i in 0..sh.len() {
            assert_eq!(sh.flatten(&sh.unflatten(i)), i);
        }
    }

    #[test]
    fn leq_is_componentwise() {
        let sh = Shape::new(vec![2, 2]);
        // indices: 0=(0,0) 1=(0,1) 2=(1,0) 3=(1,1)
        assert!(sh.leq(0, 3));
        assert!(!sh.leq(1, 2));
        assert!(!sh.leq(2, 1));
        assert!(sh.leq(1, 1));
    }

    #[test]
    fn quadrant_sums_match_direct_enumeration() {
        let sh = Shape::new(vec![3, 2]);
        let w: Vec<f64> = (0..6).map(|i| (i + 1) as f64).collect();
        let q = sh.upper_quadrant_sums(&w);
        for c in 0..6 {
            let direct: f64 = (0..6).filter(|&i| sh.leq(c, i)).map(|i| w[i]).sum();
            assert!((q[c] - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn product_payoff_is_supermodular() {
        let sh = Shape::new(vec![4, 4]);
        let f: Vec<f64> = (0..16)
            .map(|i| {
                let idx = sh.unflatten(i);
                (idx[0] * idx[1]) as f64
            })
            .collect();
        let (violations, _) = sh.supermodular_violations(&f, 1e-12, 8);
        assert_eq!(violations, 0);
        let g: Vec<f64> = (0..16)
            .map(|i| {
                let idx = sh.unflatten(i);
                -((idx[0] * idx[1]) as f64)
            })
            .collect();
        let (violations, _) = sh.supermodular_violations(&g, 1e-12, 8);
        assert!(violations > 0);
    }

    #[test]
    fn monotone_violations_detects_decrease() {
        let sh = Shape::new(vec![3]);
        let (n, _) = sh.monotone_violations(&[0.0, 1.0, 0.5], 1e-12, 4);
        assert_eq!(n, 1);
        let (n, _) = sh.monotone_violations(&[0.0, 1.0, 2.0], 1e-12, 4);
        assert_eq!(n, 0);
    }
}
