//! Dense Gaussian elimination with partial pivoting for the small systems
//! that show up here (`d ≤ 8` at desk scale).

use alloc::vec;
use alloc::vec::Vec;

/// Pivots below this fraction of the largest matrix entry count as zero.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// Row-major LU factorization `P A = L U` of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn with_dim(n: usize) -> Self {
        Lu { n, lu: vec![0.0; n * n], perm: (0..n).collect() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Factor `a` (row-major `n × n`) into `self`, reusing its storage.
    /// Returns `false` if a pivot falls under the singularity threshold.
    pub fn refactor(&mut self, a: &[f64]) -> bool {
        let n = self.n;
        debug_assert_eq!(a.len(), n * n);
        self.lu.copy_from_slice(a);
        for (i, p) in self.perm.iter_mut().enumerate() {
            *p = i;
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return false;
        }
        let floor = PIVOT_THRESHOLD * scale;
        let lu = &mut self.lu;
        for k in 0..n {
            let (mut piv, mut best) = (k, lu[k * n + k].abs());
            for r in k + 1..n {
                let v = lu[r * n + k].abs();
                if v > best {
                    piv = r;
                    best = v;
                }
            }
            if best <= floor {
                return false;
            }
            if piv != k {
                for c in 0..n {
                    lu.swap(k * n + c, piv * n + c);
                }
                self.perm.swap(k, piv);
            }
            let pivot = lu[k * n + k];
            for r in k + 1..n {
                let factor = lu[r * n + k] / pivot;
                lu[r * n + k] = factor;
                if factor != 0.0 {
                    for c in k + 1..n {
                        lu[r * n + c] -= factor * lu[k * n + c];
                    }
                }
            }
        }
        true
    }

    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        let mut lu = Lu::with_dim(n);
        lu.refactor(a).then_some(lu)
    }

    /// Solve `A x = b` into `x`.
    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            x[i] = b[self.perm[i]] - row.iter().zip(&x[..i]).map(|(l, v)| l * v).sum::<f64>();
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = x[i] - row.iter().zip(&x[i + 1..]).map(|(u, v)| u * v).sum::<f64>();
            x[i] = s / self.lu[i * n + i];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }
}
