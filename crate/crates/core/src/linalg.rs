//! Incremental Gram-Schmidt with rank decisions at a fixed tolerance.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormal basis `Q` of the span of the accepted vectors, with the
/// triangular factor `R` such that accepted vector `k` equals
/// `Σ_{i≤k} R[k][i] Q[i]`.
#[derive(Debug, Clone)]
pub(crate) struct OrthoBasis {
    dim: usize,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Self {
        OrthoBasis {
            dim,
            q: Vec::new(),
            r: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.q
    }

    /// Coefficients on `Q` and the residual, by two passes of modified
    /// Gram-Schmidt.
    fn project(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(v.len(), self.dim);
        let mut coeffs = vec![0.0; self.q.len()];
        let mut res = v.to_vec();
        for _ in 0..2 {
            for (c, q) in coeffs.iter_mut().zip(&self.q) {
                let h = dot(q, &res);
                *c += h;
                for (x, qi) in res.iter_mut().zip(q) {
                    *x -= h * qi;
                }
            }
        }
        (coeffs, res)
    }

    /// L2 distance from `v` to the current span.
    pub fn distance(&self, v: &[f64]) -> f64 {
        norm(&self.project(v).1)
    }

    /// Accepts `v` when its distance to the span exceeds `tol`; returns the
    /// distance either way.
    pub fn push_if_independent(&mut self, v: &[f64], tol: f64) -> (bool, f64) {
        let (mut coeffs, res) = self.project(v);
        let dist = norm(&res);
        if dist > tol {
            self.q.push(res.iter().map(|x| x / dist).collect());
            coeffs.push(dist);
            self.r.push(coeffs);
            (true, dist)
        } else {
            (false, dist)
        }
    }

    /// Least-squares coordinates of `v` on the accepted (raw) vectors.
    pub fn coordinates(&self, v: &[f64]) -> Vec<f64> {
        let k = self.q.len();
        let rhs: Vec<f64> = self.q.iter().map(|q| dot(q, v)).collect();
        // R is stored by columns: r[j][i] is row i of column j.
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = rhs[i];
            for j in i + 1..k {
                s -= self.r[j][i] * x[j];
            }
            x[i] = s / self.r[i][i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_coordinates() {
        let mut b = OrthoBasis::new(3);
        assert!(b.push_if_independent(&[1.0, 0.0, 1.0], 1e-9).0);
        assert!(b.push_if_independent(&[0.0, 2.0, 0.0], 1e-9).0);
        let (added, dist) = b.push_if_independent(&[3.0, -4.0, 3.0], 1e-9);
        assert!(!added && dist < 1e-12);
        let c = b.coordinates(&[3.0, -4.0, 3.0]);
        assert!((c[0] - 3.0).abs() < 1e-12 && (c[1] + 2.0).abs() < 1e-12);
        assert!((b.distance(&[0.0, 0.0, 1.0]) - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(b.len(), 2);
    }
}
