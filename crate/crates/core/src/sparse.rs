//! Compressed-row view of a Fock operator for repeated matrix-vector
//! products in the two-mode time stepper.

use nalgebra::DVector;

use crate::fockspace::{FockOperator, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl SparseOperator {
    /// Keeps every entry of `op` that is not exactly zero.
    pub fn from_dense(op: &FockOperator) -> Self {
        let dim = op.dim();
        let m = op.matrix();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..dim {
            for j in 0..dim {
                let v = m[(i, j)];
                if v.re != 0.0 || v.im != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self, modes: Vec<usize>) -> FockOperator {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] += self.vals[k];
            }
        }
        FockOperator::from_matrix(m, modes).expect("sparse operator has consistent shape")
    }

    /// `out = self * x`.
    pub fn mul_vec_into(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        self.mul_vec_into(x.as_slice(), out.as_mut_slice());
        out
    }

    /// `sum_k coeff_k * op_k`; all operands must share the dimension.
    pub fn linear_combination(terms: &[(C64, &SparseOperator)]) -> SparseOperator {
        assert!(!terms.is_empty(), "empty linear combination");
        let dim = terms[0].1.dim;
        assert!(terms.iter().all(|(_, op)| op.dim == dim), "dimension mismatch");
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        let mut scratch: Vec<C64> = vec![C64::new(0.0, 0.0); dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut seen = vec![false; dim];
        for i in 0..dim {
            for (coeff, op) in terms {
                for k in op.row_ptr[i]..op.row_ptr[i + 1] {
                    let j = op.cols[k];
                    if !seen[j] {
                        seen[j] = true;
                        touched.push(j);
                    }
                    scratch[j] += *coeff * op.vals[k];
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                cols.push(j);
                vals.push(scratch[j]);
                scratch[j] = C64::new(0.0, 0.0);
                seen[j] = false;
            }
            touched.clear();
            row_ptr.push(cols.len());
        }
        SparseOperator {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Kronecker product `a ⊗ b` of two dense operators.
    pub fn kron(a: &FockOperator, b: &FockOperator) -> Self {
        let sa = Self::from_dense(a);
        let sb = Self::from_dense(b);
        let dim = sa.dim * sb.dim;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::with_capacity(sa.nnz() * sb.nnz());
        let mut vals = Vec::with_capacity(sa.nnz() * sb.nnz());
        row_ptr.push(0);
        for i in 0..sa.dim {
            for k in 0..sb.dim {
                for p in sa.row_ptr[i]..sa.row_ptr[i + 1] {
                    for q in sb.row_ptr[k]..sb.row_ptr[k + 1] {
                        cols.push(sa.cols[p] * sb.dim + sb.cols[q]);
                        vals.push(sa.vals[p] * sb.vals[q]);
                    }
                }
                row_ptr.push(cols.len());
            }
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    /// Gershgorin enclosure `[lo, hi]` of the spectrum, assuming Hermiticity.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut diag = 0.0;
            let mut radius = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.cols[k] == i {
                    diag += self.vals[k].re;
                } else {
                    radius += self.vals[k].norm();
                }
            }
            lo = lo.min(diag - radius);
            hi = hi.max(diag + radius);
        }
        (lo, hi)
    }
}

/// Operators stored on their union sparsity pattern, so that a linear
/// combination is a single pass over aligned value arrays.
#[derive(Clone, Debug, PartialEq)]
pub struct TermStack {
    pattern: SparseOperator,
    values: Vec<Vec<C64>>,
}

impl TermStack {
    pub fn new(terms: &[&SparseOperator]) -> Self {
        let one = C64::new(1.0, 0.0);
        let pairs: Vec<(C64, &SparseOperator)> = terms.iter().map(|t| (one, *t)).collect();
        let pattern = SparseOperator::linear_combination(&pairs);
        let values = terms
            .iter()
            .map(|t| {
                let mut v = vec![C64::new(0.0, 0.0); pattern.nnz()];
                for i in 0..pattern.dim {
                    let lo = pattern.row_ptr[i];
                    let row = &pattern.cols[lo..pattern.row_ptr[i + 1]];
                    for k in t.row_ptr[i]..t.row_ptr[i + 1] {
                        let pos = row.binary_search(&t.cols[k]).expect("pattern covers every term");
                        v[lo + pos] += t.vals[k];
                    }
                }
                v
            })
            .collect();
        Self { pattern, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim
    }

    /// `sum_k coeffs[k] * term_k`.
    pub fn combine(&self, coeffs: &[C64]) -> SparseOperator {
        assert_eq!(coeffs.len(), self.values.len(), "one coefficient per term");
        let mut vals = vec![C64::new(0.0, 0.0); self.pattern.nnz()];
        for (cf, tv) in coeffs.iter().zip(self.values.iter()) {
            if cf.re == 0.0 && cf.im == 0.0 {
                continue;
            }
            for (o, v) in vals.iter_mut().zip(tv.iter()) {
                *o += cf * v;
            }
        }
        SparseOperator {
            dim: self.pattern.dim,
            row_ptr: self.pattern.row_ptr.clone(),
            cols: self.pattern.cols.clone(),
            vals,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{annihilation, tensor, FockOperator};

    #[test]
    fn dense_round_trip_and_matvec() {
        let a = annihilation(6).unwrap();
        let h = &(&a.adjoint() * &a) + &(&a + &a.adjoint());
        let s = SparseOperator::from_dense(&h);
        assert_eq!(s.to_dense(vec![6]), h);
        let x = DVector::from_fn(6, |i, _| C64::new(i as f64, 1.0 - i as f64));
        let dense = h.matrix() * &x;
        assert!((s.mul_vec(&x) - dense).norm() < 1e-14);
    }

    #[test]
    fn combination_matches_dense() {
        let a = annihilation(5).unwrap();
        let i = FockOperator::identity(4).unwrap();
        let x = tensor(&a, &i);
        let y = tensor(&a.adjoint(), &annihilation(4).unwrap());
        let cx = C64::new(0.3, -1.0);
        let cy = C64::new(2.0, 0.5);
        let comb = SparseOperator::linear_combination(&[
            (cx, &SparseOperator::from_dense(&x)),
            (cy, &SparseOperator::from_dense(&y)),
        ]);
        let want = &x.scale(cx) + &y.scale(cy);
        assert!(comb.to_dense(vec![5, 4]).max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn kron_matches_dense_tensor() {
        let a = annihilation(4).unwrap();
        let b = &annihilation(3).unwrap().adjoint() + &FockOperator::identity(3).unwrap();
        let s = SparseOperator::kron(&a, &b);
        assert_eq!(s.to_dense(vec![4, 3]), tensor(&a, &b));
    }

    #[test]
    fn stack_matches_linear_combination() {
        let a = SparseOperator::from_dense(&annihilation(6).unwrap());
        let ad = SparseOperator::from_dense(&annihilation(6).unwrap().adjoint());
        let n = SparseOperator::from_dense(&(&annihilation(6).unwrap().adjoint() * &annihilation(6).unwrap()));
        let coeffs = [C64::new(0.5, 1.0), C64::new(-2.0, 0.0), C64::new(0.0, 3.0)];
        let stack = TermStack::new(&[&a, &ad, &n]);
        let want = SparseOperator::linear_combination(&[(coeffs[0], &a), (coeffs[1], &ad), (coeffs[2], &n)]);
        assert!(
            stack
                .combine(&coeffs)
                .to_dense(vec![6])
                .max_abs_diff(&want.to_dense(vec![6]))
                < 1e-15
        );
    }

    #[test]
    fn gershgorin_encloses_spectrum() {
        let a = annihilation(8).unwrap();
        let h = &(&a.adjoint() * &a) + &(&a + &a.adjoint()).scale(C64::new(0.7, 0.0));
        let (lo, hi) = SparseOperator::from_dense(&h).spectral_bounds();
        let eig = nalgebra::SymmetricEigen::new(h.matrix().clone());
        for e in eig.eigenvalues.iter() {
            assert!(*e >= lo - 1e-12 && *e <= hi + 1e-12);
        }
    }
}
