//! Small dense complex linear algebra for beamforming.
//!
//! Channel rows are short (one per transmit antenna), so everything here is
//! plain O(n^3) with partial pivoting; no BLAS. The only nontrivial entry
//! point is [`right_pseudo_inverse`], which computes `W = H^H (H H^H)^-1`
//! for a full-row-rank `M x N` matrix (`M <= N`). For square `H` this is
//! evaluated as a direct LU inverse of `H`, which is the same matrix with a
//! much better error constant. A Tikhonov-regularized fallback handles
//! ill-conditioned draws.

use num_complex::Complex;

use crate::scalar::Scalar;

pub type CVec<S> = Vec<Complex<S>>;

/// Plain (unconjugated) product `sum_i a_i b_i`, the row-times-column
/// product used for `h * w`.
pub fn dot<S: Scalar>(a: &[Complex<S>], b: &[Complex<S>]) -> Complex<S> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex::new(S::zero(), S::zero());
    for (x, y) in a.iter().zip(b) {
        acc = acc + x * y;
    }
    acc
}

/// Hermitian product `sum_i a_i conj(b_i)` (`a * b^H` for row vectors).
pub fn dot_conj<S: Scalar>(a: &[Complex<S>], b: &[Complex<S>]) -> Complex<S> {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = Complex::new(S::zero(), S::zero());
    for (x, y) in a.iter().zip(b) {
        acc = acc + x * y.conj();
    }
    acc
}

pub fn norm_sqr<S: Scalar>(a: &[Complex<S>]) -> S {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm<S: Scalar>(a: &[Complex<S>]) -> S {
    norm_sqr(a).sqrt()
}

/// Row-major dense complex matrix.
#[derive(Debug, Clone)]
pub struct CMat<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex<S>>,
}

impl<S: Scalar> CMat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Complex::new(S::zero(), S::zero()); rows * cols],
        }
    }

    pub fn from_rows(rows: &[&[Complex<S>]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            debug_assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex<S> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut Complex<S> {
        &mut self.data[r * self.cols + c]
    }

    pub fn col(&self, c: usize) -> CVec<S> {
        (0..self.rows).map(|r| self.at(r, c)).collect()
    }

    /// One-norm (max absolute column sum).
    pub fn norm_1(&self) -> S {
        let mut best = S::zero();
        for c in 0..self.cols {
            let s: S = (0..self.rows).map(|r| self.at(r, c).norm()).sum();
            if s > best {
                best = s;
            }
        }
        best
    }

    /// `A A^H` (rows x rows, Hermitian).
    pub fn gram(&self) -> CMat<S> {
        let mut g = CMat::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in 0..self.rows {
                let a = &self.data[i * self.cols..(i + 1) * self.cols];
                let b = &self.data[j * self.cols..(j + 1) * self.cols];
                *g.at_mut(i, j) = dot_conj(a, b);
            }
        }
        g
    }

    pub fn trace_real(&self) -> S {
        (0..self.rows.min(self.cols)).map(|i| self.at(i, i).re).sum()
    }
}

/// Inverse of a square matrix via LU with partial pivoting.
/// Returns `None` on pivot breakdown (numerically singular input).
pub fn lu_inverse<S: Scalar>(a: &CMat<S>) -> Option<CMat<S>> {
    debug_assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let mut p = k;
        let mut best = lu.at(k, k).norm();
        for r in k + 1..n {
            let v = lu.at(r, k).norm();
            if v > best {
                best = v;
                p = r;
            }
        }
        if !(best > S::zero()) || !best.is_finite() {
            return None;
        }
        if p != k {
            for c in 0..n {
                let tmp = lu.at(k, c);
                *lu.at_mut(k, c) = lu.at(p, c);
                *lu.at_mut(p, c) = tmp;
            }
            perm.swap(k, p);
        }
        let piv = lu.at(k, k);
        for r in k + 1..n {
            let f = lu.at(r, k) / piv;
            *lu.at_mut(r, k) = f;
            for c in k + 1..n {
                let v = lu.at(r, c) - f * lu.at(k, c);
                *lu.at_mut(r, c) = v;
            }
        }
    }

    // Solve A x = e_j for each unit vector.
    let mut inv = CMat::zeros(n, n);
    let zero = Complex::new(S::zero(), S::zero());
    let one = Complex::new(S::one(), S::zero());
    let mut y = vec![zero; n];
    for j in 0..n {
        for i in 0..n {
            let mut v = if perm[i] == j { one } else { zero };
            for c in 0..i {
                v = v - lu.at(i, c) * y[c];
            }
            y[i] = v;
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for c in i + 1..n {
                v = v - lu.at(i, c) * inv.at(c, j);
            }
            *inv.at_mut(i, j) = v / lu.at(i, i);
        }
    }
    Some(inv)
}

/// Result of [`right_pseudo_inverse`]: pseudo-inverse columns plus a cheap
/// 1-norm condition estimate and whether regularization kicked in.
#[derive(Debug, Clone)]
pub struct PseudoInverse<S> {
    /// Columns of `W` (one per row of `H`), each of length `H.cols`.
    pub columns: Vec<CVec<S>>,
    /// 1-norm condition estimate of `H` (square) or `sqrt(cond_1(H H^H))`.
    pub cond: S,
    pub regularized: bool,
}

/// Moore-Penrose right pseudo-inverse `W = H^H (H H^H)^-1` of a wide or
/// square full-row-rank matrix. When the condition estimate exceeds
/// `cond_limit` (or the factorization breaks down) the Gram matrix is
/// Tikhonov-regularized with `eps = eps_scale * trace(H H^H) / M` and the
/// result is flagged.
pub fn right_pseudo_inverse<S: Scalar>(h: &CMat<S>, cond_limit: S, eps_scale: S) -> PseudoInverse<S> {
    debug_assert!(h.rows <= h.cols);
    let m = h.rows;

    if m == h.cols {
        if let Some(inv) = lu_inverse(h) {
            let cond = h.norm_1() * inv.norm_1();
            if cond.is_finite() && cond <= cond_limit {
                let columns = (0..m).map(|c| inv.col(c)).collect();
                return PseudoInverse { columns, cond, regularized: false };
            }
        }
    } else {
        let gram = h.gram();
        if let Some(ginv) = lu_inverse(&gram) {
            let cond_g = gram.norm_1() * ginv.norm_1();
            let cond = cond_g.max(S::one()).sqrt();
            if cond.is_finite() && cond <= cond_limit {
                return PseudoInverse {
                    columns: pinv_from_gram_inverse(h, &ginv),
                    cond,
                    regularized: false,
                };
            }
        }
    }

    // Regularized fallback.
    let mut gram = h.gram();
    let eps = eps_scale * gram.trace_real() / S::of(m as f64);
    let eps = if eps > S::zero() { eps } else { eps_scale };
    for i in 0..m {
        *gram.at_mut(i, i) = gram.at(i, i) + Complex::new(eps, S::zero());
    }
    let ginv = lu_inverse(&gram).expect("regularized Gram matrix is positive definite");
    PseudoInverse {
        columns: pinv_from_gram_inverse(h, &ginv),
        cond: S::infinity(),
        regularized: true,
    }
}

/// `W = H^H G` column extraction, `G` being `(H H^H)^-1` (possibly regularized).
fn pinv_from_gram_inverse<S: Scalar>(h: &CMat<S>, ginv: &CMat<S>) -> Vec<CVec<S>> {
    let m = h.rows;
    let n = h.cols;
    (0..m)
        .map(|col| {
            (0..n)
                .map(|i| {
                    let mut acc = Complex::new(S::zero(), S::zero());
                    for k in 0..m {
                        acc = acc + h.at(k, i).conj() * ginv.at(k, col);
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lu_inverse_2x2_hand_value() {
        // [[1, i], [0, 2]]^-1 = [[1, -i/2], [0, 1/2]]
        let a = CMat {
            rows: 2,
            cols: 2,
            data: vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(2.0, 0.0)],
        };
        let inv = lu_inverse(&a).unwrap();
        assert!((inv.at(0, 0) - c(1.0, 0.0)).norm() < 1e-14);
        assert!((inv.at(0, 1) - c(0.0, -0.5)).norm() < 1e-14);
        assert!((inv.at(1, 0)).norm() < 1e-14);
        assert!((inv.at(1, 1) - c(0.5, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = CMat {
            rows: 2,
            cols: 2,
            data: vec![c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)],
        };
        assert!(lu_inverse(&a).is_none());
    }

    #[test]
    fn pseudo_inverse_of_row_vector() {
        // Single row: W column is h^H / ||h||^2, so h * w = 1.
        let row = vec![c(3.0, 4.0), c(0.0, 1.0)];
        let h = CMat::from_rows(&[&row]);
        let p = right_pseudo_inverse(&h, 1e9, 1e-10);
        assert!(!p.regularized);
        let hw = dot(&row, &p.columns[0]);
        assert!((hw - c(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn square_pinv_gives_identity() {
        let r0 = vec![c(1.0, 0.2), c(-0.3, 0.7), c(0.5, -0.1)];
        let r1 = vec![c(0.1, -1.0), c(0.8, 0.0), c(-0.6, 0.4)];
        let r2 = vec![c(-0.2, 0.3), c(0.4, 0.9), c(1.1, 0.0)];
        let h = CMat::from_rows(&[&r0, &r1, &r2]);
        let p = right_pseudo_inverse(&h, 1e9, 1e-10);
        assert!(!p.regularized);
        for (i, row) in [&r0, &r1, &r2].iter().enumerate() {
            for (j, col) in p.columns.iter().enumerate() {
                let v = dot(row, col);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - c(expect, 0.0)).norm() < 1e-10, "entry ({i},{j}) = {v}");
            }
        }
    }

    #[test]
    fn wide_pinv_gives_identity() {
        let r0 = vec![c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.5)];
        let r1 = vec![c(-0.5, 0.2), c(1.0, -0.4), c(0.0, 0.9)];
        let h = CMat::from_rows(&[&r0, &r1]);
        let p = right_pseudo_inverse(&h, 1e9, 1e-10);
        assert!(!p.regularized);
        for (i, row) in [&r0, &r1].iter().enumerate() {
            for (j, col) in p.columns.iter().enumerate() {
                let v = dot(row, col);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - c(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rank_deficient_falls_back_to_regularized() {
        let r0 = vec![c(1.0, 0.0), c(2.0, 0.0)];
        let r1 = vec![c(2.0, 0.0), c(4.0, 0.0)];
        let h = CMat::from_rows(&[&r0, &r1]);
        let p = right_pseudo_inverse(&h, 1e6, 1e-10);
        assert!(p.regularized);
        // Still yields finite vectors.
        for col in &p.columns {
            assert!(col.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
        }
    }

    #[test]
    fn generic_f32_instantiation() {
        let row = vec![Complex::<f32>::new(1.0, 0.0), Complex::<f32>::new(0.0, 1.0)];
        let h = CMat::from_rows(&[&row[..]]);
        let p = right_pseudo_inverse(&h, 1e6_f32, 1e-6_f32);
        let hw = dot(&row, &p.columns[0]);
        assert!((hw - Complex::<f32>::new(1.0, 0.0)).norm() < 1e-5);
    }
}
