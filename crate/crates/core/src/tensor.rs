//! Dense 3-tensors and endomorphism-valued one-forms in the standard basis,
//! with the signature-weighted inner product and the pullback action.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::space::HermitianSpace;

/// A real 3-tensor `H(x, y; z)` stored densely as `m^3` components,
/// `H[i][j][k] = H(e_i, e_j; e_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    m: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(m: usize) -> Self {
        Tensor3 {
            m,
            data: vec![0.0; m * m * m],
        }
    }

    pub fn from_vec(m: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != m * m * m {
            return Err(Error::Dimension(format!(
                "expected {} components, got {}",
                m * m * m,
                data.len()
            )));
        }
        Ok(Tensor3 { m, data })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.m + j) * self.m + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.m + j) * self.m + k] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Componentwise Euclidean norm (used for presence thresholds and
    /// relative residuals; the signature-weighted form can be indefinite).
    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
    }

    pub fn scale(&self, c: f64) -> Tensor3 {
        Tensor3 {
            m: self.m,
            data: self.data.iter().map(|x| c * x).collect(),
        }
    }

    pub fn add(&self, other: &Tensor3) -> Tensor3 {
        debug_assert_eq!(self.m, other.m);
        Tensor3 {
            m: self.m,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Tensor3) -> Tensor3 {
        debug_assert_eq!(self.m, other.m);
        Tensor3 {
            m: self.m,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    /// Swaps the first two slots: `out(x, y; z) = H(y, x; z)`.
    pub fn swap12(&self) -> Tensor3 {
        let m = self.m;
        let mut out = Tensor3::zeros(m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out.set(i, j, k, self.get(j, i, k));
                }
            }
        }
        out
    }

    /// Cyclic permutation: `out(x, y; z) = H(y, z; x)`.
    pub fn cycle1(&self) -> Tensor3 {
        let m = self.m;
        let mut out = Tensor3::zeros(m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out.set(i, j, k, self.get(j, k, i));
                }
            }
        }
        out
    }

    /// Cyclic permutation: `out(x, y; z) = H(z, x; y)`.
    pub fn cycle2(&self) -> Tensor3 {
        let m = self.m;
        let mut out = Tensor3::zeros(m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    out.set(i, j, k, self.get(k, i, j));
                }
            }
        }
        out
    }

    /// Substitutes `T` into one slot: `out(.., e_i, ..) = H(.., T e_i, ..)`,
    /// i.e. contracts the slot with the columns of `T`.
    pub fn contract_slot(&self, t: &DMatrix<f64>, slot: usize) -> Tensor3 {
        let m = self.m;
        debug_assert_eq!(t.nrows(), m);
        let mut out = Tensor3::zeros(m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut acc = 0.0;
                    match slot {
                        0 => {
                            for a in 0..m {
                                acc += t[(a, i)] * self.get(a, j, k);
                            }
                        }
                        1 => {
                            for a in 0..m {
                                acc += t[(a, j)] * self.get(i, a, k);
                            }
                        }
                        _ => {
                            for a in 0..m {
                                acc += t[(a, k)] * self.get(i, j, a);
                            }
                        }
                    }
                    out.set(i, j, k, acc);
                }
            }
        }
        out
    }
}

/// Signature-weighted inner product on 3-tensors:
/// `sum eps_i eps_j eps_k A[i][j][k] B[i][j][k]`.
pub fn tensor3_inner(a: &Tensor3, b: &Tensor3, space: &HermitianSpace) -> Result<f64> {
    let m = space.dim();
    if a.dim() != m || b.dim() != m {
        return Err(Error::Dimension(format!(
            "inner product dims {} / {} vs space {}",
            a.dim(),
            b.dim(),
            m
        )));
    }
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            let eij = space.eps(i) * space.eps(j);
            for k in 0..m {
                acc += eij * space.eps(k) * a.get(i, j, k) * b.get(i, j, k);
            }
        }
    }
    Ok(acc)
}

/// Pullback `(T^* H)(x, y; z) = H(Tx, Ty; Tz)`.
pub fn pullback(t: &DMatrix<f64>, h: &Tensor3) -> Result<Tensor3> {
    if t.nrows() != h.dim() || t.ncols() != h.dim() {
        return Err(Error::Dimension(format!(
            "pullback matrix {}x{} vs tensor dim {}",
            t.nrows(),
            t.ncols(),
            h.dim()
        )));
    }
    Ok(h.contract_slot(t, 0).contract_slot(t, 1).contract_slot(t, 2))
}

/// An endomorphism-valued one-form: a matrix `theta(e_k)` for each basis
/// direction, `theta[a][b][k]` meaning `(theta(e_k)) e_b = sum_a theta[a][b][k] e_a`.
#[derive(Debug, Clone)]
pub struct EndoOneForm {
    m: usize,
    mats: Vec<DMatrix<f64>>,
}

impl EndoOneForm {
    pub fn zeros(m: usize) -> Self {
        EndoOneForm {
            m,
            mats: vec![DMatrix::zeros(m, m); m],
        }
    }

    pub fn from_mats(mats: Vec<DMatrix<f64>>) -> Result<Self> {
        let m = mats.len();
        for mat in &mats {
            if mat.nrows() != m || mat.ncols() != m {
                return Err(Error::Dimension(
                    "each endomorphism must be m x m with one per direction".into(),
                ));
            }
        }
        Ok(EndoOneForm { m, mats })
    }

    /// A single generator `theta0 (x) e^k`: the matrix attached to direction
    /// `k`, zero elsewhere.
    pub fn single(m: usize, k: usize, mat: DMatrix<f64>) -> Self {
        let mut e = EndoOneForm::zeros(m);
        e.mats[k] = mat;
        e
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn mat(&self, k: usize) -> &DMatrix<f64> {
        &self.mats[k]
    }

    pub fn mats(&self) -> &[DMatrix<f64>] {
        &self.mats
    }

    pub fn get(&self, a: usize, b: usize, k: usize) -> f64 {
        self.mats[k][(a, b)]
    }

    /// `theta` evaluated on an arbitrary vector: `sum_k v[k] theta(e_k)`.
    pub fn eval(&self, v: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.m, self.m);
        for (k, mat) in self.mats.iter().enumerate() {
            if v[k] != 0.0 {
                out += mat * v[k];
            }
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.mats.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &EndoOneForm) -> EndoOneForm {
        debug_assert_eq!(self.m, other.m);
        EndoOneForm {
            m: self.m,
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn scale(&self, c: f64) -> EndoOneForm {
        EndoOneForm {
            m: self.m,
            mats: self.mats.iter().map(|m| m * c).collect(),
        }
    }

    /// The conjugation-pullback action of a group element:
    /// `(T^* theta)(z) = T^{-1} theta(T z) T`.
    pub fn pullback(&self, t: &DMatrix<f64>) -> EndoOneForm {
        let m = self.m;
        let t_inv = t.clone().try_inverse().expect("group element is invertible");
        let mats = (0..m)
            .map(|k| {
                let mut combined = DMatrix::zeros(m, m);
                for r in 0..m {
                    if t[(r, k)] != 0.0 {
                        combined += &self.mats[r] * t[(r, k)];
                    }
                }
                &t_inv * combined * t
            })
            .collect();
        EndoOneForm { m, mats }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{sample_group, HermitianSpace, Kind};

    #[test]
    fn inner_product_basics() {
        let s = HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap();
        let z = Tensor3::zeros(6);
        assert_eq!(tensor3_inner(&z, &z, &s).unwrap(), 0.0);
        let mut a = Tensor3::zeros(6);
        a.set(0, 1, 2, 1.0);
        assert_eq!(tensor3_inner(&a, &a, &s).unwrap(), 1.0);
    }

    #[test]
    fn inner_product_sign_triple() {
        // signature (2,4): eps(e_1) = -1; delta at 1-based (1,3,5) = e_1, e_3, f_2
        let s = HermitianSpace::new(6, 2, 4, Kind::Pseudo).unwrap();
        let mut a = Tensor3::zeros(6);
        a.set(0, 2, 4, 1.0);
        assert_eq!(s.eps(0), -1.0);
        assert_eq!(tensor3_inner(&a, &a, &s).unwrap(), -1.0);
    }

    #[test]
    fn inner_product_gram_is_diagonal_signs() {
        let s = HermitianSpace::new(4, 2, 2, Kind::Para).unwrap();
        let m = 4;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let mut a = Tensor3::zeros(m);
                    a.set(i, j, k, 1.0);
                    let v = tensor3_inner(&a, &a, &s).unwrap();
                    assert!((v.abs() - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn pullback_identity_and_scaling() {
        let mut h = Tensor3::zeros(4);
        h.set(1, 2, 3, 2.5);
        h.set(0, 0, 1, -1.0);
        let id = DMatrix::identity(4, 4);
        assert_eq!(pullback(&id, &h).unwrap(), h);
        let two = &id * 2.0;
        let scaled = pullback(&two, &h).unwrap();
        assert!((scaled.get(1, 2, 3) - 8.0 * 2.5).abs() < 1e-14);
    }

    #[test]
    fn pullback_swap_scales_by_eps_product() {
        // T* e^I = <e^I, e^I> e^I for the swap element applied to a
        // single-entry tensor
        let s = HermitianSpace::new(6, 2, 4, Kind::Pseudo).unwrap();
        let t0 = s.swap_element();
        let mut h = Tensor3::zeros(6);
        h.set(0, 3, 4, 1.0);
        let pulled = pullback(&t0, &h).unwrap();
        let expect = t0[(0, 0)] * t0[(3, 3)] * t0[(4, 4)];
        assert_eq!(pulled.get(0, 3, 4), expect);
    }

    #[test]
    fn pullback_contravariance() {
        let s = HermitianSpace::new(6, 3, 3, Kind::Para).unwrap();
        let t1 = sample_group(&s, false, 7).mat;
        let t2 = sample_group(&s, true, 11).mat;
        let mut h = Tensor3::zeros(6);
        for (n, v) in h.data.iter_mut().enumerate() {
            *v = ((n * 37 % 101) as f64 - 50.0) / 50.0;
        }
        let lhs = pullback(&t1, &pullback(&t2, &h).unwrap()).unwrap();
        let rhs = pullback(&(&t2 * &t1), &h).unwrap();
        assert!(lhs.sub(&rhs).max_abs() < 1e-12);
    }
}
