//! Signature-aware linear algebra: inner-product spaces carrying a standard
//! (para-)complex structure, structure-group sampling and the matrix exponential.
//!
//! The basis convention is `{e_1, .., e_mbar, f_1, .., f_mbar}` with
//! `J0 e_i = f_i` and `J0 f_i = ±e_i` (plus for the para kind, minus for the
//! pseudo kind). All tensors handled by the crate are expressed in this basis.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the two structure kinds a space carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// `J0^2 = +Id`, `J0^* g = -g`; forces split signature `p = q`.
    Para,
    /// `J0^2 = -Id`, `J0^* g = g`; forces `p` and `q` even.
    Pseudo,
}

impl Kind {
    /// The sign `s` that stands for the upper/lower choice in every
    /// double-signed formula: `+1` for para, `-1` for pseudo.
    pub fn sign(self) -> f64 {
        match self {
            Kind::Para => 1.0,
            Kind::Pseudo => -1.0,
        }
    }
}

/// An inner-product space of even dimension with signature data and the
/// standard structure `J0`.
#[derive(Debug, Clone)]
pub struct HermitianSpace {
    m: usize,
    p: usize,
    q: usize,
    kind: Kind,
    eps: Vec<f64>,
    j0: DMatrix<f64>,
}

impl HermitianSpace {
    /// Builds the standard space of dimension `m` and signature `(p, q)`.
    ///
    /// Timelike basis vectors come first within the `e` block; for the pseudo
    /// kind `eps(f_i) = eps(e_i)`, for the para kind `eps(f_i) = -eps(e_i)`
    /// (the para layout puts all `e_i` timelike).
    pub fn new(m: usize, p: usize, q: usize, kind: Kind) -> Result<Self> {
        if m < 4 || !m.is_multiple_of(2) {
            return Err(Error::Dimension(format!("m = {m} must be even and >= 4")));
        }
        if p + q != m {
            return Err(Error::Dimension(format!("p + q = {} != m = {m}", p + q)));
        }
        match kind {
            Kind::Para => {
                if p != q {
                    return Err(Error::Parity(format!(
                        "para kind requires p = q, got ({p}, {q})"
                    )));
                }
            }
            Kind::Pseudo => {
                if !p.is_multiple_of(2) || !q.is_multiple_of(2) {
                    return Err(Error::Parity(format!(
                        "pseudo kind requires p, q even, got ({p}, {q})"
                    )));
                }
            }
        }
        let mbar = m / 2;
        let mut eps = vec![1.0; m];
        match kind {
            Kind::Pseudo => {
                for i in 0..p / 2 {
                    eps[i] = -1.0;
                    eps[mbar + i] = -1.0;
                }
            }
            Kind::Para => {
                for i in 0..mbar {
                    eps[i] = -1.0;
                    eps[mbar + i] = 1.0;
                }
            }
        }
        Ok(Self::from_parts(kind, eps))
    }

    /// Builds a space from an explicit `eps` layout (used for product spaces,
    /// whose sign pattern need not be timelike-first). The `e`/`f` pairing and
    /// `J0` are still the standard ones, and the kind constraint between
    /// `eps(e_i)` and `eps(f_i)` must hold.
    pub fn from_parts(kind: Kind, eps: Vec<f64>) -> Self {
        let m = eps.len();
        let mbar = m / 2;
        debug_assert!(m >= 4 && m.is_multiple_of(2));
        for i in 0..mbar {
            match kind {
                Kind::Pseudo => debug_assert_eq!(eps[i], eps[mbar + i]),
                Kind::Para => debug_assert_eq!(eps[i], -eps[mbar + i]),
            }
        }
        let mut j0 = DMatrix::zeros(m, m);
        for i in 0..mbar {
            // J0 e_i = f_i, J0 f_i = sign * e_i
            j0[(mbar + i, i)] = 1.0;
            j0[(i, mbar + i)] = kind.sign();
        }
        let p = eps.iter().filter(|&&e| e < 0.0).count();
        HermitianSpace {
            m,
            p,
            q: m - p,
            kind,
            eps,
            j0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn half_dim(&self) -> usize {
        self.m / 2
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.p, self.q)
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    /// The sign of the double-signed formulas: `+1` para, `-1` pseudo.
    pub fn sign(&self) -> f64 {
        self.kind.sign()
    }

    pub fn eps(&self, i: usize) -> f64 {
        self.eps[i]
    }

    pub fn eps_slice(&self) -> &[f64] {
        &self.eps
    }

    pub fn j0(&self) -> &DMatrix<f64> {
        &self.j0
    }

    /// The Gram matrix `G = diag(eps)`.
    pub fn metric(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(&self.eps))
    }

    /// `J0 e_i` as a signed basis vector: returns `(row, sign)`.
    pub fn j_image(&self, i: usize) -> (usize, f64) {
        let mbar = self.m / 2;
        if i < mbar {
            (mbar + i, 1.0)
        } else {
            (i - mbar, self.kind.sign())
        }
    }

    /// The adjoint `A* = G^{-1} A^T G` with respect to the inner product.
    pub fn adjoint(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = a.transpose();
        for i in 0..self.m {
            for j in 0..self.m {
                out[(i, j)] *= self.eps[i] * self.eps[j];
            }
        }
        out
    }

    /// The fixed element anticommuting with `J0` and squaring to the
    /// identity: `e_i -> e_i, f_i -> -f_i` (pseudo) or `e_i -> -e_i,
    /// f_i -> f_i` (para, the `±Id` on the timelike/spacelike split).
    pub fn swap_element(&self) -> DMatrix<f64> {
        let mbar = self.m / 2;
        let mut t = DMatrix::identity(self.m, self.m);
        match self.kind {
            Kind::Pseudo => {
                for i in mbar..self.m {
                    t[(i, i)] = -1.0;
                }
            }
            Kind::Para => {
                for i in 0..mbar {
                    t[(i, i)] = -1.0;
                }
            }
        }
        t
    }
}

/// An element of the structure group `U±*`: an isometry commuting or
/// anticommuting with `J0`, together with the character value `chi`.
#[derive(Debug, Clone)]
pub struct GroupElement {
    pub mat: DMatrix<f64>,
    /// `+1` when the element commutes with `J0`, `-1` when it anticommutes.
    pub chi: f64,
}

/// Matrix exponential by scaling-and-squaring with a Taylor core.
pub fn exp_matrix(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    let norm = a.norm();
    let scalings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a / 2f64.powi(scalings as i32);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..=24 {
        term = &term * &b / k as f64;
        result += &term;
        if term.norm() < 1e-300 {
            break;
        }
    }
    for _ in 0..scalings {
        result = &result * &result;
    }
    result
}

/// Samples a seeded element of the structure group.
///
/// The commuting part is `exp(A)` for a random `G`-skew-adjoint matrix `A`
/// commuting with `J0`, scaled so `|A| <= 1`. When `want_anticommuting` is
/// set the result is composed with the fixed swap element.
pub fn sample_group(space: &HermitianSpace, want_anticommuting: bool, seed: u64) -> GroupElement {
    let m = space.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    // project onto the J0-commuting part, then onto the skew-adjoint part
    let j0 = space.j0();
    let j0_inv = j0 * space.sign(); // J0^{-1} = s * J0 for both kinds
    let commuting = (&raw + j0 * &raw * &j0_inv) * 0.5;
    let mut skew = (&commuting - space.adjoint(&commuting)) * 0.5;
    let norm = skew.norm();
    if norm > 1.0 {
        skew /= norm;
    }
    let mut mat = exp_matrix(&skew);
    let mut chi = 1.0;
    if want_anticommuting {
        mat *= space.swap_element();
        chi = -1.0;
    }
    GroupElement { mat, chi }
}
