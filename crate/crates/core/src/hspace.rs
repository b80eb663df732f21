//! The constrained tensor space, its four-part orthogonal decomposition and
//! the 16-class classifier.
//!
//! A tensor `H` belongs to the constrained space when it is antisymmetric in
//! its first two slots and satisfies `H(Jx, Jy; z) = s H(x, y; z)` where `s`
//! is `+1` for the para kind and `-1` for the pseudo kind. The space splits
//! orthogonally into four summands `W1..W4`; subsets of the summands index
//! the sixteen classes.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::space::HermitianSpace;
use crate::tensor::Tensor3;

/// Default relative tolerance for membership and presence decisions.
pub const DEFAULT_TOL: f64 = 1e-8;

/// `H(x, Jy; Jz)`: the J-twist of the last two slots, the building block of
/// the projectors.
pub fn j_last_two(h: &Tensor3, space: &HermitianSpace) -> Tensor3 {
    let j = space.j0();
    h.contract_slot(j, 1).contract_slot(j, 2)
}

/// `H(Jx, Jy; z)`: the J-twist of the first two slots.
pub fn j_first_two(h: &Tensor3, space: &HermitianSpace) -> Tensor3 {
    let j = space.j0();
    h.contract_slot(j, 0).contract_slot(j, 1)
}

/// Maximum violation of the two defining symmetries over all basis triples;
/// zero exactly when `H` lies in the constrained space.
pub fn membership_residual(h: &Tensor3, space: &HermitianSpace) -> Result<f64> {
    check_dims(h, space)?;
    let s = space.sign();
    let anti = h.add(&h.swap12()).max_abs();
    let jj = j_first_two(h, space).sub(&h.scale(s)).max_abs();
    Ok(anti.max(jj))
}

/// Orthogonal projection of an arbitrary 3-tensor onto the constrained
/// space: `(1/4){T(x,y;z) - T(y,x;z) + s T(Jx,Jy;z) - s T(Jy,Jx;z)}`.
pub fn project_to_hspace(t: &Tensor3, space: &HermitianSpace) -> Result<Tensor3> {
    check_dims(t, space)?;
    let s = space.sign();
    let jj = j_first_two(t, space);
    Ok(t
        .sub(&t.swap12())
        .add(&jj.scale(s))
        .sub(&jj.swap12().scale(s))
        .scale(0.25))
}

/// The trace over the last two slots: `(tau1 H)[i] = sum_j eps_j H[i][j][j]`.
pub fn tau1(h: &Tensor3, space: &HermitianSpace) -> Result<Vec<f64>> {
    check_dims(h, space)?;
    let m = space.dim();
    let mut out = vec![0.0; m];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..m {
            *o += space.eps(j) * h.get(i, j, j);
        }
    }
    Ok(out)
}

/// The splitting map from covectors into the constrained space:
/// `sigma(phi)(x,y;z) = phi(Jx)<y,z> - phi(Jy)<x,z> + phi(x)<Jy,z> - phi(y)<Jx,z>`.
pub fn sigma(phi: &[f64], space: &HermitianSpace) -> Result<Tensor3> {
    let m = space.dim();
    if phi.len() != m {
        return Err(Error::Dimension(format!(
            "covector length {} vs space dim {m}",
            phi.len()
        )));
    }
    let j = space.j0();
    // phi(J e_i) = sum_a J[a][i] phi[a]
    let jphi: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|a| j[(a, i)] * phi[a]).sum())
        .collect();
    let mut out = Tensor3::zeros(m);
    for i in 0..m {
        for jx in 0..m {
            for k in 0..m {
                let mut v = 0.0;
                if jx == k {
                    v += jphi[i] * space.eps(jx);
                }
                if i == k {
                    v -= jphi[jx] * space.eps(i);
                }
                // <J e_j, e_k> = eps_k J[k][j]
                v += phi[i] * space.eps(k) * j[(k, jx)];
                v -= phi[jx] * space.eps(k) * j[(k, i)];
                out.set(i, jx, k, v);
            }
        }
    }
    Ok(out)
}

/// `(J^* phi)[i] = phi(J e_i)`.
pub fn j_pullback_covector(phi: &[f64], space: &HermitianSpace) -> Vec<f64> {
    let m = space.dim();
    let j = space.j0();
    (0..m)
        .map(|i| (0..m).map(|a| j[(a, i)] * phi[a]).sum())
        .collect()
}

fn check_dims(h: &Tensor3, space: &HermitianSpace) -> Result<()> {
    if h.dim() != space.dim() {
        return Err(Error::Dimension(format!(
            "tensor dim {} vs space dim {}",
            h.dim(),
            space.dim()
        )));
    }
    Ok(())
}

fn check_membership(h: &Tensor3, space: &HermitianSpace) -> Result<()> {
    let residual = membership_residual(h, space)?;
    if residual > DEFAULT_TOL * 1.0f64.max(h.max_abs()) {
        return Err(Error::NotInHSpace { residual });
    }
    Ok(())
}

/// The projector formulas, applied without the membership precondition.
/// Valid on the constrained space only; `decompose` and the rank
/// certificates compose them with `project_to_hspace`.
pub(crate) fn project_component_raw(h: &Tensor3, i: usize, space: &HermitianSpace) -> Tensor3 {
    let s = space.sign();
    match i {
        1 => {
            let l = h.add(&j_last_two(h, space).scale(s));
            l.add(&l.cycle1()).add(&l.cycle2()).scale(1.0 / 6.0)
        }
        2 => {
            let l = h.add(&j_last_two(h, space).scale(s));
            l.scale(2.0)
                .sub(&l.cycle1())
                .sub(&l.cycle2())
                .scale(1.0 / 6.0)
        }
        3 => h.sub(&j_last_two(h, space).scale(s)).scale(0.5),
        4 => {
            let t = tau1(h, space).expect("dims already checked");
            let jt = j_pullback_covector(&t, space);
            let m = space.dim() as f64;
            sigma(&jt, space)
                .expect("dims already checked")
                .scale(s / (m - 2.0))
        }
        _ => panic!("component index must be 1..=4"),
    }
}

/// Projection onto the i-th piece: `i = 1, 2` the irreducible summands
/// `W1, W2`; `i = 3` the subspace `U3`; `i = 4` the summand `W4`.
pub fn project_component(h: &Tensor3, i: usize, space: &HermitianSpace) -> Result<Tensor3> {
    check_dims(h, space)?;
    if !(1..=4).contains(&i) {
        return Err(Error::Dimension(format!("component index {i} not in 1..=4")));
    }
    check_membership(h, space)?;
    Ok(project_component_raw(h, i, space))
}

/// Class membership flags plus the conventional class name when the subset
/// matches one of the eight named classes (pseudo kind only).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassLabel {
    /// Presence flags for `W1..W4`.
    pub flags: [bool; 4],
    pub name: Option<String>,
}

impl ClassLabel {
    pub fn subset_string(&self) -> String {
        let parts: Vec<&str> = self
            .flags
            .iter()
            .zip(["W1", "W2", "W3", "W4"])
            .filter_map(|(&on, name)| on.then_some(name))
            .collect();
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join("\u{2295}")
        }
    }
}

fn named_class(flags: [bool; 4], space: &HermitianSpace) -> Option<String> {
    if space.kind() != crate::space::Kind::Pseudo {
        return None;
    }
    let name = match flags {
        [false, false, false, false] => "K\u{e4}hler",
        [true, false, false, false] => "nearly K\u{e4}hler",
        [false, true, false, false] => "almost K\u{e4}hler",
        [false, false, true, false] => "Hermitian semi-K\u{e4}hler",
        [true, true, false, false] => "quasi-K\u{e4}hler",
        [false, false, true, true] => "pseudo-Hermitian",
        [true, true, true, false] => "semi-K\u{e4}hler",
        [true, true, true, true] => "almost pseudo-Hermitian",
        _ => return None,
    };
    // dimension 4 collapses W1 and W3; a name that needs them is never
    // certified there
    if space.dim() == 4 && (flags[0] || flags[2]) {
        return None;
    }
    Some(name.to_string())
}

/// The four component tensors with norms, trace, residuals and class label.
#[derive(Debug, Clone)]
pub struct DecompositionReport {
    pub components: [Tensor3; 4],
    pub tau1: Vec<f64>,
    pub norms: [f64; 4],
    pub residual_membership: f64,
    pub residual_reconstruction: f64,
    pub label: ClassLabel,
}

/// Splits `H` into its four components, checks the reconstruction and labels
/// the class. `tol` is the relative presence threshold for the flags.
pub fn decompose(h: &Tensor3, space: &HermitianSpace, tol: f64) -> Result<DecompositionReport> {
    check_dims(h, space)?;
    let scale = 1.0f64.max(h.max_abs());
    let residual_membership = membership_residual(h, space)?;
    if residual_membership > tol * scale {
        return Err(Error::NotInHSpace {
            residual: residual_membership,
        });
    }
    let h1 = project_component_raw(h, 1, space);
    let h2 = project_component_raw(h, 2, space);
    let h4 = project_component_raw(h, 4, space);
    let u3 = project_component_raw(h, 3, space);
    let h3 = u3.sub(&h4);

    let norm_scale = 1.0f64.max(h.frob_norm());
    // W3 extraction cross-check: the complement route must agree
    let alt3 = h.sub(&h1).sub(&h2).sub(&h4);
    let cross = h3.sub(&alt3).frob_norm() / norm_scale;
    let recon = h
        .sub(&h1.add(&h2).add(&h3).add(&h4))
        .frob_norm()
        / norm_scale;
    let residual_reconstruction = recon.max(cross);
    if residual_reconstruction > 100.0 * tol {
        return Err(Error::Tolerance {
            residual: residual_reconstruction,
        });
    }

    let components = [h1, h2, h3, h4];
    let norms = [
        components[0].frob_norm(),
        components[1].frob_norm(),
        components[2].frob_norm(),
        components[3].frob_norm(),
    ];
    let mut flags = [false; 4];
    for (flag, norm) in flags.iter_mut().zip(norms) {
        *flag = norm > tol * norm_scale;
    }
    let label = ClassLabel {
        flags,
        name: named_class(flags, space),
    };
    Ok(DecompositionReport {
        tau1: tau1(h, space)?,
        components,
        norms,
        residual_membership,
        residual_reconstruction,
        label,
    })
}

/// The class label of `H` (see `decompose`).
pub fn classify(h: &Tensor3, space: &HermitianSpace, tol: f64) -> Result<ClassLabel> {
    Ok(decompose(h, space, tol)?.label)
}

/// Numerically certified dimensions of the constrained space and its pieces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ModuleDims {
    pub dim_h: usize,
    pub dim_w: [usize; 4],
    pub dim_u3: usize,
}

/// Rank of a linear map on the `m^3`-dimensional coordinate space, with the
/// threshold at `1e-8` of the largest singular value.
fn map_rank<F: Fn(&Tensor3) -> Tensor3>(m: usize, f: F) -> usize {
    let n = m * m * m;
    let mut data = Vec::with_capacity(n * n);
    for col in 0..n {
        let mut basis = Tensor3::zeros(m);
        let (i, rest) = (col / (m * m), col % (m * m));
        basis.set(i, rest / m, rest % m, 1.0);
        data.extend_from_slice(f(&basis).data());
    }
    let mat = DMatrix::from_vec(n, n, data);
    rank_of(&mat)
}

pub(crate) fn rank_of(mat: &DMatrix<f64>) -> usize {
    let sv = mat.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > 1e-8 * max).count()
}

/// Ranks of the membership projection and of each component projector
/// composed with it.
pub fn module_dimensions(space: &HermitianSpace) -> ModuleDims {
    let m = space.dim();
    let proj = |t: &Tensor3| project_to_hspace(t, space).expect("dims match");
    let dim_h = map_rank(m, proj);
    let comp_rank = |i: usize| {
        map_rank(m, |t| {
            project_component_raw(&project_to_hspace(t, space).expect("dims match"), i, space)
        })
    };
    let dim_w1 = comp_rank(1);
    let dim_w2 = comp_rank(2);
    let dim_u3 = comp_rank(3);
    let dim_w4 = comp_rank(4);
    let dim_w3 = map_rank(m, |t| {
        let h = project_to_hspace(t, space).expect("dims match");
        project_component_raw(&h, 3, space).sub(&project_component_raw(&h, 4, space))
    });
    ModuleDims {
        dim_h,
        dim_w: [dim_w1, dim_w2, dim_w3, dim_w4],
        dim_u3,
    }
}

/// A seeded random element of the constrained space (uniform entries pushed
/// through the membership projection).
pub fn random_hspace_element(space: &HermitianSpace, seed: u64) -> Tensor3 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = space.dim();
    let raw: Vec<f64> = (0..m * m * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let t = Tensor3::from_vec(m, raw).expect("sized correctly");
    project_to_hspace(&t, space).expect("dims match")
}
