//! The algebraic realization maps: the first-order effect on the covariant
//! derivative of the K\u{e4}hler form of perturbing the structure (`xi`,
//! over skew-adjoint-valued one-forms) or the metric (`xi_tilde`, over
//! `J0`-commuting-valued one-forms), their inversion by minimum-norm least
//! squares, and numerical surjectivity certificates.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hspace::{self, DecompositionReport};
use crate::space::HermitianSpace;
use crate::tensor::{EndoOneForm, Tensor3};

/// Which sign layout of the metric-perturbation formula to evaluate.
///
/// The published display carries an asymmetric sign pattern that breaks the
/// antisymmetry of the output in its first two arguments; `SignCorrected`
/// is the antisymmetrized layout derived from the Koszul formula, and the
/// finite-difference oracle in the geometry module selects between the two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum XiTildeVariant {
    AsPrinted,
    SignCorrected,
}

/// Relative residual threshold above which a least-squares solve is
/// reported as rank deficient.
pub const SOLVE_RESIDUAL_THRESHOLD: f64 = 1e-6;

pub(crate) fn skew_residual(theta: &EndoOneForm, space: &HermitianSpace) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..space.dim() {
        let mat = theta.mat(k);
        let r = (mat + space.adjoint(mat)).norm();
        worst = worst.max(r);
    }
    worst
}

pub(crate) fn commuting_residual(theta: &EndoOneForm, space: &HermitianSpace) -> f64 {
    let j = space.j0();
    let mut worst = 0.0f64;
    for k in 0..space.dim() {
        let mat = theta.mat(k);
        worst = worst.max((mat * j - j * mat).norm());
    }
    worst
}

/// `xi(theta)(x, y; z) = <x, (J theta(z) - theta(z) J) y>`.
///
/// `theta(e_k)` must be skew-adjoint for every `k`; the image lies in the
/// constrained space.
pub fn xi(theta: &EndoOneForm, space: &HermitianSpace) -> Result<Tensor3> {
    let m = space.dim();
    if theta.dim() != m {
        return Err(Error::Dimension(format!(
            "one-form dim {} vs space dim {m}",
            theta.dim()
        )));
    }
    let residual = skew_residual(theta, space);
    if residual > 1e-10 * 1.0f64.max(theta.norm()) {
        return Err(Error::NotSkewAdjoint { residual });
    }
    Ok(xi_raw(theta, space))
}

pub(crate) fn xi_raw(theta: &EndoOneForm, space: &HermitianSpace) -> Tensor3 {
    let m = space.dim();
    let j = space.j0();
    let mut out = Tensor3::zeros(m);
    for k in 0..m {
        let mat = theta.mat(k);
        let commutator = j * mat - mat * j;
        for i in 0..m {
            let ei = space.eps(i);
            for jx in 0..m {
                out.set(i, jx, k, ei * commutator[(i, jx)]);
            }
        }
    }
    out
}

/// The metric-perturbation map. `theta(e_k)` must commute with `J0` for
/// every `k`; in the `SignCorrected` layout the image lies in `U3`.
pub fn xi_tilde(
    theta: &EndoOneForm,
    space: &HermitianSpace,
    variant: XiTildeVariant,
) -> Result<Tensor3> {
    let m = space.dim();
    if theta.dim() != m {
        return Err(Error::Dimension(format!(
            "one-form dim {} vs space dim {m}",
            theta.dim()
        )));
    }
    let residual = commuting_residual(theta, space);
    if residual > 1e-10 * 1.0f64.max(theta.norm()) {
        return Err(Error::NotCommuting { residual });
    }
    Ok(xi_tilde_raw(theta, space, variant))
}

pub(crate) fn xi_tilde_raw(
    theta: &EndoOneForm,
    space: &HermitianSpace,
    variant: XiTildeVariant,
) -> Tensor3 {
    let m = space.dim();
    let mut out = Tensor3::zeros(m);
    // J maps basis vectors to signed basis vectors; (row, sign) per column
    let jmap: Vec<(usize, f64)> = (0..m).map(|i| space.j_image(i)).collect();
    for i in 0..m {
        let (ji, ci) = jmap[i];
        for jx in 0..m {
            let (jj, cj) = jmap[jx];
            // theta evaluated on y, Jy, x, Jx
            let t_y = theta.mat(jx);
            let t_jy = theta.mat(jj);
            let t_x = theta.mat(i);
            let t_jx = theta.mat(ji);
            for k in 0..m {
                // <theta(Jy) x, z> + <x, theta(Jy) z>
                let t1 = cj * space.eps(k) * t_jy[(k, i)];
                let t2 = cj * space.eps(i) * t_jy[(i, k)];
                // <theta(y) Jx, z> + <Jx, theta(y) z>
                let t3 = ci * space.eps(k) * t_y[(k, ji)];
                let t4 = ci * space.eps(ji) * t_y[(ji, k)];
                // mirrored terms with x and y exchanged
                let t5 = ci * space.eps(k) * t_jx[(k, jx)];
                let t6 = ci * space.eps(jx) * t_jx[(jx, k)];
                let t7 = cj * space.eps(k) * t_x[(k, jj)];
                let t8 = cj * space.eps(jj) * t_x[(jj, k)];
                let v = match variant {
                    XiTildeVariant::SignCorrected => {
                        0.5 * (t1 + t2 + t3 + t4 - t5 - t6 - t7 - t8)
                    }
                    XiTildeVariant::AsPrinted => 0.5 * (t1 + t2 + t3 + t4 - t5 + t6 + t7 + t8),
                };
                out.set(i, jx, k, v);
            }
        }
    }
    out
}

/// Basis of the Lie algebra of the isometry group: `{E_ab - eps_a eps_b
/// E_ba : a < b}` adapted to the Gram matrix.
pub fn skew_adjoint_basis(space: &HermitianSpace) -> Vec<DMatrix<f64>> {
    let m = space.dim();
    let mut basis = Vec::with_capacity(m * (m - 1) / 2);
    for a in 0..m {
        for b in a + 1..m {
            let mut mat = DMatrix::zeros(m, m);
            mat[(a, b)] = 1.0;
            mat[(b, a)] = -space.eps(a) * space.eps(b);
            basis.push(mat);
        }
    }
    basis
}

/// Basis of the `J0`-commuting matrices: block pairs `(P, P)` on the
/// diagonal and `(c R, R)` off it, `c` the square of the structure.
pub fn commuting_basis(space: &HermitianSpace) -> Vec<DMatrix<f64>> {
    let m = space.dim();
    let mbar = m / 2;
    let c = space.sign();
    let mut basis = Vec::with_capacity(m * m / 2);
    for a in 0..mbar {
        for b in 0..mbar {
            let mut p = DMatrix::zeros(m, m);
            p[(a, b)] = 1.0;
            p[(mbar + a, mbar + b)] = 1.0;
            basis.push(p);
            let mut r = DMatrix::zeros(m, m);
            r[(mbar + a, b)] = 1.0;
            r[(a, mbar + b)] = c;
            basis.push(r);
        }
    }
    basis
}

/// A solved realization problem: the recovered one-form, the relative
/// least-squares residual, and the decomposition of the achieved tensor.
#[derive(Debug, Clone)]
pub struct RealizationSolution {
    pub theta: EndoOneForm,
    pub residual: f64,
    pub target_component_check: DecompositionReport,
}

struct AssembledMap {
    matrix: DMatrix<f64>,
    generators: Vec<DMatrix<f64>>,
}

fn assemble<F: Fn(&EndoOneForm) -> Tensor3>(
    space: &HermitianSpace,
    generators: Vec<DMatrix<f64>>,
    apply: F,
) -> AssembledMap {
    let m = space.dim();
    let rows = m * m * m;
    let cols = generators.len() * m;
    let mut data = Vec::with_capacity(rows * cols);
    for k in 0..m {
        for gen in &generators {
            let theta = EndoOneForm::single(m, k, gen.clone());
            data.extend_from_slice(apply(&theta).data());
        }
    }
    AssembledMap {
        matrix: DMatrix::from_vec(rows, cols, data),
        generators,
    }
}

fn min_norm_solve(map: &AssembledMap, target: &Tensor3, space: &HermitianSpace) -> (EndoOneForm, f64) {
    let m = space.dim();
    let rhs = DVector::from_row_slice(target.data());
    let svd = map.matrix.clone().svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-8 * svd.singular_values.max())
        .expect("svd computed with u and v_t");
    let achieved = &map.matrix * &coeffs;
    let residual = (&achieved - &rhs).norm() / 1.0f64.max(rhs.norm());
    let n_gen = map.generators.len();
    let mut theta = EndoOneForm::zeros(m);
    for k in 0..m {
        for (g, gen) in map.generators.iter().enumerate() {
            let c = coeffs[k * n_gen + g];
            if c != 0.0 {
                theta = theta.add(&EndoOneForm::single(m, k, gen * c));
            }
        }
    }
    (theta, residual)
}

/// Minimum-norm preimage of `target` under `xi`. The target must lie in the
/// constrained space; for dimension at least 6 the map is surjective and the
/// residual is at the solver noise level.
pub fn solve_xi(target: &Tensor3, space: &HermitianSpace) -> Result<RealizationSolution> {
    let residual = hspace::membership_residual(target, space)?;
    if residual > hspace::DEFAULT_TOL * 1.0f64.max(target.max_abs()) {
        return Err(Error::NotInHSpace { residual });
    }
    let map = assemble(space, skew_adjoint_basis(space), |t| xi_raw(t, space));
    let (theta, residual) = min_norm_solve(&map, target, space);
    if residual > SOLVE_RESIDUAL_THRESHOLD {
        return Err(Error::RankDeficient { residual });
    }
    let achieved = xi_raw(&theta, space);
    let target_component_check = hspace::decompose(&achieved, space, hspace::DEFAULT_TOL)?;
    Ok(RealizationSolution {
        theta,
        residual,
        target_component_check,
    })
}

/// Minimum-norm preimage of `target` under the sign-corrected `xi_tilde`.
/// The target must lie in `U3`.
pub fn solve_xi_tilde(target: &Tensor3, space: &HermitianSpace) -> Result<RealizationSolution> {
    let membership = hspace::membership_residual(target, space)?;
    if membership > hspace::DEFAULT_TOL * 1.0f64.max(target.max_abs()) {
        return Err(Error::NotInHSpace {
            residual: membership,
        });
    }
    let u3 = hspace::project_component(target, 3, space)?;
    let u3_residual = u3.sub(target).max_abs();
    if u3_residual > hspace::DEFAULT_TOL * 1.0f64.max(target.max_abs()) {
        return Err(Error::NotInU3 {
            residual: u3_residual,
        });
    }
    let map = assemble(space, commuting_basis(space), |t| {
        xi_tilde_raw(t, space, XiTildeVariant::SignCorrected)
    });
    let (theta, residual) = min_norm_solve(&map, target, space);
    if residual > SOLVE_RESIDUAL_THRESHOLD {
        return Err(Error::RankDeficient { residual });
    }
    let achieved = xi_tilde_raw(&theta, space, XiTildeVariant::SignCorrected);
    let target_component_check = hspace::decompose(&achieved, space, hspace::DEFAULT_TOL)?;
    Ok(RealizationSolution {
        theta,
        residual,
        target_component_check,
    })
}

/// Which realization map a certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RealizationMap {
    Xi,
    XiTilde,
}

/// Rank certificate: assembles the full matrix of the chosen map and
/// compares its rank against the certified dimension of the codomain.
pub fn surjectivity_certificate(
    space: &HermitianSpace,
    which: RealizationMap,
) -> (usize, usize, bool) {
    let dims = hspace::module_dimensions(space);
    let (map, target_dim) = match which {
        RealizationMap::Xi => (
            assemble(space, skew_adjoint_basis(space), |t| xi_raw(t, space)),
            dims.dim_h,
        ),
        RealizationMap::XiTilde => (
            assemble(space, commuting_basis(space), |t| {
                xi_tilde_raw(t, space, XiTildeVariant::SignCorrected)
            }),
            dims.dim_u3,
        ),
    };
    let rank = hspace::rank_of(&map.matrix);
    (rank, target_dim, rank == target_dim)
}

/// The generator used in the worked low-dimensional examples:
/// `theta0 e_1 = eps_2 e_2`, `theta0 e_2 = -eps_1 e_1`, zero elsewhere.
pub fn theta0(space: &HermitianSpace) -> DMatrix<f64> {
    let m = space.dim();
    let mut mat = DMatrix::zeros(m, m);
    mat[(1, 0)] = space.eps(1);
    mat[(0, 1)] = -space.eps(0);
    mat
}

/// The diagonal generator of the metric-perturbation example: orthogonal
/// projection onto the span of the first two basis pairs.
pub fn theta_tilde0(space: &HermitianSpace) -> DMatrix<f64> {
    let m = space.dim();
    let mbar = m / 2;
    let mut mat = DMatrix::zeros(m, m);
    mat[(0, 0)] = 1.0;
    mat[(1, 1)] = 1.0;
    mat[(mbar, mbar)] = 1.0;
    mat[(mbar + 1, mbar + 1)] = 1.0;
    mat
}
