//! Chart-based differential geometry: point-evaluable metric and structure
//! fields on a box around the origin, the Levi-Civita connection by central
//! differences, evaluation of the covariant derivative of the K\u{e4}hler
//! form, and the perturbation constructions that realize a prescribed tensor
//! at a point by deforming either the structure or the metric.
//!
//! Everything here differentiates numerically on purpose: the finite
//! difference engine is independent of the algebraic formulas it
//! cross-validates.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::realize::{self, RealizationSolution, XiTildeVariant};
use crate::space::{exp_matrix, HermitianSpace};
use crate::tensor::{EndoOneForm, Tensor3};

type Field = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;

/// Which declarative family a chart was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartFamily {
    Flat,
    Conformal,
    PerturbedJ,
    PerturbedMetric,
    Product,
}

/// An explicit local almost (para-)Hermitian structure: a metric field and a
/// structure field, each a pure function of the point, on the box
/// `|x|_inf < domain_radius` around the origin.
#[derive(Clone)]
pub struct Chart {
    space: HermitianSpace,
    domain_radius: f64,
    family: ChartFamily,
    metric_field: Field,
    j_field: Field,
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Chart")
            .field("dim", &self.space.dim())
            .field("kind", &self.space.kind())
            .field("family", &self.family)
            .field("domain_radius", &self.domain_radius)
            .finish()
    }
}

impl Chart {
    pub fn space(&self) -> &HermitianSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn family(&self) -> ChartFamily {
        self.family
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn metric_at(&self, point: &[f64]) -> DMatrix<f64> {
        (self.metric_field)(point)
    }

    pub fn j_at(&self, point: &[f64]) -> DMatrix<f64> {
        (self.j_field)(point)
    }

    fn check_domain(&self, point: &[f64], h: f64) -> Result<()> {
        if point.len() != self.space.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, chart has {}",
                point.len(),
                self.space.dim()
            )));
        }
        if h <= 0.0 {
            return Err(Error::Domain(format!("step size {h} must be positive")));
        }
        let reach = point.iter().fold(0.0f64, |acc, x| acc.max(x.abs())) + h;
        if reach > self.domain_radius {
            return Err(Error::Domain(format!(
                "point plus stencil reaches {reach:.3}, outside radius {}",
                self.domain_radius
            )));
        }
        Ok(())
    }
}

/// Smooth quintic bump: identically 1 for `t <= radius/2`, identically 0
/// for `t >= radius`, C^2-matched in between. Constructions scale their
/// perturbations by the bump so that charts become standard away from the
/// origin while every derivative at the origin is unaffected.
pub fn bump(t: f64, radius: f64) -> f64 {
    let half = 0.5 * radius;
    if t <= half {
        1.0
    } else if t >= radius {
        0.0
    } else {
        let w = (t - half) / half;
        1.0 - w * w * w * (10.0 - 15.0 * w + 6.0 * w * w)
    }
}

fn euclid_norm(point: &[f64]) -> f64 {
    point.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// The standard flat chart: constant Gram metric, constant `J0`.
pub fn flat_chart(space: &HermitianSpace) -> Chart {
    let g = space.metric();
    let j = space.j0().clone();
    Chart {
        space: space.clone(),
        domain_radius: 1.0,
        family: ChartFamily::Flat,
        metric_field: Arc::new(move |_| g.clone()),
        j_field: Arc::new(move |_| j.clone()),
    }
}

/// The section value `exp(bump(|x|) * sum_k x^k theta(e_k))` used by both
/// perturbation families.
pub fn perturbation_at(theta: &EndoOneForm, bump_radius: f64, point: &[f64]) -> DMatrix<f64> {
    let m = theta.dim();
    let beta = bump(euclid_norm(point), bump_radius);
    let mut exponent = DMatrix::zeros(m, m);
    for (k, x) in point.iter().enumerate() {
        if *x != 0.0 {
            exponent += theta.mat(k) * (beta * x);
        }
    }
    exp_matrix(&exponent)
}

/// Deforms the structure: the section is exponential of a pointwise
/// skew-adjoint field, so it stays in the isometry group, the metric is the
/// flat one, and the structure field is the conjugated `J0`.
pub fn perturbed_j_chart(
    space: &HermitianSpace,
    theta: &EndoOneForm,
    bump_radius: f64,
) -> Result<Chart> {
    if theta.dim() != space.dim() {
        return Err(Error::Dimension(format!(
            "one-form dim {} vs space dim {}",
            theta.dim(),
            space.dim()
        )));
    }
    let residual = realize::skew_residual(theta, space);
    if residual > 1e-10 * 1.0f64.max(theta.norm()) {
        return Err(Error::NotSkewAdjoint { residual });
    }
    let g = space.metric();
    let j0 = space.j0().clone();
    let theta = theta.clone();
    let neg = theta.scale(-1.0);
    Ok(Chart {
        space: space.clone(),
        domain_radius: bump_radius,
        family: ChartFamily::PerturbedJ,
        metric_field: Arc::new(move |_| g.clone()),
        j_field: Arc::new(move |p| {
            let section = perturbation_at(&theta, bump_radius, p);
            let inverse = perturbation_at(&neg, bump_radius, p);
            inverse * &j0 * section
        }),
    })
}

/// Deforms the metric: the section is exponential of a pointwise
/// `J0`-commuting field, the metric is its pullback of the flat one, and the
/// structure stays `J0`. Compatibility holds because the section commutes
/// with `J0`.
pub fn perturbed_metric_chart(
    space: &HermitianSpace,
    theta: &EndoOneForm,
    bump_radius: f64,
) -> Result<Chart> {
    if theta.dim() != space.dim() {
        return Err(Error::Dimension(format!(
            "one-form dim {} vs space dim {}",
            theta.dim(),
            space.dim()
        )));
    }
    let residual = realize::commuting_residual(theta, space);
    if residual > 1e-10 * 1.0f64.max(theta.norm()) {
        return Err(Error::NotCommuting { residual });
    }
    let g = space.metric();
    let j0 = space.j0().clone();
    let theta = theta.clone();
    Ok(Chart {
        space: space.clone(),
        domain_radius: bump_radius,
        family: ChartFamily::PerturbedMetric,
        metric_field: Arc::new(move |p| {
            let section = perturbation_at(&theta, bump_radius, p);
            section.transpose() * &g * section
        }),
        j_field: Arc::new(move |_| j0.clone()),
    })
}

/// Rescales the metric of `base` by `exp(2 f(x))` with
/// `f(x) = bump(|x|) * sum_k a_k x^k`; the structure field is unchanged.
pub fn conformal_chart(base: &Chart, coeffs: &[f64]) -> Result<Chart> {
    if coeffs.len() != base.dim() {
        return Err(Error::Dimension(format!(
            "{} linear-form coefficients for dimension {}",
            coeffs.len(),
            base.dim()
        )));
    }
    let coeffs = coeffs.to_vec();
    let radius = base.domain_radius;
    let inner = base.metric_field.clone();
    Ok(Chart {
        space: base.space.clone(),
        domain_radius: radius,
        family: ChartFamily::Conformal,
        metric_field: Arc::new(move |p| {
            let f = bump(euclid_norm(p), radius)
                * coeffs.iter().zip(p).map(|(a, x)| a * x).sum::<f64>();
            inner(p) * (2.0 * f).exp()
        }),
        j_field: base.j_field.clone(),
    })
}

/// Index maps embedding the two factors of a product into the combined
/// basis: `e` blocks concatenate first, `f` blocks after them.
pub(crate) fn product_index_maps(m1: usize, m2: usize) -> (Vec<usize>, Vec<usize>) {
    let (h1, h2) = (m1 / 2, m2 / 2);
    let hbar = h1 + h2;
    let map1 = (0..m1)
        .map(|l| if l < h1 { l } else { hbar + (l - h1) })
        .collect();
    let map2 = (0..m2)
        .map(|l| if l < h2 { h1 + l } else { hbar + h1 + (l - h2) })
        .collect();
    (map1, map2)
}

/// Block-diagonal product: the combined metric and structure split over the
/// embedded factor coordinates, so the covariant derivative of the K\u{e4}hler
/// form of the product is the block embedding of the factors'.
pub fn product_chart(c1: &Chart, c2: &Chart) -> Result<Chart> {
    if c1.space.kind() != c2.space.kind() {
        return Err(Error::KindMismatch);
    }
    let (m1, m2) = (c1.dim(), c2.dim());
    let m = m1 + m2;
    let (map1, map2) = product_index_maps(m1, m2);
    let mut eps = vec![0.0; m];
    for (l, &t) in map1.iter().enumerate() {
        eps[t] = c1.space.eps(l);
    }
    for (l, &t) in map2.iter().enumerate() {
        eps[t] = c2.space.eps(l);
    }
    let space = HermitianSpace::from_parts(c1.space.kind(), eps);
    let radius = c1.domain_radius.min(c2.domain_radius);
    let scatter = move |a: &DMatrix<f64>, b: &DMatrix<f64>, map1: &[usize], map2: &[usize]| {
        let mut out = DMatrix::zeros(m, m);
        for r in 0..m1 {
            for c in 0..m1 {
                out[(map1[r], map1[c])] = a[(r, c)];
            }
        }
        for r in 0..m2 {
            for c in 0..m2 {
                out[(map2[r], map2[c])] = b[(r, c)];
            }
        }
        out
    };
    let gather = move |p: &[f64], map: &[usize]| -> Vec<f64> {
        map.iter().map(|&t| p[t]).collect()
    };
    let (g1, g2) = (c1.metric_field.clone(), c2.metric_field.clone());
    let (j1, j2) = (c1.j_field.clone(), c2.j_field.clone());
    let (ma, mb) = (map1.clone(), map2.clone());
    let (mc, md) = (map1, map2);
    Ok(Chart {
        space,
        domain_radius: radius,
        family: ChartFamily::Product,
        metric_field: Arc::new(move |p| {
            scatter(&g1(&gather(p, &ma)), &g2(&gather(p, &mb)), &ma, &mb)
        }),
        j_field: Arc::new(move |p| {
            scatter(&j1(&gather(p, &mc)), &j2(&gather(p, &md)), &mc, &md)
        }),
    })
}

/// Replaces the metric field by its negation. The structure field is kept,
/// every timelike direction becomes spacelike and vice versa, and the
/// classification of the covariant derivative of the K\u{e4}hler form is
/// unchanged.
pub fn negate_metric(chart: &Chart) -> Chart {
    let eps: Vec<f64> = chart.space.eps_slice().iter().map(|e| -e).collect();
    let space = HermitianSpace::from_parts(chart.space.kind(), eps);
    let inner = chart.metric_field.clone();
    Chart {
        space,
        domain_radius: chart.domain_radius,
        family: chart.family,
        metric_field: Arc::new(move |p| -inner(p)),
        j_field: chart.j_field.clone(),
    }
}

/// A sampled Levi-Civita connection: the raised Christoffel symbols at one
/// point, from second-order central differences of the metric field.
#[derive(Debug, Clone)]
pub struct ConnectionSample {
    pub point: Vec<f64>,
    pub h: f64,
    m: usize,
    gamma: Vec<f64>,
}

impl ConnectionSample {
    /// The symbol with raised first index: symmetric in the last two.
    pub fn get(&self, a: usize, i: usize, j: usize) -> f64 {
        self.gamma[(a * self.m + i) * self.m + j]
    }
}

fn shifted(point: &[f64], axis: usize, delta: f64) -> Vec<f64> {
    let mut p = point.to_vec();
    p[axis] += delta;
    p
}

fn metric_inverse(chart: &Chart, point: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g = chart.metric_at(point);
    let det = g.determinant();
    if det.abs() < 1e-12 {
        return Err(Error::SingularMetric { det });
    }
    let inv = g
        .clone()
        .try_inverse()
        .ok_or(Error::SingularMetric { det })?;
    Ok((g, inv))
}

/// Christoffel symbols of the chart at `point` by central differences:
/// lowered symbols `1/2 (d_j g_ik + d_i g_jk - d_k g_ij)`, then raised with
/// the inverse metric at the point. Second-order accurate in `h`.
pub fn christoffel(chart: &Chart, point: &[f64], h: f64) -> Result<ConnectionSample> {
    chart.check_domain(point, h)?;
    let m = chart.dim();
    let (_, g_inv) = metric_inverse(chart, point)?;
    let dg: Vec<DMatrix<f64>> = (0..m)
        .map(|axis| {
            (chart.metric_at(&shifted(point, axis, h))
                - chart.metric_at(&shifted(point, axis, -h)))
                / (2.0 * h)
        })
        .collect();
    let mut gamma = vec![0.0; m * m * m];
    for i in 0..m {
        for j in i..m {
            for k in 0..m {
                let lowered = 0.5 * (dg[j][(i, k)] + dg[i][(j, k)] - dg[k][(i, j)]);
                for a in 0..m {
                    let v = g_inv[(a, k)] * lowered;
                    gamma[(a * m + i) * m + j] += v;
                    if i != j {
                        gamma[(a * m + j) * m + i] += v;
                    }
                }
            }
        }
    }
    Ok(ConnectionSample {
        point: point.to_vec(),
        h,
        m,
        gamma,
    })
}

/// The covariant derivative of the K\u{e4}hler form at `point`:
/// `H(x, y; z) = g(x, (nabla_z J) y)` with
/// `(nabla_k J)^a_j = d_k J^a_j + Gamma^a_{k l} J^l_j - Gamma^l_{k j} J^a_l`,
/// all derivatives by central differences.
pub fn nabla_omega(chart: &Chart, point: &[f64], h: f64) -> Result<Tensor3> {
    let sample = christoffel(chart, point, h)?;
    let m = chart.dim();
    let g = chart.metric_at(point);
    let j = chart.j_at(point);
    let dj: Vec<DMatrix<f64>> = (0..m)
        .map(|axis| {
            (chart.j_at(&shifted(point, axis, h)) - chart.j_at(&shifted(point, axis, -h)))
                / (2.0 * h)
        })
        .collect();
    let mut out = Tensor3::zeros(m);
    for (k, dj_k) in dj.iter().enumerate() {
        let mut nabla_j = dj_k.clone();
        for a in 0..m {
            for jx in 0..m {
                let mut acc = 0.0;
                for l in 0..m {
                    acc += sample.get(a, k, l) * j[(l, jx)] - sample.get(l, k, jx) * j[(a, l)];
                }
                nabla_j[(a, jx)] += acc;
            }
        }
        let lowered = &g * nabla_j;
        for i in 0..m {
            for jx in 0..m {
                out.set(i, jx, k, lowered[(i, jx)]);
            }
        }
    }
    Ok(out)
}

/// Checks the chart invariants (metric symmetric and nondegenerate,
/// structure squaring to `+/-Id`, compatibility) on a sampled grid: the
/// full 3-point axis stencil when affordable, otherwise seeded random
/// points, plus extra random points either way.
pub fn validate_chart(chart: &Chart, seed: u64) -> Result<()> {
    let m = chart.dim();
    let r = chart.domain_radius * 0.5;
    let mut points: Vec<Vec<f64>> = Vec::new();
    if m <= 6 {
        // all of {-r, 0, r}^m
        let total = 3usize.pow(m as u32);
        for idx in 0..total {
            let mut p = vec![0.0; m];
            let mut rem = idx;
            for coord in p.iter_mut() {
                *coord = r * ((rem % 3) as f64 - 1.0);
                rem /= 3;
            }
            points.push(p);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..729 {
            points.push((0..m).map(|_| rng.gen_range(-r..r)).collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    for _ in 0..32 {
        points.push((0..m).map(|_| rng.gen_range(-r..r)).collect());
    }
    let s = chart.space.sign();
    let id = DMatrix::<f64>::identity(m, m);
    for p in &points {
        let g = chart.metric_at(p);
        let sym = (&g - g.transpose()).norm();
        if sym > 1e-10 {
            return Err(Error::Tolerance { residual: sym });
        }
        let det = g.determinant();
        if det.abs() < 1e-12 {
            return Err(Error::SingularMetric { det });
        }
        let j = chart.j_at(p);
        let square = (&j * &j - &id * s).norm();
        if square > 1e-10 {
            return Err(Error::Tolerance { residual: square });
        }
        // compatibility J^T g J = -s g covers both kinds
        let compat = (j.transpose() * &g * &j + &g * s).norm();
        if compat > 1e-10 {
            return Err(Error::Tolerance { residual: compat });
        }
    }
    Ok(())
}

/// Decides which sign layout of the algebraic metric-perturbation map
/// matches actual geometry, by building the diagonal example chart and
/// comparing its finite-difference tensor against both layouts.
pub fn select_xi_tilde_variant(space: &HermitianSpace, h: f64) -> Result<XiTildeVariant> {
    let m = space.dim();
    let theta = EndoOneForm::single(m, 0, realize::theta_tilde0(space));
    let chart = perturbed_metric_chart(space, &theta, 1.0)?;
    let fd = nabla_omega(&chart, &vec![0.0; m], h)?;
    let corrected = realize::xi_tilde(&theta, space, XiTildeVariant::SignCorrected)?;
    let printed = realize::xi_tilde(&theta, space, XiTildeVariant::AsPrinted)?;
    let err_corrected = fd.sub(&corrected).max_abs();
    let err_printed = fd.sub(&printed).max_abs();
    let best = err_corrected.min(err_printed);
    if best > 1e-3 {
        return Err(Error::Convergence {
            error: best,
            threshold: 1e-3,
        });
    }
    Ok(if err_corrected <= err_printed {
        XiTildeVariant::SignCorrected
    } else {
        XiTildeVariant::AsPrinted
    })
}

/// Whether a pointwise realization deforms the structure or the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RealizeMode {
    VaryJ,
    VaryMetric,
}

/// Outcome of a pointwise realization.
#[derive(Debug, Clone, Serialize)]
pub struct RealizeReport {
    pub mode: RealizeMode,
    pub family: ChartFamily,
    pub bump_radius: f64,
    pub h: f64,
    /// Relative residual of the algebraic least-squares solve.
    pub solver_residual: f64,
    /// `|achieved - target| / max(1, |target|)` with the achieved tensor
    /// evaluated on the built chart by finite differences.
    pub achieved_error: f64,
    /// Sign layout selected by the finite-difference oracle (metric mode).
    pub variant: Option<XiTildeVariant>,
}

/// Realizes `target` as the covariant derivative of the K\u{e4}hler form of
/// an explicit chart at the origin: solves the algebraic system, builds the
/// corresponding perturbed chart, and cross-checks by evaluating the chart
/// with finite differences.
pub fn realize_pointwise(
    target: &Tensor3,
    space: &HermitianSpace,
    mode: RealizeMode,
    h: f64,
) -> Result<(Chart, RealizeReport)> {
    let bump_radius = 1.0;
    let (solution, chart, variant): (RealizationSolution, Chart, Option<XiTildeVariant>) =
        match mode {
            RealizeMode::VaryJ => {
                let sol = realize::solve_xi(target, space)?;
                let chart = perturbed_j_chart(space, &sol.theta, bump_radius)?;
                (sol, chart, None)
            }
            RealizeMode::VaryMetric => {
                let variant = select_xi_tilde_variant(space, h)?;
                let sol = realize::solve_xi_tilde(target, space)?;
                let chart = perturbed_metric_chart(space, &sol.theta, bump_radius)?;
                (sol, chart, Some(variant))
            }
        };
    let achieved = nabla_omega(&chart, &vec![0.0; space.dim()], h)?;
    let error = achieved.sub(target).frob_norm() / 1.0f64.max(target.frob_norm());
    let threshold = (1e-4f64).max(100.0 * h * h);
    if error > threshold {
        return Err(Error::Convergence { error, threshold });
    }
    let report = RealizeReport {
        mode,
        family: chart.family(),
        bump_radius,
        h,
        solver_residual: solution.residual,
        achieved_error: error,
        variant,
    };
    Ok((chart, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hspace::{decompose, membership_residual, sigma, tau1, DEFAULT_TOL};
    use crate::realize::{theta0, theta_tilde0, xi};
    use crate::space::Kind;

    const H: f64 = 1e-4;

    fn origin(m: usize) -> Vec<f64> {
        vec![0.0; m]
    }

    fn spaces() -> Vec<HermitianSpace> {
        vec![
            HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap(),
            HermitianSpace::new(6, 2, 4, Kind::Pseudo).unwrap(),
            HermitianSpace::new(6, 3, 3, Kind::Para).unwrap(),
        ]
    }

    fn e1_form(m: usize) -> Vec<f64> {
        let mut a = vec![0.0; m];
        a[0] = 1.0;
        a
    }

    #[test]
    fn flat_chart_is_kaehler() {
        for s in spaces() {
            let c = flat_chart(&s);
            validate_chart(&c, 7).unwrap();
            let gamma = christoffel(&c, &origin(6), H).unwrap();
            let worst = (0..6)
                .flat_map(|a| (0..6).flat_map(move |i| (0..6).map(move |j| (a, i, j))))
                .map(|(a, i, j)| gamma.get(a, i, j).abs())
                .fold(0.0f64, f64::max);
            assert!(worst < 1e-14);
            assert!(nabla_omega(&c, &origin(6), H).unwrap().max_abs() < 1e-12);
        }
    }

    #[test]
    fn conformal_christoffels_match_closed_form() {
        // for g = exp(2 a.x) G the symbols at 0 are
        // delta^i_j a_k + delta^i_k a_j - eps_i a_i eps_j delta_{jk}
        for s in spaces() {
            let c = conformal_chart(&flat_chart(&s), &e1_form(6)).unwrap();
            validate_chart(&c, 11).unwrap();
            let gamma = christoffel(&c, &origin(6), H).unwrap();
            let a = e1_form(6);
            let mut worst = 0.0f64;
            for i in 0..6 {
                for j in 0..6 {
                    for k in 0..6 {
                        let exact = f64::from(i == j) * a[k] + f64::from(i == k) * a[j]
                            - if j == k { s.eps(i) * a[i] * s.eps(j) } else { 0.0 };
                        worst = worst.max((gamma.get(i, j, k) - exact).abs());
                    }
                }
            }
            assert!(worst < 1e-8, "worst {worst:.2e}");
        }
    }

    #[test]
    fn christoffel_second_order_convergence() {
        let s = HermitianSpace::new(6, 2, 4, Kind::Pseudo).unwrap();
        let c = conformal_chart(&flat_chart(&s), &e1_form(6)).unwrap();
        let a = e1_form(6);
        let err_at = |h: f64| {
            let gamma = christoffel(&c, &origin(6), h).unwrap();
            let mut worst = 0.0f64;
            for i in 0..6 {
                for j in 0..6 {
                    for k in 0..6 {
                        let exact = f64::from(i == j) * a[k] + f64::from(i == k) * a[j]
                            - if j == k { s.eps(i) * a[i] * s.eps(j) } else { 0.0 };
                        worst = worst.max((gamma.get(i, j, k) - exact).abs());
                    }
                }
            }
            worst
        };
        let ratio = err_at(1e-3) / err_at(5e-4);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn conformal_flat_gives_minus_sigma() {
        for s in spaces() {
            let c = conformal_chart(&flat_chart(&s), &e1_form(6)).unwrap();
            let h = nabla_omega(&c, &origin(6), H).unwrap();
            let expected = sigma(&e1_form(6), &s).unwrap().scale(-1.0);
            assert!(h.sub(&expected).max_abs() < 1e-5);
            let label = decompose(&h, &s, 1e-4).unwrap().label;
            assert_eq!(label.flags, [false, false, false, true]);
            assert_eq!(label.subset_string(), "W4");
        }
    }

    #[test]
    fn conformal_identity_over_perturbed_base() {
        // nabla_omega(conformal(c, a)) = e^{2f}(nabla_omega(c) - sigma(df)) at 0
        for s in spaces() {
            let base =
                perturbed_j_chart(&s, &EndoOneForm::single(6, 2, theta0(&s)), 1.0).unwrap();
            let conf = conformal_chart(&base, &e1_form(6)).unwrap();
            let lhs = nabla_omega(&conf, &origin(6), H).unwrap();
            let rhs = nabla_omega(&base, &origin(6), H)
                .unwrap()
                .sub(&sigma(&e1_form(6), &s).unwrap());
            assert!(lhs.sub(&rhs).max_abs() < 1e-5);
        }
    }

    #[test]
    fn perturbed_j_reproduces_algebraic_map() {
        for s in spaces() {
            let theta = EndoOneForm::single(6, 2, theta0(&s));
            let c = perturbed_j_chart(&s, &theta, 1.0).unwrap();
            validate_chart(&c, 13).unwrap();
            let fd = nabla_omega(&c, &origin(6), H).unwrap();
            let algebraic = xi(&theta, &s).unwrap();
            assert!(fd.sub(&algebraic).max_abs() < 1e-5);
            assert!(membership_residual(&fd, &s).unwrap() < 1e-5);
        }
    }

    #[test]
    fn perturbation_section_rotation_and_boost_blocks() {
        // on the third coordinate axis the section restricted to the first
        // two e-directions is a rotation (eps_1 = eps_2) or boost block
        let t = 0.3;
        let rot_space = HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap();
        let theta = EndoOneForm::single(6, 2, theta0(&rot_space));
        let mut p = origin(6);
        p[2] = t;
        let section = perturbation_at(&theta, 1.0, &p);
        let e2 = rot_space.eps(1);
        assert!((section[(0, 0)] - t.cos()).abs() < 1e-12);
        assert!((section[(1, 0)] - e2 * t.sin()).abs() < 1e-12);

        let boost_space = HermitianSpace::new(6, 2, 4, Kind::Pseudo).unwrap();
        assert_eq!(boost_space.eps(0), -boost_space.eps(1));
        let theta = EndoOneForm::single(6, 2, theta0(&boost_space));
        let section = perturbation_at(&theta, 1.0, &p);
        let e2 = boost_space.eps(1);
        assert!((section[(0, 0)] - t.cosh()).abs() < 1e-12);
        assert!((section[(1, 0)] - e2 * t.sinh()).abs() < 1e-12);
    }

    #[test]
    fn perturbed_metric_matches_diagonal_example() {
        for s in spaces() {
            let theta = EndoOneForm::single(6, 0, theta_tilde0(&s));
            let c = perturbed_metric_chart(&s, &theta, 1.0).unwrap();
            validate_chart(&c, 17).unwrap();
            // on-axis the metric is e^{2 x^1} on the perturbed block
            let mut p = origin(6);
            p[0] = 0.2;
            let g = c.metric_at(&p);
            let scale = (2.0f64 * 0.2).exp();
            for i in [0usize, 1, 3, 4] {
                assert!((g[(i, i)] - scale * s.eps(i)).abs() < 1e-12);
            }
            for i in [2usize, 5] {
                assert!((g[(i, i)] - s.eps(i)).abs() < 1e-12);
            }
            // FD tensor: in U3, trace -2s on the f_1 slot
            let fd = nabla_omega(&c, &origin(6), H).unwrap();
            let report = decompose(&fd, &s, 1e-4).unwrap();
            assert!(report.norms[0] < 1e-5 && report.norms[1] < 1e-5);
            let t = tau1(&fd, &s).unwrap();
            assert!((t[3] - (-2.0 * s.sign())).abs() < 1e-5);
        }
    }

    #[test]
    fn constant_j_charts_land_in_u3() {
        use crate::hspace::project_component;
        for s in spaces() {
            let theta = EndoOneForm::single(6, 0, theta_tilde0(&s));
            let charts = [
                conformal_chart(&flat_chart(&s), &e1_form(6)).unwrap(),
                perturbed_metric_chart(&s, &theta, 1.0).unwrap(),
            ];
            for c in charts {
                let fd = nabla_omega(&c, &origin(6), H).unwrap();
                let clean = crate::hspace::project_to_hspace(&fd, &s).unwrap();
                let u3 = project_component(&clean, 3, &s).unwrap();
                assert!(u3.sub(&clean).max_abs() < 1e-5);
            }
        }
    }

    #[test]
    fn variant_oracle_selects_corrected_signs() {
        for s in spaces() {
            assert_eq!(
                select_xi_tilde_variant(&s, H).unwrap(),
                XiTildeVariant::SignCorrected
            );
        }
    }

    #[test]
    fn product_of_flats_is_flat() {
        let s = HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap();
        let c = product_chart(&flat_chart(&s), &flat_chart(&s)).unwrap();
        assert_eq!(c.dim(), 12);
        validate_chart(&c, 19).unwrap();
        assert!(nabla_omega(&c, &origin(12), H).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn product_embeds_factor_tensor() {
        let s1 = HermitianSpace::new(6, 2, 4, Kind::Pseudo).unwrap();
        let s2 = HermitianSpace::new(4, 0, 4, Kind::Pseudo).unwrap();
        let factor = conformal_chart(&flat_chart(&s1), &e1_form(6)).unwrap();
        let prod = product_chart(&factor, &flat_chart(&s2)).unwrap();
        validate_chart(&prod, 23).unwrap();
        let h_factor = nabla_omega(&factor, &origin(6), H).unwrap();
        let h_prod = nabla_omega(&prod, &origin(10), H).unwrap();
        let (map1, _) = product_index_maps(6, 4);
        let mut embedded = Tensor3::zeros(10);
        for i in 0..6 {
            for j in 0..6 {
                for k in 0..6 {
                    embedded.set(map1[i], map1[j], map1[k], h_factor.get(i, j, k));
                }
            }
        }
        assert!(h_prod.sub(&embedded).max_abs() < 1e-5);
        // trace agrees with the factor's under the embedding
        let t_prod = tau1(&crate::hspace::project_to_hspace(&h_prod, prod.space()).unwrap(),
            prod.space())
        .unwrap();
        let t_fact = tau1(&crate::hspace::project_to_hspace(&h_factor, &s1).unwrap(), &s1)
            .unwrap();
        for (l, &target) in map1.iter().enumerate() {
            assert!((t_prod[target] - t_fact[l]).abs() < 1e-5);
        }
    }

    #[test]
    fn product_classification_matches_factor() {
        let s1 = HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap();
        let s2 = HermitianSpace::new(4, 0, 4, Kind::Pseudo).unwrap();
        let theta = EndoOneForm::single(6, 2, theta0(&s1));
        let factor = perturbed_j_chart(&s1, &theta, 1.0).unwrap();
        let prod = product_chart(&factor, &flat_chart(&s2)).unwrap();
        let h_factor = nabla_omega(&factor, &origin(6), H).unwrap();
        let h_prod = nabla_omega(&prod, &origin(10), H).unwrap();
        let lf = decompose(&h_factor, &s1, 1e-4).unwrap().label;
        let lp = decompose(&h_prod, prod.space(), 1e-4).unwrap().label;
        assert_eq!(lf.flags, lp.flags);
    }

    #[test]
    fn product_rejects_kind_mismatch() {
        let s1 = HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap();
        let s2 = HermitianSpace::new(6, 3, 3, Kind::Para).unwrap();
        assert!(matches!(
            product_chart(&flat_chart(&s1), &flat_chart(&s2)),
            Err(Error::KindMismatch)
        ));
    }

    #[test]
    fn negated_metric_keeps_labels() {
        let s = HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap();
        let theta = EndoOneForm::single(6, 2, theta0(&s));
        let chart = perturbed_j_chart(&s, &theta, 1.0).unwrap();
        let neg = negate_metric(&chart);
        validate_chart(&neg, 29).unwrap();
        assert_eq!(neg.space().signature(), (6, 0));
        let h = nabla_omega(&chart, &origin(6), H).unwrap();
        let hn = nabla_omega(&neg, &origin(6), H).unwrap();
        let l = decompose(&h, chart.space(), 1e-4).unwrap().label;
        let ln = decompose(&hn, neg.space(), 1e-4).unwrap().label;
        assert_eq!(l.flags, ln.flags);
        assert_eq!(l.name, ln.name);
    }

    #[test]
    fn domain_and_dimension_errors() {
        let s = HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap();
        let c = flat_chart(&s);
        assert!(matches!(
            christoffel(&c, &[0.999, 0.0, 0.0, 0.0, 0.0, 0.0], 1e-2),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            christoffel(&c, &[0.0; 4], H),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            christoffel(&c, &origin(6), -1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn realize_pointwise_zero_target() {
        let s = HermitianSpace::new(6, 0, 6, Kind::Pseudo).unwrap();
        for mode in [RealizeMode::VaryJ, RealizeMode::VaryMetric] {
            let (_, report) = realize_pointwise(&Tensor3::zeros(6), &s, mode, H).unwrap();
            assert!(report.achieved_error < 1e-12);
        }
    }

    #[test]
    fn realize_pointwise_vary_j_random_target() {
        for s in spaces() {
            let target = crate::hspace::random_hspace_element(&s, 41);
            let (chart, report) = realize_pointwise(&target, &s, RealizeMode::VaryJ, H).unwrap();
            assert!(report.achieved_error <= 1e-4, "{}", report.achieved_error);
            assert_eq!(chart.family(), ChartFamily::PerturbedJ);
        }
    }

    #[test]
    fn realize_pointwise_vary_metric_u3_target() {
        for s in spaces() {
            let h = crate::hspace::random_hspace_element(&s, 43);
            let w3 = decompose(&h, &s, DEFAULT_TOL).unwrap().components[2].clone();
            let mut phi = vec![0.0; 6];
            phi[0] = 0.4;
            let target = sigma(&phi, &s).unwrap().scale(0.5).add(&w3);
            let (chart, report) =
                realize_pointwise(&target, &s, RealizeMode::VaryMetric, H).unwrap();
            assert!(report.achieved_error <= 1e-4, "{}", report.achieved_error);
            assert_eq!(chart.family(), ChartFamily::PerturbedMetric);
            assert_eq!(report.variant, Some(XiTildeVariant::SignCorrected));
        }
    }
}
