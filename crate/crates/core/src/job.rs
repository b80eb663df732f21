//! Declarative job descriptions for the command-line front end: a single
//! JSON document selects the space, optional tensor data (dense or sparse,
//! 1-based indices), an optional chart family, and solver options.

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geometry::{
    conformal_chart, flat_chart, perturbed_j_chart, perturbed_metric_chart, product_chart, Chart,
    RealizeMode,
};
use crate::space::{HermitianSpace, Kind};
use crate::tensor::{EndoOneForm, Tensor3};

/// The space block: dimension, signature, kind.
#[derive(Debug, Clone, Copy, Deserialize)]
pub struct SpaceSpec {
    pub m: usize,
    pub p: usize,
    pub q: usize,
    pub kind: Kind,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<HermitianSpace> {
        HermitianSpace::new(self.m, self.p, self.q, self.kind)
    }
}

/// One sparse tensor entry; indices are 1-based basis labels.
#[derive(Debug, Clone, Copy, Deserialize)]
pub struct SparseEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub v: f64,
}

/// Tensor payload: either all `m^3` entries in row-major order or a sparse
/// list of nonzero entries.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorSpec {
    Dense(Vec<f64>),
    Sparse(Vec<SparseEntry>),
}

impl TensorSpec {
    pub fn build(&self, m: usize) -> Result<Tensor3> {
        match self {
            TensorSpec::Dense(values) => {
                if values.len() != m * m * m {
                    return Err(Error::Schema(format!(
                        "dense tensor needs {} entries, got {}",
                        m * m * m,
                        values.len()
                    )));
                }
                Tensor3::from_vec(m, values.clone())
            }
            TensorSpec::Sparse(entries) => {
                let mut t = Tensor3::zeros(m);
                for e in entries {
                    for (label, idx) in [("i", e.i), ("j", e.j), ("k", e.k)] {
                        if idx < 1 || idx > m {
                            return Err(Error::Schema(format!(
                                "sparse index {label}={idx} outside 1..={m}"
                            )));
                        }
                    }
                    t.set(e.i - 1, e.j - 1, e.k - 1, e.v);
                }
                Ok(t)
            }
        }
    }
}

/// One matrix entry of an endomorphism-valued one-form slot; 1-based.
#[derive(Debug, Clone, Copy, Deserialize)]
pub struct MatEntry {
    pub r: usize,
    pub c: usize,
    pub v: f64,
}

/// One slot of an endomorphism-valued one-form: the covector label `k`
/// (1-based) and the sparse matrix it maps to.
#[derive(Debug, Clone, Deserialize)]
pub struct ThetaSlot {
    pub k: usize,
    pub entries: Vec<MatEntry>,
}

/// An endomorphism-valued one-form as a list of slots.
pub type ThetaSpec = Vec<ThetaSlot>;

pub fn build_theta(spec: &ThetaSpec, m: usize) -> Result<EndoOneForm> {
    let mut theta = EndoOneForm::zeros(m);
    for slot in spec {
        if slot.k < 1 || slot.k > m {
            return Err(Error::Schema(format!(
                "one-form slot k={} outside 1..={m}",
                slot.k
            )));
        }
        let mut mat = DMatrix::zeros(m, m);
        for e in &slot.entries {
            if e.r < 1 || e.r > m || e.c < 1 || e.c > m {
                return Err(Error::Schema(format!(
                    "matrix entry ({}, {}) outside 1..={m}",
                    e.r, e.c
                )));
            }
            mat[(e.r - 1, e.c - 1)] = e.v;
        }
        theta = theta.add(&EndoOneForm::single(m, slot.k - 1, mat));
    }
    Ok(theta)
}

fn default_bump_radius() -> f64 {
    1.0
}

/// A chart factor of a product: its own space block plus a chart family.
#[derive(Debug, Clone, Deserialize)]
pub struct SubChartSpec {
    pub space: SpaceSpec,
    pub chart: ChartSpec,
}

/// Declarative chart family.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ChartSpec {
    Flat,
    Conformal {
        coeffs: Vec<f64>,
        base: Option<Box<ChartSpec>>,
    },
    PerturbedJ {
        theta: ThetaSpec,
        #[serde(default = "default_bump_radius")]
        bump_radius: f64,
    },
    PerturbedMetric {
        theta: ThetaSpec,
        #[serde(default = "default_bump_radius")]
        bump_radius: f64,
    },
    Product {
        first: Box<SubChartSpec>,
        second: Box<SubChartSpec>,
    },
}

impl ChartSpec {
    pub fn build(&self, space: &HermitianSpace) -> Result<Chart> {
        match self {
            ChartSpec::Flat => Ok(flat_chart(space)),
            ChartSpec::Conformal { coeffs, base } => {
                let base_chart = match base {
                    Some(inner) => inner.build(space)?,
                    None => flat_chart(space),
                };
                conformal_chart(&base_chart, coeffs)
            }
            ChartSpec::PerturbedJ { theta, bump_radius } => {
                perturbed_j_chart(space, &build_theta(theta, space.dim())?, *bump_radius)
            }
            ChartSpec::PerturbedMetric { theta, bump_radius } => {
                perturbed_metric_chart(space, &build_theta(theta, space.dim())?, *bump_radius)
            }
            ChartSpec::Product { first, second } => {
                let c1 = first.chart.build(&first.space.build()?)?;
                let c2 = second.chart.build(&second.space.build()?)?;
                product_chart(&c1, &c2)
            }
        }
    }
}

/// Solver options; all optional with library defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
pub struct JobOptions {
    pub tol: Option<f64>,
    pub h: Option<f64>,
    pub seed: Option<u64>,
}

/// The single-document job schema shared by all subcommands. Unknown fields
/// are rejected so typos surface as schema errors.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub space: Option<SpaceSpec>,
    /// Space list for the dimension-table command.
    pub spaces: Option<Vec<SpaceSpec>>,
    pub tensor: Option<TensorSpec>,
    pub chart: Option<ChartSpec>,
    /// Realization mode: `"vary_j"` or `"vary_metric"`.
    pub mode: Option<RealizeMode>,
    #[serde(default)]
    pub options: JobOptions,
}

impl JobSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn space(&self) -> Result<HermitianSpace> {
        self.space
            .as_ref()
            .ok_or_else(|| Error::Schema("missing \"space\" block".into()))?
            .build()
    }

    pub fn tensor(&self, m: usize) -> Result<Tensor3> {
        self.tensor
            .as_ref()
            .ok_or_else(|| Error::Schema("missing \"tensor\" block".into()))?
            .build(m)
    }
}
