//! The four quadratic invariants of the constrained space under the
//! structure group, evaluated through a small contraction-string language:
//! a string like `(1,J2;3)(1,J3;2)` names two monomials of three slots,
//! each index label appearing exactly twice, with optional `J` decorations.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hspace;
use crate::space::HermitianSpace;
use crate::tensor::Tensor3;

/// One slot of a contraction monomial: an index label `0..3` and whether
/// the slot is decorated with `J`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Slot {
    pub label: usize,
    pub j: bool,
}

/// A parsed invariant string: two monomials of three slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantString {
    pub monomials: [[Slot; 3]; 2],
}

impl InvariantString {
    /// Parses e.g. `(1,2;3)(1,J2;J3)`. Separators `,` and `;` are
    /// interchangeable; each of the labels 1, 2, 3 must appear exactly twice.
    pub fn parse(spec: &str) -> Result<Self> {
        let cleaned: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
        let mut monomials = Vec::new();
        let mut rest = cleaned.as_str();
        while !rest.is_empty() {
            if !rest.starts_with('(') {
                return Err(Error::MalformedString(format!("expected '(' in {spec}")));
            }
            let end = rest
                .find(')')
                .ok_or_else(|| Error::MalformedString(format!("unclosed '(' in {spec}")))?;
            let body = &rest[1..end];
            rest = &rest[end + 1..];
            let slots: Vec<&str> = body.split([',', ';']).collect();
            if slots.len() != 3 {
                return Err(Error::MalformedString(format!(
                    "monomial '{body}' must have 3 slots"
                )));
            }
            let mut parsed = [Slot { label: 0, j: false }; 3];
            for (slot, text) in parsed.iter_mut().zip(slots) {
                let (j, digit) = match text.strip_prefix(['J', 'j']) {
                    Some(d) => (true, d),
                    None => (false, text),
                };
                let label: usize = digit
                    .parse()
                    .map_err(|_| Error::MalformedString(format!("bad slot '{text}'")))?;
                if !(1..=3).contains(&label) {
                    return Err(Error::MalformedString(format!(
                        "slot label {label} not in 1..=3"
                    )));
                }
                *slot = Slot {
                    label: label - 1,
                    j,
                };
            }
            monomials.push(parsed);
        }
        if monomials.len() != 2 {
            return Err(Error::MalformedString(format!(
                "expected 2 monomials, got {}",
                monomials.len()
            )));
        }
        let mut counts = [0usize; 3];
        for mono in &monomials {
            for slot in mono {
                counts[slot.label] += 1;
            }
        }
        if counts != [2, 2, 2] {
            return Err(Error::MalformedString(format!(
                "each index must appear exactly twice, got {counts:?}"
            )));
        }
        Ok(InvariantString {
            monomials: [monomials[0], monomials[1]],
        })
    }
}

fn decorated_tensor(h: &Tensor3, mono: &[Slot; 3], j0: &DMatrix<f64>) -> Tensor3 {
    let mut t = h.clone();
    for (pos, slot) in mono.iter().enumerate() {
        if slot.j {
            t = t.contract_slot(j0, pos);
        }
    }
    t
}

/// Evaluates the contraction named by `spec` on `H`:
/// `sum_{i1 i2 i3} eps_{i1} eps_{i2} eps_{i3} M1 M2` where each monomial
/// looks up `H` (with `J` applied to decorated slots) at its labelled indices.
pub fn string_invariant(spec: &InvariantString, h: &Tensor3, space: &HermitianSpace) -> Result<f64> {
    let m = space.dim();
    if h.dim() != m {
        return Err(Error::Dimension(format!(
            "tensor dim {} vs space dim {m}",
            h.dim()
        )));
    }
    let t1 = decorated_tensor(h, &spec.monomials[0], space.j0());
    let t2 = decorated_tensor(h, &spec.monomials[1], space.j0());
    let lab1 = spec.monomials[0].map(|s| s.label);
    let lab2 = spec.monomials[1].map(|s| s.label);
    let mut acc = 0.0;
    let mut idx = [0usize; 3];
    for i1 in 0..m {
        idx[0] = i1;
        for i2 in 0..m {
            idx[1] = i2;
            let e12 = space.eps(i1) * space.eps(i2);
            for i3 in 0..m {
                idx[2] = i3;
                acc += e12
                    * space.eps(i3)
                    * t1.get(idx[lab1[0]], idx[lab1[1]], idx[lab1[2]])
                    * t2.get(idx[lab2[0]], idx[lab2[1]], idx[lab2[2]]);
            }
        }
    }
    Ok(acc)
}

const PSI_SPECS: [&str; 4] = [
    "(1,2;3)(1,2;3)",
    "(1,2;3)(1,3;2)",
    "(1,2;1)(3,2;3)",
    "(1,J2;J3)(1,2;3)",
];

/// The i-th canonical quadratic invariant, `i` in `1..=4`.
pub fn psi(h: &Tensor3, i: usize, space: &HermitianSpace) -> Result<f64> {
    if !(1..=4).contains(&i) {
        return Err(Error::Dimension(format!("psi index {i} not in 1..=4")));
    }
    let residual = hspace::membership_residual(h, space)?;
    if residual > hspace::DEFAULT_TOL * 1.0f64.max(h.max_abs()) {
        return Err(Error::NotInHSpace { residual });
    }
    let spec = InvariantString::parse(PSI_SPECS[i - 1]).expect("canonical specs parse");
    string_invariant(&spec, h, space)
}

/// All four invariants at once.
pub fn psi_vector(h: &Tensor3, space: &HermitianSpace) -> Result<[f64; 4]> {
    Ok([
        psi(h, 1, space)?,
        psi(h, 2, space)?,
        psi(h, 3, space)?,
        psi(h, 4, space)?,
    ])
}

/// Numerical rank of the 4 x n matrix of invariant values over seeded random
/// elements of the constrained space; 4 certifies linear independence of the
/// invariants as quadratic forms.
pub fn invariant_independence_rank(space: &HermitianSpace, n_samples: usize, seed: u64) -> usize {
    assert!(n_samples >= 8, "need at least 8 samples");
    let mut data = Vec::with_capacity(4 * n_samples);
    for s in 0..n_samples {
        let h = hspace::random_hspace_element(space, seed.wrapping_add(s as u64));
        let values = psi_vector(&h, space).expect("projected samples are members");
        data.extend_from_slice(&values);
    }
    let mat = DMatrix::from_vec(4, n_samples, data);
    hspace::rank_of(&mat)
}
