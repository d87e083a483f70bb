//! Canonical block assembly for dualization.
//!
//! The primal relaxation is flattened into
//!
//! ```text
//!   minimize    m' x
//!   subject to  A x + b  = 0
//!               C x + d <= 0          (the box, C = [I; -I])
//!               F x + g  in K         (stacked rotated cones)
//! ```
//!
//! plus the normalization vectors `omega = (upper+lower)/2` and
//! `sigma = (upper-lower)/2` that map the box onto the unit infinity-norm
//! ball. Each cone occupies a contiguous row range of `F`/`g` ordered as
//! (slot1, slot2, vector...). The bound matrix `C` and constants `d` are
//! never needed on the dual-norm evaluation path (the box is dualized
//! analytically), so they are materialized lazily for the conic-dual
//! evaluators and mu recovery only.

use std::sync::OnceLock;

use serde::Serialize;
use thiserror::Error;

use crate::jabr::{ConeKind, PrimalModel, Slot, VarLayout};
use crate::sparse::{CsrMatrix, TripletJson};

#[derive(Debug, Error)]
pub enum CanonError {
    #[error("degenerate box at coordinate {index}: lower {lower} == upper {upper}")]
    DegenerateBox {
        index: usize,
        lower: f64,
        upper: f64,
    },
}

/// Row range of one cone inside `F`/`g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConeSpan {
    pub kind: ConeKind,
    pub start: usize,
    /// Total rows: 2 scalar slots plus the vector length.
    pub len: usize,
}

impl ConeSpan {
    pub fn slot1(&self) -> usize {
        self.start
    }

    pub fn slot2(&self) -> usize {
        self.start + 1
    }

    pub fn vector(&self) -> std::ops::Range<usize> {
        self.start + 2..self.start + self.len
    }

    pub fn rows(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// The canonical problem blocks, immutable after construction.
#[derive(Debug)]
pub struct CanonicalProblem {
    pub layout: VarLayout,
    /// Objective vector (1 at t, linear costs at P^g).
    pub objective: Vec<f64>,
    /// Equality rows: `eq_matrix * x + eq_const = 0`.
    pub eq_matrix: CsrMatrix,
    pub eq_const: Vec<f64>,
    /// Cone map: rows of `cone_matrix * x + cone_const` grouped by `cones`.
    pub cone_matrix: CsrMatrix,
    pub cone_const: Vec<f64>,
    pub cones: Vec<ConeSpan>,
    /// Box bounds and their normalization.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub omega: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Constant cost terms added to reported objectives.
    pub c0_sum: f64,
    bound_blocks: OnceLock<(CsrMatrix, Vec<f64>)>,
}

impl CanonicalProblem {
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_eq(&self) -> usize {
        self.eq_const.len()
    }

    pub fn num_cone_rows(&self) -> usize {
        self.cone_const.len()
    }

    /// The bound blocks `(C, d)` with `C = [I; -I]`, `d = (-upper; lower)`;
    /// rows 0..n are upper bounds, rows n..2n lower bounds.
    pub fn bound_blocks(&self) -> &(CsrMatrix, Vec<f64>) {
        self.bound_blocks.get_or_init(|| {
            let n = self.num_vars();
            let mut triplets = Vec::with_capacity(2 * n);
            let mut d = Vec::with_capacity(2 * n);
            for i in 0..n {
                triplets.push((i, i, 1.0));
            }
            for i in 0..n {
                triplets.push((n + i, i, -1.0));
            }
            d.extend(self.upper.iter().map(|&u| -u));
            d.extend(self.lower.iter().copied());
            (CsrMatrix::from_triplets(2 * n, n, &triplets), d)
        })
    }

    /// Debug dump of all blocks in the documented sparse-triplet JSON schema.
    pub fn to_debug_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Dump<'a> {
            num_vars: usize,
            objective: &'a [f64],
            eq_matrix: TripletJson,
            eq_const: &'a [f64],
            cone_matrix: TripletJson,
            cone_const: &'a [f64],
            cones: &'a [ConeSpan],
            lower: &'a [f64],
            upper: &'a [f64],
            omega: &'a [f64],
            sigma: &'a [f64],
            c0_sum: f64,
        }
        serde_json::to_value(Dump {
            num_vars: self.num_vars(),
            objective: &self.objective,
            eq_matrix: self.eq_matrix.to_debug_json(),
            eq_const: &self.eq_const,
            cone_matrix: self.cone_matrix.to_debug_json(),
            cone_const: &self.cone_const,
            cones: &self.cones,
            lower: &self.lower,
            upper: &self.upper,
            omega: &self.omega,
            sigma: &self.sigma,
            c0_sum: self.c0_sum,
        })
        .expect("canonical dump serialization cannot fail")
    }
}

/// Normalization vectors: `omega = (upper+lower)/2`, `sigma = (upper-lower)/2`.
///
/// The affine map `(x - omega) / sigma` sends the box onto the unit
/// infinity-norm ball.
pub fn normalize(primal: &PrimalModel) -> Result<(Vec<f64>, Vec<f64>), CanonError> {
    let n = primal.lower.len();
    let mut omega = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for i in 0..n {
        let lo = primal.lower[i];
        let hi = primal.upper[i];
        if hi <= lo {
            return Err(CanonError::DegenerateBox {
                index: i,
                lower: lo,
                upper: hi,
            });
        }
        omega.push(0.5 * (hi + lo));
        sigma.push(0.5 * (hi - lo));
    }
    Ok((omega, sigma))
}

/// Flatten a primal model into canonical blocks.
pub fn canonicalize(primal: &PrimalModel) -> Result<CanonicalProblem, CanonError> {
    let n = primal.layout.dim();
    let (omega, sigma) = normalize(primal)?;

    let mut eq_triplets = Vec::new();
    let mut eq_const = Vec::with_capacity(primal.eq_rows.len());
    for (r, row) in primal.eq_rows.iter().enumerate() {
        for &(col, val) in &row.entries {
            eq_triplets.push((r, col, val));
        }
        eq_const.push(row.constant);
    }
    let eq_matrix = CsrMatrix::from_triplets(primal.eq_rows.len(), n, &eq_triplets);

    let mut cone_triplets = Vec::new();
    let mut cone_const = Vec::new();
    let mut cones = Vec::with_capacity(primal.cones.len());
    for block in &primal.cones {
        let start = cone_const.len();
        let mut push_slot = |slot: &Slot, row: usize| match *slot {
            Slot::Var { index, scale } => {
                cone_triplets.push((row, index, scale));
                cone_const.push(0.0);
            }
            Slot::Const(v) => {
                cone_const.push(v);
            }
        };
        push_slot(&block.slot1, start);
        push_slot(&block.slot2, start + 1);
        for (k, slot) in block.vector.iter().enumerate() {
            push_slot(slot, start + 2 + k);
        }
        cones.push(ConeSpan {
            kind: block.kind,
            start,
            len: 2 + block.vector.len(),
        });
    }
    let cone_matrix = CsrMatrix::from_triplets(cone_const.len(), n, &cone_triplets);

    Ok(CanonicalProblem {
        layout: primal.layout,
        objective: primal.objective.clone(),
        eq_matrix,
        eq_const,
        cone_matrix,
        cone_const,
        cones,
        lower: primal.lower.clone(),
        upper: primal.upper.clone(),
        omega,
        sigma,
        c0_sum: primal.c0_sum,
        bound_blocks: OnceLock::new(),
    })
}
