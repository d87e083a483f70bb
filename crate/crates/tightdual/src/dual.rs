//! Dual-side machinery: the conic dual and tight-dual evaluators, the
//! scalar replacement function, the dual-norm objective with subgradient,
//! and recovery of the box multipliers.
//!
//! Conventions. A dual point carries one multiplier per equality row
//! (`lambda`, free sign), one tuple per cone, and optionally the box
//! multipliers `mu` (length `2n`, upper-bound rows first). A *reduced* tuple
//! has `scalar1 = None`: that slot is implied by the replacement function.
//! In reduced form the cost cone's `scalar2` is structurally fixed at 1 and
//! is not a decision variable.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::canon::CanonicalProblem;
use crate::jabr::ConeKind;

#[derive(Debug, Error)]
pub enum DualError {
    #[error("cone {cone}: scalar2 = 0 with eps = 0 and a nonzero vector; replacement is singular")]
    DivisionSingularity { cone: usize },
    #[error("cone {cone}: scalar2 = {value} violates the nonnegativity precondition")]
    NegativeScalar { cone: usize, value: f64 },
    #[error("cone {cone}: full dual point required but scalar1 is absent")]
    FullPointRequired { cone: usize },
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
}

/// One dual cone tuple `(scalar1, scalar2, vec)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeTuple {
    /// Absent in reduced form; implied by the replacement function.
    pub scalar1: Option<f64>,
    pub scalar2: f64,
    pub vec: Vec<f64>,
}

/// A dual point for any of the dual formulations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub lambda: Vec<f64>,
    pub cones: Vec<ConeTuple>,
    /// Box multipliers, present only after recovery (length `2n`:
    /// upper-bound rows then lower-bound rows).
    pub mu: Option<Vec<f64>>,
}

impl DualPoint {
    /// All-zero reduced point (cost cone scalar2 at its structural value 1).
    pub fn zeros_reduced(problem: &CanonicalProblem) -> Self {
        let cones = problem
            .cones
            .iter()
            .map(|span| ConeTuple {
                scalar1: None,
                scalar2: if span.kind == ConeKind::CostEpi { 1.0 } else { 0.0 },
                vec: vec![0.0; span.len - 2],
            })
            .collect();
        DualPoint {
            lambda: vec![0.0; problem.num_eq()],
            cones,
            mu: None,
        }
    }

    /// True when every tuple carries scalar1.
    pub fn is_full(&self) -> bool {
        self.cones.iter().all(|c| c.scalar1.is_some())
    }
}

fn check_dims(problem: &CanonicalProblem, point: &DualPoint) -> Result<(), DualError> {
    if point.lambda.len() != problem.num_eq() {
        return Err(DualError::DimensionMismatch {
            what: format!(
                "lambda has {} entries, problem has {} equality rows",
                point.lambda.len(),
                problem.num_eq()
            ),
        });
    }
    if point.cones.len() != problem.cones.len() {
        return Err(DualError::DimensionMismatch {
            what: format!(
                "{} cone tuples for {} cones",
                point.cones.len(),
                problem.cones.len()
            ),
        });
    }
    for (i, (tuple, span)) in point.cones.iter().zip(&problem.cones).enumerate() {
        if tuple.vec.len() != span.len - 2 {
            return Err(DualError::DimensionMismatch {
                what: format!(
                    "cone {i}: vector length {} != {}",
                    tuple.vec.len(),
                    span.len - 2
                ),
            });
        }
    }
    Ok(())
}

/// Flatten a full point's cone tuples into the cone-row vector.
pub(crate) fn flatten_full(
    problem: &CanonicalProblem,
    point: &DualPoint,
) -> Result<Vec<f64>, DualError> {
    check_dims(problem, point)?;
    let mut rho = vec![0.0; problem.num_cone_rows()];
    for (i, (tuple, span)) in point.cones.iter().zip(&problem.cones).enumerate() {
        rho[span.slot1()] = tuple
            .scalar1
            .ok_or(DualError::FullPointRequired { cone: i })?;
        rho[span.slot2()] = tuple.scalar2;
        rho[span.vector()]
            .copy_from_slice(&tuple.vec);
    }
    Ok(rho)
}


/// The replacement function: eliminate each tuple's first scalar.
///
/// For the Jabr and flow cones `scalar1 = ||vec||^2 / (2*scalar2 + eps)`;
/// for the cost cone `scalar1 = ||vec||^2 / 2` with no stabilization. All
/// other entries are copied.
pub fn replace(
    problem: &CanonicalProblem,
    point: &DualPoint,
    eps: f64,
) -> Result<DualPoint, DualError> {
    check_dims(problem, point)?;
    let mut cones = Vec::with_capacity(point.cones.len());
    for (i, (tuple, span)) in point.cones.iter().zip(&problem.cones).enumerate() {
        let vv: f64 = tuple.vec.iter().map(|v| v * v).sum();
        let scalar1 = match span.kind {
            ConeKind::CostEpi => 0.5 * vv,
            _ => {
                if tuple.scalar2 < 0.0 {
                    return Err(DualError::NegativeScalar {
                        cone: i,
                        value: tuple.scalar2,
                    });
                }
                let den = 2.0 * tuple.scalar2 + eps;
                if den == 0.0 {
                    if vv == 0.0 {
                        0.0
                    } else {
                        return Err(DualError::DivisionSingularity { cone: i });
                    }
                } else {
                    vv / den
                }
            }
        };
        cones.push(ConeTuple {
            scalar1: Some(scalar1),
            scalar2: tuple.scalar2,
            vec: tuple.vec.clone(),
        });
    }
    Ok(DualPoint {
        lambda: point.lambda.clone(),
        cones,
        mu: point.mu.clone(),
    })
}

/// Result of evaluating the all-conic dual at a point.
#[derive(Debug, Clone)]
pub struct AcdEval {
    /// `lambda' b + mu' d - dtilde' g` (model units; add `c0_sum` to report).
    pub objective: f64,
    /// Stationarity residual `m + A' lambda + C' mu - F' dtilde`.
    pub residual: Vec<f64>,
}

/// Evaluate the all-conic dual objective and stationarity residual at a
/// full dual point. Missing `mu` is treated as zero.
pub fn acd_eval(problem: &CanonicalProblem, point: &DualPoint) -> Result<AcdEval, DualError> {
    let rho = flatten_full(problem, point)?;
    let n = problem.num_vars();
    let zero_mu = vec![0.0; 2 * n];
    let mu = match &point.mu {
        Some(m) => {
            if m.len() != 2 * n {
                return Err(DualError::DimensionMismatch {
                    what: format!("mu has {} entries, expected {}", m.len(), 2 * n),
                });
            }
            m.as_slice()
        }
        None => zero_mu.as_slice(),
    };
    let (c_mat, d_vec) = problem.bound_blocks();

    let mut objective = 0.0;
    for (l, b) in point.lambda.iter().zip(&problem.eq_const) {
        objective += l * b;
    }
    for (m, d) in mu.iter().zip(d_vec) {
        objective += m * d;
    }
    for (t, g) in rho.iter().zip(&problem.cone_const) {
        objective -= t * g;
    }

    let mut residual = problem.objective.clone();
    problem.eq_matrix.matvec_t_acc(&point.lambda, 1.0, &mut residual);
    c_mat.matvec_t_acc(mu, 1.0, &mut residual);
    problem.cone_matrix.matvec_t_acc(&rho, -1.0, &mut residual);

    Ok(AcdEval { objective, residual })
}

/// Per-cone dual slack `2*d1*d2 - ||dvec||^2` of a full point.
///
/// Nonnegative (with nonnegative scalars) iff the tuple lies in the dual
/// rotated cone; the cone is self-dual.
pub fn cone_slacks(problem: &CanonicalProblem, point: &DualPoint) -> Result<Vec<f64>, DualError> {
    check_dims(problem, point)?;
    point
        .cones
        .iter()
        .enumerate()
        .map(|(i, tuple)| {
            let d1 = tuple
                .scalar1
                .ok_or(DualError::FullPointRequired { cone: i })?;
            let vv: f64 = tuple.vec.iter().map(|v| v * v).sum();
            Ok(2.0 * d1 * tuple.scalar2 - vv)
        })
        .collect()
}

/// Shared dual-norm value: `-||M_sigma gamma||_1 + gamma' omega + lambda' b
/// - rho' g` with `gamma = m + A' lambda - F' rho`.
pub(crate) fn dualnorm_value(problem: &CanonicalProblem, lambda: &[f64], rho: &[f64]) -> f64 {
    let mut gamma = problem.objective.clone();
    problem.eq_matrix.matvec_t_acc(lambda, 1.0, &mut gamma);
    problem.cone_matrix.matvec_t_acc(rho, -1.0, &mut gamma);
    let mut value = 0.0;
    for i in 0..gamma.len() {
        value += -problem.sigma[i] * gamma[i].abs() + gamma[i] * problem.omega[i];
    }
    for (l, b) in lambda.iter().zip(&problem.eq_const) {
        value += l * b;
    }
    for (t, g) in rho.iter().zip(&problem.cone_const) {
        value -= t * g;
    }
    value
}

/// Evaluate the dual-norm form of the all-conic dual at a *full* point
/// (box multipliers eliminated analytically). Used by the certified bound
/// and by the objective-equivalence checks.
pub fn dualnorm_value_full(
    problem: &CanonicalProblem,
    point: &DualPoint,
) -> Result<f64, DualError> {
    let rho = flatten_full(problem, point)?;
    Ok(dualnorm_value(problem, &point.lambda, &rho))
}

/// Reusable evaluation workspace for the reduced tight-dual objective.
///
/// Holds the scratch vectors so the ascent loop performs no allocation.
pub(crate) struct AtdEvaluator<'p> {
    pub problem: &'p CanonicalProblem,
    rho: Vec<f64>,
    gamma: Vec<f64>,
    q: Vec<f64>,
    h: Vec<f64>,
}

/// Gradient of the reduced objective, shaped like a reduced point.
#[derive(Debug, Clone)]
pub struct ReducedGrad {
    pub lambda: Vec<f64>,
    /// Per cone: (d objective / d scalar2, d objective / d vec). The cost
    /// cone's scalar2 entry is identically 0 (fixed variable).
    pub cones: Vec<(f64, Vec<f64>)>,
}

impl<'p> AtdEvaluator<'p> {
    pub fn new(problem: &'p CanonicalProblem) -> Self {
        AtdEvaluator {
            problem,
            rho: vec![0.0; problem.num_cone_rows()],
            gamma: vec![0.0; problem.num_vars()],
            q: vec![0.0; problem.num_vars()],
            h: vec![0.0; problem.num_cone_rows()],
        }
    }

    /// Fill `rho` from reduced per-cone values. `scalars2[i]`/`vecs[i]` index
    /// flat storage described by `offsets`.
    fn build_rho(&mut self, point: &DualPoint, eps: f64) -> Result<(), DualError> {
        let problem = self.problem;
        for (i, (tuple, span)) in point.cones.iter().zip(&problem.cones).enumerate() {
            let vv: f64 = tuple.vec.iter().map(|v| v * v).sum();
            match span.kind {
                ConeKind::CostEpi => {
                    self.rho[span.slot1()] = 0.5 * vv;
                    self.rho[span.slot2()] = 1.0;
                }
                _ => {
                    if tuple.scalar2 < 0.0 {
                        return Err(DualError::NegativeScalar {
                            cone: i,
                            value: tuple.scalar2,
                        });
                    }
                    let den = 2.0 * tuple.scalar2 + eps;
                    if den == 0.0 && vv != 0.0 {
                        return Err(DualError::DivisionSingularity { cone: i });
                    }
                    self.rho[span.slot1()] = if den == 0.0 { 0.0 } else { vv / den };
                    self.rho[span.slot2()] = tuple.scalar2;
                }
            }
            self.rho[span.vector()].copy_from_slice(&tuple.vec);
        }
        Ok(())
    }

    /// Objective value, and optionally the subgradient, at a reduced point.
    ///
    /// `nu` > 0 swaps the exact l1 kink for a pseudo-Huber surrogate in the
    /// *gradient only*; the returned value is always the exact objective.
    pub fn value_grad(
        &mut self,
        point: &DualPoint,
        eps: f64,
        nu: f64,
        mut grad: Option<&mut ReducedGrad>,
    ) -> Result<f64, DualError> {
        check_dims(self.problem, point)?;
        self.build_rho(point, eps)?;
        let problem = self.problem;

        self.gamma.copy_from_slice(&problem.objective);
        problem
            .eq_matrix
            .matvec_t_acc(&point.lambda, 1.0, &mut self.gamma);
        problem.cone_matrix.matvec_t_acc(&self.rho, -1.0, &mut self.gamma);

        let mut value = 0.0;
        for i in 0..self.gamma.len() {
            let g = self.gamma[i];
            value += -problem.sigma[i] * g.abs() + g * problem.omega[i];
        }
        for (l, b) in point.lambda.iter().zip(&problem.eq_const) {
            value += l * b;
        }
        for (t, g) in self.rho.iter().zip(&problem.cone_const) {
            value -= t * g;
        }

        if let Some(out) = grad.as_deref_mut() {
            // q = d/d gamma of the box minimum; sign(0) taken as 0
            for i in 0..self.gamma.len() {
                let g = self.gamma[i];
                let slope = if nu > 0.0 {
                    g / (g * g + nu * nu).sqrt()
                } else if g > 0.0 {
                    1.0
                } else if g < 0.0 {
                    -1.0
                } else {
                    0.0
                };
                self.q[i] = -problem.sigma[i] * slope + problem.omega[i];
            }
            out.lambda.resize(problem.num_eq(), 0.0);
            problem.eq_matrix.matvec(&self.q, &mut out.lambda);
            for (l, b) in out.lambda.iter_mut().zip(&problem.eq_const) {
                *l += b;
            }
            // h = -F q - g over cone rows
            problem.cone_matrix.matvec(&self.q, &mut self.h);
            for (hr, gr) in self.h.iter_mut().zip(&problem.cone_const) {
                *hr = -*hr - gr;
            }
            out.cones.resize(point.cones.len(), (0.0, Vec::new()));
            for (i, (tuple, span)) in point.cones.iter().zip(&problem.cones).enumerate() {
                let (ga, gv) = &mut out.cones[i];
                gv.resize(tuple.vec.len(), 0.0);
                let h1 = self.h[span.slot1()];
                match span.kind {
                    ConeKind::CostEpi => {
                        *ga = 0.0;
                        for (j, v) in tuple.vec.iter().enumerate() {
                            gv[j] = h1 * v + self.h[span.start + 2 + j];
                        }
                    }
                    _ => {
                        let den = 2.0 * tuple.scalar2 + eps;
                        let vv: f64 = tuple.vec.iter().map(|v| v * v).sum();
                        let (d_slot1_da, inv_den) = if den == 0.0 {
                            (0.0, 0.0)
                        } else {
                            (-2.0 * vv / (den * den), 1.0 / den)
                        };
                        *ga = h1 * d_slot1_da + self.h[span.slot2()];
                        for (j, v) in tuple.vec.iter().enumerate() {
                            gv[j] = h1 * 2.0 * v * inv_den + self.h[span.start + 2 + j];
                        }
                    }
                }
            }
        }
        Ok(value)
    }
}

/// The reduced tight-dual objective and one subgradient at a reduced point.
///
/// Value: `-||M_sigma gamma||_1 + gamma' omega + lambda' b - r(dtilde,eps)' g`
/// with `gamma = m + A' lambda - F' r(dtilde, eps)`.
pub fn dualnorm_objective(
    problem: &CanonicalProblem,
    point: &DualPoint,
    eps: f64,
) -> Result<(f64, ReducedGrad), DualError> {
    let mut eval = AtdEvaluator::new(problem);
    let mut grad = ReducedGrad {
        lambda: Vec::new(),
        cones: Vec::new(),
    };
    let value = eval.value_grad(point, eps, 0.0, Some(&mut grad))?;
    Ok((value, grad))
}

/// Result of evaluating the t-tight dual at a point.
#[derive(Debug, Clone)]
pub struct TtdEval {
    pub objective: f64,
    pub residual: Vec<f64>,
    /// Dual-cone membership of each tuple after the cost-scalar elimination.
    pub cone_feasible: Vec<bool>,
}

/// Evaluate the t-tight dual: only the cost cone's first scalar is
/// eliminated; every other tuple must be supplied in full and is checked
/// for dual-cone membership.
pub fn ttd_eval(problem: &CanonicalProblem, point: &DualPoint) -> Result<TtdEval, DualError> {
    check_dims(problem, point)?;
    let mut completed = point.clone();
    for (tuple, span) in completed.cones.iter_mut().zip(&problem.cones) {
        if span.kind == ConeKind::CostEpi {
            let vv: f64 = tuple.vec.iter().map(|v| v * v).sum();
            tuple.scalar1 = Some(0.5 * vv);
        }
    }
    let acd = acd_eval(problem, &completed)?;
    let cone_feasible = completed
        .cones
        .iter()
        .map(|t| {
            let d1 = t.scalar1.unwrap();
            let vv: f64 = t.vec.iter().map(|v| v * v).sum();
            d1 >= 0.0 && t.scalar2 >= 0.0 && 2.0 * d1 * t.scalar2 - vv >= 0.0
        })
        .collect();
    Ok(TtdEval {
        objective: acd.objective,
        residual: acd.residual,
        cone_feasible,
    })
}

/// Recover box multipliers from a full dual point.
///
/// With `rho = F' dtilde - A' lambda - m`, the upper-bound row of
/// coordinate `i` gets `max(rho_i, 0)` and the lower-bound row
/// `max(-rho_i, 0)`; the result satisfies `C' mu = rho`, `mu >= 0`, and
/// componentwise complementarity.
pub fn recover_mu(problem: &CanonicalProblem, point: &DualPoint) -> Result<Vec<f64>, DualError> {
    let dt = flatten_full(problem, point)?;
    let n = problem.num_vars();
    let mut rho: Vec<f64> = problem.objective.iter().map(|m| -m).collect();
    problem.eq_matrix.matvec_t_acc(&point.lambda, -1.0, &mut rho);
    problem.cone_matrix.matvec_t_acc(&dt, 1.0, &mut rho);
    let mut mu = vec![0.0; 2 * n];
    for i in 0..n {
        mu[i] = rho[i].max(0.0);
        mu[n + i] = (-rho[i]).max(0.0);
    }
    Ok(mu)
}
