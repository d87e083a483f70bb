//! First-order maximization of the reduced tight-dual objective.
//!
//! The decision variables are the equality multipliers (free), each
//! Jabr/flow cone's second scalar (nonnegative) and vector (free), and the
//! cost cone's vector; every first scalar is eliminated by the replacement
//! function and the cost cone's second scalar is structurally 1. The only
//! projection in the ascent loop is clamping the cone scalars to the
//! nonnegative orthant.

use serde::Serialize;
use thiserror::Error;

use crate::canon::CanonicalProblem;
use crate::dual::{AtdEvaluator, DualError, DualPoint, ReducedGrad};
use crate::jabr::ConeKind;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("objective became non-finite at iteration {iteration}")]
    Numerical {
        iteration: usize,
        /// Iterate at the failure, for post-mortems.
        dump: Box<DualPoint>,
    },
    #[error("invalid config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Dual(#[from] DualError),
}

/// Step-size rule for the ascent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepRule {
    /// Fixed step along the raw subgradient.
    Constant { step: f64 },
    /// Per-coordinate adaptive scaling: steps are the bias-corrected
    /// gradient average divided by the bias-corrected root of a decayed
    /// squared-gradient accumulator. `momentum` is the gradient-average
    /// factor, `decay` the accumulator factor; `momentum = 0, decay = 1`
    /// recovers plain adagrad scaling.
    Adaptive {
        step: f64,
        decay: f64,
        momentum: f64,
    },
    /// Polyak steps toward a known target value.
    Polyak { target: f64 },
}

/// Annealed pseudo-Huber smoothing of the l1 kinks, applied to the
/// gradient only. The width starts at `initial` and shrinks by `shrink`
/// at every stage boundary (see [`SolveConfig::stage_iters`]); below
/// `floor` it snaps to zero and the remaining stages run on the exact
/// subgradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Smoothing {
    pub initial: f64,
    pub shrink: f64,
    pub floor: f64,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing {
            initial: 1e3,
            shrink: 0.1,
            floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveConfig {
    /// Stabilization added to replacement denominators.
    pub eps: f64,
    pub max_iter: usize,
    pub step_rule: StepRule,
    /// Iterations per schedule stage: at each stage boundary the step
    /// shrinks by `step_decay` and the smoothing width by its own factor.
    /// Large early steps cover the distance to the optimum; small late
    /// steps settle into the kink vertex where it lives.
    pub stage_iters: usize,
    /// Per-stage step multiplier (1.0 disables the decay).
    pub step_decay: f64,
    /// Relative best-objective progress threshold over one patience window.
    pub tol_rel: f64,
    /// Window length, in iterations, for the progress test.
    pub patience: usize,
    /// Seed for the optional random warm-start jitter.
    pub seed: u64,
    /// Relative magnitude of the warm-start jitter (0 disables it).
    pub init_jitter: f64,
    pub smoothing: Option<Smoothing>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            eps: 1e-6,
            max_iter: 480_000,
            step_rule: StepRule::Adaptive {
                step: 1.0,
                decay: 0.999,
                momentum: 0.9,
            },
            stage_iters: 30_000,
            step_decay: 0.5,
            tol_rel: 1e-9,
            patience: 30_000,
            seed: 0,
            init_jitter: 0.0,
            smoothing: Some(Smoothing::default()),
        }
    }
}

impl SolveConfig {
    fn check(&self) -> Result<(), SolveError> {
        if self.eps < 0.0 {
            return Err(SolveError::BadConfig(format!("eps {} < 0", self.eps)));
        }
        if self.max_iter == 0 {
            return Err(SolveError::BadConfig("max_iter must be >= 1".into()));
        }
        if self.tol_rel <= 0.0 {
            return Err(SolveError::BadConfig(format!(
                "tol_rel {} must be > 0",
                self.tol_rel
            )));
        }
        if self.stage_iters == 0 {
            return Err(SolveError::BadConfig("stage_iters must be >= 1".into()));
        }
        if !(self.step_decay > 0.0 && self.step_decay <= 1.0) {
            return Err(SolveError::BadConfig(format!(
                "step_decay {} must be in (0, 1]",
                self.step_decay
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Tolerance,
    IterationLimit,
}

/// Result of an ascent run.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub best_objective: f64,
    pub best_point: DualPoint,
    pub iterations: usize,
    pub termination: Termination,
    /// (iteration, running best) samples at a fixed stride.
    pub trace: Vec<(usize, f64)>,
}

/// Reduced starting point: zero multipliers, zero cone vectors, second
/// scalars at 1 (interior of the orthant, away from the replacement
/// singularity).
pub fn warm_start(problem: &CanonicalProblem) -> DualPoint {
    let mut point = DualPoint::zeros_reduced(problem);
    for (tuple, span) in point.cones.iter_mut().zip(&problem.cones) {
        if span.kind != ConeKind::CostEpi {
            tuple.scalar2 = 1.0;
        }
    }
    point
}

/// Visit every reduced decision coordinate of `point` in a fixed order
/// (lambda, then per non-cost cone its scalar2 followed by its vector
/// entries, then the cost vector), together with the matching gradient
/// coordinate.
fn update_coords(
    problem: &CanonicalProblem,
    point: &mut DualPoint,
    grad: &ReducedGrad,
    mut f: impl FnMut(usize, &mut f64, f64),
) {
    let mut idx = 0;
    for (l, g) in point.lambda.iter_mut().zip(&grad.lambda) {
        f(idx, l, *g);
        idx += 1;
    }
    for ((tuple, cone_grad), span) in point
        .cones
        .iter_mut()
        .zip(&grad.cones)
        .zip(&problem.cones)
    {
        if span.kind != ConeKind::CostEpi {
            f(idx, &mut tuple.scalar2, cone_grad.0);
            idx += 1;
        }
        for (v, g) in tuple.vec.iter_mut().zip(&cone_grad.1) {
            f(idx, v, *g);
            idx += 1;
        }
    }
}

fn reduced_dim(problem: &CanonicalProblem) -> usize {
    let mut dim = problem.num_eq();
    for span in &problem.cones {
        dim += span.len - 2;
        if span.kind != ConeKind::CostEpi {
            dim += 1;
        }
    }
    dim
}

/// Maximize the reduced tight-dual objective with projected first-order
/// ascent. Every iterate keeps the cone scalars nonnegative; the running
/// best objective is nondecreasing by construction.
pub fn solve_atd(
    problem: &CanonicalProblem,
    config: &SolveConfig,
) -> Result<SolveReport, SolveError> {
    solve_atd_from(problem, config, None)
}

/// Like [`solve_atd`] but optionally starting from a supplied reduced
/// point (used by the stabilization sweep to chain solutions).
pub fn solve_atd_from(
    problem: &CanonicalProblem,
    config: &SolveConfig,
    start: Option<&DualPoint>,
) -> Result<SolveReport, SolveError> {
    config.check()?;
    let mut point = match start {
        Some(p) => {
            let mut p = p.clone();
            p.mu = None;
            for (tuple, span) in p.cones.iter_mut().zip(&problem.cones) {
                tuple.scalar1 = None;
                if span.kind == ConeKind::CostEpi {
                    tuple.scalar2 = 1.0;
                } else if tuple.scalar2 < 0.0 {
                    tuple.scalar2 = 0.0;
                }
            }
            p
        }
        None => warm_start(problem),
    };
    if config.init_jitter > 0.0 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
        let jitter = config.init_jitter;
        for l in point.lambda.iter_mut() {
            *l += jitter * rng.gen_range(-1.0..1.0);
        }
        for (tuple, span) in point.cones.iter_mut().zip(&problem.cones) {
            if span.kind != ConeKind::CostEpi {
                tuple.scalar2 = (tuple.scalar2 + jitter * rng.gen_range(-1.0..1.0)).max(0.0);
            }
            for v in tuple.vec.iter_mut() {
                *v += jitter * rng.gen_range(-1.0..1.0);
            }
        }
    }

    let dim = reduced_dim(problem);
    let mut eval = AtdEvaluator::new(problem);
    let mut grad = ReducedGrad {
        lambda: Vec::new(),
        cones: Vec::new(),
    };

    // adaptive-rule state
    let mut acc = vec![0.0f64; dim];
    let mut vel = vec![0.0f64; dim];

    let mut best = f64::NEG_INFINITY;
    let mut best_point = point.clone();
    let mut trace = Vec::new();
    let stride = (config.max_iter / 1000).max(1);

    let mut window_best = f64::NEG_INFINITY;
    let mut window_left = config.patience;
    let mut termination = Termination::IterationLimit;
    let mut iterations = config.max_iter;

    for k in 0..config.max_iter {
        let stage = (k / config.stage_iters) as i32;
        let stage_scale = config.step_decay.powi(stage);
        let nu = match &config.smoothing {
            Some(s) => {
                let nu = s.initial * s.shrink.powi(stage);
                if nu < s.floor {
                    0.0
                } else {
                    nu
                }
            }
            None => 0.0,
        };
        let value = eval.value_grad(&point, config.eps, nu, Some(&mut grad))?;
        if !value.is_finite() {
            return Err(SolveError::Numerical {
                iteration: k,
                dump: Box::new(point),
            });
        }
        if value > best {
            best = value;
            best_point = point.clone();
        }
        if k % stride == 0 {
            trace.push((k, best));
        }

        match config.step_rule {
            StepRule::Constant { step } => {
                let step = step * stage_scale;
                update_coords(problem, &mut point, &grad, |_, v, g| {
                    *v += step * g;
                });
            }
            StepRule::Adaptive {
                step,
                decay,
                momentum,
            } => {
                let step = step * stage_scale;
                let t = (k + 1) as i32;
                let m_corr = 1.0 - momentum.powi(t);
                let s_corr = 1.0 - decay.powi(t);
                update_coords(problem, &mut point, &grad, |i, v, g| {
                    vel[i] = momentum * vel[i] + (1.0 - momentum) * g;
                    acc[i] = decay * acc[i] + (1.0 - decay) * g * g;
                    let mhat = vel[i] / m_corr;
                    let shat = acc[i] / s_corr;
                    *v += step * mhat / (shat.sqrt() + 1e-12);
                });
            }
            StepRule::Polyak { target } => {
                let mut gg = 0.0;
                update_coords(problem, &mut point, &grad, |_, _, g| {
                    gg += g * g;
                });
                let step = if gg > 0.0 {
                    ((target - value) / gg).max(0.0)
                } else {
                    0.0
                };
                update_coords(problem, &mut point, &grad, |_, v, g| {
                    *v += step * g;
                });
            }
        }
        // the single projection: clamp cone scalars to the orthant
        for (tuple, span) in point.cones.iter_mut().zip(&problem.cones) {
            if span.kind != ConeKind::CostEpi && tuple.scalar2 < 0.0 {
                tuple.scalar2 = 0.0;
            }
        }

        // progress-based stop, measured only once smoothing has annealed out
        if nu == 0.0 {
            if window_best == f64::NEG_INFINITY {
                window_best = best;
            }
            window_left -= 1;
            if window_left == 0 {
                let gain = best - window_best;
                if gain < config.tol_rel * best.abs().max(1.0) {
                    termination = Termination::Tolerance;
                    iterations = k + 1;
                    break;
                }
                window_best = best;
                window_left = config.patience;
            }
        }
    }

    trace.push((iterations.saturating_sub(1), best));
    Ok(SolveReport {
        best_objective: best,
        best_point,
        iterations,
        termination,
        trace,
    })
}

/// How one Jacobian entry of the exported problem is computed.
enum JacContrib {
    /// Constant coefficient (rows of A', C').
    Const(f64),
    /// d residual_i / d scalar2 of cone `cone`; coefficient of the slot1
    /// row times the quotient derivative plus the slot2-row coefficient.
    ConeScalar2 {
        cone: usize,
        f_slot1: f64,
        f_slot2: f64,
    },
    /// d residual_i / d vec_j of cone `cone`.
    ConeVec {
        cone: usize,
        j: usize,
        f_slot1: f64,
        f_vec: f64,
    },
}

/// Callback bundle for external nonlinear solvers.
///
/// Variables are ordered `lambda` (free), `mu` (nonnegative, upper-bound
/// rows then lower-bound rows), then per non-cost cone its scalar2
/// (nonnegative) followed by its vector (free), then the cost-cone vector
/// (free). The cost cone's scalars are eliminated (scalar1 by replacement,
/// scalar2 fixed at 1). Constraints are the stationarity rows
/// `m + A' lambda + C' mu - F' r(dtilde, eps) = 0`, one per primal
/// coordinate. The Jacobian sparsity is fixed; values are evaluated
/// against it.
pub struct NlpSpec<'p> {
    problem: &'p CanonicalProblem,
    pub eps: f64,
    n_vars: usize,
    var_lower: Vec<f64>,
    var_upper: Vec<f64>,
    /// Flat offset of each cone's block in the variable vector, aligned
    /// with `problem.cones`; the cost cone's offset points at its vector.
    cone_offsets: Vec<usize>,
    jac_rows: Vec<usize>,
    jac_cols: Vec<usize>,
    jac_contribs: Vec<Vec<JacContrib>>,
}

impl<'p> NlpSpec<'p> {
    pub fn num_vars(&self) -> usize {
        self.n_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.problem.num_vars()
    }

    pub fn jacobian_nnz(&self) -> usize {
        self.jac_rows.len()
    }

    pub fn jacobian_sparsity(&self) -> (&[usize], &[usize]) {
        (&self.jac_rows, &self.jac_cols)
    }

    pub fn variable_bounds(&self) -> (&[f64], &[f64]) {
        (&self.var_lower, &self.var_upper)
    }

    fn num_eq(&self) -> usize {
        self.problem.num_eq()
    }

    fn mu_offset(&self) -> usize {
        self.problem.num_eq()
    }

    /// Per-cone (scalar2, ||vec||^2, den) pulled from the variable vector.
    fn cone_state(&self, z: &[f64], cone: usize) -> (f64, f64, f64) {
        let span = &self.problem.cones[cone];
        let off = self.cone_offsets[cone];
        let vlen = span.len - 2;
        if span.kind == ConeKind::CostEpi {
            let vv: f64 = z[off..off + vlen].iter().map(|v| v * v).sum();
            (1.0, vv, 2.0)
        } else {
            let a = z[off];
            let vv: f64 = z[off + 1..off + 1 + vlen].iter().map(|v| v * v).sum();
            (a, vv, 2.0 * a + self.eps)
        }
    }

    fn cone_vec_entry(&self, z: &[f64], cone: usize, j: usize) -> f64 {
        let span = &self.problem.cones[cone];
        let off = self.cone_offsets[cone];
        if span.kind == ConeKind::CostEpi {
            z[off + j]
        } else {
            z[off + 1 + j]
        }
    }

    /// Replaced cone-row vector at `z`.
    fn rho(&self, z: &[f64]) -> Vec<f64> {
        let mut rho = vec![0.0; self.problem.num_cone_rows()];
        for (c, span) in self.problem.cones.iter().enumerate() {
            let (a, vv, den) = self.cone_state(z, c);
            rho[span.slot1()] = if den != 0.0 { vv / den } else { 0.0 };
            rho[span.slot2()] = if span.kind == ConeKind::CostEpi { 1.0 } else { a };
            for (j, r) in span.vector().enumerate() {
                rho[r] = self.cone_vec_entry(z, c, j);
            }
        }
        rho
    }

    /// Objective `lambda' b + mu' d - r(dtilde, eps)' g`.
    pub fn objective(&self, z: &[f64]) -> f64 {
        assert_eq!(z.len(), self.n_vars);
        let problem = self.problem;
        let (_, d_vec) = problem.bound_blocks();
        let mut value = 0.0;
        for (l, b) in z[..self.num_eq()].iter().zip(&problem.eq_const) {
            value += l * b;
        }
        let mu0 = self.mu_offset();
        for (m, d) in z[mu0..mu0 + d_vec.len()].iter().zip(d_vec) {
            value += m * d;
        }
        let rho = self.rho(z);
        for (t, g) in rho.iter().zip(&problem.cone_const) {
            value -= t * g;
        }
        value
    }

    /// Dense objective gradient.
    pub fn gradient(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(out.len(), self.n_vars);
        let problem = self.problem;
        let (_, d_vec) = problem.bound_blocks();
        out.fill(0.0);
        out[..self.num_eq()].copy_from_slice(&problem.eq_const);
        let mu0 = self.mu_offset();
        out[mu0..mu0 + d_vec.len()].copy_from_slice(d_vec);
        for (c, span) in problem.cones.iter().enumerate() {
            let off = self.cone_offsets[c];
            let g1 = problem.cone_const[span.slot1()];
            let g2 = problem.cone_const[span.slot2()];
            let (_, vv, den) = self.cone_state(z, c);
            let vlen = span.len - 2;
            if span.kind == ConeKind::CostEpi {
                for j in 0..vlen {
                    out[off + j] = -g1 * self.cone_vec_entry(z, c, j);
                }
            } else {
                out[off] = if den != 0.0 {
                    g1 * 2.0 * vv / (den * den) - g2
                } else {
                    -g2
                };
                for j in 0..vlen {
                    out[off + 1 + j] = if den != 0.0 {
                        -g1 * 2.0 * self.cone_vec_entry(z, c, j) / den
                    } else {
                        0.0
                    };
                }
            }
        }
    }

    /// Stationarity residual, one row per primal coordinate.
    pub fn constraints(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(out.len(), self.num_constraints());
        let problem = self.problem;
        out.copy_from_slice(&problem.objective);
        problem
            .eq_matrix
            .matvec_t_acc(&z[..self.num_eq()], 1.0, out);
        let n = problem.num_vars();
        let mu0 = self.mu_offset();
        for i in 0..n {
            out[i] += z[mu0 + i] - z[mu0 + n + i];
        }
        let rho = self.rho(z);
        problem.cone_matrix.matvec_t_acc(&rho, -1.0, out);
    }

    /// Jacobian values against the fixed sparsity pattern.
    pub fn jacobian_values(&self, z: &[f64], out: &mut [f64]) {
        assert_eq!(out.len(), self.jac_rows.len());
        for (slot, contribs) in out.iter_mut().zip(&self.jac_contribs) {
            let mut acc = 0.0;
            for contrib in contribs {
                acc += match *contrib {
                    JacContrib::Const(v) => v,
                    JacContrib::ConeScalar2 {
                        cone,
                        f_slot1,
                        f_slot2,
                    } => {
                        let (_, vv, den) = self.cone_state(z, cone);
                        let dr1_da = if den != 0.0 {
                            -2.0 * vv / (den * den)
                        } else {
                            0.0
                        };
                        -(f_slot1 * dr1_da + f_slot2)
                    }
                    JacContrib::ConeVec {
                        cone,
                        j,
                        f_slot1,
                        f_vec,
                    } => {
                        let span = &self.problem.cones[cone];
                        let (_, _, den) = self.cone_state(z, cone);
                        let vj = self.cone_vec_entry(z, cone, j);
                        let dr1_dv = if span.kind == ConeKind::CostEpi {
                            vj
                        } else if den != 0.0 {
                            2.0 * vj / den
                        } else {
                            0.0
                        };
                        -(f_slot1 * dr1_dv + f_vec)
                    }
                };
            }
            *slot = acc;
        }
    }
}

/// Export the stabilized tight dual in equality form for external
/// barrier/SQP solvers.
pub fn export_nlp(problem: &CanonicalProblem, eps: f64) -> NlpSpec<'_> {
    let neq = problem.num_eq();
    let n = problem.num_vars();
    let mut cone_offsets = Vec::with_capacity(problem.cones.len());
    let mut cursor = neq + 2 * n;
    for span in &problem.cones {
        cone_offsets.push(cursor);
        cursor += span.len - 2;
        if span.kind != ConeKind::CostEpi {
            cursor += 1;
        }
    }
    let n_vars = cursor;

    let mut var_lower = vec![f64::NEG_INFINITY; n_vars];
    let var_upper = vec![f64::INFINITY; n_vars];
    for i in neq..neq + 2 * n {
        var_lower[i] = 0.0;
    }
    for (span, &off) in problem.cones.iter().zip(&cone_offsets) {
        if span.kind != ConeKind::CostEpi {
            var_lower[off] = 0.0;
        }
    }

    // accumulate Jacobian contributions per (constraint row, variable col)
    use std::collections::BTreeMap;
    let mut cells: BTreeMap<(usize, usize), Vec<JacContrib>> = BTreeMap::new();
    let mut add = |row: usize, col: usize, contrib: JacContrib| {
        cells.entry((row, col)).or_default().push(contrib);
    };
    // A' block: residual row i, lambda column j, value A[j, i]
    for (j, i, v) in problem.eq_matrix.triplets() {
        add(i, j, JacContrib::Const(v));
    }
    // C' block
    for i in 0..n {
        add(i, neq + i, JacContrib::Const(1.0));
        add(i, neq + n + i, JacContrib::Const(-1.0));
    }
    // cone columns
    for (c, (span, &off)) in problem.cones.iter().zip(&cone_offsets).enumerate() {
        let slot1_cols: Vec<(usize, f64)> = problem.cone_matrix.row(span.slot1()).collect();
        let slot2_cols: Vec<(usize, f64)> = problem.cone_matrix.row(span.slot2()).collect();
        let vlen = span.len - 2;
        if span.kind != ConeKind::CostEpi {
            for &(i, f1) in &slot1_cols {
                add(
                    i,
                    off,
                    JacContrib::ConeScalar2 {
                        cone: c,
                        f_slot1: f1,
                        f_slot2: 0.0,
                    },
                );
            }
            for &(i, f2) in &slot2_cols {
                add(
                    i,
                    off,
                    JacContrib::ConeScalar2 {
                        cone: c,
                        f_slot1: 0.0,
                        f_slot2: f2,
                    },
                );
            }
        }
        let vcol0 = if span.kind == ConeKind::CostEpi { off } else { off + 1 };
        for j in 0..vlen {
            for &(i, f1) in &slot1_cols {
                add(
                    i,
                    vcol0 + j,
                    JacContrib::ConeVec {
                        cone: c,
                        j,
                        f_slot1: f1,
                        f_vec: 0.0,
                    },
                );
            }
            for (i, fv) in problem.cone_matrix.row(span.start + 2 + j) {
                add(
                    i,
                    vcol0 + j,
                    JacContrib::ConeVec {
                        cone: c,
                        j,
                        f_slot1: 0.0,
                        f_vec: fv,
                    },
                );
            }
        }
    }

    let mut jac_rows = Vec::with_capacity(cells.len());
    let mut jac_cols = Vec::with_capacity(cells.len());
    let mut jac_contribs = Vec::with_capacity(cells.len());
    for ((row, col), contribs) in cells {
        jac_rows.push(row);
        jac_cols.push(col);
        jac_contribs.push(contribs);
    }

    NlpSpec {
        problem,
        eps,
        n_vars,
        var_lower,
        var_upper,
        cone_offsets,
        jac_rows,
        jac_cols,
        jac_contribs,
    }
}

/// Pack a reduced dual point (plus recovered mu) into the NLP variable
/// order; useful for warm-starting external solvers.
pub fn pack_nlp_point(spec: &NlpSpec<'_>, point: &DualPoint) -> Vec<f64> {
    let problem = spec.problem;
    let mut z = vec![0.0; spec.num_vars()];
    z[..problem.num_eq()].copy_from_slice(&point.lambda);
    if let Some(mu) = &point.mu {
        let mu0 = spec.mu_offset();
        z[mu0..mu0 + mu.len()].copy_from_slice(mu);
    }
    for ((tuple, span), &off) in point.cones.iter().zip(&problem.cones).zip(&spec.cone_offsets) {
        if span.kind == ConeKind::CostEpi {
            z[off..off + tuple.vec.len()].copy_from_slice(&tuple.vec);
        } else {
            z[off] = tuple.scalar2;
            z[off + 1..off + 1 + tuple.vec.len()].copy_from_slice(&tuple.vec);
        }
    }
    z
}
