//! Lifted-variable primal RSOC relaxation of AC-OPF.
//!
//! Variables are collected into a single vector
//! `x = (t, P^g, Q^g, P^s, P^r, Q^s, Q^r, s, c, w)` where `t` is the cost
//! epigraph scalar, `P^s`/`P^r` are sending/receiving-end active flows per
//! branch (likewise `Q`), `s`/`c` are the lifted voltage products
//! `v_i v_j sin/cos(theta_i - theta_j)` per branch, and `w_i = |V_i|^2` per
//! bus. The model is a box plus linear equality rows plus rotated
//! second-order cone blocks of the canonical form `2*a1*a2 >= ||z||^2`.

use serde::Serialize;
use thiserror::Error;

use crate::netio::{Branch, Network};

/// Minimum box width. Degenerate bounds (fixed generators, vmin = vmax) are
/// widened to this; widening relaxes the feasible set, so dual bounds stay
/// valid for the original problem.
pub const MIN_BOX_WIDTH: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum JabrError {
    #[error("branch {index} has degenerate impedance r = x = 0")]
    DegenerateImpedance { index: usize },
    #[error("branch {index} references undefined bus {label}")]
    UnresolvedBus { index: usize, label: usize },
    #[error("generator {index} references undefined bus {label}")]
    UnresolvedGenBus { index: usize, label: usize },
    #[error("network has no in-service generator")]
    NoGenerator,
}

/// Index ranges of each variable group inside the primal vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VarLayout {
    pub n_gen: usize,
    pub n_branch: usize,
    pub n_bus: usize,
}

impl VarLayout {
    pub fn new(network: &Network) -> Self {
        VarLayout {
            n_gen: network.generators.len(),
            n_branch: network.branches.len(),
            n_bus: network.buses.len(),
        }
    }

    pub fn dim(&self) -> usize {
        1 + 2 * self.n_gen + 6 * self.n_branch + self.n_bus
    }

    pub fn t(&self) -> usize {
        0
    }

    pub fn pg(&self, k: usize) -> usize {
        1 + k
    }

    pub fn qg(&self, k: usize) -> usize {
        1 + self.n_gen + k
    }

    pub fn ps(&self, l: usize) -> usize {
        1 + 2 * self.n_gen + l
    }

    pub fn pr(&self, l: usize) -> usize {
        1 + 2 * self.n_gen + self.n_branch + l
    }

    pub fn qs(&self, l: usize) -> usize {
        1 + 2 * self.n_gen + 2 * self.n_branch + l
    }

    pub fn qr(&self, l: usize) -> usize {
        1 + 2 * self.n_gen + 3 * self.n_branch + l
    }

    pub fn s(&self, l: usize) -> usize {
        1 + 2 * self.n_gen + 4 * self.n_branch + l
    }

    pub fn c(&self, l: usize) -> usize {
        1 + 2 * self.n_gen + 5 * self.n_branch + l
    }

    pub fn w(&self, i: usize) -> usize {
        1 + 2 * self.n_gen + 6 * self.n_branch + i
    }

    pub fn t_range(&self) -> std::ops::Range<usize> {
        0..1
    }

    pub fn pg_range(&self) -> std::ops::Range<usize> {
        self.pg(0)..self.pg(0) + self.n_gen
    }

    pub fn qg_range(&self) -> std::ops::Range<usize> {
        self.qg(0)..self.qg(0) + self.n_gen
    }

    pub fn flow_range(&self) -> std::ops::Range<usize> {
        self.ps(0)..self.ps(0) + 4 * self.n_branch
    }

    pub fn s_range(&self) -> std::ops::Range<usize> {
        self.s(0)..self.s(0) + self.n_branch
    }

    pub fn c_range(&self) -> std::ops::Range<usize> {
        self.c(0)..self.c(0) + self.n_branch
    }

    pub fn w_range(&self) -> std::ops::Range<usize> {
        self.w(0)..self.w(0) + self.n_bus
    }
}

/// One linear form `k_wf*w_from + k_wt*w_to + k_c*c + k_s*s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFlowForm {
    pub w_from: f64,
    pub w_to: f64,
    pub c: f64,
    pub s: f64,
}

impl LinearFlowForm {
    pub fn eval(&self, w_from: f64, w_to: f64, c: f64, s: f64) -> f64 {
        self.w_from * w_from + self.w_to * w_to + self.c * c + self.s * s
    }
}

/// Coefficients expressing the four branch flows as linear forms in the
/// lifted variables (pi model with tap ratio, phase shift, line charging).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowCoeffs {
    pub p_send: LinearFlowForm,
    pub p_recv: LinearFlowForm,
    pub q_send: LinearFlowForm,
    pub q_recv: LinearFlowForm,
}

/// A cone slot: either a scaled primal variable or a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Slot {
    Var { index: usize, scale: f64 },
    Const(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConeKind {
    Jabr,
    SendFlow,
    RecvFlow,
    CostEpi,
}

/// One rotated cone block `2 * slot1 * slot2 >= ||vector||^2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConeBlock {
    pub kind: ConeKind,
    pub branch: Option<usize>,
    pub slot1: Slot,
    pub slot2: Slot,
    pub vector: Vec<Slot>,
}

/// One equality row: `sum entries + constant = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqRow {
    pub entries: Vec<(usize, f64)>,
    pub constant: f64,
}

/// The assembled primal relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalModel {
    pub layout: VarLayout,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eq_rows: Vec<EqRow>,
    pub cones: Vec<ConeBlock>,
    /// Objective vector: 1 at `t`, linear cost at each `P^g`, zero elsewhere.
    pub objective: Vec<f64>,
    /// Constant cost terms, added to reported objectives outside the model.
    pub c0_sum: f64,
}

/// Branch admittance entries of the two-port pi model, split into real and
/// imaginary parts: `(g_ff, b_ff, g_ft, b_ft, g_tf, b_tf, g_tt, b_tt)`.
fn admittance(branch: &Branch) -> (f64, f64, f64, f64, f64, f64, f64, f64) {
    let den = branch.r * branch.r + branch.x * branch.x;
    let gs = branch.r / den;
    let bs = -branch.x / den;
    let half_bc = 0.5 * branch.b_charge;
    let tap2 = branch.tap * branch.tap;
    let (sin_sh, cos_sh) = branch.shift.sin_cos();

    let g_ff = gs / tap2;
    let b_ff = (bs + half_bc) / tap2;
    // -y_s / conj(N) = -y_s e^{j shift} / tap, with N = tap * e^{j shift}
    let g_ft = -(gs * cos_sh - bs * sin_sh) / branch.tap;
    let b_ft = -(bs * cos_sh + gs * sin_sh) / branch.tap;
    // -y_s / N = -y_s e^{-j shift} / tap
    let g_tf = -(gs * cos_sh + bs * sin_sh) / branch.tap;
    let b_tf = -(bs * cos_sh - gs * sin_sh) / branch.tap;
    let g_tt = gs;
    let b_tt = bs + half_bc;
    (g_ff, b_ff, g_ft, b_ft, g_tf, b_tf, g_tt, b_tt)
}

/// Linear-form coefficients for the four branch flows.
///
/// For any voltage pair, evaluating the forms at `w_i = |V_i|^2`,
/// `w_j = |V_j|^2`, `c = v_i v_j cos(th_i - th_j)`,
/// `s = v_i v_j sin(th_i - th_j)` reproduces the complex two-port flows.
pub fn branch_coeffs(branch: &Branch) -> Result<FlowCoeffs, JabrError> {
    branch_coeffs_at(branch, usize::MAX)
}

fn branch_coeffs_at(branch: &Branch, index: usize) -> Result<FlowCoeffs, JabrError> {
    if branch.r == 0.0 && branch.x == 0.0 {
        return Err(JabrError::DegenerateImpedance { index });
    }
    let (g_ff, b_ff, g_ft, b_ft, g_tf, b_tf, g_tt, b_tt) = admittance(branch);
    Ok(FlowCoeffs {
        p_send: LinearFlowForm {
            w_from: g_ff,
            w_to: 0.0,
            c: g_ft,
            s: b_ft,
        },
        q_send: LinearFlowForm {
            w_from: -b_ff,
            w_to: 0.0,
            c: -b_ft,
            s: g_ft,
        },
        p_recv: LinearFlowForm {
            w_from: 0.0,
            w_to: g_tt,
            c: g_tf,
            s: -b_tf,
        },
        q_recv: LinearFlowForm {
            w_from: 0.0,
            w_to: -b_tt,
            c: -b_tf,
            s: -g_tf,
        },
    })
}

/// Box bounds for the primal vector.
///
/// `w` gets the squared voltage band, `c`/`s` the voltage-product bounds
/// (`c >= 0`, valid for angle differences within +-90 deg), the four flows
/// `+-rate_a`, generators their capability limits, and `t` the interval
/// `[0, tbar]` with `tbar` large enough to never bind at optimality.
pub fn default_bounds(network: &Network) -> Result<(Vec<f64>, Vec<f64>), JabrError> {
    let layout = VarLayout::new(network);
    let n = layout.dim();
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];

    let cost_max: f64 = network
        .generators
        .iter()
        .map(|g| g.c2 * g.pmax * g.pmax)
        .sum();
    let sq_sum: f64 = network
        .generators
        .iter()
        .map(|g| (g.c2 * g.pmax) * (g.c2 * g.pmax))
        .sum();
    let tbar = 10.0 * cost_max.max(sq_sum) + 1.0;
    lower[layout.t()] = 0.0;
    upper[layout.t()] = tbar;

    for (k, g) in network.generators.iter().enumerate() {
        lower[layout.pg(k)] = g.pmin;
        upper[layout.pg(k)] = g.pmax;
        lower[layout.qg(k)] = g.qmin;
        upper[layout.qg(k)] = g.qmax;
    }
    for (l, br) in network.branches.iter().enumerate() {
        for idx in [layout.ps(l), layout.pr(l), layout.qs(l), layout.qr(l)] {
            lower[idx] = -br.rate_a;
            upper[idx] = br.rate_a;
        }
        let from = network
            .bus_index(br.from)
            .ok_or(JabrError::UnresolvedBus { index: l, label: br.from })?;
        let to = network
            .bus_index(br.to)
            .ok_or(JabrError::UnresolvedBus { index: l, label: br.to })?;
        let vv = network.buses[from].vmax * network.buses[to].vmax;
        lower[layout.s(l)] = -vv;
        upper[layout.s(l)] = vv;
        lower[layout.c(l)] = 0.0;
        upper[layout.c(l)] = vv;
    }
    for (i, b) in network.buses.iter().enumerate() {
        lower[layout.w(i)] = b.vmin * b.vmin;
        upper[layout.w(i)] = b.vmax * b.vmax;
    }

    // widen degenerate intervals so every box is strict
    for i in 0..n {
        if upper[i] - lower[i] < MIN_BOX_WIDTH {
            let mid = 0.5 * (upper[i] + lower[i]);
            lower[i] = mid - 0.5 * MIN_BOX_WIDTH;
            upper[i] = mid + 0.5 * MIN_BOX_WIDTH;
        }
    }
    Ok((lower, upper))
}

/// Assemble the full primal relaxation from a validated network.
pub fn build_primal(network: &Network) -> Result<PrimalModel, JabrError> {
    if network.generators.is_empty() {
        return Err(JabrError::NoGenerator);
    }
    let layout = VarLayout::new(network);
    let n = layout.dim();
    let (lower, upper) = default_bounds(network)?;

    let gen_bus: Vec<usize> = network
        .generators
        .iter()
        .enumerate()
        .map(|(k, g)| {
            network
                .bus_index(g.bus)
                .ok_or(JabrError::UnresolvedGenBus { index: k, label: g.bus })
        })
        .collect::<Result<_, _>>()?;
    let branch_ends: Vec<(usize, usize)> = network
        .branches
        .iter()
        .enumerate()
        .map(|(l, br)| {
            let from = network
                .bus_index(br.from)
                .ok_or(JabrError::UnresolvedBus { index: l, label: br.from })?;
            let to = network
                .bus_index(br.to)
                .ok_or(JabrError::UnresolvedBus { index: l, label: br.to })?;
            Ok((from, to))
        })
        .collect::<Result<_, JabrError>>()?;

    // objective: 1 at t, linear cost coefficient at each P^g
    let mut objective = vec![0.0; n];
    objective[layout.t()] = 1.0;
    for (k, g) in network.generators.iter().enumerate() {
        objective[layout.pg(k)] = g.c1;
    }

    // equality rows: per bus P then Q balance, then per branch the four
    // flow-definition rows
    let mut eq_rows = Vec::with_capacity(2 * layout.n_bus + 4 * layout.n_branch);
    for (i, bus) in network.buses.iter().enumerate() {
        let mut p = EqRow {
            entries: Vec::new(),
            constant: -bus.pd,
        };
        let mut q = EqRow {
            entries: Vec::new(),
            constant: -bus.qd,
        };
        for (k, _) in network.generators.iter().enumerate() {
            if gen_bus[k] == i {
                p.entries.push((layout.pg(k), 1.0));
                q.entries.push((layout.qg(k), 1.0));
            }
        }
        if bus.gs != 0.0 {
            p.entries.push((layout.w(i), -bus.gs));
        }
        if bus.bs != 0.0 {
            q.entries.push((layout.w(i), bus.bs));
        }
        for (l, &(from, to)) in branch_ends.iter().enumerate() {
            if from == i {
                p.entries.push((layout.ps(l), -1.0));
                q.entries.push((layout.qs(l), -1.0));
            }
            if to == i {
                p.entries.push((layout.pr(l), -1.0));
                q.entries.push((layout.qr(l), -1.0));
            }
        }
        eq_rows.push(p);
        eq_rows.push(q);
    }
    for (l, br) in network.branches.iter().enumerate() {
        let coeffs = branch_coeffs_at(br, l)?;
        let (from, to) = branch_ends[l];
        let forms = [
            (layout.ps(l), coeffs.p_send),
            (layout.pr(l), coeffs.p_recv),
            (layout.qs(l), coeffs.q_send),
            (layout.qr(l), coeffs.q_recv),
        ];
        for (var, form) in forms {
            let mut row = EqRow {
                entries: vec![(var, 1.0)],
                constant: 0.0,
            };
            if form.w_from != 0.0 {
                row.entries.push((layout.w(from), -form.w_from));
            }
            if form.w_to != 0.0 {
                row.entries.push((layout.w(to), -form.w_to));
            }
            row.entries.push((layout.c(l), -form.c));
            row.entries.push((layout.s(l), -form.s));
            eq_rows.push(row);
        }
    }

    // cone blocks: per-branch Jabr, then per-branch send/recv flow, then the
    // single cost epigraph
    let mut cones = Vec::with_capacity(3 * layout.n_branch + 1);
    for (l, &(from, to)) in branch_ends.iter().enumerate() {
        cones.push(ConeBlock {
            kind: ConeKind::Jabr,
            branch: Some(l),
            slot1: Slot::Var {
                index: layout.w(from),
                scale: 0.5,
            },
            slot2: Slot::Var {
                index: layout.w(to),
                scale: 1.0,
            },
            vector: vec![
                Slot::Var {
                    index: layout.c(l),
                    scale: 1.0,
                },
                Slot::Var {
                    index: layout.s(l),
                    scale: 1.0,
                },
            ],
        });
    }
    for (l, br) in network.branches.iter().enumerate() {
        let limit_sq = br.rate_a * br.rate_a;
        cones.push(ConeBlock {
            kind: ConeKind::SendFlow,
            branch: Some(l),
            slot1: Slot::Const(0.5),
            slot2: Slot::Const(limit_sq),
            vector: vec![
                Slot::Var {
                    index: layout.ps(l),
                    scale: 1.0,
                },
                Slot::Var {
                    index: layout.qs(l),
                    scale: 1.0,
                },
            ],
        });
        cones.push(ConeBlock {
            kind: ConeKind::RecvFlow,
            branch: Some(l),
            slot1: Slot::Const(0.5),
            slot2: Slot::Const(limit_sq),
            vector: vec![
                Slot::Var {
                    index: layout.pr(l),
                    scale: 1.0,
                },
                Slot::Var {
                    index: layout.qr(l),
                    scale: 1.0,
                },
            ],
        });
    }
    let cost_vector: Vec<Slot> = network
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| g.c2 > 0.0)
        .map(|(k, g)| Slot::Var {
            index: layout.pg(k),
            scale: g.c2.sqrt(),
        })
        .collect();
    cones.push(ConeBlock {
        kind: ConeKind::CostEpi,
        branch: None,
        slot1: Slot::Const(0.5),
        slot2: Slot::Var {
            index: layout.t(),
            scale: 1.0,
        },
        vector: cost_vector,
    });

    Ok(PrimalModel {
        layout,
        lower,
        upper,
        eq_rows,
        cones,
        objective,
        c0_sum: network.c0_sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::{self, Network};
    use crate::testdata;

    fn two_bus() -> Network {
        netio::parse_matpower(testdata::TWO_BUS, "two_bus").unwrap()
    }

    fn case(name: &str) -> Network {
        netio::parse_matpower(&testdata::read_case(name), name).unwrap()
    }

    /// Complex-arithmetic oracle for the branch flows (two-port pi model).
    fn complex_flows(br: &Branch, vf: (f64, f64), vt: (f64, f64)) -> (f64, f64, f64, f64) {
        use num_complex_like::*;
        let ys = Cx::new(br.r, br.x).inv();
        let ysh = Cx::new(0.0, 0.5 * br.b_charge);
        let n = Cx::from_polar(br.tap, br.shift);
        let yff = ys.add(ysh).div_re(br.tap * br.tap);
        let yft = ys.neg().div(n.conj());
        let ytf = ys.neg().div(n);
        let ytt = ys.add(ysh);
        let vf = Cx::from_polar(vf.0, vf.1);
        let vt = Cx::from_polar(vt.0, vt.1);
        let sf = vf.mul(yff.mul(vf).add(yft.mul(vt)).conj());
        let st = vt.mul(ytf.mul(vf).add(ytt.mul(vt)).conj());
        (sf.re, sf.im, st.re, st.im)
    }

    /// Tiny complex helper so the oracle stays independent of the
    /// implementation path (which never forms complex numbers).
    mod num_complex_like {
        #[derive(Clone, Copy)]
        pub struct Cx {
            pub re: f64,
            pub im: f64,
        }
        impl Cx {
            pub fn new(re: f64, im: f64) -> Self {
                Cx { re, im }
            }
            pub fn from_polar(r: f64, th: f64) -> Self {
                Cx::new(r * th.cos(), r * th.sin())
            }
            pub fn inv(self) -> Self {
                let d = self.re * self.re + self.im * self.im;
                Cx::new(self.re / d, -self.im / d)
            }
            pub fn conj(self) -> Self {
                Cx::new(self.re, -self.im)
            }
            pub fn neg(self) -> Self {
                Cx::new(-self.re, -self.im)
            }
            pub fn add(self, o: Self) -> Self {
                Cx::new(self.re + o.re, self.im + o.im)
            }
            pub fn mul(self, o: Self) -> Self {
                Cx::new(
                    self.re * o.re - self.im * o.im,
                    self.re * o.im + self.im * o.re,
                )
            }
            pub fn div(self, o: Self) -> Self {
                self.mul(o.inv())
            }
            pub fn div_re(self, d: f64) -> Self {
                Cx::new(self.re / d, self.im / d)
            }
        }
    }

    fn check_branch_against_oracle(br: &Branch, pairs: &[((f64, f64), (f64, f64))], tol: f64) {
        let fc = branch_coeffs(br).unwrap();
        for &(vf, vt) in pairs {
            let (pf, qf, pt, qt) = complex_flows(br, vf, vt);
            let wf = vf.0 * vf.0;
            let wt = vt.0 * vt.0;
            let c = vf.0 * vt.0 * (vf.1 - vt.1).cos();
            let s = vf.0 * vt.0 * (vf.1 - vt.1).sin();
            assert!((fc.p_send.eval(wf, wt, c, s) - pf).abs() < tol, "p_send");
            assert!((fc.q_send.eval(wf, wt, c, s) - qf).abs() < tol, "q_send");
            assert!((fc.p_recv.eval(wf, wt, c, s) - pt).abs() < tol, "p_recv");
            assert!((fc.q_recv.eval(wf, wt, c, s) - qt).abs() < tol, "q_recv");
        }
    }

    #[test]
    fn degenerate_impedance_rejected() {
        let br = Branch {
            from: 1,
            to: 2,
            r: 0.0,
            x: 0.0,
            b_charge: 0.0,
            tap: 1.0,
            shift: 0.0,
            rate_a: 1.0,
            limit_substituted: false,
        };
        assert!(matches!(
            branch_coeffs(&br),
            Err(JabrError::DegenerateImpedance { .. })
        ));
    }

    #[test]
    fn lossless_line_matches_complex_oracle() {
        let br = Branch {
            from: 1,
            to: 2,
            r: 0.0,
            x: 1.0,
            b_charge: 0.0,
            tap: 1.0,
            shift: 0.0,
            rate_a: 1.0,
            limit_substituted: false,
        };
        check_branch_against_oracle(&br, &[((1.0, 0.0), (1.0, -0.1))], 1e-12);
    }

    #[test]
    fn transformer_branch_matches_complex_oracle() {
        use rand::{Rng, SeedableRng};
        let br = Branch {
            from: 1,
            to: 2,
            r: 0.01,
            x: 0.08,
            b_charge: 0.12,
            tap: 1.05,
            shift: 0.02,
            rate_a: 1.0,
            limit_substituted: false,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pairs: Vec<_> = (0..100)
            .map(|_| {
                (
                    (rng.gen_range(0.9..1.1), rng.gen_range(-0.5..0.5)),
                    (rng.gen_range(0.9..1.1), rng.gen_range(-0.5..0.5)),
                )
            })
            .collect();
        check_branch_against_oracle(&br, &pairs, 1e-12);
    }

    #[test]
    fn pattern_reduces_to_simple_line() {
        // tap=1, shift=0, no charging: p_send coefficients are
        // (g, 0, -g, -b) with y = g + jb the series admittance
        let br = Branch {
            from: 1,
            to: 2,
            r: 0.1,
            x: 0.5,
            b_charge: 0.0,
            tap: 1.0,
            shift: 0.0,
            rate_a: 1.0,
            limit_substituted: false,
        };
        let fc = branch_coeffs(&br).unwrap();
        let den = br.r * br.r + br.x * br.x;
        let g = br.r / den;
        let b = -br.x / den;
        assert!((fc.p_send.w_from - g).abs() < 1e-15);
        assert!((fc.p_send.c + g).abs() < 1e-15);
        assert!((fc.p_send.s + b).abs() < 1e-15);
        assert_eq!(fc.p_send.w_to, 0.0);
        assert!((fc.p_recv.w_to - g).abs() < 1e-15);
    }

    #[test]
    fn counts_two_bus() {
        let model = build_primal(&two_bus()).unwrap();
        assert_eq!(model.cones.len(), 4); // 3*1 + 1
        assert_eq!(model.eq_rows.len(), 8); // 2*2 + 4*1
        assert_eq!(model.layout.dim(), 1 + 2 + 6 + 2);
    }

    #[test]
    fn counts_case3() {
        let model = build_primal(&case("pglib_opf_case3_lmbd.m")).unwrap();
        assert_eq!(model.cones.len(), 10); // 3*3 + 1
        assert_eq!(model.eq_rows.len(), 18); // 2*3 + 4*3
    }

    #[test]
    fn counts_case14() {
        let model = build_primal(&case("pglib_opf_case14_ieee.m")).unwrap();
        assert_eq!(model.layout.n_branch, 20);
        assert_eq!(model.layout.n_bus, 14);
        assert_eq!(model.cones.len(), 61); // 3*20 + 1
        assert_eq!(model.eq_rows.len(), 108); // 2*14 + 4*20
    }

    #[test]
    fn bound_examples() {
        let net = two_bus();
        let (lo, hi) = default_bounds(&net).unwrap();
        let layout = VarLayout::new(&net);
        // vmin 0.9, vmax 1.1 -> w in [0.81, 1.21]
        assert!((lo[layout.w(0)] - 0.81).abs() < 1e-15);
        assert!((hi[layout.w(0)] - 1.21).abs() < 1e-15);
        // rate 1.2 p.u. -> flow bounds +-1.2
        assert!((hi[layout.ps(0)] - 1.2).abs() < 1e-15);
        assert!((lo[layout.ps(0)] + 1.2).abs() < 1e-15);
    }

    #[test]
    fn tbar_formula() {
        // one generator, c2 = 1 (p.u.), pmax = 2: tbar = 10*max(4,4)+1 = 41
        let mut net = two_bus();
        net.generators[0].c2 = 1.0;
        net.generators[0].pmax = 2.0;
        let (lo, hi) = default_bounds(&net).unwrap();
        assert_eq!(lo[0], 0.0);
        assert!((hi[0] - 41.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_generator_box_widened() {
        // case14 has synchronous condensers with pmin = pmax = 0
        let net = case("pglib_opf_case14_ieee.m");
        let (lo, hi) = default_bounds(&net).unwrap();
        for i in 0..lo.len() {
            assert!(
                hi[i] - lo[i] >= MIN_BOX_WIDTH * (1.0 - 1e-12),
                "box {i} not strict: [{}, {}]",
                lo[i],
                hi[i]
            );
        }
    }

    #[test]
    fn objective_vector_shape() {
        let net = case("pglib_opf_case3_lmbd.m");
        let model = build_primal(&net).unwrap();
        assert_eq!(model.objective[0], 1.0);
        assert_eq!(model.objective[model.layout.pg(0)], 500.0); // 5 $/MWh * 100
        assert_eq!(model.objective[model.layout.pg(2)], 0.0);
        let nonzero = model.objective.iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzero, 3); // t plus two generators with c1 > 0
    }

    #[test]
    fn cost_cone_skips_zero_c2() {
        let net = case("pglib_opf_case14_ieee.m"); // all costs linear
        let model = build_primal(&net).unwrap();
        let cost = model.cones.last().unwrap();
        assert_eq!(cost.kind, ConeKind::CostEpi);
        assert!(cost.vector.is_empty());
        let net3 = case("pglib_opf_case3_lmbd.m"); // two quadratic generators
        let model3 = build_primal(&net3).unwrap();
        assert_eq!(model3.cones.last().unwrap().vector.len(), 2);
    }

    /// Feasibility transfer: any in-bounds voltage assignment induces a
    /// lifted point that satisfies every Jabr cone with equality.
    #[test]
    fn feasibility_transfer_equality() {
        use rand::{Rng, SeedableRng};
        let net = case("pglib_opf_case3_lmbd.m");
        let model = build_primal(&net).unwrap();
        let layout = model.layout;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let volt: Vec<(f64, f64)> = net
                .buses
                .iter()
                .map(|b| (rng.gen_range(b.vmin..b.vmax), rng.gen_range(-0.4..0.4)))
                .collect();
            for cone in &model.cones {
                if cone.kind != ConeKind::Jabr {
                    continue;
                }
                let l = cone.branch.unwrap();
                let br = &net.branches[l];
                let fi = net.bus_index(br.from).unwrap();
                let ti = net.bus_index(br.to).unwrap();
                let (vf, vt) = (volt[fi], volt[ti]);
                let mut x = vec![0.0; layout.dim()];
                x[layout.w(fi)] = vf.0 * vf.0;
                x[layout.w(ti)] = vt.0 * vt.0;
                x[layout.c(l)] = vf.0 * vt.0 * (vf.1 - vt.1).cos();
                x[layout.s(l)] = vf.0 * vt.0 * (vf.1 - vt.1).sin();
                let slot = |s: &Slot| match *s {
                    Slot::Var { index, scale } => scale * x[index],
                    Slot::Const(v) => v,
                };
                let a1 = slot(&cone.slot1);
                let a2 = slot(&cone.slot2);
                let vv: f64 = cone.vector.iter().map(|sl| slot(sl).powi(2)).sum();
                assert!((2.0 * a1 * a2 - vv).abs() < 1e-10);
            }
        }
    }
}
