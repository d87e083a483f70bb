//! Certified dual lower bounds for the Jabr RSOC relaxation of AC optimal
//! power flow.
//!
//! The pipeline reads a MATPOWER case, lifts it into a rotated-second-order-
//! cone relaxation, flattens the relaxation into canonical blocks, maximizes
//! the reduced tight-dual objective with a projected first-order method, and
//! post-processes the result into a lower bound on generation cost that is
//! valid regardless of the stabilization parameter used during the solve.
//!
//! ```no_run
//! use tightdual::{canon, certify, fosolve, jabr, netio};
//!
//! let text = std::fs::read_to_string("case.m").unwrap();
//! let network = netio::parse_matpower(&text, "case").unwrap();
//! let primal = jabr::build_primal(&network).unwrap();
//! let problem = canon::canonicalize(&primal).unwrap();
//! let report = fosolve::solve_atd(&problem, &fosolve::SolveConfig::default()).unwrap();
//! let (projected, _) = certify::face_project(&problem, &report.best_point, 1e-8);
//! let bound = certify::certified_lower_bound(&problem, &projected, None).unwrap();
//! println!("certified lower bound: {}", bound.f_clb);
//! ```

pub mod canon;
pub mod certify;
pub mod dual;
pub mod fosolve;
pub mod jabr;
pub mod netio;
pub mod report;
pub mod sparse;
pub mod testdata;

pub use canon::{canonicalize, CanonicalProblem};
pub use certify::{certified_lower_bound, eps_sweep, face_project, CertifiedBound};
pub use dual::{acd_eval, cone_slacks, dualnorm_objective, recover_mu, replace, ttd_eval, DualPoint};
pub use fosolve::{export_nlp, solve_atd, solve_atd_from, warm_start, NlpSpec, SolveConfig, SolveReport};
pub use jabr::{branch_coeffs, build_primal, default_bounds, PrimalModel};
pub use netio::{parse_matpower, validate, Network};
