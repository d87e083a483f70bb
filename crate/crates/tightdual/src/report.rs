//! Machine-readable run records and the batch benchmark harness.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::canon::{canonicalize, CanonicalProblem};
use crate::certify::{certify, CertifyError};
use crate::fosolve::{solve_atd, SolveConfig, SolveError, Termination};
use crate::jabr::{build_primal, JabrError};
use crate::netio::{parse_matpower, NetError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {source}")]
    Parse { path: PathBuf, source: NetError },
    #[error("model error: {0}")]
    Model(#[from] JabrError),
    #[error("canonicalization error: {0}")]
    Canon(#[from] crate::canon::CanonError),
    #[error("solver error: {0}")]
    Solve(#[from] SolveError),
    #[error("certification error: {0}")]
    Certify(#[from] CertifyError),
    #[error("no case files found in {0}")]
    EmptyDirectory(PathBuf),
}

/// Echo of the configuration a record was produced with.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub eps: f64,
    pub delta: f64,
    pub max_iter: usize,
    pub stage_iters: usize,
    pub step_decay: f64,
    pub tol_rel: f64,
    pub patience: usize,
    pub seed: u64,
}

/// One pipeline run over one case, serialized with a fixed key set.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub case: String,
    /// Formulation tag: "atd" (the solver pipeline); the conic and t-tight
    /// evaluators are library-level and produce no records.
    pub formulation: String,
    pub config: ConfigEcho,
    /// Best dual objective, constants included ($/h).
    pub objective: f64,
    /// Certified lower bound, constants included ($/h).
    pub f_clb: f64,
    pub reference: Option<f64>,
    /// 100 * (objective - reference) / reference.
    pub gap_percent: Option<f64>,
    pub iterations: usize,
    pub wall_time_s: f64,
    pub projection_time_s: f64,
    pub termination: Termination,
}

/// Reference objectives from a mature conic solver, for out-of-the-box gap
/// reporting on the bundled benchmark cases. Users may override per run.
pub fn builtin_reference(case_name: &str) -> Option<f64> {
    let stem = case_name.trim_end_matches(".m");
    match stem {
        "pglib_opf_case3_lmbd" => Some(5736.17),
        "pglib_opf_case14_ieee" => Some(2175.70),
        "pglib_opf_case57_ieee" => Some(37529.70),
        "pglib_opf_case118_ieee" => Some(96335.84),
        "pglib_opf_case300_ieee" => Some(549244.23),
        "pglib_opf_case500_goc" => Some(453838.14),
        "pglib_opf_case1354_pegase" => Some(1239116.39),
        _ => None,
    }
}

/// Parse and canonicalize a case file.
pub fn load_problem(path: &Path) -> Result<CanonicalProblem, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let network = parse_matpower(&text, &name).map_err(|source| RunError::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    let primal = build_primal(&network)?;
    Ok(canonicalize(&primal)?)
}

/// Full pipeline on one case: parse, build, canonicalize, solve, project,
/// certify.
pub fn run_case(
    path: &Path,
    config: &SolveConfig,
    delta: f64,
    reference: Option<f64>,
) -> Result<RunRecord, RunError> {
    let case = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let problem = load_problem(path)?;
    let reference = reference.or_else(|| builtin_reference(&case));

    let solve_start = Instant::now();
    let report = solve_atd(&problem, config)?;
    let wall_time_s = solve_start.elapsed().as_secs_f64();

    let proj_start = Instant::now();
    let bound = certify(&problem, &report.best_point, delta, reference)?;
    let projection_time_s = proj_start.elapsed().as_secs_f64();

    let objective = report.best_objective + problem.c0_sum;
    let gap_percent = reference.map(|r| 100.0 * (objective - r) / r);
    log::info!(
        "{case}: objective {objective:.4}, f_clb {:.4}, {} iterations, {:.2}s",
        bound.f_clb,
        report.iterations,
        wall_time_s
    );
    Ok(RunRecord {
        case,
        formulation: "atd".into(),
        config: ConfigEcho {
            eps: config.eps,
            delta,
            max_iter: config.max_iter,
            stage_iters: config.stage_iters,
            step_decay: config.step_decay,
            tol_rel: config.tol_rel,
            patience: config.patience,
            seed: config.seed,
        },
        objective,
        f_clb: bound.f_clb,
        reference,
        gap_percent,
        iterations: report.iterations,
        wall_time_s,
        projection_time_s,
        termination: report.termination,
    })
}

/// Outcome of one case inside a benchmark run.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum BenchOutcome {
    Record(RunRecord),
    Failure { case: String, error: String },
}

#[derive(Debug, Serialize)]
pub struct BenchSummary {
    pub cases: usize,
    pub certified: usize,
    pub failures: usize,
    pub mean_gap_percent: Option<f64>,
    pub mean_projection_time_s: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub records: Vec<BenchOutcome>,
    pub summary: BenchSummary,
}

/// Run every `.m` case in a directory through the pipeline, in a worker
/// pool; failures are recorded and the run continues.
pub fn run_bench(
    dir: &Path,
    config: &SolveConfig,
    delta: f64,
    references: &(dyn Fn(&str) -> Option<f64> + Sync),
) -> Result<BenchReport, RunError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|source| RunError::Read {
            path: dir.to_path_buf(),
            source,
        })?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().map(|x| x == "m").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(RunError::EmptyDirectory(dir.to_path_buf()));
    }

    use rayon::prelude::*;
    let records: Vec<BenchOutcome> = paths
        .par_iter()
        .map(|path| {
            let case = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            match run_case(path, config, delta, references(&case)) {
                Ok(record) => BenchOutcome::Record(record),
                Err(e) => BenchOutcome::Failure {
                    case,
                    error: e.to_string(),
                },
            }
        })
        .collect();

    let mut gaps = Vec::new();
    let mut proj = Vec::new();
    let mut certified = 0;
    for outcome in &records {
        if let BenchOutcome::Record(r) = outcome {
            certified += 1;
            proj.push(r.projection_time_s);
            if let Some(g) = r.gap_percent {
                gaps.push(g);
            }
        }
    }
    let mean = |v: &[f64]| {
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    let summary = BenchSummary {
        cases: records.len(),
        certified,
        failures: records.len() - certified,
        mean_gap_percent: mean(&gaps),
        mean_projection_time_s: mean(&proj),
    };
    Ok(BenchReport { records, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata;

    fn quick_config() -> SolveConfig {
        SolveConfig {
            max_iter: 2000,
            stage_iters: 250,
            ..SolveConfig::default()
        }
    }

    #[test]
    fn record_key_set_is_stable() {
        let path = testdata::cases_dir().join("two_bus.m");
        let record = run_case(&path, &quick_config(), 1e-8, Some(1000.0)).unwrap();
        let value = serde_json::to_value(&record).unwrap();
        let keys: std::collections::BTreeSet<&str> = value
            .as_object()
            .unwrap()
            .keys()
            .map(|k| k.as_str())
            .collect();
        let expect: std::collections::BTreeSet<&str> = [
            "case",
            "formulation",
            "config",
            "objective",
            "f_clb",
            "reference",
            "gap_percent",
            "iterations",
            "wall_time_s",
            "projection_time_s",
            "termination",
        ]
        .into_iter()
        .collect();
        assert_eq!(keys, expect);
        let config_keys: std::collections::BTreeSet<&str> = value["config"]
            .as_object()
            .unwrap()
            .keys()
            .map(|k| k.as_str())
            .collect();
        let expect_config: std::collections::BTreeSet<&str> = [
            "eps",
            "delta",
            "max_iter",
            "stage_iters",
            "step_decay",
            "tol_rel",
            "patience",
            "seed",
        ]
        .into_iter()
        .collect();
        assert_eq!(config_keys, expect_config);
    }

    #[test]
    fn gap_formula() {
        let path = testdata::cases_dir().join("two_bus.m");
        let record = run_case(&path, &quick_config(), 1e-8, Some(1000.0)).unwrap();
        let expect = 100.0 * (record.objective - 1000.0) / 1000.0;
        assert!((record.gap_percent.unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn builtin_references_cover_bundled_cases() {
        assert_eq!(builtin_reference("pglib_opf_case3_lmbd"), Some(5736.17));
        assert_eq!(builtin_reference("pglib_opf_case3_lmbd.m"), Some(5736.17));
        assert_eq!(builtin_reference("unknown_case"), None);
    }

    #[test]
    fn missing_file_is_read_error() {
        let err = run_case(
            Path::new("/nonexistent/case.m"),
            &quick_config(),
            1e-8,
            None,
        )
        .unwrap_err();
        assert!(matches!(err, RunError::Read { .. }));
    }
}
