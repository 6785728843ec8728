//! Batch front door: subcommands, exit codes and file outputs.
//!
//! Exit-code vocabulary (stable for scripting):
//!
//! | code | meaning                                   |
//! |------|-------------------------------------------|
//! | 0    | success, all verification gates passed    |
//! | 1    | verification failed or i/o error          |
//! | 2    | frequency resonance                       |
//! | 3    | divergence / iteration cap without success|
//! | 4    | precondition failure                      |
//! | 5    | certificate not satisfied                 |
//! | 64   | usage or configuration error              |

use std::path::{Path, PathBuf};

use crate::cohomology::small_divisor_spectrum;
use crate::config::{
    embedding_to_csv, spectrum_to_csv, to_json_17, ConjugacyRecord, GroupElementRecord,
    ProblemConfig, RunReport,
};
use crate::scheme::{abstract_fp_simulate, convergence_certificate, kam_run, RunOutcome};
use crate::verify::{flow_check, invariance_residual, torus_embedding, FlowCheckParams};
use crate::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_RESONANCE: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;
pub const EXIT_CERTIFICATE: i32 = 5;
pub const EXIT_USAGE: i32 = 64;

/// Output file paths for a run.
#[derive(Clone, Debug)]
pub struct OutPaths {
    pub report: PathBuf,
    pub gamma: PathBuf,
    pub torus: PathBuf,
}

impl Default for OutPaths {
    fn default() -> Self {
        OutPaths {
            report: PathBuf::from("report.json"),
            gamma: PathBuf::from("gamma.json"),
            torus: PathBuf::from("torus.csv"),
        }
    }
}

fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Resonance { .. } => EXIT_RESONANCE,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::CertificateDomain { .. } => EXIT_CERTIFICATE,
        Error::Config(_)
        | Error::Json(_)
        | Error::UnsupportedDimension(_)
        | Error::DimensionMismatch(..)
        | Error::InvalidStrip { .. }
        | Error::IndexOutOfBounds { .. }
        | Error::NonFiniteCoefficient(_) => EXIT_USAGE,
        Error::Io(_) => EXIT_FAILURE,
        _ => EXIT_PRECONDITION,
    }
}

fn fail(err: &Error) -> i32 {
    eprintln!("error: {err}");
    exit_code_for(err)
}

/// `check-alpha`: scan the Diophantine margin and print the small-divisor
/// spectrum as CSV. Exit 0 iff the margin is positive at the configured kmax.
pub fn cmd_check_alpha(config_path: &Path) -> i32 {
    let config = match ProblemConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let kmax = config.truncation.kmax;
    let tau = config.tau.unwrap_or(config.n as f64);
    let scan = match crate::cohomology::check_diophantine(&config.alpha, tau, kmax) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    eprintln!(
        "min margin {:.6e} at k = {:?}; admissible gamma {:.6e} (kmax {kmax}, tau {tau})",
        scan.min_margin, scan.argmin_k, scan.admissible_gamma
    );
    if scan.min_margin <= 0.0 {
        eprintln!("error: exact resonance at k = {:?}", scan.argmin_k);
        return EXIT_RESONANCE;
    }
    let freq = match crate::cohomology::Frequency::checked(
        &config.alpha,
        tau,
        kmax,
        config.divisor_floor,
    ) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    let lines = small_divisor_spectrum(&freq, kmax);
    print!("{}", spectrum_to_csv(&lines, config.n));
    EXIT_OK
}

/// `run`: execute the Newton iteration, verify the torus dynamically, and
/// write the report JSON, the conjugacy serialization and the torus CSV.
pub fn cmd_run(config_path: &Path, out: &OutPaths, seed_override: Option<u64>) -> i32 {
    let mut config = match ProblemConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    let problem = match config.build() {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };

    let run = match kam_run(
        &problem.h,
        &problem.k0,
        &problem.schedule,
        &problem.disc,
        problem.gamma2,
        problem.tau2,
    ) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let mut report = RunReport::from_iteration(&problem.config, &run.report);

    // Certificate (warn-only on the run itself).
    match config.certificate_constants() {
        Ok(Some(consts)) => {
            let s0 = problem.schedule.s + problem.schedule.sigma;
            let y = problem
                .h
                .sub(&problem.k0.assemble(problem.disc.kmax(), problem.disc.mmax()).unwrap())
                .map(|d| d.majorant_norm(s0))
                .unwrap_or(f64::NAN);
            let cert = convergence_certificate(&consts, problem.schedule.sigma, y, config.scheme.max_iters);
            if !cert.ok {
                report.warnings.push(format!(
                    "certificate not satisfied: {}",
                    cert.reason.clone().unwrap_or_default()
                ));
            }
            report.certificate = Some(cert);
        }
        Ok(None) => {}
        Err(e) => return fail(&e),
    }

    let mut code = match report.outcome {
        RunOutcome::Converged => EXIT_OK,
        RunOutcome::Failed => EXIT_PRECONDITION,
        RunOutcome::Diverged | RunOutcome::MaxIters => EXIT_DIVERGENCE,
    };

    // Verification runs only on a converged conjugacy.
    if report.outcome == RunOutcome::Converged {
        let emb = match torus_embedding(&run.gamma, config.verify.grid_n) {
            Ok(e) => e,
            Err(e) => return fail(&e),
        };
        match invariance_residual(&problem.h, &emb, &problem.freq.alpha) {
            Ok(r) => report.invariance_residual = Some(r),
            Err(e) => return fail(&e),
        }
        let params = FlowCheckParams {
            t_final: config.verify.t,
            dt: config.verify.dt,
            n_points: 20,
            seed: config.seed,
            escape_radius: problem.schedule.s,
            initial_r_offset: 0.0,
        };
        match flow_check(&problem.h, &emb, &problem.freq.alpha, &params) {
            Ok(f) => report.flow_check = Some(f),
            Err(e) => {
                report.warnings.push(format!("flow check failed: {e}"));
                code = EXIT_FAILURE;
            }
        }
        if let Err(e) = std::fs::write(&out.torus, embedding_to_csv(&emb)) {
            return fail(&Error::Io(e));
        }

        // Verification gates.
        let tol = &config.verify;
        let conj_gate = 10.0 * problem.schedule.defect_tol;
        if report.conjugacy_residual.unwrap_or(f64::INFINITY) > conj_gate {
            report
                .warnings
                .push(format!("conjugacy residual above {conj_gate:.3e}"));
            code = EXIT_FAILURE.max(code);
        }
        if let Some(f) = &report.flow_check {
            if f.max_torus_distance > tol.distance_tol
                || f.rotation_error > tol.rotation_tol
                || f.energy_drift > tol.energy_tol
            {
                report.warnings.push(format!(
                    "flow check outside tolerances: distance {:.3e} (tol {:.3e}), rotation {:.3e} (tol {:.3e}), drift {:.3e} (tol {:.3e})",
                    f.max_torus_distance, tol.distance_tol, f.rotation_error, tol.rotation_tol, f.energy_drift, tol.energy_tol
                ));
                code = EXIT_FAILURE.max(code);
            }
        }

        let conjugacy = ConjugacyRecord {
            gamma: GroupElementRecord::from_element(&run.gamma),
            g: run.g_inverse.as_ref().map(GroupElementRecord::from_element),
        };
        match to_json_17(&conjugacy) {
            Ok(json) => {
                if let Err(e) = std::fs::write(&out.gamma, json) {
                    return fail(&Error::Io(e));
                }
            }
            Err(e) => return fail(&e),
        }
    }

    match to_json_17(&report) {
        Ok(json) => {
            if let Err(e) = std::fs::write(&out.report, json) {
                return fail(&Error::Io(e));
            }
        }
        Err(e) => return fail(&e),
    }
    if let Some(msg) = &report.failure {
        eprintln!("run did not converge: {msg}");
    }
    code
}

/// `certificate`: evaluate the fixed-point certificate for the configured
/// constants against the configured perturbation. Exit 0 iff satisfied.
pub fn cmd_certificate(config_path: &Path) -> i32 {
    let config = match ProblemConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let consts = match config.certificate_constants() {
        Ok(Some(c)) => c,
        Ok(None) => {
            eprintln!("error: config has no certificate section");
            return EXIT_USAGE;
        }
        Err(e) => return fail(&e),
    };
    let problem = match config.build() {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let s0 = problem.schedule.s + problem.schedule.sigma;
    let k0_series = match problem
        .k0
        .assemble(problem.disc.kmax(), problem.disc.mmax())
    {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let y = match problem.h.sub(&k0_series) {
        Ok(d) => d.majorant_norm(s0),
        Err(e) => return fail(&e),
    };
    let cert = convergence_certificate(&consts, problem.schedule.sigma, y, config.scheme.max_iters);
    #[derive(serde::Serialize)]
    struct CertOut {
        y_norm: f64,
        sigma: f64,
        certificate: crate::scheme::Certificate,
        simulate: Option<Vec<(f64, f64)>>,
    }
    let simulate = if cert.ok {
        abstract_fp_simulate(&consts, problem.schedule.sigma, y, config.scheme.max_iters).ok()
    } else {
        None
    };
    let out = CertOut {
        y_norm: y,
        sigma: problem.schedule.sigma,
        certificate: cert.clone(),
        simulate,
    };
    match to_json_17(&out) {
        Ok(json) => print!("{json}"),
        Err(e) => return fail(&e),
    }
    if cert.ok {
        EXIT_OK
    } else {
        eprintln!(
            "certificate not satisfied: {}",
            cert.reason.unwrap_or_default()
        );
        EXIT_CERTIFICATE
    }
}

/// `verify`: re-verify a serialized conjugacy against the configured
/// Hamiltonian without re-running the iteration. Writes the embedding CSV
/// alongside the summary JSON.
pub fn cmd_verify(
    config_path: &Path,
    gamma_path: &Path,
    out_report: Option<&Path>,
    out_torus: Option<&Path>,
) -> i32 {
    let config = match ProblemConfig::load(config_path) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    let problem = match config.build() {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    let text = match std::fs::read_to_string(gamma_path) {
        Ok(t) => t,
        Err(e) => return fail(&Error::Io(e)),
    };
    let record: ConjugacyRecord = match serde_json::from_str(&text) {
        Ok(r) => r,
        Err(e) => return fail(&Error::Json(e)),
    };
    let gamma = match record.gamma.to_element() {
        Ok(g) => g,
        Err(e) => return fail(&e),
    };
    let emb = match torus_embedding(&gamma, config.verify.grid_n) {
        Ok(e) => e,
        Err(e) => return fail(&e),
    };
    if let Some(path) = out_torus {
        if let Err(e) = std::fs::write(path, embedding_to_csv(&emb)) {
            return fail(&Error::Io(e));
        }
    }
    let inv = match invariance_residual(&problem.h, &emb, &problem.freq.alpha) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let params = FlowCheckParams {
        t_final: config.verify.t,
        dt: config.verify.dt,
        n_points: 20,
        seed: config.seed,
        escape_radius: problem.schedule.s,
        initial_r_offset: 0.0,
    };
    let flow = match flow_check(&problem.h, &emb, &problem.freq.alpha, &params) {
        Ok(f) => f,
        Err(e) => return fail(&e),
    };
    #[derive(serde::Serialize)]
    struct VerifyOut {
        invariance_residual: f64,
        flow_check: crate::verify::FlowCheckResult,
    }
    let out = VerifyOut {
        invariance_residual: inv,
        flow_check: flow,
    };
    let json = match to_json_17(&out) {
        Ok(j) => j,
        Err(e) => return fail(&e),
    };
    if let Some(path) = out_report {
        if let Err(e) = std::fs::write(path, &json) {
            return fail(&Error::Io(e));
        }
    }
    print!("{json}");
    let tol = &config.verify;
    if flow.max_torus_distance <= tol.distance_tol
        && flow.rotation_error <= tol.rotation_tol
        && flow.energy_drift <= tol.energy_tol
    {
        EXIT_OK
    } else {
        eprintln!("verification outside tolerances");
        EXIT_FAILURE
    }
}

const USAGE: &str = "usage: kam <check-alpha|run|certificate|verify> --config PATH \
[--out PATH] [--gamma PATH] [--torus PATH] [--seed INT]
Environment: KAM_THREADS caps internal parallelism.";

/// Parse arguments and dispatch. Returns the process exit code.
pub fn dispatch(args: &[String]) -> i32 {
    let Some(sub) = args.first() else {
        eprintln!("{USAGE}");
        return EXIT_USAGE;
    };
    let mut config: Option<PathBuf> = None;
    let mut out = OutPaths::default();
    let mut seed: Option<u64> = None;
    let mut gamma_in: Option<PathBuf> = None;
    let mut i = 1;
    while i < args.len() {
        let flag = &args[i];
        let value = match args.get(i + 1) {
            Some(v) => v,
            None => {
                eprintln!("missing value for {flag}\n{USAGE}");
                return EXIT_USAGE;
            }
        };
        match flag.as_str() {
            "--config" => config = Some(PathBuf::from(value)),
            "--out" => out.report = PathBuf::from(value),
            "--gamma" => {
                out.gamma = PathBuf::from(value);
                gamma_in = Some(PathBuf::from(value));
            }
            "--torus" => out.torus = PathBuf::from(value),
            "--seed" => match value.parse() {
                Ok(v) => seed = Some(v),
                Err(_) => {
                    eprintln!("--seed expects an integer\n{USAGE}");
                    return EXIT_USAGE;
                }
            },
            other => {
                eprintln!("unknown flag {other}\n{USAGE}");
                return EXIT_USAGE;
            }
        }
        i += 2;
    }
    let Some(config) = config else {
        eprintln!("--config is required\n{USAGE}");
        return EXIT_USAGE;
    };
    match sub.as_str() {
        "check-alpha" => cmd_check_alpha(&config),
        "run" => cmd_run(&config, &out, seed),
        "certificate" => cmd_certificate(&config),
        "verify" => {
            let Some(gamma) = gamma_in else {
                eprintln!("verify needs --gamma PATH\n{USAGE}");
                return EXIT_USAGE;
            };
            cmd_verify(&config, &gamma, Some(&out.report), Some(&out.torus))
        }
        other => {
            eprintln!("unknown subcommand {other}\n{USAGE}");
            EXIT_USAGE
        }
    }
}
