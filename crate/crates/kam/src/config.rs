//! Problem configuration, series literals and machine-readable outputs.
//!
//! A run is described by one JSON document (diffable, self-contained); every
//! report echoes the effective configuration so a report suffices to
//! reproduce its run. Floating-point values in reports are serialized with 17
//! significant digits so identical runs produce byte-identical files.

use serde::{Deserialize, Serialize};

use crate::cohomology::Frequency;
use crate::grid::Discretization;
use crate::group::GroupElement;
use crate::normalform::KolmogorovForm;
use crate::scheme::{Certificate, CertificateConstants, IterationReport, RunOutcome, ScheduleParams, StepRecord};
use crate::series::FourierTaylorSeries;
use crate::verify::FlowCheckResult;
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// series literals
// ---------------------------------------------------------------------------

/// One coefficient record. Only one of each ±k pair need be given; reality
/// completes the mirror with the conjugate.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SeriesLiteral {
    pub k: Vec<i64>,
    pub m: Vec<u32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Build a series from literals, completing missing mirrors before the
/// constructor's symmetrization (so a lone record keeps its full weight).
pub fn series_from_literals(
    dim: usize,
    kmax: u32,
    mmax: u32,
    literals: &[SeriesLiteral],
) -> Result<FourierTaylorSeries> {
    use std::collections::BTreeSet;
    let mut present: BTreeSet<(Vec<i64>, Vec<u32>)> = BTreeSet::new();
    for lit in literals {
        present.insert((lit.k.clone(), lit.m.clone()));
    }
    let mut coeffs = Vec::with_capacity(2 * literals.len());
    for lit in literals {
        if lit.k.len() != dim || lit.m.len() != dim {
            return Err(Error::Config(format!(
                "literal k = {:?}, m = {:?} does not match dimension {dim}",
                lit.k, lit.m
            )));
        }
        let c = num_complex::Complex64::new(lit.re, lit.im);
        coeffs.push((lit.k.clone(), lit.m.clone(), c));
        let mirror: Vec<i64> = lit.k.iter().map(|x| -x).collect();
        if mirror != lit.k && !present.contains(&(mirror.clone(), lit.m.clone())) {
            coeffs.push((mirror, lit.m.clone(), c.conj()));
        }
    }
    FourierTaylorSeries::new(dim, kmax, mmax, &coeffs)
}

/// Emit the canonical half of the coefficients (k = 0 and first nonzero
/// component positive); reality reconstructs the rest.
pub fn series_to_literals(f: &FourierTaylorSeries) -> Vec<SeriesLiteral> {
    let dim = f.dim();
    let mut out = Vec::new();
    for (idx, c) in f.iter() {
        let k = idx.k_vec(dim);
        let lead = k.iter().find(|&&x| x != 0).copied().unwrap_or(0);
        if lead < 0 {
            continue;
        }
        out.push(SeriesLiteral {
            k,
            m: idx.m_vec(dim),
            re: c.re,
            im: c.im,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// problem configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct K0Config {
    #[serde(default)]
    pub c: f64,
    /// Upper triangle of Q row-major: (0,0), (0,1), ..., (1,1), ...
    pub q: Vec<Vec<SeriesLiteral>>,
    #[serde(default)]
    pub tail: Vec<SeriesLiteral>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TruncationConfig {
    #[serde(default = "default_kmax")]
    pub kmax: u32,
    #[serde(default = "default_mmax")]
    pub mmax: u32,
    #[serde(default = "default_oversample")]
    pub oversample: u32,
}

fn default_kmax() -> u32 {
    64
}
fn default_mmax() -> u32 {
    4
}
fn default_oversample() -> u32 {
    2
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            kmax: default_kmax(),
            mmax: default_mmax(),
            oversample: default_oversample(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StripsConfig {
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

fn default_s() -> f64 {
    0.1
}
fn default_sigma() -> f64 {
    0.2
}

impl Default for StripsConfig {
    fn default() -> Self {
        StripsConfig {
            s: default_s(),
            sigma: default_sigma(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SchemeConfig {
    #[serde(default = "default_defect_tol")]
    pub defect_tol: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_gamma2")]
    pub gamma2: f64,
    /// Defaults to tau + 2 when absent.
    #[serde(default)]
    pub tau2: Option<f64>,
}

fn default_defect_tol() -> f64 {
    1e-13
}
fn default_max_iters() -> usize {
    12
}
fn default_gamma2() -> f64 {
    crate::scheme::DEFAULT_GAMMA2
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            defect_tol: default_defect_tol(),
            max_iters: default_max_iters(),
            gamma2: default_gamma2(),
            tau2: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyConfig {
    #[serde(default = "default_t")]
    pub t: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default = "default_distance_tol")]
    pub distance_tol: f64,
    #[serde(default = "default_rotation_tol")]
    pub rotation_tol: f64,
    #[serde(default = "default_energy_tol")]
    pub energy_tol: f64,
}

fn default_t() -> f64 {
    100.0
}
fn default_dt() -> f64 {
    1e-3
}
fn default_grid_n() -> usize {
    256
}
fn default_distance_tol() -> f64 {
    1e-6
}
fn default_rotation_tol() -> f64 {
    1e-5
}
fn default_energy_tol() -> f64 {
    1e-9
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            t: default_t(),
            dt: default_dt(),
            grid_n: default_grid_n(),
            distance_tol: default_distance_tol(),
            rotation_tol: default_rotation_tol(),
            energy_tol: default_energy_tol(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateConfig {
    pub x_ball: f64,
    pub gamma: f64,
    pub tau: f64,
    pub c: f64,
    pub t: f64,
}

/// The full problem description.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub n: usize,
    pub alpha: Vec<f64>,
    /// Diophantine exponent; defaults to n.
    #[serde(default)]
    pub tau: Option<f64>,
    #[serde(default = "default_divisor_floor")]
    pub divisor_floor: f64,
    pub k0: K0Config,
    /// Coefficients of H − K° (or of H itself when the flag is set).
    #[serde(default)]
    pub perturbation: Vec<SeriesLiteral>,
    #[serde(default)]
    pub perturbation_is_full_h: bool,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub strips: StripsConfig,
    #[serde(default)]
    pub scheme: SchemeConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
    #[serde(default)]
    pub certificate: Option<CertificateConfig>,
    #[serde(default)]
    pub seed: u64,
}

fn default_divisor_floor() -> f64 {
    1e-10
}

/// The configuration resolved into live objects.
pub struct Problem {
    pub config: ProblemConfig,
    pub freq: Frequency,
    pub k0: KolmogorovForm,
    pub h: FourierTaylorSeries,
    pub disc: Discretization,
    pub schedule: ScheduleParams,
    pub gamma2: f64,
    pub tau2: f64,
}

impl ProblemConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config parse: {e}")))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Resolve defaults and construct the run objects. The frequency margin
    /// is scan-verified up to the run's kmax here, before anything else.
    pub fn build(&self) -> Result<Problem> {
        let n = self.n;
        if n == 0 || n > crate::series::MAX_DIM {
            return Err(Error::UnsupportedDimension(n));
        }
        if self.alpha.len() != n {
            return Err(Error::Config(format!(
                "alpha has {} components, expected {n}",
                self.alpha.len()
            )));
        }
        let tr = &self.truncation;
        if tr.mmax < 3 {
            return Err(Error::Config("mmax must be >= 3 (Q and tail need it)".into()));
        }
        let tau = self.tau.unwrap_or(n as f64);
        let freq = Frequency::checked(&self.alpha, tau, tr.kmax, self.divisor_floor)?;
        let disc = Discretization::new(n, tr.kmax, tr.mmax, tr.oversample)?;

        let expected_q = n * (n + 1) / 2;
        if self.k0.q.len() != expected_q {
            return Err(Error::Config(format!(
                "k0.q must list the upper triangle: {expected_q} entries for n = {n}, got {}",
                self.k0.q.len()
            )));
        }
        let mut q = vec![FourierTaylorSeries::zero(n, tr.kmax, 0); n * n];
        let mut slot = 0;
        for i in 0..n {
            for j in i..n {
                let entry = series_from_literals(n, tr.kmax, 0, &self.k0.q[slot])?;
                if !entry.is_theta_only() {
                    return Err(Error::NotThetaOnly);
                }
                q[i * n + j] = entry.clone();
                q[j * n + i] = entry;
                slot += 1;
            }
        }
        let tail = series_from_literals(n, tr.kmax, tr.mmax, &self.k0.tail)?;
        let k0 = KolmogorovForm::new(self.k0.c, freq.clone(), q, tail)?;

        let perturbation = series_from_literals(n, tr.kmax, tr.mmax, &self.perturbation)?;
        let h = if self.perturbation_is_full_h {
            perturbation
        } else {
            k0.assemble(tr.kmax, tr.mmax)?.add(&perturbation)?
        };

        let schedule = ScheduleParams {
            s: self.strips.s,
            sigma: self.strips.sigma,
            max_iters: self.scheme.max_iters,
            defect_tol: self.scheme.defect_tol,
        };
        schedule.validate()?;
        let tau2 = self.scheme.tau2.unwrap_or(tau + 2.0);
        // Echo the resolved defaults so the report names the effective values.
        let mut config = self.clone();
        config.tau = Some(tau);
        config.scheme.tau2 = Some(tau2);
        Ok(Problem {
            config,
            freq,
            k0,
            h,
            disc,
            schedule,
            gamma2: self.scheme.gamma2,
            tau2,
        })
    }

    pub fn certificate_constants(&self) -> Result<Option<CertificateConstants>> {
        match &self.certificate {
            None => Ok(None),
            Some(c) => Ok(Some(CertificateConstants::new(
                c.x_ball, c.gamma, c.tau, c.c, c.t,
            )?)),
        }
    }
}

// ---------------------------------------------------------------------------
// group element serialization
// ---------------------------------------------------------------------------

/// On-disk form of a fibered symplectomorphism, in the series literal format.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupElementRecord {
    pub dim: usize,
    pub kmax: u32,
    pub mmax: u32,
    pub v: Vec<Vec<SeriesLiteral>>,
    #[serde(rename = "R")]
    pub r: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<SeriesLiteral>,
}

impl GroupElementRecord {
    pub fn from_element(g: &GroupElement) -> Self {
        GroupElementRecord {
            dim: g.dim(),
            kmax: g.s_pot.kmax(),
            mmax: g.s_pot.mmax(),
            v: g.v.iter().map(series_to_literals).collect(),
            r: g.r_const.clone(),
            s: series_to_literals(&g.s_pot),
        }
    }

    pub fn to_element(&self) -> Result<GroupElement> {
        if self.v.len() != self.dim || self.r.len() != self.dim {
            return Err(Error::Config("group element record shape mismatch".into()));
        }
        let v = self
            .v
            .iter()
            .map(|lits| series_from_literals(self.dim, self.kmax, self.mmax, lits))
            .collect::<Result<Vec<_>>>()?;
        let s_pot = series_from_literals(self.dim, self.kmax, self.mmax, &self.s)?;
        Ok(GroupElement {
            v,
            r_const: self.r.clone(),
            s_pot,
        })
    }
}

/// Both directions of the conjugacy, as written by a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConjugacyRecord {
    /// γ with H ∘ γ ≈ K.
    pub gamma: GroupElementRecord,
    /// G = γ⁻¹ with H = K ∘ G, when the run converged.
    pub g: Option<GroupElementRecord>,
}

// ---------------------------------------------------------------------------
// run report
// ---------------------------------------------------------------------------

/// The complete machine-readable result of `kam run`.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config_echo: ProblemConfig,
    pub outcome: RunOutcome,
    pub steps: Vec<StepRecord>,
    pub defect_norms: Vec<f64>,
    pub fitted_exponent: Option<f64>,
    pub fitted_c: Option<f64>,
    pub fitted_t: Option<f64>,
    pub conjugacy_residual: Option<f64>,
    pub conjugacy_pointwise: Option<f64>,
    pub invariance_residual: Option<f64>,
    pub flow_check: Option<FlowCheckResult>,
    pub certificate: Option<Certificate>,
    pub truncation_debt: f64,
    pub warnings: Vec<String>,
    pub failure: Option<String>,
}

impl RunReport {
    pub fn from_iteration(config: &ProblemConfig, report: &IterationReport) -> Self {
        RunReport {
            config_echo: config.clone(),
            outcome: report.outcome,
            steps: report.steps.clone(),
            defect_norms: report.defect_norms.clone(),
            fitted_exponent: report.fitted_exponent,
            fitted_c: report.fitted_c,
            fitted_t: report.fitted_t,
            conjugacy_residual: report.conjugacy_residual,
            conjugacy_pointwise: report.conjugacy_pointwise,
            invariance_residual: None,
            flow_check: None,
            certificate: None,
            truncation_debt: report.truncation_debt,
            warnings: report.warnings.clone(),
            failure: report.failure.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// deterministic JSON with 17 significant digits
// ---------------------------------------------------------------------------

struct SigDigits17 {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for SigDigits17 {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }

    // Delegate the layout to the pretty formatter.
    fn begin_array<W>(&mut self, w: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_array(&mut self.pretty, w)
    }
    fn end_array<W>(&mut self, w: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_array(&mut self.pretty, w)
    }
    fn begin_array_value<W>(&mut self, w: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_array_value(&mut self.pretty, w, first)
    }
    fn end_array_value<W>(&mut self, w: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_array_value(&mut self.pretty, w)
    }
    fn begin_object<W>(&mut self, w: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_object(&mut self.pretty, w)
    }
    fn end_object<W>(&mut self, w: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_object(&mut self.pretty, w)
    }
    fn begin_object_key<W>(&mut self, w: &mut W, first: bool) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_object_key(&mut self.pretty, w, first)
    }
    fn end_object_key<W>(&mut self, w: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_object_key(&mut self.pretty, w)
    }
    fn begin_object_value<W>(&mut self, w: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::begin_object_value(&mut self.pretty, w)
    }
    fn end_object_value<W>(&mut self, w: &mut W) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        serde_json::ser::Formatter::end_object_value(&mut self.pretty, w)
    }
}

/// Serialize with 17-significant-digit floats (round-trip exact) and stable
/// layout; identical values produce identical bytes.
pub fn to_json_17<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let fmt = SigDigits17 {
        pretty: serde_json::ser::PrettyFormatter::new(),
    };
    let mut ser = serde_json::Serializer::with_formatter(&mut out, fmt);
    value.serialize(&mut ser)?;
    let mut s = String::from_utf8(out).expect("json is utf8");
    s.push('\n');
    Ok(s)
}

/// Torus embedding CSV: `theta_1..theta_n, theta'_1..theta'_n, r'_1..r'_n`.
pub fn embedding_to_csv(emb: &crate::verify::TorusEmbedding) -> String {
    let n = emb.dim;
    let mut out = String::new();
    for prefix in ["theta_", "theta_prime_", "r_prime_"] {
        for j in 1..=n {
            if !(prefix == "theta_" && j == 1) {
                out.push(',');
            }
            out.push_str(prefix);
            out.push_str(&j.to_string());
        }
    }
    out.push('\n');
    let total = emb.n_per_axis.pow(n as u32);
    for flat in 0..total {
        let mut rem = flat;
        let mut theta = vec![0.0; n];
        for t in theta.iter_mut() {
            *t = (rem % emb.n_per_axis) as f64 / emb.n_per_axis as f64;
            rem /= emb.n_per_axis;
        }
        let mut fields: Vec<String> = Vec::with_capacity(3 * n);
        for t in &theta {
            fields.push(format!("{t:.16e}"));
        }
        for j in 0..n {
            fields.push(format!("{:.16e}", theta[j] + emb.angle_offset[j][flat]));
        }
        for j in 0..n {
            fields.push(format!("{:.16e}", emb.r_image[j][flat]));
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Small-divisor spectrum CSV: `k_1..k_n, divisor, amplification`.
pub fn spectrum_to_csv(lines: &[crate::cohomology::DivisorLine], dim: usize) -> String {
    let mut out = String::new();
    for j in 1..=dim {
        out.push_str(&format!("k_{j},"));
    }
    out.push_str("divisor,amplification\n");
    for line in lines {
        for kj in &line.k {
            out.push_str(&format!("{kj},"));
        }
        out.push_str(&format!(
            "{:.16e},{:.16e}\n",
            line.divisor, line.amplification
        ));
    }
    out
}
