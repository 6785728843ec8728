use thiserror::Error;

/// Errors surfaced by the series algebra, the solvers and the iteration driver.
///
/// Precondition-style variants carry the numbers that tripped them so that a
/// refusal names the failed inequality instead of just failing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("dimension {0} out of supported range 1..=4")]
    UnsupportedDimension(usize),

    #[error("index {what} out of truncation bounds (|k|1 <= {kmax}, |m|1 <= {mmax})")]
    IndexOutOfBounds {
        what: String,
        kmax: u32,
        mmax: u32,
    },

    #[error("non-finite coefficient at {0}")]
    NonFiniteCoefficient(String),

    #[error("reality violation: imaginary part {imag:.3e} exceeds {tol:.3e}")]
    RealityViolation { imag: f64, tol: f64 },

    #[error("series is not a function of theta only")]
    NotThetaOnly,

    #[error("strip parameters invalid: s = {s}, sigma = {sigma} (need 0 < s, 0 < sigma, s + sigma < 1)")]
    InvalidStrip { s: f64, sigma: f64 },

    #[error("exact resonance: k = {k:?} gives |k·alpha| distance 0 to the integers")]
    Resonance { k: Vec<i64> },

    #[error("small divisor below floor at k = {k:?}: dist(k·alpha, Z) = {divisor:.3e} < {floor:.3e}")]
    SmallDivisor {
        k: Vec<i64>,
        divisor: f64,
        floor: f64,
    },

    #[error("truncation order {requested} exceeds Diophantine-verified order {verified}")]
    UnverifiedTruncation { requested: u32, verified: u32 },

    #[error("right-hand side has nonzero average {avg:.3e} (tolerance {tol:.3e}); subtract it first")]
    NonzeroAverage { avg: f64, tol: f64 },

    #[error("averaged quadratic form is singular or ill-conditioned (cond ~ {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("non-degeneracy lost: |det avg Q| = {det:.3e} below floor {floor:.3e}")]
    NondegeneracyLost { det: f64, floor: f64 },

    #[error("exp precondition failed: |Gdot|_(s+sigma) = {norm:.3e} > gamma0*sigma^2 = {bound:.3e}")]
    ExpPrecondition { norm: f64, bound: f64 },

    #[error("exp refused: estimated Picard contraction {lipschitz:.3e} exceeds 1/2")]
    ExpContraction { lipschitz: f64 },

    #[error("Picard iteration failed to contract after {sweeps} sweeps (last change {change:.3e})")]
    PicardDivergence { sweeps: usize, change: f64 },

    #[error("map too far from identity: min det(I + v') = {min_det:.3e} on the check grid")]
    NotNearIdentity { min_det: f64 },

    #[error("composed displacement exceeds the strip budget (max |v| = {max_v:.3e})")]
    StripBudget { max_v: f64 },

    #[error("pointwise Newton inversion stagnated after {iters} iterations (residual {residual:.3e})")]
    NewtonStagnation { iters: usize, residual: f64 },

    #[error("aliasing alarm: top-third mode energy fraction {ratio:.3e} exceeds {limit:.3e}; grid too coarse")]
    AliasingAlarm { ratio: f64, limit: f64 },

    #[error("defect increased on two consecutive steps (last defects {prev:.3e}, {last:.3e}); aborting at step {step}")]
    Divergence { step: usize, prev: f64, last: f64 },

    #[error("certificate domain violated: {reason}")]
    CertificateDomain { reason: String },

    #[error("trajectory escaped the verification strip (|r| reached {r_max:.3e} > {limit:.3e})")]
    NonInvariance { r_max: f64, limit: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
