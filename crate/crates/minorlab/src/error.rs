use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("matrix size must be at least 1")]
    EmptyMatrix,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("input matrix is not Hermitian")]
    NotHermitian,
    #[error("invalid variance profile or deformation: {0}")]
    InvalidProfile(String),
    #[error("beta={beta} ensemble used with complex_storage={complex_storage} scalar type")]
    SymmetryMismatch { beta: u8, complex_storage: bool },
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("NaN or infinite value in solver input")]
    NanInput,
    #[error("secular iteration failed to converge (residual {residual:.3e})")]
    SecularNoConvergence { residual: f64 },
    #[error("LAPACK routine {routine} failed with info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error("Lanczos iteration failed to converge within {max_iter} steps (residual {residual:.3e})")]
    LanczosNoConvergence { max_iter: usize, residual: f64 },
    #[error("engine invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error("at step n={n}: {source}")]
    AtStep {
        n: usize,
        #[source]
        source: Box<EngineError>,
    },
}

impl EngineError {
    pub fn at_step(self, n: usize) -> EngineError {
        EngineError::AtStep { n, source: Box::new(self) }
    }
}

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("time step must be nonnegative and finite, got {0}")]
    BadTimeStep(f64),
    #[error("eigenvalues must be strictly decreasing")]
    Unordered,
    #[error("substep limit reached near a collision (minimal gap {min_gap:.3e})")]
    SubstepLimit { min_gap: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("i_max = {i_max} exceeds available columns ({cols})")]
    OverlapRange { i_max: usize, cols: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("level grid invalid: {0}")]
    BadLevels(String),
    #[error("all tail levels dropped (fewer than {min_hits} hits each)")]
    AllLevelsDropped { min_hits: usize },
    #[error("window {lo}..{hi} outside trajectory range {traj_lo}..{traj_hi}")]
    WindowOutOfRange { lo: usize, hi: usize, traj_lo: usize, traj_hi: usize },
    #[error("semicircle quantile solver failed to converge at index {index}")]
    QuantileNoConvergence { index: usize },
    #[error("Dyson iteration diverged (last residual {residual:.3e})")]
    DysonDiverged { residual: f64 },
    #[error("integer overflow computing ceil(k^alpha) for k={k}, alpha={alpha}")]
    SubsequenceOverflow { k: u64, alpha: f64 },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

impl HarnessError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// CLI exit code: 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            _ => 1,
        }
    }
}
