use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty box union")]
    EmptyBoxUnion,
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("spacing exceeds span ({spacing} > {span})")]
    SpacingExceedsSpan { spacing: f64, span: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid gain function: {0}")]
    InvalidGain(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),
    #[error("certificate rejected: {0}")]
    CertificateRejected(String),
    #[error("closed-form γ̂ unavailable for q = {0}")]
    GammaHatUnavailable(u32),
    #[error("the general moment-gap bound requires q ≥ 2 (got {0})")]
    MomentOrderTooSmall(u32),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("no admissible ε at this τ (β contraction factor {factor} ≥ 1)")]
    NoAdmissibleEps { factor: f64 },
    #[error("infeasible precision ε = {eps}: lower bound is {lower_bound}")]
    InfeasiblePrecision { eps: f64, lower_bound: f64 },
    #[error("no quantization parameter satisfies the {route} condition: {detail}")]
    NoFeasibleQuantization { route: String, detail: String },
    #[error("integration diverged at state {state:?} under input {input:?}")]
    IntegrationDiverged { state: Vec<f64>, input: Vec<f64> },
    #[error("insufficient substeps: {changed} of {checked} calibration successors change when doubling {substeps} substeps")]
    InsufficientSubsteps { substeps: usize, changed: usize, checked: usize },
    #[error("grid too large: {0}")]
    GridTooLarge(String),
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("format version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u32, found: u32 },
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("unrealizable from requested initial region (phase {phase})")]
    Unrealizable { phase: usize },
    #[error("left winning region in phase {phase}")]
    LeftWinningRegion { phase: usize },
    #[error("simulation diverged in run {run_id} at step {step}")]
    SimulationDiverged { run_id: u64, step: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit status: 2 certificate, 3 missing artifact, 4 unrealizable, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::CertificateRejected(_) => 2,
            Error::MissingArtifact(_) => 3,
            Error::Unrealizable { .. } => 4,
            _ => 1,
        }
    }
}
