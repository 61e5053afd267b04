use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("input contains non-finite entries")]
    NonFinite,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not self-adjoint: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NotHermitian { residual: f64, tolerance: f64 },

    #[error(
        "eigenvalue {eigenvalue:.12} lies {distance:.3e} from the contour, below the required margin {required:.3e}"
    )]
    GapViolation {
        eigenvalue: f64,
        distance: f64,
        required: f64,
    },

    #[error("resolvent is singular: z lies {distance:.3e} from the spectrum")]
    Singular { distance: f64 },

    #[error("matrix is not positive definite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("invalid contour: {0}")]
    InvalidContour(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("potential harmonic {harmonic} cannot be represented with cutoff {cutoff}")]
    Truncation { harmonic: i64, cutoff: usize },

    #[error("no spectral gap: bands {lower} and {upper} touch (gap {gap:.3e})")]
    NoGap { lower: usize, upper: usize, gap: f64 },

    #[error("invalid band window: {0}")]
    InvalidWindow(String),

    #[error("derivative of order {requested} requested, profile supports up to {supported}")]
    Capability { requested: usize, supported: usize },

    #[error("profile argument {u} outside the tabulated range [{lo}, {hi}]")]
    OutOfRange { u: f64, lo: f64, hi: f64 },

    #[error("quadrature did not reach tolerance {tolerance:.1e} (estimate {estimate:.3e})")]
    Accuracy { tolerance: f64, estimate: f64 },

    #[error("band tracking failed: projector rank {found} at s = {s}, expected {expected}")]
    BandTracking { expected: usize, found: usize, s: f64 },

    #[error("expansion term {order} lost self-adjointness: residual {residual:.3e} at s = {s}")]
    Instability { order: usize, residual: f64, s: f64 },

    #[error(
        "epsilon too large: spectral splitting of T_n fails at node {node} (s = {s}); eigenvalue {eigenvalue:.6} is not near 0 or 1"
    )]
    EpsilonTooLarge { node: usize, s: f64, eigenvalue: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("step-size cap exceeded: {steps} steps needed, budget {budget}")]
    Resource { steps: usize, budget: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
