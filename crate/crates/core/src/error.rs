use thiserror::Error;

/// Crate-wide error type.
///
/// Variants are grouped by the exit-code class the CLI maps them to:
/// precondition violations (bad inputs, contraction failures) exit with 2,
/// experiment-level failures with 3 and I/O problems with 4.
#[derive(Debug, Error)]
pub enum ScatError {
    #[error("quadrature degree {requested} exceeds supported table (max {max})")]
    DegreeExceedsTable { requested: usize, max: usize },

    #[error("harmonic order index p={p} outside 1..={max} for degree j={j}")]
    InvalidHarmonicIndex { j: usize, p: usize, max: usize },

    #[error("direction vector has norm {norm}, expected a unit vector")]
    NotUnitVector { norm: f64 },

    #[error("grid size n={n} invalid: must be even and at least 8")]
    InvalidGridSize { n: usize },

    #[error("bump at |center|={center_norm} with scale {scale} exits B(0,1/2)")]
    BumpOutsideHalfBall { center_norm: f64, scale: f64 },

    #[error("bump of scale {scale} contains no voxel center on an n={n} grid")]
    BumpUnresolved { scale: f64, n: usize },

    #[error("bumps {i} and {j} overlap (center distance {dist} < scale sum {scale_sum})")]
    OverlappingBumps { i: usize, j: usize, dist: f64, scale_sum: f64 },

    #[error("potentials live on different grids ({n1}^3 vs {n2}^3)")]
    GridMismatch { n1: usize, n2: usize },

    #[error("C^{m} estimate unsupported: finite differences stop at order 4 and the potential carries no bump descriptor")]
    UnsupportedSmoothness { m: usize },

    #[error("green kernel evaluated at r = 0 (the singular cell is the quadrature rule's job)")]
    SingularKernel,

    #[error("contraction violated: q = {q} > 1/2, successive approximations may diverge")]
    ContractionViolated { q: f64 },

    #[error("solver reached max_iter = {max_iter} with residual {residual}")]
    MaxIterExceeded { max_iter: usize, residual: f64 },

    #[error("evaluation radius {radius} lies inside the potential support (radius {support})")]
    RadiusInsideSupport { radius: f64, support: f64 },

    #[error("s = {s} is not among the matrix samples")]
    SampleNotFound { s: f64 },

    #[error("quadrature exactness {have} too coarse for expansion degree {l_max} (need at least {need})")]
    QuadratureTooCoarse { have: usize, need: usize, l_max: usize },

    #[error("contour of radius {r} around {s0} leaves the strip |Im s| <= {h}")]
    ContourOutsideStrip { s0: String, r: f64, h: f64 },

    #[error("epsilon {epsilon} too large for beta {beta} at smoothness m={m}: budget admits no bump")]
    EpsilonTooLarge { epsilon: f64, beta: f64, m: usize },

    #[error("coefficient at (j1={j1}, p1={p1}, j2={j2}, p2={p2}) has |a| = {value}, exceeding the class bound {bound}")]
    EntryExceedsBound { j1: usize, p1: usize, j2: usize, p2: usize, value: f64, bound: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("experiment failed: {0}")]
    ExperimentFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config file parse failed: {0}")]
    TomlDe(#[from] toml::de::Error),

    #[error("manifest encode failed: {0}")]
    TomlSer(#[from] toml::ser::Error),
}

impl ScatError {
    /// CLI exit code class for this error.
    pub fn exit_code(&self) -> i32 {
        use ScatError::*;
        match self {
            Io(_) | Json(_) | TomlDe(_) | TomlSer(_) => 4,
            ExperimentFailed(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, ScatError>;
