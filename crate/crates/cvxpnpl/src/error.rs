use crate::sdp::SdpStatus;

/// Errors surfaced by the solver pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// The two bearings defining a 2D line are (near) parallel.
    #[error("degenerate line: bearings are parallel (cross-product norm {norm:.3e})")]
    DegenerateLine { norm: f64 },

    /// Ground-truth translation has (near) zero norm; the relative error is undefined.
    #[error("ground-truth translation norm {norm:.3e} is too small for a relative error")]
    ZeroGroundTruth { norm: f64 },

    /// The point/line counts do not satisfy the minimum-configuration rule
    /// (3+ points when there are no lines, 4+ elements otherwise).
    #[error("insufficient correspondences: {points} points, {lines} lines")]
    InsufficientCorrespondences { points: usize, lines: usize },

    /// NᵀN is singular or too ill-conditioned to eliminate the translation.
    #[error("degenerate configuration: cond(NᵀN) = {cond:.3e}")]
    DegenerateConfiguration { cond: f64 },

    /// A determinant constraint was requested for a non-cyclic column triple.
    #[error("invalid column triple ({i},{j},{k}); expected a cyclic permutation of (1,2,3)")]
    InvalidTriple { i: usize, j: usize, k: usize },

    /// More than 4 significant eigenvalues in the relaxed solution.
    #[error("solution rank {count} exceeds 4; relaxation is loose or the solve failed")]
    RankOutOfRange { count: usize },

    /// No eigenvector of the solution space has a usable homogeneous coordinate.
    #[error("solution basis degenerate: no eigenvector has a nonzero last entry")]
    BasisDegenerate,

    /// The quadric coefficient matrix does not have the rank the recovery path requires.
    #[error("quadric system rank mismatch: singular-value ratio {ratio:.3e}")]
    RankMismatch { ratio: f64 },

    /// The rank-2 quadratic has complex roots; upstream accuracy is suspect.
    #[error("rank-2 polynomial has no real roots (discriminant {discriminant:.3e})")]
    NoRealRoots { discriminant: f64 },

    /// Every row/variable selection produced an identically singular polynomial matrix.
    #[error("all row/variable selections are degenerate for this quadric system")]
    SelectionDegenerate,

    /// All candidate poses were filtered or pruned away.
    #[error("no admissible pose survived recovery")]
    EmptySolutionSet,

    /// Scene generation kept producing observations outside the image.
    #[error("scene generation exhausted {retries} rejection retries")]
    GenerationExhausted { retries: usize },

    /// The relaxation solve ended in a state recovery cannot use.
    #[error("relaxation solver failed with status {status:?} (gap {gap:.3e})")]
    SolverFailed { status: SdpStatus, gap: f64 },
}

impl Error {
    /// Short machine-readable identifier, used in benchmark CSV status columns.
    pub fn slug(&self) -> &'static str {
        match self {
            Error::DegenerateLine { .. } => "degenerate_line",
            Error::ZeroGroundTruth { .. } => "zero_ground_truth",
            Error::InsufficientCorrespondences { .. } => "insufficient_correspondences",
            Error::DegenerateConfiguration { .. } => "degenerate_configuration",
            Error::InvalidTriple { .. } => "invalid_triple",
            Error::RankOutOfRange { .. } => "rank_out_of_range",
            Error::BasisDegenerate => "basis_degenerate",
            Error::RankMismatch { .. } => "rank_mismatch",
            Error::NoRealRoots { .. } => "no_real_roots",
            Error::SelectionDegenerate => "selection_degenerate",
            Error::EmptySolutionSet => "empty_solution_set",
            Error::GenerationExhausted { .. } => "generation_exhausted",
            Error::SolverFailed { .. } => "solver_failed",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
