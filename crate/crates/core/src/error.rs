use thiserror::Error;

/// Errors raised by the geometry routines.
///
/// Variants split into contract violations (bad input, wrong dimension) and
/// numerical failures (tracking collisions, degenerate fits); the CLI maps the
/// two families onto different exit codes via [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("dimension {0} outside supported range 1..=16")]
    UnsupportedDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("form matrix is not positive definite (smallest eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("rotation matrix is not orthogonal (deviation {0:e})")]
    NotOrthogonal(f64),
    #[error("line is binormal; its reflection is orthogonal and has no unique ground hyperplane")]
    BinormalDirection,
    #[error("eigenvalue chain spans relative width {span:e} > grouping tolerance {tol:e}")]
    AmbiguousGrouping { span: f64, tol: f64 },
    #[error("ellipsoid is a sphere: no diagonal lines exist")]
    Sphere,
    #[error("section has a repeated non-binormal axis length; axes are not isolated")]
    DegenerateSection,
    #[error("hyperplane is not generic (margin {margin:e})")]
    NonGeneric { margin: f64 },
    #[error("sheet matching ambiguous at waypoint {step}")]
    SheetCollision { step: usize },
    #[error("waypoints {step} and {} are {distance:e} apart, above the step bound {bound:e}", step + 1)]
    StepTooLarge { step: usize, distance: f64, bound: f64 },
    #[error("only {found} usable chords, need at least {needed}")]
    TooFewChords { found: usize, needed: usize },
    #[error("fitted mirror contains the chord direction")]
    NonTransverseMirror,
    #[error("points do not affinely span the space")]
    DegeneratePointSet,
    #[error("invalid body specification: {0}")]
    InvalidSpec(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SheetCollision { .. }
                | Error::DegenerateSection
                | Error::TooFewChords { .. }
                | Error::NonTransverseMirror
                | Error::DegeneratePointSet
                | Error::AmbiguousGrouping { .. }
        )
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSymmetric { .. } => "not_symmetric",
            Error::UnsupportedDimension(_) => "unsupported_dimension",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ZeroVector => "zero_vector",
            Error::NotPositiveDefinite(_) => "not_positive_definite",
            Error::NotOrthogonal(_) => "not_orthogonal",
            Error::BinormalDirection => "binormal_direction",
            Error::AmbiguousGrouping { .. } => "ambiguous_grouping",
            Error::Sphere => "sphere",
            Error::DegenerateSection => "degenerate_section",
            Error::NonGeneric { .. } => "non_generic",
            Error::SheetCollision { .. } => "sheet_collision",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::TooFewChords { .. } => "too_few_chords",
            Error::NonTransverseMirror => "non_transverse_mirror",
            Error::DegeneratePointSet => "degenerate_point_set",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
