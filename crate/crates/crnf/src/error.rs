use thiserror::Error;

pub type Result<T> = std::result::Result<T, CrError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrError {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("unknown variable: {0}")]
    UnknownVariable(String),

    #[error("composition error: {0}")]
    Composition(String),

    #[error("reversion error: {0}")]
    Reversion(String),

    #[error("singular: {0}")]
    Singular(String),

    #[error("reality violated: {0}")]
    NotReal(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("levi_degenerate: the Levi form at 0 is degenerate")]
    LeviDegenerate,

    /// The weighted system stopped being uniquely solvable. `witness` is a
    /// kernel vector ξ of 6i𝓛(ξ̄,·) + 𝓝^w(ξ,·) as (re, im) fraction strings,
    /// `kernel_dim` the nullity of the weight-`weight` system.
    #[error("not_strongly_nondegenerate: system singular at weight {weight} (kernel dimension {kernel_dim})")]
    NotStronglyNondegenerate { weight: u32, kernel_dim: usize, witness: Vec<(String, String)> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal consistency check failed: {0}")]
    Internal(String),
}
