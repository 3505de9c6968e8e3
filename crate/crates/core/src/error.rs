use thiserror::Error;

#[derive(Debug, Error)]
pub enum ShellError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("non-positive jacobian ({value:.3e}): {context}")]
    NonpositiveJacobian { value: f64, context: String },
    #[error("element inversion in element {element} at quadrature point {point} (J = {jacobian:.3e})")]
    ElementInversion {
        element: usize,
        point: usize,
        jacobian: f64,
    },
    #[error("invalid order: {0}")]
    InvalidOrder(String),
    #[error("invalid material parameters: {0}")]
    InvalidMaterial(String),
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("bad surface selector: {0}")]
    BadSurfaceSelector(String),
    #[error("conflicting constraints: {0}")]
    ConflictingConstraints(String),
    #[error("singular system: {message} ({rigid_modes} unconstrained rigid modes)")]
    SingularSystem { message: String, rigid_modes: usize },
    #[error("arc-length constraint has complex roots")]
    ComplexRoots,
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("non-finite values: {0}")]
    NonFinite(String),
    #[error("config error: {0}")]
    ConfigError(String),
    #[error("expression parse error: {0}")]
    ExpressionParseError(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ShellError {
    /// Errors that a continuation method may recover from by cutting the step.
    pub fn is_step_failure(&self) -> bool {
        matches!(
            self,
            ShellError::ElementInversion { .. }
                | ShellError::NonpositiveJacobian { .. }
                | ShellError::NonConvergence(_)
                | ShellError::ComplexRoots
                | ShellError::NonFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, ShellError>;
