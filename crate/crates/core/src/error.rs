use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} variables, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("index {index} out of range for {len} variables")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid manifold spec: {0}")]
    InvalidSpec(String),
    #[error("metric entry ({i}, {j}) is not constant")]
    NonConstantMetric { i: usize, j: usize },
    #[error("metric is singular")]
    SingularMetric,
    #[error("grading operator is not metric-antisymmetric (residual {residual:e})")]
    MuNotAntisymmetric { residual: f64 },

    #[error("classification inconclusive: eigenvalue gap {gap:e} lies in the tolerance band")]
    Inconclusive { gap: f64 },
    #[error("point is not a caustic point (classified {class})")]
    NotCaustic { class: String },
    #[error("unsupported eigenvalue cluster structure: {0}")]
    ClusterStructure(String),
    #[error("induced metric on the coalescing plane is degenerate")]
    DegenerateInducedMetric,
    #[error("no nilpotent direction found (best residual {residual:e})")]
    MultipleNilpotents { residual: f64 },
    #[error("|V12| = {v12:e} is too small: the coalescence is semisimple")]
    CoalescenceNotCaustic { v12: f64 },
    #[error("log-log fit failed (residual {residual:e})")]
    FitFailure { residual: f64 },
    #[error("frame branch discontinuity near s = {s}")]
    FrameDiscontinuity { s: f64 },

    #[error("small divisor |u_{i} - u_{j}| = {gap:e}")]
    SmallDivisor { i: usize, j: usize, gap: f64 },
    #[error("residue block vanishes")]
    ZeroResidue,
    #[error("resonant divisor at entry ({a}, {b}), order {k}")]
    ResonantResidue { a: usize, b: usize, k: usize },
    #[error("residue is not diagonalizable")]
    NonDiagonalizableResidue,
    #[error("matrix is singular")]
    SingularMatrix,

    #[error("step size underflow at path parameter {tau} on segment {segment}")]
    StepUnderflow { segment: usize, tau: f64 },
    #[error("non-finite value encountered")]
    NonFiniteValue,
    #[error("truncation tail estimate {estimate:e} exceeds the allowed {allowed:e}")]
    TailTooLarge { estimate: f64, allowed: f64 },
    #[error("overlap estimates disagree by {deviation:e}")]
    InconsistentOverlap { deviation: f64 },

    #[error("at s = {s}: {source}")]
    AtSample {
        s: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("unknown caustic curve '{0}'")]
    UnknownCurve(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn at_sample(self, s: f64) -> Error {
        Error::AtSample { s, source: Box::new(self) }
    }

    /// Variant name, for structured reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ArityMismatch { .. } => "ArityMismatch",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::InvalidSpec(_) => "InvalidSpec",
            Error::NonConstantMetric { .. } => "NonConstantMetric",
            Error::SingularMetric => "SingularMetric",
            Error::MuNotAntisymmetric { .. } => "MuNotAntisymmetric",
            Error::Inconclusive { .. } => "Inconclusive",
            Error::NotCaustic { .. } => "NotCaustic",
            Error::ClusterStructure(_) => "ClusterStructure",
            Error::DegenerateInducedMetric => "DegenerateInducedMetric",
            Error::MultipleNilpotents { .. } => "MultipleNilpotents",
            Error::CoalescenceNotCaustic { .. } => "CoalescenceNotCaustic",
            Error::FitFailure { .. } => "FitFailure",
            Error::FrameDiscontinuity { .. } => "FrameDiscontinuity",
            Error::SmallDivisor { .. } => "SmallDivisor",
            Error::ZeroResidue => "ZeroResidue",
            Error::ResonantResidue { .. } => "ResonantResidue",
            Error::NonDiagonalizableResidue => "NonDiagonalizableResidue",
            Error::SingularMatrix => "SingularMatrix",
            Error::StepUnderflow { .. } => "StepUnderflow",
            Error::NonFiniteValue => "NonFiniteValue",
            Error::TailTooLarge { .. } => "TailTooLarge",
            Error::InconsistentOverlap { .. } => "InconsistentOverlap",
            Error::AtSample { .. } => "AtSample",
            Error::UnknownCurve(_) => "UnknownCurve",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }

    /// Curve parameter of the innermost sample wrapper, if any.
    pub fn sample(&self) -> Option<f64> {
        match self {
            Error::AtSample { s, source } => source.sample().or(Some(*s)),
            _ => None,
        }
    }

    /// Innermost error, looking through sample wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtSample { source, .. } => source.root(),
            e => e,
        }
    }

    /// True for failures that signal a degenerate numerical situation rather than bad input.
    pub fn is_degeneracy(&self) -> bool {
        !matches!(
            self.root(),
            Error::ArityMismatch { .. }
                | Error::IndexOutOfRange { .. }
                | Error::InvalidSpec(_)
                | Error::UnknownCurve(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
