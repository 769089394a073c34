use thiserror::Error;

/// Every failure the library can report.
///
/// The variant name doubles as the machine-readable `error_kind` emitted by the CLI.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("generator count mismatch: {left} vs {right}")]
    GeneratorMismatch { left: usize, right: usize },
    #[error("too many odd generators: {0} (at most {max})", max = crate::grassmann::MAX_GENERATORS)]
    TooManyGenerators(usize),
    #[error("generator index {index} out of range for {num_generators} generators")]
    GeneratorOutOfRange { index: usize, num_generators: usize },
    #[error("element has zero body and is not invertible")]
    NotInvertible,
    #[error("element is not parity-homogeneous")]
    MixedParity,
    #[error("element should be {expected}")]
    WrongParity { expected: &'static str },
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error("matrix is not square")]
    NotSquare,
    #[error("entry ({row}, {col}) has the wrong parity for its block")]
    ParityViolation { row: usize, col: usize },
    #[error("odd-odd block has a determinant with zero body")]
    SingularOddBlock,
    #[error("body matrix does not have full rank")]
    BodyRankDeficient,
    #[error("leading coefficient of the series has zero body")]
    NonInvertibleLeading,
    #[error("expected a section of weight {expected}, found weight {found}")]
    WrongWeight { expected: i64, found: i64 },
    #[error("cannot combine sections of weight {0} and {1}")]
    WeightMismatch(i64, i64),
    #[error("evaluation needs coefficients beyond the known truncation order")]
    EvaluationOutsideTruncation,
    #[error("coordinate change is not superconformal")]
    NotSuperconformal,
    #[error("coordinate change is not superconformal at a Ramond puncture")]
    NotRamondSuperconformal,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("normalization scalar has zero body")]
    NonInvertibleNormalization,
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("{location}: {source}")]
    Located {
        location: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, location: impl Into<String>) -> Self {
        Error::Located {
            location: location.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, with every location wrapper removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Located { source, .. } => source.root(),
            other => other,
        }
    }

    /// Dotted path of all location wrappers, outermost first.
    pub fn location(&self) -> Option<String> {
        let mut parts = Vec::new();
        let mut cur = self;
        while let Error::Located { location, source } = cur {
            parts.push(location.as_str());
            cur = source;
        }
        if parts.is_empty() {
            None
        } else {
            Some(parts.join("."))
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::GeneratorMismatch { .. } => "GeneratorMismatch",
            Error::TooManyGenerators(_) => "TooManyGenerators",
            Error::GeneratorOutOfRange { .. } => "GeneratorOutOfRange",
            Error::NotInvertible => "NotInvertible",
            Error::MixedParity => "MixedParity",
            Error::WrongParity { .. } => "WrongParity",
            Error::LayoutMismatch(_) => "LayoutMismatch",
            Error::NotSquare => "NotSquare",
            Error::ParityViolation { .. } => "ParityViolation",
            Error::SingularOddBlock => "SingularOddBlock",
            Error::BodyRankDeficient => "BodyRankDeficient",
            Error::NonInvertibleLeading => "NonInvertibleLeading",
            Error::WrongWeight { .. } => "WrongWeight",
            Error::WeightMismatch(..) => "WeightMismatch",
            Error::EvaluationOutsideTruncation => "EvaluationOutsideTruncation",
            Error::NotSuperconformal => "NotSuperconformal",
            Error::NotRamondSuperconformal => "NotRamondSuperconformal",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::NonInvertibleNormalization => "NonInvertibleNormalization",
            Error::Malformed(_) => "Malformed",
            Error::Located { .. } => unreachable!(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait ResultExt<T> {
    fn at(self, location: impl Into<String>) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn at(self, location: impl Into<String>) -> Result<T> {
        self.map_err(|e| e.at(location))
    }
}
