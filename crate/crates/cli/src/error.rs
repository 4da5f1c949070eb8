use std::path::PathBuf;

/// Problems with the contents of an input file.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("bad magic: expected {:?}, found {:?}", String::from_utf8_lossy(expected), String::from_utf8_lossy(found))]
    BadMagic { expected: [u8; 4], found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error("file is {actual} bytes, header implies {expected}")]
    SizeMismatch { expected: u128, actual: u128 },
    #[error("file ends after {actual} bytes, header needs {needed}")]
    Truncated { needed: usize, actual: usize },
    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] pairclust_core::Error),
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::BadMagic { .. } => "BadMagic",
            FormatError::UnsupportedVersion(_) => "UnsupportedVersion",
            FormatError::SizeMismatch { .. } => "SizeMismatch",
            FormatError::Truncated { .. } => "Truncated",
            FormatError::Parse { .. } => "Parse",
            FormatError::Invalid(_) => "InvalidFormat",
            FormatError::Core(e) => e.code(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] pairclust_core::Error),
    #[error("{}: {source}", path.display())]
    Format { path: PathBuf, source: FormatError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Core(e) => e.code(),
            CliError::Format { source, .. } => source.code(),
            CliError::Io { .. } => "Io",
            CliError::Json { .. } => "Json",
            CliError::Runtime(_) => "Runtime",
        }
    }

    /// 1 for usage errors, 2 for bad data or configuration, 3 for failures
    /// while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(pairclust_core::Error::NonFiniteLoss { .. }) => 3,
            CliError::Core(_) | CliError::Format { .. } | CliError::Json { .. } => 2,
            CliError::Io { .. } | CliError::Runtime(_) => 3,
        }
    }

    /// The single stderr line: `error_code=<code> detail=<message>`.
    pub fn report_line(&self) -> String {
        let detail: String = self.to_string().split_whitespace().collect::<Vec<_>>().join(" ");
        format!("error_code={} detail={detail}", self.code())
    }
}
