use std::path::PathBuf;

use imd2_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("invalid value for {field}: {msg}")]
    Config { field: String, msg: String },
}

impl CliError {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            msg: msg.into(),
        }
    }

    /// 2 for bad input, 3 for numeric failure, 4 for unsupported combinations.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Core(e) => match e {
                CoreError::Unsupported(_) => 4,
                CoreError::NonFinite { .. }
                | CoreError::RankDeficient { .. }
                | CoreError::LineSearch(_)
                | CoreError::Domain(_) => 3,
                _ => 2,
            },
            Self::Io { .. } | Self::Toml { .. } | Self::Config { .. } => 2,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

pub fn read_to_string(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write(path: &std::path::Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn create_dir(path: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}
