//! Command implementations behind the `alge` binary.
//!
//! Every command reads plain-text inputs, writes its outputs atomically and
//! stamps each output with the producing command and the config hash.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        #[source]
        source: alge_core::Error,
    },
    #[error(transparent)]
    Core(#[from] alge_core::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_owned(),
            source,
        }
    }

    /// 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        use alge_core::Error as E;
        let core = match self {
            CliError::Usage(_) => return 1,
            CliError::Io { .. } => return 2,
            CliError::Input { source, .. } => source,
            CliError::Core(source) => source,
        };
        match core {
            E::Param(_) => 1,
            E::Numerical(_) => 3,
            _ => 2,
        }
    }
}

/// Attaches the offending file to a core error.
pub(crate) trait InputContext<T> {
    fn in_file(self, path: &Path) -> Result<T, CliError>;
}

impl<T> InputContext<T> for alge_core::Result<T> {
    fn in_file(self, path: &Path) -> Result<T, CliError> {
        self.map_err(|source| CliError::Input {
            path: path.to_owned(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alge_core::Error as E;

    #[test]
    fn exit_codes_by_error_kind() {
        assert_eq!(CliError::usage("x").exit_code(), 1);
        assert_eq!(CliError::Core(E::Param("x".into())).exit_code(), 1);
        assert_eq!(CliError::Core(E::Degenerate("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(E::Shape("x".into())).exit_code(), 2);
        assert_eq!(CliError::Core(E::Numerical("x".into())).exit_code(), 3);
        let io = CliError::io(Path::new("a"), std::io::Error::from(std::io::ErrorKind::NotFound));
        assert_eq!(io.exit_code(), 2);
    }
}
