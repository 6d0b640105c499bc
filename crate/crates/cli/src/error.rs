use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Mesh {
        path: PathBuf,
        source: curvflow::MeshError,
    },
    #[error("{0}")]
    Schema(String),
    #[error(transparent)]
    Shape(#[from] curvflow::shapes::ShapeError),
    #[error(transparent)]
    Flow(#[from] curvflow::flow::FlowError),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        1
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub fn mesh(path: impl Into<PathBuf>) -> impl FnOnce(curvflow::MeshError) -> CliError {
        let path = path.into();
        move |source| CliError::Mesh { path, source }
    }
}
