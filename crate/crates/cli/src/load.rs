use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use intermap_core::{ingest_csv, DatasetSnapshot, IngestError, IngestReport};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Ingest { path: PathBuf, source: IngestError },
}

pub fn load_snapshot(path: &Path) -> Result<(DatasetSnapshot, IngestReport), LoadError> {
    let file = File::open(path).map_err(|source| LoadError::Open {
        path: path.to_owned(),
        source,
    })?;
    ingest_csv(BufReader::new(file)).map_err(|source| LoadError::Ingest {
        path: path.to_owned(),
        source,
    })
}
