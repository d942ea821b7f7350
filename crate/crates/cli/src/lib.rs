//! Front ends for `intermap-core`: the `intermap` command and its HTTP
//! service.

pub mod api;
mod cli;
pub mod load;
pub mod service;

pub use cli::{run, EXIT_DATA, EXIT_OK, EXIT_USAGE};
pub use service::{router, AppState, ServiceConfig, ServiceError};
