//! HTTP gateway and command-line front end for `specloop-core`.

pub mod api;
pub mod commands;
pub mod config;
pub mod server;

pub use api::{router, ApiError, AppState};
pub use config::{Config, ConfigError};
