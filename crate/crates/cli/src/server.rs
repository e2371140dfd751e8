use std::net::SocketAddr;

use anyhow::Context;
use axum::Router;
use tokio::net::TcpListener;

use crate::api::{router, AppState};
use crate::config::{Config, ConfigError};

/// Builds the full application, failing on any configuration problem.
pub fn app(config: &Config) -> Result<Router, ConfigError> {
    let static_dir = match &config.static_dir {
        Some(dir) => {
            let dir = config.resolve(dir);
            if !dir.is_dir() {
                return Err(ConfigError::MissingStaticDir(dir));
            }
            Some(dir)
        }
        None => None,
    };
    let state = AppState::new(config.manager()?, config.shared_secret()?);
    Ok(router(state, static_dir.as_deref()))
}

/// Serves until ctrl-c.
pub async fn serve(config: &Config) -> anyhow::Result<()> {
    let app = app(config)?;
    let listener = TcpListener::bind((config.bind.as_str(), config.port))
        .await
        .with_context(|| format!("cannot bind {}:{}", config.bind, config.port))?;
    let addr: SocketAddr = listener.local_addr()?;
    log::info!("listening on http://{addr}");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        })
        .await?;
    Ok(())
}
