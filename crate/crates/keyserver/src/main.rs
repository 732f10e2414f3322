use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use ephemera_keyserver::{serve, AppState, KeyService, ServerConfig, SystemClock};
use tracing_subscriber::EnvFilter;

/// Key server for ephemera protected images.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// TOML configuration file.
    #[arg(long, env = "EPHEMERA_CONFIG")]
    config: Option<PathBuf>,
    /// Listen address, overriding the config file.
    #[arg(long)]
    bind: Option<std::net::SocketAddr>,
}

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    tracing_subscriber::fmt()
        .with_env_filter(
            EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")),
        )
        .init();
    let args = Args::parse();
    let mut config = ServerConfig::load(args.config.as_deref())?;
    if let Some(bind) = args.bind {
        config.bind = bind;
    }
    if config.store_path.is_none() {
        tracing::warn!("no store_path configured; keys will be lost on exit");
    }
    let service = Arc::new(KeyService::new(&config, Arc::new(SystemClock))?);
    let listener = tokio::net::TcpListener::bind(config.bind).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    let state = AppState {
        service,
        trust_forwarded_for: config.trust_forwarded_for,
    };
    serve(listener, state, async {
        let _ = tokio::signal::ctrl_c().await;
        tracing::info!("shutting down");
    })
    .await?;
    Ok(())
}
