//! A keyserver running on a background thread, for benches and tests.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use ephemera_keyserver::{AppState, Clock, KeyService, ServerConfig, SystemClock};
use tokio::sync::oneshot;

use crate::error::CliError;

pub struct LocalServer {
    pub url: String,
    pub addr: SocketAddr,
    pub service: Arc<KeyService>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<()>>,
}

impl LocalServer {
    /// Serve `config` on an ephemeral loopback port with the system clock.
    pub fn start(config: &ServerConfig) -> Result<Self, CliError> {
        Self::start_with_clock(config, Arc::new(SystemClock))
    }

    pub fn start_with_clock(
        config: &ServerConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, CliError> {
        let service =
            Arc::new(KeyService::new(config, clock).map_err(|e| CliError::Usage(e.to_string()))?);
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .enable_all()
            .build()
            .map_err(|e| CliError::io("tokio runtime", e))?;
        let listener = runtime
            .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
            .map_err(|e| CliError::io("127.0.0.1:0", e))?;
        let addr = listener
            .local_addr()
            .map_err(|e| CliError::io("listener", e))?;
        let (tx, rx) = oneshot::channel::<()>();
        let state = AppState {
            service: service.clone(),
            trust_forwarded_for: config.trust_forwarded_for,
        };
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let _ = ephemera_keyserver::serve(listener, state, async {
                    let _ = rx.await;
                })
                .await;
            });
        });
        Ok(Self {
            url: format!("http://{addr}"),
            addr,
            service,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }
}

impl Drop for LocalServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
