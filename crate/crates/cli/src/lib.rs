//! Command-line client for ephemera: publish images that stop being
//! viewable after a date, view them while the keyserver still releases
//! their key, and manage published keys.

pub mod api;
pub mod bench;
pub mod error;
pub mod manage;
pub mod publish;
pub mod server;
pub mod view;

pub use api::{ApiError, HttpKeyApi, KeyApi, LocalKeyApi};
pub use error::CliError;
pub use manage::KeySelector;
pub use publish::{publish, Embedder, PublishJob, PublishReport, PublishedImage};
pub use server::LocalServer;
pub use view::{open_protected, unlock, CaptchaSolver, FixedAnswer, Opened};
