//! The annotation service: dataset ingest, the durable session log, the HTTP
//! API, exports, and the command-line tool built on them.

pub mod api;
pub mod config;
pub mod dataset;
pub mod export;
pub mod service;
pub mod simulate;
pub mod state;
pub mod store;

pub use service::{Service, ServiceError};
