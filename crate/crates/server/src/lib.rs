//! HTTP service, configuration, and operator CLI for the mentoring engine.

pub mod app;
pub mod cli;
pub mod config;
pub mod demo;
pub mod error;
pub mod service;

pub use config::EngineConfig;
pub use service::{serve, ServeError, ServiceHandle};
