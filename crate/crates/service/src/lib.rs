//! HTTP API, command-line interface and evaluation harness around
//! [`guideqa_core`].
//!
//! The API serves `POST /ask`, `POST /risk`, `GET /sections` and
//! `GET /health` over one shared, immutable knowledge base. Pipeline calls
//! are blocking and run on the blocking thread pool.

pub mod api;
pub mod cli;
pub mod config;
pub mod eval;
pub mod load;
pub mod server;
