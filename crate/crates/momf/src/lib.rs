//! Materials datastore, multi-fidelity optimization campaigns, HTTP service and CLI.

pub mod datastore;
pub mod campaign;
pub mod api;
pub mod cli;
