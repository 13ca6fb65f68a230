//! Command line verbs and the HTTP gateway over `pipebot-core`.

pub mod commands;
pub mod server;
