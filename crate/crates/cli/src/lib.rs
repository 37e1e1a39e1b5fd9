//! Command-line front end for the photocell model: config parsing,
//! experiment dispatch, and deterministic file output.

pub mod config;
pub mod output;
pub mod run;
