//! The `acs` experiment runner: TOML configs in, CSV/JSON/ACS1 artifacts out.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
