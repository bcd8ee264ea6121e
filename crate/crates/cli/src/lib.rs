//! Command-line pipeline over the `parkbeam` core: configuration, artifact
//! files and one module per subcommand.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
