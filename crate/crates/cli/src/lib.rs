//! Command-line front end for `idcfuse`: image I/O, reports and the
//! `idcfuse` subcommands.

pub mod app;
pub mod config_file;
pub mod image_io;
pub mod report;

pub use app::run;
