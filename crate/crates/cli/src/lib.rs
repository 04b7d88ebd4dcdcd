//! Command-line front end for the Weil representation library.

pub mod commands;
pub mod config;
pub mod report;
