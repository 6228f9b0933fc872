//! Command-line front end for `vinelogit`.

pub mod args;
pub mod columns;
pub mod commands;
pub mod document;
pub mod error;
