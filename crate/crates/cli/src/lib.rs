//! Command implementations and the annotation/inspection service behind the
//! `srcsent` binary.

pub mod commands;
pub mod service;
mod table;
