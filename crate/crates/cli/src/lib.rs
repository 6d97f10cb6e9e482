//! Experiment drivers, configuration and report files behind the
//! `skillmem` command-line tool.

pub mod config;
pub mod experiments;
pub mod report;
