pub mod error;
pub mod numkit;
pub mod rng;
pub mod sketch;
pub mod coding;
pub mod optimize;
pub mod simulate;
pub mod data;
pub mod cli;
