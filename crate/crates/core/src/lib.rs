//! Exact antichain counting, polymer-model identities and isoperimetric
//! machinery for products of chains `[t]^n`.

pub mod acceptance;
pub mod asymptotics;
pub mod clt_sim;
pub mod containers;
pub mod error;
pub mod exact_count;
pub mod isoperimetry;
pub mod kp;
pub mod llt;
pub mod polymer;
pub mod poset;
pub mod report;

pub use error::{Error, Result};
