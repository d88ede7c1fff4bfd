//! Multi-level modeling toolchain for automotive control software.
//!
//! Models are written in a textual DSL ([`frontend`]), checked by static
//! analyses ([`analysis`]), executed by a synchronous simulator ([`sim`]) and
//! moved between abstraction levels by transformations ([`transform`]).

pub mod analysis;
pub mod cli;
pub mod diag;
pub mod frontend;
pub mod model;
pub mod sim;
pub mod transform;
