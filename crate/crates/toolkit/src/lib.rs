//! Command-line toolkit, transformation proxy and benchmark harness for
//! [`vabe_core`].

pub mod bench;
pub mod cli;
pub mod proxy;
