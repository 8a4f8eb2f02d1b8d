//! Report formats shared by the `ses` binary and its tests.

pub mod report;
