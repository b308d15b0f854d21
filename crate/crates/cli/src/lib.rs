//! Library side of the `tensorpca` command: file format, solver dispatch and
//! experiment tables.

pub mod experiment;
pub mod format;
pub mod solve;
