pub mod eval;
pub mod exec;
pub mod gen;
pub mod plan;
pub mod trace;
