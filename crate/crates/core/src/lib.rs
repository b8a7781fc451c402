pub mod automation;
pub mod binding;
pub mod cli;
pub mod com;
pub mod idl;
pub mod marshal;
pub mod winsim;
pub mod wordmem;
