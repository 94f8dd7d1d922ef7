pub mod bench;
pub mod canonical;
pub mod circuit;
pub mod credential;
pub mod crypto;
pub mod flow;
pub mod proofsys;
pub mod registry;
pub mod scenario;
pub mod zkspec;
