pub mod analysis;
pub mod config;
pub mod constraint;
pub mod doc;
pub mod evaluation;
pub mod mock;
pub mod oas;
pub mod pipeline;
pub mod probe;
pub mod source;
