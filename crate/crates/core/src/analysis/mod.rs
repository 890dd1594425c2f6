//! Static extraction of constraints from controller source code.

pub mod cfg;
pub mod engine;
pub mod value;

pub use cfg::{build_cfg, Cfg, Edge, Node};
pub use engine::{build_call_graph, extract_constraints, Analysis, CallEdge, CallGraph, CallStatus, Diagnostic, DiagnosticKind, Engine};
pub use value::{AbstractValue, Variable, VariableStack};
