//! Agent side of the synthesis loop: design memory, prompt composition,
//! text-generation backends and the iterative design/critique orchestrator.

pub mod backend;
pub mod memory;
pub mod oracle;
pub mod orchestrator;
pub mod prompts;

pub use backend::{AgentBackend, GenerationParams, HttpChatBackend, ScriptedBackend};
pub use memory::{MemoryEntry, MemoryRepo};
pub use oracle::OracleBackend;
pub use orchestrator::{run_task, LoopConfig, RunRecord};
