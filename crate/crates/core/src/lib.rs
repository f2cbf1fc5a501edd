//! The agent framework: target configuration, docking and generation
//! backends, the genetic optimizer, the screening language, memory, prompts
//! and the plan/act/evaluate loop.

pub mod action;
pub mod adapter;
pub mod agent;
pub mod bench;
pub mod docking;
pub mod edit;
pub mod evaluate;
pub mod generator;
pub mod llm;
pub mod memory;
pub mod optimizer;
pub mod pocket;
pub mod prompt;
pub mod runlog;
pub mod screener;
pub mod target;
