//! Hint-only tutoring for programming exercises.
//!
//! A student message passes through four model-backed steps: a relevance
//! gate, file selection over the exercise repository, hint generation at an
//! assistance level, and a self-check loop that regenerates at lower levels
//! until the draft reveals no solution.
//!
//! - [`domain`]: sessions, messages and per-message traces
//! - [`llm`]: backend trait, HTTP and scripted mock backends
//! - [`context`]: fixture loading and context budgeting
//! - [`guardrails`]: prompt templates, static scan and refinement loop
//! - [`pipeline`]: the four-step chain
//! - [`store`]: atomic JSON persistence
//! - [`service`], [`server`]: session orchestration and the HTTP API
//! - [`config`], [`cli`]: settings and command-line entry points

pub mod cli;
pub mod config;
pub mod context;
pub mod domain;
pub mod guardrails;
pub mod llm;
pub mod pipeline;
pub mod server;
pub mod service;
pub mod store;

pub use domain::{AssistanceLevel, Message, Outcome, PipelineTrace, Role, Session};
pub use pipeline::{Pipeline, PipelineConfig, Turn};
pub use service::TutorService;
