//! Command control of a trained agent.
//!
//! A command names a target unit. While it runs, the agent's attention is
//! restricted to the hero, the target and units near either of them
//! ([`build_attention_set`], [`sample_masked_z`]), so the fused context and
//! therefore the predicted action are driven by the target. An optional
//! gate admits a command only when the target's coarse cell is among the
//! agent's own top intention cells, and can abort it mid-way.

mod agent;
mod attention;
mod command;
mod execute;
mod metrics;

pub use agent::{Agent, AgentOutput, ModelAgent, ScriptedAgent};
pub use attention::{build_attention_set, sample_masked_z, should_execute, AttentionSet};
pub use command::{Command, CommandKind};
pub use execute::{classify_outcome, run_command, CommandTrace, ControlConfig, Outcome, TraceFrame};
pub use metrics::{command_metrics, metrics_csv, read_traces, write_metrics_csv, write_traces, CommandMetrics, Rates};
