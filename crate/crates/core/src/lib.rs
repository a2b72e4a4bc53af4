//! Compositional traffic-rule benchmark construction.
//!
//! The crate is organised as a pipeline:
//!
//! * [`rule_model`] — atomic rules, the closed action space, priority classes.
//! * [`rule_crafter`] — k-rule combinations, level labels, coexistence, the
//!   hierarchical rule set.
//! * [`mcq`] — ground-truth arbitration, generation prompts, consensus gating
//!   and quality scoring of multiple-choice questions.
//! * [`scene`] — the scenario DSL (`environment` / `road_network` / `actors` /
//!   `oracle`) with deterministic coherence and rule-coverage checks.
//! * [`compiler`] — scene instantiation on synthetic road networks,
//!   trajectory synthesis and OpenSCENARIO emission.
//! * [`eval`] — dataset splits, prompt construction, endpoint adapters and
//!   stratified accuracy reports.
//!
//! [`llm`] holds the chat wire format shared by every model-backed component.

pub mod compiler;
pub mod eval;
pub mod llm;
pub mod mcq;
pub mod prompts;
pub mod rule_crafter;
pub mod rule_model;
pub mod scene;
mod util;

pub use compiler::{compile_scene, CompileOptions, CompiledScenario, RoadNetwork};
pub use eval::{Condition, EvalRecord, Report, Variant};
pub use llm::{ChatEndpoint, ChatRequest, DecodingParams, EndpointError};
pub use mcq::{ActionDescriptor, Directive, Mcq, OptionKey};
pub use scene::SceneDoc;
pub use rule_crafter::{HierarchicalRuleSet, Level, RuleCombo};
pub use rule_model::{
    ActionCategory, ActionType, AtomicRule, Jurisdiction, NormType, PerceptualType, PriorityClass,
    RuleId, SpeedRange,
};
