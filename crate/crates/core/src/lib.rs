//! Repository-level dependency graphs for Java, context extraction around
//! sensitive calls, and voting LLM verdicts.

pub mod context;
pub mod enhance;
pub mod frontend;
pub mod harness;
pub mod knowledge;
pub mod llm;
pub mod reasoning;
pub mod udg;

pub use context::{ContextConfig, Extractor, HolisticContext, SensitiveInvocation};
pub use enhance::{enhance, EnhanceConfig, Enhanced, ResolutionOracle};
pub use frontend::{parse_repository, parse_sources, DiagClass, Diagnostic, RepoModel};
pub use harness::{run_scan, scan_model, OracleMode, Report, ScanConfig, ScanError};
pub use knowledge::KnowledgeBase;
pub use reasoning::InferenceClient;
pub use udg::{assemble_original_udg, UnifiedDependencyGraph};
