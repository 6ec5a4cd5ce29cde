//! Independent reference implementations used to check the pipeline:
//! brute-force summaries, closure-matrix slices, reachability SCCs,
//! rename-invariant graph keys, fault injection and seeded generators.
#![allow(clippy::needless_range_loop)]

pub mod canon;
pub mod fault;
pub mod gen;
pub mod scc;
pub mod slice;
pub mod summary;

pub use canon::{context_correspondence, graph_correspondence, renamed_as, statement_keys, StmtKey};
pub use fault::{SelectiveFault, ALL_FAULTS};
pub use gen::{generate_program, random_call_graph, random_udg, GraphShape, ProgramShape};
pub use scc::{check_order, recursive_functions, scc_partition, OrderViolation};
pub use slice::{control_closure_oracle, data_closure_oracle};
pub use summary::{brute_force_summary_oracle, depth_bounded_summary_oracle, OracleError};
