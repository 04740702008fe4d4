pub mod error;
pub mod form;
pub mod instance;
pub mod lp;
pub mod oracle;
pub mod pointloc;
pub mod record;
pub mod prism;
pub mod rat;
pub mod solver;
pub mod transform;

pub use error::{Error, Result};
pub use form::AffineForm;
pub use instance::{brute_decide, enumerate_ids, parse_instance, serialize_instance, Decision, HyperplaneId, LdtInstance};
pub use lp::{LinConstraint, LpResult};
pub use pointloc::{brute_position_vector, PLConfig, PLTree, PositionVector};
pub use prism::{locate_prism, verify_prism, LocateOutcome, Prism, PrismLevel};
pub use oracle::{MemoOracle, Oracle, SignOracle, Transcript, TranscriptEntry};
pub use record::{run_grid, BenchGrid, RunRecord};
pub use rat::{parse_rat, rat, ratio, Rat, Sign};
pub use transform::{random_generic_transform, TransformMatrix};
pub use solver::{conflict_list, decide, decide_batch, decide_with, Family, RoundReport, SolveReport, SolverConfig};
