//! Independent ground truth: deterministic equivalents, recursive
//! evaluation, sample-average cost-to-go checks and policy rollouts.

mod extensive;
mod nested;
mod policy;
mod probes;
mod sample_average;

pub use extensive::{root_decision_value, solve_extensive, solve_instance, ExtensiveSolution, DEFAULT_PATH_CAP};
pub use nested::nested_value;
pub use policy::{evaluate_policy, PolicyEvalReport, PolicyKind, TrainedModel};
pub use probes::{box_probes, check_minorants, hoffman_ratio, reachable_probes, Probe, ProbeReport};
pub use sample_average::{benchmark_h, eval_h, pool_laws};
