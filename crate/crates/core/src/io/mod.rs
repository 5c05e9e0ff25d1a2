//! Instance files, traces, run-state dumps and run orchestration.
mod dump;
mod format;
mod run;
mod trace;

pub use dump::{StateDump, DUMP_FORMAT};
pub use format::{parse_instance, parse_str, write_instance, write_str, HEADER};
pub use run::{
    error_status, load_instance, run, Algorithm, ExitStatus, RunConfig, RunOutcome, PROBE_ITERATIONS,
};
pub use trace::{SddpTrace, SdlpTrace, TimingLog, SDDP_TRACE_HEADER, SDLP_TRACE_HEADER, TIMING_HEADER};
