//! Run orchestration behind the command-line interface.

use super::dump::StateDump;
use super::format::parse_instance;
use super::trace::{SddpTrace, SdlpTrace, TimingLog};
use crate::error::{MslpError, Result};
use crate::instance::{shift_nonneg, validate, MslpInstance};
use crate::oracle::{
    check_minorants, evaluate_policy, reachable_probes, root_decision_value, solve_instance, PolicyKind,
    ProbeReport, TrainedModel,
};
use crate::process::{PathLog, SupportSampler};
use crate::sddp::{sddp_run_with, SddpConfig};
use crate::sdlp::{sdlp_iterate, SdlpConfig, SdlpRunState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Iterations at which probe checks run when enabled.
pub const PROBE_ITERATIONS: [usize; 4] = [10, 50, 100, 500];
const PROBES_PER_STAGE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Validate,
    Extensive,
    Sddp,
    Sdlp,
    Evaluate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub instance: PathBuf,
    pub seed: u64,
    pub iterations: usize,
    pub sigma: f64,
    pub q: f64,
    pub max_pieces: Option<usize>,
    pub n_paths: usize,
    pub probe_checks: bool,
    pub out_dir: PathBuf,
    pub replications: usize,
    /// Shift stage costs nonnegative before solving.
    pub shift: bool,
    /// Report the extensive-form optimum next to the estimates.
    pub compare_oracle: bool,
    /// Continue an SDLP run from this dump, or evaluate the policy in it.
    pub state: Option<PathBuf>,
    pub rollouts: usize,
    pub policy: PolicyKind,
    pub path_log: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Sdlp,
            instance: PathBuf::new(),
            seed: 0,
            iterations: 2000,
            sigma: 1.0,
            q: 0.2,
            max_pieces: None,
            n_paths: 3,
            probe_checks: false,
            out_dir: PathBuf::from("."),
            replications: 1,
            shift: true,
            compare_oracle: false,
            state: None,
            rollouts: 1000,
            policy: PolicyKind::Bfp,
            path_log: false,
        }
    }
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(MslpError::Config("iterations must be at least 1".into()));
        }
        if self.replications == 0 {
            return Err(MslpError::Config("replications must be at least 1".into()));
        }
        if self.replications > 1 && self.state.is_some() && self.algorithm == Algorithm::Sdlp {
            return Err(MslpError::Config("a resumed run cannot be replicated".into()));
        }
        self.sdlp_config().check()
    }

    pub fn sdlp_config(&self) -> SdlpConfig {
        SdlpConfig {
            sigma: self.sigma,
            q: self.q,
            max_pieces: self.max_pieces,
            ..SdlpConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    Validation = 2,
    Solver = 3,
    NotConverged = 4,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub status: ExitStatus,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

/// Exit status for an error raised by a run.
pub fn error_status(e: &MslpError) -> ExitStatus {
    match e {
        MslpError::Parse { .. } | MslpError::Config(_) | MslpError::Invalid(_) | MslpError::Dimension(_) => {
            ExitStatus::Validation
        }
        _ => ExitStatus::Solver,
    }
}

/// Parses, validates and optionally shifts the instance. `Err` carries the
/// validation summary.
pub fn load_instance(config: &RunConfig) -> Result<std::result::Result<(MslpInstance, Vec<f64>), String>> {
    let inst = parse_instance(&config.instance)?;
    let report = validate(&inst);
    if !report.is_clean() {
        let mut s = format!("instance `{}` failed validation:\n", inst.name);
        for v in &report.violations {
            let _ = writeln!(s, "  {}", v);
        }
        return Ok(Err(s));
    }
    if config.shift {
        let (shifted, shifts) = shift_nonneg(&inst)?;
        Ok(Ok((shifted, shifts)))
    } else {
        let n = inst.stages.len();
        Ok(Ok((inst, vec![0.0; n])))
    }
}

pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.check()?;
    let (inst, shifts) = match load_instance(config)? {
        Ok(v) => v,
        Err(summary) => {
            return Ok(RunOutcome {
                status: ExitStatus::Validation,
                summary,
                artifacts: Vec::new(),
            })
        }
    };
    let total_shift: f64 = shifts.iter().sum();
    let mut out = RunOutcome {
        status: ExitStatus::Ok,
        summary: String::new(),
        artifacts: Vec::new(),
    };
    let _ = writeln!(
        out.summary,
        "instance {}: {} stages, {} scenario paths",
        inst.name,
        inst.stages.len(),
        inst.path_count(1)
    );
    if total_shift != 0.0 {
        let _ = writeln!(out.summary, "stage costs shifted by {:?} (total {})", shifts, total_shift);
    }
    match config.algorithm {
        Algorithm::Validate => {
            let _ = writeln!(out.summary, "validation clean");
        }
        Algorithm::Extensive => run_extensive(&inst, total_shift, config, &mut out)?,
        Algorithm::Sddp => run_sddp(&inst, config, &mut out)?,
        Algorithm::Sdlp => {
            for r in 0..config.replications {
                run_sdlp(&inst, config, r, &mut out)?;
            }
        }
        Algorithm::Evaluate => run_evaluate(&inst, config, &mut out)?,
    }
    Ok(out)
}

fn create(out: &mut RunOutcome, dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let f = File::create(&path)?;
    out.artifacts.push(path);
    Ok(BufWriter::new(f))
}

fn suffix(config: &RunConfig, r: usize) -> String {
    if config.replications > 1 {
        format!("_r{}", r)
    } else {
        String::new()
    }
}

fn run_extensive(inst: &MslpInstance, total_shift: f64, config: &RunConfig, out: &mut RunOutcome) -> Result<()> {
    use std::io::Write;
    let sol = solve_instance(inst)?;
    let mut f = create(out, &config.out_dir, "extensive.csv")?;
    writeln!(f, "# mslp-extensive v1")?;
    writeln!(f, "instance,value,unshifted_value,paths,nodes")?;
    writeln!(f, "{},{},{},{},{}", inst.name, sol.value, sol.value - total_shift, sol.paths, sol.nodes)?;
    let _ = writeln!(out.summary, "V* = {}", sol.value);
    if total_shift != 0.0 {
        let _ = writeln!(out.summary, "V* without the shift = {}", sol.value - total_shift);
    }
    let _ = writeln!(out.summary, "optimal root decision {:?}", sol.root_decision);
    Ok(())
}

fn run_sddp(inst: &MslpInstance, config: &RunConfig, out: &mut RunOutcome) -> Result<()> {
    let sc = SddpConfig {
        max_iterations: config.iterations,
        n_paths: config.n_paths,
        seed: config.seed,
        ..SddpConfig::default()
    };
    let mut trace = SddpTrace::new(create(out, &config.out_dir, "sddp_trace.csv")?)?;
    let mut timing = TimingLog::new(create(out, &config.out_dir, "sddp_timing.csv")?)?;
    let mut io_err = None;
    let result = sddp_run_with(inst, &sc, |k, lb| {
        if let Err(e) = trace.row(k, lb).and_then(|_| timing.row(k)) {
            io_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_err {
        return Err(e.into());
    }
    let lb = *result.lower_bounds.last().expect("at least one iteration");
    let _ = writeln!(
        out.summary,
        "sddp: {} iterations, lower bound {}, root decision {:?}{}",
        result.iterations,
        lb,
        result.root_decision,
        if result.converged { "" } else { " (not converged)" }
    );
    if config.compare_oracle {
        let v = solve_instance(inst)?.value;
        let _ = writeln!(out.summary, "V* = {}, relative gap {}", v, (v - lb) / v.abs().max(1e-12));
    }
    if !result.converged {
        out.status = ExitStatus::NotConverged;
    }
    let path = config.out_dir.join("sddp_state.json");
    StateDump::sddp(&inst.name, result).save(&path)?;
    out.artifacts.push(path);
    Ok(())
}

fn run_sdlp(inst: &MslpInstance, config: &RunConfig, r: usize, out: &mut RunOutcome) -> Result<()> {
    let sfx = suffix(config, r);
    let (mut run, sampler) = match &config.state {
        Some(path) => match StateDump::load(path)? {
            StateDump::Sdlp { sampler, run, .. } => {
                let s = SupportSampler::restore(inst, &sampler);
                (*run, s)
            }
            StateDump::Sddp { .. } => return Err(MslpError::Config("the state file holds an SDDP run".into())),
        },
        None => (
            SdlpRunState::new(inst, config.sdlp_config())?,
            SupportSampler::new(inst, config.seed.wrapping_add(r as u64)),
        ),
    };
    let mut trace = SdlpTrace::new(create(out, &config.out_dir, &format!("sdlp_trace{}.csv", sfx))?, inst.horizon())?;
    let mut timing = TimingLog::new(create(out, &config.out_dir, &format!("sdlp_timing{}.csv", sfx))?)?;
    let log: Box<dyn std::io::Write> = if config.path_log {
        Box::new(create(out, &config.out_dir, &format!("paths{}.jsonl", sfx))?)
    } else {
        Box::new(std::io::sink())
    };
    let mut source = PathLog::new(sampler, log);
    let mut probe_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7072_6f62);
    let mut probes = ProbeReport::default();
    let first = run.iteration + 1;
    for k in first..first + config.iterations {
        let before = (config.probe_checks && PROBE_ITERATIONS.contains(&k)).then(|| run.clone());
        sdlp_iterate(inst, &mut run, &mut source)?;
        trace.row(&run.last)?;
        timing.row(k)?;
        if let Some(prev) = before {
            let p = reachable_probes(inst, &run, PROBES_PER_STAGE, &mut probe_rng)?;
            let rep = check_minorants(inst, &prev, &run, &p)?;
            probes.probes += rep.probes;
            probes.lower_bound += rep.lower_bound;
            probes.monotonicity += rep.monotonicity;
            probes.terminal_exact += rep.terminal_exact;
            probes.max_excess = probes.max_excess.max(rep.max_excess);
        }
    }
    let (sampler, _) = source.into_inner();
    let st = &run.stats;
    let _ = writeln!(
        out.summary,
        "sdlp{}: {} iterations, root incumbent {:?}, f0 estimate {}, incumbent changes {}, descent violations {}, max KKT residual {:e}, BFP fallbacks {}",
        sfx,
        run.iteration,
        run.root_incumbent,
        run.last.incumbent_value,
        st.incumbent_changes,
        st.descent_violations,
        st.max_kkt_residual,
        st.bfp_fallbacks
    );
    if config.probe_checks {
        let _ = writeln!(
            out.summary,
            "probe checks: {} probes, {} violations (lower bound {}, monotonicity {}, terminal {})",
            probes.probes,
            probes.violations(),
            probes.lower_bound,
            probes.monotonicity,
            probes.terminal_exact
        );
    }
    if config.compare_oracle {
        let v = solve_instance(inst)?.value;
        let tv = root_decision_value(inst, &run.root_incumbent)?;
        let _ = writeln!(
            out.summary,
            "V* = {}, true value of the root incumbent {}, relative gap {}",
            v,
            tv,
            (tv - v) / v.abs().max(1e-12)
        );
    }
    let path = config.out_dir.join(format!("sdlp_state{}.json", sfx));
    StateDump::sdlp(&inst.name, sampler.state(), run).save(&path)?;
    out.artifacts.push(path);
    Ok(())
}

fn run_evaluate(inst: &MslpInstance, config: &RunConfig, out: &mut RunOutcome) -> Result<()> {
    use std::io::Write;
    let path = config
        .state
        .as_ref()
        .ok_or_else(|| MslpError::Config("evaluate needs a state file".into()))?;
    let dump = StateDump::load(path)?;
    if dump.instance() != inst.name {
        log::warn!("state file was produced for `{}`, evaluating on `{}`", dump.instance(), inst.name);
    }
    let mut source = SupportSampler::new(inst, config.seed);
    let (label, report) = match &dump {
        StateDump::Sdlp { run, .. } => (
            "sdlp",
            evaluate_policy(inst, TrainedModel::Sdlp(run), config.policy, config.rollouts, &mut source)?,
        ),
        StateDump::Sddp { result, .. } => (
            "sddp",
            evaluate_policy(inst, TrainedModel::Sddp(&result.pools), config.policy, config.rollouts, &mut source)?,
        ),
    };
    let mut f = create(out, &config.out_dir, "evaluate.csv")?;
    writeln!(f, "# mslp-evaluate v1")?;
    writeln!(f, "model,policy,rollouts,mean,std_err,infeasible")?;
    let infeasible: usize = report.infeasible.iter().sum();
    writeln!(
        f,
        "{},{:?},{},{},{},{}",
        label, config.policy, report.rollouts, report.mean, report.std_err, infeasible
    )?;
    let _ = writeln!(
        out.summary,
        "{} {:?} policy: mean cost {} ± {} over {} rollouts, {} infeasible",
        label, config.policy, report.mean, report.std_err, report.rollouts, infeasible
    );
    if config.compare_oracle {
        let v = solve_instance(inst)?.value;
        let _ = writeln!(out.summary, "V* = {}, relative gap {}", v, (report.mean - v) / v.abs().max(1e-12));
    }
    Ok(())
}
