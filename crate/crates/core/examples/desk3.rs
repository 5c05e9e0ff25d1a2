//! Solves the bundled reservoir instance three ways and compares them.
//!
//! cargo run --release -p mslp-core --example desk3 -- [iterations] [seed]

use mslp_core::fixtures::desk3;
use mslp_core::oracle::{evaluate_policy, root_decision_value, solve_instance, PolicyKind, TrainedModel};
use mslp_core::process::SupportSampler;
use mslp_core::sddp::{sddp_run, SddpConfig};
use mslp_core::sdlp::{sdlp_run, SdlpConfig, SdlpRunState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map_or(Ok(2000), |s| s.parse())?;
    let seed: u64 = args.next().map_or(Ok(0), |s| s.parse())?;
    let inst = desk3();

    let exact = solve_instance(&inst)?;
    println!("extensive form: V* = {:.6}, u0 = {:?}", exact.value, exact.root_decision);

    let sddp = sddp_run(&inst, &SddpConfig::default())?;
    println!(
        "sddp: {} iterations, lower bound {:.6}",
        sddp.iterations,
        sddp.lower_bounds.last().copied().unwrap_or(f64::NAN)
    );

    let mut run = SdlpRunState::new(&inst, SdlpConfig::default())?;
    let mut src = SupportSampler::new(&inst, seed);
    sdlp_run(&inst, &mut run, &mut src, iterations, |r| {
        if r.iteration % 500 == 0 {
            println!("  k = {:>5}  f0(incumbent) = {:.6}", r.iteration, r.last.incumbent_value);
        }
    })?;
    let true_value = root_decision_value(&inst, &run.root_incumbent)?;
    println!(
        "sdlp: incumbent {:?}, true value {:.6} ({:+.3}% from V*)",
        run.root_incumbent,
        true_value,
        100.0 * (true_value - exact.value) / exact.value
    );

    let mut eval = SupportSampler::new(&inst, seed + 1);
    let rep = evaluate_policy(&inst, TrainedModel::Sdlp(&run), PolicyKind::Bfp, 1000, &mut eval)?;
    println!("basic feasible policy: mean cost {:.6} ± {:.6}", rep.mean, rep.std_err);
    Ok(())
}
