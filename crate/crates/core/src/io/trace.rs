//! Versioned CSV traces. Every file starts with a `# mslp-… v1` line, then
//! a column header. Numbers use shortest round-trip decimal. Wall-clock
//! times go to a separate timing file so traces stay byte-identical across
//! runs.

use crate::sdlp::IterationRecord;
use std::io::Write;

pub const SDLP_TRACE_HEADER: &str = "# mslp-trace sdlp v1";
pub const SDDP_TRACE_HEADER: &str = "# mslp-trace sddp v1";
pub const TIMING_HEADER: &str = "# mslp-timing v1";

pub struct SdlpTrace<W: Write> {
    out: W,
}

impl<W: Write> SdlpTrace<W> {
    pub fn new(mut out: W, horizon: usize) -> std::io::Result<Self> {
        writeln!(out, "{}", SDLP_TRACE_HEADER)?;
        write!(out, "k,f0_incumbent,f0_candidate,step,incumbent_changed")?;
        for t in 1..=horizon {
            write!(out, ",pool_{}", t)?;
        }
        writeln!(out)?;
        Ok(Self { out })
    }

    pub fn row(&mut self, r: &IterationRecord) -> std::io::Result<()> {
        write!(
            self.out,
            "{},{},{},{},{}",
            r.k, r.incumbent_value, r.candidate_value, r.step, r.incumbent_changed as u8
        )?;
        for n in &r.pool_sizes {
            write!(self.out, ",{}", n)?;
        }
        writeln!(self.out)
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

pub struct SddpTrace<W: Write> {
    out: W,
}

impl<W: Write> SddpTrace<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{}", SDDP_TRACE_HEADER)?;
        writeln!(out, "iteration,lower_bound")?;
        Ok(Self { out })
    }

    pub fn row(&mut self, k: usize, lower_bound: f64) -> std::io::Result<()> {
        writeln!(self.out, "{},{}", k, lower_bound)
    }
}

pub struct TimingLog<W: Write> {
    out: W,
    start: std::time::Instant,
}

impl<W: Write> TimingLog<W> {
    pub fn new(mut out: W) -> std::io::Result<Self> {
        writeln!(out, "{}", TIMING_HEADER)?;
        writeln!(out, "k,wall_seconds")?;
        Ok(Self {
            out,
            start: std::time::Instant::now(),
        })
    }

    pub fn row(&mut self, k: usize) -> std::io::Result<()> {
        writeln!(self.out, "{},{}", k, self.start.elapsed().as_secs_f64())
    }
}
