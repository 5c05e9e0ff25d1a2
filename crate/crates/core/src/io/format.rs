//! The `mslp-instance v1` text format.
//!
//! ```text
//! mslp-instance v1
//! name toy
//! initial_state 1 2
//! stage 0
//!   dims state 2 decision 1 rows 1
//!   offset 0
//!   state_cost 0 0
//!   decision_cost 1
//!   recourse 1 1
//!     1
//!   rhs 4
//!   technology 1 2
//!     0 0
//! end
//! stage 1
//!   ...                          # plus drift, transition, input
//! end
//! support 1
//!   observation 0.5
//!     drift 1 0                  # any of drift/transition/input/rhs/technology
//!   end
//! end
//! ```
//!
//! Blank lines and `#` comments are ignored. Matrices are introduced by
//! `name rows cols` followed by one line per row. Observations override
//! template fields; omitted fields take the template value. Numbers are
//! written in shortest round-trip decimal, so writing and re-reading is
//! bit-exact.

use crate::error::{MslpError, Result};
use crate::instance::{MslpInstance, Observation, StageTemplate, Support};
use crate::linalg::{bits_eq, Matrix};
use std::fmt::Write as _;
use std::path::Path;

pub const HEADER: &str = "mslp-instance v1";

struct Lines<'a> {
    file: String,
    items: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(file: &str, text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter_map(|(i, l)| {
                let l = l.split('#').next().unwrap_or("");
                let toks: Vec<&str> = l.split_whitespace().collect();
                (!toks.is_empty()).then_some((i + 1, toks))
            })
            .collect();
        Self {
            file: file.to_string(),
            items,
            pos: 0,
        }
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> MslpError {
        MslpError::Parse {
            file: self.file.clone(),
            line,
            msg: msg.into(),
        }
    }

    fn line_no(&self) -> usize {
        self.items
            .get(self.pos)
            .or(self.items.last())
            .map_or(0, |(l, _)| *l)
    }

    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        let item = self
            .items
            .get(self.pos)
            .cloned()
            .ok_or_else(|| self.err(self.line_no(), "unexpected end of file"))?;
        self.pos += 1;
        Ok(item)
    }

    fn peek(&self) -> Option<&[&'a str]> {
        self.items.get(self.pos).map(|(_, t)| t.as_slice())
    }

    fn number(&self, line: usize, tok: &str) -> Result<f64> {
        tok.parse::<f64>()
            .map_err(|_| self.err(line, format!("expected a number, found `{}`", tok)))
    }

    fn count(&self, line: usize, tok: &str) -> Result<usize> {
        tok.parse::<usize>()
            .map_err(|_| self.err(line, format!("expected a count, found `{}`", tok)))
    }

    fn numbers(&self, line: usize, toks: &[&str]) -> Result<Vec<f64>> {
        toks.iter().map(|t| self.number(line, t)).collect()
    }

    /// Reads the rows of a matrix introduced by `name r c`.
    fn matrix(&mut self, line: usize, toks: &[&str]) -> Result<Matrix> {
        if toks.len() != 3 {
            return Err(self.err(line, format!("`{}` needs a row and a column count", toks[0])));
        }
        let (r, c) = (self.count(line, toks[1])?, self.count(line, toks[2])?);
        let mut data = Vec::with_capacity(r * c);
        for _ in 0..r {
            let (l, row) = self.next()?;
            if row.len() != c {
                return Err(self.err(l, format!("matrix `{}` row has {} entries, expected {}", toks[0], row.len(), c)));
            }
            data.extend(self.numbers(l, &row)?);
        }
        Ok(Matrix::from_row_major(r, c, data))
    }
}

#[derive(Default)]
struct Fields {
    offset: Option<f64>,
    state_cost: Option<Vec<f64>>,
    decision_cost: Option<Vec<f64>>,
    recourse: Option<Matrix>,
    rhs: Option<Vec<f64>>,
    technology: Option<Matrix>,
    drift: Option<Vec<f64>>,
    transition: Option<Matrix>,
    input: Option<Matrix>,
}

/// Parses a block of fields up to `end`.
fn fields(lines: &mut Lines<'_>, allowed: &[&str]) -> Result<(Fields, usize)> {
    let mut f = Fields::default();
    loop {
        let (l, toks) = lines.next()?;
        let key = toks[0];
        if key == "end" {
            return Ok((f, l));
        }
        if key == "dims" {
            continue;
        }
        if !allowed.contains(&key) {
            return Err(lines.err(l, format!("unexpected `{}`", key)));
        }
        match key {
            "offset" => {
                if toks.len() != 2 {
                    return Err(lines.err(l, "`offset` takes one number"));
                }
                f.offset = Some(lines.number(l, toks[1])?);
            }
            "state_cost" => f.state_cost = Some(lines.numbers(l, &toks[1..])?),
            "decision_cost" => f.decision_cost = Some(lines.numbers(l, &toks[1..])?),
            "rhs" => f.rhs = Some(lines.numbers(l, &toks[1..])?),
            "drift" => f.drift = Some(lines.numbers(l, &toks[1..])?),
            "recourse" => f.recourse = Some(lines.matrix(l, &toks)?),
            "technology" => f.technology = Some(lines.matrix(l, &toks)?),
            "transition" => f.transition = Some(lines.matrix(l, &toks)?),
            "input" => f.input = Some(lines.matrix(l, &toks)?),
            _ => unreachable!(),
        }
    }
}

const STAGE_FIELDS: &[&str] = &[
    "offset",
    "state_cost",
    "decision_cost",
    "recourse",
    "rhs",
    "technology",
    "drift",
    "transition",
    "input",
];
const OBS_FIELDS: &[&str] = &["drift", "transition", "input", "rhs", "technology"];

fn expect_dims(lines: &Lines<'_>, l: usize, toks: &[&str]) -> Result<(usize, usize, usize)> {
    if toks.len() != 7 || toks[1] != "state" || toks[3] != "decision" || toks[5] != "rows" {
        return Err(lines.err(l, "expected `dims state <n> decision <n> rows <n>`"));
    }
    Ok((lines.count(l, toks[2])?, lines.count(l, toks[4])?, lines.count(l, toks[6])?))
}

pub fn parse_str(file: &str, text: &str) -> Result<MslpInstance> {
    let mut lines = Lines::new(file, text);
    let (l, toks) = lines.next()?;
    if toks.join(" ") != HEADER {
        return Err(lines.err(l, format!("expected header `{}`", HEADER)));
    }
    let mut name = String::new();
    let mut initial_state = None;
    let mut stages: Vec<StageTemplate> = Vec::new();
    let mut supports: Vec<Option<Support>> = Vec::new();
    while lines.peek().is_some() {
        let (l, toks) = lines.next()?;
        match toks[0] {
            "name" => name = toks[1..].join(" "),
            "initial_state" => initial_state = Some(lines.numbers(l, &toks[1..])?),
            "stage" => {
                let t = lines.count(l, toks.get(1).copied().unwrap_or(""))?;
                if t != stages.len() {
                    return Err(lines.err(l, format!("stage {} out of order, expected {}", t, stages.len())));
                }
                let dims = match lines.peek() {
                    Some(d) if d[0] == "dims" => {
                        let (dl, dt) = lines.items[lines.pos].clone();
                        Some(expect_dims(&lines, dl, &dt)?)
                    }
                    _ => None,
                };
                let (f, end) = fields(&mut lines, STAGE_FIELDS)?;
                let tmpl = stage_template(&lines, t, f, end, stages.last())?;
                if let Some((sd, n, m)) = dims {
                    if (tmpl.state_dim(), tmpl.decision_dim(), tmpl.rows()) != (sd, n, m) {
                        return Err(lines.err(l, format!("stage {} fields do not match its dims line", t)));
                    }
                }
                stages.push(tmpl);
                supports.push(None);
            }
            "support" => {
                let t = lines.count(l, toks.get(1).copied().unwrap_or(""))?;
                if t == 0 || t >= stages.len() {
                    return Err(lines.err(l, format!("support for stage {} must follow that stage and t ≥ 1", t)));
                }
                if supports[t].is_some() {
                    return Err(lines.err(l, format!("duplicate support for stage {}", t)));
                }
                supports[t] = Some(support_block(&mut lines, l, t, &stages[t])?);
            }
            other => return Err(lines.err(l, format!("unexpected `{}`", other))),
        }
    }
    if stages.is_empty() {
        return Err(lines.err(lines.line_no(), "no stages"));
    }
    let initial_state = initial_state.ok_or_else(|| lines.err(1, "missing `initial_state`"))?;
    let mut support = vec![MslpInstance::root_support(&stages[0])];
    for (t, s) in supports.into_iter().enumerate().skip(1) {
        support.push(s.unwrap_or_else(|| Support {
            observations: vec![default_obs(t, &stages[t])],
            probabilities: vec![1.0],
        }));
    }
    Ok(MslpInstance {
        name,
        initial_state,
        stages,
        support,
    })
}

fn stage_template(
    lines: &Lines<'_>,
    t: usize,
    f: Fields,
    end: usize,
    prev: Option<&StageTemplate>,
) -> Result<StageTemplate> {
    let missing = |what: &str| lines.err(end, format!("stage {} is missing `{}`", t, what));
    let state_cost = f.state_cost.ok_or_else(|| missing("state_cost"))?;
    let decision_cost = f.decision_cost.ok_or_else(|| missing("decision_cost"))?;
    let rhs = f.rhs.unwrap_or_default();
    let (sd, n, m) = (state_cost.len(), decision_cost.len(), rhs.len());
    let recourse = f.recourse.unwrap_or_else(|| Matrix::zeros(m, n));
    let technology = f.technology.unwrap_or_else(|| Matrix::zeros(m, sd));
    let (drift, transition, input) = match prev {
        None => (
            f.drift.unwrap_or_else(|| vec![0.0; sd]),
            f.transition.unwrap_or_else(|| Matrix::zeros(sd, 0)),
            f.input.unwrap_or_else(|| Matrix::zeros(sd, 0)),
        ),
        Some(p) => (
            f.drift.unwrap_or_else(|| vec![0.0; sd]),
            f.transition.ok_or_else(|| missing("transition"))?,
            f.input.unwrap_or_else(|| Matrix::zeros(sd, p.decision_dim())),
        ),
    };
    let tmpl = StageTemplate {
        offset: f.offset.unwrap_or(0.0),
        state_cost,
        decision_cost,
        recourse,
        rhs,
        technology,
        drift,
        transition,
        input,
    };
    check_shapes(lines, end, t, &tmpl.drift, &tmpl.transition, &tmpl.input, &tmpl.rhs, &tmpl.technology, &tmpl, prev)?;
    if tmpl.recourse.shape() != (m, n) {
        return Err(lines.err(end, format!("stage {} recourse is {:?}, expected ({}, {})", t, tmpl.recourse.shape(), m, n)));
    }
    Ok(tmpl)
}

#[allow(clippy::too_many_arguments)]
fn check_shapes(
    lines: &Lines<'_>,
    line: usize,
    t: usize,
    drift: &[f64],
    transition: &Matrix,
    input: &Matrix,
    rhs: &[f64],
    technology: &Matrix,
    s: &StageTemplate,
    prev: Option<&StageTemplate>,
) -> Result<()> {
    let (sd, m) = (s.state_dim(), s.rows());
    let bad = |what: &str| Err(lines.err(line, format!("stage {}: {} has the wrong dimension", t, what)));
    if drift.len() != sd {
        return bad("drift");
    }
    if rhs.len() != m {
        return bad("rhs");
    }
    if technology.shape() != (m, sd) {
        return bad("technology");
    }
    if let Some(p) = prev {
        if transition.shape() != (sd, p.state_dim()) {
            return bad("transition");
        }
        if input.shape() != (sd, p.decision_dim()) {
            return bad("input");
        }
    }
    Ok(())
}

fn default_obs(t: usize, s: &StageTemplate) -> Observation {
    Observation {
        stage: t,
        drift: s.drift.clone(),
        transition: s.transition.clone(),
        input: s.input.clone(),
        rhs: s.rhs.clone(),
        technology: s.technology.clone(),
    }
}

fn support_block(lines: &mut Lines<'_>, start: usize, t: usize, s: &StageTemplate) -> Result<Support> {
    let mut observations = Vec::new();
    let mut probabilities = Vec::new();
    loop {
        let (l, toks) = lines.next()?;
        match toks[0] {
            "end" => break,
            "observation" => {
                if toks.len() != 2 {
                    return Err(lines.err(l, "`observation` takes its probability"));
                }
                let p = lines.number(l, toks[1])?;
                if !p.is_finite() || p < 0.0 {
                    return Err(lines.err(l, format!("stage {}: probability {} is not in [0, 1]", t, p)));
                }
                let (f, end) = fields(lines, OBS_FIELDS)?;
                let mut o = default_obs(t, s);
                if let Some(v) = f.drift {
                    o.drift = v;
                }
                if let Some(v) = f.transition {
                    o.transition = v;
                }
                if let Some(v) = f.input {
                    o.input = v;
                }
                if let Some(v) = f.rhs {
                    o.rhs = v;
                }
                if let Some(v) = f.technology {
                    o.technology = v;
                }
                let trans_ok = o.transition.shape() == s.transition.shape() && o.input.shape() == s.input.shape();
                if !trans_ok {
                    return Err(lines.err(end, format!("stage {}: observation dynamics have the wrong dimension", t)));
                }
                check_shapes(lines, end, t, &o.drift, &o.transition, &o.input, &o.rhs, &o.technology, s, None)?;
                observations.push(o);
                probabilities.push(p);
            }
            other => return Err(lines.err(l, format!("unexpected `{}` in support", other))),
        }
    }
    if observations.is_empty() {
        return Err(lines.err(start, format!("support of stage {} is empty", t)));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(lines.err(start, format!("support of stage {}: probabilities sum to {}, not 1", t, total)));
    }
    Ok(Support {
        observations,
        probabilities,
    })
}

pub fn parse_instance(path: impl AsRef<Path>) -> Result<MslpInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_str(&path.display().to_string(), &text)
}

fn vec_line(out: &mut String, indent: &str, key: &str, v: &[f64]) {
    let _ = write!(out, "{}{}", indent, key);
    for x in v {
        let _ = write!(out, " {}", x);
    }
    out.push('\n');
}

fn matrix_lines(out: &mut String, indent: &str, key: &str, m: &Matrix) {
    let _ = writeln!(out, "{}{} {} {}", indent, key, m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}  {}", indent, row.join(" "));
    }
}

/// Canonical text form of an instance.
pub fn write_str(inst: &MslpInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", HEADER);
    let _ = writeln!(out, "name {}", inst.name);
    vec_line(&mut out, "", "initial_state", &inst.initial_state);
    for (t, s) in inst.stages.iter().enumerate() {
        let _ = writeln!(out, "stage {}", t);
        let _ = writeln!(out, "  dims state {} decision {} rows {}", s.state_dim(), s.decision_dim(), s.rows());
        let _ = writeln!(out, "  offset {}", s.offset);
        vec_line(&mut out, "  ", "state_cost", &s.state_cost);
        vec_line(&mut out, "  ", "decision_cost", &s.decision_cost);
        matrix_lines(&mut out, "  ", "recourse", &s.recourse);
        vec_line(&mut out, "  ", "rhs", &s.rhs);
        matrix_lines(&mut out, "  ", "technology", &s.technology);
        if t > 0 {
            vec_line(&mut out, "  ", "drift", &s.drift);
            matrix_lines(&mut out, "  ", "transition", &s.transition);
            matrix_lines(&mut out, "  ", "input", &s.input);
        }
        out.push_str("end\n");
    }
    for t in 1..inst.stages.len() {
        let s = &inst.stages[t];
        let sup = &inst.support[t];
        let _ = writeln!(out, "support {}", t);
        for (o, p) in sup.observations.iter().zip(&sup.probabilities) {
            let _ = writeln!(out, "  observation {}", p);
            if !bits_eq(&o.drift, &s.drift) {
                vec_line(&mut out, "    ", "drift", &o.drift);
            }
            if !o.transition.bit_eq(&s.transition) {
                matrix_lines(&mut out, "    ", "transition", &o.transition);
            }
            if !o.input.bit_eq(&s.input) {
                matrix_lines(&mut out, "    ", "input", &o.input);
            }
            if !bits_eq(&o.rhs, &s.rhs) {
                vec_line(&mut out, "    ", "rhs", &o.rhs);
            }
            if !o.technology.bit_eq(&s.technology) {
                matrix_lines(&mut out, "    ", "technology", &o.technology);
            }
            out.push_str("  end\n");
        }
        out.push_str("end\n");
    }
    out
}

pub fn write_instance(inst: &MslpInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_str(inst))?;
    Ok(())
}
