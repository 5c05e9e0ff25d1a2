//! Sample paths and the sequentially grown observation pools.

use crate::error::{MslpError, Result};
use crate::instance::{MslpInstance, Observation, Support};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Observations for stages `1..=T` drawn in one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub iteration: usize,
    /// `observations[t - 1]` is the observation of stage `t`.
    pub observations: Vec<Observation>,
}

impl SamplePath {
    pub fn at(&self, t: usize) -> &Observation {
        &self.observations[t - 1]
    }
}

/// A seeded generator of independent sample paths.
pub trait ScenarioSource {
    fn sample(&mut self) -> SamplePath;
}

/// Position of a [`SupportSampler`], enough to resume it exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerState {
    pub seed: u64,
    pub iteration: usize,
    /// ChaCha word position of each stage substream.
    #[serde(with = "word_positions")]
    pub word_pos: Vec<u128>,
}

// JSON numbers cannot carry u128 losslessly; positions are written as
// decimal strings.
mod word_positions {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u128], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|p| p.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u128>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}

/// Draws from the finite ground-truth supports, stagewise independently.
/// Stage `t` owns ChaCha substream `t`, so adding stages leaves the draws of
/// earlier stages unchanged.
#[derive(Debug, Clone)]
pub struct SupportSampler {
    supports: Vec<Support>,
    streams: Vec<ChaCha8Rng>,
    seed: u64,
    iteration: usize,
}

impl SupportSampler {
    pub fn new(instance: &MslpInstance, seed: u64) -> Self {
        Self::from_supports(instance.support.clone(), seed)
    }

    pub fn from_supports(supports: Vec<Support>, seed: u64) -> Self {
        let streams = (0..supports.len())
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64);
                rng
            })
            .collect();
        Self {
            supports,
            streams,
            seed,
            iteration: 0,
        }
    }

    pub fn state(&self) -> SamplerState {
        SamplerState {
            seed: self.seed,
            iteration: self.iteration,
            word_pos: self.streams.iter().map(|r| r.get_word_pos()).collect(),
        }
    }

    pub fn restore(instance: &MslpInstance, state: &SamplerState) -> Self {
        let mut s = Self::new(instance, state.seed);
        s.iteration = state.iteration;
        for (rng, &pos) in s.streams.iter_mut().zip(&state.word_pos) {
            rng.set_word_pos(pos);
        }
        s
    }

    /// Index of the drawn observation for each stage `1..=T`.
    pub fn sample_indices(&mut self) -> Vec<usize> {
        self.iteration += 1;
        (1..self.supports.len())
            .map(|t| {
                let r: f64 = self.streams[t].gen();
                pick(&self.supports[t].probabilities, r)
            })
            .collect()
    }
}

fn pick(probs: &[f64], r: f64) -> usize {
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if r < acc {
            return i;
        }
    }
    probs.len() - 1
}

impl ScenarioSource for SupportSampler {
    fn sample(&mut self) -> SamplePath {
        let idx = self.sample_indices();
        SamplePath {
            iteration: self.iteration,
            observations: idx
                .iter()
                .enumerate()
                .map(|(k, &i)| self.supports[k + 1].observations[i].clone())
                .collect(),
        }
    }
}

/// Replays a recorded sequence of paths, then repeats the last one.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    paths: Vec<SamplePath>,
    next: usize,
}

impl ReplaySource {
    pub fn new(paths: Vec<SamplePath>) -> Self {
        Self { paths, next: 0 }
    }

    /// Reads a path log written by [`PathLog`] (one JSON path per line).
    pub fn from_reader(reader: impl BufRead) -> Result<Self> {
        let mut paths = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if !line.trim().is_empty() {
                paths.push(serde_json::from_str(&line)?);
            }
        }
        Ok(Self::new(paths))
    }

    pub fn remaining(&self) -> usize {
        self.paths.len().saturating_sub(self.next)
    }
}

impl ScenarioSource for ReplaySource {
    fn sample(&mut self) -> SamplePath {
        let i = self.next.min(self.paths.len() - 1);
        self.next += 1;
        self.paths[i].clone()
    }
}

/// Wraps a source and writes every sampled path to a log.
pub struct PathLog<S, W> {
    inner: S,
    out: W,
}

impl<S: ScenarioSource, W: Write> PathLog<S, W> {
    pub fn new(inner: S, out: W) -> Self {
        Self { inner, out }
    }

    pub fn into_inner(self) -> (S, W) {
        (self.inner, self.out)
    }
}

impl<S: ScenarioSource, W: Write> ScenarioSource for PathLog<S, W> {
    fn sample(&mut self) -> SamplePath {
        let p = self.inner.sample();
        let line = serde_json::to_string(&p).expect("paths serialize");
        // A failing log must not change the run; report and continue.
        if let Err(e) = writeln!(self.out, "{}", line) {
            log::warn!("path log write failed: {}", e);
        }
        p
    }
}

/// Distinct observations of one stage with their counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationPool {
    pub stage: usize,
    observations: Vec<Observation>,
    keys: Vec<u64>,
    counts: Vec<u64>,
    total: u64,
}

impl ObservationPool {
    pub fn new(stage: usize) -> Self {
        Self {
            stage,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Number of recorded draws `k`.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn observation(&self, i: usize) -> &Observation {
        &self.observations[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn find(&self, obs: &Observation) -> Option<usize> {
        let key = obs.key();
        (0..self.keys.len()).find(|&i| self.keys[i] == key && self.observations[i] == *obs)
    }

    /// Adds one draw; returns the observation's index in the pool.
    pub fn record(&mut self, obs: &Observation) -> Result<usize> {
        if obs.stage != self.stage {
            return Err(MslpError::StageMismatch {
                pool: self.stage,
                obs: obs.stage,
            });
        }
        self.total += 1;
        match self.find(obs) {
            Some(i) => {
                self.counts[i] += 1;
                Ok(i)
            }
            None => {
                self.observations.push(obs.clone());
                self.keys.push(obs.key());
                self.counts.push(1);
                Ok(self.observations.len() - 1)
            }
        }
    }

    pub fn frequency(&self, obs: &Observation) -> Result<f64> {
        self.find(obs)
            .map(|i| self.frequency_at(i))
            .ok_or(MslpError::UnknownObservation(self.stage))
    }

    /// `κ(ω)/k`
    pub fn frequency_at(&self, i: usize) -> f64 {
        self.counts[i] as f64 / self.total as f64
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.frequency_at(i)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn obs(stage: usize, v: f64) -> Observation {
        Observation {
            stage,
            drift: vec![v],
            transition: Matrix::zeros(1, 1),
            input: Matrix::zeros(1, 1),
            rhs: vec![],
            technology: Matrix::zeros(0, 1),
        }
    }

    #[test]
    fn first_record() {
        let mut p = ObservationPool::new(1);
        p.record(&obs(1, 1.0)).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.total(), 1);
        assert_eq!(p.frequency(&obs(1, 1.0)).unwrap(), 1.0);
    }

    #[test]
    fn counting() {
        let mut p = ObservationPool::new(1);
        for v in [1.0, 1.0, 2.0, 1.0] {
            p.record(&obs(1, v)).unwrap();
        }
        assert_eq!(p.frequency(&obs(1, 1.0)).unwrap(), 0.75);
        assert_eq!(p.frequency(&obs(1, 2.0)).unwrap(), 0.25);
    }

    #[test]
    fn stage_mismatch_and_unknown() {
        let mut p = ObservationPool::new(1);
        assert!(p.record(&obs(2, 1.0)).is_err());
        assert!(p.frequency(&obs(1, 3.0)).is_err());
    }
}
