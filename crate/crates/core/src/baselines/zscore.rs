use std::collections::BTreeMap;

use crate::data::{ChannelStats, DataError, SensorimotorSequence};
use crate::scalar::Real;

/// `(x_i − mean_i) / std_i` per channel.
pub fn zscore_errors<T: Real>(x: &[T], stats: &ChannelStats<T>) -> Result<Vec<T>, DataError> {
    if x.len() != stats.dim() {
        return Err(DataError::ChannelCount { expected: stats.dim(), found: x.len() });
    }
    Ok(stats.normalize_row(x))
}

/// How the detector's statistics are pooled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StatsMode {
    /// One set of statistics per skill and time step, across repetitions.
    #[default]
    PerStep,
    /// One set per skill across all steps and repetitions.
    Pooled,
}

/// Signal statistics per skill, standing in for a library-style associative
/// memory. It must be told which skill is running.
#[derive(Debug, Clone, PartialEq)]
pub struct ZscoreDetector<T> {
    pub mode: StatsMode,
    stats: BTreeMap<String, Vec<ChannelStats<T>>>,
}

impl<T: Real> ZscoreDetector<T> {
    /// Fits statistics on raw demonstrations grouped by `skill_id`.
    pub fn fit(demos: &[SensorimotorSequence<T>], mode: StatsMode) -> Result<Self, DataError> {
        let mut grouped: BTreeMap<String, Vec<&SensorimotorSequence<T>>> = BTreeMap::new();
        for seq in demos {
            grouped.entry(seq.skill_id.clone()).or_default().push(seq);
        }
        if grouped.is_empty() {
            return Err(DataError::Empty("no demonstrations"));
        }
        let mut stats = BTreeMap::new();
        for (skill, seqs) in grouped {
            let d = seqs[0].dim();
            let per_skill = match mode {
                StatsMode::PerStep => {
                    let steps = seqs.iter().map(|s| s.len()).min().unwrap_or(0);
                    (0..steps)
                        .map(|t| {
                            let rows: Vec<&[T]> = seqs.iter().map(|s| s.step(t)).collect();
                            ChannelStats::fit_rows(&rows, d)
                        })
                        .collect::<Result<Vec<_>, _>>()?
                }
                StatsMode::Pooled => {
                    let rows: Vec<&[T]> = seqs.iter().flat_map(|s| (0..s.len()).map(|t| s.step(t))).collect();
                    vec![ChannelStats::fit_rows(&rows, d)?]
                }
            };
            stats.insert(skill, per_skill);
        }
        Ok(Self { mode, stats })
    }

    pub fn skills(&self) -> impl Iterator<Item = &str> {
        self.stats.keys().map(String::as_str)
    }

    pub fn stats_for(&self, skill: &str, step: usize) -> Option<&ChannelStats<T>> {
        let per = self.stats.get(skill)?;
        match self.mode {
            StatsMode::PerStep => per.get(step),
            StatsMode::Pooled => per.first(),
        }
    }

    /// Normalized errors of one raw observation.
    pub fn errors(&self, skill: &str, step: usize, x: &[T]) -> Result<Vec<T>, DataError> {
        let stats = self
            .stats_for(skill, step)
            .ok_or_else(|| DataError::Invalid(format!("no statistics for skill `{skill}` at step {step}")))?;
        zscore_errors(x, stats)
    }

    /// Sum of squared normalized errors per step of a raw observed sequence.
    pub fn score_sequence(&self, skill: &str, observed: &SensorimotorSequence<T>) -> Result<Vec<T>, DataError> {
        (0..observed.len())
            .map(|t| Ok(crate::linalg::sq_norm(&self.errors(skill, t, observed.step(t))?)))
            .collect()
    }
}
