use serde::{Deserialize, Serialize};

use crate::error::{HullftError, Result};
use crate::frank_wolfe::StopReason;
use crate::geometry::CandidatePool;
use crate::pipeline::{Integerizer, SelectionRequest, SelectionResult, Selector, SpaceErrors};
use crate::schedule::{ScheduleStats, ScheduleStep, StepAction, TrainingSchedule};

/// Serialized weights must sum to one within this tolerance.
const SERIALIZED_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionEntry {
    pub pool_index: usize,
    pub id: String,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub select: f64,
    pub integerize: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFileMetrics {
    pub fw_error: f64,
    pub integer_error: Option<f64>,
    pub fidelity_l2: Option<f64>,
    pub support_size: usize,
    pub iterations: usize,
    pub stop_reason: StopReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_space: Option<SpaceErrors>,
    pub stage_seconds: StageSeconds,
}

/// The JSON document emitted by `hullft select`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionFile {
    pub query_id: String,
    pub budget: usize,
    pub selector: Selector,
    pub integerizer: Integerizer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca_dim: Option<usize>,
    /// Every point of the fractional support, including zero-count points.
    pub support: Vec<SelectionEntry>,
    pub metrics: SelectionFileMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

impl SelectionFile {
    /// `source_indices[i]` is the index reported for pool row `i`; pass
    /// `None` when the pool is the indexing space.
    pub fn from_result(
        query_id: &str,
        req: &SelectionRequest,
        result: &SelectionResult,
        pool: &CandidatePool,
        source_indices: Option<&[usize]>,
    ) -> Self {
        let support = result
            .fractional
            .entries()
            .iter()
            .map(|&(i, weight)| {
                let count = result
                    .multiset
                    .as_ref()
                    .map(|ms| ms.support.iter().position(|&s| s == i).map(|pos| ms.counts[pos]).unwrap_or(0));
                SelectionEntry {
                    pool_index: source_indices.map_or(i, |s| s[i]),
                    id: pool.id(i).to_string(),
                    weight,
                    count,
                }
            })
            .collect();
        let m = &result.metrics;
        SelectionFile {
            query_id: query_id.to_string(),
            budget: req.budget,
            selector: req.selector,
            integerizer: req.integerizer,
            pca_dim: req.pca_dim,
            support,
            metrics: SelectionFileMetrics {
                fw_error: m.fw_error,
                integer_error: m.integer_error,
                fidelity_l2: m.fidelity_l2,
                support_size: m.support_size,
                iterations: m.iterations,
                stop_reason: m.stop_reason,
                original_space: m.original_space,
                stage_seconds: StageSeconds {
                    select: m.timings.select_seconds,
                    integerize: m.timings.integerize_seconds,
                },
            },
            warning: result.warning.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.budget == 0 {
            return Err(HullftError::format("selection budget must be >= 1"));
        }
        if self.support.is_empty() {
            return Err(HullftError::format("selection has an empty support"));
        }
        let sum: f64 = self.support.iter().map(|e| e.weight).sum();
        if (sum - 1.0).abs() > SERIALIZED_SUM_TOLERANCE {
            return Err(HullftError::format(format!("selection weights sum to {sum}")));
        }
        if self.support.iter().any(|e| e.id.is_empty()) {
            return Err(HullftError::format("selection entry with an empty id"));
        }
        let with_counts = self.support.iter().filter(|e| e.count.is_some()).count();
        match self.integerizer {
            Integerizer::None if with_counts > 0 => {
                Err(HullftError::format("fractional selection must not carry counts"))
            }
            Integerizer::None => Ok(()),
            _ if with_counts != self.support.len() => Err(HullftError::format("every support entry needs a count")),
            _ => {
                let total: usize = self.support.iter().filter_map(|e| e.count).sum();
                if total != self.budget {
                    Err(HullftError::format(format!("counts sum to {total}, budget is {}", self.budget)))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// `(id, count)` in support order.
    pub fn counted_entries(&self) -> Result<Vec<(String, usize)>> {
        if self.integerizer == Integerizer::None {
            return Err(HullftError::format("selection has no counts (integerizer none)"));
        }
        Ok(self.support.iter().map(|e| (e.id.clone(), e.count.unwrap_or(0))).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SelectionFile =
            serde_json::from_str(text).map_err(|e| HullftError::format(format!("selection file: {e}")))?;
        file.validate()?;
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFileStep {
    pub id: String,
    pub action: StepAction,
}

/// The JSON document emitted by `hullft schedule`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    pub refresh_interval: usize,
    pub steps: Vec<ScheduleFileStep>,
    pub stats: ScheduleStats,
}

impl ScheduleFile {
    pub fn from_schedule(schedule: &TrainingSchedule) -> Self {
        ScheduleFile {
            refresh_interval: schedule.refresh_interval,
            steps: schedule.steps.iter().map(|s| ScheduleFileStep { id: s.id.clone(), action: s.action }).collect(),
            stats: schedule.stats(),
        }
    }

    /// Rebuilds the schedule, checking the refresh rule and the stats block.
    pub fn to_schedule(&self) -> Result<TrainingSchedule> {
        let schedule = TrainingSchedule {
            refresh_interval: self.refresh_interval,
            steps: self.steps.iter().map(|s| ScheduleStep { id: s.id.clone(), action: s.action }).collect(),
        };
        schedule.validate().map_err(|e| match e {
            HullftError::Contract(m) => HullftError::Format(m),
            other => other,
        })?;
        let actual = schedule.stats();
        let s = &self.stats;
        let consistent = s.total_steps == actual.total_steps
            && s.fb_passes == actual.fb_passes
            && s.reuse_steps == actual.reuse_steps
            && (s.theoretical_speedup - actual.theoretical_speedup).abs() <= 1e-12;
        if !consistent {
            return Err(HullftError::format(format!(
                "schedule stats {s:?} do not match the steps (recomputed {actual:?})"
            )));
        }
        Ok(schedule)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<(Self, TrainingSchedule)> {
        let file: ScheduleFile =
            serde_json::from_str(text).map_err(|e| HullftError::format(format!("schedule file: {e}")))?;
        let schedule = file.to_schedule()?;
        Ok((file, schedule))
    }
}
