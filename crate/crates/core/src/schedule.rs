//! Training schedules with gradient-refresh flags.
//!
//! Within every maximal run of identical consecutive examples, step `t`
//! (0-based within the run) recomputes the gradient iff `t mod r == 0`;
//! all other steps reuse the cached gradient.

use serde::{Deserialize, Serialize};

use crate::error::{HullftError, Result};
use crate::geometry::CandidatePool;
use crate::integerize::SupportMultiset;

/// Default gradient refresh interval.
pub const DEFAULT_REFRESH_INTERVAL: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    /// Forward-backward pass; replaces the cached gradient.
    Refresh,
    Reuse,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleStep {
    pub id: String,
    pub action: StepAction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStats {
    pub total_steps: usize,
    pub fb_passes: usize,
    pub reuse_steps: usize,
    pub theoretical_speedup: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingSchedule {
    pub refresh_interval: usize,
    pub steps: Vec<ScheduleStep>,
}

/// Ordered `(example id, run length)` blocks.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupedSequence {
    pub blocks: Vec<(String, usize)>,
}

impl GroupedSequence {
    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|b| b.1).sum()
    }

    pub fn expand(&self) -> Vec<String> {
        self.blocks.iter().flat_map(|(id, n)| std::iter::repeat_n(id.clone(), *n)).collect()
    }

    /// Merges adjacent blocks with the same id.
    pub fn coalesced(&self) -> GroupedSequence {
        let mut blocks: Vec<(String, usize)> = Vec::with_capacity(self.blocks.len());
        for (id, n) in &self.blocks {
            match blocks.last_mut() {
                Some((last, len)) if last == id => *len += n,
                _ => blocks.push((id.clone(), *n)),
            }
        }
        GroupedSequence { blocks }
    }
}

/// Order of support blocks in a schedule built from a multiset.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockOrder {
    SupportOrder,
    /// Largest count first, ties by support position.
    #[default]
    CountDescending,
}

fn check_interval(r: usize) -> Result<()> {
    if r == 0 {
        Err(HullftError::contract("refresh interval must be >= 1"))
    } else {
        Ok(())
    }
}

/// Drops zero counts and orders `(id, count)` entries into blocks.
pub fn order_blocks(entries: Vec<(String, usize)>, order: BlockOrder) -> GroupedSequence {
    let mut blocks: Vec<(String, usize)> = entries.into_iter().filter(|e| e.1 > 0).collect();
    if order == BlockOrder::CountDescending {
        blocks.sort_by_key(|b| std::cmp::Reverse(b.1));
    }
    GroupedSequence { blocks }
}

/// One contiguous block per support point with a positive count.
pub fn build_reuse_schedule(
    ms: &SupportMultiset,
    pool: &CandidatePool,
    r: usize,
    order: BlockOrder,
) -> Result<TrainingSchedule> {
    check_interval(r)?;
    let mut entries = Vec::with_capacity(ms.support.len());
    for (&i, &c) in ms.support.iter().zip(&ms.counts) {
        pool.check_index(i)?;
        entries.push((pool.id(i).to_string(), c));
    }
    schedule_from_groups(&order_blocks(entries, order), r)
}

/// One block per distinct id with its total count, in first-occurrence order.
pub fn global_dedup<S: AsRef<str>>(seq: &[S]) -> GroupedSequence {
    let mut index: std::collections::HashMap<&str, usize> = std::collections::HashMap::new();
    let mut blocks: Vec<(String, usize)> = Vec::new();
    for id in seq {
        let id = id.as_ref();
        match index.get(id) {
            Some(&pos) => blocks[pos].1 += 1,
            None => {
                index.insert(id, blocks.len());
                blocks.push((id.to_string(), 1));
            }
        }
    }
    GroupedSequence { blocks }
}

/// Run-length encoding of `seq`.
pub fn consecutive_group<S: AsRef<str>>(seq: &[S]) -> GroupedSequence {
    let mut blocks: Vec<(String, usize)> = Vec::new();
    for id in seq {
        let id = id.as_ref();
        match blocks.last_mut() {
            Some((last, n)) if last == id => *n += 1,
            _ => blocks.push((id.to_string(), 1)),
        }
    }
    GroupedSequence { blocks }
}

/// Applies the refresh rule to each block in order.
///
/// Adjacent blocks sharing an id are merged first: they form a single run
/// of identical inputs and share one cached gradient.
pub fn schedule_from_groups(groups: &GroupedSequence, r: usize) -> Result<TrainingSchedule> {
    check_interval(r)?;
    let groups = groups.coalesced();
    let mut steps = Vec::with_capacity(groups.total_len());
    for (id, len) in &groups.blocks {
        for t in 0..*len {
            let action = if t % r == 0 { StepAction::Refresh } else { StepAction::Reuse };
            steps.push(ScheduleStep { id: id.clone(), action });
        }
    }
    Ok(TrainingSchedule { refresh_interval: r, steps })
}

impl TrainingSchedule {
    pub fn stats(&self) -> ScheduleStats {
        let total_steps = self.steps.len();
        let fb_passes = self.steps.iter().filter(|s| s.action == StepAction::Refresh).count();
        let theoretical_speedup = if fb_passes == 0 { 1.0 } else { total_steps as f64 / fb_passes as f64 };
        ScheduleStats { total_steps, fb_passes, reuse_steps: total_steps - fb_passes, theoretical_speedup }
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.steps.iter().map(|s| s.id.as_str())
    }

    /// Checks every step against the refresh rule.
    pub fn validate(&self) -> Result<()> {
        check_interval(self.refresh_interval)?;
        let mut run_pos = 0usize;
        for (i, step) in self.steps.iter().enumerate() {
            if i > 0 && self.steps[i - 1].id == step.id {
                run_pos += 1;
            } else {
                run_pos = 0;
            }
            let expected =
                if run_pos.is_multiple_of(self.refresh_interval) { StepAction::Refresh } else { StepAction::Reuse };
            if step.action != expected {
                return Err(HullftError::format(format!(
                    "step {i} ({:?}) is {:?} but the refresh rule requires {:?}",
                    step.id, step.action, expected
                )));
            }
        }
        Ok(())
    }
}
