//! Query-driven training-set selection by sparse convex approximation.
//!
//! A query embedding is approximated as a sparse convex combination of a
//! candidate pool ([`frank_wolfe`] or [`caratheodory`]), the fractional
//! weights are turned into an exact `N`-example multiset ([`integerize`]),
//! and the multiset becomes a training schedule in which repeated examples
//! reuse cached gradients ([`schedule`], [`trainer`]).

pub mod caratheodory;
pub mod error;
pub mod frank_wolfe;
pub mod geometry;
pub mod integerize;
pub mod io;
pub mod pipeline;
pub mod schedule;
pub mod synthetic;
pub mod trainer;

pub use caratheodory::{caratheodory_reduce, find_affine_dependency, AffineDependency};
pub use error::{HullftError, Result};
pub use frank_wolfe::{frank_wolfe, FwConfig, FwResult, FwStep, FwTrace, StopReason};
pub use geometry::{normalize_rows, reconstruction_error, CandidatePool, EmbeddingVector, SimplexWeights};
pub use integerize::{
    brute_force_integerize, fidelity, integerize, integerize_logged, multiset_error, pad_by_weights, FidelityReport,
    SupportMultiset,
};
pub use pipeline::{
    hullft_select, knn_preselect, pca_select, Integerizer, KnnMetric, SelectionRequest, SelectionResult, Selector,
};
pub use schedule::{
    build_reuse_schedule, consecutive_group, global_dedup, schedule_from_groups, BlockOrder, GroupedSequence,
    ScheduleStats, StepAction, TrainingSchedule,
};
pub use trainer::{adam_step, grad_reuse_train, plain_train, AdamConfig, AdamState, ToyModel, TrainOutcome};
