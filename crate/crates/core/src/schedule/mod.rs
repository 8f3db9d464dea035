//! Layer execution scheduling for a fixed HDA: greedy preference
//! assignment, heuristic layer ordering, event-driven timeline simulation
//! under dependence and memory constraints, load-balance feedback, and
//! idle-time post-processing.

mod pipeline;
mod sim;
mod table;
mod validate;

pub use pipeline::{post_process, rebalance, schedule_workload};
pub use sim::simulate;
pub use validate::{validate_schedule, Violation};

pub(crate) use sim::simulate_with_table;
pub(crate) use table::CostTable;

use serde::{Deserialize, Serialize};

use crate::cost::{evaluate_layer, CostParams, LayerCost};
use crate::dse::HdaConfig;
use crate::workload::{LayerId, Workload};

/// Optimization objective for assignment, rebalancing, and design ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Latency,
    Energy,
    Edp,
}

impl Metric {
    pub fn of_cost(&self, c: &LayerCost) -> f64 {
        match self {
            Metric::Latency => c.latency_cycles as f64,
            Metric::Energy => c.energy,
            Metric::Edp => c.edp(),
        }
    }

    pub fn of_schedule(&self, s: &Schedule) -> f64 {
        match self {
            Metric::Latency => s.makespan as f64,
            Metric::Energy => s.total_energy,
            Metric::Edp => s.edp(),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Latency => "latency",
            Metric::Energy => "energy",
            Metric::Edp => "edp",
        }
    }
}

/// Initial layer ordering heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingPolicy {
    /// All layers of model 1 in graph order, then model 2, and so on.
    DepthFirst,
    /// Round-robin over models: layer i of each model in turn.
    BreadthFirst,
}

/// Scheduler knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchedulerOptions {
    pub metric: Metric,
    pub ordering: OrderingPolicy,
    /// Load-unbalancing threshold: largest sub-accelerator busy time
    /// divided by the smallest that triggers rebalancing. Must be >= 1.
    pub beta: f64,
    pub rebalance_rounds: u32,
    pub post_process: bool,
}

impl Default for SchedulerOptions {
    fn default() -> Self {
        SchedulerOptions {
            metric: Metric::Edp,
            ordering: OrderingPolicy::DepthFirst,
            beta: 2.0,
            rebalance_rounds: 10,
            post_process: true,
        }
    }
}

/// Total map from layer id to sub-accelerator index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub subacc_of: Vec<usize>,
}

impl Assignment {
    pub fn uniform(n_layers: usize, sub: usize) -> Self {
        Assignment {
            subacc_of: vec![sub; n_layers],
        }
    }

    pub fn of(&self, id: LayerId) -> usize {
        self.subacc_of[id.index()]
    }
}

/// One executed layer on the timeline; `[start, end)` in cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub layer: LayerId,
    pub sub: usize,
    pub start: u64,
    pub end: u64,
    pub energy: f64,
}

/// A complete layer execution schedule.
#[derive(Debug, Clone)]
pub struct Schedule {
    /// Entries sorted by (start, sub, layer).
    pub entries: Vec<ScheduleEntry>,
    pub makespan: u64,
    pub total_energy: f64,
    pub per_subacc_busy: Vec<u64>,
    pub assignment: Assignment,
    pub order: Vec<LayerId>,
}

impl Schedule {
    pub fn edp(&self) -> f64 {
        self.makespan as f64 * self.total_energy
    }

    /// Largest busy time divided by the smallest (clamped to one cycle).
    pub fn imbalance(&self) -> f64 {
        let max = self.per_subacc_busy.iter().copied().max().unwrap_or(0);
        let min = self.per_subacc_busy.iter().copied().min().unwrap_or(0).max(1);
        max as f64 / min as f64
    }
}

/// Assigns each layer to the sub-accelerator minimizing the chosen metric,
/// estimated with resident inputs; ties break to the lowest index.
///
/// Sub-accelerators whose working set cannot fit the global buffer for a
/// layer are skipped for that layer when a fitting alternative exists.
pub fn assign_layers(
    workload: &Workload,
    hda: &HdaConfig,
    params: &CostParams,
    metric: Metric,
) -> Assignment {
    assert!(!hda.subaccs.is_empty(), "HDA needs at least one sub-accelerator");
    let mut subacc_of = vec![0usize; workload.layer_count()];
    for layer in workload.layers() {
        let costs: Vec<(f64, u64)> = hda
            .subaccs
            .iter()
            .map(|sub| {
                let c = evaluate_layer(layer, sub, params, true);
                let work = crate::cost::buffer_requirement(
                    &crate::dataflow::spatial_allocation(&sub.descriptor(), layer, sub.n_pe),
                    layer,
                    params,
                );
                (metric.of_cost(&c), work)
            })
            .collect();
        let any_fits = costs.iter().any(|(_, w)| *w <= params.gb_capacity);
        let mut best = 0usize;
        for (s, (m, w)) in costs.iter().enumerate() {
            let feasible = !any_fits || *w <= params.gb_capacity;
            let best_feasible = !any_fits || costs[best].1 <= params.gb_capacity;
            if feasible && (!best_feasible || *m < costs[best].0) {
                best = s;
            }
        }
        subacc_of[layer.id.index()] = best;
    }
    Assignment { subacc_of }
}

/// Emits a full layer order under the given policy. Both policies respect
/// intra-model dependence by construction.
pub fn order_layers(workload: &Workload, policy: OrderingPolicy) -> Vec<LayerId> {
    match policy {
        OrderingPolicy::DepthFirst => workload.layers().map(|l| l.id).collect(),
        OrderingPolicy::BreadthFirst => {
            let max_len = workload.models.iter().map(|m| m.layers.len()).max().unwrap_or(0);
            let mut order = Vec::with_capacity(workload.layer_count());
            for i in 0..max_len {
                for model in &workload.models {
                    if let Some(l) = model.layers.get(i) {
                        order.push(l.id);
                    }
                }
            }
            order
        }
    }
}
