//! The scheduling pipeline: greedy assignment, both ordering heuristics,
//! load-balance feedback, and idle-time post-processing, keeping the best
//! schedule found under the chosen metric.

use crate::cost::CostParams;
use crate::dse::HdaConfig;
use crate::error::ScheduleError;
use crate::workload::{LayerId, Workload};

use super::sim::simulate_with_table;
use super::table::CostTable;
use super::{assign_layers, order_layers, Assignment, Metric, OrderingPolicy, Schedule, SchedulerOptions};

/// Moves layers off the most-loaded sub-accelerator while the busy-time
/// imbalance exceeds `options.beta`, keeping only moves that do not worsen
/// the schedule metric. Returns the final assignment.
pub fn rebalance(
    workload: &Workload,
    assignment: &Assignment,
    hda: &HdaConfig,
    params: &CostParams,
    options: &SchedulerOptions,
) -> Assignment {
    let table = CostTable::build(workload, hda, params);
    let order = order_layers(workload, options.ordering);
    rebalance_inner(workload, assignment, &order, hda, params, options, &table)
        .map(|(a, _)| a)
        .unwrap_or_else(|| assignment.clone())
}

fn rebalance_inner(
    workload: &Workload,
    assignment: &Assignment,
    order: &[LayerId],
    hda: &HdaConfig,
    params: &CostParams,
    options: &SchedulerOptions,
    table: &CostTable,
) -> Option<(Assignment, Schedule)> {
    let n_subs = hda.subaccs.len();
    let mut current = assignment.clone();
    let mut sched = simulate_with_table(workload, &current, order, hda, params, table).ok()?;
    if n_subs < 2 {
        return Some((current, sched));
    }
    for _ in 0..options.rebalance_rounds {
        if sched.imbalance() <= options.beta {
            break;
        }
        let loaded = sched
            .per_subacc_busy
            .iter()
            .enumerate()
            .max_by_key(|(s, b)| (**b, std::cmp::Reverse(*s)))
            .map(|(s, _)| s)
            .unwrap();

        // Candidate moves: every layer on the loaded sub-accelerator,
        // cheapest per-layer metric penalty first.
        let mut candidates: Vec<(f64, LayerId, usize)> = Vec::new();
        for id in order {
            if current.of(*id) != loaded {
                continue;
            }
            let here = table.assign_metric(*id, loaded, options.metric, params.bytes_per_element);
            let mut best_target = None;
            for s in 0..n_subs {
                if s == loaded {
                    continue;
                }
                let there = table.assign_metric(*id, s, options.metric, params.bytes_per_element);
                match best_target {
                    None => best_target = Some((there, s)),
                    Some((m, _)) if there < m => best_target = Some((there, s)),
                    _ => {}
                }
            }
            let (there, target) = best_target?;
            candidates.push((there - here, *id, target));
        }
        candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let mut moved = false;
        for (_, id, target) in candidates {
            let mut trial = current.clone();
            trial.subacc_of[id.index()] = target;
            let Ok(trial_sched) = simulate_with_table(workload, &trial, order, hda, params, table)
            else {
                continue;
            };
            if options.metric.of_schedule(&trial_sched) <= options.metric.of_schedule(&sched) {
                current = trial;
                sched = trial_sched;
                moved = true;
                break;
            }
        }
        if !moved {
            break;
        }
    }
    Some((current, sched))
}

/// Removes idle time caused by bad layer order: scanning layers X in
/// completion order, looks among the per-model head layers not yet started
/// at X's end for one assigned to X's sub-accelerator that is
/// dependence-ready there, reorders it immediately after X, and keeps the
/// re-simulated schedule when the makespan does not grow.
pub fn post_process(
    schedule: &Schedule,
    workload: &Workload,
    hda: &HdaConfig,
    params: &CostParams,
) -> Schedule {
    let table = CostTable::build(workload, hda, params);
    post_process_inner(schedule, workload, hda, params, &table)
}

fn post_process_inner(
    schedule: &Schedule,
    workload: &Workload,
    hda: &HdaConfig,
    params: &CostParams,
    table: &CostTable,
) -> Schedule {
    let mut current = schedule.clone();
    let mut processed: Vec<bool> = vec![false; workload.layer_count()];

    loop {
        // Earliest-completing unprocessed entry is the next X.
        let Some(x) = current
            .entries
            .iter()
            .filter(|e| !processed[e.layer.index()])
            .min_by_key(|e| (e.end, e.sub, e.layer))
            .cloned()
        else {
            break;
        };
        processed[x.layer.index()] = true;
        let t = x.end;

        let start_of = |id: LayerId| -> u64 {
            current
                .entries
                .iter()
                .find(|e| e.layer == id)
                .map(|e| e.start)
                .unwrap_or(u64::MAX)
        };
        let end_of = |id: LayerId| -> u64 {
            current
                .entries
                .iter()
                .find(|e| e.layer == id)
                .map(|e| e.end)
                .unwrap_or(u64::MAX)
        };

        // Per-model head layers not yet started at t.
        let mut candidate: Option<LayerId> = None;
        for model in &workload.models {
            let head = model.layers.iter().find(|l| start_of(l.id) > t);
            let Some(head) = head else { continue };
            if head.id == x.layer || current.assignment.of(head.id) != x.sub {
                continue;
            }
            if !head.depends_on.iter().all(|d| end_of(*d) <= t) {
                continue;
            }
            candidate = Some(head.id);
            break;
        }
        let Some(y) = candidate else { continue };

        // Reorder y immediately after x and re-simulate.
        let mut order: Vec<LayerId> = current.order.iter().copied().filter(|id| *id != y).collect();
        let x_pos = order.iter().position(|id| *id == x.layer).unwrap();
        order.insert(x_pos + 1, y);
        let Ok(trial) = simulate_with_table(workload, &current.assignment, &order, hda, params, table)
        else {
            continue;
        };
        if trial.makespan <= current.makespan {
            current = trial;
        }
    }
    current
}

/// End-to-end scheduling: greedy assignment, both ordering policies,
/// rebalance feedback, post-processing, plus all-on-one-sub-accelerator
/// fallbacks; returns the best schedule under `options.metric`.
/// Deterministic for fixed inputs.
pub fn schedule_workload(
    workload: &Workload,
    hda: &HdaConfig,
    params: &CostParams,
    options: &SchedulerOptions,
) -> Result<Schedule, ScheduleError> {
    assert!(options.beta >= 1.0, "beta must be >= 1");
    let table = CostTable::build(workload, hda, params);
    let greedy = assign_layers(workload, hda, params, options.metric);

    let mut best: Option<Schedule> = None;
    let mut first_err: Option<ScheduleError> = None;
    let mut consider = |sched: Schedule, best: &mut Option<Schedule>| {
        let better = match best {
            None => true,
            Some(b) => {
                let (m, bm) = (options.metric.of_schedule(&sched), options.metric.of_schedule(b));
                m < bm || (m == bm && sched.makespan < b.makespan)
            }
        };
        if better {
            *best = Some(sched);
        }
    };

    for policy in [OrderingPolicy::DepthFirst, OrderingPolicy::BreadthFirst] {
        let order = order_layers(workload, policy);
        let rebalanced = if hda.subaccs.len() > 1 && options.rebalance_rounds > 0 {
            rebalance_inner(workload, &greedy, &order, hda, params, options, &table)
        } else {
            None
        };
        let sched = match rebalanced {
            Some((_, s)) => Ok(s),
            None => simulate_with_table(workload, &greedy, &order, hda, params, &table),
        };
        match sched {
            Ok(s) => {
                let s = if options.post_process {
                    post_process_inner(&s, workload, hda, params, &table)
                } else {
                    s
                };
                consider(s, &mut best);
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }

    // Serial fallbacks: running everything on one sub-accelerator is
    // always a legal schedule, so the result is never worse than the best
    // single sub-accelerator of the same size.
    let depth = order_layers(workload, OrderingPolicy::DepthFirst);
    for s in 0..hda.subaccs.len() {
        let all_on = Assignment::uniform(workload.layer_count(), s);
        if let Ok(sched) = simulate_with_table(workload, &all_on, &depth, hda, params, &table) {
            consider(sched, &mut best);
        }
    }

    match best {
        Some(s) => Ok(s),
        None => Err(first_err.unwrap_or(ScheduleError::Stuck { cycle: 0 })),
    }
}
