//! Event-driven timeline simulation.
//!
//! Each sub-accelerator consumes its assigned layers in the given global
//! order. A layer starts as soon as its sub-accelerator is free, all
//! predecessors have completed, and its double-buffered working set fits
//! the global buffer; execution is non-synchronized across
//! sub-accelerators. Committed outputs stay resident in the global buffer
//! while space allows, so consumers can skip the DRAM refetch; outputs
//! that do not fit are written back and re-read from DRAM.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::cost::CostParams;
use crate::dse::HdaConfig;
use crate::error::ScheduleError;
use crate::workload::{LayerId, Workload};

use super::table::CostTable;
use super::{Assignment, Schedule, ScheduleEntry};

/// Simulates `order` under `assignment` on `hda`, returning a valid
/// schedule or a deadlock error.
pub fn simulate(
    workload: &Workload,
    assignment: &Assignment,
    order: &[LayerId],
    hda: &HdaConfig,
    params: &CostParams,
) -> Result<Schedule, ScheduleError> {
    let table = CostTable::build(workload, hda, params);
    simulate_with_table(workload, assignment, order, hda, params, &table)
}

pub(crate) fn simulate_with_table(
    workload: &Workload,
    assignment: &Assignment,
    order: &[LayerId],
    hda: &HdaConfig,
    params: &CostParams,
    table: &CostTable,
) -> Result<Schedule, ScheduleError> {
    let n = workload.layer_count();
    let n_subs = hda.subaccs.len();
    if assignment.subacc_of.len() != n {
        return Err(ScheduleError::PartialAssignment(format!(
            "{} layers, {} assigned",
            n,
            assignment.subacc_of.len()
        )));
    }
    if order.len() != n {
        return Err(ScheduleError::BadOrder(format!(
            "order lists {} of {} layers",
            order.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for id in order {
        if seen[id.index()] {
            return Err(ScheduleError::BadOrder(format!(
                "layer {} appears twice",
                workload.layer_label(*id)
            )));
        }
        seen[id.index()] = true;
    }

    // A single working set larger than the global buffer can never run.
    for id in order {
        let sub = assignment.of(*id);
        let work = table.get(*id, sub).work_bytes;
        if work > params.gb_capacity {
            return Err(ScheduleError::Deadlock {
                layer: workload.layer_label(*id),
                needed: work,
                capacity: params.gb_capacity,
            });
        }
    }

    let mut queues: Vec<Vec<LayerId>> = vec![Vec::new(); n_subs];
    for id in order {
        queues[assignment.of(*id)].push(*id);
    }
    let mut qpos = vec![0usize; n_subs];

    // Pending-consumer counts drive output lifetime in the global buffer.
    let mut consumers = vec![0u32; n];
    for layer in workload.layers() {
        for dep in &layer.depends_on {
            consumers[dep.index()] += 1;
        }
    }

    // Batch copies of one model share identical filter weights; the flag
    // charges the DRAM fetch only for the first copy to execute.
    let weight_key: Option<(Vec<usize>, usize)> = if params.share_batch_weights {
        let mut map: HashMap<(&str, &str), usize> = HashMap::new();
        let mut keys = Vec::with_capacity(n);
        for model in &workload.models {
            for layer in &model.layers {
                let next = map.len();
                keys.push(*map.entry((model.name.as_str(), layer.name.as_str())).or_insert(next));
            }
        }
        let count = map.len();
        Some((keys, count))
    } else {
        None
    };
    let mut weights_paid = weight_key
        .as_ref()
        .map(|(_, count)| vec![false; *count]);

    let mut completed = vec![false; n];
    let mut resident = vec![false; n];
    let mut entry_of = vec![usize::MAX; n];
    let mut running: Vec<Option<LayerId>> = vec![None; n_subs];
    let mut free_work = params.gb_capacity;
    let mut resident_bytes: u64 = 0;
    let mut entries: Vec<ScheduleEntry> = Vec::with_capacity(n);
    let mut events: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let mut done = 0usize;
    let mut now = 0u64;

    loop {
        let mut progress = true;
        while progress {
            progress = false;
            for s in 0..n_subs {
                if running[s].is_some() {
                    continue;
                }
                let Some(&head) = queues[s].get(qpos[s]) else {
                    continue;
                };
                let layer = workload.layer(head);
                if !layer.depends_on.iter().all(|d| completed[d.index()]) {
                    continue;
                }
                let lc = table.get(head, s);
                if lc.work_bytes > free_work {
                    continue;
                }

                free_work -= lc.work_bytes;
                qpos[s] += 1;
                running[s] = Some(head);

                let input_resident = !layer.depends_on.is_empty()
                    && layer.depends_on.iter().all(|d| resident[d.index()]);
                let (w, i, _o) = table.tensors[head.index()];
                let mut dram = 0u64;
                let pay_weights = match (&weight_key, &mut weights_paid) {
                    (Some((keys, _)), Some(paid)) => {
                        let key = keys[head.index()];
                        let first = !paid[key];
                        paid[key] = true;
                        first
                    }
                    _ => true,
                };
                if pay_weights {
                    dram += w;
                }
                if !input_resident {
                    dram += i;
                }

                let mut latency = lc.latency();
                let mut energy = lc.base_energy + dram as f64 * params.e_dram;
                if (params.ctx_latency > 0 || params.ctx_energy > 0.0)
                    && layer.depends_on.iter().any(|d| {
                        hda.subaccs[assignment.of(*d)].dataflow != hda.subaccs[s].dataflow
                    })
                {
                    latency += params.ctx_latency;
                    energy += params.ctx_energy;
                }

                let end = now + latency;
                entry_of[head.index()] = entries.len();
                entries.push(ScheduleEntry {
                    layer: head,
                    sub: s,
                    start: now,
                    end,
                    energy,
                });
                events.push(Reverse((end, s)));
                progress = true;
            }
        }

        if done == n {
            break;
        }
        let Some(Reverse((t, s))) = events.pop() else {
            return Err(ScheduleError::Stuck { cycle: now });
        };
        now = t;

        let head = running[s].take().expect("completion event without a running layer");
        let layer = workload.layer(head);
        completed[head.index()] = true;
        done += 1;
        free_work += table.get(head, s).work_bytes;

        for dep in &layer.depends_on {
            consumers[dep.index()] -= 1;
            if consumers[dep.index()] == 0 && resident[dep.index()] {
                resident[dep.index()] = false;
                resident_bytes -= table.tensors[dep.index()].2 * params.bytes_per_element;
            }
        }

        // Commit the output: keep it in the global buffer if it fits,
        // otherwise it spills to DRAM and consumers refetch.
        if consumers[head.index()] > 0 {
            let o = table.tensors[head.index()].2;
            let o_bytes = o * params.bytes_per_element;
            if resident_bytes + o_bytes <= params.gb_capacity {
                resident[head.index()] = true;
                resident_bytes += o_bytes;
            } else {
                entries[entry_of[head.index()]].energy += o as f64 * params.e_dram;
            }
        }
    }

    entries.sort_by_key(|e| (e.start, e.sub, e.layer));
    let makespan = entries.iter().map(|e| e.end).max().unwrap_or(0);
    let mut per_subacc_busy = vec![0u64; n_subs];
    let mut total_energy = 0.0;
    for e in &entries {
        per_subacc_busy[e.sub] += e.end - e.start;
        total_energy += e.energy;
    }
    Ok(Schedule {
        entries,
        makespan,
        total_energy,
        per_subacc_busy,
        assignment: assignment.clone(),
        order: order.to_vec(),
    })
}
