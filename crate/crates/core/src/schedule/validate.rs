//! Structural schedule validation: coverage, per-sub-accelerator
//! non-overlap, dependence ordering, the global-buffer working-set
//! constraint, and summary-field consistency.

use std::fmt;

use crate::cost::CostParams;
use crate::dse::HdaConfig;
use crate::workload::{LayerId, Workload};

use super::table::CostTable;
use super::Schedule;

/// One broken schedule invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Missing { layer: String },
    Duplicate { layer: String },
    UnknownSub { layer: String, sub: usize },
    Overlap { sub: usize, a: String, b: String },
    Dependence { layer: String, pred: String },
    Memory { cycle: u64, used: u64, capacity: u64 },
    Makespan { stated: u64, actual: u64 },
    Busy { sub: usize, stated: u64, actual: u64 },
    Energy { stated: f64, actual: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing { layer } => write!(f, "MISSING: layer {layer} never scheduled"),
            Violation::Duplicate { layer } => write!(f, "DUPLICATE: layer {layer} scheduled twice"),
            Violation::UnknownSub { layer, sub } => {
                write!(f, "UNKNOWN_SUB: layer {layer} on sub-accelerator {sub}")
            }
            Violation::Overlap { sub, a, b } => {
                write!(f, "OVERLAP: {a} and {b} overlap on sub-accelerator {sub}")
            }
            Violation::Dependence { layer, pred } => {
                write!(f, "DEPENDENCE: {layer} starts before predecessor {pred} ends")
            }
            Violation::Memory { cycle, used, capacity } => write!(
                f,
                "MEMORY: {used} B of working sets live at cycle {cycle}, capacity {capacity} B"
            ),
            Violation::Makespan { stated, actual } => {
                write!(f, "MAKESPAN: stated {stated}, entries end at {actual}")
            }
            Violation::Busy { sub, stated, actual } => write!(
                f,
                "BUSY: sub-accelerator {sub} stated {stated}, entries sum to {actual}"
            ),
            Violation::Energy { stated, actual } => {
                write!(f, "ENERGY: stated {stated}, entries sum to {actual}")
            }
        }
    }
}

/// Checks every schedule invariant; an empty list means the schedule is
/// valid.
pub fn validate_schedule(
    schedule: &Schedule,
    workload: &Workload,
    hda: &HdaConfig,
    params: &CostParams,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = workload.layer_count();
    let n_subs = hda.subaccs.len();

    let mut count = vec![0u32; n];
    for e in &schedule.entries {
        if e.layer.index() >= n {
            out.push(Violation::UnknownSub {
                layer: format!("{}", e.layer),
                sub: e.sub,
            });
            continue;
        }
        count[e.layer.index()] += 1;
        if e.sub >= n_subs {
            out.push(Violation::UnknownSub {
                layer: workload.layer_label(e.layer),
                sub: e.sub,
            });
        }
    }
    for (i, c) in count.iter().enumerate() {
        let id = LayerId(i as u32);
        if *c == 0 {
            out.push(Violation::Missing {
                layer: workload.layer_label(id),
            });
        } else if *c > 1 {
            out.push(Violation::Duplicate {
                layer: workload.layer_label(id),
            });
        }
    }

    // Non-overlap per sub-accelerator over half-open [start, end).
    for s in 0..n_subs {
        let mut on_sub: Vec<_> = schedule.entries.iter().filter(|e| e.sub == s).collect();
        on_sub.sort_by_key(|e| (e.start, e.end));
        for pair in on_sub.windows(2) {
            if pair[1].start < pair[0].end {
                out.push(Violation::Overlap {
                    sub: s,
                    a: workload.layer_label(pair[0].layer),
                    b: workload.layer_label(pair[1].layer),
                });
            }
        }
    }

    // Dependence: a layer may not start before its predecessors end.
    let mut end_of = vec![None::<u64>; n];
    for e in &schedule.entries {
        if e.layer.index() < n {
            end_of[e.layer.index()] = Some(e.end);
        }
    }
    for e in &schedule.entries {
        if e.layer.index() >= n {
            continue;
        }
        for dep in &workload.layer(e.layer).depends_on {
            match end_of[dep.index()] {
                Some(end) if end <= e.start => {}
                _ => out.push(Violation::Dependence {
                    layer: workload.layer_label(e.layer),
                    pred: workload.layer_label(*dep),
                }),
            }
        }
    }

    // Memory: concurrent working sets never exceed the global buffer.
    // Frees at a cycle land before allocations at the same cycle.
    if out.iter().all(|v| !matches!(v, Violation::UnknownSub { .. })) {
        let table = CostTable::build(workload, hda, params);
        let mut events: Vec<(u64, i8, u64)> = Vec::with_capacity(schedule.entries.len() * 2);
        for e in &schedule.entries {
            let work = table.get(e.layer, e.sub).work_bytes;
            events.push((e.start, 1, work));
            events.push((e.end, 0, work));
        }
        events.sort();
        let mut used: u64 = 0;
        for (cycle, kind, work) in events {
            if kind == 0 {
                used -= work;
            } else {
                used += work;
                if used > params.gb_capacity {
                    out.push(Violation::Memory {
                        cycle,
                        used,
                        capacity: params.gb_capacity,
                    });
                }
            }
        }
    }

    // Summary consistency.
    let actual_makespan = schedule.entries.iter().map(|e| e.end).max().unwrap_or(0);
    if schedule.makespan != actual_makespan {
        out.push(Violation::Makespan {
            stated: schedule.makespan,
            actual: actual_makespan,
        });
    }
    let mut busy = vec![0u64; n_subs];
    for e in &schedule.entries {
        if e.sub < n_subs {
            busy[e.sub] += e.end - e.start;
        }
    }
    for s in 0..n_subs {
        let stated = schedule.per_subacc_busy.get(s).copied().unwrap_or(0);
        if stated != busy[s] {
            out.push(Violation::Busy {
                sub: s,
                stated,
                actual: busy[s],
            });
        }
    }
    let energy_sum: f64 = schedule.entries.iter().map(|e| e.energy).sum();
    if (schedule.total_energy - energy_sum).abs() > 1e-6 * energy_sum.max(1.0) {
        out.push(Violation::Energy {
            stated: schedule.total_energy,
            actual: energy_sum,
        });
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::SubAcceleratorConfig;
    use crate::dataflow::DataflowKind;
    use crate::schedule::{schedule_workload, Assignment, ScheduleEntry, SchedulerOptions};
    use crate::workload::parse_workload_str;

    fn chain2() -> Workload {
        parse_workload_str(
            r#"
[[model]]
name = "a"
[[model.layer]]
name = "a1"
op = "fc"
k = 2
c = 2
[[model.layer]]
name = "a2"
op = "fc"
k = 2
c = 2
"#,
        )
        .unwrap()
    }

    fn hda1() -> HdaConfig {
        HdaConfig::new(
            vec![SubAcceleratorConfig::new(DataflowKind::Nvdla, 64, 16.0)],
            CostParams::default().gb_capacity,
        )
    }

    #[test]
    fn pipeline_output_is_valid() {
        let wl = chain2();
        let h = hda1();
        let params = CostParams::default();
        let s = schedule_workload(&wl, &h, &params, &SchedulerOptions::default()).unwrap();
        assert!(validate_schedule(&s, &wl, &h, &params).is_empty());
    }

    #[test]
    fn detects_dependence_violation() {
        let wl = chain2();
        let h = hda1();
        let params = CostParams::default();
        let bad = Schedule {
            entries: vec![
                ScheduleEntry { layer: LayerId(1), sub: 0, start: 0, end: 5, energy: 1.0 },
                ScheduleEntry { layer: LayerId(0), sub: 0, start: 5, end: 10, energy: 1.0 },
            ],
            makespan: 10,
            total_energy: 2.0,
            per_subacc_busy: vec![10],
            assignment: Assignment::uniform(2, 0),
            order: vec![LayerId(1), LayerId(0)],
        };
        let v = validate_schedule(&bad, &wl, &h, &params);
        assert_eq!(
            v.iter().filter(|x| matches!(x, Violation::Dependence { .. })).count(),
            1,
            "{v:?}"
        );
    }

    #[test]
    fn detects_overlap() {
        let wl = chain2();
        let h = hda1();
        let params = CostParams::default();
        let bad = Schedule {
            entries: vec![
                ScheduleEntry { layer: LayerId(0), sub: 0, start: 0, end: 8, energy: 1.0 },
                ScheduleEntry { layer: LayerId(1), sub: 0, start: 4, end: 12, energy: 1.0 },
            ],
            makespan: 12,
            total_energy: 2.0,
            per_subacc_busy: vec![16],
            assignment: Assignment::uniform(2, 0),
            order: vec![LayerId(0), LayerId(1)],
        };
        let v = validate_schedule(&bad, &wl, &h, &params);
        assert!(v.iter().any(|x| matches!(x, Violation::Overlap { .. })), "{v:?}");
        // the same entries also violate dependence (a2 starts at 4 < 8)
        assert!(v.iter().any(|x| matches!(x, Violation::Dependence { .. })));
    }

    #[test]
    fn detects_memory_overcommit() {
        let wl = parse_workload_str(
            r#"
[[model]]
name = "a"
[[model.layer]]
op = "conv2d"
k = 8
c = 8
y = 16
x = 16
r = 3
s = 3

[[model]]
name = "b"
[[model.layer]]
op = "conv2d"
k = 8
c = 8
y = 16
x = 16
r = 3
s = 3
"#,
        )
        .unwrap();
        let h = HdaConfig::new(
            vec![
                SubAcceleratorConfig::new(DataflowKind::Nvdla, 64, 16.0),
                SubAcceleratorConfig::new(DataflowKind::Nvdla, 64, 16.0),
            ],
            CostParams::default().gb_capacity,
        );
        let mut params = CostParams::default();
        let table = CostTable::build(&wl, &h, &params);
        let work = table.get(LayerId(0), 0).work_bytes;
        params.gb_capacity = work + 1; // one fits, two do not
        let bad = Schedule {
            entries: vec![
                ScheduleEntry { layer: LayerId(0), sub: 0, start: 0, end: 100, energy: 1.0 },
                ScheduleEntry { layer: LayerId(1), sub: 1, start: 0, end: 100, energy: 1.0 },
            ],
            makespan: 100,
            total_energy: 2.0,
            per_subacc_busy: vec![100, 100],
            assignment: Assignment { subacc_of: vec![0, 1] },
            order: vec![LayerId(0), LayerId(1)],
        };
        let v = validate_schedule(&bad, &wl, &h, &params);
        assert!(v.iter().any(|x| matches!(x, Violation::Memory { .. })), "{v:?}");
    }
}
