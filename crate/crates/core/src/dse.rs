//! Hardware design-space exploration: enumerate PE/bandwidth
//! partitionings across fixed-dataflow sub-accelerators, schedule each
//! candidate, and report the Pareto frontier and the best-EDP design,
//! plus FDA, SM-FDA, and RDA reference designs.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cost::{evaluate_layer, CostParams, SubAcceleratorConfig};
use crate::dataflow::DataflowKind;
use crate::error::ScheduleError;
use crate::schedule::{schedule_workload, Metric, Schedule, SchedulerOptions};
use crate::workload::Workload;

/// Resource presets for the three deployment scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AcceleratorClass {
    Edge,
    Mobile,
    Cloud,
}

impl AcceleratorClass {
    /// `(total PEs, total NoC bandwidth in MB/s, global buffer bytes)`.
    pub fn totals(&self) -> (u64, u64, u64) {
        match self {
            AcceleratorClass::Edge => (1024, 16_000, 4 * 1024 * 1024),
            AcceleratorClass::Mobile => (4096, 64_000, 8 * 1024 * 1024),
            AcceleratorClass::Cloud => (16_384, 256_000, 16 * 1024 * 1024),
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "edge" => Some(AcceleratorClass::Edge),
            "mobile" => Some(AcceleratorClass::Mobile),
            "cloud" => Some(AcceleratorClass::Cloud),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            AcceleratorClass::Edge => "edge",
            AcceleratorClass::Mobile => "mobile",
            AcceleratorClass::Cloud => "cloud",
        }
    }
}

/// Total chip resources to distribute across sub-accelerators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Totals {
    pub n_pe: u64,
    /// Total NoC bandwidth in MB/s.
    pub bw_mbps: u64,
    pub gb_capacity: u64,
}

impl Totals {
    pub fn of_class(class: AcceleratorClass) -> Self {
        let (n_pe, bw_mbps, gb_capacity) = class.totals();
        Totals {
            n_pe,
            bw_mbps,
            gb_capacity,
        }
    }

    pub fn bw_gbps(&self) -> f64 {
        self.bw_mbps as f64 / 1000.0
    }
}

/// A fully specified HDA: sub-accelerator list plus shared totals.
#[derive(Debug, Clone)]
pub struct HdaConfig {
    pub subaccs: Vec<SubAcceleratorConfig>,
    pub gb_capacity: u64,
}

impl HdaConfig {
    pub fn new(subaccs: Vec<SubAcceleratorConfig>, gb_capacity: u64) -> Self {
        assert!(!subaccs.is_empty());
        HdaConfig {
            subaccs,
            gb_capacity,
        }
    }

    /// Builds an HDA from per-sub-accelerator PE and bandwidth partitions.
    /// Partition sums must match the totals exactly.
    pub fn from_partitions(
        dataflows: &[DataflowKind],
        pe: &[u64],
        bw_mbps: &[u64],
        totals: Totals,
        params: &CostParams,
    ) -> Self {
        assert_eq!(dataflows.len(), pe.len());
        assert_eq!(dataflows.len(), bw_mbps.len());
        assert_eq!(pe.iter().sum::<u64>(), totals.n_pe, "PE partition must sum to the total");
        assert_eq!(
            bw_mbps.iter().sum::<u64>(),
            totals.bw_mbps,
            "bandwidth partition must sum to the total"
        );
        let subaccs = dataflows
            .iter()
            .zip(pe.iter().zip(bw_mbps.iter()))
            .map(|(df, (pe, bw))| {
                SubAcceleratorConfig::new(
                    *df,
                    *pe,
                    params.gbps_to_bytes_per_cycle(*bw as f64 / 1000.0),
                )
            })
            .collect();
        HdaConfig::new(subaccs, totals.gb_capacity)
    }

    pub fn total_pes(&self) -> u64 {
        self.subaccs.iter().map(|s| s.n_pe).sum()
    }
}

/// One evaluated partitioning with its optimized schedule summary.
#[derive(Debug, Clone)]
pub struct DesignPoint {
    /// Dataflow of each sub-accelerator.
    pub dataflows: Vec<DataflowKind>,
    pub pe_partition: Vec<u64>,
    pub bw_partition_mbps: Vec<u64>,
    pub feasible: bool,
    pub makespan: u64,
    pub energy: f64,
    /// Makespan times energy; zero for infeasible points.
    pub edp: f64,
    /// Endpoint designs give all resources to one dataflow.
    pub is_endpoint: bool,
}

impl DesignPoint {
    /// Stable descriptor such as `nvdla:128pe/4000mbps+shi:896pe/12000mbps`.
    pub fn descriptor(&self) -> String {
        self.dataflows
            .iter()
            .zip(self.pe_partition.iter().zip(self.bw_partition_mbps.iter()))
            .map(|(df, (pe, bw))| format!("{df}:{pe}pe/{bw}mbps"))
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Partition-search strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchStrategy {
    Exhaustive,
    Binary,
    Random,
}

impl SearchStrategy {
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "exhaustive" => Some(SearchStrategy::Exhaustive),
            "binary" => Some(SearchStrategy::Binary),
            "random" => Some(SearchStrategy::Random),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SearchStrategy::Exhaustive => "exhaustive",
            SearchStrategy::Binary => "binary",
            SearchStrategy::Random => "random",
        }
    }
}

/// Search configuration for `run_dse`.
#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub strategy: SearchStrategy,
    /// PE granularity; `None` defaults to `N_PE / 16`.
    pub g_pe: Option<u64>,
    /// Bandwidth granularity in MB/s; `None` defaults to `BW_G / 16`.
    pub g_bw_mbps: Option<u64>,
    /// Sample count for the random strategy.
    pub budget: u64,
    pub seed: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            strategy: SearchStrategy::Exhaustive,
            g_pe: None,
            g_bw_mbps: None,
            budget: 64,
            seed: 1,
        }
    }
}

/// Everything `run_dse` produces.
#[derive(Debug, Clone)]
pub struct DseResult {
    /// Every evaluated design, endpoints included, in deterministic order.
    pub points: Vec<DesignPoint>,
    /// Non-dominated feasible points sorted by makespan.
    pub pareto: Vec<DesignPoint>,
    /// Minimum-EDP feasible point.
    pub best: DesignPoint,
}

/// All compositions of `total` into `parts` positive multiples of
/// `granularity`, in lexicographic order.
///
/// Preconditions: `granularity` divides `total` and
/// `total / granularity >= parts`.
pub fn enumerate_partitions(total: u64, parts: usize, granularity: u64) -> Vec<Vec<u64>> {
    assert!(parts >= 1);
    assert!(granularity >= 1 && total % granularity == 0, "granularity must divide the total");
    let units = total / granularity;
    assert!(units >= parts as u64, "not enough units for every part");
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(parts);
    fn rec(units_left: u64, parts_left: usize, g: u64, current: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        if parts_left == 1 {
            current.push(units_left * g);
            out.push(current.clone());
            current.pop();
            return;
        }
        // leave at least one unit per remaining part
        for take in 1..=(units_left - parts_left as u64 + 1) {
            current.push(take * g);
            rec(units_left - take, parts_left - 1, g, current, out);
            current.pop();
        }
    }
    rec(units, parts, granularity, &mut current, &mut out);
    out
}

/// Schedules a fixed HDA and wraps the summary into a design point;
/// scheduler deadlocks become infeasible-marked points.
pub fn evaluate_hda(
    hda: &HdaConfig,
    workload: &Workload,
    params: &CostParams,
    options: &SchedulerOptions,
) -> DesignPoint {
    let dataflows: Vec<DataflowKind> = hda.subaccs.iter().map(|s| s.dataflow).collect();
    let pe: Vec<u64> = hda.subaccs.iter().map(|s| s.n_pe).collect();
    let bw: Vec<u64> = hda
        .subaccs
        .iter()
        .map(|s| (s.bw * params.clock_hz / 1.0e6).round() as u64)
        .collect();
    match schedule_workload(workload, hda, params, options) {
        Ok(s) => DesignPoint {
            dataflows,
            pe_partition: pe,
            bw_partition_mbps: bw,
            feasible: true,
            makespan: s.makespan,
            energy: s.total_energy,
            edp: s.edp(),
            is_endpoint: false,
        },
        Err(_) => DesignPoint {
            dataflows,
            pe_partition: pe,
            bw_partition_mbps: bw,
            feasible: false,
            makespan: 0,
            energy: 0.0,
            edp: 0.0,
            is_endpoint: false,
        },
    }
}

fn evaluate_partition(
    dataflows: &[DataflowKind],
    pe: &[u64],
    bw: &[u64],
    totals: Totals,
    workload: &Workload,
    params: &CostParams,
    options: &SchedulerOptions,
) -> DesignPoint {
    let hda = HdaConfig::from_partitions(dataflows, pe, bw, totals, params);
    evaluate_hda(&hda, workload, params, options)
}

fn default_granularity(total: u64) -> u64 {
    let g = total / 16;
    let mut g = g.max(1);
    while total % g != 0 {
        g -= 1;
    }
    g
}

/// Orders design points for best-EDP selection: feasible first, lowest
/// EDP, ties to the lexicographically smallest partition.
fn better_edp(a: &DesignPoint, b: &DesignPoint) -> bool {
    if a.feasible != b.feasible {
        return a.feasible;
    }
    if a.edp != b.edp {
        return a.edp < b.edp;
    }
    (&a.pe_partition, &a.bw_partition_mbps) < (&b.pe_partition, &b.bw_partition_mbps)
}

/// Sweeps PE x bandwidth partitionings for the given dataflows and returns
/// every evaluated point, the Pareto frontier, and the best-EDP design.
/// Single-dataflow FDA endpoints are always part of the evaluated set.
pub fn run_dse(
    dataflows: &[DataflowKind],
    totals: Totals,
    workload: &Workload,
    params: &CostParams,
    search: &SearchOptions,
    options: &SchedulerOptions,
) -> DseResult {
    assert!(!dataflows.is_empty());
    let n = dataflows.len();
    let mut params = params.clone();
    params.gb_capacity = totals.gb_capacity;

    let g_pe = search.g_pe.unwrap_or_else(|| default_granularity(totals.n_pe));
    let g_bw = search
        .g_bw_mbps
        .unwrap_or_else(|| default_granularity(totals.bw_mbps));
    assert!(totals.n_pe % g_pe == 0, "PE granularity must divide the total");
    assert!(totals.bw_mbps % g_bw == 0, "bandwidth granularity must divide the total");
    assert!(search.budget >= 1);

    let mut points = Vec::new();

    // FDA endpoints: all resources on a single dataflow.
    for df in dataflows {
        let mut p = evaluate_partition(
            &[*df],
            &[totals.n_pe],
            &[totals.bw_mbps],
            totals,
            workload,
            &params,
            options,
        );
        p.is_endpoint = true;
        points.push(p);
    }

    if n > 1 {
        let pe_parts = enumerate_partitions(totals.n_pe, n, g_pe);
        let bw_parts = enumerate_partitions(totals.bw_mbps, n, g_bw);
        match search.strategy {
            SearchStrategy::Exhaustive => {
                for pe in &pe_parts {
                    for bw in &bw_parts {
                        points.push(evaluate_partition(
                            dataflows, pe, bw, totals, workload, &params, options,
                        ));
                    }
                }
            }
            SearchStrategy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
                let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
                for _ in 0..search.budget {
                    let i = rng.gen_range(0..pe_parts.len());
                    let j = rng.gen_range(0..bw_parts.len());
                    if seen.insert((i, j)) {
                        points.push(evaluate_partition(
                            dataflows,
                            &pe_parts[i],
                            &bw_parts[j],
                            totals,
                            workload,
                            &params,
                            options,
                        ));
                    }
                }
            }
            SearchStrategy::Binary => {
                binary_search_partitions(
                    dataflows, totals, g_pe, g_bw, workload, &params, options, &mut points,
                );
            }
        }
    }

    let pareto = pareto_frontier(&points);
    let best = points
        .iter()
        .fold(None::<&DesignPoint>, |acc, p| match acc {
            None => Some(p),
            Some(b) => {
                if better_edp(p, b) {
                    Some(p)
                } else {
                    Some(b)
                }
            }
        })
        .expect("at least the endpoints were evaluated")
        .clone();
    DseResult {
        points,
        pareto,
        best,
    }
}

/// Coarse-to-fine sampling: evaluate the grid at the coarsest granularity,
/// then repeatedly halve the granularity and evaluate only candidates
/// within the previous step size of the current best, stopping at the
/// requested granularity. Every candidate stays on the final grid, so the
/// result is a subset of the exhaustive sweep.
#[allow(clippy::too_many_arguments)]
fn binary_search_partitions(
    dataflows: &[DataflowKind],
    totals: Totals,
    g_pe: u64,
    g_bw: u64,
    workload: &Workload,
    params: &CostParams,
    options: &SchedulerOptions,
    points: &mut Vec<DesignPoint>,
) {
    let n = dataflows.len();
    let coarsest = |total: u64, g: u64| -> u64 {
        let mut cur = g;
        while total % (cur * 2) == 0 && total / (cur * 2) >= n as u64 {
            cur *= 2;
        }
        cur
    };
    let mut cur_g_pe = coarsest(totals.n_pe, g_pe);
    let mut cur_g_bw = coarsest(totals.bw_mbps, g_bw);

    let mut seen: BTreeSet<(Vec<u64>, Vec<u64>)> = BTreeSet::new();
    let mut evaluate_set = |pe_set: &[Vec<u64>],
                            bw_set: &[Vec<u64>],
                            points: &mut Vec<DesignPoint>,
                            seen: &mut BTreeSet<(Vec<u64>, Vec<u64>)>| {
        for pe in pe_set {
            for bw in bw_set {
                if seen.insert((pe.clone(), bw.clone())) {
                    points.push(evaluate_partition(
                        dataflows, pe, bw, totals, workload, params, options,
                    ));
                }
            }
        }
    };

    let mut best: Option<(Vec<u64>, Vec<u64>)> = None;
    let mut update_best = |points: &[DesignPoint], best: &mut Option<(Vec<u64>, Vec<u64>)>| {
        let mut cur: Option<&DesignPoint> = None;
        for p in points.iter().filter(|p| !p.is_endpoint) {
            match cur {
                None => cur = Some(p),
                Some(b) => {
                    if better_edp(p, b) {
                        cur = Some(p)
                    }
                }
            }
        }
        if let Some(p) = cur {
            *best = Some((p.pe_partition.clone(), p.bw_partition_mbps.clone()));
        }
    };

    let pe0 = enumerate_partitions(totals.n_pe, n, cur_g_pe);
    let bw0 = enumerate_partitions(totals.bw_mbps, n, cur_g_bw);
    evaluate_set(&pe0, &bw0, points, &mut seen);
    update_best(points, &mut best);

    while cur_g_pe > g_pe || cur_g_bw > g_bw {
        let prev_g_pe = cur_g_pe;
        let prev_g_bw = cur_g_bw;
        if cur_g_pe > g_pe {
            cur_g_pe = (cur_g_pe / 2).max(g_pe);
            while totals.n_pe % cur_g_pe != 0 {
                cur_g_pe -= 1;
            }
        }
        if cur_g_bw > g_bw {
            cur_g_bw = (cur_g_bw / 2).max(g_bw);
            while totals.bw_mbps % cur_g_bw != 0 {
                cur_g_bw -= 1;
            }
        }
        let Some((best_pe, best_bw)) = best.clone() else { break };
        let near = |cands: Vec<Vec<u64>>, center: &[u64], radius: u64| -> Vec<Vec<u64>> {
            cands
                .into_iter()
                .filter(|c| {
                    c.iter()
                        .zip(center.iter())
                        .all(|(a, b)| a.abs_diff(*b) <= radius)
                })
                .collect()
        };
        let pe_set = near(
            enumerate_partitions(totals.n_pe, n, cur_g_pe),
            &best_pe,
            prev_g_pe,
        );
        let bw_set = near(
            enumerate_partitions(totals.bw_mbps, n, cur_g_bw),
            &best_bw,
            prev_g_bw,
        );
        evaluate_set(&pe_set, &bw_set, points, &mut seen);
        update_best(points, &mut best);
    }
}

/// Non-dominated subset in `(makespan, energy)`, sorted by makespan.
/// Exact duplicates collapse to a single representative.
pub fn pareto_frontier(points: &[DesignPoint]) -> Vec<DesignPoint> {
    let mut feasible: Vec<&DesignPoint> = points.iter().filter(|p| p.feasible).collect();
    feasible.sort_by(|a, b| {
        (a.makespan, a.energy, &a.pe_partition, &a.bw_partition_mbps)
            .partial_cmp(&(b.makespan, b.energy, &b.pe_partition, &b.bw_partition_mbps))
            .unwrap()
    });
    let mut out: Vec<DesignPoint> = Vec::new();
    let mut best_energy = f64::INFINITY;
    let mut last: Option<(u64, f64)> = None;
    for p in feasible {
        if last == Some((p.makespan, p.energy)) {
            continue; // duplicate objective vector
        }
        if p.energy < best_energy {
            out.push(p.clone());
            best_energy = p.energy;
            last = Some((p.makespan, p.energy));
        }
    }
    out
}

/// A monolithic fixed-dataflow accelerator with all resources.
pub fn fda_baseline(
    dataflow: DataflowKind,
    totals: Totals,
    workload: &Workload,
    params: &CostParams,
    options: &SchedulerOptions,
) -> DesignPoint {
    let mut params = params.clone();
    params.gb_capacity = totals.gb_capacity;
    let mut p = evaluate_partition(
        &[dataflow],
        &[totals.n_pe],
        &[totals.bw_mbps],
        totals,
        workload,
        &params,
        options,
    );
    p.is_endpoint = true;
    p
}

/// Scaled-out multi-FDA: `n_subaccs` identical sub-accelerators running
/// the same dataflow with evenly split resources, scheduled with the full
/// pipeline.
pub fn smfda_baseline(
    dataflow: DataflowKind,
    n_subaccs: usize,
    totals: Totals,
    workload: &Workload,
    params: &CostParams,
    options: &SchedulerOptions,
) -> DesignPoint {
    assert!(n_subaccs >= 1);
    assert!(
        totals.n_pe % n_subaccs as u64 == 0 && totals.bw_mbps % n_subaccs as u64 == 0,
        "totals must split evenly across sub-accelerators"
    );
    let mut params = params.clone();
    params.gb_capacity = totals.gb_capacity;
    let pe = vec![totals.n_pe / n_subaccs as u64; n_subaccs];
    let bw = vec![totals.bw_mbps / n_subaccs as u64; n_subaccs];
    let dataflows = vec![dataflow; n_subaccs];
    evaluate_partition(&dataflows, &pe, &bw, totals, workload, &params, options)
}

/// Modeled overheads of a reconfigurable monolithic accelerator.
#[derive(Debug, Clone, Copy)]
pub struct RdaOverheads {
    /// Per-layer energy multiplier for the reconfigurable fabric.
    pub energy_factor: f64,
    /// Cycles inserted between consecutive layers whose chosen dataflows
    /// differ.
    pub reconfig_cycles: u64,
}

impl Default for RdaOverheads {
    fn default() -> Self {
        RdaOverheads {
            energy_factor: 1.117,
            reconfig_cycles: 0,
        }
    }
}

/// Reconfigurable-dataflow baseline: a monolithic accelerator running
/// layers serially, each under its minimum-latency dataflow, with the
/// energy factor applied per layer and reconfiguration cycles charged
/// between layers that switch dataflows.
pub fn rda_baseline(
    dataflows: &[DataflowKind],
    totals: Totals,
    workload: &Workload,
    params: &CostParams,
    overheads: RdaOverheads,
) -> DesignPoint {
    assert!(!dataflows.is_empty());
    assert!(overheads.energy_factor >= 1.0);
    let mut params = params.clone();
    params.gb_capacity = totals.gb_capacity;
    let subs: Vec<SubAcceleratorConfig> = dataflows
        .iter()
        .map(|df| {
            SubAcceleratorConfig::new(
                *df,
                totals.n_pe,
                params.gbps_to_bytes_per_cycle(totals.bw_gbps()),
            )
        })
        .collect();
    let mut makespan = 0u64;
    let mut energy = 0.0f64;
    let mut prev_df: Option<DataflowKind> = None;
    for model in &workload.models {
        for layer in &model.layers {
            let input_resident = !layer.depends_on.is_empty();
            let mut best: Option<(u64, f64, DataflowKind)> = None;
            for sub in &subs {
                let c = evaluate_layer(layer, sub, &params, input_resident);
                let cand = (c.latency_cycles, c.energy, sub.dataflow);
                match best {
                    None => best = Some(cand),
                    Some(b) if cand.0 < b.0 => best = Some(cand),
                    _ => {}
                }
            }
            let (lat, e, df) = best.unwrap();
            if let Some(p) = prev_df {
                if p != df {
                    makespan += overheads.reconfig_cycles;
                }
            }
            prev_df = Some(df);
            makespan += lat;
            energy += e * overheads.energy_factor;
        }
    }
    DesignPoint {
        dataflows: dataflows.to_vec(),
        pe_partition: vec![totals.n_pe],
        bw_partition_mbps: vec![totals.bw_mbps],
        feasible: true,
        makespan,
        energy,
        edp: makespan as f64 * energy,
        is_endpoint: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::parse_workload_str;

    fn mixed_workload() -> Workload {
        parse_workload_str(
            r#"
[[model]]
name = "deep"
[[model.layer]]
op = "conv2d"
k = 128
c = 128
y = 9
x = 9
r = 3
s = 3
[[model.layer]]
op = "conv2d"
k = 128
c = 128
y = 7
x = 7
r = 3
s = 3

[[model]]
name = "shallow"
[[model.layer]]
op = "conv2d"
k = 4
c = 3
y = 66
x = 66
r = 3
s = 3
[[model.layer]]
op = "dwconv"
k = 4
c = 4
y = 64
x = 64
r = 3
s = 3
"#,
        )
        .unwrap()
    }

    fn tiny_totals() -> Totals {
        Totals {
            n_pe: 256,
            bw_mbps: 16_000,
            gb_capacity: 4 * 1024 * 1024,
        }
    }

    #[test]
    fn enumerate_partition_examples() {
        assert_eq!(
            enumerate_partitions(16, 2, 4),
            vec![vec![4, 12], vec![8, 8], vec![12, 4]]
        );
        assert_eq!(enumerate_partitions(16, 1, 4), vec![vec![16]]);
        let parts = enumerate_partitions(1024, 2, 64);
        assert_eq!(parts.len(), 15);
        assert!(parts.contains(&vec![128, 896]));
    }

    #[test]
    fn enumerate_partitions_three_way() {
        let parts = enumerate_partitions(8, 3, 2);
        // compositions of 4 units into 3 positive parts: C(3,2) = 3
        assert_eq!(parts, vec![vec![2, 2, 4], vec![2, 4, 2], vec![4, 2, 2]]);
    }

    fn dp(makespan: u64, energy: f64) -> DesignPoint {
        DesignPoint {
            dataflows: vec![DataflowKind::Nvdla],
            pe_partition: vec![makespan],
            bw_partition_mbps: vec![energy as u64],
            feasible: true,
            makespan,
            energy,
            edp: makespan as f64 * energy,
            is_endpoint: false,
        }
    }

    #[test]
    fn pareto_examples() {
        let pts = vec![dp(10, 5.0), dp(8, 7.0), dp(12, 4.0), dp(9, 9.0)];
        let front = pareto_frontier(&pts);
        let objs: Vec<(u64, f64)> = front.iter().map(|p| (p.makespan, p.energy)).collect();
        assert_eq!(objs, vec![(8, 7.0), (10, 5.0), (12, 4.0)]);

        let single = pareto_frontier(&[dp(5, 5.0)]);
        assert_eq!(single.len(), 1);

        let dup = pareto_frontier(&[dp(5, 5.0), dp(5, 5.0)]);
        assert_eq!(dup.len(), 1);
    }

    #[test]
    fn pareto_excludes_infeasible() {
        let mut bad = dp(1, 1.0);
        bad.feasible = false;
        let front = pareto_frontier(&[bad, dp(5, 5.0)]);
        assert_eq!(front.len(), 1);
        assert_eq!(front[0].makespan, 5);
    }

    #[test]
    fn pareto_matches_quadratic_oracle_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..50 {
            let n = rng.gen_range(1..=60);
            let pts: Vec<DesignPoint> = (0..n)
                .map(|_| dp(rng.gen_range(1..=30), rng.gen_range(1..=30) as f64))
                .collect();
            let fast: Vec<(u64, f64)> = pareto_frontier(&pts)
                .iter()
                .map(|p| (p.makespan, p.energy))
                .collect();
            // O(n^2) dominance oracle
            let mut oracle: Vec<(u64, f64)> = pts
                .iter()
                .filter(|p| {
                    !pts.iter().any(|q| {
                        (q.makespan <= p.makespan && q.energy <= p.energy)
                            && (q.makespan < p.makespan || q.energy < p.energy)
                    })
                })
                .map(|p| (p.makespan, p.energy))
                .collect();
            oracle.sort_by(|a, b| a.partial_cmp(b).unwrap());
            oracle.dedup();
            assert_eq!(fast, oracle);
        }
    }

    #[test]
    fn dse_exhaustive_counts_and_endpoints() {
        let wl = mixed_workload();
        let totals = tiny_totals();
        let search = SearchOptions {
            g_pe: Some(64),
            g_bw_mbps: Some(4000),
            ..Default::default()
        };
        let res = run_dse(
            &[DataflowKind::Nvdla, DataflowKind::Shi],
            totals,
            &wl,
            &CostParams::default(),
            &search,
            &SchedulerOptions::default(),
        );
        // 3 PE splits x 3 BW splits interior + 2 endpoints
        let interior = res.points.iter().filter(|p| !p.is_endpoint).count();
        assert_eq!(interior, 9);
        assert_eq!(res.points.iter().filter(|p| p.is_endpoint).count(), 2);
        // best-EDP point is on the frontier
        assert!(res
            .pareto
            .iter()
            .any(|p| p.makespan == res.best.makespan && p.energy == res.best.energy));
        for p in &res.points {
            if p.feasible {
                assert_eq!(p.edp, p.makespan as f64 * p.energy);
            }
        }
    }

    #[test]
    fn dse_random_is_deterministic_and_subset_of_exhaustive() {
        let wl = mixed_workload();
        let totals = tiny_totals();
        let base = SearchOptions {
            g_pe: Some(64),
            g_bw_mbps: Some(4000),
            ..Default::default()
        };
        let dataflows = [DataflowKind::Nvdla, DataflowKind::Shi];
        let params = CostParams::default();
        let sched = SchedulerOptions::default();
        let exhaustive = run_dse(&dataflows, totals, &wl, &params, &base, &sched);

        let rand_opts = SearchOptions {
            strategy: SearchStrategy::Random,
            budget: 5,
            seed: 42,
            ..base.clone()
        };
        let r1 = run_dse(&dataflows, totals, &wl, &params, &rand_opts, &sched);
        let r2 = run_dse(&dataflows, totals, &wl, &params, &rand_opts, &sched);
        let key = |p: &DesignPoint| (p.pe_partition.clone(), p.bw_partition_mbps.clone(), p.is_endpoint);
        assert_eq!(
            r1.points.iter().map(key).collect::<Vec<_>>(),
            r2.points.iter().map(key).collect::<Vec<_>>()
        );
        for p in r1.points.iter().map(key) {
            assert!(exhaustive.points.iter().map(key).any(|q| q == p));
        }

        let bin_opts = SearchOptions {
            strategy: SearchStrategy::Binary,
            ..base
        };
        let b = run_dse(&dataflows, totals, &wl, &params, &bin_opts, &sched);
        for p in b.points.iter().map(key) {
            assert!(exhaustive.points.iter().map(key).any(|q| q == p));
        }
        // binary evaluates strictly fewer interior candidates
        assert!(
            b.points.iter().filter(|p| !p.is_endpoint).count()
                <= exhaustive.points.iter().filter(|p| !p.is_endpoint).count()
        );
    }

    #[test]
    fn single_subacc_hda_equals_fda() {
        let wl = mixed_workload();
        let totals = tiny_totals();
        let params = CostParams::default();
        let sched = SchedulerOptions::default();
        let fda = fda_baseline(DataflowKind::Nvdla, totals, &wl, &params, &sched);
        let hda = HdaConfig::from_partitions(
            &[DataflowKind::Nvdla],
            &[totals.n_pe],
            &[totals.bw_mbps],
            totals,
            &params,
        );
        let point = evaluate_hda(&hda, &wl, &params, &sched);
        assert_eq!(point.makespan, fda.makespan);
        assert_eq!(point.energy, fda.energy);
    }

    #[test]
    fn one_way_smfda_equals_fda() {
        let wl = mixed_workload();
        let totals = tiny_totals();
        let params = CostParams::default();
        let sched = SchedulerOptions::default();
        let fda = fda_baseline(DataflowKind::Shi, totals, &wl, &params, &sched);
        let sm = smfda_baseline(DataflowKind::Shi, 1, totals, &wl, &params, &sched);
        assert_eq!(sm.makespan, fda.makespan);
        assert_eq!(sm.energy, fda.energy);
    }

    #[test]
    fn rda_lower_bounds_fda_latency_with_zero_overheads() {
        let wl = mixed_workload();
        let totals = tiny_totals();
        let params = CostParams::default();
        let sched = SchedulerOptions::default();
        let rda = rda_baseline(
            &DataflowKind::ALL,
            totals,
            &wl,
            &params,
            RdaOverheads {
                energy_factor: 1.0,
                reconfig_cycles: 0,
            },
        );
        for df in DataflowKind::ALL {
            let fda = fda_baseline(df, totals, &wl, &params, &sched);
            assert!(
                rda.makespan <= fda.makespan,
                "rda {} vs {} fda {}",
                rda.makespan,
                df,
                fda.makespan
            );
        }
    }

    #[test]
    fn rda_single_layer_is_best_fda_times_factor() {
        let wl = parse_workload_str(
            r#"
[[model]]
name = "one"
[[model.layer]]
op = "conv2d"
k = 64
c = 64
y = 16
x = 16
r = 3
s = 3
"#,
        )
        .unwrap();
        let totals = tiny_totals();
        let params = CostParams::default();
        let rda = rda_baseline(&DataflowKind::ALL, totals, &wl, &params, RdaOverheads::default());
        let per_layer: Vec<(u64, f64)> = DataflowKind::ALL
            .iter()
            .map(|df| {
                let sub = SubAcceleratorConfig::new(
                    *df,
                    totals.n_pe,
                    params.gbps_to_bytes_per_cycle(totals.bw_gbps()),
                );
                let c = evaluate_layer(wl.layer(crate::workload::LayerId(0)), &sub, &params, false);
                (c.latency_cycles, c.energy)
            })
            .collect();
        let best = per_layer.iter().min_by_key(|(l, _)| *l).unwrap();
        assert_eq!(rda.makespan, best.0);
        assert!((rda.energy - best.1 * 1.117).abs() < 1e-6);
    }

    #[test]
    fn infeasible_capacity_marks_point() {
        let wl = mixed_workload();
        let mut totals = tiny_totals();
        totals.gb_capacity = 4; // nothing fits
        let params = CostParams::default();
        let point = evaluate_hda(
            &HdaConfig::from_partitions(
                &[DataflowKind::Nvdla],
                &[totals.n_pe],
                &[totals.bw_mbps],
                totals,
                &params,
            ),
            &wl,
            &{
                let mut p = params.clone();
                p.gb_capacity = totals.gb_capacity;
                p
            },
            &SchedulerOptions::default(),
        );
        assert!(!point.feasible);
        assert!(pareto_frontier(&[point]).is_empty());
    }
}
