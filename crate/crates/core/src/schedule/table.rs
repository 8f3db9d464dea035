//! Precomputed per-(layer, sub-accelerator) cost table shared by the
//! simulator, the rebalance loop, and the post-processor so that repeated
//! re-simulation never re-derives mappings or traffic.

use crate::cost::{cost_parts, CostParams};
use crate::dse::HdaConfig;
use crate::workload::{LayerId, Workload};

#[derive(Debug, Clone)]
pub(crate) struct LayerSubCost {
    pub compute: u64,
    pub noc_cycles: u64,
    /// MAC + local-buffer + NoC energy; DRAM terms are added by the
    /// simulator once residency is known.
    pub base_energy: f64,
    pub work_bytes: u64,
    pub utilization: f64,
}

impl LayerSubCost {
    pub fn latency(&self) -> u64 {
        self.compute.max(self.noc_cycles)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct CostTable {
    pub n_subs: usize,
    costs: Vec<LayerSubCost>,
    /// Per-layer tensor footprints in elements, identical across subs.
    pub tensors: Vec<(u64, u64, u64)>,
    pub e_dram: f64,
    pub gb_capacity: u64,
}

impl CostTable {
    pub fn build(workload: &Workload, hda: &HdaConfig, params: &CostParams) -> Self {
        let n_subs = hda.subaccs.len();
        let mut costs = Vec::with_capacity(workload.layer_count() * n_subs);
        let mut tensors = Vec::with_capacity(workload.layer_count());
        for layer in workload.layers() {
            tensors.push(layer.tensor_sizes());
            let macs = layer.mac_count() as f64;
            for sub in &hda.subaccs {
                let parts = cost_parts(layer, sub, params);
                costs.push(LayerSubCost {
                    compute: parts.compute_cycles,
                    noc_cycles: parts.noc_cycles,
                    base_energy: macs * (params.e_mac + 4.0 * params.e_l1)
                        + parts.noc.total() as f64 * params.e_gb,
                    work_bytes: parts.work_bytes,
                    utilization: parts.mapping.utilization(sub.n_pe),
                });
            }
        }
        CostTable {
            n_subs,
            costs,
            tensors,
            e_dram: params.e_dram,
            gb_capacity: params.gb_capacity,
        }
    }

    pub fn get(&self, layer: LayerId, sub: usize) -> &LayerSubCost {
        &self.costs[layer.index() * self.n_subs + sub]
    }

    /// Per-layer metric value assuming resident inputs, mirroring the
    /// estimate used by the greedy assignment.
    pub fn assign_metric(&self, layer: LayerId, sub: usize, metric: super::Metric, bpe: u64) -> f64 {
        let c = self.get(layer, sub);
        let (w, _i, o) = self.tensors[layer.index()];
        let mut dram = w;
        if o * bpe > self.gb_capacity {
            dram += o;
        }
        let energy = c.base_energy + dram as f64 * self.e_dram;
        match metric {
            super::Metric::Latency => c.latency() as f64,
            super::Metric::Energy => energy,
            super::Metric::Edp => c.latency() as f64 * energy,
        }
    }
}

/// Test-only hook: build a table from raw per-(layer, sub) latencies with
/// no traffic, memory, or energy effects. Lets timeline tests pin exact
/// durations independent of the cost model.
#[cfg(test)]
pub(crate) fn synthetic_table(latencies: &[Vec<u64>]) -> CostTable {
    let n_subs = latencies[0].len();
    let mut costs = Vec::new();
    for row in latencies {
        assert_eq!(row.len(), n_subs);
        for &lat in row {
            costs.push(LayerSubCost {
                compute: lat,
                noc_cycles: 0,
                base_energy: lat as f64,
                work_bytes: 0,
                utilization: 1.0,
            });
        }
    }
    CostTable {
        n_subs,
        costs,
        tensors: vec![(0, 0, 0); latencies.len()],
        e_dram: 0.0,
        gb_capacity: u64::MAX,
    }
}
