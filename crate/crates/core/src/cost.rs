//! Analytical per-layer latency and energy estimation.
//!
//! The model follows a reuse-based methodology: the dataflow's stationary
//! tensor crosses the NoC once, non-stationary tensors carry per-dataflow
//! refetch multipliers derived from the spatial tiling, and double
//! buffering overlaps data movement with compute so per-layer latency is
//! the maximum of compute cycles and NoC transfer cycles.

use serde::{Deserialize, Serialize};

use crate::dataflow::{
    builtin_dataflow, spatial_allocation, Dataflow, DataflowKind, Dim, LoopDim, Mapping, ALL_DIMS,
};
use crate::workload::{Layer, LayerId, OpKind};

/// One fixed-dataflow partition of an HDA: dataflow style, PE count, and
/// dedicated NoC bandwidth share.
#[derive(Debug, Clone)]
pub struct SubAcceleratorConfig {
    pub dataflow: DataflowKind,
    pub n_pe: u64,
    /// Bytes per cycle after clock conversion.
    pub bw: f64,
    /// Local (per-sub-accelerator) buffer bytes; informational.
    pub local_buf: u64,
}

impl SubAcceleratorConfig {
    pub fn new(dataflow: DataflowKind, n_pe: u64, bw: f64) -> Self {
        assert!(n_pe >= 1, "sub-accelerator needs at least one PE");
        assert!(bw > 0.0, "sub-accelerator needs positive bandwidth");
        SubAcceleratorConfig {
            dataflow,
            n_pe,
            bw,
            local_buf: 64 * 1024,
        }
    }

    pub fn descriptor(&self) -> Dataflow {
        builtin_dataflow(self.dataflow)
    }
}

/// Energy constants (relative units per element), element width, clock,
/// context-change penalties, and the global buffer capacity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CostParams {
    pub e_mac: f64,
    pub e_l1: f64,
    pub e_gb: f64,
    pub e_dram: f64,
    pub bytes_per_element: u64,
    /// Clock in Hz; converts GB/s bandwidth figures to bytes/cycle.
    pub clock_hz: f64,
    /// Latency penalty when a layer follows a same-model layer that ran
    /// under a different dataflow (data-layout rearrangement).
    pub ctx_latency: u64,
    pub ctx_energy: f64,
    /// Global scratchpad capacity in bytes.
    pub gb_capacity: u64,
    /// Count filter-weight DRAM traffic once per model across batch
    /// copies instead of once per instance.
    #[serde(default)]
    pub share_batch_weights: bool,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            e_mac: 1.0,
            e_l1: 1.0,
            e_gb: 6.0,
            e_dram: 200.0,
            bytes_per_element: 1,
            clock_hz: 1.0e9,
            ctx_latency: 0,
            ctx_energy: 0.0,
            gb_capacity: 4 * 1024 * 1024,
            share_batch_weights: false,
        }
    }
}

impl CostParams {
    /// Non-fatal sanity warnings (e.g. inverted memory-hierarchy costs).
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.e_dram < self.e_gb {
            w.push(format!(
                "e_dram ({}) is below e_gb ({}); DRAM access is usually costlier",
                self.e_dram, self.e_gb
            ));
        }
        if self.e_gb < self.e_l1 {
            w.push(format!(
                "e_gb ({}) is below e_l1 ({}); global buffer access is usually costlier",
                self.e_gb, self.e_l1
            ));
        }
        w
    }

    /// Converts a GB/s figure to bytes per cycle at the configured clock.
    pub fn gbps_to_bytes_per_cycle(&self, gbps: f64) -> f64 {
        gbps * 1.0e9 / self.clock_hz
    }
}

/// Per-tensor NoC traffic in elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NocTraffic {
    pub weights: u64,
    pub inputs: u64,
    pub outputs: u64,
}

impl NocTraffic {
    pub fn total(&self) -> u64 {
        self.weights + self.inputs + self.outputs
    }
}

/// Full analytic cost of one layer on one sub-accelerator.
#[derive(Debug, Clone)]
pub struct LayerCost {
    pub layer_id: LayerId,
    pub compute_cycles: u64,
    pub noc: NocTraffic,
    pub dram_traffic: u64,
    pub latency_cycles: u64,
    pub energy: f64,
    pub utilization: f64,
}

impl LayerCost {
    pub fn edp(&self) -> f64 {
        self.latency_cycles as f64 * self.energy
    }
}

/// Cycles to drain the layer's MAC wavefronts through the mapping.
///
/// Spatial dimensions contribute `ceil(extent / p)` temporal steps, the
/// remaining loop dimensions their full effective extents. Equals
/// `mac_count / used_pes` when the extents divide evenly; element-wise
/// layers perform no MACs.
pub fn compute_cycles(mapping: &Mapping, layer: &Layer) -> u64 {
    if layer.op == OpKind::Elemwise {
        return 0;
    }
    let df = builtin_dataflow(mapping.dataflow);
    let d1: LoopDim = df.spatial_dims[0].into();
    let d2: LoopDim = df.spatial_dims[1].into();
    let e1 = crate::dataflow::effective_extent(d1, layer, &df);
    let e2 = crate::dataflow::effective_extent(d2, layer, &df);
    let mut cycles = e1.div_ceil(mapping.p1) * e2.div_ceil(mapping.p2);
    for dim in ALL_DIMS {
        if dim != d1 && dim != d2 {
            cycles *= crate::dataflow::effective_extent(dim, layer, &df);
        }
    }
    cycles
}

/// Accumulation depth across input channels: depth-wise and element-wise
/// layers never accumulate partial sums across C.
fn accumulation_depth(layer: &Layer) -> u64 {
    match layer.op {
        OpKind::Dwconv | OpKind::Elemwise => 1,
        _ => layer.c,
    }
}

/// Per-tensor NoC traffic for one layer under a mapping.
///
/// The stationary tensor crosses the NoC once; the other tensors pay
/// tile-refetch multipliers specific to the dataflow style.
pub fn noc_traffic(mapping: &Mapping, layer: &Layer) -> NocTraffic {
    let (w, i, o) = layer.tensor_sizes();
    if layer.op == OpKind::Elemwise {
        return NocTraffic {
            weights: 0,
            inputs: i,
            outputs: o,
        };
    }
    let (yo, xo) = layer.output_dims();
    let k_eff = if layer.op == OpKind::Dwconv {
        layer.channel_multiplier()
    } else {
        layer.k
    };
    let acc_c = accumulation_depth(layer);
    match mapping.dataflow {
        DataflowKind::Nvdla => NocTraffic {
            weights: w,
            inputs: i * k_eff.div_ceil(mapping.p1),
            // read-modify-write per input-channel tile beyond the
            // spatially reduced group
            outputs: o * (2 * acc_c.div_ceil(mapping.p2) - 1),
        },
        DataflowKind::Shi => {
            let tiles = yo.div_ceil(mapping.p1) * xo.div_ceil(mapping.p2);
            // halo-inclusive input tile per (output-channel, input-channel)
            // pair; depth-wise pairs collapse k_eff * C to K
            let tile_in = (mapping.p1 * layer.stride + layer.r - layer.stride)
                * (mapping.p2 * layer.stride + layer.s - layer.stride);
            NocTraffic {
                weights: w * tiles,
                inputs: tiles * k_eff * layer.c * tile_in,
                outputs: o,
            }
        }
        DataflowKind::Eye => NocTraffic {
            weights: w * yo.div_ceil(mapping.p1),
            inputs: i * k_eff,
            outputs: o * (2 * acc_c - 1),
        },
    }
}

/// DRAM traffic in elements for a standalone layer evaluation.
///
/// Weights always come from DRAM; inputs unless the producer's output is
/// still resident in the global buffer; outputs spill to DRAM only when
/// they overflow the global buffer at commit time.
pub fn dram_traffic(layer: &Layer, input_resident: bool, params: &CostParams) -> u64 {
    let (w, i, o) = layer.tensor_sizes();
    let mut total = w;
    if !input_resident {
        total += i;
    }
    if o * params.bytes_per_element > params.gb_capacity {
        total += o;
    }
    total
}

/// Double-buffered per-tile working set in the global buffer.
///
/// Slices follow the spatial allocation: unrolled dimensions contribute
/// their unroll factors, temporal channel dimensions stream one value at
/// a time, and filter extents stay resident. Input slices include the
/// stride/filter halo.
pub fn buffer_requirement(mapping: &Mapping, layer: &Layer, params: &CostParams) -> u64 {
    let df = builtin_dataflow(mapping.dataflow);
    let p = |d: Dim| -> Option<u64> {
        if df.spatial_dims[0] == d {
            Some(mapping.p1)
        } else if df.spatial_dims[1] == d {
            Some(mapping.p2)
        } else {
            None
        }
    };
    let w_slice = if layer.op == OpKind::Elemwise {
        0
    } else {
        p(Dim::K).unwrap_or(1) * p(Dim::C).unwrap_or(1) * p(Dim::R).unwrap_or(layer.r) * layer.s
    };
    let y_need = match p(Dim::Yo) {
        Some(p1) => p1 * layer.stride + layer.r - layer.stride,
        None => layer.r,
    };
    let x_need = match p(Dim::Xo) {
        Some(p2) => p2 * layer.stride + layer.s - layer.stride,
        None => layer.s,
    };
    let i_slice = p(Dim::C).unwrap_or(1) * y_need * x_need;
    let o_slice = p(Dim::K).unwrap_or(1) * p(Dim::Yo).unwrap_or(1) * p(Dim::Xo).unwrap_or(1);
    2 * (w_slice + i_slice + o_slice) * params.bytes_per_element
}

/// Breakdown used by both the public evaluator and the schedule simulator,
/// which decides residency and output spill exactly.
pub(crate) struct CostParts {
    pub mapping: Mapping,
    pub compute_cycles: u64,
    pub noc: NocTraffic,
    pub noc_cycles: u64,
    pub w_elems: u64,
    pub i_elems: u64,
    pub o_elems: u64,
    pub work_bytes: u64,
}

pub(crate) fn cost_parts(layer: &Layer, sub: &SubAcceleratorConfig, params: &CostParams) -> CostParts {
    let df = sub.descriptor();
    let mapping = spatial_allocation(&df, layer, sub.n_pe);
    let compute = compute_cycles(&mapping, layer);
    let noc = noc_traffic(&mapping, layer);
    let noc_bytes = noc.total() * params.bytes_per_element;
    let noc_cycles = (noc_bytes as f64 / sub.bw).ceil() as u64;
    let (w, i, o) = layer.tensor_sizes();
    let work_bytes = buffer_requirement(&mapping, layer, params);
    CostParts {
        mapping,
        compute_cycles: compute,
        noc,
        noc_cycles,
        w_elems: w,
        i_elems: i,
        o_elems: o,
        work_bytes,
    }
}

pub(crate) fn energy_of(
    layer: &Layer,
    noc: &NocTraffic,
    dram_elems: u64,
    params: &CostParams,
) -> f64 {
    let macs = layer.mac_count() as f64;
    // 3 operand reads + 1 result write per MAC at the PE-local level
    macs * params.e_mac
        + 4.0 * macs * params.e_l1
        + noc.total() as f64 * params.e_gb
        + dram_elems as f64 * params.e_dram
}

/// Evaluates one layer on one sub-accelerator.
///
/// Double buffering overlaps communication with compute, so latency is
/// the larger of compute cycles and NoC transfer cycles.
pub fn evaluate_layer(
    layer: &Layer,
    sub: &SubAcceleratorConfig,
    params: &CostParams,
    input_resident: bool,
) -> LayerCost {
    let parts = cost_parts(layer, sub, params);
    let dram = dram_traffic(layer, input_resident, params);
    let latency = parts.compute_cycles.max(parts.noc_cycles);
    LayerCost {
        layer_id: layer.id,
        compute_cycles: parts.compute_cycles,
        noc: parts.noc,
        dram_traffic: dram,
        latency_cycles: latency,
        energy: energy_of(layer, &parts.noc, dram, params),
        utilization: parts.mapping.utilization(sub.n_pe),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::builtin_dataflow;

    fn layer(op: OpKind, k: u64, c: u64, y: u64, x: u64, r: u64, s: u64, stride: u64) -> Layer {
        Layer {
            id: LayerId(0),
            name: "t".into(),
            model: 0,
            op,
            k,
            c,
            y,
            x,
            r,
            s,
            stride,
            upscale: 1,
            depends_on: vec![],
        }
    }

    fn map(kind: DataflowKind, l: &Layer, n_pe: u64) -> Mapping {
        spatial_allocation(&builtin_dataflow(kind), l, n_pe)
    }

    #[test]
    fn compute_cycles_examples() {
        // nvdla p1=64 on K, p2=3 on C: 1*1*112*112*7*7
        let l = layer(OpKind::Conv2d, 64, 3, 230, 230, 7, 7, 2);
        let m = map(DataflowKind::Nvdla, &l, 1024);
        assert_eq!((m.p1, m.p2), (64, 3));
        assert_eq!(compute_cycles(&m, &l), 614_656);
        assert_eq!(l.mac_count() / m.used_pes, 614_656);

        // single PE: serial execution
        for kind in DataflowKind::ALL {
            let m = map(kind, &l, 1);
            assert_eq!(compute_cycles(&m, &l), l.mac_count());
        }
        let dw = layer(OpKind::Dwconv, 32, 32, 16, 16, 3, 3, 1);
        for kind in DataflowKind::ALL {
            let m = map(kind, &dw, 1);
            assert_eq!(compute_cycles(&m, &dw), dw.mac_count());
        }

        // shi p1=9, p2=112 on a 112x112 output with unit channels/filter
        let l = layer(OpKind::Conv2d, 1, 1, 112, 112, 1, 1, 1);
        let m = map(DataflowKind::Shi, &l, 1024);
        assert_eq!((m.p1, m.p2), (9, 112));
        assert_eq!(compute_cycles(&m, &l), 13); // ceil(112/9)
    }

    #[test]
    fn noc_traffic_examples() {
        // nvdla fully unrolled channels: single pass for I and O
        let l = layer(OpKind::Conv2d, 64, 3, 230, 230, 7, 7, 2);
        let m = map(DataflowKind::Nvdla, &l, 1024);
        let t = noc_traffic(&m, &l);
        let (w, i, o) = l.tensor_sizes();
        assert_eq!(t.weights, w);
        assert_eq!(t.inputs, i); // ceil(64/64) = 1
        assert_eq!(t.outputs, o); // 2*ceil(3/3) - 1 = 1

        // shi single tile: weights and outputs each cross once
        let l = layer(OpKind::Conv2d, 4, 4, 10, 10, 3, 3, 1);
        let m = Mapping {
            dataflow: DataflowKind::Shi,
            layer_id: l.id,
            p1: 8,
            p2: 8,
            used_pes: 64,
        };
        let t = noc_traffic(&m, &l);
        let (w, _i, o) = l.tensor_sizes();
        assert_eq!(t.weights, w);
        assert_eq!(t.outputs, o);

        // shi halo overlap: 4 tiles of 4x4 input each
        let l = layer(OpKind::Conv2d, 1, 1, 6, 6, 3, 3, 1);
        assert_eq!(l.output_dims(), (4, 4));
        let m = Mapping {
            dataflow: DataflowKind::Shi,
            layer_id: l.id,
            p1: 2,
            p2: 2,
            used_pes: 4,
        };
        let t = noc_traffic(&m, &l);
        assert_eq!(t.inputs, 64);
        assert_eq!(l.tensor_sizes().1, 36);
    }

    #[test]
    fn eye_traffic_collapses_for_single_channel() {
        let l = layer(OpKind::Conv2d, 2, 1, 8, 8, 3, 3, 1);
        let m = map(DataflowKind::Eye, &l, 64);
        let t = noc_traffic(&m, &l);
        let (_, i, o) = l.tensor_sizes();
        assert_eq!(t.outputs, o); // 2C-1 = 1
        assert_eq!(t.inputs, i * l.k);
    }

    #[test]
    fn elemwise_traffic_is_pass_through() {
        let l = layer(OpKind::Elemwise, 16, 16, 8, 8, 1, 1, 1);
        for kind in DataflowKind::ALL {
            let m = map(kind, &l, 64);
            let t = noc_traffic(&m, &l);
            assert_eq!(t.weights, 0);
            assert_eq!(t.inputs, 16 * 64);
            assert_eq!(t.outputs, 16 * 64);
            assert_eq!(compute_cycles(&m, &l), 0);
        }
    }

    #[test]
    fn dram_traffic_rules() {
        let params = CostParams::default();
        let l = layer(OpKind::Conv2d, 4, 3, 10, 10, 3, 3, 1);
        let (w, i, _o) = l.tensor_sizes();
        assert_eq!(dram_traffic(&l, false, &params), w + i);
        assert_eq!(dram_traffic(&l, true, &params), w);

        let mut tight = params.clone();
        tight.gb_capacity = 8;
        let (_, _, o) = l.tensor_sizes();
        assert_eq!(dram_traffic(&l, true, &tight), w + o);
    }

    #[test]
    fn evaluate_layer_latency_is_bottleneck_max() {
        let params = CostParams::default();
        // compute-bound
        let l = layer(OpKind::Conv2d, 64, 3, 230, 230, 7, 7, 2);
        let sub = SubAcceleratorConfig::new(DataflowKind::Nvdla, 1024, 1024.0);
        let c = evaluate_layer(&l, &sub, &params, false);
        assert_eq!(c.latency_cycles, c.compute_cycles);
        assert_eq!(c.latency_cycles, 614_656);

        // bandwidth-bound: elemwise has zero compute
        let l = layer(OpKind::Elemwise, 16, 16, 8, 8, 1, 1, 1);
        let sub = SubAcceleratorConfig::new(DataflowKind::Shi, 64, 16.0);
        let c = evaluate_layer(&l, &sub, &params, false);
        assert_eq!(c.compute_cycles, 0);
        assert_eq!(c.latency_cycles, (c.noc.total() as f64 / 16.0).ceil() as u64);
        // no MAC/L1 terms
        let expected = c.noc.total() as f64 * params.e_gb + c.dram_traffic as f64 * params.e_dram;
        assert!((c.energy - expected).abs() < 1e-9);
    }

    #[test]
    fn buffer_requirement_examples() {
        let params = CostParams::default();
        // unit layer on a single PE: 2 * 3 * bytes
        let l = layer(OpKind::Conv2d, 1, 1, 1, 1, 1, 1, 1);
        for kind in DataflowKind::ALL {
            let m = map(kind, &l, 1);
            assert_eq!(buffer_requirement(&m, &l, &params), 6);
        }
        // shi 2x2 tile with 3x3 filter: 2 * (9 + 16 + 4)
        let l = layer(OpKind::Conv2d, 1, 1, 6, 6, 3, 3, 1);
        let m = Mapping {
            dataflow: DataflowKind::Shi,
            layer_id: l.id,
            p1: 2,
            p2: 2,
            used_pes: 4,
        };
        assert_eq!(buffer_requirement(&m, &l, &params), 2 * (9 + 16 + 4));
        // nvdla weight slice p1*p2*R*S
        let l = layer(OpKind::Conv2d, 64, 3, 230, 230, 7, 7, 2);
        let m = map(DataflowKind::Nvdla, &l, 1024);
        let w_slice = 64 * 3 * 49;
        let i_slice = 3 * 7 * 7;
        let o_slice = 64;
        assert_eq!(
            buffer_requirement(&m, &l, &params),
            2 * (w_slice + i_slice + o_slice)
        );
    }

    #[test]
    fn energy_invariant_to_bandwidth_latency_invariant_to_energy_constants() {
        let l = layer(OpKind::Conv2d, 32, 16, 40, 40, 3, 3, 1);
        let params = CostParams::default();
        let a = evaluate_layer(
            &l,
            &SubAcceleratorConfig::new(DataflowKind::Shi, 256, 4.0),
            &params,
            false,
        );
        let b = evaluate_layer(
            &l,
            &SubAcceleratorConfig::new(DataflowKind::Shi, 256, 64.0),
            &params,
            false,
        );
        assert_eq!(a.energy, b.energy);
        assert!(b.latency_cycles <= a.latency_cycles);

        let mut expensive = params.clone();
        expensive.e_mac = 9.0;
        expensive.e_dram = 1000.0;
        let c = evaluate_layer(
            &l,
            &SubAcceleratorConfig::new(DataflowKind::Shi, 256, 4.0),
            &expensive,
            false,
        );
        assert_eq!(a.latency_cycles, c.latency_cycles);
        assert!(c.energy > a.energy);
    }

    /// The qualitative preference inversion: channel-parallel dataflows win
    /// deep-channel layers, activation-parallel dataflows win shallow and
    /// depth-wise layers.
    #[test]
    fn dataflow_preference_inversion() {
        let params = CostParams::default();
        let nvdla = SubAcceleratorConfig::new(DataflowKind::Nvdla, 256, 32.0);
        let shi = SubAcceleratorConfig::new(DataflowKind::Shi, 256, 32.0);

        let deep = layer(OpKind::Conv2d, 512, 512, 9, 9, 3, 3, 1);
        assert_eq!(deep.output_dims(), (7, 7));
        let e_n = evaluate_layer(&deep, &nvdla, &params, false).edp();
        let e_s = evaluate_layer(&deep, &shi, &params, false).edp();
        assert!(e_n < e_s, "deep: nvdla {e_n} vs shi {e_s}");

        let shallow = layer(OpKind::Conv2d, 3, 3, 114, 114, 3, 3, 1);
        let e_n = evaluate_layer(&shallow, &nvdla, &params, false).edp();
        let e_s = evaluate_layer(&shallow, &shi, &params, false).edp();
        assert!(e_s < e_n, "shallow: shi {e_s} vs nvdla {e_n}");

        let dw = layer(OpKind::Dwconv, 32, 32, 114, 114, 3, 3, 1);
        let e_n = evaluate_layer(&dw, &nvdla, &params, false).edp();
        let e_s = evaluate_layer(&dw, &shi, &params, false).edp();
        assert!(e_s < e_n, "dwconv: shi {e_s} vs nvdla {e_n}");
    }

    #[test]
    fn roofline_and_monotonicity_randomized() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let params = CostParams::default();
        for _ in 0..2000 {
            let k = rng.gen_range(1..=128);
            let c = rng.gen_range(1..=128);
            let r = rng.gen_range(1..=5);
            let s = rng.gen_range(1..=5);
            let y = rng.gen_range(r..=r + 60);
            let x = rng.gen_range(s..=s + 60);
            let stride = rng.gen_range(1..=r.min(s));
            let l = layer(OpKind::Conv2d, k, c, y, x, r, s, stride);
            let kind = DataflowKind::ALL[rng.gen_range(0..3)];
            let n_pe = rng.gen_range(1..=2048);
            let bw = rng.gen_range(1..=64) as f64;
            let sub = SubAcceleratorConfig::new(kind, n_pe, bw);
            let cost = evaluate_layer(&l, &sub, &params, rng.gen_bool(0.5));
            assert!(cost.utilization > 0.0 && cost.utilization <= 1.0);
            assert!(cost.latency_cycles as f64 >= l.mac_count() as f64 / n_pe as f64);
            assert!(cost.latency_cycles >= cost.compute_cycles);

            let wide = SubAcceleratorConfig::new(kind, n_pe, 2.0 * bw);
            let cost2 = evaluate_layer(&l, &wide, &params, false);
            assert!(cost2.latency_cycles <= cost.latency_cycles);

            let more = SubAcceleratorConfig::new(kind, 2 * n_pe, bw);
            let cost3 = evaluate_layer(&l, &more, &params, false);
            assert!(cost3.compute_cycles <= cost.compute_cycles);
        }
    }
}
