//! Dataflow descriptors and mapping construction.
//!
//! A dataflow fixes the loop ordering and the two spatially unrolled
//! dimensions of a layer's loop nest; instantiating it for a concrete
//! layer and PE count yields a mapping.

use serde::{Deserialize, Serialize};

use crate::workload::{Layer, OpKind};

/// Loop dimensions eligible for spatial unrolling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    K,
    C,
    Yo,
    Xo,
    R,
}

/// All temporal/spatial loop dimensions of a layer.
pub const ALL_DIMS: [LoopDim; 6] = [
    LoopDim::K,
    LoopDim::C,
    LoopDim::Yo,
    LoopDim::Xo,
    LoopDim::R,
    LoopDim::S,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoopDim {
    K,
    C,
    Yo,
    Xo,
    R,
    S,
}

impl From<Dim> for LoopDim {
    fn from(d: Dim) -> Self {
        match d {
            Dim::K => LoopDim::K,
            Dim::C => LoopDim::C,
            Dim::Yo => LoopDim::Yo,
            Dim::Xo => LoopDim::Xo,
            Dim::R => LoopDim::R,
        }
    }
}

/// Which operand is held in place across temporal iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stationary {
    Weight,
    Output,
    Row,
}

/// The three built-in dataflow styles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataflowKind {
    /// Output-stationary, unrolls output rows and columns.
    Shi,
    /// Weight-stationary, unrolls output and input channels with spatial
    /// accumulation of partial sums across input channels.
    Nvdla,
    /// Row-stationary, unrolls output rows and filter rows.
    Eye,
}

impl DataflowKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            DataflowKind::Shi => "shi",
            DataflowKind::Nvdla => "nvdla",
            DataflowKind::Eye => "eye",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "shi" => Some(DataflowKind::Shi),
            "nvdla" => Some(DataflowKind::Nvdla),
            "eye" => Some(DataflowKind::Eye),
            _ => None,
        }
    }

    pub const ALL: [DataflowKind; 3] = [DataflowKind::Nvdla, DataflowKind::Shi, DataflowKind::Eye];
}

impl std::fmt::Display for DataflowKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A dataflow: ordered spatial dimensions plus reuse discipline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataflow {
    pub name: String,
    /// The two spatially unrolled dimensions, fill order `[d1, d2]`
    /// with `d2` filled first.
    pub spatial_dims: [Dim; 2],
    pub stationary: Stationary,
    /// True iff partial sums are accumulated spatially across input
    /// channels. Only meaningful when `C` is a spatial dimension.
    pub spatial_reduce_c: bool,
    pub kind: DataflowKind,
}

/// Returns the descriptor of a built-in dataflow.
pub fn builtin_dataflow(kind: DataflowKind) -> Dataflow {
    match kind {
        DataflowKind::Shi => Dataflow {
            name: "shi".into(),
            spatial_dims: [Dim::Yo, Dim::Xo],
            stationary: Stationary::Output,
            spatial_reduce_c: false,
            kind,
        },
        DataflowKind::Nvdla => Dataflow {
            name: "nvdla".into(),
            spatial_dims: [Dim::K, Dim::C],
            stationary: Stationary::Weight,
            spatial_reduce_c: true,
            kind,
        },
        DataflowKind::Eye => Dataflow {
            name: "eye".into(),
            spatial_dims: [Dim::Yo, Dim::R],
            stationary: Stationary::Row,
            spatial_reduce_c: false,
            kind,
        },
    }
}

/// A dataflow instantiated for one layer on `used_pes` PEs.
#[derive(Debug, Clone)]
pub struct Mapping {
    pub dataflow: DataflowKind,
    pub layer_id: crate::workload::LayerId,
    /// Unroll factor along `spatial_dims[0]`.
    pub p1: u64,
    /// Unroll factor along `spatial_dims[1]`.
    pub p2: u64,
    pub used_pes: u64,
}

impl Mapping {
    pub fn utilization(&self, n_pe: u64) -> f64 {
        self.used_pes as f64 / n_pe as f64
    }
}

/// Effective unrollable extent of `dim` for `layer` under `df`.
///
/// Depth-wise layers pair each output channel with exactly one input
/// channel: when the dataflow unrolls C spatially, the K extent collapses
/// to the channel multiplier M; otherwise the C loop collapses to 1, so
/// that the product of all effective extents equals the MAC count.
pub fn effective_extent(dim: LoopDim, layer: &Layer, df: &Dataflow) -> u64 {
    let (yo, xo) = layer.output_dims();
    let c_spatial = df.spatial_dims.iter().any(|d| *d == Dim::C);
    match dim {
        LoopDim::K => {
            if layer.op == OpKind::Dwconv && c_spatial {
                layer.channel_multiplier()
            } else {
                layer.k
            }
        }
        LoopDim::C => {
            if layer.op == OpKind::Dwconv && !c_spatial {
                1
            } else {
                layer.c
            }
        }
        LoopDim::Yo => yo,
        LoopDim::Xo => xo,
        LoopDim::R => layer.r,
        LoopDim::S => layer.s,
    }
}

/// Constructs a mapping for `layer` on an `n_pe`-PE sub-accelerator.
///
/// Fill rule: the second spatial dimension is filled first,
/// `p2 = min(extent(d2), n_pe)`, then `p1 = min(extent(d1), n_pe / p2)`.
pub fn spatial_allocation(df: &Dataflow, layer: &Layer, n_pe: u64) -> Mapping {
    assert!(n_pe >= 1, "sub-accelerator must have at least one PE");
    let e1 = effective_extent(df.spatial_dims[0].into(), layer, df);
    let e2 = effective_extent(df.spatial_dims[1].into(), layer, df);
    let p2 = e2.min(n_pe);
    let p1 = e1.min(n_pe / p2);
    Mapping {
        dataflow: df.kind,
        layer_id: layer.id,
        p1,
        p2,
        used_pes: p1 * p2,
    }
}

/// Fraction of PEs performing useful MACs, in (0, 1].
pub fn mapping_utilization(mapping: &Mapping, n_pe: u64) -> f64 {
    mapping.utilization(n_pe)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::LayerId;

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

    #[test]
    fn builtin_descriptors() {
        let shi = builtin_dataflow(DataflowKind::Shi);
        assert_eq!(shi.stationary, Stationary::Output);
        assert_eq!(shi.spatial_dims, [Dim::Yo, Dim::Xo]);
        assert!(!shi.spatial_reduce_c);

        let nvdla = builtin_dataflow(DataflowKind::Nvdla);
        assert!(nvdla.spatial_reduce_c);
        assert_eq!(nvdla.spatial_dims, [Dim::K, Dim::C]);
        assert_eq!(nvdla.stationary, Stationary::Weight);

        let eye = builtin_dataflow(DataflowKind::Eye);
        assert_eq!(eye.spatial_dims, [Dim::Yo, Dim::R]);
        assert_eq!(eye.stationary, Stationary::Row);
    }

    #[test]
    fn unknown_dataflow_name() {
        assert!(DataflowKind::from_name("tpu").is_none());
        assert_eq!(DataflowKind::from_name("NVDLA"), Some(DataflowKind::Nvdla));
    }

    #[test]
    fn allocation_examples() {
        // shallow-channel conv on nvdla: only K*C PEs usable
        let l = layer(OpKind::Conv2d, 64, 3, 230, 230, 7, 7, 2);
        let m = spatial_allocation(&builtin_dataflow(DataflowKind::Nvdla), &l, 1024);
        assert_eq!((m.p1, m.p2, m.used_pes), (64, 3, 192));
        assert!((m.utilization(1024) - 0.1875).abs() < 1e-12);

        // shi fills Xo first
        let l = layer(OpKind::Conv2d, 1, 1, 114, 114, 3, 3, 1);
        assert_eq!(l.output_dims(), (112, 112));
        let m = spatial_allocation(&builtin_dataflow(DataflowKind::Shi), &l, 1024);
        assert_eq!((m.p1, m.p2, m.used_pes), (9, 112, 1008));

        // single PE
        for kind in DataflowKind::ALL {
            let m = spatial_allocation(&builtin_dataflow(kind), &l, 1);
            assert_eq!((m.p1, m.p2), (1, 1));
        }
    }

    #[test]
    fn dwconv_nvdla_clamps_k_to_multiplier() {
        let l = layer(OpKind::Dwconv, 32, 32, 114, 114, 3, 3, 1);
        let m = spatial_allocation(&builtin_dataflow(DataflowKind::Nvdla), &l, 1024);
        assert_eq!((m.p1, m.p2, m.used_pes), (1, 32, 32));
        assert!((m.utilization(1024) - 0.03125).abs() < 1e-12);
        // multiplier 2: K extent is 2
        let l = layer(OpKind::Dwconv, 64, 32, 114, 114, 3, 3, 1);
        let m = spatial_allocation(&builtin_dataflow(DataflowKind::Nvdla), &l, 1024);
        assert_eq!((m.p1, m.p2, m.used_pes), (2, 32, 64));
    }

    fn random_layer(rng: &mut impl rand::Rng) -> Layer {
        use rand::seq::SliceRandom;
        let op = *[
            OpKind::Conv2d,
            OpKind::Pwconv,
            OpKind::Dwconv,
            OpKind::Fc,
            OpKind::Elemwise,
        ]
        .choose(rng)
        .unwrap();
        let (k, c) = match op {
            OpKind::Dwconv => {
                let c = rng.gen_range(1..=64);
                (c * rng.gen_range(1..=3), c)
            }
            _ => (rng.gen_range(1..=512), rng.gen_range(1..=512)),
        };
        let (r, s) = match op {
            OpKind::Pwconv | OpKind::Fc | OpKind::Elemwise => (1, 1),
            _ => (rng.gen_range(1..=7), rng.gen_range(1..=7)),
        };
        let (y, x) = match op {
            OpKind::Fc => (1, 1),
            _ => (rng.gen_range(r..=r + 128), rng.gen_range(s..=s + 128)),
        };
        let stride = if op.is_convolutional() {
            rng.gen_range(1..=r.min(s))
        } else {
            1
        };
        layer(op, k, c, y, x, r, s, stride)
    }

    #[test]
    fn allocation_respects_bounds_and_monotonicity() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..500 {
            let l = random_layer(&mut rng);
            for kind in DataflowKind::ALL {
                let df = builtin_dataflow(kind);
                let e1 = effective_extent(df.spatial_dims[0].into(), &l, &df);
                let e2 = effective_extent(df.spatial_dims[1].into(), &l, &df);
                let mut prev_used = 0;
                for n_pe in [1u64, 2, 3, 7, 16, 100, 256, 1024, 4096] {
                    let m = spatial_allocation(&df, &l, n_pe);
                    assert!(m.used_pes <= n_pe);
                    assert!(m.p1 <= e1 && m.p2 <= e2);
                    assert!(m.used_pes >= prev_used, "allocation not monotone");
                    prev_used = m.used_pes;
                    let u = m.utilization(n_pe);
                    assert!(u > 0.0 && u <= 1.0);
                }
            }
        }
    }

    #[test]
    fn shi_ignores_channels_nvdla_ignores_activation() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let base = random_layer(&mut rng);
            if base.op == OpKind::Dwconv {
                continue;
            }
            let shi = builtin_dataflow(DataflowKind::Shi);
            let nvdla = builtin_dataflow(DataflowKind::Nvdla);
            for n_pe in [16u64, 256, 1024] {
                let m0 = spatial_allocation(&shi, &base, n_pe);
                let mut alt = base.clone();
                alt.k = base.k + 13;
                alt.c = base.c + 7;
                let m1 = spatial_allocation(&shi, &alt, n_pe);
                assert_eq!(m0.used_pes, m1.used_pes);

                let m0 = spatial_allocation(&nvdla, &base, n_pe);
                let mut alt = base.clone();
                alt.y = base.y + 10;
                alt.x = base.x + 4;
                let m1 = spatial_allocation(&nvdla, &alt, n_pe);
                assert_eq!(m0.used_pes, m1.used_pes);
            }
        }
    }
}
