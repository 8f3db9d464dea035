//! Design-space exploration toolkit for heterogeneous-dataflow DNN
//! accelerators (HDAs).
//!
//! The crate models multi-DNN workloads, estimates per-layer latency and
//! energy of fixed-dataflow sub-accelerators with a closed-form analytic
//! cost model, schedules layers across sub-accelerators under dependence
//! and memory constraints, and sweeps PE/bandwidth partitionings to find
//! Pareto-optimal designs against FDA, SM-FDA, and RDA baselines.

pub mod config;
pub mod cost;
pub mod dataflow;
pub mod dse;
pub mod error;
pub mod fixtures;
pub mod schedule;
pub mod workload;

pub use cost::{evaluate_layer, CostParams, LayerCost, SubAcceleratorConfig};
pub use dataflow::{builtin_dataflow, spatial_allocation, DataflowKind, Mapping};
pub use dse::{
    enumerate_partitions, evaluate_hda, fda_baseline, pareto_frontier, rda_baseline, run_dse,
    smfda_baseline, AcceleratorClass, DesignPoint, HdaConfig, SearchOptions, SearchStrategy,
};
pub use error::{ConfigError, ScheduleError, WorkloadError};
pub use schedule::{
    assign_layers, order_layers, post_process, rebalance, schedule_workload, simulate,
    validate_schedule, Assignment, Metric, OrderingPolicy, Schedule, SchedulerOptions,
};
pub use workload::{parse_workload, parse_workload_str, Layer, LayerId, ModelGraph, OpKind, Workload};
