//! Accelerator configuration file: class presets or custom totals, the
//! dataflow list, an optional explicit partition, cost constants, search
//! settings, and scheduler knobs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cost::CostParams;
use crate::dataflow::DataflowKind;
use crate::dse::{AcceleratorClass, HdaConfig, SearchOptions, SearchStrategy, Totals};
use crate::error::ConfigError;
use crate::schedule::{Metric, OrderingPolicy, SchedulerOptions};

/// Raw accelerator configuration as read from TOML.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccelFile {
    /// One of `edge`, `mobile`, `cloud`; custom totals override fields.
    pub class: Option<String>,
    pub n_pe: Option<u64>,
    pub bw_gbps: Option<f64>,
    pub gb_mib: Option<f64>,
    /// Dataflow names (`nvdla`, `shi`, `eye`).
    pub dataflows: Option<Vec<String>>,
    pub partition: Option<PartitionSection>,
    pub cost: Option<CostSection>,
    pub search: Option<SearchSection>,
    pub scheduler: Option<SchedulerSection>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub pe: Vec<u64>,
    pub bw_gbps: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostSection {
    pub e_mac: Option<f64>,
    pub e_l1: Option<f64>,
    pub e_gb: Option<f64>,
    pub e_dram: Option<f64>,
    pub bytes_per_element: Option<u64>,
    pub clock_ghz: Option<f64>,
    pub ctx_latency: Option<u64>,
    pub ctx_energy: Option<f64>,
    pub share_batch_weights: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub strategy: Option<String>,
    pub g_pe: Option<u64>,
    pub g_bw_gbps: Option<f64>,
    pub budget: Option<u64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchedulerSection {
    pub metric: Option<String>,
    pub ordering: Option<String>,
    pub beta: Option<f64>,
    pub rebalance_rounds: Option<u32>,
    pub post_process: Option<bool>,
}

/// Fully resolved accelerator setup.
#[derive(Debug, Clone)]
pub struct AccelConfig {
    pub totals: Totals,
    pub dataflows: Vec<DataflowKind>,
    /// Explicit partition for fixed-HDA runs (MB/s for bandwidth).
    pub partition: Option<(Vec<u64>, Vec<u64>)>,
    pub params: CostParams,
    pub search: SearchOptions,
    pub scheduler: SchedulerOptions,
}

impl Default for AccelConfig {
    fn default() -> Self {
        let totals = Totals::of_class(AcceleratorClass::Edge);
        let mut params = CostParams::default();
        params.gb_capacity = totals.gb_capacity;
        AccelConfig {
            totals,
            dataflows: vec![DataflowKind::Nvdla, DataflowKind::Shi],
            partition: None,
            params,
            search: SearchOptions::default(),
            scheduler: SchedulerOptions::default(),
        }
    }
}

impl AccelConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let raw: AccelFile =
            toml::from_str(&text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_raw(&raw)
    }

    pub fn from_raw(raw: &AccelFile) -> Result<Self, ConfigError> {
        let mut cfg = AccelConfig::default();
        if let Some(class) = &raw.class {
            let class = AcceleratorClass::from_name(class)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown class `{class}`")))?;
            cfg.totals = Totals::of_class(class);
        }
        if let Some(n) = raw.n_pe {
            cfg.totals.n_pe = n;
        }
        if let Some(bw) = raw.bw_gbps {
            if bw <= 0.0 {
                return Err(ConfigError::Invalid("bw_gbps must be positive".into()));
            }
            cfg.totals.bw_mbps = (bw * 1000.0).round() as u64;
        }
        if let Some(gb) = raw.gb_mib {
            if gb <= 0.0 {
                return Err(ConfigError::Invalid("gb_mib must be positive".into()));
            }
            cfg.totals.gb_capacity = (gb * 1024.0 * 1024.0).round() as u64;
        }
        if let Some(names) = &raw.dataflows {
            if names.is_empty() {
                return Err(ConfigError::Invalid("dataflows list is empty".into()));
            }
            cfg.dataflows = names
                .iter()
                .map(|n| {
                    DataflowKind::from_name(n)
                        .ok_or_else(|| ConfigError::Invalid(format!("unknown dataflow `{n}`")))
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(c) = &raw.cost {
            let p = &mut cfg.params;
            if let Some(v) = c.e_mac {
                p.e_mac = v;
            }
            if let Some(v) = c.e_l1 {
                p.e_l1 = v;
            }
            if let Some(v) = c.e_gb {
                p.e_gb = v;
            }
            if let Some(v) = c.e_dram {
                p.e_dram = v;
            }
            if let Some(v) = c.bytes_per_element {
                if v < 1 {
                    return Err(ConfigError::Invalid("bytes_per_element must be >= 1".into()));
                }
                p.bytes_per_element = v;
            }
            if let Some(v) = c.clock_ghz {
                if v <= 0.0 {
                    return Err(ConfigError::Invalid("clock_ghz must be positive".into()));
                }
                p.clock_hz = v * 1.0e9;
            }
            if let Some(v) = c.ctx_latency {
                p.ctx_latency = v;
            }
            if let Some(v) = c.ctx_energy {
                p.ctx_energy = v;
            }
            if let Some(v) = c.share_batch_weights {
                p.share_batch_weights = v;
            }
        }
        cfg.params.gb_capacity = cfg.totals.gb_capacity;
        if let Some(s) = &raw.search {
            if let Some(name) = &s.strategy {
                cfg.search.strategy = SearchStrategy::from_name(name)
                    .ok_or_else(|| ConfigError::Invalid(format!("unknown strategy `{name}`")))?;
            }
            cfg.search.g_pe = s.g_pe.or(cfg.search.g_pe);
            if let Some(g) = s.g_bw_gbps {
                cfg.search.g_bw_mbps = Some((g * 1000.0).round() as u64);
            }
            if let Some(b) = s.budget {
                cfg.search.budget = b;
            }
            if let Some(seed) = s.seed {
                cfg.search.seed = seed;
            }
        }
        if let Some(s) = &raw.scheduler {
            if let Some(m) = &s.metric {
                cfg.scheduler.metric = parse_metric(m)?;
            }
            if let Some(o) = &s.ordering {
                cfg.scheduler.ordering = match o.to_ascii_lowercase().as_str() {
                    "depth-first" | "depth_first" | "depth" => OrderingPolicy::DepthFirst,
                    "breadth-first" | "breadth_first" | "breadth" => OrderingPolicy::BreadthFirst,
                    other => {
                        return Err(ConfigError::Invalid(format!("unknown ordering `{other}`")))
                    }
                };
            }
            if let Some(b) = s.beta {
                cfg.scheduler.beta = b;
            }
            if let Some(r) = s.rebalance_rounds {
                cfg.scheduler.rebalance_rounds = r;
            }
            if let Some(p) = s.post_process {
                cfg.scheduler.post_process = p;
            }
        }
        if let Some(part) = &raw.partition {
            if part.pe.len() != cfg.dataflows.len() || part.bw_gbps.len() != cfg.dataflows.len() {
                return Err(ConfigError::Invalid(format!(
                    "partition lists {} PE / {} BW entries for {} dataflows",
                    part.pe.len(),
                    part.bw_gbps.len(),
                    cfg.dataflows.len()
                )));
            }
            let bw: Vec<u64> = part
                .bw_gbps
                .iter()
                .map(|g| (g * 1000.0).round() as u64)
                .collect();
            cfg.partition = Some((part.pe.clone(), bw));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.totals.n_pe < 1 {
            return Err(ConfigError::Invalid("n_pe must be >= 1".into()));
        }
        if self.scheduler.beta < 1.0 {
            return Err(ConfigError::Invalid("beta must be >= 1".into()));
        }
        if let Some(g) = self.search.g_pe {
            if g == 0 || self.totals.n_pe % g != 0 {
                return Err(ConfigError::Invalid(format!(
                    "g_pe {g} must divide the PE total {}",
                    self.totals.n_pe
                )));
            }
        }
        if let Some(g) = self.search.g_bw_mbps {
            if g == 0 || self.totals.bw_mbps % g != 0 {
                return Err(ConfigError::Invalid(format!(
                    "bandwidth granularity {g} MB/s must divide the total {} MB/s",
                    self.totals.bw_mbps
                )));
            }
        }
        if self.search.budget < 1 {
            return Err(ConfigError::Invalid("budget must be >= 1".into()));
        }
        if let Some((pe, bw)) = &self.partition {
            if pe.iter().sum::<u64>() != self.totals.n_pe {
                return Err(ConfigError::Invalid(format!(
                    "partition PEs sum to {}, total is {}",
                    pe.iter().sum::<u64>(),
                    self.totals.n_pe
                )));
            }
            if bw.iter().sum::<u64>() != self.totals.bw_mbps {
                return Err(ConfigError::Invalid(format!(
                    "partition bandwidth sums to {} MB/s, total is {} MB/s",
                    bw.iter().sum::<u64>(),
                    self.totals.bw_mbps
                )));
            }
            if pe.iter().any(|p| *p < 1) || bw.iter().any(|b| *b < 1) {
                return Err(ConfigError::Invalid(
                    "every partition entry must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// The fixed HDA named by the explicit partition, or an even split
    /// when none is given.
    pub fn fixed_hda(&self) -> Result<HdaConfig, ConfigError> {
        let (pe, bw) = match &self.partition {
            Some(p) => p.clone(),
            None => {
                let n = self.dataflows.len() as u64;
                if self.totals.n_pe % n != 0 || self.totals.bw_mbps % n != 0 {
                    return Err(ConfigError::Invalid(
                        "totals do not split evenly; give an explicit [partition]".into(),
                    ));
                }
                (
                    vec![self.totals.n_pe / n; n as usize],
                    vec![self.totals.bw_mbps / n; n as usize],
                )
            }
        };
        Ok(HdaConfig::from_partitions(
            &self.dataflows,
            &pe,
            &bw,
            self.totals,
            &self.params,
        ))
    }
}

fn parse_metric(name: &str) -> Result<Metric, ConfigError> {
    match name.to_ascii_lowercase().as_str() {
        "latency" => Ok(Metric::Latency),
        "energy" => Ok(Metric::Energy),
        "edp" => Ok(Metric::Edp),
        other => Err(ConfigError::Invalid(format!("unknown metric `{other}`"))),
    }
}
