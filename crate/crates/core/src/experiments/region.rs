use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{GroundTruthPair, MetricKind};

/// A metric and its top-n cutoff, e.g. `ra@2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridMetric {
    pub metric: MetricKind,
    pub n: usize,
}

impl GridMetric {
    pub fn new(metric: MetricKind, n: usize) -> Self {
        Self { metric, n }
    }

    pub fn label(&self) -> String {
        format!("{}@{}", self.metric, self.n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGridSpec {
    pub e_star: [f64; 2],
    pub lo: f64,
    pub hi: f64,
    /// Points per axis.
    pub resolution: usize,
    pub metrics: Vec<GridMetric>,
}

impl Default for RegionGridSpec {
    fn default() -> Self {
        Self {
            e_star: [0.7, 0.3],
            lo: -1.0,
            hi: 1.0,
            resolution: 201,
            metrics: vec![
                GridMetric::new(MetricKind::Fa, 1),
                GridMetric::new(MetricKind::Ra, 2),
                GridMetric::new(MetricKind::Sa, 2),
                GridMetric::new(MetricKind::Sra, 2),
                GridMetric::new(MetricKind::Rc, 2),
                GridMetric::new(MetricKind::Pra, 2),
            ],
        }
    }
}

impl RegionGridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 3 {
            return Err(Error::InvalidConfig("grid resolution must be at least 3".into()));
        }
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::InvalidConfig("grid range must satisfy lo < hi".into()));
        }
        for m in &self.metrics {
            if !m.metric.is_ground_truth() {
                return Err(Error::InvalidConfig(format!("{} is not a ground-truth metric", m.metric)));
            }
            if m.n > 2 {
                return Err(Error::NExceedsFeatureCount { n: m.n, features: 2 });
            }
        }
        Ok(())
    }

    /// Axis coordinate `a` of `0..resolution`.
    pub fn coordinate(&self, a: usize) -> f64 {
        if a + 1 == self.resolution {
            return self.hi;
        }
        self.lo + (self.hi - self.lo) * a as f64 / (self.resolution - 1) as f64
    }
}

/// Sign pattern and magnitude order of a cell, e.g. `+,+,|i1|>|i2|`.
pub fn region_label(i1: f64, i2: f64) -> String {
    let s = |v: f64| match v.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Greater) => "+",
        Some(std::cmp::Ordering::Less) => "-",
        _ => "0",
    };
    let order = match i1.abs().partial_cmp(&i2.abs()) {
        Some(std::cmp::Ordering::Greater) => "|i1|>|i2|",
        Some(std::cmp::Ordering::Less) => "|i1|<|i2|",
        _ => "|i1|=|i2|",
    };
    format!("{},{},{}", s(i1), s(i2), order)
}

fn value_key(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| x.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub spec: RegionGridSpec,
    /// Per metric label: values indexed `a * resolution + b` for
    /// `(i1, i2) = (coordinate(a), coordinate(b))`. `None` is undefined.
    pub grids: BTreeMap<String, Vec<Option<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub schema_version: u32,
    pub e_star: [f64; 2],
    pub resolution: usize,
    /// Distinct values per metric over the whole grid.
    pub value_sets: BTreeMap<String, Vec<String>>,
    /// Distinct values per metric within each sign/order region.
    pub regions: BTreeMap<String, BTreeMap<String, Vec<String>>>,
    /// Every metric is constant within every region.
    pub piecewise_constant: bool,
}

impl RegionGrid {
    pub fn value(&self, label: &str, a: usize, b: usize) -> Option<f64> {
        self.grids[label][a * self.spec.resolution + b]
    }

    pub fn value_set(&self, label: &str) -> BTreeSet<String> {
        self.grids[label].iter().map(|v| value_key(*v)).collect()
    }

    pub fn summary(&self) -> RegionSummary {
        let res = self.spec.resolution;
        let mut regions: BTreeMap<String, BTreeMap<String, BTreeSet<String>>> = BTreeMap::new();
        for a in 0..res {
            for b in 0..res {
                let region = region_label(self.spec.coordinate(a), self.spec.coordinate(b));
                let entry = regions.entry(region).or_default();
                for (label, grid) in &self.grids {
                    entry.entry(label.clone()).or_default().insert(value_key(grid[a * res + b]));
                }
            }
        }
        let piecewise_constant = regions.values().all(|m| m.values().all(|s| s.len() == 1));
        RegionSummary {
            schema_version: crate::REPORT_SCHEMA_VERSION,
            e_star: self.spec.e_star,
            resolution: res,
            value_sets: self
                .grids
                .keys()
                .map(|l| (l.clone(), self.value_set(l).into_iter().collect()))
                .collect(),
            regions: regions
                .into_iter()
                .map(|(r, m)| (r, m.into_iter().map(|(l, s)| (l, s.into_iter().collect())).collect()))
                .collect(),
            piecewise_constant,
        }
    }

    /// Long-format TSV with header `i1 i2 metric q`, one file per metric.
    pub fn write_tsv(&self, label: &str, path: impl AsRef<Path>) -> Result<()> {
        let grid = self
            .grids
            .get(label)
            .ok_or_else(|| Error::InvalidConfig(format!("no grid for {label}")))?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "i1\ti2\tmetric\tq")?;
        let res = self.spec.resolution;
        for a in 0..res {
            for b in 0..res {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    self.spec.coordinate(a),
                    self.spec.coordinate(b),
                    label,
                    value_key(grid[a * res + b])
                )?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Evaluates every metric with `e = (i1, i2)` against `e_star` at every grid
/// cell.
pub fn run_region_grid(spec: &RegionGridSpec) -> Result<RegionGrid> {
    spec.validate()?;
    let res = spec.resolution;
    let mut grids = BTreeMap::new();
    for m in &spec.metrics {
        let values = (0..res * res)
            .into_par_iter()
            .map(|cell| {
                let e = vec![spec.coordinate(cell / res), spec.coordinate(cell % res)];
                GroundTruthPair::new(e, spec.e_star.to_vec(), m.n)?.metric(m.metric)
            })
            .collect::<Result<Vec<_>>>()?;
        grids.insert(m.label(), values);
    }
    Ok(RegionGrid {
        spec: spec.clone(),
        grids,
    })
}
