//! The `test` command's output document.
//!
//! Schema version 1. Floats are written in their shortest round-trip form,
//! so a report parses back to identical values. Nothing depending on the
//! machine or thread count is included unless `--timing` asks for it.

use std::io::{self, Write};

use rfm_core::rfm::{Center, Mode, RfmResult, StatisticKind};
use rfm_core::stats::{DensityGrid, Histogram, SwResult};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "rfm";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub input: InputInfo,
    pub config: ConfigInfo,
    pub observed: f64,
    pub center: f64,
    pub expected_family_mean: f64,
    pub family_size: u128,
    pub p_upper: f64,
    pub p_lower: f64,
    pub p_two_sided: f64,
    pub percentile_of_observed: f64,
    pub family: FamilyInfo,
    pub histogram: Histogram,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classical: Option<ClassicalTest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kde: Option<KdeInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shapiro_wilk: Option<SwResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputInfo {
    pub path: String,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigInfo {
    pub statistic: StatisticKind,
    pub mode: Mode,
    pub seed: u64,
    pub center: Center,
    pub histogram_bins: usize,
    pub retention_cap: usize,
    pub max_exact_n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyInfo {
    pub count: u64,
    pub mean: f64,
    /// Population variance over the family.
    pub variance: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub ge_observed: u64,
    pub le_observed: u64,
    pub abs_ge_observed: u64,
    pub tie_tolerance: f64,
    pub values_retained: bool,
}

/// Pearson's r and its t test on the original pairing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalTest {
    pub r: f64,
    pub t: f64,
    pub df: u32,
    pub p_two_sided: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KdeSource {
    Values,
    HistogramMidpoints,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeInfo {
    pub source: KdeSource,
    pub bandwidth: f64,
    pub points: Vec<(f64, f64)>,
}

impl KdeInfo {
    pub fn new(source: KdeSource, grid: DensityGrid) -> Self {
        KdeInfo {
            source,
            bandwidth: grid.bandwidth,
            points: grid.points,
        }
    }
}

impl FamilyInfo {
    pub fn from_result(r: &RfmResult) -> Self {
        let f = &r.family;
        FamilyInfo {
            count: f.count(),
            mean: f.mean(),
            variance: f.variance(),
            sd: f.sd(),
            min: f.min(),
            max: f.max(),
            ge_observed: f.ge_observed(),
            le_observed: f.le_observed(),
            abs_ge_observed: f.abs_ge_observed(),
            tie_tolerance: f.reference().tie_tolerance,
            values_retained: f.retained().is_some(),
        }
    }
}

pub fn write_json<W: Write>(report: &OutputReport, mut writer: W) -> serde_json::Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writer.write_all(b"\n").map_err(serde_json::Error::io)
}

/// Long-format `series,x,value` table: histogram bin midpoints with counts,
/// then the KDE grid when present.
pub fn write_distribution_csv<W: Write>(report: &OutputReport, writer: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["series", "x", "value"])?;
    for (mid, count) in report.histogram.midpoints() {
        wtr.write_record(["histogram".to_string(), mid.to_string(), count.to_string()])?;
    }
    if let Some(kde) = &report.kde {
        for (x, d) in &kde.points {
            wtr.write_record(["kde".to_string(), x.to_string(), d.to_string()])?;
        }
    }
    wtr.flush()
}

/// `x,density` rows for the `kde` command.
pub fn write_density_csv<W: Write>(grid: &DensityGrid, writer: W) -> io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["x", "density"])?;
    for (x, d) in &grid.points {
        wtr.write_record([x.to_string(), d.to_string()])?;
    }
    wtr.flush()
}
