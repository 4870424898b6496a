use std::fs::{File, OpenOptions};
use std::path::Path;

use pregrasp::sac::EpisodeStats;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Column order of `metrics.csv`.
pub const METRICS_HEADER: [&str; 10] = [
    "episode",
    "reward_total",
    "reward_rd",
    "reward_rtheta",
    "reward_rtop",
    "reward_pf",
    "success",
    "alpha",
    "lr",
    "wall_time_s",
];

/// One training episode. Reward terms are sums over the episode; `success`
/// is 0 or 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: usize,
    pub reward_total: f64,
    pub reward_rd: f64,
    pub reward_rtheta: f64,
    pub reward_rtop: f64,
    pub reward_pf: f64,
    pub success: u8,
    pub alpha: f64,
    pub lr: f64,
    pub wall_time_s: f64,
}

impl MetricsRow {
    pub fn from_stats(stats: &EpisodeStats, wall_time_s: f64) -> Self {
        let terms = stats.reward_terms.unwrap_or_default();
        Self {
            episode: stats.episode,
            reward_total: stats.reward_total,
            reward_rd: terms.r_d,
            reward_rtheta: terms.r_theta,
            reward_rtop: terms.r_top,
            reward_pf: terms.p_f,
            success: stats.success as u8,
            alpha: stats.alpha,
            lr: stats.lr,
            wall_time_s,
        }
    }
}

/// Appends rows to a metrics file, flushing after each one.
pub struct MetricsWriter {
    inner: csv::Writer<File>,
}

impl MetricsWriter {
    /// Creates `path` with just the header.
    pub fn create(path: &Path) -> Result<Self, HarnessError> {
        let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        inner.write_record(METRICS_HEADER).map_err(|e| HarnessError::csv(path, e))?;
        inner.flush().map_err(|e| HarnessError::io(path, e))?;
        Ok(Self { inner })
    }

    /// Opens an existing metrics file for appending, checking its header;
    /// creates it if absent.
    pub fn append(path: &Path) -> Result<Self, HarnessError> {
        if !path.exists() {
            return Self::create(path);
        }
        let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
        let header = reader.headers().map_err(|e| HarnessError::csv(path, e))?;
        if header.iter().ne(METRICS_HEADER) {
            return Err(HarnessError::corrupt(format!("{}: unexpected metrics header", path.display())));
        }
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| HarnessError::io(path, e))?;
        Ok(Self {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(file),
        })
    }

    pub fn write(&mut self, row: &MetricsRow) -> Result<(), HarnessError> {
        self.inner
            .serialize(row)
            .map_err(|e| HarnessError::Csv(e.to_string()))?;
        self.inner.flush().map_err(|e| HarnessError::Csv(e.to_string()))
    }
}

pub fn write_metrics(rows: &[MetricsRow], path: &Path) -> Result<(), HarnessError> {
    let mut w = MetricsWriter::create(path)?;
    for r in rows {
        w.write(r)?;
    }
    Ok(())
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| HarnessError::csv(path, e))?;
    reader
        .deserialize()
        .collect::<Result<Vec<MetricsRow>, _>>()
        .map_err(|e| HarnessError::csv(path, e))
}
