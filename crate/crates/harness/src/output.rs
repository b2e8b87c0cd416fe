use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Metric};
use crate::error::{HarnessError, Result};
use crate::experiment::{AggregateRow, ExperimentResult, ResultRow, EVAL_STREAM};
use crate::formats::{fmt17, parse_f64, to_json_string};

pub const RAW_FILE: &str = "raw.csv";
pub const AGG_FILE: &str = "agg.csv";
pub const META_FILE: &str = "meta.json";
pub const META_SCHEMA: &str = "implicit-td/meta/v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub schema: String,
    pub library: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub env_seed: Option<u64>,
    pub rng: String,
    pub replication_streams: String,
    pub evaluation_stream: u64,
    pub std_convention: String,
    pub non_finite_sentinel: String,
    pub diverged: DivergedSummary,
    pub final_values: Vec<FinalValue>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergedSummary {
    pub count: usize,
    pub replications: Vec<DivergedReplication>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergedReplication {
    pub replication: u32,
    pub step: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalValue {
    pub metric: Metric,
    pub step: u64,
    /// `None` when every replication diverged.
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub diverged: u32,
}

impl Meta {
    pub fn new(result: &ExperimentResult) -> Self {
        let c = &result.config;
        let final_values = c
            .metrics
            .iter()
            .filter_map(|&m| result.final_aggregate(m))
            .map(|a| FinalValue {
                metric: a.metric,
                step: a.step,
                mean: Some(a.mean).filter(|v| v.is_finite()),
                std: Some(a.std).filter(|v| v.is_finite()),
                diverged: a.diverged,
            })
            .collect();
        Meta {
            schema: META_SCHEMA.to_owned(),
            library: env!("CARGO_PKG_NAME").to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            config: c.clone(),
            master_seed: c.master_seed,
            env_seed: c.env.env_seed(),
            rng: "ChaCha8 (rand_chacha 0.9): seed_from_u64(seed), set_stream(stream); uniform = (u64 >> 11) * 2^-53"
                .to_owned(),
            replication_streams: "replication i uses stream i of master_seed".to_owned(),
            evaluation_stream: EVAL_STREAM,
            std_convention: "population (divide by the number of finite values)".to_owned(),
            non_finite_sentinel: "inf in raw.csv marks snapshots at or after divergence".to_owned(),
            diverged: DivergedSummary {
                count: result.diverged.len(),
                replications: result
                    .diverged
                    .iter()
                    .map(|&(replication, step)| DivergedReplication { replication, step })
                    .collect(),
            },
            final_values,
        }
    }

    /// Structural checks beyond what deserialization enforces.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Parse { what: "meta.json", message: m.to_owned() });
        if self.schema != META_SCHEMA {
            return bad("unknown schema");
        }
        if self.diverged.count != self.diverged.replications.len() {
            return bad("diverged count disagrees with list");
        }
        if self.master_seed != self.config.master_seed {
            return bad("master_seed disagrees with config");
        }
        self.config.validate()
    }
}

fn write(path: &Path, contents: &[u8]) -> Result<()> {
    fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

fn csv_bytes(header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| HarnessError::io("<csv buffer>", std::io::Error::other(e));
    w.write_record(header).map_err(io_err)?;
    for r in records {
        w.write_record(&r).map_err(io_err)?;
    }
    w.into_inner().map_err(|e| HarnessError::io("<csv buffer>", std::io::Error::other(e.to_string())))
}

pub fn raw_csv(rows: &[ResultRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["replication", "step", "metric", "value"],
        rows.iter().map(|r| vec![r.replication.to_string(), r.step.to_string(), r.metric.as_str().to_owned(), fmt17(r.value)]),
    )
}

pub fn agg_csv(aggregates: &[AggregateRow]) -> Result<Vec<u8>> {
    csv_bytes(
        &["step", "metric", "mean", "std"],
        aggregates.iter().map(|a| vec![a.step.to_string(), a.metric.as_str().to_owned(), fmt17(a.mean), fmt17(a.std)]),
    )
}

/// Writes `raw.csv`, `agg.csv` and `meta.json` into `dir`, creating it.
pub fn emit_outputs(result: &ExperimentResult, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write(&dir.join(RAW_FILE), &raw_csv(&result.rows)?)?;
    write(&dir.join(AGG_FILE), &agg_csv(&result.aggregates)?)?;
    write(&dir.join(META_FILE), to_json_string(&Meta::new(result)).as_bytes())
}

fn read_records(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| HarnessError::io(path, std::io::Error::other(e)))?;
    let found = r.headers().map_err(|e| HarnessError::io(path, std::io::Error::other(e)))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(HarnessError::Parse { what: "CSV header", message: format!("{}: {:?}", path.display(), found) });
    }
    r.records().map(|rec| rec.map_err(|e| HarnessError::io(path, std::io::Error::other(e)))).collect()
}

fn parse_metric(s: &str) -> Result<Metric> {
    Metric::parse(s).ok_or_else(|| HarnessError::Parse { what: "metric", message: s.to_owned() })
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| HarnessError::Parse { what: "integer", message: s.to_owned() })
}

pub fn read_raw_csv(path: &Path) -> Result<Vec<ResultRow>> {
    read_records(path, &["replication", "step", "metric", "value"])?
        .iter()
        .map(|r| {
            Ok(ResultRow {
                replication: parse_int(&r[0])?,
                step: parse_int(&r[1])?,
                metric: parse_metric(&r[2])?,
                value: parse_f64(&r[3])?,
            })
        })
        .collect()
}

/// Reads `agg.csv`; the `diverged` column is not stored there and reads as 0.
pub fn read_agg_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    read_records(path, &["step", "metric", "mean", "std"])?
        .iter()
        .map(|r| {
            Ok(AggregateRow {
                step: parse_int(&r[0])?,
                metric: parse_metric(&r[1])?,
                mean: parse_f64(&r[2])?,
                std: parse_f64(&r[3])?,
                diverged: 0,
            })
        })
        .collect()
}

pub fn read_meta(path: &Path) -> Result<Meta> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let meta: Meta =
        serde_json::from_str(&text).map_err(|e| HarnessError::Parse { what: "meta.json", message: e.to_string() })?;
    meta.validate()?;
    Ok(meta)
}
