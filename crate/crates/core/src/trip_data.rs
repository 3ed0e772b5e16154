//! Per-segment travel-time ingestion, complete-through-trip assembly, and
//! synthetic dataset generation from marginal + copula ground truth.
//!
//! The CSV interchange format is fixed: UTF-8, comma-separated, header
//! `drive_id,segment_id,travel_time_s`, decimal point, no thousands
//! separators.

use std::collections::{BTreeMap, HashSet};
use std::io;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::copulas::CopulaModel;
use crate::error::{Error, Result};
use crate::marginals::GmmParams;

pub const CSV_HEADER: [&str; 3] = ["drive_id", "segment_id", "travel_time_s"];

/// One vehicle's travel time on one segment within one drive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRecord {
    pub drive_id: String,
    pub segment_id: u32,
    pub travel_time: f64,
}

/// Parse trip records from CSV, enforcing the fixed header, strictly
/// positive travel times, and (drive_id, segment_id) uniqueness. Errors name
/// the offending line.
pub fn load_trips<R: io::Read>(reader: R) -> Result<Vec<TripRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| csv_error_to_parse(&e))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "expected header '{}', got '{}'",
                CSV_HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut seen: HashSet<(String, u32)> = HashSet::new();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| csv_error_to_parse(&e))?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, got {}", row.len()),
            });
        }
        let drive_id = row[0].to_string();
        let segment_id: u32 = row[1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("segment_id '{}' is not an unsigned integer", &row[1]),
        })?;
        let travel_time: f64 = row[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("travel_time_s '{}' is not numeric", &row[2]),
        })?;
        if !travel_time.is_finite() || travel_time <= 0.0 {
            return Err(Error::Domain {
                line,
                message: format!("travel_time_s must be strictly positive, got {travel_time}"),
            });
        }
        if !seen.insert((drive_id.clone(), segment_id)) {
            return Err(Error::Duplicate {
                drive_id,
                segment_id,
                line,
            });
        }
        records.push(TripRecord {
            drive_id,
            segment_id,
            travel_time,
        });
    }
    Ok(records)
}

fn csv_error_to_parse(e: &csv::Error) -> Error {
    let line = match e.position() {
        Some(p) => p.line(),
        None => 0,
    };
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Write trip records in the fixed CSV format.
pub fn write_trips<W: io::Write>(writer: W, records: &[TripRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)
        .map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    for r in records {
        w.write_record([
            r.drive_id.as_str(),
            &r.segment_id.to_string(),
            &r.travel_time.to_string(),
        ])
        .map_err(|e| Error::Parse {
            line: 0,
            message: e.to_string(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Complete through-trips: N rows of travel times aligned to an ordered
/// segment list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSeries {
    segment_ids: Vec<u32>,
    rows: Vec<Vec<f64>>,
}

impl SegmentSeries {
    pub fn new(segment_ids: Vec<u32>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if segment_ids.is_empty() {
            return Err(Error::InvalidParameter("empty segment list".into()));
        }
        if segment_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "segment ids must be strictly increasing along the path".into(),
            ));
        }
        if rows.is_empty() {
            return Err(Error::EmptyResult("series has no rows".into()));
        }
        let s = segment_ids.len();
        for row in &rows {
            if row.len() != s {
                return Err(Error::DimensionMismatch {
                    expected: s,
                    got: row.len(),
                });
            }
            if row.iter().any(|t| !t.is_finite() || *t <= 0.0) {
                return Err(Error::InvalidParameter(
                    "travel times must be finite and strictly positive".into(),
                ));
            }
        }
        Ok(SegmentSeries { segment_ids, rows })
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn s(&self) -> usize {
        self.segment_ids.len()
    }

    pub fn segment_ids(&self) -> &[u32] {
        &self.segment_ids
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// Restrict to a prefix of the segment list (path sub-section).
    pub fn prefix(&self, len: usize) -> Result<SegmentSeries> {
        if len == 0 || len > self.s() {
            return Err(Error::InvalidParameter(format!(
                "prefix length {len} outside 1..={}",
                self.s()
            )));
        }
        SegmentSeries::new(
            self.segment_ids[..len].to_vec(),
            self.rows.iter().map(|r| r[..len].to_vec()).collect(),
        )
    }

    /// Restrict to an arbitrary subset of segment ids (must exist, ordered).
    pub fn select(&self, ids: &[u32]) -> Result<SegmentSeries> {
        let mut idx = Vec::with_capacity(ids.len());
        for id in ids {
            match self.segment_ids.iter().position(|s| s == id) {
                Some(p) => idx.push(p),
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "segment {id} not present in series"
                    )))
                }
            }
        }
        SegmentSeries::new(
            ids.to_vec(),
            self.rows
                .iter()
                .map(|r| idx.iter().map(|&p| r[p]).collect())
                .collect(),
        )
    }

    /// Flatten back to per-segment trip records with zero-padded synthetic
    /// drive ids, so emitted datasets round-trip through `load_trips`.
    pub fn to_trip_records(&self) -> Vec<TripRecord> {
        let width = self.n().to_string().len().max(5);
        let mut out = Vec::with_capacity(self.n() * self.s());
        for (i, row) in self.rows.iter().enumerate() {
            let drive_id = format!("d{:0width$}", i + 1);
            for (j, &t) in row.iter().enumerate() {
                out.push(TripRecord {
                    drive_id: drive_id.clone(),
                    segment_id: self.segment_ids[j],
                    travel_time: t,
                });
            }
        }
        out
    }
}

/// Result of assembling complete drives, with the number of drives dropped
/// for not covering every requested segment exactly once.
#[derive(Debug, Clone)]
pub struct SeriesAssembly {
    pub series: SegmentSeries,
    pub discarded_drives: usize,
}

/// Keep only drives with exactly one record for every requested segment.
/// Rows are ordered by drive id, so output is deterministic.
pub fn assemble_series(records: &[TripRecord], segment_ids: &[u32]) -> Result<SeriesAssembly> {
    if segment_ids.is_empty() {
        return Err(Error::InvalidParameter("empty segment list".into()));
    }
    if segment_ids.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "segment ids must be strictly increasing along the path".into(),
        ));
    }
    let wanted: HashSet<u32> = segment_ids.iter().cloned().collect();

    let mut per_drive: BTreeMap<&str, BTreeMap<u32, (f64, usize)>> = BTreeMap::new();
    for r in records {
        if wanted.contains(&r.segment_id) {
            let entry = per_drive.entry(&r.drive_id).or_default();
            let slot = entry.entry(r.segment_id).or_insert((0.0, 0));
            slot.0 = r.travel_time;
            slot.1 += 1;
        }
    }
    let total_drives: HashSet<&str> = records.iter().map(|r| r.drive_id.as_str()).collect();

    let mut rows = Vec::new();
    let mut kept = 0usize;
    for segs in per_drive.values() {
        let complete = segment_ids
            .iter()
            .all(|id| matches!(segs.get(id), Some((_, 1))));
        if complete {
            rows.push(segment_ids.iter().map(|id| segs[id].0).collect());
            kept += 1;
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyResult(format!(
            "no drive covers all requested segments {segment_ids:?}"
        )));
    }
    Ok(SeriesAssembly {
        series: SegmentSeries::new(segment_ids.to_vec(), rows)?,
        discarded_drives: total_drives.len() - kept,
    })
}

/// Ground truth for synthetic dataset generation: per-segment mixtures plus
/// a coupling copula.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub marginals: Vec<GmmParams>,
    pub coupling: CopulaModel,
    pub n_trips: usize,
    pub seed: u64,
    /// Fraction of rows where one adjacent segment pair is replaced by
    /// exactly proportional travel times, imitating the straight line
    /// through the origin that sparse probe sampling produces. Default 0.
    #[serde(default)]
    pub gps_artifact: f64,
}

/// Mixture tails are unbounded below, so quantile-mapped draws can come out
/// non-positive; they are floored here to keep travel times valid. The
/// displaced mass is a few 1e-4 at most for realistic parameters.
pub(crate) const TRAVEL_TIME_FLOOR: f64 = 1e-3;

/// Draw `n_trips` coupled rows: copula vector u, then component j mapped
/// through the j-th marginal quantile. Pure function of the spec; identical
/// seeds give bit-identical output.
pub fn synthesize(spec: &SynthSpec) -> Result<SegmentSeries> {
    let s = spec.marginals.len();
    if spec.coupling.dim() != s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: spec.coupling.dim(),
        });
    }
    if spec.n_trips == 0 {
        return Err(Error::InvalidParameter("n_trips must be positive".into()));
    }
    if !(0.0..1.0).contains(&spec.gps_artifact) {
        return Err(Error::InvalidParameter(format!(
            "gps_artifact must lie in [0,1), got {}",
            spec.gps_artifact
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let u = spec.coupling.sample_with(&mut rng, spec.n_trips)?;
    let mut rows = Vec::with_capacity(spec.n_trips);
    for i in 0..spec.n_trips {
        let mut row = Vec::with_capacity(s);
        for (j, marginal) in spec.marginals.iter().enumerate() {
            row.push(marginal.quantile(u.get(i, j))?.max(TRAVEL_TIME_FLOOR));
        }
        rows.push(row);
    }

    if spec.gps_artifact > 0.0 {
        let means: Vec<f64> = spec.marginals.iter().map(|m| m.mean()).collect();
        for row in rows.iter_mut() {
            if rng.gen::<f64>() < spec.gps_artifact {
                // One probe interval spanned both segments: equal velocity,
                // so the pair's travel times become exactly proportional.
                let a = rng.gen_range(0..s - 1);
                row[a + 1] = means[a + 1] * row[a] / means[a];
            }
        }
    }

    SegmentSeries::new((1..=s as u32).collect(), rows)
}
