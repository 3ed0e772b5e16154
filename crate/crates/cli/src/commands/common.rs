//! Pipeline pieces shared by several commands.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use pathttd_core::{
    assemble_series, fit_gmm, load_trips, Family, GmmFit, PseudoObservations, SegmentSeries,
};
use serde::Serialize;

use super::CliError;
use crate::config::PseudoMode;

/// Deterministic per-purpose sub-seed (FNV-1a over the purpose tag).
pub fn subseed(seed: u64, tag: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    seed ^ h
}

/// Load a trip CSV and assemble the requested (or all) segments into a
/// series of complete drives.
pub fn load_series(
    input: &Path,
    segments: Option<&[u32]>,
) -> Result<(SegmentSeries, usize), CliError> {
    let file = File::open(input)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", input.display())))?;
    let records = load_trips(BufReader::new(file))?;
    let ids: Vec<u32> = match segments {
        Some(ids) => ids.to_vec(),
        None => {
            let all: BTreeSet<u32> = records.iter().map(|r| r.segment_id).collect();
            all.into_iter().collect()
        }
    };
    let assembly = assemble_series(&records, &ids)?;
    Ok((assembly.series, assembly.discarded_drives))
}

/// Fit one mixture per segment with per-segment derived seeds.
pub fn fit_all_marginals(
    series: &SegmentSeries,
    k: usize,
    seed: u64,
) -> Result<Vec<GmmFit>, CliError> {
    series
        .segment_ids()
        .iter()
        .enumerate()
        .map(|(j, id)| {
            fit_gmm(&series.column(j), k, subseed(seed, &format!("marginal:{id}")))
                .map_err(CliError::from)
        })
        .collect()
}

pub fn build_pseudo(
    series: &SegmentSeries,
    mode: PseudoMode,
    marginals: &[GmmFit],
) -> Result<PseudoObservations, CliError> {
    match mode {
        PseudoMode::Empirical => Ok(PseudoObservations::from_ranks(series)),
        PseudoMode::Parametric => {
            let params: Vec<_> = marginals.iter().map(|f| f.params.clone()).collect();
            PseudoObservations::from_marginals(series, &params).map_err(CliError::from)
        }
    }
}

pub const DEFAULT_FAMILIES: [Family; 4] = [
    Family::Gaussian,
    Family::StudentT,
    Family::Clayton,
    Family::Gumbel,
];

pub fn parse_families(names: Option<&[String]>) -> Result<Vec<Family>, CliError> {
    match names {
        None => Ok(DEFAULT_FAMILIES.to_vec()),
        Some(list) => list
            .iter()
            .map(|n| Family::from_str(n).map_err(|e| CliError::Usage(e.to_string())))
            .collect(),
    }
}

/// Read a path-sample CSV (single `travel_time_s` column).
pub fn read_sample_csv(path: &Path) -> Result<Vec<f64>, CliError> {
    let file = File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    let mut lines = BufReader::new(file).lines();
    match lines.next() {
        Some(Ok(header)) if header.trim() == "travel_time_s" => {}
        Some(Ok(header)) => {
            return Err(CliError::Usage(format!(
                "expected header 'travel_time_s', got '{header}'"
            )))
        }
        _ => return Err(CliError::Usage("empty sample file".into())),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| CliError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let v: f64 = line.trim().parse().map_err(|_| {
            CliError::Usage(format!("line {}: '{line}' is not numeric", i + 2))
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(CliError::Usage("sample file has no rows".into()));
    }
    Ok(out)
}

pub fn write_output_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

/// Serialize to pretty JSON for file artifacts.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable artifact")
}
