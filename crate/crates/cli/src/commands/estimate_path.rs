use std::path::Path;

use pathttd_core::{
    empirical_path, estimate_convolution_path, estimate_copula_path, fit_copula, Family,
    GofReport, PathTtdEstimate,
};
use serde::Serialize;

use super::common::{
    build_pseudo, fit_all_marginals, load_series, parse_families, subseed, to_json_string,
    write_output_file,
};
use super::CliError;
use crate::config::{PseudoMode, Settings, DEFAULT_DRAWS, DEFAULT_K};
use crate::output::Table;
use crate::EstimatePathArgs;

/// One row of the result table: a model scored against the empirical
/// reference, with its fitted parameters.
#[derive(Serialize)]
pub struct ScoredModel {
    pub model: String,
    pub ks: f64,
    pub cvm: f64,
    pub parameter: String,
    pub n_reference: usize,
    pub n_model: usize,
}

pub struct PathRun {
    pub scored: Vec<ScoredModel>,
    pub estimates: Vec<(String, PathTtdEstimate)>,
    pub failures: Vec<(Family, String)>,
}

pub fn run(args: EstimatePathArgs, settings: &Settings) -> Result<(), CliError> {
    settings.check_command("estimate-path")?;
    let segments = args.segments.or_else(|| settings.config.segments.clone());
    let (series, discarded) = load_series(&args.input, segments.as_deref())?;
    let families = parse_families(
        args.families
            .as_deref()
            .or(settings.config.families.as_deref()),
    )?;
    let mode = args
        .pseudo
        .or(settings.config.pseudo)
        .unwrap_or(PseudoMode::Empirical);
    let k = args.k.or(settings.config.k).unwrap_or(DEFAULT_K);
    let m = args.m.or(settings.config.m).unwrap_or(DEFAULT_DRAWS);

    let run = estimate_all(&series, &families, mode, k, m, settings.seed)?;

    eprintln!(
        "estimated {} models on N={} drives x d={} segments ({discarded} discarded)",
        run.scored.len(),
        series.n(),
        series.s()
    );
    for (family, error) in &run.failures {
        eprintln!("  fit failed for {}: {error}", family.name());
    }

    let table = to_table(&run.scored);
    table.print(settings.format);

    if let Some(dir) = &settings.out {
        write_artifacts(dir, &run)?;
        eprintln!("artifacts written to {}", dir.display());
    }
    Ok(())
}

/// Fit everything and score every model against the empirical reference;
/// shared with the sweep command.
pub fn estimate_all(
    series: &pathttd_core::SegmentSeries,
    families: &[Family],
    mode: PseudoMode,
    k: usize,
    m: usize,
    seed: u64,
) -> Result<PathRun, CliError> {
    let d = series.s();
    let marginal_fits = fit_all_marginals(series, k, seed)?;
    let marginals: Vec<_> = marginal_fits.iter().map(|f| f.params.clone()).collect();
    let pseudo = build_pseudo(series, mode, &marginal_fits)?;

    let reference = empirical_path(series);

    let convolution =
        estimate_convolution_path(&marginals, m, subseed(seed, "path:convolution"))?;

    let family_results: Vec<Result<PathTtdEstimate, pathttd_core::Error>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = families
                .iter()
                .map(|&family| {
                    let marginals = &marginals;
                    let pseudo = &pseudo;
                    scope.spawn(move || {
                        let fit = fit_copula(family, pseudo)?;
                        estimate_copula_path(
                            marginals,
                            &fit.model,
                            m,
                            subseed(seed, &format!("path:{}", family.name())),
                        )
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("estimate thread"))
                .collect()
        });

    let mut estimates: Vec<(String, PathTtdEstimate)> = vec![
        (format!("{d}D Empirical"), reference),
        (format!("{d}D Convolution"), convolution),
    ];
    let mut failures = Vec::new();
    for (family, result) in families.iter().zip(family_results) {
        match result {
            Ok(est) => estimates.push((format!("{d}D {}", family.table_label()), est)),
            Err(e) => failures.push((*family, e.to_string())),
        }
    }

    let reference_samples = estimates[0].1.samples().to_vec();
    let mut scored = Vec::new();
    for (label, est) in estimates.iter().skip(1) {
        let report = GofReport::from_samples(label.clone(), &reference_samples, est.samples())?;
        scored.push(ScoredModel {
            model: report.model,
            ks: report.ks,
            cvm: report.cvm,
            parameter: est
                .model()
                .map_or_else(|| "/".to_string(), |m| m.parameter_label()),
            n_reference: report.n_reference,
            n_model: report.n_model,
        });
    }
    scored.sort_by(|a, b| a.cvm.partial_cmp(&b.cvm).unwrap());
    Ok(PathRun {
        scored,
        estimates,
        failures,
    })
}

fn to_table(scored: &[ScoredModel]) -> Table {
    let rows = scored
        .iter()
        .map(|s| {
            vec![
                s.model.clone(),
                format!("{:.6}", s.ks),
                format!("{:.6}", s.cvm),
                s.parameter.clone(),
            ]
        })
        .collect();
    Table {
        columns: vec!["model", "ks", "cvm", "parameter"],
        rows,
    }
}

fn write_artifacts(dir: &Path, run: &PathRun) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let mut summaries = Vec::new();
    for (label, est) in &run.estimates {
        let slug = label.to_lowercase().replace(' ', "_");
        let mut buf = Vec::new();
        est.write_samples_csv(&mut buf)?;
        write_output_file(
            &dir.join(format!("samples_{slug}.csv")),
            &String::from_utf8(buf).expect("utf8 csv"),
        )?;
        summaries.push(est.summary());
    }
    write_output_file(&dir.join("summary.json"), &to_json_string(&summaries))?;
    write_output_file(&dir.join("gof.json"), &to_json_string(&run.scored))?;
    Ok(())
}
