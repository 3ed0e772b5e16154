use pathttd_core::{adjacent_taus, fit_copula, Family, FitResult, PairTau};
use serde::Serialize;

use super::common::{build_pseudo, fit_all_marginals, load_series, parse_families, write_output_file};
use super::CliError;
use crate::config::{PseudoMode, Settings, DEFAULT_K};
use crate::output::{OutputFormat, Table};
use crate::FitCopulaArgs;

#[derive(Serialize)]
#[serde(untagged)]
enum FamilyOutcome {
    Fitted(FitResult),
    Failed { family: Family, error: String },
}

#[derive(Serialize)]
struct CopulaOutput {
    adjacent_taus: Vec<PairTau>,
    fits: Vec<FamilyOutcome>,
}

pub fn run(args: FitCopulaArgs, settings: &Settings) -> Result<(), CliError> {
    settings.check_command("fit-copula")?;
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

    let marginals = match mode {
        PseudoMode::Parametric => fit_all_marginals(&series, k, settings.seed)?,
        PseudoMode::Empirical => Vec::new(),
    };
    let pseudo = build_pseudo(&series, mode, &marginals)?;

    // Families are independent fits; run them concurrently and collect in a
    // fixed order so the output is deterministic.
    let results: Vec<Result<FitResult, pathttd_core::Error>> = std::thread::scope(|scope| {
        let handles: Vec<_> = families
            .iter()
            .map(|&family| {
                let pseudo = &pseudo;
                scope.spawn(move || fit_copula(family, pseudo))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("fit thread")).collect()
    });

    let mut fitted: Vec<FitResult> = Vec::new();
    let mut failed: Vec<FamilyOutcome> = Vec::new();
    for (family, result) in families.iter().zip(results) {
        match result {
            Ok(fit) => fitted.push(fit),
            Err(e) => failed.push(FamilyOutcome::Failed {
                family: *family,
                error: e.to_string(),
            }),
        }
    }
    if fitted.is_empty() {
        return Err(CliError::Fit("every family fit failed".into()));
    }
    // Best log-likelihood first; failures trail.
    fitted.sort_by(|a, b| b.log_likelihood.partial_cmp(&a.log_likelihood).unwrap());

    let table = to_table(&fitted);
    let output = CopulaOutput {
        adjacent_taus: adjacent_taus(&series)?,
        fits: fitted
            .into_iter()
            .map(FamilyOutcome::Fitted)
            .chain(failed)
            .collect(),
    };

    eprintln!(
        "fitted {} families on N={} drives x d={} segments ({discarded} discarded)",
        output.fits.len(),
        series.n(),
        series.s()
    );
    match settings.format {
        OutputFormat::Json => {
            let json = super::common::to_json_string(&output);
            println!("{json}");
            if let Some(path) = &settings.out {
                write_output_file(path, &json)?;
            }
        }
        OutputFormat::Csv => {
            table.print(OutputFormat::Csv);
            if let Some(path) = &settings.out {
                write_output_file(path, &table.to_csv_string())?;
            }
        }
    }
    Ok(())
}

fn to_table(fits: &[FitResult]) -> Table {
    let rows = fits
        .iter()
        .map(|f| {
            vec![
                f.model.family().name().to_string(),
                f.model.parameter_label(),
                format!("{:.4}", f.log_likelihood),
                f.iterations.to_string(),
                f.converged.to_string(),
            ]
        })
        .collect();
    Table {
        columns: vec![
            "family",
            "parameter",
            "log_likelihood",
            "iterations",
            "converged",
        ],
        rows,
    }
}
