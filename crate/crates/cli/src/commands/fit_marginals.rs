use pathttd_core::{ks_against_cdf, GmmParams};
use serde::Serialize;

use super::common::{fit_all_marginals, load_series, write_output_file};
use super::CliError;
use crate::config::{Settings, DEFAULT_K};
use crate::output::{OutputFormat, Table};
use crate::FitMarginalsArgs;

#[derive(Serialize)]
struct SegmentFit {
    segment_id: u32,
    params: GmmParams,
    /// Self-fit KS of the fitted mixture against its training sample.
    ks: f64,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct MarginalsOutput {
    segments: Vec<SegmentFit>,
}

pub fn run(args: FitMarginalsArgs, settings: &Settings) -> Result<(), CliError> {
    settings.check_command("fit-marginals")?;
    let segments = args.segments.or_else(|| settings.config.segments.clone());
    let (series, discarded) = load_series(&args.input, segments.as_deref())?;
    let k = args.k.or(settings.config.k).unwrap_or(DEFAULT_K);

    let fits = fit_all_marginals(&series, k, settings.seed)?;
    let mut segments = Vec::with_capacity(fits.len());
    for (j, fit) in fits.into_iter().enumerate() {
        let col = series.column(j);
        let ks = ks_against_cdf(&col, |x| fit.params.cdf(x))?;
        segments.push(SegmentFit {
            segment_id: series.segment_ids()[j],
            params: fit.params,
            ks,
            log_likelihood: fit.log_likelihood,
            iterations: fit.iterations,
            converged: fit.converged,
        });
    }
    let output = MarginalsOutput { segments };

    eprintln!(
        "fitted k={k} mixtures on N={} complete drives ({discarded} discarded)",
        series.n()
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
            let table = to_table(&output);
            table.print(OutputFormat::Csv);
            if let Some(path) = &settings.out {
                write_output_file(path, &table.to_csv_string())?;
            }
        }
    }
    Ok(())
}

fn to_table(output: &MarginalsOutput) -> Table {
    let mut rows = Vec::new();
    for seg in &output.segments {
        for c in 0..seg.params.k() {
            rows.push(vec![
                seg.segment_id.to_string(),
                c.to_string(),
                seg.params.means()[c].to_string(),
                seg.params.sigmas()[c].to_string(),
                seg.params.weights()[c].to_string(),
                seg.ks.to_string(),
                seg.converged.to_string(),
            ]);
        }
    }
    Table {
        columns: vec![
            "segment_id",
            "component",
            "mean",
            "sigma",
            "weight",
            "ks",
            "converged",
        ],
        rows,
    }
}
