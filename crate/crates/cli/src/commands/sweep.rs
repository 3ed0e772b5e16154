use pathttd_core::{
    empirical_path, estimate_convolution_path, estimate_copula_path, fit_copula, Family,
    GofReport, SegmentSeries,
};

use super::common::{
    build_pseudo, fit_all_marginals, load_series, parse_families, subseed, write_output_file,
};
use super::CliError;
use crate::config::{PseudoMode, Settings, DEFAULT_DRAWS, DEFAULT_K};
use crate::output::Table;
use crate::SweepArgs;

struct SweepRow {
    segment_count: usize,
    model: String,
    ks: f64,
    cvm: f64,
}

pub fn run(args: SweepArgs, settings: &Settings) -> Result<(), CliError> {
    settings.check_command("sweep")?;
    let (series, discarded) = load_series(&args.input, None)?;
    if series.s() < 2 {
        return Err(CliError::Usage(format!(
            "sweep needs at least 2 segments, dataset has {}",
            series.s()
        )));
    }
    let families = if args.all_families {
        super::common::DEFAULT_FAMILIES.to_vec()
    } else {
        match args.families.as_deref().or(settings.config.families.as_deref()) {
            Some(list) => parse_families(Some(list))?,
            None => vec![Family::Clayton],
        }
    };
    let mode = args
        .pseudo
        .or(settings.config.pseudo)
        .unwrap_or(PseudoMode::Empirical);
    let k = args.k.or(settings.config.k).unwrap_or(DEFAULT_K);
    let m = args.m.or(settings.config.m).unwrap_or(DEFAULT_DRAWS);
    let seed = settings.seed;

    // Marginals are per-segment, so fit them once on the full series and
    // reuse the prefix for every path length.
    let marginal_fits = fit_all_marginals(&series, k, seed)?;

    let lengths: Vec<usize> = (2..=series.s()).collect();
    let per_length: Vec<Result<Vec<SweepRow>, CliError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = lengths
            .iter()
            .map(|&len| {
                let series = &series;
                let families = &families;
                let marginal_fits = &marginal_fits;
                scope.spawn(move || {
                    sweep_length(series, marginal_fits, families, len, mode, m, seed)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep thread"))
            .collect()
    });

    let mut rows = Vec::new();
    for result in per_length {
        rows.extend(result?);
    }

    eprintln!(
        "swept prefix lengths 2..={} on N={} drives ({discarded} discarded)",
        series.s(),
        series.n()
    );
    let table = to_table(&rows);
    table.print(settings.format);
    if let Some(path) = &settings.out {
        write_output_file(path, &table.to_csv_string())?;
    }
    Ok(())
}

fn sweep_length(
    series: &SegmentSeries,
    marginal_fits: &[pathttd_core::GmmFit],
    families: &[Family],
    len: usize,
    mode: PseudoMode,
    m: usize,
    seed: u64,
) -> Result<Vec<SweepRow>, CliError> {
    let prefix = series.prefix(len)?;
    let marginals: Vec<_> = marginal_fits[..len]
        .iter()
        .map(|f| f.params.clone())
        .collect();
    let pseudo = build_pseudo(&prefix, mode, &marginal_fits[..len])?;

    let reference = empirical_path(&prefix);
    let mut rows = Vec::new();

    let conv = estimate_convolution_path(&marginals, m, subseed(seed, &format!("sweep:{len}:conv")))?;
    let report = GofReport::from_samples("convolution", reference.samples(), conv.samples())?;
    rows.push(SweepRow {
        segment_count: len,
        model: "convolution".into(),
        ks: report.ks,
        cvm: report.cvm,
    });

    for &family in families {
        let fit = fit_copula(family, &pseudo)?;
        let est = estimate_copula_path(
            &marginals,
            &fit.model,
            m,
            subseed(seed, &format!("sweep:{len}:{}", family.name())),
        )?;
        let report = GofReport::from_samples(family.name(), reference.samples(), est.samples())?;
        rows.push(SweepRow {
            segment_count: len,
            model: family.name().into(),
            ks: report.ks,
            cvm: report.cvm,
        });
    }
    Ok(rows)
}

fn to_table(rows: &[SweepRow]) -> Table {
    Table {
        columns: vec!["segment_count", "model", "ks", "cvm"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.segment_count.to_string(),
                    r.model.clone(),
                    format!("{:.6}", r.ks),
                    format!("{:.6}", r.cvm),
                ]
            })
            .collect(),
    }
}
