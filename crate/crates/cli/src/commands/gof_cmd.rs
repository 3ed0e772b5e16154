use pathttd_core::GofReport;

use super::common::{read_sample_csv, write_output_file};
use super::CliError;
use crate::config::Settings;
use crate::output::{OutputFormat, Table};
use crate::GofArgs;

pub fn run(args: GofArgs, settings: &Settings) -> Result<(), CliError> {
    settings.check_command("gof")?;
    let reference = read_sample_csv(&args.reference)?;
    let model = read_sample_csv(&args.model)?;
    let label = args.label.unwrap_or_else(|| "model".to_string());
    let report = GofReport::from_samples(label, &reference, &model)?;

    match settings.format {
        OutputFormat::Json => {
            let json = super::common::to_json_string(&report);
            println!("{json}");
            if let Some(path) = &settings.out {
                write_output_file(path, &json)?;
            }
        }
        OutputFormat::Csv => {
            let table = Table {
                columns: vec!["model", "ks", "cvm", "n_reference", "n_model"],
                rows: vec![vec![
                    report.model.clone(),
                    report.ks.to_string(),
                    report.cvm.to_string(),
                    report.n_reference.to_string(),
                    report.n_model.to_string(),
                ]],
            };
            table.print(OutputFormat::Csv);
            if let Some(path) = &settings.out {
                write_output_file(path, &table.to_csv_string())?;
            }
        }
    }
    Ok(())
}
