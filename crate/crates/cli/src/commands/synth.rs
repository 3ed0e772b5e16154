use std::fs::File;
use std::io::Write;

use pathttd_core::{adjacent_taus, presets, synthesize, write_trips, SynthSpec};

use super::common::write_output_file;
use super::CliError;
use crate::config::Settings;
use crate::SynthArgs;

pub fn run(args: SynthArgs, settings: &Settings) -> Result<(), CliError> {
    settings.check_command("synth")?;

    let mut spec: SynthSpec = if let Some(path) = &args.spec_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid synth spec: {e}")))?
    } else {
        let name = args.spec.as_deref().unwrap_or("leopoldstrasse");
        let n = args
            .n
            .map(|n| n as usize)
            .unwrap_or(presets::LEOPOLDSTRASSE_DEFAULT_TRIPS);
        presets::builtin(name, n, settings.seed)
            .ok_or_else(|| CliError::Usage(format!("unknown built-in spec '{name}'")))?
    };
    if let Some(n) = args.n {
        spec.n_trips = n as usize;
    }
    if settings.seed_explicit || args.spec_file.is_none() {
        spec.seed = settings.seed;
    }
    if let Some(p) = args.gps_artifact {
        spec.gps_artifact = p;
    }

    let series = synthesize(&spec)?;
    let records = series.to_trip_records();

    match &settings.out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            write_trips(file, &records)?;
        }
        None => {
            let mut buf = Vec::new();
            write_trips(&mut buf, &records)?;
            std::io::stdout()
                .write_all(&buf)
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
    }

    // Human summary on stderr; stdout stays clean CSV when not writing a file.
    eprintln!("synthesized N={} trips over S={} segments", series.n(), series.s());
    match adjacent_taus(&series) {
        Ok(taus) => {
            for t in taus {
                eprintln!("  tau({}, {}) = {:.3}", t.pair[0], t.pair[1], t.tau);
            }
        }
        Err(e) => eprintln!("  (adjacent taus unavailable: {e})"),
    }

    // Persist the resolved spec next to explicit outputs for reproducibility.
    if let Some(path) = &settings.out {
        let spec_path = path.with_extension("spec.json");
        write_output_file(&spec_path, &super::common::to_json_string(&spec))?;
        eprintln!("spec written to {}", spec_path.display());
    }
    Ok(())
}
