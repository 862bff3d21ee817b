//! Where the accepted and rejected applications come from.

use rejinf::data::{
    load_csv, make_design, synth_generate, CsvSchema, Design, DesignSpec, LabeledDataset, Loaded,
    SyntheticData, UnlabeledDataset,
};
use rejinf::rng::derive_seed;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::{STREAM_DESIGN, STREAM_GENERATOR};

pub struct Source {
    pub accepted: LabeledDataset,
    pub rejected: UnlabeledDataset,
    /// Present when the rows were generated.
    pub synthetic: Option<SyntheticData>,
}

pub fn generate(config: &RunConfig) -> CliResult<SyntheticData> {
    let g = config
        .generator
        .as_ref()
        .ok_or_else(|| CliError::config("this command needs a [generator] section"))?;
    Ok(synth_generate(
        g,
        derive_seed(config.seed, STREAM_GENERATOR),
    )?)
}

pub fn load_labeled(path: &std::path::Path, label: &str) -> CliResult<LabeledDataset> {
    let (loaded, report) =
        load_csv(path, &CsvSchema::labeled(label)).map_err(|e| with_path(e, path))?;
    if report.dropped_rows > 0 {
        log::warn!(
            "{}: dropped {} rows with missing values",
            path.display(),
            report.dropped_rows
        );
    }
    match loaded {
        Loaded::Labeled(d) => Ok(d),
        Loaded::Unlabeled(_) => unreachable!("labeled schema yields a labeled set"),
    }
}

fn load_unlabeled(path: &std::path::Path) -> CliResult<UnlabeledDataset> {
    let (loaded, report) =
        load_csv(path, &CsvSchema::unlabeled()).map_err(|e| with_path(e, path))?;
    if report.dropped_rows > 0 {
        log::warn!(
            "{}: dropped {} rows with missing values",
            path.display(),
            report.dropped_rows
        );
    }
    match loaded {
        Loaded::Unlabeled(d) => Ok(d),
        Loaded::Labeled(_) => unreachable!("unlabeled schema yields an unlabeled set"),
    }
}

fn with_path(e: rejinf::Error, path: &std::path::Path) -> CliError {
    match e {
        rejinf::Error::Io(source) => CliError::Io {
            path: path.to_owned(),
            source,
        },
        other => CliError::config(format!("{}: {other}", path.display())),
    }
}

pub fn load_source(config: &RunConfig) -> CliResult<Source> {
    if let Some(paths) = &config.data {
        return Ok(Source {
            accepted: load_labeled(&paths.accepted, &paths.label_column)?,
            rejected: load_unlabeled(&paths.rejected)?,
            synthetic: None,
        });
    }
    if config.generator.is_some() {
        let data = generate(config)?;
        return Ok(Source {
            accepted: data.accepted.clone(),
            rejected: data.rejected.clone(),
            synthetic: Some(data),
        });
    }
    Err(CliError::config("give a [data] or a [generator] section"))
}

/// The configured train/test protocol under the run seed.
pub fn design(config: &RunConfig, source: &Source) -> CliResult<Design> {
    let spec = DesignSpec {
        seed: derive_seed(config.seed, STREAM_DESIGN),
        ..config.design.clone()
    };
    Ok(make_design(&source.accepted, &source.rejected, &spec)?)
}
