use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rejinf::data::{write_labeled_csv, write_unlabeled_csv};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::output::{create_dir, write_csv, write_manifest};
use crate::source::generate;

pub const LABEL_COLUMN: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub population_bayes_auc: f64,
    pub accepted_bayes_auc: f64,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_owned(),
            source,
        })
}

/// Writes `accepted.csv`, `rejected.csv` and `oracle.csv` (true posterior
/// and outcome of every application).
pub fn simulate(config: &RunConfig, out: &Path) -> CliResult<SimulateSummary> {
    let data = generate(config)?;
    create_dir(out)?;
    let paths: Vec<PathBuf> = ["accepted.csv", "rejected.csv", "oracle.csv"]
        .iter()
        .map(|f| out.join(f))
        .collect();
    write_labeled_csv(create(&paths[0])?, &data.accepted, LABEL_COLUMN)?;
    write_unlabeled_csv(create(&paths[1])?, &data.rejected)?;
    let accepted = (0..data.accepted.len()).map(|i| {
        vec![
            "accepted".to_string(),
            i.to_string(),
            data.accepted.labels[i].to_string(),
            data.accepted_posterior[i].to_string(),
        ]
    });
    let rejected = (0..data.rejected.len()).map(|i| {
        vec![
            "rejected".to_string(),
            i.to_string(),
            data.rejected_labels[i].to_string(),
            data.rejected_posterior[i].to_string(),
        ]
    });
    write_csv(
        &paths[2],
        &["set", "row", "label", "posterior"],
        accepted.chain(rejected),
    )?;
    write_manifest(out, "simulate", config, &paths)?;
    Ok(SimulateSummary {
        accepted: data.accepted.len(),
        rejected: data.rejected.len(),
        population_bayes_auc: data.oracle.population_bayes_auc(),
        accepted_bayes_auc: data.oracle.accepted_bayes_auc(),
    })
}
