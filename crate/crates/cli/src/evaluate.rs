use std::path::{Path, PathBuf};

use rejinf::eval::{
    beta_calibrate_fit, metrics_report, platt_fit, CalibrationMap, MetricsReport, PlattInput,
    ScoredSet,
};

use crate::config::{CalibrationKind, ModelKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::models::ModelFile;
use crate::output::{create_dir, write_csv, write_json, write_manifest};
use crate::source::{design, load_labeled, load_source};

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateSummary {
    pub model: ModelKind,
    pub report: MetricsReport,
    pub calibration: Option<CalibrationMap>,
}

fn fit_map(kind: CalibrationKind, set: &ScoredSet) -> CliResult<Option<CalibrationMap>> {
    Ok(match kind {
        CalibrationKind::None => None,
        CalibrationKind::Platt => Some(platt_fit(set, PlattInput::Raw)?),
        CalibrationKind::PlattLogit => Some(platt_fit(set, PlattInput::Logit)?),
        CalibrationKind::Beta => Some(beta_calibrate_fit(set)?),
    })
}

/// Scores the test rows with a saved model and writes `report.json` and
/// `scores.csv` (plus `calibration.json` when a map is fitted).
pub fn evaluate(config: &RunConfig, out: &Path) -> CliResult<EvaluateSummary> {
    let ev = &config.evaluate;
    let model_path = ev
        .model_file
        .clone()
        .unwrap_or_else(|| out.join("model.json"));
    let model = ModelFile::load(&model_path)?;

    let needs_design = ev.test.is_none() || ev.calibration != CalibrationKind::None;
    let split = if needs_design {
        let source = load_source(config)?;
        let d = design(config, &source)?;
        Some((source, d))
    } else {
        None
    };

    let test = match (&ev.test, &split) {
        (Some(path), _) => {
            let label = config
                .data
                .as_ref()
                .map_or("default", |d| d.label_column.as_str());
            load_labeled(path, label)?
        }
        (None, Some((source, d))) => source.accepted.subset(&d.test_idx),
        (None, None) => unreachable!("a design exists whenever no test file is given"),
    };
    let raw_scores = model.score(&test.features, &test.feature_names)?;

    let map = match &split {
        Some((source, d)) if ev.calibration != CalibrationKind::None => {
            if d.calibration_idx.is_empty() {
                return Err(CliError::config(
                    "calibration needs design.calibration_frac > 0",
                ));
            }
            let cal = source.accepted.subset(&d.calibration_idx);
            let cal_scores = model.score(&cal.features, &cal.feature_names)?;
            fit_map(
                ev.calibration,
                &ScoredSet::new(cal_scores, cal.labels.clone())?,
            )?
        }
        _ => None,
    };
    let scores = match &map {
        Some(m) => m.apply_all(&raw_scores),
        None => raw_scores.clone(),
    };

    let set = ScoredSet::new(scores.clone(), test.labels.clone())?;
    let report = metrics_report(&set, config.seed, ev.threshold_rule, ev.h_measure)?;
    if (report.gini - (2.0 * report.auc - 1.0)).abs() > 1e-12 {
        return Err(CliError::SelfCheck(format!(
            "gini {} disagrees with auc {}",
            report.gini, report.auc
        )));
    }

    create_dir(out)?;
    let mut paths: Vec<PathBuf> = vec![out.join("report.json"), out.join("scores.csv")];
    write_json(&paths[0], &report)?;
    let rows = (0..test.len()).map(|i| {
        let mut row = vec![
            i.to_string(),
            test.labels[i].to_string(),
            raw_scores[i].to_string(),
        ];
        if map.is_some() {
            row.push(scores[i].to_string());
        }
        row
    });
    let header: &[&str] = if map.is_some() {
        &["row", "label", "score", "calibrated"]
    } else {
        &["row", "label", "score"]
    };
    write_csv(&paths[1], header, rows)?;
    if let Some(m) = &map {
        paths.push(out.join("calibration.json"));
        write_json(&paths[2], m)?;
    }
    write_manifest(out, "evaluate", config, &paths)?;
    Ok(EvaluateSummary {
        model: model.model.kind(),
        report,
        calibration: map,
    })
}
