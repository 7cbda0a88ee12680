//! Grids of `(p, α, q)` cells, one results file pair per cell.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepCell};
use super::experiment::run_experiment;
use super::output::{write_results, Slopes};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub cell: SweepCell,
    pub csv: PathBuf,
    pub json: PathBuf,
    pub slopes: std::collections::BTreeMap<String, Slopes>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub cells: Vec<ManifestEntry>,
}

/// Runs every sweep cell in order and writes `<stem>.csv`, `<stem>.json`
/// per cell plus `manifest.json` into `dir`. File paths in the manifest are
/// relative to `dir`.
pub fn run_sweep(config: &ExperimentConfig, dir: &Path) -> Result<Manifest> {
    config.validate()?;
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "no [sweep] cells configured"))?;
    let mut cells = Vec::with_capacity(sweep.cells.len());
    for cell in &sweep.cells {
        let stem = cell.stem();
        log::info!("sweep cell {stem}");
        let result = run_experiment(&config.apply_cell(cell))?;
        write_results(&result, dir, &stem)?;
        cells.push(ManifestEntry {
            cell: *cell,
            csv: PathBuf::from(format!("{stem}.csv")),
            json: PathBuf::from(format!("{stem}.json")),
            slopes: result
                .methods
                .iter()
                .map(|m| {
                    let s = Slopes {
                        last: m.slope_last,
                        avg: m.slope_avg,
                    };
                    (m.method.label.clone(), s)
                })
                .collect(),
        });
    }
    let manifest = Manifest { cells };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
