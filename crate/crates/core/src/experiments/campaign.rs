use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{design, run_distance_table, run_qq_study, run_variance_comparison, Campaign, SimConfig};
use crate::error::Result;
use crate::estimation::SolverOptions;

/// Run record written as `manifest.json`. Contains no timestamps, so
/// identical configs give identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub software: String,
    pub version: String,
    pub config_sha256: String,
    pub base_seed: u64,
    pub campaigns: Vec<Campaign>,
    pub files: Vec<String>,
}

/// SHA-256 of the config's canonical JSON serialization, hex encoded.
pub fn config_sha256(cfg: &SimConfig) -> Result<String> {
    let bytes = serde_json::to_vec(cfg)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write(outdir: &Path, name: &str, contents: &str, files: &mut Vec<String>) -> Result<()> {
    fs::write(outdir.join(name), contents)?;
    files.push(name.to_string());
    Ok(())
}

/// Runs every campaign in `cfg` and writes CSV outputs plus
/// `manifest.json` under `outdir`:
///
/// * `distance.csv` for the distance campaign;
/// * `qq_summary.csv`, `fits.csv` and per-cell `<stem>.csv` /
///   `<stem>_quantiles.csv` for the normality campaign;
/// * `variance.csv` for the variance campaign.
pub fn run_simulation(cfg: &SimConfig, outdir: &Path, options: &SolverOptions) -> Result<Manifest> {
    cfg.validate()?;
    fs::create_dir_all(outdir)?;
    let mut files = Vec::new();
    let mut campaigns = cfg.campaigns.clone();
    campaigns.sort();
    campaigns.dedup();
    for campaign in &campaigns {
        match campaign {
            Campaign::Distance => {
                let table = run_distance_table(cfg)?;
                write(outdir, "distance.csv", &table.to_csv(), &mut files)?;
            }
            Campaign::Qq => {
                let study = run_qq_study(cfg, None, options)?;
                for cell in &study.cells {
                    let stem = cell.file_stem();
                    write(outdir, &format!("{stem}.csv"), &cell.records_csv(), &mut files)?;
                    write(outdir, &format!("{stem}_quantiles.csv"), &cell.quantiles_csv(), &mut files)?;
                }
                write(outdir, "qq_summary.csv", &study.summary_csv(), &mut files)?;
                write(outdir, "fits.csv", &study.fits_csv(), &mut files)?;
            }
            Campaign::Variance => {
                let mut s = String::from("n,epsilon_spec,epsilon,l_spec,l,");
                s.push_str(super::VarianceTable::HEADER);
                s.push('\n');
                for &n in &cfg.n_values {
                    for l in &cfg.l_spec {
                        let theta = design(n, l)?;
                        for e in &cfg.epsilon_spec {
                            let eps = e.value(n);
                            let table = run_variance_comparison(&theta, eps)?;
                            for line in table.to_csv().lines().skip(1) {
                                let _ = writeln!(s, "{n},{e},{eps},{l},{},{line}", l.value(n));
                            }
                        }
                    }
                }
                write(outdir, "variance.csv", &s, &mut files)?;
            }
        }
    }
    let manifest = Manifest {
        software: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: config_sha256(cfg)?,
        base_seed: cfg.base_seed,
        campaigns,
        files,
    };
    fs::write(outdir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}
