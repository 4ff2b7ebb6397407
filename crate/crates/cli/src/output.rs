use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use stilde_core::lattice::GeometryReport;
use stilde_core::STilde;

use crate::config::RunConfig;
use crate::fail::Fail;

/// Wrapper written for every command. Deterministic: no timings, no paths.
#[derive(Serialize)]
pub struct Envelope {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub geometry: Option<GeometryStatus>,
    pub result: Value,
}

#[derive(Serialize)]
pub struct GeometryStatus {
    pub certified: bool,
    pub strict_pass: bool,
    pub desk_scale_pass: bool,
    pub notes: Vec<String>,
}

impl From<&GeometryReport> for GeometryStatus {
    fn from(g: &GeometryReport) -> Self {
        Self {
            certified: g.desk_scale_pass,
            strict_pass: g.strict_pass,
            desk_scale_pass: g.desk_scale_pass,
            notes: g.notes.clone(),
        }
    }
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

impl Envelope {
    pub fn new(command: &str, cfg: &RunConfig, geometry: Option<&GeometryReport>, result: impl Serialize) -> Result<Self, Fail> {
        Ok(Self {
            command: command.to_string(),
            config_hash: config_hash(cfg),
            seed: cfg.seed,
            geometry: geometry.map(GeometryStatus::from),
            result: serde_json::to_value(result)?,
        })
    }

    /// Prints to stdout, and writes `<command>.json` under `out` when given.
    pub fn emit(&self, out: Option<&Path>) -> Result<(), Fail> {
        let text = serde_json::to_string_pretty(self)?;
        // a closed pipe (`| head`) is not an error
        match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        }
        if let Some(dir) = out {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(format!("{}.json", self.command)), text + "\n")?;
        }
        Ok(())
    }
}

/// One row per entry: indices, labels, floating value and the exact form.
pub fn write_stilde_csv(s: &STilde, path: &Path) -> Result<(), Fail> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["row", "col", "row_label", "col_label", "re", "im", "exact"])?;
    let label = |l: &[u64]| l.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    for a in 0..s.rows() {
        for b in 0..s.cols() {
            let z = s.entry(a, b).to_complex();
            w.write_record([
                a.to_string(),
                b.to_string(),
                label(&s.left_labels[a]),
                label(&s.right_labels[b]),
                format!("{:.12}", z.re),
                format!("{:.12}", z.im),
                s.entry(a, b).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
