use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Provenance attached to every output: tool version and the effective
/// configuration.
#[derive(Debug, Serialize)]
pub struct Metadata<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: C,
}

impl<C: Serialize> Metadata<C> {
    pub fn new(command: &'static str, config: C) -> Self {
        Self { tool: "routed-bell", version: env!("CARGO_PKG_VERSION"), command, config }
    }
}

#[derive(Serialize)]
struct Envelope<'a, M: Serialize, R: Serialize> {
    metadata: &'a M,
    report: &'a R,
}

pub fn json<M: Serialize, R: Serialize>(metadata: &M, report: &R) -> Result<String, String> {
    serde_json::to_string_pretty(&Envelope { metadata, report }).map(|s| s + "\n").map_err(|e| e.to_string())
}

/// CSV with a leading `# {metadata json}` comment line and a header row.
pub fn csv<M: Serialize, R: Serialize>(metadata: &M, rows: &[R]) -> Result<String, String> {
    let mut out = format!("# {}\n", serde_json::to_string(metadata).map_err(|e| e.to_string())?);
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| e.to_string())?;
    }
    let bytes = writer.into_inner().map_err(|e| e.to_string())?;
    out.push_str(&String::from_utf8(bytes).map_err(|e| e.to_string())?);
    Ok(out)
}

/// Prints `text` and, when `out` is set, also writes it to `out/name`.
pub fn emit(text: &str, out: Option<&Path>, name: &str) -> Result<Option<PathBuf>, String> {
    std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string())?;
    match out {
        None => Ok(None),
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
            let path = dir.join(name);
            std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok(Some(path))
        }
    }
}
