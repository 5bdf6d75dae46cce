//! Seed, version and configuration hash stamped on every output.

use std::path::Path;

use geodp::Meta;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

/// SHA-256 over the subcommand, its serialized arguments (output paths
/// excluded) and the contents of every input file.
pub fn config_hash<A: Serialize>(command: &str, args: &A, inputs: &[&Path]) -> Result<String, Failure> {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    let json = serde_json::to_vec(args).map_err(|e| Failure::Internal(e.into()))?;
    h.update(&json);
    for path in inputs {
        h.update([0]);
        h.update(std::fs::read(path)?);
    }
    Ok(format!("{:x}", h.finalize()))
}

pub fn meta<A: Serialize>(command: &str, seed: Option<u64>, args: &A, inputs: &[&Path]) -> Result<Meta, Failure> {
    let mut m = Meta::new(seed);
    m.config_hash = Some(config_hash(command, args, inputs)?);
    Ok(m)
}

/// Comment line opening every CSV output.
pub fn csv_preamble(meta: &Meta) -> String {
    let seed = meta.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!(
        "# seed={seed} version={} config_hash={}\n",
        meta.version,
        meta.config_hash.as_deref().unwrap_or("none")
    )
}

/// Writes a CSV body produced by `fill` behind the provenance line.
pub fn write_csv<F>(path: &Path, meta: &Meta, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut Vec<u8>) -> Result<(), Failure>,
{
    let mut buf = csv_preamble(meta).into_bytes();
    fill(&mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}
