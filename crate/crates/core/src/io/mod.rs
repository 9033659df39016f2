//! Files, configuration and the experiment runner.

mod config;
mod container;
mod plot;
mod run;

use std::io::Write;
use std::path::Path;

pub use config::{
    canonical_digest, DatasetSource, ExperimentConfig, MapSource, MetricSelection, ModelSource, OrderSettings, OutputFormat, Variant,
};
pub use container::{
    dataset_digest, dataset_from_json, dataset_to_json, decode_dataset, decode_maps, encode_dataset, encode_maps,
    maps_from_json, maps_to_json, read_dataset, read_maps, read_maps_for, write_dataset, write_maps, MapFile, MAGIC,
    VERSION,
};
pub use plot::{emit_plot_data, read_plot_json, PlotData, PlotFile};
pub use run::{
    build_model, modify_stream, run_experiment, trial_data_seed, trial_noise_seed, write_manifest, OutputEntry,
    RunManifest,
};

use crate::error::{Error, Result};

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// Process exit status for an error: 2 config, 3 model bridge, 4 data.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::NothingToRun | Error::InvalidParameter(_) => 2,
        Error::Bridge(_) | Error::InvalidProbabilities(_) => 3,
        _ => 4,
    }
}
