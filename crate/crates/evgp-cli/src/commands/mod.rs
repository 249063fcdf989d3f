pub mod bench;
pub mod evaluate;
pub mod inspect;
pub mod simulate;
pub mod train;

use std::path::Path;

use evgp::sim::SystemId;

use crate::CliError;

pub(crate) fn parse_system(s: &str) -> Result<SystemId, CliError> {
    match s {
        "pendulum" => Ok(SystemId::Pendulum),
        "cartpole" => Ok(SystemId::Cartpole),
        "acrobot" => Ok(SystemId::Acrobot),
        other => Err(CliError::config(format!(
            "unknown system '{other}' (expected pendulum | cartpole | acrobot)"
        ))),
    }
}

/// Flag value wins over config-file value wins over default.
pub(crate) fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>, default: T) -> T {
    flag.clone().or_else(|| file.clone()).unwrap_or(default)
}

pub(crate) fn pick_required<T: Clone>(
    flag: &Option<T>,
    file: &Option<T>,
    name: &str,
) -> Result<T, CliError> {
    flag.clone()
        .or_else(|| file.clone())
        .ok_or_else(|| CliError::config(format!("missing required option --{name}")))
}

/// Load a JSON config file into the per-command option struct.
pub(crate) fn load_config<T: serde::de::DeserializeOwned + Default>(
    path: &Option<std::path::PathBuf>,
) -> Result<T, CliError> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("invalid config {}: {e}", p.display())))
        }
    }
}

/// Sidecar path of a dataset CSV: same stem, `.json` extension.
pub(crate) fn sidecar_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("json")
}
