//! Configuration, scenario execution and file outputs for the `curveflow`
//! command-line tool.

pub mod config;
pub mod error;
pub mod initial;
pub mod output;
pub mod run;

use std::path::Path;

pub use config::{
    load_config, Formats, Mode, PinningChoice, RawConfig, RunConfig, KEYS, OUT_DIR_ENV,
};
pub use error::ConfigError;
pub use initial::InitialCondition;
pub use output::{svg_document, write_svg, SnapshotFile, SERIES_HEADER};
pub use run::{run, RunReport};

/// `--key value` / `--key=value` pairs from the command line. Hyphens in
/// keys are read as underscores; `--config <path>` names a base file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub config: Option<String>,
    pub pairs: Vec<(String, String)>,
}

impl Overrides {
    pub fn parse(args: &[String]) -> Result<Self, ConfigError> {
        let mut out = Overrides::default();
        let mut it = args.iter();
        while let Some(arg) = it.next() {
            let Some(flag) = arg.strip_prefix("--") else {
                return Err(ConfigError::Malformed {
                    line: 0,
                    message: format!("expected `--key value`, found `{arg}`"),
                });
            };
            let (key, value) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => {
                    let v = it.next().ok_or_else(|| ConfigError::Malformed {
                        line: 0,
                        message: format!("flag `--{flag}` needs a value"),
                    })?;
                    (flag.to_string(), v.clone())
                }
            };
            let key = key.replace('-', "_");
            if key == "config" {
                out.config = Some(value);
            } else {
                out.pairs.push((key, value));
            }
        }
        Ok(out)
    }
}

/// Builds the effective configuration: file values, then `env_out_dir`, then
/// command-line pairs. `mode` (from a subcommand) overrides the file's mode.
pub fn assemble(
    config_path: Option<&Path>,
    mode: Option<Mode>,
    overrides: &Overrides,
    env_out_dir: Option<&str>,
) -> Result<RunConfig, ConfigError> {
    let path = config_path.or(overrides.config.as_deref().map(Path::new));
    let mut raw = match path {
        Some(p) => RawConfig::from_file(p)?,
        None => RawConfig::default(),
    };
    if let Some(mode) = mode {
        raw.set("mode", mode.name())?;
    }
    let mut out_dir_flag = false;
    for (k, v) in &overrides.pairs {
        raw.set(k, v)?;
        out_dir_flag |= k == "out_dir";
    }
    raw.resolve(env_out_dir, out_dir_flag)
}
