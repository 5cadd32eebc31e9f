//! Flat `key = value` run configuration.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use curveflow::{
    parse_forcing, ConvexityPolicy, EnergyParams, FlowConfig, ForcingSpec, Pinning, Scheme,
    SteadyOptions,
};

use crate::error::ConfigError;
use crate::initial::InitialCondition;

/// Every key the format accepts, in echo order.
pub const KEYS: [&str; 17] = [
    "mode",
    "n",
    "dt",
    "t_end",
    "scheme",
    "record_every",
    "convexity_policy",
    "forcing",
    "initial",
    "xi",
    "grad_weight",
    "pinning",
    "residual_tol",
    "max_iters",
    "out_dir",
    "formats",
    "seed",
];

/// Environment variable that replaces `out_dir`.
pub const OUT_DIR_ENV: &str = "CURVEFLOW_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Evolve,
    Steady,
    Analyze,
    Render,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Evolve => "evolve",
            Mode::Steady => "steady",
            Mode::Analyze => "analyze",
            Mode::Render => "render",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "evolve" => Ok(Mode::Evolve),
            "steady" => Ok(Mode::Steady),
            "analyze" => Ok(Mode::Analyze),
            "render" => Ok(Mode::Render),
            _ => Err("expected one of evolve, steady, analyze, render".into()),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Formats {
    fn names(&self) -> Vec<&'static str> {
        [(self.csv, "csv"), (self.json, "json"), (self.svg, "svg")]
            .into_iter()
            .filter_map(|(on, name)| on.then_some(name))
            .collect()
    }
}

impl FromStr for Formats {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = Formats::default();
        for item in s.split(',').map(str::trim).filter(|x| !x.is_empty()) {
            match item {
                "csv" => f.csv = true,
                "json" => f.json = true,
                "svg" => f.svg = true,
                other => {
                    return Err(format!(
                        "unknown format `{other}` (expected csv, json, svg)"
                    ))
                }
            }
        }
        Ok(f)
    }
}

/// How the steady solver pins its neutral modes. `FixMean(None)` holds the
/// mean of the initial condition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PinningChoice {
    FixMean(Option<f64>),
    FixTranslation,
    Both(Option<f64>),
}

impl PinningChoice {
    pub fn resolve(self, initial_mean: f64) -> Pinning<f64> {
        match self {
            PinningChoice::FixMean(m) => Pinning::FixMean(m.unwrap_or(initial_mean)),
            PinningChoice::FixTranslation => Pinning::FixTranslation,
            PinningChoice::Both(m) => Pinning::Both(m.unwrap_or(initial_mean)),
        }
    }
}

impl FromStr for PinningChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, value) = match s.split_once(':') {
            Some((name, v)) => {
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| format!("bad mean value `{v}`"))?;
                (name.trim(), Some(v))
            }
            None => (s, None),
        };
        match (name, value) {
            ("fix_mean", v) => Ok(PinningChoice::FixMean(v)),
            ("fix_translation", None) => Ok(PinningChoice::FixTranslation),
            ("both", v) => Ok(PinningChoice::Both(v)),
            _ => Err("expected fix_mean[:value], fix_translation or both[:value]".into()),
        }
    }
}

impl std::fmt::Display for PinningChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let with = |f: &mut std::fmt::Formatter<'_>, name: &str, v: &Option<f64>| match v {
            Some(v) => write!(f, "{name}:{v:?}"),
            None => f.write_str(name),
        };
        match self {
            PinningChoice::FixMean(v) => with(f, "fix_mean", v),
            PinningChoice::FixTranslation => f.write_str("fix_translation"),
            PinningChoice::Both(v) => with(f, "both", v),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    pub n: usize,
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub record_every: usize,
    pub convexity_policy: ConvexityPolicy,
    pub forcing_text: String,
    pub forcing: ForcingSpec<f64>,
    pub initial: InitialCondition,
    pub xi: f64,
    pub grad_weight: f64,
    pub pinning: PinningChoice,
    pub residual_tol: f64,
    pub max_iters: usize,
    pub out_dir: PathBuf,
    pub formats: Formats,
    /// Reserved; no part of a run is random.
    pub seed: u64,
}

/// Raw `key → value` pairs in insertion order, before defaults and validation.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: Vec<(String, String)>,
    /// Directory that relative initial-condition paths are resolved against.
    base_dir: Option<PathBuf>,
}

fn check_key(key: &str) -> Result<(), ConfigError> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(ConfigError::UnknownKey {
            key: key.to_string(),
            accepted: KEYS.join(", "),
        })
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2
        && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\'')))
    {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

/// Drops a `#` comment unless it sits inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quote = None;
    for (i, c) in line.char_indices() {
        match (c, quote) {
            ('"' | '\'', None) => quote = Some(c),
            (c, Some(q)) if c == q => quote = None,
            ('#', None) => return &line[..i],
            _ => {}
        }
    }
    line
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::Malformed {
                    line: lineno + 1,
                    message: format!("expected `key = value`, found `{line}`"),
                });
            };
            let key = key.trim();
            check_key(key)?;
            if raw.get(key).is_some() {
                return Err(ConfigError::Malformed {
                    line: lineno + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
            raw.entries
                .push((key.to_string(), unquote(value).to_string()));
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let mut raw = Self::parse(&text)?;
        raw.base_dir = path.parent().map(Path::to_path_buf);
        Ok(raw)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Sets or replaces a key; used for command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        check_key(key)?;
        let value = unquote(value).to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        Ok(())
    }

    fn parsed<T: FromStr>(&self, key: &'static str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e: T::Err| ConfigError::Invalid {
                key,
                message: format!("`{v}`: {e}"),
            }),
        }
    }

    fn required(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.get(key).ok_or(ConfigError::MissingKey(key))
    }

    /// Applies defaults and validates every value. `CURVEFLOW_OUT`, when set,
    /// replaces an `out_dir` taken from the file; `out_dir_from_flag` keeps a
    /// command-line value in charge.
    pub fn resolve(
        &self,
        env_out_dir: Option<&str>,
        out_dir_from_flag: bool,
    ) -> Result<RunConfig, ConfigError> {
        let mode: Mode =
            self.required("mode")?
                .parse()
                .map_err(|message| ConfigError::Invalid {
                    key: "mode",
                    message,
                })?;
        let forcing_text = match (self.get("forcing"), mode) {
            (Some(f), _) => f.to_string(),
            (None, Mode::Render) => "0".to_string(),
            (None, _) => return Err(ConfigError::MissingKey("forcing")),
        };
        let forcing = parse_forcing::<f64>(&forcing_text).map_err(|e| ConfigError::Invalid {
            key: "forcing",
            message: e.to_string(),
        })?;
        let initial = InitialCondition::parse(self.required("initial")?, self.base_dir.as_deref())?;

        let scheme = match self.get("scheme").unwrap_or("imex2") {
            "imex1" => Scheme::Imex1,
            "imex2" => Scheme::Imex2,
            other => {
                return Err(ConfigError::Invalid {
                    key: "scheme",
                    message: format!("`{other}`: expected imex1 or imex2"),
                })
            }
        };
        let convexity_policy = match self.get("convexity_policy").unwrap_or("abort") {
            "abort" => ConvexityPolicy::Abort,
            "warn" => ConvexityPolicy::Warn,
            other => {
                return Err(ConfigError::Invalid {
                    key: "convexity_policy",
                    message: format!("`{other}`: expected abort or warn"),
                })
            }
        };
        let out_dir = match (env_out_dir, out_dir_from_flag) {
            (Some(env), false) if !env.is_empty() => PathBuf::from(env),
            _ => PathBuf::from(self.get("out_dir").unwrap_or("out")),
        };

        let cfg = RunConfig {
            mode,
            n: self.parsed("n", curveflow::grid::DEFAULT_GRID_SIZE)?,
            dt: self.parsed("dt", 1e-3)?,
            t_end: self.parsed("t_end", 1.0)?,
            scheme,
            record_every: self.parsed("record_every", 100)?,
            convexity_policy,
            forcing_text,
            forcing,
            initial,
            xi: self.parsed("xi", 0.1)?,
            grad_weight: self.parsed("grad_weight", 1.0)?,
            pinning: self.parsed("pinning", PinningChoice::FixTranslation)?,
            residual_tol: self.parsed("residual_tol", 1e-10)?,
            max_iters: self.parsed("max_iters", 50)?,
            out_dir,
            formats: self.parsed(
                "formats",
                Formats {
                    csv: true,
                    json: true,
                    svg: false,
                },
            )?,
            seed: self.parsed("seed", 0)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &'static str, e: curveflow::FlowError| ConfigError::Invalid {
            key,
            message: e.to_string(),
        };
        curveflow::make_grid::<f64>(self.n).map_err(|e| invalid("n", e))?;
        self.energy()
            .validate()
            .map_err(|e| invalid(if self.xi >= 0.0 { "grad_weight" } else { "xi" }, e))?;
        self.flow_config().validate().map_err(|e| {
            let key = if self.dt > 0.0 && self.dt.is_finite() {
                if self.record_every == 0 {
                    "record_every"
                } else {
                    "t_end"
                }
            } else {
                "dt"
            };
            invalid(key, e)
        })?;
        let opts = self.steady_options(0.0);
        if self.residual_tol.is_nan() || self.residual_tol <= 0.0 {
            return Err(ConfigError::Invalid {
                key: "residual_tol",
                message: "must be positive".into(),
            });
        }
        if self.max_iters == 0 {
            return Err(ConfigError::Invalid {
                key: "max_iters",
                message: "must be at least 1".into(),
            });
        }
        if self.mode == Mode::Steady {
            opts.validate(&self.forcing)
                .map_err(|e| invalid("pinning", e))?;
        }
        Ok(())
    }

    pub fn energy(&self) -> EnergyParams<f64> {
        EnergyParams {
            xi: self.xi,
            grad_weight: self.grad_weight,
        }
    }

    pub fn flow_config(&self) -> FlowConfig<f64> {
        FlowConfig::new(self.dt, self.t_end)
            .with_scheme(self.scheme)
            .with_record_every(self.record_every)
            .with_policy(self.convexity_policy)
            .with_energy(self.energy())
    }

    pub fn steady_options(&self, initial_mean: f64) -> SteadyOptions<f64> {
        SteadyOptions {
            max_iters: self.max_iters,
            residual_tol: self.residual_tol,
            pinning: self.pinning.resolve(initial_mean),
            ..SteadyOptions::default()
        }
    }

    /// Every key with its effective value, one `key = value` per line.
    pub fn echo(&self) -> String {
        let scheme = match self.scheme {
            Scheme::Imex1 => "imex1",
            Scheme::Imex2 => "imex2",
        };
        let policy = match self.convexity_policy {
            ConvexityPolicy::Abort => "abort",
            ConvexityPolicy::Warn => "warn",
        };
        let values = [
            self.mode.name().to_string(),
            self.n.to_string(),
            format!("{:?}", self.dt),
            format!("{:?}", self.t_end),
            scheme.to_string(),
            self.record_every.to_string(),
            policy.to_string(),
            format!("\"{}\"", self.forcing_text),
            format!("\"{}\"", self.initial),
            format!("{:?}", self.xi),
            format!("{:?}", self.grad_weight),
            self.pinning.to_string(),
            format!("{:?}", self.residual_tol),
            self.max_iters.to_string(),
            self.out_dir.display().to_string(),
            self.formats.names().join(","),
            self.seed.to_string(),
        ];
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Reads and validates a configuration file, taking `CURVEFLOW_OUT` from the
/// environment.
pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let env = std::env::var(OUT_DIR_ENV).ok();
    RawConfig::from_file(path)?.resolve(env.as_deref(), false)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> RawConfig {
        RawConfig::parse(
            "mode = evolve\nforcing = \"1.0*S\"\ninitial = perturbed_circle 2 2 0.05\n",
        )
        .unwrap()
    }

    #[test]
    fn defaults_applied() {
        let cfg = minimal().resolve(None, false).unwrap();
        assert_eq!(cfg.n, 256);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.forcing, ForcingSpec::Proportional(1.0));
        assert_eq!(cfg.scheme, Scheme::Imex2);
        assert_eq!(cfg.out_dir, PathBuf::from("out"));
        let echo = cfg.echo();
        assert!(echo.contains("n = 256\n"));
        assert!(echo.contains("dt = 0.001\n"));
        assert_eq!(echo.lines().count(), KEYS.len());
    }

    #[test]
    fn echo_reparses_to_same_config() {
        let cfg = minimal().resolve(None, false).unwrap();
        let again = RawConfig::parse(&cfg.echo())
            .unwrap()
            .resolve(None, false)
            .unwrap();
        assert_eq!(cfg.echo(), again.echo());
    }

    #[test]
    fn forcing_error_names_key() {
        let mut raw = minimal();
        raw.set("forcing", "S +").unwrap();
        let err = raw.resolve(None, false).unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { key: "forcing", .. }));
        assert!(err.to_string().contains("forcing"));
    }

    #[test]
    fn unknown_key_lists_accepted_keys() {
        let err = RawConfig::parse("mode = evolve\ndx = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("dx"));
        for k in KEYS {
            assert!(msg.contains(k), "{k} missing from {msg}");
        }
    }

    #[test]
    fn missing_required_keys() {
        let err = RawConfig::parse("forcing = 1\ninitial = circle 1\n")
            .unwrap()
            .resolve(None, false)
            .unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey("mode")));
        let err = RawConfig::parse("mode = evolve\ninitial = circle 1\n")
            .unwrap()
            .resolve(None, false)
            .unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey("forcing")));
    }

    #[test]
    fn comments_and_quotes() {
        let raw = RawConfig::parse("# header\nmode = steady # trailing\nforcing = '0.3*kappa^2 + 0.1*S_thetatheta'\ninitial=circle 2\n").unwrap();
        let cfg = raw.resolve(None, false).unwrap();
        assert_eq!(cfg.mode, Mode::Steady);
        assert_eq!(
            cfg.forcing,
            ForcingSpec::Anisotropic {
                alpha: 0.3,
                beta: 0.1
            }
        );
    }

    #[test]
    fn out_dir_precedence() {
        let mut raw = minimal();
        raw.set("out_dir", "from_file").unwrap();
        assert_eq!(
            raw.resolve(Some("from_env"), false).unwrap().out_dir,
            PathBuf::from("from_env")
        );
        assert_eq!(
            raw.resolve(Some("from_env"), true).unwrap().out_dir,
            PathBuf::from("from_file")
        );
        assert_eq!(
            raw.resolve(None, false).unwrap().out_dir,
            PathBuf::from("from_file")
        );
    }

    #[test]
    fn bad_values_name_their_key() {
        for (key, value) in [
            ("n", "7"),
            ("dt", "-1"),
            ("scheme", "rk4"),
            ("formats", "csv,png"),
            ("pinning", "fix_everything"),
            ("residual_tol", "0"),
            ("xi", "-0.5"),
        ] {
            let mut raw = minimal();
            raw.set(key, value).unwrap();
            match raw.resolve(None, false) {
                Err(ConfigError::Invalid { key: k, .. }) => assert_eq!(k, key),
                other => panic!("{key} = {value}: {other:?}"),
            }
        }
    }

    #[test]
    fn proportional_one_needs_mean_pin_in_steady_mode() {
        let mut raw = minimal();
        raw.set("mode", "steady").unwrap();
        assert!(raw.resolve(None, false).is_err());
        raw.set("pinning", "both").unwrap();
        assert!(raw.resolve(None, false).is_ok());
    }
}
