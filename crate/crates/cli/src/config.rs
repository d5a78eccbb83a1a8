//! Experiment configuration: a registry of known keys per experiment, a
//! sectioned `key = value` file format and command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dcat_core::units::KerrConvention;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    FigA1,
    Custom,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Fig1,
        Experiment::Fig2,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::FigA1,
        Experiment::Custom,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::FigA1 => "figA1",
            Experiment::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.id().eq_ignore_ascii_case(s))
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::Fig1 => "classical energy surface and line cuts, Husimi maps of the cat pair",
            Experiment::Fig2 => "X rotation by detuning: error surface over (R, t) and per-R traces",
            Experiment::Fig3 => "Z rotation: fidelity and frequency over R, error traces, Husimi maps",
            Experiment::Fig4 => "two-mode CNOT: basis-state fidelities over gate time, with and without the rate term",
            Experiment::FigA1 => "signed X-gate speed over R with closed-form overlays and zero crossings",
            Experiment::Custom => "single parameter point: X gate, and Z gate when the drive is matched",
        }
    }

    /// Keys accepted by this experiment (shared keys included) with defaults.
    pub fn keys(self) -> Vec<KeySpec> {
        let mut keys = common_keys();
        keys.extend(match self {
            Experiment::Fig1 => vec![
                KeySpec::new("alpha", KeyKind::Float, "1.63", "drive amplitude α"),
                KeySpec::new("r_panels", KeyKind::FloatList, "0,2", "R values for the Husimi panels"),
                KeySpec::new(
                    "r_line",
                    KeyKind::FloatList,
                    "-1,0,1",
                    "R values for the real-axis energy cuts",
                ),
                KeySpec::new("grid_points", KeyKind::Count, "161", "phase-space points per axis"),
                KeySpec::new("dim", KeyKind::Dim, "auto", "Fock cutoff"),
            ],
            Experiment::Fig2 => vec![
                KeySpec::new("alpha", KeyKind::Float, "1.0", "drive amplitude α"),
                KeySpec::new(
                    "r_grid",
                    KeyKind::FloatList,
                    "0.3:1.0:0.025",
                    "detuning ratios for the surface",
                ),
                KeySpec::new("t_max", KeyKind::Float, "7e-7", "end of the time axis (s)"),
                KeySpec::new("t_points", KeyKind::Count, "351", "time samples"),
                KeySpec::new(
                    "trace_r",
                    KeyKind::FloatList,
                    "0.4,0.45,0.5",
                    "R values with full traces",
                ),
                KeySpec::new("dim", KeyKind::Dim, "auto", "Fock cutoff"),
            ],
            Experiment::Fig3 => vec![
                KeySpec::new("alpha", KeyKind::Float, "1.63", "drive amplitude α"),
                KeySpec::new(
                    "r_grid",
                    KeyKind::FloatList,
                    "0.1,0.25,0.5,1,2,3,4,5,6,8,10",
                    "detuning ratios",
                ),
                KeySpec::new("trace_r", KeyKind::FloatList, "1,2,4", "R values with error traces"),
                KeySpec::new("n_periods", KeyKind::Float, "4", "error-trace span in half turns"),
                KeySpec::new("n_points", KeyKind::Count, "400", "error-trace samples"),
                KeySpec::new("husimi_r", KeyKind::Float, "2", "R for the deformed-pair Husimi panel"),
                KeySpec::new("grid_points", KeyKind::Count, "121", "phase-space points per axis"),
                KeySpec::new("dim", KeyKind::Dim, "auto", "Fock cutoff"),
            ],
            Experiment::Fig4 => vec![
                KeySpec::new("beta_c", KeyKind::Float, "1.63", "control amplitude"),
                KeySpec::new("beta_t", KeyKind::Float, "1.63", "target amplitude"),
                KeySpec::new(
                    "t_grid",
                    KeyKind::FloatList,
                    "6.65e-8,2.51e-7,6.89e-7",
                    "gate times (s)",
                ),
                KeySpec::new("dim_c", KeyKind::Dim, "auto", "control cutoff"),
                KeySpec::new("dim_t", KeyKind::Dim, "auto", "target cutoff"),
                KeySpec::new(
                    "geometric_phase",
                    KeyKind::Bool,
                    "false",
                    "also extract parity-sector phases at each T",
                ),
                KeySpec::new(
                    "trace_samples",
                    KeyKind::Count,
                    "0",
                    "instantaneous-trace intervals for |10> (0 = none, else >= 200)",
                ),
            ],
            Experiment::FigA1 => vec![
                KeySpec::new(
                    "alpha",
                    KeyKind::FloatList,
                    "1.0,1.63",
                    "drive amplitudes; one output set per value",
                ),
                KeySpec::new(
                    "r_grid",
                    KeyKind::FloatList,
                    "0:7:0.05",
                    "detuning ratios within [0, 7]",
                ),
                KeySpec::new("dim", KeyKind::Dim, "auto", "Fock cutoff"),
            ],
            Experiment::Custom => vec![
                KeySpec::new("alpha", KeyKind::Float, "1.0", "drive amplitude α"),
                KeySpec::new("r", KeyKind::Float, "0.4", "detuning ratio R"),
                KeySpec::new(
                    "eps_z_mode",
                    KeyKind::Choice(&["none", "matched"]),
                    "none",
                    "single-photon drive",
                ),
                KeySpec::new("t_points", KeyKind::Count, "301", "trace samples over [0, 1.5 T]"),
                KeySpec::new("dim", KeyKind::Dim, "auto", "Fock cutoff"),
            ],
        });
        keys
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

fn common_keys() -> Vec<KeySpec> {
    vec![
        KeySpec::new("kerr_mhz", KeyKind::Float, "6.7", "Kerr rate in MHz"),
        KeySpec::new(
            "kerr_convention",
            KeyKind::Choice(&["angular", "plain"]),
            "angular",
            "angular: K = 2π·f; plain: K = f",
        ),
        KeySpec::new("tol", KeyKind::Float, "1e-8", "time-stepping tolerance"),
        KeySpec::new("formats", KeyKind::Formats, "csv,json", "output formats"),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KeyKind {
    Float,
    FloatList,
    Count,
    /// Positive integer or `auto`.
    Dim,
    Bool,
    Choice(&'static [&'static str]),
    Formats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: KeyKind,
    pub default: &'static str,
    pub help: &'static str,
}

impl KeySpec {
    fn new(name: &'static str, kind: KeyKind, default: &'static str, help: &'static str) -> Self {
        Self {
            name,
            kind,
            default,
            help,
        }
    }
}

/// Where a value came from, for error messages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Default,
    File { path: PathBuf, line: usize },
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => f.write_str("default"),
            Origin::File { path, line } => write!(f, "{}:{}", path.display(), line),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown experiment {0:?} (try `dcat-sim list`)")]
    UnknownExperiment(String),
    #[error("{origin}: unknown key {key:?} for {experiment}")]
    UnknownKey {
        key: String,
        experiment: Experiment,
        origin: Origin,
    },
    #[error("{origin}: bad value {value:?} for {key}: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
        origin: Origin,
    },
    #[error("{path}:{line}: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}

#[derive(Clone, Debug, PartialEq)]
struct Entry {
    value: String,
    origin: Origin,
}

/// Fully resolved configuration for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub out: PathBuf,
    values: BTreeMap<String, Entry>,
}

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches('-').replace('-', "_").to_ascii_lowercase()
}

/// Parses `a,b,c` lists and `start:stop:step` ranges (inclusive of `stop`
/// up to rounding); the two forms can be mixed.
pub fn parse_float_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if part.contains(':') {
            let f: Vec<&str> = part.split(':').collect();
            if f.len() != 3 {
                return Err(format!("range {part:?} must be start:stop:step"));
            }
            let nums = f
                .iter()
                .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}")))
                .collect::<Result<Vec<f64>, String>>()?;
            let (a, b, step) = (nums[0], nums[1], nums[2]);
            if !(step > 0.0) || !(b >= a) || !a.is_finite() || !b.is_finite() {
                return Err(format!("range {part:?} needs start <= stop and a positive step"));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            if n > 1_000_000 {
                return Err(format!("range {part:?} has too many points"));
            }
            // index-based to avoid accumulating rounding in the step
            out.extend((0..=n).map(|k| {
                let v = a + step * k as f64;
                (v * 1e12).round() / 1e12
            }));
        } else {
            let v: f64 = part.parse().map_err(|e| format!("{part:?}: {e}"))?;
            if !v.is_finite() {
                return Err(format!("{part:?} is not finite"));
            }
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn check_value(spec: &KeySpec, value: &str) -> Result<(), String> {
    let v = value.trim();
    match spec.kind {
        KeyKind::Float => v.parse::<f64>().map_err(|e| e.to_string()).and_then(|x| {
            if x.is_finite() {
                Ok(())
            } else {
                Err("not finite".into())
            }
        }),
        KeyKind::FloatList => parse_float_list(v).map(|_| ()),
        KeyKind::Count => v.parse::<usize>().map(|_| ()).map_err(|e| e.to_string()),
        KeyKind::Dim => {
            if v.eq_ignore_ascii_case("auto") {
                return Ok(());
            }
            match v.parse::<usize>() {
                Ok(d) if d >= 2 => Ok(()),
                Ok(_) => Err("cutoff must be at least 2".into()),
                Err(e) => Err(e.to_string()),
            }
        }
        KeyKind::Bool => match v {
            "true" | "false" | "yes" | "no" | "1" | "0" => Ok(()),
            _ => Err("expected true or false".into()),
        },
        KeyKind::Choice(options) => {
            if spec.name == "kerr_convention" {
                return KerrConvention::parse(v).map(|_| ()).map_err(|e| e.to_string());
            }
            if options.contains(&v) {
                Ok(())
            } else {
                Err(format!("expected one of {}", options.join(", ")))
            }
        }
        KeyKind::Formats => {
            for f in v.split(',').map(str::trim) {
                if f != "csv" && f != "json" {
                    return Err(format!("unknown format {f:?}; expected csv and/or json"));
                }
            }
            Ok(())
        }
    }
}

/// One parsed config file: top-level keys plus per-experiment sections.
#[derive(Clone, Debug, Default)]
struct FileEntries {
    global: Vec<(String, String, usize)>,
    sections: BTreeMap<String, Vec<(String, String, usize)>>,
}

fn parse_config_text(text: &str, path: &Path) -> Result<FileEntries, ConfigError> {
    let mut out = FileEntries::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("unterminated section header {line:?}"),
            })?;
            let exp = Experiment::parse(name.trim()).ok_or_else(|| ConfigError::Syntax {
                path: path.to_path_buf(),
                line: line_no,
                message: format!("unknown section [{}]", name.trim()),
            })?;
            section = Some(exp.id().to_string());
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: path.to_path_buf(),
            line: line_no,
            message: format!("expected key = value, got {line:?}"),
        })?;
        let entry = (normalize_key(k), v.trim().to_string(), line_no);
        match &section {
            None => out.global.push(entry),
            Some(s) => out.sections.entry(s.clone()).or_default().push(entry),
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Defaults for `experiment`, writing to `out`.
    pub fn defaults(experiment: Experiment, out: PathBuf) -> Self {
        let values = experiment
            .keys()
            .into_iter()
            .map(|k| {
                (
                    k.name.to_string(),
                    Entry {
                        value: k.default.to_string(),
                        origin: Origin::Default,
                    },
                )
            })
            .collect();
        Self {
            experiment,
            out,
            values,
        }
    }

    /// Sets one key after validating it against the experiment's registry.
    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let key = normalize_key(key);
        let spec = self
            .experiment
            .keys()
            .into_iter()
            .find(|k| k.name == key)
            .ok_or_else(|| ConfigError::UnknownKey {
                key: key.clone(),
                experiment: self.experiment,
                origin: origin.clone(),
            })?;
        check_value(&spec, value).map_err(|reason| ConfigError::BadValue {
            key: key.clone(),
            value: value.to_string(),
            reason,
            origin: origin.clone(),
        })?;
        self.values.insert(
            key,
            Entry {
                value: value.trim().to_string(),
                origin,
            },
        );
        Ok(())
    }

    /// Applies a config file. Top-level keys and the experiment's own section
    /// are applied; other sections are still checked for unknown keys.
    pub fn apply_file_text(&mut self, text: &str, path: &Path) -> Result<(), ConfigError> {
        let entries = parse_config_text(text, path)?;
        for (k, v, line) in &entries.global {
            self.set(
                k,
                v,
                Origin::File {
                    path: path.to_path_buf(),
                    line: *line,
                },
            )?;
        }
        for (name, list) in &entries.sections {
            let exp = Experiment::parse(name).expect("sections are validated while parsing");
            let mut target = if exp == self.experiment {
                None
            } else {
                Some(ExperimentConfig::defaults(exp, self.out.clone()))
            };
            for (k, v, line) in list {
                let origin = Origin::File {
                    path: path.to_path_buf(),
                    line: *line,
                };
                match target.as_mut() {
                    None => self.set(k, v, origin)?,
                    Some(other) => other.set(k, v, origin)?,
                }
            }
        }
        Ok(())
    }

    /// Applies a previous run's manifest: its experiment must match and its
    /// resolved values replace the defaults.
    pub fn apply_manifest(&mut self, manifest: &serde_json::Value, path: &Path) -> Result<(), ConfigError> {
        let bad = |m: &str| ConfigError::Syntax {
            path: path.to_path_buf(),
            line: 0,
            message: m.to_string(),
        };
        let exp = manifest
            .get("experiment")
            .and_then(|v| v.as_str())
            .ok_or_else(|| bad("manifest has no experiment id"))?;
        if Experiment::parse(exp) != Some(self.experiment) {
            return Err(bad(&format!("manifest is for {exp}, not {}", self.experiment)));
        }
        let resolved = manifest
            .get("config")
            .and_then(|v| v.as_object())
            .ok_or_else(|| bad("manifest has no config object"))?;
        for (k, v) in resolved {
            let text = v
                .as_str()
                .ok_or_else(|| bad(&format!("config value for {k} is not a string")))?;
            self.set(
                k,
                text,
                Origin::File {
                    path: path.to_path_buf(),
                    line: 0,
                },
            )?;
        }
        Ok(())
    }

    /// Applies `--key value` / `--key=value` pairs.
    pub fn apply_flags(&mut self, flags: &[(String, String)]) -> Result<(), ConfigError> {
        for (k, v) in flags {
            self.set(k, v, Origin::Flag)?;
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> &Entry {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("key {key} is not registered for {}", self.experiment))
    }

    /// A value error for `key` carrying the value's origin.
    pub fn invalid(&self, key: &str, reason: impl Into<String>) -> ConfigError {
        let e = self.raw(key);
        ConfigError::BadValue {
            key: key.to_string(),
            value: e.value.clone(),
            reason: reason.into(),
            origin: e.origin.clone(),
        }
    }

    pub fn get_str(&self, key: &str) -> &str {
        &self.raw(key).value
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.get_str(key)
            .parse()
            .map_err(|e: std::num::ParseFloatError| self.invalid(key, e.to_string()))
    }

    pub fn get_positive(&self, key: &str) -> Result<f64, ConfigError> {
        let v = self.get_f64(key)?;
        if v > 0.0 {
            Ok(v)
        } else {
            Err(self.invalid(key, "must be positive"))
        }
    }

    pub fn get_list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        parse_float_list(self.get_str(key)).map_err(|r| self.invalid(key, r))
    }

    pub fn get_count(&self, key: &str) -> Result<usize, ConfigError> {
        self.get_str(key)
            .parse()
            .map_err(|e: std::num::ParseIntError| self.invalid(key, e.to_string()))
    }

    pub fn get_dim(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        let v = self.get_str(key);
        if v.eq_ignore_ascii_case("auto") {
            return Ok(None);
        }
        v.parse()
            .map(Some)
            .map_err(|e: std::num::ParseIntError| self.invalid(key, e.to_string()))
    }

    pub fn get_bool(&self, key: &str) -> bool {
        matches!(self.get_str(key), "true" | "yes" | "1")
    }

    pub fn kerr(&self) -> Result<f64, ConfigError> {
        let mhz = self.get_positive("kerr_mhz")?;
        let conv = KerrConvention::parse(self.get_str("kerr_convention"))
            .map_err(|e| self.invalid("kerr_convention", e.to_string()))?;
        Ok(dcat_core::units::kerr_rate(mhz, conv))
    }

    pub fn tol(&self) -> Result<f64, ConfigError> {
        self.get_positive("tol")
    }

    pub fn wants(&self, format: &str) -> bool {
        self.get_str("formats").split(',').any(|f| f.trim() == format)
    }

    /// Resolved values as strings, for the manifest.
    pub fn resolved(&self) -> BTreeMap<String, String> {
        self.values.iter().map(|(k, e)| (k.clone(), e.value.clone())).collect()
    }
}

/// `(out, config, key/value flags)` from a `run` argument list.
pub type RunArgs = (Option<PathBuf>, Option<PathBuf>, Vec<(String, String)>);

/// Splits raw `run` arguments into `--out`, `--config` and key/value pairs.
pub fn split_run_args(args: &[String]) -> Result<RunArgs, ConfigError> {
    let mut out = None;
    let mut config = None;
    let mut pairs = Vec::new();
    let mut i = 0;
    while i < args.len() {
        let arg = &args[i];
        let body = arg
            .strip_prefix("--")
            .ok_or_else(|| ConfigError::Usage(format!("expected --key value, got {arg:?}")))?;
        let (key, value) = match body.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = args
                    .get(i + 1)
                    .ok_or_else(|| ConfigError::Usage(format!("missing value for --{body}")))?;
                i += 1;
                (body.to_string(), v.clone())
            }
        };
        match normalize_key(&key).as_str() {
            "out" => out = Some(PathBuf::from(value)),
            "config" => config = Some(PathBuf::from(value)),
            _ => pairs.push((key, value)),
        }
        i += 1;
    }
    Ok((out, config, pairs))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(e: Experiment) -> ExperimentConfig {
        ExperimentConfig::defaults(e, PathBuf::from("out"))
    }

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_float_list("1, 2.5,3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_float_list("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_float_list("0.3:1.0:0.1").unwrap().len(), 8);
        assert!(parse_float_list("1:0:0.1").is_err());
        assert!(parse_float_list("").is_err());
        assert!(parse_float_list("a").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut c = cfg(Experiment::Fig3);
        assert!(matches!(
            c.set("beta_c", "1", Origin::Flag),
            Err(ConfigError::UnknownKey { .. })
        ));
        assert!(c.set("alpha", "1.2", Origin::Flag).is_ok());
        assert!(matches!(
            c.set("alpha", "x", Origin::Flag),
            Err(ConfigError::BadValue { .. })
        ));
    }

    #[test]
    fn file_sections_and_flag_precedence() {
        let text = "# shared\nkerr_mhz = 7\n[fig3]\nalpha = 1.2\n[figA1]\nr_grid = 0:1:0.5\n";
        let mut c = cfg(Experiment::Fig3);
        c.apply_file_text(text, Path::new("run.cfg")).unwrap();
        assert_eq!(c.get_f64("kerr_mhz").unwrap(), 7.0);
        assert_eq!(c.get_f64("alpha").unwrap(), 1.2);
        c.apply_flags(&[("alpha".into(), "1.5".into())]).unwrap();
        assert_eq!(c.get_f64("alpha").unwrap(), 1.5);
    }

    #[test]
    fn file_errors_carry_line() {
        let mut c = cfg(Experiment::Fig3);
        let err = c
            .apply_file_text("alpha = 1\n[fig2]\nbogus = 3\n", Path::new("x.cfg"))
            .unwrap_err();
        assert!(err.to_string().contains("x.cfg:3"), "{err}");
        let err = c.apply_file_text("[nope]\n", Path::new("x.cfg")).unwrap_err();
        assert!(err.to_string().contains("x.cfg:1"), "{err}");
        assert!(c.apply_file_text("alpha 1\n", Path::new("x.cfg")).is_err());
    }

    #[test]
    fn flag_splitting() {
        let args: Vec<String> = ["--alpha", "1", "--R=0.45", "--out", "d", "--config", "c.cfg"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let (out, config, pairs) = split_run_args(&args).unwrap();
        assert_eq!(out, Some(PathBuf::from("d")));
        assert_eq!(config, Some(PathBuf::from("c.cfg")));
        assert_eq!(
            pairs,
            vec![
                ("alpha".to_string(), "1".to_string()),
                ("R".to_string(), "0.45".to_string())
            ]
        );
        let mut c = cfg(Experiment::Custom);
        c.apply_flags(&pairs).unwrap();
        assert_eq!(c.get_f64("r").unwrap(), 0.45);
        assert!(split_run_args(&["--alpha".to_string()]).is_err());
        assert!(split_run_args(&["alpha".to_string()]).is_err());
    }

    #[test]
    fn kerr_conventions() {
        let mut c = cfg(Experiment::Custom);
        let angular = c.kerr().unwrap();
        c.set("kerr_convention", "plain", Origin::Flag).unwrap();
        assert!((angular / c.kerr().unwrap() - std::f64::consts::TAU).abs() < 1e-12);
    }
}
