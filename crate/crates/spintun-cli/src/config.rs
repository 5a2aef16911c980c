use serde::Deserialize;
use std::path::PathBuf;

/// Flat run configuration. Every key can come from a TOML file; command-line
/// flags override file values.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub j: Option<f64>,
    pub lambda: Option<f64>,
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub h_min: Option<f64>,
    pub h_max: Option<f64>,
    pub h_points: Option<usize>,
    pub levels: Option<Vec<usize>>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub only: Option<String>,
    pub steps: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub j: f64,
    pub lambda: f64,
    pub k1: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub h_points: usize,
    pub levels: Vec<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub only: Option<String>,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub struct ConfigError(pub String);

impl RunConfig {
    /// Merge the file config (lowest priority), CLI flags (higher), and
    /// defaults; validate ranges.
    pub fn build(file: FileConfig, flags: &crate::CommonFlags) -> Result<RunConfig, ConfigError> {
        let j = flags.j.or(file.j).unwrap_or(10.0);
        let k1 = flags.k1.or(file.k1).unwrap_or(1.0);
        let lambda = match (flags.lambda.or(file.lambda), flags.k2.or(file.k2)) {
            (Some(l), None) => l,
            (None, Some(k2)) => k2 / k1,
            (Some(_), Some(_)) => {
                return Err(ConfigError("give either --lambda or --k1/--k2, not both".into()))
            }
            (None, None) => 0.728,
        };
        if !(0.0 < lambda && lambda < 1.0) {
            return Err(ConfigError(format!("lambda = {lambda} outside (0, 1)")));
        }
        if !(j > 0.0 && (2.0 * j - (2.0 * j).round()).abs() < 1e-9) {
            return Err(ConfigError(format!("J = {j} is not a half-integer")));
        }
        let h_min = flags.h_min.or(file.h_min).unwrap_or(0.0);
        let h_max = flags.h_max.or(file.h_max).unwrap_or(0.9 * (1.0 - lambda).sqrt());
        let h_points = flags.h_points.or(file.h_points).unwrap_or(200);
        if h_points == 0 || h_max < h_min {
            return Err(ConfigError("empty field grid".into()));
        }
        let levels = flags
            .levels
            .clone()
            .map(|s| parse_levels(&s))
            .transpose()?
            .or(file.levels)
            .unwrap_or_else(|| vec![0, 1, 2, 3]);
        if levels.is_empty() {
            return Err(ConfigError("empty level list".into()));
        }
        let tol = flags.tol.or(file.tol);
        if let Some(t) = tol {
            if !(0.0..=1.0).contains(&t) {
                return Err(ConfigError(format!("tolerance {t} outside [0, 1]")));
            }
        }
        let format = match flags.format.clone().or(file.format).as_deref() {
            None | Some("csv") => OutputFormat::Csv,
            Some("json") => OutputFormat::Json,
            Some(other) => return Err(ConfigError(format!("unknown format '{other}'"))),
        };
        Ok(RunConfig {
            j,
            lambda,
            k1,
            h_min,
            h_max,
            h_points,
            levels,
            tol,
            out: flags.out.clone().or(file.out),
            format,
            only: flags.only.clone().or(file.only),
            steps: flags.steps.or(file.steps).unwrap_or(256),
        })
    }
}

fn parse_levels(s: &str) -> Result<Vec<usize>, ConfigError> {
    s.split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| ConfigError(format!("bad level '{p}': {e}"))))
        .collect()
}

pub fn load_file(path: &std::path::Path) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| ConfigError(format!("bad config {}: {e}", path.display())))
}
