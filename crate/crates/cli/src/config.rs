use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use cusplab::PiecewiseMap;

/// Run parameters. Every field can come from the TOML file given by
/// `--config` or from a flag; flags win.
#[derive(Debug, Clone, Default, PartialEq, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RunConfig {
    /// tent, g_alpha, f_alpha or g_b.
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Height parameter of g_b.
    #[arg(long, global = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Orbit length, sample count or grid size, depending on the subcommand.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    #[arg(long, global = true)]
    pub bins: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// csv or json.
    #[arg(long, global = true)]
    pub format: Option<String>,

    /// Integrability weight: exact or lebesgue.
    #[arg(long, global = true)]
    pub weight: Option<String>,
    /// Singular point for `classify`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub point: Option<f64>,
    /// left, right or both.
    #[arg(long, global = true)]
    pub side: Option<String>,
    #[arg(long, global = true)]
    pub k_lo: Option<usize>,
    #[arg(long, global = true)]
    pub k_hi: Option<usize>,

    /// Word lengths for `entropy`, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub words: Option<Vec<usize>>,
    /// acip or bernoulli.
    #[arg(long, global = true)]
    pub measure: Option<String>,
    /// Bernoulli parameter, or the series parameter `p`.
    #[arg(long, global = true)]
    pub p: Option<f64>,
    /// Evaluation points for `dimension`.
    #[arg(long, global = true)]
    pub points: Option<usize>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub y0: Option<f64>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    /// uniform or density.
    #[arg(long, global = true)]
    pub policy: Option<String>,

    #[arg(long, global = true, allow_negative_numbers = true)]
    pub u_lo: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub u_hi: Option<f64>,

    /// Number of series terms.
    #[arg(long, global = true)]
    pub terms: Option<usize>,
    /// Index offset `N` of the series.
    #[arg(long, global = true)]
    pub offset: Option<u32>,

    /// Parameter values for `sweep`, comma separated.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub alphas: Option<Vec<f64>>,
    /// Operation swept: classify, series or lyapunov.
    #[arg(long, global = true)]
    pub op: Option<String>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

pub type ConfigResult<T> = Result<T, ConfigError>;

macro_rules! overlay {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $(if $top.$f.is_some() { $base.$f = $top.$f.clone(); })*
    };
}

impl RunConfig {
    pub fn from_toml(text: &str) -> ConfigResult<Self> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config file: {}", e.message())))
    }

    /// `self` with every field set in `top` replaced.
    pub fn overlay(mut self, top: &RunConfig) -> Self {
        overlay!(
            self, top, family, alpha, b, seed, n, depth, bins, out, format, weight, point, side, k_lo, k_hi,
            words, measure, p, points, y0, radius, policy, u_lo, u_hi, terms, offset, alphas, op
        );
        self
    }

    /// Hex SHA-256 of the subcommand and the settings, output path excluded.
    pub fn hash(&self, command: &str) -> String {
        let body = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(format!("{command}\n{body}").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn family(&self) -> ConfigResult<&str> {
        self.family.as_deref().ok_or_else(|| ConfigError("missing --family".into()))
    }

    pub fn alpha(&self) -> ConfigResult<f64> {
        match self.alpha {
            Some(a) if a.is_finite() && a > 0.0 => Ok(a),
            Some(a) => Err(ConfigError(format!("alpha must be positive, got {a}"))),
            None => Err(ConfigError("missing --alpha".into())),
        }
    }

    pub fn map(&self) -> ConfigResult<PiecewiseMap> {
        self.map_with_alpha(None)
    }

    /// The configured family, with `alpha` replaced when given.
    pub fn map_with_alpha(&self, alpha: Option<f64>) -> ConfigResult<PiecewiseMap> {
        let alpha = || alpha.map(Ok).unwrap_or_else(|| self.alpha());
        let built = match self.family()? {
            "tent" => Ok(PiecewiseMap::tent()),
            "g_alpha" => PiecewiseMap::g_alpha(alpha()?),
            "f_alpha" => PiecewiseMap::f_alpha(alpha()?),
            "g_b" => {
                let b = self.b.ok_or_else(|| ConfigError("g_b needs --b".into()))?;
                PiecewiseMap::g_b(b, alpha()?)
            }
            other => return Err(ConfigError(format!("unknown family {other:?}"))),
        };
        built.map_err(|e| ConfigError(e.to_string()))
    }

    pub fn positive(value: Option<usize>, name: &str, default: usize) -> ConfigResult<usize> {
        match value.unwrap_or(default) {
            0 => Err(ConfigError(format!("{name} must be positive"))),
            v => Ok(v),
        }
    }

    pub fn unit_open(value: Option<f64>, name: &str, default: f64) -> ConfigResult<f64> {
        let v = value.unwrap_or(default);
        if v > 0.0 && v < 1.0 {
            Ok(v)
        } else {
            Err(ConfigError(format!("{name} must lie in (0, 1), got {v}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = RunConfig::from_toml("family = \"g_alpha\"\nalpha = 0.5\nseed = 3\nk-lo = 4").unwrap();
        let flags = RunConfig {
            alpha: Some(1.5),
            ..Default::default()
        };
        let merged = file.overlay(&flags);
        assert_eq!(merged.alpha, Some(1.5));
        assert_eq!(merged.seed, Some(3));
        assert_eq!(merged.k_lo, Some(4));
        assert_eq!(merged.family.as_deref(), Some("g_alpha"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("colour = 1").is_err());
        assert!(RunConfig::from_toml("alpha = \"x\"").is_err());
    }

    #[test]
    fn hash_ignores_the_output_path() {
        let a = RunConfig {
            alpha: Some(0.5),
            out: Some("a.csv".into()),
            ..Default::default()
        };
        let b = RunConfig {
            out: Some("b.csv".into()),
            ..a.clone()
        };
        assert_eq!(a.hash("series"), b.hash("series"));
        assert_ne!(a.hash("series"), a.hash("classify"));
    }

    #[test]
    fn family_errors() {
        let c = RunConfig {
            family: Some("logistic".into()),
            ..Default::default()
        };
        assert!(c.map().is_err());
        let c = RunConfig {
            family: Some("g_alpha".into()),
            ..Default::default()
        };
        assert!(c.map().is_err());
    }
}
