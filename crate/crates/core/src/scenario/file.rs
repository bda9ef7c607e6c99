//! TOML scenario files.
//!
//! ```toml
//! num_users = 3
//! num_antennas = 4
//! wavelength = 1.0
//! aoas = ["pi/16", "pi/10", "pi/2"]   # radians, or rational multiples of π
//! noise_power = 1.0
//! rate_targets = [1.0, 1.0, 1.0]
//! span = 4.5
//! min_spacing = 0.5
//! ```
//!
//! `wavelength` defaults to 1 when omitted. Angles may be plain numbers
//! (radians) or strings such as `"pi/16"`, `"-pi/6"`, `"3pi/8"`, `"3*pi/8"`,
//! `"π/2"` or `"0.25"`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScenarioConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Angle {
    Radians(f64),
    Text(String),
}

fn default_wavelength() -> f64 {
    1.0
}

/// On-disk form of a [`ScenarioConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    num_users: usize,
    num_antennas: usize,
    #[serde(default = "default_wavelength")]
    wavelength: f64,
    aoas: Vec<Angle>,
    noise_power: f64,
    rate_targets: Vec<f64>,
    span: f64,
    min_spacing: f64,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioConfig> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_config()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            num_users: cfg.num_users,
            num_antennas: cfg.num_antennas,
            wavelength: cfg.wavelength,
            aoas: cfg.aoas.iter().map(|&t| Angle::Text(format_angle(t))).collect(),
            noise_power: cfg.noise_power,
            rate_targets: cfg.rate_targets.clone(),
            span: cfg.span,
            min_spacing: cfg.min_spacing,
        }
    }

    pub fn to_toml(cfg: &ScenarioConfig) -> String {
        toml::to_string(&Self::from_config(cfg)).expect("scenario file serialization cannot fail")
    }

    fn into_config(self) -> Result<ScenarioConfig> {
        let aoas = self
            .aoas
            .into_iter()
            .map(|a| match a {
                Angle::Radians(v) => Ok(v),
                Angle::Text(s) => parse_angle(&s),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioConfig {
            num_users: self.num_users,
            num_antennas: self.num_antennas,
            wavelength: self.wavelength,
            aoas,
            noise_power: self.noise_power,
            rate_targets: self.rate_targets,
            span: self.span,
            min_spacing: self.min_spacing,
        })
    }
}

/// Parses an angle in radians, either numeric or as a rational multiple of π.
pub fn parse_angle(text: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("cannot parse angle {text:?}"));
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let compact = compact.replace('π', "pi").to_ascii_lowercase();
    let Some(idx) = compact.find("pi") else {
        return compact.parse::<f64>().map_err(|_| bad());
    };
    let (head, tail) = (&compact[..idx], &compact[idx + 2..]);
    let head = head.strip_suffix('*').unwrap_or(head);
    let coef = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let denom = match tail {
        "" => 1.0,
        t => t.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?,
    };
    if denom == 0.0 {
        return Err(bad());
    }
    Ok(coef * PI / denom)
}

/// Formats `theta` as `"k*pi/d"` when it is a small rational multiple of π,
/// otherwise as a decimal radian string. Round-trips through [`parse_angle`].
pub fn format_angle(theta: f64) -> String {
    for denom in 1..=64u32 {
        let k = theta * f64::from(denom) / PI;
        let rounded = k.round();
        if rounded.abs() <= 1024.0 && (k - rounded).abs() < 1e-12 && rounded * PI / f64::from(denom) == theta {
            let k = rounded as i64;
            let num = match k {
                0 => return "0".to_string(),
                1 => "pi".to_string(),
                -1 => "-pi".to_string(),
                k => format!("{k}*pi"),
            };
            return if denom == 1 { num } else { format!("{num}/{denom}") };
        }
    }
    format!("{theta:?}")
}
