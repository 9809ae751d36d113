use super::{solve_code_parameter, KneadingCode, Perturbation, UnimodalMap};
use crate::error::{Error, Result};
use crate::smooth::SmoothFn;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Map description parsed from `key=value` lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MapSpec {
    Tent { slope: f64 },
    TentCode { code: String },
    Perturbed { base_slope: f64, x_poly: Vec<f64>, t: f64 },
}

pub(crate) fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse(format!("line {line}: {key}: expected a number, got {v:?}")))
}

pub(crate) fn parse_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|p| parse_f64(line, key, p)).collect()
}

/// Splits a text block into `key → (line, value)`, skipping blanks and `#` comments.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (k, v) = body
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {line}: expected key=value, got {body:?}")))?;
        let k = k.trim().to_string();
        if k.is_empty() {
            return Err(Error::Parse(format!("line {line}: empty key")));
        }
        if out.insert(k.clone(), (line, v.trim().to_string())).is_some() {
            return Err(Error::Parse(format!("line {line}: duplicate key {k:?}")));
        }
    }
    Ok(out)
}

impl MapSpec {
    pub const KEYS: [&'static str; 6] = ["family", "slope", "code", "base_slope", "X_poly", "t"];

    /// Strict parse of a map block: unknown keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        if let Some((k, (line, _))) = pairs.iter().find(|(k, _)| !Self::KEYS.contains(&k.as_str())) {
            return Err(Error::Parse(format!("line {line}: unknown key {k:?}")));
        }
        Self::from_pairs(&pairs)
    }

    /// Reads the map keys from an already split block. Keys not relevant to the
    /// chosen family are rejected.
    pub fn from_pairs(pairs: &BTreeMap<String, (usize, String)>) -> Result<Self> {
        let get = |k: &str| pairs.get(k);
        let (fline, family) = get("family")
            .cloned()
            .unwrap_or((0, "tent".to_string()));
        let need = |k: &str| {
            get(k).ok_or_else(|| {
                Error::Parse(format!("line {fline}: family={family} requires {k}"))
            })
        };
        let allowed: &[&str] = match family.as_str() {
            "tent" => &["family", "slope"],
            "tent_code" => &["family", "code"],
            "perturbed" => &["family", "base_slope", "X_poly", "t"],
            other => {
                return Err(Error::Parse(format!(
                    "line {fline}: unknown family {other:?} (tent, tent_code, perturbed)"
                )))
            }
        };
        for k in ["slope", "code", "base_slope", "t"] {
            if let Some((line, _)) = get(k) {
                if !allowed.contains(&k) {
                    return Err(Error::Parse(format!(
                        "line {line}: key {k:?} does not apply to family={family}"
                    )));
                }
            }
        }
        match family.as_str() {
            "tent" => {
                let (l, v) = need("slope")?;
                Ok(MapSpec::Tent { slope: parse_f64(*l, "slope", v)? })
            }
            "tent_code" => {
                let (l, v) = need("code")?;
                KneadingCode::parse(v).map_err(|e| Error::Parse(format!("line {l}: {e}")))?;
                Ok(MapSpec::TentCode { code: v.clone() })
            }
            _ => {
                let (l, v) = need("base_slope")?;
                let base_slope = parse_f64(*l, "base_slope", v)?;
                let (l, v) = need("X_poly")?;
                let x_poly = parse_list(*l, "X_poly", v)?;
                let (l, v) = need("t")?;
                let t = parse_f64(*l, "t", v)?;
                Ok(MapSpec::Perturbed { base_slope, x_poly, t })
            }
        }
    }

    pub fn build(&self) -> Result<UnimodalMap> {
        match self {
            MapSpec::Tent { slope } => UnimodalMap::tent(*slope),
            MapSpec::TentCode { code } => {
                let code = KneadingCode::parse(code)?;
                UnimodalMap::tent(solve_code_parameter(&code)?)
            }
            MapSpec::Perturbed { base_slope, x_poly, t } => {
                let x = Perturbation::new(SmoothFn::poly(x_poly))?;
                UnimodalMap::perturbed(*base_slope, x, *t)
            }
        }
    }
}
