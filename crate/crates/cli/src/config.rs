use saltus_core::response::{default_t_schedule, DensityMethod};
use saltus_core::smooth::SmoothFn;
use saltus_core::unimodal::{
    parse_pairs, snap_tent_slope, MapSpec, Perturbation, UnimodalMap, REVISIT_TOL,
};
use saltus_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Named or explicit observable φ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    Bump6,
    One,
    Identity,
    Poly { coeffs: Vec<f64> },
    Bump { lo: f64, hi: f64 },
}

impl ObservableSpec {
    fn parse(line: usize, v: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("line {line}: phi: {msg}"));
        let v = v.trim();
        match v {
            "bump6" => return Ok(ObservableSpec::Bump6),
            "one" => return Ok(ObservableSpec::One),
            "id" => return Ok(ObservableSpec::Identity),
            _ => {}
        }
        let (kind, args) = v
            .split_once(':')
            .ok_or_else(|| bad("expected bump6, one, id, poly:<coeffs> or bump:<lo>,<hi>"))?;
        let nums = list(line, "phi", args)?;
        match kind.trim() {
            "poly" => Ok(ObservableSpec::Poly { coeffs: nums }),
            "bump" if nums.len() == 2 && nums[0] < nums[1] => {
                Ok(ObservableSpec::Bump { lo: nums[0], hi: nums[1] })
            }
            "bump" => Err(bad("bump needs lo,hi with lo < hi")),
            other => Err(bad(&format!("unknown observable {other:?}"))),
        }
    }

    pub fn build(&self) -> SmoothFn {
        match self {
            ObservableSpec::Bump6 => SmoothFn::bump6(),
            ObservableSpec::One => SmoothFn::one(),
            ObservableSpec::Identity => SmoothFn::identity(),
            ObservableSpec::Poly { coeffs } => SmoothFn::poly(coeffs),
            ObservableSpec::Bump { lo, hi } => SmoothFn::bump(*lo, *hi),
        }
    }
}

/// Density path for `density` and `response-scan`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    Exact,
    Ulam,
    Hybrid,
}

impl Method {
    pub fn for_response(self) -> DensityMethod {
        match self {
            Method::Ulam => DensityMethod::Ulam,
            _ => DensityMethod::Auto,
        }
    }
}

/// Fully resolved job configuration; every default is filled in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobConfig {
    pub map: MapSpec,
    #[serde(rename = "X_poly")]
    pub x_poly: Vec<f64>,
    pub phi: ObservableSpec,
    pub method: Method,
    pub bins: usize,
    pub cells: usize,
    pub series_cells: usize,
    pub depth: usize,
    pub n_terms: usize,
    pub orbit_max: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub revisit_tol: f64,
    pub t_schedule: Vec<f64>,
    pub k_min: usize,
    pub k_max: usize,
    pub ells: Vec<usize>,
    pub table_bins: Option<usize>,
    pub z_re: f64,
    pub z_im: f64,
    pub snap_slope: bool,
    /// Preperiodic slope used in place of a long decimal `slope` literal.
    pub snapped_slope: Option<f64>,
}

const OWN_KEYS: [&str; 20] = [
    "snap_slope",
    "phi",
    "method",
    "bins",
    "cells",
    "series_cells",
    "depth",
    "n_terms",
    "orbit_max",
    "max_iters",
    "tol",
    "revisit_tol",
    "t_schedule",
    "k_min",
    "k_max",
    "ells",
    "table_bins",
    "z_re",
    "z_im",
    "X_poly",
];

fn num(line: usize, key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Parse(format!("line {line}: {key}: expected a number, got {v:?}")))
}

fn list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|p| num(line, key, p)).collect()
}

fn count(line: usize, key: &str, v: &str) -> Result<usize> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| Error::Parse(format!("line {line}: {key}: expected a non-negative integer, got {v:?}")))
}

/// Decimal literals with at least this many fractional digits are read as
/// truncations of an algebraic slope.
const SNAP_MIN_DECIMALS: usize = 6;
const SNAP_DEPTH: usize = 24;

fn decimals(raw: &str) -> Option<usize> {
    let raw = raw.trim();
    if raw.contains(['e', 'E']) {
        return None;
    }
    raw.split_once('.').map(|(_, frac)| frac.len())
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            map: MapSpec::Tent { slope: 2.0 },
            x_poly: vec![0.0, 1.0],
            phi: ObservableSpec::Bump6,
            method: Method::Auto,
            bins: 1 << 14,
            cells: 1 << 14,
            series_cells: 1024,
            depth: 64,
            n_terms: 1 << 12,
            orbit_max: 4096,
            max_iters: 10_000,
            tol: 1e-10,
            revisit_tol: REVISIT_TOL,
            t_schedule: default_t_schedule(),
            k_min: 4,
            k_max: 16,
            ells: (6..=20).step_by(2).collect(),
            table_bins: None,
            z_re: 0.5,
            z_im: 0.0,
            snap_slope: true,
            snapped_slope: None,
        }
    }
}

impl JobConfig {
    /// Strict parse: unknown keys, malformed values and non-positive
    /// tolerances are errors that name the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = parse_pairs(text)?;
        for (k, (line, _)) in &pairs {
            if !MapSpec::KEYS.contains(&k.as_str()) && !OWN_KEYS.contains(&k.as_str()) {
                return Err(Error::Parse(format!("line {line}: unknown key {k:?}")));
            }
        }
        let mut cfg = JobConfig::default();
        if ["family", "slope", "code", "base_slope", "t"].iter().any(|k| pairs.contains_key(*k)) {
            cfg.map = MapSpec::from_pairs(&pairs)?;
        }
        if let MapSpec::Perturbed { x_poly, .. } = &cfg.map {
            cfg.x_poly = x_poly.clone();
        }
        for (k, (line, v)) in &pairs {
            let line = *line;
            match k.as_str() {
                "X_poly" => cfg.x_poly = list(line, k, v)?,
                "phi" => cfg.phi = ObservableSpec::parse(line, v)?,
                "method" => {
                    cfg.method = match v.trim() {
                        "auto" => Method::Auto,
                        "exact" => Method::Exact,
                        "ulam" => Method::Ulam,
                        "hybrid" => Method::Hybrid,
                        other => {
                            return Err(Error::Parse(format!(
                                "line {line}: method: expected auto, exact, ulam or hybrid, got {other:?}"
                            )))
                        }
                    }
                }
                "bins" => cfg.bins = count(line, k, v)?,
                "cells" => cfg.cells = count(line, k, v)?,
                "series_cells" => cfg.series_cells = count(line, k, v)?,
                "depth" => cfg.depth = count(line, k, v)?,
                "n_terms" => cfg.n_terms = count(line, k, v)?,
                "orbit_max" => cfg.orbit_max = count(line, k, v)?,
                "max_iters" => cfg.max_iters = count(line, k, v)?,
                "tol" => cfg.tol = num(line, k, v)?,
                "revisit_tol" => cfg.revisit_tol = num(line, k, v)?,
                "t_schedule" => cfg.t_schedule = list(line, k, v)?,
                "k_min" => cfg.k_min = count(line, k, v)?,
                "k_max" => cfg.k_max = count(line, k, v)?,
                "ells" => {
                    cfg.ells = v.split(',').map(|p| count(line, k, p)).collect::<Result<_>>()?
                }
                "table_bins" => cfg.table_bins = Some(count(line, k, v)?).filter(|&b| b > 0),
                "z_re" => cfg.z_re = num(line, k, v)?,
                "z_im" => cfg.z_im = num(line, k, v)?,
                "snap_slope" => {
                    cfg.snap_slope = v.trim().parse().map_err(|_| {
                        Error::Parse(format!("line {line}: snap_slope: expected true or false, got {v:?}"))
                    })?
                }
                _ => {}
            }
            let positive = match k.as_str() {
                "tol" => cfg.tol > 0.0,
                "revisit_tol" => cfg.revisit_tol > 0.0,
                "bins" => cfg.bins > 0,
                "cells" => cfg.cells > 0,
                "series_cells" => cfg.series_cells > 0,
                "depth" => cfg.depth > 0,
                "n_terms" => cfg.n_terms > 0,
                "orbit_max" => cfg.orbit_max > 0,
                "max_iters" => cfg.max_iters > 0,
                _ => true,
            };
            if !positive {
                return Err(Error::Parse(format!("line {line}: {k} must be positive")));
            }
        }
        if let (MapSpec::Tent { slope }, Some((_, raw)), true) = (&cfg.map, pairs.get("slope"), cfg.snap_slope) {
            if let Some(d) = decimals(raw).filter(|&d| d >= SNAP_MIN_DECIMALS) {
                cfg.snapped_slope = snap_tent_slope(*slope, 0.5 * 10f64.powi(-(d as i32)), SNAP_DEPTH);
            }
        }
        Ok(cfg)
    }

    pub fn build_map(&self) -> Result<UnimodalMap> {
        match self.snapped_slope {
            Some(l) => UnimodalMap::tent(l),
            None => self.map.build(),
        }
    }

    pub fn perturbation(&self) -> Result<Perturbation> {
        Perturbation::new(SmoothFn::poly(&self.x_poly))
    }

    pub fn observable(&self) -> SmoothFn {
        self.phi.build()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = JobConfig::parse("slope=2\n").unwrap();
        assert_eq!(c.map, MapSpec::Tent { slope: 2.0 });
        assert_eq!(c.bins, 1 << 14);
        assert_eq!(c.phi, ObservableSpec::Bump6);
    }

    #[test]
    fn parses_observables_and_lists() {
        let c = JobConfig::parse("family=tent\nslope=1.5\nphi=bump:0.2,0.3\nX_poly=0,1,-1\nells=6,8\n").unwrap();
        assert_eq!(c.phi, ObservableSpec::Bump { lo: 0.2, hi: 0.3 });
        assert_eq!(c.x_poly, vec![0.0, 1.0, -1.0]);
        assert_eq!(c.ells, vec![6, 8]);
    }

    #[test]
    fn rejects_unknown_keys_with_line_numbers() {
        let e = JobConfig::parse("slope=2\n# comment\nbinz=4\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        let e = JobConfig::parse("slope=2\ntol=-1\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
        let e = JobConfig::parse("slope=2\nphi=wave\n").unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn long_slope_literals_snap_to_markov_parameters() {
        let c = JobConfig::parse("slope=1.41421356\n").unwrap();
        assert!((c.snapped_slope.unwrap() - std::f64::consts::SQRT_2).abs() < 1e-14);
        assert_eq!(JobConfig::parse("slope=1.9\n").unwrap().snapped_slope, None);
        let c = JobConfig::parse("slope=1.41421356\nsnap_slope=false\n").unwrap();
        assert_eq!(c.snapped_slope, None);
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = JobConfig::parse("family=tent_code\ncode=RL^2R*\ntable_bins=512\n").unwrap();
        let back: JobConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
