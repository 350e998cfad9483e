//! Flat `key=value` run configuration with dotted sections.
//!
//! ```text
//! mode=obstacle
//! k=10
//! scene.a=kite 0 0
//! scene.b=circle -2.5 0 1
//! ring.radius=5
//! ring.count=128
//! noise.delta=0.1
//! noise.seed=7
//! aperture.alpha=1.5707963267948966
//! aperture.center=1.5707963267948966
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Anything left out
//! takes the per-mode default; unknown keys are rejected.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::str::FromStr;

use nearsamp_core::completion::ApertureSpec;
use nearsamp_core::geometry::{make_shape, ParametricCurve, Point, ShapeKind};
use nearsamp_core::imaging::{GridSpec, DEFAULT_CAVITY_TRUNCATION, DEFAULT_OBSTACLE_TRUNCATION};
use nearsamp_core::nearfield::Mode;

const KNOWN: &[&str] = &[
    "mode",
    "k",
    "ring.radius",
    "ring.count",
    "bie.nodes",
    "noise.delta",
    "noise.seed",
    "truncation",
    "grid.nx",
    "grid.ny",
    "grid.x0",
    "grid.x1",
    "grid.y0",
    "grid.y1",
    "aperture.alpha",
    "aperture.center",
    "aperture.modes",
    "aperture.eps",
    "output.nfm",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSpec {
    pub name: String,
    pub text: String,
    pub curve: ParametricCurve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompletionSpec {
    pub aperture: ApertureSpec,
    /// Fourier truncation `J`.
    pub modes: usize,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub mode: Mode,
    pub k: f64,
    pub scene: Vec<ShapeSpec>,
    pub ring_radius: f64,
    pub ring_count: usize,
    pub bie_nodes: usize,
    pub noise_delta: f64,
    pub noise_seed: u64,
    pub truncation: usize,
    pub grid: GridSpec,
    pub completion: Option<CompletionSpec>,
    /// Persist the intermediate NFM files of a pipeline run.
    pub save_nfm: bool,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Splits the text into keys and values; duplicate and unknown keys are errors.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!(
                "line {}: expected key=value, got {line:?}",
                no + 1
            )));
        };
        let (key, value) = (key.trim(), value.trim());
        let scene_key = key.strip_prefix("scene.").is_some_and(|n| !n.is_empty());
        if !scene_key && !KNOWN.contains(&key) {
            return Err(err(format!("line {}: unknown key {key:?}", no + 1)));
        }
        if out.insert(key.to_string(), value.to_string()).is_some() {
            return Err(err(format!("line {}: duplicate key {key:?}", no + 1)));
        }
    }
    Ok(out)
}

fn get<T: FromStr>(
    pairs: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, ConfigError> {
    match pairs.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| err(format!("{key}: cannot parse {v:?}"))),
    }
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(err(format!("{key} must be positive, got {v}")))
    }
}

/// `kind cx cy [radius]`.
fn parse_shape(name: &str, text: &str) -> Result<ShapeSpec, ConfigError> {
    let mut words = text.split_whitespace();
    let kind: ShapeKind = words
        .next()
        .ok_or_else(|| err(format!("scene.{name} is empty")))?
        .parse()
        .map_err(|e| err(format!("scene.{name}: {e}")))?;
    let nums = words
        .map(|w| {
            w.parse::<f64>()
                .map_err(|_| err(format!("scene.{name}: bad number {w:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if nums.len() < 2 {
        return Err(err(format!("scene.{name}: expected `kind cx cy [radius]`")));
    }
    let curve = make_shape(kind, Point::new(nums[0], nums[1]), &nums[2..])
        .map_err(|e| err(format!("scene.{name}: {e}")))?;
    Ok(ShapeSpec {
        name: name.to_string(),
        text: text.to_string(),
        curve,
    })
}

impl Config {
    #[cfg(test)]
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        Config::from_pairs(&parse_pairs(text)?)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Config, ConfigError> {
        let mode: Mode = get(pairs, "mode", Mode::Obstacle)?;
        let (k, radius, count, nodes, trunc) = match mode {
            Mode::Obstacle => (10.0, 5.0, 128, 256, DEFAULT_OBSTACLE_TRUNCATION),
            Mode::Cavity => (0.2, 1.0, 32, 128, DEFAULT_CAVITY_TRUNCATION),
        };
        let g = GridSpec::default_for(mode);
        let grid = GridSpec {
            nx: get(pairs, "grid.nx", g.nx)?,
            ny: get(pairs, "grid.ny", g.ny)?,
            x0: get(pairs, "grid.x0", g.x0)?,
            x1: get(pairs, "grid.x1", g.x1)?,
            y0: get(pairs, "grid.y0", g.y0)?,
            y1: get(pairs, "grid.y1", g.y1)?,
        };
        grid.validate().map_err(|e| err(format!("grid: {e}")))?;

        let scene = pairs
            .iter()
            .filter_map(|(key, v)| key.strip_prefix("scene.").map(|name| parse_shape(name, v)))
            .collect::<Result<Vec<_>, _>>()?;

        let aperture_keys = [
            "aperture.alpha",
            "aperture.center",
            "aperture.modes",
            "aperture.eps",
        ];
        let completion = if aperture_keys.iter().any(|key| pairs.contains_key(*key)) {
            let alpha = positive("aperture.alpha", get(pairs, "aperture.alpha", FRAC_PI_2)?)?;
            let center = get(pairs, "aperture.center", 0.0)?;
            let aperture =
                ApertureSpec::new(alpha, center).map_err(|e| err(format!("aperture: {e}")))?;
            Some(CompletionSpec {
                aperture,
                modes: get(pairs, "aperture.modes", 50)?,
                eps: positive("aperture.eps", get(pairs, "aperture.eps", 1e-3)?)?,
            })
        } else {
            None
        };

        let noise_delta: f64 = get(pairs, "noise.delta", 0.0)?;
        if !(noise_delta.is_finite() && noise_delta >= 0.0) {
            return Err(err(format!(
                "noise.delta must be non-negative, got {noise_delta}"
            )));
        }
        Ok(Config {
            mode,
            k: positive("k", get(pairs, "k", k)?)?,
            scene,
            ring_radius: positive("ring.radius", get(pairs, "ring.radius", radius)?)?,
            ring_count: get(pairs, "ring.count", count)?,
            bie_nodes: get(pairs, "bie.nodes", nodes)?,
            noise_delta,
            noise_seed: get(pairs, "noise.seed", 0)?,
            truncation: get(pairs, "truncation", trunc)?,
            grid,
            completion,
            save_nfm: get(pairs, "output.nfm", false)?,
        })
    }

    /// Every resolved parameter as `key=value` lines, sorted by key.
    pub fn resolved(&self) -> String {
        let mut lines = vec![
            format!("mode={}", self.mode),
            format!("k={}", self.k),
            format!("ring.radius={}", self.ring_radius),
            format!("ring.count={}", self.ring_count),
            format!("bie.nodes={}", self.bie_nodes),
            format!("noise.delta={}", self.noise_delta),
            format!("noise.seed={}", self.noise_seed),
            format!("truncation={}", self.truncation),
            format!("grid.nx={}", self.grid.nx),
            format!("grid.ny={}", self.grid.ny),
            format!("grid.x0={}", self.grid.x0),
            format!("grid.x1={}", self.grid.x1),
            format!("grid.y0={}", self.grid.y0),
            format!("grid.y1={}", self.grid.y1),
            format!("output.nfm={}", self.save_nfm),
        ];
        if let Some(c) = &self.completion {
            lines.push(format!("aperture.alpha={}", c.aperture.alpha()));
            lines.push(format!("aperture.center={}", c.aperture.center()));
            lines.push(format!("aperture.modes={}", c.modes));
            lines.push(format!("aperture.eps={}", c.eps));
        }
        for s in &self.scene {
            lines.push(format!("scene.{}={}", s.name, s.text));
        }
        lines.sort();
        let mut out = String::new();
        for l in lines {
            writeln!(out, "{l}").unwrap();
        }
        out
    }

    pub fn curves(&self) -> Vec<ParametricCurve> {
        self.scene.iter().map(|s| s.curve).collect()
    }
}
