//! Experiment configuration, stored as sectioned TOML.
//!
//! ```toml
//! [fixture]
//! name = "disk"          # a gallery name, or "pbm" with `path`
//! resolution = 128       # cells per unit length, h = 1/resolution
//! # radius, side, teeth, spacing: gallery parameters
//! # base_point = [0.0, 0.0]
//!
//! [geometry]
//! c0 = 10.0
//! c = 3.0
//! r = 3.0
//! eps = 0.2
//! levels = [5, 6, 7, 8, 9]
//!
//! [approx]
//! k = 1
//! p = [2.0]
//!
//! [sampling]
//! pairs = 200
//! triangles = 100
//! seed = 1
//!
//! [output]
//! dir = "out"
//! ```

use crate::error::{Error, Result};
use crate::gallery::{self, Fixture};
use crate::pbm;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureConfig {
    pub name: String,
    pub resolution: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teeth: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    /// Bitmap for `name = "pbm"`; the sidecar is the same path with `.txt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_point: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub c0: f64,
    pub c: f64,
    pub r: f64,
    pub eps: f64,
    pub levels: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    pub k: usize,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub pairs: usize,
    pub triangles: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub fixture: FixtureConfig,
    pub geometry: GeometryConfig,
    pub approx: ApproxConfig,
    pub sampling: SamplingConfig,
    pub output: OutputConfig,
}

fn bad(field: &str, msg: impl Into<String>) -> Error {
    Error::Config { field: field.into(), msg: msg.into() }
}

/// Dotted `section.key` of the line containing byte `at`.
fn field_at(text: &str, at: usize) -> String {
    let before = &text[..at.min(text.len())];
    let line_start = before.rfind('\n').map_or(0, |i| i + 1);
    let line = text[line_start..].lines().next().unwrap_or("");
    let section = before[..line_start].lines().rev().find_map(|l| l.trim().strip_prefix('[')?.strip_suffix(']').map(str::trim));
    let key = line.split('=').next().unwrap_or("").trim();
    match (section, key.is_empty() || key.starts_with('[')) {
        (Some(sec), false) => format!("{sec}.{key}"),
        (Some(sec), true) => sec.to_string(),
        (None, _) => key.to_string(),
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            fixture: FixtureConfig {
                name: "disk".into(),
                resolution: 128,
                radius: None,
                side: None,
                teeth: None,
                spacing: None,
                path: None,
                base_point: None,
            },
            geometry: GeometryConfig { c0: 10.0, c: 3.0, r: 3.0, eps: 0.2, levels: vec![5, 6, 7, 8, 9] },
            approx: ApproxConfig { k: 1, p: vec![2.0] },
            sampling: SamplingConfig { pairs: 200, triangles: 100, seed: 1 },
            output: OutputConfig { dir: PathBuf::from("out") },
        }
    }
}

impl ExperimentConfig {
    pub fn h(&self) -> f64 {
        1.0 / self.fixture.resolution as f64
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| {
            let field = e.span().map(|s| field_at(text, s.start)).unwrap_or_default();
            bad(if field.is_empty() { "config" } else { &field }, e.message())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Checks every numeric field against its documented range.
    pub fn validate(&self) -> Result<()> {
        let f = &self.fixture;
        if f.name != "pbm" && !gallery::NAMES.contains(&f.name.as_str()) {
            return Err(bad("fixture.name", format!("unknown fixture `{}`", f.name)));
        }
        if f.name == "pbm" && f.path.is_none() {
            return Err(bad("fixture.path", "required for pbm fixtures"));
        }
        if !(4..=512).contains(&f.resolution) {
            return Err(bad("fixture.resolution", "must lie in 4..=512"));
        }
        for (name, v) in [("fixture.radius", f.radius), ("fixture.side", f.side), ("fixture.spacing", f.spacing)] {
            if let Some(v) = v {
                if !(v > 0.0 && v <= 4.0) {
                    return Err(bad(name, "must lie in (0, 4]"));
                }
            }
        }
        if let Some(t) = f.teeth {
            if !(1..=32).contains(&t) {
                return Err(bad("fixture.teeth", "must lie in 1..=32"));
            }
        }
        let g = &self.geometry;
        if !(g.c0 >= 10.0 && g.c0.is_finite()) {
            return Err(bad("geometry.c0", "must be at least 10"));
        }
        if !(g.c >= 1.0 && g.c.is_finite()) {
            return Err(bad("geometry.c", "must be at least 1"));
        }
        if !(g.r > 0.0) {
            return Err(bad("geometry.r", "must be positive (inf allowed)"));
        }
        if !(g.eps > 0.0 && g.eps <= 1.0) {
            return Err(bad("geometry.eps", "must lie in (0, 1]"));
        }
        if g.levels.is_empty() || g.levels.iter().any(|&m| m > 12) {
            return Err(bad("geometry.levels", "must be a nonempty list of levels in 0..=12"));
        }
        let a = &self.approx;
        if !(1..=3).contains(&a.k) {
            return Err(bad("approx.k", "must lie in 1..=3"));
        }
        if a.p.is_empty() || a.p.iter().any(|p| !(1.0..=8.0).contains(p)) {
            return Err(bad("approx.p", "must be a nonempty list of exponents in [1, 8]"));
        }
        let s = &self.sampling;
        if !(1..=100_000).contains(&s.pairs) {
            return Err(bad("sampling.pairs", "must lie in 1..=100000"));
        }
        if !(1..=10_000).contains(&s.triangles) {
            return Err(bad("sampling.triangles", "must lie in 1..=10000"));
        }
        Ok(())
    }

    /// Builds the configured domain.
    pub fn fixture(&self) -> Result<Fixture> {
        let f = &self.fixture;
        let h = self.h();
        let mut fx = match f.name.as_str() {
            "disk" => gallery::disk(f.radius.unwrap_or(1.0), h)?,
            "square" => gallery::square(f.side.unwrap_or(1.0), h)?,
            "comb" => gallery::comb(f.teeth.unwrap_or(4), h)?,
            "punctured_lattice" => gallery::punctured_lattice(f.spacing.unwrap_or(0.125), h)?,
            "pbm" => {
                let path = f.path.as_ref().expect("validated");
                let domain = pbm::parse(&std::fs::read_to_string(path)?, &std::fs::read_to_string(path.with_extension("txt"))?)?;
                Fixture { name: "pbm".into(), domain, landmarks: vec![], boundary_point: [0.0, 0.0] }
            }
            name => gallery::by_name(name, h)?,
        };
        if let Some(x) = f.base_point {
            fx.domain = fx.domain.with_base_point(x).map_err(|e| bad("fixture.base_point", e.to_string()))?;
        }
        Ok(fx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_field() {
        let mut c = ExperimentConfig::default();
        c.fixture.name = "torus".into();
        let e = ExperimentConfig::from_toml(&c.to_toml()).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field == "fixture.name"), "{e}");
        c = ExperimentConfig::default();
        c.approx.p = vec![0.5];
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "approx.p"));
        let text = ExperimentConfig::default().to_toml().replace("k = 1", "k = \"one\"");
        assert!(matches!(ExperimentConfig::from_toml(&text), Err(Error::Config { field, .. }) if field == "approx.k"));
        let text = ExperimentConfig::default().to_toml().replace("[sampling]", "[sampling]\nbogus = 1");
        let e = ExperimentConfig::from_toml(&text).unwrap_err();
        assert!(matches!(&e, Error::Config { field, .. } if field.starts_with("sampling")), "{e}");
    }

    #[test]
    fn base_point_moves_x0() {
        let mut c = ExperimentConfig::default();
        c.fixture.resolution = 32;
        c.fixture.base_point = Some([0.5, 0.25]);
        let fx = c.fixture().unwrap();
        assert_eq!(fx.domain.x0(), fx.domain.point([0.5, 0.25]).unwrap().cell);
        c.fixture.base_point = Some([2.0, 0.0]);
        assert!(matches!(c.fixture(), Err(Error::Config { field, .. }) if field == "fixture.base_point"));
    }

    proptest! {
        #[test]
        fn valid_configs_round_trip(
            name in prop::sample::select(gallery::NAMES.to_vec()),
            res in 4u32..=512,
            c0 in 10.0f64..100.0,
            eps in 0.001f64..1.0,
            levels in prop::collection::vec(0u32..=12, 1..6),
            k in 1usize..=3,
            p in prop::collection::vec(1.0f64..8.0, 1..4),
            seed in any::<u64>(),
            radius in prop::option::of(0.1f64..4.0),
        ) {
            let mut c = ExperimentConfig::default();
            c.fixture.name = name.into();
            c.fixture.resolution = res;
            c.fixture.radius = radius;
            c.geometry.c0 = c0;
            c.geometry.eps = eps;
            c.geometry.levels = levels;
            c.approx.k = k;
            c.approx.p = p;
            c.sampling.seed = seed;
            let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}
