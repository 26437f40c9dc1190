//! Run configuration, read from and written to flat `key = value` TOML.
//!
//! Defaults depend on the preset: a file that only says
//! `preset = "mms-k10"` gets the 60x60 grid and 2000 units of that benchmark.
//! Every other key overrides the preset default.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{chebyshev_nodes, clustered_square, tensor_grid, CollocationSet};
use crate::lsq::DEFAULT_RCOND;
use crate::pai::{PaiConfig, Placement};
use crate::problems::{MmsSpec, Preset, EVAL_GRID_SIZE};

/// How collocation points are laid out on the square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridLayout {
    /// `nx x ny` Chebyshev tensor grid; the rim is the grid's own outer ring.
    Tensor,
    /// `nx x ny` inner Chebyshev grid plus `boundary_per_wall` Chebyshev points on each wall.
    Clustered,
}

impl FromStr for GridLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tensor" => Ok(GridLayout::Tensor),
            "clustered" => Ok(GridLayout::Clustered),
            other => Err(Error::invalid(format!("unknown layout `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(with = "preset_name")]
    pub preset: Preset,
    /// Wavenumbers for `mms-custom`.
    pub k1: f64,
    pub k2: f64,
    /// Also impose the exact normal derivative on manufactured problems.
    pub clamped: bool,
    /// Physics-aware placement; `false` selects the uniform baseline.
    pub pai: bool,
    pub n_units: usize,
    pub sigma0: f64,
    pub sigmac: f64,
    pub boundary_oversample: f64,
    pub seed: u64,
    pub rcond: f64,
    pub layout: GridLayout,
    pub nx: usize,
    pub ny: usize,
    pub boundary_per_wall: usize,
    pub scale_interior_rows: bool,
    pub eval_grid: usize,
    pub profile_samples: usize,
    pub field_nx: usize,
    pub field_ny: usize,
    pub out: PathBuf,
    pub emit_profiles: bool,
    pub emit_field: bool,
    pub emit_error_map: bool,
    pub emit_matrix: bool,
    /// Worker threads for the data-parallel loops; 0 means all cores.
    pub threads: usize,
}

mod preset_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::problems::Preset;

    pub fn serialize<S: Serializer>(p: &Preset, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(p.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Preset, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Every key optional; the shape of a user-written config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Overrides {
    #[serde(default, deserialize_with = "optional_preset")]
    preset: Option<Preset>,
    k1: Option<f64>,
    k2: Option<f64>,
    clamped: Option<bool>,
    pai: Option<bool>,
    n_units: Option<usize>,
    sigma0: Option<f64>,
    sigmac: Option<f64>,
    boundary_oversample: Option<f64>,
    seed: Option<u64>,
    rcond: Option<f64>,
    layout: Option<GridLayout>,
    nx: Option<usize>,
    ny: Option<usize>,
    boundary_per_wall: Option<usize>,
    scale_interior_rows: Option<bool>,
    eval_grid: Option<usize>,
    profile_samples: Option<usize>,
    field_nx: Option<usize>,
    field_ny: Option<usize>,
    out: Option<PathBuf>,
    emit_profiles: Option<bool>,
    emit_field: Option<bool>,
    emit_error_map: Option<bool>,
    emit_matrix: Option<bool>,
    threads: Option<usize>,
}

fn optional_preset<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Preset>, D::Error> {
    let name = String::deserialize(d)?;
    name.parse().map(Some).map_err(serde::de::Error::custom)
}

macro_rules! apply_overrides {
    ($cfg:expr, $ov:expr, $($field:ident),+ $(,)?) => {
        $(if let Some(v) = $ov.$field { $cfg.$field = v; })+
    };
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::for_preset(Preset::Cavity)
    }
}

impl RunConfig {
    pub fn for_preset(preset: Preset) -> Self {
        let pai = PaiConfig::default();
        let mut cfg = RunConfig {
            preset,
            k1: 10.0,
            k2: 10.0,
            clamped: false,
            pai: true,
            n_units: pai.n_units,
            sigma0: pai.sigma0,
            sigmac: pai.sigmac,
            boundary_oversample: pai.boundary_oversample,
            seed: pai.seed,
            rcond: DEFAULT_RCOND,
            layout: GridLayout::Clustered,
            nx: 48,
            ny: 48,
            boundary_per_wall: 96,
            scale_interior_rows: false,
            eval_grid: EVAL_GRID_SIZE,
            profile_samples: 201,
            field_nx: 101,
            field_ny: 101,
            out: PathBuf::from("out"),
            emit_profiles: true,
            emit_field: true,
            emit_error_map: true,
            emit_matrix: false,
            threads: 0,
        };
        if preset != Preset::Cavity {
            cfg.n_units = 2000;
            cfg.layout = GridLayout::Tensor;
            cfg.nx = 60;
            cfg.ny = 60;
        }
        cfg
    }

    /// Parses a config file. Keys absent from `text` take the preset's default.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        RunConfig::from_toml_str_with_preset(text, None)
    }

    /// As [`RunConfig::from_toml_str`], with `preset` (when given) replacing the file's preset
    /// before defaults are filled in.
    pub fn from_toml_str_with_preset(text: &str, preset: Option<Preset>) -> Result<Self> {
        let ov: Overrides = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|span| line_column(text, span.start))
                .unwrap_or((1, 1));
            Error::Config {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let mut cfg = RunConfig::for_preset(preset.or(ov.preset).unwrap_or_default());
        apply_overrides!(
            cfg,
            ov,
            k1,
            k2,
            clamped,
            pai,
            n_units,
            sigma0,
            sigmac,
            boundary_oversample,
            seed,
            rcond,
            layout,
            nx,
            ny,
            boundary_per_wall,
            scale_interior_rows,
            eval_grid,
            profile_samples,
            field_nx,
            field_ny,
            out,
            emit_profiles,
            emit_field,
            emit_error_map,
            emit_matrix,
            threads,
        );
        Ok(cfg)
    }

    /// Every key, in declaration order.
    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run config serializes to flat TOML")
    }

    /// First 16 hex digits of the SHA-256 of [`RunConfig::to_toml_string`], taken with
    /// `out` and `threads` cleared since neither changes the numbers.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            out: PathBuf::new(),
            threads: 0,
            ..self.clone()
        };
        let digest = Sha256::digest(canonical.to_toml_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        self.pai_config().validate()?;
        MmsSpec::new(self.k1, self.k2)?;
        if !(0.0..1.0).contains(&self.rcond) {
            return Err(Error::invalid(format!(
                "rcond must lie in [0, 1), got {}",
                self.rcond
            )));
        }
        let min_grid = match self.layout {
            GridLayout::Tensor => 2,
            GridLayout::Clustered => 1,
        };
        if self.nx < min_grid || self.ny < min_grid {
            return Err(Error::invalid(format!(
                "grid must be at least {min_grid}x{min_grid}"
            )));
        }
        if self.layout == GridLayout::Clustered && self.nx != self.ny {
            return Err(Error::invalid(
                "clustered layout needs a square interior grid (nx == ny)",
            ));
        }
        if self.layout == GridLayout::Clustered && self.boundary_per_wall < 2 {
            return Err(Error::invalid("boundary_per_wall must be at least 2"));
        }
        if self.eval_grid < 2 || self.profile_samples < 2 || self.field_nx < 2 || self.field_ny < 2
        {
            return Err(Error::invalid(
                "output grids need at least 2 samples per axis",
            ));
        }
        Ok(())
    }

    pub fn pai_config(&self) -> PaiConfig {
        PaiConfig {
            n_units: self.n_units,
            sigma0: self.sigma0,
            sigmac: self.sigmac,
            boundary_oversample: self.boundary_oversample,
            seed: self.seed,
        }
    }

    pub fn placement(&self) -> Placement {
        if self.pai {
            Placement::PhysicsAware
        } else {
            Placement::Uniform
        }
    }

    pub fn mms_spec(&self) -> Option<MmsSpec> {
        self.preset.mms_spec(MmsSpec {
            k1: self.k1,
            k2: self.k2,
        })
    }

    pub fn collocation_points(&self) -> Result<CollocationSet> {
        match self.layout {
            GridLayout::Tensor => {
                tensor_grid(&chebyshev_nodes(self.nx)?, &chebyshev_nodes(self.ny)?)
            }
            GridLayout::Clustered => clustered_square(self.nx, self.boundary_per_wall),
        }
    }

    /// Sets `nx` and `ny` from `"<nx>x<ny>"`.
    pub fn set_grid(&mut self, spec: &str) -> Result<()> {
        let (nx, ny) = parse_grid(spec)?;
        self.nx = nx;
        self.ny = ny;
        Ok(())
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_toml_string())
    }
}

pub fn parse_grid(spec: &str) -> Result<(usize, usize)> {
    let bad = || Error::invalid(format!("grid must look like <nx>x<ny>, got `{spec}`"));
    let (a, b) = spec.split_once(['x', 'X']).ok_or_else(bad)?;
    let nx = a.trim().parse().map_err(|_| bad())?;
    let ny = b.trim().parse().map_err(|_| bad())?;
    Ok((nx, ny))
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn preset_defaults() {
        let cavity = RunConfig::for_preset(Preset::Cavity);
        assert_eq!(cavity.n_units, 750);
        assert_eq!(cavity.collocation_points().unwrap().len(), 2688);
        let mms = RunConfig::for_preset(Preset::MmsK10);
        assert_eq!(mms.n_units, 2000);
        assert_eq!(mms.collocation_points().unwrap().len(), 3600);
        assert_eq!(mms.mms_spec(), Some(MmsSpec::K10));
        assert_eq!(cavity.mms_spec(), None);
        assert_eq!(cavity.rcond, 1e-10);
        assert_eq!((cavity.sigma0, cavity.sigmac), (0.3, 0.93));
    }

    #[test]
    fn file_overrides_preset_defaults() {
        let cfg =
            RunConfig::from_toml_str("preset = \"mms-k20\"\nn_units = 500\nseed = 7\n").unwrap();
        assert_eq!(cfg.preset, Preset::MmsK20);
        assert_eq!(cfg.n_units, 500);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.nx, 60);
        assert_eq!(RunConfig::from_toml_str("").unwrap(), RunConfig::default());
        let forced = RunConfig::from_toml_str_with_preset(
            "preset = \"cavity\"\nseed = 3\n",
            Some(Preset::MmsK10),
        )
        .unwrap();
        assert_eq!(
            (forced.preset, forced.n_units, forced.seed),
            (Preset::MmsK10, 2000, 3)
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let mut cfg = RunConfig::for_preset(Preset::MmsCustom);
        cfg.k1 = 2.5;
        cfg.sigma0 = 0.1 + 0.2;
        cfg.out = PathBuf::from("results/run 1");
        cfg.emit_matrix = true;
        let text = cfg.to_toml_string();
        assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn errors_carry_position() {
        let err = RunConfig::from_toml_str("n_units = 10\nsigma0 = = 3\n").unwrap_err();
        match err {
            Error::Config { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column >= 9, "column {column}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let err = RunConfig::from_toml_str("n_units = 10\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }), "{err:?}");
        let err = RunConfig::from_toml_str("preset = \"lid\"\n").unwrap_err();
        assert!(matches!(err, Error::Config { line: 1, .. }), "{err:?}");
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 16);
        let mut c = a.clone();
        c.out = PathBuf::from("elsewhere");
        c.threads = 3;
        assert_eq!(a.hash(), c.hash());
    }

    #[test]
    fn grid_spec_parsing() {
        assert_eq!(parse_grid("60x60").unwrap(), (60, 60));
        assert_eq!(parse_grid("30X40").unwrap(), (30, 40));
        assert!(parse_grid("60").is_err());
        assert!(parse_grid("ax3").is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::default();
        cfg.validate().unwrap();
        cfg.rcond = 1.0;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            nx: 40,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            sigma0: 0.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn line_column_positions() {
        assert_eq!(line_column("abc\ndef", 5), (2, 2));
        assert_eq!(line_column("abc", 0), (1, 1));
    }

    proptest! {
        #[test]
        fn arbitrary_configs_round_trip(
            n_units in 1usize..5000, seed in 0u64..(i64::MAX as u64), sigma0 in 1e-3..5.0f64,
            sigmac in 0.0..5.0f64, rcond in 0.0..0.5f64, pai: bool, clamped: bool, k1 in -50.0..50.0f64,
            preset in 0usize..4,
        ) {
            let mut cfg = RunConfig::for_preset(Preset::ALL[preset]);
            cfg.n_units = n_units;
            cfg.seed = seed;
            cfg.sigma0 = sigma0;
            cfg.sigmac = sigmac;
            cfg.rcond = rcond;
            cfg.pai = pai;
            cfg.clamped = clamped;
            cfg.k1 = k1;
            let back = RunConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
            prop_assert_eq!(back, cfg);
        }
    }
}
