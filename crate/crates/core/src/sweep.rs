//! Exhaustive hyperparameter grids over the full pipeline.

use std::cmp::Ordering;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Deserialize;

use crate::config::{line_column, RunConfig};
use crate::error::{Error, Result};
use crate::execution::Execution;
use crate::pipeline::run;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Sigma0,
    Sigmac,
    NUnits,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Sigma0 => "sigma0",
            SweepAxis::Sigmac => "sigmac",
            SweepAxis::NUnits => "n_units",
        }
    }

    fn apply(self, cfg: &mut RunConfig, value: f64) {
        match self {
            SweepAxis::Sigma0 => cfg.sigma0 = value,
            SweepAxis::Sigmac => cfg.sigmac = value,
            SweepAxis::NUnits => cfg.n_units = value as usize,
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigma0" => Ok(SweepAxis::Sigma0),
            "sigmac" => Ok(SweepAxis::Sigmac),
            "n_units" => Ok(SweepAxis::NUnits),
            other => Err(Error::invalid(format!(
                "unknown sweep axis `{other}` (expected sigma0, sigmac or n_units)"
            ))),
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxisSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

impl AxisSpec {
    pub fn new(axis: SweepAxis, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid(format!("axis {axis} has no values")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("axis {axis} has non-finite values")));
        }
        if values
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(Ordering::Less))
        {
            return Err(Error::invalid(format!(
                "axis {axis} values must be strictly increasing"
            )));
        }
        if axis == SweepAxis::NUnits && values.iter().any(|v| *v < 1.0 || v.fract() != 0.0) {
            return Err(Error::invalid("n_units values must be positive integers"));
        }
        Ok(AxisSpec { axis, values })
    }

    /// Parses `name=v1,v2,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let (name, list) = text.split_once('=').ok_or_else(|| {
            Error::invalid(format!("axis must look like name=v1,v2,..., got `{text}`"))
        })?;
        let values = list
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad axis value `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        AxisSpec::new(name.trim().parse()?, values)
    }

    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    pub fn linspace(axis: SweepAxis, lo: f64, hi: f64, n: usize) -> Result<Self> {
        let values = match n {
            0 => vec![],
            1 => vec![lo],
            _ => (0..n)
                .map(|i| {
                    let t = i as f64 / (n - 1) as f64;
                    lo * (1.0 - t) + hi * t
                })
                .collect(),
        };
        AxisSpec::new(axis, values)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub axis1: AxisSpec,
    pub axis2: Option<AxisSpec>,
    pub base: RunConfig,
    pub seeds: Vec<u64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisFile {
    name: String,
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    seeds: Option<Vec<u64>>,
    axis1: AxisFile,
    axis2: Option<AxisFile>,
}

/// Seeds per cell when none are given.
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

impl SweepSpec {
    pub fn new(
        axis1: AxisSpec,
        axis2: Option<AxisSpec>,
        base: RunConfig,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        let spec = SweepSpec {
            axis1,
            axis2,
            base,
            seeds,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The width-parameter grid: `sigma0` in `[0.05, 1.0]` by `sigmac` in `[0, 2]`, ten steps each.
    pub fn sigma_grid(base: RunConfig) -> Self {
        SweepSpec {
            axis1: AxisSpec::linspace(SweepAxis::Sigma0, 0.05, 1.0, 10).expect("static axis"),
            axis2: Some(AxisSpec::linspace(SweepAxis::Sigmac, 0.0, 2.0, 10).expect("static axis")),
            base,
            seeds: DEFAULT_SEEDS.to_vec(),
        }
    }

    /// Parses a sweep file:
    ///
    /// ```toml
    /// seeds = [0, 1, 2]
    /// [axis1]
    /// name = "sigma0"
    /// values = [0.1, 0.3, 0.9]
    /// [axis2]            # optional
    /// name = "sigmac"
    /// values = [0.5, 0.93]
    /// ```
    pub fn from_toml_str(text: &str, base: RunConfig) -> Result<Self> {
        let file: SweepFile = toml::from_str(text).map_err(|e| {
            let (line, column) = e
                .span()
                .map(|s| line_column(text, s.start))
                .unwrap_or((1, 1));
            Error::Config {
                line,
                column,
                message: e.message().to_string(),
            }
        })?;
        let axis = |a: AxisFile| AxisSpec::new(a.name.parse()?, a.values);
        SweepSpec::new(
            axis(file.axis1)?,
            file.axis2.map(axis).transpose()?,
            base,
            file.seeds.unwrap_or_else(|| DEFAULT_SEEDS.to_vec()),
        )
    }

    pub fn validate(&self) -> Result<()> {
        AxisSpec::new(self.axis1.axis, self.axis1.values.clone())?;
        if let Some(a2) = &self.axis2 {
            AxisSpec::new(a2.axis, a2.values.clone())?;
            if a2.axis == self.axis1.axis {
                return Err(Error::invalid("sweep axes must differ"));
            }
        }
        if self.seeds.is_empty() {
            return Err(Error::invalid("sweep needs at least one seed"));
        }
        Ok(())
    }

    /// Cells in lexicographic order (axis1 outer).
    pub fn cells(&self) -> Vec<(f64, Option<f64>)> {
        let mut cells = Vec::new();
        for &a in &self.axis1.values {
            match &self.axis2 {
                Some(a2) => cells.extend(a2.values.iter().map(|&b| (a, Some(b)))),
                None => cells.push((a, None)),
            }
        }
        cells
    }

    pub fn cell_config(&self, cell: (f64, Option<f64>), seed: u64) -> RunConfig {
        let mut cfg = self.base.clone();
        self.axis1.axis.apply(&mut cfg, cell.0);
        if let (Some(a2), Some(v)) = (&self.axis2, cell.1) {
            a2.axis.apply(&mut cfg, v);
        }
        cfg.seed = seed;
        cfg
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CellStatus {
    Ok,
    Failed(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    /// Mean over seeds of the mean absolute collocation residual.
    pub mean_residual: f64,
    /// Sample standard deviation over seeds; 0 for a single seed.
    pub std_residual: f64,
    /// Mean assembly-plus-solve time.
    pub mean_time_s: f64,
    pub status: CellStatus,
}

/// Runs every `(cell, seed)` pair. Pairs are independent and may run
/// concurrently; the table is assembled after all of them finish.
pub fn run_sweep(spec: &SweepSpec, execution: Execution) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let cells = spec.cells();
    let jobs: Vec<RunConfig> = cells
        .iter()
        .flat_map(|&cell| {
            spec.seeds
                .iter()
                .map(move |&seed| spec.cell_config(cell, seed))
        })
        .collect();
    let results = execution.map(&jobs, |cfg| {
        run(cfg, execution).map(|out| (out.solve.residual_mean_abs, out.train_seconds()))
    });

    let per_cell = spec.seeds.len();
    Ok(cells
        .iter()
        .zip(results.chunks(per_cell))
        .map(|(&(a1, a2), outcomes)| {
            let failure = outcomes.iter().find_map(|r| r.as_ref().err());
            if let Some(err) = failure {
                return SweepRow {
                    axis1: a1,
                    axis2: a2,
                    mean_residual: f64::NAN,
                    std_residual: f64::NAN,
                    mean_time_s: f64::NAN,
                    status: CellStatus::Failed(format!("[{}] {err}", err.module())),
                };
            }
            let ok: Vec<(f64, f64)> = outcomes
                .iter()
                .filter_map(|r| r.as_ref().ok().copied())
                .collect();
            let n = ok.len() as f64;
            let mean = ok.iter().map(|r| r.0).sum::<f64>() / n;
            let std = if ok.len() > 1 {
                (ok.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            SweepRow {
                axis1: a1,
                axis2: a2,
                mean_residual: mean,
                std_residual: std,
                mean_time_s: ok.iter().map(|r| r.1).sum::<f64>() / n,
                status: CellStatus::Ok,
            }
        })
        .collect())
}

pub fn write_sweep_csv(mut w: impl Write, rows: &[SweepRow]) -> io::Result<()> {
    writeln!(
        w,
        "axis1,axis2,mean_residual,std_residual,mean_time_s,status"
    )?;
    for r in rows {
        let axis2 = r.axis2.map(|v| v.to_string()).unwrap_or_default();
        let status = match &r.status {
            CellStatus::Ok => "ok".to_string(),
            CellStatus::Failed(msg) => format!("error: {}", msg.replace([',', '\n', '"'], " ")),
        };
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.axis1, axis2, r.mean_residual, r.std_residual, r.mean_time_s, status
        )?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Preset;

    fn tiny_base() -> RunConfig {
        let mut cfg = RunConfig::for_preset(Preset::Cavity);
        cfg.nx = 10;
        cfg.ny = 10;
        cfg.boundary_per_wall = 16;
        cfg.n_units = 40;
        cfg
    }

    #[test]
    fn axis_validation() {
        assert!(AxisSpec::parse("sigma0=0.1,0.3,0.9").is_ok());
        assert!(AxisSpec::parse("width=0.1").is_err());
        assert!(AxisSpec::parse("sigma0=0.3,0.1").is_err());
        assert!(AxisSpec::parse("sigma0=").is_err());
        assert!(AxisSpec::parse("n_units=10.5").is_err());
        assert!(AxisSpec::parse("n_units=0,10").is_err());
        assert!(AxisSpec::parse("sigmac").is_err());
    }

    #[test]
    fn default_grid_has_100_cells() {
        let spec = SweepSpec::sigma_grid(tiny_base());
        let cells = spec.cells();
        assert_eq!(cells.len(), 100);
        assert_eq!(cells[0], (0.05, Some(0.0)));
        assert_eq!(cells[99], (1.0, Some(2.0)));
        // lexicographic: second axis varies fastest
        assert_eq!(cells[1].0, 0.05);
    }

    #[test]
    fn spec_file_parsing() {
        let text = "seeds = [4]\n[axis1]\nname = \"n_units\"\nvalues = [20, 30]\n";
        let spec = SweepSpec::from_toml_str(text, tiny_base()).unwrap();
        assert_eq!(spec.seeds, vec![4]);
        assert_eq!(spec.axis1.axis, SweepAxis::NUnits);
        assert!(spec.axis2.is_none());

        let bad = "[axis1]\nname = \"width\"\nvalues = [1.0]\n";
        assert!(matches!(
            SweepSpec::from_toml_str(bad, tiny_base()),
            Err(Error::InvalidArgument(_))
        ));
        let same = "[axis1]\nname = \"sigma0\"\nvalues = [1.0]\n[axis2]\nname = \"sigma0\"\nvalues = [2.0]\n";
        assert!(SweepSpec::from_toml_str(same, tiny_base()).is_err());
        assert!(matches!(
            SweepSpec::from_toml_str("[axis1\n", tiny_base()),
            Err(Error::Config { line: 1, .. })
        ));
    }

    #[test]
    fn single_cell_matches_direct_run() {
        let base = tiny_base();
        let spec = SweepSpec::new(
            AxisSpec::parse("sigma0=0.3").unwrap(),
            None,
            base.clone(),
            vec![5],
        )
        .unwrap();
        let rows = run_sweep(&spec, Execution::Parallel).unwrap();
        assert_eq!(rows.len(), 1);
        let mut direct_cfg = base;
        direct_cfg.seed = 5;
        let direct = run(&direct_cfg, Execution::Parallel).unwrap();
        assert_eq!(rows[0].mean_residual, direct.solve.residual_mean_abs);
        assert_eq!(rows[0].std_residual, 0.0);
        assert_eq!(rows[0].status, CellStatus::Ok);
    }

    #[test]
    fn failed_cells_are_marked() {
        let spec = SweepSpec::new(
            AxisSpec::parse("n_units=20,5000").unwrap(),
            None,
            tiny_base(),
            vec![0],
        )
        .unwrap();
        let rows = run_sweep(&spec, Execution::Sequential).unwrap();
        assert_eq!(rows[0].status, CellStatus::Ok);
        assert!(matches!(&rows[1].status, CellStatus::Failed(m) if m.contains("underdetermined")));
        let mut csv = Vec::new();
        write_sweep_csv(&mut csv, &rows).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("axis1,axis2,mean_residual,std_residual,mean_time_s,status\n"));
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().nth(2).unwrap().contains(",error: "));
        assert_eq!(text.lines().nth(2).unwrap().split(',').count(), 6);
    }

    #[test]
    fn sweeps_are_deterministic() {
        let spec = SweepSpec::new(
            AxisSpec::parse("sigma0=0.2,0.4").unwrap(),
            Some(AxisSpec::parse("sigmac=0.5,1.0").unwrap()),
            tiny_base(),
            vec![0, 1],
        )
        .unwrap();
        let a = run_sweep(&spec, Execution::Parallel).unwrap();
        let b = run_sweep(&spec, Execution::Sequential).unwrap();
        assert_eq!(a.len(), 4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                (
                    x.axis1,
                    x.axis2,
                    x.mean_residual.to_bits(),
                    x.std_residual.to_bits()
                ),
                (
                    y.axis1,
                    y.axis2,
                    y.mean_residual.to_bits(),
                    y.std_residual.to_bits()
                )
            );
        }
    }
}
