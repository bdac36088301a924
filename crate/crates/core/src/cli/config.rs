use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::curve::Grid;
use crate::error::{Error, Result};
use crate::minimize::{MinimizeOptions, MultistartOptions};
use crate::mountainpass::{PathOptions, RefineOptions};
use crate::potential::{PolyTerm, PotentialKind, PotentialSpec, SamplingConfig};
use crate::symmetry::DriftOptions;

/// Potential block: either a builtin name with optional overrides, or a full
/// spec (`kind`, `k`, `wells`, ...).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<PotentialKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wells: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub terms: Vec<PolyTerm>,
}

impl PotentialBlock {
    pub fn resolve(&self) -> Result<PotentialSpec> {
        let mut spec = match (&self.builtin, self.kind) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("potential: give either `builtin` or `kind`, not both".into()))
            }
            (Some(name), None) => PotentialSpec::builtin(name)
                .ok_or_else(|| Error::Config(format!("potential: unknown builtin `{name}`")))?,
            (None, Some(kind)) => {
                let wells = self
                    .wells
                    .clone()
                    .ok_or_else(|| Error::Config("potential: `wells` is required with `kind`".into()))?;
                let k = self.k.or_else(|| wells.first().map(Vec::len)).unwrap_or(0);
                PotentialSpec {
                    kind,
                    k,
                    params: BTreeMap::new(),
                    wells,
                    symmetric: false,
                    terms: self.terms.clone(),
                }
            }
            (None, None) => return Err(Error::Config("potential: `builtin` or `kind` is required".into())),
        };
        if self.builtin.is_some() {
            if let Some(w) = &self.wells {
                spec.wells = w.clone();
            }
            if let Some(k) = self.k {
                spec.k = k;
            }
            if !self.terms.is_empty() {
                return Err(Error::Config("potential: `terms` only apply to kind = \"polynomial\"".into()));
            }
        }
        spec.params.extend(self.params.iter().map(|(k, v)| (k.clone(), *v)));
        if let Some(s) = self.symmetric {
            spec.symmetric = s;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "M")]
    pub m: usize,
}

impl Default for GridBlock {
    fn default() -> Self {
        GridBlock { t: 10.0, m: 2001 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub tol_grad: f64,
    pub tol_refine: f64,
    pub max_iter: usize,
    pub renorm_every: usize,
    pub refine_max_iter: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        SolverBlock {
            tol_grad: 1e-8,
            tol_refine: 1e-10,
            max_iter: 20_000,
            renorm_every: 25,
            refine_max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathBlock {
    #[serde(rename = "N")]
    pub n: usize,
    pub spring: Option<f64>,
    pub climbing: bool,
    pub tol_grad: f64,
    pub max_iter: usize,
}

impl Default for PathBlock {
    fn default() -> Self {
        let p = PathOptions::default();
        PathBlock {
            n: p.images,
            spring: p.spring,
            climbing: p.climbing,
            tol_grad: p.tol_grad,
            max_iter: p.max_iter,
        }
    }
}

/// Thresholds of the saddle diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsBlock {
    /// Well proximity for tails and splitting plateaus.
    pub delta: f64,
    pub l_min: usize,
    pub three_m_tol: f64,
    pub margin_tol: f64,
    pub drift_window: usize,
    pub drift_fraction: f64,
    pub sym_energy_tol: f64,
}

impl Default for DiagnosticsBlock {
    fn default() -> Self {
        let d = DriftOptions::default();
        DiagnosticsBlock {
            delta: d.delta,
            l_min: d.l_min,
            three_m_tol: 1e-2,
            margin_tol: 1e-3,
            drift_window: d.window,
            drift_fraction: d.fraction,
            sym_energy_tol: d.energy_tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            directory: PathBuf::from("out"),
            formats: vec![Format::Json, Format::Csv],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairBlock {
    pub from: usize,
    pub to: usize,
}

impl Default for PairBlock {
    fn default() -> Self {
        PairBlock { from: 0, to: 1 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnoseBlock {
    /// Orbit CSV inspected by `diagnose`, relative to the config file.
    pub orbit: Option<PathBuf>,
}

/// A parsed run configuration. Omitted blocks and keys take their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub potential: PotentialBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub multistart: MultistartOptions,
    #[serde(default)]
    pub path: PathBlock,
    #[serde(default)]
    pub pair: PairBlock,
    #[serde(default)]
    pub diagnostics: DiagnosticsBlock,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub diagnose: DiagnoseBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Read and parse a config file; a relative `diagnose.orbit` is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(orbit), Some(dir)) = (&cfg.diagnose.orbit, path.parent()) {
            if orbit.is_relative() {
                cfg.diagnose.orbit = Some(dir.join(orbit));
            }
        }
        Ok(cfg)
    }

    /// Range checks beyond what parsing enforces.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("solver.tol_grad", self.solver.tol_grad),
            ("solver.tol_refine", self.solver.tol_refine),
            ("path.tol_grad", self.path.tol_grad),
            ("multistart.cluster_threshold", self.multistart.cluster_threshold),
            ("multistart.energy_window", self.multistart.energy_window),
            ("diagnostics.delta", self.diagnostics.delta),
            ("diagnostics.three_m_tol", self.diagnostics.three_m_tol),
            ("diagnostics.margin_tol", self.diagnostics.margin_tol),
            ("diagnostics.drift_fraction", self.diagnostics.drift_fraction),
            ("diagnostics.sym_energy_tol", self.diagnostics.sym_energy_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.grid.t < 1.0 {
            return Err(Error::Config(format!("grid.T must be at least 1, got {}", self.grid.t)));
        }
        if self.grid.m < 3 || self.grid.m.is_multiple_of(2) {
            return Err(Error::Config(format!("grid.M must be odd and at least 3, got {}", self.grid.m)));
        }
        if self.path.n < 3 {
            return Err(Error::Config(format!("path.N must be at least 3, got {}", self.path.n)));
        }
        if self.multistart.n_seeds == 0 {
            return Err(Error::Config("multistart.n_seeds must be at least 1".into()));
        }
        if let Some(s) = self.path.spring {
            if s.is_nan() || s <= 0.0 {
                return Err(Error::Config(format!("path.spring must be positive, got {s}")));
            }
        }
        if self.pair.from == self.pair.to {
            return Err(Error::Config("pair.from and pair.to must differ".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.grid.t, self.grid.m)
    }

    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            tol_grad: self.solver.tol_grad,
            max_iter: self.solver.max_iter,
            renorm_every: self.solver.renorm_every,
        }
    }

    pub fn path_options(&self) -> PathOptions {
        PathOptions {
            images: self.path.n,
            spring: self.path.spring,
            climbing: self.path.climbing,
            tol_grad: self.path.tol_grad,
            max_iter: self.path.max_iter,
        }
    }

    pub fn refine_options(&self) -> RefineOptions {
        RefineOptions {
            tol: self.solver.tol_refine,
            max_iter: self.solver.refine_max_iter,
            cluster_threshold: self.multistart.cluster_threshold,
        }
    }

    pub fn drift_options(&self) -> DriftOptions {
        DriftOptions {
            window: self.diagnostics.drift_window,
            fraction: self.diagnostics.drift_fraction,
            delta: self.diagnostics.delta,
            l_min: self.diagnostics.l_min,
            energy_tol: self.diagnostics.sym_energy_tol,
        }
    }

    pub fn csv(&self) -> bool {
        self.output.formats.contains(&Format::Csv)
    }
}
