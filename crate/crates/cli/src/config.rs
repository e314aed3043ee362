//! Run configuration: TOML file, flag overrides and the resolved form that
//! is echoed into every output file.

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use qbsim_core::meanfield::MeanFieldParams;
use qbsim_core::waveguide::{check_collective, ModelKind, ModelSpec, Setup};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Full,
    Single,
    Collective,
    Meanfield,
}

impl Model {
    pub fn kind(self) -> Option<ModelKind> {
        match self {
            Model::Full => Some(ModelKind::Full),
            Model::Single => Some(ModelKind::Single),
            Model::Collective => Some(ModelKind::Collective),
            Model::Meanfield => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Model::Full => "full",
            Model::Single => "single",
            Model::Collective => "collective",
            Model::Meanfield => "meanfield",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Evolve,
    Steady,
    Spectrum,
    Meanfield,
    PhaseDiagram,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Evolve => "evolve",
            Command::Steady => "steady",
            Command::Spectrum => "spectrum",
            Command::Meanfield => "meanfield",
            Command::PhaseDiagram => "phase-diagram",
        }
    }

    fn default_model(self) -> Model {
        match self {
            Command::Evolve | Command::Steady => Model::Single,
            Command::Spectrum => Model::Collective,
            Command::Meanfield | Command::PhaseDiagram => Model::Meanfield,
        }
    }

    fn accepts(self, model: Model) -> bool {
        match self {
            Command::Evolve => true,
            Command::Steady => matches!(model, Model::Single | Model::Collective),
            Command::Spectrum => model == Model::Collective,
            Command::Meanfield | Command::PhaseDiagram => model == Model::Meanfield,
        }
    }

    fn sweeps(self) -> bool {
        matches!(self, Command::Steady | Command::PhaseDiagram)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// ModelSpec fields a sweep axis may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Omega,
    G,
    GammaR,
    GammaL,
    Phi1,
    NAtoms,
    Omega0,
}

impl Param {
    pub fn column(self) -> &'static str {
        match self {
            Param::Omega => "omega",
            Param::G => "g",
            Param::GammaR => "gamma_r",
            Param::GammaL => "gamma_l",
            Param::Phi1 => "phi1",
            Param::NAtoms => "n_atoms",
            Param::Omega0 => "omega0",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: Param,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
    #[serde(default)]
    pub log: bool,
}

impl Axis {
    pub fn linear(name: Param, min: f64, max: f64, steps: usize) -> Self {
        Axis {
            name,
            min,
            max,
            steps,
            log: false,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                let u = k as f64 / last;
                if self.log {
                    self.min * (self.max / self.min).powf(u)
                } else {
                    self.min + (self.max - self.min) * k as f64 / last
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let name = self.name.column();
        if self.steps == 0 {
            return Err(CliError::config(format!("sweep axis {name}: steps must be at least 1")));
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(CliError::config(format!("sweep axis {name}: bounds must be finite")));
        }
        if self.log && !(self.min > 0.0 && self.max > 0.0) {
            return Err(CliError::config(format!("sweep axis {name}: log spacing needs positive bounds")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpecConfig {
    /// Setup index, 1 or 2.
    pub setup: u8,
    pub n_atoms: usize,
    pub gamma_r: f64,
    pub gamma_l: f64,
    pub g: f64,
    pub omega: f64,
    /// Mirror phase of setup II.
    pub phi1: f64,
    /// Inter-atom phases `φ_2, …, φ_N`; all 2π when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<f64>>,
    pub omega0: f64,
    /// Read `gamma_r + gamma_l` as the rescaled rate `Γ = Nγ`. Defaults to
    /// true for the collective and mean-field models.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rescaled: Option<bool>,
}

impl Default for SpecConfig {
    fn default() -> Self {
        SpecConfig {
            setup: 1,
            n_atoms: 1,
            gamma_r: 0.5,
            gamma_l: 0.5,
            g: 0.0,
            omega: 0.5,
            phi1: TAU,
            phi: None,
            omega0: 1.0,
            rescaled: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Relative singular-value threshold for steady-state null spaces.
    pub null_space: f64,
    /// Smallest eigenvalue tolerated along an evolution.
    pub positivity_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: 1e-9,
            atol: 1e-12,
            null_space: 1e-10,
            positivity_floor: -1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<Model>,
    pub t_max: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub spec: SpecConfig,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<Axis>,
    pub output: OutputConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: None,
            t_max: 20.0,
            n_samples: 201,
            seed: 0,
            spec: SpecConfig::default(),
            sweep: Vec::new(),
            output: OutputConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

/// Per-field overrides from the command line.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    #[arg(long, value_parser = parse_model)]
    pub model: Option<Model>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub g: Option<f64>,
    #[arg(long)]
    pub n_atoms: Option<usize>,
    #[arg(long)]
    pub setup: Option<u8>,
    #[arg(long)]
    pub gamma_r: Option<f64>,
    #[arg(long)]
    pub gamma_l: Option<f64>,
    #[arg(long)]
    pub phi1: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_model(s: &str) -> std::result::Result<Model, String> {
    match s {
        "full" => Ok(Model::Full),
        "single" => Ok(Model::Single),
        "collective" => Ok(Model::Collective),
        "meanfield" => Ok(Model::Meanfield),
        _ => Err(format!("unknown model {s:?}; expected full, single, collective or meanfield")),
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn apply(&mut self, o: &Overrides) {
        let s = &mut self.spec;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(self.model, o.model.map(Some));
        set!(s.omega, o.omega);
        set!(s.g, o.g);
        set!(s.n_atoms, o.n_atoms);
        set!(s.setup, o.setup);
        set!(s.gamma_r, o.gamma_r);
        set!(s.gamma_l, o.gamma_l);
        set!(s.phi1, o.phi1);
        set!(self.t_max, o.t_max);
        set!(self.n_samples, o.samples);
        set!(self.output.path, o.out.clone().map(Some));
        set!(self.output.format, o.format);
    }

    /// Fill defaults that depend on the command and check the result.
    pub fn resolve(mut self, cmd: Command) -> Result<Self> {
        let model = *self.model.get_or_insert(cmd.default_model());
        if !cmd.accepts(model) {
            return Err(CliError::config(format!(
                "model {} is not supported by {cmd}",
                model.name()
            )));
        }
        self.spec
            .rescaled
            .get_or_insert(matches!(model, Model::Collective | Model::Meanfield));
        if cmd == Command::PhaseDiagram && self.sweep.is_empty() {
            self.sweep = vec![Axis::linear(Param::Omega, 0.0, 3.0, 31), Axis::linear(Param::G, -3.0, 2.0, 51)];
        }
        self.validate(cmd)?;
        Ok(self)
    }

    pub fn model(&self) -> Model {
        self.model.expect("resolved config")
    }

    fn validate(&self, cmd: Command) -> Result<()> {
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(CliError::config(format!("t_max must be positive, got {}", self.t_max)));
        }
        if self.n_samples < 2 {
            return Err(CliError::config(format!("n_samples must be at least 2, got {}", self.n_samples)));
        }
        if !self.sweep.is_empty() && !cmd.sweeps() {
            return Err(CliError::config(format!("{cmd} does not take sweep axes")));
        }
        for (k, axis) in self.sweep.iter().enumerate() {
            axis.validate()?;
            if self.sweep[..k].iter().any(|a| a.name == axis.name) {
                return Err(CliError::config(format!("sweep axis {} given twice", axis.name.column())));
            }
        }
        if cmd == Command::PhaseDiagram {
            if let Some(a) = self.sweep.iter().find(|a| !matches!(a.name, Param::Omega | Param::G)) {
                return Err(CliError::config(format!(
                    "phase-diagram sweeps omega and g only, not {}",
                    a.name.column()
                )));
            }
        }
        let t = &self.tolerances;
        if !(t.rtol > 0.0 && t.atol > 0.0 && t.null_space > 0.0) {
            return Err(CliError::config("tolerances must be positive"));
        }
        let model = self.model();
        if model == Model::Single && self.spec.n_atoms != 1 {
            return Err(CliError::config("the single-atom model needs n_atoms = 1"));
        }
        if model == Model::Single && self.sweep.iter().any(|a| a.name == Param::NAtoms) {
            return Err(CliError::config("the single-atom model cannot sweep n_atoms"));
        }
        // every grid point must produce a valid model
        for point in self.grid()? {
            if model == Model::Meanfield {
                self.meanfield_params(&point)?;
            } else {
                let spec = self.model_spec(&point)?;
                spec.validate()?;
                if model == Model::Collective {
                    check_collective(&spec)?;
                }
            }
        }
        Ok(())
    }

    /// Sweep grid in row-major order (first axis slowest). A run without
    /// axes has one empty point.
    pub fn grid(&self) -> Result<Vec<Vec<(Param, f64)>>> {
        let mut points = vec![Vec::new()];
        for axis in &self.sweep {
            let values = axis.values();
            if axis.name == Param::NAtoms {
                if let Some(v) = values.iter().find(|v| (*v - v.round()).abs() > 1e-9 || **v < 1.0) {
                    return Err(CliError::config(format!("n_atoms axis hits non-integer value {v}")));
                }
            }
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((axis.name, v));
                        q
                    })
                })
                .collect();
        }
        Ok(points)
    }

    fn spec_at(&self, point: &[(Param, f64)]) -> SpecConfig {
        let mut s = self.spec.clone();
        for &(param, v) in point {
            match param {
                Param::Omega => s.omega = v,
                Param::G => s.g = v,
                Param::GammaR => s.gamma_r = v,
                Param::GammaL => s.gamma_l = v,
                Param::Phi1 => s.phi1 = v,
                Param::NAtoms => s.n_atoms = v.round() as usize,
                Param::Omega0 => s.omega0 = v,
            }
        }
        s
    }

    fn setup(&self) -> Result<Setup> {
        Setup::from_n(self.spec.setup)
            .ok_or_else(|| CliError::config(format!("setup must be 1 or 2, got {}", self.spec.setup)))
    }

    /// Model parameters at one grid point, with the rescaling applied.
    pub fn model_spec(&self, point: &[(Param, f64)]) -> Result<ModelSpec> {
        let s = self.spec_at(point);
        let n = s.n_atoms;
        if n == 0 {
            return Err(CliError::config("n_atoms must be at least 1"));
        }
        let mut phi = vec![s.phi1];
        match &s.phi {
            Some(rest) if rest.len() + 1 != n => {
                return Err(CliError::config(format!(
                    "spec.phi lists the {} inter-atom phases of {} atoms, got {}",
                    n - 1,
                    n,
                    rest.len()
                )))
            }
            Some(rest) => phi.extend(rest),
            None => phi.resize(n, TAU),
        }
        let scale = if s.rescaled.unwrap_or(false) { 1.0 / n as f64 } else { 1.0 };
        Ok(ModelSpec {
            setup: self.setup()?,
            n_atoms: n,
            gamma_r: s.gamma_r * scale,
            gamma_l: s.gamma_l * scale,
            g: s.g,
            omega: s.omega,
            phi,
            omega0: s.omega0,
        })
    }

    pub fn meanfield_params(&self, point: &[(Param, f64)]) -> Result<MeanFieldParams> {
        let s = self.spec_at(point);
        if (s.gamma_r - s.gamma_l).abs() > 1e-12 {
            return Err(CliError::config("the mean-field model needs achiral coupling (gamma_r = gamma_l)"));
        }
        let big_gamma = s.gamma_r + s.gamma_l;
        if big_gamma.is_nan() || big_gamma <= 0.0 {
            return Err(CliError::config("gamma_r + gamma_l must be positive"));
        }
        if !(s.omega.is_finite() && s.g.is_finite()) {
            return Err(CliError::config("omega and g must be finite"));
        }
        let mut p = MeanFieldParams::new(s.omega, s.g, self.setup()?);
        p.big_gamma = big_gamma;
        Ok(p)
    }

    pub fn time_grid(&self) -> Vec<f64> {
        qbsim_core::lindblad::uniform_grid(self.t_max, self.n_samples)
    }

    /// The resolved configuration as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}
