use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::eigensolver::{DEFAULT_K, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::efactor::DEFAULT_NODE_EPS;
use crate::model::{GridSpec, ModelParams, DEFAULT_MAX_DIMENSION};
use crate::resonance::{ResonanceMode, DEFAULT_BRACKET, DEFAULT_FREQ_TOL, DEFAULT_SCAN_POINTS};
use crate::{Error, Result};

/// Coupling/frequency pairs of the reference resonance table.
pub const TABLE1: [(f64, f64); 3] = [(0.1, 0.37676260), (0.5, 0.39495042), (0.9, 0.43442993)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Solve,
    Factorize,
    Resonance,
    Approx,
    Compare,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Solve => "solve",
            Task::Factorize => "factorize",
            Task::Resonance => "resonance",
            Task::Approx => "approx",
            Task::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            k: DEFAULT_K,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FactorizeConfig {
    /// 0-based state indices; 1 and 2 are the lower and upper polariton.
    pub states: Vec<usize>,
    pub node_eps: f64,
}

impl Default for FactorizeConfig {
    fn default() -> Self {
        FactorizeConfig {
            states: vec![0, 1, 2],
            node_eps: DEFAULT_NODE_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Delocalization,
    Gap,
}

impl From<ModeName> for ResonanceMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Delocalization => ResonanceMode::Delocalization,
            ModeName::Gap => ResonanceMode::GapMinimum,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResonanceConfig {
    pub lambdas: Vec<f64>,
    pub bracket: [f64; 2],
    pub tol: f64,
    pub scan_points: usize,
    pub mode: ModeName,
}

impl Default for ResonanceConfig {
    fn default() -> Self {
        ResonanceConfig {
            lambdas: TABLE1.iter().map(|p| p.0).collect(),
            bracket: [DEFAULT_BRACKET.0, DEFAULT_BRACKET.1],
            tol: DEFAULT_FREQ_TOL,
            scan_points: DEFAULT_SCAN_POINTS,
            mode: ModeName::Delocalization,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ApproxConfig {
    /// Photon number N of the polariton pair.
    pub n: usize,
    /// λ_c range and sample count of the peak-height sweep (at the model ω_c).
    pub sweep: [f64; 2],
    pub sweep_points: usize,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        ApproxConfig {
            n: 1,
            sweep: [0.0, 1.0],
            sweep_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiguresConfig {
    /// (λ_c, ω_c) pairs used by `approx` and `compare`.
    pub points: Vec<[f64; 2]>,
}

impl Default for FiguresConfig {
    fn default() -> Self {
        FiguresConfig {
            points: TABLE1.iter().map(|&(l, w)| [l, w]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// When present, must agree with the subcommand.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub model: ModelParams,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub factorize: FactorizeConfig,
    pub resonance: ResonanceConfig,
    pub approx: ApproxConfig,
    pub figures: FiguresConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            task: None,
            output: None,
            model: ModelParams::default().with_coupling(TABLE1[1].0, TABLE1[1].1),
            grid: GridSpec::default(),
            solver: SolverConfig::default(),
            factorize: FactorizeConfig::default(),
            resonance: ResonanceConfig::default(),
            approx: ApproxConfig::default(),
            figures: FiguresConfig::default(),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Config(msg()))
    }
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Hex SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Recovers the configuration embedded in an artifact header.
    pub fn from_artifact(text: &str) -> Result<RunConfig> {
        let body: Vec<&str> = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .filter_map(|l| l.strip_prefix("# config: ").or_else(|| (l == "# config:").then_some("")))
            .collect();
        if body.is_empty() {
            return Err(Error::Config("artifact carries no embedded config".into()));
        }
        RunConfig::from_toml(&body.join("\n"))
    }

    /// Checks every numeric field against the model and grid invariants.
    pub fn validate(&self, task: Task) -> Result<()> {
        if let Some(t) = self.task {
            check(t == task, || format!("config is for task '{}' but '{}' was requested", t.name(), task.name()))?;
        }
        let g = &self.grid;
        check(g.x_min.is_finite() && g.x_max.is_finite() && g.x_min < g.x_max, || {
            format!("invalid x box [{}, {}]", g.x_min, g.x_max)
        })?;
        check(g.nx >= 5 && g.nq >= 5, || format!("grid needs at least 5 points per axis, got {}x{}", g.nx, g.nq))?;
        check(g.nx.saturating_mul(g.nq) <= DEFAULT_MAX_DIMENSION, || {
            format!("grid {}x{} exceeds {} points", g.nx, g.nq, DEFAULT_MAX_DIMENSION)
        })?;
        check(finite_pos(g.q_tail), || format!("invalid q_tail {}", g.q_tail))?;
        if let Some(q) = g.q_max {
            check(finite_pos(q), || format!("invalid q_max {q}"))?;
        }
        self.grid.build(&self.model)?;

        let s = &self.solver;
        check(s.k >= 1 && s.k <= g.nx * g.nq, || format!("solver.k = {} out of range", s.k))?;
        check(finite_pos(s.tol), || format!("invalid solver.tol {}", s.tol))?;
        check(s.max_iter >= 1, || "solver.max_iter must be positive".into())?;

        let f = &self.factorize;
        check(!f.states.is_empty(), || "factorize.states is empty".into())?;
        check(f.node_eps.is_finite() && f.node_eps > 0.0 && f.node_eps < 1.0, || {
            format!("factorize.node_eps = {} must lie in (0, 1)", f.node_eps)
        })?;
        let kmax = f.states.iter().max().unwrap() + 1;
        check(kmax <= g.nx * g.nq, || format!("state {} exceeds the grid dimension", kmax - 1))?;

        let r = &self.resonance;
        check(!r.lambdas.is_empty(), || "resonance.lambdas is empty".into())?;
        for &l in &r.lambdas {
            check(l.is_finite() && l >= 0.0, || format!("invalid resonance lambda {l}"))?;
        }
        check(finite_pos(r.bracket[0]) && r.bracket[1].is_finite() && r.bracket[0] < r.bracket[1], || {
            format!("invalid resonance bracket {:?}", r.bracket)
        })?;
        check(finite_pos(r.tol), || format!("invalid resonance.tol {}", r.tol))?;
        check(r.scan_points >= 3, || "resonance.scan_points must be at least 3".into())?;
        for &l in &r.lambdas {
            for &w in &r.bracket {
                self.grid.build(&self.model.with_coupling(l, w))?;
            }
        }

        let a = &self.approx;
        check(a.n >= 1, || "approx.n must be at least 1".into())?;
        check(a.sweep[0].is_finite() && a.sweep[0] >= 0.0 && a.sweep[1].is_finite() && a.sweep[0] <= a.sweep[1], || {
            format!("invalid approx.sweep {:?}", a.sweep)
        })?;
        check(a.sweep_points >= 2, || "approx.sweep_points must be at least 2".into())?;

        check(!self.figures.points.is_empty(), || "figures.points is empty".into())?;
        for &[l, w] in &self.figures.points {
            check(l.is_finite() && l >= 0.0 && finite_pos(w), || format!("invalid figure point ({l}, {w})"))?;
            self.grid.build(&self.model.with_coupling(l, w))?;
        }
        Ok(())
    }
}
