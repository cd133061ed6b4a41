//! JSON scenario configuration. Every field has a default so that the summary
//! can echo the fully resolved document.

use serde::{Deserialize, Serialize};

use phhs::models::default_bump;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    /// `H = P²/2 − 1/(8Q²)`.
    Central,
    Standard {
        #[serde(default = "one")]
        n: usize,
        hamiltonian: String,
    },
    Proper {
        f: String,
        h: String,
        #[serde(default = "default_proper_h")]
        h_r: String,
    },
    /// Almost complex structure only; usable with `integrability-scan`.
    Rotation { phi: String },
    Deformation {
        epsilon: f64,
        #[serde(default)]
        f: Option<String>,
        #[serde(default = "one")]
        n: usize,
        /// Use a constant Hamiltonian instead of `H = z_{2n}`.
        #[serde(default)]
        constant_hamiltonian: Option<f64>,
    },
}

fn one() -> usize {
    1
}

fn default_proper_h() -> String {
    "-y1".into()
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig::Central
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FlowSettings {
    pub dt: f64,
    pub max_step_count: usize,
    pub richardson: bool,
}

impl Default for FlowSettings {
    fn default() -> Self {
        FlowSettings { dt: 1e-3, max_step_count: 1_000_000, richardson: false }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub t_range: [f64; 2],
    pub s_range: [f64; 2],
    pub nt: usize,
    pub ns: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { t_range: [0.0, 1.0], s_range: [0.0, 1.0], nt: 17, ns: 17 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub center: [f64; 2],
    pub turns: i32,
    pub segments: usize,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig { center: [-1.0, 0.0], turns: 1, segments: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ActionSettings {
    pub displacement: f64,
    pub delta: f64,
    /// Compare only real parts of the gradient; defaults to true for models without a holomorphic Hamiltonian.
    pub real_part: Option<bool>,
    pub max_ratio: f64,
}

impl Default for ActionSettings {
    fn default() -> Self {
        ActionSettings { displacement: 0.05, delta: 1e-5, real_part: None, max_ratio: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Defaults to the origin of the model's coordinates.
    pub center: Option<Vec<f64>>,
    pub half: f64,
    pub n: usize,
    pub threshold: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { center: None, half: 0.5, n: 5, threshold: 1e-3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DeformConfig {
    pub epsilons: Vec<f64>,
    pub f: Option<String>,
    pub n: usize,
    /// Points at which the Nijenhuis rank is reported.
    pub probes: Vec<Vec<f64>>,
}

impl Default for DeformConfig {
    fn default() -> Self {
        DeformConfig {
            epsilons: vec![0.0, 0.25, 0.5],
            f: None,
            n: 1,
            probes: vec![vec![0.0; 4], vec![0.3, 0.1, 0.2, -0.1], vec![1.2, 0.0, 0.0, 0.0]],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MorseConfig {
    /// Conformal factor in `x1, y1`.
    pub v: String,
    pub period: f64,
    pub radii: Vec<f64>,
    pub energies: Vec<f64>,
}

impl Default for MorseConfig {
    fn default() -> Self {
        MorseConfig {
            v: "1 + x1^2".into(),
            period: std::f64::consts::PI,
            radii: vec![0.2, 0.5, 0.8],
            energies: vec![0.05, 0.1, 0.2],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct HoloMetricConfig {
    /// `h_ij` in `z1..zn`.
    pub components: Vec<Vec<String>>,
    pub half: f64,
    pub n: usize,
    pub fd_step: f64,
}

impl Default for HoloMetricConfig {
    fn default() -> Self {
        HoloMetricConfig {
            components: vec![vec!["1".into(), "0".into()], vec!["0".into(), "exp(z1)".into()]],
            half: 0.5,
            n: 3,
            fd_step: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ConnectionConfig {
    /// `g_ij` in `x1..xn`.
    pub metric: Vec<Vec<String>>,
    /// Points `(q, p)` of the cotangent bundle.
    pub points: Vec<Vec<f64>>,
    pub threshold: f64,
    pub holomorphic: Option<HoloMetricConfig>,
}

impl Default for ConnectionConfig {
    fn default() -> Self {
        ConnectionConfig {
            metric: vec![vec!["1".into(), "0".into()], vec!["0".into(), "1 + x1^2".into()]],
            points: vec![vec![0.5, 0.2, -0.7, 0.1]],
            threshold: 1e-3,
            holomorphic: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: ModelConfig,
    pub flow: FlowSettings,
    /// Start point; defaults to the model's base point.
    pub x0: Option<Vec<f64>>,
    /// Complex time of `x0`.
    pub z0: [f64; 2],
    pub grid: GridConfig,
    pub words: Vec<Vec<[f64; 2]>>,
    pub path: PathConfig,
    pub action: ActionSettings,
    pub scan: ScanConfig,
    pub deform: DeformConfig,
    pub morse: MorseConfig,
    pub connection: ConnectionConfig,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn check(ok: bool, msg: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError(msg.into()))
    }
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fill in defaults that depend on other fields.
    fn resolve(&mut self) {
        if let ModelConfig::Deformation { f, n, .. } = &mut self.model {
            f.get_or_insert_with(|| default_bump(*n));
        }
        let n = self.deform.n;
        self.deform.f.get_or_insert_with(|| default_bump(n));
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        check(g.nt >= 2 && g.ns >= 2, "grid: nt and ns must be at least 2")?;
        check(
            g.t_range.iter().chain(&g.s_range).all(|v| v.is_finite()) && g.t_range[1] > g.t_range[0] && g.s_range[1] > g.s_range[0],
            "grid: ranges must be finite and non-empty",
        )?;
        check(self.flow.dt > 0.0 && self.flow.dt.is_finite() && self.flow.max_step_count > 0, "flow: dt and max_step_count must be positive")?;
        check(self.path.segments >= 3 && self.path.turns != 0, "path: need at least 3 segments and a nonzero turn count")?;
        check(self.action.displacement > 0.0 && self.action.delta > 0.0 && self.action.max_ratio > 0.0, "action: parameters must be positive")?;
        check(self.scan.n >= 1 && self.scan.half >= 0.0 && self.scan.threshold > 0.0, "scan: need n ≥ 1, half ≥ 0, threshold > 0")?;
        check(!self.deform.epsilons.is_empty() && self.deform.n >= 1, "deform: need at least one epsilon and n ≥ 1")?;
        check(self.morse.period > 0.0 && self.morse.radii.iter().all(|r| *r > 0.0), "morse: period and radii must be positive")?;
        check(self.morse.energies.iter().all(|e| *e > 0.0), "morse: energies must be positive")?;
        let c = &self.connection;
        let n = c.metric.len();
        check(n > 0 && c.metric.iter().all(|r| r.len() == n), "connection: metric must be a square table")?;
        check(c.points.iter().all(|p| p.len() == 2 * n), "connection: points need 2n coordinates")?;
        check(c.threshold > 0.0, "connection: threshold must be positive")?;
        if let Some(h) = &c.holomorphic {
            check(h.n >= 1 && h.fd_step > 0.0, "connection.holomorphic: need n ≥ 1 and a positive fd_step")?;
        }
        Ok(())
    }
}
