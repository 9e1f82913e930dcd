//! Built-in reference scenarios and the TOML scenario file format.
//!
//! The reference system has M = N = 20 with H = I: transition matrix with
//! 3/4 on the diagonal and −1/8 where mod(i−2j, 7) = 6, process-noise
//! diagonal (11 + mod(i−1, 10))/5 with 1 where mod(i−j, 6) = 0 off the
//! diagonal, unit measurement noise, and erasure probability 0.02·⌈n/10⌉.
//! Client 1 asks a count-range query on [−5, 0], client 2 a maximum query.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::dynamics::SystemModel;
use crate::error::{Error, Result};
use crate::queries::QueryKind;
use crate::query_process::ClientProcess;

/// A fully specified experiment: model, clients and run parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: SystemModel,
    /// Client templates in their episode-start states.
    pub clients: Vec<ClientProcess>,
    pub episode_len: usize,
    pub episodes: usize,
    pub seed: u64,
    /// Monte Carlo draws per query answer.
    pub estimate_samples: usize,
    /// Stationary covariance Σ_∞, the initial belief covariance.
    pub initial_psi: DMatrix<f64>,
}

impl Scenario {
    pub fn new(
        name: String,
        model: SystemModel,
        clients: Vec<ClientProcess>,
        episode_len: usize,
        episodes: usize,
        seed: u64,
        estimate_samples: usize,
    ) -> Result<Self> {
        if episode_len == 0 {
            return Err(Error::Config("episode length must be at least 1".into()));
        }
        if clients.is_empty() {
            return Err(Error::Config("at least one client is required".into()));
        }
        let initial_psi = model.stationary_covariance()?;
        Ok(Self {
            name,
            model,
            clients,
            episode_len,
            episodes,
            seed,
            estimate_samples,
            initial_psi,
        })
    }

    /// The same scenario with every erasure probability replaced.
    pub fn with_erasure_probability(&self, epsilon: f64) -> Result<Self> {
        let model = SystemModel::new(
            self.model.a().clone(),
            self.model.h().clone(),
            self.model.sigma_v().clone(),
            self.model.sigma_w().clone(),
            vec![epsilon; self.model.sensor_count()],
        )?;
        Scenario::new(
            self.name.clone(),
            model,
            self.clients.clone(),
            self.episode_len,
            self.episodes,
            self.seed,
            self.estimate_samples,
        )
    }

    /// The same scenario over a perfect channel.
    pub fn with_zero_erasure(&self) -> Result<Self> {
        self.with_erasure_probability(0.0)
    }

    /// The count-range query kind of the first count-range client, if any.
    pub fn count_range_kind(&self) -> Option<QueryKind> {
        self.clients
            .iter()
            .find(|c| matches!(c.kind, QueryKind::CountRange { .. }))
            .map(|c| c.kind.clone())
    }
}

const REFERENCE_DIM: usize = 20;

/// The reference 20-sensor model.
pub fn reference_model() -> Result<SystemModel> {
    let m = REFERENCE_DIM;
    let a = DMatrix::from_fn(m, m, |r, c| {
        let (i, j) = (r as i64 + 1, c as i64 + 1);
        if i == j {
            0.75
        } else if (i - 2 * j).rem_euclid(7) == 6 {
            -0.125
        } else {
            0.0
        }
    });
    let sigma_v = DMatrix::from_fn(m, m, |r, c| {
        let (i, j) = (r as i64 + 1, c as i64 + 1);
        if i == j {
            (11.0 + ((i - 1) % 10) as f64) / 5.0
        } else if (i - j).rem_euclid(6) == 0 {
            1.0
        } else {
            0.0
        }
    });
    let epsilon = (1..=m).map(|n| 0.02 * n.div_ceil(10) as f64).collect();
    SystemModel::new(
        a,
        DMatrix::identity(m, m),
        sigma_v,
        DMatrix::identity(m, m),
        epsilon,
    )
}

const COUNT_INTERVAL: (f64, f64) = (-5.0, 0.0);

/// Built-in scenario names: `periodic`, `memoryless`, `mixed`, `periodic4`.
pub fn build_scenario(name: &str) -> Result<Scenario> {
    let model = reference_model()?;
    let count_kind = QueryKind::CountRange {
        lo: COUNT_INTERVAL.0,
        hi: COUNT_INTERVAL.1,
    };
    let clients = match name {
        "periodic" => vec![
            ClientProcess::periodic(0, 6, 2, count_kind, 1.0)?,
            ClientProcess::periodic(1, 6, 0, QueryKind::Max, 1.0)?,
        ],
        "memoryless" => vec![
            ClientProcess::memoryless(0, 1.0 / 6.0, count_kind, 1.0)?,
            ClientProcess::memoryless(1, 1.0 / 6.0, QueryKind::Max, 1.0)?,
        ],
        "mixed" => vec![
            ClientProcess::periodic(0, 6, 2, count_kind, 1.0)?,
            ClientProcess::memoryless(1, 1.0 / 6.0, QueryKind::Max, 1.0)?,
        ],
        "periodic4" => vec![
            ClientProcess::periodic(0, 12, 3, count_kind, 1.0)?,
            ClientProcess::periodic(1, 12, 0, QueryKind::Max, 1.0)?,
            ClientProcess::periodic(2, 12, 6, QueryKind::State, 1.0)?,
            ClientProcess::periodic(3, 12, 9, QueryKind::Mean, 1.0)?,
        ],
        other => {
            return Err(Error::Config(format!(
                "unknown scenario '{other}'; valid names: periodic, memoryless, mixed, periodic4"
            )))
        }
    };
    Scenario::new(name.to_string(), model, clients, 100, 10, 1, 1000)
}

#[derive(Debug, Deserialize)]
struct ScenarioFile {
    model: ModelSection,
    clients: Vec<ClientSection>,
    #[serde(default)]
    run: RunSection,
}

#[derive(Debug, Deserialize)]
struct ModelSection {
    a: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
    sigma_v: Vec<Vec<f64>>,
    sigma_w: Vec<Vec<f64>>,
    epsilon: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct ClientSection {
    #[serde(flatten)]
    kind: QueryKind,
    #[serde(default = "default_alpha")]
    alpha: f64,
    process: String,
    period: Option<usize>,
    #[serde(default)]
    phase: usize,
    p: Option<f64>,
}

fn default_alpha() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(default)]
struct RunSection {
    episode_len: usize,
    episodes: usize,
    seed: u64,
    estimate_samples: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            episode_len: 100,
            episodes: 10,
            seed: 1,
            estimate_samples: 1000,
        }
    }
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    if r == 0 {
        return Err(Error::Config(format!("{what}: empty matrix")));
    }
    let c = rows[0].len();
    if c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Config(format!("{what}: ragged or empty rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

/// Load a scenario from a TOML file with `[model]`, `[[clients]]` and
/// optional `[run]` sections.
pub fn load_scenario_file(path: &Path) -> Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let parsed: ScenarioFile =
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let model = SystemModel::new(
        matrix_from_rows(&parsed.model.a, "model.a")?,
        matrix_from_rows(&parsed.model.h, "model.h")?,
        matrix_from_rows(&parsed.model.sigma_v, "model.sigma_v")?,
        matrix_from_rows(&parsed.model.sigma_w, "model.sigma_w")?,
        parsed.model.epsilon,
    )?;
    let mut clients = Vec::with_capacity(parsed.clients.len());
    for (i, section) in parsed.clients.into_iter().enumerate() {
        let client = match section.process.as_str() {
            "periodic" => {
                let period = section.period.ok_or_else(|| {
                    Error::Config(format!("client {i}: periodic process needs 'period'"))
                })?;
                ClientProcess::periodic(i, period, section.phase, section.kind, section.alpha)?
            }
            "memoryless" => {
                let p = section.p.ok_or_else(|| {
                    Error::Config(format!("client {i}: memoryless process needs 'p'"))
                })?;
                ClientProcess::memoryless(i, p, section.kind, section.alpha)?
            }
            other => {
                return Err(Error::Config(format!(
                    "client {i}: unknown process '{other}' (periodic or memoryless)"
                )))
            }
        };
        clients.push(client);
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Scenario::new(
        name,
        model,
        clients,
        parsed.run.episode_len,
        parsed.run.episodes,
        parsed.run.seed,
        parsed.run.estimate_samples,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_matrices_match_the_printed_formulas() {
        let model = reference_model().unwrap();
        let a = model.a();
        assert_relative_eq!(a[(0, 0)], 0.75);
        // i = 1, j = 8 (1-based): 1 − 16 = −15, mod 7 = 6
        assert_relative_eq!(a[(0, 7)], -0.125);
        assert_relative_eq!(a[(0, 1)], 0.0);
        let count_offdiag = (0..20)
            .flat_map(|i| (0..20).map(move |j| (i, j)))
            .filter(|(i, j)| i != j && a[(*i, *j)] != 0.0)
            .count();
        assert!(count_offdiag > 0);
        for i in 0..20 {
            for j in 0..20 {
                if i != j && a[(i, j)] != 0.0 {
                    assert_relative_eq!(a[(i, j)], -0.125);
                }
            }
        }

        let sv = model.sigma_v();
        assert_relative_eq!(sv[(0, 0)], 2.2); // i = 1: 11/5
        assert_relative_eq!(sv[(9, 9)], 4.0); // i = 10: 20/5
        assert_relative_eq!(sv[(10, 10)], 2.2); // i = 11 wraps
        assert_relative_eq!(sv[(0, 6)], 1.0); // |i − j| = 6
        assert_relative_eq!(sv[(6, 0)], 1.0);
        assert_relative_eq!(sv[(0, 3)], 0.0);

        let eps = model.epsilon();
        assert!(eps[..10].iter().all(|e| (*e - 0.02).abs() < 1e-15));
        assert!(eps[10..].iter().all(|e| (*e - 0.04).abs() < 1e-15));

        assert_eq!(model.sigma_w(), &DMatrix::identity(20, 20));
        assert_eq!(model.h(), &DMatrix::identity(20, 20));
    }

    #[test]
    fn builtin_scenarios_construct() {
        for name in ["periodic", "memoryless", "mixed", "periodic4"] {
            let s = build_scenario(name).unwrap();
            assert_eq!(s.model.state_dim(), 20);
            assert!(s.initial_psi.trace() > 0.0);
        }
        assert!(build_scenario("bogus").is_err());
    }

    #[test]
    fn scenario_file_round_trip() {
        let text = r#"
[model]
a = [[0.9, 0.0], [0.0, 0.8]]
h = [[1.0, 0.0], [0.0, 1.0]]
sigma_v = [[1.0, 0.0], [0.0, 1.0]]
sigma_w = [[0.5, 0.0], [0.0, 0.5]]
epsilon = [0.1, 0.2]

[[clients]]
kind = "count_range"
lo = -1.0
hi = 1.0
process = "periodic"
period = 4
phase = 1

[[clients]]
kind = "max"
alpha = 2.0
process = "memoryless"
p = 0.25

[run]
episode_len = 50
episodes = 3
seed = 9
estimate_samples = 200
"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scenario.toml");
        fs::write(&path, text).unwrap();
        let scenario = load_scenario_file(&path).unwrap();
        assert_eq!(scenario.model.state_dim(), 2);
        assert_eq!(scenario.clients.len(), 2);
        assert_eq!(
            scenario.clients[0].kind,
            QueryKind::CountRange { lo: -1.0, hi: 1.0 }
        );
        assert_eq!(scenario.clients[1].alpha, 2.0);
        assert_eq!(scenario.episode_len, 50);
        assert_eq!(scenario.episodes, 3);
        assert_eq!(scenario.seed, 9);
        assert_eq!(scenario.estimate_samples, 200);
    }

    #[test]
    fn scenario_file_rejects_bad_process() {
        let text = r#"
[model]
a = [[0.9]]
h = [[1.0]]
sigma_v = [[1.0]]
sigma_w = [[0.5]]
epsilon = [0.1]

[[clients]]
kind = "max"
process = "sometimes"
"#;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        fs::write(&path, text).unwrap();
        assert!(load_scenario_file(&path).is_err());
    }
}
