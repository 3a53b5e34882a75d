use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{MkcError, Result};
use crate::io::KeyValues;
use crate::solvers::Method;
use crate::synth::ToyName;

/// A completion method as selected in a benchmark: one of the MKC solvers
/// or a nearest-neighbour baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EvalMethod {
    Mkc(Method),
    Knn,
    Wknn,
}

impl EvalMethod {
    pub const ALL: [EvalMethod; 6] = [
        EvalMethod::Mkc(Method::Sdp),
        EvalMethod::Mkc(Method::EmbdHt),
        EvalMethod::Mkc(Method::App),
        EvalMethod::Mkc(Method::EmbdHm),
        EvalMethod::Knn,
        EvalMethod::Wknn,
    ];

    /// Table label, e.g. `MKC_embd(ht)` or `kNN`.
    pub fn label(self) -> &'static str {
        match self {
            EvalMethod::Mkc(m) => m.label(),
            EvalMethod::Knn => "kNN",
            EvalMethod::Wknn => "wkNN",
        }
    }

    /// Command-line name, e.g. `embd-ht` or `knn`.
    pub fn name(self) -> String {
        match self {
            EvalMethod::Mkc(m) => m.to_string(),
            EvalMethod::Knn => "knn".into(),
            EvalMethod::Wknn => "wknn".into(),
        }
    }

    pub fn is_mkc(self) -> bool {
        matches!(self, EvalMethod::Mkc(_))
    }
}

impl fmt::Display for EvalMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for EvalMethod {
    type Err = MkcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(EvalMethod::Knn),
            "wknn" => Ok(EvalMethod::Wknn),
            other => other.parse::<Method>().map(EvalMethod::Mkc),
        }
    }
}

/// One point of a method's hyperparameter grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hyper {
    Sdp { c: f64 },
    Embd { c1: f64, c2: f64 },
    Shared { c2: f64 },
    Neighbours { k: usize },
}

impl fmt::Display for Hyper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyper::Sdp { c } => write!(f, "c={c}"),
            Hyper::Embd { c1, c2 } => write!(f, "c1={c1} c2={c2}"),
            Hyper::Shared { c2 } => write!(f, "c2={c2}"),
            Hyper::Neighbours { k } => write!(f, "k={k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub c: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub k: Vec<usize>,
}

impl Default for Grid {
    fn default() -> Self {
        let decades: Vec<f64> = (-3..=3).map(|e| 10f64.powi(e)).collect();
        Self {
            c: decades.clone(),
            c1: decades.clone(),
            c2: decades,
            k: vec![1, 2, 3, 5, 7, 10],
        }
    }
}

impl Grid {
    /// Grid cells of `method`, in a fixed order (`c1` outer, `c2` inner).
    pub fn cells(&self, method: EvalMethod) -> Vec<Hyper> {
        match method {
            EvalMethod::Mkc(Method::Sdp) => self.c.iter().map(|&c| Hyper::Sdp { c }).collect(),
            EvalMethod::Mkc(Method::EmbdHt) | EvalMethod::Mkc(Method::App) => self
                .c1
                .iter()
                .flat_map(|&c1| self.c2.iter().map(move |&c2| Hyper::Embd { c1, c2 }))
                .collect(),
            EvalMethod::Mkc(Method::EmbdHm) => self.c2.iter().map(|&c2| Hyper::Shared { c2 }).collect(),
            EvalMethod::Knn | EvalMethod::Wknn => self.k.iter().map(|&k| Hyper::Neighbours { k }).collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        let reals = [("grid.c", &self.c), ("grid.c1", &self.c1), ("grid.c2", &self.c2)];
        for (name, values) in reals {
            if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(MkcError::Config(format!("{name} must be a non-empty list of positive reals")));
            }
        }
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(MkcError::Config("grid.k must be a non-empty list of positive integers".into()));
        }
        Ok(())
    }
}

/// Everything a benchmark run needs; see [`crate::eval::run_experiment`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub recipes: Vec<ToyName>,
    pub n: usize,
    pub basis_count: usize,
    pub missing_views: usize,
    pub affected_fraction: f64,
    pub anchor_fraction: f64,
    pub tuning_fraction: f64,
    pub repeats: usize,
    pub seed: u64,
    pub methods: Vec<EvalMethod>,
    pub grid: Grid,
    pub max_iters: usize,
    pub tol: f64,
    pub clamp_known: bool,
    pub jobs: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        Self {
            recipes: ToyName::ALL.to_vec(),
            n: 100,
            basis_count: 10,
            missing_views: 1,
            affected_fraction: 0.5,
            anchor_fraction: 0.1,
            tuning_fraction: 0.4,
            repeats: 5,
            seed: 0,
            methods: EvalMethod::ALL.to_vec(),
            grid: Grid::default(),
            max_iters: 500,
            tol: 1e-6,
            clamp_known: true,
            jobs: 1,
        }
    }
}

const KEYS: [&str; 18] = [
    "recipes",
    "n",
    "basis_count",
    "missing_views",
    "affected_fraction",
    "anchor_fraction",
    "tuning_fraction",
    "repeats",
    "seed",
    "methods",
    "grid.c",
    "grid.c1",
    "grid.c2",
    "grid.k",
    "max_iters",
    "tol",
    "clamp_known",
    "jobs",
];

impl ExperimentPlan {
    /// Reads a `key=value` plan; absent keys keep their defaults.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        if let Some(unknown) = kv.keys().find(|k| !KEYS.contains(k)) {
            return Err(MkcError::Parse {
                path: kv.path().to_path_buf(),
                line: 0,
                msg: format!("unknown plan key `{unknown}`"),
            });
        }
        let mut plan = Self::default();
        if let Some(v) = kv.parse_list("recipes")? {
            plan.recipes = v;
        }
        if let Some(v) = kv.parse_value("n")? {
            plan.n = v;
        }
        if let Some(v) = kv.parse_value("basis_count")? {
            plan.basis_count = v;
        }
        if let Some(v) = kv.parse_value("missing_views")? {
            plan.missing_views = v;
        }
        if let Some(v) = kv.parse_value("affected_fraction")? {
            plan.affected_fraction = v;
        }
        if let Some(v) = kv.parse_value("anchor_fraction")? {
            plan.anchor_fraction = v;
        }
        if let Some(v) = kv.parse_value("tuning_fraction")? {
            plan.tuning_fraction = v;
        }
        if let Some(v) = kv.parse_value("repeats")? {
            plan.repeats = v;
        }
        if let Some(v) = kv.parse_value("seed")? {
            plan.seed = v;
        }
        if let Some(v) = kv.parse_list("methods")? {
            plan.methods = v;
        }
        if let Some(v) = kv.parse_list("grid.c")? {
            plan.grid.c = v;
        }
        if let Some(v) = kv.parse_list("grid.c1")? {
            plan.grid.c1 = v;
        }
        if let Some(v) = kv.parse_list("grid.c2")? {
            plan.grid.c2 = v;
        }
        if let Some(v) = kv.parse_list("grid.k")? {
            plan.grid.k = v;
        }
        if let Some(v) = kv.parse_value("max_iters")? {
            plan.max_iters = v;
        }
        if let Some(v) = kv.parse_value("tol")? {
            plan.tol = v;
        }
        if let Some(v) = kv.parse_value("clamp_known")? {
            plan.clamp_known = v;
        }
        if let Some(v) = kv.parse_value("jobs")? {
            plan.jobs = v;
        }
        plan.validate()?;
        Ok(plan)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_key_values(&KeyValues::parse(text, Path::new("<plan>"))?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_key_values(&KeyValues::read(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let fraction = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(MkcError::Config(format!("{name} must be in (0, 1), got {v}")))
            }
        };
        fraction("tuning_fraction", self.tuning_fraction)?;
        if !(0.0..=1.0).contains(&self.affected_fraction) {
            return Err(MkcError::Config(format!(
                "affected_fraction must be in [0, 1], got {}",
                self.affected_fraction
            )));
        }
        if self.recipes.is_empty() || self.methods.is_empty() {
            return Err(MkcError::Config("plan needs at least one recipe and one method".into()));
        }
        if self.repeats == 0 || self.jobs == 0 || self.max_iters == 0 {
            return Err(MkcError::Config("repeats, jobs and max_iters must be positive".into()));
        }
        if !(self.tol > 0.0) {
            return Err(MkcError::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if self.basis_count == 0 || self.basis_count >= self.n {
            return Err(MkcError::Config(format!(
                "basis_count must be in [1, n), got {} with n = {}",
                self.basis_count, self.n
            )));
        }
        self.grid.validate()
    }
}
