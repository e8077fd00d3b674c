use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use freeprob_core::curvature::{conjugates_from_potential, PotentialSpec};
use freeprob_core::exact::QMatrix;
use freeprob_core::ncpoly::parse_poly;
use freeprob_core::rational;
use freeprob_core::rigidity::RigidityTolerances;
use freeprob_core::state::{CovarianceModel, SemicircularState};
use freeprob_core::{NcPoly, Rational};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    LeibnizSuite,
    TraceCrosscheck,
    Spectrum,
    Poincare,
    Cd,
    Bl,
    Rigidity,
    JacobianSymmetry,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Task::LeibnizSuite => "leibniz-suite",
            Task::TraceCrosscheck => "trace-crosscheck",
            Task::Spectrum => "spectrum",
            Task::Poincare => "poincare",
            Task::Cd => "cd",
            Task::Bl => "bl",
            Task::Rigidity => "rigidity",
            Task::JacobianSymmetry => "jacobian-symmetry",
        };
        f.write_str(s)
    }
}

/// Matrix entry: integer, decimal, or rational text such as `"3/2"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Entry {
    fn to_rational(&self) -> Result<Rational> {
        match self {
            Entry::Int(v) => Ok(rational::int(*v)),
            Entry::Float(x) => rational::from_f64(*x).ok_or_else(|| anyhow!("non-finite matrix entry {x}")),
            Entry::Text(s) => rational::parse(s).ok_or_else(|| anyhow!("bad rational '{s}'")),
        }
    }
}

/// Either the covariance `C` or the quadratic form `A`, with `C = A^{-1}`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<Entry>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_form: Option<Vec<Vec<Entry>>>,
}

fn matrix(rows: &[Vec<Entry>]) -> Result<QMatrix> {
    let rows = rows
        .iter()
        .map(|r| r.iter().map(Entry::to_rational).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    Ok(QMatrix::from_rows(rows)?)
}

impl ModelSpec {
    pub fn build(&self, n: usize) -> Result<CovarianceModel> {
        let model = match (&self.covariance, &self.quadratic_form) {
            (Some(_), Some(_)) => bail!("model: give either covariance or quadratic_form, not both"),
            (Some(c), None) => CovarianceModel::new(matrix(c).context("model.covariance")?)?,
            (None, Some(a)) => CovarianceModel::from_precision(&matrix(a).context("model.quadratic_form")?)?,
            (None, None) => CovarianceModel::standard(n),
        };
        if model.n() != n {
            bail!("model is {}x{} but n = {n}", model.n(), model.n());
        }
        Ok(model)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub spectral: f64,
    pub affine: f64,
    pub orthogonality: f64,
    pub moments: f64,
    pub max_moment: usize,
    pub freeness_degree: usize,
    pub stein_degree: usize,
    pub cd_degree: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        let r = RigidityTolerances::default();
        Tolerances {
            spectral: r.eigen,
            affine: r.affine,
            orthogonality: r.orthogonality,
            moments: r.moments,
            max_moment: r.max_moment,
            freeness_degree: r.freeness_degree,
            stein_degree: r.stein_degree,
            cd_degree: r.cd_degree,
        }
    }
}

impl Tolerances {
    pub fn rigidity(&self) -> RigidityTolerances {
        RigidityTolerances {
            eigen: self.spectral,
            affine: self.affine,
            orthogonality: self.orthogonality,
            moments: self.moments,
            max_moment: self.max_moment,
            freeness_degree: self.freeness_degree,
            stein_degree: self.stein_degree,
            cd_degree: self.cd_degree,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSpec {
    pub size: usize,
    pub trials: usize,
    pub c0: f64,
    pub max_failures: usize,
}

impl Default for McSpec {
    fn default() -> Self {
        McSpec { size: 300, trials: 50, c0: 1.0, max_failures: 1 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteSpec {
    pub cases: usize,
    pub max_degree: usize,
}

impl Default for SuiteSpec {
    fn default() -> Self {
        SuiteSpec { cases: 200, max_degree: 5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub n: usize,
    #[serde(alias = "d")]
    pub degree: usize,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
    /// Test function for the Brascamp-Lieb task; defaults to `X1^2 + ... + Xn^2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observable: Option<String>,
    /// Curvature constant `c`; defaults to the smallest eigenvalue of `A`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub curvature: Option<Entry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_r: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub mc: McSpec,
    #[serde(default)]
    pub suite: SuiteSpec,
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Scenario {
    pub fn adhoc(n: usize, degree: usize, task: Task) -> Self {
        Scenario {
            n,
            degree,
            tasks: vec![task],
            model: ModelSpec::default(),
            potential: None,
            observable: None,
            curvature: None,
            expected_r: None,
            seed: 0,
            tolerances: Tolerances::default(),
            mc: McSpec::default(),
            suite: SuiteSpec::default(),
            out: None,
        }
    }

    /// TOML unless the extension is `.json`.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::from_str(&text, is_json).with_context(|| format!("in {}", path.display()))
    }

    pub fn from_str(text: &str, json: bool) -> Result<Self> {
        if json {
            serde_json::from_str(text).map_err(|e| anyhow!("{e}"))
        } else {
            toml::from_str(text).map_err(|e| anyhow!("{e}"))
        }
    }

    pub fn resolve(&self) -> Result<Resolved> {
        if self.n == 0 {
            bail!("n must be at least 1");
        }
        if self.degree == 0 {
            bail!("degree must be at least 1");
        }
        if self.tasks.is_empty() {
            bail!("tasks must be non-empty");
        }
        if self.tolerances.spectral.is_nan() || self.tolerances.spectral <= 0.0 {
            bail!("tolerances.spectral must be positive");
        }
        let model = self.model.build(self.n)?;
        let state = SemicircularState::new(model);
        let precision = state.model().precision();
        let (potential, xi) = match &self.potential {
            Some(text) => {
                let p = parse_poly(text, Some(self.n)).map_err(|e| anyhow!("potential: {e}"))?;
                let spec = PotentialSpec::new(p)?;
                let xi = conjugates_from_potential(&spec);
                (spec, xi)
            }
            None => {
                let spec = PotentialSpec::quadratic(&precision)?;
                (spec, state.model().linear_conjugates())
            }
        };
        let observable = match &self.observable {
            Some(text) => parse_poly(text, Some(self.n)).map_err(|e| anyhow!("observable: {e}"))?,
            None => {
                let mut y = NcPoly::zero(self.n);
                for i in 0..self.n {
                    let x = NcPoly::generator(self.n, i)?;
                    y = &y + &(&x * &x);
                }
                y
            }
        };
        let curvature = match &self.curvature {
            Some(e) => {
                let c = rational::to_f64(&e.to_rational().context("curvature")?);
                if c.is_nan() || c <= 0.0 {
                    bail!("curvature must be positive");
                }
                Some(c)
            }
            None => None,
        };
        Ok(Resolved { state, precision, potential, xi, observable, curvature })
    }
}

pub struct Resolved {
    pub state: SemicircularState,
    pub precision: QMatrix,
    pub potential: PotentialSpec,
    pub xi: Vec<NcPoly>,
    pub observable: NcPoly,
    pub curvature: Option<f64>,
}

/// Reads a standalone model file: a `ModelSpec` table, TOML or JSON.
pub fn model_from_path(path: &Path) -> Result<ModelSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let spec = if is_json {
        serde_json::from_str(&text).map_err(|e| anyhow!("{e}"))
    } else {
        toml::from_str(&text).map_err(|e| anyhow!("{e}"))
    };
    spec.with_context(|| format!("in {}", path.display()))
}

pub fn model_dim(spec: &ModelSpec) -> Option<usize> {
    spec.covariance.as_ref().or(spec.quadratic_form.as_ref()).map(|m| m.len())
}
