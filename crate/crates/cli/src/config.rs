//! Configuration documents: TOML key/value files, strictly validated
//! (unknown keys are errors) with all defaults filled in before echoing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use qlattice_core::lattice::{
    nearest_neighbor_ring, BosonLatticeState, GdstParams, MdnlsParams, Ordering,
    SpinLatticeState, XxzParams,
};

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gdst,
    Mdnls,
    Xxz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderingOpt {
    #[serde(rename = "no")]
    Normal,
    #[serde(rename = "so")]
    Symmetric,
}

impl From<OrderingOpt> for Ordering {
    fn from(o: OrderingOpt) -> Ordering {
        match o {
            OrderingOpt::Normal => Ordering::Normal,
            OrderingOpt::Symmetric => Ordering::Symmetric,
        }
    }
}

impl OrderingOpt {
    pub fn dir_name(self) -> &'static str {
        match self {
            OrderingOpt::Normal => "no",
            OrderingOpt::Symmetric => "so",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    /// Operator ordering; defaults to normal ordering. The `--ordering`
    /// flag overrides it (and `both` runs the two variants side by side).
    #[serde(default)]
    pub ordering: Option<OrderingOpt>,
    #[serde(default)]
    pub gdst: Option<GdstSection>,
    #[serde(default)]
    pub mdnls: Option<MdnlsSection>,
    #[serde(default)]
    pub xxz: Option<XxzSection>,
    #[serde(default)]
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub observables: ObservablesSection,
    #[serde(default)]
    pub output: Option<OutputSection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub exact: Option<ExactSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GdstSection {
    #[serde(default)]
    pub omega0: f64,
    pub gamma: f64,
    pub m: u32,
    pub f: usize,
    /// Nearest-neighbor ring coupling strength.
    #[serde(default = "one")]
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdnlsSection {
    pub v: f64,
    pub x: f64,
    pub f: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XxzSection {
    pub v: f64,
    pub g: f64,
    pub f: usize,
    #[serde(default)]
    pub include_linear_term: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub single_site: Option<SingleSite>,
    /// Explicit per-site complex amplitudes as [re, im] pairs.
    #[serde(default)]
    pub amplitudes: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleSite {
    pub j0: usize,
    pub n_total: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    #[serde(default)]
    pub t0: f64,
    #[serde(default = "ten")]
    pub t1: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub abs_tol: Option<f64>,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { t0: 0.0, t1: 10.0, samples: default_samples(), rel_tol: None, abs_tol: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservablesSection {
    #[serde(default)]
    pub imbalance: bool,
    /// Sites whose final-state Q-function fields to emit (empty = all).
    #[serde(default)]
    pub qfunc_sites: Vec<usize>,
    /// Sites whose final-state number distributions to emit (empty = all).
    #[serde(default)]
    pub poisson_sites: Vec<usize>,
    #[serde(default = "default_poisson_n_max")]
    pub poisson_n_max: usize,
    /// Emit Jordan-Wigner fermion observables along the trajectory (xxz only).
    #[serde(default)]
    pub fermion: bool,
}

impl Default for ObservablesSection {
    fn default() -> Self {
        Self {
            imbalance: false,
            qfunc_sites: Vec::new(),
            poisson_sites: Vec::new(),
            poisson_n_max: default_poisson_n_max(),
            fermion: false,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub n_values: Vec<f64>,
    #[serde(default = "one")]
    pub lambda: f64,
    /// Absolute bisection bracket-width target; default 0.5% of the
    /// analytic threshold per row.
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "one_usize")]
    pub j0: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactSection {
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default = "default_tail_bound")]
    pub tail_bound: f64,
}

impl Default for ExactSection {
    fn default() -> Self {
        Self { n_max: default_n_max(), tail_bound: default_tail_bound() }
    }
}

fn one() -> f64 {
    1.0
}
fn ten() -> f64 {
    10.0
}
fn one_usize() -> usize {
    1
}
fn default_samples() -> usize {
    200
}
fn default_poisson_n_max() -> usize {
    30
}
fn default_n_max() -> u32 {
    30
}
fn default_tail_bound() -> f64 {
    1e-10
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn site_count(&self) -> Result<usize, ConfigError> {
        match self.model {
            ModelKind::Gdst => Ok(self.gdst_section()?.f),
            ModelKind::Mdnls => Ok(self.mdnls_section()?.f),
            ModelKind::Xxz => Ok(self.xxz_section()?.f),
        }
    }

    pub fn gdst_section(&self) -> Result<&GdstSection, ConfigError> {
        self.gdst.as_ref().ok_or_else(|| ConfigError("missing [gdst] section".into()))
    }

    pub fn mdnls_section(&self) -> Result<&MdnlsSection, ConfigError> {
        self.mdnls.as_ref().ok_or_else(|| ConfigError("missing [mdnls] section".into()))
    }

    pub fn xxz_section(&self) -> Result<&XxzSection, ConfigError> {
        self.xxz.as_ref().ok_or_else(|| ConfigError("missing [xxz] section".into()))
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let f = self.site_count()?;
        if f < 2 {
            return err("field f: at least 2 lattice sites are required");
        }
        if let Some(g) = &self.gdst {
            if g.m < 2 {
                return err(format!("field m: nonlinearity order {} is < 2", g.m));
            }
            if !g.gamma.is_finite() || !g.omega0.is_finite() || !g.lambda.is_finite() {
                return err("non-finite gdst parameter");
            }
        }
        if let Some(init) = &self.initial {
            match (&init.single_site, &init.amplitudes) {
                (Some(_), Some(_)) => {
                    return err("[initial] must give exactly one of single_site or amplitudes")
                }
                (None, None) => {
                    return err("[initial] must give one of single_site or amplitudes")
                }
                (Some(s), None) => {
                    if s.j0 < 1 || s.j0 > f {
                        return err(format!(
                            "field j0: site {} out of range for f = {f}",
                            s.j0
                        ));
                    }
                    if !(s.n_total > 0.0) {
                        return err("field n_total: must be > 0");
                    }
                    if self.model == ModelKind::Xxz {
                        return err(
                            "xxz initial conditions need explicit amplitudes (spin coordinates)",
                        );
                    }
                }
                (None, Some(a)) => {
                    if a.len() != f {
                        return err(format!(
                            "field amplitudes: {} entries given for f = {f} sites",
                            a.len()
                        ));
                    }
                    if a.iter().flatten().any(|x| !x.is_finite()) {
                        return err("field amplitudes: non-finite entry");
                    }
                }
            }
        }
        for site in self
            .observables
            .qfunc_sites
            .iter()
            .chain(&self.observables.poisson_sites)
        {
            if *site < 1 || *site > f {
                return err(format!("observable site {site} out of range for f = {f}"));
            }
        }
        if self.observables.imbalance && f != 2 {
            return err("population imbalance is only defined for a dimer (f = 2)");
        }
        if self.observables.fermion && self.model != ModelKind::Xxz {
            return err("fermion observables require the xxz model");
        }
        if self.integrator.samples == 0 {
            return err("field samples: must be >= 1");
        }
        if let Some(rt) = self.integrator.rel_tol {
            if !(rt > 0.0) {
                return err("field rel_tol: must be > 0");
            }
        }
        if let Some(at) = self.integrator.abs_tol {
            if !(at > 0.0) {
                return err("field abs_tol: must be > 0");
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.n_values.iter().any(|n| !(*n > 0.0)) {
                return err("field n_values: every total excitation number must be > 0");
            }
            if !(sweep.lambda != 0.0) || !sweep.lambda.is_finite() {
                return err("field lambda: sweep coupling must be finite and nonzero");
            }
        }
        if let Some(exact) = &self.exact {
            if !(exact.tail_bound > 0.0) {
                return err("field tail_bound: must be > 0");
            }
        }
        Ok(())
    }

    pub fn gdst_params(&self, ordering: Ordering) -> Result<GdstParams, ConfigError> {
        let g = self.gdst_section()?;
        let coupling = nearest_neighbor_ring(g.f, g.lambda)
            .map_err(|e| ConfigError(e.to_string()))?;
        GdstParams::new(g.omega0, g.gamma, g.m, coupling, ordering)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn mdnls_params(&self, ordering: Ordering) -> Result<MdnlsParams, ConfigError> {
        let m = self.mdnls_section()?;
        MdnlsParams::new(m.v, m.x, m.f, ordering).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn xxz_params(&self) -> Result<XxzParams, ConfigError> {
        let x = self.xxz_section()?;
        XxzParams::new(x.v, x.g, x.f, x.include_linear_term)
            .map_err(|e| ConfigError(e.to_string()))
    }

    pub fn initial_amplitudes(&self) -> Result<Vec<Complex64>, ConfigError> {
        let f = self.site_count()?;
        let init = self
            .initial
            .as_ref()
            .ok_or_else(|| ConfigError("missing [initial] section".into()))?;
        if let Some(s) = &init.single_site {
            let state = qlattice_core::lattice::single_site_excitation(f, s.j0, s.n_total)
                .map_err(|e| ConfigError(e.to_string()))?;
            return Ok(state.amplitudes().to_vec());
        }
        let amps = init.amplitudes.as_ref().expect("validated");
        Ok(amps.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
    }

    pub fn initial_boson_state(&self) -> Result<BosonLatticeState, ConfigError> {
        BosonLatticeState::new(self.initial_amplitudes()?).map_err(|e| ConfigError(e.to_string()))
    }

    pub fn initial_spin_state(&self) -> Result<SpinLatticeState, ConfigError> {
        SpinLatticeState::new(self.initial_amplitudes()?).map_err(|e| ConfigError(e.to_string()))
    }
}
