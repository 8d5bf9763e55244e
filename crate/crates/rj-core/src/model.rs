//! Domain types and constructors for junctions with relaxed finite reservoirs.
//!
//! Units are fixed: hbar = e = k_B = 1, energies in units of the lead hopping,
//! currents in units of e * energy / hbar. No unit parameters appear anywhere
//! else in the crate.

use ndarray::Array2;
use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Marker for the single unit convention used throughout (hbar = e = k_B = 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Units;

/// Hermitian single-particle Hamiltonian of the junction region.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemHamiltonian {
    matrix: Array2<C64>,
}

impl SystemHamiltonian {
    /// Builds from a square matrix, rejecting any non-Hermitian input.
    pub fn new(matrix: Array2<C64>) -> Result<Self> {
        let (n, m) = matrix.dim();
        if n == 0 || n != m {
            return Err(Error::Model(format!(
                "system Hamiltonian must be square and non-empty, got {n}x{m}"
            )));
        }
        for i in 0..n {
            for j in 0..n {
                if matrix[[i, j]] != matrix[[j, i]].conj() {
                    return Err(Error::Model(format!(
                        "system Hamiltonian is not Hermitian at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { matrix })
    }

    /// Symmetrizes (H + H^dagger)/2 before construction, for callers that
    /// assemble matrices from noisy arithmetic on purpose.
    pub fn new_symmetrized(matrix: Array2<C64>) -> Result<Self> {
        let (n, m) = matrix.dim();
        if n == 0 || n != m {
            return Err(Error::Model(format!(
                "system Hamiltonian must be square and non-empty, got {n}x{m}"
            )));
        }
        let mut sym = matrix.clone();
        for i in 0..n {
            for j in 0..n {
                sym[[i, j]] = 0.5 * (matrix[[i, j]] + matrix[[j, i]].conj());
            }
        }
        Self::new(sym)
    }

    /// Skips the Hermiticity check. Exists only so validation tooling can
    /// plant a deliberately corrupted Hamiltonian as a negative control.
    #[doc(hidden)]
    pub fn new_unchecked(matrix: Array2<C64>) -> Self {
        Self { matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }
}

/// One relaxed reservoir eigenmode: frequency, relaxation rate, and its
/// coupling vector into the junction sites.
#[derive(Debug, Clone, PartialEq)]
pub struct ReservoirMode {
    pub omega: f64,
    pub gamma: f64,
    pub coupling: Vec<C64>,
}

impl ReservoirMode {
    pub fn new(omega: f64, gamma: f64, coupling: Vec<C64>) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::Model(format!("mode frequency must be finite, got {omega}")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Model(format!("relaxation gamma must be > 0, got {gamma}")));
        }
        if coupling.is_empty() {
            return Err(Error::Model("coupling vector must be non-empty".into()));
        }
        Ok(Self { omega, gamma, coupling })
    }

    /// |v_k|^2 summed over junction sites.
    pub fn coupling_norm_sq(&self) -> f64 {
        self.coupling.iter().map(|v| v.norm_sqr()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeadLabel {
    Left,
    Right,
}

impl std::fmt::Display for LeadLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LeadLabel::Left => write!(f, "L"),
            LeadLabel::Right => write!(f, "R"),
        }
    }
}

/// A finite reservoir: an ordered list of relaxed eigenmodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Lead {
    pub modes: Vec<ReservoirMode>,
    pub label: LeadLabel,
}

impl Lead {
    pub fn new(modes: Vec<ReservoirMode>, label: LeadLabel) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Model("lead must contain at least one mode".into()));
        }
        let ns = modes[0].coupling.len();
        if modes.iter().any(|m| m.coupling.len() != ns) {
            return Err(Error::Model("all modes in a lead must couple to the same sites".into()));
        }
        Ok(Self { modes, label })
    }

    pub fn site_count(&self) -> usize {
        self.modes[0].coupling.len()
    }

    pub fn min_gamma(&self) -> f64 {
        self.modes.iter().map(|m| m.gamma).fold(f64::INFINITY, f64::min)
    }

    pub fn max_gamma(&self) -> f64 {
        self.modes.iter().map(|m| m.gamma).fold(0.0, f64::max)
    }
}

/// Rule for assigning per-mode relaxation rates when discretizing a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaPolicy {
    /// All modes share one rate.
    Uniform(f64),
    /// gamma_k = c * (local level spacing at omega_k).
    ProportionalToSpacing(f64),
}

/// Chemical potentials and temperature defining the occupation factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FermiParameters {
    pub mu_l: f64,
    pub mu_r: f64,
    pub temperature: f64,
}

impl FermiParameters {
    pub fn new(mu_l: f64, mu_r: f64, temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0) {
            return Err(Error::Domain(format!("temperature must be >= 0, got {temperature}")));
        }
        Ok(Self { mu_l, mu_r, temperature })
    }

    pub fn mu(&self, side: LeadLabel) -> f64 {
        match side {
            LeadLabel::Left => self.mu_l,
            LeadLabel::Right => self.mu_r,
        }
    }

    /// Same temperature with the two chemical potentials exchanged.
    pub fn swapped(&self) -> Self {
        Self { mu_l: self.mu_r, mu_r: self.mu_l, temperature: self.temperature }
    }
}

/// Fermi-Dirac occupation. At T = 0 the step branch is used, with the
/// tie at omega = mu broken to 1/2.
pub fn fermi(omega: f64, mu: f64, temperature: f64) -> Result<f64> {
    if !(temperature >= 0.0) {
        return Err(Error::Domain(format!("temperature must be >= 0, got {temperature}")));
    }
    if temperature == 0.0 {
        return Ok(if omega < mu {
            1.0
        } else if omega > mu {
            0.0
        } else {
            0.5
        });
    }
    let x = (omega - mu) / temperature;
    // Large |x| shortcut keeps exp from overflowing.
    if x > 700.0 {
        Ok(0.0)
    } else if x < -700.0 {
        Ok(1.0)
    } else {
        Ok(1.0 / (1.0 + x.exp()))
    }
}

/// The full transport problem: system plus two leads.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionModel {
    pub system: SystemHamiltonian,
    pub lead_l: Lead,
    pub lead_r: Lead,
    pub identical_reservoirs: bool,
}

impl JunctionModel {
    pub fn new(system: SystemHamiltonian, lead_l: Lead, lead_r: Lead) -> Result<Self> {
        let ns = system.dim();
        if lead_l.site_count() != ns || lead_r.site_count() != ns {
            return Err(Error::Model(format!(
                "lead coupling vectors must have length {ns} (system dimension)"
            )));
        }
        let identical_reservoirs = leads_identical(&lead_l, &lead_r);
        Ok(Self { system, lead_l, lead_r, identical_reservoirs })
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn lead(&self, side: LeadLabel) -> &Lead {
        match side {
            LeadLabel::Left => &self.lead_l,
            LeadLabel::Right => &self.lead_r,
        }
    }

    /// All mode frequencies of both leads, sorted ascending.
    pub fn all_mode_frequencies(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .lead_l
            .modes
            .iter()
            .chain(self.lead_r.modes.iter())
            .map(|m| m.omega)
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }

    pub fn max_gamma(&self) -> f64 {
        self.lead_l.max_gamma().max(self.lead_r.max_gamma())
    }

    pub fn min_gamma(&self) -> f64 {
        self.lead_l.min_gamma().min(self.lead_r.min_gamma())
    }

    /// Same junction with the two leads exchanged (labels swapped in place).
    pub fn with_leads_swapped(&self) -> Self {
        let mut lead_l = self.lead_r.clone();
        let mut lead_r = self.lead_l.clone();
        lead_l.label = LeadLabel::Left;
        lead_r.label = LeadLabel::Right;
        Self {
            system: self.system.clone(),
            lead_l,
            lead_r,
            identical_reservoirs: self.identical_reservoirs,
        }
    }
}

/// Mode-by-mode exact equality of stored frequencies, rates, and couplings.
fn leads_identical(a: &Lead, b: &Lead) -> bool {
    a.modes.len() == b.modes.len()
        && a.modes
            .iter()
            .zip(b.modes.iter())
            .all(|(x, y)| x.omega == y.omega && x.gamma == y.gamma && x.coupling == y.coupling)
}

/// Tag naming which formula produced a current value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    TraceIntegral,
    PoleSum,
    LandauerSemiInfinite,
    NonMarkovian,
    LargeGamma,
    SmallGamma,
    OracleSylvester,
    OracleTimeEvolution,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::TraceIntegral => "trace_integral",
            Method::PoleSum => "pole_sum",
            Method::LandauerSemiInfinite => "landauer",
            Method::NonMarkovian => "non_markovian",
            Method::LargeGamma => "large_gamma",
            Method::SmallGamma => "small_gamma",
            Method::OracleSylvester => "oracle_sylvester",
            Method::OracleTimeEvolution => "oracle_time_evolution",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "trace_integral" => Method::TraceIntegral,
            "pole_sum" => Method::PoleSum,
            "landauer" => Method::LandauerSemiInfinite,
            "non_markovian" => Method::NonMarkovian,
            "large_gamma" => Method::LargeGamma,
            "small_gamma" => Method::SmallGamma,
            "oracle_sylvester" => Method::OracleSylvester,
            "oracle_time_evolution" => Method::OracleTimeEvolution,
            _ => return None,
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// A current value with its method tag and numerical diagnostics.
/// `diagnostics` always carries an "error_estimate" entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentResult {
    pub value: f64,
    pub method: Method,
    pub diagnostics: BTreeMap<String, f64>,
}

impl CurrentResult {
    pub fn new(value: f64, method: Method, error_estimate: f64) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("error_estimate".to_string(), error_estimate);
        Self { value, method, diagnostics }
    }

    pub fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn error_estimate(&self) -> f64 {
        self.diagnostics["error_estimate"]
    }
}

/// N_S = 1 junction with on-site energy `eps0`.
pub fn build_single_site_junction(eps0: f64, lead_l: Lead, lead_r: Lead) -> Result<JunctionModel> {
    if lead_l.site_count() != 1 || lead_r.site_count() != 1 {
        return Err(Error::Model("single-site junction requires length-1 coupling vectors".into()));
    }
    let h = Array2::from_elem((1, 1), C64::new(eps0, 0.0));
    JunctionModel::new(SystemHamiltonian::new(h)?, lead_l, lead_r)
}

/// N_S = 2 junction where site 1 carries both leads and site 2 is a
/// side-coupled interferer reached through `h12`. Couplings with a nonzero
/// second component violate the geometry and are rejected.
pub fn build_two_site_interference_junction(
    eps1: f64,
    eps2: f64,
    h12: C64,
    lead_l: Lead,
    lead_r: Lead,
) -> Result<JunctionModel> {
    for lead in [&lead_l, &lead_r] {
        if lead.site_count() != 2 {
            return Err(Error::Model("two-site junction requires length-2 coupling vectors".into()));
        }
        for (k, mode) in lead.modes.iter().enumerate() {
            if mode.coupling[1] != C64::new(0.0, 0.0) {
                return Err(Error::Model(format!(
                    "lead {} mode {k} couples to site 2; the interference geometry attaches both leads to site 1 only",
                    lead.label
                )));
            }
        }
    }
    let mut h = Array2::zeros((2, 2));
    h[[0, 0]] = C64::new(eps1, 0.0);
    h[[1, 1]] = C64::new(eps2, 0.0);
    h[[0, 1]] = h12;
    h[[1, 0]] = h12.conj();
    JunctionModel::new(SystemHamiltonian::new(h)?, lead_l, lead_r)
}

/// Eigenmodes of an open-boundary 1D tight-binding chain of `n` sites with
/// hopping `t_hop`, attached to one junction site with amplitude `v0`.
///
/// omega_k = -2 t cos(k pi / (n+1)), coupling_k = v0 sqrt(2/(n+1)) sin(k pi / (n+1)).
/// The coupling vector is placed on `site` of an `n_sites`-site junction.
pub fn discretize_lead_chain(
    n: usize,
    t_hop: f64,
    v0: C64,
    gamma_policy: GammaPolicy,
    label: LeadLabel,
    n_sites: usize,
    site: usize,
) -> Result<Lead> {
    if n < 1 {
        return Err(Error::Model("chain length must be >= 1".into()));
    }
    if !(t_hop > 0.0) {
        return Err(Error::Model(format!("chain hopping must be > 0, got {t_hop}")));
    }
    if site >= n_sites {
        return Err(Error::Model(format!("attachment site {site} out of range for {n_sites} sites")));
    }
    match gamma_policy {
        GammaPolicy::Uniform(g) if !(g > 0.0) => {
            return Err(Error::Model(format!("uniform gamma must be > 0, got {g}")));
        }
        GammaPolicy::ProportionalToSpacing(c) if !(c > 0.0) => {
            return Err(Error::Model(format!("spacing coefficient must be > 0, got {c}")));
        }
        _ => {}
    }

    let nf = n as f64;
    let omegas: Vec<f64> = (1..=n)
        .map(|k| -2.0 * t_hop * (k as f64 * std::f64::consts::PI / (nf + 1.0)).cos())
        .collect();

    let mut modes = Vec::with_capacity(n);
    for (idx, &omega) in omegas.iter().enumerate() {
        let k = idx + 1;
        let amp = (2.0 / (nf + 1.0)).sqrt() * (k as f64 * std::f64::consts::PI / (nf + 1.0)).sin();
        let gamma = match gamma_policy {
            GammaPolicy::Uniform(g) => g,
            GammaPolicy::ProportionalToSpacing(c) => c * local_spacing(&omegas, idx),
        };
        let mut coupling = vec![C64::new(0.0, 0.0); n_sites];
        coupling[site] = v0 * amp;
        modes.push(ReservoirMode::new(omega, gamma, coupling)?);
    }
    Lead::new(modes, label)
}

/// Central-difference level spacing, one-sided at the band edges. For a
/// single mode the bandwidth stands in for the spacing.
fn local_spacing(omegas: &[f64], idx: usize) -> f64 {
    let n = omegas.len();
    if n == 1 {
        return 1.0;
    }
    if idx == 0 {
        omegas[1] - omegas[0]
    } else if idx == n - 1 {
        omegas[n - 1] - omegas[n - 2]
    } else {
        0.5 * (omegas[idx + 1] - omegas[idx - 1])
    }
}
