//! Convergence studies: parameter sweeps over relaxation, reservoir size and
//! bias; the Markovian-vs-exact occupation error bound; and the Landauer
//! convergence report.

use num_complex::Complex64 as C64;

use crate::currents::{
    current_landauer_semiinfinite, current_large_gamma, current_nonmarkovian, current_pole_sum,
    current_small_gamma, current_trace_integral, effective_transmission, SemiInfiniteGeometry,
    SemiInfiniteLead,
};
use crate::error::{Error, Result};
use crate::model::{
    discretize_lead_chain, fermi, CurrentResult, FermiParameters, GammaPolicy, JunctionModel,
    LeadLabel, Method, ReservoirMode, SystemHamiltonian,
};
use crate::oracle;
use crate::quadrature::{integrate_omega, QuadratureConfig};

/// (gamma / 4T) ln(T / gamma): bound on the one-norm difference between the
/// constant-occupation and running-occupation mode lesser functions.
/// Only valid in the weak-relaxation regime gamma <= T.
pub fn gless_error_bound(gamma: f64, temperature: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("gamma must be > 0, got {gamma}")));
    }
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "bound requires T > 0 (no small parameter at T = 0), got {temperature}"
        )));
    }
    if gamma > temperature {
        return Err(Error::Domain(format!(
            "bound holds only for gamma <= T, got gamma = {gamma}, T = {temperature}"
        )));
    }
    Ok(gamma / (4.0 * temperature) * (temperature / gamma).ln())
}

/// int dw/2pi gamma_k |f(w_k) - f(w)| / ((w - w_k)^2 + gamma_k^2/4):
/// the actual one-norm difference between the two lesser functions of a
/// single mode, by quadrature. Worst case sits at w_k = mu.
pub fn gless_error_norm(
    mode: &ReservoirMode,
    mu: f64,
    temperature: f64,
    config: &QuadratureConfig,
) -> Result<f64> {
    if !(temperature > 0.0) {
        return Err(Error::Domain(format!(
            "occupation error norm requires T > 0, got {temperature}"
        )));
    }
    let (wk, g) = (mode.omega, mode.gamma);
    let fk = fermi(wk, mu, temperature)?;
    let (value, _err) = integrate_omega(
        |w| {
            let d = w - wk;
            let f = fermi(w, mu, temperature).unwrap_or(f64::NAN);
            g * (fk - f).abs() / (d * d + 0.25 * g * g)
        },
        &[wk, mu],
        g.max(temperature),
        config,
    )?;
    Ok(value / (2.0 * std::f64::consts::PI))
}

/// System block of the junctions the sweep machinery builds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemKind {
    SingleSite { eps0: f64 },
    /// Both leads attach to site 1; site 2 is a side-coupled interferer.
    TwoSiteInterference { eps1: f64, eps2: f64, h12: C64 },
}

impl SystemKind {
    pub fn site_count(&self) -> usize {
        match self {
            SystemKind::SingleSite { .. } => 1,
            SystemKind::TwoSiteInterference { .. } => 2,
        }
    }

    pub fn hamiltonian(&self) -> Result<SystemHamiltonian> {
        match *self {
            SystemKind::SingleSite { eps0 } => {
                SystemHamiltonian::new(ndarray::Array2::from_elem((1, 1), C64::new(eps0, 0.0)))
            }
            SystemKind::TwoSiteInterference { eps1, eps2, h12 } => {
                let mut h = ndarray::Array2::<C64>::zeros((2, 2));
                h[[0, 0]] = C64::new(eps1, 0.0);
                h[[1, 1]] = C64::new(eps2, 0.0);
                h[[0, 1]] = h12;
                h[[1, 0]] = h12.conj();
                SystemHamiltonian::new(h)
            }
        }
    }
}

/// Recipe for a junction whose leads can be rebuilt at any reservoir size or
/// relaxation rate; both leads are identical chains attached to site 0.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionTemplate {
    pub kind: SystemKind,
    pub n: usize,
    pub t_hop: f64,
    pub v0: C64,
    pub gamma_policy: GammaPolicy,
}

impl JunctionTemplate {
    pub fn build(&self) -> Result<JunctionModel> {
        self.build_with(self.n, self.gamma_policy)
    }

    pub fn build_with(&self, n: usize, gamma_policy: GammaPolicy) -> Result<JunctionModel> {
        let n_sites = self.kind.site_count();
        let mk = |label| discretize_lead_chain(n, self.t_hop, self.v0, gamma_policy, label, n_sites, 0);
        JunctionModel::new(self.kind.hamiltonian()?, mk(LeadLabel::Left)?, mk(LeadLabel::Right)?)
    }

    /// The matching zero-relaxation, infinite-reservoir reference geometry.
    pub fn semi_infinite(&self) -> Result<SemiInfiniteGeometry> {
        let lead = SemiInfiniteLead { t_hop: self.t_hop, v0: self.v0, site: 0 };
        SemiInfiniteGeometry::new(self.kind.hamiltonian()?, lead.clone(), lead)
    }
}

/// Which knob a sweep turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Uniform relaxation rate on every mode.
    Gamma,
    /// Chain length per lead; values must be positive integers.
    ReservoirSize,
    /// mu_L - mu_R, applied symmetrically around the template's mean potential.
    Bias,
}

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParameter::Gamma => "gamma",
            SweepParameter::ReservoirSize => "reservoir_size",
            SweepParameter::Bias => "bias",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "gamma" => SweepParameter::Gamma,
            "reservoir_size" => SweepParameter::ReservoirSize,
            "bias" => SweepParameter::Bias,
            _ => return None,
        })
    }
}

/// A full sweep request.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
    pub template: JunctionTemplate,
    pub fermi: FermiParameters,
    pub quadrature: QuadratureConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Usage("sweep needs at least one parameter value".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Usage("sweep needs at least one method".into()));
        }
        let monotone = self.values.windows(2).all(|w| w[0] < w[1])
            || self.values.windows(2).all(|w| w[0] > w[1]);
        if !monotone {
            return Err(Error::Usage("sweep values must be strictly monotone".into()));
        }
        for &v in &self.values {
            if !v.is_finite() {
                return Err(Error::Usage(format!("sweep value {v} is not finite")));
            }
            match self.parameter {
                SweepParameter::Gamma if !(v > 0.0) => {
                    return Err(Error::Usage(format!("gamma sweep value must be > 0, got {v}")));
                }
                SweepParameter::ReservoirSize if v.fract() != 0.0 || v < 1.0 => {
                    return Err(Error::Usage(format!(
                        "reservoir-size sweep values must be positive integers, got {v}"
                    )));
                }
                _ => {}
            }
        }
        self.quadrature.validate()?;
        Ok(())
    }
}

/// One method's outcome at one sweep point; failures carry the message, and a
/// failed cell is never reported as zero.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub method: Method,
    pub outcome: std::result::Result<CurrentResult, String>,
}

/// One sweep point: every requested method, pairwise relative deviations, and
/// deviation against the Landauer reference when it was requested.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub cells: Vec<SweepCell>,
    /// (a, b, |I_a - I_b| / max_c |I_c|) over successful method pairs; the
    /// shared denominator keeps the triangle inequality exact.
    pub deviations: Vec<(Method, Method, f64)>,
    /// (method, |I_m - I_landauer| / |I_landauer|); infinite when the
    /// reference is zero but the method value is not.
    pub reference_deviations: Vec<(Method, f64)>,
}

/// Evaluates every requested method at every value, rows in input order.
/// Per-cell failures are recorded in the row, never aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.values.iter().map(|&v| evaluate_sweep_point(spec, v)).collect()
}

/// One row of a sweep; exposed separately so callers can schedule points
/// concurrently (rows are independent).
pub fn evaluate_sweep_point(spec: &SweepSpec, value: f64) -> Result<SweepRow> {
    let (junction, fermi_params) = instantiate(spec, value)?;
    let cells: Vec<SweepCell> = spec
        .methods
        .iter()
        .map(|&method| SweepCell {
            method,
            outcome: evaluate_method(&spec.template, &junction, &fermi_params, &spec.quadrature, method)
                .map_err(|e| e.to_string()),
        })
        .collect();

    let ok: Vec<(Method, f64)> = cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().ok().map(|r| (c.method, r.value)))
        .collect();
    let denom = ok.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max);
    let mut deviations = Vec::new();
    for (i, &(ma, va)) in ok.iter().enumerate() {
        for &(mb, vb) in &ok[i + 1..] {
            let dev = if denom > 0.0 { (va - vb).abs() / denom } else { 0.0 };
            deviations.push((ma, mb, dev));
        }
    }

    let mut reference_deviations = Vec::new();
    if let Some(&(_, i_ref)) = ok.iter().find(|(m, _)| *m == Method::LandauerSemiInfinite) {
        for &(m, v) in &ok {
            if m == Method::LandauerSemiInfinite {
                continue;
            }
            let d = (v - i_ref).abs();
            let dev = if i_ref != 0.0 {
                d / i_ref.abs()
            } else if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            reference_deviations.push((m, dev));
        }
    }

    Ok(SweepRow { value, cells, deviations, reference_deviations })
}

fn instantiate(spec: &SweepSpec, value: f64) -> Result<(JunctionModel, FermiParameters)> {
    match spec.parameter {
        SweepParameter::Gamma => {
            let j = spec.template.build_with(spec.template.n, GammaPolicy::Uniform(value))?;
            Ok((j, spec.fermi))
        }
        SweepParameter::ReservoirSize => {
            let j = spec.template.build_with(value as usize, spec.template.gamma_policy)?;
            Ok((j, spec.fermi))
        }
        SweepParameter::Bias => {
            let center = 0.5 * (spec.fermi.mu_l + spec.fermi.mu_r);
            let fp = FermiParameters::new(
                center + 0.5 * value,
                center - 0.5 * value,
                spec.fermi.temperature,
            )?;
            Ok((spec.template.build()?, fp))
        }
    }
}

/// Dispatches one current method on an already-built junction. The template
/// supplies the semi-infinite reference geometry for the Landauer method.
pub fn evaluate_method(
    template: &JunctionTemplate,
    junction: &JunctionModel,
    fermi_params: &FermiParameters,
    config: &QuadratureConfig,
    method: Method,
) -> Result<CurrentResult> {
    match method {
        Method::TraceIntegral => current_trace_integral(junction, fermi_params, config),
        Method::PoleSum => current_pole_sum(junction, fermi_params),
        Method::LandauerSemiInfinite => {
            current_landauer_semiinfinite(&template.semi_infinite()?, fermi_params, config)
        }
        Method::NonMarkovian => current_nonmarkovian(junction, fermi_params, config),
        Method::LargeGamma => current_large_gamma(junction, fermi_params),
        Method::SmallGamma => current_small_gamma(junction, fermi_params),
        Method::OracleSylvester => {
            let model = oracle::assemble_full_space(junction, fermi_params)?;
            let state = oracle::solve_steady_state(&model)?;
            oracle::current_from_state(&model, &state)
        }
        Method::OracleTimeEvolution => {
            let model = oracle::assemble_full_space(junction, fermi_params)?;
            let mut c = oracle::decoupled_initial_state(&model);
            let chunk = 50.0 / junction.min_gamma();
            let dt = oracle::default_time_step(&model);
            // weak system-lead coupling can make hybridization, not gamma,
            // the slowest rate; keep evolving in chunks until stationary
            let mut residual = oracle::stationarity_residual(&model, &c);
            for _ in 0..8 {
                if residual < 1e-9 {
                    break;
                }
                let traj = oracle::time_evolve(&model, &c, chunk, dt, usize::MAX)?;
                c = traj.last().expect("trajectory always contains the final state").state.clone();
                residual = oracle::stationarity_residual(&model, &c);
            }
            let state = oracle::CorrelationMatrix { matrix: c, residual };
            let mut result = oracle::current_from_state(&model, &state)?;
            result.method = Method::OracleTimeEvolution;
            Ok(result)
        }
    }
}

/// gamma(N) rule for convergence studies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaRule {
    /// Same rate at every N.
    Constant(f64),
    /// gamma = c / N; keeps (spacing / gamma) roughly fixed for 1D chains.
    OverSize(f64),
    /// gamma_k = c * (local level spacing).
    SpacingMultiple(f64),
}

impl GammaRule {
    pub fn policy(&self, n: usize) -> Result<GammaPolicy> {
        let policy = match *self {
            GammaRule::Constant(g) => GammaPolicy::Uniform(g),
            GammaRule::OverSize(c) => GammaPolicy::Uniform(c / n as f64),
            GammaRule::SpacingMultiple(c) => GammaPolicy::ProportionalToSpacing(c),
        };
        match policy {
            GammaPolicy::Uniform(g) if !(g > 0.0) => {
                Err(Error::Usage(format!("gamma rule produced non-positive rate {g}")))
            }
            GammaPolicy::ProportionalToSpacing(c) if !(c > 0.0) => {
                Err(Error::Usage(format!("gamma rule coefficient must be > 0, got {c}")))
            }
            p => Ok(p),
        }
    }
}

/// One reservoir size of a convergence report.
#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    pub n: usize,
    pub pole_sum: std::result::Result<CurrentResult, String>,
    pub nonmarkovian: std::result::Result<CurrentResult, String>,
    pub landauer: f64,
    /// |I - I_landauer| per finite-reservoir method, absolute then relative.
    pub pole_abs_err: Option<f64>,
    pub pole_rel_err: Option<f64>,
    pub nonmarkovian_abs_err: Option<f64>,
    pub nonmarkovian_rel_err: Option<f64>,
    /// Band-center mode spacing divided by the smallest relaxation rate.
    pub spacing_over_gamma: f64,
}

/// For each N: rebuilds the leads, computes the constant-occupation pole sum
/// and the running-occupation integral, and compares both to the semi-infinite
/// Landauer current.
pub fn landauer_convergence_report(
    template: &JunctionTemplate,
    fermi_params: &FermiParameters,
    n_list: &[usize],
    rule: GammaRule,
    config: &QuadratureConfig,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.is_empty() {
        return Err(Error::Usage("convergence report needs at least one reservoir size".into()));
    }
    if !n_list.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Usage("reservoir sizes must be strictly increasing".into()));
    }
    let i_ref = current_landauer_semiinfinite(&template.semi_infinite()?, fermi_params, config)?.value;

    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let junction = template.build_with(n, rule.policy(n)?)?;
        let pole_sum = current_pole_sum(&junction, fermi_params).map_err(|e| e.to_string());
        let nonmarkovian =
            current_nonmarkovian(&junction, fermi_params, config).map_err(|e| e.to_string());
        let errs = |r: &std::result::Result<CurrentResult, String>| {
            r.as_ref().ok().map(|c| {
                let abs = (c.value - i_ref).abs();
                (abs, if i_ref != 0.0 { abs / i_ref.abs() } else { f64::INFINITY })
            })
        };
        let pe = errs(&pole_sum);
        let ne = errs(&nonmarkovian);
        let spacing_center = 2.0 * std::f64::consts::PI * template.t_hop / (n as f64 + 1.0);
        rows.push(ConvergenceRow {
            n,
            spacing_over_gamma: spacing_center / junction.min_gamma(),
            pole_abs_err: pe.map(|x| x.0),
            pole_rel_err: pe.map(|x| x.1),
            nonmarkovian_abs_err: ne.map(|x| x.0),
            nonmarkovian_rel_err: ne.map(|x| x.1),
            pole_sum,
            nonmarkovian,
            landauer: i_ref,
        });
    }
    Ok(rows)
}

/// Minimum of the broadened transmission on a symmetric grid around `center`,
/// excluding the center itself (where a side-coupled level pins an exact
/// zero for every relaxation rate).
pub fn transmission_dip(
    junction: &JunctionModel,
    center: f64,
    half_width: f64,
    n_per_side: usize,
) -> Result<f64> {
    if !(half_width > 0.0) || n_per_side == 0 {
        return Err(Error::Usage("dip scan needs half_width > 0 and n_per_side >= 1".into()));
    }
    let step = half_width / n_per_side as f64;
    let mut min = f64::INFINITY;
    for i in 1..=n_per_side {
        for sign in [-1.0, 1.0] {
            let (t, _) = effective_transmission(center + sign * step * i as f64, junction)?;
            min = min.min(t);
        }
    }
    Ok(min)
}
