//! Steady-state current formulas: the general trace integral, its compact
//! identical-reservoir form, the pole sum, the semi-infinite Landauer
//! reference, the finite-gamma non-Markovian Landauer form, and the two
//! asymptotic regimes. Positive current means net particle flow L -> R.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{
    fermi, CurrentResult, FermiParameters, JunctionModel, LeadLabel, Method, SystemHamiltonian,
};
use crate::quadrature::{integrate_omega, integrate_window, QuadratureConfig};
use crate::spectral::{
    adjoint, green_ret, spectral_density, weighted_spectral_density,
};

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Marks an effective-transmission value as not a proper transmission:
/// finite relaxation smears full and empty reservoir states outside the band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransmissionCaveat {
    NotProperTransmission,
}

/// I = e int dw/2pi tr[G~^L G^a G^R G^r - G^L G^r G~^R G^a].
/// The general formula; leads need not be identical.
pub fn current_trace_integral(
    junction: &JunctionModel,
    fermi_params: &FermiParameters,
    config: &QuadratureConfig,
) -> Result<CurrentResult> {
    require_positive_gammas(junction)?;
    let poles = junction.all_mode_frequencies();
    let mut panels = 0usize;
    let (value, err) = integrate_omega(
        |w| {
            panels += 1;
            trace_integrand(w, junction, fermi_params).unwrap_or(f64::NAN)
        },
        &poles,
        junction.max_gamma(),
        config,
    )?;
    if !value.is_finite() {
        return Err(Error::Computation {
            msg: "trace integrand failed during quadrature".into(),
            condition: f64::NAN,
        });
    }
    Ok(CurrentResult::new(value / TWO_PI, Method::TraceIntegral, err / TWO_PI)
        .with_diagnostic("panels", panels as f64))
}

fn trace_integrand(w: f64, junction: &JunctionModel, fp: &FermiParameters) -> Result<f64> {
    let g_r = green_ret(C64::new(w, 0.0), junction)?;
    let g_a = adjoint(&g_r);
    let gamma_l = spectral_density(w, &junction.lead_l)?;
    let gamma_r = spectral_density(w, &junction.lead_r)?;
    let gamma_lw = weighted_spectral_density(w, &junction.lead_l, fp, LeadLabel::Left)?;
    let gamma_rw = weighted_spectral_density(w, &junction.lead_r, fp, LeadLabel::Right)?;
    let t1 = trace(&gamma_lw.dot(&g_a).dot(&gamma_r).dot(&g_r));
    let t2 = trace(&gamma_l.dot(&g_r).dot(&gamma_rw).dot(&g_a));
    Ok((t1 - t2).re)
}

/// I = (ie/2) int dw/2pi tr[(G~^L - G~^R)(G^r - G^a)]; identical reservoirs only.
pub fn current_compact_integral(
    junction: &JunctionModel,
    fermi_params: &FermiParameters,
    config: &QuadratureConfig,
) -> Result<CurrentResult> {
    require_identical(junction)?;
    require_positive_gammas(junction)?;
    let poles = junction.all_mode_frequencies();
    let mut panels = 0usize;
    let (value, err) = integrate_omega(
        |w| {
            panels += 1;
            compact_integrand(w, junction, fermi_params).unwrap_or(f64::NAN)
        },
        &poles,
        junction.max_gamma(),
        config,
    )?;
    if !value.is_finite() {
        return Err(Error::Computation {
            msg: "compact integrand failed during quadrature".into(),
            condition: f64::NAN,
        });
    }
    Ok(CurrentResult::new(value / TWO_PI, Method::TraceIntegral, err / TWO_PI)
        .with_diagnostic("panels", panels as f64)
        .with_diagnostic("compact_form", 1.0))
}

fn compact_integrand(w: f64, junction: &JunctionModel, fp: &FermiParameters) -> Result<f64> {
    let g_r = green_ret(C64::new(w, 0.0), junction)?;
    let g_a = adjoint(&g_r);
    let dg = &g_r - &g_a;
    let gamma_lw = weighted_spectral_density(w, &junction.lead_l, fp, LeadLabel::Left)?;
    let gamma_rw = weighted_spectral_density(w, &junction.lead_r, fp, LeadLabel::Right)?;
    let dgamma = &gamma_lw - &gamma_rw;
    Ok((C64::new(0.0, 0.5) * trace(&dgamma.dot(&dg))).re)
}

/// Closed-form pole sum over the left lead's modes:
/// I = -e sum_k (f~_k^L - f~_k^R) Im(v_k^dag G^r(w_k + i gamma_k/2) v_k).
pub fn current_pole_sum(
    junction: &JunctionModel,
    fermi_params: &FermiParameters,
) -> Result<CurrentResult> {
    require_identical(junction)?;
    require_positive_gammas(junction)?;
    let t = fermi_params.temperature;
    let mut total = 0.0;
    for mode in &junction.lead_l.modes {
        let df = fermi(mode.omega, fermi_params.mu_l, t)? - fermi(mode.omega, fermi_params.mu_r, t)?;
        if df == 0.0 {
            continue;
        }
        let z = C64::new(mode.omega, 0.5 * mode.gamma);
        let g = green_ret(z, junction)?;
        let n = junction.dim();
        let mut quad = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                quad += mode.coupling[i].conj() * g[[i, j]] * mode.coupling[j];
            }
        }
        total -= df * quad.im;
    }
    Ok(CurrentResult::new(total, Method::PoleSum, 0.0))
}

/// Analytic retarded surface self-energy of a semi-infinite 1D chain of
/// hopping `t_hop`, attached with amplitude `v0`.
pub fn lead_self_energy_semiinfinite(omega: f64, t_hop: f64, v0: C64) -> Result<C64> {
    if !(t_hop > 0.0) {
        return Err(Error::Domain(format!("chain hopping must be > 0, got {t_hop}")));
    }
    let scale = v0.norm_sqr() / (t_hop * t_hop);
    let half = 0.5 * omega;
    let z = if omega.abs() <= 2.0 * t_hop {
        C64::new(half, -(t_hop * t_hop - half * half).sqrt())
    } else {
        C64::new(half - omega.signum() * (half * half - t_hop * t_hop).sqrt(), 0.0)
    };
    Ok(scale * z)
}

/// One semi-infinite 1D lead: chain hopping, attachment amplitude, and the
/// junction site it binds to.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiInfiniteLead {
    pub t_hop: f64,
    pub v0: C64,
    pub site: usize,
}

/// Geometry for the zero-relaxation, infinite-reservoir Landauer reference.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiInfiniteGeometry {
    pub system: SystemHamiltonian,
    pub lead_l: SemiInfiniteLead,
    pub lead_r: SemiInfiniteLead,
}

impl SemiInfiniteGeometry {
    pub fn new(system: SystemHamiltonian, lead_l: SemiInfiniteLead, lead_r: SemiInfiniteLead) -> Result<Self> {
        let n = system.dim();
        for lead in [&lead_l, &lead_r] {
            if lead.site >= n {
                return Err(Error::Model(format!(
                    "attachment site {} out of range for {n}-site system",
                    lead.site
                )));
            }
            if !(lead.t_hop > 0.0) {
                return Err(Error::Model("semi-infinite lead hopping must be > 0".into()));
            }
        }
        Ok(Self { system, lead_l, lead_r })
    }

    fn sigma_matrix(&self, omega: f64, which: LeadLabel) -> Result<Array2<C64>> {
        let lead = match which {
            LeadLabel::Left => &self.lead_l,
            LeadLabel::Right => &self.lead_r,
        };
        let n = self.system.dim();
        let mut s = Array2::<C64>::zeros((n, n));
        s[[lead.site, lead.site]] = lead_self_energy_semiinfinite(omega, lead.t_hop, lead.v0)?;
        Ok(s)
    }

    /// G^r with both analytic surface self-energies.
    pub fn green_ret(&self, omega: f64) -> Result<Array2<C64>> {
        let n = self.system.dim();
        let sl = self.sigma_matrix(omega, LeadLabel::Left)?;
        let sr = self.sigma_matrix(omega, LeadLabel::Right)?;
        let mut a = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = -self.system.matrix()[[i, j]] - sl[[i, j]] - sr[[i, j]];
            }
            a[[i, i]] += omega;
        }
        use ndarray_linalg::Inverse;
        a.inv().map_err(|_| Error::Computation {
            msg: "semi-infinite resolvent is numerically singular".into(),
            condition: f64::NAN,
        })
    }

    /// Proper transmission tr[Gamma^L G^r Gamma^R G^a] at real omega.
    pub fn transmission(&self, omega: f64) -> Result<f64> {
        let g_r = self.green_ret(omega)?;
        let g_a = adjoint(&g_r);
        let gamma = |which| -> Result<Array2<C64>> {
            let s = self.sigma_matrix(omega, which)?;
            // Gamma = i (Sigma - Sigma^dag)
            Ok((&s - &adjoint(&s)).mapv(|z| C64::new(0.0, 1.0) * z))
        };
        let gl = gamma(LeadLabel::Left)?;
        let gr = gamma(LeadLabel::Right)?;
        Ok(trace(&gl.dot(&g_r).dot(&gr).dot(&g_a)).re)
    }

    pub fn band_edges(&self) -> Vec<f64> {
        vec![
            -2.0 * self.lead_l.t_hop,
            2.0 * self.lead_l.t_hop,
            -2.0 * self.lead_r.t_hop,
            2.0 * self.lead_r.t_hop,
        ]
    }
}

/// Landauer current of the semi-infinite reference:
/// I = e int dw/2pi (f_L - f_R) tr[Gamma^L G^r Gamma^R G^a].
pub fn current_landauer_semiinfinite(
    geometry: &SemiInfiniteGeometry,
    fermi_params: &FermiParameters,
    config: &QuadratureConfig,
) -> Result<CurrentResult> {
    let (lo, hi) = fermi_window(fermi_params);
    let mut poles = geometry.band_edges();
    poles.push(fermi_params.mu_l);
    poles.push(fermi_params.mu_r);
    let mut panels = 0usize;
    let t = fermi_params.temperature;
    let (value, err) = integrate_window(
        &mut |w| {
            panels += 1;
            let df = fermi(w, fermi_params.mu_l, t).unwrap_or(f64::NAN)
                - fermi(w, fermi_params.mu_r, t).unwrap_or(f64::NAN);
            if df == 0.0 {
                return 0.0;
            }
            df * geometry.transmission(w).unwrap_or(f64::NAN)
        },
        &poles,
        lo,
        hi,
        config,
    )?;
    if !value.is_finite() {
        return Err(Error::Computation {
            msg: "Landauer integrand failed during quadrature".into(),
            condition: f64::NAN,
        });
    }
    Ok(CurrentResult::new(value / TWO_PI, Method::LandauerSemiInfinite, err / TWO_PI)
        .with_diagnostic("panels", panels as f64))
}

/// Finite-gamma Landauer form with the running occupation f(omega):
/// I = e int dw/2pi (f_L(w) - f_R(w)) tr[Gamma^L(w) G^r Gamma^R(w) G^a].
pub fn current_nonmarkovian(
    junction: &JunctionModel,
    fermi_params: &FermiParameters,
    config: &QuadratureConfig,
) -> Result<CurrentResult> {
    require_positive_gammas(junction)?;
    let (lo, hi) = fermi_window(fermi_params);
    let mut poles = junction.all_mode_frequencies();
    poles.push(fermi_params.mu_l);
    poles.push(fermi_params.mu_r);
    let t = fermi_params.temperature;
    let mut panels = 0usize;
    let (value, err) = integrate_window(
        &mut |w| {
            panels += 1;
            let df = fermi(w, fermi_params.mu_l, t).unwrap_or(f64::NAN)
                - fermi(w, fermi_params.mu_r, t).unwrap_or(f64::NAN);
            if df == 0.0 {
                return 0.0;
            }
            df * effective_transmission_value(w, junction).unwrap_or(f64::NAN)
        },
        &poles,
        lo,
        hi,
        config,
    )?;
    if !value.is_finite() {
        return Err(Error::Computation {
            msg: "non-Markovian integrand failed during quadrature".into(),
            condition: f64::NAN,
        });
    }
    Ok(CurrentResult::new(value / TWO_PI, Method::NonMarkovian, err / TWO_PI)
        .with_diagnostic("panels", panels as f64))
}

/// Integration window covering the bias interval, widened by 40 T at finite
/// temperature for the exponential Fermi tails.
fn fermi_window(fp: &FermiParameters) -> (f64, f64) {
    let lo = fp.mu_l.min(fp.mu_r);
    let hi = fp.mu_l.max(fp.mu_r);
    let pad = 40.0 * fp.temperature;
    (lo - pad, hi + pad)
}

/// Large-relaxation asymptote: I ~ 2e sum_k (f~_k^L - f~_k^R) |v_k|^2 / gamma_k.
pub fn current_large_gamma(
    junction: &JunctionModel,
    fermi_params: &FermiParameters,
) -> Result<CurrentResult> {
    require_identical(junction)?;
    let t = fermi_params.temperature;
    let mut total = 0.0;
    for mode in &junction.lead_l.modes {
        let df = fermi(mode.omega, fermi_params.mu_l, t)? - fermi(mode.omega, fermi_params.mu_r, t)?;
        total += 2.0 * df * mode.coupling_norm_sq() / mode.gamma;
    }
    Ok(CurrentResult::new(total, Method::LargeGamma, 0.0).with_diagnostic("asymptotic", 1.0))
}

/// Small-relaxation asymptote: I ~ (e/2) sum_k gamma_k (f~_k^L - f~_k^R).
/// Nothing about the system enters; relaxation is rate-limiting.
pub fn current_small_gamma(
    junction: &JunctionModel,
    fermi_params: &FermiParameters,
) -> Result<CurrentResult> {
    require_identical(junction)?;
    let t = fermi_params.temperature;
    let mut total = 0.0;
    for mode in &junction.lead_l.modes {
        let df = fermi(mode.omega, fermi_params.mu_l, t)? - fermi(mode.omega, fermi_params.mu_r, t)?;
        total += 0.5 * mode.gamma * df;
    }
    Ok(CurrentResult::new(total, Method::SmallGamma, 0.0).with_diagnostic("asymptotic", 1.0))
}

/// tr[Gamma^L(w) G^r Gamma^R(w) G^a] with the finite-gamma broadened
/// densities. Flagged: full and empty reservoir states leak outside the
/// band, so this is not a proper transmission function.
pub fn effective_transmission(
    omega: f64,
    junction: &JunctionModel,
) -> Result<(f64, TransmissionCaveat)> {
    Ok((
        effective_transmission_value(omega, junction)?,
        TransmissionCaveat::NotProperTransmission,
    ))
}

fn effective_transmission_value(omega: f64, junction: &JunctionModel) -> Result<f64> {
    let g_r = green_ret(C64::new(omega, 0.0), junction)?;
    let g_a = adjoint(&g_r);
    let gl = spectral_density(omega, &junction.lead_l)?;
    let gr = spectral_density(omega, &junction.lead_r)?;
    Ok(trace(&gl.dot(&g_r).dot(&gr).dot(&g_a)).re)
}

fn require_identical(junction: &JunctionModel) -> Result<()> {
    if !junction.identical_reservoirs {
        return Err(Error::Usage("identical reservoirs required".into()));
    }
    Ok(())
}

fn require_positive_gammas(junction: &JunctionModel) -> Result<()> {
    if !(junction.min_gamma() > 0.0) {
        return Err(Error::Domain("all mode relaxations must be > 0".into()));
    }
    Ok(())
}

fn trace(a: &Array2<C64>) -> C64 {
    (0..a.nrows()).map(|i| a[[i, i]]).sum()
}
