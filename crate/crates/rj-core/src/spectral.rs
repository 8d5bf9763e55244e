//! Mode Green's functions, self-energies, system resolvents, (weighted)
//! spectral densities, lesser functions, and the resolvent identities that
//! tie them together.

use ndarray::Array2;
use ndarray_linalg::{Eigh, Inverse, OperationNorm, UPLO};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{fermi, FermiParameters, JunctionModel, Lead, LeadLabel, ReservoirMode};

/// Retarded Green's function of one relaxed but otherwise isolated mode,
/// 1/(omega - omega_k + i gamma_k/2). Accepts complex omega with Im >= 0.
pub fn g_mode_ret(omega: C64, mode: &ReservoirMode) -> Result<C64> {
    if !(mode.gamma > 0.0) {
        return Err(Error::Domain(format!(
            "mode relaxation must be > 0 for the Markovian branch, got {}",
            mode.gamma
        )));
    }
    Ok(C64::new(1.0, 0.0) / (omega - C64::new(mode.omega, -0.5 * mode.gamma)))
}

/// Advanced counterpart, the complex conjugate at real omega.
pub fn g_mode_adv(omega: f64, mode: &ReservoirMode) -> Result<C64> {
    Ok(g_mode_ret(C64::new(omega, 0.0), mode)?.conj())
}

/// Retarded self-energy: sum over all modes of both leads of
/// v_k v_k^dagger g_k^r(omega). Complex omega allowed with Im >= 0.
pub fn self_energy_ret(omega: C64, junction: &JunctionModel) -> Result<Array2<C64>> {
    if omega.im < 0.0 {
        return Err(Error::Domain(format!(
            "retarded quantities are only evaluated for Im omega >= 0, got {}",
            omega.im
        )));
    }
    let n = junction.dim();
    let mut sigma = Array2::<C64>::zeros((n, n));
    for mode in junction.lead_l.modes.iter().chain(junction.lead_r.modes.iter()) {
        let g = g_mode_ret(omega, mode)?;
        for i in 0..n {
            for j in 0..n {
                sigma[[i, j]] += mode.coupling[i] * mode.coupling[j].conj() * g;
            }
        }
    }
    Ok(sigma)
}

/// Retarded system Green's function G^r(omega) = (omega - H_S - Sigma^r)^{-1}.
/// Complex omega allowed with Im >= 0 (used by the pole-sum evaluation).
pub fn green_ret(omega: C64, junction: &JunctionModel) -> Result<Array2<C64>> {
    let n = junction.dim();
    let sigma = self_energy_ret(omega, junction)?;
    let mut a = Array2::<C64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = -junction.system.matrix()[[i, j]] - sigma[[i, j]];
        }
        a[[i, i]] += omega;
    }
    invert(&a)
}

/// G^a(omega) at real omega, the conjugate transpose of G^r.
pub fn green_adv(omega: f64, junction: &JunctionModel) -> Result<Array2<C64>> {
    Ok(adjoint(&green_ret(C64::new(omega, 0.0), junction)?))
}

fn invert(a: &Array2<C64>) -> Result<Array2<C64>> {
    match a.inv() {
        Ok(inv) => Ok(inv),
        Err(_) => {
            let condition = a.opnorm_one().unwrap_or(f64::INFINITY);
            Err(Error::Computation {
                msg: "resolvent matrix is numerically singular".into(),
                condition,
            })
        }
    }
}

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Unweighted spectral density of one lead:
/// Gamma^alpha(omega) = sum_k v_k v_k^dagger gamma_k / ((omega-omega_k)^2 + gamma_k^2/4).
pub fn spectral_density(omega: f64, lead: &Lead) -> Result<Array2<C64>> {
    weighted_sum(omega, lead, |_| Ok(1.0))
}

/// Weighted spectral density: each mode's Lorentzian carries the occupation
/// evaluated at the mode frequency omega_k, not at omega.
pub fn weighted_spectral_density(
    omega: f64,
    lead: &Lead,
    fermi_params: &FermiParameters,
    side: LeadLabel,
) -> Result<Array2<C64>> {
    let mu = fermi_params.mu(side);
    let t = fermi_params.temperature;
    weighted_sum(omega, lead, |mode| fermi(mode.omega, mu, t))
}

fn weighted_sum(
    omega: f64,
    lead: &Lead,
    weight: impl Fn(&ReservoirMode) -> Result<f64>,
) -> Result<Array2<C64>> {
    let n = lead.site_count();
    let mut gamma = Array2::<C64>::zeros((n, n));
    for mode in &lead.modes {
        if !(mode.gamma > 0.0) {
            return Err(Error::Domain("spectral density requires gamma_k > 0".into()));
        }
        let d = omega - mode.omega;
        let lorentz = mode.gamma / (d * d + 0.25 * mode.gamma * mode.gamma);
        let w = weight(mode)? * lorentz;
        for i in 0..n {
            for j in 0..n {
                gamma[[i, j]] += mode.coupling[i] * mode.coupling[j].conj() * w;
            }
        }
    }
    Ok(gamma)
}

/// Markovian vs non-Markovian variant of the mode lesser function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LesserKind {
    /// Occupation frozen at the mode frequency, f(omega_k).
    Markovian,
    /// Occupation follows the running frequency, f(omega).
    NonMarkovian,
}

/// Mode lesser Green's function, i f gamma_k / ((omega-omega_k)^2 + gamma_k^2/4),
/// with f evaluated per `kind`.
pub fn g_mode_lesser(
    omega: f64,
    mode: &ReservoirMode,
    mu: f64,
    temperature: f64,
    kind: LesserKind,
) -> Result<C64> {
    if !(mode.gamma > 0.0) {
        return Err(Error::Domain("lesser function requires gamma_k > 0".into()));
    }
    let f = match kind {
        LesserKind::Markovian => fermi(mode.omega, mu, temperature)?,
        LesserKind::NonMarkovian => fermi(omega, mu, temperature)?,
    };
    let d = omega - mode.omega;
    let lorentz = mode.gamma / (d * d + 0.25 * mode.gamma * mode.gamma);
    Ok(C64::new(0.0, f * lorentz))
}

/// One frequency sample of all spectral objects, with the cross-consistency
/// invariants holding by construction.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    pub omega: f64,
    pub gamma_l: Array2<C64>,
    pub gamma_r: Array2<C64>,
    pub gamma_l_weighted: Array2<C64>,
    pub gamma_r_weighted: Array2<C64>,
    pub g_ret: Array2<C64>,
    pub g_adv: Array2<C64>,
}

pub fn sample(omega: f64, junction: &JunctionModel, fermi_params: &FermiParameters) -> Result<SpectralSample> {
    let g_ret = green_ret(C64::new(omega, 0.0), junction)?;
    let g_adv = adjoint(&g_ret);
    Ok(SpectralSample {
        omega,
        gamma_l: spectral_density(omega, &junction.lead_l)?,
        gamma_r: spectral_density(omega, &junction.lead_r)?,
        gamma_l_weighted: weighted_spectral_density(omega, &junction.lead_l, fermi_params, LeadLabel::Left)?,
        gamma_r_weighted: weighted_spectral_density(omega, &junction.lead_r, fermi_params, LeadLabel::Right)?,
        g_ret,
        g_adv,
    })
}

/// Max-norm of the worst residual of
/// G^r - G^a = -i G^r (Gamma^L + Gamma^R) G^a = -i G^a (Gamma^L + Gamma^R) G^r.
pub fn verify_resolvent_identity(omega: f64, junction: &JunctionModel) -> Result<f64> {
    let g_r = green_ret(C64::new(omega, 0.0), junction)?;
    let g_a = adjoint(&g_r);
    let gamma = {
        let mut g = spectral_density(omega, &junction.lead_l)?;
        g += &spectral_density(omega, &junction.lead_r)?;
        g
    };
    let diff = &g_r - &g_a;
    let i = C64::new(0.0, 1.0);
    let lhs_ra = &diff + &(g_r.dot(&gamma).dot(&g_a).mapv(|z| i * z));
    let lhs_ar = &diff + &(g_a.dot(&gamma).dot(&g_r).mapv(|z| i * z));
    Ok(max_abs(&lhs_ra).max(max_abs(&lhs_ar)))
}

/// Max-norm residual of the identical-reservoir identity
/// G^r - G^a = -2i G^a Gamma^R G^r = -2i G^a Gamma^L G^r.
pub fn verify_identical_reservoir_identity(omega: f64, junction: &JunctionModel) -> Result<f64> {
    if !junction.identical_reservoirs {
        return Err(Error::Usage(
            "identical-reservoir identity requires mode-by-mode equal leads".into(),
        ));
    }
    let g_r = green_ret(C64::new(omega, 0.0), junction)?;
    let g_a = adjoint(&g_r);
    let diff = &g_r - &g_a;
    let two_i = C64::new(0.0, 2.0);
    let mut worst: f64 = 0.0;
    for lead in [&junction.lead_l, &junction.lead_r] {
        let gamma = spectral_density(omega, lead)?;
        let res = &diff + &(g_a.dot(&gamma).dot(&g_r).mapv(|z| two_i * z));
        worst = worst.max(max_abs(&res));
    }
    Ok(worst)
}

pub fn max_abs(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Smallest eigenvalue of a Hermitian matrix (PSD checks).
pub fn min_eigenvalue_hermitian(a: &Array2<C64>) -> Result<f64> {
    let (vals, _) = a.eigh(UPLO::Lower).map_err(|e| Error::Computation {
        msg: format!("Hermitian eigensolve failed: {e}"),
        condition: f64::NAN,
    })?;
    Ok(vals.iter().cloned().fold(f64::INFINITY, f64::min))
}
