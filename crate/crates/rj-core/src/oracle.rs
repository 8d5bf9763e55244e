//! Brute-force reference on the full system + reservoir single-particle
//! space: exact stationary correlation matrix from the Sylvester equation
//! M C + C M^dag = B with M = i h + diag(gamma)/2, plus a fixed-step
//! propagator for the transient. Two independent current estimators guard
//! against solver bugs.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Inverse, Solve};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{fermi, CurrentResult, FermiParameters, JunctionModel, Method};
use crate::spectral::{adjoint, max_abs};

const DEFAULT_MAX_DIM: usize = 2000;

/// Assembled single-particle problem on the [system, L modes, R modes] basis.
#[derive(Debug, Clone)]
pub struct FullSpaceModel {
    pub n_sys: usize,
    pub n_left: usize,
    pub n_right: usize,
    /// Hermitian full-space Hamiltonian.
    pub h_full: Array2<C64>,
    /// gamma_k on reservoir entries, 0 on system entries.
    pub relax_diag: Array1<f64>,
    /// gamma_k * f~_k on reservoir entries, 0 on system entries.
    pub target_diag: Array1<f64>,
}

impl FullSpaceModel {
    pub fn dim(&self) -> usize {
        self.n_sys + self.n_left + self.n_right
    }

    fn min_reservoir_gamma(&self) -> f64 {
        self.relax_diag
            .iter()
            .skip(self.n_sys)
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Target occupations f~_k on reservoir entries (0 on system entries).
    pub fn target_occupations(&self) -> Array1<f64> {
        let mut f = Array1::zeros(self.dim());
        for k in self.n_sys..self.dim() {
            f[k] = self.target_diag[k] / self.relax_diag[k];
        }
        f
    }
}

/// Builds the full-space model with basis order [system sites, L modes, R modes]
/// and coupling block H_{i,k} = (v_k)_i.
pub fn assemble_full_space(junction: &JunctionModel, fermi_params: &FermiParameters) -> Result<FullSpaceModel> {
    let n_sys = junction.dim();
    let n_left = junction.lead_l.modes.len();
    let n_right = junction.lead_r.modes.len();
    let n_tot = n_sys + n_left + n_right;
    if n_tot > DEFAULT_MAX_DIM {
        return Err(Error::Usage(format!(
            "full-space dimension {n_tot} exceeds the {DEFAULT_MAX_DIM} cap"
        )));
    }

    let mut h = Array2::<C64>::zeros((n_tot, n_tot));
    for i in 0..n_sys {
        for j in 0..n_sys {
            h[[i, j]] = junction.system.matrix()[[i, j]];
        }
    }
    let mut relax = Array1::<f64>::zeros(n_tot);
    let mut target = Array1::<f64>::zeros(n_tot);
    let t = fermi_params.temperature;
    let mut col = n_sys;
    for (modes, mu) in [
        (&junction.lead_l.modes, fermi_params.mu_l),
        (&junction.lead_r.modes, fermi_params.mu_r),
    ] {
        for mode in modes.iter() {
            h[[col, col]] = C64::new(mode.omega, 0.0);
            for i in 0..n_sys {
                h[[i, col]] = mode.coupling[i];
                h[[col, i]] = mode.coupling[i].conj();
            }
            if !(mode.gamma > 0.0) {
                return Err(Error::Model("oracle requires gamma_k > 0 on every mode".into()));
            }
            relax[col] = mode.gamma;
            target[col] = mode.gamma * fermi(mode.omega, mu, t)?;
            col += 1;
        }
    }
    Ok(FullSpaceModel { n_sys, n_left, n_right, h_full: h, relax_diag: relax, target_diag: target })
}

/// Hermitian single-particle correlation matrix, with the residual of the
/// stationarity equation it solved.
#[derive(Debug, Clone)]
pub struct CorrelationMatrix {
    pub matrix: Array2<C64>,
    pub residual: f64,
}

fn drift_matrix(model: &FullSpaceModel) -> Array2<C64> {
    let n = model.dim();
    let mut m = model.h_full.mapv(|z| C64::new(0.0, 1.0) * z);
    for k in 0..n {
        m[[k, k]] += C64::new(0.5 * model.relax_diag[k], 0.0);
    }
    m
}

fn source_matrix(model: &FullSpaceModel) -> Array2<C64> {
    Array2::from_diag(&model.target_diag.mapv(|g| C64::new(g, 0.0)))
}

/// Max-abs residual of M C + C M^dag - B for a candidate correlation matrix.
pub fn stationarity_residual(model: &FullSpaceModel, c: &Array2<C64>) -> f64 {
    residual_of(model, c)
}

fn residual_of(model: &FullSpaceModel, c: &Array2<C64>) -> f64 {
    let m = drift_matrix(model);
    let b = source_matrix(model);
    let r = &m.dot(c) + &c.dot(&adjoint(&m)) - &b;
    max_abs(&r)
}

/// Solves M C + C M^dag = B by eigen-decomposition of M, with a vectorized
/// dense solve as the small-dimension fallback.
pub fn solve_steady_state(model: &FullSpaceModel) -> Result<CorrelationMatrix> {
    if !(model.min_reservoir_gamma() > 0.0) {
        return Err(Error::Usage(
            "stationary state requires strictly positive relaxation on every reservoir mode".into(),
        ));
    }
    let c = match solve_by_eigenbasis(model) {
        Ok(c) if residual_of(model, &c) < 1e-8 => c,
        _ => solve_vectorized(model)?,
    };
    // Hermitian symmetrization
    let c = (&c + &adjoint(&c)).mapv(|z| 0.5 * z);
    let residual = residual_of(model, &c);
    if !residual.is_finite() {
        return Err(Error::Computation {
            msg: "steady-state residual is not finite".into(),
            condition: f64::NAN,
        });
    }
    Ok(CorrelationMatrix { matrix: c, residual })
}

fn solve_by_eigenbasis(model: &FullSpaceModel) -> Result<Array2<C64>> {
    let m = drift_matrix(model);
    let (eigs, vecs) = m.eig().map_err(|e| Error::Computation {
        msg: format!("eigendecomposition of the drift matrix failed: {e}"),
        condition: f64::NAN,
    })?;
    let w = vecs.inv().map_err(|_| Error::Computation {
        msg: "drift eigenbasis is numerically defective".into(),
        condition: f64::NAN,
    })?;
    let b = source_matrix(model);
    let b_p = w.dot(&b).dot(&adjoint(&w));
    let n = model.dim();
    let mut c_p = Array2::<C64>::zeros((n, n));
    for a in 0..n {
        for bb in 0..n {
            let denom = eigs[a] + eigs[bb].conj();
            if denom.norm() < 1e-12 {
                if b_p[[a, bb]].norm() < 1e-12 {
                    continue; // decoupled stationary direction with no source
                }
                return Err(Error::Computation {
                    msg: "vanishing eigenvalue pair with nonzero source".into(),
                    condition: 1.0 / denom.norm().max(f64::MIN_POSITIVE),
                });
            }
            c_p[[a, bb]] = b_p[[a, bb]] / denom;
        }
    }
    Ok(vecs.dot(&c_p).dot(&adjoint(&vecs)))
}

/// Kronecker-vectorized dense solve; memory-hungry, kept for small models
/// where the eigenbasis route misbehaves.
fn solve_vectorized(model: &FullSpaceModel) -> Result<Array2<C64>> {
    let n = model.dim();
    if n > 64 {
        return Err(Error::Computation {
            msg: format!("vectorized fallback refused for dimension {n} > 64"),
            condition: f64::NAN,
        });
    }
    let m = drift_matrix(model);
    let b = source_matrix(model);
    let nn = n * n;
    let mut big = Array2::<C64>::zeros((nn, nn));
    // row-major vec(C): index (i, j) -> i*n + j
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                big[[row, k * n + j]] += m[[i, k]];
                big[[row, i * n + k]] += m[[j, k]].conj();
            }
        }
    }
    let rhs = Array1::from_iter((0..nn).map(|idx| b[[idx / n, idx % n]]));
    let sol = big.solve(&rhs).map_err(|_| Error::Computation {
        msg: "vectorized Sylvester solve failed".into(),
        condition: f64::NAN,
    })?;
    Ok(Array2::from_shape_fn((n, n), |(i, j)| sol[i * n + j]))
}

/// Steady-state current from the correlation matrix: the mean of the
/// injection-balance and bond-current estimators, which must agree.
pub fn current_from_state(model: &FullSpaceModel, state: &CorrelationMatrix) -> Result<CurrentResult> {
    if !(state.residual < 1e-8) {
        return Err(Error::Usage(format!(
            "correlation matrix residual {:.3e} too large for current extraction",
            state.residual
        )));
    }
    let i_inject = injection_current(model, state, true);
    let i_bond = bond_current(model, state, true);
    let scale = i_inject.abs().max(i_bond.abs()).max(1e-300);
    let spread = (i_inject - i_bond).abs() / scale;
    if spread > 1e-6 && i_inject.abs().max(i_bond.abs()) > 1e-12 {
        return Err(Error::Consistency {
            msg: format!("current estimators disagree: injection {i_inject:.12e}, bond {i_bond:.12e}"),
            spread,
        });
    }
    let value = 0.5 * (i_inject + i_bond);
    Ok(CurrentResult::new(value, Method::OracleSylvester, state.residual)
        .with_diagnostic("estimator_spread", spread)
        .with_diagnostic("residual", state.residual)
        .with_diagnostic("injection_current", i_inject)
        .with_diagnostic("bond_current", i_bond))
}

/// I_alpha = sum_{k in alpha} gamma_k (f~_k - C_kk): net injection from the
/// relaxation into lead alpha's modes.
pub fn injection_current(model: &FullSpaceModel, state: &CorrelationMatrix, left: bool) -> f64 {
    let (start, end) = if left {
        (model.n_sys, model.n_sys + model.n_left)
    } else {
        (model.n_sys + model.n_left, model.dim())
    };
    let mut total = 0.0;
    for k in start..end {
        total += model.target_diag[k] - model.relax_diag[k] * state.matrix[[k, k]].re;
    }
    total
}

/// Coherent particle flow from lead alpha's modes into the system:
/// 2 sum_{k in alpha, i in S} Im(H_{ik} C_{ki}).
pub fn bond_current(model: &FullSpaceModel, state: &CorrelationMatrix, left: bool) -> f64 {
    let (start, end) = if left {
        (model.n_sys, model.n_sys + model.n_left)
    } else {
        (model.n_sys + model.n_left, model.dim())
    };
    let mut total = 0.0;
    for k in start..end {
        for i in 0..model.n_sys {
            total += 2.0 * (model.h_full[[i, k]] * state.matrix[[k, i]]).im;
        }
    }
    total
}

/// One sampled point of the transient.
#[derive(Debug, Clone)]
pub struct TrajectoryPoint {
    pub time: f64,
    pub current: f64,
    pub state: Array2<C64>,
}

/// Fixed-step classical 4th-order integration of
/// dC/dt = -i[h, C] - 1/2 {diag(gamma), C} + diag(gamma f~).
/// Samples every `record_every` steps (and always the final state).
pub fn time_evolve(
    model: &FullSpaceModel,
    c0: &Array2<C64>,
    t_final: f64,
    dt: f64,
    record_every: usize,
) -> Result<Vec<TrajectoryPoint>> {
    if !(dt > 0.0) || !(t_final > 0.0) {
        return Err(Error::Domain("time step and final time must be > 0".into()));
    }
    let n = model.dim();
    if c0.dim() != (n, n) {
        return Err(Error::Usage("initial state dimension mismatch".into()));
    }
    let h = &model.h_full;
    let b = source_matrix(model);
    let gamma_half: Array1<f64> = model.relax_diag.mapv(|g| 0.5 * g);

    let deriv = |c: &Array2<C64>| -> Array2<C64> {
        let hc = h.dot(c);
        let ch = c.dot(h);
        let mut d = (&hc - &ch).mapv(|z| C64::new(0.0, -1.0) * z);
        for i in 0..n {
            for j in 0..n {
                d[[i, j]] -= (gamma_half[i] + gamma_half[j]) * c[[i, j]];
            }
        }
        &d + &b
    };

    let steps = (t_final / dt).ceil() as usize;
    let record_every = record_every.max(1);
    let mut c = c0.clone();
    let norm0 = max_abs(&c).max(1.0);
    let mut out = Vec::new();
    let snapshot = |t: f64, c: &Array2<C64>| {
        let state = CorrelationMatrix { matrix: c.clone(), residual: 0.0 };
        TrajectoryPoint {
            time: t,
            current: bond_current(model, &state, true),
            state: c.clone(),
        }
    };
    out.push(snapshot(0.0, &c));
    for step in 1..=steps {
        let k1 = deriv(&c);
        let k2 = deriv(&(&c + &k1.mapv(|z| 0.5 * dt * z)));
        let k3 = deriv(&(&c + &k2.mapv(|z| 0.5 * dt * z)));
        let k4 = deriv(&(&c + &k3.mapv(|z| dt * z)));
        c = &c + &(&(&k1 + &k4) + &(&(&k2 + &k3) * C64::new(2.0, 0.0))).mapv(|z| dt / 6.0 * z);
        if max_abs(&c) > 100.0 * norm0 {
            return Err(Error::Domain(format!(
                "integration unstable at step {step}: reduce dt (norm grew 100x)"
            )));
        }
        if step % record_every == 0 || step == steps {
            out.push(snapshot(step as f64 * dt, &c));
        }
    }
    Ok(out)
}

/// Conservative default step: 0.01 / max(row norm of h, gamma_max).
pub fn default_time_step(model: &FullSpaceModel) -> f64 {
    let n = model.dim();
    let mut row_norm: f64 = 0.0;
    for i in 0..n {
        let r: f64 = (0..n).map(|j| model.h_full[[i, j]].norm()).sum();
        row_norm = row_norm.max(r);
    }
    let gamma_max = model.relax_diag.iter().cloned().fold(0.0, f64::max);
    0.01 / row_norm.max(gamma_max).max(1e-12)
}

/// Equilibrium (decoupled) initial state: reservoir modes at their targets,
/// system sites empty.
pub fn decoupled_initial_state(model: &FullSpaceModel) -> Array2<C64> {
    Array2::from_diag(&model.target_occupations().mapv(|f| C64::new(f, 0.0)))
}
