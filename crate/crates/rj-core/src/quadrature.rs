//! Adaptive frequency integration for integrands built from sums of
//! Lorentzians. Panels start at every supplied pole; refinement bisects
//! the panel with the largest embedded-rule error estimate.

use crate::error::{Error, Result};

/// Tolerances and windowing policy for the omega integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Window extends this multiple of the largest gamma beyond the extreme poles.
    pub window_pad: f64,
    pub max_panels: usize,
    pub split_at_poles: bool,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            window_pad: 40.0,
            max_panels: 20_000,
            split_at_poles: true,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be > 0".into()));
        }
        if self.max_panels == 0 {
            return Err(Error::Domain("max_panels must be >= 1".into()));
        }
        Ok(())
    }
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1] (symmetric half listed).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for i in 0..7 {
        let dx = half * XGK[i];
        let fsum = f(center - dx) + f(center + dx);
        kronrod += fsum * WGK[i];
        if i % 2 == 1 {
            gauss += fsum * WG[i / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Panel { a, b, value, error }
}

/// Integrates `f` over the whole real line: a padded pole window plus the
/// two tails under the compactifying map w = a +/- s*u/(1-u). The integrand
/// must decay at least as 1/w^2. Returns the value and an error estimate.
pub fn integrate_omega(
    mut f: impl FnMut(f64) -> f64,
    poles: &[f64],
    gamma_scale: f64,
    config: &QuadratureConfig,
) -> Result<(f64, f64)> {
    config.validate()?;
    let (lo, hi) = default_window(poles, gamma_scale, config);
    let (v0, e0) = integrate_window(&mut f, poles, lo, hi, config)?;

    // tails, each on u in [0,1); the map scale follows the window size
    let scale = (hi - lo).max(1.0);
    let tail_cfg = QuadratureConfig {
        max_panels: (config.max_panels / 4).max(8),
        ..config.clone()
    };
    let (v_hi, e_hi) = integrate_window(
        &mut |u: f64| {
            let d = 1.0 - u;
            f(hi + scale * u / d) * scale / (d * d)
        },
        &[],
        0.0,
        1.0,
        &tail_cfg,
    )?;
    let (v_lo, e_lo) = integrate_window(
        &mut |u: f64| {
            let d = 1.0 - u;
            f(lo - scale * u / d) * scale / (d * d)
        },
        &[],
        0.0,
        1.0,
        &tail_cfg,
    )?;
    Ok((v0 + v_hi + v_lo, e0 + e_hi + e_lo))
}

/// Same adaptive rule on an explicit window [lo, hi]; poles inside the
/// window still seed initial panel boundaries.
pub fn integrate_window(
    f: &mut impl FnMut(f64) -> f64,
    poles: &[f64],
    lo: f64,
    hi: f64,
    config: &QuadratureConfig,
) -> Result<(f64, f64)> {
    config.validate()?;
    if !(hi > lo) {
        return Ok((0.0, 0.0));
    }

    let mut cuts = vec![lo];
    if config.split_at_poles {
        let mut inner: Vec<f64> = poles
            .iter()
            .copied()
            .filter(|&p| p > lo && p < hi)
            .collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
        inner.dedup();
        cuts.extend(inner);
    }
    cuts.push(hi);
    if cuts.len() - 1 > config.max_panels {
        return Err(Error::Domain(format!(
            "max_panels {} is below the {} initial panels",
            config.max_panels,
            cuts.len() - 1
        )));
    }

    let mut panels: Vec<Panel> = cuts
        .windows(2)
        .map(|w| gk15(f, w[0], w[1]))
        .collect();

    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let target = config.rel_tol * total.abs() + config.abs_tol;
        if err <= target {
            return Ok((total, err));
        }
        if panels.len() >= config.max_panels {
            return Err(Error::Accuracy { value: total, achieved_error: err });
        }
        // bisect the worst panel
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.error.partial_cmp(&b.1.error).unwrap())
            .unwrap();
        let p = panels[worst];
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // panel is at floating-point resolution; accept what we have
            return Ok((total, err));
        }
        panels[worst] = gk15(f, p.a, mid);
        panels.push(gk15(f, mid, p.b));
    }
}

/// Window [min pole - pad*gamma, max pole + pad*gamma].
pub fn default_window(poles: &[f64], gamma_scale: f64, config: &QuadratureConfig) -> (f64, f64) {
    let pad = config.window_pad * gamma_scale.max(f64::MIN_POSITIVE);
    let lo = poles.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = poles.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi.is_finite() {
        (lo - pad, hi + pad)
    } else {
        (-pad, pad)
    }
}
