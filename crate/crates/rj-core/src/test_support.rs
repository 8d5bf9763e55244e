//! Shared helpers for unit tests across modules.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;

use crate::model::{JunctionModel, Lead, LeadLabel, ReservoirMode, SystemHamiltonian};

/// Random Hermitian junction with random leads; `identical` clones lead L
/// into lead R mode-by-mode.
pub(crate) fn random_junction(rng: &mut impl Rng, ns: usize, identical: bool) -> JunctionModel {
    let mut h = Array2::<C64>::zeros((ns, ns));
    for i in 0..ns {
        h[[i, i]] = C64::new(rng.gen_range(-1.0..1.0), 0.0);
        for j in (i + 1)..ns {
            let z = C64::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
            h[[i, j]] = z;
            h[[j, i]] = z.conj();
        }
    }
    let mut mk_lead = |label, n_modes: usize| {
        let modes = (0..n_modes)
            .map(|_| {
                let coupling = (0..ns)
                    .map(|_| C64::new(rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)))
                    .collect();
                ReservoirMode::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.01..1.0), coupling)
                    .unwrap()
            })
            .collect();
        Lead::new(modes, label).unwrap()
    };
    let lead_l = mk_lead(LeadLabel::Left, if identical { 6 } else { 5 });
    let lead_r = if identical {
        let mut r = lead_l.clone();
        r.label = LeadLabel::Right;
        r
    } else {
        mk_lead(LeadLabel::Right, 7)
    };
    JunctionModel::new(SystemHamiltonian::new(h).unwrap(), lead_l, lead_r).unwrap()
}
