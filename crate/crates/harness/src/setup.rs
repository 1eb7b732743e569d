//! Initial data from a configuration.

use num_complex::Complex64;
use vmlimit_core::fields::init_em_state;
use vmlimit_core::multifluid::moments;
use vmlimit_core::spectral::{curl, divergence, gradient, leray_project, norm_sq, solve_poisson};
use vmlimit_core::{EmState, Phase, PhaseEnsemble, SpectralField};

use crate::config::{MagneticData, ModeSpec, RunConfig};
use crate::error::HarnessError;

fn apply_modes(f: &mut SpectralField, modes: &[ModeSpec]) {
    for m in modes {
        if m.cos != 0.0 {
            f.add_cos(m.c, &m.k, m.cos);
        }
        if m.sin != 0.0 {
            f.add_sin(m.c, &m.k, m.sin);
        }
    }
}

/// Phases of the configuration, carrying `eps`.
pub fn build_ensemble(cfg: &RunConfig, eps: f64) -> Result<PhaseEnsemble, HarnessError> {
    let (d, k) = (cfg.run.dim, cfg.run.cutoff);
    let phases = cfg
        .phases
        .iter()
        .map(|p| {
            let mut rho = SpectralField::constant(d, k, &[p.rho_mean]);
            apply_modes(&mut rho, &p.rho);
            let mut xi = SpectralField::constant(d, k, &p.xi_mean);
            apply_modes(&mut xi, &p.xi);
            Phase { weight: p.weight, rho, xi }
        })
        .collect();
    Ok(PhaseEnsemble::new(eps, phases)?)
}

/// `B⁰ = curl(ε(-Δ)⁻¹ P j⁰)`: the magnetic field balancing the initial current.
pub fn quasi_static_b0(ens: &PhaseEnsemble) -> Result<SpectralField, HarnessError> {
    let j = moments(ens, 1.0).current;
    let mut a = leray_project(&j)?;
    for c in 0..a.components() {
        for i in 0..a.modes() {
            let k2 = norm_sq(&a.mode(i));
            let z = &mut a.block_mut(c)[i];
            *z = if k2 == 0.0 { Complex64::new(0.0, 0.0) } else { *z * (ens.eps / k2) };
        }
    }
    Ok(curl(&a)?)
}

/// Initial magnetic field, already scaled by `ε^{-γ}`; `None` in one dimension or for `eps = 0`.
pub fn initial_b0(cfg: &RunConfig, ens: &PhaseEnsemble) -> Result<Option<SpectralField>, HarnessError> {
    let (d, k) = (cfg.run.dim, cfg.run.cutoff);
    if d == 1 || ens.eps == 0.0 {
        return Ok(None);
    }
    let scale = ens.eps.powf(-cfg.fields.gamma);
    let nb = if d == 2 { 1 } else { 3 };
    let b = match cfg.fields.b0 {
        MagneticData::Zero => return Ok(None),
        MagneticData::QuasiStatic => quasi_static_b0(ens)?,
        MagneticData::Modes => {
            let mut b = SpectralField::zeros(d, k, nb);
            apply_modes(&mut b, &cfg.fields.b0_modes);
            if d == 3 {
                let r = divergence(&b)?.max_abs_coeff();
                if r > 1e-12 {
                    return Err(HarnessError::Validation(format!("b0_modes are not divergence-free ({r})")));
                }
            }
            b
        }
    };
    Ok(Some(b.scaled(scale)))
}

/// `E⁰ = -∇φ⁰` plus the configured transverse part scaled by `ε^{-γ}` when `eps > 0`.
pub fn initial_e0(cfg: &RunConfig, ens: &PhaseEnsemble) -> Result<SpectralField, HarnessError> {
    let (d, k) = (cfg.run.dim, cfg.run.cutoff);
    let phi = solve_poisson(&ens.total_density())?;
    let mut e = gradient(&phi)?.scaled(-1.0);
    if ens.eps > 0.0 && !cfg.fields.e_transverse.is_empty() {
        let mut t = SpectralField::zeros(d, k, d);
        apply_modes(&mut t, &cfg.fields.e_transverse);
        let r = divergence(&t)?.max_abs_coeff();
        if r > 1e-12 {
            return Err(HarnessError::Validation(format!("e_transverse is not divergence-free ({r})")));
        }
        e = e.plus_scaled(ens.eps.powf(-cfg.fields.gamma), &t);
    }
    Ok(e)
}

/// Fluid and field state at `eps`; `eps = 0` gives the electrostatic state.
pub fn initial_state(cfg: &RunConfig, eps: f64) -> Result<(PhaseEnsemble, EmState), HarnessError> {
    let ens = build_ensemble(cfg, eps)?;
    let e0 = initial_e0(cfg, &ens)?;
    let b0 = initial_b0(cfg, &ens)?;
    let em = init_em_state(&ens.total_density(), &e0, b0.as_ref(), eps, &ens.momentum_mean())?;
    Ok((ens, em))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SMALL2D;

    #[test]
    fn bundled_data_is_normalized() {
        let cfg = RunConfig::from_toml(SMALL2D).unwrap();
        for eps in [0.0, 0.2] {
            let (ens, em) = initial_state(&cfg, eps).unwrap();
            assert!(ens.momentum_mean().iter().all(|m| m.abs() < 1e-14));
            let (div, mean) = em.gauge_residual();
            assert!(div < 1e-12 && mean < 1e-14);
        }
    }
}
