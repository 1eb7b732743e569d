//! Differential operators, products and elliptic solvers.

use num_complex::Complex64;

use super::grid::{from_grid, to_grid};
use super::{norm_sq, SpectralError, SpectralField};

/// Default tolerance on `|⟨ρ⟩ - 1|` for the Poisson solve.
pub const DEFAULT_NEUTRALITY_TOL: f64 = 1e-10;

const DIV_FREE_TOL: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<(), SpectralError> {
    if cond {
        Ok(())
    } else {
        Err(SpectralError::DimensionMismatch(msg()))
    }
}

/// `∂_a^order f`, applied to every component.
pub fn derivative(f: &SpectralField, axis: usize, order: u32) -> Result<SpectralField, SpectralError> {
    require(axis < f.dim(), || format!("axis {axis} in dimension {}", f.dim()))?;
    let mut out = f.clone();
    let m = f.modes();
    for c in 0..f.components() {
        let b = out.block_mut(c);
        for (i, z) in b.iter_mut().enumerate().take(m) {
            let k = super::mode_of(f.dim(), f.cutoff(), i)[axis] as f64;
            *z *= (I * k).powu(order);
        }
    }
    Ok(out)
}

/// Gradient of a scalar field.
pub fn gradient(f: &SpectralField) -> Result<SpectralField, SpectralError> {
    require(f.components() == 1, || "gradient of a vector field".into())?;
    let parts = (0..f.dim())
        .map(|a| derivative(f, a, 1))
        .collect::<Result<Vec<_>, _>>()?;
    SpectralField::from_components(&parts)
}

/// Divergence of a `d`-component field.
pub fn divergence(f: &SpectralField) -> Result<SpectralField, SpectralError> {
    let d = f.dim();
    require(f.components() == d, || format!("divergence of {} components", f.components()))?;
    let mut out = SpectralField::zeros(d, f.cutoff(), 1);
    for i in 0..f.modes() {
        let k = f.mode(i);
        let mut s = Complex64::new(0.0, 0.0);
        for (a, &ka) in k.iter().enumerate().take(d) {
            s += f.block(a)[i] * (I * ka as f64);
        }
        out.block_mut(0)[i] = s;
    }
    Ok(out)
}

/// Curl: a scalar in two dimensions, a vector in three.
pub fn curl(f: &SpectralField) -> Result<SpectralField, SpectralError> {
    let d = f.dim();
    require(d >= 2 && f.components() == d, || "curl needs d in {2, 3} components".into())?;
    let ncomp = if d == 2 { 1 } else { 3 };
    let mut out = SpectralField::zeros(d, f.cutoff(), ncomp);
    for i in 0..f.modes() {
        let k = f.mode(i);
        let ik = [I * k[0] as f64, I * k[1] as f64, I * k[2] as f64];
        if d == 2 {
            out.block_mut(0)[i] = ik[0] * f.block(1)[i] - ik[1] * f.block(0)[i];
        } else {
            let (a0, a1, a2) = (f.block(0)[i], f.block(1)[i], f.block(2)[i]);
            out.block_mut(0)[i] = ik[1] * a2 - ik[2] * a1;
            out.block_mut(1)[i] = ik[2] * a0 - ik[0] * a2;
            out.block_mut(2)[i] = ik[0] * a1 - ik[1] * a0;
        }
    }
    Ok(out)
}

/// Product truncated to the cutoff cube, computed without aliasing on the grid.
///
/// A scalar factor broadcasts over the components of the other; otherwise the
/// product is componentwise.
pub fn multiply(f: &SpectralField, g: &SpectralField) -> Result<SpectralField, SpectralError> {
    require(f.dim() == g.dim() && f.cutoff() == g.cutoff(), || "operands on different cubes".into())?;
    let (mf, mg) = (f.components(), g.components());
    require(mf == mg || mf == 1 || mg == 1, || format!("{mf} vs {mg} components"))?;
    let m = mf.max(mg);
    let fv = to_grid(f);
    let gv = to_grid(g);
    let np = fv.len() / mf;
    let mut out = vec![0.0; np * m];
    for c in 0..m {
        let fo = if mf == 1 { 0 } else { c * np };
        let go = if mg == 1 { 0 } else { c * np };
        for p in 0..np {
            out[c * np + p] = fv[fo + p] * gv[go + p];
        }
    }
    Ok(from_grid(f.dim(), f.cutoff(), m, &out))
}

/// Pointwise dot product of two vector fields with equal component count.
pub fn dot(f: &SpectralField, g: &SpectralField) -> Result<SpectralField, SpectralError> {
    require(f.same_shape(g), || "dot of differently shaped fields".into())?;
    let fv = to_grid(f);
    let gv = to_grid(g);
    let np = fv.len() / f.components();
    let mut out = vec![0.0; np];
    for c in 0..f.components() {
        for p in 0..np {
            out[p] += fv[c * np + p] * gv[c * np + p];
        }
    }
    Ok(from_grid(f.dim(), f.cutoff(), 1, &out))
}

/// Number of Taylor terms kept by [`compose_analytic`].
pub const DEFAULT_TAYLOR_TERMS: usize = 24;

/// `F(f) = Σ_{n<N} a_n f^n` by Horner's rule, truncating after every product.
///
/// Coefficients beyond [`DEFAULT_TAYLOR_TERMS`] are dropped and their
/// majorant `Σ |a_n| |f|₁ⁿ` is logged.
pub fn compose_analytic(taylor: &[f64], f: &SpectralField) -> Result<SpectralField, SpectralError> {
    if taylor.is_empty() || taylor.iter().any(|a| !a.is_finite()) {
        return Err(SpectralError::NonAnalytic);
    }
    require(f.components() == 1, || "composition needs a scalar field".into())?;
    let kept = &taylor[..taylor.len().min(DEFAULT_TAYLOR_TERMS)];
    if taylor.len() > kept.len() {
        let r = super::norm::weighted_l1(f, 1.0, super::ModeNorm::Euclidean);
        let tail: f64 = taylor[kept.len()..]
            .iter()
            .enumerate()
            .map(|(i, a)| a.abs() * r.powi((kept.len() + i) as i32))
            .sum();
        log::debug!("composition tail majorant {tail:e}");
    }
    let (d, k) = (f.dim(), f.cutoff());
    let mut acc = SpectralField::constant(d, k, &[*kept.last().expect("non-empty")]);
    for &a in kept.iter().rev().skip(1) {
        acc = multiply(&acc, f)?;
        let z = acc.zero_index();
        acc.block_mut(0)[z] += a;
    }
    Ok(acc)
}

/// Solves `-Δφ = ρ - 1` with `⟨φ⟩ = 0`.
pub fn solve_poisson(rho: &SpectralField) -> Result<SpectralField, SpectralError> {
    solve_poisson_with_tol(rho, DEFAULT_NEUTRALITY_TOL)
}

pub fn solve_poisson_with_tol(rho: &SpectralField, tol: f64) -> Result<SpectralField, SpectralError> {
    require(rho.components() == 1, || "density must be scalar".into())?;
    let mean = rho.mean()[0];
    if (mean - 1.0).abs() > tol {
        return Err(SpectralError::NeutralityViolation { mean, tol });
    }
    let mut phi = rho.clone();
    let z = phi.zero_index();
    for (i, c) in phi.block_mut(0).iter_mut().enumerate() {
        if i == z {
            *c = Complex64::new(0.0, 0.0);
        } else {
            *c /= norm_sq(&super::mode_of(rho.dim(), rho.cutoff(), i));
        }
    }
    Ok(phi)
}

/// Longitudinal part `k (k·F̂) / |k|²` for `k ≠ 0`, zero at `k = 0`.
fn longitudinal(f: &SpectralField) -> SpectralField {
    let d = f.dim();
    let mut out = SpectralField::zeros(d, f.cutoff(), d);
    let z = f.zero_index();
    for i in 0..f.modes() {
        if i == z {
            continue;
        }
        let k = f.mode(i);
        let k2 = norm_sq(&k);
        let mut kf = Complex64::new(0.0, 0.0);
        for (a, &ka) in k.iter().enumerate().take(d) {
            kf += f.block(a)[i] * ka as f64;
        }
        for (a, &ka) in k.iter().enumerate().take(d) {
            out.block_mut(a)[i] = kf * (ka as f64 / k2);
        }
    }
    out
}

/// Leray projection onto divergence-free fields; the mean passes through.
pub fn leray_project(f: &SpectralField) -> Result<SpectralField, SpectralError> {
    require(f.components() == f.dim(), || "Leray projection needs d components".into())?;
    Ok(f.sub(&longitudinal(f)))
}

/// Splits `F = ∇q + w` with `∇·w = 0`; the mean of `F` is carried by `w`.
pub fn helmholtz_decompose(
    f: &SpectralField,
) -> Result<(SpectralField, SpectralField), SpectralError> {
    require(f.components() == f.dim(), || "Helmholtz split needs d components".into())?;
    let g = longitudinal(f);
    let w = f.sub(&g);
    Ok((g, w))
}

/// Vector potential `A` with `curl A = B - ⟨B⟩`, `∇·A = 0` and `⟨A⟩ = 0`.
///
/// In two dimensions `B` is the scalar out-of-plane component.
pub fn biot_savart(b: &SpectralField) -> Result<SpectralField, SpectralError> {
    let d = b.dim();
    let zero = b.zero_index();
    match (d, b.components()) {
        (2, 1) => {
            let mut a = SpectralField::zeros(2, b.cutoff(), 2);
            for i in 0..b.modes() {
                if i == zero {
                    continue;
                }
                let k = b.mode(i);
                let psi = b.block(0)[i] / norm_sq(&k);
                a.block_mut(0)[i] = I * k[1] as f64 * psi;
                a.block_mut(1)[i] = -I * k[0] as f64 * psi;
            }
            Ok(a)
        }
        (3, 3) => {
            let div = divergence(b)?;
            let scale = b.max_abs_coeff().max(1.0);
            let res = div.max_abs_coeff();
            if res > DIV_FREE_TOL * scale {
                return Err(SpectralError::NotDivergenceFree(res));
            }
            let mut a = SpectralField::zeros(3, b.cutoff(), 3);
            for i in 0..b.modes() {
                if i == zero {
                    continue;
                }
                let k = b.mode(i);
                let k2 = norm_sq(&k);
                let ik = [I * k[0] as f64, I * k[1] as f64, I * k[2] as f64];
                let (b0, b1, b2) = (b.block(0)[i], b.block(1)[i], b.block(2)[i]);
                a.block_mut(0)[i] = (ik[1] * b2 - ik[2] * b1) / k2;
                a.block_mut(1)[i] = (ik[2] * b0 - ik[0] * b2) / k2;
                a.block_mut(2)[i] = (ik[0] * b1 - ik[1] * b0) / k2;
            }
            Ok(a)
        }
        _ => Err(SpectralError::DimensionMismatch(format!(
            "magnetic field with {} components in dimension {d}",
            b.components()
        ))),
    }
}
