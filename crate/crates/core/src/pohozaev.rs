//! Energies, the Pohozaev residual and the dilation projection onto the
//! regularized Pohozaev manifold.
//!
//! With `D = ∫|∇u|²` and `Q = ∫G₊(u) − ∫G₋^ε(u)`, the dilation `u(r·)` with
//! `r = (2*Q/D)^{1/2}` satisfies `D = 2*Q`; its energy has the closed form
//! `(1/N) D^{N/2} (2*Q)^{−(N−2)/2}`, which is invariant under dilation of `u`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::grid::{dilate, dirichlet, integrate, Field};
use crate::nonlin::{critical_exponent, Nonlinearity};

/// Relative Pohozaev residual below which a field counts as on the manifold.
pub const MEMBERSHIP_TOL: f64 = 1e-3;

/// Tolerance on `∫u² = 1` for the logarithmic-Sobolev quantities.
pub const MASS_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub dirichlet: f64,
    #[serde(rename = "int_G_plus")]
    pub int_g_plus: f64,
    #[serde(rename = "int_G_minus_eps")]
    pub int_g_minus_eps: f64,
    #[serde(rename = "J_eps")]
    pub j_eps: f64,
    pub pohozaev_residual: f64,
    pub eps: f64,
}

impl EnergyReport {
    /// Builds a report from the three integrals.
    pub fn assemble(dim: usize, dirichlet: f64, int_g_plus: f64, int_g_minus_eps: f64, eps: f64) -> Self {
        let crit = critical_exponent(dim);
        EnergyReport {
            dirichlet,
            int_g_plus,
            int_g_minus_eps,
            j_eps: dirichlet / 2.0 + int_g_minus_eps - int_g_plus,
            pohozaev_residual: dirichlet - crit * (int_g_plus - int_g_minus_eps),
            eps,
        }
    }

    /// `∫G₊ − ∫G₋^ε`.
    pub fn potential(&self) -> f64 {
        self.int_g_plus - self.int_g_minus_eps
    }

    /// Whether `|residual| ≤ 10⁻³·D`.
    pub fn on_manifold(&self) -> bool {
        self.pohozaev_residual.abs() <= MEMBERSHIP_TOL * self.dirichlet
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return domain(format!("eps must lie in [0, 1), got {eps}"));
    }
    Ok(())
}

/// `(∫G₊(u), ∫G₋^ε(u))`.
pub fn potential_parts(u: &Field, nl: &Nonlinearity, eps: f64) -> Result<(f64, f64)> {
    check_eps(eps)?;
    let dim = u.dim();
    let grid = u.grid();
    let plus = grid.try_quadrature(u.values(), |s| nl.split(s).map(|p| p.0))?;
    let minus = grid.try_quadrature(u.values(), |s| nl.primitive_minus_eps(eps, s, dim))?;
    Ok((plus, minus))
}

/// Energy report of `u`; `eps = 0` is the unregularized energy.
pub fn energy(u: &Field, nl: &Nonlinearity, eps: f64) -> Result<EnergyReport> {
    let (plus, minus) = potential_parts(u, nl, eps)?;
    Ok(EnergyReport::assemble(u.dim(), dirichlet(u), plus, minus, eps))
}

fn admissible(u: &Field, nl: &Nonlinearity, eps: f64) -> Result<(f64, f64)> {
    let d = dirichlet(u);
    if d == 0.0 {
        return domain("the zero field has no projection");
    }
    let (plus, minus) = potential_parts(u, nl, eps)?;
    let q = plus - minus;
    if !(q > 0.0) {
        return Err(Error::EmptyAdmissibleSet(format!(
            "∫G₊ − ∫G₋^ε = {q:e} is not positive"
        )));
    }
    Ok((d, q))
}

/// Dilation factor `r(u) = (2*Q/D)^{1/2}` taking `u` onto the manifold.
pub fn projection_factor(u: &Field, nl: &Nonlinearity, eps: f64) -> Result<f64> {
    let (d, q) = admissible(u, nl, eps)?;
    Ok((critical_exponent(u.dim()) * q / d).sqrt())
}

/// `u(r(u)·)`.
pub fn project(u: &Field, nl: &Nonlinearity, eps: f64) -> Result<Field> {
    dilate(u, projection_factor(u, nl, eps)?)
}

/// Level of the projected field from `D` and `Q`, without resampling.
pub fn reduced_level_from(dim: usize, dirichlet: f64, potential: f64) -> f64 {
    let n = dim as f64;
    let crit = critical_exponent(dim);
    // (1/N) D^{N/2} (2*Q)^{−(N−2)/2}, evaluated in logs to avoid overflow
    ((n / 2.0) * dirichlet.ln() - ((n - 2.0) / 2.0) * (crit * potential).ln()).exp() / n
}

/// `J_ε` at the projection of `u`, in closed form.
pub fn reduced_level(u: &Field, nl: &Nonlinearity, eps: f64) -> Result<f64> {
    let (d, q) = admissible(u, nl, eps)?;
    Ok(reduced_level_from(u.dim(), d, q))
}

/// `u(D^{1/(N−2)}·)`, which has unit Dirichlet energy.
pub fn normalize_to_sphere(u: &Field) -> Result<Field> {
    let d = dirichlet(u);
    if d == 0.0 {
        return domain("the zero field cannot be normalized");
    }
    dilate(u, d.powf(1.0 / (u.dim() as f64 - 2.0)))
}

/// Optimal constant `2*·N^{2/(N−2)}·level^{2/(N−2)}` of the Sobolev-type
/// inequality `∫G(u) ≤ C (∫|∇u|²)^{2*/2}` given the least energy `level`.
pub fn sharp_constant(dim: usize, level: f64) -> Result<f64> {
    if dim < 3 {
        return domain(format!("dimension must be at least 3, got {dim}"));
    }
    if !(level > 0.0 && level.is_finite()) {
        return domain(format!("level must be positive, got {level}"));
    }
    let n = dim as f64;
    let e = 2.0 / (n - 2.0);
    Ok(critical_exponent(dim) * n.powf(e) * level.powf(e))
}

fn s2_log(s: f64) -> f64 {
    if s == 0.0 {
        0.0
    } else {
        s * s * s.abs().ln()
    }
}

fn check_unit_mass(u: &Field) -> Result<()> {
    let mass = integrate(u, |s| s * s);
    if (mass - 1.0).abs() > MASS_TOL {
        return domain(format!("field must have ∫u² = 1, got {mass}"));
    }
    Ok(())
}

/// `(N−2)/4 − ∫u² log|u|`, the optimal `α` in the equivalent log-Sobolev form.
pub fn optimal_alpha(u: &Field) -> Result<f64> {
    check_unit_mass(u)?;
    Ok((u.dim() as f64 - 2.0) / 4.0 - integrate(u, s2_log))
}

/// `(N/4) log((2/(πeN)) ∫|∇u|²) − ∫u² log|u|`, nonnegative for unit-mass `u`.
pub fn log_sobolev_gap(u: &Field) -> Result<f64> {
    check_unit_mass(u)?;
    let n = u.dim() as f64;
    let scale = 2.0 / (std::f64::consts::PI * std::f64::consts::E * n);
    Ok((n / 4.0) * (scale * dirichlet(u)).ln() - integrate(u, s2_log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_radial_grid, integrate, sample, Grading, Grid};
    use std::f64::consts::{E, PI};

    fn setup() -> (Grid, Field, Nonlinearity) {
        let g = build_radial_grid(3, 12.0, 8192, Grading::Uniform).unwrap();
        let u = sample(&g, |r| (1.0 - r * r / 2.0).exp()).unwrap();
        (g, u, Nonlinearity::logarithmic())
    }

    #[test]
    fn gausson_energy() {
        let (_, u, nl) = setup();
        let rep = energy(&u, &nl, 0.0).unwrap();
        let level = E * E * PI.powf(1.5) / 2.0;
        assert!((rep.j_eps / level - 1.0).abs() < 1e-3);
        assert!(rep.pohozaev_residual.abs() <= 1e-2);
        assert_eq!(rep.j_eps, rep.dirichlet / 2.0 + rep.int_g_minus_eps - rep.int_g_plus);
    }

    #[test]
    fn zero_field_energy_and_errors() {
        let (g, _, nl) = setup();
        let z = Field::zeros(&g);
        let rep = energy(&z, &nl, 0.0).unwrap();
        assert_eq!((rep.dirichlet, rep.int_g_plus, rep.int_g_minus_eps, rep.j_eps), (0.0, 0.0, 0.0, 0.0));
        assert!(matches!(project(&z, &nl, 0.0), Err(Error::Domain(_))));
        assert!(normalize_to_sphere(&z).is_err());
    }

    #[test]
    fn doubled_gausson() {
        let (_, u, nl) = setup();
        let u2 = u.scale(2.0);
        let rep = energy(&u2, &nl, 0.0).unwrap();
        // G(2u) = 4u²(log u + log 2)
        let m = E * E * PI.powf(1.5);
        let expect_g = 4.0 * (m / 4.0 + 2f64.ln() * m);
        assert!((rep.potential() / expect_g - 1.0).abs() < 1e-3);
        let r = projection_factor(&u2, &nl, 0.0).unwrap();
        let expect_r = (6.0 * expect_g / (4.0 * 1.5 * m)).sqrt();
        assert!((r / expect_r - 1.0).abs() < 1e-3, "{r} vs {expect_r}");
        let lvl = reduced_level(&u2, &nl, 0.0).unwrap();
        let expect_lvl = (6.0 * m).powf(1.5) / (6.0 * expect_g).sqrt() / 3.0;
        assert!((lvl / expect_lvl - 1.0).abs() < 1e-3);
        assert!(lvl > m / 2.0);
    }

    #[test]
    fn projection_lands_on_manifold() {
        let (_, u, nl) = setup();
        let v = project(&u.scale(2.0), &nl, 0.0).unwrap();
        let rep = energy(&v, &nl, 0.0).unwrap();
        assert!(rep.on_manifold(), "{rep:?}");
        let closed = reduced_level(&u.scale(2.0), &nl, 0.0).unwrap();
        assert!((rep.j_eps / closed - 1.0).abs() < 2e-3);
    }

    #[test]
    fn empty_admissible_set() {
        let g = build_radial_grid(3, 12.0, 512, Grading::Uniform).unwrap();
        let nl = Nonlinearity::cubic_quintic(3, 4.0, 0.2).unwrap();
        let u = sample(&g, |r| 1.2 * (-r * r).exp()).unwrap();
        assert!(matches!(reduced_level(&u, &nl, 0.0), Err(Error::EmptyAdmissibleSet(_))));
    }

    #[test]
    fn normalize_gives_unit_dirichlet() {
        let (_, u, _) = setup();
        let v = normalize_to_sphere(&u).unwrap();
        assert!((dirichlet(&v) - 1.0).abs() < 1e-3);
        let w = normalize_to_sphere(&v).unwrap();
        let diff = v.values().iter().zip(w.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-3 * v.sup_norm());
    }

    #[test]
    fn sharp_constant_examples() {
        assert!((sharp_constant(3, 1.0).unwrap() - 54.0).abs() < 1e-12);
        let lvl3 = E * E * PI.powf(1.5) / 2.0;
        let c3 = sharp_constant(3, lvl3).unwrap();
        assert!((c3 - 6.0 * 2.25 * E.powi(4) * PI.powi(3)).abs() < 1e-8 * c3);
        let lvl4 = E.powi(3) * PI * PI / 2.0;
        assert!((sharp_constant(4, lvl4).unwrap() - 16.0 * lvl4).abs() < 1e-10);
        assert!(sharp_constant(3, 0.0).is_err());
    }

    #[test]
    fn gaussian_log_sobolev() {
        let (g, _, _) = setup();
        for lam in [0.5f64, 1.0, 2.0] {
            let u = sample(&g, move |r| (-lam * lam * r * r / 2.0).exp()).unwrap();
            let u = u.scale(integrate(&u, |s| s * s).sqrt().recip());
            assert!(log_sobolev_gap(&u).unwrap().abs() < 1e-4, "lam={lam}");
        }
        let u = sample(&g, |r| (-r * r / 2.0).exp()).unwrap();
        let u = u.scale(integrate(&u, |s| s * s).sqrt().recip());
        let alpha = optimal_alpha(&u).unwrap();
        assert!((alpha - (1.0 + 0.75 * PI.ln())).abs() < 1e-4, "{alpha}");
        assert!(optimal_alpha(&u.scale(2.0)).is_err());
    }
}
