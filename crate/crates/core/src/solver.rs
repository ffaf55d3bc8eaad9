//! Minimization of the reduced functional, ε-continuation, a shooting oracle
//! for radial ground states and the nonradial energy-gap experiment.
//!
//! The descent runs on the sphere `{D = c}` where `D` is the Dirichlet energy:
//! the reduced level `Φ(u) = (1/N) D^{N/2} (2*Q)^{−(N−2)/2}` is invariant
//! under dilation, so each dilation orbit meets the sphere exactly once.
//! Directions are preconditioned by `K + βW·diag(V₊)`, where `V₊` is the
//! positive part of `−g_ε'(u)`, projected onto the tangent space in that
//! metric, and retracted by rescaling the amplitude.

use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::grid::{dilate, laplacian, BiradialGrid, Field, Grid, Pchip, BIRADIAL_SCALE};
use crate::nonlin::{critical_exponent, MassClass, Nonlinearity};
use crate::pohozaev::{energy, reduced_level, reduced_level_from, EnergyReport};

/// Armijo slope parameter.
const ARMIJO_C1: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;
/// Ceiling on the preconditioner potential.
const POTENTIAL_CAP: f64 = 1e4;
/// Relative distance of the projection factor from 1 that triggers another round.
const ROUND_TOL: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Stop when `‖ξ‖_P/‖u‖_P ≤ tol·(1 + level)` for the tangent step `ξ`.
    pub tol: f64,
    pub max_iter: usize,
    /// Replace `u` by `|u|` every this many iterations (odd `g`, radial grids).
    pub abs_every: Option<usize>,
    /// Upper bound on projection-and-restart rounds.
    pub rounds: usize,
    /// Starting field; scanned bump seeds are used when absent.
    pub seed: Option<Field>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-6,
            max_iter: 50_000,
            abs_every: Some(25),
            rounds: 3,
            seed: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub field: Field,
    pub report: EnergyReport,
    /// Reduced level of the returned field.
    pub level: f64,
    /// Reduced level per accepted iterate of the final round.
    pub level_history: Vec<f64>,
    /// Iterations summed over all rounds.
    pub iterations: usize,
    pub converged: bool,
    pub eps_final: f64,
    /// Relative tangent-step norm at exit.
    pub gradient_norm: f64,
}

/// Strictly decreasing values in `[0, 1/2]`; only the last may be zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsSchedule(Vec<f64>);

impl EpsSchedule {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return domain("eps schedule is empty");
        }
        if !(values[0] <= 0.5) {
            return domain(format!("first eps must be at most 1/2, got {}", values[0]));
        }
        for w in values.windows(2) {
            if !(w[1] < w[0]) {
                return domain(format!("eps schedule must strictly decrease: {} then {}", w[0], w[1]));
            }
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return domain("eps values must be nonnegative");
        }
        Ok(EpsSchedule(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule(vec![0.5, 0.25, 0.125, 0.0625, 0.0])
    }
}

/// Truncation radius suited to the decay of solutions for `nl`.
pub fn default_r_max(nl: &Nonlinearity) -> f64 {
    match nl.mass_class() {
        MassClass::Zero => 60.0,
        MassClass::Infinite => 12.0,
        MassClass::Positive => match nl.kind() {
            crate::nonlin::Kind::CubicQuintic => {
                let m = nl.params()[1];
                let tail = 24.0 / m.sqrt();
                (droplet_radius(nl) + tail).max(12.0)
            }
            _ => 12.0,
        },
    }
}

/// Maximizer of `G` on `(0, 4]` and the maximum, by a uniform scan.
fn primitive_peak(nl: &Nonlinearity) -> (f64, f64) {
    const SCAN: usize = 4000;
    let top = (1..=SCAN)
        .map(|k| 4.0 * k as f64 / SCAN as f64)
        .max_by(|a, b| nl.primitive(*a).total_cmp(&nl.primitive(*b)))
        .expect("scan is nonempty");
    (top, nl.primitive(top))
}

/// Radius `(N − 1)σ/G(s*)` of the flat-top droplet, `s*` the maximizer of `G`
/// and `σ = ∫₀^{s*} √(2(G(s*) − G))`. Zero when `G` has no positive maximum.
fn droplet_radius(nl: &Nonlinearity) -> f64 {
    const STEPS: usize = 4000;
    let (top, peak) = primitive_peak(nl);
    if !(peak > 0.0) {
        return 0.0;
    }
    let h = top / STEPS as f64;
    let sigma: f64 = (0..STEPS)
        .map(|k| (2.0 * (peak - nl.primitive((k as f64 + 0.5) * h))).max(0.0).sqrt() * h)
        .sum();
    let dim = nl.dim().unwrap_or(3) as f64;
    (dim - 1.0) * sigma / peak
}

/// Tridiagonal solve; `lower[i]` couples rows `i+1` and `i`, as does `upper[i]`.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    c[0] = if n > 1 { upper[0] / denom } else { 0.0 };
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

/// Angular eigenbasis reused across iterations on the biradial grid.
struct AngularModes {
    /// `Ψ[j][k]`, only mirror-antisymmetric modes.
    psi: Vec<Vec<f64>>,
    lambda: Vec<f64>,
}

impl AngularModes {
    fn new(g: &BiradialGrid) -> Self {
        let nt = g.n_theta();
        let mass = g.theta_mass();
        let edges = g.theta_edges();
        let scale: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
        let mut c = nalgebra::DMatrix::<f64>::zeros(nt, nt);
        for (j, &e) in edges.iter().enumerate() {
            c[(j, j)] += e * scale[j] * scale[j];
            c[(j + 1, j + 1)] += e * scale[j + 1] * scale[j + 1];
            c[(j, j + 1)] -= e * scale[j] * scale[j + 1];
            c[(j + 1, j)] -= e * scale[j] * scale[j + 1];
        }
        let eig = nalgebra::SymmetricEigen::new(c);
        let mut psi = vec![Vec::new(); nt];
        let mut lambda = Vec::new();
        for k in 0..nt {
            let col: Vec<f64> = (0..nt).map(|j| eig.eigenvectors[(j, k)] * scale[j]).collect();
            let norm = col.iter().map(|v| v.abs()).sum::<f64>();
            let sym = (0..nt).map(|j| (col[j] + col[nt - 1 - j]).abs()).sum::<f64>();
            if sym <= 1e-8 * norm {
                for j in 0..nt {
                    psi[j].push(col[j]);
                }
                lambda.push(eig.eigenvalues[k]);
            }
        }
        AngularModes { psi, lambda }
    }
}

enum Precond {
    Radial,
    Biradial(AngularModes),
}

struct Problem<'a> {
    grid: &'a Grid,
    nl: &'a Nonlinearity,
    eps: f64,
    dim: usize,
    crit: f64,
    mask: Vec<bool>,
    precond: Precond,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Problem<'a> {
    fn new(grid: &'a Grid, nl: &'a Nonlinearity, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return domain(format!("eps must lie in [0, 1), got {eps}"));
        }
        let precond = match grid {
            Grid::Radial(_) => Precond::Radial,
            Grid::Biradial(g) => {
                if !nl.is_odd() {
                    return domain("antisymmetric solves need an odd nonlinearity");
                }
                Precond::Biradial(AngularModes::new(g))
            }
        };
        let dim = grid.dim();
        Ok(Problem {
            grid,
            nl,
            eps,
            dim,
            crit: critical_exponent(dim),
            mask: grid.boundary_mask(),
            precond,
        })
    }

    fn potential(&self, u: &[f64]) -> Result<f64> {
        self.grid
            .try_quadrature(u, |s| self.nl.primitive_eps(self.eps, s, self.dim))
    }

    fn dirichlet(&self, u: &[f64]) -> f64 {
        dot(u, &self.grid.stiffness_apply(u))
    }

    fn level(&self, d: f64, q: f64) -> f64 {
        reduced_level_from(self.dim, d, q)
    }

    /// Solves `P x = rhs` with `P = K + β W diag(V₊)` (radial) or `K + μW` (biradial).
    fn solve_precond(&self, potential: &[f64], rhs: &[f64]) -> Vec<f64> {
        match (&self.precond, self.grid) {
            (Precond::Radial, Grid::Radial(g)) => {
                let n = g.len() - 1;
                let k = g.edges();
                let w = g.weights();
                let mut diag = vec![0.0; n];
                for i in 0..n {
                    diag[i] = k[i] + if i > 0 { k[i - 1] } else { 0.0 } + w[i] * potential[i];
                }
                let off: Vec<f64> = (0..n - 1).map(|i| -k[i]).collect();
                let mut x = rhs[..n].to_vec();
                thomas(&off, &diag, &off, &mut x);
                x.push(0.0);
                x
            }
            (Precond::Biradial(modes), Grid::Biradial(g)) => {
                let (nr, nt) = (g.n_rho(), g.n_theta());
                let nk = modes.lambda.len();
                // scalar shift: potential is constant on this grid
                let mu = potential[0];
                let interior = nr - 2;
                let kr = g.rho_edges();
                let wr = g.rho_mass();
                let mr = g.rho_mass_angular();
                let mut coef = vec![vec![0.0; nk]; interior];
                for (ii, row) in coef.iter_mut().enumerate() {
                    let i = ii + 1;
                    let base = i * nt;
                    for (j, psi_j) in modes.psi.iter().enumerate() {
                        let f = rhs[base + j];
                        if f != 0.0 {
                            for (c, p) in row.iter_mut().zip(psi_j) {
                                *c += f * p;
                            }
                        }
                    }
                }
                let off: Vec<f64> = (1..interior).map(|i| -kr[i]).collect();
                let mut col = vec![0.0; interior];
                let mut diag = vec![0.0; interior];
                for k in 0..nk {
                    for ii in 0..interior {
                        let i = ii + 1;
                        diag[ii] = kr[i - 1] + kr[i] + mu * wr[i] + modes.lambda[k] * mr[i];
                        col[ii] = coef[ii][k] / BIRADIAL_SCALE;
                    }
                    thomas(&off, &diag, &off, &mut col);
                    for ii in 0..interior {
                        coef[ii][k] = col[ii];
                    }
                }
                let mut x = vec![0.0; g.len()];
                for (ii, row) in coef.iter().enumerate() {
                    let base = (ii + 1) * nt;
                    for (j, psi_j) in modes.psi.iter().enumerate() {
                        x[base + j] = dot(row, psi_j);
                    }
                }
                Field::from_raw(self.grid, x).into_values()
            }
            _ => unreachable!(),
        }
    }

    /// `P v` for the operator inverted by [`Problem::solve_precond`].
    fn apply_precond(&self, potential: &[f64], v: &[f64]) -> Vec<f64> {
        let w = self.grid.weights();
        let mut out = self.grid.stiffness_apply(v);
        for (i, o) in out.iter_mut().enumerate() {
            let p = if potential.len() == 1 { potential[0] } else { potential[i] };
            *o += w[i] * p * v[i];
        }
        out
    }

    /// Preconditioner potential `β V₊` per node (radial) or its weighted mean (biradial).
    fn precond_potential(&self, u: &[f64], beta: f64) -> Vec<f64> {
        let v: Vec<f64> = u
            .iter()
            .map(|&s| (beta * (-self.nl.dg_eps(self.eps, s, self.dim)).max(0.0)).min(POTENTIAL_CAP))
            .collect();
        match self.precond {
            Precond::Radial => v,
            Precond::Biradial(_) => {
                let w = self.grid.weights();
                let num: f64 = (0..u.len()).map(|i| w[i] * v[i] * u[i] * u[i]).sum();
                let den: f64 = (0..u.len()).map(|i| w[i] * u[i] * u[i]).sum();
                let mu = if den > 0.0 { num / den } else { 0.0 };
                vec![mu.clamp(0.0, POTENTIAL_CAP)]
            }
        }
    }

    /// `x·∇u + (N−2)/2·u`, the generator of the dilations preserving `D`.
    fn dilation_generator(&self, u: &[f64]) -> Vec<f64> {
        let shift = 0.5 * (self.dim as f64 - 2.0);
        let radial_part = |r: &[f64], v: &dyn Fn(usize) -> f64, i: usize| {
            let n = r.len();
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            r[i] * (v(b) - v(a)) / (r[b] - r[a])
        };
        let d = match self.grid {
            Grid::Radial(g) => (0..u.len())
                .map(|i| radial_part(g.nodes(), &|k| u[k], i) + shift * u[i])
                .collect(),
            Grid::Biradial(g) => {
                let nt = g.n_theta();
                (0..u.len())
                    .map(|idx| {
                        let (i, j) = (idx / nt, idx % nt);
                        radial_part(g.rho(), &|k| u[k * nt + j], i) + shift * u[idx]
                    })
                    .collect()
            }
        };
        self.masked(d)
    }

    fn masked(&self, mut v: Vec<f64>) -> Vec<f64> {
        for (x, &m) in v.iter_mut().zip(&self.mask) {
            if m {
                *x = 0.0;
            }
        }
        v
    }
}

/// Relative level drop that makes a shift worth taking at a stationary point.
const SHIFT_GAIN: f64 = 1e-9;
/// Iterations between radial shift searches.
const SHIFT_EVERY: usize = 25;

/// Best of `u(r − δ)` over a doubling sequence of shifts in either direction,
/// rescaled onto `{D = c}`. Radial grids only.
fn shift_search(pb: &Problem, u: &[f64], c: f64) -> Result<Option<(Vec<f64>, f64, f64)>> {
    let Grid::Radial(g) = pb.grid else {
        return Ok(None);
    };
    let nodes = g.nodes();
    let interp = Pchip::new(nodes, u);
    let trial = |delta: f64| -> Result<Option<(Vec<f64>, f64, f64)>> {
        let mut v = pb.masked(nodes.iter().map(|&r| interp.eval((r - delta).max(0.0))).collect());
        let dv = pb.dirichlet(&v);
        if !(dv > 0.0 && dv.is_finite()) {
            return Ok(None);
        }
        let s = (c / dv).sqrt();
        v.iter_mut().for_each(|x| *x *= s);
        let q = pb.potential(&v)?;
        Ok((q > 0.0).then(|| {
            let phi = pb.level(c, q);
            (v, q, phi)
        }))
    };
    let q0 = pb.potential(u)?;
    let phi0 = pb.level(c, q0);
    let first = 4.0 * g.r_max() / g.len() as f64;
    for sign in [1.0, -1.0] {
        let mut best: Option<(Vec<f64>, f64, f64)> = None;
        let mut delta = first;
        while delta < 0.5 * g.r_max() {
            match trial(sign * delta)? {
                Some(t) if t.2 < best.as_ref().map_or(phi0, |b| b.2) => best = Some(t),
                _ => break,
            }
            delta *= 2.0;
        }
        if best.is_some() {
            return Ok(best);
        }
    }
    Ok(None)
}

struct RoundOutcome {
    values: Vec<f64>,
    history: Vec<f64>,
    iterations: usize,
    gradient_norm: f64,
    converged: bool,
}

/// Descent on `{D = c}` starting from `u` (which must lie on it).
fn descend(pb: &Problem, mut u: Vec<f64>, opts: &SolveOptions, budget: usize) -> Result<RoundOutcome> {
    let n = pb.dim as f64;
    let c = pb.dirichlet(&u);
    let mut q = pb.potential(&u)?;
    if !(q > 0.0) {
        return Err(Error::EmptyAdmissibleSet(format!("start field has Q = {q:e}")));
    }
    let mut phi = pb.level(c, q);
    let mut history = vec![phi];
    let w = pb.grid.weights();
    let radial = matches!(pb.precond, Precond::Radial);
    let mut gradient_norm = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < budget {
        let ku = pb.masked(pb.grid.stiffness_apply(&u));
        let beta = c / (pb.crit * q);
        let b: Vec<f64> = pb.masked(
            (0..u.len())
                .map(|i| ku[i] - beta * w[i] * pb.nl.g_eps(pb.eps, u[i], pb.dim))
                .collect(),
        );
        let pot = pb.precond_potential(&u, beta);
        let zeta = pb.solve_precond(&pot, &b);
        let normal = pb.solve_precond(&pot, &ku);
        let nku = dot(&normal, &ku);
        let alpha = dot(&zeta, &ku) / nku;
        let mut xi: Vec<f64> = zeta.iter().zip(&normal).map(|(z, m)| z - alpha * m).collect();
        // Φ is flat along dilations; stepping along them only drifts off the manifold
        let mut gen = pb.dilation_generator(&u);
        let gamma = dot(&gen, &ku) / nku;
        gen.iter_mut().zip(&normal).for_each(|(d, m)| *d -= gamma * m);
        let pgen = pb.masked(pb.apply_precond(&pot, &gen));
        let gg = dot(&gen, &pgen);
        if gg > 0.0 {
            let delta = dot(&xi, &pgen) / gg;
            xi.iter_mut().zip(&gen).for_each(|(x, d)| *x -= delta * d);
        }
        let pxi = dot(&b, &xi);
        let pu = dot(&u, &ku)
            + match radial {
                true => (0..u.len()).map(|i| w[i] * pot[i] * u[i] * u[i]).sum::<f64>(),
                false => pot[0] * (0..u.len()).map(|i| w[i] * u[i] * u[i]).sum::<f64>(),
            };
        if !pxi.is_finite() || pxi < 0.0 {
            return Err(Error::LineSearchFailure(format!(
                "search direction is not a descent direction (slope {pxi:e})"
            )));
        }
        gradient_norm = (pxi / pu).sqrt();
        if gradient_norm <= opts.tol * (1.0 + phi) {
            // a small gradient can hide a long flat valley; probe it before stopping
            match shift_search(pb, &u, c)? {
                Some((v, qv, phiv)) if phiv < phi * (1.0 - SHIFT_GAIN) => {
                    u = v;
                    q = qv;
                    phi = phiv;
                    history.push(phi);
                    iterations += 1;
                    continue;
                }
                _ => {
                    converged = true;
                    break;
                }
            }
        }
        // dΦ(ξ) = (NΦ/D) bᵀξ
        let slope = n * phi / c * pxi;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut v: Vec<f64> = u.iter().zip(&xi).map(|(a, x)| a - t * x).collect();
            let dv = pb.dirichlet(&v);
            if dv > 0.0 && dv.is_finite() {
                let s = (c / dv).sqrt();
                v.iter_mut().for_each(|x| *x *= s);
                let qv = pb.potential(&v)?;
                if qv > 0.0 {
                    let phiv = pb.level(c, qv);
                    if phiv <= phi - ARMIJO_C1 * t * slope {
                        accepted = Some((v, qv, phiv));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        iterations += 1;
        let due = iterations % SHIFT_EVERY == 0;
        let accepted = match accepted {
            Some(a) if !due => Some(a),
            // near-flat directions like wall motion of a flat-topped profile
            other => match shift_search(pb, other.as_ref().map_or(&u, |a| &a.0), c)? {
                Some(better) if better.2 < other.as_ref().map_or(phi, |a| a.2) => Some(better),
                _ => other,
            },
        };
        let Some((v, qv, phiv)) = accepted else {
            // no further decrease representable at this precision
            break;
        };
        u = v;
        q = qv;
        phi = phiv;

        if radial && pb.nl.is_odd() {
            if let Some(k) = opts.abs_every {
                if k > 0 && iterations % k == 0 && u.iter().any(|x| *x < 0.0) {
                    let mut a: Vec<f64> = u.iter().map(|x| x.abs()).collect();
                    let da = pb.dirichlet(&a);
                    let s = (c / da).sqrt();
                    a.iter_mut().for_each(|x| *x *= s);
                    let qa = pb.potential(&a)?;
                    if qa > 0.0 && pb.level(c, qa) <= phi {
                        u = a;
                        q = qa;
                        phi = pb.level(c, qa);
                    }
                }
            }
        }
        history.push(phi);
    }
    Ok(RoundOutcome {
        values: u,
        history,
        iterations,
        gradient_norm,
        converged,
    })
}

/// Amplitude-scanned bump seed with the lowest reduced level.
pub fn seed(grid: &Grid, nl: &Nonlinearity, eps: f64) -> Result<Field> {
    let mut amplitudes: Vec<f64> = (0..=48).map(|k| 10f64.powf(-2.0 + k as f64 / 12.0)).collect();
    amplitudes.extend(nl.xi0());
    amplitudes.push(primitive_peak(nl).0);
    let mut best: Option<(f64, Field)> = None;
    let mut shapes: Vec<(f64, f64)> = [4.0, 2.0]
        .into_iter()
        .flat_map(|d| [2.0, 4.0, 8.0, 16.0].map(|q| (grid.r_max() / d, q)))
        .collect();
    // flat tops wide enough that the bulk gain beats the wall cost
    let drop = droplet_radius(nl);
    shapes.extend([1.5, 2.0].map(|k| ((k * drop).min(0.9 * grid.r_max()), 32.0)).into_iter().filter(|s| s.0 > 0.0));
    for (r, q) in shapes {
        let shape = match grid {
            Grid::Radial(g) => {
                let v: Vec<f64> = g.nodes().iter().map(|&x| (-(x / r).powf(q)).exp()).collect();
                Field::from_values(grid, v)?
            }
            Grid::Biradial(_) => crate::grid::sample_antisymmetric(grid, |t, s| {
                let rho = (t * t + s * s).sqrt();
                (t - s) / r * (-(rho / r).powf(q)).exp()
            })?,
        };
        let mask = grid.boundary_mask();
        let values = shape.values().iter().zip(&mask).map(|(&v, &m)| if m { 0.0 } else { v }).collect();
        let shape = Field::from_raw(grid, values);
        for &a in &amplitudes {
            let cand = shape.scale(a);
            match reduced_level(&cand, nl, eps) {
                Ok(lvl) if best.as_ref().map_or(true, |b| lvl < b.0) => best = Some((lvl, cand)),
                Ok(_) | Err(Error::EmptyAdmissibleSet(_)) => {}
                Err(e) => return Err(e),
            }
        }
    }
    best.map(|b| b.1).ok_or_else(|| {
        Error::EmptyAdmissibleSet("no scanned bump has positive regularized potential".into())
    })
}

/// Minimizes the reduced level over fields on `grid`.
pub fn minimize(grid: &Grid, nl: &Nonlinearity, eps: f64, opts: &SolveOptions) -> Result<SolveResult> {
    let start = match &opts.seed {
        Some(s) => {
            if s.grid() != grid {
                return domain("seed field lives on a different grid");
            }
            s.clone()
        }
        None => seed(grid, nl, eps)?,
    };
    minimize_from(&start, nl, eps, opts)
}

/// Minimizes starting from `start`, which must have positive potential.
pub fn minimize_from(start: &Field, nl: &Nonlinearity, eps: f64, opts: &SolveOptions) -> Result<SolveResult> {
    let grid = start.grid().clone();
    let pb = Problem::new(&grid, nl, eps)?;
    let mut field = Field::from_raw(&grid, pb.masked(start.values().to_vec()));
    field = crate::pohozaev::project(&field, nl, eps)?;
    let mut total = 0;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let out = descend(&pb, field.values().to_vec(), opts, opts.max_iter - total)?;
        total += out.iterations;
        field = Field::from_raw(&grid, out.values);
        let r = crate::pohozaev::projection_factor(&field, nl, eps)?;
        let again = (r - 1.0).abs() > ROUND_TOL && rounds < opts.rounds.max(1) && total < opts.max_iter;
        if again {
            field = Field::from_raw(&grid, pb.masked(dilate(&field, r)?.into_values()));
            continue;
        }
        let report = energy(&field, nl, eps)?;
        let level = reduced_level(&field, nl, eps)?;
        let converged = out.converged && report.on_manifold();
        return Ok(SolveResult {
            field,
            report,
            level,
            level_history: out.history,
            iterations: total,
            converged,
            eps_final: eps,
            gradient_norm: out.gradient_norm,
        });
    }
}

#[derive(Debug, Clone)]
pub struct ContinuationResult {
    pub result: SolveResult,
    /// `(ε, c_ε)` in schedule order.
    pub levels: Vec<(f64, f64)>,
    /// `c_ε` nondecreasing as ε decreases, within `10⁻⁶`.
    pub monotone: bool,
    /// Every `c_ε` at most the final level plus `10⁻⁶`.
    pub bounded: bool,
}

/// Runs [`minimize`] along the schedule, warm-starting each ε from the previous minimizer.
pub fn continuation(
    grid: &Grid,
    nl: &Nonlinearity,
    schedule: &EpsSchedule,
    opts: &SolveOptions,
) -> Result<ContinuationResult> {
    let mut levels = Vec::new();
    let mut current: Option<SolveResult> = None;
    for &eps in schedule.values() {
        let res = match &current {
            None => minimize(grid, nl, eps, opts)?,
            Some(prev) => match minimize_from(&prev.field, nl, eps, opts) {
                Err(Error::EmptyAdmissibleSet(_)) => minimize(grid, nl, eps, opts)?,
                Ok(warm) if !warm.converged => match minimize(grid, nl, eps, opts) {
                    Ok(fresh) if fresh.converged || fresh.level < warm.level => fresh,
                    _ => warm,
                },
                other => other?,
            },
        };
        levels.push((eps, res.level));
        current = Some(res);
    }
    let result = current.expect("schedule is nonempty");
    let monotone = levels.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-6);
    let bounded = levels.iter().all(|l| l.1 <= result.level + 1e-6);
    Ok(ContinuationResult {
        result,
        levels,
        monotone,
        bounded,
    })
}

/// `‖−Δ_h u − g(u)‖` in the grid `L²` norm, over nodes off the truncation boundary.
pub fn pde_residual(u: &Field, nl: &Nonlinearity) -> f64 {
    let lap = laplacian(u);
    let mask = u.grid().boundary_mask();
    let w = u.grid().weights();
    let mut acc = 0.0;
    for i in 0..lap.len() {
        if !mask[i] {
            let r = -lap[i] - nl.g(u.values()[i]);
            acc += w[i] * r * r;
        }
    }
    acc.sqrt()
}

#[derive(Debug, Clone)]
pub struct ShootOptions {
    pub step: f64,
    pub r_max: f64,
    pub amp_min: f64,
    pub amp_max: f64,
    pub scan_points: usize,
    /// Bisection stops once the amplitude bracket is narrower than this.
    pub amp_tol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            step: 1e-3,
            r_max: 200.0,
            amp_min: 1e-3,
            amp_max: 1e3,
            scan_points: 241,
            amp_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    /// Undershooting trajectory up to its turning point, zero at the last node.
    pub field: Field,
    /// Centre value `u(0)`.
    pub amplitude: f64,
    /// Reduced level from the integrals carried along the trajectory.
    pub level: f64,
    pub dirichlet: f64,
    pub potential: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Overshoot,
    Undershoot,
}

struct Trajectory {
    outcome: Outcome,
    values: Vec<f64>,
    dirichlet: f64,
    potential: f64,
}

fn integrate_profile(nl: &Nonlinearity, dim: usize, a: f64, opts: &ShootOptions, keep: bool) -> Trajectory {
    let nd = dim as f64;
    let h = opts.step;
    let omega = crate::grid::sphere_area(dim);
    // state: u, u', ∫u'² r^{N−1}, ∫G(u) r^{N−1}
    let rhs = |r: f64, y: [f64; 4]| -> [f64; 4] {
        let rn = r.powi(dim as i32 - 1);
        [
            y[1],
            -(nd - 1.0) / r * y[1] - nl.g(y[0]),
            y[1] * y[1] * rn,
            nl.primitive(y[0]) * rn,
        ]
    };
    let ga = nl.g(a);
    let mut y = [
        a - ga * h * h / (2.0 * nd),
        -ga * h / nd,
        0.0,
        nl.primitive(a) * h.powi(dim as i32) / nd,
    ];
    let mut r = h;
    let mut values = if keep { vec![a, y[0]] } else { Vec::new() };
    let steps = (opts.r_max / h).ceil() as usize;
    let mut outcome = Outcome::Undershoot;
    for _ in 0..steps {
        if y[0] < 0.0 {
            outcome = Outcome::Overshoot;
            break;
        }
        if y[1] >= 0.0 && y[0] > 1e-10 {
            break;
        }
        let k1 = rhs(r, y);
        let k2 = rhs(r + h / 2.0, add(y, k1, h / 2.0));
        let k3 = rhs(r + h / 2.0, add(y, k2, h / 2.0));
        let k4 = rhs(r + h, add(y, k3, h));
        for i in 0..4 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r += h;
        if keep {
            values.push(y[0]);
        }
    }
    Trajectory {
        outcome,
        values,
        dirichlet: omega * y[2],
        potential: omega * y[3],
    }
}

fn add(y: [f64; 4], k: [f64; 4], s: f64) -> [f64; 4] {
    [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2], y[3] + s * k[3]]
}

/// Log-spaced amplitudes, densified toward both ends of every interval where
/// `g > 0` and `G > 0` (necessary for overshoot): overshooting centre values
/// can sit exponentially close to an end.
fn scan_amplitudes(nl: &Nonlinearity, opts: &ShootOptions) -> Vec<f64> {
    let k = opts.scan_points.max(2);
    let ratio = (opts.amp_max / opts.amp_min).ln();
    let mut amps: Vec<f64> = (0..k)
        .map(|i| opts.amp_min * (ratio * i as f64 / (k - 1) as f64).exp())
        .collect();
    let positive = |a: f64| nl.g(a) > 0.0 && nl.primitive(a) > 0.0;
    let root = |mut x: f64, mut y: f64| {
        // x and y straddle an end of the interval
        for _ in 0..200 {
            let mid = 0.5 * (x + y);
            if positive(mid) == positive(x) {
                x = mid;
            } else {
                y = mid;
            }
        }
        0.5 * (x + y)
    };
    let mut ends = Vec::new();
    let mut start = positive(amps[0]).then_some(amps[0]);
    for w in amps.windows(2) {
        match (positive(w[0]), positive(w[1])) {
            (false, true) => start = Some(root(w[0], w[1])),
            (true, false) => {
                if let Some(p) = start.take() {
                    ends.push((p, root(w[0], w[1])));
                }
            }
            _ => {}
        }
    }
    if let Some(p) = start {
        ends.push((p, opts.amp_max));
    }
    for (p, q) in ends {
        let width = q - p;
        for i in 0..=60 {
            let x = 10f64.powf(-15.0 + 14.7 * i as f64 / 60.0) * width;
            amps.push(p + x);
            amps.push(q - x);
        }
    }
    amps.retain(|a| (opts.amp_min..=opts.amp_max).contains(a));
    amps.sort_by(f64::total_cmp);
    amps.dedup();
    amps
}

/// Radial ground state by shooting on the centre value.
pub fn shoot(nl: &Nonlinearity, dim: usize, opts: &ShootOptions) -> Result<ShootResult> {
    if dim < 3 {
        return domain(format!("dimension must be at least 3, got {dim}"));
    }
    if !(opts.step > 0.0 && opts.r_max > opts.step && opts.amp_min > 0.0 && opts.amp_max > opts.amp_min) {
        return domain("invalid shooting options");
    }
    let mut lo = None;
    let mut bracket = None;
    for a in scan_amplitudes(nl, opts) {
        match integrate_profile(nl, dim, a, opts, false).outcome {
            Outcome::Undershoot => lo = Some(a),
            Outcome::Overshoot => {
                if let Some(l) = lo {
                    bracket = Some((l, a));
                    break;
                }
            }
        }
    }
    let Some((mut under, mut over)) = bracket else {
        return Err(Error::NoGroundState(format!(
            "no undershoot/overshoot transition for amplitudes in [{}, {}]",
            opts.amp_min, opts.amp_max
        )));
    };
    while over - under > opts.amp_tol {
        let mid = 0.5 * (under + over);
        if mid == under || mid == over {
            break;
        }
        match integrate_profile(nl, dim, mid, opts, false).outcome {
            Outcome::Undershoot => under = mid,
            Outcome::Overshoot => over = mid,
        }
    }
    let traj = integrate_profile(nl, dim, under, opts, true);
    let mut values = traj.values;
    let last = values.len() - 1;
    values[last] = 0.0;
    let r_end = opts.step * last as f64;
    let grid = crate::grid::build_radial_grid(dim, r_end, values.len().max(16), crate::grid::Grading::Uniform)?;
    if values.len() < 16 {
        return Err(Error::NoGroundState("trajectory too short to represent".into()));
    }
    let field = Field::from_values(&grid, values)?;
    if !(traj.potential > 0.0 && traj.dirichlet > 0.0) {
        return Err(Error::NoGroundState("bracketing trajectory has no positive potential".into()));
    }
    Ok(ShootResult {
        field,
        amplitude: under,
        level: reduced_level_from(dim, traj.dirichlet, traj.potential),
        dirichlet: traj.dirichlet,
        potential: traj.potential,
    })
}

#[derive(Debug, Clone)]
pub struct GapOptions {
    pub r_max: f64,
    pub radial_points: usize,
    /// Nodes per polar axis of the biradial grid.
    pub biradial_points: usize,
    pub eps: f64,
    pub solve: SolveOptions,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions {
            r_max: 12.0,
            radial_points: 4096,
            biradial_points: 256,
            eps: 0.0,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapReport {
    pub radial_level: f64,
    pub biradial_level: f64,
    pub ratio: f64,
    /// `ratio > 2`.
    pub exceeds_two: bool,
    pub radial_converged: bool,
    pub biradial_converged: bool,
}

/// Compares the least radial level with the least antisymmetric biradial level in `ℝ⁴`.
pub fn verify_nonradial_gap(nl: &Nonlinearity, opts: &GapOptions) -> Result<GapReport> {
    if !nl.is_odd() {
        return domain("the antisymmetric class needs an odd nonlinearity");
    }
    if let Some(d) = nl.dim() {
        if d != 4 {
            return domain(format!("nonlinearity built for dimension {d}, the gap experiment needs 4"));
        }
    }
    let radial = crate::grid::build_radial_grid(4, opts.r_max, opts.radial_points, crate::grid::Grading::Uniform)?;
    let biradial = crate::grid::build_biradial_grid(opts.r_max, opts.biradial_points)?;
    let solve = SolveOptions {
        seed: None,
        ..opts.solve.clone()
    };
    let a = minimize(&radial, nl, opts.eps, &solve)?;
    let b = minimize(&biradial, nl, opts.eps, &solve)?;
    let ratio = b.level / a.level;
    Ok(GapReport {
        radial_level: a.level,
        biradial_level: b.level,
        ratio,
        exceeds_two: ratio > 2.0,
        radial_converged: a.converged,
        biradial_converged: b.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_radial_grid, sample, Grading};
    use std::f64::consts::{E, PI};

    #[test]
    fn schedule_validation() {
        assert!(EpsSchedule::new(vec![0.5, 0.25, 0.0]).is_ok());
        assert!(EpsSchedule::new(vec![0.6, 0.25]).is_err());
        assert!(EpsSchedule::new(vec![0.5, 0.5]).is_err());
        assert!(EpsSchedule::new(vec![0.5, 0.0, -0.1]).is_err());
        assert!(EpsSchedule::new(vec![]).is_err());
        assert_eq!(EpsSchedule::default().values(), &[0.5, 0.25, 0.125, 0.0625, 0.0]);
    }

    #[test]
    fn thomas_solves_tridiagonal() {
        let lower = [1.0, 1.0, 1.0];
        let upper = [1.0, 1.0, 1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let x = [1.0, -2.0, 3.0, 0.5];
        let mut b = [
            4.0 * x[0] + x[1],
            x[0] + 4.0 * x[1] + x[2],
            x[1] + 4.0 * x[2] + x[3],
            x[2] + 4.0 * x[3],
        ];
        thomas(&lower, &diag, &upper, &mut b);
        for (a, e) in b.iter().zip(x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn gausson_residual_second_order() {
        let nl = Nonlinearity::logarithmic();
        let res = |n| {
            let g = build_radial_grid(3, 12.0, n, Grading::Uniform).unwrap();
            pde_residual(&sample(&g, |r| (1.0 - r * r / 2.0).exp()).unwrap(), &nl)
        };
        let (a, b) = (res(4097), res(8193));
        assert!(b < 5e-3);
        let ratio = a / b;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn zero_field_residual() {
        let g = build_radial_grid(3, 12.0, 64, Grading::Uniform).unwrap();
        assert_eq!(pde_residual(&Field::zeros(&g), &Nonlinearity::logarithmic()), 0.0);
    }

    #[test]
    fn shoot_finds_gausson_centre() {
        let r = shoot(&Nonlinearity::logarithmic(), 3, &ShootOptions::default()).unwrap();
        assert!((r.amplitude - E).abs() < 1e-4, "{}", r.amplitude);
        assert!((r.level / (E * E * PI.powf(1.5) / 2.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn shoot_rejects_supercritical_mass() {
        let nl = Nonlinearity::cubic_quintic(3, 4.0, 0.2).unwrap();
        assert!(matches!(shoot(&nl, 3, &ShootOptions::default()), Err(Error::NoGroundState(_))));
    }

    #[test]
    fn minimize_log_small_grid() {
        let nl = Nonlinearity::logarithmic();
        let g = build_radial_grid(3, 12.0, 1024, Grading::Uniform).unwrap();
        let res = minimize(&g, &nl, 0.0, &SolveOptions::default()).unwrap();
        assert!(res.converged, "{} {}", res.iterations, res.gradient_norm);
        assert!((res.level / (E * E * PI.powf(1.5) / 2.0) - 1.0).abs() < 1e-2);
        assert!(res.level_history.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs()));
    }

    #[test]
    fn minimize_empty_admissible_set() {
        let nl = Nonlinearity::cubic_quintic(3, 4.0, 0.2).unwrap();
        let g = build_radial_grid(3, 20.0, 512, Grading::Uniform).unwrap();
        assert!(matches!(
            minimize(&g, &nl, 0.0, &SolveOptions::default()),
            Err(Error::EmptyAdmissibleSet(_))
        ));
    }
}
