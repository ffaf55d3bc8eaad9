//! Symmetry-reduced grids and fields.
//!
//! Both grids are cell-centred finite-volume discretizations: node `i` owns
//! the cell between the neighbouring midpoints, its weight is the exact
//! measure of that cell and the Dirichlet form is assembled edge by edge.
//! The discrete Laplacian is `−W⁻¹K` for the lumped mass `W` and stiffness
//! `K`, so `energy_gradient` is the exact derivative of the discrete energy.
//!
//! The biradial grid covers `(t, s) = (|x₁|, |x₂|)` for `x ∈ ℝ²×ℝ²` in polar
//! form `t = ρ cos θ`, `s = ρ sin θ`, `θ ∈ [0, π/2]`; antisymmetry
//! `u(t, s) = −u(s, t)` is the mirror `θ ↦ π/2 − θ`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::nonlin::Nonlinearity;

/// Surface area of the unit sphere in `ℝᴺ`, `2π^{N/2}/Γ(N/2)`.
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * PI.powf(n / 2.0) / statrs::function::gamma::gamma(n / 2.0)
}

/// Volume of the ball of radius `r` in `ℝᴺ`.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    sphere_area(dim) * r.powi(dim as i32) / dim as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Grading {
    #[default]
    Uniform,
    /// `r_i = exp(β i/(n−1)) − 1` with `β = ln(1 + r_max)`.
    Geometric,
}

impl std::str::FromStr for Grading {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "uniform" => Ok(Grading::Uniform),
            "geometric" => Ok(Grading::Geometric),
            other => Err(format!("unknown grading '{other}'")),
        }
    }
}

fn axis_nodes(r_max: f64, n: usize, grading: Grading) -> Vec<f64> {
    let last = (n - 1) as f64;
    let mut nodes: Vec<f64> = match grading {
        Grading::Uniform => (0..n).map(|i| r_max * i as f64 / last).collect(),
        Grading::Geometric => {
            let beta = (1.0 + r_max).ln();
            (0..n).map(|i| (beta * i as f64 / last).exp_m1()).collect()
        }
    };
    nodes[n - 1] = r_max;
    nodes
}

/// Cell boundaries `0, r_{½}, …, r_{n−3/2}, r_max`.
fn cell_bounds(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut b = Vec::with_capacity(n + 1);
    b.push(0.0);
    for i in 0..n - 1 {
        b.push(0.5 * (nodes[i] + nodes[i + 1]));
    }
    b.push(nodes[n - 1]);
    b
}

/// Radial grid in dimension `N` on `[0, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    dim: usize,
    r_max: f64,
    grading: Grading,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `ω r_{i+½}^{N−1}/(r_{i+1} − r_i)` for the edge `i → i+1`.
    edges: Vec<f64>,
}

impl RadialGrid {
    pub fn new(dim: usize, r_max: f64, n: usize, grading: Grading) -> Result<Self> {
        if dim < 3 {
            return domain(format!("dimension must be at least 3, got {dim}"));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return domain(format!("r_max must be positive and finite, got {r_max}"));
        }
        if n < 16 {
            return domain(format!("need at least 16 nodes, got {n}"));
        }
        let omega = sphere_area(dim);
        let nodes = axis_nodes(r_max, n, grading);
        let bounds = cell_bounds(&nodes);
        let nf = dim as f64;
        let weights = (0..n)
            .map(|i| omega * (bounds[i + 1].powi(dim as i32) - bounds[i].powi(dim as i32)) / nf)
            .collect();
        let edges = (0..n - 1)
            .map(|i| omega * bounds[i + 1].powi(dim as i32 - 1) / (nodes[i + 1] - nodes[i]))
            .collect();
        Ok(RadialGrid {
            dim,
            r_max,
            grading,
            nodes,
            weights,
            edges,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn grading(&self) -> Grading {
        self.grading
    }
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub(crate) fn edges(&self) -> &[f64] {
        &self.edges
    }
}

/// Convenience constructor returning a shareable grid.
pub fn build_radial_grid(dim: usize, r_max: f64, n: usize, grading: Grading) -> Result<Grid> {
    Ok(Grid::Radial(Arc::new(RadialGrid::new(dim, r_max, n, grading)?)))
}

/// Antisymmetric biradial grid for `N = 4` in polar coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BiradialGrid {
    r_max: f64,
    rho: Vec<f64>,
    theta: Vec<f64>,
    /// `∫ρ³ dρ` per radial cell.
    rho_mass: Vec<f64>,
    /// `∫ρ dρ` per radial cell, weighting the angular stiffness.
    rho_mass_angular: Vec<f64>,
    /// `ρ_{i+½}³/h` per radial edge.
    rho_edges: Vec<f64>,
    /// `∫cos θ sin θ dθ` per angular cell.
    theta_mass: Vec<f64>,
    /// `½ sin 2θ_{j+½}/Δθ` per angular edge.
    theta_edges: Vec<f64>,
    weights: Vec<f64>,
}

/// `(2π)²`, the measure of the two circle factors.
pub(crate) const BIRADIAL_SCALE: f64 = 4.0 * PI * PI;

impl BiradialGrid {
    /// `n_rho` radial and `n_theta` angular nodes.
    pub fn new(r_max: f64, n_rho: usize, n_theta: usize, grading: Grading) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return domain(format!("r_max must be positive and finite, got {r_max}"));
        }
        if n_rho < 16 || n_theta < 16 {
            return domain(format!("need at least 16 nodes per axis, got {n_rho}×{n_theta}"));
        }
        let rho = axis_nodes(r_max, n_rho, grading);
        let rb = cell_bounds(&rho);
        let rho_mass = (0..n_rho).map(|i| (rb[i + 1].powi(4) - rb[i].powi(4)) / 4.0).collect();
        let rho_mass_angular = (0..n_rho).map(|i| (rb[i + 1].powi(2) - rb[i].powi(2)) / 2.0).collect();
        let rho_edges = (0..n_rho - 1)
            .map(|i| rb[i + 1].powi(3) / (rho[i + 1] - rho[i]))
            .collect();

        let dth = 0.5 * PI / (n_theta - 1) as f64;
        let theta: Vec<f64> = (0..n_theta).map(|j| j as f64 * dth).collect();
        let tb: Vec<f64> = (0..=n_theta)
            .map(|j| match j {
                0 => 0.0,
                j if j == n_theta => 0.5 * PI,
                j => (j as f64 - 0.5) * dth,
            })
            .collect();
        let raw_mass: Vec<f64> = (0..n_theta)
            .map(|j| 0.5 * (tb[j + 1].sin().powi(2) - tb[j].sin().powi(2)))
            .collect();
        let raw_edges: Vec<f64> = (0..n_theta - 1)
            .map(|j| 0.5 * (2.0 * tb[j + 1]).sin() / dth)
            .collect();
        // exact mirror symmetry of the angular operator
        let theta_mass: Vec<f64> = (0..n_theta)
            .map(|j| 0.5 * (raw_mass[j] + raw_mass[n_theta - 1 - j]))
            .collect();
        let theta_edges: Vec<f64> = (0..n_theta - 1)
            .map(|j| 0.5 * (raw_edges[j] + raw_edges[n_theta - 2 - j]))
            .collect();

        let mut weights = Vec::with_capacity(n_rho * n_theta);
        for &wr in &rho_mass {
            for &wt in &theta_mass {
                weights.push(BIRADIAL_SCALE * wr * wt);
            }
        }
        Ok(BiradialGrid {
            r_max,
            rho,
            theta,
            rho_mass,
            rho_mass_angular,
            rho_edges,
            theta_mass,
            theta_edges,
            weights,
        })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn rho(&self) -> &[f64] {
        &self.rho
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn n_rho(&self) -> usize {
        self.rho.len()
    }
    pub fn n_theta(&self) -> usize {
        self.theta.len()
    }
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
    pub fn len(&self) -> usize {
        self.weights.len()
    }
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
    pub(crate) fn index(&self, i: usize, j: usize) -> usize {
        i * self.theta.len() + j
    }
    pub(crate) fn mirror(&self, j: usize) -> usize {
        self.theta.len() - 1 - j
    }
    pub(crate) fn rho_mass(&self) -> &[f64] {
        &self.rho_mass
    }
    pub(crate) fn rho_mass_angular(&self) -> &[f64] {
        &self.rho_mass_angular
    }
    pub(crate) fn rho_edges(&self) -> &[f64] {
        &self.rho_edges
    }
    pub(crate) fn theta_mass(&self) -> &[f64] {
        &self.theta_mass
    }
    pub(crate) fn theta_edges(&self) -> &[f64] {
        &self.theta_edges
    }

    /// Cartesian coordinates `(t, s)` of node `(i, j)`.
    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        let (r, th) = (self.rho[i], self.theta[j]);
        (r * th.cos(), r * th.sin())
    }
}

/// `n` nodes on each polar axis.
pub fn build_biradial_grid(r_max: f64, n: usize) -> Result<Grid> {
    Ok(Grid::Biradial(Arc::new(BiradialGrid::new(r_max, n, n, Grading::Uniform)?)))
}

/// A shared reference to either grid kind.
#[derive(Debug, Clone)]
pub enum Grid {
    Radial(Arc<RadialGrid>),
    Biradial(Arc<BiradialGrid>),
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Grid::Radial(a), Grid::Radial(b)) => Arc::ptr_eq(a, b) || a == b,
            (Grid::Biradial(a), Grid::Biradial(b)) => Arc::ptr_eq(a, b) || a == b,
            _ => false,
        }
    }
}

impl Grid {
    pub fn dim(&self) -> usize {
        match self {
            Grid::Radial(g) => g.dim,
            Grid::Biradial(_) => 4,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Biradial(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Grid::Radial(g) => g.weights(),
            Grid::Biradial(g) => g.weights(),
        }
    }

    pub fn r_max(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.r_max,
            Grid::Biradial(g) => g.r_max,
        }
    }

    pub fn is_biradial(&self) -> bool {
        matches!(self, Grid::Biradial(_))
    }

    /// Nodes on the truncation boundary, held at zero by the solver.
    pub fn boundary_mask(&self) -> Vec<bool> {
        match self {
            Grid::Radial(g) => {
                let mut m = vec![false; g.len()];
                m[g.len() - 1] = true;
                m
            }
            Grid::Biradial(g) => {
                let (nr, nt) = (g.n_rho(), g.n_theta());
                let mut m = vec![false; g.len()];
                for j in 0..nt {
                    // the origin is a single point, where antisymmetric fields vanish
                    m[g.index(0, j)] = true;
                    m[g.index(nr - 1, j)] = true;
                }
                m
            }
        }
    }

    /// Stiffness product `K u`, with `uᵀKu` the Dirichlet energy.
    pub fn stiffness_apply(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        match self {
            Grid::Radial(g) => {
                for (i, &k) in g.edges.iter().enumerate() {
                    let flux = k * (u[i + 1] - u[i]);
                    out[i] -= flux;
                    out[i + 1] += flux;
                }
            }
            Grid::Biradial(g) => {
                let nt = g.n_theta();
                for (i, &kr) in g.rho_edges.iter().enumerate() {
                    for j in 0..nt {
                        let (a, b) = (g.index(i, j), g.index(i + 1, j));
                        let flux = BIRADIAL_SCALE * kr * g.theta_mass[j] * (u[b] - u[a]);
                        out[a] -= flux;
                        out[b] += flux;
                    }
                }
                for i in 0..g.n_rho() {
                    let mr = BIRADIAL_SCALE * g.rho_mass_angular[i];
                    for (j, &kt) in g.theta_edges.iter().enumerate() {
                        let (a, b) = (g.index(i, j), g.index(i, j + 1));
                        let flux = mr * kt * (u[b] - u[a]);
                        out[a] -= flux;
                        out[b] += flux;
                    }
                }
            }
        }
        out
    }

    fn dirichlet_of(&self, u: &[f64]) -> f64 {
        match self {
            Grid::Radial(g) => g
                .edges
                .iter()
                .enumerate()
                .map(|(i, k)| k * (u[i + 1] - u[i]).powi(2))
                .sum(),
            Grid::Biradial(g) => {
                let nt = g.n_theta();
                let mut radial = 0.0;
                for (i, &kr) in g.rho_edges.iter().enumerate() {
                    for j in 0..nt {
                        radial += kr * g.theta_mass[j] * (u[g.index(i + 1, j)] - u[g.index(i, j)]).powi(2);
                    }
                }
                let mut angular = 0.0;
                for i in 0..g.n_rho() {
                    let mut row = 0.0;
                    for (j, &kt) in g.theta_edges.iter().enumerate() {
                        row += kt * (u[g.index(i, j + 1)] - u[g.index(i, j)]).powi(2);
                    }
                    angular += g.rho_mass_angular[i] * row;
                }
                BIRADIAL_SCALE * (radial + angular)
            }
        }
    }

    /// `Σ wᵢ h(uᵢ)`, summed over mirror pairs on the biradial grid so that odd
    /// `h` integrates to exactly zero on antisymmetric data.
    pub(crate) fn quadrature<H: Fn(f64) -> f64>(&self, u: &[f64], h: H) -> f64 {
        match self {
            Grid::Radial(g) => g.weights.iter().zip(u).map(|(w, &x)| w * h(x)).sum(),
            Grid::Biradial(g) => {
                let nt = g.n_theta();
                let mut total = 0.0;
                for i in 0..g.n_rho() {
                    for j in 0..nt / 2 {
                        let k = g.index(i, j);
                        let km = g.index(i, g.mirror(j));
                        total += g.weights[k] * (h(u[k]) + h(u[km]));
                    }
                    if nt % 2 == 1 {
                        let k = g.index(i, nt / 2);
                        total += g.weights[k] * h(u[k]);
                    }
                }
                total
            }
        }
    }

    /// Fallible variant of [`Grid::quadrature`].
    pub(crate) fn try_quadrature<H: Fn(f64) -> Result<f64>>(&self, u: &[f64], h: H) -> Result<f64> {
        let err = std::cell::RefCell::new(None);
        let total = self.quadrature(u, |x| match h(x) {
            Ok(v) => v,
            Err(e) => {
                err.borrow_mut().get_or_insert(e);
                0.0
            }
        });
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }
}

/// A grid-sampled function. Biradial fields are always antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<f64>,
}

impl Field {
    /// Wraps node values; biradial values are antisymmetrized.
    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Field> {
        if values.len() != grid.len() {
            return domain(format!(
                "expected {} values for the grid, got {}",
                grid.len(),
                values.len()
            ));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return domain(format!("non-finite field value {v}"));
        }
        let mut f = Field {
            grid: grid.clone(),
            values,
        };
        f.antisymmetrize();
        Ok(f)
    }

    pub fn zeros(grid: &Grid) -> Field {
        Field {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    pub(crate) fn from_raw(grid: &Grid, values: Vec<f64>) -> Field {
        debug_assert_eq!(values.len(), grid.len());
        let mut f = Field {
            grid: grid.clone(),
            values,
        };
        f.antisymmetrize();
        f
    }

    pub(crate) fn antisymmetrize(&mut self) {
        if let Grid::Biradial(g) = &self.grid {
            antisymmetrize_values(g, &mut self.values);
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.grid.is_biradial()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Pointwise map of the values, kept on the same grid.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Field {
        Field::from_raw(&self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// `self + other` on a common grid.
    pub fn add(&self, other: &Field) -> Result<Field> {
        if self.grid != other.grid {
            return domain("fields live on different grids");
        }
        let v = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(Field::from_raw(&self.grid, v))
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// `(r, u)` pairs for radial fields; `((t, s), u)` flattened as `(t, s, u)` otherwise.
    pub fn profile(&self) -> Vec<Vec<f64>> {
        match &self.grid {
            Grid::Radial(g) => g.nodes.iter().zip(&self.values).map(|(&r, &u)| vec![r, u]).collect(),
            Grid::Biradial(g) => {
                let mut out = Vec::with_capacity(g.len());
                for i in 0..g.n_rho() {
                    for j in 0..g.n_theta() {
                        let (t, s) = g.point(i, j);
                        out.push(vec![t, s, self.values[g.index(i, j)]]);
                    }
                }
                out
            }
        }
    }
}

fn antisymmetrize_values(g: &BiradialGrid, v: &mut [f64]) {
    let nt = g.n_theta();
    for i in 0..g.n_rho() {
        for j in 0..nt.div_ceil(2) {
            let (a, b) = (g.index(i, j), g.index(i, g.mirror(j)));
            let half = 0.5 * (v[a] - v[b]);
            v[a] = half;
            v[b] = -half;
        }
    }
}

/// Samples a radial profile `u(r)`.
pub fn sample<F: Fn(f64) -> f64>(grid: &Grid, profile: F) -> Result<Field> {
    match grid {
        Grid::Radial(g) => Field::from_values(grid, g.nodes.iter().map(|&r| profile(r)).collect()),
        Grid::Biradial(_) => domain("biradial grids take a two-variable profile"),
    }
}

/// Samples `(p(t, s) − p(s, t))/2` on the biradial grid.
pub fn sample_antisymmetric<F: Fn(f64, f64) -> f64>(grid: &Grid, profile: F) -> Result<Field> {
    let Grid::Biradial(g) = grid else {
        return domain("antisymmetric sampling needs a biradial grid");
    };
    let nt = g.n_theta();
    let mut v = vec![0.0; g.len()];
    for i in 0..g.n_rho() {
        for j in 0..nt.div_ceil(2) {
            let (t, s) = g.point(i, j);
            let val = 0.5 * (profile(t, s) - profile(s, t));
            if !val.is_finite() {
                return domain(format!("non-finite sample at (t, s) = ({t}, {s})"));
            }
            let jm = g.mirror(j);
            if jm == j {
                v[g.index(i, j)] = 0.0;
            } else {
                v[g.index(i, j)] = val;
                v[g.index(i, jm)] = -val;
            }
        }
    }
    Ok(Field {
        grid: grid.clone(),
        values: v,
    })
}

/// Discrete Dirichlet energy `∫|∇u|²`.
pub fn dirichlet(u: &Field) -> f64 {
    u.grid.dirichlet_of(&u.values)
}

/// Quadrature `Σ wᵢ h(uᵢ)`.
pub fn integrate<H: Fn(f64) -> f64>(u: &Field, h: H) -> f64 {
    u.grid.quadrature(&u.values, h)
}

/// Discrete Laplacian `Δ_h u = −W⁻¹Ku` at every node.
pub fn laplacian(u: &Field) -> Vec<f64> {
    let ku = u.grid.stiffness_apply(&u.values);
    ku.iter().zip(u.grid.weights()).map(|(k, w)| -k / w).collect()
}

/// Resamples `x ↦ u(λx)` by monotone cubic interpolation; zero beyond `r_max`.
pub fn dilate(u: &Field, lam: f64) -> Result<Field> {
    if !(lam > 0.0 && lam.is_finite()) {
        return domain(format!("dilation factor must be positive, got {lam}"));
    }
    if lam == 1.0 {
        return Ok(u.clone());
    }
    match &u.grid {
        Grid::Radial(g) => {
            let interp = Pchip::new(&g.nodes, &u.values);
            let v = g.nodes.iter().map(|&r| interp.eval(lam * r)).collect();
            Ok(Field::from_raw(&u.grid, v))
        }
        Grid::Biradial(g) => {
            let (nr, nt) = (g.n_rho(), g.n_theta());
            let mut v = vec![0.0; g.len()];
            let mut column = vec![0.0; nr];
            for j in 0..nt {
                for i in 0..nr {
                    column[i] = u.values[g.index(i, j)];
                }
                let interp = Pchip::new(&g.rho, &column);
                for i in 0..nr {
                    v[g.index(i, j)] = interp.eval(lam * g.rho[i]);
                }
            }
            Ok(Field::from_raw(&u.grid, v))
        }
    }
}

/// L²-representer of `v ↦ J_ε'(u)v`: `−Δ_h u − g₊(u) + φ_ε(u)g₋(u)`.
pub fn energy_gradient(u: &Field, nl: &Nonlinearity, eps: f64) -> Result<Field> {
    if !(0.0..1.0).contains(&eps) {
        return domain(format!("eps must lie in [0, 1), got {eps}"));
    }
    if u.is_antisymmetric() && !nl.is_odd() {
        return domain("antisymmetric fields need an odd nonlinearity");
    }
    let dim = u.dim();
    let lap = laplacian(u);
    let v = lap
        .iter()
        .zip(&u.values)
        .map(|(l, &x)| -l - nl.g_eps(eps, x, dim))
        .collect();
    Ok(Field::from_raw(&u.grid, v))
}

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
pub(crate) struct Pchip<'a> {
    x: &'a [f64],
    y: &'a [f64],
    d: Vec<f64>,
}

impl<'a> Pchip<'a> {
    pub(crate) fn new(x: &'a [f64], y: &'a [f64]) -> Self {
        let n = x.len();
        let h: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            if delta[i - 1] * delta[i] > 0.0 {
                let w1 = 2.0 * h[i] + h[i - 1];
                let w2 = h[i] + 2.0 * h[i - 1];
                d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
            }
        }
        d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
        d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        Pchip { x, y, d }
    }

    pub(crate) fn eval(&self, q: f64) -> f64 {
        let n = self.x.len();
        if q > self.x[n - 1] || q < self.x[0] {
            return 0.0;
        }
        let i = match self.x.partition_point(|&v| v <= q) {
            0 => 0,
            k => (k - 1).min(n - 2),
        };
        let h = self.x[i + 1] - self.x[i];
        let t = (q - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

/// One-sided three-point end slope, limited to preserve monotonicity.
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if d * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && d.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gausson(dim: usize) -> impl Fn(f64) -> f64 {
        let c = (dim as f64 - 1.0) / 2.0;
        move |r| (c - r * r / 2.0).exp()
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-12);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn radial_weights_sum_to_ball_volume() {
        for grading in [Grading::Uniform, Grading::Geometric] {
            let g = RadialGrid::new(3, 1.0, 4096, grading).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - 4.0 * PI / 3.0).abs() < 1e-12, "{grading:?}: {s}");
        }
    }

    #[test]
    fn biradial_weights_sum_to_quarter_disk_measure() {
        let g = BiradialGrid::new(3.0, 64, 65, Grading::Uniform).unwrap();
        let s: f64 = g.weights().iter().sum();
        let exact = BIRADIAL_SCALE * 3f64.powi(4) / 8.0;
        assert!((s / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_sizes() {
        assert!(RadialGrid::new(2, 1.0, 64, Grading::Uniform).is_err());
        assert!(RadialGrid::new(3, 0.0, 64, Grading::Uniform).is_err());
        assert!(RadialGrid::new(3, 1.0, 8, Grading::Uniform).is_err());
    }

    #[test]
    fn gausson_center_sample() {
        let g = build_radial_grid(3, 12.0, 256, Grading::Uniform).unwrap();
        let u = sample(&g, gausson(3)).unwrap();
        assert!((u.values()[0] - std::f64::consts::E).abs() < 1e-14);
        assert!(sample(&g, |_| f64::NAN).is_err());
    }

    #[test]
    fn gausson_integrals() {
        let g = build_radial_grid(3, 12.0, 8192, Grading::Uniform).unwrap();
        let u = sample(&g, gausson(3)).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        let mass = e2 * PI.powf(1.5);
        assert!((dirichlet(&u) / (1.5 * mass) - 1.0).abs() < 1e-3);
        assert!((integrate(&u, |s| s * s) / mass - 1.0).abs() < 1e-4);
        let nl = Nonlinearity::logarithmic();
        assert!((integrate(&u, |s| nl.primitive(s)) / (mass / 4.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn discrete_laplacian_exact_on_quadratics_uniform() {
        let g = build_radial_grid(3, 2.0, 64, Grading::Uniform).unwrap();
        let u = sample(&g, |r| 1.0 - 0.3 * r * r).unwrap();
        let lap = laplacian(&u);
        for l in &lap[..63] {
            assert!((l + 1.8).abs() < 1e-9, "{l}");
        }
    }

    #[test]
    fn dilation_laws_radial() {
        let g = build_radial_grid(3, 12.0, 8192, Grading::Uniform).unwrap();
        let u = sample(&g, gausson(3)).unwrap();
        let d = dirichlet(&u);
        let nl = Nonlinearity::logarithmic();
        let gi = integrate(&u, |s| nl.primitive(s));
        for lam in [0.5, 2.0] {
            let v = dilate(&u, lam).unwrap();
            assert!((dirichlet(&v) / (lam.powi(-1) * d) - 1.0).abs() < 1e-3);
            assert!((integrate(&v, |s| nl.primitive(s)) / (lam.powi(-3) * gi) - 1.0).abs() < 1e-3);
        }
        assert_eq!(dilate(&u, 1.0).unwrap(), u);
        assert!(dilate(&u, 0.0).is_err());
    }

    #[test]
    fn pchip_preserves_monotone_data() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| if *v < 10.0 { 0.0 } else { 1.0 }).collect();
        let p = Pchip::new(&x, &y);
        let mut prev = -1.0;
        for k in 0..=190 {
            let v = p.eval(k as f64 * 0.1);
            assert!(v >= prev - 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
    }

    fn biradial_seed(g: &Grid) -> Field {
        sample_antisymmetric(g, |t, s| (t - s) * (-t * t - s * s).exp()).unwrap()
    }

    #[test]
    fn biradial_antisymmetry_and_diagonal() {
        let g = build_biradial_grid(6.0, 33).unwrap();
        let u = biradial_seed(&g);
        let Grid::Biradial(b) = &g else { unreachable!() };
        for i in 0..b.n_rho() {
            for j in 0..b.n_theta() {
                let (a, m) = (b.index(i, j), b.index(i, b.mirror(j)));
                assert_eq!(u.values()[a], -u.values()[m]);
            }
            assert_eq!(u.values()[b.index(i, 16)], 0.0);
        }
        assert_eq!(integrate(&u, |s| s * s * s), 0.0);
        assert_eq!(integrate(&u, |s| s.sin() * s.abs()), 0.0);
    }

    #[test]
    fn biradial_dirichlet_against_closed_form() {
        // u = (t − s)e^{−ρ²}: ∫|∇u|² = π² − π³/8 and ∫u² = π²/4 − π³/16 from
        // the moments ∫ρ^{2k+1}e^{−2ρ²} and ∫cos θ sin θ, ∫cos²θ sin²θ over [0, π/2]
        let g = build_biradial_grid(6.0, 256).unwrap();
        let u = biradial_seed(&g);
        let d = dirichlet(&u);
        let exact = PI * PI - PI.powi(3) / 8.0;
        assert!((d / exact - 1.0).abs() < 2e-3, "{d} vs {exact}");
        let m = integrate(&u, |s| s * s);
        let exact_mass = PI * PI / 4.0 - PI.powi(3) / 16.0;
        assert!((m / exact_mass - 1.0).abs() < 1e-3, "{m} vs {exact_mass}");
    }

    #[test]
    fn biradial_dilation_law() {
        let g = build_biradial_grid(8.0, 256).unwrap();
        let u = biradial_seed(&g);
        let d = dirichlet(&u);
        for lam in [0.5, 2.0] {
            let v = dilate(&u, lam).unwrap();
            assert!((dirichlet(&v) * lam * lam / d - 1.0).abs() < 2e-3, "lam={lam}");
        }
    }

    #[test]
    fn gradient_is_derivative_of_discrete_energy() {
        let nl = Nonlinearity::cubic_quintic(3, 4.0, 0.1).unwrap();
        let g = build_radial_grid(3, 10.0, 400, Grading::Uniform).unwrap();
        let u = sample(&g, |r| 1.3 * (-r * r / 4.0).exp()).unwrap();
        let v = sample(&g, |r| (r).cos() * (-r * r / 9.0).exp()).unwrap();
        let eps = 0.25;
        let energy = |f: &Field| {
            0.5 * dirichlet(f)
                + integrate(f, |s| {
                    let (plus, _) = nl.split(s).unwrap();
                    nl.primitive_minus_eps(eps, s, 3).unwrap() - plus
                })
        };
        let tau = 1e-5;
        let fd = (energy(&u.add(&v.scale(tau)).unwrap()) - energy(&u.add(&v.scale(-tau)).unwrap()))
            / (2.0 * tau);
        let grad = energy_gradient(&u, &nl, eps).unwrap();
        let an: f64 = g
            .weights()
            .iter()
            .zip(grad.values().iter().zip(v.values()))
            .map(|(w, (a, b))| w * a * b)
            .sum();
        assert!((fd - an).abs() <= 1e-6 * an.abs(), "{fd} vs {an}");
    }

    #[test]
    fn gradient_rejects_even_nonlinearity_on_antisymmetric_field() {
        let g = build_biradial_grid(6.0, 32).unwrap();
        let u = biradial_seed(&g);
        let even = Nonlinearity::custom(|s| s * s, |s| s * s * s / 3.0, false, crate::nonlin::MassClass::Zero);
        assert!(energy_gradient(&u, &even, 0.0).is_err());
    }
}
