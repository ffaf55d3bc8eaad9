//! Concentration-compactness instrumentation for sequences of fields.

use rayon::prelude::*;
use statrs::function::beta::beta_reg;

use crate::error::{domain, Result};
use crate::grid::{Field, Grid, RadialGrid};

/// A finite sequence of fields on one grid.
#[derive(Debug, Clone)]
pub struct FieldSequence(Vec<Field>);

impl FieldSequence {
    pub fn new(fields: Vec<Field>) -> Result<Self> {
        if let Some(first) = fields.first() {
            if fields.iter().any(|f| f.grid() != first.grid()) {
                return domain("sequence fields live on different grids");
            }
        }
        Ok(FieldSequence(fields))
    }

    pub fn fields(&self) -> &[Field] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Volume of the unit ball in `ℝᴺ`.
fn unit_ball(dim: usize) -> f64 {
    crate::grid::ball_volume(dim, 1.0)
}

/// Volume of `{x ∈ B(0, r) : x₁ > c}`.
fn cap(dim: usize, r: f64, c: f64) -> f64 {
    let full = unit_ball(dim) * r.powi(dim as i32);
    if c >= r {
        return 0.0;
    }
    if c <= -r {
        return full;
    }
    let x = (1.0 - (c / r).powi(2)).max(0.0);
    let half_cap = 0.5 * full * beta_reg((dim as f64 + 1.0) / 2.0, 0.5, x);
    if c >= 0.0 {
        half_cap
    } else {
        full - half_cap
    }
}

/// Volume of `B(0, big) ∩ B(y e₁, small)`.
fn lens(dim: usize, big: f64, y: f64, small: f64) -> f64 {
    if big <= 0.0 {
        return 0.0;
    }
    if y + small <= big {
        return unit_ball(dim) * small.powi(dim as i32);
    }
    if y + big <= small {
        return unit_ball(dim) * big.powi(dim as i32);
    }
    if y >= big + small {
        return 0.0;
    }
    // the spheres meet on the plane x₁ = c
    let c = (y * y + big * big - small * small) / (2.0 * y);
    cap(dim, big, c) + cap(dim, small, y - c)
}

fn ball_mass(g: &RadialGrid, bounds: &[f64], u2: &[f64], y: f64, radius: f64) -> f64 {
    let dim = g.dim();
    let lo = bounds.partition_point(|&b| b <= y - radius).saturating_sub(1);
    let hi = bounds.partition_point(|&b| b < y + radius).min(u2.len());
    let mut total = 0.0;
    let mut below = lens(dim, bounds[lo], y, radius);
    for i in lo..hi {
        let above = lens(dim, bounds[i + 1], y, radius);
        total += u2[i] * (above - below);
        below = above;
    }
    total
}

/// Largest `∫_{B(y, radius)} u²` over centres `y` on the symmetry axis at node radii.
pub fn local_mass_sup(u: &Field, radius: f64) -> Result<f64> {
    let Grid::Radial(g) = u.grid() else {
        return domain("local mass needs a radial field");
    };
    if !(radius > 0.0 && radius <= g.r_max() / 2.0) {
        return domain(format!("radius must lie in (0, {}], got {radius}", g.r_max() / 2.0));
    }
    let nodes = g.nodes();
    let n = nodes.len();
    let mut bounds = Vec::with_capacity(n + 1);
    bounds.push(0.0);
    bounds.extend((0..n - 1).map(|i| 0.5 * (nodes[i] + nodes[i + 1])));
    bounds.push(g.r_max());
    let u2: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    // mass of whole shells meeting the ball bounds the ball mass
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + g.weights()[i] * u2[i];
    }
    let bound = |y: f64| {
        let lo = bounds.partition_point(|&b| b <= y - radius).saturating_sub(1);
        let hi = bounds.partition_point(|&b| b < y + radius).min(n);
        prefix[hi] - prefix[lo]
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| bound(nodes[b]).total_cmp(&bound(nodes[a])).then(a.cmp(&b)));
    let mut best = 0.0f64;
    for chunk in order.chunks(64) {
        if bound(nodes[chunk[0]]) <= best {
            break;
        }
        let local = chunk
            .par_iter()
            .map(|&k| ball_mass(g, &bounds, &u2, nodes[k], radius))
            .reduce(|| 0.0, f64::max);
        best = best.max(local);
    }
    Ok(best)
}

/// Per index, `|∫Ψ(uₙ) − ∫Ψ(uₙ − u₀) − ∫Ψ(u₀)|` for the limit `u₀`.
pub fn brezis_lieb_defect<P>(seq: &FieldSequence, psi: P, limit: &Field) -> Result<Vec<f64>>
where
    P: Fn(f64) -> f64 + Sync,
{
    if psi(0.0) != 0.0 {
        return domain("Ψ(0) must vanish");
    }
    if seq.fields().iter().any(|f| f.grid() != limit.grid()) {
        return domain("sequence and limit live on different grids");
    }
    let grid = limit.grid();
    let base = grid.quadrature(limit.values(), &psi);
    Ok(seq
        .fields()
        .par_iter()
        .map(|f| {
            let whole = grid.quadrature(f.values(), &psi);
            let diff: Vec<f64> = f.values().iter().zip(limit.values()).map(|(a, b)| a - b).collect();
            let rest = grid.quadrature(&diff, &psi);
            (whole - rest - base).abs()
        })
        .collect())
}
