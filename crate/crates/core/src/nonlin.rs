//! Nonlinearities `g` with primitive `G`, the splitting `G = G₊ − G₋`, the
//! cutoff `φ_ε` and the regularized negative part `G₋^ε`.
//!
//! Built-in kinds are odd and evaluated in closed form on `s ≥ 0`; the value
//! at `−s` follows from oddness of `g` (evenness of `G`). Custom kinds carry
//! caller-supplied rules for `g` and `G` and split them by quadrature.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Critical Sobolev exponent `2N/(N−2)`.
pub fn critical_exponent(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * n / (n - 2.0)
}

/// Absolute tolerance for the splitting quadrature of custom kinds.
pub const SPLIT_QUAD_TOL: f64 = 1e-10;

type ScalarRule = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    CubicQuintic,
    Logarithmic,
    ZeroMassDoublePower,
    Custom,
}

/// Behaviour of `−g(s)/s` as `s → 0`. Informational only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassClass {
    Zero,
    Positive,
    Infinite,
}

#[derive(Clone)]
enum Repr {
    CubicQuintic {
        dim: usize,
        p: f64,
        m: f64,
    },
    Logarithmic,
    ZeroMass {
        p: f64,
        q: f64,
    },
    Custom {
        g: ScalarRule,
        primitive: ScalarRule,
    },
}

/// A nonlinearity `g` together with its primitive and splitting rules.
#[derive(Clone)]
pub struct Nonlinearity {
    repr: Repr,
    odd: bool,
    mass_class: MassClass,
    /// Interval `(lo, hi)` on `s > 0` where `g > 0`, for built-in kinds.
    window: Option<(f64, f64)>,
    xi0: Option<f64>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Nonlinearity");
        d.field("kind", &self.kind());
        match &self.repr {
            Repr::CubicQuintic { dim, p, m } => {
                d.field("dim", dim).field("p", p).field("m", m);
            }
            Repr::ZeroMass { p, q } => {
                d.field("p", p).field("q", q);
            }
            _ => {}
        }
        d.field("odd", &self.odd)
            .field("mass_class", &self.mass_class)
            .finish()
    }
}

/// The four values returned by [`Nonlinearity::eval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Values {
    pub g: f64,
    pub primitive: f64,
    pub primitive_plus: f64,
    pub primitive_minus: f64,
}

impl Nonlinearity {
    /// `g(s) = |s|^{p−2}s − |s|^{2*−2}s − m s` with `2 < p < 2*`, `m > 0`.
    pub fn cubic_quintic(dim: usize, p: f64, m: f64) -> Result<Self> {
        if dim < 3 {
            return domain(format!("dimension must be at least 3, got {dim}"));
        }
        let crit = critical_exponent(dim);
        if !(p > 2.0 && p < crit) {
            return domain(format!("p must lie in (2, {crit}), got {p}"));
        }
        if !(m > 0.0 && m.is_finite()) {
            return domain(format!("m must be positive, got {m}"));
        }
        // g(t)/t = t^{p−2} − t^{2*−2} − m peaks at t*.
        let h = move |t: f64| t.powf(p - 2.0) - t.powf(crit - 2.0) - m;
        let t_star = ((p - 2.0) / (crit - 2.0)).powf(1.0 / (crit - p));
        let window = if h(t_star) > 0.0 {
            let lo = bisect(&h, 0.0, t_star);
            let mut top = 2.0 * t_star;
            while h(top) > 0.0 {
                top *= 2.0;
            }
            let hi = bisect(&h, top, t_star);
            Some((lo, hi))
        } else {
            None
        };
        let mut nl = Nonlinearity {
            repr: Repr::CubicQuintic { dim, p, m },
            odd: true,
            mass_class: MassClass::Positive,
            window,
            xi0: None,
        };
        nl.xi0 = max_primitive_point(&nl).filter(|&x| nl.primitive(x) > 0.0);
        Ok(nl)
    }

    /// `G(s) = s² log|s|`, `g(s) = 2s log|s| + s`, extended by `0` at `s = 0`.
    pub fn logarithmic() -> Self {
        Nonlinearity {
            repr: Repr::Logarithmic,
            odd: true,
            mass_class: MassClass::Infinite,
            window: Some(((-0.5f64).exp(), f64::INFINITY)),
            xi0: Some(2.0),
        }
    }

    /// `g(s) = |s|^{q−2}s / (1 + |s|^{q−p})` with the defaults `p = 2*−1`, `q = 2*+2`.
    pub fn zero_mass(dim: usize) -> Result<Self> {
        if dim < 3 {
            return domain(format!("dimension must be at least 3, got {dim}"));
        }
        let crit = critical_exponent(dim);
        Self::zero_mass_with(dim, crit - 1.0, crit + 2.0)
    }

    pub fn zero_mass_with(dim: usize, p: f64, q: f64) -> Result<Self> {
        if dim < 3 {
            return domain(format!("dimension must be at least 3, got {dim}"));
        }
        let crit = critical_exponent(dim);
        if !(p > 2.0 && p < crit && q > crit && q.is_finite()) {
            return domain(format!("need 2 < p < {crit} < q, got p={p}, q={q}"));
        }
        Ok(Nonlinearity {
            repr: Repr::ZeroMass { p, q },
            odd: true,
            mass_class: MassClass::Zero,
            window: Some((0.0, f64::INFINITY)),
            xi0: Some(1.0),
        })
    }

    /// Caller-supplied `g` and primitive `G`. `odd` asserts that `g` is odd.
    pub fn custom<G1, G2>(g: G1, primitive: G2, odd: bool, mass_class: MassClass) -> Self
    where
        G1: Fn(f64) -> f64 + Send + Sync + 'static,
        G2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Nonlinearity {
            repr: Repr::Custom {
                g: Arc::new(g),
                primitive: Arc::new(primitive),
            },
            odd,
            mass_class,
            window: None,
            xi0: None,
        }
    }

    pub fn kind(&self) -> Kind {
        match self.repr {
            Repr::CubicQuintic { .. } => Kind::CubicQuintic,
            Repr::Logarithmic => Kind::Logarithmic,
            Repr::ZeroMass { .. } => Kind::ZeroMassDoublePower,
            Repr::Custom { .. } => Kind::Custom,
        }
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    pub fn mass_class(&self) -> MassClass {
        self.mass_class
    }

    /// A point `ξ₀ > 0` with `G(ξ₀) > 0`, when known.
    pub fn xi0(&self) -> Option<f64> {
        self.xi0
    }

    /// `(p, m)` for cubic-quintic, `(p, q)` for zero-mass.
    pub fn params(&self) -> Vec<f64> {
        match self.repr {
            Repr::CubicQuintic { p, m, .. } => vec![p, m],
            Repr::ZeroMass { p, q } => vec![p, q],
            _ => vec![],
        }
    }

    /// Dimension the nonlinearity was built for, if it depends on one.
    pub fn dim(&self) -> Option<usize> {
        match self.repr {
            Repr::CubicQuintic { dim, .. } => Some(dim),
            _ => None,
        }
    }

    fn builtin_g(&self, t: f64) -> f64 {
        match self.repr {
            Repr::CubicQuintic { dim, p, m } => {
                let crit = critical_exponent(dim);
                t.powf(p - 1.0) - t.powf(crit - 1.0) - m * t
            }
            Repr::Logarithmic => {
                if t == 0.0 {
                    0.0
                } else {
                    2.0 * t * t.ln() + t
                }
            }
            Repr::ZeroMass { p, q } => t.powf(q - 1.0) / (1.0 + t.powf(q - p)),
            Repr::Custom { .. } => unreachable!(),
        }
    }

    fn builtin_primitive(&self, t: f64) -> f64 {
        match self.repr {
            Repr::CubicQuintic { dim, p, m } => {
                let crit = critical_exponent(dim);
                t.powf(p) / p - t.powf(crit) / crit - 0.5 * m * t * t
            }
            Repr::Logarithmic => {
                if t == 0.0 {
                    0.0
                } else {
                    t * t * t.ln()
                }
            }
            Repr::ZeroMass { p, q } => zero_mass_primitive(p, q, t),
            Repr::Custom { .. } => unreachable!(),
        }
    }

    /// `g(s)`.
    pub fn g(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::Custom { g, .. } => g(s),
            _ => s.signum() * self.builtin_g(s.abs()),
        }
    }

    /// `G(s)`.
    pub fn primitive(&self, s: f64) -> f64 {
        match &self.repr {
            Repr::Custom { primitive, .. } => primitive(s),
            _ => self.builtin_primitive(s.abs()),
        }
    }

    /// Derivative of `G₊`: equals `g(s)` where `s·g(s) > 0`, else `0`.
    pub fn g_plus(&self, s: f64) -> f64 {
        let g = self.g(s);
        if g * s > 0.0 {
            g
        } else {
            0.0
        }
    }

    /// Derivative of `G₋`: `g₊ − g`.
    pub fn g_minus(&self, s: f64) -> f64 {
        let g = self.g(s);
        if g * s > 0.0 {
            0.0
        } else {
            -g
        }
    }

    /// `(G₊(s), G₋(s))`.
    pub fn split(&self, s: f64) -> Result<(f64, f64)> {
        match &self.repr {
            Repr::Custom { .. } => {
                let plus = self.custom_integral(s, &[], |t| self.g_plus(t))?;
                Ok((plus, plus - self.primitive(s)))
            }
            _ => {
                let t = s.abs();
                let big_g = self.builtin_primitive(t);
                let plus = match self.window {
                    None => 0.0,
                    Some((lo, hi)) if t > lo => {
                        self.builtin_primitive(t.min(hi)) - self.builtin_primitive(lo)
                    }
                    Some(_) => 0.0,
                };
                Ok((plus, plus - big_g))
            }
        }
    }

    /// `G₊(s)`.
    pub fn primitive_plus(&self, s: f64) -> f64 {
        self.split(s).map(|v| v.0).unwrap_or(f64::NAN)
    }

    /// Evaluates `(g, G, G₊, G₋)` at `s`.
    pub fn eval(&self, s: f64) -> Result<Values> {
        if !s.is_finite() {
            return domain(format!("non-finite argument {s}"));
        }
        let (plus, minus) = self.split(s)?;
        Ok(Values {
            g: self.g(s),
            primitive: plus - minus,
            primitive_plus: plus,
            primitive_minus: minus,
        })
    }

    /// Regularized negative part `G₋^ε(s) = ∫₀ˢ φ_ε(t) g₋(t) dt`.
    pub fn primitive_minus_eps(&self, eps: f64, s: f64, dim: usize) -> Result<f64> {
        check_eps(eps)?;
        if dim < 3 {
            return domain(format!("dimension must be at least 3, got {dim}"));
        }
        if !s.is_finite() {
            return domain(format!("non-finite argument {s}"));
        }
        if s == 0.0 {
            return Ok(0.0);
        }
        if let Repr::Custom { .. } = self.repr {
            if eps == 0.0 {
                return self.split(s).map(|v| v.1);
            }
            return self.custom_integral(s, &[eps, -eps], |t| {
                phi_eps_unchecked(eps, t, dim) * self.g_minus(t)
            });
        }
        if eps == 0.0 {
            return self.split(s).map(|v| v.1);
        }
        let t = s.abs();
        let k = critical_exponent(dim) - 1.0;
        let total = match self.window {
            None => self.weighted_negative(0.0, t, eps, k),
            Some((lo, hi)) => {
                let mut acc = self.weighted_negative(0.0, t.min(lo), eps, k);
                if t > hi {
                    acc += self.weighted_negative(hi, t, eps, k);
                }
                acc
            }
        };
        Ok(total)
    }

    /// `∫_a^b φ_ε(t)(−g(t)) dt` for built-ins on `0 ≤ a ≤ b`.
    fn weighted_negative(&self, a: f64, b: f64, eps: f64, k: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let mut acc = 0.0;
        let cut = b.min(eps);
        if a < cut {
            acc += (self.cutoff_antiderivative(cut, k) - self.cutoff_antiderivative(a, k))
                / eps.powf(k);
        }
        let start = a.max(eps);
        if start < b {
            acc -= self.builtin_primitive(b) - self.builtin_primitive(start);
        }
        acc
    }

    /// Antiderivative of `−t^k g(t)` on `t ≥ 0`, vanishing at `0`.
    fn cutoff_antiderivative(&self, t: f64, k: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        match self.repr {
            Repr::CubicQuintic { dim, p, m } => {
                let crit = critical_exponent(dim);
                -t.powf(k + p) / (k + p) + t.powf(k + crit) / (k + crit)
                    + m * t.powf(k + 2.0) / (k + 2.0)
            }
            Repr::Logarithmic => {
                // ∫ t^n log t = t^{n+1}(log t/(n+1) − 1/(n+1)²), n = k+1
                let n1 = k + 2.0;
                let tn1 = t.powf(n1);
                -2.0 * tn1 * (t.ln() / n1 - 1.0 / (n1 * n1)) - tn1 / n1
            }
            // g ≥ 0 on s ≥ 0: the negative part vanishes.
            Repr::ZeroMass { .. } => 0.0,
            Repr::Custom { .. } => unreachable!(),
        }
    }

    /// Regularized force `g_ε(s) = g₊(s) − φ_ε(s) g₋(s)`.
    pub fn g_eps(&self, eps: f64, s: f64, dim: usize) -> f64 {
        let g = self.g(s);
        if g * s > 0.0 {
            g
        } else {
            g * phi_eps_unchecked(eps, s, dim)
        }
    }

    /// Regularized potential `G₊(s) − G₋^ε(s)`.
    pub fn primitive_eps(&self, eps: f64, s: f64, dim: usize) -> Result<f64> {
        let (plus, _) = self.split(s)?;
        Ok(plus - self.primitive_minus_eps(eps, s, dim)?)
    }

    /// Central-difference derivative of `g_ε`, used for preconditioning.
    pub fn dg_eps(&self, eps: f64, s: f64, dim: usize) -> f64 {
        let h = 1e-6 * s.abs().max(1e-12);
        (self.g_eps(eps, s + h, dim) - self.g_eps(eps, s - h, dim)) / (2.0 * h)
    }

    /// `∫₀ˢ f` for custom kinds, split at sign changes of `g` and at `kinks`.
    fn custom_integral<F: Fn(f64) -> f64>(&self, s: f64, kinks: &[f64], f: F) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        let (a, b, sign) = if s > 0.0 { (0.0, s, 1.0) } else { (s, 0.0, -1.0) };
        let mut breaks = vec![a];
        let pieces = 64;
        let step = (b - a) / pieces as f64;
        let g = |t: f64| self.g(t);
        for i in 0..pieces {
            let x0 = a + step * i as f64;
            let x1 = if i + 1 == pieces { b } else { x0 + step };
            if g(x0) * g(x1) < 0.0 {
                breaks.push(bisect(&g, x0, x1));
            }
        }
        breaks.extend(kinks.iter().copied().filter(|&k| k > a && k < b));
        breaks.push(b);
        breaks.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let mut err = 0.0;
        for w in breaks.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let out = quadrature::double_exponential::integrate(&f, w[0], w[1], SPLIT_QUAD_TOL * 0.1);
            total += out.integral;
            err += out.error_estimate;
        }
        if !(err <= SPLIT_QUAD_TOL) || !total.is_finite() {
            return Err(Error::Numerical {
                message: format!("splitting quadrature on [{a}, {b}] did not converge"),
                error_estimate: err,
            });
        }
        Ok(sign * total)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return domain(format!("eps must lie in [0, 1), got {eps}"));
    }
    Ok(())
}

/// Cutoff `φ_ε(s) = min(1, (|s|/ε)^{2*−1})`, with `φ_0 = 1` off the origin.
pub fn phi_eps(eps: f64, s: f64, dim: usize) -> Result<f64> {
    check_eps(eps)?;
    if dim < 3 {
        return domain(format!("dimension must be at least 3, got {dim}"));
    }
    Ok(phi_eps_unchecked(eps, s, dim))
}

pub(crate) fn phi_eps_unchecked(eps: f64, s: f64, dim: usize) -> f64 {
    let a = s.abs();
    if eps == 0.0 {
        return if a == 0.0 { 0.0 } else { 1.0 };
    }
    if a >= eps {
        1.0
    } else {
        (a / eps).powf(critical_exponent(dim) - 1.0)
    }
}

/// Threshold `m₀` such that the cubic-quintic family satisfies the growth
/// assumptions exactly for `m ∈ (0, m₀)`.
pub fn m0_threshold(dim: usize, p: f64) -> Result<f64> {
    if dim < 3 {
        return domain(format!("dimension must be at least 3, got {dim}"));
    }
    let n = dim as f64;
    let crit = critical_exponent(dim);
    if !(p > 2.0 && p < crit) {
        return domain(format!("p must lie in (2, {crit}), got {p}"));
    }
    let lead = (n - 2.0) * (crit - p) / (n * (p - 2.0));
    let base = n * (p - 2.0) / (2.0 * p);
    Ok(lead * base.powf((crit - 2.0) / (crit - p)))
}

/// Bisection for a sign change of `f` between `a` (where `f < 0`) and `b`.
fn bisect<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (mut neg, mut pos) = if f(a) < 0.0 { (a, b) } else { (b, a) };
    for _ in 0..200 {
        let mid = 0.5 * (neg + pos);
        if mid == neg || mid == pos {
            break;
        }
        if f(mid) < 0.0 {
            neg = mid;
        } else {
            pos = mid;
        }
    }
    0.5 * (neg + pos)
}

/// Point of the log-spaced scan `[1e-8, 1e8]` maximizing `G`, refined by golden section.
fn max_primitive_point(nl: &Nonlinearity) -> Option<f64> {
    let samples = 4001;
    let (lmin, lmax) = (-8.0f64, 8.0f64);
    let at = |i: usize| 10f64.powf(lmin + (lmax - lmin) * i as f64 / (samples - 1) as f64);
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for i in 0..samples {
        let v = nl.primitive(at(i));
        if v > best_val {
            best_val = v;
            best = i;
        }
    }
    if !best_val.is_finite() {
        return None;
    }
    let mut a = at(best.saturating_sub(1));
    let mut b = at((best + 1).min(samples - 1));
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - ratio * (b - a);
        let d = a + ratio * (b - a);
        if nl.primitive(c) > nl.primitive(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let x = 0.5 * (a + b);
    Some(if nl.primitive(x) >= best_val { x } else { at(best) })
}

/// `∫₀ᵗ s^{q−1}/(1+s^{q−p}) ds`: alternating series on `[0, 1/2]`, then
/// 16-point Gauss–Legendre on doubling panels.
fn zero_mass_primitive(p: f64, q: f64, t: f64) -> f64 {
    let a = q - 1.0;
    let c = q - p;
    let head = t.min(0.5);
    let mut acc = 0.0;
    if head > 0.0 {
        let x = head.powf(c);
        let mut term = head.powf(a + 1.0);
        for k in 0..200 {
            let kk = k as f64;
            let add = term / (a + 1.0 + kk * c);
            acc += if k % 2 == 0 { add } else { -add };
            term *= x;
            if add.abs() < 1e-18 * acc.abs() {
                break;
            }
        }
    }
    let f = |s: f64| s.powf(a) / (1.0 + s.powf(c));
    let (nodes, weights) = gauss_legendre_16();
    let mut lo = 0.5;
    while lo < t {
        let hi = (2.0 * lo).min(t);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut panel = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            panel += w * f(mid + half * x);
        }
        acc += half * panel;
        lo = hi;
    }
    acc
}

fn gauss_legendre_16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Sampled diagnostics behind an [`AssumptionReport`].
#[derive(Debug, Clone, Default, Serialize)]
pub struct AssumptionTraces {
    /// `(s, G₊(s)/|s|^{2*})` for `|s| = 10⁻³ … 10⁻⁸`, both signs.
    pub small_ratio: Vec<(f64, f64)>,
    /// `(s, G₊(s)/|s|^{2*})` for `|s| = 10³ … 10⁸`, both signs.
    pub large_ratio: Vec<(f64, f64)>,
    /// `(s, |g(s)|/|s|^{2*−1})` for `|s| = 10³ … 10⁸`, both signs.
    pub growth_ratio: Vec<(f64, f64)>,
    /// Largest sampled growth ratio.
    pub growth_sup: f64,
    /// Largest sampled `G` on the positive scan.
    pub max_primitive: f64,
}

/// Lint result for the growth assumptions.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub passes_g1: bool,
    pub passes_g2: bool,
    pub passes_g3: bool,
    pub witness_xi0: Option<f64>,
    pub diagnostics: AssumptionTraces,
}

/// Samples the limits in the growth assumptions. A lint, not a proof: a limit
/// counts as zero when the sampled ratio vanishes or decreases monotonically
/// over the last three decades.
pub fn check_assumptions(nl: &Nonlinearity, dim: usize) -> Result<AssumptionReport> {
    if dim < 3 {
        return domain(format!("dimension must be at least 3, got {dim}"));
    }
    let crit = critical_exponent(dim);
    let mut traces = AssumptionTraces::default();
    let ratio = |s: f64| nl.primitive_plus(s) / s.abs().powf(crit);

    let mut passes_g1 = true;
    let mut passes_g3 = true;
    for sign in [1.0, -1.0] {
        let small: Vec<f64> = (0..6).map(|k| sign * 10f64.powi(-3 - k)).collect();
        let rs: Vec<f64> = small.iter().map(|&s| ratio(s)).collect();
        traces.small_ratio.extend(small.iter().copied().zip(rs.iter().copied()));
        passes_g1 &= vanishing_trend(&rs);

        let large: Vec<f64> = (0..6).map(|k| sign * 10f64.powi(3 + k)).collect();
        let rl: Vec<f64> = large.iter().map(|&s| ratio(s)).collect();
        traces.large_ratio.extend(large.iter().copied().zip(rl.iter().copied()));
        passes_g3 &= vanishing_trend(&rl);

        for &s in &large {
            let gr = nl.g(s).abs() / s.abs().powf(crit - 1.0);
            traces.growth_ratio.push((s, gr));
            if gr.is_finite() {
                traces.growth_sup = traces.growth_sup.max(gr);
            } else {
                passes_g3 = false;
            }
        }
    }

    let witness = max_primitive_point(nl);
    let max_g = witness.map(|x| nl.primitive(x)).unwrap_or(f64::NEG_INFINITY);
    traces.max_primitive = max_g;
    let passes_g2 = max_g > 0.0;
    Ok(AssumptionReport {
        passes_g1,
        passes_g2,
        passes_g3,
        witness_xi0: if passes_g2 { witness } else { None },
        diagnostics: traces,
    })
}

/// Ratios ordered toward the limit point.
fn vanishing_trend(ratios: &[f64]) -> bool {
    if ratios.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return false;
    }
    let last = ratios[ratios.len() - 1];
    if last == 0.0 {
        return true;
    }
    let tail = &ratios[ratios.len() - 4..];
    tail.windows(2).all(|w| w[1] <= w[0]) && last < tail[0]
}
