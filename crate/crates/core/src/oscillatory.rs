//! Weight functions, Mellin transforms, the GL(3) Voronoi gamma kernel and
//! the oscillatory integrals built from them.
//!
//! Conventions: `c = N/(a q p^λ)` is the ζ-frequency and
//! `m' = m N/(q p^κ)` the additive frequency of
//! `I(m,a,q,ζ) = ∫ U(y) e(ζ c y) e(-m' y) dy`. The dual integral
//! `J±(y,a,q,ζ)` is a line integral over `s = -1/2 + iτ` of
//! `(Ny)^{-iτ} γ±(s) Ṽ(ζc, 1/2 - iτ)`, and `K±` is the ζ-integral of `I J±`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use thiserror::Error;

use crate::quadrature::{self, Adaptive, QuadratureError};
use crate::sum_value::{e, SumValue};

const EPS: f64 = f64::EPSILON;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OscError {
    #[error("s = {s} is within 1e-6 of a pole of the gamma factors")]
    NearPole { s: Complex64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(#[from] QuadratureError),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Distance below which a numerator gamma argument counts as a pole.
pub const POLE_DISTANCE: f64 = 1e-6;

// ---------------------------------------------------------------------------
// weights

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BumpShape {
    /// Equal to 1 on `[lo, hi]`, with smooth steps down to the support ends.
    Plateau { lo: f64, hi: f64 },
    /// `exp(1 - 1/(1 - t²))` after mapping the support onto `t ∈ [-1, 1]`; peak value 1.
    Peak,
}

/// A smooth weight supported on a closed interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpWeight {
    pub support: (f64, f64),
    pub shape: BumpShape,
}

fn psi(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth step from 0 at `t ≤ 0` to 1 at `t ≥ 1`.
fn smooth_step(t: f64) -> f64 {
    let (a, b) = (psi(t), psi(1.0 - t));
    a / (a + b)
}

impl BumpWeight {
    pub fn plateau(c: f64, lo: f64, hi: f64, d: f64) -> Result<Self, OscError> {
        if !(c < lo && lo <= hi && hi < d) {
            return Err(OscError::InvalidParams(format!("bad plateau {c} < {lo} <= {hi} < {d}")));
        }
        Ok(Self { support: (c, d), shape: BumpShape::Plateau { lo, hi } })
    }

    pub fn peak(c: f64, d: f64) -> Result<Self, OscError> {
        if !(c < d) {
            return Err(OscError::InvalidParams(format!("empty support [{c}, {d}]")));
        }
        Ok(Self { support: (c, d), shape: BumpShape::Peak })
    }

    /// Plateau `[1, 2]`, support `[1/2, 5/2]`.
    pub fn u() -> Self {
        Self { support: (0.5, 2.5), shape: BumpShape::Plateau { lo: 1.0, hi: 2.0 } }
    }

    /// Peaked bump on `[1, 2]`.
    pub fn v() -> Self {
        Self { support: (1.0, 2.0), shape: BumpShape::Peak }
    }

    /// Plateau `[1/2, 1]`, support `[1/4, 2]`.
    pub fn w() -> Self {
        Self { support: (0.25, 2.0), shape: BumpShape::Plateau { lo: 0.5, hi: 1.0 } }
    }

    /// Widths of the rising and falling transitions.
    pub fn transition_widths(&self) -> (f64, f64) {
        let (c, d) = self.support;
        match self.shape {
            BumpShape::Plateau { lo, hi } => (lo - c, d - hi),
            BumpShape::Peak => (0.5 * (d - c), 0.5 * (d - c)),
        }
    }

    pub fn eval(&self, y: f64) -> f64 {
        let (c, d) = self.support;
        if y <= c || y >= d {
            return 0.0;
        }
        match self.shape {
            BumpShape::Plateau { lo, hi } => {
                if y < lo {
                    smooth_step((y - c) / (lo - c))
                } else if y <= hi {
                    1.0
                } else {
                    smooth_step((d - y) / (d - hi))
                }
            }
            BumpShape::Peak => {
                let t = (2.0 * y - c - d) / (d - c);
                let g = 1.0 - t * t;
                if g <= 0.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / g).exp()
                }
            }
        }
    }

    /// Support ends and shape breakpoints, in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (c, d) = self.support;
        match self.shape {
            BumpShape::Plateau { lo, hi } if lo < hi => vec![c, lo, hi, d],
            BumpShape::Plateau { lo, .. } => vec![c, lo, d],
            BumpShape::Peak => vec![c, 0.5 * (c + d), d],
        }
    }

    /// `∫ w(y) dy`.
    pub fn mass(&self) -> Result<f64, OscError> {
        let r = quadrature::integrate(|y| Complex64::new(self.eval(y), 0.0), &self.breakpoints(), 1, Adaptive::default())?;
        Ok(r.value.re)
    }
}

// ---------------------------------------------------------------------------
// gamma function and the Voronoi kernel

const STIRLING: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
];

/// `log Γ(z)` up to an additive multiple of `2πi`. Infinite at the poles.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    let mut z = z;
    let mut shift = Complex64::new(0.0, 0.0);
    while z.re < 0.0 || z.norm() < 15.0 {
        shift += z.ln();
        z += 1.0;
    }
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut pow = inv;
    for c in STIRLING {
        series += pow * c;
        pow *= inv2;
    }
    (z - 0.5) * z.ln() - z + 0.5 * TAU.ln() + series - shift
}

pub fn gamma(z: Complex64) -> Complex64 {
    ln_gamma(z).exp()
}

/// Distance from `z` to the nearest pole of `Γ`.
fn pole_distance(z: Complex64) -> f64 {
    let k = z.re.round().min(0.0);
    (z - k).norm()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanglandsParams {
    mu: [Complex64; 3],
}

impl LanglandsParams {
    pub fn new(mu: [Complex64; 3]) -> Result<Self, OscError> {
        let sum = mu[0] + mu[1] + mu[2];
        if sum.norm() > 1e-12 {
            return Err(OscError::InvalidParams(format!("parameters sum to {sum}, not 0")));
        }
        Ok(Self { mu })
    }

    pub fn trivial() -> Self {
        Self { mu: [Complex64::new(0.0, 0.0); 3] }
    }

    /// `μ = (0,0,0)` together with two purely imaginary triples.
    pub fn test_triples() -> [Self; 3] {
        let i = |t: f64| Complex64::new(0.0, t);
        [
            Self::trivial(),
            Self { mu: [i(2.6), i(-1.3), i(-1.3)] },
            Self { mu: [i(0.7), i(1.9), i(-2.6)] },
        ]
    }

    pub fn mu(&self) -> [Complex64; 3] {
        self.mu
    }

    pub fn is_real(&self) -> bool {
        self.mu.iter().all(|m| m.im == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// `Π_j Γ(num_j) / Γ(den_j)` with numerators at least `POLE_DISTANCE` from poles.
fn gamma_ratio(s: Complex64, num: [Complex64; 3], den: [Complex64; 3]) -> Result<Complex64, OscError> {
    let mut log = Complex64::new(0.0, 0.0);
    for z in num {
        if pole_distance(z) < POLE_DISTANCE {
            return Err(OscError::NearPole { s });
        }
        log += ln_gamma(z);
    }
    for w in den {
        if pole_distance(w) < 1e-300 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        log -= ln_gamma(w);
    }
    Ok(log.exp())
}

/// `γ±(s) = (1/(2π^{3(s+1/2)})) (Π Γ((1+s+μ)/2)/Γ((-s-μ)/2) ∓ i Π Γ((2+s+μ)/2)/Γ((1-s-μ)/2))`.
pub fn gamma_pm(s: Complex64, mu: &LanglandsParams, sign: Sign) -> Result<Complex64, OscError> {
    let m = mu.mu;
    let even = gamma_ratio(
        s,
        [0, 1, 2].map(|j| (1.0 + s + m[j]) * 0.5),
        [0, 1, 2].map(|j| (-s - m[j]) * 0.5),
    )?;
    let odd = gamma_ratio(
        s,
        [0, 1, 2].map(|j| (2.0 + s + m[j]) * 0.5),
        [0, 1, 2].map(|j| (1.0 - s - m[j]) * 0.5),
    )?;
    let i = Complex64::new(0.0, 1.0);
    let combo = match sign {
        Sign::Plus => even - i * odd,
        Sign::Minus => even + i * odd,
    };
    let pre = (-(s + 0.5) * (3.0 * PI.ln())).exp() * 0.5;
    Ok(pre * combo)
}

// ---------------------------------------------------------------------------
// parameters

/// The fixed data `(p, κ, λ, N)` shared by all integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    pub p: u64,
    pub kappa: u32,
    pub lambda: u32,
    pub n: f64,
}

impl KernelParams {
    pub fn new(p: u64, kappa: u32, lambda: u32, n: f64) -> Result<Self, OscError> {
        if p < 2 || lambda >= kappa || !(n >= 1.0) || kappa > 30 {
            return Err(OscError::InvalidParams(format!("p={p} κ={kappa} λ={lambda} N={n}")));
        }
        Ok(Self { p, kappa, lambda, n })
    }

    /// `N = Q² p^λ`.
    pub fn with_big_q(p: u64, kappa: u32, lambda: u32, big_q: f64) -> Result<Self, OscError> {
        Self::new(p, kappa, lambda, big_q * big_q * (p as f64).powi(lambda as i32))
    }

    /// `Q = (N / p^λ)^{1/2}`.
    pub fn big_q(&self) -> f64 {
        (self.n / (self.p as f64).powi(self.lambda as i32)).sqrt()
    }

    /// `N / (a q p^λ)`.
    pub fn zeta_frequency(&self, a: u64, q: u64) -> f64 {
        self.n / (a as f64 * q as f64 * (self.p as f64).powi(self.lambda as i32))
    }

    /// `m N / (q p^κ)`.
    pub fn additive_frequency(&self, m: i64, q: u64) -> f64 {
        m as f64 * self.n / (q as f64 * (self.p as f64).powi(self.kappa as i32))
    }

    /// The stationary point `m a / p^{κ-λ}` of `I` in ζ.
    pub fn zeta_center(&self, m: i64, a: u64) -> f64 {
        m as f64 * a as f64 / (self.p as f64).powi((self.kappa - self.lambda) as i32)
    }

    /// `(log N)²`, standing in for the `N^ε` of essential-support statements.
    pub fn log_margin(&self) -> f64 {
        let l = self.n.max(std::f64::consts::E).ln();
        l * l
    }

    /// `Q p^κ / N`, beyond which the `m`-sum is negligible.
    pub fn m_cutoff(&self) -> f64 {
        self.big_q() * (self.p as f64).powi(self.kappa as i32) / self.n
    }
}

fn check_aq(a: u64, q: u64) -> Result<(), OscError> {
    if a == 0 || q == 0 {
        return Err(OscError::InvalidParams("a and q must be positive".into()));
    }
    Ok(())
}

fn quad_value(r: quadrature::QuadResult) -> SumValue {
    SumValue::new(r.value, r.error + 8.0 * EPS * r.value.norm())
}

fn pieces_for(freq: f64, length: f64) -> usize {
    (freq.abs() * length).ceil() as usize + 1
}

// ---------------------------------------------------------------------------
// I and the Mellin transform

/// `∫ w(y) e(θ y) dy` to absolute tolerance `tol`.
pub fn fourier_weight(w: &BumpWeight, theta: f64, tol: f64) -> Result<SumValue, OscError> {
    let (c, d) = w.support;
    let opts = Adaptive { abs_tol: tol, ..Adaptive::default() };
    let r = quadrature::integrate(|y| e(theta * y) * w.eval(y), &w.breakpoints(), pieces_for(theta, (d - c) / 2.0), opts)?;
    Ok(quad_value(r))
}

/// `I(m,a,q,ζ) = ∫ U(y) e(ζ N y/(a q p^λ)) e(-m N y/(q p^κ)) dy`.
pub fn integral_i(m: i64, a: u64, q: u64, zeta: f64, params: &KernelParams, u: &BumpWeight) -> Result<SumValue, OscError> {
    check_aq(a, q)?;
    let theta = zeta * params.zeta_frequency(a, q) - params.additive_frequency(m, q);
    fourier_weight(u, theta, 1e-10)
}

/// `Ṽ(r, s) = ∫ V(y) e(-r y) y^{s-1} dy` by adaptive quadrature.
pub fn mellin_v(r: f64, s: Complex64, v: &BumpWeight) -> Result<SumValue, OscError> {
    let (c, d) = v.support;
    if c <= 0.0 {
        return Err(OscError::InvalidParams("weight support must lie in (0, ∞)".into()));
    }
    let freq = r.abs() * (d - c) + s.im.abs() * (d / c).ln() / TAU;
    let f = |y: f64| {
        let w = v.eval(y);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        e(-r * y) * ((s - 1.0) * y.ln()).exp() * w
    };
    let r = quadrature::integrate(f, &v.breakpoints(), pieces_for(freq, 1.0), Adaptive::default())?;
    Ok(quad_value(r))
}

/// `Ṽ(r, s)` by the trapezoid rule in `u = log y` with `n` steps, an
/// independent scheme that converges rapidly for compactly supported weights.
pub fn mellin_v_log_trapezoid(r: f64, s: Complex64, v: &BumpWeight, n: usize) -> SumValue {
    let (c, d) = v.support;
    let (u0, u1) = (c.ln(), d.ln());
    let h = (u1 - u0) / n as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut mag = 0.0;
    for j in 1..n {
        let u = u0 + h * j as f64;
        let y = u.exp();
        let term = e(-r * y) * (s * u).exp() * v.eval(y);
        sum += term;
        mag += term.norm();
    }
    SumValue::new(sum * h, EPS * (n as f64 + 8.0) * mag * h)
}

// ---------------------------------------------------------------------------
// line integrals over Re s = -1/2

/// Controls for the τ-line integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineOptions {
    /// Stop extending once an annulus contributes less than this in L¹.
    pub tail_tol: f64,
    pub annulus: f64,
    /// Added to the stationary range to get the initial truncation.
    pub initial_margin: f64,
    /// Extra range allowed beyond the initial truncation.
    pub extension_cap: f64,
    /// Fixed truncation `T`, bypassing the adaptive tail.
    pub truncation: Option<f64>,
    /// Multiplies the τ-panel width.
    pub panel_scale: f64,
    /// Multiplies the number of log-grid nodes.
    pub grid_scale: f64,
}

impl Default for LineOptions {
    fn default() -> Self {
        Self {
            tail_tol: 1e-8,
            annulus: 25.0,
            initial_margin: 50.0,
            extension_cap: 2000.0,
            truncation: None,
            panel_scale: 1.0,
            grid_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineIntegral {
    pub value: SumValue,
    /// The `T` of the final range `[-T, T]`.
    pub truncation: f64,
    pub nodes: usize,
}

/// Samples `w(x) x^{1/2}` on `x = e^{u0 + jh}`, so that
/// `∫ w(x) x^{-1/2-iτ} dx ≈ h e^{-iτ u0} Σ_j g_j e^{-iτ jh}`.
struct LogGrid {
    u0: f64,
    h: f64,
    g: Vec<Complex64>,
    mag: f64,
}

impl LogGrid {
    /// Number of steps needed to resolve frequencies up to `band` in `u` without aliasing.
    fn steps(support: (f64, f64), band: f64, scale: f64) -> usize {
        let len = (support.1 / support.0).ln();
        ((len * (band + 1500.0) / TAU * scale).ceil() as usize).max(64)
    }

    fn build<F: FnMut(f64) -> Result<Complex64, OscError>>(support: (f64, f64), steps: usize, mut w: F) -> Result<Self, OscError> {
        let (u0, u1) = (support.0.ln(), support.1.ln());
        let h = (u1 - u0) / steps as f64;
        let mut g = Vec::with_capacity(steps + 1);
        for j in 0..=steps {
            let x = (u0 + h * j as f64).exp();
            g.push(if j == 0 || j == steps { Complex64::new(0.0, 0.0) } else { w(x)? * x.sqrt() });
        }
        let mag = g.iter().map(|z| z.norm()).sum::<f64>() * h;
        Ok(Self { u0, h, g, mag })
    }

    fn mellin(&self, tau: f64) -> Complex64 {
        let z = Complex64::from_polar(1.0, -tau * self.h);
        let mut acc = Complex64::new(0.0, 0.0);
        for gj in self.g.iter().rev() {
            acc = acc * z + gj;
        }
        acc * Complex64::from_polar(self.h, -tau * self.u0)
    }

    fn u_max(&self) -> f64 {
        self.u0 + self.h * (self.g.len() - 1) as f64
    }
}

struct Line<'a> {
    grid: &'a LogGrid,
    log_ny: f64,
    mu: &'a LanglandsParams,
    sign: Sign,
}

impl Line<'_> {
    fn integrand(&self, tau: f64) -> Result<Complex64, OscError> {
        let s = Complex64::new(-0.5, tau);
        let g = gamma_pm(s, self.mu, self.sign)?;
        Ok(Complex64::from_polar(1.0 / TAU, -tau * self.log_ny) * g * self.grid.mellin(tau))
    }

    /// The integral and L¹ norm over `[a, b]`, by Gauss–Legendre panels of width ≤ `panel`.
    fn span(&self, a: f64, b: f64, panel: f64) -> Result<(Complex64, f64, usize), OscError> {
        let (x, w) = quadrature::gl16();
        let k = ((b - a) / panel).ceil().max(1.0) as usize;
        let step = (b - a) / k as f64;
        let mut sum = Complex64::new(0.0, 0.0);
        let mut l1 = 0.0;
        for i in 0..k {
            let c = a + step * (i as f64 + 0.5);
            let h = 0.5 * step;
            for (xi, wi) in x.iter().zip(w) {
                let f = self.integrand(c + h * xi)? * (h * wi);
                sum += f;
                l1 += f.norm();
            }
        }
        Ok((sum, l1, 16 * k))
    }

    fn integrate(&self, t0: f64, opts: &LineOptions) -> Result<LineIntegral, OscError> {
        let t_cap = opts.truncation.unwrap_or(t0 + opts.extension_cap);
        let rate = self.log_ny.abs() + self.grid.u_max().abs() + 3.0 * (1.0 + 0.5 * t_cap).ln() + 6.0;
        let panel = opts.panel_scale * (12.0 / rate).min(1.0);
        let t_start = opts.truncation.unwrap_or(t0);
        let (mut sum, mut l1, mut nodes) = self.span(-t_start, t_start, panel)?;
        let mut t = t_start;
        let mut tail = 0.0;
        if opts.truncation.is_none() {
            loop {
                let (hi, l1_hi, n_hi) = self.span(t, t + opts.annulus, panel)?;
                let (lo, l1_lo, n_lo) = self.span(-t - opts.annulus, -t, panel)?;
                sum += hi + lo;
                l1 += l1_hi + l1_lo;
                nodes += n_hi + n_lo;
                t += opts.annulus;
                tail = l1_hi + l1_lo;
                if tail < opts.tail_tol {
                    break;
                }
                if t > t_cap {
                    return Err(QuadratureError::TailNotDecaying { truncation: t, tail }.into());
                }
            }
        }
        let rounding = EPS * (nodes as f64 + self.grid.g.len() as f64) * (l1 + self.grid.mag);
        Ok(LineIntegral { value: SumValue::new(sum, tail + rounding), truncation: t, nodes })
    }
}

/// `J±(y,a,q,ζ) = (1/2π) ∫ (Ny)^{-iτ} γ±(-1/2+iτ) Ṽ(ζN/(a q p^λ), 1/2-iτ) dτ`.
#[allow(clippy::too_many_arguments)]
pub fn integral_j_pm(
    y: f64,
    a: u64,
    q: u64,
    zeta: f64,
    params: &KernelParams,
    v: &BumpWeight,
    mu: &LanglandsParams,
    sign: Sign,
    opts: &LineOptions,
) -> Result<LineIntegral, OscError> {
    check_aq(a, q)?;
    if !(y > 0.0) {
        return Err(OscError::InvalidParams(format!("y = {y} must be positive")));
    }
    let r = zeta * params.zeta_frequency(a, q);
    let t0 = TAU * r.abs() * v.support.1 + opts.initial_margin;
    let t_cap = opts.truncation.unwrap_or(t0 + opts.extension_cap);
    let steps = LogGrid::steps(v.support, TAU * r.abs() * v.support.1 + t_cap, opts.grid_scale);
    let grid = LogGrid::build(v.support, steps, |x| Ok(e(-r * x) * v.eval(x)))?;
    Line { grid: &grid, log_ny: (params.n * y).ln(), mu, sign }.integrate(t0, opts)
}

/// The integrand of `J±` at a single τ, for composition checks.
pub fn j_pm_integrand(
    tau: f64,
    y: f64,
    r: f64,
    params: &KernelParams,
    v: &BumpWeight,
    mu: &LanglandsParams,
    sign: Sign,
) -> Result<Complex64, OscError> {
    let steps = LogGrid::steps(v.support, TAU * r.abs() * v.support.1 + tau.abs() + 100.0, 1.0);
    let grid = LogGrid::build(v.support, steps, |x| Ok(e(-r * x) * v.eval(x)))?;
    Line { grid: &grid, log_ny: (params.n * y).ln(), mu, sign }.integrand(tau)
}

// ---------------------------------------------------------------------------
// K

/// Arguments of `K±(y1, y2, a, q)`; `y1 = m` is the additive frequency of `I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KInput {
    pub m: i64,
    pub y2: f64,
    pub a: u64,
    pub q: u64,
}

/// How much of `ζ ∈ [0, 1]` the `K` quadrature covers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZetaWindow {
    Full,
    /// `|ζ - m a/p^{κ-λ}| ≤ (q/Q) · margin`.
    Refined(f64),
}

impl ZetaWindow {
    /// Refinement with margin `(log N)²`.
    pub fn refined(params: &KernelParams) -> Self {
        ZetaWindow::Refined(params.log_margin())
    }

    /// The covered range, or `None` when it misses `[0, 1]`.
    pub fn range(&self, input: &KInput, params: &KernelParams) -> Option<(f64, f64)> {
        match *self {
            ZetaWindow::Full => Some((0.0, 1.0)),
            ZetaWindow::Refined(margin) => {
                let center = params.zeta_center(input.m, input.a);
                let half = input.q as f64 / params.big_q() * margin;
                let (lo, hi) = ((center - half).max(0.0), (center + half).min(1.0));
                (lo < hi).then_some((lo, hi))
            }
        }
    }
}

/// `(e(t) - 1)/(2πi t)`, equal to `∫_0^1 e(ζ t) dζ`.
fn unit_average(t: f64) -> Complex64 {
    let x = PI * t;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    Complex64::from_polar(sinc, x)
}

/// `K±` by exchanging the ζ-integral with the others: the ζ-integral is done
/// in closed form, leaving one line integral against the Mellin transform of
/// `V(x) ∫ U(y) e(-m'y) (∫_window e(ζc(y-x)) dζ) dy`.
#[allow(clippy::too_many_arguments)]
pub fn integral_k(
    input: &KInput,
    params: &KernelParams,
    u: &BumpWeight,
    v: &BumpWeight,
    mu: &LanglandsParams,
    sign: Sign,
    window: ZetaWindow,
    opts: &LineOptions,
) -> Result<LineIntegral, OscError> {
    check_aq(input.a, input.q)?;
    let Some((za, zb)) = window.range(input, params) else {
        return Ok(LineIntegral { value: SumValue::zero(), truncation: 0.0, nodes: 0 });
    };
    let c = params.zeta_frequency(input.a, input.q);
    let mf = params.additive_frequency(input.m, input.q);
    let len = zb - za;
    let f_max = c * za.abs().max(zb.abs());
    let t0 = TAU * f_max * v.support.1 + opts.initial_margin;
    let t_cap = opts.truncation.unwrap_or(t0 + opts.extension_cap);
    let steps = LogGrid::steps(v.support, TAU * f_max * v.support.1 + t_cap, opts.grid_scale);
    let inner_opts = Adaptive { abs_tol: 1e-11, ..Adaptive::default() };
    let pieces = pieces_for(mf.abs() + c * (za.abs() + len), 1.0);
    let grid = LogGrid::build(v.support, steps, |x| {
        let vx = v.eval(x);
        if vx == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let kernel = quadrature::integrate(
            |y| {
                let t = c * (y - x);
                e(za * t - mf * y) * unit_average(len * t) * (len * u.eval(y))
            },
            &u.breakpoints(),
            pieces,
            inner_opts,
        )?;
        Ok(kernel.value * vx)
    })?;
    Line { grid: &grid, log_ny: (params.n * input.y2).ln(), mu, sign }.integrate(t0, opts)
}

/// `K±` by direct adaptive quadrature in ζ over the window, evaluating `I`
/// and `J±` at every node.
#[allow(clippy::too_many_arguments)]
pub fn integral_k_direct(
    input: &KInput,
    params: &KernelParams,
    u: &BumpWeight,
    v: &BumpWeight,
    mu: &LanglandsParams,
    sign: Sign,
    window: ZetaWindow,
    opts: &LineOptions,
    tol: f64,
) -> Result<SumValue, OscError> {
    check_aq(input.a, input.q)?;
    let Some((za, zb)) = window.range(input, params) else {
        return Ok(SumValue::zero());
    };
    let c = params.zeta_frequency(input.a, input.q);
    let mut failure = None;
    let mut budget = 0.0;
    let f = |zeta: f64| {
        if failure.is_some() {
            return Complex64::new(0.0, 0.0);
        }
        let i = integral_i(input.m, input.a, input.q, zeta, params, u);
        let j = integral_j_pm(input.y2, input.a, input.q, zeta, params, v, mu, sign, opts);
        match (i, j) {
            (Ok(i), Ok(j)) => {
                let prod = i * j.value;
                budget = f64::max(budget, prod.error_budget);
                prod.value
            }
            (Err(err), _) | (_, Err(err)) => {
                failure = Some(err);
                Complex64::new(0.0, 0.0)
            }
        }
    };
    let r = quadrature::integrate(f, &[za, zb], pieces_for(2.0 * c, zb - za), Adaptive { abs_tol: tol, ..Adaptive::default() });
    if let Some(err) = failure {
        return Err(err);
    }
    let r = r?;
    Ok(SumValue::new(r.value, r.error + budget * (zb - za)))
}

// ---------------------------------------------------------------------------
// growth fits

/// Largest admissible growth exponent across the top decade.
pub const GROWTH_SLOPE_LIMIT: f64 = 0.1;

/// Ratios this far below the fitted constant are rounding noise.
pub const GROWTH_NOISE_FLOOR: f64 = 1e-9;

/// A fitted constant for a ratio sequence `ratio(x)` and its trend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthFit {
    /// `max ratio`, the fitted constant.
    pub constant: f64,
    /// `log(M_hi / M_lo) / log √10`, where `M_lo` and `M_hi` are the maxima of
    /// the ratio over the lower and upper halves (in `log x`) of the top decade,
    /// each floored at `GROWTH_NOISE_FLOOR · constant`.
    pub top_decade_slope: f64,
    pub points: usize,
}

impl GrowthFit {
    pub fn bounded(&self) -> bool {
        self.constant.is_finite() && self.top_decade_slope <= GROWTH_SLOPE_LIMIT
    }
}

/// Fit a growth trend; `xs` must be positive and increasing.
pub fn fit_growth(xs: &[f64], ratios: &[f64]) -> GrowthFit {
    assert_eq!(xs.len(), ratios.len());
    let points = xs.len();
    if ratios.iter().any(|r| !r.is_finite()) {
        return GrowthFit { constant: f64::INFINITY, top_decade_slope: f64::INFINITY, points };
    }
    let constant = ratios.iter().cloned().fold(0.0, f64::max);
    let Some(&x_max) = xs.last() else {
        return GrowthFit { constant, top_decade_slope: 0.0, points };
    };
    let split = x_max / 10f64.sqrt();
    let max_over = |lo: f64, hi: f64| {
        xs.iter()
            .zip(ratios)
            .filter(|(&x, _)| x >= lo && x <= hi)
            .map(|(_, &r)| r)
            .fold(constant * GROWTH_NOISE_FLOOR, f64::max)
    };
    let lower = max_over(x_max / 10.0, split);
    let upper = max_over(split, x_max);
    let top_decade_slope = if lower > 0.0 && upper > 0.0 {
        (upper / lower).ln() / (0.5 * 10f64.ln())
    } else if upper > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    GrowthFit { constant, top_decade_slope, points }
}

/// `n` points from `lo` to `hi` in geometric progression.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let step = (hi / lo).ln() / (n - 1) as f64;
    (0..n).map(|i| lo * (step * i as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cz(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn weights_support_and_plateau() {
        let u = BumpWeight::u();
        assert_eq!(u.eval(0.5), 0.0);
        assert_eq!(u.eval(2.5), 0.0);
        assert_eq!(u.eval(0.4), 0.0);
        assert_eq!(u.eval(1.0), 1.0);
        assert_eq!(u.eval(1.7), 1.0);
        assert!(u.eval(0.75) > 0.0 && u.eval(0.75) < 1.0);
        let v = BumpWeight::v();
        assert_eq!(v.eval(1.0), 0.0);
        assert!((v.eval(1.5) - 1.0).abs() < 1e-15);
        assert!(v.eval(1.01) > 0.0);
        let w = BumpWeight::w();
        assert_eq!(w.eval(0.6), 1.0);
        assert!(w.eval(1.5) > 0.0);
        assert_eq!(w.eval(2.0), 0.0);
        assert!(BumpWeight::plateau(1.0, 0.5, 2.0, 3.0).is_err());
    }

    #[test]
    fn plateau_masses() {
        // S(t) + S(1-t) = 1, so each transition contributes half its width
        assert!((BumpWeight::u().mass().unwrap() - 1.5).abs() < 1e-10);
        assert!((BumpWeight::w().mass().unwrap() - 1.125).abs() < 1e-10);
    }

    #[test]
    fn gamma_values() {
        let mut fact = 1.0;
        for n in 1..=15 {
            let g = gamma(cz(n as f64, 0.0));
            assert!((g - fact).norm() <= 1e-13 * fact, "Γ({n})");
            fact *= n as f64;
        }
        assert!((gamma(cz(0.5, 0.0)).re - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(cz(-0.5, 0.0)).re + 2.0 * PI.sqrt()).abs() < 1e-13);
        for z in [cz(0.3, 2.0), cz(-1.7, 0.4), cz(0.25, -40.0), cz(3.5, 11.0)] {
            let lhs = gamma(z) * gamma(1.0 - z);
            let rhs = PI / (z * PI).sin();
            assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm(), "reflection at {z}");
        }
        for y in [0.5, 3.0, 20.0] {
            let lhs = gamma(cz(0.0, y)).norm_sqr();
            let rhs = PI / (y * (PI * y).sinh());
            assert!((lhs - rhs).abs() <= 1e-12 * rhs);
        }
    }

    #[test]
    fn gamma_pm_conjugation_swaps_signs() {
        let real = [LanglandsParams::trivial(), LanglandsParams::new([cz(0.1, 0.0), cz(0.2, 0.0), cz(-0.3, 0.0)]).unwrap()];
        for mu in real {
            assert!(mu.is_real());
            for s in [cz(-0.5, 3.0), cz(0.0, 17.5), cz(0.3, -120.0), cz(-0.5, 199.0)] {
                for sign in [Sign::Plus, Sign::Minus] {
                    let lhs = gamma_pm(s.conj(), &mu, sign).unwrap();
                    let rhs = gamma_pm(s, &mu, sign.flip()).unwrap().conj();
                    assert!((lhs - rhs).norm() <= 1e-12 * rhs.norm().max(1.0), "s={s}");
                }
            }
        }
        // the same-sign relation holds only where the odd product vanishes
        let mu = LanglandsParams::trivial();
        let s = cz(-0.5, 3.0);
        let same = gamma_pm(s.conj(), &mu, Sign::Plus).unwrap() - gamma_pm(s, &mu, Sign::Plus).unwrap().conj();
        assert!(same.norm() > 1e-3);
    }

    #[test]
    fn gamma_pm_on_critical_lines() {
        for mu in LanglandsParams::test_triples() {
            for k in 0..=200 {
                let tau = 1.0 + k as f64 * 199.0 / 200.0;
                for sign in [Sign::Plus, Sign::Minus] {
                    let low = gamma_pm(cz(-0.5, tau), &mu, sign).unwrap();
                    let mid = gamma_pm(cz(0.0, tau), &mu, sign).unwrap();
                    assert!(low.norm().is_finite() && mid.norm().is_finite());
                    if mu == LanglandsParams::trivial() {
                        // both gamma ratios are unimodular at σ = -1/2
                        assert!(low.norm() <= 1.0 + 1e-12);
                    }
                    assert!(mid.norm() / (1.0 + tau).powf(1.5) < 2.0);
                }
            }
        }
    }

    #[test]
    fn gamma_pm_poles() {
        let mu = LanglandsParams::trivial();
        assert!(matches!(gamma_pm(cz(-1.0, 0.0), &mu, Sign::Plus), Err(OscError::NearPole { .. })));
        assert!(matches!(gamma_pm(cz(-2.0, 1e-8), &mu, Sign::Minus), Err(OscError::NearPole { .. })));
        // a denominator pole gives a finite value
        assert!(gamma_pm(cz(0.0, 0.0), &mu, Sign::Plus).unwrap().norm().is_finite());
        assert!(LanglandsParams::new([cz(1.0, 0.0), cz(0.0, 0.0), cz(0.0, 0.0)]).is_err());
    }

    #[test]
    fn mellin_examples() {
        let v = BumpWeight::v();
        let m0 = mellin_v(0.0, cz(1.0, 0.0), &v).unwrap();
        assert!((m0.value - v.mass().unwrap()).norm() < 1e-10);
        let a = mellin_v(1.0, cz(0.5, 0.0), &v).unwrap();
        let b = mellin_v_log_trapezoid(1.0, cz(0.5, 0.0), &v, 400);
        assert!((a.value - b.value).norm() < 1e-10, "{a} vs {b}");
        for (r, s) in [(-20.0, cz(0.5, -100.0)), (7.5, cz(0.5, 30.0)), (0.3, cz(-0.2, 4.0))] {
            let a = mellin_v(r, s, &v).unwrap();
            let b = mellin_v_log_trapezoid(r, s, &v, 3000);
            assert!((a.value - b.value).norm() < 1e-10, "r={r} s={s}");
        }
    }

    #[test]
    fn mellin_decay_envelope() {
        let v = BumpWeight::v();
        let rs: Vec<f64> = geometric_grid(0.05, 60.0, 40).into_iter().flat_map(|r| [r, -r]).collect();
        let taus: Vec<f64> = (0..=40).map(|k| 5.0 * k as f64).collect();
        let mut ratios = Vec::new();
        for &tau in &taus {
            // the geometric grid plus the frequencies stationary somewhere in the support
            let stationary = (0..=40).map(|k| -tau / (TAU * (1.0 + k as f64 / 40.0)));
            let env = rs
                .iter()
                .cloned()
                .chain(stationary)
                .map(|r| mellin_v_log_trapezoid(r, cz(0.5, -tau), &v, 1500).norm())
                .fold(0.0, f64::max);
            ratios.push(env * (1.0 + tau).sqrt());
        }
        let xs: Vec<f64> = taus.iter().map(|t| 1.0 + t).collect();
        let fit = fit_growth(&xs, &ratios);
        assert!(fit.bounded(), "{fit:?}");
        assert!(fit.constant < 4.0, "{fit:?}");
    }

    #[test]
    fn i_at_origin_is_mass() {
        let params = KernelParams::with_big_q(3, 6, 2, 10.0).unwrap();
        let i = integral_i(0, 11, 1, 0.0, &params, &BumpWeight::u()).unwrap();
        assert!((i.value - cz(1.5, 0.0)).norm() < 1e-10);
        assert!(integral_i(0, 0, 1, 0.0, &params, &BumpWeight::u()).is_err());
    }

    #[test]
    fn i_decays_in_m() {
        let u = BumpWeight::u();
        for big_q in [5.0, 20.0] {
            let params = KernelParams::with_big_q(3, 6, 2, big_q).unwrap();
            let m0 = params.m_cutoff();
            let a = big_q as u64 + 1;
            for q in [1u64, big_q as u64 / 2] {
                for zeta in [0.0, 0.5, 1.0] {
                    for j in 1..=6 {
                        let m = (m0 * 2f64.powi(j)).ceil() as i64;
                        for m in [m, -m] {
                            let i = integral_i(m, a, q, zeta, &params, &u).unwrap();
                            let bound = 4.0 * (m0 / m.abs() as f64).powi(2);
                            assert!(i.norm() <= bound, "Q={big_q} q={q} ζ={zeta} m={m}: {} > {bound}", i.norm());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn i_decays_away_from_center() {
        let u = BumpWeight::u();
        let params = KernelParams::with_big_q(3, 8, 2, 100.0).unwrap();
        let (a, q, m) = (101u64, 1u64, 4i64);
        let center = params.zeta_center(m, a);
        let c = params.zeta_frequency(a, q);
        let at = |d: f64| integral_i(m, a, q, center + d / c, &params, &u).unwrap().norm();
        assert!(at(0.0) > 1.4);
        assert!(at(5.0) < 1e-2);
        assert!(at(20.0) < 1e-6);
        assert!(at(40.0) < 1e-9);
    }

    fn j_setup(big_q: f64) -> (KernelParams, u64, f64) {
        let params = KernelParams::with_big_q(3, 8, 2, big_q).unwrap();
        let a = big_q.floor() as u64 + 1;
        let r = 0.5 * params.zeta_frequency(a, 1);
        (params, a, 2.0 * r.powi(3) / params.n)
    }

    #[test]
    fn j_integrand_composes() {
        let v = BumpWeight::v();
        let (params, a, y) = j_setup(4.0);
        let r = 0.5 * params.zeta_frequency(a, 1);
        for mu in LanglandsParams::test_triples() {
            for sign in [Sign::Plus, Sign::Minus] {
                let direct = j_pm_integrand(0.0, y, r, &params, &v, &mu, sign).unwrap();
                let g = gamma_pm(cz(-0.5, 0.0), &mu, sign).unwrap();
                let m = mellin_v(r, cz(0.5, 0.0), &v).unwrap();
                assert!((direct - g * m.value / TAU).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn j_truncation_and_step_consistency() {
        let v = BumpWeight::v();
        let mu = LanglandsParams::test_triples()[1];
        for big_q in [2.0, 8.0] {
            let (params, a, y) = j_setup(big_q);
            let base = integral_j_pm(y, a, 1, 0.5, &params, &v, &mu, Sign::Minus, &LineOptions::default()).unwrap();
            let doubled = LineOptions { truncation: Some(2.0 * base.truncation), ..Default::default() };
            let wide = integral_j_pm(y, a, 1, 0.5, &params, &v, &mu, Sign::Minus, &doubled).unwrap();
            assert!((base.value.value - wide.value.value).norm() < 1e-7);
            let fine = LineOptions { panel_scale: 0.5, grid_scale: 2.0, ..Default::default() };
            let halved = integral_j_pm(y, a, 1, 0.5, &params, &v, &mu, Sign::Minus, &fine).unwrap();
            assert!((base.value.value - halved.value.value).norm() < 1e-7);
            assert!(base.value.norm() <= big_q.sqrt());
        }
        assert!(integral_j_pm(0.0, 3, 1, 0.5, &j_setup(2.0).0, &v, &mu, Sign::Plus, &LineOptions::default()).is_err());
    }

    fn k_case(big_q: f64) -> (KernelParams, KInput) {
        let params = KernelParams::with_big_q(3, 8, 2, big_q).unwrap();
        let a = big_q.floor() as u64 + 1;
        let m = (729.0 / (2.0 * a as f64)).round() as i64;
        let r = params.zeta_frequency(a, 1) * params.zeta_center(m, a);
        (params, KInput { m, y2: 2.0 * r.powi(3) / params.n, a, q: 1 })
    }

    #[test]
    fn k_exchange_matches_direct_quadrature() {
        let (u, v, mu) = (BumpWeight::u(), BumpWeight::v(), LanglandsParams::trivial());
        let (params, input) = k_case(2.0);
        let opts = LineOptions::default();
        let fast = integral_k(&input, &params, &u, &v, &mu, Sign::Plus, ZetaWindow::Full, &opts).unwrap();
        let direct = integral_k_direct(&input, &params, &u, &v, &mu, Sign::Plus, ZetaWindow::Full, &opts, 1e-9).unwrap();
        assert!((fast.value.value - direct.value).norm() < 1e-7, "{} vs {}", fast.value, direct);
    }

    #[test]
    fn k_refinement_consistency() {
        let (u, v, mu) = (BumpWeight::u(), BumpWeight::v(), LanglandsParams::trivial());
        let (params, input) = k_case(100.0);
        let opts = LineOptions::default();
        let full = integral_k(&input, &params, &u, &v, &mu, Sign::Minus, ZetaWindow::Full, &opts).unwrap();
        let default = integral_k(&input, &params, &u, &v, &mu, Sign::Minus, ZetaWindow::refined(&params), &opts).unwrap();
        let narrow = integral_k(&input, &params, &u, &v, &mu, Sign::Minus, ZetaWindow::Refined(40.0), &opts).unwrap();
        assert!((full.value.value - default.value.value).norm() < 1e-7);
        assert!((full.value.value - narrow.value.value).norm() < 1e-7, "{} vs {}", full.value, narrow.value);
        assert!(full.value.norm() * 10.0 <= 1.0);
    }

    #[test]
    fn k_outside_support_vanishes() {
        let (u, v, mu) = (BumpWeight::u(), BumpWeight::v(), LanglandsParams::trivial());
        let (params, mut input) = k_case(100.0);
        input.m = 30;
        let window = ZetaWindow::Refined(40.0);
        assert_eq!(window.range(&input, &params), None);
        let opts = LineOptions::default();
        let refined = integral_k(&input, &params, &u, &v, &mu, Sign::Plus, window, &opts).unwrap();
        assert_eq!(refined.value.value, cz(0.0, 0.0));
        let full = integral_k(&input, &params, &u, &v, &mu, Sign::Plus, ZetaWindow::Full, &opts).unwrap();
        assert!(full.value.norm() < 1e-8, "{}", full.value);
    }

    #[test]
    fn growth_fit_examples() {
        let xs = geometric_grid(1.0, 200.0, 30);
        let flat: Vec<f64> = xs.iter().map(|x| 1.0 + 0.3 * x.sin()).collect();
        assert!(fit_growth(&xs, &flat).bounded());
        let growing: Vec<f64> = xs.iter().map(|x| x.powf(0.25)).collect();
        let fit = fit_growth(&xs, &growing);
        assert!(!fit.bounded());
        assert!((fit.top_decade_slope - 0.25).abs() < 0.05, "{fit:?}");
        assert!(!fit_growth(&[1.0, 2.0], &[1.0, f64::NAN]).bounded());
        // decay into rounding noise is not growth
        let decaying: Vec<f64> = xs.iter().enumerate().map(|(i, x)| (-3.0 * x).exp() * (1.0 + (i % 3) as f64)).collect();
        assert!(fit_growth(&xs, &decaying).bounded());
    }
}
