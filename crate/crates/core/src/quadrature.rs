//! Numerical integration of complex-valued functions on real intervals.
//!
//! Adaptive Gauss–Kronrod (7/15) with a global error heap, and fixed
//! Gauss–Legendre panels for long smooth integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("tolerance {tolerance:e} not reached after {intervals} intervals (estimate {estimate:e})")]
    NotConverged { tolerance: f64, intervals: usize, estimate: f64 },
    #[error("invalid interval [{0}, {1}]")]
    InvalidInterval(f64, f64),
    #[error("tail {tail:e} still above tolerance at truncation {truncation}")]
    TailNotDecaying { truncation: f64, tail: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptive {
    pub abs_tol: f64,
    pub max_intervals: usize,
}

impl Default for Adaptive {
    fn default() -> Self {
        Self { abs_tol: 1e-10, max_intervals: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights at XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: FnMut(f64) -> Complex64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[j];
        if j % 2 == 1 {
            g += s * WG[j / 2];
        }
    }
    let value = k * h;
    let error = ((k - g) * h).norm();
    Segment { a, b, value, error }
}

/// Integrate `f` over `[points[0], points.last()]`, splitting first at every
/// listed point and then each piece into `pieces` equal parts.
pub fn integrate<F: FnMut(f64) -> Complex64>(
    mut f: F,
    points: &[f64],
    pieces: usize,
    opts: Adaptive,
) -> Result<QuadResult, QuadratureError> {
    let mut heap = BinaryHeap::new();
    let pieces = pieces.max(1);
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(a.is_finite() && b.is_finite()) || b < a {
            return Err(QuadratureError::InvalidInterval(a, b));
        }
        if b == a {
            continue;
        }
        let step = (b - a) / pieces as f64;
        for i in 0..pieces {
            let lo = a + step * i as f64;
            let hi = if i + 1 == pieces { b } else { lo + step };
            heap.push(kronrod(&mut f, lo, hi));
        }
    }
    let mut evaluations = 15 * heap.len();
    loop {
        let total_err: f64 = heap.iter().map(|s| s.error).sum();
        if total_err <= opts.abs_tol {
            let value = heap.iter().fold(Complex64::new(0.0, 0.0), |acc, s| acc + s.value);
            return Ok(QuadResult { value, error: total_err, evaluations });
        }
        if heap.len() >= opts.max_intervals {
            return Err(QuadratureError::NotConverged {
                tolerance: opts.abs_tol,
                intervals: heap.len(),
                estimate: total_err,
            });
        }
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(QuadratureError::NotConverged {
                tolerance: opts.abs_tol,
                intervals: heap.len() + 1,
                estimate: total_err,
            });
        }
        heap.push(kronrod(&mut f, worst.a, mid));
        heap.push(kronrod(&mut f, mid, worst.b));
        evaluations += 30;
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
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
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

pub(crate) fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn polynomials_and_exponentials() {
        let r = integrate(|x| c(x * x), &[0.0, 3.0], 1, Adaptive::default()).unwrap();
        assert!((r.value.re - 9.0).abs() < 1e-13);
        let r = integrate(|x| Complex64::new(0.0, x).exp(), &[0.0, 10.0], 4, Adaptive::default()).unwrap();
        let exact = (Complex64::new(0.0, 10.0).exp() - 1.0) / Complex64::new(0.0, 1.0);
        assert!((r.value - exact).norm() < 1e-10);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let r = integrate(|x| c(x.sqrt()), &[0.0, 1.0], 1, Adaptive::default()).unwrap();
        assert!((r.value.re - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn cap_reports_failure() {
        let opts = Adaptive { abs_tol: 1e-14, max_intervals: 4 };
        let err = integrate(|x| c((50.0 * x).sin()), &[0.0, 10.0], 1, opts).unwrap_err();
        assert!(matches!(err, QuadratureError::NotConverged { .. }));
    }

    #[test]
    fn legendre_rule_is_exact_to_degree_31() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for deg in [2u32, 10, 30] {
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((s - 2.0 / (deg as f64 + 1.0)).abs() < 1e-14, "degree {deg}");
        }
    }
}
