//! Complex values with an attached absolute rounding budget, and cached
//! tables of roots of unity.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;

const EPS: f64 = f64::EPSILON;

/// A floating-point sum together with a bound on its accumulated rounding error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumValue {
    pub value: Complex64,
    pub error_budget: f64,
}

impl SumValue {
    pub fn new(value: Complex64, error_budget: f64) -> Self {
        Self { value, error_budget }
    }

    /// An exactly known value, carrying only its own representation error.
    pub fn exact(value: Complex64) -> Self {
        Self { value, error_budget: 4.0 * EPS * value.norm() }
    }

    pub fn from_real(x: f64) -> Self {
        Self::exact(Complex64::new(x, 0.0))
    }

    pub fn zero() -> Self {
        Self { value: Complex64::new(0.0, 0.0), error_budget: 0.0 }
    }

    pub fn one() -> Self {
        Self::from_real(1.0)
    }

    pub fn norm(&self) -> f64 {
        self.value.norm()
    }

    pub fn conj(&self) -> Self {
        Self { value: self.value.conj(), error_budget: self.error_budget }
    }

    /// True when the value is indistinguishable from zero.
    pub fn vanishes(&self) -> bool {
        self.value.norm() <= self.error_budget
    }

    /// True when `|a - b|` is within the combined budgets.
    pub fn agrees_with(&self, other: &SumValue) -> bool {
        (self.value - other.value).norm() <= self.error_budget + other.error_budget
    }

    /// Multiply by an exactly known scalar.
    pub fn scale(&self, factor: Complex64) -> Self {
        let f = factor.norm();
        let value = self.value * factor;
        Self { value, error_budget: self.error_budget * f + 4.0 * EPS * value.norm() }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }
}

impl std::ops::Mul for SumValue {
    type Output = SumValue;

    fn mul(self, rhs: SumValue) -> SumValue {
        let value = self.value * rhs.value;
        let budget = self.norm() * rhs.error_budget
            + rhs.norm() * self.error_budget
            + self.error_budget * rhs.error_budget
            + 4.0 * EPS * value.norm();
        SumValue { value, error_budget: budget }
    }
}

impl std::ops::Add for SumValue {
    type Output = SumValue;

    fn add(self, rhs: SumValue) -> SumValue {
        let value = self.value + rhs.value;
        SumValue {
            value,
            error_budget: self.error_budget + rhs.error_budget + 2.0 * EPS * value.norm(),
        }
    }
}

impl fmt::Display for SumValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.12e}{:+.12e}i (±{:.3e})", self.value.re, self.value.im, self.error_budget)
    }
}

/// Running sum that tracks term count and total magnitude.
#[derive(Debug, Clone, Default)]
pub struct Accumulator {
    sum: Complex64,
    magnitude: f64,
    carried: f64,
    terms: u64,
}

impl Accumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Add a term whose own error is a few ulps of its magnitude.
    #[inline]
    pub fn add(&mut self, term: Complex64) {
        self.sum += term;
        self.magnitude += term.norm();
        self.terms += 1;
    }

    /// Add a term that already carries an error budget.
    pub fn add_value(&mut self, term: SumValue) {
        self.add(term.value);
        self.carried += term.error_budget;
    }

    pub fn terms(&self) -> u64 {
        self.terms
    }

    pub fn finish(&self) -> SumValue {
        let budget = self.carried + EPS * (self.terms as f64 + 8.0) * self.magnitude;
        SumValue { value: self.sum, error_budget: budget }
    }
}

/// `e(x) = exp(2πi x)` for real `x`.
#[inline]
pub fn e(x: f64) -> Complex64 {
    let frac = x - x.round();
    let (s, c) = (TAU * frac).sin_cos();
    Complex64::new(c, s)
}

/// `e(num/den)` with the numerator reduced exactly before conversion.
#[inline]
pub fn e_frac(num: i128, den: u64) -> Complex64 {
    let r = num.rem_euclid(den as i128) as f64;
    e(r / den as f64)
}

const TABLE_LIMIT: u64 = 1 << 22;

/// The `n`-th roots of unity `e(k/n)`, tabulated when `n` is moderate.
#[derive(Debug, Clone)]
pub struct RootTable {
    n: u64,
    table: Option<Vec<Complex64>>,
}

impl RootTable {
    pub fn new(n: u64) -> Self {
        assert!(n >= 1);
        let table = (n <= TABLE_LIMIT).then(|| (0..n).map(|k| e_frac(k as i128, n)).collect());
        Self { n, table }
    }

    pub fn order(&self) -> u64 {
        self.n
    }

    /// `e(k/n)` for `k` already reduced into `[0, n)`.
    #[inline]
    pub fn get(&self, k: u64) -> Complex64 {
        debug_assert!(k < self.n);
        match &self.table {
            Some(t) => t[k as usize],
            None => e_frac(k as i128, self.n),
        }
    }

    /// `e(k/n)` for arbitrary signed `k`.
    #[inline]
    pub fn at(&self, k: i128) -> Complex64 {
        self.get(k.rem_euclid(self.n as i128) as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_of_unity() {
        let t = RootTable::new(6);
        assert!((t.get(3) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((t.at(-1) - t.get(5)).norm() < 1e-15);
        assert!((e_frac(7, 4) - Complex64::new(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn accumulator_budget_covers_cancellation() {
        let t = RootTable::new(97);
        let mut acc = Accumulator::new();
        for k in 0..97 {
            acc.add(t.get(k));
        }
        let s = acc.finish();
        assert!(s.vanishes());
        assert!(s.error_budget >= EPS * 97.0);
    }

    #[test]
    fn products_and_agreement() {
        let a = SumValue::new(Complex64::new(2.0, 0.0), 1e-12);
        let b = SumValue::new(Complex64::new(0.0, 3.0), 1e-12);
        let c = a * b;
        assert!(c.error_budget >= 5e-12);
        assert!(c.agrees_with(&SumValue::exact(Complex64::new(0.0, 6.0))));
        assert!(!c.agrees_with(&SumValue::exact(Complex64::new(0.0, 6.1))));
    }
}
