//! Kloosterman's form of the circle method for the Kronecker delta.
//!
//! `δ(n) = 2 Re Σ_{q ≤ Q} Σ_{Q < a ≤ q+Q, (a,q)=1} (1/(aq)) ∫_0^1 e(n ā / q - n ζ / (a q)) dζ`,
//! with the ζ-integral done in closed form.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::modarith::{gcd, mod_inverse};
use crate::sum_value::e_frac;

/// One Farey term `(q, a, contribution)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaTerm {
    pub q: u64,
    pub a: u64,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaExpansion {
    pub n: i64,
    pub big_q: f64,
    pub terms: Vec<DeltaTerm>,
}

impl DeltaExpansion {
    pub fn new(n: i64, big_q: f64) -> Self {
        assert!(big_q >= 1.0, "Q must be at least 1");
        let q_max = big_q.floor() as u64;
        let mut terms = Vec::new();
        for q in 1..=q_max {
            let a_min = big_q.floor() as u64 + 1;
            let a_max = (q as f64 + big_q).floor() as u64;
            for a in a_min..=a_max {
                if gcd(a, q) != 1 {
                    continue;
                }
                let a_bar = if q == 1 { 0 } else { mod_inverse(a as i64, q).expect("coprime") };
                terms.push(DeltaTerm { q, a, value: term(n, a, q, a_bar) });
            }
        }
        Self { n, big_q, terms }
    }

    /// `2 Re` of the sum of all terms.
    pub fn value(&self) -> f64 {
        2.0 * self.terms.iter().map(|t| t.value.re).sum::<f64>()
    }
}

/// `(1/(aq)) e(n ā/q) ∫_0^1 e(-n ζ/(aq)) dζ`.
fn term(n: i64, a: u64, q: u64, a_bar: u64) -> Complex64 {
    let aq = (a * q) as f64;
    if n == 0 {
        return Complex64::new(1.0 / aq, 0.0);
    }
    let phase = e_frac(n as i128 * a_bar as i128, q);
    let integral = (Complex64::new(1.0, 0.0) - e_frac(-(n as i128), a * q)) / Complex64::new(0.0, TAU * n as f64);
    phase * integral
}

pub fn delta_kloosterman(n: i64, big_q: f64) -> f64 {
    DeltaExpansion::new(n, big_q).value()
}

/// `δ(n / p^λ) 1[p^λ | n]`.
pub fn delta_lowered(n: i64, p: u64, lambda: u32, big_q: f64) -> f64 {
    let pl = p.pow(lambda) as i64;
    if n % pl != 0 {
        return 0.0;
    }
    delta_kloosterman(n / pl, big_q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kronecker(n: i64) -> f64 {
        if n == 0 {
            1.0
        } else {
            0.0
        }
    }

    #[test]
    fn examples() {
        assert_eq!(delta_kloosterman(0, 1.0), 1.0);
        assert!(delta_kloosterman(5, 2.0).abs() < 1e-8);
        assert!((delta_kloosterman(0, 10.0) - 1.0).abs() < 1e-12);
        assert!(delta_lowered(9, 3, 2, 5.0).abs() < 1e-8);
        assert!((delta_lowered(0, 3, 2, 5.0) - 1.0).abs() < 1e-12);
        assert_eq!(delta_lowered(3, 3, 2, 5.0), 0.0);
    }

    #[test]
    fn exact_for_small_n() {
        for q in [1.0, 2.0, 3.0, 5.0, 10.0, 20.0, 2.5, 7.3] {
            for n in -50..=50 {
                let d = delta_kloosterman(n, q);
                assert!((d - kronecker(n)).abs() < 1e-8, "n={n} Q={q}: {d}");
            }
        }
    }

    #[test]
    fn lowered_matches_delta() {
        for n in -100..=100 {
            assert!((delta_lowered(n, 3, 2, 4.0) - kronecker(n)).abs() < 1e-8, "n={n}");
        }
    }

    #[test]
    fn terms_respect_ranges() {
        let ex = DeltaExpansion::new(3, 4.5);
        for t in &ex.terms {
            assert!(t.q as f64 <= 4.5);
            assert!(t.a as f64 > 4.5 && t.a as f64 <= t.q as f64 + 4.5);
            assert_eq!(gcd(t.a, t.q), 1);
        }
    }
}
