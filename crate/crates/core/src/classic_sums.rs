//! Ramanujan and Kloosterman sums.

use num_complex::Complex64;

use crate::modarith::{divisor_count, euler_phi, gcd, gcd_signed, mobius, mod_inverse, mul_mod, reduce};
use crate::sum_value::{Accumulator, RootTable, SumValue};

/// `Σ_{(α,c)=1} e(mα/c)` by direct summation.
pub fn ramanujan_sum(m: i64, c: u64) -> SumValue {
    let roots = RootTable::new(c);
    let mm = reduce(m, c);
    let mut acc = Accumulator::new();
    for alpha in 0..c {
        if gcd(alpha, c) == 1 {
            acc.add(roots.get(mul_mod(mm, alpha, c)));
        }
    }
    acc.finish()
}

/// `μ(c/(m,c)) φ(c) / φ(c/(m,c))`.
pub fn ramanujan_closed(m: i64, c: u64) -> i64 {
    let d = c / gcd_signed(m, c);
    mobius(d) * (euler_phi(c) / euler_phi(d)) as i64
}

/// `S(a, b; c) = Σ_{(x,c)=1} e((a x + b x̄)/c)` by direct summation.
pub fn kloosterman_sum(a: i64, b: i64, c: u64) -> SumValue {
    let roots = RootTable::new(c);
    kloosterman_with(&roots, reduce(a, c), reduce(b, c))
}

fn kloosterman_with(roots: &RootTable, a: u64, b: u64) -> SumValue {
    let c = roots.order();
    if c == 1 {
        return SumValue::one();
    }
    let mut acc = Accumulator::new();
    for x in 1..c {
        if let Ok(xi) = mod_inverse(x as i64, c) {
            let k = (mul_mod(a, x, c) + mul_mod(b, xi, c)) % c;
            acc.add(roots.get(k));
        }
    }
    acc.finish()
}

/// `|S(a,b;c)| / (d(c) gcd(a,b,c)^{1/2} c^{1/2})`.
pub fn weil_bound_ratio(a: i64, b: i64, c: u64) -> f64 {
    let g = gcd(gcd_signed(a, c), gcd_signed(b, c));
    let s = kloosterman_sum(a, b, c);
    s.norm() / (divisor_count(c) as f64 * (g as f64).sqrt() * (c as f64).sqrt())
}

/// All Kloosterman sums to a fixed modulus, answered from `S(1, n; c)`.
#[derive(Debug, Clone)]
pub struct KloostermanTable {
    c: u64,
    roots: RootTable,
    base: Vec<SumValue>,
}

impl KloostermanTable {
    pub fn new(c: u64) -> Self {
        assert!(c >= 1);
        let roots = RootTable::new(c);
        let base = (0..c).map(|n| kloosterman_with(&roots, 1 % c, n)).collect();
        Self { c, roots, base }
    }

    pub fn modulus(&self) -> u64 {
        self.c
    }

    pub fn get(&self, a: i64, b: i64) -> SumValue {
        let (a, b) = (reduce(a, self.c), reduce(b, self.c));
        if gcd(a, self.c) == 1 || gcd(b, self.c) == 1 {
            // S(a, b) = S(1, ab) when either argument is a unit
            self.base[mul_mod(a, b, self.c) as usize]
        } else {
            kloosterman_with(&self.roots, a, b)
        }
    }

    /// The real part, which is the whole value.
    pub fn get_real(&self, a: i64, b: i64) -> f64 {
        self.get(a, b).value.re
    }
}

/// The sum as a real number; the imaginary part cancels under `x ↔ -x`.
pub fn kloosterman_real(a: i64, b: i64, c: u64) -> SumValue {
    let s = kloosterman_sum(a, b, c);
    SumValue::new(Complex64::new(s.value.re, 0.0), s.error_budget + s.value.im.abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modarith::crt_combine;
    use crate::sum_value::e;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ramanujan_examples() {
        assert_eq!(ramanujan_closed(0, 7), 6);
        assert!(ramanujan_sum(0, 7).agrees_with(&SumValue::from_real(6.0)));
        assert_eq!(ramanujan_closed(1, 3), -1);
        assert!(ramanujan_sum(1, 3).agrees_with(&SumValue::from_real(-1.0)));
        let w = e(1.0 / 3.0);
        let direct = SumValue::exact(3.0 * (w + w * w));
        assert!(ramanujan_sum(3, 9).agrees_with(&direct));
        assert_eq!(ramanujan_closed(3, 9), -3);
    }

    #[test]
    fn ramanujan_closed_matches_naive() {
        for c in 1..=500u64 {
            for m in (-500i64..=500).step_by(7) {
                let naive = ramanujan_sum(m, c);
                let closed = SumValue::from_real(ramanujan_closed(m, c) as f64);
                assert!(naive.agrees_with(&closed), "m={m} c={c}: {naive} vs {closed}");
            }
        }
    }

    #[test]
    fn kloosterman_examples() {
        assert!(kloosterman_sum(1, 1, 2).agrees_with(&SumValue::from_real(1.0)));
        let direct = SumValue::exact(e(2.0 / 3.0) + e(1.0 / 3.0));
        assert!(kloosterman_sum(1, 1, 3).agrees_with(&direct));
        assert!(kloosterman_sum(1, 1, 3).agrees_with(&SumValue::from_real(-1.0)));
        assert!(kloosterman_sum(0, 0, 12).agrees_with(&SumValue::from_real(4.0)));
        assert!(kloosterman_sum(5, 3, 1).agrees_with(&SumValue::one()));
    }

    #[test]
    fn weil_examples() {
        assert!((weil_bound_ratio(1, 1, 3) - 1.0 / (2.0 * 3f64.sqrt())).abs() < 1e-12);
        assert!((weil_bound_ratio(0, 0, 5) - 0.4).abs() < 1e-12);
        for p in [3u64, 5, 7, 11] {
            assert!((weil_bound_ratio(1, 0, p) - 1.0 / (2.0 * (p as f64).sqrt())).abs() < 1e-12);
        }
    }

    fn primes_up_to(n: u64) -> Vec<u64> {
        (2..=n).filter(|&k| crate::modarith::is_prime(k)).collect()
    }

    #[test]
    fn weil_exhaustive_primes() {
        for p in primes_up_to(97) {
            let table = KloostermanTable::new(p);
            let bound = 2.0 * (p as f64).sqrt();
            for a in 0..p as i64 {
                for b in 0..p as i64 {
                    let g = gcd(gcd_signed(a, p), gcd_signed(b, p)) as f64;
                    let ratio = table.get(a, b).norm() / (bound * g.sqrt());
                    assert!(ratio <= 1.0 + 1e-12, "S({a},{b};{p}) ratio {ratio}");
                }
            }
        }
    }

    #[test]
    fn weil_random_composites() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2_000 {
            let c = rng.gen_range(1..=1000u64);
            let a = rng.gen_range(0..c) as i64;
            let b = rng.gen_range(0..c) as i64;
            assert!(weil_bound_ratio(a, b, c) <= 1.0 + 1e-12, "S({a},{b};{c})");
        }
    }

    #[test]
    fn table_matches_direct() {
        for c in [1u64, 2, 9, 12, 25, 45, 49] {
            let t = KloostermanTable::new(c);
            for a in 0..c as i64 {
                for b in 0..c as i64 {
                    assert!(t.get(a, b).agrees_with(&kloosterman_sum(a, b, c)), "{a} {b} {c}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_real(a in -300i64..300, b in -300i64..300, c in 1u64..400) {
            let s = kloosterman_sum(a, b, c);
            prop_assert!(s.agrees_with(&kloosterman_sum(b, a, c)));
            prop_assert!(s.value.im.abs() <= s.error_budget);
        }

        #[test]
        fn twisted_multiplicativity(a in -100i64..100, b in -100i64..100, ci in 0usize..6) {
            // S(a,b; c1 c2) = S(a c̄2, b c̄2; c1) S(a c̄1, b c̄1; c2)
            let (c1, c2) = [(3u64, 4u64), (5, 9), (7, 8), (4, 25), (11, 12), (1, 13)][ci];
            let i2 = mod_inverse(c2 as i64, c1).unwrap() as i64;
            let i1 = mod_inverse(c1 as i64, c2).unwrap() as i64;
            let lhs = kloosterman_sum(a, b, c1 * c2);
            let rhs = kloosterman_sum(a * i2, b * i2, c1) * kloosterman_sum(a * i1, b * i1, c2);
            prop_assert!(lhs.agrees_with(&rhs));
            // the same split reached through an explicit CRT parametrisation of the units
            let roots = RootTable::new(c1 * c2);
            let mut acc = Accumulator::new();
            for x1 in 0..c1 {
                for x2 in 0..c2 {
                    let x = crt_combine(&[(x1, c1), (x2, c2)]).unwrap();
                    if let Ok(xi) = mod_inverse(x as i64, c1 * c2) {
                        acc.add(roots.at(a as i128 * x as i128 + b as i128 * xi as i128));
                    }
                }
            }
            prop_assert!(acc.finish().agrees_with(&lhs));
        }
    }
}
