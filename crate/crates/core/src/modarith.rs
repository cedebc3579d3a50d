//! Exact modular arithmetic: inverses, CRT, valuations, primitive roots,
//! discrete logarithms and root finding modulo prime powers.
//!
//! Every modulus handled here is bounded by [`MODULUS_CAP`], so a product of
//! two residues always fits in a `u128` intermediate.

use std::collections::HashMap;

use thiserror::Error;

/// Largest modulus accepted anywhere in the crate (2^40).
pub const MODULUS_CAP: u64 = 1 << 40;

/// Largest modulus accepted by [`hensel_roots`].
pub const HENSEL_MODULUS_CAP: u64 = 1 << 30;

/// Largest polynomial degree accepted by [`hensel_roots`].
pub const HENSEL_MAX_DEGREE: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArithError {
    #[error("{a} is not invertible modulo {m}")]
    NotInvertible { a: i64, m: u64 },
    #[error("moduli {0} and {1} are not coprime")]
    NonCoprimeModuli(u64, u64),
    #[error("{a} is not a unit modulo {m}")]
    NotAUnit { a: u64, m: u64 },
    #[error("polynomial vanishes identically modulo {0}")]
    ZeroPolynomial(u64),
    #[error("invalid modulus: {0}")]
    InvalidModulus(String),
}

/// An odd prime power `p^k` with `p^k <= 2^40`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimePowerModulus {
    p: u64,
    k: u32,
    value: u64,
}

impl PrimePowerModulus {
    pub fn new(p: u64, k: u32) -> Result<Self, ArithError> {
        if p < 3 || !is_prime(p) {
            return Err(ArithError::InvalidModulus(format!("{p} is not an odd prime")));
        }
        if k == 0 {
            return Err(ArithError::InvalidModulus("exponent must be at least 1".into()));
        }
        let value = checked_pow(p, k)
            .filter(|&v| v <= MODULUS_CAP)
            .ok_or_else(|| ArithError::InvalidModulus(format!("{p}^{k} exceeds 2^40")))?;
        Ok(Self { p, k, value })
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Order of the unit group, `p^(k-1) (p-1)`.
    pub fn phi(&self) -> u64 {
        self.value / self.p * (self.p - 1)
    }

    /// `p^j` for `j <= k`.
    pub fn power(&self, j: u32) -> u64 {
        assert!(j <= self.k, "p^{j} exceeds the modulus p^{}", self.k);
        self.p.pow(j)
    }
}

/// A modulus given together with a factorisation into pairwise coprime parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactoredModulus {
    factors: Vec<u64>,
    value: u64,
}

impl FactoredModulus {
    pub fn new(factors: Vec<u64>) -> Result<Self, ArithError> {
        let mut value: u64 = 1;
        for (i, &a) in factors.iter().enumerate() {
            if a == 0 {
                return Err(ArithError::InvalidModulus("zero factor".into()));
            }
            for &b in &factors[i + 1..] {
                if gcd(a, b) != 1 {
                    return Err(ArithError::NonCoprimeModuli(a, b));
                }
            }
            value = value
                .checked_mul(a)
                .filter(|&v| v <= MODULUS_CAP)
                .ok_or_else(|| ArithError::InvalidModulus("product exceeds 2^40".into()))?;
        }
        Ok(Self { factors, value })
    }

    /// The split `q = p^s q'` as a two-factor modulus `[p^s, q']`.
    pub fn p_split(q: u64, p: u64) -> Result<Self, ArithError> {
        let (s, q_prime) = p_adic_split(q, p);
        Self::new(vec![p.pow(s), q_prime])
    }

    pub fn factors(&self) -> &[u64] {
        &self.factors
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    /// Recombine one residue per factor.
    pub fn combine(&self, residues: &[u64]) -> Result<u64, ArithError> {
        assert_eq!(residues.len(), self.factors.len());
        let pairs: Vec<(u64, u64)> = residues.iter().copied().zip(self.factors.iter().copied()).collect();
        crt_combine(&pairs)
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// `gcd(|a|, m)` for a signed `a`. `gcd(0, m) = m`.
pub fn gcd_signed(a: i64, m: u64) -> u64 {
    gcd(a.unsigned_abs(), m)
}

/// Canonical representative of `a` in `[0, m)`.
#[inline]
pub fn reduce(a: i64, m: u64) -> u64 {
    (a as i128).rem_euclid(m as i128) as u64
}

#[inline]
pub fn reduce_wide(a: i128, m: u64) -> u64 {
    a.rem_euclid(m as i128) as u64
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Prime factorisation by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            let mut e = 0;
            while n.is_multiple_of(d) {
                n /= d;
                e += 1;
            }
            out.push((d, e));
        }
        d += if d == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n).into_iter().fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn mobius(n: u64) -> i64 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Number of positive divisors.
pub fn divisor_count(n: u64) -> u64 {
    factorize(n).into_iter().map(|(_, e)| e as u64 + 1).product()
}

/// Inverse of `a` modulo `m`, returned in `[0, m)`.
pub fn mod_inverse(a: i64, m: u64) -> Result<u64, ArithError> {
    if m == 0 {
        return Err(ArithError::InvalidModulus("modulus must be positive".into()));
    }
    if m == 1 {
        return Ok(0);
    }
    let (mut old_r, mut r) = (reduce(a, m) as i128, m as i128);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    if old_r != 1 {
        return Err(ArithError::NotInvertible { a, m });
    }
    Ok(reduce_wide(old_s, m))
}

/// Unique residue modulo the product of pairwise coprime moduli.
pub fn crt_combine(pairs: &[(u64, u64)]) -> Result<u64, ArithError> {
    crt_combine_with_modulus(pairs).map(|(x, _)| x)
}

/// As [`crt_combine`], also returning the product of the moduli.
pub fn crt_combine_with_modulus(pairs: &[(u64, u64)]) -> Result<(u64, u64), ArithError> {
    let mut x = 0u64;
    let mut modulus = 1u64;
    for &(r, m) in pairs {
        if m == 0 {
            return Err(ArithError::InvalidModulus("modulus must be positive".into()));
        }
        if gcd(modulus, m) != 1 {
            return Err(ArithError::NonCoprimeModuli(modulus, m));
        }
        let next = modulus
            .checked_mul(m)
            .filter(|&v| v <= MODULUS_CAP)
            .ok_or_else(|| ArithError::InvalidModulus("CRT product exceeds 2^40".into()))?;
        // x + modulus * t ≡ r (mod m)
        let inv = mod_inverse(modulus as i64, m)?;
        let diff = reduce_wide(r as i128 - x as i128, m);
        let t = mul_mod(diff, inv, m);
        x = ((x as u128 + modulus as u128 * t as u128) % next as u128) as u64;
        modulus = next;
    }
    Ok((x, modulus))
}

/// `q = p^s q'` with `p ∤ q'`.
pub fn p_adic_split(mut q: u64, p: u64) -> (u32, u64) {
    assert!(q >= 1 && p >= 2);
    let mut s = 0;
    while q.is_multiple_of(p) {
        q /= p;
        s += 1;
    }
    (s, q)
}

/// p-adic valuation of a nonzero integer; `None` for zero.
pub fn valuation(n: i64, p: u64) -> Option<u32> {
    if n == 0 {
        None
    } else {
        Some(p_adic_split(n.unsigned_abs(), p).0)
    }
}

fn multiplicative_order_is_full(g: u64, modulus: u64, order: u64, order_primes: &[(u64, u32)]) -> bool {
    gcd(g, modulus) == 1 && order_primes.iter().all(|&(l, _)| pow_mod(g, order / l, modulus) != 1)
}

/// Smallest primitive root modulo `p`, lifted to a generator modulo `p^k`.
pub fn primitive_root(m: &PrimePowerModulus) -> u64 {
    let p = m.p();
    let pm1 = factorize(p - 1);
    let g = (2..p)
        .find(|&g| multiplicative_order_is_full(g, p, p - 1, &pm1))
        .unwrap_or(1);
    if m.k() == 1 {
        return g;
    }
    // g generates mod p^k (k >= 2) iff g^(p-1) ≢ 1 (mod p^2).
    if pow_mod(g, p - 1, p * p) != 1 {
        g
    } else {
        g + p
    }
}

/// Exponent `j` in `[0, φ(p^k))` with `g^j ≡ a (mod p^k)`, via Pohlig–Hellman.
pub fn discrete_log(g: u64, a: u64, m: &PrimePowerModulus) -> Result<u64, ArithError> {
    let modulus = m.value();
    let a = a % modulus;
    if a.is_multiple_of(m.p()) {
        return Err(ArithError::NotAUnit { a, m: modulus });
    }
    let n = m.phi();
    let mut residues = Vec::new();
    for (l, e) in factorize(n) {
        let le = l.pow(e);
        let gamma = pow_mod(g, n / l, modulus);
        let g_inv = mod_inverse(g as i64, modulus)?;
        let mut x = 0u64;
        let mut l_i = 1u64;
        for _ in 0..e {
            // h = (a g^{-x})^{n / l^{i+1}}
            let shifted = mul_mod(a, pow_mod(g_inv, x, modulus), modulus);
            let h = pow_mod(shifted, n / (l_i * l), modulus);
            let d = log_in_prime_order(gamma, h, l, modulus).ok_or(ArithError::NotAUnit { a, m: modulus })?;
            x += d * l_i;
            l_i *= l;
        }
        residues.push((x % le, le));
    }
    let x = crt_combine(&residues)?;
    debug_assert_eq!(pow_mod(g, x, modulus), a);
    Ok(x)
}

/// Solve `gamma^d = h` where `gamma` has prime order `l`.
fn log_in_prime_order(gamma: u64, h: u64, l: u64, modulus: u64) -> Option<u64> {
    if l <= 1 << 16 {
        let mut acc = 1u64;
        for d in 0..l {
            if acc == h {
                return Some(d);
            }
            acc = mul_mod(acc, gamma, modulus);
        }
        return None;
    }
    // baby-step giant-step
    let step = (l as f64).sqrt().ceil() as u64;
    let mut table = HashMap::with_capacity(step as usize);
    let mut acc = 1u64;
    for j in 0..step {
        table.entry(acc).or_insert(j);
        acc = mul_mod(acc, gamma, modulus);
    }
    let giant = mod_inverse(pow_mod(gamma, step, modulus) as i64, modulus).ok()?;
    let mut y = h;
    for i in 0..=step {
        if let Some(&j) = table.get(&y) {
            return Some((i * step + j) % l);
        }
        y = mul_mod(y, giant, modulus);
    }
    None
}

/// Evaluate an integer polynomial (coefficient `i` multiplies `x^i`) mod `m`.
pub fn poly_eval_mod(coeffs: &[u64], x: u64, m: u64) -> u64 {
    coeffs.iter().rev().fold(0u64, |acc, &c| (mul_mod(acc, x, m) + c) % m)
}

fn poly_derivative(coeffs: &[u64], m: u64) -> Vec<u64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| mul_mod(c, i as u64 % m, m))
        .collect()
}

/// All roots of `f` modulo `p^k`, ascending.
///
/// Roots mod `p` are lifted one digit at a time. A nonsingular root has a
/// unique lift; at a singular root (`f'(x) ≡ 0 mod p`) every one of the `p`
/// candidate lifts is tested directly.
pub fn hensel_roots(coeffs: &[i64], m: &PrimePowerModulus) -> Result<Vec<u64>, ArithError> {
    if coeffs.len() > HENSEL_MAX_DEGREE + 1 {
        return Err(ArithError::InvalidModulus(format!(
            "degree {} exceeds {HENSEL_MAX_DEGREE}",
            coeffs.len() - 1
        )));
    }
    if m.value() > HENSEL_MODULUS_CAP {
        return Err(ArithError::InvalidModulus("modulus exceeds 2^30".into()));
    }
    let modulus = m.value();
    let p = m.p();
    let f: Vec<u64> = coeffs.iter().map(|&c| reduce(c, modulus)).collect();
    if f.iter().all(|&c| c == 0) {
        return Err(ArithError::ZeroPolynomial(modulus));
    }
    let df = poly_derivative(&f, modulus);

    let mut roots: Vec<u64> = (0..p).filter(|&x| poly_eval_mod(&f, x, p) == 0).collect();
    let mut pj = p;
    for _ in 1..m.k() {
        let next = pj * p;
        let mut lifted = Vec::new();
        for &r in &roots {
            let dr = poly_eval_mod(&df, r, p);
            if dr != 0 {
                let fr = poly_eval_mod(&f, r, next);
                debug_assert_eq!(fr % pj, 0);
                let quotient = fr / pj;
                let inv = mod_inverse(dr as i64, p)?;
                let t = mul_mod(p - quotient % p, inv, p) % p;
                lifted.push(r + t * pj);
            } else {
                for t in 0..p {
                    let cand = r + t * pj;
                    if poly_eval_mod(&f, cand, next) == 0 {
                        lifted.push(cand);
                    }
                }
            }
        }
        roots = lifted;
        pj = next;
    }
    roots.sort_unstable();
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_roots(coeffs: &[i64], modulus: u64) -> Vec<u64> {
        (0..modulus)
            .filter(|&x| {
                let mut acc: i128 = 0;
                for &c in coeffs.iter().rev() {
                    acc = (acc * x as i128 + c as i128).rem_euclid(modulus as i128);
                }
                acc == 0
            })
            .collect()
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(mod_inverse(3, 7), Ok(5));
        assert_eq!(mod_inverse(1, 1234), Ok(1));
        assert_eq!(mod_inverse(-1, 10), Ok(9));
        assert_eq!(mod_inverse(6, 9), Err(ArithError::NotInvertible { a: 6, m: 9 }));
    }

    #[test]
    fn crt_examples() {
        let brute = (0..15).find(|x| x % 3 == 1 && x % 5 == 2).unwrap();
        assert_eq!(crt_combine(&[(1, 3), (2, 5)]), Ok(brute));
        assert_eq!(brute, 7);
        assert_eq!(crt_combine(&[(0, 11)]), Ok(0));
        assert!(matches!(crt_combine(&[(1, 4), (2, 6)]), Err(ArithError::NonCoprimeModuli(_, _))));
    }

    #[test]
    fn split_examples() {
        assert_eq!(p_adic_split(18, 3), (2, 2));
        assert_eq!(p_adic_split(7, 3), (0, 7));
        assert_eq!(p_adic_split(27, 3), (3, 1));
        let f = FactoredModulus::p_split(45, 3).unwrap();
        assert_eq!(f.factors(), &[9, 5]);
        assert_eq!(f.value(), 45);
        assert_eq!(f.combine(&[4, 3]).unwrap() % 9, 4);
    }

    fn brute_order(g: u64, m: u64) -> u64 {
        let mut acc = g % m;
        let mut ord = 1;
        while acc != 1 {
            acc = acc * g % m;
            ord += 1;
        }
        ord
    }

    #[test]
    fn primitive_roots() {
        let m9 = PrimePowerModulus::new(3, 2).unwrap();
        let powers: Vec<u64> = (1..=6).map(|j| pow_mod(2, j, 9)).collect();
        assert_eq!(powers, vec![2, 4, 8, 7, 5, 1]);
        assert_eq!(primitive_root(&m9), 2);
        assert_eq!(primitive_root(&PrimePowerModulus::new(3, 1).unwrap()), 2);
        let m25 = PrimePowerModulus::new(5, 2).unwrap();
        assert_eq!(primitive_root(&m25), 2);
        assert_eq!(brute_order(2, 25), 20);
        for (p, k) in [(3, 5), (5, 4), (7, 3), (11, 2), (29, 2), (487, 2)] {
            let m = PrimePowerModulus::new(p, k).unwrap();
            let g = primitive_root(&m);
            assert_eq!(brute_order(g, m.value()), m.phi(), "p={p} k={k}");
        }
    }

    #[test]
    fn modulus_validation() {
        assert!(PrimePowerModulus::new(2, 3).is_err());
        assert!(PrimePowerModulus::new(9, 1).is_err());
        assert!(PrimePowerModulus::new(3, 0).is_err());
        assert!(PrimePowerModulus::new(3, 26).is_err());
        assert!(PrimePowerModulus::new(3, 25).is_ok());
    }

    #[test]
    fn discrete_log_examples() {
        let m9 = PrimePowerModulus::new(3, 2).unwrap();
        assert_eq!(discrete_log(2, 7, &m9), Ok(4));
        assert_eq!(discrete_log(2, 1, &m9), Ok(0));
        assert_eq!(discrete_log(2, 3, &m9), Err(ArithError::NotAUnit { a: 3, m: 9 }));
        let big = PrimePowerModulus::new(3, 25).unwrap();
        let g = primitive_root(&big);
        let a = pow_mod(g, 123_456_789_012, big.value());
        assert_eq!(discrete_log(g, a, &big), Ok(123_456_789_012 % big.phi()));
    }

    #[test]
    fn hensel_examples() {
        let m9 = PrimePowerModulus::new(3, 2).unwrap();
        assert_eq!(hensel_roots(&[-1, 0, 1], &m9).unwrap(), vec![1, 8]);
        assert_eq!(brute_roots(&[-1, 0, 1], 9), vec![1, 8]);
        let m = PrimePowerModulus::new(5, 3).unwrap();
        assert_eq!(hensel_roots(&[0, 1], &m).unwrap(), vec![0]);
        assert_eq!(hensel_roots(&[0, 9, 18], &m9), Err(ArithError::ZeroPolynomial(9)));
        // x^2 mod 27 is singular at 0: roots are the multiples of 9
        let m27 = PrimePowerModulus::new(3, 3).unwrap();
        assert_eq!(hensel_roots(&[0, 0, 1], &m27).unwrap(), vec![0, 9, 18]);
    }

    #[test]
    fn arithmetic_functions() {
        assert_eq!(euler_phi(36), 12);
        assert_eq!(mobius(30), -1);
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(1), 1);
        assert_eq!(divisor_count(1), 1);
        assert_eq!(divisor_count(12), 6);
        assert_eq!(valuation(-54, 3), Some(3));
        assert_eq!(valuation(0, 3), None);
    }

    proptest! {
        #[test]
        fn inverse_property(a in -10_000i64..10_000, m in 1u64..5_000) {
            match mod_inverse(a, m) {
                Ok(x) => {
                    prop_assert!(x < m);
                    prop_assert_eq!(reduce(a, m) as u128 * x as u128 % m as u128, 1 % m as u128);
                }
                Err(_) => prop_assert_ne!(gcd_signed(a, m), 1),
            }
        }

        #[test]
        fn crt_reduces_back(r1 in 0u64..1000, r2 in 0u64..1000, r3 in 0u64..1000) {
            let moduli = [7u64, 16, 45];
            let res = [r1 % 7, r2 % 16, r3 % 45];
            let pairs: Vec<_> = res.iter().copied().zip(moduli).collect();
            let x = crt_combine(&pairs).unwrap();
            prop_assert!(x < 7 * 16 * 45);
            for (r, m) in pairs {
                prop_assert_eq!(x % m, r);
            }
        }

        #[test]
        fn hensel_matches_scan(
            coeffs in proptest::collection::vec(-40i64..40, 1..=9),
            pi in 0usize..3,
            k in 1u32..=5,
        ) {
            let p = [3u64, 5, 7][pi];
            let m = PrimePowerModulus::new(p, k).unwrap();
            match hensel_roots(&coeffs, &m) {
                Ok(roots) => prop_assert_eq!(roots, brute_roots(&coeffs, m.value())),
                Err(ArithError::ZeroPolynomial(_)) => {
                    prop_assert!(coeffs.iter().all(|&c| reduce(c, m.value()) == 0));
                }
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }

        #[test]
        fn log_inverts_power(pi in 0usize..3, k in 1u32..=6, j in 0u64..100_000) {
            let p = [3u64, 5, 7][pi];
            let m = PrimePowerModulus::new(p, k).unwrap();
            let g = primitive_root(&m);
            let j = j % m.phi();
            prop_assert_eq!(discrete_log(g, pow_mod(g, j, m.value()), &m).unwrap(), j);
        }
    }
}
