//! Dirichlet characters modulo odd prime powers.
//!
//! A character is an index `t` relative to a fixed primitive root `g`:
//! `χ(g^j) = e(t j / φ)`. Values stay as exponents mod `φ` until a sum
//! needs a complex number.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use thiserror::Error;

use crate::modarith::{self, reduce, ArithError, PrimePowerModulus};
use crate::sum_value::{Accumulator, RootTable, SumValue};

const LOG_TABLE_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharacterError {
    #[error("character index {index} out of range for φ = {phi}")]
    IndexOutOfRange { index: u64, phi: u64 },
    #[error("depth {alpha} too large for modulus exponent {kappa}")]
    DepthTooLarge { alpha: u32, kappa: u32 },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("character is not primitive")]
    NotPrimitive,
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// The cyclic group `(Z/p^k)^*` with a chosen generator and cached logs.
#[derive(Debug)]
pub struct UnitGroup {
    modulus: PrimePowerModulus,
    generator: u64,
    logs: OnceLock<Vec<u32>>,
    roots: OnceLock<RootTable>,
}

impl UnitGroup {
    pub fn new(modulus: PrimePowerModulus) -> Self {
        let generator = modarith::primitive_root(&modulus);
        Self { modulus, generator, logs: OnceLock::new(), roots: OnceLock::new() }
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        &self.modulus
    }

    pub fn generator(&self) -> u64 {
        self.generator
    }

    pub fn phi(&self) -> u64 {
        self.modulus.phi()
    }

    fn log_table(&self) -> Option<&Vec<u32>> {
        if self.modulus.value() > LOG_TABLE_LIMIT {
            return None;
        }
        Some(self.logs.get_or_init(|| {
            let n = self.modulus.value();
            let mut table = vec![u32::MAX; n as usize];
            let mut x = 1u64;
            for j in 0..self.phi() {
                table[x as usize] = j as u32;
                x = modarith::mul_mod(x, self.generator, n);
            }
            table
        }))
    }

    /// Discrete log of `x`, or `None` when `p | x`.
    pub fn log(&self, x: i64) -> Option<u64> {
        let n = self.modulus.value();
        let r = reduce(x, n);
        if r.is_multiple_of(self.modulus.p()) {
            return None;
        }
        match self.log_table() {
            Some(t) => Some(t[r as usize] as u64),
            None => modarith::discrete_log(self.generator, r, &self.modulus).ok(),
        }
    }

    /// Roots of unity of order `φ`.
    pub fn roots(&self) -> &RootTable {
        self.roots.get_or_init(|| RootTable::new(self.phi()))
    }
}

/// A Dirichlet character modulo `p^κ`.
#[derive(Debug, Clone)]
pub struct DirichletCharacter {
    group: Arc<UnitGroup>,
    index: u64,
}

/// The additive-character frequency of `χ` on `1 + p^{κ-α} Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PostnikovParameter {
    pub eta: u64,
    pub alpha: u32,
}

pub fn char_from_index(modulus: PrimePowerModulus, t: u64) -> Result<DirichletCharacter, CharacterError> {
    DirichletCharacter::new(Arc::new(UnitGroup::new(modulus)), t)
}

impl DirichletCharacter {
    pub fn new(group: Arc<UnitGroup>, index: u64) -> Result<Self, CharacterError> {
        let phi = group.phi();
        if index >= phi {
            return Err(CharacterError::IndexOutOfRange { index, phi });
        }
        Ok(Self { group, index })
    }

    /// All characters sharing this character's group.
    pub fn with_index(&self, index: u64) -> Result<Self, CharacterError> {
        Self::new(self.group.clone(), index)
    }

    pub fn group(&self) -> &Arc<UnitGroup> {
        &self.group
    }

    pub fn modulus(&self) -> &PrimePowerModulus {
        self.group.modulus()
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn phi(&self) -> u64 {
        self.group.phi()
    }

    pub fn conj(&self) -> Self {
        let phi = self.phi();
        Self { group: self.group.clone(), index: (phi - self.index) % phi }
    }

    /// `χ(x) = e(k/φ)` with `k` returned, or `None` when `χ(x) = 0`.
    pub fn exponent(&self, x: i64) -> Option<u64> {
        self.group
            .log(x)
            .map(|j| modarith::mul_mod(self.index, j, self.phi()))
    }

    pub fn eval(&self, x: i64) -> Complex64 {
        match self.exponent(x) {
            Some(k) => self.group.roots().get(k),
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// `χ̄(x)`.
    pub fn eval_conj(&self, x: i64) -> Complex64 {
        match self.exponent(x) {
            Some(k) => self.group.roots().get((self.phi() - k) % self.phi()),
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn is_principal(&self) -> bool {
        self.index == 0
    }

    /// Nontrivial on `1 + p^{κ-1} Z`.
    pub fn is_primitive(&self) -> bool {
        let m = self.modulus();
        let base = if m.k() == 1 { self.group.generator() } else { 1 + m.power(m.k() - 1) };
        self.exponent(base as i64) != Some(0)
    }

    /// `Σ_{β mod p^κ} χ(β) e(β / p^κ)` by direct summation.
    pub fn gauss_sum(&self) -> SumValue {
        let n = self.modulus().value();
        let additive = RootTable::new(n);
        let mut acc = Accumulator::new();
        for beta in 1..n {
            if let Some(k) = self.exponent(beta as i64) {
                acc.add(self.group.roots().get(k) * additive.get(beta));
            }
        }
        acc.finish()
    }

    /// The unique `η mod p^α` with `χ(1 + z p^{κ-α}) = e(η z / p^α)` for all `z`.
    pub fn postnikov_eta(&self, alpha: u32) -> Result<PostnikovParameter, CharacterError> {
        let m = *self.modulus();
        let kappa = m.k();
        if alpha == 0 {
            return Err(CharacterError::ZeroDepth);
        }
        if 2 * alpha > kappa {
            return Err(CharacterError::DepthTooLarge { alpha, kappa });
        }
        if !self.is_primitive() {
            return Err(CharacterError::NotPrimitive);
        }
        let p_alpha = m.power(alpha);
        let base = 1 + m.power(kappa - alpha);
        // 1 + p^{κ-α} has order p^α, so its log is a multiple of φ / p^α.
        let ell = self.group.log(base as i64).expect("1 + p^j is a unit");
        let step = self.phi() / p_alpha;
        debug_assert_eq!(ell % step, 0);
        let j = ell / step;
        let eta = modarith::mul_mod(self.index % p_alpha, j % p_alpha, p_alpha);
        Ok(PostnikovParameter { eta, alpha })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sum_value::e;
    use proptest::prelude::*;

    fn chi(p: u64, k: u32, t: u64) -> DirichletCharacter {
        char_from_index(PrimePowerModulus::new(p, k).unwrap(), t).unwrap()
    }

    #[test]
    fn evaluation_examples() {
        let c = chi(3, 2, 1);
        assert!((c.eval(2) - e(1.0 / 6.0)).norm() < 1e-15);
        assert_eq!(c.eval(3), Complex64::new(0.0, 0.0));
        assert!((c.eval(8) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!(matches!(
            char_from_index(PrimePowerModulus::new(3, 2).unwrap(), 6),
            Err(CharacterError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn primitivity_examples() {
        assert!(chi(3, 2, 1).is_primitive());
        assert!(!chi(3, 2, 3).is_primitive());
        assert!(!chi(3, 1, 0).is_primitive());
        assert!(chi(3, 1, 1).is_primitive());
    }

    #[test]
    fn gauss_sum_examples() {
        let g = chi(3, 1, 1).gauss_sum();
        let expected = SumValue::exact(e(1.0 / 3.0) - e(2.0 / 3.0));
        assert!(g.agrees_with(&expected));
        assert!((g.value - Complex64::new(0.0, 3f64.sqrt())).norm() < 1e-12);
        assert!(chi(3, 1, 0).gauss_sum().agrees_with(&SumValue::from_real(-1.0)));
    }

    #[test]
    fn eta_examples() {
        let c = chi(3, 2, 1);
        let eta = c.postnikov_eta(1).unwrap();
        assert_eq!(eta.eta, 1);
        assert!((c.eval(4) - e(1.0 / 3.0)).norm() < 1e-15);
        assert_eq!(c.exponent(1), Some(0));
        assert_eq!(c.postnikov_eta(2), Err(CharacterError::DepthTooLarge { alpha: 2, kappa: 2 }));
    }

    #[test]
    fn gauss_sum_modulus_sweep() {
        for p in [3u64, 5, 7] {
            for k in 1..=6u32 {
                let m = PrimePowerModulus::new(p, k).unwrap();
                if m.value() > 20_000 {
                    continue;
                }
                let group = Arc::new(UnitGroup::new(m));
                let phi = m.phi();
                let step = (phi / 7).max(1);
                let mut t = 1;
                while t < phi {
                    let c = DirichletCharacter::new(group.clone(), t).unwrap();
                    if c.is_primitive() {
                        let g = c.gauss_sum();
                        let target = (m.value() as f64).sqrt();
                        assert!((g.norm() - target).abs() <= 1e-9 * target, "p={p} k={k} t={t}");
                    }
                    t += step;
                }
            }
        }
    }

    #[test]
    fn postnikov_identity_sweep() {
        for p in [3u64, 5, 7] {
            for kappa in 2..=6u32 {
                let m = PrimePowerModulus::new(p, kappa).unwrap();
                let group = Arc::new(UnitGroup::new(m));
                for t in (1..m.phi()).step_by(((m.phi() / 11).max(1)) as usize) {
                    let c = DirichletCharacter::new(group.clone(), t).unwrap();
                    if !c.is_primitive() {
                        continue;
                    }
                    for alpha in 1..=kappa / 2 {
                        let eta = c.postnikov_eta(alpha).unwrap();
                        let pa = m.power(alpha);
                        assert_ne!(eta.eta % p, 0);
                        for z in 0..pa {
                            let x = 1 + z * m.power(kappa - alpha);
                            // e(k/φ) = e(η z / p^α)  ⇔  k · p^α ≡ η z φ (mod φ p^α)
                            let k = c.exponent(x as i64).unwrap() as u128;
                            let lhs = k * pa as u128;
                            let rhs = (eta.eta as u128 * z as u128 % pa as u128) * m.phi() as u128;
                            assert_eq!(lhs, rhs, "p={p} κ={kappa} t={t} α={alpha} z={z}");
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn multiplicative(t in 0u64..1000, a in -500i64..500, b in -500i64..500) {
            let m = PrimePowerModulus::new(5, 3).unwrap();
            let c = char_from_index(m, t % m.phi()).unwrap();
            let ab = match (c.exponent(a), c.exponent(b)) {
                (Some(x), Some(y)) => Some((x + y) % m.phi()),
                _ => None,
            };
            prop_assert_eq!(c.exponent(a * b), ab);
        }

        #[test]
        fn primitive_iff_index_unit(pi in 0usize..3, k in 2u32..=4, t in 0u64..10_000) {
            let p = [3u64, 5, 7][pi];
            let m = PrimePowerModulus::new(p, k).unwrap();
            let t = t % m.phi();
            prop_assert_eq!(char_from_index(m, t).unwrap().is_primitive(), !t.is_multiple_of(p));
        }
    }
}
