//! Character sums twisted by Kloosterman sums modulo `q p^λ`.
//!
//! Each sum has a direct evaluation and at least one structural one: the
//! Poisson closed form of the `β`-sum, the CRT split of the dual sums into a
//! coprime-to-`p` part and a `p`-part, and evaluations of the `p`-part by
//! summing out Kloosterman sums and by counting solutions of congruences.
//!
//! Conventions. All inverses are taken modulo the modulus of the enclosing
//! exponential. `χ̄` of a non-unit is 0. In the c-sums, `c` runs over the
//! residues mod `p^{λ-r}` for which `c̄ mod p̂_r` exists, so every `c` is kept
//! when `p̂_r = 1`. The sign of the dual frequency is folded into `n2`.

use num_complex::Complex64;
use thiserror::Error;

use crate::characters::{CharacterError, DirichletCharacter};
use crate::classic_sums::{kloosterman_sum, ramanujan_closed, KloostermanTable};
use crate::modarith::{self, gcd, gcd_signed, mod_inverse, p_adic_split, reduce_wide, ArithError};
use crate::sum_value::{e_frac, Accumulator, RootTable, SumValue};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SumError {
    #[error("divisibility fails: {0}")]
    NotDivisible(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("{a} has no inverse modulo {m}")]
    NonInvertibleWitness { a: i128, m: u64 },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Character(#[from] CharacterError),
}

fn inv(a: i128, m: u64) -> Result<u64, SumError> {
    let r = reduce_wide(a, m);
    mod_inverse(r as i64, m).map_err(|_| SumError::NonInvertibleWitness { a, m })
}

fn pow(p: u64, e: u32) -> u64 {
    p.pow(e)
}

/// `χ̄(x)` for an arbitrary integer.
fn chi_bar(chi: &DirichletCharacter, x: i128) -> Complex64 {
    chi.eval_conj(reduce_wide(x, chi.modulus().value()) as i64)
}

fn chi_at(chi: &DirichletCharacter, x: i128) -> Complex64 {
    chi.eval(reduce_wide(x, chi.modulus().value()) as i64)
}

fn check_modulus(chi: &DirichletCharacter, kappa: u32, lambda: u32) -> Result<u64, SumError> {
    if chi.modulus().k() != kappa {
        return Err(SumError::InvalidParams(format!(
            "character modulus exponent {} differs from kappa {kappa}",
            chi.modulus().k()
        )));
    }
    if lambda >= kappa {
        return Err(SumError::InvalidParams(format!("lambda {lambda} must be below kappa {kappa}")));
    }
    Ok(chi.modulus().p())
}

// ---------------------------------------------------------------------------
// The Poisson-dual sum A(m, a, b, q)

/// Parameters of `Σ_{β mod q p^κ} χ(β) e((m - (ā + b q) p^{κ-λ}) β / (q p^κ))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AParams {
    pub m: i64,
    pub a: i64,
    pub b: u64,
    pub q: u64,
    pub kappa: u32,
    pub lambda: u32,
}

impl AParams {
    fn validate(&self, chi: &DirichletCharacter) -> Result<u64, SumError> {
        let p = check_modulus(chi, self.kappa, self.lambda)?;
        if self.lambda == 0 {
            return Err(SumError::InvalidParams("lambda must be at least 1".into()));
        }
        if self.q == 0 || gcd_signed(self.a, self.q) != 1 {
            return Err(SumError::InvalidParams(format!("a = {} must be a unit mod q = {}", self.a, self.q)));
        }
        Ok(p)
    }

    /// Default lift of `ā`: the inverse mod `q p^λ` when it exists, else mod `q`.
    pub fn default_a_bar(&self, p: u64) -> i128 {
        let big = self.q * pow(p, self.lambda);
        match mod_inverse(self.a, big) {
            Ok(x) => x as i128,
            Err(_) => mod_inverse(self.a, self.q).expect("validated unit") as i128,
        }
    }

    fn frequency(&self, p: u64, a_bar: i128) -> i128 {
        self.m as i128 - (a_bar + self.b as i128 * self.q as i128) * pow(p, self.kappa - self.lambda) as i128
    }
}

/// Direct evaluation with the default lift of `ā`.
pub fn sum_a_naive(chi: &DirichletCharacter, params: &AParams) -> Result<SumValue, SumError> {
    let p = params.validate(chi)?;
    let roots = RootTable::new(params.q * chi.modulus().value());
    sum_a_naive_with(chi, params, params.default_a_bar(p), &roots)
}

/// Direct evaluation with an explicit lift of `ā` and a table of `(q p^κ)`-th roots.
pub fn sum_a_naive_with(
    chi: &DirichletCharacter,
    params: &AParams,
    a_bar: i128,
    roots: &RootTable,
) -> Result<SumValue, SumError> {
    let p = params.validate(chi)?;
    let pk = chi.modulus().value();
    let n = params.q * pk;
    assert_eq!(roots.order(), n, "root table order must be q p^κ");
    let k = reduce_wide(params.frequency(p, a_bar), n);
    let phi_roots = chi.group().roots();
    let mut acc = Accumulator::new();
    for beta in 0..n {
        if let Some(x) = chi.exponent((beta % pk) as i64) {
            acc.add(phi_roots.get(x) * roots.get(modarith::mul_mod(k, beta, n)));
        }
    }
    Ok(acc.finish())
}

/// Closed form `q 1[q | X] χ(q') χ̄(X / p^s) τ_χ` with `X = m - (ā + b q) p^{κ-λ}`.
pub fn sum_a_closed(chi: &DirichletCharacter, params: &AParams) -> Result<SumValue, SumError> {
    let p = params.validate(chi)?;
    let tau = chi.gauss_sum();
    sum_a_closed_with(chi, params, params.default_a_bar(p), &tau)
}

pub fn sum_a_closed_with(
    chi: &DirichletCharacter,
    params: &AParams,
    a_bar: i128,
    gauss: &SumValue,
) -> Result<SumValue, SumError> {
    let p = params.validate(chi)?;
    let (s, q_prime) = p_adic_split(params.q, p);
    let x = params.frequency(p, a_bar);
    if x.rem_euclid(params.q as i128) != 0 {
        return Ok(SumValue::zero());
    }
    let y = x / pow(p, s) as i128;
    let factor = chi_at(chi, q_prime as i128) * chi_bar(chi, y) * params.q as f64;
    Ok(*gauss * SumValue::exact(factor))
}

// ---------------------------------------------------------------------------
// The p-adic weights C_r and B_s

/// `ϖ = (1 - q q̄) / p^r` with `q̄` the inverse of `q` mod `p^λ` in `[0, p^λ)`.
pub fn varpi(q: u64, r: u32, lambda: u32, p: u64) -> Result<i128, SumError> {
    let qbar = inv(q as i128, pow(p, lambda))? as i128;
    varpi_from_lift(q, qbar, r, p)
}

/// `(1 - q q̄) / p^r` for a caller-chosen `q̄`.
pub fn varpi_from_lift(q: u64, qbar: i128, r: u32, p: u64) -> Result<i128, SumError> {
    let num = 1 - q as i128 * qbar;
    let pr = p.checked_pow(r).ok_or_else(|| SumError::NotDivisible("p^r overflows".into()))? as i128;
    if num % pr != 0 {
        return Err(SumError::NotDivisible(format!("p^{r} does not divide 1 - {q}·{qbar}")));
    }
    Ok(num / pr)
}

/// Arguments of the weight `C_r(m, n1', n1'', n2, a, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CrInput {
    pub m: i64,
    pub n1p: u64,
    pub n1pp: u64,
    pub n2: i64,
    pub a: i64,
    pub q: u64,
    pub r: u32,
    pub lambda: u32,
    pub kappa: u32,
}

impl CrInput {
    fn validate(&self, chi: &DirichletCharacter) -> Result<u64, SumError> {
        let p = check_modulus(chi, self.kappa, self.lambda)?;
        if self.r > self.lambda {
            return Err(SumError::InvalidParams(format!("r = {} exceeds lambda", self.r)));
        }
        if self.q == 0 || self.q.is_multiple_of(p) {
            return Err(SumError::InvalidParams(format!("q = {} must be coprime to p", self.q)));
        }
        if self.n1p == 0 || !self.q.is_multiple_of(self.n1p) {
            return Err(SumError::InvalidParams(format!("n1' = {} must divide q = {}", self.n1p, self.q)));
        }
        let pl = pow(p, self.lambda - self.r);
        if self.n1pp == 0 || !pl.is_multiple_of(self.n1pp) {
            return Err(SumError::InvalidParams(format!("n1'' = {} must divide p^(λ-r) = {pl}", self.n1pp)));
        }
        if gcd_signed(self.a, self.q) != 1 {
            return Err(SumError::InvalidParams(format!("a = {} must be a unit mod q", self.a)));
        }
        Ok(p)
    }
}

/// Precomputed pieces of `C_r` as a function of its Kloosterman frequency.
struct CrEvaluator {
    q_hat: KloostermanTable,
    p_hat: KloostermanTable,
    first_arg: i64,
    p_hat_inv: i64,
    q_hat_inv: i64,
    terms: Vec<(Complex64, i64)>,
}

impl CrEvaluator {
    fn new(chi: &DirichletCharacter, input: &CrInput, qbar: Option<i128>) -> Result<Self, SumError> {
        let p = input.validate(chi)?;
        let l = input.lambda - input.r;
        let q_hat = input.q / input.n1p;
        let p_hat = pow(p, l) / input.n1pp;
        let w = match qbar {
            Some(lift) => varpi_from_lift(input.q, lift, input.r, p)?,
            None => varpi(input.q, input.r, input.lambda, p)?,
        };
        let first_arg = (input.a as i128 * inv(w * p_hat as i128, q_hat)? as i128).rem_euclid(q_hat as i128) as i64;
        let q_hat_inv = inv(q_hat as i128, p_hat)? as i64;
        let shift = pow(p, input.kappa - l) as i128;
        let mut terms = Vec::new();
        for c in 0..pow(p, l) {
            let Ok(cbar) = inv(c as i128, p_hat) else { continue };
            let value = chi_bar(chi, input.m as i128 - c as i128 * shift);
            if value.norm() == 0.0 {
                continue;
            }
            terms.push((value, modarith::mul_mod(cbar, q_hat_inv as u64, p_hat) as i64));
        }
        Ok(Self {
            q_hat: KloostermanTable::new(q_hat),
            p_hat: KloostermanTable::new(p_hat),
            first_arg,
            p_hat_inv: inv(p_hat as i128, q_hat)? as i64,
            q_hat_inv,
            terms,
        })
    }

    fn eval(&self, n2: i64) -> SumValue {
        let qh = self.q_hat.modulus() as i128;
        let ph = self.p_hat.modulus() as i128;
        let b1 = (n2 as i128 * self.p_hat_inv as i128).rem_euclid(qh) as i64;
        let b2 = (n2 as i128 * self.q_hat_inv as i128).rem_euclid(ph) as i64;
        let outer = self.q_hat.get(self.first_arg, b1);
        let mut acc = Accumulator::new();
        for &(value, arg) in &self.terms {
            acc.add_value(self.p_hat.get(arg, b2).scale(value));
        }
        outer * acc.finish()
    }
}

/// `C_r` as the product of a Kloosterman sum mod `q̂` and a twisted c-sum mod `p̂_r`.
pub fn sum_c_r(chi: &DirichletCharacter, input: &CrInput) -> Result<SumValue, SumError> {
    Ok(CrEvaluator::new(chi, input, None)?.eval(input.n2))
}

/// As [`sum_c_r`] with `ϖ` computed from a caller-chosen `q̄`.
pub fn sum_c_r_with_qbar(chi: &DirichletCharacter, input: &CrInput, qbar: i128) -> Result<SumValue, SumError> {
    Ok(CrEvaluator::new(chi, input, Some(qbar))?.eval(input.n2))
}

/// `C_r` before the Kloosterman sum is factored:
/// `Σ_c χ̄(m - x_c p^{κ-λ+r}) S(x̄_c, n2; q̂ p̂_r)` with `x_c = ā ϖ + c q`.
pub fn sum_c_r_unfactored(chi: &DirichletCharacter, input: &CrInput) -> Result<SumValue, SumError> {
    let p = input.validate(chi)?;
    let l = input.lambda - input.r;
    let q_hat = input.q / input.n1p;
    let p_hat = pow(p, l) / input.n1pp;
    let modulus = q_hat * p_hat;
    let w = varpi(input.q, input.r, input.lambda, p)?;
    let a_bar = inv(input.a as i128, input.q)? as i128;
    let shift = pow(p, input.kappa - l) as i128;
    let mut acc = Accumulator::new();
    for c in 0..pow(p, l) as i128 {
        let x = a_bar * w + c * input.q as i128;
        if gcd(reduce_wide(x, modulus), modulus) != 1 {
            continue;
        }
        let value = chi_bar(chi, input.m as i128 - x * shift);
        let xbar = inv(x, modulus)? as i64;
        acc.add_value(kloosterman_sum(xbar, input.n2, modulus).scale(value));
    }
    Ok(acc.finish())
}

/// Arguments of the weight `B_s(m, n1', n1'', n2, a, q)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BsInput {
    pub m: i64,
    pub n1p: u64,
    pub n1pp: u64,
    pub n2: i64,
    pub a: i64,
    pub q: u64,
    pub s: u32,
    pub lambda: u32,
    pub kappa: u32,
}

impl BsInput {
    fn validate(&self, chi: &DirichletCharacter) -> Result<u64, SumError> {
        let p = check_modulus(chi, self.kappa, self.lambda)?;
        if self.s == 0 {
            return Err(SumError::InvalidParams("s must be at least 1".into()));
        }
        if self.q == 0 || self.q.is_multiple_of(p) {
            return Err(SumError::InvalidParams(format!("q = {} must be coprime to p", self.q)));
        }
        if self.n1p == 0 || !self.q.is_multiple_of(self.n1p) {
            return Err(SumError::InvalidParams(format!("n1' = {} must divide q = {}", self.n1p, self.q)));
        }
        let rho = p
            .checked_pow(self.lambda + self.s)
            .ok_or_else(|| SumError::InvalidParams("p^(λ+s) overflows".into()))?;
        if self.n1pp == 0 || rho % self.n1pp != 0 {
            return Err(SumError::InvalidParams(format!("n1'' = {} must divide p^(λ+s)", self.n1pp)));
        }
        if gcd_signed(self.a, self.q * p) != 1 {
            return Err(SumError::InvalidParams(format!("a = {} must be a unit mod pq", self.a)));
        }
        if self.kappa - self.lambda < self.s {
            return Err(SumError::NotDivisible(format!(
                "kappa - lambda = {} is below s = {}",
                self.kappa - self.lambda,
                self.s
            )));
        }
        if self.m.rem_euclid(pow(p, self.s) as i64) != 0 {
            return Err(SumError::NotDivisible(format!("p^{} does not divide m = {}", self.s, self.m)));
        }
        Ok(p)
    }

    fn a_bar(&self, p: u64) -> Result<i128, SumError> {
        Ok(inv(self.a as i128, self.q * pow(p, self.lambda + self.s))? as i128)
    }
}

struct BsEvaluator {
    q_hat: KloostermanTable,
    rho_hat: KloostermanTable,
    first_arg: i64,
    rho_inv: i64,
    q_hat_inv: i64,
    terms: Vec<(Complex64, i64)>,
}

impl BsEvaluator {
    fn new(chi: &DirichletCharacter, input: &BsInput, a_bar: Option<i128>) -> Result<Self, SumError> {
        let p = input.validate(chi)?;
        let q_hat = input.q / input.n1p;
        let rho_hat = pow(p, input.lambda + input.s) / input.n1pp;
        let a_bar = match a_bar {
            Some(x) => x,
            None => input.a_bar(p)?,
        };
        let ps = pow(p, input.s) as i128;
        let shift = pow(p, input.kappa - input.lambda) as i128;
        let rho_inv = inv(rho_hat as i128, q_hat)? as i64;
        let q_hat_inv = inv(q_hat as i128, rho_hat)? as i64;
        let mut terms = Vec::new();
        for b in 0..pow(p, input.lambda) as i128 {
            let x = a_bar + b * ps;
            let num = input.m as i128 - x * shift;
            if num % ps != 0 {
                return Err(SumError::NotDivisible(format!("p^{} does not divide {num}", input.s)));
            }
            let value = chi_bar(chi, num / ps);
            if value.norm() == 0.0 {
                continue;
            }
            let arg = modarith::mul_mod(inv(x, rho_hat)?, q_hat_inv as u64, rho_hat) as i64;
            terms.push((value, arg));
        }
        let first_arg = (input.a as i128 * rho_inv as i128).rem_euclid(q_hat as i128) as i64;
        Ok(Self {
            q_hat: KloostermanTable::new(q_hat),
            rho_hat: KloostermanTable::new(rho_hat),
            first_arg,
            rho_inv,
            q_hat_inv,
            terms,
        })
    }

    fn eval(&self, n2: i64) -> SumValue {
        let qh = self.q_hat.modulus() as i128;
        let rh = self.rho_hat.modulus() as i128;
        let b1 = (n2 as i128 * self.rho_inv as i128).rem_euclid(qh) as i64;
        let b2 = (n2 as i128 * self.q_hat_inv as i128).rem_euclid(rh) as i64;
        let outer = self.q_hat.get(self.first_arg, b1);
        let mut acc = Accumulator::new();
        for &(value, arg) in &self.terms {
            acc.add_value(self.rho_hat.get(arg, b2).scale(value));
        }
        outer * acc.finish()
    }
}

pub fn sum_b_s(chi: &DirichletCharacter, input: &BsInput) -> Result<SumValue, SumError> {
    Ok(BsEvaluator::new(chi, input, None)?.eval(input.n2))
}

/// As [`sum_b_s`] with a caller-chosen lift of `ā` (any integer `≡ a^{-1} mod q p^{λ+s}`).
pub fn sum_b_s_with_a_bar(chi: &DirichletCharacter, input: &BsInput, a_bar: i128) -> Result<SumValue, SumError> {
    Ok(BsEvaluator::new(chi, input, Some(a_bar))?.eval(input.n2))
}

/// `B_s` before the Kloosterman sum is factored, with `x_b = ā + b q p^s`.
pub fn sum_b_s_unfactored(chi: &DirichletCharacter, input: &BsInput) -> Result<SumValue, SumError> {
    let p = input.validate(chi)?;
    let q_hat = input.q / input.n1p;
    let rho_hat = pow(p, input.lambda + input.s) / input.n1pp;
    let modulus = q_hat * rho_hat;
    let a_bar = input.a_bar(p)?;
    let ps = pow(p, input.s) as i128;
    let shift = pow(p, input.kappa - input.lambda) as i128;
    let mut acc = Accumulator::new();
    for b in 0..pow(p, input.lambda) as i128 {
        let x = a_bar + b * input.q as i128 * ps;
        let num = input.m as i128 - x * shift;
        if num % ps != 0 {
            return Err(SumError::NotDivisible(format!("p^{} does not divide {num}", input.s)));
        }
        let value = chi_bar(chi, num / ps);
        let xbar = inv(x, modulus)? as i64;
        acc.add_value(kloosterman_sum(xbar, input.n2, modulus).scale(value));
    }
    Ok(acc.finish())
}

// ---------------------------------------------------------------------------
// Dual sums C* and B*

/// Parameters of the dual sum `C*`; `sign · n2` is the dual frequency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CStarParams {
    pub m1: i64,
    pub m2: i64,
    pub a1: i64,
    pub a2: i64,
    pub q1: u64,
    pub q2: u64,
    pub n1p: u64,
    pub n1pp: u64,
    pub n2: i64,
    pub r: u32,
    pub lambda: u32,
    pub kappa: u32,
    pub sign: i8,
}

/// Moduli derived from a parameter tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualModuli {
    pub q1_hat: u64,
    pub q2_hat: u64,
    /// `p̂_r` for `C*`, `ρ̂_s` for `B*`.
    pub p_hat: u64,
    /// Length of the `c`-sums: `p^{λ-r}` or `p^λ`.
    pub c_range: u64,
}

impl DualModuli {
    pub fn total(&self) -> u64 {
        self.q1_hat * self.q2_hat * self.p_hat
    }
}

fn check_sign(sign: i8) -> Result<(), SumError> {
    if sign == 1 || sign == -1 {
        Ok(())
    } else {
        Err(SumError::InvalidParams(format!("sign must be ±1, got {sign}")))
    }
}

impl CStarParams {
    pub fn side(&self, i: usize) -> CrInput {
        let (m, a, q) = if i == 1 { (self.m1, self.a1, self.q1) } else { (self.m2, self.a2, self.q2) };
        CrInput {
            m,
            n1p: self.n1p,
            n1pp: self.n1pp,
            n2: 0,
            a,
            q,
            r: self.r,
            lambda: self.lambda,
            kappa: self.kappa,
        }
    }

    /// `sign · n2`.
    pub fn frequency(&self) -> i64 {
        self.sign as i64 * self.n2
    }

    pub fn validate(&self, chi: &DirichletCharacter) -> Result<DualModuli, SumError> {
        check_sign(self.sign)?;
        let p = self.side(1).validate(chi)?;
        self.side(2).validate(chi)?;
        for (m, q) in [(self.m1, self.q1), (self.m2, self.q2)] {
            if m == 0 {
                return Err(SumError::InvalidParams("m_i must be nonzero".into()));
            }
            if gcd_signed(m, q) != 1 {
                return Err(SumError::InvalidParams(format!("m = {m} must be coprime to q = {q}")));
            }
        }
        let l = self.lambda - self.r;
        Ok(DualModuli {
            q1_hat: self.q1 / self.n1p,
            q2_hat: self.q2 / self.n1p,
            p_hat: pow(p, l) / self.n1pp,
            c_range: pow(p, l),
        })
    }

    /// `λ - r = 2α + δ`.
    pub fn alpha_delta(&self) -> (u32, u32) {
        let l = self.lambda - self.r;
        (l / 2, l % 2)
    }
}

/// Direct evaluation of `C* = Σ_β C_r(m1, β) conj(C_r(m2, β)) e(±n2 β / (q̂1 q̂2 p̂_r))`.
pub fn sum_cstar_naive(chi: &DirichletCharacter, params: &CStarParams) -> Result<SumValue, SumError> {
    let dm = params.validate(chi)?;
    let ev1 = CrEvaluator::new(chi, &params.side(1), None)?;
    let ev2 = CrEvaluator::new(chi, &params.side(2), None)?;
    let total = dm.total();
    let roots = RootTable::new(total);
    let freq = params.frequency() as i128;
    let mut acc = Accumulator::new();
    for beta in 0..total {
        let term = ev1.eval(beta as i64) * ev2.eval(beta as i64).conj();
        acc.add_value(term.scale(roots.at(freq * beta as i128)));
    }
    Ok(acc.finish())
}

/// One c-sum of the `p`-part, as a function of the Kloosterman frequency mod `p̂`.
fn p_part_profile(
    chi: &DirichletCharacter,
    conj: bool,
    terms: impl Iterator<Item = (i128, i128)>,
    q_hat: u64,
    table: &KloostermanTable,
) -> Result<Vec<SumValue>, SumError> {
    // terms: (character argument, Kloosterman unit c) pairs
    let ph = table.modulus();
    let q_inv = inv(q_hat as i128, ph)? as i128;
    let mut weighted: Vec<(Complex64, i64)> = Vec::new();
    for (arg, c) in terms {
        let value = if conj { chi_bar(chi, arg) } else { chi_at(chi, arg) };
        if value.norm() == 0.0 {
            continue;
        }
        let Ok(cbar) = inv(c, ph) else { continue };
        weighted.push((value, (cbar as i128 * q_inv).rem_euclid(ph as i128) as i64));
    }
    Ok((0..ph)
        .map(|b| {
            let bb = (b as i128 * q_inv).rem_euclid(ph as i128) as i64;
            let mut acc = Accumulator::new();
            for &(value, arg) in &weighted {
                acc.add_value(table.get(arg, bb).scale(value));
            }
            acc.finish()
        })
        .collect())
}

/// The coprime part `C1*`, which does not involve `χ`.
pub fn sum_c1star(params: &CStarParams, p: u64) -> Result<SumValue, SumError> {
    let q1h = params.q1 / params.n1p;
    let q2h = params.q2 / params.n1p;
    let p_hat = pow(p, params.lambda - params.r) / params.n1pp;
    let w1 = varpi(params.q1, params.r, params.lambda, p)?;
    let w2 = varpi(params.q2, params.r, params.lambda, p)?;
    let x1 = params.a1 as i128 * inv(w1 * p_hat as i128, q1h)? as i128;
    let x2 = params.a2 as i128 * inv(w2 * p_hat as i128, q2h)? as i128;
    coprime_part(x1, x2, q1h, q2h, p_hat, params.frequency())
}

/// `Σ_{b mod q̂1 q̂2} S(x1, b P̄; q̂1) S(x2, b P̄; q̂2) e(n2 P̄ b / (q̂1 q̂2))`.
fn coprime_part(x1: i128, x2: i128, q1h: u64, q2h: u64, p_hat: u64, n2: i64) -> Result<SumValue, SumError> {
    let t1 = KloostermanTable::new(q1h);
    let t2 = KloostermanTable::new(q2h);
    let qq = q1h * q2h;
    let roots = RootTable::new(qq);
    let pinv_qq = inv(p_hat as i128, qq)? as i128;
    let pinv1 = inv(p_hat as i128, q1h)? as i128;
    let pinv2 = inv(p_hat as i128, q2h)? as i128;
    let x1 = reduce_wide(x1, q1h) as i64;
    let x2 = reduce_wide(x2, q2h) as i64;
    let mut acc = Accumulator::new();
    for b in 0..qq as i128 {
        let s1 = t1.get(x1, reduce_wide(b * pinv1, q1h) as i64);
        let s2 = t2.get(x2, reduce_wide(b * pinv2, q2h) as i64);
        acc.add_value((s1 * s2).scale(roots.at(n2 as i128 * pinv_qq * b)));
    }
    Ok(acc.finish())
}

/// `Σ_{b mod P} F1(b) F2(b) e(n2 (q̂1 q̂2)^{-1} b / P)` over two c-sum profiles.
fn p_part_combine(f1: &[SumValue], f2: &[SumValue], q1h: u64, q2h: u64, n2: i64) -> Result<SumValue, SumError> {
    let ph = f1.len() as u64;
    let roots = RootTable::new(ph);
    let qinv = inv(q1h as i128 * q2h as i128, ph)? as i128;
    let mut acc = Accumulator::new();
    for b in 0..ph as usize {
        acc.add_value((f1[b] * f2[b]).scale(roots.at(n2 as i128 * qinv * b as i128)));
    }
    Ok(acc.finish())
}

/// The `p`-part `C2*` as the `b`-sum of two twisted c-sums.
pub fn sum_c2star(chi: &DirichletCharacter, params: &CStarParams) -> Result<SumValue, SumError> {
    let dm = params.validate(chi)?;
    let p = chi.modulus().p();
    let shift = pow(p, params.kappa - (params.lambda - params.r)) as i128;
    let table = KloostermanTable::new(dm.p_hat);
    let cs = 0..dm.c_range as i128;
    let f1 = p_part_profile(chi, true, cs.clone().map(|c| (params.m1 as i128 - c * shift, c)), dm.q1_hat, &table)?;
    let f2 = p_part_profile(chi, false, cs.map(|c| (params.m2 as i128 - c * shift, c)), dm.q2_hat, &table)?;
    p_part_combine(&f1, &f2, dm.q1_hat, dm.q2_hat, params.frequency())
}

/// `(C1*, C2*)` with `C* = C1* C2*`.
pub fn split_cstar(chi: &DirichletCharacter, params: &CStarParams) -> Result<(SumValue, SumValue), SumError> {
    params.validate(chi)?;
    Ok((sum_c1star(params, chi.modulus().p())?, sum_c2star(chi, params)?))
}

/// `C2*` after summing out the Kloosterman sums over `b`:
/// `p̂ Σ_{c1,c2} χ̄(m1 - c1 P) χ(m2 - c2 P) Σ*_d e((\overline{q̂2 c2} - q̂2 \overline{q̂1 (q̂1 + n2 d) c1}) d / p̂)`,
/// the `d`-sum running over units `d` with `q̂1 + n2 d` a unit.
pub fn sum_c2star_semi(chi: &DirichletCharacter, params: &CStarParams) -> Result<SumValue, SumError> {
    let dm = params.validate(chi)?;
    let p = chi.modulus().p();
    let ph = dm.p_hat;
    let n2 = params.frequency() as i128;
    let shift = pow(p, params.kappa - (params.lambda - params.r)) as i128;
    let (q1h, q2h) = (dm.q1_hat as i128, dm.q2_hat as i128);

    // Aggregate each character sum over the residue of c mod p̂.
    let mut acc1: Vec<Accumulator> = vec![Accumulator::new(); ph as usize];
    let mut acc2: Vec<Accumulator> = vec![Accumulator::new(); ph as usize];
    for c in 0..dm.c_range as i128 {
        let res = reduce_wide(c, ph);
        if gcd(res, ph) != 1 {
            continue;
        }
        acc1[res as usize].add(chi_bar(chi, params.m1 as i128 - c * shift));
        acc2[res as usize].add(chi_at(chi, params.m2 as i128 - c * shift));
    }
    let c1_mass: Vec<SumValue> = acc1.iter().map(Accumulator::finish).collect();
    let c2_mass: Vec<SumValue> = acc2.iter().map(Accumulator::finish).collect();

    let roots = RootTable::new(ph);
    let units: Vec<i128> = (0..ph as i128).filter(|&d| gcd(d as u64, ph) == 1).collect();
    let mut acc = Accumulator::new();
    for &c1 in &units {
        if c1_mass[c1 as usize].value.norm() == 0.0 {
            continue;
        }
        for &c2 in &units {
            if c2_mass[c2 as usize].value.norm() == 0.0 {
                continue;
            }
            let inner = if n2 == 0 {
                let m0 = inv(q2h * c2, ph)? as i128 - q2h * inv(q1h * q1h * c1, ph)? as i128;
                SumValue::from_real(ramanujan_closed(reduce_wide(m0, ph) as i64, ph) as f64)
            } else {
                let mut d_acc = Accumulator::new();
                let a = inv(q2h * c2, ph)? as i128;
                for &d in &units {
                    let g = q1h + n2 * d;
                    let Ok(gi) = inv(q1h * g * c1, ph) else { continue };
                    d_acc.add(roots.at((a - q2h * gi as i128) * d));
                }
                d_acc.finish()
            };
            acc.add_value(c1_mass[c1 as usize] * c2_mass[c2 as usize] * inner);
        }
    }
    Ok(acc.finish().scale_real(ph as f64))
}

/// A triple `(b2, h2, d2)` of residues mod `p^{α+δ}`.
pub type Triple = (u64, u64, u64);

/// Data of the congruence-counting evaluation of `C2*`.
#[derive(Debug, Clone, Copy)]
pub struct FastSetup {
    pub p: u64,
    pub alpha: u32,
    pub delta: u32,
    pub eta: u64,
    pub q1_hat: u64,
    pub q2_hat: u64,
    pub m1: i64,
    pub m2: i64,
    /// `sign · n2`.
    pub n2: i64,
    pub kappa: u32,
}

impl FastSetup {
    /// Checks the fast path's hypotheses: `n1'' = 1`, `λ - r ≥ 2`, `3λ ≤ 2κ`.
    pub fn new(chi: &DirichletCharacter, params: &CStarParams) -> Result<Self, SumError> {
        let dm = params.validate(chi)?;
        if params.n1pp != 1 {
            return Err(SumError::PreconditionViolated("n1'' must be 1".into()));
        }
        let l = params.lambda - params.r;
        if l < 2 {
            return Err(SumError::PreconditionViolated("p̂_r must be at least p^2".into()));
        }
        if 3 * params.lambda > 2 * params.kappa {
            return Err(SumError::PreconditionViolated("lambda must be at most 2 kappa / 3".into()));
        }
        if !chi.is_primitive() {
            return Err(SumError::PreconditionViolated("character must be primitive".into()));
        }
        let (alpha, delta) = params.alpha_delta();
        let eta = chi.postnikov_eta(alpha)?.eta;
        Ok(Self {
            p: chi.modulus().p(),
            alpha,
            delta,
            eta,
            q1_hat: dm.q1_hat,
            q2_hat: dm.q2_hat,
            m1: params.m1,
            m2: params.m2,
            n2: params.frequency(),
            kappa: params.kappa,
        })
    }

    pub fn pa(&self) -> u64 {
        pow(self.p, self.alpha)
    }

    /// Range of `b2, h2, d2`: `p^{α+δ}`.
    pub fn range(&self) -> u64 {
        pow(self.p, self.alpha + self.delta)
    }

    pub fn level(&self) -> u64 {
        pow(self.p, 2 * self.alpha + self.delta)
    }

    /// `p`-adic valuation of `n2`, `None` for `n2 = 0`.
    pub fn k(&self) -> Option<u32> {
        modarith::valuation(self.n2, self.p)
    }

    pub fn m_units(&self) -> bool {
        self.m1 % self.p as i64 != 0 && self.m2 % self.p as i64 != 0
    }

    fn unit(&self, x: u64) -> bool {
        !x.is_multiple_of(self.p)
    }

    fn g(&self, d2: u64) -> i128 {
        self.q1_hat as i128 + self.n2 as i128 * d2 as i128
    }

    fn domain_ok(&self, b2: u64, h2: u64, d2: u64) -> bool {
        self.unit(b2) && self.unit(h2) && self.unit(d2) && reduce_wide(self.g(d2), self.p) != 0
    }

    /// The three congruences modulo `p^α`.
    pub fn satisfies_system(&self, (b2, h2, d2): Triple) -> bool {
        if !self.domain_ok(b2, h2, d2) || !self.m_units() {
            return false;
        }
        let pa = self.pa();
        let pm = pa as i128;
        let md = |x: i128| x.rem_euclid(pm);
        let iv = |x: i128| inv(x, pa).expect("unit") as i128;
        let (q1, q2) = (self.q1_hat as i128, self.q2_hat as i128);
        let (b, h, d) = (b2 as i128, h2 as i128, d2 as i128);
        let (gi, bi, hi) = (iv(self.g(d2)), iv(b), iv(h));
        let eta = self.eta as i128;
        let n2d = md(self.n2 as i128 * d);
        let q22 = md(q2 * q2);
        // q̂1 h̄2 - q̂2² ḡ b̄2 + q̂2² ḡ² b̄2 n2 d2
        let cd = md(q1 * hi) - md(q22 * md(gi * bi)) + md(md(q22 * md(gi * gi)) * md(bi * n2d));
        // m̄1 η + q̂2 q̂1⁻¹ ḡ b̄2² d2
        let cb = md(iv(self.m1 as i128) * eta) + md(md(q2 * iv(q1)) * md(gi * md(md(bi * bi) * d)));
        // m̄2 η + q̂2⁻¹ h̄2² d2
        let ch = md(iv(self.m2 as i128) * eta) + md(iv(q2) * md(md(hi * hi) * d));
        reduce_wide(cd, pa) == 0 && reduce_wide(cb, pa) == 0 && reduce_wide(ch, pa) == 0
    }

    /// The derived system in `γ = (q̂1 + n2 d2)^{-1}` modulo `p^α`.
    pub fn satisfies_gamma_system(&self, (b2, h2, d2): Triple) -> bool {
        if !self.domain_ok(b2, h2, d2) || !self.m_units() {
            return false;
        }
        let pa = self.pa();
        let pm = pa as i128;
        let iv = |x: i128| inv(x, pa).expect("unit") as i128;
        let (q1, q2) = (self.q1_hat as i128, self.q2_hat as i128);
        let (b, h) = (b2 as i128, h2 as i128);
        let n2 = self.n2 as i128;
        let eta = self.eta as i128;
        let gamma = iv(self.g(d2));
        let gamma_inv = reduce_wide(self.g(d2), pa) as i128;
        let e1 = b - q2 * q2 % pm * (gamma * gamma % pm) % pm * h;
        let u1 = iv(self.m1 as i128) * eta % pm * q1 % pm * iv(q2) % pm * (n2.rem_euclid(pm) * (b * b % pm) % pm) % pm;
        let e2 = gamma - iv(q1) * (1 + u1) % pm;
        let u2 = iv(self.m2 as i128) * eta % pm * iv(q1) % pm * q2 % pm * (n2.rem_euclid(pm) * (h * h % pm) % pm) % pm;
        let e3 = gamma_inv - q1 * (1 - u2) % pm;
        reduce_wide(e1, pa) == 0 && reduce_wide(e2, pa) == 0 && reduce_wide(e3, pa) == 0
    }

    /// `f(b2, h2, d2)`.
    pub fn weight(&self, chi: &DirichletCharacter, (b2, h2, d2): Triple) -> Result<Complex64, SumError> {
        let lv = self.level();
        let shift = pow(self.p, self.kappa - (2 * self.alpha + self.delta)) as i128;
        let (q1, q2) = (self.q1_hat as i128, self.q2_hat as i128);
        let a = inv(q2 * h2 as i128, lv)? as i128;
        let b = q2 * inv(q1 * self.g(d2) * b2 as i128, lv)? as i128;
        let chis = chi_bar(chi, self.m1 as i128 - b2 as i128 * shift) * chi_at(chi, self.m2 as i128 - h2 as i128 * shift);
        Ok(chis * e_frac((a - b) * d2 as i128, lv))
    }

    /// Every solution of the system by scanning all triples.
    pub fn exhaustive_solutions(&self) -> Vec<Triple> {
        let n = self.range();
        let mut out = Vec::new();
        for b2 in 0..n {
            for h2 in 0..n {
                for d2 in 0..n {
                    if self.satisfies_system((b2, h2, d2)) {
                        out.push((b2, h2, d2));
                    }
                }
            }
        }
        out
    }

    /// Every solution of the derived `γ`-system by scanning all triples.
    pub fn exhaustive_gamma_solutions(&self) -> Vec<Triple> {
        let n = self.range();
        let mut out = Vec::new();
        for b2 in 0..n {
            for h2 in 0..n {
                for d2 in 0..n {
                    if self.satisfies_gamma_system((b2, h2, d2)) {
                        out.push((b2, h2, d2));
                    }
                }
            }
        }
        out
    }

    /// Solutions found by solving the first congruence for `h2` given `(b2, d2)`.
    pub fn solve(&self) -> Vec<Triple> {
        if !self.m_units() {
            return Vec::new();
        }
        let n = self.range();
        let pa = self.pa();
        let pm = pa as i128;
        let (q1, q2) = (self.q1_hat as i128, self.q2_hat as i128);
        let q1i = inv(q1, pa).expect("unit") as i128;
        let mut out = Vec::new();
        for b2 in (0..n).filter(|&x| self.unit(x)) {
            let bi = inv(b2 as i128, pa).expect("unit") as i128;
            for d2 in (0..n).filter(|&x| self.unit(x)) {
                let g = self.g(d2);
                let Ok(gi) = inv(g, pa) else { continue };
                let gi = gi as i128;
                // q̂1 h̄2 ≡ q̂2² ḡ b̄2 (1 - ḡ n2 d2)
                let rhs = q2 * q2 % pm * gi % pm * bi % pm * (1 - gi * (self.n2 as i128 * d2 as i128 % pm) % pm) % pm;
                let hbar = reduce_wide(q1i * rhs, pa);
                if hbar.is_multiple_of(self.p) {
                    continue;
                }
                let h0 = inv(hbar as i128, pa).expect("unit");
                for t in 0..n / pa {
                    let triple = (b2, h0 + t * pa, d2);
                    if self.satisfies_system(triple) {
                        out.push(triple);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn value_over(&self, chi: &DirichletCharacter, solutions: &[Triple]) -> Result<SumValue, SumError> {
        let mut acc = Accumulator::new();
        for &t in solutions {
            acc.add(self.weight(chi, t)?);
        }
        let factor = pow(self.p, 5 * self.alpha + self.delta) as f64;
        Ok(acc.finish().scale_real(factor))
    }

    /// `A = m̄1 η q̂1 q̂2^{-1}` and `B = m̄2 η q̂1^3 q̂2^{-3}` modulo `p^α`.
    pub fn quintic_constants(&self) -> (u64, u64) {
        let pa = self.pa();
        let pm = pa as i128;
        let (q1, q2) = (self.q1_hat as i128, self.q2_hat as i128);
        let iv = |x: i128| inv(x, pa).expect("unit") as i128;
        let eta = self.eta as i128;
        let a = iv(self.m1 as i128) * eta % pm * q1 % pm * iv(q2) % pm;
        let q2i = iv(q2);
        let b = iv(self.m2 as i128) * eta % pm * (q1 * q1 % pm * q1 % pm) % pm * (q2i * q2i % pm * q2i % pm) % pm;
        (reduce_wide(a, pa), reduce_wide(b, pa))
    }

    /// Coefficients (constant term first) of the quintic in `u = n2 b2^2`:
    /// `(A - B) u + (4A^2 - AB) u^2 + 6A^3 u^3 + 4A^4 u^4 + A^5 u^5`.
    pub fn build_quintic(&self) -> Vec<u64> {
        let pa = self.pa();
        let (a, b) = self.quintic_constants();
        let m = |x: u64, y: u64| modarith::mul_mod(x, y, pa);
        let a2 = m(a, a);
        let a3 = m(a2, a);
        let a4 = m(a3, a);
        let a5 = m(a4, a);
        let sub = |x: u64, y: u64| (x + pa - y % pa) % pa;
        vec![0, sub(a, b), sub(m(4 % pa, a2), m(a, b)), m(6 % pa, a3), m(4 % pa, a4), a5]
    }

    /// Root and `b2` counts for the quintic; requires `p ∤ m1 m2` and `n2 ≠ 0` with `k < α`.
    pub fn count_quintic_roots(&self) -> Result<QuinticCount, SumError> {
        if !self.m_units() {
            return Err(SumError::PreconditionViolated("need p ∤ m1 m2".into()));
        }
        let k = match self.k() {
            Some(k) if k < self.alpha => k,
            _ => return Err(SumError::PreconditionViolated("need n2 ≠ 0 with v_p(n2) < alpha".into())),
        };
        let pa = self.pa();
        let coeffs: Vec<i64> = self.build_quintic().into_iter().map(|c| c as i64).collect();
        let modulus = modarith::PrimePowerModulus::new(self.p, self.alpha)?;
        let roots = modarith::hensel_roots(&coeffs, &modulus)?;
        let admissible_roots = roots
            .iter()
            .filter(|&&u| u != 0 && modarith::valuation(u as i64, self.p) == Some(k))
            .count();
        let b_mod = pow(self.p, self.alpha - k);
        let b2_values: Vec<u64> = (0..b_mod)
            .filter(|&b| b % self.p != 0)
            .filter(|&b| {
                let u = reduce_wide(self.n2 as i128 * (b as i128 * b as i128), pa);
                modarith::poly_eval_mod(&self.build_quintic(), u, pa) == 0
            })
            .collect();
        Ok(QuinticCount { unrestricted_roots: roots.len(), admissible_roots, b2_values, b2_modulus: b_mod })
    }
}

/// Root counts of the quintic modulo `p^α`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuinticCount {
    /// All roots mod `p^α`, including those with the wrong valuation.
    pub unrestricted_roots: usize,
    /// Roots `u` with `v_p(u) = v_p(n2)`, the only ones of the form `n2 b2^2`.
    pub admissible_roots: usize,
    /// Units `b2 mod p^{α-k}` with `u = n2 b2^2` a root.
    pub b2_values: Vec<u64>,
    pub b2_modulus: u64,
}

/// `C2*` by counting solutions of three congruences modulo `p^α`.
pub fn sum_c2star_fast(chi: &DirichletCharacter, params: &CStarParams) -> Result<SumValue, SumError> {
    let setup = FastSetup::new(chi, params)?;
    setup.value_over(chi, &setup.solve())
}

/// As [`sum_c2star_fast`] but summing over an exhaustive scan of triples.
pub fn sum_c2star_fast_exhaustive(chi: &DirichletCharacter, params: &CStarParams) -> Result<SumValue, SumError> {
    let setup = FastSetup::new(chi, params)?;
    setup.value_over(chi, &setup.exhaustive_solutions())
}

/// Parameters of the dual sum `B*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BStarParams {
    pub m1: i64,
    pub m2: i64,
    pub a1: i64,
    pub a2: i64,
    pub q1: u64,
    pub q2: u64,
    pub n1p: u64,
    pub n1pp: u64,
    pub n2: i64,
    pub s: u32,
    pub lambda: u32,
    pub kappa: u32,
    pub sign: i8,
}

impl BStarParams {
    pub fn side(&self, i: usize) -> BsInput {
        let (m, a, q) = if i == 1 { (self.m1, self.a1, self.q1) } else { (self.m2, self.a2, self.q2) };
        BsInput {
            m,
            n1p: self.n1p,
            n1pp: self.n1pp,
            n2: 0,
            a,
            q,
            s: self.s,
            lambda: self.lambda,
            kappa: self.kappa,
        }
    }

    pub fn frequency(&self) -> i64 {
        self.sign as i64 * self.n2
    }

    pub fn validate(&self, chi: &DirichletCharacter) -> Result<DualModuli, SumError> {
        check_sign(self.sign)?;
        let p = self.side(1).validate(chi)?;
        self.side(2).validate(chi)?;
        for (m, q) in [(self.m1, self.q1), (self.m2, self.q2)] {
            if m == 0 {
                return Err(SumError::InvalidParams("m_i must be nonzero".into()));
            }
            if gcd_signed(m, q) != 1 {
                return Err(SumError::InvalidParams(format!("m = {m} must be coprime to q = {q}")));
            }
        }
        Ok(DualModuli {
            q1_hat: self.q1 / self.n1p,
            q2_hat: self.q2 / self.n1p,
            p_hat: pow(p, self.lambda + self.s) / self.n1pp,
            c_range: pow(p, self.lambda),
        })
    }

    /// `λ = 2α + δ`.
    pub fn alpha_delta(&self) -> (u32, u32) {
        (self.lambda / 2, self.lambda % 2)
    }
}

pub fn sum_bstar_naive(chi: &DirichletCharacter, params: &BStarParams) -> Result<SumValue, SumError> {
    let dm = params.validate(chi)?;
    let ev1 = BsEvaluator::new(chi, &params.side(1), None)?;
    let ev2 = BsEvaluator::new(chi, &params.side(2), None)?;
    let total = dm.total();
    let roots = RootTable::new(total);
    let freq = params.frequency() as i128;
    let mut acc = Accumulator::new();
    for beta in 0..total {
        let term = ev1.eval(beta as i64) * ev2.eval(beta as i64).conj();
        acc.add_value(term.scale(roots.at(freq * beta as i128)));
    }
    Ok(acc.finish())
}

pub fn sum_b1star(params: &BStarParams, p: u64) -> Result<SumValue, SumError> {
    let q1h = params.q1 / params.n1p;
    let q2h = params.q2 / params.n1p;
    let rho = pow(p, params.lambda + params.s) / params.n1pp;
    let x1 = params.a1 as i128 * inv(rho as i128, q1h)? as i128;
    let x2 = params.a2 as i128 * inv(rho as i128, q2h)? as i128;
    coprime_part(x1, x2, q1h, q2h, rho, params.frequency())
}

pub fn sum_b2star(chi: &DirichletCharacter, params: &BStarParams) -> Result<SumValue, SumError> {
    let dm = params.validate(chi)?;
    let p = chi.modulus().p();
    let ps = pow(p, params.s) as i128;
    let shift = pow(p, params.kappa - params.lambda) as i128;
    let table = KloostermanTable::new(dm.p_hat);
    let side = |m: i64, a_bar: i128| {
        (0..dm.c_range as i128).map(move |c| {
            let x = a_bar + c * ps;
            ((m as i128 - x * shift) / ps, x)
        })
    };
    let ab1 = params.side(1).a_bar(p)?;
    let ab2 = params.side(2).a_bar(p)?;
    let f1 = p_part_profile(chi, true, side(params.m1, ab1), dm.q1_hat, &table)?;
    let f2 = p_part_profile(chi, false, side(params.m2, ab2), dm.q2_hat, &table)?;
    p_part_combine(&f1, &f2, dm.q1_hat, dm.q2_hat, params.frequency())
}

pub fn split_bstar(chi: &DirichletCharacter, params: &BStarParams) -> Result<(SumValue, SumValue), SumError> {
    params.validate(chi)?;
    Ok((sum_b1star(params, chi.modulus().p())?, sum_b2star(chi, params)?))
}
