//! Numeric towers for operator application.
//!
//! * [`BigInt`]: exact integers, for operators with integer entries.
//! * [`Radical`]: exact elements of Q(√2, √3, √5, ...), i.e. finite sums
//!   `Σ q_s √s` with rational `q_s` and squarefree radicands `s`. This covers
//!   every entry of `D^{-α} A D^{-β}` with half-integer exponents and of the
//!   self-loop normalized operator with rational ε.
//! * `f64`: IEEE doubles, for everything else.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Rational64};
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Numeric tower tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tower {
    ExactInteger,
    ExactRational,
    Float,
}

impl Tower {
    pub fn name(self) -> &'static str {
        match self {
            Tower::ExactInteger => "int",
            Tower::ExactRational => "rational",
            Tower::Float => "float",
        }
    }

    pub fn is_exact(self) -> bool {
        self != Tower::Float
    }
}

impl fmt::Display for Tower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Tower {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "int" | "integer" => Ok(Tower::ExactInteger),
            "rational" => Ok(Tower::ExactRational),
            "float" => Ok(Tower::Float),
            other => Err(format!("unknown tower `{other}` (expected int, rational or float)")),
        }
    }
}

/// Ring operations shared by all towers.
pub trait Scalar:
    Clone + PartialEq + fmt::Debug + Send + Sync + Zero + One + Add<Output = Self> + Mul<Output = Self>
{
    const TOWER: Tower;

    fn from_i64(v: i64) -> Self;

    /// `base^exp` for a positive rational base, when representable in this tower.
    fn rational_pow(base: Rational64, exp: Rational64) -> Option<Self>;

    /// Real constant; exact towers cannot represent arbitrary reals.
    fn from_f64(v: f64) -> Option<Self>;

    fn to_f64(&self) -> f64;

    /// Canonical text used for equivalence keys. Exact towers are exact; the
    /// float tower rounds to 12 significant digits.
    fn key(&self) -> String;
}

impl Scalar for BigInt {
    const TOWER: Tower = Tower::ExactInteger;

    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }

    fn rational_pow(base: Rational64, exp: Rational64) -> Option<Self> {
        if !base.is_integer() || !exp.is_integer() || *exp.numer() < 0 {
            return None;
        }
        let e = u32::try_from(*exp.numer()).ok()?;
        Some(BigInt::from(*base.numer()).pow(e))
    }

    fn from_f64(_: f64) -> Option<Self> {
        None
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::INFINITY)
    }

    fn key(&self) -> String {
        self.to_string()
    }
}

impl Scalar for f64 {
    const TOWER: Tower = Tower::Float;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn rational_pow(base: Rational64, exp: Rational64) -> Option<Self> {
        let b = *base.numer() as f64 / *base.denom() as f64;
        let e = *exp.numer() as f64 / *exp.denom() as f64;
        Some(b.powf(e))
    }

    fn from_f64(v: f64) -> Option<Self> {
        Some(v)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn key(&self) -> String {
        if *self == 0.0 {
            // folds -0.0 into 0.0
            return "0".into();
        }
        format!("{self:.11e}")
    }
}

/// Exact element of the multiquadratic field generated by square roots of
/// positive integers.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Radical {
    // squarefree radicand -> nonzero rational coefficient
    terms: BTreeMap<u128, BigRational>,
}

impl Radical {
    pub fn rational(q: BigRational) -> Radical {
        let mut terms = BTreeMap::new();
        if !q.is_zero() {
            terms.insert(1, q);
        }
        Radical { terms }
    }

    /// √(q) for a non-negative rational `q` (`None` if the radicand overflows).
    pub fn sqrt_of(q: &BigRational) -> Option<Radical> {
        if q.is_negative() {
            return None;
        }
        if q.is_zero() {
            return Some(Radical::zero());
        }
        // √(u/v) = √(u·v) / v
        let prod = (q.numer() * q.denom()).to_biguint()?;
        let (square_root, squarefree) = split_square(&prod)?;
        let coef = BigRational::new(BigInt::from(square_root), q.denom().clone());
        let mut terms = BTreeMap::new();
        terms.insert(squarefree, coef);
        Some(Radical { terms })
    }

    /// The value if it is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&1).cloned(),
            _ => None,
        }
    }
}

// Writes x = t² · s with s squarefree; returns (t, s). Trial division, so
// only intended for the small radicands that degrees produce.
fn split_square(x: &BigUint) -> Option<(BigUint, u128)> {
    let mut rest = x.to_u128()?;
    let mut t = BigUint::one();
    let mut s: u128 = 1;
    let mut p: u128 = 2;
    while p * p <= rest {
        let mut e = 0u32;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            t *= BigUint::from(p).pow(e / 2);
            if e % 2 == 1 {
                s = s.checked_mul(p)?;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    s = s.checked_mul(rest)?;
    Some((t, s))
}

impl fmt::Debug for Radical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

impl Zero for Radical {
    fn zero() -> Self {
        Radical::default()
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
}

impl One for Radical {
    fn one() -> Self {
        Radical::rational(BigRational::one())
    }
}

impl Add for Radical {
    type Output = Radical;
    fn add(mut self, rhs: Radical) -> Radical {
        for (s, q) in rhs.terms {
            let slot = self.terms.entry(s).or_insert_with(BigRational::zero);
            *slot += q;
            if slot.is_zero() {
                self.terms.remove(&s);
            }
        }
        self
    }
}

impl Mul for Radical {
    type Output = Radical;
    fn mul(self, rhs: Radical) -> Radical {
        let mut out = Radical::zero();
        for (s, a) in &self.terms {
            for (t, b) in &rhs.terms {
                let g = s.gcd(t);
                let radicand = (s / g).checked_mul(t / g).expect("radicand overflow");
                let coef = a * b * BigRational::from_integer(BigInt::from(g));
                out = out + Radical { terms: BTreeMap::from([(radicand, coef)]) };
            }
        }
        out
    }
}

impl Scalar for Radical {
    const TOWER: Tower = Tower::ExactRational;

    fn from_i64(v: i64) -> Self {
        Radical::rational(BigRational::from_integer(BigInt::from(v)))
    }

    fn rational_pow(base: Rational64, exp: Rational64) -> Option<Self> {
        if *base.numer() <= 0 {
            return None;
        }
        let base = BigRational::new(BigInt::from(*base.numer()), BigInt::from(*base.denom()));
        let powi = |e: i64| -> BigRational {
            let p = base.clone().pow(e.unsigned_abs() as u32);
            if e < 0 {
                p.recip()
            } else {
                p
            }
        };
        match *exp.denom() {
            1 => Some(Radical::rational(powi(*exp.numer()))),
            2 => Radical::sqrt_of(&powi(*exp.numer())),
            _ => None,
        }
    }

    fn from_f64(_: f64) -> Option<Self> {
        None
    }

    fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(s, q)| {
                ToPrimitive::to_f64(q).unwrap_or(f64::NAN) * (*s as f64).sqrt()
            })
            .sum()
    }

    fn key(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        self.terms
            .iter()
            .map(|(s, q)| if *s == 1 { q.to_string() } else { format!("{q}*r{s}") })
            .collect::<Vec<_>>()
            .join("+")
    }
}
