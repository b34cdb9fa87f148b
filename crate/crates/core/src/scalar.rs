//! Exact field elements over the rationals or a prime field `F_p`.
//!
//! A [`Scalar`] carries its field with it, so arithmetic between values from
//! different fields is detected instead of silently producing garbage. The
//! checked methods (`checked_add`, ...) report that as an error; the operator
//! impls treat it as a programming error and panic.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

/// Mersenne prime `2^31 - 1`, the default modulus for prime-field runs.
pub const DEFAULT_PRIME: u64 = 2_147_483_647;

/// Default half-width `N` of the integer sampling box `[-N, N]`.
pub const DEFAULT_RANGE: u64 = 1_000_000;

const MODULUS_BOUND: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScalarError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: {0} vs {1}")]
    FieldMismatch(FieldDesc, FieldDesc),
    #[error("operation requires a prime field, got {0}")]
    WrongField(FieldDesc),
    #[error("invalid modulus {0}: expected a prime p with 2 < p < 2^31")]
    InvalidModulus(u64),
    #[error("cannot parse {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// The ground field of a computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldDesc {
    Rationals,
    PrimeField(u64),
}

impl FieldDesc {
    /// Validated prime field. The bound keeps residue products inside `u64`.
    pub fn prime(p: u64) -> Result<Self, ScalarError> {
        if p <= 2 || p >= MODULUS_BOUND || !is_prime(p) {
            return Err(ScalarError::InvalidModulus(p));
        }
        Ok(FieldDesc::PrimeField(p))
    }

    pub fn modulus(&self) -> Option<u64> {
        match self {
            FieldDesc::Rationals => None,
            FieldDesc::PrimeField(p) => Some(*p),
        }
    }

    pub fn is_rationals(&self) -> bool {
        matches!(self, FieldDesc::Rationals)
    }
}

impl fmt::Display for FieldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldDesc::Rationals => write!(f, "q"),
            FieldDesc::PrimeField(p) => write!(f, "fp:{p}"),
        }
    }
}

impl FromStr for FieldDesc {
    type Err = ScalarError;

    /// Accepts `q` or `fp:<p>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("q") {
            return Ok(FieldDesc::Rationals);
        }
        if let Some(rest) = s.strip_prefix("fp:") {
            let p: u64 = rest.parse().map_err(|_| ScalarError::Parse {
                text: s.to_string(),
                reason: "modulus is not an unsigned integer".into(),
            })?;
            return FieldDesc::prime(p);
        }
        Err(ScalarError::Parse {
            text: s.to_string(),
            reason: "expected `q` or `fp:<p>`".into(),
        })
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// An exact element of a [`FieldDesc`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Scalar {
    /// Lowest terms, positive denominator (maintained by `BigRational`).
    Rational(BigRational),
    /// Canonical residue in `0..modulus`.
    Residue { value: u64, modulus: u64 },
}

impl Scalar {
    pub fn zero(field: FieldDesc) -> Self {
        Self::from_i64(field, 0)
    }

    pub fn one(field: FieldDesc) -> Self {
        Self::from_i64(field, 1)
    }

    pub fn from_i64(field: FieldDesc, v: i64) -> Self {
        match field {
            FieldDesc::Rationals => Scalar::Rational(BigRational::from_integer(BigInt::from(v))),
            FieldDesc::PrimeField(p) => Scalar::Residue {
                value: v.rem_euclid(p as i64) as u64,
                modulus: p,
            },
        }
    }

    pub fn from_bigint(field: FieldDesc, v: &BigInt) -> Self {
        match field {
            FieldDesc::Rationals => Scalar::Rational(BigRational::from_integer(v.clone())),
            FieldDesc::PrimeField(p) => Scalar::Residue {
                value: reduce_bigint(v, p),
                modulus: p,
            },
        }
    }

    /// `num / den` embedded in `field`.
    pub fn from_ratio(field: FieldDesc, num: &BigInt, den: &BigInt) -> Result<Self, ScalarError> {
        if den.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        match field {
            FieldDesc::Rationals => Ok(Scalar::Rational(BigRational::new(num.clone(), den.clone()))),
            FieldDesc::PrimeField(_) => Self::from_bigint(field, num).checked_div(&Self::from_bigint(field, den)),
        }
    }

    pub fn from_rational(r: BigRational) -> Self {
        Scalar::Rational(r)
    }

    pub fn field(&self) -> FieldDesc {
        match self {
            Scalar::Rational(_) => FieldDesc::Rationals,
            Scalar::Residue { modulus, .. } => FieldDesc::PrimeField(*modulus),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_zero(),
            Scalar::Residue { value, .. } => *value == 0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_one(),
            Scalar::Residue { value, .. } => *value == 1,
        }
    }

    pub fn as_rational(&self) -> Option<&BigRational> {
        match self {
            Scalar::Rational(r) => Some(r),
            Scalar::Residue { .. } => None,
        }
    }

    pub fn residue(&self) -> Option<u64> {
        match self {
            Scalar::Rational(_) => None,
            Scalar::Residue { value, .. } => Some(*value),
        }
    }

    /// Sign for display purposes: rationals by their sign, residues by the
    /// symmetric representative in `(-p/2, p/2]`.
    pub fn is_negative_repr(&self) -> bool {
        match self {
            Scalar::Rational(r) => r.is_negative(),
            Scalar::Residue { value, modulus } => *value > modulus / 2,
        }
    }

    fn check_field(&self, other: &Self) -> Result<(), ScalarError> {
        let (a, b) = (self.field(), other.field());
        if a == b {
            Ok(())
        } else {
            Err(ScalarError::FieldMismatch(a, b))
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self, ScalarError> {
        self.check_field(other)?;
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a + b),
            (Scalar::Residue { value: a, modulus }, Scalar::Residue { value: b, .. }) => Scalar::Residue {
                value: (a + b) % modulus,
                modulus: *modulus,
            },
            _ => unreachable!(),
        })
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self, ScalarError> {
        self.checked_add(&other.neg_ref())
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self, ScalarError> {
        self.check_field(other)?;
        Ok(match (self, other) {
            (Scalar::Rational(a), Scalar::Rational(b)) => Scalar::Rational(a * b),
            (Scalar::Residue { value: a, modulus }, Scalar::Residue { value: b, .. }) => Scalar::Residue {
                value: (a * b) % modulus,
                modulus: *modulus,
            },
            _ => unreachable!(),
        })
    }

    pub fn checked_div(&self, other: &Self) -> Result<Self, ScalarError> {
        self.check_field(other)?;
        self.checked_mul(&other.inv()?)
    }

    pub fn inv(&self) -> Result<Self, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        Ok(match self {
            Scalar::Rational(r) => Scalar::Rational(r.recip()),
            Scalar::Residue { value, modulus } => Scalar::Residue {
                value: pow_mod(*value, modulus - 2, *modulus),
                modulus: *modulus,
            },
        })
    }

    fn neg_ref(&self) -> Self {
        match self {
            Scalar::Rational(r) => Scalar::Rational(-r),
            Scalar::Residue { value, modulus } => Scalar::Residue {
                value: (modulus - value) % modulus,
                modulus: *modulus,
            },
        }
    }

    pub fn pow(&self, exp: u32) -> Self {
        match self {
            Scalar::Rational(r) => Scalar::Rational(num_traits::pow(r.clone(), exp as usize)),
            Scalar::Residue { value, modulus } => Scalar::Residue {
                value: pow_mod(*value, exp as u64, *modulus),
                modulus: *modulus,
            },
        }
    }

    /// Canonical square root `min(r, p - r)` of a residue, `None` for a
    /// non-residue.
    pub fn sqrt_mod_p(&self) -> Result<Option<Self>, ScalarError> {
        match self {
            Scalar::Rational(_) => Err(ScalarError::WrongField(self.field())),
            Scalar::Residue { value, modulus } => Ok(tonelli_shanks(*value, *modulus).map(|r| Scalar::Residue {
                value: r.min(modulus - r),
                modulus: *modulus,
            })),
        }
    }

    /// Single-valued square root: the canonical modular root in `F_p`, the
    /// non-negative root of a perfect rational square in `Q`, `None` otherwise.
    pub fn sqrt(&self) -> Option<Self> {
        match self {
            Scalar::Residue { .. } => self.sqrt_mod_p().ok().flatten(),
            Scalar::Rational(r) => {
                if r.is_negative() {
                    return None;
                }
                let n = exact_isqrt(r.numer())?;
                let d = exact_isqrt(r.denom())?;
                Some(Scalar::Rational(BigRational::new(n, d)))
            }
        }
    }

    /// A uniform draw: an integer in `[-range, range]` over `Q`, a uniform
    /// residue over `F_p` (where `range` is ignored).
    pub fn random<R: Rng + ?Sized>(field: FieldDesc, rng: &mut R, range: u64) -> Self {
        match field {
            FieldDesc::Rationals => {
                let n = range.min(i64::MAX as u64) as i64;
                Self::from_i64(field, rng.gen_range(-n..=n))
            }
            FieldDesc::PrimeField(p) => Scalar::Residue {
                value: rng.gen_range(0..p),
                modulus: p,
            },
        }
    }

    /// Parses `"p/q"` or `"p"` (optional leading `-`) into `field`.
    pub fn parse(field: FieldDesc, text: &str) -> Result<Self, ScalarError> {
        let t = text.trim();
        let err = |reason: &str| ScalarError::Parse {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| err("numerator is not an integer"))?;
        let den: BigInt = den.parse().map_err(|_| err("denominator is not an integer"))?;
        Self::from_ratio(field, &num, &den).map_err(|e| match e {
            ScalarError::DivisionByZero => err("zero denominator"),
            other => other,
        })
    }
}

fn reduce_bigint(v: &BigInt, p: u64) -> u64 {
    v.mod_floor(&BigInt::from(p)).to_u64().expect("residue fits in u64")
}

fn exact_isqrt(n: &BigInt) -> Option<BigInt> {
    if n.is_negative() {
        return None;
    }
    let r = n.sqrt();
    (&r * &r == *n).then_some(r)
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        exp >>= 1;
    }
    acc
}

pub(crate) fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

/// Some square root of `a` modulo the odd prime `p`, or `None` for a
/// quadratic non-residue.
fn tonelli_shanks(a: u64, p: u64) -> Option<u64> {
    let a = a % p;
    if a == 0 {
        return Some(0);
    }
    if pow_mod(a, (p - 1) / 2, p) != 1 {
        return None;
    }
    if p % 4 == 3 {
        return Some(pow_mod(a, (p + 1) / 4, p));
    }
    // p - 1 = q * 2^s with q odd
    let mut q = p - 1;
    let mut s = 0u32;
    while q.is_multiple_of(2) {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while pow_mod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = pow_mod(z, q, p);
    let mut t = pow_mod(a, q, p);
    let mut r = pow_mod(a, q.div_ceil(2), p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = t2 * t2 % p;
            i += 1;
        }
        let b = pow_mod(c, 1 << (m - i - 1), p);
        m = i;
        c = b * b % p;
        t = t * c % p;
        r = r * b % p;
    }
    Some(r)
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Rational(r) => {
                if r.is_integer() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Scalar::Residue { value, .. } => write!(f, "{value}"),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

macro_rules! forward_op {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                self.$checked(rhs).expect("scalar field mismatch")
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                (&self).$method(&rhs)
            }
        }
    };
}

forward_op!(Add, add, checked_add);
forward_op!(Sub, sub, checked_sub);
forward_op!(Mul, mul, checked_mul);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.neg_ref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::from_ratio(FieldDesc::Rationals, &n.into(), &d.into()).unwrap()
    }

    fn fp(p: u64, v: i64) -> Scalar {
        Scalar::from_i64(FieldDesc::prime(p).unwrap(), v)
    }

    #[test]
    fn rational_add() {
        assert_eq!(q(1, 2) + q(1, 3), q(5, 6));
        assert_eq!(q(7, 3) - q(7, 3), q(0, 1));
    }

    #[test]
    fn prime_field_division() {
        // brute force: the unique r with r * 5 = 3 mod 7
        let r = (0..7).find(|r| r * 5 % 7 == 3).unwrap();
        assert_eq!(r, 2);
        assert_eq!(fp(7, 3).checked_div(&fp(7, 5)).unwrap(), fp(7, r));
    }

    #[test]
    fn errors() {
        assert_eq!(q(1, 2).checked_div(&q(0, 1)), Err(ScalarError::DivisionByZero));
        assert!(matches!(
            q(1, 2).checked_add(&fp(7, 1)),
            Err(ScalarError::FieldMismatch(..))
        ));
        assert!(matches!(q(4, 1).sqrt_mod_p(), Err(ScalarError::WrongField(_))));
        assert!(FieldDesc::prime(2).is_err());
        assert!(FieldDesc::prime(15).is_err());
        assert!(FieldDesc::prime(1 << 31).is_err());
        assert!(FieldDesc::prime(DEFAULT_PRIME).is_ok());
    }

    #[test]
    fn canonical_form() {
        let r = q(6, -4);
        let r = r.as_rational().unwrap();
        assert_eq!(r.numer(), &BigInt::from(-3));
        assert_eq!(r.denom(), &BigInt::from(2));
    }

    #[test]
    fn sqrt_mod_13() {
        let squares: Vec<u64> = (0..13u64).map(|r| r * r % 13).collect();
        assert!(!squares.contains(&5));
        assert_eq!(fp(13, 4).sqrt_mod_p().unwrap(), Some(fp(13, 2)));
        assert_eq!(fp(13, 5).sqrt_mod_p().unwrap(), None);
        assert_eq!(fp(13, 10).sqrt_mod_p().unwrap(), Some(fp(13, 6)));
    }

    #[test]
    fn sqrt_residue_counts() {
        for p in [13u64, 17, 41, 97, 101] {
            let field = FieldDesc::prime(p).unwrap();
            let mut no_root = 0;
            for r in 0..p {
                let s = Scalar::from_i64(field, r as i64);
                let root = s.pow(2).sqrt_mod_p().unwrap().unwrap();
                assert!(root.residue() == Some(r) || root.residue() == Some((p - r) % p));
                if s.sqrt_mod_p().unwrap().is_none() {
                    no_root += 1;
                }
            }
            assert_eq!(no_root, (p - 1) / 2);
        }
    }

    #[test]
    fn rational_sqrt_is_partial() {
        assert_eq!(q(25, 16).sqrt(), Some(q(5, 4)));
        assert_eq!(q(2, 1).sqrt(), None);
        assert_eq!(q(-4, 1).sqrt(), None);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(Scalar::parse(FieldDesc::Rationals, "-6/4").unwrap(), q(-3, 2));
        assert_eq!(q(-3, 2).to_string(), "-3/2");
        assert_eq!(q(5, 1).to_string(), "5");
        assert_eq!(Scalar::parse(FieldDesc::prime(7).unwrap(), "-1").unwrap(), fp(7, 6));
        assert!(Scalar::parse(FieldDesc::Rationals, "1/0").is_err());
        assert!(Scalar::parse(FieldDesc::Rationals, "x").is_err());
        assert_eq!("fp:13".parse::<FieldDesc>().unwrap(), FieldDesc::PrimeField(13));
        assert_eq!("q".parse::<FieldDesc>().unwrap(), FieldDesc::Rationals);
    }

    #[test]
    fn random_is_deterministic() {
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..20)
                .map(|_| Scalar::random(FieldDesc::Rationals, &mut rng, 10))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert!(draw(7)
            .iter()
            .all(|s| s.as_rational().unwrap().abs() <= BigRational::from_integer(10.into())));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..50).all(|_| Scalar::random(FieldDesc::Rationals, &mut rng, 0).is_zero()));
    }

    #[test]
    fn random_residues_are_uniform() {
        let field = FieldDesc::prime(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut counts = [0u32; 5];
        for _ in 0..10_000 {
            counts[Scalar::random(field, &mut rng, 0).residue().unwrap() as usize] += 1;
        }
        // binomial(10^4, 1/5): sigma = sqrt(10^4 * 0.2 * 0.8) = 40
        for c in counts {
            assert!((c as i64 - 2000).abs() <= 5 * 40, "{counts:?}");
        }
    }

    fn rational() -> impl Strategy<Value = Scalar> {
        (-1000i64..1000, 1i64..1000).prop_map(|(n, d)| q(n, d))
    }

    fn residue() -> impl Strategy<Value = Scalar> {
        (0i64..DEFAULT_PRIME as i64).prop_map(|v| fp(DEFAULT_PRIME, v))
    }

    fn check_axioms(a: Scalar, b: Scalar, c: Scalar) {
        assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
        assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        assert!((&a + &(-&a)).is_zero());
        if !a.is_zero() {
            assert!((&a * &a.inv().unwrap()).is_one());
        }
    }

    proptest! {
        #[test]
        fn field_axioms_rationals(a in rational(), b in rational(), c in rational()) {
            check_axioms(a, b, c);
        }

        #[test]
        fn field_axioms_residues(a in residue(), b in residue(), c in residue()) {
            check_axioms(a, b, c);
        }

        #[test]
        fn rationals_stay_canonical(a in rational(), b in rational()) {
            for r in [&a + &b, &a * &b, &a - &b] {
                let r = r.as_rational().unwrap().clone();
                prop_assert!(r.denom().is_positive());
                prop_assert!(r.numer().gcd(r.denom()).is_one());
            }
        }

        #[test]
        fn sqrt_of_square_large_prime(r in residue()) {
            let root = r.pow(2).sqrt_mod_p().unwrap().unwrap();
            prop_assert!(root == r || root == -&r);
        }
    }
}
