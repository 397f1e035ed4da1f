//! Precision-generic real scalars.
//!
//! Everything downstream of the weight computation is written against [`Real`],
//! which is implemented for `f64` (double) and the IEEE binary128 software type
//! [`Extended`] (113-bit significand, about 34 decimal digits).

use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive, Zero};

/// Quadruple-precision scalar used for the extended-precision runs.
pub type Extended = f128::f128;

/// Run-wide precision level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Precision {
    Double,
    Extended,
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::Double => "double",
            Precision::Extended => "extended",
        }
    }
}

impl Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Precision {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "double" => Ok(Precision::Double),
            "extended" => Ok(Precision::Extended),
            other => Err(format!("unknown precision `{other}` (expected double|extended)")),
        }
    }
}

/// A real scalar at a fixed precision level.
pub trait Real:
    Float + FloatConst + FromPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
    const PRECISION: Precision;
    /// Significand width in bits, including the implicit leading bit.
    const MANTISSA_BITS: u32;

    /// Exact conversion of an integer of at most `MANTISSA_BITS` bits.
    fn from_u128_exact(x: u128) -> Self;

    /// Scientific notation carrying every significant digit of the format
    /// (17 for double, 34 for extended).
    fn to_sci(self) -> String;

    fn parse_decimal(s: &str) -> Option<Self>;

    /// Small integer literal.
    #[inline]
    fn lit(n: i64) -> Self {
        Self::from_i64(n).expect("integer literal")
    }

    /// The quotient `num/den` rounded once.
    #[inline]
    fn ratio(num: i64, den: i64) -> Self {
        Self::lit(num) / Self::lit(den)
    }

    /// Nearest representable value (ties to even) of an exact rational.
    fn from_rational(r: &BigRational) -> Self {
        rational_to_real(r)
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;
    const MANTISSA_BITS: u32 = f64::MANTISSA_DIGITS;

    fn from_u128_exact(x: u128) -> Self {
        debug_assert!(x < (1u128 << 53) || x == 1u128 << 53);
        x as f64
    }

    fn to_sci(self) -> String {
        format!("{self:.16e}")
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        s.trim().parse().ok()
    }
}

impl Real for Extended {
    const PRECISION: Precision = Precision::Extended;
    const MANTISSA_BITS: u32 = 113;

    fn from_u128_exact(x: u128) -> Self {
        debug_assert!(x <= 1u128 << 113);
        Extended::from_u128(x).expect("u128 conversion")
    }

    fn to_sci(self) -> String {
        self.to_string_fmt("%.33Qe").unwrap_or_else(|| "nan".to_string())
    }

    fn parse_decimal(s: &str) -> Option<Self> {
        let s = s.trim();
        // strtoflt128 silently accepts garbage, so validate through f64 syntax first
        s.parse::<f64>().ok()?;
        Extended::parse(s).ok()
    }
}

/// Round an exact rational to the nearest `T` (ties to even).
///
/// Works for any significand width up to 126 bits; values are assumed to lie in
/// the normal range of `T`.
pub fn rational_to_real<T: Real>(r: &BigRational) -> T {
    match round_rational(r, T::MANTISSA_BITS) {
        None => T::zero(),
        Some(rounded) => rounded.to_real(),
    }
}

/// `r ≈ hi + lo` with `hi` the nearest `T` and `lo` the nearest `T` to the
/// remainder, giving roughly twice the working precision.
pub fn rational_to_real_pair<T: Real>(r: &BigRational) -> (T, T) {
    match round_rational(r, T::MANTISSA_BITS) {
        None => (T::zero(), T::zero()),
        Some(rounded) => {
            let rest = r - rounded.to_rational();
            (rounded.to_real(), rational_to_real(&rest))
        }
    }
}

/// `±mantissa · 2^exp2`.
struct Rounded {
    negative: bool,
    mantissa: u128,
    exp2: i64,
}

impl Rounded {
    fn to_real<T: Real>(&self) -> T {
        let value = T::from_u128_exact(self.mantissa) * pow2::<T>(self.exp2);
        if self.negative {
            -value
        } else {
            value
        }
    }

    fn to_rational(&self) -> BigRational {
        let m = BigInt::from(self.mantissa);
        let one = BigInt::from(1u8);
        let mag = if self.exp2 >= 0 {
            BigRational::from_integer(m << (self.exp2 as usize))
        } else {
            BigRational::new(m, one << ((-self.exp2) as usize))
        };
        if self.negative {
            -mag
        } else {
            mag
        }
    }
}

fn round_rational(r: &BigRational, bits: u32) -> Option<Rounded> {
    if r.numer().is_zero() {
        return None;
    }
    let negative = r.numer().sign() == Sign::Minus;
    let num: BigUint = r.numer().magnitude().clone();
    let den: BigUint = r.denom().magnitude().clone();
    let p = bits as i64;

    // choose a shift so that the integer quotient carries p + 2 bits or more
    let shift = p + 2 - (num.bits() as i64 - den.bits() as i64) + 1;
    let (q, rem) = if shift >= 0 {
        let n = &num << (shift as usize);
        (&n / &den, &n % &den)
    } else {
        let d = &den << ((-shift) as usize);
        (&num / &d, &num % &d)
    };
    let sticky = !rem.is_zero();
    let extra = q.bits() as i64 - p;
    debug_assert!(extra >= 2);
    let mut keep = &q >> (extra as usize);
    let mask = (BigUint::from(1u8) << (extra as usize)) - 1u8;
    let tail = &q & &mask;
    let half = BigUint::from(1u8) << ((extra - 1) as usize);
    let odd = keep.bit(0);
    if tail > half || (tail == half && (sticky || odd)) {
        keep += 1u8;
    }
    let mantissa = keep.to_u128().expect("rounded significand fits in u128");
    Some(Rounded { negative, mantissa, exp2: extra - shift })
}

/// Exact power of two, split so that intermediate factors stay in range.
pub(crate) fn pow2<T: Real>(e: i64) -> T {
    let two = T::lit(2);
    let mut remaining = e;
    let mut acc = T::one();
    while remaining != 0 {
        let step = remaining.clamp(-512, 512);
        acc = acc * two.powi(step as i32);
        remaining -= step;
    }
    acc
}

/// Exact rational from a pair of machine integers.
pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Decimal scientific notation of `r` correctly rounded (ties to even) to
/// `digits` significant digits, with trailing zeros removed: `81/40 → 2.025e0`.
pub fn rational_to_sci(r: &BigRational, digits: u32) -> String {
    assert!(digits >= 1, "at least one digit");
    if r.is_zero() {
        return "0e0".into();
    }
    let negative = r.numer().sign() == Sign::Minus;
    let num = r.numer().magnitude().clone();
    let den = r.denom().magnitude().clone();
    let ten = BigUint::from(10u32);
    // exponent e with 10^e <= |r| < 10^(e+1)
    let mut e = num.to_string().len() as i64 - den.to_string().len() as i64;
    let ge_pow = |e: i64| {
        if e >= 0 {
            num >= &den * ten.pow(e as u32)
        } else {
            &num * ten.pow((-e) as u32) >= den
        }
    };
    while !ge_pow(e) {
        e -= 1;
    }
    while ge_pow(e + 1) {
        e += 1;
    }
    let shift = digits as i64 - 1 - e;
    let (n, d) = if shift >= 0 {
        (&num * ten.pow(shift as u32), den.clone())
    } else {
        (num.clone(), &den * ten.pow((-shift) as u32))
    };
    let (mut q, rem) = (&n / &d, &n % &d);
    let twice = &rem * 2u32;
    if twice > d || (twice == d && (&q % 2u32) == BigUint::from(1u32)) {
        q += 1u32;
    }
    if q == ten.pow(digits) {
        q /= 10u32;
        e += 1;
    }
    let s = q.to_string();
    let (head, tail) = s.split_at(1);
    let tail = tail.trim_end_matches('0');
    let sign = if negative { "-" } else { "" };
    if tail.is_empty() {
        format!("{sign}{head}e{e}")
    } else {
        format!("{sign}{head}.{tail}e{e}")
    }
}
