//! Numeric layer: exact rationals, slopes, and the two event backends.
//!
//! Every event point of a rational-slope orbit lies on a fixed lattice
//! `(1/D)Z`, so the exact backend stores coordinates as `i64` multiples of
//! `1/D`. The float backend handles irrational slopes with a corner guard.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Exact rational number used throughout the public API.
pub type Q = Ratio<i128>;

/// Default corner-proximity guard of the floating backend.
pub const FLOAT_EPS: f64 = 1e-9;

/// Largest lattice denominator accepted by [`ExactBackend`].
pub const MAX_DENOMINATOR: i64 = 1 << 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NumError {
    #[error("cannot parse rational `{0}`")]
    Parse(String),
    #[error("slope must be positive and finite, got {0}")]
    BadSlope(String),
    #[error("value {value} is not on the lattice 1/{den}")]
    OffLattice { value: String, den: i64 },
    #[error("lattice denominator exceeds {MAX_DENOMINATOR}")]
    DenominatorTooLarge,
    #[error("arithmetic overflow")]
    Overflow,
}

/// Builds the rational `n/d`.
pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn qi(n: i128) -> Q {
    Q::from_integer(n)
}

/// Parses `"a/b"`, `"a"` or a finite decimal such as `"0.07"` exactly.
pub fn parse_q(s: &str) -> Result<Q, NumError> {
    let t = s.trim();
    let bad = || NumError::Parse(s.to_string());
    if let Some((a, b)) = t.split_once('/') {
        let a: i128 = a.trim().parse().map_err(|_| bad())?;
        let b: i128 = b.trim().parse().map_err(|_| bad())?;
        if b == 0 {
            return Err(bad());
        }
        return Ok(q(a, b));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        if fp.is_empty() || fp.len() > 30 || !fp.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let neg = ip.starts_with('-');
        let ip_abs = ip.trim_start_matches(['-', '+']);
        let i: i128 = if ip_abs.is_empty() {
            0
        } else {
            ip_abs.parse().map_err(|_| bad())?
        };
        let f: i128 = fp.parse().map_err(|_| bad())?;
        let den = 10i128.checked_pow(fp.len() as u32).ok_or_else(bad)?;
        let mag = q(i.checked_mul(den).ok_or_else(bad)? + f, den);
        return Ok(if neg { -mag } else { mag });
    }
    t.parse::<i128>().map(qi).map_err(|_| bad())
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Fractional part in `[0, 1)`.
pub fn frac_q(x: &Q) -> Q {
    x - x.floor()
}

pub fn floor_q(x: &Q) -> i128 {
    x.floor().to_integer()
}

/// Sign of one velocity component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn value(self) -> i64 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }

    pub fn of(v: i64) -> Sign {
        if v < 0 {
            Sign::Neg
        } else {
            Sign::Pos
        }
    }
}

/// Slope `tan θ̃₀` of the trajectory, as rise over run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Slope {
    /// `rise/run` in lowest terms, both positive.
    Rational { rise: u32, run: u32 },
    /// Purely vertical motion.
    Vertical,
    /// Arbitrary positive real slope, simulated in floating point.
    Real(f64),
}

impl Slope {
    pub fn rational(rise: u32, run: u32) -> Result<Slope, NumError> {
        if rise == 0 || run == 0 {
            return Err(NumError::BadSlope(format!("{rise}/{run}")));
        }
        let g = rise.gcd(&run);
        Ok(Slope::Rational {
            rise: rise / g,
            run: run / g,
        })
    }

    pub fn real(t: f64) -> Result<Slope, NumError> {
        if t.is_finite() && t > 0.0 {
            Ok(Slope::Real(t))
        } else {
            Err(NumError::BadSlope(t.to_string()))
        }
    }

    /// Exact value `rise/run`, or `None` for vertical and real slopes.
    pub fn as_q(&self) -> Option<Q> {
        match *self {
            Slope::Rational { rise, run } => Some(q(rise as i128, run as i128)),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match *self {
            Slope::Rational { rise, run } => rise as f64 / run as f64,
            Slope::Vertical => f64::INFINITY,
            Slope::Real(t) => t,
        }
    }

    /// `sin θ̃₀`.
    pub fn sin(&self) -> f64 {
        match *self {
            Slope::Vertical => 1.0,
            _ => {
                let t = self.to_f64();
                t / (1.0 + t * t).sqrt()
            }
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Slope::Real(_))
    }
}

impl fmt::Display for Slope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slope::Rational { rise, run } => write!(f, "{rise}/{run}"),
            Slope::Vertical => write!(f, "vertical"),
            Slope::Real(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for Slope {
    type Err = NumError;

    /// Accepts `"p/q"`, `"vertical"`, an integer, or a decimal (read as real).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("vertical") || t.eq_ignore_ascii_case("inf") {
            return Ok(Slope::Vertical);
        }
        if t.contains('/') || t.parse::<u32>().is_ok() {
            let v = parse_q(t)?;
            if v <= Q::zero() {
                return Err(NumError::BadSlope(t.into()));
            }
            let rise = u32::try_from(*v.numer()).map_err(|_| NumError::BadSlope(t.into()))?;
            let run = u32::try_from(*v.denom()).map_err(|_| NumError::BadSlope(t.into()))?;
            return Slope::rational(rise, run);
        }
        let f: f64 = t.parse().map_err(|_| NumError::Parse(t.into()))?;
        Slope::real(f)
    }
}

/// Arithmetic needed by the cell walk.
///
/// `Value` is a coordinate; lengths along the trajectory are measured by
/// their vertical component ("vertical time").
pub trait Backend: Clone + fmt::Debug + Send + Sync {
    type Value: Copy + PartialEq + PartialOrd + fmt::Debug + Send + Sync;

    fn zero(&self) -> Self::Value;
    fn int(&self, n: i64) -> Self::Value;
    fn add(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn sub(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn neg(&self, a: Self::Value) -> Self::Value {
        self.sub(self.zero(), a)
    }
    fn floor(&self, v: Self::Value) -> i64;
    fn ceil(&self, v: Self::Value) -> i64;
    fn is_integer(&self, v: Self::Value) -> bool;
    /// `v - floor(v)`.
    fn frac(&self, v: Self::Value) -> Self::Value {
        self.sub(v, self.int(self.floor(v)))
    }
    fn is_vertical(&self) -> bool;
    /// Vertical distance covered while moving `dx` horizontally.
    fn rise_for_run(&self, dx: Self::Value) -> Self::Value;
    /// Horizontal distance covered while moving `dy` vertically.
    fn run_for_rise(&self, dy: Self::Value) -> Self::Value;
    /// Which of the nonnegative distances `dx` (horizontal) and `dy`
    /// (vertical) is reached first; `Equal` marks a lattice corner.
    fn cmp_reach(&self, dx: Self::Value, dy: Self::Value) -> Ordering;
    fn to_f64(&self, v: Self::Value) -> f64;
    fn to_q(&self, v: Self::Value) -> Option<Q>;
    #[allow(clippy::wrong_self_convention)]
    fn from_q(&self, v: &Q) -> Result<Self::Value, NumError>;
    /// Bound on `|cell index|` that keeps arithmetic safe.
    fn cell_limit(&self) -> i64;
}

/// Exact backend: coordinates are `i64` multiples of `1/den`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactBackend {
    den: i64,
    rise: i64,
    run: i64,
}

impl ExactBackend {
    /// Backend whose lattice contains every event point of orbits started
    /// from the given rationals (coordinates, base offset, ...).
    pub fn for_inputs(slope: Slope, inputs: &[Q]) -> Result<Self, NumError> {
        let (rise, run) = match slope {
            Slope::Rational { rise, run } => (rise as i64, run as i64),
            Slope::Vertical => (1, 0),
            Slope::Real(t) => {
                return Err(NumError::BadSlope(format!(
                    "real slope {t} needs the float backend"
                )))
            }
        };
        let mut den: i128 = 1;
        for v in inputs {
            den = den.lcm(v.denom());
            if den > MAX_DENOMINATOR as i128 {
                return Err(NumError::DenominatorTooLarge);
            }
        }
        den = den * rise as i128 * run.max(1) as i128;
        if den > MAX_DENOMINATOR as i128 {
            return Err(NumError::DenominatorTooLarge);
        }
        Ok(ExactBackend {
            den: den as i64,
            rise,
            run,
        })
    }

    pub fn den(&self) -> i64 {
        self.den
    }
}

impl Backend for ExactBackend {
    type Value = i64;

    fn zero(&self) -> i64 {
        0
    }
    fn int(&self, n: i64) -> i64 {
        n * self.den
    }
    fn add(&self, a: i64, b: i64) -> i64 {
        a + b
    }
    fn sub(&self, a: i64, b: i64) -> i64 {
        a - b
    }
    fn floor(&self, v: i64) -> i64 {
        v.div_euclid(self.den)
    }
    fn ceil(&self, v: i64) -> i64 {
        -(-v).div_euclid(self.den)
    }
    fn is_integer(&self, v: i64) -> bool {
        v.rem_euclid(self.den) == 0
    }
    fn is_vertical(&self) -> bool {
        self.run == 0
    }
    fn rise_for_run(&self, dx: i64) -> i64 {
        debug_assert!(self.run != 0 && (dx as i128 * self.rise as i128) % self.run as i128 == 0);
        (dx as i128 * self.rise as i128 / self.run as i128) as i64
    }
    fn run_for_rise(&self, dy: i64) -> i64 {
        debug_assert!((dy as i128 * self.run as i128) % self.rise as i128 == 0);
        (dy as i128 * self.run as i128 / self.rise as i128) as i64
    }
    fn cmp_reach(&self, dx: i64, dy: i64) -> Ordering {
        if self.run == 0 {
            return Ordering::Greater;
        }
        (dx as i128 * self.rise as i128).cmp(&(dy as i128 * self.run as i128))
    }
    fn to_f64(&self, v: i64) -> f64 {
        v as f64 / self.den as f64
    }
    fn to_q(&self, v: i64) -> Option<Q> {
        Some(q(v as i128, self.den as i128))
    }
    fn from_q(&self, v: &Q) -> Result<i64, NumError> {
        let d = *v.denom();
        if (self.den as i128) % d != 0 {
            return Err(NumError::OffLattice {
                value: v.to_string(),
                den: self.den,
            });
        }
        let n = v
            .numer()
            .checked_mul(self.den as i128 / d)
            .ok_or(NumError::Overflow)?;
        i64::try_from(n).map_err(|_| NumError::Overflow)
    }
    fn cell_limit(&self) -> i64 {
        i64::MAX / 8 / self.den
    }
}

/// Floating backend for arbitrary slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatBackend {
    rise: f64,
    run: f64,
    eps: f64,
}

impl FloatBackend {
    pub fn new(slope: Slope, eps: f64) -> Self {
        let (rise, run) = match slope {
            Slope::Rational { rise, run } => (rise as f64, run as f64),
            Slope::Vertical => (1.0, 0.0),
            Slope::Real(t) => (t, 1.0),
        };
        FloatBackend { rise, run, eps }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }
}

impl Backend for FloatBackend {
    type Value = f64;

    fn zero(&self) -> f64 {
        0.0
    }
    fn int(&self, n: i64) -> f64 {
        n as f64
    }
    fn add(&self, a: f64, b: f64) -> f64 {
        a + b
    }
    fn sub(&self, a: f64, b: f64) -> f64 {
        a - b
    }
    fn floor(&self, v: f64) -> i64 {
        v.floor() as i64
    }
    fn ceil(&self, v: f64) -> i64 {
        v.ceil() as i64
    }
    fn is_integer(&self, v: f64) -> bool {
        (v - v.round()).abs() <= self.eps
    }
    fn is_vertical(&self) -> bool {
        self.run == 0.0
    }
    fn rise_for_run(&self, dx: f64) -> f64 {
        dx * self.rise / self.run
    }
    fn run_for_rise(&self, dy: f64) -> f64 {
        dy * self.run / self.rise
    }
    fn cmp_reach(&self, dx: f64, dy: f64) -> Ordering {
        if self.run == 0.0 {
            return Ordering::Greater;
        }
        let dy_at_x = self.rise_for_run(dx);
        if (dy_at_x - dy).abs() <= self.eps || (dx - self.run_for_rise(dy)).abs() <= self.eps {
            Ordering::Equal
        } else if dy_at_x < dy {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
    fn to_f64(&self, v: f64) -> f64 {
        v
    }
    fn to_q(&self, _v: f64) -> Option<Q> {
        None
    }
    fn from_q(&self, v: &Q) -> Result<f64, NumError> {
        Ok(q_to_f64(v))
    }
    fn cell_limit(&self) -> i64 {
        1 << 40
    }
}

/// Scalar arithmetic on the circle `R/Z`, shared by exact and float code.
pub trait CircleNum: Copy + PartialEq + PartialOrd + fmt::Debug + Send + Sync {
    fn ratio(n: i64, d: i64) -> Self;
    fn from_q(v: &Q) -> Self;
    fn plus(self, o: Self) -> Self;
    fn minus(self, o: Self) -> Self;
    fn times(self, n: i64) -> Self;
    fn div_int(self, n: i64) -> Self;
    fn floor_int(self) -> i64;
    fn to_f64(self) -> f64;
    fn frac(self) -> Self {
        self.minus(Self::ratio(self.floor_int(), 1))
    }
}

impl CircleNum for Q {
    fn ratio(n: i64, d: i64) -> Self {
        q(n as i128, d as i128)
    }
    fn from_q(v: &Q) -> Self {
        *v
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn times(self, n: i64) -> Self {
        self * n as i128
    }
    fn div_int(self, n: i64) -> Self {
        self / n as i128
    }
    fn floor_int(self) -> i64 {
        floor_q(&self) as i64
    }
    fn to_f64(self) -> f64 {
        q_to_f64(&self)
    }
}

impl CircleNum for f64 {
    fn ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn from_q(v: &Q) -> Self {
        q_to_f64(v)
    }
    fn plus(self, o: Self) -> Self {
        self + o
    }
    fn minus(self, o: Self) -> Self {
        self - o
    }
    fn times(self, n: i64) -> Self {
        self * n as f64
    }
    fn div_int(self, n: i64) -> Self {
        self / n as f64
    }
    fn floor_int(self) -> i64 {
        self.floor() as i64
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn frac(self) -> Self {
        let r = self - self.floor();
        if r >= 1.0 {
            0.0
        } else {
            r
        }
    }
}

/// `|x|` for rationals, kept here to avoid importing `Signed` everywhere.
pub fn abs_q(x: &Q) -> Q {
    x.abs()
}
