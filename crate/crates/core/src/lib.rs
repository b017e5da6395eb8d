//! Exact engine for parabolic sheaves on polarized logarithmic schemes.
//!
//! The crate is organized around five layers:
//!   * integer/rational lattice arithmetic ([`lattice`]),
//!   * finitely generated sharp monoids and Kummer extensions ([`monoid`]),
//!   * base geometries, charts and Hilbert polynomials ([`base`], [`chart`], [`poly`]),
//!   * the parabolic sheaf data model with its functorial operations
//!     ([`sheaf`], [`rootops`]),
//!   * generating-sheaf slope calculus and stability verdicts ([`stability`]).
//!
//! Everything is exact: coefficients are arbitrary-precision rationals and all
//! comparisons are decided symbolically, never through floating point.

pub mod base;
pub mod chart;
pub mod doc;
pub mod error;
pub mod fixtures;
pub mod lattice;
pub mod monoid;
pub mod poly;
pub mod rootops;
pub mod sheaf;
pub mod stability;

pub use base::{BaseGeometry, PicClass};
pub use chart::Chart;
pub use error::Error;
pub use monoid::{KummerExtension, MonoidPresentation, RationalMonoid};
pub use poly::HilbertPoly;
pub use sheaf::ParabolicSheaf;
pub use stability::{GeneratingChart, Verdict, VerdictStatus};

/// Exact rational scalar used throughout.
pub type Rat = num_rational::BigRational;
/// Integer vector in an ambient lattice.
pub type IVec = Vec<i64>;
/// Rational vector in an ambient lattice tensored with the rationals.
pub type QVec = Vec<Rat>;

pub type Result<T> = std::result::Result<T, Error>;

use num_traits::{One, Signed, Zero};

/// `n` as a rational.
pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

/// `a/b` as a rational. Panics if `b == 0`.
pub fn ratio(a: i64, b: i64) -> Rat {
    Rat::new(a.into(), b.into())
}

/// Parse a rational from the canonical string form `a` or `a/b`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let bad = || Error::Schema(format!("malformed rational {s:?}"));
    let (num, den) = match s.split_once('/') {
        None => (s, "1"),
        Some((n, d)) => (n, d),
    };
    let n: num_bigint::BigInt = num.parse().map_err(|_| bad())?;
    let d: num_bigint::BigInt = den.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rat::new(n, d))
}

/// Canonical string form of a rational: `a` or `a/b` in lowest terms, `b > 0`.
pub fn rat_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Strict parse used by document validation: the string must already be in
/// canonical lowest-terms form.
pub fn parse_rat_strict(s: &str) -> Result<Rat> {
    let r = parse_rat(s)?;
    if rat_string(&r) != s {
        return Err(Error::Schema(format!("rational {s:?} is not in lowest terms")));
    }
    Ok(r)
}

/// Lexicographic order on rational vectors.
pub fn lex_cmp(a: &QVec, b: &QVec) -> std::cmp::Ordering {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(b) {
        match x.cmp(y) {
            std::cmp::Ordering::Equal => {}
            c => return c,
        }
    }
    std::cmp::Ordering::Equal
}

/// `v` as a rational vector.
pub fn to_qvec(v: &[i64]) -> QVec {
    v.iter().map(|&x| rat(x)).collect()
}

/// Rounds a rational vector down to an integer vector, componentwise.
pub fn qfloor(v: &QVec) -> IVec {
    v.iter().map(|x| x.floor().to_integer().try_into().expect("floor fits i64")).collect()
}

/// Rounds a rational vector up to an integer vector, componentwise.
pub fn qceil(v: &QVec) -> IVec {
    v.iter().map(|x| x.ceil().to_integer().try_into().expect("ceil fits i64")).collect()
}

/// Exact integer value of a rational vector, if it is one.
pub fn qvec_to_ivec(v: &QVec) -> Option<IVec> {
    v.iter()
        .map(|x| {
            if x.denom().is_one() {
                i64::try_from(x.numer().clone()).ok()
            } else {
                None
            }
        })
        .collect()
}

/// Sum of absolute values of the coordinates.
pub fn l1_norm(v: &[i64]) -> i64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Componentwise sum.
pub fn vec_add(a: &[i64], b: &[i64]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Componentwise difference.
pub fn vec_sub(a: &[i64], b: &[i64]) -> IVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn qvec_add(a: &QVec, b: &QVec) -> QVec {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn qvec_sub(a: &QVec, b: &QVec) -> QVec {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// True if every coordinate is nonnegative.
pub fn qvec_nonneg(v: &QVec) -> bool {
    v.iter().all(|x| !x.is_negative())
}
