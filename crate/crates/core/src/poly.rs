//! Hilbert polynomials with exact rational coefficients, their normalizations
//! and the total order used by slope comparisons.

use crate::{rat, Rat, Result};
use num_traits::{One, Signed, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

/// Polynomial in one variable `m`, coefficients stored low degree first with
/// trailing zeros trimmed. The zero polynomial has an empty coefficient list.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct HilbertPoly {
    pub coeffs: Vec<Rat>,
}

impl HilbertPoly {
    pub fn new(coeffs: Vec<Rat>) -> Self {
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Rat) -> Self {
        Self::new(vec![c])
    }

    /// `(m + a)`, the basic linear factor.
    pub fn linear(a: Rat) -> Self {
        Self::new(vec![a, rat(1)])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports None.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&Rat> {
        self.coeffs.last()
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        self.coeffs.iter().rev().fold(Rat::zero(), |acc, c| acc * x + c)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Monic normalization: divide by the leading coefficient.
    pub fn monic(&self) -> Result<Self> {
        let lead = self.leading().ok_or(crate::Error::ZeroSlope)?;
        Ok(self.scale(&(Rat::one() / lead)))
    }

    /// Normalization with leading term `m^d / d!`.
    pub fn reduced(&self) -> Result<Self> {
        let d = self.degree().ok_or(crate::Error::ZeroSlope)?;
        let fact: Rat = (1..=d as i64).map(rat).product();
        let lead = self.leading().expect("nonzero");
        Ok(self.scale(&(Rat::one() / (lead * fact))))
    }
}

impl Add for &HilbertPoly {
    type Output = HilbertPoly;
    fn add(self, rhs: &HilbertPoly) -> HilbertPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        HilbertPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }
}

impl Sub for &HilbertPoly {
    type Output = HilbertPoly;
    fn sub(self, rhs: &HilbertPoly) -> HilbertPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        HilbertPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }
}

impl Neg for &HilbertPoly {
    type Output = HilbertPoly;
    fn neg(self) -> HilbertPoly {
        HilbertPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &HilbertPoly {
    type Output = HilbertPoly;
    fn mul(self, rhs: &HilbertPoly) -> HilbertPoly {
        if self.is_zero() || rhs.is_zero() {
            return HilbertPoly::zero();
        }
        let mut out = vec![Rat::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + a * b;
            }
        }
        HilbertPoly::new(out)
    }
}

/// Order by eventual dominance: compare coefficients from the top degree
/// down. This matches comparing values for all large `m`.
pub fn poly_compare(a: &HilbertPoly, b: &HilbertPoly) -> Ordering {
    let n = a.coeffs.len().max(b.coeffs.len());
    for i in (0..n).rev() {
        match a.coeff(i).cmp(&b.coeff(i)) {
            Ordering::Equal => {}
            ord => return ord,
        }
    }
    Ordering::Equal
}

impl fmt::Display for HilbertPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for i in (0..self.coeffs.len()).rev() {
            let c = &self.coeffs[i];
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            let sign = c.is_negative();
            if first {
                if sign {
                    write!(f, "-")?;
                }
                first = false;
            } else if sign {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let var = match i {
                0 => String::new(),
                1 => "m".into(),
                _ => format!("m^{i}"),
            };
            if i == 0 {
                write!(f, "{}", crate::rat_string(&mag))?;
            } else if mag.is_one() {
                write!(f, "{var}")?;
            } else if mag.denom().is_one() {
                write!(f, "{}{var}", mag.numer())?;
            } else {
                write!(f, "({}){var}", crate::rat_string(&mag))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    fn p(coeffs: &[(i64, i64)]) -> HilbertPoly {
        HilbertPoly::new(coeffs.iter().map(|&(n, d)| ratio(n, d)).collect())
    }

    #[test]
    fn reduced_normalization_examples() {
        // 2m + 4 -> m + 2
        assert_eq!(p(&[(4, 1), (2, 1)]).reduced().unwrap(), p(&[(2, 1), (1, 1)]));
        // 12m + 26 -> m + 13/6
        assert_eq!(p(&[(26, 1), (12, 1)]).reduced().unwrap(), p(&[(13, 6), (1, 1)]));
        // m^2 + 4m + 3 -> m^2/2 + 2m + 3/2
        assert_eq!(
            p(&[(3, 1), (4, 1), (1, 1)]).reduced().unwrap(),
            p(&[(3, 2), (2, 1), (1, 2)])
        );
    }

    #[test]
    fn monic_normalization() {
        // 4m^2 + 12m + 8 -> m^2 + 3m + 2
        assert_eq!(
            p(&[(8, 1), (12, 1), (4, 1)]).monic().unwrap(),
            p(&[(2, 1), (3, 1), (1, 1)])
        );
        assert!(HilbertPoly::zero().monic().is_err());
    }

    #[test]
    fn dominance_order() {
        assert_eq!(poly_compare(&p(&[(0, 1), (1, 1)]), &p(&[(100, 1)])), Ordering::Greater);
        assert_eq!(
            poly_compare(&p(&[(5, 2), (1, 1)]), &p(&[(7, 3), (1, 1)])),
            Ordering::Greater
        );
        assert_eq!(poly_compare(&p(&[]), &p(&[])), Ordering::Equal);
        assert_eq!(poly_compare(&p(&[(-1, 1)]), &p(&[])), Ordering::Less);
    }

    #[test]
    fn display_forms() {
        assert_eq!(p(&[(2, 1), (3, 1), (1, 1)]).to_string(), "m^2 + 3m + 2");
        assert_eq!(p(&[(-1, 1), (3, 2), (1, 1)]).to_string(), "m^2 + (3/2)m - 1");
        assert_eq!(p(&[(13, 6), (1, 1)]).to_string(), "m + 13/6");
        assert_eq!(p(&[]).to_string(), "0");
        assert_eq!(p(&[(1, 1), (-1, 1)]).to_string(), "-m + 1");
    }

    #[test]
    fn arithmetic() {
        let a = p(&[(1, 1), (1, 1)]);
        let b = p(&[(2, 1), (1, 1)]);
        assert_eq!(&a * &b, p(&[(2, 1), (3, 1), (1, 1)]));
        assert_eq!(&(&a + &b) - &b, a);
        assert_eq!(a.eval(&ratio(3, 1)), ratio(4, 1));
    }
}
