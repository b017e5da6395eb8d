//! Base geometries with closed-form Euler characteristics and Picard classes.

use crate::error::Error;
use crate::poly::HilbertPoly;
use crate::{rat, Result};

/// Picard class of a line bundle on the base, as a vector of integers of
/// length the Picard rank the geometry reports.
pub type PicClass = Vec<i64>;

/// The supported polarized base geometries. Each knows its Picard rank and
/// the Euler characteristic of twists `L(m)` as a polynomial in `m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BaseGeometry {
    /// A point with the trivial Picard group; every sheaf counts dimensions.
    LogPoint,
    /// The projective line, classes indexed by degree, polarization O(1).
    P1,
    /// A product of two projective lines, classes (a, b), polarization O(1,1).
    P1xP1,
    /// A smooth projective curve of the given genus with a polarization of
    /// the given degree.
    Curve { genus: i64, polarization_degree: i64 },
}

impl BaseGeometry {
    pub fn pic_rank(&self) -> usize {
        match self {
            BaseGeometry::LogPoint => 0,
            BaseGeometry::P1 => 1,
            BaseGeometry::P1xP1 => 2,
            BaseGeometry::Curve { .. } => 1,
        }
    }

    /// Euler characteristic of the `m`-th polarization twist of a line bundle
    /// in the given class, as a polynomial in `m`.
    pub fn euler_poly(&self, class: &PicClass) -> Result<HilbertPoly> {
        if class.len() != self.pic_rank() {
            return Err(Error::Dimension(format!(
                "class {class:?} does not match Picard rank {}",
                self.pic_rank()
            )));
        }
        Ok(match self {
            BaseGeometry::LogPoint => HilbertPoly::constant(rat(1)),
            BaseGeometry::P1 => HilbertPoly::linear(rat(class[0] + 1)),
            BaseGeometry::P1xP1 => {
                let a = HilbertPoly::linear(rat(class[0] + 1));
                let b = HilbertPoly::linear(rat(class[1] + 1));
                &a * &b
            }
            BaseGeometry::Curve { genus, polarization_degree } => {
                // Riemann-Roch: chi(L(m)) = h m + deg L + 1 - g.
                HilbertPoly::new(vec![rat(class[0] + 1 - genus), rat(*polarization_degree)])
            }
        })
    }

    /// The class of the polarization itself, used by twist-shift identities.
    pub fn polarization_class(&self) -> PicClass {
        match self {
            BaseGeometry::LogPoint => vec![],
            BaseGeometry::P1 => vec![1],
            BaseGeometry::P1xP1 => vec![1, 1],
            BaseGeometry::Curve { polarization_degree, .. } => vec![*polarization_degree],
        }
    }
}

/// Sum of a list of classes (the trivial class for an empty list needs the
/// rank, hence the explicit parameter).
pub fn class_sum(rank: usize, classes: &[&PicClass]) -> PicClass {
    let mut out = vec![0; rank];
    for c in classes {
        for (o, x) in out.iter_mut().zip(c.iter()) {
            *o += x;
        }
    }
    out
}

/// Euler characteristic of a direct sum of line bundles.
pub fn euler_sum(base: &BaseGeometry, classes: &[PicClass]) -> Result<HilbertPoly> {
    let mut total = HilbertPoly::zero();
    for c in classes {
        total = &total + &base.euler_poly(c)?;
    }
    Ok(total)
}

/// Shifts a class by `k` polarization steps.
pub fn shift_class(base: &BaseGeometry, class: &PicClass, k: i64) -> PicClass {
    class
        .iter()
        .zip(base.polarization_class())
        .map(|(&c, p)| c + k * p)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    #[test]
    fn euler_closed_forms() {
        assert_eq!(
            BaseGeometry::LogPoint.euler_poly(&vec![]).unwrap().to_string(),
            "1"
        );
        assert_eq!(
            BaseGeometry::P1.euler_poly(&vec![3]).unwrap().to_string(),
            "m + 4"
        );
        assert_eq!(
            BaseGeometry::P1xP1.euler_poly(&vec![2, 0]).unwrap().to_string(),
            "m^2 + 4m + 3"
        );
        let curve = BaseGeometry::Curve { genus: 1, polarization_degree: 1 };
        assert_eq!(curve.euler_poly(&vec![5]).unwrap().to_string(), "m + 5");
    }

    #[test]
    fn twist_shift_identity() {
        // chi(L + polarization)(m) = chi(L)(m + 1) for every geometry.
        let cases: Vec<(BaseGeometry, PicClass)> = vec![
            (BaseGeometry::P1, vec![2]),
            (BaseGeometry::P1xP1, vec![1, -2]),
            (BaseGeometry::Curve { genus: 3, polarization_degree: 2 }, vec![-1]),
        ];
        for (base, class) in cases {
            let shifted = shift_class(&base, &class, 1);
            let lhs = base.euler_poly(&shifted).unwrap();
            let rhs = base.euler_poly(&class).unwrap();
            for m in -3..4 {
                assert_eq!(lhs.eval(&ratio(m, 1)), rhs.eval(&ratio(m + 1, 1)));
            }
        }
    }
}
