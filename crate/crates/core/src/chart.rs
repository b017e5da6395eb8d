//! A chart couples a Kummer extension of monoids with a base geometry, a
//! Picard realization of the sheaf lattice, and the set of monoid generators
//! whose structure sections vanish.

use crate::base::{BaseGeometry, PicClass};
use crate::error::Error;
use crate::monoid::{KummerExtension, MonoidPresentation};
use crate::{IVec, Result};
use std::collections::{BTreeSet, HashMap};

/// Bound on the total exponent used when checking that the vanishing flags
/// are closed under the monoid relations.
const FLAG_CLOSURE_BOUND: u32 = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chart {
    pub kummer: KummerExtension,
    pub base: BaseGeometry,
    /// Rows index the Picard rank, columns the ambient lattice: the class of
    /// the line bundle attached to a sheaf-lattice vector.
    pub pic_map: Vec<IVec>,
    /// Indices into the indecomposables of `P` whose sections vanish.
    pub zero_flags: BTreeSet<usize>,
}

impl Chart {
    /// `flags` are indices into `kummer.p.generators`; each flagged generator
    /// must be indecomposable, and flaggedness must only depend on the monoid
    /// element a monomial multiplies out to.
    pub fn new(
        kummer: KummerExtension,
        base: BaseGeometry,
        pic_map: Vec<IVec>,
        flags: &BTreeSet<usize>,
    ) -> Result<Self> {
        let r = kummer.p.ambient_rank;
        if pic_map.len() != base.pic_rank() {
            return Err(Error::Schema(format!(
                "pic map has {} rows for Picard rank {}",
                pic_map.len(),
                base.pic_rank()
            )));
        }
        for row in &pic_map {
            if row.len() != r {
                return Err(Error::Schema(format!(
                    "pic map row {row:?} does not have ambient rank {r}"
                )));
            }
        }
        let mut zero_flags = BTreeSet::new();
        for &gi in flags {
            let g = kummer
                .p
                .generators
                .get(gi)
                .ok_or_else(|| Error::Schema(format!("zero section index {gi} out of range")))?;
            let pos = kummer
                .p_indecs
                .iter()
                .position(|p| p == g)
                .ok_or_else(|| {
                    Error::Schema(format!(
                        "zero section on generator {g:?}, which is decomposable"
                    ))
                })?;
            zero_flags.insert(pos);
        }
        let chart = Self { kummer, base, pic_map, zero_flags };
        chart.check_flag_closure()?;
        Ok(chart)
    }

    pub fn ambient_rank(&self) -> usize {
        self.kummer.p.ambient_rank
    }

    /// Picard class attached to an integer sheaf-lattice vector.
    pub fn pic(&self, v: &[i64]) -> PicClass {
        self.pic_map
            .iter()
            .map(|row| row.iter().zip(v).map(|(&a, &x)| a * x).sum())
            .collect()
    }

    /// Whether the structure section with the given exponents over the
    /// indecomposables vanishes.
    pub fn exponents_flagged(&self, exponents: &[u32]) -> bool {
        exponents
            .iter()
            .enumerate()
            .any(|(i, &e)| e > 0 && self.zero_flags.contains(&i))
    }

    /// Whether the structure section of a monoid element vanishes. Closure of
    /// the flags under relations makes the answer independent of the chosen
    /// factorization.
    pub fn section_vanishes(&self, content: &[i64]) -> Result<bool> {
        if content.iter().all(|&x| x == 0) {
            return Ok(false);
        }
        let indecs = MonoidPresentation {
            ambient_rank: self.ambient_rank(),
            generators: self.kummer.p_indecs.clone(),
            phi: Default::default(),
        };
        let e = indecs.express(content).ok_or_else(|| {
            Error::InvalidSheaf(format!("section content {content:?} is outside the monoid"))
        })?;
        Ok(self.exponents_flagged(&e))
    }

    /// Two factorizations of one monoid element must agree on flaggedness;
    /// checked by enumerating exponent vectors of bounded total degree.
    fn check_flag_closure(&self) -> Result<()> {
        let indecs = &self.kummer.p_indecs;
        let mut seen: HashMap<IVec, (bool, Vec<u32>)> = HashMap::new();
        let mut exps = vec![0u32; indecs.len()];
        loop {
            let total: u32 = exps.iter().sum();
            if total > 0 {
                let content: IVec = (0..self.ambient_rank())
                    .map(|j| {
                        exps.iter()
                            .zip(indecs)
                            .map(|(&e, p)| i64::from(e) * p[j])
                            .sum()
                    })
                    .collect();
                let flagged = self.exponents_flagged(&exps);
                match seen.get(&content) {
                    Some((other, first)) if *other != flagged => {
                        return Err(Error::Schema(format!(
                            "zero sections not closed under relations: exponents {first:?} \
                             and {exps:?} multiply to {content:?} but disagree"
                        )));
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(content, (flagged, exps.clone()));
                    }
                }
            }
            // Advance through all exponent vectors with bounded total.
            let mut i = exps.len();
            loop {
                if i == 0 {
                    return Ok(());
                }
                i -= 1;
                if exps.iter().sum::<u32>() < FLAG_CLOSURE_BOUND {
                    exps[i] += 1;
                    for e in exps.iter_mut().skip(i + 1) {
                        *e = 0;
                    }
                    break;
                } else if exps[i] > 0 {
                    exps[i] = 0;
                } else {
                    continue;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monoid::MonoidPresentation;
    use crate::ratio;

    fn even_monoid_ext() -> KummerExtension {
        let p = MonoidPresentation::new(2, vec![vec![2, 0], vec![1, 1], vec![0, 2]]).unwrap();
        let q = vec![
            vec![ratio(1, 1), ratio(0, 1)],
            vec![ratio(1, 2), ratio(1, 2)],
            vec![ratio(0, 1), ratio(1, 1)],
        ];
        KummerExtension::new(p, q).unwrap()
    }

    #[test]
    fn flag_closure_rejects_partial_flags() {
        // p + q = 2r: flagging r alone contradicts flag-freeness of p + q.
        let ext = even_monoid_ext();
        let base = BaseGeometry::Curve { genus: 1, polarization_degree: 1 };
        let pic = vec![vec![0, 1]];
        let flags: BTreeSet<usize> = [1].into(); // generator (1,1)
        let err = Chart::new(ext, base, pic, &flags).unwrap_err();
        assert!(err.to_string().contains("not closed under relations"));
    }

    #[test]
    fn all_flags_are_closed() {
        let ext = even_monoid_ext();
        let base = BaseGeometry::Curve { genus: 1, polarization_degree: 1 };
        let pic = vec![vec![0, 1]];
        let flags: BTreeSet<usize> = [0, 1, 2].into();
        let chart = Chart::new(ext, base, pic, &flags).unwrap();
        assert!(chart.section_vanishes(&[2, 0]).unwrap());
        assert!(chart.section_vanishes(&[2, 2]).unwrap());
        assert!(!chart.section_vanishes(&[0, 0]).unwrap());
        assert_eq!(chart.pic(&[3, 5]), vec![5]);
    }

    #[test]
    fn flag_index_must_be_indecomposable() {
        let p = MonoidPresentation::new(1, vec![vec![1], vec![2]]).unwrap();
        let ext = KummerExtension::new(p, vec![vec![ratio(1, 1)], vec![ratio(2, 1)]]).unwrap();
        let flags: BTreeSet<usize> = [1].into(); // generator 2 = 1 + 1
        let err = Chart::new(ext, BaseGeometry::LogPoint, vec![], &flags).unwrap_err();
        assert!(err.to_string().contains("decomposable"));
    }
}
