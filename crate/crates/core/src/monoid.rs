//! Finitely generated sharp monoids inside an ambient integer lattice, their
//! free envelopes, and Kummer extensions with weight-class bookkeeping.

use crate::error::Error;
use crate::lattice::{
    in_cone, in_lattice, lattice_basis, mat_vec, positive_functional, rank_rational, smith,
    solve_integer, solve_rational, unimodular_inverse,
};
use crate::{lex_cmp, qvec_sub, rat, to_qvec, IVec, QVec, Rat, Result};
use num_integer::Integer;
use num_traits::{Signed, Zero};
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

/// A finitely generated monoid given by integer generators. The constructor
/// enforces sharpness, so every instance is a sharp (but not necessarily
/// saturated or simplicial) submonoid of its ambient lattice.
#[derive(Clone, Debug)]
pub struct MonoidPresentation {
    pub ambient_rank: usize,
    pub generators: Vec<IVec>,
    // Cached integer multiple of a strictly positive functional; None when no
    // i64 scaling exists. Never part of the monoid's identity.
    pub(crate) phi: std::sync::OnceLock<Option<IVec>>,
}

impl PartialEq for MonoidPresentation {
    fn eq(&self, other: &Self) -> bool {
        self.ambient_rank == other.ambient_rank && self.generators == other.generators
    }
}

impl Eq for MonoidPresentation {}

// Clears denominators and common content; None when an entry overflows i64.
fn scale_functional(f: &[Rat]) -> Option<IVec> {
    let mut lcm = num_bigint::BigInt::from(1);
    for x in f {
        lcm = lcm.lcm(x.denom());
    }
    let mut scaled: Vec<num_bigint::BigInt> =
        f.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let mut content = num_bigint::BigInt::from(0);
    for s in &scaled {
        content = content.gcd(s);
    }
    if content > num_bigint::BigInt::from(1) {
        for s in &mut scaled {
            *s /= &content;
        }
    }
    scaled.into_iter().map(|s| i64::try_from(s).ok()).collect()
}

// Sign of `phi . w` without allocation in the common range; sums of i64
// products can exceed i128, so overflow falls back to exact big integers.
fn dot_is_negative(phi: &[i64], w: &[i64]) -> bool {
    let mut acc: i128 = 0;
    for (&p, &x) in phi.iter().zip(w) {
        let term = i128::from(p) * i128::from(x);
        match acc.checked_add(term) {
            Some(s) => acc = s,
            None => {
                let big: num_bigint::BigInt = phi
                    .iter()
                    .zip(w)
                    .map(|(&p, &x)| num_bigint::BigInt::from(p) * num_bigint::BigInt::from(x))
                    .sum();
                return big.is_negative();
            }
        }
    }
    acc < 0
}

/// Extremal and internal indecomposables of a simplicial monoid.
pub struct SimplicialStructure {
    pub extremal: Vec<IVec>,
    pub internal: Vec<IVec>,
}

/// Primitive relation `c * q = sum_i coeffs[i] * extremal[i]` attached to an
/// internal indecomposable.
pub struct StandardRelation {
    pub q: IVec,
    pub c: i64,
    pub coeffs: Vec<i64>,
}

impl MonoidPresentation {
    pub fn new(ambient_rank: usize, generators: Vec<IVec>) -> Result<Self> {
        for g in &generators {
            if g.len() != ambient_rank {
                return Err(Error::Dimension(format!(
                    "generator {g:?} does not have ambient rank {ambient_rank}"
                )));
            }
            if g.iter().all(|&x| x == 0) {
                return Err(Error::Schema("zero generator".into()));
            }
        }
        let Some(f) = positive_functional(&generators) else {
            return Err(Error::NotSharp(format!(
                "no strictly positive functional on {generators:?}"
            )));
        };
        let phi = std::sync::OnceLock::new();
        let _ = phi.set(scale_functional(&f));
        Ok(Self { ambient_rank, generators, phi })
    }

    /// The free monoid on the coordinate axes.
    pub fn free(rank: usize) -> Self {
        let generators = (0..rank)
            .map(|i| (0..rank).map(|j| i64::from(i == j)).collect())
            .collect();
        let phi = std::sync::OnceLock::new();
        let _ = phi.set(Some(vec![1; rank]));
        Self { ambient_rank: rank, generators, phi }
    }

    // The cached positive functional, computed on demand for instances built
    // from parts of an already validated monoid.
    fn pruning_functional(&self) -> Option<&IVec> {
        self.phi
            .get_or_init(|| positive_functional(&self.generators).and_then(|f| scale_functional(&f)))
            .as_ref()
    }

    /// Expresses `v` as a nonnegative integer combination of the generators,
    /// if possible. Search is pruned by a strictly positive functional, which
    /// sharpness guarantees; the functional value strictly decreases along any
    /// decomposition, so the search is finite.
    pub fn express(&self, v: &[i64]) -> Option<Vec<u32>> {
        if v.len() != self.ambient_rank {
            return None;
        }
        if v.iter().all(|&x| x == 0) {
            return Some(vec![0; self.generators.len()]);
        }
        if self.generators.is_empty() {
            return None;
        }
        let phi_rat: Vec<Rat>;
        let negative: Box<dyn Fn(&[i64]) -> bool> = match self.pruning_functional() {
            Some(phi) => Box::new(move |w| dot_is_negative(phi, w)),
            None => {
                phi_rat =
                    positive_functional(&self.generators).expect("constructor checked sharpness");
                Box::new(move |w| {
                    w.iter().zip(&phi_rat).map(|(&x, p)| p * rat(x)).sum::<Rat>().is_negative()
                })
            }
        };
        let mut fail: HashSet<(IVec, usize)> = HashSet::new();
        fn rec(
            m: &MonoidPresentation,
            negative: &dyn Fn(&[i64]) -> bool,
            fail: &mut HashSet<(IVec, usize)>,
            v: &IVec,
            start: usize,
            counts: &mut Vec<u32>,
        ) -> bool {
            if v.iter().all(|&x| x == 0) {
                return true;
            }
            if fail.contains(&(v.clone(), start)) {
                return false;
            }
            for i in start..m.generators.len() {
                let w = crate::vec_sub(v, &m.generators[i]);
                if negative(&w) {
                    continue;
                }
                counts[i] += 1;
                if rec(m, negative, fail, &w, i, counts) {
                    return true;
                }
                counts[i] -= 1;
            }
            fail.insert((v.clone(), start));
            false
        }
        if negative(v) {
            return None;
        }
        let mut counts = vec![0u32; self.generators.len()];
        let v = v.to_vec();
        if rec(self, negative.as_ref(), &mut fail, &v, 0, &mut counts) {
            Some(counts)
        } else {
            None
        }
    }

    pub fn contains(&self, v: &[i64]) -> bool {
        self.express(v).is_some()
    }

    /// Generators not expressible as a sum of two nonzero monoid elements,
    /// deduplicated, in lexicographic order.
    pub fn indecomposables(&self) -> Vec<IVec> {
        let mut unique: Vec<IVec> = Vec::new();
        for g in &self.generators {
            if !unique.contains(g) {
                unique.push(g.clone());
            }
        }
        let mut out: Vec<IVec> = unique
            .iter()
            .filter(|g| {
                // Decomposable iff g - h is a nonzero monoid element for some
                // generator h: any decomposition has a generator as a part.
                !unique.iter().any(|h| {
                    let w = crate::vec_sub(g, h);
                    !w.iter().all(|&x| x == 0) && self.contains(&w)
                })
            })
            .cloned()
            .collect();
        out.sort();
        out
    }

    /// Scans the box `[-bound, bound]^r` for a lattice point of the group of
    /// the monoid that lies in its rational cone but not in the monoid. The
    /// first witness (lexicographically) disproves saturation.
    pub fn saturation_check(&self, bound: i64) -> (bool, Option<IVec>) {
        let r = self.ambient_rank;
        let mut point = vec![-bound; r];
        loop {
            if in_lattice(&self.generators, &point)
                && in_cone(&self.generators, &point)
                && !self.contains(&point)
            {
                return (false, Some(point));
            }
            // Advance odometer.
            let mut i = r;
            loop {
                if i == 0 {
                    return (true, None);
                }
                i -= 1;
                if point[i] < bound {
                    point[i] += 1;
                    for x in point.iter_mut().skip(i + 1) {
                        *x = -bound;
                    }
                    break;
                }
            }
        }
    }

    /// Splits the indecomposables into extremal-ray representatives and
    /// internal ones, requiring the extremal directions to be rationally
    /// independent (the simplicial condition).
    pub fn simplicial_structure(&self) -> Result<SimplicialStructure> {
        let indecs = self.indecomposables();
        let collinear = |a: &IVec, b: &IVec| -> bool {
            // Same ray through the origin, positive side.
            let cross_free = rank_rational(&[to_qvec(a), to_qvec(b)]) <= 1;
            cross_free && a.iter().zip(b).all(|(&x, &y)| x.signum() * y.signum() >= 0)
        };
        let mut extremal = Vec::new();
        let mut internal = Vec::new();
        for g in &indecs {
            let others: Vec<IVec> = indecs
                .iter()
                .filter(|h| !collinear(g, h))
                .cloned()
                .collect();
            if in_cone(&others, g) {
                internal.push(g.clone());
            } else {
                extremal.push(g.clone());
            }
        }
        // One indecomposable per extremal ray; a second one would make the
        // envelope denominators ambiguous.
        for (i, a) in extremal.iter().enumerate() {
            for b in extremal.iter().skip(i + 1) {
                if collinear(a, b) {
                    return Err(Error::Unsupported(format!(
                        "two indecomposables {a:?}, {b:?} on one extremal ray"
                    )));
                }
            }
        }
        let qext: Vec<QVec> = extremal.iter().map(|g| to_qvec(g)).collect();
        let qall: Vec<QVec> = self.generators.iter().map(|g| to_qvec(g)).collect();
        if rank_rational(&qext) != extremal.len() || rank_rational(&qall) != extremal.len() {
            return Err(Error::NotSimplicial(format!(
                "{} extremal rays for a cone of rank {}",
                extremal.len(),
                rank_rational(&qall)
            )));
        }
        Ok(SimplicialStructure { extremal, internal })
    }

    /// Primitive standard relations of the internal indecomposables against
    /// the extremal ones.
    pub fn standard_relations(&self) -> Result<Vec<StandardRelation>> {
        let st = self.simplicial_structure()?;
        let cols: Vec<QVec> = st.extremal.iter().map(|g| to_qvec(g)).collect();
        let mut out = Vec::new();
        for q in &st.internal {
            let lambda = solve_rational(&cols, &to_qvec(q))
                .expect("internal indecomposable lies in the extremal span");
            debug_assert!(lambda.iter().all(|x| !x.is_negative()));
            let c: i64 = lambda
                .iter()
                .map(|x| i64::try_from(x.denom().clone()).expect("denominator fits i64"))
                .fold(1, |acc, d| acc.lcm(&d));
            let coeffs: Vec<i64> = lambda
                .iter()
                .map(|x| {
                    let y = x * rat(c);
                    i64::try_from(y.to_integer()).expect("relation coefficient fits i64")
                })
                .collect();
            // c = lcm of denominators makes the relation primitive already.
            debug_assert_eq!(coeffs.iter().fold(c, |acc, &a| acc.gcd(&a)), 1);
            out.push(StandardRelation { q: q.clone(), c, coeffs });
        }
        Ok(out)
    }

    /// The smallest free monoid on fractions of the extremal generators that
    /// contains the monoid: divide each extremal generator by the least
    /// common multiple of its relation-forced denominators.
    pub fn free_envelope(&self) -> Result<RationalMonoid> {
        let st = self.simplicial_structure()?;
        let relations = self.standard_relations()?;
        let d: Vec<i64> = (0..st.extremal.len())
            .map(|i| {
                relations
                    .iter()
                    .map(|rel| rel.c / rel.c.gcd(&rel.coeffs[i]))
                    .fold(1i64, |acc, b| acc.lcm(&b))
            })
            .collect();
        let scale = d.iter().fold(1i64, |acc, &x| acc.lcm(&x));
        let generators: Vec<IVec> = st
            .extremal
            .iter()
            .zip(&d)
            .map(|(g, &di)| g.iter().map(|&x| x * (scale / di)).collect())
            .collect();
        RationalMonoid::new(scale, MonoidPresentation::new(self.ambient_rank, generators)?)
    }
}

impl fmt::Display for MonoidPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self
            .generators
            .iter()
            .map(|g| {
                let coords: Vec<String> = g.iter().map(|x| x.to_string()).collect();
                format!("({})", coords.join(","))
            })
            .collect();
        write!(f, "<{}>", gens.join(", "))
    }
}

/// A monoid with rational generators, stored as `(1/scale) * base` and kept
/// in a canonical form: generators sorted, common content divided out.
#[derive(Clone, Debug)]
pub struct RationalMonoid {
    pub scale: i64,
    pub base: MonoidPresentation,
}

impl RationalMonoid {
    pub fn new(scale: i64, base: MonoidPresentation) -> Result<Self> {
        if scale <= 0 {
            return Err(Error::Schema("scale must be positive".into()));
        }
        let mut content = scale;
        for g in &base.generators {
            for &x in g {
                content = content.gcd(&x);
            }
        }
        let content = content.max(1);
        let mut generators: Vec<IVec> = base
            .generators
            .iter()
            .map(|g| g.iter().map(|&x| x / content).collect())
            .collect();
        generators.sort();
        generators.dedup();
        Ok(Self {
            scale: scale / content,
            base: MonoidPresentation {
                ambient_rank: base.ambient_rank,
                generators,
                phi: Default::default(),
            },
        })
    }

    pub fn integral(m: MonoidPresentation) -> Self {
        Self::new(1, m).expect("scale 1 is valid")
    }

    pub fn generators_q(&self) -> Vec<QVec> {
        self.base
            .generators
            .iter()
            .map(|g| g.iter().map(|&x| crate::ratio(x, self.scale)).collect())
            .collect()
    }

    pub fn free_envelope(&self) -> Result<RationalMonoid> {
        let inner = self.base.free_envelope()?;
        RationalMonoid::new(self.scale * inner.scale, inner.base)
    }
}

impl PartialEq for RationalMonoid {
    fn eq(&self, other: &Self) -> bool {
        self.scale == other.scale && self.base == other.base
    }
}
impl Eq for RationalMonoid {}

impl fmt::Display for RationalMonoid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let gens: Vec<String> = self
            .base
            .generators
            .iter()
            .map(|g| {
                let d = g.iter().fold(self.scale, |acc, x| acc.gcd(x)).max(1);
                let coords: Vec<String> = g.iter().map(|x| (x / d).to_string()).collect();
                let s = self.scale / d;
                if s == 1 {
                    format!("({})", coords.join(","))
                } else {
                    format!("({})/{}", coords.join(","), s)
                }
            })
            .collect();
        write!(f, "<{}>", gens.join(", "))
    }
}

/// A Kummer extension `P <= Q`: same ambient rational space, finite weight
/// class group `Q^gp / P^gp`, every `Q`-generator with a positive multiple in
/// `P`. Carries the derived class data used everywhere downstream.
#[derive(Clone, Debug)]
pub struct KummerExtension {
    pub p: MonoidPresentation,
    pub q: RationalMonoid,
    /// Indecomposables of `Q`, lexicographically ascending.
    pub q_indecs: Vec<QVec>,
    /// Indecomposables of `P`, lexicographically ascending.
    pub p_indecs: Vec<IVec>,
    /// Minimal positive multiple sending each `Q`-indecomposable into `P`.
    pub orders: Vec<i64>,
    /// Invariant factors of `P^gp` inside `Q^gp`.
    pub invariant_factors: Vec<i64>,
    /// Canonical representatives, one per weight class, sorted.
    pub class_reps: Vec<QVec>,
    qgp_basis: Vec<IVec>,
    u: Vec<Vec<i128>>,
    class_index: HashMap<Vec<i64>, usize>,
}

impl PartialEq for KummerExtension {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.q == other.q
    }
}
impl Eq for KummerExtension {}

impl KummerExtension {
    pub fn new(p: MonoidPresentation, q_generators: Vec<QVec>) -> Result<Self> {
        let r = p.ambient_rank;
        for g in &q_generators {
            if g.len() != r {
                return Err(Error::Dimension("extension generators of mixed rank".into()));
            }
        }
        let scale: i64 = q_generators
            .iter()
            .flatten()
            .map(|x| i64::try_from(x.denom().clone()).expect("denominator fits i64"))
            .fold(1, |acc, d| acc.lcm(&d));
        let q_base: Vec<IVec> = q_generators
            .iter()
            .map(|g| {
                g.iter()
                    .map(|x| {
                        let y = x * rat(scale);
                        i64::try_from(y.to_integer()).expect("scaled generator fits i64")
                    })
                    .collect()
            })
            .collect();
        let q_scaled = MonoidPresentation::new(r, q_base)?;
        let q = RationalMonoid::new(scale, q_scaled.clone())?;
        for g in &p.generators {
            let gs: IVec = g.iter().map(|&x| x * scale).collect();
            if !q_scaled.contains(&gs) {
                return Err(Error::NotKummer(format!("P generator {g:?} is not in Q")));
            }
        }
        // Weight lattice data, in the scaled integer model.
        let qgp_basis = lattice_basis(&q_scaled.generators);
        let k = qgp_basis.len();
        let p_scaled: Vec<IVec> = p
            .generators
            .iter()
            .map(|g| g.iter().map(|&x| x * scale).collect())
            .collect();
        // Coordinates of the P group inside the Q group.
        let p_basis = lattice_basis(&p_scaled);
        if p_basis.len() != k {
            return Err(Error::InfiniteQuotient);
        }
        let coords: Vec<IVec> = p_basis
            .iter()
            .map(|v| {
                solve_integer(&qgp_basis, v).ok_or(Error::NotKummer(format!(
                    "P group element {v:?} outside the Q group"
                )))
            })
            .collect::<Result<_>>()?;
        // Columns of the coordinate matrix are the P basis vectors.
        let a: Vec<IVec> = (0..k).map(|i| coords.iter().map(|c| c[i]).collect()).collect();
        let sm = smith(&a);
        if sm.rank != k {
            return Err(Error::InfiniteQuotient);
        }
        let invariant_factors: Vec<i64> = (0..k)
            .map(|i| i64::try_from(sm.s[i][i]).expect("invariant factor fits i64"))
            .collect();
        let order: i64 = invariant_factors.iter().product();
        let u = sm.u;

        let q_indecs: Vec<QVec> = {
            let mut v: Vec<QVec> = q_scaled
                .indecomposables()
                .iter()
                .map(|g| g.iter().map(|&x| crate::ratio(x, scale)).collect())
                .collect();
            v.sort_by(|a, b| lex_cmp(a, b));
            v
        };
        let p_indecs = p.indecomposables();

        let mut orders = Vec::new();
        for qi in &q_indecs {
            let mut found = None;
            for d in 1..=order {
                let w: QVec = qi.iter().map(|x| x * rat(d)).collect();
                if let Some(iv) = crate::qvec_to_ivec(&w) {
                    if p.contains(&iv) {
                        found = Some(d);
                        break;
                    }
                }
            }
            let Some(d) = found else {
                return Err(Error::NotKummer(format!(
                    "no multiple of {qi:?} lands in P within the class group order"
                )));
            };
            orders.push(d);
        }

        let mut ext = Self {
            p,
            q,
            q_indecs,
            p_indecs,
            orders,
            invariant_factors,
            class_reps: Vec::new(),
            qgp_basis,
            u,
            class_index: HashMap::new(),
        };
        ext.build_classes()?;
        Ok(ext)
    }

    fn class_key(&self, scaled: &[i64]) -> Option<Vec<i64>> {
        let x = solve_integer(&self.qgp_basis, scaled)?;
        let y = mat_vec(&self.u, &x.iter().map(|&c| i128::from(c)).collect::<Vec<_>>());
        Some(
            y.iter()
                .zip(&self.invariant_factors)
                .map(|(&yi, &si)| {
                    i64::try_from(yi.rem_euclid(i128::from(si))).expect("residue fits i64")
                })
                .collect(),
        )
    }

    /// Number of weight classes.
    pub fn class_count(&self) -> usize {
        self.class_reps.len()
    }

    /// Index of the weight class of a rational vector in the `Q` group.
    pub fn class_of(&self, v: &QVec) -> Result<usize> {
        let scaled = self.scaled(v)?;
        let key = self
            .class_key(&scaled)
            .ok_or_else(|| Error::Dimension(format!("{v:?} is outside the weight lattice")))?;
        Ok(*self.class_index.get(&key).expect("all residues enumerated"))
    }

    /// True if `v` lies in the group generated by `Q`.
    pub fn in_q_group(&self, v: &QVec) -> bool {
        self.scaled(v).map(|s| self.class_key(&s).is_some()).unwrap_or(false)
    }

    /// True if `v - w` lies in `Q`.
    pub fn q_leq(&self, w: &QVec, v: &QVec) -> bool {
        let d = qvec_sub(v, w);
        match self.scaled(&d) {
            Ok(s) => self.q.base.contains(&s),
            Err(_) => false,
        }
    }

    /// True if the integer vector `v` lies in the group generated by `P`.
    pub fn in_p_group(&self, v: &[i64]) -> bool {
        let scaled: IVec = v.iter().map(|&x| x * self.q.scale).collect();
        let p_scaled: Vec<IVec> = self
            .p
            .generators
            .iter()
            .map(|g| g.iter().map(|&x| x * self.q.scale).collect())
            .collect();
        in_lattice(&p_scaled, &scaled)
    }

    fn scaled(&self, v: &QVec) -> Result<IVec> {
        if v.len() != self.p.ambient_rank {
            return Err(Error::Dimension("weight of wrong rank".into()));
        }
        let w: QVec = v.iter().map(|x| x * rat(self.q.scale)).collect();
        crate::qvec_to_ivec(&w)
            .ok_or_else(|| Error::Dimension(format!("{v:?} is outside the weight lattice")))
    }

    /// Enumerates the classes and picks canonical representatives: among the
    /// nonpositive members of a class within a bounding box, the maximal ones
    /// for the `Q`-order, lexicographically greatest on ties. Classes without
    /// nonpositive members fall back to the Smith lift.
    fn build_classes(&mut self) -> Result<()> {
        let r = self.p.ambient_rank;
        let k = self.qgp_basis.len();
        let order: i64 = self.invariant_factors.iter().product();
        let uinv = unimodular_inverse(&self.u);

        // All residue tuples, odometer order.
        let mut residues: Vec<Vec<i64>> = vec![vec![]];
        for &s in &self.invariant_factors {
            let mut next = Vec::new();
            for t in &residues {
                for v in 0..s {
                    let mut t2 = t.clone();
                    t2.push(v);
                    next.push(t2);
                }
            }
            residues = next;
        }
        debug_assert_eq!(residues.len() as i64, order);

        // Bucket box points by class key.
        let bound: Rat = self
            .q_indecs
            .iter()
            .zip(&self.orders)
            .map(|(qi, &d)| {
                let m = qi.iter().map(|x| x.abs()).max().unwrap_or_else(Rat::zero);
                m * rat(d)
            })
            .sum::<Rat>()
            + rat(1);
        let m_scaled: i64 = (bound * rat(self.q.scale)).ceil().to_integer().try_into().unwrap();
        let mut buckets: BTreeMap<Vec<i64>, Vec<QVec>> = BTreeMap::new();
        if r > 0 {
            let mut point = vec![-m_scaled; r];
            'scan: loop {
                if let Some(key) = self.class_key(&point) {
                    let v: QVec = point.iter().map(|&x| crate::ratio(x, self.q.scale)).collect();
                    buckets.entry(key).or_default().push(v);
                }
                let mut i = r;
                loop {
                    if i == 0 {
                        break 'scan;
                    }
                    i -= 1;
                    if point[i] < 0 {
                        point[i] += 1;
                        for x in point.iter_mut().skip(i + 1) {
                            *x = -m_scaled;
                        }
                        continue 'scan;
                    }
                }
            }
        } else {
            buckets.insert(vec![], vec![vec![]]);
        }

        let mut reps: Vec<QVec> = Vec::new();
        for key in &residues {
            let rep = match buckets.get(key) {
                Some(candidates) if !candidates.is_empty() => {
                    // Dominance strictly increases any functional positive on
                    // the generators, so a scan in descending functional order
                    // only ever needs to compare against the maximal elements
                    // accepted so far.
                    let phi = positive_functional(&self.q.base.generators)
                        .expect("constructor checked sharpness");
                    let value = |v: &QVec| -> Rat {
                        v.iter().zip(&phi).map(|(x, p)| x * p).sum()
                    };
                    let values: Vec<Rat> = candidates.iter().map(value).collect();
                    let mut by_value: Vec<usize> = (0..candidates.len()).collect();
                    by_value.sort_by(|&a, &b| values[b].cmp(&values[a]));
                    let mut maximal: Vec<&QVec> = Vec::new();
                    for i in by_value {
                        let v = &candidates[i];
                        if !maximal.iter().any(|m| self.q_leq(v, m)) {
                            maximal.push(v);
                        }
                    }
                    maximal
                        .into_iter()
                        .max_by(|a, b| lex_cmp(a, b))
                        .expect("nonempty candidate set")
                        .clone()
                }
                _ => {
                    // Smith lift: x = Uinv . key in basis coordinates.
                    let y: Vec<i128> = key.iter().map(|&c| i128::from(c)).collect();
                    let x = mat_vec(&uinv, &y);
                    let mut v = vec![Rat::zero(); r];
                    for (i, &xi) in x.iter().enumerate().take(k) {
                        for j in 0..r {
                            v[j] = &v[j]
                                + crate::ratio(self.qgp_basis[i][j], self.q.scale)
                                    * Rat::from_integer(xi.into());
                        }
                    }
                    v
                }
            };
            reps.push(rep);
        }
        let mut order_idx: Vec<usize> = (0..reps.len()).collect();
        order_idx.sort_by(|&a, &b| lex_cmp(&reps[a], &reps[b]));
        self.class_reps = order_idx.iter().map(|&i| reps[i].clone()).collect();
        self.class_index = order_idx
            .iter()
            .enumerate()
            .map(|(new, &old)| (residues[old].clone(), new))
            .collect();
        Ok(())
    }

    /// Weight-class representative for an arbitrary element of the `Q` group.
    pub fn rep_of(&self, v: &QVec) -> Result<QVec> {
        Ok(self.class_reps[self.class_of(v)?].clone())
    }

    /// All tuples `1 <= a_i <= orders[i]` with the transferred weight
    /// `-sum a_i q_i`, in ascending tuple order.
    pub fn fundamental_weights(&self) -> Vec<(Vec<i64>, QVec)> {
        let r = self.p.ambient_rank;
        let mut out = Vec::new();
        let mut tuple: Vec<i64> = vec![1; self.q_indecs.len()];
        loop {
            let mut w = vec![Rat::zero(); r];
            for (ai, qi) in tuple.iter().zip(&self.q_indecs) {
                for j in 0..r {
                    w[j] = &w[j] - rat(*ai) * &qi[j];
                }
            }
            out.push((tuple.clone(), w));
            let mut i = tuple.len();
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if tuple[i] < self.orders[i] {
                    tuple[i] += 1;
                    for j in i + 1..tuple.len() {
                        tuple[j] = 1;
                    }
                    break;
                }
            }
        }
    }

    /// Free tower detection: `P` free on the axes and `Q = (1/n) P` for a
    /// uniform level `n`. Returns the level.
    pub fn free_tower(&self) -> Option<i64> {
        let r = self.p.ambient_rank;
        if self.p_indecs.len() != r || self.q_indecs.len() != r {
            return None;
        }
        // P = N^r: every generator nonnegative and every axis indecomposable.
        for g in &self.p.generators {
            if g.iter().any(|&x| x < 0) {
                return None;
            }
        }
        for i in 0..r {
            let unit: IVec = (0..r).map(|j| i64::from(i == j)).collect();
            if !self.p_indecs.contains(&unit) {
                return None;
            }
        }
        // Q indecomposables must be the axes divided by one uniform level.
        let mut n: Option<i64> = None;
        let mut axes_seen = vec![false; r];
        for qi in &self.q_indecs {
            let nonzero: Vec<usize> = (0..r).filter(|&j| !qi[j].is_zero()).collect();
            let [j] = nonzero[..] else { return None };
            if qi[j].numer() != &num_bigint::BigInt::from(1) {
                return None;
            }
            let d = i64::try_from(qi[j].denom().clone()).ok()?;
            match n {
                None => n = Some(d),
                Some(m) if m == d => {}
                _ => return None,
            }
            axes_seen[j] = true;
        }
        if !axes_seen.iter().all(|&b| b) {
            return None;
        }
        n
    }

    /// Expresses a `Q`-group element of `Q` as a multiset of indecomposables.
    pub fn express_in_indecs(&self, v: &QVec) -> Option<Vec<u32>> {
        let scaled = self.scaled(v).ok()?;
        let indec_scaled: Vec<IVec> = self
            .q_indecs
            .iter()
            .map(|q| {
                q.iter()
                    .map(|x| i64::try_from((x * rat(self.q.scale)).to_integer()).unwrap())
                    .collect()
            })
            .collect();
        let m = MonoidPresentation {
            ambient_rank: self.p.ambient_rank,
            generators: indec_scaled,
            phi: Default::default(),
        };
        m.express(&scaled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio;

    fn m(rank: usize, gens: &[&[i64]]) -> MonoidPresentation {
        MonoidPresentation::new(rank, gens.iter().map(|g| g.to_vec()).collect()).unwrap()
    }

    #[test]
    fn membership_of_numerical_monoid() {
        let p = m(1, &[&[2], &[3]]);
        assert!(p.contains(&[2]));
        assert!(p.contains(&[5]));
        assert!(p.contains(&[12]));
        assert!(!p.contains(&[1]));
        assert!(!p.contains(&[-2]));
    }

    #[test]
    fn saturation_witness() {
        let p = m(1, &[&[2], &[3]]);
        let (sat, witness) = p.saturation_check(4);
        assert!(!sat);
        assert_eq!(witness, Some(vec![1]));
        let even = m(2, &[&[2, 0], &[1, 1], &[0, 2]]);
        assert_eq!(even.saturation_check(4), (true, None));
    }

    #[test]
    fn indecomposables_sorted() {
        let p = m(2, &[&[2, 0], &[1, 1], &[0, 2], &[2, 2]]);
        assert_eq!(p.indecomposables(), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn envelope_of_square_relation_is_free() {
        // p + q = 2r with p=(2,0), r=(1,1), q=(0,2).
        let p = m(2, &[&[2, 0], &[1, 1], &[0, 2]]);
        let env = p.free_envelope().unwrap();
        // <p/2, q/2> = <(1,0),(0,1)>.
        assert_eq!(env, RationalMonoid::integral(MonoidPresentation::free(2)));
        assert_eq!(env.free_envelope().unwrap(), env);
    }

    #[test]
    fn envelope_with_fractional_rays() {
        let p = m(2, &[&[1, 0], &[1, 1], &[1, 2]]);
        let env = p.free_envelope().unwrap();
        assert_eq!(env.scale, 2);
        assert_eq!(env.base.generators, vec![vec![1, 0], vec![1, 2]]);
        assert_eq!(env.to_string(), "<(1,0)/2, (1,2)/2>");
        assert_eq!(env.free_envelope().unwrap(), env);
    }

    #[test]
    fn envelope_of_free_is_identity() {
        let p = MonoidPresentation::free(3);
        let env = p.free_envelope().unwrap();
        assert_eq!(env, RationalMonoid::integral(MonoidPresentation::free(3)));
    }

    fn half_square() -> KummerExtension {
        let p = MonoidPresentation::free(2);
        let q = vec![
            vec![ratio(1, 2), ratio(0, 1)],
            vec![ratio(0, 1), ratio(1, 2)],
        ];
        KummerExtension::new(p, q).unwrap()
    }

    #[test]
    fn half_square_class_data() {
        let ext = half_square();
        assert_eq!(ext.class_count(), 4);
        assert_eq!(ext.invariant_factors, vec![2, 2]);
        assert_eq!(ext.orders, vec![2, 2]);
        assert_eq!(ext.free_tower(), Some(2));
        // Representatives tile (-1, 0]^2.
        for rep in &ext.class_reps {
            for x in rep {
                assert!(*x > ratio(-1, 1) && *x <= ratio(0, 1));
            }
        }
        let w = vec![ratio(-3, 2), ratio(5, 2)];
        let rep = ext.rep_of(&w).unwrap();
        assert_eq!(rep, vec![ratio(-1, 2), ratio(-1, 2)]);
    }

    #[test]
    fn half_square_fundamental_weights() {
        let ext = half_square();
        let fw = ext.fundamental_weights();
        assert_eq!(fw.len(), 4);
        let weights: Vec<QVec> = fw.iter().map(|(_, w)| w.clone()).collect();
        assert!(weights.contains(&vec![ratio(-1, 2), ratio(-1, 2)]));
        assert!(weights.contains(&vec![ratio(-1, 2), ratio(-1, 1)]));
        assert!(weights.contains(&vec![ratio(-1, 1), ratio(-1, 2)]));
        assert!(weights.contains(&vec![ratio(-1, 1), ratio(-1, 1)]));
    }

    #[test]
    fn trivial_extension_weights() {
        let p = MonoidPresentation::free(1);
        let ext = KummerExtension::new(p, vec![vec![ratio(1, 1)]]).unwrap();
        assert_eq!(ext.class_count(), 1);
        let fw = ext.fundamental_weights();
        assert_eq!(fw, vec![(vec![1], vec![ratio(-1, 1)])]);
    }

    fn non_simplicial_ext() -> KummerExtension {
        let p = m(2, &[&[2, 0], &[1, 1], &[0, 2]]);
        let q = vec![
            vec![ratio(1, 1), ratio(0, 1)],
            vec![ratio(1, 2), ratio(1, 2)],
            vec![ratio(0, 1), ratio(1, 1)],
        ];
        KummerExtension::new(p, q).unwrap()
    }

    #[test]
    fn non_simplicial_classes_and_reps() {
        let ext = non_simplicial_ext();
        assert_eq!(ext.class_count(), 4);
        assert_eq!(ext.invariant_factors.iter().product::<i64>(), 4);
        assert_eq!(ext.orders, vec![2, 2, 2]);
        let reps: Vec<QVec> = ext.class_reps.clone();
        let expect: Vec<QVec> = vec![
            vec![ratio(-1, 2), ratio(-3, 2)],
            vec![ratio(-1, 2), ratio(-1, 2)],
            vec![ratio(0, 1), ratio(-1, 1)],
            vec![ratio(0, 1), ratio(0, 1)],
        ];
        assert_eq!(reps, expect);
        assert_eq!(ext.free_tower(), None);
    }

    #[test]
    fn non_simplicial_fundamental_weights() {
        let ext = non_simplicial_ext();
        let fw = ext.fundamental_weights();
        assert_eq!(fw.len(), 8);
        // All eight transferred weights are distinct vectors.
        let mut ws: Vec<QVec> = fw.iter().map(|(_, w)| w.clone()).collect();
        ws.sort_by(|a, b| lex_cmp(a, b));
        ws.dedup();
        assert_eq!(ws.len(), 8);
    }

    #[test]
    fn kummer_rejects_infinite_quotient() {
        // Q of rank 2 over P of rank 1 in ambient rank 2 cannot be Kummer.
        let p2 = MonoidPresentation::new(2, vec![vec![1, 0]]).unwrap();
        let q2 = vec![
            vec![ratio(1, 1), ratio(0, 1)],
            vec![ratio(0, 1), ratio(1, 1)],
        ];
        assert!(matches!(
            KummerExtension::new(p2, q2),
            Err(Error::InfiniteQuotient)
        ));
    }

    #[test]
    fn express_in_indecs_finds_paths() {
        let ext = half_square();
        // Indecomposables are sorted: (0,1/2) before (1/2,0).
        let counts = ext
            .express_in_indecs(&vec![ratio(1, 1), ratio(1, 2)])
            .unwrap();
        assert_eq!(counts, vec![1, 2]);
        assert!(ext.express_in_indecs(&vec![ratio(-1, 2), ratio(0, 1)]).is_none());
    }
}
