//! Parabolic sheaves: weight classes with line-bundle summands and exact
//! transition matrices over the section algebra of the chart.

use crate::base::{euler_sum, PicClass};
use crate::chart::Chart;
use crate::error::Error;
use crate::monoid::MonoidPresentation;
use crate::poly::HilbertPoly;
use crate::{qvec_add, qvec_sub, qvec_to_ivec, rat, ratio, to_qvec, IVec, QVec, Rat, Result};
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Per-class summand cap: keeps every search in the engine small.
pub const SUMMAND_CAP: usize = 8;

/// Element of the section algebra: an exact linear combination of content
/// monomials, indexed by their ambient lattice vectors.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct SectionPoly {
    terms: BTreeMap<IVec, Rat>,
}

impl SectionPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(content: IVec, coef: Rat) -> Self {
        let mut terms = BTreeMap::new();
        if !coef.is_zero() {
            terms.insert(content, coef);
        }
        Self { terms }
    }

    pub fn scalar(rank: usize, coef: Rat) -> Self {
        Self::monomial(vec![0; rank], coef)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&IVec, &Rat)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// The unique term, if there is exactly one.
    pub fn single_term(&self) -> Option<(&IVec, &Rat)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    fn add_term(&mut self, content: &IVec, coef: &Rat) {
        if coef.is_zero() {
            return;
        }
        match self.terms.get_mut(content) {
            Some(c) => {
                *c = &*c + coef;
                if c.is_zero() {
                    self.terms.remove(content);
                }
            }
            None => {
                self.terms.insert(content.clone(), coef.clone());
            }
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (u, c) in &rhs.terms {
            out.add_term(u, c);
        }
        out
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut out = self.clone();
        for (u, c) in &rhs.terms {
            out.add_term(u, &-c.clone());
        }
        out
    }

    pub fn mul(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for (u, c) in &self.terms {
            for (v, d) in &rhs.terms {
                let w: IVec = u.iter().zip(v).map(|(a, b)| a + b).collect();
                out.add_term(&w, &(c * d));
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(u, d)| (u.clone(), d * c)).collect() }
    }

    /// The rational `rho` with `self = rho * base`, if any. Both inputs must
    /// be nonzero.
    pub fn proportional_to(&self, base: &Self) -> Option<Rat> {
        if self.terms.len() != base.terms.len() || self.is_zero() {
            return None;
        }
        let mut rho: Option<Rat> = None;
        for ((u, c), (v, d)) in self.terms.iter().zip(&base.terms) {
            if u != v {
                return None;
            }
            let q = c / d;
            match &rho {
                None => rho = Some(q),
                Some(r) if *r == q => {}
                _ => return None,
            }
        }
        rho
    }

    /// Exact division in the section algebra; returns None if the division
    /// does not come out even.
    pub fn exact_div(&self, rhs: &Self) -> Option<Self> {
        if self.is_zero() {
            return Some(Self::zero());
        }
        let mut rem = self.clone();
        let mut quot = Self::zero();
        let (lead_u, lead_c) = rhs.terms.iter().next_back()?;
        let mut steps = 0usize;
        while !rem.is_zero() {
            steps += 1;
            if steps > 10_000 {
                return None;
            }
            let (u, c) = rem.terms.iter().next_back().expect("nonzero");
            let tu: IVec = u.iter().zip(lead_u).map(|(a, b)| a - b).collect();
            let tc = c / lead_c;
            let t = Self::monomial(tu, tc);
            quot = quot.add(&t);
            rem = rem.sub(&t.mul(rhs));
        }
        Some(quot)
    }
}

/// Dense matrix of section polynomials. Rows index the target summands,
/// columns the source summands; zero-size matrices are legal and common.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<SectionPoly>,
}

impl Mat {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Self { rows, cols, entries: vec![SectionPoly::zero(); rows * cols] }
    }

    pub fn identity(n: usize, rank: usize) -> Self {
        let mut m = Self::zero(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = SectionPoly::scalar(rank, rat(1));
        }
        m
    }

    pub fn diagonal(entries: Vec<SectionPoly>) -> Self {
        let n = entries.len();
        let mut m = Self::zero(n, n);
        for (i, e) in entries.into_iter().enumerate() {
            *m.at_mut(i, i) = e;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<SectionPoly>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        debug_assert!(rows.iter().all(|row| row.len() == c));
        Self { rows: r, cols: c, entries: rows.into_iter().flatten().collect() }
    }

    pub fn at(&self, i: usize, j: usize) -> &SectionPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut SectionPoly {
        &mut self.entries[i * self.cols + j]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// `self * rhs`, composing rhs first.
    pub fn mul(&self, rhs: &Mat) -> Mat {
        debug_assert_eq!(self.cols, rhs.rows);
        let mut out = Mat::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = SectionPoly::zero();
                for k in 0..self.cols {
                    acc = acc.add(&self.at(i, k).mul(rhs.at(k, j)));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Mat {
        let mut out = Mat::zero(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                *out.at_mut(i, j) = self.at(r, c).clone();
            }
        }
        out
    }

    /// Determinant of a square matrix over the section algebra, by subset
    /// expansion along columns. Sizes stay within the summand cap.
    pub fn determinant(&self) -> SectionPoly {
        assert_eq!(self.rows, self.cols, "determinant needs a square matrix");
        let n = self.rows;
        if n == 0 {
            return SectionPoly::scalar(0, rat(1));
        }
        let rank = self
            .entries
            .iter()
            .find_map(|e| e.terms.keys().next())
            .map_or(0, |k| k.len());
        // dp[mask] = determinant of the submatrix on the rows in `mask` and
        // the first popcount(mask) columns.
        let mut dp = vec![None::<SectionPoly>; 1 << n];
        dp[0] = Some(SectionPoly::scalar(rank, rat(1)));
        for mask in 1usize..(1 << n) {
            let col = mask.count_ones() as usize - 1;
            let mut acc = SectionPoly::zero();
            let mut sign = rat(1);
            for i in 0..n {
                if mask & (1 << i) == 0 {
                    continue;
                }
                let e = self.at(i, col);
                if !e.is_zero() {
                    let sub = dp[mask ^ (1 << i)].clone().expect("filled in order");
                    acc = acc.add(&e.mul(&sub).scale(&sign));
                }
                sign = -sign;
            }
            dp[mask] = Some(acc);
        }
        dp[(1 << n) - 1].take().expect("full mask filled")
    }

    /// True when the matrix is invertible over the section algebra: the
    /// determinant must be a nonzero constant, since the algebra is graded
    /// by a sharp monoid and its only units are the scalars.
    pub fn is_unit(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        match self.determinant().single_term() {
            Some((content, _)) => content.iter().all(|&x| x == 0),
            None => false,
        }
    }

    /// Rank over the fraction field of the section algebra, by fraction-free
    /// elimination; all intermediate divisions are exact.
    pub fn rank(&self) -> usize {
        let mut m: Vec<Vec<SectionPoly>> = (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.at(i, j).clone()).collect())
            .collect();
        let mut prev: Option<SectionPoly> = None;
        let mut r = 0;
        while r < self.rows.min(self.cols) {
            let pivot = (r..self.rows)
                .flat_map(|i| (r..self.cols).map(move |j| (i, j)))
                .find(|&(i, j)| !m[i][j].is_zero());
            let Some((pi, pj)) = pivot else { break };
            m.swap(r, pi);
            for row in m.iter_mut() {
                row.swap(r, pj);
            }
            let pivot_row = m[r].clone();
            for i in r + 1..self.rows {
                for j in r + 1..self.cols {
                    let num = pivot_row[r].mul(&m[i][j]).sub(&m[i][r].mul(&pivot_row[j]));
                    m[i][j] = match &prev {
                        None => num,
                        Some(p) => num.exact_div(p).expect("fraction-free step divides evenly"),
                    };
                }
                m[i][r] = SectionPoly::zero();
            }
            prev = Some(pivot_row[r].clone());
            r += 1;
        }
        r
    }
}

/// One weight class: a representative of a coset of `P^gp` in `Q^gp` and the
/// Picard classes of the summands of the piece at that representative.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightClass {
    pub rep: QVec,
    pub summands: Vec<PicClass>,
}

/// A parabolic sheaf on a chart. `transitions[c][g]` maps the piece at
/// `classes[c].rep` to the piece at `rep + q_g`, expressed against the stored
/// summand bases; entries are evaluated section polynomials.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParabolicSheaf {
    pub chart: Chart,
    pub classes: Vec<WeightClass>,
    pub transitions: Vec<Vec<Mat>>,
}

impl ParabolicSheaf {
    /// Structural construction: shapes are enforced here, the mathematical
    /// laws are reported by [`ParabolicSheaf::validate`].
    pub fn new(
        chart: Chart,
        classes: Vec<WeightClass>,
        transitions: Vec<Vec<Mat>>,
    ) -> Result<Self> {
        let r = chart.ambient_rank();
        let gens = chart.kummer.q_indecs.len();
        for cl in &classes {
            if cl.rep.len() != r {
                return Err(Error::Schema(format!("class representative {:?} has wrong rank", cl.rep)));
            }
            for s in &cl.summands {
                if s.len() != chart.base.pic_rank() {
                    return Err(Error::Schema(format!(
                        "summand class {s:?} does not match Picard rank {}",
                        chart.base.pic_rank()
                    )));
                }
            }
        }
        if transitions.len() != classes.len() {
            return Err(Error::Schema(format!(
                "{} transition groups for {} classes",
                transitions.len(),
                classes.len()
            )));
        }
        for (c, group) in transitions.iter().enumerate() {
            if group.len() != gens {
                return Err(Error::Schema(format!(
                    "class {c} carries {} transition matrices for {gens} generators",
                    group.len()
                )));
            }
            for (g, m) in group.iter().enumerate() {
                if m.cols != classes[c].summands.len() {
                    return Err(Error::Schema(format!(
                        "matrix at class {c} generator {g} has {} columns for {} summands",
                        m.cols,
                        classes[c].summands.len()
                    )));
                }
            }
        }
        Ok(Self { chart, classes, transitions })
    }

    pub fn gen_count(&self) -> usize {
        self.chart.kummer.q_indecs.len()
    }

    pub fn total_summands(&self) -> usize {
        self.classes.iter().map(|c| c.summands.len()).sum()
    }

    pub fn is_zero_sheaf(&self) -> bool {
        self.total_summands() == 0
    }

    /// Maps each weight class of the extension to the index of the sheaf
    /// class representing it. Fails when classes are missing or duplicated.
    pub fn class_map(&self) -> Result<Vec<usize>> {
        let n = self.chart.kummer.class_count();
        let mut map = vec![usize::MAX; n];
        for (i, cl) in self.classes.iter().enumerate() {
            let k = self.chart.kummer.class_of(&cl.rep)?;
            if map[k] != usize::MAX {
                return Err(Error::InvalidSheaf(format!(
                    "two classes share the coset of {:?}",
                    cl.rep
                )));
            }
            map[k] = i;
        }
        if let Some(k) = map.iter().position(|&i| i == usize::MAX) {
            return Err(Error::InvalidSheaf(format!(
                "no class for the coset of {:?}",
                self.chart.kummer.class_reps[k]
            )));
        }
        Ok(map)
    }

    /// Sheaf class index and integral twist for an arbitrary weight.
    pub fn locate(&self, v: &QVec) -> Result<(usize, IVec)> {
        let map = self.class_map()?;
        let k = self.chart.kummer.class_of(v)?;
        let idx = map[k];
        let t = qvec_sub(v, &self.classes[idx].rep);
        let t = qvec_to_ivec(&t).ok_or_else(|| {
            Error::InvalidSheaf(format!("twist from {:?} to {v:?} is not integral", self.classes[idx].rep))
        })?;
        Ok((idx, t))
    }

    /// Picard classes of the piece at weight `v`.
    pub fn piece(&self, v: &QVec) -> Result<Vec<PicClass>> {
        let (idx, t) = self.locate(v)?;
        let shift = self.chart.pic(&t);
        Ok(self.classes[idx]
            .summands
            .iter()
            .map(|s| s.iter().zip(&shift).map(|(a, b)| a + b).collect())
            .collect())
    }

    pub fn piece_euler(&self, v: &QVec) -> Result<HilbertPoly> {
        euler_sum(&self.chart.base, &self.piece(v)?)
    }

    /// Transition target: class index and twist for one generator step.
    pub fn target(&self, c: usize, g: usize) -> Result<(usize, IVec)> {
        let v = qvec_add(&self.classes[c].rep, &self.chart.kummer.q_indecs[g]);
        self.locate(&v)
    }

    /// The evaluated map between the pieces at comparable weights `v <= w`,
    /// against the stored summand bases.
    pub fn hom(&self, v: &QVec, w: &QVec) -> Result<Mat> {
        let diff = qvec_sub(w, v);
        let counts = self.chart.kummer.express_in_indecs(&diff).ok_or_else(|| {
            Error::Unsupported(format!("weights {v:?} and {w:?} are not comparable"))
        })?;
        let (mut c, _) = self.locate(v)?;
        let mut m = Mat::identity(self.classes[c].summands.len(), self.chart.ambient_rank());
        for (g, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                m = self.transitions[c][g].mul(&m);
                c = self.target(c, g)?.0;
            }
        }
        Ok(m)
    }

    /// The four validation families; an empty list means the sheaf satisfies
    /// all of them.
    pub fn validate(&self) -> Vec<String> {
        let mut diags = Vec::new();
        let kummer = &self.chart.kummer;
        let fmt_rep = |rep: &QVec| -> String {
            let coords: Vec<String> = rep.iter().map(crate::rat_string).collect();
            format!("({})", coords.join(","))
        };

        // Class completeness: one class per coset, every coset present.
        if self.classes.len() != kummer.class_count() {
            diags.push(format!(
                "expected {} weight classes, found {}",
                kummer.class_count(),
                self.classes.len()
            ));
        }
        let mut seen: HashMap<usize, usize> = HashMap::new();
        let mut placed: Vec<Option<usize>> = vec![None; self.classes.len()];
        for (i, cl) in self.classes.iter().enumerate() {
            match kummer.class_of(&cl.rep) {
                Ok(k) => {
                    if let Some(&j) = seen.get(&k) {
                        diags.push(format!(
                            "classes {} and {} both represent the coset of {}",
                            fmt_rep(&self.classes[j].rep),
                            fmt_rep(&cl.rep),
                            fmt_rep(&kummer.class_reps[k])
                        ));
                    } else {
                        seen.insert(k, i);
                        placed[i] = Some(k);
                    }
                }
                Err(_) => diags.push(format!(
                    "class representative {} is outside the weight lattice",
                    fmt_rep(&cl.rep)
                )),
            }
        }
        for (k, rep) in kummer.class_reps.iter().enumerate() {
            if !seen.contains_key(&k) {
                diags.push(format!("missing weight class with representative {}", fmt_rep(rep)));
            }
        }
        if !diags.is_empty() {
            // Remaining families assume a complete class table.
            return diags;
        }

        // Twist consistency and matrix shapes.
        let map = match self.class_map() {
            Ok(m) => m,
            Err(e) => return vec![e.to_string()],
        };
        let _ = map;
        for (c, cl) in self.classes.iter().enumerate() {
            for g in 0..self.gen_count() {
                let (tgt, twist) = match self.target(c, g) {
                    Ok(t) => t,
                    Err(e) => {
                        diags.push(e.to_string());
                        continue;
                    }
                };
                if !kummer.in_p_group(&twist) {
                    diags.push(format!(
                        "twist {twist:?} at class {} generator {g} is outside the sheaf lattice group",
                        fmt_rep(&cl.rep)
                    ));
                }
                let m = &self.transitions[c][g];
                let (er, ec) = (self.classes[tgt].summands.len(), cl.summands.len());
                if m.rows != er || m.cols != ec {
                    diags.push(format!(
                        "matrix at class {} generator {g} is {}x{}, expected {er}x{ec}",
                        fmt_rep(&cl.rep),
                        m.rows,
                        m.cols
                    ));
                }
            }
        }
        if !diags.is_empty() {
            return diags;
        }

        // Commuting squares.
        for c in 0..self.classes.len() {
            for i in 0..self.gen_count() {
                for j in i + 1..self.gen_count() {
                    let via_i = {
                        let (t, _) = self.target(c, i).expect("shapes checked");
                        self.transitions[t][j].mul(&self.transitions[c][i])
                    };
                    let via_j = {
                        let (t, _) = self.target(c, j).expect("shapes checked");
                        self.transitions[t][i].mul(&self.transitions[c][j])
                    };
                    if via_i != via_j {
                        diags.push(format!(
                            "transition square at class {} for generators {i},{j} does not commute",
                            fmt_rep(&self.classes[c].rep)
                        ));
                    }
                }
            }
        }

        // Pseudo-periodicity of the sheaf-lattice loops.
        for (ip, p) in kummer.p_indecs.iter().enumerate() {
            let flagged = self.chart.zero_flags.contains(&ip);
            for cl in &self.classes {
                let w = qvec_add(&cl.rep, &to_qvec(p));
                let loop_mat = match self.hom(&cl.rep, &w) {
                    Ok(m) => m,
                    Err(e) => {
                        diags.push(format!(
                            "cannot trace generator {p:?} from class {}: {e}",
                            fmt_rep(&cl.rep)
                        ));
                        continue;
                    }
                };
                let n = cl.summands.len();
                debug_assert_eq!(loop_mat.rows, n);
                if flagged {
                    if !loop_mat.is_zero() {
                        diags.push(format!(
                            "pseudo-periodicity at class {} for flagged generator {p:?}: loop is not zero",
                            fmt_rep(&cl.rep)
                        ));
                    }
                    continue;
                }
                let mut unit: Option<Rat> = None;
                let mut ok = n > 0 || loop_mat.is_zero();
                'scan: for i in 0..n {
                    for j in 0..n {
                        let e = loop_mat.at(i, j);
                        if i != j {
                            if !e.is_zero() {
                                ok = false;
                                break 'scan;
                            }
                            continue;
                        }
                        let Some((content, coef)) = e.single_term() else {
                            ok = false;
                            break 'scan;
                        };
                        if content != p {
                            ok = false;
                            break 'scan;
                        }
                        match &unit {
                            None => unit = Some(coef.clone()),
                            Some(u) if u == coef => {}
                            _ => {
                                ok = false;
                                break 'scan;
                            }
                        }
                    }
                }
                if !ok {
                    diags.push(format!(
                        "pseudo-periodicity at class {} for generator {p:?}: loop is not a unit times the section",
                        fmt_rep(&cl.rep)
                    ));
                }
            }
        }
        diags
    }

    /// Every transition matrix must have full column rank.
    pub fn check_injectivity(&self) -> bool {
        self.transitions
            .iter()
            .flatten()
            .all(|m| m.rank() == m.cols)
    }

    /// Tensor with a line bundle: shift every summand, keep the maps.
    pub fn tensor_line(&self, l: &PicClass) -> Self {
        let classes = self
            .classes
            .iter()
            .map(|c| WeightClass {
                rep: c.rep.clone(),
                summands: c
                    .summands
                    .iter()
                    .map(|s| s.iter().zip(l).map(|(a, b)| a + b).collect())
                    .collect(),
            })
            .collect();
        Self { chart: self.chart.clone(), classes, transitions: self.transitions.clone() }
    }

    /// Reindexes `other` so its classes line up with `self`, retwisting the
    /// stored summands when the chosen representatives differ.
    fn aligned_to(&self, other: &ParabolicSheaf) -> Result<ParabolicSheaf> {
        if self.chart != other.chart {
            return Err(Error::ChartMismatch("sheaves live on different charts".into()));
        }
        let my_map = self.class_map()?;
        let their_map = other.class_map()?;
        let n = self.chart.kummer.class_count();
        let mut order: Vec<usize> = vec![0; self.classes.len()];
        for k in 0..n {
            order[my_map[k]] = their_map[k];
        }
        let mut classes = Vec::new();
        for (i, cl) in self.classes.iter().enumerate() {
            let theirs = &other.classes[order[i]];
            let delta = qvec_to_ivec(&qvec_sub(&cl.rep, &theirs.rep))
                .ok_or_else(|| Error::InvalidSheaf("representative shift is not integral".into()))?;
            let shift = self.chart.pic(&delta);
            classes.push(WeightClass {
                rep: cl.rep.clone(),
                summands: theirs
                    .summands
                    .iter()
                    .map(|s| s.iter().zip(&shift).map(|(a, b)| a + b).collect())
                    .collect(),
            });
        }
        let transitions: Vec<Vec<Mat>> =
            (0..self.classes.len()).map(|i| other.transitions[order[i]].clone()).collect();
        ParabolicSheaf::new(self.chart.clone(), classes, transitions)
    }

    /// Direct sum on a shared chart.
    pub fn direct_sum(&self, other: &ParabolicSheaf) -> Result<ParabolicSheaf> {
        let other = self.aligned_to(other)?;
        let classes: Vec<WeightClass> = self
            .classes
            .iter()
            .zip(&other.classes)
            .map(|(a, b)| WeightClass {
                rep: a.rep.clone(),
                summands: a.summands.iter().chain(&b.summands).cloned().collect(),
            })
            .collect();
        let mut transitions = Vec::new();
        for c in 0..self.classes.len() {
            let mut group = Vec::new();
            for g in 0..self.gen_count() {
                let a = &self.transitions[c][g];
                let b = &other.transitions[c][g];
                let mut m = Mat::zero(a.rows + b.rows, a.cols + b.cols);
                for i in 0..a.rows {
                    for j in 0..a.cols {
                        *m.at_mut(i, j) = a.at(i, j).clone();
                    }
                }
                for i in 0..b.rows {
                    for j in 0..b.cols {
                        *m.at_mut(a.rows + i, a.cols + j) = b.at(i, j).clone();
                    }
                }
                group.push(m);
            }
            transitions.push(group);
        }
        ParabolicSheaf::new(self.chart.clone(), classes, transitions)
    }

    /// The subsheaf on the selected summands. The selection must be closed
    /// under the transitions; entries out of the selection are dropped.
    pub fn restrict(&self, pick: &[Vec<usize>]) -> Result<ParabolicSheaf> {
        if pick.len() != self.classes.len() {
            return Err(Error::Dimension("selection does not match the class count".into()));
        }
        let classes: Vec<WeightClass> = self
            .classes
            .iter()
            .zip(pick)
            .map(|(cl, sel)| WeightClass {
                rep: cl.rep.clone(),
                summands: sel.iter().map(|&i| cl.summands[i].clone()).collect(),
            })
            .collect();
        let mut transitions = Vec::new();
        for c in 0..self.classes.len() {
            let mut group = Vec::new();
            for g in 0..self.gen_count() {
                let (tgt, _) = self.target(c, g)?;
                group.push(self.transitions[c][g].submatrix(&pick[tgt], &pick[c]));
            }
            transitions.push(group);
        }
        ParabolicSheaf::new(self.chart.clone(), classes, transitions)
    }

    /// The quotient by a transition-closed selection: the complement summands
    /// with the induced maps. Closure forces the dropped block to vanish, so
    /// the complement blocks compose correctly.
    pub fn quotient(&self, pick: &[Vec<usize>]) -> Result<ParabolicSheaf> {
        let complement: Vec<Vec<usize>> = self
            .classes
            .iter()
            .zip(pick)
            .map(|(cl, sel)| {
                (0..cl.summands.len()).filter(|i| !sel.contains(i)).collect()
            })
            .collect();
        self.restrict(&complement)
    }
}

/// Builds the diagonal transition matrix for a twist content, evaluating the
/// section: zero when flagged, a unit monomial otherwise.
fn diagonal_section(chart: &Chart, content: &IVec, n: usize) -> Result<Mat> {
    let entry = if chart.section_vanishes(content)? {
        SectionPoly::zero()
    } else {
        SectionPoly::monomial(content.clone(), rat(1))
    };
    Ok(Mat::diagonal(vec![entry; n]))
}

/// Structure sheaf at level one: a single weight class, transitions multiply
/// by the structure sections of the generators.
pub fn level_one(chart: &Chart, summands: &[PicClass]) -> Result<ParabolicSheaf> {
    if chart.kummer.class_count() != 1 {
        return Err(Error::Unsupported(
            "level-one construction needs a trivial weight class group".into(),
        ));
    }
    let rep = chart.kummer.class_reps[0].clone();
    let n = summands.len();
    let mut transitions = vec![Vec::new()];
    for q in &chart.kummer.q_indecs {
        let content = qvec_to_ivec(q).ok_or_else(|| {
            Error::Unsupported("level-one construction needs integral generators".into())
        })?;
        transitions[0].push(diagonal_section(chart, &content, n)?);
    }
    ParabolicSheaf::new(
        chart.clone(),
        vec![WeightClass { rep, summands: summands.to_vec() }],
        transitions,
    )
}

/// The trivial parabolic structure on a sum of line bundles over a free
/// tower: the piece at `v` is the sum twisted by the ceiling of `v`.
pub fn trivial_parabolic(chart: &Chart, summands: &[PicClass]) -> Result<ParabolicSheaf> {
    let Some(_) = chart.kummer.free_tower() else {
        return Err(Error::Unsupported("trivial parabolic structure needs a free tower".into()));
    };
    grid_sheaf(chart, |_| summands.to_vec())
}

/// The pullback of a polarization twist: one summand per class, the piece at
/// `v` is the line bundle of the floor of `v + d/n`.
pub fn unit_twist(chart: &Chart, d: &[i64]) -> Result<ParabolicSheaf> {
    let Some(n) = chart.kummer.free_tower() else {
        return Err(Error::Unsupported("unit twist needs a free tower".into()));
    };
    let r = chart.ambient_rank();
    if d.len() != r || d.iter().any(|&x| x < 0 || x >= n) {
        return Err(Error::Schema(format!("twist exponents {d:?} out of range for level {n}")));
    }
    let offset: QVec = d.iter().map(|&x| ratio(x, n)).collect();
    grid_sheaf(chart, |rep| {
        let f = crate::qfloor(&qvec_add(rep, &offset));
        vec![chart.pic(&f)]
    })
}

/// Shared grid construction: summands are a function of the representative,
/// transitions are the canonical diagonal sections, with contents read off
/// from the actual pieces.
fn grid_sheaf(
    chart: &Chart,
    summands_at: impl Fn(&QVec) -> Vec<PicClass>,
) -> Result<ParabolicSheaf> {
    let reps = chart.kummer.class_reps.clone();
    let classes: Vec<WeightClass> = reps
        .iter()
        .map(|rep| WeightClass { rep: rep.clone(), summands: summands_at(rep) })
        .collect();
    // Transition content: ceiling crossings of the step, uniform over the
    // summands of the class.
    let mut transitions = Vec::new();
    for (c, rep) in reps.iter().enumerate() {
        let mut group = Vec::new();
        for q in &chart.kummer.q_indecs {
            let v = qvec_add(rep, q);
            let k = chart.kummer.class_of(&v)?;
            let twist = qvec_to_ivec(&qvec_sub(&v, &reps[k]))
                .expect("grid targets differ by integral twists");
            let n = classes[c].summands.len();
            debug_assert_eq!(classes[k].summands.len(), n);
            group.push(diagonal_section(chart, &twist, n)?);
        }
        transitions.push(group);
    }
    ParabolicSheaf::new(chart.clone(), classes, transitions)
}

/// Filtration data in the classical weighted style on a one-dimensional
/// sheaf lattice: a decreasing chain of summand subsets between `E` and
/// `E(-D)`, with rational weights.
#[derive(Clone, Debug)]
pub struct MYData {
    pub base: crate::base::BaseGeometry,
    pub divisor: PicClass,
    pub level: i64,
    pub summands: Vec<PicClass>,
    pub weights: Vec<Rat>,
    pub subsets: Vec<BTreeSet<usize>>,
}

impl MYData {
    fn check(&self) -> Result<()> {
        if self.weights.len() != self.subsets.len() || self.weights.is_empty() {
            return Err(Error::Schema("weights and subsets must pair up nonempty".into()));
        }
        let all: BTreeSet<usize> = (0..self.summands.len()).collect();
        if self.subsets[0] != all {
            return Err(Error::Schema("first filtration stage must contain every summand".into()));
        }
        for w in &self.weights {
            if w.is_negative() || *w >= rat(1) {
                return Err(Error::Schema("weights must lie in [0, 1)".into()));
            }
            if !(w * rat(self.level)).is_integer() {
                return Err(Error::Schema("weights must be multiples of 1/level".into()));
            }
        }
        for pair in self.weights.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Schema("weights must strictly increase".into()));
            }
        }
        for pair in self.subsets.windows(2) {
            if !pair[1].is_subset(&pair[0]) || pair[1] == pair[0] {
                return Err(Error::Schema("filtration stages must strictly decrease".into()));
            }
        }
        Ok(())
    }

    /// Stage index for a fractional weight `a` in [0, 1): the deepest stage
    /// whose weight has been passed.
    fn stage(&self, a: &Rat) -> usize {
        let mut i = 0;
        for (k, w) in self.weights.iter().enumerate() {
            if w <= a {
                i = k;
            }
        }
        i
    }

    /// Divisor multiple attached to summand `j` at weight `v`.
    fn version(&self, j: usize, v: &Rat) -> i64 {
        let t: i64 = v.ceil().to_integer().try_into().expect("weight fits i64");
        let a = rat(t) - v;
        let s = self.stage(&a);
        if self.subsets[s].contains(&j) {
            t
        } else {
            t - 1
        }
    }

    /// Weighted Euler characteristic of the filtration.
    pub fn chi(&self) -> Result<HilbertPoly> {
        self.check()?;
        let base = &self.base;
        let shifted: Vec<PicClass> = self
            .summands
            .iter()
            .map(|s| s.iter().zip(&self.divisor).map(|(a, b)| a - b).collect())
            .collect();
        let mut total = euler_sum(base, &shifted)?;
        let k = self.subsets.len();
        for i in 0..k {
            let next: BTreeSet<usize> =
                if i + 1 < k { self.subsets[i + 1].clone() } else { BTreeSet::new() };
            let mut jump = HilbertPoly::zero();
            for &j in self.subsets[i].difference(&next) {
                let with = base.euler_poly(&self.summands[j])?;
                let without = base.euler_poly(&shifted[j])?;
                jump = &jump + &(&with - &without);
            }
            total = &total + &jump.scale(&self.weights[i]);
        }
        Ok(total)
    }
}

/// The parabolic sheaf of a filtration: pieces interpolate between `E` and
/// `E(-D)` according to the stages.
pub fn from_my_filtration(data: &MYData) -> Result<ParabolicSheaf> {
    data.check()?;
    let n = data.level;
    let p = MonoidPresentation::new(1, vec![vec![1]])?;
    let kummer = crate::monoid::KummerExtension::new(p, vec![vec![ratio(1, n)]])?;
    let pic_map: Vec<IVec> = data.divisor.iter().map(|&c| vec![c]).collect();
    let chart = Chart::new(kummer, data.base.clone(), pic_map, &BTreeSet::new())?;

    let reps = chart.kummer.class_reps.clone();
    let m = data.summands.len();
    let classes: Vec<WeightClass> = reps
        .iter()
        .map(|rep| WeightClass {
            rep: rep.clone(),
            summands: (0..m)
                .map(|j| {
                    let ver = data.version(j, &rep[0]);
                    data.summands[j]
                        .iter()
                        .zip(&data.divisor)
                        .map(|(a, b)| a + ver * b)
                        .collect()
                })
                .collect(),
        })
        .collect();
    let mut transitions = Vec::new();
    for rep in &reps {
        let v = &rep[0] + ratio(1, n);
        let entries: Vec<SectionPoly> = (0..m)
            .map(|j| {
                let delta = data.version(j, &v) - data.version(j, &rep[0]);
                SectionPoly::monomial(vec![delta], rat(1))
            })
            .collect();
        transitions.push(vec![Mat::diagonal(entries)]);
    }
    ParabolicSheaf::new(chart, classes, transitions)
}

/// Places a sheaf on the slice `a_i = -j/n` of a one-higher-rank free tower,
/// with zero maps in the new direction. The new direction's section must
/// vanish, otherwise the loop law fails, so the flag is forced here.
pub fn embed_slice(
    f: &ParabolicSheaf,
    direction: usize,
    slice: i64,
    level: i64,
    new_class: PicClass,
) -> Result<ParabolicSheaf> {
    let small = f.chart.ambient_rank();
    let r = small + 1;
    if direction >= r {
        return Err(Error::Dimension(format!("direction {direction} out of range")));
    }
    if slice < 1 || slice > level {
        return Err(Error::Schema(format!("slice index {slice} out of range for level {level}")));
    }
    if small > 0 {
        match f.chart.kummer.free_tower() {
            Some(n) if n == level => {}
            _ => {
                return Err(Error::Unsupported(
                    "slice embedding needs a free tower of the same level".into(),
                ))
            }
        }
    }
    if new_class.len() != f.chart.base.pic_rank() {
        return Err(Error::Dimension("new direction class has the wrong Picard rank".into()));
    }

    let p = MonoidPresentation::free(r);
    let q: Vec<QVec> = (0..r)
        .map(|i| (0..r).map(|j| if i == j { ratio(1, level) } else { rat(0) }).collect())
        .collect();
    let kummer = crate::monoid::KummerExtension::new(p, q)?;
    let pic_map: Vec<IVec> = f
        .chart
        .pic_map
        .iter()
        .zip(&new_class)
        .map(|(row, &c)| {
            let mut out = row.clone();
            out.insert(direction, c);
            out
        })
        .collect();
    let pic_map = if f.chart.base.pic_rank() == 0 { vec![] } else { pic_map };
    // Flags as generator (axis) indices of the free presentation.
    let mut flags: BTreeSet<usize> = BTreeSet::new();
    flags.insert(direction);
    for &idx in &f.chart.zero_flags {
        let axis = f.chart.kummer.p_indecs[idx]
            .iter()
            .position(|&x| x == 1)
            .expect("free tower indecomposables are unit vectors");
        flags.insert(axis + usize::from(axis >= direction));
    }
    let chart = Chart::new(kummer, f.chart.base.clone(), pic_map, &flags)?;

    let slice_rep = if slice == level { rat(0) } else { ratio(-slice, level) };
    let drop = |v: &QVec| -> QVec {
        v.iter()
            .enumerate()
            .filter(|&(i, _)| i != direction)
            .map(|(_, x)| x.clone())
            .collect()
    };
    let reps = chart.kummer.class_reps.clone();
    let mut classes = Vec::new();
    let mut inner_idx: Vec<Option<usize>> = Vec::new();
    for rep in &reps {
        if rep[direction] == slice_rep {
            let (idx, _) = f.locate(&drop(rep))?;
            classes.push(WeightClass {
                rep: rep.clone(),
                summands: f.classes[idx].summands.clone(),
            });
            inner_idx.push(Some(idx));
        } else {
            classes.push(WeightClass { rep: rep.clone(), summands: vec![] });
            inner_idx.push(None);
        }
    }
    let gen_axis = |k: &crate::monoid::KummerExtension, g: usize| -> usize {
        k.q_indecs[g].iter().position(|x| !x.is_zero()).expect("tower generator has an axis")
    };
    let mut transitions = Vec::new();
    for (c, rep) in reps.iter().enumerate() {
        let mut group = Vec::new();
        for g in 0..chart.kummer.q_indecs.len() {
            let axis = gen_axis(&chart.kummer, g);
            let v = qvec_add(rep, &chart.kummer.q_indecs[g]);
            let tgt_k = chart.kummer.class_of(&v)?;
            let rows = classes[tgt_k].summands.len();
            let cols = classes[c].summands.len();
            if axis == direction || inner_idx[c].is_none() {
                group.push(Mat::zero(rows, cols));
                continue;
            }
            let inner_axis = axis - usize::from(axis > direction);
            let inner_gen = if small == 0 {
                unreachable!("rank-zero inner sheaf has no non-direction axes")
            } else {
                (0..f.gen_count())
                    .find(|&ig| gen_axis(&f.chart.kummer, ig) == inner_axis)
                    .expect("axis generator exists")
            };
            group.push(f.transitions[inner_idx[c].expect("occupied")][inner_gen].clone());
        }
        transitions.push(group);
    }
    ParabolicSheaf::new(chart, classes, transitions)
}

/// Injectivity of every transition map, the purity check for sheaves meant
/// to be locally free away from the boundary.
pub fn check_injectivity(f: &ParabolicSheaf) -> bool {
    f.check_injectivity()
}

/// Decides whether two sheaves on one chart are isomorphic: a summand
/// bijection per class preserving Picard classes, together with diagonal
/// rational units making every transition matrix match.
pub fn is_isomorphic(f: &ParabolicSheaf, g: &ParabolicSheaf) -> Result<bool> {
    if f.chart != g.chart {
        return Err(Error::ChartMismatch("sheaves live on different charts".into()));
    }
    let g = f.aligned_to(g)?;
    let n = f.classes.len();
    for c in 0..n {
        if f.classes[c].summands.len() > SUMMAND_CAP {
            return Err(Error::CapExceeded(format!(
                "class {c} has more than {SUMMAND_CAP} summands"
            )));
        }
        let mut a = f.classes[c].summands.clone();
        let mut b = g.classes[c].summands.clone();
        a.sort();
        b.sort();
        if a != b {
            return Ok(false);
        }
    }

    // Backtracking over class-by-class bijections, then unit propagation.
    fn compatible(
        f: &ParabolicSheaf,
        g: &ParabolicSheaf,
        perms: &[Option<Vec<usize>>],
        c: usize,
    ) -> bool {
        // Check every matrix whose endpoints are both assigned and touch c.
        for src in 0..f.classes.len() {
            for gen in 0..f.gen_count() {
                let Ok((tgt, _)) = f.target(src, gen) else { return false };
                if src != c && tgt != c {
                    continue;
                }
                let (Some(ps), Some(pt)) = (&perms[src], &perms[tgt]) else { continue };
                let fm = &f.transitions[src][gen];
                let gm = &g.transitions[src][gen];
                for row in 0..fm.rows {
                    for col in 0..fm.cols {
                        let fe = fm.at(row, col);
                        let ge = gm.at(pt[row], ps[col]);
                        match (fe.is_zero(), ge.is_zero()) {
                            (true, true) => {}
                            (false, false) => {
                                if ge.proportional_to(fe).is_none() {
                                    return false;
                                }
                            }
                            _ => return false,
                        }
                    }
                }
            }
        }
        true
    }
    fn units_consistent(f: &ParabolicSheaf, g: &ParabolicSheaf, perms: &[Vec<usize>]) -> bool {
        // lambda[(class, f summand)] with g = lambda_tgt * f / lambda_src on
        // entries; propagate ratios across the nonzero entries.
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        for (c, cl) in f.classes.iter().enumerate() {
            for s in 0..cl.summands.len() {
                let next = ids.len();
                ids.insert((c, s), next);
            }
        }
        let mut lambda: Vec<Option<Rat>> = vec![None; ids.len()];
        let mut edges: Vec<Vec<(usize, Rat)>> = vec![Vec::new(); ids.len()];
        for src in 0..f.classes.len() {
            for gen in 0..f.gen_count() {
                let Ok((tgt, _)) = f.target(src, gen) else { return false };
                let fm = &f.transitions[src][gen];
                let gm = &g.transitions[src][gen];
                for row in 0..fm.rows {
                    for col in 0..fm.cols {
                        let fe = fm.at(row, col);
                        if fe.is_zero() {
                            continue;
                        }
                        let ge = gm.at(perms[tgt][row], perms[src][col]);
                        let Some(rho) = ge.proportional_to(fe) else { return false };
                        let a = ids[&(src, col)];
                        let b = ids[&(tgt, row)];
                        // lambda_b = rho * lambda_a.
                        edges[a].push((b, rho.clone()));
                        edges[b].push((a, Rat::one() / rho));
                    }
                }
            }
        }
        for start in 0..lambda.len() {
            if lambda[start].is_some() {
                continue;
            }
            lambda[start] = Some(Rat::one());
            let mut stack = vec![start];
            while let Some(v) = stack.pop() {
                let lv = lambda[v].clone().expect("assigned before push");
                for (w, rho) in edges[v].clone() {
                    let expected = rho * &lv;
                    match &lambda[w] {
                        None => {
                            lambda[w] = Some(expected);
                            stack.push(w);
                        }
                        Some(actual) => {
                            if *actual != expected {
                                return false;
                            }
                        }
                    }
                }
            }
        }
        true
    }
    fn assign(
        f: &ParabolicSheaf,
        g: &ParabolicSheaf,
        perms: &mut Vec<Option<Vec<usize>>>,
        c: usize,
        visits: &mut usize,
    ) -> Result<bool> {
        if c == f.classes.len() {
            let done: Vec<Vec<usize>> =
                perms.iter().map(|p| p.clone().expect("all assigned")).collect();
            return Ok(units_consistent(f, g, &done));
        }
        let fs = &f.classes[c].summands;
        let gs = &g.classes[c].summands;
        let mut perm = vec![usize::MAX; fs.len()];
        let mut used = vec![false; fs.len()];
        fn build(
            f: &ParabolicSheaf,
            g: &ParabolicSheaf,
            perms: &mut Vec<Option<Vec<usize>>>,
            c: usize,
            fs: &[PicClass],
            gs: &[PicClass],
            perm: &mut Vec<usize>,
            used: &mut Vec<bool>,
            pos: usize,
            visits: &mut usize,
        ) -> Result<bool> {
            *visits += 1;
            if *visits > 5_000_000 {
                return Err(Error::CapExceeded("isomorphism search".into()));
            }
            if pos == fs.len() {
                perms[c] = Some(perm.clone());
                if compatible(f, g, perms, c)
                    && assign(f, g, perms, c + 1, visits)?
                {
                    return Ok(true);
                }
                perms[c] = None;
                return Ok(false);
            }
            for j in 0..gs.len() {
                if used[j] || gs[j] != fs[pos] {
                    continue;
                }
                used[j] = true;
                perm[pos] = j;
                if build(f, g, perms, c, fs, gs, perm, used, pos + 1, visits)? {
                    return Ok(true);
                }
                used[j] = false;
            }
            Ok(false)
        }
        build(f, g, perms, c, fs, gs, &mut perm, &mut used, 0, visits)
    }
    let mut visits = 0usize;
    assign(f, &g, &mut vec![None; n], 0, &mut visits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseGeometry;
    use crate::monoid::KummerExtension;

    pub fn free_chart(
        r: usize,
        n: i64,
        base: BaseGeometry,
        pic_map: Vec<IVec>,
        flags: &BTreeSet<usize>,
    ) -> Chart {
        let p = MonoidPresentation::free(r);
        let q: Vec<QVec> = (0..r)
            .map(|i| (0..r).map(|j| if i == j { ratio(1, n) } else { rat(0) }).collect())
            .collect();
        let kummer = KummerExtension::new(p, q).unwrap();
        Chart::new(kummer, base, pic_map, flags).unwrap()
    }

    #[test]
    fn trivial_parabolic_is_valid_and_injective() {
        let chart = free_chart(
            2,
            2,
            BaseGeometry::P1xP1,
            vec![vec![1, 1], vec![0, 0]],
            &BTreeSet::new(),
        );
        let f = trivial_parabolic(&chart, &[vec![2, 0]]).unwrap();
        assert_eq!(f.classes.len(), 4);
        assert!(f.validate().is_empty());
        assert!(f.check_injectivity());
        // Piece at 0 is the bundle itself; piece below the walls drops.
        assert_eq!(
            f.piece(&vec![rat(0), rat(0)]).unwrap(),
            vec![vec![2, 0]]
        );
        assert_eq!(
            f.piece(&vec![ratio(1, 2), rat(0)]).unwrap(),
            vec![vec![3, 0]]
        );
    }

    #[test]
    fn unit_twist_follows_floors() {
        let chart = free_chart(1, 2, BaseGeometry::P1, vec![vec![1]], &BTreeSet::new());
        let f = unit_twist(&chart, &[1]).unwrap();
        assert!(f.validate().is_empty());
        // Pieces: floor(v + 1/2).
        assert_eq!(f.piece(&vec![rat(0)]).unwrap(), vec![vec![0]]);
        assert_eq!(f.piece(&vec![ratio(-1, 2)]).unwrap(), vec![vec![0]]);
        assert_eq!(f.piece(&vec![ratio(-1, 1)]).unwrap(), vec![vec![-1]]);
        assert_eq!(f.piece(&vec![ratio(1, 2)]).unwrap(), vec![vec![1]]);
    }

    #[test]
    fn validation_catches_broken_square() {
        let chart = free_chart(
            2,
            1,
            BaseGeometry::LogPoint,
            vec![],
            &[0usize, 1].into(),
        );
        // Two summands at the single class; direction maps fail to commute.
        let rep = chart.kummer.class_reps[0].clone();
        let classes = vec![WeightClass { rep, summands: vec![vec![], vec![]] }];
        let swap = Mat::from_rows(vec![
            vec![SectionPoly::zero(), SectionPoly::scalar(2, rat(1))],
            vec![SectionPoly::zero(), SectionPoly::zero()],
        ]);
        let fixed = Mat::diagonal(vec![SectionPoly::scalar(2, rat(1)), SectionPoly::zero()]);
        let f = ParabolicSheaf::new(chart, classes, vec![vec![swap, fixed]]).unwrap();
        let diags = f.validate();
        assert!(diags.iter().any(|d| d.contains("does not commute")), "{diags:?}");
    }

    #[test]
    fn periodicity_demands_flagged_zero() {
        let chart = free_chart(1, 2, BaseGeometry::LogPoint, vec![], &[0usize].into());
        // Identity across the wall contradicts the vanishing section.
        let reps = chart.kummer.class_reps.clone();
        let classes: Vec<WeightClass> = reps
            .iter()
            .map(|rep| WeightClass { rep: rep.clone(), summands: vec![vec![]] })
            .collect();
        let id = Mat::identity(1, 1);
        let f = ParabolicSheaf::new(chart, classes, vec![vec![id.clone()], vec![id]]).unwrap();
        let diags = f.validate();
        assert!(
            diags.iter().any(|d| d.contains("pseudo-periodicity")),
            "{diags:?}"
        );
    }

    #[test]
    fn filtration_sheaf_matches_pinned_pieces() {
        // Two trivial summands, jump at 1/2 keeping the first.
        let data = MYData {
            base: BaseGeometry::P1,
            divisor: vec![1],
            level: 2,
            summands: vec![vec![0], vec![0]],
            weights: vec![rat(0), ratio(1, 2)],
            subsets: vec![[0usize, 1].into(), [0usize].into()],
        };
        let f = from_my_filtration(&data).unwrap();
        assert!(f.validate().is_empty());
        assert_eq!(
            f.piece(&vec![ratio(-1, 2)]).unwrap(),
            vec![vec![0], vec![-1]]
        );
        assert_eq!(f.piece(&vec![rat(0)]).unwrap(), vec![vec![0], vec![0]]);
        assert_eq!(
            f.piece(&vec![rat(-1)]).unwrap(),
            vec![vec![-1], vec![-1]]
        );
        // chi: chi(E(-D)) + (1/2) * 1 = 2m + 1/2.
        assert_eq!(data.chi().unwrap().to_string(), "2m + 1/2");
    }

    #[test]
    fn direct_sum_and_iso() {
        let chart = free_chart(1, 2, BaseGeometry::P1, vec![vec![1]], &BTreeSet::new());
        let a = unit_twist(&chart, &[0]).unwrap();
        let b = unit_twist(&chart, &[1]).unwrap();
        let s1 = a.direct_sum(&b).unwrap();
        let s2 = b.direct_sum(&a).unwrap();
        assert!(s1.validate().is_empty());
        assert!(is_isomorphic(&s1, &s2).unwrap());
        assert!(!is_isomorphic(&s1, &a.direct_sum(&a).unwrap()).unwrap());
    }

    #[test]
    fn slice_embedding_is_valid() {
        let chart = free_chart(1, 2, BaseGeometry::LogPoint, vec![], &[0usize].into());
        let f = trivial_parabolic(&chart, &[vec![]]).unwrap();
        let g = embed_slice(&f, 0, 1, 2, vec![]).unwrap();
        assert!(g.validate().is_empty());
        assert_eq!(g.chart.ambient_rank(), 2);
        // Occupied slice at coordinate -1/2 in the new direction.
        let occupied: usize = g
            .classes
            .iter()
            .filter(|c| !c.summands.is_empty())
            .count();
        assert_eq!(occupied, 2);
        for c in &g.classes {
            if !c.summands.is_empty() {
                assert_eq!(c.rep[0], ratio(-1, 2));
            }
        }
    }

    #[test]
    fn hom_multiplies_along_paths() {
        let chart = free_chart(1, 2, BaseGeometry::P1, vec![vec![1]], &BTreeSet::new());
        let f = trivial_parabolic(&chart, &[vec![0]]).unwrap();
        let m = f.hom(&vec![ratio(-1, 2)], &vec![ratio(3, 2)]).unwrap();
        assert_eq!(m.rows, 1);
        let (content, coef) = m.at(0, 0).single_term().unwrap();
        assert_eq!(content, &vec![2]);
        assert!(coef.is_one());
    }

    #[test]
    fn rank_counts_pivots() {
        let x = SectionPoly::monomial(vec![1], rat(1));
        let one = SectionPoly::scalar(1, rat(1));
        let m = Mat::from_rows(vec![
            vec![one.clone(), x.clone()],
            vec![x.clone(), x.mul(&x)],
        ]);
        assert_eq!(m.rank(), 1);
        let id = Mat::identity(3, 1);
        assert_eq!(id.rank(), 3);
        assert_eq!(Mat::zero(2, 3).rank(), 0);
    }
}
