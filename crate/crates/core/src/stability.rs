//! Slope calculus against a generating chart and stability verdicts.
//!
//! A generating chart names the sampling data behind the modified Hilbert
//! polynomial: a Kummer extension whose fundamental weights are pushed through
//! a linear transfer into the weight lattice of the sheaf under test. The
//! standard chart of an extension samples its own fundamental weights; other
//! charts witness that the slope genuinely depends on this choice.
//!
//! Verdicts quantify only over coordinate subsheaves, the subobjects spanned
//! by subsets of the stored summands that are closed under the transition
//! maps. That sublattice is exactly computable, and every [`Verdict`] carries
//! [`LATTICE_FLAG`] to say so. A sheaf reported unstable here is unstable;
//! "stable" means stable against the coordinate lattice.

use crate::base::class_sum;
use crate::chart::Chart;
use crate::error::Error;
use crate::monoid::KummerExtension;
use crate::poly::{poly_compare, HilbertPoly};
use crate::rootops::{classify_slice, pullback, SliceClassification};
use crate::sheaf::ParabolicSheaf;
use crate::{rat, IVec, QVec, Rat, Result};
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

/// Hard bound on the number of summand positions a verdict will consider.
pub const POSITION_CAP: usize = 256;
/// Hard bound on the number of coordinate subsheaves enumerated per scan.
pub const ENUMERATION_CAP: usize = 1_000_000;
/// Hard bound on retained equal-slope witness candidates.
pub const WITNESS_TIE_CAP: usize = 65_536;

/// Scope marker carried by every verdict.
pub const LATTICE_FLAG: &str = "coordinate-lattice verdict";

/// Sampling data for the modified Hilbert polynomial. `transfer[i]` is the
/// image of the `i`-th ambient axis of the source extension, so a source
/// weight `w` samples the sheaf at `sum_i w_i * transfer[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratingChart {
    pub name: String,
    pub source: KummerExtension,
    pub transfer: Vec<QVec>,
}

impl GeneratingChart {
    /// The chart that samples an extension's own fundamental weights.
    pub fn standard(kummer: &KummerExtension) -> Self {
        let r = kummer.p.ambient_rank;
        let transfer = (0..r)
            .map(|i| (0..r).map(|j| rat(i64::from(i == j))).collect())
            .collect();
        Self { name: "standard".into(), source: kummer.clone(), transfer }
    }

    /// Linear image of a source-side weight.
    pub fn apply(&self, v: &QVec) -> QVec {
        debug_assert_eq!(v.len(), self.transfer.len());
        let cols = self.transfer.first().map_or(0, Vec::len);
        let mut out = vec![rat(0); cols];
        for (x, row) in v.iter().zip(&self.transfer) {
            for (o, y) in out.iter_mut().zip(row) {
                *o += x * y;
            }
        }
        out
    }

    /// The transferred fundamental weights, with multiplicity.
    pub fn sampling_weights(&self) -> Vec<QVec> {
        self.source
            .fundamental_weights()
            .into_iter()
            .map(|(_, w)| self.apply(&w))
            .collect()
    }

    /// Checks that this chart can sample sheaves on `chart`: the transfer must
    /// send the source's coarse generators into the coarse weight lattice and
    /// every fundamental weight into the fine one.
    pub fn validate_for(&self, chart: &Chart) -> Result<()> {
        if self.transfer.len() != self.source.p.ambient_rank {
            return Err(Error::Dimension(format!(
                "transfer has {} rows for source ambient rank {}",
                self.transfer.len(),
                self.source.p.ambient_rank
            )));
        }
        let r = chart.ambient_rank();
        for row in &self.transfer {
            if row.len() != r {
                return Err(Error::Dimension(format!(
                    "transfer row {row:?} does not have ambient rank {r}"
                )));
            }
        }
        for p in &self.source.p_indecs {
            let img = self.apply(&crate::to_qvec(p));
            let integral = crate::qvec_to_ivec(&img).filter(|v| chart.kummer.in_p_group(v));
            if integral.is_none() {
                return Err(Error::ChartMismatch(format!(
                    "transfer image {img:?} of coarse generator {p:?} is outside the coarse weight lattice"
                )));
            }
        }
        for (_, w) in self.source.fundamental_weights() {
            let img = self.apply(&w);
            if !chart.kummer.in_q_group(&img) {
                return Err(Error::ChartMismatch(format!(
                    "sampled weight {img:?} is outside the weight lattice"
                )));
            }
        }
        Ok(())
    }
}

/// Sum of the Euler polynomials of the fundamental pieces sampled by `g`.
pub fn modified_hilbert(f: &ParabolicSheaf, g: &GeneratingChart) -> Result<HilbertPoly> {
    g.validate_for(&f.chart)?;
    let mut out = HilbertPoly::zero();
    for w in g.sampling_weights() {
        out = &out + &f.piece_euler(&w)?;
    }
    Ok(out)
}

/// Monic normalization of the modified Hilbert polynomial.
pub fn slope(f: &ParabolicSheaf, g: &GeneratingChart) -> Result<HilbertPoly> {
    modified_hilbert(f, g)?.monic()
}

/// One twist group of the weighted slope mean: the sampled weights sharing a
/// twist vector, the leading-coefficient weight of the group, and the monic
/// normalization of its summed Euler polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightGroup {
    pub twist: IVec,
    pub gamma: Rat,
    pub part: HilbertPoly,
}

/// Decomposes the slope as a convex combination of per-twist monic parts.
/// Groups are keyed by the integral twist from the sampled weight to its
/// class representative and come back in lexicographic twist order; the
/// invariant `sum gamma_i * part_i = slope` holds exactly.
pub fn weighted_mean(f: &ParabolicSheaf, g: &GeneratingChart) -> Result<Vec<WeightGroup>> {
    g.validate_for(&f.chart)?;
    let mut groups: BTreeMap<IVec, HilbertPoly> = BTreeMap::new();
    let mut piece_deg: Option<usize> = None;
    for w in g.sampling_weights() {
        let (_, twist) = f.locate(&w)?;
        let e = f.piece_euler(&w)?;
        if let Some(d) = e.degree() {
            match piece_deg {
                None => piece_deg = Some(d),
                Some(s) if s == d => {}
                Some(s) => {
                    return Err(Error::Dimension(format!(
                        "fundamental pieces of mixed dimension {s} and {d}"
                    )))
                }
            }
        }
        let slot = groups.entry(twist).or_insert_with(HilbertPoly::zero);
        *slot = &*slot + &e;
    }
    let mut total = HilbertPoly::zero();
    for p in groups.values() {
        total = &total + p;
    }
    let deg = total.degree().ok_or(Error::ZeroSlope)?;
    let lead = total.coeff(deg);
    let mut out = Vec::new();
    for (twist, poly) in groups {
        if poly.is_zero() {
            continue;
        }
        out.push(WeightGroup {
            twist,
            gamma: poly.coeff(deg) / lead.clone(),
            part: poly.monic()?,
        });
    }
    Ok(out)
}

/// A transition-closed choice of summands, `picks[c]` listing the retained
/// summand indices of class `c` in ascending order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoordinateSubsheaf {
    pub picks: Vec<Vec<usize>>,
}

impl CoordinateSubsheaf {
    pub fn position_count(&self) -> usize {
        self.picks.iter().map(Vec::len).sum()
    }
}

/// How the verdict compared to the whole sheaf.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictStatus {
    Stable,
    StrictlySemistable,
    Unstable,
}

/// A maximal-slope destabilizing (or slope-tying) coordinate subsheaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub subsheaf: CoordinateSubsheaf,
    pub slope: HilbertPoly,
}

/// Outcome of a stability check. The flag records that only the coordinate
/// sublattice was searched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: VerdictStatus,
    pub witness: Option<Witness>,
    pub lattice_flag: &'static str,
}

/// 256-bit position set.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct Bits([u64; 4]);

impl Bits {
    fn set(&mut self, i: usize) {
        self.0[i >> 6] |= 1u64 << (i & 63);
    }

    fn get(&self, i: usize) -> bool {
        self.0[i >> 6] >> (i & 63) & 1 == 1
    }

    fn or(&self, o: &Bits) -> Bits {
        let mut out = *self;
        for (a, b) in out.0.iter_mut().zip(o.0) {
            *a |= b;
        }
        out
    }

    fn is_superset(&self, o: &Bits) -> bool {
        self.0.iter().zip(o.0).all(|(a, b)| b & !a == 0)
    }

    fn count(&self) -> usize {
        self.0.iter().map(|x| x.count_ones() as usize).sum()
    }
}

/// Flat numbering of the (class, summand) positions of a sheaf.
struct Layout {
    offsets: Vec<usize>,
    sizes: Vec<usize>,
    total: usize,
}

impl Layout {
    fn new(f: &ParabolicSheaf) -> Result<Self> {
        let sizes: Vec<usize> = f.classes.iter().map(|c| c.summands.len()).collect();
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0usize;
        for &s in &sizes {
            offsets.push(total);
            total += s;
        }
        if total > POSITION_CAP {
            return Err(Error::CapExceeded(format!(
                "{total} summand positions exceed the verdict bound {POSITION_CAP}"
            )));
        }
        Ok(Self { offsets, sizes, total })
    }

    fn id(&self, c: usize, j: usize) -> usize {
        self.offsets[c] + j
    }

    fn picks(&self, bits: &Bits) -> Vec<Vec<usize>> {
        self.offsets
            .iter()
            .zip(&self.sizes)
            .map(|(&off, &len)| (0..len).filter(|j| bits.get(off + j)).collect())
            .collect()
    }
}

/// Euler polynomial each position contributes to the modified Hilbert
/// polynomial: the sum, over sampled weights landing in the position's class,
/// of the Euler polynomial of the summand shifted by the sampling twist.
fn contributions(f: &ParabolicSheaf, g: &GeneratingChart, lay: &Layout) -> Result<Vec<HilbertPoly>> {
    let rank = f.chart.base.pic_rank();
    let mut out = vec![HilbertPoly::zero(); lay.total];
    for w in g.sampling_weights() {
        let (c, twist) = f.locate(&w)?;
        let shift = f.chart.pic(&twist);
        for (j, s) in f.classes[c].summands.iter().enumerate() {
            let cls = class_sum(rank, &[s, &shift]);
            let e = f.chart.base.euler_poly(&cls)?;
            let slot = &mut out[lay.id(c, j)];
            *slot = &*slot + &e;
        }
    }
    Ok(out)
}

/// Implication digraph: an edge from a position to every position its image
/// under some transition touches with a nonzero entry. A summand choice is a
/// subsheaf exactly when it is closed under these edges.
fn implication_edges(f: &ParabolicSheaf, lay: &Layout) -> Result<Vec<Vec<usize>>> {
    let mut edges = vec![Vec::new(); lay.total];
    for c in 0..f.classes.len() {
        for g in 0..f.chart.kummer.q_indecs.len() {
            let (tgt, _) = f.target(c, g)?;
            let mat = &f.transitions[c][g];
            for j in 0..mat.cols {
                for i in 0..mat.rows {
                    if !mat.at(i, j).is_zero() {
                        edges[lay.id(c, j)].push(lay.id(tgt, i));
                    }
                }
            }
        }
    }
    Ok(edges)
}

/// Strongly connected components numbered in completion order, so every edge
/// leaves a component with a larger number than its target's.
fn condense(n: usize, edges: &[Vec<usize>]) -> (Vec<usize>, usize) {
    struct St<'a> {
        edges: &'a [Vec<usize>],
        index: Vec<Option<u32>>,
        low: Vec<u32>,
        on: Vec<bool>,
        stack: Vec<usize>,
        next: u32,
        comp: Vec<usize>,
        ncomp: usize,
    }
    fn visit(st: &mut St, v: usize) {
        let idx = st.next;
        st.next += 1;
        st.index[v] = Some(idx);
        st.low[v] = idx;
        st.stack.push(v);
        st.on[v] = true;
        for u in 0..st.edges[v].len() {
            let w = st.edges[v][u];
            match st.index[w] {
                None => {
                    visit(st, w);
                    st.low[v] = st.low[v].min(st.low[w]);
                }
                Some(wi) if st.on[w] => st.low[v] = st.low[v].min(wi),
                _ => {}
            }
        }
        if st.low[v] == idx {
            loop {
                let w = st.stack.pop().expect("scc stack underflow");
                st.on[w] = false;
                st.comp[w] = st.ncomp;
                if w == v {
                    break;
                }
            }
            st.ncomp += 1;
        }
    }
    let mut st = St {
        edges,
        index: vec![None; n],
        low: vec![0; n],
        on: vec![false; n],
        stack: Vec::new(),
        next: 0,
        comp: vec![0; n],
        ncomp: 0,
    };
    for v in 0..n {
        if st.index[v].is_none() {
            visit(&mut st, v);
        }
    }
    (st.comp, st.ncomp)
}

/// Enumerates the closed position sets of a sheaf, visiting each exactly once
/// (the empty and full sets included) together with its summed contribution.
struct LatticeScan {
    members: Vec<Bits>,
    comp_poly: Vec<HilbertPoly>,
    succ: Vec<Vec<usize>>,
    leaves: usize,
}

impl LatticeScan {
    fn new(lay: &Layout, contrib: &[HilbertPoly], edges: &[Vec<usize>]) -> Self {
        let (comp, ncomp) = condense(lay.total, edges);
        let mut members = vec![Bits::default(); ncomp];
        let mut comp_poly = vec![HilbertPoly::zero(); ncomp];
        for p in 0..lay.total {
            members[comp[p]].set(p);
            comp_poly[comp[p]] = &comp_poly[comp[p]] + &contrib[p];
        }
        let mut succ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); ncomp];
        for (p, outs) in edges.iter().enumerate() {
            for &q in outs {
                if comp[p] != comp[q] {
                    debug_assert!(comp[q] < comp[p], "completion order broken");
                    succ[comp[p]].insert(comp[q]);
                }
            }
        }
        let succ = succ.into_iter().map(|s| s.into_iter().collect()).collect();
        Self { members, comp_poly, succ, leaves: 0 }
    }

    fn run(
        &mut self,
        visit: &mut dyn FnMut(&Bits, &HilbertPoly) -> Result<()>,
    ) -> Result<()> {
        let ncomp = self.members.len();
        let mut decided = vec![false; ncomp];
        self.dfs(0, &mut decided, Bits::default(), &HilbertPoly::zero(), visit)
    }

    fn dfs(
        &mut self,
        k: usize,
        decided: &mut Vec<bool>,
        bits: Bits,
        sum: &HilbertPoly,
        visit: &mut dyn FnMut(&Bits, &HilbertPoly) -> Result<()>,
    ) -> Result<()> {
        if k == self.members.len() {
            self.leaves += 1;
            if self.leaves > ENUMERATION_CAP {
                return Err(Error::CapExceeded(format!(
                    "more than {ENUMERATION_CAP} coordinate subsheaves"
                )));
            }
            return visit(&bits, sum);
        }
        decided[k] = false;
        self.dfs(k + 1, decided, bits, sum, visit)?;
        // Including a component is legal once everything it maps into is in.
        if self.succ[k].iter().all(|&s| decided[s]) {
            decided[k] = true;
            let wider = bits.or(&self.members[k]);
            let bigger = sum + &self.comp_poly[k];
            self.dfs(k + 1, decided, wider, &bigger, visit)?;
            decided[k] = false;
        }
        Ok(())
    }
}

/// All coordinate subsheaves of `f`, the zero and full selections included,
/// in the deterministic scan order.
pub fn coordinate_subsheaves(f: &ParabolicSheaf) -> Result<Vec<CoordinateSubsheaf>> {
    let lay = Layout::new(f)?;
    let contrib = vec![HilbertPoly::zero(); lay.total];
    let edges = implication_edges(f, &lay)?;
    let mut scan = LatticeScan::new(&lay, &contrib, &edges);
    let mut out = Vec::new();
    scan.run(&mut |bits, _| {
        out.push(CoordinateSubsheaf { picks: lay.picks(bits) });
        Ok(())
    })?;
    Ok(out)
}

/// Compares monic normalizations in the dominance order without allocating
/// them when both leading coefficients are positive.
fn slope_cmp(a: &HilbertPoly, b: &HilbertPoly) -> Result<Ordering> {
    let da = a.degree().ok_or(Error::ZeroSlope)?;
    let db = b.degree().ok_or(Error::ZeroSlope)?;
    if da != db {
        return Ok(da.cmp(&db));
    }
    let la = a.coeff(da);
    let lb = b.coeff(db);
    let zero = rat(0);
    if la > zero && lb > zero {
        for i in (0..da).rev() {
            match (a.coeff(i) * &lb).cmp(&(b.coeff(i) * &la)) {
                Ordering::Equal => {}
                o => return Ok(o),
            }
        }
        Ok(Ordering::Equal)
    } else {
        Ok(poly_compare(&a.monic()?, &b.monic()?))
    }
}

/// Keeps an enumeration-ordered antichain of maximal candidates.
fn keep_maximal(keep: &mut Vec<Bits>, bits: &Bits) -> Result<()> {
    if keep.iter().any(|k| k.is_superset(bits)) {
        return Ok(());
    }
    keep.retain(|k| !bits.is_superset(k));
    keep.push(*bits);
    if keep.len() > WITNESS_TIE_CAP {
        return Err(Error::CapExceeded(format!(
            "more than {WITNESS_TIE_CAP} equal-slope witness candidates"
        )));
    }
    Ok(())
}

/// Keeps an enumeration-ordered antichain of minimal candidates.
fn keep_minimal(keep: &mut Vec<Bits>, bits: &Bits) -> Result<()> {
    if keep.iter().any(|k| bits.is_superset(k)) {
        return Ok(());
    }
    keep.retain(|k| !k.is_superset(bits));
    keep.push(*bits);
    if keep.len() > WITNESS_TIE_CAP {
        return Err(Error::CapExceeded(format!(
            "more than {WITNESS_TIE_CAP} equal-slope witness candidates"
        )));
    }
    Ok(())
}

/// Maximal-slope search over nonzero closed position sets with a nonzero
/// contribution. Ties are resolved to the inclusion-maximal candidates, and
/// among those the first in scan order wins. `allow_full` admits the full
/// selection as a candidate.
fn best_closed(
    lay: &Layout,
    contrib: &[HilbertPoly],
    edges: &[Vec<usize>],
    allow_full: bool,
) -> Result<Option<(Bits, HilbertPoly)>> {
    let mut scan = LatticeScan::new(lay, contrib, edges);
    let mut best: Option<HilbertPoly> = None;
    let mut keep: Vec<Bits> = Vec::new();
    scan.run(&mut |bits, sum| {
        let k = bits.count();
        if k == 0 || (!allow_full && k == lay.total) || sum.is_zero() {
            return Ok(());
        }
        match &best {
            None => {
                best = Some(sum.clone());
                keep = vec![*bits];
            }
            Some(b) => match slope_cmp(sum, b)? {
                Ordering::Greater => {
                    best = Some(sum.clone());
                    keep = vec![*bits];
                }
                Ordering::Equal => keep_maximal(&mut keep, bits)?,
                Ordering::Less => {}
            },
        }
        Ok(())
    })?;
    Ok(best.map(|b| (keep[0], b)))
}

/// Smallest nonzero closed position set whose slope is exactly `target`
/// (a monic polynomial), if any; ties go to the first in scan order.
fn minimal_with_slope(
    lay: &Layout,
    contrib: &[HilbertPoly],
    edges: &[Vec<usize>],
    target: &HilbertPoly,
) -> Result<Option<Bits>> {
    let mut scan = LatticeScan::new(lay, contrib, edges);
    let mut keep: Vec<Bits> = Vec::new();
    scan.run(&mut |bits, sum| {
        if bits.count() == 0 || sum.is_zero() {
            return Ok(());
        }
        if slope_cmp(sum, target)? != Ordering::Equal {
            return Ok(());
        }
        keep_minimal(&mut keep, bits)
    })?;
    Ok(keep.first().copied())
}

/// Reachability closure of a single position.
fn closure_size(edges: &[Vec<usize>], start: usize, n: usize) -> usize {
    let mut seen = vec![false; n];
    let mut queue = vec![start];
    seen[start] = true;
    let mut count = 1;
    while let Some(v) = queue.pop() {
        for &w in &edges[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push(w);
            }
        }
    }
    count
}

/// Compares every proper nonzero coordinate subsheaf's slope to the sheaf's.
/// A strictly greater witness makes the sheaf unstable, an exact tie makes it
/// strictly semistable, otherwise it is stable against the coordinate
/// lattice. Sheaves with zero modified Hilbert polynomial have no slope.
pub fn verdict(f: &ParabolicSheaf, g: &GeneratingChart) -> Result<Verdict> {
    g.validate_for(&f.chart)?;
    let lay = Layout::new(f)?;
    let contrib = contributions(f, g, &lay)?;
    let mut total = HilbertPoly::zero();
    for p in &contrib {
        total = &total + p;
    }
    let slope_f = total.monic()?;
    let edges = implication_edges(f, &lay)?;
    // When every position ties with the sheaf, stability reduces to lattice
    // connectivity: any proper closure would itself tie.
    let all_tie = contrib
        .iter()
        .map(|p| Ok(!p.is_zero() && slope_cmp(p, &total)? == Ordering::Equal))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|x| x);
    if all_tie && (0..lay.total).all(|p| closure_size(&edges, p, lay.total) == lay.total) {
        return Ok(Verdict { status: VerdictStatus::Stable, witness: None, lattice_flag: LATTICE_FLAG });
    }
    match best_closed(&lay, &contrib, &edges, false)? {
        None => Ok(Verdict { status: VerdictStatus::Stable, witness: None, lattice_flag: LATTICE_FLAG }),
        Some((bits, sum)) => {
            let ws = sum.monic()?;
            let status = match poly_compare(&ws, &slope_f) {
                Ordering::Greater => VerdictStatus::Unstable,
                Ordering::Equal => VerdictStatus::StrictlySemistable,
                Ordering::Less => VerdictStatus::Stable,
            };
            let witness = if status == VerdictStatus::Stable {
                None
            } else {
                Some(Witness {
                    subsheaf: CoordinateSubsheaf { picks: lay.picks(&bits) },
                    slope: ws,
                })
            };
            Ok(Verdict { status, witness, lattice_flag: LATTICE_FLAG })
        }
    }
}

/// One step of the slope filtration: the cumulative subsheaf reached so far
/// and the slope of the graded factor this step added.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HnStep {
    pub subsheaf: CoordinateSubsheaf,
    pub slope: HilbertPoly,
}

fn selection_full(f: &ParabolicSheaf, sel: &[Vec<usize>]) -> bool {
    sel.iter().zip(&f.classes).all(|(s, c)| s.len() == c.summands.len())
}

/// Maps picks of a quotient back through the complement indexing of `sel`.
fn fold_selection(f: &ParabolicSheaf, sel: &mut [Vec<usize>], picks: &[Vec<usize>]) {
    for c in 0..sel.len() {
        let complement: Vec<usize> = (0..f.classes[c].summands.len())
            .filter(|i| !sel[c].contains(i))
            .collect();
        for &j in &picks[c] {
            sel[c].push(complement[j]);
        }
        sel[c].sort_unstable();
    }
}

/// Slope filtration over the coordinate lattice: repeatedly extracts the
/// maximal-slope coordinate subsheaf of the remaining quotient. Factor slopes
/// strictly decrease and the last step is the full selection.
pub fn hn_filtration(f: &ParabolicSheaf, g: &GeneratingChart) -> Result<Vec<HnStep>> {
    g.validate_for(&f.chart)?;
    let mut sel: Vec<Vec<usize>> = vec![Vec::new(); f.classes.len()];
    let mut steps = Vec::new();
    while !selection_full(f, &sel) {
        let q = f.quotient(&sel)?;
        let lay = Layout::new(&q)?;
        let contrib = contributions(&q, g, &lay)?;
        let edges = implication_edges(&q, &lay)?;
        let (bits, sum) =
            best_closed(&lay, &contrib, &edges, true)?.ok_or(Error::ZeroSlope)?;
        fold_selection(f, &mut sel, &lay.picks(&bits));
        steps.push(HnStep {
            subsheaf: CoordinateSubsheaf { picks: sel.clone() },
            slope: sum.monic()?,
        });
    }
    Ok(steps)
}

/// Graded factors of a finest equal-slope filtration: repeatedly extracts an
/// inclusion-minimal coordinate subsheaf of the quotient with the sheaf's
/// slope. Minimality makes each factor stable against the coordinate lattice.
/// Unstable input is refused.
pub fn jh_factors(f: &ParabolicSheaf, g: &GeneratingChart) -> Result<Vec<ParabolicSheaf>> {
    let v = verdict(f, g)?;
    if v.status == VerdictStatus::Unstable {
        return Err(Error::Unsupported(
            "graded factors need a semistable sheaf".into(),
        ));
    }
    let slope_f = slope(f, g)?;
    let mut sel: Vec<Vec<usize>> = vec![Vec::new(); f.classes.len()];
    let mut factors = Vec::new();
    while !selection_full(f, &sel) {
        let q = f.quotient(&sel)?;
        let lay = Layout::new(&q)?;
        let contrib = contributions(&q, g, &lay)?;
        let edges = implication_edges(&q, &lay)?;
        let bits = minimal_with_slope(&lay, &contrib, &edges, &slope_f)?
            .ok_or_else(|| {
                Error::Unsupported("quotient lost the slope: no equal-slope factor".into())
            })?;
        let picks = lay.picks(&bits);
        factors.push(q.restrict(&picks)?);
        fold_selection(f, &mut sel, &picks);
    }
    Ok(factors)
}

/// Direct sum of the graded factors.
pub fn jh_graded(f: &ParabolicSheaf, g: &GeneratingChart) -> Result<ParabolicSheaf> {
    let factors = jh_factors(f, g)?;
    let mut it = factors.into_iter();
    let mut out = it.next().expect("a nonzero sheaf has at least one factor");
    for next in it {
        out = out.direct_sum(&next)?;
    }
    Ok(out)
}

/// Two semistable sheaves are S-equivalent when their graded factor sums are
/// isomorphic.
pub fn s_equivalent(
    f: &ParabolicSheaf,
    h: &ParabolicSheaf,
    g: &GeneratingChart,
) -> Result<bool> {
    crate::sheaf::is_isomorphic(&jh_graded(f, g)?, &jh_graded(h, g)?)
}

/// For a stable sheaf whose pullback along a free tower is no longer stable,
/// identifies the slice structure responsible. `None` means the pullback
/// stayed stable. A pullback that loses stability without detectable slice
/// structure is refused rather than guessed at.
pub fn classify_nonstable_pullback(
    f: &ParabolicSheaf,
    big: &Chart,
) -> Result<Option<SliceClassification>> {
    let g_small = GeneratingChart::standard(&f.chart.kummer);
    let v = verdict(f, &g_small)?;
    if v.status != VerdictStatus::Stable {
        return Err(Error::Unsupported(
            "pullback classification needs a stable sheaf".into(),
        ));
    }
    let up = pullback(f, big)?;
    let g_big = GeneratingChart::standard(&big.kummer);
    if verdict(&up, &g_big)?.status == VerdictStatus::Stable {
        return Ok(None);
    }
    match classify_slice(f)? {
        Some(s) => Ok(Some(s)),
        None => Err(Error::Unsupported(
            "pullback lost stability without slice structure".into(),
        )),
    }
}

/// Checks the index bookkeeping behind composing generating sheaves along a
/// tower: per axis, `{1..m}` must agree as a multiset with
/// `{k*b + c - k : 1 <= b <= n, 1 <= c <= k}` where `k = m/n`, and the
/// `r`-fold products must then agree as well.
pub fn index_decomposition_check(n: i64, m: i64, r: usize) -> Result<bool> {
    if n < 1 || m < 1 || m % n != 0 {
        return Err(Error::Schema(format!("levels {n} and {m} do not form a tower")));
    }
    let k = m / n;
    let direct: Vec<i64> = (1..=m).collect();
    let mut relative: Vec<i64> = (1..=n)
        .flat_map(|b| (1..=k).map(move |c| k * b + c - k))
        .collect();
    relative.sort_unstable();
    if relative != direct {
        return Ok(false);
    }
    let tuples = (m as u128).checked_pow(r as u32).unwrap_or(u128::MAX);
    if tuples > ENUMERATION_CAP as u128 {
        return Err(Error::CapExceeded(format!(
            "{m}^{r} index tuples exceed the enumeration bound"
        )));
    }
    let product = |axis: &[i64]| -> Vec<IVec> {
        let mut out: Vec<IVec> = vec![Vec::new()];
        for _ in 0..r {
            out = out
                .into_iter()
                .flat_map(|t| {
                    axis.iter().map(move |&a| {
                        let mut s = t.clone();
                        s.push(a);
                        s
                    })
                })
                .collect();
        }
        out.sort();
        out
    };
    Ok(product(&direct) == product(&relative))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::BaseGeometry;
    use crate::fixtures::{
        dependence_chart, dependence_sheaf as twisted_unit, log_point_pair,
        relation_curve_pullback as non_simplicial_pullback, relation_sampling_chart,
        tower_chart,
    };
    use crate::poly::HilbertPoly;
    use crate::sheaf::{is_isomorphic, level_one, trivial_parabolic, unit_twist};
    use crate::ratio;
    use std::collections::BTreeSet;

    fn poly(coeffs: &[Rat]) -> HilbertPoly {
        HilbertPoly::new(coeffs.to_vec())
    }

    #[test]
    fn slope_depends_on_the_sampling_chart() {
        let g_std = GeneratingChart::standard(&dependence_chart().kummer);
        let g_rel = relation_sampling_chart();
        let a = twisted_unit(&[2, 0]);
        let b = twisted_unit(&[1, 1]);

        let same = poly(&[rat(2), rat(3), rat(1)]);
        assert_eq!(modified_hilbert(&a, &g_std).unwrap(), poly(&[rat(8), rat(12), rat(4)]));
        assert_eq!(slope(&a, &g_std).unwrap(), same);
        assert_eq!(slope(&b, &g_std).unwrap(), same);

        assert_eq!(
            modified_hilbert(&a, &g_rel).unwrap(),
            poly(&[rat(8), rat(24), rat(16)])
        );
        assert_eq!(slope(&a, &g_rel).unwrap(), poly(&[ratio(1, 2), ratio(3, 2), rat(1)]));
        assert_eq!(
            modified_hilbert(&b, &g_rel).unwrap(),
            poly(&[rat(-16), rat(24), rat(16)])
        );
        assert_eq!(slope(&b, &g_rel).unwrap(), poly(&[rat(-1), ratio(3, 2), rat(1)]));
    }

    #[test]
    fn weighted_mean_recovers_the_slope() {
        let g_rel = relation_sampling_chart();
        let a = twisted_unit(&[2, 0]);
        let groups = weighted_mean(&a, &g_rel).unwrap();
        let gammas: Vec<Rat> = groups.iter().map(|g| g.gamma.clone()).collect();
        let twists: Vec<IVec> = groups.iter().map(|g| g.twist.clone()).collect();
        assert_eq!(
            twists,
            vec![vec![-2, -2], vec![-2, -1], vec![-1, -2], vec![-1, -1]]
        );
        assert_eq!(gammas, vec![ratio(1, 8), ratio(1, 8), ratio(1, 8), ratio(5, 8)]);
        let mut mean = HilbertPoly::zero();
        for g in &groups {
            mean = &mean + &g.part.scale(&g.gamma);
        }
        assert_eq!(mean, slope(&a, &g_rel).unwrap());
        assert_eq!(gammas.iter().sum::<Rat>(), rat(1));

        // The standard chart on a trivial sheaf splits into four equal groups.
        let chart = dependence_chart();
        let t = trivial_parabolic(&chart, &[vec![0, 0]]).unwrap();
        let g_std = GeneratingChart::standard(&chart.kummer);
        let groups = weighted_mean(&t, &g_std).unwrap();
        assert_eq!(groups.len(), 4);
        for g in &groups {
            assert_eq!(g.gamma, ratio(1, 4));
        }
    }

    #[test]
    fn non_simplicial_pullback_is_unstable() {
        let d = 5i64;
        let f = non_simplicial_pullback(d);
        let g = GeneratingChart::standard(&f.chart.kummer);

        assert_eq!(
            modified_hilbert(&f, &g).unwrap(),
            poly(&[rat(12 * d - 34), rat(12)])
        );
        assert_eq!(slope(&f, &g).unwrap(), poly(&[rat(d) - ratio(17, 6), rat(1)]));

        let all = coordinate_subsheaves(&f).unwrap();
        assert_eq!(all.len(), 14);
        assert_eq!(all[0].position_count(), 0);
        assert_eq!(all.last().unwrap().position_count(), 6);

        let v = verdict(&f, &g).unwrap();
        assert_eq!(v.status, VerdictStatus::Unstable);
        assert_eq!(v.lattice_flag, LATTICE_FLAG);
        let w = v.witness.unwrap();
        assert_eq!(w.slope, poly(&[rat(d) - ratio(5, 2), rat(1)]));
        // One summand from each of the outer classes: the degree d-2 copy at
        // (-1/2,-3/2) and the degree d-1 copy at (0,-1).
        let a_idx = f.classes[0].summands.iter().position(|s| s[0] == d - 2).unwrap();
        let b_idx = f.classes[2].summands.iter().position(|s| s[0] == d - 1).unwrap();
        assert_eq!(
            w.subsheaf.picks,
            vec![vec![a_idx], vec![], vec![b_idx], vec![]]
        );
    }

    #[test]
    fn log_point_verdicts() {
        // Level one with the structure section flagged to zero: one position,
        // no proper subobject, stable.
        let (f1, f2) = log_point_pair();
        let g1 = GeneratingChart::standard(&f1.chart.kummer);
        let v1 = verdict(&f1, &g1).unwrap();
        assert_eq!(v1.status, VerdictStatus::Stable);
        assert!(v1.witness.is_none());

        // Its level-two pullback gains the proper closed slice at -1/2 and
        // becomes strictly semistable with that slice as witness.
        let g2 = GeneratingChart::standard(&f2.chart.kummer);
        assert_eq!(modified_hilbert(&f2, &g2).unwrap(), poly(&[rat(2)]));
        let v2 = verdict(&f2, &g2).unwrap();
        assert_eq!(v2.status, VerdictStatus::StrictlySemistable);
        let w = v2.witness.unwrap();
        assert_eq!(w.slope, poly(&[rat(1)]));
        let half = f2
            .classes
            .iter()
            .position(|c| c.rep == vec![ratio(-1, 2)])
            .unwrap();
        let mut expect = vec![vec![], vec![]];
        expect[half] = vec![0];
        assert_eq!(w.subsheaf.picks, expect);

        // Its graded factors are the two slices, deepest first.
        let factors = jh_factors(&f2, &g2).unwrap();
        assert_eq!(factors.len(), 2);
        let dims = |f: &ParabolicSheaf| -> Vec<usize> {
            f.classes.iter().map(|c| c.summands.len()).collect()
        };
        let mut first = vec![0, 0];
        first[half] = 1;
        let mut second = vec![0, 0];
        second[1 - half] = 1;
        assert_eq!(dims(&factors[0]), first);
        assert_eq!(dims(&factors[1]), second);

        // The pullback does not split, so it only meets its graded sum up to
        // S-equivalence, not isomorphism.
        let graded = jh_graded(&f2, &g2).unwrap();
        assert!(!is_isomorphic(&graded, &f2).unwrap());
        assert!(s_equivalent(&graded, &f2, &g2).unwrap());
    }

    #[test]
    fn line_parabolics_are_stable() {
        let chart = tower_chart(1, 3, BaseGeometry::P1, vec![vec![1]], &BTreeSet::new());
        let f = unit_twist(&chart, &[2]).unwrap().tensor_line(&vec![4]);
        let g = GeneratingChart::standard(&chart.kummer);
        let v = verdict(&f, &g).unwrap();
        assert_eq!(v.status, VerdictStatus::Stable);
        assert!(v.witness.is_none());
        // A single chained component: only the trivial closed selections.
        assert_eq!(coordinate_subsheaves(&f).unwrap().len(), 2);
    }

    #[test]
    fn filtration_splits_a_mixed_sum() {
        let chart = tower_chart(1, 1, BaseGeometry::P1, vec![vec![1]], &BTreeSet::new());
        let high = level_one(&chart, &[vec![5]]).unwrap();
        let low = level_one(&chart, &[vec![2]]).unwrap();
        let f = high.direct_sum(&low).unwrap();
        let g = GeneratingChart::standard(&chart.kummer);

        let v = verdict(&f, &g).unwrap();
        assert_eq!(v.status, VerdictStatus::Unstable);
        let w = v.witness.unwrap();
        assert_eq!(w.subsheaf.picks, vec![vec![0]]);
        assert_eq!(w.slope, poly(&[rat(5), rat(1)]));

        let steps = hn_filtration(&f, &g).unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0].subsheaf.picks, vec![vec![0]]);
        assert_eq!(steps[0].slope, poly(&[rat(5), rat(1)]));
        assert_eq!(steps[1].subsheaf.picks, vec![vec![0, 1]]);
        assert_eq!(steps[1].slope, poly(&[rat(2), rat(1)]));

        // A semistable sheaf filters trivially.
        let even = high.direct_sum(&high).unwrap();
        let steps = hn_filtration(&even, &g).unwrap();
        assert_eq!(steps.len(), 1);
        assert_eq!(steps[0].subsheaf.picks, vec![vec![0, 1]]);
        assert_eq!(verdict(&even, &g).unwrap().status, VerdictStatus::StrictlySemistable);
        assert!(s_equivalent(&even, &even, &g).unwrap());
    }

    #[test]
    fn pullback_scales_by_summand_index_count() {
        // Rank one, level 1 to 2: each fundamental weight is hit k^r = 2
        // times, so the modified Hilbert polynomial doubles and the slope
        // survives unchanged.
        let small = tower_chart(1, 1, BaseGeometry::P1, vec![vec![1]], &BTreeSet::new());
        let big = tower_chart(1, 2, BaseGeometry::P1, vec![vec![1]], &BTreeSet::new());
        let f = level_one(&small, &[vec![3], vec![1]]).unwrap();
        let up = pullback(&f, &big).unwrap();
        let gs = GeneratingChart::standard(&small.kummer);
        let gb = GeneratingChart::standard(&big.kummer);
        let mh = modified_hilbert(&f, &gs).unwrap();
        assert_eq!(modified_hilbert(&up, &gb).unwrap(), mh.scale(&rat(2)));
        assert_eq!(slope(&f, &gs).unwrap(), slope(&up, &gb).unwrap());
        assert_eq!(
            verdict(&f, &gs).unwrap().status,
            verdict(&up, &gb).unwrap().status
        );

        // Rank two doubles twice.
        let small2 = tower_chart(2, 1, BaseGeometry::P1, vec![vec![1, 1]], &BTreeSet::new());
        let big2 = tower_chart(2, 2, BaseGeometry::P1, vec![vec![1, 1]], &BTreeSet::new());
        let f2 = level_one(&small2, &[vec![2]]).unwrap();
        let up2 = pullback(&f2, &big2).unwrap();
        let gs2 = GeneratingChart::standard(&small2.kummer);
        let gb2 = GeneratingChart::standard(&big2.kummer);
        assert_eq!(
            modified_hilbert(&up2, &gb2).unwrap(),
            modified_hilbert(&f2, &gs2).unwrap().scale(&rat(4))
        );
    }

    #[test]
    fn slice_pullback_classification() {
        // A stable line at level one pulls back to a chain of slices; the
        // classifier refuses it only if no slice is found, and here the
        // sheaf is its own slice certificate after pulling back.
        let c1 = tower_chart(1, 1, BaseGeometry::LogPoint, vec![], &[0usize].into());
        let f1 = level_one(&c1, &[vec![]]).unwrap();
        let c2 = tower_chart(1, 2, BaseGeometry::LogPoint, vec![], &[0usize].into());
        let found = classify_nonstable_pullback(&f1, &c2).unwrap();
        // Level-one input has no flagged slice direction of its own, but its
        // pullback is strictly semistable, not unstable-stable; the verdict
        // transition is what the classifier reports on.
        assert!(found.is_none() || found.unwrap().verified);
    }

    #[test]
    fn index_identity_for_towers() {
        for n in 1..=6i64 {
            for t in 1..=3i64 {
                let m = n * t;
                assert!(index_decomposition_check(n, m, 1).unwrap());
                assert!(index_decomposition_check(n, m, 2).unwrap());
            }
        }
        assert!(index_decomposition_check(2, 3, 1).is_err());
    }

    #[test]
    fn sampling_chart_validation_catches_mismatches() {
        let chart = dependence_chart();
        let mut g = relation_sampling_chart();
        assert!(g.validate_for(&chart).is_ok());
        // Forcing a transfer image off the half-integer lattice must fail.
        g.transfer[2] = vec![ratio(1, 3), rat(0)];
        assert!(matches!(
            g.validate_for(&chart),
            Err(Error::ChartMismatch(_))
        ));
    }
}
