//! Worked fixtures shared by the command-line reproductions, the acceptance
//! suite, and unit tests. Keeping them in one place pins each construction
//! to a single definition; the expected numbers live with their consumers.

use crate::base::BaseGeometry;
use crate::chart::Chart;
use crate::monoid::{KummerExtension, MonoidPresentation};
use crate::rootops::pullback;
use crate::sheaf::{level_one, unit_twist, MYData, ParabolicSheaf};
use crate::stability::GeneratingChart;
use crate::{rat, ratio, to_qvec, IVec, QVec};
use std::collections::BTreeSet;

/// Free tower chart: rank `r` with every axis at level `n`.
pub fn tower_chart(
    r: usize,
    n: i64,
    base: BaseGeometry,
    pic_map: Vec<IVec>,
    flags: &BTreeSet<usize>,
) -> Chart {
    let p = MonoidPresentation::free(r);
    let q: Vec<QVec> = (0..r)
        .map(|i| (0..r).map(|j| ratio(i64::from(i == j), n)).collect())
        .collect();
    let kummer = KummerExtension::new(p, q).expect("free tower data is Kummer");
    Chart::new(kummer, base, pic_map, flags).expect("fixture chart is valid")
}

/// Free rank-two level-two chart over the quadric surface with both divisor
/// directions realized as (1,0).
pub fn dependence_chart() -> Chart {
    tower_chart(2, 2, BaseGeometry::P1xP1, vec![vec![1, 1], vec![0, 0]], &BTreeSet::new())
}

/// One of the two sheaves of the slope-dependence pair: the unit twist by
/// (1,1) on [`dependence_chart`], tensored with the line of class `f0`.
pub fn dependence_sheaf(f0: &[i64]) -> ParabolicSheaf {
    let chart = dependence_chart();
    unit_twist(&chart, &[1, 1]).expect("twist in range").tensor_line(&f0.to_vec())
}

/// The alternative sampling chart of the dependence example: the square-cone
/// relation monoid embedded in rank three, halved, transferred onto the
/// sheaf lattice by dropping the last coordinate.
pub fn relation_sampling_chart() -> GeneratingChart {
    let gens = vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 1], vec![0, 0, 1]];
    let p = MonoidPresentation::new(3, gens.clone()).expect("square cone is sharp");
    let halves: Vec<QVec> =
        gens.iter().map(|g| g.iter().map(|&x| ratio(x, 2)).collect()).collect();
    let source = KummerExtension::new(p, halves).expect("halving is Kummer");
    let transfer = vec![
        vec![rat(1), rat(0)],
        vec![rat(0), rat(1)],
        vec![rat(0), rat(0)],
    ];
    GeneratingChart { name: "relation".into(), source, transfer }
}

/// Chart of the non-simplicial relation monoid `<p, q, r | p + q = 2r>` on a
/// genus-one curve with unit polarization; all three sections flagged to
/// zero and Picard degrees (0, 2, 1) on the generators.
pub fn relation_curve_chart() -> Chart {
    let p = MonoidPresentation::new(2, vec![vec![2, 0], vec![1, 1], vec![0, 2]])
        .expect("relation cone is sharp");
    let k = KummerExtension::new(
        p,
        vec![to_qvec(&[2, 0]), to_qvec(&[1, 1]), to_qvec(&[0, 2])],
    )
    .expect("identity extension is Kummer");
    let base = BaseGeometry::Curve { genus: 1, polarization_degree: 1 };
    let flags: BTreeSet<usize> = [0usize, 1, 2].into();
    Chart::new(k, base, vec![vec![0, 1]], &flags).expect("fixture chart is valid")
}

/// Level-one line of degree `d` on [`relation_curve_chart`].
pub fn relation_curve_line(d: i64) -> ParabolicSheaf {
    level_one(&relation_curve_chart(), &[vec![d]]).expect("single class line")
}

/// The degree-`d` line pulled back to halved middle weights. The poset of
/// weights is not simplicial, so this exercises the colimit regime; classes
/// come back in representative order (-1/2,-3/2), (-1/2,-1/2), (0,-1),
/// (0,0).
pub fn relation_curve_pullback(d: i64) -> ParabolicSheaf {
    let line = relation_curve_line(d);
    let small = &line.chart;
    let big_k = KummerExtension::new(
        small.kummer.p.clone(),
        vec![
            vec![rat(1), rat(0)],
            vec![ratio(1, 2), ratio(1, 2)],
            vec![rat(0), rat(1)],
        ],
    )
    .expect("halved middle is Kummer");
    let flags: BTreeSet<usize> = [0usize, 1, 2].into();
    let big = Chart::new(big_k, small.base.clone(), small.pic_map.clone(), &flags)
        .expect("fixture chart is valid");
    pullback(&line, &big).expect("colimit pullback of the fixture line")
}

/// Flagged level-one structure sheaf on the log point together with its
/// level-two pullback: a stable sheaf whose pullback is strictly
/// semistable.
pub fn log_point_pair() -> (ParabolicSheaf, ParabolicSheaf) {
    let c1 = tower_chart(1, 1, BaseGeometry::LogPoint, vec![], &[0usize].into());
    let f1 = level_one(&c1, &[vec![]]).expect("single class line");
    let c2 = tower_chart(1, 2, BaseGeometry::LogPoint, vec![], &[0usize].into());
    let f2 = pullback(&f1, &c2).expect("tower pullback");
    (f1, f2)
}

/// Two trivial summands on the line with a degree-one divisor, filtration
/// jumping at 1/2 and keeping the first summand.
pub fn my_filtration_example() -> MYData {
    MYData {
        base: BaseGeometry::P1,
        divisor: vec![1],
        level: 2,
        summands: vec![vec![0], vec![0]],
        weights: vec![rat(0), ratio(1, 2)],
        subsets: vec![[0usize, 1].into(), [0usize].into()],
    }
}
