//! Exact integer and rational lattice arithmetic: Smith normal form with
//! transforms, lattice membership, rational linear algebra, cone membership
//! and strictly positive functionals.

use crate::{IVec, QVec, Rat};
use num_traits::{Signed, Zero};

/// Smith normal form data for an integer matrix `a`: `u * a * v = s` with
/// `u`, `v` unimodular and `s` diagonal with `s[0] | s[1] | ...`.
pub struct Smith {
    pub u: Vec<Vec<i128>>,
    pub v: Vec<Vec<i128>>,
    pub s: Vec<Vec<i128>>,
    pub rank: usize,
}

fn identity(n: usize) -> Vec<Vec<i128>> {
    (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect()
}

pub fn mat_mul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let n = a.len();
    let k = if n == 0 { 0 } else { a[0].len() };
    let m = if b.is_empty() { 0 } else { b[0].len() };
    debug_assert!(k == b.len());
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum()).collect())
        .collect()
}

pub fn mat_vec(a: &[Vec<i128>], x: &[i128]) -> Vec<i128> {
    a.iter().map(|row| row.iter().zip(x).map(|(c, v)| c * v).sum()).collect()
}

/// Smith normal form by alternating row and column reduction.
pub fn smith(a: &[IVec]) -> Smith {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut s: Vec<Vec<i128>> =
        a.iter().map(|r| r.iter().map(|&x| i128::from(x)).collect()).collect();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let n = rows.min(cols);
    let mut t = 0;
    while t < n {
        // Find a pivot in the trailing block.
        let pivot = (t..rows)
            .flat_map(|i| (t..cols).map(move |j| (i, j)))
            .filter(|&(i, j)| s[i][j] != 0)
            .min_by_key(|&(i, j)| s[i][j].abs());
        let Some((pi, pj)) = pivot else { break };
        s.swap(t, pi);
        u.swap(t, pi);
        for row in s.iter_mut() {
            row.swap(t, pj);
        }
        for row in v.iter_mut() {
            row.swap(t, pj);
        }
        // Clear the pivot row and column; restart if a remainder shrinks the pivot.
        let mut dirty = false;
        for i in t + 1..rows {
            let q = s[i][t].div_euclid(s[t][t]);
            if q != 0 {
                for j in 0..cols {
                    s[i][j] -= q * s[t][j];
                }
                for j in 0..rows {
                    u[i][j] -= q * u[t][j];
                }
            }
            if s[i][t] != 0 {
                dirty = true;
            }
        }
        for j in t + 1..cols {
            let q = s[t][j].div_euclid(s[t][t]);
            if q != 0 {
                for i in 0..rows {
                    s[i][j] -= q * s[i][t];
                }
                for i in 0..cols {
                    v[i][j] -= q * v[i][t];
                }
            }
            if s[t][j] != 0 {
                dirty = true;
            }
        }
        if dirty {
            continue;
        }
        if s[t][t] < 0 {
            for j in 0..cols {
                s[t][j] = -s[t][j];
            }
            for j in 0..rows {
                u[t][j] = -u[t][j];
            }
        }
        // Enforce the divisibility chain.
        let mut fixed = true;
        'chain: for i in t + 1..rows {
            for j in t + 1..cols {
                if s[i][j] % s[t][t] != 0 {
                    for jj in 0..cols {
                        s[t][jj] += s[i][jj];
                    }
                    for jj in 0..rows {
                        u[t][jj] += u[i][jj];
                    }
                    fixed = false;
                    break 'chain;
                }
            }
        }
        if fixed {
            t += 1;
        }
    }
    let rank = (0..n).take_while(|&i| s[i][i] != 0).count();
    Smith { u, v, s, rank }
}

/// Integer inverse of a unimodular matrix.
pub fn unimodular_inverse(m: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let n = m.len();
    let a: Vec<QVec> = m
        .iter()
        .map(|r| r.iter().map(|&x| Rat::from_integer(x.into())).collect())
        .collect();
    let mut inv = vec![vec![0i128; n]; n];
    for j in 0..n {
        let mut e: QVec = vec![Rat::zero(); n];
        e[j] = Rat::from_integer(1.into());
        let x = solve_rational(&a, &e).expect("unimodular matrix is invertible");
        for i in 0..n {
            debug_assert!(x[i].is_integer());
            inv[i][j] = i128::try_from(x[i].to_integer()).expect("inverse entry fits i128");
        }
    }
    inv
}

/// Solves `sum_j x_j * gens[j] = target` over the integers with unrestricted
/// sign, i.e. decides membership of `target` in the lattice spanned by `gens`.
pub fn solve_integer(gens: &[IVec], target: &[i64]) -> Option<Vec<i64>> {
    let dim = target.len();
    let cols = gens.len();
    // Matrix with generators as columns.
    let a: Vec<IVec> = (0..dim).map(|i| gens.iter().map(|g| g[i]).collect()).collect();
    let sm = smith(&a);
    let b: Vec<i128> = target.iter().map(|&x| i128::from(x)).collect();
    let ub = mat_vec(&sm.u, &b);
    let mut y = vec![0i128; cols];
    for i in 0..dim.min(cols) {
        let d = sm.s[i][i];
        if d == 0 {
            if ub[i] != 0 {
                return None;
            }
        } else {
            if ub[i] % d != 0 {
                return None;
            }
            y[i] = ub[i] / d;
        }
    }
    for i in cols..dim {
        if ub[i] != 0 {
            return None;
        }
    }
    let x = mat_vec(&sm.v, &y);
    Some(x.into_iter().map(|c| i64::try_from(c).expect("solution fits i64")).collect())
}

/// True if `target` lies in the lattice generated by `gens`.
pub fn in_lattice(gens: &[IVec], target: &[i64]) -> bool {
    solve_integer(gens, target).is_some()
}

/// Gaussian elimination over the rationals. Returns one solution of
/// `sum_j x_j * cols[j] = target` if the system is consistent.
/// `cols` are the columns of the coefficient matrix, given as rows here.
pub fn solve_rational(cols: &[QVec], target: &QVec) -> Option<QVec> {
    let dim = target.len();
    let n = cols.len();
    // Augmented matrix, dim rows by n+1 columns.
    let mut m: Vec<QVec> = (0..dim)
        .map(|i| {
            let mut row: QVec = cols.iter().map(|c| c[i].clone()).collect();
            row.push(target[i].clone());
            row
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..dim).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].clone();
        for j in c..=n {
            m[r][j] = &m[r][j] / &inv;
        }
        for i in 0..dim {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in c..=n {
                    m[i][j] = &m[i][j] - &f * &m[r][j];
                }
            }
        }
        pivots.push((r, c));
        r += 1;
        if r == dim {
            break;
        }
    }
    if m.iter().skip(r).any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut x = vec![Rat::zero(); n];
    for (pr, pc) in pivots {
        x[pc] = m[pr][n].clone();
    }
    Some(x)
}

/// Rank over the rationals of the list of vectors.
pub fn rank_rational(vectors: &[QVec]) -> usize {
    if vectors.is_empty() {
        return 0;
    }
    let mut m: Vec<QVec> = vectors.to_vec();
    let dim = m[0].len();
    let mut rank = 0;
    for c in 0..dim {
        let Some(p) = (rank..m.len()).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(rank, p);
        for i in rank + 1..m.len() {
            if !m[i][c].is_zero() {
                let f = &m[i][c] / &m[rank][c];
                for j in c..dim {
                    m[i][j] = &m[i][j] - &f * &m[rank][j];
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// Basis of the integer row span of `rows`, by integer row echelon reduction.
pub fn lattice_basis(rows: &[IVec]) -> Vec<IVec> {
    if rows.is_empty() {
        return Vec::new();
    }
    let dim = rows[0].len();
    let mut m: Vec<Vec<i128>> =
        rows.iter().map(|r| r.iter().map(|&x| i128::from(x)).collect()).collect();
    let mut top = 0;
    for c in 0..dim {
        loop {
            let Some(p) =
                (top..m.len()).filter(|&i| m[i][c] != 0).min_by_key(|&i| m[i][c].abs())
            else {
                break;
            };
            m.swap(top, p);
            let mut done = true;
            for i in top + 1..m.len() {
                let q = m[i][c].div_euclid(m[top][c]);
                if q != 0 {
                    for j in 0..dim {
                        m[i][j] -= q * m[top][j];
                    }
                }
                if m[i][c] != 0 {
                    done = false;
                }
            }
            if done {
                top += 1;
                break;
            }
        }
        if top == m.len() {
            break;
        }
    }
    m.truncate(top);
    m.iter()
        .map(|r| r.iter().map(|&x| i64::try_from(x).expect("basis entry fits i64")).collect())
        .collect()
}

/// Membership of `v` in the rational cone spanned by `gens`, decided through
/// Caratheodory: some linearly independent subset of size at most the rank
/// admits a nonnegative solution.
pub fn in_cone(gens: &[IVec], v: &[i64]) -> bool {
    let target: QVec = crate::to_qvec(v);
    if target.iter().all(|x| x.is_zero()) {
        return true;
    }
    let qgens: Vec<QVec> = gens.iter().map(|g| crate::to_qvec(g)).collect();
    let r = rank_rational(&qgens);
    in_cone_q(&qgens, &target, r)
}

/// Rational-vector variant of [`in_cone`]; `r` bounds the subset size.
pub fn in_cone_q(qgens: &[QVec], target: &QVec, r: usize) -> bool {
    let n = qgens.len();
    let mut subset = Vec::new();
    fn rec(qgens: &[QVec], target: &QVec, r: usize, start: usize, subset: &mut Vec<usize>) -> bool {
        if !subset.is_empty() {
            let cols: Vec<QVec> = subset.iter().map(|&i| qgens[i].clone()).collect();
            if rank_rational(&cols) == subset.len() {
                if let Some(x) = solve_rational(&cols, target) {
                    if x.iter().all(|c| !c.is_negative()) {
                        return true;
                    }
                }
            } else {
                return false; // dependent subset, prune
            }
        }
        if subset.len() == r {
            return false;
        }
        for i in start..qgens.len() {
            subset.push(i);
            if rec(qgens, target, r, i + 1, subset) {
                return true;
            }
            subset.pop();
        }
        false
    }
    if target.iter().all(|x| x.is_zero()) {
        return true;
    }
    let _ = n;
    rec(qgens, target, r, 0, &mut subset)
}

/// Finds a rational functional `phi` with `phi . g >= 1` for every generator,
/// by Fourier-Motzkin elimination. Such a functional exists precisely when the
/// generators span a sharp cone, and it certifies sharpness exactly.
pub fn positive_functional(gens: &[IVec]) -> Option<QVec> {
    if gens.is_empty() {
        return Some(Vec::new());
    }
    let dim = gens[0].len();
    // Constraints sum_j a[j] * phi[j] >= rhs.
    let mut cons: Vec<(QVec, Rat)> = gens
        .iter()
        .map(|g| (crate::to_qvec(g), Rat::from_integer(1.into())))
        .collect();
    let mut stages: Vec<Vec<(QVec, Rat)>> = Vec::new();
    for var in (0..dim).rev() {
        stages.push(cons.clone());
        let mut next: Vec<(QVec, Rat)> = Vec::new();
        let (pos, rest): (Vec<_>, Vec<_>) = cons.into_iter().partition(|c| c.0[var].is_positive());
        let (neg, zero): (Vec<_>, Vec<_>) = rest.into_iter().partition(|c| c.0[var].is_negative());
        for (a, b) in &pos {
            for (c, d) in &neg {
                // Eliminate var from a (lower bound) and c (upper bound).
                let mut row: QVec = (0..dim)
                    .map(|j| &a[j] / &a[var] - &c[j] / &c[var])
                    .collect();
                let rhs = b / &a[var] - d / &c[var];
                row[var] = Rat::zero();
                next.push((row, rhs));
            }
        }
        next.extend(zero);
        cons = next;
    }
    // All variables eliminated: remaining constraints are 0 >= rhs.
    if cons.iter().any(|(_, rhs)| rhs.is_positive()) {
        return None;
    }
    // Back-substitute, choosing each variable at its tightest lower bound
    // (or 0 when unconstrained from below).
    let mut phi = vec![Rat::zero(); dim];
    for var in 0..dim {
        let stage = &stages[dim - 1 - var];
        let mut lo: Option<Rat> = None;
        let mut hi: Option<Rat> = None;
        for (a, b) in stage {
            if a[var].is_zero() {
                continue;
            }
            let mut bound = b.clone();
            for j in 0..dim {
                if j != var && !a[j].is_zero() {
                    bound = bound - &a[j] * &phi[j];
                }
            }
            let bound = bound / &a[var];
            if a[var].is_positive() {
                lo = Some(match lo {
                    Some(l) if l >= bound => l,
                    _ => bound,
                });
            } else {
                hi = Some(match hi {
                    Some(h) if h <= bound => h,
                    _ => bound,
                });
            }
        }
        phi[var] = match (lo, hi) {
            (Some(l), Some(h)) => {
                debug_assert!(l <= h);
                l
            }
            (Some(l), None) => l,
            (None, Some(h)) => h,
            (None, None) => Rat::zero(),
        };
    }
    debug_assert!(gens
        .iter()
        .all(|g| { g.iter().zip(&phi).map(|(&x, p)| p * crate::rat(x)).sum::<Rat>() >= crate::rat(1) }));
    Some(phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{rat, to_qvec};

    #[test]
    fn smith_of_diagonalizable() {
        let a = vec![vec![2, 4], vec![-2, 6]];
        let sm = smith(&a);
        assert_eq!(sm.rank, 2);
        let prod = mat_mul(&mat_mul(&sm.u, &[vec![2, 4], vec![-2, 6]]
            .iter()
            .map(|r| r.iter().map(|&x| i128::from(x)).collect())
            .collect::<Vec<_>>()), &sm.v);
        assert_eq!(prod, sm.s);
        assert_eq!(sm.s[0][0], 2);
        assert_eq!(sm.s[1][1], 10);
        assert_eq!(sm.s[1][0], 0);
        assert_eq!(sm.s[0][1], 0);
    }

    #[test]
    fn integer_solve_detects_lattice_membership() {
        let gens = vec![vec![2, 0], vec![1, 1]];
        assert!(in_lattice(&gens, &[1, 1]));
        assert!(in_lattice(&gens, &[1, -1]));
        assert!(!in_lattice(&gens, &[1, 0]));
        let x = solve_integer(&gens, &[3, 1]).unwrap();
        assert_eq!(x[0] * 2 + x[1], 3);
        assert_eq!(x[1], 1);
    }

    #[test]
    fn rational_solve_and_rank() {
        let cols = vec![to_qvec(&[1, 2]), to_qvec(&[2, 4])];
        assert_eq!(rank_rational(&cols), 1);
        let x = solve_rational(&cols, &to_qvec(&[3, 6])).unwrap();
        assert_eq!(
            x.iter().zip(&cols).map(|(c, g)| c * &g[0]).sum::<Rat>(),
            rat(3)
        );
        assert!(solve_rational(&cols, &to_qvec(&[1, 0])).is_none());
    }

    #[test]
    fn cone_membership() {
        // Cone spanned by (2,0),(1,1),(0,2) is the even-coordinate-sum quadrant's cone.
        let gens = vec![vec![2, 0], vec![1, 1], vec![0, 2]];
        assert!(in_cone(&gens, &[1, 0]));
        assert!(in_cone(&gens, &[3, 5]));
        assert!(!in_cone(&gens, &[-1, 2]));
    }

    #[test]
    fn positive_functional_certifies_sharpness() {
        assert!(positive_functional(&[vec![1, 0], vec![0, 1]]).is_some());
        assert!(positive_functional(&[vec![1, -1], vec![0, 1]]).is_some());
        // Not sharp: contains the line through (1,0).
        assert!(positive_functional(&[vec![1, 0], vec![-1, 0], vec![0, 1]]).is_none());
    }

    #[test]
    fn lattice_basis_spans() {
        let basis = lattice_basis(&[vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(basis.len(), 2);
        // Span must contain (1,1) and (2,0) but not (1,0).
        assert!(in_lattice(&basis, &[1, 1]));
        assert!(in_lattice(&basis, &[2, 0]));
        assert!(!in_lattice(&basis, &[1, 0]));
    }
}
