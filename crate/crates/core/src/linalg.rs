//! Exact rational linear algebra over small integer matrices.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

fn to_big(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Row-reduces `m` in place to reduced echelon form over the first `cols`
/// columns and returns the pivot columns.
fn rref(m: &mut [Vec<BigRational>], cols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        if row == m.len() {
            break;
        }
        let Some(p) = (row..m.len()).find(|r| !m[*r][col].is_zero()) else {
            continue;
        };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            *x *= &inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let (pivot_row, other) = if r < row {
                    let (a, b) = m.split_at_mut(row);
                    (&b[0], &mut a[r])
                } else {
                    let (a, b) = m.split_at_mut(r);
                    (&a[row], &mut b[0])
                };
                for (x, y) in other.iter_mut().zip(pivot_row.iter()) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    pivots
}

/// Rank of an integer matrix given as rows.
pub fn rank(rows: &[Vec<i64>]) -> usize {
    let cols = rows.first().map(Vec::len).unwrap_or(0);
    let mut m: Vec<Vec<BigRational>> = rows
        .iter()
        .map(|r| r.iter().map(|v| to_big(*v)).collect())
        .collect();
    rref(&mut m, cols).len()
}

/// Coefficients `x` with `Σ x_k · vectors[k] = target`, if any exist.
///
/// All vectors must have the length of `target`. An empty family spans only
/// the zero vector.
pub fn linear_combination(vectors: &[Vec<i64>], target: &[i64]) -> Option<Vec<BigRational>> {
    let n = vectors.len();
    debug_assert!(vectors.iter().all(|v| v.len() == target.len()));
    // one equation per coordinate, one unknown per vector, plus the right-hand side
    let mut m: Vec<Vec<BigRational>> = (0..target.len())
        .map(|i| {
            let mut row: Vec<BigRational> = vectors.iter().map(|v| to_big(v[i])).collect();
            row.push(to_big(target[i]));
            row
        })
        .collect();
    let pivots = rref(&mut m, n);
    if m.iter().skip(pivots.len()).any(|row| !row[n].is_zero()) {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (r, c) in pivots.iter().enumerate() {
        x[*c] = m[r][n].clone();
    }
    Some(x)
}

pub fn is_linear_combination(vectors: &[Vec<i64>], target: &[i64]) -> bool {
    linear_combination(vectors, target).is_some()
}

/// A nonnegative solution `x ≥ 0` of `Σ x_k · vectors[k] = target`, found with
/// phase one of the simplex method (Bland's rule, exact arithmetic).
pub fn nonnegative_combination(vectors: &[Vec<i64>], target: &[i64]) -> Option<Vec<BigRational>> {
    let n = vectors.len();
    let m = target.len();
    // tableau rows: [vector coefficients | artificials | rhs], with rhs made nonnegative
    let width = n + m + 1;
    let mut tab: Vec<Vec<BigRational>> = (0..m)
        .map(|i| {
            let sign = if target[i] < 0 { -1 } else { 1 };
            let mut row: Vec<BigRational> = vectors.iter().map(|v| to_big(sign * v[i])).collect();
            row.extend((0..m).map(|j| {
                if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            }));
            row.push(to_big(sign * target[i]));
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    // objective: minimise the sum of artificials; reduced costs of the originals
    let reduced_cost = |tab: &[Vec<BigRational>], basis: &[usize], col: usize| -> BigRational {
        let own = if col >= n && col < n + m {
            BigRational::one()
        } else {
            BigRational::zero()
        };
        let mut z = BigRational::zero();
        for (r, b) in basis.iter().enumerate() {
            if *b >= n {
                z += &tab[r][col];
            }
        }
        own - z
    };

    loop {
        let entering =
            (0..n + m).find(|c| !basis.contains(c) && reduced_cost(&tab, &basis, *c).is_negative());
        let Some(col) = entering else { break };
        let mut leave: Option<(usize, BigRational)> = None;
        for r in 0..m {
            if tab[r][col].is_positive() {
                let ratio = &tab[r][width - 1] / &tab[r][col];
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((row, _)) = leave else {
            // unbounded direction cannot happen in phase one; stop defensively
            break;
        };
        let inv = tab[row][col].recip();
        for x in tab[row].iter_mut() {
            *x *= &inv;
        }
        let pivot_row = tab[row].clone();
        for (r, other) in tab.iter_mut().enumerate() {
            if r != row && !other[col].is_zero() {
                let f = other[col].clone();
                for (x, y) in other.iter_mut().zip(pivot_row.iter()) {
                    *x -= &f * y;
                }
            }
        }
        basis[row] = col;
    }

    let infeasible = basis
        .iter()
        .enumerate()
        .any(|(r, b)| *b >= n && !tab[r][width - 1].is_zero());
    if infeasible {
        return None;
    }
    let mut x = vec![BigRational::zero(); n];
    for (r, b) in basis.iter().enumerate() {
        if *b < n {
            x[*b] = tab[r][width - 1].clone();
        }
    }
    Some(x)
}
