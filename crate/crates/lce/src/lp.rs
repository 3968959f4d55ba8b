//! Exact rational simplex for packing-form linear programs:
//! maximize `c·x` subject to `Ax <= b`, `x >= 0`, with `b >= 0`.
//!
//! Revised simplex with an explicit basis inverse and Bland's rule, so it
//! never cycles. Rows are expected to be few and columns many (one per path).

use num_traits::{One, Zero};

use crate::rational::Q;
use crate::{Error, Result};

pub struct Packing {
    pub rows: usize,
    /// Sparse columns as `(row, coefficient)`.
    pub columns: Vec<Vec<(usize, Q)>>,
    pub objective: Vec<Q>,
    pub rhs: Vec<Q>,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub value: Q,
    pub x: Vec<Q>,
    /// Optimal dual multipliers, one per row.
    pub duals: Vec<Q>,
    pub pivots: usize,
}

pub fn solve(lp: &Packing) -> Result<Solution> {
    let m = lp.rows;
    let ncols = lp.columns.len();
    if lp.rhs.len() != m || lp.objective.len() != ncols {
        return Err(Error::Invalid("packing dimensions disagree".into()));
    }
    if lp.rhs.iter().any(|b| *b < Q::zero()) {
        return Err(Error::Invalid("packing right-hand side must be nonnegative".into()));
    }
    let cost = |var: usize| -> Q {
        if var < ncols {
            lp.objective[var].clone()
        } else {
            Q::zero()
        }
    };
    let mut basis: Vec<usize> = (0..m).map(|i| ncols + i).collect();
    let mut binv: Vec<Vec<Q>> = (0..m)
        .map(|i| (0..m).map(|k| if i == k { Q::one() } else { Q::zero() }).collect())
        .collect();
    let mut xb: Vec<Q> = lp.rhs.clone();
    let mut pivots = 0;
    loop {
        let mut y = vec![Q::zero(); m];
        for r in 0..m {
            let cb = cost(basis[r]);
            if cb.is_zero() {
                continue;
            }
            for i in 0..m {
                if !binv[r][i].is_zero() {
                    y[i] += &cb * &binv[r][i];
                }
            }
        }
        let mut entering = None;
        for j in 0..ncols {
            let mut rc = lp.objective[j].clone();
            for (i, a) in &lp.columns[j] {
                if !y[*i].is_zero() {
                    rc -= &y[*i] * a;
                }
            }
            if rc > Q::zero() {
                entering = Some(j);
                break;
            }
        }
        if entering.is_none() {
            entering = (0..m).find(|&i| y[i] < Q::zero()).map(|i| ncols + i);
        }
        let Some(j) = entering else {
            let mut x = vec![Q::zero(); ncols];
            for r in 0..m {
                if basis[r] < ncols {
                    x[basis[r]] = xb[r].clone();
                }
            }
            let value = (0..ncols).fold(Q::zero(), |acc, k| acc + &lp.objective[k] * &x[k]);
            return Ok(Solution { value, x, duals: y, pivots });
        };
        let d: Vec<Q> = (0..m)
            .map(|r| {
                if j < ncols {
                    lp.columns[j].iter().fold(Q::zero(), |acc, (i, a)| acc + &binv[r][*i] * a)
                } else {
                    binv[r][j - ncols].clone()
                }
            })
            .collect();
        let mut leave: Option<(usize, Q)> = None;
        for r in 0..m {
            if d[r] <= Q::zero() {
                continue;
            }
            let ratio = &xb[r] / &d[r];
            let better = match &leave {
                None => true,
                Some((lr, lratio)) => ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        let Some((r, _)) = leave else {
            return Err(Error::Invalid("packing program is unbounded".into()));
        };
        let piv = d[r].clone();
        for x in binv[r].iter_mut() {
            *x /= &piv;
        }
        xb[r] /= &piv;
        let prow = binv[r].clone();
        let px = xb[r].clone();
        for k in 0..m {
            if k == r || d[k].is_zero() {
                continue;
            }
            let f = d[k].clone();
            for i in 0..m {
                if !prow[i].is_zero() {
                    binv[k][i] -= &f * &prow[i];
                }
            }
            xb[k] -= &f * &px;
        }
        basis[r] = j;
        pivots += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qr};

    #[test]
    fn small_packing() {
        // max x + y, x + 2y <= 4, 3x + y <= 6 -> x = 8/5, y = 6/5
        let lp = Packing {
            rows: 2,
            columns: vec![vec![(0, q(1)), (1, q(3))], vec![(0, q(2)), (1, q(1))]],
            objective: vec![q(1), q(1)],
            rhs: vec![q(4), q(6)],
        };
        let s = solve(&lp).unwrap();
        assert_eq!(s.x, vec![qr(8, 5), qr(6, 5)]);
        assert_eq!(s.value, qr(14, 5));
        // strong duality
        let dual = &s.duals[0] * q(4) + &s.duals[1] * q(6);
        assert_eq!(dual, s.value);
    }

    #[test]
    fn degenerate_zero_rhs() {
        let lp = Packing {
            rows: 2,
            columns: vec![vec![(0, q(1)), (1, q(1))], vec![(1, q(1))]],
            objective: vec![q(1), q(1)],
            rhs: vec![q(0), q(3)],
        };
        assert_eq!(solve(&lp).unwrap().value, q(3));
    }

    #[test]
    fn unbounded_is_reported() {
        let lp = Packing { rows: 1, columns: vec![vec![(0, q(-1))]], objective: vec![q(1)], rhs: vec![q(1)] };
        assert!(solve(&lp).is_err());
    }
}
