//! Dense revised simplex for `min cᵀx s.t. Ax = b, x ≥ 0` with few rows
//! and many columns.

use crate::scalar::Real;

pub(crate) struct Lp<T> {
    /// Columns of `A`, each of length `b.len()`.
    pub cols: Vec<Vec<T>>,
    pub cost: Vec<T>,
    pub b: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

pub(crate) struct LpSolution<T> {
    pub x: Vec<T>,
    /// Simplex multipliers; dual-feasible when `status` is `Optimal`.
    pub pi: Vec<T>,
    pub status: LpStatus,
    pub iterations: usize,
}

const REFACTOR_EVERY: usize = 50;
const STALL_LIMIT: usize = 50;

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub(crate) fn invert<T: Real>(a: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let m = a.len();
    let mut w: Vec<Vec<T>> = a.to_vec();
    let mut inv: Vec<Vec<T>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    for col in 0..m {
        let p = (col..m).max_by(|&i, &j| w[i][col].abs().partial_cmp(&w[j][col].abs()).unwrap())?;
        if w[p][col].abs() <= T::epsilon() {
            return None;
        }
        w.swap(col, p);
        inv.swap(col, p);
        let d = w[col][col];
        for j in 0..m {
            w[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..m {
            if i == col || w[i][col].is_zero() {
                continue;
            }
            let f = w[i][col];
            for j in 0..m {
                let (wc, ic) = (w[col][j], inv[col][j]);
                w[i][j] -= f * wc;
                inv[i][j] -= f * ic;
            }
        }
    }
    Some(inv)
}

struct State<'a, T> {
    lp: &'a Lp<T>,
    art_signs: Vec<T>,
    basis: Vec<usize>,
    binv: Vec<Vec<T>>,
    xb: Vec<T>,
    tol: T,
}

impl<T: Real> State<'_, T> {
    fn m(&self) -> usize {
        self.lp.b.len()
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.lp.cols.len()
    }

    fn column(&self, j: usize) -> Vec<T> {
        if self.is_artificial(j) {
            let i = j - self.lp.cols.len();
            let mut e = vec![T::zero(); self.m()];
            e[i] = self.art_signs[i];
            e
        } else {
            self.lp.cols[j].clone()
        }
    }

    fn cost(&self, j: usize, phase_one: bool) -> T {
        match (phase_one, self.is_artificial(j)) {
            (true, true) => T::one(),
            (true, false) | (false, true) => T::zero(),
            (false, false) => self.lp.cost[j],
        }
    }

    fn refactor(&mut self) {
        let m = self.m();
        let cols: Vec<Vec<T>> = self.basis.iter().map(|&j| self.column(j)).collect();
        let bmat: Vec<Vec<T>> = (0..m)
            .map(|i| (0..m).map(|c| cols[c][i]).collect())
            .collect();
        if let Some(inv) = invert(&bmat) {
            self.xb = (0..m)
                .map(|i| {
                    (0..m)
                        .map(|k| inv[i][k] * self.lp.b[k])
                        .sum::<T>()
                        .max(T::zero())
                })
                .collect();
            self.binv = inv;
        }
    }

    fn multipliers(&self, phase_one: bool) -> Vec<T> {
        let m = self.m();
        let mut pi = vec![T::zero(); m];
        for (i, &j) in self.basis.iter().enumerate() {
            let c = self.cost(j, phase_one);
            if c.is_zero() {
                continue;
            }
            for k in 0..m {
                pi[k] += c * self.binv[i][k];
            }
        }
        pi
    }

    fn objective(&self, phase_one: bool) -> T {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&j, &v)| self.cost(j, phase_one) * v)
            .sum()
    }

    /// Dantzig's rule, or Bland's rule (lowest index) while stalling.
    fn entering(&self, pi: &[T], phase_one: bool, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, T)> = None;
        for (j, col) in self.lp.cols.iter().enumerate() {
            let d = self.cost(j, phase_one) - pi.iter().zip(col).map(|(&p, &a)| p * a).sum::<T>();
            if d < -self.tol {
                if bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    /// Pivots column `q` into the basis; false on an unbounded ray.
    fn pivot(&mut self, q: usize, bland: bool) -> bool {
        let m = self.m();
        let a = self.column(q);
        let d: Vec<T> = (0..m)
            .map(|i| (0..m).map(|k| self.binv[i][k] * a[k]).sum())
            .collect();
        let scale = d.iter().fold(T::zero(), |s, v| s.max(v.abs()));
        let piv_tol = scale * T::tol(1e-11);
        let mut leave: Option<(usize, T, T)> = None;
        for i in 0..m {
            let di = d[i];
            // Artificials at zero stay there: any nonzero entry evicts them.
            let ratio = if self.is_artificial(self.basis[i])
                && self.xb[i].is_zero()
                && di.abs() > piv_tol
            {
                T::zero()
            } else if di > piv_tol {
                self.xb[i] / di
            } else {
                continue;
            };
            let better = match leave {
                None => true,
                Some((li, lr, ld)) => {
                    ratio < lr
                        || (ratio == lr
                            && if bland {
                                self.basis[i] < self.basis[li]
                            } else {
                                di.abs() > ld
                            })
                }
            };
            if better {
                leave = Some((i, ratio, di.abs()));
            }
        }
        let Some((r, theta, _)) = leave else {
            return false;
        };
        let dr = d[r];
        for i in 0..m {
            if i != r {
                self.xb[i] = (self.xb[i] - theta * d[i]).max(T::zero());
            }
        }
        self.xb[r] = theta;
        let row_r: Vec<T> = self.binv[r].iter().map(|&v| v / dr).collect();
        for i in 0..m {
            if i == r || d[i].is_zero() {
                continue;
            }
            let f = d[i];
            for k in 0..m {
                self.binv[i][k] -= f * row_r[k];
            }
        }
        self.binv[r] = row_r;
        self.basis[r] = q;
        true
    }

    fn run(&mut self, phase_one: bool, budget: usize) -> (usize, LpStatus) {
        let mut best = self.objective(phase_one);
        let mut stall = 0;
        for it in 0..budget {
            if it > 0 && it % REFACTOR_EVERY == 0 {
                self.refactor();
            }
            let bland = stall >= STALL_LIMIT;
            let pi = self.multipliers(phase_one);
            let Some(q) = self.entering(&pi, phase_one, bland) else {
                return (it, LpStatus::Optimal);
            };
            if !self.pivot(q, bland) {
                return (it, LpStatus::Unbounded);
            }
            let obj = self.objective(phase_one);
            if obj < best - self.tol * best.abs().max(T::one()) {
                best = obj;
                stall = 0;
            } else {
                stall += 1;
            }
        }
        (budget, LpStatus::IterationLimit)
    }
}

/// Two-phase revised simplex. `tol` bounds reduced costs at optimality.
pub(crate) fn solve_lp<T: Real>(lp: &Lp<T>, tol: T, max_iter: usize) -> LpSolution<T> {
    let m = lp.b.len();
    let n = lp.cols.len();
    let art_signs: Vec<T> =
        lp.b.iter()
            .map(|&v| if v < T::zero() { -T::one() } else { T::one() })
            .collect();
    let mut st = State {
        lp,
        binv: (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| if i == j { art_signs[i] } else { T::zero() })
                    .collect()
            })
            .collect(),
        art_signs,
        basis: (n..n + m).collect(),
        xb: lp.b.iter().map(|v| v.abs()).collect(),
        tol,
    };
    let scale = lp.b.iter().fold(T::one(), |s, v| s.max(v.abs()));
    let (it1, s1) = st.run(true, max_iter);
    st.refactor();
    let (iterations, status) = if s1 != LpStatus::Optimal {
        (it1, s1)
    } else if st.objective(true) > tol.sqrt() * scale {
        (it1, LpStatus::Infeasible)
    } else {
        let (it2, s2) = st.run(false, max_iter.saturating_sub(it1));
        st.refactor();
        (it1 + it2, s2)
    };
    let mut x = vec![T::zero(); n];
    for (&j, &v) in st.basis.iter().zip(&st.xb) {
        if j < n {
            x[j] = v;
        }
    }
    LpSolution {
        x,
        pi: st.multipliers(false),
        status,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_program() {
        // min x0 + 2 x1 + 3 x2  s.t.  x0 + x1 + x2 = 1,  x1 − x2 = 0.5
        let lp = Lp {
            cols: vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![1.0, -1.0]],
            cost: vec![1.0, 2.0, 3.0],
            b: vec![1.0, 0.5],
        };
        let sol: LpSolution<f64> = solve_lp(&lp, 1e-12, 100);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 0.5).abs() < 1e-12 && (sol.x[1] - 0.5).abs() < 1e-12);
        let obj: f64 = sol.b_dot(&lp.b);
        assert!((obj - 1.5).abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let lp = Lp {
            cols: vec![vec![1.0]],
            cost: vec![1.0],
            b: vec![-1.0],
        };
        assert_eq!(solve_lp(&lp, 1e-12, 100).status, LpStatus::Infeasible);
        let lp = Lp {
            cols: vec![vec![1.0], vec![1.0], vec![-1.0]],
            cost: vec![0.0, 0.0, -1.0],
            b: vec![1.0],
        };
        assert_eq!(solve_lp(&lp, 1e-12, 100).status, LpStatus::Unbounded);
    }

    #[test]
    fn inverse_of_small_matrix() {
        let a: Vec<Vec<f64>> = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let inv = invert(&a).unwrap();
        assert!((inv[0][0] - 0.6).abs() < 1e-15 && (inv[0][1] + 0.2).abs() < 1e-15);
        assert!(invert(&[vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }

    impl LpSolution<f64> {
        fn b_dot(&self, b: &[f64]) -> f64 {
            self.pi.iter().zip(b).map(|(p, v)| p * v).sum()
        }
    }
}
