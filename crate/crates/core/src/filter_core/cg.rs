use crate::error::{Error, Result};

/// Real inner-product space used by the solver. Complex vectors use
/// `Re <x, y>`, which makes Hermitian operators symmetric.
pub trait KrylovVector: Clone {
    fn dot(&self, other: &Self) -> f64;
    fn axpy(&mut self, alpha: f64, x: &Self);
    fn scale(&mut self, alpha: f64);
    fn zeros_like(&self) -> Self;
}

pub trait LinearOperator {
    type Vector: KrylovVector;

    fn apply(&self, x: &Self::Vector) -> Self::Vector;
}

impl KrylovVector for Vec<f64> {
    fn dot(&self, other: &Self) -> f64 {
        self.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    fn axpy(&mut self, alpha: f64, x: &Self) {
        self.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
    }

    fn scale(&mut self, alpha: f64) {
        self.iter_mut().for_each(|y| *y *= alpha);
    }

    fn zeros_like(&self) -> Self {
        vec![0.0; self.len()]
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome<V> {
    pub solution: V,
    pub iterations: usize,
    /// `||b - A x||` at the returned iterate.
    pub residual_norm: f64,
    /// Set when a search direction had non-positive curvature.
    pub breakdown: bool,
}

/// Plain conjugate gradient for a self-adjoint positive semidefinite operator,
/// run for at most `iters` steps from `x0`.
pub fn cg_solve<O: LinearOperator>(
    op: &O,
    rhs: &O::Vector,
    x0: &O::Vector,
    iters: usize,
) -> Result<CgOutcome<O::Vector>> {
    if iters == 0 {
        return Err(Error::invalid("conjugate gradient needs at least one iteration"));
    }
    let mut x = x0.clone();
    let mut r = rhs.clone();
    r.axpy(-1.0, &op.apply(&x));
    let mut rr = r.dot(&r);
    let floor = (f64::EPSILON * rhs.dot(rhs).sqrt()).powi(2);
    let mut p = r.clone();
    let mut done = 0;
    let mut breakdown = false;
    while done < iters && rr > floor {
        let ap = op.apply(&p);
        let curvature = p.dot(&ap);
        if !(curvature > 0.0) || !curvature.is_finite() {
            breakdown = true;
            break;
        }
        let alpha = rr / curvature;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        let rr_next = r.dot(&r);
        let beta = rr_next / rr;
        rr = rr_next;
        p.scale(beta);
        p.axpy(1.0, &r);
        done += 1;
    }
    Ok(CgOutcome {
        solution: x,
        iterations: done,
        residual_norm: rr.sqrt(),
        breakdown,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    struct Dense(Vec<Vec<f64>>);

    impl LinearOperator for Dense {
        type Vector = Vec<f64>;

        fn apply(&self, x: &Vec<f64>) -> Vec<f64> {
            self.0.iter().map(|row| row.dot(x)).collect()
        }
    }

    fn random_spd(n: usize, seed: u64) -> Dense {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        Dense(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            (0..n).map(|k| m[k][i] * m[k][j]).sum::<f64>() / n as f64 + if i == j { 1.0 } else { 0.0 }
                        })
                        .collect()
                })
                .collect(),
        )
    }

    /// Gaussian elimination with partial pivoting.
    fn direct_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a
            .iter()
            .zip(b)
            .map(|(row, &v)| {
                let mut r = row.clone();
                r.push(v);
                r
            })
            .collect();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
                .unwrap();
            m.swap(col, piv);
            for row in col + 1..n {
                let f = m[row][col] / m[col][col];
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
            x[row] = (m[row][n] - s) / m[row][row];
        }
        x
    }

    #[test]
    fn identity_converges_in_one_step() {
        let op = Dense(
            (0..4)
                .map(|i| (0..4).map(|j| f64::from(u8::from(i == j))).collect())
                .collect(),
        );
        let b = vec![1.0, -2.0, 3.0, 0.5];
        let out = cg_solve(&op, &b, &vec![0.0; 4], 1).unwrap();
        for (x, y) in out.solution.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn six_by_six_matches_direct_solve() {
        let op = random_spd(6, 3);
        let b = vec![1.0, 0.0, -1.0, 2.0, 0.5, -0.25];
        let out = cg_solve(&op, &b, &vec![0.0; 6], 6).unwrap();
        let exact = direct_solve(&op.0, &b);
        for (x, y) in out.solution.iter().zip(&exact) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn exact_start_short_circuits() {
        let op = Dense(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        let b = vec![2.0, 3.0];
        let out = cg_solve(&op, &b, &b, 1).unwrap();
        assert_eq!(out.solution, b);
        assert_eq!(out.iterations, 0);
        assert!(cg_solve(&op, &b, &b, 0).is_err());
    }

    #[test]
    fn a_norm_error_is_monotone() {
        let op = random_spd(12, 9);
        let b: Vec<f64> = (0..12).map(|i| (i as f64).sin()).collect();
        let exact = direct_solve(&op.0, &b);
        let a_err = |x: &Vec<f64>| {
            let e: Vec<f64> = x.iter().zip(&exact).map(|(a, b)| a - b).collect();
            e.dot(&op.apply(&e))
        };
        let mut prev = a_err(&vec![0.0; 12]);
        for k in 1..=12 {
            let x = cg_solve(&op, &b, &vec![0.0; 12], k).unwrap().solution;
            let cur = a_err(&x);
            assert!(cur <= prev * (1.0 + 1e-12) + 1e-24, "step {k}: {cur} > {prev}");
            prev = cur;
        }
    }

    #[test]
    fn breakdown_on_indefinite_direction() {
        let op = Dense(vec![vec![-1.0, 0.0], vec![0.0, -1.0]]);
        let out = cg_solve(&op, &vec![1.0, 1.0], &vec![0.0, 0.0], 3).unwrap();
        assert!(out.breakdown);
        assert_eq!(out.solution, vec![0.0, 0.0]);
    }
}
