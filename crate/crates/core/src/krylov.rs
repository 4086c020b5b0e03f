//! Krylov solvers for the nonsymmetric step systems and a dense inverse for
//! small-system oracles.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
/// Largest system accepted by [`dense_inverse`].
pub const DENSE_LIMIT: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    BiCgStab,
    Gmres,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preconditioner {
    None,
    Jacobi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `||A x - b||_2 / ||b||_2` of the returned iterate.
    pub relative_residual: f64,
    pub converged: bool,
    pub method: Method,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} after {} iterations, relative residual {:.3e}{}",
            self.method,
            self.iterations,
            self.relative_residual,
            if self.converged { "" } else { " (not converged)" }
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub tol: f64,
    /// `None` means `10 n`.
    pub max_iter: Option<usize>,
    pub preconditioner: Preconditioner,
    pub restart: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: DEFAULT_TOLERANCE,
            max_iter: None,
            preconditioner: Preconditioner::Jacobi,
            restart: 50,
        }
    }
}

/// Solves `A x = b` from a zero initial guess.
pub fn solve(a: &CsrMatrix, rhs: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveReport)> {
    let opts = SolveOptions {
        tol,
        max_iter: Some(max_iter),
        ..SolveOptions::default()
    };
    solve_with(a, rhs, None, &opts)
}

/// Stabilized biconjugate gradients with right preconditioning, falling back
/// to restarted GMRES on breakdown or stagnation. Convergence is always
/// judged on the true residual.
pub fn solve_with(
    a: &CsrMatrix,
    rhs: &[f64],
    guess: Option<&[f64]>,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::config("solver needs a square matrix"));
    }
    if rhs.len() != n || guess.is_some_and(|g| g.len() != n) {
        return Err(Error::config("right-hand side or guess has the wrong length"));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::config("solver tolerance must be positive"));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n).max(1);
    let inv_diag = match opts.preconditioner {
        Preconditioner::None => vec![1.0; n],
        Preconditioner::Jacobi => a
            .diagonal()
            .iter()
            .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
            .collect(),
    };
    let bnorm = norm(rhs);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; n],
            SolveReport {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
                method: Method::BiCgStab,
            },
        ));
    }
    let mut x = guess.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let target = opts.tol * bnorm;

    let (iters, ok) = bicgstab(a, rhs, &mut x, &inv_diag, target, max_iter);
    let res = true_residual_norm(a, rhs, &x);
    if ok && res <= target {
        return Ok((x, report(iters, res / bnorm, true, Method::BiCgStab)));
    }
    let remaining = max_iter.saturating_sub(iters).max(opts.restart);
    let g_iters = gmres(a, rhs, &mut x, &inv_diag, target, remaining, opts.restart.max(2));
    let res = true_residual_norm(a, rhs, &x);
    let rep = report(iters + g_iters, res / bnorm, res <= target, Method::Gmres);
    if rep.converged {
        Ok((x, rep))
    } else {
        Err(Error::NonConvergence { report: rep, step: None })
    }
}

fn report(iterations: usize, relative_residual: f64, converged: bool, method: Method) -> SolveReport {
    SolveReport {
        iterations,
        relative_residual,
        converged,
        method,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn true_residual(a: &CsrMatrix, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.mul_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

fn true_residual_norm(a: &CsrMatrix, b: &[f64], x: &[f64]) -> f64 {
    norm(&true_residual(a, b, x))
}

/// Returns `(iterations, converged)`; `x` holds the last iterate.
fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], inv_diag: &[f64], target: f64, max_iter: usize) -> (usize, bool) {
    let n = b.len();
    let mut r = true_residual(a, b, x);
    if norm(&r) <= target {
        return (0, true);
    }
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut p_hat = vec![0.0; n];
    let mut s_hat = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut restarts = 0;
    for it in 1..=max_iter {
        let rho_new = dot(&r_hat, &r);
        if rho_new == 0.0 || !rho_new.is_finite() {
            return (it, false);
        }
        let beta = (rho_new / rho) * (alpha / omega);
        for k in 0..n {
            p[k] = r[k] + beta * (p[k] - omega * v[k]);
            p_hat[k] = inv_diag[k] * p[k];
        }
        a.mul_vec_into(&p_hat, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 || !denom.is_finite() {
            return (it, false);
        }
        alpha = rho_new / denom;
        for k in 0..n {
            s[k] = r[k] - alpha * v[k];
        }
        if norm(&s) <= target {
            for k in 0..n {
                x[k] += alpha * p_hat[k];
            }
            if true_residual_norm(a, b, x) <= target {
                return (it, true);
            }
            r = true_residual(a, b, x);
            r_hat.copy_from_slice(&r);
            (rho, alpha, omega) = (1.0, 1.0, 1.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            restarts += 1;
            if restarts > 20 {
                return (it, false);
            }
            continue;
        }
        for k in 0..n {
            s_hat[k] = inv_diag[k] * s[k];
        }
        a.mul_vec_into(&s_hat, &mut t);
        let tt = dot(&t, &t);
        if tt == 0.0 {
            return (it, false);
        }
        omega = dot(&t, &s) / tt;
        for k in 0..n {
            x[k] += alpha * p_hat[k] + omega * s_hat[k];
            r[k] = s[k] - omega * t[k];
        }
        rho = rho_new;
        if norm(&r) <= target {
            if true_residual_norm(a, b, x) <= target {
                return (it, true);
            }
            r = true_residual(a, b, x);
            r_hat.copy_from_slice(&r);
            (rho, alpha, omega) = (1.0, 1.0, 1.0);
            v.iter_mut().for_each(|e| *e = 0.0);
            p.iter_mut().for_each(|e| *e = 0.0);
            restarts += 1;
            if restarts > 20 {
                return (it, false);
            }
        }
        if omega == 0.0 {
            return (it, false);
        }
    }
    (max_iter, false)
}

/// Restarted GMRES with right preconditioning; returns inner iterations used.
fn gmres(
    a: &CsrMatrix,
    b: &[f64],
    x: &mut [f64],
    inv_diag: &[f64],
    target: f64,
    max_iter: usize,
    restart: usize,
) -> usize {
    let n = b.len();
    let mut used = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];
    while used < max_iter {
        let r = true_residual(a, b, x);
        let beta = norm(&r);
        if beta <= target {
            break;
        }
        let m = restart.min(max_iter - used);
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|e| e / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_done = 0;
        for k in 0..m {
            for q in 0..n {
                z[q] = inv_diag[q] * basis[k][q];
            }
            a.mul_vec_into(&z, &mut w);
            for (l, vl) in basis.iter().enumerate() {
                let hlk = dot(&w, vl);
                hess[l][k] = hlk;
                for q in 0..n {
                    w[q] -= hlk * vl[q];
                }
            }
            let hn = norm(&w);
            hess[k + 1][k] = hn;
            for l in 0..k {
                let tmp = cs[l] * hess[l][k] + sn[l] * hess[l + 1][k];
                hess[l + 1][k] = -sn[l] * hess[l][k] + cs[l] * hess[l + 1][k];
                hess[l][k] = tmp;
            }
            let denom = hess[k][k].hypot(hess[k + 1][k]);
            if denom == 0.0 {
                break;
            }
            cs[k] = hess[k][k] / denom;
            sn[k] = hess[k + 1][k] / denom;
            hess[k][k] = denom;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_done = k + 1;
            used += 1;
            if g[k + 1].abs() <= 0.5 * target || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|e| e / hn).collect());
        }
        if k_done == 0 {
            break;
        }
        let mut y = vec![0.0; k_done];
        for l in (0..k_done).rev() {
            let s: f64 = (l + 1..k_done).map(|c| hess[l][c] * y[c]).sum();
            y[l] = (g[l] - s) / hess[l][l];
        }
        for q in 0..n {
            let upd: f64 = (0..k_done).map(|l| basis[l][q] * y[l]).sum();
            x[q] += inv_diag[q] * upd;
        }
    }
    used
}

/// Dense inverse through LU factorization; refuses systems above
/// [`DENSE_LIMIT`] unknowns and numerically singular matrices.
pub fn dense_inverse(a: &CsrMatrix) -> Result<DMatrix<f64>> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::config("dense inverse needs a square matrix"));
    }
    if n > DENSE_LIMIT {
        return Err(Error::Unsupported(format!(
            "dense inverse limited to {DENSE_LIMIT} unknowns, got {n}"
        )));
    }
    let lu = a.to_dense().lu();
    let u = lu.u();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        let d = u[(i, i)].abs();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if n == 0 || !(lo > 1e-14 * hi) {
        return Err(Error::Singular);
    }
    lu.try_inverse().ok_or(Error::Singular)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_solves_immediately() {
        let a = CsrMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 4.0];
        let (x, rep) = solve(&a, &b, 1e-12, 50).unwrap();
        assert!(rep.iterations <= 1);
        assert_eq!(x, b);
    }

    #[test]
    fn random_diagonally_dominant_matches_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20;
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            let mut off = 0.0;
            for j in 0..n {
                if i != j && rng.gen_bool(0.3) {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    dense[(i, j)] = v;
                    off += v.abs();
                }
            }
            dense[(i, i)] = off + rng.gen_range(0.5..2.0);
        }
        let a = CsrMatrix::from_dense(&dense);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (x, rep) = solve(&a, &b, 1e-13, 200).unwrap();
        assert!(rep.converged);
        let exact = dense.lu().solve(&nalgebra::DVector::from_vec(b)).unwrap();
        for i in 0..n {
            assert!((x[i] - exact[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn gmres_fallback_handles_bicgstab_breakdown() {
        // a rotation: r_hat . A r = 0 on the first step
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, -1.0)]);
        let opts = SolveOptions {
            preconditioner: Preconditioner::None,
            ..SolveOptions::default()
        };
        let (x, rep) = solve_with(&a, &[1.0, 0.0], None, &opts).unwrap();
        assert!(rep.converged);
        assert!((x[0]).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rhs_and_exact_guess() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]);
        let (x, rep) = solve(&a, &[0.0, 0.0], 1e-12, 10).unwrap();
        assert_eq!((x, rep.iterations), (vec![0.0, 0.0], 0));
        let guess = [3.0, 3.0];
        let b = a.mul_vec(&guess);
        let (x, rep) = solve_with(&a, &b, Some(&guess), &SolveOptions::default()).unwrap();
        assert_eq!(rep.iterations, 0);
        assert_eq!(x, guess.to_vec());
    }

    #[test]
    fn dense_inverse_closed_form() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]);
        let inv = dense_inverse(&a).unwrap();
        let expect = [[2.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((inv[(i, j)] - expect[i][j]).abs() < 1e-15);
            }
        }
        assert_eq!(dense_inverse(&CsrMatrix::identity(3)).unwrap(), DMatrix::identity(3, 3));
        let singular = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)]);
        assert!(matches!(dense_inverse(&singular), Err(Error::Singular)));
        assert!(matches!(
            dense_inverse(&CsrMatrix::identity(DENSE_LIMIT + 1)),
            Err(Error::Unsupported(_))
        ));
    }
}
