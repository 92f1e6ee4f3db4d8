//! Dense complex linear algebra on column-major storage. LU factorisation and
//! condition estimates go through LAPACK; GMRES is implemented here.

use num_complex::Complex64;
use std::os::raw::{c_char, c_int};

pub type C64 = Complex64;

extern "C" {
    fn zgetrf_(m: *const c_int, n: *const c_int, a: *mut C64, lda: *const c_int, ipiv: *mut c_int, info: *mut c_int);
    fn zgetrs_(
        trans: *const c_char,
        n: *const c_int,
        nrhs: *const c_int,
        a: *const C64,
        lda: *const c_int,
        ipiv: *const c_int,
        b: *mut C64,
        ldb: *const c_int,
        info: *mut c_int,
        trans_len: usize,
    );
    fn zgemv_(
        trans: *const c_char,
        m: *const c_int,
        n: *const c_int,
        alpha: *const C64,
        a: *const C64,
        lda: *const c_int,
        x: *const C64,
        incx: *const c_int,
        beta: *const C64,
        y: *mut C64,
        incy: *const c_int,
        trans_len: usize,
    );
    fn zgemm_(
        transa: *const c_char,
        transb: *const c_char,
        m: *const c_int,
        n: *const c_int,
        k: *const c_int,
        alpha: *const C64,
        a: *const C64,
        lda: *const c_int,
        b: *const C64,
        ldb: *const c_int,
        beta: *const C64,
        c: *mut C64,
        ldc: *const c_int,
        transa_len: usize,
        transb_len: usize,
    );
    fn zgecon_(
        norm: *const c_char,
        n: *const c_int,
        a: *const C64,
        lda: *const c_int,
        anorm: *const f64,
        rcond: *mut f64,
        work: *mut C64,
        rwork: *mut f64,
        info: *mut c_int,
        norm_len: usize,
    );
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is exactly singular at pivot {0}")]
    Singular(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("LAPACK routine {routine} returned info = {info}")]
    Lapack { routine: &'static str, info: i32 },
    #[error("GMRES did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
}

/// Column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn column(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn column_mut(&mut self, j: usize) -> &mut [C64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// `y = A x`
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.rows];
        self.matvec_acc(x, &mut y);
        y
    }

    /// `y += A x`
    pub fn matvec_acc(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.cols);
        assert_eq!(y.len(), self.rows);
        self.gemv(b'N', x, y);
    }

    /// `y += Aᴴ x`
    pub fn matvec_adjoint_acc(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.rows);
        assert_eq!(y.len(), self.cols);
        self.gemv(b'C', x, y);
    }

    fn gemv(&self, trans: u8, x: &[C64], y: &mut [C64]) {
        if self.rows == 0 || self.cols == 0 {
            return;
        }
        let (m, n, lda, inc) = (self.rows as c_int, self.cols as c_int, self.rows as c_int, 1 as c_int);
        let one = C64::new(1.0, 0.0);
        // SAFETY: dimensions were checked by the callers; BLAS reads `a`, `x` and updates `y` in place.
        unsafe {
            zgemv_(&(trans as c_char), &m, &n, &one, self.data.as_ptr(), &lda, x.as_ptr(), &inc, &one, y.as_mut_ptr(), &inc, 1);
        }
    }

    /// `A Bᵀ` for column-major `a` (`m × r`) and `b` (`n × r`), via BLAS.
    pub fn outer_sum(m: usize, n: usize, r: usize, a: &[C64], b: &[C64]) -> Self {
        assert_eq!(a.len(), m * r);
        assert_eq!(b.len(), n * r);
        let mut c = Self::zeros(m, n);
        if m == 0 || n == 0 || r == 0 {
            return c;
        }
        let (mi, ni, ri) = (m as c_int, n as c_int, r as c_int);
        let (one, zero) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0));
        // SAFETY: buffers have the asserted sizes and leading dimensions.
        unsafe {
            zgemm_(
                &(b'N' as c_char),
                &(b'T' as c_char),
                &mi,
                &ni,
                &ri,
                &one,
                a.as_ptr(),
                &mi,
                b.as_ptr(),
                &ni,
                &zero,
                c.data.as_mut_ptr(),
                &mi,
                1,
                1,
            );
        }
        c
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| self.column(j).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let (x, y) = (other.column(j).to_vec(), out.column_mut(j));
            self.matvec_acc(&x, y);
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[j * self.rows + i]
    }
}

fn to_int(n: usize) -> Result<c_int, LinalgError> {
    c_int::try_from(n).map_err(|_| LinalgError::Dimension(format!("{n} exceeds LAPACK integer range")))
}

/// LU factors of a square matrix with the 1-norm of the original kept for
/// condition estimates.
#[derive(Debug, Clone)]
pub struct LuFactors {
    lu: CMatrix,
    ipiv: Vec<c_int>,
    norm_one: f64,
}

impl LuFactors {
    pub fn new(mut a: CMatrix) -> Result<Self, LinalgError> {
        if a.rows != a.cols {
            return Err(LinalgError::Dimension(format!("{}x{} is not square", a.rows, a.cols)));
        }
        let n = to_int(a.rows)?;
        let norm_one = a.norm_one();
        let mut ipiv = vec![0; a.rows];
        let mut info = 0;
        if a.rows > 0 {
            // SAFETY: buffers are sized n*n and n; LAPACK reads/writes only within them.
            unsafe { zgetrf_(&n, &n, a.data.as_mut_ptr(), &n, ipiv.as_mut_ptr(), &mut info) };
        }
        match info {
            0 => Ok(Self { lu: a, ipiv, norm_one }),
            i if i > 0 => Err(LinalgError::Singular(i as usize - 1)),
            i => Err(LinalgError::Lapack { routine: "zgetrf", info: i }),
        }
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    fn solve_with(&self, trans: u8, b: &mut [C64]) -> Result<(), LinalgError> {
        let n = self.dim();
        if n == 0 {
            return Ok(());
        }
        if b.len() % n != 0 {
            return Err(LinalgError::Dimension(format!("rhs length {} not a multiple of {n}", b.len())));
        }
        let nrhs = to_int(b.len() / n)?;
        let ni = to_int(n)?;
        let mut info = 0;
        let t = trans as c_char;
        // SAFETY: lu is n*n, ipiv n, b holds nrhs columns of length n.
        unsafe {
            zgetrs_(&t, &ni, &nrhs, self.lu.data.as_ptr(), &ni, self.ipiv.as_ptr(), b.as_mut_ptr(), &ni, &mut info, 1)
        };
        if info != 0 {
            return Err(LinalgError::Lapack { routine: "zgetrs", info });
        }
        Ok(())
    }

    /// Solves `A X = B` in place; `b` holds one or more stacked columns.
    pub fn solve_in_place(&self, b: &mut [C64]) -> Result<(), LinalgError> {
        self.solve_with(b'N', b)
    }

    /// Solves `Aᴴ X = B` in place.
    pub fn solve_adjoint_in_place(&self, b: &mut [C64]) -> Result<(), LinalgError> {
        self.solve_with(b'C', b)
    }

    /// Reciprocal 1-norm condition number estimate.
    pub fn rcond(&self) -> Result<f64, LinalgError> {
        let n = self.dim();
        if n == 0 {
            return Ok(1.0);
        }
        let ni = to_int(n)?;
        let mut work = vec![C64::new(0.0, 0.0); 2 * n];
        let mut rwork = vec![0.0; 2 * n];
        let mut rcond = 0.0;
        let mut info = 0;
        let norm = b'1' as c_char;
        // SAFETY: workspace sizes follow the LAPACK documentation (2n each).
        unsafe {
            zgecon_(
                &norm,
                &ni,
                self.lu.data.as_ptr(),
                &ni,
                &self.norm_one,
                &mut rcond,
                work.as_mut_ptr(),
                rwork.as_mut_ptr(),
                &mut info,
                1,
            )
        };
        if info != 0 {
            return Err(LinalgError::Lapack { routine: "zgecon", info });
        }
        Ok(rcond)
    }

    /// 1-norm condition number estimate, infinite when singular to working precision.
    pub fn condition_one(&self) -> Result<f64, LinalgError> {
        let r = self.rcond()?;
        Ok(if r > 0.0 { 1.0 / r } else { f64::INFINITY })
    }
}

/// Solves a square system directly.
pub fn solve(a: &CMatrix, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
    let lu = LuFactors::new(a.clone())?;
    let mut x = b.to_vec();
    lu.solve_in_place(&mut x)?;
    Ok(x)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Settings for restarted GMRES.
#[derive(Debug, Clone, Copy)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { restart: 60, max_iterations: 600, tolerance: 1e-10 }
    }
}

/// Right-preconditioned restarted GMRES: solves `A x = b` with `A` applied by
/// `apply` and `M⁻¹` by `precond`. Returns the solution and iteration count.
pub fn gmres(
    mut apply: impl FnMut(&[C64]) -> Vec<C64>,
    mut precond: impl FnMut(&mut [C64]),
    b: &[C64],
    opts: GmresOptions,
) -> Result<(Vec<C64>, usize), LinalgError> {
    let n = b.len();
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![zero; n];
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < opts.max_iterations {
        let ax = apply(&x);
        let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r);
        residual = beta / bnorm;
        if residual <= opts.tolerance {
            return Ok((x, iterations));
        }
        let m = opts.restart.min(n.max(1));
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut z_store: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut h = vec![vec![zero; m]; m + 1];
        let (mut cs, mut sn) = (vec![zero; m], vec![zero; m]);
        let mut g = vec![zero; m + 1];
        g[0] = C64::new(beta, 0.0);
        let mut used = 0;
        for j in 0..m {
            let mut zj = v[j].clone();
            precond(&mut zj);
            let mut w = apply(&zj);
            z_store.push(zj);
            for (i, vi) in v.iter().enumerate() {
                let hij = dot(vi, &w);
                h[i][j] = hij;
                for (wk, vk) in w.iter_mut().zip(vi) {
                    *wk -= hij * vk;
                }
            }
            let hn = norm2(&w);
            h[j + 1][j] = C64::new(hn, 0.0);
            for i in 0..j {
                let t = cs[i].conj() * h[i][j] + sn[i].conj() * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let den = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if den == 0.0 {
                cs[j] = C64::new(1.0, 0.0);
                sn[j] = zero;
            } else {
                cs[j] = a / den;
                sn[j] = bb / den;
            }
            h[j][j] = cs[j].conj() * a + sn[j].conj() * bb;
            h[j + 1][j] = zero;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j].conj() * g[j];
            used = j + 1;
            iterations += 1;
            residual = g[j + 1].norm() / bnorm;
            if residual <= opts.tolerance || hn == 0.0 || iterations >= opts.max_iterations {
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        let mut y = vec![zero; used];
        for i in (0..used).rev() {
            let mut s = g[i];
            for k in i + 1..used {
                s -= h[i][k] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, zi) in x.iter_mut().zip(&z_store[k]) {
                *xi += yk * zi;
            }
        }
    }
    let ax = apply(&x);
    let r: Vec<C64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let final_res = norm2(&r) / bnorm;
    if final_res <= opts.tolerance * 10.0 {
        Ok((x, iterations))
    } else {
        Err(LinalgError::NoConvergence { residual: final_res.min(residual.max(final_res)), iterations })
    }
}

/// Hager–Higham estimate of `‖A⁻¹‖₁` given solvers for `A` and `Aᴴ`.
pub fn inverse_norm_one_estimate(
    n: usize,
    mut solve: impl FnMut(&mut [C64]) -> Result<(), LinalgError>,
    mut solve_adjoint: impl FnMut(&mut [C64]) -> Result<(), LinalgError>,
) -> Result<f64, LinalgError> {
    if n == 0 {
        return Ok(0.0);
    }
    let zero = C64::new(0.0, 0.0);
    let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
    let mut estimate = 0.0;
    let mut last_index = usize::MAX;
    for _ in 0..5 {
        let input = x.clone();
        solve(&mut x)?;
        let gamma: f64 = x.iter().map(|z| z.norm()).sum();
        if gamma <= estimate {
            break;
        }
        estimate = gamma;
        let mut xi: Vec<C64> = x.iter().map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) }).collect();
        solve_adjoint(&mut xi)?;
        let (j, zmax) = xi.iter().enumerate().map(|(i, z)| (i, z.norm())).fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let ztx: f64 = xi.iter().zip(&input).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= ztx || j == last_index {
            break;
        }
        last_index = j;
        x = vec![zero; n];
        x[j] = C64::new(1.0, 0.0);
    }
    // Higham's alternating-sign probe guards against underestimates.
    let mut alt: Vec<C64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(s * (1.0 + i as f64 / (n as f64 - 1.0).max(1.0)), 0.0)
        })
        .collect();
    solve(&mut alt)?;
    let alt_est = 2.0 * alt.iter().map(|z| z.norm()).sum::<f64>() / (3.0 * n as f64);
    Ok(estimate.max(alt_est))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn test_matrix(n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |i, j| {
            let base = c(((i * 7 + j * 3) % 11) as f64 / 11.0, ((i * 5 + j) % 13) as f64 / 13.0 - 0.5);
            if i == j {
                base + c(n as f64 * 0.3, 0.0)
            } else {
                base
            }
        })
    }

    #[test]
    fn lu_solve_recovers_solution() {
        let a = test_matrix(17);
        let x: Vec<C64> = (0..17).map(|i| c(i as f64, -(i as f64) * 0.5)).collect();
        let b = a.matvec(&x);
        let y = solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn adjoint_solve_matches_explicit_adjoint() {
        let a = test_matrix(9);
        let lu = LuFactors::new(a.clone()).unwrap();
        let x: Vec<C64> = (0..9).map(|i| c(1.0, i as f64)).collect();
        let mut b = vec![c(0.0, 0.0); 9];
        a.matvec_adjoint_acc(&x, &mut b);
        lu.solve_adjoint_in_place(&mut b).unwrap();
        for (u, v) in x.iter().zip(&b) {
            assert!((u - v).norm() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CMatrix::from_fn(3, 3, |i, _| c(i as f64, 0.0));
        assert!(matches!(LuFactors::new(a), Err(LinalgError::Singular(_))));
    }

    #[test]
    fn condition_estimate_matches_exact_for_diagonal() {
        let a = CMatrix::from_fn(4, 4, |i, j| if i == j { c(10f64.powi(i as i32), 0.0) } else { c(0.0, 0.0) });
        let k = LuFactors::new(a).unwrap().condition_one().unwrap();
        assert!((k - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn condition_estimates_agree_with_explicit_inverse() {
        let a = test_matrix(12);
        let lu = LuFactors::new(a.clone()).unwrap();
        let mut inv = CMatrix::identity(12);
        lu.solve_in_place(&mut inv.data).unwrap();
        let exact = a.norm_one() * inv.norm_one();
        let lapack = lu.condition_one().unwrap();
        let hh = a.norm_one()
            * inverse_norm_one_estimate(12, |b| lu.solve_in_place(b), |b| lu.solve_adjoint_in_place(b)).unwrap();
        assert!(lapack <= exact * (1.0 + 1e-10) && lapack >= exact / 3.0);
        assert!(hh <= exact * (1.0 + 1e-10) && hh >= exact / 3.0);
    }

    #[test]
    fn gmres_matches_direct_solve() {
        let a = test_matrix(40);
        let b: Vec<C64> = (0..40).map(|i| c((i as f64).sin(), 1.0)).collect();
        let direct = solve(&a, &b).unwrap();
        let opts = GmresOptions { restart: 8, max_iterations: 400, tolerance: 1e-12 };
        let (x, _) = gmres(|v| a.matvec(v), |_| {}, &b, opts).unwrap();
        for (u, v) in x.iter().zip(&direct) {
            assert!((u - v).norm() < 1e-9);
        }
    }
}
