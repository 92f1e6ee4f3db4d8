//! Partially pivoted adaptive cross approximation of well-separated blocks.

use crate::linalg::C64;

/// `A ≈ Σ_l u_l v_lᵀ` (no conjugation).
#[derive(Debug, Clone, PartialEq)]
pub struct LowRank {
    pub rows: usize,
    pub cols: usize,
    pub u: Vec<Vec<C64>>,
    pub v: Vec<Vec<C64>>,
}

impl LowRank {
    pub fn rank(&self) -> usize {
        self.u.len()
    }

    /// `y += A x`
    pub fn matvec_acc(&self, x: &[C64], y: &mut [C64]) {
        for (u, v) in self.u.iter().zip(&self.v) {
            let s: C64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
            for (yi, ui) in y.iter_mut().zip(u) {
                *yi += ui * s;
            }
        }
    }

    /// `y += Aᴴ x`
    pub fn matvec_adjoint_acc(&self, x: &[C64], y: &mut [C64]) {
        for (u, v) in self.u.iter().zip(&self.v) {
            let s: C64 = u.iter().zip(x).map(|(a, b)| a.conj() * b).sum();
            for (yi, vi) in y.iter_mut().zip(v) {
                *yi += vi.conj() * s;
            }
        }
    }

    pub fn to_dense(&self) -> crate::linalg::CMatrix {
        let u: Vec<C64> = self.u.concat();
        let v: Vec<C64> = self.v.concat();
        crate::linalg::CMatrix::outer_sum(self.rows, self.cols, self.rank(), &u, &v)
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.u.iter().zip(&self.v).map(|(u, v)| u[i] * v[j]).sum()
    }
}

fn dotu(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Builds a low-rank approximation from row and column generators. Stops when
/// the newest cross term is below `tol` times the running Frobenius norm.
/// Returns `None` when the rank would exceed `max_rank` (caller densifies).
pub fn aca(
    rows: usize,
    cols: usize,
    tol: f64,
    max_rank: usize,
    mut row: impl FnMut(usize) -> Vec<C64>,
    mut col: impl FnMut(usize) -> Vec<C64>,
) -> Option<LowRank> {
    let mut lr = LowRank { rows, cols, u: Vec::new(), v: Vec::new() };
    if rows == 0 || cols == 0 {
        return Some(lr);
    }
    let mut used_rows = vec![false; rows];
    let mut used_cols = vec![false; cols];
    let mut pivot_row = 0;
    let mut frob2 = 0.0;
    let mut zero_rows = 0;
    loop {
        used_rows[pivot_row] = true;
        let mut r = row(pivot_row);
        for (u, v) in lr.u.iter().zip(&lr.v) {
            let ui = u[pivot_row];
            for (rj, vj) in r.iter_mut().zip(v) {
                *rj -= ui * vj;
            }
        }
        let (jstar, rmax) = r
            .iter()
            .enumerate()
            .filter(|(j, _)| !used_cols[*j])
            .map(|(j, z)| (j, z.norm()))
            .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if jstar == usize::MAX || rmax == 0.0 {
            // Residual row vanished; try another row or stop.
            zero_rows += 1;
            match used_rows.iter().position(|u| !u) {
                Some(next) if zero_rows < 4 => {
                    pivot_row = next;
                    continue;
                }
                _ => return Some(lr),
            }
        }
        used_cols[jstar] = true;
        let piv = r[jstar];
        let v: Vec<C64> = r.iter().map(|z| z / piv).collect();
        let mut u = col(jstar);
        for (uu, vv) in lr.u.iter().zip(&lr.v) {
            let vj = vv[jstar];
            for (ui, uui) in u.iter_mut().zip(uu) {
                *ui -= uui * vj;
            }
        }
        let (nu, nv) = (norm_sqr(&u), norm_sqr(&v));
        let mut cross = 0.0;
        for (uu, vv) in lr.u.iter().zip(&lr.v) {
            cross += 2.0 * (dotu(uu, &u) * dotu(vv, &v)).re;
        }
        frob2 += cross + nu * nv;
        lr.u.push(u);
        lr.v.push(v);
        let last = lr.u.last().expect("just pushed");
        if (nu * nv).sqrt() <= tol * frob2.max(0.0).sqrt() {
            return Some(lr);
        }
        if lr.rank() >= max_rank || lr.rank() >= rows.min(cols) {
            return if lr.rank() >= rows.min(cols) { Some(lr) } else { None };
        }
        pivot_row = match last
            .iter()
            .enumerate()
            .filter(|(i, _)| !used_rows[*i])
            .map(|(i, z)| (i, z.norm()))
            .fold((usize::MAX, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc })
        {
            (usize::MAX, _) => return Some(lr),
            (i, _) => i,
        };
    }
}
