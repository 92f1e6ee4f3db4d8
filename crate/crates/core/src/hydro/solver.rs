//! Solving `K σ = b`: dense LU, or GMRES with a block-Jacobi preconditioner
//! when blocks are compressed.

use super::assembly::InfluenceMatrices;
use crate::linalg::{gmres, inverse_norm_one_estimate, GmresOptions, LinalgError, LuFactors, C64};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub(crate) enum Factored {
    Dense(LuFactors),
    Iterative { blocks: Vec<Arc<LuFactors>>, opts: GmresOptions },
}

impl Factored {
    pub fn new(mats: &InfluenceMatrices, iterative: bool) -> Result<Self, LinalgError> {
        if !iterative {
            return Ok(Factored::Dense(LuFactors::new(mats.dense_k())?));
        }
        let mut blocks: Vec<Arc<LuFactors>> = Vec::with_capacity(mats.n_bodies);
        let mut seen: Vec<(Arc<crate::linalg::CMatrix>, Arc<LuFactors>)> = Vec::new();
        for b in 0..mats.n_bodies {
            let d = mats.diagonal_k_block(b);
            let lu = match seen.iter().find(|(m, _)| Arc::ptr_eq(m, &d)) {
                Some((_, lu)) => lu.clone(),
                None => {
                    let lu = Arc::new(LuFactors::new((*d).clone())?);
                    seen.push((d, lu.clone()));
                    lu
                }
            };
            blocks.push(lu);
        }
        Ok(Factored::Iterative { blocks, opts: GmresOptions { restart: 80, max_iterations: 800, tolerance: 1e-9 } })
    }

    /// Solver for the self block of body `b` alone; `mats` must come from
    /// [`InfluenceMatrices::diagonal_only`].
    pub fn diagonal_only(&self, b: usize, mats: &InfluenceMatrices) -> Result<Self, LinalgError> {
        match self {
            Factored::Dense(_) => Factored::new(mats, false),
            Factored::Iterative { blocks, opts } => Ok(Factored::Iterative { blocks: vec![blocks[b].clone()], opts: *opts }),
        }
    }

    fn precondition(blocks: &[Arc<LuFactors>], offsets: &[usize], v: &mut [C64], adjoint: bool) {
        for (b, lu) in blocks.iter().enumerate() {
            let part = &mut v[offsets[b]..offsets[b + 1]];
            let r = if adjoint { lu.solve_adjoint_in_place(part) } else { lu.solve_in_place(part) };
            r.expect("block preconditioner dimensions match");
        }
    }

    pub fn solve(&self, mats: &InfluenceMatrices, rhs: &[C64]) -> Result<Vec<C64>, LinalgError> {
        match self {
            Factored::Dense(lu) => {
                let mut x = rhs.to_vec();
                lu.solve_in_place(&mut x)?;
                Ok(x)
            }
            Factored::Iterative { blocks, opts } => {
                let (y, _) = gmres(|v| mats.apply_k(v), |v| Self::precondition(blocks, &mats.offsets, v, false), rhs, *opts)?;
                // Right preconditioning returns the preconditioned iterate already mapped back.
                Ok(y)
            }
        }
    }

    pub fn solve_adjoint(&self, mats: &InfluenceMatrices, rhs: &[C64]) -> Result<Vec<C64>, LinalgError> {
        match self {
            Factored::Dense(lu) => {
                let mut x = rhs.to_vec();
                lu.solve_adjoint_in_place(&mut x)?;
                Ok(x)
            }
            Factored::Iterative { blocks, opts } => {
                let (y, _) =
                    gmres(|v| mats.apply_k_adjoint(v), |v| Self::precondition(blocks, &mats.offsets, v, true), rhs, *opts)?;
                Ok(y)
            }
        }
    }

    /// 1-norm condition estimate of the full system matrix.
    pub fn condition_one(&self, mats: &InfluenceMatrices) -> Result<f64, LinalgError> {
        match self {
            Factored::Dense(lu) => lu.condition_one(),
            Factored::Iterative { .. } => {
                let inv = inverse_norm_one_estimate(
                    mats.dim(),
                    |b| {
                        let x = self.solve(mats, b)?;
                        b.copy_from_slice(&x);
                        Ok(())
                    },
                    |b| {
                        let x = self.solve_adjoint(mats, b)?;
                        b.copy_from_slice(&x);
                        Ok(())
                    },
                )?;
                Ok(mats.norm_one_k() * inv)
            }
        }
    }
}
