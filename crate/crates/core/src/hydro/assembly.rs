//! Influence matrices with collocation at panel centroids `x_i` and constant
//! unknowns per panel.
//!
//! `S_ij = ∫_j G(x_i, ξ) dS` in both formulations. The system matrix `K` is
//! `½δ_ij + ∫_j ∂G(x_i, ξ)/∂n_i dS` for sources and
//! `½δ_ij + ∫_j ∂G(x_i, ξ)/∂n_ξ dS` for the potential formulation.

use super::aca::{aca, LowRank};
use super::green::wave_term;
use super::panel::{cross, dot, norm, rankine, sub, Quad, MINUS_INV_4PI};
use crate::special::gauss_legendre;
use crate::linalg::{CMatrix, C64};
use crate::mesh::PanelMesh;
use rayon::prelude::*;
use std::sync::Arc;

/// Panel data for every body, flattened.
#[derive(Debug, Clone)]
pub(crate) struct PanelSet {
    pub quads: Vec<Quad>,
    pub images: Vec<Quad>,
    /// Start of each body's panels; one extra entry holding the total.
    pub offsets: Vec<usize>,
}

impl PanelSet {
    pub fn new(meshes: &[PanelMesh]) -> Self {
        let mut quads = Vec::new();
        let mut offsets = vec![0];
        for m in meshes {
            for p in 0..m.panel_count() {
                quads.push(Quad::new(m.panel_vertices(p)));
            }
            offsets.push(quads.len());
        }
        let images = quads.iter().map(Quad::reflected).collect();
        Self { quads, images, offsets }
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn body_range(&self, b: usize) -> std::ops::Range<usize> {
        self.offsets[b]..self.offsets[b + 1]
    }
}

/// Which boundary integral equation the system matrix discretises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Source distribution: `K σ = ∂φ/∂n`, then `φ = S σ`.
    Source,
    /// Green's identity: `(½I + D) φ = S ∂φ/∂n`.
    #[default]
    Potential,
}

/// Kernels of source panel `j` seen from point `p`: `∫G`, `∫∇_p G` and
/// `∫∂G/∂n_ξ`. `on_panel` marks `p` at the panel's own centroid, where the
/// normal parts are principal values.
pub(crate) fn point_kernels(set: &PanelSet, k: f64, p: [f64; 3], j: usize, on_panel: bool) -> (C64, [C64; 3], C64) {
    let (r0, g0) = rankine(p, &set.quads[j], on_panel);
    let (r1, g1) = rankine(p, &set.images[j], false);
    let (w, gw) = wave_integral(k, p, &set.quads[j], &set.images[j]);
    let s = (C64::new(r0 + r1, 0.0) + w) * MINUS_INV_4PI;
    let grad: [C64; 3] = std::array::from_fn(|c| (C64::new(g0[c] + g1[c], 0.0) + gw[c]) * MINUS_INV_4PI);
    // The Rankine part is odd in the separation; image and wave parts depend
    // on z + ζ, so only their horizontal components flip.
    let n = set.quads[j].normal;
    let gr = -dot(g0, n) - g1[0] * n[0] - g1[1] * n[1] + g1[2] * n[2];
    let gwn = -gw[0] * n[0] - gw[1] * n[1] + gw[2] * n[2];
    (s, grad, (C64::new(gr, 0.0) + gwn) * MINUS_INV_4PI)
}

/// `(S_ij, system_ij)` for field panel `i` and source panel `j`.
#[inline]
pub(crate) fn influence(set: &PanelSet, k: f64, form: Formulation, i: usize, j: usize) -> (C64, C64) {
    let qi = &set.quads[i];
    let (s, grad, dn_source) = point_kernels(set, k, qi.centroid, j, i == j);
    let mut m = match form {
        Formulation::Source => grad[0] * qi.normal[0] + grad[1] * qi.normal[1] + grad[2] * qi.normal[2],
        Formulation::Potential => dn_source,
    };
    if i == j {
        m += 0.5;
    }
    (s, m)
}

/// Area integral of the wave term and its gradient over a panel. Close to the
/// image the logarithmic behaviour needs a tensor rule; otherwise the centroid
/// value times the area suffices.
pub(crate) fn wave_integral(k: f64, p: [f64; 3], q: &Quad, image: &Quad) -> (C64, [C64; 3]) {
    let d = norm(sub(p, image.centroid));
    if d >= WAVE_EXACT_WITHIN * q.diameter {
        let (w, g) = wave_term(k, p, q.centroid);
        return (w * q.area, g.map(|z| z * q.area));
    }
    let gl = gauss_legendre(WAVE_ORDER);
    let v = &q.v;
    let mut acc = C64::new(0.0, 0.0);
    let mut grad = [C64::new(0.0, 0.0); 3];
    for (&s, &ws) in gl.nodes.iter().zip(&gl.weights) {
        for (&t, &wt) in gl.nodes.iter().zip(&gl.weights) {
            let sh = [(1.0 - s) * (1.0 - t), (1.0 + s) * (1.0 - t), (1.0 + s) * (1.0 + t), (1.0 - s) * (1.0 + t)];
            let ds = [-(1.0 - t), 1.0 - t, 1.0 + t, -(1.0 + t)];
            let dt = [-(1.0 - s), -(1.0 + s), 1.0 + s, 1.0 - s];
            let mut x = [0.0; 3];
            let mut xs = [0.0; 3];
            let mut xt = [0.0; 3];
            for c in 0..4 {
                for i in 0..3 {
                    x[i] += 0.25 * sh[c] * v[c][i];
                    xs[i] += 0.25 * ds[c] * v[c][i];
                    xt[i] += 0.25 * dt[c] * v[c][i];
                }
            }
            let w = ws * wt * norm(cross(xs, xt));
            let (val, g) = wave_term(k, p, x);
            acc += val * w;
            for i in 0..3 {
                grad[i] += g[i] * w;
            }
        }
    }
    (acc, grad)
}

const WAVE_ORDER: usize = 4;
/// Image distance, in panel diameters, inside which the wave term is
/// integrated by the tensor rule. Larger values changed A and B by < 0.2%.
const WAVE_EXACT_WITHIN: f64 = 1.0;

/// Storage for one body-pair block.
#[derive(Debug, Clone)]
pub enum Block {
    Dense(Arc<CMatrix>),
    LowRank(LowRank),
}

impl Block {
    fn matvec_acc(&self, x: &[C64], y: &mut [C64]) {
        match self {
            Block::Dense(m) => m.matvec_acc(x, y),
            Block::LowRank(l) => l.matvec_acc(x, y),
        }
    }

    fn matvec_adjoint_acc(&self, x: &[C64], y: &mut [C64]) {
        match self {
            Block::Dense(m) => m.matvec_adjoint_acc(x, y),
            Block::LowRank(l) => l.matvec_adjoint_acc(x, y),
        }
    }

    pub fn is_low_rank(&self) -> bool {
        matches!(self, Block::LowRank(_))
    }

    fn entry(&self, i: usize, j: usize) -> C64 {
        match self {
            Block::Dense(m) => m[(i, j)],
            Block::LowRank(l) => l.entry(i, j),
        }
    }
}

/// ACA settings. Blocks are compressed when body centres are farther apart
/// than `distance_factor` radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcaSettings {
    pub tolerance: f64,
    pub distance_factor: f64,
}

impl Default for AcaSettings {
    fn default() -> Self {
        Self { tolerance: 0.1, distance_factor: 7.0 }
    }
}

/// Block-structured `S` and `K` for all bodies.
#[derive(Debug, Clone)]
pub struct InfluenceMatrices {
    pub offsets: Vec<usize>,
    pub n_bodies: usize,
    /// Row-major over body pairs `(a, b)`: field body `a`, source body `b`.
    pub s_blocks: Vec<Block>,
    pub k_blocks: Vec<Block>,
    pub wavenumber: f64,
}

fn dense_pair(set: &PanelSet, k: f64, form: Formulation, a: usize, b: usize) -> (CMatrix, CMatrix) {
    let ra = set.body_range(a);
    let rb = set.body_range(b);
    let (m, n) = (ra.len(), rb.len());
    let mut s = CMatrix::zeros(m, n);
    let mut kk = CMatrix::zeros(m, n);
    s.data
        .par_chunks_mut(m)
        .zip(kk.data.par_chunks_mut(m))
        .enumerate()
        .for_each(|(jl, (sc, kc))| {
            let j = rb.start + jl;
            for (il, (se, ke)) in sc.iter_mut().zip(kc.iter_mut()).enumerate() {
                let (sv, kv) = influence(set, k, form, ra.start + il, j);
                *se = sv;
                *ke = kv;
            }
        });
    (s, kk)
}

impl InfluenceMatrices {
    /// Assembles all blocks. `aca = None` keeps every block dense.
    pub(crate) fn assemble(
        meshes: &[PanelMesh],
        set: &PanelSet,
        k: f64,
        form: Formulation,
        aca_settings: Option<AcaSettings>,
    ) -> Self {
        let nb = meshes.len();
        let mut s_blocks: Vec<Option<Block>> = vec![None; nb * nb];
        let mut k_blocks: Vec<Option<Block>> = vec![None; nb * nb];
        // Self blocks, shared between bodies that are translates of each other.
        let mut templates: Vec<(usize, Arc<CMatrix>, Arc<CMatrix>)> = Vec::new();
        for b in 0..nb {
            let found = templates.iter().find(|(t, _, _)| meshes[b].is_translate_of(&meshes[*t]));
            let (s, kk) = match found {
                Some((_, s, kk)) => (s.clone(), kk.clone()),
                None => {
                    let (s, kk) = dense_pair(set, k, form, b, b);
                    let (s, kk) = (Arc::new(s), Arc::new(kk));
                    templates.push((b, s.clone(), kk.clone()));
                    (s, kk)
                }
            };
            s_blocks[b * nb + b] = Some(Block::Dense(s));
            k_blocks[b * nb + b] = Some(Block::Dense(kk));
        }
        for a in 0..nb {
            for b in 0..nb {
                if a == b {
                    continue;
                }
                let admissible = aca_settings.filter(|st| {
                    let (ca, cb) = (meshes[a].center, meshes[b].center);
                    let dist = (ca[0] - cb[0]).hypot(ca[1] - cb[1]);
                    dist > st.distance_factor * meshes[a].radius.max(meshes[b].radius)
                });
                let compressed = admissible.and_then(|st| {
                    let ra = set.body_range(a);
                    let rb = set.body_range(b);
                    let (m, n) = (ra.len(), rb.len());
                    let max_rank = (m.min(n) / 2).max(1);
                    let row = |which: usize| {
                        let (ra, rb) = (ra.clone(), rb.clone());
                        move |i: usize| -> Vec<C64> {
                            rb.clone()
                                .map(|j| {
                                    let e = influence(set, k, form, ra.start + i, j);
                                    if which == 0 { e.0 } else { e.1 }
                                })
                                .collect()
                        }
                    };
                    let col = |which: usize| {
                        let (ra, rb) = (ra.clone(), rb.clone());
                        move |j: usize| -> Vec<C64> {
                            ra.clone()
                                .map(|i| {
                                    let e = influence(set, k, form, i, rb.start + j);
                                    if which == 0 { e.0 } else { e.1 }
                                })
                                .collect()
                        }
                    };
                    let s = aca(m, n, st.tolerance, max_rank, row(0), col(0));
                    let kk = aca(m, n, st.tolerance, max_rank, row(1), col(1));
                    match (s, kk) {
                        (Some(s), Some(kk)) => Some((s, kk)),
                        _ => {
                            log::warn!("ACA did not converge on block ({a}, {b}); stored dense");
                            None
                        }
                    }
                });
                let (sb, kb) = match compressed {
                    Some((s, kk)) => (Block::LowRank(s), Block::LowRank(kk)),
                    None => {
                        let (s, kk) = dense_pair(set, k, form, a, b);
                        (Block::Dense(Arc::new(s)), Block::Dense(Arc::new(kk)))
                    }
                };
                s_blocks[a * nb + b] = Some(sb);
                k_blocks[a * nb + b] = Some(kb);
            }
        }
        Self {
            offsets: set.offsets.clone(),
            n_bodies: nb,
            s_blocks: s_blocks.into_iter().map(|b| b.expect("every block assembled")).collect(),
            k_blocks: k_blocks.into_iter().map(|b| b.expect("every block assembled")).collect(),
            wavenumber: k,
        }
    }

    /// The self block of body `b` as a one-body system.
    pub fn diagonal_only(&self, b: usize) -> Self {
        let nb = self.n_bodies;
        let n = self.offsets[b + 1] - self.offsets[b];
        Self {
            offsets: vec![0, n],
            n_bodies: 1,
            s_blocks: vec![self.s_blocks[b * nb + b].clone()],
            k_blocks: vec![self.k_blocks[b * nb + b].clone()],
            wavenumber: self.wavenumber,
        }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    fn apply(blocks: &[Block], offsets: &[usize], nb: usize, x: &[C64], adjoint: bool) -> Vec<C64> {
        let n = *offsets.last().unwrap_or(&0);
        let mut y = vec![C64::new(0.0, 0.0); n];
        let parts: Vec<Vec<C64>> = (0..nb)
            .into_par_iter()
            .map(|a| {
                let ra = offsets[a]..offsets[a + 1];
                let mut ya = vec![C64::new(0.0, 0.0); ra.len()];
                for b in 0..nb {
                    let rb = offsets[b]..offsets[b + 1];
                    if adjoint {
                        // Row block a of Aᴴ is the adjoint of column block a of A.
                        blocks[b * nb + a].matvec_adjoint_acc(&x[rb], &mut ya);
                    } else {
                        blocks[a * nb + b].matvec_acc(&x[rb], &mut ya);
                    }
                }
                ya
            })
            .collect();
        for (a, ya) in parts.into_iter().enumerate() {
            y[offsets[a]..offsets[a + 1]].copy_from_slice(&ya);
        }
        y
    }

    pub fn apply_k(&self, x: &[C64]) -> Vec<C64> {
        Self::apply(&self.k_blocks, &self.offsets, self.n_bodies, x, false)
    }

    pub fn apply_k_adjoint(&self, x: &[C64]) -> Vec<C64> {
        Self::apply(&self.k_blocks, &self.offsets, self.n_bodies, x, true)
    }

    pub fn apply_s(&self, x: &[C64]) -> Vec<C64> {
        Self::apply(&self.s_blocks, &self.offsets, self.n_bodies, x, false)
    }

    fn densify(&self, blocks: &[Block]) -> CMatrix {
        let n = self.dim();
        let nb = self.n_bodies;
        let mut out = CMatrix::zeros(n, n);
        for a in 0..nb {
            for b in 0..nb {
                let blk = &blocks[a * nb + b];
                for (jl, j) in (self.offsets[b]..self.offsets[b + 1]).enumerate() {
                    for (il, i) in (self.offsets[a]..self.offsets[a + 1]).enumerate() {
                        out[(i, j)] = blk.entry(il, jl);
                    }
                }
            }
        }
        out
    }

    pub fn dense_k(&self) -> CMatrix {
        self.densify(&self.k_blocks)
    }

    pub fn dense_s(&self) -> CMatrix {
        self.densify(&self.s_blocks)
    }

    pub fn is_low_rank(&self, a: usize, b: usize) -> bool {
        self.k_blocks[a * self.n_bodies + b].is_low_rank()
    }

    pub fn diagonal_k_block(&self, b: usize) -> Arc<CMatrix> {
        match &self.k_blocks[b * self.n_bodies + b] {
            Block::Dense(m) => m.clone(),
            Block::LowRank(_) => unreachable!("self blocks are always dense"),
        }
    }

    /// 1-norm of `K` computed from its blocks.
    pub fn norm_one_k(&self) -> f64 {
        let nb = self.n_bodies;
        let mut best: f64 = 0.0;
        for b in 0..nb {
            let nbcols = self.offsets[b + 1] - self.offsets[b];
            let mut sums = vec![0.0; nbcols];
            for a in 0..nb {
                let dense = match &self.k_blocks[a * nb + b] {
                    Block::Dense(m) => m.clone(),
                    Block::LowRank(l) => Arc::new(l.to_dense()),
                };
                for (j, sj) in sums.iter_mut().enumerate() {
                    *sj += dense.column(j).iter().map(|z| z.norm()).sum::<f64>();
                }
            }
            best = sums.into_iter().fold(best, f64::max);
        }
        best
    }
}
