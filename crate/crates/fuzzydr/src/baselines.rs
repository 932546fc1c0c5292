//! Truncated SVD (LSA) and PCA reduced representations.
//!
//! Both use a seeded randomized range finder followed by a one-sided
//! Jacobi SVD of the small projected matrix; inputs with
//! `min(n, m) <= DENSE_CUTOFF` take an exact dense path instead. PCA
//! centers columns implicitly, folding the mean subtraction into the
//! matrix-vector products so the sparse input is never densified.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::{dot, norm2, Dense};
use crate::error::{Error, Result};
use crate::fuzzy::{self, FuzzyConfig};
use crate::sparse::SparseMatrix;

pub const DENSE_CUTOFF: usize = 64;
pub const DEFAULT_OVERSAMPLE: usize = 10;
pub const DEFAULT_POWER_ITERS: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    pub u: Dense,
    pub s: Vec<f64>,
    pub v: Dense,
}

impl SvdResult {
    /// Reduced document representation U * diag(S).
    pub fn scores(&self) -> Dense {
        let mut out = self.u.clone();
        for r in 0..out.rows {
            for c in 0..out.cols {
                out.data[r * out.cols + c] *= self.s[c];
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    pub scores: Dense,
    pub loadings: Dense,
    pub column_means: Vec<f64>,
}

impl PcaResult {
    /// Project rows of a new matrix onto the fitted loadings.
    pub fn project(&self, dtm: &SparseMatrix) -> Result<Dense> {
        if dtm.n_cols() != self.loadings.rows {
            return Err(Error::DimensionMismatch("pca projection width".into()));
        }
        let k = self.loadings.cols;
        let mut out = Dense::zeros(dtm.n_rows(), k);
        // mean offset per component, subtracted from every projected row
        let offset: Vec<f64> = (0..k)
            .map(|c| dot(&self.column_means, &self.loadings.col(c)))
            .collect();
        for r in 0..dtm.n_rows() {
            let (cols, vals) = dtm.row(r);
            for c in 0..k {
                let mut acc = 0.0;
                for (&ci, &v) in cols.iter().zip(vals) {
                    acc += v * self.loadings.get(ci, c);
                }
                out.set(r, c, acc - offset[c]);
            }
        }
        Ok(out)
    }
}

/// Matrix seen through matvec / rmatvec, optionally with implicit
/// column centering.
enum LinOp<'a> {
    Raw(&'a SparseMatrix),
    Centered {
        matrix: &'a SparseMatrix,
        means: &'a [f64],
    },
}

impl LinOp<'_> {
    fn n_rows(&self) -> usize {
        match self {
            LinOp::Raw(m) => m.n_rows(),
            LinOp::Centered { matrix, .. } => matrix.n_rows(),
        }
    }

    fn n_cols(&self) -> usize {
        match self {
            LinOp::Raw(m) => m.n_cols(),
            LinOp::Centered { matrix, .. } => matrix.n_cols(),
        }
    }

    fn matvec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            LinOp::Raw(m) => m.matvec(x),
            LinOp::Centered { matrix, means } => {
                let shift = dot(means, x);
                matrix.matvec(x).into_iter().map(|y| y - shift).collect()
            }
        }
    }

    fn rmatvec(&self, y: &[f64]) -> Vec<f64> {
        match self {
            LinOp::Raw(m) => m.rmatvec(y),
            LinOp::Centered { matrix, means } => {
                let total: f64 = y.iter().sum();
                matrix
                    .rmatvec(y)
                    .iter()
                    .zip(means.iter())
                    .map(|(a, mu)| a - mu * total)
                    .collect()
            }
        }
    }

    fn to_dense(&self) -> Dense {
        match self {
            LinOp::Raw(m) => Dense::from_rows(m.to_dense()),
            LinOp::Centered { matrix, means } => {
                let mut d = Dense::from_rows(matrix.to_dense());
                for r in 0..d.rows {
                    for c in 0..d.cols {
                        d.data[r * d.cols + c] -= means[c];
                    }
                }
                d
            }
        }
    }
}

/// Thin QR by modified Gram-Schmidt, run twice for orthogonality.
/// Columns that vanish are replaced by zeros.
fn orthonormalize(a: &mut Dense) {
    for _pass in 0..2 {
        for c in 0..a.cols {
            let mut col = a.col(c);
            for prev in 0..c {
                let p = a.col(prev);
                let r = dot(&col, &p);
                for (x, y) in col.iter_mut().zip(&p) {
                    *x -= r * y;
                }
            }
            let n = norm2(&col);
            if n > 1e-300 {
                for x in &mut col {
                    *x /= n;
                }
            } else {
                col.iter_mut().for_each(|x| *x = 0.0);
            }
            a.set_col(c, &col);
        }
    }
}

/// One-sided Jacobi SVD of a dense matrix with rows >= cols preferred.
/// Returns (U, s, V) with singular values sorted descending.
fn jacobi_svd(a: &Dense) -> (Dense, Vec<f64>, Dense) {
    if a.rows < a.cols {
        let (u, s, v) = jacobi_svd(&a.transpose());
        return (v, s, u);
    }
    let n = a.rows;
    let m = a.cols;
    let mut w = a.clone();
    let mut v = Dense::zeros(m, m);
    for i in 0..m {
        v.set(i, i, 1.0);
    }
    let eps = 1e-15;
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..m {
            for j in (i + 1)..m {
                let ci = w.col(i);
                let cj = w.col(j);
                let alpha = dot(&ci, &ci);
                let beta = dot(&cj, &cj);
                let gamma = dot(&ci, &cj);
                if gamma.abs() <= eps * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for r in 0..n {
                    let wi = w.get(r, i);
                    let wj = w.get(r, j);
                    w.set(r, i, cs * wi - sn * wj);
                    w.set(r, j, sn * wi + cs * wj);
                }
                for r in 0..m {
                    let vi = v.get(r, i);
                    let vj = v.get(r, j);
                    v.set(r, i, cs * vi - sn * vj);
                    v.set(r, j, sn * vi + cs * vj);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    let norms: Vec<f64> = (0..m).map(|c| norm2(&w.col(c))).collect();
    order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap().then(x.cmp(&y)));

    let mut u = Dense::zeros(n, m);
    let mut s = Vec::with_capacity(m);
    let mut vs = Dense::zeros(m, m);
    for (new_c, &c) in order.iter().enumerate() {
        let sv = norms[c];
        s.push(sv);
        let col = w.col(c);
        if sv > 0.0 {
            u.set_col(new_c, &col.iter().map(|x| x / sv).collect::<Vec<_>>());
        }
        vs.set_col(new_c, &v.col(c));
    }
    (u, s, vs)
}

/// Make the largest-magnitude entry of each right-singular column
/// positive, flipping the paired left column to preserve the product.
fn fix_signs(u: &mut Dense, v: &mut Dense) {
    for c in 0..v.cols {
        let col = v.col(c);
        let mut best = 0usize;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[best].abs() {
                best = i;
            }
        }
        if col[best] < 0.0 {
            for r in 0..v.rows {
                v.data[r * v.cols + c] = -v.get(r, c);
            }
            for r in 0..u.rows {
                u.data[r * u.cols + c] = -u.get(r, c);
            }
        }
    }
}

fn truncated_svd_op(
    op: &LinOp,
    k: usize,
    seed: u64,
    oversample: usize,
    power_iters: usize,
) -> Result<SvdResult> {
    let n = op.n_rows();
    let m = op.n_cols();
    if k == 0 || k > n.min(m) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} out of range for a {n}x{m} matrix"
        )));
    }

    let (mut u, mut s, mut v);
    if n.min(m) <= DENSE_CUTOFF {
        (u, s, v) = jacobi_svd(&op.to_dense());
    } else {
        let l = (k + oversample).min(n.min(m));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // range finder: Y = A * Omega, orthonormalized
        let mut q = Dense::zeros(n, l);
        for c in 0..l {
            let omega: Vec<f64> = (0..m).map(|_| standard_normal(&mut rng)).collect();
            q.set_col(c, &op.matvec(&omega));
        }
        orthonormalize(&mut q);
        for _ in 0..power_iters {
            let mut z = Dense::zeros(m, l);
            for c in 0..l {
                z.set_col(c, &op.rmatvec(&q.col(c)));
            }
            orthonormalize(&mut z);
            let mut y = Dense::zeros(n, l);
            for c in 0..l {
                y.set_col(c, &op.matvec(&z.col(c)));
            }
            orthonormalize(&mut y);
            q = y;
        }
        // B^T = A^T Q (m x l); SVD(B^T) = Ubt S Vbt^T gives
        // A ~= (Q Vbt) S Ubt^T
        let mut bt = Dense::zeros(m, l);
        for c in 0..l {
            bt.set_col(c, &op.rmatvec(&q.col(c)));
        }
        let (ubt, sb, vbt) = jacobi_svd(&bt);
        u = q.matmul(&vbt);
        s = sb;
        v = ubt;
    }
    u = u.truncate_cols(k);
    v = v.truncate_cols(k);
    s.truncate(k);
    fix_signs(&mut u, &mut v);
    Ok(SvdResult { u, s, v })
}

pub fn truncated_svd(
    dtm: &SparseMatrix,
    k: usize,
    seed: u64,
    oversample: usize,
    power_iters: usize,
) -> Result<SvdResult> {
    truncated_svd_op(&LinOp::Raw(dtm), k, seed, oversample, power_iters)
}

pub fn column_means(dtm: &SparseMatrix) -> Vec<f64> {
    let n = dtm.n_rows() as f64;
    dtm.column_stats().sum.iter().map(|s| s / n).collect()
}

pub fn pca_scores(dtm: &SparseMatrix, k: usize, seed: u64) -> Result<PcaResult> {
    pca_scores_with(dtm, k, seed, DEFAULT_OVERSAMPLE, DEFAULT_POWER_ITERS)
}

pub fn pca_scores_with(
    dtm: &SparseMatrix,
    k: usize,
    seed: u64,
    oversample: usize,
    power_iters: usize,
) -> Result<PcaResult> {
    let n = dtm.n_rows();
    if n < 2 {
        return Err(Error::InvalidParameter("pca needs at least 2 rows".into()));
    }
    if k > (n - 1).min(dtm.n_cols()) {
        return Err(Error::InvalidParameter(format!(
            "k = {k} out of range for pca on a {n}x{} matrix",
            dtm.n_cols()
        )));
    }
    let means = column_means(dtm);
    let op = LinOp::Centered {
        matrix: dtm,
        means: &means,
    };
    let svd = truncated_svd_op(&op, k, seed, oversample, power_iters)?;
    Ok(PcaResult {
        scores: svd.scores(),
        loadings: svd.v,
        column_means: means,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReduceMethod {
    Fc,
    Svd,
    Pca,
}

impl ReduceMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ReduceMethod::Fc => "fc",
            ReduceMethod::Svd => "svd",
            ReduceMethod::Pca => "pca",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "fc" => Ok(ReduceMethod::Fc),
            "svd" => Ok(ReduceMethod::Svd),
            "pca" => Ok(ReduceMethod::Pca),
            other => Err(Error::InvalidParameter(format!(
                "unknown reduction method {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReduceOptions {
    pub fuzzifier: f64,
    pub seed: u64,
    pub oversample: usize,
    pub power_iters: usize,
    pub max_iterations: usize,
    pub min_improvement: f64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self {
            fuzzifier: 2.0,
            seed: 0,
            oversample: DEFAULT_OVERSAMPLE,
            power_iters: DEFAULT_POWER_ITERS,
            max_iterations: 100,
            min_improvement: 1e-5,
        }
    }
}

/// Uniform facade: the n-by-k document representation for any method
/// (memberships, U*S, or centered scores).
pub fn reduce(
    dtm: &SparseMatrix,
    method: ReduceMethod,
    k: usize,
    opts: &ReduceOptions,
) -> Result<Dense> {
    match method {
        ReduceMethod::Fc => {
            let mut cfg = FuzzyConfig::new(k, opts.fuzzifier);
            cfg.seed = opts.seed;
            cfg.max_iterations = opts.max_iterations;
            cfg.min_improvement = opts.min_improvement;
            let res = fuzzy::fit(dtm, &cfg)?;
            Ok(Dense {
                rows: res.memberships.n_rows,
                cols: res.memberships.k,
                data: res.memberships.data,
            })
        }
        ReduceMethod::Svd => {
            let svd = truncated_svd(dtm, k, opts.seed, opts.oversample, opts.power_iters)?;
            Ok(svd.scores())
        }
        ReduceMethod::Pca => {
            let pca = pca_scores_with(dtm, k, opts.seed, opts.oversample, opts.power_iters)?;
            Ok(pca.scores)
        }
    }
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller
    loop {
        let u1: f64 = rng.gen();
        if u1 > f64::MIN_POSITIVE {
            let u2: f64 = rng.gen();
            return (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frob(d: &Dense) -> f64 {
        d.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let eye = SparseMatrix::from_triplets(4, 4, (0..4).map(|i| (i, i, 1.0))).unwrap();
        let svd = truncated_svd(&eye, 4, 0, 10, 2).unwrap();
        for s in &svd.s {
            assert!((s - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_one_matrix() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0];
        let dense: Vec<Vec<f64>> = a.iter().map(|x| b.iter().map(|y| x * y).collect()).collect();
        let m = SparseMatrix::from_dense(&dense).unwrap();
        let svd = truncated_svd(&m, 2, 0, 10, 2).unwrap();
        let expected = norm2(&a) * norm2(&b);
        assert!((svd.s[0] - expected).abs() < 1e-9);
        assert!(svd.s[1].abs() < 1e-9);
    }

    #[test]
    fn svd_orthonormal_factors() {
        let m = SparseMatrix::from_dense(&[
            vec![1.0, 0.0, 2.0, 0.0],
            vec![0.0, 3.0, 0.0, 1.0],
            vec![4.0, 0.0, 0.0, 2.0],
            vec![0.0, 1.0, 5.0, 0.0],
            vec![2.0, 0.0, 1.0, 3.0],
        ])
        .unwrap();
        let svd = truncated_svd(&m, 3, 1, 10, 2).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let ui = dot(&svd.u.col(i), &svd.u.col(j));
                let vi = dot(&svd.v.col(i), &svd.v.col(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ui - expect).abs() < 1e-8, "UtU[{i}{j}] = {ui}");
                assert!((vi - expect).abs() < 1e-8, "VtV[{i}{j}] = {vi}");
            }
        }
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn pca_collinear_points_have_one_component() {
        // points on y = x
        let m = SparseMatrix::from_dense(&[
            vec![1.0, 1.0],
            vec![2.0, 2.0],
            vec![3.0, 3.0],
            vec![5.0, 5.0],
        ])
        .unwrap();
        let pca = pca_scores(&m, 1, 0).unwrap();
        // reconstruction from one component is exact
        let recon = pca.scores.matmul(&pca.loadings.transpose());
        for r in 0..4 {
            for c in 0..2 {
                let approx = recon.get(r, c) + pca.column_means[c];
                assert!((approx - m.to_dense()[r][c]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn pca_full_rank_reconstruction() {
        let m = SparseMatrix::from_dense(&[
            vec![1.0, 0.0, 2.0],
            vec![0.0, 3.0, 1.0],
            vec![4.0, 1.0, 0.0],
            vec![2.0, 2.0, 2.0],
        ])
        .unwrap();
        let k = 3; // min(n-1, m)
        let pca = pca_scores(&m, k, 0).unwrap();
        let recon = pca.scores.matmul(&pca.loadings.transpose());
        for r in 0..4 {
            for c in 0..3 {
                let approx = recon.get(r, c) + pca.column_means[c];
                assert!((approx - m.to_dense()[r][c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pca_scores_centered_and_uncorrelated() {
        let m = SparseMatrix::from_dense(&[
            vec![1.0, 0.0, 2.0, 1.0],
            vec![0.0, 3.0, 1.0, 0.0],
            vec![4.0, 1.0, 0.0, 2.0],
            vec![2.0, 2.0, 2.0, 5.0],
            vec![0.0, 1.0, 4.0, 1.0],
        ])
        .unwrap();
        let pca = pca_scores(&m, 3, 0).unwrap();
        let t = &pca.scores;
        let trace: f64 = (0..3).map(|c| dot(&t.col(c), &t.col(c))).sum();
        for c in 0..3 {
            let mean: f64 = t.col(c).iter().sum::<f64>() / t.rows as f64;
            assert!(mean.abs() < 1e-8, "column {c} mean {mean}");
            for c2 in (c + 1)..3 {
                let off = dot(&t.col(c), &t.col(c2));
                assert!(off.abs() < 1e-6 * trace, "t^T t off-diagonal {off}");
            }
        }
    }

    #[test]
    fn pca_projection_reproduces_training_scores() {
        let m = SparseMatrix::from_dense(&[
            vec![1.0, 0.0, 2.0],
            vec![0.0, 3.0, 1.0],
            vec![4.0, 1.0, 0.0],
            vec![2.0, 2.0, 2.0],
        ])
        .unwrap();
        let pca = pca_scores(&m, 2, 0).unwrap();
        let proj = pca.project(&m).unwrap();
        for (a, b) in proj.data.iter().zip(&pca.scores.data) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn svd_low_rank_error_near_optimal() {
        // random-ish sparse 12x8, k = 2; compare against exact dense path
        let mut rows = vec![vec![0.0; 8]; 12];
        let mut state = 12345u64;
        for row in rows.iter_mut() {
            for v in row.iter_mut() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                if state >> 60 < 6 {
                    *v = ((state >> 32) % 9) as f64;
                }
            }
        }
        let m = SparseMatrix::from_dense(&rows).unwrap();
        let k = 2;
        let svd = truncated_svd(&m, k, 3, 10, 2).unwrap();
        // reconstruction error
        let recon = svd.scores().matmul(&svd.v.transpose());
        let dense = Dense::from_rows(m.to_dense());
        let mut diff = dense.clone();
        for (d, r) in diff.data.iter_mut().zip(&recon.data) {
            *d -= r;
        }
        // optimal error = sqrt(sum of squared trailing singular values)
        let full = jacobi_svd(&dense);
        let opt: f64 = full.1[k..].iter().map(|s| s * s).sum::<f64>().sqrt();
        assert!(frob(&diff) <= opt * 1.05 + 1e-9);
    }

    #[test]
    fn reduce_facade_shapes() {
        let m = SparseMatrix::from_dense(&[
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0],
            vec![0.0, 2.0, 1.0, 1.0],
        ])
        .unwrap();
        for method in [ReduceMethod::Fc, ReduceMethod::Svd, ReduceMethod::Pca] {
            let out = reduce(&m, method, 2, &ReduceOptions::default()).unwrap();
            assert_eq!((out.rows, out.cols), (5, 2));
            assert!(out.data.iter().all(|x| x.is_finite()));
        }
    }

    #[test]
    fn k_out_of_range_rejected() {
        let m = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(truncated_svd(&m, 3, 0, 10, 2).is_err());
        assert!(pca_scores(&m, 2, 0).is_err()); // k > n-1
    }
}
