//! Fuzzy spherical k-means over the unit sphere with cosine
//! dissimilarity. The fitted n-by-k membership matrix is the reduced
//! document representation.
//!
//! The alternating scheme iterates the two closed-form coordinate
//! minimizers: memberships for fixed prototypes, then prototypes for
//! fixed memberships. Convergence is declared when the relative
//! improvement of the spherical criterion
//! `sum_f sum_j mu_fj^q (1 - cos(d_j, v_f))`
//! between consecutive iterations drops below `min_improvement`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const ROW_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMethod {
    /// k-means++-style seeding with cosine dissimilarity.
    KmeansppCosine,
    /// k distinct documents chosen uniformly at random.
    RandomDocs,
}

#[derive(Debug, Clone)]
pub struct FuzzyConfig {
    pub k: usize,
    pub fuzzifier: f64,
    pub max_iterations: usize,
    pub min_improvement: f64,
    pub seed: u64,
    pub init: InitMethod,
}

impl FuzzyConfig {
    pub fn new(k: usize, fuzzifier: f64) -> Self {
        Self {
            k,
            fuzzifier,
            max_iterations: 100,
            min_improvement: 1e-5,
            seed: 0,
            init: InitMethod::KmeansppCosine,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidParameter("k must be >= 2".into()));
        }
        if self.fuzzifier <= 1.0 {
            return Err(Error::InvalidParameter(
                "fuzzifier q must be > 1".into(),
            ));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter("max_iterations must be >= 1".into()));
        }
        if !(self.min_improvement >= 0.0) {
            return Err(Error::InvalidParameter(
                "min_improvement must be >= 0 (0 disables early stopping)".into(),
            ));
        }
        Ok(())
    }
}

/// Row-major n-by-k row-stochastic matrix of membership degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix {
    pub n_rows: usize,
    pub k: usize,
    pub data: Vec<f64>,
}

impl MembershipMatrix {
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.k..(j + 1) * self.k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.k)
    }

    /// Entries in [0,1], rows summing to 1 within tolerance.
    pub fn validate(&self) -> Result<()> {
        if self.data.len() != self.n_rows * self.k {
            return Err(Error::DimensionMismatch("membership storage".into()));
        }
        for (j, row) in self.rows().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidMatrix(format!(
                    "membership row {j} sums to {sum}"
                )));
            }
            if row.iter().any(|&m| !(0.0..=1.0 + ROW_SUM_TOL).contains(&m)) {
                return Err(Error::InvalidMatrix(format!(
                    "membership row {j} outside [0,1]"
                )));
            }
        }
        Ok(())
    }
}

/// k unit-norm prototype vectors, row-major k-by-m.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototypes {
    pub k: usize,
    pub n_cols: usize,
    pub data: Vec<f64>,
}

impl Prototypes {
    pub fn row(&self, f: usize) -> &[f64] {
        &self.data[f * self.n_cols..(f + 1) * self.n_cols]
    }

    fn row_mut(&mut self, f: usize) -> &mut [f64] {
        &mut self.data[f * self.n_cols..(f + 1) * self.n_cols]
    }

    pub fn validate(&self) -> Result<()> {
        for f in 0..self.k {
            let norm: f64 = self.row(f).iter().map(|v| v * v).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidMatrix(format!(
                    "prototype {f} has norm {norm}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub memberships: MembershipMatrix,
    pub prototypes: Prototypes,
    /// Spherical criterion after each iteration's membership update.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    /// Number of dead-cluster reseeds that occurred during fitting.
    pub reseeds: usize,
}

/// L2-normalized copies of the nonzero rows, plus which rows they were.
struct NormalizedDocs {
    matrix: SparseMatrix,
    usable_rows: Vec<usize>,
}

fn normalize_rows(dtm: &SparseMatrix) -> Result<NormalizedDocs> {
    let norms = dtm.row_l2_norms();
    let usable_rows: Vec<usize> = (0..dtm.n_rows()).filter(|&r| norms[r] > 0.0).collect();
    if usable_rows.is_empty() {
        return Err(Error::InvalidMatrix("all-zero document-term matrix".into()));
    }
    let mut triplets = Vec::with_capacity(dtm.nnz());
    for (new_r, &r) in usable_rows.iter().enumerate() {
        let (cols, vals) = dtm.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            triplets.push((new_r, c, v / norms[r]));
        }
    }
    Ok(NormalizedDocs {
        matrix: SparseMatrix::from_triplets(usable_rows.len(), dtm.n_cols(), triplets)?,
        usable_rows,
    })
}

/// cos(d_j, v_f) for unit d_j against each unit prototype.
fn cosine_row(docs: &SparseMatrix, j: usize, protos: &Prototypes) -> Vec<f64> {
    let (cols, vals) = docs.row(j);
    (0..protos.k)
        .map(|f| {
            let p = protos.row(f);
            cols.iter().zip(vals).map(|(&c, &v)| v * p[c]).sum()
        })
        .collect()
}

/// Closed-form membership minimizer for one document given its
/// dissimilarity row. Zero dissimilarities split the full membership
/// uniformly among the tied clusters.
pub fn membership_row(dissimilarities: &[f64], q: f64) -> Vec<f64> {
    let k = dissimilarities.len();
    let zeros: Vec<usize> = (0..k).filter(|&f| dissimilarities[f] <= 0.0).collect();
    if !zeros.is_empty() {
        let share = 1.0 / zeros.len() as f64;
        let mut row = vec![0.0; k];
        for f in zeros {
            row[f] = share;
        }
        return row;
    }
    let exp = 1.0 / (q - 1.0);
    let d_min = dissimilarities.iter().cloned().fold(f64::INFINITY, f64::min);
    // (d_min / d_f)^exp is <= 1, avoiding overflow for small q-1
    let w: Vec<f64> = dissimilarities
        .iter()
        .map(|&d| (d_min / d).powf(exp))
        .collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// One full membership update over all documents.
pub fn update_memberships(dissimilarities: &[Vec<f64>], q: f64) -> MembershipMatrix {
    let n_rows = dissimilarities.len();
    let k = dissimilarities.first().map_or(0, |r| r.len());
    let mut data = Vec::with_capacity(n_rows * k);
    for row in dissimilarities {
        data.extend(membership_row(row, q));
    }
    MembershipMatrix { n_rows, k, data }
}

/// Prototype minimizer: v_f proportional to sum_j mu_fj^q d_j, then
/// normalized onto the unit sphere. Returns the indices of clusters
/// whose accumulated mass vanished (to be reseeded by the caller).
pub fn update_prototypes(
    docs_normalized: &SparseMatrix,
    memberships: &MembershipMatrix,
    q: f64,
) -> (Prototypes, Vec<usize>) {
    let k = memberships.k;
    let m = docs_normalized.n_cols();
    let mut data = vec![0.0; k * m];
    for (j, mu) in memberships.rows().enumerate() {
        let (cols, vals) = docs_normalized.row(j);
        for f in 0..k {
            let coeff = mu[f].powf(q);
            if coeff == 0.0 {
                continue;
            }
            let proto = &mut data[f * m..(f + 1) * m];
            for (&c, &v) in cols.iter().zip(vals) {
                proto[c] += coeff * v;
            }
        }
    }
    let mut protos = Prototypes { k, n_cols: m, data };
    let mut dead = Vec::new();
    for f in 0..k {
        let norm: f64 = protos.row(f).iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in protos.row_mut(f) {
                *v /= norm;
            }
        } else {
            dead.push(f);
        }
    }
    (protos, dead)
}

/// The Euclidean fuzzy objective J_q = sum_f sum_j mu_fj^q ||d_j - v_f||^2.
/// For unit vectors this equals twice the spherical criterion.
pub fn objective(
    docs_normalized: &SparseMatrix,
    memberships: &MembershipMatrix,
    prototypes: &Prototypes,
    q: f64,
) -> f64 {
    2.0 * spherical_criterion(docs_normalized, memberships, prototypes, q)
}

/// sum_f sum_j mu_fj^q (1 - cos(d_j, v_f)).
pub fn spherical_criterion(
    docs_normalized: &SparseMatrix,
    memberships: &MembershipMatrix,
    prototypes: &Prototypes,
    q: f64,
) -> f64 {
    let mut total = 0.0;
    for j in 0..docs_normalized.n_rows() {
        let cos = cosine_row(docs_normalized, j, prototypes);
        let mu = memberships.row(j);
        for f in 0..prototypes.k {
            total += mu[f].powf(q) * (1.0 - cos[f]).max(0.0);
        }
    }
    total
}

fn prototype_from_doc(docs: &SparseMatrix, j: usize, m: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    let (cols, vals) = docs.row(j);
    for (&c, &val) in cols.iter().zip(vals) {
        v[c] = val;
    }
    v
}

fn init_prototypes(docs: &SparseMatrix, cfg: &FuzzyConfig) -> Prototypes {
    let n = docs.n_rows();
    let m = docs.n_cols();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen: Vec<usize> = Vec::with_capacity(cfg.k);
    match cfg.init {
        InitMethod::RandomDocs => {
            while chosen.len() < cfg.k {
                let j = rng.gen_range(0..n);
                if !chosen.contains(&j) {
                    chosen.push(j);
                }
            }
        }
        InitMethod::KmeansppCosine => {
            chosen.push(rng.gen_range(0..n));
            let first = Prototypes {
                k: 1,
                n_cols: m,
                data: prototype_from_doc(docs, chosen[0], m),
            };
            let mut best_dissim: Vec<f64> = (0..n)
                .map(|j| 1.0 - cosine_row(docs, j, &first)[0])
                .collect();
            while chosen.len() < cfg.k {
                let total: f64 = best_dissim.iter().map(|&d| d.max(0.0)).sum();
                let next = if total <= 0.0 {
                    // all remaining documents coincide with a chosen one
                    (0..n).find(|j| !chosen.contains(j)).unwrap_or(0)
                } else {
                    let mut target = rng.gen::<f64>() * total;
                    let mut pick = n - 1;
                    for (j, &d) in best_dissim.iter().enumerate() {
                        target -= d.max(0.0);
                        if target <= 0.0 {
                            pick = j;
                            break;
                        }
                    }
                    pick
                };
                chosen.push(next);
                let proto = Prototypes {
                    k: 1,
                    n_cols: m,
                    data: prototype_from_doc(docs, next, m),
                };
                for j in 0..n {
                    let d = 1.0 - cosine_row(docs, j, &proto)[0];
                    if d < best_dissim[j] {
                        best_dissim[j] = d;
                    }
                }
            }
        }
    }
    // blend each seed with the global centroid direction so no prototype
    // coincides exactly with a document; exact coincidence (cosine
    // dissimilarity 0) makes the crisp zero-distance membership rule a
    // fixed point that large fuzzifiers cannot escape
    let mut centroid = vec![0.0; m];
    for j in 0..n {
        let (cols, vals) = docs.row(j);
        for (&c, &v) in cols.iter().zip(vals) {
            centroid[c] += v;
        }
    }
    let cnorm = centroid.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut data = Vec::with_capacity(cfg.k * m);
    for &j in &chosen {
        let mut v = prototype_from_doc(docs, j, m);
        if cnorm > 0.0 {
            for (x, &c) in v.iter_mut().zip(&centroid) {
                *x += 1e-3 * c / cnorm;
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                for x in &mut v {
                    *x /= norm;
                }
            }
        }
        data.extend(v);
    }
    Prototypes {
        k: cfg.k,
        n_cols: m,
        data,
    }
}

/// Reseed dead prototypes from the documents worst served by the live
/// ones (smallest best cosine).
fn reseed_dead(
    docs: &SparseMatrix,
    protos: &mut Prototypes,
    dead: &[usize],
) {
    let mut by_fit: Vec<(usize, f64)> = (0..docs.n_rows())
        .map(|j| {
            let best = cosine_row(docs, j, protos)
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            (j, best)
        })
        .collect();
    by_fit.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    for (slot, &f) in dead.iter().enumerate() {
        let j = by_fit[slot.min(by_fit.len() - 1)].0;
        let v = prototype_from_doc(docs, j, protos.n_cols);
        protos.row_mut(f).copy_from_slice(&v);
    }
}

pub fn fit(dtm: &SparseMatrix, cfg: &FuzzyConfig) -> Result<FitResult> {
    cfg.validate()?;
    let docs = normalize_rows(dtm)?;
    if cfg.k > docs.usable_rows.len() {
        return Err(Error::InvalidParameter(format!(
            "k = {} exceeds the {} documents with nonzero norm",
            cfg.k,
            docs.usable_rows.len()
        )));
    }
    let init = init_prototypes(&docs.matrix, cfg);
    fit_from(dtm, cfg, init)
}

/// Run the alternating optimization from explicit initial prototypes.
pub fn fit_from(dtm: &SparseMatrix, cfg: &FuzzyConfig, init: Prototypes) -> Result<FitResult> {
    cfg.validate()?;
    let docs = normalize_rows(dtm)?;
    if init.n_cols != dtm.n_cols() || init.k != cfg.k {
        return Err(Error::DimensionMismatch("initial prototypes".into()));
    }
    let q = cfg.fuzzifier;
    let mut protos = init;
    let mut trace = Vec::new();
    let mut reseeds = 0usize;
    let mut converged = false;
    let mut iterations_run = 0;
    let mut memberships = MembershipMatrix {
        n_rows: docs.matrix.n_rows(),
        k: cfg.k,
        data: vec![0.0; docs.matrix.n_rows() * cfg.k],
    };

    for _iter in 0..cfg.max_iterations {
        iterations_run += 1;
        let dissim: Vec<Vec<f64>> = (0..docs.matrix.n_rows())
            .map(|j| {
                cosine_row(&docs.matrix, j, &protos)
                    .into_iter()
                    .map(|c| (1.0 - c).max(0.0))
                    .collect()
            })
            .collect();
        memberships = update_memberships(&dissim, q);

        let mut criterion = 0.0;
        for (j, row) in dissim.iter().enumerate() {
            let mu = memberships.row(j);
            for f in 0..cfg.k {
                criterion += mu[f].powf(q) * row[f];
            }
        }
        let improved = match trace.last() {
            None => true,
            Some(&prev) => {
                let denom: f64 = if prev > 0.0 { prev } else { 1.0 };
                (prev - criterion) / denom >= cfg.min_improvement
            }
        };
        trace.push(criterion);
        if !improved {
            converged = true;
            break;
        }

        let (next, dead) = update_prototypes(&docs.matrix, &memberships, q);
        protos = next;
        if !dead.is_empty() {
            reseeds += dead.len();
            reseed_dead(&docs.matrix, &mut protos, &dead);
        }
    }

    // expand memberships back to full row alignment; all-zero documents
    // get uniform 1/k
    let memberships = expand_memberships(&memberships, &docs.usable_rows, dtm.n_rows(), cfg.k);
    Ok(FitResult {
        memberships,
        prototypes: protos,
        objective_trace: trace,
        iterations_run,
        converged,
        reseeds,
    })
}

fn expand_memberships(
    fitted: &MembershipMatrix,
    usable_rows: &[usize],
    n_total: usize,
    k: usize,
) -> MembershipMatrix {
    if usable_rows.len() == n_total {
        return fitted.clone();
    }
    let uniform = 1.0 / k as f64;
    let mut data = vec![uniform; n_total * k];
    for (fit_j, &orig_j) in usable_rows.iter().enumerate() {
        data[orig_j * k..(orig_j + 1) * k].copy_from_slice(fitted.row(fit_j));
    }
    MembershipMatrix {
        n_rows: n_total,
        k,
        data,
    }
}

/// Fold-in: one membership pass against frozen prototypes. All-zero
/// rows get the uniform 1/k row.
pub fn transform(
    new_dtm: &SparseMatrix,
    prototypes: &Prototypes,
    q: f64,
) -> Result<MembershipMatrix> {
    if new_dtm.n_cols() != prototypes.n_cols {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, prototypes have {}",
            new_dtm.n_cols(),
            prototypes.n_cols
        )));
    }
    if q <= 1.0 {
        return Err(Error::InvalidParameter("fuzzifier q must be > 1".into()));
    }
    let k = prototypes.k;
    let norms = new_dtm.row_l2_norms();
    let mut data = Vec::with_capacity(new_dtm.n_rows() * k);
    for j in 0..new_dtm.n_rows() {
        if norms[j] == 0.0 {
            data.extend(std::iter::repeat(1.0 / k as f64).take(k));
            continue;
        }
        let (cols, vals) = new_dtm.row(j);
        let dissim: Vec<f64> = (0..k)
            .map(|f| {
                let p = prototypes.row(f);
                let cos: f64 = cols
                    .iter()
                    .zip(vals)
                    .map(|(&c, &v)| v / norms[j] * p[c])
                    .sum();
                (1.0 - cos).max(0.0)
            })
            .collect();
        data.extend(membership_row(&dissim, q));
    }
    Ok(MembershipMatrix {
        n_rows: new_dtm.n_rows(),
        k,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(vs: &[f64]) -> Vec<f64> {
        let n: f64 = vs.iter().map(|v| v * v).sum::<f64>().sqrt();
        vs.iter().map(|v| v / n).collect()
    }

    #[test]
    fn membership_row_zero_distance_rule() {
        assert_eq!(membership_row(&[0.0, 0.5], 2.0), vec![1.0, 0.0]);
        assert_eq!(membership_row(&[0.0, 0.0], 2.0), vec![0.5, 0.5]);
    }

    #[test]
    fn membership_row_symmetry() {
        let row = membership_row(&[0.3, 0.3], 1.7);
        assert!((row[0] - 0.5).abs() < 1e-15);
        assert!((row[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn membership_row_inverse_distance_ratio() {
        // q=2: mu proportional to 1/D, so (0.2, 0.8) -> (0.8, 0.2)
        let row = membership_row(&[0.2, 0.8], 2.0);
        assert!((row[0] - 0.8).abs() < 1e-12);
        assert!((row[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn crisp_memberships_give_group_means() {
        let docs = SparseMatrix::from_dense(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let mu = MembershipMatrix {
            n_rows: 4,
            k: 2,
            data: vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0],
        };
        let (protos, dead) = update_prototypes(&docs, &mu, 2.0);
        assert!(dead.is_empty());
        assert_eq!(protos.row(0), &unit(&[1.0, 0.0])[..]);
        assert_eq!(protos.row(1), &unit(&[0.0, 1.0])[..]);
    }

    #[test]
    fn uniform_memberships_give_identical_prototypes() {
        let docs = SparseMatrix::from_dense(&[
            unit(&[1.0, 0.0, 1.0]),
            unit(&[0.0, 1.0, 1.0]),
            unit(&[1.0, 1.0, 0.0]),
        ])
        .unwrap();
        let mu = MembershipMatrix {
            n_rows: 3,
            k: 2,
            data: vec![0.5; 6],
        };
        let (protos, _) = update_prototypes(&docs, &mu, 3.0);
        for (a, b) in protos.row(0).iter().zip(protos.row(1)) {
            assert!((a - b).abs() < 1e-12);
        }
        protos.validate().unwrap();
    }

    #[test]
    fn objective_zero_on_coincident_points() {
        let docs = SparseMatrix::from_dense(&[unit(&[3.0, 4.0]), unit(&[3.0, 4.0])]).unwrap();
        let mu = MembershipMatrix {
            n_rows: 2,
            k: 2,
            data: vec![1.0, 0.0, 1.0, 0.0],
        };
        let protos = Prototypes {
            k: 2,
            n_cols: 2,
            data: [unit(&[3.0, 4.0]), unit(&[4.0, 3.0])].concat(),
        };
        assert!(objective(&docs, &mu, &protos, 2.0).abs() < 1e-12);
        assert!(objective(&docs, &mu, &protos, 3.5).abs() < 1e-12);
    }

    #[test]
    fn fit_two_identical_groups_is_nearly_crisp() {
        let dtm = SparseMatrix::from_dense(&[
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
        ])
        .unwrap();
        let res = fit(&dtm, &FuzzyConfig::new(2, 2.0)).unwrap();
        res.memberships.validate().unwrap();
        for row in res.memberships.rows() {
            let max = row.iter().cloned().fold(0.0, f64::max);
            assert!(max > 1.0 - 1e-6, "expected crisp membership, got {row:?}");
        }
        // the two groups land in different clusters
        let a = res.memberships.row(0);
        let b = res.memberships.row(2);
        assert!((a[0] - b[0]).abs() > 0.9);
    }

    #[test]
    fn fit_rejects_bad_inputs() {
        let dtm = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(fit(&dtm, &FuzzyConfig::new(2, 1.0)).is_err());
        assert!(fit(&dtm, &FuzzyConfig::new(3, 2.0)).is_err());
        let zero = SparseMatrix::from_triplets(3, 2, vec![]).unwrap();
        assert!(fit(&zero, &FuzzyConfig::new(2, 2.0)).is_err());
    }

    #[test]
    fn fit_is_deterministic_for_fixed_seed() {
        let dtm = SparseMatrix::from_dense(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 2.0],
            vec![1.0, 1.0, 1.0],
            vec![0.0, 2.0, 1.0],
        ])
        .unwrap();
        let mut cfg = FuzzyConfig::new(2, 1.8);
        cfg.seed = 7;
        let a = fit(&dtm, &cfg).unwrap();
        let b = fit(&dtm, &cfg).unwrap();
        assert_eq!(a.memberships.data, b.memberships.data);
        assert_eq!(a.prototypes.data, b.prototypes.data);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn memberships_invariant_to_document_scaling() {
        let base = vec![
            vec![2.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 2.0],
            vec![1.0, 1.0, 1.0],
        ];
        let dtm = SparseMatrix::from_dense(&base).unwrap();
        let mut scaled = base.clone();
        for v in &mut scaled[1] {
            *v *= 17.0;
        }
        let dtm2 = SparseMatrix::from_dense(&scaled).unwrap();
        let cfg = FuzzyConfig::new(2, 2.0);
        let a = fit(&dtm, &cfg).unwrap();
        let b = fit(&dtm2, &cfg).unwrap();
        for (x, y) in a.memberships.data.iter().zip(&b.memberships.data) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn permuting_initial_prototypes_permutes_columns() {
        let dtm = SparseMatrix::from_dense(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 2.0],
            vec![1.0, 1.0, 1.0],
        ])
        .unwrap();
        let cfg = FuzzyConfig::new(2, 2.0);
        let init = Prototypes {
            k: 2,
            n_cols: 3,
            data: [unit(&[1.0, 1.0, 0.0]), unit(&[0.0, 1.0, 1.0])].concat(),
        };
        let swapped = Prototypes {
            k: 2,
            n_cols: 3,
            data: [unit(&[0.0, 1.0, 1.0]), unit(&[1.0, 1.0, 0.0])].concat(),
        };
        let a = fit_from(&dtm, &cfg, init).unwrap();
        let b = fit_from(&dtm, &cfg, swapped).unwrap();
        for (ra, rb) in a.memberships.rows().zip(b.memberships.rows()) {
            assert!((ra[0] - rb[1]).abs() < 1e-12);
            assert!((ra[1] - rb[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rows_get_uniform_memberships() {
        let dtm = SparseMatrix::from_triplets(
            4,
            2,
            vec![(0, 0, 1.0), (1, 1, 1.0), (3, 0, 2.0)],
        )
        .unwrap();
        let res = fit(&dtm, &FuzzyConfig::new(2, 2.0)).unwrap();
        assert_eq!(res.memberships.row(2), &[0.5, 0.5]);
        res.memberships.validate().unwrap();
    }

    #[test]
    fn transform_matches_prototype_document() {
        let protos = Prototypes {
            k: 3,
            n_cols: 4,
            data: [
                unit(&[1.0, 0.0, 0.0, 0.0]),
                unit(&[0.0, 1.0, 0.0, 0.0]),
                unit(&[0.0, 0.0, 1.0, 1.0]),
            ]
            .concat(),
        };
        let dtm = SparseMatrix::from_dense(&[vec![5.0, 0.0, 0.0, 0.0]]).unwrap();
        let mu = transform(&dtm, &protos, 2.0).unwrap();
        assert_eq!(mu.row(0), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn transform_zero_row_is_uniform() {
        let protos = Prototypes {
            k: 2,
            n_cols: 2,
            data: [unit(&[1.0, 0.0]), unit(&[0.0, 1.0])].concat(),
        };
        let dtm = SparseMatrix::from_triplets(1, 2, vec![]).unwrap();
        let mu = transform(&dtm, &protos, 2.0).unwrap();
        assert_eq!(mu.row(0), &[0.5, 0.5]);
    }

    #[test]
    fn transform_width_mismatch_is_error() {
        let protos = Prototypes {
            k: 2,
            n_cols: 3,
            data: vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        };
        let dtm = SparseMatrix::from_dense(&[vec![1.0, 2.0]]).unwrap();
        assert!(transform(&dtm, &protos, 2.0).is_err());
    }

    #[test]
    fn transform_of_training_set_reproduces_final_memberships() {
        let dtm = SparseMatrix::from_dense(&[
            vec![3.0, 1.0, 0.0, 0.0],
            vec![2.0, 2.0, 0.0, 1.0],
            vec![0.0, 0.0, 2.0, 3.0],
            vec![0.0, 1.0, 3.0, 2.0],
            vec![1.0, 0.0, 1.0, 4.0],
        ])
        .unwrap();
        let mut cfg = FuzzyConfig::new(2, 2.0);
        cfg.max_iterations = 500;
        cfg.min_improvement = 1e-12;
        let res = fit(&dtm, &cfg).unwrap();
        let mu = transform(&dtm, &res.prototypes, 2.0).unwrap();
        for (a, b) in mu.data.iter().zip(&res.memberships.data) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn fuzzifier_limits() {
        // well separated groups
        let dtm = SparseMatrix::from_dense(&[
            vec![5.0, 1.0, 0.0, 0.0],
            vec![4.0, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0, 5.0],
            vec![0.0, 0.0, 0.0, 4.0],
        ])
        .unwrap();
        let crisp = fit(&dtm, &FuzzyConfig::new(2, 1.01)).unwrap();
        for row in crisp.memberships.rows() {
            assert!(row.iter().cloned().fold(0.0, f64::max) > 0.99);
        }
        let soft = fit(&dtm, &FuzzyConfig::new(2, 50.0)).unwrap();
        for row in soft.memberships.rows() {
            for &m in row {
                assert!((m - 0.5).abs() < 0.05, "q=50 row {row:?}");
            }
        }
    }

    #[test]
    fn objective_trace_is_non_increasing() {
        let dtm = SparseMatrix::from_dense(&[
            vec![2.0, 1.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0, 0.0],
            vec![0.0, 1.0, 2.0, 1.0],
            vec![1.0, 1.0, 1.0, 0.0],
            vec![0.0, 2.0, 1.0, 1.0],
            vec![3.0, 0.0, 0.0, 1.0],
        ])
        .unwrap();
        for &q in &[1.5, 2.0, 2.5, 3.0] {
            let mut cfg = FuzzyConfig::new(3, q);
            cfg.min_improvement = 1e-12;
            let res = fit(&dtm, &cfg).unwrap();
            for w in res.objective_trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-10, "trace increased: {:?}", w);
            }
        }
    }
}
