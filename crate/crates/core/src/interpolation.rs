//! Least-squares interpolation.
//!
//! Each F-row of P is fit so that interpolation from a small set of coarse
//! neighbors reproduces the smoothed test vectors as well as possible in the
//! weighted least-squares sense. Interpolatory sets are searched exhaustively
//! up to the caliber, and a larger set only displaces a smaller one when its
//! fit error beats a penalized threshold.

use crate::coarsening::Partition;
use crate::error::{Error, Result};
use crate::sparse::{graph_power, SparseMatrix};
use crate::strength::smoothed_row_values;
use crate::testvectors::TestVectorSet;

/// Candidate columns per row are capped at this many, ranked by their
/// caliber-1 fit quality.
const MAX_NEIGHBORHOOD: usize = 24;

/// Gram pivots below this fraction of the largest diagonal entry mark the
/// set as linearly dependent.
const PIVOT_TOLERANCE: f64 = 1e-12;

/// Weighted least-squares fit of `targets` by a combination of `columns`.
/// Returns the coefficients and the attained weighted squared error.
pub fn ls_fit(weights: &[f64], targets: &[f64], columns: &[&[f64]]) -> Result<(Vec<f64>, f64)> {
    let k = weights.len();
    let m = columns.len();
    if m == 0 {
        return Err(Error::DegenerateLeastSquares("no columns".into()));
    }
    if targets.len() != k || columns.iter().any(|c| c.len() != k) {
        return Err(Error::DimensionMismatch("ls_fit".into()));
    }
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for q in 0..m {
        for r in q..m {
            let mut s = 0.0;
            for kappa in 0..k {
                s += weights[kappa] * columns[q][kappa] * columns[r][kappa];
            }
            gram[q * m + r] = s;
            gram[r * m + q] = s;
        }
        let mut s = 0.0;
        for kappa in 0..k {
            s += weights[kappa] * targets[kappa] * columns[q][kappa];
        }
        rhs[q] = s;
    }
    let max_diag = (0..m).map(|q| gram[q * m + q]).fold(0.0f64, f64::max);
    if max_diag <= 0.0 {
        return Err(Error::DegenerateLeastSquares("all columns vanish".into()));
    }

    // LDL^T factorization in place: strict lower part holds L, diagonal holds D
    for j in 0..m {
        let mut d = gram[j * m + j];
        for p in 0..j {
            d -= gram[j * m + p] * gram[j * m + p] * gram[p * m + p];
        }
        if d <= PIVOT_TOLERANCE * max_diag {
            return Err(Error::DegenerateLeastSquares(format!(
                "dependent columns (pivot {d:.3e} of {max_diag:.3e})"
            )));
        }
        gram[j * m + j] = d;
        for i in (j + 1)..m {
            let mut s = gram[i * m + j];
            for p in 0..j {
                s -= gram[i * m + p] * gram[j * m + p] * gram[p * m + p];
            }
            gram[i * m + j] = s / d;
        }
    }
    let mut p = rhs;
    for i in 0..m {
        for j in 0..i {
            p[i] -= gram[i * m + j] * p[j];
        }
    }
    for i in 0..m {
        p[i] /= gram[i * m + i];
    }
    for i in (0..m).rev() {
        for j in (i + 1)..m {
            p[i] -= gram[j * m + i] * p[j];
        }
    }

    let mut ls = 0.0;
    for kappa in 0..k {
        let mut fit = 0.0;
        for (q, col) in columns.iter().enumerate() {
            fit += p[q] * col[kappa];
        }
        let r = targets[kappa] - fit;
        ls += weights[kappa] * r * r;
    }
    Ok((p, ls))
}

/// Whether a candidate set that is `delta_card` columns larger than the
/// incumbent earns its keep. Both functional values must be given relative
/// to the row's empty-fit energy, so they lie in [0, 1]; the exponent rule
/// `candidate < incumbent^(gamma * delta)` then demands a mild improvement
/// from a poor incumbent (about 3x per column near 0.1) and an enormous one
/// from an incumbent that already explains the data to near working
/// precision. The second regime is what keeps noise-level fits from buying
/// extra columns with meaningless coefficients.
pub(crate) fn penalize_accept(incumbent: f64, candidate: f64, delta_card: usize, gamma: f64) -> bool {
    if incumbent <= 0.0 {
        return false;
    }
    if incumbent >= 1.0 {
        // the exponent rule inverts its meaning at or above one; fall back
        // to a flat tenfold decrease per extra column
        return candidate < incumbent * 10f64.powi(-(delta_card as i32));
    }
    candidate < incumbent.powf(gamma * delta_card as f64)
}

/// Visits every k-combination of 0..n in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance the rightmost index that still has room
        let mut pos = k;
        while pos > 0 {
            pos -= 1;
            if idx[pos] < n - k + pos {
                idx[pos] += 1;
                for q in (pos + 1)..k {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return;
            }
        }
    }
}

/// Fit chosen for one F-row.
#[derive(Debug, Clone)]
pub struct RowFit {
    pub row: usize,
    /// Global indices of the interpolatory coarse points.
    pub columns: Vec<usize>,
    pub coefficients: Vec<f64>,
    pub ls: f64,
}

struct Candidate {
    global: usize,
    values: Vec<f64>,
    singleton_ls: f64,
}

/// Picks the interpolatory set and coefficients for one row.
fn select_row(
    row: usize,
    weights: &[f64],
    targets: &[f64],
    neighborhood: Vec<(usize, Vec<f64>)>,
    caliber: usize,
    gamma: f64,
) -> Result<RowFit> {
    let mut candidates: Vec<Candidate> = Vec::with_capacity(neighborhood.len());
    for (global, values) in neighborhood {
        match ls_fit(weights, targets, &[&values]) {
            Ok((_, ls)) => candidates.push(Candidate { global, values, singleton_ls: ls }),
            Err(Error::DegenerateLeastSquares(_)) => {}
            Err(e) => return Err(e),
        }
    }
    if candidates.is_empty() {
        return Err(Error::DegenerateInterpolatorySet(row));
    }
    candidates.sort_by(|a, b| {
        a.singleton_ls
            .total_cmp(&b.singleton_ls)
            .then(a.global.cmp(&b.global))
    });
    candidates.truncate(MAX_NEIGHBORHOOD);

    // functional values are penalized relative to the empty fit, the scale
    // on which the exponent rule is meaningful
    let e0: f64 = weights
        .iter()
        .zip(targets)
        .map(|(&w, &t)| w * t * t)
        .sum();
    let rel = |ls: f64| if e0 > 0.0 { ls / e0 } else { 0.0 };

    // cardinality 1: the sort already leads with the best singleton
    let mut best_set = vec![0usize];
    let mut best_coeff = ls_fit(weights, targets, &[&candidates[0].values])?.0;
    let mut best_ls = candidates[0].singleton_ls;

    let mut cols: Vec<&[f64]> = Vec::new();
    for card in 2..=caliber.min(candidates.len()) {
        let mut card_set: Option<(Vec<usize>, Vec<f64>, f64)> = None;
        for_each_combination(candidates.len(), card, |idx| {
            cols.clear();
            cols.extend(idx.iter().map(|&q| candidates[q].values.as_slice()));
            if let Ok((coeff, ls)) = ls_fit(weights, targets, &cols) {
                let better = match &card_set {
                    Some((_, _, incumbent)) => ls < *incumbent,
                    None => true,
                };
                if better {
                    card_set = Some((idx.to_vec(), coeff, ls));
                }
            }
        });
        if let Some((set, coeff, ls)) = card_set {
            if penalize_accept(rel(best_ls), rel(ls), card - best_set.len(), gamma) {
                best_set = set;
                best_coeff = coeff;
                best_ls = ls;
            }
        }
    }

    let mut pairs: Vec<(usize, f64)> = best_set
        .iter()
        .zip(&best_coeff)
        .map(|(&q, &w)| (candidates[q].global, w))
        .collect();
    pairs.sort_by_key(|&(g, _)| g);
    Ok(RowFit {
        row,
        columns: pairs.iter().map(|&(g, _)| g).collect(),
        coefficients: pairs.iter().map(|&(_, w)| w).collect(),
        ls: best_ls,
    })
}

/// Builds P for the given splitting: identity at C-rows, least-squares fits
/// over coarse neighbors within graph distance `d_ls` at F-rows.
pub fn build_interpolation(
    a: &SparseMatrix,
    tvs: &TestVectorSet,
    partition: &Partition,
    d_ls: usize,
    caliber: usize,
    gamma: f64,
) -> Result<(SparseMatrix, Vec<RowFit>)> {
    let n = a.n_rows();
    if a.n_cols() != n || tvs.n() != n || partition.len() != n {
        return Err(Error::DimensionMismatch("build_interpolation".into()));
    }
    if caliber == 0 {
        return Err(Error::InvalidParameter("caliber must be positive".into()));
    }
    if gamma <= 0.0 {
        return Err(Error::InvalidParameter(format!("gamma={gamma} must be positive")));
    }
    let neighborhoods = graph_power(a, d_ls)?;
    let n_c = partition.n_coarse();
    let weights = tvs.weights();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut fits: Vec<RowFit> = Vec::new();
    for i in 0..n {
        if let Some(rank) = partition.coarse_rank(i) {
            triplets.push((i, rank, 1.0));
            continue;
        }
        let mut neighborhood: Vec<(usize, Vec<f64>)> = Vec::new();
        for &j in neighborhoods.neighbors(i) {
            if partition.is_coarse(j) {
                let col: Vec<f64> = tvs.vectors().iter().map(|v| v[j]).collect();
                neighborhood.push((j, col));
            }
        }
        if neighborhood.is_empty() {
            return Err(Error::EmptyCoarseNeighborhood { point: i, depth: d_ls });
        }
        let targets = smoothed_row_values(a, tvs, i)?;
        let fit = select_row(i, weights, &targets, neighborhood, caliber, gamma)?;
        for (&j, &w) in fit.columns.iter().zip(&fit.coefficients) {
            let rank = partition.coarse_rank(j).expect("interpolatory points are coarse");
            triplets.push((i, rank, w));
        }
        fits.push(fit);
    }
    let p = SparseMatrix::from_triplets(n, n_c, &triplets)?;
    Ok((p, fits))
}
