//! Test vectors: the constant vector plus seeded random vectors smoothed by
//! Gauss-Seidel on the homogeneous system, each weighted by the inverse of
//! its Rayleigh quotient.

use std::io::Write;

use crate::error::{Error, Result};
use crate::rng;
use crate::sparse::{dot, gauss_seidel_sweep, norm2, SparseMatrix, SweepDirection};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Constant,
    Relaxed,
    Eigen,
}

/// A weighted collection of unit-norm test vectors over one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TestVectorSet {
    vectors: Vec<Vec<f64>>,
    weights: Vec<f64>,
    provenance: Vec<Provenance>,
}

impl TestVectorSet {
    /// Wraps externally built vectors; they are normalized and get unit
    /// weights until `compute_weights` runs.
    pub fn from_vectors(vectors: Vec<Vec<f64>>, provenance: Vec<Provenance>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidParameter("empty test vector set".into()));
        }
        if vectors.len() != provenance.len() {
            return Err(Error::DimensionMismatch("provenance length".into()));
        }
        let n = vectors[0].len();
        let mut set = Self {
            vectors: Vec::new(),
            weights: Vec::new(),
            provenance: Vec::new(),
        };
        for (v, p) in vectors.into_iter().zip(provenance) {
            if v.len() != n {
                return Err(Error::DimensionMismatch("ragged test vectors".into()));
            }
            set.push_vector(v, p)?;
        }
        Ok(set)
    }

    pub fn push_vector(&mut self, mut v: Vec<f64>, provenance: Provenance) -> Result<()> {
        let norm = norm2(&v);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidParameter(
                "test vector must be nonzero and finite".into(),
            ));
        }
        for x in &mut v {
            *x /= norm;
        }
        self.vectors.push(v);
        self.weights.push(1.0);
        self.provenance.push(provenance);
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.vectors.len()
    }

    pub fn n(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> &[Provenance] {
        &self.provenance
    }

    /// Plain-text export, one grid point per line, one column per vector.
    pub fn export_text<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.n() {
            let mut line = String::new();
            for (k, v) in self.vectors.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{:.16e}", v[i]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}

/// Seeded uniform starting guesses for the relaxed vectors, exposed so tests
/// can compare smoothness before and after relaxation.
pub(crate) fn initial_guesses(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed);
    (0..count).map(|_| rng::uniform_vec(&mut rng, n)).collect()
}

/// The constant vector plus `k - 1` random vectors relaxed by `sweeps`
/// forward Gauss-Seidel passes on A v = 0. Vectors that relax to (numerical)
/// zero are dropped; if none of the random vectors survive this fails.
pub fn generate_relaxed(a: &SparseMatrix, k: usize, sweeps: usize, seed: u64) -> Result<TestVectorSet> {
    let n = a.n_rows();
    if a.n_cols() != n {
        return Err(Error::DimensionMismatch("generate_relaxed needs a square matrix".into()));
    }
    if k < 2 {
        return Err(Error::InvalidParameter(format!("test vector count {k} must be >= 2")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty matrix".into()));
    }
    let mut set = TestVectorSet {
        vectors: Vec::new(),
        weights: Vec::new(),
        provenance: Vec::new(),
    };
    // the constant vector stays unrelaxed
    set.push_vector(vec![1.0; n], Provenance::Constant)?;
    let zeros = vec![0.0; n];
    let mut kept = 0;
    let guess_seed = rng::derive(seed, rng::TAG_TEST_VECTORS);
    for mut v in initial_guesses(n, k - 1, guess_seed) {
        for _ in 0..sweeps {
            gauss_seidel_sweep(a, &mut v, &zeros, SweepDirection::Forward)?;
        }
        if norm2(&v) <= 1e-30 {
            continue;
        }
        set.push_vector(v, Provenance::Relaxed)?;
        kept += 1;
    }
    if kept == 0 {
        return Err(Error::InsufficientTestVectors { kept: 1, requested: k });
    }
    Ok(set)
}

/// Least-squares weights omega = <v, v> / <A v, v>. Requires positive
/// Rayleigh quotients, i.e. an SPD operator.
pub fn compute_weights(a: &SparseMatrix, tvs: &mut TestVectorSet) -> Result<()> {
    if tvs.n() != a.n_rows() || a.n_rows() != a.n_cols() {
        return Err(Error::DimensionMismatch("compute_weights".into()));
    }
    let mut av = vec![0.0; a.n_rows()];
    for idx in 0..tvs.k() {
        a.spmv_into(&tvs.vectors[idx], &mut av);
        let num = dot(&tvs.vectors[idx], &tvs.vectors[idx]);
        let den = dot(&av, &tvs.vectors[idx]);
        if den <= 0.0 {
            return Err(Error::NonPositiveRayleigh {
                index: idx,
                value: den,
            });
        }
        tvs.weights[idx] = num / den;
    }
    Ok(())
}

/// Weights under a general inner-product matrix: omega = <T v, v> / <A v, v>.
/// With T = I this reduces to `compute_weights`; coarse levels carry the
/// accumulated T from the interpolation chain.
pub(crate) fn compute_weights_generalized(
    a: &SparseMatrix,
    t: &SparseMatrix,
    tvs: &mut TestVectorSet,
) -> Result<()> {
    let n = a.n_rows();
    if tvs.n() != n || a.n_cols() != n || t.n_rows() != n || t.n_cols() != n {
        return Err(Error::DimensionMismatch("compute_weights_generalized".into()));
    }
    let mut av = vec![0.0; n];
    let mut tv = vec![0.0; n];
    for idx in 0..tvs.k() {
        a.spmv_into(&tvs.vectors[idx], &mut av);
        t.spmv_into(&tvs.vectors[idx], &mut tv);
        let num = dot(&tv, &tvs.vectors[idx]);
        let den = dot(&av, &tvs.vectors[idx]);
        if den <= 0.0 || num <= 0.0 {
            return Err(Error::NonPositiveRayleigh {
                index: idx,
                value: den,
            });
        }
        tvs.weights[idx] = num / den;
    }
    Ok(())
}
