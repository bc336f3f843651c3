//! Rotated anisotropic diffusion model problems on the unit square.
//!
//! The operator is -div(K grad u) with K the rotation of diag(1, epsilon) by
//! angle alpha, discretized either by the 7-point finite-difference stencil
//! (second-order cross term using lower-left/upper-right corners) or by
//! bilinear finite elements on a uniform quad mesh. Dirichlet boundaries are
//! eliminated; unknowns are the (N-1)^2 interior nodes in lexicographic
//! order (x fastest).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Fd7,
    Fe9,
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scheme::Fd7 => write!(f, "fd7"),
            Scheme::Fe9 => write!(f, "fe9"),
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fd7" => Ok(Scheme::Fd7),
            "fe9" => Ok(Scheme::Fe9),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme {other:?}, expected fd7 or fe9"
            ))),
        }
    }
}

/// Diffusion tensor entries: K = [[a, b], [b, c]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// a = cos^2 + eps sin^2, b = (1-eps)/2 sin(2 alpha), c = sin^2 + eps cos^2.
pub fn coefficients(alpha: f64, epsilon: f64) -> DiffusionCoefficients {
    let (sin, cos) = alpha.sin_cos();
    DiffusionCoefficients {
        a: cos * cos + epsilon * sin * sin,
        b: 0.5 * (1.0 - epsilon) * (2.0 * alpha).sin(),
        c: sin * sin + epsilon * cos * cos,
    }
}

/// A discretization request: `n` grid intervals per side, so (n-1)^2 unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub scheme: Scheme,
    pub n: usize,
    pub alpha: f64,
    pub epsilon: f64,
}

impl ProblemSpec {
    pub fn new(scheme: Scheme, n: usize, alpha: f64, epsilon: f64) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidParameter(format!("grid size N={n} must be >= 4")));
        }
        if !alpha.is_finite() {
            return Err(Error::InvalidParameter("alpha must be finite".into()));
        }
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidParameter(format!(
                "epsilon={epsilon} must lie in [0, 1]"
            )));
        }
        Ok(Self {
            scheme,
            n,
            alpha,
            epsilon,
        })
    }

    /// Interior nodes per side.
    pub fn side(&self) -> usize {
        self.n - 1
    }

    pub fn unknowns(&self) -> usize {
        self.side() * self.side()
    }

    /// Interior grid coordinates (ix, iy), both in 1..=n-1, of unknown `idx`.
    pub fn coords_of(&self, idx: usize) -> (usize, usize) {
        let m = self.side();
        (idx % m + 1, idx / m + 1)
    }

    pub fn index_of(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix >= 1 && ix <= self.side() && iy >= 1 && iy <= self.side());
        (iy - 1) * self.side() + (ix - 1)
    }

    pub fn assemble(&self) -> Result<SparseMatrix> {
        let stencil = match self.scheme {
            Scheme::Fd7 => fd7_stencil(self.alpha, self.epsilon, self.n),
            Scheme::Fe9 => fe9_stencil(self.alpha, self.epsilon),
        };
        assemble_from_stencil(self, &stencil)
    }
}

/// (dx, dy, value) with dy = +1 pointing north.
type Stencil = Vec<(i64, i64, f64)>;

/// A = -(a D_xx + 2 b S_xy + c D_yy) in units of 1/(2 h^2); the cross term
/// couples through the (+1,+1) and (-1,-1) corners only.
fn fd7_stencil(alpha: f64, epsilon: f64, n: usize) -> Stencil {
    let DiffusionCoefficients { a, b, c } = coefficients(alpha, epsilon);
    let h = 1.0 / n as f64;
    let s = 0.5 / (h * h);
    vec![
        (0, 0, s * (4.0 * a + 4.0 * c - 4.0 * b)),
        (1, 0, s * (-2.0 * a + 2.0 * b)),
        (-1, 0, s * (-2.0 * a + 2.0 * b)),
        (0, 1, s * (-2.0 * c + 2.0 * b)),
        (0, -1, s * (-2.0 * c + 2.0 * b)),
        (1, 1, s * (-2.0 * b)),
        (-1, -1, s * (-2.0 * b)),
    ]
}

/// Bilinear FE stiffness stencil; any positive global scale is equivalent.
fn fe9_stencil(alpha: f64, epsilon: f64) -> Stencil {
    let DiffusionCoefficients { a, b, c } = coefficients(alpha, epsilon);
    vec![
        (0, 0, 8.0 * (a + c)),
        (1, 0, 2.0 * (-2.0 * a + c)),
        (-1, 0, 2.0 * (-2.0 * a + c)),
        (0, 1, 2.0 * (a - 2.0 * c)),
        (0, -1, 2.0 * (a - 2.0 * c)),
        (1, 1, -a - 3.0 * b - c),
        (-1, -1, -a - 3.0 * b - c),
        (-1, 1, -a + 3.0 * b - c),
        (1, -1, -a + 3.0 * b - c),
    ]
}

fn assemble_from_stencil(spec: &ProblemSpec, stencil: &Stencil) -> Result<SparseMatrix> {
    let m = spec.side();
    let mut triplets = Vec::with_capacity(m * m * stencil.len());
    for iy in 1..=m {
        for ix in 1..=m {
            let row = spec.index_of(ix, iy);
            for &(dx, dy, v) in stencil {
                if v == 0.0 && !(dx == 0 && dy == 0) {
                    continue;
                }
                let jx = ix as i64 + dx;
                let jy = iy as i64 + dy;
                // Dirichlet elimination: neighbors on or past the boundary drop out
                if jx < 1 || jy < 1 || jx > m as i64 || jy > m as i64 {
                    continue;
                }
                triplets.push((row, spec.index_of(jx as usize, jy as usize), v));
            }
        }
    }
    SparseMatrix::from_triplets(spec.unknowns(), spec.unknowns(), &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8};

    fn offsets_of(spec: &ProblemSpec, a: &SparseMatrix, row: usize) -> Vec<(i64, i64, f64)> {
        let (ix, iy) = spec.coords_of(row);
        let (cols, vals) = a.row(row);
        cols.iter()
            .zip(vals)
            .map(|(&j, &v)| {
                let (jx, jy) = spec.coords_of(j);
                (jx as i64 - ix as i64, jy as i64 - iy as i64, v)
            })
            .collect()
    }

    fn center_row(spec: &ProblemSpec) -> usize {
        let mid = spec.side() / 2;
        spec.index_of(mid, mid)
    }

    #[test]
    fn coefficient_limits() {
        let iso = coefficients(0.0, 1.0);
        assert_eq!((iso.a, iso.b, iso.c), (1.0, 0.0, 1.0));
        let axis = coefficients(0.0, 0.25);
        assert!((axis.a - 1.0).abs() < 1e-15);
        assert!(axis.b.abs() < 1e-15);
        assert!((axis.c - 0.25).abs() < 1e-15);
    }

    #[test]
    fn coefficients_at_minus_quarter_pi() {
        let k = coefficients(-FRAC_PI_4, 0.1);
        assert!((k.a - 0.55).abs() <= 1e-15);
        assert!((k.b + 0.45).abs() <= 1e-15);
        assert!((k.c - 0.55).abs() <= 1e-15);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ProblemSpec::new(Scheme::Fd7, 3, 0.0, 0.5).is_err());
        assert!(ProblemSpec::new(Scheme::Fd7, 8, 0.0, -0.1).is_err());
        assert!(ProblemSpec::new(Scheme::Fd7, 8, 0.0, 1.5).is_err());
        assert!(ProblemSpec::new(Scheme::Fd7, 8, f64::NAN, 0.5).is_err());
    }

    #[test]
    fn fd7_interior_stencil_matches_reference_ratios() {
        // alpha=-pi/4, eps=0.1: proportional to center 3.1, N/S/E/W -1,
        // corners +0.45 on the (+1,+1)/(-1,-1) diagonal, other corners absent
        let spec = ProblemSpec::new(Scheme::Fd7, 16, -FRAC_PI_4, 0.1).unwrap();
        let a = spec.assemble().unwrap();
        let row = center_row(&spec);
        let entries = offsets_of(&spec, &a, row);
        assert_eq!(entries.len(), 7);
        let center = entries.iter().find(|e| (e.0, e.1) == (0, 0)).unwrap().2;
        for (dx, dy, v) in entries {
            let expected = match (dx, dy) {
                (0, 0) => 3.1,
                (1, 0) | (-1, 0) | (0, 1) | (0, -1) => -1.0,
                (1, 1) | (-1, -1) => 0.45,
                other => panic!("unexpected stencil offset {other:?}"),
            };
            assert!(
                (v / center * 3.1 - expected).abs() <= 1e-12,
                "offset ({dx},{dy}): {v} vs {expected}"
            );
        }
    }

    #[test]
    fn fd7_isotropic_is_five_point() {
        let spec = ProblemSpec::new(Scheme::Fd7, 16, 0.0, 1.0).unwrap();
        let a = spec.assemble().unwrap();
        let entries = offsets_of(&spec, &a, center_row(&spec));
        assert_eq!(entries.len(), 5);
        let center = entries.iter().find(|e| (e.0, e.1) == (0, 0)).unwrap().2;
        for (dx, dy, v) in entries {
            if (dx, dy) != (0, 0) {
                assert!((center / v + 4.0).abs() <= 1e-12, "center/off ratio");
            }
        }
    }

    #[test]
    fn fe9_quarter_pi_limit_stencil() {
        let spec = ProblemSpec::new(Scheme::Fe9, 16, FRAC_PI_4, 0.0).unwrap();
        let a = spec.assemble().unwrap();
        let entries = offsets_of(&spec, &a, center_row(&spec));
        assert_eq!(entries.len(), 9);
        let center = entries.iter().find(|e| (e.0, e.1) == (0, 0)).unwrap().2;
        for (dx, dy, v) in entries {
            let expected = match (dx, dy) {
                (0, 0) => 8.0,
                (1, 1) | (-1, -1) => -2.5,
                (-1, 1) | (1, -1) => 0.5,
                _ => -1.0,
            };
            assert!(
                (v / center * 8.0 - expected).abs() <= 1e-12,
                "offset ({dx},{dy}): {v} vs {expected}"
            );
        }
    }

    #[test]
    fn fe9_isotropic_matches_bilinear_laplacian() {
        let spec = ProblemSpec::new(Scheme::Fe9, 16, 0.0, 1.0).unwrap();
        let a = spec.assemble().unwrap();
        let entries = offsets_of(&spec, &a, center_row(&spec));
        assert_eq!(entries.len(), 9);
        for (dx, dy, v) in entries {
            let expected = if (dx, dy) == (0, 0) { 16.0 } else { -2.0 };
            assert!((v - expected).abs() <= 1e-12, "offset ({dx},{dy})");
        }
    }

    #[test]
    fn interior_row_sums_vanish() {
        for scheme in [Scheme::Fd7, Scheme::Fe9] {
            let spec = ProblemSpec::new(scheme, 10, FRAC_PI_8, 0.3).unwrap();
            let a = spec.assemble().unwrap();
            let m = spec.side();
            for iy in 2..m {
                for ix in 2..m {
                    let row = spec.index_of(ix, iy);
                    let (_, vals) = a.row(row);
                    let sum: f64 = vals.iter().sum();
                    let center = a.get(row, row);
                    assert!(
                        sum.abs() <= 1e-12 * center.abs(),
                        "{scheme} row ({ix},{iy}): sum {sum}"
                    );
                }
            }
        }
    }

    #[test]
    fn assembled_matrices_are_symmetric() {
        for scheme in [Scheme::Fd7, Scheme::Fe9] {
            let spec = ProblemSpec::new(scheme, 12, 0.3, 0.05).unwrap();
            let a = spec.assemble().unwrap();
            assert!(a.is_symmetric(1e-13));
        }
    }

    #[test]
    fn assembled_matrices_are_positive_definite() {
        // includes the degenerate eps=0 tensor, which Dirichlet elimination
        // keeps strictly definite
        for (scheme, alpha, eps) in [
            (Scheme::Fd7, FRAC_PI_8, 1e-4),
            (Scheme::Fe9, FRAC_PI_8, 1e-4),
            (Scheme::Fd7, FRAC_PI_4, 0.0),
            (Scheme::Fe9, -FRAC_PI_4, 0.0),
        ] {
            let spec = ProblemSpec::new(scheme, 8, alpha, eps).unwrap();
            let a = spec.assemble().unwrap().to_dense();
            assert!(
                nalgebra::Cholesky::new(a).is_some(),
                "{scheme} alpha={alpha} eps={eps} not PD"
            );
        }
    }

    #[test]
    fn alpha_is_pi_periodic() {
        let s1 = ProblemSpec::new(Scheme::Fd7, 10, 0.4, 0.01).unwrap();
        let s2 = ProblemSpec::new(Scheme::Fd7, 10, 0.4 + std::f64::consts::PI, 0.01).unwrap();
        let a1 = s1.assemble().unwrap();
        let a2 = s2.assemble().unwrap();
        let diff = a1.add_scaled(&a2, -1.0).unwrap();
        let scale = a1.get(center_row(&s1), center_row(&s1));
        for i in 0..diff.n_rows() {
            let (_, vals) = diff.row(i);
            for &v in vals {
                assert!(v.abs() <= 1e-13 * scale.abs());
            }
        }
    }

    #[test]
    fn schemes_agree_on_dominant_coupling_direction() {
        // at alpha=pi/4 with strong anisotropy both discretizations put their
        // most negative couplings on the (+1,+1)/(-1,-1) diagonal
        for scheme in [Scheme::Fd7, Scheme::Fe9] {
            let spec = ProblemSpec::new(scheme, 16, FRAC_PI_4, 1e-4).unwrap();
            let a = spec.assemble().unwrap();
            let entries = offsets_of(&spec, &a, center_row(&spec));
            let (dx, dy, _) = entries
                .iter()
                .filter(|e| (e.0, e.1) != (0, 0))
                .copied()
                .fold((0, 0, f64::INFINITY), |acc, e| if e.2 < acc.2 { e } else { acc });
            assert_eq!((dx * dy > 0, dx.abs(), dy.abs()), (true, 1, 1), "{scheme}");
        }
    }

    proptest! {
        #[test]
        fn tensor_identities(alpha in -3.2f64..3.2, eps in 0.0f64..1.0) {
            let k = coefficients(alpha, eps);
            prop_assert!(k.a + k.c - (1.0 + eps) <= 1e-12);
            prop_assert!((k.a * k.c - k.b * k.b - eps).abs() <= 1e-12);
            if eps > 0.0 {
                prop_assert!(k.a > 0.0 && k.c > 0.0);
            }
        }
    }
}
