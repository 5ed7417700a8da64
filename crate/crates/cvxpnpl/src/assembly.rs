//! Stacks the collinearity and coplanarity constraints of all correspondences
//! into the homogeneous system `C·vec(R) + N·t = 0` and eliminates the
//! translation, leaving the reduced system `A·vec(R) = 0`.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{skew, LineCorrespondence, PointCorrespondence};

/// Condition-number guard on NᵀN; beyond this the translation cannot be
/// eliminated reliably (e.g. all line normals parallel).
pub const CONDITION_LIMIT: f64 = 1e12;

/// Column-major vectorization of a 3x3 matrix.
pub fn vec_mat3(m: &Matrix3<f64>) -> SVector<f64, 9> {
    SVector::<f64, 9>::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_mat3`].
pub fn unvec_mat3(r: &SVector<f64, 9>) -> Matrix3<f64> {
    Matrix3::from_column_slice(r.as_slice())
}

/// The stacked homogeneous system. `C` has 9 columns, `N` has 3; both have
/// `3·n_points + 2·n_lines` rows, points first.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    pub c: DMatrix<f64>,
    pub n: DMatrix<f64>,
    pub n_points: usize,
    pub n_lines: usize,
}

impl StackedSystem {
    pub fn rows(&self) -> usize {
        3 * self.n_points + 2 * self.n_lines
    }

    /// Residual ‖C·vec(R) + N·t‖ of a candidate pose.
    pub fn residual(&self, r: &SVector<f64, 9>, t: &Vector3<f64>) -> f64 {
        let mut v = &self.c * DMatrix::from_column_slice(9, 1, r.as_slice());
        v += &self.n * DMatrix::from_column_slice(3, 1, t.as_slice());
        v.norm()
    }
}

/// The translation-free system `A·vec(R) = 0` together with the cached map
/// used to back-substitute the translation.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub a: DMatrix<f64>,
    /// `(NᵀN)⁻¹·Nᵀ·C`, so that `t = −back_sub·r`.
    back_sub: SMatrix<f64, 3, 9>,
    /// Spectral condition number of NᵀN, kept for diagnostics.
    pub condition: f64,
}

impl ReducedSystem {
    /// Least-squares optimal translation for a fixed vectorized rotation.
    pub fn recover_translation(&self, r: &SVector<f64, 9>) -> Vector3<f64> {
        -(self.back_sub * r)
    }

    /// Residual norm ‖A·r‖ of a vectorized rotation.
    pub fn residual(&self, r: &SVector<f64, 9>) -> f64 {
        (&self.a * DMatrix::from_column_slice(9, 1, r.as_slice())).norm()
    }
}

/// Constraint block of one point: `(pᵀ ⊗ ⌊u⌋ₓ, ⌊u⌋ₓ)`.
///
/// The rows satisfy `C_p·vec(R) + N_p·t = ⌊u⌋ₓ(R·p + t)` for every (R, t).
pub fn point_block(pc: &PointCorrespondence) -> (SMatrix<f64, 3, 9>, Matrix3<f64>) {
    let u = skew(&pc.bearing);
    let mut c = SMatrix::<f64, 3, 9>::zeros();
    for col in 0..3 {
        c.fixed_view_mut::<3, 3>(0, 3 * col)
            .copy_from(&(u * pc.point[col]));
    }
    (c, u)
}

/// Constraint block of one line: two rows `(l_p_i ⊗ l_n)ᵀ` paired with `l_nᵀ`.
pub fn line_block(lc: &LineCorrespondence) -> (SMatrix<f64, 2, 9>, SMatrix<f64, 2, 3>) {
    let mut c = SMatrix::<f64, 2, 9>::zeros();
    let mut n = SMatrix::<f64, 2, 3>::zeros();
    for (row, p) in [lc.p1, lc.p2].iter().enumerate() {
        for col in 0..3 {
            for k in 0..3 {
                c[(row, 3 * col + k)] = p[col] * lc.normal[k];
            }
        }
        n.row_mut(row).copy_from(&lc.normal.transpose());
    }
    (c, n)
}

fn configuration_ok(n_points: usize, n_lines: usize) -> bool {
    if n_lines == 0 {
        n_points >= 3
    } else {
        n_points + n_lines >= 4
    }
}

/// Stacks all correspondences, points first, into one homogeneous system.
pub fn assemble(
    points: &[PointCorrespondence],
    lines: &[LineCorrespondence],
) -> Result<StackedSystem> {
    if !configuration_ok(points.len(), lines.len()) {
        return Err(Error::InsufficientCorrespondences {
            points: points.len(),
            lines: lines.len(),
        });
    }

    let rows = 3 * points.len() + 2 * lines.len();
    let mut c = DMatrix::<f64>::zeros(rows, 9);
    let mut n = DMatrix::<f64>::zeros(rows, 3);

    let mut row = 0;
    for pc in points {
        let (cb, nb) = point_block(pc);
        c.view_mut((row, 0), (3, 9)).copy_from(&cb);
        n.view_mut((row, 0), (3, 3)).copy_from(&nb);
        row += 3;
    }
    for lc in lines {
        let (cb, nb) = line_block(lc);
        c.view_mut((row, 0), (2, 9)).copy_from(&cb);
        n.view_mut((row, 0), (2, 3)).copy_from(&nb);
        row += 2;
    }

    Ok(StackedSystem {
        c,
        n,
        n_points: points.len(),
        n_lines: lines.len(),
    })
}

/// Eliminates the translation: `A = (I − N(NᵀN)⁻¹Nᵀ)·C`.
pub fn reduce(sys: &StackedSystem) -> Result<ReducedSystem> {
    let ntn_dyn = sys.n.transpose() * &sys.n;
    let ntn = Matrix3::from_fn(|i, j| ntn_dyn[(i, j)]);

    let eig = ntn.symmetric_eigen();
    let lambda_max = eig.eigenvalues.max();
    let lambda_min = eig.eigenvalues.min();
    let condition = if lambda_min <= 0.0 {
        f64::INFINITY
    } else {
        lambda_max / lambda_min
    };
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::DegenerateConfiguration { cond: condition });
    }

    let chol = nalgebra::Cholesky::new(ntn)
        .ok_or(Error::DegenerateConfiguration { cond: condition })?;
    let ntc_dyn = sys.n.transpose() * &sys.c;
    let ntc = SMatrix::<f64, 3, 9>::from_fn(|i, j| ntc_dyn[(i, j)]);
    let back_sub = chol.solve(&ntc);

    let a = &sys.c - &sys.n * DMatrix::from_fn(3, 9, |i, j| back_sub[(i, j)]);

    Ok(ReducedSystem {
        a,
        back_sub,
        condition,
    })
}
