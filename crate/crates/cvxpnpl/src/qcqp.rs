//! Lifts the reduced least-squares problem into the homogeneous 10-dim space
//! r̃ = [vec(R)ᵀ 1]ᵀ: a quadratic cost matrix Q₀ plus the 21 quadratic
//! equality constraints that characterize proper rotations (row and column
//! orthogonality plus the right-hand-rule column cross products).

use nalgebra::{DMatrix, Matrix3, SVector, Vector3};

use crate::assembly::vec_mat3;
use crate::error::{Error, Result};
use crate::geometry::skew;

/// Identifies one of the 21 rotation constraints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintLabel {
    /// (R·Rᵀ)_ij − δ_ij = 0, 1-based indices, i ≤ j.
    RowOrth(usize, usize),
    /// (Rᵀ·R)_ij − δ_ij = 0, 1-based indices, i ≤ j.
    ColOrth(usize, usize),
    /// e_lᵀ(R⁽ⁱ⁾ × R⁽ʲ⁾ − R⁽ᵏ⁾) = 0 for a cyclic triple (i,j,k).
    Det {
        triple: (usize, usize, usize),
        component: usize,
    },
}

impl std::fmt::Display for ConstraintLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintLabel::RowOrth(i, j) => write!(f, "row-orth {i}{j}"),
            ConstraintLabel::ColOrth(i, j) => write!(f, "col-orth {i}{j}"),
            ConstraintLabel::Det { triple, component } => {
                write!(f, "det ({},{},{}) l={component}", triple.0, triple.1, triple.2)
            }
        }
    }
}

/// The homogenized QCQP: cost matrix plus the labelled constraint matrices,
/// all 10x10 and exactly symmetric.
#[derive(Debug, Clone)]
pub struct QcqpProblem {
    pub q0: DMatrix<f64>,
    pub constraints: Vec<(ConstraintLabel, DMatrix<f64>)>,
}

impl QcqpProblem {
    /// Largest constraint violation |r̃ᵀQᵢr̃| over all 21 constraints.
    pub fn max_violation(&self, r_tilde: &SVector<f64, 10>) -> f64 {
        self.constraints
            .iter()
            .map(|(_, q)| evaluate(q, r_tilde).abs())
            .fold(0.0, f64::max)
    }
}

/// Homogenizes a rotation matrix: [vec(R)ᵀ 1]ᵀ.
pub fn r_tilde(r: &Matrix3<f64>) -> SVector<f64, 10> {
    let v = vec_mat3(r);
    SVector::<f64, 10>::from_fn(|i, _| if i < 9 { v[i] } else { 1.0 })
}

/// Evaluates the quadratic form r̃ᵀ·Q·r̃.
pub fn evaluate(q: &DMatrix<f64>, rt: &SVector<f64, 10>) -> f64 {
    let mut acc = 0.0;
    for i in 0..10 {
        let mut row = 0.0;
        for j in 0..10 {
            row += q[(i, j)] * rt[j];
        }
        acc += rt[i] * row;
    }
    acc
}

fn unit3(i: usize) -> Vector3<f64> {
    let mut v = Vector3::zeros();
    v[i - 1] = 1.0;
    v
}

fn e_mat(i: usize, j: usize) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    m[(i - 1, j - 1)] = 1.0;
    m
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

fn kron3x3(a: &Matrix3<f64>, b: &Matrix3<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(9, 9);
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    out[(3 * i + k, 3 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

fn embed(top_left: &DMatrix<f64>, corner: f64) -> DMatrix<f64> {
    let mut q = DMatrix::zeros(10, 10);
    q.view_mut((0, 0), (9, 9)).copy_from(top_left);
    q[(9, 9)] = corner;
    q
}

/// Cost matrix: AᵀA in the top-left block, zero elsewhere, so that
/// r̃ᵀQ₀r̃ = ‖A·vec(R)‖².
pub fn build_cost(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), 9, "reduced system must have 9 columns");
    let mut ata = a.transpose() * a;
    // Products of transposes are symmetric only up to rounding.
    let t = ata.transpose();
    ata += t;
    ata *= 0.5;
    embed(&ata, 0.0)
}

/// Row-orthogonality constraint matrix for (R·Rᵀ)_ij = δ_ij.
pub fn build_row_orth(i: usize, j: usize) -> DMatrix<f64> {
    assert!((1..=3).contains(&i) && i <= j && j <= 3);
    let delta = if i == j { 1.0 } else { 0.0 };
    let mut q = embed(&kron3x3(&Matrix3::identity(), &e_mat(j, i)), -delta);
    symmetrize(&mut q);
    q
}

/// Column-orthogonality constraint matrix for (Rᵀ·R)_ij = δ_ij.
pub fn build_col_orth(i: usize, j: usize) -> DMatrix<f64> {
    assert!((1..=3).contains(&i) && i <= j && j <= 3);
    let delta = if i == j { 1.0 } else { 0.0 };
    let mut q = embed(&kron3x3(&e_mat(i, j), &Matrix3::identity()), -delta);
    symmetrize(&mut q);
    q
}

const CYCLIC_TRIPLES: [(usize, usize, usize); 3] = [(1, 2, 3), (2, 3, 1), (3, 1, 2)];

/// Determinant (right-hand-rule) constraint matrix for component `l` of
/// R⁽ⁱ⁾ × R⁽ʲ⁾ = R⁽ᵏ⁾.
pub fn build_det(i: usize, j: usize, k: usize, l: usize) -> Result<DMatrix<f64>> {
    if !CYCLIC_TRIPLES.contains(&(i, j, k)) {
        return Err(Error::InvalidTriple { i, j, k });
    }
    assert!((1..=3).contains(&l));

    let mut q = embed(&kron3x3(&e_mat(j, i), &skew(&unit3(l))), 0.0);
    // Linear part −(e_k ⊗ e_l) sits in the homogeneous column.
    let lin = unit3(k).kronecker(&unit3(l));
    for row in 0..9 {
        q[(row, 9)] = -lin[row];
    }
    symmetrize(&mut q);
    Ok(q)
}

/// Builds the full problem: Q₀ plus the 21 constraints in a fixed order
/// (row-orth 11,12,13,22,23,33; col-orth likewise; det by triple then l).
pub fn build_problem(a: &DMatrix<f64>) -> QcqpProblem {
    let mut constraints = Vec::with_capacity(21);
    for i in 1..=3 {
        for j in i..=3 {
            constraints.push((ConstraintLabel::RowOrth(i, j), build_row_orth(i, j)));
        }
    }
    for i in 1..=3 {
        for j in i..=3 {
            constraints.push((ConstraintLabel::ColOrth(i, j), build_col_orth(i, j)));
        }
    }
    for &(i, j, k) in &CYCLIC_TRIPLES {
        for l in 1..=3 {
            constraints.push((
                ConstraintLabel::Det {
                    triple: (i, j, k),
                    component: l,
                },
                build_det(i, j, k, l).expect("cyclic triples are valid"),
            ));
        }
    }
    QcqpProblem {
        q0: build_cost(a),
        constraints,
    }
}
