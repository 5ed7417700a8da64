//! Embedded primal-dual interior-point solver for small dense SDPs.
//!
//! Solves `min ⟨C, Z⟩ s.t. ⟨A_i, Z⟩ = b_i, Z ⪰ 0` for a single dense PSD
//! block using Nesterov-Todd scaling, a Mehrotra-style predictor step for the
//! centering parameter, and a direct Cholesky solve of the dense Schur
//! complement. Sized for blocks of order ~10 with a few dozen constraints;
//! everything is deterministic (no randomized pivoting), so identical inputs
//! produce identical iterates.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::qcqp::QcqpProblem;

/// Tolerances and iteration limits for [`solve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdpSettings {
    /// Absolute primal feasibility and relative dual feasibility target.
    pub tol_feas: f64,
    /// Complementarity gap target, relative to 1 + |objective|.
    pub tol_gap: f64,
    pub max_iterations: usize,
    /// Static Tikhonov term added to the Schur complement diagonal.
    pub static_reg: f64,
}

impl Default for SdpSettings {
    fn default() -> Self {
        Self {
            tol_feas: 1e-9,
            tol_gap: 1e-9,
            max_iterations: 100,
            static_reg: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    /// Feasibility and gap targets met.
    Optimal,
    /// Iteration limit hit before the targets were met.
    MaxIterations,
    /// A Farkas-type certificate of primal infeasibility was found.
    Infeasible,
    /// A factorization broke down and regularization retries did not help.
    NumericalFailure,
}

/// Equality-constrained SDP data: `min ⟨objective, Z⟩` subject to
/// `⟨A_i, Z⟩ = b_i` and `Z ⪰ 0`. All matrices must be symmetric.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub objective: DMatrix<f64>,
    pub constraints: Vec<(DMatrix<f64>, f64)>,
}

impl SdpProblem {
    /// Wraps a lifted pose problem: the 21 homogeneous rotation constraints
    /// plus the corner normalization Z[10,10] = 1.
    pub fn from_qcqp(problem: &QcqpProblem) -> Self {
        let mut constraints: Vec<(DMatrix<f64>, f64)> = problem
            .constraints
            .iter()
            .map(|(_, q)| (q.clone(), 0.0))
            .collect();
        let mut corner = DMatrix::zeros(10, 10);
        corner[(9, 9)] = 1.0;
        constraints.push((corner, 1.0));
        Self {
            objective: problem.q0.clone(),
            constraints,
        }
    }
}

/// Solver output. When `status` is `Optimal` the solution satisfies the
/// feasibility/gap contract of the settings it was produced with.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub z: DMatrix<f64>,
    pub objective_value: f64,
    pub status: SdpStatus,
    pub iterations: usize,
    /// Largest absolute equality-constraint violation.
    pub primal_residual: f64,
    /// Largest dual-slack residual, relative to the objective scale.
    pub dual_residual: f64,
    /// Complementarity gap ⟨Z, S⟩.
    pub gap: f64,
    /// Dual multipliers, one per constraint.
    pub y: DVector<f64>,
}

/// Per-constraint residual report for a candidate solution.
#[derive(Debug, Clone)]
pub struct Certificate {
    /// ⟨A_i, Z⟩ − b_i for every constraint, in problem order.
    pub constraint_residuals: Vec<f64>,
    pub min_eigenvalue: f64,
    pub gap: f64,
    pub objective_value: f64,
}

impl Certificate {
    pub fn max_equality_violation(&self) -> f64 {
        self.constraint_residuals
            .iter()
            .fold(0.0, |acc, r| acc.max(r.abs()))
    }

    pub fn psd_violated(&self, tol: f64) -> bool {
        self.min_eigenvalue < -tol
    }

    /// True when equality residuals, PSD margin and gap all meet `tol`.
    pub fn within(&self, tol: f64) -> bool {
        self.max_equality_violation() <= tol
            && !self.psd_violated(tol)
            && self.gap <= tol * (1.0 + self.objective_value.abs())
    }
}

/// Recomputes all residuals of `solution.z` against the problem data.
pub fn certificate(solution: &SdpSolution, problem: &SdpProblem) -> Certificate {
    let z = &solution.z;
    let constraint_residuals = problem
        .constraints
        .iter()
        .map(|(a, b)| frob_dot(a, z) - b)
        .collect();
    let min_eigenvalue = z.clone().symmetric_eigenvalues().min();
    Certificate {
        constraint_residuals,
        min_eigenvalue,
        gap: solution.gap,
        objective_value: frob_dot(&problem.objective, z),
    }
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Largest step α ≤ 1 with X + α·ΔX ⪰ (1 − radius)·boundary, computed from
/// the smallest eigenvalue of L⁻¹·ΔX·L⁻ᵀ.
fn max_step(chol_x: &Cholesky<f64, Dyn>, dx: &DMatrix<f64>) -> f64 {
    let l = chol_x.l();
    let y = l
        .solve_lower_triangular(dx)
        .expect("cholesky factor has positive diagonal");
    let t = l
        .solve_lower_triangular(&y.transpose())
        .expect("cholesky factor has positive diagonal");
    let mut sym_t = t;
    symmetrize(&mut sym_t);
    let lambda_min = sym_t.symmetric_eigenvalues().min();
    if lambda_min >= -1e-14 {
        1.0
    } else {
        (-1.0 / lambda_min).min(1.0)
    }
}

struct Direction {
    dz: DMatrix<f64>,
    dy: DVector<f64>,
    ds: DMatrix<f64>,
}

/// Solves the scaled Newton system for a given complementarity target
/// `e = σμS⁻¹ − Z` (predictor uses `e = −Z`).
#[allow(clippy::too_many_arguments)]
fn newton_direction(
    a_mats: &[DMatrix<f64>],
    schur: &Cholesky<f64, Dyn>,
    w: &DMatrix<f64>,
    r_p: &DVector<f64>,
    r_d: &DMatrix<f64>,
    e: &DMatrix<f64>,
) -> Direction {
    let w_rd_w = w * r_d * w;
    let fixed = e - &w_rd_w;
    let m = a_mats.len();
    let mut rhs = DVector::zeros(m);
    for (i, a) in a_mats.iter().enumerate() {
        rhs[i] = r_p[i] - frob_dot(a, &fixed);
    }
    let dy = schur.solve(&rhs);

    let mut ds = r_d.clone();
    for (j, a) in a_mats.iter().enumerate() {
        ds -= a * dy[j];
    }
    let mut dz = e - w * &ds * w;
    symmetrize(&mut dz);
    Direction { dz, dy, ds }
}

/// Runs the interior-point iteration. Deterministic: two calls with the same
/// inputs return bitwise-identical results.
pub fn solve(problem: &SdpProblem, settings: &SdpSettings) -> SdpSolution {
    let n = problem.objective.nrows();
    assert_eq!(problem.objective.ncols(), n, "objective must be square");
    assert!(
        !problem.constraints.is_empty(),
        "at least one equality constraint is required"
    );
    for (a, _) in &problem.constraints {
        assert_eq!(a.shape(), (n, n), "constraint matrices must match the block");
    }

    let c = &problem.objective;
    let a_mats: Vec<DMatrix<f64>> = problem.constraints.iter().map(|(a, _)| a.clone()).collect();
    let b = DVector::from_iterator(a_mats.len(), problem.constraints.iter().map(|(_, b)| *b));
    let m = a_mats.len();
    let c_scale = 1.0 + c.amax();

    let mut z = DMatrix::<f64>::identity(n, n) * 10.0;
    let mut s = DMatrix::<f64>::identity(n, n) * 10.0;
    let mut y = DVector::<f64>::zeros(m);

    let mut iterations = 0;
    let mut status = SdpStatus::MaxIterations;

    let finish = |z: DMatrix<f64>,
                  y: DVector<f64>,
                  s: &DMatrix<f64>,
                  status: SdpStatus,
                  iterations: usize| {
        let pobj = frob_dot(c, &z);
        let gap = frob_dot(&z, s);
        let mut p_res = 0.0f64;
        for (i, a) in a_mats.iter().enumerate() {
            p_res = p_res.max((frob_dot(a, &z) - b[i]).abs());
        }
        let mut r_d = c - s;
        for (j, a) in a_mats.iter().enumerate() {
            r_d -= a * y[j];
        }
        SdpSolution {
            z,
            objective_value: pobj,
            status,
            iterations,
            primal_residual: p_res,
            dual_residual: r_d.amax() / c_scale,
            gap,
            y,
        }
    };

    // Farkas-style check: a normalized ray with Aᵀ(ŷ) ⪯ 0 and bᵀŷ > 0
    // certifies primal infeasibility.
    let infeasibility_certificate = |y: &DVector<f64>, threshold: f64| -> bool {
        let y_norm = y.amax();
        if y_norm < threshold {
            return false;
        }
        let y_hat = y / y_norm;
        if b.dot(&y_hat) <= 1e-6 {
            return false;
        }
        let mut aty = DMatrix::<f64>::zeros(n, n);
        for (j, a) in a_mats.iter().enumerate() {
            aty += a * y_hat[j];
        }
        aty.symmetric_eigenvalues().max() <= 1e-8
    };

    for iter in 0..settings.max_iterations {
        iterations = iter;

        // Residuals.
        let mut r_p = DVector::zeros(m);
        let mut p_res = 0.0f64;
        for (i, a) in a_mats.iter().enumerate() {
            r_p[i] = b[i] - frob_dot(a, &z);
            p_res = p_res.max(r_p[i].abs());
        }
        let mut r_d = c - &s;
        for (j, a) in a_mats.iter().enumerate() {
            r_d -= a * y[j];
        }
        let d_res = r_d.amax() / c_scale;
        let gap = frob_dot(&z, &s);
        let pobj = frob_dot(c, &z);
        let mu = gap / n as f64;

        if p_res <= settings.tol_feas
            && d_res <= settings.tol_feas
            && gap <= settings.tol_gap * (1.0 + pobj.abs())
        {
            status = SdpStatus::Optimal;
            break;
        }

        if infeasibility_certificate(&y, 1e4) {
            status = SdpStatus::Infeasible;
            break;
        }

        // Nesterov-Todd scaling point W = G·Gᵀ with W·S·W = Z.
        let Some(chol_z) = Cholesky::new(z.clone()) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let Some(chol_s) = Cholesky::new(s.clone()) else {
            status = SdpStatus::NumericalFailure;
            break;
        };
        let l_z = chol_z.l();
        let l_s = chol_s.l();
        let svd = (l_s.transpose() * &l_z).svd(true, true);
        let v_t = svd.v_t.as_ref().expect("svd requested v_t");
        let mut scale = DMatrix::zeros(n, n);
        for i in 0..n {
            scale[(i, i)] = 1.0 / svd.singular_values[i].max(1e-300).sqrt();
        }
        let g = &l_z * v_t.transpose() * scale;
        let mut w = &g * g.transpose();
        symmetrize(&mut w);

        // Schur complement M_ij = ⟨A_i, W·A_j·W⟩ with static regularization.
        let mut schur_mat = DMatrix::zeros(m, m);
        for (j, a_j) in a_mats.iter().enumerate() {
            let b_j = &w * a_j * &w;
            for (i, a_i) in a_mats.iter().enumerate() {
                schur_mat[(i, j)] = frob_dot(a_i, &b_j);
            }
        }
        symmetrize(&mut schur_mat);
        let diag_scale = schur_mat.diagonal().amax().max(1.0);

        let mut reg = settings.static_reg;
        let schur = loop {
            let mut regularized = schur_mat.clone();
            for i in 0..m {
                regularized[(i, i)] += reg * diag_scale;
            }
            match Cholesky::new(regularized) {
                Some(f) => break Some(f),
                None => {
                    reg *= 100.0;
                    if reg > 1e-2 {
                        break None;
                    }
                }
            }
        };
        let Some(schur) = schur else {
            status = SdpStatus::NumericalFailure;
            break;
        };

        let s_inv = chol_s.inverse();

        // Predictor: pure affine direction to choose the centering weight.
        let predictor = newton_direction(&a_mats, &schur, &w, &r_p, &r_d, &(-&z));
        let alpha_p_aff = max_step(&chol_z, &predictor.dz);
        let alpha_d_aff = max_step(&chol_s, &predictor.ds);
        let z_aff = &z + &predictor.dz * alpha_p_aff;
        let s_aff = &s + &predictor.ds * alpha_d_aff;
        let mu_aff = frob_dot(&z_aff, &s_aff).max(0.0) / n as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Combined centering step.
        let e = &s_inv * (sigma * mu) - &z;
        let dir = newton_direction(&a_mats, &schur, &w, &r_p, &r_d, &e);

        let mut alpha_p = (0.98 * max_step(&chol_z, &dir.dz)).min(1.0);
        let mut alpha_d = (0.98 * max_step(&chol_s, &dir.ds)).min(1.0);

        // Commit, backing off if rounding pushed an iterate out of the cone.
        let mut committed = false;
        for _ in 0..30 {
            let z_next = &z + &dir.dz * alpha_p;
            let s_next = &s + &dir.ds * alpha_d;
            if Cholesky::new(z_next.clone()).is_some() && Cholesky::new(s_next.clone()).is_some() {
                z = z_next;
                s = s_next;
                y += &dir.dy * alpha_d;
                committed = true;
                break;
            }
            alpha_p *= 0.5;
            alpha_d *= 0.5;
        }
        if !committed {
            status = SdpStatus::NumericalFailure;
            break;
        }
        iterations = iter + 1;
    }

    if status == SdpStatus::MaxIterations && infeasibility_certificate(&y, 1e2) {
        status = SdpStatus::Infeasible;
    }

    finish(z, y, &s, status, iterations)
}
