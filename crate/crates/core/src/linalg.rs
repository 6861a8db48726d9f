//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative singular-value threshold below which a design is treated as
/// rank deficient.
pub const RANK_TOL: f64 = 1e-10;

/// Least-squares solution of `a x ≈ b` via Householder QR.
///
/// Columns are equilibrated to unit norm before factorising; the rank check
/// compares the singular values of the triangular factor (equal to those of
/// the scaled design) against [`RANK_TOL`].
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = a.shape();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!(
            "least squares: {n} rows but {} responses",
            b.len()
        )));
    }
    if n < p {
        return Err(Error::SingularDesign(format!(
            "{n} rows cannot identify {p} coefficients"
        )));
    }
    let mut scale = Vec::with_capacity(p);
    let mut scaled = a.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        let norm = col.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::SingularDesign(format!("column {j} is zero or non-finite")));
        }
        col /= norm;
        scale.push(1.0 / norm);
    }
    let qr = scaled.qr();
    let r = qr.r();
    let sv = r.singular_values();
    let max = sv.max();
    let min = sv.min();
    if !(min > RANK_TOL * max) {
        return Err(Error::SingularDesign(format!(
            "condition {:.3e} exceeds 1/{RANK_TOL:e}",
            max / min
        )));
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let head = qtb.rows(0, p).into_owned();
    let gamma = r
        .solve_upper_triangular(&head)
        .ok_or_else(|| Error::SingularDesign("zero pivot in triangular solve".into()))?;
    Ok(DVector::from_iterator(p, gamma.iter().zip(&scale).map(|(g, s)| g * s)))
}

/// Solve a square system through [`least_squares`] so the same rank rule
/// applies.
pub fn solve_square(m: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("solve_square needs a square matrix".into()));
    }
    least_squares(m, rhs)
}

/// Euclidean projection of `v` onto `{x : a_i · x >= b_i}` (rows `a_i` of
/// `a`), by the Goldfarb–Idnani dual active-set method specialised to an
/// identity Hessian.
pub fn project_polyhedron(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let (m, p) = a.shape();
    let mut x = v.clone();
    let mut active: Vec<usize> = Vec::new();
    let mut u: Vec<f64> = Vec::new();
    let slack = |x: &DVector<f64>, j: usize| a.row(j).transpose().dot(x) - b[j];
    let tol = |j: usize| 1e-12 * (1.0 + b[j].abs() + a.row(j).norm() * x_norm_hint(v));

    for _ in 0..(10 * m + 100) {
        let mut worst = None;
        let mut worst_s = 0.0;
        for j in 0..m {
            let s = slack(&x, j);
            if s < -tol(j) && s < worst_s {
                worst_s = s;
                worst = Some(j);
            }
        }
        let Some(pi) = worst else {
            return Ok(x);
        };
        let np: DVector<f64> = a.row(pi).transpose();
        let mut u_p = 0.0;
        loop {
            let k = active.len();
            let (z, r) = if k == 0 {
                (np.clone(), DVector::zeros(0))
            } else {
                let nmat = DMatrix::from_fn(p, k, |i, c| a[(active[c], i)]);
                let g = nmat.transpose() * &nmat;
                let r = g
                    .cholesky()
                    .ok_or_else(|| Error::Infeasible("dependent active constraints".into()))?
                    .solve(&(nmat.transpose() * &np));
                (&np - &nmat * &r, r)
            };
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for j in 0..k {
                if r[j] > 0.0 {
                    let ratio = u[j] / r[j];
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(j);
                    }
                }
            }
            let zz = z.dot(&np);
            let t2 = if z.norm_squared() > 1e-14 * np.norm_squared() {
                -slack(&x, pi) / zz
            } else {
                f64::INFINITY
            };
            if t1.is_infinite() && t2.is_infinite() {
                return Err(Error::Infeasible(format!(
                    "constraint {pi} cannot be satisfied together with the active set"
                )));
            }
            let t = t1.min(t2);
            if t2.is_finite() {
                x += &z * t;
            }
            for j in 0..k {
                u[j] -= t * r[j];
            }
            u_p += t;
            if t2 <= t1 {
                active.push(pi);
                u.push(u_p);
                break;
            }
            let d = drop.expect("finite partial step has a blocking index");
            active.remove(d);
            u.remove(d);
        }
    }
    Err(Error::NonConvergence {
        iterations: 10 * m + 100,
        reason: "polyhedral projection did not terminate".into(),
    })
}

fn x_norm_hint(v: &DVector<f64>) -> f64 {
    v.amax()
}

/// `dᵀ S⁺ d` for symmetric positive semi-definite `S`, keeping eigenvalues
/// above `rel_tol * max`. Returns the quadratic form and the retained rank.
pub fn pinv_quadratic(s: &DMatrix<f64>, d: &DVector<f64>, rel_tol: f64) -> (f64, usize) {
    if s.nrows() == 0 {
        return (0.0, 0);
    }
    let eig = SymmetricEigen::new(s.clone());
    let max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return (0.0, 0);
    }
    let mut q = 0.0;
    let mut rank = 0;
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > rel_tol * max {
            let proj = eig.eigenvectors.column(i).dot(d);
            q += proj * proj / lam;
            rank += 1;
        }
    }
    (q, rank)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn least_squares_line() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 4.0]);
        let x = least_squares(&a, &b).unwrap();
        assert!((x[0] - 5.0 / 6.0).abs() < 1e-13);
        assert!((x[1] - 1.5).abs() < 1e-13);
    }

    #[test]
    fn collinear_columns_are_rejected() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 4.0]);
        assert!(matches!(least_squares(&a, &b), Err(Error::SingularDesign(_))));
    }

    #[test]
    fn scale_does_not_trigger_rank_failure() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1e6, 1.0, 2e6]);
        let b = DVector::from_vec(vec![1.0, 2.0, 4.0]);
        let x = least_squares(&a, &b).unwrap();
        assert!((x[1] - 1.5e-6).abs() < 1e-18);
    }

    #[test]
    fn projection_onto_halfplane() {
        // x + y >= 2, project origin -> (1, 1)
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![2.0]);
        let v = DVector::from_vec(vec![0.0, 0.0]);
        let x = project_polyhedron(&a, &b, &v).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_onto_orthant_corner() {
        // x >= 1, y >= 2, x + y >= 0 ; project (-5, -5) -> (1, 2)
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 0.0]);
        let v = DVector::from_vec(vec![-5.0, -5.0]);
        let x = project_polyhedron(&a, &b, &v).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn projection_of_feasible_point_is_identity() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let b = DVector::from_vec(vec![0.0, 0.0]);
        let v = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(project_polyhedron(&a, &b, &v).unwrap(), v);
    }

    #[test]
    fn infeasible_polyhedron() {
        // x >= 1 and -x >= 0
        let a = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let b = DVector::from_vec(vec![1.0, 0.0]);
        let v = DVector::from_vec(vec![0.5]);
        assert!(matches!(project_polyhedron(&a, &b, &v), Err(Error::Infeasible(_))));
    }

    #[test]
    fn projection_matches_brute_force_on_triangle() {
        // x >= 0, y >= 0, -x - y >= -1 (unit simplex). Grid search oracle.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, -1.0, -1.0]);
        let b = DVector::from_vec(vec![0.0, 0.0, -1.0]);
        for &(vx, vy) in &[(2.0, 2.0), (-1.0, 0.3), (0.9, -3.0), (0.2, 0.2), (1.5, -0.2)] {
            let v = DVector::from_vec(vec![vx, vy]);
            let x = project_polyhedron(&a, &b, &v).unwrap();
            let mut best = (f64::INFINITY, 0.0, 0.0);
            let steps = 2000;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let (px, py) = (i as f64 / steps as f64, j as f64 / steps as f64);
                    let d = (px - vx).powi(2) + (py - vy).powi(2);
                    if d < best.0 {
                        best = (d, px, py);
                    }
                }
            }
            assert!((x[0] - best.1).abs() < 1e-3 && (x[1] - best.2).abs() < 1e-3, "{vx},{vy}");
        }
    }

    #[test]
    fn pinv_quadratic_full_and_reduced_rank() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let d = DVector::from_vec(vec![2.0, 5.0]);
        let (q, rank) = pinv_quadratic(&s, &d, 1e-10);
        assert_eq!(rank, 1);
        assert!((q - 2.0).abs() < 1e-12);
        let (q0, r0) = pinv_quadratic(&DMatrix::zeros(2, 2), &d, 1e-10);
        assert_eq!((q0, r0), (0.0, 0));
    }
}
