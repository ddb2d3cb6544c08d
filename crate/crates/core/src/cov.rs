//! Covariance assembly, Cholesky factorisation and matrix fidelity metrics.

use crate::error::CoreError;
use crate::grid::Grid;
use crate::kernel::{kernel_eval, kernel_eval_dlengthscale, KernelSpec};
use crate::Result;
use ndarray::{Array1, Array2, Axis};

/// Dense covariance matrix over a grid, with the stabilising jitter already
/// added to the diagonal.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    pub entries: Array2<f64>,
    pub jitter: f64,
}

/// Default diagonal jitter. The decomposition needs a floor once lengthscales
/// approach the grid extent and the matrix turns numerically singular.
pub const DEFAULT_JITTER: f64 = 1e-6;

/// Assembles `K[i][j] = κ(g_i, g_j) + jitter·[i=j]`.
pub fn build_covariance(spec: &KernelSpec, grid: &Grid, jitter: f64) -> Result<CovMatrix> {
    if jitter < 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "jitter must be nonnegative, got {jitter}"
        )));
    }
    let n = grid.len();
    let mut entries = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_eval(spec, grid.point(i), grid.point(j))?;
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
        entries[[i, i]] += jitter;
    }
    Ok(CovMatrix { entries, jitter })
}

/// Entrywise derivative of the covariance with respect to the lengthscale
/// (jitter contributes nothing).
pub fn build_covariance_dlengthscale(spec: &KernelSpec, grid: &Grid) -> Result<Array2<f64>> {
    let n = grid.len();
    let mut entries = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_eval_dlengthscale(spec, grid.point(i), grid.point(j))?;
            entries[[i, j]] = v;
            entries[[j, i]] = v;
        }
    }
    Ok(entries)
}

impl CovMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Maximum absolute asymmetry; the builder produces exactly 0.
    pub fn asymmetry(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.entries[[i, j]] - self.entries[[j, i]]).abs());
            }
        }
        worst
    }

    pub fn cholesky_lower(&self) -> Result<Array2<f64>> {
        cholesky_lower(&self.entries)
    }
}

/// Lower-triangular Cholesky factor of a symmetric matrix, `L·Lᵀ = K`.
/// A non-positive pivot aborts with the failing index.
pub fn cholesky_lower(k: &Array2<f64>) -> Result<Array2<f64>> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(CoreError::ShapeMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            k.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let mut diag = k[[j, j]];
        for t in 0..j {
            diag -= l[[j, t]] * l[[j, t]];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(CoreError::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let d = diag.sqrt();
        l[[j, j]] = d;
        for i in (j + 1)..n {
            let mut s = k[[i, j]];
            for t in 0..j {
                s -= l[[i, t]] * l[[j, t]];
            }
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L x = b` by forward substitution (`L` lower triangular).
pub fn forward_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        let mut s = x[i];
        for t in 0..i {
            s -= l[[i, t]] * x[t];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Solves `L X = B` column-block forward substitution.
fn forward_solve_matrix(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        for t in 0..i {
            let lit = l[[i, t]];
            if lit != 0.0 {
                let (head, mut tail) = x.view_mut().split_at(Axis(0), i);
                let row_t = head.row(t).to_owned();
                let mut row_i = tail.row_mut(0);
                row_i.scaled_add(-lit, &row_t);
            }
        }
        let d = l[[i, i]];
        x.row_mut(i).mapv_inplace(|v| v / d);
    }
    x
}

/// Directional derivative of the Cholesky factor: given `L` with `L·Lᵀ = K`
/// and a symmetric perturbation `dK`, returns `dL = L·Φ(L⁻¹ dK L⁻ᵀ)` where
/// `Φ` keeps the strict lower triangle and halves the diagonal.
pub fn cholesky_dlower(l: &Array2<f64>, dk: &Array2<f64>) -> Array2<f64> {
    let a = forward_solve_matrix(l, dk);
    let b = forward_solve_matrix(l, &a.t().to_owned());
    let n = l.nrows();
    let mut phi = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..i {
            phi[[i, j]] = b[[i, j]];
        }
        phi[[i, i]] = 0.5 * b[[i, i]];
    }
    l.dot(&phi)
}

/// Unbiased sample covariance across rows (mean-subtracted, divisor m−1).
pub fn empirical_covariance(rows: &Array2<f64>) -> Result<Array2<f64>> {
    let m = rows.nrows();
    if m < 2 {
        return Err(CoreError::InsufficientData(format!(
            "sample covariance needs at least 2 rows, got {m}"
        )));
    }
    let mean = rows.mean_axis(Axis(0)).expect("nonempty");
    let centered = rows - &mean.insert_axis(Axis(0));
    Ok(centered.t().dot(&centered) / (m as f64 - 1.0))
}

/// Frobenius distance `‖A − B‖_F`.
pub fn frobenius_distance(a: &Array2<f64>, b: &Array2<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(CoreError::ShapeMismatch(format!(
            "frobenius distance over shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok((a - b).iter().map(|v| v * v).sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn one_point_rbf_unit() {
        let grid = Grid::equispaced_1d(1, 0.0, 1.0).unwrap();
        let spec = KernelSpec::rbf(0.5, 1.0).unwrap();
        let k = build_covariance(&spec, &grid, 0.0).unwrap();
        assert_eq!(k.entries, array![[1.0]]);
    }

    #[test]
    fn two_point_matern12_closed_form() {
        let grid = Grid::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let spec = KernelSpec::matern12(1.0, 1.0).unwrap();
        let k = build_covariance(&spec, &grid, 0.0).unwrap();
        let e = (-1.0_f64).exp();
        assert_relative_eq!(k.entries[[0, 1]], e, max_relative = 1e-15);
        assert_relative_eq!(k.entries[[1, 0]], e, max_relative = 1e-15);
        assert_eq!(k.entries[[0, 0]], 1.0);
    }

    #[test]
    fn covariance_is_symmetric() {
        let grid = Grid::equispaced_1d(13, 0.0, 1.0).unwrap();
        let spec = KernelSpec::matern52(0.17, 1.0).unwrap();
        let k = build_covariance(&spec, &grid, 1e-6).unwrap();
        assert_eq!(k.asymmetry(), 0.0);
    }

    #[test]
    fn cholesky_identity() {
        let eye = Array2::<f64>::eye(3);
        let l = cholesky_lower(&eye).unwrap();
        assert_eq!(l, eye);
    }

    #[test]
    fn cholesky_hand_computed_2x2() {
        let k = array![[4.0, 2.0], [2.0, 5.0]];
        let l = cholesky_lower(&k).unwrap();
        assert_eq!(l, array![[2.0, 0.0], [1.0, 2.0]]);
    }

    #[test]
    fn cholesky_reconstructs_rbf_on_experiment_grid() {
        let grid = Grid::equispaced_1d(80, 0.0, 1.0).unwrap();
        for ell in [0.01, 0.05, 0.2, 1.0] {
            let spec = KernelSpec::rbf(ell, 1.0).unwrap();
            let k = build_covariance(&spec, &grid, 1e-6).unwrap();
            let l = k.cholesky_lower().unwrap();
            let rebuilt = l.dot(&l.t());
            let err = frobenius_distance(&rebuilt, &k.entries).unwrap();
            let scale = k.entries.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                err / scale < 1e-8,
                "relative reconstruction error {} at ell={ell}",
                err / scale
            );
        }
    }

    #[test]
    fn cholesky_failure_names_pivot() {
        let k = array![[1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, 1.0]];
        match cholesky_lower(&k) {
            Err(CoreError::NotPositiveDefinite { pivot, value }) => {
                assert_eq!(pivot, 1);
                assert_eq!(value, -2.0);
            }
            other => panic!("expected pivot failure, got {other:?}"),
        }
    }

    #[test]
    fn dcholesky_matches_finite_differences() {
        let grid = Grid::equispaced_1d(12, 0.0, 1.0).unwrap();
        let ell = 0.3;
        let h = 1e-6;
        let k0 = build_covariance(&KernelSpec::rbf(ell, 1.0).unwrap(), &grid, 1e-6).unwrap();
        let kp = build_covariance(&KernelSpec::rbf(ell + h, 1.0).unwrap(), &grid, 1e-6).unwrap();
        let km = build_covariance(&KernelSpec::rbf(ell - h, 1.0).unwrap(), &grid, 1e-6).unwrap();
        let l0 = k0.cholesky_lower().unwrap();
        let dk = build_covariance_dlengthscale(&KernelSpec::rbf(ell, 1.0).unwrap(), &grid).unwrap();
        let dl = cholesky_dlower(&l0, &dk);
        let fd = (kp.cholesky_lower().unwrap() - km.cholesky_lower().unwrap()) / (2.0 * h);
        for i in 0..12 {
            for j in 0..=i {
                assert_relative_eq!(dl[[i, j]], fd[[i, j]], max_relative = 1e-4, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn empirical_covariance_identical_rows_is_zero() {
        let rows = Array2::from_shape_fn((5, 3), |(_, j)| j as f64);
        let c = empirical_covariance(&rows).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn empirical_covariance_alternating_sign_rows() {
        // rows +v, −v, +v, −v: covariance = (m/(m−1))·v vᵀ with m=4.
        let v = array![1.0, -2.0, 0.5];
        let mut rows = Array2::zeros((4, 3));
        for i in 0..4 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            rows.row_mut(i).assign(&(&v * sign));
        }
        let c = empirical_covariance(&rows).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(
                    c[[i, j]],
                    4.0 / 3.0 * v[i] * v[j],
                    max_relative = 1e-14,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn empirical_covariance_needs_two_rows() {
        let rows = Array2::zeros((1, 3));
        assert!(empirical_covariance(&rows).is_err());
    }

    #[test]
    fn frobenius_known_values() {
        let a = Array2::<f64>::eye(3);
        assert_eq!(frobenius_distance(&a, &a).unwrap(), 0.0);
        let b = &a + &Array2::<f64>::eye(3);
        assert_relative_eq!(
            frobenius_distance(&a, &b).unwrap(),
            3.0_f64.sqrt(),
            max_relative = 1e-15
        );
        let p = array![[1.0, 0.0], [0.0, 1.0]];
        let q = array![[0.0, 1.0], [1.0, 0.0]];
        assert_eq!(frobenius_distance(&p, &q).unwrap(), 2.0);
        assert!(frobenius_distance(&a, &p).is_err());
    }

    #[test]
    fn frobenius_is_a_metric_on_random_triples() {
        let mut rng = stream_rng(11, 0);
        for _ in 0..50 {
            let draw = |rng: &mut rand_chacha::ChaCha8Rng| {
                Array2::from_shape_fn((4, 4), |_| StandardNormal.sample(rng))
            };
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            let c = draw(&mut rng);
            let dab = frobenius_distance(&a, &b).unwrap();
            let dba = frobenius_distance(&b, &a).unwrap();
            let dac = frobenius_distance(&a, &c).unwrap();
            let dcb = frobenius_distance(&c, &b).unwrap();
            assert_eq!(dab, dba);
            assert_eq!(frobenius_distance(&a, &a).unwrap(), 0.0);
            assert!(dab <= dac + dcb + 1e-12);
            if dab == 0.0 {
                assert_eq!(a, b);
            }
        }
    }
}
