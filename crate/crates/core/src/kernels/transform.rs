use nalgebra::{DMatrix, DVector};

use crate::error::{LakeError, Result};
use crate::kernels::HalfSpacePoint;

/// Linear change of variables that brings the frozen principal part to the
/// model form. The last row is `e_n`, so `x~_n = x_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenTransform {
    pub matrix: DMatrix<f64>,
    pub det: f64,
}

impl FrozenTransform {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, x: &HalfSpacePoint) -> HalfSpacePoint {
        let v = DVector::from_iterator(x.dim(), (0..x.dim()).map(|k| x.coord(k)));
        let w = &self.matrix * v;
        let n = w.len();
        HalfSpacePoint { tangential: w.rows(0, n - 1).iter().cloned().collect(), normal: w[n - 1] }
    }

    /// `T p T^t`.
    pub fn conjugate(&self, p: &DMatrix<f64>) -> DMatrix<f64> {
        &self.matrix * p * self.matrix.transpose()
    }
}

/// For `p = [[P, q], [q^t, 1]]` with Schur complement `S = P - q q^t = L L^t`,
/// `T = [[L^-1, -L^-1 q], [0, 1]]` gives `T p T^t = I`.
pub fn frozen_transform(p: &DMatrix<f64>) -> Result<FrozenTransform> {
    let n = p.nrows();
    if n < 2 || p.ncols() != n {
        return Err(LakeError::Precondition(format!("coefficient matrix must be square of size >= 2, got {}x{}", n, p.ncols())));
    }
    let scale = p.amax().max(1.0);
    if (p - p.transpose()).amax() > 1e-12 * scale {
        return Err(LakeError::Precondition("coefficient matrix is not symmetric".into()));
    }
    if (p[(n - 1, n - 1)] - 1.0).abs() > 1e-12 {
        return Err(LakeError::Precondition(format!(
            "normalize so that p_nn = 1 (got {})",
            p[(n - 1, n - 1)]
        )));
    }
    let m = n - 1;
    let big_p = p.view((0, 0), (m, m)).into_owned();
    let q = p.view((0, m), (m, 1)).into_owned();
    let schur = &big_p - &q * q.transpose();
    let chol = schur
        .cholesky()
        .ok_or_else(|| LakeError::Precondition("coefficient matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| LakeError::Precondition("coefficient matrix is not positive definite".into()))?;
    let mut t = DMatrix::zeros(n, n);
    t.view_mut((0, 0), (m, m)).copy_from(&linv);
    t.view_mut((0, m), (m, 1)).copy_from(&(-(&linv * &q)));
    t[(m, m)] = 1.0;
    let det = 1.0 / l.diagonal().product();
    Ok(FrozenTransform { matrix: t, det })
}
