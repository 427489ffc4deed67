//! Closed-form ridge regression via Cholesky on the normal equations.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RidgeFit {
    pub coefficients: DVector<f64>,
    pub intercept: f64,
}

/// Solve (X'X + lambda I) beta = X'y on column-centered data, with the
/// unpenalized intercept recovered from the means. `center = false`
/// fits through the origin with no intercept.
pub fn ridge_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    lambda: f64,
    center: bool,
) -> Result<RidgeFit> {
    if lambda < 0.0 {
        return Err(Error::Config(format!("lambda must be >= 0, got {lambda}")));
    }
    if x.nrows() != y.len() {
        return Err(Error::Data(format!(
            "design has {} rows but target has {}",
            x.nrows(),
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite values in regression inputs".into()));
    }

    let (xc, yc, x_means, y_mean) = if center {
        let x_means = x.row_mean();
        let mut xc = x.clone();
        for mut row in xc.row_iter_mut() {
            row -= &x_means;
        }
        let y_mean = y.mean();
        (xc, y.add_scalar(-y_mean), x_means.transpose(), y_mean)
    } else {
        (x.clone(), y.clone(), DVector::zeros(x.ncols()), 0.0)
    };

    let mut gram = xc.transpose() * &xc;
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = xc.transpose() * yc;
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::Data("singular normal equations (increase lambda)".into()))?;
    let coefficients = chol.solve(&rhs);
    let intercept = if center {
        y_mean - x_means.dot(&coefficients)
    } else {
        0.0
    };
    Ok(RidgeFit {
        coefficients,
        intercept,
    })
}
