//! Asymptotic degree distribution of LT codes on the low-SNR binary-input
//! AWGN channel.

use nalgebra::{DMatrix, DVector};

use super::degree::DegreeDistribution;
use crate::error::{invalid, Error, Result};
use crate::quad::integrate;

const QUAD_TOL: f64 = 1e-13;
/// Half-width, in standard deviations, of the Gaussian average in `phi`.
const GAUSS_SPAN: f64 = 12.0;

/// `phi(x) = E[tanh(u/2)]` for `u ~ N(x, 2x)`.
pub fn phi(x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid(format!("phi is defined for x > 0, got {x}")));
    }
    let sd = (2.0 * x).sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    integrate(
        |s| (0.5 * (x + s * sd)).tanh() * norm * (-0.5 * s * s).exp(),
        -GAUSS_SPAN,
        GAUSS_SPAN,
        QUAD_TOL,
        8,
    )
}

/// Inverse of `phi` on `(0, 1)`, by bisection.
pub fn phi_inverse(t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(invalid(format!(
            "phi inverse is defined on (0, 1), got {t}"
        )));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while phi(hi)? < t {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Numerical(format!(
                "phi inverse of {t} is out of range"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid)? < t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `1 - phi(x)` falls like `exp(-x/4)`; past this point it is below 1e-16.
const TAIL_END: f64 = 200.0;

/// `(1 / (4 ln 2)) * integral_0^x phi^{-1}(t) dt`, without normalization.
///
/// Uses the identity `integral_0^x phi^{-1} = x X - integral_0^X phi` with
/// `X = phi^{-1}(x)`, which needs one inversion instead of one per node. At
/// `x = 1` it becomes `integral_0^inf (1 - phi)`.
pub fn asymptotic_omega(x: f64) -> Result<f64> {
    let scale = 1.0 / (4.0 * std::f64::consts::LN_2);
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        let tail = integrate(
            |s| {
                if s == 0.0 {
                    1.0
                } else {
                    1.0 - phi(s).unwrap_or(f64::NAN)
                }
            },
            0.0,
            TAIL_END,
            1e-10,
            40,
        )?;
        return Ok(scale * tail);
    }
    let big_x = phi_inverse(x)?;
    let area = integrate(
        |s| {
            if s == 0.0 {
                0.0
            } else {
                phi(s).unwrap_or(f64::NAN)
            }
        },
        0.0,
        big_x,
        1e-10,
        16,
    )?;
    Ok(scale * (x * big_x - area))
}

/// Evaluation of the asymptotic degree polynomial on a grid, with a
/// finite-degree fit.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticDegree {
    pub grid: Vec<f64>,
    /// `Omega(x)` on the grid divided by `raw_mass`.
    pub omega: Vec<f64>,
    /// `Omega(1)` before normalization.
    pub raw_mass: f64,
    /// Non-negative least-squares fit of `omega` by `sum_d c_d x^d`, renormalized.
    pub distribution: DegreeDistribution,
    /// Root-mean-square residual of the fit.
    pub fit_rms: f64,
}

/// Evaluates the asymptotic degree polynomial on `grid` and fits degrees
/// `1..=max_degree` to it.
pub fn asymptotic_degree_density(grid: &[f64], max_degree: usize) -> Result<AsymptoticDegree> {
    if grid.is_empty() || grid.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
        return Err(invalid("grid points must lie in (0, 1]"));
    }
    if max_degree == 0 {
        return Err(invalid("max degree must be positive"));
    }
    let raw_mass = asymptotic_omega(1.0)?;
    let omega = grid
        .iter()
        .map(|&x| asymptotic_omega(x).map(|v| v / raw_mass))
        .collect::<Result<Vec<_>>>()?;
    let a = DMatrix::from_fn(grid.len(), max_degree, |r, c| grid[r].powi(c as i32 + 1));
    let b = DVector::from_column_slice(&omega);
    let coef = nnls(&a, &b)?;
    let resid = (&a * &coef - &b).norm() / (grid.len() as f64).sqrt();
    let terms: Vec<(usize, f64)> = coef
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0.0)
        .map(|(d, &c)| (d + 1, c))
        .collect();
    Ok(AsymptoticDegree {
        grid: grid.to_vec(),
        omega,
        raw_mass,
        distribution: DegreeDistribution::normalized(&terms)?,
        fit_rms: resid,
    })
}

/// Lawson-Hanson non-negative least squares.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    let solve = |passive: &[bool]| -> Result<DVector<f64>> {
        let cols: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(cols.iter());
        let z = sub
            .svd(true, true)
            .solve(b, 1e-14)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let mut s = DVector::zeros(n);
        for (k, &j) in cols.iter().enumerate() {
            s[j] = z[k];
        }
        Ok(s)
    };
    for _ in 0..3 * n {
        let w = a.transpose() * (b - a * &x);
        let next = (0..n)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = next else {
            return Ok(x);
        };
        passive[j] = true;
        loop {
            let s = solve(&passive)?;
            if (0..n).all(|i| !passive[i] || s[i] > 0.0) {
                x = s;
                break;
            }
            let mut alpha = f64::INFINITY;
            for i in 0..n {
                if passive[i] && s[i] <= 0.0 {
                    alpha = alpha.min(x[i] / (x[i] - s[i]));
                }
            }
            x += (s - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    Err(Error::Numerical(
        "non-negative least squares did not converge".into(),
    ))
}
