//! Finite-difference solution of the scattered-wave boundary value problem
//!
//! ```text
//! ψ'' + k0²(1 + q) ψ = −k0² q exp(i k0 khat x)   on ]0, L[
//! −ψ'(0) = i k0 ψ(0),   ψ'(L) = i k0 ψ(L)
//! ```
//!
//! Central differences in the interior, one-sided second-order differences
//! for the impedance conditions. The boundary rows are reduced against their
//! neighbours so the system stays tridiagonal.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::ComplexField;
use crate::problem::{Grid, Medium, WaveProblem};

/// FD solution on its own uniform grid `x_j = j·L/(m−1)`.
#[derive(Debug, Clone)]
pub struct FdSolution {
    pub nodes: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl FdSolution {
    /// Piecewise-linear interpolation at `x ∈ [0, L]`.
    pub fn interpolate(&self, x: f64) -> Complex64 {
        let m = self.nodes.len();
        let h = self.nodes[m - 1] / (m - 1) as f64;
        let j = ((x / h).floor() as usize).min(m - 2);
        let t = (x - self.nodes[j]) / h;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }
}

/// `q` at an FD node. Tabulated media use the nearest sample.
fn medium_at(medium: &Medium, x: f64) -> f64 {
    match medium {
        Medium::Tabulated { x: xs, q } => {
            let idx = xs.partition_point(|v| *v < x);
            if idx == 0 {
                q[0]
            } else if idx == xs.len() {
                q[idx - 1]
            } else if (xs[idx] - x) < (x - xs[idx - 1]) {
                q[idx]
            } else {
                q[idx - 1]
            }
        }
        _ => medium.value_at(x).expect("analytic medium"),
    }
}

pub fn fd_solve(problem: &WaveProblem, medium: &Medium, m: usize) -> Result<FdSolution> {
    if m < 3 {
        return Err(Error::InvalidParameter(format!("FD grid needs at least 3 nodes, got {m}")));
    }
    let l = problem.length();
    medium.validate(l)?;
    let k = problem.k0();
    let khat = problem.incidence().sign();
    let h = l / (m - 1) as f64;
    let h2 = h * h;
    let nodes: Vec<f64> = (0..m).map(|j| if j == m - 1 { l } else { j as f64 * h }).collect();
    let q: Vec<f64> = nodes.iter().map(|&x| medium_at(medium, x)).collect();
    if let Some((x, qv)) = nodes.iter().zip(&q).find(|(_, v)| !(**v > -1.0)) {
        return Err(Error::MediumBelowMinusOne { x: *x, q: *qv });
    }

    let one = Complex64::new(1.0, 0.0);
    let mut sub = vec![Complex64::new(0.0, 0.0); m];
    let mut diag = vec![Complex64::new(0.0, 0.0); m];
    let mut sup = vec![Complex64::new(0.0, 0.0); m];
    let mut rhs = vec![Complex64::new(0.0, 0.0); m];

    // Interior rows scaled by h²: ψ_{j−1} + (k²(1+q)h² − 2)ψ_j + ψ_{j+1} = −k² q h² e^{ik khat x}
    let source = |j: usize| -k * k * q[j] * h2 * Complex64::from_polar(1.0, k * khat * nodes[j]);
    let centre = |j: usize| Complex64::new(k * k * (1.0 + q[j]) * h2 - 2.0, 0.0);
    for j in 1..m - 1 {
        sub[j] = one;
        diag[j] = centre(j);
        sup[j] = one;
        rhs[j] = source(j);
    }

    // (3 − 2ikh)ψ_0 − 4ψ_1 + ψ_2 = 0, with ψ_2 eliminated through row 1.
    let ikh2 = Complex64::new(0.0, 2.0 * k * h);
    diag[0] = 2.0 - ikh2;
    sup[0] = -4.0 - centre(1);
    rhs[0] = -rhs[1];
    diag[m - 1] = 2.0 - ikh2;
    sub[m - 1] = -4.0 - centre(m - 2);
    rhs[m - 1] = -rhs[m - 2];

    let values = thomas(&sub, &diag, &sup, &rhs)?;
    Ok(FdSolution { nodes, values })
}

/// Thomas algorithm; fails on a vanishing pivot.
fn thomas(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64], rhs: &[Complex64]) -> Result<Vec<Complex64>> {
    let m = diag.len();
    let mut c = vec![Complex64::new(0.0, 0.0); m];
    let mut d = vec![Complex64::new(0.0, 0.0); m];
    let scale = diag.iter().chain(sub).chain(sup).map(|z| z.norm()).fold(0.0, f64::max);
    let mut pivot = diag[0];
    for j in 0..m {
        if j > 0 {
            pivot = diag[j] - sub[j] * c[j - 1];
        }
        if pivot.norm() <= 1e-14 * scale {
            return Err(Error::SingularMatrix { pivot: j });
        }
        c[j] = sup[j] / pivot;
        d[j] = if j == 0 { rhs[0] / pivot } else { (rhs[j] - sub[j] * d[j - 1]) / pivot };
    }
    let mut x = vec![Complex64::new(0.0, 0.0); m];
    x[m - 1] = d[m - 1];
    for j in (0..m - 1).rev() {
        x[j] = d[j] - c[j] * x[j + 1];
    }
    Ok(x)
}

/// FD solution with `m` nodes, linearly interpolated onto the Nyström grid.
pub fn fd_oracle(problem: &WaveProblem, medium: &Medium, grid: &Grid, m: usize) -> Result<ComplexField> {
    let sol = fd_solve(problem, medium, m)?;
    Ok(grid.nodes().iter().map(|&x| sol.interpolate(x)).collect::<Vec<_>>().into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Incidence;

    #[test]
    fn zero_contrast_gives_zero_field() {
        let p = WaveProblem::new(3.0, 1.0, Incidence::Left, 8).unwrap();
        let s = fd_solve(&p, &Medium::constant(0.0), 50).unwrap();
        assert!(s.values.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn rejects_tiny_grid() {
        let p = WaveProblem::new(3.0, 1.0, Incidence::Left, 8).unwrap();
        assert!(fd_solve(&p, &Medium::constant(1.0), 2).is_err());
        assert!(fd_solve(&p, &Medium::constant(1.0), 3).is_ok());
    }

    #[test]
    fn boundary_closures_hold() {
        let p = WaveProblem::new(2.0, 1.0, Incidence::Left, 8).unwrap();
        let m = 2001;
        let s = fd_solve(&p, &Medium::constant(1.0), m).unwrap();
        let h = 1.0 / (m - 1) as f64;
        let v = &s.values;
        let d0 = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
        let dl = (3.0 * v[m - 1] - 4.0 * v[m - 2] + v[m - 3]) / (2.0 * h);
        let ik = Complex64::new(0.0, 2.0);
        assert!((-d0 - ik * v[0]).norm() < 1e-10);
        assert!((dl - ik * v[m - 1]).norm() < 1e-10);
    }

    #[test]
    fn nearest_sample_lookup() {
        let m = Medium::tabulated(vec![0.25, 0.75], vec![1.0, 2.0]).unwrap();
        assert_eq!(medium_at(&m, 0.0), 1.0);
        assert_eq!(medium_at(&m, 0.6), 2.0);
        assert_eq!(medium_at(&m, 1.0), 2.0);
    }
}
