//! Physical problem description, scattering medium and quadrature grid.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Incidence direction of the plane wave `exp(i k0 khat x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Incidence {
    /// Wave travelling towards +x (left excitation).
    Left,
    /// Wave travelling towards −x.
    Right,
}

impl Incidence {
    pub fn sign(self) -> f64 {
        match self {
            Incidence::Left => 1.0,
            Incidence::Right => -1.0,
        }
    }
}

/// Wavenumber, domain `]0, L[`, incidence and grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveProblem {
    k0: f64,
    length: f64,
    incidence: Incidence,
    n: usize,
}

impl WaveProblem {
    pub fn new(k0: f64, length: f64, incidence: Incidence, n: usize) -> Result<Self> {
        if !(k0.is_finite() && k0 > 0.0) {
            return Err(Error::InvalidParameter(format!("k0 must be positive and finite, got {k0}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!("L must be positive and finite, got {length}")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("grid size must be at least 2, got {n}")));
        }
        let kappa = k0 * length;
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("k0*L must be positive and finite, got {kappa}")));
        }
        Ok(Self {
            k0,
            length,
            incidence,
            n,
        })
    }

    /// Left incidence with the default resolution for `k0·L`.
    pub fn with_default_resolution(k0: f64, length: f64) -> Result<Self> {
        Self::new(k0, length, Incidence::Left, default_resolution(k0 * length))
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn incidence(&self) -> Incidence {
        self.incidence
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimensionless size κ = k0·L.
    pub fn kappa(&self) -> f64 {
        self.k0 * self.length
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(self.k0, self.length, self.incidence, n)
    }
}

/// 256 nodes per started wavelength, never fewer than 256 in total.
pub fn default_resolution(kappa: f64) -> usize {
    let wavelengths = (kappa / (2.0 * PI)).ceil().max(1.0) as usize;
    (256 * wavelengths).max(256)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureRule {
    #[default]
    Midpoint,
    Trapezoid,
}

impl FromStr for QuadratureRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "midpoint" => Ok(Self::Midpoint),
            "trapezoid" | "trapezoidal" => Ok(Self::Trapezoid),
            other => Err(Error::InvalidParameter(format!("unknown quadrature rule '{other}'"))),
        }
    }
}

impl fmt::Display for QuadratureRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Midpoint => "midpoint",
            Self::Trapezoid => "trapezoid",
        })
    }
}

/// Quadrature nodes and weights on `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    rule: QuadratureRule,
    length: f64,
}

impl Grid {
    /// Grid from explicit nodes and weights (e.g. single-node rules for tests).
    pub fn from_parts(nodes: Vec<f64>, weights: Vec<f64>, length: f64, rule: QuadratureRule) -> Result<Self> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::InvalidParameter("grid needs matching, nonempty nodes and weights".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("grid nodes must increase and weights be positive".into()));
        }
        if nodes[0] < 0.0 || *nodes.last().unwrap() > length {
            return Err(Error::InvalidParameter("grid nodes must lie in [0, L]".into()));
        }
        Ok(Self {
            nodes,
            weights,
            rule,
            length,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Discrete L² norm Σ wᵢ|fᵢ|².
    pub fn l2_norm(&self, values: &[num_complex::Complex64]) -> f64 {
        self.weights
            .iter()
            .zip(values)
            .map(|(w, z)| w * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

pub fn make_grid(problem: &WaveProblem, rule: QuadratureRule) -> Result<Grid> {
    let n = problem.n();
    if n < 2 {
        return Err(Error::InvalidParameter(format!("grid size must be at least 2, got {n}")));
    }
    let l = problem.length();
    let (nodes, weights) = match rule {
        QuadratureRule::Midpoint => {
            let h = l / n as f64;
            ((0..n).map(|i| (i as f64 + 0.5) * h).collect(), vec![h; n])
        }
        QuadratureRule::Trapezoid => {
            let h = l / (n - 1) as f64;
            let nodes: Vec<f64> = (0..n).map(|i| if i == n - 1 { l } else { i as f64 * h }).collect();
            let mut weights = vec![h; n];
            weights[0] = 0.5 * h;
            weights[n - 1] = 0.5 * h;
            (nodes, weights)
        }
    };
    Ok(Grid {
        nodes,
        weights,
        rule,
        length: l,
    })
}

/// Contrast function `q` with support in `[0, L]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Medium {
    Constant {
        q0: f64,
    },
    /// `values[i]` on `[edges[i], edges[i+1])`, the last piece closed on the right; zero elsewhere.
    PiecewiseConstant {
        edges: Vec<f64>,
        values: Vec<f64>,
    },
    /// Samples held at grid nodes, no interpolation.
    Tabulated {
        x: Vec<f64>,
        q: Vec<f64>,
    },
}

/// Nodes must coincide with tabulated abscissae to this relative accuracy.
const TABULATED_NODE_TOL: f64 = 1e-9;

impl Medium {
    pub fn constant(q0: f64) -> Self {
        Medium::Constant { q0 }
    }

    pub fn piecewise(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.len() != values.len() + 1 || values.is_empty() {
            return Err(Error::InvalidParameter(
                "piecewise medium needs one more edge than values".into(),
            ));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("piecewise edges must be strictly increasing".into()));
        }
        let m = Medium::PiecewiseConstant { edges, values };
        m.check_pointwise()?;
        Ok(m)
    }

    pub fn tabulated(x: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if x.len() != q.len() || x.is_empty() {
            return Err(Error::InvalidParameter("tabulated medium needs equal, nonzero numbers of x and q".into()));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("tabulated abscissae must be strictly increasing".into()));
        }
        let m = Medium::Tabulated { x, q };
        m.check_pointwise()?;
        Ok(m)
    }

    /// Reads a CSV table with header `x,q`, rows sorted by `x`, all within `[0, L]`.
    pub fn from_csv_reader<R: Read>(reader: R, length: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            x: f64,
            q: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "q" {
            return Err(Error::InvalidParameter(format!(
                "medium CSV header must be 'x,q', got '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut qs = Vec::new();
        for row in rdr.deserialize() {
            let Row { x, q } = row?;
            if !(0.0..=length).contains(&x) {
                return Err(Error::InvalidParameter(format!("medium sample x = {x} outside [0, {length}]")));
            }
            xs.push(x);
            qs.push(q);
        }
        Self::tabulated(xs, qs)
    }

    /// `Some(q0)` for a constant medium.
    pub fn constant_value(&self) -> Option<f64> {
        match self {
            Medium::Constant { q0 } => Some(*q0),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Medium::Constant { q0 } => *q0 == 0.0,
            Medium::PiecewiseConstant { values, .. } => values.iter().all(|v| *v == 0.0),
            Medium::Tabulated { q, .. } => q.iter().all(|v| *v == 0.0),
        }
    }

    /// Minimum of `q` over its definition points.
    pub fn min_value(&self) -> f64 {
        match self {
            Medium::Constant { q0 } => *q0,
            Medium::PiecewiseConstant { values, .. } => values.iter().cloned().fold(f64::INFINITY, f64::min),
            Medium::Tabulated { q, .. } => q.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    fn check_pointwise(&self) -> Result<()> {
        let bad = match self {
            Medium::Constant { q0 } => (!(q0.is_finite() && *q0 > -1.0)).then_some((0.0, *q0)),
            Medium::PiecewiseConstant { edges, values } => values
                .iter()
                .zip(edges)
                .find(|(v, _)| !(v.is_finite() && **v > -1.0))
                .map(|(v, x)| (*x, *v)),
            Medium::Tabulated { x, q } => x
                .iter()
                .zip(q)
                .find(|(_, v)| !(v.is_finite() && **v > -1.0))
                .map(|(x, v)| (*x, *v)),
        };
        match bad {
            Some((x, q)) => Err(Error::MediumBelowMinusOne { x, q }),
            None => Ok(()),
        }
    }

    pub fn validate(&self, length: f64) -> Result<()> {
        self.check_pointwise()?;
        let (lo, hi) = match self {
            Medium::Constant { .. } => return Ok(()),
            Medium::PiecewiseConstant { edges, .. } => (edges[0], *edges.last().unwrap()),
            Medium::Tabulated { x, .. } => (x[0], *x.last().unwrap()),
        };
        let slack = 1e-12 * length;
        if lo < -slack || hi > length + slack {
            return Err(Error::InvalidParameter(format!(
                "medium support [{lo}, {hi}] not contained in [0, {length}]"
            )));
        }
        Ok(())
    }

    /// Point value for analytic media; tabulated media have no point evaluation.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        match self {
            Medium::Constant { q0 } => Some(*q0),
            Medium::PiecewiseConstant { edges, values } => {
                let last = edges.len() - 1;
                if x < edges[0] || x > edges[last] {
                    return Some(0.0);
                }
                if x == edges[last] {
                    return Some(values[last - 1]);
                }
                let idx = edges.partition_point(|e| *e <= x) - 1;
                Some(values[idx])
            }
            Medium::Tabulated { .. } => None,
        }
    }

    /// ‖q‖²_{L²(0,L)}. Tabulated samples are treated as constant on the
    /// cells between neighbouring midpoints, clipped to `[0, L]`.
    pub fn l2_norm_sq(&self, length: f64) -> f64 {
        match self {
            Medium::Constant { q0 } => q0 * q0 * length,
            Medium::PiecewiseConstant { edges, values } => edges
                .windows(2)
                .zip(values)
                .map(|(w, v)| {
                    let a = w[0].clamp(0.0, length);
                    let b = w[1].clamp(0.0, length);
                    v * v * (b - a)
                })
                .sum(),
            Medium::Tabulated { x, q } => {
                let m = x.len();
                (0..m)
                    .map(|i| {
                        let left = if i == 0 { 0.0 } else { 0.5 * (x[i - 1] + x[i]) };
                        let right = if i + 1 == m { length } else { 0.5 * (x[i] + x[i + 1]) };
                        q[i] * q[i] * (right - left)
                    })
                    .sum()
            }
        }
    }
}

/// `q(x_i)` at every grid node.
pub fn sample_medium(medium: &Medium, grid: &Grid) -> Result<Vec<f64>> {
    medium.validate(grid.length())?;
    let samples = match medium {
        Medium::Tabulated { x, q } => {
            if x.len() != grid.len() {
                return Err(Error::InvalidParameter(format!(
                    "tabulated medium has {} samples but the grid has {} nodes",
                    x.len(),
                    grid.len()
                )));
            }
            let tol = TABULATED_NODE_TOL * grid.length();
            if let Some((a, b)) = x.iter().zip(grid.nodes()).find(|(a, b)| (*a - *b).abs() > tol) {
                return Err(Error::InvalidParameter(format!(
                    "tabulated abscissa {a} does not match grid node {b}; regrid the table first"
                )));
            }
            q.clone()
        }
        _ => grid
            .nodes()
            .iter()
            .map(|&x| medium.value_at(x).expect("analytic medium"))
            .collect(),
    };
    if let Some((x, q)) = grid.nodes().iter().zip(&samples).find(|(_, q)| !(**q > -1.0)) {
        return Err(Error::MediumBelowMinusOne { x: *x, q: *q });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem(l: f64, n: usize) -> WaveProblem {
        WaveProblem::new(1.0, l, Incidence::Left, n).unwrap()
    }

    #[test]
    fn midpoint_two_nodes() {
        let g = make_grid(&problem(1.0, 2), QuadratureRule::Midpoint).unwrap();
        assert_eq!(g.nodes(), &[0.25, 0.75]);
        assert_eq!(g.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn trapezoid_three_nodes() {
        let g = make_grid(&problem(1.0, 3), QuadratureRule::Trapezoid).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.5, 1.0]);
        assert_eq!(g.weights(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn weights_sum_to_length() {
        for rule in [QuadratureRule::Midpoint, QuadratureRule::Trapezoid] {
            let g = make_grid(&problem(2.0, 1000), rule).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - 2.0).abs() <= 1e-12 * 2.0, "{rule}: {s}");
            assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
            assert!(g.weights().iter().all(|w| *w > 0.0));
        }
    }

    #[test]
    fn rejects_bad_problems() {
        assert!(WaveProblem::new(1.0, 1.0, Incidence::Left, 1).is_err());
        assert!(WaveProblem::new(0.0, 1.0, Incidence::Left, 4).is_err());
        assert!(WaveProblem::new(1.0, -1.0, Incidence::Left, 4).is_err());
        assert!(WaveProblem::new(f64::NAN, 1.0, Incidence::Left, 4).is_err());
    }

    #[test]
    fn default_resolution_rule() {
        assert_eq!(default_resolution(1.0), 256);
        assert_eq!(default_resolution(50.0), 2048);
    }

    #[test]
    fn constant_samples() {
        let g = make_grid(&problem(1.0, 17), QuadratureRule::Midpoint).unwrap();
        let s = sample_medium(&Medium::constant(5.0), &g).unwrap();
        assert!(s.iter().all(|q| *q == 5.0));
        assert_eq!(Medium::constant(5.0).constant_value(), Some(5.0));
    }

    #[test]
    fn constant_below_minus_one_rejected() {
        let g = make_grid(&problem(1.0, 4), QuadratureRule::Midpoint).unwrap();
        assert!(matches!(
            sample_medium(&Medium::constant(-1.5), &g),
            Err(Error::MediumBelowMinusOne { .. })
        ));
        assert!(sample_medium(&Medium::constant(-1.0), &g).is_err());
        assert!(sample_medium(&Medium::constant(-0.5), &g).is_ok());
    }

    #[test]
    fn piecewise_lookup() {
        let m = Medium::piecewise(vec![0.0, 0.5, 1.0], vec![1.0, 0.0]).unwrap();
        assert_eq!(m.value_at(0.75), Some(0.0));
        assert_eq!(m.value_at(0.25), Some(1.0));
        assert_eq!(m.value_at(0.5), Some(0.0));
        assert_eq!(m.value_at(1.0), Some(0.0));
        let g = make_grid(&problem(1.0, 2), QuadratureRule::Midpoint).unwrap();
        assert_eq!(sample_medium(&m, &g).unwrap(), vec![1.0, 0.0]);
        assert!((m.l2_norm_sq(1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn tabulated_must_match_nodes() {
        let g = make_grid(&problem(1.0, 2), QuadratureRule::Midpoint).unwrap();
        let ok = Medium::tabulated(vec![0.25, 0.75], vec![0.3, 0.4]).unwrap();
        assert_eq!(sample_medium(&ok, &g).unwrap(), vec![0.3, 0.4]);
        let off = Medium::tabulated(vec![0.2, 0.75], vec![0.3, 0.4]).unwrap();
        assert!(sample_medium(&off, &g).is_err());
        assert!(Medium::tabulated(vec![0.25, 0.75], vec![0.3, -2.0]).is_err());
    }

    #[test]
    fn csv_medium() {
        let text = "x,q\n0.25,1.5\n0.75,2.0\n";
        let m = Medium::from_csv_reader(text.as_bytes(), 1.0).unwrap();
        assert_eq!(m, Medium::Tabulated { x: vec![0.25, 0.75], q: vec![1.5, 2.0] });
        assert!(Medium::from_csv_reader("x,q\n1.5,1.0\n".as_bytes(), 1.0).is_err());
        assert!(Medium::from_csv_reader("x,q\n0.5,1.0\n0.25,1.0\n".as_bytes(), 1.0).is_err());
        assert!(Medium::from_csv_reader("a,b\n0.5,1.0\n".as_bytes(), 1.0).is_err());
    }

    #[test]
    fn sampling_is_pure() {
        let g = make_grid(&problem(1.0, 64), QuadratureRule::Trapezoid).unwrap();
        let m = Medium::piecewise(vec![0.1, 0.4, 0.9], vec![2.0, -0.5]).unwrap();
        assert_eq!(sample_medium(&m, &g).unwrap(), sample_medium(&m, &g).unwrap());
    }
}
