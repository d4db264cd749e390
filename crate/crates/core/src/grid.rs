//! Coordinate charts, structured lattices and finite-difference derivatives.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{is_reserved, Expr};

/// Named coordinates with box bounds.
///
/// Singular points (e.g. `theta = 0` for spherical coordinates) can be
/// declared per axis; a chart whose closed bounds contain one is rejected.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateChart {
    names: Vec<String>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    periodic: Vec<bool>,
    singular: Vec<Vec<f64>>,
}

impl CoordinateChart {
    pub fn new<S: Into<String>>(
        names: impl IntoIterator<Item = S>,
        lower: Vec<f64>,
        upper: Vec<f64>,
        periodic: Vec<bool>,
    ) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let dim = names.len();
        if !(2..=4).contains(&dim) {
            return Err(Error::Chart(format!("dimension {dim} not in 2..=4")));
        }
        if lower.len() != dim || upper.len() != dim || periodic.len() != dim {
            return Err(Error::Chart(format!(
                "{dim} names but {} lower, {} upper, {} periodic entries",
                lower.len(),
                upper.len(),
                periodic.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            let valid_ident = name
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
            if !valid_ident || is_reserved(name) {
                return Err(Error::Chart(format!("`{name}` is not a usable coordinate name")));
            }
            if names[..i].contains(name) {
                return Err(Error::Chart(format!("duplicate coordinate `{name}`")));
            }
            if !(lower[i].is_finite() && upper[i].is_finite() && lower[i] < upper[i]) {
                return Err(Error::Chart(format!(
                    "axis `{name}` bounds [{}, {}] are not an increasing finite interval",
                    lower[i], upper[i]
                )));
            }
        }
        Ok(Self {
            names,
            lower,
            upper,
            periodic,
            singular: vec![Vec::new(); dim],
        })
    }

    /// Declare a coordinate singularity at `value` on `axis`.
    pub fn with_singularity(mut self, axis: usize, value: f64) -> Result<Self> {
        self.check_axis(axis)?;
        if self.lower[axis] <= value && value <= self.upper[axis] {
            return Err(Error::Chart(format!(
                "axis `{}` range [{}, {}] includes the singular point {}",
                self.names[axis], self.lower[axis], self.upper[axis], value
            )));
        }
        self.singular[axis].push(value);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn periodic(&self) -> &[bool] {
        &self.periodic
    }

    pub fn singular_points(&self, axis: usize) -> &[f64] {
        &self.singular[axis]
    }

    pub fn axis_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim() {
            Ok(())
        } else {
            Err(Error::AxisOutOfRange {
                axis,
                dim: self.dim(),
            })
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim()
            && point
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(x, (lo, hi))| lo <= x && x <= hi)
    }

    /// Parse an expression against this chart's coordinate names.
    pub fn parse(&self, src: &str) -> Result<Expr> {
        Ok(Expr::parse(src, &self.names)?)
    }

    /// The coordinate function `x^axis` as an expression.
    pub fn coordinate(&self, axis: usize) -> Expr {
        Expr::var(axis, &self.names[axis])
    }

    /// Same names and bounds, ignoring declared singularities.
    pub fn same_coordinates(&self, other: &CoordinateChart) -> bool {
        self.names == other.names
            && self.lower == other.lower
            && self.upper == other.upper
            && self.periodic == other.periodic
    }
}

/// Stencil order for first derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FdOrder {
    Second,
    #[default]
    Fourth,
}

impl FdOrder {
    pub fn from_order(order: usize) -> Result<Self> {
        match order {
            2 => Ok(FdOrder::Second),
            4 => Ok(FdOrder::Fourth),
            _ => Err(Error::InvalidParameter(format!(
                "stencil order {order} unsupported (use 2 or 4)"
            ))),
        }
    }

    pub fn order(self) -> usize {
        match self {
            FdOrder::Second => 2,
            FdOrder::Fourth => 4,
        }
    }

    /// Points needed along an axis for the one-sided boundary stencils.
    pub fn width(self) -> usize {
        self.order() + 1
    }
}

impl fmt::Display for FdOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.order())
    }
}

// (offset, weight) pairs; divide by h.
const C2_CENTRAL: [(isize, f64); 2] = [(-1, -0.5), (1, 0.5)];
const C2_FORWARD: [(isize, f64); 3] = [(0, -1.5), (1, 2.0), (2, -0.5)];
const C4_CENTRAL: [(isize, f64); 4] = [
    (-2, 1.0 / 12.0),
    (-1, -2.0 / 3.0),
    (1, 2.0 / 3.0),
    (2, -1.0 / 12.0),
];
const C4_FORWARD0: [(isize, f64); 5] = [
    (0, -25.0 / 12.0),
    (1, 4.0),
    (2, -3.0),
    (3, 4.0 / 3.0),
    (4, -0.25),
];
const C4_FORWARD1: [(isize, f64); 5] = [
    (-1, -0.25),
    (0, -5.0 / 6.0),
    (1, 1.5),
    (2, -0.5),
    (3, 1.0 / 12.0),
];

/// A lattice over a chart. Nodes are stored row-major, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    chart: CoordinateChart,
    points: Vec<usize>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
}

impl GridSpec {
    pub fn new(chart: CoordinateChart, points: Vec<usize>) -> Result<Self> {
        let dim = chart.dim();
        if points.len() != dim {
            return Err(Error::Grid(format!(
                "{} point counts for a {dim}-dimensional chart",
                points.len()
            )));
        }
        if let Some((axis, &n)) = points.iter().enumerate().find(|(_, &n)| n < 5) {
            return Err(Error::Grid(format!(
                "axis `{}` has {n} points; at least 5 are required",
                chart.names()[axis]
            )));
        }
        let spacing = (0..dim)
            .map(|i| {
                let span = chart.upper()[i] - chart.lower()[i];
                if chart.periodic()[i] {
                    span / points[i] as f64
                } else {
                    span / (points[i] - 1) as f64
                }
            })
            .collect();
        let mut strides = vec![1; dim];
        for i in (0..dim - 1).rev() {
            strides[i] = strides[i + 1] * points[i + 1];
        }
        Ok(Self {
            chart,
            points,
            spacing,
            strides,
        })
    }

    pub fn chart(&self) -> &CoordinateChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn node_count(&self) -> usize {
        self.points.iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Coordinate value of lattice line `i` on `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if !self.chart.periodic()[axis] && i + 1 == self.points[axis] {
            // exact endpoint rather than an accumulated lower + (n-1)h
            self.chart.upper()[axis]
        } else {
            self.chart.lower()[axis] + i as f64 * self.spacing[axis]
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for (axis, slot) in out.iter_mut().enumerate() {
            *slot = flat / self.strides[axis];
            flat %= self.strides[axis];
        }
        out
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.coordinate(axis, i))
            .collect()
    }

    /// Check the grid can carry a stencil of `order` on every axis.
    pub fn check_stencil(&self, order: FdOrder) -> Result<()> {
        for (axis, &n) in self.points.iter().enumerate() {
            if n < order.width() {
                return Err(Error::GridTooSmall {
                    axis,
                    points: n,
                    order: order.order(),
                    needed: order.width(),
                });
            }
        }
        Ok(())
    }

    /// Derivative along `axis` of one scalar array laid out on this grid.
    pub fn differentiate(&self, data: &[f64], axis: usize, order: FdOrder) -> Result<Vec<f64>> {
        self.chart.check_axis(axis)?;
        let n = self.points[axis];
        if n < order.width() {
            return Err(Error::GridTooSmall {
                axis,
                points: n,
                order: order.order(),
                needed: order.width(),
            });
        }
        assert_eq!(data.len(), self.node_count(), "array does not match grid");
        let stride = self.strides[axis];
        let inv_h = 1.0 / self.spacing[axis];
        let periodic = self.chart.periodic()[axis];
        let mut out = vec![0.0; data.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            let i = (flat / stride) % n;
            let base = flat - i * stride;
            let at = |j: isize| -> f64 {
                let j = if periodic {
                    j.rem_euclid(n as isize) as usize
                } else {
                    j as usize
                };
                data[base + j * stride]
            };
            let ii = i as isize;
            let apply = |stencil: &[(isize, f64)], sign: f64| -> f64 {
                stencil
                    .iter()
                    .map(|&(o, w)| sign * w * at(ii + (sign as isize) * o))
                    .sum::<f64>()
            };
            let d = match order {
                FdOrder::Second => {
                    if periodic || (i >= 1 && i + 1 < n) {
                        apply(&C2_CENTRAL, 1.0)
                    } else if i == 0 {
                        apply(&C2_FORWARD, 1.0)
                    } else {
                        apply(&C2_FORWARD, -1.0)
                    }
                }
                FdOrder::Fourth => {
                    if periodic || (i >= 2 && i + 2 < n) {
                        apply(&C4_CENTRAL, 1.0)
                    } else if i == 0 {
                        apply(&C4_FORWARD0, 1.0)
                    } else if i == 1 {
                        apply(&C4_FORWARD1, 1.0)
                    } else if i + 1 == n {
                        apply(&C4_FORWARD0, -1.0)
                    } else {
                        apply(&C4_FORWARD1, -1.0)
                    }
                }
            };
            *slot = d * inv_h;
        }
        Ok(out)
    }

    /// Evaluate an expression on every node.
    pub fn sample_values(&self, e: &Expr) -> Result<Vec<f64>> {
        (0..self.node_count())
            .map(|flat| {
                let v = e.eval(&self.point(flat))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::NonFinite {
                        index: self.multi_index(flat),
                        value: v,
                    })
                }
            })
            .collect()
    }
}

/// Field components sampled on a grid, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    grid: Arc<GridSpec>,
    component_shape: Vec<usize>,
    values: Vec<f64>,
}

impl SampledField {
    pub fn new(grid: Arc<GridSpec>, component_shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let dim = grid.dim();
        if component_shape.iter().any(|&e| e != dim) {
            return Err(Error::Grid(format!(
                "component extents {component_shape:?} must all equal {dim}"
            )));
        }
        let ncomp: usize = component_shape.iter().product();
        let nodes = grid.node_count();
        if values.len() != ncomp * nodes {
            return Err(Error::Grid(format!(
                "{} values for {ncomp} components on {nodes} nodes",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: grid.multi_index(pos % nodes),
                value: values[pos],
            });
        }
        Ok(Self {
            grid,
            component_shape,
            values,
        })
    }

    pub fn scalar(grid: Arc<GridSpec>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, Vec::new(), values)
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn component_shape(&self) -> &[usize] {
        &self.component_shape
    }

    pub fn component_count(&self) -> usize {
        self.component_shape.iter().product()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn component(&self, c: usize) -> &[f64] {
        let n = self.grid.node_count();
        &self.values[c * n..(c + 1) * n]
    }

    pub fn at(&self, c: usize, node: usize) -> f64 {
        self.values[c * self.grid.node_count() + node]
    }
}

/// Sample an analytic field (one expression per component) on a grid.
pub fn sample(components: &[Expr], component_shape: Vec<usize>, grid: &Arc<GridSpec>) -> Result<SampledField> {
    let mut values = Vec::with_capacity(components.len() * grid.node_count());
    for e in components {
        values.extend(grid.sample_values(e)?);
    }
    SampledField::new(grid.clone(), component_shape, values)
}

/// Sample a single scalar expression.
pub fn sample_scalar(e: &Expr, grid: &Arc<GridSpec>) -> Result<SampledField> {
    sample(std::slice::from_ref(e), Vec::new(), grid)
}

/// Componentwise partial derivative along `axis`.
pub fn partial_derivative(f: &SampledField, axis: usize, order: FdOrder) -> Result<SampledField> {
    let grid = f.grid.clone();
    let mut values = Vec::with_capacity(f.values.len());
    for c in 0..f.component_count() {
        values.extend(grid.differentiate(f.component(c), axis, order)?);
    }
    SampledField::new(grid, f.component_shape.clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn line(lo: f64, hi: f64, n: usize) -> Arc<GridSpec> {
        let chart = CoordinateChart::new(["r", "y"], vec![lo, 0.0], vec![hi, 1.0], vec![false; 2]).unwrap();
        Arc::new(GridSpec::new(chart, vec![n, 5]).unwrap())
    }

    #[test]
    fn chart_validation() {
        assert!(CoordinateChart::new(["x"], vec![0.0], vec![1.0], vec![false]).is_err());
        assert!(CoordinateChart::new(["x", "x"], vec![0.0; 2], vec![1.0; 2], vec![false; 2]).is_err());
        assert!(CoordinateChart::new(["x", "sin"], vec![0.0; 2], vec![1.0; 2], vec![false; 2]).is_err());
        assert!(CoordinateChart::new(["x", "y"], vec![0.0, 1.0], vec![1.0, 1.0], vec![false; 2]).is_err());
        let chart = CoordinateChart::new(["r", "theta"], vec![1.0, 0.0], vec![2.0, PI], vec![false; 2]).unwrap();
        assert!(chart.clone().with_singularity(1, 0.0).is_err());
        assert!(chart.with_singularity(0, 0.0).is_ok());
    }

    #[test]
    fn grid_rejects_too_few_points() {
        let chart = CoordinateChart::new(["x", "y"], vec![0.0; 2], vec![1.0; 2], vec![false; 2]).unwrap();
        assert!(GridSpec::new(chart.clone(), vec![4, 5]).is_err());
        let g = GridSpec::new(chart, vec![5, 5]).unwrap();
        assert_eq!(g.node_count(), 25);
        assert_eq!(g.multi_index(g.flat_index(&[3, 2])), vec![3, 2]);
    }

    #[test]
    fn sampling_linear_spacing() {
        let g = line(1.0, 2.0, 5);
        let f = sample_scalar(&g.chart().parse("r").unwrap(), &g).unwrap();
        let first_column: Vec<f64> = (0..5).map(|i| f.values()[g.flat_index(&[i, 0])]).collect();
        assert_eq!(first_column, vec![1.0, 1.25, 1.5, 1.75, 2.0]);
        let zero = sample_scalar(&g.chart().parse("0").unwrap(), &g).unwrap();
        assert!(zero.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sampling_reports_non_finite_index() {
        let g = line(-1.0, 1.0, 5);
        let err = sample_scalar(&g.chart().parse("log(r + 1)").unwrap(), &g).unwrap_err();
        assert!(matches!(err, Error::Eval(_)));
        let err = sample_scalar(&g.chart().parse("exp(1000*r)").unwrap(), &g).unwrap_err();
        assert_eq!(
            err,
            Error::NonFinite {
                index: vec![4, 0],
                value: f64::INFINITY
            }
        );
    }

    #[test]
    fn sin_theta_sample_is_symmetric() {
        let chart = CoordinateChart::new(["theta", "y"], vec![0.0, 0.0], vec![PI, 1.0], vec![false; 2]).unwrap();
        let g = Arc::new(GridSpec::new(chart, vec![33, 5]).unwrap());
        let f = sample_scalar(&g.chart().parse("sin(theta)").unwrap(), &g).unwrap();
        for i in 0..33 {
            let a = f.values()[g.flat_index(&[i, 0])];
            let b = f.values()[g.flat_index(&[32 - i, 0])];
            assert!((a - b).abs() <= 1e-15, "{i}: {a} vs {b}");
        }
    }

    #[test]
    fn derivative_exact_for_constants_and_lines() {
        for order in [FdOrder::Second, FdOrder::Fourth] {
            let g = line(0.0, 1.0, 9);
            let c = sample_scalar(&Expr::constant(3.5), &g).unwrap();
            let dc = partial_derivative(&c, 0, order).unwrap();
            assert!(dc.values().iter().all(|v| v.abs() < 1e-12));
            let x = sample_scalar(&g.chart().parse("r").unwrap(), &g).unwrap();
            let dx = partial_derivative(&x, 0, order).unwrap();
            assert!(dx.values().iter().all(|v| (v - 1.0).abs() < 1e-12), "{order}");
        }
    }

    #[test]
    fn derivative_errors() {
        let g = line(0.0, 1.0, 5);
        let f = sample_scalar(&g.chart().parse("r").unwrap(), &g).unwrap();
        assert!(matches!(
            partial_derivative(&f, 2, FdOrder::Second),
            Err(Error::AxisOutOfRange { axis: 2, dim: 2 })
        ));
        let chart = CoordinateChart::new(["r", "y"], vec![0.0; 2], vec![1.0; 2], vec![false; 2]).unwrap();
        let g = Arc::new(GridSpec::new(chart, vec![5, 5]).unwrap());
        assert!(g.check_stencil(FdOrder::Fourth).is_ok());
        // widths beyond five points are impossible to violate for the shipped orders
        assert_eq!(FdOrder::Fourth.width(), 5);
        assert!(FdOrder::from_order(3).is_err());
    }

    #[test]
    fn periodic_derivative_wraps() {
        let chart = CoordinateChart::new(["phi", "y"], vec![0.0, 0.0], vec![2.0 * PI, 1.0], vec![true, false]).unwrap();
        let g = Arc::new(GridSpec::new(chart, vec![64, 5]).unwrap());
        let f = sample_scalar(&g.chart().parse("sin(phi)").unwrap(), &g).unwrap();
        let d = partial_derivative(&f, 0, FdOrder::Fourth).unwrap();
        let exact = sample_scalar(&g.chart().parse("cos(phi)").unwrap(), &g).unwrap();
        let err = d
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "{err}");
    }
}
