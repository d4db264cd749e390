//! Scalar algebras the calculus runs on.
//!
//! Every geometric operation is written once against [`Backend`]. The
//! [`Analytic`] backend manipulates expressions and differentiates them
//! symbolically; the [`Sampled`] backend works on arrays over a lattice and
//! differentiates with finite-difference stencils. Results carry the
//! [`DerivativeChannel`] that produced them.

use std::fmt;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{CoordinateChart, FdOrder, GridSpec};

/// Where derivatives came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeChannel {
    Analytic,
    FiniteDifference(FdOrder),
}

impl fmt::Display for DerivativeChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DerivativeChannel::Analytic => write!(f, "analytic"),
            DerivativeChannel::FiniteDifference(o) => write!(f, "fd{o}"),
        }
    }
}

pub trait Backend {
    type Scalar: Clone + fmt::Debug;

    fn chart(&self) -> &CoordinateChart;
    fn channel(&self) -> DerivativeChannel;

    fn dim(&self) -> usize {
        self.chart().dim()
    }

    fn constant(&self, c: f64) -> Self::Scalar;
    /// Bring an expression over the chart into this algebra.
    fn lift(&self, e: &Expr) -> Result<Self::Scalar>;

    fn add(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn sub(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn mul(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn div(&self, a: &Self::Scalar, b: &Self::Scalar) -> Self::Scalar;
    fn neg(&self, a: &Self::Scalar) -> Self::Scalar;
    fn scale(&self, a: &Self::Scalar, c: f64) -> Self::Scalar;
    fn sqrt(&self, a: &Self::Scalar) -> Self::Scalar;
    fn abs(&self, a: &Self::Scalar) -> Self::Scalar;
    fn powf(&self, a: &Self::Scalar, p: f64) -> Self::Scalar;

    fn partial(&self, a: &Self::Scalar, axis: usize) -> Result<Self::Scalar>;

    /// True only when `a` is identically zero by construction.
    fn is_structural_zero(&self, a: &Self::Scalar) -> bool;

    /// Values at the backend's evaluation nodes: probe points for the
    /// analytic backend, lattice nodes for the sampled one.
    fn probe_values(&self, a: &Self::Scalar) -> Result<Vec<f64>>;

    /// Coordinates of the `i`-th evaluation node (see [`Backend::probe_values`]).
    fn probe_point(&self, i: usize) -> Vec<f64>;

    /// Adopt lattice samples as a scalar of this algebra.
    fn from_samples(&self, grid: &GridSpec, values: &[f64]) -> Result<Self::Scalar>;

    /// Values at every node of `grid`.
    fn values_on(&self, a: &Self::Scalar, grid: &GridSpec) -> Result<Vec<f64>>;

    fn sup_norm(&self, a: &Self::Scalar) -> Result<f64> {
        Ok(self
            .probe_values(a)?
            .into_iter()
            .fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) }))
    }

    fn sum(&self, terms: impl IntoIterator<Item = Self::Scalar>) -> Self::Scalar {
        let mut iter = terms.into_iter();
        match iter.next() {
            None => self.constant(0.0),
            Some(first) => iter.fold(first, |acc, t| self.add(&acc, &t)),
        }
    }
}

/// Symbolic channel: scalars are expressions, derivatives are exact.
#[derive(Debug, Clone)]
pub struct Analytic {
    chart: CoordinateChart,
    probes: Vec<Vec<f64>>,
}

impl Analytic {
    /// Probes are 64 seeded uniform points strictly inside the chart.
    pub fn new(chart: CoordinateChart) -> Self {
        let probes = random_points(&chart, 64, 0x5eed);
        Self { chart, probes }
    }

    pub fn with_probes(chart: CoordinateChart, probes: Vec<Vec<f64>>) -> Result<Self> {
        if probes.is_empty() {
            return Err(Error::InvalidParameter("at least one probe point required".into()));
        }
        if let Some(p) = probes.iter().find(|p| !chart.contains(p)) {
            return Err(Error::OutOfBounds { point: p.clone() });
        }
        Ok(Self { chart, probes })
    }

    pub fn probes(&self) -> &[Vec<f64>] {
        &self.probes
    }
}

/// Seeded uniform points in the open interior of the chart box.
pub fn random_points(chart: &CoordinateChart, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            chart
                .lower()
                .iter()
                .zip(chart.upper())
                .map(|(&lo, &hi)| {
                    let inset = 1e-6 * (hi - lo);
                    rng.gen_range(lo + inset..hi - inset)
                })
                .collect()
        })
        .collect()
}

impl Backend for Analytic {
    type Scalar = Expr;

    fn chart(&self) -> &CoordinateChart {
        &self.chart
    }

    fn channel(&self) -> DerivativeChannel {
        DerivativeChannel::Analytic
    }

    fn constant(&self, c: f64) -> Expr {
        Expr::constant(c)
    }

    fn lift(&self, e: &Expr) -> Result<Expr> {
        if let Some(&bad) = e.symbols().iter().find(|&&i| i >= self.dim()) {
            return Err(Error::AxisOutOfRange {
                axis: bad,
                dim: self.dim(),
            });
        }
        Ok(e.clone())
    }

    fn add(&self, a: &Expr, b: &Expr) -> Expr {
        a + b
    }
    fn sub(&self, a: &Expr, b: &Expr) -> Expr {
        a - b
    }
    fn mul(&self, a: &Expr, b: &Expr) -> Expr {
        a * b
    }
    fn div(&self, a: &Expr, b: &Expr) -> Expr {
        a / b
    }
    fn neg(&self, a: &Expr) -> Expr {
        -a
    }
    fn scale(&self, a: &Expr, c: f64) -> Expr {
        Expr::constant(c) * a
    }
    fn sqrt(&self, a: &Expr) -> Expr {
        a.sqrt()
    }
    fn abs(&self, a: &Expr) -> Expr {
        a.abs()
    }
    fn powf(&self, a: &Expr, p: f64) -> Expr {
        a.powf(p)
    }

    fn partial(&self, a: &Expr, axis: usize) -> Result<Expr> {
        self.chart.check_axis(axis)?;
        Ok(a.differentiate(axis))
    }

    fn is_structural_zero(&self, a: &Expr) -> bool {
        a.is_zero()
    }

    fn probe_values(&self, a: &Expr) -> Result<Vec<f64>> {
        self.probes.iter().map(|p| Ok(a.eval(p)?)).collect()
    }

    fn probe_point(&self, i: usize) -> Vec<f64> {
        self.probes[i].clone()
    }

    fn from_samples(&self, _grid: &GridSpec, _values: &[f64]) -> Result<Expr> {
        Err(Error::InvalidParameter(
            "sampled data has no analytic derivatives; use a finite-difference backend".into(),
        ))
    }

    fn values_on(&self, a: &Expr, grid: &GridSpec) -> Result<Vec<f64>> {
        if !grid.chart().same_coordinates(&self.chart) {
            return Err(Error::ChartMismatch("grid chart differs from backend chart".into()));
        }
        grid.sample_values(a)
    }
}

/// Lattice samples of one scalar.
#[derive(Clone, PartialEq)]
pub struct GridScalar(Arc<Vec<f64>>);

impl GridScalar {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for GridScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridScalar({} nodes)", self.0.len())
    }
}

/// Finite-difference channel over a fixed lattice.
#[derive(Debug, Clone)]
pub struct Sampled {
    grid: Arc<GridSpec>,
    order: FdOrder,
}

impl Sampled {
    pub fn new(grid: Arc<GridSpec>, order: FdOrder) -> Result<Self> {
        grid.check_stencil(order)?;
        Ok(Self { grid, order })
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn order(&self) -> FdOrder {
        self.order
    }

    pub fn scalar(&self, values: Vec<f64>) -> Result<GridScalar> {
        if values.len() != self.grid.node_count() {
            return Err(Error::Grid(format!(
                "{} values for {} nodes",
                values.len(),
                self.grid.node_count()
            )));
        }
        Ok(GridScalar(Arc::new(values)))
    }

    fn map(&self, a: &GridScalar, f: impl Fn(f64) -> f64) -> GridScalar {
        GridScalar(Arc::new(a.0.iter().map(|&x| f(x)).collect()))
    }

    fn zip(&self, a: &GridScalar, b: &GridScalar, f: impl Fn(f64, f64) -> f64) -> GridScalar {
        GridScalar(Arc::new(a.0.iter().zip(b.0.iter()).map(|(&x, &y)| f(x, y)).collect()))
    }
}

impl Backend for Sampled {
    type Scalar = GridScalar;

    fn chart(&self) -> &CoordinateChart {
        self.grid.chart()
    }

    fn channel(&self) -> DerivativeChannel {
        DerivativeChannel::FiniteDifference(self.order)
    }

    fn constant(&self, c: f64) -> GridScalar {
        GridScalar(Arc::new(vec![c; self.grid.node_count()]))
    }

    fn lift(&self, e: &Expr) -> Result<GridScalar> {
        Ok(GridScalar(Arc::new(self.grid.sample_values(e)?)))
    }

    fn add(&self, a: &GridScalar, b: &GridScalar) -> GridScalar {
        self.zip(a, b, |x, y| x + y)
    }
    fn sub(&self, a: &GridScalar, b: &GridScalar) -> GridScalar {
        self.zip(a, b, |x, y| x - y)
    }
    fn mul(&self, a: &GridScalar, b: &GridScalar) -> GridScalar {
        self.zip(a, b, |x, y| x * y)
    }
    fn div(&self, a: &GridScalar, b: &GridScalar) -> GridScalar {
        self.zip(a, b, |x, y| x / y)
    }
    fn neg(&self, a: &GridScalar) -> GridScalar {
        self.map(a, |x| -x)
    }
    fn scale(&self, a: &GridScalar, c: f64) -> GridScalar {
        self.map(a, |x| c * x)
    }
    fn sqrt(&self, a: &GridScalar) -> GridScalar {
        self.map(a, f64::sqrt)
    }
    fn abs(&self, a: &GridScalar) -> GridScalar {
        self.map(a, f64::abs)
    }
    fn powf(&self, a: &GridScalar, p: f64) -> GridScalar {
        self.map(a, |x| x.powf(p))
    }

    fn partial(&self, a: &GridScalar, axis: usize) -> Result<GridScalar> {
        Ok(GridScalar(Arc::new(self.grid.differentiate(&a.0, axis, self.order)?)))
    }

    fn is_structural_zero(&self, _a: &GridScalar) -> bool {
        false
    }

    fn probe_values(&self, a: &GridScalar) -> Result<Vec<f64>> {
        Ok(a.0.to_vec())
    }

    fn probe_point(&self, i: usize) -> Vec<f64> {
        self.grid.point(i)
    }

    fn from_samples(&self, grid: &GridSpec, values: &[f64]) -> Result<GridScalar> {
        if grid != &*self.grid {
            return Err(Error::Grid("samples live on a different lattice".into()));
        }
        self.scalar(values.to_vec())
    }

    fn values_on(&self, a: &GridScalar, grid: &GridSpec) -> Result<Vec<f64>> {
        if grid != &*self.grid {
            return Err(Error::Grid("field lives on a different lattice".into()));
        }
        Ok(a.0.to_vec())
    }
}
