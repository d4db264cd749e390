//! Metric fields, pointwise metric data and the preset spacetimes.
//!
//! `g` always means `|det g_{mu nu}|`; the sign pattern lives in the
//! declared [`Signature`]. Units have G = c = 1.

use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::channel::Backend;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{CoordinateChart, FdOrder, SampledField};

pub const DEFAULT_DET_EPS: f64 = 1e-12;

/// Counts of negative and positive eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub negative: usize,
    pub positive: usize,
}

impl Signature {
    pub fn new(negative: usize, positive: usize) -> Self {
        Self { negative, positive }
    }

    pub fn riemannian(dim: usize) -> Self {
        Self::new(0, dim)
    }

    pub fn lorentzian(dim: usize) -> Self {
        Self::new(1, dim - 1)
    }

    pub fn dim(&self) -> usize {
        self.negative + self.positive
    }

    /// Sum of eigenvalue signs (+2 for a 4D Lorentzian metric).
    pub fn trace(&self) -> i64 {
        self.positive as i64 - self.negative as i64
    }

    /// Classify a symmetric matrix by its eigenvalue signs.
    pub fn of_matrix(g: &DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(g.clone());
        let negative = eig.eigenvalues.iter().filter(|&&v| v < 0.0).count();
        Self::new(negative, g.nrows() - negative)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}-, {}+)", self.negative, self.positive)
    }
}

#[derive(Debug, Clone)]
pub enum MetricComponents {
    /// `dim*dim` expressions plus their partials, `derivs[l*dim*dim + m*dim + n]`.
    Analytic { comps: Vec<Expr>, derivs: Vec<Expr> },
    /// Sampled with component shape `[dim, dim]`.
    Sampled(SampledField),
}

#[derive(Debug, Clone)]
pub struct MetricField {
    chart: CoordinateChart,
    components: MetricComponents,
    signature: Signature,
    det_eps: f64,
}

/// Metric quantities at one point.
#[derive(Debug, Clone)]
pub struct MetricPointData {
    pub g: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    /// |det g|
    pub det: f64,
    pub sqrt_g: f64,
    /// `dg[l][(m, n)] = d_l g_{mn}`
    pub dg: Vec<DMatrix<f64>>,
}

impl MetricField {
    /// Build from a full `dim x dim` table. Only the symmetric part is kept:
    /// entries whose mirror differs are replaced by their average.
    pub fn from_exprs(chart: CoordinateChart, table: Vec<Vec<Expr>>, signature: Signature) -> Result<Self> {
        let dim = chart.dim();
        if table.len() != dim || table.iter().any(|row| row.len() != dim) {
            return Err(Error::InvalidParameter(format!("metric table must be {dim}x{dim}")));
        }
        if signature.dim() != dim {
            return Err(Error::InvalidParameter(format!(
                "signature {signature} does not match dimension {dim}"
            )));
        }
        let mut comps = vec![Expr::zero(); dim * dim];
        for m in 0..dim {
            for n in m..dim {
                let (a, b) = (&table[m][n], &table[n][m]);
                let sym = if a.to_string() == b.to_string() {
                    a.clone()
                } else {
                    Expr::constant(0.5) * (a + b)
                };
                comps[m * dim + n] = sym.clone();
                comps[n * dim + m] = sym;
            }
        }
        for e in &comps {
            if let Some(&bad) = e.symbols().iter().find(|&&i| i >= dim) {
                return Err(Error::AxisOutOfRange { axis: bad, dim });
            }
        }
        let mut derivs = Vec::with_capacity(dim * dim * dim);
        for l in 0..dim {
            derivs.extend(comps.iter().map(|e| e.differentiate(l)));
        }
        Ok(Self {
            chart,
            components: MetricComponents::Analytic { comps, derivs },
            signature,
            det_eps: DEFAULT_DET_EPS,
        })
    }

    pub fn parse<T: AsRef<str>>(chart: CoordinateChart, table: &[Vec<T>], signature: Signature) -> Result<Self> {
        let exprs = table
            .iter()
            .map(|row| row.iter().map(|s| chart.parse(s.as_ref())).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_exprs(chart, exprs, signature)
    }

    pub fn diagonal(chart: CoordinateChart, diag: Vec<Expr>, signature: Signature) -> Result<Self> {
        let dim = chart.dim();
        if diag.len() != dim {
            return Err(Error::InvalidParameter(format!("need {dim} diagonal entries")));
        }
        let table = (0..dim)
            .map(|m| {
                (0..dim)
                    .map(|n| if m == n { diag[m].clone() } else { Expr::zero() })
                    .collect()
            })
            .collect();
        Self::from_exprs(chart, table, signature)
    }

    /// A metric known only on a lattice. Off-diagonal pairs are averaged.
    pub fn from_samples(field: SampledField, signature: Signature) -> Result<Self> {
        let chart = field.grid().chart().clone();
        let dim = chart.dim();
        if field.component_shape() != [dim, dim] {
            return Err(Error::InvalidParameter(format!(
                "sampled metric must have component shape [{dim}, {dim}]"
            )));
        }
        if signature.dim() != dim {
            return Err(Error::InvalidParameter(format!(
                "signature {signature} does not match dimension {dim}"
            )));
        }
        let nodes = field.grid().node_count();
        let mut values = field.values().to_vec();
        for m in 0..dim {
            for n in m + 1..dim {
                for k in 0..nodes {
                    let a = (m * dim + n) * nodes + k;
                    let b = (n * dim + m) * nodes + k;
                    let avg = 0.5 * (values[a] + values[b]);
                    values[a] = avg;
                    values[b] = avg;
                }
            }
        }
        let field = SampledField::new(field.grid().clone(), vec![dim, dim], values)?;
        Ok(Self {
            chart,
            components: MetricComponents::Sampled(field),
            signature,
            det_eps: DEFAULT_DET_EPS,
        })
    }

    pub fn with_det_eps(mut self, eps: f64) -> Self {
        self.det_eps = eps;
        self
    }

    pub fn chart(&self) -> &CoordinateChart {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    pub fn det_eps(&self) -> f64 {
        self.det_eps
    }

    pub fn components(&self) -> &MetricComponents {
        &self.components
    }

    /// Component expressions, when the metric is analytic.
    pub fn exprs(&self) -> Option<&[Expr]> {
        match &self.components {
            MetricComponents::Analytic { comps, .. } => Some(comps),
            MetricComponents::Sampled(_) => None,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.components, MetricComponents::Analytic { .. })
    }

    /// Metric components in a backend's scalar algebra.
    pub fn lift<B: Backend>(&self, backend: &B) -> Result<Vec<B::Scalar>> {
        if !self.chart.same_coordinates(backend.chart()) {
            return Err(Error::ChartMismatch(format!(
                "metric over {:?} used with a backend over {:?}",
                self.chart.names(),
                backend.chart().names()
            )));
        }
        match &self.components {
            MetricComponents::Analytic { comps, .. } => comps.iter().map(|e| backend.lift(e)).collect(),
            MetricComponents::Sampled(field) => (0..field.component_count())
                .map(|c| backend.from_samples(field.grid(), field.component(c)))
                .collect(),
        }
    }

    /// Check determinant and signature of a numeric matrix.
    pub fn validate_matrix(&self, g: &DMatrix<f64>, point: &[f64]) -> Result<f64> {
        let det = g.determinant().abs();
        if !(det > self.det_eps) {
            return Err(Error::DegenerateMetric {
                det,
                point: point.to_vec(),
            });
        }
        let found = Signature::of_matrix(g);
        if found != self.signature {
            return Err(Error::SignatureMismatch {
                declared: self.signature.to_string(),
                found: found.to_string(),
                point: point.to_vec(),
            });
        }
        Ok(det)
    }

    /// Metric data at `point` with a fourth-order stencil for sampled metrics.
    pub fn metric_at(&self, point: &[f64]) -> Result<MetricPointData> {
        self.metric_at_with(point, FdOrder::Fourth)
    }

    /// Metric data at `point`. Sampled metrics only answer at lattice nodes
    /// and take derivatives with a stencil of `order`.
    pub fn metric_at_with(&self, point: &[f64], order: FdOrder) -> Result<MetricPointData> {
        if !self.chart.contains(point) {
            return Err(Error::OutOfBounds { point: point.to_vec() });
        }
        let dim = self.dim();
        let (g, dg) = match &self.components {
            MetricComponents::Analytic { comps, derivs } => {
                let vals = comps.iter().map(|e| e.eval(point)).collect::<std::result::Result<Vec<_>, _>>()?;
                let dvals = derivs.iter().map(|e| e.eval(point)).collect::<std::result::Result<Vec<_>, _>>()?;
                let g = DMatrix::from_row_slice(dim, dim, &vals);
                let dg = dvals
                    .chunks(dim * dim)
                    .map(|c| DMatrix::from_row_slice(dim, dim, c))
                    .collect();
                (g, dg)
            }
            MetricComponents::Sampled(field) => {
                let grid = field.grid();
                let node = node_at(grid, point)?;
                let vals: Vec<f64> = (0..dim * dim).map(|c| field.at(c, node)).collect();
                let mut dg = Vec::with_capacity(dim);
                for l in 0..dim {
                    let mut d = Vec::with_capacity(dim * dim);
                    for c in 0..dim * dim {
                        d.push(grid.differentiate(field.component(c), l, order)?[node]);
                    }
                    dg.push(DMatrix::from_row_slice(dim, dim, &d));
                }
                (DMatrix::from_row_slice(dim, dim, &vals), dg)
            }
        };
        let det = self.validate_matrix(&g, point)?;
        let inverse = g.clone().try_inverse().ok_or_else(|| Error::DegenerateMetric {
            det,
            point: point.to_vec(),
        })?;
        Ok(MetricPointData {
            g,
            inverse,
            det,
            sqrt_g: det.sqrt(),
            dg,
        })
    }
}

fn node_at(grid: &crate::grid::GridSpec, point: &[f64]) -> Result<usize> {
    let mut multi = Vec::with_capacity(grid.dim());
    for (axis, &x) in point.iter().enumerate() {
        let h = grid.spacing()[axis];
        let i = ((x - grid.chart().lower()[axis]) / h).round();
        let ok = i >= 0.0
            && (i as usize) < grid.points()[axis]
            && (grid.coordinate(axis, i as usize) - x).abs() <= 1e-9 * h;
        if !ok {
            return Err(Error::OutOfBounds { point: point.to_vec() });
        }
        multi.push(i as usize);
    }
    Ok(grid.flat_index(&multi))
}

/// The shipped spacetimes.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    /// `(t, x, y, z)`, `diag(-1, 1, 1, 1)`.
    Minkowski4,
    /// `(r, theta)`, `diag(1, r^2)`.
    Polar2,
    /// `(r, theta, phi)`, flat space in spherical coordinates.
    Spherical3,
    /// `(t, r, theta, phi)`, `ds^2 = -alpha^2 dt^2 + a^2 dr^2 + r^2 dOmega^2`.
    StaticSpherical { alpha: String, a: String },
    /// Static spherical with `alpha^2 = 1 - 2M/r`, `a^2 = 1/(1 - 2M/r)`.
    Schwarzschild { mass: f64 },
}

impl Preset {
    pub fn by_name(name: &str, mass: Option<f64>, alpha: Option<&str>, a: Option<&str>) -> Result<Self> {
        let preset = match name {
            "minkowski4" => Preset::Minkowski4,
            "polar2" => Preset::Polar2,
            "spherical3" => Preset::Spherical3,
            "static_spherical" => Preset::StaticSpherical {
                alpha: alpha.unwrap_or("1").to_string(),
                a: a.unwrap_or("1").to_string(),
            },
            "schwarzschild" => Preset::Schwarzschild {
                mass: mass.ok_or_else(|| Error::InvalidParameter("schwarzschild needs a mass".into()))?,
            },
            other => return Err(Error::UnknownPreset(other.to_string())),
        };
        preset.check()?;
        Ok(preset)
    }

    fn check(&self) -> Result<()> {
        if let Preset::Schwarzschild { mass } = self {
            if !(*mass > 0.0 && mass.is_finite()) {
                return Err(Error::InvalidParameter(format!("mass must be positive, got {mass}")));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Minkowski4 => "minkowski4",
            Preset::Polar2 => "polar2",
            Preset::Spherical3 => "spherical3",
            Preset::StaticSpherical { .. } => "static_spherical",
            Preset::Schwarzschild { .. } => "schwarzschild",
        }
    }

    pub fn coordinate_names(&self) -> &'static [&'static str] {
        match self {
            Preset::Minkowski4 => &["t", "x", "y", "z"],
            Preset::Polar2 => &["r", "theta"],
            Preset::Spherical3 => &["r", "theta", "phi"],
            Preset::StaticSpherical { .. } | Preset::Schwarzschild { .. } => &["t", "r", "theta", "phi"],
        }
    }

    pub fn signature(&self) -> Signature {
        match self {
            Preset::Minkowski4 | Preset::StaticSpherical { .. } | Preset::Schwarzschild { .. } => {
                Signature::lorentzian(4)
            }
            Preset::Polar2 => Signature::riemannian(2),
            Preset::Spherical3 => Signature::riemannian(3),
        }
    }

    fn singularities(&self) -> Vec<(usize, f64)> {
        use std::f64::consts::PI;
        match self {
            Preset::Minkowski4 => vec![],
            Preset::Polar2 => vec![(0, 0.0)],
            Preset::Spherical3 => vec![(0, 0.0), (1, 0.0), (1, PI)],
            Preset::StaticSpherical { .. } => vec![(1, 0.0), (2, 0.0), (2, PI)],
            Preset::Schwarzschild { mass } => vec![(1, 0.0), (1, 2.0 * mass), (2, 0.0), (2, PI)],
        }
    }

    /// Chart with the preset's coordinate names over the given box.
    pub fn chart(&self, bounds: &[(f64, f64)], periodic: &[bool]) -> Result<CoordinateChart> {
        let chart = CoordinateChart::new(
            self.coordinate_names().iter().copied(),
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
            periodic.to_vec(),
        )?;
        self.declare_singularities(chart)
    }

    fn declare_singularities(&self, mut chart: CoordinateChart) -> Result<CoordinateChart> {
        for (axis, value) in self.singularities() {
            if !chart.singular_points(axis).contains(&value) {
                chart = chart.with_singularity(axis, value)?;
            }
        }
        Ok(chart)
    }

    pub fn metric(&self, chart: &CoordinateChart) -> Result<MetricField> {
        self.check()?;
        let names = self.coordinate_names();
        if chart.names() != names {
            return Err(Error::ChartMismatch(format!(
                "preset {} uses coordinates {names:?}, chart has {:?}",
                self.name(),
                chart.names()
            )));
        }
        let chart = self.declare_singularities(chart.clone())?;
        let p = |s: &str| chart.parse(s);
        let diag = match self {
            Preset::Minkowski4 => vec![p("-1")?, p("1")?, p("1")?, p("1")?],
            Preset::Polar2 => vec![p("1")?, p("r^2")?],
            Preset::Spherical3 => vec![p("1")?, p("r^2")?, p("r^2*sin(theta)^2")?],
            Preset::StaticSpherical { alpha, a } => {
                let alpha = p(alpha)?;
                let a = p(a)?;
                vec![-alpha.powf(2.0), a.powf(2.0), p("r^2")?, p("r^2*sin(theta)^2")?]
            }
            Preset::Schwarzschild { mass } => {
                let lapse2 = p(&format!("1 - 2*{mass:?}/r"))?;
                vec![-&lapse2, Expr::one() / lapse2, p("r^2")?, p("r^2*sin(theta)^2")?]
            }
        };
        MetricField::diagonal(chart, diag, self.signature())
    }
}

/// Determinant by cofactor expansion, skipping structural zeros.
pub(crate) fn determinant<B: Backend>(b: &B, m: &[B::Scalar], n: usize) -> B::Scalar {
    let rows: Vec<usize> = (0..n).collect();
    let cols: Vec<usize> = (0..n).collect();
    minor_det(b, m, n, &rows, &cols)
}

fn minor_det<B: Backend>(b: &B, m: &[B::Scalar], n: usize, rows: &[usize], cols: &[usize]) -> B::Scalar {
    if rows.len() == 1 {
        return m[rows[0] * n + cols[0]].clone();
    }
    let r = rows[0];
    let sub_rows = &rows[1..];
    let mut terms = Vec::new();
    for (j, &c) in cols.iter().enumerate() {
        let entry = &m[r * n + c];
        if b.is_structural_zero(entry) {
            continue;
        }
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = minor_det(b, m, n, sub_rows, &sub_cols);
        if b.is_structural_zero(&minor) {
            continue;
        }
        let term = b.mul(entry, &minor);
        terms.push(if j % 2 == 0 { term } else { b.neg(&term) });
    }
    b.sum(terms)
}

/// Inverse of a symmetric matrix, given its signed determinant.
pub(crate) fn inverse<B: Backend>(b: &B, m: &[B::Scalar], n: usize, det: &B::Scalar) -> Vec<B::Scalar> {
    cofactor_inverse(b, m, n, det, true)
}

/// Inverse of an arbitrary square matrix, given its signed determinant.
pub(crate) fn general_inverse<B: Backend>(b: &B, m: &[B::Scalar], n: usize, det: &B::Scalar) -> Vec<B::Scalar> {
    cofactor_inverse(b, m, n, det, false)
}

fn cofactor_inverse<B: Backend>(b: &B, m: &[B::Scalar], n: usize, det: &B::Scalar, symmetric: bool) -> Vec<B::Scalar> {
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || b.is_structural_zero(&m[i * n + j])));
    let one = b.constant(1.0);
    let mut out = vec![b.constant(0.0); n * n];
    if diagonal {
        for i in 0..n {
            out[i * n + i] = b.div(&one, &m[i * n + i]);
        }
        return out;
    }
    let all: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in if symmetric { i } else { 0 }..n {
            // inverse_ij = cofactor_ji / det
            let rows: Vec<usize> = all.iter().copied().filter(|&x| x != j).collect();
            let cols: Vec<usize> = all.iter().copied().filter(|&x| x != i).collect();
            let minor = minor_det(b, m, n, &rows, &cols);
            let cof = if (i + j) % 2 == 0 { minor } else { b.neg(&minor) };
            let v = b.div(&cof, det);
            if symmetric {
                out[j * n + i] = v.clone();
            }
            out[i * n + j] = v;
        }
    }
    out
}
