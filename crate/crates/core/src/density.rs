//! Coordinate changes of tensor densities and weight bookkeeping.
//!
//! A [`ChartMap`] carries the old coordinates as expressions in the new ones
//! (`x(x')`), and optionally the forward map `x'(x)`. Both Jacobians are kept
//! symbolically in target coordinates, so transformed fields stay analytic.

use nalgebra::DMatrix;

use crate::calculus::Geometry;
use crate::channel::{random_points, Analytic, Backend};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::CoordinateChart;
use crate::metric::{self, determinant, MetricField};
use crate::tensor::{Slot, TensorDensityField};

/// Round-trip tolerance for `forward(inverse(x'))`.
pub const ROUND_TRIP_TOL: f64 = 1e-10;
/// Smallest accepted |Jacobian determinant| at a validation point.
pub const JACOBIAN_EPS: f64 = 1e-12;
const VALIDATION_POINTS: usize = 100;

#[derive(Debug, Clone)]
pub struct ChartMap {
    source: CoordinateChart,
    target: CoordinateChart,
    /// `x'^m(x)`, over source symbols.
    forward: Option<Vec<Expr>>,
    /// `x^a(x')`, over target symbols.
    inverse: Vec<Expr>,
    /// `dx'^m/dx^a` at `x(x')`, row-major `[m][a]`.
    jac_forward: Vec<Expr>,
    /// `dx^a/dx'^m`, row-major `[a][m]`.
    jac_inverse: Vec<Expr>,
    /// `|det dx/dx'|`
    jac_det: Expr,
}

impl ChartMap {
    /// Build from source-to-target expressions (`forward`, may be omitted) and
    /// target-to-source expressions (`inverse`). Validated at 100 random
    /// points of the target chart.
    pub fn new<T: AsRef<str>>(
        source: CoordinateChart,
        target: CoordinateChart,
        forward: Option<&[T]>,
        inverse: &[T],
    ) -> Result<Self> {
        let dim = source.dim();
        if target.dim() != dim {
            return Err(Error::ChartMap(format!(
                "source has {dim} coordinates, target has {}",
                target.dim()
            )));
        }
        let parse_all = |chart: &CoordinateChart, srcs: &[T], what: &str| -> Result<Vec<Expr>> {
            if srcs.len() != dim {
                return Err(Error::ChartMap(format!("{what} needs {dim} expressions, got {}", srcs.len())));
            }
            srcs.iter().map(|s| chart.parse(s.as_ref())).collect()
        };
        let inverse = parse_all(&target, inverse, "inverse map")?;
        let forward = forward.map(|f| parse_all(&source, f, "forward map")).transpose()?;
        Self::from_exprs(source, target, forward, inverse)
    }

    pub fn from_exprs(
        source: CoordinateChart,
        target: CoordinateChart,
        forward: Option<Vec<Expr>>,
        inverse: Vec<Expr>,
    ) -> Result<Self> {
        let dim = source.dim();
        if target.dim() != dim || inverse.len() != dim || forward.as_ref().is_some_and(|f| f.len() != dim) {
            return Err(Error::ChartMap("map components must match the chart dimension".into()));
        }
        let jac_inverse: Vec<Expr> = (0..dim)
            .flat_map(|a| (0..dim).map(move |m| (a, m)))
            .map(|(a, m)| inverse[a].differentiate(m))
            .collect();
        let algebra = Analytic::with_probes(target.clone(), vec![target_midpoint(&target)])?;
        let det = determinant(&algebra, &jac_inverse, dim);
        let jac_forward = match &forward {
            Some(f) => (0..dim)
                .flat_map(|m| (0..dim).map(move |a| (m, a)))
                .map(|(m, a)| f[m].differentiate(a).substitute(&inverse))
                .collect(),
            None => metric::general_inverse(&algebra, &jac_inverse, dim, &det),
        };
        let map = Self {
            source,
            target,
            forward,
            inverse,
            jac_forward,
            jac_inverse,
            jac_det: det.abs(),
        };
        map.validate()?;
        Ok(map)
    }

    fn validate(&self) -> Result<()> {
        let dim = self.dim();
        for p in random_points(&self.target, VALIDATION_POINTS, 0x0c4a_7a11) {
            let entries = self.jac_inverse.iter().map(|e| e.eval(&p)).collect::<std::result::Result<Vec<_>, _>>()?;
            let det = DMatrix::from_row_slice(dim, dim, &entries).determinant();
            if !(det.abs() > JACOBIAN_EPS) {
                return Err(Error::SingularJacobian { det, point: p });
            }
            if let Some(fwd) = &self.forward {
                let x = self.inverse.iter().map(|e| e.eval(&p)).collect::<std::result::Result<Vec<_>, _>>()?;
                for (m, f) in fwd.iter().enumerate() {
                    let back = f.eval(&x)?;
                    if !((back - p[m]).abs() <= ROUND_TRIP_TOL * p[m].abs().max(1.0)) {
                        return Err(Error::ChartMap(format!(
                            "forward(inverse(x')) differs from x' in component {m} at {p:?}: {back}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// The identity map on `chart`.
    pub fn identity(chart: CoordinateChart) -> Result<Self> {
        let coords: Vec<Expr> = (0..chart.dim()).map(|i| chart.coordinate(i)).collect();
        Self::from_exprs(chart.clone(), chart, Some(coords.clone()), coords)
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn source(&self) -> &CoordinateChart {
        &self.source
    }

    pub fn target(&self) -> &CoordinateChart {
        &self.target
    }

    pub fn forward(&self) -> Option<&[Expr]> {
        self.forward.as_deref()
    }

    pub fn inverse(&self) -> &[Expr] {
        &self.inverse
    }

    /// `dx'^m/dx^a` in target coordinates.
    pub fn jacobian_forward(&self, m: usize, a: usize) -> &Expr {
        &self.jac_forward[m * self.dim() + a]
    }

    /// `dx^a/dx'^m` in target coordinates.
    pub fn jacobian_inverse(&self, a: usize, m: usize) -> &Expr {
        &self.jac_inverse[a * self.dim() + m]
    }

    /// `|dx/dx'|` in target coordinates.
    pub fn jacobian_determinant(&self) -> &Expr {
        &self.jac_det
    }

    /// Pull a source-chart expression back to target coordinates.
    pub fn pull_back(&self, e: &Expr) -> Expr {
        e.substitute(&self.inverse)
    }

    /// `next ∘ self`: source of `self` to target of `next`.
    pub fn then(&self, next: &ChartMap) -> Result<ChartMap> {
        if !self.target.same_coordinates(&next.source) {
            return Err(Error::ChartMismatch(format!(
                "cannot compose: {:?} then {:?}",
                self.target.names(),
                next.source.names()
            )));
        }
        let inverse = self.inverse.iter().map(|e| e.substitute(&next.inverse)).collect();
        let forward = match (&self.forward, &next.forward) {
            (Some(a), Some(b)) => Some(b.iter().map(|e| e.substitute(a)).collect()),
            _ => None,
        };
        Self::from_exprs(self.source.clone(), next.target.clone(), forward, inverse)
    }
}

fn target_midpoint(chart: &CoordinateChart) -> Vec<f64> {
    chart.lower().iter().zip(chart.upper()).map(|(l, u)| 0.5 * (l + u)).collect()
}

/// Apply the density transformation law: each up slot picks up
/// `dx'/dx`, each down slot `dx/dx'`, and the whole `|dx/dx'|^w`.
pub fn transform_density(t: &TensorDensityField<Expr>, map: &ChartMap) -> Result<TensorDensityField<Expr>> {
    t.expect_chart(map.source())?;
    let dim = map.dim();
    let rank = t.rank();
    let pulled: Vec<Expr> = t.components().iter().map(|c| map.pull_back(c)).collect();
    let factor = |slot: Slot, new: usize, old: usize| match slot {
        Slot::Up => map.jacobian_forward(new, old),
        Slot::Down => map.jacobian_inverse(old, new),
    };
    let weight_factor = (t.weight() != 0.0).then(|| map.jacobian_determinant().powf(t.weight()));

    let count = dim.pow(rank as u32);
    let mut out = Vec::with_capacity(count);
    for flat in 0..count {
        let new_idx = t.multi_index(flat);
        let mut acc = Expr::zero();
        for (old_flat, comp) in pulled.iter().enumerate() {
            if comp.is_zero() {
                continue;
            }
            let old_idx = t.multi_index(old_flat);
            let mut term = comp.clone();
            for (k, &slot) in t.slots().iter().enumerate() {
                let f = factor(slot, new_idx[k], old_idx[k]);
                term = &term * f;
                if term.is_zero() {
                    break;
                }
            }
            acc = acc + term;
        }
        if let Some(w) = &weight_factor {
            acc = acc * w;
        }
        out.push(acc);
    }
    TensorDensityField::new(map.target().clone(), t.slots().to_vec(), t.weight(), out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeterminantReport {
    /// Max over sample points of `|g' - |dx/dx'|^2 g| / |dx/dx'|^2 g`.
    pub max_relative_deviation: f64,
    pub points: usize,
}

/// Compare the determinant of the transformed metric with `|dx/dx'|^2 g`.
pub fn determinant_weight_check(metric: &MetricField, map: &ChartMap) -> Result<DeterminantReport> {
    let exprs = metric
        .exprs()
        .ok_or_else(|| Error::InvalidParameter("determinant check needs an analytic metric".into()))?;
    let dim = metric.dim();
    let g = TensorDensityField::new(metric.chart().clone(), vec![Slot::Down, Slot::Down], 0.0, exprs.to_vec())?;
    let transformed = transform_density(&g, map)?;
    let pulled: Vec<Expr> = exprs.iter().map(|e| map.pull_back(e)).collect();

    let mut worst: f64 = 0.0;
    let points = random_points(map.target(), VALIDATION_POINTS, 0xde7e_2a11);
    for p in &points {
        let eval = |es: &[Expr]| -> Result<DMatrix<f64>> {
            let v = es.iter().map(|e| e.eval(p)).collect::<std::result::Result<Vec<_>, _>>()?;
            Ok(DMatrix::from_row_slice(dim, dim, &v))
        };
        let g_new = eval(transformed.components())?.determinant().abs();
        let g_old = eval(&pulled)?.determinant().abs();
        let jac = map.jacobian_determinant().eval(p)?;
        if !(jac > JACOBIAN_EPS) {
            return Err(Error::SingularJacobian { det: jac, point: p.clone() });
        }
        let expected = jac * jac * g_old;
        let dev = (g_new - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
        worst = if dev.is_nan() { f64::NAN } else { worst.max(dev) };
    }
    Ok(DeterminantReport {
        max_relative_deviation: worst,
        points: points.len(),
    })
}

/// `sqrt(g)^{-w} t`, an ordinary tensor.
pub fn normalize_weight<B: Backend>(
    geo: &Geometry<'_, B>,
    t: &TensorDensityField<B::Scalar>,
) -> Result<TensorDensityField<B::Scalar>> {
    t.expect_chart(geo.chart())?;
    let w = t.weight();
    if w == 0.0 {
        return Ok(t.clone());
    }
    let b = geo.backend();
    let factor = b.powf(geo.sqrt_g(), -w);
    Ok(t.map(|c| b.mul(c, &factor)).with_weight(0.0))
}

/// Inverse of [`normalize_weight`]: `sqrt(g)^w t` with weight `w`.
pub fn restore_weight<B: Backend>(
    geo: &Geometry<'_, B>,
    t: &TensorDensityField<B::Scalar>,
    w: f64,
) -> Result<TensorDensityField<B::Scalar>> {
    t.expect_chart(geo.chart())?;
    if t.weight() != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "restore_weight expects an ordinary tensor, got weight {}",
            t.weight()
        )));
    }
    if !w.is_finite() {
        return Err(Error::InvalidParameter(format!("weight {w} is not finite")));
    }
    if w == 0.0 {
        return Ok(t.clone());
    }
    let b = geo.backend();
    let factor = b.powf(geo.sqrt_g(), w);
    Ok(t.map(|c| b.mul(c, &factor)).with_weight(w))
}
