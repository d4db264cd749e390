//! Proper-volume and proper-surface quadrature over coordinate boxes, the
//! curved-space Gauss law, and the Killing mass integral.
//!
//! Integrals run over lattice nodes of a [`RegionSpec`]. An axis may be
//! collapsed to a single lattice line, which turns the box into a slice; a
//! periodic axis spanning its whole period has no faces.
//!
//! On a face normal to axis `m` the unit normal is `n_m = s / sqrt|g^{mm}|`
//! and the induced area density is `sqrt g sqrt|g^{mm}|`, so the flux
//! integrand reduces to `s P^m sqrt g`.
//!
//! Gauss's law holds for vector currents only, so [`gauss_check`] takes a
//! [`VectorField`]:
//!
//! ```
//! use std::f64::consts::PI;
//! use std::sync::Arc;
//! use grcalc::integrate::gauss_check;
//! use grcalc::{Analytic, Geometry, GridSpec, Preset, Quadrature, RegionSpec, VectorField};
//!
//! let chart = Preset::Polar2.chart(&[(1.0, 2.0), (0.0, 2.0 * PI)], &[false, true]).unwrap();
//! let m = Preset::Polar2.metric(&chart).unwrap();
//! let b = Analytic::new(chart.clone());
//! let geo = Geometry::new(&b, &m).unwrap();
//! let region = RegionSpec::whole(Arc::new(GridSpec::new(chart.clone(), vec![33, 32]).unwrap()));
//! let p = VectorField::parse(&chart, &["1/r", "0"]).unwrap();
//! let rep = gauss_check(&geo, &p, &region, Quadrature::Simpson).unwrap();
//! assert!(rep.residual < 1e-12);
//! ```
//!
//! There is no counterpart for rank-two fields:
//!
//! ```compile_fail
//! use std::f64::consts::PI;
//! use std::sync::Arc;
//! use grcalc::integrate::gauss_check;
//! use grcalc::{Analytic, Geometry, GridSpec, Preset, Quadrature, RegionSpec, Slot, TensorDensityField};
//!
//! let chart = Preset::Polar2.chart(&[(1.0, 2.0), (0.0, 2.0 * PI)], &[false, true]).unwrap();
//! let m = Preset::Polar2.metric(&chart).unwrap();
//! let b = Analytic::new(chart.clone());
//! let geo = Geometry::new(&b, &m).unwrap();
//! let region = RegionSpec::whole(Arc::new(GridSpec::new(chart.clone(), vec![33, 32]).unwrap()));
//! let t = TensorDensityField::parse(&chart, vec![Slot::Up, Slot::Up], 0.0, &["1", "0", "0", "1"]).unwrap();
//! gauss_check(&geo, &t, &region, Quadrature::Simpson).unwrap();
//! ```

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::calculus::Geometry;
use crate::channel::Backend;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::physics::StressEnergyField;
use crate::tensor::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    #[default]
    Trapezoid,
    /// Composite Simpson; an even node count closes with a 3/8 panel.
    Simpson,
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quadrature::Trapezoid => "trapezoid",
            Quadrature::Simpson => "simpson",
        })
    }
}

impl Quadrature {
    /// Polynomial order of the composite rule.
    pub fn order(self) -> usize {
        match self {
            Quadrature::Trapezoid => 2,
            Quadrature::Simpson => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceLabel {
    Inner,
    Outer,
}

/// Inclusive node range along one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisRange {
    pub lo: usize,
    pub hi: usize,
    /// Full period of a periodic axis; no faces.
    pub wraps: bool,
}

impl AxisRange {
    pub fn is_slice(&self) -> bool {
        self.lo == self.hi
    }

    fn has_faces(&self) -> bool {
        !self.wraps && !self.is_slice()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub axis: usize,
    pub side: Side,
    pub label: FaceLabel,
    /// +1 when the normal points out of the region.
    pub orientation: f64,
}

/// A coordinate box aligned with the lattice.
#[derive(Debug, Clone)]
pub struct RegionSpec {
    grid: Arc<GridSpec>,
    ranges: Vec<AxisRange>,
    labels: Vec<[FaceLabel; 2]>,
    orientation: f64,
}

impl RegionSpec {
    /// The whole lattice; periodic axes wrap.
    pub fn whole(grid: Arc<GridSpec>) -> Self {
        let ranges = (0..grid.dim())
            .map(|a| AxisRange {
                lo: 0,
                hi: grid.points()[a] - 1,
                wraps: grid.chart().periodic()[a],
            })
            .collect();
        Self::with_ranges(grid, ranges)
    }

    /// Node index ranges per axis. On a periodic axis, `(0, n-1)` means the
    /// full period.
    pub fn from_indices(grid: Arc<GridSpec>, ranges: &[(usize, usize)]) -> Result<Self> {
        if ranges.len() != grid.dim() {
            return Err(Error::Region(format!("{} ranges for {} axes", ranges.len(), grid.dim())));
        }
        let mut out = Vec::with_capacity(ranges.len());
        for (axis, &(lo, hi)) in ranges.iter().enumerate() {
            let n = grid.points()[axis];
            if lo > hi || hi >= n {
                return Err(Error::Region(format!(
                    "axis `{}`: node range {lo}..={hi} outside 0..{n}",
                    grid.chart().names()[axis]
                )));
            }
            out.push(AxisRange {
                lo,
                hi,
                wraps: grid.chart().periodic()[axis] && lo == 0 && hi == n - 1,
            });
        }
        Ok(Self::with_ranges(grid, out))
    }

    /// Coordinate intervals per axis; endpoints must sit on lattice lines.
    /// A zero-width interval selects a slice.
    pub fn from_bounds(grid: Arc<GridSpec>, bounds: &[(f64, f64)]) -> Result<Self> {
        if bounds.len() != grid.dim() {
            return Err(Error::Region(format!("{} intervals for {} axes", bounds.len(), grid.dim())));
        }
        let chart = grid.chart().clone();
        let mut ranges = Vec::with_capacity(bounds.len());
        for (axis, &(a, b)) in bounds.iter().enumerate() {
            let name = &chart.names()[axis];
            let (lower, upper) = (chart.lower()[axis], chart.upper()[axis]);
            let h = grid.spacing()[axis];
            let tol = 1e-9 * h;
            if !(a <= b) || a < lower - tol || b > upper + tol {
                return Err(Error::Region(format!(
                    "axis `{name}`: interval [{a}, {b}] not inside [{lower}, {upper}]"
                )));
            }
            let n = grid.points()[axis];
            if chart.periodic()[axis] && (a - lower).abs() <= tol && (b - upper).abs() <= tol {
                ranges.push(AxisRange {
                    lo: 0,
                    hi: n - 1,
                    wraps: true,
                });
                continue;
            }
            let snap = |x: f64| -> Result<usize> {
                let i = ((x - lower) / h).round();
                if i < 0.0 || i as usize >= n || (grid.coordinate(axis, i as usize) - x).abs() > tol {
                    return Err(Error::Region(format!("axis `{name}`: {x} is not on a lattice line")));
                }
                Ok(i as usize)
            };
            ranges.push(AxisRange {
                lo: snap(a)?,
                hi: snap(b)?,
                wraps: false,
            });
        }
        Ok(Self::with_ranges(grid, ranges))
    }

    fn with_ranges(grid: Arc<GridSpec>, ranges: Vec<AxisRange>) -> Self {
        let labels = vec![[FaceLabel::Inner, FaceLabel::Outer]; ranges.len()];
        Self {
            grid,
            ranges,
            labels,
            orientation: 1.0,
        }
    }

    /// Relabel the faces of `axis`.
    pub fn with_labels(mut self, axis: usize, lower: FaceLabel, upper: FaceLabel) -> Self {
        self.labels[axis] = [lower, upper];
        self
    }

    /// Every face normal reversed.
    pub fn flipped(mut self) -> Self {
        self.orientation = -self.orientation;
        self
    }

    pub fn grid(&self) -> &Arc<GridSpec> {
        &self.grid
    }

    pub fn ranges(&self) -> &[AxisRange] {
        &self.ranges
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Collapsed axes.
    pub fn slice_axes(&self) -> Vec<usize> {
        (0..self.ranges.len()).filter(|&a| self.ranges[a].is_slice()).collect()
    }

    pub fn faces(&self) -> Vec<Face> {
        let mut out = Vec::new();
        for (axis, r) in self.ranges.iter().enumerate() {
            if r.has_faces() {
                out.push(Face {
                    axis,
                    side: Side::Lower,
                    label: self.labels[axis][0],
                    orientation: -self.orientation,
                });
                out.push(Face {
                    axis,
                    side: Side::Upper,
                    label: self.labels[axis][1],
                    orientation: self.orientation,
                });
            }
        }
        out
    }

    fn axis_weights(&self, axis: usize, quad: Quadrature) -> Result<Vec<f64>> {
        let r = self.ranges[axis];
        let h = self.grid.spacing()[axis];
        if r.is_slice() {
            return Ok(vec![1.0]);
        }
        if r.wraps {
            return Ok(vec![h; r.hi - r.lo + 1]);
        }
        Ok(rule_weights(r.hi - r.lo + 1, h, quad))
    }

    /// Quadrature of lattice values over the region with axis `fixed`
    /// (if any) pinned to one node.
    fn sum(&self, values: &[f64], quad: Quadrature, fixed: Option<(usize, usize)>) -> Result<f64> {
        let dim = self.ranges.len();
        let mut axes = Vec::with_capacity(dim);
        for axis in 0..dim {
            match fixed {
                Some((a, node)) if a == axis => axes.push((node, vec![1.0])),
                _ => axes.push((self.ranges[axis].lo, self.axis_weights(axis, quad)?)),
            }
        }
        let mut total = 0.0;
        let mut idx = vec![0usize; dim];
        loop {
            let mut w = 1.0;
            let mut flat = 0;
            for axis in 0..dim {
                w *= axes[axis].1[idx[axis]];
                flat += (axes[axis].0 + idx[axis]) * self.grid.stride(axis);
            }
            total += w * values[flat];
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return Ok(total);
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < axes[axis].1.len() {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }

    fn face_node(&self, face: &Face) -> usize {
        let r = self.ranges[face.axis];
        match face.side {
            Side::Lower => r.lo,
            Side::Upper => r.hi,
        }
    }

    fn check(&self, geo_chart: &crate::grid::CoordinateChart) -> Result<()> {
        if !self.grid.chart().same_coordinates(geo_chart) {
            return Err(Error::ChartMismatch("region lattice chart differs from the metric chart".into()));
        }
        Ok(())
    }
}

/// One-dimensional weights for `n` equally spaced nodes.
pub fn rule_weights(n: usize, h: f64, quad: Quadrature) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match (quad, n) {
        (_, 0) => {}
        (_, 1) => w[0] = 1.0,
        (Quadrature::Trapezoid, _) | (Quadrature::Simpson, 2) => {
            for (i, x) in w.iter_mut().enumerate() {
                *x = if i == 0 || i == n - 1 { 0.5 * h } else { h };
            }
        }
        (Quadrature::Simpson, _) => {
            let intervals = n - 1;
            let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
            for i in (0..simpson_end).step_by(2) {
                w[i] += h / 3.0;
                w[i + 1] += 4.0 * h / 3.0;
                w[i + 2] += h / 3.0;
            }
            if simpson_end < intervals {
                let s = simpson_end;
                for (j, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
                    w[s + j] += 3.0 * h / 8.0 * c;
                }
            }
        }
    }
    w
}

/// `int f sqrt g d^n x` over the region.
pub fn volume_integral<B: Backend>(
    geo: &Geometry<'_, B>,
    f: &B::Scalar,
    region: &RegionSpec,
    quad: Quadrature,
) -> Result<f64> {
    region.check(geo.chart())?;
    let b = geo.backend();
    let values = b.values_on(&b.mul(f, geo.sqrt_g()), region.grid())?;
    region.sum(&values, quad, None)
}

/// `n_m` and the induced area density on one face.
#[derive(Debug, Clone)]
pub struct SurfaceElement {
    pub face: Face,
    /// Nonzero component of the unit normal covector, per face node.
    pub normal: Vec<f64>,
    /// `g^{mn} n_m n_n`: +1 spacelike normal, -1 timelike.
    pub causal: f64,
    /// Induced `sqrt|gamma|` per face node.
    pub area_density: Vec<f64>,
    /// Flat lattice indices of the face nodes, matching the vectors above.
    pub nodes: Vec<usize>,
}

/// Normal and area density on `face`, evaluated at its lattice nodes.
pub fn surface_element<B: Backend>(geo: &Geometry<'_, B>, region: &RegionSpec, face: Face) -> Result<SurfaceElement> {
    region.check(geo.chart())?;
    let b = geo.backend();
    let grid = region.grid();
    let ginv = b.values_on(geo.inverse_metric(face.axis, face.axis), grid)?;
    let sqrt_g = b.values_on(geo.sqrt_g(), grid)?;
    let nodes = face_nodes(region, &face);
    let mut normal = Vec::with_capacity(nodes.len());
    let mut area = Vec::with_capacity(nodes.len());
    let mut causal = None;
    for &n in &nodes {
        let gmm = ginv[n];
        if !(gmm.abs() > 0.0) {
            return Err(Error::Region(format!(
                "face normal to axis `{}` is null at {:?}",
                grid.chart().names()[face.axis],
                grid.point(n)
            )));
        }
        let c = gmm.signum();
        if *causal.get_or_insert(c) != c {
            return Err(Error::Region("face changes causal character".into()));
        }
        normal.push(face.orientation / gmm.abs().sqrt());
        area.push(sqrt_g[n] * gmm.abs().sqrt());
    }
    Ok(SurfaceElement {
        face,
        normal,
        causal: causal.unwrap_or(1.0),
        area_density: area,
        nodes,
    })
}

fn face_nodes(region: &RegionSpec, face: &Face) -> Vec<usize> {
    let grid = region.grid();
    let node = region.face_node(face);
    let dim = grid.dim();
    let lens: Vec<usize> = (0..dim)
        .map(|a| if a == face.axis { 1 } else { region.ranges[a].hi - region.ranges[a].lo + 1 })
        .collect();
    let total: usize = lens.iter().product();
    let mut out = Vec::with_capacity(total);
    for mut k in 0..total {
        let mut flat = 0;
        for a in (0..dim).rev() {
            let i = k % lens[a];
            k /= lens[a];
            let pos = if a == face.axis { node } else { region.ranges[a].lo + i };
            flat += pos * grid.stride(a);
        }
        out.push(flat);
    }
    out.sort_unstable();
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceFlux {
    pub face: Face,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceReport {
    pub total: f64,
    pub faces: Vec<FaceFlux>,
}

impl SurfaceReport {
    /// Sum of fluxes through faces with `label` on `axis`.
    pub fn flux(&self, axis: usize, label: FaceLabel) -> f64 {
        self.faces
            .iter()
            .filter(|f| f.face.axis == axis && f.face.label == label)
            .map(|f| f.flux)
            .sum()
    }
}

/// Outward flux `oint P^n n_n sqrt|gamma| d^{n-1}x` through every face.
pub fn surface_integral<B: Backend>(
    geo: &Geometry<'_, B>,
    p: &VectorField<B::Scalar>,
    region: &RegionSpec,
    quad: Quadrature,
) -> Result<SurfaceReport> {
    region.check(geo.chart())?;
    p.field().expect_chart(geo.chart())?;
    let b = geo.backend();
    let grid = region.grid();
    let mut faces = Vec::new();
    let mut total = 0.0;
    for face in region.faces() {
        let element = surface_element(geo, region, face)?;
        let comp = b.values_on(&p.components()[face.axis], grid)?;
        let mut integrand = vec![0.0; grid.node_count()];
        for (j, &n) in element.nodes.iter().enumerate() {
            integrand[n] = comp[n] * element.normal[j] * element.area_density[j];
        }
        let flux = region.sum(&integrand, quad, Some((face.axis, region.face_node(&face))))?;
        total += flux;
        faces.push(FaceFlux { face, flux });
    }
    Ok(SurfaceReport { total, faces })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussReport {
    /// `int (sqrt g P^n)_{,n} d^n x`
    pub lhs: f64,
    /// Outward surface flux.
    pub rhs: f64,
    /// `|lhs - rhs| / max(|lhs|, |rhs|, 1)`
    pub residual: f64,
    pub faces: Vec<FaceFlux>,
}

/// Compare the volume integral of the divergence with the boundary flux.
/// Collapsed axes carry no faces, so their derivative terms are left out of
/// the volume side as well.
pub fn gauss_check<B: Backend>(
    geo: &Geometry<'_, B>,
    p: &VectorField<B::Scalar>,
    region: &RegionSpec,
    quad: Quadrature,
) -> Result<GaussReport> {
    region.check(geo.chart())?;
    p.field().expect_chart(geo.chart())?;
    let b = geo.backend();
    let terms = (0..geo.dim())
        .filter(|&a| !region.ranges[a].is_slice())
        .map(|a| b.partial(&b.mul(geo.sqrt_g(), &p.components()[a]), a))
        .collect::<Result<Vec<_>>>()?;
    let values = b.values_on(&b.sum(terms), region.grid())?;
    let lhs = region.sum(&values, quad, None)?;
    let surface = surface_integral(geo, p, region, quad)?;
    let rhs = surface.total;
    let residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0);
    Ok(GaussReport {
        lhs,
        rhs,
        residual,
        faces: surface.faces,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassOptions {
    pub prefactor: f64,
    /// Coefficient of `delta^m_n T`.
    pub trace_coefficient: f64,
    /// Sign of `dS` on the slice.
    pub orientation: f64,
    /// Reject `k` when its Killing residual exceeds this.
    pub killing_cap: f64,
    pub quadrature: Quadrature,
}

impl Default for MassOptions {
    fn default() -> Self {
        Self {
            prefactor: -1.0 / (16.0 * PI),
            trace_coefficient: 1.0,
            orientation: 1.0,
            killing_cap: 1e-6,
            quadrature: Quadrature::Trapezoid,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MassReport {
    pub mass: f64,
    pub killing_residual: f64,
    pub slice_axis: usize,
}

/// `prefactor * int (T^m_n - c delta^m_n T) k^n dS_m` over a slice.
///
/// The region must collapse exactly one axis, and that axis must be
/// timelike (`g^{tt} < 0`) on the slice.
pub fn mass_integral<B: Backend>(
    geo: &Geometry<'_, B>,
    t: &StressEnergyField<B::Scalar>,
    k: &VectorField<B::Scalar>,
    region: &RegionSpec,
    opts: &MassOptions,
) -> Result<MassReport> {
    region.check(geo.chart())?;
    let b = geo.backend();
    let grid = region.grid();
    let slice = match region.slice_axes().as_slice() {
        [axis] => *axis,
        other => {
            return Err(Error::Region(format!(
                "mass integral needs exactly one collapsed axis, found {}",
                other.len()
            )))
        }
    };
    let element = surface_element(
        geo,
        region,
        Face {
            axis: slice,
            side: Side::Lower,
            label: FaceLabel::Inner,
            orientation: opts.orientation,
        },
    )?;
    if element.causal >= 0.0 {
        return Err(Error::NoTimelikeDirection(format!(
            "axis `{}` has g^{{mm}} >= 0 on the slice",
            grid.chart().names()[slice]
        )));
    }
    let killing = geo.killing_residual(k)?;
    if !(killing.max_norm <= opts.killing_cap) {
        return Err(Error::KillingResidual {
            residual: killing.max_norm,
            cap: opts.killing_cap,
        });
    }

    let mixed = t.mixed(geo)?;
    let trace = t.trace(geo)?;
    let dim = geo.dim();
    let mut terms = Vec::new();
    for n in 0..dim {
        let kn = &k.components()[n];
        if b.is_structural_zero(kn) {
            continue;
        }
        let mut coeff = mixed.get(&[slice, n]).clone();
        if n == slice && opts.trace_coefficient != 0.0 {
            coeff = b.sub(&coeff, &b.scale(&trace, opts.trace_coefficient));
        }
        if !b.is_structural_zero(&coeff) {
            terms.push(b.mul(&coeff, kn));
        }
    }
    let contracted = b.values_on(&b.sum(terms), grid)?;
    let mut integrand = vec![0.0; grid.node_count()];
    for (j, &n) in element.nodes.iter().enumerate() {
        integrand[n] = contracted[n] * element.normal[j] * element.area_density[j];
    }
    let integral = region.sum(&integrand, opts.quadrature, None)?;
    Ok(MassReport {
        mass: opts.prefactor * integral,
        killing_residual: killing.max_norm,
        slice_axis: slice,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Analytic;
    use crate::expr::Expr;
    use crate::grid::CoordinateChart;
    use crate::metric::{MetricField, Signature};

    #[test]
    fn rules_integrate_polynomials() {
        for n in [5, 6, 7, 8, 9, 10] {
            let h = 1.0 / (n - 1) as f64;
            let xs: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
            let s = rule_weights(n, h, Quadrature::Simpson);
            let cubic: f64 = s.iter().zip(&xs).map(|(w, x)| w * x * x * x).sum();
            assert!((cubic - 0.25).abs() < 1e-14, "n={n}");
            let t = rule_weights(n, h, Quadrature::Trapezoid);
            let line: f64 = t.iter().zip(&xs).map(|(w, x)| w * x).sum();
            assert!((line - 0.5).abs() < 1e-15);
        }
    }

    fn flat_box() -> (Analytic, MetricField, Arc<GridSpec>) {
        let chart = CoordinateChart::new(["x", "y", "z"], vec![0.0; 3], vec![1.0; 3], vec![false; 3]).unwrap();
        let m = MetricField::parse(
            chart.clone(),
            &[vec!["1", "0", "0"], vec!["0", "1", "0"], vec!["0", "0", "1"]],
            Signature::riemannian(3),
        )
        .unwrap();
        let grid = Arc::new(GridSpec::new(chart.clone(), vec![9, 9, 9]).unwrap());
        (Analytic::new(chart), m, grid)
    }

    #[test]
    fn unit_box_volume() {
        let (b, m, grid) = flat_box();
        let geo = Geometry::new(&b, &m).unwrap();
        let v = volume_integral(&geo, &Expr::one(), &RegionSpec::whole(grid), Quadrature::Trapezoid).unwrap();
        assert!((v - 1.0).abs() < 1e-15);
    }

    #[test]
    fn region_snapping() {
        let (_, _, grid) = flat_box();
        let r = RegionSpec::from_bounds(grid.clone(), &[(0.25, 0.75), (0.0, 1.0), (0.5, 0.5)]).unwrap();
        assert_eq!(r.ranges()[0], AxisRange { lo: 2, hi: 6, wraps: false });
        assert_eq!(r.slice_axes(), vec![2]);
        assert_eq!(r.faces().len(), 4);
        assert!(RegionSpec::from_bounds(grid.clone(), &[(0.3, 0.75), (0.0, 1.0), (0.0, 1.0)]).is_err());
        assert!(RegionSpec::from_bounds(grid, &[(0.0, 1.5), (0.0, 1.0), (0.0, 1.0)]).is_err());
    }

    #[test]
    fn constant_flux_cancels_and_flips() {
        let (b, m, grid) = flat_box();
        let geo = Geometry::new(&b, &m).unwrap();
        let p = VectorField::parse(b.chart(), &["1", "2", "3"]).unwrap();
        let region = RegionSpec::whole(grid);
        let rep = surface_integral(&geo, &p, &region, Quadrature::Trapezoid).unwrap();
        assert!(rep.total.abs() < 1e-15);
        assert_eq!(rep.faces.len(), 6);
        let q = VectorField::parse(b.chart(), &["x^2", "y*z", "1"]).unwrap();
        let a = surface_integral(&geo, &q, &region, Quadrature::Simpson).unwrap();
        let f = surface_integral(&geo, &q, &region.clone().flipped(), Quadrature::Simpson).unwrap();
        assert_eq!(a.total, -f.total);
        let g = gauss_check(&geo, &q, &region, Quadrature::Simpson).unwrap();
        assert!(g.residual < 1e-12, "{g:?}");
    }
}
