//! Christoffel symbols, covariant derivatives of tensor densities, divergence
//! identities, Lie derivatives of the metric and Killing residuals.
//!
//! Everything hangs off a [`Geometry`], which binds a metric to a backend and
//! caches the inverse metric, `sqrt(g)`, metric partials and the connection.

use nalgebra::DMatrix;

use crate::channel::{Backend, DerivativeChannel};
use crate::error::{Error, Result};
use crate::grid::CoordinateChart;
use crate::metric::{determinant, inverse, MetricField, Signature};
use crate::tensor::{Slot, TensorDensityField, VectorField};

/// Antisymmetry threshold for `divergence_antisymmetric` inputs.
pub const ANTISYMMETRY_EPS: f64 = 1e-12;

/// `Gamma^mu_{ab}`, stored once per unordered lower pair.
#[derive(Debug, Clone)]
pub struct ChristoffelField<S> {
    dim: usize,
    comps: Vec<S>,
    channel: DerivativeChannel,
}

fn pair_index(dim: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    // row-major upper triangle
    a * dim - a * (a + 1) / 2 + b
}

impl<S> ChristoffelField<S> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn channel(&self) -> DerivativeChannel {
        self.channel
    }

    pub fn get(&self, mu: usize, a: usize, b: usize) -> &S {
        let pairs = self.dim * (self.dim + 1) / 2;
        &self.comps[mu * pairs + pair_index(self.dim, a, b)]
    }

    /// All `(mu, a, b)` with `a <= b`, alongside their values.
    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize, usize), &S)> {
        let dim = self.dim;
        let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|a| (a..dim).map(move |b| (a, b))).collect();
        let np = pairs.len();
        self.comps
            .iter()
            .enumerate()
            .map(move |(i, s)| ((i / np, pairs[i % np].0, pairs[i % np].1), s))
    }
}

/// The two routes to `Gamma^nu_{l nu}`.
#[derive(Debug, Clone)]
pub struct ChristoffelTrace<S> {
    /// Direct contraction of the connection.
    pub contracted: Vec<S>,
    /// `(ln sqrt g)_{,l}` from the determinant.
    pub log_sqrt_g: Vec<S>,
    pub channel: DerivativeChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DivergenceRoute {
    /// `P^nu_{,nu} + P^l Gamma^nu_{l nu}`
    Christoffel,
    /// `(1/sqrt g) (sqrt g P^nu)_{,nu}`
    SqrtG,
}

/// Both forms of `F^{ab}_{;b}` for antisymmetric `F`.
#[derive(Debug, Clone)]
pub struct AntisymmetricDivergence<S> {
    /// `(1/sqrt g)(sqrt g F^{ab})_{,b}`
    pub divergence: Vec<S>,
    /// `F^{ab}_{,b} + F^{am} Gamma^b_{mb} + F^{mb} Gamma^a_{mb}`
    pub full: Vec<S>,
    /// `F^{mb} Gamma^a_{mb}`, zero for exactly antisymmetric input.
    pub vanishing_term: Vec<S>,
    pub max_symmetric_part: f64,
    pub channel: DerivativeChannel,
}

#[derive(Debug, Clone)]
pub struct KillingReport<S> {
    /// `k_{m;n} + k_{n;m}`
    pub residual: TensorDensityField<S>,
    /// Lie derivative of the metric along `k`.
    pub lie_derivative: TensorDensityField<S>,
    /// Max |component| of the residual over the backend's nodes.
    pub max_norm: f64,
    /// Max |residual - lie derivative|.
    pub lie_mismatch: f64,
    pub channel: DerivativeChannel,
}

/// A metric bound to a backend with its derived quantities cached.
pub struct Geometry<'b, B: Backend> {
    backend: &'b B,
    chart: CoordinateChart,
    signature: Signature,
    g: Vec<B::Scalar>,
    ginv: Vec<B::Scalar>,
    sqrt_g: B::Scalar,
    /// `dg[l][m*dim + n] = g_{mn,l}`
    dg: Vec<Vec<B::Scalar>>,
    /// `(sqrt g)_{,r} / sqrt g`
    dlog_sqrt_g: Vec<B::Scalar>,
    gamma: ChristoffelField<B::Scalar>,
}

impl<'b, B: Backend> Geometry<'b, B> {
    /// Bind `metric` to `backend`. Fails if the metric is degenerate or has
    /// the wrong signature at any of the backend's evaluation nodes.
    pub fn new(backend: &'b B, metric: &MetricField) -> Result<Self> {
        let dim = metric.dim();
        let g = metric.lift(backend)?;
        let det = determinant(backend, &g, dim);

        let columns = g.iter().map(|c| backend.probe_values(c)).collect::<Result<Vec<_>>>()?;
        let nodes = columns.first().map_or(0, Vec::len);
        let mut buf = vec![0.0; dim * dim];
        for node in 0..nodes {
            for (slot, col) in buf.iter_mut().zip(&columns) {
                *slot = col[node];
            }
            let m = DMatrix::from_row_slice(dim, dim, &buf);
            metric.validate_matrix(&m, &backend.probe_point(node))?;
        }

        let ginv = inverse(backend, &g, dim, &det);
        let sqrt_g = backend.sqrt(&backend.abs(&det));
        let mut dg = Vec::with_capacity(dim);
        for l in 0..dim {
            let mut row = vec![backend.constant(0.0); dim * dim];
            for m in 0..dim {
                for n in m..dim {
                    let d = backend.partial(&g[m * dim + n], l)?;
                    row[m * dim + n] = d.clone();
                    row[n * dim + m] = d;
                }
            }
            dg.push(row);
        }
        let dlog_sqrt_g = (0..dim)
            .map(|r| Ok(backend.div(&backend.partial(&sqrt_g, r)?, &sqrt_g)))
            .collect::<Result<Vec<_>>>()?;

        let gamma = christoffel_from(backend, dim, &ginv, &dg);
        Ok(Self {
            backend,
            chart: metric.chart().clone(),
            signature: metric.signature(),
            g,
            ginv,
            sqrt_g,
            dg,
            dlog_sqrt_g,
            gamma,
        })
    }

    pub fn backend(&self) -> &'b B {
        self.backend
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

    pub fn channel(&self) -> DerivativeChannel {
        self.backend.channel()
    }

    pub fn metric(&self, m: usize, n: usize) -> &B::Scalar {
        &self.g[m * self.dim() + n]
    }

    pub fn inverse_metric(&self, m: usize, n: usize) -> &B::Scalar {
        &self.ginv[m * self.dim() + n]
    }

    pub fn sqrt_g(&self) -> &B::Scalar {
        &self.sqrt_g
    }

    /// `g_{mn,l}`
    pub fn metric_partial(&self, l: usize, m: usize, n: usize) -> &B::Scalar {
        &self.dg[l][m * self.dim() + n]
    }

    /// `(sqrt g)_{,r} / sqrt g`
    pub fn log_sqrt_g_gradient(&self) -> &[B::Scalar] {
        &self.dlog_sqrt_g
    }

    /// The Levi-Civita connection of the metric.
    pub fn christoffel(&self) -> &ChristoffelField<B::Scalar> {
        &self.gamma
    }

    /// `g_{mn}` as a weight-zero down-down field.
    pub fn metric_tensor(&self) -> TensorDensityField<B::Scalar> {
        TensorDensityField::new(self.chart.clone(), vec![Slot::Down, Slot::Down], 0.0, self.g.clone())
            .expect("metric has dim^2 components")
    }

    /// `sqrt(g)^w` as a scalar density of weight `w`.
    pub fn sqrt_g_power(&self, w: f64) -> TensorDensityField<B::Scalar> {
        TensorDensityField::scalar(self.chart.clone(), w, self.backend.powf(&self.sqrt_g, w))
            .expect("scalar field")
    }

    fn check(&self, t: &TensorDensityField<B::Scalar>) -> Result<()> {
        t.expect_chart(&self.chart)
    }

    /// Contracted connection next to `(ln sqrt g)_{,l}`.
    pub fn christoffel_trace(&self) -> ChristoffelTrace<B::Scalar> {
        let b = self.backend;
        let dim = self.dim();
        let contracted = (0..dim)
            .map(|l| {
                b.sum(
                    (0..dim)
                        .map(|nu| self.gamma.get(nu, l, nu))
                        .filter(|s| !b.is_structural_zero(s))
                        .cloned(),
                )
            })
            .collect();
        ChristoffelTrace {
            contracted,
            log_sqrt_g: self.dlog_sqrt_g.clone(),
            channel: self.channel(),
        }
    }

    /// Covariant derivative of a tensor density of any rank and weight. The
    /// new (down) index is appended last.
    pub fn covariant_derivative(&self, t: &TensorDensityField<B::Scalar>) -> Result<TensorDensityField<B::Scalar>> {
        self.check(t)?;
        let b = self.backend;
        let dim = self.dim();
        let rank = t.rank();
        let w = t.weight();
        let partials = (0..dim)
            .map(|rho| t.components().iter().map(|c| b.partial(c, rho)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;

        let mut out = Vec::with_capacity(t.components().len() * dim);
        for (flat, value) in t.components().iter().enumerate() {
            let idx = t.multi_index(flat);
            for rho in 0..dim {
                let mut terms = vec![partials[rho][flat].clone()];
                for (k, slot) in t.slots().iter().enumerate() {
                    let mut j = idx.clone();
                    for s in 0..dim {
                        j[k] = s;
                        let other = t.get(&j);
                        if b.is_structural_zero(other) {
                            continue;
                        }
                        match slot {
                            Slot::Up => {
                                let gam = self.gamma.get(idx[k], s, rho);
                                if !b.is_structural_zero(gam) {
                                    terms.push(b.mul(gam, other));
                                }
                            }
                            Slot::Down => {
                                let gam = self.gamma.get(s, idx[k], rho);
                                if !b.is_structural_zero(gam) {
                                    terms.push(b.neg(&b.mul(gam, other)));
                                }
                            }
                        }
                    }
                }
                if w != 0.0 && !b.is_structural_zero(value) {
                    terms.push(b.scale(&b.mul(&self.dlog_sqrt_g[rho], value), -w));
                }
                out.push(b.sum(terms));
            }
        }
        let mut slots = t.slots().to_vec();
        slots.push(Slot::Down);
        debug_assert_eq!(out.len(), dim.pow(rank as u32 + 1));
        TensorDensityField::new(self.chart.clone(), slots, w, out)
    }

    /// Lower slot `k` with `g_{mn}`.
    pub fn lower_index(&self, t: &TensorDensityField<B::Scalar>, k: usize) -> Result<TensorDensityField<B::Scalar>> {
        self.move_index(t, k, Slot::Up, Slot::Down, &self.g)
    }

    /// Raise slot `k` with `g^{mn}`.
    pub fn raise_index(&self, t: &TensorDensityField<B::Scalar>, k: usize) -> Result<TensorDensityField<B::Scalar>> {
        self.move_index(t, k, Slot::Down, Slot::Up, &self.ginv)
    }

    fn move_index(
        &self,
        t: &TensorDensityField<B::Scalar>,
        k: usize,
        from: Slot,
        to: Slot,
        with: &[B::Scalar],
    ) -> Result<TensorDensityField<B::Scalar>> {
        self.check(t)?;
        if t.slots().get(k) != Some(&from) {
            let mut expected = t.slots().to_vec();
            if k < expected.len() {
                expected[k] = from;
            }
            return Err(Error::IndexSignature {
                expected: crate::tensor::signature_string(&expected),
                found: crate::tensor::signature_string(t.slots()),
            });
        }
        let b = self.backend;
        let dim = self.dim();
        let comps = (0..t.components().len())
            .map(|flat| {
                let idx = t.multi_index(flat);
                let mut j = idx.clone();
                b.sum((0..dim).filter_map(|s| {
                    j[k] = s;
                    let m = &with[idx[k] * dim + s];
                    let c = t.get(&j);
                    (!b.is_structural_zero(m) && !b.is_structural_zero(c)).then(|| b.mul(m, c))
                }))
            })
            .collect();
        let mut slots = t.slots().to_vec();
        slots[k] = to;
        TensorDensityField::new(self.chart.clone(), slots, t.weight(), comps)
    }

    /// `P^nu_{;nu}` for a weight-zero vector along the chosen route.
    pub fn divergence_vector(&self, p: &VectorField<B::Scalar>, route: DivergenceRoute) -> Result<B::Scalar> {
        self.check(p.field())?;
        let b = self.backend;
        let dim = self.dim();
        let comps = p.components();
        match route {
            DivergenceRoute::Christoffel => {
                let trace = self.christoffel_trace();
                let mut terms = Vec::with_capacity(2 * dim);
                for nu in 0..dim {
                    terms.push(b.partial(&comps[nu], nu)?);
                }
                for (l, c) in comps.iter().enumerate() {
                    if !b.is_structural_zero(c) && !b.is_structural_zero(&trace.contracted[l]) {
                        terms.push(b.mul(c, &trace.contracted[l]));
                    }
                }
                Ok(b.sum(terms))
            }
            DivergenceRoute::SqrtG => {
                let flux = (0..dim)
                    .map(|nu| b.partial(&b.mul(&self.sqrt_g, &comps[nu]), nu))
                    .collect::<Result<Vec<_>>>()?;
                Ok(b.div(&b.sum(flux), &self.sqrt_g))
            }
        }
    }

    /// `F^{ab}_{;b}` for an antisymmetric up-up field, by both routes.
    pub fn divergence_antisymmetric(
        &self,
        f: &TensorDensityField<B::Scalar>,
    ) -> Result<AntisymmetricDivergence<B::Scalar>> {
        self.check(f)?;
        f.expect_signature(&[Slot::Up, Slot::Up], Some(0.0))?;
        let b = self.backend;
        let dim = self.dim();
        let mut max_symmetric_part: f64 = 0.0;
        for a in 0..dim {
            for c in a..dim {
                let s = b.add(f.get(&[a, c]), f.get(&[c, a]));
                if !b.is_structural_zero(&s) {
                    let norm = b.sup_norm(&s)?;
                    max_symmetric_part = if norm.is_nan() { f64::NAN } else { max_symmetric_part.max(norm) };
                }
            }
        }
        if !(max_symmetric_part <= ANTISYMMETRY_EPS) {
            return Err(Error::NotAntisymmetric {
                max_symmetric: max_symmetric_part,
            });
        }
        let trace = self.christoffel_trace();
        let mut divergence = Vec::with_capacity(dim);
        let mut full = Vec::with_capacity(dim);
        let mut vanishing_term = Vec::with_capacity(dim);
        for a in 0..dim {
            let flux = (0..dim)
                .map(|beta| b.partial(&b.mul(&self.sqrt_g, f.get(&[a, beta])), beta))
                .collect::<Result<Vec<_>>>()?;
            divergence.push(b.div(&b.sum(flux), &self.sqrt_g));

            let mut terms = Vec::new();
            for beta in 0..dim {
                terms.push(b.partial(f.get(&[a, beta]), beta)?);
            }
            for m in 0..dim {
                let fam = f.get(&[a, m]);
                if !b.is_structural_zero(fam) && !b.is_structural_zero(&trace.contracted[m]) {
                    terms.push(b.mul(fam, &trace.contracted[m]));
                }
            }
            let mut van = Vec::new();
            for m in 0..dim {
                for beta in 0..dim {
                    let fmb = f.get(&[m, beta]);
                    let gam = self.gamma.get(a, m, beta);
                    if !b.is_structural_zero(fmb) && !b.is_structural_zero(gam) {
                        van.push(b.mul(gam, fmb));
                    }
                }
            }
            let van = b.sum(van);
            terms.push(van.clone());
            full.push(b.sum(terms));
            vanishing_term.push(van);
        }
        Ok(AntisymmetricDivergence {
            divergence,
            full,
            vanishing_term,
            max_symmetric_part,
            channel: self.channel(),
        })
    }

    /// `k^c g_{mn,c} + g_{mc} k^c_{,n} + g_{nc} k^c_{,m}`
    pub fn lie_derivative_metric(&self, k: &VectorField<B::Scalar>) -> Result<TensorDensityField<B::Scalar>> {
        self.check(k.field())?;
        let b = self.backend;
        let dim = self.dim();
        let kc = k.components();
        let dk = (0..dim)
            .map(|n| kc.iter().map(|c| b.partial(c, n)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![b.constant(0.0); dim * dim];
        for m in 0..dim {
            for n in m..dim {
                let mut terms = Vec::new();
                for c in 0..dim {
                    let dgmn = self.metric_partial(c, m, n);
                    if !b.is_structural_zero(&kc[c]) && !b.is_structural_zero(dgmn) {
                        terms.push(b.mul(&kc[c], dgmn));
                    }
                    for (x, y) in [(m, n), (n, m)] {
                        let gxc = self.metric(x, c);
                        let dkc = &dk[y][c];
                        if !b.is_structural_zero(gxc) && !b.is_structural_zero(dkc) {
                            terms.push(b.mul(gxc, dkc));
                        }
                    }
                }
                let v = b.sum(terms);
                out[m * dim + n] = v.clone();
                out[n * dim + m] = v;
            }
        }
        TensorDensityField::new(self.chart.clone(), vec![Slot::Down, Slot::Down], 0.0, out)
    }

    /// `k_{n;m} + k_{m;n}` via the covariant derivative of the lowered field,
    /// cross-checked against the Lie derivative.
    pub fn killing_residual(&self, k: &VectorField<B::Scalar>) -> Result<KillingReport<B::Scalar>> {
        let b = self.backend;
        let dim = self.dim();
        let lowered = self.lower_index(k.field(), 0)?;
        let cov = self.covariant_derivative(&lowered)?;
        let mut res = vec![b.constant(0.0); dim * dim];
        for m in 0..dim {
            for n in m..dim {
                let v = b.add(cov.get(&[m, n]), cov.get(&[n, m]));
                res[m * dim + n] = v.clone();
                res[n * dim + m] = v;
            }
        }
        let residual = TensorDensityField::new(self.chart.clone(), vec![Slot::Down, Slot::Down], 0.0, res)?;
        let lie_derivative = self.lie_derivative_metric(k)?;
        let max_norm = self.max_norm(residual.components())?;
        let diffs: Vec<_> = residual
            .components()
            .iter()
            .zip(lie_derivative.components())
            .map(|(r, l)| b.sub(r, l))
            .collect();
        let lie_mismatch = self.max_norm(&diffs)?;
        Ok(KillingReport {
            residual,
            lie_derivative,
            max_norm,
            lie_mismatch,
            channel: self.channel(),
        })
    }

    /// Max |value| over all components and evaluation nodes.
    pub fn max_norm(&self, comps: &[B::Scalar]) -> Result<f64> {
        let b = self.backend;
        let mut m: f64 = 0.0;
        for c in comps {
            if b.is_structural_zero(c) {
                continue;
            }
            let n = b.sup_norm(c)?;
            if n.is_nan() {
                return Ok(f64::NAN);
            }
            m = m.max(n);
        }
        Ok(m)
    }
}

fn christoffel_from<B: Backend>(
    b: &B,
    dim: usize,
    ginv: &[B::Scalar],
    dg: &[Vec<B::Scalar>],
) -> ChristoffelField<B::Scalar> {
    let at = |l: usize, m: usize, n: usize| &dg[l][m * dim + n];
    // first kind: [s; a b] = 1/2 (g_{sa,b} + g_{sb,a} - g_{ab,s})
    let mut first = Vec::with_capacity(dim);
    for s in 0..dim {
        let mut row = Vec::new();
        for a in 0..dim {
            for c in a..dim {
                let t = b.sub(&b.add(at(c, s, a), at(a, s, c)), at(s, a, c));
                row.push(if b.is_structural_zero(&t) { t } else { b.scale(&t, 0.5) });
            }
        }
        first.push(row);
    }
    let pairs = dim * (dim + 1) / 2;
    let mut comps = Vec::with_capacity(dim * pairs);
    for mu in 0..dim {
        for p in 0..pairs {
            comps.push(b.sum((0..dim).filter_map(|s| {
                let gi = &ginv[mu * dim + s];
                let f = &first[s][p];
                (!b.is_structural_zero(gi) && !b.is_structural_zero(f)).then(|| b.mul(gi, f))
            })));
        }
    }
    ChristoffelField {
        dim,
        comps,
        channel: b.channel(),
    }
}

/// `tol(h) = max(floor, C h^order)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub floor: f64,
    pub constant: f64,
    pub order: usize,
}

impl Tolerance {
    pub const FLOOR: f64 = 1e-10;

    pub fn new(constant: f64, order: usize) -> Self {
        Self {
            floor: Self::FLOOR,
            constant,
            order,
        }
    }

    /// Fit `C` from an observed error at spacing `h`, with a safety factor.
    pub fn calibrate(h: f64, error: f64, order: usize, safety: f64) -> Self {
        Self::new(safety * error / h.powi(order as i32), order)
    }

    pub fn at(&self, h: f64) -> f64 {
        self.floor.max(self.constant * h.powi(self.order as i32))
    }
}

/// Observed convergence orders between successive `(h, error)` pairs.
pub fn observed_orders(samples: &[(f64, f64)]) -> Vec<f64> {
    samples
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}
