//! One function per recipe. Library errors that come from the inputs are
//! config failures; the rest are numerical.

use grcalc::calculus::DivergenceRoute;
use grcalc::density::{determinant_weight_check, normalize_weight, restore_weight, transform_density};
use grcalc::integrate::{gauss_check, mass_integral, FaceLabel, MassOptions, Side};
use grcalc::physics::{conserved_current, scalar_stress_energy, stress_energy_divergence, SCALAR_FIELD_SCALE};
use grcalc::{
    Analytic, Backend, ChartMap, Error, Expr, Geometry, RegionSpec, Sampled, Slot, StressEnergyField,
    TensorDensityField, VectorField,
};
use serde_json::json;

use crate::config::{build_chart, config_error, Recipe, Setup};
use crate::report::Report;
use crate::Failure;

/// Points of the target chart at which transformed components are listed.
const TABULATED_POINTS: usize = 5;

pub fn run(setup: &Setup) -> Result<Report, Failure> {
    let recipe = setup.config.recipe;
    let mut report = Report::new(recipe.name());
    if recipe == Recipe::Transform {
        if setup.order.is_some() {
            return Err(Failure::Config("transform works with analytic derivatives only".into()));
        }
        transform(setup, &mut report)?;
        return Ok(report);
    }
    let outcome = match setup.order {
        None => {
            let b = setup.analytic()?;
            report.note(format!("channel analytic, {} probe points", b.probes().len()));
            dispatch(&b, setup, &mut report)
        }
        Some(order) => {
            let b = Sampled::new(setup.grid.clone(), order).map_err(config_error("grid"))?;
            report.note(format!("channel fd{}, lattice {:?}", order.order(), setup.grid.points()));
            dispatch(&b, setup, &mut report)
        }
    };
    match outcome {
        Ok(()) => Ok(report),
        Err(Failure::Numerical(msg)) => {
            report.error(equation(recipe), &msg);
            Ok(report)
        }
        Err(e) => Err(e),
    }
}

fn equation(recipe: Recipe) -> &'static str {
    match recipe {
        Recipe::Christoffel => "7",
        Recipe::Divergence => "8",
        Recipe::AntisymDiv => "25",
        Recipe::DensityCov => "21",
        Recipe::Transform => "12",
        Recipe::Killing => "30",
        Recipe::Current => "35",
        Recipe::GaussCheck => "10",
        Recipe::Mass => "38",
    }
}

/// Sort a library error into config or numerical.
fn classify(e: Error) -> Failure {
    match e {
        Error::Eval(_)
        | Error::NonFinite { .. }
        | Error::DegenerateMetric { .. }
        | Error::SignatureMismatch { .. }
        | Error::OutOfBounds { .. }
        | Error::SingularJacobian { .. }
        | Error::NoTimelikeDirection(_)
        | Error::KillingResidual { .. } => Failure::Numerical(e.to_string()),
        other => Failure::Config(other.to_string()),
    }
}

fn dispatch<B: Backend>(b: &B, setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let geo = Geometry::new(b, &setup.metric).map_err(classify)?;
    let tol = setup.tolerance;
    match setup.config.recipe {
        Recipe::Christoffel => christoffel(&geo, tol, report),
        Recipe::Divergence => divergence(&geo, setup, report),
        Recipe::AntisymDiv => antisym_div(&geo, setup, report),
        Recipe::DensityCov => density_cov(&geo, setup, report),
        Recipe::Killing => killing(&geo, setup, report),
        Recipe::Current => current(&geo, setup, report),
        Recipe::GaussCheck => gauss(&geo, setup, report),
        Recipe::Mass => mass(&geo, setup, report),
        Recipe::Transform => unreachable!("handled before backend selection"),
    }
}

fn sup<B: Backend>(b: &B, s: &B::Scalar) -> Result<f64, Failure> {
    b.sup_norm(s).map_err(classify)
}

fn order_label<B: Backend>(geo: &Geometry<'_, B>) -> String {
    geo.channel().to_string()
}

fn vector<B: Backend>(geo: &Geometry<'_, B>, srcs: Option<&Vec<String>>, what: &'static str) -> Result<VectorField<B::Scalar>, Failure> {
    let srcs = srcs.ok_or_else(|| Failure::Config(format!("fields.{what} is required")))?;
    VectorField::parse(geo.chart(), srcs)
        .and_then(|v| v.lift(geo.backend()))
        .map_err(|e| Failure::Config(format!("fields.{what}: {e}")))
}

fn scalar<B: Backend>(geo: &Geometry<'_, B>, src: Option<&String>, what: &'static str) -> Result<B::Scalar, Failure> {
    let src = src.ok_or_else(|| Failure::Config(format!("fields.{what} is required")))?;
    geo.chart()
        .parse(src)
        .and_then(|e| geo.backend().lift(&e))
        .map_err(|e| Failure::Config(format!("fields.{what}: {e}")))
}

fn christoffel<B: Backend>(geo: &Geometry<'_, B>, tol: f64, report: &mut Report) -> Result<(), Failure> {
    let b = geo.backend();
    let mut nonzero = 0;
    for ((mu, a, c), s) in geo.christoffel().iter() {
        if b.is_structural_zero(s) {
            continue;
        }
        let m = sup(b, s)?;
        if m > 0.0 {
            nonzero += 1;
            report.record("7", "christoffel", json!({ "index": [mu, a, c], "max_abs": m }));
        }
    }
    report.record("7", "christoffel_count", json!({ "nonzero": nonzero }));
    report.note(format!("{nonzero} nonzero connection components (a <= b)"));
    let trace = geo.christoffel_trace();
    let mut worst = 0.0f64;
    for (x, y) in trace.contracted.iter().zip(&trace.log_sqrt_g) {
        worst = worst.max(sup(b, &b.sub(x, y))?);
    }
    report.assert("7", "trace_identity", worst, tol, json!({ "order": order_label(geo) }));
    Ok(())
}

fn divergence<B: Backend>(geo: &Geometry<'_, B>, setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let b = geo.backend();
    let p = vector(geo, setup.config.fields.vector.as_ref(), "vector")?;
    let via_gamma = geo.divergence_vector(&p, DivergenceRoute::Christoffel).map_err(classify)?;
    let via_sqrt = geo.divergence_vector(&p, DivergenceRoute::SqrtG).map_err(classify)?;
    let scale = sup(b, &via_gamma)?;
    let gap = sup(b, &b.sub(&via_gamma, &via_sqrt))? / scale.max(1.0);
    report.assert(
        "8",
        "route_gap",
        gap,
        setup.tolerance,
        json!({ "max_divergence": scale, "order": order_label(geo) }),
    );
    Ok(())
}

fn antisym_div<B: Backend>(geo: &Geometry<'_, B>, setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let b = geo.backend();
    let table = setup
        .config
        .fields
        .antisymmetric
        .as_ref()
        .ok_or_else(|| Failure::Config("fields.antisymmetric is required".into()))?;
    let dim = geo.dim();
    if table.len() != dim || table.iter().any(|row| row.len() != dim) {
        return Err(Failure::Config(format!("fields.antisymmetric must be {dim} x {dim}")));
    }
    let flat: Vec<&String> = table.iter().flatten().collect();
    let f = TensorDensityField::parse(geo.chart(), vec![Slot::Up, Slot::Up], 0.0, &flat)
        .and_then(|f| f.lift(b))
        .map_err(|e| Failure::Config(format!("fields.antisymmetric: {e}")))?;
    let rep = geo.divergence_antisymmetric(&f).map_err(classify)?;
    let mut gap = 0.0f64;
    let mut scale = 0.0f64;
    for (d, full) in rep.divergence.iter().zip(&rep.full) {
        scale = scale.max(sup(b, d)?);
        gap = gap.max(sup(b, &b.sub(d, full))?);
    }
    let vanishing = geo.max_norm(&rep.vanishing_term).map_err(classify)?;
    report.assert(
        "25",
        "route_gap",
        gap / scale.max(1.0),
        setup.tolerance,
        json!({ "max_divergence": scale, "order": order_label(geo) }),
    );
    report.assert("25", "vanishing_term", vanishing, setup.tolerance, json!({}));
    Ok(())
}

fn parse_slots(names: &[String]) -> Result<Vec<Slot>, Failure> {
    names
        .iter()
        .map(|s| match s.as_str() {
            "up" => Ok(Slot::Up),
            "down" => Ok(Slot::Down),
            other => Err(Failure::Config(format!("fields.density.slots: `{other}` is not up or down"))),
        })
        .collect()
}

fn density_field(setup: &Setup) -> Result<Option<TensorDensityField<Expr>>, Failure> {
    let Some(d) = &setup.config.fields.density else {
        return Ok(None);
    };
    let slots = parse_slots(&d.slots)?;
    TensorDensityField::parse(&setup.chart, slots, d.weight, &d.components)
        .map(Some)
        .map_err(|e| Failure::Config(format!("fields.density: {e}")))
}

fn density_cov<B: Backend>(geo: &Geometry<'_, B>, setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let b = geo.backend();
    let weights = setup.config.fields.weights.clone().unwrap_or_else(|| vec![-2.0, -1.0, 1.0, 2.0]);
    for w in weights {
        let power = geo.sqrt_g_power(w);
        let cov = geo.covariant_derivative(&power).map_err(classify)?;
        let m = geo.max_norm(cov.components()).map_err(classify)?;
        // relative to the gradient that the density term cancels
        let mut scale = 0.0f64;
        for axis in 0..geo.dim() {
            scale = scale.max(sup(b, &b.partial(&power.components()[0], axis).map_err(classify)?)?);
        }
        report.assert(
            "21",
            "sqrt_g_power",
            m / scale.max(1.0),
            setup.tolerance,
            json!({ "weight": w, "absolute": m, "gradient": scale, "order": order_label(geo) }),
        );
    }
    if let Some(t) = density_field(setup)? {
        let t = t.lift(b).map_err(classify)?;
        let cov = geo.covariant_derivative(&t).map_err(classify)?;
        for (flat, c) in cov.components().iter().enumerate() {
            report.record(
                "21",
                "covariant_derivative",
                json!({ "index": cov.multi_index(flat), "max_abs": sup(b, c)? }),
            );
        }
    }
    Ok(())
}

fn killing<B: Backend>(geo: &Geometry<'_, B>, setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let k = vector(geo, setup.config.fields.killing.as_ref(), "killing")?;
    let rep = geo.killing_residual(&k).map_err(classify)?;
    report.assert("30", "killing_residual", rep.max_norm, setup.tolerance, json!({ "order": order_label(geo) }));
    report.assert("27", "lie_derivative_mismatch", rep.lie_mismatch, setup.tolerance, json!({}));
    Ok(())
}

fn stress_energy<B: Backend>(geo: &Geometry<'_, B>, setup: &Setup) -> Result<StressEnergyField<B::Scalar>, Failure> {
    let phi = scalar(geo, setup.config.fields.scalar.as_ref(), "scalar")?;
    let scale = setup.config.fields.scalar_scale.unwrap_or(SCALAR_FIELD_SCALE);
    scalar_stress_energy(geo, &phi, scale).map_err(classify)
}

fn current<B: Backend>(geo: &Geometry<'_, B>, setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let b = geo.backend();
    let k = vector(geo, setup.config.fields.killing.as_ref(), "killing")?;
    let t = stress_energy(geo, setup)?;
    let rep = conserved_current(geo, &k, &t, setup.tolerance).map_err(classify)?;
    if let Some(w) = &rep.warning {
        report.note(format!("warning: {w}"));
    }
    let eps_t = geo.max_norm(&stress_energy_divergence(geo, &t).map_err(classify)?).map_err(classify)?;
    let lowered = geo.lower_index(k.field(), 0).map_err(classify)?;
    let mut k_max = 0.0;
    for c in lowered.components() {
        k_max += sup(b, c)?;
    }
    let div = sup(b, &geo.divergence_vector(&rep.current, DivergenceRoute::SqrtG).map_err(classify)?)?;
    report.record(
        "36",
        "current",
        json!({
            "max_abs": geo.max_norm(rep.current.components()).map_err(classify)?,
            "killing_residual": rep.killing_residual,
            "warning": rep.warning,
        }),
    );
    report.assert(
        "35",
        "current_divergence",
        div,
        k_max * eps_t + setup.tolerance,
        json!({
            "killing_term": sup(b, &rep.killing_term)?,
            "conservation_term": sup(b, &rep.conservation_term)?,
            "stress_energy_divergence": eps_t,
            "order": order_label(geo),
        }),
    );
    Ok(())
}

fn region(setup: &Setup, default_slice: bool) -> Result<RegionSpec, Failure> {
    let grid = setup.grid.clone();
    match &setup.config.region {
        Some(r) => {
            let bounds: Vec<(f64, f64)> = r.bounds.iter().map(|b| (b[0], b[1])).collect();
            RegionSpec::from_bounds(grid, &bounds).map_err(config_error("region"))
        }
        None if default_slice => {
            let mut ranges: Vec<(usize, usize)> = grid.points().iter().map(|&n| (0, n - 1)).collect();
            let mid = (grid.points()[0] - 1) / 2;
            ranges[0] = (mid, mid);
            RegionSpec::from_indices(grid, &ranges).map_err(config_error("region"))
        }
        None => Ok(RegionSpec::whole(grid)),
    }
}

fn gauss<B: Backend>(geo: &Geometry<'_, B>, setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let p = vector(geo, setup.config.fields.vector.as_ref(), "vector")?;
    let region = region(setup, false)?;
    let quad = setup.quadrature();
    let rep = gauss_check(geo, &p, &region, quad).map_err(classify)?;
    let faces: Vec<_> = rep
        .faces
        .iter()
        .map(|f| {
            json!({
                "axis": geo.chart().names()[f.face.axis],
                "side": if f.face.side == Side::Lower { "lower" } else { "upper" },
                "label": if f.face.label == FaceLabel::Inner { "inner" } else { "outer" },
                "flux": f.flux,
            })
        })
        .collect();
    report.assert(
        "10",
        "gauss_law",
        rep.residual,
        setup.tolerance,
        json!({
            "lhs": rep.lhs,
            "rhs": rep.rhs,
            "residual": rep.residual,
            "resolution": setup.grid.points(),
            "order": order_label(geo),
            "quadrature": quad.to_string(),
            "faces": faces,
        }),
    );
    Ok(())
}

fn mass<B: Backend>(geo: &Geometry<'_, B>, setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let k = vector(geo, setup.config.fields.killing.as_ref(), "killing")?;
    let t = stress_energy(geo, setup)?;
    let region = region(setup, true)?;
    let defaults = MassOptions::default();
    let m = &setup.config.mass;
    let opts = MassOptions {
        prefactor: m.prefactor.unwrap_or(defaults.prefactor),
        trace_coefficient: m.trace_coefficient.unwrap_or(defaults.trace_coefficient),
        orientation: m.orientation.unwrap_or(defaults.orientation),
        killing_cap: m.killing_cap.unwrap_or(defaults.killing_cap),
        quadrature: setup.quadrature(),
    };
    let rep = mass_integral(geo, &t, &k, &region, &opts).map_err(classify)?;
    report.note(format!("mass {:.12e}", rep.mass));
    report.assert(
        "38",
        "mass_killing_residual",
        rep.killing_residual,
        opts.killing_cap,
        json!({
            "mass": rep.mass,
            "slice_axis": geo.chart().names()[rep.slice_axis],
            "prefactor": opts.prefactor,
            "trace_coefficient": opts.trace_coefficient,
            "orientation": opts.orientation,
            "resolution": setup.grid.points(),
            "order": order_label(geo),
            "quadrature": opts.quadrature.to_string(),
        }),
    );
    Ok(())
}

fn transform(setup: &Setup, report: &mut Report) -> Result<(), Failure> {
    let block = setup
        .config
        .map
        .as_ref()
        .ok_or_else(|| Failure::Config("transform needs a [map] block".into()))?;
    let target = build_chart(&block.axes).map_err(config_error("map.axes"))?;
    let map = match ChartMap::new(setup.chart.clone(), target.clone(), block.forward.as_deref(), &block.inverse) {
        Ok(m) => m,
        Err(e) => {
            return match classify(e) {
                Failure::Numerical(m) => {
                    report.error("12", &m);
                    Ok(())
                }
                Failure::Config(m) => Err(Failure::Config(format!("map: {m}"))),
            }
        }
    };
    report.note("channel analytic".into());

    match determinant_weight_check(&setup.metric, &map) {
        Ok(rep) => {
            report.assert(
                "13",
                "determinant_weight",
                rep.max_relative_deviation,
                setup.tolerance,
                json!({ "points": rep.points }),
            );
        }
        Err(e) => match classify(e) {
            Failure::Numerical(m) => report.error("13", &m),
            other => return Err(other),
        },
    }

    let Some(t) = density_field(setup)? else {
        return Ok(());
    };
    let moved = transform_density(&t, &map).map_err(classify)?;
    let probes = Analytic::new(target.clone());
    for p in probes.probes().iter().take(TABULATED_POINTS) {
        match moved.eval(p) {
            Ok(values) => report.record("12", "transformed", json!({ "point": p, "values": values })),
            Err(e) => report.error("12", &e.to_string()),
        }
    }

    let b = setup.analytic()?;
    let geo = Geometry::new(&b, &setup.metric).map_err(classify)?;
    let round = normalize_weight(&geo, &t)
        .and_then(|n| restore_weight(&geo, &n, t.weight()))
        .map_err(classify)?;
    let mut worst = 0.0f64;
    for (x, y) in round.components().iter().zip(t.components()) {
        worst = worst.max(b.sup_norm(&(x - y)).map_err(classify)? / b.sup_norm(y).map_err(classify)?.max(1.0));
    }
    report.assert("14", "normalize_restore", worst, setup.tolerance, json!({ "weight": t.weight() }));
    Ok(())
}
