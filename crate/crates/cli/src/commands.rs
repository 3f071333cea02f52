use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Value};

use vacpol_core::bounds::{bounds_report, CONDITIONAL_TAG};
use vacpol_core::dispersion::{CutoffModel, ZetaFn};
use vacpol_core::kernel::{b0_zero, b_t_zero_closed, b_zeta_zero, tabulate_kernel, KernelTable, Method};
use vacpol_core::output::{Column, Document, Format};
use vacpol_core::response::{
    build_kernel, far_field, fixed_point_screen, screen_on, screening_grid, smooth_kernel_grid, ResponseKernel,
    ResponseResult, SMOOTH_TABLE_POINTS,
};
use vacpol_core::sources::RadialDensity;
use vacpol_core::Error;

use crate::args::*;
use crate::validation::{self, Options, Tier};

/// A failed command: exit code and message for standard error.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_SELFTEST: i32 = 3;

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_numerical() || matches!(e, Error::Precondition(_)) {
            EXIT_NUMERICAL
        } else {
            EXIT_USAGE
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn parse_coefficients(s: &str) -> Outcome<Vec<f64>> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|_| Failure::usage(format!("bad coefficient '{c}'"))))
        .collect()
}

/// `power:P` gives `x^P`; `poly:C1,C2,C3` gives `C1 x + C2 x² + C3 x³`.
fn custom_zeta(spec: &str) -> Outcome<ZetaFn> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Failure::usage(format!("profile '{spec}' is not power:P or poly:C1,C2,C3")))?;
    match kind {
        "power" => {
            let p = parse_coefficients(rest)?;
            let p = match p.as_slice() {
                [p] if *p > 0.0 => *p,
                _ => return Err(Failure::usage("power profile needs one positive exponent")),
            };
            Ok(ZetaFn::new(
                spec,
                move |x: f64| x.powf(p),
                move |x: f64| p * x.powf(p - 1.0),
                move |x: f64| p * (p - 1.0) * x.powf(p - 2.0),
                move |x: f64| p * (p - 1.0) * (p - 2.0) * x.powf(p - 3.0),
            ))
        }
        "poly" => {
            let c = parse_coefficients(rest)?;
            let c: [f64; 3] = c
                .try_into()
                .map_err(|_| Failure::usage("poly profile needs three coefficients"))?;
            Ok(ZetaFn::new(
                spec,
                move |x: f64| ((c[2] * x + c[1]) * x + c[0]) * x,
                move |x: f64| (3.0 * c[2] * x + 2.0 * c[1]) * x + c[0],
                move |x: f64| 6.0 * c[2] * x + 2.0 * c[1],
                move |_| 6.0 * c[2],
            ))
        }
        other => Err(Failure::usage(format!("unknown profile family '{other}'"))),
    }
}

pub fn build_model(args: &ModelArgs, lambda: f64) -> Outcome<CutoffModel> {
    match args.model {
        ModelKind::Sharp => Ok(CutoffModel::sharp(lambda)?),
        ModelKind::SmoothLinear => Ok(CutoffModel::smooth_linear(lambda)?),
        ModelKind::SmoothCustom => {
            let spec = args
                .zeta
                .as_deref()
                .ok_or_else(|| Failure::usage("smooth-custom needs --zeta"))?;
            let m = CutoffModel::smooth_custom(lambda, Arc::new(custom_zeta(spec)?), args.epsilon)?;
            let (m, report) = m.validate();
            if !report.passed {
                let worst = report.worst.map(|v| format!("{} at x = {}: {}", v.check, v.x, v.detail));
                return Err(Failure::usage(format!(
                    "cut-off profile rejected: {}",
                    worst.unwrap_or_default()
                )));
            }
            Ok(m)
        }
    }
}

fn emit(doc: &Document, out: &OutputArgs) -> Outcome<()> {
    let format = match out.format {
        FormatArg::Csv => Format::Csv,
        FormatArg::Structured => Format::Structured,
    };
    match &out.out {
        Some(path) => doc.write(path, format)?,
        None => print!("{}", doc.render(format)?),
    }
    Ok(())
}

fn config<T: serde::Serialize>(command: &str, args: &T) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "args": serde_json::to_value(args).unwrap_or(Value::Null),
    })
}

/// Per-point diagnostics of an aggregated failure.
fn describe(e: &Error, grid: &[f64], label: &str) -> String {
    match e {
        Error::Aggregate(list) => {
            let mut s = format!("{} of {} points failed:", list.len(), grid.len());
            for (i, err) in list {
                let at = grid.get(*i).copied().unwrap_or(f64::NAN);
                s.push_str(&format!("\n  point {i} ({label} = {at}): {err}"));
            }
            s
        }
        other => other.to_string(),
    }
}

fn method_for(model: &CutoffModel, choice: Option<Evaluation>) -> Outcome<Method> {
    let m = match choice {
        None if model.is_sharp() => Method::ClosedForm,
        None => Method::Quadrature2D,
        Some(Evaluation::ClosedForm) => Method::ClosedForm,
        Some(Evaluation::Quadrature1d) => Method::Quadrature1D,
        Some(Evaluation::Quadrature2d) => Method::Quadrature2D,
        Some(Evaluation::Oracle3d) => Method::Oracle3D,
    };
    let ok = match m {
        Method::ClosedForm | Method::Oracle3D => model.is_sharp(),
        Method::Quadrature2D => !model.is_sharp(),
        Method::Quadrature1D => true,
    };
    if ok {
        Ok(m)
    } else {
        Err(Failure::usage(format!(
            "evaluation {} is not available for this cut-off model",
            m.as_str()
        )))
    }
}

fn check_tol(tol: f64) -> Outcome<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("tolerance must be positive, got {tol}")))
    }
}

pub fn kernel_table(args: &KernelTableArgs) -> Outcome<()> {
    check_tol(args.tol)?;
    let model = build_model(&args.model, args.lambda)?;
    let method = method_for(&model, args.evaluation)?;
    let grid = args.kgrid.values();
    let table = tabulate_kernel(&model, &grid, method, args.tol).map_err(|e| Failure {
        message: describe(&e, &grid, "k"),
        ..Failure::from(e)
    })?;
    let mut doc = Document::new("kernel-table", Column::numbers("k", grid));
    doc.model = serde_json::to_value(model.spec()).unwrap_or(Value::Null);
    doc.lambda = Some(args.lambda);
    doc.config = config("kernel-table", args);
    doc.tolerances = json!({
        "requested_abs": args.tol,
        "max_achieved_abs": table.max_error(),
    });
    let n = table.len();
    doc.columns.push(Column::numbers("B", table.values));
    doc.columns.push(Column::numbers("tol", table.tol));
    doc.columns.push(Column::text("method", vec![method.as_str().to_string(); n]));
    emit(&doc, &args.output)
}

pub fn build_source(args: &SourceArgs) -> Outcome<RadialDensity> {
    let z = args.charge.unwrap_or(1.0);
    let nu = match args.source.as_str() {
        "gaussian" => RadialDensity::gaussian(z, args.width)?,
        "exp" => RadialDensity::exponential(z, args.width)?,
        "ball" => RadialDensity::uniform_ball(z, args.width)?,
        "none" => RadialDensity::gaussian(0.0, args.width)?,
        s => match s.strip_prefix("table:") {
            Some(path) => RadialDensity::load_table(Path::new(path), args.charge)?,
            None => {
                return Err(Failure::usage(format!(
                    "unknown source '{s}' (gaussian, exp, ball, table:PATH, none)"
                )))
            }
        },
    };
    Ok(nu)
}

/// Kernel table used by the screening commands: closed form on the screening
/// grid for the sharp cut-off, a dense quadrature table otherwise.
pub fn response_table(model: &CutoffModel) -> Outcome<(KernelTable, f64)> {
    if model.is_sharp() {
        let tol = 1e-13;
        Ok((tabulate_kernel(model, &screening_grid(model, 512), Method::ClosedForm, tol)?, tol))
    } else {
        let tol = 1e-12;
        let grid = smooth_kernel_grid(model.lambda(), SMOOTH_TABLE_POINTS);
        Ok((tabulate_kernel(model, &grid, Method::Quadrature2D, tol)?, tol))
    }
}

fn solve(args: &ResponseArgs, kernel: &ResponseKernel, nu: &RadialDensity, k_grid: &[f64]) -> Outcome<(ResponseResult, Value)> {
    let direct = screen_on(kernel, nu, k_grid)?;
    match args.method {
        SolveMethod::Direct => Ok((direct, Value::Null)),
        SolveMethod::FixedPoint => {
            let (fp, trace) = fixed_point_screen(kernel, nu, k_grid, args.tol, args.max_iter)?;
            let gap = fp
                .rho_vac_hat
                .iter()
                .zip(&direct.rho_vac_hat)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let info = json!({
                "iterations": trace.iterations,
                "contraction": trace.contraction,
                "last_difference": trace.differences.last().copied().unwrap_or(0.0),
                "sup_gap_to_direct": gap,
            });
            Ok((fp, info))
        }
    }
}

pub fn response(args: &ResponseArgs) -> Outcome<()> {
    check_tol(args.tol)?;
    if !(args.alpha >= 0.0 && args.alpha.is_finite()) {
        return Err(Failure::usage(format!("alpha must be non-negative, got {}", args.alpha)));
    }
    let model = build_model(&args.model, args.lambda)?;
    let nu = build_source(&args.source)?;
    let rgrid = args.rgrid.values();
    let radii = args.far_field.values();
    if rgrid.iter().chain(&radii).any(|r| !(*r > 0.0)) {
        return Err(Failure::usage("radii must be positive"));
    }
    let (table, table_tol) = response_table(&model)?;
    let kernel = build_kernel(&model, args.alpha, &table)?;
    let k_grid = match &args.kgrid {
        Some(g) => g.values(),
        None => screening_grid(&model, 512),
    };
    let (result, fixed_point) = solve(args, &kernel, &nu, &k_grid)?;
    let profile = result.rho_vac_profile(&rgrid).map_err(|e| Failure {
        message: describe(&e, &rgrid, "r"),
        ..Failure::from(e)
    })?;
    let r_max = (10.0 * nu.extent()).max(60.0);
    let charge = result.screened_charge(r_max, args.tol.max(1e-12))?;
    let samples = far_field(&result, &radii, args.tol.max(1e-12))?;
    let far: Vec<Value> = samples
        .iter()
        .map(|s| {
            json!({
                "r": s.r,
                "r_phi": s.r_phi,
                "r_phi_over_alpha": if args.alpha > 0.0 { json!(s.r_phi / args.alpha) } else { Value::Null },
                "inside_source": s.inside_source,
            })
        })
        .collect();

    let mut doc = Document::new("response", Column::numbers("r", rgrid));
    doc.model = serde_json::to_value(model.spec()).unwrap_or(Value::Null);
    doc.alpha = Some(args.alpha);
    doc.lambda = Some(args.lambda);
    doc.config = config("response", args);
    doc.tolerances = json!({
        "kernel_table_abs": table_tol,
        "kernel_table_max_achieved": table.max_error(),
        "real_space_abs": args.tol.max(1e-12),
        "fixed_point": args.tol,
    });
    doc.summary = json!({
        "source": serde_json::to_value(nu.spec()).unwrap_or(Value::Null),
        "b_zero": result.b_zero,
        "observed_charge": result.observed_charge,
        "alpha_phys": result.alpha_phys,
        "identity_residual": result.identity_residual,
        "real_space_screened_charge": charge.value,
        "real_space_screened_charge_error": charge.error,
        "far_field": far,
        "fixed_point": fixed_point,
    });
    doc.columns.push(Column::numbers("rho_vac", profile));
    emit(&doc, &args.output)
}

pub fn renormalize(args: &RenormalizeArgs) -> Outcome<()> {
    check_tol(args.tol)?;
    if !(args.alpha >= 0.0 && args.alpha.is_finite()) {
        return Err(Failure::usage(format!("alpha must be non-negative, got {}", args.alpha)));
    }
    let lambdas = args.lambda.values();
    let mut b0 = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let model = build_model(&args.model, l)?;
        let v = match args.model.model {
            ModelKind::Sharp => b0_zero(l)?,
            ModelKind::SmoothLinear if l > 1.0 => b_t_zero_closed(l)?,
            _ => b_zeta_zero(&model, args.tol)?.value,
        };
        b0.push(v);
    }
    let a = args.alpha;
    let alpha_phys: Vec<f64> = b0.iter().map(|b| a / (1.0 + a * b)).collect();
    let running: Vec<f64> = lambdas.iter().map(|l| 2.0 / (3.0 * PI) * a * l.ln()).collect();
    let mut doc = Document::new("renormalize", Column::numbers("lambda", lambdas));
    doc.model = json!({ "kind": args.model.model, "zeta": args.model.zeta });
    doc.alpha = Some(a);
    doc.config = config("renormalize", args);
    doc.tolerances = json!({ "b_zero_abs": args.tol });
    doc.columns.push(Column::numbers("B0", b0));
    doc.columns.push(Column::numbers("alpha_phys", alpha_phys));
    doc.columns.push(Column::numbers("log_running", running));
    emit(&doc, &args.output)
}

pub fn bounds(args: &BoundsArgs) -> Outcome<()> {
    if args.envelopes && args.constant_c.is_none() {
        return Err(Failure::usage(
            "the ionization envelopes need --constant-C (the constant is not known and must be supplied)",
        ));
    }
    let nu = build_source(&args.source)?;
    let rep = bounds_report(args.q, args.alpha, args.lambda, &nu, args.constant_c)?;
    let mut names: Vec<String> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut row = |n: &str, v: f64, note: &str| {
        names.push(n.into());
        values.push(v);
        notes.push(note.into());
    };
    row("q", rep.q, "");
    row("alpha", rep.alpha, "");
    row("lambda", rep.lambda, "");
    row("coulomb_self_energy", rep.coulomb_self_energy, "");
    row("energy_lower", rep.energy_lower, "");
    row("energy_upper", rep.energy_upper, "");
    row("theta", rep.theta, "");
    let sufficient = if rep.sufficient_condition {
        "holds: unpolarized vacuum charge"
    } else {
        "fails: theta >= 1, no gap bound"
    };
    row("gap_lower", rep.gap_lower, sufficient);
    row("sufficient_condition", if rep.sufficient_condition { 1.0 } else { 0.0 }, sufficient);
    match &rep.i_lambda {
        Some(e) => {
            row("i_lambda_b_zero", e.b_zero, "");
            row("i_lambda_from_b_zero", e.from_b_zero, "");
            row("i_lambda_log_majorant", e.log_majorant, "");
        }
        None => row("i_lambda_log_majorant", f64::NAN, "undefined for these parameters"),
    }
    if let Some(e) = &rep.ionization {
        row("constant_c", e.constant_c, CONDITIONAL_TAG);
        row("qm_lower", e.qm_lower, CONDITIONAL_TAG);
        row("qm_upper_bound", e.qm_upper_bound, CONDITIONAL_TAG);
    }
    let mut doc = Document::new("bounds", Column::text("quantity", names));
    // Only the I_Λ envelope depends on a model: the linear profile.
    doc.model = json!({ "kind": "SmoothLinear", "lambda": args.lambda });
    doc.alpha = Some(args.alpha);
    doc.lambda = Some(args.lambda);
    doc.config = config("bounds", args);
    doc.tolerances = json!({ "pairing": { "abs": 1e-12, "rel": 1e-11 } });
    doc.summary = serde_json::to_value(&rep).unwrap_or(Value::Null);
    doc.columns.push(Column::numbers("value", values));
    doc.columns.push(Column::text("note", notes));
    emit(&doc, &args.output)
}

pub fn selftest(args: &SelftestArgs) -> Outcome<()> {
    let tier = match args.tier {
        TierArg::Fast => Tier::Fast,
        TierArg::Full => Tier::Full,
    };
    let opts = Options {
        corrupt_sign: args.corrupt_sign,
        binary: std::env::current_exe().ok(),
    };
    let mut reports = Vec::new();
    for c in validation::criteria(tier) {
        let r = validation::run(c.id, &opts);
        eprintln!("{}", r.line());
        reports.push(r);
    }
    let failed: Vec<&validation::Report> = reports.iter().filter(|r| !r.passed).collect();
    let summary = json!({
        "tier": args.tier,
        "passed": failed.is_empty(),
        "criteria": reports,
    });
    let text = serde_json::to_string_pretty(&summary).unwrap_or_default() + "\n";
    match &args.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::from(Error::from(e)))?,
        None => print!("{text}"),
    }
    if failed.is_empty() {
        return Ok(());
    }
    let names: Vec<String> = failed
        .iter()
        .map(|r| {
            format!(
                "criterion {} ({}): {}",
                r.id,
                r.title,
                r.failing_invariant().unwrap_or_default()
            )
        })
        .collect();
    Err(Failure {
        code: EXIT_SELFTEST,
        message: format!("selftest failed: {}", names.join("; ")),
    })
}
