use std::path::Path;

use serde_json::{json, Map, Value};

use qia_core::classical::{cc_equivalence_check, cc_state, classical_min_type1, classical_renyi_divergence, classical_rmi, Pmf};
use qia_core::divergences::{mi_variance, mutual_information, petz_divergence, sandwiched_divergence};
use qia_core::exponents::{
    exponent_at_order, exponent_curve, forward_cutoff, linear_rates, moderate_rate, rate_of_order, reverse_cutoff,
    second_order_type1, thresholds, validity_window, Regime,
};
use qia_core::hyptest::{
    build_direct_test, build_sc_test, evaluate_test, min_type1_bounds, neyman_pearson_min_type1, pinched_pair, tilt,
    BracketOpts,
};
use qia_core::io::{format_csv, MatrixJson, StateJson};
use qia_core::linalg::{
    dominates, eig_hermitian, orthogonal, partial_trace, pinch, power_on_support, spectral_projector_geq, HermitianOperator,
    Subsystem,
};
use qia_core::rmi::{check_range, rmi, rmi_derivative, Side};
use qia_core::symmetry::{g, log_g, permutation_unitary, sym_dimension, sym_projector, twirl, universal_state, PermutationAction};

use crate::inputs::{self, copies, hypotheses, level, variant_name, variants};
use crate::{
    ClassicalCommand, Cli, CliError, Command, GlobalOpts, HyptestCommand, LinalgAction, RegimeArg, Result, SideArg,
    SymmetryCommand, TestKind,
};

/// JSON number, with non-finite values as the strings "inf", "-inf" and "nan".
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else if x.is_nan() {
        json!("nan")
    } else if x > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn write_text(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Input(format!("--out: cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(g: &GlobalOpts, v: Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&v).expect("JSON values serialize") + "\n";
    write_text(g.out.as_deref(), &text)
}

fn operator_json(op: &HermitianOperator) -> Value {
    serde_json::to_value(MatrixJson::from_operator(op)).expect("matrices serialize")
}

fn regime(r: RegimeArg) -> Regime {
    match r {
        RegimeArg::Direct => Regime::Direct,
        RegimeArg::StrongConverse => Regime::StrongConverse,
    }
}

fn side(s: SideArg) -> Side {
    match s {
        SideArg::Left => Side::Left,
        SideArg::Right => Side::Right,
        SideArg::Central => Side::Central,
    }
}

fn bracket_opts(g: &GlobalOpts) -> BracketOpts {
    BracketOpts { seed: g.seed, ..BracketOpts::default() }
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let opts = g.optimizer()?;
    match &cli.command {
        Command::Divergence { source, rho, sigma, alpha } => {
            let alpha = *alpha;
            let mut out = Map::new();
            out.insert("alpha".into(), num(alpha));
            let (r, s) = match (rho, sigma) {
                (Some(r), Some(s)) => (inputs::density(r, "rho")?, inputs::operator(s, "sigma")?),
                (None, None) => {
                    let state = inputs::state(source, g.seed)?;
                    out.insert("mutual_information".into(), num(mutual_information(&state)?));
                    out.insert("variance".into(), num(mi_variance(&state)?));
                    (state.state().clone(), state.marginal_product().op().clone())
                }
                _ => return Err(CliError::Input("--rho and --sigma must be given together".into())),
            };
            if alpha.is_finite() {
                out.insert("petz".into(), num(petz_divergence(&r, &s, alpha)?));
            }
            if alpha > 0.0 {
                out.insert("sandwiched".into(), num(sandwiched_divergence(&r, &s, alpha)?));
            }
            emit(g, Value::Object(out))
        }
        Command::Rmi { source, alpha, variant, derivative } => {
            let state = inputs::state(source, g.seed)?;
            let chosen = variants(*variant);
            let single = chosen.len() == 1;
            let mut rows = Vec::new();
            for v in chosen {
                let name = variant_name(v);
                if let Err(e) = check_range(v, *alpha, &opts) {
                    if single {
                        return Err(e.into());
                    }
                    rows.push(json!({ "variant": name, "unsupported": e.to_string() }));
                    continue;
                }
                let r = rmi(&state, *alpha, v, &opts)?;
                let mut row = json!({
                    "variant": name,
                    "value": num(r.value),
                    "iterations": r.iterations,
                    "residual": num(r.residual),
                    "restarts": r.restarts_used,
                });
                if let Some((lo, hi)) = r.bracket {
                    row["bracket"] = json!([num(lo), num(hi)]);
                }
                if let Some(sd) = derivative {
                    row["derivative"] = num(rmi_derivative(&state, *alpha, v, side(*sd), &opts)?);
                }
                rows.push(row);
            }
            emit(g, json!({ "alpha": num(*alpha), "results": rows }))
        }
        Command::Exponents { source, regime: reg, r_min, r_max, steps, bits } => {
            let state = inputs::state(source, g.seed)?;
            let reg = regime(*reg);
            let mi = mutual_information(&state)?;
            let r_max = r_max.unwrap_or(match reg {
                Regime::Direct => mi,
                Regime::StrongConverse => 2.0 * mi,
            });
            if *steps == 0 {
                return Err(CliError::Input("--steps must be positive".into()));
            }
            if !(*r_min >= 0.0 && r_max >= *r_min && r_max.is_finite()) {
                return Err(CliError::Input(format!("--r-min/--r-max must satisfy 0 ≤ r-min ≤ r-max, got {r_min}, {r_max}")));
            }
            let rates = linear_rates(*r_min, r_max, *steps)?;
            let curve = exponent_curve(&state, &rates, reg, &opts)?;
            let unit = if *bits { std::f64::consts::LN_2 } else { 1.0 };
            let mut text = String::from("R,exponent,argmax_s,regime\n");
            for p in &curve.points {
                text.push_str(&format!(
                    "{},{},{},{}\n",
                    format_csv(p.rate / unit),
                    format_csv(p.exponent / unit),
                    format_csv(p.argmax_s),
                    reg.name()
                ));
            }
            write_text(g.out.as_deref(), &text)
        }
        Command::Thresholds { source, windows } => {
            let state = inputs::state(source, g.seed)?;
            let report = thresholds(&state, &opts)?;
            let mut v = serde_json::to_value(&report).expect("reports serialize");
            v["moderate_rate"] = match moderate_rate(&state) {
                Ok(x) => num(x),
                Err(qia_core::Error::DegenerateVariance(_)) => Value::Null,
                Err(e) => return Err(e.into()),
            };
            if *windows {
                for (key, reg) in [("direct_window", Regime::Direct), ("converse_window", Regime::StrongConverse)] {
                    v[key] = serde_json::to_value(validity_window(&state, reg, &opts)?).expect("windows serialize");
                }
            }
            emit(g, v)
        }
        Command::OrderRate { source, s, regime: reg } => {
            let state = inputs::state(source, g.seed)?;
            let r = rate_of_order(&state, *s, regime(*reg), &opts)?;
            emit(
                g,
                json!({
                    "order": num(r.order),
                    "rate": num(r.rate),
                    "derivative": num(r.derivative),
                    "exponent": num(exponent_at_order(&r)),
                    "fallback": r.fallback,
                }),
            )
        }
        Command::Cutoff { source, beta } => {
            let state = inputs::state(source, g.seed)?;
            let (kind, rate) = if *beta < 0.0 {
                ("forward", forward_cutoff(&state, *beta, &opts)?)
            } else if *beta > 0.0 {
                ("reverse", reverse_cutoff(&state, *beta, &opts)?)
            } else {
                return Err(CliError::Input("--beta must be nonzero".into()));
            };
            emit(g, json!({ "beta": num(*beta), "kind": kind, "rate": num(rate) }))
        }
        Command::SecondOrder { source, r } => {
            let state = inputs::state(source, g.seed)?;
            emit(
                g,
                json!({
                    "V": num(mi_variance(&state)?),
                    "moderate_rate": num(moderate_rate(&state)?),
                    "r": num(*r),
                    "type1": num(second_order_type1(&state, *r)?),
                }),
            )
        }
        Command::Hyptest(cmd) => hyptest(g, cmd),
        Command::Symmetry(cmd) => symmetry(g, cmd),
        Command::Classical(cmd) => classical(g, cmd),
        Command::Linalg { action, op, other, p, d_a, d_b, trace_out } => {
            let x = inputs::operator(op, "op")?;
            let second = |what: &str| -> Result<HermitianOperator> {
                let path = other.as_ref().ok_or_else(|| CliError::Input(format!("--other is required for {what}")))?;
                inputs::operator(path, "other")
            };
            let v = match action {
                LinalgAction::Eig => {
                    let s = eig_hermitian(&x)?;
                    json!({ "eigenvalues": s.values.iter().map(|&v| num(v)).collect::<Vec<_>>() })
                }
                LinalgAction::Power => {
                    let p = p.ok_or_else(|| CliError::Input("--p is required for power".into()))?;
                    operator_json(&power_on_support(&x, p)?)
                }
                LinalgAction::PartialTrace => {
                    let (da, db) = match (d_a, d_b) {
                        (Some(a), Some(b)) => (*a, *b),
                        _ => return Err(CliError::Input("--d-a and --d-b are required for partial-trace".into())),
                    };
                    let which = match trace_out.to_ascii_lowercase().as_str() {
                        "a" => Subsystem::A,
                        "b" => Subsystem::B,
                        other => return Err(CliError::Input(format!("--trace-out must be 'a' or 'b', got '{other}'"))),
                    };
                    operator_json(&partial_trace(&x, which, da, db)?)
                }
                LinalgAction::Projector => operator_json(&spectral_projector_geq(&x, &second("projector")?)?),
                LinalgAction::Pinch => operator_json(&pinch(&x, &second("pinch")?)?),
                LinalgAction::Support => {
                    let y = second("support")?;
                    json!({ "dominated": dominates(&x, &y)?, "orthogonal": orthogonal(&x, &y)? })
                }
            };
            emit(g, v)
        }
        Command::Verify { .. } => {
            let outcomes = crate::verify::run_suite();
            let failed = outcomes.iter().filter(|o| !o.pass).count();
            let rows: Vec<Value> = outcomes
                .iter()
                .map(|o| {
                    let mut row = json!({ "name": o.name, "pass": o.pass, "expected": num(o.expected), "tol": num(o.tol) });
                    match &o.value {
                        Ok(v) => row["value"] = num(*v),
                        Err(e) => row["error"] = json!(e),
                    }
                    row
                })
                .collect();
            emit(g, json!({ "passed": outcomes.len() - failed, "failed": failed, "fixtures": rows }))?;
            if failed > 0 {
                return Err(CliError::Failed(format!("{failed} fixture(s) failed")));
            }
            Ok(())
        }
    }
}

fn hyptest(g: &GlobalOpts, cmd: &HyptestCommand) -> Result<()> {
    match cmd {
        HyptestCommand::Bracket { source, n, mu, hyp } => {
            let state = inputs::state(source, g.seed)?;
            let (n, mu) = (copies(*n)?, level(*mu)?);
            let mut rows = Vec::new();
            for h in hypotheses(*hyp) {
                let b = min_type1_bounds(&state, n, mu, h, &bracket_opts(g))?;
                rows.push(json!({ "hypothesis": h.name(), "lower": num(b.lower), "upper": num(b.upper) }));
            }
            emit(g, json!({ "n": n, "mu": num(mu), "brackets": rows }))
        }
        HyptestCommand::Np { rho, sigma, mu } => {
            let r = inputs::density(rho, "rho")?;
            let s = inputs::density(sigma, "sigma")?;
            let np = neyman_pearson_min_type1(&r, &s, level(*mu)?)?;
            emit(
                g,
                json!({
                    "type1": num(np.type1),
                    "type2": num(s.op().trace_product(&np.test)),
                    "threshold": num(np.threshold),
                    "duality_gap": num(np.duality_gap),
                    "test": operator_json(&np.test),
                }),
            )
        }
        HyptestCommand::Build { source, kind, n, rate, s, rate_prime, hyp } => {
            let state = inputs::state(source, g.seed)?;
            let n = copies(*n)?;
            let test = match kind {
                TestKind::Direct => build_direct_test(&state, n, *rate, *s)?,
                TestKind::StrongConverse => build_sc_test(&state, n, *rate, *s, *rate_prime)?,
            };
            let mut rows = Vec::new();
            for h in hypotheses(*hyp) {
                let e = evaluate_test(&state, &test, h, &bracket_opts(g))?;
                rows.push(json!({
                    "hypothesis": h.name(),
                    "type1": num(e.type1),
                    "type2_lower": num(e.type2_lower),
                    "type2_upper": num(e.type2_upper),
                }));
            }
            emit(g, json!({ "n": n, "rate": num(*rate), "type2_target": num((-(n as f64) * rate).exp()), "errors": rows }))
        }
        HyptestCommand::Pinched { source, n, tilt: order } => {
            let state = inputs::state(source, g.seed)?;
            let (p, q) = pinched_pair(&state, copies(*n)?)?;
            let mut v = json!({ "p": p.iter().map(|&x| num(x)).collect::<Vec<_>>(), "q": q.iter().map(|&x| num(x)).collect::<Vec<_>>() });
            if let Some(s) = order {
                v["tilted"] = json!(tilt(&p, &q, *s)?.iter().map(|&x| num(x)).collect::<Vec<_>>());
            }
            emit(g, v)
        }
    }
}

fn symmetry(g_opts: &GlobalOpts, cmd: &SymmetryCommand) -> Result<()> {
    match cmd {
        SymmetryCommand::Info { n, d, perm } => {
            let (n, d) = (copies(*n)?, *d);
            if d == 0 {
                return Err(CliError::Input("--d must be positive".into()));
            }
            let omega = universal_state(n, d)?;
            let spec = omega.state.eig()?;
            let mut v = json!({
                "n": n,
                "d": d,
                "g": g(n, d)?.to_string(),
                "log_g": num(log_g(n, d)?),
                "sym_dimension": sym_dimension(n, d).to_string(),
                "sym_projector_trace": num(sym_projector(n, d)?.trace()),
                "universal_trace": num(omega.state.op().trace()),
                "universal_min_eigenvalue": num(spec.lambda_min()),
            });
            if let Some(p) = perm {
                let action = PermutationAction::new(d, p.clone()).map_err(|e| CliError::Input(format!("--perm: {e}")))?;
                let u = permutation_unitary(&action)?;
                let w = omega.state.matrix();
                v["commutator_norm"] = num((&u * w - w * &u).norm());
            }
            emit(g_opts, v)
        }
        SymmetryCommand::Twirl { op, n, d } => {
            let x = inputs::operator(op, "op")?;
            emit(g_opts, operator_json(&twirl(&x, copies(*n)?, *d)?))
        }
    }
}

fn classical(g: &GlobalOpts, cmd: &ClassicalCommand) -> Result<()> {
    let opts = g.optimizer()?;
    match cmd {
        ClassicalCommand::Divergence { p, q, alpha } => {
            let p = Pmf::new(p.clone()).map_err(|e| CliError::Input(format!("--p: {e}")))?;
            let q = Pmf::new(q.clone()).map_err(|e| CliError::Input(format!("--q: {e}")))?;
            emit(g, json!({ "alpha": num(*alpha), "divergence": num(classical_renyi_divergence(&p, &q, *alpha)?) }))
        }
        ClassicalCommand::Rmi { source, alpha, variant } => {
            let joint = inputs::joint(source)?;
            let chosen = variants(*variant);
            let single = chosen.len() == 1;
            let mut rows = Vec::new();
            for v in chosen {
                let name = variant_name(v);
                if let Err(e) = check_range(v, *alpha, &opts) {
                    if single {
                        return Err(e.into());
                    }
                    rows.push(json!({ "variant": name, "unsupported": e.to_string() }));
                    continue;
                }
                let r = classical_rmi(&joint, *alpha, v, &opts)?;
                rows.push(json!({
                    "variant": name,
                    "value": num(r.value),
                    "q_x": r.q_x.probs().iter().map(|&x| num(x)).collect::<Vec<_>>(),
                    "r_y": r.r_y.probs().iter().map(|&x| num(x)).collect::<Vec<_>>(),
                    "iterations": r.iterations,
                }));
            }
            emit(g, json!({ "alpha": num(*alpha), "results": rows }))
        }
        ClassicalCommand::Embed { source } => {
            let joint = inputs::joint(source)?;
            emit(g, serde_json::to_value(StateJson::from_state(&cc_state(&joint))).expect("states serialize"))
        }
        ClassicalCommand::Bracket { source, n, mu, hyp } => {
            let joint = inputs::joint(source)?;
            let (n, mu) = (copies(*n)?, level(*mu)?);
            let mut rows = Vec::new();
            for h in hypotheses(*hyp) {
                let b = classical_min_type1(&joint, n, mu, h)?;
                rows.push(json!({ "hypothesis": h.name(), "lower": num(b.lower), "upper": num(b.upper), "grid_gap": num(b.grid_gap) }));
            }
            emit(g, json!({ "n": n, "mu": num(mu), "brackets": rows }))
        }
        ClassicalCommand::Check { source, n, mu, hyp } => {
            let joint = inputs::joint(source)?;
            let (n, mu) = (copies(*n)?, level(*mu)?);
            let mut rows = Vec::new();
            for h in hypotheses(*hyp) {
                let r = cc_equivalence_check(&joint, n, mu, h, &bracket_opts(g))?;
                rows.push(json!({
                    "hypothesis": h.name(),
                    "quantum": [num(r.quantum.lower), num(r.quantum.upper)],
                    "classical": [num(r.classical.lower), num(r.classical.upper)],
                }));
            }
            emit(g, json!({ "n": n, "mu": num(mu), "checks": rows }))
        }
    }
}

