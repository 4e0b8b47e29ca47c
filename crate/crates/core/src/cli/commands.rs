use serde::Serialize;
use serde_json::{json, Value};

use super::output::{Csv, Output, EXIT_INSUFFICIENT, EXIT_PASS, EXIT_STAT_FAIL};
use super::{load, Command, Common, LimitKind, Loaded, Sampling, SweepKind};
use crate::error::{Error, Result};
use crate::event::ConditioningEvent;
use crate::limit_laws::{
    corollary1_mrca, corollary2_mrca, event_predictor, intermediate_reduced_limit, survival_predictor,
    theorem1_limit, theorem2_limit, yaglom_cdf, yaglom_laplace,
};
use crate::models::{load_model_spec, make_lifetime, make_offspring, Model, ModelSpec};
use crate::renewal::{check_tail_condition, neglig_sweep, renewal_function};
use crate::schedule::Schedule;
use crate::series::{
    default_order, derivative_ratio, difference_ratio, local_limit_sweep, pgf_recursion, survival_curve,
};
use crate::simulator::{run_conditioned, with_jobs, ConditionedSample, InitialState, SimConfig};
use crate::stats::{compare_pmf, compare_proportion, ks_exponential, summarize_sweep, EmpiricalDist, SweepRow, TolerancePolicy};

pub(super) fn run(command: Command) -> Result<i32> {
    match command {
        Command::Exact { common, t, order, k_max } => exact(&common, t, order, k_max),
        Command::Simulate { common, sampling, t, event, phi, a, s_grid, x_grid, y_process } => {
            let event = resolve_event(&event, phi, a)?;
            simulate(&common, &sampling, t, event, s_grid.0, x_grid.0, y_process)
        }
        Command::Limits { common, theorem, j_max, y, x, a, lambda } => {
            limits(&common, theorem, j_max, &y.0, &x.0, &a.0, &lambda.0)
        }
        Command::VerifyTheorem1 { common, sampling, t, phi, y_grid, j_max, offset_factor, min_accepted } => {
            verify_small_event(&common, &sampling, t, phi, &y_grid.0, j_max, offset_factor, min_accepted)
        }
        Command::VerifyTheorem2 { common, sampling, t, a, x_grid, j_max, min_accepted } => {
            verify_linear_event(&common, &sampling, t, a, &x_grid.0, j_max, min_accepted)
        }
        Command::VerifyYaglom { common, sampling, t, y_process, ks_threshold, min_accepted } => {
            verify_yaglom(&common, &sampling, t, y_process, ks_threshold, min_accepted)
        }
        Command::CheckConditions { common, phi, t_grid, renewal_t } => check_conditions(&common, phi, &t_grid.0, renewal_t),
        Command::Sweep { common, kind, t_grid, psi, k, c, event, sampling } => {
            sweep(&common, kind, &t_grid.0, psi, k, c, &event, &sampling)
        }
    }
}

fn resolve_event(name: &str, phi: Schedule, a: Option<f64>) -> Result<ConditioningEvent> {
    match name {
        "small" => Ok(ConditioningEvent::SmallPopulation { phi }),
        "linear" => {
            let a = match (a, phi) {
                (Some(a), _) => a,
                (None, Schedule::Lin(a)) => a,
                _ => return Err(Error::Precondition("linear event needs --a or --phi lin:<a>".into())),
            };
            Ok(ConditioningEvent::Linear { a })
        }
        other => other.parse(),
    }
}

fn model_json(spec: &ModelSpec, model: &Model) -> Value {
    json!({ "spec": spec, "constants": model.constants() })
}

fn sim_config(sampling: &Sampling, t: f64, event: ConditioningEvent) -> SimConfig {
    let mut config = SimConfig::new(t, event, sampling.replicates, sampling.seed);
    config.cap = sampling.cap;
    config
}

fn run_sample(common: &Common, model: &Model, config: &SimConfig) -> Result<ConditionedSample> {
    with_jobs(common.jobs, || run_conditioned(model, config))?
}

fn sample_json(sample: &ConditionedSample, model: &Model) -> Result<Value> {
    let predicted = match sample.config.initial {
        InitialState::Single => Some(event_predictor(&model.constants(), sample.config.t, &sample.config.event)),
        InitialState::Offspring => None,
    };
    let rate = sample.acceptance_rate();
    Ok(json!({
        "config": sample.config,
        "max_population": sample.max_population,
        "n_total": sample.n_total,
        "n_accepted": sample.n_accepted,
        "n_capped": sample.n_capped,
        "acceptance_rate": rate,
        "wilson_ci": sample.acceptance_interval(0.95)?,
        "predicted_rate": predicted,
        "rate_ratio": predicted.map(|p| rate / p),
    }))
}

fn rows_csv(sample: &ConditionedSample) -> Csv {
    let mut header = vec!["replicate".to_string(), "Z_t".to_string(), "d_t".to_string()];
    header.extend(sample.config.s_grid.iter().map(|s| format!("Z_s_t@{s}")));
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&refs);
    for r in &sample.records {
        let o = &r.observables;
        let mut cells = vec![r.replicate.to_string(), o.z_t.to_string(), o.d.map_or(String::new(), |d| d.to_string())];
        cells.extend(o.z_reduced.iter().map(u64::to_string));
        csv.row(cells);
    }
    csv
}

fn histogram(dist: &EmpiricalDist) -> Value {
    Value::Array(dist.support().map(|(k, c)| json!([k, c])).collect())
}

fn exact(common: &Common, t: usize, order: Option<usize>, k_max: Option<usize>) -> Result<i32> {
    let Loaded { spec, model, output } = load(common)?;
    model.require_lattice("exact")?;
    let order = order.unwrap_or_else(|| default_order(&model, t));
    let series = pgf_recursion(&model, t, order)?;
    let survival = survival_curve(&model, t)?[t];
    let mut csv = Csv::new(&["t", "k", "prob", "tail_mass"]);
    let tail = series.tail_mass().max(0.0);
    for (k, p) in series.coeffs().iter().enumerate().take(k_max.map_or(order + 1, |m| m.min(order) + 1)) {
        csv.row([t.to_string(), k.to_string(), p.to_string(), tail.to_string()]);
    }
    output.csv("exact.csv", &csv)?;
    output.summary(&json!({
        "command": "exact",
        "model": model_json(&spec, &model),
        "t": t,
        "order": order,
        "tail_mass": tail,
        "survival_prob": survival,
        "survival_predictor": survival_predictor(&model.constants(), t as f64),
        "mean": series.mean(),
    }))?;
    Ok(EXIT_PASS)
}

fn simulate(
    common: &Common,
    sampling: &Sampling,
    t: f64,
    event: ConditioningEvent,
    s_grid: Vec<f64>,
    x_grid: Vec<f64>,
    y_process: bool,
) -> Result<i32> {
    let Loaded { spec, model, output } = load(common)?;
    let initial = if y_process { InitialState::Offspring } else { InitialState::Single };
    let config = sim_config(sampling, t, event).with_s_grid(s_grid).with_x_grid(x_grid).with_initial(initial);
    let sample = run_sample(common, &model, &config)?;
    output.csv("rows.csv", &rows_csv(&sample))?;
    let reduced: Vec<Value> = config
        .s_grid
        .iter()
        .enumerate()
        .map(|(i, s)| json!({ "s": s, "counts": histogram(&sample.reduced_dist(i)) }))
        .collect();
    let depths = sample.mrca_depths();
    let mean_depth = (!depths.is_empty()).then(|| depths.iter().sum::<f64>() / depths.len() as f64);
    output.summary(&json!({
        "command": "simulate",
        "model": model_json(&spec, &model),
        "sample": sample_json(&sample, &model)?,
        "histograms": {
            "z_t": histogram(&sample.population_dist()),
            "z_reduced": reduced,
        },
        "mrca": { "count": depths.len(), "mean_depth": mean_depth },
    }))?;
    Ok(if sample.n_accepted == 0 { EXIT_INSUFFICIENT } else { EXIT_PASS })
}

#[derive(Serialize)]
struct LimitRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    j: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lambda: Option<f64>,
    value: f64,
}

fn limits(common: &Common, kind: LimitKind, j_max: usize, ys: &[f64], xs: &[f64], as_: &[f64], lambdas: &[f64]) -> Result<i32> {
    let output = Output::new(common.out.clone())?;
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Precondition(what.to_string())) };
    check(j_max >= 1, "j range must include j = 1")?;
    let row = |j, y, x, a, lambda, value| LimitRow { j, y, x, a, lambda, value };
    let mut rows = Vec::new();
    let (name, header): (&str, &[&str]) = match kind {
        LimitKind::T1 => {
            check(ys.iter().all(|y| *y > 0.0), "y must be positive")?;
            for &y in ys {
                for j in 1..=j_max {
                    rows.push(row(Some(j), Some(y), None, None, None, theorem1_limit(j, y)));
                }
            }
            ("1", &["j", "y", "value"])
        }
        LimitKind::C1 => {
            check(ys.iter().all(|y| *y > 0.0), "y must be positive")?;
            rows.extend(ys.iter().map(|&y| row(None, Some(y), None, None, None, corollary1_mrca(y))));
            ("c1", &["y", "value"])
        }
        LimitKind::T2 => {
            check(xs.iter().all(|x| *x > 0.0 && *x < 1.0), "x must lie in (0, 1)")?;
            check(as_.iter().all(|a| *a > 0.0), "a must be positive")?;
            for &a in as_ {
                for &x in xs {
                    for j in 1..=j_max {
                        rows.push(row(Some(j), None, Some(x), Some(a), None, theorem2_limit(j, x, a)));
                    }
                }
            }
            ("2", &["j", "x", "a", "value"])
        }
        LimitKind::C2 => {
            check(xs.iter().all(|x| *x > 0.0 && *x <= 1.0), "x must lie in (0, 1]")?;
            check(as_.iter().all(|a| *a > 0.0), "a must be positive")?;
            for &a in as_ {
                rows.extend(xs.iter().map(|&x| row(None, None, Some(x), Some(a), None, corollary2_mrca(x, a))));
            }
            ("c2", &["x", "a", "value"])
        }
        LimitKind::Yaglom => {
            check(lambdas.iter().all(|l| *l >= 0.0), "lambda must be nonnegative")?;
            rows.extend(lambdas.iter().map(|&l| row(None, None, None, None, Some(l), yaglom_laplace(l))));
            ("yaglom", &["lambda", "value"])
        }
        LimitKind::Intermediate => {
            check(xs.iter().all(|x| *x > 0.0 && *x < 1.0), "x must lie in (0, 1)")?;
            for &x in xs {
                for j in 1..=j_max {
                    rows.push(row(Some(j), None, Some(x), None, None, intermediate_reduced_limit(j, x)));
                }
            }
            ("intermediate", &["j", "x", "value"])
        }
    };
    let mut csv = Csv::new(header);
    for r in &rows {
        let mut cells = Vec::new();
        for h in header {
            cells.push(match *h {
                "j" => r.j.map_or(String::new(), |v| v.to_string()),
                "y" => r.y.map_or(String::new(), |v| v.to_string()),
                "x" => r.x.map_or(String::new(), |v| v.to_string()),
                "a" => r.a.map_or(String::new(), |v| v.to_string()),
                "lambda" => r.lambda.map_or(String::new(), |v| v.to_string()),
                _ => r.value.to_string(),
            });
        }
        csv.row(cells);
    }
    output.csv(&format!("limits_{name}.csv"), &csv)?;
    let extra = (kind == LimitKind::Yaglom).then(|| {
        let cdf: Vec<Value> = lambdas.iter().map(|&z| json!({ "z": z, "cdf": yaglom_cdf(z) })).collect();
        cdf
    });
    output.summary(&json!({ "command": "limits", "theorem": name, "values": rows, "yaglom_cdf": extra }))?;
    Ok(EXIT_PASS)
}

fn status_code(pass: bool, enough: bool) -> (i32, &'static str) {
    match (enough, pass) {
        (false, _) => (EXIT_INSUFFICIENT, "insufficient"),
        (true, true) => (EXIT_PASS, "pass"),
        (true, false) => (EXIT_STAT_FAIL, "fail"),
    }
}

#[allow(clippy::too_many_arguments)]
fn verify_small_event(
    common: &Common,
    sampling: &Sampling,
    t: f64,
    phi: Schedule,
    y_grid: &[f64],
    j_max: usize,
    offset_factor: f64,
    min_accepted: u64,
) -> Result<i32> {
    let Loaded { spec, model, output } = load(common)?;
    if !model.lifetime.is_lattice() || model.oracle_mode {
        return Err(Error::Unsupported(
            "verify-theorem1 requires a non-degenerate lattice lifetime law with maximal step 1 \
             (a lattice law, not an oracle model)"
                .into(),
        ));
    }
    if !(phi.is_sublinear() && phi.is_increasing()) {
        return Err(Error::Schedule(format!("{phi} must be increasing and o(t)")));
    }
    let tail_grid: Vec<f64> = (0..6).map(|i| t * f64::powi(2.0, i)).collect();
    let tail = check_tail_condition(&model, phi, &tail_grid)?;
    if !tail.passes() {
        return Err(Error::Unsupported(format!("lifetime tail condition fails for {phi}")));
    }
    if j_max == 0 || y_grid.is_empty() || y_grid.iter().any(|y| *y <= 0.0) {
        return Err(Error::Precondition("need j_max >= 1 and positive y values".into()));
    }
    let p = phi.eval(t);
    let s_grid: Vec<f64> = y_grid.iter().map(|y| t - offset_factor * y * p).collect();
    if let Some(s) = s_grid.iter().find(|s| **s <= 0.0 || **s > t) {
        return Err(Error::Precondition(format!("observation time {s} outside (0, t]")));
    }
    let event = ConditioningEvent::SmallPopulation { phi };
    let config = sim_config(sampling, t, event).with_s_grid(s_grid.clone());
    let sample = run_sample(common, &model, &config)?;
    output.csv("rows.csv", &rows_csv(&sample))?;
    let enough = sample.n_accepted >= min_accepted.max(1);
    let mut checks = Vec::new();
    let mut pass = true;
    if sample.n_accepted > 0 {
        for (i, &y) in y_grid.iter().enumerate() {
            let cells: Vec<(u64, f64)> = (1..=j_max).map(|j| (j as u64, theorem1_limit(j, y))).collect();
            let reduced = compare_pmf(&sample.reduced_dist(i), &cells, TolerancePolicy::DESK)?;
            let within = sample.mrca_depths().iter().filter(|d| **d <= offset_factor * y * p).count() as u64;
            let mrca = compare_proportion(within, sample.n_accepted, corollary1_mrca(y), TolerancePolicy::DESK)?;
            pass &= reduced.pass && mrca.pass;
            checks.push(json!({ "y": y, "s": s_grid[i], "reduced": reduced, "mrca": mrca }));
        }
    }
    let (code, status) = status_code(pass, enough);
    output.summary(&json!({
        "command": "verify-theorem1",
        "model": model_json(&spec, &model),
        "phi": phi,
        "phi_t": p,
        "offset_factor": offset_factor,
        "min_accepted": min_accepted,
        "tail_condition": tail,
        "sample": sample_json(&sample, &model)?,
        "checks": checks,
        "status": status,
    }))?;
    Ok(code)
}

fn verify_linear_event(
    common: &Common,
    sampling: &Sampling,
    t: f64,
    a: f64,
    x_grid: &[f64],
    j_max: usize,
    min_accepted: u64,
) -> Result<i32> {
    let Loaded { spec, model, output } = load(common)?;
    if model.lifetime.is_lattice() {
        return Err(Error::Unsupported("verify-theorem2 requires a non-lattice lifetime law".into()));
    }
    if !(a > 0.0) || j_max == 0 || x_grid.is_empty() || x_grid.iter().any(|x| !(*x > 0.0 && *x < 1.0)) {
        return Err(Error::Precondition("need a > 0, j_max >= 1 and x values in (0, 1)".into()));
    }
    let event = ConditioningEvent::Linear { a };
    let max_population = event.max_population(model.b(), t);
    let s_grid: Vec<f64> = x_grid.iter().map(|x| x * t).collect();
    // one survival-conditioned run serves both the linear event and the
    // unconditioned-size ratios
    let config = sim_config(sampling, t, ConditioningEvent::Survival).with_s_grid(s_grid.clone());
    let survived = run_sample(common, &model, &config)?;
    let mut linear = survived.clone();
    linear.config.event = event;
    linear.max_population = max_population;
    linear.records.retain(|r| event.accepts(r.observables.z_t, max_population));
    linear.n_accepted = linear.records.len() as u64;
    output.csv("rows.csv", &rows_csv(&linear))?;

    let enough = linear.n_accepted >= min_accepted.max(1);
    let mut checks = Vec::new();
    let mut pass = true;
    if linear.n_accepted > 0 {
        for (i, &x) in x_grid.iter().enumerate() {
            let cells: Vec<(u64, f64)> = (1..=j_max).map(|j| (j as u64, theorem2_limit(j, x, a))).collect();
            let reduced = compare_pmf(&linear.reduced_dist(i), &cells, TolerancePolicy::DESK)?;
            let within = linear.mrca_depths().iter().filter(|d| **d <= x * t).count() as u64;
            let mrca = compare_proportion(within, linear.n_accepted, corollary2_mrca(x, a), TolerancePolicy::DESK)?;
            let cells: Vec<(u64, f64)> = (1..=j_max).map(|j| (j as u64, intermediate_reduced_limit(j, x))).collect();
            let intermediate = compare_pmf(&survived.reduced_dist(i), &cells, TolerancePolicy::DESK)?;
            pass &= reduced.pass && mrca.pass && intermediate.pass;
            checks.push(json!({ "x": x, "s": s_grid[i], "reduced": reduced, "mrca": mrca, "intermediate": intermediate }));
        }
    }
    let (code, status) = status_code(pass, enough);
    output.summary(&json!({
        "command": "verify-theorem2",
        "model": model_json(&spec, &model),
        "a": a,
        "min_accepted": min_accepted,
        "sample": sample_json(&linear, &model)?,
        "survival_sample": sample_json(&survived, &model)?,
        "checks": checks,
        "status": status,
    }))?;
    Ok(code)
}

fn verify_yaglom(common: &Common, sampling: &Sampling, t: f64, y_process: bool, threshold: f64, min_accepted: u64) -> Result<i32> {
    let Loaded { spec, model, output } = load(common)?;
    let initial = if y_process { InitialState::Offspring } else { InitialState::Single };
    let config = sim_config(sampling, t, ConditioningEvent::Survival).with_initial(initial);
    let sample = run_sample(common, &model, &config)?;
    sample.require_nonempty()?;
    let bt = model.b() * t;
    let scaled: Vec<f64> = sample.records.iter().map(|r| r.observables.z_t as f64 / bt).collect();
    let ks = ks_exponential(&scaled)?;
    let (code, status) = status_code(ks < threshold, sample.n_accepted >= min_accepted);
    output.summary(&json!({
        "command": "verify-yaglom",
        "model": model_json(&spec, &model),
        "y_process": y_process,
        "sample": sample_json(&sample, &model)?,
        "ks": ks,
        "ks_threshold": threshold,
        "min_accepted": min_accepted,
        "status": status,
    }))?;
    Ok(code)
}

#[derive(Serialize)]
struct Item {
    name: &'static str,
    status: &'static str,
    detail: String,
}

fn item(name: &'static str, ok: bool, detail: String) -> Item {
    Item { name, status: if ok { "pass" } else { "fail" }, detail }
}

fn check_conditions(common: &Common, phi: Schedule, t_grid: &[f64], renewal_t: usize) -> Result<i32> {
    let spec = load_model_spec(&common.model)?;
    let output = Output::new(common.out.clone())?;
    let mut items = Vec::new();
    match make_offspring(&spec.offspring.pmf) {
        Ok(law) => {
            items.push(item("criticality", true, format!("mean = {}, variance = {}", law.mean(), law.variance())));
            items.push(item(
                "offspring_log_moment",
                law.second_log_moment().is_finite(),
                format!("E xi^2 log(xi + 1) = {}", law.second_log_moment()),
            ));
        }
        Err(e) => items.push(item("criticality", false, e.to_string())),
    }
    let lifetime = match spec.lifetime.lattice_span() {
        Some(span) => {
            let atoms = spec.lifetime.lattice_atoms().unwrap_or(0);
            let ok = span == 1 && atoms >= 2;
            let detail = format!("lattice span {span}, {atoms} atoms");
            items.push(item("lattice_span_one", ok, detail));
            make_lifetime(&spec.lifetime, true).ok().filter(|_| span == 1)
        }
        None => {
            items.push(item("non_lattice", true, "continuous lifetime law".into()));
            make_lifetime(&spec.lifetime, false).ok()
        }
    };
    let mut tail_report = None;
    match &lifetime {
        Some(law) => {
            let m3 = law.third_moment();
            items.push(item("lifetime_third_moment", m3.is_finite(), format!("E tau^3 = {m3}")));
            let survival = |x: f64| law.survival(x);
            match crate::renewal::check_tail_with(survival, phi, t_grid) {
                Ok(report) => {
                    items.push(item("tail_condition", report.passes(), format!("flags per eps {:?}", report.flagged)));
                    tail_report = Some(report);
                }
                Err(e) => items.push(item("tail_condition", false, e.to_string())),
            }
        }
        None => items.push(Item { name: "tail_condition", status: "skipped", detail: "lifetime law invalid".into() }),
    }
    if let (Some(law), Ok(model)) = (&lifetime, spec.build()) {
        if law.is_lattice() {
            let table = renewal_function(law, renewal_t)?;
            let mut csv = Csv::new(&["n", "u", "U"]);
            for n in 0..=renewal_t {
                csv.row([n.to_string(), table.mass(n).to_string(), table.cumulative(n).to_string()]);
            }
            output.csv("renewal.csv", &csv)?;
            let ts: Vec<usize> = t_grid.iter().map(|t| t.round() as usize).filter(|t| *t > 0).collect();
            if let Ok(rows) = neglig_sweep(&model, &ts, 0.5, phi) {
                let mut csv = Csv::new(&["t", "bound", "predictor", "ratio"]);
                for r in rows {
                    csv.row([r.t.to_string(), r.bound.to_string(), r.predictor.to_string(), r.ratio.to_string()]);
                }
                output.csv("neglig.csv", &csv)?;
            }
        }
    }
    let pass = items.iter().all(|i| i.status == "pass");
    output.summary(&json!({
        "command": "check-conditions",
        "model": spec,
        "phi": phi,
        "t_grid": t_grid,
        "items": items,
        "tail": tail_report,
        "status": if pass { "pass" } else { "fail" },
    }))?;
    Ok(if pass { EXIT_PASS } else { EXIT_STAT_FAIL })
}

fn integer_grid(t_grid: &[f64]) -> Result<Vec<usize>> {
    t_grid
        .iter()
        .map(|&t| {
            if t >= 1.0 && t.fract() == 0.0 {
                Ok(t as usize)
            } else {
                Err(Error::Precondition(format!("exact sweeps need integer times >= 1, got {t}")))
            }
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    common: &Common,
    kind: SweepKind,
    t_grid: &[f64],
    psi: Schedule,
    k: usize,
    c: f64,
    event: &str,
    sampling: &Sampling,
) -> Result<i32> {
    let Loaded { spec, model, output } = load(common)?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("t grid must be nonempty and increasing".into()));
    }
    let b = model.b();
    let row = |t: f64, quantity: &str, value: f64, predicted: f64| SweepRow {
        t,
        quantity: quantity.to_string(),
        value,
        predicted,
        ratio: value / predicted,
    };
    let mut extra = Value::Null;
    let rows: Vec<SweepRow> = match kind {
        SweepKind::Survival => {
            let ts = integer_grid(t_grid)?;
            let q = survival_curve(&model, *ts.last().expect("nonempty"))?;
            ts.iter().map(|&t| row(t as f64, "Q(t)", q[t], 1.0 / (b * t as f64))).collect()
        }
        SweepKind::LocalLimit => {
            let ts = integer_grid(t_grid)?;
            let reports = local_limit_sweep(&model, &ts, c)?;
            let rows = reports
                .iter()
                .map(|r| {
                    // ratio - 1 is the sup error relative to the limit 1/B^2
                    let limit = 1.0 / (b * b);
                    SweepRow {
                        t: r.t as f64,
                        quantity: "sup_error".into(),
                        value: r.sup_error,
                        predicted: limit,
                        ratio: 1.0 + r.sup_error / limit,
                    }
                })
                .collect();
            extra = json!(reports);
            rows
        }
        SweepKind::Difference => integer_grid(t_grid)?
            .into_iter()
            .map(|t| {
                let r = difference_ratio(&model, t, psi.eval(t as f64))?;
                Ok(row(t as f64, "difference", r.difference, r.predicted))
            })
            .collect::<Result<_>>()?,
        SweepKind::Derivative => integer_grid(t_grid)?
            .into_iter()
            .map(|t| {
                let r = derivative_ratio(&model, t, psi.eval(t as f64), k)?;
                Ok(row(t as f64, &format!("derivative_{k}"), r.derivative, r.predicted))
            })
            .collect::<Result<_>>()?,
        SweepKind::Renewal => {
            let ts = integer_grid(t_grid)?;
            let mu = model.constants().mu;
            let table = renewal_function(&model.lifetime, *ts.last().expect("nonempty"))?;
            ts.iter().map(|&t| row(t as f64, "U(t)", table.cumulative(t), t as f64 / mu)).collect()
        }
        SweepKind::Acceptance => {
            let event: ConditioningEvent = event.parse()?;
            let mut rows = Vec::new();
            for &t in t_grid {
                let config = sim_config(sampling, t, event);
                let sample = run_sample(common, &model, &config)?;
                rows.push(row(t, "acceptance_rate", sample.acceptance_rate(), event_predictor(&model.constants(), t, &event)));
            }
            rows
        }
    };
    let report = summarize_sweep(rows);
    let mut csv = Csv::new(&["t", "quantity", "value", "predicted", "ratio"]);
    for r in &report.rows {
        csv.row([r.t.to_string(), r.quantity.clone(), r.value.to_string(), r.predicted.to_string(), r.ratio.to_string()]);
    }
    output.csv("diagnostics.csv", &csv)?;
    output.summary(&json!({
        "command": "sweep",
        "kind": format!("{kind:?}"),
        "model": model_json(&spec, &model),
        "psi": psi,
        "k": k,
        "c": c,
        "report": report,
        "details": extra,
        "status": if report.flagged() { "flagged" } else { "converging" },
    }))?;
    Ok(if report.flagged() { EXIT_STAT_FAIL } else { EXIT_PASS })
}
