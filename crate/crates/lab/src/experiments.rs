//! Dispatch from experiment names to core computations.

use std::time::Instant;

use rayon::prelude::*;
use sfc_core::analytics::{
    bs_price, d_values, decomposition_identity, expected_payoff_physical, greeks, implied_option_drift, pde_residual,
    OptionSpec,
};
use sfc_core::binomial::{beta_relation_check, convergence_study, crr_step, BetaRelation, MarketTree, TreeParams};
use sfc_core::decompose::{
    conditional_correlation, ensemble_statistics, split_index, stream_decomposition, StatisticRow, STATISTIC_NAMES,
};
use sfc_core::hedge::{
    ex_ante_residual, hedge_ensemble, hedge_path, merton_increment_comparison, sfc_residual_series,
    terminal_expectation, terminal_theta, terminal_theta_ensemble, theta_process, two_step_identity, AlphaRule,
    HedgeConfig, HedgeMode, PathSummary,
};
use sfc_core::market::{path_quadratic_variation, PathGenerator};
use sfc_core::stats::{log_log_fit, Estimate, LineFit, Moments};

use crate::config::{AlphaKey, Config};
use crate::error::LabError;
use crate::registry::Experiment;
use crate::report::{Report, Table, Value};

/// Runs `experiment` on a rayon pool sized by `config.threads`.
pub fn run_experiment(experiment: Experiment, config: &Config) -> Result<Report, LabError> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| LabError::Config(format!("threads: {e}")))?;
    let start = Instant::now();
    let mut report = Report::new(experiment.name(), config);
    pool.install(|| dispatch(experiment, config, &mut report))?;
    report.timing.wall_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn dispatch(experiment: Experiment, c: &Config, r: &mut Report) -> Result<(), LabError> {
    match experiment {
        Experiment::Price => price(c, r),
        Experiment::Greeks => greeks_report(c, r),
        Experiment::Hedge => hedge(c, r),
        Experiment::SfcScan => sfc_scan(c, r),
        Experiment::ThetaCheck => theta_check(c, r),
        Experiment::Increments => increments(c, r),
        Experiment::ExAnte => ex_ante(c, r),
        Experiment::Decompose => decompose(c, r),
        Experiment::A1Stats => a1_stats(c, r),
        Experiment::A1Conditional => a1_conditional(c, r),
        Experiment::CrrConverge => crr_converge(c, r),
        Experiment::BetaCheck => beta_check(c, r),
        Experiment::PhysicalPrice => physical_price(c, r),
    }
}

fn num(x: f64) -> Value {
    Value::num(x)
}

fn generator(c: &Config, n_steps: usize) -> Result<PathGenerator, LabError> {
    Ok(PathGenerator::new(c.market()?, c.grid(n_steps)?, c.seed)?)
}

fn fit_table(name: &str) -> Table {
    Table::new(name, &["quantity", "regressor", "slope", "slope_std_error", "ci_low", "ci_high", "ci_width"])
}

fn push_fit(t: &mut Table, quantity: &str, regressor: &str, fit: &LineFit) {
    t.push(vec![
        Value::text(quantity),
        Value::text(regressor),
        num(fit.slope),
        num(fit.slope_std_error),
        num(fit.ci_low),
        num(fit.ci_high),
        num(fit.ci_width()),
    ]);
}

/// Log-log fit over the entries with a positive finite response.
fn positive_fit(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .filter(|(_, v)| v.is_finite() && **v > 0.0)
        .map(|(a, b)| (*a, *b))
        .unzip();
    (xs.len() >= 2).then(|| log_log_fit(&xs, &ys))
}

fn price(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let w = bs_price(c.x0, c.t0, &spec)?;
    let (d1, d2) = d_values(c.x0, c.t0, &spec)?;
    let mut t = Table::new("price", &["x", "t", "strike", "maturity", "r", "sigma", "d1", "d2", "bs_price", "payoff"]);
    t.push(vec![
        num(c.x0),
        num(c.t0),
        num(spec.strike),
        num(spec.maturity),
        num(spec.r),
        num(spec.sigma),
        num(d1),
        num(d2),
        num(w),
        num(spec.payoff(c.x0)),
    ]);
    r.tables.push(t);
    r.scalar("bs_price", w);
    r.scalar("d1", d1);
    r.scalar("d2", d2);
    Ok(())
}

fn greeks_report(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let g = greeks(c.x0, c.t0, &spec)?;
    let id = decomposition_identity(c.x0, c.t0, &spec)?;
    let pde = pde_residual(c.x0, c.t0, &spec)?;
    let fields: [(&str, f64); 15] = [
        ("x", c.x0),
        ("t", c.t0),
        ("w", g.w),
        ("w1", g.w1),
        ("w11", g.w11),
        ("w111", g.w111),
        ("w2", g.w2),
        ("w12", g.w12),
        ("beta", g.beta),
        ("b", g.b),
        ("d1", g.d1),
        ("d2", g.d2),
        ("identity_value", id.value),
        ("identity_drift", id.drift),
        ("pde_residual", pde),
    ];
    let cols: Vec<&str> = fields.iter().map(|f| f.0).collect();
    let mut t = Table::new("greeks", &cols);
    t.push(fields.iter().map(|f| num(f.1)).collect());
    r.tables.push(t);
    for (k, v) in &fields[2..] {
        r.scalar(k, *v);
    }
    Ok(())
}

fn path_dump(gen: &PathGenerator, limit: usize) -> Table {
    let mut t = Table::new("paths", &["path", "step", "time", "price", "dW"]);
    let times = gen.grid().times();
    for p in 0..limit {
        let path = gen.path(p);
        for (i, &time) in times.iter().enumerate() {
            let dw = if i == 0 { 0.0 } else { path.wiener[i - 1] };
            t.push(vec![Value::int(p), Value::int(i), num(time), num(path.prices[i]), num(dw)]);
        }
    }
    t
}

fn ledger_dump(gen: &PathGenerator, spec: &OptionSpec, config: &HedgeConfig, limit: usize) -> Table {
    let mut t = Table::new("ledger", &["path", "step", "time", "x", "b", "alpha", "beta", "v", "residual", "theta"]);
    let times = gen.grid().times();
    for p in 0..limit {
        let path = gen.path(p);
        let ledger = hedge_path(&path.prices, gen.grid(), spec, config);
        let theta = theta_process(&ledger);
        for i in 0..times.len() {
            t.push(vec![
                Value::int(p),
                Value::int(i),
                num(times[i]),
                num(ledger.x[i]),
                num(ledger.b[i]),
                num(ledger.alpha[i]),
                num(ledger.beta[i]),
                num(ledger.v[i]),
                num(ledger.residual[i]),
                num(theta[i]),
            ]);
        }
    }
    t
}

fn hedge(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let gen = generator(c, c.n_steps)?;
    let base = c.hedge();
    let mut modes = Table::new(
        "modes",
        &[
            "mode",
            "n_paths",
            "n_steps",
            "v0",
            "rms_tracking_error",
            "rms_tracking_error_se",
            "mean_tracking_error",
            "mean_tracking_error_se",
            "rms_step_residual",
            "max_abs_residual",
            "max_accounting_violation",
            "max_two_step_violation",
            "rms_cross_term",
        ],
    );
    let mut per_mode: Vec<Vec<PathSummary>> = Vec::new();
    for (label, mode) in [("budget", HedgeMode::BudgetSolved), ("formula", HedgeMode::FormulaPrescribed)] {
        let cfg = HedgeConfig { mode, ..base };
        let (paths, agg) = hedge_ensemble(&gen, c.n_paths, &spec, cfg)?;
        modes.push(vec![
            Value::text(label),
            Value::int(agg.n_paths),
            Value::int(agg.n_steps),
            num(agg.initial_value),
            num(agg.rms_tracking_error),
            num(agg.rms_tracking_error_se),
            num(agg.mean_tracking_error.value),
            num(agg.mean_tracking_error.std_error),
            num(agg.rms_step_residual),
            num(agg.max_abs_residual),
            num(agg.max_accounting_violation),
            num(agg.max_two_step_violation),
            num(agg.rms_cross_term),
        ]);
        r.estimate(&format!("{label}.rms_tracking_error"), agg.rms_tracking_error, agg.rms_tracking_error_se);
        r.scalar(&format!("{label}.max_abs_residual"), agg.max_abs_residual);
        r.scalar(&format!("{label}.max_accounting_violation"), agg.max_accounting_violation);
        if mode == HedgeMode::BudgetSolved {
            r.scalar("budget.max_two_step_violation", agg.max_two_step_violation);
        }
        per_mode.push(paths);
    }
    // formula minus budget terminal value against the carried formula residual
    let gap = per_mode[0]
        .iter()
        .zip(&per_mode[1])
        .map(|(b, f)| ((f.v_terminal - b.v_terminal) - f.carried_residual).abs())
        .fold(0.0, f64::max);
    r.scalar("mode_consistency_max_gap", gap);
    r.tables.push(modes);
    if c.dump_paths {
        r.tables.push(path_dump(&gen, c.dump_limit.min(c.n_paths)));
    }
    if c.dump_ledger {
        r.tables.push(ledger_dump(&gen, &spec, &base, c.dump_limit.min(c.n_paths)));
    }
    Ok(())
}

#[derive(Clone, Copy, Default)]
struct ScanPath {
    residual_sum: f64,
    residual_sum_sq: f64,
    tracking_error: f64,
    cross_sum_sq: f64,
    qv_gap: f64,
}

fn sfc_scan(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let mut rows = Table::new(
        "scan",
        &[
            "n_steps",
            "dt",
            "mean_step_residual",
            "mean_step_residual_se",
            "rms_step_residual",
            "budget_rms_tracking_error",
            "budget_rms_tracking_error_se",
            "rms_cross_term",
            "qv_gap_variance",
        ],
    );
    let mut cols: [Vec<f64>; 6] = Default::default();
    let formula = HedgeConfig { mode: HedgeMode::FormulaPrescribed, ..c.hedge() };
    let budget = HedgeConfig { mode: HedgeMode::BudgetSolved, ..c.hedge() };
    for &n in &c.scan_steps {
        let gen = generator(c, n)?;
        let grid = gen.grid();
        let per_path: Vec<ScanPath> = (0..c.n_paths)
            .into_par_iter()
            .map_init(
                || gen.buffers(),
                |buf, p| {
                    gen.fill(p, &mut buf.prices, &mut buf.wiener);
                    let f = hedge_path(&buf.prices, grid, &spec, &formula);
                    let series = sfc_residual_series(&f, c.include_bond_cross);
                    let b = hedge_path(&buf.prices, grid, &spec, &budget);
                    let cross = two_step_identity(&b, HedgeMode::BudgetSolved)
                        .map(|t| t.stock_cross.iter().map(|x| x * x).sum())
                        .unwrap_or(f64::NAN);
                    let qv = path_quadratic_variation(&buf.prices, spec.sigma, grid.dt());
                    ScanPath {
                        residual_sum: series.per_step[1..].iter().sum(),
                        residual_sum_sq: series.per_step[1..].iter().map(|x| x * x).sum(),
                        tracking_error: b.tracking_error,
                        cross_sum_sq: cross,
                        qv_gap: qv.realized - qv.compensator,
                    }
                },
            )
            .collect();
        let means: Vec<f64> = per_path.iter().map(|s| s.residual_sum / n as f64).collect();
        let mean = Estimate::of_mean(&means);
        let ss: f64 = per_path.iter().map(|s| s.residual_sum_sq).sum();
        let rms = (ss / (n * c.n_paths) as f64).sqrt();
        let te_sq: Vec<f64> = per_path.iter().map(|s| s.tracking_error * s.tracking_error).collect();
        let te = Moments::from_slice(&te_sq);
        let te_rms = te.mean().sqrt();
        let te_se = if te_rms > 0.0 { te.std_error() / (2.0 * te_rms) } else { 0.0 };
        let cross_rms = if n >= 2 {
            (per_path.iter().map(|s| s.cross_sum_sq).sum::<f64>() / ((n - 1) * c.n_paths) as f64).sqrt()
        } else {
            f64::NAN
        };
        let qv_gaps: Vec<f64> = per_path.iter().map(|s| s.qv_gap).collect();
        let qv_var = Moments::from_slice(&qv_gaps).variance();
        let dt = grid.dt();
        rows.push(vec![
            Value::int(n),
            num(dt),
            num(mean.value),
            num(mean.std_error),
            num(rms),
            num(te_rms),
            num(te_se),
            num(cross_rms),
            num(qv_var),
        ]);
        for (col, v) in cols.iter_mut().zip([n as f64, dt, rms, te_rms, cross_rms, qv_var]) {
            col.push(v);
        }
    }
    let mut fits = fit_table("fits");
    let [ns, dts, rms, te, cross, qv] = &cols;
    let abs_mean: Vec<f64> = rows.rows.iter().map(|row| row[2].as_f64().unwrap_or(f64::NAN).abs()).collect();
    for (q, reg, x, y) in [
        ("rms_step_residual", "dt", dts, rms),
        ("abs_mean_step_residual", "dt", dts, &abs_mean),
        ("budget_rms_tracking_error", "n_steps", ns, te),
        ("rms_cross_term", "dt", dts, cross),
        ("qv_gap_variance", "n_steps", ns, qv),
    ] {
        if let Some(fit) = positive_fit(x, y) {
            push_fit(&mut fits, q, reg, &fit);
            r.estimate(&format!("slope.{q}"), fit.slope, fit.slope_std_error);
        }
    }
    r.tables.push(rows);
    r.tables.push(fits);
    Ok(())
}

fn theta_check(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let check = terminal_theta_ensemble(c.market()?, &spec, c.t0, c.n_paths, c.seed, c.theta_tau, c.theta_eps, c.theta_tol)?;
    r.scalar("max_abs_terminal_theta", check.max_abs_terminal);
    r.count("checked", check.checked);
    r.count("excluded", check.excluded);
    r.count("passed", check.passed as usize);
    let mut t = Table::new("examples", &["x_T", "tau_final", "theta"]);
    for m in [0.5, 0.9, 0.99, 1.01, 1.1, 1.5] {
        let x = m * spec.strike;
        t.push(vec![num(x), num(c.theta_tau), num(terminal_theta(x, &spec, c.theta_tau)?)]);
    }
    r.tables.push(t);
    Ok(())
}

fn with_rule<T>(c: &Config, key: AlphaKey, f: impl FnOnce(AlphaRule<'_>) -> T) -> T {
    let a = c.alpha_constant;
    let constant = move |_t: f64| a;
    let linear = move |t: f64| a + t;
    match key {
        AlphaKey::Delta => f(AlphaRule::Delta),
        AlphaKey::Constant => f(AlphaRule::Deterministic(&constant)),
        AlphaKey::Linear => f(AlphaRule::Deterministic(&linear)),
    }
}

fn rule_label(key: AlphaKey) -> &'static str {
    match key {
        AlphaKey::Delta => "delta",
        AlphaKey::Constant => "constant",
        AlphaKey::Linear => "linear",
    }
}

fn increments(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let gen = generator(c, c.n_steps)?;
    let grid = gen.grid();
    let results = with_rule(c, c.alpha_rule, |rule| {
        (0..c.n_paths)
            .into_par_iter()
            .map(|p| {
                let path = gen.path(p);
                merton_increment_comparison(&path.prices, grid, &spec, rule)
                    .map(|cmp| (cmp.cumulative_difference.last().copied().unwrap_or(0.0), cmp.compensator))
            })
            .collect::<Result<Vec<_>, _>>()
    })?;
    let total_diff: f64 = results.iter().map(|x| x.0).sum();
    let total_comp: f64 = results.iter().map(|x| x.1).sum();
    let cum: Vec<f64> = results.iter().map(|x| x.0).collect();
    let est = Estimate::of_mean(&cum);
    let rms = Moments::from_slice(&cum).rms();
    r.estimate("mean_cumulative_difference", est.value, est.std_error);
    r.scalar("rms_cumulative_difference", rms);
    r.scalar("total_compensator", total_comp);
    r.scalar("difference_to_compensator_ratio", if total_comp != 0.0 { total_diff / total_comp } else { f64::NAN });
    let first = with_rule(c, c.alpha_rule, |rule| merton_increment_comparison(&gen.path(0).prices, grid, &spec, rule))?;
    let mut t = Table::new("steps", &["step", "time", "post_move", "pre_move", "difference", "cumulative_difference"]);
    for i in 0..first.difference.len() {
        t.push(vec![
            Value::int(i + 1),
            num(grid.times()[i + 1]),
            num(first.post_move[i]),
            num(first.pre_move[i]),
            num(first.difference[i]),
            num(first.cumulative_difference[i]),
        ]);
    }
    r.tables.push(t);
    let mut p = Table::new("rule", &["alpha_rule", "n_paths", "n_steps"]);
    p.push(vec![Value::text(rule_label(c.alpha_rule)), Value::int(c.n_paths), Value::int(c.n_steps)]);
    r.tables.push(p);
    Ok(())
}

fn ex_ante(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let deterministic = if c.alpha_rule == AlphaKey::Delta { AlphaKey::Linear } else { c.alpha_rule };
    let mut t = Table::new("estimates", &["alpha_rule", "quantity", "estimate", "std_error"]);
    for key in [AlphaKey::Delta, deterministic] {
        let est = with_rule(c, key, |rule| ex_ante_residual(c.x0, c.t0, &spec, c.mu, c.dt, c.n_inner, c.seed, rule))?;
        let label = rule_label(key);
        t.push(vec![Value::text(label), Value::text("residual"), num(est.residual.value), num(est.residual.std_error)]);
        t.push(vec![
            Value::text(label),
            Value::text("cross_over_dt"),
            num(est.cross_over_dt.value),
            num(est.cross_over_dt.std_error),
        ]);
        t.push(vec![Value::text(label), Value::text("compensator"), num(est.compensator), num(0.0)]);
        r.estimate(&format!("{label}.residual"), est.residual.value, est.residual.std_error);
        r.estimate(&format!("{label}.cross_over_dt"), est.cross_over_dt.value, est.cross_over_dt.std_error);
        r.scalar(&format!("{label}.compensator"), est.compensator);
    }
    r.tables.push(t);
    Ok(())
}

fn decompose(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let mut t = Table::new(
        "refinement",
        &[
            "n_steps",
            "dt",
            "rms_defect",
            "mean_i_kappa",
            "mean_i_kappa_se",
            "mean_i_lambda",
            "mean_i_lambda_se",
            "max_lambda_identity_gap",
            "theta_t0",
        ],
    );
    let mut ns = Vec::new();
    let mut defects = Vec::new();
    for &n in &c.refine_steps {
        let gen = generator(c, n)?;
        let streamed = stream_decomposition(&gen, c.n_paths, &spec, 0, false)?;
        let checked = stream_decomposition(&gen, c.n_paths.min(64), &spec, 0, true)?;
        let gap = checked.iter().map(|s| s.lambda_identity).fold(0.0, f64::max);
        let rms = (streamed.iter().map(|s| s.defect() * s.defect()).sum::<f64>() / streamed.len() as f64).sqrt();
        let ik: Vec<f64> = streamed.iter().map(|s| s.segments.kappa_late).collect();
        let il: Vec<f64> = streamed.iter().map(|s| s.segments.lambda_late).collect();
        let (ek, el) = (Estimate::of_mean(&ik), Estimate::of_mean(&il));
        t.push(vec![
            Value::int(n),
            num(gen.grid().dt()),
            num(rms),
            num(ek.value),
            num(ek.std_error),
            num(el.value),
            num(el.std_error),
            num(gap),
            num(streamed[0].theta_start),
        ]);
        ns.push(n as f64);
        defects.push(rms);
    }
    let monotone = defects.windows(2).all(|w| w[1] <= w[0]);
    r.count("defect_non_increasing", monotone as usize);
    r.scalar("finest_rms_defect", *defects.last().expect("refine_steps is non-empty"));
    let mut fits = fit_table("fits");
    if let Some(fit) = positive_fit(&ns, &defects) {
        push_fit(&mut fits, "rms_defect", "n_steps", &fit);
        r.estimate("slope.rms_defect", fit.slope, fit.slope_std_error);
    }
    r.tables.push(t);
    r.tables.push(fits);
    Ok(())
}

fn statistics_table(rows: &[StatisticRow]) -> Table {
    let mut t = Table::new("statistics", &["quantity", "estimate", "std_error", "n_paths", "conditioning"]);
    for row in rows {
        t.push(vec![
            Value::text(row.quantity),
            num(row.estimate),
            num(row.std_error),
            Value::int(row.n_paths),
            Value::text(row.conditioning.label()),
        ]);
    }
    t
}

fn unconditional_rows(c: &Config, spec: &OptionSpec) -> Result<Vec<StatisticRow>, LabError> {
    let gen = generator(c, c.n_steps)?;
    let split = split_index(gen.grid(), c.t1)?;
    let rows: Vec<_> = stream_decomposition(&gen, c.n_paths, spec, split, false)?
        .into_iter()
        .map(|s| s.segments)
        .collect();
    Ok(ensemble_statistics(&rows, c.resamples, c.seed)?)
}

fn a1_stats(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let rows = unconditional_rows(c, &spec)?;
    for row in &rows {
        r.estimate(row.quantity, row.estimate, row.std_error);
    }
    r.tables.push(statistics_table(&rows));
    Ok(())
}

fn a1_conditional(c: &Config, r: &mut Report) -> Result<(), LabError> {
    use sfc_core::decompose::Conditioning;
    let spec = c.option()?;
    let cond = conditional_correlation(c.x1, c.t1, &spec, c.mu, c.n_paths, c.conditional_steps, c.seed)?;
    let n = cond.n_paths;
    let row = |quantity, estimate, std_error| StatisticRow {
        quantity,
        estimate,
        std_error,
        n_paths: n,
        conditioning: Conditioning::Split,
    };
    let mut rows = vec![
        row("cor(k1T,l1T)", cond.correlation, cond.std_error),
        row("var(k1T)", cond.var_kappa, f64::NAN),
        row("var(l1T)", cond.var_lambda, f64::NAN),
        row("closure_rms", cond.closure_rms, f64::NAN),
        row("theta_t1", cond.theta_t1, 0.0),
    ];
    let unconditional = unconditional_rows(c, &spec)?;
    let cor_name = STATISTIC_NAMES[2];
    rows.extend(unconditional.into_iter().filter(|s| s.quantity == cor_name));
    r.estimate("conditional.cor(k1T,l1T)", cond.correlation, cond.std_error);
    r.count("conditional.degenerate", cond.degenerate as usize);
    r.scalar("conditional.closure_rms", cond.closure_rms);
    if let Some(u) = rows.iter().find(|s| s.conditioning == Conditioning::Start) {
        r.estimate("unconditional.cor(k1T,l1T)", u.estimate, u.std_error);
    }
    r.tables.push(statistics_table(&rows));
    Ok(())
}

fn crr_converge(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let study = convergence_study(&spec, c.x0, c.t0, &c.crr_steps)?;
    let mut t = Table::new("convergence", &["n", "crr_price", "bs_price", "abs_error"]);
    for row in &study.rows {
        t.push(vec![Value::int(row.n), num(row.crr_price), num(row.bs_price), num(row.abs_error)]);
    }
    let mut fits = fit_table("fits");
    push_fit(&mut fits, "abs_error", "n", &study.fit);
    let last = study.rows.last().expect("at least two rows");
    r.estimate("slope.abs_error", study.fit.slope, study.fit.slope_std_error);
    r.scalar("final_abs_error", last.abs_error);
    r.tables.push(t);
    r.tables.push(fits);
    Ok(())
}

fn relation_row(t: &mut Table, case: &str, c: f64, rel: &BetaRelation) {
    t.push(vec![
        Value::text(case),
        num(c),
        num(rel.rho_up),
        num(rel.rho_down),
        num(rel.gap),
        num(rel.implied_c),
        num(rel.price_gap),
        num(rel.beta_s),
        num(rel.beta_c),
    ]);
}

fn beta_check(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let tree = c.one_step_tree()?;
    let market = MarketTree::stock_proxy(&tree);
    let k = c.tree_strike;
    let c_up = (tree.s * tree.u - k).max(0.0);
    let c_down = (tree.s * tree.d - k).max(0.0);
    let price = crr_step(c_up, c_down, &tree)?;
    let exact = beta_relation_check(&tree, &market, c_up, c_down, price)?;
    let bumped = beta_relation_check(&tree, &market, c_up, c_down, price + c.price_bump)?;
    let mut t = Table::new(
        "relations",
        &["case", "c", "rho_up", "rho_down", "gap", "implied_c", "price_gap", "beta_s", "beta_c"],
    );
    relation_row(&mut t, "difference_equation", price, &exact);
    relation_row(&mut t, "bumped", price + c.price_bump, &bumped);
    r.tables.push(t);
    r.scalar("one_step.c", price);
    r.scalar("one_step.gap", exact.gap);
    r.scalar("bumped.gap", bumped.gap);

    // every interior node of a calibrated lattice
    let spec = c.option()?;
    let lattice = TreeParams::calibrated(&spec, c.x0, c.t0, c.lattice_steps)?;
    let n = lattice.n;
    let spot = |level: usize, j: usize| {
        lattice.s * lattice.u.powi(j as i32) * lattice.d.powi((level - j) as i32)
    };
    let mut values: Vec<f64> = (0..=n).map(|j| (spot(n, j) - spec.strike).max(0.0)).collect();
    let mut worst = 0.0f64;
    for level in (0..n).rev() {
        let mut next = vec![0.0; level + 1];
        for j in 0..=level {
            let node = TreeParams::new(spot(level, j), lattice.u, lattice.d, lattice.r_star, 1)?;
            let v = crr_step(values[j + 1], values[j], &node)?;
            let rel = beta_relation_check(&node, &MarketTree::stock_proxy(&node), values[j + 1], values[j], v)?;
            worst = worst.max(rel.gap.abs());
            next[j] = v;
        }
        values = next;
    }
    r.scalar("lattice.max_abs_gap", worst);
    r.scalar("lattice.price", values[0]);
    r.count("lattice.n", n);
    Ok(())
}

fn physical_price(c: &Config, r: &mut Report) -> Result<(), LabError> {
    let spec = c.option()?;
    let tau = spec.maturity - c.t0;
    let physical = expected_payoff_physical(c.x0, c.t0, &spec, c.mu)?;
    let risk_neutral = expected_payoff_physical(c.x0, c.t0, &spec, spec.r)?;
    let forward_value = (spec.r * tau).exp() * bs_price(c.x0, c.t0, &spec)?;
    let strike = spec.strike;
    let mc = terminal_expectation(c.market()?, c.t0, spec.maturity, c.n_paths, c.seed, move |x| (x - strike).max(0.0))?;
    let drift = implied_option_drift(c.x0, c.t0, &spec, c.mu)?;
    let mut t = Table::new("estimates", &["quantity", "estimate", "std_error"]);
    let rows: [(&str, f64, f64); 6] = [
        ("expected_payoff_physical", physical, 0.0),
        ("expected_payoff_mc", mc.value, mc.std_error),
        ("expected_payoff_at_r", risk_neutral, 0.0),
        ("forward_bs_price", forward_value, 0.0),
        ("option_drift_average", drift.average, 0.0),
        ("option_drift_instantaneous", drift.instantaneous, 0.0),
    ];
    for (q, v, se) in rows {
        t.push(vec![Value::text(q), num(v), num(se)]);
        r.estimate(q, v, se);
    }
    r.scalar("risk_neutral_relative_gap", (risk_neutral - forward_value).abs() / forward_value);
    r.tables.push(t);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Config {
        Config {
            n_paths: 1000,
            n_steps: 64,
            scan_steps: vec![16, 32, 64],
            refine_steps: vec![16, 32, 64],
            crr_steps: vec![16, 32, 64, 128],
            n_inner: 2000,
            conditional_steps: 64,
            ..Config::default()
        }
    }

    #[test]
    fn price_report_holds_canonical_value() {
        let r = run_experiment(Experiment::Price, &Config::default()).unwrap();
        assert!((r.summary_value("bs_price").unwrap() - 10.450584).abs() < 1e-6);
    }

    #[test]
    fn every_experiment_runs_on_a_small_config() {
        for e in crate::registry::REGISTRY {
            let r = run_experiment(e.experiment, &small()).unwrap_or_else(|err| panic!("{}: {err}", e.name));
            assert_eq!(r.experiment, e.name);
            assert!(!r.tables.is_empty(), "{}", e.name);
        }
    }

    #[test]
    fn invalid_config_is_a_config_error() {
        let c = Config { sigma: 0.0, ..Config::default() };
        let err = run_experiment(Experiment::Price, &c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hedge_dumps_follow_fixed_schemas() {
        let c = Config { dump_paths: true, dump_ledger: true, dump_limit: 2, ..small() };
        let r = run_experiment(Experiment::Hedge, &c).unwrap();
        let paths = r.table("paths").unwrap();
        assert_eq!(paths.columns, ["path", "step", "time", "price", "dW"]);
        assert_eq!(paths.rows.len(), 2 * 65);
        let ledger = r.table("ledger").unwrap();
        assert_eq!(ledger.columns, ["path", "step", "time", "x", "b", "alpha", "beta", "v", "residual", "theta"]);
        assert!(r.summary_value("mode_consistency_max_gap").unwrap() < 1e-10 * 100.0);
        assert!(r.summary_value("budget.max_abs_residual").unwrap() < 1e-12 * 100.0);
    }

    #[test]
    fn a1_tables_carry_both_conditionings() {
        let r = run_experiment(Experiment::A1Conditional, &Config { n_paths: 1000, ..small() }).unwrap();
        let t = r.table("statistics").unwrap();
        let k = t.column("conditioning").unwrap();
        let labels: Vec<_> = t.rows.iter().map(|row| row[k].clone()).collect();
        assert!(labels.contains(&Value::text("F_t1")) && labels.contains(&Value::text("F_t0")));
        let s = run_experiment(Experiment::A1Stats, &small()).unwrap();
        assert!(s.table("statistics").unwrap().rows.len() >= 7);
    }

    #[test]
    fn line_fit_helper_skips_nonpositive_values() {
        assert!(positive_fit(&[1.0, 2.0, 3.0], &[0.0, -1.0, 2.0]).is_none());
        let f = positive_fit(&[1.0, 2.0, 4.0], &[1.0, 0.5, 0.25]).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
    }
}
