//! One function per subcommand: configuration in, tables out.

use serde_json::json;

use diagwalk::estimator::{forced_prefix_check, wilson_interval, MonteCarlo, MAX_EXACT_PREFIX};
use diagwalk::lattice::{axis_path, staircase_path};
use diagwalk::sparse::{counterexample_set, lemma_lower_bound, SparseDiagonal};
use diagwalk::LatticePoint;

use crate::config::ExperimentConfig;
use crate::output::{estimate_cells, opt_cell, RunOutput, Table};
use crate::{linear_fit, CliError};

/// Runs the experiment named by `cfg.command()`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    match cfg.command() {
        "sequence" => cmd_sequence(cfg),
        "figure5" => cmd_figure5(cfg),
        "returns" => cmd_returns(cfg),
        "capacity" => cmd_capacity(cfg),
        "counterexample" => cmd_counterexample(cfg),
        "zwalk" => cmd_zwalk(cfg),
        "compare-paths" => cmd_compare_paths(cfg),
        other => Err(CliError::Config(format!("unknown experiment '{other}'"))),
    }
}

fn driver(cfg: &ExperimentConfig) -> Result<MonteCarlo, CliError> {
    Ok(MonteCarlo::new(cfg.workers())?
        .with_level(cfg.level())?
        .with_bias_probe(cfg.bias_probe()))
}

/// `n_k` and `C_N` tables with the counting lower bound.
pub fn cmd_sequence(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let eps = cfg.epsilon();
    let seed = cfg.seed().to_string();
    let k_max: usize = cfg.get("k_max")?;
    let (n_min, n_max): (u64, u64) = (cfg.get("n_min")?, cfg.get("n_max")?);
    let sd = SparseDiagonal::new(eps)?;
    let mut ks = Table::new("sequence_k", &["k", "n_k", "partial_sum", "master_seed"]);
    for k in 1..=k_max {
        ks.push(vec![
            k.to_string(),
            sd.n_k(k).to_string(),
            sd.partial_sum(k).to_string(),
            seed.clone(),
        ]);
    }
    let mut ns = Table::new("sequence_n", &["N", "C_N", "lemma_lower", "lemma_pass", "master_seed"]);
    let mut violations = Vec::new();
    for n in n_min..=n_max {
        let c = sd.c_n(n);
        let (lower, pass) = if n >= 2 {
            let lb = lemma_lower_bound(n, eps)?;
            let pass = c as f64 > lb;
            if !pass {
                violations.push(n);
            }
            (lb.to_string(), pass.to_string())
        } else {
            (String::new(), String::new())
        };
        ns.push(vec![n.to_string(), c.to_string(), lower, pass, seed.clone()]);
    }
    let summary = vec![json!({
        "epsilon": eps,
        "k_rows": ks.rows.len(),
        "n_rows": ns.rows.len(),
        "lemma_violations": violations,
    })];
    Ok(RunOutput {
        tables: vec![ks, ns],
        summary,
        ..Default::default()
    })
}

/// Cover probabilities of the diagonal segments and the log-linear fit.
pub fn cmd_figure5(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (i_max, horizon, trials): (u64, u64, u64) = (cfg.get("i_max")?, cfg.get("horizon")?, cfg.get("trials")?);
    let seed = cfg.seed();
    let series = driver(cfg)?.cover_series(i_max, horizon, trials, seed)?;
    let mut table = Table::estimates("figure5", &["ln_p_hat", "bias_delta"]);
    let mut summary = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, e) in series.entries() {
        let ln = (e.p_hat > 0.0).then(|| e.p_hat.ln());
        if *i >= 1 {
            if let Some(y) = ln {
                xs.push(*i as f64);
                ys.push(y);
            }
        }
        let mut row = estimate_cells("cover_series", None, i, 3, e);
        row.push(opt_cell(ln));
        row.push(opt_cell(e.bias_delta));
        table.push(row);
        summary.push(json!({ "i": i, "estimate": e }));
    }
    let fit = linear_fit(&xs, &ys);
    let mut fit_table = Table::new(
        "figure5_fit",
        &["slope", "intercept", "r_squared", "points", "i_min", "i_max", "master_seed"],
    );
    fit_table.push(vec![
        opt_cell(fit.map(|f| f.slope)),
        opt_cell(fit.map(|f| f.intercept)),
        opt_cell(fit.map(|f| f.r_squared)),
        xs.len().to_string(),
        "1".into(),
        i_max.to_string(),
        seed.to_string(),
    ]);
    summary.push(json!({ "fit": fit }));
    Ok(RunOutput {
        tables: vec![table, fit_table],
        summary,
        ..Default::default()
    })
}

/// Return probabilities to the sparse diagonal, plus the self-return baseline.
pub fn cmd_returns(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let eps = cfg.epsilon();
    let (k_min, k_max): (u64, u64) = (cfg.get("k_min")?, cfg.get("k_max")?);
    let (horizon, trials): (u64, u64) = (cfg.get("horizon")?, cfg.get("trials")?);
    if k_min < 1 || k_min > k_max {
        return Err(CliError::Config(format!("need 1 <= k_min <= k_max, got {k_min}..{k_max}")));
    }
    let seed = cfg.seed();
    let mc = driver(cfg)?;
    let ks: Vec<u64> = (k_min..=k_max).collect();
    let profile = mc.return_profile(&ks, eps, horizon, trials, seed)?;
    let sd = SparseDiagonal::new(eps)?;
    let mut table = Table::estimates("returns", &["start_m", "escape_p_hat", "bias_delta"]);
    let mut summary = Vec::new();
    for (k, e) in profile.entries() {
        let mut row = estimate_cells("return_profile", Some(eps), k, 3, e);
        row.extend([
            sd.n_k(*k as usize).to_string(),
            (1.0 - e.p_hat).to_string(),
            opt_cell(e.bias_delta),
        ]);
        table.push(row);
        summary.push(json!({ "k": k, "estimate": e }));
    }
    let base = mc.polya_baseline(horizon, trials, seed)?;
    let mut row = estimate_cells("polya_baseline", None, 0, 3, &base);
    row.extend(["0".to_string(), (1.0 - base.p_hat).to_string(), opt_cell(base.bias_delta)]);
    table.push(row);
    summary.push(json!({ "baseline": base }));
    if let Some(d) = cfg.get_opt::<usize>("diagonal_d")? {
        let e = mc.diagonal_return_probability(d, horizon, trials, seed)?;
        let mut row = estimate_cells("diagonal_return", None, d, d, &e);
        row.extend(["0".to_string(), (1.0 - e.p_hat).to_string(), opt_cell(e.bias_delta)]);
        table.push(row);
        summary.push(json!({ "diagonal_return": e, "d": d }));
    }
    Ok(RunOutput {
        tables: vec![table],
        summary,
        ..Default::default()
    })
}

/// Wiener-sum terms `2^{-k} cap(A_k)` with their ceilings.
pub fn cmd_capacity(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let eps = cfg.epsilon();
    let k_max: u32 = cfg.get("k_max")?;
    let (horizon, tpp): (u64, u64) = (cfg.get("horizon")?, cfg.get("trials")?);
    let seed = cfg.seed();
    let series = driver(cfg)?.wiener_partial_sum(k_max, eps, horizon, tpp, seed)?;
    let mut table = Table::estimates(
        "capacity",
        &[
            "slice_size",
            "capacity",
            "capacity_se",
            "summand",
            "running_sum",
            "ceiling",
            "count_ceiling",
            "within_ceiling",
            "bias_delta",
        ],
    );
    let mut summary = Vec::new();
    let mut over = Vec::new();
    for (k, term) in series.entries() {
        let (successes, pooled, ci) = match &term.capacity {
            Some(c) => {
                let s: u64 = c.per_site.iter().map(|(_, e)| e.successes).sum();
                let n = tpp * term.slice_size as u64;
                (s, n, Some(wilson_interval(s, n, cfg.level())?))
            }
            None => (0, 0, None),
        };
        let within = term.summand <= term.ceiling;
        if !within {
            over.push(*k);
        }
        table.push(vec![
            "wiener_partial_sum".into(),
            eps.to_string(),
            k.to_string(),
            "3".into(),
            horizon.to_string(),
            tpp.to_string(),
            successes.to_string(),
            if pooled > 0 { (successes as f64 / pooled as f64).to_string() } else { String::new() },
            opt_cell(ci.map(|c| c.0)),
            opt_cell(ci.map(|c| c.1)),
            seed.to_string(),
            term.slice_size.to_string(),
            term.capacity.as_ref().map_or(0.0, |c| c.value).to_string(),
            opt_cell(term.capacity.as_ref().map(|c| c.std_error)),
            term.summand.to_string(),
            term.running_sum.to_string(),
            term.ceiling.to_string(),
            term.count_ceiling.to_string(),
            within.to_string(),
            opt_cell(term.capacity.as_ref().and_then(|c| c.bias_delta)),
        ]);
        summary.push(json!({
            "k": k,
            "slice_size": term.slice_size,
            "capacity": term.capacity.as_ref().map(|c| c.value),
            "std_error": term.capacity.as_ref().map(|c| c.std_error),
            "bias_delta": term.capacity.as_ref().and_then(|c| c.bias_delta),
            "summand": term.summand,
            "running_sum": term.running_sum,
            "ceiling": term.ceiling,
        }));
    }
    Ok(RunOutput {
        tables: vec![table],
        summary,
        failure: (!over.is_empty()).then(|| format!("summand above |A_k| 2^-k at k = {over:?}")),
        ..Default::default()
    })
}

/// Exact prefix enumeration and, in statistical mode, escape estimates.
pub fn cmd_counterexample(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mode: String = cfg.get("mode")?;
    let (k_min, k_max, blocks): (u32, u32, u32) = (cfg.get("k_min")?, cfg.get("k_max")?, cfg.get("blocks")?);
    if k_min < 1 || k_min > k_max {
        return Err(CliError::Config(format!("need 1 <= k_min <= k_max, got {k_min}..{k_max}")));
    }
    let statistical = match mode.as_str() {
        "exact" => false,
        "statistical" => true,
        other => return Err(CliError::Config(format!("mode must be exact or statistical, got '{other}'"))),
    };
    if !statistical && k_max > MAX_EXACT_PREFIX {
        return Err(CliError::Config(format!(
            "exact mode enumerates 6^k prefixes; k_max must be <= {MAX_EXACT_PREFIX}, got {k_max}"
        )));
    }
    let blocks = blocks.max(k_max);
    let seed = cfg.seed();
    let mut exact = Table::new(
        "counterexample_exact",
        &[
            "k",
            "blocks",
            "prefixes",
            "avoiding",
            "z_only",
            "first_step_hits",
            "avoid_fraction",
            "bound",
            "pass",
            "master_seed",
        ],
    );
    let mut summary = Vec::new();
    let mut failed = Vec::new();
    for k in k_min..=k_max.min(MAX_EXACT_PREFIX) {
        let r = forced_prefix_check(k, blocks)?;
        if !r.pass {
            failed.push(k);
        }
        exact.push(vec![
            k.to_string(),
            blocks.to_string(),
            r.prefixes.to_string(),
            r.avoiding.to_string(),
            r.z_only.to_string(),
            r.first_step_hits.to_string(),
            r.avoid_fraction.to_string(),
            r.bound.to_string(),
            r.pass.to_string(),
            seed.to_string(),
        ]);
        summary.push(json!({ "exact": r }));
    }
    let mut tables = vec![exact];
    if statistical {
        let (horizon, trials): (u64, u64) = (cfg.get("horizon")?, cfg.get("trials")?);
        let mc = driver(cfg)?;
        let set = counterexample_set(blocks)?;
        let mut esc = Table::estimates("counterexample_escape", &["bound", "bias_delta"]);
        for k in k_min..=k_max {
            let start = LatticePoint::from([1i64 << k, 0, 0]);
            let e = mc.estimate_escape(&start, &set, horizon, trials, seed)?;
            let mut row = estimate_cells("escape_from_centre", None, k, 3, &e);
            row.extend([3f64.powi(-(k as i32)).to_string(), opt_cell(e.bias_delta)]);
            esc.push(row);
            summary.push(json!({ "k": k, "escape": e }));
        }
        tables.push(esc);
    }
    Ok(RunOutput {
        tables,
        summary,
        failure: (!failed.is_empty()).then(|| format!("forced-prefix property fails at k = {failed:?}")),
        ..Default::default()
    })
}

/// Exploratory interval cover by the Z walk under a base step cap.
pub fn cmd_zwalk(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (n_min, n_max): (u64, u64) = (cfg.get("n_min")?, cfg.get("n_max")?);
    let (cap, trials): (u64, u64) = (cfg.get("horizon")?, cfg.get("trials")?);
    if n_min < 2 || n_min > n_max {
        return Err(CliError::Config(format!("need 2 <= n_min <= n_max, got {n_min}..{n_max}")));
    }
    let seed = cfg.seed();
    let ns: Vec<u64> = (n_min..=n_max).collect();
    let series = driver(cfg)?.interval_cover_z_series(&ns, cap, trials, seed)?;
    let mut table = Table::estimates(
        "zwalk",
        &["interval_top", "z_budget", "mean_z_steps", "max_z_steps", "bias_delta", "label"],
    );
    let mut summary = Vec::new();
    for (n, z) in series.entries() {
        let mut row = estimate_cells("interval_cover_z", None, n, 3, &z.estimate);
        row.extend([
            (n / 3).to_string(),
            z.z_budget.to_string(),
            z.mean_z_steps.to_string(),
            z.max_z_steps.to_string(),
            opt_cell(z.estimate.bias_delta),
            "exploratory".to_string(),
        ]);
        table.push(row);
        summary.push(json!({ "n": n, "result": z }));
    }
    Ok(RunOutput {
        tables: vec![table],
        summary,
        ..Default::default()
    })
}

/// Paired cover estimates for the staircase and axis paths.
pub fn cmd_compare_paths(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let n: u64 = cfg.get("n")?;
    let (horizon, trials): (u64, u64) = (cfg.get("horizon")?, cfg.get("trials")?);
    let seed = cfg.seed();
    let cmp = driver(cfg)?.compare_paths(n, horizon, trials, seed)?;
    let mut table = Table::estimates(
        "compare_paths",
        &["trace_size", "difference", "diff_ci_low", "diff_ci_high"],
    );
    for (name, e, size) in [
        ("compare_paths_staircase", &cmp.staircase, cmp.staircase_size),
        ("compare_paths_axis", &cmp.axis, cmp.axis_size),
    ] {
        let mut row = estimate_cells(name, None, n, 3, e);
        row.extend([
            size.to_string(),
            cmp.difference.to_string(),
            cmp.diff_ci_low.to_string(),
            cmp.diff_ci_high.to_string(),
        ]);
        table.push(row);
    }
    let mut files = Vec::new();
    if cfg.get::<bool>("dump_path")? {
        for (name, path) in [("staircase_path.txt", staircase_path(3, n)?), ("axis_path.txt", axis_path(3, n)?)] {
            let mut bytes = Vec::new();
            path.write_text(&mut bytes).map_err(|e| CliError::Io(e.to_string()))?;
            files.push((name.to_string(), bytes));
        }
    }
    Ok(RunOutput {
        tables: vec![table],
        files,
        summary: vec![json!({ "comparison": cmp })],
        failure: None,
    })
}
