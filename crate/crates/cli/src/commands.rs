use owakm::approx::{approx_solve, ApproxOptions, ApproxReport};
use owakm::exact::{binomial, exact_solve_with, ExactOptions};
use owakm::gen::{gen_cities, gen_random, gen_x3c, CostMode, X3c};
use owakm::io::{self as oio, rational_to_json};
use owakm::lp::{build_lp, export::to_mps, solve_lp, waterfill_per_client};
use owakm::reduce::{reduce_owa_to_ft, verify_cost_identity};
use owakm::rounding::{enumerate_distribution, round_tree, TournamentTree};
use owakm::scalar::parse_rational;
use owakm::{BigRational, Committee, ExactInstance, Instance, Instance64, Weights64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::output::{csv_writer, histogram, read_input, resolve_seed, usage, write_json, CliResult};
use crate::{
    BoundArgs, ExactArgs, Format, GenCommand, LpArgs, PavArgs, ReduceArgs, RoundArgs, SolveArgs,
};

/// Enumeration budget used when a command adds the exact optimum on its own.
const AUTO_EXACT_LIMIT: u128 = 200_000;

fn rational(text: &str, what: &str) -> CliResult<BigRational> {
    match parse_rational(text) {
        Some(r) => Ok(r),
        None => usage(format!("{what}: cannot read {text:?} as a number")),
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .map(|t| t.trim().parse().or_else(|_| usage(format!("{what}: bad entry {t:?}"))))
        .collect()
}

/// `harmonic`, `geometric:<p>`, `top_r:<r>` or `custom:<w1>,<w2>,...`.
fn parse_weights(spec: &str, k: usize) -> CliResult<Weights64> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    Ok(match kind {
        "harmonic" => Weights64::harmonic(k)?,
        "geometric" => Weights64::geometric(rational(arg, "geometric p")?, k)?,
        "top_r" => {
            let r = arg.parse().or_else(|_| usage(format!("top_r: bad r {arg:?}")))?;
            Weights64::top_r(r, k)?
        }
        "custom" => {
            let values = arg.split(',').map(|t| rational(t, "custom weight")).collect::<CliResult<Vec<_>>>()?;
            if values.len() != k {
                return usage(format!("custom weights have {} entries, k = {k}", values.len()));
            }
            Weights64::custom_exact(values)?
        }
        other => return usage(format!("unknown weight family {other:?}")),
    })
}

fn parse_mode(spec: &str) -> CliResult<CostMode> {
    Ok(match spec.split_once(':') {
        None if spec == "metric" => CostMode::Metric,
        None if spec == "nonmetric" => CostMode::NonMetric,
        Some(("approval", d)) => match d.parse::<f64>() {
            Ok(density) if (0.0..=1.0).contains(&density) => CostMode::Approval { density },
            _ => return usage(format!("approval density {d:?} not in [0, 1]")),
        },
        _ => return usage(format!("unknown cost mode {spec:?}")),
    })
}

fn parse_tree(spec: &str, m: usize) -> CliResult<TournamentTree> {
    let tree = match spec {
        "balanced" => TournamentTree::balanced(m)?,
        "linear" => TournamentTree::linear(m)?,
        _ => match spec.strip_prefix("file:") {
            Some(path) => TournamentTree::from_json(&read_input(path)?)?,
            None => return usage(format!("unknown tree {spec:?}")),
        },
    };
    if tree.num_leaves() != m {
        return usage(format!("tree has {} leaves, expected {m}", tree.num_leaves()));
    }
    Ok(tree)
}

fn committee_json(c: &Committee) -> Value {
    json!(c.indices())
}

/// JSON number, or `null` for non-finite values.
fn num(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn opt_cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn report_summary(rep: &ApproxReport) {
    let best = rep.best_trial();
    eprintln!("lp_objective: {}", rep.lp_objective);
    if rep.degenerate {
        eprintln!("lp value is zero; ratios are degenerate");
    }
    eprintln!("cost: mean {} stdev {} min {} max {}", rep.cost.mean, rep.cost.stdev, rep.cost.min, rep.cost.max);
    eprintln!("ratio_vs_lp: mean {} stdev {}", rep.ratio_vs_lp.mean, rep.ratio_vs_lp.stdev);
    eprintln!("best: trial {} committee {} cost {}", best.trial, best.committee, best.cost);
    if let Some(opt) = rep.opt {
        eprintln!("opt: {opt} best ratio_vs_opt {}", opt_cell(best.ratio_vs_opt));
    }
}

pub fn solve(a: SolveArgs, format: Option<Format>, parallel: bool) -> CliResult {
    let inst: Instance64 = oio::instance_from_json(&read_input(&a.input.instance)?)?;
    let seed = resolve_seed(a.seed);
    let opts = ApproxOptions {
        trials: a.trials,
        seed,
        tree: Some(parse_tree(&a.tree, inst.num_facilities())?),
        parallel,
        with_exact: a.exact,
        exact_limit: AUTO_EXACT_LIMIT,
        ..Default::default()
    };
    let rep = approx_solve(&inst, &opts)?;
    report_summary(&rep);
    if a.exact && rep.opt.is_none() {
        eprintln!("opt: skipped, more than {AUTO_EXACT_LIMIT} committees");
    }
    let out = a.out.as_deref();
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv_writer(out)?;
            w.write_record(["trial", "seed", "cost", "ratio_vs_lp", "committee"])?;
            for t in &rep.trials {
                w.write_record([
                    t.trial.to_string(),
                    t.seed.to_string(),
                    t.cost.to_string(),
                    t.ratio_vs_lp.to_string(),
                    t.committee.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Json => {
            let trials: Vec<Value> = rep
                .trials
                .iter()
                .map(|t| {
                    json!({
                        "trial": t.trial,
                        "seed": t.seed,
                        "cost": t.cost,
                        "ratio_vs_lp": num(t.ratio_vs_lp),
                        "ratio_vs_opt": t.ratio_vs_opt.map(num),
                        "committee": committee_json(&t.committee),
                    })
                })
                .collect();
            let best = rep.best_trial();
            write_json(
                out,
                &json!({
                    "seed": seed,
                    "lp_objective": rep.lp_objective,
                    "degenerate": rep.degenerate,
                    "opt": rep.opt,
                    "cost": {"mean": rep.cost.mean, "stdev": rep.cost.stdev, "min": rep.cost.min, "max": rep.cost.max},
                    "ratio_vs_lp": {"mean": num(rep.ratio_vs_lp.mean), "stdev": num(rep.ratio_vs_lp.stdev)},
                    "best": {"trial": best.trial, "cost": best.cost, "committee": committee_json(&best.committee)},
                    "trials": trials,
                }),
            )?;
        }
    }
    if let Some(path) = &a.histogram {
        let ratios: Vec<f64> = rep.trials.iter().map(|t| t.ratio_vs_lp).collect();
        let mut w = csv_writer(Some(path))?;
        w.write_record(["ratio", "count"])?;
        for (edge, count) in histogram(&ratios, a.bins) {
            w.write_record([edge.to_string(), count.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

fn emit_optimum(out: Option<&std::path::Path>, format: Format, com: &Committee, value: Value, cell: String) -> CliResult {
    match format {
        Format::Json => write_json(out, &json!({"committee": committee_json(com), "value": value})),
        Format::Csv => {
            let mut w = csv_writer(out)?;
            w.write_record(["committee", "value"])?;
            w.write_record([com.to_string(), cell])?;
            w.flush()?;
            Ok(())
        }
    }
}

pub fn exact(a: ExactArgs, format: Option<Format>, parallel: bool) -> CliResult {
    let text = read_input(&a.input.instance)?;
    let opts = ExactOptions {
        max_committees: a.limit,
        parallel,
    };
    let format = format.unwrap_or(Format::Json);
    if a.rational {
        let inst: ExactInstance = oio::instance_from_json(&text)?;
        let (com, v) = exact_solve_with(&inst, &opts)?;
        emit_optimum(a.out.as_deref(), format, &com, rational_to_json(&v), v.to_string())
    } else {
        let inst: Instance64 = oio::instance_from_json(&text)?;
        let (com, v) = exact_solve_with(&inst, &opts)?;
        emit_optimum(a.out.as_deref(), format, &com, json!(v), v.to_string())
    }
}

pub fn lp(a: LpArgs, format: Option<Format>) -> CliResult {
    let inst: Instance64 = oio::instance_from_json(&read_input(&a.input.instance)?)?;
    let prog = build_lp(&inst)?;
    if let Some(path) = &a.mps {
        std::fs::write(path, to_mps(&prog, "OWAKM")).map_err(|source| crate::output::CliError::File {
            path: path.clone(),
            source,
        })?;
        eprintln!("wrote {} variables, {} rows to {}", prog.num_variables(), prog.num_rows(), path.display());
        if a.export_only {
            return Ok(());
        }
    }
    let sol = solve_lp(&prog)?;
    let wf = waterfill_per_client(&inst, &sol.y)?;
    let gap = wf
        .iter()
        .zip(&sol.per_client_lp_cost)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    eprintln!("objective: {} iterations: {} waterfill_gap: {gap:e}", sol.objective, sol.iterations);
    let out = a.out.as_deref();
    match format.unwrap_or(Format::Json) {
        Format::Json => write_json(
            out,
            &json!({
                "objective": sol.objective,
                "y": sol.y,
                "per_client_lp_cost": sol.per_client_lp_cost,
                "waterfill_gap": gap,
                "iterations": sol.iterations,
                "variables": prog.num_variables(),
                "rows": prog.num_rows(),
            }),
        ),
        Format::Csv => {
            let mut w = csv_writer(out)?;
            w.write_record(["item", "index", "value"])?;
            w.write_record(["objective".to_string(), String::new(), sol.objective.to_string()])?;
            for (i, v) in sol.y.iter().enumerate() {
                w.write_record(["y".to_string(), i.to_string(), v.to_string()])?;
            }
            for (j, v) in sol.per_client_lp_cost.iter().enumerate() {
                w.write_record(["client_cost".to_string(), j.to_string(), v.to_string()])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn round(a: RoundArgs, format: Option<Format>) -> CliResult {
    let y = a.y.split(',').map(|t| rational(t, "y")).collect::<CliResult<Vec<_>>>()?;
    let tree = parse_tree(&a.tree, y.len())?;
    let seed = resolve_seed(a.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0usize; y.len()];
    for _ in 0..a.samples {
        for (c, b) in counts.iter_mut().zip(round_tree(&y, &tree, &mut rng)?.bits) {
            *c += usize::from(b);
        }
    }
    let exact = match enumerate_distribution(&y, &tree) {
        Ok(d) => Some(d.marginals()),
        Err(e) if e.is_limit() => {
            eprintln!("exact marginals skipped: {e}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let empirical: Vec<f64> = counts.iter().map(|&c| c as f64 / a.samples.max(1) as f64).collect();
    let out = a.out.as_deref();
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv_writer(out)?;
            w.write_record(["index", "y", "empirical", "exact"])?;
            for (i, yi) in y.iter().enumerate() {
                let ex = exact.as_ref().map_or_else(String::new, |m| m[i].to_string());
                w.write_record([i.to_string(), yi.to_string(), empirical[i].to_string(), ex])?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Json => write_json(
            out,
            &json!({
                "seed": seed,
                "samples": a.samples,
                "y": y.iter().map(rational_to_json).collect::<Vec<_>>(),
                "empirical": empirical,
                "exact": exact.map(|m| m.iter().map(rational_to_json).collect::<Vec<_>>()),
            }),
        ),
    }
}

pub fn bound(a: BoundArgs, format: Option<Format>) -> CliResult {
    let table = owakm::bound::bound_table::<f64>(a.lmax)?;
    let best = table
        .iter()
        .fold(&table[0], |acc, r| if r.ratio_upper > acc.ratio_upper { r } else { acc });
    eprintln!("max ratio_upper {} at ell = {}", best.ratio_upper, best.ell);
    let out = a.out.as_deref();
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv_writer(out)?;
            w.write_record(["ell", "ratio_upper"])?;
            for r in &table {
                w.write_record([r.ell.to_string(), r.ratio_upper.to_string()])?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .iter()
                .map(|r| json!({"ell": r.ell, "ratio_upper": r.ratio_upper, "tail_bound": r.tail_bound}))
                .collect();
            write_json(out, &json!({"max": {"ell": best.ell, "ratio_upper": best.ratio_upper}, "rows": rows}))
        }
    }
}

fn emit_instance<S: owakm::Scalar>(inst: &Instance<S>, out: Option<&std::path::Path>, format: Format) -> CliResult {
    match format {
        Format::Json => write_json(out, &oio::instance_to_value(inst)),
        Format::Csv => {
            let mut w = csv_writer(out)?;
            w.write_record((0..inst.num_facilities()).map(|i| format!("f{i}")))?;
            for row in inst.costs() {
                w.write_record(row.iter().map(|c| c.as_f64().to_string()))?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn gen(g: GenCommand, format: Option<Format>) -> CliResult {
    let format = format.unwrap_or(Format::Json);
    match g {
        GenCommand::Random(a) => {
            let seed = resolve_seed(a.seed);
            let weights = parse_weights(&a.weights, a.k)?;
            let inst = gen_random(a.m, a.n, weights, parse_mode(&a.mode)?, seed)?;
            emit_instance(&inst, a.out.as_deref(), format)
        }
        GenCommand::Cities(a) => {
            let pops: Vec<usize> = parse_list(&a.pops, "pops")?;
            let city = gen_cities(&pops, a.k, parse_weights(&a.weights, a.k)?)?;
            let split: Vec<String> = city.proportional_split(&pops).iter().map(ToString::to_string).collect();
            eprintln!("proportional split: {} (clean: {})", split.join(" "), city.clean);
            emit_instance(&city.instance, a.out.as_deref(), format)
        }
        GenCommand::X3c(a) => {
            let x3c = X3c::parse(&read_input(&a.input)?)?;
            let lambda = rational(&a.lambda, "lambda")?;
            let built = gen_x3c::<f64>(&x3c, &lambda, a.p)?;
            eprintln!(
                "k = {} p = {} helpers = {} dummies = {}",
                built.k, built.p, built.helpers, built.dummies
            );
            emit_instance(&built.instance, a.out.as_deref(), format)
        }
    }
}

pub fn reduce(a: ReduceArgs, format: Option<Format>) -> CliResult {
    let inst: ExactInstance = oio::instance_from_json(&read_input(&a.input.instance)?)?;
    let ft = reduce_owa_to_ft(&inst)?;
    eprintln!("Q = {} FT clients = {}", ft.q(), ft.clients().len());
    if a.verify > 0 {
        let rep = verify_cost_identity(&inst, a.verify, a.seed)?;
        eprintln!("identity: {} samples, {} violations", rep.samples, rep.violations);
        if !rep.holds() {
            return usage(format!("cost identity failed, max deviation {}", rep.max_deviation));
        }
    }
    let out = a.out.as_deref();
    match format.unwrap_or(Format::Json) {
        Format::Json => write_json(out, &oio::ft_to_value(&ft)),
        Format::Csv => {
            let mut w = csv_writer(out)?;
            w.write_record(["client", "origin", "r", "mult", "costs"])?;
            for (idx, c) in ft.clients().iter().enumerate() {
                let costs: Vec<String> = c.costs.iter().map(ToString::to_string).collect();
                w.write_record([
                    idx.to_string(),
                    c.origin.map_or_else(String::new, |o| o.to_string()),
                    c.requirement.to_string(),
                    c.multiplicity.to_string(),
                    costs.join(" "),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
    }
}

pub fn pav(a: PavArgs, format: Option<Format>, parallel: bool) -> CliResult {
    let text = read_input(&a.ballots.to_string_lossy())?;
    let m = a.candidates.unwrap_or_else(|| oio::candidates_in(&text));
    let ballots = oio::parse_ballots(&text, m, a.allow_empty)?;
    let inst = Instance64::from_approval_ballots(&ballots, m, a.k)?;
    let seed = resolve_seed(a.seed);
    let rep = approx_solve(
        &inst,
        &ApproxOptions {
            trials: a.trials,
            seed,
            parallel,
            ..Default::default()
        },
    )?;
    let exact = if binomial(m, a.k) <= AUTO_EXACT_LIMIT {
        let opts = ExactOptions {
            max_committees: AUTO_EXACT_LIMIT,
            parallel,
        };
        Some(exact_solve_with(&inst, &opts)?)
    } else {
        eprintln!("exact optimum skipped, more than {AUTO_EXACT_LIMIT} committees");
        None
    };
    let opt = exact.as_ref().map(|(_, v)| *v);
    let vs_opt = |c: f64| opt.map(|o| if o > 0.0 { c / o } else if c > 0.0 { f64::INFINITY } else { 1.0 });
    let best = rep.best_trial();
    let lp = rep.lp_objective;
    let vs_lp = |c: f64| if lp > 0.0 { c / lp } else if c > 0.0 { f64::INFINITY } else { 1.0 };
    eprintln!("voters: {} candidates: {m} lp_objective: {lp}", ballots.len());
    let out = a.out.as_deref();
    match format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = csv_writer(out)?;
            w.write_record(["method", "committee", "cost", "ratio_vs_lp", "ratio_vs_opt"])?;
            w.write_record([
                "best_trial".to_string(),
                best.committee.to_string(),
                best.cost.to_string(),
                vs_lp(best.cost).to_string(),
                opt_cell(vs_opt(best.cost)),
            ])?;
            w.write_record([
                "mean".to_string(),
                String::new(),
                rep.cost.mean.to_string(),
                vs_lp(rep.cost.mean).to_string(),
                opt_cell(vs_opt(rep.cost.mean)),
            ])?;
            if let Some((com, v)) = &exact {
                w.write_record([
                    "exact".to_string(),
                    com.to_string(),
                    v.to_string(),
                    vs_lp(*v).to_string(),
                    "1".to_string(),
                ])?;
            }
            w.flush()?;
            Ok(())
        }
        Format::Json => write_json(
            out,
            &json!({
                "seed": seed,
                "lp_objective": lp,
                "best_trial": {"committee": committee_json(&best.committee), "cost": best.cost},
                "mean_cost": rep.cost.mean,
                "mean_ratio_vs_lp": num(vs_lp(rep.cost.mean)),
                "mean_ratio_vs_opt": vs_opt(rep.cost.mean).map(num),
                "exact": exact.as_ref().map(|(c, v)| json!({"committee": committee_json(c), "cost": v})),
            }),
        ),
    }
}
