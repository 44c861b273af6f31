use std::sync::Arc;
use std::time::Instant;

use clap::Parser;

use super::record::{ResultItem, RunRecord};
use super::{Cli, Command, ExactArgs, Reference, SimulateArgs, SweepArgs, What};
use crate::dp;
use crate::error::{Error, Result};
use crate::exact;
use crate::model::ModelParams;
use crate::montecarlo::{run_batch, BatchConfig, Statistic};
use crate::oracle;
use crate::pmf::Pmf;
use crate::stats;

/// Largest depth for which `increasing-mean` also reports the exact rational.
const EXACT_RATIONAL_MAX_DEPTH: u32 = 200;

fn bernoulli(a: &ExactArgs) -> Result<ModelParams> {
    ModelParams::new(a.model.branching()?, a.model.depth()?, a.model.prob()?)
}

fn continuous(a: &ExactArgs) -> Result<ModelParams> {
    ModelParams::continuous(a.model.branching()?, a.model.depth()?)
}

fn push_pmf(r: &mut RunRecord, name: &str, pmf: &Pmf) {
    for (v, m) in pmf.iter() {
        r.push(ResultItem::indexed(name, v, m));
    }
}

pub fn cmd_exact(a: &ExactArgs) -> Result<RunRecord> {
    let started = Instant::now();
    let mut r = RunRecord::new("exact");
    r.param("what", a.what.to_possible_value_name());
    r.param("branching", a.model.branching);
    r.param("depth", a.model.depth);
    r.param("prob", a.model.prob);
    r.param("length", a.model.length);
    r.param("x", a.x);
    r.param("a", a.a);
    r.param("side", a.side.map(|s| format!("{s:?}").to_lowercase()));
    r.param("s", a.s);
    r.param("t", a.t);

    match a.what {
        What::Moments => {
            let m = exact::theta_second_moment(&bernoulli(a)?)?;
            r.value("first_moment", m.first_moment);
            r.value("second_moment", m.second_moment);
            if let Some(s) = m.s_correction {
                r.value("s_correction", s);
            }
            r.value("lower_bound", m.lower_bound);
        }
        What::QCurve => {
            let curve = exact::q_recursion(a.model.branching()?, a.model.prob()?, a.model.depth()? as usize)?;
            for (i, q) in curve.q_values.iter().enumerate() {
                r.push(ResultItem::indexed("q", i as i64 + 1, *q));
            }
            r.value("limit_q", curve.limit_q);
            r.value("survival", curve.survival);
        }
        What::Survival => {
            let (nb, p) = (a.model.branching()?, a.model.prob()?);
            let curve = exact::q_recursion(nb, p, 0)?;
            r.value("survival", curve.survival);
            r.value("limit_q", curve.limit_q);
            r.value("lower_bound", exact::survival_lower_bound(nb, p)?);
        }
        What::PathCount => {
            let m = exact::path_count(a.model.branching()?, a.model.depth()?, a.model.length()?)?;
            r.push(ResultItem::new("path_count", exact::big_to_f64(&m)).with_exact(&m));
        }
        What::Overlap => {
            let k = a.model.length()?;
            let prm = ModelParams::continuous(a.model.branching()?, a.model.depth()?)?;
            let rep = exact::overlap_counts(&prm, k)?;
            r.push(ResultItem::new("path_count", exact::big_to_f64(&rep.path_count)).with_exact(&rep.path_count));
            for m in 1..=k + 1 {
                let am = rep.a(m);
                r.push(ResultItem::indexed("a", m as i64, exact::big_to_f64(am)).with_exact(am));
                let bound = rep.bound(m);
                r.push(ResultItem::indexed("bound", m as i64, exact::big_to_f64(&bound)).with_exact(&bound));
                if let Some(cf) = exact::overlap_count_closed_form(prm.branching, prm.depth, k, m) {
                    let v = cf.to_string().parse::<f64>().unwrap_or(f64::NAN);
                    r.push(ResultItem::indexed("summed_closed_form", m as i64, v).with_exact(&cf));
                }
                for (j, b) in rep.profile[m as usize - 1].iter().enumerate() {
                    r.push(ResultItem::indexed(format!("profile_m{m}"), j as i64, exact::big_to_f64(b)).with_exact(b));
                }
            }
        }
        What::ExpectedOpen => {
            let prm = bernoulli(a)?;
            r.value(
                "expected_open_count",
                exact::expected_open_count(&prm, a.model.length()?)?,
            );
        }
        What::VarianceBound => {
            let prm = bernoulli(a)?;
            let k = a.model.length()?;
            r.value("expected_open_count", exact::expected_open_count(&prm, k)?);
            r.value("variance_bound", exact::variance_bound_open(&prm, k)?);
        }
        What::Lln => {
            r.value("lln_limit", exact::lln_limit(a.model.branching()?, a.model.prob()?)?);
        }
        What::IncreasingMean => {
            let prm = continuous(a)?;
            let k = a.model.length()?;
            let mut item = ResultItem::new("expected_increasing_count", exact::expected_increasing_count(&prm, k)?);
            if prm.depth <= EXACT_RATIONAL_MAX_DEPTH {
                item = item.with_exact(exact::expected_increasing_count_exact(&prm, k)?);
            }
            r.push(item);
        }
        What::Centering => {
            let c = exact::solve_b_f(a.model.branching()?, a.model.depth()?)?;
            r.value("b", c.b);
            r.value("f", c.f);
            r.value("frac", c.frac);
            r.value("floor", c.floor as f64);
        }
        What::Gamma => {
            let x = a.x.ok_or_else(|| Error::param("x", "missing -x"))?;
            let g = exact::gamma_ratio(a.model.branching()?, a.model.depth()?, x)?;
            r.value("exact_ratio", g.exact_ratio);
            r.value("stirling_equivalent", g.stirling_equivalent);
        }
        What::Tv => {
            let t = exact::tv_bound(a.model.branching()?, a.model.length()?)?;
            r.value("q", t.q);
            r.value("d", t.d);
        }
        What::Window => {
            let w = exact::increasing_window_prediction(a.model.branching()?, a.model.depth()?)?;
            r.value("b", w.b);
            r.value("f", w.f);
            r.value("frac", w.frac);
            for (i, k) in [w.window.0, w.window.1, w.window.2].into_iter().enumerate() {
                r.push(ResultItem::indexed("window", i as i64, k as f64));
            }
            r.value("window_mass", w.window_mass);
            for (&k, &m) in &w.point_masses {
                r.push(ResultItem::indexed("point_mass", k, m));
            }
            for (&k, &l) in &w.lambda_at {
                r.push(ResultItem::indexed("lambda", k, l));
            }
            for (&k, t) in &w.tv_bound_at {
                r.push(ResultItem::indexed("tv_bound", k, t.d));
            }
            if let Some((side, a_val)) = w.corollary {
                r.value("corollary_a", a_val);
                r.value("corollary_lower_mass", exact::corollary_mass(w.branching, a_val, side)?);
                r.meta.notes.push(format!("corollary side: {side:?}").to_lowercase());
            }
        }
        What::Corollary => {
            let side = a.side.ok_or_else(|| Error::param("side", "missing --side"))?;
            let av = a.a.ok_or_else(|| Error::param("a", "missing --a"))?;
            let law = exact::corollary_law(a.model.branching()?, av, side.into())?;
            r.value("lower_offset", law.lower_offset as f64);
            r.value("lower_mass", law.lower_mass);
            r.value("upper_mass", law.upper_mass);
        }
        What::Pair => {
            let k = a.model.length()?;
            let s = a.s.ok_or_else(|| Error::param("s", "missing -s"))?;
            let t = a.t.ok_or_else(|| Error::param("t", "missing -t"))?;
            let closed = exact::pair_increasing_closed_form(k, s, t)?;
            r.value("closed_form", closed);
            let (pa, pb) = oracle::pair_geometry(k, s, t)?;
            match oracle::pair_increasing_bruteforce(&pa, &pb) {
                Ok(exact_p) => {
                    let v = *exact_p.numer() as f64 / *exact_p.denom() as f64;
                    r.push(ResultItem::new("oracle", v).with_exact(exact_p));
                    if (v - closed).abs() > 1e-12 {
                        r.meta
                            .notes
                            .push("closed form disagrees with the rank-order oracle".into());
                    }
                }
                Err(Error::ScaleGuard { .. }) => {
                    r.meta.notes.push("pair too large for the rank-order oracle".into());
                }
                Err(e) => return Err(e),
            }
        }
        What::ThetaPmf => {
            let pmf = dp::theta_pmf(&bernoulli(a)?)?;
            push_pmf(&mut r, "mass", &pmf);
            r.value("mean", pmf.mean());
        }
        What::LongestPmf => {
            let pmf = dp::longest_open_pmf(&bernoulli(a)?)?;
            push_pmf(&mut r, "mass", &pmf);
            r.value("mean", pmf.mean());
        }
    }
    r.meta.wall_time_s = started.elapsed().as_secs_f64();
    Ok(r)
}

trait PossibleName {
    fn to_possible_value_name(&self) -> String;
}

impl<T: clap::ValueEnum> PossibleName for T {
    fn to_possible_value_name(&self) -> String {
        self.to_possible_value()
            .map(|v| v.get_name().to_string())
            .unwrap_or_default()
    }
}

fn simulation_params(a: &SimulateArgs, stat: Statistic) -> Result<ModelParams> {
    let (nb, n) = (a.model.branching()?, a.model.depth()?);
    if stat.needs_prob() {
        ModelParams::new(nb, n, a.model.prob()?)
    } else {
        ModelParams::continuous(nb, n)
    }
}

fn reference_law(a: &SimulateArgs, stat: Statistic, prm: &ModelParams) -> Result<Option<(Pmf, f64)>> {
    Ok(match (a.reference, stat) {
        (Reference::None, _) => None,
        (Reference::Dp, Statistic::Theta) => Some((dp::theta_pmf(prm)?, a.slack.unwrap_or(0.0))),
        (Reference::Dp, Statistic::LongestOpen) => Some((dp::longest_open_pmf(prm)?, a.slack.unwrap_or(0.0))),
        (Reference::PoissonWindow, Statistic::LongestIncreasing) => Some((
            exact::increasing_envelope_pmf(prm.branching, prm.depth)?,
            a.slack.unwrap_or(crate::stats::ENVELOPE_SLACK),
        )),
        (r, s) => {
            return Err(Error::param(
                "ref",
                format!(
                    "reference {} is not available for {}",
                    r.to_possible_value_name(),
                    s.name()
                ),
            ))
        }
    })
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<RunRecord> {
    let started = Instant::now();
    let stat: Statistic = a.stat.into();
    let prm = simulation_params(a, stat)?;
    let k = if stat == Statistic::IncreasingCount {
        Some(a.model.length()?)
    } else {
        None
    };
    let reference = reference_law(a, stat, &prm)?;

    let mut r = RunRecord::new("simulate");
    r.param("stat", stat.name());
    r.param("branching", prm.branching);
    r.param("depth", prm.depth);
    r.param("prob", prm.open_prob);
    r.param("length", k);
    r.param("samples", a.samples);
    r.param("ref", a.reference.to_possible_value_name());
    r.meta.base_seed = Some(a.seed);
    r.meta.workers = a.workers;

    let mut config = BatchConfig {
        workers: a.workers,
        work_cap: a.work_cap,
        progress: None,
    };
    if a.progress {
        let step = (a.samples / 100).max(1);
        config.progress = Some(Arc::new(move |done, total| {
            if done % step == 0 || done == total {
                eprint!("\r{done}/{total}");
                if done == total {
                    eprintln!();
                }
            }
        }));
    }
    let batch = run_batch(&prm, stat, k, a.samples, a.seed, &config)?;
    r.value("replicates", batch.replicates as f64);
    if batch.samples.is_empty() {
        r.meta.wall_time_s = started.elapsed().as_secs_f64();
        return Ok(r);
    }

    let summary = stats::summarize(&batch.samples)?;
    r.value("mean", summary.mean);
    r.value("sd", summary.sd);
    r.value("std_error", summary.std_error);
    let law = stats::empirical_law(&batch)?;
    for (&v, &c) in &law.counts {
        r.push(ResultItem::indexed("count", v, c as f64).with_exact(c));
    }

    if stat == Statistic::LongestIncreasing && prm.depth >= 2 {
        let w = exact::increasing_window_prediction(prm.branching, prm.depth)?;
        let (lo, hi) = (w.window.0, w.window.2);
        let hits = law.count_where(|v| (lo..=hi).contains(&v));
        r.value("window_mass_empirical", hits as f64 / law.total as f64);
        r.value("window_mass_predicted", w.window_mass);
    }
    if let Some((reference, slack)) = reference {
        let cmp = stats::compare_laws(&law, &reference, a.delta, slack)?;
        r.value("sup_distance", cmp.sup_distance);
        r.value("tv_distance", cmp.tv_distance);
        r.value("dkw_band", cmp.dkw_band);
        r.value("slack", cmp.slack);
        r.value("pass", if cmp.pass { 1.0 } else { 0.0 });
        for (&v, &d) in &cmp.deviations {
            r.push(ResultItem::indexed("deviation", v, d));
        }
    }
    if a.emit_samples {
        for (i, &s) in batch.samples.iter().enumerate() {
            r.push(ResultItem::indexed("sample", i as i64, s as f64));
        }
    }
    r.meta.wall_time_s = started.elapsed().as_secs_f64();
    Ok(r)
}

/// Flags a sweep may vary, with their short forms and whether they take
/// integers.
const SWEEPABLE: &[(&str, Option<&str>, bool)] = &[
    ("branching", Some("-N"), true),
    ("depth", Some("-n"), true),
    ("prob", Some("-p"), false),
    ("length", Some("-k"), true),
    ("samples", Some("-K"), true),
    ("seed", None, true),
    ("x", Some("-x"), false),
    ("a", None, false),
];

fn sweep_values(a: &SweepArgs) -> Result<Vec<f64>> {
    if !a.values.is_empty() {
        return Ok(a.values.clone());
    }
    let (from, to, steps) = match (a.from, a.to, a.steps) {
        (Some(f), Some(t), Some(s)) if s >= 1 => (f, t, s),
        _ => return Err(Error::param("values", "give --values or all of --from, --to, --steps")),
    };
    if steps == 1 {
        return Ok(vec![from]);
    }
    if a.log && !(from > 0.0 && to > 0.0) {
        return Err(Error::param("log", "a geometric range needs positive ends"));
    }
    Ok((0..steps)
        .map(|i| {
            let u = i as f64 / (steps - 1) as f64;
            if a.log {
                (from.ln() + u * (to.ln() - from.ln())).exp()
            } else {
                from + u * (to - from)
            }
        })
        .collect())
}

/// Drops any occurrence of the swept flag (with its value) from `run`.
fn strip_flag(run: &[String], long: &str, short: Option<&str>) -> Vec<String> {
    let long_flag = format!("--{long}");
    let mut out = Vec::with_capacity(run.len());
    let mut skip = false;
    for arg in run {
        if skip {
            skip = false;
            continue;
        }
        if *arg == long_flag || Some(arg.as_str()) == short {
            skip = true;
            continue;
        }
        if arg.starts_with(&format!("{long_flag}=")) {
            continue;
        }
        out.push(arg.clone());
    }
    out
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<RunRecord> {
    let started = Instant::now();
    let &(long, short, integral) = SWEEPABLE
        .iter()
        .find(|(name, _, _)| *name == a.vary)
        .ok_or_else(|| Error::param("vary", format!("cannot sweep '{}'", a.vary)))?;
    let values = sweep_values(a)?;
    let base = strip_flag(&a.run, long, short);

    let mut r = RunRecord::new("sweep");
    r.param("vary", long);
    r.param("run", &a.run);
    r.param("values", &values);
    for &v in &values {
        let rendered = if integral {
            if v < 0.0 || v.fract().abs() > 1e-9 {
                return Err(Error::param(
                    "values",
                    format!("--{long} needs non-negative integers, got {v}"),
                ));
            }
            format!("{}", v.round() as u64)
        } else {
            format!("{v}")
        };
        let mut argv = vec!["treepath".to_string()];
        argv.extend(base.iter().cloned());
        argv.push(format!("--{long}={rendered}"));
        let cli = Cli::try_parse_from(&argv).map_err(|e| Error::param("run", e.to_string()))?;
        let inner = match cli.command {
            Command::Exact(x) => cmd_exact(&x)?,
            Command::Simulate(x) => {
                r.meta.base_seed.get_or_insert(x.seed);
                r.meta.workers = x.workers;
                cmd_simulate(&x)?
            }
            _ => return Err(Error::param("run", "sweep repeats only exact or simulate")),
        };
        if r.results.is_empty() {
            r.param("command", &inner.command);
        }
        r.results.extend(inner.results.into_iter().map(|mut item| {
            item.at = Some(v);
            item
        }));
    }
    r.meta.wall_time_s = started.elapsed().as_secs_f64();
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        let mut argv = vec!["treepath"];
        argv.extend_from_slice(args);
        Cli::try_parse_from(argv).unwrap().command
    }

    fn exact(args: &[&str]) -> RunRecord {
        match parse(&[&["exact"], args].concat()) {
            Command::Exact(a) => cmd_exact(&a).unwrap(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn exact_examples() {
        let r = exact(&["--what", "survival", "-N", "2", "-p", "0.75"]);
        assert!((r.first("survival").unwrap().value - 2.0 / 3.0).abs() < 1e-9);
        let r = exact(&["--what", "survival", "-N", "2", "-p", "0.5"]);
        assert_eq!(r.first("survival").unwrap().value, 0.0);
        let r = exact(&["--what", "window", "-N", "2", "-n", "16"]);
        let window: Vec<f64> = r
            .results
            .iter()
            .filter(|i| i.name == "window")
            .map(|i| i.value)
            .collect();
        assert_eq!(window, vec![7.0, 8.0, 9.0]);
        assert!((r.first("window_mass").unwrap().value - 0.9579).abs() < 1e-4);
    }

    #[test]
    fn every_what_runs() {
        let cases: &[&[&str]] = &[
            &["--what", "moments", "-N", "2", "-n", "3", "-p", "0.5"],
            &["--what", "q-curve", "-N", "2", "-n", "5", "-p", "0.6"],
            &["--what", "path-count", "-N", "3", "-n", "60", "-k", "2"],
            &["--what", "overlap", "-N", "2", "-n", "4", "-k", "2"],
            &["--what", "expected-open", "-N", "2", "-n", "4", "-k", "2", "-p", "0.3"],
            &["--what", "variance-bound", "-N", "2", "-n", "4", "-k", "2", "-p", "0.3"],
            &["--what", "lln", "-N", "2", "-p", "0.2"],
            &["--what", "increasing-mean", "-N", "2", "-n", "10", "-k", "4"],
            &["--what", "centering", "-N", "2", "-n", "1000"],
            &["--what", "gamma", "-N", "2", "-n", "100", "-x", "-0.5"],
            &["--what", "tv", "-N", "2", "-k", "10"],
            &["--what", "corollary", "-N", "2", "--a", "0", "--side", "low"],
            &["--what", "pair", "-k", "1", "-s", "0", "-t", "0"],
            &["--what", "theta-pmf", "-N", "2", "-n", "3", "-p", "0.5"],
            &["--what", "longest-pmf", "-N", "2", "-n", "3", "-p", "0.5"],
        ];
        for c in cases {
            let r = exact(c);
            assert!(!r.results.is_empty(), "{c:?}");
        }
        let r = exact(&["--what", "pair", "-k", "1", "-s", "0", "-t", "0"]);
        assert_eq!(r.first("oracle").unwrap().exact.as_deref(), Some("1/3"));
        assert_eq!(r.first("closed_form").unwrap().value, 0.25);
        assert!(!r.meta.notes.is_empty());
        let r = exact(&["--what", "path-count", "-N", "3", "-n", "60", "-k", "2"]);
        assert!(r.first("path_count").unwrap().exact.as_ref().unwrap().len() > 20);
    }

    #[test]
    fn missing_flags_are_invalid() {
        match parse(&["exact", "--what", "survival", "-N", "2"]) {
            Command::Exact(a) => assert_eq!(cmd_exact(&a).unwrap_err().exit_code(), 1),
            _ => unreachable!(),
        }
    }

    #[test]
    fn simulate_with_dp_reference() {
        let cmd = parse(&[
            "simulate",
            "--stat",
            "longest-open",
            "-N",
            "2",
            "-n",
            "8",
            "-p",
            "0.4",
            "-K",
            "3000",
            "--seed",
            "3",
            "--ref",
            "dp",
        ]);
        let Command::Simulate(a) = cmd else { unreachable!() };
        let r = cmd_simulate(&a).unwrap();
        assert_eq!(r.first("pass").unwrap().value, 1.0);
        assert_eq!(r.meta.base_seed, Some(3));
    }

    #[test]
    fn simulate_rejects_mismatched_reference() {
        let cmd = parse(&[
            "simulate",
            "--stat",
            "theta",
            "-N",
            "2",
            "-n",
            "4",
            "-p",
            "0.5",
            "--ref",
            "poisson-window",
        ]);
        let Command::Simulate(a) = cmd else { unreachable!() };
        assert_eq!(cmd_simulate(&a).unwrap_err().exit_code(), 1);
    }

    #[test]
    fn sweep_over_prob() {
        let cmd = parse(&[
            "sweep", "--vary", "prob", "--from", "0.3", "--to", "0.7", "--steps", "3", "--", "exact", "--what",
            "survival", "-N", "2", "-p", "0.9",
        ]);
        let Command::Sweep(a) = cmd else { unreachable!() };
        let r = cmd_sweep(&a).unwrap();
        let surv: Vec<(f64, f64)> = r
            .results
            .iter()
            .filter(|i| i.name == "survival")
            .map(|i| (i.at.unwrap(), i.value))
            .collect();
        assert_eq!(surv.len(), 3);
        assert_eq!(surv[0], (0.3, 0.0));
        assert!((surv[2].1 - exact::survival_limit(2, 0.7).unwrap()).abs() < 1e-15);
        let csv = r.to_csv().unwrap();
        assert!(csv.starts_with("command,prob,name,index,value,exact\n"), "{csv}");
    }

    #[test]
    fn sweep_rejects_fractional_integers() {
        let cmd = parse(&[
            "sweep",
            "--vary",
            "depth",
            "--values",
            "2.5",
            "--",
            "exact",
            "--what",
            "centering",
            "-N",
            "2",
        ]);
        let Command::Sweep(a) = cmd else { unreachable!() };
        assert!(cmd_sweep(&a).is_err());
    }

    #[test]
    fn strip_flag_forms() {
        let run: Vec<String> = ["exact", "-p", "0.3", "--prob", "0.4", "--prob=0.5", "-N", "2"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(strip_flag(&run, "prob", Some("-p")), vec!["exact", "-N", "2"]);
    }
}
