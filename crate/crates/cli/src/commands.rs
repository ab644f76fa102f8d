use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use extremal_sv::cone::{tau, tau_numeric_oracle, McConfig, SquareMatrix};
use extremal_sv::limit::{constant_d, one_factor_ratio, ConeLimitMeasure, OneFactorModel, ResidualFactors};
use extremal_sv::lp::{construct_from_eta, eta_profile, solve_lp, sv_lag_lp, CaseTag, TailLp};
use extremal_sv::model::{EpsSpec, EtaSpec, ModelFile, SvModel};
use extremal_sv::simulate::{
    conditional_exceedance_probe, extremal_index, hill_eta, hill_tail_index, joint_exceedance_ratio,
    simulate_paths, Series, SimulationConfig, TailData,
};
use extremal_sv::verify::{self, CheckResult, VerifyOptions};

use crate::args::*;
use crate::output::{Cell, Report};

/// A failure reported as JSON on stderr with exit code 2.
#[derive(Debug)]
pub struct CliError {
    pub kind: String,
    pub message: String,
}

impl CliError {
    pub fn new(kind: &str, message: impl Into<String>) -> Self {
        Self { kind: kind.into(), message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new("invalid_input", message)
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind, "message": self.message }).to_string()
    }
}

impl From<extremal_sv::Error> for CliError {
    fn from(e: extremal_sv::Error) -> Self {
        Self::new(e.kind(), e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Output of a command plus the exit code it asks for.
pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
    /// Lines for stderr (progress, verdicts).
    pub notes: Vec<String>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self { report, exit_code: 0, notes: Vec::new() }
    }
}

pub fn run(command: &Command, g: &Global, workers: usize) -> CliResult<Outcome> {
    match command {
        Command::LpSolve(a) => lp_solve(a).map(Into::into),
        Command::Eta(a) => eta(a).map(Into::into),
        Command::Construct(a) => construct(a).map(Into::into),
        Command::Measure(a) => measure(a, g.seed, workers).map(Into::into),
        Command::Simulate(a) => simulate(a, g.seed, workers).map(Into::into),
        Command::Estimate(a) => estimate(a).map(Into::into),
        Command::Verify(a) => verify_cmd(a, g.seed, workers),
        Command::Tau(a) => tau_cmd(a).map(Into::into),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))
}

/// Parses `a..b` (inclusive) or `x,y,z`.
pub fn parse_lags(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::input(format!("cannot parse lags `{s}`"));
    let lags: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect::<CliResult<_>>()?
    };
    if lags.is_empty() || lags.contains(&0) {
        return Err(CliError::input("lags must be at least 1"));
    }
    Ok(lags)
}

pub fn parse_reals(s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("cannot parse number `{x}`")))
        })
        .collect()
}

/// A bare model file, or a `construct` output that wraps one.
pub fn load_model(path: &Path) -> CliResult<(ModelFile, SvModel)> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| CliError::new("invalid_model", format!("model file: {e}")))?;
    let inner = match value.get("result") {
        Some(r) if value.get("provenance").is_some() => r.clone(),
        _ => value,
    };
    let file = ModelFile::from_json(&inner.to_string())?;
    let model = file.to_model()?;
    Ok((file, model))
}

fn case_label(tag: CaseTag) -> String {
    match tag {
        CaseTag::TwoFactor { i, j } => format!("two_factor({i};{j})"),
        CaseTag::OneFactor { i } => format!("one_factor({i})"),
        CaseTag::NonUnique => "non_unique".into(),
    }
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(";")
}

fn lp_solve(args: &LpSolveArgs) -> CliResult<Report> {
    let lp = match (&args.lp, &args.a, &args.b) {
        (Some(path), _, _) => serde_json::from_str::<TailLp>(&read(path)?)
            .map_err(|e| CliError::input(format!("program file: {e}")))?
            .validated()?,
        (None, Some(a), Some(b)) => TailLp::new(parse_reals(a)?, parse_reals(b)?)?,
        _ => return Err(CliError::input("give --lp FILE or both --a and --b")),
    };
    let sol = solve_lp(&lp);
    let mut r = Report::table(
        "lp-solve",
        json!({ "a": lp.a(), "b": lp.b() }),
        vec!["objective", "eta", "case", "unique", "kappa", "dual_1", "dual_2"],
    );
    let (d1, d2) = sol.dual.unwrap_or((f64::NAN, f64::NAN));
    r.push(vec![
        sol.objective.into(),
        (1.0 / sol.objective).into(),
        case_label(sol.case_tag).into(),
        sol.unique.into(),
        join(&sol.kappa).into(),
        d1.into(),
        d2.into(),
    ]);
    let mut j = serde_json::to_value(&sol).expect("solution serializes");
    j["eta"] = json!(1.0 / sol.objective);
    r.json = Some(j);
    Ok(r)
}

fn eta(args: &EtaArgs) -> CliResult<Report> {
    let (file, model) = load_model(&args.model)?;
    let lags = parse_lags(&args.lags)?;
    let profile = eta_profile(&model.coeffs, &lags)?;
    let mut r = Report::table("eta", json!({ "model": file, "lags": lags }), vec!["h", "eta", "kappa_sum", "case"]);
    for l in &profile.lags {
        r.push(vec![l.h.into(), l.eta.into(), l.kappa_sum.into(), case_label(l.case_tag).into()]);
    }
    r.json = Some(serde_json::to_value(&profile).expect("profile serializes"));
    Ok(r)
}

fn construct(args: &ConstructArgs) -> CliResult<Report> {
    let target = parse_reals(&args.eta)?;
    let coeffs = construct_from_eta(&target)?;
    let file = ModelFile {
        coeffs: coeffs.values().to_vec(),
        eta: EtaSpec::Laplace,
        eps: EpsSpec::StandardNormal,
        scale: 1.0,
        decay_exponent: None,
    };
    let mut r = Report::table("construct", json!({ "target": target }), vec!["i", "alpha"]);
    for (i, a) in coeffs.values().iter().enumerate() {
        r.push(vec![i.into(), (*a).into()]);
    }
    r.json = Some(serde_json::to_value(&file).expect("model serializes"));
    Ok(r)
}

fn measure(args: &MeasureArgs, seed: u64, workers: usize) -> CliResult<Report> {
    let (file, model) = load_model(&args.model)?;
    let s0s = parse_reals(&args.s0)?;
    let shs = parse_reals(&args.sh)?;
    let lp = sv_lag_lp(&model.coeffs, args.h)?;
    let sol = solve_lp(&lp);
    let mc = McConfig { samples: args.samples, seed, workers };
    let mut r = Report::table(
        "measure",
        json!({ "model": file, "h": args.h, "s0": s0s, "sh": shs, "samples": args.samples, "returns": args.returns }),
        vec!["kind", "s0", "sh", "value", "stderr"],
    );
    match ConeLimitMeasure::from_solution(&sol, &lp)? {
        ConeLimitMeasure::Rectangle { .. } => {
            for &s0 in &s0s {
                for &sh in &shs {
                    let v = extremal_sv::limit::rectangle_measure(&sol, &lp, s0, sh)?;
                    r.push(vec!["rectangle".into(), s0.into(), sh.into(), v.into(), 0.0.into()]);
                }
            }
            if !args.returns {
                let d = constant_d(&sol, &lp, ResidualFactors::Exponential(model.eta), mc)?;
                r.push(vec![
                    "constant_d".into(),
                    f64::NAN.into(),
                    f64::NAN.into(),
                    d.value.value.into(),
                    d.value.stderr.into(),
                ]);
            }
        }
        ConeLimitMeasure::OneFactor { index, .. } => {
            let m = OneFactorModel {
                coeffs: &model.coeffs,
                eta: model.eta,
                eps: args.returns.then_some(model.eps),
            };
            for &s0 in &s0s {
                for &sh in &shs {
                    let v = one_factor_ratio(m, args.h, index, s0, sh, mc)?;
                    r.push(vec![
                        "one_factor_ratio".into(),
                        s0.into(),
                        sh.into(),
                        v.value.value.into(),
                        v.value.stderr.into(),
                    ]);
                }
            }
        }
    }
    Ok(r)
}

fn simulate(args: &SimulateArgs, seed: u64, workers: usize) -> CliResult<Report> {
    let (file, model) = load_model(&args.model)?;
    let mut config = SimulationConfig::new(model, args.t, args.r, seed)?.with_workers(workers);
    if let Some(l) = args.l {
        config = config.with_truncation(l)?;
    }
    let batch = simulate_paths(&config)?;
    let mut r = Report::table(
        "simulate",
        json!({ "model": file, "T": args.t, "R": args.r, "L": config.truncation }),
        vec!["replication", "t", "sigma", "x"],
    );
    r.config_hash = Some(batch.config_hash.clone());
    for (rep, p) in batch.paths.iter().enumerate() {
        for (t, (s, x)) in p.sigma.iter().zip(&p.x).enumerate() {
            r.push(vec![rep.into(), t.into(), (*s).into(), (*x).into()]);
        }
    }
    r.json = Some(json!({
        "config_hash": batch.config_hash,
        "seed": batch.seed,
        "truncation": config.truncation,
        "truncation_tail_bound": config.truncation_tail_bound(),
        "paths": batch.paths.iter().map(|p| json!({ "sigma": p.sigma, "x": p.x })).collect::<Vec<_>>(),
    }));
    Ok(r)
}

/// Reads the CSV written by `simulate` into one series per replication.
pub fn read_batch(text: &str, series: Series) -> CliResult<Vec<Vec<f64>>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| CliError::input("batch file is empty"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| c.trim() == name)
            .ok_or_else(|| CliError::input(format!("batch file lacks column `{name}`")))
    };
    let (rep_col, sigma_col, x_col) = (find("replication")?, find("sigma")?, find("x")?);
    let mut reps: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (n, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        let bad = || CliError::input(format!("batch line {}: `{line}`", n + 2));
        let rep: usize = f.get(rep_col).ok_or_else(bad)?.trim().parse().map_err(|_| bad())?;
        let num = |c: usize| -> CliResult<f64> { f.get(c).ok_or_else(bad)?.trim().parse().map_err(|_| bad()) };
        let v = match series {
            Series::Sigma => num(sigma_col)?,
            Series::X => num(x_col)?,
            Series::AbsX => num(x_col)?.abs(),
        };
        reps.entry(rep).or_default().push(v);
    }
    if reps.is_empty() {
        return Err(CliError::input("batch file has no rows"));
    }
    Ok(reps.into_values().collect())
}

fn estimate(args: &EstimateArgs) -> CliResult<Report> {
    let text = read(&args.batch)?;
    let series = match args.series {
        SeriesArg::Sigma => Series::Sigma,
        SeriesArg::X => Series::X,
        SeriesArg::AbsX => Series::AbsX,
    };
    let data = TailData::from_series(series, &read_batch(&text, series)?);
    let lags = parse_lags(&args.h)?;
    let digest = format!("{:x}", Sha256::digest(text.as_bytes()));
    let mut r = Report::table(
        "estimate",
        json!({
            "batch_sha256": digest, "series": format!("{series:?}"), "h": lags, "k": args.k,
            "u": args.u, "block": args.block, "s0": args.s0, "sh": args.sh,
        }),
        vec!["estimator", "h", "value", "stderr", "detail"],
    );
    let nan = f64::NAN;
    let mut row = |name: &str, h: Option<usize>, res: Result<(f64, f64, String), extremal_sv::Error>| {
        let h = h.map_or(Cell::Str(String::new()), Cell::from);
        match res {
            Ok((v, se, detail)) => r.push(vec![name.into(), h, v.into(), se.into(), detail.into()]),
            Err(e) => r.push(vec![name.into(), h, nan.into(), nan.into(), e.to_string().into()]),
        }
    };
    for &h in &lags {
        row("hill_eta", Some(h), hill_eta(&data, h, args.k).map(|e| (e.value, e.stderr, format!("k={} n={}", e.k, e.n))));
        row(
            "joint_exceedance_ratio",
            Some(h),
            joint_exceedance_ratio(&data, h, args.s0, args.sh, args.u).map(|e| {
                let detail = format!(
                    "s0={} sh={} u={} ci=[{:.6};{:.6}] n={}/{}{}",
                    args.s0, args.sh, args.u, e.ci_low, e.ci_high, e.numerator, e.denominator,
                    if e.low_power { " low_power" } else { "" }
                );
                (e.ratio, nan, detail)
            }),
        );
        row(
            "conditional_exceedance",
            Some(h),
            conditional_exceedance_probe(&data, h, &[args.u])
                .map(|p| (p[0].probability, p[0].stderr, format!("u={} x={:.6e}", args.u, p[0].threshold))),
        );
    }
    row("hill_tail_index", None, hill_tail_index(&data, args.k).map(|e| (e.value, e.stderr, format!("k={}", e.k))));
    row(
        "extremal_index",
        None,
        extremal_index(&data, args.block, args.u).map(|e| {
            (e.theta, e.stderr, format!("b={} u={} raw={:.6} blocks={}/{}", args.block, args.u, e.raw, e.blocks_with_exceedance, e.blocks))
        }),
    );
    Ok(r)
}

fn verify_cmd(args: &VerifyArgs, seed: u64, workers: usize) -> CliResult<Outcome> {
    if !(args.scale > 0.0 && args.scale <= 1.0) {
        return Err(CliError::input(format!("scale {} outside (0, 1]", args.scale)));
    }
    let only: Option<Vec<u32>> = args
        .only
        .as_deref()
        .map(|s| {
            s.split(',')
                .map(|x| x.trim().parse().map_err(|_| CliError::input(format!("bad check id `{x}`"))))
                .collect::<CliResult<_>>()
        })
        .transpose()?;
    let opts = VerifyOptions { seed, workers, scale: args.scale };
    let wanted = |id: u32| only.as_ref().is_none_or(|o| o.contains(&id));
    type Runner = Box<dyn Fn() -> extremal_sv::Result<CheckResult>>;
    let runners: Vec<(u32, Runner)> = vec![
        (1, Box::new(move || verify::check_two_factor_exactness(seed))),
        (2, Box::new(verify::check_ar1_profile)),
        (3, Box::new(move || verify::check_construction_round_trip(seed))),
        (4, Box::new(move || verify::check_lp_oracle(seed))),
        (5, Box::new(move || verify::check_tau_identity(seed))),
        (6, Box::new(move || verify::check_truncation_stability(seed))),
        (7, Box::new(move || verify::check_eta_consistency(&opts))),
        (8, Box::new(move || verify::check_joint_exceedance(&opts))),
        (9, Box::new(move || verify::check_extremal_index(&opts))),
        (10, Box::new(move || verify::check_marginal_tail(&opts))),
        (11, Box::new(move || verify::check_dependence_dichotomy(&opts))),
    ];
    let mut r = Report::table(
        "verify",
        json!({ "scale": args.scale, "only": only }),
        vec!["check", "name", "label", "estimate", "target", "lower", "upper", "pass"],
    );
    let mut notes = Vec::new();
    let mut all = true;
    let mut summaries = Vec::new();
    for (id, run) in runners.iter().filter(|(id, _)| wanted(*id)) {
        let c = run()?;
        all &= c.passed;
        notes.push(format!("check {id:>2} {}: {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.summary));
        for row in &c.rows {
            r.push(vec![
                (*id as usize).into(),
                c.name.clone().into(),
                row.label.clone().into(),
                row.estimate.into(),
                row.target.into(),
                row.lower.into(),
                row.upper.into(),
                row.pass.into(),
            ]);
        }
        summaries.push(json!({ "id": id, "name": c.name, "passed": c.passed, "summary": c.summary, "rows": c.rows }));
    }
    r.json = Some(json!({ "passed": all, "checks": summaries }));
    Ok(Outcome { report: r, exit_code: if all { 0 } else { 1 }, notes })
}

fn tau_cmd(args: &TauArgs) -> CliResult<Report> {
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&args.matrix).map_err(|e| CliError::input(format!("matrix: {e}")))?;
    let a = SquareMatrix::from_rows(rows.clone())?;
    let t = tau(&a);
    let mut cols = vec!["tau"];
    let mut row = vec![Cell::from(t)];
    if let Some(res) = args.oracle {
        cols.push("oracle");
        row.push(tau_numeric_oracle(&a, res)?.into());
    }
    let mut r = Report::table("tau", json!({ "matrix": rows, "oracle": args.oracle }), cols);
    r.push(row);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lag_syntax() {
        assert_eq!(parse_lags("1..5").unwrap(), vec![1, 2, 3, 4, 5]);
        assert_eq!(parse_lags("2, 4").unwrap(), vec![2, 4]);
        assert!(parse_lags("0..2").is_err());
        assert!(parse_lags("3..1").is_err());
        assert!(parse_lags("x").is_err());
    }

    #[test]
    fn batch_round_trip() {
        let text = "# header\nreplication,t,sigma,x\n0,0,1.5,-1.0\n0,1,2.0,3.0\n1,0,0.5,0.25\n";
        let v = read_batch(text, Series::AbsX).unwrap();
        assert_eq!(v, vec![vec![1.0, 3.0], vec![0.25]]);
        assert!(read_batch("a,b\n", Series::Sigma).is_err());
    }
}
