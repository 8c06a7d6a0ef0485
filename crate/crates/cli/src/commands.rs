use std::fmt::Write as _;
use std::io::Write;

use delreg_core::advisor::{advise, PatternSpec};
use delreg_core::simulation::{
    reproduce_table, run_mc, theoretical_variance, ReproduceOptions, SimSetting, TableReport,
};
use delreg_core::{
    covariance, estimate_kappa, fit, observation_proportions, v_matrices, CovarianceModel, Dataset,
    Method, ProportionSet,
};
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::args::{
    Cli, Command, FitArgs, Format, KappaChoice, MethodChoice, ModelArgs, PatternArgs, PatternChoice,
    ReproduceArgs, SimulateArgs, VarianceArgs,
};
use crate::ingest::{ingest_csv, read_covariance};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Six significant digits.
fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    let text = match &cli.command {
        Command::Fit(a) => cmd_fit(a, err)?,
        Command::Variance(a) => cmd_variance(a, err)?,
        Command::Advise(a) => cmd_advise(a, err)?,
        Command::Simulate(a) => cmd_simulate(a)?,
        Command::Reproduce(a) => cmd_reproduce(a)?,
    };
    match &cli.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn cmd_fit(a: &FitArgs, err: &mut dyn Write) -> Result<String> {
    let data = ingest_csv(&a.input, &a.response)?;
    let methods: &[Method] = match a.method {
        MethodChoice::Cc => &[Method::Cc],
        MethodChoice::Ac => &[Method::Ac],
        MethodChoice::Both => &Method::BOTH,
    };
    let names = data.model_names();
    let predictors = &names[..data.p()];
    let mut fits = Vec::new();
    for &m in methods {
        let f = fit(&data, m)?;
        if !f.cov_estimate.pd {
            writeln!(err, "warning: {m} covariance estimate is not positive definite")?;
        }
        fits.push(f);
    }
    Ok(match a.format {
        Format::Csv => {
            let mut s = format!("method,n_effective,{}\n", predictors.join(","));
            for f in &fits {
                let coefs: Vec<String> = f.beta_hat.iter().map(|b| sci(*b)).collect();
                writeln!(s, "{},{},{}", f.method, f.n_effective, coefs.join(",")).unwrap();
            }
            s
        }
        Format::Json => pretty(&Value::Array(
            fits.iter()
                .map(|f| {
                    json!({
                        "method": f.method.to_string(),
                        "n_effective": f.n_effective,
                        "positive_definite": f.cov_estimate.pd,
                        "predictors": predictors,
                        "beta": f.beta_hat.as_slice(),
                    })
                })
                .collect(),
        )),
    })
}

/// Model-order positions with the target predictor moved to the front.
fn target_order(predictors: &[String], target: Option<&str>) -> Result<Vec<usize>> {
    let t = match target {
        None => 0,
        Some(name) => predictors
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| usage(format!("target {name:?} is not a predictor column")))?,
    };
    let mut order = vec![t];
    order.extend((0..predictors.len()).filter(|&j| j != t));
    Ok(order)
}

/// The dataset in model order with the target predictor first.
fn reorder_dataset(data: &Dataset, target: Option<&str>) -> Result<Dataset> {
    let model_order = data.model_order();
    let p = data.p();
    let names = data.model_names();
    let mut file_cols: Vec<usize> =
        target_order(&names[..p], target)?.iter().map(|&j| model_order[j]).collect();
    file_cols.push(data.response_index());
    let names = file_cols.iter().map(|&c| data.names()[c].clone()).collect();
    let columns = file_cols.iter().map(|&c| data.column(c).to_vec()).collect();
    let observed = file_cols.iter().map(|&c| data.observed_column(c).to_vec()).collect();
    Ok(Dataset::from_columns(names, columns, observed, p)?)
}

fn pattern_from(args: &PatternArgs, p: usize, data: Option<&Dataset>) -> Result<PatternSpec> {
    let invalid = |e: delreg_core::Error| usage(e.to_string());
    match (args.pattern, args.q1, args.q_rest) {
        (None | Some(PatternChoice::General), None, None) => match data {
            Some(d) => Ok(PatternSpec::general(observation_proportions(d)?)),
            None => Err(usage("missing proportions: give --pattern with --q1 and --q-rest")),
        },
        (Some(PatternChoice::General), Some(q1), Some(rest)) => {
            let mut q = vec![q1];
            q.extend(std::iter::repeat_n(rest, p - 1));
            q.push(1.0);
            Ok(PatternSpec::general(ProportionSet::independent(&q).map_err(invalid)?))
        }
        (Some(PatternChoice::A), Some(q1), Some(rest)) => PatternSpec::pattern_a(q1, rest).map_err(invalid),
        (Some(PatternChoice::B), Some(q1), Some(rest)) => PatternSpec::pattern_b(q1, rest).map_err(invalid),
        (None, _, _) => Err(usage("--q1 and --q-rest need --pattern")),
        _ => Err(usage("--pattern needs both --q1 and --q-rest (general may omit both)")),
    }
}

struct Problem {
    model: CovarianceModel,
    pattern: PatternSpec,
    n: f64,
    /// Predictor names, target first.
    predictors: Vec<String>,
}

fn build_problem(a: &ModelArgs, err: &mut dyn Write) -> Result<Problem> {
    let target = a.target.as_deref();
    if let Some(path) = &a.input {
        let data = reorder_dataset(&ingest_csv(path, &a.response)?, target)?;
        let p = data.p();
        // Pairwise estimate uses every observed value; fall back to complete
        // cases only when it is not positive definite.
        let mut est = covariance(&data, Method::Ac)?;
        if !est.pd {
            writeln!(err, "warning: AC covariance is not positive definite; using complete cases")?;
            est = covariance(&data, Method::Cc)?;
        }
        let kappa = match a.kappa {
            KappaChoice::Value(v) => v,
            KappaChoice::Estimate(m) => {
                let k = estimate_kappa(&data, m)?;
                if k.below_bound() {
                    writeln!(err, "warning: {m} kappa estimate {} is at or below -1/2", k.value)?;
                }
                k.value
            }
        };
        let model = CovarianceModel::partition(&est.matrix, p)?.with_kappa(kappa)?;
        let pattern = pattern_from(&a.pattern, p, Some(&data))?;
        let n = a.n.unwrap_or(data.n_rows() as f64);
        let predictors = data.names()[..p].to_vec();
        return Ok(Problem { model, pattern, n, predictors });
    }
    let path = a.covariance.as_ref().expect("clap requires --input or --covariance");
    let (names, sigma, response) = read_covariance(path, &a.response)?;
    let file_predictors: Vec<usize> = (0..names.len()).filter(|&j| j != response).collect();
    let pred_names: Vec<String> = file_predictors.iter().map(|&j| names[j].clone()).collect();
    let mut order: Vec<usize> =
        target_order(&pred_names, target)?.iter().map(|&j| file_predictors[j]).collect();
    order.push(response);
    let p = order.len() - 1;
    let sigma = DMatrix::from_fn(p + 1, p + 1, |i, j| sigma[(order[i], order[j])]);
    let kappa = match a.kappa {
        KappaChoice::Value(v) => v,
        KappaChoice::Estimate(_) => return Err(usage("estimating kappa needs --input data")),
    };
    let model = CovarianceModel::partition(&sigma, p)?.with_kappa(kappa)?;
    let pattern = pattern_from(&a.pattern, p, None)?;
    let n = a.n.ok_or_else(|| usage("--covariance needs --n"))?;
    let predictors = order[..p].iter().map(|&j| names[j].clone()).collect();
    Ok(Problem { model, pattern, n, predictors })
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

fn cmd_variance(a: &VarianceArgs, err: &mut dyn Write) -> Result<String> {
    let prob = build_problem(&a.model, err)?;
    let props = prob.pattern.proportions(prob.model.dim())?;
    let report = v_matrices(&prob.model, &props, prob.n)?;
    let single = a.model.target.is_some();
    Ok(match (a.format, single) {
        (Format::Json, true) => pretty(&json!({
            "target": prob.predictors[0],
            "n": prob.n,
            "kappa": prob.model.kappa(),
            "v_cc": report.v_cc[(0, 0)],
            "v_ac": report.v_ac[(0, 0)],
            "v_d": report.v_d[(0, 0)],
        })),
        (Format::Json, false) => pretty(&json!({
            "predictors": prob.predictors,
            "n": prob.n,
            "kappa": prob.model.kappa(),
            "v_cc": rows(&report.v_cc),
            "v_ac": rows(&report.v_ac),
            "v_d": rows(&report.v_d),
        })),
        (Format::Csv, true) => format!(
            "target,v_cc,v_ac,v_d\n{},{},{},{}\n",
            prob.predictors[0],
            sci(report.v_cc[(0, 0)]),
            sci(report.v_ac[(0, 0)]),
            sci(report.v_d[(0, 0)])
        ),
        (Format::Csv, false) => {
            let mut s = format!("quantity,coefficient,{}\n", prob.predictors.join(","));
            for (label, m) in [("v_cc", &report.v_cc), ("v_ac", &report.v_ac), ("v_d", &report.v_d)] {
                for (i, name) in prob.predictors.iter().enumerate() {
                    let cells: Vec<String> = m.row(i).iter().map(|x| sci(*x)).collect();
                    writeln!(s, "{label},{name},{}", cells.join(",")).unwrap();
                }
            }
            s
        }
    })
}

fn cmd_advise(a: &ModelArgs, err: &mut dyn Write) -> Result<String> {
    let prob = build_problem(a, err)?;
    let rec = advise(&prob.model, &prob.pattern, prob.n, 0)?;
    let mut v = serde_json::to_value(&rec).expect("recommendation serializes");
    let obj = v.as_object_mut().expect("struct serializes to an object");
    obj.insert("target_name".into(), json!(prob.predictors[0]));
    obj.insert("predictors".into(), json!(prob.predictors));
    obj.insert("n".into(), json!(prob.n));
    obj.insert("kappa".into(), json!(prob.model.kappa()));
    Ok(pretty(&v))
}

fn cmd_simulate(a: &SimulateArgs) -> Result<String> {
    let pattern = pattern_from(&a.pattern, 2, None)?;
    let setting = SimSetting::numbered(a.setting, a.n, pattern)?
        .with_replicates(a.inner, a.outer)
        .map_err(|e| usage(e.to_string()))?;
    let mc = run_mc(&setting, a.seed)?;
    let theory = [
        theoretical_variance(&setting, Method::Cc)?,
        theoretical_variance(&setting, Method::Ac)?,
    ];
    Ok(match a.format {
        Format::Csv => {
            let mut s = String::from("method,var_sim,sd_of_var,var_theory,mean_beta,failures\n");
            for (m, t) in Method::BOTH.iter().zip(theory) {
                let st = mc.stats(*m);
                writeln!(
                    s,
                    "{m},{},{},{},{},{}",
                    sci(st.var_hat),
                    sci(st.sd_of_var),
                    sci(t),
                    sci(st.mean_beta),
                    st.failures
                )
                .unwrap();
            }
            s
        }
        Format::Json => {
            let mut v = serde_json::to_value(&mc).expect("result serializes");
            v["cc"]["var_theory"] = json!(theory[0]);
            v["ac"]["var_theory"] = json!(theory[1]);
            v["setting"] = json!(a.setting);
            pretty(&v)
        }
    })
}

fn table_csv(report: &TableReport, paper_units: bool) -> String {
    let fmt = |x: Option<f64>| match x {
        None => String::new(),
        Some(x) if paper_units => format!("{:.4}", x * 1e3),
        Some(x) => sci(x),
    };
    let fig3 = report.id == delreg_core::simulation::TableId::Fig3;
    let mut s = report.label_names.join(",");
    if fig3 {
        s.push_str(",kappa");
    }
    s.push_str(",cc_sim,cc_theory,ac_sim,ac_theory,cc_sd,ac_sd,winner_theory,winner_sim\n");
    for row in &report.rows {
        let labels: Vec<String> = row.labels.iter().map(|(_, v)| v.to_string()).collect();
        s.push_str(&labels.join(","));
        if fig3 {
            write!(s, ",{}", sci(row.kappa)).unwrap();
        }
        let winner_sim = row.winner_sim.map(|w| w.to_string()).unwrap_or_default();
        writeln!(
            s,
            ",{},{},{},{},{},{},{},{}",
            fmt(row.cc.sim),
            fmt(Some(row.cc.theory)),
            fmt(row.ac.sim),
            fmt(Some(row.ac.theory)),
            fmt(row.cc.sd),
            fmt(row.ac.sd),
            row.winner_theory,
            winner_sim
        )
        .unwrap();
    }
    s
}

fn cmd_reproduce(a: &ReproduceArgs) -> Result<String> {
    if !a.theory_only && (a.inner < 2 || a.outer < 1) {
        return Err(usage("need --inner >= 2 and --outer >= 1"));
    }
    let opts = ReproduceOptions {
        seed: a.seed,
        inner: a.inner,
        outer: a.outer,
        theory_only: a.theory_only,
    };
    let report = reproduce_table(a.table, &opts)?;
    Ok(match a.format {
        Format::Csv => table_csv(&report, a.paper_units),
        Format::Json => pretty(&serde_json::to_value(&report).expect("report serializes")),
    })
}
