use std::fs;
use std::path::Path;

use heatkernel_core::envelope::{run_scan, EnvelopeSample, QuarantinedSample};
use heatkernel_core::oracle::{gram_schmidt_basis, heat_oracle, projector_oracle};
use heatkernel_core::selftest::run_selftest;
use heatkernel_core::{Domain, KernelSource, ScanConfig, ScanResult};
use serde_json::{json, Value};

use crate::args::{
    Cli, EvalArgs, KernelPath, ProjectorArgs, ProjectorPath, ScanArgs, SelftestArgs,
};
use crate::error::CliError;

fn point(domain: &Domain, name: &str, p: &[f64]) -> Result<Vec<f64>, CliError> {
    if p.len() != domain.dim() {
        return Err(CliError::Usage(format!(
            "--{name} needs {} comma-separated coordinates, got {}",
            domain.dim(),
            p.len()
        )));
    }
    domain.validate_point(p)?;
    Ok(p.to_vec())
}

fn check_time(cli: &Cli, t: f64) -> Result<(), CliError> {
    if !(cli.tmin > 0.0) || !(cli.tol > 0.0) {
        return Err(CliError::Usage("--tmin and --tol must be positive".into()));
    }
    if !(t >= cli.tmin) || !t.is_finite() {
        return Err(CliError::Numeric(format!(
            "t = {t} is below --tmin {}",
            cli.tmin
        )));
    }
    Ok(())
}

fn kernel_value(
    domain: &Domain,
    path: KernelPath,
    t: f64,
    x: &[f64],
    y: &[f64],
    tol: f64,
) -> Result<f64, CliError> {
    let plan = domain.choose_truncation(t, tol)?;
    Ok(match path {
        KernelPath::Integral => domain.heat_kernel(t, &plan)?.eval(x, y)?,
        KernelPath::Series => domain.heat_kernel_series(t, x, y, &plan)?,
        KernelPath::Oracle => {
            let basis = gram_schmidt_basis(domain, plan.cutoff())?;
            heat_oracle(&basis, t, x, y, tol)?
        }
    })
}

pub fn eval(cli: &Cli, a: &EvalArgs) -> Result<(), CliError> {
    let domain = a.domain.build()?;
    let x = point(&domain, "x", &a.x.0)?;
    let y = point(&domain, "y", &a.y.0)?;
    check_time(cli, a.t)?;
    let value = kernel_value(&domain, a.path, a.t, &x, &y, cli.tol)?;
    let cutoff = domain.choose_truncation(a.t, cli.tol)?.cutoff();
    let mut record = json!({
        "schema": 1,
        "domain": domain,
        "t": a.t,
        "x": x,
        "y": y,
        "tol": cli.tol,
        "cutoff": cutoff,
        "path": a.path.name(),
        "value": value,
    });
    if a.both {
        let other = if a.path == KernelPath::Integral {
            KernelPath::Series
        } else {
            KernelPath::Integral
        };
        let second = kernel_value(&domain, other, a.t, &x, &y, cli.tol)?;
        let diff = (value - second).abs();
        println!("{value} {second} {diff:e}");
        record["other_path"] = json!(other.name());
        record["other_value"] = json!(second);
        record["abs_diff"] = json!(diff);
    } else {
        println!("{value}");
    }
    println!("{record}");
    Ok(())
}

pub fn projector(cli: &Cli, a: &ProjectorArgs) -> Result<(), CliError> {
    let domain = a.domain.build()?;
    let x = point(&domain, "x", &a.x.0)?;
    let y = point(&domain, "y", &a.y.0)?;
    let need_oracle = a.both || a.path == ProjectorPath::Oracle || a.fixture.is_some();
    let basis = if need_oracle {
        Some(gram_schmidt_basis(&domain, a.n)?)
    } else {
        None
    };
    let closed = domain.projector(a.n, &x, &y)?;
    let oracle = basis
        .as_ref()
        .map(|b| projector_oracle(b, a.n, &x, &y))
        .transpose()?;

    let mut record = json!({ "schema": 1, "domain": domain, "n": a.n, "x": x, "y": y });
    match (a.both, a.path, oracle) {
        (true, _, Some(o)) => {
            let diff = (closed - o).abs();
            println!("{closed} {o} {diff:e}");
            record["closed"] = json!(closed);
            record["oracle"] = json!(o);
            record["abs_diff"] = json!(diff);
        }
        (false, ProjectorPath::Oracle, Some(o)) => {
            println!("{o}");
            record["oracle"] = json!(o);
        }
        _ => {
            println!("{closed}");
            record["closed"] = json!(closed);
        }
    }

    if let (Some(file), Some(b)) = (&a.fixture, &basis) {
        let levels: Vec<Value> = (0..=a.n)
            .map(|k| b.level(k).map(|ps| json!(ps)))
            .collect::<Result<_, _>>()?;
        let fixture = json!({
            "schema": 1,
            "domain": domain,
            "n_max": a.n,
            "gram_error": b.gram_error(),
            "levels": levels,
        });
        fs::create_dir_all(&cli.out)?;
        let path = cli.out.join(file);
        fs::write(
            &path,
            serde_json::to_string_pretty(&fixture).expect("json") + "\n",
        )?;
        record["fixture"] = json!(path.display().to_string());
    }
    println!("{record}");
    Ok(())
}

fn write_samples(path: &Path, d: usize, samples: &[EnvelopeSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["u".to_string(), "logG".to_string(), "t".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.extend((1..=d).map(|i| format!("y{i}")));
    w.write_record(&header)?;
    for s in samples {
        let row = [s.u, s.log_g, s.t]
            .into_iter()
            .chain(s.x.iter().copied())
            .chain(s.y.iter().copied());
        w.write_record(row.map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_quarantine(path: &Path, d: usize, samples: &[QuarantinedSample]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string(), "K".to_string()];
    header.extend((1..=d).map(|i| format!("x{i}")));
    header.extend((1..=d).map(|i| format!("y{i}")));
    w.write_record(&header)?;
    for s in samples {
        let row = [s.t, s.kernel]
            .into_iter()
            .chain(s.x.iter().copied())
            .chain(s.y.iter().copied());
        w.write_record(row.map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn scan_report(domain: &Domain, cli: &Cli, r: &ScanResult) -> Value {
    let f = &r.fit;
    let c = &r.check;
    json!({
        "schema": 1,
        "domain": domain.name(),
        "weight": domain,
        "source": r.config.source,
        "seed": r.config.seed,
        "holdout_seed": r.config.holdout_seed(),
        "t_list": r.config.t_list,
        "cutoffs": r.cutoffs,
        "tol": r.config.tol,
        "tmin": cli.tmin,
        "pairs_per_t": r.config.pairs_per_t,
        "u_train": r.config.u_train,
        "u_holdout": r.config.u_holdout,
        "fit": {
            "c1": f.c1, "c2": f.c2, "c3": f.c3, "c4": f.c4,
            "log_c1": f.log_c1, "log_c3": f.log_c3,
            "c3_over_c1": f.ratio(),
        },
        "samples": {
            "training": r.training.samples.len(),
            "refined": r.n_refined,
            "holdout": r.holdout.samples.len(),
            "quarantined_training": r.training.quarantined.len(),
            "quarantined_holdout": r.holdout.quarantined.len(),
        },
        "slacks": {
            "max_upper": f.max_upper_slack,
            "max_lower": f.max_lower_slack,
            "holdout_worst_upper": c.worst_upper_slack,
            "holdout_worst_lower": c.worst_lower_slack,
        },
        "holdout_violations": c.violations,
        "violation_fraction": c.violation_fraction,
        "passed": r.passed(),
    })
}

pub fn envelope_scan(cli: &Cli, a: &ScanArgs) -> Result<(), CliError> {
    let domain = a.domain.build()?;
    if a.t.0.is_empty() {
        return Err(CliError::Usage("--t needs at least one time".into()));
    }
    if a.pairs == 0 {
        return Err(CliError::Usage("--pairs must be positive".into()));
    }
    if !(a.u_train > 0.0) || !(a.u_holdout > 0.0) {
        return Err(CliError::Usage(
            "--u-train and --u-holdout must be positive".into(),
        ));
    }
    for &t in &a.t.0 {
        check_time(cli, t)?;
        if t > 1.0 {
            return Err(CliError::Numeric(format!("t = {t} is above 1")));
        }
    }
    let config = ScanConfig {
        t_list: a.t.0.clone(),
        tol: cli.tol,
        seed: cli.seed,
        pairs_per_t: a.pairs,
        u_train: a.u_train,
        u_holdout: a.u_holdout,
        source: if a.negative_control {
            KernelSource::NegativeControl
        } else {
            KernelSource::Heat
        },
        ..ScanConfig::default()
    };
    let result = run_scan(&domain, &config)?;

    fs::create_dir_all(&cli.out)?;
    let d = domain.dim();
    write_samples(&cli.out.join("samples.csv"), d, &result.training.samples)?;
    write_samples(&cli.out.join("holdout.csv"), d, &result.holdout.samples)?;
    let mut quarantined = result.training.quarantined.clone();
    quarantined.extend(result.holdout.quarantined.iter().cloned());
    write_quarantine(&cli.out.join("quarantine.csv"), d, &quarantined)?;
    let report = scan_report(&domain, cli, &result);
    fs::write(
        cli.out.join("report.json"),
        serde_json::to_string_pretty(&report).expect("json") + "\n",
    )?;
    println!("{report}");

    if result.passed() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!(
            "envelope scan failed: {} quarantined, {} holdout violations, c3/c1 = {}",
            quarantined.len(),
            result.check.violations,
            result.fit.ratio()
        )))
    }
}

pub fn selftest(a: &SelftestArgs) -> Result<(), CliError> {
    let reports = run_selftest(a.level.into(), a.inject_fault.map(Into::into));
    let mut failed = Vec::new();
    for r in &reports {
        let mark = if r.ok() { "PASS" } else { "FAIL" };
        println!("{mark} {} {}/{}", r.name, r.passed, r.total);
        for f in &r.failures {
            println!("  {f}");
        }
        if !r.ok() {
            failed.push(r.name.clone());
        }
    }
    println!(
        "{}",
        json!({ "schema": 1, "suites": reports, "passed": failed.is_empty() })
    );
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(format!(
            "failed suites: {}",
            failed.join(", ")
        )))
    }
}
