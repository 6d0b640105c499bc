use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use rayon::prelude::*;

use curvflow::flow::FlowVariant;
use curvflow::oracle::{compare_default, AnalyticCase, AnalyticShape, ComparisonReport, OracleError};

use crate::error::CliError;
use crate::OracleArgs;

fn selection<T: std::str::FromStr<Err = String> + Copy>(
    names: &[String],
    all: &[T],
) -> Result<Vec<T>, CliError> {
    if names.is_empty() {
        return Ok(all.to_vec());
    }
    names.iter().map(|n| n.parse().map_err(CliError::Usage)).collect()
}

pub fn run(args: OracleArgs) -> Result<ExitCode, CliError> {
    let shapes = selection(&args.cases, &AnalyticShape::ALL)?;
    let flows = selection(&args.flows, &FlowVariant::ALL)?;
    if !(args.dt > 0.0 && args.dt.is_finite()) {
        return Err(CliError::Usage(format!("--dt must be positive, got {}", args.dt)));
    }
    let cases: Vec<AnalyticCase> = shapes
        .iter()
        .flat_map(|&s| flows.iter().map(move |&f| AnalyticCase::new(s, f)))
        .collect();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().map_err(|e| CliError::Other(e.to_string()))?;
    let dt = args.dt;
    let reports: Vec<Result<ComparisonReport, OracleError>> =
        pool.install(|| cases.par_iter().map(|&c| compare_default(c, dt)).collect());

    let mut all_pass = true;
    let mut ok_reports = Vec::new();
    for (case, report) in cases.iter().zip(reports) {
        match report {
            Ok(r) => {
                all_pass &= r.passed();
                println!("{}", r.summary());
                ok_reports.push(r);
            }
            Err(e) => {
                all_pass = false;
                println!("{:<14} FAIL {e}", case.to_string());
            }
        }
    }
    if let Some(path) = &args.csv {
        let file = File::create(path).map_err(CliError::io(path))?;
        let mut w = BufWriter::new(file);
        for (k, r) in ok_reports.iter().enumerate() {
            let mut buf = Vec::new();
            r.write_csv(&mut buf).map_err(CliError::io(path))?;
            // One shared header.
            let text = String::from_utf8(buf).expect("ascii csv");
            let body = if k == 0 { &text[..] } else { text.split_once('\n').map_or("", |x| x.1) };
            w.write_all(body.as_bytes()).map_err(CliError::io(path))?;
        }
        w.flush().map_err(CliError::io(path))?;
    }
    println!(
        "{} of {} cases passed",
        ok_reports.iter().filter(|r| r.passed()).count(),
        cases.len()
    );
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(2) })
}
