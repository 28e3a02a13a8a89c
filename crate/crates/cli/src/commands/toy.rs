use std::fmt::Write;

use ost_core::eval::{make_toy_scenario_with, run_toy_method, ToyConfig, ToyHyper, ToyMethod, ToyScenario};
use ost_core::Error;

use super::write_all;
use crate::args::ToyArgs;
use crate::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct ToyRunConfig {
    pub scenarios: Vec<ToyScenario>,
    pub first_seed: u64,
    pub n_seeds: usize,
    pub methods: Vec<ToyMethod>,
    pub toy: ToyConfig,
    pub hyper: ToyHyper,
}

/// One table row. `l1_error` and `seconds` are medians over seeds; `None`
/// when the method could not run (`status` says why).
#[derive(Debug, Clone, PartialEq)]
pub struct ToyRow {
    pub scenario: ToyScenario,
    pub method: ToyMethod,
    pub l1_error: Option<f64>,
    pub seconds: Option<f64>,
    pub status: String,
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn cmd_toy(cfg: &ToyRunConfig) -> CliResult<Vec<ToyRow>> {
    if cfg.n_seeds == 0 {
        return Err(CliError::usage("--seeds must be at least 1"));
    }
    let mut rows = Vec::new();
    for &scenario in &cfg.scenarios {
        let instances = (0..cfg.n_seeds as u64)
            .map(|s| make_toy_scenario_with(scenario, cfg.first_seed + s, &cfg.toy))
            .collect::<Result<Vec<_>, _>>()?;
        for &method in &cfg.methods {
            let mut errors = Vec::with_capacity(instances.len());
            let mut times = Vec::with_capacity(instances.len());
            let mut skipped = None;
            for inst in &instances {
                match run_toy_method(inst, method, &cfg.hyper) {
                    Ok(r) => {
                        errors.push(r.l1_error);
                        times.push(r.seconds);
                    }
                    Err(e @ Error::GuardExceeded { .. }) => {
                        skipped = Some(e.to_string());
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            rows.push(match skipped {
                Some(reason) => ToyRow {
                    scenario,
                    method,
                    l1_error: None,
                    seconds: None,
                    status: format!("skipped: {reason}"),
                },
                None => ToyRow {
                    scenario,
                    method,
                    l1_error: Some(median(&mut errors)),
                    seconds: Some(median(&mut times)),
                    status: "ok".into(),
                },
            });
        }
    }
    Ok(rows)
}

fn scenario_label(s: ToyScenario) -> &'static str {
    match s {
        ToyScenario::ShiftedFundamentals => "a",
        ToyScenario::WrongAmplitudes => "b",
    }
}

pub fn rows_to_tsv(rows: &[ToyRow]) -> String {
    let mut out = String::from("scenario\tmethod\tl1_error\tseconds\tstatus\n");
    for r in rows {
        let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_else(|| "NA".into());
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            scenario_label(r.scenario),
            r.method.name(),
            f(r.l1_error),
            f(r.seconds),
            r.status
        );
    }
    out
}

pub fn rows_to_table(rows: &[ToyRow], cfg: &ToyRunConfig) -> String {
    let mut out = String::new();
    let seeds = if cfg.n_seeds == 1 {
        format!("seed {}", cfg.first_seed)
    } else {
        format!("median over seeds {}..{}", cfg.first_seed, cfg.first_seed + cfg.n_seeds as u64 - 1)
    };
    for &scenario in &cfg.scenarios {
        let title = match scenario {
            ToyScenario::ShiftedFundamentals => "shifted fundamentals",
            ToyScenario::WrongAmplitudes => "wrong amplitudes",
        };
        let _ = writeln!(out, "scenario ({}) {title}, {seeds}", scenario_label(scenario));
        let _ = writeln!(out, "{:<10}{:>12}{:>14}", "method", "l1 error", "time/frame");
        for r in rows.iter().filter(|r| r.scenario == scenario) {
            match (r.l1_error, r.seconds) {
                (Some(e), Some(t)) => {
                    let _ = writeln!(out, "{:<10}{:>12.4}{:>13.2e}s", r.method.name(), e, t);
                }
                _ => {
                    let _ = writeln!(out, "{:<10}  {}", r.method.name(), r.status);
                }
            }
        }
        out.push('\n');
    }
    out
}

pub(super) fn run(args: &ToyArgs) -> CliResult<String> {
    let methods = if args.methods.is_empty() {
        ToyMethod::ALL.to_vec()
    } else {
        args.methods
            .iter()
            .map(|m| ToyMethod::parse(m).ok_or_else(|| CliError::usage(format!("unknown toy method `{m}`"))))
            .collect::<CliResult<Vec<_>>>()?
    };
    let mut toy = ToyConfig::default();
    if let Some(b) = args.bins {
        toy.n_bins = b;
    }
    if let Some(hz) = args.bin_hz {
        toy.bin_hz = hz;
    }
    let mut hyper = ToyHyper::default();
    if let Some(e) = args.epsilon0 {
        hyper.epsilon0 = e;
    }
    if let Some(l) = args.lambda_e {
        hyper.solver.lambda_e = l;
    }
    if let Some(l) = args.lambda_g {
        hyper.solver.lambda_g = l;
    }
    hyper.octave_scaling = !args.no_octave_scaling;
    let cfg = ToyRunConfig {
        scenarios: args.scenario.scenarios(),
        first_seed: args.seed,
        n_seeds: args.seeds,
        methods,
        toy,
        hyper,
    };
    let rows = cmd_toy(&cfg)?;
    let mut text = rows_to_table(&rows, &cfg);
    if let Some(out) = &args.out {
        write_all(&[(out.clone(), rows_to_tsv(&rows))])?;
        let _ = writeln!(text, "wrote {}", out.display());
    }
    Ok(text)
}
