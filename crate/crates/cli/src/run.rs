//! Subcommand dispatch: validate the configuration, call the library, and
//! emit one report.

use crate::emit::{self, envelope, json_of, Outcome, Table};
use crate::parse;
use crate::{
    BundleArgs, ChateletArgs, Cli, Command, ConicArgs, DensityArgs, DispersionArgs, Failure,
    Format, LeastPrimeArgs, ModelVerifyArgs, PairCorrArgs, ProbArgs, SeriesArgs, ThetaArgs,
};
use schinzel_core::chatelet::{
    lower_bound, rd_exact, solvability_proportion, solve_chatelet, ChateletSpec,
};
use schinzel_core::conic::{
    bundle_search, identity_check, q_indicator, solve_conic, ConicOutcome, ConicSpec,
};
use schinzel_core::counting::{
    dispersion, least_prime_hit, least_prime_inputs, linnik_experiment, pair_correlation,
    pair_correlation_sampled, theta, DispersionMode,
};
use schinzel_core::model::{c_ell, ratio_string, verify_moments, OmegaSpec};
use schinzel_core::polyff::CoeffBox;
use schinzel_core::series::{schinzel_density, singular_series};
use schinzel_core::Budget;
use serde_json::{json, Value};

/// Budget from `SCHINZEL_LAB_BUDGET`: either one integer applied to both
/// limits, or `factor_steps,enum_tuples`.
fn budget_from_env() -> Result<Budget, Failure> {
    let Some(text) = std::env::var_os("SCHINZEL_LAB_BUDGET") else {
        return Ok(Budget::default());
    };
    let text = text.to_string_lossy();
    let parts: Vec<&str> = text.split(',').collect();
    let parse_u64 = |part: &str| {
        part.trim()
            .parse::<u64>()
            .map_err(|_| Failure::usage(format!("bad SCHINZEL_LAB_BUDGET value {text:?}")))
    };
    match parts.as_slice() {
        [both] => {
            let n = parse_u64(both)?;
            Ok(Budget::new(n, n as u128))
        }
        [factor, enumeration] => {
            Ok(Budget::new(parse_u64(factor)?, parse_u64(enumeration)? as u128))
        }
        _ => Err(Failure::usage(format!("bad SCHINZEL_LAB_BUDGET value {text:?}"))),
    }
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot configure {n} threads: {e}")))?;
    }
    let budget = budget_from_env()?;
    let csv = cli.format == Format::Csv;
    let started = std::time::Instant::now();
    let (config, outcome) = dispatch(&cli.command, csv, &budget)?;
    let wall_ms = started.elapsed().as_millis();

    let report = envelope(cli.command.name(), config, cli.threads, &outcome, wall_ms);
    emit::write_report(
        cli.format,
        cli.out.as_ref(),
        cli.command.name(),
        &report,
        outcome.table.as_ref(),
    )?;
    match outcome.violation {
        Some(message) => Err(Failure { code: 3, message }),
        None => Ok(()),
    }
}

fn dispatch(command: &Command, csv: bool, budget: &Budget) -> Result<(Value, Outcome), Failure> {
    match command {
        Command::Density(args) => Ok((json_of(args)?, density(args, budget)?)),
        Command::Series(args) => Ok((json_of(args)?, series(args, budget)?)),
        Command::Theta(args) => Ok((json_of(args)?, theta_cmd(args)?)),
        Command::LeastPrime(args) => Ok((json_of(args)?, least_prime(args, csv, budget)?)),
        Command::PairCorr(args) => Ok((json_of(args)?, pair_corr(args, budget)?)),
        Command::Dispersion(args) => Ok((json_of(args)?, dispersion_cmd(args, csv, budget)?)),
        Command::ModelVerify(args) => Ok((json_of(args)?, model_verify(args, budget)?)),
        Command::Conic(args) => Ok((json_of(args)?, conic(args, budget)?)),
        Command::Bundle(args) => Ok((json_of(args)?, bundle(args, budget)?)),
        Command::Chatelet(args) => Ok((json_of(args)?, chatelet(args, csv, budget)?)),
        Command::Prob(args) => Ok((json_of(args)?, prob(args)?)),
    }
}

fn density(args: &DensityArgs, _budget: &Budget) -> Result<Outcome, Failure> {
    let constant = schinzel_density(&args.degrees, args.modulus, args.truncation)?;
    Ok(Outcome::new(json_of(&constant)?))
}

fn series(args: &SeriesArgs, budget: &Budget) -> Result<Outcome, Failure> {
    let tuple = parse::tuple(&args.polys)?;
    let value = singular_series(&tuple, args.x, args.anchor, args.modulus, budget)?;
    Ok(Outcome::new(json_of(&value)?))
}

fn theta_cmd(args: &ThetaArgs) -> Result<Outcome, Failure> {
    let tuple = parse::tuple(&args.polys)?;
    let value = theta(&tuple, args.x, args.anchor, args.modulus)?;

    let mut header = vec!["m".to_string()];
    header.extend((1..=tuple.len()).map(|i| format!("value_{i}")));
    let mut table = Table { header, rows: Vec::new() };
    for &m in &value.hits {
        let mut row = vec![m.to_string()];
        let values = tuple.eval_all(m as i64)?;
        row.extend(values.iter().map(|v| v.to_string()));
        table.rows.push(row);
    }
    let probable = value.probable_prime_used;
    Ok(Outcome::new(json_of(&value)?).probable(probable).with_table(table))
}

fn least_prime(args: &LeastPrimeArgs, csv: bool, budget: &Budget) -> Result<Outcome, Failure> {
    let explicit = !args.polys.is_empty();
    let sampled = args.degrees.is_some() || args.height.is_some() || args.samples.is_some();
    if explicit && sampled {
        return Err(Failure::usage(
            "choose one mode: explicit --poly, or sampled --degrees/--height/--samples",
        ));
    }
    if explicit {
        let tuple = parse::tuple(&args.polys)?;
        if let Some(exponent) = args.exponent {
            let report = least_prime_inputs(&tuple, exponent, args.anchor, args.modulus)?;
            let probable = report.probable_prime_used;
            return Ok(Outcome::new(json_of(&report)?).probable(probable));
        }
        let bound = args
            .bound
            .ok_or_else(|| Failure::usage("explicit mode needs --exponent or --bound"))?;
        let least = least_prime_hit(&tuple, args.anchor, args.modulus, bound)?;
        let values = match least {
            Some(m) => Value::Array(
                tuple.eval_all(m as i64)?.iter().map(|v| Value::String(v.to_string())).collect(),
            ),
            None => Value::Null,
        };
        return Ok(Outcome::new(json!({
            "m_bound": bound.to_string(),
            "least": least.map(|m| m.to_string()),
            "values": values,
        })));
    }
    let (Some(degree), Some(height), Some(samples)) = (args.degrees, args.height, args.samples)
    else {
        return Err(Failure::usage(
            "sampled mode needs --degrees, --height and --samples (or give --poly)",
        ));
    };
    let report = linnik_experiment(degree, height, samples, args.epsilon, args.seed, budget)?;
    let mut table = Table::new(&["poly", "least_input", "least_value", "bound", "within_bound"]);
    if csv {
        for record in &report.records {
            table.rows.push(vec![
                record.poly.to_string(),
                record.least_input.map_or_else(String::new, |m| m.to_string()),
                record.least_value.clone().unwrap_or_default(),
                record.bound.to_string(),
                record.within_bound.to_string(),
            ]);
        }
    }
    Ok(Outcome::new(json_of(&report)?).with_table(table))
}

fn pair_corr(args: &PairCorrArgs, budget: &Budget) -> Result<Outcome, Failure> {
    match args.samples {
        None => {
            let value = pair_correlation(args.height, args.degrees, args.k, args.m, budget)?;
            Ok(Outcome::new(json_of(&value)?))
        }
        Some(samples) => {
            let value = pair_correlation_sampled(
                args.height,
                args.degrees,
                args.k,
                args.m,
                samples,
                args.seed,
                budget,
            )?;
            Ok(Outcome::new(json_of(&value)?))
        }
    }
}

fn dispersion_cmd(args: &DispersionArgs, csv: bool, budget: &Budget) -> Result<Outcome, Failure> {
    let residues = match (&args.residues, args.modulus) {
        (Some(text), _) => parse::residues(text, &args.degrees)?,
        (None, 1) => args.degrees.iter().map(|&d| vec![0i64; d as usize + 1]).collect(),
        (None, _) => {
            return Err(Failure::usage("--modulus above 1 needs --residues"));
        }
    };
    let cbox =
        CoeffBox::new(args.degrees.clone(), args.height, args.modulus, residues, args.anchor)?;
    let x = args.x.unwrap_or_else(|| (args.height as f64).ln().powf(1.5));
    let mode = match args.samples {
        Some(samples) => DispersionMode::Sampled { samples },
        None => DispersionMode::Exhaustive,
    };
    let collect = args.rows || csv;
    let report = dispersion(&cbox, x, mode, args.seed, collect, budget)?;

    let mut table = Table::new(&["tuple", "theta", "series", "residual"]);
    for row in report.rows.iter().flatten() {
        table.rows.push(vec![
            row.tuple.to_string(),
            row.theta.to_string(),
            row.series.to_string(),
            row.residual.to_string(),
        ]);
    }
    let probable = report.probable_prime_used;
    Ok(Outcome::new(json_of(&report)?).probable(probable).with_table(table))
}

fn model_verify(args: &ModelVerifyArgs, budget: &Budget) -> Result<Outcome, Failure> {
    let spec = OmegaSpec::new(args.ell, args.degrees.clone())?;
    let report = verify_moments(&spec, budget)?;
    let violation = (!report.all_match()).then(|| {
        let failed: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| !c.exact_match)
            .map(|c| c.name)
            .collect();
        format!("moment identities failed exact verification: {}", failed.join(", "))
    });
    Ok(Outcome::new(json_of(&report)?).with_violation(violation))
}

fn conic(args: &ConicArgs, budget: &Budget) -> Result<Outcome, Failure> {
    let [a, b, c] = <[i128; 3]>::try_from(args.coeffs.clone())
        .map_err(|v| Failure::usage(format!("--coeffs needs exactly 3 values, got {}", v.len())))?;
    let outcome = solve_conic(a, b, c, budget)?;
    let verified = outcome.point().map(|p| p.verifies(a, b, c));
    let violation = (verified == Some(false)).then(|| "solver point fails substitution".to_string());
    Ok(Outcome::new(json!({
        "outcome": json_of(&outcome)?,
        "verified": Value::from(verified.map(|v| Value::String(v.to_string())).unwrap_or(Value::Null)),
    }))
    .with_violation(violation))
}

fn bundle(args: &BundleArgs, budget: &Budget) -> Result<Outcome, Failure> {
    let base = parse::base(&args.base)?;
    if let Some(primes_text) = &args.primes {
        if args.groups.is_some() || args.x.is_some() || args.bound.is_some() {
            return Err(Failure::usage("--primes is its own mode; drop --groups/--x/--bound"));
        }
        let spec = ConicSpec::new(base, parse::prime_groups(primes_text)?, budget)?;
        let q = q_indicator(&spec, budget)?;
        let [a, b, c] = spec.coefficients()?;
        let outcome = solve_conic(a, b, c, budget)?;
        let point_found = matches!(outcome, ConicOutcome::Point(_));
        let verified = outcome.point().map(|p| p.verifies(a, b, c));
        let violation = (point_found != (q == 1) || verified == Some(false))
            .then(|| "indicator disagrees with the point search".to_string());
        return Ok(Outcome::new(json!({
            "spec": json_of(&spec)?,
            "coefficients": [a.to_string(), b.to_string(), c.to_string()],
            "q": q.to_string(),
            "outcome": json_of(&outcome)?,
        }))
        .with_violation(violation));
    }
    let groups_text = args
        .groups
        .as_ref()
        .ok_or_else(|| Failure::usage("bundle needs --groups (or --primes)"))?;
    let groups = parse::groups(groups_text)?;
    if let Some(x) = args.x {
        let report = identity_check(base, &groups, x, args.anchor, args.modulus, budget)?;
        let probable = report.probable_prime_used;
        let violation = (!report.identity_holds)
            .then(|| "the counting identity failed on a scanned fiber".to_string());
        return Ok(Outcome::new(json_of(&report)?).probable(probable).with_violation(violation));
    }
    let bound = args
        .bound
        .ok_or_else(|| Failure::usage("bundle search needs --bound (or use --x / --primes)"))?;
    let report =
        bundle_search(base, &groups, args.anchor, args.modulus, bound, args.seed, budget)?;
    let probable = report.probable_prime_used;
    Ok(Outcome::new(json_of(&report)?).probable(probable))
}

fn chatelet(args: &ChateletArgs, csv: bool, budget: &Budget) -> Result<Outcome, Failure> {
    if args.samples.is_some() || args.degrees.is_some() || args.height.is_some() {
        let (Some(degree), Some(height), Some(samples)) =
            (args.degrees, args.height, args.samples)
        else {
            return Err(Failure::usage(
                "proportion mode needs --degrees, --height and --samples together",
            ));
        };
        if args.poly.is_some() {
            return Err(Failure::usage("choose one mode: --poly scan or sampled proportion"));
        }
        let collect = args.verdicts || csv;
        let report = solvability_proportion(
            degree, height, args.bound, samples, args.seed, collect, budget,
        )?;
        let mut table = Table::new(&["index", "poly", "solvable", "m", "x", "y"]);
        for verdict in report.verdicts.iter().flatten() {
            let (m, x, y) = verdict
                .solution
                .as_ref()
                .map_or((String::new(), String::new(), String::new()), |s| {
                    (s.m.to_string(), s.x.to_string(), s.y.to_string())
                });
            table.rows.push(vec![
                verdict.index.to_string(),
                verdict.poly.clone(),
                verdict.solvable.to_string(),
                m,
                x,
                y,
            ]);
        }
        let probable = report.probable_prime_used;
        return Ok(Outcome::new(json_of(&report)?).probable(probable).with_table(table));
    }
    let poly_text =
        args.poly.as_ref().ok_or_else(|| Failure::usage("scan mode needs --poly"))?;
    let spec = ChateletSpec::new(args.a, parse::poly(poly_text)?, args.anchor, args.modulus)?;
    let report = solve_chatelet(&spec, args.bound, budget)?;
    let probable = report.probable_prime_used;
    Ok(Outcome::new(json_of(&report)?).probable(probable))
}

fn prob(args: &ProbArgs) -> Result<Outcome, Failure> {
    let modes = [args.rd.is_some(), args.lower.is_some(), args.ell.is_some()];
    if modes.iter().filter(|&&m| m).count() != 1 {
        return Err(Failure::usage("choose exactly one of --rd, --lower, --ell"));
    }
    if let Some(d) = args.rd {
        let rd = rd_exact(d)?;
        return Ok(Outcome::new(json!({
            "d": d.to_string(),
            "rd": ratio_string(&rd),
        })));
    }
    if let Some(d) = args.lower {
        let table = lower_bound(d, args.truncation)?;
        return Ok(Outcome::new(json_of(&table)?));
    }
    let ell = args.ell.expect("mode count checked above");
    let degrees = args
        .degrees
        .as_ref()
        .ok_or_else(|| Failure::usage("--ell needs --degrees for c_ell"))?;
    let c = c_ell(ell, degrees);
    Ok(Outcome::new(json!({
        "ell": ell.to_string(),
        "degrees": degrees.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        "c_ell": ratio_string(&c),
    })))
}
