use std::io::Write;
use std::path::Path;

use robustfair::allocation::{solve_allocation, Allocation};
use robustfair::bounds::{generalization_sandwich, holder_certificate, robust_gap_bound, sample_complexity, sandwich};
use robustfair::bounds::{HolderCertificate, HolderNorm};
use robustfair::games::{
    altruistic_profile, check_interchange, daemon_strategic_value, verify_equilibrium, DaemonChoice, DaemonSpace,
    Payoff, StrategyProfile,
};
use robustfair::robust::power_mean_extreme;
use robustfair::{Aggregator, Direction, SentimentVector};
use serde_json::{json, Value};

use crate::schema::{
    AdversaryBody, AggregateBody, AllocationBody, BoundsBody, DirectionSpec, GameBody, SampleComplexityBody,
};
use crate::Failure;

pub struct Flags {
    pub seed: u64,
    pub tol: f64,
}

pub struct Outcome {
    pub result: Value,
    /// Non-convergence is reported after the report is written.
    pub converged: bool,
}

fn done(result: Value) -> Outcome {
    Outcome {
        result,
        converged: true,
    }
}

pub fn eval(body: &AggregateBody, grad: bool) -> Result<Outcome, Failure> {
    let aggregator = body.aggregator.build()?;
    let s = SentimentVector::new(body.sentiment.clone(), body.sense.into())?;
    let value = aggregator.aggregate(&s)?;
    let mut result = json!({ "value": value });
    if grad {
        result["gradient"] = json!(aggregator.gradient(&s)?);
    }
    Ok(done(result))
}

pub fn adversary(body: &AdversaryBody, flag: Option<DirectionSpec>) -> Result<Outcome, Failure> {
    let set = body.set.build()?;
    let direction = match flag.or(body.direction).unwrap_or(DirectionSpec::Min) {
        DirectionSpec::Min => Direction::Minimize,
        DirectionSpec::Max => Direction::Maximize,
    };
    let response = match body.p {
        Some(p) => power_mean_extreme(&set, &body.sentiment, p.to_power()?, direction)?,
        None => set.respond(&body.sentiment, direction)?,
    };
    Ok(done(json!({
        "direction": if direction == Direction::Minimize { "min" } else { "max" },
        "weights": response.w.as_slice(),
        "value": response.value,
        "exact": response.exact,
    })))
}

pub fn solve(body: &AllocationBody, flags: &Flags, trace: Option<&Path>) -> Result<Outcome, Failure> {
    let instance = body.instance()?;
    let cfg = body.solver.config(flags.seed, flags.tol, trace.is_some());
    let report = solve_allocation(&instance, body.objective.build()?, &cfg)?;
    if let Some(path) = trace {
        write_trace(path, &report.trace).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    let theta = Allocation::from_flat(instance.groups(), instance.goods(), report.theta.clone())?;
    Ok(Outcome {
        result: json!({
            "theta": theta.rows(),
            "sentiment": report.sentiment,
            "adversary": report.adversary.as_slice(),
            "value": report.value,
            "gap_estimate": report.gap_estimate,
            "iterations": report.iterations,
            "converged": report.converged,
            "refinement": report.refinement,
        }),
        converged: report.converged,
    })
}

fn write_trace(path: &Path, rows: &[robustfair::solvers::TraceRow]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "iter,value,gap,step")?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.iter, r.value, r.gap, r.step)?;
    }
    out.flush()
}

pub fn game(body: &GameBody, flags: &Flags, verify: bool, grid: f64) -> Result<Outcome, Failure> {
    let game = body.build()?;
    if let Payoff::AltruisticAngel { .. } = &game.payoff {
        let profile = altruistic_profile(&game, grid)?;
        let mut result = json!({ "profile": describe_profile(&game, &profile)? });
        if verify {
            let check = verify_equilibrium(&game, &profile, grid)?;
            result["equilibrium"] = json!({
                "grid": grid,
                "no_deviation": check.no_deviation,
                "max_improvement": check.max_improvement,
                "angel_optimal": check.angel_optimal,
                "angel_shortfall": check.angel_shortfall,
            });
        }
        return Ok(done(result));
    }
    if verify {
        return Err(Failure::Domain(
            "--verify-equilibrium needs an altruistic-angel payoff".into(),
        ));
    }
    let cfg = body.solver.config(flags.seed, flags.tol, false);
    let value = daemon_strategic_value(&game, Some(&cfg))?;
    let mut result = json!({
        "strategic": {
            "sentiment": value.sentiment,
            "index": value.index,
            "mixture": value.mixture,
            "angel_weights": value.response.w.as_slice(),
            "value": value.value,
        }
    });
    if matches!(game.daemon, DaemonSpace::Finite { .. }) && game.payoff == Payoff::Egocentric {
        let check = check_interchange(&game, flags.tol)?;
        result["interchange"] = json!({
            "max_min": check.max_min,
            "min_max": check.min_max,
            "gap": check.gap,
            "within_tolerance": check.within_tolerance,
        });
    }
    Ok(done(result))
}

fn describe_profile(game: &robustfair::games::GameSpec, profile: &StrategyProfile) -> Result<Value, Failure> {
    let (index, choice) = match (&profile.daemon, &game.daemon) {
        (DaemonChoice::Index(i), DaemonSpace::Finite { points, .. }) => (Some(*i), points[*i].clone()),
        (DaemonChoice::Point(s), _) => (None, s.clone()),
        _ => unreachable!("profiles index only finite spaces"),
    };
    let w = profile.angel.apply(&choice)?;
    let (daemon_payoff, angel_payoff) =
        robustfair::games::payoff(game, &SentimentVector::utility(choice.clone())?, &w)?;
    Ok(json!({
        "daemon_choice": choice,
        "index": index,
        "angel_weights": w.as_slice(),
        "daemon_payoff": daemon_payoff,
        "angel_payoff": angel_payoff,
    }))
}

fn norm_name(n: HolderNorm) -> &'static str {
    match n {
        HolderNorm::L1 => "l1",
        HolderNorm::L2 => "l2",
        HolderNorm::Linf => "linf",
        HolderNorm::SelfReferential => "self_referential",
    }
}

fn certificate_json(c: &HolderCertificate) -> Value {
    json!({ "case": c.case.name(), "lambda": c.lambda, "alpha": c.alpha, "norm": norm_name(c.norm) })
}

pub fn bounds(body: &BoundsBody) -> Result<Outcome, Failure> {
    let aggregator = body.aggregator.build()?;
    let set = body.set.build()?;
    let s = SentimentVector::new(body.sentiment.clone(), body.sense.into())?;
    let (lo, hi) = sandwich(&s, &aggregator, &set)?;
    let diameter = set.diameter_l1()?;
    let mut result = json!({
        "sandwich": [lo, hi],
        "gap_bound": robust_gap_bound(s.range(), &set)?,
        "diameter_is_upper_bound": diameter.upper_bound,
    });
    if let Some(r) = body.r {
        let Aggregator::PowerMean { p, .. } = &aggregator else {
            return Err(Failure::Domain(
                "continuity certificates need a power-mean aggregator".into(),
            ));
        };
        let certs = holder_certificate(*p, &set, r)?;
        result["certificate"] = certificate_json(&certs.best);
        result["certificates"] = Value::Array(certs.all.iter().map(certificate_json).collect());
    }
    if let Some(eps) = &body.eps {
        let (glo, ghi) = generalization_sandwich(&s, eps, &aggregator)?;
        result["generalization"] = json!([glo, ghi]);
    }
    Ok(done(result))
}

pub fn samples(body: &SampleComplexityBody) -> Result<Outcome, Failure> {
    Ok(done(json!({ "samples": sample_complexity(&body.query())? })))
}
