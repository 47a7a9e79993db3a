//! Acceptance suite: one test per criterion, each printing a PASS or FAIL line.
//!
//! Lines go straight to the stderr handle so they survive the harness's output
//! capture and show up in `cargo test` logs.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustfair::aggregators::{gini, power_mean, umswf};
use robustfair::allocation::{
    invert_single_sqrt, solve_allocation, utilities, Allocation, AllocationInstance, UtilityModel,
};
use robustfair::bounds::{
    holder_certificate, holder_empirical_check, holder_ratio, robust_gap_bound, sample_complexity, sandwich,
    HolderCase, HolderNorm, SampleComplexityQuery,
};
use robustfair::games::{
    altruistic_profile, check_interchange, verify_equilibrium, AngelStrategy, DaemonSpace, GameSpec, Payoff,
};
use robustfair::solvers::{Objective, SentimentMap, SolveConfig};
use robustfair::weightsets::GridOracle;
use robustfair::{
    Aggregator, BallBase, Direction, Norm, Power, RobustAggregator, Sense, SentimentVector, WeightSet, WeightVector,
};

type Outcome = Result<String, String>;

fn report(id: u32, name: &str, outcome: Outcome) {
    let line = match &outcome {
        Ok(detail) => format!("PASS [{id:>2}] {name}: {detail}"),
        Err(detail) => format!("FAIL [{id:>2}] {name}: {detail}"),
    };
    let mut err = std::io::stderr().lock();
    writeln!(err, "{line}").unwrap();
    if let Err(detail) = outcome {
        panic!("criterion {id} ({name}) failed: {detail}");
    }
}

fn check(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn wv(v: &[f64]) -> WeightVector {
    WeightVector::new(v.to_vec()).unwrap()
}

fn util(v: &[f64]) -> SentimentVector {
    SentimentVector::utility(v.to_vec()).unwrap()
}

fn random_simplex(rng: &mut ChaCha8Rng, g: usize) -> WeightVector {
    let raw: Vec<f64> = (0..g).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    wv(&raw.iter().map(|x| x / total).collect::<Vec<_>>())
}

fn spread(s: &[f64]) -> f64 {
    s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - s.iter().cloned().fold(f64::INFINITY, f64::min)
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn equivalences() -> Outcome {
    const TOL: f64 = 1e-12;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for g in [2, 3, 5] {
        for _ in 0..200 {
            let s: Vec<f64> = (0..g).map(|_| rng.gen_range(0.0..10.0)).collect();
            let (min, max) = (
                s.iter().cloned().fold(f64::INFINITY, f64::min),
                s.iter().cloned().fold(0.0, f64::max),
            );
            let w_star = random_simplex(&mut rng, g);
            let gamma = rng.gen_range(0.0..=1.0);
            let simplex = WeightSet::full_simplex(g).unwrap();
            let single = WeightSet::singleton(w_star.clone());
            let lower = WeightSet::lower_bounded(gamma, w_star.clone()).unwrap();
            let orbit = WeightSet::permutation_orbit(w_star.clone());
            let sorted = w_star.sorted_ascending();
            let dis = SentimentVector::disutility(s.clone()).unwrap();
            let cases = [
                (simplex.respond(&s, Direction::Minimize).unwrap().value, min),
                (simplex.respond(&s, Direction::Maximize).unwrap().value, max),
                (single.respond(&s, Direction::Minimize).unwrap().value, w_star.dot(&s)),
                (
                    lower.respond(&s, Direction::Minimize).unwrap().value,
                    umswf(&util(&s), gamma, &w_star).unwrap(),
                ),
                (
                    lower.respond(&s, Direction::Maximize).unwrap().value,
                    umswf(&dis, gamma, &w_star).unwrap(),
                ),
                (
                    orbit.respond(&s, Direction::Minimize).unwrap().value,
                    gini(&util(&s), &sorted, Sense::Utility).unwrap(),
                ),
                (
                    orbit.respond(&s, Direction::Maximize).unwrap().value,
                    gini(&dis, &sorted, Sense::Disutility).unwrap(),
                ),
            ];
            for (k, (got, want)) in cases.iter().enumerate() {
                let err = relative(*got, *want);
                worst = worst.max(err);
                check(err <= TOL, || format!("case {k} on S = {s:?}: {got} vs {want}"))?;
                count += 1;
            }
        }
    }
    Ok(format!(
        "{count} comparisons, worst relative error {worst:.1e} (tolerance {TOL:.0e})"
    ))
}

fn ball_oracles() -> Outcome {
    const RESOLUTION: f64 = 1e-3;
    const FACTOR: f64 = 2.0 * RESOLUTION;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for g in [2, 3] {
        let center = if g == 2 { wv(&[0.3, 0.7]) } else { wv(&[0.2, 0.3, 0.5]) };
        for norm in [Norm::L1, Norm::L2, Norm::Linf] {
            let set = WeightSet::norm_ball(BallBase::Singleton { w_star: center.clone() }, norm, 0.2).unwrap();
            let oracle = GridOracle::new(&set, RESOLUTION).unwrap();
            for _ in 0..100 {
                let s: Vec<f64> = (0..g).map(|_| rng.gen_range(0.0..10.0)).collect();
                for direction in [Direction::Minimize, Direction::Maximize] {
                    let got = set.respond(&s, direction).unwrap();
                    let grid = oracle.best_response(&s, direction).unwrap();
                    let err = (got.value - grid.value).abs() / spread(&s).max(f64::MIN_POSITIVE);
                    worst = worst.max(err);
                    check(err <= FACTOR, || {
                        format!(
                            "{norm:?} g = {g} {direction:?} S = {s:?}: {} vs grid {}",
                            got.value, grid.value
                        )
                    })?;
                    check(set.membership(&got.w, 1e-6).unwrap(), || {
                        format!("{norm:?} response leaves the set")
                    })?;
                }
            }
        }
    }
    let set = WeightSet::norm_ball(
        BallBase::Singleton {
            w_star: wv(&[0.25, 0.25, 0.5]),
        },
        Norm::Linf,
        0.2,
    )
    .unwrap();
    let br = set.respond(&[3.0, 2.0, 1.0], Direction::Minimize).unwrap();
    for (got, want) in br.w.as_slice().iter().zip([0.05, 0.25, 0.7]) {
        check((got - want).abs() <= 1e-9, || {
            format!("fixture weights {:?}", br.w.as_slice())
        })?;
    }
    check((br.value - 1.35).abs() <= 1e-9, || {
        format!("fixture value {}", br.value)
    })?;
    Ok(format!(
        "worst gap {worst:.2e}·range (tolerance {FACTOR:.0e}); fixture w = {:?}, value {}",
        br.w.as_slice(),
        br.value
    ))
}

fn lerp(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect()
}

/// `f(tA + (1-t)B) - (t f(A) + (1-t) f(B))`: positive above the chord.
fn chord_excess(f: &dyn Fn(&[f64]) -> f64, a: &[f64], b: &[f64], t: f64) -> f64 {
    f(&lerp(a, b, t)) - (t * f(a) + (1.0 - t) * f(b))
}

fn curvature() -> Outcome {
    const TOL: f64 = 1e-10;
    const TRIPLES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let powers = [f64::NEG_INFINITY, -2.0, 0.0, 0.5, 1.0, 3.0, f64::INFINITY];
    for p in powers {
        let power = Power::from_f64(p).unwrap();
        // Concave in S and convex in w when p ≤ 1; the reverse when p ≥ 1.
        let mut signs = vec![];
        if p <= 1.0 {
            signs.push(1.0);
        }
        if p >= 1.0 {
            signs.push(-1.0);
        }
        for sign in signs {
            for _ in 0..TRIPLES {
                let g = rng.gen_range(2..=4);
                let (s, s2): (Vec<f64>, Vec<f64>) = (
                    (0..g).map(|_| rng.gen_range(0.1..10.0)).collect(),
                    (0..g).map(|_| rng.gen_range(0.1..10.0)).collect(),
                );
                let (w, w2) = (random_simplex(&mut rng, g), random_simplex(&mut rng, g));
                let t = rng.gen_range(0.0..=1.0);
                let in_s = chord_excess(&|v| power_mean(&util(v), &w, power).unwrap(), &s, &s2, t);
                let in_w = chord_excess(
                    &|v| power_mean(&util(&s), &wv(v), power).unwrap(),
                    w.as_slice(),
                    w2.as_slice(),
                    t,
                );
                let violation = (-sign * in_s).max(sign * in_w);
                worst = worst.max(violation);
                check(violation <= TOL, || format!("p = {p}: violation {violation}"))?;
            }
            cases += 2;
        }
    }
    // Concave utilities composed with a robust welfare (p ≤ 1) are concave in θ;
    // convex disutilities composed with a robust malfare (p ≥ 1) are convex in θ.
    let rates = [1.0, 2.5, 0.7];
    let sets = [
        WeightSet::full_simplex(3).unwrap(),
        WeightSet::lower_bounded(0.5, wv(&[0.2, 0.3, 0.5])).unwrap(),
        WeightSet::permutation_orbit(wv(&[0.2, 0.3, 0.5])),
        WeightSet::norm_ball(
            BallBase::Singleton {
                w_star: wv(&[0.2, 0.3, 0.5]),
            },
            Norm::L1,
            0.2,
        )
        .unwrap(),
        WeightSet::norm_ball(
            BallBase::Singleton {
                w_star: wv(&[0.2, 0.3, 0.5]),
            },
            Norm::Linf,
            0.1,
        )
        .unwrap(),
    ];
    type Map = fn(f64, f64) -> f64;
    let welfare: [(Map, f64); 2] = [(|a, x| (a * x).sqrt(), 0.5), (|a, x| (1.0 + a * x).ln(), -1.0)];
    let malfare: [(Map, f64); 2] = [(|a, x| a * x * x, 2.0), (|a, x| (a * x).exp() - 1.0, 1.0)];
    for (maps, sense, sign) in [(welfare, Sense::Utility, 1.0), (malfare, Sense::Disutility, -1.0)] {
        for (map, p) in maps {
            for set in &sets {
                let robust = RobustAggregator::power_mean(Power::Finite(p), set.clone()).unwrap();
                let objective = |theta: &[f64]| {
                    let s: Vec<f64> = theta.iter().zip(&rates).map(|(x, a)| map(*a, *x)).collect();
                    robust.value(&SentimentVector::new(s, sense).unwrap()).unwrap().value
                };
                for _ in 0..TRIPLES {
                    let a: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..2.0)).collect();
                    let b: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..2.0)).collect();
                    let t = rng.gen_range(0.0..=1.0);
                    let violation = -sign * chord_excess(&objective, &a, &b, t);
                    worst = worst.max(violation);
                    check(violation <= TOL, || {
                        format!("composition p = {p} over {set:?}: violation {violation}")
                    })?;
                }
                cases += 1;
            }
        }
    }
    Ok(format!(
        "{cases} cases × {TRIPLES} triples, worst violation {worst:.1e} (tolerance {TOL:.0e})"
    ))
}

fn single_good(model: UtilityModel, c: f64) -> AllocationInstance {
    AllocationInstance::new(vec![c], model, vec![]).unwrap()
}

fn objective_value(objective: &Objective, s: &SentimentVector) -> f64 {
    match objective {
        Objective::Plain(a) => a.aggregate(s).unwrap(),
        Objective::Robust(r) => r.value(s).unwrap().value,
    }
}

/// Full-capacity grid over single-good allocations for g ≤ 3; returns (best, observed range).
fn allocation_grid(inst: &AllocationInstance, objective: &Objective, resolution: f64) -> (f64, f64) {
    let c = inst.capacities()[0];
    let n = (1.0 / resolution).round() as usize;
    let (mut best, mut range) = (f64::NEG_INFINITY, 0.0f64);
    let mut eval = |theta: Vec<f64>| {
        let s = util(&inst.sentiment(&theta).unwrap());
        range = range.max(s.range());
        best = best.max(objective_value(objective, &s));
    };
    for a in 0..=n {
        let x = c * a as f64 / n as f64;
        if inst.groups() == 2 {
            eval(vec![x, c - x]);
        } else {
            for b in 0..=(n - a) {
                let y = c * b as f64 / n as f64;
                eval(vec![x, y, (c - x - y).max(0.0)]);
            }
        }
    }
    (best, range)
}

fn allocation() -> Outcome {
    let cfg = SolveConfig::default();
    let linear = single_good(UtilityModel::LinearSingle { rates: vec![1.0, 2.0] }, 10.0);
    let egalitarian = Objective::Robust(
        RobustAggregator::power_mean(Power::Finite(1.0), WeightSet::full_simplex(2).unwrap()).unwrap(),
    );
    let egal = solve_allocation(&linear, egalitarian, &cfg).unwrap();
    let egal_err = (egal.value - 20.0 / 3.0).abs();
    check(egal_err <= 1e-3, || format!("egalitarian value {}", egal.value))?;

    let utilitarian = Objective::Plain(Aggregator::power_mean(Power::Finite(1.0), wv(&[0.5, 0.5])));
    let util_report = solve_allocation(&linear, utilitarian, &cfg).unwrap();
    check(util_report.theta == [0.0, 10.0] && util_report.value == 10.0, || {
        format!("utilitarian θ = {:?}, value {}", util_report.theta, util_report.value)
    })?;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut roundtrip: f64 = 0.0;
    for _ in 0..200 {
        let rates: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..5.0)).collect();
        let inst = single_good(UtilityModel::SqrtSingle { rates }, 20.0);
        let share = random_simplex(&mut rng, 3);
        let used = rng.gen_range(0.0..=20.0);
        let theta = Allocation::new(share.as_slice().iter().map(|x| vec![used * x]).collect()).unwrap();
        let s = utilities(&inst, &theta).unwrap();
        let back = utilities(&inst, &invert_single_sqrt(&inst, &s).unwrap()).unwrap();
        for (a, b) in s.values().iter().zip(back.values()) {
            roundtrip = roundtrip.max((a - b).abs());
        }
    }
    check(roundtrip < 1e-10, || format!("sqrt roundtrip error {roundtrip}"))?;

    let instances = [
        single_good(UtilityModel::LinearSingle { rates: vec![1.0, 2.0] }, 10.0),
        single_good(UtilityModel::SqrtSingle { rates: vec![1.0, 3.0] }, 5.0),
        single_good(
            UtilityModel::LinearSingle {
                rates: vec![1.0, 0.5, 2.0],
            },
            4.0,
        ),
        single_good(
            UtilityModel::SqrtSingle {
                rates: vec![2.0, 1.0, 0.5],
            },
            6.0,
        ),
    ];
    let mut worst: f64 = 0.0;
    let mut solves = 0;
    for inst in &instances {
        let g = inst.groups();
        let center = if g == 2 { wv(&[0.4, 0.6]) } else { wv(&[0.2, 0.3, 0.5]) };
        let robust =
            |p: f64, set: WeightSet| Objective::Robust(RobustAggregator::power_mean(Power::Finite(p), set).unwrap());
        let objectives = [
            robust(1.0, WeightSet::full_simplex(g).unwrap()),
            robust(0.5, WeightSet::lower_bounded(0.6, center.clone()).unwrap()),
            robust(
                0.0,
                WeightSet::norm_ball(BallBase::Singleton { w_star: center.clone() }, Norm::L1, 0.2).unwrap(),
            ),
            robust(-1.0, WeightSet::permutation_orbit(center.clone())),
            Objective::Plain(Aggregator::umswf(0.5, center.clone()).unwrap()),
        ];
        for objective in objectives {
            let (grid, range) = allocation_grid(inst, &objective, 1e-2);
            let solved = solve_allocation(inst, objective.clone(), &cfg).unwrap();
            let err = (solved.value - grid).abs() / range;
            worst = worst.max(err);
            check(err <= 2e-2, || {
                format!("{objective:?}: solver {} vs grid {grid}", solved.value)
            })?;
            solves += 1;
        }
    }
    Ok(format!(
        "egalitarian error {egal_err:.1e}, utilitarian θ = {:?}, roundtrip {roundtrip:.1e}, {solves} grid solves worst {worst:.1e}·range",
        util_report.theta
    ))
}

fn interchange() -> Outcome {
    const TOL: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let g = if k % 2 == 0 { 2 } else { 3 };
        let count = rng.gen_range(2..=5);
        let points: Vec<Vec<f64>> = (0..count)
            .map(|_| (0..g).map(|_| rng.gen_range(0.0..5.0)).collect())
            .collect();
        let angel = match k % 3 {
            0 => WeightSet::full_simplex(g).unwrap(),
            1 => WeightSet::lower_bounded(0.5, random_simplex(&mut rng, g)).unwrap(),
            _ => WeightSet::norm_ball(
                BallBase::Singleton {
                    w_star: random_simplex(&mut rng, g),
                },
                Norm::Linf,
                0.15,
            )
            .unwrap(),
        };
        let game = GameSpec::new(
            DaemonSpace::Finite {
                points,
                convex_hull: true,
            },
            angel,
            Payoff::Egocentric,
            Sense::Utility,
        )
        .unwrap();
        let r = check_interchange(&game, TOL).unwrap();
        worst = worst.max(r.gap);
        check(r.gap <= TOL && r.within_tolerance, || {
            format!("game {k}: gap {}", r.gap)
        })?;
    }
    let pure = GameSpec::new(
        DaemonSpace::Finite {
            points: vec![vec![0.0, 3.0], vec![3.0, 0.0]],
            convex_hull: false,
        },
        WeightSet::full_simplex(2).unwrap(),
        Payoff::Egocentric,
        Sense::Utility,
    )
    .unwrap();
    let counter = check_interchange(&pure, TOL).unwrap();
    check((counter.gap - 1.5).abs() <= 1e-12, || {
        format!("counterexample gap {}", counter.gap)
    })?;
    Ok(format!(
        "50 hull games, worst gap {worst:.1e} (tolerance {TOL:.0e}); pure-strategy gap {}",
        counter.gap
    ))
}

fn altruistic_game(daemon: DaemonSpace, p: f64, w_star: &[f64]) -> GameSpec {
    let angel = WeightSet::full_simplex(w_star.len()).unwrap();
    GameSpec::new(
        daemon,
        angel,
        Payoff::AltruisticAngel {
            p,
            w_star: wv(w_star),
            s_min: 0.0,
        },
        Sense::Utility,
    )
    .unwrap()
}

/// Points with `w*·S^{p-1} = 1`, so the Angel's normalizer is the same for every action.
fn constant_normalizer_points(p: f64, w_star: [f64; 2]) -> Vec<Vec<f64>> {
    [0.5, 1.0, 1.5, 2.0, 3.0]
        .iter()
        .map(|&s1: &f64| {
            if p == 1.0 {
                return vec![s1, 4.0 - s1];
            }
            let rest = (1.0 - w_star[0] * s1.powf(p - 1.0)) / w_star[1];
            vec![s1, rest.powf(1.0 / (p - 1.0))]
        })
        .collect()
}

fn altruistic_equilibria() -> Outcome {
    const GRID: f64 = 1e-2;
    let mut worst: f64 = 0.0;
    for p in [0.5, 1.0, 2.0] {
        let instances = [
            altruistic_game(
                DaemonSpace::Capacity {
                    g: 2,
                    total: 2.0,
                    floor: 0.0,
                },
                p,
                &[0.5, 0.5],
            ),
            altruistic_game(
                DaemonSpace::Capacity {
                    g: 3,
                    total: 3.0,
                    floor: 0.0,
                },
                p,
                &[1.0 / 3.0; 3],
            ),
            altruistic_game(
                DaemonSpace::Finite {
                    points: constant_normalizer_points(p, [0.3, 0.7]),
                    convex_hull: false,
                },
                p,
                &[0.3, 0.7],
            ),
        ];
        for (k, game) in instances.iter().enumerate() {
            let profile = altruistic_profile(game, GRID).unwrap();
            let eq = verify_equilibrium(game, &profile, GRID).unwrap();
            worst = worst.max(eq.max_improvement);
            check(eq.max_improvement <= 1e-6 && eq.angel_optimal, || {
                format!("p = {p}, instance {k}: {eq:?}")
            })?;
        }
    }
    let game = altruistic_game(
        DaemonSpace::Capacity {
            g: 2,
            total: 2.0,
            floor: 0.0,
        },
        0.5,
        &[0.3, 0.7],
    );
    let mut profile = altruistic_profile(&game, GRID).unwrap();
    profile.angel = AngelStrategy::PowerScore {
        exponent: 0.5,
        w_star: wv(&[0.3, 0.7]),
    };
    let control = verify_equilibrium(&game, &profile, GRID).unwrap();
    check(control.max_improvement > 1e-3, || {
        format!("control improvement {}", control.max_improvement)
    })?;
    Ok(format!(
        "9 instances, worst improvement {worst:.1e} (tolerance 1e-6); perturbed control {:.3e}",
        control.max_improvement
    ))
}

fn holder() -> Outcome {
    const TRIALS: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut seed = 700;
    let (mut worst, mut emitted) = (0.0f64, 0);
    for g in [2, 3] {
        let w_star = random_simplex(&mut rng, g);
        let sets = [
            WeightSet::full_simplex(g).unwrap(),
            WeightSet::singleton(w_star.clone()),
            WeightSet::lower_bounded(0.6, w_star.clone()).unwrap(),
            WeightSet::permutation_orbit(w_star.clone()),
            WeightSet::norm_ball(BallBase::Singleton { w_star: w_star.clone() }, Norm::L1, 0.2).unwrap(),
            WeightSet::norm_ball(BallBase::Singleton { w_star }, Norm::L2, 0.15).unwrap(),
        ];
        for set in &sets {
            for p in [f64::NEG_INFINITY, -2.0, -0.5, 0.0, 0.3, 0.8, 1.0, 2.5, f64::INFINITY] {
                let power = Power::from_f64(p).unwrap();
                for r in [0.5, 3.0] {
                    let Ok(certs) = holder_certificate(power, set, r) else {
                        continue;
                    };
                    let robust = RobustAggregator::power_mean(power, set.clone()).unwrap();
                    for cert in certs.all {
                        seed += 1;
                        let (ok, ratio) = holder_empirical_check(&robust, &cert, TRIALS, r, seed).unwrap();
                        worst = worst.max(ratio);
                        emitted += 1;
                        check(ok && ratio <= 1.0 + 1e-9, || {
                            format!("{cert:?} at p = {p} on {set:?}: ratio {ratio}")
                        })?;
                    }
                }
            }
        }
    }
    // Moving only the heaviest coordinate makes the linear 1-norm bound tight.
    let w_star = wv(&[0.2, 0.5, 0.3]);
    let set = WeightSet::singleton(w_star.clone());
    let linear = holder_certificate(Power::Finite(1.0), &set, 1.0).unwrap();
    let cert = linear
        .all
        .iter()
        .find(|c| c.case == HolderCase::Linear && c.norm == HolderNorm::L1)
        .unwrap();
    let robust = RobustAggregator::power_mean(Power::Finite(1.0), set).unwrap();
    let tight = holder_ratio(&robust, cert, &[0.4, 0.9, 0.1], &[0.4, 0.2, 0.1]).unwrap();
    check(tight > 0.99, || format!("tightness ratio {tight}"))?;
    Ok(format!("{emitted} certificates × {TRIALS} trials, worst ratio {worst:.6} (limit 1+1e-9); linear tightness ratio {tight:.6}"))
}

/// Members drawn from the uniform distribution on the simplex; sets with no
/// interior are enumerated instead.
fn members(set: &WeightSet, rng: &mut ChaCha8Rng, count: usize) -> Vec<WeightVector> {
    match set {
        WeightSet::Singleton { w_star } => return vec![w_star.clone(); count],
        WeightSet::PermutationOrbit { sorted_weights } => {
            let w = sorted_weights.as_slice();
            return (0..count)
                .map(|_| {
                    let mut order: Vec<usize> = (0..w.len()).collect();
                    for i in (1..order.len()).rev() {
                        order.swap(i, rng.gen_range(0..=i));
                    }
                    wv(&order.iter().map(|&i| w[i]).collect::<Vec<_>>())
                })
                .collect();
        }
        _ => {}
    }
    let g = set.dim();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let e: Vec<f64> = (0..g).map(|_| -rng.gen_range(1e-12f64..1.0).ln()).collect();
        let total: f64 = e.iter().sum();
        let w = WeightVector::new(e.iter().map(|x| x / total).collect()).unwrap();
        if set.membership(&w, 0.0).unwrap() {
            out.push(w);
        }
    }
    out
}

fn bounds() -> Outcome {
    const SLACK: f64 = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sets_checked = 0;
    for g in [2, 3] {
        let w_star = random_simplex(&mut rng, g);
        let sets = [
            WeightSet::full_simplex(g).unwrap(),
            WeightSet::singleton(w_star.clone()),
            WeightSet::lower_bounded(0.4, w_star.clone()).unwrap(),
            WeightSet::permutation_orbit(w_star.clone()),
            WeightSet::norm_ball(BallBase::Singleton { w_star: w_star.clone() }, Norm::L1, 0.2).unwrap(),
            WeightSet::norm_ball(BallBase::Singleton { w_star: w_star.clone() }, Norm::L2, 0.15).unwrap(),
            WeightSet::norm_ball(BallBase::Singleton { w_star }, Norm::Linf, 0.1).unwrap(),
        ];
        for set in &sets {
            let sampled = members(set, &mut rng, 1000);
            let s: Vec<f64> = (0..g).map(|_| rng.gen_range(0.1..5.0)).collect();
            for p in [f64::NEG_INFINITY, -1.5, 0.0, 0.5, 1.0] {
                let agg = Aggregator::power_mean(Power::from_f64(p).unwrap(), WeightVector::uniform(g).unwrap());
                let (lo, hi) = sandwich(&util(&s), &agg, set).unwrap();
                for w in &sampled {
                    let v = power_mean(&util(&s), w, Power::from_f64(p).unwrap()).unwrap();
                    check(v >= lo - SLACK && v <= hi + SLACK, || {
                        format!("{v} outside [{lo}, {hi}] for p = {p} on {set:?}")
                    })?;
                }
            }
            // The gap bound is linear in the weights, so it governs the linear families.
            for agg in [
                Aggregator::power_mean(Power::Finite(1.0), WeightVector::uniform(g).unwrap()),
                Aggregator::umswf(0.7, WeightVector::uniform(g).unwrap()).unwrap(),
            ] {
                let (lo, hi) = sandwich(&util(&s), &agg, set).unwrap();
                let bound = robust_gap_bound(spread(&s), set).unwrap();
                check(hi - lo <= bound + SLACK, || {
                    format!("width {} exceeds gap bound {bound} on {set:?}", hi - lo)
                })?;
            }
            sets_checked += 1;
        }
    }

    let base = SampleComplexityQuery {
        lambda: 1.0,
        alpha: 1.0,
        norm: HolderNorm::Linf,
        v: vec![1.0, 1.0],
        t: 2.0,
        delta: 0.05,
        epsilon: 0.1,
        m0: 1,
    };
    let fixture = sample_complexity(&base).unwrap();
    check(fixture == 439, || format!("fixture returned {fixture}"))?;
    let levels = [0usize, 1, 2];
    let lambdas = [0.5, 1.0, 2.0];
    let epsilons = [0.05, 0.1, 0.2];
    let deltas = [0.01, 0.05, 0.2];
    let ts = [1.0, 2.0, 4.0];
    let m = |l: usize, e: usize, d: usize, t: usize| {
        sample_complexity(&SampleComplexityQuery {
            lambda: lambdas[l],
            epsilon: epsilons[e],
            delta: deltas[d],
            t: ts[t],
            ..base.clone()
        })
        .unwrap()
    };
    let mut comparisons = 0;
    for l in levels {
        for e in levels {
            for d in levels {
                for t in levels {
                    let here = m(l, e, d, t);
                    if l < 2 {
                        check(m(l + 1, e, d, t) >= here, || "not nondecreasing in lambda".into())?;
                    }
                    if e < 2 {
                        check(m(l, e + 1, d, t) <= here, || "not nonincreasing in epsilon".into())?;
                    }
                    if d < 2 {
                        check(m(l, e, d + 1, t) <= here, || "not nonincreasing in delta".into())?;
                    }
                    if t < 2 {
                        check(m(l, e, d, t + 1) >= here, || "not nondecreasing in t".into())?;
                    }
                    comparisons += 4 - [l, e, d, t].iter().filter(|&&x| x == 2).count();
                }
            }
        }
    }
    Ok(format!("{sets_checked} sets × 1000 members contained (slack {SLACK:.0e}); sample size {fixture}; {comparisons} monotone comparisons on 3^4 grid"))
}

fn gradients() -> Outcome {
    const TOL: f64 = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let names = ["power mean", "Gini", "UMSWF", "Gini power mean"];
    let mut worst = [0.0f64; 4];
    for trial in 0..100 {
        let g = rng.gen_range(2..=5);
        let s = loop {
            let s: Vec<f64> = (0..g).map(|_| rng.gen_range(0.1..10.0)).collect();
            if (0..g).all(|a| (0..a).all(|b| (s[a] - s[b]).abs() >= 1e-3)) {
                break s;
            }
        };
        let w = random_simplex(&mut rng, g);
        let sense = if trial % 2 == 0 {
            Sense::Utility
        } else {
            Sense::Disutility
        };
        let p = match sense {
            Sense::Utility => rng.gen_range(-4.0..1.0),
            Sense::Disutility => rng.gen_range(1.0..5.0),
        };
        let families = [
            Aggregator::power_mean(Power::Finite(p), w.clone()),
            Aggregator::gini(w.clone(), sense),
            Aggregator::umswf(rng.gen_range(0.0..1.0), w.clone()).unwrap(),
            Aggregator::gini_power_mean(Power::Finite(p), w, sense).unwrap(),
        ];
        let at = |a: &Aggregator, v: &[f64]| a.aggregate(&SentimentVector::new(v.to_vec(), sense).unwrap()).unwrap();
        for (k, a) in families.iter().enumerate() {
            let analytic = a.gradient(&SentimentVector::new(s.clone(), sense).unwrap()).unwrap();
            let numeric: Vec<f64> = (0..g)
                .map(|i| {
                    let h = 1e-6 * s[i].max(1.0);
                    let (mut up, mut down) = (s.clone(), s.clone());
                    up[i] += h;
                    down[i] -= h;
                    (at(a, &up) - at(a, &down)) / (2.0 * h)
                })
                .collect();
            let scale = analytic.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let err = analytic
                .iter()
                .zip(&numeric)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
                / scale;
            worst[k] = worst[k].max(err);
            check(err <= TOL, || {
                format!("{} at S = {s:?}: relative error {err}", names[k])
            })?;
        }
    }
    let summary: Vec<String> = names.iter().zip(worst).map(|(n, e)| format!("{n} {e:.1e}")).collect();
    Ok(format!(
        "100 instances per family, worst relative error: {} (tolerance {TOL:.0e})",
        summary.join(", ")
    ))
}

fn fixture_dir(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join(name)
}

fn cli_determinism() -> Outcome {
    let run = |command: &str| {
        let input = fixture_dir("fixtures").join(format!("{command}.json"));
        let out = Command::new(env!("CARGO_BIN_EXE_robustfair"))
            .args([command, input.to_str().unwrap(), "--no-timing", "--seed", "7"])
            .output()
            .expect("binary runs");
        if out.status.success() {
            Ok(out.stdout)
        } else {
            Err(format!("{command} exited with {:?}", out.status.code()))
        }
    };
    let commands = ["eval", "adversary", "solve", "game", "bounds", "samples"];
    for command in commands {
        let (first, second) = (run(command)?, run(command)?);
        check(first == second, || format!("{command} differs between runs"))?;
        let golden = std::fs::read(fixture_dir("golden").join(format!("{command}.json"))).map_err(|e| e.to_string())?;
        check(first == golden, || format!("{command} differs from its golden report"))?;
    }
    Ok(format!(
        "{} commands byte-identical across runs and equal to golden reports",
        commands.len()
    ))
}

#[test]
fn c01_best_response_equivalences() {
    report(1, "best-response equivalences", equivalences());
}

#[test]
fn c02_ball_oracles_match_grid() {
    report(2, "norm-ball oracles vs grid", ball_oracles());
}

#[test]
fn c03_curvature() {
    report(3, "curvature", curvature());
}

#[test]
fn c04_allocation() {
    report(4, "allocation", allocation());
}

#[test]
fn c05_interchange() {
    report(5, "max-min interchange", interchange());
}

#[test]
fn c06_altruistic_equilibria() {
    report(6, "altruistic equilibria", altruistic_equilibria());
}

#[test]
fn c07_holder_certificates() {
    report(7, "Hölder certificates", holder());
}

#[test]
fn c08_bounds() {
    report(8, "sandwich, gap bound, sample complexity", bounds());
}

#[test]
fn c09_gradients() {
    report(9, "gradients", gradients());
}

#[test]
fn c10_cli_determinism() {
    report(10, "CLI determinism", cli_determinism());
}
