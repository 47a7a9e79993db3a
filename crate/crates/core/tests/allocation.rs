use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustfair::allocation::{
    feasible_utility_set_bounds, invert_single_linear, invert_single_sqrt, solve_allocation, utilities, Allocation,
    AllocationInstance, Cap, UtilityModel, UtilitySet,
};
use robustfair::solvers::{Objective, SentimentMap, SolveConfig};
use robustfair::{Aggregator, Error, Power, RobustAggregator, SentimentVector, WeightSet, WeightVector};

fn wv(v: &[f64]) -> WeightVector {
    WeightVector::new(v.to_vec()).unwrap()
}

fn util(v: &[f64]) -> SentimentVector {
    SentimentVector::utility(v.to_vec()).unwrap()
}

fn linear(rates: &[f64], c: f64) -> AllocationInstance {
    AllocationInstance::new(vec![c], UtilityModel::LinearSingle { rates: rates.to_vec() }, vec![]).unwrap()
}

fn sqrt(rates: &[f64], c: f64) -> AllocationInstance {
    AllocationInstance::new(vec![c], UtilityModel::SqrtSingle { rates: rates.to_vec() }, vec![]).unwrap()
}

fn egalitarian() -> Objective {
    Objective::Robust(RobustAggregator::power_mean(Power::Finite(1.0), WeightSet::full_simplex(2).unwrap()).unwrap())
}

fn utilitarian(w: &[f64]) -> Objective {
    Objective::Plain(Aggregator::power_mean(Power::Finite(1.0), wv(w)))
}

fn umswf(gamma: f64, w: &[f64]) -> Objective {
    Objective::Plain(Aggregator::umswf(gamma, wv(w)).unwrap())
}

fn evaluate(objective: &Objective, s: &SentimentVector) -> f64 {
    match objective {
        Objective::Plain(a) => a.aggregate(s).unwrap(),
        Objective::Robust(r) => r.value(s).unwrap().value,
    }
}

/// Oracle for two agents and one good: grid search along the full-capacity line.
fn line_search_optimum(inst: &AllocationInstance, objective: &Objective, steps: usize) -> f64 {
    let c = inst.capacities()[0];
    (0..=steps)
        .map(|k| {
            let x = c * k as f64 / steps as f64;
            evaluate(objective, &util(&inst.sentiment(&[x, c - x]).unwrap()))
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[test]
fn utilities_fixtures() {
    let inst = linear(&[1.0, 2.0], 10.0);
    let theta = Allocation::new(vec![vec![4.0], vec![6.0]]).unwrap();
    assert_eq!(utilities(&inst, &theta).unwrap().values(), &[4.0, 12.0]);
    let single = sqrt(&[1.0], 10.0);
    assert_eq!(
        utilities(&single, &Allocation::new(vec![vec![7.5]]).unwrap())
            .unwrap()
            .values(),
        &[3.0]
    );
    let log = AllocationInstance::new(
        vec![10.0],
        UtilityModel::LogSaturating {
            profits: vec![vec![1.0]],
            caps: vec![vec![Cap::Unbounded]],
        },
        vec![],
    )
    .unwrap();
    let s = utilities(&log, &Allocation::new(vec![vec![std::f64::consts::E - 1.0]]).unwrap()).unwrap();
    assert!((s.values()[0] - 1.0).abs() < 1e-15);
    let over = Allocation::new(vec![vec![6.0], vec![6.0]]).unwrap();
    assert!(matches!(utilities(&inst, &over), Err(Error::Infeasible(_))));
}

#[test]
fn linear_inversion_fixtures() {
    let inst = linear(&[1.0, 2.0], 10.0);
    assert_eq!(
        invert_single_linear(&inst, &util(&[4.0, 12.0])).unwrap().rows(),
        vec![vec![4.0], vec![6.0]]
    );
    assert_eq!(
        invert_single_linear(&inst, &util(&[0.0, 0.0])).unwrap().rows(),
        vec![vec![0.0], vec![0.0]]
    );
    let at_capacity = invert_single_linear(&inst, &util(&[20.0 / 3.0, 20.0 / 3.0])).unwrap();
    assert!((at_capacity.entry(0, 0) - 20.0 / 3.0).abs() < 1e-12);
    assert!((at_capacity.entry(1, 0) - 10.0 / 3.0).abs() < 1e-12);
    assert!((at_capacity.column_sum(0) - 10.0).abs() < 1e-12);
    assert!(matches!(
        invert_single_linear(&inst, &util(&[8.0, 8.0])),
        Err(Error::Infeasible(_))
    ));
    let dead = linear(&[0.0, 1.0], 1.0);
    assert!(matches!(
        invert_single_linear(&dead, &util(&[1.0, 0.0])),
        Err(Error::Domain(_))
    ));
}

#[test]
fn sqrt_inversion_fixtures_and_roundtrip() {
    let inst = sqrt(&[1.0], 10.0);
    assert_eq!(
        invert_single_sqrt(&inst, &util(&[3.0])).unwrap().rows(),
        vec![vec![7.5]]
    );
    assert_eq!(
        invert_single_sqrt(&inst, &util(&[0.0])).unwrap().rows(),
        vec![vec![0.0]]
    );
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let rates: Vec<f64> = (0..3).map(|_| rng.gen_range(0.1..5.0)).collect();
        let inst = sqrt(&rates, 50.0);
        let linear_inst = linear(&rates, 50.0);
        // Draw a feasible allocation, then invert its utilities.
        let raw: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let theta: Vec<Vec<f64>> = raw.iter().map(|x| vec![40.0 * x / total]).collect();
        let theta = Allocation::new(theta).unwrap();
        for (model, invert) in [
            (
                &inst,
                invert_single_sqrt as fn(&AllocationInstance, &SentimentVector) -> _,
            ),
            (&linear_inst, invert_single_linear),
        ] {
            let s = utilities(model, &theta).unwrap();
            let back = utilities(model, &invert(model, &s).unwrap()).unwrap();
            for (a, b) in s.values().iter().zip(back.values()) {
                worst = worst.max((a - b).abs() / (1.0 + a.abs()));
            }
        }
    }
    assert!(worst < 1e-10, "{worst}");
}

#[test]
fn utility_set_descriptions() {
    let inst = linear(&[1.0, 2.0], 10.0);
    let set = feasible_utility_set_bounds(&inst).unwrap();
    assert_eq!(
        set,
        UtilitySet::Halfspace {
            rates: vec![1.0, 2.0],
            capacity: 10.0
        }
    );
    assert_eq!(set.contains(&[10.0, 0.0], 1e-12), Some(true));
    assert_eq!(set.contains(&[5.0, 10.0], 1e-12), Some(true));
    assert_eq!(set.contains(&[5.0, 10.1], 1e-12), Some(false));
    let ellipse = feasible_utility_set_bounds(&sqrt(&[1.0], 7.5)).unwrap();
    assert_eq!(ellipse.contains(&[3.0], 0.0), Some(true));
    assert_eq!(ellipse.contains(&[3.0 + 1e-9], 0.0), Some(false));
    let square = AllocationInstance::new(
        vec![1.0, 1.0],
        UtilityModel::LinearMulti {
            rates: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        },
        vec![],
    )
    .unwrap();
    let UtilitySet::Polytope { points } = feasible_utility_set_bounds(&square).unwrap() else {
        panic!()
    };
    assert_eq!(
        points,
        vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
    );
}

#[test]
fn solve_allocation_fixtures() {
    let cfg = SolveConfig::default();
    let inst = linear(&[1.0, 2.0], 10.0);
    let report = solve_allocation(&inst, egalitarian(), &cfg).unwrap();
    assert!((report.value - 20.0 / 3.0).abs() < 1e-3);
    assert!((report.theta[0] - 20.0 / 3.0).abs() < 1e-3 && (report.theta[1] - 10.0 / 3.0).abs() < 1e-3);
    let report = solve_allocation(&inst, utilitarian(&[0.5, 0.5]), &cfg).unwrap();
    assert_eq!(report.value, 10.0);
    assert_eq!(report.theta, vec![0.0, 10.0]);
    let log = AllocationInstance::new(
        vec![10.0],
        UtilityModel::LogSaturating {
            profits: vec![vec![2.0]],
            caps: vec![vec![Cap::Finite(1.0)]],
        },
        vec![],
    )
    .unwrap();
    for objective in [
        Objective::Plain(Aggregator::power_mean(Power::Finite(0.0), wv(&[1.0]))),
        Objective::Plain(Aggregator::power_mean(Power::NegInf, wv(&[1.0]))),
        Objective::Robust(
            RobustAggregator::power_mean(Power::Finite(0.5), WeightSet::full_simplex(1).unwrap()).unwrap(),
        ),
    ] {
        let report = solve_allocation(&log, objective, &cfg).unwrap();
        assert_eq!(report.theta, vec![1.0]);
        assert!((report.value - 3f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn solver_agrees_with_utility_space_optimum() {
    let cfg = SolveConfig::default();
    let instances = [
        linear(&[1.0, 2.0], 10.0),
        linear(&[3.0, 0.5], 4.0),
        sqrt(&[1.0, 2.0], 10.0),
        sqrt(&[0.7, 1.5], 3.0),
    ];
    let objectives = [
        egalitarian(),
        utilitarian(&[0.5, 0.5]),
        utilitarian(&[0.8, 0.2]),
        umswf(0.5, &[0.5, 0.5]),
        umswf(0.3, &[0.9, 0.1]),
    ];
    for inst in &instances {
        for objective in &objectives {
            let oracle = line_search_optimum(inst, objective, 200_000);
            let report = solve_allocation(inst, objective.clone(), &cfg).unwrap();
            assert!(
                (report.value - oracle).abs() < 1e-3,
                "{objective:?} {inst:?}: {} vs {oracle}",
                report.value
            );
            assert!(report.value >= oracle - 1e-9);
        }
    }
}

#[test]
fn welfare_optima_use_all_capacity() {
    let cfg = SolveConfig::default();
    let multi = AllocationInstance::new(
        vec![3.0, 2.0],
        UtilityModel::LinearMulti {
            rates: vec![vec![1.0, 0.5], vec![0.2, 2.0], vec![0.3, 0.3]],
        },
        vec![],
    )
    .unwrap();
    let cases: Vec<(AllocationInstance, Objective)> = vec![
        (
            sqrt(&[1.0, 2.0, 0.5], 6.0),
            Objective::Plain(Aggregator::power_mean(Power::Finite(0.5), wv(&[0.2, 0.3, 0.5]))),
        ),
        (
            linear(&[1.0, 2.0, 3.0], 5.0),
            Objective::Plain(Aggregator::power_mean(Power::Finite(-1.0), wv(&[0.2, 0.3, 0.5]))),
        ),
        (
            multi.clone(),
            Objective::Plain(Aggregator::power_mean(Power::Finite(0.0), wv(&[0.2, 0.3, 0.5]))),
        ),
        (
            multi,
            Objective::Robust(
                RobustAggregator::power_mean(
                    Power::Finite(0.5),
                    WeightSet::lower_bounded(0.5, wv(&[0.2, 0.3, 0.5])).unwrap(),
                )
                .unwrap(),
            ),
        ),
    ];
    for (inst, objective) in cases {
        let report = solve_allocation(&inst, objective, &cfg).unwrap();
        let theta = Allocation::from_flat(inst.groups(), inst.goods(), report.theta.clone()).unwrap();
        for (j, c) in inst.capacities().iter().enumerate() {
            assert!(
                (theta.column_sum(j) - c).abs() < 1e-6,
                "good {j}: {} of {c}",
                theta.column_sum(j)
            );
        }
    }
}

#[test]
fn more_capacity_never_hurts() {
    let cfg = SolveConfig::default();
    let objective = Objective::Robust(
        RobustAggregator::power_mean(
            Power::Finite(0.5),
            WeightSet::lower_bounded(0.5, wv(&[0.2, 0.3, 0.5])).unwrap(),
        )
        .unwrap(),
    );
    let mut previous = f64::NEG_INFINITY;
    for c in [1.0, 2.0, 4.0, 8.0] {
        let inst = AllocationInstance::new(
            vec![c, 2.0],
            UtilityModel::LinearMulti {
                rates: vec![vec![1.0, 0.5], vec![0.2, 2.0], vec![0.3, 0.3]],
            },
            vec![],
        )
        .unwrap();
        let value = solve_allocation(&inst, objective.clone(), &cfg).unwrap().value;
        assert!(value >= previous - 1e-6, "{value} < {previous}");
        previous = value;
    }
    let mut previous = f64::NEG_INFINITY;
    for c in [1.0, 2.0, 4.0, 8.0] {
        let value = solve_allocation(&sqrt(&[1.0, 2.0], c), umswf(0.4, &[0.5, 0.5]), &cfg)
            .unwrap()
            .value;
        assert!(value >= previous);
        previous = value;
    }
}

#[test]
fn infeasible_constraint_systems_are_rejected() {
    use robustfair::solvers::{ConstraintKind, LinearConstraint};
    let model = UtilityModel::LinearMulti {
        rates: vec![vec![1.0], vec![1.0]],
    };
    let at_least_one = LinearConstraint {
        coefficients: vec![1.0, 0.0],
        kind: ConstraintKind::GreaterEq,
        rhs: 1.0,
    };
    assert!(matches!(
        AllocationInstance::new(vec![2.0], model.clone(), vec![at_least_one.clone()]),
        Err(Error::Infeasible(_))
    ));
    let point = Allocation::new(vec![vec![1.0], vec![0.5]]).unwrap();
    let inst = AllocationInstance::with_feasible_point(vec![2.0], model, vec![at_least_one], Some(&point)).unwrap();
    let objective = Objective::Plain(Aggregator::power_mean(Power::NegInf, wv(&[0.5, 0.5])));
    let report = solve_allocation(&inst, objective, &SolveConfig::default()).unwrap();
    assert!(report.theta[0] >= 1.0 - 1e-7);
    assert!((report.value - 1.0).abs() < 1e-4, "{}", report.value);
}

proptest! {
    #[test]
    fn log_saturating_utilities_are_concave(
        a in prop::collection::vec(0.0f64..3.0, 4),
        b in prop::collection::vec(0.0f64..3.0, 4),
        t in 0.0f64..=1.0,
    ) {
        let inst = AllocationInstance::new(
            vec![10.0, 10.0],
            UtilityModel::LogSaturating {
                profits: vec![vec![2.0, 0.5], vec![1.0, 3.0]],
                caps: vec![vec![Cap::Finite(1.0), Cap::Unbounded], vec![Cap::Finite(2.5), Cap::Finite(0.5)]],
            },
            vec![],
        )
        .unwrap();
        let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
        let sa = inst.sentiment(&a).unwrap();
        let sb = inst.sentiment(&b).unwrap();
        let sm = inst.sentiment(&mid).unwrap();
        for i in 0..2 {
            prop_assert!(sm[i] >= t * sa[i] + (1.0 - t) * sb[i] - 1e-10);
        }
    }
}
