//! JSON instance files. Every object rejects unknown fields.

use robustfair::allocation::{AllocationInstance, Cap, UtilityModel};
use robustfair::bounds::{HolderNorm, SampleComplexityQuery};
use robustfair::games::{DaemonSpace, GameSpec, Payoff};
use robustfair::solvers::{ConstraintKind, LinearConstraint, Objective, SolveConfig};
use robustfair::{Aggregator, BallBase, Norm, Power, RobustAggregator, Sense, WeightSet, WeightVector};
use serde::Deserialize;
use serde_json::value::RawValue;

pub const VERSION: &str = "1";

/// Top-level envelope; the body is parsed once the kind is known.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<'a> {
    pub version: String,
    pub kind: String,
    #[serde(borrow)]
    pub body: &'a RawValue,
}

#[derive(Debug)]
pub enum Body {
    Aggregate(AggregateBody),
    Adversary(AdversaryBody),
    Allocation(AllocationBody),
    Game(GameBody),
    Bounds(BoundsBody),
    SampleComplexity(SampleComplexityBody),
}

/// A schema violation with a 1-based position in the input text.
#[derive(Debug)]
pub struct SchemaError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)
    }
}

fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |i| offset - i - 1) + 1;
    (line, column)
}

/// Parses an instance file, rejecting unknown fields, kinds and versions.
pub fn parse(text: &str) -> Result<Body, SchemaError> {
    let at = |e: serde_json::Error| SchemaError {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e),
    };
    let envelope: Envelope<'_> = serde_json::from_str(text).map_err(at)?;
    let raw = envelope.body.get();
    let offset = raw.as_ptr() as usize - text.as_ptr() as usize;
    let (body_line, body_column) = position(text, offset);
    if envelope.version != VERSION {
        return Err(SchemaError {
            line: 1,
            column: 1,
            message: format!("unsupported version {:?}, expected {VERSION:?}", envelope.version),
        });
    }
    let in_body = |e: serde_json::Error| {
        let column = if e.line() == 1 {
            body_column + e.column() - 1
        } else {
            e.column()
        };
        SchemaError {
            line: body_line + e.line() - 1,
            column,
            message: strip_position(&e),
        }
    };
    Ok(match envelope.kind.as_str() {
        "aggregate" => Body::Aggregate(serde_json::from_str(raw).map_err(in_body)?),
        "adversary" => Body::Adversary(serde_json::from_str(raw).map_err(in_body)?),
        "allocation" => Body::Allocation(serde_json::from_str(raw).map_err(in_body)?),
        "game" => Body::Game(serde_json::from_str(raw).map_err(in_body)?),
        "bounds" => Body::Bounds(serde_json::from_str(raw).map_err(in_body)?),
        "sample_complexity" => Body::SampleComplexity(serde_json::from_str(raw).map_err(in_body)?),
        other => {
            return Err(SchemaError {
                line: body_line,
                column: body_column,
                message: format!("unknown kind {other:?}"),
            })
        }
    })
}

/// serde_json appends " at line L column C"; the position is reported separately.
fn strip_position(e: &serde_json::Error) -> String {
    let text = e.to_string();
    match text.rfind(" at line ") {
        Some(i) => text[..i].to_string(),
        None => text,
    }
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Aggregate(_) => "aggregate",
            Body::Adversary(_) => "adversary",
            Body::Allocation(_) => "allocation",
            Body::Game(_) => "game",
            Body::Bounds(_) => "bounds",
            Body::SampleComplexity(_) => "sample_complexity",
        }
    }
}

/// A power parameter: a number, or `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum PowerSpec {
    Number(f64),
    Named(InfiniteName),
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum InfiniteName {
    #[serde(rename = "inf")]
    PosInf,
    #[serde(rename = "-inf")]
    NegInf,
}

impl PowerSpec {
    pub fn to_power(self) -> robustfair::Result<Power> {
        match self {
            PowerSpec::Number(p) => Power::from_f64(p),
            PowerSpec::Named(InfiniteName::PosInf) => Ok(Power::PosInf),
            PowerSpec::Named(InfiniteName::NegInf) => Ok(Power::NegInf),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SenseSpec {
    #[default]
    Utility,
    Disutility,
}

impl From<SenseSpec> for Sense {
    fn from(s: SenseSpec) -> Self {
        match s {
            SenseSpec::Utility => Sense::Utility,
            SenseSpec::Disutility => Sense::Disutility,
        }
    }
}

fn weights(v: &[f64]) -> robustfair::Result<WeightVector> {
    WeightVector::new(v.to_vec())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum AggregatorSpec {
    PowerMean {
        p: PowerSpec,
        weights: Vec<f64>,
    },
    Gini {
        weights: Vec<f64>,
        #[serde(default)]
        sense: SenseSpec,
    },
    Umswf {
        gamma: f64,
        weights: Vec<f64>,
    },
    GiniPowerMean {
        p: PowerSpec,
        weights: Vec<f64>,
        #[serde(default)]
        sense: SenseSpec,
    },
}

impl AggregatorSpec {
    pub fn build(&self) -> robustfair::Result<Aggregator> {
        match self {
            AggregatorSpec::PowerMean { p, weights: w } => Ok(Aggregator::power_mean(p.to_power()?, weights(w)?)),
            AggregatorSpec::Gini { weights: w, sense } => Ok(Aggregator::gini(weights(w)?, (*sense).into())),
            AggregatorSpec::Umswf { gamma, weights: w } => Aggregator::umswf(*gamma, weights(w)?),
            AggregatorSpec::GiniPowerMean { p, weights: w, sense } => {
                Aggregator::gini_power_mean(p.to_power()?, weights(w)?, (*sense).into())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    L1,
    L2,
    Linf,
}

impl From<NormSpec> for Norm {
    fn from(n: NormSpec) -> Self {
        match n {
            NormSpec::L1 => Norm::L1,
            NormSpec::L2 => Norm::L2,
            NormSpec::Linf => Norm::Linf,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BallBaseSpec {
    Singleton { w_star: Vec<f64> },
    LowerBounded { gamma: f64, w_star: Vec<f64> },
    PermutationOrbit { weights: Vec<f64> },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSetSpec {
    FullSimplex {
        g: usize,
    },
    Singleton {
        w_star: Vec<f64>,
    },
    LowerBounded {
        gamma: f64,
        w_star: Vec<f64>,
    },
    PermutationOrbit {
        weights: Vec<f64>,
    },
    NormBall {
        base: BallBaseSpec,
        norm: NormSpec,
        radius: f64,
    },
}

impl WeightSetSpec {
    pub fn build(&self) -> robustfair::Result<WeightSet> {
        match self {
            WeightSetSpec::FullSimplex { g } => WeightSet::full_simplex(*g),
            WeightSetSpec::Singleton { w_star } => Ok(WeightSet::singleton(weights(w_star)?)),
            WeightSetSpec::LowerBounded { gamma, w_star } => WeightSet::lower_bounded(*gamma, weights(w_star)?),
            WeightSetSpec::PermutationOrbit { weights: w } => Ok(WeightSet::permutation_orbit(weights(w)?)),
            WeightSetSpec::NormBall { base, norm, radius } => {
                let base = match base {
                    BallBaseSpec::Singleton { w_star } => BallBase::Singleton {
                        w_star: weights(w_star)?,
                    },
                    BallBaseSpec::LowerBounded { gamma, w_star } => BallBase::LowerBounded {
                        gamma: *gamma,
                        w_star: weights(w_star)?,
                    },
                    BallBaseSpec::PermutationOrbit { weights: w } => BallBase::PermutationOrbit {
                        sorted_weights: weights(w)?,
                    },
                };
                WeightSet::norm_ball(base, (*norm).into(), *radius)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregateBody {
    pub sentiment: Vec<f64>,
    #[serde(default)]
    pub sense: SenseSpec,
    pub aggregator: AggregatorSpec,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum DirectionSpec {
    Min,
    Max,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryBody {
    pub sentiment: Vec<f64>,
    pub set: WeightSetSpec,
    /// Power of the aggregator the adversary optimizes; linear when absent.
    pub p: Option<PowerSpec>,
    pub direction: Option<DirectionSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    LinearSingle {
        rates: Vec<f64>,
    },
    SqrtSingle {
        rates: Vec<f64>,
    },
    LinearMulti {
        rates: Vec<Vec<f64>>,
    },
    /// `null` caps are unbounded.
    LogSaturating {
        profits: Vec<Vec<f64>>,
        caps: Vec<Vec<Option<f64>>>,
    },
}

impl ModelSpec {
    pub fn build(&self) -> UtilityModel {
        match self {
            ModelSpec::LinearSingle { rates } => UtilityModel::LinearSingle { rates: rates.clone() },
            ModelSpec::SqrtSingle { rates } => UtilityModel::SqrtSingle { rates: rates.clone() },
            ModelSpec::LinearMulti { rates } => UtilityModel::LinearMulti { rates: rates.clone() },
            ModelSpec::LogSaturating { profits, caps } => UtilityModel::LogSaturating {
                profits: profits.clone(),
                caps: caps
                    .iter()
                    .map(|row| row.iter().map(|c| c.map_or(Cap::Unbounded, Cap::Finite)).collect())
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum ConstraintKindSpec {
    #[serde(rename = "le")]
    LessEq,
    #[serde(rename = "eq")]
    Equal,
    #[serde(rename = "ge")]
    GreaterEq,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub coefficients: Vec<f64>,
    pub kind: ConstraintKindSpec,
    pub rhs: f64,
}

impl ConstraintSpec {
    pub fn build(&self) -> LinearConstraint {
        let kind = match self.kind {
            ConstraintKindSpec::LessEq => ConstraintKind::LessEq,
            ConstraintKindSpec::Equal => ConstraintKind::Equal,
            ConstraintKindSpec::GreaterEq => ConstraintKind::GreaterEq,
        };
        LinearConstraint {
            coefficients: self.coefficients.clone(),
            kind,
            rhs: self.rhs,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpecFile {
    Plain {
        aggregator: AggregatorSpec,
    },
    Robust {
        aggregator: AggregatorSpec,
        set: WeightSetSpec,
    },
}

impl ObjectiveSpecFile {
    pub fn build(&self) -> robustfair::Result<Objective> {
        match self {
            ObjectiveSpecFile::Plain { aggregator } => Ok(Objective::Plain(aggregator.build()?)),
            ObjectiveSpecFile::Robust { aggregator, set } => Ok(Objective::Robust(RobustAggregator::new(
                aggregator.build()?,
                set.build()?,
            )?)),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
}

impl SolverSpec {
    pub fn config(&self, seed: u64, tolerance: f64, record_trace: bool) -> SolveConfig {
        let base = SolveConfig::default();
        SolveConfig {
            max_iters: self.max_iters.unwrap_or(base.max_iters),
            restarts: self.restarts.unwrap_or(base.restarts),
            seed,
            tolerance,
            record_trace,
            ..base
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationBody {
    pub capacities: Vec<f64>,
    pub model: ModelSpec,
    #[serde(default)]
    pub constraints: Vec<ConstraintSpec>,
    pub objective: ObjectiveSpecFile,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl AllocationBody {
    pub fn instance(&self) -> robustfair::Result<AllocationInstance> {
        AllocationInstance::new(
            self.capacities.clone(),
            self.model.build(),
            self.constraints.iter().map(ConstraintSpec::build).collect(),
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DaemonSpec {
    Finite {
        points: Vec<Vec<f64>>,
        #[serde(default)]
        convex_hull: bool,
    },
    Capacity {
        g: usize,
        total: f64,
        #[serde(default)]
        floor: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffSpec {
    Egocentric,
    Aggregator {
        p: PowerSpec,
    },
    UtilityTransform {
        p: f64,
        #[serde(default)]
        s_min: f64,
    },
    AltruisticAngel {
        p: f64,
        w_star: Vec<f64>,
        #[serde(default)]
        s_min: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameBody {
    pub daemon: DaemonSpec,
    pub angel: WeightSetSpec,
    pub payoff: PayoffSpec,
    #[serde(default)]
    pub sense: SenseSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

impl GameBody {
    pub fn build(&self) -> robustfair::Result<GameSpec> {
        let daemon = match &self.daemon {
            DaemonSpec::Finite { points, convex_hull } => DaemonSpace::Finite {
                points: points.clone(),
                convex_hull: *convex_hull,
            },
            DaemonSpec::Capacity { g, total, floor } => DaemonSpace::Capacity {
                g: *g,
                total: *total,
                floor: *floor,
            },
        };
        let payoff = match &self.payoff {
            PayoffSpec::Egocentric => Payoff::Egocentric,
            PayoffSpec::Aggregator { p } => Payoff::Aggregator { p: p.to_power()? },
            PayoffSpec::UtilityTransform { p, s_min } => Payoff::UtilityTransform { p: *p, s_min: *s_min },
            PayoffSpec::AltruisticAngel { p, w_star, s_min } => Payoff::AltruisticAngel {
                p: *p,
                w_star: weights(w_star)?,
                s_min: *s_min,
            },
        };
        GameSpec::new(daemon, self.angel.build()?, payoff, self.sense.into())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsBody {
    pub sentiment: Vec<f64>,
    #[serde(default)]
    pub sense: SenseSpec,
    pub aggregator: AggregatorSpec,
    pub set: WeightSetSpec,
    /// Sentiment range for continuity certificates of power-mean aggregators.
    pub r: Option<f64>,
    /// Per-group estimation errors for the generalization sandwich.
    pub eps: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HolderNormSpec {
    L1,
    L2,
    Linf,
    SelfReferential,
}

impl From<HolderNormSpec> for HolderNorm {
    fn from(n: HolderNormSpec) -> Self {
        match n {
            HolderNormSpec::L1 => HolderNorm::L1,
            HolderNormSpec::L2 => HolderNorm::L2,
            HolderNormSpec::Linf => HolderNorm::Linf,
            HolderNormSpec::SelfReferential => HolderNorm::SelfReferential,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleComplexityBody {
    pub lambda: f64,
    pub alpha: f64,
    pub norm: HolderNormSpec,
    pub v: Vec<f64>,
    pub t: f64,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default = "one")]
    pub m0: u64,
}

fn one() -> u64 {
    1
}

impl SampleComplexityBody {
    pub fn query(&self) -> SampleComplexityQuery {
        SampleComplexityQuery {
            lambda: self.lambda,
            alpha: self.alpha,
            norm: self.norm.into(),
            v: self.v.clone(),
            t: self.t,
            delta: self.delta,
            epsilon: self.epsilon,
            m0: self.m0,
        }
    }
}
