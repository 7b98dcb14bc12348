//! Mermin, Svetlichny and NS2 expressions, and their bounds under relaxed
//! measurement independence.
//!
//! Bounds cover deterministic strategies whose responses never read a remote
//! setting outside the declared pairing. Signaling strategies have no bound
//! mode here.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::Signed;
use serde::Serialize;

use crate::context::{Context, Party, PartyPair};
use crate::dependence::{complete_contexts, measure, Completion, DependenceError, Measure};
use crate::model::{correlator, MdlModel, ModelError};
use crate::num::{exact_string, int, serde_exact, Rational, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InequalityKind {
    Mermin,
    Svetlichny,
    Ns2,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 3] = [
        InequalityKind::Mermin,
        InequalityKind::Svetlichny,
        InequalityKind::Ns2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityKind::Mermin => "mermin",
            InequalityKind::Svetlichny => "svetlichny",
            InequalityKind::Ns2 => "ns2",
        }
    }

    pub fn spec(self) -> InequalitySpec {
        InequalitySpec::of(self)
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InequalityKind {
    type Err = InequalityError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text.trim().to_ascii_lowercase().as_str() {
            "mermin" => Ok(InequalityKind::Mermin),
            "svetlichny" => Ok(InequalityKind::Svetlichny),
            "ns2" | "ns2_99" | "ns2-99" => Ok(InequalityKind::Ns2),
            other => Err(InequalityError::UnknownInequality(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InequalityError {
    #[error("unknown inequality `{0}`")]
    UnknownInequality(String),
    #[error("unknown scenario `{0}` (expected one-sided:A|B|C or bipartite:AB|BC|AC)")]
    UnknownScenario(String),
    #[error("{kind} has no bound for scenario {shape}")]
    IncompatibleScenario {
        kind: InequalityKind,
        shape: ScenarioShape,
    },
    #[error("budget {value} for {measure} is outside [0, 2]")]
    BudgetOutOfRange { measure: Measure, value: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dependence(#[from] DependenceError),
}

/// A signed sum of correlators with its reference values.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalitySpec {
    pub kind: InequalityKind,
    pub terms: Vec<(Context, i8)>,
    pub classical_bound: Rational,
    pub quantum_ghz_value: f64,
    pub algebraic_max: Rational,
    /// Whether the bound holds for `|S|` rather than for `S` alone.
    ///
    /// The NS2 facet is one-sided: deterministic local strategies reach
    /// `S = -5`, so only `S <= 3` is a valid local bound.
    pub symmetric: bool,
}

impl InequalitySpec {
    pub fn of(kind: InequalityKind) -> InequalitySpec {
        let f = Context::full;
        match kind {
            InequalityKind::Mermin => InequalitySpec {
                kind,
                terms: vec![(f(1, 0, 0), 1), (f(0, 1, 0), 1), (f(0, 0, 1), 1), (f(1, 1, 1), -1)],
                classical_bound: int(2),
                quantum_ghz_value: 4.0,
                algebraic_max: int(4),
                symmetric: true,
            },
            InequalityKind::Svetlichny => InequalitySpec {
                kind,
                terms: vec![
                    (f(0, 0, 0), 1),
                    (f(0, 0, 1), 1),
                    (f(1, 0, 0), 1),
                    (f(1, 0, 1), -1),
                    (f(0, 1, 0), 1),
                    (f(0, 1, 1), -1),
                    (f(1, 1, 0), -1),
                    (f(1, 1, 1), -1),
                ],
                classical_bound: int(4),
                quantum_ghz_value: 4.0 * std::f64::consts::SQRT_2,
                algebraic_max: int(8),
                symmetric: true,
            },
            InequalityKind::Ns2 => InequalitySpec {
                kind,
                terms: vec![
                    (Context::pair(Party::C, 0, 0), 1),
                    (Context::pair(Party::B, 0, 0), 1),
                    (Context::pair(Party::A, 0, 1), 1),
                    (f(1, 1, 0), -1),
                    (f(1, 1, 1), 1),
                ],
                classical_bound: int(3),
                quantum_ghz_value: 1.0 + 2.0 * std::f64::consts::SQRT_2,
                algebraic_max: int(5),
                symmetric: false,
            },
        }
    }

    /// The quantity compared with bounds: `|S|`, or `S` for one-sided facets.
    pub fn bounded_value(&self, s: &Rational) -> Rational {
        if self.symmetric {
            s.abs()
        } else {
            s.clone()
        }
    }

    pub fn contexts(&self) -> impl Iterator<Item = Context> + '_ {
        self.terms.iter().map(|(c, _)| *c)
    }
}

/// Signed value `S` of the expression on a model.
pub fn evaluate(model: &MdlModel, kind: InequalityKind) -> Result<Rational, ModelError> {
    let mut total = int(0);
    for (ctx, sign) in kind.spec().terms {
        let value = correlator(model, &ctx)?;
        if sign > 0 {
            total += value;
        } else {
            total -= value;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioShape {
    OneSided(Party),
    Bipartite(PartyPair),
}

impl ScenarioShape {
    pub const ALL: [ScenarioShape; 6] = [
        ScenarioShape::OneSided(Party::A),
        ScenarioShape::OneSided(Party::B),
        ScenarioShape::OneSided(Party::C),
        ScenarioShape::Bipartite(PartyPair::AB),
        ScenarioShape::Bipartite(PartyPair::BC),
        ScenarioShape::Bipartite(PartyPair::AC),
    ];

    /// Measures of this shape's family.
    pub fn family(self) -> [Measure; 3] {
        match self {
            ScenarioShape::OneSided(_) => Party::ALL.map(Measure::OneSided),
            ScenarioShape::Bipartite(_) => PartyPair::ALL.map(Measure::Bipartite),
        }
    }
}

impl fmt::Display for ScenarioShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioShape::OneSided(p) => write!(f, "one-sided:{}", p),
            ScenarioShape::Bipartite(pair) => write!(f, "bipartite:{}", pair),
        }
    }
}

impl FromStr for ScenarioShape {
    type Err = InequalityError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = || InequalityError::UnknownScenario(text.to_string());
        let (kind, who) = text.trim().split_once(':').ok_or_else(bad)?;
        match kind.to_ascii_lowercase().as_str() {
            "one-sided" | "onesided" => Party::parse(who).map(ScenarioShape::OneSided).ok_or_else(bad),
            "bipartite" => PartyPair::parse(who).map(ScenarioShape::Bipartite).ok_or_else(bad),
            _ => Err(bad()),
        }
    }
}

impl Serialize for ScenarioShape {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// A scenario shape with dependence budgets; absent budgets mean 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelaxationScenario {
    pub shape: ScenarioShape,
    budgets: BTreeMap<Measure, Rational>,
}

impl RelaxationScenario {
    pub fn new(
        shape: ScenarioShape,
        budgets: BTreeMap<Measure, Rational>,
    ) -> Result<Self, InequalityError> {
        for (m, v) in &budgets {
            if v.is_negative() || *v > int(2) {
                return Err(InequalityError::BudgetOutOfRange {
                    measure: *m,
                    value: exact_string(v),
                });
            }
        }
        Ok(RelaxationScenario { shape, budgets })
    }

    /// One grid value `m` spread over the measures the bound depends on.
    ///
    /// Every measure of the shape's family that enters the bound gets `m`.
    /// For one-sided shapes the remaining one-sided measures are pinned to
    /// zero, so NS2 with Charlie relaxed reads `M3 = m, M1 = M2 = 0`.
    pub fn uniform(
        kind: InequalityKind,
        shape: ScenarioShape,
        m: &Rational,
    ) -> Result<Self, InequalityError> {
        let used = bound_measures(kind, shape)?;
        let mut budgets = BTreeMap::new();
        for measure in shape.family() {
            if used.contains(&measure) {
                budgets.insert(measure, m.clone());
            } else if matches!(shape, ScenarioShape::OneSided(_)) {
                budgets.insert(measure, int(0));
            }
        }
        RelaxationScenario::new(shape, budgets)
    }

    pub fn budgets(&self) -> &BTreeMap<Measure, Rational> {
        &self.budgets
    }

    pub fn budget(&self, which: Measure) -> Rational {
        self.budgets.get(&which).cloned().unwrap_or_else(|| int(2))
    }
}

/// Measures that enter the bound for `kind` under `shape`.
pub fn bound_measures(
    kind: InequalityKind,
    shape: ScenarioShape,
) -> Result<Vec<Measure>, InequalityError> {
    use Measure::OneSided as One;
    match (kind, shape) {
        (InequalityKind::Ns2, ScenarioShape::OneSided(Party::C)) => Ok(vec![One(Party::C)]),
        (InequalityKind::Ns2, ScenarioShape::OneSided(p)) => Ok(vec![One(p), One(Party::C)]),
        (InequalityKind::Ns2, ScenarioShape::Bipartite(_)) => {
            Err(InequalityError::IncompatibleScenario { kind, shape })
        }
        (_, shape) => Ok(shape.family().to_vec()),
    }
}

/// Closed-form bound with budgets supplied by `get`, clamped to
/// `[classical, algebraic]`.
pub fn relaxed_bound_with<T: Scalar>(
    kind: InequalityKind,
    shape: ScenarioShape,
    get: impl Fn(Measure) -> T,
) -> Result<T, InequalityError> {
    let n = T::from_int;
    let one = |p: Party| get(Measure::OneSided(p));
    let two = |p: PartyPair| get(Measure::Bipartite(p));
    let min = |values: Vec<T>| {
        values
            .into_iter()
            .reduce(|a, b| a.min_of(&b))
            .expect("nonempty")
    };
    let raw = match (kind, shape) {
        (InequalityKind::Mermin, ScenarioShape::OneSided(_)) => {
            let (m1, m2, m3) = (one(Party::A), one(Party::B), one(Party::C));
            let twice = |m: &T| m.add(m);
            n(2).add(&min(vec![
                n(2),
                twice(&m1).add(&m2),
                twice(&m1).add(&m3),
                twice(&m2).add(&m3),
                twice(&m2).add(&m1),
                twice(&m3).add(&m2),
                twice(&m3).add(&m1),
            ]))
        }
        (InequalityKind::Svetlichny, ScenarioShape::OneSided(_)) => n(4).add(&min(vec![
            n(4),
            n(2).mul(&one(Party::A)),
            n(2).mul(&one(Party::B)),
            n(2).mul(&one(Party::C)),
        ])),
        (InequalityKind::Ns2, ScenarioShape::OneSided(Party::C)) => n(3).add(&one(Party::C)),
        (InequalityKind::Ns2, ScenarioShape::OneSided(p)) => {
            n(3).add(&n(2).mul(&one(p))).add(&one(Party::C))
        }
        (InequalityKind::Mermin, ScenarioShape::Bipartite(_)) => n(2).add(&min(vec![
            two(PartyPair::AB),
            two(PartyPair::BC),
            two(PartyPair::AC),
        ])),
        (InequalityKind::Svetlichny, ScenarioShape::Bipartite(_)) => n(4).add(&min(vec![
            n(4),
            n(2).mul(&two(PartyPair::AB)),
            n(2).mul(&two(PartyPair::BC)),
            n(2).mul(&two(PartyPair::AC)),
        ])),
        (InequalityKind::Ns2, ScenarioShape::Bipartite(_)) => {
            return Err(InequalityError::IncompatibleScenario { kind, shape })
        }
    };
    let spec = kind.spec();
    let lo = T::from_rational(&spec.classical_bound);
    let hi = T::from_rational(&spec.algebraic_max);
    Ok(raw.max_of(&lo).min_of(&hi))
}

/// Exact bound for a scenario.
pub fn relaxed_bound(
    kind: InequalityKind,
    scenario: &RelaxationScenario,
) -> Result<Rational, InequalityError> {
    relaxed_bound_with(kind, scenario.shape, |m| scenario.budget(m))
}

/// Floating-point bound; missing budgets mean 2.
pub fn relaxed_bound_f64(
    kind: InequalityKind,
    shape: ScenarioShape,
    budgets: &BTreeMap<Measure, f64>,
) -> Result<f64, InequalityError> {
    relaxed_bound_with(kind, shape, |m| budgets.get(&m).copied().unwrap_or(2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    WithinBound,
    ExceedsBound,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundReport {
    pub inequality: InequalityKind,
    pub scenario: ScenarioShape,
    #[serde(rename = "S", with = "serde_exact")]
    pub s: Rational,
    #[serde(with = "serde_exact")]
    pub bound: Rational,
    #[serde(serialize_with = "serialize_budgets")]
    pub budgets: BTreeMap<Measure, Rational>,
    /// Measured values on present context pairs (lower bounds if partial).
    #[serde(serialize_with = "serialize_measured")]
    pub measured: BTreeMap<Measure, Option<Rational>>,
    pub partial: bool,
    /// Whether measured values respect the budgets.
    pub admissible: bool,
    /// For partial models: whether some completion respects the budgets.
    pub completable: Option<bool>,
    pub verdict: Verdict,
    pub tight: bool,
}

fn serialize_budgets<S: serde::Serializer>(
    budgets: &BTreeMap<Measure, Rational>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_map(budgets.iter().map(|(k, v)| (k.id(), exact_string(v))))
}

fn serialize_measured<S: serde::Serializer>(
    measured: &BTreeMap<Measure, Option<Rational>>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_map(
        measured
            .iter()
            .map(|(k, v)| (k.id(), v.as_ref().map(exact_string))),
    )
}

/// Compares `|S|` of a model (plain `S` for NS2) with the scenario's bound.
///
/// The bound always comes from the scenario budgets. Measured values are
/// reported next to them; on a partial model the budgets are also checked
/// for completability.
pub fn check_model_against_bound(
    model: &MdlModel,
    kind: InequalityKind,
    scenario: &RelaxationScenario,
) -> Result<BoundReport, InequalityError> {
    let s = evaluate(model, kind)?;
    let bound = relaxed_bound(kind, scenario)?;
    let mut relevant: Vec<Measure> = bound_measures(kind, scenario.shape)?;
    for m in scenario.budgets().keys() {
        if !relevant.contains(m) {
            relevant.push(*m);
        }
    }
    relevant.sort();
    let measured: BTreeMap<Measure, Option<Rational>> =
        relevant.iter().map(|m| (*m, measure(model, *m))).collect();
    let admissible = scenario.budgets().iter().all(|(m, budget)| {
        measured
            .get(m)
            .and_then(Option::as_ref)
            .is_none_or(|v| v <= budget)
    });
    let partial = !model.is_complete();
    let completable = if partial {
        let budgets: Vec<(Measure, Rational)> = scenario
            .budgets()
            .iter()
            .map(|(m, v)| (*m, v.clone()))
            .collect();
        Some(matches!(
            complete_contexts(model, &budgets)?,
            Completion::Feasible(_)
        ))
    } else {
        None
    };
    let abs = kind.spec().bounded_value(&s);
    Ok(BoundReport {
        inequality: kind,
        scenario: scenario.shape,
        verdict: if abs <= bound {
            Verdict::WithinBound
        } else {
            Verdict::ExceedsBound
        },
        tight: abs == bound,
        s,
        bound,
        budgets: scenario.budgets().clone(),
        measured,
        partial,
        admissible,
        completable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ContextDistribution, Pairing, ResponseTable};
    use crate::num::rat;

    fn budgets(entries: &[(Measure, Rational)]) -> BTreeMap<Measure, Rational> {
        entries.iter().cloned().collect()
    }

    #[test]
    fn spec_shapes() {
        let m = InequalityKind::Mermin.spec();
        assert_eq!(m.terms.len(), 4);
        let s = InequalityKind::Svetlichny.spec();
        assert_eq!(s.terms.len(), 8);
        assert!(s.terms.iter().all(|(c, _)| c.is_full()));
        let n = InequalityKind::Ns2.spec();
        assert_eq!(n.terms.iter().filter(|(c, _)| c.is_pair()).count(), 3);
        assert_eq!(n.classical_bound, int(3));
        assert_eq!(n.algebraic_max, int(5));
        let labels: Vec<String> = n.contexts().map(|c| c.to_string()).collect();
        assert_eq!(labels, ["xy", "xz", "yz'", "x'y'z", "x'y'z'"]);
    }

    #[test]
    fn uniform_all_plus_mermin_is_classical() {
        let model = build_model(
            ResponseTable::new(Pairing::FullyLocal, vec![[1; 6]; 2]).unwrap(),
            ContextDistribution::independent(vec![rat(1, 2), rat(1, 2)]).unwrap(),
            "plus",
        )
        .unwrap();
        assert_eq!(evaluate(&model, InequalityKind::Mermin).unwrap(), int(2));
    }

    #[test]
    fn mermin_one_sided_with_single_budget() {
        let sc = RelaxationScenario::new(
            ScenarioShape::OneSided(Party::A),
            budgets(&[(Measure::OneSided(Party::A), int(1))]),
        )
        .unwrap();
        assert_eq!(relaxed_bound(InequalityKind::Mermin, &sc).unwrap(), int(4));
        let sc = RelaxationScenario::new(
            ScenarioShape::OneSided(Party::A),
            budgets(&[
                (Measure::OneSided(Party::A), rat(1, 2)),
                (Measure::OneSided(Party::B), int(0)),
            ]),
        )
        .unwrap();
        assert_eq!(relaxed_bound(InequalityKind::Mermin, &sc).unwrap(), rat(5, 2));
    }

    #[test]
    fn svetlichny_float_bound_reaches_quantum_value() {
        let m1 = 2.0 * (std::f64::consts::SQRT_2 - 1.0);
        let b = relaxed_bound_f64(
            InequalityKind::Svetlichny,
            ScenarioShape::OneSided(Party::A),
            &[(Measure::OneSided(Party::A), m1)].into_iter().collect(),
        )
        .unwrap();
        assert!((b - 4.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn ns2_bounds_are_party_asymmetric() {
        let c = ScenarioShape::OneSided(Party::C);
        let sc = RelaxationScenario::new(c, budgets(&[(Measure::OneSided(Party::C), int(2))])).unwrap();
        assert_eq!(relaxed_bound(InequalityKind::Ns2, &sc).unwrap(), int(5));
        let a = ScenarioShape::OneSided(Party::A);
        let sc = RelaxationScenario::new(
            a,
            budgets(&[
                (Measure::OneSided(Party::A), rat(1, 4)),
                (Measure::OneSided(Party::C), rat(1, 4)),
            ]),
        )
        .unwrap();
        assert_eq!(relaxed_bound(InequalityKind::Ns2, &sc).unwrap(), rat(15, 4));
        let bi = RelaxationScenario::new(ScenarioShape::Bipartite(PartyPair::AB), BTreeMap::new())
            .unwrap();
        assert!(matches!(
            relaxed_bound(InequalityKind::Ns2, &bi),
            Err(InequalityError::IncompatibleScenario { .. })
        ));
    }

    #[test]
    fn zero_and_full_budgets_hit_the_endpoints() {
        for kind in InequalityKind::ALL {
            for shape in ScenarioShape::ALL {
                let Ok(zero) = RelaxationScenario::uniform(kind, shape, &int(0)) else {
                    continue;
                };
                let spec = kind.spec();
                let Ok(b0) = relaxed_bound(kind, &zero) else {
                    assert_eq!(kind, InequalityKind::Ns2);
                    continue;
                };
                assert_eq!(b0, spec.classical_bound);
                let full = RelaxationScenario::uniform(kind, shape, &int(2)).unwrap();
                assert_eq!(relaxed_bound(kind, &full).unwrap(), spec.algebraic_max);
            }
        }
    }

    #[test]
    fn uniform_expansion_pins_unused_one_sided_measures() {
        let sc = RelaxationScenario::uniform(
            InequalityKind::Ns2,
            ScenarioShape::OneSided(Party::B),
            &rat(1, 2),
        )
        .unwrap();
        assert_eq!(sc.budget(Measure::OneSided(Party::A)), int(0));
        assert_eq!(sc.budget(Measure::OneSided(Party::B)), rat(1, 2));
        assert_eq!(sc.budget(Measure::OneSided(Party::C)), rat(1, 2));
        assert_eq!(sc.budget(Measure::Overall), int(2));
    }

    #[test]
    fn budgets_are_range_checked() {
        let err = RelaxationScenario::new(
            ScenarioShape::OneSided(Party::A),
            budgets(&[(Measure::OneSided(Party::A), rat(5, 2))]),
        )
        .unwrap_err();
        assert!(matches!(err, InequalityError::BudgetOutOfRange { .. }));
    }

    #[test]
    fn scenario_labels_parse() {
        for shape in ScenarioShape::ALL {
            assert_eq!(shape.to_string().parse::<ScenarioShape>().unwrap(), shape);
        }
        assert!("two-sided:A".parse::<ScenarioShape>().is_err());
        assert!("bipartite:AA".parse::<ScenarioShape>().is_err());
    }
}
