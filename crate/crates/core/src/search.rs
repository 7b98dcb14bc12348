//! Linear programs over setting-conditioned distributions for a fixed
//! deterministic strategy, and exhaustive sweeps over strategies.
//!
//! For a fixed response table `S` is linear in the distributions, so the
//! largest `|S|` under dependence budgets is `max(max S, -min S)` over a
//! polytope: one probability simplex per context plus L1 budget rows. NS2
//! is bounded on one side only, so there just `max S` is taken.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::context::Context;
use crate::dependence::{add_distance_budget, add_simplex, Block, Measure};
use crate::inequalities::{
    relaxed_bound, InequalityError, InequalityKind, RelaxationScenario, ScenarioShape,
};
use crate::lp::{LinearProgram, LpError};
use crate::model::{ModelError, Pairing, ResponseTable};
use crate::num::{exact_string, int, to_f64, Rational, Scalar};

/// Largest hidden-variable count for exhaustive enumeration.
pub const MAX_ENUMERATION_L: usize = 3;

/// Tolerance for soundness and tightness in real mode.
pub const REAL_BOUND_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Real,
}

impl FromStr for Mode {
    type Err = SearchError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(Mode::Exact),
            "real" => Ok(Mode::Real),
            other => Err(SearchError::UnknownMode(other.to_string())),
        }
    }
}

/// How NS2 pair-context blocks relate to the full contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PairLinking {
    /// Pair blocks are independent simplices.
    Free,
    /// Each pair block equals the full context where the absent party
    /// uses setting 0.
    #[default]
    Strict,
}

impl FromStr for PairLinking {
    type Err = SearchError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        match text.trim().to_ascii_lowercase().as_str() {
            "free" => Ok(PairLinking::Free),
            "strict" => Ok(PairLinking::Strict),
            other => Err(SearchError::UnknownLinking(other.to_string())),
        }
    }
}

/// The full context a pair block is tied to under [`PairLinking::Strict`].
pub fn anchor(ctx: &Context) -> Context {
    match ctx.absent_party() {
        Some(p) => ctx.with_setting(p, 0),
        None => *ctx,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("{kind} cannot be evaluated on a {pairing} strategy")]
    IncompatibleStrategy {
        kind: InequalityKind,
        pairing: Pairing,
    },
    #[error("exhaustive enumeration is capped at L = {MAX_ENUMERATION_L}, got {0}")]
    OverCap(usize),
    #[error("unknown mode `{0}`")]
    UnknownMode(String),
    #[error("unknown pair linking `{0}`")]
    UnknownLinking(String),
    #[error("budget grid is empty")]
    EmptyGrid,
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Pairings a strategy may use for `kind`.
pub fn compatible_pairings(kind: InequalityKind) -> &'static [Pairing] {
    match kind {
        InequalityKind::Svetlichny => &Pairing::ALL,
        InequalityKind::Mermin | InequalityKind::Ns2 => &[Pairing::FullyLocal],
    }
}

/// Builds `max S` for `strategy` under the scenario budgets.
pub fn build_lp<T: Scalar>(
    strategy: &ResponseTable,
    kind: InequalityKind,
    scenario: &RelaxationScenario,
    linking: PairLinking,
) -> Result<LinearProgram<T>, SearchError> {
    if !compatible_pairings(kind).contains(&strategy.pairing()) {
        return Err(SearchError::IncompatibleStrategy {
            kind,
            pairing: strategy.pairing(),
        });
    }
    let len = strategy.len();
    let mut lp = LinearProgram::<T>::new(0);
    let mut blocks: BTreeMap<Context, usize> = BTreeMap::new();
    for ctx in Context::all_full() {
        let start = lp.add_vars(len);
        add_simplex(&mut lp, start, len);
        blocks.insert(ctx, start);
    }
    for (ctx, sign) in kind.spec().terms {
        let start = if ctx.is_full() {
            blocks[&ctx]
        } else {
            match linking {
                PairLinking::Strict => blocks[&anchor(&ctx)],
                PairLinking::Free => {
                    let start = lp.add_vars(len);
                    add_simplex(&mut lp, start, len);
                    start
                }
            }
        };
        for lambda in 0..len {
            let product = strategy.product(lambda, &ctx).ok_or(ModelError::PairInconsistent {
                context: ctx,
                pairing: strategy.pairing(),
            })?;
            lp.add_objective(start + lambda, &T::from_int(i64::from(sign * product)));
        }
    }
    for (which, budget) in scenario.budgets() {
        if *budget >= int(2) {
            continue;
        }
        let budget = T::from_rational(budget);
        for (s, t) in which.pairs() {
            add_distance_budget(
                &mut lp,
                &Block::Vars(blocks[&s]),
                &Block::Vars(blocks[&t]),
                len,
                &budget,
            );
        }
    }
    Ok(lp)
}

/// Largest `|S|` (plain `S` for NS2) reachable with `strategy` under the
/// scenario budgets.
pub fn lp_max_value<T: Scalar>(
    strategy: &ResponseTable,
    kind: InequalityKind,
    scenario: &RelaxationScenario,
    linking: PairLinking,
) -> Result<T, SearchError> {
    let lp = build_lp::<T>(strategy, kind, scenario, linking)?;
    let max = lp.solve()?.value;
    if !kind.spec().symmetric {
        return Ok(max);
    }
    let min_neg = lp.negated().solve()?.value;
    Ok(max.max_of(&min_neg))
}

/// A value computed in either arithmetic.
#[derive(Debug, Clone, PartialEq)]
pub enum LpValue {
    Exact(Rational),
    Real(f64),
}

impl LpValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            LpValue::Exact(r) => to_f64(r),
            LpValue::Real(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            LpValue::Exact(r) => Some(r),
            LpValue::Real(_) => None,
        }
    }
}

impl fmt::Display for LpValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LpValue::Exact(r) => f.write_str(&exact_string(r)),
            LpValue::Real(v) => write!(f, "{}", v),
        }
    }
}

impl Serialize for LpValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            LpValue::Exact(r) => serializer.serialize_str(&exact_string(r)),
            LpValue::Real(v) => serializer.serialize_f64(*v),
        }
    }
}

fn serialize_budgets<S: Serializer>(
    budgets: &BTreeMap<Measure, Rational>,
    serializer: S,
) -> Result<S::Ok, S::Error> {
    serializer.collect_map(budgets.iter().map(|(k, v)| (k.id(), exact_string(v))))
}

/// The LP optimum for one strategy and scenario, compared with the bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub strategy: ResponseTable,
    pub kind: InequalityKind,
    pub scenario: ScenarioShape,
    #[serde(serialize_with = "serialize_budgets")]
    pub budgets: BTreeMap<Measure, Rational>,
    #[serde(rename = "lp_max_S")]
    pub lp_max_s: LpValue,
    pub bound: LpValue,
    pub sound: bool,
    pub tight: bool,
}

fn compare(value: &LpValue, bound: &Rational) -> (bool, bool) {
    match value {
        LpValue::Exact(v) => (v <= bound, v == bound),
        LpValue::Real(v) => {
            let b = to_f64(bound);
            (
                *v <= b + REAL_BOUND_TOLERANCE,
                (v - b).abs() <= REAL_BOUND_TOLERANCE,
            )
        }
    }
}

/// Solves the strategy LP and certifies it against the relaxed bound.
pub fn lp_max_s(
    strategy: &ResponseTable,
    kind: InequalityKind,
    scenario: &RelaxationScenario,
    linking: PairLinking,
    mode: Mode,
) -> Result<BoundCertificate, SearchError> {
    let value = match mode {
        Mode::Exact => LpValue::Exact(lp_max_value::<Rational>(strategy, kind, scenario, linking)?),
        Mode::Real => LpValue::Real(lp_max_value::<f64>(strategy, kind, scenario, linking)?),
    };
    let bound = relaxed_bound(kind, scenario)?;
    let (sound, tight) = compare(&value, &bound);
    Ok(BoundCertificate {
        strategy: strategy.clone(),
        kind,
        scenario: scenario.shape,
        budgets: scenario.budgets().clone(),
        lp_max_s: value,
        bound: match mode {
            Mode::Exact => LpValue::Exact(bound),
            Mode::Real => LpValue::Real(to_f64(&bound)),
        },
        sound,
        tight,
    })
}

/// Symmetries quotiented out during enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quotient {
    /// Also identify tables related by flipping every sign of one response
    /// block (a party, or the joint pair). Only valid when such a flip
    /// multiplies every term of the inequality by the same sign.
    pub block_flips: bool,
}

impl Quotient {
    pub fn for_kind(kind: InequalityKind) -> Quotient {
        Quotient {
            block_flips: kind != InequalityKind::Ns2,
        }
    }

    pub fn permutations_only() -> Quotient {
        Quotient { block_flips: false }
    }
}

/// Column masks of the response blocks, bit `k` for column `k`.
fn block_masks(pairing: Pairing) -> Vec<u8> {
    match pairing {
        Pairing::FullyLocal => vec![0b000011, 0b001100, 0b110000],
        _ => vec![0b001111, 0b110000],
    }
}

fn encode(row: &[i8; 6]) -> u8 {
    row.iter()
        .enumerate()
        .fold(0u8, |acc, (k, v)| acc | (u8::from(*v < 0) << k))
}

fn decode(code: u8) -> [i8; 6] {
    std::array::from_fn(|k| if code >> k & 1 == 1 { -1 } else { 1 })
}

/// Canonical representative: sorted row codes, minimized over block flips.
pub fn canonical_codes(codes: &[u8], pairing: Pairing, quotient: Quotient) -> Vec<u8> {
    let masks = block_masks(pairing);
    let flips = if quotient.block_flips {
        1usize << masks.len()
    } else {
        1
    };
    let mut best: Option<Vec<u8>> = None;
    for f in 0..flips {
        let xor = masks
            .iter()
            .enumerate()
            .filter(|(i, _)| f >> i & 1 == 1)
            .fold(0u8, |acc, (_, m)| acc | m);
        let mut image: Vec<u8> = codes.iter().map(|c| c ^ xor).collect();
        image.sort_unstable();
        if best.as_ref().is_none_or(|b| image < *b) {
            best = Some(image);
        }
    }
    best.expect("at least the identity")
}

pub fn canonicalize(table: &ResponseTable, quotient: Quotient) -> ResponseTable {
    let codes: Vec<u8> = table.rows().iter().map(encode).collect();
    let canon = canonical_codes(&codes, table.pairing(), quotient);
    ResponseTable::new(table.pairing(), canon.into_iter().map(decode).collect())
        .expect("decoded rows are signs")
}

/// Canonical strategies for one pairing and hidden-variable count.
#[derive(Debug, Clone)]
pub struct Enumeration {
    pub pairing: Pairing,
    pub hidden: usize,
    /// `64^L` tables before quotienting.
    pub raw_count: u64,
    pub strategies: Vec<ResponseTable>,
}

pub fn enumerate_strategies(
    pairing: Pairing,
    hidden: usize,
    quotient: Quotient,
) -> Result<Enumeration, SearchError> {
    if hidden == 0 || hidden > MAX_ENUMERATION_L {
        return Err(SearchError::OverCap(hidden));
    }
    let mut strategies = Vec::new();
    let mut codes = vec![0u8; hidden];
    // Nondecreasing code sequences are the lambda-permutation classes.
    loop {
        if canonical_codes(&codes, pairing, quotient) == codes {
            strategies.push(
                ResponseTable::new(pairing, codes.iter().map(|c| decode(*c)).collect())
                    .expect("decoded rows are signs"),
            );
        }
        let mut k = hidden;
        loop {
            if k == 0 {
                return Ok(Enumeration {
                    pairing,
                    hidden,
                    raw_count: 64u64.pow(hidden as u32),
                    strategies,
                });
            }
            k -= 1;
            if codes[k] < 63 {
                codes[k] += 1;
                let v = codes[k];
                for c in codes.iter_mut().skip(k + 1) {
                    *c = v;
                }
                break;
            }
        }
    }
}

/// Per-budget outcome of an exhaustive sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSummary {
    #[serde(serialize_with = "crate::num::serde_exact::serialize")]
    pub budget: Rational,
    #[serde(serialize_with = "serialize_budgets")]
    pub budgets: BTreeMap<Measure, Rational>,
    #[serde(serialize_with = "crate::num::serde_exact::serialize")]
    pub bound: Rational,
    /// Largest `|S|` over all strategies, re-solved exactly at the argmax.
    pub max_s: LpValue,
    pub max_s_real: f64,
    pub argmax: ResponseTable,
    pub violations: usize,
    pub tight: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub strategy: ResponseTable,
    #[serde(serialize_with = "crate::num::serde_exact::serialize")]
    pub budget: Rational,
    pub lp_max_s: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoundnessSummary {
    pub kind: InequalityKind,
    pub scenario: ScenarioShape,
    pub hidden: usize,
    pub linking: PairLinking,
    pub strategies: usize,
    pub raw_strategies: u64,
    pub budgets: Vec<BudgetSummary>,
    pub violations: Vec<Violation>,
}

impl SoundnessSummary {
    pub fn sound(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn tight_everywhere(&self) -> bool {
        self.budgets.iter().all(|b| b.tight)
    }
}

/// Running maximum per budget plus violations; merging is associative.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    best: Vec<Option<(f64, usize)>>,
    violations: Vec<(usize, usize, f64)>,
}

impl Accumulator {
    fn merge(mut self, other: Accumulator) -> Accumulator {
        if self.best.is_empty() {
            return other;
        }
        for (mine, theirs) in self.best.iter_mut().zip(other.best) {
            if let Some((v, i)) = theirs {
                let replace = match mine {
                    None => true,
                    Some((w, j)) => v > *w || (v == *w && i < *j),
                };
                if replace {
                    *mine = Some((v, i));
                }
            }
        }
        self.violations.extend(other.violations);
        self
    }
}

/// Checks the relaxed bound against every canonical strategy with `hidden`
/// hidden-variable values, at each grid budget spread by
/// [`RelaxationScenario::uniform`].
pub fn verify_bound_soundness(
    kind: InequalityKind,
    shape: ScenarioShape,
    hidden: usize,
    grid: &[Rational],
    linking: PairLinking,
) -> Result<SoundnessSummary, SearchError> {
    if grid.is_empty() {
        return Err(SearchError::EmptyGrid);
    }
    let scenarios: Vec<RelaxationScenario> = grid
        .iter()
        .map(|m| RelaxationScenario::uniform(kind, shape, m))
        .collect::<Result<_, _>>()?;
    let bounds: Vec<Rational> = scenarios
        .iter()
        .map(|s| relaxed_bound(kind, s))
        .collect::<Result<_, _>>()?;
    let quotient = Quotient::for_kind(kind);
    let mut strategies = Vec::new();
    let mut raw = 0u64;
    for pairing in compatible_pairings(kind) {
        let e = enumerate_strategies(*pairing, hidden, quotient)?;
        raw += e.raw_count;
        strategies.extend(e.strategies);
    }
    let acc = strategies
        .par_iter()
        .enumerate()
        .map(|(i, strategy)| -> Result<Accumulator, SearchError> {
            let mut acc = Accumulator {
                best: vec![None; grid.len()],
                violations: Vec::new(),
            };
            for (b, scenario) in scenarios.iter().enumerate() {
                let v = lp_max_value::<f64>(strategy, kind, scenario, linking)?;
                acc.best[b] = Some((v, i));
                if v > to_f64(&bounds[b]) + REAL_BOUND_TOLERANCE {
                    acc.violations.push((i, b, v));
                }
            }
            Ok(acc)
        })
        .try_reduce(Accumulator::default, |a, b| Ok(a.merge(b)))?;
    let mut budgets = Vec::with_capacity(grid.len());
    for (b, scenario) in scenarios.iter().enumerate() {
        let (real, idx) = acc.best[b].expect("at least one strategy");
        let argmax = strategies[idx].clone();
        let exact = lp_max_value::<Rational>(&argmax, kind, scenario, linking)?;
        budgets.push(BudgetSummary {
            budget: grid[b].clone(),
            budgets: scenario.budgets().clone(),
            bound: bounds[b].clone(),
            tight: exact == bounds[b],
            max_s: LpValue::Exact(exact),
            max_s_real: real,
            argmax,
            violations: acc.violations.iter().filter(|v| v.1 == b).count(),
        });
    }
    let mut violations: Vec<Violation> = acc
        .violations
        .iter()
        .map(|(i, b, v)| Violation {
            strategy: strategies[*i].clone(),
            budget: grid[*b].clone(),
            lp_max_s: *v,
            bound: to_f64(&bounds[*b]),
        })
        .collect();
    violations.sort_by(|a, b| {
        a.budget
            .cmp(&b.budget)
            .then_with(|| b.lp_max_s.total_cmp(&a.lp_max_s))
    });
    Ok(SoundnessSummary {
        kind,
        scenario: shape,
        hidden,
        linking,
        strategies: strategies.len(),
        raw_strategies: raw,
        budgets,
        violations,
    })
}

/// Parses `a:b:step` into an inclusive grid.
pub fn parse_grid(text: &str) -> Result<Vec<Rational>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    let parse = |s: &str| crate::num::parse_rational(s).map_err(|e| e.to_string());
    match parts.as_slice() {
        [single] => Ok(vec![parse(single)?]),
        [a, b, step] => {
            let (a, b, step) = (parse(a)?, parse(b)?, parse(step)?);
            if step <= int(0) {
                return Err(format!("grid step must be positive in `{}`", text));
            }
            if b < a {
                return Err(format!("grid end precedes start in `{}`", text));
            }
            let mut out = Vec::new();
            let mut v = a;
            while v <= b {
                out.push(v.clone());
                v += &step;
            }
            Ok(out)
        }
        _ => Err(format!("expected `a:b:step`, got `{}`", text)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::Party;
    use crate::num::rat;

    #[test]
    fn raw_counts() {
        for pairing in [Pairing::FullyLocal, Pairing::JointAB] {
            let e = enumerate_strategies(pairing, 1, Quotient::permutations_only()).unwrap();
            assert_eq!(e.raw_count, 64);
            assert_eq!(e.strategies.len(), 64);
        }
        let e = enumerate_strategies(Pairing::FullyLocal, 2, Quotient::permutations_only()).unwrap();
        assert_eq!(e.raw_count, 4096);
        assert_eq!(e.strategies.len(), 64 * 65 / 2);
        let e = enumerate_strategies(Pairing::FullyLocal, 1, Quotient::for_kind(InequalityKind::Mermin))
            .unwrap();
        assert_eq!(e.strategies.len(), 8);
        assert!(matches!(
            enumerate_strategies(Pairing::FullyLocal, 4, Quotient::permutations_only()),
            Err(SearchError::OverCap(4))
        ));
    }

    #[test]
    fn canonical_forms_are_fixed_points() {
        let table = ResponseTable::new(
            Pairing::JointBC,
            vec![[1, -1, 1, 1, -1, -1], [-1, -1, 1, 1, 1, -1]],
        )
        .unwrap();
        let q = Quotient::for_kind(InequalityKind::Svetlichny);
        let c = canonicalize(&table, q);
        assert_eq!(canonicalize(&c, q), c);
    }

    #[test]
    fn zero_budget_mermin_is_classical() {
        let table = ResponseTable::new(Pairing::FullyLocal, vec![[1, 1, 1, 1, 1, -1]; 2]).unwrap();
        let sc = RelaxationScenario::uniform(
            InequalityKind::Mermin,
            ScenarioShape::OneSided(Party::A),
            &int(0),
        )
        .unwrap();
        let cert = lp_max_s(&table, InequalityKind::Mermin, &sc, PairLinking::Strict, Mode::Exact)
            .unwrap();
        assert_eq!(cert.lp_max_s, LpValue::Exact(int(2)));
        assert!(cert.sound && cert.tight);
    }

    #[test]
    fn joint_strategy_rejected_for_mermin() {
        let table = ResponseTable::new(Pairing::JointAB, vec![[1; 6]]).unwrap();
        let sc = RelaxationScenario::uniform(
            InequalityKind::Mermin,
            ScenarioShape::OneSided(Party::A),
            &int(0),
        )
        .unwrap();
        assert!(matches!(
            lp_max_s(&table, InequalityKind::Mermin, &sc, PairLinking::Strict, Mode::Real),
            Err(SearchError::IncompatibleStrategy { .. })
        ));
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(
            parse_grid("0:2:1/2").unwrap(),
            vec![int(0), rat(1, 2), int(1), rat(3, 2), int(2)]
        );
        assert_eq!(parse_grid("3/4").unwrap(), vec![rat(3, 4)]);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("0:1").is_err());
    }
}
