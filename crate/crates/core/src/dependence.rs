//! Measurement-dependence measures and freedom of choice.
//!
//! Every measure is a supremum of L1 distances between hidden-variable
//! distributions at two full contexts. Pair contexts never take part.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::context::{Context, Party, PartyPair};
use crate::lp::{LinearProgram, LpError, Sense};
use crate::model::{build_model, ContextDistribution, MdlModel, ModelError};
use crate::num::{exact_string, int, to_f64, Rational, Scalar};

/// Which settings a measure lets vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Overall,
    OneSided(Party),
    Bipartite(PartyPair),
}

impl Measure {
    pub const ALL: [Measure; 7] = [
        Measure::Overall,
        Measure::OneSided(Party::A),
        Measure::OneSided(Party::B),
        Measure::OneSided(Party::C),
        Measure::Bipartite(PartyPair::AB),
        Measure::Bipartite(PartyPair::BC),
        Measure::Bipartite(PartyPair::AC),
    ];

    /// Short identifier: `M`, `M1`..`M3`, `M12`, `M23`, `M13`.
    pub fn id(self) -> &'static str {
        match self {
            Measure::Overall => "M",
            Measure::OneSided(Party::A) => "M1",
            Measure::OneSided(Party::B) => "M2",
            Measure::OneSided(Party::C) => "M3",
            Measure::Bipartite(PartyPair::AB) => "M12",
            Measure::Bipartite(PartyPair::BC) => "M23",
            Measure::Bipartite(PartyPair::AC) => "M13",
        }
    }

    /// Unordered pairs of distinct full contexts the supremum ranges over.
    ///
    /// Bipartite measures compare any two contexts sharing the third party's
    /// setting; the two parties' settings range freely, so pairs differing in
    /// only one of them are included.
    pub fn pairs(self) -> Vec<(Context, Context)> {
        let all = Context::all_full();
        let mut out = Vec::new();
        for i in 0..8 {
            for j in (i + 1)..8 {
                let (s, t) = (all[i], all[j]);
                let diff = s.differing_parties(&t);
                let keep = match self {
                    Measure::Overall => true,
                    Measure::OneSided(p) => diff == [p],
                    Measure::Bipartite(pair) => !diff.contains(&pair.complement()),
                };
                if keep {
                    out.push((s, t));
                }
            }
        }
        out
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DependenceError {
    #[error("unknown measure `{0}`")]
    UnknownMeasure(String),
    #[error("measure value {0} is outside [0, 2]")]
    OutOfRange(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl FromStr for Measure {
    type Err = DependenceError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let t = text.trim();
        Measure::ALL
            .into_iter()
            .find(|m| m.id().eq_ignore_ascii_case(t))
            .ok_or_else(|| DependenceError::UnknownMeasure(t.to_string()))
    }
}

impl Serialize for Measure {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.id())
    }
}

/// Sum of absolute differences.
pub fn l1_distance(a: &[Rational], b: &[Rational]) -> Rational {
    a.iter()
        .zip(b)
        .fold(Rational::zero(), |acc, (p, q)| acc + (p - q).abs())
}

/// Supremum over present context pairs; `None` if no pair is present.
pub fn measure(model: &MdlModel, which: Measure) -> Option<Rational> {
    which
        .pairs()
        .into_iter()
        .filter_map(|(s, t)| Some(l1_distance(model.distribution(&s)?, model.distribution(&t)?)))
        .max()
}

pub fn measure_one_sided(model: &MdlModel, party: Party) -> Option<Rational> {
    measure(model, Measure::OneSided(party))
}

pub fn measure_bipartite(model: &MdlModel, pair: PartyPair) -> Option<Rational> {
    measure(model, Measure::Bipartite(pair))
}

pub fn measure_overall(model: &MdlModel) -> Option<Rational> {
    measure(model, Measure::Overall)
}

/// `F = 1 - m/2` for `m` in `[0, 2]`.
pub fn freedom(m: &Rational) -> Result<Rational, DependenceError> {
    if m.is_negative() || *m > int(2) {
        return Err(DependenceError::OutOfRange(exact_string(m)));
    }
    Ok(int(1) - m / int(2))
}

pub fn freedom_f64(m: f64) -> Result<f64, DependenceError> {
    if !(0.0..=2.0).contains(&m) {
        return Err(DependenceError::OutOfRange(m.to_string()));
    }
    Ok(1.0 - m / 2.0)
}

/// All seven measures of a model plus the matching freedoms.
///
/// On a model missing full contexts, defined values are lower bounds on the
/// true supremum and `partial` is set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceReport {
    pub values: BTreeMap<Measure, Option<Rational>>,
    pub partial: bool,
}

impl DependenceReport {
    pub fn of(model: &MdlModel) -> Self {
        DependenceReport {
            values: Measure::ALL.into_iter().map(|m| (m, measure(model, m))).collect(),
            partial: !model.is_complete(),
        }
    }

    pub fn get(&self, which: Measure) -> Option<&Rational> {
        self.values.get(&which).and_then(Option::as_ref)
    }

    pub fn freedom(&self, which: Measure) -> Option<Rational> {
        self.get(which).map(|m| freedom(m).expect("measures lie in [0, 2]"))
    }
}

impl Serialize for DependenceReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = serializer.serialize_map(Some(2 * Measure::ALL.len() + 1))?;
        for m in Measure::ALL {
            map.serialize_entry(m.id(), &self.get(m).map(exact_string))?;
        }
        for m in Measure::ALL {
            let key = format!("F{}", &m.id()[1..]);
            map.serialize_entry(&key, &self.freedom(m).map(|f| exact_string(&f)))?;
        }
        map.serialize_entry("partial", &self.partial)?;
        map.end()
    }
}

/// A block of `L` probabilities inside an LP: either variables or fixed.
#[derive(Debug, Clone)]
pub(crate) enum Block<'a, T> {
    Vars(usize),
    Fixed(&'a [T]),
}

/// Adds `sum_l |a_l - b_l| <= budget` for two probability vectors via
/// `t_l >= a_l - b_l`, `sum t_l <= budget / 2`.
///
/// Both blocks must be constrained (or fixed) to sum to one.
pub(crate) fn add_distance_budget<T: Scalar>(
    lp: &mut LinearProgram<T>,
    a: &Block<'_, T>,
    b: &Block<'_, T>,
    len: usize,
    budget: &T,
) {
    let half = budget.div(&T::from_int(2));
    if half.is_nil() {
        for l in 0..len {
            let mut coeffs = Vec::new();
            let mut rhs = T::zero_val();
            push_term(&mut coeffs, &mut rhs, a, l, T::one_val());
            push_term(&mut coeffs, &mut rhs, b, l, T::one_val().neg());
            lp.add_constraint(coeffs, Sense::Eq, rhs);
        }
        return;
    }
    let first = lp.add_vars(len);
    for l in 0..len {
        let mut coeffs = vec![(first + l, T::one_val())];
        let mut rhs = T::zero_val();
        push_term(&mut coeffs, &mut rhs, a, l, T::one_val().neg());
        push_term(&mut coeffs, &mut rhs, b, l, T::one_val());
        lp.add_constraint(coeffs, Sense::Ge, rhs);
    }
    lp.add_constraint((0..len).map(|l| (first + l, T::one_val())).collect(), Sense::Le, half);
}

/// Adds `coeff * block[l]` to a row whose constant side is `rhs`.
fn push_term<T: Scalar>(
    coeffs: &mut Vec<(usize, T)>,
    rhs: &mut T,
    block: &Block<'_, T>,
    l: usize,
    coeff: T,
) {
    match block {
        Block::Vars(start) => coeffs.push((start + l, coeff)),
        Block::Fixed(values) => *rhs = rhs.sub(&coeff.mul(&values[l])),
    }
}

/// Adds `sum block = 1` for a variable block.
pub(crate) fn add_simplex<T: Scalar>(lp: &mut LinearProgram<T>, start: usize, len: usize) {
    lp.add_constraint((0..len).map(|l| (start + l, T::one_val())).collect(), Sense::Eq, T::one_val());
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Completion {
    /// A model with all eight full contexts meeting every budget.
    Feasible(MdlModel),
    Infeasible,
}

impl Completion {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Completion::Feasible(_))
    }
}

/// Decides whether the missing full contexts can be filled in (responses
/// fixed) so that every listed measure stays within its budget.
pub fn complete_contexts(
    model: &MdlModel,
    budgets: &[(Measure, Rational)],
) -> Result<Completion, DependenceError> {
    for (_, b) in budgets {
        if b.is_negative() {
            return Err(DependenceError::OutOfRange(exact_string(b)));
        }
    }
    let len = model.hidden_count();
    let mut lp = LinearProgram::<Rational>::new(0);
    let mut starts: BTreeMap<Context, usize> = BTreeMap::new();
    for ctx in Context::all_full() {
        if model.distribution(&ctx).is_none() {
            let start = lp.add_vars(len);
            add_simplex(&mut lp, start, len);
            starts.insert(ctx, start);
        }
    }
    for (which, budget) in budgets {
        if *budget >= int(2) {
            continue;
        }
        for (s, t) in which.pairs() {
            let block = |c: &Context| match starts.get(c) {
                Some(start) => Block::Vars(*start),
                None => Block::Fixed(model.distribution(c).expect("present")),
            };
            match (block(&s), block(&t)) {
                (Block::Fixed(a), Block::Fixed(b)) => {
                    if l1_distance(a, b) > *budget {
                        return Ok(Completion::Infeasible);
                    }
                }
                (a, b) => add_distance_budget(&mut lp, &a, &b, len, budget),
            }
        }
    }
    let solution = match lp.solve() {
        Ok(sol) => sol,
        Err(LpError::Infeasible) => return Ok(Completion::Infeasible),
        Err(e) => return Err(e.into()),
    };
    let mut vectors = model.distributions().clone().into_inner();
    for (ctx, start) in &starts {
        vectors.insert(*ctx, solution.x[*start..start + len].to_vec());
    }
    let witness = build_model(
        model.responses().clone(),
        ContextDistribution::new(vectors)?,
        model.label(),
    )?;
    Ok(Completion::Feasible(witness))
}

/// Floating-point view of an optional measure.
pub fn approx(value: Option<&Rational>) -> Option<f64> {
    value.map(to_f64)
}
