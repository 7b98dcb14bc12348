//! Deterministic response tables, setting-conditioned hidden-variable
//! distributions, behaviors and correlators.

use std::collections::BTreeMap;
use std::fmt;

use num::{Signed, Zero};
use serde::Serialize;

use crate::context::{Context, Party, PartyPair};
use crate::num::{exact_string, int, serde_exact, Rational};

/// How outcomes are grouped among the parties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pairing {
    FullyLocal,
    JointAB,
    JointAC,
    JointBC,
}

impl Pairing {
    pub const ALL: [Pairing; 4] = [
        Pairing::FullyLocal,
        Pairing::JointAB,
        Pairing::JointAC,
        Pairing::JointBC,
    ];

    /// The jointly responding pair, if any.
    pub fn joint_pair(self) -> Option<PartyPair> {
        match self {
            Pairing::FullyLocal => None,
            Pairing::JointAB => Some(PartyPair::AB),
            Pairing::JointAC => Some(PartyPair::AC),
            Pairing::JointBC => Some(PartyPair::BC),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pairing::FullyLocal => "fully-local",
            Pairing::JointAB => "joint-ab",
            Pairing::JointAC => "joint-ac",
            Pairing::JointBC => "joint-bc",
        }
    }

    pub fn parse(text: &str) -> Option<Pairing> {
        Pairing::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(text.trim()))
    }
}

impl Serialize for Pairing {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.name())
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("response table is empty")]
    EmptyTable,
    #[error("response entry {value} at lambda {lambda}, column {column} is not +1 or -1")]
    NotASign {
        lambda: usize,
        column: usize,
        value: i64,
    },
    #[error("distribution for {context} has length {found}, expected {expected}")]
    DimensionMismatch {
        context: Context,
        expected: usize,
        found: usize,
    },
    #[error("distribution for {context} has negative entry {value} at lambda {lambda}")]
    NegativeProbability {
        context: Context,
        lambda: usize,
        value: String,
    },
    #[error("distribution for {context} sums to {sum}, not 1")]
    NotNormalized { context: Context, sum: String },
    #[error("pair context {context} is not defined under pairing {pairing}")]
    PairInconsistent { context: Context, pairing: Pairing },
    #[error("partial model: context {0} is not supplied")]
    PartialModel(Context),
    #[error("context {0} is not supplied by the model")]
    MissingContext(Context),
}

/// Deterministic +-1 responses, six per hidden variable.
///
/// Fully local rows are `[A0, A1, B0, B1, C0, C1]`. Joint rows are
/// `[J00, J01, J10, J11, R0, R1]` where `J` is indexed by the settings of the
/// joint pair (in party order) and `R` belongs to the remaining party.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct ResponseTable {
    pairing: Pairing,
    rows: Vec<[i8; 6]>,
}

impl ResponseTable {
    pub fn new(pairing: Pairing, rows: Vec<[i8; 6]>) -> Result<ResponseTable, ModelError> {
        if rows.is_empty() {
            return Err(ModelError::EmptyTable);
        }
        for (lambda, row) in rows.iter().enumerate() {
            for (column, &v) in row.iter().enumerate() {
                if v != 1 && v != -1 {
                    return Err(ModelError::NotASign {
                        lambda: lambda + 1,
                        column: column + 1,
                        value: v as i64,
                    });
                }
            }
        }
        Ok(ResponseTable { pairing, rows })
    }

    /// Validates integer entries of any width.
    pub fn from_i64(pairing: Pairing, rows: &[[i64; 6]]) -> Result<ResponseTable, ModelError> {
        let mut out = Vec::with_capacity(rows.len());
        for (lambda, row) in rows.iter().enumerate() {
            let mut signs = [0i8; 6];
            for (column, &v) in row.iter().enumerate() {
                if v != 1 && v != -1 {
                    return Err(ModelError::NotASign {
                        lambda: lambda + 1,
                        column: column + 1,
                        value: v,
                    });
                }
                signs[column] = v as i8;
            }
            out.push(signs);
        }
        ResponseTable::new(pairing, out)
    }

    pub fn pairing(&self) -> Pairing {
        self.pairing
    }

    pub fn rows(&self) -> &[[i8; 6]] {
        &self.rows
    }

    /// Number of hidden-variable values `L`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Outcomes `(a, b, c)` at `lambda` for full settings.
    ///
    /// Under a joint pairing the first party of the pair reports the joint
    /// sign and the second reports +1, so their product is the joint sign.
    pub fn outcomes(&self, lambda: usize, x: u8, y: u8, z: u8) -> [i8; 3] {
        let row = &self.rows[lambda];
        let s = [x as usize, y as usize, z as usize];
        match self.pairing.joint_pair() {
            None => [row[s[0]], row[2 + s[1]], row[4 + s[2]]],
            Some(pair) => {
                let (p, q) = pair.parties();
                let r = pair.complement();
                let mut out = [1i8; 3];
                out[p.index()] = row[2 * s[p.index()] + s[q.index()]];
                out[r.index()] = row[4 + s[r.index()]];
                out
            }
        }
    }

    /// Product of the three outcomes at a full context.
    pub fn full_product(&self, lambda: usize, x: u8, y: u8, z: u8) -> i8 {
        let [a, b, c] = self.outcomes(lambda, x, y, z);
        a * b * c
    }

    /// Whether the two outcomes of a pair context are defined without the
    /// absent party's setting.
    pub fn defines_pair(&self, pair: PartyPair) -> bool {
        match self.pairing.joint_pair() {
            None => true,
            Some(joint) => joint == pair,
        }
    }

    /// Product of the two relevant outcomes at a pair context.
    pub fn pair_product(&self, lambda: usize, ctx: &Context) -> Option<i8> {
        let pair = ctx.present_pair()?;
        if !self.defines_pair(pair) {
            return None;
        }
        let row = &self.rows[lambda];
        let (p, q) = pair.parties();
        let sp = ctx.setting(p)? as usize;
        let sq = ctx.setting(q)? as usize;
        Some(match self.pairing.joint_pair() {
            None => row[2 * p.index() + sp] * row[2 * q.index() + sq],
            Some(_) => row[2 * sp + sq],
        })
    }

    /// Product of outcomes relevant to `ctx`, full or pair.
    pub fn product(&self, lambda: usize, ctx: &Context) -> Option<i8> {
        match ctx.settings() {
            [Some(x), Some(y), Some(z)] => Some(self.full_product(lambda, x, y, z)),
            _ => self.pair_product(lambda, ctx),
        }
    }
}

/// Hidden-variable distributions, one probability vector per context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextDistribution {
    vectors: BTreeMap<Context, Vec<Rational>>,
}

impl ContextDistribution {
    pub fn new(vectors: BTreeMap<Context, Vec<Rational>>) -> Result<Self, ModelError> {
        let mut expected: Option<usize> = None;
        for (ctx, vector) in &vectors {
            let len = *expected.get_or_insert(vector.len());
            if vector.len() != len {
                return Err(ModelError::DimensionMismatch {
                    context: *ctx,
                    expected: len,
                    found: vector.len(),
                });
            }
            let mut sum = Rational::zero();
            for (lambda, p) in vector.iter().enumerate() {
                if p.is_negative() {
                    return Err(ModelError::NegativeProbability {
                        context: *ctx,
                        lambda: lambda + 1,
                        value: exact_string(p),
                    });
                }
                sum += p;
            }
            if sum != int(1) {
                return Err(ModelError::NotNormalized {
                    context: *ctx,
                    sum: exact_string(&sum),
                });
            }
        }
        Ok(ContextDistribution { vectors })
    }

    /// The same vector at every full context.
    pub fn independent(vector: Vec<Rational>) -> Result<Self, ModelError> {
        ContextDistribution::new(Context::all_full().into_iter().map(|c| (c, vector.clone())).collect())
    }

    pub fn empty() -> Self {
        ContextDistribution {
            vectors: BTreeMap::new(),
        }
    }

    pub fn get(&self, ctx: &Context) -> Option<&[Rational]> {
        self.vectors.get(ctx).map(Vec::as_slice)
    }

    pub fn contexts(&self) -> impl Iterator<Item = &Context> {
        self.vectors.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Context, &Vec<Rational>)> {
        self.vectors.iter()
    }

    pub fn full_contexts(&self) -> Vec<Context> {
        self.vectors.keys().filter(|c| c.is_full()).copied().collect()
    }

    pub fn dimension(&self) -> Option<usize> {
        self.vectors.values().next().map(Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn into_inner(self) -> BTreeMap<Context, Vec<Rational>> {
        self.vectors
    }
}

/// A measurement-dependent local model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MdlModel {
    responses: ResponseTable,
    distributions: ContextDistribution,
    label: String,
}

/// Checks cross-invariants and assembles a model.
pub fn build_model(
    responses: ResponseTable,
    distributions: ContextDistribution,
    label: impl Into<String>,
) -> Result<MdlModel, ModelError> {
    for (ctx, vector) in distributions.iter() {
        if vector.len() != responses.len() {
            return Err(ModelError::DimensionMismatch {
                context: *ctx,
                expected: responses.len(),
                found: vector.len(),
            });
        }
        if let Some(pair) = ctx.present_pair() {
            if !responses.defines_pair(pair) {
                return Err(ModelError::PairInconsistent {
                    context: *ctx,
                    pairing: responses.pairing(),
                });
            }
        }
    }
    Ok(MdlModel {
        responses,
        distributions,
        label: label.into(),
    })
}

impl MdlModel {
    pub fn responses(&self) -> &ResponseTable {
        &self.responses
    }

    pub fn distributions(&self) -> &ContextDistribution {
        &self.distributions
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn hidden_count(&self) -> usize {
        self.responses.len()
    }

    pub fn distribution(&self, ctx: &Context) -> Option<&[Rational]> {
        self.distributions.get(ctx)
    }

    pub fn is_complete(&self) -> bool {
        Context::all_full()
            .iter()
            .all(|c| self.distributions.get(c).is_some())
    }
}

/// Exact correlator at a full or pair context.
pub fn correlator(model: &MdlModel, ctx: &Context) -> Result<Rational, ModelError> {
    let rho = model
        .distribution(ctx)
        .ok_or(ModelError::MissingContext(*ctx))?;
    let mut total = Rational::zero();
    for (lambda, p) in rho.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let sign = model
            .responses()
            .product(lambda, ctx)
            .ok_or(ModelError::PairInconsistent {
                context: *ctx,
                pairing: model.responses().pairing(),
            })?;
        if sign > 0 {
            total += p;
        } else {
            total -= p;
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BehaviorError {
    #[error("probability at {context} outcome {outcome} is negative")]
    Negative { context: Context, outcome: usize },
    #[error("outcomes at {context} sum to {sum}, not 1")]
    NotNormalized { context: Context, sum: String },
}

/// Full conditional distribution `P(a,b,c|x,y,z)`.
///
/// Outcome index is `4*ia + 2*ib + ic` where `i = 0` stands for +1 and `1`
/// for -1; settings are indexed like [`Context::all_full`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    table: [[Rational; 8]; 8],
}

fn outcome_bit(sign: i8) -> usize {
    usize::from(sign < 0)
}

fn outcome_sign(bit: usize) -> char {
    if bit == 0 {
        '+'
    } else {
        '-'
    }
}

impl Behavior {
    pub fn from_table(table: [[Rational; 8]; 8]) -> Result<Behavior, BehaviorError> {
        for (s, row) in table.iter().enumerate() {
            let ctx = Context::from_full_index(s);
            let mut sum = Rational::zero();
            for (o, p) in row.iter().enumerate() {
                if p.is_negative() {
                    return Err(BehaviorError::Negative {
                        context: ctx,
                        outcome: o,
                    });
                }
                sum += p;
            }
            if sum != int(1) {
                return Err(BehaviorError::NotNormalized {
                    context: ctx,
                    sum: exact_string(&sum),
                });
            }
        }
        Ok(Behavior { table })
    }

    /// `P(a,b,c|x,y,z)` with outcomes given as +-1.
    pub fn probability(&self, outcomes: [i8; 3], x: u8, y: u8, z: u8) -> &Rational {
        let o = 4 * outcome_bit(outcomes[0]) + 2 * outcome_bit(outcomes[1]) + outcome_bit(outcomes[2]);
        &self.table[4 * x as usize + 2 * y as usize + z as usize][o]
    }

    pub fn table(&self) -> &[[Rational; 8]; 8] {
        &self.table
    }

    /// Marginal over the parties in `mask` (bit per party) at one full setting.
    fn marginal(&self, setting: usize, parties: &[Party], outcome_bits: &[usize]) -> Rational {
        let mut total = Rational::zero();
        for (o, p) in self.table[setting].iter().enumerate() {
            let matches = parties
                .iter()
                .zip(outcome_bits)
                .all(|(party, bit)| (o >> (2 - party.index())) & 1 == *bit);
            if matches {
                total += p;
            }
        }
        total
    }
}

/// Behavior induced by a model with all eight full contexts.
pub fn behavior(model: &MdlModel) -> Result<Behavior, ModelError> {
    let zero = Rational::zero();
    let mut table: [[Rational; 8]; 8] = std::array::from_fn(|_| std::array::from_fn(|_| zero.clone()));
    for ctx in Context::all_full() {
        let rho = model
            .distribution(&ctx)
            .ok_or(ModelError::PartialModel(ctx))?;
        let s = ctx.full_index().expect("full context");
        let [x, y, z] = ctx.settings().map(|v| v.expect("full context"));
        for (lambda, p) in rho.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let [a, b, c] = model.responses().outcomes(lambda, x, y, z);
            let o = 4 * outcome_bit(a) + 2 * outcome_bit(b) + outcome_bit(c);
            table[s][o] += p;
        }
    }
    Ok(Behavior { table })
}

/// One failed marginal identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarginalViolation {
    /// Description such as `P_A(+|x)` or `P_AB(+-|xy')`.
    pub marginal: String,
    pub first: Context,
    pub second: Context,
    #[serde(with = "serde_exact")]
    pub first_value: Rational,
    #[serde(with = "serde_exact")]
    pub second_value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct NoSignalingReport {
    pub violations: Vec<MarginalViolation>,
}

impl NoSignalingReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exact check that every one- and two-party marginal ignores the other
/// parties' settings.
pub fn check_no_signaling(behavior: &Behavior) -> NoSignalingReport {
    let mut violations = Vec::new();
    let subsets: Vec<Vec<Party>> = vec![
        vec![Party::A],
        vec![Party::B],
        vec![Party::C],
        vec![Party::A, Party::B],
        vec![Party::A, Party::C],
        vec![Party::B, Party::C],
    ];
    for parties in &subsets {
        let others: Vec<Party> = Party::ALL
            .into_iter()
            .filter(|p| !parties.contains(p))
            .collect();
        let k = parties.len();
        for own in 0..(1usize << k) {
            let own_settings: Vec<u8> = (0..k).map(|i| ((own >> (k - 1 - i)) & 1) as u8).collect();
            for outs in 0..(1usize << k) {
                let bits: Vec<usize> = (0..k).map(|i| (outs >> (k - 1 - i)) & 1).collect();
                let mut reference: Option<(Context, Rational)> = None;
                for rest in 0..(1usize << others.len()) {
                    let mut settings = [0u8; 3];
                    for (p, s) in parties.iter().zip(&own_settings) {
                        settings[p.index()] = *s;
                    }
                    for (i, p) in others.iter().enumerate() {
                        settings[p.index()] = ((rest >> (others.len() - 1 - i)) & 1) as u8;
                    }
                    let ctx = Context::full(settings[0], settings[1], settings[2]);
                    let value = behavior.marginal(ctx.full_index().expect("full"), parties, &bits);
                    match &reference {
                        None => reference = Some((ctx, value)),
                        Some((first, first_value)) => {
                            if *first_value != value {
                                violations.push(MarginalViolation {
                                    marginal: marginal_name(parties, &bits, &own_settings),
                                    first: *first,
                                    second: ctx,
                                    first_value: first_value.clone(),
                                    second_value: value,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    NoSignalingReport { violations }
}

fn marginal_name(parties: &[Party], bits: &[usize], settings: &[u8]) -> String {
    let names: String = parties.iter().map(|p| p.letter()).collect();
    let outs: String = bits.iter().map(|b| outcome_sign(*b)).collect();
    let mut sets = String::new();
    for (p, s) in parties.iter().zip(settings) {
        sets.push(p.setting_symbol());
        if *s == 1 {
            sets.push('\'');
        }
    }
    format!("P_{}({}|{})", names, outs, sets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConsistencyStatus {
    Consistent,
    Inconsistent,
    /// The extending full context is not supplied.
    Missing,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConsistencyEntry {
    pub pair: Context,
    pub extension: Context,
    pub status: ConsistencyStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ConsistencyReport {
    pub entries: Vec<ConsistencyEntry>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.status == ConsistencyStatus::Consistent)
    }

    pub fn inconsistencies(&self) -> impl Iterator<Item = &ConsistencyEntry> {
        self.entries
            .iter()
            .filter(|e| e.status == ConsistencyStatus::Inconsistent)
    }
}

/// Compares each pair-context vector with the full contexts extending it.
/// Informational: a mismatch is not an error.
pub fn check_context_consistency(model: &MdlModel) -> ConsistencyReport {
    let mut entries = Vec::new();
    for (ctx, vector) in model.distributions().iter() {
        if ctx.is_full() {
            continue;
        }
        for extension in ctx.extensions() {
            let status = match model.distribution(&extension) {
                None => ConsistencyStatus::Missing,
                Some(other) if other == vector.as_slice() => ConsistencyStatus::Consistent,
                Some(_) => ConsistencyStatus::Inconsistent,
            };
            entries.push(ConsistencyEntry {
                pair: *ctx,
                extension,
                status,
            });
        }
    }
    ConsistencyReport { entries }
}
