//! Five parameterized deterministic models and their claimed values.
//!
//! Sign letters (`a`, `b`, ...) are free +-1 parameters defaulting to +1.
//! Primed signs (`a'` and so on) are squares of their letters and therefore
//! always +1; the builders compute them rather than accept them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num::Signed;
use serde::Serialize;

use crate::context::{Context, Party};
use crate::dependence::Measure;
use crate::inequalities::InequalityKind;
use crate::model::{build_model, ContextDistribution, MdlModel, ModelError, Pairing, ResponseTable};
use crate::num::{exact_string, int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ReferenceModel {
    I,
    II,
    III,
    IV,
    V,
}

impl ReferenceModel {
    pub const ALL: [ReferenceModel; 5] = [
        ReferenceModel::I,
        ReferenceModel::II,
        ReferenceModel::III,
        ReferenceModel::IV,
        ReferenceModel::V,
    ];

    pub fn sign_letters(self) -> &'static [char] {
        match self {
            ReferenceModel::I => &['a', 'b', 'c', 'd'],
            ReferenceModel::II => &['a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i'],
            ReferenceModel::III => &['a', 'b', 'c'],
            ReferenceModel::IV => &['a', 'b'],
            ReferenceModel::V => &['a', 'b', 'c', 'd', 'e'],
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ReferenceModel::I => &["p1", "p2"],
            _ => &["p"],
        }
    }

    pub fn roman(self) -> &'static str {
        match self {
            ReferenceModel::I => "I",
            ReferenceModel::II => "II",
            ReferenceModel::III => "III",
            ReferenceModel::IV => "IV",
            ReferenceModel::V => "V",
        }
    }

    /// Every valid parameter vector on a grid with the given step.
    pub fn parameter_grid(self, step: &Rational) -> Vec<Vec<Rational>> {
        let mut values = Vec::new();
        let mut v = int(0);
        while v <= int(1) {
            values.push(v.clone());
            v += step;
        }
        match self {
            ReferenceModel::I => {
                let mut out = Vec::new();
                for p1 in &values {
                    for p2 in &values {
                        if p1 + p2 <= int(1) {
                            out.push(vec![p1.clone(), p2.clone()]);
                        }
                    }
                }
                out
            }
            _ => values.into_iter().map(|p| vec![p]).collect(),
        }
    }
}

impl fmt::Display for ReferenceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "model-{}", self.roman())
    }
}

impl FromStr for ReferenceModel {
    type Err = ReferenceModelError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let t = text.trim().trim_start_matches("model-").to_ascii_uppercase();
        ReferenceModel::ALL
            .into_iter()
            .find(|m| m.roman() == t)
            .ok_or_else(|| ReferenceModelError::UnknownModel(text.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReferenceModelError {
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("{model} takes {expected} parameter(s), got {found}")]
    ParamCount {
        model: ReferenceModel,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameters for {model}: {reason}")]
    InvalidParams { model: ReferenceModel, reason: String },
    #[error("{model} has no sign letter `{letter}`")]
    UnknownSign { model: ReferenceModel, letter: char },
    #[error("sign `{letter}` must be +1 or -1, got {value}")]
    NotASign { letter: char, value: i64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which model, its parameters, and its sign assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceModelSpec {
    pub model: ReferenceModel,
    pub params: Vec<Rational>,
    pub signs: BTreeMap<char, i8>,
}

impl ReferenceModelSpec {
    /// All signs +1.
    pub fn new(model: ReferenceModel, params: Vec<Rational>) -> Self {
        ReferenceModelSpec {
            model,
            params,
            signs: model.sign_letters().iter().map(|c| (*c, 1)).collect(),
        }
    }

    pub fn with_sign(mut self, letter: char, value: i8) -> Self {
        self.signs.insert(letter, value);
        self
    }

    /// Signs from the bits of `mask`, letter `k` negative when bit `k` is set.
    pub fn with_sign_mask(mut self, mask: u32) -> Self {
        for (k, letter) in self.model.sign_letters().iter().enumerate() {
            self.signs.insert(*letter, if mask >> k & 1 == 1 { -1 } else { 1 });
        }
        self
    }

    fn validate(&self) -> Result<(), ReferenceModelError> {
        let model = self.model;
        let expected = model.param_names().len();
        if self.params.len() != expected {
            return Err(ReferenceModelError::ParamCount {
                model,
                expected,
                found: self.params.len(),
            });
        }
        let invalid = |reason: String| ReferenceModelError::InvalidParams { model, reason };
        for (name, p) in model.param_names().iter().zip(&self.params) {
            if p.is_negative() || *p > int(1) {
                return Err(invalid(format!("{} = {} is outside [0, 1]", name, exact_string(p))));
            }
        }
        if model == ReferenceModel::I && &self.params[0] + &self.params[1] > int(1) {
            return Err(invalid("p1 + p2 exceeds 1".into()));
        }
        for (letter, value) in &self.signs {
            if !model.sign_letters().contains(letter) {
                return Err(ReferenceModelError::UnknownSign {
                    model,
                    letter: *letter,
                });
            }
            if *value != 1 && *value != -1 {
                return Err(ReferenceModelError::NotASign {
                    letter: *letter,
                    value: i64::from(*value),
                });
            }
        }
        for letter in model.sign_letters() {
            if !self.signs.contains_key(letter) {
                return Err(ReferenceModelError::UnknownSign {
                    model,
                    letter: *letter,
                });
            }
        }
        Ok(())
    }

    fn sign(&self, letter: char) -> i8 {
        self.signs[&letter]
    }
}

fn columns(entries: Vec<(Context, Vec<Rational>)>) -> Result<ContextDistribution, ModelError> {
    ContextDistribution::new(entries.into_iter().collect())
}

/// Builds the model exactly as tabulated.
pub fn build_reference_model(spec: &ReferenceModelSpec) -> Result<MdlModel, ReferenceModelError> {
    spec.validate()?;
    let s = |c: char| spec.sign(c);
    let one = int(1);
    let zero = int(0);
    // Primed signs are squares of their letters.
    let primed = 1i8;
    let full = Context::full;
    let model = match spec.model {
        ReferenceModel::I => {
            let (p1, p2) = (spec.params[0].clone(), spec.params[1].clone());
            let (a, b, c, d) = (s('a'), s('b'), s('c'), s('d'));
            let rows = vec![
                [a, a, a, a, primed, primed],
                [b, b, b, b, primed, -primed],
                [c, c, c, c, primed, primed],
                [d, d, d, -d, primed, primed],
            ];
            let rest = &one - &p1 - &p2;
            let dist = columns(vec![
                (full(1, 0, 0), vec![&one - &p1, p1.clone(), zero.clone(), zero.clone()]),
                (full(0, 1, 0), vec![&one - &p2, zero.clone(), p2.clone(), zero.clone()]),
                (full(0, 0, 1), vec![rest.clone(), zero.clone(), p1.clone(), p2.clone()]),
                (full(1, 1, 1), vec![rest, p2, zero.clone(), p1]),
            ])?;
            build_model(ResponseTable::new(Pairing::FullyLocal, rows)?, dist, "model-I")?
        }
        ReferenceModel::II => {
            let p = spec.params[0].clone();
            let l = |c: char| s(c);
            let rows = vec![
                [l('a'), l('a'), l('a'), -l('a'), l('a'), l('a')],
                [l('b'); 6],
                [l('c'); 6],
                [l('d'); 6],
                [l('e'), -l('e'), l('e'), l('e'), l('e'), l('e')],
                [l('f'); 6],
                [l('g'), l('g'), -l('g'), l('g'), l('g'), l('g')],
                [l('h'), l('h'), l('h'), -l('h'), l('h'), l('h')],
                [l('i'), l('i'), l('i'), l('i'), l('i'), -l('i')],
            ];
            let dist = columns(
                Context::all_full()
                    .into_iter()
                    .enumerate()
                    .map(|(k, ctx)| {
                        let mut v = vec![zero.clone(); 9];
                        v[0] = &one - &p;
                        v[k + 1] = p.clone();
                        (ctx, v)
                    })
                    .collect(),
            )?;
            build_model(ResponseTable::new(Pairing::JointAB, rows)?, dist, "model-II")?
        }
        ReferenceModel::III => {
            let p = spec.params[0].clone();
            let (a, b, c) = (s('a'), s('b'), s('c'));
            let rows = vec![
                [-a, a, -a, a, -a, -a],
                [b, b, b, b, primed, primed],
                [c, c, c, c, -primed, primed],
            ];
            let first = vec![one.clone(), zero.clone(), zero.clone()];
            let dist = columns(vec![
                (Context::pair(Party::C, 0, 0), first.clone()),
                (Context::pair(Party::B, 0, 0), first.clone()),
                (Context::pair(Party::A, 0, 1), first),
                (full(1, 1, 0), vec![zero.clone(), &one - &p, p]),
                (full(1, 1, 1), vec![zero.clone(), one.clone(), zero.clone()]),
            ])?;
            build_model(ResponseTable::new(Pairing::FullyLocal, rows)?, dist, "model-III")?
        }
        ReferenceModel::IV => {
            let p = spec.params[0].clone();
            let (a, b) = (s('a'), s('b'));
            let rows = vec![[a, a, a, a, primed, primed], [-b, b, b, -b, primed, primed]];
            let fixed = vec![one.clone(), zero.clone()];
            let moved = vec![&one - &p, p];
            let dist = columns(vec![
                (full(1, 0, 0), fixed.clone()),
                (full(0, 1, 0), moved.clone()),
                (full(0, 0, 1), fixed),
                (full(1, 1, 1), moved),
            ])?;
            build_model(ResponseTable::new(Pairing::FullyLocal, rows)?, dist, "model-IV")?
        }
        ReferenceModel::V => {
            let p = spec.params[0].clone();
            let (a, b, c, d, e) = (s('a'), s('b'), s('c'), s('d'), s('e'));
            let rows = vec![
                [a, a, a, -a, a, a],
                [b, b, -b, b, b, b],
                [c, -c, c, -c, c, c],
                [-d, d, d, d, d, -d],
                [e, e, e, e, e, -e],
            ];
            // Weight p sits on one row per (x, y), whatever z is.
            let target = |x: u8, y: u8| match (x, y) {
                (0, 0) => 1,
                (1, 1) => 2,
                (0, 1) => 3,
                _ => 4,
            };
            let dist = columns(
                Context::all_full()
                    .into_iter()
                    .map(|ctx| {
                        let x = ctx.setting(Party::A).expect("full");
                        let y = ctx.setting(Party::B).expect("full");
                        let mut v = vec![zero.clone(); 5];
                        v[0] = &one - &p;
                        v[target(x, y)] = p.clone();
                        (ctx, v)
                    })
                    .collect(),
            )?;
            build_model(ResponseTable::new(Pairing::JointAB, rows)?, dist, "model-V")?
        }
    };
    Ok(model)
}

/// How a claimed measure identity is checked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimKind {
    /// Computed directly from the supplied columns.
    Measured,
    /// Some completion of the missing columns meets the value as a budget.
    Completable,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasureClaim {
    pub measure: Measure,
    pub value: Rational,
    pub kind: ClaimKind,
}

/// The closed forms published alongside a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClaimSet {
    pub model: ReferenceModel,
    pub inequality: InequalityKind,
    pub formula: &'static str,
    pub s: Rational,
    pub measures: Vec<MeasureClaim>,
}

/// Claimed `S` and measure identities at the given parameters.
pub fn expected_claims(model: ReferenceModel, params: &[Rational]) -> ClaimSet {
    let two = int(2);
    let p = &params[0];
    let measured = |measure: Measure, value: Rational| MeasureClaim {
        measure,
        value,
        kind: ClaimKind::Measured,
    };
    let (inequality, formula, s, measures) = match model {
        ReferenceModel::I => {
            let p2 = &params[1];
            (
                InequalityKind::Mermin,
                "S = 2 + 2p1 + 2p2",
                &two + &two * p + &two * p2,
                vec![
                    MeasureClaim {
                        measure: Measure::OneSided(Party::A),
                        value: p.clone(),
                        kind: ClaimKind::Completable,
                    },
                    MeasureClaim {
                        measure: Measure::OneSided(Party::B),
                        value: &two * p2,
                        kind: ClaimKind::Completable,
                    },
                ],
            )
        }
        ReferenceModel::II => (
            InequalityKind::Svetlichny,
            "S = 4 + 4p",
            int(4) + int(4) * p,
            vec![measured(Measure::OneSided(Party::A), &two * p)],
        ),
        ReferenceModel::III => (
            InequalityKind::Ns2,
            "S = 3 + 2p",
            int(3) + &two * p,
            vec![measured(Measure::OneSided(Party::C), &two * p)],
        ),
        ReferenceModel::IV => (
            InequalityKind::Mermin,
            "S = 2 + 2p",
            &two + &two * p,
            vec![measured(Measure::Bipartite(crate::PartyPair::AB), &two * p)],
        ),
        ReferenceModel::V => (
            InequalityKind::Svetlichny,
            "S = 4 + 4p",
            int(4) + int(4) * p,
            vec![measured(Measure::Bipartite(crate::PartyPair::AB), &two * p)],
        ),
    };
    ClaimSet {
        model,
        inequality,
        formula,
        s,
        measures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    #[test]
    fn model_i_columns() {
        let m = build_reference_model(&ReferenceModelSpec::new(ReferenceModel::I, vec![int(1), int(0)])).unwrap();
        assert_eq!(
            m.distribution(&Context::full(1, 0, 0)).unwrap(),
            &[int(0), int(1), int(0), int(0)]
        );
        assert_eq!(m.hidden_count(), 4);
        assert_eq!(m.distributions().full_contexts().len(), 4);
    }

    #[test]
    fn model_iii_columns() {
        let m = build_reference_model(&ReferenceModelSpec::new(ReferenceModel::III, vec![int(0)])).unwrap();
        assert_eq!(
            m.distribution(&Context::full(1, 1, 0)).unwrap(),
            &[int(0), int(1), int(0)]
        );
        assert_eq!(m.distributions().contexts().filter(|c| c.is_pair()).count(), 3);
    }

    #[test]
    fn shapes_and_pairings() {
        let half = vec![rat(1, 2)];
        for (model, l, pairing, contexts) in [
            (ReferenceModel::II, 9, Pairing::JointAB, 8),
            (ReferenceModel::III, 3, Pairing::FullyLocal, 5),
            (ReferenceModel::IV, 2, Pairing::FullyLocal, 4),
            (ReferenceModel::V, 5, Pairing::JointAB, 8),
        ] {
            let m = build_reference_model(&ReferenceModelSpec::new(model, half.clone())).unwrap();
            assert_eq!(m.hidden_count(), l);
            assert_eq!(m.responses().pairing(), pairing);
            assert_eq!(m.distributions().contexts().count(), contexts);
        }
    }

    #[test]
    fn parameter_validation() {
        let err = build_reference_model(&ReferenceModelSpec::new(ReferenceModel::I, vec![rat(3, 4), rat(1, 2)]))
            .unwrap_err();
        assert!(matches!(err, ReferenceModelError::InvalidParams { .. }));
        let err = build_reference_model(&ReferenceModelSpec::new(ReferenceModel::II, vec![rat(3, 2)])).unwrap_err();
        assert!(matches!(err, ReferenceModelError::InvalidParams { .. }));
        let err = build_reference_model(&ReferenceModelSpec::new(ReferenceModel::IV, vec![])).unwrap_err();
        assert!(matches!(err, ReferenceModelError::ParamCount { .. }));
        let err = build_reference_model(&ReferenceModelSpec::new(ReferenceModel::IV, vec![int(0)]).with_sign('z', 1))
            .unwrap_err();
        assert!(matches!(err, ReferenceModelError::UnknownSign { .. }));
        let err = build_reference_model(&ReferenceModelSpec::new(ReferenceModel::IV, vec![int(0)]).with_sign('a', 0))
            .unwrap_err();
        assert!(matches!(err, ReferenceModelError::NotASign { .. }));
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(ReferenceModel::II.parameter_grid(&rat(1, 8)).len(), 9);
        assert_eq!(ReferenceModel::I.parameter_grid(&rat(1, 8)).len(), 45);
        assert_eq!("III".parse::<ReferenceModel>().unwrap(), ReferenceModel::III);
        assert_eq!("model-iv".parse::<ReferenceModel>().unwrap(), ReferenceModel::IV);
    }
}
