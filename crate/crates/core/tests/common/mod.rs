#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use tribell::num::{int, Rational};
use tribell::{build_model, Context, ContextDistribution, MdlModel, Pairing, ResponseTable};

/// Random probability vector with small integer weights.
pub fn random_vector<R: Rng>(rng: &mut R, len: usize) -> Vec<Rational> {
    loop {
        let weights: Vec<i64> = (0..len).map(|_| rng.gen_range(0..=4)).collect();
        let total: i64 = weights.iter().sum();
        if total > 0 {
            return weights
                .into_iter()
                .map(|w| Rational::new(w.into(), total.into()))
                .collect();
        }
    }
}

pub fn random_table<R: Rng>(rng: &mut R, pairing: Pairing, len: usize) -> ResponseTable {
    let rows = (0..len)
        .map(|_| std::array::from_fn(|_| if rng.gen_bool(0.5) { 1 } else { -1 }))
        .collect();
    ResponseTable::new(pairing, rows).unwrap()
}

/// Fully local model with an independent random vector per full context.
pub fn random_complete_model<R: Rng>(rng: &mut R, max_len: usize) -> MdlModel {
    let len = rng.gen_range(1..=max_len);
    let table = random_table(rng, Pairing::FullyLocal, len);
    let vectors: BTreeMap<Context, Vec<Rational>> = Context::all_full()
        .into_iter()
        .map(|c| (c, random_vector(rng, len)))
        .collect();
    build_model(table, ContextDistribution::new(vectors).unwrap(), "random").unwrap()
}

/// Fully local model whose distribution ignores the settings.
pub fn random_independent_model<R: Rng>(rng: &mut R, max_len: usize) -> MdlModel {
    let len = rng.gen_range(1..=max_len);
    let table = random_table(rng, Pairing::FullyLocal, len);
    let vector = random_vector(rng, len);
    build_model(table, ContextDistribution::independent(vector).unwrap(), "independent").unwrap()
}

/// Model over a random nonempty subset of the full contexts.
pub fn random_partial_model<R: Rng>(rng: &mut R, max_len: usize) -> MdlModel {
    let len = rng.gen_range(1..=max_len);
    let table = random_table(rng, Pairing::FullyLocal, len);
    let mut vectors = BTreeMap::new();
    for c in Context::all_full() {
        if rng.gen_bool(0.6) {
            vectors.insert(c, random_vector(rng, len));
        }
    }
    if vectors.is_empty() {
        vectors.insert(Context::full(0, 0, 0), random_vector(rng, len));
    }
    build_model(table, ContextDistribution::new(vectors).unwrap(), "partial").unwrap()
}

/// The same model with one more full context (if any is missing).
pub fn with_extra_context<R: Rng>(rng: &mut R, model: &MdlModel) -> Option<MdlModel> {
    let missing: Vec<Context> = Context::all_full()
        .into_iter()
        .filter(|c| model.distribution(c).is_none())
        .collect();
    if missing.is_empty() {
        return None;
    }
    let ctx = missing[rng.gen_range(0..missing.len())];
    let mut vectors = model.distributions().clone().into_inner();
    vectors.insert(ctx, random_vector(rng, model.hidden_count()));
    Some(
        build_model(
            model.responses().clone(),
            ContextDistribution::new(vectors).unwrap(),
            model.label(),
        )
        .unwrap(),
    )
}

pub fn two() -> Rational {
    int(2)
}
