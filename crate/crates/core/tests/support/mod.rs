//! Test-only helpers: a random snapshot generator and a straight-line
//! recomputation of the index that shares no code with the library path.
#![allow(dead_code)]

pub mod tables;

use rand::rngs::StdRng;
use rand::Rng;

use webrep_core::{build_default_indicator_set, EntityRecord, IndicatorKind, Polarity, Provenance, RawValue, Snapshot};

pub struct OracleRow {
    pub slug: String,
    pub wri: f64,
    pub pop_normalized: f64,
    pub final_index: f64,
}

/// Raw matrix view: rows are entities, columns follow the indicator set.
/// Missing cells are 0, booleans 0/1.
fn matrix(snapshot: &Snapshot) -> Vec<Vec<f64>> {
    snapshot
        .entities
        .iter()
        .map(|e| {
            snapshot
                .indicator_set
                .iter()
                .map(|spec| match e.values.get(&spec.id).map(|r| r.value) {
                    Some(webrep_core::Value::Number(v)) => v,
                    Some(webrep_core::Value::Boolean(true)) => 1.0,
                    _ => 0.0,
                })
                .collect()
        })
        .collect()
}

/// `text_mode = false` divides by the raw population (1 for 0); `true`
/// divides by the min-max scaled population with the smallest positive
/// scaled value standing in for 0.
pub fn oracle(snapshot: &Snapshot, text_mode: bool) -> Vec<OracleRow> {
    let m = matrix(snapshot);
    let n = m.len();
    let specs: Vec<_> = snapshot.indicator_set.iter().collect();

    let mut wri = vec![0.0; n];
    let mut positive_used = 0usize;
    let mut pos_sum = vec![0.0; n];
    let mut neg_sum = vec![0.0; n];
    for (j, spec) in specs.iter().enumerate() {
        let col: Vec<f64> = m.iter().map(|row| row[j]).collect();
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if lo == hi {
            continue;
        }
        if spec.polarity == Polarity::Positive {
            positive_used += 1;
        }
        for i in 0..n {
            let x = (col[i] - lo) / (hi - lo);
            if spec.polarity == Polarity::Positive {
                pos_sum[i] += x;
            } else {
                neg_sum[i] -= x;
            }
        }
    }
    for i in 0..n {
        wri[i] = (pos_sum[i] + neg_sum[i]) / positive_used as f64;
    }

    let pops: Vec<f64> = snapshot.entities.iter().map(|e| e.population as f64).collect();
    let pmin = pops.iter().cloned().fold(f64::INFINITY, f64::min);
    let pmax = pops.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = pops
        .iter()
        .map(|p| if pmax > pmin { (p - pmin) / (pmax - pmin) } else { 0.0 })
        .collect();
    let smallest_positive = scaled.iter().cloned().filter(|v| *v > 0.0).fold(f64::INFINITY, f64::min);
    let divisors: Vec<f64> = (0..n)
        .map(|i| {
            if text_mode {
                if scaled[i] > 0.0 {
                    scaled[i]
                } else if smallest_positive.is_finite() {
                    smallest_positive
                } else {
                    1.0
                }
            } else if pops[i] == 0.0 {
                1.0
            } else {
                pops[i]
            }
        })
        .collect();
    let pop_norm: Vec<f64> = (0..n).map(|i| wri[i] / divisors[i]).collect();
    let lo = pop_norm.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pop_norm.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

    (0..n)
        .map(|i| OracleRow {
            slug: snapshot.entities[i].slug.clone(),
            wri: wri[i],
            pop_normalized: pop_norm[i],
            final_index: (pop_norm[i] - lo) / (hi - lo),
        })
        .collect()
}

/// Random snapshot over the default set with 3..=max_entities entities
/// (two entities can tie exactly, which has no valid rescale).
/// Values span several orders of magnitude; some cells are missing and
/// `dmoz_listed` is often constant.
pub fn random_snapshot(rng: &mut StdRng, max_entities: usize, zero_population: bool) -> Snapshot {
    let set = build_default_indicator_set();
    let n = rng.gen_range(3..=max_entities);
    let mut entities = Vec::with_capacity(n);
    let all_listed = rng.gen_bool(0.5);
    for i in 0..n {
        let population = if zero_population && i == 0 { 0 } else { rng.gen_range(0..80_000u64) };
        let mut e = EntityRecord::new(&format!("Entity {i}"), population);
        for spec in set.iter() {
            let value = match spec.kind {
                IndicatorKind::Boolean if spec.id == "dmoz_listed" && all_listed => {
                    RawValue::boolean(true, Provenance::Fixture)
                }
                IndicatorKind::Boolean => RawValue::boolean(rng.gen_bool(0.7), Provenance::Fixture),
                IndicatorKind::Percentage => RawValue::number(rng.gen_range(7.0..90.0), Provenance::Fixture),
                IndicatorKind::Milliseconds => RawValue::number(rng.gen_range(20.0..3208.0), Provenance::Fixture),
                _ if rng.gen_bool(0.05) => RawValue::missing(Provenance::Fixture),
                _ => {
                    let magnitude = 10f64.powf(rng.gen_range(0.0..8.0));
                    RawValue::number((rng.gen::<f64>() * magnitude).round(), Provenance::Fixture)
                }
            };
            e.set(&spec.id, value);
        }
        entities.push(e);
    }
    Snapshot::new("random", None, set, entities).unwrap()
}
