//! Stratified train/validation/test splitting.

use crate::data::dataset::Example;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Split result: the train, validation, and test parts plus any warnings
/// produced while assigning small classes.
pub type Splits = (Vec<Example>, Vec<Example>, Vec<Example>, Vec<String>);

/// Splits `examples` into (train, val, test) stratified by intent.
///
/// Within each intent the examples are shuffled with the seeded Rng and
/// apportioned by the largest-remainder rule, so per-class counts deviate
/// from the exact ratio by at most 1. The three parts are disjoint and
/// their union is the input. Classes with fewer examples than populated
/// splits produce a warning and a best-effort assignment.
pub fn split(examples: &[Example], ratios: (f64, f64, f64), seed: u64) -> Result<Splits> {
    let (r_train, r_val, r_test) = ratios;
    let rs = [r_train, r_val, r_test];
    if rs.iter().any(|r| !(0.0..=1.0).contains(r)) {
        return Err(Error::Config(format!("split ratios must lie in [0,1], got {ratios:?}")));
    }
    if (rs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split ratios must sum to 1, got {ratios:?}")));
    }
    if examples.is_empty() {
        return Err(Error::Data("cannot split an empty dataset".into()));
    }

    let classes = examples.iter().map(|e| e.intent_id).max().unwrap() + 1;
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, ex) in examples.iter().enumerate() {
        by_class[ex.intent_id].push(i);
    }

    let populated = rs.iter().filter(|&&r| r > 0.0).count();
    let mut rng = Rng::new(seed);
    let mut parts: [Vec<Example>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut warnings = Vec::new();

    for (class, mut idxs) in by_class.into_iter().enumerate() {
        if idxs.is_empty() {
            continue;
        }
        if idxs.len() < populated {
            warnings.push(format!(
                "intent '{}' has only {} example(s) for {} split parts; assignment is best-effort",
                examples[idxs[0]].intent_name,
                idxs.len(),
                populated
            ));
        }
        let _ = class;
        rng.shuffle(&mut idxs);

        let n = idxs.len();
        let exact: Vec<f64> = rs.iter().map(|r| r * n as f64).collect();
        let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
        let assigned: usize = counts.iter().sum();
        // Hand the remainder out by largest fractional part; ties go to
        // the earlier split so the outcome is deterministic.
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            let fa = exact[a] - exact[a].floor();
            let fb = exact[b] - exact[b].floor();
            fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
        });
        for &part in order.iter().take(n - assigned) {
            counts[part] += 1;
        }

        let mut cursor = 0;
        for (part, &count) in counts.iter().enumerate() {
            for &idx in &idxs[cursor..cursor + count] {
                parts[part].push(examples[idx].clone());
            }
            cursor += count;
        }
    }

    let [train, val, test] = parts;
    Ok((train, val, test, warnings))
}
