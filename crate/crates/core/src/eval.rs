//! Strict entity-level scoring, per-entity F1 and token-level type confusion.
//!
//! Both sides are BIO-repaired before spans are extracted. A predicted span
//! counts as a true positive only when gold holds a span with the same type,
//! start and end. All ratios use the convention `x / 0 = 0`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{label_spans, repair_labels, sort_entity_types, Corpus, EntityType, Label};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold and prediction differ in structure: {0}")]
    StructureMismatch(String),
    #[error("epoch curve needs at least one record")]
    EmptyRecords,
    #[error("epoch ids must be strictly increasing (epoch {next} follows {prev})")]
    NonMonotoneEpochs { prev: usize, next: usize },
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Counts {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Counts {
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1: f1_score(precision, recall),
        }
    }
}

/// Token-level confusion between entity types. Tokens that are `O` on either
/// side are tallied in `missed` (gold entity, predicted `O`) or `spurious`
/// (gold `O`, predicted entity) instead of the matrix.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub types: Vec<EntityType>,
    /// `matrix[gold][pred]`, indexed like `types`.
    pub matrix: Vec<Vec<usize>>,
    pub missed: usize,
    pub spurious: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.matrix.iter().flatten().sum()
    }

    pub fn get(&self, gold: &EntityType, pred: &EntityType) -> usize {
        let g = self.types.iter().position(|t| t == gold);
        let p = self.types.iter().position(|t| t == pred);
        match (g, p) {
            (Some(g), Some(p)) => self.matrix[g][p],
            _ => 0,
        }
    }

    /// Square CSV: header `gold\pred,<types...>`, one row per gold type.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gold\\pred");
        for t in &self.types {
            out.push(',');
            out.push_str(t.as_str());
        }
        out.push('\n');
        for (t, row) in self.types.iter().zip(&self.matrix) {
            out.push_str(t.as_str());
            for c in row {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub micro: Counts,
    pub per_entity: BTreeMap<EntityType, Counts>,
    pub confusion: Confusion,
}

impl EvalReport {
    pub fn precision(&self) -> f64 {
        self.micro.precision
    }
    pub fn recall(&self) -> f64 {
        self.micro.recall
    }
    pub fn f1(&self) -> f64 {
        self.micro.f1
    }

    /// `entity,f1` rows, canonical types first.
    pub fn per_entity_csv(&self) -> String {
        let mut types: Vec<EntityType> = self.per_entity.keys().cloned().collect();
        sort_entity_types(&mut types);
        let mut out = String::from("entity,f1\n");
        for t in types {
            out.push_str(&format!("{},{:.6}\n", t, self.per_entity[&t].f1));
        }
        out
    }
}

fn repaired_segments(corpus: &Corpus) -> Vec<(Vec<&str>, Vec<Label>)> {
    corpus
        .segments()
        .map(|s| {
            let mut labels = s.labels();
            repair_labels(&mut labels);
            (s.texts(), labels)
        })
        .collect()
}

fn paired<'a>(
    gold: &'a Corpus,
    pred: &'a Corpus,
) -> Result<Vec<((Vec<&'a str>, Vec<Label>), (Vec<&'a str>, Vec<Label>))>, EvalError> {
    let g = repaired_segments(gold);
    let p = repaired_segments(pred);
    if g.len() != p.len() {
        return Err(EvalError::StructureMismatch(format!(
            "{} gold segments vs {} predicted",
            g.len(),
            p.len()
        )));
    }
    for (i, (gs, ps)) in g.iter().zip(&p).enumerate() {
        if gs.0 != ps.0 {
            return Err(EvalError::StructureMismatch(format!(
                "segment {i}: token sequences differ"
            )));
        }
    }
    Ok(g.into_iter().zip(p).collect())
}

pub fn entity_prf(gold: &Corpus, pred: &Corpus) -> Result<EvalReport, EvalError> {
    let pairs = paired(gold, pred)?;
    let mut per: BTreeMap<EntityType, (usize, usize, usize)> = BTreeMap::new();
    for ((_, gl), (_, pl)) in &pairs {
        let gr: Vec<&Label> = gl.iter().collect();
        let pr: Vec<&Label> = pl.iter().collect();
        let gspans: BTreeSet<(&EntityType, usize, usize)> = label_spans(&gr).into_iter().collect();
        let pspans: BTreeSet<(&EntityType, usize, usize)> = label_spans(&pr).into_iter().collect();
        for s in &pspans {
            let e = per.entry(s.0.clone()).or_default();
            if gspans.contains(s) {
                e.0 += 1;
            } else {
                e.1 += 1;
            }
        }
        for s in gspans.difference(&pspans) {
            per.entry(s.0.clone()).or_default().2 += 1;
        }
    }
    let (tp, fp, fn_) = per
        .values()
        .fold((0, 0, 0), |a, v| (a.0 + v.0, a.1 + v.1, a.2 + v.2));
    Ok(EvalReport {
        micro: Counts::from_counts(tp, fp, fn_),
        per_entity: per
            .into_iter()
            .map(|(t, (tp, fp, fn_))| (t, Counts::from_counts(tp, fp, fn_)))
            .collect(),
        confusion: confusion_of(&pairs),
    })
}

type Pair<'a> = ((Vec<&'a str>, Vec<Label>), (Vec<&'a str>, Vec<Label>));

fn confusion_of(pairs: &[Pair<'_>]) -> Confusion {
    let mut types: BTreeSet<EntityType> = EntityType::canonical().into_iter().collect();
    for ((_, gl), (_, pl)) in pairs {
        types.extend(gl.iter().chain(pl).filter_map(|l| l.entity_type().cloned()));
    }
    let mut types: Vec<EntityType> = types.into_iter().collect();
    sort_entity_types(&mut types);
    let index: BTreeMap<&EntityType, usize> = types.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut matrix = vec![vec![0usize; types.len()]; types.len()];
    let (mut missed, mut spurious) = (0, 0);
    for ((_, gl), (_, pl)) in pairs {
        for (g, p) in gl.iter().zip(pl) {
            match (g.entity_type(), p.entity_type()) {
                (Some(g), Some(p)) => matrix[index[g]][index[p]] += 1,
                (Some(_), None) => missed += 1,
                (None, Some(_)) => spurious += 1,
                (None, None) => {}
            }
        }
    }
    Confusion {
        types,
        matrix,
        missed,
        spurious,
    }
}

pub fn token_confusion(gold: &Corpus, pred: &Corpus) -> Result<Confusion, EvalError> {
    Ok(confusion_of(&paired(gold, pred)?))
}

/// One training epoch: mean training loss and validation scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_precision: f64,
    pub val_recall: f64,
    pub val_f1: f64,
}

pub fn epoch_curve_csv(records: &[EpochRecord]) -> Result<String, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyRecords);
    }
    for w in records.windows(2) {
        if w[1].epoch <= w[0].epoch {
            return Err(EvalError::NonMonotoneEpochs {
                prev: w[0].epoch,
                next: w[1].epoch,
            });
        }
    }
    let mut out = String::from("epoch,train_loss,precision,recall,f1\n");
    for r in records {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            r.epoch, r.train_loss, r.val_precision, r.val_recall, r.val_f1
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Segment;

    fn corpus(labels: &[&[&str]]) -> Corpus {
        let segs = labels
            .iter()
            .map(|ls| {
                let texts: Vec<String> = (0..ls.len()).map(|i| format!("t{i}")).collect();
                let pairs: Vec<(&str, &str)> =
                    texts.iter().map(String::as_str).zip(ls.iter().copied()).collect();
                Segment::from_pairs(&pairs).unwrap()
            })
            .collect();
        Corpus::from_segments("d", segs)
    }

    #[test]
    fn identity_scores_one() {
        let g = corpus(&[&["B-SKILL", "I-SKILL", "O", "B-ACTIVITY"]]);
        let r = entity_prf(&g, &g).unwrap();
        assert_eq!((r.precision(), r.recall(), r.f1()), (1.0, 1.0, 1.0));
    }

    #[test]
    fn two_thirds() {
        // gold spans: A(0,1) B(2,3) C(4,5); pred: A(0,1) B(2,3) wrong(4,6)
        let g = corpus(&[&["B-SKILL", "O", "B-SKILL", "O", "B-SUBJECT", "O"]]);
        let p = corpus(&[&["B-SKILL", "O", "B-SKILL", "O", "B-SUBJECT", "I-SUBJECT"]]);
        let r = entity_prf(&g, &p).unwrap();
        assert_eq!((r.micro.tp, r.micro.fp, r.micro.fn_), (2, 1, 1));
        assert!((r.precision() - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.recall() - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.f1() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_denominators_are_zero() {
        let g = corpus(&[&["O", "O"]]);
        let r = entity_prf(&g, &g).unwrap();
        assert_eq!((r.precision(), r.recall(), r.f1()), (0.0, 0.0, 0.0));
    }

    #[test]
    fn prediction_is_repaired_first() {
        let g = corpus(&[&["B-SKILL", "I-SKILL"]]);
        let p = corpus(&[&["I-SKILL", "I-SKILL"]]);
        assert_eq!(entity_prf(&g, &p).unwrap().f1(), 1.0);
    }

    #[test]
    fn structure_mismatch() {
        let g = corpus(&[&["O"]]);
        let p = corpus(&[&["O", "O"]]);
        assert!(matches!(entity_prf(&g, &p), Err(EvalError::StructureMismatch(_))));
    }

    #[test]
    fn confusion_examples() {
        let g = corpus(&[&["B-SKILL", "I-SKILL", "O", "B-JOB_TITLE"]]);
        let c = token_confusion(&g, &g).unwrap();
        let skill = EntityType::new("SKILL").unwrap();
        let job = EntityType::new("JOB_TITLE").unwrap();
        assert_eq!(c.get(&skill, &skill), 2);
        assert_eq!(c.get(&job, &job), 1);
        assert_eq!(c.total(), 3);

        let g = corpus(&[&["B-SKILL", "B-SKILL", "B-SKILL"]]);
        let p = corpus(&[&["B-ACTIVITY", "B-ACTIVITY", "B-ACTIVITY"]]);
        let c = token_confusion(&g, &p).unwrap();
        let act = EntityType::new("ACTIVITY").unwrap();
        assert_eq!(c.get(&skill, &act), 3);
        assert_eq!(c.total(), 3);

        let p = corpus(&[&["O", "B-SKILL", "B-SKILL"]]);
        let g2 = corpus(&[&["B-SKILL", "O", "B-SKILL"]]);
        let c = token_confusion(&g2, &p).unwrap();
        assert_eq!((c.missed, c.spurious, c.total()), (1, 1, 1));
        assert!(c.to_csv().starts_with("gold\\pred,JOB_TITLE,JOB_TITLE_GROUP,SKILL,SUBJECT,ACTIVITY\n"));
    }

    #[test]
    fn epoch_csv() {
        let r = EpochRecord {
            epoch: 1,
            train_loss: 2.0,
            val_precision: 0.5,
            val_recall: 0.6,
            val_f1: 0.545455,
        };
        assert_eq!(
            epoch_curve_csv(&[r]).unwrap(),
            "epoch,train_loss,precision,recall,f1\n1,2.000000,0.500000,0.600000,0.545455\n"
        );
        assert_eq!(epoch_curve_csv(&[]), Err(EvalError::EmptyRecords));
        let r2 = EpochRecord { epoch: 1, ..r };
        assert!(matches!(
            epoch_curve_csv(&[r, r2]),
            Err(EvalError::NonMonotoneEpochs { .. })
        ));
    }
}
