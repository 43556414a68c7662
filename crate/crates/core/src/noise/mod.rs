//! OCR error modeling: alignment-based error analysis, error tables, and
//! single-edit noise injection for noise-aware training.

mod align;
mod inject;
mod table;

pub use align::{align_chars, levenshtein, EditOp, EditScript};
pub use inject::{
    apply_entry, apply_fallback, inject_noise, inject_noise_with_stats, is_perturbable,
    make_artificial, perturb_word, random_fallback, segment_rng, EditSource, FallbackEdit,
    InjectionStats, Perturbation,
};
pub use table::{load_error_table, save_error_table, EditType, ErrorEntry, ErrorTable};

use thiserror::Error;

use crate::corpus::Corpus;

/// Default probability that an injected edit comes from the error table.
pub const DEFAULT_TABLE_BIAS: f64 = 0.8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("error table row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("error table row {row}: unknown edit type {value:?}")]
    UnknownType { row: usize, value: String },
    #[error("error table row {row}: negative frequency {value}")]
    NegativeFrequency { row: usize, value: i64 },
    #[error("word {0:?} is not perturbable")]
    NotPerturbable(String),
    #[error("table bias {0} outside [0, 1]")]
    InvalidLambda(f64),
    #[error("corpora are not parallel: {0}")]
    StructureMismatch(String),
}

/// Checks that two corpora share document, segment and token structure and
/// label sequences. Token texts may differ.
pub fn check_parallel(noisy: &Corpus, clean: &Corpus) -> Result<(), NoiseError> {
    let mismatch = |s: String| Err(NoiseError::StructureMismatch(s));
    if noisy.documents().len() != clean.documents().len() {
        return mismatch(format!(
            "{} documents vs {}",
            noisy.documents().len(),
            clean.documents().len()
        ));
    }
    for (di, (nd, cd)) in noisy.documents().iter().zip(clean.documents()).enumerate() {
        if nd.segments.len() != cd.segments.len() {
            return mismatch(format!(
                "document {di} ({:?}): {} segments vs {}",
                cd.id,
                nd.segments.len(),
                cd.segments.len()
            ));
        }
        for (si, (ns, cs)) in nd.segments.iter().zip(&cd.segments).enumerate() {
            if ns.len() != cs.len() {
                return mismatch(format!(
                    "document {di} ({:?}) segment {si}: {} tokens vs {}",
                    cd.id,
                    ns.len(),
                    cs.len()
                ));
            }
            for (ti, (nt, ct)) in ns.tokens().iter().zip(cs.tokens()).enumerate() {
                if nt.label != ct.label {
                    return mismatch(format!(
                        "document {di} ({:?}) segment {si} token {ti}: label {} vs {}",
                        cd.id, nt.label, ct.label
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Aligns every noisy/clean token pair and counts the edit operations.
/// Entries come back sorted by descending frequency.
pub fn analyze_errors(noisy: &Corpus, clean: &Corpus) -> Result<ErrorTable, NoiseError> {
    check_parallel(noisy, clean)?;
    let mut entries = Vec::new();
    for (ns, cs) in noisy.segments().zip(clean.segments()) {
        for (nt, ct) in ns.tokens().iter().zip(cs.tokens()) {
            if nt.text() == ct.text() {
                continue;
            }
            for op in align_chars(nt.text(), ct.text()).ops {
                entries.push(ErrorEntry {
                    recognized: op.recognized,
                    correct: op.correct,
                    edit_type: op.edit_type,
                    frequency: 1,
                });
            }
        }
    }
    let mut table = ErrorTable::from_entries(entries);
    table.sort_by_frequency();
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Segment;

    fn one(text: &str) -> Corpus {
        Corpus::from_segments("d", vec![Segment::from_pairs(&[(text, "B-SKILL")]).unwrap()])
    }

    #[test]
    fn identical_corpora_yield_empty_table() {
        let t = analyze_errors(&one("Metall"), &one("Metall")).unwrap();
        assert_eq!(t.total(), 0);
    }

    #[test]
    fn single_pair() {
        let t = analyze_errors(&one("Metali"), &one("Metall")).unwrap();
        assert_eq!(
            t.entries(),
            &[ErrorEntry::new("i", "l", EditType::Substitution, 1).unwrap()]
        );
    }

    #[test]
    fn sorted_by_frequency() {
        let noisy = Corpus::from_segments(
            "d",
            vec![Segment::from_pairs(&[("Metali", "O"), ("ab", "O"), ("cd", "O")]).unwrap()],
        );
        let clean = Corpus::from_segments(
            "d",
            vec![Segment::from_pairs(&[("Metall", "O"), ("ab,", "O"), ("cd,", "O")]).unwrap()],
        );
        let t = analyze_errors(&noisy, &clean).unwrap();
        assert_eq!(t.entries()[0].key(), ("", ",", EditType::Deletion));
        assert_eq!(t.entries()[0].frequency, 2);
    }

    #[test]
    fn mismatch_reports_location() {
        let a = Corpus::from_segments("d", vec![Segment::from_pairs(&[("a", "O")]).unwrap()]);
        let b = Corpus::from_segments(
            "d",
            vec![Segment::from_pairs(&[("a", "O"), ("b", "O")]).unwrap()],
        );
        let err = analyze_errors(&a, &b).unwrap_err();
        assert!(err.to_string().contains("segment 0"), "{err}");
        let c = Corpus::from_segments("d", vec![Segment::from_pairs(&[("a", "B-SKILL")]).unwrap()]);
        assert!(analyze_errors(&a, &c).is_err());
    }
}
