//! Character-level Levenshtein alignment between an OCR string and its
//! ground truth.

use serde::{Deserialize, Serialize};

use super::EditType;

/// One edit, positioned by character index in the clean string. Insertions
/// at position `p` go before clean character `p` (`p == len` appends).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EditOp {
    pub position: usize,
    pub edit_type: EditType,
    pub recognized: String,
    pub correct: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    /// Rewrites `clean` with the script. Substitutions and deletions consume
    /// `correct.chars().count()` characters at their position.
    pub fn apply(&self, clean: &str) -> String {
        let chars: Vec<char> = clean.chars().collect();
        let mut ops: Vec<&EditOp> = self.ops.iter().collect();
        ops.sort_by_key(|op| (op.position, op.edit_type != EditType::Insertion));
        let mut out = String::with_capacity(clean.len() + 4);
        let mut cursor = 0;
        for op in ops {
            while cursor < op.position && cursor < chars.len() {
                out.push(chars[cursor]);
                cursor += 1;
            }
            match op.edit_type {
                EditType::Insertion => out.push_str(&op.recognized),
                EditType::Substitution | EditType::Deletion => {
                    out.push_str(&op.recognized);
                    cursor += op.correct.chars().count();
                }
            }
        }
        out.extend(chars.iter().skip(cursor));
        out
    }
}

/// Minimal unit-cost alignment of `noisy` against `clean`. Traceback runs
/// from the end and prefers match, then substitution, deletion, insertion.
pub fn align_chars(noisy: &str, clean: &str) -> EditScript {
    let c: Vec<char> = clean.chars().collect();
    let n: Vec<char> = noisy.chars().collect();
    let (rows, cols) = (c.len() + 1, n.len() + 1);
    let mut dp = vec![0u32; rows * cols];
    let at = |i: usize, j: usize| i * cols + j;
    for i in 0..rows {
        dp[at(i, 0)] = i as u32;
    }
    for j in 0..cols {
        dp[at(0, j)] = j as u32;
    }
    for i in 1..rows {
        for j in 1..cols {
            let diag = dp[at(i - 1, j - 1)] + u32::from(c[i - 1] != n[j - 1]);
            let del = dp[at(i - 1, j)] + 1;
            let ins = dp[at(i, j - 1)] + 1;
            dp[at(i, j)] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::new();
    let (mut i, mut j) = (c.len(), n.len());
    while i > 0 || j > 0 {
        let here = dp[at(i, j)];
        if i > 0 && j > 0 && c[i - 1] == n[j - 1] && dp[at(i - 1, j - 1)] == here {
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dp[at(i - 1, j - 1)] + 1 == here {
            ops.push(EditOp {
                position: i - 1,
                edit_type: EditType::Substitution,
                recognized: n[j - 1].to_string(),
                correct: c[i - 1].to_string(),
            });
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[at(i - 1, j)] + 1 == here {
            ops.push(EditOp {
                position: i - 1,
                edit_type: EditType::Deletion,
                recognized: String::new(),
                correct: c[i - 1].to_string(),
            });
            i -= 1;
        } else {
            ops.push(EditOp {
                position: i,
                edit_type: EditType::Insertion,
                recognized: n[j - 1].to_string(),
                correct: String::new(),
            });
            j -= 1;
        }
    }
    ops.reverse();
    EditScript { ops }
}

/// Plain Levenshtein distance over characters.
pub fn levenshtein(a: &str, b: &str) -> usize {
    align_chars(a, b).len()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Textbook two-row DP, kept separate from the traceback implementation.
    fn oracle_distance(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut cur = vec![i; b.len() + 1];
            for j in 1..=b.len() {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                cur[j] = (prev[j - 1] + cost).min(prev[j] + 1).min(cur[j - 1] + 1);
            }
            prev = cur;
        }
        prev[b.len()]
    }

    #[test]
    fn fig_one_substitution() {
        let s = align_chars("Damennaßschneider", "Damenmaßschneider");
        assert_eq!(
            s.ops,
            vec![EditOp {
                position: 5,
                edit_type: EditType::Substitution,
                recognized: "n".into(),
                correct: "m".into(),
            }]
        );
    }

    #[test]
    fn identity_is_empty() {
        assert!(align_chars("Werkstoffe", "Werkstoffe").is_empty());
        assert!(align_chars("", "").is_empty());
    }

    #[test]
    fn dropped_comma_is_deletion() {
        let s = align_chars("Werkstoffe", "Werkstoffe,");
        assert_eq!(
            s.ops,
            vec![EditOp {
                position: 10,
                edit_type: EditType::Deletion,
                recognized: String::new(),
                correct: ",".into(),
            }]
        );
    }

    #[test]
    fn stray_apostrophe_is_insertion() {
        let s = align_chars("Me'tall", "Metall");
        assert_eq!(s.len(), 1);
        assert_eq!(s.ops[0].edit_type, EditType::Insertion);
        assert_eq!(s.ops[0].recognized, "'");
        assert_eq!(s.apply("Metall"), "Me'tall");
    }

    #[test]
    fn hand_aligned_pair() {
        let s = align_chars("Metali", "Metall");
        assert_eq!(s.len(), 1);
        assert_eq!(s.ops[0].edit_type, EditType::Substitution);
        assert_eq!((s.ops[0].recognized.as_str(), s.ops[0].correct.as_str()), ("i", "l"));
    }

    proptest! {
        #[test]
        fn script_reproduces_noisy(noisy in "[a-cä,.]{0,12}", clean in "[a-cä,.]{0,12}") {
            let s = align_chars(&noisy, &clean);
            prop_assert_eq!(s.apply(&clean), noisy.clone());
            prop_assert_eq!(s.len(), oracle_distance(&noisy, &clean));
        }
    }
}
