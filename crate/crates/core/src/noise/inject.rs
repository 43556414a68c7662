//! Single-edit noise injection driven by an error table.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{EditOp, EditType, ErrorEntry, ErrorTable, NoiseError};
use crate::corpus::{Corpus, Document, Segment};

const LOWER: &str = "abcdefghijklmnopqrstuvwxyzäöüß";
const UPPER: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZÄÖÜ";
const DIGITS: &str = "0123456789";
const PUNCT: &str = ".,;:-'/()";

/// A word qualifies for injection if it has at least two characters and at
/// least one alphanumeric one.
pub fn is_perturbable(word: &str) -> bool {
    word.chars().count() >= 2 && word.chars().any(char::is_alphanumeric)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditSource {
    Table,
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perturbation {
    pub text: String,
    pub op: EditOp,
    pub source: EditSource,
}

/// A fully specified random edit, used when no table entry is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FallbackEdit {
    Substitute { position: usize, with: char },
    Delete { position: usize },
    Insert { position: usize, ch: char },
}

fn script_class(c: char) -> &'static str {
    if c.is_ascii_digit() || c.is_numeric() {
        DIGITS
    } else if c.is_uppercase() {
        UPPER
    } else if c.is_alphabetic() {
        LOWER
    } else {
        PUNCT
    }
}

fn pick_from(class: &str, exclude: Option<char>, rng: &mut impl Rng) -> char {
    let pool: Vec<char> = class.chars().filter(|&c| Some(c) != exclude).collect();
    pool[rng.random_range(0..pool.len())]
}

/// Applies a fallback edit. Panics if the position is out of range.
pub fn apply_fallback(word: &str, edit: FallbackEdit) -> Perturbation {
    let mut chars: Vec<char> = word.chars().collect();
    let op = match edit {
        FallbackEdit::Substitute { position, with } => {
            let old = std::mem::replace(&mut chars[position], with);
            EditOp {
                position,
                edit_type: EditType::Substitution,
                recognized: with.to_string(),
                correct: old.to_string(),
            }
        }
        FallbackEdit::Delete { position } => {
            let old = chars.remove(position);
            EditOp {
                position,
                edit_type: EditType::Deletion,
                recognized: String::new(),
                correct: old.to_string(),
            }
        }
        FallbackEdit::Insert { position, ch } => {
            chars.insert(position, ch);
            EditOp {
                position,
                edit_type: EditType::Insertion,
                recognized: ch.to_string(),
                correct: String::new(),
            }
        }
    };
    Perturbation {
        text: chars.into_iter().collect(),
        op,
        source: EditSource::Fallback,
    }
}

/// Draws a uniform fallback edit: type, position, then a character from the
/// script class of the affected (or neighbouring) character.
pub fn random_fallback(word: &str, rng: &mut impl Rng) -> FallbackEdit {
    let chars: Vec<char> = word.chars().collect();
    match rng.random_range(0..3) {
        0 => {
            let position = rng.random_range(0..chars.len());
            let c = chars[position];
            FallbackEdit::Substitute {
                position,
                with: pick_from(script_class(c), Some(c), rng),
            }
        }
        1 => FallbackEdit::Delete {
            position: rng.random_range(0..chars.len()),
        },
        _ => {
            let position = rng.random_range(0..=chars.len());
            let neighbour = chars[position.min(chars.len() - 1)];
            FallbackEdit::Insert {
                position,
                ch: pick_from(script_class(neighbour), None, rng),
            }
        }
    }
}

fn occurrences(chars: &[char], needle: &[char]) -> Vec<usize> {
    if needle.is_empty() || needle.len() > chars.len() {
        return Vec::new();
    }
    (0..=chars.len() - needle.len())
        .filter(|&i| chars[i..i + needle.len()] == *needle)
        .collect()
}

/// Positions where `entry` can be applied to `chars` without emptying the word.
fn entry_positions(chars: &[char], entry: &ErrorEntry) -> Vec<usize> {
    if entry.recognized.chars().any(char::is_whitespace) {
        return Vec::new();
    }
    match entry.edit_type {
        EditType::Insertion => (0..=chars.len()).collect(),
        EditType::Substitution => {
            let needle: Vec<char> = entry.correct.chars().collect();
            occurrences(chars, &needle)
        }
        EditType::Deletion => {
            let needle: Vec<char> = entry.correct.chars().collect();
            if needle.len() >= chars.len() {
                return Vec::new();
            }
            occurrences(chars, &needle)
        }
    }
}

pub fn apply_entry(word: &str, entry: &ErrorEntry, position: usize) -> Perturbation {
    let chars: Vec<char> = word.chars().collect();
    let consumed = entry.correct.chars().count();
    let mut text: String = chars[..position].iter().collect();
    text.push_str(&entry.recognized);
    text.extend(&chars[position + consumed..]);
    Perturbation {
        text,
        op: EditOp {
            position,
            edit_type: entry.edit_type,
            recognized: entry.recognized.clone(),
            correct: entry.correct.clone(),
        },
        source: EditSource::Table,
    }
}

/// Injects exactly one edit into `word`. With probability `table_bias` the
/// edit is drawn frequency-proportionally from the applicable table entries;
/// otherwise, or when nothing applies, a uniform fallback edit is used.
pub fn perturb_word(
    word: &str,
    table: &ErrorTable,
    rng: &mut impl Rng,
    table_bias: f64,
) -> Result<Perturbation, NoiseError> {
    check_bias(table_bias)?;
    if !is_perturbable(word) {
        return Err(NoiseError::NotPerturbable(word.to_string()));
    }
    let use_table = rng.random::<f64>() < table_bias;
    if use_table {
        let chars: Vec<char> = word.chars().collect();
        let candidates: Vec<(&ErrorEntry, Vec<usize>)> = table
            .entries()
            .iter()
            .map(|e| (e, entry_positions(&chars, e)))
            .filter(|(_, p)| !p.is_empty())
            .collect();
        if !candidates.is_empty() {
            let weights = WeightedIndex::new(candidates.iter().map(|(e, _)| e.frequency))
                .expect("frequencies are positive");
            let (entry, positions) = &candidates[weights.sample(rng)];
            let position = positions[rng.random_range(0..positions.len())];
            return Ok(apply_entry(word, entry, position));
        }
    }
    let edit = random_fallback(word, rng);
    Ok(apply_fallback(word, edit))
}

fn check_bias(table_bias: f64) -> Result<(), NoiseError> {
    if !(0.0..=1.0).contains(&table_bias) {
        return Err(NoiseError::InvalidLambda(table_bias));
    }
    Ok(())
}

/// Independent random stream per segment, derived from the seed, the
/// document id and the segment's index within its document.
pub fn segment_rng(seed: u64, document_id: &str, segment_index: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((document_id.len() as u64).to_le_bytes());
    h.update(document_id.as_bytes());
    h.update((segment_index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InjectionStats {
    pub tokens: usize,
    pub table_edits: usize,
    pub fallback_edits: usize,
}

pub fn inject_noise_with_stats(
    corpus: &Corpus,
    table: &ErrorTable,
    seed: u64,
    table_bias: f64,
) -> Result<(Corpus, InjectionStats), NoiseError> {
    check_bias(table_bias)?;
    let mut stats = InjectionStats::default();
    let out = corpus.map_segments(|doc, idx, seg| {
        let mut rng = segment_rng(seed, &doc.id, idx);
        let tokens = seg
            .tokens()
            .iter()
            .map(|tok| {
                stats.tokens += 1;
                if !is_perturbable(tok.text()) {
                    return tok.clone();
                }
                let p = perturb_word(tok.text(), table, &mut rng, table_bias)
                    .expect("word checked perturbable");
                match p.source {
                    EditSource::Table => stats.table_edits += 1,
                    EditSource::Fallback => stats.fallback_edits += 1,
                }
                tok.with_text(p.text).expect("edits never introduce whitespace")
            })
            .collect();
        Segment::new(tokens).expect("token count unchanged")
    });
    Ok((out, stats))
}

/// Replaces every perturbable token with a one-edit variant. Labels and
/// structure are untouched.
pub fn inject_noise(
    corpus: &Corpus,
    table: &ErrorTable,
    seed: u64,
    table_bias: f64,
) -> Result<Corpus, NoiseError> {
    inject_noise_with_stats(corpus, table, seed, table_bias).map(|(c, _)| c)
}

/// Clean data followed by a noised copy, per document.
pub fn make_artificial(
    clean: &Corpus,
    table: &ErrorTable,
    seed: u64,
    table_bias: f64,
) -> Result<Corpus, NoiseError> {
    let noised = inject_noise(clean, table, seed, table_bias)?;
    let docs = clean
        .documents()
        .iter()
        .zip(noised.into_documents())
        .map(|(c, n)| Document {
            id: c.id.clone(),
            metadata: c.metadata.clone(),
            segments: c.segments.iter().cloned().chain(n.segments).collect(),
        })
        .collect();
    Ok(Corpus::new(docs).expect("document ids unchanged"))
}
