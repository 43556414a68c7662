//! BIO-labeled corpora: data model, CoNLL-style I/O, BIO validation and
//! repair, span extraction and stratified segment-level splitting.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid entity type {0:?}: expected uppercase ASCII letters and underscores")]
    InvalidEntityType(String),
    #[error("invalid label {0:?}")]
    InvalidLabel(String),
    #[error("invalid token text {0:?}: must be non-empty without whitespace")]
    InvalidToken(String),
    #[error("segment must contain at least one token")]
    EmptySegment,
    #[error("duplicate document id {0:?}")]
    DuplicateDocument(String),
    #[error("invalid BIO sequence: token {index} is {reason}")]
    InvalidBio { index: usize, reason: ViolationKind },
    #[error("span {start}..{end} out of range for segment of {len} tokens")]
    SpanOutOfRange { start: usize, end: usize, len: usize },
    #[error("spans {first:?} and {second:?} overlap")]
    OverlappingSpans {
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("invalid split ratios: {0}")]
    InvalidRatios(String),
    #[error("cannot split {segments} segments into {parts} parts")]
    TooFewSegments { segments: usize, parts: usize },
}

/// Entity class name. The schema is open; [`EntityType::CANONICAL`] lists the
/// five classes of the vocational-training annotation scheme.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EntityType(String);

impl EntityType {
    pub const CANONICAL: [&'static str; 5] =
        ["JOB_TITLE", "JOB_TITLE_GROUP", "SKILL", "SUBJECT", "ACTIVITY"];

    pub fn new(name: &str) -> Result<Self, CorpusError> {
        if name.is_empty() || !name.bytes().all(|b| b.is_ascii_uppercase() || b == b'_') {
            return Err(CorpusError::InvalidEntityType(name.to_string()));
        }
        Ok(EntityType(name.to_string()))
    }

    pub fn canonical() -> Vec<EntityType> {
        Self::CANONICAL
            .iter()
            .map(|n| EntityType(n.to_string()))
            .collect()
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Position in the canonical list, `None` for extension types.
    pub fn canonical_rank(&self) -> Option<usize> {
        Self::CANONICAL.iter().position(|c| *c == self.0)
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for EntityType {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityType::new(s)
    }
}

impl TryFrom<String> for EntityType {
    type Error = CorpusError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        EntityType::new(&s)
    }
}

impl From<EntityType> for String {
    fn from(t: EntityType) -> String {
        t.0
    }
}

/// Sorts entity types canonical-first, then extension types by name.
pub fn sort_entity_types(types: &mut [EntityType]) {
    types.sort_by(|a, b| {
        let key = |t: &EntityType| (t.canonical_rank().unwrap_or(usize::MAX), t.0.clone());
        key(a).cmp(&key(b))
    });
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Outside,
    Begin(EntityType),
    Inside(EntityType),
}

impl Label {
    pub fn entity_type(&self) -> Option<&EntityType> {
        match self {
            Label::Outside => None,
            Label::Begin(t) | Label::Inside(t) => Some(t),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Label::Outside)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Outside => f.write_str("O"),
            Label::Begin(t) => write!(f, "B-{t}"),
            Label::Inside(t) => write!(f, "I-{t}"),
        }
    }
}

impl FromStr for Label {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "O" {
            return Ok(Label::Outside);
        }
        let invalid = || CorpusError::InvalidLabel(s.to_string());
        let (prefix, name) = s.split_once('-').ok_or_else(invalid)?;
        let ty = EntityType::new(name).map_err(|_| invalid())?;
        match prefix {
            "B" => Ok(Label::Begin(ty)),
            "I" => Ok(Label::Inside(ty)),
            _ => Err(invalid()),
        }
    }
}

impl Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    text: String,
    pub label: Label,
}

impl Token {
    pub fn new(text: impl Into<String>, label: Label) -> Result<Self, CorpusError> {
        let text = text.into();
        if text.is_empty() || text.chars().any(char::is_whitespace) {
            return Err(CorpusError::InvalidToken(text));
        }
        Ok(Token { text, label })
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Replaces the token text, keeping the label.
    pub fn with_text(&self, text: impl Into<String>) -> Result<Self, CorpusError> {
        Token::new(text, self.label.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    tokens: Vec<Token>,
}

impl Segment {
    pub fn new(tokens: Vec<Token>) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptySegment);
        }
        Ok(Segment { tokens })
    }

    /// Builds a segment from `(text, label)` string pairs.
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Result<Self, CorpusError> {
        let tokens = pairs
            .iter()
            .map(|(t, l)| Token::new(*t, l.parse()?))
            .collect::<Result<Vec<_>, _>>()?;
        Segment::new(tokens)
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.tokens.iter().map(|t| t.label.clone()).collect()
    }

    pub fn texts(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.text()).collect()
    }

    pub fn has_entity(&self) -> bool {
        self.tokens.iter().any(|t| !t.label.is_outside())
    }

    /// Same texts, new labels. Panics if the label count differs.
    pub fn relabel(&self, labels: Vec<Label>) -> Segment {
        assert_eq!(labels.len(), self.tokens.len(), "label count mismatch");
        Segment {
            tokens: self
                .tokens
                .iter()
                .zip(labels)
                .map(|(t, label)| Token {
                    text: t.text.clone(),
                    label,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Document {
    pub id: String,
    pub segments: Vec<Segment>,
    pub metadata: BTreeMap<String, String>,
}

impl Document {
    pub fn new(id: impl Into<String>, segments: Vec<Segment>) -> Self {
        Document {
            id: id.into(),
            segments,
            metadata: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.id.as_str()) {
                return Err(CorpusError::DuplicateDocument(d.id.clone()));
            }
        }
        Ok(Corpus { documents })
    }

    /// A corpus holding one document with the given segments.
    pub fn from_segments(id: impl Into<String>, segments: Vec<Segment>) -> Self {
        Corpus {
            documents: vec![Document::new(id, segments)],
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn segments(&self) -> impl Iterator<Item = &Segment> {
        self.documents.iter().flat_map(|d| d.segments.iter())
    }

    pub fn segment_count(&self) -> usize {
        self.documents.iter().map(|d| d.segments.len()).sum()
    }

    pub fn token_count(&self) -> usize {
        self.segments().map(Segment::len).sum()
    }

    pub fn entity_total(&self) -> usize {
        self.segments()
            .map(|s| spans_from_bio(&repair_bio(s)).map_or(0, |v| v.len()))
            .sum()
    }

    /// Applies `f` to every segment, preserving document structure.
    pub fn map_segments<F>(&self, mut f: F) -> Corpus
    where
        F: FnMut(&Document, usize, &Segment) -> Segment,
    {
        Corpus {
            documents: self
                .documents
                .iter()
                .map(|d| Document {
                    id: d.id.clone(),
                    metadata: d.metadata.clone(),
                    segments: d
                        .segments
                        .iter()
                        .enumerate()
                        .map(|(i, s)| f(d, i, s))
                        .collect(),
                })
                .collect(),
        }
    }
}

/// Half-open token range `[start, end)` carrying one entity type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub entity_type: EntityType,
    pub start: usize,
    pub end: usize,
    pub surface: String,
}

impl EntitySpan {
    pub fn new(entity_type: EntityType, start: usize, end: usize) -> Self {
        EntitySpan {
            entity_type,
            start,
            end,
            surface: String::new(),
        }
    }

    pub fn key(&self) -> (&EntityType, usize, usize) {
        (&self.entity_type, self.start, self.end)
    }
}

const DOCSTART: &str = "-DOCSTART-";

/// Parses the tab-separated token/label format. Blank lines end segments and
/// `-DOCSTART- <id>` lines start documents. Tokens before the first marker go
/// into a document with an empty id.
pub fn parse_conll(text: &str) -> Result<Corpus, CorpusError> {
    let mut documents: Vec<Document> = Vec::new();
    let mut current: Vec<Token> = Vec::new();
    let mut prev_blank = false;

    fn flush(documents: &mut Vec<Document>, current: &mut Vec<Token>) {
        if current.is_empty() {
            return;
        }
        if documents.is_empty() {
            documents.push(Document::default());
        }
        let tokens = std::mem::take(current);
        documents
            .last_mut()
            .expect("document exists")
            .segments
            .push(Segment { tokens });
    }

    if text.is_empty() {
        return Ok(Corpus::default());
    }
    let body = text.strip_suffix('\n').unwrap_or(text);
    for (idx, line) in body.split('\n').enumerate() {
        let line_no = idx + 1;
        if line.is_empty() {
            if prev_blank {
                return Err(CorpusError::Parse {
                    line: line_no,
                    reason: "empty segment (consecutive blank lines)".into(),
                });
            }
            flush(&mut documents, &mut current);
            prev_blank = true;
            continue;
        }
        prev_blank = false;
        if let Some(rest) = line.strip_prefix(DOCSTART) {
            if rest.is_empty() || rest.starts_with(' ') {
                flush(&mut documents, &mut current);
                let id = rest.strip_prefix(' ').unwrap_or("").to_string();
                if documents.iter().any(|d| d.id == id) {
                    return Err(CorpusError::Parse {
                        line: line_no,
                        reason: format!("duplicate document id {id:?}"),
                    });
                }
                documents.push(Document::new(id, Vec::new()));
                continue;
            }
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 2 {
            return Err(CorpusError::Parse {
                line: line_no,
                reason: format!("expected 2 tab-separated columns, found {}", cols.len()),
            });
        }
        let label: Label = cols[1].parse().map_err(|_| CorpusError::Parse {
            line: line_no,
            reason: format!("unknown label {:?}", cols[1]),
        })?;
        let token = Token::new(cols[0], label).map_err(|e| CorpusError::Parse {
            line: line_no,
            reason: e.to_string(),
        })?;
        current.push(token);
    }
    flush(&mut documents, &mut current);
    Ok(Corpus { documents })
}

/// Serializes a corpus; the output always ends with a newline unless empty.
pub fn write_conll(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (di, doc) in corpus.documents.iter().enumerate() {
        if di > 0 && !corpus.documents[di - 1].segments.is_empty() {
            out.push('\n');
        }
        if di > 0 || !doc.id.is_empty() || doc.segments.is_empty() {
            out.push_str(DOCSTART);
            if !doc.id.is_empty() {
                out.push(' ');
                out.push_str(&doc.id);
            }
            out.push('\n');
        }
        for (si, seg) in doc.segments.iter().enumerate() {
            if si > 0 {
                out.push('\n');
            }
            for tok in &seg.tokens {
                out.push_str(&tok.text);
                out.push('\t');
                out.push_str(&tok.label.to_string());
                out.push('\n');
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    IWithoutB,
    ITypeMismatch,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ViolationKind::IWithoutB => "I-without-B",
            ViolationKind::ITypeMismatch => "I-type-mismatch",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub reason: ViolationKind,
}

fn label_violations(labels: &[&Label]) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        if let Label::Inside(ty) = label {
            let prev = if i == 0 { None } else { labels[i - 1].entity_type() };
            match prev {
                None => out.push(Violation {
                    index: i,
                    reason: ViolationKind::IWithoutB,
                }),
                Some(p) if p != ty => out.push(Violation {
                    index: i,
                    reason: ViolationKind::ITypeMismatch,
                }),
                Some(_) => {}
            }
        }
    }
    out
}

pub fn validate_bio(segment: &Segment) -> Vec<Violation> {
    let labels: Vec<&Label> = segment.tokens.iter().map(|t| &t.label).collect();
    label_violations(&labels)
}

/// Turns every violating `I-t` into `B-t`. One pass suffices: the rewrite
/// keeps each token's entity type, so later checks see the same predecessor type.
pub fn repair_labels(labels: &mut [Label]) {
    let refs: Vec<&Label> = labels.iter().collect();
    let bad: Vec<usize> = label_violations(&refs).iter().map(|v| v.index).collect();
    for i in bad {
        if let Label::Inside(t) = &labels[i] {
            labels[i] = Label::Begin(t.clone());
        }
    }
}

pub fn repair_bio(segment: &Segment) -> Segment {
    let mut labels = segment.labels();
    repair_labels(&mut labels);
    segment.relabel(labels)
}

pub fn repair_corpus(corpus: &Corpus) -> Corpus {
    corpus.map_segments(|_, _, s| repair_bio(s))
}

/// Extracts maximal B/I runs as spans, sorted by start.
pub fn spans_from_bio(segment: &Segment) -> Result<Vec<EntitySpan>, CorpusError> {
    if let Some(v) = validate_bio(segment).first() {
        return Err(CorpusError::InvalidBio {
            index: v.index,
            reason: v.reason,
        });
    }
    let texts = segment.texts();
    let labels: Vec<&Label> = segment.tokens.iter().map(|t| &t.label).collect();
    Ok(label_spans(&labels)
        .into_iter()
        .map(|(ty, start, end)| EntitySpan {
            entity_type: ty.clone(),
            start,
            end,
            surface: texts[start..end].join(" "),
        })
        .collect())
}

/// Span triples over an already valid label sequence.
pub(crate) fn label_spans<'a>(labels: &[&'a Label]) -> Vec<(&'a EntityType, usize, usize)> {
    let mut spans = Vec::new();
    let mut open: Option<(&EntityType, usize)> = None;
    for (i, label) in labels.iter().enumerate() {
        match label {
            Label::Outside => {
                if let Some((t, s)) = open.take() {
                    spans.push((t, s, i));
                }
            }
            Label::Begin(t) => {
                if let Some((pt, s)) = open.take() {
                    spans.push((pt, s, i));
                }
                open = Some((t, i));
            }
            Label::Inside(_) => {}
        }
    }
    if let Some((t, s)) = open {
        spans.push((t, s, labels.len()));
    }
    spans
}

pub fn bio_from_spans(tokens: &[&str], spans: &[EntitySpan]) -> Result<Segment, CorpusError> {
    let mut sorted: Vec<&EntitySpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    let mut labels = vec![Label::Outside; tokens.len()];
    let mut last: Option<&EntitySpan> = None;
    for span in sorted {
        if span.start >= span.end || span.end > tokens.len() {
            return Err(CorpusError::SpanOutOfRange {
                start: span.start,
                end: span.end,
                len: tokens.len(),
            });
        }
        if let Some(prev) = last {
            if span.start < prev.end {
                return Err(CorpusError::OverlappingSpans {
                    first: (prev.start, prev.end),
                    second: (span.start, span.end),
                });
            }
        }
        labels[span.start] = Label::Begin(span.entity_type.clone());
        for l in &mut labels[span.start + 1..span.end] {
            *l = Label::Inside(span.entity_type.clone());
        }
        last = Some(span);
    }
    let toks = tokens
        .iter()
        .zip(labels)
        .map(|(t, l)| Token::new(*t, l))
        .collect::<Result<Vec<_>, _>>()?;
    Segment::new(toks)
}

/// Span counts per entity type. The canonical five are always present.
pub fn entity_counts(corpus: &Corpus) -> BTreeMap<EntityType, usize> {
    let mut counts: BTreeMap<EntityType, usize> =
        EntityType::canonical().into_iter().map(|t| (t, 0)).collect();
    for seg in corpus.segments() {
        let labels: Vec<&Label> = seg.tokens.iter().map(|t| &t.label).collect();
        for (ty, _, _) in label_spans(&labels) {
            *counts.entry(ty.clone()).or_insert(0) += 1;
        }
    }
    counts
}

pub fn entity_counts_csv(counts: &BTreeMap<EntityType, usize>) -> String {
    let mut types: Vec<EntityType> = counts.keys().cloned().collect();
    sort_entity_types(&mut types);
    let mut out = String::from("entity,count\n");
    for t in &types {
        out.push_str(&format!("{},{}\n", t, counts[t]));
    }
    out.push_str(&format!("TOTAL,{}\n", counts.values().sum::<usize>()));
    out
}

/// Split ratios `(train, test, validation)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
    pub val: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.7,
            test: 0.2,
            val: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, test: f64, val: f64) -> Result<Self, CorpusError> {
        let r = SplitRatios { train, test, val };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        let parts = self.as_array();
        if parts.iter().any(|p| !p.is_finite() || *p <= 0.0) {
            return Err(CorpusError::InvalidRatios("ratios must be positive".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidRatios(format!("ratios sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.test, self.val]
    }
}

impl FromStr for SplitRatios {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let vals = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| CorpusError::InvalidRatios(e.to_string()))?;
        match vals[..] {
            [a, b, c] => SplitRatios::new(a, b, c),
            _ => Err(CorpusError::InvalidRatios(format!(
                "expected three comma-separated values, got {s:?}"
            ))),
        }
    }
}

/// Largest-remainder apportionment of `n` items; ties go to the lower index.
pub fn largest_remainder(n: usize, ratios: &[f64]) -> Vec<usize> {
    let quotas: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Part index (0 = train, 1 = test, 2 = val) for every segment in corpus order.
pub fn stratified_assignment(
    corpus: &Corpus,
    ratios: SplitRatios,
    seed: u64,
) -> Result<Vec<usize>, CorpusError> {
    ratios.validate()?;
    let n = corpus.segment_count();
    if n < 3 {
        return Err(CorpusError::TooFewSegments {
            segments: n,
            parts: 3,
        });
    }
    let sizes = largest_remainder(n, &ratios.as_array());

    let mut types: Vec<EntityType> = Vec::new();
    let mut type_idx: BTreeMap<EntityType, usize> = BTreeMap::new();
    let mut vectors: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n);
    for seg in corpus.segments() {
        let labels: Vec<&Label> = seg.tokens.iter().map(|t| &t.label).collect();
        let mut per: BTreeMap<usize, usize> = BTreeMap::new();
        for (ty, _, _) in label_spans(&labels) {
            let next = types.len();
            let k = *type_idx.entry(ty.clone()).or_insert_with(|| {
                types.push(ty.clone());
                next
            });
            *per.entry(k).or_insert(0) += 1;
        }
        vectors.push(per.into_iter().collect());
    }
    let mut global = vec![0usize; types.len()];
    for v in &vectors {
        for &(k, c) in v {
            global[k] += c;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|&i| std::cmp::Reverse(vectors[i].iter().map(|&(_, c)| c).sum::<usize>()));

    let mut assigned = vec![usize::MAX; n];
    let mut filled = [0usize; 3];
    let mut counts = vec![vec![0usize; types.len()]; 3];
    for &seg in &order {
        let mut best: Option<(usize, f64, f64)> = None;
        for p in 0..3 {
            if filled[p] >= sizes[p] {
                continue;
            }
            let share = sizes[p] as f64 / n as f64;
            let deficit: f64 = vectors[seg]
                .iter()
                .map(|&(k, c)| c as f64 * (share * global[k] as f64 - counts[p][k] as f64) / global[k] as f64)
                .sum();
            let room = (sizes[p] - filled[p]) as f64 / sizes[p] as f64;
            let better = match best {
                None => true,
                Some((_, bd, br)) => deficit > bd + 1e-12 || ((deficit - bd).abs() <= 1e-12 && room > br + 1e-12),
            };
            if better {
                best = Some((p, deficit, room));
            }
        }
        let (p, _, _) = best.expect("total capacity equals segment count");
        assigned[seg] = p;
        filled[p] += 1;
        for &(k, c) in &vectors[seg] {
            counts[p][k] += c;
        }
    }
    Ok(assigned)
}

/// Builds the three parts from a per-segment assignment, keeping document
/// ids and in-document order. Documents with no segments in a part are dropped.
pub fn apply_assignment(corpus: &Corpus, assignment: &[usize]) -> [Corpus; 3] {
    let mut parts: [Vec<Document>; 3] = Default::default();
    let mut idx = 0;
    for doc in &corpus.documents {
        let mut per: [Vec<Segment>; 3] = Default::default();
        for seg in &doc.segments {
            per[assignment[idx]].push(seg.clone());
            idx += 1;
        }
        for (p, segs) in per.into_iter().enumerate() {
            if !segs.is_empty() {
                parts[p].push(Document {
                    id: doc.id.clone(),
                    segments: segs,
                    metadata: doc.metadata.clone(),
                });
            }
        }
    }
    parts.map(|documents| Corpus { documents })
}

/// Stratified segment-level split into `(train, test, val)`.
pub fn stratified_split(
    corpus: &Corpus,
    ratios: SplitRatios,
    seed: u64,
) -> Result<(Corpus, Corpus, Corpus), CorpusError> {
    let assignment = stratified_assignment(corpus, ratios, seed)?;
    let [train, test, val] = apply_assignment(corpus, &assignment);
    Ok((train, test, val))
}
