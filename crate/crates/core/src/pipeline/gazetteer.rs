use std::collections::BTreeSet;
use std::path::PathBuf;

use crate::corpus::{Corpus, Document, EntityType, Label, Segment, Token};
use crate::io::read_text;

use super::PipelineError;

/// Known surface forms of one entity type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    pub entity_type: EntityType,
    phrases: Vec<String>,
}

impl Gazetteer {
    /// Keeps the first occurrence of every phrase (case-sensitive) and
    /// collapses inner whitespace runs. Blank phrases are dropped.
    pub fn new(entity_type: EntityType, phrases: impl IntoIterator<Item = String>) -> Result<Self, PipelineError> {
        let mut seen = BTreeSet::new();
        let mut kept = Vec::new();
        for p in phrases {
            let norm = p.split_whitespace().collect::<Vec<_>>().join(" ");
            if !norm.is_empty() && seen.insert(norm.clone()) {
                kept.push(norm);
            }
        }
        if kept.is_empty() {
            return Err(PipelineError::Gazetteer(format!("no phrases for {entity_type}")));
        }
        Ok(Gazetteer {
            entity_type,
            phrases: kept,
        })
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    /// One segment per phrase: `B-TYPE` then `I-TYPE` for the remaining words.
    pub fn segments(&self) -> Vec<Segment> {
        self.phrases
            .iter()
            .map(|p| {
                let tokens = p
                    .split_whitespace()
                    .enumerate()
                    .map(|(i, w)| {
                        let label = if i == 0 {
                            Label::Begin(self.entity_type.clone())
                        } else {
                            Label::Inside(self.entity_type.clone())
                        };
                        Token::new(w, label).expect("whitespace-free word")
                    })
                    .collect();
                Segment::new(tokens).expect("phrase is non-empty")
            })
            .collect()
    }
}

/// Parses a one-phrase-per-line file. Returns the gazetteer and the number
/// of blank lines skipped.
pub fn parse_gazetteer(entity_type: EntityType, text: &str) -> Result<(Gazetteer, usize), PipelineError> {
    let mut skipped = 0;
    let mut phrases = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            skipped += 1;
        } else {
            phrases.push(line.to_string());
        }
    }
    Ok((Gazetteer::new(entity_type, phrases)?, skipped))
}

/// Pretraining corpus built from gazetteers: one document per type, named
/// after it. Contains no `O` labels by construction.
pub fn gazetteer_corpus(gazetteers: &[Gazetteer]) -> Result<Corpus, PipelineError> {
    let docs = gazetteers
        .iter()
        .map(|g| Document::new(g.entity_type.as_str(), g.segments()))
        .collect();
    Corpus::new(docs).map_err(|e| PipelineError::Gazetteer(e.to_string()))
}

#[derive(Debug, Clone)]
pub struct LoadedGazetteers {
    pub gazetteers: Vec<Gazetteer>,
    pub corpus: Corpus,
    pub skipped_lines: usize,
}

/// Reads `(type name, path)` pairs. Type names must be valid entity types.
pub fn load_gazetteers(files: &[(String, PathBuf)]) -> Result<LoadedGazetteers, PipelineError> {
    let mut gazetteers = Vec::new();
    let mut skipped_lines = 0;
    for (name, path) in files {
        let ty = EntityType::new(name).map_err(|_| PipelineError::UnknownEntityType(name.clone()))?;
        let text = read_text(path).map_err(PipelineError::Io)?;
        let (g, skipped) = parse_gazetteer(ty, &text)?;
        skipped_lines += skipped;
        gazetteers.push(g);
    }
    if skipped_lines > 0 {
        log::warn!("skipped {skipped_lines} blank gazetteer lines");
    }
    let corpus = gazetteer_corpus(&gazetteers)?;
    Ok(LoadedGazetteers {
        gazetteers,
        corpus,
        skipped_lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ty(s: &str) -> EntityType {
        EntityType::new(s).unwrap()
    }

    #[test]
    fn phrases_become_bio_segments() {
        let g = Gazetteer::new(
            ty("JOB_TITLE"),
            ["Pharmazeutisch-technischer Assistent".to_string()],
        )
        .unwrap();
        let seg = &g.segments()[0];
        assert_eq!(seg.labels(), vec![Label::Begin(ty("JOB_TITLE")), Label::Inside(ty("JOB_TITLE"))]);
        let g = Gazetteer::new(ty("SKILL"), ["Aufmerksamkeit".to_string()]).unwrap();
        assert_eq!(g.segments()[0].labels(), vec![Label::Begin(ty("SKILL"))]);
    }

    #[test]
    fn blank_lines_and_duplicates() {
        let (g, skipped) = parse_gazetteer(ty("SKILL"), "Teamfähigkeit\n\n  \nteamfähigkeit\nTeamfähigkeit\n").unwrap();
        assert_eq!(skipped, 2);
        assert_eq!(g.phrases(), ["Teamfähigkeit", "teamfähigkeit"]);
        assert!(parse_gazetteer(ty("SKILL"), "\n\n").is_err());
    }

    #[test]
    fn corpus_is_o_free() {
        let a = Gazetteer::new(ty("SKILL"), ["a b c".to_string(), "d".to_string()]).unwrap();
        let b = Gazetteer::new(ty("SUBJECT"), ["Mathe".to_string()]).unwrap();
        let c = gazetteer_corpus(&[a, b]).unwrap();
        assert_eq!(c.segment_count(), 3);
        assert!(c.segments().flat_map(|s| s.tokens()).all(|t| !t.label.is_outside()));
    }
}
