use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NoiseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EditType {
    Substitution,
    Deletion,
    Insertion,
}

impl fmt::Display for EditType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EditType::Substitution => "substitution",
            EditType::Deletion => "deletion",
            EditType::Insertion => "insertion",
        })
    }
}

impl FromStr for EditType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "substitution" => Ok(EditType::Substitution),
            "deletion" => Ok(EditType::Deletion),
            "insertion" => Ok(EditType::Insertion),
            other => Err(format!("unknown edit type {other:?}")),
        }
    }
}

/// One observed OCR error. `recognized` is what the OCR produced, `correct`
/// the ground truth; a deletion has an empty `recognized` side.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub recognized: String,
    pub correct: String,
    pub edit_type: EditType,
    pub frequency: u64,
}

impl ErrorEntry {
    pub fn new(
        recognized: impl Into<String>,
        correct: impl Into<String>,
        edit_type: EditType,
        frequency: u64,
    ) -> Result<Self, String> {
        let e = ErrorEntry {
            recognized: recognized.into(),
            correct: correct.into(),
            edit_type,
            frequency,
        };
        e.check()?;
        Ok(e)
    }

    fn check(&self) -> Result<(), String> {
        if self.frequency == 0 {
            return Err("frequency must be at least 1".into());
        }
        let (r, c) = (self.recognized.is_empty(), self.correct.is_empty());
        match self.edit_type {
            EditType::Substitution if r || c => Err("substitution needs both sides".into()),
            EditType::Substitution if self.recognized == self.correct => {
                Err("substitution sides must differ".into())
            }
            EditType::Deletion if !r || c => {
                Err("deletion needs an empty recognized side and a non-empty correct side".into())
            }
            EditType::Insertion if r || !c => {
                Err("insertion needs a non-empty recognized side and an empty correct side".into())
            }
            _ => Ok(()),
        }
    }

    pub fn key(&self) -> (&str, &str, EditType) {
        (&self.recognized, &self.correct, self.edit_type)
    }

    /// True when the entry is a one-character edit.
    pub fn is_single_char(&self) -> bool {
        self.recognized.chars().count() <= 1 && self.correct.chars().count() <= 1
    }
}

/// Frequency-weighted error inventory with unique `(recognized, correct, type)` keys.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorTable {
    entries: Vec<ErrorEntry>,
}

const HEADER: [&str; 4] = ["recognized", "correct", "type", "frequency"];

impl ErrorTable {
    /// Builds a table, merging duplicate keys by summing frequencies. The
    /// first occurrence fixes the entry's position.
    pub fn from_entries(entries: impl IntoIterator<Item = ErrorEntry>) -> Self {
        let mut out: Vec<ErrorEntry> = Vec::new();
        let mut index: HashMap<(String, String, EditType), usize> = HashMap::new();
        for e in entries {
            let key = (e.recognized.clone(), e.correct.clone(), e.edit_type);
            match index.get(&key) {
                Some(&i) => out[i].frequency += e.frequency,
                None => {
                    index.insert(key, out.len());
                    out.push(e);
                }
            }
        }
        ErrorTable { entries: out }
    }

    pub fn entries(&self) -> &[ErrorEntry] {
        &self.entries
    }

    pub fn total(&self) -> u64 {
        self.entries.iter().map(|e| e.frequency).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn find(&self, recognized: &str, correct: &str, edit_type: EditType) -> Option<&ErrorEntry> {
        self.entries
            .iter()
            .find(|e| e.key() == (recognized, correct, edit_type))
    }

    /// Descending frequency; ties ordered by type, then recognized, then correct.
    pub fn sort_by_frequency(&mut self) {
        self.entries.sort_by(|a, b| {
            b.frequency
                .cmp(&a.frequency)
                .then(a.edit_type.cmp(&b.edit_type))
                .then(a.recognized.cmp(&b.recognized))
                .then(a.correct.cmp(&b.correct))
        });
    }

    /// The bundled table covering the dominant OCR error classes: dropped
    /// punctuation, `l`/`i` and `0`/`o` confusions, stray commas and
    /// apostrophes, and period/comma swaps. Frequencies are illustrative.
    pub fn bundled() -> Self {
        load_error_table(include_str!("../../fixtures/ocr_errors.csv"))
            .expect("bundled error table is valid")
    }
}

pub fn load_error_table(text: &str) -> Result<ErrorTable, NoiseError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(b';')
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let malformed = |row: usize, reason: String| NoiseError::MalformedRow { row, reason };
    match records.next() {
        None => return Err(malformed(1, "missing header".into())),
        Some(Err(e)) => return Err(malformed(1, e.to_string())),
        Some(Ok(h)) => {
            let got: Vec<&str> = h.iter().map(str::trim).collect();
            if got != HEADER {
                return Err(malformed(
                    1,
                    format!("expected header {:?}, found {:?}", HEADER.join(";"), got.join(";")),
                ));
            }
        }
    }
    let mut entries = Vec::new();
    for (i, rec) in records.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| malformed(row, e.to_string()))?;
        if rec.len() == 1 && rec.get(0).is_some_and(str::is_empty) {
            continue;
        }
        if rec.len() != 4 {
            return Err(malformed(row, format!("expected 4 fields, found {}", rec.len())));
        }
        let edit_type: EditType = rec[2]
            .trim()
            .parse()
            .map_err(|_| NoiseError::UnknownType {
                row,
                value: rec[2].to_string(),
            })?;
        let freq: i64 = rec[3]
            .trim()
            .parse()
            .map_err(|_| malformed(row, format!("frequency {:?} is not an integer", &rec[3])))?;
        if freq < 0 {
            return Err(NoiseError::NegativeFrequency { row, value: freq });
        }
        let entry = ErrorEntry::new(&rec[0], &rec[1], edit_type, freq as u64)
            .map_err(|r| malformed(row, r))?;
        entries.push(entry);
    }
    Ok(ErrorTable::from_entries(entries))
}

pub fn save_error_table(table: &ErrorTable) -> String {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(b';')
        .from_writer(Vec::new());
    writer.write_record(HEADER).expect("in-memory write");
    for e in &table.entries {
        writer
            .write_record([
                e.recognized.as_str(),
                e.correct.as_str(),
                &e.edit_type.to_string(),
                &e.frequency.to_string(),
            ])
            .expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

#[cfg(test)]
mod tests {
    use super::*;

    const H: &str = "recognized;correct;type;frequency\n";

    #[test]
    fn loads_substitution_row() {
        let t = load_error_table(&format!("{H}i;l;substitution;12\n")).unwrap();
        assert_eq!(
            t.entries(),
            &[ErrorEntry::new("i", "l", EditType::Substitution, 12).unwrap()]
        );
    }

    #[test]
    fn header_only_is_empty() {
        let t = load_error_table(H).unwrap();
        assert!(t.is_empty());
        assert_eq!(t.total(), 0);
    }

    #[test]
    fn duplicates_merge() {
        let t = load_error_table(&format!("{H}i;l;substitution;3\ni;l;substitution;4\n")).unwrap();
        assert_eq!(t.entries().len(), 1);
        assert_eq!(t.entries()[0].frequency, 7);
    }

    #[test]
    fn quoted_semicolon_round_trips() {
        let t = ErrorTable::from_entries([
            ErrorEntry::new("", ";", EditType::Deletion, 2).unwrap(),
            ErrorEntry::new(",", ".", EditType::Substitution, 5).unwrap(),
        ]);
        let text = save_error_table(&t);
        assert!(text.contains("\"\";\";\";deletion;2") || text.contains(";\";\";deletion;2"));
        assert_eq!(load_error_table(&text).unwrap(), t);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(
            load_error_table(&format!("{H}i;l;swap;1\n")),
            Err(NoiseError::UnknownType { row: 2, .. })
        ));
        assert!(matches!(
            load_error_table(&format!("{H}i;l;substitution;-3\n")),
            Err(NoiseError::NegativeFrequency { row: 2, value: -3 })
        ));
        assert!(matches!(
            load_error_table(&format!("{H}i;l;substitution\n")),
            Err(NoiseError::MalformedRow { row: 2, .. })
        ));
        assert!(matches!(
            load_error_table(&format!("{H}i;;deletion;1\n")),
            Err(NoiseError::MalformedRow { row: 2, .. })
        ));
        assert!(load_error_table("a;b;c;d\n").is_err());
    }

    #[test]
    fn bundled_table_is_valid() {
        let t = ErrorTable::bundled();
        assert!(t.total() > 0);
        assert!(t.find("", ",", EditType::Deletion).is_some());
        assert!(t.find("i", "l", EditType::Substitution).is_some());
        assert!(t.find("o", "0", EditType::Substitution).is_some());
        assert!(t.find("'", "", EditType::Insertion).is_some());
        assert!(t.find(",", ".", EditType::Substitution).is_some());
    }
}
