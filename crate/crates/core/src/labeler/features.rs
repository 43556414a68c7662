use std::fmt;
use std::str::FromStr;

use crate::corpus::Segment;

use super::LabelerError;

/// Hand-engineered feature template. Every template is a pure function of
/// the segment's token texts and a position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureTemplate {
    Bias,
    Lower,
    Shape,
    Prefix(u8),
    Suffix(u8),
    CharTrigrams,
    PrevLower,
    NextLower,
    Boundary,
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureTemplate::Bias => f.write_str("bias"),
            FeatureTemplate::Lower => f.write_str("lower"),
            FeatureTemplate::Shape => f.write_str("shape"),
            FeatureTemplate::Prefix(n) => write!(f, "prefix{n}"),
            FeatureTemplate::Suffix(n) => write!(f, "suffix{n}"),
            FeatureTemplate::CharTrigrams => f.write_str("trigrams"),
            FeatureTemplate::PrevLower => f.write_str("prev_lower"),
            FeatureTemplate::NextLower => f.write_str("next_lower"),
            FeatureTemplate::Boundary => f.write_str("boundary"),
        }
    }
}

impl FromStr for FeatureTemplate {
    type Err = LabelerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let affix = |rest: &str| -> Option<u8> {
            rest.parse::<u8>().ok().filter(|n| (1..=4).contains(n))
        };
        Ok(match s {
            "bias" => FeatureTemplate::Bias,
            "lower" => FeatureTemplate::Lower,
            "shape" => FeatureTemplate::Shape,
            "trigrams" => FeatureTemplate::CharTrigrams,
            "prev_lower" => FeatureTemplate::PrevLower,
            "next_lower" => FeatureTemplate::NextLower,
            "boundary" => FeatureTemplate::Boundary,
            _ => {
                if let Some(n) = s.strip_prefix("prefix").and_then(affix) {
                    FeatureTemplate::Prefix(n)
                } else if let Some(n) = s.strip_prefix("suffix").and_then(affix) {
                    FeatureTemplate::Suffix(n)
                } else {
                    return Err(LabelerError::UnknownTemplate(s.to_string()));
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTemplateSet(pub Vec<FeatureTemplate>);

impl Default for FeatureTemplateSet {
    fn default() -> Self {
        use FeatureTemplate::*;
        FeatureTemplateSet(vec![
            Bias,
            Lower,
            Shape,
            Prefix(1),
            Prefix(2),
            Prefix(3),
            Prefix(4),
            Suffix(1),
            Suffix(2),
            Suffix(3),
            Suffix(4),
            CharTrigrams,
            PrevLower,
            NextLower,
            Boundary,
        ])
    }
}

impl fmt::Display for FeatureTemplateSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for FeatureTemplateSet {
    type Err = LabelerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().is_empty() {
            return Ok(FeatureTemplateSet(Vec::new()));
        }
        s.split(',')
            .map(|t| t.trim().parse())
            .collect::<Result<Vec<_>, _>>()
            .map(FeatureTemplateSet)
    }
}

/// `X` upper, `x` lower, `d` digit; other characters kept verbatim.
pub fn word_shape(word: &str) -> String {
    word.chars()
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_numeric() {
                'd'
            } else {
                c
            }
        })
        .collect()
}

fn token_features(out: &mut Vec<String>, templates: &FeatureTemplateSet, texts: &[&str], pos: usize) {
    let word = texts[pos];
    let lower = word.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    for t in &templates.0 {
        match *t {
            FeatureTemplate::Bias => out.push("bias".into()),
            FeatureTemplate::Lower => out.push(format!("lower={lower}")),
            FeatureTemplate::Shape => out.push(format!("shape={}", word_shape(word))),
            FeatureTemplate::Prefix(n) => {
                let n = n as usize;
                if chars.len() >= n {
                    out.push(format!("p{n}={}", chars[..n].iter().collect::<String>()));
                }
            }
            FeatureTemplate::Suffix(n) => {
                let n = n as usize;
                if chars.len() >= n {
                    out.push(format!(
                        "s{n}={}",
                        chars[chars.len() - n..].iter().collect::<String>()
                    ));
                }
            }
            FeatureTemplate::CharTrigrams => {
                let padded: Vec<char> = std::iter::once('^')
                    .chain(chars.iter().copied())
                    .chain(std::iter::once('$'))
                    .collect();
                for w in padded.windows(3) {
                    out.push(format!("tri={}", w.iter().collect::<String>()));
                }
            }
            FeatureTemplate::PrevLower => {
                if pos > 0 {
                    out.push(format!("prev={}", texts[pos - 1].to_lowercase()));
                }
            }
            FeatureTemplate::NextLower => {
                if pos + 1 < texts.len() {
                    out.push(format!("next={}", texts[pos + 1].to_lowercase()));
                }
            }
            FeatureTemplate::Boundary => {
                if pos == 0 {
                    out.push("BOS".into());
                }
                if pos + 1 == texts.len() {
                    out.push("EOS".into());
                }
            }
        }
    }
}

/// Sorted, deduplicated feature strings for one position.
pub fn extract_features(
    segment: &Segment,
    position: usize,
    templates: &FeatureTemplateSet,
) -> Result<Vec<String>, LabelerError> {
    if position >= segment.len() {
        return Err(LabelerError::PositionOutOfRange {
            position,
            len: segment.len(),
        });
    }
    let texts = segment.texts();
    let mut out = Vec::new();
    token_features(&mut out, templates, &texts, position);
    out.sort();
    out.dedup();
    Ok(out)
}

/// Features for every position of a segment.
pub fn extract_all(segment: &Segment, templates: &FeatureTemplateSet) -> Vec<Vec<String>> {
    (0..segment.len())
        .map(|p| extract_features(segment, p, templates).expect("position in range"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg() -> Segment {
        Segment::from_pairs(&[("Werkstoffe", "O"), ("prüfen", "O"), ("2024", "O")]).unwrap()
    }

    #[test]
    fn lower_and_shape() {
        let f = extract_features(&seg(), 0, &FeatureTemplateSet::default()).unwrap();
        assert!(f.contains(&"lower=werkstoffe".to_string()));
        assert!(f.contains(&"shape=Xxxxxxxxxx".to_string()));
        assert!(f.contains(&"BOS".to_string()));
        assert!(!f.contains(&"EOS".to_string()));
        assert!(f.contains(&"next=prüfen".to_string()));
        assert!(f.contains(&"p4=werk".to_string()));
        assert!(f.contains(&"s2=fe".to_string()));
        assert!(f.contains(&"tri=^we".to_string()));
    }

    #[test]
    fn last_token_and_digits() {
        let f = extract_features(&seg(), 2, &FeatureTemplateSet::default()).unwrap();
        assert!(f.contains(&"EOS".to_string()));
        assert!(f.contains(&"shape=dddd".to_string()));
        assert!(f.contains(&"prev=prüfen".to_string()));
    }

    #[test]
    fn deterministic_and_range_checked() {
        let t = FeatureTemplateSet::default();
        assert_eq!(
            extract_features(&seg(), 1, &t).unwrap(),
            extract_features(&seg(), 1, &t).unwrap()
        );
        assert!(matches!(
            extract_features(&seg(), 3, &t),
            Err(LabelerError::PositionOutOfRange { position: 3, len: 3 })
        ));
    }

    #[test]
    fn template_names_round_trip() {
        let t = FeatureTemplateSet::default();
        assert_eq!(t.to_string().parse::<FeatureTemplateSet>().unwrap(), t);
        assert!("prefix5".parse::<FeatureTemplate>().is_err());
        assert!("nope".parse::<FeatureTemplate>().is_err());
    }
}
