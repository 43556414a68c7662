//! Templated job-advertisement sentences for desk-scale experiments.

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document, EntityType, Label, Segment, Token};

use super::gazetteer::Gazetteer;

const JOB_TITLE: &[&str] = &[
    "Pharmazeutisch-technischer Assistent",
    "Kauffrau für Büromanagement",
    "Industriemechaniker",
    "Elektroniker für Betriebstechnik",
    "Fachinformatiker für Systemintegration",
    "Mechatroniker",
    "Tischler",
    "Bäckereifachverkäuferin",
    "Medizinische Fachangestellte",
    "Kfz-Mechatroniker",
    "Zahnmedizinischer Fachangestellter",
    "Koch",
    "Hotelfachfrau",
    "Anlagenmechaniker",
    "Maler und Lackierer",
    "Verkäufer",
    "Erzieherin",
    "Steuerfachangestellte",
    "Fachkraft für Lagerlogistik",
    "Friseurin",
    "Gärtner",
    "Chemielaborant",
    "Bankkaufmann",
    "Zerspanungsmechaniker",
    "Kaufmann im Einzelhandel",
];

const JOB_TITLE_GROUP: &[&str] = &[
    "kaufmännische Berufe",
    "Metallberufe",
    "Elektroberufe",
    "Gesundheitsberufe",
    "Pflegeberufe",
    "IT-Berufe",
    "Bauberufe",
    "Gastronomieberufe",
    "Verkaufsberufe",
    "Handwerksberufe",
    "Laborberufe",
    "Logistikberufe",
    "Verwaltungsberufe",
    "Lebensmittelberufe",
    "Medienberufe",
];

const SKILL: &[&str] = &[
    "Aufmerksamkeit",
    "Teamfähigkeit",
    "Zuverlässigkeit",
    "Sorgfalt",
    "Belastbarkeit",
    "Kommunikationsfähigkeit",
    "handwerkliches Geschick",
    "technisches Verständnis",
    "Freundlichkeit",
    "Lernbereitschaft",
    "Pünktlichkeit",
    "Kundenorientierung",
    "selbstständige Arbeitsweise",
    "Flexibilität",
    "Organisationstalent",
    "logisches Denken",
    "räumliches Vorstellungsvermögen",
    "Durchhaltevermögen",
    "Verantwortungsbewusstsein",
    "Einfühlungsvermögen",
];

const SUBJECT: &[&str] = &[
    "Mathematik",
    "Deutsch",
    "Englisch",
    "Physik",
    "Chemie",
    "Biologie",
    "Informatik",
    "Wirtschaft",
    "Technik",
    "Kunst",
    "Werken",
    "Sozialkunde",
    "Geschichte",
    "Erdkunde",
    "Sport",
];

const ACTIVITY: &[&str] = &[
    "Kunden beraten",
    "Waren annehmen",
    "Maschinen warten",
    "Anlagen montieren",
    "Rezepte prüfen",
    "Daten erfassen",
    "Rechnungen schreiben",
    "Termine planen",
    "Patienten betreuen",
    "Speisen zubereiten",
    "Fehler analysieren",
    "Bauteile prüfen",
    "Lager verwalten",
    "Software installieren",
    "Proben untersuchen",
    "Angebote erstellen",
    "Kassen abrechnen",
    "Werkstücke fräsen",
];

/// Slots are written `{TYPE}`; every other word is an `O` token.
const TEMPLATES: &[&str] = &[
    "Wir suchen ab sofort eine engagierte {JOB_TITLE} ( m/w/d ) .",
    "Als {JOB_TITLE} im Bereich {JOB_TITLE_GROUP} bringen Sie {SKILL} mit .",
    "Ihre Aufgaben : {ACTIVITY} und {ACTIVITY} .",
    "Sie haben gute Noten in {SUBJECT} und zeigen {SKILL} .",
    "Zu Ihren Tätigkeiten gehört {ACTIVITY} im Team .",
    "Wir erwarten {SKILL} , {SKILL} sowie Interesse an {SUBJECT} .",
    "Ausbildung zum {JOB_TITLE} in unserem Betrieb , Beginn im August .",
    "Berufe der Gruppe {JOB_TITLE_GROUP} bieten gute Perspektiven .",
    "Kenntnisse in {SUBJECT} und {SUBJECT} sind von Vorteil .",
    "Du wirst {ACTIVITY} und unterstützt unsere Kollegen als {JOB_TITLE} .",
    "Bewerben Sie sich jetzt , wenn Sie {SKILL} besitzen .",
    "Unser Betrieb bildet seit Jahren in {JOB_TITLE_GROUP} aus .",
];

fn lists() -> [(&'static str, &'static [&'static str]); 5] {
    [
        ("JOB_TITLE", JOB_TITLE),
        ("JOB_TITLE_GROUP", JOB_TITLE_GROUP),
        ("SKILL", SKILL),
        ("SUBJECT", SUBJECT),
        ("ACTIVITY", ACTIVITY),
    ]
}

/// Built-in gazetteers for the five canonical types.
pub fn builtin_gazetteers() -> Vec<Gazetteer> {
    lists()
        .into_iter()
        .map(|(t, ps)| {
            Gazetteer::new(EntityType::new(t).expect("canonical"), ps.iter().map(|p| p.to_string()))
                .expect("non-empty list")
        })
        .collect()
}

fn fill(template: &str, gazetteers: &[Gazetteer], rng: &mut ChaCha8Rng) -> Segment {
    let mut tokens = Vec::new();
    for word in template.split_whitespace() {
        let slot = word.strip_prefix('{').and_then(|w| w.strip_suffix('}'));
        match slot.and_then(|t| gazetteers.iter().find(|g| g.entity_type.as_str() == t)) {
            Some(g) => {
                let phrase = g.phrases().choose(rng).expect("non-empty gazetteer");
                for (i, w) in phrase.split_whitespace().enumerate() {
                    let ty = g.entity_type.clone();
                    let label = if i == 0 { Label::Begin(ty) } else { Label::Inside(ty) };
                    tokens.push(Token::new(w, label).expect("whitespace-free"));
                }
            }
            None => tokens.push(Token::new(word, Label::Outside).expect("whitespace-free")),
        }
    }
    Segment::new(tokens).expect("templates are non-empty")
}

/// `n` distinct segments drawn from the templates, grouped ten per
/// document. Slots whose type has no gazetteer are kept as literal `O`
/// words.
pub fn synthetic_corpus(gazetteers: &[Gazetteer], n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut segments = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while segments.len() < n && attempts < n * 100 {
        attempts += 1;
        let tpl = TEMPLATES.choose(&mut rng).expect("templates");
        let seg = fill(tpl, gazetteers, &mut rng);
        if seen.insert(seg.clone()) {
            segments.push(seg);
        }
    }
    let docs = segments
        .chunks(10)
        .enumerate()
        .map(|(i, c)| Document::new(format!("ad-{i:04}"), c.to_vec()))
        .collect();
    Corpus::new(docs).expect("unique ids")
}
