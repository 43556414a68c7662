mod common;

use natner::corpus::{Corpus, EntityType, Label, Segment};
use natner::eval::entity_prf;
use natner::labeler::{
    class_weights, load_model, nll_and_gradient, save_model, tag_corpus, train, CrfModel, FeatureTemplateSet,
    TrainConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{brute_force, path_score};

fn job(s: &str) -> Label {
    Label::Begin(EntityType::new(s).unwrap())
}

/// "<Name> ist Facharbeiter" with the last word a job title.
fn separable() -> Corpus {
    let names = ["Anna", "Jonas", "Lea", "Paul", "Mia", "Ben", "Emma", "Noah"];
    let segs = names
        .iter()
        .map(|n| {
            Segment::new(vec![
                natner::Token::new(*n, Label::Outside).unwrap(),
                natner::Token::new("ist", Label::Outside).unwrap(),
                natner::Token::new("Facharbeiter", job("JOB_TITLE")).unwrap(),
            ])
            .unwrap()
        })
        .collect();
    Corpus::from_segments("sep", segs)
}

fn quick() -> TrainConfig {
    TrainConfig {
        max_epochs: 10,
        ..TrainConfig::default()
    }
}

#[test]
fn separable_fixture_is_learned_exactly() {
    let c = separable();
    let out = train(&c, &c, &quick(), None).unwrap();
    let pred = tag_corpus(&out.model, &c);
    assert_eq!(entity_prf(&c, &pred).unwrap().f1(), 1.0);
    assert!(out.best_epoch >= 1 && out.best_epoch <= 10);
}

/// Loss from brute-force enumeration, independent of the forward pass.
fn oracle_loss(m: &CrfModel, feats: &[Vec<u32>], gold: &[usize], cw: &[f64], l2: f64) -> f64 {
    let (_, _, z) = brute_force(m, feats);
    let c = gold.iter().map(|&g| cw[g]).sum::<f64>() / gold.len() as f64;
    let reg = 0.5 * l2 * m.weights().iter().map(|w| w * w).sum::<f64>();
    c * (z - path_score(m, feats, gold)) + reg
}

#[test]
fn four_token_gradient_matches_finite_differences() {
    let seg = Segment::from_pairs(&[("Sie", "O"), ("zeigen", "O"), ("hohe", "B-SKILL"), ("Sorgfalt", "I-SKILL")])
        .unwrap();
    let corpus = Corpus::from_segments("g", vec![seg.clone()]);
    let mut m = CrfModel::for_types(&[EntityType::new("SKILL").unwrap()], FeatureTemplateSet::default());
    m.extend_vocabulary(&corpus);
    assert_eq!(m.num_labels(), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for w in m.weights_mut() {
        *w = rng.random_range(-0.5..0.5);
    }
    let cw = class_weights(&corpus, 0.1, 10.0).unwrap().for_alphabet(m.labels());
    let enc = m.encode(&seg).unwrap();
    let l2 = 0.01;
    let (loss, grad) = nll_and_gradient(&m, &enc, &cw, l2);
    assert!((loss - oracle_loss(&m, &enc.features, &enc.gold, &cw, l2)).abs() < 1e-10);
    let h = 1e-5;
    for j in 0..grad.len() {
        let w0 = m.weights()[j];
        m.weights_mut()[j] = w0 + h;
        let up = oracle_loss(&m, &enc.features, &enc.gold, &cw, l2);
        m.weights_mut()[j] = w0 - h;
        let down = oracle_loss(&m, &enc.features, &enc.gold, &cw, l2);
        m.weights_mut()[j] = w0;
        let num = (up - down) / (2.0 * h);
        assert!((grad[j] - num).abs() <= 1e-6 || (grad[j] - num).abs() / num.abs() < 1e-4, "weight {j}");
    }
}

#[test]
fn warm_start_keeps_vocabulary_and_weights() {
    let c = separable();
    let first = train(&c, &c, &quick(), None).unwrap().model;
    let other = Corpus::from_segments(
        "o",
        vec![Segment::from_pairs(&[("Wir", "O"), ("brauchen", "O"), ("Mathematik", "B-SUBJECT")]).unwrap()],
    );
    let mixed = Corpus::new(c.documents().iter().cloned().chain(other.documents().iter().cloned()).collect()).unwrap();
    let tuned = train(&mixed, &mixed, &quick(), Some(&first)).unwrap().model;
    assert_eq!(&tuned.features()[..first.features().len()], first.features());
    assert_eq!(&tuned.labels()[..first.num_labels()], first.labels());
    assert!(tuned.num_labels() > first.num_labels());
}

#[test]
fn training_is_deterministic_and_model_files_round_trip() {
    let c = separable();
    let a = train(&c, &c, &quick(), None).unwrap();
    let b = train(&c, &c, &quick(), None).unwrap();
    assert_eq!(a.model.to_bytes(), b.model.to_bytes());
    assert_eq!(a.records, b.records);
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.bin");
    save_model(&a.model, &p).unwrap();
    assert_eq!(load_model(&p).unwrap().to_bytes(), a.model.to_bytes());
    std::fs::write(&p, b"garbage").unwrap();
    assert!(load_model(&p).is_err());
}

#[test]
fn invalid_inputs_are_rejected() {
    let c = separable();
    let bad = TrainConfig {
        max_epochs: 0,
        ..TrainConfig::default()
    };
    assert!(train(&c, &c, &bad, None).is_err());
    let no_entities = Corpus::from_segments("o", vec![Segment::from_pairs(&[("a", "O")]).unwrap()]);
    assert!(train(&c, &no_entities, &quick(), None).is_err());
    let invalid = Corpus::from_segments("i", vec![Segment::from_pairs(&[("a", "I-SKILL")]).unwrap()]);
    assert!(train(&invalid, &c, &quick(), None).is_err());
}
