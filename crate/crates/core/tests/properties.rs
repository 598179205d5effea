mod common;

use std::cmp::Ordering;
use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use htrlex_core::decode::{collapse, collapse_classes};
use htrlex_core::emissions::NoiseParams;
use htrlex_core::layout::{iou, select_index_box};
use htrlex_core::metrics::{avg_edit, avg_edit_misclassified, normalized_edit, word_accuracy};
use htrlex_core::{
    beam_search, best_path, constrained_wbs, levenshtein, synthesize_emissions, word_beam_search,
    Alphabet, BBox, BeamParams, BoxRange, EmissionMatrix, EvalPair, Lexicon,
};

use common::{levenshtein_oracle, random_matrix, small_alphabet};

fn polish() -> Arc<Alphabet> {
    static A: OnceLock<Arc<Alphabet>> = OnceLock::new();
    Arc::clone(A.get_or_init(|| Arc::new(Alphabet::polish())))
}

const WORD: &str = "[a-zA-ZąćęłńóśźżĄĆĘŁŃÓŚŹŻ]{0,7}";
const LOWER: &str = "[abcdeklnosząćęłńóśźż]{1,6}";

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn collation_is_a_total_order(a in WORD, b in WORD, c in WORD) {
        let al = polish();
        let ab = al.compare(&a, &b).unwrap();
        prop_assert_eq!(al.compare(&b, &a).unwrap(), ab.reverse());
        prop_assert_eq!(ab == Ordering::Equal, al.fold(&a) == al.fold(&b));
        let bc = al.compare(&b, &c).unwrap();
        if ab != Ordering::Greater && bc != Ordering::Greater {
            prop_assert_ne!(al.compare(&a, &c).unwrap(), Ordering::Greater);
        }
    }

    #[test]
    fn folding_is_idempotent(w in WORD) {
        let al = polish();
        let once = al.fold(&w);
        prop_assert_eq!(al.fold(&once), once.clone());
        prop_assert!(once.chars().all(|c| !c.is_uppercase()));
    }

    #[test]
    fn in_range_matches_comparisons(w in WORD, lo in WORD, hi in WORD) {
        let al = polish();
        prop_assume!(al.compare(&lo, &hi).unwrap() != Ordering::Greater);
        let expected = al.compare(&lo, &w).unwrap() != Ordering::Greater
            && al.compare(&w, &hi).unwrap() != Ordering::Greater;
        prop_assert_eq!(al.in_range(&w, &lo, &hi).unwrap(), expected);
    }

    #[test]
    fn nearest_match_agrees_with_linear_scan(
        words in prop::collection::vec(LOWER, 1..25),
        query in "[abcdeklosząćęłńóśźżX]{0,7}",
    ) {
        let lex = Lexicon::build(&words, polish()).unwrap();
        let q: Vec<char> = query.chars().collect();
        let mut best: Option<(usize, &str)> = None;
        for w in lex.words() {
            let d = levenshtein_oracle_fast(&q, &w.chars().collect::<Vec<_>>());
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, w));
            }
        }
        let (d, w) = best.unwrap();
        let m = lex.nearest_match(&query, None).unwrap().unwrap();
        prop_assert_eq!(m.distance, d);
        prop_assert_eq!(m.word.as_str(), w);
        prop_assert_eq!(lex.contains(&query), d == 0);
        for cap in 0..3 {
            let capped = lex.nearest_match(&query, Some(cap)).unwrap();
            prop_assert_eq!(capped.is_some(), d <= cap);
        }
    }

    #[test]
    fn restricting_nested_ranges_composes(
        words in prop::collection::vec(LOWER, 1..30),
        mut bounds in prop::collection::vec(LOWER, 4),
    ) {
        let al = polish();
        bounds.sort_by(|a, b| al.compare(a, b).unwrap());
        let lex = Lexicon::build(&words, Arc::clone(&al)).unwrap();
        let outer = BoxRange::new("o", bounds[0].clone(), bounds[3].clone());
        let inner = BoxRange::new("i", bounds[1].clone(), bounds[2].clone());
        let twice = lex.restrict_range(&outer).unwrap().restrict_range(&inner).unwrap();
        let once = lex.restrict_range(&inner).unwrap();
        prop_assert_eq!(twice.words(), once.words());
        let direct: Vec<&String> = lex
            .words()
            .iter()
            .filter(|w| al.in_range(w, &inner.lo, &inner.hi).unwrap())
            .collect();
        prop_assert_eq!(once.words().iter().collect::<Vec<_>>(), direct);
        let full = BoxRange::new("f", lex.words()[0].clone(), lex.words().last().unwrap().clone());
        let kept = lex.restrict_range(&full).unwrap();
        prop_assert_eq!(kept.words(), lex.words());
    }

    #[test]
    fn levenshtein_matches_oracle_and_is_a_metric(
        a in "[abcą]{0,6}", b in "[abcą]{0,6}", c in "[abcą]{0,6}",
    ) {
        let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        let d = levenshtein(&a, &b);
        prop_assert_eq!(d, levenshtein_oracle(&ca, &cb));
        prop_assert_eq!(d, levenshtein(&b, &a));
        prop_assert_eq!(d == 0, a == b);
        prop_assert!(d <= levenshtein(&a, &c) + levenshtein(&c, &b));
        prop_assert!(ca.len().abs_diff(cb.len()) <= d && d <= ca.len().max(cb.len()));
        let n = normalized_edit(&a, &b);
        prop_assert!((0.0..=1.0).contains(&n));
    }

    #[test]
    fn average_edit_identity(pairs in prop::collection::vec(("[ab]{0,3}", "[ab]{0,3}"), 1..40)) {
        let pairs: Vec<EvalPair> = pairs.into_iter().map(|(g, p)| EvalPair::new(g, p)).collect();
        let acc = word_accuracy(&pairs).unwrap();
        let avg = avg_edit(&pairs).unwrap();
        match avg_edit_misclassified(&pairs).unwrap() {
            Some(m) => prop_assert!((avg - (1.0 - acc) * m).abs() < 1e-9),
            None => prop_assert!(acc == 1.0 && avg == 0.0),
        }
    }

    #[test]
    fn iou_properties(
        a in (0.0..100.0f64, 0.0..100.0f64, 0.1..50.0f64, 0.1..50.0f64),
        b in (0.0..100.0f64, 0.0..100.0f64, 0.1..50.0f64, 0.1..50.0f64),
    ) {
        let a = BBox::new(a.0, a.1, a.2, a.3);
        let b = BBox::new(b.0, b.1, b.2, b.3);
        prop_assert_eq!(iou(&a, &b), iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&iou(&a, &b)));
        prop_assert!((iou(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn index_box_selection(
        raw in prop::collection::vec((0.0..400.0f64, 0.0..400.0f64, 1.0..60.0f64, 1.0..30.0f64), 0..12),
        shuffle_seed in any::<u64>(),
        strip in 10.0..400.0f64,
        shrink in 0.0..1.0f64,
    ) {
        let boxes: Vec<BBox> = raw.iter().map(|r| BBox::new(r.0, r.1, r.2, r.3)).collect();
        let mut shuffled = boxes.clone();
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let chosen = select_index_box(&boxes, strip, 20.0);
        prop_assert_eq!(select_index_box(&shuffled, strip, 20.0), chosen);
        let smaller = strip * shrink;
        if let Some(s) = select_index_box(&boxes, smaller, 20.0) {
            prop_assert!(s.y < smaller);
            prop_assert!(boxes.iter().filter(|b| b.y < smaller).count()
                <= boxes.iter().filter(|b| b.y < strip).count());
            prop_assert!(chosen.is_some());
        }
    }

    #[test]
    fn collapse_fixes_clean_words(path in prop::collection::vec(0usize..4, 0..20)) {
        let once = collapse_classes(&path);
        prop_assert!(once.iter().all(|&c| c != 0));
        if once.windows(2).all(|w| w[0] != w[1]) {
            prop_assert_eq!(collapse_classes(&once), once.clone());
        }
    }

    #[test]
    fn best_path_is_collapsed_argmax(seed in any::<u64>(), frames in 1usize..12) {
        let al = small_alphabet(3);
        let m = random_matrix(&mut ChaCha8Rng::seed_from_u64(seed), &al, frames);
        let argmax: Vec<usize> = m
            .rows()
            .map(|r| (0..r.len()).fold(0, |b, k| if r[k] > r[b] { k } else { b }))
            .collect();
        prop_assert_eq!(best_path(&m, &al).unwrap().label, collapse(&argmax, &al));
    }

    #[test]
    fn zero_noise_round_trips_through_best_path(label in "[a-zA-ZąćęłńóśźżĄĆĘŁŃÓŚŹŻ]{1,10}", seed in any::<u64>()) {
        let al = polish();
        let params = NoiseParams { epsilon: 0.0, seed, ..NoiseParams::default() };
        let m = synthesize_emissions(&label, &al, &params).unwrap();
        prop_assert_eq!(best_path(&m, &al).unwrap().label, label);
    }

    #[test]
    fn synthesis_is_deterministic_and_stochastic(
        label in "[a-ząćęłńóśźż]{1,8}", eps in 0.0..0.99f64, seed in any::<u64>(),
    ) {
        let al = polish();
        let params = NoiseParams { epsilon: eps, seed, ..NoiseParams::default() };
        let m = synthesize_emissions(&label, &al, &params).unwrap();
        let again = synthesize_emissions(&label, &al, &params).unwrap();
        prop_assert_eq!(
            m.rows().flatten().map(|v| v.to_bits()).collect::<Vec<_>>(),
            again.rows().flatten().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        prop_assert!(m.validate_for(&al).is_ok());
        for row in m.rows() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
        }
        let back = EmissionMatrix::parse_emat(&m.to_emat_string()).unwrap();
        prop_assert_eq!(back.frames(), m.frames());
        for (r, s) in back.rows().zip(m.rows()) {
            for (x, y) in r.iter().zip(s) {
                prop_assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn word_beam_outputs_are_lexicon_members(
        words in prop::collection::vec(LOWER, 1..20),
        pick in any::<prop::sample::Index>(),
        eps in 0.0..0.9f64,
        seed in any::<u64>(),
        bounds in prop::collection::vec(LOWER, 2),
    ) {
        let al = polish();
        let lex = Lexicon::build(&words, Arc::clone(&al)).unwrap();
        let gold = pick.get(&words);
        let params = NoiseParams { epsilon: eps, seed, ..NoiseParams::default() };
        let m = synthesize_emissions(gold, &al, &params).unwrap();
        let bp = BeamParams::new(5);
        let wbs = word_beam_search(&m, &al, &lex, &bp).unwrap();
        prop_assert!(lex.contains(&wbs.label));

        let full = BoxRange::new("all", lex.words()[0].clone(), lex.words().last().unwrap().clone());
        let c = constrained_wbs(&m, &al, &lex, &full, &bp).unwrap();
        prop_assert_eq!(&c.label, &wbs.label);
        prop_assert_eq!(c.score.to_bits(), wbs.score.to_bits());

        let (lo, hi) = if al.compare(&bounds[0], &bounds[1]).unwrap() == Ordering::Greater {
            (&bounds[1], &bounds[0])
        } else {
            (&bounds[0], &bounds[1])
        };
        let range = BoxRange::new("r", lo.clone(), hi.clone());
        if let Ok(d) = constrained_wbs(&m, &al, &lex, &range, &bp) {
            prop_assert!(lex.contains(&d.label));
            prop_assert!(range.contains(&d.label, &al).unwrap());
        } else {
            prop_assert!(lex.restrict_range(&range).unwrap().is_empty());
        }
    }

    #[test]
    fn beam_width_one_matches_best_path_on_one_hot(label in "[abc]{1,8}") {
        let al = small_alphabet(3);
        let params = NoiseParams { epsilon: 0.0, ..NoiseParams::default() };
        let m = synthesize_emissions(&label, &al, &params).unwrap();
        prop_assert_eq!(beam_search(&m, &al, &BeamParams::new(1)).unwrap().label, label);
    }
}

// The recursive oracle is exponential; nearest-match checks use the textbook DP.
fn levenshtein_oracle_fast(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, x) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = (prev[j] + usize::from(x != y))
                .min(prev[j + 1] + 1)
                .min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// No width beats the saturating width, which finds the exact best label.
#[test]
fn beam_scores_bounded_by_saturating_width() {
    let al = small_alphabet(2);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let frames = rand::Rng::random_range(&mut rng, 1..5);
        let m = random_matrix(&mut rng, &al, frames);
        let full = beam_search(&m, &al, &BeamParams::new(64)).unwrap();
        let exact = htrlex_core::ctc_label_probability(&m, &full.label, &al).unwrap();
        assert!((full.score - exact.ln()).abs() < 1e-9);
        for w in 1..=8 {
            let s = beam_search(&m, &al, &BeamParams::new(w)).unwrap().score;
            assert!(s <= full.score + 1e-12, "width {w}");
        }
    }
}

/// Widening the beam can lower the winning score: at width 3 the empty
/// prefix is pruned after frame 1 and "b" loses the paths through it.
#[test]
fn wider_beam_can_score_lower() {
    let al = small_alphabet(2);
    let m = EmissionMatrix::for_alphabet(
        &al,
        vec![
            vec![7.0 / 20.0, 5.0 / 20.0, 8.0 / 20.0],
            vec![5.0 / 14.0, 1.0 / 14.0, 8.0 / 14.0],
            vec![3.0 / 12.0, 5.0 / 12.0, 4.0 / 12.0],
        ],
    )
    .unwrap();
    let narrow = beam_search(&m, &al, &BeamParams::new(2)).unwrap();
    let wide = beam_search(&m, &al, &BeamParams::new(3)).unwrap();
    assert_eq!((narrow.label.as_str(), wide.label.as_str()), ("b", "b"));
    assert!(wide.score < narrow.score);
    let exact = htrlex_core::ctc_label_probability(&m, "b", &al)
        .unwrap()
        .ln();
    assert!(narrow.score <= exact + 1e-12);
    assert!((beam_search(&m, &al, &BeamParams::new(16)).unwrap().score - exact).abs() < 1e-9);
}

#[test]
fn collation_exhaustive_on_fixture() {
    let al = polish();
    let words: Vec<String> = common::freq_list()
        .entries()
        .iter()
        .take(200)
        .map(|(w, _)| w.clone())
        .collect();
    for a in &words {
        for b in &words {
            let ab = al.compare(a, b).unwrap();
            assert_eq!(al.compare(b, a).unwrap(), ab.reverse());
            for c in words.iter().step_by(7) {
                if ab != Ordering::Greater && al.compare(b, c).unwrap() != Ordering::Greater {
                    assert_ne!(al.compare(a, c).unwrap(), Ordering::Greater);
                }
            }
        }
    }
}
