use super::*;
use crate::corpus::{FeatureMatrix, SegmentRef};
use proptest::prelude::*;

fn item(id: &str, lang: Language, pa: &str, pb: &str, x_matches: XMatches) -> TripletItem {
    TripletItem {
        triplet_id: id.into(),
        language: lang,
        a: SegmentRef::new("ua", 0.0, 1.0),
        b: SegmentRef::new("ub", 0.0, 1.0),
        x: SegmentRef::new("ux", 0.0, 1.0),
        phone_a: pa.into(),
        phone_b: pb.into(),
        prev_phone: "s".into(),
        next_phone: "t".into(),
        speaker_a: "s1".into(),
        speaker_b: "s1".into(),
        speaker_x: "s2".into(),
        x_matches,
    }
}

fn rec(id: &str, lang: Language, delta: f64) -> DeltaRecord {
    DeltaRecord {
        model_id: "m".into(),
        language: lang,
        triplet_id: id.into(),
        delta,
        d_ax: 0.0,
        d_bx: 0.0,
    }
}

fn matrix(id: &str, rows: &[[f64; 2]]) -> FeatureMatrix {
    let times = (0..rows.len()).map(|i| 0.05 + 0.1 * i as f64).collect();
    FeatureMatrix::new(id, times, rows.iter().flatten().copied().collect(), 2).unwrap()
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

#[test]
fn sign_convention() {
    assert!((signed_delta(0.2, 0.5, XMatches::A) - 0.3).abs() < 1e-15);
    assert!((signed_delta(0.5, 0.2, XMatches::B) - 0.3).abs() < 1e-15);
}

#[test]
fn x_identical_to_a() {
    let arch = FeatureArchive::from_matrices([
        matrix("ua", &[[1.0, 0.0], [0.8, 0.2]]),
        matrix("ub", &[[0.0, 1.0], [0.3, 0.9], [0.1, 1.0]]),
        matrix("ux", &[[1.0, 0.0], [0.8, 0.2]]),
    ])
    .unwrap();
    let t = item("t1", Language::En, "i", "I", XMatches::A);
    let d = compute_delta(&t, &arch, &FrameMetric::angular(), "m").unwrap();
    assert_eq!(d.d_ax, 0.0);
    assert_eq!(d.delta, d.d_bx);
    assert!(d.delta > 0.0);
}

#[test]
fn missing_utterance_is_named() {
    let arch = FeatureArchive::from_matrices([matrix("ua", &[[1.0, 0.0]])]).unwrap();
    let t = item("t1", Language::En, "i", "I", XMatches::A);
    let err = compute_delta(&t, &arch, &FrameMetric::angular(), "m").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("'ub'") && msg.contains("t1"), "{msg}");
}

#[test]
fn decisions() {
    assert!(decide(0.3).unwrap());
    assert!(!decide(0.0).unwrap());
    assert!(!decide(-0.1).unwrap());
    assert!(decide(f64::NAN).is_err());
    assert!(decide(f64::INFINITY).is_err());
}

#[test]
fn global_accuracy_counts_ties_wrong() {
    let items: Vec<_> = (0..4)
        .map(|i| item(&format!("t{i}"), Language::En, "i", "I", XMatches::A))
        .collect();
    let m = Manifest::new(items).unwrap();
    let ds: Vec<_> = [0.3, -0.1, 0.2, 0.0]
        .iter()
        .enumerate()
        .map(|(i, &d)| rec(&format!("t{i}"), Language::En, d))
        .collect();
    let r = accuracy(&ds, Grouping::Global, &m).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].accuracy(), 0.5);
    assert_eq!(r.rows[0].key(), "all");

    let pos: Vec<_> = ds.iter().map(|d| rec(&d.triplet_id, Language::En, 1.0)).collect();
    assert_eq!(accuracy(&pos, Grouping::Global, &m).unwrap().rows[0].accuracy(), 1.0);
}

#[test]
fn per_contrast_rows() {
    let m = Manifest::new(vec![
        item("t1", Language::Fr, "a", "e", XMatches::A),
        item("t2", Language::Fr, "e", "a", XMatches::B),
        item("t3", Language::Fr, "o", "u", XMatches::A),
    ])
    .unwrap();
    let ds = vec![
        rec("t1", Language::Fr, 0.4),
        rec("t2", Language::Fr, 0.1),
        rec("t3", Language::Fr, -0.2),
    ];
    let r = accuracy(&ds, Grouping::ByContrast, &m).unwrap();
    let rows: Vec<_> = r.rows.iter().map(|r| (r.key(), r.accuracy(), r.n_items)).collect();
    assert_eq!(rows, vec![("a~e".to_string(), 1.0, 2), ("o~u".to_string(), 0.0, 1)]);
}

#[test]
fn accuracy_requires_full_coverage() {
    let m = Manifest::new(vec![
        item("t1", Language::En, "i", "I", XMatches::A),
        item("t2", Language::En, "i", "I", XMatches::A),
    ])
    .unwrap();
    let err = accuracy(&[rec("t1", Language::En, 1.0)], Grouping::Global, &m).unwrap_err();
    assert!(matches!(err, AbxError::MissingDeltas { ref ids } if ids == &["t2"]));
    let err = accuracy(&[rec("zz", Language::En, 1.0)], Grouping::Global, &m).unwrap_err();
    assert!(matches!(err, AbxError::UnknownTriplet(_)));
    let dup = [rec("t1", Language::En, 1.0), rec("t1", Language::En, 1.0)];
    assert!(matches!(
        accuracy(&dup, Grouping::Global, &m),
        Err(AbxError::DuplicateDelta(_))
    ));
    let wrong_lang = [rec("t1", Language::Fr, 1.0), rec("t2", Language::En, 1.0)];
    assert!(matches!(
        accuracy(&wrong_lang, Grouping::Global, &m),
        Err(AbxError::LanguageMismatch { .. })
    ));
}

fn hum(pairs: &[(&str, u32, u32)]) -> BTreeMap<String, ItemAccuracy> {
    pairs
        .iter()
        .map(|&(id, k, n)| {
            (
                id.to_string(),
                ItemAccuracy {
                    n_correct: k,
                    n_responses: n,
                },
            )
        })
        .collect()
}

#[test]
fn reweighted_hand_example() {
    let ds = [rec("t1", Language::En, 0.5), rec("t2", Language::En, -0.5)];
    let h = hum(&[("t1", 9, 10), ("t2", 6, 10)]);
    let r = reweighted_accuracy(&ds, &h).unwrap();
    assert_eq!(r[0].value, ratio(3, 5));
    assert_eq!(r[0].accuracy(), 0.6);
    assert_eq!(r[0].n_items, 2);
}

#[test]
fn reweighted_identities() {
    let ds = [
        rec("t1", Language::En, 0.5),
        rec("t2", Language::En, -0.5),
        rec("t3", Language::En, 0.0),
        rec("t4", Language::Fr, 1.0),
    ];
    let constant = hum(&[("t1", 2, 3), ("t2", 2, 3), ("t3", 2, 3), ("t4", 1, 3)]);
    let r = reweighted_accuracy(&ds, &constant).unwrap();
    assert_eq!(r[0].language, Language::En);
    assert_eq!(r[0].value, ratio(1, 3));
    assert_eq!(r[1].value, ratio(1, 1));

    let all_right: Vec<_> = ds.iter().map(|d| rec(&d.triplet_id, d.language, 1.0)).collect();
    let varied = hum(&[("t1", 1, 3), ("t2", 3, 3), ("t3", 2, 5), ("t4", 1, 2)]);
    assert!(reweighted_accuracy(&all_right, &varied)
        .unwrap()
        .iter()
        .all(|r| r.value == ratio(1, 1)));
}

#[test]
fn reweighted_errors() {
    let ds = [rec("t1", Language::En, 0.5), rec("t2", Language::En, -0.5)];
    let err = reweighted_accuracy(&ds, &hum(&[("t1", 1, 1)])).unwrap_err();
    assert!(matches!(err, AbxError::MissingHum { ref ids } if ids == &["t2"]));
    let err = reweighted_accuracy(&ds, &hum(&[("t1", 0, 3), ("t2", 0, 3)])).unwrap_err();
    assert!(matches!(err, AbxError::ZeroDenominator(Language::En)));
}

#[test]
fn delta_table_round_trip_and_order() {
    let ds = vec![
        rec("t2", Language::En, -1.0 / 3.0),
        DeltaRecord {
            d_ax: 0.25,
            d_bx: 0.75,
            ..rec("t1", Language::Fr, 0.5)
        },
    ];
    let mut buf = Vec::new();
    write_delta_table(&ds, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(
        text,
        "model_id,language,triplet_id,delta,d_ax,d_bx\n\
         m,fr,t1,0.5,0.25,0.75\n\
         m,en,t2,-0.333333333333,0,0\n"
    );
    let back = read_delta_table(buf.as_slice(), "d.csv").unwrap();
    assert_eq!(back[0], ds[1]);
    assert!((back[1].delta + 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn accuracy_csv_layout() {
    let m = Manifest::new(vec![
        item("t1", Language::En, "i", "I", XMatches::A),
        item("t2", Language::Fr, "a", "e", XMatches::A),
    ])
    .unwrap();
    let ds = [rec("t1", Language::En, 1.0), rec("t2", Language::Fr, -1.0)];
    let mut buf = Vec::new();
    write_accuracy_csv(&accuracy(&ds, Grouping::ByContrast, &m).unwrap(), &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap(),
        "scope,language,key,accuracy,n_items\nby_contrast,en,I~i,1,1\nby_contrast,fr,a~e,0,1\n"
    );
}

fn random_archive(rows_a: Vec<[f64; 2]>, rows_b: Vec<[f64; 2]>, rows_x: Vec<[f64; 2]>) -> FeatureArchive {
    FeatureArchive::from_matrices([matrix("ua", &rows_a), matrix("ub", &rows_b), matrix("ux", &rows_x)])
        .unwrap()
}

fn frames_strategy() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec([0.1f64..2.0, 0.1f64..2.0], 1..6)
}

proptest! {
    #[test]
    fn swapping_a_and_b_preserves_delta(
        ra in frames_strategy(), rb in frames_strategy(), rx in frames_strategy(), xa in any::<bool>()
    ) {
        let arch = random_archive(ra, rb, rx);
        let (xm, flipped) = if xa { (XMatches::A, XMatches::B) } else { (XMatches::B, XMatches::A) };
        let t = item("t", Language::En, "i", "I", xm);
        let mut s = t.clone();
        std::mem::swap(&mut s.a, &mut s.b);
        std::mem::swap(&mut s.phone_a, &mut s.phone_b);
        s.x_matches = flipped;
        let m = FrameMetric::angular();
        let d1 = compute_delta(&t, &arch, &m, "m").unwrap();
        let d2 = compute_delta(&s, &arch, &m, "m").unwrap();
        prop_assert_eq!(d1.delta, d2.delta);
    }

    #[test]
    fn decisions_invariant_under_positive_scaling(
        ra in frames_strategy(), rb in frames_strategy(), rx in frames_strategy(), scale in 0.01f64..100.0
    ) {
        let t = item("t", Language::En, "i", "I", XMatches::A);
        let m = FrameMetric::angular();
        let d = compute_delta(&t, &random_archive(ra.clone(), rb.clone(), rx.clone()), &m, "m").unwrap();
        let sc = |rows: Vec<[f64; 2]>| rows.into_iter().map(|[a, b]| [a * scale, b * scale]).collect();
        let ds = compute_delta(&t, &random_archive(sc(ra), sc(rb), sc(rx)), &m, "m").unwrap();
        // guard the decision boundary against rounding of the two DTW sums
        prop_assume!(d.delta.abs() > 1e-9);
        prop_assert_eq!(decide(d.delta).unwrap(), decide(ds.delta).unwrap());
        prop_assert_eq!(decide(d.delta * scale).unwrap(), decide(d.delta).unwrap());
    }

    #[test]
    fn contrast_rows_average_to_global(
        rows in prop::collection::vec((0usize..4, any::<bool>(), -1.0f64..1.0), 1..60)
    ) {
        let phones = [("i", "I"), ("I", "i"), ("u", "U"), ("a", "e")];
        let mut items = Vec::new();
        let mut ds = Vec::new();
        for (k, &(p, fr, delta)) in rows.iter().enumerate() {
            let lang = if fr { Language::Fr } else { Language::En };
            let id = format!("t{k}");
            items.push(item(&id, lang, phones[p].0, phones[p].1, XMatches::A));
            ds.push(rec(&id, lang, delta));
        }
        let m = Manifest::new(items).unwrap();
        let global = accuracy(&ds, Grouping::Global, &m).unwrap();
        let by = accuracy(&ds, Grouping::ByContrast, &m).unwrap();
        for g in &global.rows {
            let parts: Vec<_> = by.rows.iter().filter(|r| r.language == g.language).collect();
            let weighted: BigRational = parts
                .iter()
                .map(|r| r.ratio() * BigRational::from_integer(r.n_items.into()))
                .fold(BigRational::zero(), |a, b| a + b)
                / BigRational::from_integer(g.n_items.into());
            prop_assert_eq!(weighted, g.ratio());
        }
    }

    #[test]
    fn reweighted_bounds_and_unit_weights(
        rows in prop::collection::vec((-1.0f64..1.0, 0u32..5, 1u32..5), 1..40)
    ) {
        let ds: Vec<_> = rows.iter().enumerate().map(|(k, r)| rec(&format!("t{k}"), Language::En, r.0)).collect();
        let h: BTreeMap<_, _> = rows.iter().enumerate().map(|(k, &(_, c, n))| {
            (format!("t{k}"), ItemAccuracy { n_correct: c.min(n), n_responses: n })
        }).collect();
        if let Ok(r) = reweighted_accuracy(&ds, &h) {
            prop_assert!(r[0].value >= BigRational::zero() && r[0].value <= BigRational::from_integer(1.into()));
        }
        let ones: BTreeMap<_, _> = h.keys().map(|k| (k.clone(), ItemAccuracy { n_correct: 1, n_responses: 1 })).collect();
        let m = Manifest::new(ds.iter().map(|d| item(&d.triplet_id, Language::En, "i", "I", XMatches::A)).collect()).unwrap();
        let plain = accuracy(&ds, Grouping::Global, &m).unwrap();
        prop_assert_eq!(&reweighted_accuracy(&ds, &ones).unwrap()[0].value, &plain.rows[0].ratio());

        // errors confined to items nobody gets right do not count
        let zero_on_errors: BTreeMap<_, _> = ds.iter().map(|d| {
            let k = if d.delta > 0.0 { 2 } else { 0 };
            (d.triplet_id.clone(), ItemAccuracy { n_correct: k, n_responses: 2 })
        }).collect();
        if ds.iter().any(|d| d.delta > 0.0) {
            prop_assert_eq!(&reweighted_accuracy(&ds, &zero_on_errors).unwrap()[0].value, &BigRational::from_integer(1.into()));
        }
    }
}
