//! Independent reference implementations and synthetic data generators
//! shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use abxeval::corpus::{write_triplets, RESPONSES_HEADER};
use abxeval::predict::normal::norm_cdf;
use abxeval::{FeatureArchive, FeatureMatrix, HumanResponse, Language, Manifest, SegmentRef, TripletItem, XMatches};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Angle by the textbook definition.
pub fn oracle_angle(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    (dot / (nu * nv)).clamp(-1.0, 1.0).acos()
}

/// `KL(p||q) + KL(q||p)` after flooring at `eps` and renormalising.
pub fn oracle_kl(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let fix = |x: &[f64]| {
        let f: Vec<f64> = x.iter().map(|v| v.max(eps)).collect();
        let s: f64 = f.iter().sum();
        f.into_iter().map(|v| v / s).collect::<Vec<_>>()
    };
    let (p, q) = (fix(p), fix(q));
    let kl = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * (x / y).ln()).sum::<f64>();
    kl(&p, &q) + kl(&q, &p)
}

/// Minimum over every monotone path from the first to the last frame pair,
/// found by explicit enumeration, divided by the longer length.
pub fn oracle_dtw(c: &[Vec<f64>], d: &[Vec<f64>], cost: &dyn Fn(&[f64], &[f64]) -> f64) -> f64 {
    fn walk(
        i: usize,
        j: usize,
        acc: f64,
        c: &[Vec<f64>],
        d: &[Vec<f64>],
        cost: &dyn Fn(&[f64], &[f64]) -> f64,
        best: &mut f64,
    ) {
        let acc = acc + cost(&c[i], &d[j]);
        if i + 1 == c.len() && j + 1 == d.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < c.len() {
            walk(i + 1, j, acc, c, d, cost, best);
        }
        if j + 1 < d.len() {
            walk(i, j + 1, acc, c, d, cost, best);
        }
        if i + 1 < c.len() && j + 1 < d.len() {
            walk(i + 1, j + 1, acc, c, d, cost, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(0, 0, 0.0, c, d, cost, &mut best);
    best / c.len().max(d.len()) as f64
}

/// Gaussian frames for the angular metric, or posterior-like frames
/// (softmax of Gaussians, occasionally with exact zeros) for KL.
pub fn random_sequence(rng: &mut ChaCha8Rng, len: usize, dim: usize, posterior: bool) -> Vec<Vec<f64>> {
    (0..len)
        .map(|_| {
            let raw: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            if !posterior {
                return raw;
            }
            let mut e: Vec<f64> = raw.iter().map(|x| (2.0 * x).exp()).collect();
            if dim > 1 && rng.random_bool(0.2) {
                e[rng.random_range(0..dim)] = 0.0;
            }
            let s: f64 = e.iter().sum();
            e.into_iter().map(|x| x / s).collect()
        })
        .collect()
}

pub fn flatten(frames: &[Vec<f64>]) -> Vec<f64> {
    frames.iter().flatten().copied().collect()
}

pub const FRAME_STEP: f64 = 0.01;

/// Frame `k` is centred at `(k + 0.5) * 10 ms`.
pub fn frame_times(n: usize) -> Vec<f64> {
    (0..n).map(|k| (k as f64 + 0.5) * FRAME_STEP).collect()
}

pub struct SyntheticCorpus {
    pub manifest: Manifest,
    pub features: FeatureArchive,
}

/// Two phone classes whose frames are `N(+-separation/2 * e1 + offset, I)`.
/// Every stimulus is its own utterance; A, B come from speaker `sa` and X
/// from `sx`. Languages alternate, X matches A or B at random.
pub fn gaussian_corpus(
    n_triplets: usize,
    separation: f64,
    dim: usize,
    frames: std::ops::Range<usize>,
    seed: u64,
) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(n_triplets);
    let mut mats = Vec::with_capacity(3 * n_triplets);
    let contrasts = [("a", "e"), ("i", "u"), ("o", "y")];
    for t in 0..n_triplets {
        let id = format!("t{t:05}");
        let language = if t % 2 == 0 { Language::En } else { Language::Fr };
        let x_matches = if rng.random_bool(0.5) { XMatches::A } else { XMatches::B };
        let mut segment = |name: &str, class: f64, rng: &mut ChaCha8Rng| {
            let n = rng.random_range(frames.clone());
            let mut data = Vec::with_capacity(n * dim);
            for _ in 0..n {
                for k in 0..dim {
                    let noise: f64 = StandardNormal.sample(rng);
                    // a constant offset keeps the angular metric away from the origin
                    let mean = if k == 0 { class * separation / 2.0 } else { 1.0 };
                    data.push(mean + noise);
                }
            }
            let utt = format!("{id}_{name}");
            mats.push(FeatureMatrix::new(&utt, frame_times(n), data, dim).unwrap());
            SegmentRef::new(utt, 0.0, n as f64 * FRAME_STEP)
        };
        let a = segment("a", 1.0, &mut rng);
        let b = segment("b", -1.0, &mut rng);
        let x_class = if x_matches == XMatches::A { 1.0 } else { -1.0 };
        let x = segment("x", x_class, &mut rng);
        let (pa, pb) = contrasts[t % contrasts.len()];
        items.push(TripletItem {
            triplet_id: id,
            language,
            a,
            b,
            x,
            phone_a: pa.into(),
            phone_b: pb.into(),
            prev_phone: "p".into(),
            next_phone: "t".into(),
            speaker_a: "sa".into(),
            speaker_b: "sa".into(),
            speaker_x: "sx".into(),
            x_matches,
        });
    }
    SyntheticCorpus {
        manifest: Manifest::new(items).unwrap(),
        features: FeatureArchive::from_matrices(mats).unwrap(),
    }
}

/// Listener responses with `P(correct) = Phi(a + b * latent)`. Each item
/// gets `per_item` responses from distinct participants of its language.
pub fn simulate_responses(
    manifest: &Manifest,
    latent: &BTreeMap<String, f64>,
    a: f64,
    b: f64,
    per_item: usize,
    n_participants: usize,
    seed: u64,
) -> Vec<HumanResponse> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut position: BTreeMap<String, u32> = BTreeMap::new();
    for item in manifest.iter() {
        let pool = rand::seq::index::sample(&mut rng, n_participants, per_item);
        for p in pool.iter() {
            let pid = format!("{}{p:03}", item.language);
            let pos = position.entry(pid.clone()).or_insert(0);
            *pos += 1;
            let prob = norm_cdf(a + b * latent[&item.triplet_id]);
            let correct = rng.random::<f64>() < prob;
            out.push(HumanResponse {
                triplet_id: item.triplet_id.clone(),
                participant_id: pid,
                language: item.language,
                correct,
                certainty: rng.random_range(1..=3),
                correct_first: rng.random_bool(0.5),
                trial_position: *pos,
            });
        }
    }
    out
}

/// Writes one `.fea` text file per utterance.
pub fn write_feature_dir(dir: &Path, features: &FeatureArchive) {
    std::fs::create_dir_all(dir).unwrap();
    for (id, fm) in features.iter() {
        let mut text = String::new();
        for i in 0..fm.n_frames() {
            write!(text, "{}", fm.times()[i]).unwrap();
            for v in fm.frame(i) {
                write!(text, " {v}").unwrap();
            }
            text.push('\n');
        }
        std::fs::write(dir.join(format!("{id}.fea")), text).unwrap();
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) {
    write_triplets(manifest.items(), std::fs::File::create(path).unwrap()).unwrap();
}

pub fn write_responses(path: &Path, responses: &[HumanResponse]) {
    let mut text = RESPONSES_HEADER.join(",");
    text.push('\n');
    for r in responses {
        writeln!(
            text,
            "{},{},{},{},{},{},{}",
            r.triplet_id,
            r.participant_id,
            r.language,
            u8::from(r.correct),
            r.certainty,
            u8::from(r.correct_first),
            r.trial_position
        )
        .unwrap();
    }
    std::fs::write(path, text).unwrap();
}
