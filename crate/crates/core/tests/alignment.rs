use g2sqg::alignment::*;
use g2sqg::autodiff::gradcheck::check_params;
use g2sqg::autodiff::{ParamStore, Tape, Tensor, Var};
use g2sqg::layers::Dropout;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn readout(tape: &mut Tape<f64>, v: Var, seed: u64) -> Var {
    let (r, c) = tape.value(v).dims();
    let m = tape.mul_const(v, Tensor::uniform(r, c, 1.0, &mut rng(seed))).unwrap();
    tape.sum(m)
}

fn cfg(word: usize, feat: usize, hidden: usize, use_dan: bool) -> DanConfig {
    DanConfig {
        word_dim: word,
        context_dim: 0,
        feature_dim: feat,
        hidden,
        align_dim: 4,
        use_dan,
    }
}

struct Sample {
    gp: Tensor<f64>,
    ga: Tensor<f64>,
    f: Tensor<f64>,
}

fn sample(n: usize, l: usize, word: usize, feat: usize, seed: u64) -> Sample {
    let mut r = rng(seed);
    Sample {
        gp: Tensor::uniform(n, word, 1.0, &mut r),
        ga: Tensor::uniform(l, word, 1.0, &mut r),
        f: Tensor::uniform(n, feat, 1.0, &mut r),
    }
}

fn run(dan: &Dan, store: &ParamStore<f64>, s: &Sample, tape: &mut Tape<f64>) -> DanOutput {
    let inp = DanInputs {
        passage_words: tape.constant(s.gp.clone()),
        answer_words: tape.constant(s.ga.clone()),
        features: if s.f.cols() > 0 { Some(tape.constant(s.f.clone())) } else { None },
        passage_context: None,
        answer_context: None,
    };
    dan.forward(tape, store, &inp, &mut Dropout::off()).unwrap()
}

#[test]
fn single_passage_and_answer_token() {
    let mut store = ParamStore::<f64>::new();
    let stage = AlignStage::new(&mut store, "s", 3, 2, &mut rng(0)).unwrap();
    let mut tape = Tape::new();
    let sp = tape.constant(Tensor::row(&[0.1, 0.2, 0.3]));
    let sa = tape.constant(Tensor::row(&[-1.0, 0.5, 2.0]));
    let vp = tape.constant(Tensor::row(&[7.0]));
    let va = tape.constant(Tensor::row(&[4.0, 5.0]));
    let beta = stage.weights(&mut tape, &store, sp, sa).unwrap();
    assert_eq!(tape.value(beta).data(), &[1.0]);
    let out = soft_align(&mut tape, &store, &stage, sp, sa, vp, va).unwrap();
    assert_eq!(tape.value(out).data(), &[7.0, 4.0, 5.0]);
}

#[test]
fn empty_answer_is_rejected() {
    let mut store = ParamStore::<f64>::new();
    let stage = AlignStage::new(&mut store, "s", 2, 2, &mut rng(0)).unwrap();
    let mut tape = Tape::new();
    let sp = tape.constant(Tensor::row(&[0.1, 0.2]));
    let sa = tape.constant(Tensor::zeros(0, 2));
    assert!(stage.weights(&mut tape, &store, sp, sa).is_err());
}

#[test]
fn identical_answer_values_hide_the_split() {
    let mut store = ParamStore::<f64>::new();
    let stage = AlignStage::new(&mut store, "s", 3, 4, &mut rng(1)).unwrap();
    let mut tape = Tape::new();
    let sp = tape.constant(Tensor::uniform(4, 3, 1.0, &mut rng(2)));
    let sa = tape.constant(Tensor::uniform(2, 3, 1.0, &mut rng(3)));
    let vp = tape.constant(Tensor::zeros(4, 1));
    let va = tape.constant(Tensor::from_rows(2, 2, vec![1.5, -2.0, 1.5, -2.0]).unwrap());
    let out = soft_align(&mut tape, &store, &stage, sp, sa, vp, va).unwrap();
    for r in 0..4 {
        assert!((tape.value(out).at(r, 1) - 1.5).abs() < 1e-12);
        assert!((tape.value(out).at(r, 2) + 2.0).abs() < 1e-12);
    }
}

#[test]
fn hand_computed_two_by_two() {
    let mut store = ParamStore::<f64>::new();
    let stage = AlignStage::new(&mut store, "s", 2, 2, &mut rng(4)).unwrap();
    // W maps feature f to projection j: rows are input features
    let w = [[1.0, -0.5], [0.5, 2.0]];
    store.get_mut(stage.w).value = Tensor::from_rows(2, 2, vec![w[0][0], w[0][1], w[1][0], w[1][1]]).unwrap();
    let p = [[1.0, 0.0], [0.3, -1.0]];
    let a = [[0.5, 0.5], [-1.0, 2.0]];
    let va = [[10.0, 0.0], [0.0, 20.0]];
    let proj = |x: [f64; 2]| -> [f64; 2] {
        let mut o = [0.0; 2];
        for j in 0..2 {
            o[j] = (x[0] * w[0][j] + x[1] * w[1][j]).max(0.0);
        }
        o
    };
    let mut expect = vec![];
    for pi in p {
        let pp = proj(pi);
        let s: Vec<f64> = a.iter().map(|&ai| {
            let aa = proj(ai);
            pp[0] * aa[0] + pp[1] * aa[1]
        }).collect();
        let z: f64 = s.iter().map(|x| x.exp()).sum();
        let b: Vec<f64> = s.iter().map(|x| x.exp() / z).collect();
        expect.push([b[0] * va[0][0] + b[1] * va[1][0], b[0] * va[0][1] + b[1] * va[1][1]]);
    }
    let mut tape = Tape::new();
    let sp = tape.constant(Tensor::from_rows(2, 2, p.concat()).unwrap());
    let sa = tape.constant(Tensor::from_rows(2, 2, a.concat()).unwrap());
    let vp = tape.constant(Tensor::zeros(2, 0));
    let vav = tape.constant(Tensor::from_rows(2, 2, va.concat()).unwrap());
    let out = soft_align(&mut tape, &store, &stage, sp, sa, vp, vav).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            assert!((tape.value(out).at(i, j) - expect[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn answer_permutation_invariance() {
    let mut store = ParamStore::<f64>::new();
    let stage = AlignStage::new(&mut store, "s", 3, 4, &mut rng(5)).unwrap();
    let sa = Tensor::uniform(3, 3, 1.0, &mut rng(6));
    let va = Tensor::uniform(3, 2, 1.0, &mut rng(7));
    let perm = [2, 0, 1];
    let sa2 = Tensor::from_fn(3, 3, |r, c| sa.at(perm[r], c));
    let va2 = Tensor::from_fn(3, 2, |r, c| va.at(perm[r], c));
    let mut tape = Tape::new();
    let sp = tape.constant(Tensor::uniform(4, 3, 1.0, &mut rng(8)));
    let vp = tape.constant(Tensor::zeros(4, 1));
    let (a1, v1, a2, v2) = (tape.constant(sa), tape.constant(va), tape.constant(sa2), tape.constant(va2));
    let o1 = soft_align(&mut tape, &store, &stage, sp, a1, vp, v1).unwrap();
    let o2 = soft_align(&mut tape, &store, &stage, sp, a2, vp, v2).unwrap();
    for (x, y) in tape.value(o1).data().iter().zip(tape.value(o2).data()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn output_shapes_at_full_width() {
    let mut store = ParamStore::<f64>::new();
    let dan = Dan::new(&mut store, cfg(6, 3, 300, true), &mut rng(9)).unwrap();
    let s = sample(4, 2, 6, 3, 10);
    let mut tape = Tape::new();
    let out = run(&dan, &store, &s, &mut tape);
    assert_eq!(tape.value(out.passage_contextual).dims(), (4, 300));
    assert_eq!(tape.value(out.answer_contextual.unwrap()).dims(), (2, 300));
    assert_eq!(tape.value(out.passage).dims(), (4, 300));
    assert_eq!(tape.value(out.word_level).dims(), (4, 6 + 3 + 6));
}

#[test]
fn zero_features_match_featureless_model() {
    let (word, feat, hidden) = (4, 3, 6);
    let mut with = ParamStore::<f64>::new();
    let dan = Dan::new(&mut with, cfg(word, feat, hidden, true), &mut rng(11)).unwrap();
    let mut without = ParamStore::<f64>::new();
    let plain = Dan::new(&mut without, cfg(word, 0, hidden, true), &mut rng(12)).unwrap();
    for (_, p) in with.iter() {
        let id = without.id(&p.name).unwrap();
        let target = &mut without.get_mut(id).value;
        if p.value.rows() == target.rows() {
            *target = p.value.clone();
        } else {
            // drop the weight rows that read the feature columns
            *target = Tensor::from_fn(target.rows(), target.cols(), |r, c| {
                let src = if r < word { r } else { r + feat };
                p.value.at(src, c)
            });
        }
    }
    let s = sample(3, 2, word, feat, 13);
    let zero = Sample { gp: s.gp.clone(), ga: s.ga.clone(), f: Tensor::zeros(3, feat) };
    let none = Sample { gp: s.gp.clone(), ga: s.ga.clone(), f: Tensor::zeros(3, 0) };
    let mut t1 = Tape::new();
    let o1 = run(&dan, &with, &zero, &mut t1);
    let mut t2 = Tape::new();
    let o2 = run(&plain, &without, &none, &mut t2);
    for (x, y) in t1.value(o1.passage).data().iter().zip(t2.value(o2.passage).data()) {
        assert!((x - y).abs() < 1e-12);
    }
}

#[test]
fn contextual_stage_single_token_by_hand() {
    let (word, feat, hidden) = (3, 2, 4);
    let mut store = ParamStore::<f64>::new();
    let dan = Dan::new(&mut store, cfg(word, feat, hidden, true), &mut rng(14)).unwrap();
    let s = sample(1, 1, word, feat, 15);
    let mut tape = Tape::new();
    let out = run(&dan, &store, &s, &mut tape);
    // with one answer token both alignments are plain concatenations
    let mut t = Tape::new();
    let gp = t.constant(s.gp.clone());
    let ga = t.constant(s.ga.clone());
    let f = t.constant(s.f.clone());
    let wl = t.hcat(&[gp, f, ga]).unwrap();
    let hp = dan.passage_rnn.encode(&mut t, &store, wl, 1).unwrap();
    let ha = dan.answer_rnn.encode(&mut t, &store, ga, 1).unwrap();
    let ctx = t.hcat(&[hp, ha]).unwrap();
    let x = dan.final_rnn.encode(&mut t, &store, ctx, 1).unwrap();
    assert_eq!(tape.value(out.passage).data(), t.value(x).data());
}

#[test]
fn uninformative_answer_gives_constant_aligned_part() {
    let mut store = ParamStore::<f64>::new();
    let stage = AlignStage::new(&mut store, "s", 2, 3, &mut rng(16)).unwrap();
    let mut tape = Tape::new();
    let sp = tape.constant(Tensor::uniform(5, 2, 1.0, &mut rng(17)));
    let sa = tape.constant(Tensor::uniform(3, 2, 1.0, &mut rng(18)));
    let vp = tape.constant(Tensor::zeros(5, 0));
    let va = tape.constant(Tensor::from_fn(3, 2, |_, c| c as f64 + 0.25));
    let out = soft_align(&mut tape, &store, &stage, sp, sa, vp, va).unwrap();
    let v = tape.value(out);
    for r in 1..5 {
        assert!((v.at(r, 0) - v.at(0, 0)).abs() < 1e-12 && (v.at(r, 1) - v.at(0, 1)).abs() < 1e-12);
    }
}

#[test]
fn end_to_end_gradcheck() {
    for (seed, use_dan) in [(20, true), (21, false)] {
        let mut store = ParamStore::<f64>::new();
        let dan = Dan::new(&mut store, cfg(4, 3, 6, use_dan), &mut rng(seed)).unwrap();
        let s = sample(5, 3, 4, 3, seed + 100);
        let report = check_params(
            &mut store,
            |st| {
                let mut tape = Tape::new();
                let out = run(&dan, st, &s, &mut tape);
                let l = readout(&mut tape, out.passage, seed);
                Ok((tape, l))
            },
            1e-6,
            Some(12),
        )
        .unwrap();
        assert!(report.max_rel_error <= 1e-4, "{report:?}");
    }
}

proptest! {
    #[test]
    fn beta_rows_are_distributions_and_aligned_part_is_bounded(seed in 0u64..1000, n in 1usize..6, l in 1usize..5) {
        let mut r = rng(seed);
        let mut store = ParamStore::<f64>::new();
        let stage = AlignStage::new(&mut store, "s", 3, 3, &mut r).unwrap();
        let mut tape = Tape::new();
        let sp = tape.constant(Tensor::uniform(n, 3, 2.0, &mut r));
        let sa = tape.constant(Tensor::uniform(l, 3, 2.0, &mut r));
        let va_t = Tensor::uniform(l, 2, 5.0, &mut r);
        let va = tape.constant(va_t.clone());
        let vp = tape.constant(Tensor::zeros(n, 0));
        let beta = stage.weights(&mut tape, &store, sp, sa).unwrap();
        for i in 0..n {
            let row = tape.value(beta).row_slice(i);
            prop_assert!(row.iter().all(|&b| b >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let out = soft_align(&mut tape, &store, &stage, sp, sa, vp, va).unwrap();
        for c in 0..2 {
            let lo = (0..l).map(|j| va_t.at(j, c)).fold(f64::INFINITY, f64::min);
            let hi = (0..l).map(|j| va_t.at(j, c)).fold(f64::NEG_INFINITY, f64::max);
            for i in 0..n {
                let v = tape.value(out).at(i, c);
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
