use proptest::prelude::*;
use yuoh_core::dataset::{parse_dataset_str, to_dataset_string};
use yuoh_core::diagnostics::{signaling, Direction};
use yuoh_core::exact::ExactCorrelators;
use yuoh_core::graph::canonicalize;
use yuoh_core::memory::entropy_bound;
use yuoh_core::qutrit::{born_probability, collapse, C64};
use yuoh_core::rays::{reference_graph, reference_sets};
use yuoh_core::sim::{classify, qrng_next_ray, EndReason, MeasurementRecord, ScriptedBits, Subsequence};
use yuoh_core::stats::{
    accumulate, expval_pair, expval_single, expval_triple, tally_sharded, witness_opt3, witness_yo, CountTables,
    StreamCounter,
};
use yuoh_core::{Campaign, NoiseConfig, Outcome, QutritState, RayId};

fn records_from(items: &[(u8, u32)]) -> Vec<MeasurementRecord> {
    items
        .iter()
        .enumerate()
        .map(|(k, &(r, count))| MeasurementRecord {
            ray: RayId::new(r as usize).unwrap(),
            outcome: classify(count, 5.5),
            photon_count: count,
            index: k as u64,
        })
        .collect()
}

fn stream() -> impl Strategy<Value = Vec<MeasurementRecord>> {
    prop::collection::vec((0u8..13, 0u32..30), 0..300).prop_map(|v| records_from(&v))
}

fn state() -> impl Strategy<Value = QutritState> {
    prop::array::uniform6(-1.0f64..1.0)
        .prop_filter("non-zero", |a| a.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|a| {
            QutritState::new([C64::new(a[0], a[1]), C64::new(a[2], a[3]), C64::new(a[4], a[5])]).unwrap()
        })
}

fn permutation() -> impl Strategy<Value = Vec<usize>> {
    Just((0..13).collect::<Vec<usize>>()).prop_shuffle()
}

fn sum(a: &CountTables, b: &CountTables) -> CountTables {
    let mut m = a.clone();
    m.merge(b);
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn merge_is_commutative_and_associative(a in stream(), b in stream(), c in stream()) {
        let (ta, tb, tc) = (accumulate(&a), accumulate(&b), accumulate(&c));
        prop_assert_eq!(sum(&ta, &tb), sum(&tb, &ta));
        prop_assert_eq!(sum(&sum(&ta, &tb), &tc), sum(&ta, &sum(&tb, &tc)));
    }

    #[test]
    fn window_counts_per_segment(s in stream()) {
        let t = accumulate(&s);
        let n = s.len() as u64;
        prop_assert_eq!(t.sum_n1(), n);
        prop_assert_eq!(t.total(), n);
        prop_assert_eq!(t.sum_n2(), n.saturating_sub(1));
        prop_assert_eq!(t.sum_n3(), n.saturating_sub(2));
    }

    #[test]
    fn stitched_shards_equal_single_pass(s in stream(), shards in 1usize..12) {
        let single = tally_sharded(&s, 1, true);
        prop_assert_eq!(&tally_sharded(&s, shards, true), &single);
        let mut direct = StreamCounter::new();
        for r in &s {
            direct.push(r);
        }
        prop_assert_eq!(direct.finish(), single);
    }

    #[test]
    fn split_loses_only_boundary_windows(s in stream(), cut in 0usize..300) {
        let cut = cut.min(s.len());
        let whole = accumulate(&s);
        let halves = sum(&accumulate(&s[..cut]), &accumulate(&s[cut..]));
        prop_assert_eq!(halves.sum_n1(), whole.sum_n1());
        let lost2 = whole.sum_n2() - halves.sum_n2();
        let lost3 = whole.sum_n3() - halves.sum_n3();
        prop_assert!(lost2 <= 1 && lost3 <= 2);
        if cut > 0 && cut < s.len() {
            prop_assert_eq!(lost2, 1);
        }
    }

    #[test]
    fn correlators_are_bounded_and_symmetric(s in stream(), u in 0usize..13, v in 0usize..13, w in 0usize..13) {
        let t = accumulate(&s);
        let (u, v, w) = (RayId::new(u).unwrap(), RayId::new(v).unwrap(), RayId::new(w).unwrap());
        if let Ok(e) = expval_single(&t, u) {
            prop_assert!(e.value.abs() <= 1.0 && e.std_error >= 0.0);
        }
        if u != v {
            let a = expval_pair(&t, u, v).ok();
            let b = expval_pair(&t, v, u).ok();
            prop_assert_eq!(&a, &b);
            if let Some(e) = a {
                prop_assert!(e.value.abs() <= 1.0);
            }
        }
        if u != v && v != w && u != w {
            let a = expval_triple(&t, u, v, w).ok();
            prop_assert_eq!(&a, &expval_triple(&t, w, u, v).ok());
            if let Some(e) = a {
                prop_assert!(e.value.abs() <= 1.0);
            }
        }
    }

    #[test]
    fn signaling_is_antisymmetric(s in stream(), u in 0usize..13, i in 0usize..13, dir in prop::bool::ANY) {
        let mut c = StreamCounter::new();
        for r in &s {
            c.push(r);
        }
        let tally = c.finish();
        let u = RayId::new(u).unwrap();
        let i = RayId::new(i).unwrap();
        let direction = if dir { Direction::Forward } else { Direction::Backward };
        let nb: Vec<RayId> = reference_graph().neighbors(u.index()).map(|k| RayId::new(k).unwrap()).collect();
        for (a, &v) in nb.iter().enumerate() {
            for &w in &nb[a + 1..] {
                let x = signaling(&tally.conditioned, u, v, w, i, direction);
                let y = signaling(&tally.conditioned, u, w, v, i, direction);
                if let (Ok(x), Ok(y)) = (x, y) {
                    prop_assert_eq!(x.s, -y.s);
                    prop_assert_eq!(x.ds, y.ds);
                    prop_assert!(x.s.abs() <= 1.0);
                }
            }
        }
    }

    #[test]
    fn canonicalize_is_permutation_invariant(perm in permutation()) {
        let g = reference_graph().relabeled(&perm);
        let c = canonicalize(&g).unwrap();
        prop_assert!(c.verified);
        prop_assert_eq!(&c.relabeled(&g), reference_graph());
        let mut degrees: Vec<usize> = (0..13).map(|v| g.degree(v)).collect();
        degrees.sort();
        prop_assert_eq!(degrees, vec![3, 3, 3, 3, 4, 4, 4, 4, 4, 4, 4, 4, 4]);
    }

    #[test]
    fn witnesses_are_state_independent(psi in state()) {
        let e = ExactCorrelators::pure(psi);
        prop_assert!((witness_yo(&e).unwrap().value - 25.0 / 3.0).abs() < 1e-12);
        prop_assert!((witness_opt3(&e).unwrap().value - 83.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn born_and_collapse(psi in state(), r in 0usize..13) {
        let dir = RayId::new(r).unwrap().ray().state;
        let p = born_probability(&psi, &dir);
        prop_assert!((0.0..=1.0).contains(&p));
        if p > 1e-9 {
            let b = collapse(&psi, &dir, Outcome::Bright).unwrap();
            prop_assert!((born_probability(&b, &dir) - 1.0).abs() < 1e-12);
        }
        if 1.0 - p > 1e-9 {
            let d = collapse(&psi, &dir, Outcome::Dark).unwrap();
            prop_assert!((d.norm() - 1.0).abs() < 1e-12);
            prop_assert!(born_probability(&d, &dir) < 1e-12);
        }
    }

    #[test]
    fn qrng_never_returns_invalid_codes(bits in prop::collection::vec(prop::bool::ANY, 4..200)) {
        let pattern: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        // a pattern that is all invalid codes would loop forever
        prop_assume!(pattern.as_bytes().chunks(4).any(|c| c.len() == 4 && !matches!(c, b"0000" | b"1110" | b"1111")));
        let mut src = ScriptedBits::new(&pattern);
        for _ in 0..20 {
            let r = qrng_next_ray(&mut src);
            prop_assert!(r.index() < 13);
        }
    }

    #[test]
    fn dataset_round_trip(subs in prop::collection::vec((0u8..13, prop::collection::vec((0u8..13, 0u32..40), 1..40), prop::bool::ANY), 0..8), seed in any::<u64>()) {
        let mut c = Campaign::empty(seed, NoiseConfig::default());
        c.min_len = 1;
        let mut index = 0u64;
        for (v0, recs, omit) in subs {
            let mut records = records_from(&recs);
            for r in &mut records {
                r.index = index;
                index += 1;
            }
            let ends_bright = records.last().unwrap().outcome == Outcome::Bright;
            let dark_run = records.iter().rev().take_while(|r| r.outcome == Outcome::Dark).count();
            let omitted = omit || !ends_bright;
            let purged = omitted && dark_run > c.purge_run_length;
            c.subsequences.push(Subsequence {
                v0: RayId::new(v0 as usize).unwrap(),
                records,
                purged,
                omitted,
                end_reason: if purged { EndReason::Purge } else if omitted { EndReason::Invalid } else { EndReason::BrightAfterMin },
            });
        }
        let text = to_dataset_string(&c);
        let back = parse_dataset_str(&text, None).unwrap();
        prop_assert_eq!(&back.campaign, &c);
        prop_assert_eq!(to_dataset_string(&back.campaign), text);
    }

    #[test]
    fn entropy_is_bounded(p in prop::collection::vec(0.0f64..1.0, 1..40)) {
        let s: f64 = p.iter().sum();
        prop_assume!(s > 1e-6);
        let q: Vec<f64> = p.iter().map(|x| x / s).collect();
        let h = entropy_bound(&q);
        prop_assert!(h >= -1e-12 && h <= (q.len() as f64).log2() + 1e-9);
    }
}

#[test]
fn synthetic_ideal_tables_give_ideal_witnesses() {
    // every single 2 dark : 1 bright, every edge pair never both bright, every triad exactly one bright
    let (d, b) = (Outcome::Dark, Outcome::Bright);
    let mut t = CountTables::new();
    for v in RayId::all() {
        t.add_n1(v, d, 2);
        t.add_n1(v, b, 1);
    }
    for &(u, v) in &reference_sets().edges {
        t.add_n2(u, v, b, d, 1);
        t.add_n2(u, v, d, b, 1);
        t.add_n2(u, v, d, d, 1);
    }
    for &(u, v, w) in &reference_sets().c3 {
        t.add_n3(u, v, w, b, d, d, 1);
        t.add_n3(u, v, w, d, b, d, 1);
        t.add_n3(u, v, w, d, d, b, 1);
    }
    assert!((witness_yo(&t).unwrap().value - 25.0 / 3.0).abs() < 1e-12);
    assert!((witness_opt3(&t).unwrap().value - 83.0 / 3.0).abs() < 1e-12);
}

#[test]
fn zero_correlations_give_zero_witnesses() {
    let (d, b) = (Outcome::Dark, Outcome::Bright);
    let mut t = CountTables::new();
    for v in RayId::all() {
        t.add_n1(v, d, 5);
        t.add_n1(v, b, 5);
    }
    for &(u, v) in &reference_sets().edges {
        t.add_n2(u, v, b, b, 1);
        t.add_n2(u, v, d, b, 1);
    }
    for &(u, v, w) in &reference_sets().c3 {
        t.add_n3(u, v, w, b, d, d, 1);
        t.add_n3(u, v, w, d, d, d, 1);
    }
    assert_eq!(witness_yo(&t).unwrap().value, 0.0);
    assert_eq!(witness_opt3(&t).unwrap().value, 0.0);
}
