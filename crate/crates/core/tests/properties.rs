use gibbslz::estimators::{eigencount_by_log_weights, eigencount_oracle, grassberger_estimate};
use gibbslz::lattice::Region;
use gibbslz::lzparse::{decode, encode, lz_parse};
use gibbslz::matchlen::{
    match_lengths_1d, match_lengths_brute, match_lengths_hashed, truncate, MatchLengthField,
};
use gibbslz::source::{
    entropy_from_exponent, log_weight, sample_array, ModelParams, OccupationArray, Statistics,
};
use proptest::prelude::*;

fn stats() -> impl Strategy<Value = Statistics> {
    prop_oneof![Just(Statistics::Bose), Just(Statistics::Fermi)]
}

fn values_1d(max_len: usize) -> impl Strategy<Value = (Statistics, Vec<u32>)> {
    stats().prop_flat_map(move |s| {
        let top: u32 = if s == Statistics::Fermi { 1 } else { 3 };
        (Just(s), prop::collection::vec(0..=top, 1..=max_len))
    })
}

/// Buffer, window offset and window length within it.
fn array_and_window(max_len: usize) -> impl Strategy<Value = (Statistics, Vec<u32>, usize, usize, bool)> {
    values_1d(max_len).prop_flat_map(|(s, v)| {
        let n = v.len();
        (Just(s), Just(v), 0..n).prop_flat_map(move |(s, v, off)| {
            (Just(s), Just(v), Just(off), 1..=n - off, any::<bool>())
        })
    })
}

fn array_1d(s: Statistics, v: Vec<u32>, vacuum: bool) -> OccupationArray {
    OccupationArray::from_1d(v, s).with_vacuum_outside(vacuum)
}

fn field_csv(lengths: &[Option<u32>]) -> MatchLengthField {
    let mut text = String::from("x1,R,saturated\n");
    for (i, r) in lengths.iter().enumerate() {
        let r = r.map_or("inf".to_string(), |r| r.to_string());
        text.push_str(&format!("{},{r},false\n", i + 1));
    }
    MatchLengthField::parse_csv(&text).unwrap()
}

/// Shannon entropy of the mode law by direct summation.
fn series_entropy(s: Statistics, x: f64) -> f64 {
    let q = (-x).exp();
    match s {
        Statistics::Fermi => {
            let p = q / (1.0 + q);
            -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
        }
        Statistics::Bose => {
            let mut h = 0.0;
            let mut p = 1.0 - q;
            while p > 1e-300 {
                h -= p * p.ln();
                p *= q;
            }
            h
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn suffix_path_matches_brute((s, v, off, len, vacuum) in array_and_window(80)) {
        let a = array_1d(s, v, vacuum);
        let w = Region::cube(1 + off as i64, len, 1);
        prop_assert_eq!(match_lengths_1d(&a, &w).unwrap(), match_lengths_brute(&a, &w).unwrap());
    }

    #[test]
    fn truncation_never_shortens_matches((s, v, off, len, _) in array_and_window(60), m in 1u32..3) {
        let a = array_1d(s, v, true);
        let w = Region::cube(1 + off as i64, len, 1);
        let before = match_lengths_1d(&a, &w).unwrap();
        let after = match_lengths_1d(&truncate(&a, m).unwrap(), &w).unwrap();
        for (x, y) in before.lengths().iter().zip(after.lengths()) {
            // None is unbounded and sorts last
            prop_assert!(y.map_or(u64::MAX, u64::from) >= x.map_or(u64::MAX, u64::from));
        }
    }

    #[test]
    fn larger_window_never_shortens_matches((s, v, off, len, _) in array_and_window(60)) {
        let a = array_1d(s, v.clone(), true);
        let small = Region::cube(1 + off as i64, len, 1);
        let big = Region::cube(1, v.len(), 1);
        let fs = match_lengths_1d(&a, &small).unwrap();
        let fb = match_lengths_1d(&a, &big).unwrap();
        for site in small.sites() {
            let x = fs.get(&site).unwrap().map_or(u64::MAX, u64::from);
            let y = fb.get(&site).unwrap().map_or(u64::MAX, u64::from);
            prop_assert!(y >= x);
        }
    }

    #[test]
    fn grassberger_decreases_when_lengths_grow(
        base in prop::collection::vec(prop::option::weighted(0.9, 1u32..40), 1..60),
        bumps in prop::collection::vec(0u32..5, 60),
        l in 16u64..5000,
    ) {
        let grown: Vec<Option<u32>> = base.iter().zip(&bumps).map(|(r, b)| r.map(|r| r + b)).collect();
        let g0 = grassberger_estimate(&field_csv(&base), l, 1.0, 1).unwrap();
        let g1 = grassberger_estimate(&field_csv(&grown), l, 1.0, 1).unwrap();
        prop_assert!(g1 <= g0 + 1e-15 * g0.abs());
    }

    #[test]
    fn grassberger_equals_sum_over_dump((s, v, off, len, vacuum) in array_and_window(80), l in 8u64..4096) {
        let a = array_1d(s, v, vacuum);
        let w = Region::cube(1 + off as i64, len, 1);
        let field = match_lengths_1d(&a, &w).unwrap();
        prop_assume!(field.saturation_count() == 0);
        let mut buf = Vec::new();
        field.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lf = l as f64;
        let mut hand = 0.0;
        for row in text.lines().skip(1) {
            let r = row.split(',').nth(1).unwrap();
            if r != "inf" {
                hand += lf.ln() / (lf * r.parse::<f64>().unwrap());
            }
        }
        let reparsed = MatchLengthField::parse_csv(&text).unwrap();
        let est = grassberger_estimate(&reparsed, l, 1.0, 1).unwrap();
        prop_assert!((est - hand).abs() <= 1e-12 * hand.abs().max(1.0));
    }

    #[test]
    fn lz_words_are_new_and_tile_the_input((_, v) in values_1d(400)) {
        let p = lz_parse(&v);
        let mut seen = std::collections::HashSet::new();
        let mut at = 1;
        for i in 0..p.word_count() {
            prop_assert_eq!(p.starts()[i], at);
            let w = &v[at - 1..at - 1 + p.lengths()[i]];
            prop_assert!(seen.insert(w.to_vec()));
            at += p.lengths()[i];
        }
        prop_assert_eq!(at - 1 + p.remainder_length(), v.len());
        if p.remainder_length() > 0 {
            prop_assert!(seen.contains(&v[at - 1..].to_vec()));
        }
        prop_assert_eq!(decode(&encode(&p)).unwrap(), v);
    }

    #[test]
    fn mode_entropy_matches_direct_sum(s in stats(), x in 0.01f64..30.0) {
        let closed = entropy_from_exponent(s, x).unwrap();
        prop_assert!((closed - series_entropy(s, x)).abs() < 1e-10);
    }

    #[test]
    fn sampling_is_deterministic_and_local(
        s in stats(),
        seed in any::<u64>(),
        l in 4u64..200,
        lo in -5i64..5,
        side in 1usize..30,
        sub in 0usize..30,
    ) {
        let params = if s == Statistics::Bose {
            ModelParams::bose(1.0, 1.0, 1, l).unwrap()
        } else {
            ModelParams::fermi(1.0, 0.0, 1, l).unwrap()
        };
        let region = Region::cube(lo, side, 1);
        let a = sample_array(&params, &region, seed).unwrap();
        prop_assert_eq!(&a, &sample_array(&params, &region, seed).unwrap());
        let inner = Region::cube(lo + (sub % side) as i64, side - sub % side, 1);
        let b = sample_array(&params, &inner, seed).unwrap();
        let restricted = a.restrict(&inner).unwrap();
        prop_assert_eq!(restricted.values(), b.values());
        let lw = log_weight(&params, &a, &region).unwrap();
        let hand: f64 = region
            .sites()
            .map(|n| -(a.get(&n).unwrap() as f64) * params.exponent(&n))
            .sum();
        prop_assert!((lw - hand).abs() <= 1e-12 * hand.abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hashed_path_matches_brute_2d(
        s in stats(),
        seed in any::<u64>(),
        ext in (2usize..9, 2usize..9),
        win in (1usize..9, 1usize..9),
        vacuum in any::<bool>(),
    ) {
        let region = Region::new(vec![1, 1], vec![ext.0, ext.1]).unwrap();
        let mut rng = gibbslz::rng::SplitMix::new(seed);
        let top = if s == Statistics::Fermi { 2 } else { 3 };
        let values = (0..region.len()).map(|_| rng.below(top) as u32).collect();
        let a = OccupationArray::from_values(region, values, s).unwrap().with_vacuum_outside(vacuum);
        let w = Region::new(vec![1, 1], vec![win.0.min(ext.0), win.1.min(ext.1)]).unwrap();
        prop_assert_eq!(match_lengths_hashed(&a, &w).unwrap(), match_lengths_brute(&a, &w).unwrap());
    }

    #[test]
    fn eigen_count_monotone(l in 4u64..40, mu in -2.0f64..2.0, budget in 1usize..12) {
        let params = ModelParams::fermi(1.0, mu, 1, l).unwrap();
        let budget = budget.min(l as usize);
        let mut last = u64::MAX;
        for eps in [0.01, 0.1, 0.5] {
            let a = eigencount_oracle(&params, budget, eps).unwrap().count;
            prop_assert_eq!(a, eigencount_by_log_weights(&params, budget, eps).unwrap().count);
            prop_assert!(a <= last);
            last = a;
        }
        if budget < l as usize {
            let small = eigencount_oracle(&params, budget, 0.1).unwrap().count;
            let large = eigencount_oracle(&params, budget + 1, 0.1).unwrap().count;
            prop_assert!(large >= small);
        }
    }
}
