//! Property tests for metric, map, word and lattice invariants.

use proptest::collection::vec;
use proptest::prelude::*;

use hlab::attractor::{
    attractor_by_words, attractor_by_words_exact, hb_step, iterate_attractor, ExactCloud,
    IterateOptions,
};
use hlab::ifs::{apply_map, compose_word, AffineContraction, DomainBox, ExactAffine1d, IifsSpec};
use hlab::lattice::{brute_force_fixed_subsets, f_union, subset_maximum, tk_gfp, SelfMapTable};
use hlab::metric::{
    diameter, directed_set_dist, directed_set_dist_scan, epsilon_prune, hausdorff_dist, point_dist,
    PointCloud,
};
use hlab::rational::{int, rat, to_f64};
use hlab::shift::{concat, right_shift, tail_bound, word_metric, Word, WordPrefix};

const TOL: f64 = 1e-12;

fn cloud(dim: usize, max_points: usize) -> impl Strategy<Value = PointCloud> {
    vec(-2.0f64..2.0, dim..=dim * max_points).prop_map(move |mut c| {
        c.truncate(c.len() / dim * dim);
        PointCloud::from_flat(dim, c, 0.0).unwrap()
    })
}

fn planar_pair() -> impl Strategy<Value = (PointCloud, PointCloud)> {
    (cloud(2, 40), cloud(2, 40))
}

/// Diagonal planar contractions mapping the unit square into itself.
fn planar_system() -> impl Strategy<Value = IifsSpec> {
    let map =
        (-0.45f64..0.45, -0.45f64..0.45, 0.0f64..1.0, 0.0f64..1.0).prop_map(|(dx, dy, u, v)| {
            let offset = |d: f64, t: f64| {
                let lo = (-d).max(0.0);
                let hi = 1.0 - d.max(0.0);
                lo + t * (hi - lo)
            };
            AffineContraction::new(
                vec![vec![dx, 0.0], vec![0.0, dy]],
                vec![offset(dx, u), offset(dy, v)],
                None,
                None,
            )
            .unwrap()
        });
    vec(map, 1..=3).prop_map(|maps| {
        IifsSpec::new(
            DomainBox::new(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap(),
            maps.into_iter()
                .enumerate()
                .map(|(k, f)| ((k + 1).to_string(), f))
                .collect(),
        )
        .unwrap()
    })
}

fn letters(alphabet: usize, len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Word> {
    vec(1..=alphabet, len).prop_map(|v| Word::new(v.into_iter().map(|k| k.to_string())))
}

fn prefix_pair(depth: usize) -> impl Strategy<Value = (WordPrefix, WordPrefix)> {
    (letters(3, depth..=depth), letters(3, depth..=depth)).prop_map(move |(a, b)| {
        (
            WordPrefix::new(a, depth).unwrap(),
            WordPrefix::new(b, depth).unwrap(),
        )
    })
}

fn table(n: usize) -> impl Strategy<Value = SelfMapTable> {
    vec(vec(0..n, n..=n), 1..=3).prop_map(move |tabs| {
        SelfMapTable::new(
            n,
            tabs.into_iter()
                .enumerate()
                .map(|(k, t)| (format!("f{k}"), t))
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hausdorff_is_a_metric((a, b) in planar_pair(), c in cloud(2, 40)) {
        let ab = hausdorff_dist(&a, &b).unwrap();
        prop_assert_eq!(hausdorff_dist(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(ab, hausdorff_dist(&b, &a).unwrap());
        let via = hausdorff_dist(&a, &c).unwrap() + hausdorff_dist(&c, &b).unwrap();
        prop_assert!(ab <= via + TOL);
    }

    #[test]
    fn directed_distance_vanishes_on_subsets((a, b) in planar_pair()) {
        let union = PointCloud::union([&a, &b], 0.0).unwrap();
        prop_assert_eq!(directed_set_dist(&a, &union).unwrap(), 0.0);
        let back = directed_set_dist(&union, &a).unwrap();
        prop_assert_eq!(back == 0.0, b.iter().all(|p| a.contains(p)));
    }

    #[test]
    fn tree_search_matches_linear_scan(a in cloud(2, 400), b in cloud(2, 400)) {
        prop_assert_eq!(
            directed_set_dist(&a, &b).unwrap(),
            directed_set_dist_scan(&a, &b).unwrap()
        );
    }

    #[test]
    fn one_dimensional_search_matches_scan(a in cloud(1, 60), b in cloud(1, 60)) {
        prop_assert_eq!(
            directed_set_dist(&a, &b).unwrap(),
            directed_set_dist_scan(&a, &b).unwrap()
        );
    }

    #[test]
    fn diameter_matches_all_pairs(a in cloud(2, 60)) {
        let points = a.to_points();
        let brute = points
            .iter()
            .flat_map(|p| points.iter().map(move |q| point_dist(p, q).unwrap()))
            .fold(0.0, f64::max);
        prop_assert_eq!(diameter(&a), brute);
    }

    #[test]
    fn pruning_stays_within_epsilon(a in cloud(2, 80), eps in 0.0f64..0.5) {
        let net = epsilon_prune(&a, eps).unwrap();
        prop_assert!(net.len() <= a.len());
        prop_assert!(net.iter().all(|p| a.contains(p)));
        prop_assert!(hausdorff_dist(&a, &net).unwrap() <= eps);
        // a net is eps-separated
        for (i, p) in net.iter().enumerate() {
            for q in net.iter().skip(i + 1) {
                let d = p.iter().zip(q).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                prop_assert!(d > eps);
            }
        }
    }

    #[test]
    fn maps_shrink_diameters(spec in planar_system(), a in cloud(2, 30)) {
        for m in spec.maps() {
            let image = apply_map(&m.map, &a).unwrap();
            prop_assert!(diameter(&image) <= m.map.lip_bound() * diameter(&a) + TOL);
        }
    }

    #[test]
    fn composed_words_contract_geometrically(spec in planar_system(), w in letters(3, 0..=8)) {
        let known = w.letters().iter().filter(|l| spec.position(l).is_ok());
        let w = Word::new(known.cloned().collect::<Vec<_>>());
        let f = compose_word(&spec, &w).unwrap();
        let c = spec.contraction_c();
        prop_assert!(f.lip_bound() <= c.powi(w.len() as i32) * (1.0 + 1e-9) + TOL);
    }

    #[test]
    fn iteration_agrees_with_word_fixed_points(spec in planar_system()) {
        let a = iterate_attractor(&spec, None, IterateOptions::steps(6)).unwrap();
        let m = 5;
        let words = attractor_by_words(&spec, m, 1 << 20).unwrap();
        let c = spec.contraction_c();
        // fixed points lie on the attractor and the depth-m cylinders cover it
        let bound = a.total_error() + c.powi(m as i32) * spec.domain_box().diameter() + 1e-9;
        prop_assert!(hausdorff_dist(&a.cloud, &words).unwrap() <= bound);
    }

    #[test]
    fn one_step_moves_at_most_the_error(spec in planar_system()) {
        let a = iterate_attractor(&spec, None, IterateOptions::steps(5)).unwrap();
        let next = hb_step(&spec, &a.cloud, 0.0).unwrap();
        let bound = (1.0 + spec.contraction_c()) * a.total_error() + 1e-9;
        prop_assert!(hausdorff_dist(&a.cloud, &next).unwrap() <= bound);
    }

    #[test]
    fn word_metric_brackets((a, b) in prefix_pair(7), (c, _) in prefix_pair(7)) {
        let ab = word_metric(&a, &b).unwrap();
        prop_assert_eq!(&ab.upper - &ab.lower, tail_bound(7));
        prop_assert_eq!(&ab, &word_metric(&b, &a).unwrap());
        prop_assert_eq!(word_metric(&a, &a).unwrap().lower, int(0));
        // the lower bound is itself a metric on prefixes
        let ac = word_metric(&a, &c).unwrap().lower;
        let cb = word_metric(&c, &b).unwrap().lower;
        prop_assert!(ab.lower <= ac + cb);
        prop_assert!(ab.upper <= rat(1, 2));
    }

    #[test]
    fn prepending_a_letter_scales_by_a_third((a, b) in prefix_pair(6), letter in 1usize..=3) {
        let l = letter.to_string();
        let before = word_metric(&a, &b).unwrap();
        let after = word_metric(&right_shift(&l, &a), &right_shift(&l, &b)).unwrap();
        prop_assert_eq!(after.lower, before.lower / int(3));
    }

    #[test]
    fn concat_adds_lengths(a in letters(3, 0..=6), b in letters(3, 0..=6)) {
        let ab = concat(&a, &b);
        prop_assert_eq!(ab.len(), a.len() + b.len());
        prop_assert!(a.is_prefix_of(&ab));
    }

    #[test]
    fn tk_chain_decreases_to_the_greatest_fixed_point(n in 1usize..=8, seed in any::<u64>()) {
        let t = table_from_seed(n, seed);
        let tk = tk_gfp(&t, None).unwrap();
        prop_assert!(tk.verified_fixed);
        for w in tk.chain.windows(2) {
            prop_assert!(w[1].is_subset(&w[0]) && w[1] != w[0]);
        }
        prop_assert_eq!(f_union(&t, &tk.gfp).unwrap(), tk.gfp.clone());
        let fixed = brute_force_fixed_subsets(&t).unwrap();
        prop_assert_eq!(subset_maximum(&fixed), Some(&tk.gfp));
    }

    #[test]
    fn random_tables_have_a_greatest_fixed_point(t in table(6)) {
        let tk = tk_gfp(&t, None).unwrap();
        let fixed = brute_force_fixed_subsets(&t).unwrap();
        prop_assert!(fixed.iter().all(|s| s.is_subset(&tk.gfp)));
    }

    #[test]
    fn exact_and_float_hausdorff_agree(n in 1usize..=6, shift in 0i64..9) {
        let spec = IifsSpec::exact_1d(
            int(0),
            int(1),
            vec![
                ("1".into(), ExactAffine1d::new(rat(1, 3), int(0))),
                ("2".into(), ExactAffine1d::new(rat(1, 3), rat(2, 3))),
            ],
        )
        .unwrap();
        let words = attractor_by_words_exact(&spec, n, 1 << 12).unwrap();
        let moved = ExactCloud::new(
            words.points().iter().map(|x| (x + rat(shift, 9)) / int(2)).collect(),
        )
        .unwrap();
        let exact = to_f64(&words.hausdorff(&moved));
        let float = hausdorff_dist(&words.to_cloud().unwrap(), &moved.to_cloud().unwrap()).unwrap();
        prop_assert!((exact - float).abs() <= 1e-15);
    }
}

fn table_from_seed(n: usize, seed: u64) -> SelfMapTable {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(1..=3);
    let maps = (0..k)
        .map(|m| {
            (
                format!("f{m}"),
                (0..n).map(|_| rng.gen_range(0..n)).collect(),
            )
        })
        .collect();
    SelfMapTable::new(n, maps).unwrap()
}
