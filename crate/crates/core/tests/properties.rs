use proptest::prelude::*;

use vcsp::algebra::{
    build_multiset_structure, check_fractional_polymorphism, min_op, max_op, FractionalOperation, Operation,
};
use vcsp::blp::{blp_value, solve_via_blp};
use vcsp::format::{parse_structure, print_structure};
use vcsp::gallery::{random_instance, random_language_with_multimorphism};
use vcsp::oracle::{brute_force_opt, DEFAULT_BUDGET};
use vcsp::osac::{osac_primal_value, osac_value};
use vcsp::{measure, Assignment, ExtendedRational, Rational, Signature, Symbol, ValuedStructure};

fn signature() -> Signature {
    Signature::new(vec![Symbol::new("f", 2), Symbol::new("u", 1)]).unwrap()
}

fn entry(allow_inf: bool) -> impl Strategy<Value = ExtendedRational> {
    let finite = (0i64..=8, 1i64..=3).prop_map(|(p, q)| ExtendedRational::from(Rational::new(p, q)));
    if allow_inf {
        prop_oneof![4 => finite, 1 => Just(ExtendedRational::Infinity)].boxed()
    } else {
        finite.boxed()
    }
}

fn language(allow_inf: bool) -> impl Strategy<Value = ValuedStructure> {
    (2usize..=3).prop_flat_map(move |d| {
        (prop::collection::vec(entry(allow_inf), d * d), prop::collection::vec(entry(allow_inf), d))
            .prop_map(move |(f, u)| ValuedStructure::new(signature(), d, vec![f, u]).unwrap())
    })
}

fn add(a: &ValuedStructure, b: &ValuedStructure) -> ValuedStructure {
    ValuedStructure::from_fn(a.signature().clone(), a.domain_size(), |s, t| a.cost(s, t) + b.cost(s, t))
}

fn le(a: &ExtendedRational, b: &ExtendedRational) -> bool {
    a <= b
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn measure_is_additive_and_homogeneous(lang in language(true), s1 in 0u64..1000, s2 in 0u64..1000, c in 1i64..5) {
        let i1 = random_instance(&lang, 3, 0.5, s1);
        let i2 = random_instance(&lang, 3, 0.5, s2);
        let sum = add(&i1, &i2);
        let c = Rational::from_integer(c);
        for h in 0..lang.domain_size().pow(3) {
            let d = lang.domain_size();
            let h = Assignment::new(vec![h / (d * d), (h / d) % d, h % d], d).unwrap();
            let m1 = measure(&i1, &lang, &h).unwrap();
            let m2 = measure(&i2, &lang, &h).unwrap();
            prop_assert_eq!(measure(&sum, &lang, &h).unwrap(), &m1 + &m2);
            prop_assert_eq!(measure(&i1.scaled(&c), &lang, &h).unwrap(), m1.mul_rational(&c));
        }
    }

    #[test]
    fn relaxation_bounds_the_optimum(lang in language(true), seed in 0u64..10_000) {
        let inst = random_instance(&lang, 4, 0.4, seed);
        let blp = blp_value(&inst, &lang).unwrap();
        let opt = brute_force_opt(&inst, &lang, DEFAULT_BUDGET).unwrap().opt_value;
        prop_assert!(le(&blp, &opt), "blp {} > opt {}", blp, opt);
    }

    #[test]
    fn osac_sits_between_relaxation_and_optimum(lang in language(false), seed in 0u64..10_000) {
        let inst = random_instance(&lang, 4, 0.4, seed);
        let blp = blp_value(&inst, &lang).unwrap();
        let dual = osac_value(&inst, &lang).unwrap();
        let primal = osac_primal_value(&inst, &lang).unwrap();
        let opt = brute_force_opt(&inst, &lang, DEFAULT_BUDGET).unwrap().opt_value;
        prop_assert_eq!(&primal, &dual);
        prop_assert!(le(&blp, &dual) && le(&dual, &opt), "{} {} {}", blp, dual, opt);
    }

    #[test]
    fn self_reduction_returns_optimal_assignments(lang in language(true), seed in 0u64..10_000) {
        let inst = random_instance(&lang, 4, 0.4, seed);
        let (value, h) = solve_via_blp(&inst, &lang).unwrap();
        prop_assert_eq!(&value, &blp_value(&inst, &lang).unwrap());
        if let Some(h) = h {
            prop_assert_eq!(measure(&inst, &lang, &h).unwrap(), value.clone());
            prop_assert_eq!(brute_force_opt(&inst, &lang, DEFAULT_BUDGET).unwrap().opt_value, value);
        }
    }

    #[test]
    fn structure_files_round_trip(lang in language(true)) {
        let text = print_structure(&lang);
        let back = parse_structure(&text).unwrap();
        prop_assert_eq!(&back, &lang);
        prop_assert_eq!(print_structure(&back), text);
    }

    #[test]
    fn uniform_projections_are_fractional_polymorphisms(lang in language(true), m in 2usize..=3) {
        let d = lang.domain_size();
        let omega = FractionalOperation::uniform((0..m).map(|i| Operation::projection(d, m, i)).collect()).unwrap();
        prop_assert!(check_fractional_polymorphism(&lang, &omega).unwrap().is_ok());
    }

    #[test]
    fn constant_multisets_recover_the_language(lang in language(true), m in 2usize..=3) {
        let (pm, ms) = build_multiset_structure(&lang, m).unwrap();
        let d = lang.domain_size();
        for a in 0..d {
            for b in 0..d {
                let (ia, ib) = (ms.index_of(&vec![a; m]).unwrap(), ms.index_of(&vec![b; m]).unwrap());
                prop_assert_eq!(pm.cost(0, &[ia, ib]), lang.cost(0, &[a, b]));
            }
            prop_assert_eq!(pm.cost(1, &[ms.index_of(&vec![a; m]).unwrap()]), lang.cost(1, &[a]));
        }
    }

    #[test]
    fn submodular_chains_are_solved_exactly(d in 2usize..=3, lang_seed in 0u64..1000, seed in 0u64..1000) {
        let lang = random_language_with_multimorphism(&min_op(d), &max_op(d), &[2, 1], 0.0, lang_seed).unwrap();
        let inst = random_instance(&lang, 5, 0.4, seed);
        let opt = brute_force_opt(&inst, &lang, DEFAULT_BUDGET).unwrap();
        prop_assert_eq!(blp_value(&inst, &lang).unwrap(), opt.opt_value.clone());
        let (value, h) = solve_via_blp(&inst, &lang).unwrap();
        prop_assert_eq!(&value, &opt.opt_value);
        prop_assert!(h.is_some());
    }
}
