mod common;

use cokl_gcnn::seed;
use cokl_gcnn::smooth::{self, Side, SmoothMap};
use cokl_gcnn::tensor::{all_bit_eq, max_residual};
use cokl_gcnn::{Object, Shape, Tensor};
use common::{draw, port, random_chain, random_stage};
use proptest::prelude::*;

fn eval(f: &SmoothMap, x: &[Tensor]) -> Vec<Tensor> {
    f.evaluate(x).unwrap()
}

fn concat(a: &[Tensor], b: &[Tensor]) -> Vec<Tensor> {
    a.iter().chain(b).cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_associative(s in any::<u64>(), n in 1usize..5, k in prop::array::uniform4(1usize..5)) {
        let mut rng = seed::rng(s, "assoc", 0);
        let f = random_stage(&mut rng, n, k[0], k[1], false).unwrap();
        let g = random_stage(&mut rng, n, k[1], k[2], false).unwrap();
        let h = random_stage(&mut rng, n, k[2], k[3], false).unwrap();
        let x = draw(&mut rng, f.domain());
        let left = f.then(&g).unwrap().then(&h).unwrap();
        let right = f.then(&g.then(&h).unwrap()).unwrap();
        prop_assert!(all_bit_eq(&eval(&left, &x), &eval(&right, &x)));
    }

    #[test]
    fn identity_is_a_unit(s in any::<u64>(), n in 1usize..5, k in 1usize..5, k2 in 1usize..5) {
        let mut rng = seed::rng(s, "unit", 0);
        let f = random_stage(&mut rng, n, k, k2, false).unwrap();
        let x = draw(&mut rng, f.domain());
        let want = eval(&f, &x);
        let left = smooth::identity(f.domain()).then(&f).unwrap();
        let right = f.then(&smooth::identity(f.codomain())).unwrap();
        prop_assert!(all_bit_eq(&eval(&left, &x), &want));
        prop_assert!(all_bit_eq(&eval(&right, &x), &want));
    }

    #[test]
    fn reverse_follows_the_chain_rule(s in any::<u64>(), n in 1usize..5, k in prop::array::uniform3(1usize..5)) {
        let mut rng = seed::rng(s, "chain", 0);
        let f = random_stage(&mut rng, n, k[0], k[1], false).unwrap();
        let g = random_stage(&mut rng, n, k[1], k[2], false).unwrap();
        let x = draw(&mut rng, f.domain());
        let dz = draw(&mut rng, g.codomain());
        let whole = eval(&f.then(&g).unwrap().reverse().unwrap(), &concat(&x, &dz));
        let y = eval(&f, &x);
        let dy = eval(&g.reverse().unwrap(), &concat(&y, &dz));
        let staged = eval(&f.reverse().unwrap(), &concat(&x, &dy));
        prop_assert!(max_residual(&whole, &staged) <= 1e-12);
    }

    #[test]
    fn reverse_matches_finite_differences(s in any::<u64>(), n in 1usize..4, depth in 1usize..4) {
        let mut rng = seed::rng(s, "fd", 0);
        let widths: Vec<usize> = (0..=depth).map(|i| 1 + (s as usize >> (2 * i)) % 4).collect();
        let f = random_chain(&mut rng, n, &widths, true).unwrap();
        let x = draw(&mut rng, f.domain());
        let dy = draw(&mut rng, f.codomain());
        let got = eval(&f.reverse().unwrap(), &concat(&x, &dy));
        let want = smooth::fd_vjp_oracle(&f, &x, &dy, 1e-6).unwrap();
        prop_assert!(max_residual(&got, &want) <= 1e-5, "{:e}", max_residual(&got, &want));
    }

    #[test]
    fn reverse_is_additive_in_the_cotangent(s in any::<u64>(), n in 1usize..5, k in 1usize..5, k2 in 1usize..5) {
        let mut rng = seed::rng(s, "additive", 0);
        let f = random_stage(&mut rng, n, k, k2, false).unwrap();
        let r = f.reverse().unwrap();
        let x = draw(&mut rng, f.domain());
        let a = draw(&mut rng, f.codomain());
        let b = draw(&mut rng, f.codomain());
        let ab: Vec<Tensor> = a.iter().zip(&b).map(|(a, b)| a.add(b).unwrap()).collect();
        let sum: Vec<Tensor> = eval(&r, &concat(&x, &a))
            .iter()
            .zip(eval(&r, &concat(&x, &b)))
            .map(|(p, q)| p.add(&q).unwrap())
            .collect();
        prop_assert!(max_residual(&eval(&r, &concat(&x, &ab)), &sum) <= 1e-12);
    }

    #[test]
    fn copy_is_a_cocommutative_comonoid(s in any::<u64>(), r in 1usize..4, c in 1usize..4, ports in 1usize..3) {
        let mut rng = seed::rng(s, "comonoid", 0);
        let x = Object::new(vec![Shape::matrix(r, c); ports]);
        let v = draw(&mut rng, &x);
        let copy = smooth::copy(&x);
        let id = smooth::identity(&x);
        let counit_l = copy.then(&smooth::project(&x, &x, Side::Left)).unwrap();
        let counit_r = copy.then(&smooth::discard(&x).parallel(&id).unwrap()).unwrap();
        prop_assert!(all_bit_eq(&eval(&counit_l, &v), &v));
        prop_assert!(all_bit_eq(&eval(&counit_r, &v), &v));
        let swapped = copy.then(&smooth::swap(&x, &x)).unwrap();
        prop_assert!(all_bit_eq(&eval(&swapped, &v), &eval(&copy, &v)));
        let left = copy.then(&copy.parallel(&id).unwrap()).unwrap();
        let right = copy.then(&id.parallel(&copy).unwrap()).unwrap();
        prop_assert!(all_bit_eq(&eval(&left, &v), &eval(&right, &v)));
    }

    #[test]
    fn permutations_invert(s in any::<u64>(), sizes in prop::collection::vec(1usize..4, 1..5)) {
        let mut rng = seed::rng(s, "perm", 0);
        let x = Object::new(sizes.iter().map(|&k| Shape::vector(k)).collect::<Vec<_>>());
        let v = draw(&mut rng, &x);
        let mut perm: Vec<usize> = (0..sizes.len()).collect();
        perm.rotate_left(s as usize % sizes.len());
        let mut inverse = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        let forward = smooth::wire(&x, perm).unwrap();
        let back = smooth::wire(forward.codomain(), inverse).unwrap();
        prop_assert!(all_bit_eq(&eval(&forward.then(&back).unwrap(), &v), &v));
        let (a, b) = (port(1, sizes[0]), x.clone());
        let twice = smooth::swap(&a, &b).then(&smooth::swap(&b, &a)).unwrap();
        let ab = concat(&draw(&mut rng, &a), &v);
        prop_assert!(all_bit_eq(&eval(&twice, &ab), &ab));
    }

    #[test]
    fn text_round_trip_is_bit_exact(rows in 1usize..5, cols in 1usize..5, data in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 16)) {
        let t = Tensor::matrix(rows, cols, data[..rows * cols].to_vec()).unwrap();
        let back = Tensor::parse_text(&t.to_text()).unwrap();
        prop_assert!(back.bit_eq(&t));
        prop_assert_eq!(back.to_text(), t.to_text());
    }
}
