mod common;

use common::*;
use iforms::algebra::{IForm, SlotSet};
use iforms::calculus::{differential, kappa, Permutation};
use iforms::cli::{parse, parse_form, print};
use iforms::diffiety::{Adapter, Patch};
use iforms::linalg::{kernel_basis, membership, RationalMatrix};
use iforms::poly::{q, Q};
use proptest::prelude::*;

fn homogeneous(a: &IForm) -> Vec<(usize, IForm)> {
    a.homogeneous_components()
        .into_iter()
        .map(|(d, f)| (d.0.iter().sum::<u32>() as usize, f))
        .collect()
}

fn sign(n: usize) -> Q {
    q(if n.is_multiple_of(2) { 1 } else { -1 })
}

fn perm(k: usize, seed: u64) -> Permutation {
    use rand::seq::SliceRandom;
    let mut v: Vec<usize> = (1..=k).collect();
    v.shuffle(&mut rng(seed));
    Permutation::new(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn differentials_square_to_zero(seed in any::<u64>(), k in 1usize..=3) {
        let a = random_form(&mut rng(seed), k, &Patch::jet(3).vars());
        for m in 1..=k {
            let dm = differential(m, &a).unwrap();
            prop_assert!(differential(m, &dm).unwrap().is_zero());
            for l in 1..=k {
                let s = differential(l, &dm).unwrap().add(&differential(m, &differential(l, &a).unwrap()).unwrap()).unwrap();
                prop_assert!(m == l || s.is_zero());
            }
        }
    }

    #[test]
    fn leibniz_rule(s1 in any::<u64>(), s2 in any::<u64>(), k in 1usize..=3) {
        let vars = Patch::jet(3).vars();
        let a = random_form(&mut rng(s1), k, &vars);
        let b = random_form(&mut rng(s2), k, &vars);
        for (deg, ai) in homogeneous(&a) {
            for m in 1..=k {
                let lhs = differential(m, &ai.wedge(&b).unwrap()).unwrap();
                let rhs = differential(m, &ai).unwrap().wedge(&b).unwrap()
                    .add(&ai.wedge(&differential(m, &b).unwrap()).unwrap().scale(&sign(deg))).unwrap();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn graded_commutativity(s1 in any::<u64>(), s2 in any::<u64>(), k in 1usize..=3) {
        let vars = Patch::jet(2).vars();
        let a = random_form(&mut rng(s1), k, &vars);
        let b = random_form(&mut rng(s2), k, &vars);
        for (da, ai) in homogeneous(&a) {
            for (db, bi) in homogeneous(&b) {
                prop_assert_eq!(ai.wedge(&bi).unwrap(), bi.wedge(&ai).unwrap().scale(&sign(da * db)));
            }
        }
    }

    #[test]
    fn kappa_is_an_action_commuting_with_d(seed in any::<u64>(), k in 1usize..=4) {
        let a = random_form(&mut rng(seed), k, &Patch::jet(2).vars());
        let s = perm(k, seed ^ 1);
        let r = perm(k, seed ^ 2);
        prop_assert_eq!(kappa(&s, &kappa(&r, &a).unwrap()).unwrap(), kappa(&s.compose(&r), &a).unwrap());
        for m in 1..=k {
            prop_assert_eq!(
                kappa(&s, &differential(m, &a).unwrap()).unwrap(),
                differential(s.image(m), &kappa(&s, &a).unwrap()).unwrap()
            );
        }
    }

    #[test]
    fn render_parse_round_trip(seed in any::<u64>(), k in 1usize..=3) {
        let patch = Patch::jet(3);
        let a = random_form(&mut rng(seed), k, &patch.vars());
        let text = a.render(&patch);
        prop_assert_eq!(parse_form(&text, &patch, k).unwrap(), a);
        let ast = parse(&text, &patch, k).unwrap();
        prop_assert_eq!(parse(&print(&ast, &patch), &patch, k).unwrap(), ast);
    }

    #[test]
    fn adapted_round_trip(seed in any::<u64>(), k in 1usize..=2) {
        let patch = Patch::jet(7);
        let ad = Adapter::new(&patch, k, SlotSet::single(k)).unwrap();
        let a = random_form(&mut rng(seed), k, &Patch::jet(3).vars());
        let adapted = ad.to_adapted(&a).unwrap();
        prop_assert_eq!(ad.to_raw(&adapted).unwrap(), a.clone());
        for m in 1..=k {
            prop_assert_eq!(
                ad.to_raw(&ad.differential(m, &adapted).unwrap()).unwrap(),
                differential(m, &a).unwrap()
            );
        }
    }

    #[test]
    fn rank_nullity(rows in prop::collection::vec(prop::collection::vec(-3i64..=3, 5), 1..6)) {
        let refs: Vec<&[i64]> = rows.iter().map(|r| r.as_slice()).collect();
        let m = RationalMatrix::from_i64_rows(&refs);
        let ker = kernel_basis(&m);
        prop_assert_eq!(m.rank() + ker.len(), m.ncols());
        for v in &ker.vectors {
            prop_assert!(m.apply(v).is_empty());
        }
        for (j, c) in m.columns().iter().enumerate() {
            let found = membership(c, &iforms::linalg::SubspaceBasis::from_echelon(&m.image())).unwrap();
            prop_assert!(found.is_some(), "column {} not in the image", j);
        }
    }
}
