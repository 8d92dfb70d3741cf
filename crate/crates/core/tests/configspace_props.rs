use std::collections::HashSet;

use dpsh::configspace::{Condition, ConfigSpace, Configuration, NormalizedPoint, ParamDomain};
use dpsh::operators::standard_catalog;
use dpsh::pipeline::{PipelinePrototype, PipelineSpace};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug)]
enum DimSpec {
    Int(usize),
    Cat(usize),
    Bool,
}

fn dim_spec() -> impl Strategy<Value = DimSpec> {
    prop_oneof![
        (1usize..5).prop_map(DimSpec::Int),
        (2usize..4).prop_map(DimSpec::Cat),
        Just(DimSpec::Bool),
    ]
}

/// Random conditional spaces: each dimension may hang off an earlier one
/// through a random non-empty value subset.
fn space() -> impl Strategy<Value = ConfigSpace> {
    prop::collection::vec((dim_spec(), any::<u64>(), any::<bool>()), 1..5).prop_map(|specs| {
        let dims: Vec<ParamDomain> = specs
            .iter()
            .enumerate()
            .map(|(i, (s, _, _))| {
                let name = format!("d{i}");
                match s {
                    DimSpec::Int(n) => ParamDomain::int_grid(&name, (0..*n as i64).map(|v| v * 3 - 2)),
                    DimSpec::Cat(n) => ParamDomain::categorical(&name, (0..*n).map(|v| format!("v{v}"))),
                    DimSpec::Bool => ParamDomain::boolean(&name),
                }
            })
            .collect();
        let mut conditions = Vec::new();
        for (i, (_, pick, conditional)) in specs.iter().enumerate().skip(1) {
            if !conditional {
                continue;
            }
            let parent = (*pick as usize) % i;
            let dom = &dims[parent].domain;
            let mask = (pick >> 8) as usize % ((1 << dom.len()) - 1) + 1;
            let any_of: Vec<_> = (0..dom.len())
                .filter(|b| mask >> b & 1 == 1)
                .map(|b| dom.value(b))
                .collect();
            conditions.push(Condition::new(&format!("d{i}"), &format!("d{parent}"), any_of));
        }
        ConfigSpace::new("random", dims, conditions).unwrap()
    })
}

fn numeric_space() -> impl Strategy<Value = ConfigSpace> {
    prop::collection::vec(prop::collection::btree_set(-50i64..50, 1..6), 1..4).prop_map(|grids| {
        let dims = grids
            .into_iter()
            .enumerate()
            .map(|(i, g)| ParamDomain::int_grid(&format!("n{i}"), g))
            .collect();
        ConfigSpace::product("numeric", dims).unwrap()
    })
}

proptest! {
    #[test]
    fn enumeration_matches_cardinality(space in space()) {
        let all: Vec<Configuration> = space.enumerate().collect();
        prop_assert_eq!(all.len() as u128, space.cardinality());
        let distinct: HashSet<_> = all.iter().cloned().collect();
        prop_assert_eq!(distinct.len(), all.len());
        for c in &all {
            prop_assert!(space.is_valid(c));
        }
        prop_assert_eq!(&all[0], &space.first());
        prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn samples_are_valid_and_reach_every_point(space in space(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let all: HashSet<Configuration> = space.enumerate().collect();
        for _ in 0..200 {
            let c = space.sample(&mut rng);
            prop_assert!(all.contains(&c));
        }
    }

    #[test]
    fn json_round_trip(space in space()) {
        for c in space.enumerate() {
            let back = space.from_json(&space.to_json(&c)).unwrap();
            prop_assert_eq!(back, c);
        }
        let doc = serde_json::to_string(&space).unwrap();
        let back: ConfigSpace = serde_json::from_str(&doc).unwrap();
        prop_assert_eq!(back, space);
    }

    #[test]
    fn normalization_round_trip(space in numeric_space()) {
        for c in space.enumerate() {
            let n = space.normalize(&c).unwrap();
            prop_assert!(n.0.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert_eq!(space.denormalize(&n).unwrap(), c);
        }
    }

    #[test]
    fn l1_is_a_metric(space in numeric_space(), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let all: Vec<NormalizedPoint> = space.enumerate().map(|c| space.normalize(&c).unwrap()).collect();
        let (a, b) = (&all[i.index(all.len())], &all[j.index(all.len())]);
        prop_assert_eq!(a.l1(b), b.l1(a));
        prop_assert!(a.l1(b) >= 0.0 && a.l1(b) <= space.num_dims() as f64);
        prop_assert_eq!(a.l1(a), 0.0);
    }

    #[test]
    fn union_splits_back(a in space(), b in numeric_space()) {
        let joint = ConfigSpace::union("joint", &a, &b).unwrap();
        prop_assert_eq!(joint.cardinality(), a.cardinality() * b.cardinality());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c = joint.sample(&mut rng);
            let (x, y) = c.split_at(a.num_dims());
            prop_assert!(a.is_valid(&x) && b.is_valid(&y));
            prop_assert_eq!(Configuration::concat(&x, &y), c);
        }
    }
}

#[test]
fn pipeline_space_enumerates_and_decodes() {
    let proto = PipelinePrototype::standard();
    let catalog = standard_catalog(4);
    let ps = PipelineSpace::new(&proto, &catalog).unwrap();
    let mut n = 0;
    for c in ps.space().enumerate() {
        let inst = ps.decode(&c).unwrap();
        assert_eq!(ps.encode(&inst).unwrap(), c);
        n += 1;
    }
    assert_eq!(n, 4750);
}
