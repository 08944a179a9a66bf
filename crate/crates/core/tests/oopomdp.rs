use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;

use pomdp_core::beliefs::exact_belief_update;
use pomdp_core::model::{ObservationModel, RandomSource, TransitionModel};
use pomdp_core::oopomdp::{
    oo_belief_update, oo_transition_probability, AttrValue, Name, OOBelief, OOObservation, OOObservationModel,
    OOState, OOTransitionModel, ObjectId, ObjectObservation, ObjectObservationModel, ObjectState,
    ObjectTransitionModel,
};
use pomdp_core::{Belief, Distribution, HistogramBelief};

fn attr() -> Name {
    Arc::from("v")
}

fn obj(v: i64) -> ObjectState {
    ObjectState::new("token", [(attr(), AttrValue::Int(v))]).unwrap()
}

fn value(s: &ObjectState) -> i64 {
    match s.get("v") {
        Some(AttrValue::Int(v)) => *v,
        other => panic!("bad attribute {other:?}"),
    }
}

fn seen(v: i64) -> ObjectObservation {
    ObjectObservation::Detected(vec![(attr(), AttrValue::Int(v))])
}

/// Toy rules over objects with values `0..n`. Action 0 drifts each value up
/// by one with probability `drift(own, other)`; action 1 leaves values alone.
/// When `coupled`, the drift also depends on object 0's value.
#[derive(Clone, Copy)]
struct Rules {
    coupled: bool,
}

impl Rules {
    fn drift(&self, own: i64, anchor: i64) -> f64 {
        let base = 0.2 + 0.1 * own as f64;
        if self.coupled {
            base + 0.15 * anchor as f64
        } else {
            base
        }
    }

    fn t(&self, n: i64, next: i64, own: i64, anchor: i64, action: u8) -> f64 {
        if action == 1 {
            return f64::from(u8::from(next == own));
        }
        let p = self.drift(own, anchor);
        let up = (own + 1) % n;
        if next == up {
            p
        } else if next == own {
            1.0 - p
        } else {
            0.0
        }
    }

    /// Detection probability of an object with value `v`.
    fn detect(&self, v: i64) -> f64 {
        0.9 - 0.2 * v as f64
    }

    fn z(&self, o: &ObjectObservation, v: i64) -> f64 {
        match o {
            ObjectObservation::Null => 1.0 - self.detect(v),
            d if *d == seen(v) => self.detect(v),
            _ => 0.0,
        }
    }
}

struct Factor {
    id: ObjectId,
    n: i64,
    rules: Rules,
}

impl ObjectTransitionModel<u8> for Factor {
    fn probability(&self, next: &ObjectState, state: &OOState, action: &u8) -> f64 {
        let own = value(state.get(self.id).unwrap());
        let anchor = value(state.get(0).unwrap());
        self.rules.t(self.n, value(next), own, anchor, *action)
    }

    fn sample(&self, state: &OOState, action: &u8, rng: &mut RandomSource) -> Arc<ObjectState> {
        let mut u = rng.random::<f64>();
        for v in 0..self.n {
            let p = ObjectTransitionModel::probability(self, &obj(v), state, action);
            if u < p {
                return Arc::new(obj(v));
            }
            u -= p;
        }
        Arc::new(obj(value(state.get(self.id).unwrap())))
    }

    fn all_states(&self) -> Option<Vec<ObjectState>> {
        Some((0..self.n).map(obj).collect())
    }
}

impl ObjectObservationModel<u8> for Factor {
    fn probability(&self, o: &ObjectObservation, next: &OOState, _action: &u8) -> f64 {
        self.rules.z(o, value(next.get(self.id).unwrap()))
    }

    fn sample(&self, next: &OOState, _action: &u8, rng: &mut RandomSource) -> ObjectObservation {
        let v = value(next.get(self.id).unwrap());
        if rng.random::<f64>() < self.rules.detect(v) {
            seen(v)
        } else {
            ObjectObservation::Null
        }
    }

    fn all_observations(&self) -> Option<Vec<ObjectObservation>> {
        Some(std::iter::once(ObjectObservation::Null).chain((0..self.n).map(seen)).collect())
    }
}

fn models(sizes: &[i64], rules: Rules) -> (OOTransitionModel<u8>, OOObservationModel<u8>) {
    let factors: Vec<Arc<Factor>> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| Arc::new(Factor { id: i as ObjectId, n, rules }))
        .collect();
    let t = OOTransitionModel::new(
        factors.iter().map(|f| (f.id, f.clone() as Arc<dyn ObjectTransitionModel<u8>>)),
    );
    let o = OOObservationModel::new(
        factors.iter().map(|f| (f.id, f.clone() as Arc<dyn ObjectObservationModel<u8>>)),
    );
    (t, o)
}

fn joint_states(sizes: &[i64]) -> Vec<Vec<i64>> {
    sizes.iter().fold(vec![Vec::new()], |acc, &n| {
        acc.into_iter()
            .flat_map(|prefix| {
                (0..n).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn oo(values: &[i64]) -> OOState {
    OOState::new(values.iter().enumerate().map(|(i, &v)| (i as ObjectId, obj(v)))).unwrap()
}

#[test]
fn joint_transition_is_the_product_of_factors() {
    let sizes = [3, 4, 2];
    let rules = Rules { coupled: true };
    let (t, _) = models(&sizes, rules);
    let all = joint_states(&sizes);
    for s in &all {
        for a in 0..2u8 {
            let mut row = 0.0;
            for n in &all {
                let mut expected = 1.0;
                for i in 0..sizes.len() {
                    expected *= rules.t(sizes[i], n[i], s[i], s[0], a);
                }
                let got = oo_transition_probability(&t, &oo(n), &oo(s), &a).unwrap();
                assert!((got - expected).abs() <= 1e-12, "{s:?} -> {n:?}: {got} vs {expected}");
                row += got;
            }
            assert!((row - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn joint_observation_is_the_product_of_factors() {
    let sizes = [3, 4, 2];
    let rules = Rules { coupled: false };
    let (_, o) = models(&sizes, rules);
    let per_object: Vec<Vec<ObjectObservation>> = sizes
        .iter()
        .map(|&n| std::iter::once(ObjectObservation::Null).chain((0..n).map(seen)).collect())
        .collect();
    for s in joint_states(&sizes) {
        let mut row = 0.0;
        for o0 in &per_object[0] {
            for o1 in &per_object[1] {
                for o2 in &per_object[2] {
                    let obs = OOObservation::new([(0, o0.clone()), (1, o1.clone()), (2, o2.clone())]);
                    let expected = rules.z(o0, s[0]) * rules.z(o1, s[1]) * rules.z(o2, s[2]);
                    let got = o.joint_probability(&obs, &oo(&s), &0).unwrap();
                    assert!((got - expected).abs() <= 1e-12);
                    row += got;
                }
            }
        }
        assert!((row - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn mismatched_ids_are_rejected() {
    let (t, _) = models(&[2, 2], Rules { coupled: false });
    let short = OOState::new([(0, obj(0))]).unwrap();
    assert!(t.joint_probability(&short, &oo(&[0, 0]), &0).is_err());
}

fn factored_prior(sizes: &[i64], rng: &mut impl Rng) -> OOBelief {
    OOBelief::new(sizes.iter().enumerate().map(|(i, &n)| {
        let h = HistogramBelief::from_weights((0..n).map(|v| (obj(v), rng.random_range(0.1..1.0)))).unwrap();
        (i as ObjectId, Belief::Histogram(h))
    }))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    /// Independent dynamics: the product of factor posteriors equals the
    /// marginals of a brute-force joint Bayes update.
    #[test]
    fn factored_update_matches_joint_bayes(seed in any::<u64>(), action in 0u8..2, picks in prop::collection::vec(0usize..5, 2)) {
        let sizes = [3i64, 4];
        let rules = Rules { coupled: false };
        let (t, o) = models(&sizes, rules);
        let mut rng = pomdp_core::seeded_rng(seed);
        let prior = factored_prior(&sizes, &mut rng);
        let factors: Vec<ObjectObservation> = sizes
            .iter()
            .zip(&picks)
            .map(|(&n, &p)| if p as i64 >= n { ObjectObservation::Null } else { seen(p as i64) })
            .collect();
        let obs = OOObservation::new([(0, factors[0].clone()), (1, factors[1].clone())]);

        let all = joint_states(&sizes);
        let prob = |id: ObjectId, v: i64| prior.factor(id).unwrap().probability(&obj(v));
        let mut posterior = vec![0.0; all.len()];
        for (k, n) in all.iter().enumerate() {
            let mut predicted = 0.0;
            for s in &all {
                let mut w = prob(0, s[0]) * prob(1, s[1]);
                for i in 0..2 {
                    w *= rules.t(sizes[i], n[i], s[i], s[0], action);
                }
                predicted += w;
            }
            posterior[k] = predicted * rules.z(&factors[0], n[0]) * rules.z(&factors[1], n[1]);
        }
        let total: f64 = posterior.iter().sum();
        let updated = oo_belief_update(&prior, &action, &obs, &t, &o);
        if total == 0.0 {
            prop_assert!(updated.is_err());
            return Ok(());
        }
        let updated = updated.unwrap();
        for i in 0..2 {
            for v in 0..sizes[i] {
                let marginal: f64 = all.iter().zip(&posterior).filter(|(n, _)| n[i] == v).map(|(_, p)| p / total).sum();
                let got = updated.factor(i as ObjectId).unwrap().probability(&obj(v));
                prop_assert!((marginal - got).abs() <= 1e-9, "object {i} value {v}: {marginal} vs {got}");
            }
        }
    }

    #[test]
    fn oostate_equality_and_hash_follow_contents(values in prop::collection::vec(0i64..4, 1..5), rotate in 0usize..5) {
        let pairs: Vec<(ObjectId, ObjectState)> = values.iter().enumerate().map(|(i, &v)| (i as ObjectId, obj(v))).collect();
        let mut shuffled = pairs.clone();
        let k = rotate % shuffled.len();
        shuffled.rotate_left(k);
        let a = OOState::new(pairs).unwrap();
        let b = OOState::new(shuffled).unwrap();
        let hash = |s: &OOState| { let mut h = DefaultHasher::new(); s.hash(&mut h); h.finish() };
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(hash(&a), hash(&b));
        let changed = a.with_object(0, Arc::new(obj(values[0] + 1)));
        prop_assert_ne!(&a, &changed);
    }
}

/// Single-object adapters so the factor can be checked against the plain
/// exact update.
struct Solo<'a>(&'a Factor);

impl TransitionModel<ObjectState, u8> for Solo<'_> {
    fn probability(&self, next: &ObjectState, state: &ObjectState, action: &u8) -> f64 {
        self.0.rules.t(self.0.n, value(next), value(state), 0, *action)
    }
    fn sample(&self, state: &ObjectState, _action: &u8, _rng: &mut RandomSource) -> ObjectState {
        state.clone()
    }
    fn all_states(&self) -> Option<Vec<ObjectState>> {
        Some((0..self.0.n).map(obj).collect())
    }
}

impl ObservationModel<ObjectState, u8, ObjectObservation> for Solo<'_> {
    fn probability(&self, o: &ObjectObservation, next: &ObjectState, _action: &u8) -> f64 {
        self.0.rules.z(o, value(next))
    }
    fn sample(&self, next: &ObjectState, _action: &u8, _rng: &mut RandomSource) -> ObjectObservation {
        seen(value(next))
    }
}

#[test]
fn static_objects_update_independently() {
    let sizes = [3i64, 4, 2];
    let rules = Rules { coupled: false };
    let (t, o) = models(&sizes, rules);
    let mut rng = pomdp_core::seeded_rng(9);
    let prior = factored_prior(&sizes, &mut rng);
    let obs = OOObservation::new([(0, seen(2)), (1, ObjectObservation::Null), (2, seen(0))]);
    let updated = oo_belief_update(&prior, &1u8, &obs, &t, &o).unwrap();
    for (i, &n) in sizes.iter().enumerate() {
        let id = i as ObjectId;
        let factor = Factor { id, n, rules };
        let own = prior.factor(id).unwrap().to_histogram().unwrap();
        let expected = exact_belief_update(&own, &1u8, obs.get(id).unwrap(), &Solo(&factor), &Solo(&factor)).unwrap();
        for v in 0..n {
            let got = updated.factor(id).unwrap().probability(&obj(v));
            assert!((got - expected.probability(&obj(v))).abs() <= 1e-12);
        }
    }
}

struct Blind;

impl ObjectObservationModel<u8> for Blind {
    fn probability(&self, o: &ObjectObservation, _next: &OOState, _action: &u8) -> f64 {
        f64::from(u8::from(*o == ObjectObservation::Null))
    }
    fn sample(&self, _next: &OOState, _action: &u8, _rng: &mut RandomSource) -> ObjectObservation {
        ObjectObservation::Null
    }
}

#[test]
fn uninformative_observation_leaves_factor_unchanged() {
    let sizes = [3i64, 4];
    let rules = Rules { coupled: false };
    let (t, _) = models(&sizes, rules);
    let o = OOObservationModel::new([
        (0, Arc::new(Factor { id: 0, n: 3, rules }) as Arc<dyn ObjectObservationModel<u8>>),
        (1, Arc::new(Blind) as Arc<dyn ObjectObservationModel<u8>>),
    ]);
    let mut rng = pomdp_core::seeded_rng(10);
    let prior = factored_prior(&sizes, &mut rng);
    let obs = OOObservation::new([(0, seen(1)), (1, ObjectObservation::Null)]);
    let updated = oo_belief_update(&prior, &1u8, &obs, &t, &o).unwrap();
    for v in 0..4 {
        let before = prior.factor(1).unwrap().probability(&obj(v));
        let after = updated.factor(1).unwrap().probability(&obj(v));
        assert!((before - after).abs() <= 1e-15);
    }
}

#[test]
fn factored_size_grows_linearly() {
    let mut rng = pomdp_core::seeded_rng(11);
    for objects in 1..=6 {
        let sizes: Vec<i64> = (0..objects).map(|i| 3 + (i % 3)).collect();
        let belief = factored_prior(&sizes, &mut rng);
        let sum: usize = sizes.iter().map(|&n| n as usize).sum();
        let product: u128 = sizes.iter().map(|&n| n as u128).product();
        assert_eq!(belief.representation_size(), sum);
        assert_eq!(belief.joint_size(), product);
    }
}
