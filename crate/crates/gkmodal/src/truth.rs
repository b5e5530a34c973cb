//! Exact Gödel-algebra arithmetic on [0,1] ∩ ℚ, propositional evaluation, and
//! the finite decision procedure for Gödel–Dummett consequence.
//!
//! All arithmetic is exact rational; the residuum is discontinuous, so floats
//! would mis-evaluate near ties.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::syntax::Formula;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TruthError {
    #[error("value {0} is outside [0,1]")]
    OutOfRange(String),
    #[error("cannot parse {0:?} as a rational in [0,1]")]
    Parse(String),
    #[error("{0} is not an atom (variable or modal formula)")]
    NotAnAtom(Formula),
    #[error("atom {0} has no assigned value")]
    UnknownAtom(Formula),
}

/// An exact rational truth value in [0,1], always reduced.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TruthValue(BigRational);

impl TruthValue {
    pub fn zero() -> TruthValue {
        TruthValue(BigRational::zero())
    }

    pub fn one() -> TruthValue {
        TruthValue(BigRational::one())
    }

    /// `num/den`. Panics outside [0,1]; use `FromStr` for untrusted input.
    pub fn rational(num: u64, den: u64) -> TruthValue {
        assert!(den != 0, "zero denominator");
        Self::try_from_ratio(BigRational::new(BigInt::from(num), BigInt::from(den)))
            .expect("value outside [0,1]")
    }

    pub fn try_from_ratio(r: BigRational) -> Result<TruthValue, TruthError> {
        if r < BigRational::zero() || r > BigRational::one() {
            return Err(TruthError::OutOfRange(r.to_string()));
        }
        Ok(TruthValue(r))
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_one()
    }

    /// Meet: `min`.
    pub fn meet(&self, other: &TruthValue) -> TruthValue {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Join: `max`.
    pub fn join(&self, other: &TruthValue) -> TruthValue {
        if self >= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    /// Residuum: `1` if `self <= other`, else `other`.
    pub fn residuum(&self, other: &TruthValue) -> TruthValue {
        if self <= other {
            TruthValue::one()
        } else {
            other.clone()
        }
    }
}

impl fmt::Display for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for TruthValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for TruthValue {
    type Err = TruthError;

    /// Accepts `p/q` or a bare integer (`0`, `1`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let ratio = match s.split_once('/') {
            Some((n, d)) => {
                let n = BigInt::from_str(n.trim()).map_err(|_| TruthError::Parse(s.into()))?;
                let d = BigInt::from_str(d.trim()).map_err(|_| TruthError::Parse(s.into()))?;
                if d.is_zero() {
                    return Err(TruthError::Parse(s.into()));
                }
                BigRational::new(n, d)
            }
            None => {
                let n = BigInt::from_str(s).map_err(|_| TruthError::Parse(s.into()))?;
                BigRational::from_integer(n)
            }
        };
        TruthValue::try_from_ratio(ratio)
    }
}

impl Serialize for TruthValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TruthValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(D::Error::custom)
    }
}

/// The evenly spaced chain `{0, 1/(n+1), …, n/(n+1), 1}` with `n` interior
/// values. Any valuation of `n` atoms is order-isomorphic (fixing 0 and 1)
/// to one into this chain, and Gödel evaluation commutes with such
/// isomorphisms, so enumerating it decides finite GD consequence.
pub fn chain(interior: usize) -> Vec<TruthValue> {
    let den = interior as u64 + 1;
    (0..=den).map(|k| TruthValue::rational(k, den)).collect()
}

/// A finite valuation of atoms (variables and modal formulas treated as
/// atoms), extended homomorphically to the propositional connectives.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct PropValuation {
    map: BTreeMap<Formula, TruthValue>,
}

impl PropValuation {
    pub fn new() -> PropValuation {
        PropValuation::default()
    }

    pub fn insert(&mut self, atom: Formula, value: TruthValue) -> Result<(), TruthError> {
        if !atom.is_atom() {
            return Err(TruthError::NotAnAtom(atom));
        }
        self.map.insert(atom, value);
        Ok(())
    }

    pub fn get(&self, atom: &Formula) -> Option<&TruthValue> {
        self.map.get(atom)
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Formula, &TruthValue)> + '_ {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Homomorphic extension: `0 ↦ 0`, `& ↦ meet`, `| ↦ join`,
    /// `-> ↦ residuum`; variables and outermost modal subformulas are looked
    /// up as atoms.
    pub fn eval_prop(&self, f: &Formula) -> Result<TruthValue, TruthError> {
        match f {
            Formula::Bot => Ok(TruthValue::zero()),
            Formula::Var(_) | Formula::Box(_) | Formula::Dia(_) => self
                .map
                .get(f)
                .cloned()
                .ok_or_else(|| TruthError::UnknownAtom(f.clone())),
            Formula::And(l, r) => Ok(self.eval_prop(l)?.meet(&self.eval_prop(r)?)),
            Formula::Or(l, r) => Ok(self.eval_prop(l)?.join(&self.eval_prop(r)?)),
            Formula::Imp(l, r) => Ok(self.eval_prop(l)?.residuum(&self.eval_prop(r)?)),
        }
    }

    /// Post-composes a map over the assigned values.
    pub fn map_values<F: Fn(&TruthValue) -> TruthValue>(&self, g: F) -> PropValuation {
        PropValuation {
            map: self.map.iter().map(|(k, v)| (k.clone(), g(v))).collect(),
        }
    }
}

/// Interval bounds for partial valuations: the exact range an expression can
/// take when unassigned atoms vary over [0,1]. Residuum is antitone in its
/// first argument and monotone in the second, so corner evaluation is sound.
#[derive(Clone, PartialEq, Eq, Debug)]
pub(crate) struct Bounds {
    pub lo: TruthValue,
    pub hi: TruthValue,
}

impl Bounds {
    pub fn exact(v: TruthValue) -> Bounds {
        Bounds {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn full() -> Bounds {
        Bounds {
            lo: TruthValue::zero(),
            hi: TruthValue::one(),
        }
    }
}

pub(crate) fn prop_bounds<F>(f: &Formula, lookup: &F) -> Bounds
where
    F: Fn(&Formula) -> Option<TruthValue>,
{
    match f {
        Formula::Bot => Bounds::exact(TruthValue::zero()),
        Formula::Var(_) | Formula::Box(_) | Formula::Dia(_) => match lookup(f) {
            Some(v) => Bounds::exact(v),
            None => Bounds::full(),
        },
        Formula::And(l, r) => {
            let a = prop_bounds(l, lookup);
            let b = prop_bounds(r, lookup);
            Bounds {
                lo: a.lo.meet(&b.lo),
                hi: a.hi.meet(&b.hi),
            }
        }
        Formula::Or(l, r) => {
            let a = prop_bounds(l, lookup);
            let b = prop_bounds(r, lookup);
            Bounds {
                lo: a.lo.join(&b.lo),
                hi: a.hi.join(&b.hi),
            }
        }
        Formula::Imp(l, r) => {
            let a = prop_bounds(l, lookup);
            let b = prop_bounds(r, lookup);
            Bounds {
                lo: a.hi.residuum(&b.lo),
                hi: a.lo.residuum(&b.hi),
            }
        }
    }
}

/// Searches for a valuation `v` with `v(θ) = 1` for every `θ ∈ theory` and
/// `v(g) < 1` for every goal. Returns `None` exactly when no [0,1]-valuation
/// does this, in which case `theory` propositionally entails the disjunction
/// of the goals in Gödel–Dummett logic.
///
/// The sweep runs over the chain with one interior value per atom, which is
/// complete up to order isomorphism. Enumeration assigns the atoms occurring
/// in the input in ascending formula order, each running over the chain in
/// increasing order; atoms occurring nowhere are pinned to 0. The first
/// satisfying valuation in that order is returned.
pub fn gd_counter_valuation(theory: &[Formula], goals: &[Formula]) -> Option<PropValuation> {
    gd_counter_valuation_with_atoms(theory, goals, &BTreeSet::new())
}

/// As [`gd_counter_valuation`], with extra atoms included in the returned
/// valuation's domain (pinned to 0 unless they occur in the input). The chain
/// is sized by the total atom count.
pub fn gd_counter_valuation_with_atoms(
    theory: &[Formula],
    goals: &[Formula],
    extra_atoms: &BTreeSet<Formula>,
) -> Option<PropValuation> {
    assert!(!goals.is_empty(), "goals must be nonempty");
    let mut occurring: BTreeSet<Formula> = BTreeSet::new();
    for f in theory.iter().chain(goals) {
        occurring.extend(f.atoms());
    }
    let mut all = occurring.clone();
    all.extend(extra_atoms.iter().cloned());
    let chain = chain(all.len());
    let order: Vec<Formula> = occurring.into_iter().collect();

    let mut assignment: BTreeMap<Formula, TruthValue> = BTreeMap::new();
    if !search(theory, goals, &order, &chain, 0, &mut assignment) {
        return None;
    }
    let mut v = PropValuation::new();
    for atom in &all {
        let value = assignment.get(atom).cloned().unwrap_or_else(TruthValue::zero);
        v.insert(atom.clone(), value).expect("atom sets contain atoms only");
    }
    Some(v)
}

fn search(
    theory: &[Formula],
    goals: &[Formula],
    order: &[Formula],
    chain: &[TruthValue],
    depth: usize,
    assignment: &mut BTreeMap<Formula, TruthValue>,
) -> bool {
    let lookup = |f: &Formula| assignment.get(f).cloned();
    let mut theory_settled = true;
    for t in theory {
        let b = prop_bounds(t, &lookup);
        if !b.hi.is_one() {
            return false; // some completion is forced below 1
        }
        if !b.lo.is_one() {
            theory_settled = false;
        }
    }
    let mut goals_settled = true;
    for g in goals {
        let b = prop_bounds(g, &lookup);
        if b.lo.is_one() {
            return false; // goal forced to 1 on every completion
        }
        if b.hi.is_one() {
            goals_settled = false;
        }
    }
    if theory_settled && goals_settled {
        return true; // every completion works; leave the rest at 0
    }
    if depth == order.len() {
        return false; // bounds are exact here, so not settled means failed
    }
    for value in chain {
        assignment.insert(order[depth].clone(), value.clone());
        if search(theory, goals, order, chain, depth + 1, assignment) {
            return true;
        }
    }
    assignment.remove(&order[depth]);
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn tv(n: u64, d: u64) -> TruthValue {
        TruthValue::rational(n, d)
    }

    #[test]
    fn residuum_cases() {
        assert_eq!(tv(1, 3).residuum(&tv(1, 2)), TruthValue::one());
        assert_eq!(tv(1, 2).residuum(&tv(1, 3)), tv(1, 3));
    }

    #[test]
    fn join_is_definable_from_residuum() {
        // x ∨ y = ((x ⇒ y) ⇒ y) ∧ ((y ⇒ x) ⇒ x)
        let x = tv(2, 5);
        let y = tv(3, 7);
        let defined = x
            .residuum(&y)
            .residuum(&y)
            .meet(&y.residuum(&x).residuum(&x));
        assert_eq!(defined, x.join(&y));
        assert_eq!(defined, tv(3, 7));
        let defined = y
            .residuum(&x)
            .residuum(&x)
            .meet(&x.residuum(&y).residuum(&y));
        assert_eq!(defined, tv(3, 7));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("1/3".parse::<TruthValue>().unwrap(), tv(1, 3));
        assert_eq!("0".parse::<TruthValue>().unwrap(), TruthValue::zero());
        assert_eq!("2/4".parse::<TruthValue>().unwrap().to_string(), "1/2");
        assert!("3/2".parse::<TruthValue>().is_err());
        assert!("-1/2".parse::<TruthValue>().is_err());
        assert!("1/0".parse::<TruthValue>().is_err());
    }

    fn valuation(pairs: &[(&str, TruthValue)]) -> PropValuation {
        let mut v = PropValuation::new();
        for (name, val) in pairs {
            v.insert(Formula::var(name), val.clone()).unwrap();
        }
        v
    }

    #[test]
    fn eval_prop_examples() {
        let v = valuation(&[("p", tv(1, 2))]);
        assert_eq!(v.eval_prop(&parse("p | ~p").unwrap()).unwrap(), tv(1, 2));

        let v = valuation(&[("p", tv(1, 2)), ("q", tv(1, 3))]);
        assert_eq!(
            v.eval_prop(&parse("(p -> q) | (q -> p)").unwrap()).unwrap(),
            TruthValue::one()
        );

        // ~~p -> p at a = 1/2 evaluates to 1/2; at 0 and 1 it is 1
        let f = parse("~~p -> p").unwrap();
        assert_eq!(valuation(&[("p", tv(1, 2))]).eval_prop(&f).unwrap(), tv(1, 2));
        assert_eq!(
            valuation(&[("p", TruthValue::zero())]).eval_prop(&f).unwrap(),
            TruthValue::one()
        );
        assert_eq!(
            valuation(&[("p", TruthValue::one())]).eval_prop(&f).unwrap(),
            TruthValue::one()
        );
    }

    #[test]
    fn eval_prop_missing_atom() {
        let v = PropValuation::new();
        assert!(matches!(
            v.eval_prop(&parse("p").unwrap()),
            Err(TruthError::UnknownAtom(_))
        ));
    }

    #[test]
    fn modal_subformulas_are_atoms() {
        let mut v = PropValuation::new();
        v.insert(parse("[]p").unwrap(), tv(1, 3)).unwrap();
        assert_eq!(v.eval_prop(&parse("[]p -> []p").unwrap()).unwrap(), TruthValue::one());
        assert!(v.eval_prop(&parse("p").unwrap()).is_err());
        assert!(v.insert(parse("p & q").unwrap(), tv(1, 2)).is_err());
    }

    #[test]
    fn excluded_middle_fails() {
        let v = gd_counter_valuation(&[], &[parse("p | ~p").unwrap()]).unwrap();
        let val = v.eval_prop(&parse("p | ~p").unwrap()).unwrap();
        assert!(!val.is_one());
    }

    #[test]
    fn prelinearity_is_valid() {
        assert!(gd_counter_valuation(&[], &[parse("(p -> q) | (q -> p)").unwrap()]).is_none());
    }

    #[test]
    fn chained_implication_is_entailed() {
        let theory = vec![parse("p -> q").unwrap(), parse("q -> r").unwrap()];
        assert!(gd_counter_valuation(&theory, &[parse("p -> r").unwrap()]).is_none());
    }

    /// Independent oracle: plain odometer sweep over the full chain with no
    /// pruning, checked against the production search.
    #[test]
    fn search_agrees_with_brute_force() {
        let cases: Vec<(Vec<Formula>, Vec<Formula>)> = vec![
            (vec![], vec![parse("p | ~p").unwrap()]),
            (vec![], vec![parse("(p -> q) | (q -> p)").unwrap()]),
            (
                vec![parse("p -> q").unwrap(), parse("q -> r").unwrap()],
                vec![parse("p -> r").unwrap()],
            ),
            (vec![parse("p").unwrap()], vec![parse("q").unwrap(), parse("~q").unwrap()]),
            (vec![], vec![parse("~~p -> p").unwrap()]),
            (vec![parse("p -> q").unwrap()], vec![parse("q -> p").unwrap()]),
        ];
        for (theory, goals) in cases {
            let got = gd_counter_valuation(&theory, &goals);
            let want = brute_force(&theory, &goals);
            assert_eq!(got.is_some(), want.is_some(), "theory {theory:?} goals {goals:?}");
            if let (Some(got), Some(_)) = (&got, &want) {
                for t in &theory {
                    assert!(got.eval_prop(t).unwrap().is_one());
                }
                for g in &goals {
                    assert!(!got.eval_prop(g).unwrap().is_one());
                }
            }
        }
    }

    fn brute_force(theory: &[Formula], goals: &[Formula]) -> Option<PropValuation> {
        let mut atoms: BTreeSet<Formula> = BTreeSet::new();
        for f in theory.iter().chain(goals) {
            atoms.extend(f.atoms());
        }
        let atoms: Vec<Formula> = atoms.into_iter().collect();
        let chain = chain(atoms.len());
        let mut idx = vec![0usize; atoms.len()];
        loop {
            let mut v = PropValuation::new();
            for (a, i) in atoms.iter().zip(&idx) {
                v.insert(a.clone(), chain[*i].clone()).unwrap();
            }
            let ok = theory.iter().all(|t| v.eval_prop(t).unwrap().is_one())
                && goals.iter().all(|g| !v.eval_prop(g).unwrap().is_one());
            if ok {
                return Some(v);
            }
            // odometer
            let mut k = atoms.len();
            loop {
                if k == 0 {
                    return None;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < chain.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Random [0,1] valuations never refute a formula the chain search
    /// declares valid (soundness direction of the finite decision procedure).
    #[test]
    fn random_valuations_respect_verdicts() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let valid = parse("(p -> q) | (q -> p)").unwrap();
        let entail_theory = vec![parse("p -> q").unwrap(), parse("q -> r").unwrap()];
        let entail_goal = parse("p -> r").unwrap();
        for _ in 0..500 {
            let mut v = PropValuation::new();
            for name in ["p", "q", "r"] {
                let num = rng.gen_range(0..=24u64);
                v.insert(Formula::var(name), tv(num, 24)).unwrap();
            }
            assert!(v.eval_prop(&valid).unwrap().is_one());
            if entail_theory.iter().all(|t| v.eval_prop(t).unwrap().is_one()) {
                assert!(v.eval_prop(&entail_goal).unwrap().is_one());
            }
        }
    }
}
