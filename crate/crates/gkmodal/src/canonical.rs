//! The constructive core of the completeness argument: fragment-indexed
//! canonical worlds, the Γ/U premise sets, and the two rescaling
//! constructions that manufacture box and diamond witnesses, with every
//! stated invariant checked numerically at run time.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::kripke::{GKModel, ModelError};
use crate::syntax::{Formula, Fragment};
use crate::truth::{
    gd_counter_valuation_with_atoms, PropValuation, TruthError, TruthValue,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CanonicalError {
    #[error("canonical worlds over different fragments")]
    MismatchedFragments,
    #[error("valuation does not cover the fragment atom {0}")]
    MissingAtom(Formula),
    #[error("fragment axiom instance {0} does not hold at value 1")]
    AxiomViolated(Formula),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Truth(#[from] TruthError),
}

/// Diagnostics from the rescaling constructions. Fact violations indicate a
/// premise valuation that does not stand in the required relation to the
/// world; sequence and postcondition failures cannot occur when the facts
/// hold and are kept as hard checks.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RescaleError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("premise valuation rejected: {0}")]
    Premise(String),
    #[error("fact {fact} violated at {theta1}{}", .theta2.as_ref().map(|t| format!(", {t}")).unwrap_or_default())]
    FactViolated {
        fact: &'static str,
        theta1: Formula,
        theta2: Option<Formula>,
    },
    #[error("sequence invariant failed: {0}")]
    SequenceInvariant(String),
    #[error("epsilon too large: must be below {max}")]
    EpsilonTooLarge { max: TruthValue },
    #[error("postcondition failed: {0}")]
    Postcondition(String),
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
}

/// The atoms a canonical world over `frag` must value: every variable of
/// the fragment plus `[]ψ` and `<>ψ` for every `ψ` in the fragment.
pub fn canonical_atoms(frag: &Fragment) -> BTreeSet<Formula> {
    let mut atoms = BTreeSet::new();
    for v in frag.variables() {
        atoms.insert(Formula::var(&v));
    }
    for f in frag.iter() {
        atoms.insert(Formula::boxed(f.clone()));
        atoms.insert(Formula::diamond(f.clone()));
    }
    atoms
}

/// The fragment instances of the modal axiom schemes, read as propositional
/// formulas over the canonical atoms. Propositional scheme instances hold
/// automatically under any homomorphic valuation and are omitted. This is
/// the finite surrogate for membership in the canonical world set.
pub fn axiom_instances(frag: &Fragment) -> Vec<Formula> {
    let mut out = BTreeSet::new();
    out.insert(Formula::not(Formula::diamond(Formula::Bot)));
    for f in frag.iter() {
        match f {
            Formula::Imp(a, b) => {
                let (a, b) = ((**a).clone(), (**b).clone());
                // K-box, FS1, FS2 instances for the implication ψ = a -> b
                out.insert(Formula::imp(
                    Formula::boxed(f.clone()),
                    Formula::imp(Formula::boxed(a.clone()), Formula::boxed(b.clone())),
                ));
                out.insert(Formula::imp(
                    Formula::diamond(f.clone()),
                    Formula::imp(Formula::boxed(a.clone()), Formula::diamond(b.clone())),
                ));
                out.insert(Formula::imp(
                    Formula::imp(Formula::diamond(a), Formula::boxed(b)),
                    Formula::boxed(f.clone()),
                ));
            }
            Formula::Or(a, b) => {
                out.insert(Formula::imp(
                    Formula::diamond(f.clone()),
                    Formula::or(
                        Formula::diamond((**a).clone()),
                        Formula::diamond((**b).clone()),
                    ),
                ));
            }
            _ => {}
        }
    }
    out.into_iter().collect()
}

/// A valuation of the canonical atoms of a fragment that gives value 1 to
/// every fragment instance of the modal axiom schemes.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct CanonicalWorld {
    fragment: Fragment,
    valuation: BTreeMap<String, TruthValue>,
    #[serde(skip)]
    values: PropValuation,
}

impl CanonicalWorld {
    pub fn new(fragment: Fragment, valuation: PropValuation) -> Result<CanonicalWorld, CanonicalError> {
        for atom in canonical_atoms(&fragment) {
            if valuation.get(&atom).is_none() {
                return Err(CanonicalError::MissingAtom(atom));
            }
        }
        for inst in axiom_instances(&fragment) {
            if !valuation.eval_prop(&inst)?.is_one() {
                return Err(CanonicalError::AxiomViolated(inst));
            }
        }
        let rendered = valuation
            .atoms()
            .map(|(a, v)| (a.to_string(), v.clone()))
            .collect();
        Ok(CanonicalWorld {
            fragment,
            valuation: rendered,
            values: valuation,
        })
    }

    /// Reads the canonical-atom values off a model world. Worlds of actual
    /// models always qualify (soundness of the axiom schemes).
    pub fn from_model_world(
        model: &GKModel,
        world: &str,
        fragment: &Fragment,
    ) -> Result<CanonicalWorld, CanonicalError> {
        let mut valuation = PropValuation::new();
        for atom in canonical_atoms(fragment) {
            let value = model.eval(world, &atom)?;
            valuation.insert(atom, value)?;
        }
        CanonicalWorld::new(fragment.clone(), valuation)
    }

    pub fn fragment(&self) -> &Fragment {
        &self.fragment
    }

    pub fn valuation(&self) -> &PropValuation {
        &self.values
    }

    /// Value of any formula over the canonical atoms (in particular any
    /// fragment formula, any `[]ψ` and any `<>ψ` with `ψ` in the fragment).
    pub fn value(&self, f: &Formula) -> Result<TruthValue, CanonicalError> {
        Ok(self.values.eval_prop(f)?)
    }
}

/// The canonical accessibility degree between two worlds of the same
/// fragment:
///
/// ```text
/// S^F(v,w) = min over ψ ∈ F of (v([]ψ) ⇒ w(ψ)) ∧ (w(ψ) ⇒ v(<>ψ))
/// ```
pub fn canonical_s(v: &CanonicalWorld, w: &CanonicalWorld) -> Result<TruthValue, CanonicalError> {
    if v.fragment != w.fragment {
        return Err(CanonicalError::MismatchedFragments);
    }
    let mut acc = TruthValue::one();
    for psi in v.fragment.iter() {
        let box_side = v.value(&Formula::boxed(psi.clone()))?.residuum(&w.value(psi)?);
        let dia_side = w.value(psi)?.residuum(&v.value(&Formula::diamond(psi.clone()))?);
        acc = acc.meet(&box_side.meet(&dia_side));
    }
    Ok(acc)
}

/// The premise set for the box witness at `v(□φ) = α < 1`:
///
/// ```text
/// Γ = {θ : v([]θ) > α}
///   ∪ {θ1 -> θ2 : v(<>θ1) ≤ v([]θ2)}
///   ∪ {(θ2 -> θ1) -> θ1 : v(<>θ1) < v([]θ2)}
/// ```
///
/// with θ, θ1, θ2 ranging over the fragment.
pub fn gamma_set(
    v: &CanonicalWorld,
    phi: &Formula,
    alpha: &TruthValue,
) -> Result<BTreeSet<Formula>, CanonicalError> {
    let boxed = Formula::boxed(phi.clone());
    if !v.fragment.contains(&boxed) {
        return Err(CanonicalError::Precondition(format!("{boxed} is not in the fragment")));
    }
    let actual = v.value(&boxed)?;
    if actual != *alpha {
        return Err(CanonicalError::Precondition(format!(
            "alpha {alpha} does not match v({boxed}) = {actual}"
        )));
    }
    if alpha.is_one() {
        return Err(CanonicalError::Precondition("alpha must be below 1".into()));
    }
    let mut out = BTreeSet::new();
    for theta in v.fragment.iter() {
        if v.value(&Formula::boxed(theta.clone()))? > *alpha {
            out.insert(theta.clone());
        }
    }
    for t1 in v.fragment.iter() {
        let dia1 = v.value(&Formula::diamond(t1.clone()))?;
        for t2 in v.fragment.iter() {
            let box2 = v.value(&Formula::boxed(t2.clone()))?;
            if dia1 <= box2 {
                out.insert(Formula::imp(t1.clone(), t2.clone()));
            }
            if dia1 < box2 {
                out.insert(Formula::imp(
                    Formula::imp(t2.clone(), t1.clone()),
                    t1.clone(),
                ));
            }
        }
    }
    Ok(out)
}

/// The premise set for the diamond witness at `v(<>φ) = α > 0`:
///
/// ```text
/// U = {θ : v(<>θ) < α}
///   ∪ {θ2 -> θ1 : v(<>θ1) < v([]θ2) and v(<>θ1) < α}
///   ∪ {(θ1 -> θ2) -> θ1 : v(<>θ1) = v([]θ2) and v(<>θ1) < α}
/// ```
pub fn u_set(
    v: &CanonicalWorld,
    phi: &Formula,
    alpha: &TruthValue,
) -> Result<BTreeSet<Formula>, CanonicalError> {
    let dia = Formula::diamond(phi.clone());
    if !v.fragment.contains(&dia) {
        return Err(CanonicalError::Precondition(format!("{dia} is not in the fragment")));
    }
    let actual = v.value(&dia)?;
    if actual != *alpha {
        return Err(CanonicalError::Precondition(format!(
            "alpha {alpha} does not match v({dia}) = {actual}"
        )));
    }
    if alpha.is_zero() {
        return Err(CanonicalError::Precondition("alpha must be above 0".into()));
    }
    let mut out = BTreeSet::new();
    for theta in v.fragment.iter() {
        if v.value(&Formula::diamond(theta.clone()))? < *alpha {
            out.insert(theta.clone());
        }
    }
    for t1 in v.fragment.iter() {
        let dia1 = v.value(&Formula::diamond(t1.clone()))?;
        if dia1 >= *alpha {
            continue;
        }
        for t2 in v.fragment.iter() {
            let box2 = v.value(&Formula::boxed(t2.clone()))?;
            if dia1 < box2 {
                out.insert(Formula::imp(t2.clone(), t1.clone()));
            }
            if dia1 == box2 {
                out.insert(Formula::imp(
                    Formula::imp(t1.clone(), t2.clone()),
                    t1.clone(),
                ));
            }
        }
    }
    Ok(out)
}

/// Runs the GD oracle for the box construction: a valuation giving 1 to
/// Γ and the fragment axiom instances while keeping `φ` below 1, over the
/// full canonical atom set. `None` means the oracle certified entailment (the
/// input world is not induced by any model world at that value pattern).
pub fn box_premise_valuation(
    v: &CanonicalWorld,
    phi: &Formula,
) -> Result<Option<PropValuation>, CanonicalError> {
    let alpha = v.value(&Formula::boxed(phi.clone()))?;
    let mut theory: Vec<Formula> = gamma_set(v, phi, &alpha)?.into_iter().collect();
    theory.extend(axiom_instances(&v.fragment));
    Ok(gd_counter_valuation_with_atoms(
        &theory,
        std::slice::from_ref(phi),
        &canonical_atoms(&v.fragment),
    ))
}

/// Runs the GD oracle for the diamond construction: a valuation giving 1 to
/// `φ` and the fragment axiom instances while keeping every member of U
/// below 1.
pub fn diamond_premise_valuation(
    v: &CanonicalWorld,
    phi: &Formula,
) -> Result<Option<PropValuation>, CanonicalError> {
    let alpha = v.value(&Formula::diamond(phi.clone()))?;
    let goals: Vec<Formula> = u_set(v, phi, &alpha)?.into_iter().collect();
    let mut theory = vec![phi.clone()];
    theory.extend(axiom_instances(&v.fragment));
    Ok(gd_counter_valuation_with_atoms(
        &theory,
        &goals,
        &canonical_atoms(&v.fragment),
    ))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum RescaleKind {
    Box,
    Diamond,
}

/// One level of the descending b-sequence (box) or ascending c-sequence
/// (diamond), with the premise-valuation extremum over that level and the
/// first fragment formula attaining it.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct TraceLevel {
    pub level: TruthValue,
    pub premise_value: TruthValue,
    pub representative: Formula,
}

/// Which end of a piecewise segment is included.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum ClosedEnd {
    Lower,
    Upper,
}

/// An affine segment of the strictly increasing rescaling map.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct MapPiece {
    pub domain: [TruthValue; 2],
    pub image: [TruthValue; 2],
    pub closed: ClosedEnd,
}

impl MapPiece {
    fn apply(&self, x: &TruthValue) -> TruthValue {
        let [dlo, dhi] = &self.domain;
        let [ilo, ihi] = &self.image;
        let t = (x.as_ratio() - dlo.as_ratio()) / (dhi.as_ratio() - dlo.as_ratio());
        let y = ilo.as_ratio() + t * (ihi.as_ratio() - ilo.as_ratio());
        TruthValue::try_from_ratio(y).expect("piecewise map stays inside [0,1]")
    }

    fn contains(&self, x: &TruthValue) -> bool {
        match self.closed {
            ClosedEnd::Lower => *x >= self.domain[0] && *x < self.domain[1],
            ClosedEnd::Upper => *x > self.domain[0] && *x <= self.domain[1],
        }
    }
}

fn apply_map(pieces: &[MapPiece], x: &TruthValue) -> TruthValue {
    if x.is_one() {
        return TruthValue::one();
    }
    if x.is_zero() && !pieces.iter().any(|p| p.contains(x)) {
        return TruthValue::zero();
    }
    for piece in pieces {
        if piece.contains(x) {
            return piece.apply(x);
        }
    }
    unreachable!("rescaling map does not cover {x}")
}

/// The full record of one rescaling run: the level sequences, the interval
/// thresholds (`p_i` for box, `q_i` for diamond), the map, the witness
/// valuation, and the verified outcome values.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct RescaleTrace {
    pub kind: RescaleKind,
    pub phi: Formula,
    pub alpha: TruthValue,
    pub epsilon: TruthValue,
    pub levels: Vec<TraceLevel>,
    pub thresholds: Vec<TruthValue>,
    pub map: Vec<MapPiece>,
    pub s_value: TruthValue,
    pub witness_phi: TruthValue,
    pub witness: CanonicalWorld,
}

fn ratio_add(a: &TruthValue, b: &TruthValue) -> BigRational {
    a.as_ratio() + b.as_ratio()
}

fn ratio_sub(a: &TruthValue, b: &TruthValue) -> BigRational {
    a.as_ratio() - b.as_ratio()
}

fn half(r: BigRational) -> BigRational {
    r / BigRational::from_integer(BigInt::from(2))
}

fn check_fact(
    ok: bool,
    fact: &'static str,
    theta1: &Formula,
    theta2: Option<&Formula>,
) -> Result<(), RescaleError> {
    if ok {
        Ok(())
    } else {
        Err(RescaleError::FactViolated {
            fact,
            theta1: theta1.clone(),
            theta2: theta2.cloned(),
        })
    }
}

/// Facts relating the premise valuation `u` to the world `v` around
/// `α = v([]φ)`; all follow from `u(Γ) = 1` and are re-checked rather than
/// assumed.
fn check_box_facts(
    v: &CanonicalWorld,
    u: &PropValuation,
    alpha: &TruthValue,
) -> Result<(), RescaleError> {
    let frag = &v.fragment;
    for t in frag.iter() {
        let box_t = v.value(&Formula::boxed(t.clone()))?;
        let ut = u.eval_prop(t).map_err(CanonicalError::from)?;
        check_fact(!(box_t > *alpha) || ut.is_one(), "#1", t, None)?;
        check_fact(!(!box_t.is_zero()) || !ut.is_zero(), "#5", t, None)?;
    }
    for t1 in frag.iter() {
        let dia1 = v.value(&Formula::diamond(t1.clone()))?;
        let u1 = u.eval_prop(t1).map_err(CanonicalError::from)?;
        for t2 in frag.iter() {
            let box2 = v.value(&Formula::boxed(t2.clone()))?;
            let u2 = u.eval_prop(t2).map_err(CanonicalError::from)?;
            check_fact(!(dia1 <= box2) || u1 <= u2, "#2", t1, Some(t2))?;
            check_fact(!(dia1 < box2) || u1.is_one() || u1 < u2, "#3", t1, Some(t2))?;
            check_fact(!(u2 < u1) || box2 < dia1, "#4", t1, Some(t2))?;
            check_fact(!(u2 <= u1 && !u1.is_one()) || box2 <= dia1, "#6", t1, Some(t2))?;
        }
    }
    Ok(())
}

/// Facts for the diamond construction around `α = v(<>φ)`.
fn check_diamond_facts(
    v: &CanonicalWorld,
    u: &PropValuation,
    alpha: &TruthValue,
) -> Result<(), RescaleError> {
    let frag = &v.fragment;
    for t in frag.iter() {
        let dia_t = v.value(&Formula::diamond(t.clone()))?;
        let ut = u.eval_prop(t).map_err(CanonicalError::from)?;
        check_fact(!(dia_t < *alpha) || !ut.is_one(), "##1", t, None)?;
        check_fact(!dia_t.is_zero() || ut.is_zero(), "##5", t, None)?;
    }
    for t2 in frag.iter() {
        let u2 = u.eval_prop(t2).map_err(CanonicalError::from)?;
        let box2 = v.value(&Formula::boxed(t2.clone()))?;
        check_fact(!u2.is_zero() || box2.is_zero(), "##4", t2, None)?;
        for t1 in frag.iter() {
            let dia1 = v.value(&Formula::diamond(t1.clone()))?;
            let u1 = u.eval_prop(t1).map_err(CanonicalError::from)?;
            check_fact(
                !(dia1 < box2 && dia1 < *alpha) || u1 < u2,
                "##2",
                t1,
                Some(t2),
            )?;
            check_fact(
                !(dia1 <= box2 && dia1 < *alpha) || u1 <= u2,
                "##3",
                t1,
                Some(t2),
            )?;
        }
    }
    Ok(())
}

fn require_axioms(v: &CanonicalWorld, u: &PropValuation) -> Result<(), RescaleError> {
    for inst in axiom_instances(&v.fragment) {
        let val = u.eval_prop(&inst).map_err(CanonicalError::from)?;
        if !val.is_one() {
            return Err(RescaleError::Premise(format!(
                "axiom instance {inst} has value {val} under the premise valuation"
            )));
        }
    }
    Ok(())
}

/// Claim-1 construction: from a premise valuation `u` with `u(Γ) = 1` and
/// `u(φ) < 1`, builds the strictly increasing map `g` and the witness world
/// `w = g∘u` with `S^F(v,w) > w(φ)` and `w(φ) < α + ε`, so that
/// `(S^F(v,w) ⇒ w(φ)) < α + ε`.
pub fn rescale_box_witness(
    v: &CanonicalWorld,
    u: &PropValuation,
    phi: &Formula,
    epsilon: &TruthValue,
) -> Result<RescaleTrace, RescaleError> {
    let boxed_phi = Formula::boxed(phi.clone());
    if !v.fragment.contains(&boxed_phi) {
        return Err(RescaleError::Precondition(format!(
            "{boxed_phi} is not in the fragment"
        )));
    }
    let alpha = v.value(&boxed_phi)?;
    if alpha.is_one() {
        return Err(RescaleError::Precondition("v([]φ) must be below 1".into()));
    }
    if epsilon.is_zero() {
        return Err(RescaleError::Precondition("epsilon must be positive".into()));
    }
    let alpha_plus = ratio_add(&alpha, epsilon);
    if alpha_plus >= BigRational::from_integer(BigInt::from(1)) {
        return Err(RescaleError::Precondition("α + ε must be below 1".into()));
    }
    let alpha_plus = TruthValue::try_from_ratio(alpha_plus).expect("checked above");

    // premise checks: u(Γ) = 1, u(φ) < 1, axiom surrogate at 1
    for gamma in gamma_set(v, phi, &alpha)? {
        let val = u.eval_prop(&gamma).map_err(CanonicalError::from)?;
        if !val.is_one() {
            return Err(RescaleError::Premise(format!(
                "Γ member {gamma} has value {val} under the premise valuation"
            )));
        }
    }
    let u_phi = u.eval_prop(phi).map_err(CanonicalError::from)?;
    if u_phi.is_one() {
        return Err(RescaleError::Premise("u(φ) must be below 1".into()));
    }
    require_axioms(v, u)?;
    check_box_facts(v, u, &alpha)?;

    // u_b = min { u(θ) : v([]θ) = b } with the first attaining formula
    let mut by_level: BTreeMap<TruthValue, (TruthValue, Formula)> = BTreeMap::new();
    let mut dia_values: Vec<TruthValue> = Vec::new();
    for t in v.fragment.iter() {
        let b = v.value(&Formula::boxed(t.clone()))?;
        let ut = u.eval_prop(t).map_err(CanonicalError::from)?;
        match by_level.get(&b) {
            Some((best, _)) if *best <= ut => {}
            _ => {
                by_level.insert(b.clone(), (ut, t.clone()));
            }
        }
        dia_values.push(v.value(&Formula::diamond(t.clone()))?);
    }

    // strictly descending b-sequence: b_0 = α, b_{i+1} the largest level
    // below b_i whose u_b drops below u_{b_i}
    let mut levels: Vec<TraceLevel> = Vec::new();
    let (u0, rep0) = by_level.get(&alpha).expect("α = v([]φ) is a level").clone();
    levels.push(TraceLevel {
        level: alpha.clone(),
        premise_value: u0,
        representative: rep0,
    });
    loop {
        let cur = levels.last().unwrap();
        let next = by_level
            .range(..cur.level.clone())
            .rev()
            .find(|(_, (ub, _))| *ub < cur.premise_value)
            .map(|(b, (ub, rep))| TraceLevel {
                level: b.clone(),
                premise_value: ub.clone(),
                representative: rep.clone(),
            });
        match next {
            Some(l) => levels.push(l),
            None => break,
        }
    }
    let last = levels.last().unwrap();
    if !last.level.is_zero() || !last.premise_value.is_zero() {
        return Err(RescaleError::SequenceInvariant(format!(
            "b-sequence ends at b = {}, u_b = {} instead of 0, 0",
            last.level, last.premise_value
        )));
    }

    // p_0 = (α+ε) ∧ min{v(<>θ) > α}; p_i = b_{i-1} ∧ min{v(<>θ) > b_i}
    let min_dia_above = |bound: &TruthValue| -> TruthValue {
        dia_values
            .iter()
            .filter(|d| *d > bound)
            .min()
            .cloned()
            .unwrap_or_else(TruthValue::one)
    };
    let mut thresholds: Vec<TruthValue> = Vec::new();
    for (i, l) in levels.iter().enumerate() {
        let cap = if i == 0 {
            alpha_plus.clone()
        } else {
            levels[i - 1].level.clone()
        };
        let p = cap.meet(&min_dia_above(&l.level));
        if p <= l.level {
            return Err(RescaleError::SequenceInvariant(format!(
                "threshold p_{i} = {p} does not lie above b_{i} = {}",
                l.level
            )));
        }
        thresholds.push(p);
    }

    // ascending pieces of g: [u_{b_i}, u_{b_{i-1}}) -> [b_i, p_i) and the
    // top piece [u_α, 1) -> [α, p_0); 1 maps to 1
    let mut map = Vec::new();
    for i in (1..levels.len()).rev() {
        map.push(MapPiece {
            domain: [levels[i].premise_value.clone(), levels[i - 1].premise_value.clone()],
            image: [levels[i].level.clone(), thresholds[i].clone()],
            closed: ClosedEnd::Lower,
        });
    }
    map.push(MapPiece {
        domain: [levels[0].premise_value.clone(), TruthValue::one()],
        image: [levels[0].level.clone(), thresholds[0].clone()],
        closed: ClosedEnd::Lower,
    });

    let w = u.map_values(|x| apply_map(&map, x));
    let witness = CanonicalWorld::new(v.fragment.clone(), w)
        .map_err(|e| RescaleError::Postcondition(format!("witness is not a canonical world: {e}")))?;
    let s_value = canonical_s(v, &witness)?;
    let witness_phi = witness.value(phi)?;

    let p0 = &thresholds[0];
    if s_value < *p0 {
        return Err(RescaleError::Postcondition(format!(
            "S^F(v,w) = {s_value} fell below p_0 = {p0}"
        )));
    }
    if !(witness_phi < *p0 && s_value > witness_phi) {
        return Err(RescaleError::Postcondition(format!(
            "expected w(φ) < p_0 and S^F(v,w) > w(φ); got w(φ) = {witness_phi}, S = {s_value}"
        )));
    }
    let residuum = s_value.residuum(&witness_phi);
    if residuum >= alpha_plus {
        return Err(RescaleError::Postcondition(format!(
            "(S^F(v,w) ⇒ w(φ)) = {residuum} is not below α + ε = {alpha_plus}"
        )));
    }

    Ok(RescaleTrace {
        kind: RescaleKind::Box,
        phi: phi.clone(),
        alpha,
        epsilon: epsilon.clone(),
        levels,
        thresholds,
        map,
        s_value,
        witness_phi,
        witness,
    })
}

fn diamond_levels(
    v: &CanonicalWorld,
    u: &PropValuation,
    alpha: &TruthValue,
) -> Result<Vec<TraceLevel>, RescaleError> {
    // u_c = max { u(θ) : v(<>θ) = c } over levels c ≤ α
    let mut by_level: BTreeMap<TruthValue, (TruthValue, Formula)> = BTreeMap::new();
    for t in v.fragment.iter() {
        let c = v.value(&Formula::diamond(t.clone()))?;
        if c > *alpha {
            continue;
        }
        let ut = u.eval_prop(t).map_err(CanonicalError::from)?;
        match by_level.get(&c) {
            Some((best, _)) if *best >= ut => {}
            _ => {
                by_level.insert(c.clone(), (ut, t.clone()));
            }
        }
    }
    let Some((u0, rep0)) = by_level.get(&TruthValue::zero()).cloned() else {
        return Err(RescaleError::SequenceInvariant(
            "no fragment formula has v(<>θ) = 0".into(),
        ));
    };
    if !u0.is_zero() {
        return Err(RescaleError::SequenceInvariant(format!(
            "u_c at level 0 is {u0}, not 0"
        )));
    }
    let mut levels = vec![TraceLevel {
        level: TruthValue::zero(),
        premise_value: u0,
        representative: rep0,
    }];
    loop {
        let cur = levels.last().unwrap();
        if cur.level == *alpha {
            break;
        }
        let next = by_level
            .iter()
            .find(|(c, (uc, _))| **c > cur.level && *uc > cur.premise_value)
            .map(|(c, (uc, rep))| TraceLevel {
                level: c.clone(),
                premise_value: uc.clone(),
                representative: rep.clone(),
            });
        match next {
            Some(l) => levels.push(l),
            None => {
                return Err(RescaleError::SequenceInvariant(
                    "c-sequence stalled before reaching α".into(),
                ))
            }
        }
    }
    let last = levels.last().unwrap();
    if !last.premise_value.is_one() {
        return Err(RescaleError::SequenceInvariant(format!(
            "u_c at level α is {}, not 1",
            last.premise_value
        )));
    }
    Ok(levels)
}

/// Largest admissible ε for the diamond construction on this input:
/// `α − c_{N−1}`, where `c_{N−1}` is the last c-level before α. Any ε
/// strictly below this (and above 0) passes the precondition.
pub fn diamond_epsilon_max(
    v: &CanonicalWorld,
    u: &PropValuation,
    phi: &Formula,
) -> Result<TruthValue, RescaleError> {
    let alpha = v.value(&Formula::diamond(phi.clone()))?;
    if alpha.is_zero() {
        return Err(RescaleError::Precondition("v(<>φ) must be above 0".into()));
    }
    let levels = diamond_levels(v, u, &alpha)?;
    let before = &levels[levels.len() - 2].level;
    Ok(TruthValue::try_from_ratio(ratio_sub(&alpha, before)).expect("α > c_{N-1}"))
}

/// Claim-2 construction: from a premise valuation `u` with `u(φ) = 1` and
/// `u(ξ) < 1` on every member of U, builds the witness `w = g∘u` with
/// `w(φ) = 1` and `S^F(v,w) ≥ α − ε`, hence `S^F(v,w) ∧ w(φ) ≥ α − ε`.
pub fn rescale_diamond_witness(
    v: &CanonicalWorld,
    u: &PropValuation,
    phi: &Formula,
    epsilon: &TruthValue,
) -> Result<RescaleTrace, RescaleError> {
    let dia_phi = Formula::diamond(phi.clone());
    if !v.fragment.contains(&dia_phi) {
        return Err(RescaleError::Precondition(format!(
            "{dia_phi} is not in the fragment"
        )));
    }
    let alpha = v.value(&dia_phi)?;
    if alpha.is_zero() {
        return Err(RescaleError::Precondition("v(<>φ) must be above 0".into()));
    }
    if epsilon.is_zero() {
        return Err(RescaleError::Precondition("epsilon must be positive".into()));
    }

    let u_phi = u.eval_prop(phi).map_err(CanonicalError::from)?;
    if !u_phi.is_one() {
        return Err(RescaleError::Premise("u(φ) must be 1".into()));
    }
    for xi in u_set(v, phi, &alpha)? {
        let val = u.eval_prop(&xi).map_err(CanonicalError::from)?;
        if val.is_one() {
            return Err(RescaleError::Premise(format!(
                "U member {xi} has value 1 under the premise valuation"
            )));
        }
    }
    require_axioms(v, u)?;
    check_diamond_facts(v, u, &alpha)?;

    let levels = diamond_levels(v, u, &alpha)?;
    let n = levels.len() - 1; // index of α in the sequence
    let before = &levels[n - 1].level;
    let alpha_minus = ratio_sub(&alpha, epsilon);
    if alpha_minus <= *before.as_ratio() {
        return Err(RescaleError::EpsilonTooLarge {
            max: TruthValue::try_from_ratio(ratio_sub(&alpha, before)).expect("α > c_{N-1}"),
        });
    }
    let alpha_minus = TruthValue::try_from_ratio(alpha_minus).expect("0 ≤ α − ε");

    // q_i = c_i ∨ max{v([]θ) < c_{i+1}}, with α−ε in place of c_{N−1} at the top
    let mut box_values: Vec<TruthValue> = Vec::new();
    for t in v.fragment.iter() {
        box_values.push(v.value(&Formula::boxed(t.clone()))?);
    }
    let max_box_below = |bound: &TruthValue| -> TruthValue {
        box_values
            .iter()
            .filter(|b| *b < bound)
            .max()
            .cloned()
            .unwrap_or_else(TruthValue::zero)
    };
    let mut thresholds: Vec<TruthValue> = Vec::new();
    for i in 0..n {
        let base = if i == n - 1 {
            alpha_minus.clone()
        } else {
            levels[i].level.clone()
        };
        let q = base.join(&max_box_below(&levels[i + 1].level));
        if q >= levels[i + 1].level {
            return Err(RescaleError::SequenceInvariant(format!(
                "threshold q_{i} = {q} does not lie below c_{} = {}",
                i + 1,
                levels[i + 1].level
            )));
        }
        thresholds.push(q);
    }

    // pieces of g: (u_{c_i}, u_{c_{i+1}}] -> (q_i, c_{i+1}] for i < N−1,
    // then (u_{c_{N−1}}, 1) -> (q_{N−1}, α); 0 and 1 are fixed
    let mut map = Vec::new();
    for i in 0..n - 1 {
        map.push(MapPiece {
            domain: [levels[i].premise_value.clone(), levels[i + 1].premise_value.clone()],
            image: [thresholds[i].clone(), levels[i + 1].level.clone()],
            closed: ClosedEnd::Upper,
        });
    }
    map.push(MapPiece {
        domain: [levels[n - 1].premise_value.clone(), TruthValue::one()],
        image: [thresholds[n - 1].clone(), alpha.clone()],
        closed: ClosedEnd::Upper,
    });

    let w = u.map_values(|x| apply_map(&map, x));
    let witness = CanonicalWorld::new(v.fragment.clone(), w)
        .map_err(|e| RescaleError::Postcondition(format!("witness is not a canonical world: {e}")))?;
    let s_value = canonical_s(v, &witness)?;
    let witness_phi = witness.value(phi)?;

    if !witness_phi.is_one() {
        return Err(RescaleError::Postcondition(format!(
            "w(φ) = {witness_phi}, expected 1"
        )));
    }
    if s_value < alpha_minus {
        return Err(RescaleError::Postcondition(format!(
            "S^F(v,w) = {s_value} fell below α − ε = {alpha_minus}"
        )));
    }

    Ok(RescaleTrace {
        kind: RescaleKind::Diamond,
        phi: phi.clone(),
        alpha,
        epsilon: epsilon.clone(),
        levels,
        thresholds,
        map,
        s_value,
        witness_phi,
        witness,
    })
}

/// A finite canonical-style model grown from one refuting valuation of a
/// formula by repeatedly adjoining box and diamond witnesses for the modal
/// members of the fragment.
pub struct WitnessFamily {
    pub model: GKModel,
    pub base_world: String,
    pub worlds: Vec<CanonicalWorld>,
}

/// Desk-scale weak-completeness pipeline for a non-theorem candidate `φ`:
/// find a fragment valuation refuting `φ` while satisfying the axiom
/// surrogate, then close under witness generation for `rounds` rounds and
/// package the family as a GK-model with the canonical accessibility
/// degrees. Returns `None` when the oracle reports that the axiom instances
/// entail `φ` over the fragment atoms.
pub fn witness_family(
    phi: &Formula,
    rounds: usize,
    epsilon: &TruthValue,
) -> Result<Option<WitnessFamily>, RescaleError> {
    let fragment = Fragment::closure([phi.clone()]);
    let theory = axiom_instances(&fragment);
    let atoms = canonical_atoms(&fragment);
    let Some(base) = gd_counter_valuation_with_atoms(&theory, std::slice::from_ref(phi), &atoms)
    else {
        return Ok(None);
    };
    let base = CanonicalWorld::new(fragment.clone(), base)?;

    let mut worlds: Vec<CanonicalWorld> = vec![base];
    let mut seen: BTreeSet<BTreeMap<String, TruthValue>> =
        worlds.iter().map(|w| w.valuation.clone()).collect();
    for _ in 0..rounds {
        let snapshot = worlds.clone();
        for v in &snapshot {
            for member in fragment.iter() {
                match member {
                    Formula::Box(inner) => {
                        let alpha = v.value(member)?;
                        if alpha.is_one() {
                            continue;
                        }
                        let Some(u) = box_premise_valuation(v, inner)? else {
                            continue;
                        };
                        let eps = TruthValue::try_from_ratio(half(ratio_sub(
                            &TruthValue::one(),
                            &alpha,
                        )))
                        .expect("within range")
                        .meet(epsilon);
                        let trace = rescale_box_witness(v, &u, inner, &eps)?;
                        if seen.insert(trace.witness.valuation.clone()) {
                            worlds.push(trace.witness);
                        }
                    }
                    Formula::Dia(inner) => {
                        let alpha = v.value(member)?;
                        if alpha.is_zero() {
                            continue;
                        }
                        let Some(u) = diamond_premise_valuation(v, inner)? else {
                            continue;
                        };
                        let max = diamond_epsilon_max(v, &u, inner)?;
                        let eps = TruthValue::try_from_ratio(half(max.as_ratio().clone()))
                            .expect("within range")
                            .meet(epsilon);
                        let trace = rescale_diamond_witness(v, &u, inner, &eps)?;
                        if seen.insert(trace.witness.valuation.clone()) {
                            worlds.push(trace.witness);
                        }
                    }
                    _ => {}
                }
            }
        }
    }

    let names: Vec<String> = (0..worlds.len()).map(|i| format!("w{i}")).collect();
    let vars: Vec<String> = fragment.variables().into_iter().collect();
    let mut s = Vec::with_capacity(worlds.len());
    let mut e = Vec::with_capacity(worlds.len());
    for v in &worlds {
        let mut row = Vec::with_capacity(worlds.len());
        for w in &worlds {
            row.push(canonical_s(v, w)?);
        }
        s.push(row);
        let mut evals = Vec::with_capacity(vars.len());
        for var in &vars {
            evals.push(v.value(&Formula::var(var))?);
        }
        e.push(evals);
    }
    let model = GKModel::new(names, vars, s, e).map_err(CanonicalError::from)?;
    Ok(Some(WitnessFamily {
        base_world: model.worlds()[0].clone(),
        model,
        worlds,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn tv(n: u64, d: u64) -> TruthValue {
        TruthValue::rational(n, d)
    }

    fn world(frag: &Fragment, pairs: &[(&str, TruthValue)]) -> CanonicalWorld {
        let mut v = PropValuation::new();
        for (text, value) in pairs {
            v.insert(parse(text).unwrap(), value.clone()).unwrap();
        }
        CanonicalWorld::new(frag.clone(), v).unwrap()
    }

    #[test]
    fn canonical_s_on_identical_worlds_is_one() {
        let frag = Fragment::closure([parse("p").unwrap()]);
        let v = world(
            &frag,
            &[
                ("p", tv(1, 2)),
                ("[]p", tv(1, 2)),
                ("<>p", tv(1, 2)),
                ("[]0", TruthValue::zero()),
                ("<>0", TruthValue::zero()),
            ],
        );
        assert_eq!(canonical_s(&v, &v).unwrap(), TruthValue::one());
    }

    #[test]
    fn canonical_s_on_bot_fragment() {
        let frag = Fragment::closure([]);
        let v = world(&frag, &[("[]0", TruthValue::zero()), ("<>0", TruthValue::zero())]);
        assert_eq!(canonical_s(&v, &v).unwrap(), TruthValue::one());
    }

    #[test]
    fn canonical_s_two_formula_fragment() {
        let frag = Fragment::closure([parse("p").unwrap()]);
        let v = world(
            &frag,
            &[
                ("p", tv(1, 2)),
                ("[]p", tv(1, 2)),
                ("<>p", tv(1, 3)),
                ("[]0", TruthValue::zero()),
                ("<>0", TruthValue::zero()),
            ],
        );
        let w = world(
            &frag,
            &[
                ("p", tv(1, 4)),
                ("[]p", tv(1, 4)),
                ("<>p", tv(1, 4)),
                ("[]0", TruthValue::zero()),
                ("<>0", TruthValue::zero()),
            ],
        );
        // min(residuum(1/2, 1/4), residuum(1/4, 1/3)) = 1/4
        assert_eq!(canonical_s(&v, &w).unwrap(), tv(1, 4));
        assert!(matches!(
            canonical_s(&v, &world(&Fragment::closure([parse("q").unwrap()]), &[
                ("q", tv(1, 2)),
                ("[]q", tv(1, 2)),
                ("<>q", tv(1, 2)),
                ("[]0", TruthValue::zero()),
                ("<>0", TruthValue::zero()),
            ])),
            Err(CanonicalError::MismatchedFragments)
        ));
    }

    #[test]
    fn canonical_world_validation() {
        let frag = Fragment::closure([parse("p").unwrap()]);
        let mut v = PropValuation::new();
        v.insert(parse("p").unwrap(), tv(1, 2)).unwrap();
        assert!(matches!(
            CanonicalWorld::new(frag.clone(), v.clone()),
            Err(CanonicalError::MissingAtom(_))
        ));
        v.insert(parse("[]p").unwrap(), tv(1, 2)).unwrap();
        v.insert(parse("<>p").unwrap(), tv(1, 2)).unwrap();
        v.insert(parse("[]0").unwrap(), TruthValue::zero()).unwrap();
        v.insert(parse("<>0").unwrap(), tv(1, 3)).unwrap();
        // <>0 must be 0 (the negated-diamond-bottom instance)
        assert!(matches!(
            CanonicalWorld::new(frag, v),
            Err(CanonicalError::AxiomViolated(_))
        ));
    }

    fn box_fixture() -> (Fragment, CanonicalWorld) {
        // fragment {0, p, []p} with v([]p) = 1/2, v(<>p) = 1
        let frag = Fragment::closure([parse("[]p").unwrap()]);
        let v = world(
            &frag,
            &[
                ("p", tv(1, 2)),
                ("[]p", tv(1, 2)),
                ("<>p", TruthValue::one()),
                ("[]0", TruthValue::zero()),
                ("<>0", TruthValue::zero()),
                ("[][]p", tv(1, 2)),
                ("<>[]p", tv(1, 2)),
            ],
        );
        (frag, v)
    }

    #[test]
    fn gamma_set_examples() {
        let (_, v) = box_fixture();
        let alpha = tv(1, 2);
        let gamma = gamma_set(&v, &parse("p").unwrap(), &alpha).unwrap();
        // v(<>0) = 0 ≤ v([]θ) for every θ, so 0 -> θ instances appear;
        // v(<>p) = 1 > any v([]θ), so no p -> θ from the ≤ clause beyond ties
        assert!(gamma.contains(&parse("0 -> p").unwrap()));
        assert!(gamma.contains(&parse("(p -> 0) -> 0").unwrap()));
        // strict clause for <>0 < []p
        assert!(gamma.contains(&parse("(p -> 0) -> 0").unwrap()));
        // first clause empty: no θ has v([]θ) > 1/2
        for theta in v.fragment().iter() {
            assert!(v.value(&Formula::boxed(theta.clone())).unwrap() <= alpha);
        }
        // alpha must match
        assert!(gamma_set(&v, &parse("p").unwrap(), &tv(1, 3)).is_err());
    }

    #[test]
    fn gamma_boundary_le_vs_lt() {
        // v(<>θ1) = v([]θ2) puts θ1 -> θ2 in but not ((θ2 -> θ1) -> θ1)
        let frag = Fragment::closure([parse("[]p").unwrap()]);
        let v = world(
            &frag,
            &[
                ("p", tv(1, 2)),
                ("[]p", tv(1, 2)),
                ("<>p", tv(1, 2)),
                ("[]0", TruthValue::zero()),
                ("<>0", TruthValue::zero()),
                ("[][]p", tv(1, 4)),
                ("<>[]p", tv(1, 2)),
            ],
        );
        let gamma = gamma_set(&v, &parse("p").unwrap(), &tv(1, 2)).unwrap();
        assert!(gamma.contains(&parse("p -> p").unwrap()));
        assert!(!gamma.contains(&parse("(p -> p) -> p").unwrap()));
    }

    #[test]
    fn u_set_examples() {
        let frag = Fragment::closure([parse("<>p").unwrap()]);
        let v = world(
            &frag,
            &[
                ("p", tv(1, 2)),
                ("<>p", tv(1, 2)),
                ("[]p", TruthValue::zero()),
                ("[]0", TruthValue::zero()),
                ("<>0", TruthValue::zero()),
                ("[]<>p", TruthValue::zero()),
                ("<><>p", tv(1, 2)),
            ],
        );
        let alpha = tv(1, 2);
        let u = u_set(&v, &parse("p").unwrap(), &alpha).unwrap();
        // 0 is always a member since v(<>0) = 0 < α
        assert!(u.contains(&Formula::Bot));
        // equality clause: v(<>0) = v([]p) = 0 < α puts (0 -> p) -> 0 in
        assert!(u.contains(&parse("(0 -> p) -> 0").unwrap()));
        // members other than 0 are all bottom-induced here
        for member in &u {
            if *member != Formula::Bot {
                assert!(matches!(member, Formula::Imp(..)), "unexpected member {member}");
            }
        }
        assert!(u_set(&v, &parse("p").unwrap(), &tv(1, 3)).is_err());
    }

    #[test]
    fn box_rescale_on_oracle_premise() {
        let (_, v) = box_fixture();
        let phi = parse("p").unwrap();
        let u = box_premise_valuation(&v, &phi).unwrap().expect("oracle succeeds");
        let eps = tv(1, 8);
        let trace = rescale_box_witness(&v, &u, &phi, &eps).unwrap();
        let bound = TruthValue::try_from_ratio(
            v.value(&parse("[]p").unwrap()).unwrap().as_ratio() + eps.as_ratio(),
        )
        .unwrap();
        assert!(trace.s_value.residuum(&trace.witness_phi) < bound);
        assert!(trace.s_value > trace.witness_phi);
        // shrinking epsilon keeps the postcondition
        let trace = rescale_box_witness(&v, &u, &phi, &tv(1, 16)).unwrap();
        assert!(trace.witness_phi < tv(9, 16));
    }

    #[test]
    fn box_rescale_rejects_corrupted_premise() {
        let (_, v) = box_fixture();
        let phi = parse("p").unwrap();
        let u = box_premise_valuation(&v, &phi).unwrap().unwrap();
        // corrupt u(p) to 1: violates the goal u(φ) < 1
        let mut bad = PropValuation::new();
        for (atom, value) in u.atoms() {
            let value = if *atom == phi { TruthValue::one() } else { value.clone() };
            bad.insert(atom.clone(), value).unwrap();
        }
        assert!(matches!(
            rescale_box_witness(&v, &bad, &phi, &tv(1, 8)),
            Err(RescaleError::Premise(_)) | Err(RescaleError::FactViolated { .. })
        ));
    }

    #[test]
    fn diamond_rescale_on_oracle_premise() {
        // fragment {0, p, <>p} with v(<>p) = 1/2, v([]p) = 0
        let frag = Fragment::closure([parse("<>p").unwrap()]);
        let v = world(
            &frag,
            &[
                ("p", tv(1, 2)),
                ("<>p", tv(1, 2)),
                ("[]p", TruthValue::zero()),
                ("[]0", TruthValue::zero()),
                ("<>0", TruthValue::zero()),
                ("[]<>p", TruthValue::zero()),
                ("<><>p", tv(1, 2)),
            ],
        );
        let phi = parse("p").unwrap();
        let u = diamond_premise_valuation(&v, &phi).unwrap().expect("oracle succeeds");
        let max = diamond_epsilon_max(&v, &u, &phi).unwrap();
        assert_eq!(max, tv(1, 2)); // c_{N-1} = 0 here
        let eps = tv(1, 8);
        let trace = rescale_diamond_witness(&v, &u, &phi, &eps).unwrap();
        assert!(trace.witness_phi.is_one());
        assert!(trace.s_value >= tv(3, 8));
        assert!(trace.s_value.meet(&trace.witness_phi) >= tv(3, 8));
        // epsilon at or above the bound is rejected with the bound reported
        let too_big = rescale_diamond_witness(&v, &u, &phi, &tv(1, 2));
        assert!(matches!(too_big, Err(RescaleError::EpsilonTooLarge { .. })));
    }

    #[test]
    fn trace_serializes() {
        let (_, v) = box_fixture();
        let phi = parse("p").unwrap();
        let u = box_premise_valuation(&v, &phi).unwrap().unwrap();
        let trace = rescale_box_witness(&v, &u, &phi, &tv(1, 8)).unwrap();
        let json = serde_json::to_string(&trace).unwrap();
        for key in ["levels", "thresholds", "map", "s_value", "witness"] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
    }

    #[test]
    fn witness_family_refutes_excluded_middle() {
        let phi = parse("p | ~p").unwrap();
        let family = witness_family(&phi, 1, &tv(1, 16)).unwrap().expect("refutable");
        let value = family.model.eval(&family.base_world, &phi).unwrap();
        assert!(!value.is_one(), "family evaluation gave {value}");
    }
}
