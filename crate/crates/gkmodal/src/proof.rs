//! Hilbert-style proof checking for the bi-modal Gödel calculus and its T,
//! S4 and S5 extensions. Proofs with hypotheses are allowed, with the
//! restriction that the two necessitation-style rules apply only to
//! hypothesis-free lines.
//!
//! Derivability from a theory reduces to propositional GD-derivability from
//! the theory plus the set of all theorems of the calculus; that set is
//! infinite, so the reduction is documentation, not an executable path.

use std::collections::BTreeMap;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{match_scheme, parse, parse_scheme, Formula, Scheme};

/// Deductive system: the base calculus or one of its frame-class
/// extensions. Scheme sets are cumulative.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum SystemId {
    GBoxDia,
    GT,
    GS4,
    GS5,
}

impl SystemId {
    pub fn name(&self) -> &'static str {
        match self {
            SystemId::GBoxDia => "G_box_dia",
            SystemId::GT => "GT",
            SystemId::GS4 => "GS4",
            SystemId::GS5 => "GS5",
        }
    }

    pub fn parse(text: &str) -> Option<SystemId> {
        match text {
            "G_box_dia" => Some(SystemId::GBoxDia),
            "GT" => Some(SystemId::GT),
            "GS4" => Some(SystemId::GS4),
            "GS5" => Some(SystemId::GS5),
            _ => None,
        }
    }

    fn level(&self) -> u8 {
        match self {
            SystemId::GBoxDia => 0,
            SystemId::GT => 1,
            SystemId::GS4 => 2,
            SystemId::GS5 => 3,
        }
    }
}

/// Scheme registry: a 10-axiom intuitionistic basis, prelinearity, the five
/// modal schemes of the base calculus, and the frame-class pairs, tagged by
/// the smallest system that contains them.
static REGISTRY: Lazy<Vec<(&'static str, u8, Scheme)>> = Lazy::new(|| {
    let mk = |name: &'static str, level: u8, text: &str| {
        (name, level, parse_scheme(text).expect("registry scheme parses"))
    };
    vec![
        mk("A1", 0, "?a -> (?b -> ?a)"),
        mk("A2", 0, "(?a -> (?b -> ?c)) -> ((?a -> ?b) -> (?a -> ?c))"),
        mk("A3", 0, "?a & ?b -> ?a"),
        mk("A4", 0, "?a & ?b -> ?b"),
        mk("A5", 0, "?a -> (?b -> ?a & ?b)"),
        mk("A6", 0, "?a -> ?a | ?b"),
        mk("A7", 0, "?b -> ?a | ?b"),
        mk("A8", 0, "(?a -> ?c) -> ((?b -> ?c) -> (?a | ?b -> ?c))"),
        mk("A9", 0, "(?a -> ?b) -> ((?a -> ~?b) -> ~?a)"),
        mk("A10", 0, "0 -> ?a"),
        mk("LIN", 0, "(?a -> ?b) | (?b -> ?a)"),
        mk("K_BOX", 0, "[](?a -> ?b) -> ([]?a -> []?b)"),
        mk("K_DIA", 0, "<>(?a | ?b) -> <>?a | <>?b"),
        mk("F_DIA", 0, "~<>0"),
        mk("FS1", 0, "<>(?a -> ?b) -> ([]?a -> <>?b)"),
        mk("FS2", 0, "(<>?a -> []?b) -> [](?a -> ?b)"),
        mk("T_BOX", 1, "[]?a -> ?a"),
        mk("T_DIA", 1, "?a -> <>?a"),
        mk("FOUR_BOX", 2, "[]?a -> [][]?a"),
        mk("FOUR_DIA", 2, "<><>?a -> <>?a"),
        mk("M1", 3, "?a -> []<>?a"),
        mk("M2", 3, "<>[]?a -> ?a"),
    ]
});

/// The active schemes of a system, in registry order.
pub fn list_schemes(sys: SystemId) -> Vec<(&'static str, Scheme)> {
    REGISTRY
        .iter()
        .filter(|(_, level, _)| *level <= sys.level())
        .map(|(name, _, scheme)| (*name, scheme.clone()))
        .collect()
}

fn lookup_scheme(sys: SystemId, name: &str) -> Option<&'static Scheme> {
    REGISTRY
        .iter()
        .find(|(n, level, _)| *n == name && *level <= sys.level())
        .map(|(_, _, s)| s)
}

fn lookup_scheme_any(name: &str) -> Option<&'static Scheme> {
    REGISTRY.iter().find(|(n, _, _)| *n == name).map(|(_, _, s)| s)
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Justification {
    Hypothesis(usize),
    Axiom {
        scheme: String,
        subst: BTreeMap<String, Formula>,
    },
    ModusPonens(usize, usize),
    /// NR-box: from a hypothesis-free `φ` infer `[]φ`.
    NecBox(usize),
    /// RN-diamond: from a hypothesis-free `φ -> ψ` infer `<>φ -> <>ψ`.
    MonoDia(usize),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Step {
    pub formula: Formula,
    pub justification: Justification,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Proof {
    pub hypotheses: Vec<Formula>,
    pub steps: Vec<Step>,
}

impl Proof {
    pub fn conclusion(&self) -> Option<&Formula> {
        self.steps.last().map(|s| &s.formula)
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum RejectReason {
    #[error("step index {index} is not an earlier step")]
    BadStepIndex { index: usize },
    #[error("hypothesis index {index} is out of range")]
    BadHypothesisIndex { index: usize },
    #[error("formula does not match hypothesis {index}")]
    HypothesisMismatch { index: usize },
    #[error("scheme {0:?} is not in the active registry")]
    UnknownScheme(String),
    #[error("formula is not the stated instance of scheme {scheme}")]
    SchemeMismatch { scheme: String },
    #[error("modus ponens premises do not fit: step {major} must be the implication from step {minor} to this formula")]
    ModusPonensShape { minor: usize, major: usize },
    #[error("premise of the diamond rule must be an implication")]
    PremiseNotImplication { premise: usize },
    #[error("conclusion does not have the shape required by the rule")]
    ConclusionShape,
    #[error("rule {rule} applied to step {premise}, which depends on hypotheses; it may only be applied to theorems")]
    RuleRestriction { rule: &'static str, premise: usize },
}

impl RejectReason {
    /// Distinguishes violations of the theorem-only side condition on the
    /// necessitation rules from plain structural errors.
    pub fn is_rule_restriction(&self) -> bool {
        matches!(self, RejectReason::RuleRestriction { .. })
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Verdict {
    Accepted { hypothesis_free: Vec<bool> },
    Rejected { step: usize, reason: RejectReason },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted { .. })
    }
}

/// Checks every step. An accepted proof certifies that the hypotheses
/// derive the last formula in the given system.
pub fn check_proof(proof: &Proof, sys: SystemId) -> Verdict {
    let mut hypothesis_free: Vec<bool> = Vec::with_capacity(proof.steps.len());
    for (k, step) in proof.steps.iter().enumerate() {
        let reject = |reason: RejectReason| Verdict::Rejected { step: k, reason };
        let check_index = |i: usize| i < k;
        let hf = match &step.justification {
            Justification::Hypothesis(i) => {
                let Some(expected) = proof.hypotheses.get(*i) else {
                    return reject(RejectReason::BadHypothesisIndex { index: *i });
                };
                if *expected != step.formula {
                    return reject(RejectReason::HypothesisMismatch { index: *i });
                }
                false
            }
            Justification::Axiom { scheme, subst } => {
                let Some(template) = lookup_scheme(sys, scheme) else {
                    return reject(RejectReason::UnknownScheme(scheme.clone()));
                };
                let matches = if subst.is_empty() {
                    match_scheme(&step.formula, template).is_some()
                } else {
                    template.instantiate(subst).ok().as_ref() == Some(&step.formula)
                };
                if !matches {
                    return reject(RejectReason::SchemeMismatch {
                        scheme: scheme.clone(),
                    });
                }
                true
            }
            Justification::ModusPonens(i, j) => {
                for index in [*i, *j] {
                    if !check_index(index) {
                        return reject(RejectReason::BadStepIndex { index });
                    }
                }
                let expected = Formula::imp(proof.steps[*i].formula.clone(), step.formula.clone());
                if proof.steps[*j].formula != expected {
                    return reject(RejectReason::ModusPonensShape { minor: *i, major: *j });
                }
                hypothesis_free[*i] && hypothesis_free[*j]
            }
            Justification::NecBox(i) => {
                if !check_index(*i) {
                    return reject(RejectReason::BadStepIndex { index: *i });
                }
                if !hypothesis_free[*i] {
                    return reject(RejectReason::RuleRestriction {
                        rule: "NR-box",
                        premise: *i,
                    });
                }
                if step.formula != Formula::boxed(proof.steps[*i].formula.clone()) {
                    return reject(RejectReason::ConclusionShape);
                }
                true
            }
            Justification::MonoDia(i) => {
                if !check_index(*i) {
                    return reject(RejectReason::BadStepIndex { index: *i });
                }
                let Formula::Imp(a, b) = &proof.steps[*i].formula else {
                    return reject(RejectReason::PremiseNotImplication { premise: *i });
                };
                if !hypothesis_free[*i] {
                    return reject(RejectReason::RuleRestriction {
                        rule: "RN-diamond",
                        premise: *i,
                    });
                }
                let expected = Formula::imp(
                    Formula::diamond((**a).clone()),
                    Formula::diamond((**b).clone()),
                );
                if step.formula != expected {
                    return reject(RejectReason::ConclusionShape);
                }
                true
            }
        };
        hypothesis_free.push(hf);
    }
    Verdict::Accepted { hypothesis_free }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeductionError {
    #[error("proof is not accepted: step {step}: {reason}")]
    NotAccepted { step: usize, reason: RejectReason },
    #[error("proof has no hypotheses to discharge")]
    NoHypotheses,
}

/// Constructive deduction theorem: turns an accepted proof of
/// `T, ψ ⊢ φ` into an accepted proof of `T ⊢ ψ -> φ`. Necessitation steps
/// are replayed verbatim (their premises are hypothesis-free).
pub fn deduction_wrap(proof: &Proof, sys: SystemId) -> Result<Proof, DeductionError> {
    let hypothesis_free = match check_proof(proof, sys) {
        Verdict::Accepted { hypothesis_free } => hypothesis_free,
        Verdict::Rejected { step, reason } => {
            return Err(DeductionError::NotAccepted { step, reason })
        }
    };
    let Some(psi) = proof.hypotheses.last().cloned() else {
        return Err(DeductionError::NoHypotheses);
    };
    let discharged = proof.hypotheses.len() - 1;

    let mut out = Proof {
        hypotheses: proof.hypotheses[..discharged].to_vec(),
        steps: Vec::new(),
    };
    // original index -> index of the verbatim copy (hypothesis-free steps)
    let mut verbatim: BTreeMap<usize, usize> = BTreeMap::new();
    // original index -> index of the wrapped step proving ψ -> χ
    let mut wrapped: BTreeMap<usize, usize> = BTreeMap::new();

    fn push(out: &mut Proof, formula: Formula, justification: Justification) -> usize {
        out.steps.push(Step {
            formula,
            justification,
        });
        out.steps.len() - 1
    }

    fn a1(out: &mut Proof, a: &Formula, b: &Formula) -> usize {
        let subst: BTreeMap<String, Formula> =
            [("a".to_string(), a.clone()), ("b".to_string(), b.clone())]
                .into_iter()
                .collect();
        push(
            out,
            Formula::imp(a.clone(), Formula::imp(b.clone(), a.clone())),
            Justification::Axiom {
                scheme: "A1".into(),
                subst,
            },
        )
    }

    // ψ -> χ from a step proving χ outright
    fn weaken(out: &mut Proof, psi: &Formula, chi_idx: usize) -> usize {
        let chi = out.steps[chi_idx].formula.clone();
        let ax = a1(out, &chi, psi);
        push(
            out,
            Formula::imp(psi.clone(), chi.clone()),
            Justification::ModusPonens(chi_idx, ax),
        )
    }

    fn copy_verbatim(
        proof: &Proof,
        out: &mut Proof,
        verbatim: &mut BTreeMap<usize, usize>,
        k: usize,
    ) -> usize {
        if let Some(&idx) = verbatim.get(&k) {
            return idx;
        }
        let justification = match &proof.steps[k].justification {
            Justification::Axiom { scheme, subst } => Justification::Axiom {
                scheme: scheme.clone(),
                subst: subst.clone(),
            },
            Justification::ModusPonens(i, j) => {
                let i = copy_verbatim(proof, out, verbatim, *i);
                let j = copy_verbatim(proof, out, verbatim, *j);
                Justification::ModusPonens(i, j)
            }
            Justification::NecBox(i) => {
                let i = copy_verbatim(proof, out, verbatim, *i);
                Justification::NecBox(i)
            }
            Justification::MonoDia(i) => {
                let i = copy_verbatim(proof, out, verbatim, *i);
                Justification::MonoDia(i)
            }
            Justification::Hypothesis(_) => {
                unreachable!("verbatim copies are only taken of hypothesis-free steps")
            }
        };
        let idx = push(out, proof.steps[k].formula.clone(), justification);
        verbatim.insert(k, idx);
        idx
    }

    for (k, step) in proof.steps.iter().enumerate() {
        let chi = step.formula.clone();
        let idx = match &step.justification {
            Justification::Hypothesis(i) if *i == discharged => {
                // ψ -> ψ by the usual A1/A2 composition
                let s1 = {
                    let subst: BTreeMap<String, Formula> = [
                        ("a".to_string(), psi.clone()),
                        ("b".to_string(), Formula::imp(psi.clone(), psi.clone())),
                        ("c".to_string(), psi.clone()),
                    ]
                    .into_iter()
                    .collect();
                    let template = lookup_scheme_any("A2").unwrap();
                    let formula = template.instantiate(&subst).unwrap();
                    push(
                        &mut out,
                        formula,
                        Justification::Axiom {
                            scheme: "A2".into(),
                            subst,
                        },
                    )
                };
                let s2 = a1(&mut out, &psi, &Formula::imp(psi.clone(), psi.clone()));
                let s3 = push(
                    &mut out,
                    Formula::imp(
                        Formula::imp(psi.clone(), Formula::imp(psi.clone(), psi.clone())),
                        Formula::imp(psi.clone(), psi.clone()),
                    ),
                    Justification::ModusPonens(s2, s1),
                );
                let s4 = a1(&mut out, &psi, &psi);
                push(
                    &mut out,
                    Formula::imp(psi.clone(), psi.clone()),
                    Justification::ModusPonens(s4, s3),
                )
            }
            Justification::Hypothesis(i) => {
                let h = push(&mut out, chi.clone(), Justification::Hypothesis(*i));
                weaken(&mut out, &psi, h)
            }
            Justification::Axiom { scheme, subst } => {
                let ax = push(
                    &mut out,
                    chi.clone(),
                    Justification::Axiom {
                        scheme: scheme.clone(),
                        subst: subst.clone(),
                    },
                );
                weaken(&mut out, &psi, ax)
            }
            Justification::ModusPonens(i, j) => {
                // from ψ -> χi and ψ -> (χi -> χ) via A2
                let chi_i = proof.steps[*i].formula.clone();
                let subst: BTreeMap<String, Formula> = [
                    ("a".to_string(), psi.clone()),
                    ("b".to_string(), chi_i.clone()),
                    ("c".to_string(), chi.clone()),
                ]
                .into_iter()
                .collect();
                let template = lookup_scheme_any("A2").unwrap();
                let formula = template.instantiate(&subst).unwrap();
                let ax = push(
                    &mut out,
                    formula,
                    Justification::Axiom {
                        scheme: "A2".into(),
                        subst,
                    },
                );
                let step1 = push(
                    &mut out,
                    Formula::imp(
                        Formula::imp(psi.clone(), chi_i),
                        Formula::imp(psi.clone(), chi.clone()),
                    ),
                    Justification::ModusPonens(wrapped[j], ax),
                );
                push(
                    &mut out,
                    Formula::imp(psi.clone(), chi.clone()),
                    Justification::ModusPonens(wrapped[i], step1),
                )
            }
            Justification::NecBox(i) => {
                debug_assert!(hypothesis_free[*i]);
                let premise = copy_verbatim(proof, &mut out, &mut verbatim, *i);
                let rule = push(&mut out, chi.clone(), Justification::NecBox(premise));
                weaken(&mut out, &psi, rule)
            }
            Justification::MonoDia(i) => {
                debug_assert!(hypothesis_free[*i]);
                let premise = copy_verbatim(proof, &mut out, &mut verbatim, *i);
                let rule = push(&mut out, chi.clone(), Justification::MonoDia(premise));
                weaken(&mut out, &psi, rule)
            }
        };
        wrapped.insert(k, idx);
    }
    Ok(out)
}

/// Incremental proof construction. Panics on ill-formed use (bad scheme
/// names, mismatched modus ponens); intended for building fixtures and
/// derived theorems, where such a panic is a programming error.
pub struct ProofBuilder {
    proof: Proof,
}

impl ProofBuilder {
    pub fn new() -> ProofBuilder {
        ProofBuilder {
            proof: Proof::default(),
        }
    }

    pub fn with_hypotheses<I: IntoIterator<Item = Formula>>(hypotheses: I) -> ProofBuilder {
        ProofBuilder {
            proof: Proof {
                hypotheses: hypotheses.into_iter().collect(),
                steps: Vec::new(),
            },
        }
    }

    fn push(&mut self, formula: Formula, justification: Justification) -> usize {
        self.proof.steps.push(Step {
            formula,
            justification,
        });
        self.proof.steps.len() - 1
    }

    pub fn hypothesis(&mut self, index: usize) -> usize {
        let formula = self.proof.hypotheses[index].clone();
        self.push(formula, Justification::Hypothesis(index))
    }

    pub fn axiom(&mut self, scheme: &str, subst: &[(&str, Formula)]) -> usize {
        let template = lookup_scheme_any(scheme)
            .unwrap_or_else(|| panic!("unknown scheme {scheme:?}"));
        let subst: BTreeMap<String, Formula> = subst
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect();
        let formula = template
            .instantiate(&subst)
            .unwrap_or_else(|e| panic!("bad instantiation of {scheme}: {e}"));
        self.push(
            formula,
            Justification::Axiom {
                scheme: scheme.to_string(),
                subst,
            },
        )
    }

    pub fn mp(&mut self, minor: usize, major: usize) -> usize {
        let Formula::Imp(a, b) = self.proof.steps[major].formula.clone() else {
            panic!("major premise of modus ponens is not an implication")
        };
        assert_eq!(
            *a, self.proof.steps[minor].formula,
            "modus ponens premises do not fit"
        );
        self.push((*b).clone(), Justification::ModusPonens(minor, major))
    }

    pub fn nec_box(&mut self, premise: usize) -> usize {
        let formula = Formula::boxed(self.proof.steps[premise].formula.clone());
        self.push(formula, Justification::NecBox(premise))
    }

    pub fn mono_dia(&mut self, premise: usize) -> usize {
        let Formula::Imp(a, b) = self.proof.steps[premise].formula.clone() else {
            panic!("diamond rule premise is not an implication")
        };
        let formula = Formula::imp(Formula::diamond((*a).clone()), Formula::diamond((*b).clone()));
        self.push(formula, Justification::MonoDia(premise))
    }

    /// Inlines a hypothesis-free proof, remapping its internal references;
    /// returns the index of its conclusion.
    pub fn append_theorem(&mut self, theorem: &Proof) -> usize {
        assert!(
            theorem.hypotheses.is_empty(),
            "only hypothesis-free proofs can be inlined"
        );
        let offset = self.proof.steps.len();
        for step in &theorem.steps {
            let justification = match &step.justification {
                Justification::Axiom { scheme, subst } => Justification::Axiom {
                    scheme: scheme.clone(),
                    subst: subst.clone(),
                },
                Justification::ModusPonens(i, j) => {
                    Justification::ModusPonens(i + offset, j + offset)
                }
                Justification::NecBox(i) => Justification::NecBox(i + offset),
                Justification::MonoDia(i) => Justification::MonoDia(i + offset),
                Justification::Hypothesis(_) => unreachable!("no hypotheses"),
            };
            self.proof.steps.push(Step {
                formula: step.formula.clone(),
                justification,
            });
        }
        self.proof.steps.len() - 1
    }

    /// From `a -> b` (at `i`) and `b -> c` (at `j`), derives `a -> c`.
    pub fn syllogism(&mut self, i: usize, j: usize) -> usize {
        let Formula::Imp(a, b) = self.proof.steps[i].formula.clone() else {
            panic!("syllogism premise is not an implication")
        };
        let Formula::Imp(b2, c) = self.proof.steps[j].formula.clone() else {
            panic!("syllogism premise is not an implication")
        };
        assert_eq!(b, b2, "syllogism premises do not compose");
        let (a, b, c) = ((*a).clone(), (*b).clone(), (*c).clone());
        let bc = Formula::imp(b.clone(), c.clone());
        let s1 = self.axiom("A1", &[("a", bc), ("b", a.clone())]);
        let s2 = self.mp(j, s1);
        let s3 = self.axiom(
            "A2",
            &[("a", a.clone()), ("b", b), ("c", c)],
        );
        let s4 = self.mp(s2, s3);
        self.mp(i, s4)
    }

    /// From `a -> b` (at `i`), derives `(c -> a) -> (c -> b)`.
    pub fn lift_consequent(&mut self, i: usize, c: &Formula) -> usize {
        let Formula::Imp(a, b) = self.proof.steps[i].formula.clone() else {
            panic!("lift premise is not an implication")
        };
        let (a, b) = ((*a).clone(), (*b).clone());
        let ab = Formula::imp(a.clone(), b.clone());
        let s1 = self.axiom("A1", &[("a", ab), ("b", c.clone())]);
        let s2 = self.mp(i, s1);
        let s3 = self.axiom("A2", &[("a", c.clone()), ("b", a), ("c", b)]);
        self.mp(s2, s3)
    }

    pub fn steps(&self) -> &[Step] {
        &self.proof.steps
    }

    pub fn formula(&self, i: usize) -> &Formula {
        &self.proof.steps[i].formula
    }

    pub fn finish(self) -> Proof {
        self.proof
    }
}

impl Default for ProofBuilder {
    fn default() -> Self {
        ProofBuilder::new()
    }
}

/// Hypothesis-free proofs of useful composition principles and of the four
/// derived theorems of the base calculus, built once and re-checked in
/// tests; the shipped fixture files are pinned against these constructions.
pub mod derived {
    use super::*;

    fn wrap_all(mut proof: Proof) -> Proof {
        while !proof.hypotheses.is_empty() {
            proof = deduction_wrap(&proof, SystemId::GBoxDia).expect("derived proof wraps");
        }
        proof
    }

    /// `(a -> (b -> c)) -> (b -> (a -> c))`
    pub fn exchange(a: &Formula, b: &Formula, c: &Formula) -> Proof {
        let mut pb = ProofBuilder::with_hypotheses([
            Formula::imp(a.clone(), Formula::imp(b.clone(), c.clone())),
            b.clone(),
            a.clone(),
        ]);
        let abc = pb.hypothesis(0);
        let hb = pb.hypothesis(1);
        let ha = pb.hypothesis(2);
        let bc = pb.mp(ha, abc);
        pb.mp(hb, bc);
        wrap_all(pb.finish())
    }

    /// `(x -> y) -> ((y -> c) -> (x -> c))`
    pub fn compose_left(x: &Formula, y: &Formula, c: &Formula) -> Proof {
        let mut pb = ProofBuilder::with_hypotheses([
            Formula::imp(x.clone(), y.clone()),
            Formula::imp(y.clone(), c.clone()),
            x.clone(),
        ]);
        let xy = pb.hypothesis(0);
        let yc = pb.hypothesis(1);
        let hx = pb.hypothesis(2);
        let hy = pb.mp(hx, xy);
        pb.mp(hy, yc);
        wrap_all(pb.finish())
    }

    /// `(a -> (a -> b)) -> (a -> b)`
    pub fn contraction(a: &Formula, b: &Formula) -> Proof {
        let mut pb = ProofBuilder::with_hypotheses([
            Formula::imp(a.clone(), Formula::imp(a.clone(), b.clone())),
            a.clone(),
        ]);
        let haab = pb.hypothesis(0);
        let ha = pb.hypothesis(1);
        let ab = pb.mp(ha, haab);
        pb.mp(ha, ab);
        wrap_all(pb.finish())
    }

    /// `a -> ((a -> b) -> b)`
    pub fn assertion(a: &Formula, b: &Formula) -> Proof {
        let mut pb = ProofBuilder::with_hypotheses([a.clone(), Formula::imp(a.clone(), b.clone())]);
        let ha = pb.hypothesis(0);
        let hab = pb.hypothesis(1);
        pb.mp(ha, hab);
        wrap_all(pb.finish())
    }

    /// `~<>θ -> []~θ` (the forward half of the duality theorem)
    fn not_dia_implies_box_not(theta: &Formula) -> Proof {
        let mut pb = ProofBuilder::new();
        let dia = Formula::diamond(theta.clone());
        let efq = pb.axiom("A10", &[("a", Formula::boxed(Formula::Bot))]);
        let lifted = pb.lift_consequent(efq, &dia); // (<>θ -> 0) -> (<>θ -> []0)
        let fs2 = pb.axiom("FS2", &[("a", theta.clone()), ("b", Formula::Bot)]);
        pb.syllogism(lifted, fs2);
        pb.finish()
    }

    /// `[]~θ -> ~<>θ` (the backward half)
    fn box_not_implies_not_dia(theta: &Formula) -> Proof {
        let mut pb = ProofBuilder::new();
        let not_theta = Formula::not(theta.clone());
        let box_not = Formula::boxed(not_theta.clone());
        // <>θ -> <>(~θ -> 0) by the diamond rule on θ -> (~θ -> 0)
        let assert_thm = assertion(theta, &Formula::Bot);
        let base = pb.append_theorem(&assert_thm);
        let dia_step = pb.mono_dia(base);
        // <>(~θ -> 0) -> ([]~θ -> <>0)
        let fs1 = pb.axiom("FS1", &[("a", not_theta.clone()), ("b", Formula::Bot)]);
        let chained = pb.syllogism(dia_step, fs1);
        // collapse <>0: ([]~θ -> <>0) -> ([]~θ -> 0)
        let f_dia = pb.axiom("F_DIA", &[]);
        let lifted = pb.lift_consequent(f_dia, &box_not);
        let to_bot = pb.syllogism(chained, lifted); // <>θ -> ([]~θ -> 0)
        // exchange to []~θ -> (<>θ -> 0)
        let exch = exchange(&Formula::diamond(theta.clone()), &box_not, &Formula::Bot);
        let exch_idx = pb.append_theorem(&exch);
        pb.mp(to_bot, exch_idx);
        pb.finish()
    }

    /// T1: `~<>θ <-> []~θ`
    pub fn t1(theta: &Formula) -> Proof {
        let mut pb = ProofBuilder::new();
        let fwd_thm = not_dia_implies_box_not(theta);
        let bwd_thm = box_not_implies_not_dia(theta);
        let fwd = pb.append_theorem(&fwd_thm);
        let bwd = pb.append_theorem(&bwd_thm);
        let fwd_f = pb.formula(fwd).clone();
        let bwd_f = pb.formula(bwd).clone();
        let pair = pb.axiom("A5", &[("a", fwd_f), ("b", bwd_f)]);
        let half = pb.mp(fwd, pair);
        pb.mp(bwd, half);
        pb.finish()
    }

    /// T2: `~~[]θ -> []~~θ`
    pub fn t2(theta: &Formula) -> Proof {
        let mut pb = ProofBuilder::new();
        let box_theta = Formula::boxed(theta.clone());
        let not_theta = Formula::not(theta.clone());
        // ([]θ -> <>0) -> ([]θ -> 0)
        let f_dia = pb.axiom("F_DIA", &[]);
        let lifted = pb.lift_consequent(f_dia, &box_theta);
        // ~~[]θ -> ~([]θ -> <>0)
        let to_dia_bot = Formula::imp(box_theta.clone(), Formula::diamond(Formula::Bot));
        let not_box = Formula::not(box_theta.clone());
        let comp = compose_left(&to_dia_bot, &not_box.clone(), &Formula::Bot);
        let comp_idx = pb.append_theorem(&comp);
        let dn_to = pb.mp(lifted, comp_idx); // (~[]θ -> 0) ... shape: ~~[]θ handled below
        // <>(θ -> 0) -> ([]θ -> <>0)
        let fs1 = pb.axiom("FS1", &[("a", theta.clone()), ("b", Formula::Bot)]);
        // ~([]θ -> <>0) -> ~<>(θ -> 0)
        let comp2 = compose_left(
            &Formula::diamond(not_theta.clone()),
            &to_dia_bot,
            &Formula::Bot,
        );
        let comp2_idx = pb.append_theorem(&comp2);
        let neg_fs1 = pb.mp(fs1, comp2_idx);
        let chain = pb.syllogism(dn_to, neg_fs1); // ~~[]θ -> ~<>~θ
        // ~<>~θ -> []~~θ
        let bwd_thm = not_dia_implies_box_not(&not_theta);
        let bwd = pb.append_theorem(&bwd_thm);
        pb.syllogism(chain, bwd);
        pb.finish()
    }

    /// T3: `<>~~θ -> ~~<>θ`
    pub fn t3(theta: &Formula) -> Proof {
        let mut pb = ProofBuilder::new();
        let not_theta = Formula::not(theta.clone());
        let box_not = Formula::boxed(not_theta.clone());
        // <>(~θ -> 0) -> ([]~θ -> <>0)
        let fs1 = pb.axiom("FS1", &[("a", not_theta.clone()), ("b", Formula::Bot)]);
        // ([]~θ -> <>0) -> ([]~θ -> 0)
        let f_dia = pb.axiom("F_DIA", &[]);
        let lifted = pb.lift_consequent(f_dia, &box_not);
        let to_not_box = pb.syllogism(fs1, lifted); // <>~~θ -> ~[]~θ
        // ~[]~θ -> ~~<>θ from []~θ <- ~<>θ
        let dual = not_dia_implies_box_not(theta);
        let dual_idx = pb.append_theorem(&dual);
        let comp = compose_left(
            &Formula::not(Formula::diamond(theta.clone())),
            &box_not,
            &Formula::Bot,
        );
        let comp_idx = pb.append_theorem(&comp);
        let neg = pb.mp(dual_idx, comp_idx); // ~[]~θ -> ~~<>θ
        pb.syllogism(to_not_box, neg);
        pb.finish()
    }

    /// T4: `([]φ -> <>ψ) | []((φ -> ψ) -> ψ)`
    pub fn t4(phi: &Formula, psi: &Formula) -> Proof {
        let imp = Formula::imp(phi.clone(), psi.clone());
        let box_phi = Formula::boxed(phi.clone());
        let dia_imp = Formula::diamond(imp.clone());
        let left = Formula::imp(box_phi.clone(), dia_imp.clone());
        let right = Formula::imp(dia_imp.clone(), box_phi.clone());
        let goal_left = Formula::imp(box_phi.clone(), Formula::diamond(psi.clone()));
        let goal_right = Formula::boxed(Formula::imp(imp.clone(), psi.clone()));
        let goal = Formula::or(goal_left.clone(), goal_right.clone());

        // left branch: ([]φ -> <>(φ -> ψ)) ⊢ goal
        let left_branch = {
            let mut pb = ProofBuilder::with_hypotheses([left.clone()]);
            let h = pb.hypothesis(0);
            let fs1 = pb.axiom("FS1", &[("a", phi.clone()), ("b", psi.clone())]);
            let twice = pb.syllogism(h, fs1); // []φ -> ([]φ -> <>ψ)
            let contr = contraction(&box_phi, &Formula::diamond(psi.clone()));
            let contr_idx = pb.append_theorem(&contr);
            let collapsed = pb.mp(twice, contr_idx); // []φ -> <>ψ
            let inj = pb.axiom("A6", &[("a", goal_left.clone()), ("b", goal_right.clone())]);
            pb.mp(collapsed, inj);
            deduction_wrap(&pb.finish(), SystemId::GBoxDia).expect("left branch wraps")
        };

        // right branch: (<>(φ -> ψ) -> []φ) ⊢ goal
        let right_branch = {
            let mut pb = ProofBuilder::with_hypotheses([right.clone()]);
            let h = pb.hypothesis(0);
            let fs2 = pb.axiom("FS2", &[("a", imp.clone()), ("b", phi.clone())]);
            let boxed_imp_phi = pb.mp(h, fs2); // []((φ -> ψ) -> φ)
            // ((φ -> ψ) -> φ) -> ((φ -> ψ) -> ψ), then box it via NR + K
            let inner = {
                let mut inner = ProofBuilder::with_hypotheses([
                    Formula::imp(imp.clone(), phi.clone()),
                    imp.clone(),
                ]);
                let h1 = inner.hypothesis(0);
                let h2 = inner.hypothesis(1);
                let got_phi = inner.mp(h2, h1);
                inner.mp(got_phi, h2);
                let p = deduction_wrap(&inner.finish(), SystemId::GBoxDia).unwrap();
                deduction_wrap(&p, SystemId::GBoxDia).unwrap()
            };
            let inner_idx = pb.append_theorem(&inner);
            let boxed_inner = pb.nec_box(inner_idx);
            let k_box = pb.axiom(
                "K_BOX",
                &[
                    ("a", Formula::imp(imp.clone(), phi.clone())),
                    ("b", Formula::imp(imp.clone(), psi.clone())),
                ],
            );
            let k_applied = pb.mp(boxed_inner, k_box);
            let boxed_goal = pb.mp(boxed_imp_phi, k_applied); // []((φ -> ψ) -> ψ)
            let inj = pb.axiom("A7", &[("a", goal_left.clone()), ("b", goal_right.clone())]);
            pb.mp(boxed_goal, inj);
            deduction_wrap(&pb.finish(), SystemId::GBoxDia).expect("right branch wraps")
        };

        let mut pb = ProofBuilder::new();
        let lin = pb.axiom("LIN", &[("a", box_phi.clone()), ("b", dia_imp.clone())]);
        let lb = pb.append_theorem(&left_branch);
        let rb = pb.append_theorem(&right_branch);
        let elim = pb.axiom(
            "A8",
            &[("a", left.clone()), ("b", right.clone()), ("c", goal.clone())],
        );
        let with_left = pb.mp(lb, elim);
        let with_right = pb.mp(rb, with_left);
        pb.mp(lin, with_right);
        pb.finish()
    }
}

/// On-disk proof format. Step formulas may be omitted wherever the
/// justification determines them; explicit formulas are checked against the
/// derived ones.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProof {
    system: String,
    #[serde(default)]
    hypotheses: Vec<String>,
    steps: Vec<RawStep>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    formula: Option<String>,
    by: RawJustification,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum RawJustification {
    Hypothesis { index: usize },
    Axiom {
        scheme: String,
        #[serde(default)]
        subst: BTreeMap<String, String>,
    },
    Mp { from: [usize; 2] },
    NrBox { from: usize },
    RnDia { from: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofLoadError {
    #[error("proof schema error: {0}")]
    Schema(String),
    #[error("step {step}: {msg}")]
    Step { step: usize, msg: String },
}

/// Loads a proof and its system from JSON, resolving omitted step formulas.
/// Structural defects (unknown system, bad references, shapes that do not
/// fit) are rejected here; rule restrictions are the checker's concern.
pub fn load_proof(json: &str) -> Result<(SystemId, Proof), ProofLoadError> {
    let raw: RawProof =
        serde_json::from_str(json).map_err(|e| ProofLoadError::Schema(e.to_string()))?;
    let sys = SystemId::parse(&raw.system)
        .ok_or_else(|| ProofLoadError::Schema(format!("unknown system {:?}", raw.system)))?;
    let mut hypotheses = Vec::new();
    for (i, text) in raw.hypotheses.iter().enumerate() {
        hypotheses.push(
            parse(text).map_err(|e| ProofLoadError::Schema(format!("hypothesis {i}: {e}")))?,
        );
    }
    let mut steps: Vec<Step> = Vec::new();
    for (k, raw_step) in raw.steps.into_iter().enumerate() {
        let err = |msg: String| ProofLoadError::Step { step: k, msg };
        let earlier = |i: usize| -> Result<&Formula, ProofLoadError> {
            if i >= k {
                return Err(err(format!("reference to step {i} is not backward")));
            }
            Ok(&steps[i].formula)
        };
        let (formula, justification) = match raw_step.by {
            RawJustification::Hypothesis { index } => {
                let formula = hypotheses
                    .get(index)
                    .cloned()
                    .ok_or_else(|| err(format!("hypothesis {index} out of range")))?;
                (formula, Justification::Hypothesis(index))
            }
            RawJustification::Axiom { scheme, subst } => {
                let template = lookup_scheme_any(&scheme)
                    .ok_or_else(|| err(format!("unknown scheme {scheme:?}")))?;
                let mut resolved = BTreeMap::new();
                for (name, text) in subst {
                    let f = parse(&text)
                        .map_err(|e| err(format!("substitution for ?{name}: {e}")))?;
                    resolved.insert(name, f);
                }
                let formula = if resolved.is_empty() {
                    match raw_step.formula.as_deref() {
                        Some(text) => {
                            parse(text).map_err(|e| err(format!("formula: {e}")))?
                        }
                        None => template.instantiate(&resolved).map_err(|e| {
                            err(format!("scheme {scheme} needs a substitution: {e}"))
                        })?,
                    }
                } else {
                    template
                        .instantiate(&resolved)
                        .map_err(|e| err(format!("scheme {scheme}: {e}")))?
                };
                (
                    formula,
                    Justification::Axiom {
                        scheme,
                        subst: resolved,
                    },
                )
            }
            RawJustification::Mp { from: [i, j] } => {
                let minor = earlier(i)?.clone();
                let major = earlier(j)?.clone();
                let Formula::Imp(a, b) = &major else {
                    return Err(err(format!("step {j} is not an implication")));
                };
                if **a != minor {
                    return Err(err(format!("steps {i} and {j} do not fit modus ponens")));
                }
                ((**b).clone(), Justification::ModusPonens(i, j))
            }
            RawJustification::NrBox { from } => {
                let premise = earlier(from)?.clone();
                (Formula::boxed(premise), Justification::NecBox(from))
            }
            RawJustification::RnDia { from } => {
                let premise = earlier(from)?.clone();
                let Formula::Imp(a, b) = &premise else {
                    return Err(err(format!("step {from} is not an implication")));
                };
                (
                    Formula::imp(
                        Formula::diamond((**a).clone()),
                        Formula::diamond((**b).clone()),
                    ),
                    Justification::MonoDia(from),
                )
            }
        };
        if let Some(text) = &raw_step.formula {
            let stated = parse(text).map_err(|e| err(format!("formula: {e}")))?;
            if stated != formula {
                return Err(err(format!(
                    "stated formula {stated} does not match the derived {formula}"
                )));
            }
        }
        steps.push(Step {
            formula,
            justification,
        });
    }
    Ok((sys, Proof { hypotheses, steps }))
}

/// Serializes a proof with every step formula stated explicitly.
pub fn proof_to_json(sys: SystemId, proof: &Proof) -> String {
    let raw = RawProof {
        system: sys.name().to_string(),
        hypotheses: proof.hypotheses.iter().map(|f| f.to_string()).collect(),
        steps: proof
            .steps
            .iter()
            .map(|step| RawStep {
                formula: Some(step.formula.to_string()),
                by: match &step.justification {
                    Justification::Hypothesis(index) => RawJustification::Hypothesis { index: *index },
                    Justification::Axiom { scheme, subst } => RawJustification::Axiom {
                        scheme: scheme.clone(),
                        subst: subst
                            .iter()
                            .map(|(k, v)| (k.clone(), v.to_string()))
                            .collect(),
                    },
                    Justification::ModusPonens(i, j) => RawJustification::Mp { from: [*i, *j] },
                    Justification::NecBox(i) => RawJustification::NrBox { from: *i },
                    Justification::MonoDia(i) => RawJustification::RnDia { from: *i },
                },
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("proof serialization cannot fail")
}
