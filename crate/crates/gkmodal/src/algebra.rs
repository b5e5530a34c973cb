//! Finite bi-modal Gödel algebras: identity checking for the variety and
//! its reflexive/transitive/symmetric subvarieties, algebraic evaluation,
//! and the complex-algebra construction from finite frames.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kripke::GKModel;
use crate::syntax::Formula;
use crate::truth::TruthValue;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("algebra schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error("chain must contain {0} (it appears in the frame)")]
    ChainMissingValue(TruthValue),
    #[error("carrier would have {0} elements, cap is {1}")]
    CarrierTooLarge(usize, usize),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("element {0} is not in the carrier")]
    NotInCarrier(Element),
    #[error("model error: {0}")]
    Model(String),
}

/// A carrier element: a tuple of chain values ordered pointwise. Chain
/// algebras use width 1.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize)]
pub struct Element(pub Vec<TruthValue>);

impl Element {
    fn meet(&self, other: &Element) -> Element {
        Element(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.meet(b))
                .collect(),
        )
    }

    fn join(&self, other: &Element) -> Element {
        Element(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.join(b))
                .collect(),
        )
    }

    /// Residuum in a product of chains is coordinatewise.
    fn residuum(&self, other: &Element) -> Element {
        Element(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a.residuum(b))
                .collect(),
        )
    }

    fn leq(&self, other: &Element) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            return write!(f, "{}", self.0[0]);
        }
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// A finite Gödel algebra (a chain, or a finite power of a chain ordered
/// pointwise) with unary operation tables `I` (interpreting `[]`) and `K`
/// (interpreting `<>`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BimodalGodelAlgebra {
    width: usize,
    carrier: Vec<Element>,
    i_table: BTreeMap<Element, Element>,
    k_table: BTreeMap<Element, Element>,
}

pub const CARRIER_CAP: usize = 4096;

impl BimodalGodelAlgebra {
    /// Chain algebra from explicit tables over a strictly ascending chain
    /// containing 0 and 1.
    pub fn chain_algebra(
        chain: Vec<TruthValue>,
        i: BTreeMap<TruthValue, TruthValue>,
        k: BTreeMap<TruthValue, TruthValue>,
    ) -> Result<BimodalGodelAlgebra, AlgebraError> {
        let err = |path: &str, msg: String| AlgebraError::Schema {
            path: path.to_string(),
            msg,
        };
        if chain.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err("chain", "values must be strictly ascending".into()));
        }
        if chain.first().map(TruthValue::is_zero) != Some(true)
            || chain.last().map(TruthValue::is_one) != Some(true)
        {
            return Err(err("chain", "chain must start at 0 and end at 1".into()));
        }
        for (name, table) in [("I", &i), ("K", &k)] {
            for value in &chain {
                let image = table
                    .get(value)
                    .ok_or_else(|| err(name, format!("missing entry for {value}")))?;
                if !chain.contains(image) {
                    return Err(err(name, format!("image {image} of {value} is not in the chain")));
                }
            }
            if table.len() != chain.len() {
                return Err(err(name, "table keys must be exactly the chain".into()));
            }
        }
        Ok(BimodalGodelAlgebra {
            width: 1,
            carrier: chain.iter().map(|v| Element(vec![v.clone()])).collect(),
            i_table: i
                .iter()
                .map(|(a, b)| (Element(vec![a.clone()]), Element(vec![b.clone()])))
                .collect(),
            k_table: k
                .iter()
                .map(|(a, b)| (Element(vec![a.clone()]), Element(vec![b.clone()])))
                .collect(),
        })
    }

    /// The complex algebra of the frame of `model` over the given chain:
    /// carrier `chain^W` with pointwise order, and
    ///
    /// ```text
    /// I(f)(w) = min over w' of (Sww' ⇒ f(w'))
    /// K(f)(w) = max over w' of (Sww' ∧ f(w'))
    /// ```
    pub fn complex(model: &GKModel, chain: &[TruthValue]) -> Result<BimodalGodelAlgebra, AlgebraError> {
        let n = model.worlds().len();
        let mut sorted = chain.to_vec();
        sorted.sort();
        sorted.dedup();
        if sorted.first().map(TruthValue::is_zero) != Some(true)
            || sorted.last().map(TruthValue::is_one) != Some(true)
        {
            return Err(AlgebraError::Schema {
                path: "chain".into(),
                msg: "chain must contain 0 and 1".into(),
            });
        }
        for x in 0..n {
            for y in 0..n {
                if !sorted.contains(model.s_value(x, y)) {
                    return Err(AlgebraError::ChainMissingValue(model.s_value(x, y).clone()));
                }
            }
        }
        let size = sorted.len().checked_pow(n as u32).unwrap_or(usize::MAX);
        if size > CARRIER_CAP {
            return Err(AlgebraError::CarrierTooLarge(size, CARRIER_CAP));
        }
        let mut carrier = Vec::with_capacity(size);
        let mut idx = vec![0usize; n];
        loop {
            carrier.push(Element(idx.iter().map(|&i| sorted[i].clone()).collect()));
            let mut k = n;
            loop {
                if k == 0 {
                    carrier.sort();
                    let mut i_table = BTreeMap::new();
                    let mut k_table = BTreeMap::new();
                    for f in &carrier {
                        let mut i_img = Vec::with_capacity(n);
                        let mut k_img = Vec::with_capacity(n);
                        for w in 0..n {
                            let mut inf = TruthValue::one();
                            let mut sup = TruthValue::zero();
                            for w2 in 0..n {
                                inf = inf.meet(&model.s_value(w, w2).residuum(&f.0[w2]));
                                sup = sup.join(&model.s_value(w, w2).meet(&f.0[w2]));
                            }
                            i_img.push(inf);
                            k_img.push(sup);
                        }
                        i_table.insert(f.clone(), Element(i_img));
                        k_table.insert(f.clone(), Element(k_img));
                    }
                    return Ok(BimodalGodelAlgebra {
                        width: n,
                        carrier,
                        i_table,
                        k_table,
                    });
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < sorted.len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn carrier(&self) -> &[Element] {
        &self.carrier
    }

    pub fn bottom(&self) -> Element {
        Element(vec![TruthValue::zero(); self.width])
    }

    pub fn top(&self) -> Element {
        Element(vec![TruthValue::one(); self.width])
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.carrier.binary_search(e).is_ok()
    }

    pub fn apply_i(&self, e: &Element) -> Result<Element, AlgebraError> {
        self.i_table
            .get(e)
            .cloned()
            .ok_or_else(|| AlgebraError::NotInCarrier(e.clone()))
    }

    pub fn apply_k(&self, e: &Element) -> Result<Element, AlgebraError> {
        self.k_table
            .get(e)
            .cloned()
            .ok_or_else(|| AlgebraError::NotInCarrier(e.clone()))
    }

    /// Homomorphic evaluation with `[] ↦ I` and `<> ↦ K`.
    pub fn eval(
        &self,
        assignment: &BTreeMap<String, Element>,
        f: &Formula,
    ) -> Result<Element, AlgebraError> {
        for e in assignment.values() {
            if !self.contains(e) {
                return Err(AlgebraError::NotInCarrier(e.clone()));
            }
        }
        self.eval_rec(assignment, f)
    }

    fn eval_rec(
        &self,
        assignment: &BTreeMap<String, Element>,
        f: &Formula,
    ) -> Result<Element, AlgebraError> {
        match f {
            Formula::Bot => Ok(self.bottom()),
            Formula::Var(v) => assignment
                .get(v)
                .cloned()
                .ok_or_else(|| AlgebraError::UnknownVariable(v.clone())),
            Formula::And(l, r) => Ok(self.eval_rec(assignment, l)?.meet(&self.eval_rec(assignment, r)?)),
            Formula::Or(l, r) => Ok(self.eval_rec(assignment, l)?.join(&self.eval_rec(assignment, r)?)),
            Formula::Imp(l, r) => {
                Ok(self.eval_rec(assignment, l)?.residuum(&self.eval_rec(assignment, r)?))
            }
            Formula::Box(s) => {
                let inner = self.eval_rec(assignment, s)?;
                self.apply_i(&inner)
            }
            Formula::Dia(s) => {
                let inner = self.eval_rec(assignment, s)?;
                self.apply_k(&inner)
            }
        }
    }

    /// Exhaustive identity check over all carrier pairs; the counterexample
    /// is the lexicographically first violating tuple.
    pub fn check_identities(&self, table2: Table2Selection) -> IdentityReport {
        let mut results = Vec::new();
        let unary = |identity: Identity, pred: &dyn Fn(&Element) -> bool| IdentityCheck {
            identity,
            counterexample: self
                .carrier
                .iter()
                .find(|a| !pred(a))
                .map(|a| (a.clone(), None)),
        };
        let binary = |identity: Identity, pred: &dyn Fn(&Element, &Element) -> bool| {
            let mut witness = None;
            'outer: for a in &self.carrier {
                for b in &self.carrier {
                    if !pred(a, b) {
                        witness = Some((a.clone(), Some(b.clone())));
                        break 'outer;
                    }
                }
            }
            IdentityCheck {
                identity,
                counterexample: witness,
            }
        };
        let i = |e: &Element| self.i_table[e].clone();
        let k = |e: &Element| self.k_table[e].clone();

        results.push(binary(Identity::BoxMeetHom, &|a, b| {
            i(&a.meet(b)) == i(a).meet(&i(b))
        }));
        results.push(IdentityCheck {
            identity: Identity::BoxUnit,
            counterexample: if i(&self.top()) == self.top() {
                None
            } else {
                Some((self.top(), None))
            },
        });
        results.push(binary(Identity::DiaJoinHom, &|a, b| {
            k(&a.join(b)) == k(a).join(&k(b))
        }));
        results.push(IdentityCheck {
            identity: Identity::DiaZero,
            counterexample: if k(&self.bottom()) == self.bottom() {
                None
            } else {
                Some((self.bottom(), None))
            },
        });
        results.push(binary(Identity::Fs1, &|a, b| {
            k(&a.residuum(b)).leq(&i(a).residuum(&k(b)))
        }));
        results.push(binary(Identity::Fs2, &|a, b| {
            k(a).residuum(&i(b)).leq(&i(&a.residuum(b)))
        }));

        if table2.reflexive {
            results.push(unary(Identity::BoxContracting, &|a| i(a).leq(a)));
            results.push(unary(Identity::DiaExpanding, &|a| a.leq(&k(a))));
        }
        if table2.transitive {
            results.push(unary(Identity::BoxIdempotent, &|a| i(a) == i(&i(a))));
            results.push(unary(Identity::DiaIdempotent, &|a| k(a) == k(&k(a))));
        }
        if table2.symmetric {
            results.push(unary(Identity::MonadicUp, &|a| a.leq(&i(&k(a)))));
            results.push(unary(Identity::MonadicDown, &|a| k(&i(a)).leq(a)));
        }
        IdentityReport { results }
    }

    pub fn from_json_str(json: &str) -> Result<BimodalGodelAlgebra, AlgebraError> {
        let raw: RawAlgebra = serde_json::from_str(json).map_err(|e| AlgebraError::Schema {
            path: "$".into(),
            msg: e.to_string(),
        })?;
        raw.build()
    }

    pub fn to_json_string(&self) -> Result<String, AlgebraError> {
        if self.width != 1 {
            return Err(AlgebraError::Schema {
                path: "$".into(),
                msg: "only chain algebras have a file form".into(),
            });
        }
        let raw = RawAlgebra {
            chain: self.carrier.iter().map(|e| e.0[0].to_string()).collect(),
            i: self
                .i_table
                .iter()
                .map(|(a, b)| (a.0[0].to_string(), b.0[0].to_string()))
                .collect(),
            k: self
                .k_table
                .iter()
                .map(|(a, b)| (a.0[0].to_string(), b.0[0].to_string()))
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&raw).expect("serialization cannot fail"))
    }
}

/// Which groups of frame-class identities to check in addition to the six
/// defining ones.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Table2Selection {
    pub reflexive: bool,
    pub transitive: bool,
    pub symmetric: bool,
}

impl Table2Selection {
    pub fn all() -> Table2Selection {
        Table2Selection {
            reflexive: true,
            transitive: true,
            symmetric: true,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
pub enum Identity {
    /// I(a∧b) = Ia∧Ib
    BoxMeetHom,
    /// I1 = 1
    BoxUnit,
    /// K(a∨b) = Ka∨Kb
    DiaJoinHom,
    /// K0 = 0
    DiaZero,
    /// K(a⇒b) ≤ Ia⇒Kb
    Fs1,
    /// Ka⇒Ib ≤ I(a⇒b)
    Fs2,
    /// Ia ≤ a
    BoxContracting,
    /// a ≤ Ka
    DiaExpanding,
    /// Ia = IIa
    BoxIdempotent,
    /// Ka = KKa
    DiaIdempotent,
    /// a ≤ IKa
    MonadicUp,
    /// KIa ≤ a
    MonadicDown,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct IdentityCheck {
    pub identity: Identity,
    pub counterexample: Option<(Element, Option<Element>)>,
}

impl IdentityCheck {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct IdentityReport {
    pub results: Vec<IdentityCheck>,
}

impl IdentityReport {
    pub fn all_hold(&self) -> bool {
        self.results.iter().all(IdentityCheck::holds)
    }

    pub fn failures(&self) -> impl Iterator<Item = &IdentityCheck> + '_ {
        self.results.iter().filter(|c| !c.holds())
    }
}

/// Checks that algebraic evaluation over the complex algebra of the model's
/// frame agrees pointwise with Kripke evaluation, under the valuation
/// `v_e(p) = e(−,p)`. The chain is the set of values appearing in the model
/// plus 0 and 1.
pub fn adjunction_check(model: &GKModel, f: &Formula) -> Result<bool, AlgebraError> {
    let mut chain: Vec<TruthValue> = vec![TruthValue::zero(), TruthValue::one()];
    let n = model.worlds().len();
    for x in 0..n {
        for y in 0..n {
            chain.push(model.s_value(x, y).clone());
        }
        for v in 0..model.vars().len() {
            chain.push(model.e_value(x, v).clone());
        }
    }
    chain.sort();
    chain.dedup();
    let algebra = BimodalGodelAlgebra::complex(model, &chain)?;
    let assignment: BTreeMap<String, Element> = model
        .vars()
        .iter()
        .enumerate()
        .map(|(vi, name)| {
            (
                name.clone(),
                Element((0..n).map(|x| model.e_value(x, vi).clone()).collect()),
            )
        })
        .collect();
    let algebraic = algebra.eval(&assignment, f)?;
    let pointwise = model
        .eval_all(f)
        .map_err(|e| AlgebraError::Model(e.to_string()))?;
    Ok(algebraic.0 == pointwise)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlgebra {
    chain: Vec<String>,
    #[serde(rename = "I")]
    i: BTreeMap<String, String>,
    #[serde(rename = "K")]
    k: BTreeMap<String, String>,
}

impl RawAlgebra {
    fn build(self) -> Result<BimodalGodelAlgebra, AlgebraError> {
        let parse = |path: String, text: &str| -> Result<TruthValue, AlgebraError> {
            text.parse().map_err(|e: crate::truth::TruthError| AlgebraError::Schema {
                path,
                msg: e.to_string(),
            })
        };
        let mut chain = Vec::new();
        for (i, text) in self.chain.iter().enumerate() {
            chain.push(parse(format!("chain[{i}]"), text)?);
        }
        let mut tables = Vec::new();
        for (name, raw) in [("I", &self.i), ("K", &self.k)] {
            let mut table = BTreeMap::new();
            for (key, value) in raw {
                let k = parse(format!("{name}[{key:?}]"), key)?;
                let v = parse(format!("{name}[{key:?}]"), value)?;
                table.insert(k, v);
            }
            tables.push(table);
        }
        let k = tables.pop().unwrap();
        let i = tables.pop().unwrap();
        BimodalGodelAlgebra::chain_algebra(chain, i, k)
    }
}
