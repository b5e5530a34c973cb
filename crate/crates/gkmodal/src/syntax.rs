//! Formula AST, concrete syntax, subformula fragments, and axiom-scheme matching.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A bi-modal formula over `0`, variables, `&`, `|`, `->`, `[]`, `<>`.
///
/// Derived connectives are expanded eagerly: `~f` is `f -> 0`, `1` is
/// `0 -> 0`, and `f <-> g` is `(f -> g) & (g -> f)`. Structural equality is
/// syntactic identity after that expansion. The derived `Ord` gives the
/// canonical formula order used for deterministic iteration everywhere
/// (fragments, instance enumeration, tie-breaking).
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    Bot,
    Var(String),
    And(Arc<Formula>, Arc<Formula>),
    Or(Arc<Formula>, Arc<Formula>),
    Imp(Arc<Formula>, Arc<Formula>),
    Box(Arc<Formula>),
    Dia(Arc<Formula>),
}

impl Formula {
    /// Propositional variable. Panics if `name` is not a valid identifier
    /// (`[a-zA-Z][a-zA-Z0-9_]*`); the parser never produces invalid names.
    pub fn var(name: &str) -> Formula {
        assert!(
            is_identifier(name),
            "invalid variable identifier: {name:?}"
        );
        Formula::Var(name.to_string())
    }

    /// Metavariable for axiom schemes, printed `?name`. Disjoint from object
    /// variables by construction (object identifiers cannot start with `?`).
    pub fn metavar(name: &str) -> Formula {
        assert!(is_identifier(name), "invalid metavariable name: {name:?}");
        Formula::Var(format!("?{name}"))
    }

    pub fn and(l: Formula, r: Formula) -> Formula {
        Formula::And(Arc::new(l), Arc::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Formula {
        Formula::Or(Arc::new(l), Arc::new(r))
    }

    pub fn imp(l: Formula, r: Formula) -> Formula {
        Formula::Imp(Arc::new(l), Arc::new(r))
    }

    pub fn boxed(f: Formula) -> Formula {
        Formula::Box(Arc::new(f))
    }

    pub fn diamond(f: Formula) -> Formula {
        Formula::Dia(Arc::new(f))
    }

    /// `~f`, expanded to `f -> 0`.
    pub fn not(f: Formula) -> Formula {
        Formula::imp(f, Formula::Bot)
    }

    /// `1`, expanded to `0 -> 0`.
    pub fn top() -> Formula {
        Formula::imp(Formula::Bot, Formula::Bot)
    }

    /// `l <-> r`, expanded to `(l -> r) & (r -> l)`.
    pub fn iff(l: Formula, r: Formula) -> Formula {
        Formula::and(
            Formula::imp(l.clone(), r.clone()),
            Formula::imp(r, l),
        )
    }

    /// True for the formulas that act as atoms of the propositional reduct
    /// `L(Var ∪ X)`: variables and formulas headed by a modal operator.
    pub fn is_atom(&self) -> bool {
        matches!(self, Formula::Var(_) | Formula::Box(_) | Formula::Dia(_))
    }

    /// Outermost atoms of the propositional reduct: variables plus maximal
    /// modal subformulas (their insides are not descended into).
    pub fn atoms(&self) -> BTreeSet<Formula> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<Formula>) {
        match self {
            Formula::Bot => {}
            Formula::Var(_) | Formula::Box(_) | Formula::Dia(_) => {
                out.insert(self.clone());
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_atoms(out);
                r.collect_atoms(out);
            }
        }
    }

    /// All variable names occurring anywhere, including under modalities.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_variables(&mut out);
        out
    }

    fn collect_variables(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::Bot => {}
            Formula::Var(v) => {
                out.insert(v.clone());
            }
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => {
                l.collect_variables(out);
                r.collect_variables(out);
            }
            Formula::Box(f) | Formula::Dia(f) => f.collect_variables(out),
        }
    }

    /// Immediate subformulas (one level).
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::Bot | Formula::Var(_) => vec![],
            Formula::And(l, r) | Formula::Or(l, r) | Formula::Imp(l, r) => vec![l, r],
            Formula::Box(f) | Formula::Dia(f) => vec![f],
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Formula::Imp(..) => 1,
            Formula::Or(..) => 2,
            Formula::And(..) => 3,
            _ => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let wrap = self.prec() < min;
        if wrap {
            write!(f, "(")?;
        }
        match self {
            Formula::Bot => write!(f, "0")?,
            Formula::Var(v) => write!(f, "{v}")?,
            Formula::Imp(l, r) => {
                l.fmt_prec(f, 2)?;
                write!(f, " -> ")?;
                r.fmt_prec(f, 1)?;
            }
            Formula::Or(l, r) => {
                l.fmt_prec(f, 2)?;
                write!(f, " | ")?;
                r.fmt_prec(f, 3)?;
            }
            Formula::And(l, r) => {
                l.fmt_prec(f, 3)?;
                write!(f, " & ")?;
                r.fmt_prec(f, 4)?;
            }
            Formula::Box(s) => {
                write!(f, "[]")?;
                s.fmt_prec(f, 4)?;
            }
            Formula::Dia(s) => {
                write!(f, "<>")?;
                s.fmt_prec(f, 4)?;
            }
        }
        if wrap {
            write!(f, ")")?;
        }
        Ok(())
    }
}

/// Renders with the minimal parentheses forced by the grammar, so that
/// `parse(render(f)) == f`.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 1)
    }
}

impl fmt::Debug for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl FromStr for Formula {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

impl Serialize for Formula {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        parse(&s).map_err(D::Error::custom)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Syntax error with the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {pos}: {msg}")]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

/// Parses an object formula. Grammar:
///
/// ```text
/// formula := iff ;
/// iff     := imp ("<->" imp)* ;
/// imp     := or ("->" imp)? ;
/// or      := and ("|" and)* ;
/// and     := unary ("&" unary)* ;
/// unary   := ("~" | "[]" | "<>") unary | "0" | "1" | IDENT | "(" formula ")" .
/// ```
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    Parser::new(text, false).run()
}

/// Parses a scheme: the object grammar extended with `?IDENT` metavariables.
pub fn parse_scheme(text: &str) -> Result<Scheme, ParseError> {
    Ok(Scheme::new(Parser::new(text, true).run()?))
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    metas: bool,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, metas: bool) -> Self {
        Parser {
            bytes: text.as_bytes(),
            pos: 0,
            metas,
        }
    }

    fn run(mut self) -> Result<Formula, ParseError> {
        let f = self.iff()?;
        self.skip_ws();
        if self.pos < self.bytes.len() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(f)
    }

    fn err(&self, msg: &str) -> ParseError {
        ParseError {
            pos: self.pos,
            msg: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.bytes[self.pos..].starts_with(tok.as_bytes()) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn peek_is(&mut self, tok: &str) -> bool {
        self.skip_ws();
        self.bytes[self.pos..].starts_with(tok.as_bytes())
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.imp()?;
        while self.peek_is("<->") {
            self.eat("<->");
            let rhs = self.imp()?;
            f = Formula::iff(f, rhs);
        }
        Ok(f)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        // "<->" must not be consumed as "<" ... ; only "->" starts an imp.
        if !self.peek_is("<->") && self.eat("->") {
            let rhs = self.imp()?;
            return Ok(Formula::imp(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while self.eat("|") {
            let rhs = self.and()?;
            f = Formula::or(f, rhs);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.unary()?;
        while self.eat("&") {
            let rhs = self.unary()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        if self.eat("~") {
            return Ok(Formula::not(self.unary()?));
        }
        if self.eat("[]") {
            return Ok(Formula::boxed(self.unary()?));
        }
        if self.peek_is("<->") {
            return Err(self.err("expected a formula"));
        }
        if self.eat("<>") {
            return Ok(Formula::diamond(self.unary()?));
        }
        if self.eat("(") {
            let f = self.iff()?;
            if !self.eat(")") {
                return Err(self.err("expected ')'"));
            }
            return Ok(f);
        }
        if self.eat("0") {
            return Ok(Formula::Bot);
        }
        if self.eat("1") {
            return Ok(Formula::top());
        }
        if self.metas && self.eat("?") {
            let name = self.ident()?;
            return Ok(Formula::Var(format!("?{name}")));
        }
        let name = self.ident()?;
        Ok(Formula::Var(name))
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.pos >= self.bytes.len() || !self.bytes[self.pos].is_ascii_alphabetic() {
            return Err(self.err("expected a formula"));
        }
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        Ok(String::from_utf8(self.bytes[start..self.pos].to_vec()).unwrap())
    }
}

/// A finite set of formulas closed under immediate subformulas and
/// containing `0`. Iteration order is the canonical formula order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Fragment {
    formulas: BTreeSet<Formula>,
}

impl Serialize for Fragment {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.formulas.iter().map(|f| f.to_string()))
    }
}

impl Fragment {
    /// Smallest fragment containing `roots`: the subformula closure plus `0`.
    pub fn closure<I: IntoIterator<Item = Formula>>(roots: I) -> Fragment {
        let mut formulas = BTreeSet::new();
        let mut stack: Vec<Formula> = roots.into_iter().collect();
        formulas.insert(Formula::Bot);
        while let Some(f) = stack.pop() {
            if formulas.contains(&f) {
                continue;
            }
            for c in f.children() {
                stack.push(c.clone());
            }
            formulas.insert(f);
        }
        Fragment { formulas }
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.formulas.contains(f)
    }

    pub fn len(&self) -> usize {
        self.formulas.len()
    }

    pub fn is_empty(&self) -> bool {
        false // always contains Bot
    }

    pub fn iter(&self) -> impl Iterator<Item = &Formula> + '_ {
        self.formulas.iter()
    }

    /// Variable names occurring in the fragment.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for f in &self.formulas {
            f.collect_variables(&mut out);
        }
        out
    }
}

/// An axiom scheme: a formula whose `?x` variables are metavariables.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Scheme {
    template: Formula,
}

impl Scheme {
    pub fn new(template: Formula) -> Scheme {
        Scheme { template }
    }

    pub fn template(&self) -> &Formula {
        &self.template
    }

    /// Metavariable names (without the `?` sigil), sorted.
    pub fn metavars(&self) -> BTreeSet<String> {
        self.template
            .variables()
            .into_iter()
            .filter_map(|v| v.strip_prefix('?').map(str::to_string))
            .collect()
    }

    /// Applies `subst` (metavariable name without sigil → formula) to the
    /// template. Fails if a metavariable is left unbound.
    pub fn instantiate(
        &self,
        subst: &std::collections::BTreeMap<String, Formula>,
    ) -> Result<Formula, SchemeError> {
        fn go(
            f: &Formula,
            subst: &std::collections::BTreeMap<String, Formula>,
        ) -> Result<Formula, SchemeError> {
            match f {
                Formula::Var(v) => {
                    if let Some(name) = v.strip_prefix('?') {
                        subst
                            .get(name)
                            .cloned()
                            .ok_or_else(|| SchemeError::UnboundMetavariable(name.to_string()))
                    } else {
                        Ok(f.clone())
                    }
                }
                Formula::Bot => Ok(Formula::Bot),
                Formula::And(l, r) => Ok(Formula::and(go(l, subst)?, go(r, subst)?)),
                Formula::Or(l, r) => Ok(Formula::or(go(l, subst)?, go(r, subst)?)),
                Formula::Imp(l, r) => Ok(Formula::imp(go(l, subst)?, go(r, subst)?)),
                Formula::Box(s) => Ok(Formula::boxed(go(s, subst)?)),
                Formula::Dia(s) => Ok(Formula::diamond(go(s, subst)?)),
            }
        }
        go(&self.template, subst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemeError {
    #[error("metavariable ?{0} is unbound")]
    UnboundMetavariable(String),
}

/// Matches `f` against the scheme, returning the unique substitution σ with
/// σ(scheme) = f if one exists. Repeated metavariables must map to identical
/// subtrees.
pub fn match_scheme(
    f: &Formula,
    scheme: &Scheme,
) -> Option<std::collections::BTreeMap<String, Formula>> {
    let mut subst = std::collections::BTreeMap::new();
    if match_rec(scheme.template(), f, &mut subst) {
        Some(subst)
    } else {
        None
    }
}

fn match_rec(
    template: &Formula,
    target: &Formula,
    subst: &mut std::collections::BTreeMap<String, Formula>,
) -> bool {
    match (template, target) {
        (Formula::Var(v), _) if v.starts_with('?') => {
            let name = v[1..].to_string();
            match subst.get(&name) {
                Some(bound) => bound == target,
                None => {
                    subst.insert(name, target.clone());
                    true
                }
            }
        }
        (Formula::Bot, Formula::Bot) => true,
        (Formula::Var(a), Formula::Var(b)) => a == b,
        (Formula::And(l1, r1), Formula::And(l2, r2))
        | (Formula::Or(l1, r1), Formula::Or(l2, r2))
        | (Formula::Imp(l1, r1), Formula::Imp(l2, r2)) => {
            match_rec(l1, l2, subst) && match_rec(r1, r2, subst)
        }
        (Formula::Box(s1), Formula::Box(s2)) | (Formula::Dia(s1), Formula::Dia(s2)) => {
            match_rec(s1, s2, subst)
        }
        _ => false,
    }
}

/// Subformula closure of a set of roots; always contains `0`.
pub fn subformula_closure<I: IntoIterator<Item = Formula>>(roots: I) -> Fragment {
    Fragment::closure(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> Formula {
        Formula::var("p")
    }

    fn q() -> Formula {
        Formula::var("q")
    }

    #[test]
    fn parse_box_imp() {
        assert_eq!(parse("[]p -> p").unwrap(), Formula::imp(Formula::boxed(p()), p()));
    }

    #[test]
    fn parse_not_dia_bot() {
        // `~<>0` expands to `<>0 -> 0`
        assert_eq!(
            parse("~<>0").unwrap(),
            Formula::imp(Formula::diamond(Formula::Bot), Formula::Bot)
        );
    }

    #[test]
    fn imp_is_right_associative() {
        assert_eq!(
            parse("p -> q -> r").unwrap(),
            Formula::imp(p(), Formula::imp(q(), Formula::var("r")))
        );
    }

    #[test]
    fn renders_with_forced_parens() {
        assert_eq!(Formula::boxed(p()).to_string(), "[]p");
        assert_eq!(
            Formula::imp(Formula::imp(p(), q()), q()).to_string(),
            "(p -> q) -> q"
        );
        let f = Formula::imp(Formula::diamond(Formula::Bot), Formula::Bot);
        assert_eq!(parse(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn one_is_expanded() {
        assert_eq!(parse("1").unwrap(), Formula::imp(Formula::Bot, Formula::Bot));
        assert_eq!(
            parse("p <-> q").unwrap(),
            Formula::and(Formula::imp(p(), q()), Formula::imp(q(), p()))
        );
    }

    #[test]
    fn error_carries_position() {
        let err = parse("p -> ").unwrap_err();
        assert_eq!(err.pos, 5);
        let err = parse("p q").unwrap_err();
        assert!(err.pos >= 2);
        assert!(parse("?a -> p").is_err(), "metavariables rejected in object syntax");
    }

    #[test]
    fn closure_examples() {
        let f = Fragment::closure([Formula::boxed(p())]);
        let expect: BTreeSet<Formula> =
            [Formula::boxed(p()), p(), Formula::Bot].into_iter().collect();
        assert_eq!(f.iter().cloned().collect::<BTreeSet<_>>(), expect);

        let empty = Fragment::closure([]);
        assert_eq!(empty.len(), 1);
        assert!(empty.contains(&Formula::Bot));

        let f = Fragment::closure([Formula::diamond(Formula::or(p(), q()))]);
        assert_eq!(f.len(), 5);
        assert!(f.contains(&Formula::or(p(), q())));
        assert!(f.contains(&q()));
    }

    #[test]
    fn match_k_box() {
        let k = parse_scheme("[](?a -> ?b) -> ([]?a -> []?b)").unwrap();
        let inst = parse("[](p -> q) -> ([]p -> []q)").unwrap();
        let subst = match_scheme(&inst, &k).unwrap();
        assert_eq!(subst["a"], p());
        assert_eq!(subst["b"], q());
        assert_eq!(k.instantiate(&subst).unwrap(), inst);

        assert!(match_scheme(&parse("p -> q").unwrap(), &k).is_none());

        let repeated = parse("[](p -> p) -> ([]p -> []p)").unwrap();
        let subst = match_scheme(&repeated, &k).unwrap();
        assert_eq!(subst["a"], p());
        assert_eq!(subst["b"], p());
        // inconsistent rebinding must fail
        let bad = parse("[](p -> q) -> ([]p -> []p)").unwrap();
        assert!(match_scheme(&bad, &k).is_none());
    }
}
