//! Finite GK-models: exact evaluation, model validity, frame-property
//! checks, scheme checking over fragments, and the fragment-relative
//! optimal-model transform.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::syntax::{Formula, Fragment, Scheme};
use crate::truth::{TruthValue, TruthError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown world {0:?}")]
    UnknownWorld(String),
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("model schema error at {path}: {msg}")]
    Schema { path: String, msg: String },
    #[error(transparent)]
    Truth(#[from] TruthError),
}

/// A finite Kripke model with [0,1]-valued accessibility `S` and atomic
/// assignment `e`. Worlds and variables are kept in declaration order;
/// internally everything is indexed.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct GKModel {
    worlds: Vec<String>,
    vars: Vec<String>,
    s: Vec<Vec<TruthValue>>,
    e: Vec<Vec<TruthValue>>,
}

impl GKModel {
    pub fn new(
        worlds: Vec<String>,
        vars: Vec<String>,
        s: Vec<Vec<TruthValue>>,
        e: Vec<Vec<TruthValue>>,
    ) -> Result<GKModel, ModelError> {
        let n = worlds.len();
        if n == 0 {
            return Err(ModelError::Schema {
                path: "worlds".into(),
                msg: "at least one world is required".into(),
            });
        }
        for (name, what) in worlds.iter().map(|w| (w, "world")).chain(vars.iter().map(|v| (v, "variable"))) {
            if name.is_empty() || name.contains(',') {
                return Err(ModelError::Schema {
                    path: format!("{what} {name:?}"),
                    msg: "names must be nonempty and must not contain ','".into(),
                });
            }
        }
        let mut sorted = worlds.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != n {
            return Err(ModelError::Schema {
                path: "worlds".into(),
                msg: "duplicate world name".into(),
            });
        }
        if s.len() != n || s.iter().any(|row| row.len() != n) {
            return Err(ModelError::Schema {
                path: "S".into(),
                msg: format!("expected a {n}x{n} matrix"),
            });
        }
        if e.len() != n || e.iter().any(|row| row.len() != vars.len()) {
            return Err(ModelError::Schema {
                path: "e".into(),
                msg: format!("expected {n} rows of {} values", vars.len()),
            });
        }
        Ok(GKModel { worlds, vars, s, e })
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn world_index(&self, name: &str) -> Result<usize, ModelError> {
        self.worlds
            .iter()
            .position(|w| w == name)
            .ok_or_else(|| ModelError::UnknownWorld(name.to_string()))
    }

    pub fn s_value(&self, x: usize, y: usize) -> &TruthValue {
        &self.s[x][y]
    }

    pub fn e_value(&self, x: usize, var: usize) -> &TruthValue {
        &self.e[x][var]
    }

    fn var_index(&self, name: &str) -> Result<usize, ModelError> {
        self.vars
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| ModelError::UnknownVariable(name.to_string()))
    }

    /// Value of `f` at every world, in world order. The modal clauses are
    /// the attained min/max over the finite world set:
    /// `e(x,[]f) = min_y (Sxy ⇒ e(y,f))`, `e(x,<>f) = max_y (Sxy ∧ e(y,f))`.
    pub fn eval_all(&self, f: &Formula) -> Result<Vec<TruthValue>, ModelError> {
        let mut cache = HashMap::new();
        self.eval_rec(f, &mut cache)
    }

    /// Value of `f` at the named world.
    pub fn eval(&self, world: &str, f: &Formula) -> Result<TruthValue, ModelError> {
        let x = self.world_index(world)?;
        Ok(self.eval_all(f)?[x].clone())
    }

    fn eval_rec(
        &self,
        f: &Formula,
        cache: &mut HashMap<Formula, Vec<TruthValue>>,
    ) -> Result<Vec<TruthValue>, ModelError> {
        if let Some(hit) = cache.get(f) {
            return Ok(hit.clone());
        }
        let n = self.worlds.len();
        let values = match f {
            Formula::Bot => vec![TruthValue::zero(); n],
            Formula::Var(v) => {
                let vi = self.var_index(v)?;
                (0..n).map(|x| self.e[x][vi].clone()).collect()
            }
            Formula::And(l, r) => {
                let a = self.eval_rec(l, cache)?;
                let b = self.eval_rec(r, cache)?;
                a.iter().zip(&b).map(|(x, y)| x.meet(y)).collect()
            }
            Formula::Or(l, r) => {
                let a = self.eval_rec(l, cache)?;
                let b = self.eval_rec(r, cache)?;
                a.iter().zip(&b).map(|(x, y)| x.join(y)).collect()
            }
            Formula::Imp(l, r) => {
                let a = self.eval_rec(l, cache)?;
                let b = self.eval_rec(r, cache)?;
                a.iter().zip(&b).map(|(x, y)| x.residuum(y)).collect()
            }
            Formula::Box(sub) => {
                let inner = self.eval_rec(sub, cache)?;
                (0..n)
                    .map(|x| {
                        (0..n)
                            .map(|y| self.s[x][y].residuum(&inner[y]))
                            .fold(TruthValue::one(), |acc, v| acc.meet(&v))
                    })
                    .collect()
            }
            Formula::Dia(sub) => {
                let inner = self.eval_rec(sub, cache)?;
                (0..n)
                    .map(|x| {
                        (0..n)
                            .map(|y| self.s[x][y].meet(&inner[y]))
                            .fold(TruthValue::zero(), |acc, v| acc.join(&v))
                    })
                    .collect()
            }
        };
        cache.insert(f.clone(), values.clone());
        Ok(values)
    }

    /// `None` when `f` evaluates to 1 at every world; otherwise the first
    /// world (in declaration order) where it falls short, with its value.
    pub fn valid_in_model(&self, f: &Formula) -> Result<Option<(String, TruthValue)>, ModelError> {
        let values = self.eval_all(f)?;
        for (w, v) in self.worlds.iter().zip(values) {
            if !v.is_one() {
                return Ok(Some((w.clone(), v)));
            }
        }
        Ok(None)
    }

    /// Reflexivity, transitivity and symmetry of the underlying frame, with
    /// the first violating witness for each failed property.
    pub fn frame_properties(&self) -> FramePropertyReport {
        let n = self.worlds.len();
        let mut reflexive = None;
        for x in 0..n {
            if !self.s[x][x].is_one() {
                reflexive = Some(self.worlds[x].clone());
                break;
            }
        }
        let mut transitive = None;
        'outer: for x in 0..n {
            for y in 0..n {
                for z in 0..n {
                    if self.s[x][y].meet(&self.s[y][z]) > self.s[x][z] {
                        transitive = Some((
                            self.worlds[x].clone(),
                            self.worlds[y].clone(),
                            self.worlds[z].clone(),
                        ));
                        break 'outer;
                    }
                }
            }
        }
        let mut symmetric = None;
        'sym: for x in 0..n {
            for y in 0..n {
                if self.s[x][y] != self.s[y][x] {
                    symmetric = Some((self.worlds[x].clone(), self.worlds[y].clone()));
                    break 'sym;
                }
            }
        }
        FramePropertyReport {
            reflexive_violation: reflexive,
            transitivity_violation: transitive,
            symmetry_violation: symmetric,
        }
    }

    /// Fragment-relative optimal transform: keeps worlds and `e`, replaces
    /// `S` by
    ///
    /// ```text
    /// S'xy = min( min over []ψ ∈ F of (e(x,[]ψ) ⇒ e(y,ψ)),
    ///             min over <>ψ ∈ F of (e(y,ψ) ⇒ e(x,<>ψ)) )
    /// ```
    ///
    /// with empty minima equal to 1. `S ≤ S'` pointwise, and every formula
    /// of `F` keeps its value at every world.
    pub fn optimize_fragment(&self, fragment: &Fragment) -> Result<GKModel, ModelError> {
        let n = self.worlds.len();
        let mut cache = HashMap::new();
        let mut box_parts: Vec<(Vec<TruthValue>, Vec<TruthValue>)> = Vec::new();
        let mut dia_parts: Vec<(Vec<TruthValue>, Vec<TruthValue>)> = Vec::new();
        for f in fragment.iter() {
            match f {
                Formula::Box(sub) => {
                    let outer = self.eval_rec(f, &mut cache)?;
                    let inner = self.eval_rec(sub, &mut cache)?;
                    box_parts.push((outer, inner));
                }
                Formula::Dia(sub) => {
                    let outer = self.eval_rec(f, &mut cache)?;
                    let inner = self.eval_rec(sub, &mut cache)?;
                    dia_parts.push((outer, inner));
                }
                _ => {}
            }
        }
        let mut s = vec![vec![TruthValue::one(); n]; n];
        for x in 0..n {
            for y in 0..n {
                let mut acc = TruthValue::one();
                for (outer, inner) in &box_parts {
                    acc = acc.meet(&outer[x].residuum(&inner[y]));
                }
                for (outer, inner) in &dia_parts {
                    acc = acc.meet(&inner[y].residuum(&outer[x]));
                }
                s[x][y] = acc;
            }
        }
        GKModel::new(self.worlds.clone(), self.vars.clone(), s, self.e.clone())
    }

    /// Instantiates the scheme with formulas of `F` (tuple enumeration in
    /// formula order, truncated at `cap` instances) and returns the
    /// instances that are not valid in the model.
    pub fn check_scheme(
        &self,
        scheme: &Scheme,
        fragment: &Fragment,
        cap: usize,
    ) -> Result<Vec<Formula>, ModelError> {
        let mut violations = Vec::new();
        for inst in scheme_instances(scheme, fragment, cap) {
            if self.valid_in_model(&inst)?.is_some() {
                violations.push(inst);
            }
        }
        Ok(violations)
    }

    pub fn from_json_str(json: &str) -> Result<GKModel, ModelError> {
        let raw: RawModel = serde_json::from_str(json).map_err(|e| ModelError::Schema {
            path: "$".into(),
            msg: e.to_string(),
        })?;
        raw.build()
    }

    pub fn to_json_string(&self) -> String {
        let mut s = BTreeMap::new();
        for (x, w) in self.worlds.iter().enumerate() {
            for (y, v) in self.worlds.iter().enumerate() {
                s.insert(format!("{w},{v}"), self.s[x][y].to_string());
            }
        }
        let mut e = BTreeMap::new();
        for (x, w) in self.worlds.iter().enumerate() {
            let mut row = BTreeMap::new();
            for (vi, var) in self.vars.iter().enumerate() {
                row.insert(var.clone(), self.e[x][vi].to_string());
            }
            e.insert(w.clone(), row);
        }
        let raw = RawModel {
            worlds: self.worlds.clone(),
            vars: self.vars.clone(),
            s,
            e,
        };
        serde_json::to_string_pretty(&raw).expect("model serialization cannot fail")
    }
}

/// Default cap on scheme instantiation (two metavariables give |F|^2
/// instances, which needs a bound for test runtime).
pub const DEFAULT_INSTANCE_CAP: usize = 400;

/// All instances of `scheme` with metavariables ranging over `fragment`, in
/// deterministic order, truncated at `cap`.
pub fn scheme_instances(scheme: &Scheme, fragment: &Fragment, cap: usize) -> Vec<Formula> {
    let metas: Vec<String> = scheme.metavars().into_iter().collect();
    let pool: Vec<Formula> = fragment.iter().cloned().collect();
    let mut out = Vec::new();
    if metas.is_empty() {
        if let Ok(f) = scheme.instantiate(&BTreeMap::new()) {
            out.push(f);
        }
        return out;
    }
    let mut idx = vec![0usize; metas.len()];
    loop {
        if out.len() >= cap {
            return out;
        }
        let subst: BTreeMap<String, Formula> = metas
            .iter()
            .cloned()
            .zip(idx.iter().map(|&i| pool[i].clone()))
            .collect();
        out.push(scheme.instantiate(&subst).expect("all metavariables bound"));
        let mut k = metas.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < pool.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

/// Frame property flags with a violating witness exactly when a flag is
/// false.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct FramePropertyReport {
    /// First world `x` with `Sxx < 1`, if any.
    pub reflexive_violation: Option<String>,
    /// First triple `(x,y,z)` with `min(Sxy,Syz) > Sxz`, if any.
    pub transitivity_violation: Option<(String, String, String)>,
    /// First pair `(x,y)` with `Sxy ≠ Syx`, if any.
    pub symmetry_violation: Option<(String, String)>,
}

impl FramePropertyReport {
    pub fn is_reflexive(&self) -> bool {
        self.reflexive_violation.is_none()
    }

    pub fn is_transitive(&self) -> bool {
        self.transitivity_violation.is_none()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_violation.is_none()
    }
}

/// On-disk model format. Omitted `S` entries default to 0 except the
/// diagonal, which must be explicit; omitted `e` entries default to 0.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    worlds: Vec<String>,
    vars: Vec<String>,
    #[serde(rename = "S", default)]
    s: BTreeMap<String, String>,
    #[serde(default)]
    e: BTreeMap<String, BTreeMap<String, String>>,
}

impl RawModel {
    fn build(self) -> Result<GKModel, ModelError> {
        let n = self.worlds.len();
        let parse_value = |path: String, text: &str| -> Result<TruthValue, ModelError> {
            text.parse::<TruthValue>().map_err(|e| ModelError::Schema {
                path,
                msg: e.to_string(),
            })
        };
        let world_index = |name: &str, path: &str| -> Result<usize, ModelError> {
            self.worlds
                .iter()
                .position(|w| w == name)
                .ok_or_else(|| ModelError::Schema {
                    path: path.to_string(),
                    msg: format!("unknown world {name:?}"),
                })
        };

        let mut s = vec![vec![None; n]; n];
        for (key, text) in &self.s {
            let path = format!("S[{key:?}]");
            let (from, to) = key.split_once(',').ok_or_else(|| ModelError::Schema {
                path: path.clone(),
                msg: "key must be \"world,world\"".into(),
            })?;
            let x = world_index(from.trim(), &path)?;
            let y = world_index(to.trim(), &path)?;
            s[x][y] = Some(parse_value(path, text)?);
        }
        let mut s_full = Vec::with_capacity(n);
        for x in 0..n {
            let mut row = Vec::with_capacity(n);
            for y in 0..n {
                match s[x][y].take() {
                    Some(v) => row.push(v),
                    None if x == y => {
                        return Err(ModelError::Schema {
                            path: format!("S[\"{w},{w}\"]", w = self.worlds[x]),
                            msg: "diagonal entries must be explicit".into(),
                        })
                    }
                    None => row.push(TruthValue::zero()),
                }
            }
            s_full.push(row);
        }

        let mut e_full = vec![vec![TruthValue::zero(); self.vars.len()]; n];
        for (world, row) in &self.e {
            let path = format!("e[{world:?}]");
            let x = world_index(world, &path)?;
            for (var, text) in row {
                let path = format!("e[{world:?}][{var:?}]");
                let vi = self
                    .vars
                    .iter()
                    .position(|v| v == var)
                    .ok_or_else(|| ModelError::Schema {
                        path: path.clone(),
                        msg: format!("unknown variable {var:?}"),
                    })?;
                e_full[x][vi] = parse_value(path, text)?;
            }
        }

        GKModel::new(self.worlds, self.vars, s_full, e_full)
    }
}
