//! Bounded counter-model search: exhaustive sweeps over small world counts
//! (complete up to order isomorphism of the value pattern) and a stochastic
//! mode for larger instances, with frame-class restrictions.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kripke::GKModel;
use crate::syntax::Formula;
use crate::truth::{chain, Bounds, TruthValue};

/// Structural restrictions on the accessibility relation.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct FrameClass {
    pub reflexive: bool,
    pub transitive: bool,
    pub symmetric: bool,
    pub crisp: bool,
}

impl FrameClass {
    pub fn unrestricted() -> FrameClass {
        FrameClass::default()
    }

    /// Fuzzy equivalence relations: reflexive, transitive and symmetric.
    pub fn equivalence() -> FrameClass {
        FrameClass {
            reflexive: true,
            transitive: true,
            symmetric: true,
            crisp: false,
        }
    }

    pub fn satisfied_by(&self, model: &GKModel) -> bool {
        let report = model.frame_properties();
        if self.reflexive && !report.is_reflexive() {
            return false;
        }
        if self.transitive && !report.is_transitive() {
            return false;
        }
        if self.symmetric && !report.is_symmetric() {
            return false;
        }
        if self.crisp {
            let n = model.worlds().len();
            for x in 0..n {
                for y in 0..n {
                    let v = model.s_value(x, y);
                    if !v.is_zero() && !v.is_one() {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SearchMode {
    Exhaustive,
    Stochastic,
}

/// Bounds on the search effort. `chain_size`, when set, restricts values to
/// the evenly spaced chain with that many elements (raw product sweep);
/// otherwise the exhaustive mode enumerates value patterns up to order
/// isomorphism, which is complete for the given world count.
#[derive(Clone, Debug)]
pub struct SearchBudget {
    pub max_worlds: usize,
    pub mode: SearchMode,
    pub chain_size: Option<usize>,
    pub iterations: usize,
    pub seed: u64,
    pub jobs: usize,
}

impl SearchBudget {
    pub fn exhaustive(max_worlds: usize) -> SearchBudget {
        SearchBudget {
            max_worlds,
            mode: SearchMode::Exhaustive,
            chain_size: None,
            iterations: 0,
            seed: 0,
            jobs: 1,
        }
    }

    pub fn stochastic(max_worlds: usize, iterations: usize, seed: u64) -> SearchBudget {
        SearchBudget {
            max_worlds,
            mode: SearchMode::Stochastic,
            chain_size: None,
            iterations,
            seed,
            jobs: 1,
        }
    }
}

/// A refutation certificate: the model, a world where the formula falls
/// below 1, and the value it takes there.
#[derive(Clone, Debug)]
pub struct Countermodel {
    pub model: GKModel,
    pub world: String,
    pub value: TruthValue,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SearchOutcome {
    Found(Box<Countermodel>),
    /// The swept space is exhausted; no counter-model exists in it.
    ExhaustedNone,
    /// Stochastic search gave up; absence of a counter-model is not implied.
    Inconclusive,
}

impl PartialEq for Countermodel {
    fn eq(&self, other: &Self) -> bool {
        self.world == other.world && self.value == other.value && self.model == other.model
    }
}
impl Eq for Countermodel {}

pub const EXHAUSTIVE_WORLD_CAP: usize = 3;
pub const EXHAUSTIVE_VAR_CAP: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("invalid budget: {0}")]
    InvalidBudget(String),
    #[error("exhaustive cap exceeded: {0} worlds requested, cap is {EXHAUSTIVE_WORLD_CAP}")]
    WorldCapExceeded(usize),
    #[error("exhaustive cap exceeded: formula has {0} variables, cap is {EXHAUSTIVE_VAR_CAP}")]
    VarCapExceeded(usize),
}

/// Searches for a model of the class refuting `f` at some world. In
/// exhaustive mode world counts 1..=max_worlds are swept in order and the
/// first counter-model in canonical enumeration order is returned; absence
/// is then a certificate for the swept space. In stochastic mode absence is
/// inconclusive.
pub fn find_countermodel(
    f: &Formula,
    cls: &FrameClass,
    budget: &SearchBudget,
) -> Result<SearchOutcome, SearchError> {
    if budget.max_worlds == 0 {
        return Err(SearchError::InvalidBudget("max_worlds must be at least 1".into()));
    }
    if let Some(c) = budget.chain_size {
        if c < 2 {
            return Err(SearchError::InvalidBudget("chain_size must be at least 2".into()));
        }
    }
    let vars: Vec<String> = f.variables().into_iter().collect();
    match budget.mode {
        SearchMode::Exhaustive => {
            if budget.max_worlds > EXHAUSTIVE_WORLD_CAP {
                return Err(SearchError::WorldCapExceeded(budget.max_worlds));
            }
            if vars.len() > EXHAUSTIVE_VAR_CAP {
                return Err(SearchError::VarCapExceeded(vars.len()));
            }
            let jobs = budget.jobs.max(1);
            for n in 1..=budget.max_worlds {
                if let Some(cm) = exhaustive_sweep(f, cls, &vars, n, budget.chain_size, jobs) {
                    return Ok(SearchOutcome::Found(Box::new(cm)));
                }
            }
            Ok(SearchOutcome::ExhaustedNone)
        }
        SearchMode::Stochastic => {
            if budget.iterations == 0 {
                return Err(SearchError::InvalidBudget("iterations must be at least 1".into()));
            }
            match stochastic_search(f, cls, &vars, budget) {
                Some(cm) => Ok(SearchOutcome::Found(Box::new(cm))),
                None => Ok(SearchOutcome::Inconclusive),
            }
        }
    }
}

/// Exhaustive verdict for world counts up to `max_worlds`: `Ok(None)` means
/// no counter-model with that many worlds exists (complete via the order
/// isomorphism argument); otherwise the counter-model found.
pub fn certify_no_small_countermodel(
    f: &Formula,
    cls: &FrameClass,
    max_worlds: usize,
) -> Result<Option<Countermodel>, SearchError> {
    match find_countermodel(f, cls, &SearchBudget::exhaustive(max_worlds))? {
        SearchOutcome::Found(cm) => Ok(Some(*cm)),
        SearchOutcome::ExhaustedNone => Ok(None),
        SearchOutcome::Inconclusive => unreachable!("exhaustive mode cannot be inconclusive"),
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Slot {
    S(usize, usize),
    E(usize, usize),
}

#[derive(Clone)]
struct Partial {
    n: usize,
    s: Vec<Vec<Option<TruthValue>>>,
    e: Vec<Vec<Option<TruthValue>>>,
}

impl Partial {
    fn new(n: usize, vars: usize, cls: &FrameClass) -> Partial {
        let mut s = vec![vec![None; n]; n];
        if cls.reflexive {
            for (x, row) in s.iter_mut().enumerate() {
                row[x] = Some(TruthValue::one());
            }
        }
        Partial {
            n,
            s,
            e: vec![vec![None; vars]; n],
        }
    }

    fn set(&mut self, slot: Slot, value: Option<TruthValue>) {
        match slot {
            Slot::S(x, y) => self.s[x][y] = value,
            Slot::E(x, v) => self.e[x][v] = value,
        }
    }

    /// Transitivity over fully assigned triples. Reflexivity, symmetry and
    /// crispness are enforced by construction.
    fn transitivity_ok(&self) -> bool {
        for x in 0..self.n {
            for y in 0..self.n {
                let (Some(xy), ) = (&self.s[x][y],) else { continue };
                for z in 0..self.n {
                    if let (Some(yz), Some(xz)) = (&self.s[y][z], &self.s[x][z]) {
                        if xy.meet(yz) > *xz {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn bounds(&self, f: &Formula, x: usize, vars: &[String]) -> Bounds {
        let mut memo = HashMap::new();
        self.bounds_rec(f, x, vars, &mut memo)
    }

    fn bounds_rec(
        &self,
        f: &Formula,
        x: usize,
        vars: &[String],
        memo: &mut HashMap<(Formula, usize), Bounds>,
    ) -> Bounds {
        if let Some(hit) = memo.get(&(f.clone(), x)) {
            return hit.clone();
        }
        let out = match f {
            Formula::Bot => Bounds::exact(TruthValue::zero()),
            Formula::Var(name) => {
                let vi = vars.iter().position(|v| v == name).expect("declared variable");
                match &self.e[x][vi] {
                    Some(v) => Bounds::exact(v.clone()),
                    None => Bounds::full(),
                }
            }
            Formula::And(l, r) => {
                let a = self.bounds_rec(l, x, vars, memo);
                let b = self.bounds_rec(r, x, vars, memo);
                Bounds {
                    lo: a.lo.meet(&b.lo),
                    hi: a.hi.meet(&b.hi),
                }
            }
            Formula::Or(l, r) => {
                let a = self.bounds_rec(l, x, vars, memo);
                let b = self.bounds_rec(r, x, vars, memo);
                Bounds {
                    lo: a.lo.join(&b.lo),
                    hi: a.hi.join(&b.hi),
                }
            }
            Formula::Imp(l, r) => {
                let a = self.bounds_rec(l, x, vars, memo);
                let b = self.bounds_rec(r, x, vars, memo);
                Bounds {
                    lo: a.hi.residuum(&b.lo),
                    hi: a.lo.residuum(&b.hi),
                }
            }
            Formula::Box(sub) => {
                let mut lo = TruthValue::one();
                let mut hi = TruthValue::one();
                for y in 0..self.n {
                    let s = match &self.s[x][y] {
                        Some(v) => Bounds::exact(v.clone()),
                        None => Bounds::full(),
                    };
                    let inner = self.bounds_rec(sub, y, vars, memo);
                    lo = lo.meet(&s.hi.residuum(&inner.lo));
                    hi = hi.meet(&s.lo.residuum(&inner.hi));
                }
                Bounds { lo, hi }
            }
            Formula::Dia(sub) => {
                let mut lo = TruthValue::zero();
                let mut hi = TruthValue::zero();
                for y in 0..self.n {
                    let s = match &self.s[x][y] {
                        Some(v) => Bounds::exact(v.clone()),
                        None => Bounds::full(),
                    };
                    let inner = self.bounds_rec(sub, y, vars, memo);
                    lo = lo.join(&s.lo.meet(&inner.lo));
                    hi = hi.join(&s.hi.meet(&inner.hi));
                }
                Bounds { lo, hi }
            }
        };
        memo.insert((f.clone(), x), out.clone());
        out
    }
}

fn midpoint(a: &TruthValue, b: &TruthValue) -> TruthValue {
    let two = BigRational::from_integer(BigInt::from(2));
    TruthValue::try_from_ratio((a.as_ratio() + b.as_ratio()) / two)
        .expect("midpoint stays inside [0,1]")
}

/// One candidate value for a slot; `new_level` records the gap index when
/// the value is a fresh interior level.
#[derive(Clone, Debug)]
struct Choice {
    value: TruthValue,
    new_level: Option<usize>,
}

fn choices(levels: &[TruthValue], crisp_slot: bool, fixed_chain: Option<&[TruthValue]>) -> Vec<Choice> {
    if let Some(chain) = fixed_chain {
        return chain
            .iter()
            .filter(|v| !crisp_slot || v.is_zero() || v.is_one())
            .map(|v| Choice {
                value: v.clone(),
                new_level: None,
            })
            .collect();
    }
    if crisp_slot {
        return vec![
            Choice {
                value: TruthValue::zero(),
                new_level: None,
            },
            Choice {
                value: TruthValue::one(),
                new_level: None,
            },
        ];
    }
    let mut out = Vec::with_capacity(2 * levels.len() + 3);
    out.push(Choice {
        value: TruthValue::zero(),
        new_level: None,
    });
    for gap in 0..=levels.len() {
        let lo = if gap == 0 {
            TruthValue::zero()
        } else {
            levels[gap - 1].clone()
        };
        let hi = if gap == levels.len() {
            TruthValue::one()
        } else {
            levels[gap].clone()
        };
        out.push(Choice {
            value: midpoint(&lo, &hi),
            new_level: Some(gap),
        });
        if gap < levels.len() {
            out.push(Choice {
                value: levels[gap].clone(),
                new_level: None,
            });
        }
    }
    out.push(Choice {
        value: TruthValue::one(),
        new_level: None,
    });
    out
}

struct Enumerator<'a> {
    f: &'a Formula,
    cls: &'a FrameClass,
    vars: &'a [String],
    slots: Vec<Slot>,
    fixed_chain: Option<Vec<TruthValue>>,
}

impl<'a> Enumerator<'a> {
    fn free_slots(n: usize, vars: usize, cls: &FrameClass) -> Vec<Slot> {
        let mut slots = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if cls.reflexive && x == y {
                    continue;
                }
                if cls.symmetric && y < x {
                    continue; // mirrored when the upper entry is assigned
                }
                slots.push(Slot::S(x, y));
            }
        }
        for x in 0..n {
            for v in 0..vars {
                slots.push(Slot::E(x, v));
            }
        }
        slots
    }

    fn run(&self, partial: &mut Partial, levels: &mut Vec<TruthValue>, depth: usize) -> Option<Countermodel> {
        // Prune when every world is forced to 1 on all completions.
        let mut all_one = true;
        for x in 0..partial.n {
            if !partial.bounds(self.f, x, self.vars).lo.is_one() {
                all_one = false;
                break;
            }
        }
        if all_one {
            return None;
        }
        if depth == self.slots.len() {
            return self.leaf(partial);
        }
        let slot = self.slots[depth];
        let crisp_slot = self.cls.crisp && matches!(slot, Slot::S(..));
        for choice in choices(levels, crisp_slot, self.fixed_chain.as_deref()) {
            self.apply(partial, levels, slot, &choice);
            let class_ok = match slot {
                Slot::S(..) => !self.cls.transitive || partial.transitivity_ok(),
                Slot::E(..) => true,
            };
            if class_ok {
                if let Some(found) = self.run(partial, levels, depth + 1) {
                    return Some(found);
                }
            }
            self.undo(partial, levels, slot, &choice);
        }
        None
    }

    fn apply(&self, partial: &mut Partial, levels: &mut Vec<TruthValue>, slot: Slot, choice: &Choice) {
        if let Some(gap) = choice.new_level {
            levels.insert(gap, choice.value.clone());
        }
        partial.set(slot, Some(choice.value.clone()));
        if self.cls.symmetric {
            if let Slot::S(x, y) = slot {
                if x != y {
                    partial.set(Slot::S(y, x), Some(choice.value.clone()));
                }
            }
        }
    }

    fn undo(&self, partial: &mut Partial, levels: &mut Vec<TruthValue>, slot: Slot, choice: &Choice) {
        if let Some(gap) = choice.new_level {
            levels.remove(gap);
        }
        partial.set(slot, None);
        if self.cls.symmetric {
            if let Slot::S(x, y) = slot {
                if x != y {
                    partial.set(Slot::S(y, x), None);
                }
            }
        }
    }

    /// Full assignment that is not all-ones somewhere: build the model (with
    /// interior levels renamed onto the evenly spaced chain), re-check, and
    /// emit the certificate.
    fn leaf(&self, partial: &Partial) -> Option<Countermodel> {
        let n = partial.n;
        let mut interior: Vec<TruthValue> = Vec::new();
        let mut visit = |v: &Option<TruthValue>| {
            let v = v.as_ref().expect("leaf is fully assigned");
            if !v.is_zero() && !v.is_one() && !interior.contains(v) {
                interior.push(v.clone());
            }
        };
        for row in &partial.s {
            row.iter().for_each(&mut visit);
        }
        for row in &partial.e {
            row.iter().for_each(&mut visit);
        }
        interior.sort();
        let rename = |v: &Option<TruthValue>| -> TruthValue {
            let v = v.as_ref().unwrap();
            match interior.iter().position(|w| w == v) {
                Some(i) => TruthValue::rational(i as u64 + 1, interior.len() as u64 + 1),
                None => v.clone(),
            }
        };
        let s: Vec<Vec<TruthValue>> = partial.s.iter().map(|r| r.iter().map(rename).collect()).collect();
        let e: Vec<Vec<TruthValue>> = partial.e.iter().map(|r| r.iter().map(rename).collect()).collect();
        let worlds = (0..n).map(|i| format!("w{i}")).collect();
        let model = GKModel::new(worlds, self.vars.to_vec(), s, e).expect("enumerated models are well formed");
        debug_assert!(self.cls.satisfied_by(&model));
        let values = model.eval_all(self.f).expect("all variables declared");
        for (x, v) in values.iter().enumerate() {
            if !v.is_one() {
                return Some(Countermodel {
                    world: model.worlds()[x].clone(),
                    value: v.clone(),
                    model,
                });
            }
        }
        None
    }
}

fn exhaustive_sweep(
    f: &Formula,
    cls: &FrameClass,
    vars: &[String],
    n: usize,
    chain_size: Option<usize>,
    jobs: usize,
) -> Option<Countermodel> {
    let slots = Enumerator::free_slots(n, vars.len(), cls);
    let fixed_chain = chain_size.map(|c| chain(c - 2));
    let enumerator = Enumerator {
        f,
        cls,
        vars,
        slots,
        fixed_chain,
    };
    let mut partial = Partial::new(n, vars.len(), cls);
    if enumerator.slots.is_empty() {
        return enumerator.run(&mut partial, &mut Vec::new(), 0);
    }
    if jobs <= 1 {
        return enumerator.run(&mut partial, &mut Vec::new(), 0);
    }
    // Partition on the first slot's choices; merge keeps the first branch in
    // canonical order, so the result is independent of the thread count.
    let first = enumerator.slots[0];
    let crisp_slot = cls.crisp && matches!(first, Slot::S(..));
    let branches = choices(&[], crisp_slot, enumerator.fixed_chain.as_deref());
    let results: Vec<Option<Countermodel>> = std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for chunk_start in 0..jobs.min(branches.len()) {
            let enumerator = &enumerator;
            let branches = &branches;
            let base = partial.clone();
            handles.push((
                chunk_start,
                scope.spawn(move || {
                    let mut out: Vec<(usize, Option<Countermodel>)> = Vec::new();
                    let mut partial = base;
                    for (i, choice) in branches.iter().enumerate() {
                        if i % jobs != chunk_start {
                            continue;
                        }
                        let mut levels = Vec::new();
                        enumerator.apply(&mut partial, &mut levels, enumerator.slots[0], choice);
                        let found = if !enumerator.cls.transitive || partial.transitivity_ok() {
                            enumerator.run(&mut partial, &mut levels, 1)
                        } else {
                            None
                        };
                        enumerator.undo(&mut partial, &mut levels, enumerator.slots[0], choice);
                        out.push((i, found));
                    }
                    out
                }),
            ));
        }
        let mut merged: Vec<Option<Countermodel>> = vec![None; branches.len()];
        for (_, handle) in handles {
            for (i, found) in handle.join().expect("search worker panicked") {
                merged[i] = found;
            }
        }
        merged
    });
    results.into_iter().flatten().next()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Rounds `S` onto the class: crisp threshold at 1/2, unit diagonal,
/// symmetrize by min, then max-min transitive closure (which preserves the
/// earlier adjustments).
pub fn project_onto_class(s: &mut [Vec<TruthValue>], cls: &FrameClass) {
    let n = s.len();
    let half = TruthValue::rational(1, 2);
    if cls.crisp {
        for row in s.iter_mut() {
            for v in row.iter_mut() {
                *v = if *v >= half {
                    TruthValue::one()
                } else {
                    TruthValue::zero()
                };
            }
        }
    }
    if cls.reflexive {
        for (x, row) in s.iter_mut().enumerate() {
            row[x] = TruthValue::one();
        }
    }
    if cls.symmetric {
        for x in 0..n {
            for y in x + 1..n {
                let m = s[x][y].meet(&s[y][x]);
                s[x][y] = m.clone();
                s[y][x] = m;
            }
        }
    }
    if cls.transitive {
        loop {
            let mut changed = false;
            for x in 0..n {
                for y in 0..n {
                    for z in 0..n {
                        let via = s[x][y].meet(&s[y][z]);
                        if via > s[x][z] {
                            s[x][z] = via;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }
}

fn stochastic_search(
    f: &Formula,
    cls: &FrameClass,
    vars: &[String],
    budget: &SearchBudget,
) -> Option<Countermodel> {
    let jobs = budget.jobs.max(1);
    let run_range = |start: usize| -> Option<(usize, Countermodel)> {
        let mut best = None;
        for iter in (start..budget.iterations).step_by(jobs) {
            let seed = splitmix64(budget.seed ^ splitmix64(iter as u64 + 1));
            if let Some(cm) = stochastic_restart(f, cls, vars, budget, seed) {
                best = Some((iter, cm));
                break;
            }
        }
        best
    };
    let found: Vec<Option<(usize, Countermodel)>> = if jobs <= 1 {
        vec![run_range(0)]
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs).map(|t| scope.spawn(move || run_range(t))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        })
    };
    found
        .into_iter()
        .flatten()
        .min_by_key(|(iter, _)| *iter)
        .map(|(_, cm)| cm)
}

fn stochastic_restart(
    f: &Formula,
    cls: &FrameClass,
    vars: &[String],
    budget: &SearchBudget,
    seed: u64,
) -> Option<Countermodel> {
    let n = budget.max_worlds;
    let grid = chain(budget.chain_size.unwrap_or(7).saturating_sub(2));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s: Vec<Vec<TruthValue>> = (0..n)
        .map(|_| (0..n).map(|_| grid[rng.gen_range(0..grid.len())].clone()).collect())
        .collect();
    let mut e: Vec<Vec<TruthValue>> = (0..n)
        .map(|_| {
            (0..vars.len())
                .map(|_| grid[rng.gen_range(0..grid.len())].clone())
                .collect()
        })
        .collect();
    project_onto_class(&mut s, cls);

    let evaluate = |s: &Vec<Vec<TruthValue>>, e: &Vec<Vec<TruthValue>>| -> (TruthValue, usize) {
        let worlds = (0..n).map(|i| format!("w{i}")).collect();
        let model = GKModel::new(worlds, vars.to_vec(), s.clone(), e.clone()).unwrap();
        let values = model.eval_all(f).unwrap();
        let mut best = (TruthValue::one(), 0);
        for (x, v) in values.into_iter().enumerate() {
            if v < best.0 {
                best = (v, x);
            }
        }
        best
    };

    let mut objective = evaluate(&s, &e).0;
    let move_cap = 4 * (n * n + n * vars.len()).max(1);
    for _ in 0..move_cap {
        if !objective.is_one() {
            break;
        }
        let mut improved = false;
        'moves: for x in 0..n {
            for y in 0..n {
                for value in &grid {
                    let mut s2 = s.clone();
                    s2[x][y] = value.clone();
                    project_onto_class(&mut s2, cls);
                    let (obj, _) = evaluate(&s2, &e);
                    if obj < objective {
                        s = s2;
                        objective = obj;
                        improved = true;
                        break 'moves;
                    }
                }
            }
        }
        if !improved {
            'emoves: for x in 0..n {
                for v in 0..vars.len() {
                    for value in &grid {
                        let mut e2 = e.clone();
                        e2[x][v] = value.clone();
                        let (obj, _) = evaluate(&s, &e2);
                        if obj < objective {
                            e = e2;
                            objective = obj;
                            improved = true;
                            break 'emoves;
                        }
                    }
                }
            }
        }
        if !improved {
            return None;
        }
    }
    if objective.is_one() {
        return None;
    }
    let worlds = (0..n).map(|i| format!("w{i}")).collect();
    let model = GKModel::new(worlds, vars.to_vec(), s, e).unwrap();
    if !cls.satisfied_by(&model) {
        return None;
    }
    let values = model.eval_all(f).unwrap();
    for (x, v) in values.iter().enumerate() {
        if !v.is_one() {
            return Some(Countermodel {
                world: model.worlds()[x].clone(),
                value: v.clone(),
                model,
            });
        }
    }
    None
}
