//! Truncated vines shared by the two classes.
//!
//! A [`VineStructure`] stores edges `(j, k | D)` together with one copula per
//! class. Edges in tree `t >= 2` must be built on the two tree-`(t-1)` edges
//! that carry `j` and `k` as conditioned variables with node sets `{j} ∪ D`
//! and `{k} ∪ D`. That requirement makes the h-function recursion for every
//! pseudo-observation well defined, and [`EvalPlan`] compiles it once per
//! layout so that evaluation per observation is a flat loop.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::copula::{clamp_unit, gaussian_log_density_scores, CopulaFamily, PairCopula};
use crate::error::{Error, Result};
use crate::margins::MarginSet;
use crate::normal;

/// Normal score of `1 - UNIT_EPS`; scores are clamped to +/- this value.
pub const Z_MAX: f64 = 6.361_340_902_404_056;

/// Conditioned pair and conditioning set of an edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeKey {
    pub pair: (usize, usize),
    pub given: Vec<usize>,
}

impl EdgeKey {
    pub fn new(j: usize, k: usize, mut given: Vec<usize>) -> Self {
        given.sort_unstable();
        Self { pair: (j, k), given }
    }

    /// Same edge with the conditioned pair in ascending order.
    pub fn canonical(&self) -> Self {
        let (j, k) = self.pair;
        Self { pair: (j.min(k), j.max(k)), given: self.given.clone() }
    }

    /// Tree implied by the size of the conditioning set.
    pub fn tree(&self) -> usize {
        self.given.len() + 1
    }

    /// Sorted union of conditioned and conditioning variables.
    pub fn nodes(&self) -> Vec<usize> {
        let mut n = self.given.clone();
        n.push(self.pair.0);
        n.push(self.pair.1);
        n.sort_unstable();
        n.dedup();
        n
    }

    pub fn conditions(&self, var: usize) -> bool {
        self.pair.0 == var || self.pair.1 == var
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{}", self.pair.0, self.pair.1)?;
        if !self.given.is_empty() {
            let given: Vec<String> = self.given.iter().map(|g| g.to_string()).collect();
            write!(f, "|{}", given.join(","))?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub tree: usize,
    pub key: EdgeKey,
    /// Copula for class 0 and class 1.
    pub copulas: [PairCopula; 2],
}

impl Edge {
    /// An edge whose tree is taken from the size of `given`.
    pub fn new(j: usize, k: usize, given: Vec<usize>, c0: PairCopula, c1: PairCopula) -> Self {
        let key = EdgeKey::new(j, k, given);
        Self { tree: key.tree(), key, copulas: [c0, c1] }
    }

    pub fn independent(j: usize, k: usize, given: Vec<usize>) -> Self {
        Self::new(j, k, given, PairCopula::independence(), PairCopula::independence())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ViolationKind {
    SelfLoop,
    ConditioningSize,
    ConditionedInGiven,
    NotEligible(usize),
    Duplicate,
    TooDeep,
    Cycle,
    Proximity,
    Hierarchy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub edge: EdgeKey,
    pub tree: usize,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = &self.edge;
        match &self.kind {
            ViolationKind::SelfLoop => write!(f, "edge {e} joins a variable to itself"),
            ViolationKind::ConditioningSize => write!(
                f,
                "edge {e} in tree {} needs a conditioning set of size {}",
                self.tree,
                self.tree.saturating_sub(1)
            ),
            ViolationKind::ConditionedInGiven => {
                write!(f, "edge {e} conditions on one of its own conditioned variables")
            }
            ViolationKind::NotEligible(v) => {
                write!(f, "edge {e} uses variable {v}, which is not a copula column")
            }
            ViolationKind::Duplicate => write!(f, "edge {e} appears twice"),
            ViolationKind::TooDeep => {
                write!(f, "edge {e} lies in tree {} beyond the truncation level", self.tree)
            }
            ViolationKind::Cycle => write!(f, "edge {e} closes a cycle in tree {}", self.tree),
            ViolationKind::Proximity => {
                write!(f, "edge {e} does not join two adjacent edges of tree {}", self.tree - 1)
            }
            ViolationKind::Hierarchy => {
                write!(f, "edge {e} lacks a parent edge in tree {}", self.tree - 1)
            }
        }
    }
}

impl std::error::Error for Violation {}

#[derive(Debug, Clone, PartialEq)]
pub struct VineStructure {
    edges: Vec<Edge>,
    max_trees: usize,
    eligible: Vec<usize>,
}

impl VineStructure {
    /// An empty vine over the given copula-eligible columns.
    pub fn new(max_trees: usize, eligible: impl IntoIterator<Item = usize>) -> Self {
        let set: BTreeSet<usize> = eligible.into_iter().collect();
        Self { edges: Vec::new(), max_trees, eligible: set.into_iter().collect() }
    }

    pub fn from_edges(
        max_trees: usize,
        eligible: impl IntoIterator<Item = usize>,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        let mut s = Self::new(max_trees, eligible);
        s.edges = edges;
        s.validate().map_err(Error::Structure)?;
        Ok(s)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn max_trees(&self) -> usize {
        self.max_trees
    }

    pub fn eligible(&self) -> &[usize] {
        &self.eligible
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Deepest tree holding an edge (0 when empty).
    pub fn depth(&self) -> usize {
        self.edges.iter().map(|e| e.tree).max().unwrap_or(0)
    }

    pub fn tree_edges(&self, t: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.tree == t)
    }

    pub fn contains(&self, key: &EdgeKey) -> bool {
        let c = key.canonical();
        self.edges.iter().any(|e| e.key.canonical() == c)
    }

    /// Appends an edge, leaving the structure unchanged if it would be invalid.
    pub fn push(&mut self, edge: Edge) -> Result<()> {
        self.edges.push(edge);
        if let Err(v) = self.validate() {
            self.edges.pop();
            return Err(Error::Structure(v));
        }
        Ok(())
    }

    /// Replaces the copulas of edge `idx`. The layout is unchanged, so
    /// compiled plans stay valid.
    pub fn set_copulas(&mut self, idx: usize, copulas: [PairCopula; 2]) {
        self.edges[idx].copulas = copulas;
    }

    pub fn remove(&mut self, idx: usize) -> Edge {
        self.edges.remove(idx)
    }

    /// Index of the edge that supplies `u_{var | given}` by one h-step.
    pub fn parent_of(&self, var: usize, given: &[usize]) -> Option<usize> {
        let mut nodes = given.to_vec();
        nodes.push(var);
        nodes.sort_unstable();
        let tree = given.len();
        self.edges
            .iter()
            .position(|e| e.tree == tree && e.key.conditions(var) && e.key.nodes() == nodes)
    }

    /// Checks every structural rule and reports the first violation.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let eligible: BTreeSet<usize> = self.eligible.iter().copied().collect();
        let mut seen = BTreeSet::new();
        for e in &self.edges {
            let fail = |kind| Err(Violation { kind, edge: e.key.clone(), tree: e.tree });
            let (j, k) = e.key.pair;
            if j == k {
                return fail(ViolationKind::SelfLoop);
            }
            if e.tree == 0 || e.key.given.len() != e.tree - 1 {
                return fail(ViolationKind::ConditioningSize);
            }
            if e.key.given.windows(2).any(|w| w[0] == w[1]) {
                return fail(ViolationKind::ConditioningSize);
            }
            if e.key.given.contains(&j) || e.key.given.contains(&k) {
                return fail(ViolationKind::ConditionedInGiven);
            }
            if let Some(&v) = e.key.nodes().iter().find(|v| !eligible.contains(v)) {
                return fail(ViolationKind::NotEligible(v));
            }
            if e.tree > self.max_trees {
                return fail(ViolationKind::TooDeep);
            }
            if !seen.insert(e.key.canonical()) {
                return fail(ViolationKind::Duplicate);
            }
        }

        for t in 1..=self.depth() {
            let mut forest = UnionFind::default();
            for e in self.tree_edges(t) {
                let fail = |kind| Err(Violation { kind, edge: e.key.clone(), tree: t });
                let (a, b) = if t == 1 {
                    e.key.pair
                } else {
                    let (j, k) = e.key.pair;
                    match (self.parent_of(j, &e.key.given), self.parent_of(k, &e.key.given)) {
                        (Some(a), Some(b)) => (a, b),
                        _ if self.has_adjacent_parents(e) => return fail(ViolationKind::Hierarchy),
                        _ => return fail(ViolationKind::Proximity),
                    }
                };
                if !forest.union(a, b) {
                    return fail(ViolationKind::Cycle);
                }
            }
        }
        Ok(())
    }

    /// Whether some pair of adjacent edges in the previous tree spans the
    /// nodes of `edge`, regardless of which variables they condition.
    fn has_adjacent_parents(&self, edge: &Edge) -> bool {
        let target = edge.key.nodes();
        let prev: Vec<Vec<usize>> = self.tree_edges(edge.tree - 1).map(|e| e.key.nodes()).collect();
        for (i, a) in prev.iter().enumerate() {
            for b in &prev[i + 1..] {
                let shared = a.iter().filter(|v| b.contains(v)).count();
                if shared + 1 != a.len() {
                    continue;
                }
                let mut union: Vec<usize> = a.iter().chain(b).copied().collect();
                union.sort_unstable();
                union.dedup();
                if union == target {
                    return true;
                }
            }
        }
        false
    }
}

#[derive(Default)]
struct UnionFind {
    parent: HashMap<usize, usize>,
}

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let p = *self.parent.entry(x).or_insert(x);
        if p == x {
            return x;
        }
        let root = self.find(p);
        self.parent.insert(x, root);
        root
    }

    /// Joins the sets of `a` and `b`; false if they were already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent.insert(ra, rb);
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Margin(usize),
    /// `h(u_input | u_given)` under the class copula of edge `parent`.
    Cond { input: usize, given: usize, parent: usize },
}

/// Pseudo-observation value with its normal score, computed on demand.
#[derive(Debug, Clone, Copy)]
/// A pseudo-observation on the unit scale and as a normal score; whichever
/// side is missing (NaN) is filled in on first use.
struct Value {
    u: f64,
    z: f64,
}

impl Value {
    fn from_score(z: f64) -> Self {
        Self { u: f64::NAN, z: z.clamp(-Z_MAX, Z_MAX) }
    }

    fn unit(&mut self) -> f64 {
        if self.u.is_nan() {
            self.u = clamp_unit(normal::cdf(self.z));
        }
        self.u
    }

    fn from_unit(u: f64) -> Self {
        Self { u: clamp_unit(u), z: f64::NAN }
    }

    fn score(&mut self) -> f64 {
        if self.z.is_nan() {
            self.z = normal::quantile(self.u);
        }
        self.z
    }
}

/// Evaluation order for all pseudo-observations a vine layout needs.
#[derive(Debug, Clone)]
pub struct EvalPlan {
    slots: Vec<Slot>,
    keys: Vec<(usize, Vec<usize>)>,
    /// Per edge: slots holding `u_{j|D}` and `u_{k|D}`.
    edge_inputs: Vec<(usize, usize)>,
}

impl EvalPlan {
    pub fn compile(structure: &VineStructure) -> Result<Self> {
        let mut plan = EvalPlan { slots: Vec::new(), keys: Vec::new(), edge_inputs: Vec::new() };
        let mut memo: HashMap<(usize, Vec<usize>), usize> = HashMap::new();
        for e in structure.edges() {
            let (j, k) = e.key.pair;
            let a = plan.slot(structure, &mut memo, j, &e.key.given)?;
            let b = plan.slot(structure, &mut memo, k, &e.key.given)?;
            plan.edge_inputs.push((a, b));
        }
        Ok(plan)
    }

    fn slot(
        &mut self,
        structure: &VineStructure,
        memo: &mut HashMap<(usize, Vec<usize>), usize>,
        var: usize,
        given: &[usize],
    ) -> Result<usize> {
        if let Some(&s) = memo.get(&(var, given.to_vec())) {
            return Ok(s);
        }
        let slot = if given.is_empty() {
            Slot::Margin(var)
        } else {
            let parent = structure
                .parent_of(var, given)
                .ok_or_else(|| Error::Hierarchy { var, given: given.to_vec() })?;
            let pk = &structure.edges()[parent].key;
            let other = if pk.pair.0 == var { pk.pair.1 } else { pk.pair.0 };
            let input = self.slot(structure, memo, var, &pk.given)?;
            let cond = self.slot(structure, memo, other, &pk.given)?;
            Slot::Cond { input, given: cond, parent }
        };
        self.slots.push(slot);
        self.keys.push((var, given.to_vec()));
        let idx = self.slots.len() - 1;
        memo.insert((var, given.to_vec()), idx);
        Ok(idx)
    }

    pub fn num_edges(&self) -> usize {
        self.edge_inputs.len()
    }

    /// Fills `buf` with class-`y` pseudo-observations. `score(j)` returns the
    /// standardized value of continuous column `j` under the class margin.
    fn fill<F: Fn(usize) -> f64>(&self, edges: &[Edge], y: usize, score: &F, buf: &mut Vec<Value>) {
        buf.clear();
        for slot in &self.slots {
            let v = match *slot {
                Slot::Margin(j) => Value::from_score(score(j)),
                Slot::Cond { input, given, parent } => {
                    let cop = &edges[parent].copulas[y];
                    match (cop.family(), cop.theta()) {
                        (CopulaFamily::Gaussian, Some(rho)) => {
                            let zu = buf[input].score();
                            let zv = buf[given].score();
                            Value::from_score((zu - rho * zv) / (1.0 - rho * rho).sqrt())
                        }
                        _ => {
                            let (u, v) = (buf[input].unit(), buf[given].unit());
                            Value::from_unit(cop.h(u, v))
                        }
                    }
                }
            };
            buf.push(v);
        }
    }

    fn edge_log_density(cop: &PairCopula, buf: &mut [Value], a: usize, b: usize) -> f64 {
        match (cop.family(), cop.theta()) {
            (CopulaFamily::Independence, _) => 0.0,
            (CopulaFamily::Gaussian, Some(rho)) => {
                let za = buf[a].score();
                let zb = buf[b].score();
                gaussian_log_density_scores(rho, za, zb)
            }
            _ => {
                let (u, v) = (buf[a].unit(), buf[b].unit());
                cop.log_density(u, v)
            }
        }
    }

    /// Sum over edges of the class-`y` log copula densities.
    pub fn class_log_copula<F: Fn(usize) -> f64>(&self, edges: &[Edge], y: usize, score: F) -> f64 {
        debug_assert_eq!(edges.len(), self.edge_inputs.len());
        let mut buf = Vec::with_capacity(self.slots.len());
        self.fill(edges, y, &score, &mut buf);
        let mut total = 0.0;
        for (e, &(a, b)) in edges.iter().zip(&self.edge_inputs) {
            total += Self::edge_log_density(&e.copulas[y], &mut buf, a, b);
        }
        total
    }

    /// The copula correction to the log-odds at covariate vector `x`.
    pub fn g(&self, edges: &[Edge], margins: &MarginSet, x: &[f64]) -> f64 {
        if edges.is_empty() {
            return 0.0;
        }
        let l1 = self.class_log_copula(edges, 1, class_score(margins, 1, x));
        let l0 = self.class_log_copula(edges, 0, class_score(margins, 0, x));
        l1 - l0
    }

    /// Class-`y` pseudo-observations feeding edge `idx`, as
    /// `[(u_{j|D}, z_{j|D}), (u_{k|D}, z_{k|D})]` with `z` the normal score.
    pub fn edge_arguments<F: Fn(usize) -> f64>(
        &self,
        edges: &[Edge],
        y: usize,
        score: F,
        idx: usize,
    ) -> [(f64, f64); 2] {
        let mut buf = Vec::with_capacity(self.slots.len());
        self.fill(edges, y, &score, &mut buf);
        let (a, b) = self.edge_inputs[idx];
        let za = buf[a].score();
        let zb = buf[b].score();
        [(buf[a].unit(), za), (buf[b].unit(), zb)]
    }

    fn values<F: Fn(usize) -> f64>(&self, edges: &[Edge], y: usize, score: F) -> Vec<f64> {
        let mut buf = Vec::with_capacity(self.slots.len());
        self.fill(edges, y, &score, &mut buf);
        buf.iter_mut().map(Value::unit).collect()
    }
}

/// Standardized covariates under the class-`y` Gaussian margins.
pub fn class_score<'a>(margins: &'a MarginSet, y: usize, x: &'a [f64]) -> impl Fn(usize) -> f64 + 'a {
    move |j| {
        let (mu, sigma) = margins.location_scale(j, y).expect("copula column must be continuous");
        (x[j] - mu) / sigma
    }
}

fn check_margins(structure: &VineStructure, margins: &MarginSet) -> Result<()> {
    for &j in structure.eligible() {
        margins.location_scale(j, 0)?;
    }
    Ok(())
}

/// All class-`y` pseudo-observations needed by the structure, keyed by
/// `(variable, conditioning set)`, plus the margin values of every eligible
/// column.
pub fn pseudo_obs(
    structure: &VineStructure,
    margins: &MarginSet,
    y: usize,
    x: &[f64],
) -> Result<BTreeMap<(usize, Vec<usize>), f64>> {
    check_margins(structure, margins)?;
    let plan = EvalPlan::compile(structure)?;
    let values = plan.values(structure.edges(), y, class_score(margins, y, x));
    let mut out: BTreeMap<(usize, Vec<usize>), f64> = plan.keys.iter().cloned().zip(values).collect();
    for &j in structure.eligible() {
        out.entry((j, Vec::new())).or_insert_with(|| margins.cdf(j, y, x[j]).unwrap_or(0.5));
    }
    Ok(out)
}

/// The copula correction `g(x)`: class-1 minus class-0 log vine density.
pub fn g_eval(structure: &VineStructure, margins: &MarginSet, x: &[f64]) -> Result<f64> {
    check_margins(structure, margins)?;
    let plan = EvalPlan::compile(structure)?;
    Ok(plan.g(structure.edges(), margins, x))
}

/// Coefficients of the quadratic that a single Gaussian-Gaussian edge adds to
/// the log-odds under Gaussian margins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPairTerms {
    pub a0: f64,
    /// Linear coefficients of `x1` and `x2`.
    pub linear: [f64; 2],
    /// Coefficients of `x1^2` and `x2^2`.
    pub square: [f64; 2],
    /// Coefficient of `x1 * x2`.
    pub cross: f64,
}

impl GaussianPairTerms {
    pub fn evaluate(&self, x1: f64, x2: f64) -> f64 {
        self.a0
            + self.linear[0] * x1
            + self.linear[1] * x2
            + self.square[0] * x1 * x1
            + self.square[1] * x2 * x2
            + self.cross * x1 * x2
    }
}

/// Expands `log c1(x1, x2) - log c0(x1, x2)` for Gaussian copulas with
/// parameters `theta0`, `theta1` over Gaussian margins with class means
/// `mu0`, `mu1` and shared scales `sigma`.
pub fn gaussian_pair_closed_form(
    mu0: [f64; 2],
    mu1: [f64; 2],
    sigma: [f64; 2],
    theta0: f64,
    theta1: f64,
) -> GaussianPairTerms {
    let mu = [mu0, mu1];
    let theta = [theta0, theta1];
    // Class sign: +1 for class 1, -1 for class 0.
    let sign = [-1.0, 1.0];
    let k = theta.map(|t| t * t / (1.0 - t * t));
    let m = theta.map(|t| t / (1.0 - t * t));
    let s12 = sigma[0] * sigma[1];

    let mut a0 = -0.5 * ((1.0 - theta1 * theta1) / (1.0 - theta0 * theta0)).ln();
    let mut linear = [0.0; 2];
    for y in 0..2 {
        let (m1, m2) = (mu[y][0], mu[y][1]);
        let quad = k[y] * (m1 * m1 / (sigma[0] * sigma[0]) + m2 * m2 / (sigma[1] * sigma[1]));
        a0 -= sign[y] * 0.5 * (quad - 2.0 * m[y] * m1 * m2 / s12);
        for i in 0..2 {
            let o = 1 - i;
            linear[i] += sign[y]
                * (k[y] * mu[y][i] / (sigma[i] * sigma[i]) - m[y] * mu[y][o] / s12);
        }
    }
    let dk = k[1] - k[0];
    GaussianPairTerms {
        a0,
        linear,
        square: [-0.5 * dk / (sigma[0] * sigma[0]), -0.5 * dk / (sigma[1] * sigma[1])],
        cross: (m[1] - m[0]) / s12,
    }
}
