//! Factor trees of power functions and likelihood ratios.
//!
//! A tree alternates function nodes and variable nodes. A variable node
//! `L_{n,d}` stands for the ratio `P(y|x_n)/P(y|x_d)` and multiplies the value
//! of its (optional) child function node. A function node computes
//! `sign · Π_j c_j^{w_j}` over its variable-node children, with per-child
//! exponents `w_j ∈ [0,1]`, `Σ w_j ≤ 1`. The measure is
//! `Σ_y P(y|x_r) · root(y)` where `x_r` is the common denominator of the
//! root's children.
//!
//! Structural rules checked by [`FactorTree::validate`]:
//! - the root is a function node, leaves are variable nodes, edges alternate;
//! - every node except the root has exactly one parent and is reachable;
//! - a function node below `L_{n,d}` only has children with denominator `n`;
//! - all children of the root share one denominator.

use serde::{Deserialize, Serialize};

use super::exponents::ExponentChain;
use super::gurantz::ReplicaAssignment;
use super::{FiniteChannel, MeasureError};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Function(FunctionNode),
    Variable(VariableNode),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FunctionRepr", into = "FunctionRepr")]
pub struct FunctionNode {
    pub sign: f64,
    pub exponents: Vec<f64>,
    pub children: Vec<NodeId>,
}

impl FunctionNode {
    /// `sign · (Π children)^a`: the same exponent on every child.
    pub fn power(sign: f64, a: f64, children: Vec<NodeId>) -> Self {
        Self {
            sign,
            exponents: vec![a; children.len()],
            children,
        }
    }

    pub fn weighted(sign: f64, exponents: Vec<f64>, children: Vec<NodeId>) -> Self {
        Self {
            sign,
            exponents,
            children,
        }
    }
}

/// JSON form: either a scalar `exponent` or per-child `exponents`.
#[derive(Serialize, Deserialize)]
struct FunctionRepr {
    #[serde(default = "plus_one")]
    sign: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exponents: Option<Vec<f64>>,
    children: Vec<NodeId>,
}

fn plus_one() -> f64 {
    1.0
}

impl TryFrom<FunctionRepr> for FunctionNode {
    type Error = MeasureError;
    fn try_from(r: FunctionRepr) -> Result<Self, Self::Error> {
        match (r.exponent, r.exponents) {
            (Some(a), None) => Ok(FunctionNode::power(r.sign, a, r.children)),
            (None, Some(e)) => Ok(FunctionNode::weighted(r.sign, e, r.children)),
            _ => Err(MeasureError::InvalidTree(
                "function node needs exactly one of `exponent` or `exponents`".into(),
            )),
        }
    }
}

impl From<FunctionNode> for FunctionRepr {
    fn from(f: FunctionNode) -> Self {
        let uniform = f.exponents.windows(2).all(|w| w[0] == w[1]) && !f.exponents.is_empty();
        FunctionRepr {
            sign: f.sign,
            exponent: uniform.then(|| f.exponents[0]),
            exponents: (!uniform).then_some(f.exponents),
            children: f.children,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableNode {
    pub num: usize,
    pub den: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child: Option<NodeId>,
}

impl VariableNode {
    pub fn leaf(num: usize, den: usize) -> Node {
        Node::Variable(VariableNode {
            num,
            den,
            child: None,
        })
    }

    pub fn with_child(num: usize, den: usize, child: NodeId) -> Node {
        Node::Variable(VariableNode {
            num,
            den,
            child: Some(child),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorTree {
    pub nodes: Vec<Node>,
    pub root: NodeId,
}

impl FactorTree {
    /// Builds and validates a tree.
    pub fn new(nodes: Vec<Node>, root: NodeId) -> Result<Self, MeasureError> {
        let tree = Self { nodes, root };
        tree.validate()?;
        Ok(tree)
    }

    /// The nested chain `Q_1(L_{1,0} Q_2(L_{2,1} ... Q_k(L_{k,k-1})))`
    /// over replica ids `0..=k`.
    pub fn chain(chain: &ExponentChain) -> Self {
        let k = chain.k();
        let mut nodes = Vec::with_capacity(2 * k);
        for (i, &a) in chain.a().iter().enumerate() {
            let level = i + 1;
            let sign = if level == 1 { -1.0 } else { 1.0 };
            let var_id = nodes.len() + 1;
            nodes.push(Node::Function(FunctionNode::power(sign, a, vec![var_id])));
            let child = (level < k).then_some(var_id + 1);
            nodes.push(Node::Variable(VariableNode {
                num: level,
                den: level - 1,
                child,
            }));
        }
        Self { nodes, root: 0 }
    }

    /// The comb obtained by rewriting every `Q_i` as its perspective
    /// `s^{1-a_i} t^{a_i}` with all ratios taken against a pivot replica.
    ///
    /// Replica ids `0..=k` are the chain's, `pivot` must be another id (the
    /// caller appends that symbol to the assignment). Unit ratios
    /// `L_{pivot,pivot}` link consecutive perspective nodes.
    pub fn comb(chain: &ExponentChain, pivot: usize) -> Self {
        let k = chain.k();
        let mut nodes = Vec::new();
        for (i, &a) in chain.a().iter().enumerate() {
            let sign = if i == 0 { -1.0 } else { 1.0 };
            let fid = nodes.len();
            let left = fid + 1;
            let right = fid + 2;
            nodes.push(Node::Function(FunctionNode::weighted(
                sign,
                vec![1.0 - a, a],
                vec![left, right],
            )));
            nodes.push(VariableNode::leaf(i, pivot));
            if i + 1 < k {
                nodes.push(VariableNode::with_child(pivot, pivot, fid + 3));
            } else {
                nodes.push(VariableNode::leaf(k, pivot));
            }
        }
        Self { nodes, root: 0 }
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        let n = self.nodes.len();
        let err = |msg: String| Err(MeasureError::InvalidTree(msg));
        if self.root >= n {
            return err(format!("root id {} out of range", self.root));
        }
        let root_fn = match &self.nodes[self.root] {
            Node::Function(f) => f,
            Node::Variable(_) => return err("root must be a function node".into()),
        };
        let mut parent: Vec<Option<NodeId>> = vec![None; n];
        for (id, node) in self.nodes.iter().enumerate() {
            let kids: Vec<NodeId> = match node {
                Node::Function(f) => {
                    if f.children.is_empty() {
                        return err(format!("function node {id} has no children (leaves must be variable nodes)"));
                    }
                    if f.exponents.len() != f.children.len() {
                        return err(format!("function node {id}: {} exponents for {} children", f.exponents.len(), f.children.len()));
                    }
                    if f.exponents.iter().any(|e| !(0.0..=1.0).contains(e)) {
                        return err(format!("function node {id}: exponent outside [0, 1]"));
                    }
                    let total: f64 = f.exponents.iter().sum();
                    if total > 1.0 + 1e-12 {
                        return err(format!("function node {id}: exponents sum to {total} > 1"));
                    }
                    if f.sign != 1.0 && !(f.sign == -1.0 && id == self.root) {
                        return err(format!("function node {id}: sign {} (only the root may be -1)", f.sign));
                    }
                    for &c in &f.children {
                        if !matches!(self.nodes.get(c), Some(Node::Variable(_))) {
                            return err(format!("function node {id} -> {c}: child must be a variable node"));
                        }
                    }
                    f.children.clone()
                }
                Node::Variable(v) => match v.child {
                    Some(c) => {
                        if !matches!(self.nodes.get(c), Some(Node::Function(_))) {
                            return err(format!("variable node {id} -> {c}: child must be a function node"));
                        }
                        vec![c]
                    }
                    None => vec![],
                },
            };
            for c in kids {
                if c == self.root {
                    return err(format!("node {id} points back at the root"));
                }
                if let Some(p) = parent[c] {
                    return err(format!("node {c} has two parents ({p} and {id})"));
                }
                parent[c] = Some(id);
            }
        }
        // Reachability; with unique parents this also rules out cycles.
        let mut seen = vec![false; n];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            if std::mem::replace(&mut seen[id], true) {
                return err(format!("cycle through node {id}"));
            }
            stack.extend(self.children_of(id));
        }
        if let Some(id) = seen.iter().position(|s| !s) {
            return err(format!("node {id} is not reachable from the root"));
        }
        // Ratio chaining below each variable node.
        for (id, node) in self.nodes.iter().enumerate() {
            if let Node::Variable(v) = node {
                if let Some(fid) = v.child {
                    if let Node::Function(f) = &self.nodes[fid] {
                        for &c in &f.children {
                            let cv = self.variable(c);
                            if cv.den != v.num {
                                return err(format!(
                                    "path L({},{}) [{id}] -> Q [{fid}] -> L({},{}) [{c}]: child denominator must equal parent numerator",
                                    v.num, v.den, cv.num, cv.den
                                ));
                            }
                        }
                    }
                }
            }
        }
        let den0 = self.variable(root_fn.children[0]).den;
        if let Some(&c) = root_fn.children.iter().find(|&&c| self.variable(c).den != den0) {
            return err(format!(
                "root offspring {c} has denominator {} but {} has {den0}",
                self.variable(c).den,
                root_fn.children[0]
            ));
        }
        Ok(())
    }

    fn children_of(&self, id: NodeId) -> Vec<NodeId> {
        match &self.nodes[id] {
            Node::Function(f) => f.children.clone(),
            Node::Variable(v) => v.child.into_iter().collect(),
        }
    }

    fn variable(&self, id: NodeId) -> &VariableNode {
        match &self.nodes[id] {
            Node::Variable(v) => v,
            Node::Function(_) => unreachable!("checked by validate"),
        }
    }

    fn function(&self, id: NodeId) -> &FunctionNode {
        match &self.nodes[id] {
            Node::Function(f) => f,
            Node::Variable(_) => unreachable!("checked by validate"),
        }
    }

    /// Largest replica id referenced by any variable node.
    pub fn max_replica(&self) -> usize {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Variable(v) => Some(v.num.max(v.den)),
                Node::Function(_) => None,
            })
            .max()
            .unwrap_or(0)
    }

    /// The replica id averaged against at the outermost level.
    pub fn base_replica(&self) -> usize {
        self.variable(self.function(self.root).children[0]).den
    }

    /// Evaluates the measure on `channel`. `replicas[id]` is the input symbol
    /// of replica id `id`.
    pub fn eval(
        &self,
        channel: &FiniteChannel,
        replicas: &ReplicaAssignment,
    ) -> Result<f64, MeasureError> {
        self.validate()?;
        if self.max_replica() >= replicas.len() {
            return Err(MeasureError::LengthMismatch {
                replicas: replicas.len(),
                expected: self.max_replica() + 1,
            });
        }
        replicas.check(channel)?;
        let xs = replicas.indices();
        let base = xs[self.base_replica()];
        let mut total = 0.0;
        for y in 0..channel.n_outputs() {
            let w = channel.prob(base, y);
            if w == 0.0 {
                continue;
            }
            let probs = |r: usize| channel.prob(xs[r], y);
            total += w * self.eval_function(self.root, &probs, y)?;
        }
        Ok(total)
    }

    fn eval_function(
        &self,
        id: NodeId,
        probs: &dyn Fn(usize) -> f64,
        y: usize,
    ) -> Result<f64, MeasureError> {
        let f = self.function(id);
        let mut value = f.sign;
        for (&c, &w) in f.children.iter().zip(&f.exponents) {
            let v = self.variable(c);
            let (num, den) = (probs(v.num), probs(v.den));
            let ratio = if den > 0.0 {
                num / den
            } else if num == 0.0 {
                0.0
            } else {
                return Err(MeasureError::ZeroDenominator { y, level: c });
            };
            let inner = match v.child {
                Some(fid) => self.eval_function(fid, probs, y)?,
                None => 1.0,
            };
            value *= (ratio * inner).powf(w);
        }
        Ok(value)
    }

    /// Exponent of each replica id in the equivalent weighted geometric mean
    /// `sign · Σ_y Π_r P(y|x_r)^{b_r}`. Ids that appear in no node get 0.
    pub fn replica_weights(&self) -> Vec<f64> {
        let mut b = vec![0.0; self.max_replica() + 1];
        let base = self.base_replica();
        b[base] += 1.0;
        self.accumulate_weights(self.root, 1.0, &mut b);
        b
    }

    // A function node under mass `m` moves `m·w_j` from each child's
    // denominator to its numerator (and into the child's subtree).
    fn accumulate_weights(&self, fid: NodeId, mass: f64, b: &mut [f64]) {
        let f = self.function(fid);
        for (&c, &w) in f.children.iter().zip(&f.exponents) {
            let v = self.variable(c);
            let m = mass * w;
            b[v.num] += m;
            b[v.den] -= m;
            if let Some(child) = v.child {
                self.accumulate_weights(child, m, b);
            }
        }
    }

    pub fn sign(&self) -> f64 {
        self.function(self.root).sign
    }
}
