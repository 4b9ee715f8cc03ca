//! Worklist tabling machine: builds the LG-forest of a goal under variant
//! tabling.
//!
//! One tree per variant of a tabled selected atom, plus a distinguished tree
//! for the top goal. Tree roots expand through program clauses (even when
//! the root predicate is tabled); any other node whose selected atom is
//! tabled becomes a consumer of the callee table and resolves against its
//! answers through a resume cursor; everything else expands through program
//! clauses, with `=`/2 and `integer`/1 resolved directly. Evaluation runs a
//! FIFO worklist to the answer-propagation fixpoint or to a budget trip.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::logic::{max_var, mgu_atoms, rename_clause, shift_atom, variant_key};
use crate::syntax::{display_atom_generic, is_builtin, Atom, PredKey, Program};

use super::{clause_index, solve_builtin, Budget, BudgetDim, EvalOutcome, EvalStats, Meter};

/// How a node was derived from its parent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArcLabel {
    Root,
    /// Resolution against the program clause with this index.
    Clause(usize),
    /// Resolution of a builtin selected atom.
    Builtin,
    /// Resolution against an answer clause of the callee table.
    Answer(Atom),
}

/// A node of an LG-tree. The selected atom is always the leftmost goal
/// atom; an empty goal means the node contributes `root_inst` as an answer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LGNode {
    pub goal: Vec<Atom>,
    /// The tree's root atom under this branch's accumulated substitution.
    pub root_inst: Atom,
    pub parent: Option<usize>,
    pub arc: ArcLabel,
    /// Program-clause resolutions from the root (consumption and builtin
    /// arcs do not deepen a branch).
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct LGTree {
    /// Canonical variant key of the root atom.
    pub root: Atom,
    pub tabled: bool,
    pub nodes: Vec<LGNode>,
    /// Canonical answers in discovery order.
    pub answers: Vec<Atom>,
    pub answer_budget_hit: bool,
    pub depth_budget_hit: bool,
}

/// The forest: trees in creation order, tree 0 belonging to the top goal.
/// `index` maps tabled subgoal keys to trees; the top tree appears in it
/// only when the goal predicate is itself tabled.
#[derive(Debug, Clone)]
pub struct LGForest {
    pub trees: Vec<LGTree>,
    pub index: BTreeMap<Atom, usize>,
}

impl LGForest {
    pub fn top(&self) -> &LGTree {
        &self.trees[0]
    }

    pub fn tree(&self, key: &Atom) -> Option<&LGTree> {
        self.index.get(key).map(|i| &self.trees[*i])
    }

    pub fn to_dot(&self) -> String {
        let mut s = String::from(
            "digraph lgforest {\n  node [shape=box, fontname=\"monospace\"];\n",
        );
        for (ti, t) in self.trees.iter().enumerate() {
            s.push_str(&format!(
                "  subgraph cluster_{ti} {{\n    label=\"{}\";\n",
                esc(&display_atom_generic(&t.root))
            ));
            for (ni, n) in t.nodes.iter().enumerate() {
                let label = if n.goal.is_empty() {
                    format!("answer: {}", display_atom_generic(&n.root_inst))
                } else {
                    goal_to_string(&n.goal)
                };
                s.push_str(&format!("    n{ti}_{ni} [label=\"{}\"];\n", esc(&label)));
            }
            for (ni, n) in t.nodes.iter().enumerate() {
                if let Some(parent) = n.parent {
                    let label = match &n.arc {
                        ArcLabel::Root => String::new(),
                        ArcLabel::Clause(ci) => format!("c{ci}"),
                        ArcLabel::Builtin => "builtin".into(),
                        ArcLabel::Answer(a) => format!("ans {}", display_atom_generic(a)),
                    };
                    s.push_str(&format!(
                        "    n{ti}_{parent} -> n{ti}_{ni} [label=\"{}\"];\n",
                        esc(&label)
                    ));
                }
            }
            s.push_str("  }\n");
        }
        s.push_str("}\n");
        s
    }
}

fn goal_to_string(goal: &[Atom]) -> String {
    goal.iter().map(|a| display_atom_generic(a)).collect::<Vec<_>>().join(", ")
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Pure per-forest summary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForestStats {
    pub num_trees: usize,
    pub max_branch_depth: usize,
    pub answers_per_tree: Vec<usize>,
}

pub fn forest_stats(f: &LGForest) -> ForestStats {
    ForestStats {
        num_trees: f.trees.len(),
        max_branch_depth: f
            .trees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .map(|n| n.depth)
            .max()
            .unwrap_or(0),
        answers_per_tree: f.trees.iter().map(|t| t.answers.len()).collect(),
    }
}

/// Bounded LG-evaluation of `goal` under the program's tabling declaration.
/// When the outcome is `Completed` the forest is the whole LG-forest of the
/// goal; otherwise it is the fragment built before the budget tripped.
pub fn lg_evaluate(p: &Program, goal: &Atom, b: &Budget) -> (LGForest, EvalOutcome) {
    lg_evaluate_opts(p, goal, b, false)
}

pub fn lg_evaluate_opts(
    p: &Program,
    goal: &Atom,
    b: &Budget,
    occurs_check: bool,
) -> (LGForest, EvalOutcome) {
    let mut m = Machine {
        prog: p,
        cindex: clause_index(p),
        occurs: occurs_check,
        meter: Meter::new(b),
        trees: Vec::new(),
        index: BTreeMap::new(),
        work: VecDeque::new(),
    };

    let top_key = variant_key(goal);
    let top_tabled = p.tabling.contains(&goal.key());
    m.new_tree(top_key.clone(), top_tabled);
    if top_tabled {
        m.index.insert(top_key, 0);
    }

    while let Some(task) = m.work.pop_front() {
        if m.meter.stopped() {
            break;
        }
        match task {
            Task::Expand { tree, node } => m.expand(tree, node),
            Task::Consume { tree, node } => m.consume(tree, node),
        }
    }

    let stats = EvalStats {
        num_trees: m.trees.len(),
        max_branch_depth: m
            .trees
            .iter()
            .flat_map(|t| t.tree.nodes.iter())
            .map(|n| n.depth)
            .max()
            .unwrap_or(0),
        total_steps: m.meter.steps,
        answers_per_tree: m.trees.iter().map(|t| t.tree.answers.len()).collect(),
    };
    let outcome = EvalOutcome {
        status: m.meter.status(),
        stats,
        any_infinite_branch_suspected: m.meter.depth_hit,
        any_answer_budget_hit: m.meter.answer_hit,
    };
    let forest = LGForest { trees: m.trees.into_iter().map(|t| t.tree).collect(), index: m.index };
    (forest, outcome)
}

enum Task {
    Expand { tree: usize, node: usize },
    Consume { tree: usize, node: usize },
}

struct TreeState {
    tree: LGTree,
    fresh: usize,
    answer_keys: BTreeSet<Atom>,
    /// Nodes of other trees reading this tree's answers.
    consumers: Vec<(usize, usize)>,
    /// node id -> (callee tree, resume cursor) for consumer nodes.
    consuming: BTreeMap<usize, (usize, usize)>,
}

struct Machine<'a> {
    prog: &'a Program,
    cindex: BTreeMap<PredKey, Vec<usize>>,
    occurs: bool,
    meter: Meter<'a>,
    trees: Vec<TreeState>,
    index: BTreeMap<Atom, usize>,
    work: VecDeque<Task>,
}

impl<'a> Machine<'a> {
    fn new_tree(&mut self, root: Atom, tabled: bool) -> usize {
        let fresh = max_var(&root).map_or(0, |v| v + 1);
        let node = LGNode {
            goal: vec![root.clone()],
            root_inst: root.clone(),
            parent: None,
            arc: ArcLabel::Root,
            depth: 0,
        };
        let tree = LGTree {
            root,
            tabled,
            nodes: vec![node],
            answers: Vec::new(),
            answer_budget_hit: false,
            depth_budget_hit: false,
        };
        let idx = self.trees.len();
        self.trees.push(TreeState {
            tree,
            fresh,
            answer_keys: BTreeSet::new(),
            consumers: Vec::new(),
            consuming: BTreeMap::new(),
        });
        self.work.push_back(Task::Expand { tree: idx, node: 0 });
        idx
    }

    /// Table for a tabled subgoal key, creating its tree on first call.
    fn ensure_table(&mut self, key: Atom) -> Option<usize> {
        if let Some(i) = self.index.get(&key) {
            return Some(*i);
        }
        if self.trees.len() >= self.meter.budget.max_tables {
            self.meter.stop(BudgetDim::Tables);
            return None;
        }
        let idx = self.new_tree(key.clone(), true);
        self.index.insert(key, idx);
        Some(idx)
    }

    fn push_node(&mut self, tr: usize, node: LGNode) -> usize {
        let nodes = &mut self.trees[tr].tree.nodes;
        nodes.push(node);
        nodes.len() - 1
    }

    fn expand(&mut self, tr: usize, nd: usize) {
        let node = self.trees[tr].tree.nodes[nd].clone();
        let Some(sel) = node.goal.first() else {
            self.emit_answer(tr, &node.root_inst);
            return;
        };

        if is_builtin(&sel.key()) {
            if !self.meter.step() {
                return;
            }
            if let Some(th) = solve_builtin(sel, self.occurs) {
                let child = LGNode {
                    goal: node.goal[1..].iter().map(|a| th.apply_atom(a)).collect(),
                    root_inst: th.apply_atom(&node.root_inst),
                    parent: Some(nd),
                    arc: ArcLabel::Builtin,
                    depth: node.depth,
                };
                let cid = self.push_node(tr, child);
                self.work.push_back(Task::Expand { tree: tr, node: cid });
            }
            return;
        }

        // non-root tabled selection: consume the callee table's answers
        if nd != 0 && self.prog.tabling.contains(&sel.key()) {
            let key = variant_key(sel);
            let Some(tgt) = self.ensure_table(key) else { return };
            self.trees[tr].consuming.insert(nd, (tgt, 0));
            self.trees[tgt].consumers.push((tr, nd));
            self.work.push_back(Task::Consume { tree: tr, node: nd });
            return;
        }

        // program-clause resolution
        let sel = sel.clone();
        for ci in self.cindex.get(&sel.key()).cloned().unwrap_or_default() {
            if self.meter.stopped() {
                return;
            }
            let c = &self.prog.clauses[ci];
            let base = self.trees[tr].fresh;
            let (head, body) = rename_clause(&c.head, &c.body, base);
            let Some(th) = mgu_atoms(&sel, &head, self.occurs) else { continue };
            if !self.meter.step() {
                return;
            }
            if node.depth + 1 > self.meter.budget.max_depth {
                self.meter.trip(BudgetDim::Depth);
                self.trees[tr].tree.depth_budget_hit = true;
                continue;
            }
            self.trees[tr].fresh = base + c.var_names.len();
            let mut goal: Vec<Atom> = body.iter().map(|a| th.apply_atom(a)).collect();
            goal.extend(node.goal[1..].iter().map(|a| th.apply_atom(a)));
            let child = LGNode {
                goal,
                root_inst: th.apply_atom(&node.root_inst),
                parent: Some(nd),
                arc: ArcLabel::Clause(ci),
                depth: node.depth + 1,
            };
            let cid = self.push_node(tr, child);
            self.work.push_back(Task::Expand { tree: tr, node: cid });
        }
    }

    /// Resolve a consumer node against any callee answers its cursor has
    /// not seen yet.
    fn consume(&mut self, tr: usize, nd: usize) {
        loop {
            let Some(&(tgt, cur)) = self.trees[tr].consuming.get(&nd) else { return };
            let Some(ans) = self.trees[tgt].tree.answers.get(cur).cloned() else { return };
            self.trees[tr].consuming.insert(nd, (tgt, cur + 1));

            let node = self.trees[tr].tree.nodes[nd].clone();
            let base = self.trees[tr].fresh;
            let renamed = shift_atom(&ans, base);
            let span = max_var(&ans).map_or(0, |v| v + 1);
            let Some(th) = mgu_atoms(&node.goal[0], &renamed, self.occurs) else { continue };
            if !self.meter.step() {
                return;
            }
            self.trees[tr].fresh = base + span;
            let child = LGNode {
                goal: node.goal[1..].iter().map(|a| th.apply_atom(a)).collect(),
                root_inst: th.apply_atom(&node.root_inst),
                parent: Some(nd),
                arc: ArcLabel::Answer(ans),
                depth: node.depth,
            };
            let cid = self.push_node(tr, child);
            self.work.push_back(Task::Expand { tree: tr, node: cid });
        }
    }

    fn emit_answer(&mut self, tr: usize, inst: &Atom) {
        let key = variant_key(inst);
        if self.trees[tr].answer_keys.contains(&key) {
            return;
        }
        if self.trees[tr].tree.answers.len() >= self.meter.budget.max_answers_per_table {
            self.trees[tr].tree.answer_budget_hit = true;
            self.meter.trip(BudgetDim::Answers);
            return;
        }
        self.trees[tr].answer_keys.insert(key.clone());
        self.trees[tr].tree.answers.push(key);
        for (ctr, cnd) in self.trees[tr].consumers.clone() {
            self.work.push_back(Task::Consume { tree: ctr, node: cnd });
        }
    }
}
