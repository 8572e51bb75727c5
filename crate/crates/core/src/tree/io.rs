//! Tree text format and rule export.
//!
//! One node per line after a small header; floats print in Rust's shortest
//! round-trip form, so save/load is exact:
//!
//! ```text
//! tree
//! features 4
//! actions 2
//! nodes 3
//! 0 internal <feature> <threshold> <gain> <weight_frac> <left> <right>
//! 1 leaf <action>
//! 2 regleaf <q_mean...>
//! ```

use super::{Node, PolicyTree};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

impl PolicyTree {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text(""))?;
        Ok(())
    }

    /// Renders the tree file, prefixed by `header` (pass "" for none;
    /// callers embed reproducibility comments through it).
    pub fn to_text(&self, header: &str) -> String {
        let mut out = String::new();
        if !header.is_empty() {
            for line in header.lines() {
                let _ = writeln!(out, "# {line}");
            }
        }
        let _ = writeln!(out, "tree");
        let _ = writeln!(out, "features {}", self.n_features);
        let _ = writeln!(out, "actions {}", self.n_actions);
        let _ = writeln!(out, "nodes {}", self.nodes.len());
        for (i, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Internal { feature, threshold, gain, weight_frac, left, right } => {
                    let _ = writeln!(
                        out,
                        "{i} internal {feature} {threshold} {gain} {weight_frac} {left} {right}"
                    );
                }
                Node::Leaf { action } => {
                    let _ = writeln!(out, "{i} leaf {action}");
                }
                Node::RegLeaf { q_mean } => {
                    let _ = write!(out, "{i} regleaf");
                    for v in q_mean {
                        let _ = write!(out, " {v}");
                    }
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn load(path: &Path) -> Result<PolicyTree> {
        let text = std::fs::read_to_string(path)?;
        PolicyTree::from_text(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn from_text(text: &str) -> Result<PolicyTree> {
        let p = "tree text";
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        if lines.next() != Some("tree") {
            return Err(Error::parse(p, "missing 'tree' header"));
        }
        let mut header_num = |key: &str| -> Result<usize> {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(p, format!("missing {key} line")))?;
            line.strip_prefix(key)
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| Error::parse(p, format!("bad {key} line {line:?}")))
        };
        let n_features = header_num("features")?;
        let n_actions = header_num("actions")?;
        let n_nodes = header_num("nodes")?;
        if n_features == 0 || n_actions == 0 || n_nodes == 0 {
            return Err(Error::parse(p, "features, actions, and nodes must be positive"));
        }

        let mut nodes = Vec::with_capacity(n_nodes);
        for want in 0..n_nodes {
            let line = lines
                .next()
                .ok_or_else(|| Error::parse(p, format!("missing node line {want}")))?;
            let mut tok = line.split_whitespace();
            let idx: usize = tok
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(p, format!("bad node index in {line:?}")))?;
            if idx != want {
                return Err(Error::parse(p, format!("node {want} listed out of order")));
            }
            let kind = tok
                .next()
                .ok_or_else(|| Error::parse(p, format!("node {idx}: missing kind")))?;
            let node = match kind {
                "internal" => {
                    let mut num = |what: &str| -> Result<f64> {
                        tok.next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| Error::parse(p, format!("node {idx}: bad {what}")))
                    };
                    let feature = num("feature")? as usize;
                    let threshold = num("threshold")?;
                    let gain = num("gain")?;
                    let weight_frac = num("weight fraction")?;
                    let left = num("left child")? as usize;
                    let right = num("right child")? as usize;
                    if feature >= n_features {
                        return Err(Error::parse(
                            p,
                            format!("node {idx}: feature {feature} out of range"),
                        ));
                    }
                    if left >= n_nodes || right >= n_nodes || left == idx || right == idx {
                        return Err(Error::parse(
                            p,
                            format!("node {idx}: bad child indices {left}, {right}"),
                        ));
                    }
                    Node::Internal { feature, threshold, gain, weight_frac, left, right }
                }
                "leaf" => {
                    let action: usize = tok
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::parse(p, format!("node {idx}: bad action")))?;
                    if action >= n_actions {
                        return Err(Error::parse(
                            p,
                            format!("node {idx}: action {action} out of range"),
                        ));
                    }
                    Node::Leaf { action }
                }
                "regleaf" => {
                    let q_mean: Vec<f64> = tok
                        .by_ref()
                        .map(|t| {
                            t.parse::<f64>().map_err(|_| {
                                Error::parse(p, format!("node {idx}: bad q value {t:?}"))
                            })
                        })
                        .collect::<Result<_>>()?;
                    if q_mean.len() != n_actions {
                        return Err(Error::parse(
                            p,
                            format!(
                                "node {idx}: {} q values for {} actions",
                                q_mean.len(),
                                n_actions
                            ),
                        ));
                    }
                    Node::RegLeaf { q_mean }
                }
                other => {
                    return Err(Error::parse(p, format!("node {idx}: unknown kind {other:?}")))
                }
            };
            if tok.next().is_some() && kind != "regleaf" {
                return Err(Error::parse(p, format!("node {idx}: trailing tokens")));
            }
            nodes.push(node);
        }
        if lines.next().is_some() {
            return Err(Error::parse(p, "trailing data after last node"));
        }

        let tree = PolicyTree { nodes, n_features, n_actions };
        tree.validate_structure()?;
        Ok(tree)
    }

    /// Checks that the nodes form a single tree rooted at 0: every node
    /// reachable exactly once.
    fn validate_structure(&self) -> Result<()> {
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            if seen[at] {
                return Err(Error::parse("tree text", format!("node {at} reached twice")));
            }
            seen[at] = true;
            if let Node::Internal { left, right, .. } = self.nodes[at] {
                stack.push(left);
                stack.push(right);
            }
        }
        if let Some(orphan) = seen.iter().position(|s| !s) {
            return Err(Error::parse(
                "tree text",
                format!("node {orphan} unreachable from the root"),
            ));
        }
        Ok(())
    }

    /// One if-then rule per leaf, conditions along the root-to-leaf path.
    /// Regression leaves report the action their mean vector selects.
    /// `feature_names` must match the tree's feature count.
    pub fn export_rules(&self, feature_names: &[String]) -> Result<String> {
        if feature_names.len() != self.n_features {
            return Err(Error::contract(format!(
                "{} feature names for a tree over {} features",
                feature_names.len(),
                self.n_features
            )));
        }
        let mut out = String::new();
        let mut conds: Vec<String> = Vec::new();
        self.emit_rules(0, feature_names, &mut conds, &mut out);
        Ok(out)
    }

    fn emit_rules(
        &self,
        at: usize,
        names: &[String],
        conds: &mut Vec<String>,
        out: &mut String,
    ) {
        match &self.nodes[at] {
            Node::Internal { feature, threshold, left, right, .. } => {
                conds.push(format!("{} <= {}", names[*feature], threshold));
                self.emit_rules(*left, names, conds, out);
                conds.pop();
                conds.push(format!("{} > {}", names[*feature], threshold));
                self.emit_rules(*right, names, conds, out);
                conds.pop();
            }
            leaf => {
                let action = match leaf {
                    Node::Leaf { action } => *action,
                    Node::RegLeaf { q_mean } => {
                        let mut best = 0;
                        for (i, v) in q_mean.iter().enumerate().skip(1) {
                            if *v > q_mean[best] {
                                best = i;
                            }
                        }
                        best
                    }
                    Node::Internal { .. } => unreachable!(),
                };
                let cond = if conds.is_empty() { "always".to_string() } else { conds.join(" AND ") };
                let _ = writeln!(out, "IF {cond} THEN action={action}");
            }
        }
    }
}
