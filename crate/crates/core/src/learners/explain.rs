//! Human-readable model structure: ranked coefficients or a rule list.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::cart::{DecisionTree, Node};
use super::logistic::LogisticModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExplanationKind {
    Coefficients,
    RuleList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationEntry {
    pub description: String,
    /// Coefficient, or the rule's training support.
    pub value: f64,
    /// Predicted class of a rule.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<u8>,
    /// Features referenced by the entry.
    pub features: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub kind: ExplanationKind,
    /// The attribute being explained, when known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    pub entries: Vec<ExplanationEntry>,
}

impl Explanation {
    pub fn top_features(&self, k: usize) -> Vec<&str> {
        self.entries
            .iter()
            .take(k)
            .flat_map(|e| e.features.iter().map(String::as_str))
            .collect()
    }
}

impl fmt::Display for Explanation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let target = self.target.as_deref().unwrap_or("target");
        match self.kind {
            ExplanationKind::Coefficients => {
                writeln!(f, "logistic regression coefficients for `{target}`:")?;
                for e in &self.entries {
                    writeln!(f, "  {:>+10.4}  {}", e.value, e.description)?;
                }
            }
            ExplanationKind::RuleList => {
                writeln!(f, "decision rules for `{target}`:")?;
                for (i, e) in self.entries.iter().enumerate() {
                    writeln!(
                        f,
                        "  {:>3}. IF {} THEN {target} = {} (support {})",
                        i + 1,
                        e.description,
                        e.class.unwrap_or(0),
                        e.value
                    )?;
                }
            }
        }
        Ok(())
    }
}

/// Coefficients sorted by magnitude, descending (stable on ties).
pub fn coefficient_ranking(model: &LogisticModel, names: &[String]) -> Explanation {
    let mut entries: Vec<ExplanationEntry> = names
        .iter()
        .zip(model.coefficients())
        .map(|(n, &c)| ExplanationEntry {
            description: n.clone(),
            value: c,
            class: None,
            features: vec![n.clone()],
        })
        .collect();
    entries.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    Explanation {
        kind: ExplanationKind::Coefficients,
        target: None,
        entries,
    }
}

/// Conditions along a root-to-leaf path: (feature, goes left, threshold).
type Path = Vec<(usize, bool, f64)>;

/// One rule per leaf, ordered by support (descending), then tree order.
pub fn rule_list(tree: &DecisionTree, names: &[String]) -> Explanation {
    let nodes = tree.nodes();
    let mut entries = Vec::new();
    let mut stack: Vec<(usize, Path)> = vec![(0, Vec::new())];
    while let Some((id, path)) = stack.pop() {
        match &nodes[id] {
            Node::Leaf { proba, support } => {
                let description = if path.is_empty() {
                    "TRUE".to_string()
                } else {
                    path.iter()
                        .map(|(f, le, t)| {
                            format!("{} {} {:.4}", names[*f], if *le { "<=" } else { ">" }, t)
                        })
                        .collect::<Vec<_>>()
                        .join(" AND ")
                };
                let mut features: Vec<String> = Vec::new();
                for (f, _, _) in &path {
                    if !features.contains(&names[*f]) {
                        features.push(names[*f].clone());
                    }
                }
                entries.push(ExplanationEntry {
                    description,
                    value: *support as f64,
                    class: Some(super::label_from_proba(*proba)),
                    features,
                });
            }
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let mut r = path.clone();
                r.push((*feature, false, *threshold));
                stack.push((*right, r));
                let mut l = path;
                l.push((*feature, true, *threshold));
                stack.push((*left, l));
            }
        }
    }
    entries.sort_by(|a, b| b.value.total_cmp(&a.value));
    Explanation {
        kind: ExplanationKind::RuleList,
        target: None,
        entries,
    }
}
