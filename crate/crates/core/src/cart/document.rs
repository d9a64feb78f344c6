use serde::{Deserialize, Serialize};

use super::{Criterion, NodeStats, Task, Tree};

pub const TREE_FORMAT_VERSION: u32 = 1;

/// JSON form of a fitted tree: a preorder node list with child indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeDocument {
    pub format_version: u32,
    pub task: Task,
    pub criterion: Criterion,
    /// Design columns in index order; the last one is the treatment.
    pub columns: Vec<String>,
    pub n_leaves: usize,
    pub depth: usize,
    pub nodes: Vec<NodeDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDocument {
    pub id: usize,
    pub depth: usize,
    pub stats: NodeStats,
    pub split: Option<SplitDocument>,
    pub left: Option<usize>,
    pub right: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitDocument {
    pub column: usize,
    pub column_name: String,
    pub threshold: f64,
}

impl Tree {
    pub fn to_document(&self, treatment_name: &str) -> TreeDocument {
        let mut columns = self.feature_names.clone();
        columns.push(treatment_name.to_owned());
        let nodes = self
            .nodes()
            .map(|(id, node)| NodeDocument {
                id: id.0,
                depth: node.depth,
                stats: node.stats.clone(),
                split: node.split.map(|s| SplitDocument {
                    column: s.column,
                    column_name: columns[s.column].clone(),
                    threshold: s.threshold,
                }),
                left: node.children.map(|(l, _)| l.0),
                right: node.children.map(|(_, r)| r.0),
            })
            .collect();
        TreeDocument {
            format_version: TREE_FORMAT_VERSION,
            task: self.task,
            criterion: self.criterion,
            columns,
            n_leaves: self.n_leaves(),
            depth: self.depth(),
            nodes,
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::cart::{grow_tree, GrowConfig, Task};
    use crate::tabular::{Dataset, OutcomeKind};

    #[test]
    fn document_mirrors_structure() {
        let x: Vec<f64> = (0..60).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|&v| f64::from(u8::from(v >= 30.0))).collect();
        let ds = Dataset::new(vec!["x1".into()], vec![x], vec![0; 60], y, OutcomeKind::Binary, None, None).unwrap();
        let tree = grow_tree(&ds, Task::Classification, &GrowConfig::default()).unwrap();
        let doc = tree.to_document("t");
        assert_eq!(doc.nodes.len(), 3);
        assert_eq!(doc.columns, vec!["x1", "t"]);
        let root = &doc.nodes[0];
        assert_eq!(root.split.as_ref().unwrap().threshold, 29.5);
        assert_eq!((root.left, root.right), (Some(1), Some(2)));
        let json = serde_json::to_string(&doc).unwrap();
        let back: super::TreeDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(back, doc);
    }
}
