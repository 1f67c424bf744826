use serde::{Deserialize, Serialize};

use super::{ModelError, Node, PowlNode};

/// JSON tree encoding used by the service API: a `type` tag plus the
/// variant's fields, partial-order edges as index pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ModelJson {
    Activity {
        label: String,
    },
    Silent,
    Xor {
        children: Vec<ModelJson>,
    },
    Loop {
        #[serde(rename = "do")]
        body: Box<ModelJson>,
        redo: Box<ModelJson>,
    },
    PartialOrder {
        nodes: Vec<ModelJson>,
        edges: Vec<(usize, usize)>,
    },
}

impl ModelJson {
    pub fn from_node(node: &Node) -> Self {
        match &**node {
            PowlNode::Activity(l) => ModelJson::Activity { label: l.as_str().to_string() },
            PowlNode::Silent => ModelJson::Silent,
            PowlNode::Xor(ch) => ModelJson::Xor { children: ch.iter().map(Self::from_node).collect() },
            PowlNode::Loop { body, redo } => ModelJson::Loop {
                body: Box::new(Self::from_node(body)),
                redo: Box::new(Self::from_node(redo)),
            },
            PowlNode::PartialOrder(po) => ModelJson::PartialOrder {
                nodes: po.nodes().iter().map(Self::from_node).collect(),
                edges: po.edges().iter().copied().collect(),
            },
        }
    }

    /// Builds a model through the checked constructors. Every node object in
    /// the result is fresh, so decoded models never carry reuse.
    pub fn to_node(&self) -> Result<Node, ModelError> {
        match self {
            ModelJson::Activity { label } => PowlNode::activity(label),
            ModelJson::Silent => Ok(PowlNode::silent()),
            ModelJson::Xor { children } => {
                PowlNode::xor(children.iter().map(Self::to_node).collect::<Result<_, _>>()?)
            }
            ModelJson::Loop { body, redo } => Ok(PowlNode::looped(body.to_node()?, redo.to_node()?)),
            ModelJson::PartialOrder { nodes, edges } => PowlNode::partial_order(
                nodes.iter().map(Self::to_node).collect::<Result<_, _>>()?,
                edges.iter().copied(),
            ),
        }
    }
}

/// `#[serde(with = ...)]` adapter storing an optional model as [`ModelJson`].
pub mod opt_node {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use super::ModelJson;
    use crate::powl::Node;

    pub fn serialize<S: Serializer>(node: &Option<Node>, s: S) -> Result<S::Ok, S::Error> {
        node.as_ref().map(ModelJson::from_node).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Node>, D::Error> {
        Option::<ModelJson>::deserialize(d)?
            .map(|m| m.to_node().map_err(serde::de::Error::custom))
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::powl::structural_equal;

    #[test]
    fn encodes_tagged_tree() {
        let m = PowlNode::looped(PowlNode::activity("A").unwrap(), PowlNode::silent());
        let v = serde_json::to_value(ModelJson::from_node(&m)).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"type": "loop", "do": {"type": "activity", "label": "A"}, "redo": {"type": "silent"}})
        );
    }

    #[test]
    fn decoding_checks_arity() {
        let j: ModelJson = serde_json::from_str(
            r#"{"type":"xor","children":[{"type":"activity","label":"A"}]}"#,
        )
        .unwrap();
        assert_eq!(j.to_node().unwrap_err(), ModelError::XorArity(1));
    }

    #[test]
    fn round_trips() {
        let a = PowlNode::activity("A").unwrap();
        let b = PowlNode::activity("B").unwrap();
        let m = PowlNode::partial_order(vec![a, b], [(0, 1)]).unwrap();
        let text = serde_json::to_string(&ModelJson::from_node(&m)).unwrap();
        let back: ModelJson = serde_json::from_str(&text).unwrap();
        assert!(structural_equal(&m, &back.to_node().unwrap()));
    }
}
