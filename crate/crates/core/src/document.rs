//! Canonical JSON documents.
//!
//! Keys are sorted and entity stores are keyed by name, so equal networks
//! serialize to identical bytes.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::network::Network;

pub const FOODN_VERSION: u64 = 1;

pub fn to_value(net: &Network) -> Value {
    let network = serde_json::to_value(net).expect("network serializes");
    json!({ "foodn_version": FOODN_VERSION, "network": network })
}

/// Pretty-printed canonical document with a trailing newline.
pub fn serialize(net: &Network) -> String {
    let mut s = serde_json::to_string_pretty(&to_value(net)).expect("value serializes");
    s.push('\n');
    s
}

pub fn load(text: &str) -> Result<Network> {
    let doc: Value = serde_json::from_str(text).map_err(|e| Error::CorruptDocument(e.to_string()))?;
    let Value::Object(mut map) = doc else {
        return Err(Error::CorruptDocument("top level is not an object".into()));
    };
    match map.get("foodn_version") {
        Some(Value::Number(n)) if n.as_u64() == Some(FOODN_VERSION) => {}
        Some(other) => {
            return Err(Error::SchemaVersionMismatch {
                found: other.to_string(),
                expected: FOODN_VERSION,
            })
        }
        None => return Err(Error::CorruptDocument("missing foodn_version".into())),
    }
    let network = map
        .remove("network")
        .ok_or_else(|| Error::CorruptDocument("missing network".into()))?;
    let net: Network = serde_json::from_value(network).map_err(|e| Error::CorruptDocument(e.to_string()))?;
    net.validate().map_err(|e| Error::CorruptDocument(e.to_string()))?;
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exploiters::ExploiterKind;
    use crate::fixtures;

    #[test]
    fn fixture_round_trip() {
        let mut net = fixtures::polygons();
        net.apply_modifier("M1_Sq1", "Sq1", 1e-9).unwrap();
        net.apply_exploiter(ExploiterKind::Union, &["T_Rb", "T_Sq"], None, 1, 1e-9).unwrap();
        let text = serialize(&net);
        let back = load(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(serialize(&back), text);
    }

    #[test]
    fn version_mismatch() {
        let text = serialize(&Network::new()).replace("\"foodn_version\": 1", "\"foodn_version\": 7");
        assert!(matches!(load(&text), Err(Error::SchemaVersionMismatch { .. })));
    }

    #[test]
    fn corrupt_documents() {
        assert!(matches!(load("not json"), Err(Error::CorruptDocument(_))));
        assert!(matches!(load("[]"), Err(Error::CorruptDocument(_))));
        assert!(matches!(load("{\"foodn_version\": 1}"), Err(Error::CorruptDocument(_))));
        let dangling = serialize(&fixtures::polygons()).replace("\"target\": \"T_Rb\"", "\"target\": \"Nowhere\"");
        assert!(matches!(load(&dangling), Err(Error::CorruptDocument(_))));
    }

    #[test]
    fn keys_are_sorted() {
        let text = serialize(&fixtures::polygons());
        let a = text.find("\"foodn_version\"").unwrap();
        let b = text.find("\"network\"").unwrap();
        assert!(a < b);
    }
}
