//! JSON network document.
//!
//! `{"input_dim": d, "layers": [{"weights": [[..]], "bias": [..]}, ..]}` with
//! numbers as shortest round-trip decimals, or as hex-float strings when the
//! document carries `"hexfloat": true`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{hexfloat, Layer, ReluNetwork, SparseMatrix};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    input_dim: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    hexfloat: bool,
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    weights: Vec<Vec<Value>>,
    bias: Vec<Value>,
}

fn encode(v: f64, hex: bool) -> Value {
    if hex {
        Value::String(hexfloat::format(v))
    } else {
        Value::from(v)
    }
}

fn decode(v: &Value, location: impl Fn() -> String) -> Result<f64> {
    let parsed = match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => hexfloat::parse(s),
        _ => None,
    };
    match parsed {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(Error::Parse {
            location: location(),
            message: format!("expected a finite number, found {v}"),
        }),
    }
}

fn render(net: &ReluNetwork, hex: bool) -> String {
    let doc = NetworkDoc {
        input_dim: net.input_dim(),
        hexfloat: hex,
        layers: net
            .layers()
            .iter()
            .map(|l| LayerDoc {
                weights: l
                    .weights()
                    .to_dense()
                    .into_iter()
                    .map(|row| row.into_iter().map(|v| encode(v, hex)).collect())
                    .collect(),
                bias: l.bias().iter().map(|&v| encode(v, hex)).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string(&doc).expect("network documents always serialize");
    s.push('\n');
    s
}

/// Serializes with shortest round-trip decimal numbers.
pub fn to_json(net: &ReluNetwork) -> String {
    render(net, false)
}

/// Serializes with hex-float strings.
pub fn to_json_hexfloat(net: &ReluNetwork) -> String {
    render(net, true)
}

/// Parses a network document. Errors name the offending layer.
pub fn from_json(text: &str) -> Result<ReluNetwork> {
    let doc: NetworkDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    if doc.layers.is_empty() {
        return Err(Error::Parse {
            location: "layers".into(),
            message: "a network needs at least one layer".into(),
        });
    }
    let mut dim = doc.input_dim;
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (i, ld) in doc.layers.iter().enumerate() {
        let err = |message: String| Error::Parse {
            location: format!("layers[{i}]"),
            message,
        };
        if ld.weights.len() != ld.bias.len() {
            return Err(err(format!(
                "{} weight rows but bias of length {}",
                ld.weights.len(),
                ld.bias.len()
            )));
        }
        let mut entries = Vec::new();
        for (r, row) in ld.weights.iter().enumerate() {
            if row.len() != dim {
                return Err(err(format!(
                    "weight row {r} has {} entries, expected input dimension {dim}",
                    row.len()
                )));
            }
            for (c, v) in row.iter().enumerate() {
                entries.push((r, c, decode(v, || format!("layers[{i}].weights[{r}][{c}]"))?));
            }
        }
        let bias = ld
            .bias
            .iter()
            .enumerate()
            .map(|(r, v)| decode(v, || format!("layers[{i}].bias[{r}]")))
            .collect::<Result<Vec<_>>>()?;
        let w = SparseMatrix::from_triplets(ld.weights.len(), dim, entries);
        layers.push(Layer::new(w, bias).map_err(|e| err(e.to_string()))?);
        dim = ld.bias.len();
    }
    ReluNetwork::new(doc.input_dim, layers).map_err(|e| Error::Parse {
        location: "document".into(),
        message: e.to_string(),
    })
}
