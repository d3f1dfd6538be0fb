//! JSON persistence for networks.
//!
//! Weights are written row-major. `serde_json` renders `f64` with the shortest
//! decimal that parses back to the same bits, so documents round-trip exactly.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::mlp::{Activation, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpDocument {
    pub layer_sizes: Vec<usize>,
    pub activations: Vec<Activation>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<&Mlp> for MlpDocument {
    fn from(mlp: &Mlp) -> Self {
        Self {
            layer_sizes: mlp.layer_sizes().to_vec(),
            activations: mlp.activations().to_vec(),
            weights: mlp.weights().iter().map(|w| w.iter().copied().collect()).collect(),
            biases: mlp.biases().iter().map(|b| b.to_vec()).collect(),
        }
    }
}

impl TryFrom<MlpDocument> for Mlp {
    type Error = Error;

    fn try_from(doc: MlpDocument) -> Result<Self> {
        let layers = doc.layer_sizes.len().saturating_sub(1);
        if layers == 0 || doc.weights.len() != layers || doc.biases.len() != layers {
            return Err(Error::InvalidArgument("layer count mismatch in network document".into()));
        }
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for (i, (w, b)) in doc.weights.into_iter().zip(doc.biases).enumerate() {
            let shape = (doc.layer_sizes[i + 1], doc.layer_sizes[i]);
            let w = Array2::from_shape_vec(shape, w)
                .map_err(|e| Error::InvalidArgument(format!("layer {i} weights: {e}")))?;
            weights.push(w);
            biases.push(Array1::from(b));
        }
        Mlp::from_parts(doc.activations, weights, biases)
    }
}

impl Mlp {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&MlpDocument::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MlpDocument = serde_json::from_str(text)?;
        Mlp::try_from(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn json_roundtrip_is_bitwise(seed in any::<u64>(), hidden in 1usize..6, scale in -1e6f64..1e6) {
            let mut net = Mlp::init(&[3, hidden, 2], Activation::Tanh, seed).unwrap();
            let flat: Vec<f64> = net.flat_params().iter().map(|v| v * scale).collect();
            net.set_flat_params(&flat).unwrap();
            let back = Mlp::from_json(&net.to_json().unwrap()).unwrap();
            let a: Vec<u64> = net.flat_params().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.flat_params().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!(back.activations(), net.activations());
        }
    }

    #[test]
    fn rejects_inconsistent_document() {
        let doc = r#"{"layer_sizes":[2,1],"activations":[],"weights":[[1.0]],"biases":[[0.0]]}"#;
        assert!(Mlp::from_json(doc).is_err());
    }
}
