use serde::{Deserialize, Serialize};

use super::{KinbmParams, ParetoMixParams};
use crate::error::{Error, Result};

pub const PARAMS_VERSION: &str = "kinbm-params-v1";

/// A distribution-form parameter set as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamsDocument {
    Kinbm(KinbmParams),
    ParetoMix(ParetoMixParams),
}

#[derive(Serialize, Deserialize)]
struct Envelope {
    version: String,
    #[serde(flatten)]
    body: Body,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum Body {
    Kinbm { k: u32, weights: Vec<f64>, shapes: Vec<f64>, rates: Vec<f64> },
    ParetoMix { rho: Vec<f64>, alpha: Vec<f64>, gamma: Vec<f64> },
}

pub fn params_to_json(doc: &ParamsDocument) -> Result<String> {
    let body = match doc {
        ParamsDocument::Kinbm(p) => Body::Kinbm {
            k: p.k(),
            weights: p.weights().to_vec(),
            shapes: p.shapes().to_vec(),
            rates: p.rates().to_vec(),
        },
        ParamsDocument::ParetoMix(p) => Body::ParetoMix {
            rho: p.weights().to_vec(),
            alpha: p.tail_indices().to_vec(),
            gamma: p.scales().to_vec(),
        },
    };
    let env = Envelope { version: PARAMS_VERSION.to_string(), body };
    Ok(serde_json::to_string_pretty(&env)?)
}

pub fn params_from_json(text: &str) -> Result<ParamsDocument> {
    let env: Envelope = serde_json::from_str(text)?;
    if env.version != PARAMS_VERSION {
        return Err(Error::InvalidParams(format!(
            "unsupported parameter document version {:?}, expected {PARAMS_VERSION:?}",
            env.version
        )));
    }
    Ok(match env.body {
        Body::Kinbm { k, weights, shapes, rates } => {
            ParamsDocument::Kinbm(KinbmParams::new(k, weights, shapes, rates)?)
        }
        Body::ParetoMix { rho, alpha, gamma } => {
            ParamsDocument::ParetoMix(ParetoMixParams::new(rho, alpha, gamma)?)
        }
    })
}
