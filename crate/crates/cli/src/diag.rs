//! Exit codes and JSON diagnostics on standard error.

use netsemi::Error;
use serde_json::{json, Map, Value};

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SPECTRUM: u8 = 3;
pub const EXIT_NOT_VIOLATING: u8 = 4;

/// A failed command: exit code plus one JSON object for standard error.
#[derive(Debug)]
pub struct Failure {
    pub exit: u8,
    pub kind: &'static str,
    pub message: String,
    /// Offending key path in the model document.
    pub path: Option<String>,
    pub extra: Map<String, Value>,
}

impl Failure {
    pub fn new(exit: u8, kind: &'static str, message: String) -> Self {
        Failure {
            exit,
            kind,
            message,
            path: None,
            extra: Map::new(),
        }
    }

    pub fn config(path: Option<String>, message: String) -> Self {
        Failure {
            path,
            ..Failure::new(EXIT_CONFIG, "config", message)
        }
    }

    pub fn usage(message: String) -> Self {
        Failure::new(EXIT_CONFIG, "usage", message)
    }

    pub fn io(err: std::io::Error, what: &std::path::Path) -> Self {
        Failure::new(EXIT_RUNTIME, "io", format!("{}: {err}", what.display()))
    }

    fn with(mut self, key: &str, value: Value) -> Self {
        self.extra.insert(key.into(), value);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("error".into(), json!(self.kind));
        obj.insert("exit".into(), json!(self.exit));
        obj.insert("message".into(), json!(self.message));
        if let Some(p) = &self.path {
            obj.insert("path".into(), json!(p));
        }
        for (k, v) in &self.extra {
            obj.insert(k.clone(), v.clone());
        }
        Value::Object(obj)
    }
}

fn complex(z: netsemi::Complex64) -> Value {
    json!([z.re, z.im])
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::SinkPresent(v) => Failure::new(EXIT_CONFIG, "sink", msg).with("vertices", json!(v)),
            Error::NearSpectrum { lambda, condition } => Failure::new(EXIT_SPECTRUM, "near_spectrum", msg)
                .with("lambda", complex(lambda))
                .with("condition", json!(condition)),
            Error::NoContraction { lambda, ratio } => Failure::new(EXIT_SPECTRUM, "no_contraction", msg)
                .with("lambda", complex(lambda))
                .with("ratio", json!(ratio)),
            Error::SeriesDiverges { lambda, norm } => Failure::new(EXIT_SPECTRUM, "no_contraction", msg)
                .with("lambda", complex(lambda))
                .with("norm", json!(norm)),
            Error::NotViolating => Failure::new(EXIT_NOT_VIOLATING, "not_violating", msg),
            Error::NoConvergence(z) => Failure::new(EXIT_RUNTIME, "no_convergence", msg).with("seed", complex(z)),
            Error::BranchCut(z) => Failure::new(EXIT_CONFIG, "branch_cut", msg).with("lambda", complex(z)),
            Error::InvalidGraph(_) => Failure::new(EXIT_CONFIG, "invalid_graph", msg),
            Error::InconsistentRates(_) => Failure::new(EXIT_CONFIG, "inconsistent_rates", msg),
            Error::InvalidFlow(_) => Failure::new(EXIT_CONFIG, "stochasticity", msg),
            Error::InvalidCoupling(_) => Failure::new(EXIT_CONFIG, "invalid_coupling", msg),
            Error::InvalidGrid(_) => Failure::new(EXIT_CONFIG, "invalid_grid", msg),
            Error::DimensionMismatch(_) => Failure::new(EXIT_CONFIG, "dimension_mismatch", msg),
            Error::OutOfDomain(_) | Error::InvalidMu(_) | Error::InvalidArgument(_) => {
                Failure::new(EXIT_CONFIG, "invalid_argument", msg)
            }
            Error::Parse(_) => Failure::new(EXIT_CONFIG, "parse", msg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(Failure::from(Error::SinkPresent(vec![1])).exit, EXIT_CONFIG);
        let near = Failure::from(Error::NearSpectrum {
            lambda: netsemi::Complex64::new(1.0, 0.0),
            condition: 1e13,
        });
        assert_eq!(near.exit, EXIT_SPECTRUM);
        assert_eq!(near.to_json()["lambda"], json!([1.0, 0.0]));
        assert_eq!(Failure::from(Error::NotViolating).exit, EXIT_NOT_VIOLATING);
        assert_eq!(Failure::from(Error::SinkPresent(vec![3])).to_json()["vertices"], json!([3]));
    }
}
