//! Decoder model configuration files.
//!
//! ```json
//! {"name": "uf", "runtime": {"kind": "binomial", "N": 844, "Q": 0.001, "unit_ns": 1000},
//!  "failure": {"kind": "accuracy", "alpha": 0.75}}
//! ```
//!
//! An `empirical` runtime names one trace per distance (`"trace"` may be a string or a
//! list); each trace's metadata comes from `"meta"` when given, otherwise from the JSON
//! sidecar next to it. Relative paths resolve against the config file's directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{DecoderFamily, DecoderModel, FailureModel, RuntimeModel};
use crate::error::{Error, Result};
use crate::trace::{build_distribution, load_metadata, parse_trace, MetadataOverrides};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecoderConfig {
    pub name: String,
    pub runtime: RuntimeConfig,
    /// Optional for empirical runtimes, whose failures come from the traces.
    #[serde(default)]
    pub failure: Option<FailureConfig>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(PathBuf),
    Many(Vec<PathBuf>),
}

impl OneOrMany {
    fn paths(&self) -> Vec<&Path> {
        match self {
            OneOrMany::One(p) => vec![p.as_path()],
            OneOrMany::Many(v) => v.iter().map(PathBuf::as_path).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuntimeConfig {
    Binomial {
        #[serde(rename = "N")]
        n: u64,
        #[serde(rename = "Q")]
        q: f64,
        unit_ns: u64,
    },
    Instantaneous,
    Empirical {
        trace: OneOrMany,
        #[serde(default)]
        meta: Option<OneOrMany>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FailureConfig {
    Heuristic {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
    },
    /// Accuracy relative to the default heuristic.
    Accuracy {
        alpha: f64,
    },
    Empirical {
        rate: f64,
        events: u64,
    },
}

impl FailureConfig {
    pub fn to_model(&self) -> Result<FailureModel> {
        let model = match *self {
            FailureConfig::Heuristic { a, b } => FailureModel::Heuristic { a, b },
            FailureConfig::Accuracy { alpha } => FailureModel::AccuracyScaled {
                base: Box::new(FailureModel::heuristic()),
                accuracy: alpha,
            },
            FailureConfig::Empirical { rate, events } => FailureModel::Empirical {
                rate,
                failure_events: events,
            },
        };
        model.validate()?;
        Ok(model)
    }
}

impl DecoderConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("decoder config: {e}")))
    }

    /// Resolves the config into a decoder family, loading any traces it references.
    pub fn into_family(self, base_dir: &Path) -> Result<DecoderFamily> {
        let failure = self
            .failure
            .as_ref()
            .map(FailureConfig::to_model)
            .transpose()?;
        match self.runtime {
            RuntimeConfig::Binomial { n, q, unit_ns } => Ok(DecoderFamily::Fixed(DecoderModel {
                name: self.name,
                runtime: RuntimeModel::binomial(n, q, unit_ns)?,
                failure: failure.ok_or_else(|| missing_failure("binomial"))?,
            })),
            RuntimeConfig::Instantaneous => Ok(DecoderFamily::Fixed(DecoderModel {
                name: self.name,
                runtime: RuntimeModel::Instantaneous,
                failure: failure.ok_or_else(|| missing_failure("instantaneous"))?,
            })),
            RuntimeConfig::Empirical { trace, meta } => {
                if failure.is_some() {
                    log::warn!(
                        "decoder `{}`: failure model ignored, failures are read from the traces",
                        self.name
                    );
                }
                let traces = trace.paths();
                let metas: Vec<PathBuf> = match &meta {
                    Some(m) => {
                        let m = m.paths();
                        if m.len() != traces.len() {
                            return Err(Error::config(format!(
                                "decoder `{}`: {} traces but {} metadata files",
                                self.name,
                                traces.len(),
                                m.len()
                            )));
                        }
                        m.into_iter().map(|p| base_dir.join(p)).collect()
                    }
                    None => traces
                        .iter()
                        .map(|t| base_dir.join(t).with_extension("json"))
                        .collect(),
                };
                let mut models = BTreeMap::new();
                for (trace_path, meta_path) in traces.iter().zip(&metas) {
                    let trace_path = base_dir.join(trace_path);
                    let meta = load_metadata(Some(meta_path), &MetadataOverrides::default())?;
                    let trace = parse_trace(&trace_path, meta)?;
                    let dist = build_distribution(&trace)?;
                    let model = DecoderModel {
                        name: self.name.clone(),
                        failure: FailureModel::Empirical {
                            rate: dist.decode_failure_rate(),
                            failure_events: dist.total_failed(),
                        },
                        runtime: RuntimeModel::Empirical(dist),
                    };
                    if models.insert(meta.distance, model).is_some() {
                        return Err(Error::config(format!(
                            "decoder `{}`: two traces for distance {}",
                            self.name, meta.distance
                        )));
                    }
                }
                Ok(DecoderFamily::PerDistance {
                    name: self.name,
                    models,
                })
            }
        }
    }
}

fn missing_failure(kind: &str) -> Error {
    Error::config(format!("a `{kind}` runtime requires a `failure` model"))
}

pub fn load_decoder_config(path: &Path) -> Result<DecoderFamily> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg = DecoderConfig::from_json(&text)
        .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
    cfg.into_family(path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_binomial_accuracy() {
        let cfg = DecoderConfig::from_json(
            r#"{"name":"lin","runtime":{"kind":"binomial","N":844,"Q":0.001,"unit_ns":1000},
                "failure":{"kind":"accuracy","alpha":0.75}}"#,
        )
        .unwrap();
        let fam = cfg.into_family(Path::new(".")).unwrap();
        let m = fam.at_distance(7, 1e-3).unwrap().unwrap();
        assert_eq!(
            m.runtime,
            RuntimeModel::Binomial {
                n: 844,
                q: 0.001,
                unit_ns: 1000
            }
        );
        let r = m.failure.failure_rate(7, 1e-3).unwrap();
        assert!((r - 1e-5 / 0.75).abs() < 1e-18);
    }

    #[test]
    fn parses_other_kinds() {
        let cfg = DecoderConfig::from_json(
            r#"{"name":"i","runtime":{"kind":"instantaneous"},"failure":{"kind":"heuristic","A":0.1,"B":100}}"#,
        )
        .unwrap();
        assert!(matches!(cfg.runtime, RuntimeConfig::Instantaneous));
        let cfg = DecoderConfig::from_json(
            r#"{"name":"e","runtime":{"kind":"instantaneous"},"failure":{"kind":"empirical","rate":0.01,"events":40}}"#,
        )
        .unwrap();
        assert_eq!(
            cfg.failure.unwrap().to_model().unwrap(),
            FailureModel::Empirical {
                rate: 0.01,
                failure_events: 40
            }
        );
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(DecoderConfig::from_json(r#"{"name":"x","runtime":{"kind":"gamma"}}"#).is_err());
        let cfg =
            DecoderConfig::from_json(r#"{"name":"x","runtime":{"kind":"instantaneous"}}"#).unwrap();
        assert!(matches!(
            cfg.into_family(Path::new(".")),
            Err(Error::Config(_))
        ));
        let cfg = DecoderConfig::from_json(
            r#"{"name":"x","runtime":{"kind":"binomial","N":10,"Q":1.5,"unit_ns":1},"failure":{"kind":"accuracy","alpha":1}}"#,
        )
        .unwrap();
        assert!(matches!(
            cfg.into_family(Path::new(".")),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn empirical_traces_resolve_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("d3.csv"), "runtime_ns,failed\n10,0\n20,1\n").unwrap();
        fs::write(
            dir.path().join("d3.json"),
            r#"{"distance":3,"physical_error_rate":0.001,"shots":2,"sec_cycle_ns":1000}"#,
        )
        .unwrap();
        fs::write(
            dir.path().join("d5.csv"),
            "runtime_ns,count_total,count_failed\n30,4,0\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("m5.json"),
            r#"{"distance":5,"physical_error_rate":0.001,"shots":4,"sec_cycle_ns":1000}"#,
        )
        .unwrap();
        let cfg_path = dir.path().join("dec.json");
        fs::write(
            &cfg_path,
            r#"{"name":"pm","runtime":{"kind":"empirical","trace":["d3.csv","d5.csv"],"meta":["d3.json","m5.json"]}}"#,
        )
        .unwrap();
        let fam = load_decoder_config(&cfg_path).unwrap();
        let DecoderFamily::PerDistance { models, .. } = &fam else {
            panic!()
        };
        assert_eq!(models.keys().copied().collect::<Vec<_>>(), vec![3, 5]);
        assert_eq!(
            models[&3].failure,
            FailureModel::Empirical {
                rate: 0.5,
                failure_events: 1
            }
        );
        assert!(fam.at_distance(7, 1e-3).unwrap().is_none());

        fs::write(
            &cfg_path,
            r#"{"name":"pm","runtime":{"kind":"empirical","trace":"d3.csv"}}"#,
        )
        .unwrap();
        assert!(load_decoder_config(&cfg_path).is_ok());
    }
}
