//! File formats: UTF-8 JSON documents for languages, cost sets,
//! instances, and graphs, plus content digests for audit trails.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::boolean::{BooleanError, Graph};
use crate::model::{
    ConstraintLanguage, CostSet, Domain, Instance, Measure, ModelError, Relation, Value,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Boolean(#[from] BooleanError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationDoc {
    pub name: String,
    pub arity: usize,
    pub tuples: Vec<Vec<Value>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LanguageDoc {
    pub domain: usize,
    pub relations: Vec<RelationDoc>,
}

impl LanguageDoc {
    pub fn to_model(&self) -> Result<ConstraintLanguage, IoError> {
        let domain = Domain::new(self.domain)?;
        let relations = self
            .relations
            .iter()
            .map(|r| Relation::new(&r.name, r.arity, domain, r.tuples.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ConstraintLanguage::new(domain, relations)?)
    }

    pub fn from_model(lang: &ConstraintLanguage) -> Self {
        LanguageDoc {
            domain: lang.domain().size(),
            relations: lang
                .relations()
                .iter()
                .map(|r| RelationDoc {
                    name: r.name().to_string(),
                    arity: r.arity(),
                    tuples: r.tuples().map(|t| t.to_vec()).collect(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostsDoc {
    pub functions: Vec<Vec<Measure>>,
}

impl CostsDoc {
    pub fn to_model(&self, domain: Domain) -> Result<CostSet, IoError> {
        Ok(CostSet::new(domain, self.functions.clone())?)
    }

    pub fn from_model(costs: &CostSet) -> Self {
        CostsDoc {
            functions: costs.functions().to_vec(),
        }
    }
}

/// A sub-document given inline or as a path to its own file, resolved
/// relative to the referencing file's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InlineOrPath<T> {
    Path(String),
    Inline(T),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintDoc {
    pub scope: Vec<String>,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub language: InlineOrPath<LanguageDoc>,
    pub costs: InlineOrPath<CostsDoc>,
    pub variables: Vec<String>,
    pub constraints: Vec<ConstraintDoc>,
    /// Rows in variable order, columns in cost-function order.
    pub weights: Vec<Vec<Measure>>,
}

impl InstanceDoc {
    /// Materializes the instance; `base` anchors relative sub-document
    /// paths (typically the instance file's parent directory).
    pub fn to_model(&self, base: &Path) -> Result<Instance, IoError> {
        let language = match &self.language {
            InlineOrPath::Inline(doc) => doc.clone(),
            InlineOrPath::Path(p) => read_json::<LanguageDoc>(&base.join(p))?,
        }
        .to_model()?;
        let costs = match &self.costs {
            InlineOrPath::Inline(doc) => doc.clone(),
            InlineOrPath::Path(p) => read_json::<CostsDoc>(&base.join(p))?,
        }
        .to_model(language.domain())?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| (c.scope.clone(), c.relation.clone()))
            .collect();
        Ok(Instance::new(
            language,
            costs,
            self.variables.clone(),
            constraints,
            self.weights.clone(),
        )?)
    }

    pub fn from_model(inst: &Instance) -> Self {
        InstanceDoc {
            language: InlineOrPath::Inline(LanguageDoc::from_model(inst.language())),
            costs: InlineOrPath::Inline(CostsDoc::from_model(inst.costs())),
            variables: inst.variables().to_vec(),
            constraints: inst
                .constraints()
                .iter()
                .map(|c| ConstraintDoc {
                    scope: c.scope.iter().map(|&v| inst.variables()[v].clone()).collect(),
                    relation: c.relation.name().to_string(),
                })
                .collect(),
            weights: inst.weights().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
}

impl GraphDoc {
    pub fn to_model(&self) -> Result<Graph, IoError> {
        Ok(Graph::new(self.n, self.edges.iter().copied())?)
    }

    pub fn from_model(graph: &Graph) -> Self {
        GraphDoc {
            n: graph.n(),
            edges: graph.edges().collect(),
        }
    }
}

/// Reads and parses one JSON document, attributing errors to the path.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    let bytes = std::fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| IoError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Serializes pretty JSON with a trailing newline.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

/// Writes atomically: a temporary sibling file is renamed over the target
/// only after a complete write.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let err = |source| IoError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .map_err(err)?;
    std::io::Write::write_all(&mut tmp, contents.as_bytes()).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

/// Hex SHA-256 of raw bytes; reports embed these for input auditing.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

pub fn digest_file(path: &Path) -> Result<String, IoError> {
    let bytes = std::fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(sha256_hex(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leq_language_doc() -> LanguageDoc {
        LanguageDoc {
            domain: 2,
            relations: vec![RelationDoc {
                name: "leq".into(),
                arity: 2,
                tuples: vec![vec![0, 0], vec![0, 1], vec![1, 1]],
            }],
        }
    }

    #[test]
    fn language_round_trip() {
        let doc = leq_language_doc();
        let parsed: LanguageDoc =
            serde_json::from_str(&to_json_string(&doc)).unwrap();
        assert_eq!(parsed, doc);
        let model = doc.to_model().unwrap();
        assert_eq!(LanguageDoc::from_model(&model), doc);
    }

    #[test]
    fn costs_round_trip() {
        let doc = CostsDoc {
            functions: vec![vec![1, 0], vec![0, 1]],
        };
        let parsed: CostsDoc = serde_json::from_str(&to_json_string(&doc)).unwrap();
        assert_eq!(parsed, doc);
        let model = doc.to_model(Domain::new(2).unwrap()).unwrap();
        assert_eq!(CostsDoc::from_model(&model), doc);
    }

    #[test]
    fn instance_inline_round_trip() {
        let doc = InstanceDoc {
            language: InlineOrPath::Inline(leq_language_doc()),
            costs: InlineOrPath::Inline(CostsDoc {
                functions: vec![vec![1, 0], vec![0, 1]],
            }),
            variables: vec!["u".into(), "v".into()],
            constraints: vec![ConstraintDoc {
                scope: vec!["u".into(), "v".into()],
                relation: "leq".into(),
            }],
            weights: vec![vec![5, 1], vec![0, 3]],
        };
        let parsed: InstanceDoc = serde_json::from_str(&to_json_string(&doc)).unwrap();
        assert_eq!(parsed, doc);
        let inst = doc.to_model(Path::new(".")).unwrap();
        assert_eq!(InstanceDoc::from_model(&inst), doc);
    }

    #[test]
    fn instance_with_sub_document_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("lang.json"),
            to_json_string(&leq_language_doc()),
        )
        .unwrap();
        std::fs::write(
            dir.path().join("costs.json"),
            to_json_string(&CostsDoc {
                functions: vec![vec![0, 1]],
            }),
        )
        .unwrap();
        let doc = InstanceDoc {
            language: InlineOrPath::Path("lang.json".into()),
            costs: InlineOrPath::Path("costs.json".into()),
            variables: vec!["u".into()],
            constraints: vec![],
            weights: vec![vec![2]],
        };
        let inst = doc.to_model(dir.path()).unwrap();
        assert_eq!(inst.language().relations()[0].name(), "leq");
        assert_eq!(inst.costs().functions(), &[vec![0, 1]]);
    }

    #[test]
    fn inline_or_path_forms_parse() {
        let inline: InlineOrPath<CostsDoc> =
            serde_json::from_str(r#"{"functions": [[0, 1]]}"#).unwrap();
        assert!(matches!(inline, InlineOrPath::Inline(_)));
        let path: InlineOrPath<CostsDoc> = serde_json::from_str(r#""costs.json""#).unwrap();
        assert_eq!(path, InlineOrPath::Path("costs.json".into()));
    }

    #[test]
    fn graph_round_trip() {
        let doc = GraphDoc {
            n: 3,
            edges: vec![(0, 1), (1, 2)],
        };
        let parsed: GraphDoc = serde_json::from_str(&to_json_string(&doc)).unwrap();
        assert_eq!(parsed, doc);
        let g = doc.to_model().unwrap();
        assert_eq!(GraphDoc::from_model(&g), doc);
    }

    #[test]
    fn malformed_documents_are_attributed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{not json").unwrap();
        let err = read_json::<LanguageDoc>(&path).unwrap_err();
        assert!(err.to_string().contains("bad.json"));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.json");
        write_atomic(&path, "first\n").unwrap();
        write_atomic(&path, "second\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second\n");
    }

    #[test]
    fn digest_is_stable() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(sha256_hex(b"abc").len(), 64);
    }
}
