use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PipelineError, SelectionRule};
use crate::corpus::{Dataset, DocumentSummaryPair, SummaryOrigin};
use crate::methods::{BackendConfig, MethodSpec, ScorerRegistry};

/// Restricts a run to some datasets and summary origins. Empty lists keep all.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFilter {
    pub dataset: Vec<Dataset>,
    pub summary_origin: Vec<SummaryOrigin>,
}

impl SplitFilter {
    pub fn keeps(&self, pair: &DocumentSummaryPair) -> bool {
        (self.dataset.is_empty() || self.dataset.contains(&pair.dataset))
            && (self.summary_origin.is_empty()
                || self.summary_origin.contains(&pair.summary_origin))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub threshold: Option<f64>,
    pub top_k: Option<i64>,
}

impl SelectionConfig {
    /// `None` means the default rule: gold source count, else threshold 0.
    pub fn rule(&self) -> Result<Option<SelectionRule>, PipelineError> {
        match (self.threshold, self.top_k) {
            (Some(_), Some(_)) => Err(PipelineError::Config(
                "selection.threshold and selection.top_k are mutually exclusive".into(),
            )),
            (Some(d), None) => Ok(Some(SelectionRule::Threshold(d))),
            (None, Some(k)) if k <= 0 => Err(PipelineError::NonPositiveK),
            (None, Some(k)) => Ok(Some(SelectionRule::TopK(k as usize))),
            (None, None) => Ok(None),
        }
    }
}

fn default_workers() -> usize {
    4
}

/// A scoring run, usually read from TOML. Relative paths are resolved
/// against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: PathBuf,
    #[serde(default)]
    pub annotations: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub filters: SplitFilter,
    #[serde(default)]
    pub selection: SelectionConfig,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub backends: BTreeMap<String, BackendConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn new(
        corpus: impl Into<PathBuf>,
        output_dir: impl Into<PathBuf>,
        methods: Vec<MethodSpec>,
    ) -> Self {
        Self {
            corpus: corpus.into(),
            annotations: None,
            cache_dir: None,
            output_dir: output_dir.into(),
            workers: default_workers(),
            filters: SplitFilter::default(),
            selection: SelectionConfig::default(),
            methods,
            backends: BTreeMap::new(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_toml(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, PipelineError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, base)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    /// Checks everything that can be checked without touching backends.
    pub fn validate(&self, registry: &ScorerRegistry) -> Result<(), PipelineError> {
        if self.methods.is_empty() {
            return Err(PipelineError::Config("no methods configured".into()));
        }
        if self.workers == 0 {
            return Err(PipelineError::Config("workers must be at least 1".into()));
        }
        let mut labels = std::collections::HashSet::new();
        for m in &self.methods {
            if !registry.contains(&m.name) {
                return Err(crate::methods::MethodError::UnknownMethod {
                    name: m.name.clone(),
                    registered: registry.names(),
                }
                .into());
            }
            if !labels.insert(m.label()) {
                return Err(PipelineError::Config(format!(
                    "method label `{}` used twice; set distinct `label`s",
                    m.label()
                )));
            }
        }
        self.selection.rule()?;
        Ok(())
    }
}
