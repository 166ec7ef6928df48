//! Dataset ingestion, run configuration and the `tune` / `train` / `eval` /
//! `predict` pipelines behind the `lmbo` binary.
//!
//! Every command reads one JSON [`RunConfig`] and writes its artifacts into
//! the configured output directory.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bo::{self, EgoConfig, Phase, TrialRecord};
use crate::error::{Error, Result};
use crate::gp::FitOptions;
use crate::kernel::KernelConfig;
use crate::lm::{self, NormStats, Samples, Split, SplitMetrics, TrainConfig};
use crate::metrics::{parameter_efficiency, MetricBundle, DEFAULT_ZETA};
use crate::mlp::{self, Activation, MlpArchitecture, MlpParams};
use crate::space::{presets, DesignPoint, DesignSpace, Role, Value, VarKind, VariableSpec};

/// Format id written into every model document.
pub const MODEL_FORMAT: &str = "lmbo-mlp/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    /// Comma if the first line has one, else tab, else runs of whitespace.
    #[default]
    Auto,
    Comma,
    Tab,
    Whitespace,
}

/// A column given by zero-based index (negative counts from the end) or name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ColumnRef {
    Index(i64),
    Name(String),
}

impl Default for ColumnRef {
    fn default() -> Self {
        ColumnRef::Index(-1)
    }
}

/// A numeric table with one target column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Row-major `n_rows × feature_names.len()`.
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target_name: String,
    pub source: PathBuf,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn samples(&self) -> Result<Samples> {
        Samples::new(self.features.clone(), self.targets.clone(), self.n_features(), 1)
    }
}

/// Parsed delimited table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub names: Vec<String>,
    pub rows: usize,
    /// Row-major.
    pub values: Vec<f64>,
}

fn split_line(line: &str, delim: Delimiter) -> Vec<&str> {
    match delim {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Tab => line.split('\t').map(str::trim).collect(),
        Delimiter::Whitespace | Delimiter::Auto => line.split_whitespace().collect(),
    }
}

/// Reads a delimited numeric table. Blank lines and lines starting with `#`
/// are skipped. `header = None` treats the first line as a header when any
/// of its cells is not a number.
pub fn read_table(path: &Path, delimiter: Delimiter, header: Option<bool>) -> Result<Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let shown = path.display().to_string();
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (first_no, first) = lines.next().ok_or_else(|| Error::Data(format!("{shown} contains no data")))?;
    let delim = match delimiter {
        Delimiter::Auto if first.contains(',') => Delimiter::Comma,
        Delimiter::Auto if first.contains('\t') => Delimiter::Tab,
        Delimiter::Auto => Delimiter::Whitespace,
        d => d,
    };
    let cells = split_line(first, delim);
    let numeric = cells.iter().all(|c| c.parse::<f64>().is_ok());
    let has_header = header.unwrap_or(!numeric);
    let ncols = cells.len();
    let mut values = Vec::new();
    let names: Vec<String> = if has_header {
        cells.iter().map(|c| c.trim_matches('"').to_string()).collect()
    } else {
        (0..ncols).map(|i| format!("col{i}")).collect()
    };
    let mut push_row = |line_no: usize, cells: Vec<&str>| -> Result<()> {
        if cells.len() != ncols {
            return Err(Error::Parse {
                path: shown.clone(),
                line: line_no,
                msg: format!("expected {ncols} columns, found {}", cells.len()),
            });
        }
        for (c, cell) in cells.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                path: shown.clone(),
                line: line_no,
                msg: format!("column {} is not numeric: `{cell}`", c + 1),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: shown.clone(),
                    line: line_no,
                    msg: format!("column {} is not finite: `{cell}`", c + 1),
                });
            }
            values.push(v);
        }
        Ok(())
    };
    if !has_header {
        push_row(first_no, cells)?;
    }
    for (no, line) in lines {
        push_row(no, split_line(line, delim))?;
    }
    let rows = values.len() / ncols.max(1);
    if rows == 0 {
        return Err(Error::Data(format!("{shown} has a header but no rows")));
    }
    Ok(Table { names, rows, values })
}

/// Loads a table and splits off the target column.
pub fn ingest_table(path: &Path, delimiter: Delimiter, target: &ColumnRef) -> Result<Dataset> {
    ingest_table_with(path, delimiter, None, target)
}

pub fn ingest_table_with(
    path: &Path,
    delimiter: Delimiter,
    header: Option<bool>,
    target: &ColumnRef,
) -> Result<Dataset> {
    let table = read_table(path, delimiter, header)?;
    let ncols = table.names.len();
    if ncols < 2 {
        return Err(Error::Data(format!("{} needs at least one feature and a target column", path.display())));
    }
    let t = match target {
        ColumnRef::Index(i) if *i < 0 && i.unsigned_abs() as usize <= ncols => ncols - i.unsigned_abs() as usize,
        ColumnRef::Index(i) if *i >= 0 && (*i as usize) < ncols => *i as usize,
        ColumnRef::Index(i) => {
            return Err(Error::Data(format!("target column {i} does not exist ({ncols} columns)")));
        }
        ColumnRef::Name(n) => table
            .names
            .iter()
            .position(|c| c == n)
            .ok_or_else(|| Error::Data(format!("target column `{n}` not found in {:?}", table.names)))?,
    };
    let mut features = Vec::with_capacity(table.rows * (ncols - 1));
    let mut targets = Vec::with_capacity(table.rows);
    for row in table.values.chunks_exact(ncols) {
        for (c, v) in row.iter().enumerate() {
            if c == t {
                targets.push(*v);
            } else {
                features.push(*v);
            }
        }
    }
    let mut feature_names = table.names.clone();
    let target_name = feature_names.remove(t);
    Ok(Dataset { features, targets, feature_names, target_name, source: path.to_path_buf() })
}

// ---------------------------------------------------------------------------
// configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub delimiter: Delimiter,
    /// `null` detects a header automatically.
    #[serde(default)]
    pub header: Option<bool>,
    #[serde(default)]
    pub target: ColumnRef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KindDecl {
    Continuous {
        lo: f64,
        hi: f64,
    },
    Integer {
        lo: i64,
        hi: i64,
    },
    /// Either explicit `levels` or a `lo`/`hi`/`step` grid.
    Ordinal {
        #[serde(default)]
        levels: Option<Vec<f64>>,
        #[serde(default)]
        lo: Option<f64>,
        #[serde(default)]
        hi: Option<f64>,
        #[serde(default)]
        step: Option<f64>,
    },
    Categorical {
        levels: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoleDecl {
    #[default]
    Neutral,
    Meta,
    Decreed {
        parent: String,
        active_when: Vec<serde_json::Value>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDecl {
    pub name: String,
    #[serde(flatten)]
    pub kind: KindDecl,
    #[serde(default)]
    pub role: RoleDecl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceConfig {
    /// `mlp_grid` (widths 10..80 step 5) or `mlp_integer` (widths 5..40).
    Preset {
        preset: String,
    },
    Variables {
        variables: Vec<VariableDecl>,
    },
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig::Preset { preset: "mlp_integer".into() }
    }
}

fn kind_from_decl(name: &str, k: &KindDecl) -> Result<VarKind> {
    Ok(match k {
        KindDecl::Continuous { lo, hi } => VarKind::Continuous { lo: *lo, hi: *hi },
        KindDecl::Integer { lo, hi } => VarKind::Integer { lo: *lo, hi: *hi },
        KindDecl::Ordinal { levels: Some(l), .. } => VarKind::Ordinal { levels: l.clone() },
        KindDecl::Ordinal { levels: None, lo: Some(lo), hi: Some(hi), step: Some(step) } if *step > 0.0 && hi >= lo => {
            VarKind::ordinal_range(*lo, *hi, *step)
        }
        KindDecl::Ordinal { .. } => {
            return Err(Error::Config(format!("ordinal `{name}` needs `levels` or a positive `step` with `lo <= hi`")))
        }
        KindDecl::Categorical { levels } => VarKind::Categorical { levels: levels.clone() },
    })
}

impl SpaceConfig {
    pub fn build(&self) -> Result<DesignSpace> {
        match self {
            SpaceConfig::Preset { preset } => match preset.as_str() {
                "mlp_grid" => Ok(presets::mlp_grid_space()),
                "mlp_integer" => Ok(presets::mlp_integer_space()),
                other => {
                    Err(Error::Config(format!("unknown space preset `{other}` (expected mlp_grid or mlp_integer)")))
                }
            },
            SpaceConfig::Variables { variables } => {
                let kinds: Vec<VarKind> =
                    variables.iter().map(|v| kind_from_decl(&v.name, &v.kind)).collect::<Result<_>>()?;
                let mut specs = Vec::with_capacity(variables.len());
                for (v, kind) in variables.iter().zip(&kinds) {
                    let role = match &v.role {
                        RoleDecl::Neutral => Role::Neutral,
                        RoleDecl::Meta => Role::Meta,
                        RoleDecl::Decreed { parent, active_when } => {
                            let pk =
                                variables.iter().position(|d| &d.name == parent).map(|i| &kinds[i]).ok_or_else(
                                    || Error::Space(format!("`{}` names unknown parent `{parent}`", v.name)),
                                )?;
                            let values = active_when
                                .iter()
                                .map(|j| match (pk, j) {
                                    (VarKind::Categorical { levels }, serde_json::Value::String(s)) => levels
                                        .iter()
                                        .position(|l| l == s)
                                        .map(Value::Cat)
                                        .ok_or_else(|| Error::Space(format!("`{parent}` has no level `{s}`"))),
                                    (_, serde_json::Value::Number(n)) => Ok(Value::Num(n.as_f64().unwrap_or(f64::NAN))),
                                    (_, other) => {
                                        Err(Error::Space(format!("bad activation value {other} for `{}`", v.name)))
                                    }
                                })
                                .collect::<Result<Vec<_>>>()?;
                            Role::Decreed { parent: parent.clone(), active_when: values }
                        }
                    };
                    specs.push(VariableSpec::new(v.name.clone(), kind.clone(), role));
                }
                DesignSpace::new(specs)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoConfig {
    /// `null` uses `max(5, 2·variables)`.
    #[serde(default)]
    pub n_doe: Option<usize>,
    #[serde(default = "default_n_iter")]
    pub n_iter: usize,
    /// Concurrent trainings during the DoE phase.
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default = "default_starts")]
    pub gp_starts: usize,
    #[serde(default = "default_gp_iter")]
    pub gp_max_iter: usize,
    /// Adds `wall_time` to each trial line (the log is then no longer
    /// reproducible byte for byte).
    #[serde(default)]
    pub log_wall_time: bool,
}

fn default_n_iter() -> usize {
    20
}
fn one() -> usize {
    1
}
fn default_starts() -> usize {
    FitOptions::default().n_starts
}
fn default_gp_iter() -> usize {
    FitOptions::default().max_iter
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            n_doe: None,
            n_iter: default_n_iter(),
            workers: 1,
            gp_starts: default_starts(),
            gp_max_iter: default_gp_iter(),
            log_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self { hidden: vec![20, 20], activation: Activation::Tanh }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricOptions {
    #[serde(default = "default_zeta")]
    pub zeta: f64,
}

fn default_zeta() -> f64 {
    DEFAULT_ZETA
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self { zeta: DEFAULT_ZETA }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalSplit {
    #[default]
    All,
    Train,
    Val,
    Test,
}

/// One JSON document driving any command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataConfig,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub bo: BoConfig,
    /// LM settings; the top-level `seed` replaces `train.seed`.
    #[serde(default)]
    pub train: TrainConfig,
    /// Fixed architecture for `train`.
    #[serde(default)]
    pub arch: ArchConfig,
    #[serde(default)]
    pub metrics: MetricOptions,
    /// Rows used by `eval`, reconstructed from the model's stored split.
    #[serde(default)]
    pub eval_split: EvalSplit,
    /// Model document for `eval` / `predict`; defaults to `<out_dir>/model.json`.
    #[serde(default)]
    pub model: Option<PathBuf>,
    /// Input rows for `predict`.
    #[serde(default)]
    pub predict_input: Option<PathBuf>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_out() -> PathBuf {
    PathBuf::from("lmbo-out")
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Loads a config; relative paths inside it are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut c = Self::from_json(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut c.data.path);
        fix(&mut c.out_dir);
        if let Some(m) = c.model.as_mut() {
            fix(m);
        }
        if let Some(m) = c.predict_input.as_mut() {
            fix(m);
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let mut t = self.train.clone();
        t.seed = self.seed;
        t.validate()?;
        if let Some(n) = self.bo.n_doe {
            if n < 2 {
                return Err(Error::Config(format!("bo.n_doe must be >= 2, got {n}")));
            }
        }
        if self.bo.gp_starts == 0 || self.bo.gp_max_iter == 0 {
            return Err(Error::Config("bo.gp_starts and bo.gp_max_iter must be >= 1".into()));
        }
        if !(self.metrics.zeta > 0.0) {
            return Err(Error::Config(format!("metrics.zeta must be positive, got {}", self.metrics.zeta)));
        }
        if self.arch.hidden.is_empty() || self.arch.hidden.contains(&0) {
            return Err(Error::Config(format!("arch.hidden must be non-empty widths >= 1: {:?}", self.arch.hidden)));
        }
        self.kernel_checked()?;
        Ok(())
    }

    fn kernel_checked(&self) -> Result<KernelConfig> {
        if !(self.kernel.nugget > 0.0 && self.kernel.nugget <= crate::kernel::MAX_NUGGET) {
            return Err(Error::Config(format!(
                "kernel.nugget must lie in (0, {:e}], got {}",
                crate::kernel::MAX_NUGGET,
                self.kernel.nugget
            )));
        }
        Ok(self.kernel)
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig { seed: self.seed, ..self.train.clone() }
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let d = ingest_table_with(&self.data.path, self.data.delimiter, self.data.header, &self.data.target)?;
        if d.n_rows() < 10 {
            return Err(Error::Data(format!(
                "{} has {} rows; at least 10 are required",
                d.source.display(),
                d.n_rows()
            )));
        }
        Ok(d)
    }

    pub fn model_path(&self) -> PathBuf {
        self.model.clone().unwrap_or_else(|| self.out_dir.join("model.json"))
    }
}

// ---------------------------------------------------------------------------
// architecture mapping

/// Maps a design point to an MLP: `N` is the hidden-layer count, `N1`, `N2`,
/// ... the widths and `F` the activation label.
pub fn arch_from_point(
    space: &DesignSpace,
    point: &DesignPoint,
    input_dim: usize,
    output_dim: usize,
) -> Result<MlpArchitecture> {
    let mut widths: Vec<(usize, usize)> = Vec::new();
    let mut layers = None;
    let mut activation = None;
    for (i, v) in space.variables().iter().enumerate() {
        let val = point.value(i);
        if v.name == "N" {
            layers = Some(val.as_f64().round() as usize);
        } else if v.name == "F" {
            let label = match (&v.kind, val) {
                (VarKind::Categorical { levels }, Value::Cat(c)) => levels[c].clone(),
                _ => return Err(Error::Config("`F` must be a categorical activation variable".into())),
            };
            activation = Some(label.parse::<Activation>()?);
        } else if let Some(k) = v.name.strip_prefix('N').and_then(|s| s.parse::<usize>().ok()) {
            if point.is_active(i) {
                let w = val.as_f64().round();
                if !(w >= 1.0) {
                    return Err(Error::Config(format!("layer width `{}` must be >= 1, got {w}", v.name)));
                }
                widths.push((k, w as usize));
            }
        }
    }
    widths.sort();
    let mut hidden: Vec<usize> = widths.into_iter().map(|(_, w)| w).collect();
    if let Some(n) = layers {
        if hidden.len() < n {
            return Err(Error::Config(format!("N = {n} but only {} width variables are active", hidden.len())));
        }
        hidden.truncate(n);
    }
    let activation = activation.ok_or_else(|| Error::Config("design space has no activation variable `F`".into()))?;
    MlpArchitecture::new(input_dim, hidden, activation, output_dim)
}

// ---------------------------------------------------------------------------
// model documents

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitInfo {
    pub seed: u64,
    pub ratios: [f64; 3],
    pub n_rows: usize,
}

/// Persisted model: architecture, normalisation, `β` in the canonical
/// layout documented in [`crate::mlp`], and the split it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub arch: MlpArchitecture,
    pub norm: NormStats,
    pub params: MlpParams,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
    pub split: SplitInfo,
    #[serde(default)]
    pub metrics: Option<SplitMetrics>,
    #[serde(default)]
    pub best_epoch: Option<usize>,
}

impl ModelDocument {
    pub fn new(model: &lm::TrainedModel, dataset: &Dataset, split: SplitInfo) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            arch: model.arch.clone(),
            norm: model.norm.clone(),
            params: model.params.clone(),
            feature_names: dataset.feature_names.clone(),
            target_names: vec![dataset.target_name.clone()],
            split,
            metrics: Some(model.metrics.clone()),
            best_epoch: Some(model.best_epoch),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unsupported format `{}` (expected {MODEL_FORMAT})", self.format)));
        }
        self.arch.validate().map_err(|e| Error::Model(e.to_string()))?;
        if self.params.len() != mlp::count_params(&self.arch) {
            return Err(Error::Model(format!(
                "{} parameters stored, architecture {} needs {}",
                self.params.len(),
                self.arch,
                mlp::count_params(&self.arch)
            )));
        }
        let n = &self.norm;
        if n.x_mean.len() != self.arch.input_dim
            || n.x_std.len() != self.arch.input_dim
            || n.y_mean.len() != self.arch.output_dim
            || n.y_std.len() != self.arch.output_dim
        {
            return Err(Error::Model("normalisation statistics do not match the architecture".into()));
        }
        if n.x_std.iter().chain(&n.y_std).any(|s| !(*s > 0.0)) {
            return Err(Error::Model("normalisation standard deviations must be positive".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &(serde_json::to_string_pretty(self)? + "\n"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::Model(format!("cannot read {}: {e}", path.display())))?;
        let doc: ModelDocument =
            serde_json::from_str(&text).map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
        doc.validate()?;
        Ok(doc)
    }

    /// Original-unit predictions for row-major inputs.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let xn = self.norm.normalize_x(x);
        Ok(self.norm.denormalize_y(&mlp::forward_batch(&self.arch, &self.params, &xn)?))
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.arch.input_dim {
            return Err(Error::Dimension {
                what: "feature columns vs model inputs",
                expected: self.arch.input_dim,
                got: width,
            });
        }
        Ok(())
    }

    /// Rows of a dataset selected by the stored split.
    pub fn select_rows(&self, n_rows: usize, which: EvalSplit) -> Result<Vec<usize>> {
        if which == EvalSplit::All {
            return Ok((0..n_rows).collect());
        }
        if n_rows != self.split.n_rows {
            return Err(Error::Data(format!(
                "dataset has {n_rows} rows but the model was split on {}",
                self.split.n_rows
            )));
        }
        let s = lm::split_dataset(n_rows, self.split.ratios, self.split.seed)?;
        Ok(match which {
            EvalSplit::Train => s.train,
            EvalSplit::Val => s.val,
            EvalSplit::Test => s.test,
            EvalSplit::All => unreachable!(),
        })
    }
}

/// Enlarges a stored model with [`mlp::embed`]; predictions are unchanged.
pub fn embed_document(doc: &ModelDocument, hidden: Vec<usize>) -> Result<ModelDocument> {
    let large = MlpArchitecture::new(doc.arch.input_dim, hidden, doc.arch.activation, doc.arch.output_dim)?;
    let params = mlp::embed(&doc.arch, &doc.params, &large)?;
    Ok(ModelDocument { arch: large, params, metrics: None, best_epoch: None, ..doc.clone() })
}

// ---------------------------------------------------------------------------
// commands

fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, contents)?;
    Ok(())
}

fn metrics_json(m: &MetricBundle) -> serde_json::Value {
    serde_json::json!({"mse": m.mse, "rmse": m.rmse, "mape": m.mape, "n": m.n})
}

fn split_metrics_text(out: &mut String, m: &SplitMetrics) {
    let mut line = |name: &str, b: &MetricBundle| {
        let _ = writeln!(out, "  {name:<5} n={:<6} MSE={:.6e}  RMSE={:.6e}  MAPE={:.4}%", b.n, b.mse, b.rmse, b.mape);
    };
    line("train", &m.train);
    line("val", &m.val);
    if let Some(t) = &m.test {
        line("test", t);
    }
}

fn dataset_json(d: &Dataset) -> serde_json::Value {
    serde_json::json!({
        "path": d.source.display().to_string(),
        "rows": d.n_rows(),
        "features": d.feature_names,
        "target": d.target_name,
    })
}

/// Outcome of [`cmd_tune`].
#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub result: bo::BoResult,
    pub best_arch: MlpArchitecture,
    pub best_model: ModelDocument,
    pub report: serde_json::Value,
}

/// Bayesian optimisation of the architecture. Writes `trials.jsonl`
/// (flushed after each trial), `timings.csv`, `model.json` for the best
/// point, its `history.csv`, and `report.json` / `report.txt`.
pub fn cmd_tune(config: &RunConfig) -> Result<TuneOutcome> {
    config.validate()?;
    let space = config.space.build()?;
    let dataset = config.load_dataset()?;
    let samples = dataset.samples()?;
    let train_cfg = config.train_config();
    let split = lm::split_dataset(samples.len(), train_cfg.split, config.seed)?;
    let (d_in, d_out) = (samples.n_inputs, samples.n_outputs);

    let objective = |point: &DesignPoint, seed: u64| -> std::result::Result<f64, String> {
        let arch = arch_from_point(&space, point, d_in, d_out).map_err(|e| e.to_string())?;
        let cfg = TrainConfig { seed, ..train_cfg.clone() };
        let model = lm::train_with_split(&arch, &samples, &split, &cfg).map_err(|e| e.to_string())?;
        Ok(model.metrics.val.mape)
    };

    fs::create_dir_all(&config.out_dir)?;
    let mut log = BufWriter::new(File::create(config.out_dir.join("trials.jsonl"))?);
    let mut timings = BufWriter::new(File::create(config.out_dir.join("timings.csv"))?);
    writeln!(timings, "iteration,phase,wall_time")?;
    let log_time = config.bo.log_wall_time;
    let mut on_trial = |t: &TrialRecord| -> Result<()> {
        writeln!(log, "{}", serde_json::to_string(&t.to_json(&space, log_time))?)?;
        log.flush()?;
        let phase = if t.phase == Phase::Doe { "doe" } else { "ego" };
        writeln!(timings, "{},{phase},{:.6}", t.iteration, t.wall_time)?;
        timings.flush()?;
        Ok(())
    };

    let mut ego = EgoConfig::new(
        config.bo.n_doe.unwrap_or_else(|| EgoConfig::default_n_doe(&space)),
        config.bo.n_iter,
        config.seed,
    );
    ego.kernel = config.kernel_checked()?;
    ego.workers = config.bo.workers;
    ego.fit = FitOptions { n_starts: config.bo.gp_starts, max_iter: config.bo.gp_max_iter };
    let result = bo::run_ego_with(&objective, &space, &ego, &mut on_trial)?;

    // retrain the winner; the trial seed makes this the identical model
    let best = result.best();
    let best_arch = arch_from_point(&space, &best.point, d_in, d_out)?;
    let model =
        lm::train_with_split(&best_arch, &samples, &split, &TrainConfig { seed: best.seed, ..train_cfg.clone() })?;
    let doc = ModelDocument::new(
        &model,
        &dataset,
        SplitInfo { seed: config.seed, ratios: train_cfg.split, n_rows: samples.len() },
    );
    doc.save(&config.out_dir.join("model.json"))?;
    write_file(&config.out_dir.join("history.csv"), &model.history_csv())?;

    let n_params = best_arch.n_params();
    let headline = model.metrics.test.as_ref().unwrap_or(&model.metrics.val);
    let pe = parameter_efficiency(headline.mape, n_params, config.metrics.zeta)?;
    let failed = result.trials.iter().filter(|t| t.failed).count();
    let report = serde_json::json!({
        "command": "tune",
        "seed": config.seed,
        "dataset": dataset_json(&dataset),
        "space": space.variables().iter().map(|v| v.name.clone()).collect::<Vec<_>>(),
        "budget": {
            "n_doe": ego.n_doe,
            "n_iter": ego.n_iter,
            "evaluated": result.trials.len(),
            "failed": failed,
            "exhausted": result.exhausted,
        },
        "best": {
            "iteration": best.iteration,
            "phase": best.phase,
            "point": space.point_to_json(&best.point),
            "arch": best_arch.to_string(),
            "hidden": best_arch.hidden,
            "activation": best_arch.activation,
            "n_params": n_params,
            "trial_seed": best.seed,
            "val_mape": best.objective,
        },
        "metrics": {
            "train": metrics_json(&model.metrics.train),
            "val": metrics_json(&model.metrics.val),
            "test": model.metrics.test.as_ref().map(metrics_json),
        },
        "parameter_efficiency": pe,
        "zeta": config.metrics.zeta,
        "best_epoch": model.best_epoch,
        "stop_reason": model.stop_reason,
    });
    write_file(&config.out_dir.join("report.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;

    let mut txt = String::new();
    let _ = writeln!(txt, "tune report (seed {})", config.seed);
    let _ = writeln!(
        txt,
        "dataset: {} ({} rows, {} features)",
        dataset.source.display(),
        dataset.n_rows(),
        dataset.n_features()
    );
    let _ = writeln!(
        txt,
        "budget: {} DoE + {} EGO requested, {} evaluated, {} failed{}",
        ego.n_doe,
        ego.n_iter,
        result.trials.len(),
        failed,
        if result.exhausted { ", space exhausted" } else { "" }
    );
    let _ = writeln!(txt, "best point (trial {}): {}", best.iteration, space.describe(&best.point));
    let _ = writeln!(txt, "architecture: {best_arch} ({n_params} parameters)");
    let _ = writeln!(txt, "validation MAPE at search time: {:.4}%", best.objective);
    split_metrics_text(&mut txt, &model.metrics);
    let _ = writeln!(txt, "parameter efficiency (zeta={}): {:.6e}", config.metrics.zeta, pe);
    write_file(&config.out_dir.join("report.txt"), &txt)?;

    Ok(TuneOutcome { result, best_arch, best_model: doc, report })
}

/// Trains `config.arch`. Writes `model.json`, `history.csv` and reports.
pub fn cmd_train(config: &RunConfig) -> Result<(lm::TrainedModel, ModelDocument)> {
    config.validate()?;
    let dataset = config.load_dataset()?;
    let samples = dataset.samples()?;
    let cfg = config.train_config();
    let arch =
        MlpArchitecture::new(samples.n_inputs, config.arch.hidden.clone(), config.arch.activation, samples.n_outputs)?;
    let split: Split = lm::split_dataset(samples.len(), cfg.split, config.seed)?;
    let model = lm::train_with_split(&arch, &samples, &split, &cfg)?;
    let doc =
        ModelDocument::new(&model, &dataset, SplitInfo { seed: config.seed, ratios: cfg.split, n_rows: samples.len() });
    fs::create_dir_all(&config.out_dir)?;
    doc.save(&config.out_dir.join("model.json"))?;
    write_file(&config.out_dir.join("history.csv"), &model.history_csv())?;

    let headline = model.metrics.test.as_ref().unwrap_or(&model.metrics.val);
    let pe = parameter_efficiency(headline.mape, arch.n_params(), config.metrics.zeta)?;
    let report = serde_json::json!({
        "command": "train",
        "seed": config.seed,
        "dataset": dataset_json(&dataset),
        "arch": arch.to_string(),
        "n_params": arch.n_params(),
        "epochs": model.history.len(),
        "best_epoch": model.best_epoch,
        "stop_reason": model.stop_reason,
        "metrics": {
            "train": metrics_json(&model.metrics.train),
            "val": metrics_json(&model.metrics.val),
            "test": model.metrics.test.as_ref().map(metrics_json),
        },
        "parameter_efficiency": pe,
        "zeta": config.metrics.zeta,
    });
    write_file(&config.out_dir.join("report.json"), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    let mut txt = String::new();
    let _ = writeln!(txt, "train report (seed {})", config.seed);
    let _ = writeln!(txt, "architecture: {arch} ({} parameters)", arch.n_params());
    let _ = writeln!(txt, "epochs: {} (best {}, stop: {:?})", model.history.len(), model.best_epoch, model.stop_reason);
    split_metrics_text(&mut txt, &model.metrics);
    let _ = writeln!(txt, "parameter efficiency (zeta={}): {:.6e}", config.metrics.zeta, pe);
    write_file(&config.out_dir.join("report.txt"), &txt)?;
    Ok((model, doc))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutcome {
    pub metrics: MetricBundle,
    pub n_params: usize,
    pub parameter_efficiency: f64,
    pub zeta: f64,
    pub split: EvalSplit,
}

impl EvalOutcome {
    pub fn to_text(&self) -> String {
        format!(
            "rows={} MSE={:.6e} RMSE={:.6e} MAPE={:.4}% params={} PE(zeta={})={:.6e}\n",
            self.metrics.n,
            self.metrics.mse,
            self.metrics.rmse,
            self.metrics.mape,
            self.n_params,
            self.zeta,
            self.parameter_efficiency
        )
    }
}

/// Scores the stored model on the configured dataset rows; writes `eval.json`.
pub fn cmd_eval(config: &RunConfig) -> Result<EvalOutcome> {
    config.validate()?;
    let doc = ModelDocument::load(&config.model_path())?;
    let dataset = config.load_dataset()?;
    doc.check_width(dataset.n_features())?;
    let samples = dataset.samples()?.subset(&doc.select_rows(dataset.n_rows(), config.eval_split)?);
    let metrics = MetricBundle::compute(&samples.y, &doc.predict(&samples.x)?)?;
    let n_params = doc.arch.n_params();
    let out = EvalOutcome {
        metrics,
        n_params,
        parameter_efficiency: parameter_efficiency(metrics.mape, n_params, config.metrics.zeta)?,
        zeta: config.metrics.zeta,
        split: config.eval_split,
    };
    write_file(&config.out_dir.join("eval.json"), &(serde_json::to_string_pretty(&out)? + "\n"))?;
    Ok(out)
}

/// Predicts every row of `input` (or `config.predict_input`); writes
/// `predictions.csv` and returns the predictions in row order.
pub fn cmd_predict(config: &RunConfig, input: Option<&Path>) -> Result<Vec<f64>> {
    config.validate()?;
    let doc = ModelDocument::load(&config.model_path())?;
    let path = input
        .map(Path::to_path_buf)
        .or_else(|| config.predict_input.clone())
        .ok_or_else(|| Error::Config("predict needs an input file (predict_input or --input)".into()))?;
    let table = read_table(&path, config.data.delimiter, None)?;
    doc.check_width(table.names.len())?;
    let preds = doc.predict(&table.values)?;
    let mut csv = format!("{}\n", doc.target_names.join(","));
    for p in &preds {
        let _ = writeln!(csv, "{p:e}");
    }
    write_file(&config.out_dir.join("predictions.csv"), &csv)?;
    Ok(preds)
}
