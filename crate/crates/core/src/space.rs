//! Hierarchical mixed-variable design spaces.
//!
//! A [`DesignSpace`] is an ordered list of [`VariableSpec`]s. Each variable has
//! a [`VarKind`] (continuous, integer, ordinal or categorical) and a [`Role`]:
//! `Meta` variables switch `Decreed` variables on and off, `Neutral` variables
//! are always present. A [`DesignPoint`] stores one value per variable plus an
//! activity mask; inactive slots are always rewritten to the variable's first
//! level / lower bound so that two points differing only in dead coordinates
//! compare equal.

use std::collections::HashSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Cap on the number of points [`DesignSpace::enumerate`] will materialise.
pub const DEFAULT_ENUMERATION_CAP: usize = 100_000;

const LEVEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum VarKind {
    Continuous {
        lo: f64,
        hi: f64,
    },
    /// Every integer in `lo..=hi`.
    Integer {
        lo: i64,
        hi: i64,
    },
    /// A strictly increasing list of numeric levels.
    Ordinal {
        levels: Vec<f64>,
    },
    Categorical {
        levels: Vec<String>,
    },
}

impl VarKind {
    /// Ordinal levels `lo, lo + step, ..., hi`.
    pub fn ordinal_range(lo: f64, hi: f64, step: f64) -> VarKind {
        let n = ((hi - lo) / step).round() as usize;
        VarKind::Ordinal { levels: (0..=n).map(|i| lo + step * i as f64).collect() }
    }

    pub fn categorical<S: Into<String>>(levels: impl IntoIterator<Item = S>) -> VarKind {
        VarKind::Categorical { levels: levels.into_iter().map(Into::into).collect() }
    }

    /// Number of distinct values, `None` for continuous variables.
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            VarKind::Continuous { .. } => None,
            VarKind::Integer { lo, hi } => Some((hi - lo) as usize + 1),
            VarKind::Ordinal { levels } => Some(levels.len()),
            VarKind::Categorical { levels } => Some(levels.len()),
        }
    }

    pub fn is_categorical(&self) -> bool {
        matches!(self, VarKind::Categorical { .. })
    }

    /// Width of this variable in the encoded kernel input.
    pub fn encoded_width(&self) -> usize {
        match self {
            VarKind::Categorical { levels } => levels.len(),
            _ => 1,
        }
    }

    /// The imputation value used for inactive slots.
    pub fn first_value(&self) -> Value {
        match self {
            VarKind::Continuous { lo, .. } => Value::Num(*lo),
            VarKind::Integer { lo, .. } => Value::Num(*lo as f64),
            VarKind::Ordinal { levels } => Value::Num(levels[0]),
            VarKind::Categorical { .. } => Value::Cat(0),
        }
    }

    /// Value for level index `idx` of a discrete variable.
    pub fn value_at(&self, idx: usize) -> Value {
        match self {
            VarKind::Continuous { lo, .. } => Value::Num(*lo),
            VarKind::Integer { lo, .. } => Value::Num((*lo + idx as i64) as f64),
            VarKind::Ordinal { levels } => Value::Num(levels[idx]),
            VarKind::Categorical { .. } => Value::Cat(idx),
        }
    }

    /// Level index of a discrete value, `None` if the value is not a level.
    pub fn level_index(&self, value: Value) -> Option<usize> {
        match (self, value) {
            (VarKind::Integer { lo, hi }, Value::Num(v)) => {
                let r = v.round();
                if (v - r).abs() > LEVEL_TOL || r < *lo as f64 || r > *hi as f64 {
                    None
                } else {
                    Some((r as i64 - lo) as usize)
                }
            }
            (VarKind::Ordinal { levels }, Value::Num(v)) => {
                levels.iter().position(|l| (l - v).abs() <= LEVEL_TOL * (1.0 + l.abs()))
            }
            (VarKind::Categorical { levels }, Value::Cat(i)) if i < levels.len() => Some(i),
            _ => None,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            VarKind::Continuous { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Space(format!("`{name}`: bounds must satisfy lo < hi")));
                }
            }
            VarKind::Integer { lo, hi } => {
                if lo >= hi {
                    return Err(Error::Space(format!("`{name}`: bounds must satisfy lo < hi")));
                }
            }
            VarKind::Ordinal { levels } => {
                if levels.is_empty() {
                    return Err(Error::Space(format!("`{name}`: empty level list")));
                }
                if levels.iter().any(|l| !l.is_finite()) || levels.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Space(format!(
                        "`{name}`: ordinal levels must be finite and strictly increasing"
                    )));
                }
            }
            VarKind::Categorical { levels } => {
                if levels.is_empty() {
                    return Err(Error::Space(format!("`{name}`: empty level list")));
                }
                if levels.len() < 2 {
                    return Err(Error::Space(format!("`{name}`: categorical needs at least 2 levels")));
                }
                let distinct: HashSet<&String> = levels.iter().collect();
                if distinct.len() != levels.len() {
                    return Err(Error::Space(format!("`{name}`: duplicate categorical level")));
                }
            }
        }
        Ok(())
    }
}

/// A single coordinate value. Categorical values are stored as level indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Num(f64),
    Cat(usize),
}

impl Value {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Value::Num(v) => v,
            Value::Cat(i) => i as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Role {
    Neutral,
    Meta,
    /// Active only while the parent (a meta variable) takes one of `active_when`.
    Decreed {
        parent: String,
        active_when: Vec<Value>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VarKind,
    pub role: Role,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, kind: VarKind, role: Role) -> Self {
        Self { name: name.into(), kind, role }
    }

    pub fn neutral(name: impl Into<String>, kind: VarKind) -> Self {
        Self::new(name, kind, Role::Neutral)
    }

    pub fn meta(name: impl Into<String>, kind: VarKind) -> Self {
        Self::new(name, kind, Role::Meta)
    }

    pub fn decreed(name: impl Into<String>, kind: VarKind, parent: impl Into<String>, active_when: Vec<Value>) -> Self {
        Self::new(name, kind, Role::Decreed { parent: parent.into(), active_when })
    }
}

/// Validated, immutable design space.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignSpace {
    vars: Vec<VariableSpec>,
    /// Resolved parent index and admissible parent level indices for decreed variables.
    decrees: Vec<Option<(usize, Vec<Value>)>>,
    /// Topological order: meta and neutral variables before decreed ones.
    order: Vec<usize>,
    offsets: Vec<usize>,
    encoded_dim: usize,
}

impl DesignSpace {
    pub fn new(specs: Vec<VariableSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Space("a design space needs at least one variable".into()));
        }
        let mut names = HashSet::new();
        for v in &specs {
            if !names.insert(v.name.as_str()) {
                return Err(Error::Space(format!("duplicate variable name `{}`", v.name)));
            }
            v.kind.validate(&v.name)?;
        }

        let mut decrees = Vec::with_capacity(specs.len());
        for v in &specs {
            match &v.role {
                Role::Meta => {
                    if matches!(v.kind, VarKind::Continuous { .. }) {
                        return Err(Error::Space(format!(
                            "meta variable `{}` must be integer, ordinal or categorical",
                            v.name
                        )));
                    }
                    decrees.push(None);
                }
                Role::Neutral => decrees.push(None),
                Role::Decreed { parent, active_when } => {
                    if parent == &v.name {
                        return Err(Error::Space(format!("decree cycle: `{}` is its own parent", v.name)));
                    }
                    let pidx = specs.iter().position(|s| &s.name == parent).ok_or_else(|| {
                        Error::Space(format!("decreed `{}` refers to missing parent `{parent}`", v.name))
                    })?;
                    let p = &specs[pidx];
                    match p.role {
                        Role::Meta => {}
                        Role::Decreed { .. } => {
                            return Err(Error::Space(format!(
                                "decree cycle or chain: parent `{parent}` of `{}` is itself decreed",
                                v.name
                            )))
                        }
                        Role::Neutral => {
                            return Err(Error::Space(format!(
                                "parent `{parent}` of `{}` is not a meta variable",
                                v.name
                            )))
                        }
                    }
                    if active_when.is_empty() {
                        return Err(Error::Space(format!("decreed `{}` has an empty activation set", v.name)));
                    }
                    let mut resolved = Vec::with_capacity(active_when.len());
                    for &a in active_when {
                        let idx = p.kind.level_index(a).ok_or_else(|| {
                            Error::Space(format!("activation value {a:?} of `{}` is not a level of `{parent}`", v.name))
                        })?;
                        resolved.push(p.kind.value_at(idx));
                    }
                    decrees.push(Some((pidx, resolved)));
                }
            }
        }

        let mut order: Vec<usize> = (0..specs.len()).filter(|&i| decrees[i].is_none()).collect();
        order.extend((0..specs.len()).filter(|&i| decrees[i].is_some()));

        let mut offsets = Vec::with_capacity(specs.len());
        let mut dim = 0;
        for v in &specs {
            offsets.push(dim);
            dim += v.kind.encoded_width();
        }

        Ok(Self { vars: specs, decrees, order, offsets, encoded_dim: dim })
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Length of the vector produced by [`DesignSpace::encode`].
    pub fn encoded_dim(&self) -> usize {
        self.encoded_dim
    }

    /// Offset of variable `i` in the encoded vector.
    pub fn encoded_offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn has_continuous(&self) -> bool {
        self.vars.iter().any(|v| matches!(v.kind, VarKind::Continuous { .. }))
    }

    fn check_value(&self, i: usize, value: Value) -> Result<()> {
        let var = &self.vars[i];
        let ok = match (&var.kind, value) {
            (VarKind::Continuous { lo, hi }, Value::Num(v)) => v >= *lo && v <= *hi,
            (VarKind::Categorical { .. }, Value::Cat(_)) => var.kind.level_index(value).is_some(),
            (VarKind::Categorical { .. }, Value::Num(_)) => false,
            (_, Value::Num(_)) => var.kind.level_index(value).is_some(),
            (_, Value::Cat(_)) => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfRange {
                name: var.name.clone(),
                detail: format!("{value:?} is not admissible for {:?}", var.kind),
            })
        }
    }

    /// Activity mask for a full assignment of values.
    pub fn decree_activity(&self, values: &[Value]) -> Result<Vec<bool>> {
        if values.len() != self.vars.len() {
            return Err(Error::Dimension { what: "design point values", expected: self.vars.len(), got: values.len() });
        }
        for (i, &v) in values.iter().enumerate() {
            self.check_value(i, v)?;
        }
        Ok(self.activity_unchecked(values))
    }

    fn activity_unchecked(&self, values: &[Value]) -> Vec<bool> {
        self.decrees
            .iter()
            .map(|d| match d {
                None => true,
                Some((pidx, when)) => {
                    let parent = &self.vars[*pidx].kind;
                    let pv = parent.level_index(values[*pidx]);
                    when.iter().any(|&w| parent.level_index(w) == pv)
                }
            })
            .collect()
    }

    /// Builds a canonical point: validates values, computes activity and
    /// rewrites inactive slots to their imputation value.
    pub fn point(&self, values: Vec<Value>) -> Result<DesignPoint> {
        let active = self.decree_activity(&values)?;
        Ok(self.canonical(values, active))
    }

    fn canonical(&self, mut values: Vec<Value>, active: Vec<bool>) -> DesignPoint {
        for (i, v) in values.iter_mut().enumerate() {
            if !active[i] {
                *v = self.vars[i].kind.first_value();
            } else if let (Some(idx), false) = (self.vars[i].kind.level_index(*v), self.vars[i].kind.is_categorical()) {
                // snap to the exact level value
                *v = self.vars[i].kind.value_at(idx);
            }
        }
        DesignPoint { values, active }
    }

    /// Maps a point to the kernel input: numeric variables are min-max scaled
    /// to [0, 1] (ordinal variables by level index), categorical variables
    /// become one-hot blocks.
    pub fn encode(&self, point: &DesignPoint) -> Vec<f64> {
        let mut out = vec![0.0; self.encoded_dim];
        for (i, var) in self.vars.iter().enumerate() {
            let o = self.offsets[i];
            let v = if point.active[i] { point.values[i] } else { var.kind.first_value() };
            match &var.kind {
                VarKind::Continuous { lo, hi } => out[o] = (v.as_f64() - lo) / (hi - lo),
                VarKind::Integer { lo, hi } => out[o] = (v.as_f64() - *lo as f64) / (hi - lo) as f64,
                VarKind::Ordinal { levels } => {
                    let idx = var.kind.level_index(v).unwrap_or(0);
                    out[o] = if levels.len() > 1 { idx as f64 / (levels.len() - 1) as f64 } else { 0.0 };
                }
                VarKind::Categorical { .. } => {
                    if let Value::Cat(c) = v {
                        out[o + c] = 1.0;
                    }
                }
            }
        }
        out
    }

    /// Seeded Latin-hypercube design of `n` points.
    ///
    /// Every variable gets its own random permutation of the `n` strata.
    /// Discrete variables are stratified on the level index and snapped to a
    /// level. Points may repeat when the space is small relative to `n`.
    pub fn sample_doe(&self, n: usize, seed: u64) -> Vec<DesignPoint> {
        if n == 0 {
            return Vec::new();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut columns: Vec<Vec<Value>> = Vec::with_capacity(self.vars.len());
        for var in &self.vars {
            let mut strata: Vec<usize> = (0..n).collect();
            strata.shuffle(&mut rng);
            let col = strata
                .into_iter()
                .map(|s| {
                    let u = (s as f64 + rng.random::<f64>()) / n as f64;
                    match &var.kind {
                        VarKind::Continuous { lo, hi } => Value::Num(lo + u * (hi - lo)),
                        kind => {
                            let card = kind.cardinality().unwrap_or(1);
                            let idx = ((u * card as f64).floor() as usize).min(card - 1);
                            kind.value_at(idx)
                        }
                    }
                })
                .collect();
            columns.push(col);
        }
        (0..n)
            .map(|r| {
                let values: Vec<Value> = columns.iter().map(|c| c[r]).collect();
                let active = self.activity_unchecked(&values);
                self.canonical(values, active)
            })
            .collect()
    }

    /// Independent uniform draws (no stratification), used for acquisition
    /// candidates when the space is too large to enumerate.
    pub fn sample_uniform(&self, n: usize, rng: &mut impl Rng) -> Vec<DesignPoint> {
        (0..n)
            .map(|_| {
                let values: Vec<Value> = self
                    .vars
                    .iter()
                    .map(|var| match &var.kind {
                        VarKind::Continuous { lo, hi } => Value::Num(rng.random_range(*lo..=*hi)),
                        kind => kind.value_at(rng.random_range(0..kind.cardinality().unwrap_or(1))),
                    })
                    .collect();
                let active = self.activity_unchecked(&values);
                self.canonical(values, active)
            })
            .collect()
    }

    /// Number of distinct canonical points, `None` if any variable is continuous.
    pub fn cardinality(&self) -> Option<u128> {
        if self.has_continuous() {
            return None;
        }
        let mut total: u128 = 0;
        self.for_each_meta_assignment(&mut |values| {
            let active = self.activity_unchecked(values);
            let count: u128 = self
                .vars
                .iter()
                .enumerate()
                .filter(|(i, v)| active[*i] && !matches!(v.role, Role::Meta))
                .map(|(_, v)| v.kind.cardinality().unwrap_or(1) as u128)
                .product();
            total += count;
        });
        Some(total)
    }

    fn for_each_meta_assignment(&self, f: &mut dyn FnMut(&[Value])) {
        let metas: Vec<usize> = (0..self.vars.len()).filter(|&i| matches!(self.vars[i].role, Role::Meta)).collect();
        let mut values: Vec<Value> = self.vars.iter().map(|v| v.kind.first_value()).collect();
        fn rec(space: &DesignSpace, metas: &[usize], k: usize, values: &mut Vec<Value>, f: &mut dyn FnMut(&[Value])) {
            if k == metas.len() {
                f(values);
                return;
            }
            let i = metas[k];
            let card = space.vars[i].kind.cardinality().unwrap_or(1);
            for idx in 0..card {
                values[i] = space.vars[i].kind.value_at(idx);
                rec(space, metas, k + 1, values, f);
            }
        }
        rec(self, &metas, 0, &mut values, f);
    }

    /// Every distinct canonical point, exactly once, capped at
    /// [`DEFAULT_ENUMERATION_CAP`].
    pub fn enumerate(&self) -> Result<Vec<DesignPoint>> {
        self.enumerate_capped(DEFAULT_ENUMERATION_CAP)
    }

    /// Enumerates the space in lexicographic order of level indices, walking
    /// meta and neutral variables before decreed ones. Decreed variables that
    /// are inactive contribute a single imputed value.
    pub fn enumerate_capped(&self, cap: usize) -> Result<Vec<DesignPoint>> {
        if self.has_continuous() {
            return Err(Error::Enumeration("space contains a continuous variable".into()));
        }
        let card = self.cardinality().unwrap_or(0);
        if card > cap as u128 {
            return Err(Error::Enumeration(format!("{card} points exceed the cap of {cap}")));
        }
        let mut out = Vec::with_capacity(card as usize);
        let mut values: Vec<Value> = self.vars.iter().map(|v| v.kind.first_value()).collect();
        self.enum_rec(0, &mut values, &mut out);
        Ok(out)
    }

    fn enum_rec(&self, k: usize, values: &mut Vec<Value>, out: &mut Vec<DesignPoint>) {
        if k == self.order.len() {
            let active = self.activity_unchecked(values);
            out.push(DesignPoint { values: values.clone(), active });
            return;
        }
        let i = self.order[k];
        let kind = &self.vars[i].kind;
        let active = match &self.decrees[i] {
            None => true,
            Some((pidx, when)) => {
                let pk = &self.vars[*pidx].kind;
                let pv = pk.level_index(values[*pidx]);
                when.iter().any(|&w| pk.level_index(w) == pv)
            }
        };
        if !active {
            values[i] = kind.first_value();
            self.enum_rec(k + 1, values, out);
            return;
        }
        for idx in 0..kind.cardinality().unwrap_or(1) {
            values[i] = kind.value_at(idx);
            self.enum_rec(k + 1, values, out);
        }
        values[i] = kind.first_value();
    }

    /// Renders a value with its categorical label where applicable.
    pub fn value_to_json(&self, i: usize, value: Value) -> serde_json::Value {
        match (&self.vars[i].kind, value) {
            (VarKind::Categorical { levels }, Value::Cat(c)) => serde_json::Value::String(levels[c].clone()),
            (VarKind::Integer { .. }, Value::Num(v)) => serde_json::Value::from(v as i64),
            (_, v) => serde_json::Value::from(v.as_f64()),
        }
    }

    /// Parses a value given as a JSON number or a categorical label.
    pub fn value_from_json(&self, i: usize, json: &serde_json::Value) -> Result<Value> {
        let var = &self.vars[i];
        match (&var.kind, json) {
            (VarKind::Categorical { levels }, serde_json::Value::String(s)) => levels
                .iter()
                .position(|l| l == s)
                .map(Value::Cat)
                .ok_or_else(|| Error::OutOfRange { name: var.name.clone(), detail: format!("unknown level `{s}`") }),
            (VarKind::Categorical { .. }, other) => Err(Error::OutOfRange {
                name: var.name.clone(),
                detail: format!("expected a level label, got {other}"),
            }),
            (_, serde_json::Value::Number(n)) => Ok(Value::Num(n.as_f64().unwrap_or(f64::NAN))),
            (_, other) => {
                Err(Error::OutOfRange { name: var.name.clone(), detail: format!("expected a number, got {other}") })
            }
        }
    }

    /// Renders a point as a `{name: value}` object in declaration order.
    pub fn point_to_json(&self, point: &DesignPoint) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        for (i, v) in self.vars.iter().enumerate() {
            m.insert(v.name.clone(), self.value_to_json(i, point.values[i]));
        }
        serde_json::Value::Object(m)
    }

    pub fn point_from_json(&self, json: &serde_json::Value) -> Result<DesignPoint> {
        let obj = json.as_object().ok_or_else(|| Error::Config("a design point must be a JSON object".into()))?;
        let mut values = Vec::with_capacity(self.vars.len());
        for (i, var) in self.vars.iter().enumerate() {
            match obj.get(&var.name) {
                Some(j) => values.push(self.value_from_json(i, j)?),
                None => values.push(var.kind.first_value()),
            }
        }
        self.point(values)
    }

    /// Short human-readable rendering, e.g. `N=3 N1=40 N2=25 N3=35 F=tanh`.
    pub fn describe(&self, point: &DesignPoint) -> String {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, v)| {
                if point.active[i] {
                    format!("{}={}", v.name, self.value_to_json(i, point.values[i]).to_string().trim_matches('"'))
                } else {
                    format!("{}=-", v.name)
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// A canonical point of a design space. Build through [`DesignSpace::point`],
/// [`DesignSpace::sample_doe`] or [`DesignSpace::enumerate`].
#[derive(Debug, Clone)]
pub struct DesignPoint {
    values: Vec<Value>,
    active: Vec<bool>,
}

impl DesignPoint {
    pub fn values(&self) -> &[Value] {
        &self.values
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn value(&self, i: usize) -> Value {
        self.values[i]
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.active[i]
    }

    /// Bit-exact key of the canonical values.
    pub(crate) fn key(&self) -> Vec<u64> {
        self.values
            .iter()
            .map(|v| match *v {
                Value::Num(x) => {
                    if x == 0.0 {
                        0
                    } else {
                        x.to_bits()
                    }
                }
                Value::Cat(c) => c as u64 ^ 0xC000_0000_0000_0000,
            })
            .collect()
    }
}

impl PartialEq for DesignPoint {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for DesignPoint {}

impl Hash for DesignPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state);
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(v) => write!(f, "{v}"),
            Value::Cat(c) => write!(f, "#{c}"),
        }
    }
}

/// Spaces for tuning the architecture of a 2- or 3-hidden-layer MLP.
pub mod presets {
    use super::*;

    pub const ACTIVATIONS: [&str; 3] = ["relu", "tanh", "sigmoid"];

    fn layered(width: VarKind, layers: VarKind) -> DesignSpace {
        DesignSpace::new(vec![
            VariableSpec::meta("N", layers),
            VariableSpec::neutral("N1", width.clone()),
            VariableSpec::neutral("N2", width.clone()),
            VariableSpec::decreed("N3", width, "N", vec![Value::Num(3.0)]),
            VariableSpec::neutral("F", VarKind::categorical(ACTIVATIONS)),
        ])
        .expect("preset space is valid")
    }

    /// Layer count 2..=3, widths on the grid {10, 15, ..., 80}, activation.
    pub fn mlp_grid_space() -> DesignSpace {
        layered(VarKind::ordinal_range(10.0, 80.0, 5.0), VarKind::Integer { lo: 2, hi: 3 })
    }

    /// Layer count 2..=3, integer widths in 5..=40, activation.
    pub fn mlp_integer_space() -> DesignSpace {
        layered(VarKind::Integer { lo: 5, hi: 40 }, VarKind::Integer { lo: 2, hi: 3 })
    }
}
