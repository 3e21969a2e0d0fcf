//! Registry of named RDEs with their analytic oracles.
//!
//! Each entry is a [`CatalogEntry`] trait object registered under its id;
//! [`build_spec`] selects one at runtime and returns its [`Rde`] strategy.

mod basic;
mod brw;
mod discounted;
mod frozen;
mod matching;
mod meanfield;
pub mod oracles;

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::distance::Cdf;
use crate::error::{Error, Result};
use crate::law::{Law, Offspring};
use crate::pool::Sampler;
use crate::rde::Rde;
use crate::value::Value;

pub use crate::numeric::solve_root;
pub use basic::{cramer_root, quicksort_c, voter_map, RandomWalkMax};
pub use brw::{brw_spec_from, BrwSpec};
pub use frozen::{phi, FrozenNu, FrozenPerc, INF_EMBED, JOIN_TIMES};
pub use matching::{
    gw_matching_constant, matching_snapshot, regular_matching_b, regular_matching_limit,
    regular_matching_mc, theorem41_mc,
};
pub use meanfield::{matching_functional, tour_functional};

/// User-supplied parameters, `name -> textual value`.
pub type ParamMap = BTreeMap<String, String>;

/// Parse `k=v` strings into a [`ParamMap`].
pub fn parse_params<S: AsRef<str>>(kvs: &[S]) -> Result<ParamMap> {
    let mut m = ParamMap::new();
    for kv in kvs {
        let kv = kv.as_ref();
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("parameter `{kv}` is not k=v")))?;
        m.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(m)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ParamKind {
    Real {
        min: f64,
        max: f64,
        min_open: bool,
        max_open: bool,
    },
    Int {
        min: i64,
        max: i64,
    },
    Law,
    Offspring,
}

impl ParamKind {
    pub const fn real(min: f64, max: f64) -> ParamKind {
        ParamKind::Real {
            min,
            max,
            min_open: false,
            max_open: false,
        }
    }

    pub const fn open(min: f64, max: f64) -> ParamKind {
        ParamKind::Real {
            min,
            max,
            min_open: true,
            max_open: true,
        }
    }

    pub const fn positive() -> ParamKind {
        ParamKind::Real {
            min: 0.0,
            max: f64::INFINITY,
            min_open: true,
            max_open: true,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: &'static str,
    pub kind: ParamKind,
    pub doc: &'static str,
}

pub const fn param(
    name: &'static str,
    default: &'static str,
    kind: ParamKind,
    doc: &'static str,
) -> ParamSpec {
    ParamSpec {
        name,
        default,
        kind,
        doc,
    }
}

/// Validated parameters with defaults filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Params(pub ParamMap);

impl Params {
    pub fn resolve(id: &str, specs: &[ParamSpec], raw: &ParamMap) -> Result<Params> {
        if let Some(k) = raw
            .keys()
            .find(|k| !specs.iter().any(|s| s.name == k.as_str()))
        {
            return Err(Error::Config(format!(
                "entry `{id}` has no parameter `{k}`"
            )));
        }
        let mut out = ParamMap::new();
        for s in specs {
            let v = raw.get(s.name).map(String::as_str).unwrap_or(s.default);
            check_param(id, s, v)?;
            out.insert(s.name.to_string(), v.to_string());
        }
        Ok(Params(out))
    }

    fn raw(&self, name: &str) -> Result<&str> {
        self.0
            .get(name)
            .map(String::as_str)
            .ok_or_else(|| Error::Config(format!("missing parameter `{name}`")))
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        let s = self.raw(name)?;
        s.parse()
            .map_err(|_| Error::Config(format!("parameter `{name}` = `{s}` is not a number")))
    }

    pub fn usize(&self, name: &str) -> Result<usize> {
        Ok(self.f64(name)? as usize)
    }

    pub fn law(&self, name: &str) -> Result<Law> {
        self.raw(name)?.parse()
    }

    pub fn offspring(&self, name: &str) -> Result<Offspring> {
        self.raw(name)?.parse()
    }
}

fn check_param(id: &str, s: &ParamSpec, v: &str) -> Result<()> {
    let bad = |why: &str| {
        Error::Config(format!(
            "entry `{id}`: parameter `{}` = `{v}` {why}",
            s.name
        ))
    };
    match s.kind {
        ParamKind::Real {
            min,
            max,
            min_open,
            max_open,
        } => {
            let x: f64 = v.parse().map_err(|_| bad("is not a number"))?;
            let lo_ok = if min_open { x > min } else { x >= min };
            let hi_ok = if max_open { x < max } else { x <= max };
            if !(lo_ok && hi_ok) || x.is_nan() {
                return Err(bad("is out of range"));
            }
        }
        ParamKind::Int { min, max } => {
            let x: i64 = v.parse().map_err(|_| bad("is not an integer"))?;
            if x < min || x > max {
                return Err(bad("is out of range"));
            }
        }
        ParamKind::Law => {
            v.parse::<Law>()?;
        }
        ParamKind::Offspring => {
            v.parse::<Offspring>()?;
        }
    }
    Ok(())
}

/// A closed-form law usable both as a CDF oracle and as a sampler.
pub trait ClosedCdf: Cdf + Sampler {
    fn name(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    ClosedCdf,
    Constant,
    RootEquation,
    ReferenceSimulation,
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Oracle {
    ClosedCdf(Arc<dyn ClosedCdf>),
    Constant {
        name: String,
        value: f64,
    },
    RootEquation {
        name: String,
        f: ScalarFn,
        bracket: (f64, f64),
    },
    ReferenceSimulation {
        name: String,
        sampler: Arc<dyn Sampler>,
    },
}

impl Oracle {
    pub fn kind(&self) -> OracleKind {
        match self {
            Oracle::ClosedCdf(_) => OracleKind::ClosedCdf,
            Oracle::Constant { .. } => OracleKind::Constant,
            Oracle::RootEquation { .. } => OracleKind::RootEquation,
            Oracle::ReferenceSimulation { .. } => OracleKind::ReferenceSimulation,
        }
    }

    pub fn constant(name: &str, value: f64) -> Oracle {
        Oracle::Constant {
            name: name.to_string(),
            value,
        }
    }

    pub fn root(
        name: &str,
        bracket: (f64, f64),
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Oracle {
        Oracle::RootEquation {
            name: name.to_string(),
            f: Arc::new(f),
            bracket,
        }
    }

    /// Value of a constant or root-equation oracle.
    pub fn value(&self) -> Result<Option<f64>> {
        match self {
            Oracle::Constant { value, .. } => Ok(Some(*value)),
            Oracle::RootEquation { f, bracket, .. } => {
                solve_root(|x| f(x), bracket.0, bracket.1, 1e-13).map(Some)
            }
            _ => Ok(None),
        }
    }
}

/// A named, parameterized RDE.
pub trait CatalogEntry: Send + Sync {
    fn id(&self) -> &'static str;
    /// The recursion written out.
    fn anchor(&self) -> &'static str;
    fn params(&self) -> Vec<ParamSpec>;
    fn oracle_kind(&self) -> Option<OracleKind>;
    fn build(&self, p: &Params) -> Result<Arc<dyn Rde>>;
    fn oracles(&self, _p: &Params) -> Result<Vec<Oracle>> {
        Ok(Vec::new())
    }
    /// Default initial law for iteration.
    fn init(&self, _p: &Params) -> Result<Arc<dyn Sampler>> {
        Ok(Arc::new(crate::pool::Delta(Value::ZERO)))
    }
}

type BuildFn = fn(&Params) -> Result<Arc<dyn Rde>>;
type OraclesFn = fn(&Params) -> Result<Vec<Oracle>>;
type InitFn = fn(&Params) -> Result<Arc<dyn Sampler>>;

/// Table-driven entry.
pub struct Entry {
    pub id: &'static str,
    pub anchor: &'static str,
    pub params: Vec<ParamSpec>,
    pub kind: Option<OracleKind>,
    pub build: BuildFn,
    pub oracles: Option<OraclesFn>,
    pub init: Option<InitFn>,
}

impl CatalogEntry for Entry {
    fn id(&self) -> &'static str {
        self.id
    }
    fn anchor(&self) -> &'static str {
        self.anchor
    }
    fn params(&self) -> Vec<ParamSpec> {
        self.params.clone()
    }
    fn oracle_kind(&self) -> Option<OracleKind> {
        self.kind
    }
    fn build(&self, p: &Params) -> Result<Arc<dyn Rde>> {
        (self.build)(p)
    }
    fn oracles(&self, p: &Params) -> Result<Vec<Oracle>> {
        self.oracles.map_or(Ok(Vec::new()), |f| f(p))
    }
    fn init(&self, p: &Params) -> Result<Arc<dyn Sampler>> {
        match self.init {
            Some(f) => f(p),
            None => Ok(Arc::new(crate::pool::Delta(Value::ZERO))),
        }
    }
}

pub struct Registry {
    entries: BTreeMap<&'static str, Box<dyn CatalogEntry>>,
}

impl Registry {
    pub fn empty() -> Registry {
        Registry {
            entries: BTreeMap::new(),
        }
    }

    pub fn standard() -> Registry {
        let mut r = Registry::empty();
        for e in basic::entries()
            .into_iter()
            .chain(brw::entries())
            .chain(discounted::entries())
            .chain(matching::entries())
            .chain(meanfield::entries())
            .chain(frozen::entries())
        {
            r.register(e);
        }
        r
    }

    pub fn register(&mut self, e: Box<dyn CatalogEntry>) {
        self.entries.insert(e.id(), e);
    }

    pub fn get(&self, id: &str) -> Result<&dyn CatalogEntry> {
        self.entries
            .get(id)
            .map(|b| b.as_ref())
            .ok_or_else(|| Error::UnknownEntry(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &dyn CatalogEntry> {
        self.entries.values().map(|b| b.as_ref())
    }

    pub fn resolve(&self, id: &str, raw: &ParamMap) -> Result<(&dyn CatalogEntry, Params)> {
        let e = self.get(id)?;
        let p = Params::resolve(id, &e.params(), raw)?;
        Ok((e, p))
    }

    /// Machine-readable dump of the registry.
    pub fn listing(&self) -> Vec<ListItem> {
        self.iter()
            .map(|e| {
                let state = Params::resolve(e.id(), &e.params(), &ParamMap::new())
                    .ok()
                    .and_then(|p| e.build(&p).ok())
                    .map(|s| s.state().describe())
                    .unwrap_or_default();
                ListItem {
                    id: e.id(),
                    params: e.params(),
                    state_space: state,
                    anchor: e.anchor(),
                    oracle_kind: e.oracle_kind(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ListItem {
    pub id: &'static str,
    pub params: Vec<ParamSpec>,
    pub state_space: String,
    pub anchor: &'static str,
    pub oracle_kind: Option<OracleKind>,
}

/// The shared standard registry.
pub fn registry() -> &'static Registry {
    static REG: OnceLock<Registry> = OnceLock::new();
    REG.get_or_init(Registry::standard)
}

pub fn build_spec(id: &str, raw: &ParamMap) -> Result<Arc<dyn Rde>> {
    let (e, p) = registry().resolve(id, raw)?;
    e.build(&p)
}

pub fn oracles(id: &str, raw: &ParamMap) -> Result<Vec<Oracle>> {
    let (e, p) = registry().resolve(id, raw)?;
    e.oracles(&p)
}

pub fn init_sampler(id: &str, raw: &ParamMap) -> Result<Arc<dyn Sampler>> {
    let (e, p) = registry().resolve(id, raw)?;
    e.init(&p)
}

pub fn closed_cdf(id: &str, raw: &ParamMap) -> Result<Arc<dyn ClosedCdf>> {
    oracles(id, raw)?
        .into_iter()
        .find_map(|o| match o {
            Oracle::ClosedCdf(c) => Some(c),
            _ => None,
        })
        .ok_or_else(|| Error::NoOracle(id.to_string(), "closed_cdf"))
}

/// Closed-form CDF at `x`; at `+∞` this is the mass of the `∞` atom.
pub fn oracle_cdf(id: &str, raw: &ParamMap, x: Value) -> Result<f64> {
    let c = closed_cdf(id, raw)?;
    match x {
        Value::Inf => Ok(c.inf_mass()),
        Value::Real(v) => Ok(c.cdf(v)),
        _ => Err(Error::VectorPool),
    }
}

/// First constant or root-equation oracle of the entry, evaluated.
pub fn oracle_constant(id: &str, raw: &ParamMap) -> Result<f64> {
    for o in oracles(id, raw)? {
        if let Some(v) = o.value()? {
            return Ok(v);
        }
    }
    Err(Error::NoOracle(id.to_string(), "constant"))
}

/// Named constant oracle of the entry.
pub fn oracle_named(id: &str, raw: &ParamMap, name: &str) -> Result<f64> {
    for o in oracles(id, raw)? {
        let n = match &o {
            Oracle::Constant { name, .. } | Oracle::RootEquation { name, .. } => name.as_str(),
            _ => continue,
        };
        if n == name {
            if let Some(v) = o.value()? {
                return Ok(v);
            }
        }
    }
    Err(Error::NoOracle(id.to_string(), "named constant"))
}
