//! Benchmark registry and harness.

mod harness;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::discovery::{normalize_identity, InferConfig, Property};
use crate::error::{Error, Result};
use crate::expr::{parse_relation, ClosedForm, Expr};
use crate::sampling::{taylor_program, Interval, Oracle};

pub use harness::{run_bench, BenchConfig, BenchReport, BenchRow};
pub use report::{emit_report, ReportFormat};

const REGISTRY_TOML: &str = include_str!("../../data/registry.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "basic")]
    Basic,
    #[serde(rename = "exp/log")]
    ExpLog,
    #[serde(rename = "trig")]
    Trig,
    #[serde(rename = "hyperbolic")]
    Hyperbolic,
    #[serde(rename = "inverse-trig")]
    InverseTrig,
    #[serde(rename = "ml-activation")]
    MlActivation,
    #[serde(rename = "loss")]
    Loss,
    #[serde(rename = "special")]
    Special,
    #[serde(rename = "discrete")]
    Discrete,
    #[serde(rename = "rational/möbius")]
    RationalMobius,
}

impl Category {
    pub const ALL: [Category; 10] = [
        Category::Basic,
        Category::ExpLog,
        Category::Trig,
        Category::Hyperbolic,
        Category::InverseTrig,
        Category::MlActivation,
        Category::Loss,
        Category::Special,
        Category::Discrete,
        Category::RationalMobius,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::Basic => "basic",
            Category::ExpLog => "exp/log",
            Category::Trig => "trig",
            Category::Hyperbolic => "hyperbolic",
            Category::InverseTrig => "inverse-trig",
            Category::MlActivation => "ml-activation",
            Category::Loss => "loss",
            Category::Special => "special",
            Category::Discrete => "discrete",
            Category::RationalMobius => "rational/möbius",
        }
    }

    pub fn default_degree(self) -> u32 {
        match self {
            Category::Trig | Category::Hyperbolic | Category::ExpLog => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_lowercase();
        let alias = match key.as_str() {
            "rational/mobius" | "rational" | "mobius" => "rational/möbius",
            "exp" | "log" | "explog" => "exp/log",
            other => other,
        };
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.name() == alias)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown category `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxProgram {
    pub series: String,
    pub terms: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruth {
    /// Normalized residual form.
    pub identity: Expr,
    pub text: String,
    pub source: String,
}

#[derive(Clone, Debug)]
pub struct BenchmarkEntry {
    pub name: String,
    pub closed_form: ClosedForm,
    pub closed_form_text: String,
    pub arity: usize,
    pub domain: Vec<Interval>,
    pub category: Category,
    pub degree_setting: u32,
    pub box_override: Option<Interval>,
    pub approx_program: Option<ApproxProgram>,
    pub ground_truth: Vec<GroundTruth>,
    pub note: Option<String>,
}

impl BenchmarkEntry {
    pub fn oracle(&self) -> Oracle {
        Oracle::from_closed_form(&self.name, self.closed_form.clone(), self.domain.clone())
    }

    pub fn approx_oracle(&self) -> Option<Result<Oracle>> {
        self.approx_program.as_ref().map(|a| taylor_program(&a.series, a.terms))
    }

    /// Apply the entry's degree and box to a base configuration.
    pub fn infer_config(&self, base: &InferConfig) -> InferConfig {
        InferConfig {
            max_degree: self.degree_setting,
            sample_box: self.box_override.unwrap_or(base.sample_box),
            ..base.clone()
        }
    }
}

#[derive(Deserialize)]
struct RawRegistry {
    function: Vec<RawEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    name: String,
    closed_form: String,
    #[serde(default)]
    params: Option<Vec<String>>,
    #[serde(default)]
    domain: Option<Vec<Interval>>,
    category: Category,
    #[serde(default)]
    degree: Option<u32>,
    #[serde(default, rename = "box")]
    box_override: Option<Interval>,
    #[serde(default)]
    approx: Option<ApproxProgram>,
    #[serde(default)]
    note: Option<String>,
    #[serde(default)]
    ground_truth: Vec<RawTruth>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruth {
    identity: String,
    source: String,
}

/// Parse a registry file.
pub fn registry_from_str(text: &str) -> Result<Vec<BenchmarkEntry>> {
    let raw: RawRegistry = toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("registry: {e}")))?;
    let mut out: Vec<BenchmarkEntry> = Vec::with_capacity(raw.function.len());
    for r in raw.function {
        if out.iter().any(|e| e.name == r.name) {
            return Err(Error::InvalidConfig(format!("registry: duplicate entry `{}`", r.name)));
        }
        let params = r.params.unwrap_or_else(|| vec!["t".to_string()]);
        let refs: Vec<&str> = params.iter().map(String::as_str).collect();
        let closed_form = ClosedForm::parse(&refs, &r.closed_form)?;
        let arity = params.len();
        let domain = r.domain.unwrap_or_else(|| vec![Interval::REAL; arity]);
        if domain.len() != arity {
            return Err(Error::InvalidConfig(format!(
                "registry: `{}` has {} domain interval(s) for {arity} argument(s)",
                r.name,
                domain.len()
            )));
        }
        let ground_truth = r
            .ground_truth
            .into_iter()
            .map(|g| {
                let identity = normalize_identity(&parse_relation(&g.identity)?.residual()?)?;
                Ok(GroundTruth { identity, text: g.identity, source: g.source })
            })
            .collect::<Result<_>>()?;
        out.push(BenchmarkEntry {
            name: r.name,
            closed_form,
            closed_form_text: r.closed_form,
            arity,
            domain,
            degree_setting: r.degree.unwrap_or(r.category.default_degree()),
            category: r.category,
            box_override: r.box_override,
            approx_program: r.approx,
            ground_truth,
            note: r.note,
        });
    }
    Ok(out)
}

/// The built-in registry.
pub fn registry() -> Vec<BenchmarkEntry> {
    registry_from_str(REGISTRY_TOML).expect("built-in registry is valid")
}

pub fn lookup(name: &str) -> Result<BenchmarkEntry> {
    registry()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::UnknownFunction(name.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Selection {
    All,
    Names(Vec<String>),
    Category(Category),
}

impl Selection {
    /// `category=<name>` or `name=<a>,<b>`.
    pub fn parse_filter(text: &str) -> Result<Self> {
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("filter `{text}` is not key=value")))?;
        match key.trim() {
            "category" => Ok(Selection::Category(value.parse()?)),
            "name" => Ok(Selection::Names(value.split(',').map(|s| s.trim().to_string()).collect())),
            other => Err(Error::InvalidConfig(format!("unknown filter key `{other}`"))),
        }
    }
}

/// Entries matching a selection, in registry order.
pub fn select(entries: &[BenchmarkEntry], selection: &Selection) -> Result<Vec<BenchmarkEntry>> {
    let picked: Vec<BenchmarkEntry> = match selection {
        Selection::All => entries.to_vec(),
        Selection::Category(c) => entries.iter().filter(|e| e.category == *c).cloned().collect(),
        Selection::Names(names) => {
            if let Some(bad) = names.iter().find(|n| !entries.iter().any(|e| &e.name == *n)) {
                return Err(Error::UnknownFunction(bad.clone()));
            }
            entries.iter().filter(|e| names.contains(&e.name)).cloned().collect()
        }
    };
    if picked.is_empty() {
        return Err(Error::InvalidConfig("selection is empty".into()));
    }
    Ok(picked)
}

/// Ground-truth identities whose normalized form equals a discovered one.
pub fn ground_truth_check<'a>(entry: &'a BenchmarkEntry, discovered: &[Property]) -> Vec<&'a GroundTruth> {
    entry
        .ground_truth
        .iter()
        .filter(|g| discovered.iter().any(|p| p.identity == g.identity))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discovery::property_from_text;

    #[test]
    fn registry_has_eighty_unique_entries() {
        let r = registry();
        assert_eq!(r.len(), 80);
        assert_eq!(r[0].name, "linear");
        assert_eq!(r[79].name, "fourth");
        let mean = r.iter().find(|e| e.name == "mean").unwrap();
        assert_eq!(mean.arity, 2);
    }

    #[test]
    fn degree_follows_category() {
        for e in registry() {
            if matches!(e.name.as_str(), "sigmoid" | "logistic" | "logistic_scaled") {
                assert_eq!(e.degree_setting, 3);
            } else {
                assert_eq!(e.degree_setting, e.category.default_degree(), "{}", e.name);
            }
        }
    }

    #[test]
    fn closed_forms_evaluate_inside_domains() {
        for e in registry() {
            let o = e.oracle();
            let args: Vec<f64> = e
                .domain
                .iter()
                .map(|d| match (d.lo.is_finite(), d.hi.is_finite()) {
                    (true, true) => 0.3 * d.lo + 0.7 * d.hi,
                    (true, false) => d.lo + 1.3,
                    (false, true) => d.hi - 1.3,
                    (false, false) => 0.7,
                })
                .collect();
            assert!(o.call(&args).is_ok(), "{} at {args:?}", e.name);
        }
    }

    #[test]
    fn filters() {
        let r = registry();
        let trig = select(&r, &Selection::parse_filter("category=trig").unwrap()).unwrap();
        assert!(trig.iter().all(|e| e.category == Category::Trig));
        assert!(trig.iter().any(|e| e.name == "tan"));
        assert!(select(&r, &Selection::Names(vec!["nope".into()])).is_err());
        assert!(Selection::parse_filter("colour=red").is_err());
        assert_eq!("rational/mobius".parse::<Category>().unwrap(), Category::RationalMobius);
    }

    #[test]
    fn ground_truth_matching() {
        let exp = lookup("exp").unwrap();
        let found = property_from_text(0, "f(x)*f(r) - f(r + x)").unwrap();
        assert_eq!(ground_truth_check(&exp, &[found]).len(), 1);
        let arcsin = lookup("arcsin").unwrap();
        assert!(arcsin.ground_truth.is_empty());
    }
}
