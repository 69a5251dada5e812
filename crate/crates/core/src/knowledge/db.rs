use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::rating::{validate_scale, BadgeScales, Category, Rating};
use crate::canonical::to_canonical_json;
use crate::checks::{CheckId, ComplexityClass};
use crate::error::{Error, Result};
use crate::inference::Backend;

pub const SCHEMA_VERSION: u32 = 1;

const BUNDLED_DB: &str = include_str!("../../data/knowledge_db.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Method,
    Loss,
    Optimizer,
    Inference,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 4] = [
        ComponentKind::Method,
        ComponentKind::Loss,
        ComponentKind::Optimizer,
        ComponentKind::Inference,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Method => "method",
            ComponentKind::Loss => "loss",
            ComponentKind::Optimizer => "optimizer",
            ComponentKind::Inference => "inference",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which measured size a complexity class refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeAxis {
    GridSide,
    EdgeCount,
}

impl SizeAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SizeAxis::GridSide => "grid_side",
            SizeAxis::EdgeCount => "edge_count",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectedComplexity {
    pub class: ComplexityClass,
    pub axis: SizeAxis,
}

/// Implementation behind an inference component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    JunctionTree,
    LoopyBp,
}

impl BackendKind {
    pub fn default_backend(self) -> Backend {
        match self {
            BackendKind::JunctionTree => Backend::jt(),
            BackendKind::LoopyBp => Backend::lbp(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Criterion {
    pub id: String,
    pub text: String,
    pub fulfilled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub id: String,
    pub kind: ComponentKind,
    pub name: String,
    pub description: String,
    pub ratings: BTreeMap<Category, Rating>,
    #[serde(default)]
    pub criteria: Vec<Criterion>,
    #[serde(default)]
    pub badges: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_runtime_class: Option<ExpectedComplexity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_memory_class: Option<ExpectedComplexity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendKind>,
    #[serde(default)]
    pub reliability_guarantees: Vec<CheckId>,
}

impl ComponentSpec {
    pub fn rating(&self, category: Category) -> Rating {
        self.ratings.get(&category).copied().unwrap_or(Rating::Neutral)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BadgeSpec {
    pub id: String,
    pub name: String,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinationRule {
    Infimum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeDb {
    pub schema_version: u32,
    pub components: Vec<ComponentSpec>,
    pub badges: Vec<BadgeSpec>,
    pub badge_scales: BadgeScales,
    pub combination_rule: CombinationRule,
}

/// One component id per slot, plus optional expert overrides that replace
/// the combined rating of a category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfiguration {
    pub method: String,
    pub loss: String,
    pub optimizer: String,
    pub inference: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<Category, Rating>,
}

impl MethodConfiguration {
    pub fn new(method: &str, loss: &str, optimizer: &str, inference: &str) -> Self {
        MethodConfiguration {
            method: method.into(),
            loss: loss.into(),
            optimizer: optimizer.into(),
            inference: inference.into(),
            overrides: BTreeMap::new(),
        }
    }

    pub fn slots(&self) -> [(ComponentKind, &str); 4] {
        [
            (ComponentKind::Method, self.method.as_str()),
            (ComponentKind::Loss, self.loss.as_str()),
            (ComponentKind::Optimizer, self.optimizer.as_str()),
            (ComponentKind::Inference, self.inference.as_str()),
        ]
    }

    /// Display name such as `mrf+likelihood+gd+jt`.
    pub fn label(&self) -> String {
        format!("{}+{}+{}+{}", self.method, self.loss, self.optimizer, self.inference)
    }
}

/// The four components of a configuration, in slot order.
#[derive(Debug, Clone, Copy)]
pub struct ResolvedConfiguration<'a> {
    pub method: &'a ComponentSpec,
    pub loss: &'a ComponentSpec,
    pub optimizer: &'a ComponentSpec,
    pub inference: &'a ComponentSpec,
}

impl<'a> ResolvedConfiguration<'a> {
    pub fn components(&self) -> [&'a ComponentSpec; 4] {
        [self.method, self.loss, self.optimizer, self.inference]
    }

    pub fn backend(&self) -> Backend {
        self.inference
            .backend
            .expect("validated inference components declare a backend")
            .default_backend()
    }
}

fn located(location: &str, e: impl fmt::Display) -> Error {
    Error::Schema(format!("{location}: {e}"))
}

fn field<'v>(obj: &'v serde_json::Map<String, Value>, key: &str) -> Result<&'v Value> {
    obj.get(key)
        .ok_or_else(|| Error::Schema(format!("missing top-level field '{key}'")))
}

impl KnowledgeDb {
    /// The database shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_DB).expect("bundled knowledge database is valid")
    }

    pub fn bundled_json() -> &'static str {
        BUNDLED_DB
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let root: Value = serde_json::from_str(text).map_err(|e| located("not valid JSON", e))?;
        let obj = root
            .as_object()
            .ok_or_else(|| Error::Schema("top level must be an object".into()))?;
        const KEYS: [&str; 5] = [
            "schema_version",
            "components",
            "badges",
            "badge_scales",
            "combination_rule",
        ];
        if let Some(k) = obj.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Schema(format!("unknown top-level field '{k}'")));
        }

        let schema_version: u32 =
            serde_json::from_value(field(obj, "schema_version")?.clone()).map_err(|e| located("schema_version", e))?;
        let components = field(obj, "components")?
            .as_array()
            .ok_or_else(|| Error::Schema("components must be an array".into()))?
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let id = v.get("id").and_then(Value::as_str).unwrap_or("?");
                serde_json::from_value(v.clone()).map_err(|e| located(&format!("components[{i}] (id '{id}')"), e))
            })
            .collect::<Result<Vec<ComponentSpec>>>()?;
        let badges = field(obj, "badges")?
            .as_array()
            .ok_or_else(|| Error::Schema("badges must be an array".into()))?
            .iter()
            .enumerate()
            .map(|(i, v)| serde_json::from_value(v.clone()).map_err(|e| located(&format!("badges[{i}]"), e)))
            .collect::<Result<Vec<BadgeSpec>>>()?;
        let badge_scales =
            serde_json::from_value(field(obj, "badge_scales")?.clone()).map_err(|e| located("badge_scales", e))?;
        let combination_rule = serde_json::from_value(field(obj, "combination_rule")?.clone())
            .map_err(|e| located("combination_rule", e))?;

        let db = KnowledgeDb {
            schema_version,
            components,
            badges,
            badge_scales,
            combination_rule,
        };
        db.validate()?;
        Ok(db)
    }

    /// Semantic checks beyond the JSON shape.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut badge_ids = BTreeSet::new();
        for (i, b) in self.badges.iter().enumerate() {
            if b.id.is_empty() {
                return Err(Error::Schema(format!("badges[{i}]: empty badge id")));
            }
            if !badge_ids.insert(b.id.as_str()) {
                return Err(Error::Schema(format!("badges[{i}]: duplicate badge id '{}'", b.id)));
            }
        }
        for (name, scale) in [
            ("runtime", &self.badge_scales.runtime),
            ("memory", &self.badge_scales.memory),
            ("energy", &self.badge_scales.energy),
        ] {
            validate_scale(scale).map_err(|e| located(&format!("badge_scales.{name}"), e))?;
        }

        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, c) in self.components.iter().enumerate() {
            let at = format!("components[{i}] (id '{}')", c.id);
            if c.id.is_empty() {
                return Err(Error::Schema(format!("components[{i}]: empty component id")));
            }
            if let Some(first) = seen.insert(c.id.as_str(), i) {
                return Err(Error::Schema(format!(
                    "{at}: duplicate component id, first defined at components[{first}]"
                )));
            }
            for cat in Category::ALL {
                if !c.ratings.contains_key(&cat) {
                    return Err(Error::Schema(format!("{at}: missing rating for category '{cat}'")));
                }
            }
            let inference = c.kind == ComponentKind::Inference;
            for (name, present) in [
                ("expected_runtime_class", c.expected_runtime_class.is_some()),
                ("expected_memory_class", c.expected_memory_class.is_some()),
                ("backend", c.backend.is_some()),
            ] {
                if present != inference {
                    let need = if inference { "requires" } else { "must not declare" };
                    return Err(Error::Schema(format!("{at}: a {} component {need} '{name}'", c.kind)));
                }
            }
            if let Some(b) = c.badges.iter().find(|b| !badge_ids.contains(b.as_str())) {
                return Err(Error::Schema(format!("{at}: unknown badge id '{b}'")));
            }
            if let Some(g) = c.reliability_guarantees.iter().find(|g| !g.is_reliability()) {
                return Err(Error::Schema(format!("{at}: '{g}' is not a reliability check")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        to_canonical_json(self)
    }

    pub fn component(&self, id: &str) -> Option<&ComponentSpec> {
        self.components.iter().find(|c| c.id == id)
    }

    pub fn badge(&self, id: &str) -> Option<&BadgeSpec> {
        self.badges.iter().find(|b| b.id == id)
    }

    /// Looks up every slot and checks that each component has the slot's kind.
    pub fn resolve(&self, configuration: &MethodConfiguration) -> Result<ResolvedConfiguration<'_>> {
        let mut found = Vec::with_capacity(4);
        for (kind, id) in configuration.slots() {
            let c = self
                .component(id)
                .ok_or_else(|| Error::Resolution(format!("no component with id '{id}' for the {kind} slot")))?;
            if c.kind != kind {
                return Err(Error::Resolution(format!(
                    "component '{id}' is a {} component but fills the {kind} slot",
                    c.kind
                )));
            }
            found.push(c);
        }
        Ok(ResolvedConfiguration {
            method: found[0],
            loss: found[1],
            optimizer: found[2],
            inference: found[3],
        })
    }
}

/// Reads and validates a database file.
pub fn load_knowledge_db(path: impl AsRef<Path>) -> Result<KnowledgeDb> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })?;
    KnowledgeDb::from_json(&text)
}

/// Per category, the infimum over the four components with Neutral as the
/// identity; an override on the configuration replaces the result.
pub fn combine_ratings(configuration: &MethodConfiguration, db: &KnowledgeDb) -> Result<BTreeMap<Category, Rating>> {
    let resolved = db.resolve(configuration)?;
    Ok(Category::ALL
        .into_iter()
        .map(|cat| {
            let combined = configuration
                .overrides
                .get(&cat)
                .copied()
                .unwrap_or_else(|| Rating::infimum(resolved.components().iter().map(|c| c.rating(cat))));
            (cat, combined)
        })
        .collect())
}

/// Union of the components' badges, deduplicated and sorted by id.
pub fn collect_badges(configuration: &MethodConfiguration, db: &KnowledgeDb) -> Result<Vec<String>> {
    let resolved = db.resolve(configuration)?;
    let mut ids = BTreeSet::new();
    for c in resolved.components() {
        for b in &c.badges {
            if db.badge(b).is_none() {
                return Err(Error::Schema(format!(
                    "component '{}' references unknown badge '{b}'",
                    c.id
                )));
            }
            ids.insert(b.clone());
        }
    }
    Ok(ids.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use Category::*;
    use Rating::*;

    fn ratings(values: [Rating; 5]) -> Vec<Rating> {
        values.to_vec()
    }

    fn combined(db: &KnowledgeDb, inference: &str) -> Vec<Rating> {
        let r = combine_ratings(&MethodConfiguration::new("mrf", "likelihood", "gd", inference), db).unwrap();
        Category::ALL.iter().map(|c| r[c]).collect()
    }

    #[test]
    fn bundled_db_reproduces_component_rows() {
        let db = KnowledgeDb::bundled();
        let row = |id: &str| -> Vec<Rating> {
            let c = db.component(id).unwrap();
            Category::ALL.iter().map(|&cat| c.rating(cat)).collect()
        };
        assert_eq!(row("mrf"), ratings([A, B, A, Neutral, B]));
        assert_eq!(row("likelihood"), ratings([Neutral, Neutral, A, Neutral, Neutral]));
        assert_eq!(row("gd"), ratings([Neutral, A, A, A, A]));
        assert_eq!(row("lbp"), ratings([Neutral, C, D, B, A]));
        assert_eq!(row("jt"), ratings([Neutral, A, A, D, D]));
        assert_eq!(db.components.len(), 5);
    }

    #[test]
    fn bundled_db_reproduces_combined_rows() {
        let db = KnowledgeDb::bundled();
        assert_eq!(combined(&db, "lbp"), ratings([A, C, D, B, B]));
        assert_eq!(combined(&db, "jt"), ratings([A, B, A, D, D]));
    }

    #[test]
    fn bundled_db_round_trips() {
        let db = KnowledgeDb::bundled();
        let text = db.to_json().unwrap();
        assert_eq!(KnowledgeDb::from_json(&text).unwrap(), db);
        assert_eq!(
            text,
            KnowledgeDb::bundled_json(),
            "bundled file is stored in canonical form"
        );
    }

    #[test]
    fn inference_metadata() {
        let db = KnowledgeDb::bundled();
        let jt = db.component("jt").unwrap();
        assert_eq!(jt.expected_runtime_class.unwrap().class, ComplexityClass::Exponential);
        assert_eq!(jt.expected_memory_class.unwrap().axis, SizeAxis::GridSide);
        let lbp = db.component("lbp").unwrap();
        assert_eq!(lbp.expected_runtime_class.unwrap().class, ComplexityClass::Linear);
        assert_eq!(lbp.expected_memory_class.unwrap().axis, SizeAxis::EdgeCount);
        assert_eq!(lbp.backend, Some(BackendKind::LoopyBp));
    }

    fn mutate(f: impl FnOnce(&mut Value)) -> Result<KnowledgeDb> {
        let mut v: Value = serde_json::from_str(KnowledgeDb::bundled_json()).unwrap();
        f(&mut v);
        KnowledgeDb::from_json(&v.to_string())
    }

    fn component_index(v: &Value, id: &str) -> usize {
        v["components"]
            .as_array()
            .unwrap()
            .iter()
            .position(|c| c["id"] == id)
            .unwrap()
    }

    #[test]
    fn missing_rating_names_component() {
        let err = mutate(|v| {
            let i = component_index(v, "jt");
            v["components"][i]["ratings"].as_object_mut().unwrap().remove("memory");
        })
        .unwrap_err()
        .to_string();
        assert!(err.contains("'jt'"), "{err}");
        assert!(err.contains("memory"), "{err}");
    }

    #[test]
    fn unknown_category_and_duplicates() {
        let err = mutate(|v| {
            v["components"][0]["ratings"]["speed"] = "A".into();
        })
        .unwrap_err()
        .to_string();
        assert!(err.contains("components[0]") && err.contains("speed"), "{err}");

        let err = mutate(|v| {
            let dup = v["components"][1].clone();
            v["components"].as_array_mut().unwrap().push(dup);
        })
        .unwrap_err()
        .to_string();
        assert!(err.contains("duplicate component id"), "{err}");

        let err = mutate(|v| {
            v["components"][0]["ratings"]["usability"] = "E".into();
        })
        .unwrap_err()
        .to_string();
        assert!(err.contains("components[0]"), "{err}");
    }

    #[test]
    fn structural_violations() {
        assert!(mutate(|v| v["schema_version"] = 2.into()).is_err());
        assert!(mutate(|v| v["combination_rule"] = "average".into()).is_err());
        assert!(mutate(|v| v["extra"] = 1.into()).is_err());
        assert!(mutate(|v| v["badge_scales"]["memory"] = serde_json::json!([1, 1, 2])).is_err());
        let err = mutate(|v| {
            let i = component_index(v, "gd");
            v["components"][i]["backend"] = "junction_tree".into();
        })
        .unwrap_err()
        .to_string();
        assert!(err.contains("'gd'") && err.contains("backend"), "{err}");
        let err = mutate(|v| {
            let i = component_index(v, "lbp");
            v["components"][i]
                .as_object_mut()
                .unwrap()
                .remove("expected_runtime_class");
        })
        .unwrap_err()
        .to_string();
        assert!(err.contains("'lbp'") && err.contains("expected_runtime_class"), "{err}");
        let err = mutate(|v| {
            v["components"][0]["badges"] = serde_json::json!(["nope"]);
        })
        .unwrap_err()
        .to_string();
        assert!(err.contains("nope"), "{err}");
    }

    #[test]
    fn empty_db_is_valid_but_unresolvable() {
        let db = mutate(|v| v["components"] = serde_json::json!([])).unwrap();
        let cfg = MethodConfiguration::new("mrf", "likelihood", "gd", "jt");
        assert!(matches!(combine_ratings(&cfg, &db), Err(Error::Resolution(_))));
        assert!(matches!(collect_badges(&cfg, &db), Err(Error::Resolution(_))));
    }

    #[test]
    fn resolution_errors() {
        let db = KnowledgeDb::bundled();
        let unknown = MethodConfiguration::new("mrf", "likelihood", "gd", "variational");
        assert!(matches!(db.resolve(&unknown), Err(Error::Resolution(_))));
        let wrong_slot = MethodConfiguration::new("mrf", "likelihood", "jt", "gd");
        let err = db.resolve(&wrong_slot).unwrap_err().to_string();
        assert!(err.contains("optimizer"), "{err}");
    }

    #[test]
    fn badges() {
        let db = KnowledgeDb::bundled();
        let cfg = MethodConfiguration::new("mrf", "likelihood", "gd", "jt");
        assert_eq!(
            collect_badges(&cfg, &db).unwrap(),
            vec!["uncertainty-measure".to_string()]
        );

        let mut shared = db.clone();
        for id in ["gd", "jt"] {
            let c = shared.components.iter_mut().find(|c| c.id == id).unwrap();
            c.badges = vec!["uncertainty-measure".into()];
        }
        assert_eq!(
            collect_badges(&cfg, &shared).unwrap(),
            vec!["uncertainty-measure".to_string()]
        );

        let mut none = db.clone();
        none.components.iter_mut().for_each(|c| c.badges.clear());
        assert!(collect_badges(&cfg, &none).unwrap().is_empty());

        let mut dangling = db.clone();
        dangling.components[0].badges.push("ghost".into());
        assert!(collect_badges(&cfg, &dangling).is_err());
    }

    #[test]
    fn all_neutral_category_is_neutral() {
        let db = KnowledgeDb::bundled();
        let r = combine_ratings(&MethodConfiguration::new("mrf", "likelihood", "gd", "jt"), &db).unwrap();
        assert_eq!(r[&Expressivity], A);
        let mut blank = db.clone();
        for c in blank.components.iter_mut() {
            c.ratings.insert(Runtime, Neutral);
        }
        let r = combine_ratings(&MethodConfiguration::new("mrf", "likelihood", "gd", "jt"), &blank).unwrap();
        assert_eq!(r[&Runtime], Neutral);
    }

    #[test]
    fn override_wins() {
        let db = KnowledgeDb::bundled();
        let mut cfg = MethodConfiguration::new("mrf", "likelihood", "gd", "lbp");
        cfg.overrides.insert(Reliability, C);
        let r = combine_ratings(&cfg, &db).unwrap();
        assert_eq!(r[&Reliability], C);
        assert_eq!(r[&Usability], C);
    }

    #[test]
    fn missing_file() {
        let err = load_knowledge_db("/nonexistent/db.json").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/db.json"));
    }
}
