//! Expert knowledge database: component ratings, criteria, badges and the
//! pessimistic rating combination.

mod db;
mod rating;

pub use db::{
    collect_badges, combine_ratings, load_knowledge_db, BackendKind, BadgeSpec, CombinationRule, ComponentKind,
    ComponentSpec, Criterion, ExpectedComplexity, KnowledgeDb, MethodConfiguration, ResolvedConfiguration, SizeAxis,
    SCHEMA_VERSION,
};
pub use rating::{measurement_badge, BadgeScales, Category, Rating};
