//! Bundled demo instrument, course pack and rulebook.

use crate::content::{ContentError, CoursePack};
use crate::expert::{ExpertError, Rulebook};
use crate::profiler::{Instrument, ProfilerError};

pub const DEMO_INSTRUMENT: &str = include_str!("../../../instruments/demo-lsp.json");
pub const DEMO_PACK: &str = include_str!("../../../packs/demo-computing.json");
pub const DEFAULT_RULES: &str = include_str!("../../../rules/default.json");

pub fn demo_instrument() -> Result<Instrument, ProfilerError> {
    Instrument::from_json(DEMO_INSTRUMENT)
}

pub fn demo_pack() -> Result<CoursePack, ContentError> {
    CoursePack::from_json(DEMO_PACK)
}

pub fn default_rules() -> Result<Rulebook, ExpertError> {
    Rulebook::from_json(DEFAULT_RULES)
}
