//! Fixtures shared by the benchmarks.

use std::path::{Path, PathBuf};

use mucsp_core::csp::ConstraintHypergraph;
use mucsp_core::harness::{read_json, GraphJson, InstanceJson, PseudoDistJson};
use mucsp_core::pseudodist::LocalDistributionFamily;
use mucsp_core::reduction::{ManualParams, ReductionParams, SseGraph};
use mucsp_core::Result;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// The shipped 4-cycle instance, its family, planted graph and manual parameters.
pub struct Fixture {
    pub instance: ConstraintHypergraph,
    pub family: LocalDistributionFamily,
    pub graph: SseGraph,
    pub params: ReductionParams,
}

pub fn fixture() -> Result<Fixture> {
    let dir = data_dir();
    let instance = read_json::<InstanceJson>(&dir.join("c4_cut.instance.json"))?.to_instance()?;
    let family = read_json::<PseudoDistJson>(&dir.join("c4_cut.pd.json"))?.to_family(&instance)?;
    let graph = read_json::<GraphJson>(&dir.join("planted32.graph.json"))?.to_graph()?;
    let manual: ManualParams = read_json(&dir.join("c4_cut.params.json"))?;
    let params = ReductionParams::manual(&manual)?;
    Ok(Fixture { instance, family, graph, params })
}
