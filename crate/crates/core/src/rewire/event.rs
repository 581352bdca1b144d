use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewireOp {
    Birth,
    Kill,
    Prune,
    MigrateUnit,
    MigrateFilter,
    AddLayer,
    RemoveLayer,
}

impl RewireOp {
    pub const ALL: [RewireOp; 7] = [
        RewireOp::Birth,
        RewireOp::Kill,
        RewireOp::Prune,
        RewireOp::MigrateUnit,
        RewireOp::MigrateFilter,
        RewireOp::AddLayer,
        RewireOp::RemoveLayer,
    ];
}

/// Record of one within-individual operation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewireEvent {
    pub op: RewireOp,
    /// Layer indices involved, source first.
    pub layers: Vec<usize>,
    /// Unit or filter indices involved (source index, then landing index).
    pub units: Vec<usize>,
    /// Synapses pruned, or units moved/born/killed.
    pub count: usize,
    pub params_before: usize,
    pub params_after: usize,
    pub generation: u64,
}

impl RewireEvent {
    pub(crate) fn new(
        op: RewireOp,
        layers: Vec<usize>,
        units: Vec<usize>,
        count: usize,
        before: usize,
        after: usize,
    ) -> Self {
        RewireEvent {
            op,
            layers,
            units,
            count,
            params_before: before,
            params_after: after,
            generation: 0,
        }
    }

    pub fn with_generation(mut self, generation: u64) -> Self {
        self.generation = generation;
        self
    }

    pub fn param_delta(&self) -> i64 {
        self.params_after as i64 - self.params_before as i64
    }
}
