//! Resource limits shared by every exhaustive procedure.

use crate::system::DEFAULT_ACTION_CAP;

/// Default bound on explicitly materialized configurations.
pub const DEFAULT_STATE_CAP: u128 = 1 << 22;
/// Default bound on depth-first expansions.
pub const DEFAULT_DFS_BUDGET: u64 = 1 << 16;

/// Limits on action enumeration, state materialization and DFS expansions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    pub actions: u128,
    pub states: u128,
    pub dfs_budget: u64,
}

impl Default for Caps {
    fn default() -> Caps {
        Caps {
            actions: DEFAULT_ACTION_CAP,
            states: DEFAULT_STATE_CAP,
            dfs_budget: DEFAULT_DFS_BUDGET,
        }
    }
}
