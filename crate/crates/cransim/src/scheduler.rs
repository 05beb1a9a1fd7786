//! Round-robin multi-user scheduling.
//!
//! Each TTI the pool draws a fresh random permutation of the RRH's attached
//! UEs and fills RB groups of `K*N` entries by walking the permutation
//! cyclically, so every attached UE is scheduled on either `floor` or `ceil`
//! of its fair share of RBs. Cells with fewer than `K*N` attached UEs wrap
//! the permutation and may repeat a UE within one RB group; the PHY layer
//! keeps repeated entries out of the same NOMA cluster.

use rand::seq::SliceRandom;
use rand::Rng;

/// Per-RB scheduled UE groups for one RRH and one TTI.
#[derive(Debug, Clone)]
pub struct RbGrid {
    pub groups: Vec<Vec<usize>>,
}

impl RbGrid {
    pub fn empty(num_rbs: usize) -> Self {
        RbGrid { groups: vec![Vec::new(); num_rbs] }
    }
}

/// Cyclic round-robin schedule over a fresh permutation of `attached`.
pub fn round_robin_schedule<R: Rng>(
    attached: &[usize],
    num_rbs: usize,
    group_size: usize,
    rng: &mut R,
) -> RbGrid {
    if attached.is_empty() {
        return RbGrid::empty(num_rbs);
    }
    let mut perm: Vec<usize> = attached.to_vec();
    perm.shuffle(rng);

    let mut groups = Vec::with_capacity(num_rbs);
    let mut cursor = 0usize;
    for _ in 0..num_rbs {
        let mut group = Vec::with_capacity(group_size);
        for _ in 0..group_size {
            group.push(perm[cursor % perm.len()]);
            cursor += 1;
        }
        groups.push(group);
    }
    RbGrid { groups }
}
