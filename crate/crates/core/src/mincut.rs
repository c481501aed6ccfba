//! Exact MAP labelling of a [`CrfInstance`] through an s-t minimum cut.
//!
//! Source side means label 0, sink side label 1. After subtracting
//! `min(eps_i(0), eps_i(1))` from each unary pair, segment `i` gets a
//! source arc carrying `eps_i(1) - min` (paid when it ends on the sink side)
//! and a sink arc carrying `eps_i(0) - min`. Every pair term becomes a
//! symmetric arc pair of capacity `beta * mu`. A cut then costs exactly the
//! labelling's energy minus the unary floor.

use alloc::vec::Vec;

use crate::energy::CrfInstance;
use crate::error::{Error, Result};
use crate::maxflow::FlowNetwork;

/// Largest instance the exhaustive oracle accepts.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// A labelling with its energy and, for cut-based results, the flow value.
#[derive(Debug, Clone, PartialEq)]
pub struct CutLabeling {
    pub labels: Vec<bool>,
    /// `total_energy` of `labels`, recomputed from the instance.
    pub energy: f64,
    /// Max-flow value; `energy - unary_floor` for cut results.
    pub flow_value: f64,
}

impl CutLabeling {
    pub fn count_on(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

/// Builds the s-t network for a submodular instance.
///
/// Nodes `0..M` are segments, `M` is the source and `M + 1` the sink.
pub fn build_network(instance: &CrfInstance) -> Result<FlowNetwork> {
    instance.submodularity_check()?;
    let m = instance.len();
    let (source, sink) = (m, m + 1);
    let mut net = FlowNetwork::new(m + 2, source, sink);
    for (i, &[e0, e1]) in instance.unary().iter().enumerate() {
        let floor = e0.min(e1);
        if e1 > floor {
            net.add_arc_pair(source, i, e1 - floor, 0.0)?;
        }
        if e0 > floor {
            net.add_arc_pair(i, sink, e0 - floor, 0.0)?;
        }
    }
    for p in instance.pairs() {
        if p.cost > 0.0 {
            net.add_arc_pair(p.i, p.j, p.cost, p.cost)?;
        }
    }
    Ok(net)
}

/// Globally minimal-energy labelling.
pub fn map_inference(instance: &CrfInstance) -> Result<CutLabeling> {
    let net = build_network(instance)?;
    let flow = net.max_flow();
    let labels: Vec<bool> = flow.source_side[..instance.len()].iter().map(|&s| !s).collect();
    let energy = instance.total_energy(&labels)?;
    Ok(CutLabeling {
        labels,
        energy,
        flow_value: flow.value,
    })
}

/// Exhaustive minimum over all `2^M` labellings; ties resolve to the
/// lexicographically smallest labelling (label 0 before 1, segment 0 first).
pub fn brute_force_map(instance: &CrfInstance) -> Result<CutLabeling> {
    let m = instance.len();
    if m > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManySegments {
            max: BRUTE_FORCE_LIMIT,
            got: m,
        });
    }
    let mut labels = alloc::vec![false; m];
    let mut best: Option<(f64, Vec<bool>)> = None;
    // Segment 0 is the most significant bit, so counting order is lexicographic.
    for mask in 0u32..(1u32 << m) {
        for (i, l) in labels.iter_mut().enumerate() {
            *l = mask >> (m - 1 - i) & 1 == 1;
        }
        let e = instance.total_energy(&labels)?;
        if best.as_ref().map_or(true, |(be, _)| e < *be) {
            best = Some((e, labels.clone()));
        }
    }
    let (energy, labels) = best.expect("at least one labelling");
    Ok(CutLabeling {
        flow_value: energy - instance.unary_floor(),
        labels,
        energy,
    })
}
