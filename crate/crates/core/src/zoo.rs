//! Constructors for the k-sets, biclusters, constant block model and stars families.

use std::sync::Arc;

use crate::cbm::{CbmFamily, CbmParams};
use crate::error::{invalid, Result};
use crate::family::{Family, Structure};
use crate::graph::Graph;

/// `mu * 1_S` for every k-subset `S` of `[d]`, in colexicographic order.
pub fn make_ksets(d: usize, k: usize, mu: f64) -> Result<Family> {
    check_subset_size(d, k)?;
    Family::structured(Structure::KSets { d, k }, mu)
}

/// `mu * vec(1_R 1_C^T)` for all pairs of k-subsets, row set major.
pub fn make_biclusters(d: usize, k: usize, mu: f64) -> Result<Family> {
    check_subset_size(d, k)?;
    Family::structured(Structure::Biclusters { d, k }, mu)
}

/// One hypothesis per balanced hierarchy; enumerates all of them.
pub fn make_cbm(params: CbmParams, mu: f64) -> Result<Family> {
    let params = CbmParams::new(params.n, params.m)?;
    Family::structured(Structure::Cbm(CbmFamily::enumerate(params)?), mu)
}

/// The star of every vertex: `mu` times the indicator of its incident edges.
pub fn make_stars(g: &Graph, mu: f64) -> Result<Family> {
    if g.vertex_count() == 0 || g.edge_count() == 0 {
        return Err(invalid("stars need a graph with at least one edge"));
    }
    if let Some(v) = (0..g.vertex_count()).find(|&v| g.degree(v) == 0) {
        return Err(invalid(format!("vertex {v} is isolated; its star would be the zero vector")));
    }
    Family::structured(Structure::Stars(Arc::new(g.clone())), mu)
}

fn check_subset_size(d: usize, k: usize) -> Result<()> {
    if k == 0 || k >= d {
        return Err(invalid(format!("subset size k = {k} must satisfy 1 <= k < d = {d}")));
    }
    Ok(())
}
