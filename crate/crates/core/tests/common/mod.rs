//! Brute-force reference computations shared by the integration tests.
#![allow(dead_code)]

use snm::{Family, Graph};

pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn weighted_sq_dist(a: &[f64], b: &[f64], w: &[f64]) -> f64 {
    a.iter().zip(b).zip(w).map(|((x, y), c)| c * (x - y) * (x - y)).sum()
}

/// `W_j` for every `j` by the direct double loop.
pub fn brute_w(vs: &[Vec<f64>], alpha: f64, w: Option<&[f64]>) -> Vec<f64> {
    (0..vs.len())
        .map(|j| {
            (0..vs.len())
                .filter(|&k| k != j)
                .map(|k| {
                    let d = match w {
                        Some(w) => weighted_sq_dist(&vs[j], &vs[k], w),
                        None => sq_dist(&vs[j], &vs[k]),
                    };
                    (-d / alpha).exp()
                })
                .sum()
        })
        .collect()
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// All k-subsets of 0..n, in any order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

pub fn ksets_vectors(d: usize, k: usize, mu: f64) -> Vec<Vec<f64>> {
    subsets(d, k)
        .into_iter()
        .map(|s| {
            let mut v = vec![0.0; d];
            s.iter().for_each(|&i| v[i] = mu);
            v
        })
        .collect()
}

pub fn bicluster_vectors(d: usize, k: usize, mu: f64) -> Vec<Vec<f64>> {
    let sets = subsets(d, k);
    let mut out = Vec::new();
    for r in &sets {
        for c in &sets {
            let mut v = vec![0.0; d * d];
            for &a in r {
                for &b in c {
                    v[a * d + b] = mu;
                }
            }
            out.push(v);
        }
    }
    out
}

/// Star indicator vectors, indexed by vertex.
pub fn star_vectors(g: &Graph, mu: f64) -> Vec<Vec<f64>> {
    (0..g.vertex_count())
        .map(|v| {
            g.edges()
                .iter()
                .map(|&(a, b)| if a == v || b == v { mu } else { 0.0 })
                .collect()
        })
        .collect()
}

pub fn materialized(f: &Family) -> Vec<Vec<f64>> {
    (0..f.hypothesis_count() as usize).map(|j| f.vector(j).unwrap()).collect()
}

pub fn binom(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
