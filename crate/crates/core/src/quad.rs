//! Gauss–Legendre rules, cached per degree.

use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::legendre::GaussLegendre;

/// Nodes and weights on [−1, 1].
pub fn gauss_legendre(n: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut c = cache.lock().unwrap();
    c.entry(n)
        .or_insert_with(|| {
            let rule = GaussLegendre::new(NonZeroUsize::new(n.max(1)).unwrap());
            let mut v = rule.as_node_weight_pairs().to_vec();
            v.sort_by(|a, b| a.0.total_cmp(&b.0));
            Arc::new(v)
        })
        .clone()
}

/// Nodes and weights mapped to [a, b].
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let h = 0.5 * (b - a);
    let m = 0.5 * (b + a);
    gauss_legendre(n).iter().map(|&(x, w)| (m + h * x, h * w)).collect()
}

pub fn integrate<F: FnMut(f64) -> f64>(n: usize, a: f64, b: f64, mut f: F) -> f64 {
    gauss_legendre_on(n, a, b).iter().map(|&(x, w)| w * f(x)).sum()
}
