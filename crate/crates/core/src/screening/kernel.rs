//! Blocked evaluation of every pairwise product correlation `cor(x_j ∘ x_k, y)`.
//!
//! For a block `J` of variables and a block `K` with `min K >= min J`, three
//! small Gram products give, for every `(j, k)` in the tile,
//!
//! ```text
//! g0 = Σ x_j x_k      g1 = Σ x_j x_k y      g2 = Σ x_j² x_k²
//! ```
//!
//! from which `cor = (g1 - ȳ g0) / sqrt((g2 - g0²/n) · spread)`. Nothing of
//! size `n × p²` (or even `p × p`) is ever allocated: each worker holds a few
//! `n × BLOCK` panels and a `BLOCK × BLOCK` output. Tiles are fixed by `p`
//! alone, so every pair's value is bit-identical for any worker count.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::data::Dataset;

pub(crate) const BLOCK: usize = 64;

/// Products whose centred sum of squares falls below this fraction of their
/// raw sum of squares are treated as constant.
const ZERO_SPREAD_REL: f64 = 1e-12;

/// How the response enters the correlation denominator.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ResponseMoments {
    pub mean: f64,
    /// `Σ (y - ȳ)²` for Pearson; the binary-response constant otherwise.
    pub spread: f64,
}

impl ResponseMoments {
    pub fn pearson(y: &[f64]) -> Self {
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let spread = y.iter().map(|v| (v - mean) * (v - mean)).sum();
        Self { mean, spread }
    }
}

/// Receives correlations for effects `(j, k)`, `0 <= j < k`, 1-based `k`.
pub(crate) trait PairVisitor: Send + Sized {
    fn visit(&mut self, j: usize, k: usize, cor: f64);
    /// Must be commutative and associative so the merged result does not
    /// depend on scheduling.
    fn merge(&mut self, other: Self);
}

pub(crate) struct ScanOutput<V> {
    pub visitor: V,
    pub zero_variance: usize,
}

/// Correlation of a single standardised column with the response.
fn main_effect_cor(col: &[f64], y: &[f64], m: ResponseMoments) -> Option<f64> {
    let n = col.len() as f64;
    let (mut sx, mut sxx, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in col.iter().zip(y) {
        sx += a;
        sxx += a * a;
        sxy += a * b;
    }
    let centred = sxx - sx * sx / n;
    if centred <= ZERO_SPREAD_REL * sxx || m.spread <= 0.0 {
        return None;
    }
    Some(((sxy - m.mean * sx) / (centred * m.spread).sqrt()).clamp(-1.0, 1.0))
}

struct Workspace {
    left: Vec<f64>,
    left_sq: Vec<f64>,
    right_sq: Vec<f64>,
    c01: Vec<f64>,
    c2: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            left: vec![0.0; 2 * BLOCK * n],
            left_sq: vec![0.0; BLOCK * n],
            right_sq: vec![0.0; BLOCK * n],
            c01: vec![0.0; 2 * BLOCK * BLOCK],
            c2: vec![0.0; BLOCK * BLOCK],
        }
    }
}

/// `C (m × cols, row-major) = Aᵀ B` for column-major `A` (n × m) and `B` (n × cols).
fn gram(n: usize, m: usize, cols: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    // SAFETY: slices are sized for the requested shapes; matrixmultiply only
    // reads `a`/`b` and writes `c` within the given strides.
    unsafe {
        matrixmultiply::dgemm(
            m,
            n,
            cols,
            1.0,
            a.as_ptr(),
            n as isize,
            1,
            b.as_ptr(),
            1,
            n as isize,
            0.0,
            c.as_mut_ptr(),
            cols as isize,
            1,
        );
    }
}

fn scan_row_block<V: PairVisitor>(
    ds: &Dataset,
    m: ResponseMoments,
    jb: usize,
    ws: &mut Workspace,
    v: &mut V,
) -> usize {
    let (n, p) = (ds.n(), ds.p());
    let x = ds.x();
    let y = ds.y();
    let nf = n as f64;
    let j0 = jb * BLOCK;
    let bj = BLOCK.min(p - j0);

    // left = [X_J | X_J ∘ y], left_sq = X_J²
    let xj = &x[j0 * n..(j0 + bj) * n];
    ws.left[..bj * n].copy_from_slice(xj);
    for (c, col) in xj.chunks_exact(n).enumerate() {
        let dst = &mut ws.left[(bj + c) * n..(bj + c + 1) * n];
        for ((d, a), b) in dst.iter_mut().zip(col).zip(y) {
            *d = a * b;
        }
        let dst = &mut ws.left_sq[c * n..(c + 1) * n];
        for (d, a) in dst.iter_mut().zip(col) {
            *d = a * a;
        }
    }

    let mut zero = 0;
    let nblocks = p.div_ceil(BLOCK);
    for kb in jb..nblocks {
        let k0 = kb * BLOCK;
        let bk = BLOCK.min(p - k0);
        let xk = &x[k0 * n..(k0 + bk) * n];
        for (d, a) in ws.right_sq[..bk * n].iter_mut().zip(xk) {
            *d = a * a;
        }
        gram(n, 2 * bj, bk, &ws.left[..2 * bj * n], xk, &mut ws.c01[..2 * bj * bk]);
        gram(n, bj, bk, &ws.left_sq[..bj * n], &ws.right_sq[..bk * n], &mut ws.c2[..bj * bk]);

        for a in 0..bj {
            let j = j0 + a + 1;
            let row0 = &ws.c01[a * bk..(a + 1) * bk];
            let row1 = &ws.c01[(bj + a) * bk..(bj + a + 1) * bk];
            let row2 = &ws.c2[a * bk..(a + 1) * bk];
            let start = if kb == jb { a + 1 } else { 0 };
            for b in start..bk {
                let k = k0 + b + 1;
                let (g0, g1, g2) = (row0[b], row1[b], row2[b]);
                let szz = g2 - g0 * g0 / nf;
                let cor = if szz <= ZERO_SPREAD_REL * g2 || !(szz > 0.0) {
                    zero += 1;
                    0.0
                } else {
                    ((g1 - m.mean * g0) / (szz * m.spread).sqrt()).clamp(-1.0, 1.0)
                };
                v.visit(j, k, cor);
            }
        }
    }
    zero
}

/// Visits every main effect and every interaction of `ds` exactly once.
pub(crate) fn scan_pairs<V, F>(
    ds: &Dataset,
    m: ResponseMoments,
    workers: usize,
    make: F,
) -> ScanOutput<V>
where
    V: PairVisitor,
    F: Fn() -> V + Sync,
{
    let p = ds.p();
    let nblocks = p.div_ceil(BLOCK);
    let workers = workers.clamp(1, nblocks.max(1));

    let (mut visitor, mut zero) = if workers == 1 {
        let mut v = make();
        let mut ws = Workspace::new(ds.n());
        let mut zero = 0;
        for jb in 0..nblocks {
            zero += scan_row_block(ds, m, jb, &mut ws, &mut v);
        }
        (v, zero)
    } else {
        let next = AtomicUsize::new(0);
        let results: Mutex<Vec<(usize, V, usize)>> = Mutex::new(Vec::with_capacity(workers));
        std::thread::scope(|s| {
            for w in 0..workers {
                let (next, results, make) = (&next, &results, &make);
                s.spawn(move || {
                    let mut v = make();
                    let mut ws = Workspace::new(ds.n());
                    let mut zero = 0;
                    loop {
                        let jb = next.fetch_add(1, Ordering::Relaxed);
                        if jb >= nblocks {
                            break;
                        }
                        zero += scan_row_block(ds, m, jb, &mut ws, &mut v);
                    }
                    results.lock().unwrap().push((w, v, zero));
                });
            }
        });
        let mut parts = results.into_inner().unwrap();
        parts.sort_by_key(|(w, _, _)| *w);
        let mut it = parts.into_iter();
        let (_, mut acc, mut zero) = it.next().expect("at least one worker");
        for (_, v, z) in it {
            acc.merge(v);
            zero += z;
        }
        (acc, zero)
    };

    for k in 1..=p {
        let cor = match main_effect_cor(ds.column(k), ds.y(), m) {
            Some(c) => c,
            None => {
                zero += 1;
                0.0
            }
        };
        visitor.visit(0, k, cor);
    }

    ScanOutput {
        visitor,
        zero_variance: zero,
    }
}
