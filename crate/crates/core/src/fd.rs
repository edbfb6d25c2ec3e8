//! Finite-difference second derivatives on sampled trajectories.
//!
//! Stencils never straddle a breakpoint: the solutions we differentiate
//! are only piecewise smooth (their third derivative jumps wherever the
//! weight has a kink), so each point is differentiated using samples from
//! its own smooth piece.

/// Fornberg weights for the `order`-th derivative at `x0` on `nodes`.
pub fn fornberg_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

/// Second derivative at every sample, using a centred 5-point stencil
/// where it fits inside the sample's smooth piece and a shifted 6-point
/// stencil near piece boundaries. `breakpoints` split `xs` into pieces.
/// Returns `None` where a piece holds fewer than 3 samples.
pub fn second_derivative(xs: &[f64], ys: &[f64], breakpoints: &[f64]) -> Vec<Option<f64>> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    let mut out = vec![None; n];
    if n == 0 {
        return out;
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > xs[0] && b < xs[n - 1])
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut bounds = vec![xs[0]];
    bounds.extend(cuts);
    bounds.push(xs[n - 1]);

    for piece in bounds.windows(2) {
        let (a, b) = (piece[0], piece[1]);
        let lo = xs.partition_point(|&x| x < a);
        let hi = xs.partition_point(|&x| x <= b);
        let len = hi - lo;
        if len < 3 {
            continue;
        }
        for j in lo..hi {
            let (start, width) = if len >= 5 && j >= lo + 2 && j + 2 < hi {
                (j - 2, 5)
            } else {
                let w = len.min(6);
                let s = j.saturating_sub(w / 2).max(lo).min(hi - w);
                (s, w)
            };
            let nodes = &xs[start..start + width];
            let w = fornberg_weights(xs[j], nodes, 2);
            let d2: f64 = w.iter().zip(&ys[start..start + width]).map(|(c, y)| c * y).sum();
            // Samples on a shared boundary keep the first estimate.
            if out[j].is_none() {
                out[j] = Some(d2);
            }
        }
    }
    out
}
