//! Grid-search oracle over the probability simplex, refined iteratively.

/// Minimizes `loss` over the simplex in `k` coordinates by recursive grid
/// refinement, down to coordinate resolution `resolution`.
///
/// Intended for small `k` (2 or 3): the grid is exhaustive per round and the
/// window halves around the incumbent each time.
pub fn grid_search<F: Fn(&[f64]) -> f64>(k: usize, loss: F, resolution: f64) -> Vec<f64> {
    assert!(k >= 2, "need at least two coordinates");
    let mut center = vec![1.0 / k as f64; k];
    let mut width = 1.0;
    let mut best = center.clone();
    let mut best_loss = loss(&best);
    while width > resolution {
        let step = width / 20.0;
        let mut point = vec![0.0; k];
        enumerate(&center, width, step, k, 0, &mut point, &mut |w| {
            let l = loss(w);
            if l < best_loss {
                best_loss = l;
                best = w.to_vec();
            }
        });
        center = best.clone();
        width /= 4.0;
    }
    best
}

/// Enumerates simplex points near `center` with the given window and step.
fn enumerate<F: FnMut(&[f64])>(
    center: &[f64],
    width: f64,
    step: f64,
    k: usize,
    index: usize,
    point: &mut Vec<f64>,
    visit: &mut F,
) {
    if index == k - 1 {
        let partial: f64 = point[..index].iter().sum();
        let last = 1.0 - partial;
        if last >= -1e-12 {
            point[index] = last.max(0.0);
            visit(point);
        }
        return;
    }
    let lo = (center[index] - width).max(0.0);
    let hi = (center[index] + width).min(1.0);
    let mut v = lo;
    while v <= hi + 1e-12 {
        let used: f64 = point[..index].iter().sum();
        if used + v <= 1.0 + 1e-12 {
            point[index] = v.min(1.0);
            enumerate(center, width, step, k, index + 1, point, visit);
        }
        v += step;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_a_known_optimum() {
        let target = [0.3, 0.5, 0.2];
        let loss = |w: &[f64]| {
            w.iter()
                .zip(&target)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
        };
        let best = grid_search(3, loss, 1e-7);
        for (a, b) in best.iter().zip(&target) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
