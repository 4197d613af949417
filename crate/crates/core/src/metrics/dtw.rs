use serde::Serialize;

use super::gamma::Prepared;
use super::{FrameMetric, Frames, MetricError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DtwResult {
    /// Minimal summed frame cost over monotone alignments, divided by the
    /// longer sequence length.
    pub distance: f64,
    /// Number of matched pairs on the chosen optimal path.
    pub path_length: usize,
}

/// DTW distance between `c` and `d`.
///
/// Alignments start at the first frame pair, end at the last one and advance
/// by `(1,0)`, `(0,1)` or `(1,1)`; each visited cell contributes its frame
/// cost once. The minimal total is divided by `max(p, q)`.
pub fn dtw_distance(c: Frames<'_>, d: Frames<'_>, metric: &FrameMetric) -> Result<DtwResult, MetricError> {
    if c.is_empty() {
        return Err(MetricError::EmptySequence("c"));
    }
    if d.is_empty() {
        return Err(MetricError::EmptySequence("d"));
    }
    if c.dim() != d.dim() {
        return Err(MetricError::DimensionMismatch {
            left: c.dim(),
            right: d.dim(),
        });
    }
    metric.check(c.dim())?;
    let pc = Prepared::new(c, metric, "c")?;
    let pd = Prepared::new(d, metric, "d")?;
    let (p, q) = (c.len(), d.len());

    // Two rolling rows of accumulated cost and matching path lengths.
    let mut prev = vec![0.0f64; q];
    let mut prev_len = vec![0usize; q];
    let mut cur = vec![0.0f64; q];
    let mut cur_len = vec![0usize; q];
    for i in 0..p {
        for j in 0..q {
            let (best, best_len) = if i == 0 && j == 0 {
                (0.0, 0)
            } else {
                // Ties resolve diagonal, then vertical, then horizontal.
                let mut best = (f64::INFINITY, 0);
                if i > 0 && j > 0 {
                    best = (prev[j - 1], prev_len[j - 1]);
                }
                if i > 0 && prev[j] < best.0 {
                    best = (prev[j], prev_len[j]);
                }
                if j > 0 && cur[j - 1] < best.0 {
                    best = (cur[j - 1], cur_len[j - 1]);
                }
                best
            };
            cur[j] = best + pc.cost(i, &pd, j);
            cur_len[j] = best_len + 1;
        }
        std::mem::swap(&mut prev, &mut cur);
        std::mem::swap(&mut prev_len, &mut cur_len);
    }
    Ok(DtwResult {
        distance: prev[q - 1] / p.max(q) as f64,
        path_length: prev_len[q - 1],
    })
}
