use super::{FrameMetric, Frames, MetricError, MetricKind};

/// How far a posterior frame may sum away from 1 before it is rejected.
pub const KL_SUM_TOLERANCE: f64 = 1e-4;

/// Angle between `u` and `v` in `[0, pi]`.
pub fn gamma_angular(u: &[f64], v: &[f64]) -> Result<f64, MetricError> {
    check_dims(u, v)?;
    let nu = norm(u, "u")?;
    let nv = norm(v, "v")?;
    Ok(angle(u, nu, v, nv))
}

/// Symmetrised KL divergence (natural log) between two distributions after
/// flooring every entry at `epsilon` and renormalising.
pub fn gamma_symmetric_kl(p: &[f64], q: &[f64], epsilon: f64) -> Result<f64, MetricError> {
    check_dims(p, q)?;
    let (pp, lp) = floored_distribution(p, epsilon, "p")?;
    let (qq, lq) = floored_distribution(q, epsilon, "q")?;
    Ok(symmetric_kl(&pp, &lp, &qq, &lq))
}

fn check_dims(u: &[f64], v: &[f64]) -> Result<(), MetricError> {
    if u.len() != v.len() {
        return Err(MetricError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(())
}

fn norm(u: &[f64], argument: &str) -> Result<f64, MetricError> {
    let n = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !n.is_finite() {
        return Err(MetricError::NonFinite {
            argument: argument.to_string(),
        });
    }
    if n == 0.0 {
        return Err(MetricError::ZeroNorm {
            argument: argument.to_string(),
        });
    }
    Ok(n)
}

fn angle(u: &[f64], nu: f64, v: &[f64], nv: f64) -> f64 {
    let a: Vec<f64> = u.iter().map(|x| x / nu).collect();
    let b: Vec<f64> = v.iter().map(|x| x / nv).collect();
    unit_angle(&a, &b)
}

// 2 atan2(|a - b|, |a + b|) for unit vectors equals arccos(a.b) but stays
// accurate for nearly parallel vectors, where arccos loses half the digits,
// and is exactly 0 for identical directions.
#[inline]
fn unit_angle(a: &[f64], b: &[f64]) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        diff += (x - y) * (x - y);
        sum += (x + y) * (x + y);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

fn floored_distribution(
    p: &[f64],
    epsilon: f64,
    argument: &str,
) -> Result<(Vec<f64>, Vec<f64>), MetricError> {
    let mut sum = 0.0;
    for (index, &value) in p.iter().enumerate() {
        if !value.is_finite() {
            return Err(MetricError::NonFinite {
                argument: argument.to_string(),
            });
        }
        if value < 0.0 {
            return Err(MetricError::NegativeEntry {
                argument: argument.to_string(),
                index,
                value,
            });
        }
        sum += value;
    }
    if (sum - 1.0).abs() > KL_SUM_TOLERANCE {
        return Err(MetricError::SumOutOfTolerance {
            argument: argument.to_string(),
            sum,
        });
    }
    let floored: Vec<f64> = p.iter().map(|&x| x.max(epsilon)).collect();
    let total: f64 = floored.iter().sum();
    let probs: Vec<f64> = floored.iter().map(|x| x / total).collect();
    let logs = probs.iter().map(|x| x.ln()).collect();
    Ok((probs, logs))
}

#[inline]
fn symmetric_kl(p: &[f64], lp: &[f64], q: &[f64], lq: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..p.len() {
        acc += p[i] * (lp[i] - lq[i]) + q[i] * (lq[i] - lp[i]);
    }
    acc
}

/// Per-sequence precomputation so that each cell of the DTW cost matrix
/// costs one pass over the frame pair.
pub(super) enum Prepared {
    Angular {
        dim: usize,
        units: Vec<f64>,
    },
    Kl {
        dim: usize,
        probs: Vec<f64>,
        logs: Vec<f64>,
    },
}

impl Prepared {
    pub(super) fn new(
        frames: Frames<'_>,
        metric: &FrameMetric,
        name: &str,
    ) -> Result<Self, MetricError> {
        match metric.kind {
            MetricKind::Angular => {
                let dim = frames.dim();
                let mut units = Vec::with_capacity(frames.len() * dim);
                for (i, r) in frames.rows().enumerate() {
                    let n = norm(r, &format!("{name}[{i}]"))?;
                    units.extend(r.iter().map(|x| x / n));
                }
                Ok(Prepared::Angular {
                    dim,
                    units,
                })
            }
            MetricKind::SymmetricKl => {
                let dim = frames.dim();
                let mut probs = Vec::with_capacity(frames.len() * dim);
                let mut logs = Vec::with_capacity(frames.len() * dim);
                for (i, r) in frames.rows().enumerate() {
                    let (p, l) = floored_distribution(r, metric.epsilon, &format!("{name}[{i}]"))?;
                    probs.extend(p);
                    logs.extend(l);
                }
                Ok(Prepared::Kl { dim, probs, logs })
            }
        }
    }

    /// Frame distance between frame `i` of `self` and frame `j` of `other`.
    /// Both must come from the same metric.
    #[inline]
    pub(super) fn cost(&self, i: usize, other: &Prepared, j: usize) -> f64 {
        match (self, other) {
            (Prepared::Angular { dim, units: ua, .. }, Prepared::Angular { units: ub, .. }) => {
                unit_angle(&ua[i * dim..(i + 1) * dim], &ub[j * dim..(j + 1) * dim])
            }
            (
                Prepared::Kl { dim, probs: pa, logs: la },
                Prepared::Kl { probs: pb, logs: lb, .. },
            ) => {
                let (a, b) = (i * dim..(i + 1) * dim, j * dim..(j + 1) * dim);
                symmetric_kl(&pa[a.clone()], &la[a], &pb[b.clone()], &lb[b])
            }
            _ => unreachable!("sequences prepared with different metrics"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    // ln 3 from mpmath
    const LN_3: f64 = 1.098_612_288_668_109_8;

    #[test]
    fn angular_reference_values() {
        assert_eq!(gamma_angular(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert!((gamma_angular(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - FRAC_PI_2).abs() < 1e-12);
        assert!((gamma_angular(&[1.0, 1.0], &[1.0, 0.0]).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert!((gamma_angular(&[1.0, 0.0], &[-1.0, 0.0]).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn angular_clamps_rounding_overshoot() {
        let u = [0.1, 0.2, 0.3];
        let g = gamma_angular(&u, &u).unwrap();
        assert!(g.is_finite() && g < 1e-7);
        let v = [-0.1, -0.2, -0.3];
        assert!((gamma_angular(&u, &v).unwrap() - PI).abs() < 1e-7);
    }

    #[test]
    fn angular_rejects_zero_vectors() {
        let err = gamma_angular(&[0.0, 0.0], &[1.0, 0.0]).unwrap_err();
        assert_eq!(err, MetricError::ZeroNorm { argument: "u".into() });
        let err = gamma_angular(&[1.0, 0.0], &[0.0, 0.0]).unwrap_err();
        assert_eq!(err, MetricError::ZeroNorm { argument: "v".into() });
        assert!(gamma_angular(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn kl_reference_values() {
        assert_eq!(gamma_symmetric_kl(&[0.5, 0.5], &[0.5, 0.5], 1e-10).unwrap(), 0.0);
        let g = gamma_symmetric_kl(&[0.75, 0.25], &[0.25, 0.75], 1e-10).unwrap();
        assert!((g - LN_3).abs() < 1e-9, "{g}");
    }

    #[test]
    fn kl_floors_exact_zeros() {
        let g = gamma_symmetric_kl(&[1.0, 0.0], &[0.0, 1.0], 1e-10).unwrap();
        assert!(g.is_finite() && g > 40.0);
    }

    #[test]
    fn kl_input_validation() {
        assert!(matches!(
            gamma_symmetric_kl(&[1.2, -0.2], &[0.5, 0.5], 1e-10),
            Err(MetricError::NegativeEntry { index: 1, .. })
        ));
        assert!(matches!(
            gamma_symmetric_kl(&[0.5, 0.5], &[0.5, 0.6], 1e-10),
            Err(MetricError::SumOutOfTolerance { .. })
        ));
        assert!(gamma_symmetric_kl(&[0.5, 0.5], &[0.5, 0.50005], 1e-10).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn distribution(dim: usize) -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(0.0f64..1.0, dim).prop_filter_map("nonzero mass", |v| {
                let s: f64 = v.iter().sum();
                (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
            })
        }

        proptest! {
            #[test]
            fn angular_scale_invariant(
                u in prop::collection::vec(-10.0f64..10.0, 4),
                v in prop::collection::vec(-10.0f64..10.0, 4),
                a in 0.01f64..100.0,
                b in 0.01f64..100.0,
            ) {
                prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
                let g = gamma_angular(&u, &v).unwrap();
                let su: Vec<f64> = u.iter().map(|x| a * x).collect();
                let sv: Vec<f64> = v.iter().map(|x| b * x).collect();
                let gs = gamma_angular(&su, &sv).unwrap();
                prop_assert!((g - gs).abs() < 1e-12 || (g - gs).abs() < 1e-7 && (g < 1e-6 || PI - g < 1e-6));
                prop_assert!((0.0..=PI).contains(&g));
            }

            #[test]
            fn kl_symmetric_and_nonnegative(p in distribution(5), q in distribution(5)) {
                let pq = gamma_symmetric_kl(&p, &q, 1e-10).unwrap();
                let qp = gamma_symmetric_kl(&q, &p, 1e-10).unwrap();
                prop_assert_eq!(pq, qp);
                prop_assert!(pq >= 0.0);
            }
        }
    }
}
