use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// Mean over the first `len` rows.
pub fn global_avg_pool(states: &Tensor2, len: usize) -> Result<Vec<f64>> {
    if len == 0 || len > states.rows {
        return Err(Error::Shape(format!(
            "global average pool over {len} of {} steps",
            states.rows
        )));
    }
    let mut out = vec![0.0; states.cols];
    for t in 0..len {
        for (o, v) in out.iter_mut().zip(states.row(t)) {
            *o += v;
        }
    }
    let inv = 1.0 / len as f64;
    out.iter_mut().for_each(|o| *o *= inv);
    Ok(out)
}

pub fn global_avg_pool_backward(dpooled: &[f64], len: usize, rows: usize) -> Tensor2 {
    let mut d = Tensor2::zeros(rows, dpooled.len());
    let inv = 1.0 / len as f64;
    for t in 0..len {
        for (o, g) in d.row_mut(t).iter_mut().zip(dpooled) {
            *o = g * inv;
        }
    }
    d
}

/// Input rows averaged into output row `k` of an adaptive pool from `t` to
/// `target` rows: `[floor(k*t/target), ceil((k+1)*t/target))`.
pub fn adaptive_segment(k: usize, t: usize, target: usize) -> (usize, usize) {
    let start = k * t / target;
    let end = ((k + 1) * t).div_ceil(target);
    (start, end)
}

/// Mean-pools a `T x D` sequence into `target` rows.
pub fn adaptive_avg_pool(states: &Tensor2, target: usize) -> Result<Tensor2> {
    if states.rows == 0 || target == 0 {
        return Err(Error::Shape(format!(
            "adaptive pool from {} to {target} rows",
            states.rows
        )));
    }
    let mut out = Tensor2::zeros(target, states.cols);
    for k in 0..target {
        let (s, e) = adaptive_segment(k, states.rows, target);
        let inv = 1.0 / (e - s) as f64;
        let row = out.row_mut(k);
        for t in s..e {
            for (o, v) in row.iter_mut().zip(states.row(t)) {
                *o += v;
            }
        }
        row.iter_mut().for_each(|o| *o *= inv);
    }
    Ok(out)
}

pub fn adaptive_avg_pool_backward(dout: &Tensor2, rows: usize) -> Tensor2 {
    let target = dout.rows;
    let mut d = Tensor2::zeros(rows, dout.cols);
    for k in 0..target {
        let (s, e) = adaptive_segment(k, rows, target);
        let inv = 1.0 / (e - s) as f64;
        for t in s..e {
            for (o, g) in d.row_mut(t).iter_mut().zip(dout.row(k)) {
                *o += g * inv;
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(rows: &[&[f64]]) -> Tensor2 {
        Tensor2::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn global_mean() {
        let s = seq(&[&[0.0, 2.0], &[2.0, 0.0]]);
        assert_eq!(global_avg_pool(&s, 2).unwrap(), vec![1.0, 1.0]);
        assert_eq!(global_avg_pool(&s, 1).unwrap(), vec![0.0, 2.0]);
        assert!(global_avg_pool(&s, 0).is_err());
    }

    #[test]
    fn padding_does_not_change_mean() {
        let s = seq(&[&[1.0, 2.0], &[3.0, 5.0]]);
        let padded = seq(&[&[1.0, 2.0], &[3.0, 5.0], &[0.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(global_avg_pool(&s, 2).unwrap(), global_avg_pool(&padded, 2).unwrap());
    }

    #[test]
    fn even_segmentation() {
        let s = seq(&[&[0.0], &[2.0], &[4.0], &[6.0], &[8.0], &[10.0]]);
        assert_eq!(adaptive_avg_pool(&s, 3).unwrap().data, vec![1.0, 5.0, 9.0]);
        assert_eq!(adaptive_avg_pool(&s, 6).unwrap(), s);
    }

    #[test]
    fn uneven_segments_follow_floor_ceil_rule() {
        assert_eq!(adaptive_segment(0, 5, 3), (0, 2));
        assert_eq!(adaptive_segment(1, 5, 3), (1, 4));
        assert_eq!(adaptive_segment(2, 5, 3), (3, 5));
        let s = seq(&[&[1.0], &[2.0], &[3.0], &[4.0], &[5.0]]);
        assert_eq!(adaptive_avg_pool(&s, 3).unwrap().data, vec![1.5, 3.0, 4.5]);
    }

    #[test]
    fn upsampling_repeats_rows() {
        let s = seq(&[&[1.0], &[3.0]]);
        assert_eq!(adaptive_avg_pool(&s, 4).unwrap().data, vec![1.0, 1.0, 3.0, 3.0]);
    }
}
