use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Coordinates of the centered rows on their top two principal
/// components. Each component's sign is fixed so that its largest-magnitude
/// loading is positive.
pub fn pca_2d(rows: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    if rows.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "projection needs at least 3 vectors, got {}",
            rows.len()
        )));
    }
    let dim = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != dim) {
        return Err(Error::LengthMismatch(r.len(), dim));
    }
    let n = rows.len();
    let mut m = DMatrix::from_fn(n, dim, |i, j| rows[i][j]);
    for j in 0..dim {
        let mean = m.column(j).mean();
        m.column_mut(j).add_scalar_mut(-mean);
    }
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut coords = vec![[0.0; 2]; n];
    for (c, &k) in order.iter().take(2).enumerate() {
        let mut axis: Vec<f64> = v_t.row(k).iter().copied().collect();
        let pivot = axis
            .iter()
            .copied()
            .fold(0.0f64, |best, v| if v.abs() > best.abs() { v } else { best });
        if pivot < 0.0 {
            axis.iter_mut().for_each(|v| *v = -*v);
        }
        for (i, coord) in coords.iter_mut().enumerate() {
            coord[c] = m.row(i).iter().zip(&axis).map(|(a, b)| a * b).sum();
        }
    }
    Ok(coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_have_flat_second_component() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![-1.0, -2.0, -3.0]];
        let coords = pca_2d(&rows).unwrap();
        assert_eq!(coords.len(), 3);
        assert!(coords.iter().all(|c| c[1].abs() < 1e-9));
        let spread: f64 = coords.iter().map(|c| c[0] * c[0]).sum();
        assert!(spread > 1.0);
    }

    #[test]
    fn first_component_follows_largest_spread() {
        let rows = vec![
            vec![-10.0, 0.0],
            vec![10.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let coords = pca_2d(&rows).unwrap();
        assert!((coords[1][0] - 10.0).abs() < 1e-9);
        assert!((coords[2][1].abs() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_rows() {
        assert!(pca_2d(&[vec![1.0], vec![2.0]]).is_err());
    }
}
