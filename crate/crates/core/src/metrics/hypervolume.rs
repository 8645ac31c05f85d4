use super::MetricError;

/// Exact dominated hypervolume of `points` with respect to `ref_point`.
///
/// Only points strictly better than the reference in every objective
/// contribute. Two objectives use a sorted sweep; three objectives slice
/// along the last axis and sum the 2D areas of each slab.
pub fn hypervolume(points: &[Vec<f64>], ref_point: &[f64]) -> Result<f64, MetricError> {
    let dim = ref_point.len();
    if !(2..=3).contains(&dim) {
        return Err(MetricError::UnsupportedDimension(dim));
    }
    super::check_dims(points, dim)?;
    let inside: Vec<&[f64]> = points
        .iter()
        .filter(|p| p.iter().zip(ref_point).all(|(v, r)| v < r))
        .map(Vec::as_slice)
        .collect();
    if inside.is_empty() {
        return Ok(0.0);
    }
    Ok(match dim {
        2 => {
            let mut pts: Vec<(f64, f64)> = inside.iter().map(|p| (p[0], p[1])).collect();
            area_2d(&mut pts, ref_point[0], ref_point[1])
        }
        _ => volume_3d(&inside, ref_point),
    })
}

fn area_2d(pts: &mut [(f64, f64)], rx: f64, ry: f64) -> f64 {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut area = 0.0;
    let mut floor = ry;
    for &(x, y) in pts.iter() {
        if y < floor {
            area += (rx - x) * (floor - y);
            floor = y;
        }
    }
    area
}

fn volume_3d(pts: &[&[f64]], r: &[f64]) -> f64 {
    let mut order: Vec<&[f64]> = pts.to_vec();
    order.sort_by(|a, b| a[2].total_cmp(&b[2]));
    let mut volume = 0.0;
    let mut slab: Vec<(f64, f64)> = Vec::with_capacity(order.len());
    for (i, p) in order.iter().enumerate() {
        slab.push((p[0], p[1]));
        let top = order.get(i + 1).map_or(r[2], |q| q[2]);
        let depth = top - p[2];
        if depth > 0.0 {
            volume += area_2d(&mut slab, r[0], r[1]) * depth;
        }
    }
    volume
}
