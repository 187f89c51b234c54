//! Planar convex hulls of projected rate points.

pub type Point = [f64; 2];

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Monotone-chain convex hull, counterclockwise from the lowest-leftmost
/// point, without duplicate or collinear vertices.
pub fn hull2d(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.iter().copied().filter(|p| p[0].is_finite() && p[1].is_finite()).collect();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Hull of `points` together with their projections onto both axes and the
/// origin, i.e. the smallest convex set containing everything a
/// rate-comprehensive region would contain.
pub fn comprehensive_hull(points: &[Point]) -> Vec<Point> {
    let mut all = vec![[0.0, 0.0]];
    for &p in points {
        all.push(p);
        all.push([p[0], 0.0]);
        all.push([0.0, p[1]]);
    }
    hull2d(&all)
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Whether `p` lies in the counterclockwise hull `hull` grown outward by
/// `tol` along every edge normal.
pub fn inside_hull(hull: &[Point], p: Point, tol: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => segment_distance(p, hull[0], hull[0]) <= tol,
        2 => segment_distance(p, hull[0], hull[1]) <= tol,
        n => (0..n).all(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % n];
            let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
            // Signed distance to the right of edge a→b (outside for CCW order).
            -cross(a, b, p) / len <= tol
        }),
    }
}
