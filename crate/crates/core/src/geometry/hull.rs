use std::collections::HashSet;

use super::{GeometryError, Vector3};

/// Supporting plane `normal . p = offset` with an outward unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HullFace {
    pub normal: Vector3,
    pub offset: f64,
}

impl HullFace {
    #[inline]
    pub fn signed_distance(&self, p: Vector3) -> f64 {
        self.normal.dot(p) - self.offset
    }
}

/// Convex polytope stored as its vertex set and triangulated boundary.
#[derive(Clone, Debug)]
pub struct ConvexHull {
    vertices: Vec<Vector3>,
    triangles: Vec<[usize; 3]>,
    faces: Vec<HullFace>,
}

impl ConvexHull {
    pub fn vertices(&self) -> &[Vector3] {
        &self.vertices
    }

    /// One plane per boundary triangle; coplanar triangles repeat a plane.
    pub fn faces(&self) -> &[HullFace] {
        &self.faces
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn volume(&self) -> f64 {
        let origin = self.vertices[0];
        self.triangles
            .iter()
            .map(|t| {
                let a = self.vertices[t[0]] - origin;
                let b = self.vertices[t[1]] - origin;
                let c = self.vertices[t[2]] - origin;
                a.dot(b.cross(c)) / 6.0
            })
            .sum()
    }

    /// `true` iff `normal . p <= offset + margin` for every face.
    pub fn contains(&self, p: Vector3, margin: f64) -> bool {
        self.faces.iter().all(|f| f.signed_distance(p) <= margin)
    }

    /// Largest signed face distance; negative strictly inside.
    pub fn max_signed_distance(&self, p: Vector3) -> f64 {
        self.faces
            .iter()
            .map(|f| f.signed_distance(p))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds the convex hull of `points` with an incremental beneath-beyond
/// sweep. Needs at least four points spanning a positive volume.
pub fn build_convex_hull(points: &[Vector3]) -> Result<ConvexHull, GeometryError> {
    if points.len() < 4 {
        return Err(GeometryError::Degenerate(format!(
            "need at least 4 points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| !p.is_finite()) {
        return Err(GeometryError::InvalidArgument(format!("non-finite point {p:?}")));
    }

    let extent = bounding_extent(points);
    let eps = 1e-11 * extent.max(1.0);

    let simplex = initial_simplex(points, eps)?;
    let mut faces: Vec<Face> = Vec::new();
    let interior = simplex
        .iter()
        .fold(Vector3::ZERO, |acc, &i| acc + points[i])
        * 0.25;
    for tri in [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]] {
        let mut idx = [simplex[tri[0]], simplex[tri[1]], simplex[tri[2]]];
        let mut f = Face::new(points, idx);
        if f.plane.signed_distance(interior) > 0.0 {
            idx.swap(1, 2);
            f = Face::new(points, idx);
        }
        faces.push(f);
    }

    for (pi, &p) in points.iter().enumerate() {
        if simplex.contains(&pi) {
            continue;
        }
        let visible: Vec<usize> = faces
            .iter()
            .enumerate()
            .filter(|(_, f)| f.plane.signed_distance(p) > eps)
            .map(|(i, _)| i)
            .collect();
        if visible.is_empty() {
            continue;
        }
        let edges: HashSet<(usize, usize)> = visible
            .iter()
            .flat_map(|&fi| faces[fi].edges())
            .collect();
        let horizon: Vec<(usize, usize)> = visible
            .iter()
            .flat_map(|&fi| faces[fi].edges())
            .filter(|&(a, b)| !edges.contains(&(b, a)))
            .collect();

        let visible_set: HashSet<usize> = visible.into_iter().collect();
        let mut kept: Vec<Face> = faces
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !visible_set.contains(i))
            .map(|(_, f)| f)
            .collect();
        kept.extend(horizon.into_iter().map(|(a, b)| Face::new(points, [a, b, pi])));
        faces = kept;
    }

    // Compact to the vertices actually referenced by the boundary.
    let mut remap = vec![usize::MAX; points.len()];
    let mut vertices = Vec::new();
    let mut triangles = Vec::with_capacity(faces.len());
    for f in &faces {
        let mut t = [0; 3];
        for (slot, &v) in t.iter_mut().zip(&f.idx) {
            if remap[v] == usize::MAX {
                remap[v] = vertices.len();
                vertices.push(points[v]);
            }
            *slot = remap[v];
        }
        triangles.push(t);
    }
    let hull = ConvexHull {
        vertices,
        triangles,
        faces: faces.iter().map(|f| f.plane).collect(),
    };
    if hull.volume() <= eps * extent * extent {
        return Err(GeometryError::Degenerate("hull has no volume".into()));
    }
    Ok(hull)
}

#[derive(Clone, Copy, Debug)]
struct Face {
    idx: [usize; 3],
    plane: HullFace,
}

impl Face {
    fn new(points: &[Vector3], idx: [usize; 3]) -> Self {
        let a = points[idx[0]];
        let n = (points[idx[1]] - a).cross(points[idx[2]] - a);
        let normal = n.try_normalize(0.0).unwrap_or(Vector3::ZERO);
        Face {
            idx,
            plane: HullFace {
                normal,
                offset: normal.dot(a),
            },
        }
    }

    fn edges(&self) -> [(usize, usize); 3] {
        let [a, b, c] = self.idx;
        [(a, b), (b, c), (c, a)]
    }
}

fn bounding_extent(points: &[Vector3]) -> f64 {
    let mut lo = points[0];
    let mut hi = points[0];
    for p in points {
        lo = Vector3::new(lo.x.min(p.x), lo.y.min(p.y), lo.z.min(p.z));
        hi = Vector3::new(hi.x.max(p.x), hi.y.max(p.y), hi.z.max(p.z));
    }
    (hi - lo).max_component()
}

fn initial_simplex(points: &[Vector3], eps: f64) -> Result<[usize; 4], GeometryError> {
    let degenerate = || GeometryError::Degenerate("points are coplanar or coincident".into());
    let argmax = |f: &dyn Fn(Vector3) -> f64| -> (usize, f64) {
        points
            .iter()
            .enumerate()
            .map(|(i, &p)| (i, f(p)))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    };

    let (i0, _) = argmax(&|p| -p.x);
    let a = points[i0];
    let (i1, d1) = argmax(&|p| (p - a).norm());
    if d1 <= eps {
        return Err(degenerate());
    }
    let b = points[i1];
    let ab = (b - a) / d1;
    let (i2, d2) = argmax(&|p| (p - a).cross(ab).norm());
    if d2 <= eps {
        return Err(degenerate());
    }
    let c = points[i2];
    let n = (b - a).cross(c - a).try_normalize(0.0).ok_or_else(degenerate)?;
    let (i3, d3) = argmax(&|p| n.dot(p - a).abs());
    if d3 <= eps {
        return Err(degenerate());
    }
    Ok([i0, i1, i2, i3])
}
