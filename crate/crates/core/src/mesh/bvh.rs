use crate::geometry::{closest_point_on_triangle, Aabb, Vec3};

use super::{TriMesh, TriangleId};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

/// Median-split bounding volume hierarchy over a mesh's triangles, used for
/// closest-point and overlap queries.
#[derive(Debug, Clone)]
pub struct TriangleBvh {
    nodes: Vec<Node>,
    order: Vec<TriangleId>,
    tris: Vec<[Vec3; 3]>,
}

impl TriangleBvh {
    pub fn new(mesh: &TriMesh) -> Self {
        let tris: Vec<[Vec3; 3]> = (0..mesh.triangle_count()).map(|t| mesh.triangle_points(t)).collect();
        Self::from_triangles(tris)
    }

    pub fn from_triangles(tris: Vec<[Vec3; 3]>) -> Self {
        let mut order: Vec<TriangleId> = (0..tris.len()).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|t| (t[0] + t[1] + t[2]) / 3.0).collect();
        let mut nodes = Vec::new();
        if !tris.is_empty() {
            build(&mut nodes, &mut order, 0, tris.len(), &tris, &centroids);
        }
        TriangleBvh { nodes, order, tris }
    }

    pub fn is_empty(&self) -> bool {
        self.tris.is_empty()
    }

    /// Closest surface point to `p` and the triangle it lies on.
    pub fn closest_point(&self, p: &Vec3) -> Option<(Vec3, TriangleId, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (Vec3::zeros(), usize::MAX, f64::INFINITY);
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            if self.nodes[n].bounds().distance_squared(p) >= best.2 {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let [a, b, c] = &self.tris[t];
                        let q = closest_point_on_triangle(p, a, b, c);
                        let d = (q - p).norm_squared();
                        if d < best.2 {
                            best = (q, t, d);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    let dl = self.nodes[*left].bounds().distance_squared(p);
                    let dr = self.nodes[*right].bounds().distance_squared(p);
                    if dl < dr {
                        stack.push(*right);
                        stack.push(*left);
                    } else {
                        stack.push(*left);
                        stack.push(*right);
                    }
                }
            }
        }
        Some((best.0, best.1, best.2.sqrt()))
    }

    /// Triangles whose bounding boxes overlap `query` (with slack).
    pub fn overlapping(&self, query: &Aabb, slack: f64) -> Vec<TriangleId> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            if !self.nodes[n].bounds().overlaps(query, slack) {
                continue;
            }
            match &self.nodes[n] {
                Node::Leaf { start, end, .. } => {
                    for &t in &self.order[*start..*end] {
                        let b = Aabb::from_points(self.tris[t].iter());
                        if b.overlaps(query, slack) {
                            out.push(t);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn build(
    nodes: &mut Vec<Node>,
    order: &mut [TriangleId],
    start: usize,
    end: usize,
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
) -> usize {
    let mut bounds = Aabb::empty();
    for &t in &order[start..end] {
        for p in &tris[t] {
            bounds.grow(p);
        }
    }
    let idx = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return idx;
    }
    let mut cb = Aabb::empty();
    for &t in &order[start..end] {
        cb.grow(&centroids[t]);
    }
    let axis = cb.extent().iamax();
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centroids[a][axis].total_cmp(&centroids[b][axis])
    });
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build(nodes, order, start, mid, tris, centroids);
    let right = build(nodes, order, mid, end, tris, centroids);
    nodes[idx] = Node::Inner { bounds, left, right };
    idx
}
