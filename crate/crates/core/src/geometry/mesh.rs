use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{point_segment_distance, signed_area2, triangle_area, Point2};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Exterior,
    Defect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Outer,
    Defect,
}

impl BoundaryTag {
    fn label(self) -> &'static str {
        match self {
            BoundaryTag::Outer => "outer",
            BoundaryTag::Defect => "defect",
        }
    }
}

/// Selects a set of triangles: the whole plate, Ω∖D̄ or D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionSel {
    All,
    Exterior,
    Defect,
}

impl RegionSel {
    pub fn contains(self, region: Region) -> bool {
        match self {
            RegionSel::All => true,
            RegionSel::Exterior => region == Region::Exterior,
            RegionSel::Defect => region == Region::Defect,
        }
    }
}

/// A boundary edge. Outer edges keep Ω on their left, defect edges keep D on their left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Conforming triangulation of the plate mid-plane with a tagged defect submesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    regions: Vec<Region>,
    boundary_edges: Vec<BoundaryEdge>,
    characteristic_size: f64,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh {
    /// Validates and builds a mesh. Boundary edges given with the wrong
    /// orientation are flipped to the convention documented on [`BoundaryEdge`].
    pub fn new(
        nodes: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
        boundary_edges: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        if triangles.len() != regions.len() {
            return Err(Error::InconsistentTags(format!(
                "{} triangles but {} region tags",
                triangles.len(),
                regions.len()
            )));
        }
        if let Some(i) = nodes.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonConforming(format!("node {i} has non-finite coordinates")));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= nodes.len()) {
                return Err(Error::NonConforming(format!("triangle {t} references a missing node")));
            }
            let a2 = signed_area2(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            if a2 <= 0.0 || !a2.is_finite() {
                return Err(Error::DegenerateTriangle(t));
            }
        }
        for e in &boundary_edges {
            if e.nodes.iter().any(|&i| i >= nodes.len()) || e.nodes[0] == e.nodes[1] {
                return Err(Error::NonConforming("boundary edge references a missing node".into()));
            }
        }

        for tag in [BoundaryTag::Outer, BoundaryTag::Defect] {
            let mut degree = HashMap::new();
            for e in boundary_edges.iter().filter(|e| e.tag == tag) {
                for &n in &e.nodes {
                    *degree.entry(n).or_insert(0usize) += 1;
                }
            }
            let mut bad: Vec<_> = degree.iter().filter(|(_, &d)| d != 2).map(|(&n, _)| n).collect();
            bad.sort_unstable();
            if let Some(&n) = bad.first() {
                return Err(Error::BoundaryNotClosed(n, tag.label()));
            }
        }

        // edge -> incident (triangle, local orientation a->b)
        let mut incidence: HashMap<(usize, usize), Vec<(usize, [usize; 2])>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                incidence.entry(edge_key(a, b)).or_default().push((t, [a, b]));
            }
        }
        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for e in &boundary_edges {
            if tagged.insert(edge_key(e.nodes[0], e.nodes[1]), e.tag).is_some() {
                return Err(Error::InconsistentTags(format!(
                    "boundary edge {:?} listed twice",
                    e.nodes
                )));
            }
        }
        for (key, inc) in &incidence {
            let expected = match inc.as_slice() {
                [_] => Some(BoundaryTag::Outer),
                [(t0, _), (t1, _)] => {
                    if regions[*t0] != regions[*t1] {
                        Some(BoundaryTag::Defect)
                    } else {
                        None
                    }
                }
                _ => {
                    return Err(Error::NonConforming(format!(
                        "edge {key:?} is shared by {} triangles",
                        inc.len()
                    )))
                }
            };
            if let [(_, o0), (_, o1)] = inc.as_slice() {
                if o0 == o1 {
                    return Err(Error::NonConforming(format!("edge {key:?} has inconsistent orientation")));
                }
            }
            if tagged.get(key).copied() != expected {
                return Err(Error::InconsistentTags(format!(
                    "edge {key:?} should be tagged {:?} but is tagged {:?}",
                    expected,
                    tagged.get(key)
                )));
            }
        }
        for key in tagged.keys() {
            if !incidence.contains_key(key) {
                return Err(Error::NonConforming(format!("boundary edge {key:?} is not a triangle edge")));
            }
        }

        let boundary_edges = boundary_edges
            .into_iter()
            .map(|e| {
                let inc = &incidence[&edge_key(e.nodes[0], e.nodes[1])];
                let owner = match e.tag {
                    BoundaryTag::Outer => inc[0],
                    BoundaryTag::Defect => *inc
                        .iter()
                        .find(|(t, _)| regions[*t] == Region::Defect)
                        .expect("defect edge borders a defect triangle"),
                };
                BoundaryEdge { nodes: owner.1, tag: e.tag }
            })
            .collect();

        let mut h: f64 = 0.0;
        for tri in &triangles {
            for k in 0..3 {
                h = h.max(nodes[tri[k]].dist(nodes[tri[(k + 1) % 3]]));
            }
        }
        Ok(Self { nodes, triangles, regions, boundary_edges, characteristic_size: h })
    }

    /// Builds a mesh whose boundary edges are derived from the triangulation:
    /// edges with one incident triangle are Outer, edges between regions are Defect.
    pub(crate) fn from_tagged_triangles(
        nodes: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
    ) -> Result<Self> {
        let mut incidence: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                incidence.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        let mut edges = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let inc = &incidence[&edge_key(a, b)];
                match inc.len() {
                    1 => edges.push(BoundaryEdge { nodes: [a, b], tag: BoundaryTag::Outer }),
                    2 if regions[t] == Region::Defect => {
                        let other = if inc[0] == t { inc[1] } else { inc[0] };
                        if regions[other] == Region::Exterior {
                            edges.push(BoundaryEdge { nodes: [a, b], tag: BoundaryTag::Defect });
                        }
                    }
                    _ => {}
                }
            }
        }
        Self::new(nodes, triangles, regions, edges)
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Maximum edge length.
    pub fn characteristic_size(&self) -> f64 {
        self.characteristic_size
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        triangle_area(a, b, c)
    }

    pub fn centroid(&self, t: usize) -> Point2 {
        let [a, b, c] = self.triangle_points(t);
        Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    pub fn has_defect(&self) -> bool {
        self.regions.contains(&Region::Defect)
    }

    pub fn area(&self, sel: RegionSel) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| sel.contains(self.regions[t]))
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn selected_triangles(&self, sel: RegionSel) -> impl Iterator<Item = usize> + '_ {
        (0..self.triangles.len()).filter(move |&t| sel.contains(self.regions[t]))
    }

    /// Nodes touched by at least one selected triangle.
    pub fn node_mask(&self, sel: RegionSel) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for t in self.selected_triangles(sel) {
            for &n in &self.triangles[t] {
                mask[n] = true;
            }
        }
        mask
    }

    /// Nodes lying on an edge with the given tag.
    pub fn boundary_node_mask(&self, tag: BoundaryTag) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for e in self.edges_tagged(tag) {
            mask[e.nodes[0]] = true;
            mask[e.nodes[1]] = true;
        }
        mask
    }

    pub fn edges_tagged(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> + '_ {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    pub fn boundary_length(&self, tag: BoundaryTag) -> f64 {
        self.edges_tagged(tag)
            .map(|e| self.nodes[e.nodes[0]].dist(self.nodes[e.nodes[1]]))
            .sum()
    }

    /// Closed loops of the tagged boundary as ordered node lists following edge orientation.
    pub fn boundary_loops(&self, tag: BoundaryTag) -> Vec<Vec<usize>> {
        let mut next: HashMap<usize, usize> = HashMap::new();
        let mut starts = Vec::new();
        for e in self.edges_tagged(tag) {
            next.insert(e.nodes[0], e.nodes[1]);
            starts.push(e.nodes[0]);
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut loops = Vec::new();
        for s in starts {
            if seen[s] {
                continue;
            }
            let mut lp = Vec::new();
            let mut cur = s;
            while !seen[cur] {
                seen[cur] = true;
                lp.push(cur);
                cur = next[&cur];
            }
            loops.push(lp);
        }
        loops
    }

    /// Exact distance from `p` to the union of edges carrying `tag`.
    pub fn distance_to_boundary(&self, p: Point2, tag: BoundaryTag) -> f64 {
        self.edges_tagged(tag)
            .map(|e| point_segment_distance(p, self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether the triangles of the selection form one edge-connected component.
    pub fn is_connected(&self, sel: RegionSel) -> bool {
        let tris: Vec<usize> = self.selected_triangles(sel).collect();
        if tris.is_empty() {
            return false;
        }
        let mut parent: Vec<usize> = (0..self.triangles.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
        for &t in &tris {
            let tri = self.triangles[t];
            for k in 0..3 {
                let key = edge_key(tri[k], tri[(k + 1) % 3]);
                if let Some(&o) = owner.get(&key) {
                    let (ra, rb) = (find(&mut parent, o), find(&mut parent, t));
                    parent[ra] = rb;
                } else {
                    owner.insert(key, t);
                }
            }
        }
        let root = find(&mut parent, tris[0]);
        tris.iter().all(|&t| find(&mut parent, t) == root)
    }

    /// Uniform quadrisection through edge midpoints.
    ///
    /// Boundary edge `i` of the input becomes edges `2i` and `2i + 1` of the output,
    /// in the same orientation. Midpoints stay on the straight edges.
    pub fn refine(&self) -> Mesh {
        let mut nodes = self.nodes.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point2>| -> usize {
            *mid.entry(edge_key(a, b)).or_insert_with(|| {
                nodes.push(nodes[a].lerp(nodes[b], 0.5));
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        let mut regions = Vec::with_capacity(4 * self.triangles.len());
        for (tri, &region) in self.triangles.iter().zip(&self.regions) {
            let [a, b, c] = *tri;
            let ab = midpoint(a, b, &mut nodes);
            let bc = midpoint(b, c, &mut nodes);
            let ca = midpoint(c, a, &mut nodes);
            triangles.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
            regions.extend_from_slice(&[region; 4]);
        }
        let mut boundary_edges = Vec::with_capacity(2 * self.boundary_edges.len());
        for e in &self.boundary_edges {
            let m = midpoint(e.nodes[0], e.nodes[1], &mut nodes);
            boundary_edges.push(BoundaryEdge { nodes: [e.nodes[0], m], tag: e.tag });
            boundary_edges.push(BoundaryEdge { nodes: [m, e.nodes[1]], tag: e.tag });
        }
        Mesh {
            nodes,
            triangles,
            regions,
            boundary_edges,
            characteristic_size: 0.5 * self.characteristic_size,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_plate_mesh, DefectShape, DomainSpec};

    fn square(h: f64) -> Mesh {
        build_plate_mesh(&DomainSpec::unit_square(), None, h).unwrap()
    }

    #[test]
    fn refine_quadruples_and_preserves_area() {
        let m = square(0.25);
        assert_eq!(m.n_triangles(), 32);
        let r = m.refine();
        assert_eq!(r.n_triangles(), 128);
        assert!((r.area(RegionSel::All) - 1.0).abs() < 1e-14);
        // rebuilt validation agrees with the refined structure
        let rebuilt = Mesh::new(
            r.nodes().to_vec(),
            r.triangles().to_vec(),
            r.regions().to_vec(),
            r.boundary_edges().to_vec(),
        )
        .unwrap();
        assert_eq!(rebuilt, r);
    }

    #[test]
    fn refine_inherits_defect_tags() {
        let d = DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: 0.2, b: 0.2 };
        let m = build_plate_mesh(&DomainSpec::unit_square(), Some(&d), 0.05).unwrap();
        let r = m.refine();
        for t in 0..m.n_triangles() {
            for k in 0..4 {
                assert_eq!(r.regions()[4 * t + k], m.regions()[t]);
            }
        }
        assert!((r.area(RegionSel::Defect) - 0.04).abs() < 1e-14);
    }

    #[test]
    fn loops_and_connectivity() {
        let d = DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: 0.2, b: 0.2 };
        let m = build_plate_mesh(&DomainSpec::unit_square(), Some(&d), 0.1).unwrap();
        assert_eq!(m.boundary_loops(BoundaryTag::Outer).len(), 1);
        assert_eq!(m.boundary_loops(BoundaryTag::Defect).len(), 1);
        assert!(m.is_connected(RegionSel::Exterior));
        assert!(m.is_connected(RegionSel::Defect));
        assert!((m.boundary_length(BoundaryTag::Defect) - 0.8).abs() < 1e-14);
    }

    #[test]
    fn distance_matches_brute_force() {
        let m = square(0.25);
        for &(x, y) in &[(0.3, 0.6), (0.1, 0.9), (0.5, 0.5), (0.99, 0.02)] {
            let p = Point2::new(x, y);
            let brute: f64 = [x, y, 1.0 - x, 1.0 - y].into_iter().fold(f64::INFINITY, f64::min);
            assert!((m.distance_to_boundary(p, BoundaryTag::Outer) - brute).abs() < 1e-12);
        }
    }
}
