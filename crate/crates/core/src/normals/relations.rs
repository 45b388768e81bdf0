use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{Rotation3, Unit};

use crate::annotation::validate::annotated_surfaces;
use crate::annotation::{AnnotationDocument, RelationKind};
use crate::diagnostics::Warning;
use crate::partition::SurfacePartition;
use crate::{Error, Result};

use super::{ConstraintSource, Normal, NormalConstraint};

const MAX_ITERATIONS: usize = 100;
const CONVERGED_RAD: f64 = 1e-6;

/// Relation-adjusted constraints plus the final normal of each related surface.
#[derive(Debug, Clone, Default)]
pub struct RelationAdjustment {
    pub constraints: Vec<NormalConstraint>,
    /// Smooth surface id -> adjusted unit normal.
    pub surface_normals: BTreeMap<u32, Normal>,
    pub iterations: usize,
    pub warnings: Vec<Warning>,
}

struct Edge {
    relation: usize,
    a: u32,
    b: u32,
}

/// Replaces the annotated normals of related planar surfaces with the closest
/// configuration satisfying every parallel (`n_a = n_b`) and orthogonal
/// (`n_a . n_b = 0`) relation.
///
/// Parallel surfaces share one variable (union-find) initialized at the
/// spherical mean of their annotations; orthogonality is enforced by cyclic
/// symmetric projections, weighted by group size.
pub fn adjust_relative_normals(
    doc: &AnnotationDocument,
    partition: &SurfacePartition,
) -> Result<RelationAdjustment> {
    let mut out = RelationAdjustment::default();
    let annotated = annotated_surfaces(doc, partition);

    let mut parallel = Vec::new();
    let mut orthogonal = Vec::new();
    for (r, rel) in doc.relations.iter().enumerate() {
        if rel.relation == RelationKind::Neither {
            continue;
        }
        let (a, b) = match (partition.resolve_anchor(rel.a), partition.resolve_anchor(rel.b)) {
            (Ok(a), Ok(b)) => (a.smooth, b.smooth),
            (Err(e), _) | (_, Err(e)) => {
                out.warnings.push(Warning::new("relation_skipped", format!("relations[{r}]: {e}")));
                continue;
            }
        };
        if !annotated.contains_key(&a) || !annotated.contains_key(&b) {
            out.warnings.push(Warning::new(
                "relation_skipped",
                format!("relations[{r}]: a related surface has no annotated normal"),
            ));
            continue;
        }
        let edge = Edge { relation: r, a, b };
        match rel.relation {
            RelationKind::Parallel => parallel.push(edge),
            RelationKind::Orthogonal => orthogonal.push(edge),
            RelationKind::Neither => unreachable!(),
        }
    }
    if parallel.is_empty() && orthogonal.is_empty() {
        return Ok(out);
    }

    let mut surfaces: BTreeSet<u32> = BTreeSet::new();
    for e in parallel.iter().chain(&orthogonal) {
        surfaces.insert(e.a);
        surfaces.insert(e.b);
    }
    let mut uf = UnionFind::default();
    for &s in &surfaces {
        uf.add(s);
    }
    for e in &parallel {
        uf.union(e.a, e.b);
    }
    for e in &orthogonal {
        if uf.find(e.a) == uf.find(e.b) {
            let mut cycle = parallel_path(&parallel, e.a, e.b);
            cycle.push(e.relation);
            return Err(Error::RelationConflict { cycle });
        }
    }

    let surface_mean = |s: u32| -> Normal {
        let sum: Normal = annotated[&s]
            .iter()
            .map(|&i| doc.normals[i].normal().normalize())
            .sum();
        sum.normalize()
    };
    // group root -> (unit normal, member count)
    let mut groups: BTreeMap<u32, (Normal, f64)> = BTreeMap::new();
    for &s in &surfaces {
        let root = uf.find(s);
        let entry = groups.entry(root).or_insert((Normal::zeros(), 0.0));
        entry.0 += surface_mean(s);
        entry.1 += 1.0;
    }
    for (n, _) in groups.values_mut() {
        let norm = n.norm();
        *n = if norm > 1e-12 { *n / norm } else { Normal::z() };
    }

    let mut constraints_between: Vec<(u32, u32)> = orthogonal
        .iter()
        .map(|e| {
            let (ga, gb) = (uf.find(e.a), uf.find(e.b));
            (ga.min(gb), ga.max(gb))
        })
        .collect();
    constraints_between.sort_unstable();
    constraints_between.dedup();

    for iter in 0..MAX_ITERATIONS {
        out.iterations = iter + 1;
        let mut max_change: f64 = 0.0;
        for &(g, h) in &constraints_between {
            let (ng, wg) = groups[&g];
            let (nh, wh) = groups[&h];
            let angle = ng.angle(&nh);
            let delta = std::f64::consts::FRAC_PI_2 - angle;
            if delta.abs() < 1e-15 {
                continue;
            }
            let axis = rotation_axis(&ng, &nh);
            let turn_g = -delta * wh / (wg + wh);
            let turn_h = delta * wg / (wg + wh);
            let new_g = Rotation3::from_axis_angle(&axis, turn_g) * ng;
            let new_h = Rotation3::from_axis_angle(&axis, turn_h) * nh;
            max_change = max_change.max(turn_g.abs()).max(turn_h.abs());
            groups.get_mut(&g).unwrap().0 = new_g.normalize();
            groups.get_mut(&h).unwrap().0 = new_h.normalize();
        }
        if max_change < CONVERGED_RAD {
            break;
        }
    }

    for &s in &surfaces {
        let mut n = groups[&uf.find(s)].0;
        if n.z < 0.0 {
            n = -n;
        }
        out.surface_normals.insert(s, n);
        for &i in &annotated[&s] {
            if let Some(pixel) = partition.pixel_index(doc.normals[i].position()) {
                out.constraints.push(NormalConstraint {
                    pixel,
                    normal: n,
                    source: ConstraintSource::RelationAdjusted,
                });
            }
        }
    }
    Ok(out)
}

/// Axis of the rotation carrying `a` toward `b`; any perpendicular axis when collinear.
fn rotation_axis(a: &Normal, b: &Normal) -> Unit<Normal> {
    let c = a.cross(b);
    if c.norm() > 1e-12 {
        return Unit::new_normalize(c);
    }
    let helper = if a.x.abs() <= a.y.abs() && a.x.abs() <= a.z.abs() {
        Normal::x()
    } else if a.y.abs() <= a.z.abs() {
        Normal::y()
    } else {
        Normal::z()
    };
    Unit::new_normalize(a.cross(&helper))
}

/// Relation indices of a parallel-relation path from `from` to `to`.
fn parallel_path(parallel: &[Edge], from: u32, to: u32) -> Vec<usize> {
    let mut prev: BTreeMap<u32, (u32, usize)> = BTreeMap::new();
    let mut queue = VecDeque::from([from]);
    let mut seen = BTreeSet::from([from]);
    while let Some(s) = queue.pop_front() {
        if s == to {
            break;
        }
        for e in parallel {
            let next = if e.a == s {
                e.b
            } else if e.b == s {
                e.a
            } else {
                continue;
            };
            if seen.insert(next) {
                prev.insert(next, (s, e.relation));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = to;
    while let Some(&(p, r)) = prev.get(&cur) {
        path.push(r);
        cur = p;
    }
    path.reverse();
    path
}

#[derive(Default)]
struct UnionFind {
    parent: BTreeMap<u32, u32>,
}

impl UnionFind {
    fn add(&mut self, x: u32) {
        self.parent.entry(x).or_insert(x);
    }

    fn find(&mut self, x: u32) -> u32 {
        let p = self.parent[&x];
        if p == x {
            return x;
        }
        let root = self.find(p);
        self.parent.insert(x, root);
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller id becomes the root so grouping is order independent
        if ra < rb {
            self.parent.insert(rb, ra);
        } else if rb < ra {
            self.parent.insert(ra, rb);
        }
    }
}
