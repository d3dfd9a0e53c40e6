//! Quivers and the moduli spaces `N_G(Γ)`: an edge-indexed fusion of doubles
//! reduced at interior vertices. Quotients are never built; everything is
//! evaluated on points of the level set.
//!
//! Edge `e` carries `(a_e, b_e)` in the double D(G). The group at vertex `v`
//! acts by `(g_{t(e)} a_e g_{s(e)}^-1, g_{s(e)} b_e g_{s(e)}^-1)`, so the
//! moment factor of `e` is `Ad_{a_e} b_e` at `t(e)` and `b_e^-1` at `s(e)`.
//! At a vertex the factors are multiplied in a fixed order: incoming edges,
//! then outgoing edges, each by ascending (natural-order) edge id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QhamError, Result};
use crate::lie::{AlgebraElement, GroupElement, LieGroupModel};
use crate::numerics::{numerical_rank, RMat, C64};
use crate::qp::{double_bundle, SpacePoint};

/// Natural ordering: digit runs compare numerically (`e2 < e10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    fn chunks(s: &str) -> Vec<(bool, &str)> {
        let mut out = Vec::new();
        let mut start = 0;
        let bytes = s.as_bytes();
        for i in 1..=bytes.len() {
            if i == bytes.len() || bytes[i].is_ascii_digit() != bytes[start].is_ascii_digit() {
                out.push((bytes[start].is_ascii_digit(), &s[start..i]));
                start = i;
            }
        }
        out
    }
    if a.is_empty() || b.is_empty() {
        return a.cmp(b);
    }
    for (x, y) in chunks(a).iter().zip(chunks(b).iter()) {
        let ord = match (x.0, y.0) {
            (true, true) => {
                let (tx, ty) = (x.1.trim_start_matches('0'), y.1.trim_start_matches('0'));
                tx.len().cmp(&ty.len()).then(tx.cmp(ty)).then(x.1.len().cmp(&y.1.len()))
            }
            _ => x.1.cmp(y.1),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    chunks(a).len().cmp(&chunks(b).len())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: String,
    pub src: String,
    pub dst: String,
}

/// A quiver in the JSON layout `{"vertices": [...], "edges": [{id, src, dst}]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Quiver {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuiverInvariants {
    pub n_edges: usize,
    pub n_interior: usize,
    pub m: usize,
    pub n: usize,
    pub genus: i64,
    /// `dim N_G(Γ) / dim G`.
    pub dim_units: i64,
}

impl QuiverInvariants {
    pub fn dim_n(&self, dim_g: usize) -> i64 {
        self.dim_units * dim_g as i64
    }
}

/// Boundary split: sources `∂⁻`, targets `∂⁺`, interior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundarySplit {
    pub incoming: Vec<String>,
    pub outgoing: Vec<String>,
    pub interior: Vec<String>,
}

impl Quiver {
    pub fn new(vertices: &[&str], edges: &[(&str, &str, &str)]) -> Self {
        Self {
            vertices: vertices.iter().map(|s| s.to_string()).collect(),
            edges: edges
                .iter()
                .map(|(id, s, t)| Edge {
                    id: id.to_string(),
                    src: s.to_string(),
                    dst: t.to_string(),
                })
                .collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let q: Quiver = serde_json::from_str(text).map_err(|e| QhamError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        q.validate()?;
        Ok(q)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("quiver serializes")
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty() && self.edges.is_empty()
    }

    /// Edges sorted by natural id order.
    pub fn sorted_edges(&self) -> Vec<&Edge> {
        let mut e: Vec<&Edge> = self.edges.iter().collect();
        e.sort_by(|a, b| natural_cmp(&a.id, &b.id));
        e
    }

    pub fn degree(&self, v: &str) -> usize {
        self.edges
            .iter()
            .map(|e| (e.src == v) as usize + (e.dst == v) as usize)
            .sum()
    }

    fn structural_check(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for v in &self.vertices {
            if !seen.insert(v.as_str()) {
                return Err(QhamError::InvalidQuiver(format!("duplicate vertex `{v}`")));
            }
        }
        let mut ids = HashSet::new();
        for e in &self.edges {
            if !ids.insert(e.id.as_str()) {
                return Err(QhamError::InvalidQuiver(format!("duplicate edge `{}`", e.id)));
            }
            for v in [&e.src, &e.dst] {
                if !seen.contains(v.as_str()) {
                    return Err(QhamError::InvalidQuiver(format!("edge `{}` uses unknown vertex `{v}`", e.id)));
                }
            }
        }
        for v in &self.vertices {
            if self.degree(v) == 0 {
                return Err(QhamError::InvalidQuiver(format!("isolated vertex `{v}`")));
            }
        }
        Ok(())
    }

    pub fn boundary_split(&self) -> Result<BoundarySplit> {
        self.structural_check()?;
        let mut split = BoundarySplit {
            incoming: Vec::new(),
            outgoing: Vec::new(),
            interior: Vec::new(),
        };
        for v in &self.vertices {
            if self.degree(v) == 1 {
                if self.edges.iter().any(|e| &e.src == v) {
                    split.incoming.push(v.clone());
                } else {
                    split.outgoing.push(v.clone());
                }
            } else {
                split.interior.push(v.clone());
            }
        }
        for list in [&mut split.incoming, &mut split.outgoing, &mut split.interior] {
            list.sort_by(|a, b| natural_cmp(a, b));
        }
        Ok(split)
    }

    pub fn validate(&self) -> Result<QuiverInvariants> {
        let split = self.boundary_split()?;
        let e = self.edges.len() as i64;
        let int = split.interior.len() as i64;
        let (m, n) = (split.incoming.len() as i64, split.outgoing.len() as i64);
        Ok(QuiverInvariants {
            n_edges: self.edges.len(),
            n_interior: split.interior.len(),
            m: split.incoming.len(),
            n: split.outgoing.len(),
            genus: e - int - m - n + 1,
            dim_units: 2 * (e - int),
        })
    }

    pub fn is_connected(&self) -> bool {
        if self.vertices.is_empty() {
            return true;
        }
        let adj = self.adjacency();
        let mut seen = HashSet::new();
        let mut queue = VecDeque::from([self.vertices[0].as_str()]);
        seen.insert(self.vertices[0].as_str());
        while let Some(v) = queue.pop_front() {
            for (_, w) in adj.get(v).into_iter().flatten() {
                if seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Connected components, each with vertices in the original order.
    pub fn connected_components(&self) -> Vec<Quiver> {
        let adj = self.adjacency();
        let mut seen: HashSet<&str> = HashSet::new();
        let mut out = Vec::new();
        for start in &self.vertices {
            if !seen.insert(start.as_str()) {
                continue;
            }
            let mut members: HashSet<&str> = HashSet::from([start.as_str()]);
            let mut queue = VecDeque::from([start.as_str()]);
            while let Some(v) = queue.pop_front() {
                for (_, w) in adj.get(v).into_iter().flatten() {
                    if seen.insert(w) {
                        members.insert(w);
                        queue.push_back(w);
                    }
                }
            }
            out.push(Quiver {
                vertices: self.vertices.iter().filter(|v| members.contains(v.as_str())).cloned().collect(),
                edges: self.edges.iter().filter(|e| members.contains(e.src.as_str())).cloned().collect(),
            });
        }
        out
    }

    /// Vertex -> (edge, other endpoint) in natural edge order.
    fn adjacency(&self) -> HashMap<&str, Vec<(&Edge, &str)>> {
        let mut adj: HashMap<&str, Vec<(&Edge, &str)>> = HashMap::new();
        for e in self.sorted_edges() {
            adj.entry(e.src.as_str()).or_default().push((e, e.dst.as_str()));
            if e.src != e.dst {
                adj.entry(e.dst.as_str()).or_default().push((e, e.src.as_str()));
            }
        }
        adj
    }

    /// Moment factors at `v` in product order: `(edge, incoming?)`.
    fn vertex_factors(&self, v: &str) -> Vec<(&Edge, bool)> {
        let edges = self.sorted_edges();
        let mut out: Vec<(&Edge, bool)> = edges.iter().filter(|e| e.dst == v).map(|e| (*e, true)).collect();
        out.extend(edges.iter().filter(|e| e.src == v).map(|e| (*e, false)));
        out
    }
}

/// Edge-indexed point of the fused doubles.
#[derive(Debug, Clone, PartialEq)]
pub struct QuiverPoint {
    pub a: BTreeMap<String, GroupElement>,
    pub b: BTreeMap<String, GroupElement>,
}

impl QuiverPoint {
    fn get(&self, id: &str) -> Result<(&GroupElement, &GroupElement)> {
        match (self.a.get(id), self.b.get(id)) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(QhamError::DimensionMismatch {
                expected: 1,
                got: 0,
            }),
        }
    }

    /// Action of vertex group elements (missing vertices act trivially).
    pub fn act(&self, q: &Quiver, model: &LieGroupModel, g: &BTreeMap<String, GroupElement>) -> Result<Self> {
        let id = model.identity();
        let at = |v: &str| g.get(v).unwrap_or(&id).clone();
        let mut out = self.clone();
        for e in &q.edges {
            let (a, b) = self.get(&e.id)?;
            let (gt, gs) = (at(&e.dst), at(&e.src));
            out.a.insert(e.id.clone(), model.mul(&model.mul(&gt, a), &model.inv(&gs)));
            out.b.insert(e.id.clone(), model.mul(&model.mul(&gs, b), &model.inv(&gs)));
        }
        Ok(out)
    }
}

fn factor_value(model: &LieGroupModel, a: &GroupElement, b: &GroupElement, incoming: bool) -> GroupElement {
    if incoming {
        model.mul(&model.mul(a, b), &model.inv(a))
    } else {
        model.inv(b)
    }
}

/// Moment value at every vertex.
pub fn vertex_moment(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint) -> Result<BTreeMap<String, GroupElement>> {
    q.structural_check()?;
    let mut out = BTreeMap::new();
    for v in &q.vertices {
        let mut acc = model.identity();
        for (e, incoming) in q.vertex_factors(v) {
            let (a, b) = p.get(&e.id)?;
            acc = model.mul(&acc, &factor_value(model, a, b, incoming));
        }
        out.insert(v.clone(), acc);
    }
    Ok(out)
}

/// `prod_{t(e) = v} Ad_{a_e} b_e prod_{s(e) = v} b_e^-1` at interior vertices.
pub fn fused_moment(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint) -> Result<BTreeMap<String, GroupElement>> {
    let split = q.boundary_split()?;
    let mut all = vertex_moment(q, model, p)?;
    all.retain(|v, _| split.interior.contains(v));
    Ok(all)
}

/// Boundary moment: `b_e^-1` at sources, `Ad_{a_e} b_e` at targets.
pub fn residual_moment(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint) -> Result<BTreeMap<String, GroupElement>> {
    let split = q.boundary_split()?;
    let mut all = vertex_moment(q, model, p)?;
    all.retain(|v, _| !split.interior.contains(v));
    Ok(all)
}

/// Largest distance of the interior moment values from the identity.
pub fn level_set_residual(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint) -> Result<f64> {
    let e = model.identity();
    Ok(fused_moment(q, model, p)?
        .values()
        .map(|g| model.distance(g, &e))
        .fold(0.0, f64::max))
}

/// Sign of the fusion correction in [`fused_form`], fixed by requiring the
/// fused form to satisfy the moment-map condition with the vertex moments.
pub const FUSION_SIGN: f64 = 1.0;

/// The fused two-form on left-trivialized tangents. Each tangent stacks
/// `(alpha_e, beta_e)` per edge in natural edge order.
///
/// `sum_e omega_e + 1/2 sum_v sum_j <(u_1..u_{j-1})*theta^L ^ u_j*theta^R>`
/// over the moment factors `u_j` at each vertex.
pub fn fused_form(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint, v1: &DVector<f64>, v2: &DVector<f64>) -> Result<f64> {
    let f = |x: &DVector<f64>, y: &DVector<f64>| half_fused_form(q, model, p, x, y);
    Ok(f(v1, v2)? - f(v2, v1)?)
}

/// One half of the antisymmetric expression in [`fused_form`].
fn half_fused_form(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint, v1: &DVector<f64>, v2: &DVector<f64>) -> Result<f64> {
    let n = model.dim();
    let edges = q.sorted_edges();
    let total = 2 * n * edges.len();
    for v in [v1, v2] {
        if v.len() != total {
            return Err(QhamError::DimensionMismatch {
                expected: total,
                got: v.len(),
            });
        }
    }
    let d = double_bundle(model);
    let index: HashMap<&str, usize> = edges.iter().enumerate().map(|(i, e)| (e.id.as_str(), i)).collect();
    let mut acc = 0.0;
    let mut dmu: HashMap<&str, RMat> = HashMap::new();
    for (i, e) in edges.iter().enumerate() {
        let (a, b) = p.get(&e.id)?;
        let pt = SpacePoint::Group(vec![a.clone(), b.clone()]);
        let x = v1.rows(2 * n * i, 2 * n).into_owned();
        let y = v2.rows(2 * n * i, 2 * n).into_owned();
        // omega_left is antisymmetric, so half of it goes in each half.
        acc += 0.5 * d.omega_left(&pt, &x, &y)?;
        dmu.insert(e.id.as_str(), d.moment_differential(&pt)?);
    }
    for v in &q.vertices {
        let factors = q.vertex_factors(v);
        // Left-trivialized differential of the running product.
        let mut prefix_l1 = DVector::<f64>::zeros(n);
        let mut prefix = model.identity();
        for (e, incoming) in factors {
            let i = index[e.id.as_str()];
            let (a, b) = p.get(&e.id)?;
            let u = factor_value(model, a, b, incoming);
            let rows = if incoming { 0 } else { n };
            let m = dmu[e.id.as_str()].rows(rows, n).into_owned();
            let du_l = |w: &DVector<f64>| &m * w.rows(2 * n * i, 2 * n).into_owned();
            let du_r2 = model.ad_group_matrix(&u) * du_l(v2);
            acc += 0.5 * FUSION_SIGN * prefix_l1.dot(&du_r2);
            // theta^L of (prefix * u) = Ad_{u^-1} theta^L(prefix) + theta^L(u)
            prefix_l1 = model.ad_group_matrix(&model.inv(&u)) * prefix_l1 + du_l(v1);
            prefix = model.mul(&prefix, &u);
        }
        let _ = prefix;
    }
    Ok(acc)
}

/// Left-trivialized fundamental fields of the vertex group on the edge data,
/// one column per `(vertex, basis index)` in vertex-list order.
pub fn vertex_fundamental_matrix(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint) -> Result<RMat> {
    let n = model.dim();
    let edges = q.sorted_edges();
    let vindex: HashMap<&str, usize> = q.vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    let mut out = RMat::zeros(2 * n * edges.len(), n * q.vertices.len());
    for (i, e) in edges.iter().enumerate() {
        let (a, b) = p.get(&e.id)?;
        let ad_ai = model.ad_group_matrix(&model.inv(a));
        let ad_bi = model.ad_group_matrix(&model.inv(b));
        let (t, s) = (vindex[e.dst.as_str()], vindex[e.src.as_str()]);
        let r = 2 * n * i;
        // alpha = -Ad_{a^-1} x_t + x_s, beta = x_s - Ad_{b^-1} x_s
        for k in 0..n {
            for l in 0..n {
                out[(r + k, t * n + l)] -= ad_ai[(k, l)];
                out[(r + n + k, s * n + l)] -= ad_bi[(k, l)];
            }
            out[(r + k, s * n + k)] += 1.0;
            out[(r + n + k, s * n + k)] += 1.0;
        }
    }
    Ok(out)
}

/// Residual of `iota(x_M) eta = s sum_v <mu_v*(theta^L + theta^R), x_v>`
/// for the full vertex group, at scale `s`.
pub fn fused_moment_axiom_residual(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint, x: &DVector<f64>, scale: f64) -> Result<f64> {
    let n = model.dim();
    let dim = 2 * n * q.edges.len();
    let xm = vertex_fundamental_matrix(q, model, p)? * x;
    let mom = vertex_moment(q, model, p)?;
    let jac = vertex_moment_jacobian(q, model, p, &q.vertices)?;
    let mut worst: f64 = 0.0;
    for k in 0..dim {
        let mut ek = DVector::zeros(dim);
        ek[k] = 1.0;
        let lhs = fused_form(q, model, p, &xm, &ek)?;
        let col = jac.column(k);
        let mut rhs = 0.0;
        for (vi, v) in q.vertices.iter().enumerate() {
            let u = &mom[v];
            let l = col.rows(vi * n, n).into_owned();
            let sum = &l + model.ad_group_matrix(u) * &l;
            rhs += sum.dot(&x.rows(vi * n, n).into_owned());
        }
        worst = worst.max((lhs - scale * rhs).abs());
    }
    Ok(worst)
}

/// Left-trivialized FD Jacobian of the vertex moments at `vertices`.
pub fn vertex_moment_jacobian(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint, vertices: &[String]) -> Result<RMat> {
    let n = model.dim();
    let edges = q.sorted_edges();
    let base = vertex_moment(q, model, p)?;
    let h = 1e-5;
    let mut jac = RMat::zeros(n * vertices.len(), 2 * n * edges.len());
    for (i, e) in edges.iter().enumerate() {
        for slot in 0..2 {
            for k in 0..n {
                let mut xi = DVector::zeros(n);
                let eval = |s: f64, xi: &mut DVector<f64>| -> Result<BTreeMap<String, GroupElement>> {
                    xi.fill(0.0);
                    xi[k] = s;
                    let mut pp = p.clone();
                    let map = if slot == 0 { &mut pp.a } else { &mut pp.b };
                    let g = map[&e.id].clone();
                    map.insert(e.id.clone(), model.mul(&g, &model.exp(xi)));
                    vertex_moment(q, model, &pp)
                };
                let diff = |s: f64, xi: &mut DVector<f64>| -> Result<Vec<DVector<f64>>> {
                    let plus = eval(s, xi)?;
                    let minus = eval(-s, xi)?;
                    Ok(vertices
                        .iter()
                        .map(|v| {
                            let d = (plus[v].matrix() - minus[v].matrix()) / C64::new(2.0 * s, 0.0);
                            model.coords(&(base[v].matrix().adjoint() * d))
                        })
                        .collect())
                };
                let d1 = diff(h, &mut xi)?;
                let d2 = diff(h / 2.0, &mut xi)?;
                let col = 2 * n * i + slot * n + k;
                for (vi, (x1, x2)) in d1.iter().zip(&d2).enumerate() {
                    let r = (x2 * 4.0 - x1) / 3.0;
                    jac.view_mut((vi * n, col), (n, 1)).copy_from(&r);
                }
            }
        }
    }
    Ok(jac)
}

/// Numerical rank of the FD Jacobian of the interior moment map.
pub fn moment_jacobian_rank(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint, tol: f64) -> Result<usize> {
    let split = q.boundary_split()?;
    if split.interior.is_empty() {
        return Ok(0);
    }
    let jac = vertex_moment_jacobian(q, model, p, &split.interior)?;
    Ok(numerical_rank(&jac, tol))
}

/// Random point of the level set `mu = 1` at every interior vertex.
///
/// Every edge gets random `(a, b)` except one spanning-tree edge per interior
/// vertex (its parent edge towards the root, a boundary vertex). Vertices are
/// solved deepest first: writing the vertex product as `A f B` with `f` the
/// parent-edge factor, `f = A^-1 B^-1`.
pub fn sample_level_set<R: Rng>(q: &Quiver, model: &LieGroupModel, rng: &mut R, root: Option<&str>) -> Result<QuiverPoint> {
    let split = q.boundary_split()?;
    if !q.is_connected() {
        return Err(QhamError::InvalidQuiver("quiver is disconnected".into()));
    }
    let boundary: Vec<&String> = split.incoming.iter().chain(&split.outgoing).collect();
    if boundary.is_empty() {
        return Err(QhamError::InvalidQuiver("closed quiver has no boundary".into()));
    }
    let root = match root {
        Some(r) => {
            if !boundary.iter().any(|b| b.as_str() == r) {
                return Err(QhamError::InvalidQuiver(format!("root `{r}` is not a boundary vertex")));
            }
            r.to_string()
        }
        None => {
            let mut b: Vec<&String> = boundary.clone();
            b.sort_by(|x, y| natural_cmp(x, y));
            b[0].clone()
        }
    };
    let mut p = QuiverPoint {
        a: BTreeMap::new(),
        b: BTreeMap::new(),
    };
    for e in q.sorted_edges() {
        p.a.insert(e.id.clone(), model.random_group(rng));
        p.b.insert(e.id.clone(), model.random_group(rng));
    }
    // BFS tree from the root.
    let adj = q.adjacency();
    let mut parent: HashMap<String, String> = HashMap::new();
    let mut depth: HashMap<String, usize> = HashMap::from([(root.clone(), 0)]);
    let mut queue = VecDeque::from([root.clone()]);
    while let Some(v) = queue.pop_front() {
        for (e, w) in adj.get(v.as_str()).into_iter().flatten() {
            if !depth.contains_key(*w) {
                depth.insert(w.to_string(), depth[&v] + 1);
                parent.insert(w.to_string(), e.id.clone());
                queue.push_back(w.to_string());
            }
        }
    }
    let mut order: Vec<&String> = split.interior.iter().collect();
    order.sort_by(|x, y| depth[*y].cmp(&depth[*x]).then(natural_cmp(x, y)));
    for v in order {
        let f = &parent[v];
        let factors = q.vertex_factors(v);
        let pos = factors
            .iter()
            .position(|(e, _)| &e.id == f)
            .expect("parent edge is incident");
        let value = |(e, inc): &(&Edge, bool), p: &QuiverPoint| {
            let (a, b) = p.get(&e.id).expect("point covers edges");
            factor_value(model, a, b, *inc)
        };
        let mut left = model.identity();
        for fac in &factors[..pos] {
            left = model.mul(&left, &value(fac, &p));
        }
        let mut right = model.identity();
        for fac in &factors[pos + 1..] {
            right = model.mul(&right, &value(fac, &p));
        }
        let x = model.mul(&model.inv(&left), &model.inv(&right));
        let (e, incoming) = factors[pos];
        let a = p.a[&e.id].clone();
        let b = if incoming {
            model.mul(&model.mul(&model.inv(&a), &x), &a)
        } else {
            model.inv(&x)
        };
        p.b.insert(e.id.clone(), reunitarize(model, b));
    }
    Ok(p)
}

fn reunitarize(model: &LieGroupModel, g: GroupElement) -> GroupElement {
    model.element(g.matrix().clone()).unwrap_or(g)
}

/// Candidate stabilizer at a point.
#[derive(Debug, Clone, Serialize)]
pub struct StabilizerResult {
    /// Interior vertex -> distance of g_v from the identity.
    pub deviation: BTreeMap<String, f64>,
    pub is_identity: bool,
    /// Largest residual of the stabilizer equations.
    pub residual: f64,
    #[serde(skip)]
    pub assignment: BTreeMap<String, GroupElement>,
}

/// Propagates `g_{t(e)} = a_e g_{s(e)} a_e^-1` (and its inverse) from the
/// boundary, where the group parameter is trivial, and checks the full
/// stabilizer equations.
pub fn stabilizer_propagate(q: &Quiver, model: &LieGroupModel, p: &QuiverPoint) -> Result<StabilizerResult> {
    let split = q.boundary_split()?;
    if split.incoming.is_empty() && split.outgoing.is_empty() {
        return Err(QhamError::InvalidQuiver("closed quiver: no boundary to seed from".into()));
    }
    if !q.is_connected() {
        return Err(QhamError::InvalidQuiver("quiver is disconnected".into()));
    }
    let mut g: HashMap<String, GroupElement> = HashMap::new();
    let mut queue = VecDeque::new();
    for v in split.incoming.iter().chain(&split.outgoing) {
        g.insert(v.clone(), model.identity());
        queue.push_back(v.clone());
    }
    let adj = q.adjacency();
    while let Some(v) = queue.pop_front() {
        for (e, w) in adj.get(v.as_str()).into_iter().flatten() {
            if g.contains_key(*w) {
                continue;
            }
            let a = &p.a[&e.id];
            let gv = &g[&v];
            let gw = if e.src == v {
                model.mul(&model.mul(a, gv), &model.inv(a))
            } else {
                model.mul(&model.mul(&model.inv(a), gv), a)
            };
            g.insert(w.to_string(), gw);
            queue.push_back(w.to_string());
        }
    }
    let mut residual: f64 = 0.0;
    for e in &q.edges {
        let (a, b) = p.get(&e.id)?;
        let (gt, gs) = (&g[&e.dst], &g[&e.src]);
        let a2 = model.mul(&model.mul(gt, a), &model.inv(gs));
        let b2 = model.mul(&model.mul(gs, b), &model.inv(gs));
        residual = residual.max(model.distance(&a2, a)).max(model.distance(&b2, b));
    }
    let e = model.identity();
    let mut deviation = BTreeMap::new();
    let mut assignment = BTreeMap::new();
    for v in &split.interior {
        deviation.insert(v.clone(), model.distance(&g[v], &e));
        assignment.insert(v.clone(), g[v].clone());
    }
    let is_identity = deviation.values().all(|d| *d < 1e-12);
    Ok(StabilizerResult {
        deviation,
        is_identity,
        residual,
        assignment,
    })
}

/// Identified boundary vertices: target of Γ₁ -> source of Γ₂.
pub type Matching = BTreeMap<String, String>;

/// Glues `∂Γ₁⁺` to `∂Γ₂⁻`. Vertex and edge ids are prefixed `1:` and `2:`;
/// an identified pair becomes the vertex `1:v=2:w`.
pub fn glue(q1: &Quiver, q2: &Quiver, matching: &Matching) -> Result<Quiver> {
    let s1 = q1.boundary_split()?;
    let s2 = q2.boundary_split()?;
    let keys: BTreeSet<&String> = matching.keys().collect();
    let want: BTreeSet<&String> = s1.outgoing.iter().collect();
    if keys != want {
        return Err(QhamError::InvalidMorphism("matching must cover the outgoing boundary of the first quiver".into()));
    }
    let vals: BTreeSet<&String> = matching.values().collect();
    if vals.len() != matching.len() || vals.iter().any(|v| !s2.incoming.contains(v)) {
        return Err(QhamError::InvalidMorphism("matching must be injective into the incoming boundary of the second quiver".into()));
    }
    if vals.len() != s2.incoming.len() {
        return Err(QhamError::InvalidMorphism("matching must be onto the incoming boundary of the second quiver".into()));
    }
    let inverse: HashMap<&String, &String> = matching.iter().map(|(k, v)| (v, k)).collect();
    let name1 = |v: &String| match matching.get(v) {
        Some(w) => format!("1:{v}=2:{w}"),
        None => format!("1:{v}"),
    };
    let name2 = |w: &String| match inverse.get(w) {
        Some(v) => format!("1:{v}=2:{w}"),
        None => format!("2:{w}"),
    };
    let mut out = Quiver::default();
    for v in &q1.vertices {
        out.vertices.push(name1(v));
    }
    for w in &q2.vertices {
        if !inverse.contains_key(w) {
            out.vertices.push(name2(w));
        }
    }
    for e in &q1.edges {
        out.edges.push(Edge {
            id: format!("1:{}", e.id),
            src: name1(&e.src),
            dst: name1(&e.dst),
        });
    }
    for e in &q2.edges {
        out.edges.push(Edge {
            id: format!("2:{}", e.id),
            src: name2(&e.src),
            dst: name2(&e.dst),
        });
    }
    Ok(out)
}

/// Contracts an edge between two distinct interior vertices: the edge and
/// its target `v2` are removed and every other occurrence of `v2` (as source
/// or target) is replaced by the source `v1`.
pub fn contract_edge(q: &Quiver, edge: &str) -> Result<Quiver> {
    let split = q.boundary_split()?;
    let e0 = q
        .edges
        .iter()
        .find(|e| e.id == edge)
        .ok_or_else(|| QhamError::InvalidQuiver(format!("no edge `{edge}`")))?;
    if e0.src == e0.dst {
        return Err(QhamError::InvalidQuiver(format!("edge `{edge}` is a loop")));
    }
    if !split.interior.contains(&e0.src) || !split.interior.contains(&e0.dst) {
        return Err(QhamError::InvalidQuiver(format!("edge `{edge}` touches the boundary")));
    }
    let (v1, v2) = (e0.src.clone(), e0.dst.clone());
    let rename = |v: &String| if *v == v2 { v1.clone() } else { v.clone() };
    Ok(Quiver {
        vertices: q.vertices.iter().filter(|v| **v != v2).cloned().collect(),
        edges: q
            .edges
            .iter()
            .filter(|e| e.id != edge)
            .map(|e| Edge {
                id: e.id.clone(),
                src: rename(&e.src),
                dst: rename(&e.dst),
            })
            .collect(),
    })
}

/// Edges eligible for contraction, in natural order.
pub fn contractible_edges(q: &Quiver) -> Result<Vec<String>> {
    let split = q.boundary_split()?;
    Ok(q
        .sorted_edges()
        .into_iter()
        .filter(|e| e.src != e.dst && split.interior.contains(&e.src) && split.interior.contains(&e.dst))
        .map(|e| e.id.clone())
        .collect())
}

/// Contracts the first eligible edge until none remains; returns the result
/// and the number of contractions.
pub fn normalize(q: &Quiver) -> Result<(Quiver, usize)> {
    let mut cur = q.clone();
    let mut steps = 0;
    while let Some(e) = contractible_edges(&cur)?.into_iter().next() {
        cur = contract_edge(&cur, &e)?;
        steps += 1;
    }
    Ok((cur, steps))
}

#[derive(Debug, Clone, Serialize)]
pub struct Removal {
    pub quiver: Quiver,
    /// The neighbour was left isolated and removed too.
    pub degenerate: bool,
    /// The neighbour had degree 2 and became a boundary vertex.
    pub neighbour_became_boundary: bool,
    /// `dim N` before minus after, in units of `dim G`.
    pub dim_drop_units: i64,
}

/// Removes a boundary vertex and its edge.
pub fn remove_boundary_vertex(q: &Quiver, v0: &str) -> Result<Removal> {
    let before = q.validate()?;
    if q.degree(v0) != 1 {
        return Err(QhamError::InvalidQuiver(format!("`{v0}` is not a boundary vertex")));
    }
    let e = q.edges.iter().find(|e| e.src == v0 || e.dst == v0).expect("degree 1");
    let w = if e.src == v0 { e.dst.clone() } else { e.src.clone() };
    let w_degree = q.degree(&w);
    let mut out = Quiver {
        vertices: q.vertices.iter().filter(|v| v.as_str() != v0).cloned().collect(),
        edges: q.edges.iter().filter(|x| x.id != e.id).cloned().collect(),
    };
    let degenerate = w_degree == 1;
    if degenerate {
        out.vertices.retain(|v| *v != w);
    }
    let after = if out.is_empty() { 0 } else { out.validate()?.dim_units };
    Ok(Removal {
        quiver: out,
        degenerate,
        neighbour_became_boundary: w_degree == 2,
        dim_drop_units: before.dim_units - after,
    })
}

/// Random connected quiver with nonempty boundary on at most `max_vertices`
/// vertices: a random interior core (spanning tree plus extra edges and
/// loops) with boundary legs.
pub fn random_quiver<R: Rng>(rng: &mut R, max_vertices: usize) -> Quiver {
    let max_vertices = max_vertices.max(2);
    if max_vertices == 2 || rng.gen_bool(0.05) {
        return Quiver::new(&["in", "out"], &[("e1", "in", "out")]);
    }
    let legs = rng.gen_range(1..=(max_vertices - 1).min(4));
    let k = rng.gen_range(1..=(max_vertices - legs));
    let interior: Vec<String> = (1..=k).map(|i| format!("v{i}")).collect();
    let mut edges: Vec<(String, String)> = Vec::new();
    for i in 1..k {
        let j = rng.gen_range(0..i);
        let (s, t) = if rng.gen_bool(0.5) { (i, j) } else { (j, i) };
        edges.push((interior[s].clone(), interior[t].clone()));
    }
    for i in 0..k {
        for j in 0..k {
            if rng.gen_bool(0.15) {
                edges.push((interior[i].clone(), interior[j].clone()));
            }
        }
    }
    let mut vertices = interior.clone();
    for l in 0..legs {
        let v = interior.choose(rng).unwrap().clone();
        if rng.gen_bool(0.5) {
            let name = format!("in{}", l + 1);
            edges.push((name.clone(), v));
            vertices.push(name);
        } else {
            let name = format!("out{}", l + 1);
            edges.push((v, name.clone()));
            vertices.push(name);
        }
    }
    // Interior vertices need degree >= 2.
    for v in &interior {
        let deg: usize = edges.iter().map(|(s, t)| (s == v) as usize + (t == v) as usize).sum();
        if deg < 2 {
            edges.push((v.clone(), v.clone()));
        }
    }
    Quiver {
        vertices,
        edges: edges
            .into_iter()
            .enumerate()
            .map(|(i, (s, t))| Edge {
                id: format!("e{}", i + 1),
                src: s,
                dst: t,
            })
            .collect(),
    }
}

/// Algebra element coordinates of a point's edge data, for tests and output.
pub fn point_coordinates(model: &LieGroupModel, q: &Quiver, p: &QuiverPoint) -> Result<Vec<(String, AlgebraElement, AlgebraElement)>> {
    q.sorted_edges()
        .iter()
        .map(|e| {
            let (a, b) = p.get(&e.id)?;
            Ok((e.id.clone(), model.log(a)?, model.log(b)?))
        })
        .collect()
}
