//! Two-dimensional cobordisms in normal form and the functor to
//! quasi-Hamiltonian dimension records.
//!
//! A morphism `m -> n` is a list of connected components. Each component has
//! a genus and the sets of source and target circle positions it touches.
//! Since the wiring is carried by the position sets, two morphisms are equal
//! iff their sorted component lists agree.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::error::{QhamError, Result};
use crate::lie::LieGroupModel;
use crate::quiver::{glue, Edge, Matching, Quiver};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Component {
    pub genus: i64,
    #[serde(rename = "in")]
    pub ins: BTreeSet<usize>,
    #[serde(rename = "out")]
    pub outs: BTreeSet<usize>,
}

impl Component {
    pub fn is_closed(&self) -> bool {
        self.ins.is_empty() && self.outs.is_empty()
    }

    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus - self.ins.len() as i64 - self.outs.len() as i64
    }

    fn sort_key(&self) -> (Option<usize>, Option<usize>, i64, Vec<usize>, Vec<usize>) {
        (
            self.ins.iter().next().copied(),
            self.outs.iter().next().copied(),
            self.genus,
            self.ins.iter().copied().collect(),
            self.outs.iter().copied().collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CobMorphism {
    pub source: usize,
    pub target: usize,
    pub components: Vec<Component>,
    /// Gluing steps that produced this morphism; empty for tensor products
    /// of generators.
    #[serde(skip)]
    pub log: Vec<String>,
}

impl PartialEq for CobMorphism {
    fn eq(&self, other: &Self) -> bool {
        self.source == other.source && self.target == other.target && self.components == other.components
    }
}

impl fmt::Display for CobMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{} [", self.source, self.target)?;
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "g{} in{:?} out{:?}", c.genus, c.ins, c.outs)?;
        }
        write!(f, "]")
    }
}

impl CobMorphism {
    fn from_components(source: usize, target: usize, mut components: Vec<Component>, log: Vec<String>) -> Self {
        components.sort_by_key(|c| c.sort_key());
        Self {
            source,
            target,
            components,
            log,
        }
    }

    fn cylinders(n: usize, wiring: &[usize]) -> Self {
        let comps = (0..n)
            .map(|i| Component {
                genus: 0,
                ins: BTreeSet::from([i]),
                outs: BTreeSet::from([wiring[i]]),
            })
            .collect();
        Self::from_components(n, n, comps, Vec::new())
    }

    pub fn identity(n: usize) -> Self {
        Self::cylinders(n, &(0..n).collect::<Vec<_>>())
    }

    pub fn has_closed_component(&self) -> bool {
        self.components.iter().any(Component::is_closed)
    }

    /// Checks that legs partition the source and target positions.
    pub fn check(&self) -> Result<()> {
        let mut ins = BTreeSet::new();
        let mut outs = BTreeSet::new();
        for c in &self.components {
            if c.genus < 0 {
                return Err(QhamError::InvalidMorphism("negative genus".into()));
            }
            for i in &c.ins {
                if !ins.insert(*i) {
                    return Err(QhamError::InvalidMorphism(format!("source position {i} used twice")));
                }
            }
            for o in &c.outs {
                if !outs.insert(*o) {
                    return Err(QhamError::InvalidMorphism(format!("target position {o} used twice")));
                }
            }
        }
        if ins != (0..self.source).collect() || outs != (0..self.target).collect() {
            return Err(QhamError::InvalidMorphism("legs do not cover the boundary".into()));
        }
        Ok(())
    }
}

/// Generator by name: `cup`, `cap`, `pants`, `copants`, `cyl`, `swap`, or `id<n>`.
pub fn generator(name: &str) -> Result<CobMorphism> {
    let comp = |ins: &[usize], outs: &[usize]| Component {
        genus: 0,
        ins: ins.iter().copied().collect(),
        outs: outs.iter().copied().collect(),
    };
    let one = |s: usize, t: usize, c: Component| CobMorphism::from_components(s, t, vec![c], Vec::new());
    Ok(match name {
        "cup" => one(1, 0, comp(&[0], &[])),
        "cap" => one(0, 1, comp(&[], &[0])),
        "pants" => one(2, 1, comp(&[0, 1], &[0])),
        "copants" => one(1, 2, comp(&[0], &[0, 1])),
        "cyl" => CobMorphism::identity(1),
        "swap" => CobMorphism::cylinders(2, &[1, 0]),
        _ => match name.strip_prefix("id").and_then(|n| n.trim().parse::<usize>().ok()) {
            Some(n) => CobMorphism::identity(n),
            None => return Err(QhamError::InvalidMorphism(format!("unknown generator `{name}`"))),
        },
    })
}

pub fn tensor(m1: &CobMorphism, m2: &CobMorphism) -> CobMorphism {
    let mut comps = m1.components.clone();
    for c in &m2.components {
        comps.push(Component {
            genus: c.genus,
            ins: c.ins.iter().map(|i| i + m1.source).collect(),
            outs: c.outs.iter().map(|o| o + m1.target).collect(),
        });
    }
    let mut log = m1.log.clone();
    log.extend(m2.log.iter().cloned());
    CobMorphism::from_components(m1.source + m2.source, m1.target + m2.target, comps, log)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let p = self.0[i];
        if p == i {
            return i;
        }
        let r = self.find(p);
        self.0[i] = r;
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Composite component classes: for each class, the constituent component
/// indices (first those of `m1`, offset by `m1.components.len()` for `m2`)
/// and the number of glued circles.
fn composite_classes(m2: &CobMorphism, m1: &CobMorphism) -> Vec<(Vec<usize>, usize)> {
    let k1 = m1.components.len();
    let mut uf = UnionFind((0..k1 + m2.components.len()).collect());
    let owner1: BTreeMap<usize, usize> =
        m1.components.iter().enumerate().flat_map(|(i, c)| c.outs.iter().map(move |o| (*o, i))).collect();
    let owner2: BTreeMap<usize, usize> =
        m2.components.iter().enumerate().flat_map(|(i, c)| c.ins.iter().map(move |o| (*o, k1 + i))).collect();
    for j in 0..m1.target {
        uf.union(owner1[&j], owner2[&j]);
    }
    let mut classes: BTreeMap<usize, (Vec<usize>, usize)> = BTreeMap::new();
    for i in 0..k1 + m2.components.len() {
        let r = uf.find(i);
        classes.entry(r).or_default().0.push(i);
    }
    for j in 0..m1.target {
        let r = uf.find(owner1[&j]);
        classes.get_mut(&r).expect("class").1 += 1;
    }
    classes.into_values().collect()
}

/// Component obtained by gluing the constituents `members` of a class.
fn glued_component(m2: &CobMorphism, m1: &CobMorphism, members: &[usize]) -> Result<Component> {
    let k1 = m1.components.len();
    let mut chi = 0;
    let mut ins = BTreeSet::new();
    let mut outs = BTreeSet::new();
    for &i in members {
        if i < k1 {
            let c = &m1.components[i];
            chi += c.euler_characteristic();
            ins.extend(&c.ins);
        } else {
            let c = &m2.components[i - k1];
            chi += c.euler_characteristic();
            outs.extend(&c.outs);
        }
    }
    let twice = 2 - chi - ins.len() as i64 - outs.len() as i64;
    if twice % 2 != 0 || twice < 0 {
        return Err(QhamError::InvalidMorphism(format!("inconsistent Euler characteristic {chi}")));
    }
    Ok(Component {
        genus: twice / 2,
        ins,
        outs,
    })
}

/// `m2 ∘ m1`: glue the target of `m1` to the source of `m2`.
pub fn compose(m2: &CobMorphism, m1: &CobMorphism) -> Result<CobMorphism> {
    if m1.target != m2.source {
        return Err(QhamError::InvalidMorphism(format!(
            "cannot compose: target {} does not match source {}",
            m1.target, m2.source
        )));
    }
    let comps = composite_classes(m2, m1)
        .iter()
        .map(|(members, _)| glued_component(m2, m1, members))
        .collect::<Result<Vec<_>>>()?;
    let mut log = m1.log.clone();
    log.extend(m2.log.iter().cloned());
    if m1.target > 0 {
        log.push(format!("fuse and reduce by G^{}", m1.target));
    }
    Ok(CobMorphism::from_components(m1.source, m2.target, comps, log))
}

/// Parses `expr := term (';' term)*`, `term := factor ('*' factor)*`,
/// `factor := name | 'id' NAT | '(' expr ')'`. `;` composes left to right.
pub fn parse_expression(text: &str) -> Result<CobMorphism> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let m = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected `{}`", p.chars[p.pos])));
    }
    Ok(m)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn location(&self, pos: usize) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for c in &self.chars[..pos.min(self.chars.len())] {
            if *c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn error_at(&self, pos: usize, message: String) -> QhamError {
        let (line, column) = self.location(pos);
        QhamError::Parse { line, column, message }
    }

    fn error(&self, message: String) -> QhamError {
        self.error_at(self.pos, message)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<CobMorphism> {
        let mut acc = self.term()?;
        while self.peek() == Some(';') {
            let at = self.pos;
            self.pos += 1;
            let next = self.term()?;
            acc = compose(&next, &acc).map_err(|e| self.error_at(at, e.to_string()))?;
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<CobMorphism> {
        let mut acc = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            acc = tensor(&acc, &self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<CobMorphism> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let m = self.expr()?;
                if self.peek() != Some(')') {
                    return Err(self.error("expected `)`".into()));
                }
                self.pos += 1;
                Ok(m)
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let word: String = self.chars[start..self.pos].iter().collect();
                if word == "id" {
                    self.skip_ws();
                    let ns = self.pos;
                    while self.pos < self.chars.len() && self.chars[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    if ns == self.pos {
                        return Err(self.error("expected a circle count after `id`".into()));
                    }
                    let n: String = self.chars[ns..self.pos].iter().collect();
                    let n = n.parse::<usize>().map_err(|e| self.error_at(ns, e.to_string()))?;
                    return Ok(CobMorphism::identity(n));
                }
                generator(&word).map_err(|e| self.error_at(start, e.to_string()))
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
            None => Err(self.error("unexpected end of input".into())),
        }
    }
}

/// Realizing quiver of an open component: one interior vertex `v`, a leg per
/// boundary circle, and `genus` loops. Discs (cup, cap) have none.
pub fn realizing_quiver(c: &Component) -> Option<Quiver> {
    if c.is_closed() || (c.genus == 0 && c.ins.len() + c.outs.len() == 1) {
        return None;
    }
    let mut q = Quiver {
        vertices: vec!["v".into()],
        edges: Vec::new(),
    };
    let mut k = 0;
    let mut edge = |q: &mut Quiver, src: String, dst: String| {
        k += 1;
        q.edges.push(Edge {
            id: format!("e{k}"),
            src,
            dst,
        });
    };
    for i in &c.ins {
        q.vertices.push(format!("in{i}"));
        edge(&mut q, format!("in{i}"), "v".into());
    }
    for o in &c.outs {
        q.vertices.push(format!("out{o}"));
        edge(&mut q, "v".into(), format!("out{o}"));
    }
    for _ in 0..c.genus {
        edge(&mut q, "v".into(), "v".into());
    }
    Some(q)
}

/// Disjoint union of realizing quivers of all components, with boundary
/// vertices named `in<i>` / `out<j>` by position. `None` if a component has
/// no realizing quiver.
pub fn morphism_quiver(m: &CobMorphism) -> Option<Quiver> {
    let mut out = Quiver::default();
    for (ci, c) in m.components.iter().enumerate() {
        let q = realizing_quiver(c)?;
        let rename = |v: &String| if v == "v" { format!("c{ci}.v") } else { v.clone() };
        out.vertices.extend(q.vertices.iter().map(rename));
        out.edges.extend(q.edges.iter().map(|e| Edge {
            id: format!("c{ci}.{}", e.id),
            src: rename(&e.src),
            dst: rename(&e.dst),
        }));
    }
    Some(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentRecord {
    pub genus: i64,
    #[serde(rename = "in")]
    pub ins: Vec<usize>,
    #[serde(rename = "out")]
    pub outs: Vec<usize>,
    /// `None` for closed components.
    pub dim: Option<i64>,
    pub closed: bool,
    pub point: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub realizing_quiver: Option<Quiver>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QHamRecord {
    pub source_group: String,
    pub target_group: String,
    pub components: Vec<ComponentRecord>,
    pub composition_log: Vec<String>,
}

impl QHamRecord {
    /// Total dimension, or `None` when a closed component is present.
    pub fn total_dim(&self) -> Option<i64> {
        self.components.iter().map(|c| c.dim).sum()
    }
}

fn power(n: usize) -> String {
    match n {
        0 => "1".into(),
        1 => "G".into(),
        _ => format!("G^{n}"),
    }
}

/// Dimension `2(g + m + n - 1) dim G` of an open component.
pub fn component_dim(c: &Component, dim_g: usize) -> Option<i64> {
    if c.is_closed() {
        return None;
    }
    Some(2 * (c.genus + c.ins.len() as i64 + c.outs.len() as i64 - 1) * dim_g as i64)
}

pub fn n_functor(m: &CobMorphism, model: &LieGroupModel) -> QHamRecord {
    QHamRecord {
        source_group: power(m.source),
        target_group: power(m.target),
        components: m
            .components
            .iter()
            .map(|c| {
                let dim = component_dim(c, model.dim());
                ComponentRecord {
                    genus: c.genus,
                    ins: c.ins.iter().copied().collect(),
                    outs: c.outs.iter().copied().collect(),
                    dim,
                    closed: c.is_closed(),
                    point: dim == Some(0),
                    realizing_quiver: realizing_quiver(c),
                }
            })
            .collect(),
        composition_log: m.log.clone(),
    }
}

/// `dim_1 + dim_2 - 2 k dim G`.
pub fn reduction_dim(rec1: &QHamRecord, rec2: &QHamRecord, k: usize, model: &LieGroupModel) -> Option<i64> {
    Some(rec1.total_dim()? + rec2.total_dim()? - 2 * (k * model.dim()) as i64)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentCheck {
    pub genus: i64,
    #[serde(rename = "in")]
    pub ins: Vec<usize>,
    #[serde(rename = "out")]
    pub outs: Vec<usize>,
    pub glued_circles: usize,
    pub reduction_dim: Option<i64>,
    pub functor_dim: Option<i64>,
    pub closed: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctorialityReport {
    pub composite: String,
    pub components: Vec<ComponentCheck>,
    pub pass: bool,
}

/// Compares, per composite component, the functor's dimension with the
/// reduction dimension of its constituents. Closed components make no claim.
pub fn functoriality_check(m1: &CobMorphism, m2: &CobMorphism, model: &LieGroupModel) -> Result<FunctorialityReport> {
    let comp = compose(m2, m1)?;
    let k1 = m1.components.len();
    let dim_g = model.dim();
    let mut checks = Vec::new();
    for (members, glued) in composite_classes(m2, m1) {
        let target = glued_component(m2, m1, &members)?;
        let closed = target.is_closed();
        let reduction = if closed {
            None
        } else {
            members
                .iter()
                .map(|&i| if i < k1 { &m1.components[i] } else { &m2.components[i - k1] })
                .map(|c| component_dim(c, dim_g))
                .sum::<Option<i64>>()
                .map(|d| d - 2 * (glued * dim_g) as i64)
        };
        let functor = component_dim(&target, dim_g);
        checks.push(ComponentCheck {
            genus: target.genus,
            ins: target.ins.iter().copied().collect(),
            outs: target.outs.iter().copied().collect(),
            glued_circles: glued,
            reduction_dim: reduction,
            functor_dim: functor,
            closed,
            pass: closed || reduction == functor,
        });
    }
    Ok(FunctorialityReport {
        composite: comp.to_string(),
        pass: checks.iter().all(|c| c.pass),
        components: checks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationCheck {
    pub name: String,
    pub lhs: String,
    pub rhs: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelationsReport {
    pub relations: Vec<RelationCheck>,
    pub pass: bool,
}

/// Checks the generating relations at normal-form equality.
pub fn verify_relations() -> Result<RelationsReport> {
    let cases: &[(&str, &str, &str)] = &[
        ("associativity", "pants * cyl ; pants", "cyl * pants ; pants"),
        ("coassociativity", "copants ; copants * cyl", "copants ; cyl * copants"),
        ("left unit", "cap * cyl ; pants", "cyl"),
        ("right unit", "cyl * cap ; pants", "cyl"),
        ("left counit", "copants ; cup * cyl", "cyl"),
        ("right counit", "copants ; cyl * cup", "cyl"),
        ("commutativity", "swap ; pants", "pants"),
        ("cocommutativity", "copants ; swap", "copants"),
        ("frobenius left", "copants * cyl ; cyl * pants", "pants ; copants"),
        ("frobenius right", "cyl * copants ; pants * cyl", "pants ; copants"),
        ("swap involution", "swap ; swap", "id 2"),
        ("cylinder left", "cyl ; cyl", "cyl"),
        ("cylinder on pants", "pants ; cyl", "pants"),
        ("cylinders on pants", "id 2 ; pants", "pants"),
        ("cylinder on copants", "cyl ; copants", "copants"),
        ("cylinders on copants", "copants ; id 2", "copants"),
    ];
    let mut relations = Vec::new();
    for (name, l, r) in cases {
        let (a, b) = (parse_expression(l)?, parse_expression(r)?);
        relations.push(RelationCheck {
            name: name.to_string(),
            pass: a == b,
            lhs: a.to_string(),
            rhs: b.to_string(),
        });
    }
    Ok(RelationsReport {
        pass: relations.iter().all(|r| r.pass),
        relations,
    })
}

/// Random morphism `source -> target`: positions are distributed over
/// up to `source + target` components with genus in `0..=max_genus`.
pub fn random_morphism<R: Rng>(rng: &mut R, source: usize, target: usize, max_genus: i64) -> CobMorphism {
    let k = rng.gen_range(1..=(source + target).max(1));
    let mut comps: Vec<Component> = (0..k)
        .map(|_| Component {
            genus: rng.gen_range(0..=max_genus),
            ins: BTreeSet::new(),
            outs: BTreeSet::new(),
        })
        .collect();
    for i in 0..source {
        let c = rng.gen_range(0..k);
        comps[c].ins.insert(i);
    }
    for o in 0..target {
        let c = rng.gen_range(0..k);
        comps[c].outs.insert(o);
    }
    comps.retain(|c| !c.is_closed());
    if comps.is_empty() {
        comps.push(Component {
            genus: rng.gen_range(0..=max_genus),
            ins: BTreeSet::new(),
            outs: BTreeSet::new(),
        });
    }
    CobMorphism::from_components(source, target, comps, Vec::new())
}

/// Glues the realizing quivers of `m1` and `m2` along the shared circles.
pub fn glue_realizing_quivers(m1: &CobMorphism, m2: &CobMorphism) -> Option<Result<Quiver>> {
    let (q1, q2) = (morphism_quiver(m1)?, morphism_quiver(m2)?);
    let matching: Matching = (0..m1.target).map(|j| (format!("out{j}"), format!("in{j}"))).collect();
    Some(glue(&q1, &q2, &matching))
}
