//! Fixture files (TOML) and active-cell mesh dumps (JSON).
//!
//! Cell indices are 0-based multi-indices. The cells listed for `Ω_ℓ` are
//! cells of level `ℓ-1`; boxes are half-open index ranges `lo..hi`.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{build_hierarchical_basis, enlarge_hierarchy, HierarchicalMesh, Hierarchy, SubdomainHierarchy};
use crate::tensor::{box_indices, build_level_sequence, CellId, CellSet, LevelSequence, RefinementRule, TensorLevel};
use crate::univariate::{Breakpoints, KnotVector};

pub const FIXTURE_SCHEMA: &str = "hbspline-fixture/1";
pub const MESH_SCHEMA: &str = "hbspline-mesh/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureFile {
    pub schema: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dim: usize,
    pub degrees: Vec<usize>,
    pub depth: usize,
    pub direction: Vec<DirectionSpec>,
    #[serde(default)]
    pub refinement: RefinementSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subdomain: Vec<RegionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub enlargement: Vec<RegionSpec>,
}

/// Either `intervals` (uniform) or explicit `breakpoints`, with optional
/// multiplicities for every breakpoint (default: `p+1` at the ends, 1 inside).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breakpoints: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multiplicities: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementSpec {
    pub rule: String,
    /// For `rule = "explicit"`: directions of levels `1, 2, …`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<Vec<DirectionSpec>>,
}

impl Default for RefinementSpec {
    fn default() -> Self {
        Self { rule: "dyadic".into(), levels: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    /// `ℓ` of `Ω_ℓ`; cells are of level `ℓ-1`.
    pub omega: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boxes: Vec<BoxSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

/// A parsed and validated fixture.
#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub file: FixtureFile,
    pub hierarchy: Hierarchy,
    pub enlarged: Option<Hierarchy>,
}

fn located(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Fixture { location: location.into(), message: message.into() }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
    (line, col)
}

pub fn load_fixture(path: &Path) -> Result<Fixture> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| located(path.display().to_string(), format!("cannot read file: {e}")))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    parse_fixture(&text, &path.display().to_string(), &stem)
}

pub fn parse_fixture(text: &str, origin: &str, default_name: &str) -> Result<Fixture> {
    let file: FixtureFile = toml::from_str(text).map_err(|e| {
        let loc = match e.span() {
            Some(span) => {
                let (l, c) = line_col(text, span.start);
                format!("{origin}:{l}:{c}")
            }
            None => origin.to_string(),
        };
        located(loc, e.message().to_string())
    })?;
    let (hierarchy, enlarged) = file.build(origin)?;
    let name = file.name.clone().unwrap_or_else(|| default_name.to_string());
    Ok(Fixture { name, file, hierarchy, enlarged })
}

impl DirectionSpec {
    fn knot_vector(&self, degree: usize, at: &str) -> Result<KnotVector> {
        let values = match (&self.intervals, &self.breakpoints) {
            (Some(_), Some(_)) => return Err(located(at, "give either intervals or breakpoints, not both")),
            (None, None) => return Err(located(at, "missing intervals or breakpoints")),
            (Some(0), None) => return Err(located(format!("{at}.intervals"), "must be positive")),
            (Some(n), None) => (0..=*n).map(|i| i as f64 / *n as f64).collect::<Vec<_>>(),
            (None, Some(b)) => b.clone(),
        };
        let multiplicities = match &self.multiplicities {
            Some(m) if m.len() != values.len() => {
                return Err(located(
                    format!("{at}.multiplicities"),
                    format!("expected {} entries, got {}", values.len(), m.len()),
                ))
            }
            Some(m) => m.clone(),
            None => {
                let mut m = vec![1; values.len()];
                if let Some(first) = m.first_mut() {
                    *first = degree + 1;
                }
                if let Some(last) = m.last_mut() {
                    *last = degree + 1;
                }
                m
            }
        };
        KnotVector::from_breakpoints(degree, &Breakpoints { values, multiplicities })
            .map_err(|e| located(at, e.to_string()))
    }

    fn from_knots(kv: &KnotVector) -> Self {
        let bp = kv.breakpoints();
        let p = kv.degree();
        let n = bp.values.len() - 1;
        let uniform = bp.values.iter().enumerate().all(|(i, &v)| v == i as f64 / n as f64);
        let simple = bp.multiplicities.iter().enumerate().all(|(i, &m)| m == if i == 0 || i == n { p + 1 } else { 1 });
        match (uniform, simple) {
            (true, true) => Self { intervals: Some(n), ..Self::default() },
            (_, true) => Self { breakpoints: Some(bp.values), ..Self::default() },
            _ => Self { breakpoints: Some(bp.values), multiplicities: Some(bp.multiplicities), ..Self::default() },
        }
    }
}

fn region_cells(spec: &RegionSpec, level: &TensorLevel, at: &str) -> Result<CellSet> {
    let shape = level.cell_shape();
    let d = shape.len();
    let mut set = CellSet::new(level.level());
    for (j, cell) in spec.cells.iter().enumerate() {
        let here = format!("{at}.cells[{j}]");
        if cell.len() != d {
            return Err(located(here, format!("expected {d} indices, got {}", cell.len())));
        }
        if let Some(i) = (0..d).find(|&i| cell[i] >= shape[i]) {
            return Err(Error::InvalidCell(format!(
                "{here}: index {} in direction {i} exceeds the {} cells of level {}",
                cell[i],
                shape[i],
                level.level()
            )));
        }
        set.cells.insert(level.cell_linear(cell));
    }
    for (j, b) in spec.boxes.iter().enumerate() {
        let here = format!("{at}.boxes[{j}]");
        if b.lo.len() != d || b.hi.len() != d {
            return Err(located(here, format!("lo and hi need {d} entries")));
        }
        if let Some(i) = (0..d).find(|&i| b.lo[i] >= b.hi[i] || b.hi[i] > shape[i]) {
            return Err(Error::InvalidCell(format!(
                "{here}: range {}..{} in direction {i} is empty or exceeds the {} cells of level {}",
                b.lo[i],
                b.hi[i],
                shape[i],
                level.level()
            )));
        }
        let block: Vec<_> = (0..d).map(|i| b.lo[i]..b.hi[i]).collect();
        set.cells.extend(box_indices(shape, &block));
    }
    Ok(set)
}

/// Covers a cell set with boxes, greedily growing runs direction by direction.
pub fn cells_to_boxes(level: &TensorLevel, set: &CellSet) -> Vec<BoxSpec> {
    let shape = level.cell_shape();
    let mut left: BTreeSet<usize> = set.cells.clone();
    let mut out = Vec::new();
    while let Some(&start) = left.iter().next() {
        let lo = level.cell_multi(start);
        let mut hi: Vec<usize> = lo.iter().map(|i| i + 1).collect();
        for dir in 0..shape.len() {
            loop {
                if hi[dir] >= shape[dir] {
                    break;
                }
                let mut slab: Vec<_> = lo.iter().zip(&hi).map(|(&a, &b)| a..b).collect();
                slab[dir] = hi[dir]..hi[dir] + 1;
                if box_indices(shape, &slab).all(|c| left.contains(&c)) {
                    hi[dir] += 1;
                } else {
                    break;
                }
            }
        }
        let block: Vec<_> = lo.iter().zip(&hi).map(|(&a, &b)| a..b).collect();
        for c in box_indices(shape, &block) {
            left.remove(&c);
        }
        out.push(BoxSpec { lo, hi });
    }
    out
}

impl FixtureFile {
    pub fn level_sequence(&self, origin: &str) -> Result<LevelSequence> {
        if self.schema != FIXTURE_SCHEMA {
            return Err(located(
                format!("{origin}: schema"),
                format!("unsupported schema '{}', expected '{FIXTURE_SCHEMA}'", self.schema),
            ));
        }
        if self.dim == 0 {
            return Err(located(format!("{origin}: dim"), "must be at least 1"));
        }
        if self.degrees.len() != self.dim {
            return Err(located(format!("{origin}: degrees"), format!("expected {} entries", self.dim)));
        }
        if self.direction.len() != self.dim {
            return Err(located(format!("{origin}: direction"), format!("expected {} tables", self.dim)));
        }
        if self.depth == 0 {
            return Err(located(format!("{origin}: depth"), "must be at least 1"));
        }
        let initial = self
            .direction
            .iter()
            .enumerate()
            .map(|(i, d)| d.knot_vector(self.degrees[i], &format!("{origin}: direction[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let rule = match self.refinement.rule.as_str() {
            "dyadic" => RefinementRule::Dyadic,
            "explicit" => RefinementRule::Explicit(
                self.refinement
                    .levels
                    .iter()
                    .enumerate()
                    .map(|(l, dirs)| {
                        if dirs.len() != self.dim {
                            return Err(located(
                                format!("{origin}: refinement.levels[{l}]"),
                                format!("expected {} directions", self.dim),
                            ));
                        }
                        dirs.iter()
                            .enumerate()
                            .map(|(i, d)| {
                                d.knot_vector(self.degrees[i], &format!("{origin}: refinement.levels[{l}][{i}]"))
                            })
                            .collect()
                    })
                    .collect::<Result<_>>()?,
            ),
            other => {
                return Err(located(
                    format!("{origin}: refinement.rule"),
                    format!("unknown rule '{other}', expected dyadic or explicit"),
                ))
            }
        };
        build_level_sequence(initial, self.depth, rule)
    }

    /// The hierarchy and, when an enlargement section is present, its enlargement.
    pub fn build(&self, origin: &str) -> Result<(Hierarchy, Option<Hierarchy>)> {
        let seq = self.level_sequence(origin)?;
        let mut domains: Vec<CellSet> = (0..self.depth.saturating_sub(1)).map(CellSet::new).collect();
        for (k, spec) in self.subdomain.iter().enumerate() {
            let at = format!("{origin}: subdomain[{k}]");
            if spec.omega == 0 || spec.omega >= self.depth {
                return Err(located(
                    format!("{at}.omega"),
                    format!("must lie in 1..{} for depth {}", self.depth.saturating_sub(1), self.depth),
                ));
            }
            let cells = region_cells(spec, seq.level(spec.omega - 1), &at)?;
            domains[spec.omega - 1].cells.extend(cells.cells);
        }
        let h = Hierarchy::new(seq, SubdomainHierarchy::new(self.depth, domains)?)?;
        if self.enlargement.is_empty() {
            return Ok((h, None));
        }
        let mut additions: Vec<CellSet> = (0..self.depth).map(CellSet::new).collect();
        let mut ext = h.seq().clone();
        if ext.depth() <= self.depth {
            ext.extend()?;
        }
        for (k, spec) in self.enlargement.iter().enumerate() {
            let at = format!("{origin}: enlargement[{k}]");
            if spec.omega == 0 || spec.omega > self.depth {
                return Err(located(format!("{at}.omega"), format!("must lie in 1..={}", self.depth)));
            }
            let cells = region_cells(spec, ext.level(spec.omega - 1), &at)?;
            additions[spec.omega - 1].cells.extend(cells.cells);
        }
        while additions.last().is_some_and(|s| s.is_empty()) {
            additions.pop();
        }
        let enlarged = enlarge_hierarchy(&h, &additions)?;
        Ok((h, Some(enlarged)))
    }

    /// A fixture describing `h` (dyadic rule or explicit knot lists).
    pub fn from_hierarchy(h: &Hierarchy, name: Option<String>) -> Self {
        let seq = h.seq();
        let level0 = seq.level(0);
        let dyadic = (1..seq.depth()).all(|l| {
            seq.level(l).directions().iter().zip(seq.level(l - 1).directions()).all(|(f, c)| *f == c.dyadic_refine())
        });
        let refinement = if dyadic {
            RefinementSpec::default()
        } else {
            RefinementSpec {
                rule: "explicit".into(),
                levels: (1..seq.depth())
                    .map(|l| seq.level(l).directions().iter().map(DirectionSpec::from_knots).collect())
                    .collect(),
            }
        };
        let subdomain = h
            .subdomains()
            .domains()
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.is_empty())
            .map(|(k, d)| RegionSpec { omega: k + 1, cells: Vec::new(), boxes: cells_to_boxes(seq.level(k), d) })
            .collect();
        Self {
            schema: FIXTURE_SCHEMA.into(),
            name,
            dim: seq.dim(),
            degrees: seq.degrees(),
            depth: h.depth(),
            direction: level0.directions().iter().map(DirectionSpec::from_knots).collect(),
            refinement,
            subdomain,
            enlargement: Vec::new(),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("fixture fields are always serializable")
    }
}

/// Active cells tagged by level, with their boxes in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshDump {
    pub schema: String,
    pub dim: usize,
    pub degrees: Vec<usize>,
    pub depth: usize,
    /// `knots[ℓ][i]`: full knot vector of level `ℓ` in direction `i`.
    pub knots: Vec<Vec<Vec<f64>>>,
    pub cells: Vec<MeshCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshCell {
    pub level: usize,
    pub index: Vec<usize>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl MeshDump {
    pub fn from_hierarchy(h: &Hierarchy) -> Self {
        let seq = h.seq();
        let mesh = h.mesh();
        let cells = mesh
            .cells()
            .map(|c| {
                let level = seq.level(c.level);
                let (lo, hi) = level.cell_bounds(c.index);
                MeshCell { level: c.level, index: level.cell_multi(c.index), lo, hi }
            })
            .collect();
        Self {
            schema: MESH_SCHEMA.into(),
            dim: seq.dim(),
            degrees: seq.degrees(),
            depth: h.depth(),
            knots: (0..h.depth())
                .map(|l| seq.level(l).directions().iter().map(|k| k.knots().to_vec()).collect())
                .collect(),
            cells,
        }
    }

    /// Rebuilds the hierarchy from the knots and the active cells alone.
    pub fn to_hierarchy(&self) -> Result<Hierarchy> {
        let bad = |m: String| located("mesh dump", m);
        if self.schema != MESH_SCHEMA {
            return Err(bad(format!("unsupported schema '{}'", self.schema)));
        }
        if self.knots.len() != self.depth || self.depth == 0 {
            return Err(bad(format!("expected knots for {} levels, got {}", self.depth, self.knots.len())));
        }
        let per_level = |l: usize| -> Result<Vec<KnotVector>> {
            if self.knots[l].len() != self.dim || self.degrees.len() != self.dim {
                return Err(bad(format!("level {l} needs {} knot vectors and degrees", self.dim)));
            }
            self.knots[l].iter().zip(&self.degrees).map(|(k, &p)| KnotVector::new(p, k.clone())).collect()
        };
        let explicit = (1..self.depth).map(per_level).collect::<Result<Vec<_>>>()?;
        let seq = build_level_sequence(per_level(0)?, self.depth, RefinementRule::Explicit(explicit))?;
        let mut active: Vec<CellSet> = (0..self.depth).map(CellSet::new).collect();
        for (j, c) in self.cells.iter().enumerate() {
            if c.level >= self.depth || c.index.len() != self.dim {
                return Err(bad(format!("cells[{j}] has an invalid level or index")));
            }
            let level = seq.level(c.level);
            if c.index.iter().zip(level.cell_shape()).any(|(i, n)| i >= n) {
                return Err(Error::InvalidCell(format!("cells[{j}] lies outside level {}", c.level)));
            }
            active[c.level].cells.insert(level.cell_linear(&c.index));
        }
        let mesh = HierarchicalMesh { active };
        let sub = mesh.to_subdomains(&seq)?;
        let h = Hierarchy::new(seq, sub)?;
        let rebuilt = h.mesh();
        if rebuilt != mesh {
            return Err(bad("active cells do not tile the domain as a nested hierarchy".into()));
        }
        Ok(h)
    }
}

/// Mesh round-trip: the hierarchy rebuilt from its dumped active cells has
/// the same basis `H`.
pub fn mesh_round_trip(h: &Hierarchy) -> Result<bool> {
    let text = serde_json::to_string(&MeshDump::from_hierarchy(h)).map_err(|e| located("mesh dump", e.to_string()))?;
    let back: MeshDump = serde_json::from_str(&text).map_err(|e| located("mesh dump", e.to_string()))?;
    let rebuilt = back.to_hierarchy()?;
    let (a, _) = build_hierarchical_basis(h)?;
    let (b, _) = build_hierarchical_basis(&rebuilt)?;
    Ok(a.active == b.active && rebuilt.subdomains() == h.subdomains())
}

/// Cell ids of a region spec list resolved against `h`, for tooling.
pub fn region_ids(h: &Hierarchy, specs: &[RegionSpec]) -> Result<Vec<CellId>> {
    let mut out = Vec::new();
    for (k, s) in specs.iter().enumerate() {
        if s.omega == 0 || s.omega > h.depth() {
            return Err(located(format!("region[{k}].omega"), "out of range"));
        }
        out.extend(region_cells(s, h.seq().level(s.omega - 1), &format!("region[{k}]"))?.ids());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG: &str = r#"
schema = "hbspline-fixture/1"
name = "block"
dim = 2
degrees = [3, 3]
depth = 2

[[direction]]
intervals = 8

[[direction]]
intervals = 8

[[subdomain]]
omega = 1
boxes = [{ lo = [2, 2], hi = [5, 5] }]
"#;

    #[test]
    fn parses_and_round_trips() {
        let fx = parse_fixture(FIG, "inline", "x").unwrap();
        assert_eq!(fx.name, "block");
        assert_eq!(fx.hierarchy.subdomains().domain(1).unwrap().len(), 9);
        let again = FixtureFile::from_hierarchy(&fx.hierarchy, Some("block".into()));
        let fx2 = parse_fixture(&again.to_toml(), "regenerated", "x").unwrap();
        assert_eq!(fx2.hierarchy.subdomains(), fx.hierarchy.subdomains());
        assert!(mesh_round_trip(&fx.hierarchy).unwrap());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let broken = FIG.replace("depth = 2", "depth = ");
        match parse_fixture(&broken, "f.toml", "x").unwrap_err() {
            Error::Fixture { location, .. } => assert!(location.starts_with("f.toml:6:"), "{location}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn semantic_errors_are_located() {
        let bad = FIG.replace("hi = [5, 5]", "hi = [5, 9]");
        let e = parse_fixture(&bad, "f.toml", "x").unwrap_err();
        assert!(e.to_string().contains("subdomain[0].boxes[0]"), "{e}");
        let unknown = FIG.replace("intervals = 8\n\n[[direction]]", "intervals = 8\nfoo = 1\n\n[[direction]]");
        assert!(matches!(parse_fixture(&unknown, "f.toml", "x").unwrap_err(), Error::Fixture { .. }));
    }

    #[test]
    fn non_nested_is_rejected() {
        let text = FIG.replace("depth = 2", "depth = 3")
            + "\n[[subdomain]]\nomega = 2\ncells = [[0, 0]]\n";
        let e = parse_fixture(&text, "f.toml", "x").unwrap_err();
        assert!(e.to_string().starts_with("hierarchy nesting"), "{e}");
    }

    #[test]
    fn boxes_cover_exactly() {
        let level = TensorLevel::new(0, vec![KnotVector::uniform(1, 5).unwrap(), KnotVector::uniform(1, 4).unwrap()])
            .unwrap();
        let set = CellSet::from_cells(0, [0, 1, 2, 5, 6, 7, 13, 19]);
        let boxes = cells_to_boxes(&level, &set);
        let mut covered = BTreeSet::new();
        for b in &boxes {
            let block: Vec<_> = b.lo.iter().zip(&b.hi).map(|(&a, &c)| a..c).collect();
            covered.extend(box_indices(level.cell_shape(), &block));
        }
        assert_eq!(covered, set.cells);
    }

    #[test]
    fn explicit_knots_survive() {
        let text = r#"
schema = "hbspline-fixture/1"
dim = 1
degrees = [2]
depth = 2
[[direction]]
breakpoints = [0.0, 0.3, 1.0]
[refinement]
rule = "explicit"
levels = [[{ breakpoints = [0.0, 0.3, 0.6, 1.0], multiplicities = [3, 2, 1, 3] }]]
[[subdomain]]
omega = 1
cells = [[1]]
"#;
        let fx = parse_fixture(text, "e", "e").unwrap();
        let file = FixtureFile::from_hierarchy(&fx.hierarchy, None);
        assert_eq!(file.refinement.rule, "explicit");
        let fx2 = parse_fixture(&file.to_toml(), "e2", "e").unwrap();
        assert_eq!(fx2.hierarchy.seq(), fx.hierarchy.seq());
        assert!(mesh_round_trip(&fx.hierarchy).unwrap());
    }
}
