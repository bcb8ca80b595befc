//! Mesh input and visualization output.
//!
//! The reader accepts the ASCII subset of the MSH 2.x format: `$Nodes` and
//! `$Elements` sections, with linear tetrahedra (element type 4). Other element
//! types (boundary triangles, lines, points) are skipped. The first tag of a
//! tetrahedron is its physical group; the sorted distinct physical groups are
//! numbered `0, 1, ...` to form subdomain labels.
//!
//! The writer emits legacy ASCII VTK unstructured grids with cell data.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::mesh::TetMesh;
use crate::nedelec::{FEField, FESpace};
use crate::{Error, Result, Vec3};

const MSH_TETRAHEDRON: u32 = 4;
const VTK_TETRA: u32 = 10;

/// A mesh read from an MSH file, with the physical tag behind each subdomain label.
#[derive(Debug, Clone)]
pub struct MshMesh {
    pub mesh: TetMesh,
    /// `physical_tags[label]` is the MSH physical group of subdomain `label`.
    pub physical_tags: Vec<i64>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            let l = l.trim();
            if !l.is_empty() {
                self.line = i + 1;
                return Some(l);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str> {
        let line = self.line;
        self.next()
            .ok_or_else(|| parse_err(line, format!("unexpected end of file, expected {what}")))
    }

    fn count(&mut self, section: &str) -> Result<usize> {
        let l = self.expect(section)?;
        l.parse()
            .map_err(|_| parse_err(self.line, format!("invalid {section} count '{l}'")))
    }
}

fn fields<T: std::str::FromStr>(line: &str, at: usize, what: &str) -> Result<Vec<T>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| parse_err(at, format!("invalid {what} entry '{t}'")))
        })
        .collect()
}

/// Parses MSH 2.x ASCII text.
pub fn parse_msh(text: &str) -> Result<MshMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    let mut node_index: HashMap<i64, usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut tets: Vec<([i64; 4], i64, usize)> = Vec::new();
    let mut seen_nodes = false;
    let mut seen_elements = false;

    while let Some(l) = lines.next() {
        match l {
            "$MeshFormat" => {
                let header = lines.expect("format header")?;
                let at = lines.line;
                let mut parts = header.split_whitespace();
                let version = parts.next().unwrap_or("");
                if !version.starts_with('2') {
                    return Err(parse_err(at, format!("unsupported MSH version {version}")));
                }
                if parts.next() != Some("0") {
                    return Err(parse_err(at, "only ASCII MSH files are supported"));
                }
                close(&mut lines, "$EndMeshFormat")?;
            }
            "$Nodes" => {
                let n = lines.count("node")?;
                vertices.reserve(n);
                for _ in 0..n {
                    let l = lines.expect("node record")?;
                    let at = lines.line;
                    let v: Vec<&str> = l.split_whitespace().collect();
                    if v.len() != 4 {
                        return Err(parse_err(
                            at,
                            "node record needs an id and three coordinates",
                        ));
                    }
                    let id: i64 = v[0]
                        .parse()
                        .map_err(|_| parse_err(at, format!("invalid node id '{}'", v[0])))?;
                    let x = fields::<f64>(&v[1..].join(" "), at, "coordinate")?;
                    if node_index.insert(id, vertices.len()).is_some() {
                        return Err(parse_err(at, format!("duplicate node id {id}")));
                    }
                    vertices.push(Vec3::new(x[0], x[1], x[2]));
                }
                close(&mut lines, "$EndNodes")?;
                seen_nodes = true;
            }
            "$Elements" => {
                let n = lines.count("element")?;
                for _ in 0..n {
                    let l = lines.expect("element record")?;
                    let at = lines.line;
                    let v = fields::<i64>(l, at, "element")?;
                    if v.len() < 3 {
                        return Err(parse_err(at, "truncated element record"));
                    }
                    let ntags =
                        usize::try_from(v[2]).map_err(|_| parse_err(at, "negative tag count"))?;
                    if v[1] != i64::from(MSH_TETRAHEDRON) {
                        continue;
                    }
                    if v.len() != 3 + ntags + 4 {
                        return Err(parse_err(at, "tetrahedron record needs four nodes"));
                    }
                    if ntags == 0 {
                        return Err(parse_err(at, "tetrahedron without a physical tag"));
                    }
                    let nodes = [v[3 + ntags], v[4 + ntags], v[5 + ntags], v[6 + ntags]];
                    tets.push((nodes, v[3], at));
                }
                close(&mut lines, "$EndElements")?;
                seen_elements = true;
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                let end = format!("$End{}", &other[1..]);
                while lines.expect(&end)? != end {}
            }
            other => {
                return Err(parse_err(
                    lines.line,
                    format!("unexpected content '{other}'"),
                ))
            }
        }
    }
    if !seen_nodes {
        return Err(Error::Missing("$Nodes section"));
    }
    if !seen_elements {
        return Err(Error::Missing("$Elements section"));
    }
    if tets.is_empty() {
        return Err(Error::Missing("tetrahedral elements"));
    }

    let physical_tags: Vec<i64> = tets
        .iter()
        .map(|t| t.1)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut cells = Vec::with_capacity(tets.len());
    let mut labels = Vec::with_capacity(tets.len());
    for (nodes, tag, at) in &tets {
        let mut cell = [0; 4];
        for (c, id) in cell.iter_mut().zip(nodes) {
            *c = *node_index
                .get(id)
                .ok_or_else(|| parse_err(*at, format!("element references unknown node {id}")))?;
        }
        cells.push(cell);
        labels.push(
            physical_tags
                .binary_search(tag)
                .expect("tag collected above"),
        );
    }
    let mesh = TetMesh::with_subdomain_count(vertices, cells, labels, physical_tags.len())?;
    Ok(MshMesh {
        mesh,
        physical_tags,
    })
}

fn close(lines: &mut Lines<'_>, end: &str) -> Result<()> {
    let l = lines.expect(end)?;
    if l != end {
        return Err(parse_err(
            lines.line,
            format!("expected {end}, found '{l}'"),
        ));
    }
    Ok(())
}

/// Reads an MSH 2.x ASCII file.
pub fn read_msh(path: impl AsRef<Path>) -> Result<MshMesh> {
    parse_msh(&std::fs::read_to_string(path)?)
}

/// Cell data for a VTK file: named scalars and vectors, one entry per cell.
#[derive(Debug, Clone, Default)]
pub struct VtkCellData {
    scalars: Vec<(String, Vec<f64>)>,
    vectors: Vec<(String, Vec<Vec3>)>,
}

impl VtkCellData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn scalar(mut self, name: &str, values: Vec<f64>) -> Self {
        self.scalars.push((name.to_owned(), values));
        self
    }

    pub fn vector(mut self, name: &str, values: Vec<Vec3>) -> Self {
        self.vectors.push((name.to_owned(), values));
        self
    }

    /// Adds the centroid value of an edge element field as a vector, plus its magnitude.
    pub fn field(self, space: &FESpace, name: &str, field: &FEField) -> Result<Self> {
        space.check(field)?;
        let values: Vec<Vec3> = (0..space.mesh().num_cells())
            .map(|c| space.eval(field, c, &[0.25; 4]))
            .collect();
        let magnitude = values.iter().map(|v| v.norm()).collect();
        Ok(self
            .vector(name, values)
            .scalar(&format!("{name}_magnitude"), magnitude))
    }
}

fn vtk_name(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

/// Renders a mesh with its subdomain labels and the given cell data as legacy ASCII VTK.
pub fn vtk_string(mesh: &TetMesh, data: &VtkCellData) -> Result<String> {
    let n = mesh.num_cells();
    for (name, len) in data
        .scalars
        .iter()
        .map(|(s, v)| (s, v.len()))
        .chain(data.vectors.iter().map(|(s, v)| (s, v.len())))
    {
        if len != n {
            return Err(Error::InvalidParameter(format!(
                "cell data '{name}' has {len} values for {n} cells"
            )));
        }
    }
    let mut out = String::new();
    let w = &mut out;
    // writing into a String cannot fail
    let _ = writeln!(
        w,
        "# vtk DataFile Version 3.0\nmaxwell-ocp\nASCII\nDATASET UNSTRUCTURED_GRID"
    );
    let _ = writeln!(w, "POINTS {} double", mesh.num_vertices());
    for v in mesh.vertices() {
        let _ = writeln!(w, "{:e} {:e} {:e}", v.x, v.y, v.z);
    }
    let _ = writeln!(w, "CELLS {n} {}", 5 * n);
    for c in mesh.cells() {
        let _ = writeln!(w, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(w, "CELL_TYPES {n}");
    for _ in 0..n {
        let _ = writeln!(w, "{VTK_TETRA}");
    }
    let _ = writeln!(
        w,
        "CELL_DATA {n}\nSCALARS subdomain int 1\nLOOKUP_TABLE default"
    );
    for s in mesh.subdomains() {
        let _ = writeln!(w, "{s}");
    }
    for (name, values) in &data.scalars {
        let _ = writeln!(
            w,
            "SCALARS {} double 1\nLOOKUP_TABLE default",
            vtk_name(name)
        );
        for v in values {
            let _ = writeln!(w, "{v:e}");
        }
    }
    for (name, values) in &data.vectors {
        let _ = writeln!(w, "VECTORS {} double", vtk_name(name));
        for v in values {
            let _ = writeln!(w, "{:e} {:e} {:e}", v.x, v.y, v.z);
        }
    }
    Ok(out)
}

/// Writes [`vtk_string`] to a file.
pub fn write_vtk(path: impl AsRef<Path>, mesh: &TetMesh, data: &VtkCellData) -> Result<()> {
    std::fs::write(path, vtk_string(mesh, data)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TETS: &str =
        "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$PhysicalNames\n1\n3 7 \"air\"\n$EndPhysicalNames\n\
$Nodes\n5\n10 0 0 0\n11 1 0 0\n12 0 1 0\n13 0 0 1\n14 1 1 1\n$EndNodes\n\
$Elements\n3\n1 2 2 1 1 10 11 12\n2 4 2 7 1 10 11 12 13\n3 4 2 3 1 11 12 13 14\n$EndElements\n";

    #[test]
    fn reads_tets_and_maps_tags() {
        let m = parse_msh(TWO_TETS).unwrap();
        assert_eq!(m.mesh.num_vertices(), 5);
        assert_eq!(m.mesh.num_cells(), 2);
        assert_eq!(m.physical_tags, vec![3, 7]);
        assert_eq!(m.mesh.subdomains(), &[1, 0]);
        assert!((m.mesh.volume(0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn reports_line_of_bad_node() {
        let text = TWO_TETS.replace("11 1 0 0", "11 1 zero 0");
        match parse_msh(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_unknown_node_and_binary() {
        assert!(matches!(
            parse_msh(&TWO_TETS.replace("11 12 13 14", "11 12 13 99")),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_msh(&TWO_TETS.replace("2.2 0 8", "2.2 1 8")),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            parse_msh("$Nodes\n0\n$EndNodes\n"),
            Err(Error::Missing(_))
        ));
    }

    #[test]
    fn vtk_layout() {
        let m = parse_msh(TWO_TETS).unwrap().mesh;
        let data = VtkCellData::new()
            .scalar("eta", vec![1.0, 2.0])
            .vector("v", vec![Vec3::x(), Vec3::z()]);
        let s = vtk_string(&m, &data).unwrap();
        assert!(s.contains("POINTS 5 double"));
        assert!(s.contains("CELLS 2 10"));
        assert!(s.contains("CELL_TYPES 2\n10\n10\n"));
        assert!(s.contains("SCALARS eta double 1"));
        assert!(s.contains("VECTORS v double"));
        let bad = VtkCellData::new().scalar("eta", vec![1.0]);
        assert!(vtk_string(&m, &bad).is_err());
    }
}
