//! Input graph generators: grids, paths, stars, and random planar
//! triangulations of random point sets. Also parses the `name:args` spec
//! strings used by the command line.

use crate::graph::{Edge, GraphError, WeightedGraph};
use crate::rng::RandomSource;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("unknown generator '{0}' (expected grid:R,C,LEN | path:N | star:N | random_planar:N)")]
    UnknownSpec(String),
    #[error("bad arguments in '{0}': {1}")]
    BadArgs(String, String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("random point set degenerate after retries")]
    Degenerate,
}

/// Grid with `rows * cols` vertices, id = row * cols + col, and uniform edge
/// length `len` between 4-neighbors.
pub fn grid(rows: usize, cols: usize, len: f64) -> Result<WeightedGraph, GenError> {
    if rows == 0 || cols == 0 {
        return Err(GenError::BadArgs(
            format!("grid:{rows},{cols},{len}"),
            "rows and cols must be positive".into(),
        ));
    }
    let id = |r: usize, c: usize| (r * cols + c) as u32;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push(Edge { u: id(r, c), v: id(r, c + 1), len });
            }
            if r + 1 < rows {
                edges.push(Edge { u: id(r, c), v: id(r + 1, c), len });
            }
        }
    }
    Ok(WeightedGraph::new(rows * cols, edges)?)
}

/// Path on n vertices with unit edges.
pub fn path(n: usize) -> Result<WeightedGraph, GenError> {
    let edges = (1..n as u32)
        .map(|v| Edge { u: v - 1, v, len: 1.0 })
        .collect();
    Ok(WeightedGraph::new(n.max(1), edges)?)
}

/// Star on n vertices: center 0, unit edges to 1..n-1.
pub fn star(n: usize) -> Result<WeightedGraph, GenError> {
    let edges = (1..n as u32).map(|v| Edge { u: 0, v, len: 1.0 }).collect();
    Ok(WeightedGraph::new(n.max(1), edges)?)
}

fn cross(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Triangulation of n random points in the unit square: points are processed
/// in lexicographic order and each new point is joined to every hull vertex
/// it can see, so the result is planar, connected, and has at most 3n - 6
/// edges. Edge lengths are Euclidean. Nearly collinear configurations retry
/// with a perturbed seed.
pub fn random_planar(n: usize, seed: u64) -> Result<WeightedGraph, GenError> {
    if n == 0 {
        return Err(GenError::BadArgs(
            format!("random_planar:{n}"),
            "n must be positive".into(),
        ));
    }
    'attempt: for salt in 0..16u64 {
        let mut rng = RandomSource::new(seed.wrapping_add(salt.wrapping_mul(0x9e3779b97f4a7c15)));
        let mut pts: Vec<(f64, f64)> = (0..n)
            .map(|_| (rng.uniform01(), rng.uniform01()))
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| pts[a].partial_cmp(&pts[b]).unwrap());
        pts = order.iter().map(|&i| pts[i]).collect();
        if pts.windows(2).any(|w| {
            (w[0].0 - w[1].0).abs() < 1e-12 && (w[0].1 - w[1].1).abs() < 1e-12
        }) {
            continue 'attempt;
        }
        if n == 1 {
            return Ok(WeightedGraph::single_vertex());
        }
        let dist = |a: usize, b: usize| {
            ((pts[a].0 - pts[b].0).powi(2) + (pts[a].1 - pts[b].1).powi(2)).sqrt()
        };
        let mut edges: Vec<Edge> = Vec::new();
        let mut add_edge = |a: usize, b: usize| {
            edges.push(Edge {
                u: a as u32,
                v: b as u32,
                len: dist(a, b),
            });
        };
        if n == 2 {
            add_edge(0, 1);
            return Ok(WeightedGraph::new(2, edges)?);
        }
        let c0 = cross(pts[0], pts[1], pts[2]);
        if c0.abs() < 1e-12 {
            continue 'attempt;
        }
        // counterclockwise hull of the first triangle
        let mut hull: Vec<usize> = if c0 > 0.0 {
            vec![0, 1, 2]
        } else {
            vec![0, 2, 1]
        };
        add_edge(0, 1);
        add_edge(1, 2);
        add_edge(0, 2);
        for p in 3..n {
            let h = hull.len();
            let mut visible = vec![false; h];
            for i in 0..h {
                let c = cross(pts[hull[i]], pts[hull[(i + 1) % h]], pts[p]);
                if c.abs() < 1e-12 {
                    continue 'attempt;
                }
                visible[i] = c < 0.0;
            }
            // p is outside the hull (lex order), so some edge is visible and
            // the visible edges form one contiguous arc
            if visible.iter().all(|&v| !v) || visible.iter().all(|&v| v) {
                continue 'attempt;
            }
            let start = (0..h)
                .find(|&i| visible[i] && !visible[(i + h - 1) % h])
                .unwrap();
            let mut arc_len = 0;
            while visible[(start + arc_len) % h] {
                arc_len += 1;
            }
            // touched vertices: endpoints of the visible edge arc
            for j in 0..=arc_len {
                add_edge(hull[(start + j) % h], p);
            }
            let mut new_hull = Vec::with_capacity(h - arc_len + 2);
            new_hull.push(hull[start]);
            new_hull.push(p);
            let mut i = (start + arc_len) % h;
            while i != start {
                new_hull.push(hull[i]);
                i = (i + 1) % h;
            }
            hull = new_hull;
        }
        debug_assert!(edges.len() <= 3 * n - 6);
        return Ok(WeightedGraph::new(n, edges)?);
    }
    Err(GenError::Degenerate)
}

/// Parse "grid:4,4,1.0", "path:9", "star:6" or "random_planar:30".
pub fn from_spec(spec: &str, seed: u64) -> Result<WeightedGraph, GenError> {
    let (name, args) = spec.split_once(':').unwrap_or((spec, ""));
    let fields: Vec<&str> = if args.is_empty() {
        Vec::new()
    } else {
        args.split(',').map(str::trim).collect()
    };
    let bad = |msg: &str| GenError::BadArgs(spec.to_string(), msg.to_string());
    match name {
        "grid" => {
            if fields.len() != 3 {
                return Err(bad("expected grid:ROWS,COLS,LEN"));
            }
            let rows = fields[0].parse().map_err(|_| bad("bad rows"))?;
            let cols = fields[1].parse().map_err(|_| bad("bad cols"))?;
            let len = fields[2].parse().map_err(|_| bad("bad length"))?;
            grid(rows, cols, len)
        }
        "path" => {
            if fields.len() != 1 {
                return Err(bad("expected path:N"));
            }
            path(fields[0].parse().map_err(|_| bad("bad n"))?)
        }
        "star" => {
            if fields.len() != 1 {
                return Err(bad("expected star:N"));
            }
            star(fields[0].parse().map_err(|_| bad("bad n"))?)
        }
        "random_planar" => {
            if fields.len() != 1 {
                return Err(bad("expected random_planar:N"));
            }
            random_planar(fields[0].parse().map_err(|_| bad("bad n"))?, seed)
        }
        _ => Err(GenError::UnknownSpec(spec.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let g = grid(2, 2, 1.0).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edges().len(), 4);
        let g = grid(3, 4, 2.0).unwrap();
        assert_eq!(g.n(), 12);
        assert_eq!(g.edges().len(), 3 * 3 + 2 * 4);
        assert!(g.edges().iter().all(|e| e.len == 2.0));
        assert!(grid(0, 3, 1.0).is_err());
    }

    #[test]
    fn path_and_star_shapes() {
        let p = path(5).unwrap();
        assert_eq!(p.n(), 5);
        assert_eq!(p.metrics().unwrap().diameter, 4.0);
        let s = star(6).unwrap();
        assert_eq!(s.n(), 6);
        assert_eq!(s.degree(0), 5);
        assert_eq!(s.metrics().unwrap().diameter, 2.0);
        assert_eq!(path(1).unwrap().n(), 1);
    }

    #[test]
    fn random_planar_is_connected_planar_sized() {
        for n in [1usize, 2, 3, 10, 30, 80] {
            for seed in [0u64, 1, 99] {
                let g = random_planar(n, seed).unwrap();
                assert_eq!(g.n(), n);
                assert!(g.is_connected());
                if n >= 3 {
                    assert!(g.edges().len() <= 3 * n - 6, "n={n} m={}", g.edges().len());
                    assert!(g.edges().len() >= n - 1);
                }
                assert!(g.edges().iter().all(|e| e.len > 0.0));
            }
        }
    }

    #[test]
    fn random_planar_is_deterministic() {
        let a = random_planar(40, 7).unwrap();
        let b = random_planar(40, 7).unwrap();
        assert_eq!(a, b);
        let c = random_planar(40, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(from_spec("grid:2,3,1.0", 0).unwrap().n(), 6);
        assert_eq!(from_spec("path:4", 0).unwrap().n(), 4);
        assert_eq!(from_spec("star:4", 0).unwrap().n(), 4);
        assert_eq!(from_spec("random_planar:12", 3).unwrap().n(), 12);
        assert!(from_spec("blob:1", 0).is_err());
        assert!(from_spec("grid:2,3", 0).is_err());
    }
}
