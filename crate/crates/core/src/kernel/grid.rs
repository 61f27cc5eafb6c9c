use crate::error::{Error, Result};

/// `(r, rho) -> (alpha, beta) = (r + rho, r - rho)`.
pub fn to_alphabeta(r: f64, rho: f64) -> Result<(f64, f64)> {
    if !(0.0 <= rho && rho <= r) {
        return Err(Error::Domain(format!("(r, rho) = ({r}, {rho}) is outside 0 <= rho <= r")));
    }
    Ok((r + rho, r - rho))
}

/// Inverse of [`to_alphabeta`].
pub fn from_alphabeta(alpha: f64, beta: f64) -> (f64, f64) {
    (0.5 * (alpha + beta), 0.5 * (alpha - beta))
}

/// Uniform nodes `(r_i, rho_j) = (i D, j D)`, `0 <= j <= i <= N`, `D = R / N`,
/// tiling the closed triangle `0 <= rho <= r <= R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleGrid {
    n: usize,
    radius: f64,
}

impl TriangleGrid {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("triangle grid needs N >= 2, got {n}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Domain(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { n, radius })
    }

    pub fn subdivisions(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.radius / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        if i == self.n {
            self.radius
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn node_count(&self) -> usize {
        (self.n + 1) * (self.n + 2) / 2
    }

    /// Packed index of node `(i, j)`, rows of increasing `r`.
    pub fn node_index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i <= self.n);
        i * (i + 1) / 2 + j
    }

    /// `(i, j)` pairs in packed order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.n;
        (0..=n).flat_map(|i| (0..=i).map(move |j| (i, j)))
    }

    /// Lattice indices `(a, b) = (i + j, i - j)` of node `(i, j)`.
    pub fn lattice_index(&self, i: usize, j: usize) -> (usize, usize) {
        (i + j, i - j)
    }
}

/// Values on the `(alpha, beta)` lattice of spacing `D` covering
/// `0 <= b <= a`, `a + b <= 2N`.
///
/// Grid nodes are the lattice points with `a + b` even; the others are the
/// cell centres of the `(r, rho)` grid. Integration regions
/// `[beta, alpha] x [0, beta]` are unions of whole lattice cells.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    n: usize,
    spacing: f64,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn zeros(grid: &TriangleGrid) -> Self {
        let side = 2 * grid.n + 1;
        Self { n: grid.n, spacing: grid.spacing(), values: vec![0.0; side * side] }
    }

    /// Samples `f(alpha, beta)` at every lattice point.
    pub fn from_fn(grid: &TriangleGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        let h = field.spacing;
        let p = field.extent();
        for a in 0..=p {
            for b in 0..=a.min(p - a) {
                field.set(a, b, f(a as f64 * h, b as f64 * h));
            }
        }
        field
    }

    /// Largest lattice index `2N`.
    pub fn extent(&self) -> usize {
        2 * self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    #[inline]
    pub(crate) fn idx(&self, a: usize, b: usize) -> usize {
        a * (2 * self.n + 1) + b
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[self.idx(a, b)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        let k = self.idx(a, b);
        self.values[k] = v;
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        b <= a && a + b <= self.extent()
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn axpy(&mut self, c: f64, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        for (v, o) in self.values.iter_mut().zip(&other.values) {
            *v += c * o;
        }
    }

    /// Value at grid node `(i, j)`.
    pub fn at_node(&self, i: usize, j: usize) -> f64 {
        self.get(i + j, i - j)
    }

    /// Supremum of `|value|` over the grid nodes only.
    pub fn sup_on_nodes(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..=self.n {
            for j in 0..=i {
                m = m.max(self.at_node(i, j).abs());
            }
        }
        m
    }

    /// Values at grid nodes in [`TriangleGrid`] packed order.
    pub fn node_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity((self.n + 1) * (self.n + 2) / 2);
        for i in 0..=self.n {
            for j in 0..=i {
                out.push(self.at_node(i, j));
            }
        }
        out
    }

    pub(crate) fn subdivisions(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphabeta_examples() {
        assert_eq!(to_alphabeta(1.0, 0.0).unwrap(), (1.0, 1.0));
        assert_eq!(to_alphabeta(1.0, 1.0).unwrap(), (2.0, 0.0));
        assert_eq!(to_alphabeta(0.75, 0.25).unwrap(), (1.0, 0.5));
        assert_eq!(from_alphabeta(1.0, 0.5), (0.75, 0.25));
        assert!(to_alphabeta(0.5, 0.75).is_err());
        assert!(to_alphabeta(0.5, -0.1).is_err());
    }

    #[test]
    fn nodes_tile_the_triangle() {
        let g = TriangleGrid::new(7, 2.0).unwrap();
        let nodes: Vec<_> = g.nodes().collect();
        assert_eq!(nodes.len(), g.node_count());
        for (k, &(i, j)) in nodes.iter().enumerate() {
            assert_eq!(g.node_index(i, j), k);
            let (a, b) = g.lattice_index(i, j);
            assert_eq!((a + b) % 2, 0);
            assert!(a + b <= 2 * 7);
        }
        assert_eq!(g.coord(7), 2.0);
        assert!(TriangleGrid::new(1, 1.0).is_err());
    }

    #[test]
    fn lattice_node_mapping_is_bijective() {
        let g = TriangleGrid::new(6, 1.0).unwrap();
        let f = LatticeField::from_fn(&g, |a, b| 1000.0 * a + b);
        let h = g.spacing();
        for (i, j) in g.nodes() {
            let (alpha, beta) = to_alphabeta(g.coord(i), g.coord(j)).unwrap();
            let v = f.at_node(i, j);
            assert!((v - (1000.0 * alpha + beta)).abs() < 1e-9);
            assert_eq!(g.lattice_index(i, j), ((alpha / h).round() as usize, (beta / h).round() as usize));
        }
    }
}
