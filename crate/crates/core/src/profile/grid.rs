use crate::error::{Result, SolitonError};

/// Smallest node count any grid may have.
pub const MIN_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Uniform,
    /// Chebyshev–Gauss–Lobatto points, clustered towards both ends.
    Chebyshev,
    /// Loaded from data; strictly increasing but otherwise arbitrary.
    Irregular,
}

/// Strictly increasing radial nodes on `[r_min, r_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    spacing: Spacing,
}

impl RadialGrid {
    pub fn uniform(r_min: f64, r_max: f64, nodes: usize) -> Result<Self> {
        check_bounds(r_min, r_max, nodes)?;
        let h = (r_max - r_min) / (nodes - 1) as f64;
        let mut r: Vec<f64> = (0..nodes).map(|i| r_min + i as f64 * h).collect();
        r[nodes - 1] = r_max;
        Ok(Self { nodes: r, spacing: Spacing::Uniform })
    }

    pub fn chebyshev(r_min: f64, r_max: f64, nodes: usize) -> Result<Self> {
        check_bounds(r_min, r_max, nodes)?;
        let mid = 0.5 * (r_min + r_max);
        let half = 0.5 * (r_max - r_min);
        let last = (nodes - 1) as f64;
        let mut r: Vec<f64> = (0..nodes)
            .map(|i| mid - half * (std::f64::consts::PI * i as f64 / last).cos())
            .collect();
        r[0] = r_min;
        r[nodes - 1] = r_max;
        Ok(Self { nodes: r, spacing: Spacing::Chebyshev })
    }

    /// Adopts externally supplied nodes. Spacing is detected as uniform when
    /// consecutive gaps agree to 1e-9 relative.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_NODES {
            return Err(SolitonError::input(format!(
                "grid needs at least {MIN_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        if let Some(i) = nodes.iter().position(|r| !r.is_finite()) {
            return Err(SolitonError::NonFinite { index: i, r: nodes[i] });
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SolitonError::input("grid nodes must be strictly increasing"));
        }
        let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
        let uniform = nodes.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
        let spacing = if uniform { Spacing::Uniform } else { Spacing::Irregular };
        Ok(Self { nodes, spacing })
    }

    /// Same bounds and spacing policy with a different node count.
    pub fn resized(&self, nodes: usize) -> Result<Self> {
        match self.spacing {
            Spacing::Chebyshev => Self::chebyshev(self.r_min(), self.r_max(), nodes),
            _ => Self::uniform(self.r_min(), self.r_max(), nodes),
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn span(&self) -> f64 {
        self.r_max() - self.r_min()
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    /// Largest gap between consecutive nodes.
    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.r_min() && r <= self.r_max()
    }

    /// Index `i` with `nodes[i] <= r < nodes[i + 1]`, clamped to a valid cell.
    pub fn cell_of(&self, r: f64) -> usize {
        let idx = self.nodes.partition_point(|&x| x <= r);
        idx.saturating_sub(1).min(self.nodes.len() - 2)
    }
}

fn check_bounds(r_min: f64, r_max: f64, nodes: usize) -> Result<()> {
    if !(r_min.is_finite() && r_max.is_finite()) {
        return Err(SolitonError::input("grid bounds must be finite"));
    }
    if r_min >= r_max {
        return Err(SolitonError::input(format!("r_min = {r_min} must be below r_max = {r_max}")));
    }
    if nodes < MIN_NODES {
        return Err(SolitonError::input(format!("grid needs at least {MIN_NODES} nodes, got {nodes}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_hits_both_ends() {
        let g = RadialGrid::uniform(-5.0, 5.0, 256).unwrap();
        assert_eq!(g.r_min(), -5.0);
        assert_eq!(g.r_max(), 5.0);
        assert_eq!(g.spacing(), Spacing::Uniform);
    }

    #[test]
    fn chebyshev_is_increasing_and_clustered() {
        let g = RadialGrid::chebyshev(0.0, 1.0, 33).unwrap();
        assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));
        let first = g.nodes()[1] - g.nodes()[0];
        let middle = g.nodes()[17] - g.nodes()[16];
        assert!(first < 0.1 * middle);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(RadialGrid::uniform(1.0, 1.0, 32).is_err());
        assert!(RadialGrid::uniform(0.0, 1.0, 8).is_err());
        assert!(RadialGrid::from_nodes(vec![0.0; 20]).is_err());
    }

    #[test]
    fn from_nodes_detects_uniform() {
        let g = RadialGrid::uniform(0.0, 2.0, 17).unwrap();
        let again = RadialGrid::from_nodes(g.nodes().to_vec()).unwrap();
        assert_eq!(again.spacing(), Spacing::Uniform);
    }

    #[test]
    fn cell_lookup_is_clamped() {
        let g = RadialGrid::uniform(0.0, 15.0, 16).unwrap();
        assert_eq!(g.cell_of(-1.0), 0);
        assert_eq!(g.cell_of(3.5), 3);
        assert_eq!(g.cell_of(15.0), 14);
    }
}
