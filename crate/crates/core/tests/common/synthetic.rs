//! Synthetic gridded domains with known dependence between boxes.

use tailcop::spatial::{BoxLattice, GridMeta, GriddedData, LandMask};
use tailcop::UnitPair;

/// A lattice of `nx × ny` boxes over 1-degree cells, one sea cell per box.
/// `series[b]` gives the land value of box `b` (row-major, x fastest) on
/// each day; cells within a box carry small fixed offsets so the land mean
/// differs from any single cell while keeping the ranks of the box mean.
pub fn domain(nx: usize, ny: usize, series: &[Vec<f64>]) -> (GriddedData, LandMask, BoxLattice) {
    let n_time = series[0].len();
    let meta = GridMeta {
        n_lon: 6 * nx,
        n_lat: 4 * ny,
        n_time,
        lon0: -164.6,
        lat0: 45.6,
        dlon: 1.0,
        dlat: 1.0,
    };
    let lattice = BoxLattice::anchored(-165, 45, 0.1, nx, ny);
    let mut land = vec![true; meta.cells()];
    let mut values = vec![0.0; meta.cells() * n_time];
    for j in 0..meta.n_lat {
        for i in 0..meta.n_lon {
            let b = (j / 4) * nx + i / 6;
            let (ci, cj) = (i % 6, j % 4);
            let cell = j * meta.n_lon + i;
            let sea = ci == 0 && cj == 0;
            land[cell] = !sea;
            let offset = 0.01 * (ci as f64 - 2.5) + 0.003 * (cj as f64 - 1.5);
            for t in 0..n_time {
                values[t * meta.cells() + cell] = if sea { 1e3 } else { series[b][t] + offset };
            }
        }
    }
    (
        GriddedData::new(meta, values, None).unwrap(),
        LandMask::new(meta, land).unwrap(),
        lattice,
    )
}

pub fn split(points: &[UnitPair]) -> (Vec<f64>, Vec<f64>) {
    points.iter().map(|p| (p.u1(), p.u2())).unzip()
}
