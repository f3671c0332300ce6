//! Plot-ready field dumps.
//!
//! One line per node: `i,j,r,theta,x1,x2,value`. For functions of the whole
//! disk the hole sample lattice follows the annulus nodes, marked `i = -1`
//! with `j = k * n_theta + l` (radial index `k`, angular index `l`).
//! Numbers are printed in shortest round-trip form, so reruns are
//! bit-identical.

use annulus_core::geometry::{hole_sample_points, ExtendedField, Field};
use std::io::Write;

pub fn write_field(out: &mut impl Write, field: &Field) -> std::io::Result<()> {
    writeln!(out, "i,j,r,theta,x1,x2,value")?;
    let grid = field.grid();
    for i in 0..=grid.n_r() {
        for j in 0..grid.n_theta() {
            let p = grid.node_position(i, j);
            writeln!(
                out,
                "{},{},{:?},{:?},{:?},{:?},{:?}",
                i,
                j,
                grid.radius(i),
                grid.angle(j),
                p.x1,
                p.x2,
                field.value(i, j)
            )?;
        }
    }
    Ok(())
}

pub fn write_extended(out: &mut impl Write, u: &ExtendedField) -> std::io::Result<()> {
    write_field(out, u.annulus())?;
    let grid = u.grid();
    for (k, p) in hole_sample_points(grid).enumerate() {
        let value = u
            .hole()
            .eval(p)
            .map_err(|e| std::io::Error::other(e.to_string()))?;
        writeln!(
            out,
            "-1,{},{:?},{:?},{:?},{:?},{:?}",
            k,
            p.norm(),
            p.angle(),
            p.x1,
            p.x2,
            value
        )?;
    }
    Ok(())
}
