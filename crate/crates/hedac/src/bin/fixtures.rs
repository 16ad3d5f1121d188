//! Regenerates the mesh fixtures shipped under `scenarios/`.
//!
//! The generator is deterministic, so the committed files are reproducible:
//!
//! ```text
//! cargo run --bin hedac-fixtures [-- <output-dir>]
//! ```

use std::path::PathBuf;
use std::process::ExitCode;

use hedac::geom::Point2;
use hedac::gridmesh::{DiagonalStyle, GridSpec};
use hedac::mesh::write_mesh_file;

/// Survey arena with three obstacle groups: a spiral maze on the left, small
/// blocks in the middle and a horseshoe on the right. 52 x 40 cells of
/// h = 0.18 m with 77 obstacle cells leave an open area of 64.897 m^2.
fn case1() -> GridSpec {
    let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 0.18, 52, 40);
    // Spiral maze: one connected wall winding inward, corridors three cells
    // (0.54 m) wide, entrance at the bottom.
    spec.add_obstacle(vec![
        (5, 6, 12, 26),   // outer left wall
        (6, 14, 25, 26),  // outer top wall
        (13, 14, 12, 25), // outer right wall
        (9, 13, 15, 16),  // inner bottom wall
        (9, 10, 16, 22),  // inner finger
    ]);
    // Horseshoe opening to the left.
    spec.add_obstacle(vec![
        (40, 46, 24, 25), // top
        (40, 46, 15, 16), // bottom
        (45, 46, 16, 24), // back
    ]);
    // Small blocks scattered over the middle.
    spec.add_obstacle(vec![(22, 24, 18, 20)]);
    spec.add_obstacle(vec![(27, 29, 24, 25)]);
    spec.add_obstacle(vec![(27, 29, 13, 14)]);
    spec.add_obstacle(vec![(31, 33, 18, 19)]);
    spec.add_obstacle(vec![(21, 23, 29, 30)]);
    spec
}

/// Empty 2 m x 2 m box on an exactly mirror-symmetric grid (h = 2^-3).
fn square2() -> GridSpec {
    GridSpec::with_diagonals(Point2::new(0.0, 0.0), 0.125, 16, 16, DiagonalStyle::MirrorX)
}

/// 2 m x 2 m box split by a wall with a gap of one cell (0.125 m), narrower
/// than twice the 0.1 m clearance, so agents can never pass through it.
fn gap2() -> GridSpec {
    let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 0.125, 16, 16);
    spec.add_obstacle(vec![(1, 8, 8, 9)]);
    spec.add_obstacle(vec![(9, 15, 8, 9)]);
    spec
}

/// 2 m x 2 m box with a dead-end slot opening upward. The slot interior is
/// five cells (0.625 m) wide, above the 2R + 2delta = 0.4 m needed to enter
/// and turn around.
fn slot2() -> GridSpec {
    let mut spec = GridSpec::rectangle(Point2::new(0.0, 0.0), 0.125, 16, 16);
    spec.add_obstacle(vec![
        (5, 6, 4, 11),  // left slot wall
        (11, 12, 4, 11), // right slot wall
        (6, 11, 4, 5),  // slot bottom
    ]);
    spec
}

fn main() -> ExitCode {
    let out_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("scenarios"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        return ExitCode::from(3);
    }

    let fixtures: [(&str, GridSpec); 4] = [
        ("case1.mesh", case1()),
        ("square2.mesh", square2()),
        ("gap2.mesh", gap2()),
        ("slot2.mesh", slot2()),
    ];
    for (name, spec) in fixtures {
        let mesh = match spec.build() {
            Ok(m) => m,
            Err(e) => {
                eprintln!("error building {name}: {e}");
                return ExitCode::from(3);
            }
        };
        let geom = mesh.extract_geometry().expect("validated at build");
        let path = out_dir.join(name);
        if let Err(e) = write_mesh_file(&mesh, &path) {
            eprintln!("error writing {}: {e}", path.display());
            return ExitCode::from(3);
        }
        println!(
            "{name}: {} nodes, {} elements, {} obstacles, area {:.4} m^2",
            mesh.node_count(),
            mesh.element_count(),
            geom.obstacle_count(),
            geom.area()
        );
    }
    ExitCode::SUCCESS
}
