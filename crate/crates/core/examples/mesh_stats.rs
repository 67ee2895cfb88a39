//! Prints vertex/triangle counts and minimum quality of the circle-in-box
//! generator across resolutions.

use shapegrad_core::mesh::{generate_circle_in_box, mesh_quality, validate_mesh, CircleInBox};

fn main() {
    println!("{:>4} {:>8} {:>9} {:>8} {:>6}", "res", "vertices", "triangles", "quality", "valid");
    for resolution in 4..=20 {
        let mesh = generate_circle_in_box(&CircleInBox { resolution, ..Default::default() }).unwrap();
        let q = mesh_quality(&mesh);
        println!(
            "{:>4} {:>8} {:>9} {:>8.4} {:>6}",
            resolution,
            mesh.num_vertices(),
            mesh.num_triangles(),
            q.min_quality,
            validate_mesh(&mesh).is_empty()
        );
    }
}
