//! Object SDFs, a perturbed estimate, and projection onto the surface.

use std::sync::Arc;

use vtgrasp::sdf::{surface_project, EstimatedSdf, SdfScene, Shape, SignedDistance, TriMesh};
use vtgrasp::{Pose, Vec3};

fn main() -> vtgrasp::Result<()> {
    let center = Vec3::new(0.5, 0.0, 0.25);
    let sphere = SdfScene::sphere(0.05, center);
    let boxed = SdfScene::cuboid(Vec3::new(0.03, 0.03, 0.05), Pose::translation(0.5, 0.0, 0.25));
    let mesh = SdfScene::new(Shape::Mesh(Arc::new(TriMesh::icosphere(0.05, 3))), Pose::translation(0.5, 0.0, 0.25), 1.0)?;

    let p = center + Vec3::new(0.06, 0.02, 0.04);
    for (name, scene) in [("sphere", &sphere), ("box", &boxed), ("icosphere mesh", &mesh)] {
        let s = scene.sdf_query(&p);
        println!("{name:<15} sdf {:+.5} m, gradient {:.3?}", s.distance, s.gradient.as_slice());
    }

    // The planner's belief: 8 mm too large and a little lumpy.
    let est = EstimatedSdf::new(sphere.clone(), -0.008, 0.002, 3, 0.03)?;
    println!("estimate at p: {:+.5} m (true {:+.5} m)", est.distance(&p), sphere.distance(&p));

    match surface_project(&est, &p, 50) {
        Ok(on) => println!("projected onto the estimate at {:.4?}, true sdf there {:+.5}", on.as_slice(), sphere.distance(&on)),
        Err(e) => println!("projection stalled at residual {:.2e}", e.residual),
    }
    Ok(())
}
