//! Force closure and epsilon quality of fingertip contacts on a sphere.

use vtgrasp::grasp_eval::{force_closure, Contact, ContactState, CONE_EDGES};
use vtgrasp::Vec3;

fn on_sphere(center: Vec3, r: f64, dirs: &[Vec3]) -> Vec<Contact> {
    dirs.iter()
        .enumerate()
        .map(|(finger, d)| {
            let d = d.normalize();
            Contact { point: center + d * r, normal: -d, finger }
        })
        .collect()
}

fn main() {
    let c = Vec3::new(0.5, 0.0, 0.25);
    let grasps = [
        ("antipodal pair", vec![Vec3::x(), -Vec3::x()]),
        ("same side", vec![Vec3::x(), Vec3::new(1.0, 0.3, 0.0)]),
        (
            "tetrahedral",
            vec![Vec3::new(1.0, 1.0, 1.0), Vec3::new(1.0, -1.0, -1.0), Vec3::new(-1.0, 1.0, -1.0), Vec3::new(-1.0, -1.0, 1.0)],
        ),
    ];
    for (name, dirs) in grasps {
        for mu in [0.3, 0.5, 0.8] {
            let q = force_closure(&ContactState::new(on_sphere(c, 0.05, &dirs), mu, c), CONE_EDGES);
            println!("{name:<15} mu {mu}: closure {:<5} epsilon {:.4}", q.is_closure, q.epsilon);
        }
    }
}
