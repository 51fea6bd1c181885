//! Time-optimal finger trajectories, equalized so all fingers arrive together.

use vtgrasp::trajectory::{equalize_durations, minimal_time, plan_finger_trajectory, TrajectoryLimits};

fn main() -> vtgrasp::Result<()> {
    let limits = TrajectoryLimits { v_max: 1.0, a_max: 4.0 };
    let goals = [[0.0, 0.9, 0.6, 0.4], [0.1, 0.3, 0.2, 0.2], [0.0, 1.4, 0.1, 0.0], [0.3, 0.0, 0.5, 0.5]];
    let plans = goals
        .iter()
        .enumerate()
        .map(|(f, g)| plan_finger_trajectory(f, [0.0; 4], *g, &limits))
        .collect::<vtgrasp::Result<Vec<_>>>()?;
    for p in &plans {
        println!("finger {}: {:.3} s, {} ticks", p.finger, p.duration, p.ticks());
    }
    println!("a lone 1.4 rad move needs {:.3} s", minimal_time(1.4, &limits));
    for p in equalize_durations(&plans) {
        let mid = p.samples[p.ticks() / 2];
        println!("equalized finger {}: {} ticks, halfway at {:.3?}", p.finger, p.ticks(), mid);
    }
    Ok(())
}
