use std::fmt::Write;

use super::forward::Trajectory;
use crate::geometry::{Aabb, Vec2};

/// Render every node path of a trajectory as an SVG 1.1 document, one
/// polyline per node. The end-effector path is drawn last and highlighted.
/// Coordinates are written unscaled, with the y axis flipped by a group
/// transform so that the picture matches curve space.
pub fn trajectory_svg(tr: &Trajectory, target: Option<&[Vec2]>) -> String {
    let all = tr.positions.iter().flatten().chain(target.unwrap_or(&[]));
    let bb = Aabb::of_points(all).unwrap_or(Aabb::centered(Vec2::ZERO, 1.0));
    let pad = 0.05 * bb.diagonal().max(1e-9);
    let (x0, y0) = (bb.min.x - pad, bb.min.y - pad);
    let (w, h) = (
        bb.max.x - bb.min.x + 2.0 * pad,
        bb.max.y - bb.min.y + 2.0 * pad,
    );
    let stroke = 0.004 * w.max(h);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" viewBox="{} {} {} {}">"#,
        fmt(x0),
        fmt(-(y0 + h)),
        fmt(w),
        fmt(h)
    );
    let _ = writeln!(
        s,
        r#"<g transform="scale(1,-1)" fill="none" stroke-width="{}">"#,
        fmt(stroke)
    );
    if let Some(t) = target {
        let _ = writeln!(
            s,
            r#"<polygon class="target" stroke="goldenrod" points="{}"/>"#,
            points(t)
        );
    }
    let n = tr.positions.len();
    for (i, path) in tr.positions.iter().enumerate().take(n.saturating_sub(1)) {
        let still = path.windows(2).all(|w| w[0] == w[1]);
        if still {
            let p = path.first().copied().unwrap_or(Vec2::ZERO);
            let _ = writeln!(
                s,
                r#"<circle class="fixed" data-node="{}" cx="{}" cy="{}" r="{}" fill="firebrick"/>"#,
                i + 1,
                fmt(p.x),
                fmt(p.y),
                fmt(2.0 * stroke)
            );
        } else {
            let _ = writeln!(
                s,
                r#"<polygon class="node" data-node="{}" stroke="gray" points="{}"/>"#,
                i + 1,
                points(path)
            );
        }
    }
    if n > 0 {
        let _ = writeln!(
            s,
            r#"<polygon class="end-effector" data-node="{}" stroke="royalblue" stroke-width="{}" points="{}"/>"#,
            n,
            fmt(2.0 * stroke),
            points(tr.end_effector())
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

fn points(ps: &[Vec2]) -> String {
    ps.iter()
        .map(|p| format!("{},{}", fmt(p.x), fmt(p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Shortest decimal that parses back to the same `f64`.
fn fmt(v: f64) -> String {
    format!("{v}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::forward::trace;
    use crate::kinematics::linkage::{Linkage, MotorSpec, Spin};

    #[test]
    fn end_effector_points_round_trip() {
        let l = Linkage::motor_only(
            MotorSpec::rotary(Vec2::new(0.5, 0.0), 1.5, Spin::Clockwise),
            5.0,
        )
        .unwrap();
        let tr = trace(&l, 5).unwrap();
        let svg = trajectory_svg(&tr, None);
        let line = svg.lines().find(|l| l.contains("end-effector")).unwrap();
        let pts = line
            .split("points=\"")
            .nth(1)
            .unwrap()
            .trim_end_matches("\"/>");
        let parsed: Vec<Vec2> = pts
            .split(' ')
            .map(|xy| {
                let mut it = xy.split(',').map(|v| v.parse::<f64>().unwrap());
                Vec2::new(it.next().unwrap(), it.next().unwrap())
            })
            .collect();
        assert_eq!(parsed, tr.end_effector());
        assert!(svg.trim_end().ends_with("</svg>"));
    }
}
