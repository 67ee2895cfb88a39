//! Runs the four reference configurations on the default mesh and prints the
//! final objective, iteration count, quality and wall time.

use std::time::Instant;

use shapegrad_core::mesh::{generate_circle_in_box, CircleInBox};
use shapegrad_core::metrics::MetricSpec;
use shapegrad_core::optimizer::{steepest_descent, OptConfig, UpdateRule};

fn main() {
    let res: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(13);
    let mesh = generate_circle_in_box(&CircleInBox { resolution: res, ..Default::default() }).unwrap();
    let geodesic = std::env::args().any(|a| a == "--geodesic");
    let metrics = [
        MetricSpec::steklov_poincare(),
        MetricSpec::sobolev(2, 0.09),
        MetricSpec::sobolev(3, 0.04),
        MetricSpec::sobolev(4, 0.02),
    ];
    for metric in metrics {
        let config = OptConfig {
            metric,
            update: if geodesic { UpdateRule::Geodesic } else { UpdateRule::Retraction },
            ..Default::default()
        };
        let start = Instant::now();
        let result = steepest_descent(&mesh, &config).unwrap();
        let last = result.last();
        let first_below = result.history.iter().position(|r| r.objective <= -0.092);
        let min_q = result.history.iter().map(|r| r.msh_quality).fold(f64::INFINITY, f64::min);
        let worst_rise = result.history.windows(2).map(|w| w[1].objective - w[0].objective).fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{:<6} k={:<4} J={:.6} |V|={:.3e} q={:.3} minq={:.3} rise={:.2e} below092={:?} {} {:.1}s",
            metric.label(),
            last.iter,
            last.objective,
            last.norm_felas,
            last.msh_quality,
            min_q,
            worst_rise,
            first_below,
            result.termination.as_str(),
            start.elapsed().as_secs_f64()
        );
    }
}
