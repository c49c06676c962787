use linkforge::gadgets::straight_line;
use linkforge::geom::Side;
use linkforge::solver::{solve, InitPolicy, SolveOptions, SolveProblem};
use num_complex::Complex64;

fn main() {
    let sl = straight_line(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
    let arc = sl.drive_arc;
    let mid = (arc.theta_lo + arc.theta_hi) / 2.0;
    let opts = SolveOptions::default();
    let mut current = sl.place_at(Complex64::new(0.5, 0.0), Side::Plus).unwrap();
    let target_end = arc.theta_lo + 1e-5;
    for k in 1..=128 {
        let theta = mid + (target_end - mid) * k as f64 / 128.0;
        let res = solve(
            &SolveProblem::new(&sl.linkage, InitPolicy::WarmStart(current.clone()))
                .fix(sl.drive.clone(), arc.at(theta)),
            &opts,
        );
        if !res.deep || k >= 126 {
            println!(
                "step {k}: {:?} deep {} norm {:.2e} iters {} |D|={:.6}",
                res.status,
                res.deep,
                res.residual_norm,
                res.iterations,
                res.final_state.position(&sl.drive).norm()
            );
        }
        if !res.deep {
            for e in sl.linkage.edges() {
                let d = (res.final_state.position(&e.u) - res.final_state.position(&e.v)).norm();
                let rel = ((d * d - e.len * e.len) / (e.len * e.len)).abs();
                if rel > 1e-11 {
                    println!("  {}-{} (len {:.4}): rel {:.2e}", e.u, e.v, e.len, rel);
                }
            }
            break;
        }
        current = res.final_state.clone();
    }
}
// appended second pass below main's closing? no - modify instead
// appended second pass below main's closing? no - modify instead
