//! Converting a Cartesian depth to polar form and back to `U`.
//!
//! Run with `cargo run --example parametrizations`.

use planar_perspective::param::{
    angle_to_image_line, convert, velocity, CartesianKind, CartesianParametrization,
};
use planar_perspective::{parse, DepthFunction, Interval, ModulusModel};

fn main() -> planar_perspective::Result<()> {
    // The line y = 2 seen on the image line: constant distance to the x-axis.
    let bar = DepthFunction::closed(parse("2")?, Interval::new(-1.0, 1.0)?)?;
    let rho = convert(&CartesianParametrization { kind: CartesianKind::BarRho, depth: bar })?;
    let u = ModulusModel::from_depth(&rho)?;

    for theta in rho.domain().grid(5) {
        let v = velocity(&rho, theta)?;
        println!(
            "theta {theta:.4}  t {:+.4}  rho {:.6}  |v|^2 {:.6}  U {:.6}",
            angle_to_image_line(theta),
            rho.eval(theta)?,
            v.speed_sq,
            u.eval(theta)?
        );
    }
    Ok(())
}
