//! Named domains used by the scenario library and the tests.

use super::domain::{rotation, DomainExpr};

fn parse(text: &str) -> DomainExpr {
    DomainExpr::parse(text).expect("catalog domain parses")
}

/// `{0 < y < e^{-|x|}}`.
pub fn exp_cusp() -> DomainExpr {
    parse("(inter (halfplane 0 1 0) (below (expcusp 1 0)))")
}

/// `{0 < y < 1}`.
pub fn strip() -> DomainExpr {
    parse("(inter (halfplane 0 1 0) (halfplane 0 -1 1))")
}

/// `{y > x²}`.
pub fn parabola() -> DomainExpr {
    parse("(above (parabola 1 0))")
}

/// `{x > 0, |y| < e^{-x}}`, a thin neighbourhood of the positive x-axis.
pub fn spike() -> DomainExpr {
    parse("(inter (halfplane 1 0 0) (below (expcusp 1 0)) (above (expcusp -1 0)))")
}

/// Three thin spikes leaving the origin at 90°, 210° and 330°, joined by a disk.
pub fn three_spike() -> DomainExpr {
    let mut parts: Vec<DomainExpr> = [90.0f64, 210.0, 330.0]
        .iter()
        .map(|deg| DomainExpr::affine_image(rotation(deg.to_radians()), [0.0, 0.0], spike()).expect("rotation"))
        .collect();
    parts.push(parse("(disk 0 0 0.5)"));
    DomainExpr::union(parts).expect("nonempty")
}

/// `{0 < xy < 1}` joined by a small disk at the origin.
pub fn w_standin() -> DomainExpr {
    let quadrant = parse("(inter (halfplane 1 0 0) (halfplane 0 1 0) (below (hyperbola 1)))");
    let opposite = DomainExpr::affine_image([[-1.0, 0.0], [0.0, -1.0]], [0.0, 0.0], quadrant.clone()).expect("reflection");
    DomainExpr::union(vec![quadrant, opposite, parse("(disk 0 0 0.1)")]).expect("nonempty")
}

/// Looks up a catalog domain by name.
pub fn by_name(name: &str) -> Option<DomainExpr> {
    Some(match name {
        "exp_cusp" => exp_cusp(),
        "strip" => strip(),
        "parabola" => parabola(),
        "three_spike" => three_spike(),
        "w_standin" => w_standin(),
        _ => return None,
    })
}

pub const NAMES: [&str; 5] = ["exp_cusp", "strip", "parabola", "three_spike", "w_standin"];
