//! Built-in expressions, curve kinds and example domains usable in configs.

use serde::Serialize;

use crate::tube::catalog;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Entry {
    pub name: &'static str,
    pub text: String,
    pub description: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Library {
    pub expressions: Vec<Entry>,
    pub holomorphic: Vec<Entry>,
    pub curves: Vec<Entry>,
    pub domains: Vec<Entry>,
}

const EXPRESSIONS: [(&str, &str, &str); 6] = [
    ("re_z2", "(re (poly (0 0) (0 0) (1 0)))", "Re z^2"),
    ("re_z3", "(re (poly (0 0) (0 0) (0 0) (1 0)))", "Re z^3"),
    ("re_exp", "(re (exp z))", "Re e^z"),
    ("re_z2_exp", "(re (+ (poly (0 0) (0 0) (1 0)) (exp z)))", "Re (z^2 + e^z)"),
    ("x1", "(coord 0)", "first coordinate"),
    ("saddle3", "(hpoly (1 2 0 0) (-1 0 2 0))", "x^2 - y^2 on R^3"),
];

const HOLOMORPHIC: [(&str, &str, &str); 4] = [
    ("z", "z", "identity"),
    ("z2", "(poly (0 0) (0 0) (1 0))", "z^2"),
    ("exp", "(exp z)", "e^z"),
    ("exp_minus", "(exp (poly (0 0) (-1 0)))", "e^-z"),
];

const CURVES: [(&str, &str, &str); 5] = [
    ("const", "(const t)", "y = t"),
    ("linear", "(linear m c)", "y = m x + c"),
    ("expcusp", "(expcusp s t)", "y = s exp(-|x|) + t"),
    ("hyperbola", "(hyperbola c)", "y = c / x for x > 0"),
    ("parabola", "(parabola a b)", "y = a x^2 + b"),
];

fn describe(name: &str) -> &'static str {
    match name {
        "exp_cusp" => "0 < y < exp(-|x|)",
        "strip" => "0 < y < 1",
        "parabola" => "y > x^2",
        "three_spike" => "three rotated exponential spikes around a disk",
        "w_standin" => "open stand-in for 0 < xy < 1 near the axes",
        _ => "",
    }
}

fn entries(table: &[(&'static str, &'static str, &'static str)]) -> Vec<Entry> {
    table
        .iter()
        .map(|(name, text, description)| Entry {
            name,
            text: text.to_string(),
            description,
        })
        .collect()
}

pub fn library() -> Library {
    Library {
        expressions: entries(&EXPRESSIONS),
        holomorphic: entries(&HOLOMORPHIC),
        curves: entries(&CURVES),
        domains: catalog::NAMES
            .iter()
            .map(|name| Entry {
                name,
                text: catalog::by_name(name).expect("catalog name").to_string(),
                description: describe(name),
            })
            .collect(),
    }
}

pub fn expression(name: &str) -> Option<&'static str> {
    EXPRESSIONS.iter().find(|e| e.0 == name).map(|e| e.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{HarmonicExpr, HolExpr};
    use crate::tube::DomainExpr;

    #[test]
    fn entries_parse() {
        let lib = library();
        for e in &lib.expressions {
            let dim = if e.name == "saddle3" { 3 } else { 2 };
            HarmonicExpr::parse(&e.text, dim).unwrap_or_else(|err| panic!("{}: {err}", e.name));
        }
        for e in &lib.holomorphic {
            HolExpr::parse(&e.text).unwrap();
        }
    }

    #[test]
    fn domains_round_trip() {
        let lib = library();
        assert!(lib.domains.iter().any(|d| d.name == "exp_cusp"));
        assert!(lib.domains.iter().any(|d| d.name == "three_spike"));
        for d in &lib.domains {
            assert_eq!(DomainExpr::parse(&d.text).unwrap(), catalog::by_name(d.name).unwrap());
        }
    }
}
