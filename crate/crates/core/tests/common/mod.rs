#![allow(dead_code)]

use proptest::prelude::*;

use kinetic_ga::{Point, WeightedEmpiricalMeasure};

pub fn measure(dim: usize, max_atoms: usize) -> impl Strategy<Value = WeightedEmpiricalMeasure> {
    prop::collection::vec(
        (0.05f64..1.0, prop::collection::vec(-4.0f64..4.0, dim)),
        1..=max_atoms,
    )
    .prop_map(|atoms| {
        let (w, x): (Vec<f64>, Vec<Vec<f64>>) = atoms.into_iter().unzip();
        WeightedEmpiricalMeasure::from_unnormalized(x.into_iter().map(|c| Point::new(c).unwrap()).collect(), w)
            .unwrap()
    })
}

pub fn point(dim: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-6.0f64..6.0, dim).prop_map(|c| Point::new(c).unwrap())
}
