mod common;

use common::two_species;
use meanfield_core::{
    hamiltonian_density, magnetization, validate_model, Configuration, Error, MagnetizationVector, ModelSpec,
};

#[test]
fn canonical_curie_weiss_is_valid() {
    let spec = ModelSpec::from_json(r#"{"n":1,"alpha":[1],"J":[[1]],"h":[0]}"#).unwrap();
    let model = validate_model(spec).unwrap();
    assert!(model.is_binary());
    assert_eq!(model.coupling(0, 0), 1.0);
}

#[test]
fn explicit_measure_key_is_accepted() {
    let spec = ModelSpec::from_json(
        r#"{"n":1,"alpha":[1],"J":[[1]],"h":[0],"measure":{"atoms":[[-1,0.25],[0,0.5],[1,0.25]]}}"#,
    )
    .unwrap();
    let model = spec.validate().unwrap();
    assert!(!model.is_binary());
}

#[test]
fn invalid_models_are_rejected() {
    let mut spec = ModelSpec {
        n: 2,
        alpha: vec![0.5, 0.6],
        j: vec![vec![1.0, 0.2], vec![0.2, 1.0]],
        h: vec![0.0, 0.0],
        measure: None,
    };
    assert!(matches!(spec.clone().validate(), Err(Error::BadAlpha(_))));
    spec.alpha = vec![0.5, 0.5];
    spec.j = vec![vec![1.0, 0.2], vec![0.3, 1.0]];
    assert!(matches!(spec.clone().validate(), Err(Error::NonSymmetricJ { .. })));
    spec.j = vec![vec![0.0, 0.2], vec![0.2, 1.0]];
    assert!(matches!(spec.clone().validate(), Err(Error::NonPositiveDiagonal { index: 0, .. })));
    let degenerate = r#"{"n":1,"alpha":[1],"J":[[1]],"h":[0],"measure":{"atoms":[[1,1.0]]}}"#;
    assert!(matches!(ModelSpec::from_json(degenerate).unwrap().validate(), Err(Error::DegenerateMeasure)));
}

#[test]
fn hamiltonian_density_examples() {
    let cw = ModelSpec::curie_weiss(1.0, 0.0).validate().unwrap();
    assert_eq!(hamiltonian_density(&cw, &MagnetizationVector::new(vec![0.0])).unwrap(), 0.0);
    let cw2 = ModelSpec::curie_weiss(2.0, 1.0).validate().unwrap();
    assert_eq!(hamiltonian_density(&cw2, &MagnetizationVector::new(vec![1.0])).unwrap(), 2.0);
    let anti = two_species([0.5, 0.5], [[1.0, -1.0], [-1.0, 1.0]], [0.0, 0.0]);
    assert_eq!(hamiltonian_density(&anti, &MagnetizationVector::new(vec![1.0, 1.0])).unwrap(), 0.0);
    assert!(matches!(
        hamiltonian_density(&anti, &MagnetizationVector::new(vec![1.0])),
        Err(Error::DimensionMismatch { .. })
    ));
}

#[test]
fn magnetization_examples() {
    let cw = ModelSpec::curie_weiss(1.0, 0.0).validate().unwrap();
    let up = Configuration::new(&cw, vec![1.0; 5], vec![5]).unwrap();
    assert_eq!(magnetization(&up).as_slice(), &[1.0]);
    let pair = Configuration::new(&cw, vec![1.0, -1.0], vec![2]).unwrap();
    assert_eq!(magnetization(&pair).as_slice(), &[0.0]);
    let four = Configuration::new(&cw, vec![1.0, 1.0, 1.0, -1.0], vec![4]).unwrap();
    assert_eq!(magnetization(&four).as_slice(), &[0.5]);
    let ref2 = two_species([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]);
    let all_up = Configuration::new(&ref2, vec![1.0; 6], vec![3, 3]).unwrap();
    assert_eq!(magnetization(&all_up).as_slice(), &[1.0, 1.0]);
}

#[test]
fn configuration_invariants() {
    let cw = ModelSpec::curie_weiss(1.0, 0.0).validate().unwrap();
    assert!(matches!(Configuration::new(&cw, vec![1.0, 0.5], vec![2]), Err(Error::InvalidConfiguration(_))));
    let ref2 = two_species([0.5, 0.5], [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]);
    assert!(Configuration::new(&ref2, vec![1.0; 5], vec![2, 3]).is_ok());
    assert!(Configuration::new(&ref2, vec![1.0; 8], vec![1, 7]).is_err());
}

#[test]
fn scalar_aliases_evaluate_alike() {
    let model = common::reference();
    let x = [0.3, -0.2];
    let double = model.params().g(&x).unwrap();
    let single: meanfield_core::ParamsF32 = model.params_as::<f32>();
    let g32 = single.g(&[0.3f32, -0.2]).unwrap();
    assert!((double - g32 as f64).abs() < 1e-6);
}
